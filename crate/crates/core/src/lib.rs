//! Fitting generalized linear mixed models by maximizing an adaptive
//! Gauss–Hermite quadrature approximation of the marginal likelihood.
//!
//! The crate is `no_std` + `alloc` when built without the default `std`
//! feature; `parallel` (on by default) spreads per-group and per-replicate
//! work over a rayon pool.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod data;
pub mod error;
pub mod families;
pub mod fit;
pub mod inner;
pub mod kadvisor;
pub mod marglik;
pub mod math;
pub mod optim;
pub mod quadrature;
pub mod simulate;
pub mod theorylab;

mod par;

pub use nalgebra;

pub use data::{DatasetSummary, Group, GroupedDataset, Response};
pub use error::{Error, Result};
pub use families::{
    DerivOrder, ModelSpec, Parameters, PositiveTransform, RaneffFamily, RaneffParams,
    ResponseDispersion, ResponseFamily,
};
pub use fit::{fit, wald_ci, FitOptions, FitResult, WaldInterval};
pub use inner::{adapt, group_joint_loglik, AdaptOptions, Adaptation};
pub use kadvisor::{max_groups_for_k, rate_exponent, recommend_k, KRecommendation, PointCount};
pub use marglik::{
    aq_group_loglik, gq_group_loglik, total_loglik, LoglikBreakdown, MarginalLikelihood, Method,
};
pub use quadrature::{adapted_weight, hermite_rule, product_rule, QuadratureRule};
