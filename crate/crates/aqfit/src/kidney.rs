//! Recurrence times of infection at the catheter insertion point for 38
//! kidney patients, two times per patient.
//!
//! Columns: `id`, `time` (days), `status` (1 = infection, 0 = censored),
//! `age` (years), `sex` (0 = male, 1 = female) and disease-type indicators
//! `gn`, `an`, `pkd` (baseline: other).

use aqfit_core::{GroupedDataset, ModelSpec, RaneffFamily, ResponseFamily};

use crate::csvio::{read_csv_str, CsvSchema, DataError};

pub const CSV: &str = include_str!("../data/kidney.csv");

pub const COVARIATES: [&str; 5] = ["age", "sex", "gn", "an", "pkd"];

pub fn schema() -> CsvSchema {
    CsvSchema {
        group_col: "id".into(),
        response_cols: vec!["time".into(), "status".into()],
        fixed_cols: COVARIATES.iter().map(|s| s.to_string()).collect(),
        raneff_cols: vec!["1".into()],
    }
}

/// Weibull proportional hazards with a log-Gamma frailty per patient; the
/// Weibull baseline μ plays the role of the intercept.
pub fn spec() -> ModelSpec {
    ModelSpec::new(
        ResponseFamily::WeibullPh,
        RaneffFamily::LogGammaFrailty,
        COVARIATES.len(),
        1,
    )
    .expect("valid frailty specification")
}

pub fn dataset() -> Result<GroupedDataset, DataError> {
    read_csv_str(CSV, &schema())
}
