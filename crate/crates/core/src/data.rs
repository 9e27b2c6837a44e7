//! Grouped observations: responses, fixed-effect rows x_ij and random-effect rows v_ij.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Response {
    Value(f64),
    /// Right-censored time to event; `event == false` means censored.
    Survival {
        time: f64,
        event: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub id: String,
    pub responses: Vec<Response>,
    /// m × d, row-major.
    pub x: Vec<f64>,
    /// m × p, row-major.
    pub v: Vec<f64>,
}

impl Group {
    /// A group whose random-effect design is a single intercept column.
    pub fn random_intercept(id: impl Into<String>, responses: Vec<Response>, x: Vec<f64>) -> Self {
        let m = responses.len();
        Group {
            id: id.into(),
            responses,
            x,
            v: alloc::vec![1.0; m],
        }
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn x_row(&self, j: usize, d: usize) -> &[f64] {
        &self.x[j * d..(j + 1) * d]
    }

    pub fn v_row(&self, j: usize, p: usize) -> &[f64] {
        &self.v[j * p..(j + 1) * p]
    }

    pub(crate) fn check_dims(&self, d: usize, p: usize) -> Result<()> {
        let m = self.len();
        if m == 0 {
            return Err(Error::InvalidDataset(alloc::format!(
                "group '{}' has no rows",
                self.id
            )));
        }
        if self.x.len() != m * d {
            return Err(Error::DimensionMismatch {
                context: "fixed-effect design rows",
                expected: m * d,
                found: self.x.len(),
            });
        }
        if self.v.len() != m * p {
            return Err(Error::DimensionMismatch {
                context: "random-effect design rows",
                expected: m * p,
                found: self.v.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupedDataset {
    groups: Vec<Group>,
    d: usize,
    p: usize,
    fixed_names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSummary {
    pub groups: usize,
    pub n: usize,
    pub m_min: usize,
    pub m_max: usize,
    pub sizes: Vec<usize>,
}

impl GroupedDataset {
    pub fn new(groups: Vec<Group>, d: usize, p: usize) -> Result<Self> {
        let names = (0..d).map(|j| alloc::format!("x{}", j + 1)).collect();
        Self::with_names(groups, names, p)
    }

    pub fn with_names(groups: Vec<Group>, fixed_names: Vec<String>, p: usize) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::InvalidDataset("dataset has no groups".into()));
        }
        if p == 0 {
            return Err(Error::InvalidDataset(
                "random-effect dimension must be at least 1".into(),
            ));
        }
        let d = fixed_names.len();
        for g in &groups {
            g.check_dims(d, p)?;
        }
        Ok(GroupedDataset {
            groups,
            d,
            p,
            fixed_names,
        })
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn fixed_names(&self) -> &[String] {
        &self.fixed_names
    }

    /// Number of groups M.
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn n(&self) -> usize {
        self.groups.iter().map(Group::len).sum()
    }

    pub fn m_min(&self) -> usize {
        self.groups.iter().map(Group::len).min().unwrap_or(0)
    }

    pub fn summary(&self) -> DatasetSummary {
        let sizes: Vec<usize> = self.groups.iter().map(Group::len).collect();
        DatasetSummary {
            groups: sizes.len(),
            n: sizes.iter().sum(),
            m_min: sizes.iter().copied().min().unwrap_or(0),
            m_max: sizes.iter().copied().max().unwrap_or(0),
            sizes,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn summary_counts() {
        let g1 = Group::random_intercept("a", vec![Response::Value(1.0); 3], vec![]);
        let g2 = Group::random_intercept("b", vec![Response::Value(0.0)], vec![]);
        let ds = GroupedDataset::new(vec![g1, g2], 0, 1).unwrap();
        let s = ds.summary();
        assert_eq!((s.groups, s.n, s.m_min, s.m_max), (2, 4, 1, 3));
        assert_eq!(s.sizes, vec![3, 1]);
    }

    #[test]
    fn single_row_dataset() {
        let g = Group::random_intercept("only", vec![Response::Value(1.0)], vec![]);
        let s = GroupedDataset::new(vec![g], 0, 1).unwrap().summary();
        assert_eq!((s.groups, s.m_min), (1, 1));
    }

    #[test]
    fn rejects_ragged_or_empty() {
        assert!(GroupedDataset::new(vec![], 0, 1).is_err());
        let empty = Group::random_intercept("e", vec![], vec![]);
        assert!(matches!(
            GroupedDataset::new(vec![empty], 0, 1),
            Err(Error::InvalidDataset(_))
        ));
        let bad = Group::random_intercept("b", vec![Response::Value(1.0)], vec![1.0, 2.0]);
        assert!(matches!(
            GroupedDataset::new(vec![bad], 1, 1),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
