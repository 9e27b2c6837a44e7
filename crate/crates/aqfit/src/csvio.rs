//! Grouped datasets from and to CSV files with a header row.
//!
//! Column conventions:
//! - `group_col` holds the group id (any string); rows are grouped by it in
//!   order of first appearance.
//! - `response_cols` is one column (`y`) for scalar responses, or two
//!   (`time`, `status`) for survival responses with status 1 = event,
//!   0 = censored.
//! - `fixed_cols` and `raneff_cols` name numeric columns; `a:b` is the product
//!   of columns `a` and `b`, and `1` is a constant column.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use aqfit_core::{Group, GroupedDataset, Response};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("cannot open {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV file is empty (no header row)")]
    Empty,
    #[error("CSV has a header but no data rows")]
    NoRows,
    #[error("column '{column}' not found in header")]
    MissingColumn { column: String },
    #[error("line {line}, column '{column}': missing value")]
    MissingValue { line: u64, column: String },
    #[error("line {line}, column '{column}': '{value}' is not a number")]
    NonNumeric {
        line: u64,
        column: String,
        value: String,
    },
    #[error("line {line}, column '{column}': status must be 0 or 1, got '{value}'")]
    BadStatus {
        line: u64,
        column: String,
        value: String,
    },
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("schema needs {expected} response column(s) for this family, got {found}")]
    ResponseArity { expected: usize, found: usize },
    #[error(transparent)]
    Model(#[from] aqfit_core::Error),
}

/// Which CSV columns feed which part of the model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvSchema {
    pub group_col: String,
    pub response_cols: Vec<String>,
    pub fixed_cols: Vec<String>,
    pub raneff_cols: Vec<String>,
}

impl CsvSchema {
    pub fn is_survival(&self) -> bool {
        self.response_cols.len() == 2
    }
}

/// A model term: a product of header columns, or the constant 1.
#[derive(Debug, Clone)]
struct Term {
    name: String,
    factors: Vec<usize>,
}

fn resolve(term: &str, header: &HashMap<&str, usize>) -> Result<Term, DataError> {
    let term = term.trim();
    if term == "1" {
        return Ok(Term {
            name: "intercept".into(),
            factors: Vec::new(),
        });
    }
    let factors = term
        .split(':')
        .map(|f| {
            header
                .get(f.trim())
                .copied()
                .ok_or_else(|| DataError::MissingColumn {
                    column: f.trim().into(),
                })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Term {
        name: term.into(),
        factors,
    })
}

fn number(
    record: &csv::StringRecord,
    idx: usize,
    column: &str,
    line: u64,
) -> Result<f64, DataError> {
    let raw = record.get(idx).unwrap_or("").trim();
    if raw.is_empty() || raw.eq_ignore_ascii_case("na") {
        return Err(DataError::MissingValue {
            line,
            column: column.into(),
        });
    }
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| DataError::NonNumeric {
            line,
            column: column.into(),
            value: raw.into(),
        })
}

pub fn read_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<GroupedDataset, DataError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv_from(file, schema)
}

pub fn read_csv_str(text: &str, schema: &CsvSchema) -> Result<GroupedDataset, DataError> {
    read_csv_from(text.as_bytes(), schema)
}

pub fn read_csv_from<R: Read>(reader: R, schema: &CsvSchema) -> Result<GroupedDataset, DataError> {
    if !(1..=2).contains(&schema.response_cols.len()) {
        return Err(DataError::ResponseArity {
            expected: 1,
            found: schema.response_cols.len(),
        });
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| csv_error(e, 1))?.clone();
    if header.is_empty() || header.iter().all(|h| h.trim().is_empty()) {
        return Err(DataError::Empty);
    }
    let names: Vec<String> = header.iter().map(|h| h.trim().to_string()).collect();
    let index: HashMap<&str, usize> = names
        .iter()
        .enumerate()
        .map(|(i, h)| (h.as_str(), i))
        .collect();
    let col = |c: &str| {
        index
            .get(c)
            .copied()
            .ok_or_else(|| DataError::MissingColumn { column: c.into() })
    };
    let group_idx = col(&schema.group_col)?;
    let resp_idx = schema
        .response_cols
        .iter()
        .map(|c| col(c))
        .collect::<Result<Vec<_>, _>>()?;
    let fixed = schema
        .fixed_cols
        .iter()
        .map(|t| resolve(t, &index))
        .collect::<Result<Vec<_>, _>>()?;
    let raneff = schema
        .raneff_cols
        .iter()
        .map(|t| resolve(t, &index))
        .collect::<Result<Vec<_>, _>>()?;
    if raneff.is_empty() {
        return Err(aqfit_core::Error::InvalidDataset(
            "at least one random-effect column is required".into(),
        )
        .into());
    }

    let mut groups: Vec<Group> = Vec::new();
    let mut slot: HashMap<String, usize> = HashMap::new();
    let mut cache: Vec<f64> = vec![f64::NAN; names.len()];
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec.map_err(|e| csv_error(e, line))?;
        // Parse each referenced column once per row.
        let mut get = |idx: usize| -> Result<f64, DataError> {
            if cache[idx].is_nan() {
                cache[idx] = number(&rec, idx, &names[idx], line)?;
            }
            Ok(cache[idx])
        };
        let term_value = |t: &Term, get: &mut dyn FnMut(usize) -> Result<f64, DataError>| {
            t.factors
                .iter()
                .try_fold(1.0, |acc, &f| Ok::<f64, DataError>(acc * get(f)?))
        };
        let response = if resp_idx.len() == 1 {
            Response::Value(get(resp_idx[0])?)
        } else {
            let time = get(resp_idx[0])?;
            let status = get(resp_idx[1])?;
            let event = match status {
                s if s == 1.0 => true,
                s if s == 0.0 => false,
                _ => {
                    return Err(DataError::BadStatus {
                        line,
                        column: names[resp_idx[1]].clone(),
                        value: rec.get(resp_idx[1]).unwrap_or("").trim().into(),
                    })
                }
            };
            Response::Survival { time, event }
        };
        let mut x = Vec::with_capacity(fixed.len());
        for t in &fixed {
            x.push(term_value(t, &mut get)?);
        }
        let mut v = Vec::with_capacity(raneff.len());
        for t in &raneff {
            v.push(term_value(t, &mut get)?);
        }
        cache.iter_mut().for_each(|c| *c = f64::NAN);

        let id = rec.get(group_idx).unwrap_or("").trim();
        if id.is_empty() {
            return Err(DataError::MissingValue {
                line,
                column: schema.group_col.clone(),
            });
        }
        let gi = match slot.get(id) {
            Some(&gi) => gi,
            None => {
                slot.insert(id.to_string(), groups.len());
                groups.push(Group {
                    id: id.to_string(),
                    responses: Vec::new(),
                    x: Vec::new(),
                    v: Vec::new(),
                });
                groups.len() - 1
            }
        };
        let g = &mut groups[gi];
        g.responses.push(response);
        g.x.extend(x);
        g.v.extend(v);
    }
    if groups.is_empty() {
        return Err(DataError::NoRows);
    }
    let fixed_names = fixed.into_iter().map(|t| t.name).collect();
    Ok(GroupedDataset::with_names(
        groups,
        fixed_names,
        raneff.len(),
    )?)
}

fn csv_error(e: csv::Error, line: u64) -> DataError {
    let line = e.position().map_or(line, |p| p.line());
    DataError::Malformed {
        line,
        message: e.to_string(),
    }
}

/// Shortest decimal that parses back to the same double (at most 17
/// significant digits).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// Writes `data` and returns the schema that reads it back unchanged.
pub fn write_csv<W: Write>(data: &GroupedDataset, writer: W) -> Result<CsvSchema, DataError> {
    let survival = data
        .groups()
        .first()
        .and_then(|g| g.responses.first())
        .is_some_and(|r| matches!(r, Response::Survival { .. }));
    let response_cols: Vec<String> = if survival {
        vec!["time".into(), "status".into()]
    } else {
        vec!["y".into()]
    };
    let fixed_cols: Vec<String> = (1..=data.d()).map(|j| format!("x{j}")).collect();
    let raneff_cols: Vec<String> = (1..=data.p()).map(|j| format!("v{j}")).collect();

    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["group".to_string()];
    header.extend(response_cols.iter().cloned());
    header.extend(fixed_cols.iter().cloned());
    header.extend(raneff_cols.iter().cloned());
    w.write_record(&header).map_err(|e| csv_error(e, 1))?;
    let mut line = 1;
    for g in data.groups() {
        for (j, y) in g.responses.iter().enumerate() {
            line += 1;
            let mut row = vec![g.id.clone()];
            match *y {
                Response::Value(v) => row.push(fmt_f64(v)),
                Response::Survival { time, event } => {
                    row.push(fmt_f64(time));
                    row.push(if event { "1" } else { "0" }.into());
                }
            }
            row.extend(g.x_row(j, data.d()).iter().map(|v| fmt_f64(*v)));
            row.extend(g.v_row(j, data.p()).iter().map(|v| fmt_f64(*v)));
            w.write_record(&row).map_err(|e| csv_error(e, line))?;
        }
    }
    w.flush().map_err(|source| DataError::Io {
        path: "<output>".into(),
        source,
    })?;
    Ok(CsvSchema {
        group_col: "group".into(),
        response_cols,
        fixed_cols,
        raneff_cols,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema(fixed: &[&str]) -> CsvSchema {
        CsvSchema {
            group_col: "id".into(),
            response_cols: vec!["y".into()],
            fixed_cols: fixed.iter().map(|s| s.to_string()).collect(),
            raneff_cols: vec!["1".into()],
        }
    }

    #[test]
    fn interaction_and_intercept_terms() {
        let text = "id,y,a,b\ng1,1,2,3\ng1,0,0.5,4\n";
        let ds = read_csv_str(text, &schema(&["1", "a", "a:b"])).unwrap();
        let g = &ds.groups()[0];
        assert_eq!(g.x, vec![1.0, 2.0, 6.0, 1.0, 0.5, 2.0]);
        assert_eq!(ds.fixed_names(), ["intercept", "a", "a:b"]);
    }

    #[test]
    fn format_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 1.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }
}
