//! File formats, bundled data and the `aqfit` command line on top of
//! [`aqfit_core`].

pub mod cli;
pub mod csvio;
pub mod json;
pub mod kidney;

pub use csvio::{read_csv, read_csv_str, write_csv, CsvSchema, DataError};
