//! Education attainment tables and their join onto ZCTA aggregates.
//!
//! The expected CSV shape is `zcta,pct_hs,pct_bachelors` with one row per
//! ZCTA: the share of adults with at least a high-school diploma and with at
//! least a bachelor's degree, both in percent. The README describes how to
//! extract such a table from a published attainment survey.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use thiserror::Error;

use crate::stats::ZctaAggregate;

#[derive(Debug, Clone, PartialEq)]
pub struct ZctaEducation {
    pub zcta_id: String,
    pub pct_high_school: f64,
    pub pct_bachelors: f64,
}

#[derive(Debug, Error)]
pub enum CensusError {
    #[error("failed to read education table: {0}")]
    Io(#[from] std::io::Error),
    #[error("education table row {row}: {source}")]
    Csv { row: u64, source: csv::Error },
    #[error("education table is missing column {0:?}")]
    MissingColumn(&'static str),
    #[error("education table row {row}: cannot parse {column} value {value:?}")]
    BadNumber {
        row: u64,
        column: &'static str,
        value: String,
    },
    #[error("education table row {row}: duplicate zcta {zcta_id:?}")]
    DuplicateId { row: u64, zcta_id: String },
    #[error("education table row {row}: {column} = {value} outside [0, 100]")]
    OutOfRange {
        row: u64,
        column: &'static str,
        value: f64,
    },
}

/// Keyed education table.
#[derive(Debug, Default, Clone)]
pub struct EducationTable {
    rows: HashMap<String, ZctaEducation>,
}

impl EducationTable {
    pub fn get(&self, zcta_id: &str) -> Option<&ZctaEducation> {
        self.rows.get(zcta_id)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Loads an education table, failing on duplicate ids or percentages outside
/// `[0, 100]`; errors carry the 1-based file line number.
pub fn load_education(path: &Path) -> Result<EducationTable, CensusError> {
    read_education(std::fs::File::open(path)?)
}

pub fn read_education(reader: impl Read) -> Result<EducationTable, CensusError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|source| CensusError::Csv { row: 1, source })?;
    let col = |name: &'static str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or(CensusError::MissingColumn(name))
    };
    let id_col = col("zcta")?;
    let hs_col = col("pct_hs")?;
    let ba_col = col("pct_bachelors")?;

    let mut rows = HashMap::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i as u64 + 2;
        let record = record.map_err(|source| CensusError::Csv { row, source })?;
        let parse = |c: usize, column: &'static str| -> Result<f64, CensusError> {
            let v = record.get(c).map(str::trim).unwrap_or("");
            let x: f64 = v.parse().map_err(|_| CensusError::BadNumber {
                row,
                column,
                value: v.to_owned(),
            })?;
            if !(0.0..=100.0).contains(&x) {
                return Err(CensusError::OutOfRange { row, column, value: x });
            }
            Ok(x)
        };
        let edu = ZctaEducation {
            zcta_id: record.get(id_col).map(str::trim).unwrap_or("").to_owned(),
            pct_high_school: parse(hs_col, "pct_hs")?,
            pct_bachelors: parse(ba_col, "pct_bachelors")?,
        };
        let id = edu.zcta_id.clone();
        if rows.insert(id.clone(), edu).is_some() {
            return Err(CensusError::DuplicateId { row, zcta_id: id });
        }
    }
    Ok(EducationTable { rows })
}

/// An aggregate paired with its education row.
#[derive(Debug, Clone)]
pub struct JoinedZcta {
    pub aggregate: ZctaAggregate,
    pub education: ZctaEducation,
}

/// Inner join of aggregates with the education table, ordered by `zcta_id`.
/// Returns the joined rows and the number of aggregates without a match.
pub fn join_education(
    aggregates: impl IntoIterator<Item = ZctaAggregate>,
    table: &EducationTable,
) -> (Vec<JoinedZcta>, u64) {
    let mut unmatched = 0u64;
    let mut joined: Vec<JoinedZcta> = aggregates
        .into_iter()
        .filter_map(|aggregate| match table.get(&aggregate.zcta_id) {
            Some(edu) => Some(JoinedZcta {
                aggregate,
                education: edu.clone(),
            }),
            None => {
                unmatched += 1;
                None
            }
        })
        .collect();
    joined.sort_by(|a, b| a.aggregate.zcta_id.cmp(&b.aggregate.zcta_id));
    (joined, unmatched)
}
