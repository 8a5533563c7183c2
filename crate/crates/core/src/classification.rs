use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ROW_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Keywords,
    Citations,
    Topics,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Keywords, Method::Citations, Method::Topics];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Keywords => "keywords",
            Method::Citations => "citations",
            Method::Topics => "topics",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "keywords" => Ok(Method::Keywords),
            "citations" => Ok(Method::Citations),
            "topics" => Ok(Method::Topics),
            other => Err(Error::InvalidParameter(format!("unknown method `{other}`"))),
        }
    }
}

/// Articles × categories matrix of membership shares. Every row is a
/// stochastic vector; rows that could not be classified are stored as uniform
/// rows and listed in `unclassified`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub method: Method,
    pub categories: Vec<String>,
    pub rows: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    pub unclassified: BTreeSet<String>,
}

impl Classification {
    pub fn new(
        method: Method,
        categories: Vec<String>,
        rows: BTreeMap<String, Vec<f64>>,
        unclassified: BTreeSet<String>,
    ) -> Result<Self> {
        let m = categories.len();
        if m == 0 {
            return Err(Error::InvalidParameter("classification without categories".into()));
        }
        for (id, row) in &rows {
            if row.len() != m {
                return Err(Error::InvalidParameter(format!(
                    "row {id} has {} entries, expected {m}",
                    row.len()
                )));
            }
            let sum: f64 = row.iter().sum();
            if row.iter().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::InvalidParameter(format!(
                    "row {id} is not stochastic (sum {sum})"
                )));
            }
        }
        Ok(Self {
            method,
            categories,
            rows,
            unclassified,
        })
    }

    pub fn uniform_row(m: usize) -> Vec<f64> {
        vec![1.0 / m as f64; m]
    }

    pub fn category_count(&self) -> usize {
        self.categories.len()
    }

    /// Rows that carry an actual classification.
    pub fn classified(&self) -> impl Iterator<Item = (&String, &Vec<f64>)> {
        self.rows
            .iter()
            .filter(|(id, _)| !self.unclassified.contains(*id))
    }

    pub fn row(&self, id: &str) -> Option<&[f64]> {
        if self.unclassified.contains(id) {
            return None;
        }
        self.rows.get(id).map(Vec::as_slice)
    }

    /// Classified article ids shared with `other`, sorted.
    pub fn shared_ids(&self, other: &Classification) -> Vec<String> {
        self.classified()
            .filter(|(id, _)| other.row(id).is_some())
            .map(|(id, _)| id.clone())
            .collect()
    }
}
