//! The JSON document each run emits.
//!
//! Diagnostics keys per method:
//!
//! | method    | keys |
//! |-----------|------|
//! | `distill` | `residual`, `lambda_used`, `imag_residue`, `imag_residue_flagged`, `rows`, `cols` |
//! | `shapley` | `efficiency_gap`, `n_players`, `form` |
//! | `ig`      | `completeness_gap`, `method`, and `steps` or `degree` |

use std::collections::BTreeMap;

use matxai_core::RealMatrix;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Distill,
    Shapley,
    Ig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedBlock {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Attributions {
    Distill {
        kernel: Vec<Vec<f64>>,
        block_rows: usize,
        block_cols: usize,
        contribution: Vec<Vec<f64>>,
        ranking: Vec<RankedBlock>,
    },
    Shapley {
        form: String,
        phi: Vec<f64>,
    },
    Ig {
        per_feature: Vec<f64>,
        baseline: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub method: Method,
    pub input_digest: String,
    pub attributions: Attributions,
    pub wall_time_seconds: f64,
    pub workers: usize,
    pub diagnostics: BTreeMap<String, Value>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

pub fn nested_rows(m: &RealMatrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|r| m.row(r).to_vec()).collect()
}
