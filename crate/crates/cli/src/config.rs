//! Settings file and the precedence rule: flags, then the file, then
//! built-in defaults.

use std::path::Path;

use mrca_core::MeasureSpec;
use serde::Deserialize;

/// Contents of a JSON settings file. Every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub measure: Option<MeasureSpec>,
    pub seed: Option<u64>,
    pub parallel: Option<usize>,
    pub tolerance_scale: Option<f64>,
    pub abs_tol: Option<f64>,
    pub max_depth: Option<u32>,
    pub max_intervals: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("bad config {}: {e}", path.display()))
    }
}

/// Settings after applying precedence.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub measure: Option<MeasureSpec>,
    pub seed: u64,
    pub parallel: Option<usize>,
    pub tolerance_scale: f64,
}

pub const DEFAULT_SEED: u64 = 0;
