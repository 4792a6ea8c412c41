use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            _ => Err(Error::InvalidArgument(format!("unknown output format '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub abel_tol: f64,
    pub newton_tol: f64,
    pub tail_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { abel_tol: 1e-4, newton_tol: 1e-10, tail_tol: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Constants {
    /// digit bound for the high type check
    pub n_hightype: u64,
    pub m4: f64,
    pub b_const: f64,
    pub c_yoccoz: f64,
    /// recorded with every artifact, not used by any computation
    pub d_lift: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants { n_hightype: 20, m4: 1.0, b_const: 0.0, c_yoccoz: 1.0, d_lift: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub precision_bits: u32,
    pub depth: usize,
    pub tolerances: Tolerances,
    pub constants: Constants,
    pub cache_dir: String,
    pub output_format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            precision_bits: 128,
            depth: 20,
            tolerances: Tolerances::default(),
            constants: Constants::default(),
            cache_dir: ".nprenorm-cache".into(),
            output_format: OutputFormat::Json,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::InvalidArgument(format!("config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if self.precision_bits < 64 {
            return Err(Error::InvalidArgument(format!("precision_bits {} is below 64", self.precision_bits)));
        }
        let t = &self.tolerances;
        for (name, v) in [("abel_tol", t.abel_tol), ("newton_tol", t.newton_tol), ("tail_tol", t.tail_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        let c = &self.constants;
        if !(c.m4 >= 0.0 && c.b_const >= 0.0 && c.c_yoccoz > 0.0) {
            return Err(Error::InvalidArgument("M4 and B_const must be >= 0 and C_yoccoz > 0".into()));
        }
        Ok(())
    }

    /// Hash of the settings that change results. `cache_dir` is left out.
    pub fn fingerprint(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        v.as_object_mut().unwrap().remove("cache_dir");
        let h = Sha256::digest(serde_json::to_vec(&v).unwrap());
        hex::encode(&h[..8])
    }
}
