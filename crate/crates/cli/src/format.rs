//! Observable and state files.
//!
//! JSON with explicit dimensions. Matrices are row-major; phase-space
//! coordinates are interleaved `(q_1, p_1, ..., q_s, p_s)`.

use std::fmt;
use std::path::Path;

use gaussobs::observable::SYMMETRY_TOL;
use gaussobs::statistics::GaussianState;
use gaussobs::{GaussianObservable, RMat, RVec};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableFile {
    pub schema_version: String,
    pub s: usize,
    pub m: usize,
    #[serde(rename = "K")]
    pub k: Vec<f64>,
    pub alpha: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<Vec<f64>>,
    #[serde(default)]
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub schema_version: String,
    pub s: usize,
    pub mean: Vec<f64>,
    pub gamma: Vec<f64>,
    #[serde(default)]
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FormatError {
    Io {
        path: String,
        message: String,
    },
    Json {
        path: String,
        message: String,
    },
    Schema {
        field: &'static str,
        message: String,
    },
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormatError::Io { path, message } => write!(f, "cannot read {path}: {message}"),
            FormatError::Json { path, message } => write!(f, "{path}: malformed JSON: {message}"),
            FormatError::Schema { field, message } => {
                write!(f, "schema error in field `{field}`: {message}")
            }
        }
    }
}

impl std::error::Error for FormatError {}

fn schema(field: &'static str, message: impl Into<String>) -> FormatError {
    FormatError::Schema {
        field,
        message: message.into(),
    }
}

fn check_len(
    field: &'static str,
    v: &[f64],
    expected: usize,
    what: &str,
) -> Result<(), FormatError> {
    if v.len() != expected {
        return Err(schema(
            field,
            format!("expected {expected} entries ({what}), found {}", v.len()),
        ));
    }
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(schema(field, format!("entry {i} is not finite")));
    }
    Ok(())
}

fn check_version(v: &str) -> Result<(), FormatError> {
    if v != SCHEMA_VERSION {
        return Err(schema(
            "schema_version",
            format!("unsupported version {v:?}, expected {SCHEMA_VERSION:?}"),
        ));
    }
    Ok(())
}

fn check_symmetric(field: &'static str, mat: &RMat) -> Result<(), FormatError> {
    let scale = mat.amax().max(1.0);
    let asym = (mat - mat.transpose()).amax();
    if asym > SYMMETRY_TOL * scale {
        return Err(schema(
            field,
            format!("not symmetric (max asymmetry {asym:e})"),
        ));
    }
    Ok(())
}

/// Read a file and return its bytes as text together with the SHA-256 hex digest.
pub fn read_text(path: &Path) -> Result<(String, String), FormatError> {
    use sha2::{Digest, Sha256};
    let bytes = std::fs::read(path).map_err(|e| FormatError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let digest = hex::encode(Sha256::digest(&bytes));
    let text = String::from_utf8(bytes).map_err(|e| FormatError::Io {
        path: path.display().to_string(),
        message: format!("not UTF-8: {e}"),
    })?;
    Ok((text, digest))
}

impl ObservableFile {
    pub fn parse(text: &str, path: &str) -> Result<Self, FormatError> {
        let file: ObservableFile = serde_json::from_str(text).map_err(|e| FormatError::Json {
            path: path.to_string(),
            message: e.to_string(),
        })?;
        file.check()?;
        Ok(file)
    }

    pub fn check(&self) -> Result<(), FormatError> {
        check_version(&self.schema_version)?;
        if self.s == 0 {
            return Err(schema("s", "must be at least 1"));
        }
        if self.m == 0 {
            return Err(schema("m", "must be at least 1"));
        }
        check_len("K", &self.k, 2 * self.s * self.m, "2s * m")?;
        check_len("alpha", &self.alpha, self.m * self.m, "m * m")?;
        if let Some(l) = &self.l {
            check_len("l", l, self.m, "m")?;
        }
        check_symmetric("alpha", &RMat::from_row_slice(self.m, self.m, &self.alpha))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn from_observable(obs: &GaussianObservable, label: &str) -> Self {
        let row_major = |m: &RMat| -> Vec<f64> { m.transpose().iter().copied().collect() };
        let l = obs.offset();
        ObservableFile {
            schema_version: SCHEMA_VERSION.into(),
            s: obs.modes(),
            m: obs.m(),
            k: row_major(obs.k()),
            alpha: row_major(obs.alpha()),
            l: (l.amax() > 0.0).then(|| l.iter().copied().collect()),
            label: label.into(),
        }
    }

    pub fn to_observable(&self) -> Result<GaussianObservable, gaussobs::Error> {
        let k = RMat::from_row_slice(2 * self.s, self.m, &self.k);
        let alpha = RMat::from_row_slice(self.m, self.m, &self.alpha);
        let obs = GaussianObservable::new(self.s, k, alpha)?;
        match &self.l {
            Some(l) => obs.with_offset(RVec::from_column_slice(l)),
            None => Ok(obs),
        }
    }
}

impl StateFile {
    pub fn parse(text: &str, path: &str) -> Result<Self, FormatError> {
        let file: StateFile = serde_json::from_str(text).map_err(|e| FormatError::Json {
            path: path.to_string(),
            message: e.to_string(),
        })?;
        file.check()?;
        Ok(file)
    }

    pub fn check(&self) -> Result<(), FormatError> {
        check_version(&self.schema_version)?;
        if self.s == 0 {
            return Err(schema("s", "must be at least 1"));
        }
        check_len("mean", &self.mean, 2 * self.s, "2s")?;
        check_len("gamma", &self.gamma, 4 * self.s * self.s, "2s * 2s")?;
        check_symmetric(
            "gamma",
            &RMat::from_row_slice(2 * self.s, 2 * self.s, &self.gamma),
        )
    }

    pub fn to_state(&self, tol: f64) -> Result<GaussianState, gaussobs::Error> {
        let n = 2 * self.s;
        GaussianState::new(
            RVec::from_column_slice(&self.mean),
            RMat::from_row_slice(n, n, &self.gamma),
            tol,
        )
    }
}
