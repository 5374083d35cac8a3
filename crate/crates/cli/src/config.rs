//! Flat `key = value` experiment configuration files.
//!
//! One setting per line; `#` starts a comment; matrices are written as
//! row-major bracketed lists (`[[1.0, 0.5], [0.5, 2.0]]`), and a bare
//! number is accepted as a `1 x 1` matrix. Unknown keys are rejected so
//! typos fail loudly instead of silently falling back to defaults.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

/// A configuration problem: reported to the user and mapped to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// Which experiment a config file describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentId {
    Fig2,
    Fig3,
    Static,
    Dynamic,
    MultiSync,
    Herding,
    Async,
    Certify,
}

impl ExperimentId {
    fn parse(word: &str) -> Result<Self, ConfigError> {
        Ok(match word {
            "fig2" => Self::Fig2,
            "fig3" => Self::Fig3,
            "static" => Self::Static,
            "dynamic" => Self::Dynamic,
            "multisync" => Self::MultiSync,
            "herding" => Self::Herding,
            "async" => Self::Async,
            "certify" => Self::Certify,
            other => {
                return err(format!(
                    "unknown experiment '{other}' (expected fig2, fig3, static, dynamic, \
                     multisync, herding, async, or certify)"
                ))
            }
        })
    }

    /// Keys this experiment accepts beyond the common ones.
    fn allowed_keys(self) -> &'static [&'static str] {
        match self {
            Self::Fig2 => &["mu_min", "mu_max", "mu_steps"],
            Self::Fig3 => &["n_max", "sigma"],
            Self::Static => &[
                "v_xx",
                "v_xtheta",
                "v_thetatheta",
                "v_xy",
                "v_thetay",
                "v_yy",
                "n_z",
            ],
            Self::Dynamic => &[
                "horizon",
                "a_x",
                "a_theta",
                "c_yx",
                "c_ytheta",
                "v_wx",
                "v_wtheta",
                "v_wy",
                "initial_cov",
                "n_z",
            ],
            Self::MultiSync => &["n_max", "v_xx", "v_thetatheta"],
            Self::Herding => &["n_max", "sigma"],
            Self::Async => &["n", "v_xx", "v_xtheta", "v_thetatheta"],
            Self::Certify => &[
                "v_xx",
                "v_xtheta",
                "v_thetatheta",
                "multi_n",
                "multi_v_xx",
                "multi_v_thetatheta",
                "multi_v_xtheta",
                "multi_u_thetatheta",
                "trials",
                "tamper",
            ],
        }
    }
}

/// Parsed configuration: the experiment id, common settings, and the
/// experiment-specific keys (validated but left as strings until the
/// runner interprets them).
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub seed: u64,
    /// Monte Carlo sample/run count; `None` means the experiment default.
    pub samples: Option<usize>,
    pub out: Option<std::path::PathBuf>,
    values: BTreeMap<String, String>,
}

impl ExperimentConfig {
    /// Parses the flat text format and validates every key.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return err(format!(
                    "line {}: expected 'key = value', got '{line}'",
                    lineno + 1
                ));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() || value.is_empty() {
                return err(format!("line {}: empty key or value", lineno + 1));
            }
            if values.insert(key.clone(), value).is_some() {
                return err(format!("line {}: duplicate key '{key}'", lineno + 1));
            }
        }

        let Some(experiment_word) = values.remove("experiment") else {
            return err("missing required key 'experiment'");
        };
        let experiment = ExperimentId::parse(&experiment_word)?;

        let seed = match values.remove("seed") {
            None => 2024,
            Some(v) => v
                .parse::<u64>()
                .map_err(|_| ConfigError(format!("seed '{v}' is not a non-negative integer")))?,
        };
        let samples = match values.remove("samples") {
            None => None,
            Some(v) => Some(v.parse::<usize>().map_err(|_| {
                ConfigError(format!("samples '{v}' is not a non-negative integer"))
            })?),
        };
        let out = values.remove("out").map(std::path::PathBuf::from);

        for key in values.keys() {
            if !experiment.allowed_keys().contains(&key.as_str()) {
                return err(format!(
                    "unknown key '{key}' for experiment '{experiment_word}' \
                     (allowed: {})",
                    experiment.allowed_keys().join(", ")
                ));
            }
        }

        Ok(Self {
            experiment,
            seed,
            samples,
            out,
            values,
        })
    }

    /// Monte Carlo sample count with the experiment default and the
    /// minimum-size rule applied.
    pub fn samples_or(&self, default: usize) -> Result<usize, ConfigError> {
        let samples = self.samples.unwrap_or(default);
        if samples < 1000 {
            return err(format!(
                "samples = {samples} is below the minimum of 1000 for Monte Carlo experiments"
            ));
        }
        Ok(samples)
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.values.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<f64>()
                .map_err(|_| ConfigError(format!("{key} '{v}' is not a number"))),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.values.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<usize>()
                .map_err(|_| ConfigError(format!("{key} '{v}' is not a non-negative integer"))),
        }
    }

    pub fn word_or(&self, key: &str, default: &str) -> String {
        self.values
            .get(key)
            .cloned()
            .unwrap_or_else(|| default.to_string())
    }

    /// Matrix-valued key; a bare number parses as `1 x 1`.
    pub fn matrix(&self, key: &str) -> Option<Result<DMatrix<f64>, ConfigError>> {
        self.values
            .get(key)
            .map(|v| parse_matrix(v).map_err(|e| ConfigError(format!("{key}: {e}"))))
    }

    pub fn matrix_or(
        &self,
        key: &str,
        default: &DMatrix<f64>,
    ) -> Result<DMatrix<f64>, ConfigError> {
        match self.matrix(key) {
            None => Ok(default.clone()),
            Some(m) => m,
        }
    }
}

/// Parses `[[a, b], [c, d]]` (row-major) or a bare number as `1 x 1`.
fn parse_matrix(text: &str) -> Result<DMatrix<f64>, String> {
    let t = text.trim();
    if !t.starts_with('[') {
        let v = t
            .parse::<f64>()
            .map_err(|_| format!("'{t}' is neither a number nor a bracketed matrix"))?;
        return Ok(DMatrix::from_element(1, 1, v));
    }
    let inner = t
        .strip_prefix('[')
        .and_then(|x| x.strip_suffix(']'))
        .ok_or("unbalanced outer brackets")?;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut depth = 0usize;
    let mut row_start = 0usize;
    for (i, c) in inner.char_indices() {
        match c {
            '[' => {
                if depth == 0 {
                    row_start = i + 1;
                }
                depth += 1;
                if depth > 1 {
                    return Err("matrices nest at most one level of rows".into());
                }
            }
            ']' => {
                if depth == 0 {
                    return Err("unbalanced brackets".into());
                }
                depth -= 1;
                let row_text = &inner[row_start..i];
                let row = row_text
                    .split(',')
                    .map(str::trim)
                    .filter(|x| !x.is_empty())
                    .map(|x| {
                        x.parse::<f64>()
                            .map_err(|_| format!("'{x}' is not a number"))
                    })
                    .collect::<Result<Vec<f64>, String>>()?;
                if row.is_empty() {
                    return Err("empty matrix row".into());
                }
                rows.push(row);
            }
            ',' | ' ' | '\t' => {}
            other if depth == 0 => {
                return Err(format!("unexpected '{other}' between rows"));
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err("unbalanced brackets".into());
    }
    if rows.is_empty() {
        return Err("empty matrix".into());
    }
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err("rows have different lengths".into());
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(rows.len(), ncols, &flat))
}
