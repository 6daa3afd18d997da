//! `key = value` run configuration. Blank lines and `#` comments are ignored.

use std::path::Path;

use kwgauss::reference_math::Thresholds;

use crate::CliError;

pub const DEFAULT_QUBIT_CAP: usize = 24;
pub const DEFAULT_PRUNE_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub thresholds: Thresholds,
    pub qubit_cap: usize,
    pub prune_floor: f64,
    pub strict: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            thresholds: Thresholds::default(),
            qubit_cap: DEFAULT_QUBIT_CAP,
            prune_floor: DEFAULT_PRUNE_FLOOR,
            strict: false,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T, CliError> {
    value.parse().map_err(|_| CliError::Validation(format!("config line {line}: bad value {value:?} for {key}")))
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut c = Config::default();
        let (mut lo, mut hi) = (c.thresholds.lo, c.thresholds.hi);
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(CliError::Validation(format!("config line {line}: expected key = value")));
            };
            let (key, value) = (key.trim(), value.trim().trim_matches('"'));
            match key {
                "threshold_lo" => lo = parse_value(key, value, line)?,
                "threshold_hi" => hi = parse_value(key, value, line)?,
                "qubit_cap" => c.qubit_cap = parse_value(key, value, line)?,
                "prune_floor" => c.prune_floor = parse_value(key, value, line)?,
                "strict" => c.strict = parse_value(key, value, line)?,
                other => return Err(CliError::Validation(format!("config line {line}: unknown key {other:?}"))),
            }
        }
        c.thresholds = Thresholds::new(lo, hi)?;
        if !(c.prune_floor >= 0.0 && c.prune_floor < 1.0) {
            return Err(CliError::Validation(format!("prune_floor must be in [0, 1), got {}", c.prune_floor)));
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}
