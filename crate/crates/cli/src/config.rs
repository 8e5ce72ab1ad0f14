//! Campaign configuration: flat `key = value` lines with dotted sections.
//!
//! ```text
//! grid.N = [1, 2, 3]
//! grid.s = [0.25, 0.5]
//! grid.nonlinearity = ["power(1, 3)", "linear-second"]
//! trunc.K = 24
//! tol.newton = 1e-10
//! seed = 7
//! ```
//!
//! Every key has a default, unknown keys are rejected, and
//! [`CampaignConfig::to_text`] writes a canonical form that parses back to
//! the same value.

use std::fmt;
use std::path::PathBuf;

use fracball_core::{NonlinearitySpec, ProblemParams};
use sha2::{Digest, Sha256};
use thiserror::Error;
use toml::Value;

pub const MAX_TRUNCATION: usize = 256;
pub const MAX_ORACLE_LEVEL: usize = 6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{key}`: expected {expected}")]
    Type { key: String, expected: &'static str },
    #[error("key `{key}`: {msg}")]
    Invalid { key: String, msg: String },
}

/// Nonlinearity as written in a config file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NonlinearityDescriptor {
    Fixed(NonlinearitySpec),
    /// `f(t) = λ_{N,1} t`, with the second radial eigenvalue of each grid point.
    LinearSecond,
}

impl NonlinearityDescriptor {
    pub fn parse(text: &str) -> Result<Self, String> {
        let t = text.trim();
        if t == "linear-second" {
            return Ok(Self::LinearSecond);
        }
        let open = t
            .find('(')
            .ok_or_else(|| format!("`{t}` is not a nonlinearity descriptor"))?;
        let args = t[open + 1..]
            .strip_suffix(')')
            .ok_or_else(|| format!("`{t}`: missing closing parenthesis"))?;
        let nums = args
            .split(',')
            .map(|a| {
                a.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("`{t}`: bad number `{}`", a.trim()))
            })
            .collect::<Result<Vec<f64>, String>>()?;
        let spec = match (t[..open].trim(), nums.as_slice()) {
            ("linear", &[lambda]) => NonlinearitySpec::Linear { lambda },
            ("power", &[lambda, p]) => NonlinearitySpec::Power { lambda, p },
            ("shifted-linear", &[lambda, c0]) => NonlinearitySpec::ShiftedLinear { lambda, c0 },
            (name, _) => {
                return Err(format!(
                    "`{t}`: unknown family `{name}` or wrong argument count"
                ))
            }
        };
        if !spec.is_valid() {
            return Err(format!("`{t}`: parameters outside the admissible range"));
        }
        Ok(Self::Fixed(spec))
    }

    /// Concrete nonlinearity at a grid point; `lambda_second` is only called for [`Self::LinearSecond`].
    pub fn resolve(
        &self,
        lambda_second: impl FnOnce() -> fracball_core::Result<f64>,
    ) -> fracball_core::Result<NonlinearitySpec> {
        match *self {
            Self::Fixed(spec) => Ok(spec),
            Self::LinearSecond => lambda_second().map(NonlinearitySpec::linear),
        }
    }
}

impl fmt::Display for NonlinearityDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::LinearSecond => write!(f, "linear-second"),
            Self::Fixed(NonlinearitySpec::Linear { lambda }) => write!(f, "linear({lambda:?})"),
            Self::Fixed(NonlinearitySpec::Power { lambda, p }) => {
                write!(f, "power({lambda:?}, {p:?})")
            }
            Self::Fixed(NonlinearitySpec::ShiftedLinear { lambda, c0 }) => {
                write!(f, "shifted-linear({lambda:?}, {c0:?})")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
    Both,
}

impl OutputFormat {
    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "csv" => Some(Self::Csv),
            "json" => Some(Self::Json),
            "both" => Some(Self::Both),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
            Self::Both => "both",
        }
    }

    pub fn csv(self) -> bool {
        self != Self::Json
    }

    pub fn json(self) -> bool {
        self != Self::Csv
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub dims: Vec<usize>,
    pub orders: Vec<f64>,
    pub nonlinearities: Vec<NonlinearityDescriptor>,
    pub k: usize,
    pub ell_max: usize,
    pub n_max: usize,
    /// Nodal count requested from the solver.
    pub nodes: usize,
    pub newton_tol: f64,
    pub oracle_level: usize,
    pub oracle_rel_tol: f64,
    pub mc_samples: usize,
    pub test_functions: bool,
    pub criteria: Vec<u8>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub format: OutputFormat,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            dims: vec![1, 2, 3],
            orders: vec![0.5],
            nonlinearities: vec![NonlinearityDescriptor::Fixed(NonlinearitySpec::Power {
                lambda: 1.0,
                p: 3.0,
            })],
            k: 24,
            ell_max: 3,
            n_max: 3,
            nodes: 1,
            newton_tol: 1e-10,
            oracle_level: 2,
            oracle_rel_tol: 1e-4,
            mc_samples: 1_000_000,
            test_functions: true,
            criteria: fracball_core::acceptance::ALL_CRITERIA.to_vec(),
            seed: 7,
            output_dir: PathBuf::from("fracball-out"),
            format: OutputFormat::Both,
        }
    }
}

const KEYS: [&str; 16] = [
    "grid.N",
    "grid.s",
    "grid.nonlinearity",
    "trunc.K",
    "trunc.ell_max",
    "trunc.n_max",
    "solve.nodes",
    "tol.newton",
    "oracle.level",
    "oracle.rel_tol",
    "mc.samples",
    "morse.test_functions",
    "acceptance.criteria",
    "seed",
    "output.dir",
    "output.format",
];

fn flatten(prefix: &str, table: &toml::Table, out: &mut Vec<(String, Value)>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            other => out.push((key, other.clone())),
        }
    }
}

fn type_err(key: &str, expected: &'static str) -> ConfigError {
    ConfigError::Type {
        key: key.to_string(),
        expected,
    }
}

fn invalid(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        msg: msg.into(),
    }
}

fn as_usize(key: &str, v: &Value) -> Result<usize, ConfigError> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        _ => Err(type_err(key, "a non-negative integer")),
    }
}

fn as_f64(key: &str, v: &Value) -> Result<f64, ConfigError> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(type_err(key, "a number")),
    }
}

fn as_str<'a>(key: &str, v: &'a Value) -> Result<&'a str, ConfigError> {
    v.as_str().ok_or_else(|| type_err(key, "a string"))
}

fn as_list<'a>(key: &str, v: &'a Value) -> Result<&'a [Value], ConfigError> {
    v.as_array()
        .map(|a| a.as_slice())
        .ok_or_else(|| type_err(key, "a list"))
}

impl CampaignConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::Syntax(e.message().to_string()))?;
        let mut entries = Vec::new();
        flatten("", &table, &mut entries);
        let mut cfg = Self::default();
        for (key, v) in &entries {
            let key = key.as_str();
            match key {
                "grid.N" => {
                    cfg.dims = as_list(key, v)?
                        .iter()
                        .map(|x| as_usize(key, x))
                        .collect::<Result<_, _>>()?
                }
                "grid.s" => {
                    cfg.orders = as_list(key, v)?
                        .iter()
                        .map(|x| as_f64(key, x))
                        .collect::<Result<_, _>>()?
                }
                "grid.nonlinearity" => {
                    cfg.nonlinearities = as_list(key, v)?
                        .iter()
                        .map(|x| {
                            NonlinearityDescriptor::parse(as_str(key, x)?)
                                .map_err(|m| invalid(key, m))
                        })
                        .collect::<Result<_, _>>()?
                }
                "trunc.K" => cfg.k = as_usize(key, v)?,
                "trunc.ell_max" => cfg.ell_max = as_usize(key, v)?,
                "trunc.n_max" => cfg.n_max = as_usize(key, v)?,
                "solve.nodes" => cfg.nodes = as_usize(key, v)?,
                "tol.newton" => cfg.newton_tol = as_f64(key, v)?,
                "oracle.level" => cfg.oracle_level = as_usize(key, v)?,
                "oracle.rel_tol" => cfg.oracle_rel_tol = as_f64(key, v)?,
                "mc.samples" => cfg.mc_samples = as_usize(key, v)?,
                "morse.test_functions" => {
                    cfg.test_functions = v.as_bool().ok_or_else(|| type_err(key, "a boolean"))?
                }
                "acceptance.criteria" => {
                    cfg.criteria = as_list(key, v)?
                        .iter()
                        .map(|x| match as_usize(key, x)? {
                            i @ 1..=9 => Ok(i as u8),
                            i => Err(invalid(key, format!("criterion {i} outside 1..=9"))),
                        })
                        .collect::<Result<_, _>>()?
                }
                "seed" => {
                    cfg.seed = match v {
                        Value::Integer(i) if *i >= 0 => *i as u64,
                        _ => return Err(type_err(key, "an integer in 0..2^63")),
                    }
                }
                "output.dir" => cfg.output_dir = PathBuf::from(as_str(key, v)?),
                "output.format" => {
                    cfg.format = OutputFormat::parse(as_str(key, v)?)
                        .ok_or_else(|| invalid(key, "expected csv, json or both"))?
                }
                other => return Err(ConfigError::UnknownKey(other.to_string())),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every grid point and truncation setting.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.dims.is_empty() {
            return Err(invalid("grid.N", "empty grid"));
        }
        if self.orders.is_empty() {
            return Err(invalid("grid.s", "empty grid"));
        }
        if self.nonlinearities.is_empty() {
            return Err(invalid("grid.nonlinearity", "empty grid"));
        }
        for &n in &self.dims {
            for &s in &self.orders {
                ProblemParams::new(n, s)
                    .map_err(|e| invalid("grid", format!("(N={n}, s={s}): {e}")))?;
            }
        }
        for d in &self.nonlinearities {
            if let NonlinearityDescriptor::Fixed(spec) = d {
                if !spec.is_valid() {
                    return Err(invalid(
                        "grid.nonlinearity",
                        format!("`{d}` is not admissible"),
                    ));
                }
            }
        }
        if !(4..=MAX_TRUNCATION).contains(&self.k) {
            return Err(invalid(
                "trunc.K",
                format!("must lie in 4..={MAX_TRUNCATION}"),
            ));
        }
        if self.n_max + 2 > self.k {
            return Err(invalid("trunc.n_max", "needs n_max + 2 <= K"));
        }
        if self.ell_max > MAX_TRUNCATION {
            return Err(invalid(
                "trunc.ell_max",
                format!("must be at most {MAX_TRUNCATION}"),
            ));
        }
        if self.nodes + 2 > self.k {
            return Err(invalid("solve.nodes", "needs nodes + 2 <= K"));
        }
        if !(self.newton_tol.is_finite() && self.newton_tol > 0.0) {
            return Err(invalid("tol.newton", "must be positive"));
        }
        if self.oracle_level > MAX_ORACLE_LEVEL {
            return Err(invalid(
                "oracle.level",
                format!("must be at most {MAX_ORACLE_LEVEL}"),
            ));
        }
        if !(self.oracle_rel_tol.is_finite() && self.oracle_rel_tol > 0.0) {
            return Err(invalid("oracle.rel_tol", "must be positive"));
        }
        if self.mc_samples < 1000 {
            return Err(invalid("mc.samples", "must be at least 1000"));
        }
        if self.seed > i64::MAX as u64 {
            return Err(invalid("seed", "must be below 2^63"));
        }
        Ok(())
    }

    fn computational_lines(&self) -> Vec<(&'static str, Value)> {
        let ints =
            |xs: &[usize]| Value::Array(xs.iter().map(|&x| Value::Integer(x as i64)).collect());
        vec![
            (KEYS[0], ints(&self.dims)),
            (
                KEYS[1],
                Value::Array(self.orders.iter().map(|&s| Value::Float(s)).collect()),
            ),
            (
                KEYS[2],
                Value::Array(
                    self.nonlinearities
                        .iter()
                        .map(|d| Value::String(d.to_string()))
                        .collect(),
                ),
            ),
            (KEYS[3], Value::Integer(self.k as i64)),
            (KEYS[4], Value::Integer(self.ell_max as i64)),
            (KEYS[5], Value::Integer(self.n_max as i64)),
            (KEYS[6], Value::Integer(self.nodes as i64)),
            (KEYS[7], Value::Float(self.newton_tol)),
            (KEYS[8], Value::Integer(self.oracle_level as i64)),
            (KEYS[9], Value::Float(self.oracle_rel_tol)),
            (KEYS[10], Value::Integer(self.mc_samples as i64)),
            (KEYS[11], Value::Boolean(self.test_functions)),
            (
                KEYS[12],
                Value::Array(
                    self.criteria
                        .iter()
                        .map(|&c| Value::Integer(c as i64))
                        .collect(),
                ),
            ),
            (KEYS[13], Value::Integer(self.seed as i64)),
        ]
    }

    fn render(lines: &[(&str, Value)]) -> String {
        lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// Canonical text of every key, including the output section.
    pub fn to_text(&self) -> String {
        let mut lines = self.computational_lines();
        lines.push((
            KEYS[14],
            Value::String(self.output_dir.to_string_lossy().into_owned()),
        ));
        lines.push((KEYS[15], Value::String(self.format.as_str().to_string())));
        Self::render(&lines)
    }

    /// SHA-256 of the canonical text without the output section, in hex.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(Self::render(&self.computational_lines()).as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Grid points `(N, s)` in row order.
    pub fn points(&self) -> Vec<(usize, f64)> {
        self.dims
            .iter()
            .flat_map(|&n| self.orders.iter().map(move |&s| (n, s)))
            .collect()
    }

    /// Grid points `(N, s, nonlinearity)` in row order.
    pub fn nonlinear_points(&self) -> Vec<(usize, f64, NonlinearityDescriptor)> {
        self.points()
            .into_iter()
            .flat_map(|(n, s)| self.nonlinearities.iter().map(move |&d| (n, s, d)))
            .collect()
    }

    /// Seed for row `row`, a fixed mix of the campaign seed and the row index.
    pub fn row_seed(&self, row: usize) -> u64 {
        let mut z = self
            .seed
            .wrapping_add((row as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_config_parses() {
        let cfg = CampaignConfig::parse(
            "# sweep\ngrid.N = [1,2,3]\ngrid.s = [0.25, 0.5]\ngrid.nonlinearity = [\"power(1, 2.5)\", \"linear-second\"]\ntol.newton = 1e-10\nseed = 11\n",
        )
        .unwrap();
        assert_eq!(cfg.dims, vec![1, 2, 3]);
        assert_eq!(cfg.orders, vec![0.25, 0.5]);
        assert_eq!(cfg.nonlinearities[1], NonlinearityDescriptor::LinearSecond);
        assert_eq!(cfg.seed, 11);
        assert_eq!(cfg.points().len(), 6);
        assert_eq!(cfg.nonlinear_points().len(), 12);
    }

    #[test]
    fn section_headers_are_equivalent_to_dotted_keys() {
        let a = CampaignConfig::parse("trunc.K = 16\ntrunc.n_max = 2\n").unwrap();
        let b = CampaignConfig::parse("[trunc]\nK = 16\nn_max = 2\n").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_and_mistyped_keys_fail() {
        assert_eq!(
            CampaignConfig::parse("grid.M = [1]").unwrap_err(),
            ConfigError::UnknownKey("grid.M".into())
        );
        assert!(matches!(
            CampaignConfig::parse("trunc.K = \"24\""),
            Err(ConfigError::Type { .. })
        ));
        assert!(matches!(
            CampaignConfig::parse("grid.s = [1.5]"),
            Err(ConfigError::Invalid { .. })
        ));
        assert!(matches!(
            CampaignConfig::parse("grid.N = [0]"),
            Err(ConfigError::Invalid { .. })
        ));
        assert!(matches!(
            CampaignConfig::parse("seed = -1"),
            Err(ConfigError::Type { .. })
        ));
        assert!(matches!(
            CampaignConfig::parse("trunc.K = 24\ntrunc.K = 12"),
            Err(ConfigError::Syntax(_))
        ));
        assert!(matches!(
            CampaignConfig::parse("grid.nonlinearity = [\"power(1, 1.5)\"]"),
            Err(ConfigError::Invalid { .. })
        ));
    }

    #[test]
    fn canonical_text_round_trips() {
        let mut cfg = CampaignConfig {
            orders: vec![0.1, 1.0 / 3.0, 0.9],
            newton_tol: 3.3e-11,
            output_dir: PathBuf::from("out dir/\"quoted\""),
            format: OutputFormat::Json,
            ..CampaignConfig::default()
        };
        cfg.nonlinearities
            .push(NonlinearityDescriptor::parse("shifted-linear(2.5e1, -0.1)").unwrap());
        let back = CampaignConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_text(), cfg.to_text());
    }

    #[test]
    fn hash_ignores_output_section() {
        let a = CampaignConfig::default();
        let mut b = a.clone();
        b.output_dir = PathBuf::from("elsewhere");
        b.format = OutputFormat::Csv;
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        let mut c = a.clone();
        c.seed = 8;
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn row_seeds_differ() {
        let cfg = CampaignConfig::default();
        let seeds: std::collections::HashSet<u64> = (0..100).map(|r| cfg.row_seed(r)).collect();
        assert_eq!(seeds.len(), 100);
    }
}
