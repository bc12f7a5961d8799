//! Flat `section.key = value` run configuration.
//!
//! ```text
//! # European put, strike 100, one year
//! model.kappa = 2
//! model.theta = 0.1
//! ...
//! option.kind = put
//! numerics.n_time = 400
//! ```
//!
//! Blank lines and `#` comments are ignored. Unknown and repeated keys are
//! errors. A block is either absent or complete.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use hybrid_heston::{Boundary, ExerciseStyle, HestonParams, Numerics, OptionKind, OptionSpec, ThresholdRule};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        ConfigError {
            line: Some(line),
            message: message.into(),
        }
    }

    pub fn new(message: impl Into<String>) -> Self {
        ConfigError {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

const MODEL_KEYS: [&str; 8] = ["kappa", "theta", "sigma", "rho", "r", "delta", "s0", "v0"];
const OPTION_KEYS: [&str; 5] = ["kind", "style", "strike", "maturity", "barrier"];
const NUMERICS_KEYS: [&str; 6] = ["n_time", "n_space", "boundary", "width_sigmas", "drift_cfl", "threshold"];
const OUTPUT_KEYS: [&str; 2] = ["path", "timing"];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NumericsConfig {
    pub n_time: Option<usize>,
    pub n_space: Option<usize>,
    pub boundary: Option<Boundary>,
    pub width_sigmas: Option<f64>,
    pub drift_cfl: Option<f64>,
    pub threshold: Option<ThresholdRule>,
}

impl NumericsConfig {
    /// Numerics for the given step counts with every override applied.
    pub fn numerics(&self, n_time: usize, n_space: usize) -> Numerics {
        let mut n = Numerics::new(n_time, n_space);
        if let Some(b) = self.boundary {
            n.boundary = b;
        }
        if let Some(w) = self.width_sigmas {
            n.policy.width_sigmas = w;
        }
        if let Some(c) = self.drift_cfl {
            n.policy.drift_cfl = c;
        }
        if let Some(t) = self.threshold {
            n.policy.threshold = t;
        }
        n
    }

    /// Numerics from `n_time` and `n_space`, both required.
    pub fn resolved(&self) -> Result<Numerics, ConfigError> {
        match (self.n_time, self.n_space) {
            (Some(t), Some(s)) => Ok(self.numerics(t, s)),
            _ => Err(ConfigError::new("numerics.n_time and numerics.n_space are required")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    /// When false, `runtime_ms` is written as 0 so that output is
    /// byte-for-byte reproducible.
    pub timing: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { path: None, timing: true }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub model: Option<HestonParams>,
    pub option: Option<OptionSpec>,
    pub numerics: NumericsConfig,
    pub output: OutputConfig,
}

struct Entry {
    line: usize,
    value: String,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| ConfigError::at(line, format!("expected `key = value`, found `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            check_key(key).map_err(|m| ConfigError::at(line, m))?;
            if value.is_empty() {
                return Err(ConfigError::at(line, format!("missing value for `{key}`")));
            }
            if let Some(prev) = entries.get(key) {
                return Err(ConfigError::at(line, format!("`{key}` already set on line {}", prev.line)));
            }
            entries.insert(
                key.to_string(),
                Entry {
                    line,
                    value: value.to_string(),
                },
            );
        }
        if entries.is_empty() {
            return Err(ConfigError::new("configuration is empty"));
        }
        let fields = Fields(entries);
        Ok(RunConfig {
            model: fields.model()?,
            option: fields.option()?,
            numerics: fields.numerics()?,
            output: fields.output()?,
        })
    }

    pub fn model(&self) -> Result<&HestonParams, ConfigError> {
        self.model.as_ref().ok_or_else(|| ConfigError::new("missing `model` block"))
    }

    pub fn option(&self) -> Result<&OptionSpec, ConfigError> {
        self.option.as_ref().ok_or_else(|| ConfigError::new("missing `option` block"))
    }
}

fn check_key(key: &str) -> Result<(), String> {
    let (section, name) = key.split_once('.').ok_or_else(|| format!("key `{key}` has no section prefix"))?;
    let known: &[&str] = match section {
        "model" => &MODEL_KEYS,
        "option" => &OPTION_KEYS,
        "numerics" => &NUMERICS_KEYS,
        "output" => &OUTPUT_KEYS,
        _ => return Err(format!("unknown section `{section}` in `{key}`")),
    };
    if known.contains(&name) {
        Ok(())
    } else {
        Err(format!("unknown key `{key}`"))
    }
}

struct Fields(BTreeMap<String, Entry>);

impl Fields {
    fn has_section(&self, section: &str) -> bool {
        let prefix = format!("{section}.");
        self.0.keys().any(|k| k.starts_with(&prefix))
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse()
                .map(Some)
                .map_err(|_| ConfigError::at(e.line, format!("cannot parse `{}` for `{key}`", e.value))),
        }
    }

    fn require<T: std::str::FromStr>(&self, key: &str) -> Result<T, ConfigError> {
        self.get(key)?.ok_or_else(|| ConfigError::new(format!("missing `{key}`")))
    }

    /// Parses a value from a fixed word list.
    fn choice<T: Copy>(&self, key: &str, options: &[(&str, T)]) -> Result<Option<T>, ConfigError> {
        let Some(e) = self.0.get(key) else {
            return Ok(None);
        };
        let word = e.value.to_ascii_lowercase();
        options
            .iter()
            .find(|(name, _)| *name == word)
            .map(|&(_, t)| Some(t))
            .ok_or_else(|| {
                let names: Vec<_> = options.iter().map(|(n, _)| *n).collect();
                ConfigError::at(e.line, format!("`{key}` must be one of {}, got `{}`", names.join(", "), e.value))
            })
    }

    fn line_of(&self, key: &str) -> Option<usize> {
        self.0.get(key).map(|e| e.line)
    }

    fn model(&self) -> Result<Option<HestonParams>, ConfigError> {
        if !self.has_section("model") {
            return Ok(None);
        }
        let mut v = [0.0; 8];
        for (slot, name) in v.iter_mut().zip(MODEL_KEYS) {
            *slot = self.require(&format!("model.{name}"))?;
        }
        let [kappa, theta, sigma, rho, r, delta, s0, v0] = v;
        HestonParams::new(kappa, theta, sigma, rho, r, delta, s0, v0)
            .map(Some)
            .map_err(|e| ConfigError::new(format!("model: {e}")))
    }

    fn option(&self) -> Result<Option<OptionSpec>, ConfigError> {
        if !self.has_section("option") {
            return Ok(None);
        }
        let kind = self
            .choice("option.kind", &[("put", OptionKind::Put), ("call", OptionKind::Call)])?
            .ok_or_else(|| ConfigError::new("missing `option.kind`"))?;
        let style = self
            .choice(
                "option.style",
                &[("european", ExerciseStyle::European), ("american", ExerciseStyle::American)],
            )?
            .ok_or_else(|| ConfigError::new("missing `option.style`"))?;
        let strike: f64 = self.require("option.strike")?;
        let maturity: f64 = self.require("option.maturity")?;
        let spec = OptionSpec::new(kind, style, strike, maturity).map_err(|e| ConfigError::new(format!("option: {e}")))?;
        match self.get::<f64>("option.barrier")? {
            None => Ok(Some(spec)),
            Some(level) => spec.with_up_and_out(level).map(Some).map_err(|e| ConfigError {
                line: self.line_of("option.barrier"),
                message: format!("option: {e}"),
            }),
        }
    }

    fn numerics(&self) -> Result<NumericsConfig, ConfigError> {
        let threshold = match self.0.get("numerics.threshold") {
            None => None,
            Some(e) => Some(match e.value.to_ascii_lowercase().as_str() {
                "adaptive" => ThresholdRule::Adaptive,
                "formula" => ThresholdRule::Formula,
                other => ThresholdRule::Fixed(other.parse().map_err(|_| {
                    ConfigError::at(
                        e.line,
                        format!("`numerics.threshold` must be adaptive, formula or a number, got `{}`", e.value),
                    )
                })?),
            }),
        };
        Ok(NumericsConfig {
            n_time: self.get("numerics.n_time")?,
            n_space: self.get("numerics.n_space")?,
            boundary: self.choice(
                "numerics.boundary",
                &[("neumann", Boundary::Neumann), ("dirichlet", Boundary::Dirichlet)],
            )?,
            width_sigmas: self.get("numerics.width_sigmas")?,
            drift_cfl: self.get("numerics.drift_cfl")?,
            threshold,
        })
    }

    fn output(&self) -> Result<OutputConfig, ConfigError> {
        Ok(OutputConfig {
            path: self.get::<String>("output.path")?.map(PathBuf::from),
            timing: self.get("output.timing")?.unwrap_or(true),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = "\
# comment
model.kappa = 2
model.theta = 0.1
model.sigma = 0.5
model.rho = -0.5
model.r = 0.0953101798
model.delta = 0
model.s0 = 100
model.v0 = 0.1

option.kind = put
option.style = American   # case-insensitive
option.strike = 100
option.maturity = 1
numerics.n_time = 50
numerics.n_space = 50
numerics.threshold = 0.02
";

    #[test]
    fn parses_a_complete_file() {
        let c = RunConfig::parse(FULL).unwrap();
        assert_eq!(c.model().unwrap().sigma, 0.5);
        assert_eq!(c.option().unwrap().style, ExerciseStyle::American);
        let n = c.numerics.resolved().unwrap();
        assert_eq!((n.n_time, n.n_space), (50, 50));
        assert_eq!(n.policy.threshold, ThresholdRule::Fixed(0.02));
        assert!(c.output.timing);
    }

    #[test]
    fn empty_file_is_an_error() {
        assert!(RunConfig::parse("").is_err());
        assert!(RunConfig::parse("  # only a comment\n\n").is_err());
    }

    #[test]
    fn unknown_key_reports_its_line() {
        let e = RunConfig::parse("model.kappa = 2\nmodel.kapa = 3\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        assert!(e.message.contains("model.kapa"));
        let e = RunConfig::parse("solver.n = 3\n").unwrap_err();
        assert_eq!(e.line, Some(1));
    }

    #[test]
    fn repeated_key_is_an_error() {
        let e = RunConfig::parse("numerics.n_time = 2\nnumerics.n_time = 3\n").unwrap_err();
        assert_eq!(e.line, Some(2));
    }

    #[test]
    fn bad_value_reports_its_line() {
        let text = FULL.replace("model.rho = -0.5", "model.rho = minus");
        let e = RunConfig::parse(&text).unwrap_err();
        assert_eq!(e.line, Some(5));
        let e = RunConfig::parse("numerics.boundary = periodic\n").unwrap_err();
        assert_eq!(e.line, Some(1));
    }

    #[test]
    fn incomplete_block_is_an_error() {
        let text: String = FULL.lines().filter(|l| !l.starts_with("model.v0")).map(|l| format!("{l}\n")).collect();
        let e = RunConfig::parse(&text).unwrap_err();
        assert!(e.message.contains("model.v0"), "{e}");
    }

    #[test]
    fn missing_separator_is_an_error() {
        let e = RunConfig::parse("model.kappa 2\n").unwrap_err();
        assert_eq!(e.line, Some(1));
    }

    #[test]
    fn invalid_model_values_are_rejected() {
        let text = FULL.replace("model.sigma = 0.5", "model.sigma = -1");
        assert!(RunConfig::parse(&text).is_err());
    }

    #[test]
    fn barrier_is_optional() {
        let c = RunConfig::parse(&format!("{FULL}option.barrier = 130\n")).unwrap();
        assert_eq!(c.option().unwrap().barrier_level(), Some(130.0));
        let e = RunConfig::parse(&format!("{FULL}option.barrier = -5\n")).unwrap_err();
        assert_eq!(e.line, Some(18));
    }
}
