//! Experiment configuration: flat `key = value` files merged with CLI flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use rug::Rational;

use crate::catalog::FunctionSpec;
use crate::error::{Error, Result};
use crate::numerics::{make_context, parse_scalar, PrecisionContext, Scalar, MIN_BITS};

pub const DEFAULT_BITS: u32 = 256;
pub const DEFAULT_GUARD: u32 = 32;
pub const DEFAULT_ORDER: usize = 60;
pub const DEFAULT_DELTA: f64 = 0.1;
pub const MAX_BITS: u32 = 1 << 16;
pub const MAX_GUARD: u32 = 1 << 12;
pub const MAX_ORDER: usize = 4096;
pub const MAX_GRID_POINTS: usize = 10_000;

const KEYS: [&str; 9] = ["experiment", "f", "t", "order", "bits", "guard", "delta", "format", "out"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExperimentId {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
    H,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 8] = [
        ExperimentId::A,
        ExperimentId::B,
        ExperimentId::C,
        ExperimentId::D,
        ExperimentId::E,
        ExperimentId::F,
        ExperimentId::G,
        ExperimentId::H,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::A => "analytic-constancy",
            ExperimentId::B => "rational-boundary",
            ExperimentId::C => "flat-probe",
            ExperimentId::D => "dyadic-bump",
            ExperimentId::E => "lacunary",
            ExperimentId::F => "identities",
            ExperimentId::G => "telescoping",
            ExperimentId::H => "residual-operator",
        }
    }

    /// Probes of unresolved questions: data only, never verdicts.
    pub fn exploratory(self) -> bool {
        matches!(self, ExperimentId::C | ExperimentId::D | ExperimentId::H)
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            ExperimentId::A => 'A',
            ExperimentId::B => 'B',
            ExperimentId::C => 'C',
            ExperimentId::D => 'D',
            ExperimentId::E => 'E',
            ExperimentId::F => 'F',
            ExperimentId::G => 'G',
            ExperimentId::H => 'H',
        };
        write!(f, "EXP-{c}")
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let upper = t.to_ascii_uppercase();
        let letter = upper.strip_prefix("EXP-").unwrap_or(&upper);
        ExperimentId::ALL
            .into_iter()
            .find(|id| id.to_string()[4..] == *letter || id.name() == t)
            .ok_or_else(|| Error::UnknownExperiment(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Config(format!("format must be csv or json, got `{other}`"))),
        }
    }
}

/// Settings given on the command line; each one overrides the file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Experiment id, EXP-A through EXP-H
    #[arg(long)]
    pub experiment: Option<String>,
    /// Function spec, e.g. `exp` or `bumpseries:a=invfact,s=2`
    #[arg(long)]
    pub f: Option<String>,
    /// Point, comma list, or `a:b:n` grid
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<String>,
    /// Series order N
    #[arg(long)]
    pub order: Option<usize>,
    /// Reported precision in bits
    #[arg(long)]
    pub bits: Option<u32>,
    /// Extra working bits
    #[arg(long)]
    pub guard: Option<u32>,
    /// Classification band half-width
    #[arg(long)]
    pub delta: Option<f64>,
    /// csv or json
    #[arg(long)]
    pub format: Option<String>,
    /// Output directory (csv) or file (json)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    /// Function spec text; `None` selects the experiment's default set.
    pub f: Option<String>,
    /// Point or grid text; `None` selects the experiment's default points.
    pub t: Option<String>,
    /// Series order; `None` selects the experiment's default.
    pub order: Option<usize>,
    pub bits: u32,
    pub guard: u32,
    pub delta: f64,
    pub format: Format,
    pub out: PathBuf,
}

impl ExperimentConfig {
    /// Defaults for everything but the experiment id.
    pub fn new(experiment: ExperimentId) -> Self {
        ExperimentConfig {
            experiment,
            f: None,
            t: None,
            order: None,
            bits: DEFAULT_BITS,
            guard: DEFAULT_GUARD,
            delta: DEFAULT_DELTA,
            format: Format::Csv,
            out: PathBuf::from("out"),
        }
    }

    pub fn ctx(&self) -> Result<PrecisionContext> {
        make_context(self.bits, self.guard)
    }

    /// Order used when none is configured.
    pub fn default_order(&self) -> usize {
        match self.experiment {
            ExperimentId::D => 12,
            ExperimentId::E => 16,
            ExperimentId::F => 40,
            _ => DEFAULT_ORDER,
        }
    }

    pub fn effective_order(&self) -> usize {
        self.order.unwrap_or_else(|| self.default_order())
    }

    pub fn spec(&self) -> Result<Option<FunctionSpec>> {
        self.f.as_deref().map(FunctionSpec::parse).transpose()
    }

    pub fn points(&self, ctx: &PrecisionContext) -> Result<Option<Vec<Scalar>>> {
        self.t.as_deref().map(|t| parse_points(t, ctx)).transpose()
    }

    fn validate(&self) -> Result<()> {
        if !(MIN_BITS..=MAX_BITS).contains(&self.bits) {
            return Err(Error::Config(format!(
                "bits = {} outside [{MIN_BITS}, {MAX_BITS}]",
                self.bits
            )));
        }
        if self.guard > MAX_GUARD {
            return Err(Error::Config(format!("guard = {} exceeds cap {MAX_GUARD}", self.guard)));
        }
        if let Some(n) = self.order {
            if n == 0 || n > MAX_ORDER {
                return Err(Error::Config(format!("order = {n} outside [1, {MAX_ORDER}]")));
            }
        }
        if !(0.0..1.0).contains(&self.delta) {
            return Err(Error::Config(format!("delta = {} outside [0, 1)", self.delta)));
        }
        if let Some(f) = &self.f {
            FunctionSpec::parse(f)?;
        }
        if let Some(t) = &self.t {
            parse_points(t, &self.ctx()?)?;
        }
        Ok(())
    }
}

/// Parses `key = value` lines; `#` starts a comment. Unknown or repeated
/// keys are rejected.
pub fn parse_config_text(text: &str) -> Result<Overrides> {
    let mut o = Overrides::default();
    let mut seen = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = |msg: String| Error::Config(format!("line {}: {msg}", lineno + 1));
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| at(format!("expected `key = value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(at(format!("unknown key `{key}`")));
        }
        if seen.contains(&key) {
            return Err(at(format!("repeated key `{key}`")));
        }
        seen.push(key);
        let number = |what: &str| at(format!("{key} = `{value}` is not a valid {what}"));
        match key {
            "experiment" => o.experiment = Some(value.to_string()),
            "f" => o.f = Some(value.to_string()),
            "t" => o.t = Some(value.to_string()),
            "order" => o.order = Some(value.parse().map_err(|_| number("order"))?),
            "bits" => o.bits = Some(value.parse().map_err(|_| number("bit count"))?),
            "guard" => o.guard = Some(value.parse().map_err(|_| number("bit count"))?),
            "delta" => o.delta = Some(value.parse().map_err(|_| number("number"))?),
            "format" => o.format = Some(value.to_string()),
            "out" => o.out = Some(PathBuf::from(value)),
            _ => unreachable!("key list checked above"),
        }
    }
    Ok(o)
}

/// Merges an optional config file with flags (flags win) and fills defaults.
pub fn parse_config(file: Option<&Path>, flags: &Overrides) -> Result<ExperimentConfig> {
    let base = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            parse_config_text(&text)?
        }
        None => Overrides::default(),
    };
    merge(&base, flags)
}

pub fn merge(base: &Overrides, flags: &Overrides) -> Result<ExperimentConfig> {
    let experiment = flags
        .experiment
        .as_ref()
        .or(base.experiment.as_ref())
        .ok_or_else(|| Error::Config("no experiment given".into()))?
        .parse()?;
    let mut cfg = ExperimentConfig::new(experiment);
    cfg.f = flags.f.clone().or_else(|| base.f.clone());
    cfg.t = flags.t.clone().or_else(|| base.t.clone());
    cfg.order = flags.order.or(base.order);
    if let Some(b) = flags.bits.or(base.bits) {
        cfg.bits = b;
    }
    if let Some(g) = flags.guard.or(base.guard) {
        cfg.guard = g;
    }
    if let Some(d) = flags.delta.or(base.delta) {
        cfg.delta = d;
    }
    if let Some(f) = flags.format.as_ref().or(base.format.as_ref()) {
        cfg.format = f.parse()?;
    }
    if let Some(o) = flags.out.as_ref().or(base.out.as_ref()) {
        cfg.out = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Parses a single point, a comma list, or an `a:b:n` grid of `n` evenly
/// spaced points. Grids between exact endpoints of the same unit are exact.
pub fn parse_points(text: &str, ctx: &PrecisionContext) -> Result<Vec<Scalar>> {
    let text = text.trim();
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [a, b, n] = parts[..] else {
            return Err(Error::InvalidArgument(format!("grid `{text}` is not of the form a:b:n")));
        };
        let n: usize = n
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("grid size `{n}` is not a count")))?;
        if n == 0 || n > MAX_GRID_POINTS {
            return Err(Error::InvalidArgument(format!(
                "grid size {n} outside [1, {MAX_GRID_POINTS}]"
            )));
        }
        let a = parse_scalar(a, ctx)?;
        let b = parse_scalar(b, ctx)?;
        return Ok(linspace(&a, &b, n, ctx));
    }
    text.split(',').map(|p| parse_scalar(p, ctx)).collect()
}

fn linspace(a: &Scalar, b: &Scalar, n: usize, ctx: &PrecisionContext) -> Vec<Scalar> {
    if n == 1 {
        return vec![a.clone()];
    }
    let exact = match (a.exact(), b.exact()) {
        (Some(ea), Some(eb)) => eb.add(&ea.neg()).map(|span| (ea.clone(), span)),
        _ => None,
    };
    (0..n)
        .map(|k| match &exact {
            Some((start, span)) => {
                let frac = Rational::from((k as i64, (n - 1) as i64));
                let point = start
                    .add(&span.mul_rational(&frac))
                    .expect("span shares the start's unit");
                Scalar::from_exact(point, ctx)
            }
            None => {
                let wide = ctx.working_bits();
                let span = rug::Float::with_val(wide, b.value() - a.value());
                let step = span * k as u32 / (n - 1) as u32;
                Scalar::from_real(ctx.real(step + a.value()))
            }
        })
        .collect()
}
