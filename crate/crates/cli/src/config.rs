//! Run configuration: flags, the key-value config file, and their validation.

use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::path::{Path, PathBuf};

use berry_core::oracle::{auto_dimension, DifferentiationPlan, MAX_STEP, MIN_STEP};
use berry_core::path::Segment;
use berry_core::{ParameterPoint, C64};
use serde::{Serialize, Serializer};

use crate::CliError;

pub const DEFAULT_DIM: usize = 128;
pub const DEFAULT_SAMPLES: usize = 4096;
pub const DEFAULT_BUDGET: usize = 16;
pub const DEFAULT_RADIUS: f64 = 0.5;

/// Values as given on the command line or in a config file, before validation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawSettings {
    pub m: Option<String>,
    pub dim: Option<String>,
    pub step: Option<String>,
    pub richardson: Option<String>,
    pub samples: Option<String>,
    pub lambda: Option<String>,
    pub mu: Option<String>,
    pub grid: Option<String>,
    pub out: Option<String>,
    pub format: Option<String>,
    pub source: Option<String>,
    pub loop_file: Option<String>,
    pub radius: Option<String>,
    pub budget: Option<String>,
    pub payload_only: Option<String>,
    pub tolerances: Vec<String>,
}

impl RawSettings {
    /// Parse `key = value` lines; `#` starts a comment.
    pub fn parse_config(text: &str) -> Result<Self, CliError> {
        let mut raw = RawSettings::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("config line {}: expected key = value", n + 1)))?;
            let key = key.trim().trim_start_matches("--").replace('-', "_");
            let value = value.trim().to_string();
            let slot = match key.as_str() {
                "m" => &mut raw.m,
                "dim" => &mut raw.dim,
                "step" | "h" => &mut raw.step,
                "richardson" => &mut raw.richardson,
                "samples" => &mut raw.samples,
                "lambda" => &mut raw.lambda,
                "mu" => &mut raw.mu,
                "grid" => &mut raw.grid,
                "out" => &mut raw.out,
                "format" => &mut raw.format,
                "source" => &mut raw.source,
                "loop" => &mut raw.loop_file,
                "radius" => &mut raw.radius,
                "budget" => &mut raw.budget,
                "payload_only" => &mut raw.payload_only,
                "tolerance" => {
                    raw.tolerances.push(value);
                    continue;
                }
                other => {
                    if let Some(name) = other.strip_prefix("tolerance.") {
                        raw.tolerances.push(format!("{name}={value}"));
                        continue;
                    }
                    return Err(CliError::Config(format!(
                        "config line {}: unknown key '{other}'",
                        n + 1
                    )));
                }
            };
            *slot = Some(value);
        }
        Ok(raw)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse_config(&text)
    }

    /// Fill every unset field of `self` from `base`; tolerances from `base` come first.
    pub fn over(mut self, base: RawSettings) -> Self {
        macro_rules! fill {
            ($($f:ident),*) => { $( if self.$f.is_none() { self.$f = base.$f; } )* };
        }
        fill!(
            m,
            dim,
            step,
            richardson,
            samples,
            lambda,
            mu,
            grid,
            out,
            format,
            source,
            loop_file,
            radius,
            budget,
            payload_only
        );
        let mut tolerances = base.tolerances;
        tolerances.append(&mut self.tolerances);
        self.tolerances = tolerances;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DimSpec {
    Fixed(usize),
    Auto,
}

impl Serialize for DimSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            DimSpec::Fixed(d) => s.serialize_u64(*d as u64),
            DimSpec::Auto => s.serialize_str("auto"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GridSpec {
    Default,
    File(PathBuf),
    Point(ParameterPoint),
}

impl Serialize for GridSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            GridSpec::Default => s.serialize_str("default"),
            GridSpec::File(p) => s.serialize_str(&p.display().to_string()),
            GridSpec::Point(p) => p.serialize(s),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Closed,
    Numeric,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Closed => "closed",
            Source::Numeric => "numeric",
        })
    }
}

/// Pass/fail thresholds of the verification report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    pub connection: f64,
    pub curvature: f64,
    pub f_squared: f64,
    pub bch: f64,
    pub derivative: f64,
    pub commutator: f64,
    pub hermiticity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            connection: 1e-6,
            curvature: 1e-5,
            f_squared: 1e-5,
            bch: 1e-8,
            derivative: 1e-7,
            commutator: 1e-12,
            hermiticity: 1e-9,
        }
    }
}

impl Tolerances {
    pub fn set(&mut self, assignment: &str) -> Result<(), CliError> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("tolerance '{assignment}' must be key=value")))?;
        let value: f64 = parse_number(value.trim(), "tolerance")?;
        if !(value > 0.0 && value.is_finite()) {
            return Err(CliError::Config(format!("tolerance {key} must be positive")));
        }
        let slot = match key.trim() {
            "connection" => &mut self.connection,
            "curvature" => &mut self.curvature,
            "f_squared" => &mut self.f_squared,
            "bch" => &mut self.bch,
            "derivative" => &mut self.derivative,
            "commutator" => &mut self.commutator,
            "hermiticity" => &mut self.hermiticity,
            other => return Err(CliError::Config(format!("unknown tolerance '{other}'"))),
        };
        *slot = value;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub m: usize,
    #[serde(rename = "D")]
    pub dim: DimSpec,
    pub h: f64,
    pub richardson: bool,
    pub samples: usize,
    pub grid: GridSpec,
    /// Set when the grid was chosen explicitly rather than by default.
    #[serde(skip)]
    pub grid_explicit: bool,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    pub format: Format,
    pub source: Source,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loop_file: Option<PathBuf>,
    pub radius: f64,
    pub budget: usize,
    pub tolerances: Tolerances,
    #[serde(skip)]
    pub payload_only: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            m: 2,
            dim: DimSpec::Fixed(DEFAULT_DIM),
            h: berry_core::oracle::DEFAULT_STEP,
            richardson: false,
            samples: DEFAULT_SAMPLES,
            grid: GridSpec::Default,
            grid_explicit: false,
            out: None,
            format: Format::Json,
            source: Source::Closed,
            loop_file: None,
            radius: DEFAULT_RADIUS,
            budget: DEFAULT_BUDGET,
            tolerances: Tolerances::default(),
            payload_only: false,
        }
    }
}

fn parse_number<T: std::str::FromStr>(s: &str, what: &str) -> Result<T, CliError> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Config(format!("invalid {what}: '{s}'")))
}

fn parse_bool(s: &str, what: &str) -> Result<bool, CliError> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(CliError::Config(format!("invalid {what}: '{s}'"))),
    }
}

/// Parse `re`, `re+imi`, `re-imi`, `imi`, `i`, `-i`.
pub fn parse_complex(s: &str) -> Result<C64, CliError> {
    let err = || CliError::Config(format!("invalid complex number '{s}' (expected re+imi)"));
    let t: String = s
        .chars()
        .filter(|c| !c.is_whitespace())
        .collect::<String>()
        .to_ascii_lowercase();
    if t.is_empty() {
        return Err(err());
    }
    let Some(body) = t.strip_suffix('i') else {
        return t
            .parse::<f64>()
            .ok()
            .filter(|re| re.is_finite())
            .map(|re| C64::new(re, 0.0))
            .ok_or_else(err);
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && bytes[k - 1] != b'e');
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let re: f64 = re.parse().map_err(|_| err())?;
    let im: f64 = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        other => other.parse().map_err(|_| err())?,
    };
    let z = C64::new(re, im);
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(err())
    }
}

impl RunConfig {
    pub fn from_raw(raw: &RawSettings) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(m) = &raw.m {
            cfg.m = parse_number(m, "--m")?;
        }
        if cfg.m == 0 {
            return Err(CliError::Config("--m must be at least 1".into()));
        }
        if let Some(d) = &raw.dim {
            cfg.dim = if d.trim().eq_ignore_ascii_case("auto") {
                DimSpec::Auto
            } else {
                DimSpec::Fixed(parse_number(d, "--dim")?)
            };
        }
        if let DimSpec::Fixed(d) = cfg.dim {
            let min = (4 * cfg.m).max(8);
            if d < min {
                return Err(CliError::Config(format!(
                    "--dim {d} too small for m = {}; need at least {min}",
                    cfg.m
                )));
            }
        }
        if let Some(h) = &raw.step {
            cfg.h = parse_number(h, "--step")?;
        }
        if !(MIN_STEP..=MAX_STEP).contains(&cfg.h) {
            return Err(CliError::Config(format!("--step must lie in [{MIN_STEP}, {MAX_STEP}]")));
        }
        if let Some(r) = &raw.richardson {
            cfg.richardson = parse_bool(r, "--richardson")?;
        }
        if let Some(s) = &raw.samples {
            cfg.samples = parse_number(s, "--samples")?;
        }
        if cfg.samples == 0 {
            return Err(CliError::Config("--samples must be positive".into()));
        }
        if raw.lambda.is_some() || raw.mu.is_some() {
            let lambda = raw
                .lambda
                .as_deref()
                .map(parse_complex)
                .transpose()?
                .unwrap_or_default();
            let mu = raw.mu.as_deref().map(parse_complex).transpose()?.unwrap_or_default();
            cfg.grid = GridSpec::Point(ParameterPoint::new(lambda, mu));
            cfg.grid_explicit = true;
        }
        if let Some(g) = &raw.grid {
            if raw.lambda.is_some() || raw.mu.is_some() {
                return Err(CliError::Config("--grid cannot be combined with --lambda/--mu".into()));
            }
            cfg.grid = if g == "default" {
                GridSpec::Default
            } else {
                GridSpec::File(PathBuf::from(g))
            };
            cfg.grid_explicit = true;
        }
        cfg.out = raw.out.as_ref().map(PathBuf::from);
        if let Some(f) = &raw.format {
            cfg.format = match f.to_ascii_lowercase().as_str() {
                "json" => Format::Json,
                "csv" => Format::Csv,
                other => return Err(CliError::Config(format!("unknown --format '{other}'"))),
            };
        }
        if let Some(s) = &raw.source {
            cfg.source = match s.to_ascii_lowercase().as_str() {
                "closed" => Source::Closed,
                "numeric" => Source::Numeric,
                other => return Err(CliError::Config(format!("unknown --source '{other}'"))),
            };
        }
        cfg.loop_file = raw.loop_file.as_ref().map(PathBuf::from);
        if let Some(r) = &raw.radius {
            cfg.radius = parse_number(r, "--radius")?;
            if !cfg.radius.is_finite() {
                return Err(CliError::Config("--radius must be finite".into()));
            }
        }
        if let Some(b) = &raw.budget {
            cfg.budget = parse_number(b, "--budget")?;
        }
        if let Some(p) = &raw.payload_only {
            cfg.payload_only = parse_bool(p, "--payload-only")?;
        }
        for t in &raw.tolerances {
            cfg.tolerances.set(t)?;
        }
        Ok(cfg)
    }

    pub fn plan(&self) -> DifferentiationPlan {
        DifferentiationPlan {
            h: self.h,
            richardson: self.richardson,
        }
    }

    /// Truncation dimension for a point, resolving `auto`.
    pub fn dim_for(&self, p: ParameterPoint) -> usize {
        match self.dim {
            DimSpec::Fixed(d) => d,
            DimSpec::Auto => auto_dimension(p, self.m),
        }
    }

    pub fn points(&self) -> Result<Vec<ParameterPoint>, CliError> {
        match &self.grid {
            GridSpec::Default => Ok(default_grid()),
            GridSpec::Point(p) => Ok(vec![*p]),
            GridSpec::File(path) => load_grid(path),
        }
    }

    pub fn loop_segments(&self) -> Result<Option<Vec<Segment>>, CliError> {
        let Some(path) = &self.loop_file else {
            return Ok(None);
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read loop {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| CliError::Config(format!("invalid loop file {}: {e}", path.display())))
    }
}

/// `|λ|, |μ| ∈ {0, 0.25, 0.5, 0.75, 1}` with phases `0` and `π/4`: 81 points.
pub fn default_grid() -> Vec<ParameterPoint> {
    let mut values = vec![C64::new(0.0, 0.0)];
    for r in [0.25, 0.5, 0.75, 1.0] {
        for phase in [0.0, FRAC_PI_4] {
            values.push(C64::from_polar(r, phase));
        }
    }
    let mut out = Vec::with_capacity(values.len() * values.len());
    for &lambda in &values {
        for &mu in &values {
            out.push(ParameterPoint::new(lambda, mu));
        }
    }
    out
}

/// Default base points for holonomy-algebra and curvature-span computations.
pub fn default_centers() -> Vec<ParameterPoint> {
    vec![ParameterPoint::from_real(0.3, 0.4), ParameterPoint::from_real(0.1, 0.8)]
}

/// A JSON array of points (`.json`), or text lines `lambda mu` in `re+imi` form.
pub fn load_grid(path: &Path) -> Result<Vec<ParameterPoint>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read grid {}: {e}", path.display())))?;
    let points = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str::<Vec<ParameterPoint>>(&text)
            .map_err(|e| CliError::Config(format!("invalid grid file {}: {e}", path.display())))?
    } else {
        parse_grid_text(&text)?
    };
    if points.is_empty() {
        return Err(CliError::Config(format!("grid file {} has no points", path.display())));
    }
    Ok(points)
}

pub fn parse_grid_text(text: &str) -> Result<Vec<ParameterPoint>, CliError> {
    let mut points = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|f| !f.is_empty())
            .collect();
        if fields.len() != 2 {
            return Err(CliError::Config(format!("grid line {}: expected 'lambda mu'", n + 1)));
        }
        points.push(ParameterPoint::new(
            parse_complex(fields[0])?,
            parse_complex(fields[1])?,
        ));
    }
    Ok(points)
}

/// Settings without any flag, for library callers.
pub fn settings(pairs: &[(&str, &str)]) -> Result<RunConfig, CliError> {
    let text: String = pairs.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
    RunConfig::from_raw(&RawSettings::parse_config(&text)?)
}
