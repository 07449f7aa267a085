//! Flat `key=value` configuration: one pair per line, `#` starts a comment,
//! lists are comma-separated.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use avsdf_core::tracking::{ManifoldEstimator, TrackOptions};
use avsdf_core::{
    DephaseConfig, DephaseMode, Doa, ForgettingSpec, PpsCoeffs, SweepConfig, TrackingExperiment,
    Trajectory,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("override `{arg}`: {reason}")]
    Override { arg: String, reason: String },
    #[error("{field}: {reason}")]
    Validation { field: String, reason: String },
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        field: field.to_string(),
        reason: reason.into(),
    }
}

/// Raw key/value pairs before typing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

fn split_pair(s: &str) -> Result<(String, String), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| "expected key=value".to_string())?;
    let k = k.trim();
    if k.is_empty() || !k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(format!("bad key `{k}`"));
    }
    Ok((k.to_string(), v.trim().to_string()))
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (k, v) =
                split_pair(content).map_err(|reason| ConfigError::Parse { line, reason })?;
            if entries.insert(k.clone(), v).is_some() {
                return Err(ConfigError::Parse {
                    line,
                    reason: format!("duplicate key `{k}`"),
                });
            }
        }
        Ok(Self { entries })
    }

    /// Applies command-line `key=value` overrides; later ones win.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<(), ConfigError> {
        for arg in overrides {
            let arg = arg.as_ref();
            let (k, v) = split_pair(arg).map_err(|reason| ConfigError::Override {
                arg: arg.to_string(),
                reason,
            })?;
            self.entries.insert(k, v);
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn reject_unknown(&self, known: &[&str]) -> Result<(), ConfigError> {
        match self.entries.keys().find(|k| !known.contains(&k.as_str())) {
            Some(k) => Err(invalid(k, "unknown key")),
            None => Ok(()),
        }
    }

    fn required(&self, key: &str) -> Result<&str, ConfigError> {
        self.get(key)
            .ok_or_else(|| invalid(key, "missing required key"))
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        self.get(key).map_or(Ok(default), |v| parse_f64(key, v))
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        self.get(key).map_or(Ok(default), |v| parse_usize(key, v))
    }

    fn u64_or(&self, key: &str, default: u64) -> Result<u64, ConfigError> {
        self.get(key).map_or(Ok(default), |v| {
            v.parse()
                .map_err(|_| invalid(key, format!("`{v}` is not an unsigned integer")))
        })
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = v
        .parse()
        .map_err(|_| invalid(key, format!("`{v}` is not a number")))?;
    if x.is_nan() {
        return Err(invalid(key, "NaN is not allowed"));
    }
    Ok(x)
}

fn parse_finite(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x = parse_f64(key, v)?;
    if !x.is_finite() {
        return Err(invalid(key, "must be finite"));
    }
    Ok(x)
}

fn parse_usize(key: &str, v: &str) -> Result<usize, ConfigError> {
    v.parse()
        .map_err(|_| invalid(key, format!("`{v}` is not a count")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    if v.is_empty() {
        return Err(invalid(key, "empty list"));
    }
    v.split(',')
        .map(|item| parse_f64(key, item.trim()))
        .collect()
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_coeffs(raw: &RawConfig) -> Result<PpsCoeffs, ConfigError> {
    let b = parse_list("b", raw.required("b")?)?;
    if b.iter().any(|x| !x.is_finite()) {
        return Err(invalid("b", "coefficients must be finite"));
    }
    PpsCoeffs::new(b).map_err(|e| invalid("b", e.to_string()))
}

fn parse_reference(raw: &RawConfig) -> Result<DephaseMode, ConfigError> {
    match raw.get("reference").unwrap_or("4") {
        "sum" => Ok(DephaseMode::Sum),
        v => match v.parse::<usize>() {
            Ok(i @ 1..=4) => Ok(DephaseMode::SingleRow(i)),
            _ => Err(invalid(
                "reference",
                format!("`{v}` is not 1, 2, 3, 4 or sum"),
            )),
        },
    }
}

fn reference_str(mode: DephaseMode) -> String {
    match mode {
        DephaseMode::SingleRow(i) => i.to_string(),
        DephaseMode::Sum => "sum".to_string(),
    }
}

fn positive_ts(raw: &RawConfig) -> Result<f64, ConfigError> {
    let ts = raw.f64_or("ts", 1.0)?;
    if !(ts > 0.0 && ts.is_finite()) {
        return Err(invalid("ts", "must be > 0"));
    }
    Ok(ts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    pub sweep: SweepConfig,
    /// Angles as given, so the echo reparses to identical radians.
    pub alpha_deg: f64,
    pub beta_deg: f64,
}

const SWEEP_KEYS: &[&str] = &[
    "alpha_deg",
    "beta_deg",
    "b",
    "snapshots",
    "snr_db",
    "trials",
    "seed",
    "ts",
    "dephase_delay",
    "pencil_delay",
    "reference",
];

impl SweepSettings {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        raw.reject_unknown(SWEEP_KEYS)?;
        let alpha = parse_finite("alpha_deg", raw.required("alpha_deg")?)?;
        let beta = parse_finite("beta_deg", raw.required("beta_deg")?)?;
        let doa =
            Doa::from_degrees(alpha, beta).map_err(|e| invalid("alpha_deg", e.to_string()))?;
        let coeffs = parse_coeffs(raw)?;
        let snapshots = parse_usize("snapshots", raw.required("snapshots")?)?;
        let grid = parse_list("snr_db", raw.required("snr_db")?)?;

        let mut sweep = SweepConfig::new(doa, coeffs, snapshots, grid);
        sweep.trials = raw.usize_or("trials", sweep.trials)?;
        sweep.seed = raw.u64_or("seed", sweep.seed)?;
        sweep.ts = positive_ts(raw)?;
        sweep.pencil_delay = raw.usize_or("pencil_delay", sweep.pencil_delay)?;
        let delay = raw.usize_or("dephase_delay", sweep.dephase.delay_samples)?;
        sweep.dephase = DephaseConfig::new(delay, parse_reference(raw)?)
            .map_err(|e| invalid("dephase_delay", e.to_string()))?;
        sweep
            .validate()
            .map_err(|e| invalid("sweep", e.to_string()))?;
        Ok(Self {
            sweep,
            alpha_deg: alpha,
            beta_deg: beta,
        })
    }

    pub fn echo(&self) -> String {
        let s = &self.sweep;
        let mut out = String::new();
        let _ = writeln!(out, "alpha_deg={}", self.alpha_deg);
        let _ = writeln!(out, "beta_deg={}", self.beta_deg);
        let _ = writeln!(out, "b={}", join(s.coeffs.coeffs()));
        let _ = writeln!(out, "snapshots={}", s.n_snapshots);
        let _ = writeln!(out, "snr_db={}", join(&s.snr_db_grid));
        let _ = writeln!(out, "trials={}", s.trials);
        let _ = writeln!(out, "seed={}", s.seed);
        let _ = writeln!(out, "ts={}", s.ts);
        let _ = writeln!(out, "dephase_delay={}", s.dephase.delay_samples);
        let _ = writeln!(out, "pencil_delay={}", s.pencil_delay);
        let _ = writeln!(out, "reference={}", reference_str(s.dephase.mode));
        out
    }
}

/// Which trackers a `track` run compares.
#[derive(Debug, Clone, PartialEq)]
pub enum RunSet {
    /// MFF(0.9, 0.8, 0.7) and SFF at 0.9, 0.8, 0.7, each without and with
    /// pre-processing.
    Comparison,
    Single {
        spec: ForgettingSpec,
        preprocess: Preprocess,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preprocess {
    Off,
    On,
    Both,
}

impl Preprocess {
    fn as_str(self) -> &'static str {
        match self {
            Self::Off => "false",
            Self::On => "true",
            Self::Both => "both",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackSettings {
    pub experiment: TrackingExperiment,
    pub runs: RunSet,
    pub estimator: ManifoldEstimator,
    pub reference: DephaseMode,
    /// `[alpha0, beta0, amplitude]` as given.
    pub angles_deg: [f64; 3],
}

const TRACK_KEYS: &[&str] = &[
    "alpha0_deg",
    "beta0_deg",
    "omega_alpha",
    "omega_beta",
    "amplitude_deg",
    "b",
    "samples",
    "ts",
    "sigma2",
    "seed",
    "burn_in",
    "estimator",
    "reference",
    "method",
    "lambda",
    "preprocess",
];

impl TrackSettings {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        raw.reject_unknown(TRACK_KEYS)?;
        let alpha0 = parse_finite("alpha0_deg", raw.required("alpha0_deg")?)?;
        let beta0 = parse_finite("beta0_deg", raw.required("beta0_deg")?)?;
        let omega_alpha = parse_finite("omega_alpha", raw.required("omega_alpha")?)?;
        let omega_beta = parse_finite("omega_beta", raw.required("omega_beta")?)?;
        let amplitude_deg = match raw.get("amplitude_deg") {
            Some(v) => parse_finite("amplitude_deg", v)?,
            None => 1f64.to_degrees(),
        };
        let trajectory = Trajectory::new(
            alpha0.to_radians(),
            beta0.to_radians(),
            omega_alpha,
            omega_beta,
        )
        .with_amplitude(amplitude_deg.to_radians());
        let coeffs = parse_coeffs(raw)?;
        let samples = parse_usize("samples", raw.required("samples")?)?;
        if samples <= coeffs.degree() {
            return Err(invalid(
                "samples",
                format!("need more than {} samples", coeffs.degree()),
            ));
        }

        let mut experiment = TrackingExperiment::new(trajectory, coeffs, samples);
        experiment.ts = positive_ts(raw)?;
        experiment.sigma2 = raw.f64_or("sigma2", experiment.sigma2)?;
        if !(experiment.sigma2 >= 0.0 && experiment.sigma2.is_finite()) {
            return Err(invalid("sigma2", "must be >= 0"));
        }
        experiment.seed = raw.u64_or("seed", experiment.seed)?;
        experiment.burn_in = raw.usize_or("burn_in", experiment.burn_in)?;

        let estimator = match raw.get("estimator").unwrap_or("literal") {
            "literal" => ManifoldEstimator::Literal,
            "ratio" => ManifoldEstimator::Ratio,
            v => {
                return Err(invalid(
                    "estimator",
                    format!("`{v}` is not literal or ratio"),
                ))
            }
        };
        let reference = parse_reference(raw)?;
        let runs = parse_runs(raw)?;
        experiment.runs = expand_runs(&runs, estimator, reference);
        Ok(Self {
            experiment,
            runs,
            estimator,
            reference,
            angles_deg: [alpha0, beta0, amplitude_deg],
        })
    }

    pub fn echo(&self) -> String {
        let e = &self.experiment;
        let t = &e.trajectory;
        let mut out = String::new();
        let [alpha0, beta0, amplitude] = self.angles_deg;
        let _ = writeln!(out, "alpha0_deg={alpha0}");
        let _ = writeln!(out, "beta0_deg={beta0}");
        let _ = writeln!(out, "omega_alpha={}", t.omega_alpha);
        let _ = writeln!(out, "omega_beta={}", t.omega_beta);
        let _ = writeln!(out, "amplitude_deg={amplitude}");
        let _ = writeln!(out, "b={}", join(e.coeffs.coeffs()));
        let _ = writeln!(out, "samples={}", e.samples);
        let _ = writeln!(out, "ts={}", e.ts);
        let _ = writeln!(out, "sigma2={}", e.sigma2);
        let _ = writeln!(out, "seed={}", e.seed);
        let _ = writeln!(out, "burn_in={}", e.burn_in);
        let est = match self.estimator {
            ManifoldEstimator::Literal => "literal",
            ManifoldEstimator::Ratio => "ratio",
        };
        let _ = writeln!(out, "estimator={est}");
        let _ = writeln!(out, "reference={}", reference_str(self.reference));
        match &self.runs {
            RunSet::Comparison => {
                let _ = writeln!(out, "# trackers: MFF(0.9,0.8,0.7), SFF 0.9, 0.8, 0.7; each without and with pre-processing");
            }
            RunSet::Single { spec, preprocess } => {
                let _ = writeln!(out, "method={}", spec.method());
                let _ = writeln!(out, "lambda={}", join(&spec.lambdas()));
                let _ = writeln!(out, "preprocess={}", preprocess.as_str());
            }
        }
        out
    }
}

fn parse_runs(raw: &RawConfig) -> Result<RunSet, ConfigError> {
    let Some(method) = raw.get("method") else {
        for key in ["lambda", "preprocess"] {
            if raw.get(key).is_some() {
                return Err(invalid(key, "only valid together with `method`"));
            }
        }
        return Ok(RunSet::Comparison);
    };
    let lambdas = parse_list("lambda", raw.required("lambda")?)?;
    let spec = match method {
        "SFF" | "sff" => match lambdas[..] {
            [l] => ForgettingSpec::sff(l),
            _ => return Err(invalid("lambda", "SFF takes exactly one forgetting factor")),
        },
        "MFF" | "mff" => match lambdas[..] {
            [a, b, c] => ForgettingSpec::mff([a, b, c]),
            _ => {
                return Err(invalid(
                    "lambda",
                    "MFF takes exactly three forgetting factors",
                ))
            }
        },
        v => return Err(invalid("method", format!("`{v}` is not SFF or MFF"))),
    }
    .map_err(|e| invalid("lambda", e.to_string()))?;
    let preprocess = match raw.get("preprocess").unwrap_or("both") {
        "true" => Preprocess::On,
        "false" => Preprocess::Off,
        "both" => Preprocess::Both,
        v => {
            return Err(invalid(
                "preprocess",
                format!("`{v}` is not true, false or both"),
            ))
        }
    };
    Ok(RunSet::Single { spec, preprocess })
}

fn expand_runs(
    runs: &RunSet,
    estimator: ManifoldEstimator,
    reference: DephaseMode,
) -> Vec<TrackOptions> {
    let opts = |spec, pre| TrackOptions {
        spec,
        preprocess: pre,
        estimator,
        mode: reference,
    };
    match *runs {
        RunSet::Comparison => avsdf_core::montecarlo::comparison_runs(estimator)
            .into_iter()
            .map(|o| opts(o.spec, o.preprocess))
            .collect(),
        RunSet::Single { spec, preprocess } => match preprocess {
            Preprocess::Off => vec![opts(spec, false)],
            Preprocess::On => vec![opts(spec, true)],
            Preprocess::Both => vec![opts(spec, false), opts(spec, true)],
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrbSettings {
    pub alpha: f64,
    pub snapshots: usize,
    pub sigma2: f64,
}

impl CrbSettings {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        raw.reject_unknown(&["alpha_deg", "snapshots", "sigma2"])?;
        let alpha_deg = parse_finite("alpha_deg", raw.required("alpha_deg")?)?;
        if !(0.0..=180.0).contains(&alpha_deg) {
            return Err(invalid("alpha_deg", "must be in [0, 180]"));
        }
        let snapshots = parse_usize("snapshots", raw.required("snapshots")?)?;
        if snapshots == 0 {
            return Err(invalid("snapshots", "must be >= 1"));
        }
        let sigma2 = parse_finite("sigma2", raw.required("sigma2")?)?;
        if sigma2 < 0.0 {
            return Err(invalid("sigma2", "must be >= 0"));
        }
        Ok(Self {
            alpha: (alpha_deg * PI / 180.0).min(PI),
            snapshots,
            sigma2,
        })
    }
}
