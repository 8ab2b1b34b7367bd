//! Plain-text run configuration: `key = value` lines, `#` comments, and
//! `--key value` overrides on the command line.

use pointhartree::solver::SolverConfig;
use pointhartree::spectral::regime;
use pointhartree::verify::DEFAULT_SEED;
use pointhartree::PointInteraction;
use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Flag,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::Flag => write!(f, "command line"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("parse error at line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown key `{key}` ({origin})")]
    UnknownKey { key: String, origin: Origin },
    #[error("cannot parse `{key}` = `{value}` ({origin}): {msg}")]
    Value { key: String, value: String, origin: Origin, msg: String },
    #[error("range error for `{key}`: {msg}")]
    Range { key: String, msg: String },
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Evolve,
    Picard,
    Dispersive,
    Norms,
    Stability,
    Globalize,
    CheckHypotheses,
    Selftest,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Evolve,
        Command::Picard,
        Command::Dispersive,
        Command::Norms,
        Command::Stability,
        Command::Globalize,
        Command::CheckHypotheses,
        Command::Selftest,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Evolve => "evolve",
            Command::Picard => "picard",
            Command::Dispersive => "dispersive",
            Command::Norms => "norms",
            Command::Stability => "stability",
            Command::Globalize => "globalize",
            Command::CheckHypotheses => "check-hypotheses",
            Command::Selftest => "selftest",
        }
    }

    fn evolves(self) -> bool {
        matches!(self, Command::Evolve | Command::Picard | Command::Stability | Command::Globalize | Command::Dispersive)
    }
}

impl FromStr for Command {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| ConfigError::Usage(format!("unknown command `{s}`")))
    }
}

/// A radial profile: the initial datum psi(r) or the interaction potential w(r).
#[derive(Debug, Clone, PartialEq)]
pub enum FieldSpec {
    Gaussian { width: f64, amplitude: f64 },
    Green { lambda: f64 },
    BallIndicator { radius: f64 },
    InversePower { gamma: f64, cutoff: f64 },
    /// CSV with header `r,re,im` (datum) or `r,value` (potential) on the grid nodes.
    File { path: PathBuf },
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub r_max: f64,
    pub n: usize,
    pub k_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicsSpec {
    pub op: PointInteraction,
    pub lambda: f64,
    pub s: f64,
    pub lebesgue: Vec<f64>,
    pub datum: FieldSpec,
    pub potential: FieldSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSpec {
    pub config: SolverConfig,
    /// Picard window; the proof window when absent.
    pub window: Option<f64>,
    pub horizon: f64,
    pub eps: Vec<f64>,
    pub t_min: f64,
    pub t_max: f64,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub prefix: String,
    pub svg: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub grid: GridSpec,
    pub physics: PhysicsSpec,
    pub solver: SolverSpec,
    pub output: OutputSpec,
    pub selftest_criteria: Vec<u8>,
}

const FIELD_KEYS: [&str; 8] = ["kind", "width", "amplitude", "lambda", "radius", "gamma", "cutoff", "path"];

const KEYS: [&str; 28] = [
    "command",
    "grid.r_max",
    "grid.n",
    "grid.k_max",
    "physics.alpha",
    "physics.lambda",
    "physics.s",
    "physics.lebesgue",
    "solver.dt",
    "solver.t_end",
    "solver.picard_tol",
    "solver.picard_max_iter",
    "solver.blowup_threshold",
    "solver.monitor_s",
    "solver.monitor_r",
    "solver.quadrature_nodes_per_window",
    "solver.record_every",
    "solver.window",
    "solver.horizon",
    "solver.eps",
    "solver.t_min",
    "solver.t_max",
    "solver.samples",
    "solver.seed",
    "output.dir",
    "output.prefix",
    "output.svg",
    "selftest.criteria",
];

fn is_known(key: &str) -> bool {
    if KEYS.contains(&key) {
        return true;
    }
    ["physics.datum.", "physics.potential."]
        .iter()
        .any(|p| key.strip_prefix(p).is_some_and(|rest| FIELD_KEYS.contains(&rest)))
}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    origin: Origin,
}

/// Raw key/value pairs, checked against the known keys as they are inserted.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, Entry>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut raw = RawConfig::default();
        for (i, line) in text.lines().enumerate() {
            let n = i + 1;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (k, v) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: n,
                msg: format!("expected `key = value`, found `{content}`"),
            })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(ConfigError::Syntax { line: n, msg: "empty key".into() });
            }
            raw.set(k, v, Origin::Line(n))?;
        }
        Ok(raw)
    }

    pub fn set(&mut self, key: &str, value: &str, origin: Origin) -> Result<(), ConfigError> {
        if !is_known(key) {
            return Err(ConfigError::UnknownKey { key: key.into(), origin });
        }
        self.entries.insert(key.into(), Entry { value: value.into(), origin });
        Ok(())
    }

    /// Applies `--key value` and `--key=value` pairs.
    pub fn apply_flags(&mut self, args: &[String]) -> Result<(), ConfigError> {
        let mut it = args.iter();
        while let Some(a) = it.next() {
            let body = a
                .strip_prefix("--")
                .ok_or_else(|| ConfigError::Usage(format!("expected `--key value`, found `{a}`")))?;
            let (k, v) = match body.split_once('=') {
                Some((k, v)) => (k.to_string(), v.to_string()),
                None => {
                    let v = it.next().ok_or_else(|| ConfigError::Usage(format!("missing value for --{body}")))?;
                    (body.to_string(), v.clone())
                }
            };
            self.set(&k, &v, Origin::Flag)?;
        }
        Ok(())
    }

    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(default),
            Some(e) => e.value.parse::<T>().map_err(|err| self.value_error(key, err.to_string())),
        }
    }

    fn number(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.entries.get(key) {
            None => Ok(default),
            Some(e) => parse_number(&e.value).ok_or_else(|| self.value_error(key, "not a number".into())),
        }
    }

    fn optional_number(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.entries.get(key).map(|_| self.number(key, 0.0)).transpose()
    }

    fn list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(default.to_vec()),
            Some(e) => e
                .value
                .split(',')
                .map(|x| parse_number(x.trim()))
                .collect::<Option<Vec<f64>>>()
                .filter(|v| !v.is_empty())
                .ok_or_else(|| self.value_error(key, "expected a comma-separated list of numbers".into())),
        }
    }

    fn string(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    fn value_error(&self, key: &str, msg: String) -> ConfigError {
        let e = &self.entries[key];
        ConfigError::Value { key: key.into(), value: e.value.clone(), origin: e.origin.clone(), msg }
    }

    fn field(&self, prefix: &str, r_max: f64) -> Result<FieldSpec, ConfigError> {
        let key = |k: &str| format!("{prefix}.{k}");
        let kind = self.string(&key("kind")).unwrap_or("gaussian");
        let spec = match kind {
            "gaussian" => FieldSpec::Gaussian {
                width: self.number(&key("width"), 1.0)?,
                amplitude: self.number(&key("amplitude"), 1.0)?,
            },
            "green" => FieldSpec::Green { lambda: self.number(&key("lambda"), 1.0)? },
            "ball_indicator" => FieldSpec::BallIndicator { radius: self.number(&key("radius"), 1.0)? },
            "inverse_power" => FieldSpec::InversePower {
                gamma: self.number(&key("gamma"), 1.0)?,
                cutoff: self.number(&key("cutoff"), r_max)?,
            },
            "file" => {
                let path = self
                    .string(&key("path"))
                    .ok_or_else(|| ConfigError::Range { key: key("path"), msg: "required for kind = file".into() })?;
                FieldSpec::File { path: PathBuf::from(path) }
            }
            "zero" => FieldSpec::Zero,
            other => return Err(self.value_error(&key("kind"), format!("unknown kind `{other}`"))),
        };
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::Range { key: key(name), msg: format!("must be positive, got {v}") })
            }
        };
        match &spec {
            FieldSpec::Gaussian { width, amplitude } => {
                positive("width", *width)?;
                if !amplitude.is_finite() {
                    return Err(ConfigError::Range { key: key("amplitude"), msg: "must be finite".into() });
                }
            }
            FieldSpec::Green { lambda } => positive("lambda", *lambda)?,
            FieldSpec::BallIndicator { radius } => positive("radius", *radius)?,
            FieldSpec::InversePower { gamma, cutoff } => {
                positive("gamma", *gamma)?;
                positive("cutoff", *cutoff)?;
            }
            FieldSpec::File { path } if !path.is_file() => {
                return Err(ConfigError::Range { key: key("path"), msg: format!("{} does not exist", path.display()) });
            }
            _ => {}
        }
        Ok(spec)
    }

    /// Typed, validated configuration; `command` overrides any `command` key.
    pub fn build(&self, command: Option<Command>) -> Result<RunConfig, ConfigError> {
        let command = match command {
            Some(c) => c,
            None => self.string("command").unwrap_or("evolve").parse()?,
        };
        let range = |key: &str, msg: String| ConfigError::Range { key: key.into(), msg };

        let grid = GridSpec {
            r_max: self.number("grid.r_max", 20.0)?,
            n: self.get("grid.n", 400usize)?,
            k_max: self.optional_number("grid.k_max")?,
        };
        if !(grid.r_max > 0.0 && grid.r_max.is_finite()) {
            return Err(range("grid.r_max", format!("must be positive, got {}", grid.r_max)));
        }
        pointhartree::RadialGrid::new(grid.r_max, grid.n).map_err(|e| range("grid.n", e.to_string()))?;
        if let Some(k) = grid.k_max {
            if !(k > 0.0 && k * grid.r_max / grid.n as f64 <= 1.0) {
                return Err(range("grid.k_max", format!("need 0 < k_max <= 1/h, got {k}")));
            }
        }

        let op = match self.string("physics.alpha") {
            Some("friedrichs") | Some("inf") | Some("infinity") => PointInteraction::Friedrichs,
            _ => PointInteraction::finite(self.number("physics.alpha", 1.0)?),
        };
        if command.evolves() && op.alpha().is_some_and(|a| a < 0.0) {
            return Err(range("physics.alpha", format!("{} needs alpha >= 0", command.name())));
        }
        let lambda = self.number("physics.lambda", 1.0)?;
        if !(lambda > 0.0) {
            return Err(range("physics.lambda", format!("must be positive, got {lambda}")));
        }
        let s = self.number("physics.s", 1.0)?;
        regime(s).map_err(|e| range("physics.s", e.to_string()))?;
        let lebesgue = self.list("physics.lebesgue", &[2.2, 2.5, 18.0 / 7.0])?;
        if let Some(p) = lebesgue.iter().find(|p| !(**p >= 1.0)) {
            return Err(range("physics.lebesgue", format!("exponents must be >= 1, got {p}")));
        }
        let physics = PhysicsSpec {
            op,
            lambda,
            s,
            lebesgue,
            datum: self.field("physics.datum", grid.r_max)?,
            potential: self.field("physics.potential", grid.r_max)?,
        };

        let d = SolverConfig::default();
        let config = SolverConfig {
            dt: self.number("solver.dt", d.dt)?,
            t_end: self.number("solver.t_end", d.t_end)?,
            picard_tol: self.number("solver.picard_tol", d.picard_tol)?,
            picard_max_iter: self.get("solver.picard_max_iter", d.picard_max_iter)?,
            blowup_threshold: self.optional_number("solver.blowup_threshold")?,
            monitor_s: self.number("solver.monitor_s", d.monitor_s)?,
            monitor_r: self.number("solver.monitor_r", d.monitor_r)?,
            quadrature_nodes_per_window: self.get("solver.quadrature_nodes_per_window", d.quadrature_nodes_per_window)?,
            record_every: self.get("solver.record_every", d.record_every)?,
        };
        if !(config.dt > 0.0) {
            return Err(range("solver.dt", format!("must be positive, got {}", config.dt)));
        }
        regime(config.monitor_s).map_err(|e| range("solver.monitor_s", e.to_string()))?;
        config.validate().map_err(|e| range("solver", e.to_string()))?;
        let solver = SolverSpec {
            config,
            window: self.optional_number("solver.window")?,
            horizon: self.number("solver.horizon", 20.0)?,
            eps: self.list("solver.eps", &[1e-2, 1e-3, 1e-4])?,
            t_min: self.number("solver.t_min", 1.0)?,
            t_max: self.number("solver.t_max", 10.0)?,
            samples: self.get("solver.samples", 10usize)?,
            seed: self.get("solver.seed", DEFAULT_SEED)?,
        };
        if let Some(w) = solver.window {
            if !(w > 0.0) {
                return Err(range("solver.window", format!("must be positive, got {w}")));
            }
        }
        if !(solver.horizon > 0.0) {
            return Err(range("solver.horizon", format!("must be positive, got {}", solver.horizon)));
        }
        if solver.eps.iter().any(|e| !(*e > 0.0)) {
            return Err(range("solver.eps", "scales must be positive".into()));
        }
        if !(solver.t_min > 0.0 && solver.t_max > solver.t_min) || solver.samples < 2 {
            return Err(range("solver.t_min", "need 0 < t_min < t_max and at least two samples".into()));
        }

        let output = OutputSpec {
            dir: PathBuf::from(self.string("output.dir").unwrap_or(".")),
            prefix: self.string("output.prefix").unwrap_or(command.name()).to_string(),
            svg: self.get("output.svg", true)?,
        };
        let selftest_criteria = match self.string("selftest.criteria") {
            None => (1..=12).collect(),
            Some(v) => v
                .split(',')
                .map(|x| x.trim().parse::<u8>().ok().filter(|i| (1..=12).contains(i)))
                .collect::<Option<Vec<u8>>>()
                .ok_or_else(|| self.value_error("selftest.criteria", "expected criterion numbers 1..12".into()))?,
        };
        Ok(RunConfig { command, grid, physics, solver, output, selftest_criteria })
    }
}

/// Parses a number; `a/b` fractions are accepted.
fn parse_number(s: &str) -> Option<f64> {
    let v = match s.split_once('/') {
        Some((a, b)) => a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?,
        None => s.parse::<f64>().ok()?,
    };
    v.is_finite().then_some(v)
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    RawConfig::parse(text)?.build(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_is_read() {
        let cfg = parse_config("physics.alpha = 0.5").unwrap();
        assert_eq!(cfg.physics.op, PointInteraction::finite(0.5));
        let cfg = parse_config("physics.alpha = friedrichs # free").unwrap();
        assert_eq!(cfg.physics.op, PointInteraction::Friedrichs);
    }

    #[test]
    fn transition_regularity_is_a_range_error() {
        for text in ["physics.s = 0.5", "physics.s = 1.5", "solver.monitor_s = 0.5"] {
            assert!(matches!(parse_config(text), Err(ConfigError::Range { .. })), "{text}");
        }
    }

    #[test]
    fn negative_dt_is_a_range_error() {
        assert!(matches!(parse_config("solver.dt = -0.1"), Err(ConfigError::Range { key, .. }) if key == "solver.dt"));
    }

    #[test]
    fn unknown_keys_report_their_line() {
        let err = parse_config("# header\n\nphysics.alpha = 1\nphysics.alhpa = 2\n").unwrap_err();
        assert_eq!(err, ConfigError::UnknownKey { key: "physics.alhpa".into(), origin: Origin::Line(4) });
        assert!(matches!(parse_config("grid.n 40"), Err(ConfigError::Syntax { line: 1, .. })));
    }

    #[test]
    fn flags_override_file_values() {
        let mut raw = RawConfig::parse("physics.alpha = 0.5\nsolver.dt = 0.01\n").unwrap();
        raw.apply_flags(&["--physics.alpha".into(), "2".into(), "--solver.t_end=3".into()]).unwrap();
        let cfg = raw.build(Some(Command::Evolve)).unwrap();
        assert_eq!(cfg.physics.op, PointInteraction::finite(2.0));
        assert_eq!(cfg.solver.config.dt, 0.01);
        assert_eq!(cfg.solver.config.t_end, 3.0);
        assert!(raw.apply_flags(&["--nope".into(), "1".into()]).is_err());
    }

    #[test]
    fn field_specs() {
        let cfg = parse_config(
            "physics.potential.kind = inverse_power\nphysics.potential.gamma = 1\nphysics.potential.cutoff = 2\nphysics.datum.kind = green\nphysics.lebesgue = 2.2, 18/7",
        )
        .unwrap();
        assert_eq!(cfg.physics.potential, FieldSpec::InversePower { gamma: 1.0, cutoff: 2.0 });
        assert_eq!(cfg.physics.datum, FieldSpec::Green { lambda: 1.0 });
        assert_eq!(cfg.physics.lebesgue, vec![2.2, 18.0 / 7.0]);
        assert!(matches!(parse_config("physics.potential.kind = bump"), Err(ConfigError::Value { .. })));
        assert!(matches!(parse_config("physics.potential.kind = ball_indicator\nphysics.potential.radius = -1"), Err(ConfigError::Range { .. })));
        assert!(matches!(parse_config("physics.datum.kind = file\nphysics.datum.path = /no/such.csv"), Err(ConfigError::Range { .. })));
    }

    #[test]
    fn evolution_rejects_negative_coupling() {
        assert!(parse_config("physics.alpha = -0.1").is_err());
        assert!(parse_config("command = norms\nphysics.alpha = -0.1").is_ok());
    }
}
