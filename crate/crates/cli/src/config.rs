//! Run configuration: a `key = value` file merged with command-line flags.
//!
//! The file uses the model's config format extended with run keys. Every key
//! has a flag of the same name, and flags win over the file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use preypred::{ModelParams, MortalitySchedule, State};

use crate::error::CliError;

pub const MODEL_KEYS: [&str; 9] = ["r", "K", "a", "eps", "omega", "m", "m_a0", "m_b0", "m_rate"];
pub const RUN_KEYS: [&str; 13] = [
    "integrator",
    "dt",
    "horizon",
    "sample_stride",
    "seed",
    "n_runs",
    "x0",
    "y0",
    "hybrid_threshold",
    "omegas",
    "checkpoints",
    "m_lo",
    "m_hi",
];
const SCHEDULE_KEYS: [&str; 3] = ["m_a0", "m_b0", "m_rate"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Integrator {
    Jump,
    Diffusion,
    Hybrid,
    Ode,
}

impl Integrator {
    pub fn name(self) -> &'static str {
        match self {
            Integrator::Jump => "jump",
            Integrator::Diffusion => "diffusion",
            Integrator::Hybrid => "hybrid",
            Integrator::Ode => "ode",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        <Self as ValueEnum>::from_str(s, false).ok()
    }
}

/// Flags shared by every subcommand; each mirrors a config key.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// Config file of `key = value` lines (`#` starts a comment).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,

    #[arg(long, global = true, help_heading = "Model")]
    pub r: Option<f64>,
    #[arg(long = "K", global = true, help_heading = "Model")]
    pub k: Option<f64>,
    #[arg(long, global = true, help_heading = "Model")]
    pub a: Option<f64>,
    #[arg(long, global = true, help_heading = "Model")]
    pub eps: Option<f64>,
    /// Individuals per unit of prey.
    #[arg(long, global = true, help_heading = "Model")]
    pub omega: Option<f64>,
    /// Constant predator mortality.
    #[arg(long, global = true, help_heading = "Model")]
    pub m: Option<f64>,
    /// Cosine mortality `m_a0 + m_b0 cos(m_rate t)`.
    #[arg(long = "m_a0", global = true, help_heading = "Model")]
    pub m_a0: Option<f64>,
    #[arg(long = "m_b0", global = true, help_heading = "Model")]
    pub m_b0: Option<f64>,
    #[arg(long = "m_rate", global = true, help_heading = "Model")]
    pub m_rate: Option<f64>,

    #[arg(long, global = true, value_enum, help_heading = "Run")]
    pub integrator: Option<Integrator>,
    #[arg(long, global = true, help_heading = "Run")]
    pub dt: Option<f64>,
    #[arg(long, global = true, help_heading = "Run")]
    pub horizon: Option<f64>,
    #[arg(long = "sample_stride", global = true, help_heading = "Run")]
    pub sample_stride: Option<f64>,
    /// Master seed; run `i` uses `seed ^ splitmix64(i)`.
    #[arg(long, global = true, help_heading = "Run")]
    pub seed: Option<u64>,
    #[arg(long = "n_runs", global = true, help_heading = "Run")]
    pub n_runs: Option<u64>,
    #[arg(long, global = true, help_heading = "Run")]
    pub x0: Option<f64>,
    #[arg(long, global = true, help_heading = "Run")]
    pub y0: Option<f64>,
    /// Prey count below which the hybrid integrator uses exact jumps.
    #[arg(long = "hybrid_threshold", global = true, help_heading = "Run")]
    pub hybrid_threshold: Option<u64>,
    /// Comma-separated population scales.
    #[arg(long, global = true, value_delimiter = ',', help_heading = "Run")]
    pub omegas: Option<Vec<f64>>,
    /// Comma-separated checkpoint times.
    #[arg(long, global = true, value_delimiter = ',', help_heading = "Run")]
    pub checkpoints: Option<Vec<f64>>,
    #[arg(long = "m_lo", global = true, help_heading = "Run")]
    pub m_lo: Option<f64>,
    #[arg(long = "m_hi", global = true, help_heading = "Run")]
    pub m_hi: Option<f64>,
}

fn list(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

impl ConfigArgs {
    /// Flag values as config entries, in canonical text form.
    fn entries(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut put = |k: &'static str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k, v));
            }
        };
        put("r", self.r.map(|v| v.to_string()));
        put("K", self.k.map(|v| v.to_string()));
        put("a", self.a.map(|v| v.to_string()));
        put("eps", self.eps.map(|v| v.to_string()));
        put("omega", self.omega.map(|v| v.to_string()));
        put("m", self.m.map(|v| v.to_string()));
        put("m_a0", self.m_a0.map(|v| v.to_string()));
        put("m_b0", self.m_b0.map(|v| v.to_string()));
        put("m_rate", self.m_rate.map(|v| v.to_string()));
        put("integrator", self.integrator.map(|v| v.name().to_string()));
        put("dt", self.dt.map(|v| v.to_string()));
        put("horizon", self.horizon.map(|v| v.to_string()));
        put("sample_stride", self.sample_stride.map(|v| v.to_string()));
        put("seed", self.seed.map(|v| v.to_string()));
        put("n_runs", self.n_runs.map(|v| v.to_string()));
        put("x0", self.x0.map(|v| v.to_string()));
        put("y0", self.y0.map(|v| v.to_string()));
        put("hybrid_threshold", self.hybrid_threshold.map(|v| v.to_string()));
        put("omegas", self.omegas.as_deref().map(list));
        put("checkpoints", self.checkpoints.as_deref().map(list));
        put("m_lo", self.m_lo.map(|v| v.to_string()));
        put("m_hi", self.m_hi.map(|v| v.to_string()));
        out
    }
}

/// Parses a config file into `(key, value)` pairs, checking keys and
/// duplicates with line numbers.
pub fn parse_file(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| CliError::Validation(format!("config line {line}: expected `key = value`, got `{body}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if !MODEL_KEYS.contains(&key) && !RUN_KEYS.contains(&key) {
            return Err(CliError::Validation(format!("config line {line}: unknown key `{key}`")));
        }
        if map.insert(key.to_string(), value.to_string()).is_some() {
            return Err(CliError::Validation(format!("config line {line}: duplicate key `{key}`")));
        }
    }
    Ok(map)
}

/// Merged settings before defaults are applied.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    /// File values overridden by flags. A mortality flag replaces the whole
    /// schedule from the file.
    pub fn merge(file: BTreeMap<String, String>, flags: &ConfigArgs) -> Self {
        let mut values = file;
        let entries = flags.entries();
        if entries.iter().any(|(k, _)| *k == "m") {
            for k in SCHEDULE_KEYS {
                values.remove(k);
            }
        }
        if entries.iter().any(|(k, _)| SCHEDULE_KEYS.contains(k)) {
            values.remove("m");
        }
        for (k, v) in entries {
            values.insert(k.to_string(), v);
        }
        Settings { values }
    }

    pub fn from_args(args: &ConfigArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
                parse_file(&text)?
            }
            None => BTreeMap::new(),
        };
        Ok(Settings::merge(file, args))
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    /// Model parameters, with standard defaults for missing keys.
    pub fn params(&self) -> Result<ModelParams, CliError> {
        let mut text = String::new();
        for k in MODEL_KEYS {
            if let Some(v) = self.values.get(k) {
                let _ = writeln!(text, "{k} = {v}");
            }
        }
        Ok(ModelParams::from_config_str(&text)?)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.values
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| CliError::Validation(format!("`{key}`: cannot parse `{v}`")))
            })
            .transpose()
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        let v = self.parsed::<f64>(key)?.unwrap_or(default);
        if !v.is_finite() {
            return Err(CliError::Validation(format!("`{key}` must be finite")));
        }
        Ok(v)
    }

    pub fn positive_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        let v = self.f64_or(key, default)?;
        if v <= 0.0 {
            return Err(CliError::Validation(format!("`{key}` must be positive, got {v}")));
        }
        Ok(v)
    }

    pub fn nonnegative_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        let v = self.f64_or(key, default)?;
        if v < 0.0 {
            return Err(CliError::Validation(format!("`{key}` must be nonnegative, got {v}")));
        }
        Ok(v)
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, CliError> {
        Ok(self.parsed::<u64>(key)?.unwrap_or(default))
    }

    pub fn u64_opt(&self, key: &str) -> Result<Option<u64>, CliError> {
        self.parsed::<u64>(key)
    }

    pub fn list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, CliError> {
        let Some(v) = self.values.get(key) else {
            return Ok(default.to_vec());
        };
        let items: Vec<f64> = v
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::Validation(format!("`{key}`: cannot parse `{s}`")))
            })
            .collect::<Result<_, _>>()?;
        if items.is_empty() || items.iter().any(|x| !x.is_finite()) {
            return Err(CliError::Validation(format!("`{key}` needs finite values")));
        }
        Ok(items)
    }

    pub fn integrator_or(&self, default: Integrator) -> Result<Integrator, CliError> {
        match self.values.get("integrator") {
            None => Ok(default),
            Some(v) => Integrator::parse(v).ok_or_else(|| {
                CliError::Validation(format!("`integrator` must be jump, diffusion, hybrid or ode, got `{v}`"))
            }),
        }
    }

    pub fn init_or(&self, x0: f64, y0: f64) -> Result<State, CliError> {
        let x = self.nonnegative_or("x0", x0)?;
        let y = self.nonnegative_or("y0", y0)?;
        Ok(State::new(0.0, x, y))
    }
}

/// Effective settings of a command, rendered as the leading comment line.
#[derive(Debug, Clone)]
pub struct Header {
    command: &'static str,
    pairs: Vec<(String, String)>,
}

impl Header {
    pub fn new(command: &'static str, params: &ModelParams) -> Self {
        let mut h = Header {
            command,
            pairs: Vec::new(),
        };
        h.push("r", params.r);
        h.push("K", params.k);
        h.push("a", params.a);
        h.push("eps", params.eps);
        h.push("omega", params.omega);
        match params.mortality {
            MortalitySchedule::Constant(m) => {
                h.push("m", m);
            }
            MortalitySchedule::Cosine { a0, b0, rate } => {
                h.push("m_a0", a0);
                h.push("m_b0", b0);
                h.push("m_rate", rate);
            }
        }
        h
    }

    pub fn push(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        self.pairs.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push_list(&mut self, key: &str, values: &[f64]) -> &mut Self {
        self.push(key, list(values))
    }

    /// `# preypred <command> key=value ...`
    pub fn comment_line(&self) -> String {
        let mut s = format!("# preypred {}", self.command);
        for (k, v) in &self.pairs {
            let _ = write!(s, " {k}={v}");
        }
        s.push('\n');
        s
    }

    /// The same settings as a JSON object, for JSON-lines outputs.
    pub fn json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        map.insert("command".into(), self.command.into());
        for (k, v) in &self.pairs {
            map.insert(k.clone(), v.clone().into());
        }
        serde_json::json!({ "config": map })
    }
}
