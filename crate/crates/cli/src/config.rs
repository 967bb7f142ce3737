//! Run configuration: `section.key = value` files merged with command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nhscatter::bath::{parse_complex, BathSpec};
use nhscatter::oracle::{Boundary, DEFAULT_MAX_DIM};
use nhscatter::selfenergy::Branch;
use nhscatter::solver::EmitterParams;
use nhscatter::C64;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};

pub const KEYS: &[&str] = &[
    "model.kind",
    "model.u",
    "model.kappa",
    "model.kappap",
    "model.bath_file",
    "emitter.J",
    "emitter.delta",
    "lattice.L",
    "lattice.boundary",
    "lattice.max_dim",
    "output.dir",
    "output.format",
    "state.mode",
    "state.form",
    "state.branch",
    "run.seed",
    "run.samples",
    "scaling.k",
    "scaling.energy",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    State,
    Bound,
    Scaling,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::State => "state",
            Command::Bound => "bound",
            Command::Scaling => "scaling",
            Command::Verify => "verify",
        }
    }
}

/// A value together with where it came from, for error messages.
#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub value: String,
    pub origin: String,
    /// Directory against which relative paths resolve.
    pub base: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigMap {
    pub entries: BTreeMap<String, Entry>,
}

impl ConfigMap {
    /// Parses `section.key = value` lines; `#` starts a comment.
    pub fn parse(text: &str, source: &str, base: Option<&Path>) -> CliResult<Self> {
        let mut map = ConfigMap::default();
        for (idx, raw) in text.lines().enumerate() {
            let origin = format!("{source}:{}", idx + 1);
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::input(format!("{origin}: expected `section.key = value`")))?;
            let key = key.trim();
            let value = value.trim();
            if !KEYS.contains(&key) {
                return Err(CliError::input(format!("{origin}: unknown key `{key}`")));
            }
            if value.is_empty() {
                return Err(CliError::input(format!("{origin}: empty value for `{key}`")));
            }
            if map.entries.contains_key(key) {
                return Err(CliError::input(format!("{origin}: duplicate key `{key}`")));
            }
            map.entries.insert(
                key.to_string(),
                Entry { value: value.to_string(), origin, base: base.map(Path::to_path_buf) },
            );
        }
        Ok(map)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string(), path.parent())
    }

    /// Sets a value from a command-line flag, overriding any file value.
    pub fn set_flag(&mut self, key: &str, flag: &str, value: String) {
        debug_assert!(KEYS.contains(&key));
        self.entries.insert(key.to_string(), Entry { value, origin: format!("--{flag}"), base: None });
    }

    fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    fn parsed<T>(&self, key: &str, what: &str, f: impl Fn(&str) -> Option<T>) -> CliResult<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(e) => f(&e.value)
                .map(Some)
                .ok_or_else(|| CliError::input(format!("{}: `{}` is not {what}", e.origin, e.value))),
        }
    }

    fn real(&self, key: &str) -> CliResult<Option<f64>> {
        self.parsed(key, "a finite real number", |s| s.parse::<f64>().ok().filter(|v| v.is_finite()))
    }

    fn reject(&self, keys: &[&str], why: &str) -> CliResult<()> {
        for k in keys {
            if let Some(e) = self.get(k) {
                return Err(CliError::input(format!("{}: `{k}` {why}", e.origin)));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    HatanoNelson { u: f64, kappa: f64 },
    Nnn { kappa: f64, kappa_p: f64 },
    Custom { path: PathBuf, bath: BathSpec },
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::HatanoNelson { .. } => "hn",
            Model::Nnn { .. } => "nnn",
            Model::Custom { .. } => "custom",
        }
    }

    pub fn bath(&self) -> BathSpec {
        match self {
            Model::HatanoNelson { u, kappa } => BathSpec::hatano_nelson(*u, *kappa),
            Model::Nnn { kappa, kappa_p } => BathSpec::nnn(*kappa, *kappa_p),
            Model::Custom { bath, .. } => bath.clone(),
        }
    }

    pub fn hn_paper() -> Self {
        Model::HatanoNelson { u: 6.0, kappa: 2.0 }
    }

    pub fn nnn_paper() -> Self {
        Model::Nnn { kappa: 5.0, kappa_p: 12.0 }
    }

    pub fn to_json(&self) -> Value {
        let hops: Vec<Value> = self.bath().hoppings().map(|(n, h)| json!([n, h.re, h.im])).collect();
        match self {
            Model::HatanoNelson { u, kappa } => json!({"kind": "hn", "u": u, "kappa": kappa, "hoppings": hops}),
            Model::Nnn { kappa, kappa_p } => json!({"kind": "nnn", "kappa": kappa, "kappap": kappa_p, "hoppings": hops}),
            Model::Custom { path, .. } => json!({"kind": "custom", "bath_file": path.display().to_string(), "hoppings": hops}),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StateMode {
    /// Mode index `m` in `1..=L`.
    Index(usize),
    /// Mode whose base momentum is closest to `k`.
    Momentum(f64),
    /// Seeded random mode index.
    Random,
    /// The n-th self-intersection of the band curve.
    SelfIntersection(usize),
    /// Family member `mode` at a point of vanishing group velocity.
    SecondOrder { mode: usize, k_r: Option<f64> },
}

impl StateMode {
    /// `m`, `m:<m>`, `k:<k>`, `random`, `si[:<n>]`, `so:<mode>[@<k_r>]`.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        if s == "random" {
            return Some(StateMode::Random);
        }
        if s == "si" {
            return Some(StateMode::SelfIntersection(0));
        }
        let (tag, rest) = s.split_once(':').unwrap_or(("m", s));
        match tag.trim() {
            "m" => rest.trim().parse().ok().filter(|&m| m > 0).map(StateMode::Index),
            "k" => rest.trim().parse().ok().filter(|k: &f64| k.is_finite()).map(StateMode::Momentum),
            "si" => rest.trim().parse().ok().map(StateMode::SelfIntersection),
            "so" => {
                let (m, k) = match rest.split_once('@') {
                    Some((m, k)) => (m, Some(k.trim().parse::<f64>().ok().filter(|k| k.is_finite())?)),
                    None => (rest, None),
                };
                let mode = m.trim().parse().ok().filter(|&m| m > 0)?;
                Some(StateMode::SecondOrder { mode, k_r: k })
            }
            _ => None,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            StateMode::Index(m) => format!("m:{m}"),
            StateMode::Momentum(k) => format!("k:{k}"),
            StateMode::Random => "random".into(),
            StateMode::SelfIntersection(n) => format!("si:{n}"),
            StateMode::SecondOrder { mode, k_r: Some(k) } => format!("so:{mode}@{k}"),
            StateMode::SecondOrder { mode, k_r: None } => format!("so:{mode}"),
        }
    }
}

/// Analytic form compared against the oracle by the `state` command.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Form {
    Closed,
    Ls,
    Formal,
}

impl Form {
    pub fn name(self) -> &'static str {
        match self {
            Form::Closed => "closed",
            Form::Ls => "ls",
            Form::Formal => "formal",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    /// Models to run; `verify` without a model runs both paper parameter sets.
    pub models: Vec<Model>,
    pub params: EmitterParams,
    pub sizes: Vec<usize>,
    pub boundary: Boundary,
    pub max_dim: usize,
    pub out: PathBuf,
    pub format: Format,
    pub mode: StateMode,
    pub form: Option<Form>,
    pub branch: Branch,
    pub seed: u64,
    pub samples: usize,
    pub scaling_k: f64,
    pub energy: Option<C64>,
}

pub const DEFAULT_SCALING_SIZES: [usize; 5] = [101, 201, 401, 801, 1601];

impl RunConfig {
    pub fn model(&self) -> &Model {
        &self.models[0]
    }

    pub fn size(&self) -> usize {
        self.sizes[0]
    }

    pub fn from_map(command: Command, map: &ConfigMap) -> CliResult<Self> {
        let models = match map.get("model.kind").map(|e| (e.value.as_str(), e.origin.as_str())) {
            None if command == Command::Verify => {
                map.reject(&["model.u", "model.kappa", "model.kappap", "model.bath_file"], "requires model.kind")?;
                vec![Model::hn_paper(), Model::nnn_paper()]
            }
            None | Some(("hn", _)) => {
                map.reject(&["model.kappap", "model.bath_file"], "does not apply to model hn")?;
                let u = map.real("model.u")?.unwrap_or(6.0);
                let kappa = map.real("model.kappa")?.unwrap_or(2.0);
                vec![Model::HatanoNelson { u, kappa }]
            }
            Some(("nnn", _)) => {
                map.reject(&["model.u", "model.bath_file"], "does not apply to model nnn")?;
                let kappa = map.real("model.kappa")?.unwrap_or(5.0);
                let kappa_p = map.real("model.kappap")?.unwrap_or(12.0);
                vec![Model::Nnn { kappa, kappa_p }]
            }
            Some(("custom", origin)) => {
                map.reject(&["model.u", "model.kappa", "model.kappap"], "does not apply to model custom")?;
                let e = map
                    .get("model.bath_file")
                    .ok_or_else(|| CliError::input(format!("{origin}: model custom requires a bath file")))?;
                let path = match &e.base {
                    Some(b) if Path::new(&e.value).is_relative() => b.join(&e.value),
                    _ => PathBuf::from(&e.value),
                };
                let text = std::fs::read_to_string(&path)
                    .map_err(|err| CliError::input(format!("cannot read bath file {}: {err}", path.display())))?;
                let bath = BathSpec::from_text(&text)
                    .map_err(|err| CliError::from(err).context(format!("bath file {}", path.display())))?;
                vec![Model::Custom { path, bath }]
            }
            Some((other, origin)) => {
                return Err(CliError::input(format!("{origin}: unknown model `{other}` (expected hn, nnn or custom)")))
            }
        };
        for m in &models {
            if m.bath().scale() == 0.0 {
                return Err(CliError::input(format!("model {} has no nonzero hopping", m.kind())));
            }
        }

        let coupling = map.real("emitter.J")?.unwrap_or(20.0);
        let detuning = map.real("emitter.delta")?.unwrap_or(2.14);
        let params = EmitterParams::new(coupling, detuning)?;

        let default_sizes = match command {
            Command::Scaling => DEFAULT_SCALING_SIZES.to_vec(),
            Command::Verify => vec![201],
            _ => vec![801],
        };
        let sizes = map
            .parsed("lattice.L", "a positive integer or comma-separated list", |s| {
                s.split(',').map(|v| v.trim().parse::<usize>().ok().filter(|&l| l > 0)).collect::<Option<Vec<_>>>()
            })?
            .unwrap_or(default_sizes);
        match command {
            Command::Scaling if sizes.len() < 4 => {
                return Err(CliError::input(format!("scaling needs at least 4 sizes, got {}", sizes.len())))
            }
            Command::Scaling => {}
            _ if sizes.len() != 1 => return Err(CliError::input(format!("{} takes a single L", command.name()))),
            _ => {}
        }
        for m in &models {
            let b = m.bath();
            let min = b.left_range() + b.right_range() + 1;
            if let Some(&l) = sizes.iter().find(|&&l| l < min) {
                return Err(CliError::input(format!("L = {l} is below p + q + 1 = {min}")));
            }
        }

        let boundary = map
            .parsed("lattice.boundary", "pbc or obc", Boundary::parse)?
            .unwrap_or(Boundary::Pbc);
        let max_dim = map
            .parsed("lattice.max_dim", "a positive integer", |s| s.parse().ok().filter(|&d: &usize| d > 0))?
            .unwrap_or(DEFAULT_MAX_DIM);
        let out = map.get("output.dir").map_or_else(|| PathBuf::from("out"), |e| match &e.base {
            Some(b) if Path::new(&e.value).is_relative() => b.join(&e.value),
            _ => PathBuf::from(&e.value),
        });
        let format = map
            .parsed("output.format", "csv or json", |s| match s {
                "csv" => Some(Format::Csv),
                "json" => Some(Format::Json),
                _ => None,
            })?
            .unwrap_or(Format::Csv);
        let mode = map
            .parsed("state.mode", "a state mode (m, k:<k>, random, si[:<n>], so:<m>[@<k>])", StateMode::parse)?
            .unwrap_or(StateMode::Random);
        let form = map.parsed("state.form", "closed, ls or formal", |s| match s {
            "closed" => Some(Form::Closed),
            "ls" => Some(Form::Ls),
            "formal" => Some(Form::Formal),
            _ => None,
        })?;
        let branch = map
            .parsed("state.branch", "greater or less", |s| match s {
                "greater" | ">" => Some(Branch::Greater),
                "less" | "<" => Some(Branch::Less),
                _ => None,
            })?
            .unwrap_or(Branch::Greater);
        let seed = map.parsed("run.seed", "an unsigned integer", |s| s.parse().ok())?.unwrap_or(1);
        let samples = map
            .parsed("run.samples", "a positive integer", |s| s.parse().ok().filter(|&n: &usize| n > 0))?
            .unwrap_or(20);
        let scaling_k = map.real("scaling.k")?.unwrap_or(1.0);
        let energy = map.parsed("scaling.energy", "a complex number `re,im`", |s| {
            parse_complex(s).filter(|z| z.re.is_finite() && z.im.is_finite())
        })?;

        Ok(RunConfig {
            command,
            models,
            params,
            sizes,
            boundary,
            max_dim,
            out,
            format,
            mode,
            form,
            branch,
            seed,
            samples,
            scaling_k,
            energy,
        })
    }

    pub fn parameters_json(&self) -> Value {
        json!({
            "J": self.params.coupling,
            "delta": self.params.detuning,
            "L": self.sizes,
            "boundary": self.boundary.name(),
            "format": self.format.name(),
            "seed": self.seed,
        })
    }
}
