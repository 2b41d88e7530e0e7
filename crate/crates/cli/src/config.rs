//! Flat key-value experiment configuration.
//!
//! The on-disk format is one `key = value` pair per line with `#` comments.
//! Serialization is canonical (fixed key order, unset optionals omitted), so
//! serialize → parse → serialize is the identity and a manifest is itself a
//! valid config.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::{anyhow, bail, Context, Result};
use htnqmc::pauli::Decomposition;
use htnqmc::vqe::{HtnUpdateMode, OptimizerMethod};

/// Model selection with its couplings.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Heisenberg { k: usize, j_inter: f64 },
    Graphite { t1: f64, t2: f64, u: f64 },
    File { path: String },
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Heisenberg { .. } => "heisenberg",
            ModelSpec::Graphite { .. } => "graphite",
            ModelSpec::File { .. } => "file",
        }
    }
}

/// Pipeline selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Vqe,
    HtnVqe,
    Qmc,
    QcQmc,
    HtnQmc,
}

impl Mode {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(match text {
            "vqe" => Mode::Vqe,
            "htn_vqe" => Mode::HtnVqe,
            "qmc" => Mode::Qmc,
            "qc_qmc" => Mode::QcQmc,
            "htn_qmc" => Mode::HtnQmc,
            other => bail!("mode: unknown mode '{}'", other),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Mode::Vqe => "vqe",
            Mode::HtnVqe => "htn_vqe",
            Mode::Qmc => "qmc",
            Mode::QcQmc => "qc_qmc",
            Mode::HtnQmc => "htn_qmc",
        }
    }

    pub fn needs_decomposition(&self) -> bool {
        matches!(self, Mode::HtnVqe | Mode::HtnQmc)
    }

    pub fn runs_walkers(&self) -> bool {
        matches!(self, Mode::Qmc | Mode::QcQmc | Mode::HtnQmc)
    }
}

/// Decomposition request, resolved against the model at run time.
#[derive(Debug, Clone, PartialEq)]
pub enum DecompositionSpec {
    None,
    Named(String),
    Groups(Vec<Vec<usize>>),
}

impl DecompositionSpec {
    pub fn parse(text: &str) -> Result<Self> {
        if text == "none" {
            return Ok(DecompositionSpec::None);
        }
        if let Some(body) = text.strip_prefix("groups:") {
            let mut groups = Vec::new();
            for part in body.split(';') {
                let group: Vec<usize> = part
                    .split(',')
                    .map(|t| t.trim().parse::<usize>().context("decomposition: bad qubit index"))
                    .collect::<Result<_>>()?;
                groups.push(group);
            }
            return Ok(DecompositionSpec::Groups(groups));
        }
        match text {
            "cluster" | "even_odd" | "horizontal" | "vertical" | "halves" => {
                Ok(DecompositionSpec::Named(text.to_string()))
            }
            other => bail!(
                "decomposition: unknown setting '{}' (expected cluster, even_odd, horizontal, \
                 vertical, halves, none, or groups:…)",
                other
            ),
        }
    }

    fn serialize(&self) -> String {
        match self {
            DecompositionSpec::None => "none".into(),
            DecompositionSpec::Named(n) => n.clone(),
            DecompositionSpec::Groups(groups) => {
                let body: Vec<String> = groups
                    .iter()
                    .map(|g| g.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(","))
                    .collect();
                format!("groups:{}", body.join(";"))
            }
        }
    }

    /// Resolve to concrete qubit groups for an `n_qubits` instance of `model`.
    pub fn resolve(&self, model: &ModelSpec, n_qubits: usize) -> Result<Option<Decomposition>> {
        match self {
            DecompositionSpec::None => Ok(None),
            DecompositionSpec::Groups(groups) => {
                Ok(Some(Decomposition::new("explicit", groups.clone())?))
            }
            DecompositionSpec::Named(name) => {
                let dec = match name.as_str() {
                    "cluster" => match model {
                        ModelSpec::Heisenberg { k, .. } => Decomposition::contiguous("cluster", *k, 4),
                        _ => bail!(
                            "decomposition: 'cluster' is defined for the heisenberg model; use \
                             halves or groups:… instead"
                        ),
                    },
                    "even_odd" => {
                        if n_qubits % 2 != 0 {
                            bail!("decomposition: even_odd needs an even qubit count");
                        }
                        Decomposition::even_odd(n_qubits)
                    }
                    "halves" => {
                        if n_qubits % 2 != 0 {
                            bail!("decomposition: halves needs an even qubit count");
                        }
                        Decomposition::contiguous("halves", 2, n_qubits / 2)
                    }
                    "horizontal" | "vertical" => {
                        if n_qubits != 8 {
                            bail!("decomposition: '{}' is defined on 8 qubits", name);
                        }
                        if name == "horizontal" {
                            Decomposition::new(
                                "horizontal",
                                vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7]],
                            )?
                        } else {
                            Decomposition::new("vertical", vec![vec![0, 1, 4, 5], vec![2, 3, 6, 7]])?
                        }
                    }
                    other => bail!("decomposition: unknown setting '{}'", other),
                };
                if dec.n_qubits() != n_qubits {
                    bail!(
                        "decomposition: '{}' covers {} qubits but the model has {}",
                        name,
                        dec.n_qubits(),
                        n_qubits
                    );
                }
                Ok(Some(dec))
            }
        }
    }
}

/// Full declarative experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub mode: Mode,
    pub decomposition: DecompositionSpec,
    pub depth: usize,
    pub seeds: Vec<u64>,
    pub out: String,
    pub shots: u64,
    /// Electron-count restriction for the diagonalization oracle.
    pub sector: Option<u32>,
    /// Basis state whose occupation initializes the ansatz (X gates after the
    /// circuit, with angles drawn from [0, 0.01)).
    pub mask_basis: Option<u64>,
    pub opt_method: OptimizerMethod,
    pub opt_max_evals: usize,
    pub opt_tol: f64,
    pub opt_init_low: f64,
    pub opt_init_high: f64,
    pub opt_alternating: bool,
    pub qmc_dtau: f64,
    pub qmc_max_iters: usize,
    pub qmc_n_shift: u64,
    pub qmc_shift_interval: usize,
    pub qmc_damping: f64,
    pub qmc_initial_shift: Option<f64>,
    pub qmc_window_start: usize,
    pub qmc_window_end: usize,
    pub qmc_denominator_floor: f64,
    pub qmc_max_invalid_streak: usize,
    /// Replace the walker reference by a synthetic state of this ground-state
    /// weight (fidelity-sweep support; `qmc` mode only).
    pub qmc_deviated_f: Option<f64>,
    pub penalty_n_target: Option<u32>,
    pub penalty_lambda: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model: ModelSpec::Heisenberg { k: 2, j_inter: 1.0 },
            mode: Mode::HtnQmc,
            decomposition: DecompositionSpec::Named("cluster".into()),
            depth: 4,
            seeds: vec![0],
            out: "runs/out".into(),
            shots: 0,
            sector: None,
            mask_basis: None,
            opt_method: OptimizerMethod::NelderMeadThenBfgs,
            opt_max_evals: 10_000,
            opt_tol: 1e-8,
            opt_init_low: 0.0,
            opt_init_high: 1.0,
            opt_alternating: false,
            qmc_dtau: 0.001,
            qmc_max_iters: 10_000,
            qmc_n_shift: 1_000,
            qmc_shift_interval: 5,
            qmc_damping: 0.1,
            qmc_initial_shift: None,
            qmc_window_start: 5_000,
            qmc_window_end: 10_000,
            qmc_denominator_floor: 1e-12,
            qmc_max_invalid_streak: 1_000,
            qmc_deviated_f: None,
            penalty_n_target: None,
            penalty_lambda: 10.0,
        }
    }
}

fn parse_method(text: &str) -> Result<OptimizerMethod> {
    Ok(match text {
        "nelder_mead" => OptimizerMethod::NelderMead,
        "fd_bfgs" => OptimizerMethod::FdBfgs,
        "nm_bfgs" => OptimizerMethod::NelderMeadThenBfgs,
        other => bail!("opt.method: unknown method '{}'", other),
    })
}

impl ExperimentConfig {
    /// Parse the flat key-value format; unknown keys are rejected with their
    /// names so typos surface immediately.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected 'key = value'", lineno + 1))?;
            let prev = pairs.insert(key.trim().to_string(), value.trim().to_string());
            if prev.is_some() {
                bail!("line {}: duplicate key '{}'", lineno + 1, key.trim());
            }
        }
        Self::from_pairs(pairs)
    }

    fn from_pairs(mut pairs: BTreeMap<String, String>) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut take = |key: &str| pairs.remove(key).filter(|v| !v.is_empty());

        let model_name = take("model").unwrap_or_else(|| "heisenberg".into());
        cfg.model = match model_name.as_str() {
            "heisenberg" => ModelSpec::Heisenberg {
                k: parse_field(&mut take, "model.k", 2usize)?,
                j_inter: parse_field(&mut take, "model.j_inter", 1.0f64)?,
            },
            "graphite" => ModelSpec::Graphite {
                t1: parse_field(&mut take, "model.t1", htnqmc::models::GRAPHITE_T1)?,
                t2: parse_field(&mut take, "model.t2", htnqmc::models::GRAPHITE_T2)?,
                u: parse_field(&mut take, "model.u", htnqmc::models::GRAPHITE_U)?,
            },
            "file" => ModelSpec::File {
                path: take("model.path").ok_or_else(|| anyhow!("model.path: required for model = file"))?,
            },
            other => bail!("model: unknown model '{}'", other),
        };

        if let Some(v) = take("mode") {
            cfg.mode = Mode::parse(&v)?;
        }
        if let Some(v) = take("decomposition") {
            cfg.decomposition = DecompositionSpec::parse(&v)?;
        }
        cfg.depth = parse_field(&mut take, "depth", cfg.depth)?;
        if let Some(v) = take("seeds") {
            cfg.seeds = v
                .split(',')
                .map(|t| t.trim().parse::<u64>().context("seeds: bad seed"))
                .collect::<Result<_>>()?;
            if cfg.seeds.is_empty() {
                bail!("seeds: at least one seed required");
            }
        }
        if let Some(v) = take("out") {
            cfg.out = v;
        }
        cfg.shots = parse_field(&mut take, "shots", cfg.shots)?;
        cfg.sector = parse_optional(&mut take, "sector")?;
        cfg.mask_basis = parse_optional(&mut take, "mask_basis")?;

        if let Some(v) = take("opt.method") {
            cfg.opt_method = parse_method(&v)?;
        }
        cfg.opt_max_evals = parse_field(&mut take, "opt.max_evals", cfg.opt_max_evals)?;
        cfg.opt_tol = parse_field(&mut take, "opt.tol", cfg.opt_tol)?;
        cfg.opt_init_low = parse_field(&mut take, "opt.init_low", cfg.opt_init_low)?;
        cfg.opt_init_high = parse_field(&mut take, "opt.init_high", cfg.opt_init_high)?;
        cfg.opt_alternating = parse_field(&mut take, "opt.alternating", cfg.opt_alternating)?;

        cfg.qmc_dtau = parse_field(&mut take, "qmc.dtau", cfg.qmc_dtau)?;
        cfg.qmc_max_iters = parse_field(&mut take, "qmc.max_iters", cfg.qmc_max_iters)?;
        cfg.qmc_n_shift = parse_field(&mut take, "qmc.n_shift", cfg.qmc_n_shift)?;
        cfg.qmc_shift_interval =
            parse_field(&mut take, "qmc.shift_interval", cfg.qmc_shift_interval)?;
        cfg.qmc_damping = parse_field(&mut take, "qmc.damping", cfg.qmc_damping)?;
        cfg.qmc_initial_shift = parse_optional(&mut take, "qmc.initial_shift")?;
        cfg.qmc_window_start = parse_field(&mut take, "qmc.window_start", cfg.qmc_window_start)?;
        cfg.qmc_window_end = parse_field(&mut take, "qmc.window_end", cfg.qmc_window_end)?;
        cfg.qmc_denominator_floor =
            parse_field(&mut take, "qmc.denominator_floor", cfg.qmc_denominator_floor)?;
        cfg.qmc_max_invalid_streak =
            parse_field(&mut take, "qmc.max_invalid_streak", cfg.qmc_max_invalid_streak)?;
        cfg.qmc_deviated_f = parse_optional(&mut take, "qmc.deviated_f")?;

        cfg.penalty_n_target = parse_optional(&mut take, "penalty.n_target")?;
        cfg.penalty_lambda = parse_field(&mut take, "penalty.lambda", cfg.penalty_lambda)?;

        if let Some(key) = pairs.keys().next() {
            bail!("unknown configuration key '{}'", key);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode.needs_decomposition() && self.decomposition == DecompositionSpec::None {
            bail!("decomposition: mode {} requires one", self.mode.name());
        }
        if self.seeds.is_empty() {
            bail!("seeds: at least one seed required");
        }
        if self.qmc_window_start >= self.qmc_window_end || self.qmc_window_end > self.qmc_max_iters
        {
            bail!("qmc.window_start/window_end: need start < end ≤ qmc.max_iters");
        }
        if let Some(f) = self.qmc_deviated_f {
            if !(0.0..=1.0).contains(&f) {
                bail!("qmc.deviated_f: must lie in [0, 1]");
            }
            if self.mode != Mode::Qmc {
                bail!("qmc.deviated_f: only meaningful with mode = qmc");
            }
        }
        Ok(())
    }

    /// Canonical serialization; `parse(serialize(c)) == c`.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let mut line = |key: &str, value: String| {
            if !value.is_empty() {
                let _ = writeln!(out, "{} = {}", key, value);
            }
        };
        line("model", self.model.name().into());
        match &self.model {
            ModelSpec::Heisenberg { k, j_inter } => {
                line("model.k", k.to_string());
                line("model.j_inter", format_f64(*j_inter));
            }
            ModelSpec::Graphite { t1, t2, u } => {
                line("model.t1", format_f64(*t1));
                line("model.t2", format_f64(*t2));
                line("model.u", format_f64(*u));
            }
            ModelSpec::File { path } => line("model.path", path.clone()),
        }
        line("mode", self.mode.name().into());
        line("decomposition", self.decomposition.serialize());
        line("depth", self.depth.to_string());
        line(
            "seeds",
            self.seeds.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(","),
        );
        line("out", self.out.clone());
        line("shots", self.shots.to_string());
        line("sector", self.sector.map(|v| v.to_string()).unwrap_or_default());
        line("mask_basis", self.mask_basis.map(|v| v.to_string()).unwrap_or_default());
        line("opt.method", self.opt_method.label().into());
        line("opt.max_evals", self.opt_max_evals.to_string());
        line("opt.tol", format_f64(self.opt_tol));
        line("opt.init_low", format_f64(self.opt_init_low));
        line("opt.init_high", format_f64(self.opt_init_high));
        line("opt.alternating", self.opt_alternating.to_string());
        line("qmc.dtau", format_f64(self.qmc_dtau));
        line("qmc.max_iters", self.qmc_max_iters.to_string());
        line("qmc.n_shift", self.qmc_n_shift.to_string());
        line("qmc.shift_interval", self.qmc_shift_interval.to_string());
        line("qmc.damping", format_f64(self.qmc_damping));
        line(
            "qmc.initial_shift",
            self.qmc_initial_shift.map(format_f64).unwrap_or_default(),
        );
        line("qmc.window_start", self.qmc_window_start.to_string());
        line("qmc.window_end", self.qmc_window_end.to_string());
        line("qmc.denominator_floor", format_f64(self.qmc_denominator_floor));
        line("qmc.max_invalid_streak", self.qmc_max_invalid_streak.to_string());
        line("qmc.deviated_f", self.qmc_deviated_f.map(format_f64).unwrap_or_default());
        line(
            "penalty.n_target",
            self.penalty_n_target.map(|v| v.to_string()).unwrap_or_default(),
        );
        line("penalty.lambda", format_f64(self.penalty_lambda));
        out
    }

    /// Optimizer configuration for one seed.
    pub fn optimizer_config(&self, seed: u64) -> htnqmc::vqe::OptimizerConfig {
        htnqmc::vqe::OptimizerConfig {
            method: self.opt_method,
            max_evals: self.opt_max_evals,
            tol: self.opt_tol,
            seed,
            init_low: self.opt_init_low,
            init_high: self.opt_init_high,
            htn_update: if self.opt_alternating {
                HtnUpdateMode::Alternating
            } else {
                HtnUpdateMode::Joint
            },
        }
    }

    /// Walker configuration for one seed.
    pub fn qmc_config(&self, seed: u64) -> htnqmc::fciqmc::QmcConfig {
        htnqmc::fciqmc::QmcConfig {
            dtau: self.qmc_dtau,
            max_iters: self.qmc_max_iters,
            n_shift_threshold: self.qmc_n_shift,
            shift_interval: self.qmc_shift_interval,
            damping: self.qmc_damping,
            initial_shift: self.qmc_initial_shift,
            window: (self.qmc_window_start, self.qmc_window_end),
            seed,
            denominator_floor: self.qmc_denominator_floor,
            max_invalid_streak: self.qmc_max_invalid_streak,
        }
    }
}

fn format_f64(v: f64) -> String {
    // Shortest representation that round-trips exactly.
    let s = format!("{}", v);
    if s.parse::<f64>() == Ok(v) {
        s
    } else {
        format!("{:e}", v)
    }
}

fn parse_field<T: std::str::FromStr>(
    take: &mut impl FnMut(&str) -> Option<String>,
    key: &str,
    default: T,
) -> Result<T> {
    match take(key) {
        None => Ok(default),
        Some(v) => v.parse::<T>().map_err(|_| anyhow!("{}: malformed value '{}'", key, v)),
    }
}

fn parse_optional<T: std::str::FromStr>(
    take: &mut impl FnMut(&str) -> Option<String>,
    key: &str,
) -> Result<Option<T>> {
    match take(key) {
        None => Ok(None),
        Some(v) => v
            .parse::<T>()
            .map(Some)
            .map_err(|_| anyhow!("{}: malformed value '{}'", key, v)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = ExperimentConfig::default();
        let text = cfg.serialize();
        let parsed = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(parsed, cfg);
        assert_eq!(parsed.serialize(), text);
    }

    #[test]
    fn round_trip_with_options_set() {
        let mut cfg = ExperimentConfig::default();
        cfg.model = ModelSpec::Graphite { t1: -0.105, t2: 0.0103, u: 0.3 };
        cfg.mode = Mode::HtnVqe;
        cfg.decomposition = DecompositionSpec::Groups(vec![vec![0, 2, 4, 6], vec![1, 3, 5, 7]]);
        cfg.seeds = vec![3, 1, 4];
        cfg.sector = Some(4);
        cfg.mask_basis = Some(0b00001111);
        cfg.qmc_initial_shift = Some(-2.5);
        let text = cfg.serialize();
        let parsed = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(parsed, cfg);
        assert_eq!(parsed.serialize(), text);
    }

    #[test]
    fn comments_and_blanks_ignored() {
        let cfg = ExperimentConfig::parse(
            "# a comment\n\nmodel = heisenberg\nmodel.k = 3 # trailing comment\nmode = vqe\n",
        )
        .unwrap();
        assert_eq!(cfg.model, ModelSpec::Heisenberg { k: 3, j_inter: 1.0 });
        assert_eq!(cfg.mode, Mode::Vqe);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::parse("mode = warp").is_err());
        assert!(ExperimentConfig::parse("no_such_key = 1").is_err());
        assert!(ExperimentConfig::parse("model = file\n").is_err());
        assert!(ExperimentConfig::parse("mode = htn_qmc\ndecomposition = none\n").is_err());
        assert!(ExperimentConfig::parse("qmc.window_start = 10\nqmc.window_end = 5\n").is_err());
        assert!(ExperimentConfig::parse("qmc.deviated_f = 0.5\n").is_err());
        let err = ExperimentConfig::parse("depth = four\n").unwrap_err();
        assert!(err.to_string().contains("depth"));
    }

    #[test]
    fn decomposition_resolution() {
        let heis = ModelSpec::Heisenberg { k: 2, j_inter: 1.0 };
        let dec = DecompositionSpec::Named("cluster".into()).resolve(&heis, 8).unwrap().unwrap();
        assert_eq!(dec.groups()[0], vec![0, 1, 2, 3]);
        let dec = DecompositionSpec::Named("even_odd".into()).resolve(&heis, 8).unwrap().unwrap();
        assert_eq!(dec.groups()[1], vec![1, 3, 5, 7]);
        let graphite = ModelSpec::Graphite { t1: -0.1, t2: 0.01, u: 0.3 };
        let dec =
            DecompositionSpec::Named("vertical".into()).resolve(&graphite, 8).unwrap().unwrap();
        assert_eq!(dec.groups()[0], vec![0, 1, 4, 5]);
        assert!(DecompositionSpec::Named("cluster".into()).resolve(&graphite, 8).is_err());
        assert!(DecompositionSpec::None.resolve(&heis, 8).unwrap().is_none());
    }
}
