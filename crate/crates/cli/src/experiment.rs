//! Experiment orchestration: builds the model, runs the requested pipeline
//! per seed on a worker pool, and writes trace/summary CSVs plus a manifest
//! that is itself a runnable config.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;

use htnqmc::fciqmc::{run_fciqmc, ReferenceWavefunction};
use htnqmc::htn::hadamard::sampled_transition_amplitude;
use htnqmc::htn::{htn_energy, transition_amplitude, HtnState};
use htnqmc::models::{build_graphite_hubbard, build_heisenberg_chain};
use htnqmc::oracle::{
    bipartite_entropy, energy_stats, fidelity, ground_state, wavefunction_distribution,
    EnergyStats, SpectrumResult,
};
use htnqmc::pauli::{
    interaction_strength_gmr, load_hamiltonian_file, Decomposition, PauliSum,
};
use htnqmc::statevector::{apply_circuit, expectation, real_amplitude_ansatz, Circuit, Gate, Statevector};
use htnqmc::vqe::{htn_vqe_minimize, number_penalty, vqe_minimize};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::config::{DecompositionSpec, ExperimentConfig, Mode, ModelSpec};

/// Result of one seed's pipeline.
#[derive(Debug, Clone)]
pub struct SeedOutcome {
    pub seed: u64,
    pub ref_label: String,
    /// Energy of the reference/ansatz state on the bare Hamiltonian.
    pub e_ref: f64,
    pub fidelity_ref: f64,
    /// Window statistics of the walker run, for walker modes.
    pub stats: Option<EnergyStats>,
    pub trace_csv: Option<String>,
    /// Reference energy re-evaluated through the shot-sampled overlap test.
    pub e_ref_shots: Option<f64>,
    /// Optimized angles in declared order (lower tensors, then upper).
    pub params: Option<Vec<f64>>,
}

/// Everything one `run` produces.
#[derive(Debug)]
pub struct ExperimentOutcome {
    pub n_qubits: usize,
    pub e_exact: f64,
    pub single_reference: u64,
    pub fidelity_single_reference: f64,
    pub gmr: Option<f64>,
    pub entropy_cut: Option<f64>,
    pub seeds: Vec<SeedOutcome>,
    pub out_dir: PathBuf,
}

/// Build the model Hamiltonian.
pub fn build_hamiltonian(model: &ModelSpec) -> Result<PauliSum> {
    Ok(match model {
        ModelSpec::Heisenberg { k, j_inter } => build_heisenberg_chain(*k, *j_inter)?,
        ModelSpec::Graphite { t1, t2, u } => build_graphite_hubbard(*t1, *t2, *u)?,
        ModelSpec::File { path } => {
            load_hamiltonian_file(path).with_context(|| format!("loading {}", path))?
        }
    })
}

fn masked_circuit(n_qubits: usize, depth: usize, mask: Option<u64>) -> Circuit {
    let mut circuit = real_amplitude_ansatz(n_qubits, depth);
    if let Some(mask) = mask {
        for q in 0..n_qubits {
            if (mask >> q) & 1 == 1 {
                circuit.push(Gate::X { qubit: q });
            }
        }
    }
    circuit
}

/// The energy actually minimized: bare Hamiltonian plus the optional
/// electron-number penalty.
fn cost_hamiltonian(cfg: &ExperimentConfig, h: &PauliSum) -> Result<PauliSum> {
    match cfg.penalty_n_target {
        None => Ok(h.clone()),
        Some(target) => Ok(number_penalty(h, target, cfg.penalty_lambda)?),
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{:.12e}", x),
        None => "nan".into(),
    }
}

fn summary_header() -> &'static str {
    "seed,mode,model,decomposition,depth,n_qubits,e_exact,gmr,entropy_cut,ref_label,e_ref,\
     fidelity_ref,fidelity_single_ref,e_mix_mean,e_mix_std,abs_error,n_valid,n_invalid,e_ref_shots"
}

fn summary_row(
    cfg: &ExperimentConfig,
    outcome: &ExperimentOutcome,
    seed: &SeedOutcome,
) -> String {
    let (mean, std, err, n_valid, n_invalid) = match &seed.stats {
        Some(s) => (Some(s.mean), Some(s.std), Some(s.abs_error), s.n_samples, s.n_invalid),
        None => (None, None, None, 0, 0),
    };
    format!(
        "{},{},{},{},{},{},{:.12e},{},{},{},{:.12e},{:.6},{:.6},{},{},{},{},{},{}",
        seed.seed,
        cfg.mode.name(),
        cfg.model.name(),
        cfg.decomposition_label(),
        cfg.depth,
        outcome.n_qubits,
        outcome.e_exact,
        fmt_opt(outcome.gmr),
        fmt_opt(outcome.entropy_cut),
        seed.ref_label,
        seed.e_ref,
        seed.fidelity_ref,
        outcome.fidelity_single_reference,
        fmt_opt(mean),
        fmt_opt(std),
        fmt_opt(err),
        n_valid,
        n_invalid,
        fmt_opt(seed.e_ref_shots),
    )
}

impl ExperimentConfig {
    pub fn decomposition_label(&self) -> String {
        match &self.decomposition {
            DecompositionSpec::None => "none".into(),
            DecompositionSpec::Named(n) => n.clone(),
            DecompositionSpec::Groups(_) => "explicit".into(),
        }
    }
}

struct Prepared {
    hamiltonian: PauliSum,
    cost: PauliSum,
    ground: SpectrumResult,
    single_reference: u64,
    decomposition: Option<Decomposition>,
}

fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    let hamiltonian = build_hamiltonian(&cfg.model)?;
    let cost = cost_hamiltonian(cfg, &hamiltonian)?;
    let ground = ground_state(&hamiltonian, cfg.sector)?;
    let single_reference = htnqmc::oracle::dominant_basis_index(&ground.state);
    let decomposition = cfg.decomposition.resolve(&cfg.model, hamiltonian.n_qubits())?;
    Ok(Prepared { hamiltonian, cost, ground, single_reference, decomposition })
}

fn run_seed(cfg: &ExperimentConfig, prep: &Prepared, seed: u64) -> Result<SeedOutcome> {
    let h = &prep.hamiltonian;
    let gs = &prep.ground;
    let opt = cfg.optimizer_config(seed);
    let qmc = cfg.qmc_config(seed);

    // Reference-style initialization shrinks the initial angles.
    let opt = if cfg.mask_basis.is_some() {
        htnqmc::vqe::OptimizerConfig { init_low: 0.0, init_high: 0.01, ..opt }
    } else {
        opt
    };

    let (reference, ref_label, e_ref, fidelity_ref, e_ref_shots, params) = match cfg.mode {
        Mode::Vqe | Mode::QcQmc => {
            let circuit = masked_circuit(h.n_qubits(), cfg.depth, cfg.mask_basis);
            let res = vqe_minimize(&prep.cost, &circuit, &opt)?;
            let state = apply_circuit(&circuit, &res.params, &Statevector::zero(h.n_qubits()))?;
            let e_ref = expectation(&state, h)?;
            let fid = fidelity(&state, &gs.state)?;
            let reference = ReferenceWavefunction::from_statevector("vqe", &state)?;
            (Some(reference), format!("vqe[{}]", res.label), e_ref, fid, None, Some(res.params))
        }
        Mode::HtnVqe | Mode::HtnQmc => {
            let dec = prep
                .decomposition
                .clone()
                .ok_or_else(|| anyhow!("decomposition required for {}", cfg.mode.name()))?;
            let mut proto = HtnState::zeros(dec, cfg.depth);
            if let Some(mask) = cfg.mask_basis {
                proto.set_lower_mask(mask)?;
            }
            let res = htn_vqe_minimize(&prep.cost, &proto, &opt)?;
            let state = proto.with_flat_params(&res.params)?;
            let e_ref = htn_energy(&state, h)?;
            let fid = fidelity(&state.expand_dense()?, &gs.state)?;
            let shots = if cfg.shots > 0 {
                let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x5ad0_7e57);
                let sampled = sampled_transition_amplitude(&state, &state, h, cfg.shots, &mut rng)?;
                // Cross-check that the sampled path targets the exact one.
                let exact = transition_amplitude(&state, &state, h)?;
                debug_assert!((exact.re - e_ref).abs() < 1e-9);
                Some(sampled.re)
            } else {
                None
            };
            let reference = ReferenceWavefunction::from_htn(&state)?;
            (Some(reference), format!("htn[{}]", res.label), e_ref, fid, shots, Some(res.params))
        }
        Mode::Qmc => match cfg.qmc_deviated_f {
            Some(f_weight) => {
                let reference = ReferenceWavefunction::deviated(&gs.state, f_weight, seed)?;
                let overlaps: Vec<f64> =
                    (0..gs.state.dim() as u64).map(|idx| reference.overlap(idx)).collect();
                let state = Statevector::from_amplitudes(
                    overlaps.iter().map(|&v| num_complex::Complex64::new(v, 0.0)).collect(),
                )?;
                let e_ref = expectation(&state, h)?;
                let fid = fidelity(&state, &gs.state)?;
                (Some(reference), reference_label_f(f_weight), e_ref, fid, None, None)
            }
            None => {
                let h_star = prep.single_reference;
                let reference = ReferenceWavefunction::single_basis(h_star);
                let e_ref = h.diagonal_element(h_star);
                let fid = gs.state.amplitude(h_star).norm_sqr();
                (Some(reference), format!("single_basis_{}", h_star), e_ref, fid, None, None)
            }
        },
    };

    let (stats, trace_csv) = if cfg.mode.runs_walkers() {
        let reference = reference.expect("walker modes always build a reference");
        let trace = run_fciqmc(h, &reference, prep.single_reference, &qmc)?;
        let stats = energy_stats(
            &trace,
            (cfg.qmc_window_start, cfg.qmc_window_end),
            prep.ground.energy,
        )?;
        (Some(stats), Some(trace.to_csv()))
    } else {
        (None, None)
    };

    Ok(SeedOutcome { seed, ref_label, e_ref, fidelity_ref, stats, trace_csv, e_ref_shots, params })
}

fn reference_label_f(f_weight: f64) -> String {
    format!("deviated_f{}", f_weight)
}

/// Run every seed of the configured experiment and write the result bundle
/// (manifest, summary CSV, per-seed trace CSVs) under `cfg.out`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate().map_err(|e| anyhow!("invalid configuration: {}", e))?;
    let prep = prepare(cfg)?;

    let seeds: Vec<SeedOutcome> = cfg
        .seeds
        .par_iter()
        .map(|&seed| run_seed(cfg, &prep, seed))
        .collect::<Result<_>>()?;

    let gmr = match &prep.decomposition {
        Some(dec) => Some(interaction_strength_gmr(&prep.hamiltonian, dec)?),
        None => None,
    };
    let entropy_cut = match &prep.decomposition {
        Some(dec) => Some(bipartite_entropy(&prep.ground.state, &dec.groups()[0])?),
        None => None,
    };

    let mut outcome = ExperimentOutcome {
        n_qubits: prep.hamiltonian.n_qubits(),
        e_exact: prep.ground.energy,
        single_reference: prep.single_reference,
        fidelity_single_reference: prep.ground.state.amplitude(prep.single_reference).norm_sqr(),
        gmr,
        entropy_cut,
        seeds,
        out_dir: PathBuf::from(&cfg.out),
    };

    write_bundle(cfg, &mut outcome)?;
    Ok(outcome)
}

fn write_bundle(cfg: &ExperimentConfig, outcome: &mut ExperimentOutcome) -> Result<()> {
    std::fs::create_dir_all(&outcome.out_dir)
        .with_context(|| format!("creating {}", outcome.out_dir.display()))?;

    let mut manifest = String::new();
    let _ = writeln!(manifest, "# experiment manifest (parseable as a config)");
    let _ = writeln!(manifest, "# generated_by = htnqmc {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(manifest, "# e_exact = {:.12e}", outcome.e_exact);
    let _ = writeln!(manifest, "# single_reference = {}", outcome.single_reference);
    manifest.push_str(&cfg.serialize());
    std::fs::write(outcome.out_dir.join("manifest.txt"), manifest)?;

    let mut summary = String::from(summary_header());
    summary.push('\n');
    for seed in &outcome.seeds {
        summary.push_str(&summary_row(cfg, outcome, seed));
        summary.push('\n');
    }
    std::fs::write(outcome.out_dir.join("summary.csv"), &summary)?;

    for seed in &outcome.seeds {
        if let Some(csv) = &seed.trace_csv {
            std::fs::write(outcome.out_dir.join(format!("trace_seed{}.csv", seed.seed)), csv)?;
        }
        if let Some(params) = &seed.params {
            let mut text = String::from("# optimized angles, declared order (radians)\n");
            for p in params {
                let _ = writeln!(text, "{:.17e}", p);
            }
            std::fs::write(outcome.out_dir.join(format!("params_seed{}.txt", seed.seed)), text)?;
        }
    }
    Ok(())
}

/// Sweep axis for [`sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    JInter,
    Depth,
    Decomposition,
    Fidelity,
}

impl SweepAxis {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(match text {
            "jinter" => SweepAxis::JInter,
            "depth" => SweepAxis::Depth,
            "decomposition" => SweepAxis::Decomposition,
            "fidelity" => SweepAxis::Fidelity,
            other => bail!("axis: unknown sweep axis '{}'", other),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::JInter => "jinter",
            SweepAxis::Depth => "depth",
            SweepAxis::Decomposition => "decomposition",
            SweepAxis::Fidelity => "fidelity",
        }
    }
}

fn apply_axis(cfg: &ExperimentConfig, axis: SweepAxis, value: &str) -> Result<ExperimentConfig> {
    let mut point = cfg.clone();
    match axis {
        SweepAxis::JInter => match &mut point.model {
            ModelSpec::Heisenberg { j_inter, .. } => {
                *j_inter = value.parse().context("jinter: bad value")?;
            }
            _ => bail!("axis jinter requires the heisenberg model"),
        },
        SweepAxis::Depth => point.depth = value.parse().context("depth: bad value")?,
        SweepAxis::Decomposition => {
            point.decomposition =
                crate::config::DecompositionSpec::parse(value).map_err(|e| anyhow!("{}", e))?;
        }
        SweepAxis::Fidelity => {
            if point.mode != Mode::Qmc {
                bail!("axis fidelity requires mode = qmc (synthetic reference sweep)");
            }
            point.qmc_deviated_f = Some(value.parse().context("fidelity: bad value")?);
        }
    }
    let safe: String = value.chars().map(|c| if c.is_alphanumeric() { c } else { '_' }).collect();
    point.out = format!("{}/{}_{}", cfg.out, axis.name(), safe);
    Ok(point)
}

/// Run one experiment per axis value, then aggregate the per-seed rows.
pub fn sweep(cfg: &ExperimentConfig, axis: SweepAxis, values: &[String]) -> Result<PathBuf> {
    if values.is_empty() {
        bail!("values: sweep needs at least one axis value");
    }
    let root = PathBuf::from(&cfg.out);
    std::fs::create_dir_all(&root)?;

    let mut rows = String::from("axis,value,");
    rows.push_str(summary_header());
    rows.push('\n');
    let mut aggregate = String::from(
        "axis,value,n_seeds,mean_abs_error,std_abs_error,mean_e_mix_std,mean_fidelity_ref\n",
    );

    for value in values {
        let point = apply_axis(cfg, axis, value)?;
        let outcome = run_experiment(&point)?;
        let mut errs = Vec::new();
        let mut stds = Vec::new();
        let mut fids = Vec::new();
        for seed in &outcome.seeds {
            rows.push_str(&format!("{},{},", axis.name(), value));
            rows.push_str(&summary_row(&point, &outcome, seed));
            rows.push('\n');
            if let Some(stats) = &seed.stats {
                errs.push(stats.abs_error);
                stds.push(stats.std);
            }
            fids.push(seed.fidelity_ref);
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
        let std = |v: &[f64]| {
            let m = mean(v);
            (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len().max(1) as f64).sqrt()
        };
        aggregate.push_str(&format!(
            "{},{},{},{},{},{},{:.6}\n",
            axis.name(),
            value,
            outcome.seeds.len(),
            if errs.is_empty() { "nan".into() } else { format!("{:.12e}", mean(&errs)) },
            if errs.is_empty() { "nan".into() } else { format!("{:.12e}", std(&errs)) },
            if stds.is_empty() { "nan".into() } else { format!("{:.12e}", mean(&stds)) },
            mean(&fids),
        ));
    }
    std::fs::write(root.join("sweep_summary.csv"), rows)?;
    std::fs::write(root.join("sweep_aggregate.csv"), aggregate)?;
    Ok(root)
}

/// Diagonalization diagnostics: exact energy, reference state, entropies,
/// interaction strength, and the wave-function distribution CSV.
pub fn oracle_report(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<String> {
    let prep = prepare(cfg)?;
    let mut report = String::new();
    let _ = writeln!(report, "model = {} ({} qubits)", cfg.model.name(), prep.hamiltonian.n_qubits());
    let _ = writeln!(report, "terms = {}", prep.hamiltonian.n_terms());
    if let Some(sector) = cfg.sector {
        let _ = writeln!(report, "sector = {} electrons", sector);
    }
    let _ = writeln!(report, "e_exact = {:.12}", prep.ground.energy);
    let _ = writeln!(
        report,
        "single_reference = {} (fidelity {:.6})",
        prep.single_reference,
        prep.ground.state.amplitude(prep.single_reference).norm_sqr()
    );
    if let Some(dec) = &prep.decomposition {
        let _ = writeln!(
            report,
            "gmr[{}] = {:.6}",
            cfg.decomposition_label(),
            interaction_strength_gmr(&prep.hamiltonian, dec)?
        );
        let _ = writeln!(
            report,
            "entropy[{}] = {:.6}",
            cfg.decomposition_label(),
            bipartite_entropy(&prep.ground.state, &dec.groups()[0])?
        );
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        let mut csv = String::from("basis_index,abs_coefficient\n");
        for (h, mag) in wavefunction_distribution(&prep.ground.state, None)? {
            csv.push_str(&format!("{},{:.12e}\n", h, mag));
        }
        let path = dir.join("distribution_exact.csv");
        std::fs::write(&path, csv)?;
        let _ = writeln!(report, "distribution written to {}", path.display());
    }
    Ok(report)
}

/// Interaction-strength table over the decompositions defined for the model.
pub fn gmr_table(cfg: &ExperimentConfig) -> Result<String> {
    let hamiltonian = build_hamiltonian(&cfg.model)?;
    let n = hamiltonian.n_qubits();
    let mut names: Vec<&str> = match cfg.model {
        ModelSpec::Heisenberg { .. } => vec!["cluster", "even_odd"],
        ModelSpec::Graphite { .. } => vec!["horizontal", "vertical", "even_odd"],
        ModelSpec::File { .. } => vec!["halves", "even_odd"],
    };
    if matches!(cfg.decomposition, DecompositionSpec::Groups(_)) {
        names.push("configured");
    }
    let mut out = String::from("decomposition,k,gmr\n");
    for name in names {
        let dec = if name == "configured" {
            cfg.decomposition.resolve(&cfg.model, n)?
        } else {
            DecompositionSpec::Named(name.to_string()).resolve(&cfg.model, n)?
        };
        if let Some(dec) = dec {
            out.push_str(&format!(
                "{},{},{:.6}\n",
                name,
                dec.n_groups(),
                interaction_strength_gmr(&hamiltonian, &dec)?
            ));
        }
    }
    Ok(out)
}
