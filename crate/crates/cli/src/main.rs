use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use htnqmc_cli::config::{ExperimentConfig, Mode};
use htnqmc_cli::experiment::{self, SweepAxis};

#[derive(Parser)]
#[command(
    name = "htnqmc",
    about = "Projector Monte Carlo with tree-tensor-network trial wave functions",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Experiment config file (flat key = value format); defaults apply when omitted.
    #[arg(long)]
    config: Option<String>,
    /// Comma-separated seed list, overriding the config.
    #[arg(long)]
    seed: Option<String>,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<String>,
    /// Pipeline mode: vqe | htn_vqe | qmc | qc_qmc | htn_qmc.
    #[arg(long)]
    mode: Option<String>,
    /// Circuit depth, overriding the config.
    #[arg(long)]
    depth: Option<usize>,
    /// Heisenberg inter-cluster coupling, overriding the config.
    #[arg(long)]
    jinter: Option<f64>,
    /// Shots for the sampled overlap-test re-evaluation (0 = exact only).
    #[arg(long)]
    shots: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment over its seed list.
    Run(CommonOpts),
    /// Run one experiment per axis value and aggregate the summaries.
    Sweep {
        #[command(flatten)]
        common: CommonOpts,
        /// Sweep axis: jinter | depth | decomposition | fidelity.
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values.
        #[arg(long)]
        values: String,
    },
    /// Exact-diagonalization diagnostics for the configured model.
    Oracle(CommonOpts),
    /// Print the inter-subsystem interaction strength table for the model.
    Gmr(CommonOpts),
}

fn load_config(opts: &CommonOpts) -> Result<ExperimentConfig> {
    let mut cfg = match &opts.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path))?;
            ExperimentConfig::parse(&text).with_context(|| format!("parsing {}", path))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seeds) = &opts.seed {
        cfg.seeds = seeds
            .split(',')
            .map(|t| t.trim().parse::<u64>().context("--seed: bad seed"))
            .collect::<Result<_>>()?;
    }
    if let Some(out) = &opts.out {
        cfg.out = out.clone();
    }
    if let Some(mode) = &opts.mode {
        cfg.mode = Mode::parse(mode)?;
    }
    if let Some(depth) = opts.depth {
        cfg.depth = depth;
    }
    if let Some(jinter) = opts.jinter {
        match &mut cfg.model {
            htnqmc_cli::config::ModelSpec::Heisenberg { j_inter, .. } => *j_inter = jinter,
            _ => anyhow::bail!("--jinter applies to the heisenberg model"),
        }
    }
    if let Some(shots) = opts.shots {
        cfg.shots = shots;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(opts) => {
            let cfg = load_config(&opts)?;
            let outcome = experiment::run_experiment(&cfg)?;
            println!(
                "model {} on {} qubits, exact energy {:.9}",
                cfg.model.name(),
                outcome.n_qubits,
                outcome.e_exact
            );
            for seed in &outcome.seeds {
                match &seed.stats {
                    Some(stats) => println!(
                        "seed {}: ref {} e_ref {:.6} fidelity {:.4} | e_mix {:.6} ± {:.4} (error {:.3e})",
                        seed.seed,
                        seed.ref_label,
                        seed.e_ref,
                        seed.fidelity_ref,
                        stats.mean,
                        stats.std,
                        stats.abs_error
                    ),
                    None => println!(
                        "seed {}: ref {} e_ref {:.6} fidelity {:.4} (error {:.3e})",
                        seed.seed,
                        seed.ref_label,
                        seed.e_ref,
                        seed.fidelity_ref,
                        (seed.e_ref - outcome.e_exact).abs()
                    ),
                }
            }
            println!("bundle written to {}", outcome.out_dir.display());
        }
        Command::Sweep { common, axis, values } => {
            let cfg = load_config(&common)?;
            let axis = SweepAxis::parse(&axis)?;
            let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).collect();
            let root = experiment::sweep(&cfg, axis, &values)?;
            println!("sweep written to {}", root.display());
        }
        Command::Oracle(opts) => {
            let cfg = load_config(&opts)?;
            let out = std::path::PathBuf::from(&cfg.out);
            print!("{}", experiment::oracle_report(&cfg, Some(&out))?);
        }
        Command::Gmr(opts) => {
            let cfg = load_config(&opts)?;
            print!("{}", experiment::gmr_table(&cfg)?);
        }
    }
    Ok(())
}
