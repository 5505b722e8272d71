use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dds_cli::commands::{cmd_calibrate, cmd_compare, cmd_gen_graph, cmd_sweep_k, cmd_train};
use dds_cli::config::{load, Overrides, ProblemSpec};
use dds_cli::CliError;
use dds_core::graphs::{GraphModel, GraphParams};

#[derive(Parser)]
#[command(
    name = "dds",
    version,
    about = "Entropy-driven shot allocation for variational circuits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run a single seed instead of the configured list.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Policy name; repeat for several.
    #[arg(long = "policy")]
    policies: Vec<String>,
    /// Noise preset name.
    #[arg(long)]
    noise: Option<String>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            out: self.out.clone(),
            policies: self.policies.clone(),
            noise: self.noise.clone(),
            jobs: self.jobs,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train under each configured policy and seed.
    Train(Common),
    /// Measure shots needed to reach a Hellinger budget across entropies.
    Calibrate(Common),
    /// Sweep the multiplier k of the uncapped entropy policy.
    SweepK(Common),
    /// Seed-matched comparison of saved training logs against the fixed baseline.
    Compare {
        /// Log files or directories holding them.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Write a graph instance as JSON.
    GenGraph {
        #[arg(long)]
        config: Option<PathBuf>,
        /// PL, BA, WS or SK.
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train(common) => {
            let cfg = load(common.config.as_deref(), &common.overrides())?;
            let outcome = cmd_train(&cfg)?;
            for row in &outcome.summary {
                let arg = row.arg_percent.map_or_else(|| "-".to_owned(), |a| format!("{a:.2}%"));
                println!(
                    "{:<10} seed {:<4} S_tot {:>9} I_tot {:>4} final {:>10.5} ARG {arg}",
                    row.policy, row.seed, row.s_tot, row.i_tot, row.final_cost
                );
            }
            println!("wrote {}", cfg.config.output.display());
        }
        Command::Calibrate(common) => {
            let cfg = load(common.config.as_deref(), &common.overrides())?;
            let outcome = cmd_calibrate(&cfg)?;
            for p in &outcome.points {
                println!("H {:>7.3} bits  shots {:>9}", p.entropy_bits, p.required_shots);
            }
            if let Some(fit) = outcome.fit {
                println!(
                    "fit log2(shots) = {:.4} + {:.4} H  (r^2 {:.4})",
                    fit.intercept, fit.slope, fit.r_squared
                );
            }
            println!("wrote {}", cfg.config.output.display());
        }
        Command::SweepK(common) => {
            let cfg = load(common.config.as_deref(), &common.overrides())?;
            for row in cmd_sweep_k(&cfg)? {
                println!(
                    "k {:>6} S_tot {:>12.1} ± {:<10.1} final {:.5} ± {:.5}",
                    row.k, row.mean_s_tot, row.se_s_tot, row.mean_final_cost, row.se_final_cost
                );
            }
            println!("wrote {}", cfg.config.output.display());
        }
        Command::Compare { inputs, out } => {
            for row in cmd_compare(&inputs, &out)? {
                println!(
                    "{:<7} seeds {:<3} S_tot {:>12.1} reduction {:>7.2}% ARG {:>6.2}% (Δ {:+.2})",
                    row.policy, row.seeds, row.mean_s_tot, row.reduction_pct, row.mean_arg, row.arg_delta_vs_fixed
                );
            }
        }
        Command::GenGraph {
            config,
            model,
            nodes,
            seed,
            out,
        } => {
            let base = load(config.as_deref(), &Overrides::default())?;
            let (mut m, mut n, mut s, params) = match base.config.problem {
                ProblemSpec::Maxcut {
                    model,
                    n_nodes,
                    graph_seed,
                    params,
                    ..
                } => (model, n_nodes, graph_seed, params),
                _ => (GraphModel::SherringtonKirkpatrick, 4, 1, GraphParams::default()),
            };
            if let Some(text) = model {
                m = text
                    .parse()
                    .map_err(|e: dds_core::Error| CliError::Validation(format!("--model: {e}")))?;
            }
            n = nodes.unwrap_or(n);
            s = seed.unwrap_or(s);
            let path = cmd_gen_graph(m, n, s, params, &out)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
