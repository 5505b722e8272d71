//! Subcommand implementations.
//!
//! Data files are functions of the configuration and seeds alone. Anything
//! time-dependent goes under `<out>/meta/`.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use rayon::prelude::*;
use serde::Serialize;

use dds_core::allocation::{PolicyKind, ShotPolicy};
use dds_core::calibration::{fit_shots_vs_entropy, hellinger_grid, make_target_family, sweep_point, CalibrationPoint};
use dds_core::graphs::{GraphInstance, GraphModel, GraphParams};
use dds_core::report::{compare, mean, mean_and_se, summarize, ComparisonRow};
use dds_core::training::{train, TrainLog};

use crate::config::LoadedConfig;
use crate::output::{write_csv, write_json};
use crate::CliError;

fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| CliError::Runtime(anyhow::anyhow!("starting worker pool: {e}")))
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

#[derive(Serialize)]
struct RunMeta<'a> {
    command: &'a str,
    version: &'a str,
    jobs: usize,
    started_unix_s: f64,
    finished_unix_s: f64,
}

fn write_run_meta(out: &Path, command: &str, jobs: usize, started: f64) -> anyhow::Result<()> {
    write_json(
        &out.join("meta").join(format!("{command}.json")),
        &RunMeta {
            command,
            version: env!("CARGO_PKG_VERSION"),
            jobs,
            started_unix_s: started,
            finished_unix_s: unix_now(),
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRow {
    pub iteration: u64,
    pub shots: u64,
    pub entropy_bits: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct SummaryRow {
    pub policy: String,
    pub seed: u64,
    pub s_avg: f64,
    pub i_tot: u64,
    pub s_tot: u64,
    pub final_cost: f64,
    pub arg_percent: Option<f64>,
}

pub const SUMMARY_HEADER: [&str; 7] = ["policy", "seed", "s_avg", "i_tot", "s_tot", "final_cost", "arg_percent"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyTableRow {
    pub policy: String,
    pub seeds: usize,
    pub s_avg: f64,
    pub i_tot: f64,
    pub s_tot: f64,
    pub final_cost: f64,
    pub arg_percent: Option<f64>,
}

#[derive(Debug, Serialize)]
struct TimingSidecar<'a> {
    policy: &'a str,
    seed: u64,
    total_s: f64,
    wall_time_s: &'a [f64],
}

/// Logs written by `train`, in (policy, seed) order.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub runs: Vec<(String, TrainLog)>,
    pub summary: Vec<SummaryRow>,
}

pub fn log_stem(label: &str, seed: u64) -> String {
    format!("{label}_seed{seed}")
}

pub fn cmd_train(cfg: &LoadedConfig) -> Result<TrainOutcome, CliError> {
    let started = unix_now();
    let problem = cfg.problem()?;
    let policies = cfg.policies(problem.n_qubits)?;
    let noise = cfg.noise()?;
    let seeds = cfg.seeds()?;
    let options = cfg.train_options()?;
    let out = cfg.config.output.clone();
    let jobs: Vec<(String, ShotPolicy, u64)> = policies
        .iter()
        .flat_map(|(label, policy)| seeds.iter().map(move |&s| (label.clone(), *policy, s)))
        .collect();

    let workers = pool(cfg.config.jobs)?;
    let results: Vec<anyhow::Result<(String, TrainLog)>> = workers.install(|| {
        jobs.par_iter()
            .map(|(label, policy, seed)| {
                let mut log = train(&problem.problem, policy, noise.as_ref(), &options, *seed)
                    .with_context(|| format!("training {label} with seed {seed}"))?;
                log.metadata.instance = Some(problem.instance.clone());
                let stem = log_stem(label, *seed);
                write_json(&out.join("logs").join(format!("{stem}.json")), &log)?;
                let rows: Vec<IterationRow> = log
                    .records
                    .iter()
                    .map(|r| IterationRow {
                        iteration: r.iteration,
                        shots: r.shots,
                        entropy_bits: r.entropy_bits,
                        cost: r.cost,
                    })
                    .collect();
                write_csv(
                    &out.join("logs").join(format!("{stem}.csv")),
                    &["iteration", "shots", "entropy_bits", "cost"],
                    &rows,
                )?;
                write_json(
                    &out.join("meta").join(format!("{stem}.timing.json")),
                    &TimingSidecar {
                        policy: label,
                        seed: *seed,
                        total_s: log.wall_time_s.iter().sum(),
                        wall_time_s: &log.wall_time_s,
                    },
                )?;
                Ok((label.clone(), log))
            })
            .collect()
    });
    let runs = results.into_iter().collect::<anyhow::Result<Vec<_>>>()?;

    let summary: Vec<SummaryRow> = runs
        .iter()
        .map(|(label, log)| SummaryRow {
            policy: label.clone(),
            seed: log.metadata.seed,
            s_avg: log.s_avg,
            i_tot: log.i_tot,
            s_tot: log.s_tot,
            final_cost: log.final_evaluation.cost,
            arg_percent: log.arg().ok(),
        })
        .collect();
    write_csv(&out.join("summary.csv"), &SUMMARY_HEADER, &summary)?;

    let mut table = Vec::new();
    for (label, _) in &policies {
        let logs: Vec<TrainLog> = runs
            .iter()
            .filter(|(l, _)| l == label)
            .map(|(_, g)| g.clone())
            .collect();
        let e_ideal = logs[0].metadata.e_ideal;
        let arg = match e_ideal {
            Some(e) => Some(summarize(&logs, e).map_err(anyhow::Error::from)?.arg_percent),
            None => None,
        };
        let s_tot = mean(&logs.iter().map(|l| l.s_tot as f64).collect::<Vec<_>>());
        let i_tot = mean(&logs.iter().map(|l| l.i_tot as f64).collect::<Vec<_>>());
        table.push(PolicyTableRow {
            policy: label.clone(),
            seeds: logs.len(),
            s_avg: s_tot / i_tot,
            i_tot,
            s_tot,
            final_cost: mean(&logs.iter().map(|l| l.final_evaluation.cost).collect::<Vec<_>>()),
            arg_percent: arg,
        });
    }
    write_csv(
        &out.join("policy_table.csv"),
        &[
            "policy",
            "seeds",
            "s_avg",
            "i_tot",
            "s_tot",
            "final_cost",
            "arg_percent",
        ],
        &table,
    )?;
    write_run_meta(&out, "train", workers.current_num_threads(), started)?;
    Ok(TrainOutcome { runs, summary })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationRow {
    pub entropy_bits: f64,
    pub required_shots: u64,
    pub hd_budget: f64,
    pub confidence: f64,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct CalibrationOutcome {
    pub points: Vec<CalibrationPoint>,
    pub fit: Option<dds_core::calibration::LinearFit>,
}

pub fn cmd_calibrate(cfg: &LoadedConfig) -> Result<CalibrationOutcome, CliError> {
    let started = unix_now();
    let spec = &cfg.config.calibration;
    if spec.family.is_empty() {
        return Err(CliError::Validation("calibration.family: must not be empty".into()));
    }
    let family =
        make_target_family(&spec.family).map_err(|e| CliError::Validation(format!("calibration.family: {e}")))?;
    if !(spec.hd_budget > 0.0 && spec.hd_budget < 1.0) {
        return Err(CliError::Validation("calibration.hd_budget: must lie in (0, 1)".into()));
    }
    if !(spec.confidence > 0.0 && spec.confidence < 1.0) {
        return Err(CliError::Validation(
            "calibration.confidence: must lie in (0, 1)".into(),
        ));
    }
    if spec.trials < 30 {
        return Err(CliError::Validation("calibration.trials: need at least 30".into()));
    }
    let out = &cfg.config.output;
    let workers = pool(cfg.config.jobs)?;
    let points = workers
        .install(|| {
            family
                .par_iter()
                .enumerate()
                .map(|(i, target)| sweep_point(target, i, spec.hd_budget, spec.confidence, spec.trials, spec.seed))
                .collect::<dds_core::Result<Vec<_>>>()
        })
        .map_err(|e| CliError::Runtime(e.into()))?;

    let rows: Vec<CalibrationRow> = points
        .iter()
        .map(|p| CalibrationRow {
            entropy_bits: p.entropy_bits,
            required_shots: p.required_shots,
            hd_budget: p.target_distance,
            confidence: p.confidence,
            trials: p.trials,
            seed: p.seed,
        })
        .collect();
    write_csv(
        &out.join("calibration.csv"),
        &[
            "entropy_bits",
            "required_shots",
            "hd_budget",
            "confidence",
            "trials",
            "seed",
        ],
        &rows,
    )?;
    let fit = if points.len() >= 2 {
        fit_shots_vs_entropy(&points).ok()
    } else {
        None
    };
    write_json(&out.join("calibration_fit.json"), &fit)?;

    if !spec.grid_qubits.is_empty() && !spec.grid_shots.is_empty() {
        let rows = hellinger_grid(&spec.grid_qubits, &spec.grid_shots, spec.grid_trials, spec.seed)
            .map_err(|e| CliError::Validation(format!("calibration grid: {e}")))?;
        write_csv(
            &out.join("hellinger_grid.csv"),
            &["n_qubits", "shots", "median", "mean", "trials"],
            &rows,
        )?;
    }
    write_run_meta(out, "calibrate", workers.current_num_threads(), started)?;
    Ok(CalibrationOutcome { points, fit })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRunRow {
    pub k: f64,
    pub seed: u64,
    pub s_tot: u64,
    pub i_tot: u64,
    pub final_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub k: f64,
    pub seeds: usize,
    pub mean_s_tot: f64,
    pub se_s_tot: f64,
    pub mean_final_cost: f64,
    pub se_final_cost: f64,
}

pub fn cmd_sweep_k(cfg: &LoadedConfig) -> Result<Vec<SweepRow>, CliError> {
    let started = unix_now();
    let spec = &cfg.config.sweep_k;
    if spec.ks.is_empty() {
        return Err(CliError::Validation("sweep_k.ks: must not be empty".into()));
    }
    let problem = cfg.problem()?;
    let noise = cfg.noise()?;
    let seeds = cfg.seeds()?;
    let options = cfg.train_options()?;
    let mut jobs = Vec::new();
    for (i, &k) in spec.ks.iter().enumerate() {
        let policy = ShotPolicy {
            k,
            cap: spec.cap,
            ..ShotPolicy::new(PolicyKind::DdsM)
        };
        policy
            .validate()
            .map_err(|e| CliError::Validation(format!("sweep_k.ks[{i}]: {e}")))?;
        jobs.extend(seeds.iter().map(|&s| (policy, s)));
    }
    let workers = pool(cfg.config.jobs)?;
    let runs: Vec<SweepRunRow> = workers
        .install(|| {
            jobs.par_iter()
                .map(|(policy, seed)| {
                    let log = train(&problem.problem, policy, noise.as_ref(), &options, *seed)?;
                    Ok(SweepRunRow {
                        k: policy.k,
                        seed: *seed,
                        s_tot: log.s_tot,
                        i_tot: log.i_tot,
                        final_cost: log.final_evaluation.cost,
                    })
                })
                .collect::<dds_core::Result<Vec<_>>>()
        })
        .map_err(|e| CliError::Runtime(e.into()))?;
    let rows: Vec<SweepRow> = spec
        .ks
        .iter()
        .map(|&k| {
            let of_k: Vec<&SweepRunRow> = runs.iter().filter(|r| r.k == k).collect();
            let (mean_s_tot, se_s_tot) = mean_and_se(&of_k.iter().map(|r| r.s_tot as f64).collect::<Vec<_>>());
            let (mean_final_cost, se_final_cost) = mean_and_se(&of_k.iter().map(|r| r.final_cost).collect::<Vec<_>>());
            SweepRow {
                k,
                seeds: of_k.len(),
                mean_s_tot,
                se_s_tot,
                mean_final_cost,
                se_final_cost,
            }
        })
        .collect();
    let out = &cfg.config.output;
    write_csv(
        &out.join("sweep_k_runs.csv"),
        &["k", "seed", "s_tot", "i_tot", "final_cost"],
        &runs,
    )?;
    write_csv(
        &out.join("sweep_k.csv"),
        &[
            "k",
            "seeds",
            "mean_s_tot",
            "se_s_tot",
            "mean_final_cost",
            "se_final_cost",
        ],
        &rows,
    )?;
    write_run_meta(out, "sweep-k", workers.current_num_threads(), started)?;
    Ok(rows)
}

/// JSON logs named directly, or found (sorted) inside named directories.
pub fn collect_logs(inputs: &[PathBuf]) -> Result<Vec<TrainLog>, CliError> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(input)
                .map_err(|e| CliError::Validation(format!("{}: {e}", input.display())))?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            found.sort();
            files.extend(found);
        } else if input.is_file() {
            files.push(input.clone());
        } else {
            return Err(CliError::Validation(format!("{}: file not found", input.display())));
        }
    }
    if files.is_empty() {
        return Err(CliError::Validation("no log files given".into()));
    }
    files
        .iter()
        .map(|f| {
            let text = std::fs::read_to_string(f).map_err(|e| CliError::Validation(format!("{}: {e}", f.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", f.display())))
        })
        .collect()
}

pub fn cmd_compare(inputs: &[PathBuf], out: &Path) -> Result<Vec<ComparisonRow>, CliError> {
    let logs = collect_logs(inputs)?;
    let rows = compare(&logs).map_err(|e| CliError::Validation(e.to_string()))?;
    write_csv(
        &out.join("comparison.csv"),
        &[
            "policy",
            "seeds",
            "mean_s_tot",
            "reduction_pct",
            "mean_arg",
            "arg_delta_vs_fixed",
        ],
        &rows,
    )?;
    Ok(rows)
}

pub fn cmd_gen_graph(
    model: GraphModel,
    n_nodes: usize,
    seed: u64,
    params: GraphParams,
    out: &Path,
) -> Result<PathBuf, CliError> {
    let instance =
        GraphInstance::generate(model, n_nodes, seed, params).map_err(|e| CliError::Validation(e.to_string()))?;
    let path = out.join(format!("graph_{}_n{n_nodes}_s{seed}.json", model.label()));
    write_json(&path, &instance)?;
    Ok(path)
}
