//! Run configuration: one JSON document, with command-line overrides applied on top.
//!
//! Precedence is flags, then config file, then built-in defaults. Relative
//! file paths inside the config resolve against the config file's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use dds_core::allocation::{default_k, PolicyKind, ShotPolicy};
use dds_core::ansatz::{parse_hamiltonian, EntropySource};
use dds_core::calibration::{default_family, TargetKind, DEFAULT_CONFIDENCE, DEFAULT_TRIALS};
use dds_core::graphs::{GraphInstance, GraphModel, GraphParams};
use dds_core::noise::NoiseModel;
use dds_core::optimizer::OptimizerOptions;
use dds_core::training::{Problem, TrainOptions};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    Maxcut {
        model: GraphModel,
        n_nodes: usize,
        #[serde(default)]
        graph_seed: u64,
        #[serde(default)]
        params: GraphParams,
        layers: usize,
    },
    /// A graph instance written by `gen-graph`.
    GraphFile { path: PathBuf, layers: usize },
    Hamiltonian {
        path: PathBuf,
        layers: usize,
        #[serde(default)]
        reference_energy: Option<f64>,
    },
}

impl Default for ProblemSpec {
    fn default() -> Self {
        ProblemSpec::Maxcut {
            model: GraphModel::SherringtonKirkpatrick,
            n_nodes: 4,
            graph_seed: 1,
            params: GraphParams::default(),
            layers: 2,
        }
    }
}

/// A policy given by name, or as an object overriding individual constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolicySpec {
    Name(String),
    Detailed(PolicyFields),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyFields {
    pub kind: String,
    /// Label used in file names; defaults to the policy kind.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub k: Option<f64>,
    #[serde(default)]
    pub cap: Option<u64>,
    #[serde(default)]
    pub s_fixed: Option<u64>,
    #[serde(default)]
    pub s_begin: Option<u64>,
    #[serde(default)]
    pub slope_l: Option<u64>,
    #[serde(default)]
    pub floor: Option<u64>,
    #[serde(default)]
    pub initial_entropy: Option<f64>,
}

/// `"none"`, a preset label, or explicit rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NoiseSpec {
    Named(String),
    Model(NoiseModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSpec {
    pub hd_budget: f64,
    pub confidence: f64,
    pub trials: usize,
    pub seed: u64,
    pub family: Vec<TargetKind>,
    /// Qubit counts of the uniform targets in the Hellinger-vs-shots grid; empty skips it.
    pub grid_qubits: Vec<usize>,
    pub grid_shots: Vec<u64>,
    pub grid_trials: usize,
}

impl Default for CalibrationSpec {
    fn default() -> Self {
        Self {
            hd_budget: 0.05,
            confidence: DEFAULT_CONFIDENCE,
            trials: DEFAULT_TRIALS,
            seed: 0,
            family: default_family(),
            grid_qubits: vec![2, 4, 6, 8],
            grid_shots: vec![100, 1_000, 10_000, 100_000],
            grid_trials: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub ks: Vec<f64>,
    pub cap: u64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            ks: vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0],
            cap: PolicyKind::DdsM.default_cap(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub policies: Vec<PolicySpec>,
    pub noise: Option<NoiseSpec>,
    pub optimizer: OptimizerOptions,
    pub initial_parameters: Option<Vec<f64>>,
    pub trajectory_batch: u64,
    pub entropy_source: EntropySource,
    pub seeds: Vec<u64>,
    pub output: PathBuf,
    pub jobs: Option<usize>,
    pub calibration: CalibrationSpec,
    pub sweep_k: SweepSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: ProblemSpec::default(),
            policies: vec![PolicySpec::Name("fixed".into()), PolicySpec::Name("dds".into())],
            noise: None,
            optimizer: OptimizerOptions::default(),
            initial_parameters: None,
            trajectory_batch: 1,
            entropy_source: EntropySource::ZGroup,
            seeds: vec![0],
            output: PathBuf::from("out"),
            jobs: None,
            calibration: CalibrationSpec::default(),
            sweep_k: SweepSpec::default(),
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub policies: Vec<String>,
    pub noise: Option<String>,
    pub jobs: Option<usize>,
}

/// Loaded configuration plus the directory its relative paths resolve against.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub base_dir: PathBuf,
}

pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<LoadedConfig, CliError> {
    let (mut config, base_dir) = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))?;
            let config: RunConfig =
                serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))?;
            let dir = p.parent().map(Path::to_path_buf).unwrap_or_default();
            (config, dir)
        }
        None => (RunConfig::default(), PathBuf::new()),
    };
    if let Some(seed) = overrides.seed {
        config.seeds = vec![seed];
    }
    if let Some(out) = &overrides.out {
        config.output = out.clone();
    }
    if !overrides.policies.is_empty() {
        config.policies = overrides.policies.iter().cloned().map(PolicySpec::Name).collect();
    }
    if let Some(noise) = &overrides.noise {
        config.noise = Some(NoiseSpec::Named(noise.clone()));
    }
    if overrides.jobs.is_some() {
        config.jobs = overrides.jobs;
    }
    if config.jobs == Some(0) {
        return Err(CliError::Validation("jobs: must be at least 1".into()));
    }
    Ok(LoadedConfig { config, base_dir })
}

/// The problem, ready to train, and a short instance label for log metadata.
#[derive(Debug, Clone)]
pub struct ResolvedProblem {
    pub problem: Problem,
    pub instance: String,
    pub n_qubits: usize,
}

fn invalid(field: &str, message: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{field}: {message}"))
}

impl LoadedConfig {
    fn resolve_path(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn problem(&self) -> Result<ResolvedProblem, CliError> {
        let read = |path: &Path| {
            let full = self.resolve_path(path);
            std::fs::read_to_string(&full).map_err(|e| {
                invalid(
                    "problem.path",
                    format!("{}: file not found or unreadable ({e})", full.display()),
                )
            })
        };
        match &self.config.problem {
            ProblemSpec::Maxcut {
                model,
                n_nodes,
                graph_seed,
                params,
                layers,
            } => {
                let instance = GraphInstance::generate(*model, *n_nodes, *graph_seed, *params)
                    .map_err(|e| invalid("problem", e))?;
                let graph = instance.graph().map_err(|e| invalid("problem", e))?;
                Ok(ResolvedProblem {
                    problem: Problem::MaxCut { graph, layers: *layers },
                    instance: format!("{} n={n_nodes} seed={graph_seed}", model.label()),
                    n_qubits: *n_nodes,
                })
            }
            ProblemSpec::GraphFile { path, layers } => {
                let text = read(path)?;
                let instance: GraphInstance = serde_json::from_str(&text)
                    .map_err(|e| invalid("problem.path", format!("{}: {e}", path.display())))?;
                let graph = instance.graph().map_err(|e| invalid("problem.path", e))?;
                Ok(ResolvedProblem {
                    problem: Problem::MaxCut { graph, layers: *layers },
                    instance: path.display().to_string(),
                    n_qubits: instance.n_nodes,
                })
            }
            ProblemSpec::Hamiltonian {
                path,
                layers,
                reference_energy,
            } => {
                let text = read(path)?;
                let observable = parse_hamiltonian(&text)
                    .map_err(|e| invalid("problem.path", format!("{}: {e}", path.display())))?;
                let n_qubits = observable.n_qubits();
                Ok(ResolvedProblem {
                    problem: Problem::Hamiltonian {
                        observable,
                        layers: *layers,
                        reference_energy: *reference_energy,
                    },
                    instance: path.display().to_string(),
                    n_qubits,
                })
            }
        }
    }

    /// Labelled policies; DDS variants without an explicit `k` use the width default.
    pub fn policies(&self, n_qubits: usize) -> Result<Vec<(String, ShotPolicy)>, CliError> {
        if self.config.policies.is_empty() {
            return Err(invalid("policies", "at least one policy is required"));
        }
        let mut out: Vec<(String, ShotPolicy)> = Vec::new();
        for (i, spec) in self.config.policies.iter().enumerate() {
            let field = format!("policies[{i}]");
            let fields = match spec {
                PolicySpec::Name(name) => PolicyFields {
                    kind: name.clone(),
                    name: None,
                    k: None,
                    cap: None,
                    s_fixed: None,
                    s_begin: None,
                    slope_l: None,
                    floor: None,
                    initial_entropy: None,
                },
                PolicySpec::Detailed(f) => f.clone(),
            };
            let kind: PolicyKind = fields.kind.parse().map_err(|e| invalid(&field, e))?;
            let mut policy = ShotPolicy::new(kind);
            policy.k = fields.k.unwrap_or_else(|| default_k(n_qubits));
            policy.cap = fields.cap.unwrap_or(policy.cap);
            policy.s_fixed = fields.s_fixed.unwrap_or(policy.s_fixed);
            policy.s_begin = fields.s_begin.unwrap_or(policy.s_begin);
            policy.slope_l = fields.slope_l.unwrap_or(policy.slope_l);
            policy.floor = fields.floor.unwrap_or(policy.floor);
            policy.initial_entropy = fields.initial_entropy.unwrap_or(policy.initial_entropy);
            policy.validate().map_err(|e| invalid(&field, e))?;
            let label = fields.name.unwrap_or_else(|| kind.name().to_owned());
            if label.is_empty() || !label.chars().all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c)) {
                return Err(invalid(
                    &field,
                    format!("label {label:?} must be alphanumeric, '_', '-' or '.'"),
                ));
            }
            if out.iter().any(|(l, _)| *l == label) {
                return Err(invalid(
                    &field,
                    format!("duplicate policy label {label:?}; set distinct `name`s"),
                ));
            }
            out.push((label, policy));
        }
        Ok(out)
    }

    pub fn noise(&self) -> Result<Option<NoiseModel>, CliError> {
        match &self.config.noise {
            None => Ok(None),
            Some(NoiseSpec::Named(name)) if name.eq_ignore_ascii_case("none") => Ok(None),
            Some(NoiseSpec::Named(name)) => NoiseModel::preset(name).map(Some).ok_or_else(|| {
                invalid(
                    "noise",
                    format!("unknown preset {name:?} (heron-like, eagle-like, none)"),
                )
            }),
            Some(NoiseSpec::Model(model)) => {
                model.validate().map_err(|e| invalid("noise", e))?;
                Ok(Some(model.clone()))
            }
        }
    }

    pub fn seeds(&self) -> Result<Vec<u64>, CliError> {
        let seeds = self.config.seeds.clone();
        if seeds.is_empty() {
            return Err(invalid("seeds", "at least one seed is required"));
        }
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != seeds.len() {
            return Err(invalid("seeds", "seeds must be distinct"));
        }
        Ok(seeds)
    }

    pub fn train_options(&self) -> Result<TrainOptions, CliError> {
        let c = &self.config;
        c.optimizer.validate().map_err(|e| invalid("optimizer", e))?;
        if c.trajectory_batch < 1 {
            return Err(invalid("trajectory_batch", "must be at least 1"));
        }
        Ok(TrainOptions {
            optimizer: c.optimizer.clone(),
            initial_parameters: c.initial_parameters.clone(),
            trajectory_batch: c.trajectory_batch,
            entropy_source: c.entropy_source,
            ..TrainOptions::default()
        })
    }
}
