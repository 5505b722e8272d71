//! The variational training loop with per-evaluation shot allocation.
//!
//! One iteration is one objective evaluation: choose the shot count from the
//! policy and the previous evaluation's entropy, sample the circuit, turn the
//! counts into a cost and an entropy. After the optimizer stops, the best
//! parameters are re-evaluated once at a fixed shot count so that runs under
//! different policies are compared on equal footing.
//!
//! Random streams used by a run with seed `s`:
//!
//! | stream                                | use                              |
//! |---------------------------------------|----------------------------------|
//! | `(s, 0, InitialParameters)`           | starting point                   |
//! | `(s, i, Measure)` / `(s, i, Noise)`   | iteration `i` (0-based)          |
//! | `(s, i, Group(g))` / `GroupNoise(g)`  | group `g` of a grouped observable|
//! | index [`FINAL_INDEX`]                 | the final evaluation             |

use std::f64::consts::PI;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::allocation::ShotPolicy;
use crate::ansatz::{
    build_hw_efficient_circuit, build_qaoa_circuit, estimate_from_groups, group_and_measure, group_terms,
    qaoa_cost_from_counts, split_shots, EntropySource, MeasurementGroup, Observable,
};
use crate::error::{Error, Result};
use crate::graphs::{brute_force_max_cut, WeightedGraph};
use crate::noise::{sample_counts_noisy_with, trajectories_per_batch, NoiseModel};
use crate::optimizer::{minimize, OptimizerOptions, StopReason};
use crate::rng::{stream, Purpose};
use crate::sampling::{sample_counts, Counts};
use crate::statevector::{run_circuit, Circuit};

/// Shot count of the common post-training evaluation.
pub const FINAL_SHOTS: u64 = 1024;

/// Stream index reserved for the final evaluation.
pub const FINAL_INDEX: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    /// QAOA max-cut on `graph`; the ideal energy is minus the brute-force optimum.
    MaxCut { graph: WeightedGraph, layers: usize },
    /// Hardware-efficient ansatz against a Pauli observable.
    Hamiltonian {
        observable: Observable,
        layers: usize,
        reference_energy: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainOptions {
    pub optimizer: OptimizerOptions,
    /// Starting point; drawn uniformly from `[−π, π)` when absent.
    pub initial_parameters: Option<Vec<f64>>,
    /// Shots measured per noise realization.
    pub trajectory_batch: u64,
    pub entropy_source: EntropySource,
    pub final_shots: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            optimizer: OptimizerOptions::default(),
            initial_parameters: None,
            trajectory_batch: 1,
            entropy_source: EntropySource::ZGroup,
            final_shots: FINAL_SHOTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: u64,
    pub shots: u64,
    pub entropy_bits: f64,
    pub cost: f64,
    pub parameters: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalEvaluation {
    pub shots: u64,
    pub cost: f64,
    pub entropy_bits: f64,
    pub parameters: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub seed: u64,
    pub policy: ShotPolicy,
    pub problem: String,
    /// Instance identifier (file name or generator spec), filled in by callers.
    pub instance: Option<String>,
    pub noise: Option<NoiseModel>,
    pub trajectory_batch: u64,
    pub optimizer: String,
    pub optimizer_options: OptimizerOptions,
    pub entropy_source: EntropySource,
    pub initial_parameters: Vec<f64>,
    pub e_ideal: Option<f64>,
    pub stop_reason: StopReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub metadata: RunMetadata,
    pub records: Vec<IterationRecord>,
    pub s_tot: u64,
    pub s_avg: f64,
    pub i_tot: u64,
    pub final_evaluation: FinalEvaluation,
    /// Sampling rounds whose trajectory batch exceeded the shot count.
    pub clamped_batches: u64,
    /// Seconds per iteration. Not serialized: data files must be reproducible.
    #[serde(skip)]
    pub wall_time_s: Vec<f64>,
}

impl TrainLog {
    /// Checks the shot-accounting identities.
    pub fn check_invariants(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSummary(m));
        if self.records.len() as u64 != self.i_tot {
            return bad(format!("{} records but i_tot = {}", self.records.len(), self.i_tot));
        }
        let sum: u64 = self.records.iter().map(|r| r.shots).sum();
        if sum != self.s_tot {
            return bad(format!("shot column sums to {sum}, s_tot = {}", self.s_tot));
        }
        if self.i_tot == 0 || self.s_avg != self.s_tot as f64 / self.i_tot as f64 {
            return bad(format!("s_avg {} != {}/{}", self.s_avg, self.s_tot, self.i_tot));
        }
        Ok(())
    }

    /// ARG of the final evaluation against the recorded ideal energy.
    pub fn arg(&self) -> Result<f64> {
        let e_ideal = self.metadata.e_ideal.ok_or(Error::ZeroIdealEnergy)?;
        arg_metric(e_ideal, self.final_evaluation.cost)
    }
}

/// `100·|(e_ideal − e_real) / e_ideal|`.
pub fn arg_metric(e_ideal: f64, e_real: f64) -> Result<f64> {
    if e_ideal == 0.0 {
        return Err(Error::ZeroIdealEnergy);
    }
    Ok(100.0 * ((e_ideal - e_real) / e_ideal).abs())
}

struct Measurement {
    cost: f64,
    entropy: f64,
    clamped: bool,
}

enum Prepared {
    MaxCut {
        graph: WeightedGraph,
        circuit: Circuit,
    },
    Hamiltonian {
        observable: Observable,
        circuit: Circuit,
        groups: Vec<MeasurementGroup>,
        /// Ansatz followed by each group's basis change, for noisy sampling.
        group_circuits: Vec<Circuit>,
    },
}

impl Prepared {
    fn new(problem: &Problem) -> Result<(Self, String, Option<f64>)> {
        match problem {
            Problem::MaxCut { graph, layers } => {
                let circuit = build_qaoa_circuit(graph, *layers)?;
                let best = brute_force_max_cut(graph)?.best_value;
                let label = format!(
                    "maxcut nodes={} edges={} layers={layers}",
                    graph.n_nodes(),
                    graph.edges().len()
                );
                let prepared = Prepared::MaxCut {
                    graph: graph.clone(),
                    circuit,
                };
                Ok((prepared, label, Some(-best)))
            }
            Problem::Hamiltonian {
                observable,
                layers,
                reference_energy,
            } => {
                let circuit = build_hw_efficient_circuit(observable.n_qubits(), *layers)?;
                let groups = group_terms(observable);
                let group_circuits = groups
                    .iter()
                    .map(|g| {
                        let mut gates = circuit.gates().to_vec();
                        gates.extend(g.basis_rotation());
                        Circuit::new(circuit.n_qubits(), circuit.n_parameters(), gates)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let label = format!(
                    "hamiltonian qubits={} terms={} groups={} layers={layers}",
                    observable.n_qubits(),
                    observable.terms().len(),
                    groups.len()
                );
                let prepared = Prepared::Hamiltonian {
                    observable: observable.clone(),
                    circuit,
                    groups,
                    group_circuits,
                };
                Ok((prepared, label, *reference_energy))
            }
        }
    }

    fn n_parameters(&self) -> usize {
        match self {
            Prepared::MaxCut { circuit, .. } | Prepared::Hamiltonian { circuit, .. } => circuit.n_parameters(),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn sample(
        circuit: &Circuit,
        params: &[f64],
        shots: u64,
        noise: Option<&NoiseModel>,
        batch: u64,
        streams: (Purpose, Purpose),
        seed: u64,
        index: u64,
    ) -> Result<(Counts, bool)> {
        let mut measure = stream(seed, index, streams.0);
        match noise {
            None => Ok((
                sample_counts(&run_circuit(circuit, params)?, shots, &mut measure)?,
                false,
            )),
            Some(model) => {
                let clamped = trajectories_per_batch(shots, batch)?.clamped;
                let mut noise_rng = stream(seed, index, streams.1);
                let counts =
                    sample_counts_noisy_with(circuit, params, shots, model, batch, &mut measure, &mut noise_rng)?;
                Ok((counts, clamped))
            }
        }
    }

    fn measure(
        &self,
        params: &[f64],
        shots: u64,
        noise: Option<&NoiseModel>,
        options: &TrainOptions,
        seed: u64,
        index: u64,
    ) -> Result<Measurement> {
        if shots < 1 {
            return Err(Error::TooFewShots { min: 1, got: shots });
        }
        let batch = options.trajectory_batch;
        match self {
            Prepared::MaxCut { graph, circuit } => {
                let streams = (Purpose::Measure, Purpose::Noise);
                let (counts, clamped) = Self::sample(circuit, params, shots, noise, batch, streams, seed, index)?;
                Ok(Measurement {
                    cost: qaoa_cost_from_counts(&counts, graph)?,
                    entropy: counts.entropy(),
                    clamped,
                })
            }
            Prepared::Hamiltonian {
                observable,
                circuit,
                groups,
                group_circuits,
            } => {
                let source = options.entropy_source;
                let Some(model) = noise else {
                    let state = run_circuit(circuit, params)?;
                    let est = group_and_measure(&state, observable, shots, seed, index, source)?;
                    return Ok(Measurement {
                        cost: est.expectation,
                        entropy: est.primary_counts.entropy(),
                        clamped: false,
                    });
                };
                let split = split_shots(shots, groups.len())?;
                let mut all_counts = Vec::with_capacity(groups.len());
                let mut clamped = false;
                for (g, (gc, &group_shots)) in group_circuits.iter().zip(&split).enumerate() {
                    let streams = (Purpose::Group(g as u32), Purpose::GroupNoise(g as u32));
                    let (counts, c) = Self::sample(gc, params, group_shots, Some(model), batch, streams, seed, index)?;
                    clamped |= c;
                    all_counts.push(counts);
                }
                let est = estimate_from_groups(observable, groups, all_counts, source)?;
                Ok(Measurement {
                    cost: est.expectation,
                    entropy: est.primary_counts.entropy(),
                    clamped,
                })
            }
        }
    }
}

/// Draws `n` angles uniformly from `[−π, π)`.
pub fn random_initial_parameters(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed, 0, Purpose::InitialParameters);
    (0..n).map(|_| rng.random_range(-PI..PI)).collect()
}

/// Trains `problem` under `policy` and returns the complete run log.
pub fn train(
    problem: &Problem,
    policy: &ShotPolicy,
    noise: Option<&NoiseModel>,
    options: &TrainOptions,
    seed: u64,
) -> Result<TrainLog> {
    policy.validate()?;
    options.optimizer.validate()?;
    if let Some(model) = noise {
        model.validate()?;
    }
    if options.trajectory_batch < 1 {
        return Err(Error::InvalidOptions("trajectory_batch must be >= 1".into()));
    }
    if options.final_shots < 1 {
        return Err(Error::InvalidOptions("final_shots must be >= 1".into()));
    }
    let (prepared, label, e_ideal) = Prepared::new(problem)?;
    let x0 = match &options.initial_parameters {
        Some(x) if x.len() != prepared.n_parameters() => {
            return Err(Error::ParameterLength {
                expected: prepared.n_parameters(),
                got: x.len(),
            })
        }
        Some(x) => x.clone(),
        None => random_initial_parameters(prepared.n_parameters(), seed),
    };

    let mut records: Vec<IterationRecord> = Vec::new();
    let mut wall_time_s = Vec::new();
    let mut clamped_batches = 0u64;
    let mut prev_entropy = policy.initial_entropy;
    let objective = |params: &[f64]| -> Result<f64> {
        let started = Instant::now();
        let iteration = records.len() as u64;
        let shots = policy.next_shots(iteration, prev_entropy);
        let m = prepared.measure(params, shots, noise, options, seed, iteration)?;
        prev_entropy = m.entropy;
        clamped_batches += u64::from(m.clamped);
        records.push(IterationRecord {
            iteration,
            shots,
            entropy_bits: m.entropy,
            cost: m.cost,
            parameters: params.to_vec(),
        });
        wall_time_s.push(started.elapsed().as_secs_f64());
        Ok(m.cost)
    };
    let result = minimize(objective, &x0, &options.optimizer)?;

    let fin = prepared.measure(&result.x_best, options.final_shots, noise, options, seed, FINAL_INDEX)?;
    let i_tot = records.len() as u64;
    let s_tot: u64 = records.iter().map(|r| r.shots).sum();
    let log = TrainLog {
        metadata: RunMetadata {
            seed,
            policy: *policy,
            problem: label,
            instance: None,
            noise: noise.cloned(),
            trajectory_batch: options.trajectory_batch,
            optimizer: options.optimizer.method.description().to_owned(),
            optimizer_options: options.optimizer.clone(),
            entropy_source: options.entropy_source,
            initial_parameters: x0,
            e_ideal,
            stop_reason: result.stop,
        },
        records,
        s_tot,
        s_avg: s_tot as f64 / i_tot as f64,
        i_tot,
        final_evaluation: FinalEvaluation {
            shots: options.final_shots,
            cost: fin.cost,
            entropy_bits: fin.entropy,
            parameters: result.x_best,
        },
        clamped_batches: clamped_batches + u64::from(fin.clamped),
        wall_time_s,
    };
    log.check_invariants()?;
    Ok(log)
}
