//! Gate-level depolarizing noise by stochastic Pauli insertion.
//!
//! Each trajectory draws, gate by gate, whether a depolarizing error fires
//! (probability `p1` after one-qubit gates, `p2` after two-qubit gates) and
//! which non-identity Pauli it inserts. A trajectory is then measured for
//! `batch` shots.
//!
//! Error decisions come from a dedicated noise stream, and measurement
//! outcomes come from the measurement stream with one `f64` per shot, the
//! same consumption pattern as [`crate::sampling::sample_counts`]. With
//! `p1 = p2 = 0` no trajectory ever deviates from the ideal circuit, so the
//! noisy and noiseless samplers return identical counts for the same
//! measurement stream.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};
use crate::sampling::{CdfSampler, Counts};
use crate::statevector::{run_circuit, Circuit, GateKind, QuantumState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub p1: f64,
    pub p2: f64,
    pub label: String,
}

impl NoiseModel {
    pub fn new(p1: f64, p2: f64, label: impl Into<String>) -> Result<Self> {
        let model = Self {
            p1,
            p2,
            label: label.into(),
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p1", self.p1), ("p2", self.p2)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidNoise(format!("{name} = {p} is outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.p1 == 0.0 && self.p2 == 0.0
    }

    /// Looks up a shipped preset by label.
    pub fn preset(name: &str) -> Option<Self> {
        PRESETS
            .iter()
            .find(|(label, ..)| label.eq_ignore_ascii_case(name))
            .map(|&(label, p1, p2)| Self {
                p1,
                p2,
                label: label.to_owned(),
            })
    }
}

/// Representative error rates for two device generations. These are
/// placeholders chosen for plausibility, not values calibrated against any
/// particular machine.
pub const PRESETS: [(&str, f64, f64); 2] = [("heron-like", 2.5e-4, 2.5e-3), ("eagle-like", 5e-4, 8e-3)];

/// How shots are spread over noise realizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryPlan {
    pub trajectories: u64,
    /// Shots measured per realization (the last one may get fewer).
    pub batch: u64,
    /// The requested batch exceeded the shot count and was clamped.
    pub clamped: bool,
}

/// `ceil(shots / batch)` realizations; a batch larger than `shots` collapses
/// to a single trajectory and is flagged.
pub fn trajectories_per_batch(shots: u64, batch: u64) -> Result<TrajectoryPlan> {
    if batch < 1 {
        return Err(Error::InvalidNoise("trajectory batch must be >= 1".into()));
    }
    if shots < 1 {
        return Err(Error::TooFewShots { min: 1, got: shots });
    }
    let clamped = batch > shots;
    let batch = batch.min(shots);
    Ok(TrajectoryPlan {
        trajectories: shots.div_ceil(batch),
        batch,
        clamped,
    })
}

/// Budget for cached intermediate ideal states, in amplitudes.
const CHECKPOINT_AMPLITUDES: usize = 1 << 22;

/// Ideal states after every `stride`-th gate, built on first use.
struct Checkpoints {
    stride: usize,
    states: Vec<QuantumState>,
}

impl Checkpoints {
    fn build(circuit: &Circuit, angles: &[f64], budget: usize) -> Result<Self> {
        let gates = circuit.gates();
        let dim = 1usize << circuit.n_qubits();
        let slots = (budget / dim).max(1);
        let stride = (gates.len() + 1).div_ceil(slots).max(1);
        let mut state = QuantumState::zero(circuit.n_qubits())?;
        let mut states = vec![state.clone()];
        for (g, gate) in gates.iter().enumerate() {
            state.apply_unchecked(gate.kind, &gate.targets, angles[g]);
            if (g + 1) % stride == 0 {
                states.push(state.clone());
            }
        }
        Ok(Self { stride, states })
    }

    /// Latest cached state with at most `gate` gates applied, and its gate count.
    fn before(&self, gate: usize) -> (QuantumState, usize) {
        let slot = (gate / self.stride).min(self.states.len() - 1);
        (self.states[slot].clone(), slot * self.stride)
    }
}

const PAULI_KINDS: [GateKind; 4] = [GateKind::X, GateKind::X, GateKind::Y, GateKind::Z];

fn apply_pauli(state: &mut QuantumState, code: usize, qubit: usize) {
    if code != 0 {
        state.apply_unchecked(PAULI_KINDS[code], &[qubit], 0.0);
    }
}

/// Samples `shots` outcomes of `circuit` under `noise`, measuring each noise
/// realization `batch` times.
pub fn sample_counts_noisy_with<R1, R2>(
    circuit: &Circuit,
    parameters: &[f64],
    shots: u64,
    noise: &NoiseModel,
    batch: u64,
    measure_rng: &mut R1,
    noise_rng: &mut R2,
) -> Result<Counts>
where
    R1: Rng + ?Sized,
    R2: Rng + ?Sized,
{
    sample_trajectories(
        circuit,
        parameters,
        shots,
        noise,
        batch,
        measure_rng,
        noise_rng,
        CHECKPOINT_AMPLITUDES,
    )
}

#[allow(clippy::too_many_arguments)]
fn sample_trajectories<R1, R2>(
    circuit: &Circuit,
    parameters: &[f64],
    shots: u64,
    noise: &NoiseModel,
    batch: u64,
    measure_rng: &mut R1,
    noise_rng: &mut R2,
    checkpoint_budget: usize,
) -> Result<Counts>
where
    R1: Rng + ?Sized,
    R2: Rng + ?Sized,
{
    noise.validate()?;
    let plan = trajectories_per_batch(shots, batch)?;
    let ideal_state = run_circuit(circuit, parameters)?;
    let ideal = CdfSampler::from_state(&ideal_state)?;
    let mut dense = vec![0u64; ideal_state.dim()];
    if noise.is_noiseless() {
        ideal.draw_into(&mut dense, shots, measure_rng);
        return Counts::from_dense(circuit.n_qubits(), &dense);
    }

    let gates = circuit.gates();
    let angles: Vec<f64> = gates
        .iter()
        .map(|g| g.angle.map_or(0.0, |a| a.resolve(parameters)))
        .collect();
    let mut checkpoints: Option<Checkpoints> = None;
    // (gate index, pauli code per target) for the current trajectory
    let mut errors: Vec<(usize, [usize; 2])> = Vec::new();
    let mut remaining = shots;
    for _ in 0..plan.trajectories {
        let take = remaining.min(plan.batch);
        remaining -= take;
        errors.clear();
        for (g, gate) in gates.iter().enumerate() {
            if gate.is_two_qubit() {
                if noise.p2 > 0.0 && noise_rng.random::<f64>() < noise.p2 {
                    let code = noise_rng.random_range(1..16usize);
                    errors.push((g, [code & 3, code >> 2]));
                }
            } else if noise.p1 > 0.0 && noise_rng.random::<f64>() < noise.p1 {
                errors.push((g, [noise_rng.random_range(1..4usize), 0]));
            }
        }
        if errors.is_empty() {
            ideal.draw_into(&mut dense, take, measure_rng);
            continue;
        }
        let cache = match &mut checkpoints {
            Some(c) => c,
            none => none.insert(Checkpoints::build(circuit, &angles, checkpoint_budget)?),
        };
        let first = errors[0].0;
        let (mut state, start) = cache.before(first);
        let mut pending = errors.iter().peekable();
        for (g, gate) in gates.iter().enumerate().skip(start) {
            state.apply_unchecked(gate.kind, &gate.targets, angles[g]);
            if let Some(&&(at, codes)) = pending.peek() {
                if at == g {
                    for (&q, &code) in gate.targets.iter().zip(&codes) {
                        apply_pauli(&mut state, code, q);
                    }
                    pending.next();
                }
            }
        }
        CdfSampler::from_state(&state)?.draw_into(&mut dense, take, measure_rng);
    }
    Counts::from_dense(circuit.n_qubits(), &dense)
}

/// Seeded form: measurement outcomes from `(seed, index, Measure)` and error
/// realizations from `(seed, index, Noise)`.
pub fn sample_counts_noisy(
    circuit: &Circuit,
    parameters: &[f64],
    shots: u64,
    noise: &NoiseModel,
    seed: u64,
    index: u64,
) -> Result<Counts> {
    sample_counts_noisy_with(
        circuit,
        parameters,
        shots,
        noise,
        1,
        &mut stream(seed, index, Purpose::Measure),
        &mut stream(seed, index, Purpose::Noise),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::build_qaoa_circuit;
    use crate::graphs::{generate_graph, GraphModel, GraphParams};
    use crate::sampling::{hellinger_counts, sample_counts};
    use crate::statevector::{exact_distribution, Angle, Gate};

    fn qaoa6() -> (Circuit, Vec<f64>) {
        let g = generate_graph(GraphModel::SherringtonKirkpatrick, 6, 11, &GraphParams::default()).unwrap();
        let c = build_qaoa_circuit(&g, 2).unwrap();
        (c, vec![0.4, -0.3, 0.7, 0.2])
    }

    #[test]
    fn zero_noise_bit_identical() {
        let (c, params) = qaoa6();
        let zero = NoiseModel::new(0.0, 0.0, "ideal").unwrap();
        for seed in 0..5 {
            let noisy = sample_counts_noisy(&c, &params, 1024, &zero, seed, 3).unwrap();
            let state = run_circuit(&c, &params).unwrap();
            let clean = sample_counts(&state, 1024, &mut stream(seed, 3, Purpose::Measure)).unwrap();
            assert_eq!(noisy, clean);
        }
    }

    #[test]
    fn full_depolarization_after_h() {
        let c = Circuit::new(1, 0, vec![Gate::h(0)]).unwrap();
        let full = NoiseModel::new(1.0, 0.0, "full").unwrap();
        let n = 100_000u64;
        let counts = sample_counts_noisy(&c, &[], n, &full, 9, 0).unwrap();
        let ones = counts.get(1) as f64;
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((ones - n as f64 / 2.0).abs() < 6.0 * sigma, "{ones}");
    }

    #[test]
    fn single_qubit_pauli_statistics() {
        // X or Y flips |0>, Z does not: P(1) = 2/3 when an error always fires.
        let c = Circuit::new(1, 1, vec![Gate::rz(0, Angle::slot(0))]).unwrap();
        let full = NoiseModel::new(1.0, 0.0, "full").unwrap();
        let n = 60_000u64;
        let counts = sample_counts_noisy(&c, &[0.3], n, &full, 4, 0).unwrap();
        let p = counts.get(1) as f64 / n as f64;
        assert!((p - 2.0 / 3.0).abs() < 6.0 * (2.0 / 9.0 / n as f64).sqrt(), "{p}");
    }

    #[test]
    fn deep_noisy_circuit_is_near_maximally_mixed() {
        let g = generate_graph(GraphModel::SherringtonKirkpatrick, 4, 2, &GraphParams::default()).unwrap();
        let c = build_qaoa_circuit(&g, 20).unwrap();
        let params: Vec<f64> = (0..40).map(|i| 0.1 + 0.05 * i as f64).collect();
        let noise = NoiseModel::new(0.0, 0.5, "heavy").unwrap();
        let counts = sample_counts_noisy(&c, &params, 20_000, &noise, 1, 0).unwrap();
        assert!(counts.entropy() >= 0.95 * 4.0, "{}", counts.entropy());
    }

    #[test]
    fn checkpoint_resume_matches_replay() {
        // Replays starting from a checkpoint after every gate and from the
        // initial state alone must agree bit for bit.
        let (c, params) = qaoa6();
        let noise = NoiseModel::new(0.02, 0.1, "x").unwrap();
        let run = |budget: usize| {
            sample_trajectories(
                &c,
                &params,
                512,
                &noise,
                1,
                &mut stream(5, 0, Purpose::Measure),
                &mut stream(5, 0, Purpose::Noise),
                budget,
            )
            .unwrap()
        };
        let dense = run(64 * (c.gates().len() + 1));
        assert_eq!(dense, run(1));
        assert_eq!(dense, run(64 * 7));
        assert_eq!(dense.total_shots(), 512);
    }

    #[test]
    fn trajectory_plans() {
        assert_eq!(
            trajectories_per_batch(1024, 1).unwrap(),
            TrajectoryPlan {
                trajectories: 1024,
                batch: 1,
                clamped: false
            }
        );
        assert_eq!(trajectories_per_batch(1024, 16).unwrap().trajectories, 64);
        assert_eq!(trajectories_per_batch(1000, 16).unwrap().trajectories, 63);
        let p = trajectories_per_batch(10, 16).unwrap();
        assert_eq!((p.trajectories, p.clamped), (1, true));
        assert!(trajectories_per_batch(10, 0).is_err());
    }

    #[test]
    fn batched_sampling_keeps_shot_total() {
        let (c, params) = qaoa6();
        let noise = NoiseModel::preset("eagle-like").unwrap();
        let counts = sample_counts_noisy_with(
            &c,
            &params,
            1000,
            &noise,
            16,
            &mut stream(1, 0, Purpose::Measure),
            &mut stream(1, 0, Purpose::Noise),
        )
        .unwrap();
        assert_eq!(counts.total_shots(), 1000);
    }

    #[test]
    fn validation() {
        assert!(NoiseModel::new(1.5, 0.0, "bad").is_err());
        assert!(NoiseModel::new(0.0, -0.1, "bad").is_err());
        assert_eq!(NoiseModel::preset("HERON-LIKE").unwrap().p2, 2.5e-3);
        assert!(NoiseModel::preset("unknown").is_none());
        let c = Circuit::new(1, 0, vec![Gate::h(0)]).unwrap();
        let n = NoiseModel::new(0.1, 0.1, "n").unwrap();
        assert!(matches!(
            sample_counts_noisy(&c, &[], 0, &n, 0, 0),
            Err(Error::TooFewShots { .. })
        ));
    }

    #[test]
    fn hellinger_degrades_with_two_qubit_noise() {
        let (c, params) = qaoa6();
        let exact = exact_distribution(&run_circuit(&c, &params).unwrap());
        let seeds = 20u64;
        let mut means = Vec::new();
        for p2 in [0.0, 1e-2, 1e-1] {
            let noise = NoiseModel::new(0.0, p2, "sweep").unwrap();
            let total: f64 = (0..seeds)
                .map(|s| {
                    let counts = sample_counts_noisy(&c, &params, 1024, &noise, s, 0).unwrap();
                    hellinger_counts(&counts, &exact).unwrap()
                })
                .sum();
            means.push(total / seeds as f64);
        }
        assert!(means.windows(2).all(|w| w[0] <= w[1]), "{means:?}");
    }
}
