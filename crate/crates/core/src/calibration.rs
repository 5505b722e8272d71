//! How many shots a distribution needs, as a function of its entropy.
//!
//! `required_shots` finds the smallest shot count at which a chosen fraction
//! of Monte-Carlo empirical histograms land within a Hellinger budget of the
//! target. Sweeping it over targets of increasing entropy and regressing
//! `log2(shots)` on entropy gives the exponential law the DDS policy relies on.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream, Purpose};
use crate::sampling::{hellinger_dense, CdfSampler, ProbDist};
use crate::statevector::{exact_distribution, run_circuit, Angle, Circuit, Gate};

/// Largest shot count `required_shots` will probe.
pub const SHOT_CAP: u64 = 10_000_000;

pub const DEFAULT_TRIALS: usize = 100;
pub const DEFAULT_CONFIDENCE: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub entropy_bits: f64,
    pub required_shots: u64,
    pub target_distance: f64,
    pub confidence: f64,
    pub trials: usize,
    pub seed: u64,
}

fn check_request(hd_budget: f64, confidence: f64, trials: usize) -> Result<()> {
    if !(hd_budget > 0.0 && hd_budget < 1.0) {
        return Err(Error::InvalidCalibration(format!("budget {hd_budget} outside (0, 1)")));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidCalibration(format!(
            "confidence {confidence} outside (0, 1)"
        )));
    }
    if trials < 30 {
        return Err(Error::InvalidCalibration(format!("{trials} trials, need at least 30")));
    }
    Ok(())
}

/// Hellinger distances of `trials` empirical histograms at `shots` shots.
/// Trial `t` draws from `stream(derive_seed(seed, shots), t, Calibration)`.
pub fn trial_distances(target: &ProbDist, shots: u64, trials: usize, seed: u64) -> Result<Vec<f64>> {
    let sampler = CdfSampler::new(target.probabilities())?;
    let probe_seed = derive_seed(seed, shots);
    let mut histogram = vec![0u64; target.len()];
    (0..trials)
        .map(|t| {
            histogram.iter_mut().for_each(|c| *c = 0);
            let mut rng = stream(probe_seed, t as u64, Purpose::Calibration);
            sampler.draw_into(&mut histogram, shots, &mut rng);
            hellinger_dense(&histogram, target.probabilities())
        })
        .collect()
}

fn probe(target: &ProbDist, shots: u64, hd_budget: f64, needed: usize, trials: usize, seed: u64) -> Result<bool> {
    let distances = trial_distances(target, shots, trials, seed)?;
    Ok(distances.iter().filter(|&&d| d <= hd_budget).count() >= needed)
}

/// Smallest `S` such that at least `confidence·trials` of `trials` empirical
/// histograms of size `S` are within `hd_budget` of `target`. Brackets by
/// doubling from 1, then bisects.
pub fn required_shots(target: &ProbDist, hd_budget: f64, confidence: f64, trials: usize, seed: u64) -> Result<u64> {
    check_request(hd_budget, confidence, trials)?;
    let needed = (confidence * trials as f64).ceil() as usize;
    if probe(target, 1, hd_budget, needed, trials, seed)? {
        return Ok(1);
    }
    let mut lo = 1u64;
    let mut hi = 2u64;
    while !probe(target, hi, hd_budget, needed, trials, seed)? {
        if hi >= SHOT_CAP {
            return Err(Error::BudgetUnreachable {
                budget: hd_budget,
                cap: SHOT_CAP,
            });
        }
        lo = hi;
        hi = (hi * 2).min(SHOT_CAP);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if probe(target, mid, hd_budget, needed, trials, seed)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Calibration point `index` of a sweep seeded with `seed`.
pub fn sweep_point(
    target: &ProbDist,
    index: usize,
    hd_budget: f64,
    confidence: f64,
    trials: usize,
    seed: u64,
) -> Result<CalibrationPoint> {
    let point_seed = derive_seed(seed, index as u64);
    Ok(CalibrationPoint {
        entropy_bits: target.entropy(),
        required_shots: required_shots(target, hd_budget, confidence, trials, point_seed)?,
        target_distance: hd_budget,
        confidence,
        trials,
        seed: point_seed,
    })
}

/// One calibration point per target, in family order.
pub fn entropy_shots_sweep(
    family: &[ProbDist],
    hd_budget: f64,
    confidence: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<CalibrationPoint>> {
    if family.is_empty() {
        return Err(Error::InvalidCalibration("empty target family".into()));
    }
    family
        .iter()
        .enumerate()
        .map(|(i, target)| sweep_point(target, i, hd_budget, confidence, trials, seed))
        .collect()
}

/// A target distribution over `2^n_qubits` outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetKind {
    Uniform {
        n_qubits: usize,
    },
    /// Equal weight on all-zeros and all-ones.
    Ghz {
        n_qubits: usize,
    },
    /// Uniform over the first `outcomes` basis states.
    TruncatedUniform {
        n_qubits: usize,
        outcomes: usize,
    },
    /// Output of a seeded circuit of `depth` rotation layers plus CNOT ladders.
    RandomCircuit {
        n_qubits: usize,
        depth: usize,
        seed: u64,
    },
    /// Two outcomes with masses `top_mass` and `1 − top_mass`.
    Skewed {
        n_qubits: usize,
        top_mass: f64,
    },
}

fn outcomes_of(n_qubits: usize) -> Result<usize> {
    if n_qubits == 0 || n_qubits > 20 {
        return Err(Error::InvalidCalibration(format!("{n_qubits} qubits outside 1..=20")));
    }
    Ok(1 << n_qubits)
}

pub fn make_target(kind: TargetKind) -> Result<ProbDist> {
    match kind {
        TargetKind::Uniform { n_qubits } => ProbDist::uniform(outcomes_of(n_qubits)?),
        TargetKind::Ghz { n_qubits } => {
            let m = outcomes_of(n_qubits)?;
            let mut p = vec![0.0; m];
            p[0] = 0.5;
            p[m - 1] = 0.5;
            ProbDist::new(p)
        }
        TargetKind::TruncatedUniform { n_qubits, outcomes } => {
            let m = outcomes_of(n_qubits)?;
            if outcomes == 0 || outcomes > m {
                return Err(Error::InvalidCalibration(format!(
                    "{outcomes} outcomes outside 1..={m}"
                )));
            }
            let mut p = vec![0.0; m];
            p[..outcomes].iter_mut().for_each(|x| *x = 1.0 / outcomes as f64);
            ProbDist::new(p)
        }
        TargetKind::RandomCircuit { n_qubits, depth, seed } => {
            let mut rng = stream(seed, 0, Purpose::TargetCircuit);
            let mut gates = Vec::new();
            for _ in 0..depth {
                for q in 0..n_qubits {
                    gates.push(Gate::ry(q, Angle::Fixed(rng.random_range(-PI..PI))));
                    gates.push(Gate::rz(q, Angle::Fixed(rng.random_range(-PI..PI))));
                }
                for q in 1..n_qubits {
                    gates.push(Gate::cnot(q - 1, q));
                }
            }
            let circuit = Circuit::new(n_qubits, 0, gates)?;
            let mut p = exact_distribution(&run_circuit(&circuit, &[])?);
            let total: f64 = p.iter().sum();
            p.iter_mut().for_each(|x| *x /= total);
            ProbDist::new(p)
        }
        TargetKind::Skewed { n_qubits, top_mass } => {
            let m = outcomes_of(n_qubits)?;
            if !(0.5..=1.0).contains(&top_mass) {
                return Err(Error::InvalidCalibration(format!(
                    "top mass {top_mass} outside [0.5, 1]"
                )));
            }
            let mut p = vec![0.0; m];
            p[0] = top_mass;
            p[1] = 1.0 - top_mass;
            ProbDist::new(p)
        }
    }
}

pub fn make_target_family(kinds: &[TargetKind]) -> Result<Vec<ProbDist>> {
    kinds.iter().map(|&k| make_target(k)).collect()
}

/// Twelve 8-qubit targets from about 0.14 to 8 bits: one skewed pair, then
/// uniform over 2, 3, 4, 6, 8, 12, 16, 32, 64, 128 and 256 outcomes.
pub fn default_family() -> Vec<TargetKind> {
    let mut kinds = vec![TargetKind::Skewed {
        n_qubits: 8,
        top_mass: 0.98,
    }];
    kinds.extend(
        [2, 3, 4, 6, 8, 12, 16, 32, 64, 128, 256]
            .into_iter()
            .map(|outcomes| TargetKind::TruncatedUniform { n_qubits: 8, outcomes }),
    );
    kinds
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `y` on `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidCalibration("fit needs two or more paired points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidCalibration("all x values coincide".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

/// Regresses `log2(required_shots)` on entropy.
pub fn fit_shots_vs_entropy(points: &[CalibrationPoint]) -> Result<LinearFit> {
    let x: Vec<f64> = points.iter().map(|p| p.entropy_bits).collect();
    let y: Vec<f64> = points.iter().map(|p| (p.required_shots as f64).log2()).collect();
    linear_fit(&x, &y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HellingerPoint {
    pub n_qubits: usize,
    pub shots: u64,
    pub median: f64,
    pub mean: f64,
    pub trials: usize,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Hellinger distance between uniform targets and their empirical histograms
/// for every `(qubits, shots)` pair; cell `(i, j)` uses `derive_seed(seed, i)`.
pub fn hellinger_grid(qubits: &[usize], shots: &[u64], trials: usize, seed: u64) -> Result<Vec<HellingerPoint>> {
    if trials == 0 {
        return Err(Error::InvalidCalibration("need at least one trial".into()));
    }
    let mut grid = Vec::with_capacity(qubits.len() * shots.len());
    for (i, &n) in qubits.iter().enumerate() {
        let target = make_target(TargetKind::Uniform { n_qubits: n })?;
        for &s in shots {
            let mut d = trial_distances(&target, s, trials, derive_seed(seed, i as u64))?;
            let mean = d.iter().sum::<f64>() / trials as f64;
            grid.push(HellingerPoint {
                n_qubits: n,
                shots: s,
                median: median(&mut d),
                mean,
                trials,
            });
        }
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_mass_needs_one_shot() {
        let target = ProbDist::point_mass(16, 5).unwrap();
        for budget in [0.01, 0.05, 0.5] {
            assert_eq!(required_shots(&target, budget, 0.9, 50, 1).unwrap(), 1);
        }
        let pts = entropy_shots_sweep(&[target], 0.05, 0.9, 30, 0).unwrap();
        assert_eq!((pts[0].required_shots, pts[0].entropy_bits), (1, 0.0));
    }

    #[test]
    fn uniform_four_qubits_in_band() {
        let target = make_target(TargetKind::Uniform { n_qubits: 4 }).unwrap();
        let s = required_shots(&target, 0.05, 0.9, 100, 2).unwrap();
        assert!((375..=1500).contains(&s), "{s}");
    }

    #[test]
    fn halving_budget_quadruples_shots() {
        let target = make_target(TargetKind::Uniform { n_qubits: 4 }).unwrap();
        let wide = required_shots(&target, 0.05, 0.9, 100, 3).unwrap() as f64;
        let tight = required_shots(&target, 0.025, 0.9, 100, 3).unwrap() as f64;
        let ratio = tight / wide;
        assert!((2.0..=6.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn required_shots_is_minimal() {
        let target = make_target(TargetKind::Uniform { n_qubits: 3 }).unwrap();
        let s = required_shots(&target, 0.05, 0.9, 60, 4).unwrap();
        let pass = |shots| {
            let d = trial_distances(&target, shots, 60, 4).unwrap();
            d.iter().filter(|&&x| x <= 0.05).count() >= 54
        };
        assert!(pass(s));
        assert!(!pass(s - 1));
    }

    #[test]
    fn uniform_family_increases() {
        let family: Vec<ProbDist> = (1..=8)
            .map(|m| make_target(TargetKind::Uniform { n_qubits: m }).unwrap())
            .collect();
        let pts = entropy_shots_sweep(&family, 0.05, 0.9, 40, 5).unwrap();
        for w in pts.windows(2) {
            assert!(w[1].required_shots > w[0].required_shots, "{pts:?}");
        }
    }

    #[test]
    fn target_entropies() {
        let e = |k| make_target(k).unwrap().entropy();
        assert_eq!(e(TargetKind::Uniform { n_qubits: 4 }), 4.0);
        assert_eq!(e(TargetKind::Ghz { n_qubits: 5 }), 1.0);
        assert!(
            (e(TargetKind::TruncatedUniform {
                n_qubits: 3,
                outcomes: 3
            }) - 3f64.log2())
            .abs()
                < 1e-12
        );
        let h = e(TargetKind::RandomCircuit {
            n_qubits: 4,
            depth: 3,
            seed: 1,
        });
        assert!(h > 0.0 && h <= 4.0);
        let mixed = make_target_family(&[
            TargetKind::TruncatedUniform {
                n_qubits: 3,
                outcomes: 1,
            },
            TargetKind::Ghz { n_qubits: 3 },
            TargetKind::Uniform { n_qubits: 3 },
        ])
        .unwrap();
        let hs: Vec<f64> = mixed.iter().map(|d| d.entropy()).collect();
        assert_eq!(hs, vec![0.0, 1.0, 3.0]);
    }

    #[test]
    fn default_family_spans_zero_to_eight_bits() {
        let family = make_target_family(&default_family()).unwrap();
        assert_eq!(family.len(), 12);
        let hs: Vec<f64> = family.iter().map(|d| d.entropy()).collect();
        assert!(hs[0] > 0.1 && hs[0] < 0.2);
        assert_eq!(hs[11], 8.0);
        assert!(hs.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn invalid_requests() {
        let t = ProbDist::uniform(4).unwrap();
        assert!(required_shots(&t, 0.0, 0.9, 100, 0).is_err());
        assert!(required_shots(&t, 0.05, 1.0, 100, 0).is_err());
        assert!(required_shots(&t, 0.05, 0.9, 10, 0).is_err());
        assert!(entropy_shots_sweep(&[], 0.05, 0.9, 100, 0).is_err());
        assert!(make_target(TargetKind::TruncatedUniform {
            n_qubits: 2,
            outcomes: 5
        })
        .is_err());
        assert!(make_target(TargetKind::Uniform { n_qubits: 0 }).is_err());
    }

    #[test]
    fn fit_recovers_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(linear_fit(&[1.0, 1.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn grid_trends() {
        let grid = hellinger_grid(&[2, 4], &[100, 1000], 30, 1).unwrap();
        assert_eq!(grid.len(), 4);
        assert!(grid[1].median < grid[0].median);
        assert!(grid[3].median > grid[1].median);
        assert_eq!(median(&mut [3.0, 1.0, 2.0, 10.0]), 2.5);
    }
}
