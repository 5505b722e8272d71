//! Shot sampling and distribution metrics (Shannon entropy, Hellinger distance).

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::statevector::{exact_distribution, QuantumState};

/// Measurement histogram of one shot batch, keyed by basis-state index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    n_qubits: usize,
    histogram: BTreeMap<u64, u64>,
    total_shots: u64,
}

impl Counts {
    pub fn new(n_qubits: usize, histogram: BTreeMap<u64, u64>) -> Result<Self> {
        let dim = 1u64 << n_qubits;
        if let Some((&key, _)) = histogram.iter().next_back() {
            if key >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim as usize,
                    got: key as usize,
                });
            }
        }
        let histogram: BTreeMap<u64, u64> = histogram.into_iter().filter(|&(_, c)| c > 0).collect();
        let total_shots = histogram.values().sum();
        if total_shots == 0 {
            return Err(Error::TooFewShots { min: 1, got: 0 });
        }
        Ok(Self {
            n_qubits,
            histogram,
            total_shots,
        })
    }

    /// Builds counts from a dense histogram of length `2^n_qubits`.
    pub fn from_dense(n_qubits: usize, dense: &[u64]) -> Result<Self> {
        if dense.len() != 1usize << n_qubits {
            return Err(Error::DimensionMismatch {
                expected: 1 << n_qubits,
                got: dense.len(),
            });
        }
        let histogram = dense
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (i as u64, c))
            .collect();
        Self::new(n_qubits, histogram)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn total_shots(&self) -> u64 {
        self.total_shots
    }

    pub fn histogram(&self) -> &BTreeMap<u64, u64> {
        &self.histogram
    }

    pub fn get(&self, outcome: u64) -> u64 {
        self.histogram.get(&outcome).copied().unwrap_or(0)
    }

    /// Empirical distribution over all `2^n` outcomes.
    pub fn to_dist(&self) -> ProbDist {
        let mut probabilities = vec![0.0; 1usize << self.n_qubits];
        let total = self.total_shots as f64;
        for (&k, &c) in &self.histogram {
            probabilities[k as usize] = c as f64 / total;
        }
        ProbDist { probabilities }
    }

    /// Shannon entropy of the empirical distribution, in bits.
    pub fn entropy(&self) -> f64 {
        let total = self.total_shots as f64;
        let h = -self
            .histogram
            .values()
            .map(|&c| {
                let p = c as f64 / total;
                p * p.log2()
            })
            .sum::<f64>();
        h.max(0.0)
    }
}

/// A probability vector indexed by outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbDist {
    probabilities: Vec<f64>,
}

impl ProbDist {
    pub const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        if let Some(p) = probabilities.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidDistribution(format!("entry {p} is not a probability")));
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("entries sum to {sum}")));
        }
        Ok(Self { probabilities })
    }

    pub fn uniform(outcomes: usize) -> Result<Self> {
        if outcomes == 0 {
            return Err(Error::EmptyDistribution);
        }
        Ok(Self {
            probabilities: vec![1.0 / outcomes as f64; outcomes],
        })
    }

    pub fn point_mass(outcomes: usize, at: usize) -> Result<Self> {
        if at >= outcomes {
            return Err(Error::InvalidDistribution(format!(
                "point mass at {at} outside {outcomes} outcomes"
            )));
        }
        let mut probabilities = vec![0.0; outcomes];
        probabilities[at] = 1.0;
        Ok(Self { probabilities })
    }

    pub fn from_state(state: &QuantumState) -> Self {
        Self {
            probabilities: exact_distribution(state),
        }
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn entropy(&self) -> f64 {
        shannon_entropy(&self.probabilities)
    }
}

/// `-Σ p log2 p` with `0 log 0 = 0`. Does not validate normalization.
pub fn shannon_entropy(probabilities: &[f64]) -> f64 {
    let h = -probabilities
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.log2())
        .sum::<f64>();
    h.max(0.0)
}

/// Entropy of either a [`ProbDist`] or [`Counts`] (normalized first).
pub fn entropy<D: HasEntropy + ?Sized>(dist: &D) -> Result<f64> {
    dist.checked_entropy()
}

pub trait HasEntropy {
    fn checked_entropy(&self) -> Result<f64>;
}

impl HasEntropy for ProbDist {
    fn checked_entropy(&self) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        Ok(self.entropy())
    }
}

impl HasEntropy for Counts {
    fn checked_entropy(&self) -> Result<f64> {
        Ok(self.entropy())
    }
}

impl HasEntropy for [f64] {
    fn checked_entropy(&self) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        Ok(shannon_entropy(self))
    }
}

/// Hellinger distance `sqrt(Σ (√p_i − √q_i)^2 / 2)`.
pub fn hellinger(p: &ProbDist, q: &ProbDist) -> Result<f64> {
    hellinger_slices(p.probabilities(), q.probabilities())
}

pub fn hellinger_slices(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: q.len(),
        });
    }
    if p.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    let sum: f64 = p
        .iter()
        .zip(q)
        .map(|(a, b)| {
            let d = a.sqrt() - b.sqrt();
            d * d
        })
        .sum();
    Ok((0.5 * sum).sqrt().min(1.0))
}

/// Hellinger distance between empirical counts and an exact distribution,
/// aligned by basis-state index (unobserved outcomes have probability 0).
pub fn hellinger_counts(counts: &Counts, exact: &[f64]) -> Result<f64> {
    let dim = 1usize << counts.n_qubits();
    if exact.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: exact.len(),
        });
    }
    hellinger_slices(counts.to_dist().probabilities(), exact)
}

/// Hellinger distance between a dense histogram and an exact distribution.
pub fn hellinger_dense(histogram: &[u64], exact: &[f64]) -> Result<f64> {
    if histogram.len() != exact.len() {
        return Err(Error::DimensionMismatch {
            expected: exact.len(),
            got: histogram.len(),
        });
    }
    let total: u64 = histogram.iter().sum();
    if total == 0 {
        return Err(Error::TooFewShots { min: 1, got: 0 });
    }
    let total = total as f64;
    let sum: f64 = histogram
        .iter()
        .zip(exact)
        .map(|(&c, &q)| {
            let d = (c as f64 / total).sqrt() - q.sqrt();
            d * d
        })
        .sum();
    Ok((0.5 * sum).sqrt().min(1.0))
}

/// Inverse-CDF sampler over a fixed probability vector.
///
/// Each shot consumes exactly one `f64` from the stream, so two samplers over
/// the same distribution and stream produce identical outcomes.
#[derive(Debug, Clone)]
pub struct CdfSampler {
    cumulative: Vec<f64>,
    last_nonzero: usize,
}

impl CdfSampler {
    pub fn new(probabilities: &[f64]) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        let mut acc = 0.0;
        let cumulative: Vec<f64> = probabilities
            .iter()
            .map(|&p| {
                acc += p.max(0.0);
                acc
            })
            .collect();
        if acc <= 0.0 || !acc.is_finite() {
            return Err(Error::InvalidDistribution("no probability mass".into()));
        }
        let last_nonzero = probabilities
            .iter()
            .rposition(|&p| p > 0.0)
            .expect("positive mass implies a positive entry");
        Ok(Self {
            cumulative,
            last_nonzero,
        })
    }

    pub fn from_state(state: &QuantumState) -> Result<Self> {
        Self::new(&exact_distribution(state))
    }

    pub fn outcomes(&self) -> usize {
        self.cumulative.len()
    }

    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = self.cumulative[self.cumulative.len() - 1];
        let u = rng.random::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= u).min(self.last_nonzero)
    }

    /// Adds `shots` draws into a dense histogram.
    pub fn draw_into<R: Rng + ?Sized>(&self, histogram: &mut [u64], shots: u64, rng: &mut R) {
        for _ in 0..shots {
            histogram[self.draw(rng)] += 1;
        }
    }
}

/// Draws `shots` independent computational-basis measurements of `state`.
pub fn sample_counts<R: Rng + ?Sized>(state: &QuantumState, shots: u64, rng: &mut R) -> Result<Counts> {
    if shots < 1 {
        return Err(Error::TooFewShots { min: 1, got: shots });
    }
    let sampler = CdfSampler::from_state(state)?;
    let mut dense = vec![0u64; state.dim()];
    sampler.draw_into(&mut dense, shots, rng);
    Counts::from_dense(state.n_qubits(), &dense)
}

/// Draws `shots` outcomes from an explicit distribution over `2^n_qubits` outcomes.
pub fn sample_dist<R: Rng + ?Sized>(dist: &ProbDist, shots: u64, rng: &mut R) -> Result<Vec<u64>> {
    if shots < 1 {
        return Err(Error::TooFewShots { min: 1, got: shots });
    }
    let sampler = CdfSampler::new(dist.probabilities())?;
    let mut dense = vec![0u64; dist.len()];
    sampler.draw_into(&mut dense, shots, rng);
    Ok(dense)
}
