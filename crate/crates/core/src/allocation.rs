//! Per-iteration shot allocation policies.
//!
//! * `fixed`  – constant `s_fixed` shots.
//! * `linear` – `max(floor, s_begin − l·i)`.
//! * `step`   – `max(floor, s_begin − 10·l·⌊i/10⌋)`.
//! * `dds`    – `clamp(round(k·2^H_prev), 1, cap)` with `H_prev` the entropy
//!   (bits) of the previous iteration's counts.
//! * `dds_m`  – `dds` with the large default cap.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Fixed,
    Linear,
    Step,
    Dds,
    DdsM,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Fixed => "fixed",
            PolicyKind::Linear => "linear",
            PolicyKind::Step => "step",
            PolicyKind::Dds => "dds",
            PolicyKind::DdsM => "dds_m",
        }
    }

    pub fn is_entropy_driven(self) -> bool {
        matches!(self, PolicyKind::Dds | PolicyKind::DdsM)
    }

    pub fn default_cap(self) -> u64 {
        match self {
            PolicyKind::DdsM => 100_000,
            _ => 1024,
        }
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "fixed" | "std" => Ok(PolicyKind::Fixed),
            "linear" | "lin_fn" => Ok(PolicyKind::Linear),
            "step" | "step_fn" => Ok(PolicyKind::Step),
            "dds" => Ok(PolicyKind::Dds),
            "dds_m" => Ok(PolicyKind::DdsM),
            _ => Err(Error::InvalidPolicy(format!("unknown policy {s:?}"))),
        }
    }
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotPolicy {
    pub kind: PolicyKind,
    pub s_fixed: u64,
    pub s_begin: u64,
    pub slope_l: u64,
    /// Lower bound for the tiered (`linear`, `step`) schedules only.
    pub floor: u64,
    pub k: f64,
    pub cap: u64,
    /// Entropy assumed before the first measurement, in bits.
    pub initial_entropy: f64,
}

impl ShotPolicy {
    /// Policy of `kind` with default constants; `k` defaults to 64.
    pub fn new(kind: PolicyKind) -> Self {
        Self {
            kind,
            s_fixed: 1024,
            s_begin: 1000,
            slope_l: 10,
            floor: 20,
            k: 64.0,
            cap: kind.default_cap(),
            initial_entropy: 10.0,
        }
    }

    pub fn fixed(shots: u64) -> Self {
        Self {
            s_fixed: shots,
            ..Self::new(PolicyKind::Fixed)
        }
    }

    pub fn dds(k: f64) -> Self {
        Self {
            k,
            ..Self::new(PolicyKind::Dds)
        }
    }

    pub fn dds_m(k: f64) -> Self {
        Self {
            k,
            ..Self::new(PolicyKind::DdsM)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidPolicy(msg));
        if self.floor < 1 {
            return fail("floor must be >= 1".into());
        }
        if self.cap < 1 {
            return fail("cap must be >= 1".into());
        }
        if !(self.k.is_finite() && self.k > 0.0) {
            return fail(format!("k must be positive, got {}", self.k));
        }
        if self.kind == PolicyKind::Fixed && self.s_fixed < 1 {
            return fail("s_fixed must be >= 1".into());
        }
        if !(self.initial_entropy.is_finite() && self.initial_entropy >= 0.0) {
            return fail(format!("initial entropy must be >= 0, got {}", self.initial_entropy));
        }
        Ok(())
    }

    /// Shots for iteration `iteration` (0-based) given the previous entropy in bits.
    pub fn next_shots(&self, iteration: u64, prev_entropy: f64) -> u64 {
        match self.kind {
            PolicyKind::Fixed => self.s_fixed.max(1),
            PolicyKind::Linear => self
                .s_begin
                .saturating_sub(self.slope_l.saturating_mul(iteration))
                .max(self.floor),
            PolicyKind::Step => self
                .s_begin
                .saturating_sub(10u64.saturating_mul(self.slope_l).saturating_mul(iteration / 10))
                .max(self.floor),
            PolicyKind::Dds | PolicyKind::DdsM => dds_shots(self.k, prev_entropy, self.cap),
        }
    }
}

/// `round_half_up(k·2^entropy)` clamped to `[1, cap]`.
pub fn dds_shots(k: f64, entropy_bits: f64, cap: u64) -> u64 {
    let raw = (k * entropy_bits.max(0.0).exp2() + 0.5).floor();
    if raw >= cap as f64 {
        cap.max(1)
    } else {
        (raw as u64).clamp(1, cap.max(1))
    }
}

const K_ANCHORS: [(f64, f64); 3] = [(4.0, 6.0), (8.0, 3.0), (12.0, 1.0)];

/// Default DDS constant by circuit width: 64 at 4 qubits, 8 at 8, 2 at 12,
/// piecewise-linear in `log2 k` between (and beyond) the anchors, clamped to `[1, 64]`.
pub fn default_k(n_qubits: usize) -> f64 {
    let n = n_qubits as f64;
    let segment = if n <= K_ANCHORS[1].0 {
        (K_ANCHORS[0], K_ANCHORS[1])
    } else {
        (K_ANCHORS[1], K_ANCHORS[2])
    };
    let ((x0, y0), (x1, y1)) = segment;
    let log_k = y0 + (y1 - y0) * (n - x0) / (x1 - x0);
    log_k.exp2().clamp(1.0, 64.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linear_schedule() {
        let p = ShotPolicy::new(PolicyKind::Linear);
        assert_eq!(p.next_shots(0, 0.0), 1000);
        assert_eq!(p.next_shots(98, 0.0), 20);
        assert_eq!(p.next_shots(200, 0.0), 20);
        assert_eq!(p.next_shots(50, 0.0), 500);
    }

    #[test]
    fn step_schedule() {
        let p = ShotPolicy::new(PolicyKind::Step);
        assert_eq!(p.next_shots(15, 0.0), 900);
        assert_eq!(p.next_shots(9, 0.0), 1000);
        assert_eq!(p.next_shots(10, 0.0), 900);
        assert_eq!(p.next_shots(99, 0.0), 100);
        assert_eq!(p.next_shots(100, 0.0), 20);
    }

    #[test]
    fn dds_examples() {
        let p = ShotPolicy::dds(64.0);
        assert_eq!(p.next_shots(3, 2.0), 256);
        assert_eq!(p.next_shots(0, 10.0), 1024);
        assert_eq!(ShotPolicy::dds_m(64.0).next_shots(0, 10.0), 65_536);
        assert_eq!(ShotPolicy::dds_m(128.0).next_shots(0, 10.0), 100_000);
        assert_eq!(ShotPolicy::dds(0.01).next_shots(0, 0.0), 1);
    }

    #[test]
    fn dds_rounds_half_up() {
        assert_eq!(dds_shots(2.5, 0.0, 1024), 3);
        assert_eq!(dds_shots(2.49, 0.0, 1024), 2);
        assert_eq!(dds_shots(1.5, 1.0, 1024), 3);
    }

    #[test]
    fn fixed_ignores_entropy() {
        let p = ShotPolicy::fixed(1024);
        assert_eq!(p.next_shots(0, 0.0), 1024);
        assert_eq!(p.next_shots(500, 12.0), 1024);
    }

    #[test]
    fn default_k_anchors() {
        assert_eq!(default_k(4), 64.0);
        assert_eq!(default_k(8), 8.0);
        assert_eq!(default_k(12), 2.0);
        assert_eq!(default_k(2), 64.0);
        assert_eq!(default_k(16), 1.0);
        assert!((default_k(6) - 2f64.powf(4.5)).abs() < 1e-12);
        assert!((default_k(10) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        assert!(ShotPolicy::dds(0.0).validate().is_err());
        assert!(ShotPolicy {
            floor: 0,
            ..ShotPolicy::new(PolicyKind::Linear)
        }
        .validate()
        .is_err());
        assert!(ShotPolicy::new(PolicyKind::Step).validate().is_ok());
        assert_eq!("lin_fn".parse::<PolicyKind>().unwrap(), PolicyKind::Linear);
        assert_eq!("dds-m".parse::<PolicyKind>().unwrap(), PolicyKind::DdsM);
    }

    proptest! {
        #[test]
        fn tiered_monotone_and_floored(i in 0u64..2000, s_begin in 20u64..5000, l in 0u64..50, floor in 1u64..100) {
            for kind in [PolicyKind::Linear, PolicyKind::Step] {
                let p = ShotPolicy { kind, s_begin, slope_l: l, floor, ..ShotPolicy::new(kind) };
                prop_assert!(p.next_shots(i + 1, 0.0) <= p.next_shots(i, 0.0));
                prop_assert!(p.next_shots(i, 0.0) >= floor);
            }
        }

        #[test]
        fn step_meets_linear_at_decades(d in 0u64..100) {
            let lin = ShotPolicy { floor: 1, s_begin: 100_000, ..ShotPolicy::new(PolicyKind::Linear) };
            let step = ShotPolicy { kind: PolicyKind::Step, ..lin };
            prop_assert_eq!(step.next_shots(10 * d, 0.0), lin.next_shots(10 * d, 0.0));
        }

        #[test]
        fn dds_bounded_and_monotone(h1 in 0.0..32.0f64, h2 in 0.0..32.0f64, k in 0.001..1000.0f64, cap in 1u64..200_000) {
            let (lo, hi) = if h1 <= h2 { (h1, h2) } else { (h2, h1) };
            let a = dds_shots(k, lo, cap);
            let b = dds_shots(k, hi, cap);
            prop_assert!((1..=cap).contains(&a) && (1..=cap).contains(&b));
            prop_assert!(a <= b);
        }
    }
}
