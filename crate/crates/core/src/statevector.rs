//! Dense statevector simulation of parameterized circuits.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateKind {
    H,
    X,
    Y,
    Z,
    RX,
    RY,
    RZ,
    RZZ,
    CNOT,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::H => "H",
            GateKind::X => "X",
            GateKind::Y => "Y",
            GateKind::Z => "Z",
            GateKind::RX => "RX",
            GateKind::RY => "RY",
            GateKind::RZ => "RZ",
            GateKind::RZZ => "RZZ",
            GateKind::CNOT => "CNOT",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            GateKind::RZZ | GateKind::CNOT => 2,
            _ => 1,
        }
    }

    pub fn is_parameterized(self) -> bool {
        matches!(self, GateKind::RX | GateKind::RY | GateKind::RZ | GateKind::RZZ)
    }
}

/// Where a rotation gate takes its angle from.
///
/// `Slot` reads `scale * parameters[index]`; `Fixed` is a constant angle
/// (used for measurement-basis changes).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Angle {
    Slot { index: usize, scale: f64 },
    Fixed(f64),
}

impl Angle {
    pub fn slot(index: usize) -> Self {
        Angle::Slot { index, scale: 1.0 }
    }

    pub fn resolve(self, parameters: &[f64]) -> f64 {
        match self {
            Angle::Slot { index, scale } => scale * parameters[index],
            Angle::Fixed(value) => value,
        }
    }
}

/// One gate of a circuit. For CNOT the targets are `[control, target]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    pub angle: Option<Angle>,
}

impl Gate {
    pub fn new(kind: GateKind, targets: Vec<usize>, angle: Option<Angle>) -> Result<Self> {
        if targets.len() != kind.arity() {
            return Err(Error::TargetArity {
                kind: kind.name(),
                expected: kind.arity(),
                got: targets.len(),
            });
        }
        if targets.len() == 2 && targets[0] == targets[1] {
            return Err(Error::DuplicateTargets(targets));
        }
        match (kind.is_parameterized(), angle.is_some()) {
            (true, false) => return Err(Error::MissingAngle(kind.name())),
            (false, true) => return Err(Error::UnexpectedAngle(kind.name())),
            _ => {}
        }
        Ok(Self { kind, targets, angle })
    }

    fn fixed(kind: GateKind, targets: Vec<usize>) -> Self {
        Self {
            kind,
            targets,
            angle: None,
        }
    }

    pub fn h(q: usize) -> Self {
        Self::fixed(GateKind::H, vec![q])
    }

    pub fn x(q: usize) -> Self {
        Self::fixed(GateKind::X, vec![q])
    }

    pub fn y(q: usize) -> Self {
        Self::fixed(GateKind::Y, vec![q])
    }

    pub fn z(q: usize) -> Self {
        Self::fixed(GateKind::Z, vec![q])
    }

    pub fn rx(q: usize, angle: Angle) -> Self {
        Self {
            kind: GateKind::RX,
            targets: vec![q],
            angle: Some(angle),
        }
    }

    pub fn ry(q: usize, angle: Angle) -> Self {
        Self {
            kind: GateKind::RY,
            targets: vec![q],
            angle: Some(angle),
        }
    }

    pub fn rz(q: usize, angle: Angle) -> Self {
        Self {
            kind: GateKind::RZ,
            targets: vec![q],
            angle: Some(angle),
        }
    }

    /// Panics if `a == b`; use [`Gate::new`] for fallible construction.
    pub fn rzz(a: usize, b: usize, angle: Angle) -> Self {
        assert_ne!(a, b, "RZZ targets must differ");
        Self {
            kind: GateKind::RZZ,
            targets: vec![a, b],
            angle: Some(angle),
        }
    }

    /// Panics if `control == target`.
    pub fn cnot(control: usize, target: usize) -> Self {
        assert_ne!(control, target, "CNOT control and target must differ");
        Self::fixed(GateKind::CNOT, vec![control, target])
    }

    pub fn is_two_qubit(&self) -> bool {
        self.targets.len() == 2
    }
}

/// Ordered gate list over a fixed register, with a count of parameter slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    n_qubits: usize,
    n_parameters: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize, n_parameters: usize, gates: Vec<Gate>) -> Result<Self> {
        check_qubits(n_qubits)?;
        for gate in &gates {
            // Re-validate: fields are public so a gate may not have gone through Gate::new.
            Gate::new(gate.kind, gate.targets.clone(), gate.angle)?;
            for &q in &gate.targets {
                if q >= n_qubits {
                    return Err(Error::QubitOutOfRange { index: q, n_qubits });
                }
            }
            if let Some(Angle::Slot { index, .. }) = gate.angle {
                if index >= n_parameters {
                    return Err(Error::ParameterSlot {
                        slot: index,
                        n_parameters,
                    });
                }
            }
        }
        Ok(Self {
            n_qubits,
            n_parameters,
            gates,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_parameters(&self) -> usize {
        self.n_parameters
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn check_parameters(&self, parameters: &[f64]) -> Result<()> {
        if parameters.len() != self.n_parameters {
            return Err(Error::ParameterLength {
                expected: self.n_parameters,
                got: parameters.len(),
            });
        }
        Ok(())
    }

    /// Applies every gate to `state` in order.
    pub fn apply_to(&self, state: &mut QuantumState, parameters: &[f64]) -> Result<()> {
        self.check_parameters(parameters)?;
        if state.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                got: state.n_qubits(),
            });
        }
        for gate in &self.gates {
            let angle = gate.angle.map(|a| a.resolve(parameters));
            state.apply_unchecked(gate.kind, &gate.targets, angle.unwrap_or(0.0));
        }
        Ok(())
    }
}

fn check_qubits(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::TooManyQubits(n_qubits));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl QuantumState {
    /// The all-zeros basis state.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: index,
            });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amplitudes })
    }

    /// Wraps raw amplitudes. The caller is responsible for normalization.
    pub fn from_amplitudes(n_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_qubits(n_qubits)?;
        if amplitudes.len() != 1usize << n_qubits {
            return Err(Error::DimensionMismatch {
                expected: 1 << n_qubits,
                got: amplitudes.len(),
            });
        }
        Ok(Self { n_qubits, amplitudes })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Returns a new state with `gate` applied. `angle` must be given exactly
    /// when the gate is a rotation.
    pub fn apply_gate(&self, gate: &Gate, angle: Option<f64>) -> Result<Self> {
        let mut next = self.clone();
        next.apply_gate_mut(gate, angle)?;
        Ok(next)
    }

    pub fn apply_gate_mut(&mut self, gate: &Gate, angle: Option<f64>) -> Result<()> {
        let kind = gate.kind;
        if gate.targets.len() != kind.arity() {
            return Err(Error::TargetArity {
                kind: kind.name(),
                expected: kind.arity(),
                got: gate.targets.len(),
            });
        }
        for &q in &gate.targets {
            if q >= self.n_qubits {
                return Err(Error::QubitOutOfRange {
                    index: q,
                    n_qubits: self.n_qubits,
                });
            }
        }
        if gate.targets.len() == 2 && gate.targets[0] == gate.targets[1] {
            return Err(Error::DuplicateTargets(gate.targets.clone()));
        }
        let theta = match (kind.is_parameterized(), angle) {
            (true, Some(theta)) => theta,
            (true, None) => return Err(Error::MissingAngle(kind.name())),
            (false, Some(_)) => return Err(Error::UnexpectedAngle(kind.name())),
            (false, None) => 0.0,
        };
        self.apply_unchecked(kind, &gate.targets, theta);
        Ok(())
    }

    /// Targets must already be validated against the register.
    pub(crate) fn apply_unchecked(&mut self, kind: GateKind, targets: &[usize], theta: f64) {
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match kind {
            GateKind::H => {
                let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
                self.apply_1q(targets[0], [[h, h], [h, -h]]);
            }
            GateKind::X => self.apply_x(targets[0]),
            GateKind::Y => self.apply_1q(targets[0], [[zero, -i], [i, zero]]),
            GateKind::Z => self.apply_diag(targets[0], one, -one),
            GateKind::RX => {
                let (s, c) = (theta / 2.0).sin_cos();
                let c = Complex64::new(c, 0.0);
                let ms = Complex64::new(0.0, -s);
                self.apply_1q(targets[0], [[c, ms], [ms, c]]);
            }
            GateKind::RY => {
                let (s, c) = (theta / 2.0).sin_cos();
                let c = Complex64::new(c, 0.0);
                let s = Complex64::new(s, 0.0);
                self.apply_1q(targets[0], [[c, -s], [s, c]]);
            }
            GateKind::RZ => {
                let neg = Complex64::from_polar(1.0, -theta / 2.0);
                let pos = Complex64::from_polar(1.0, theta / 2.0);
                self.apply_diag(targets[0], neg, pos);
            }
            GateKind::RZZ => {
                let same = Complex64::from_polar(1.0, -theta / 2.0);
                let differ = Complex64::from_polar(1.0, theta / 2.0);
                let (a, b) = (targets[0], targets[1]);
                for (index, amp) in self.amplitudes.iter_mut().enumerate() {
                    let parity = ((index >> a) ^ (index >> b)) & 1;
                    *amp *= if parity == 0 { same } else { differ };
                }
            }
            GateKind::CNOT => {
                let (control, target) = (1usize << targets[0], 1usize << targets[1]);
                for index in 0..self.amplitudes.len() {
                    if index & control != 0 && index & target == 0 {
                        self.amplitudes.swap(index, index | target);
                    }
                }
            }
        }
    }

    fn apply_1q(&mut self, q: usize, m: [[Complex64; 2]; 2]) {
        let stride = 1usize << q;
        for block in (0..self.amplitudes.len()).step_by(stride << 1) {
            for lo in block..block + stride {
                let hi = lo + stride;
                let (a, b) = (self.amplitudes[lo], self.amplitudes[hi]);
                self.amplitudes[lo] = m[0][0] * a + m[0][1] * b;
                self.amplitudes[hi] = m[1][0] * a + m[1][1] * b;
            }
        }
    }

    fn apply_x(&mut self, q: usize) {
        let stride = 1usize << q;
        for block in (0..self.amplitudes.len()).step_by(stride << 1) {
            for lo in block..block + stride {
                self.amplitudes.swap(lo, lo + stride);
            }
        }
    }

    fn apply_diag(&mut self, q: usize, d0: Complex64, d1: Complex64) {
        for (index, amp) in self.amplitudes.iter_mut().enumerate() {
            *amp *= if (index >> q) & 1 == 0 { d0 } else { d1 };
        }
    }
}

/// Runs `circuit` on |0…0⟩.
pub fn run_circuit(circuit: &Circuit, parameters: &[f64]) -> Result<QuantumState> {
    let mut state = QuantumState::zero(circuit.n_qubits())?;
    circuit.apply_to(&mut state, parameters)?;
    Ok(state)
}

/// Born-rule probabilities `|amplitude_i|^2`, indexed by basis state.
pub fn exact_distribution(state: &QuantumState) -> Vec<f64> {
    state.amplitudes().iter().map(|a| a.norm_sqr()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const EPS: f64 = 1e-12;

    fn assert_amps(state: &QuantumState, expected: &[(f64, f64)]) {
        assert_eq!(state.dim(), expected.len());
        for (a, &(re, im)) in state.amplitudes().iter().zip(expected) {
            assert!((a.re - re).abs() < EPS && (a.im - im).abs() < EPS, "{a} vs {re}+{im}i");
        }
    }

    #[test]
    fn hadamard_on_zero() {
        let s = QuantumState::zero(1).unwrap().apply_gate(&Gate::h(0), None).unwrap();
        assert_amps(&s, &[(FRAC_1_SQRT_2, 0.0), (FRAC_1_SQRT_2, 0.0)]);
    }

    #[test]
    fn x_flips_zero() {
        let s = QuantumState::zero(1).unwrap().apply_gate(&Gate::x(0), None).unwrap();
        assert_amps(&s, &[(0.0, 0.0), (1.0, 0.0)]);
    }

    #[test]
    fn rzz_zero_angle_is_identity() {
        let bell = run_circuit(
            &Circuit::new(2, 0, vec![Gate::h(0), Gate::ry(1, Angle::Fixed(0.7)), Gate::cnot(0, 1)]).unwrap(),
            &[],
        )
        .unwrap();
        let out = bell.apply_gate(&Gate::rzz(0, 1, Angle::slot(0)), Some(0.0)).unwrap();
        assert_eq!(out, bell);
    }

    #[test]
    fn bell_state() {
        let c = Circuit::new(2, 0, vec![Gate::h(0), Gate::cnot(0, 1)]).unwrap();
        let s = run_circuit(&c, &[]).unwrap();
        assert_amps(
            &s,
            &[(FRAC_1_SQRT_2, 0.0), (0.0, 0.0), (0.0, 0.0), (FRAC_1_SQRT_2, 0.0)],
        );
        let p = exact_distribution(&s);
        for (got, want) in p.iter().zip([0.5, 0.0, 0.0, 0.5]) {
            assert!((got - want).abs() < EPS);
        }
    }

    #[test]
    fn walsh_hadamard_is_uniform() {
        for n in 1..=6 {
            let c = Circuit::new(n, 0, (0..n).map(Gate::h).collect()).unwrap();
            let s = run_circuit(&c, &[]).unwrap();
            let amp = 1.0 / ((1usize << n) as f64).sqrt();
            for a in s.amplitudes() {
                assert!((a.re - amp).abs() < EPS && a.im.abs() < EPS);
            }
            let p = exact_distribution(&s);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn empty_circuit_is_zero_state() {
        let s = run_circuit(&Circuit::new(3, 0, vec![]).unwrap(), &[]).unwrap();
        assert_eq!(exact_distribution(&s)[0], 1.0);
        assert_eq!(exact_distribution(&s)[1..].iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn one_state_distribution() {
        let s = QuantumState::basis(1, 1).unwrap();
        assert_eq!(exact_distribution(&s), vec![0.0, 1.0]);
    }

    #[test]
    fn rotation_matrices_match_definitions() {
        // RX(pi)|0> = -i|1>, RY(pi)|0> = |1>, RZ(pi)|+> ∝ |->.
        let zero = QuantumState::zero(1).unwrap();
        let rx = zero
            .apply_gate(&Gate::rx(0, Angle::slot(0)), Some(std::f64::consts::PI))
            .unwrap();
        assert_amps(&rx, &[(0.0, 0.0), (0.0, -1.0)]);
        let ry = zero
            .apply_gate(&Gate::ry(0, Angle::slot(0)), Some(std::f64::consts::PI))
            .unwrap();
        assert_amps(&ry, &[(0.0, 0.0), (1.0, 0.0)]);
        let plus = zero.apply_gate(&Gate::h(0), None).unwrap();
        let rz = plus
            .apply_gate(&Gate::rz(0, Angle::slot(0)), Some(std::f64::consts::PI))
            .unwrap();
        let h = FRAC_1_SQRT_2;
        assert_amps(&rz, &[(0.0, -h), (0.0, h)]);
        let y = zero.apply_gate(&Gate::y(0), None).unwrap();
        assert_amps(&y, &[(0.0, 0.0), (0.0, 1.0)]);
    }

    #[test]
    fn little_endian_convention() {
        // X on qubit 1 of 3 qubits sets index 0b010.
        let s = QuantumState::zero(3).unwrap().apply_gate(&Gate::x(1), None).unwrap();
        assert_eq!(exact_distribution(&s)[2], 1.0);
        // CNOT(0 -> 2) on |001> gives |101>.
        let s = QuantumState::basis(3, 1)
            .unwrap()
            .apply_gate(&Gate::cnot(0, 2), None)
            .unwrap();
        assert_eq!(exact_distribution(&s)[5], 1.0);
    }

    #[test]
    fn gate_errors() {
        let s = QuantumState::zero(2).unwrap();
        assert_eq!(
            s.apply_gate(&Gate::h(2), None),
            Err(Error::QubitOutOfRange { index: 2, n_qubits: 2 })
        );
        assert_eq!(
            s.apply_gate(&Gate::rx(0, Angle::slot(0)), None),
            Err(Error::MissingAngle("RX"))
        );
        assert_eq!(s.apply_gate(&Gate::h(0), Some(1.0)), Err(Error::UnexpectedAngle("H")));
        assert!(Gate::new(GateKind::CNOT, vec![1, 1], None).is_err());
        assert!(Gate::new(GateKind::RZ, vec![0], None).is_err());
        assert!(Gate::new(GateKind::H, vec![0], Some(Angle::Fixed(1.0))).is_err());
    }

    #[test]
    fn circuit_validation() {
        assert!(matches!(
            Circuit::new(2, 1, vec![Gate::rx(0, Angle::slot(1))]),
            Err(Error::ParameterSlot {
                slot: 1,
                n_parameters: 1
            })
        ));
        assert!(matches!(
            Circuit::new(2, 0, vec![Gate::h(3)]),
            Err(Error::QubitOutOfRange { .. })
        ));
        assert_eq!(Circuit::new(17, 0, vec![]), Err(Error::TooManyQubits(17)));
        let c = Circuit::new(1, 1, vec![Gate::rx(0, Angle::slot(0))]).unwrap();
        assert_eq!(
            run_circuit(&c, &[]),
            Err(Error::ParameterLength { expected: 1, got: 0 })
        );
    }

    #[derive(Debug, Clone)]
    enum Op {
        One(u8, usize, f64),
        Two(u8, usize, usize, f64),
    }

    fn random_circuit(n: usize) -> impl Strategy<Value = Vec<Op>> {
        let one = (0u8..7, 0..n, -7.0..7.0f64).prop_map(|(k, q, t)| Op::One(k, q, t));
        let two =
            (0u8..2, 0..n, 1..n.max(2), -7.0..7.0f64).prop_map(move |(k, a, off, t)| Op::Two(k, a, (a + off) % n, t));
        prop::collection::vec(prop_oneof![3 => one, 1 => two], 0..60)
    }

    fn to_gate(op: &Op) -> Option<(Gate, Option<f64>)> {
        Some(match *op {
            Op::One(k, q, t) => match k {
                0 => (Gate::h(q), None),
                1 => (Gate::x(q), None),
                2 => (Gate::y(q), None),
                3 => (Gate::z(q), None),
                4 => (Gate::rx(q, Angle::slot(0)), Some(t)),
                5 => (Gate::ry(q, Angle::slot(0)), Some(t)),
                _ => (Gate::rz(q, Angle::slot(0)), Some(t)),
            },
            Op::Two(_, a, b, _) if a == b => return None,
            Op::Two(0, a, b, t) => (Gate::rzz(a, b, Angle::slot(0)), Some(t)),
            Op::Two(_, a, b, _) => (Gate::cnot(a, b), None),
        })
    }

    fn inverse(gate: &Gate, angle: Option<f64>) -> (Gate, Option<f64>) {
        match gate.kind {
            GateKind::Y => (gate.clone(), None),
            _ => (gate.clone(), angle.map(|t| -t)),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn norm_is_preserved((n, ops) in (1usize..=10).prop_flat_map(|n| (Just(n), random_circuit(n)))) {
            let mut s = QuantumState::zero(n).unwrap();
            for op in &ops {
                if let Some((g, a)) = to_gate(op) {
                    s.apply_gate_mut(&g, a).unwrap();
                }
            }
            prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn gate_then_inverse_is_identity((n, ops) in (2usize..=5).prop_flat_map(|n| (Just(n), random_circuit(n)))) {
            let mut s = QuantumState::zero(n).unwrap();
            for (k, op) in ops.iter().enumerate() {
                let Some((g, a)) = to_gate(op) else { continue };
                let before = s.clone();
                s.apply_gate_mut(&g, a).unwrap();
                let (gi, ai) = inverse(&g, a);
                let undone = s.apply_gate(&gi, ai).unwrap();
                for (x, y) in undone.amplitudes().iter().zip(before.amplitudes()) {
                    prop_assert!((x - y).norm() < 1e-10, "op {k}: {g:?}");
                }
            }
        }

        #[test]
        fn run_circuit_is_deterministic(params in prop::collection::vec(-4.0..4.0f64, 3)) {
            let c = Circuit::new(3, 3, vec![
                Gate::h(0), Gate::h(1), Gate::h(2),
                Gate::rzz(0, 1, Angle::Slot { index: 0, scale: 2.0 }),
                Gate::rx(2, Angle::slot(1)), Gate::cnot(2, 0), Gate::ry(1, Angle::slot(2)),
            ]).unwrap();
            let a = run_circuit(&c, &params).unwrap();
            let b = run_circuit(&c, &params).unwrap();
            for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
                prop_assert_eq!(x.re.to_bits(), y.re.to_bits());
                prop_assert_eq!(x.im.to_bits(), y.im.to_bits());
            }
        }
    }
}
