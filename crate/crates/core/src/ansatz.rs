//! Problem ansätze and cost estimators.
//!
//! QAOA max-cut circuits carry `2·layers` parameters ordered as all cost
//! angles (γ₁…γ_p) followed by all mixer angles (β₁…β_p). Costs are reported
//! as the negated average cut so that optimizers minimize.
//!
//! Hamiltonians are read from a line-oriented text format:
//!
//! ```text
//! # comment
//! offset 0.7151
//! -0.8105 IIII
//!  0.1721 ZIZI
//!  0.0453 XXYY
//! ```
//!
//! Pauli strings are written with qubit 0 as the rightmost character, matching
//! the basis-index convention.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::graphs::WeightedGraph;
use crate::sampling::Counts;
use crate::statevector::{exact_distribution, Angle, Circuit, Gate, QuantumState};

/// `H^⊗n`, then per layer `RZZ(2γ_ℓ w)` on every edge and `RX(2β_ℓ)` on every qubit.
pub fn build_qaoa_circuit(graph: &WeightedGraph, layers: usize) -> Result<Circuit> {
    if layers < 1 {
        return Err(Error::InvalidParams("QAOA needs at least one layer".into()));
    }
    if graph.edges().is_empty() {
        return Err(Error::InvalidGraph("graph has no edges".into()));
    }
    let n = graph.n_nodes();
    let mut gates: Vec<Gate> = (0..n).map(Gate::h).collect();
    for layer in 0..layers {
        for e in graph.edges() {
            gates.push(Gate::rzz(
                e.u,
                e.v,
                Angle::Slot {
                    index: layer,
                    scale: 2.0 * e.weight,
                },
            ));
        }
        for q in 0..n {
            gates.push(Gate::rx(
                q,
                Angle::Slot {
                    index: layers + layer,
                    scale: 2.0,
                },
            ));
        }
    }
    Circuit::new(n, 2 * layers, gates)
}

/// `−(Σ_z count(z)·cut(z)) / shots`.
pub fn qaoa_cost_from_counts(counts: &Counts, graph: &WeightedGraph) -> Result<f64> {
    if counts.n_qubits() != graph.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: graph.n_nodes(),
            got: counts.n_qubits(),
        });
    }
    let total: f64 = counts
        .histogram()
        .iter()
        .map(|(&z, &c)| c as f64 * graph.cut_value_index(z))
        .sum();
    Ok(-total / counts.total_shots() as f64)
}

/// `−Σ_z |amp_z|²·cut(z)`: the infinite-shot QAOA cost.
pub fn exact_qaoa_cost(state: &QuantumState, graph: &WeightedGraph) -> Result<f64> {
    if state.n_qubits() != graph.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: graph.n_nodes(),
            got: state.n_qubits(),
        });
    }
    Ok(-exact_distribution(state)
        .iter()
        .enumerate()
        .map(|(z, p)| p * graph.cut_value_index(z as u64))
        .sum::<f64>())
}

/// `per_layer` rotations `RY, RZ` on every qubit followed by a CNOT ladder
/// `0→1→…→n−1`. Parameters are layer-major, `[ry_q, rz_q]` per qubit.
pub fn build_hw_efficient_circuit(n_qubits: usize, layers: usize) -> Result<Circuit> {
    if layers < 1 {
        return Err(Error::InvalidParams("ansatz needs at least one layer".into()));
    }
    let mut gates = Vec::new();
    for layer in 0..layers {
        for q in 0..n_qubits {
            let base = 2 * (layer * n_qubits + q);
            gates.push(Gate::ry(q, Angle::slot(base)));
            gates.push(Gate::rz(q, Angle::slot(base + 1)));
        }
        for q in 1..n_qubits {
            gates.push(Gate::cnot(q - 1, q));
        }
    }
    Circuit::new(n_qubits, 2 * n_qubits * layers, gates)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn from_char(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Pauli operator per qubit; `ops[q]` acts on qubit `q`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    ops: Vec<Pauli>,
}

impl PauliString {
    pub fn parse(text: &str) -> Option<Self> {
        let ops = text.chars().rev().map(Pauli::from_char).collect::<Option<Vec<_>>>()?;
        (!ops.is_empty()).then_some(Self { ops })
    }

    pub fn n_qubits(&self) -> usize {
        self.ops.len()
    }

    pub fn ops(&self) -> &[Pauli] {
        &self.ops
    }

    pub fn is_identity(&self) -> bool {
        self.ops.iter().all(|&p| p == Pauli::I)
    }

    /// Bit mask of qubits with a non-identity factor.
    pub fn support_mask(&self) -> u64 {
        self.ops
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != Pauli::I)
            .fold(0, |m, (q, _)| m | (1 << q))
    }
}

impl std::fmt::Display for PauliString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.ops.iter().rev().try_for_each(|p| write!(f, "{}", p.as_char()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PauliTerm {
    pub coefficient: f64,
    pub pauli: PauliString,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    n_qubits: usize,
    terms: Vec<PauliTerm>,
    constant_offset: f64,
}

impl Observable {
    /// Merges duplicate strings (first occurrence fixes the order).
    pub fn new(terms: Vec<PauliTerm>, constant_offset: f64) -> Result<Self> {
        let Some(first) = terms.first() else {
            return Err(Error::InvalidObservable("no terms".into()));
        };
        let n_qubits = first.pauli.n_qubits();
        let mut merged: Vec<PauliTerm> = Vec::new();
        for term in terms {
            if term.pauli.n_qubits() != n_qubits {
                return Err(Error::InvalidObservable(format!(
                    "term {} has {} qubits, expected {n_qubits}",
                    term.pauli,
                    term.pauli.n_qubits()
                )));
            }
            match merged.iter_mut().find(|t| t.pauli == term.pauli) {
                Some(existing) => existing.coefficient += term.coefficient,
                None => merged.push(term),
            }
        }
        Ok(Self {
            n_qubits,
            terms: merged,
            constant_offset,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn constant_offset(&self) -> f64 {
        self.constant_offset
    }

    pub fn is_diagonal(&self) -> bool {
        self.terms
            .iter()
            .all(|t| t.pauli.ops().iter().all(|&p| matches!(p, Pauli::I | Pauli::Z)))
    }

    /// Exact expectation for a Z-diagonal observable under `probabilities`.
    pub fn diagonal_expectation(&self, probabilities: &[f64]) -> Result<f64> {
        if !self.is_diagonal() {
            return Err(Error::InvalidObservable("observable is not diagonal".into()));
        }
        if probabilities.len() != 1 << self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: 1 << self.n_qubits,
                got: probabilities.len(),
            });
        }
        let mut total = self.constant_offset;
        for term in &self.terms {
            let mask = term.pauli.support_mask();
            let mean: f64 = probabilities
                .iter()
                .enumerate()
                .map(|(z, p)| p * parity_sign(z as u64, mask))
                .sum();
            total += term.coefficient * mean;
        }
        Ok(total)
    }
}

#[inline]
fn parity_sign(outcome: u64, mask: u64) -> f64 {
    if (outcome & mask).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Parses the Hamiltonian text format; errors carry 1-based line numbers.
pub fn parse_hamiltonian(text: &str) -> Result<Observable> {
    let mut terms = Vec::new();
    let mut offset: Option<f64> = None;
    let mut width: Option<usize> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |message: String| Error::HamiltonianParse { line: line_no, message };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(err(format!("expected `<coefficient> <pauli-string>`, got {line:?}")));
        }
        if fields[0].eq_ignore_ascii_case("offset") {
            let value: f64 = fields[1]
                .parse()
                .map_err(|_| err(format!("bad offset value {:?}", fields[1])))?;
            if offset.replace(value).is_some() {
                return Err(err("duplicate offset line".into()));
            }
            continue;
        }
        let coefficient: f64 = fields[0]
            .parse()
            .map_err(|_| err(format!("bad coefficient {:?}", fields[0])))?;
        if !coefficient.is_finite() {
            return Err(err(format!("non-finite coefficient {coefficient}")));
        }
        let pauli = PauliString::parse(fields[1]).ok_or_else(|| err(format!("bad Pauli string {:?}", fields[1])))?;
        match width {
            Some(w) if w != pauli.n_qubits() => {
                return Err(err(format!(
                    "Pauli string has {} qubits, earlier terms have {w}",
                    pauli.n_qubits()
                )))
            }
            _ => width = Some(pauli.n_qubits()),
        }
        terms.push(PauliTerm { coefficient, pauli });
    }
    if terms.is_empty() {
        return Err(Error::HamiltonianParse {
            line: text.lines().count(),
            message: "no terms".into(),
        });
    }
    Observable::new(terms, offset.unwrap_or(0.0))
}

/// Terms measurable together after one single-qubit basis change per qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementGroup {
    /// Measurement basis per qubit; `I` means unconstrained (measured in Z).
    pub bases: Vec<Pauli>,
    /// Indices into the observable's terms.
    pub member_terms: Vec<usize>,
}

impl MeasurementGroup {
    fn accepts(&self, pauli: &PauliString) -> bool {
        self.bases
            .iter()
            .zip(pauli.ops())
            .all(|(&b, &p)| b == Pauli::I || p == Pauli::I || b == p)
    }

    fn absorb(&mut self, pauli: &PauliString) {
        for (b, &p) in self.bases.iter_mut().zip(pauli.ops()) {
            if p != Pauli::I {
                *b = p;
            }
        }
    }

    pub fn is_diagonal(&self) -> bool {
        self.bases.iter().all(|&b| matches!(b, Pauli::I | Pauli::Z))
    }

    /// Gates mapping the group's eigenbasis onto the computational basis:
    /// `H` for X and `RX(π/2)` for Y.
    pub fn basis_rotation(&self) -> Vec<Gate> {
        self.bases
            .iter()
            .enumerate()
            .filter_map(|(q, b)| match b {
                Pauli::X => Some(Gate::h(q)),
                Pauli::Y => Some(Gate::rx(q, Angle::Fixed(FRAC_PI_2))),
                _ => None,
            })
            .collect()
    }
}

/// Greedy qubit-wise-commuting grouping in term order. Identity terms are
/// left out (their expectation is exactly 1). Always returns at least one
/// group so the computational basis is measured even for trivial observables.
pub fn group_terms(observable: &Observable) -> Vec<MeasurementGroup> {
    let mut groups: Vec<MeasurementGroup> = Vec::new();
    for (idx, term) in observable.terms().iter().enumerate() {
        if term.pauli.is_identity() {
            continue;
        }
        match groups.iter_mut().find(|g| g.accepts(&term.pauli)) {
            Some(group) => {
                group.absorb(&term.pauli);
                group.member_terms.push(idx);
            }
            None => {
                let mut group = MeasurementGroup {
                    bases: vec![Pauli::I; observable.n_qubits()],
                    member_terms: vec![idx],
                };
                group.absorb(&term.pauli);
                groups.push(group);
            }
        }
    }
    if groups.is_empty() {
        groups.push(MeasurementGroup {
            bases: vec![Pauli::I; observable.n_qubits()],
            member_terms: Vec::new(),
        });
    }
    groups
}

/// Splits `shots` evenly, remainder to the earliest groups.
pub fn split_shots(shots: u64, groups: usize) -> Result<Vec<u64>> {
    if shots < groups as u64 {
        return Err(Error::TooFewShots {
            min: groups as u64,
            got: shots,
        });
    }
    let g = groups as u64;
    Ok((0..g).map(|i| shots / g + u64::from(i < shots % g)).collect())
}

/// Which group's counts feed the entropy signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropySource {
    /// The computational-basis group (the first group if none is diagonal).
    #[default]
    ZGroup,
    /// The group whose counts have the largest entropy.
    MaxOverGroups,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupedEstimate {
    pub expectation: f64,
    pub primary_counts: Counts,
    pub group_counts: Vec<Counts>,
}

/// Combines per-group counts into `Σ coeff·⟨term⟩ + offset`.
pub fn estimate_from_groups(
    observable: &Observable,
    groups: &[MeasurementGroup],
    group_counts: Vec<Counts>,
    source: EntropySource,
) -> Result<GroupedEstimate> {
    let mut expectation = observable.constant_offset();
    for term in observable.terms() {
        if term.pauli.is_identity() {
            expectation += term.coefficient;
        }
    }
    for (group, counts) in groups.iter().zip(&group_counts) {
        let total = counts.total_shots() as f64;
        for &t in &group.member_terms {
            let term = &observable.terms()[t];
            let mask = term.pauli.support_mask();
            let sum: f64 = counts
                .histogram()
                .iter()
                .map(|(&z, &c)| c as f64 * parity_sign(z, mask))
                .sum();
            expectation += term.coefficient * sum / total;
        }
    }
    let primary = match source {
        EntropySource::ZGroup => groups.iter().position(|g| g.is_diagonal()).unwrap_or(0),
        EntropySource::MaxOverGroups => {
            let mut best = 0;
            for (i, c) in group_counts.iter().enumerate() {
                if c.entropy() > group_counts[best].entropy() {
                    best = i;
                }
            }
            best
        }
    };
    Ok(GroupedEstimate {
        expectation,
        primary_counts: group_counts[primary].clone(),
        group_counts,
    })
}

/// Measures `observable` on `state` with `shots` split across QWC groups.
/// Group `g` samples from `crate::rng::stream(seed, index, Purpose::Group(g))`.
pub fn group_and_measure(
    state: &QuantumState,
    observable: &Observable,
    shots: u64,
    seed: u64,
    index: u64,
    source: EntropySource,
) -> Result<GroupedEstimate> {
    use crate::rng::{stream, Purpose};
    if state.n_qubits() != observable.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: observable.n_qubits(),
            got: state.n_qubits(),
        });
    }
    let groups = group_terms(observable);
    let split = split_shots(shots, groups.len())?;
    let mut group_counts = Vec::with_capacity(groups.len());
    for (g, (group, &group_shots)) in groups.iter().zip(&split).enumerate() {
        let mut rotated = state.clone();
        for gate in group.basis_rotation() {
            let angle = gate.angle.map(|a| a.resolve(&[]));
            rotated.apply_gate_mut(&gate, angle)?;
        }
        let mut rng = stream(seed, index, Purpose::Group(g as u32));
        group_counts.push(crate::sampling::sample_counts(&rotated, group_shots, &mut rng)?);
    }
    estimate_from_groups(observable, &groups, group_counts, source)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{generate_graph, GraphModel, GraphParams};
    use crate::statevector::{run_circuit, GateKind};
    use std::collections::BTreeMap;

    fn edge() -> WeightedGraph {
        WeightedGraph::new(2, [(0, 1, 1.0)]).unwrap()
    }

    fn triangle() -> WeightedGraph {
        WeightedGraph::new(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap()
    }

    #[test]
    fn qaoa_single_edge_structure() {
        let c = build_qaoa_circuit(&edge(), 1).unwrap();
        let kinds: Vec<GateKind> = c.gates().iter().map(|g| g.kind).collect();
        assert_eq!(
            kinds,
            vec![GateKind::H, GateKind::H, GateKind::RZZ, GateKind::RX, GateKind::RX]
        );
        assert_eq!(c.n_parameters(), 2);
        assert_eq!(c.gates()[2].angle, Some(Angle::Slot { index: 0, scale: 2.0 }));
        assert_eq!(c.gates()[3].angle, Some(Angle::Slot { index: 1, scale: 2.0 }));
    }

    #[test]
    fn qaoa_zero_parameters_is_uniform() {
        let g = triangle();
        let c = build_qaoa_circuit(&g, 3).unwrap();
        let p = exact_distribution(&run_circuit(&c, &[0.0; 6]).unwrap());
        assert!(p.iter().all(|&x| (x - 0.125).abs() < 1e-12));
        assert_eq!(build_qaoa_circuit(&g, 20).unwrap().n_parameters(), 40);
    }

    #[test]
    fn qaoa_errors() {
        assert!(build_qaoa_circuit(&WeightedGraph::new(2, []).unwrap(), 1).is_err());
        assert!(build_qaoa_circuit(&edge(), 0).is_err());
    }

    #[test]
    fn cost_from_counts_examples() {
        let c = Counts::new(2, BTreeMap::from([(0b01, 10)])).unwrap();
        assert_eq!(qaoa_cost_from_counts(&c, &edge()).unwrap(), -1.0);
        let c = Counts::new(2, BTreeMap::from([(0b00, 5), (0b01, 5)])).unwrap();
        assert_eq!(qaoa_cost_from_counts(&c, &edge()).unwrap(), -0.5);
        let uniform = Counts::new(3, (0..8).map(|z| (z, 7)).collect()).unwrap();
        // brute-force oracle: mean cut over all 8 assignments
        let oracle = -(0..8u64).map(|z| triangle().cut_value_index(z)).sum::<f64>() / 8.0;
        assert_eq!(oracle, -1.5);
        assert_eq!(qaoa_cost_from_counts(&uniform, &triangle()).unwrap(), oracle);
        assert!(qaoa_cost_from_counts(&c, &triangle()).is_err());
    }

    #[test]
    fn exact_cost_examples() {
        let g = generate_graph(GraphModel::SherringtonKirkpatrick, 5, 3, &GraphParams::default()).unwrap();
        let uniform = run_circuit(&Circuit::new(5, 0, (0..5).map(Gate::h).collect()).unwrap(), &[]).unwrap();
        assert!((exact_qaoa_cost(&uniform, &g).unwrap() + g.total_weight() / 2.0).abs() < 1e-12);
        for z in [0usize, 7, 19, 31] {
            let s = QuantumState::basis(5, z).unwrap();
            assert_eq!(exact_qaoa_cost(&s, &g).unwrap(), -g.cut_value_index(z as u64));
        }
    }

    #[test]
    fn cost_is_two_pi_periodic() {
        let g = triangle();
        let c = build_qaoa_circuit(&g, 2).unwrap();
        let base = [0.3, -0.7, 1.1, 0.4];
        let f = |p: &[f64]| exact_qaoa_cost(&run_circuit(&c, p).unwrap(), &g).unwrap();
        let f0 = f(&base);
        for slot in 0..4 {
            for shift in [-2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI] {
                let mut p = base;
                p[slot] += shift;
                assert!((f(&p) - f0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn hw_efficient_parameter_counts() {
        assert_eq!(build_hw_efficient_circuit(2, 1).unwrap().n_parameters(), 4);
        assert_eq!(build_hw_efficient_circuit(3, 2).unwrap().n_parameters(), 12);
        let c = build_hw_efficient_circuit(4, 2).unwrap();
        let s = run_circuit(&c, &vec![0.0; c.n_parameters()]).unwrap();
        assert!((s.amplitudes()[0].re - 1.0).abs() < 1e-12);
        assert!(build_hw_efficient_circuit(2, 0).is_err());
    }

    #[test]
    fn parse_examples() {
        let o = parse_hamiltonian("1.0 ZZ").unwrap();
        assert_eq!((o.terms().len(), o.n_qubits()), (1, 2));
        assert_eq!(parse_hamiltonian("0.5 ZI\n0.5 IZ").unwrap().terms().len(), 2);
        let o = parse_hamiltonian("1.0 ZZ\n1.0 ZZ").unwrap();
        assert_eq!(o.terms().len(), 1);
        assert_eq!(o.terms()[0].coefficient, 2.0);
        let o = parse_hamiltonian("# h2\noffset 0.5\n\n-1.0 XY # trailing\n").unwrap();
        assert_eq!(o.constant_offset(), 0.5);
        assert_eq!(o.terms()[0].pauli.to_string(), "XY");
        assert_eq!(o.terms()[0].pauli.ops(), &[Pauli::Y, Pauli::X]);
    }

    #[test]
    fn parse_errors_report_lines() {
        let e = parse_hamiltonian("1.0 ZZ\nfoo ZZ").unwrap_err();
        assert!(matches!(e, Error::HamiltonianParse { line: 2, .. }));
        let e = parse_hamiltonian("1.0 ZZ\n\n1.0 ZZZ").unwrap_err();
        assert!(matches!(e, Error::HamiltonianParse { line: 3, .. }));
        let e = parse_hamiltonian("1.0 ZQ").unwrap_err();
        assert!(matches!(e, Error::HamiltonianParse { line: 1, .. }));
        assert!(parse_hamiltonian("# nothing\n").is_err());
        assert!(parse_hamiltonian("1.0 Z Z").is_err());
    }

    #[test]
    fn eigenstate_expectation() {
        let o = parse_hamiltonian("1.0 ZZ").unwrap();
        let s = QuantumState::zero(2).unwrap();
        for shots in [1, 7, 1000] {
            let r = group_and_measure(&s, &o, shots, 1, 0, EntropySource::ZGroup).unwrap();
            assert_eq!(r.expectation, 1.0);
        }
    }

    #[test]
    fn bell_xx_expectation() {
        let o = parse_hamiltonian("1.0 XX").unwrap();
        let bell = run_circuit(&Circuit::new(2, 0, vec![Gate::h(0), Gate::cnot(0, 1)]).unwrap(), &[]).unwrap();
        let r = group_and_measure(&bell, &o, 100_000, 3, 0, EntropySource::ZGroup).unwrap();
        assert!((r.expectation - 1.0).abs() <= 0.02, "{}", r.expectation);
        let o = parse_hamiltonian("1.0 YY").unwrap();
        let r = group_and_measure(&bell, &o, 10_000, 3, 0, EntropySource::ZGroup).unwrap();
        assert!((r.expectation + 1.0).abs() <= 1e-12, "{}", r.expectation);
    }

    #[test]
    fn grouping_rules() {
        let o = parse_hamiltonian("1 ZI\n1 IZ\n0.5 ZZ").unwrap();
        let g = group_terms(&o);
        assert_eq!(g.len(), 1);
        assert!(g[0].is_diagonal());
        let o = parse_hamiltonian("1 ZZ\n1 XX\n1 XI\n1 YY\n2 II").unwrap();
        let g = group_terms(&o);
        assert_eq!(g.len(), 3);
        assert_eq!(g[1].member_terms, vec![1, 2]);
        let s = QuantumState::zero(2).unwrap();
        assert!(matches!(
            group_and_measure(&s, &o, 2, 0, 0, EntropySource::ZGroup),
            Err(Error::TooFewShots { min: 3, got: 2 })
        ));
        assert_eq!(split_shots(10, 3).unwrap(), vec![4, 3, 3]);
    }

    #[test]
    fn diagonal_observable_single_batch() {
        let o = parse_hamiltonian("0.3 ZI\n-0.2 IZ\n0.7 ZZ\n0.1 II").unwrap();
        let c = build_hw_efficient_circuit(2, 1).unwrap();
        let s = run_circuit(&c, &[0.4, 0.1, -1.2, 0.3]).unwrap();
        let r = group_and_measure(&s, &o, 200_000, 5, 0, EntropySource::ZGroup).unwrap();
        assert_eq!(r.group_counts.len(), 1);
        assert_eq!(r.primary_counts.total_shots(), 200_000);
        let exact = o.diagonal_expectation(&exact_distribution(&s)).unwrap();
        // |coeff| sum 1.2 bounds the per-shot spread; 6σ at 2e5 shots
        assert!((r.expectation - exact).abs() < 6.0 * 1.2 / (200_000f64).sqrt());
    }

    #[test]
    fn entropy_source_selection() {
        let o = parse_hamiltonian("1 XX\n1 ZZ").unwrap();
        let plus = run_circuit(&Circuit::new(2, 0, vec![Gate::h(0), Gate::h(1)]).unwrap(), &[]).unwrap();
        let r = group_and_measure(&plus, &o, 4000, 1, 0, EntropySource::ZGroup).unwrap();
        // |++> is deterministic in the X basis, uniform in Z.
        assert!(r.primary_counts.entropy() > 1.9);
        let r = group_and_measure(&plus, &o, 4000, 1, 0, EntropySource::MaxOverGroups).unwrap();
        assert!(r.primary_counts.entropy() > 1.9);
        let o = parse_hamiltonian("1 XX").unwrap();
        let r = group_and_measure(&plus, &o, 4000, 1, 0, EntropySource::ZGroup).unwrap();
        assert_eq!(r.primary_counts.entropy(), 0.0, "falls back to the only group");
    }
}
