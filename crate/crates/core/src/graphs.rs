//! Max-cut instances: seeded graph generators and the brute-force oracle.

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};

pub const BRUTE_FORCE_CAP: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

/// Undirected weighted graph. Edges are stored with `u < v`, sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n_nodes: usize,
    edges: Vec<Edge>,
}

impl WeightedGraph {
    pub fn new(n_nodes: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        if n_nodes < 2 {
            return Err(Error::InvalidGraph(format!("need at least 2 nodes, got {n_nodes}")));
        }
        let mut seen = BTreeMap::new();
        for (u, v, weight) in edges {
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop on node {u}")));
            }
            if u >= n_nodes || v >= n_nodes {
                return Err(Error::InvalidGraph(format!("edge ({u}, {v}) outside {n_nodes} nodes")));
            }
            if !weight.is_finite() {
                return Err(Error::InvalidGraph(format!("edge ({u}, {v}) has weight {weight}")));
            }
            let key = (u.min(v), u.max(v));
            if seen.insert(key, weight).is_some() {
                return Err(Error::InvalidGraph(format!("duplicate edge {key:?}")));
            }
        }
        let edges = seen.into_iter().map(|((u, v), weight)| Edge { u, v, weight }).collect();
        Ok(Self { n_nodes, edges })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// Cut value of the assignment whose bit `i` is the side of node `i`.
    pub fn cut_value_index(&self, assignment: u64) -> f64 {
        self.edges
            .iter()
            .filter(|e| ((assignment >> e.u) ^ (assignment >> e.v)) & 1 == 1)
            .map(|e| e.weight)
            .sum()
    }

    /// Cut values of all `2^n` assignments, indexed like basis states.
    pub fn cut_table(&self) -> Result<Vec<f64>> {
        if self.n_nodes > crate::statevector::MAX_QUBITS {
            return Err(Error::TooManyQubits(self.n_nodes));
        }
        Ok((0..1u64 << self.n_nodes).map(|z| self.cut_value_index(z)).collect())
    }
}

/// `Σ w` over edges whose endpoints land on different sides; `bits[i]` is node `i`.
pub fn cut_value(graph: &WeightedGraph, bits: &[bool]) -> Result<f64> {
    if bits.len() != graph.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: graph.n_nodes(),
            got: bits.len(),
        });
    }
    Ok(graph
        .edges()
        .iter()
        .filter(|e| bits[e.u] != bits[e.v])
        .map(|e| e.weight)
        .sum())
}

/// Parses a bitstring written most-significant node first ("01" puts node 0 on side 1).
pub fn parse_bitstring(text: &str) -> Result<Vec<bool>> {
    text.chars()
        .rev()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::InvalidGraph(format!("bad bitstring character {other:?}"))),
        })
        .collect()
}

pub fn format_bitstring(assignment: u64, n_nodes: usize) -> String {
    (0..n_nodes)
        .rev()
        .map(|i| if (assignment >> i) & 1 == 1 { '1' } else { '0' })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutResult {
    pub best_value: f64,
    /// Assignments (bit `i` = node `i`) attaining `best_value`, ascending.
    pub maximizers: Vec<u64>,
}

/// Exhaustive max-cut over all `2^n` assignments.
pub fn brute_force_max_cut(graph: &WeightedGraph) -> Result<CutResult> {
    let n = graph.n_nodes();
    if n > BRUTE_FORCE_CAP {
        return Err(Error::GraphTooLarge {
            cap: BRUTE_FORCE_CAP,
            got: n,
        });
    }
    let mut best_value = f64::NEG_INFINITY;
    let mut maximizers = Vec::new();
    for z in 0..1u64 << n {
        let value = graph.cut_value_index(z);
        if value > best_value {
            best_value = value;
            maximizers.clear();
            maximizers.push(z);
        } else if value == best_value {
            maximizers.push(z);
        }
    }
    Ok(CutResult { best_value, maximizers })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GraphModel {
    /// Power-law cluster graph (Holme–Kim).
    #[serde(rename = "PL", alias = "pl")]
    PowerLaw,
    #[serde(rename = "BA", alias = "ba")]
    BarabasiAlbert,
    #[serde(rename = "WS", alias = "ws")]
    WattsStrogatz,
    #[serde(rename = "SK", alias = "sk")]
    SherringtonKirkpatrick,
}

impl GraphModel {
    pub fn label(self) -> &'static str {
        match self {
            GraphModel::PowerLaw => "PL",
            GraphModel::BarabasiAlbert => "BA",
            GraphModel::WattsStrogatz => "WS",
            GraphModel::SherringtonKirkpatrick => "SK",
        }
    }
}

impl std::str::FromStr for GraphModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "PL" => Ok(GraphModel::PowerLaw),
            "BA" => Ok(GraphModel::BarabasiAlbert),
            "WS" => Ok(GraphModel::WattsStrogatz),
            "SK" => Ok(GraphModel::SherringtonKirkpatrick),
            _ => Err(Error::InvalidParams(format!("unknown graph model {s:?}"))),
        }
    }
}

/// Generator parameters; only the fields of the chosen model are read.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphParams {
    /// Edges added per new node (BA).
    pub ba_m: usize,
    /// Ring degree (WS), even.
    pub ws_k: usize,
    /// Rewiring probability (WS).
    pub ws_p: f64,
    /// Edges added per new node (PL).
    pub pl_m: usize,
    /// Triangle-closing probability (PL).
    pub pl_p: f64,
}

impl Default for GraphParams {
    fn default() -> Self {
        Self {
            ba_m: 2,
            ws_k: 4,
            ws_p: 0.3,
            pl_m: 2,
            pl_p: 0.5,
        }
    }
}

/// Serialized instance: generator metadata plus the explicit edge list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphInstance {
    pub model: GraphModel,
    pub n_nodes: usize,
    pub seed: u64,
    pub params: GraphParams,
    pub edges: Vec<(usize, usize, f64)>,
}

impl GraphInstance {
    pub fn generate(model: GraphModel, n_nodes: usize, seed: u64, params: GraphParams) -> Result<Self> {
        let graph = generate_graph(model, n_nodes, seed, &params)?;
        Ok(Self {
            model,
            n_nodes,
            seed,
            params,
            edges: graph.edges().iter().map(|e| (e.u, e.v, e.weight)).collect(),
        })
    }

    pub fn graph(&self) -> Result<WeightedGraph> {
        WeightedGraph::new(self.n_nodes, self.edges.iter().copied())
    }
}

pub fn generate_graph(model: GraphModel, n_nodes: usize, seed: u64, params: &GraphParams) -> Result<WeightedGraph> {
    if n_nodes < 2 {
        return Err(Error::InvalidParams(format!("need at least 2 nodes, got {n_nodes}")));
    }
    let mut rng = stream(seed, n_nodes as u64, Purpose::Graph);
    let edges: Vec<(usize, usize, f64)> = match model {
        GraphModel::SherringtonKirkpatrick => {
            let mut edges = Vec::new();
            for u in 0..n_nodes {
                for v in u + 1..n_nodes {
                    let w = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    edges.push((u, v, w));
                }
            }
            edges
        }
        GraphModel::BarabasiAlbert => unit(barabasi_albert(n_nodes, params.ba_m, &mut rng)?),
        GraphModel::WattsStrogatz => unit(watts_strogatz(n_nodes, params.ws_k, params.ws_p, &mut rng)?),
        GraphModel::PowerLaw => unit(powerlaw_cluster(n_nodes, params.pl_m, params.pl_p, &mut rng)?),
    };
    WeightedGraph::new(n_nodes, edges)
}

fn unit(adjacency: Vec<BTreeSet<usize>>) -> Vec<(usize, usize, f64)> {
    adjacency
        .iter()
        .enumerate()
        .flat_map(|(u, nbrs)| nbrs.iter().filter(move |&&v| v > u).map(move |&v| (u, v, 1.0)))
        .collect()
}

fn add_edge(adj: &mut [BTreeSet<usize>], u: usize, v: usize) -> bool {
    let inserted = adj[u].insert(v);
    adj[v].insert(u);
    inserted
}

/// Draws `m` distinct entries of `pool` (with multiplicity weighting), in draw order.
fn random_subset<R: Rng + ?Sized>(pool: &[usize], m: usize, rng: &mut R) -> Vec<usize> {
    let mut chosen = Vec::with_capacity(m);
    while chosen.len() < m {
        let x = *pool.choose(rng).expect("pool is nonempty");
        if !chosen.contains(&x) {
            chosen.push(x);
        }
    }
    chosen
}

/// Preferential attachment from a complete core of `m` nodes: every later node
/// attaches to `m` distinct existing nodes with probability proportional to
/// degree, giving `m(m−1)/2 + m(n−m)` edges.
fn barabasi_albert<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<Vec<BTreeSet<usize>>> {
    if m < 1 || m >= n {
        return Err(Error::InvalidParams(format!("BA needs 1 <= m < n, got m={m}, n={n}")));
    }
    let mut adj = vec![BTreeSet::new(); n];
    let mut repeated = Vec::new();
    for u in 0..m {
        for v in u + 1..m {
            add_edge(&mut adj, u, v);
            repeated.extend([u, v]);
        }
    }
    for source in m..n {
        let targets = if repeated.is_empty() {
            (0..m).collect()
        } else {
            random_subset(&repeated, m, rng)
        };
        for t in targets {
            add_edge(&mut adj, source, t);
            repeated.extend([source, t]);
        }
    }
    Ok(adj)
}

/// Ring lattice of even degree `k`, each lattice edge rewired with probability `p`.
fn watts_strogatz<R: Rng + ?Sized>(n: usize, k: usize, p: f64, rng: &mut R) -> Result<Vec<BTreeSet<usize>>> {
    if k < 2 || !k.is_multiple_of(2) || k >= n {
        return Err(Error::InvalidParams(format!(
            "WS needs an even ring degree 2 <= k < n, got k={k}, n={n}"
        )));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParams(format!(
            "WS rewiring probability {p} outside [0, 1]"
        )));
    }
    let mut adj = vec![BTreeSet::new(); n];
    for u in 0..n {
        for j in 1..=k / 2 {
            add_edge(&mut adj, u, (u + j) % n);
        }
    }
    for j in 1..=k / 2 {
        for u in 0..n {
            if rng.random::<f64>() >= p {
                continue;
            }
            let v = (u + j) % n;
            if !adj[u].contains(&v) || adj[u].len() >= n - 1 {
                continue;
            }
            let w = loop {
                let w = rng.random_range(0..n);
                if w != u && !adj[u].contains(&w) {
                    break w;
                }
            };
            adj[u].remove(&v);
            adj[v].remove(&u);
            add_edge(&mut adj, u, w);
        }
    }
    Ok(adj)
}

/// Holme–Kim power-law cluster graph: preferential attachment where each
/// extra edge closes a triangle with probability `p`.
fn powerlaw_cluster<R: Rng + ?Sized>(n: usize, m: usize, p: f64, rng: &mut R) -> Result<Vec<BTreeSet<usize>>> {
    if m < 1 || m >= n {
        return Err(Error::InvalidParams(format!("PL needs 1 <= m < n, got m={m}, n={n}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParams(format!(
            "PL triangle probability {p} outside [0, 1]"
        )));
    }
    let mut adj = vec![BTreeSet::new(); n];
    let mut repeated: Vec<usize> = (0..m).collect();
    for source in m..n {
        let mut targets = random_subset(&repeated, m, rng);
        let mut target = targets.pop().expect("m >= 1");
        add_edge(&mut adj, source, target);
        repeated.push(target);
        let mut count = 1;
        while count < m {
            if rng.random::<f64>() < p {
                let hood: Vec<usize> = adj[target]
                    .iter()
                    .copied()
                    .filter(|&nbr| nbr != source && !adj[source].contains(&nbr))
                    .collect();
                if let Some(&nbr) = hood.choose(rng) {
                    add_edge(&mut adj, source, nbr);
                    repeated.push(nbr);
                    count += 1;
                    continue;
                }
            }
            target = targets.pop().expect("m targets drawn");
            add_edge(&mut adj, source, target);
            repeated.push(target);
            count += 1;
        }
        repeated.extend(std::iter::repeat_n(source, m));
    }
    Ok(adj)
}
