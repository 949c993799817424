use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::SolverError;
use crate::galois::{selector, FieldSpec, Matrix};
use crate::netcode::{LinearNetworkCode, RawLinearNetworkCode};
use crate::network::{validate_network, NetworkInstance, RawEdge, RawNetwork};

/// Size limits for [`generate_random_solvable_network`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomNetworkParams {
    /// Messages are drawn from `1..=max_messages`.
    pub max_messages: usize,
    /// Relay vertices are drawn from `1..=max_relays`.
    pub max_relays: usize,
    /// Upper bound on all edges, inputs and outputs included.
    pub max_edges: usize,
    pub max_attempts: usize,
}

impl Default for RandomNetworkParams {
    fn default() -> Self {
        RandomNetworkParams { max_messages: 3, max_relays: 4, max_edges: 12, max_attempts: 10_000 }
    }
}

fn random_matrix(field: &FieldSpec, rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    let q = field.order() as u8;
    let data = (0..rows * cols).map(|_| rng.gen_range(0..q)).collect();
    Matrix::from_vec(field, rows, cols, data).expect("sized")
}

struct Draft {
    k: usize,
    relays: usize,
    /// `(tail, head, coefficients)`; tails and heads are vertex names.
    edges: Vec<(String, String, Matrix)>,
    demands: Vec<Option<usize>>,
}

fn attempt(rng: &mut impl Rng, params: &RandomNetworkParams, field: &FieldSpec, n: usize) -> Option<Draft> {
    let k = rng.gen_range(1..=params.max_messages);
    let relays = rng.gen_range(1..=params.max_relays);
    let relay = |v: usize| format!("v{v}");
    let mut edges: Vec<(String, String, Matrix)> = Vec::new();
    let mut demands = Vec::new();
    // in-edge coefficient matrices per relay
    let mut incoming: Vec<Vec<Matrix>> = vec![Vec::new(); relays];
    for j in 0..k {
        let v = rng.gen_range(0..relays);
        let c = selector(field, k, n, j);
        incoming[v].push(c.clone());
        edges.push((format!("s{}", j + 1), relay(v), c));
        demands.push(None);
    }
    let mut outputs = 0;
    for v in 0..relays {
        if incoming[v].is_empty() {
            continue;
        }
        let parents = incoming[v].clone();
        let stacked = Matrix::hstack(field, n * k, &parents.iter().collect::<Vec<_>>()).ok()?;
        let later = relays - v - 1;
        let fan_out = if later == 0 { 0 } else { rng.gen_range(0..=2.min(later)) };
        for _ in 0..fan_out {
            let head = rng.gen_range(v + 1..relays);
            let c = if rng.gen_bool(0.5) {
                parents.choose(rng).expect("nonempty").clone()
            } else {
                stacked.mul(&random_matrix(field, stacked.cols(), n, rng)).ok()?
            };
            incoming[head].push(c.clone());
            edges.push((relay(v), relay(head), c));
            demands.push(None);
        }
        let decodable: Vec<usize> = (0..k)
            .filter(|&i| stacked.column_space_contains(&selector(field, k, n, i)).unwrap_or(false))
            .collect();
        // a relay without out-edges would turn its in-edges into outputs
        let sinks = if fan_out == 0 { 1 } else { rng.gen_range(0..=1) };
        for _ in 0..sinks {
            let &msg = decodable.choose(rng)?;
            outputs += 1;
            edges.push((relay(v), format!("t{outputs}"), selector(field, k, n, msg)));
            demands.push(Some(msg));
        }
    }
    let onto = (0..k).all(|i| demands.contains(&Some(i)));
    (onto && edges.len() <= params.max_edges).then_some(Draft { k, relays, edges, demands })
}

/// A random network together with a linear `(n, q)` code solving it.
///
/// Relays are visited in order and each sends edges only forward, carrying
/// either a copy of one incoming symbol or a random combination of all of
/// them. Output edges go to fresh sinks and demand a message the relay can
/// already decode, so the code solves the network by construction. Draws
/// that are too large or leave a message undemanded are discarded. Edge ids
/// are shuffled so canonical order differs from file order.
pub fn generate_random_solvable_network(
    seed: u64,
    params: &RandomNetworkParams,
    field: &FieldSpec,
    n: usize,
) -> Result<(NetworkInstance, LinearNetworkCode), SolverError> {
    if n == 0 || params.max_messages == 0 || params.max_relays == 0 {
        return Err(SolverError::BadConfig("block length, messages and relays must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..params.max_attempts {
        let Some(draft) = attempt(&mut rng, params, field, n) else { continue };
        let mut ids: Vec<u64> = (1..=draft.edges.len() as u64).collect();
        ids.shuffle(&mut rng);
        let mut vertices: Vec<String> = (1..=draft.k).map(|j| format!("s{j}")).collect();
        vertices.extend((0..draft.relays).map(|v| format!("v{v}")));
        vertices.extend((1..=draft.demands.iter().flatten().count()).map(|t| format!("t{t}")));
        let mut raw_edges = Vec::new();
        let mut sources = BTreeMap::new();
        let mut demands = BTreeMap::new();
        let mut coeffs = BTreeMap::new();
        for (pos, ((tail, head, c), demand)) in draft.edges.iter().zip(&draft.demands).enumerate() {
            let id = ids[pos];
            if pos < draft.k {
                sources.insert(id, pos + 1);
            }
            if let Some(msg) = demand {
                demands.insert(id, msg + 1);
            }
            raw_edges.push(RawEdge { id, tail: tail.clone(), head: head.clone() });
            coeffs.insert(id, c.to_rows());
        }
        // relays never reached carry no edges
        let used: std::collections::BTreeSet<&str> =
            raw_edges.iter().flat_map(|e| [e.tail.as_str(), e.head.as_str()]).collect();
        vertices.retain(|v| used.contains(v.as_str()));
        let raw = RawNetwork {
            description: Some(format!("random solvable network, seed {seed}")),
            k: draft.k,
            vertices,
            edges: raw_edges,
            demands,
            sources,
        };
        let net = validate_network(&raw, false).expect("generated networks are well formed");
        let code = LinearNetworkCode::from_raw(&net, &RawLinearNetworkCode { field: field.clone(), n, edges: coeffs })
            .expect("one matrix per edge");
        return Ok((net, code));
    }
    Err(SolverError::RetryLimit(params.max_attempts))
}
