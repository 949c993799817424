use rayon::prelude::*;

use super::{pool, unit, Budget, SearchConfig, SearchReport, Span};
use crate::error::SolverError;
use crate::galois::{FieldSpec, Matrix};
use crate::netcode::LinearNetworkCode;
use crate::network::NetworkInstance;

/// One coding vector in `F^k` per edge, canonical edge order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScalarCodingVectors {
    pub field: FieldSpec,
    pub vectors: Vec<Vec<u8>>,
}

impl ScalarCodingVectors {
    pub fn to_code(&self, k: usize) -> LinearNetworkCode {
        let coeffs = self
            .vectors
            .iter()
            .map(|v| Matrix::from_vec(&self.field, k, 1, v.clone()).expect("k entries"))
            .collect();
        LinearNetworkCode::new(self.field.clone(), 1, k, coeffs).expect("uniform shapes")
    }
}

enum Step {
    Found,
    Dead,
    Stop,
}

struct Search<'a> {
    net: &'a NetworkInstance,
    field: &'a FieldSpec,
    normalize: bool,
    /// Outputs to check right after position `p` is assigned.
    check_at: Vec<Vec<usize>>,
    budget: &'a Budget,
}

impl Search<'_> {
    fn candidates(&self, pos: usize, vecs: &[Vec<u8>]) -> Vec<Vec<u8>> {
        let k = self.net.k();
        if self.net.is_input(pos) {
            return vec![unit(k, pos)];
        }
        if let Some(d) = self.net.demand(pos) {
            return vec![unit(k, d)];
        }
        let mut span = Span::new(self.field);
        for &p in self.net.parents(pos) {
            span.insert(&vecs[p]);
        }
        span.points(self.normalize)
    }

    fn checks_pass(&self, pos: usize, vecs: &[Vec<u8>]) -> bool {
        let k = self.net.k();
        self.check_at[pos].iter().all(|&o| {
            let mut span = Span::new(self.field);
            for &p in self.net.parents(o) {
                span.insert(&vecs[p]);
            }
            span.contains(&unit(k, self.net.demand(o).unwrap()))
        })
    }

    fn place(&self, pos: usize, cand: Vec<u8>, vecs: &mut [Vec<u8>]) -> Option<bool> {
        if !self.budget.tick() {
            return None;
        }
        vecs[pos] = cand;
        Some(self.checks_pass(pos, vecs))
    }

    fn dfs(&self, pos: usize, vecs: &mut Vec<Vec<u8>>) -> Step {
        if pos == self.net.m() {
            return Step::Found;
        }
        for cand in self.candidates(pos, vecs) {
            match self.place(pos, cand, vecs) {
                None => return Step::Stop,
                Some(false) => continue,
                Some(true) => match self.dfs(pos + 1, vecs) {
                    Step::Dead => continue,
                    other => return other,
                },
            }
        }
        Step::Dead
    }
}

/// Backtracking search for a scalar (`n = 1`) linear code. Edges are
/// visited in canonical order; each interior edge takes a vector from the
/// span of its parents' vectors, so N3 holds by construction, and each
/// output edge is checked as soon as its parents are known.
///
/// With symmetry reduction on, vectors are taken up to nonzero scalars and
/// the zero vector is never chosen. Both are sound: rescaling an edge does
/// not change any span downstream, and replacing a zero edge by any vector
/// of its parent span only enlarges spans, which cannot break a demand.
pub fn search_scalar_network_code(
    net: &NetworkInstance,
    field: &FieldSpec,
    config: &SearchConfig,
) -> Result<SearchReport<LinearNetworkCode>, SolverError> {
    config.check()?;
    let m = net.m();
    let mut check_at = vec![Vec::new(); m];
    for o in net.outputs() {
        let last = net.parents(o).iter().copied().max().expect("outputs have parents");
        check_at[last].push(o);
    }
    let budget = Budget::new(config);
    let search = Search { net, field, normalize: config.symmetry, check_at, budget: &budget };
    let mut vecs = vec![Vec::new(); m];

    let found = if config.workers <= 1 {
        matches!(search.dfs(0, &mut vecs), Step::Found).then_some(vecs)
    } else {
        // Walk the forced prefix, then hand the first real branch to the
        // pool. No branch cancels another, so the outcome and node count
        // match the sequential run on exhaustion.
        let mut pos = 0;
        let mut dead = false;
        let mut cands = Vec::new();
        while pos < m {
            cands = search.candidates(pos, &vecs);
            if cands.len() != 1 {
                break;
            }
            match search.place(pos, cands.pop().unwrap(), &mut vecs) {
                Some(true) => pos += 1,
                _ => {
                    dead = true;
                    break;
                }
            }
        }
        if dead {
            None
        } else if pos == m {
            Some(vecs)
        } else {
            log::info!("splitting scalar search at edge {} into {} branches", net.edge_id(pos), cands.len());
            let results: Vec<Option<Vec<Vec<u8>>>> = pool(config.workers).install(|| {
                cands
                    .into_par_iter()
                    .map(|cand| {
                        let mut local = vecs.clone();
                        match search.place(pos, cand, &mut local) {
                            Some(true) => matches!(search.dfs(pos + 1, &mut local), Step::Found).then_some(local),
                            _ => None,
                        }
                    })
                    .collect()
            });
            results.into_iter().flatten().next()
        }
    };
    let branching = (0..m).filter(|&i| net.is_interior(i)).count();
    log::info!("scalar search over {field}: {branching} interior edges, {} nodes", budget.report::<()>(None).nodes);
    Ok(budget.report(found.map(|vectors| ScalarCodingVectors { field: field.clone(), vectors }.to_code(net.k()))))
}
