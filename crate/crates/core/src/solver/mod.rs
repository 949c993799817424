//! Exhaustive backtracking searches over small fields.
//!
//! Every search reports one of three outcomes. `Exhausted` is only given
//! after the whole (symmetry-reduced) space was visited, so it certifies
//! that no object exists over that field. `Budget` means the node or time
//! budget ran out and says nothing either way.

mod indexcode;
mod matroid;
mod netcode;
mod random;

pub use indexcode::{min_linear_index_length, search_linear_index_code, MinLengthReport};
pub use matroid::{search_matroid_representation, MatroidSpec, RawMatroidSpec};
pub use netcode::{search_scalar_network_code, ScalarCodingVectors};
pub use random::{generate_random_solvable_network, RandomNetworkParams};

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::galois::FieldSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub budget_nodes: u64,
    pub budget_secs: Option<f64>,
    pub symmetry: bool,
    pub workers: usize,
    /// Largest ℓ tried by [`min_linear_index_length`]; defaults to `n k`.
    pub l_max: Option<usize>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { budget_nodes: 1_000_000_000, budget_secs: None, symmetry: true, workers: 1, l_max: None }
    }
}

impl SearchConfig {
    pub fn check(&self) -> Result<(), crate::error::SolverError> {
        use crate::error::SolverError::BadConfig;
        if self.budget_nodes == 0 {
            return Err(BadConfig("node budget must be positive".into()));
        }
        if self.budget_secs.is_some_and(|s| !(s > 0.0)) {
            return Err(BadConfig("time budget must be positive".into()));
        }
        if self.workers == 0 {
            return Err(BadConfig("worker count must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Found,
    Exhausted,
    Budget,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchReport<T> {
    pub outcome: Outcome,
    pub nodes: u64,
    pub elapsed_ms: u64,
    pub result: Option<T>,
}

impl<T> SearchReport<T> {
    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> SearchReport<U> {
        SearchReport { outcome: self.outcome, nodes: self.nodes, elapsed_ms: self.elapsed_ms, result: self.result.map(f) }
    }
}

/// Node and wall-clock budget shared by all workers of one search.
pub(crate) struct Budget {
    nodes: AtomicU64,
    limit: u64,
    deadline: Option<Instant>,
    tripped: AtomicBool,
    start: Instant,
}

impl Budget {
    pub(crate) fn new(config: &SearchConfig) -> Self {
        let start = Instant::now();
        Budget {
            nodes: AtomicU64::new(0),
            limit: config.budget_nodes,
            deadline: config.budget_secs.map(|s| start + Duration::from_secs_f64(s)),
            tripped: AtomicBool::new(false),
            start,
        }
    }

    /// Counts one node; false once the budget is spent.
    pub(crate) fn tick(&self) -> bool {
        if self.tripped.load(Ordering::Relaxed) {
            return false;
        }
        let n = self.nodes.fetch_add(1, Ordering::Relaxed) + 1;
        let over = n > self.limit || (n.is_multiple_of(1024) && self.deadline.is_some_and(|d| Instant::now() >= d));
        if over {
            self.tripped.store(true, Ordering::Relaxed);
        }
        !over
    }

    pub(crate) fn tripped(&self) -> bool {
        self.tripped.load(Ordering::Relaxed)
    }

    pub(crate) fn report<T>(&self, result: Option<T>) -> SearchReport<T> {
        let outcome = match (&result, self.tripped()) {
            (Some(_), _) => Outcome::Found,
            (None, true) => Outcome::Budget,
            (None, false) => Outcome::Exhausted,
        };
        SearchReport {
            outcome,
            nodes: self.nodes.load(Ordering::Relaxed).min(self.limit),
            elapsed_ms: self.start.elapsed().as_millis() as u64,
            result,
        }
    }
}

pub(crate) fn pool(workers: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(workers).build().expect("thread pool")
}

/// Incrementally maintained span of vectors in `F^dim`, kept in reduced
/// echelon form.
#[derive(Debug, Clone)]
pub(crate) struct Span {
    field: FieldSpec,
    rows: Vec<Vec<u8>>,
    pivots: Vec<usize>,
}

impl Span {
    pub(crate) fn new(field: &FieldSpec) -> Self {
        Span { field: field.clone(), rows: Vec::new(), pivots: Vec::new() }
    }

    pub(crate) fn dim(&self) -> usize {
        self.rows.len()
    }

    /// `v` minus its component in the span.
    pub(crate) fn reduce(&self, v: &[u8]) -> Vec<u8> {
        let f = &self.field;
        let mut v = v.to_vec();
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            let c = v[p];
            if c != 0 {
                for (a, &b) in v.iter_mut().zip(row) {
                    *a = f.sub(*a, f.mul(c, b));
                }
            }
        }
        v
    }

    pub(crate) fn contains(&self, v: &[u8]) -> bool {
        self.reduce(v).iter().all(|&x| x == 0)
    }

    /// Adds `v`; true when the dimension grew.
    pub(crate) fn insert(&mut self, v: &[u8]) -> bool {
        let f = self.field.clone();
        let mut r = self.reduce(v);
        let Some(p) = r.iter().position(|&x| x != 0) else { return false };
        let inv = f.inv(r[p]).unwrap();
        for a in r.iter_mut() {
            *a = f.mul(*a, inv);
        }
        for row in self.rows.iter_mut() {
            let c = row[p];
            if c != 0 {
                for (a, &b) in row.iter_mut().zip(&r) {
                    *a = f.sub(*a, f.mul(c, b));
                }
            }
        }
        let at = self.pivots.partition_point(|&q| q < p);
        self.pivots.insert(at, p);
        self.rows.insert(at, r);
        true
    }

    /// How many more dimensions the span needs to contain all `targets`.
    pub(crate) fn deficit(&self, targets: &[Vec<u8>]) -> usize {
        let mut extra = self.clone();
        targets.iter().filter(|t| extra.insert(t)).count()
    }

    /// Every vector of the span up to nonzero scalars, each given with its
    /// first nonzero coordinate equal to 1. With `normalize` off, every
    /// nonzero vector of the span.
    pub(crate) fn points(&self, normalize: bool) -> Vec<Vec<u8>> {
        let f = &self.field;
        let q = f.order();
        let d = self.rows.len();
        let dim = self.rows.first().map_or(0, Vec::len);
        let mut out = Vec::new();
        let total = q.pow(d as u32);
        for idx in 1..total {
            let coeffs = crate::netcode::tuple_at(q, d, idx);
            if normalize && coeffs.iter().find(|&&c| c != 0) != Some(&1) {
                continue;
            }
            let mut v = vec![0u8; dim];
            for (c, row) in coeffs.iter().zip(&self.rows) {
                if *c != 0 {
                    for (a, &b) in v.iter_mut().zip(row) {
                        *a = f.add(*a, f.mul(*c, b));
                    }
                }
            }
            out.push(v);
        }
        out
    }
}

/// Nonzero vectors of `F^dim`: with `normalize`, one per projective point
/// (first nonzero coordinate 1), else all of them. Lexicographic order.
pub(crate) fn nonzero_vectors(field: &FieldSpec, dim: usize, normalize: bool) -> Vec<Vec<u8>> {
    let q = field.order();
    (1..q.pow(dim as u32))
        .map(|i| crate::netcode::tuple_at(q, dim, i))
        .filter(|v| !normalize || v.iter().find(|&&c| c != 0) == Some(&1))
        .collect()
}

pub(crate) fn unit(dim: usize, i: usize) -> Vec<u8> {
    let mut v = vec![0u8; dim];
    v[i] = 1;
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn span_points_are_projective() {
        let f = FieldSpec::prime(3).unwrap();
        let mut s = Span::new(&f);
        assert!(s.insert(&[1, 1, 0]));
        assert!(s.insert(&[0, 1, 1]));
        assert!(!s.insert(&[1, 2, 1]));
        assert_eq!(s.dim(), 2);
        let pts = s.points(true);
        assert_eq!(pts.len(), 4);
        assert!(pts.iter().all(|p| s.contains(p)));
        assert_eq!(s.points(false).len(), 8);
        assert_eq!(s.deficit(&[unit(3, 0), unit(3, 1)]), 1);
        assert_eq!(nonzero_vectors(&f, 3, true).len(), 13);
        assert_eq!(nonzero_vectors(&FieldSpec::prime(2).unwrap(), 4, true).len(), 15);
    }

    #[test]
    fn budget_trips() {
        let b = Budget::new(&SearchConfig { budget_nodes: 3, ..Default::default() });
        assert!(b.tick() && b.tick() && b.tick());
        assert!(!b.tick());
        assert_eq!(b.report::<()>(None).outcome, Outcome::Budget);
    }
}
