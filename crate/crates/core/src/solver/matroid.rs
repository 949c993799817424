use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{nonzero_vectors, pool, unit, Budget, SearchConfig, SearchReport, Span};
use crate::error::SolverError;
use crate::galois::FieldSpec;

/// Matroid given by triples, elements numbered from 1 as in the file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawMatroidSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub elements: usize,
    pub rank: usize,
    #[serde(default)]
    pub dependent: Vec<[usize; 3]>,
    #[serde(default)]
    pub independent: Vec<[usize; 3]>,
}

/// A simple matroid of rank 2 or 3 described by which triples are
/// dependent (rank ≤ 2) and which are independent (rank 3). Every pair is
/// independent and no element is a loop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatroidSpec {
    elements: usize,
    rank: usize,
    /// 0-based, each triple sorted.
    dependent: Vec<[usize; 3]>,
    independent: Vec<[usize; 3]>,
}

impl MatroidSpec {
    pub fn new(raw: &RawMatroidSpec) -> Result<Self, SolverError> {
        let bad = |m: String| Err(SolverError::BadMatroid(m));
        if !(2..=3).contains(&raw.rank) {
            return bad(format!("rank {} not supported (2 or 3)", raw.rank));
        }
        if raw.elements < raw.rank {
            return bad(format!("{} elements cannot have rank {}", raw.elements, raw.rank));
        }
        let mut seen = BTreeSet::new();
        let mut fix = |list: &[[usize; 3]]| -> Result<Vec<[usize; 3]>, SolverError> {
            let mut out = Vec::new();
            for t in list {
                let mut s = *t;
                s.sort_unstable();
                if s[0] == 0 || s[2] > raw.elements || s[0] == s[1] || s[1] == s[2] {
                    return Err(SolverError::BadMatroid(format!("triple {t:?} is not three distinct elements of 1..={}", raw.elements)));
                }
                if !seen.insert(s) {
                    return Err(SolverError::BadMatroid(format!("triple {t:?} listed twice")));
                }
                out.push([s[0] - 1, s[1] - 1, s[2] - 1]);
            }
            Ok(out)
        };
        let dependent = fix(&raw.dependent)?;
        let independent = fix(&raw.independent)?;
        Ok(MatroidSpec { elements: raw.elements, rank: raw.rank, dependent, independent })
    }

    pub fn to_raw(&self) -> RawMatroidSpec {
        let lift = |v: &[[usize; 3]]| v.iter().map(|t| [t[0] + 1, t[1] + 1, t[2] + 1]).collect();
        RawMatroidSpec {
            description: None,
            elements: self.elements,
            rank: self.rank,
            dependent: lift(&self.dependent),
            independent: lift(&self.independent),
        }
    }

    pub fn elements(&self) -> usize {
        self.elements
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Checks a full assignment of vectors against every constraint.
    pub fn is_representation(&self, field: &FieldSpec, vectors: &[Vec<u8>]) -> bool {
        let rank_of = |idx: &[usize]| {
            let mut s = Span::new(field);
            idx.iter().for_each(|&i| {
                s.insert(&vectors[i]);
            });
            s.dim()
        };
        vectors.len() == self.elements
            && vectors.iter().all(|v| v.len() == self.rank)
            && (0..self.elements).all(|i| (i + 1..self.elements).all(|j| rank_of(&[i, j]) == 2))
            && self.dependent.iter().all(|t| rank_of(t) <= 2)
            && self.independent.iter().all(|t| rank_of(t) == 3)
    }
}

enum Step {
    Found,
    Dead,
    Stop,
}

struct Search<'a> {
    field: &'a FieldSpec,
    order: Vec<usize>,
    /// Candidate vectors per position in `order`.
    fixed: Vec<Option<Vec<u8>>>,
    points: Vec<Vec<u8>>,
    /// Per position: earlier positions that must be independent of it,
    /// then dependent and independent triples completed there.
    pairs: Vec<Vec<usize>>,
    dep_at: Vec<Vec<[usize; 2]>>,
    ind_at: Vec<Vec<[usize; 2]>>,
    budget: &'a Budget,
}

impl Search<'_> {
    fn rank(&self, vs: &[&[u8]]) -> usize {
        let mut s = Span::new(self.field);
        for v in vs {
            s.insert(v);
        }
        s.dim()
    }

    fn ok(&self, pos: usize, vecs: &[Vec<u8>]) -> bool {
        let v = vecs[pos].as_slice();
        self.pairs[pos].iter().all(|&a| self.rank(&[&vecs[a], v]) == 2)
            && self.dep_at[pos].iter().all(|&[a, b]| self.rank(&[&vecs[a], &vecs[b], v]) <= 2)
            && self.ind_at[pos].iter().all(|&[a, b]| self.rank(&[&vecs[a], &vecs[b], v]) == 3)
    }

    fn candidates(&self, pos: usize) -> Vec<Vec<u8>> {
        match &self.fixed[pos] {
            Some(v) => vec![v.clone()],
            None => self.points.clone(),
        }
    }

    fn place(&self, pos: usize, cand: Vec<u8>, vecs: &mut [Vec<u8>]) -> Option<bool> {
        if !self.budget.tick() {
            return None;
        }
        vecs[pos] = cand;
        Some(self.ok(pos, vecs))
    }

    fn dfs(&self, pos: usize, vecs: &mut Vec<Vec<u8>>) -> Step {
        if pos == self.order.len() {
            return Step::Found;
        }
        for cand in self.candidates(pos) {
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

/// Backtracking search for vectors in `F^r` representing the matroid.
///
/// With symmetry reduction on, every vector is taken up to scalars (leading
/// entry 1). In rank 3 the first independent triple is sent to the unit
/// vectors and, if some element forms an independent triple with every
/// pair of that basis, it is sent to `(1,1,1)`. In rank 2 the first three
/// elements go to `(1,0)`, `(0,1)`, `(1,1)`. Any representation can be
/// moved into this form by an invertible linear map and diagonal scaling,
/// so an exhausted search rules out every representation over the field.
pub fn search_matroid_representation(
    spec: &MatroidSpec,
    field: &FieldSpec,
    config: &SearchConfig,
) -> Result<SearchReport<Vec<Vec<u8>>>, SolverError> {
    config.check()?;
    let (n, r) = (spec.elements, spec.rank);
    let independent: BTreeSet<[usize; 3]> = spec.independent.iter().copied().collect();
    let mut anchors: Vec<(usize, Vec<u8>)> = Vec::new();
    if config.symmetry {
        let basis: Option<Vec<usize>> = if r == 3 {
            spec.independent.first().map(|t| t.to_vec())
        } else {
            Some(vec![0, 1])
        };
        if let Some(basis) = basis {
            for (i, &b) in basis.iter().enumerate() {
                anchors.push((b, unit(r, i)));
            }
            let general = (0..n).filter(|e| !basis.contains(e)).find(|&e| {
                r == 2
                    || (0..3).all(|i| {
                        let mut t = [e, basis[i], basis[(i + 1) % 3]];
                        t.sort_unstable();
                        independent.contains(&t)
                    })
            });
            if let Some(e) = general {
                anchors.push((e, vec![1; r]));
            }
        }
    }
    let mut order: Vec<usize> = anchors.iter().map(|(e, _)| *e).collect();
    let rest: Vec<usize> = (0..n).filter(|e| !order.contains(e)).collect();
    order.extend(rest);
    let mut pos_of = vec![0; n];
    for (p, &e) in order.iter().enumerate() {
        pos_of[e] = p;
    }
    let mut fixed = vec![None; n];
    for (p, (_, v)) in anchors.into_iter().enumerate() {
        fixed[p] = Some(v);
    }
    let mut pairs = vec![Vec::new(); n];
    for p in 0..n {
        pairs[p] = (0..p).collect();
    }
    let mut dep_at = vec![Vec::new(); n];
    let mut ind_at = vec![Vec::new(); n];
    for (list, target) in [(&spec.dependent, &mut dep_at), (&spec.independent, &mut ind_at)] {
        for t in list.iter() {
            let mut ps = [pos_of[t[0]], pos_of[t[1]], pos_of[t[2]]];
            ps.sort_unstable();
            target[ps[2]].push([ps[0], ps[1]]);
        }
    }
    let budget = Budget::new(config);
    let search = Search {
        field,
        order: order.clone(),
        fixed,
        points: nonzero_vectors(field, r, config.symmetry),
        pairs,
        dep_at,
        ind_at,
        budget: &budget,
    };
    let mut vecs = vec![Vec::new(); n];
    let found = if config.workers <= 1 {
        matches!(search.dfs(0, &mut vecs), Step::Found).then_some(vecs)
    } else {
        let mut pos = 0;
        let mut dead = false;
        while pos < n && search.fixed[pos].is_some() {
            let v = search.fixed[pos].clone().unwrap();
            if search.place(pos, v, &mut vecs) != Some(true) {
                dead = true;
                break;
            }
            pos += 1;
        }
        if dead {
            None
        } else if pos == n {
            Some(vecs)
        } else {
            let results: Vec<Option<Vec<Vec<u8>>>> = pool(config.workers).install(|| {
                search
                    .candidates(pos)
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
    // back to element order
    let found = found.map(|vecs| (0..n).map(|e| vecs[pos_of[e]].clone()).collect());
    Ok(budget.report(found))
}
