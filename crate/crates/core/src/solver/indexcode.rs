use rayon::prelude::*;
use serde::Serialize;

use super::{nonzero_vectors, pool, unit, Budget, Outcome, SearchConfig, SearchReport, Span};
use crate::error::SolverError;
use crate::galois::{FieldSpec, Matrix};
use crate::index::{compute_mu, IndexInstance};
use crate::indexcode::{Rate, RateReport};
use crate::indexcode::LinearIndexCode;

struct Search<'a> {
    columns: Vec<Vec<u8>>,
    /// Number of columns to choose.
    width: usize,
    ordered: bool,
    /// Per client: the wanted selector columns.
    targets: Vec<Vec<Vec<u8>>>,
    budget: &'a Budget,
}

enum Step {
    Found(Vec<usize>),
    Dead,
    Stop,
}

impl Search<'_> {
    /// Adds column `c` to every client span; false if some client can no
    /// longer be served with the columns left.
    fn extend(&self, spans: &mut [Span], c: usize, remaining: usize) -> bool {
        spans.iter_mut().zip(&self.targets).all(|(s, t)| {
            s.insert(&self.columns[c]);
            s.deficit(t) <= remaining
        })
    }

    fn dfs(&self, chosen: &mut Vec<usize>, spans: &[Span]) -> Step {
        if chosen.len() == self.width {
            return Step::Found(chosen.clone());
        }
        let start = if self.ordered { chosen.last().copied().unwrap_or(0) } else { 0 };
        let remaining = self.width - chosen.len() - 1;
        for c in start..self.columns.len() {
            if !self.budget.tick() {
                return Step::Stop;
            }
            let mut next = spans.to_vec();
            if !self.extend(&mut next, c, remaining) {
                continue;
            }
            chosen.push(c);
            match self.dfs(chosen, &next) {
                Step::Dead => {}
                other => return other,
            }
            chosen.pop();
        }
        Step::Dead
    }
}

/// Searches for a linear `(n, q)` index code broadcasting `ℓ` symbols.
///
/// `G` is built one column at a time. Decodability depends only on the
/// column space of `G`, so with symmetry reduction on each column is a
/// nonzero vector with leading entry 1 and columns come in nondecreasing
/// order. A branch is cut when some client needs more new dimensions than
/// there are columns left.
pub fn search_linear_index_code(
    inst: &IndexInstance,
    field: &FieldSpec,
    n: usize,
    l: usize,
    config: &SearchConfig,
) -> Result<SearchReport<LinearIndexCode>, SolverError> {
    config.check()?;
    if n == 0 {
        return Err(SolverError::BadConfig("block length n must be positive".into()));
    }
    let k = inst.k();
    let dim = n * k;
    let columns = if config.symmetry {
        nonzero_vectors(field, dim, true)
    } else {
        let mut all = vec![vec![0u8; dim]];
        all.extend(nonzero_vectors(field, dim, false));
        all
    };
    let mut spans = Vec::new();
    let mut targets = Vec::new();
    for c in inst.clients() {
        let mut s = Span::new(field);
        for &h in &c.has {
            for t in 0..n {
                s.insert(&unit(dim, h * n + t));
            }
        }
        spans.push(s);
        targets.push((0..n).map(|t| unit(dim, c.wants * n + t)).collect::<Vec<_>>());
    }
    let budget = Budget::new(config);
    let width = l;
    let search = Search { columns, width, ordered: config.symmetry, targets, budget: &budget };

    let initially_ok = spans.iter().zip(&search.targets).all(|(s, t)| s.deficit(t) <= width);
    let found = if !initially_ok {
        None
    } else if width == 0 {
        Some(Vec::new())
    } else if config.workers <= 1 {
        match search.dfs(&mut Vec::new(), &spans) {
            Step::Found(cols) => Some(cols),
            _ => None,
        }
    } else {
        let results: Vec<Option<Vec<usize>>> = pool(config.workers).install(|| {
            (0..search.columns.len())
                .into_par_iter()
                .map(|c| {
                    if !budget.tick() {
                        return None;
                    }
                    let mut next = spans.clone();
                    if !search.extend(&mut next, c, width - 1) {
                        return None;
                    }
                    match search.dfs(&mut vec![c], &next) {
                        Step::Found(cols) => Some(cols),
                        _ => None,
                    }
                })
                .collect()
        });
        results.into_iter().flatten().next()
    };
    let code = found.map(|cols| {
        let mut g = Matrix::zeros(field, dim, width);
        for (j, &c) in cols.iter().enumerate() {
            for (r, &v) in search.columns[c].iter().enumerate() {
                g.set(r, j, v);
            }
        }
        LinearIndexCode::new(n, k, l, g).expect("shape by construction")
    });
    Ok(budget.report(code))
}

/// Outcome of trying `ℓ = n μ, n μ + 1, ..` in turn.
#[derive(Debug, Clone, Serialize)]
pub struct MinLengthReport {
    pub outcome: Outcome,
    pub nodes: u64,
    pub elapsed_ms: u64,
    /// `(ℓ, outcome, nodes)` for every length tried.
    pub tried: Vec<(usize, Outcome, u64)>,
    #[serde(skip)]
    pub code: Option<LinearIndexCode>,
    pub report: Option<RateReport>,
}

/// Smallest `ℓ` with a linear `(n, q)` code, starting from `n μ` (every
/// shorter length is ruled out by the lower bound `ℓ / n >= μ`) and going
/// up to `config.l_max` (default `n k`). `Exhausted` means no code up to the
/// maximum; `Budget` means the first inconclusive length was reached.
pub fn min_linear_index_length(
    inst: &IndexInstance,
    field: &FieldSpec,
    n: usize,
    config: &SearchConfig,
) -> Result<MinLengthReport, SolverError> {
    let mu = compute_mu(inst);
    let l_max = config.l_max.unwrap_or(n * inst.k());
    let mut tried = Vec::new();
    let mut nodes = 0;
    let mut elapsed_ms = 0;
    for l in n * mu..=l_max {
        let r = search_linear_index_code(inst, field, n, l, config)?;
        nodes += r.nodes;
        elapsed_ms += r.elapsed_ms;
        tried.push((l, r.outcome, r.nodes));
        match r.outcome {
            Outcome::Found => {
                let code = r.result.expect("found carries a code");
                let mut report = crate::indexcode::rate_report(&code, inst)
                    .map_err(|e| SolverError::BadConfig(format!("search returned an invalid code: {e}")))?;
                report.lambda_star = Some(report.rate);
                return Ok(MinLengthReport { outcome: Outcome::Found, nodes, elapsed_ms, tried, code: Some(code), report: Some(report) });
            }
            Outcome::Budget => {
                return Ok(MinLengthReport { outcome: Outcome::Budget, nodes, elapsed_ms, tried, code: None, report: None });
            }
            Outcome::Exhausted => {}
        }
    }
    Ok(MinLengthReport { outcome: Outcome::Exhausted, nodes, elapsed_ms, tried, code: None, report: None })
}

impl MinLengthReport {
    pub fn lambda_star(&self) -> Option<Rate> {
        self.report.as_ref().and_then(|r| r.lambda_star)
    }
}
