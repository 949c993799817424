//! Network codes: linear ones given by a coefficient matrix per edge, and
//! general ones given by a lookup table per edge.
//!
//! A message tuple is the row `X = (x_11, .., x_1n, .., x_k1, .., x_kn)`.
//! A linear code stores for every edge an `(n k) x n` matrix `C_e` with
//! `f_e(X) = X C_e`. A table code stores `f_e(X)` for every `X`, listed in
//! lexicographic order with `x_11` most significant.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{CodeError, Witness};
use crate::galois::{selector, FieldSpec, Matrix};
use crate::network::NetworkInstance;

/// Inputs beyond this many are never tabulated.
pub const TABLE_INPUT_CAP: u128 = 1 << 20;

/// `q^len`, or `None` on overflow.
pub fn checked_pow(q: usize, len: usize) -> Option<u128> {
    (q as u128).checked_pow(len as u32)
}

/// Message tuple at position `index` in lexicographic order.
pub fn tuple_at(q: usize, len: usize, mut index: usize) -> Vec<u8> {
    let mut out = vec![0u8; len];
    for slot in out.iter_mut().rev() {
        *slot = (index % q) as u8;
        index /= q;
    }
    out
}

/// Position of a tuple in lexicographic order.
pub fn tuple_index(q: usize, tuple: &[u8]) -> usize {
    tuple.iter().fold(0usize, |acc, &s| acc * q + s as usize)
}

fn widen(v: &[u8]) -> Vec<u32> {
    v.iter().map(|&s| s as u32).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawLinearNetworkCode {
    pub field: FieldSpec,
    pub n: usize,
    pub edges: BTreeMap<u64, Vec<Vec<u32>>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTableNetworkCode {
    pub q: usize,
    pub n: usize,
    pub edges: BTreeMap<u64, Vec<u32>>,
}

/// Linear `(n, q)` network code. Matrices are held in the instance's
/// canonical edge order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearNetworkCode {
    field: FieldSpec,
    n: usize,
    k: usize,
    coeffs: Vec<Matrix>,
}

impl LinearNetworkCode {
    pub fn new(field: FieldSpec, n: usize, k: usize, coeffs: Vec<Matrix>) -> Result<Self, CodeError> {
        for (i, c) in coeffs.iter().enumerate() {
            if c.rows() != n * k || c.cols() != n {
                return Err(CodeError::ShapeMismatch(format!(
                    "edge position {i}: matrix is {}x{}, expected {}x{}",
                    c.rows(),
                    c.cols(),
                    n * k,
                    n
                )));
            }
            if c.field() != &field {
                return Err(CodeError::Galois(crate::error::GaloisError::FieldMismatch));
            }
        }
        Ok(LinearNetworkCode { field, n, k, coeffs })
    }

    pub fn from_raw(net: &NetworkInstance, raw: &RawLinearNetworkCode) -> Result<Self, CodeError> {
        let mut coeffs: Vec<Option<Matrix>> = vec![None; net.m()];
        for (&id, rows) in &raw.edges {
            let i = net.index_of(id).ok_or(CodeError::UnknownEdge(id))?;
            coeffs[i] = Some(Matrix::from_rows(&raw.field, rows)?);
        }
        let coeffs = coeffs
            .into_iter()
            .enumerate()
            .map(|(i, c)| c.ok_or(CodeError::MissingEdge(net.edge_id(i))))
            .collect::<Result<Vec<_>, _>>()?;
        if raw.n == 0 {
            return Err(CodeError::ShapeMismatch("block length n must be positive".into()));
        }
        Self::new(raw.field.clone(), raw.n, net.k(), coeffs)
    }

    pub fn to_raw(&self, net: &NetworkInstance) -> RawLinearNetworkCode {
        RawLinearNetworkCode {
            field: self.field.clone(),
            n: self.n,
            edges: self.coeffs.iter().enumerate().map(|(i, c)| (net.edge_id(i), c.to_rows())).collect(),
        }
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `C_e` for the edge at canonical position `i`.
    pub fn coeff(&self, i: usize) -> &Matrix {
        &self.coeffs[i]
    }

    pub fn coeffs(&self) -> &[Matrix] {
        &self.coeffs
    }

    /// Values of every edge (canonical order) on the message row `x`.
    pub fn evaluate(&self, x: &[u8]) -> Result<Vec<Vec<u8>>, CodeError> {
        if x.len() != self.n * self.k {
            return Err(CodeError::ShapeMismatch(format!(
                "message tuple has {} symbols, expected {}",
                x.len(),
                self.n * self.k
            )));
        }
        if let Some(&bad) = x.iter().find(|&&s| !self.field.contains(s as u32)) {
            return Err(CodeError::SymbolOutOfRange { value: bad as u32, q: self.field.order() });
        }
        Ok(self.coeffs.iter().map(|c| self.field.vec_mul(x, c)).collect())
    }
}

/// General `(n, q)` network code over a plain alphabet `{0, .., q-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableNetworkCode {
    q: usize,
    n: usize,
    k: usize,
    tables: Vec<Vec<u8>>,
}

impl TableNetworkCode {
    pub fn new(q: usize, n: usize, k: usize, tables: Vec<Vec<u8>>) -> Result<Self, CodeError> {
        if !(2..=256).contains(&q) || n == 0 {
            return Err(CodeError::ShapeMismatch(format!("need 2 <= q <= 256 and n >= 1, got q={q}, n={n}")));
        }
        let inputs = checked_pow(q, n * k).filter(|&c| c <= TABLE_INPUT_CAP).ok_or(CodeError::TableTooLarge {
            entries: checked_pow(q, n * k).unwrap_or(u128::MAX),
            cap: TABLE_INPUT_CAP,
        })? as usize;
        for (i, t) in tables.iter().enumerate() {
            if t.len() != inputs * n {
                return Err(CodeError::ShapeMismatch(format!(
                    "edge position {i}: table has {} symbols, expected {}",
                    t.len(),
                    inputs * n
                )));
            }
            if let Some(&bad) = t.iter().find(|&&s| s as usize >= q) {
                return Err(CodeError::SymbolOutOfRange { value: bad as u32, q });
            }
        }
        Ok(TableNetworkCode { q, n, k, tables })
    }

    pub fn from_raw(net: &NetworkInstance, raw: &RawTableNetworkCode) -> Result<Self, CodeError> {
        let mut tables: Vec<Option<Vec<u8>>> = vec![None; net.m()];
        for (&id, flat) in &raw.edges {
            let i = net.index_of(id).ok_or(CodeError::UnknownEdge(id))?;
            if let Some(&bad) = flat.iter().find(|&&s| s as usize >= raw.q || s > 255) {
                return Err(CodeError::SymbolOutOfRange { value: bad, q: raw.q });
            }
            tables[i] = Some(flat.iter().map(|&s| s as u8).collect());
        }
        let tables = tables
            .into_iter()
            .enumerate()
            .map(|(i, t)| t.ok_or(CodeError::MissingEdge(net.edge_id(i))))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(raw.q, raw.n, net.k(), tables)
    }

    pub fn to_raw(&self, net: &NetworkInstance) -> RawTableNetworkCode {
        RawTableNetworkCode {
            q: self.q,
            n: self.n,
            edges: self.tables.iter().enumerate().map(|(i, t)| (net.edge_id(i), widen(t))).collect(),
        }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn input_count(&self) -> usize {
        self.tables.first().map_or(0, |t| t.len() / self.n)
    }

    /// `f_e(X)` for the edge at canonical position `i`, `X` given by its
    /// lexicographic index.
    pub fn value(&self, i: usize, index: usize) -> &[u8] {
        &self.tables[i][index * self.n..(index + 1) * self.n]
    }

    pub fn evaluate(&self, x: &[u8]) -> Result<Vec<Vec<u8>>, CodeError> {
        if x.len() != self.n * self.k {
            return Err(CodeError::ShapeMismatch(format!(
                "message tuple has {} symbols, expected {}",
                x.len(),
                self.n * self.k
            )));
        }
        if let Some(&bad) = x.iter().find(|&&s| s as usize >= self.q) {
            return Err(CodeError::SymbolOutOfRange { value: bad as u32, q: self.q });
        }
        let idx = tuple_index(self.q, x);
        Ok((0..self.tables.len()).map(|i| self.value(i, idx).to_vec()).collect())
    }
}

/// How one non-input edge is computed from its parents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LocalEncoding {
    /// One `n x n` combiner per parent: `C_e = sum_a C_a T_a`.
    Linear(Vec<Matrix>),
    /// Concatenated parent values to edge value.
    Table(BTreeMap<Vec<u8>, Vec<u8>>),
}

/// Local encodings for every edge; `None` at input edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalEncodingCertificate {
    pub encodings: Vec<Option<LocalEncoding>>,
}

impl LocalEncodingCertificate {
    /// Applies the local encoding of edge `i` to its parents' values.
    pub fn apply(&self, i: usize, parent_values: &[&[u8]], field: Option<&FieldSpec>) -> Option<Vec<u8>> {
        match self.encodings[i].as_ref()? {
            LocalEncoding::Linear(ts) => {
                let f = field?;
                let n = ts.first()?.cols();
                let mut acc = vec![0u8; n];
                for (v, t) in parent_values.iter().zip(ts) {
                    for (a, b) in acc.iter_mut().zip(f.vec_mul(v, t)) {
                        *a = f.add(*a, b);
                    }
                }
                Some(acc)
            }
            LocalEncoding::Table(map) => map.get(&parent_values.concat()).cloned(),
        }
    }

    /// Recomputes every edge value from the messages alone, edge by edge,
    /// using only local encodings. `field` is needed for linear encodings.
    pub fn replay(&self, net: &NetworkInstance, n: usize, x: &[u8], field: Option<&FieldSpec>) -> Option<Vec<Vec<u8>>> {
        let mut vals: Vec<Vec<u8>> = Vec::with_capacity(net.m());
        for i in 0..net.m() {
            if net.is_input(i) {
                vals.push(x[i * n..(i + 1) * n].to_vec());
            } else {
                let parents: Vec<&[u8]> = net.parents(i).iter().map(|&p| vals[p].as_slice()).collect();
                let v = self.apply(i, &parents, field)?;
                vals.push(v);
            }
        }
        Some(vals)
    }
}

/// Checks N1 (inputs carry their message), N2 (outputs carry the demanded
/// message) and N3 (every other edge is a function of its parents).
pub fn validate_linear_code(net: &NetworkInstance, code: &LinearNetworkCode) -> Result<LocalEncodingCertificate, CodeError> {
    check_linear_shape(net, code)?;
    let (f, n, k) = (&code.field, code.n, code.k);
    let mismatch_row = |c: &Matrix, want: &Matrix| -> Option<Vec<u32>> {
        (0..c.rows()).find(|&r| c.row(r) != want.row(r)).map(|r| {
            let mut x = vec![0u32; n * k];
            x[r] = 1;
            x
        })
    };
    let mut encodings = Vec::with_capacity(net.m());
    for i in 0..net.m() {
        let c = code.coeff(i);
        if net.is_input(i) {
            if let Some(x) = mismatch_row(c, &selector(f, k, n, i)) {
                return Err(CodeError::N1Violation { edge: net.edge_id(i), witness: Witness::Input(x) });
            }
            encodings.push(None);
            continue;
        }
        if let Some(msg) = net.demand(i) {
            if let Some(x) = mismatch_row(c, &selector(f, k, n, msg)) {
                return Err(CodeError::N2Violation { edge: net.edge_id(i), witness: Witness::Input(x) });
            }
        }
        let parents: Vec<&Matrix> = net.parents(i).iter().map(|&p| code.coeff(p)).collect();
        let stacked = Matrix::hstack(f, n * k, &parents)?;
        match stacked.solve_right(c)? {
            Some(t) => {
                let ts = (0..parents.len()).map(|a| t.submatrix(a * n, 0, n, n)).collect();
                encodings.push(Some(LocalEncoding::Linear(ts)));
            }
            None => {
                let have = stacked.rank();
                let need = Matrix::hstack(f, n * k, &[&stacked, c])?.rank();
                return Err(CodeError::N3Violation { edge: net.edge_id(i), witness: Witness::Rank { have, need } });
            }
        }
    }
    Ok(LocalEncodingCertificate { encodings })
}

fn check_linear_shape(net: &NetworkInstance, code: &LinearNetworkCode) -> Result<(), CodeError> {
    if code.coeffs.len() != net.m() || code.k != net.k() {
        return Err(CodeError::ShapeMismatch(format!(
            "code has {} edges and k = {}, network has {} edges and k = {}",
            code.coeffs.len(),
            code.k,
            net.m(),
            net.k()
        )));
    }
    Ok(())
}

/// Table version of [`validate_linear_code`]. Exhaustive over all inputs;
/// the N3 check requires `f_e` to be constant on every class of inputs
/// with equal parent values.
pub fn validate_table_code(net: &NetworkInstance, code: &TableNetworkCode) -> Result<LocalEncodingCertificate, CodeError> {
    if code.tables.len() != net.m() || code.k != net.k() {
        return Err(CodeError::ShapeMismatch(format!(
            "code has {} edges and k = {}, network has {} edges and k = {}",
            code.tables.len(),
            code.k,
            net.m(),
            net.k()
        )));
    }
    let (q, n, k) = (code.q, code.n, code.k);
    let inputs = code.input_count();
    let mut encodings = Vec::with_capacity(net.m());
    for i in 0..net.m() {
        let expected_block = if net.is_input(i) { Some(i) } else { net.demand(i) };
        if let Some(block) = expected_block {
            for z in 0..inputs {
                let x = tuple_at(q, n * k, z);
                if code.value(i, z) != &x[block * n..(block + 1) * n] {
                    let witness = Witness::Input(widen(&x));
                    let edge = net.edge_id(i);
                    return Err(if net.is_input(i) {
                        CodeError::N1Violation { edge, witness }
                    } else {
                        CodeError::N2Violation { edge, witness }
                    });
                }
            }
        }
        if net.is_input(i) {
            encodings.push(None);
            continue;
        }
        let mut seen: HashMap<Vec<u8>, usize> = HashMap::new();
        for z in 0..inputs {
            let key: Vec<u8> = net.parents(i).iter().flat_map(|&p| code.value(p, z).iter().copied()).collect();
            match seen.get(&key) {
                Some(&z0) if code.value(i, z0) != code.value(i, z) => {
                    return Err(CodeError::N3Violation {
                        edge: net.edge_id(i),
                        witness: Witness::Pair(widen(&tuple_at(q, n * k, z0)), widen(&tuple_at(q, n * k, z))),
                    });
                }
                Some(_) => {}
                None => {
                    seen.insert(key, z);
                }
            }
        }
        let map = seen.into_iter().map(|(key, z)| (key, code.value(i, z).to_vec())).collect();
        encodings.push(Some(LocalEncoding::Table(map)));
    }
    Ok(LocalEncodingCertificate { encodings })
}

/// Tabulates a linear code; the alphabet is the field's element values.
pub fn linear_to_table(code: &LinearNetworkCode) -> Result<TableNetworkCode, CodeError> {
    let q = code.field.order();
    let len = code.n * code.k;
    let count = checked_pow(q, len).unwrap_or(u128::MAX);
    if count > TABLE_INPUT_CAP {
        return Err(CodeError::TableTooLarge { entries: count, cap: TABLE_INPUT_CAP });
    }
    let mut tables = vec![Vec::with_capacity(count as usize * code.n); code.coeffs.len()];
    for z in 0..count as usize {
        let x = tuple_at(q, len, z);
        for (t, c) in tables.iter_mut().zip(&code.coeffs) {
            t.extend(code.field.vec_mul(&x, c));
        }
    }
    TableNetworkCode::new(q, code.n, code.k, tables)
}
