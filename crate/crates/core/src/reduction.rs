//! From a network coding instance to its reduced index coding instance,
//! and codes back and forth.
//!
//! The reduced instance has messages `x_1..x_k` (the network's messages) followed by
//! `y_1..y_m` (one per edge, in canonical edge order) and five client
//! families:
//!
//! * R1: `(x_i, {y_i})` for every input edge `e_i`
//! * R2: `(y_i, {x_i})` for every input edge `e_i`
//! * R3: `(y_i, {y_j : e_j a parent of e_i})` for every other edge
//! * R4: `(x_δ(e_i), {y_i})` for every output edge `e_i`
//! * R5: `(y_i, {x_1..x_k})` for every edge
//!
//! A network code `f` lifts to the index code `g_i = y_i + f_{e_i}(X)` of
//! length `n m` (rate `m`), which meets the lower bound mu = `m`; conversely a
//! linear index code of length `n m` lowers to a network code.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::ReductionError;
use crate::galois::{selector, Matrix};
use crate::index::{Client, IndexInstance};
use crate::indexcode::{validate_index_code, DecoderCertificate, IndexEncoder, LinearIndexCode, TableIndexCode};
use crate::netcode::{
    validate_linear_code, validate_table_code, LinearNetworkCode, LocalEncoding, LocalEncodingCertificate,
    TableNetworkCode,
};
use crate::network::NetworkInstance;

/// Client family labels.
pub const FAMILIES: [&str; 5] = ["R1", "R2", "R3", "R4", "R5"];

/// Layout of the reduced instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionMap {
    pub k: usize,
    pub m: usize,
    /// `x1..xk, y1..ym`.
    pub message_names: Vec<String>,
    /// Original id of the edge behind `y_i`.
    pub edge_ids: Vec<u64>,
    /// Family label to client positions in the reduced instance. When
    /// `k = 1` the R2 client for the input edge coincides with an R5
    /// client, so that position appears in both lists.
    pub client_families: BTreeMap<String, Vec<usize>>,
}

impl ReductionMap {
    /// Family label and edge position of every client.
    pub fn client_origins(&self, inst: &IndexInstance) -> Vec<(&'static str, usize)> {
        let mut out = vec![("", 0); inst.clients().len()];
        for (label, members) in &self.client_families {
            let label = FAMILIES.iter().find(|l| *l == label).copied().unwrap_or("");
            for &r in members {
                out[r] = (label, self.edge_of(label, &inst.clients()[r]));
            }
        }
        out
    }

    fn edge_of(&self, label: &str, c: &Client) -> usize {
        match label {
            "R1" | "R4" => c.has[0] - self.k,
            _ => c.wants - self.k,
        }
    }
}

fn family_clients(net: &NetworkInstance) -> Vec<(&'static str, Client)> {
    let (k, m) = (net.k(), net.m());
    let y = |i: usize| k + i;
    let mut out = Vec::new();
    for i in net.inputs() {
        out.push(("R1", Client { wants: i, has: vec![y(i)] }));
    }
    for i in net.inputs() {
        out.push(("R2", Client { wants: y(i), has: vec![i] }));
    }
    for i in k..m {
        out.push(("R3", Client { wants: y(i), has: net.parents(i).iter().map(|&p| y(p)).collect() }));
    }
    for i in net.outputs() {
        out.push(("R4", Client { wants: net.demand(i).expect("output edges carry demands"), has: vec![y(i)] }));
    }
    for i in 0..m {
        out.push(("R5", Client { wants: y(i), has: (0..k).collect() }));
    }
    out
}

/// Builds the reduced instance and the map recording where each client came from.
pub fn reduce_instance(net: &NetworkInstance) -> (IndexInstance, ReductionMap) {
    let (k, m) = (net.k(), net.m());
    let names: Vec<String> = (1..=k).map(|i| format!("x{i}")).chain((1..=m).map(|i| format!("y{i}"))).collect();
    let tagged = family_clients(net);
    let inst = IndexInstance::from_clients(
        k + m,
        Some(names.clone()),
        tagged.iter().map(|(_, c)| c.clone()).collect(),
        net.description().map(|d| format!("reduction of: {d}")),
    )
    .expect("reduced clients are well formed");
    let mut families: BTreeMap<String, Vec<usize>> = FAMILIES.iter().map(|f| (f.to_string(), Vec::new())).collect();
    for (label, c) in &tagged {
        let pos = inst.position(c).expect("client present");
        families.get_mut(*label).unwrap().push(pos);
    }
    let map = ReductionMap {
        k,
        m,
        message_names: names,
        edge_ids: (0..m).map(|i| net.edge_id(i)).collect(),
        client_families: families,
    };
    (inst, map)
}

/// `g_i = y_i + f_{e_i}(X)` as an `n(k+m) x n m` matrix.
pub fn lift_linear_code(net: &NetworkInstance, code: &LinearNetworkCode) -> Result<LinearIndexCode, ReductionError> {
    validate_linear_code(net, code).map_err(ReductionError::InvalidNetworkCode)?;
    Ok(lift_unchecked(net, code))
}

fn lift_unchecked(net: &NetworkInstance, code: &LinearNetworkCode) -> LinearIndexCode {
    let (f, n, k, m) = (code.field(), code.n(), net.k(), net.m());
    let mut g = Matrix::zeros(f, n * (k + m), n * m);
    for i in 0..m {
        g.set_submatrix(0, i * n, code.coeff(i));
        g.set_submatrix(n * (k + i), i * n, &Matrix::identity(f, n));
    }
    LinearIndexCode::new(n, k + m, n * m, g).expect("shape follows from the network")
}

/// Decoders for the lifted code read directly off the network code, one
/// per client of `reduced`, following the five families:
///
/// * R1, R2, R4: subtract the side block from `g_i`
/// * R3: `y_i = g_i - sum_j (g_j - y_j) T_j` over the parents `j`
/// * R5: `y_i = g_i - X C_i`
pub fn lifted_linear_certificates(
    net: &NetworkInstance,
    code: &LinearNetworkCode,
    cert: &LocalEncodingCertificate,
    reduced: &IndexInstance,
    map: &ReductionMap,
) -> Vec<DecoderCertificate> {
    let (f, n, m) = (code.field(), code.n(), net.m());
    let id = Matrix::identity(f, n);
    let minus_id = id.neg();
    map.client_origins(reduced)
        .into_iter()
        .map(|(label, i)| {
            let mut p = Matrix::zeros(f, n * m, n);
            p.set_submatrix(i * n, 0, &id);
            let q = match label {
                "R1" | "R2" | "R4" => minus_id.clone(),
                "R3" => {
                    let Some(LocalEncoding::Linear(ts)) = &cert.encodings[i] else {
                        unreachable!("linear certificate on a non-input edge")
                    };
                    let parents = net.parents(i);
                    let mut q = Matrix::zeros(f, n * parents.len(), n);
                    for (a, (&j, t)) in parents.iter().zip(ts).enumerate() {
                        let cur = p.submatrix(j * n, 0, n, n);
                        p.set_submatrix(j * n, 0, &cur.add(&t.neg()).unwrap());
                        q.set_submatrix(a * n, 0, t);
                    }
                    q
                }
                _ => code.coeff(i).neg(),
            };
            DecoderCertificate::Linear { p, q }
        })
        .collect()
}

/// Structured decoder for one client of a lifted table code. All
/// arithmetic is componentwise mod `q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LiftedDecoder {
    /// Wanted block is `g_edge - side`.
    SubtractSide { edge: usize },
    /// `y_edge = g_edge - φ(g_P - y_P)` with `φ` the edge's local encoding.
    LocalEncoding { edge: usize },
    /// `y_edge = g_edge - f_edge(X)`, side information being all of `X`.
    GlobalFunction { edge: usize },
}

/// `g_i = y_i ⊕ f_{e_i}(X)` for a table network code.
#[derive(Debug, Clone)]
pub struct LiftedTableCode {
    q: usize,
    n: usize,
    k: usize,
    m: usize,
    code: TableNetworkCode,
    cert: LocalEncodingCertificate,
    parents: Vec<Vec<usize>>,
    decoders: Vec<LiftedDecoder>,
}

impl LiftedTableCode {
    pub fn network_code(&self) -> &TableNetworkCode {
        &self.code
    }

    pub fn decoders(&self) -> &[LiftedDecoder] {
        &self.decoders
    }

    fn add(&self, a: &[u8], b: &[u8]) -> Vec<u8> {
        a.iter().zip(b).map(|(&x, &y)| ((x as usize + y as usize) % self.q) as u8).collect()
    }

    fn sub(&self, a: &[u8], b: &[u8]) -> Vec<u8> {
        a.iter().zip(b).map(|(&x, &y)| ((x as usize + self.q - y as usize) % self.q) as u8).collect()
    }

    fn block<'a>(&self, v: &'a [u8], i: usize) -> &'a [u8] {
        &v[i * self.n..(i + 1) * self.n]
    }

    pub fn decode(&self, client: usize, broadcast: &[u8], side: &[u8]) -> Option<Vec<u8>> {
        let n = self.n;
        match *self.decoders.get(client)? {
            LiftedDecoder::SubtractSide { edge } => Some(self.sub(self.block(broadcast, edge), side)),
            LiftedDecoder::LocalEncoding { edge } => {
                let parent_vals: Vec<Vec<u8>> = self.parents[edge]
                    .iter()
                    .enumerate()
                    .map(|(a, &j)| self.sub(self.block(broadcast, j), &side[a * n..(a + 1) * n]))
                    .collect();
                let refs: Vec<&[u8]> = parent_vals.iter().map(Vec::as_slice).collect();
                let fe = self.cert.apply(edge, &refs, None)?;
                Some(self.sub(self.block(broadcast, edge), &fe))
            }
            LiftedDecoder::GlobalFunction { edge } => {
                let idx = crate::netcode::tuple_index(self.q, side);
                Some(self.sub(self.block(broadcast, edge), self.code.value(edge, idx)))
            }
        }
    }
}

impl IndexEncoder for LiftedTableCode {
    fn q(&self) -> usize {
        self.q
    }
    fn n(&self) -> usize {
        self.n
    }
    fn k(&self) -> usize {
        self.k + self.m
    }
    fn l(&self) -> usize {
        self.n * self.m
    }
    fn encode(&self, z: &[u8]) -> Vec<u8> {
        let nk = self.n * self.k;
        let idx = crate::netcode::tuple_index(self.q, &z[..nk]);
        let ys = &z[nk..];
        (0..self.m).flat_map(|i| self.add(self.block(ys, i), self.code.value(i, idx))).collect()
    }
}

/// Lifts a table network code, masking with mod-`q` addition. The network
/// code is validated exhaustively; the result carries one structured
/// decoder per client of `reduce_instance(net)`.
pub fn lift_table_code(net: &NetworkInstance, code: &TableNetworkCode) -> Result<TableIndexCode, ReductionError> {
    let cert = validate_table_code(net, code).map_err(ReductionError::InvalidNetworkCode)?;
    let (reduced, map) = reduce_instance(net);
    let decoders = map
        .client_origins(&reduced)
        .into_iter()
        .map(|(label, edge)| match label {
            "R3" => LiftedDecoder::LocalEncoding { edge },
            "R5" => LiftedDecoder::GlobalFunction { edge },
            _ => LiftedDecoder::SubtractSide { edge },
        })
        .collect();
    Ok(TableIndexCode::lifted(LiftedTableCode {
        q: code.q(),
        n: code.n(),
        k: net.k(),
        m: net.m(),
        code: code.clone(),
        cert,
        parents: (0..net.m()).map(|i| net.parents(i).to_vec()).collect(),
        decoders,
    }))
}

/// Turns a linear index code of length `n m` for the reduced instance into a network code
/// for the network: normalize the y-part of `G` to the identity, read the edge
/// functions off the x-part, and validate.
pub fn lower_index_code(net: &NetworkInstance, code: &LinearIndexCode) -> Result<LinearNetworkCode, ReductionError> {
    let (n, k, m) = (code.n(), net.k(), net.m());
    if code.k() != k + m {
        return Err(ReductionError::MessageCountMismatch { expected: k + m, got: code.k() });
    }
    if code.l() != n * m {
        return Err(ReductionError::LengthMismatch { l: code.l(), expected: n * m });
    }
    let (reduced, _) = reduce_instance(net);
    validate_index_code(code, &reduced).map_err(ReductionError::InvalidIndexCode)?;
    let f = code.field();
    let g = code.matrix();
    let a = g.submatrix(0, 0, n * k, n * m);
    let b = g.submatrix(n * k, 0, n * m, n * m);
    let b_inv = b.invert()?.ok_or(ReductionError::SingularM)?;
    let c = a.mul(&b_inv)?;

    let mut coeffs = Vec::with_capacity(m);
    for i in 0..m {
        let ci = c.submatrix(0, i * n, n * k, n);
        let pinned = if net.is_input(i) { Some(i) } else { net.demand(i) };
        if let Some(keep) = pinned {
            if let Some(j) = (0..k).find(|&j| j != keep && !ci.block(j, 0, n).is_zero()) {
                return Err(ReductionError::StructureViolation { edge: net.edge_id(i), message: j + 1 });
            }
            coeffs.push(selector(f, k, n, keep));
        } else {
            coeffs.push(ci);
        }
    }
    let lowered = LinearNetworkCode::new(f.clone(), n, k, coeffs).map_err(ReductionError::InvalidNetworkCode)?;
    validate_linear_code(net, &lowered).map_err(ReductionError::N3Failure)?;
    Ok(lowered)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::CodeError;
    use crate::galois::FieldSpec;
    use crate::index::compute_mu;
    use crate::indexcode::{certificate_holds, verify_decoders};
    use crate::netcode::{linear_to_table, tuple_at};
    use crate::network::tests::raw_path;
    use crate::network::{validate_network, RawEdge};

    fn path(len: usize) -> NetworkInstance {
        let mut raw = raw_path([1, 2, 3]);
        if len == 2 {
            raw.vertices.pop();
            raw.edges = vec![
                RawEdge { id: 1, tail: "s".into(), head: "a".into() },
                RawEdge { id: 2, tail: "a".into(), head: "b".into() },
            ];
            raw.demands = [(2, 1)].into();
        }
        validate_network(&raw, true).unwrap()
    }

    fn relay(net: &NetworkInstance, f: &FieldSpec) -> LinearNetworkCode {
        LinearNetworkCode::new(f.clone(), 1, 1, vec![Matrix::identity(f, 1); net.m()]).unwrap()
    }

    #[test]
    fn path_family_sizes() {
        // with k = 1 the R2 client (y1, {x1}) is also the R5 client for y1
        let (inst, map) = reduce_instance(&path(3));
        assert_eq!(inst.k(), 4);
        assert_eq!(inst.clients().len(), 7);
        let sizes: Vec<usize> = FAMILIES.iter().map(|f| map.client_families[*f].len()).collect();
        assert_eq!(sizes, vec![1, 1, 2, 1, 3]);
        assert_eq!(compute_mu(&inst), 3);

        let (inst, map) = reduce_instance(&path(2));
        assert_eq!((inst.k(), inst.clients().len()), (3, 5));
        let sizes: Vec<usize> = FAMILIES.iter().map(|f| map.client_families[*f].len()).collect();
        assert_eq!(sizes, vec![1, 1, 1, 1, 2]);
        assert_eq!(compute_mu(&inst), 2);
    }

    #[test]
    fn r3_has_parent_ys() {
        let (inst, map) = reduce_instance(&path(3));
        let r3: Vec<&Client> = map.client_families["R3"].iter().map(|&r| &inst.clients()[r]).collect();
        assert_eq!(r3[0], &Client { wants: 2, has: vec![1] });
        assert_eq!(r3[1], &Client { wants: 3, has: vec![2] });
        for &r in &map.client_families["R5"] {
            assert_eq!(inst.clients()[r].has, vec![0]);
        }
    }

    #[test]
    fn path_relay_lifts_and_lowers() {
        let f = FieldSpec::prime(2).unwrap();
        let net = path(3);
        let code = relay(&net, &f);
        let lifted = lift_linear_code(&net, &code).unwrap();
        let expected = Matrix::from_rows(&f, &[[1u32, 1, 1], [1, 0, 0], [0, 1, 0], [0, 0, 1]]).unwrap();
        assert_eq!(lifted.matrix(), &expected);
        let (reduced, map) = reduce_instance(&net);
        let report = crate::indexcode::rate_report(&lifted, &reduced).unwrap();
        assert!(report.achieves_bound);
        assert_eq!(report.mu, 3);

        let cert = validate_linear_code(&net, &code).unwrap();
        let structured = lifted_linear_certificates(&net, &code, &cert, &reduced, &map);
        for (c, d) in reduced.clients().iter().zip(&structured) {
            assert!(certificate_holds(&lifted, c, d), "{c:?}");
        }
        assert_eq!(lower_index_code(&net, &lifted).unwrap(), code);
    }

    #[test]
    fn mixed_columns_still_lower() {
        let f = FieldSpec::prime(3).unwrap();
        let net = path(3);
        let code = relay(&net, &f);
        let lifted = lift_linear_code(&net, &code).unwrap();
        let w = Matrix::from_rows(&f, &[[1u32, 2, 0], [0, 1, 1], [2, 0, 1]]).unwrap();
        assert!(w.invert().unwrap().is_some());
        let mixed = LinearIndexCode::new(1, 4, 3, lifted.matrix().mul(&w).unwrap()).unwrap();
        assert_eq!(lower_index_code(&net, &mixed).unwrap(), code);
    }

    #[test]
    fn lowering_rejects_wrong_length() {
        let f = FieldSpec::prime(2).unwrap();
        let net = path(3);
        let code = LinearIndexCode::new(1, 4, 4, Matrix::identity(&f, 4)).unwrap();
        assert_eq!(lower_index_code(&net, &code), Err(ReductionError::LengthMismatch { l: 4, expected: 3 }));
    }

    #[test]
    fn table_lift_matches_linear_lift() {
        let f = FieldSpec::prime(3).unwrap();
        let net = path(3);
        let code = relay(&net, &f);
        let lin = lift_linear_code(&net, &code).unwrap();
        let tab = lift_table_code(&net, &linear_to_table(&code).unwrap()).unwrap();
        let (reduced, _) = reduce_instance(&net);
        let all: Vec<Vec<u8>> = (0..81).map(|z| tuple_at(3, 4, z)).collect();
        for z in &all {
            assert_eq!(lin.encode(z), tab.encode(z));
        }
        assert_eq!(verify_decoders(&tab, &reduced, all.iter().map(Vec::as_slice)).unwrap(), 81);
        crate::indexcode::brute_force_decodability(&tab, &reduced).unwrap();
    }

    #[test]
    fn table_lift_rejects_invalid_code() {
        let f = FieldSpec::prime(2).unwrap();
        let net = path(3);
        let mut c = vec![Matrix::identity(&f, 1); 3];
        c[2] = Matrix::zeros(&f, 1, 1);
        let bad = LinearNetworkCode::new(f.clone(), 1, 1, c).unwrap();
        let t = linear_to_table(&bad).unwrap();
        assert!(matches!(lift_table_code(&net, &t), Err(ReductionError::InvalidNetworkCode(CodeError::N2Violation { .. }))));
        assert!(matches!(lift_linear_code(&net, &bad), Err(ReductionError::InvalidNetworkCode(_))));
    }
}
