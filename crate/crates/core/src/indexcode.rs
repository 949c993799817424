//! Index codes: an encoding `f : (Σ^n)^k -> Σ^ℓ` broadcast to every
//! client, plus per-client decoders. The rate is `λ = ℓ / n`.
//!
//! A linear code is an `(n k) x ℓ` matrix `G` with `f(Z) = Z G`. A
//! client `(x, H)` can decode iff the `n` columns selecting `x` lie in the
//! column space of `[G | E_H]`; the solve returns the decoder
//! `Z_x = f(Z) P + Z_H Q`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{IndexCodeError, Witness};
use crate::galois::{multi_selector, selector, FieldSpec, Matrix};
use crate::index::{compute_mu, Client, IndexInstance};
use crate::netcode::{checked_pow, tuple_at, TABLE_INPUT_CAP};
use crate::reduction::LiftedDecoder;

/// Inputs enumerated by [`brute_force_decodability`] at most.
pub const BRUTE_FORCE_CAP: u128 = 4096;

/// Anything that maps a message tuple to a broadcast.
pub trait IndexEncoder {
    /// Alphabet size.
    fn q(&self) -> usize;
    fn n(&self) -> usize;
    fn k(&self) -> usize;
    fn l(&self) -> usize;
    /// `f(Z)` for a message row of `n k` symbols; returns `ℓ` symbols.
    fn encode(&self, z: &[u8]) -> Vec<u8>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawLinearIndexCode {
    pub field: FieldSpec,
    pub n: usize,
    pub k: usize,
    pub l: usize,
    #[serde(rename = "G")]
    pub g: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearIndexCode {
    field: FieldSpec,
    n: usize,
    k: usize,
    l: usize,
    g: Matrix,
}

impl LinearIndexCode {
    pub fn new(n: usize, k: usize, l: usize, g: Matrix) -> Result<Self, IndexCodeError> {
        if n == 0 || g.rows() != n * k || g.cols() != l {
            return Err(IndexCodeError::ShapeMismatch(format!(
                "G is {}x{}, expected {}x{} for n={n}, k={k}, l={l}",
                g.rows(),
                g.cols(),
                n * k,
                l
            )));
        }
        Ok(LinearIndexCode { field: g.field().clone(), n, k, l, g })
    }

    pub fn from_raw(raw: &RawLinearIndexCode) -> Result<Self, IndexCodeError> {
        let g = if raw.g.is_empty() {
            Matrix::zeros(&raw.field, raw.n * raw.k, raw.l)
        } else {
            Matrix::from_rows(&raw.field, &raw.g)?
        };
        Self::new(raw.n, raw.k, raw.l, g)
    }

    pub fn to_raw(&self) -> RawLinearIndexCode {
        RawLinearIndexCode { field: self.field.clone(), n: self.n, k: self.k, l: self.l, g: self.g.to_rows() }
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn matrix(&self) -> &Matrix {
        &self.g
    }
}

impl IndexEncoder for LinearIndexCode {
    fn q(&self) -> usize {
        self.field.order()
    }
    fn n(&self) -> usize {
        self.n
    }
    fn k(&self) -> usize {
        self.k
    }
    fn l(&self) -> usize {
        self.l
    }
    fn encode(&self, z: &[u8]) -> Vec<u8> {
        self.field.vec_mul(z, &self.g)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTableIndexCode {
    pub q: usize,
    pub n: usize,
    pub k: usize,
    pub l: usize,
    /// `f(Z)` for every `Z` in lexicographic order, `ℓ` symbols each.
    pub table: Vec<u32>,
}

#[derive(Debug, Clone)]
pub enum TableEncoder {
    Table(Vec<u8>),
    Lifted(Box<crate::reduction::LiftedTableCode>),
}

/// General index code, either tabulated or produced by lifting a table
/// network code (in which case decoders come with it).
#[derive(Debug, Clone)]
pub struct TableIndexCode {
    q: usize,
    n: usize,
    k: usize,
    l: usize,
    encoder: TableEncoder,
}

impl TableIndexCode {
    pub fn from_raw(raw: &RawTableIndexCode) -> Result<Self, IndexCodeError> {
        let inputs = checked_pow(raw.q, raw.n * raw.k).unwrap_or(u128::MAX);
        if inputs > TABLE_INPUT_CAP {
            return Err(IndexCodeError::InstanceTooLarge { inputs, cap: TABLE_INPUT_CAP });
        }
        if raw.n == 0 || raw.table.len() as u128 != inputs * raw.l as u128 {
            return Err(IndexCodeError::ShapeMismatch(format!(
                "table has {} symbols, expected {}",
                raw.table.len(),
                inputs * raw.l as u128
            )));
        }
        if raw.table.iter().any(|&s| s as usize >= raw.q) || !(2..=256).contains(&raw.q) {
            return Err(IndexCodeError::ShapeMismatch(format!("table symbols must lie in 0..{}", raw.q)));
        }
        Ok(TableIndexCode {
            q: raw.q,
            n: raw.n,
            k: raw.k,
            l: raw.l,
            encoder: TableEncoder::Table(raw.table.iter().map(|&s| s as u8).collect()),
        })
    }

    pub(crate) fn lifted(code: crate::reduction::LiftedTableCode) -> Self {
        TableIndexCode { q: code.q(), n: code.n(), k: code.k(), l: code.l(), encoder: TableEncoder::Lifted(Box::new(code)) }
    }

    pub fn encoder(&self) -> &TableEncoder {
        &self.encoder
    }

    /// Tabulates the encoder; fails beyond [`TABLE_INPUT_CAP`] inputs.
    pub fn to_raw(&self) -> Result<RawTableIndexCode, IndexCodeError> {
        let table = match &self.encoder {
            TableEncoder::Table(t) => t.iter().map(|&s| s as u32).collect(),
            TableEncoder::Lifted(_) => {
                let inputs = checked_pow(self.q, self.n * self.k).unwrap_or(u128::MAX);
                if inputs > TABLE_INPUT_CAP {
                    return Err(IndexCodeError::InstanceTooLarge { inputs, cap: TABLE_INPUT_CAP });
                }
                (0..inputs as usize)
                    .flat_map(|z| self.encode(&tuple_at(self.q, self.n * self.k, z)))
                    .map(|s| s as u32)
                    .collect()
            }
        };
        Ok(RawTableIndexCode { q: self.q, n: self.n, k: self.k, l: self.l, table })
    }

    /// Decodes client number `client` from the broadcast and its side
    /// information, when the code carries structured decoders.
    pub fn decode(&self, client: usize, broadcast: &[u8], side: &[u8]) -> Option<Vec<u8>> {
        match &self.encoder {
            TableEncoder::Lifted(lifted) => lifted.decode(client, broadcast, side),
            TableEncoder::Table(_) => None,
        }
    }
}

impl IndexEncoder for TableIndexCode {
    fn q(&self) -> usize {
        self.q
    }
    fn n(&self) -> usize {
        self.n
    }
    fn k(&self) -> usize {
        self.k
    }
    fn l(&self) -> usize {
        self.l
    }
    fn encode(&self, z: &[u8]) -> Vec<u8> {
        match &self.encoder {
            TableEncoder::Table(t) => {
                let w = self.l;
                let idx = crate::netcode::tuple_index(self.q, z);
                t[idx * w..(idx + 1) * w].to_vec()
            }
            TableEncoder::Lifted(lifted) => lifted.encode(z),
        }
    }
}

/// How a client recovers its wanted block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecoderCertificate {
    /// `Z_x = f(Z) P + Z_H Q`.
    Linear { p: Matrix, q: Matrix },
    /// Concatenated `(f(Z), Z_H)` to `Z_x`.
    Table(BTreeMap<Vec<u8>, Vec<u8>>),
    /// Decoder read off the structure of a lifted network code.
    Lifted(LiftedDecoder),
}

/// Values of the blocks in `which`, concatenated.
pub fn gather_blocks(z: &[u8], n: usize, which: &[usize]) -> Vec<u8> {
    which.iter().flat_map(|&b| z[b * n..(b + 1) * n].iter().copied()).collect()
}

fn check_shape(enc: &dyn IndexEncoder, inst: &IndexInstance) -> Result<(), IndexCodeError> {
    if enc.k() != inst.k() {
        return Err(IndexCodeError::ShapeMismatch(format!(
            "code has k = {}, instance has k = {}",
            enc.k(),
            inst.k()
        )));
    }
    Ok(())
}

fn linear_client_check(code: &LinearIndexCode, client: &Client) -> Result<Result<DecoderCertificate, Witness>, IndexCodeError> {
    let (f, n, k, l) = (&code.field, code.n, code.k, code.l);
    // The side blocks span their own coordinates, so modulo them the
    // question is whether G restricted to the remaining rows reaches the
    // wanted block.
    let mut known = vec![false; k];
    client.has.iter().for_each(|&h| known[h] = true);
    let mut rest: Vec<usize> = (0..n * k).filter(|r| !known[r / n]).collect();
    // sparse equations first keeps elimination fill-in low
    rest.sort_by_key(|&r| code.g.row(r).iter().filter(|&&v| v != 0).count());
    let mut g_rest = Vec::with_capacity(rest.len() * l);
    let mut want_rest = Matrix::zeros(f, rest.len(), n);
    for (i, &r) in rest.iter().enumerate() {
        g_rest.extend_from_slice(code.g.row(r));
        if r / n == client.wants {
            want_rest.set(i, r % n, 1);
        }
    }
    let g_rest = Matrix::from_vec(f, rest.len(), l, g_rest)?;
    let side_dim = n * client.has.len();
    Ok(match g_rest.solve_right(&want_rest)? {
        Some(p) => {
            // rows of H: 0 = (G P)_H + Q
            let gp = code.g.mul(&p)?;
            let mut q = Matrix::zeros(f, side_dim, n);
            for (a, &h) in client.has.iter().enumerate() {
                for t in 0..n {
                    for c in 0..n {
                        q.set(a * n + t, c, f.neg(gp.get(h * n + t, c)));
                    }
                }
            }
            Ok(DecoderCertificate::Linear { p, q })
        }
        None => {
            let have = side_dim + g_rest.rank();
            let need = side_dim + Matrix::hstack(f, rest.len(), &[&g_rest, &want_rest])?.rank();
            Err(Witness::Rank { have, need })
        }
    })
}

/// Condition I1 for a linear code, by column-space membership. Returns one
/// decoder per client, in the instance's client order.
pub fn validate_index_code(code: &LinearIndexCode, inst: &IndexInstance) -> Result<Vec<DecoderCertificate>, IndexCodeError> {
    check_shape(code, inst)?;
    inst.clients()
        .iter()
        .enumerate()
        .map(|(r, c)| linear_client_check(code, c)?.map_err(|witness| IndexCodeError::Undecodable { client: r, witness }))
        .collect()
}

/// Checks a linear certificate as a matrix identity `E_x = G P + E_H Q`.
pub fn certificate_holds(code: &LinearIndexCode, client: &Client, cert: &DecoderCertificate) -> bool {
    let DecoderCertificate::Linear { p, q } = cert else { return false };
    let (f, n, k) = (&code.field, code.n, code.k);
    let side = multi_selector(f, k, n, &client.has);
    let lhs = code.g.mul(p).and_then(|a| side.mul(q).and_then(|b| a.add(&b)));
    lhs.map(|m| m == selector(f, k, n, client.wants)).unwrap_or(false)
}

fn partition_check(enc: &dyn IndexEncoder, inst: &IndexInstance, cap: u128) -> Result<Vec<DecoderCertificate>, IndexCodeError> {
    check_shape(enc, inst)?;
    let (q, n, k) = (enc.q(), enc.n(), enc.k());
    let inputs = checked_pow(q, n * k).unwrap_or(u128::MAX);
    if inputs > cap {
        return Err(IndexCodeError::InstanceTooLarge { inputs, cap });
    }
    let zs: Vec<Vec<u8>> = (0..inputs as usize).map(|z| tuple_at(q, n * k, z)).collect();
    let fs: Vec<Vec<u8>> = zs.iter().map(|z| enc.encode(z)).collect();
    let mut certs = Vec::with_capacity(inst.clients().len());
    for (r, c) in inst.clients().iter().enumerate() {
        let mut seen: HashMap<Vec<u8>, usize> = HashMap::new();
        for (zi, z) in zs.iter().enumerate() {
            let mut key = fs[zi].clone();
            key.extend(gather_blocks(z, n, &c.has));
            match seen.get(&key) {
                Some(&z0) if zs[z0][c.wants * n..(c.wants + 1) * n] != z[c.wants * n..(c.wants + 1) * n] => {
                    let widen = |v: &[u8]| v.iter().map(|&s| s as u32).collect();
                    return Err(IndexCodeError::Undecodable { client: r, witness: Witness::Pair(widen(&zs[z0]), widen(z)) });
                }
                Some(_) => {}
                None => {
                    seen.insert(key, zi);
                }
            }
        }
        let map = seen.into_iter().map(|(key, zi)| (key, zs[zi][c.wants * n..(c.wants + 1) * n].to_vec())).collect();
        certs.push(DecoderCertificate::Table(map));
    }
    Ok(certs)
}

/// Ground-truth decodability: partitions all `q^{n k}` inputs by
/// `(f(Z), Z_H)` and checks that `Z_x` is constant on each class.
pub fn brute_force_decodability(enc: &dyn IndexEncoder, inst: &IndexInstance) -> Result<Vec<DecoderCertificate>, IndexCodeError> {
    partition_check(enc, inst, BRUTE_FORCE_CAP)
}

/// Condition I1 for a general code. Tabulated codes are checked by
/// exhaustive partition (up to [`TABLE_INPUT_CAP`] inputs); lifted codes
/// carry structured decoders, checked with [`verify_decoders`].
pub fn validate_table_index_code(code: &TableIndexCode, inst: &IndexInstance) -> Result<Vec<DecoderCertificate>, IndexCodeError> {
    partition_check(code, inst, TABLE_INPUT_CAP)
}

/// Runs every structured decoder of `code` on the given message tuples.
pub fn verify_decoders<'a>(
    code: &TableIndexCode,
    inst: &IndexInstance,
    inputs: impl IntoIterator<Item = &'a [u8]>,
) -> Result<usize, IndexCodeError> {
    check_shape(code, inst)?;
    let n = code.n;
    let mut checked = 0;
    for z in inputs {
        let fz = code.encode(z);
        for (r, c) in inst.clients().iter().enumerate() {
            let side = gather_blocks(z, n, &c.has);
            let want = &z[c.wants * n..(c.wants + 1) * n];
            if code.decode(r, &fz, &side).as_deref() != Some(want) {
                return Err(IndexCodeError::Undecodable {
                    client: r,
                    witness: Witness::Input(z.iter().map(|&s| s as u32).collect()),
                });
            }
        }
        checked += 1;
    }
    Ok(checked)
}

/// An exact rational rate, printed as `a` or `a/b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Rate(pub Ratio<u64>);

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for Rate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rate {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse::<Ratio<u64>>().map(Rate).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateReport {
    pub n: usize,
    pub q: usize,
    pub l: usize,
    /// `λ = ℓ / n`.
    pub rate: Rate,
    pub mu: usize,
    pub achieves_bound: bool,
    pub linear: bool,
    /// Best linear rate for this fixed `n` and `q`, when a search
    /// established it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_star: Option<Rate>,
}

impl RateReport {
    /// Builds a report for a code already known to be valid. A rate below
    /// `μ` would contradict the lower bound, so it is reported as an error.
    pub fn new(n: usize, q: usize, l: usize, mu: usize, linear: bool) -> Result<Self, IndexCodeError> {
        let rate = Rate(Ratio::new(l as u64, n as u64));
        if rate.0 < Ratio::from_integer(mu as u64) {
            return Err(IndexCodeError::BelowLowerBound { rate: rate.to_string(), mu });
        }
        Ok(RateReport { n, q, l, rate, mu, achieves_bound: rate.0 == Ratio::from_integer(mu as u64), linear, lambda_star: None })
    }
}

/// Validates a linear code and reports its rate against `μ`.
pub fn rate_report(code: &LinearIndexCode, inst: &IndexInstance) -> Result<RateReport, IndexCodeError> {
    validate_index_code(code, inst)?;
    RateReport::new(code.n, code.field.order(), code.l, compute_mu(inst), true)
}

/// Rate report for a general code whose decodability was established by
/// the caller (exhaustively or through its decoders).
pub fn table_rate_report(code: &TableIndexCode, inst: &IndexInstance) -> Result<RateReport, IndexCodeError> {
    check_shape(code, inst)?;
    RateReport::new(code.n, code.q, code.l, compute_mu(inst), false)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::index::{validate_index_instance, RawClient, RawIndexInstance, Wants};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn butterfly() -> IndexInstance {
        let raw = RawIndexInstance {
            description: None,
            k: 4,
            names: None,
            clients: [(1, vec![2, 3]), (2, vec![1, 3]), (3, vec![1, 2]), (4, vec![1])]
                .into_iter()
                .map(|(w, h)| RawClient { wants: Wants::One(w), has: h })
                .collect(),
        };
        validate_index_instance(&raw).unwrap()
    }

    pub(crate) fn butterfly_code() -> LinearIndexCode {
        let f = FieldSpec::prime(2).unwrap();
        let g = Matrix::from_rows(&f, &[[1u32, 1], [1, 0], [1, 0], [0, 1]]).unwrap();
        LinearIndexCode::new(1, 4, 2, g).unwrap()
    }

    #[test]
    fn butterfly_code_decodes() {
        let inst = butterfly();
        let code = butterfly_code();
        let certs = validate_index_code(&code, &inst).unwrap();
        for (c, cert) in inst.clients().iter().zip(&certs) {
            assert!(certificate_holds(&code, c, cert));
        }
        assert_eq!(brute_force_decodability(&code, &inst).unwrap().len(), 4);
        let report = rate_report(&code, &inst).unwrap();
        assert_eq!(report.rate.to_string(), "2");
        assert_eq!(report.mu, 1);
        assert!(!report.achieves_bound);
    }

    #[test]
    fn selector_serves_lonely_client() {
        let f = FieldSpec::prime(3).unwrap();
        let inst = validate_index_instance(&RawIndexInstance {
            description: None,
            k: 2,
            names: None,
            clients: vec![RawClient { wants: Wants::One(1), has: vec![] }],
        })
        .unwrap();
        let code = LinearIndexCode::new(1, 2, 1, selector(&f, 2, 1, 0)).unwrap();
        validate_index_code(&code, &inst).unwrap();
        let zero = LinearIndexCode::new(1, 2, 1, Matrix::zeros(&f, 2, 1)).unwrap();
        assert!(matches!(validate_index_code(&zero, &inst), Err(IndexCodeError::Undecodable { client: 0, .. })));
        assert!(matches!(brute_force_decodability(&zero, &inst), Err(IndexCodeError::Undecodable { client: 0, .. })));
    }

    #[test]
    fn identity_broadcast_rate() {
        let f = FieldSpec::prime(2).unwrap();
        let k = 3;
        let inst = validate_index_instance(&RawIndexInstance {
            description: None,
            k,
            names: None,
            clients: (1..=k).map(|w| RawClient { wants: Wants::One(w), has: vec![] }).collect(),
        })
        .unwrap();
        let code = LinearIndexCode::new(1, k, k, Matrix::identity(&f, k)).unwrap();
        let r = rate_report(&code, &inst).unwrap();
        assert_eq!((r.rate.to_string().as_str(), r.mu, r.achieves_bound), ("3", 3, true));
    }

    #[test]
    fn dropping_one_column_breaks_one_client() {
        let inst = butterfly();
        let f = FieldSpec::prime(2).unwrap();
        let g = Matrix::from_rows(&f, &[[1u32], [1], [1], [0]]).unwrap();
        let code = LinearIndexCode::new(1, 4, 1, g).unwrap();
        let lin = validate_index_code(&code, &inst).unwrap_err();
        let brute = brute_force_decodability(&code, &inst).unwrap_err();
        let client = |e: &IndexCodeError| match e {
            IndexCodeError::Undecodable { client, .. } => *client,
            _ => panic!("{e}"),
        };
        assert_eq!(client(&lin), client(&brute));
        assert_eq!(inst.clients()[client(&lin)].wants, 3);
    }

    #[test]
    fn lower_bound_is_enforced() {
        assert!(matches!(RateReport::new(2, 3, 1, 1, true), Err(IndexCodeError::BelowLowerBound { .. })));
        let r = RateReport::new(2, 3, 3, 1, true).unwrap();
        assert_eq!(r.rate.to_string(), "3/2");
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<RateReport>(&json).unwrap(), r);
    }

    #[test]
    fn table_encoder_matches_linear() {
        let inst = butterfly();
        let code = butterfly_code();
        let raw = RawTableIndexCode {
            q: 2,
            n: 1,
            k: 4,
            l: 2,
            table: (0..16).flat_map(|z| code.encode(&tuple_at(2, 4, z))).map(u32::from).collect(),
        };
        let table = TableIndexCode::from_raw(&raw).unwrap();
        assert_eq!(table.to_raw().unwrap(), raw);
        validate_table_index_code(&table, &inst).unwrap();
        assert_eq!(table_rate_report(&table, &inst).unwrap().rate.to_string(), "2");
    }

    fn random_matrix(f: &FieldSpec, rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
        let q = f.order() as u8;
        let data = (0..rows * cols).map(|_| rng.gen_range(0..q)).collect();
        Matrix::from_vec(f, rows, cols, data).unwrap()
    }

    #[test]
    fn invertible_column_mix_preserves_decodability() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let inst = butterfly();
        let code = butterfly_code();
        let f = code.field().clone();
        let mut tried = 0;
        while tried < 20 {
            let w = random_matrix(&f, 2, 2, &mut rng);
            let Some(w_inv) = w.invert().unwrap() else { continue };
            let mixed = LinearIndexCode::new(1, 4, 2, code.matrix().mul(&w).unwrap()).unwrap();
            let before = validate_index_code(&code, &inst).unwrap();
            validate_index_code(&mixed, &inst).unwrap();
            for (c, cert) in inst.clients().iter().zip(before) {
                let DecoderCertificate::Linear { p, q } = cert else { unreachable!() };
                let moved = DecoderCertificate::Linear { p: w_inv.mul(&p).unwrap(), q };
                assert!(certificate_holds(&mixed, c, &moved));
            }
            tried += 1;
        }
    }
}
