//! Arithmetic over small finite fields GF(p^d) and dense matrices over them.
//!
//! Elements are stored as integers in `[0, q)`. An element's base-`p` digits
//! are the coefficients of its polynomial representative, constant term
//! first, so in GF(4) built from `x^2 + x + 1` the value `2` is `x` and `3`
//! is `x + 1`.
//!
//! All matrices use the row-vector convention: a message is a row vector and
//! a linear map acts by right multiplication, `y = x * A`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::GaloisError;

/// Hard cap on the field order. Tables are `q * q` bytes.
pub const MAX_ORDER: usize = 256;

#[derive(Debug)]
struct Tables {
    p: u32,
    degree: u32,
    poly: Vec<u32>,
    q: usize,
    add: Vec<u8>,
    mul: Vec<u8>,
    neg: Vec<u8>,
    inv: Vec<u8>,
}

/// A finite field with materialized addition, multiplication and inverse
/// tables. Cloning is cheap (shared tables).
#[derive(Clone)]
pub struct FieldSpec {
    t: Arc<Tables>,
}

#[derive(Serialize, Deserialize)]
struct FieldSpecRepr {
    p: u32,
    degree: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    poly: Option<Vec<u32>>,
}

impl Serialize for FieldSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        FieldSpecRepr {
            p: self.t.p,
            degree: self.t.degree,
            poly: (self.t.degree > 1).then(|| self.t.poly.clone()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FieldSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = FieldSpecRepr::deserialize(d)?;
        make_field(r.p, r.degree, r.poly.as_deref()).map_err(serde::de::Error::custom)
    }
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.t, &other.t)
            || (self.t.p == other.t.p && self.t.degree == other.t.degree && self.t.poly == other.t.poly)
    }
}

impl Eq for FieldSpec {}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.t.degree == 1 {
            write!(f, "GF({})", self.t.p)
        } else {
            write!(f, "GF({}^{}; {:?})", self.t.p, self.t.degree, self.t.poly)
        }
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({})", self.t.q)
    }
}

pub fn is_prime(p: u32) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Remainder of `a` modulo the monic polynomial `m` over GF(p).
/// Coefficients are constant-first.
fn poly_rem(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    let mut r = a.to_vec();
    let dm = m.len() - 1;
    while r.len() > dm {
        let lead = r[r.len() - 1];
        let shift = r.len() - 1 - dm;
        if lead != 0 {
            for (i, &c) in m.iter().enumerate() {
                r[shift + i] = (r[shift + i] + p * p - lead * c % p) % p;
            }
        }
        r.pop();
    }
    r
}

/// Monic polynomials of the given degree, constant-first, enumerated so that
/// the higher coefficients are most significant.
fn monic_polys(p: u32, degree: u32) -> impl Iterator<Item = Vec<u32>> {
    let count = (p as u64).pow(degree);
    (0..count).map(move |mut v| {
        let mut c = Vec::with_capacity(degree as usize + 1);
        for _ in 0..degree {
            c.push((v % p as u64) as u32);
            v /= p as u64;
        }
        c.push(1);
        c
    })
}

pub fn is_irreducible(poly: &[u32], p: u32) -> bool {
    let d = poly.len() as u32 - 1;
    if d == 0 {
        return false;
    }
    for dd in 1..=d / 2 {
        for div in monic_polys(p, dd) {
            if poly_rem(poly, &div, p).iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

/// Smallest monic irreducible polynomial of the given degree, comparing
/// coefficients from the highest non-leading degree down.
pub fn default_irreducible(p: u32, degree: u32) -> Option<Vec<u32>> {
    monic_polys(p, degree).find(|f| is_irreducible(f, p))
}

/// Builds GF(p^degree). For `degree > 1` the reduction polynomial is taken
/// from `poly` (constant-first, monic, length `degree + 1`) or chosen as the
/// smallest monic irreducible.
pub fn make_field(p: u32, degree: u32, poly: Option<&[u32]>) -> Result<FieldSpec, GaloisError> {
    if !is_prime(p) {
        return Err(GaloisError::NonPrimeCharacteristic(p));
    }
    if degree == 0 {
        return Err(GaloisError::InvalidPolynomial("degree must be positive".into()));
    }
    let q = (p as u64).checked_pow(degree).unwrap_or(u64::MAX);
    if q > MAX_ORDER as u64 {
        return Err(GaloisError::OrderCapExceeded { q, cap: MAX_ORDER });
    }
    let q = q as usize;
    let poly = match (degree, poly) {
        (1, None) => vec![0, 1],
        (_, Some(f)) => {
            if f.len() != degree as usize + 1 {
                return Err(GaloisError::InvalidPolynomial(format!(
                    "expected {} coefficients, got {}",
                    degree + 1,
                    f.len()
                )));
            }
            if f.iter().any(|&c| c >= p) {
                return Err(GaloisError::InvalidPolynomial(format!("coefficient out of range for p = {p}")));
            }
            if f[degree as usize] != 1 {
                return Err(GaloisError::InvalidPolynomial("polynomial is not monic".into()));
            }
            if degree > 1 && !is_irreducible(f, p) {
                return Err(GaloisError::ReduciblePolynomial(f.to_vec()));
            }
            f.to_vec()
        }
        (_, None) => default_irreducible(p, degree).expect("irreducible polynomials exist in every degree"),
    };

    let digits = |mut v: usize| -> Vec<u32> {
        let mut d = vec![0u32; degree as usize];
        for c in d.iter_mut() {
            *c = (v % p as usize) as u32;
            v /= p as usize;
        }
        d
    };
    let undigits = |d: &[u32]| -> usize { d.iter().rev().fold(0usize, |acc, &c| acc * p as usize + c as usize) };
    let reps: Vec<Vec<u32>> = (0..q).map(digits).collect();

    let mut add = vec![0u8; q * q];
    let mut mul = vec![0u8; q * q];
    for a in 0..q {
        for b in 0..q {
            let s: Vec<u32> = reps[a].iter().zip(&reps[b]).map(|(x, y)| (x + y) % p).collect();
            add[a * q + b] = undigits(&s) as u8;
            let mut prod = vec![0u32; 2 * degree as usize - 1];
            for (i, &x) in reps[a].iter().enumerate() {
                for (j, &y) in reps[b].iter().enumerate() {
                    prod[i + j] = (prod[i + j] + x * y) % p;
                }
            }
            let r = if degree == 1 { prod } else { poly_rem(&prod, &poly, p) };
            mul[a * q + b] = undigits(&r[..degree as usize]) as u8;
        }
    }
    let mut neg = vec![0u8; q];
    let mut inv = vec![0u8; q];
    for a in 0..q {
        neg[a] = (0..q).find(|&b| add[a * q + b] == 0).unwrap() as u8;
        if a != 0 {
            inv[a] = (1..q).find(|&b| mul[a * q + b] == 1).ok_or_else(|| GaloisError::ReduciblePolynomial(poly.clone()))? as u8;
        }
    }
    Ok(FieldSpec { t: Arc::new(Tables { p, degree, poly, q, add, mul, neg, inv }) })
}

/// Parses `p`, `p,degree` or `p,degree,c0:c1:...:cd`.
impl std::str::FromStr for FieldSpec {
    type Err = GaloisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GaloisError::InvalidPolynomial(format!("cannot parse field spec {s:?}"));
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let p: u32 = parts.first().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        let degree: u32 = match parts.get(1) {
            Some(v) => v.parse().map_err(|_| bad())?,
            None => 1,
        };
        let poly = match parts.get(2) {
            Some(v) => Some(v.split(':').map(|c| c.parse::<u32>()).collect::<Result<Vec<_>, _>>().map_err(|_| bad())?),
            None => None,
        };
        if parts.len() > 3 {
            return Err(bad());
        }
        make_field(p, degree, poly.as_deref())
    }
}

impl FieldSpec {
    pub fn prime(p: u32) -> Result<Self, GaloisError> {
        make_field(p, 1, None)
    }

    pub fn characteristic(&self) -> u32 {
        self.t.p
    }

    pub fn degree(&self) -> u32 {
        self.t.degree
    }

    pub fn reduction_poly(&self) -> &[u32] {
        &self.t.poly
    }

    pub fn order(&self) -> usize {
        self.t.q
    }

    #[inline]
    pub fn add(&self, a: u8, b: u8) -> u8 {
        self.t.add[a as usize * self.t.q + b as usize]
    }

    #[inline]
    pub fn sub(&self, a: u8, b: u8) -> u8 {
        self.add(a, self.t.neg[b as usize])
    }

    #[inline]
    pub fn neg(&self, a: u8) -> u8 {
        self.t.neg[a as usize]
    }

    #[inline]
    pub fn mul(&self, a: u8, b: u8) -> u8 {
        self.t.mul[a as usize * self.t.q + b as usize]
    }

    /// Multiplicative inverse; `None` for zero.
    #[inline]
    pub fn inv(&self, a: u8) -> Option<u8> {
        (a != 0).then(|| self.t.inv[a as usize])
    }

    pub fn contains(&self, v: u32) -> bool {
        (v as usize) < self.t.q
    }

    /// Inner product of two equal-length vectors.
    pub fn dot(&self, a: &[u8], b: &[u8]) -> u8 {
        a.iter().zip(b).fold(0, |acc, (&x, &y)| self.add(acc, self.mul(x, y)))
    }

    /// `x * A` for a row vector `x`.
    pub fn vec_mul(&self, x: &[u8], a: &Matrix) -> Vec<u8> {
        debug_assert_eq!(x.len(), a.rows);
        let mut out = vec![0u8; a.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0 {
                continue;
            }
            let row = a.row(i);
            for (o, &r) in out.iter_mut().zip(row) {
                *o = self.add(*o, self.mul(xi, r));
            }
        }
        out
    }

    /// Elements in increasing integer order.
    pub fn elements(&self) -> impl Iterator<Item = u8> {
        (0..self.t.q).map(|v| v as u8)
    }
}

/// Dense row-major matrix over a [`FieldSpec`].
#[derive(Clone, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<u8>,
    field: FieldSpec,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} over {:?}", self.rows, self.cols, self.field)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        Ok(())
    }
}

impl Matrix {
    pub fn zeros(field: &FieldSpec, rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0; rows * cols], field: field.clone() }
    }

    pub fn identity(field: &FieldSpec, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    pub fn from_vec(field: &FieldSpec, rows: usize, cols: usize, data: Vec<u8>) -> Result<Self, GaloisError> {
        if data.len() != rows * cols {
            return Err(GaloisError::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(&v) = data.iter().find(|&&v| !field.contains(v as u32)) {
            return Err(GaloisError::EntryOutOfRange { value: v as u32, q: field.order() });
        }
        Ok(Matrix { rows, cols, data, field: field.clone() })
    }

    /// Builds a matrix from nested rows. An empty row list gives a `0 x cols`
    /// matrix where `cols` must be supplied by the caller through
    /// [`Matrix::zeros`] instead.
    pub fn from_rows<T: AsRef<[u32]>>(field: &FieldSpec, rows: &[T]) -> Result<Self, GaloisError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(GaloisError::DimensionMismatch("ragged rows".into()));
            }
            for &v in r {
                if !field.contains(v) {
                    return Err(GaloisError::EntryOutOfRange { value: v, q: field.order() });
                }
                data.push(v as u8);
            }
        }
        Ok(Matrix { rows: rows.len(), cols, data, field: field.clone() })
    }

    pub fn to_rows(&self) -> Vec<Vec<u32>> {
        (0..self.rows).map(|r| self.row(r).iter().map(|&v| v as u32).collect()).collect()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u8 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u8) {
        debug_assert!(self.field.contains(v as u32));
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[u8] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<u8> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(&self.field, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.get(r, c);
            }
        }
        t
    }

    fn same_field(&self, other: &Matrix) -> Result<(), GaloisError> {
        if self.field != other.field {
            return Err(GaloisError::FieldMismatch);
        }
        Ok(())
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix, GaloisError> {
        self.same_field(other)?;
        if self.cols != other.rows {
            return Err(GaloisError::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let f = &self.field;
        let mut out = Matrix::zeros(f, self.rows, other.cols);
        for r in 0..self.rows {
            let row = f.vec_mul(self.row(r), other);
            out.data[r * other.cols..(r + 1) * other.cols].copy_from_slice(&row);
        }
        Ok(out)
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix, GaloisError> {
        self.same_field(other)?;
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(GaloisError::DimensionMismatch("cannot add matrices of different shape".into()));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| self.field.add(a, b)).collect();
        Ok(Matrix { data, ..self.clone() })
    }

    pub fn scale(&self, s: u8) -> Matrix {
        let data = self.data.iter().map(|&a| self.field.mul(a, s)).collect();
        Matrix { data, ..self.clone() }
    }

    pub fn neg(&self) -> Matrix {
        let data = self.data.iter().map(|&a| self.field.neg(a)).collect();
        Matrix { data, ..self.clone() }
    }

    /// Stacks `parts` on top of each other. All parts need the same column
    /// count; `cols` is used when `parts` is empty.
    pub fn vstack(field: &FieldSpec, cols: usize, parts: &[&Matrix]) -> Result<Matrix, GaloisError> {
        let mut data = Vec::new();
        let mut rows = 0;
        for p in parts {
            if p.field != *field {
                return Err(GaloisError::FieldMismatch);
            }
            if p.cols != cols {
                return Err(GaloisError::DimensionMismatch("vstack with differing column counts".into()));
            }
            data.extend_from_slice(&p.data);
            rows += p.rows;
        }
        Ok(Matrix { rows, cols, data, field: field.clone() })
    }

    /// Places `parts` side by side.
    pub fn hstack(field: &FieldSpec, rows: usize, parts: &[&Matrix]) -> Result<Matrix, GaloisError> {
        let ts: Vec<Matrix> = parts.iter().map(|p| p.transpose()).collect();
        let refs: Vec<&Matrix> = ts.iter().collect();
        Ok(Matrix::vstack(field, rows, &refs)?.transpose())
    }

    /// Copy of the `h x w` submatrix at `(r0, c0)`.
    pub fn submatrix(&self, r0: usize, c0: usize, h: usize, w: usize) -> Matrix {
        assert!(r0 + h <= self.rows && c0 + w <= self.cols, "submatrix out of bounds");
        let mut out = Matrix::zeros(&self.field, h, w);
        for r in 0..h {
            out.data[r * w..(r + 1) * w].copy_from_slice(&self.row(r0 + r)[c0..c0 + w]);
        }
        out
    }

    /// Block `(i, j)` of size `n x n`.
    pub fn block(&self, i: usize, j: usize, n: usize) -> Matrix {
        self.submatrix(i * n, j * n, n, n)
    }

    pub fn set_submatrix(&mut self, r0: usize, c0: usize, m: &Matrix) {
        assert!(r0 + m.rows <= self.rows && c0 + m.cols <= self.cols, "submatrix out of bounds");
        for r in 0..m.rows {
            let start = (r0 + r) * self.cols + c0;
            self.data[start..start + m.cols].copy_from_slice(m.row(r));
        }
    }

    /// Reduced row echelon form in place; returns the pivot columns.
    pub fn rref_in_place(&mut self) -> Vec<usize> {
        let f = self.field.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| self.get(i, c) != 0) else {
                continue;
            };
            if p != r {
                for k in 0..self.cols {
                    self.data.swap(p * self.cols + k, r * self.cols + k);
                }
            }
            let cols = self.cols;
            let inv = f.inv(self.get(r, c)).unwrap();
            // entries left of c in the pivot row are zero; keep only the
            // nonzero ones so sparse matrices reduce quickly
            let mut support = Vec::new();
            for k in c..cols {
                let v = self.data[r * cols + k];
                if v != 0 {
                    let v = f.mul(v, inv);
                    self.data[r * cols + k] = v;
                    support.push((k, v));
                }
            }
            for i in 0..self.rows {
                let factor = self.data[i * cols + c];
                if i == r || factor == 0 {
                    continue;
                }
                let row = &mut self.data[i * cols..(i + 1) * cols];
                for &(k, v) in &support {
                    row[k] = f.sub(row[k], f.mul(factor, v));
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rref(&self) -> (Matrix, Vec<usize>) {
        let mut m = self.clone();
        let p = m.rref_in_place();
        (m, p)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Finds `X` with `X * self = b`. Free variables of the reduced echelon
    /// parametrization are set to zero, so the answer is deterministic.
    pub fn solve_left(&self, b: &Matrix) -> Result<Option<Matrix>, GaloisError> {
        self.same_field(b)?;
        if self.cols != b.cols {
            return Err(GaloisError::DimensionMismatch(format!(
                "solve_left: A has {} columns, B has {}",
                self.cols, b.cols
            )));
        }
        // X * A = B  <=>  A^T * X^T = B^T ; reduce [A^T | B^T].
        let f = &self.field;
        let unknowns = self.rows;
        let mut aug = Matrix::hstack(f, self.cols, &[&self.transpose(), &b.transpose()])?;
        let pivots = aug.rref_in_place();
        if pivots.iter().any(|&c| c >= unknowns) {
            return Ok(None);
        }
        let mut xt = Matrix::zeros(f, unknowns, b.rows);
        for (r, &c) in pivots.iter().enumerate() {
            for j in 0..b.rows {
                xt.set(c, j, aug.get(r, unknowns + j));
            }
        }
        Ok(Some(xt.transpose()))
    }

    /// Finds `X` with `self * X = b`, with the same zero free variables as
    /// [`Matrix::solve_left`]: only the first independent columns of `self`
    /// are used.
    pub fn solve_right(&self, b: &Matrix) -> Result<Option<Matrix>, GaloisError> {
        self.same_field(b)?;
        if self.rows != b.rows {
            return Err(GaloisError::DimensionMismatch(format!(
                "solve_right: A has {} rows, B has {}",
                self.rows, b.rows
            )));
        }
        let f = &self.field;
        let columns = self.transpose();
        // (pivot, vector with 1 at pivot, combination of columns giving it)
        let mut basis: Vec<(usize, Vec<u8>, Vec<u8>)> = Vec::new();
        let reduce = |basis: &[(usize, Vec<u8>, Vec<u8>)], v: &mut [u8], combo: &mut [u8]| {
            for (p, vec, c) in basis {
                let factor = v[*p];
                if factor == 0 {
                    continue;
                }
                for (a, &x) in v.iter_mut().zip(vec) {
                    if x != 0 {
                        *a = f.sub(*a, f.mul(factor, x));
                    }
                }
                for (a, &x) in combo.iter_mut().zip(c) {
                    if x != 0 {
                        *a = f.sub(*a, f.mul(factor, x));
                    }
                }
            }
        };
        for j in 0..self.cols {
            let mut v = columns.row(j).to_vec();
            let mut combo = vec![0u8; self.cols];
            combo[j] = 1;
            reduce(&basis, &mut v, &mut combo);
            if let Some(p) = v.iter().position(|&x| x != 0) {
                let inv = f.inv(v[p]).expect("nonzero");
                v.iter_mut().for_each(|x| *x = f.mul(*x, inv));
                combo.iter_mut().for_each(|x| *x = f.mul(*x, inv));
                basis.push((p, v, combo));
            }
        }
        let targets = b.transpose();
        let mut x = Matrix::zeros(f, self.cols, b.cols);
        for t in 0..b.cols {
            let mut v = targets.row(t).to_vec();
            let mut combo = vec![0u8; self.cols];
            reduce(&basis, &mut v, &mut combo);
            if v.iter().any(|&e| e != 0) {
                return Ok(None);
            }
            // v = b - (combo) applied to A, now zero
            for (r, &c) in combo.iter().enumerate() {
                x.set(r, t, f.neg(c));
            }
        }
        Ok(Some(x))
    }

    pub fn invert(&self) -> Result<Option<Matrix>, GaloisError> {
        if self.rows != self.cols {
            return Err(GaloisError::NotSquare { rows: self.rows, cols: self.cols });
        }
        let n = self.rows;
        let mut aug = Matrix::hstack(&self.field, n, &[self, &Matrix::identity(&self.field, n)])?;
        let pivots = aug.rref_in_place();
        if pivots.len() < n || pivots[n - 1] >= n {
            return Ok(None);
        }
        Ok(Some(aug.submatrix(0, n, n, n)))
    }

    /// True when every column of `b` lies in the column space of `self`.
    pub fn column_space_contains(&self, b: &Matrix) -> Result<bool, GaloisError> {
        Ok(self.solve_right(b)?.is_some())
    }
}

/// Assembles an `r x c` grid of `n x n` blocks into an `(r n) x (c n)` matrix.
pub fn block_assemble(blocks: &[Vec<Matrix>]) -> Result<Matrix, GaloisError> {
    let first = blocks.first().and_then(|row| row.first()).ok_or(GaloisError::RaggedBlocks)?;
    let n = first.rows;
    let field = first.field.clone();
    let c = blocks[0].len();
    let mut out = Matrix::zeros(&field, blocks.len() * n, c * n);
    for (i, row) in blocks.iter().enumerate() {
        if row.len() != c {
            return Err(GaloisError::RaggedBlocks);
        }
        for (j, b) in row.iter().enumerate() {
            if b.rows != n || b.cols != n {
                return Err(GaloisError::RaggedBlocks);
            }
            if b.field != field {
                return Err(GaloisError::FieldMismatch);
            }
            out.set_submatrix(i * n, j * n, b);
        }
    }
    Ok(out)
}

/// The `(n k) x n` matrix selecting block `i` of a row of `k` blocks.
pub fn selector(field: &FieldSpec, k: usize, n: usize, i: usize) -> Matrix {
    let mut m = Matrix::zeros(field, n * k, n);
    for t in 0..n {
        m.set(i * n + t, t, 1);
    }
    m
}

/// Columns selecting several blocks side by side (in the given order).
pub fn multi_selector(field: &FieldSpec, k: usize, n: usize, which: &[usize]) -> Matrix {
    let mut m = Matrix::zeros(field, n * k, n * which.len());
    for (pos, &i) in which.iter().enumerate() {
        for t in 0..n {
            m.set(i * n + t, pos * n + t, 1);
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gf(p: u32) -> FieldSpec {
        FieldSpec::prime(p).unwrap()
    }

    fn random_matrix(f: &FieldSpec, rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
        let data = (0..rows * cols).map(|_| rng.gen_range(0..f.order()) as u8).collect();
        Matrix::from_vec(f, rows, cols, data).unwrap()
    }

    #[test]
    fn small_field_identities() {
        let f2 = gf(2);
        assert_eq!(f2.add(1, 1), 0);
        let f3 = gf(3);
        assert_eq!(f3.mul(2, 2), 1);
        let f4 = make_field(2, 2, Some(&[1, 1, 1])).unwrap();
        // x * x = x + 1
        assert_eq!(f4.mul(2, 2), 3);
        assert_eq!(f4.mul(3, 3), 2);
        assert_eq!(f4.add(2, 3), 1);
    }

    #[test]
    fn gf4_multiplication_table_by_hand() {
        let f4 = make_field(2, 2, None).unwrap();
        assert_eq!(f4.reduction_poly(), &[1, 1, 1]);
        let expected = [[0, 0, 0, 0], [0, 1, 2, 3], [0, 2, 3, 1], [0, 3, 1, 2]];
        for a in 0..4u8 {
            for b in 0..4u8 {
                assert_eq!(f4.mul(a, b), expected[a as usize][b as usize]);
            }
        }
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(make_field(4, 1, None), Err(GaloisError::NonPrimeCharacteristic(4))));
        assert!(matches!(make_field(2, 2, Some(&[1, 0, 1])), Err(GaloisError::ReduciblePolynomial(_))));
        assert!(matches!(make_field(2, 9, None), Err(GaloisError::OrderCapExceeded { .. })));
        assert!(matches!(make_field(3, 2, Some(&[1, 0, 2])), Err(GaloisError::InvalidPolynomial(_))));
        assert!(make_field(2, 8, None).is_ok());
    }

    #[test]
    fn default_polynomials() {
        assert_eq!(default_irreducible(2, 3).unwrap(), vec![1, 1, 0, 1]);
        assert_eq!(default_irreducible(3, 2).unwrap(), vec![1, 0, 1]);
    }

    #[test]
    fn field_axioms_exhaustive_small_fields() {
        let specs = [(2, 1), (3, 1), (2, 2), (5, 1), (7, 1), (2, 3), (3, 2), (2, 4), (13, 1)];
        for (p, d) in specs {
            let f = make_field(p, d, None).unwrap();
            let q = f.order() as u8;
            for a in 0..q {
                assert_eq!(f.add(a, 0), a);
                assert_eq!(f.mul(a, 1), a);
                assert_eq!(f.add(a, f.neg(a)), 0);
                if a != 0 {
                    assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
                }
                for b in 0..q {
                    assert!(f.add(a, b) < q && f.mul(a, b) < q);
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    for c in 0..q {
                        assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                        assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                    }
                }
            }
        }
    }

    #[test]
    fn parse_field_strings() {
        let f: FieldSpec = "3".parse().unwrap();
        assert_eq!(f.order(), 3);
        let f: FieldSpec = "2,2".parse().unwrap();
        assert_eq!(f.order(), 4);
        let f: FieldSpec = "2,2,1:1:1".parse().unwrap();
        assert_eq!(f.mul(2, 2), 3);
        assert!("x".parse::<FieldSpec>().is_err());
    }

    #[test]
    fn serde_round_trip() {
        let f = make_field(2, 2, None).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"p":2,"degree":2,"poly":[1,1,1]}"#);
        let g: FieldSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(f, g);
        assert_eq!(serde_json::to_string(&gf(3)).unwrap(), r#"{"p":3,"degree":1}"#);
        assert!(serde_json::from_str::<FieldSpec>(r#"{"p":6,"degree":1}"#).is_err());
    }

    #[test]
    fn rank_examples() {
        assert_eq!(Matrix::identity(&gf(3), 3).rank(), 3);
        assert_eq!(Matrix::zeros(&gf(2), 3, 3).rank(), 0);
        let m = Matrix::from_rows(&gf(2), &[[1, 1, 0], [0, 1, 1], [1, 0, 1]]).unwrap();
        assert_eq!(m.rank(), 2);
        let m3 = Matrix::from_rows(&gf(3), &[[1, 1, 0], [0, 1, 1], [1, 0, 1]]).unwrap();
        assert_eq!(m3.rank(), 3);
    }

    #[test]
    fn solve_left_examples() {
        let f = gf(3);
        let i2 = Matrix::identity(&f, 2);
        let b = Matrix::from_rows(&f, &[[1, 2], [0, 1]]).unwrap();
        assert_eq!(i2.solve_left(&b).unwrap().unwrap(), b);
        let z = Matrix::zeros(&f, 2, 2);
        assert!(z.solve_left(&b).unwrap().is_none());
        let wrong = Matrix::zeros(&f, 2, 3);
        assert!(matches!(i2.solve_left(&wrong), Err(GaloisError::DimensionMismatch(_))));
        let other = Matrix::identity(&gf(2), 2);
        assert!(matches!(i2.solve_left(&other), Err(GaloisError::FieldMismatch)));
    }

    #[test]
    fn solve_left_random_consistent_systems() {
        let f = gf(3);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let a = random_matrix(&f, 4, 6, &mut rng);
            let r = random_matrix(&f, 3, 4, &mut rng);
            let b = r.mul(&a).unwrap();
            let x = a.solve_left(&b).unwrap().expect("constructed system is solvable");
            assert_eq!(x.mul(&a).unwrap(), b);
        }
    }

    #[test]
    fn invert_examples() {
        let f = gf(3);
        let i4 = Matrix::identity(&f, 4);
        assert_eq!(i4.invert().unwrap().unwrap(), i4);
        let sing = Matrix::from_rows(&f, &[[1, 2, 0], [1, 2, 0], [0, 0, 1]]).unwrap();
        assert!(sing.invert().unwrap().is_none());
        assert!(matches!(Matrix::zeros(&f, 2, 3).invert(), Err(GaloisError::NotSquare { .. })));

        // random row operations on the identity
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut m = Matrix::identity(&f, 10);
        for _ in 0..200 {
            let (i, j) = (rng.gen_range(0..10), rng.gen_range(0..10));
            if i == j {
                continue;
            }
            let s = rng.gen_range(1..3) as u8;
            for c in 0..10 {
                let v = f.add(m.get(i, c), f.mul(s, m.get(j, c)));
                m.set(i, c, v);
            }
        }
        let inv = m.invert().unwrap().unwrap();
        assert_eq!(m.mul(&inv).unwrap(), Matrix::identity(&f, 10));
        assert_eq!(inv.mul(&m).unwrap(), Matrix::identity(&f, 10));
    }

    #[test]
    fn block_assemble_examples() {
        let f = gf(3);
        let i2 = Matrix::identity(&f, 2);
        assert_eq!(block_assemble(&[vec![i2.clone()]]).unwrap(), i2);
        let z = Matrix::zeros(&f, 2, 2);
        let zz = block_assemble(&[vec![z.clone(), z.clone()], vec![z.clone(), z.clone()]]).unwrap();
        assert_eq!(zz, Matrix::zeros(&f, 4, 4));
        let d = block_assemble(&[vec![i2.clone(), z.clone()], vec![z.clone(), i2.scale(2)]]).unwrap();
        let expected = Matrix::from_rows(&f, &[[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 2, 0], [0, 0, 0, 2]]).unwrap();
        assert_eq!(d, expected);
        assert!(matches!(block_assemble(&[vec![i2.clone()], vec![]]), Err(GaloisError::RaggedBlocks)));
        assert!(matches!(
            block_assemble(&[vec![i2.clone(), Matrix::zeros(&f, 3, 3)]]),
            Err(GaloisError::RaggedBlocks)
        ));
    }

    #[test]
    fn selectors() {
        let f = gf(2);
        let s = selector(&f, 3, 2, 1);
        let x = [1, 0, 1, 1, 0, 1];
        assert_eq!(f.vec_mul(&x, &s), vec![1, 1]);
        let ms = multi_selector(&f, 3, 2, &[2, 0]);
        assert_eq!(f.vec_mul(&x, &ms), vec![0, 1, 1, 0]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn field_strategy() -> impl Strategy<Value = FieldSpec> {
            prop_oneof![Just(gf(2)), Just(gf(3)), Just(make_field(2, 2, None).unwrap()), Just(gf(5))]
        }

        fn matrix_strategy() -> impl Strategy<Value = Matrix> {
            (field_strategy(), 1usize..6, 1usize..6).prop_flat_map(|(f, r, c)| {
                let q = f.order() as u8;
                proptest::collection::vec(0..q, r * c)
                    .prop_map(move |d| Matrix::from_vec(&f, r, c, d).unwrap())
            })
        }

        proptest! {
            #[test]
            fn rank_equals_transpose_rank(m in matrix_strategy()) {
                prop_assert_eq!(m.rank(), m.transpose().rank());
                prop_assert!(m.rank() <= m.rows().min(m.cols()));
            }

            #[test]
            fn solve_left_solutions_are_exact(a in matrix_strategy(), seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let f = a.field().clone();
                let b = random_matrix(&f, 2, a.cols(), &mut rng);
                if let Some(x) = a.solve_left(&b).unwrap() {
                    prop_assert_eq!(x.mul(&a).unwrap(), b);
                }
            }

            #[test]
            fn inverse_is_two_sided(m in matrix_strategy()) {
                if m.rows() == m.cols() {
                    match m.invert().unwrap() {
                        Some(inv) => {
                            let id = Matrix::identity(m.field(), m.rows());
                            prop_assert_eq!(m.mul(&inv).unwrap(), id.clone());
                            prop_assert_eq!(inv.mul(&m).unwrap(), id);
                        }
                        None => prop_assert!(m.rank() < m.rows()),
                    }
                }
            }

            #[test]
            fn block_extraction_inverts_assembly(seed in any::<u64>(), r in 1usize..4, c in 1usize..4, n in 1usize..4) {
                let f = gf(3);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let grid: Vec<Vec<Matrix>> = (0..r)
                    .map(|_| (0..c).map(|_| random_matrix(&f, n, n, &mut rng)).collect())
                    .collect();
                let big = block_assemble(&grid).unwrap();
                for i in 0..r {
                    for j in 0..c {
                        prop_assert_eq!(&big.block(i, j, n), &grid[i][j]);
                    }
                }
            }
        }
    }
}
