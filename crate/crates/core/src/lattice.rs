//! Exact integer linear algebra on exponent vectors.
//!
//! Everything here works over `BigInt`; exponent vectors themselves are small
//! `i64` entries, but eliminations are carried out without overflow risk.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent vector of a Laurent monomial in 1, 2 or 3 local coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExpVec(pub Vec<i64>);

impl ExpVec {
    pub fn new(entries: impl Into<Vec<i64>>) -> Self {
        ExpVec(entries.into())
    }

    pub fn zero(len: usize) -> Self {
        ExpVec(vec![0; len])
    }

    pub fn unit(len: usize, axis: usize) -> Self {
        let mut e = vec![0; len];
        e[axis] = 1;
        ExpVec(e)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Total degree.
    pub fn degree(&self) -> i64 {
        self.0.iter().sum()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.0.iter().all(|&e| e >= 0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn add(&self, other: &ExpVec) -> ExpVec {
        ExpVec(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &ExpVec) -> ExpVec {
        ExpVec(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, k: i64) -> ExpVec {
        ExpVec(self.0.iter().map(|a| a * k).collect())
    }

    /// Componentwise `self <= other`, i.e. the monomial `self` divides `other`.
    pub fn divides(&self, other: &ExpVec) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn componentwise_min(&self, other: &ExpVec) -> ExpVec {
        ExpVec(self.0.iter().zip(&other.0).map(|(a, b)| *a.min(b)).collect())
    }

    /// Row vector times substitution matrix: the exponent vector of the same
    /// monomial written in the chart's new coordinates.
    pub fn apply_sub(&self, sub: &SubMatrix) -> ExpVec {
        assert_eq!(self.len(), 3, "substitutions act on 3-variable exponents");
        let mut out = [0i64; 3];
        for (i, e) in self.0.iter().enumerate() {
            for (j, o) in out.iter_mut().enumerate() {
                *o += e * sub.0[i][j];
            }
        }
        ExpVec(out.to_vec())
    }

    /// Simultaneous permutation of coordinates: entry `i` moves to `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> ExpVec {
        let mut out = vec![0; self.len()];
        for (i, &p) in perm.iter().enumerate() {
            out[p] = self.0[i];
        }
        ExpVec(out)
    }
}

impl fmt::Display for ExpVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

impl From<[i64; 3]> for ExpVec {
    fn from(v: [i64; 3]) -> Self {
        ExpVec(v.to_vec())
    }
}

impl From<[i64; 2]> for ExpVec {
    fn from(v: [i64; 2]) -> Self {
        ExpVec(v.to_vec())
    }
}

/// Monomial substitution: entry `[i][j]` is the exponent of new coordinate
/// `j` in the expression of old coordinate `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubMatrix(pub [[i64; 3]; 3]);

impl SubMatrix {
    pub const IDENTITY: SubMatrix = SubMatrix([[1, 0, 0], [0, 1, 0], [0, 0, 1]]);

    /// Chart `x_i = x_i', x_j = x_i' x_j'` of the blow-up of `x_i = x_j = 0`.
    pub fn two_curve_chart(keep: usize, other: usize) -> SubMatrix {
        let mut m = Self::IDENTITY.0;
        m[other][keep] = 1;
        SubMatrix(m)
    }

    /// Chart `x_i = x_i' x_k', ..., x_k = x_k'` of the blow-up of the origin,
    /// where `k` is the chart's distinguished coordinate.
    pub fn point_chart(chart: usize) -> SubMatrix {
        let mut m = Self::IDENTITY.0;
        for (i, row) in m.iter_mut().enumerate() {
            if i != chart {
                row[chart] = 1;
            }
        }
        SubMatrix(m)
    }

    /// Column permutation: new coordinate `perm[i]` is old coordinate `i`.
    pub fn permutation(perm: [usize; 3]) -> SubMatrix {
        let mut m = [[0; 3]; 3];
        for (i, &p) in perm.iter().enumerate() {
            m[i][p] = 1;
        }
        SubMatrix(m)
    }

    pub fn mul(&self, rhs: &SubMatrix) -> SubMatrix {
        let mut m = [[0i64; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = (0..3).map(|k| self.0[i][k] * rhs.0[k][j]).sum();
            }
        }
        SubMatrix(m)
    }

    pub fn det(&self) -> i64 {
        det3(&self.0)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.0.iter().flatten().all(|&e| e >= 0)
    }

    pub fn check_chart(&self) -> Result<()> {
        let d = self.det();
        if d.abs() != 1 || !self.is_nonnegative() {
            return Err(Error::NonUnimodular(d));
        }
        Ok(())
    }
}

impl fmt::Display for SubMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const OLD: [&str; 3] = ["x", "y", "z"];
        for (i, row) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}=", OLD[i])?;
            let mut first = true;
            for (j, &e) in row.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                if !first {
                    write!(f, "*")?;
                }
                first = false;
                if e == 1 {
                    write!(f, "{}1", OLD[j])?;
                } else {
                    write!(f, "{}1^{}", OLD[j], e)?;
                }
            }
            if first {
                write!(f, "1")?;
            }
        }
        Ok(())
    }
}

/// Dense integer matrix, row-major.
pub type IntMatrix = Vec<Vec<BigInt>>;

pub fn to_int_matrix(rows: &[ExpVec]) -> IntMatrix {
    rows.iter()
        .map(|r| r.0.iter().map(|&e| BigInt::from(e)).collect())
        .collect()
}

pub fn identity(n: usize) -> IntMatrix {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect()
}

pub fn mat_mul(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    let inner = b.len();
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| (0..inner).map(|k| &row[k] * &b[k][j]).sum())
                .collect()
        })
        .collect()
}

/// Determinant by fraction-free elimination. Square input required.
pub fn det(m: &IntMatrix) -> BigInt {
    let n = m.len();
    let mut a = m.clone();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    if n == 0 {
        BigInt::one()
    } else {
        sign * &a[n - 1][n - 1]
    }
}

/// Result of a Smith normal form computation: `u * m * v == d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SnfResult {
    pub d: IntMatrix,
    pub u: IntMatrix,
    pub v: IntMatrix,
}

impl SnfResult {
    /// The diagonal entries of `d` (length `min(rows, cols)`).
    pub fn diagonal(&self) -> Vec<BigInt> {
        let cols = self.d.first().map_or(0, Vec::len);
        (0..self.d.len().min(cols)).map(|i| self.d[i][i].clone()).collect()
    }

    pub fn rank(&self) -> usize {
        self.diagonal().iter().filter(|d| !d.is_zero()).count()
    }
}

/// Smith normal form of an integer matrix with explicit unimodular transforms.
pub fn smith_normal_form(m: &IntMatrix) -> SnfResult {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut d = m.clone();
    let mut u = identity(rows);
    let mut v = identity(cols);

    for t in 0..rows.min(cols) {
        loop {
            // Smallest nonzero entry of the trailing block becomes the pivot.
            let mut best: Option<(usize, usize)> = None;
            for i in t..rows {
                for j in t..cols {
                    if d[i][j].is_zero() {
                        continue;
                    }
                    if best.is_none_or(|(bi, bj)| d[i][j].abs() < d[bi][bj].abs()) {
                        best = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = best else {
                return finish(d, u, v);
            };
            if pi != t {
                d.swap(pi, t);
                u.swap(pi, t);
            }
            if pj != t {
                for row in d.iter_mut() {
                    row.swap(pj, t);
                }
                for row in v.iter_mut() {
                    row.swap(pj, t);
                }
            }

            let mut clean = true;
            for i in t + 1..rows {
                let q = d[i][t].div_floor(&d[t][t]);
                if !q.is_zero() {
                    row_axpy(&mut d, i, t, &q);
                    row_axpy(&mut u, i, t, &q);
                }
                if !d[i][t].is_zero() {
                    clean = false;
                }
            }
            for j in t + 1..cols {
                let q = d[t][j].div_floor(&d[t][t]);
                if !q.is_zero() {
                    col_axpy(&mut d, j, t, &q);
                    col_axpy(&mut v, j, t, &q);
                }
                if !d[t][j].is_zero() {
                    clean = false;
                }
            }
            if !clean {
                continue;
            }

            let offender = (t + 1..rows)
                .find(|&i| (t + 1..cols).any(|j| !(&d[i][j] % &d[t][t]).is_zero()));
            match offender {
                Some(i) => {
                    let minus_one = -BigInt::one();
                    row_axpy(&mut d, t, i, &minus_one);
                    row_axpy(&mut u, t, i, &minus_one);
                }
                None => break,
            }
        }
        if d[t][t].is_negative() {
            for x in d[t].iter_mut() {
                *x = -x.clone();
            }
            for x in u[t].iter_mut() {
                *x = -x.clone();
            }
        }
    }
    finish(d, u, v)
}

fn finish(d: IntMatrix, u: IntMatrix, v: IntMatrix) -> SnfResult {
    SnfResult { d, u, v }
}

// row[target] -= q * row[source]
fn row_axpy(m: &mut IntMatrix, target: usize, source: usize, q: &BigInt) {
    let src = m[source].clone();
    for (x, s) in m[target].iter_mut().zip(src.iter()) {
        *x -= q * s;
    }
}

// col[target] -= q * col[source]
fn col_axpy(m: &mut IntMatrix, target: usize, source: usize, q: &BigInt) {
    for row in m.iter_mut() {
        let s = row[source].clone();
        row[target] -= q * s;
    }
}

/// Order of a lattice quotient.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeIndex {
    Finite(BigInt),
    Infinite,
}

impl LatticeIndex {
    pub fn as_u64(&self) -> Option<u64> {
        match self {
            LatticeIndex::Finite(n) => n.to_u64(),
            LatticeIndex::Infinite => None,
        }
    }
}

/// A basis of the lattice spanned by `gens`, together with the
/// coordinate map used to express lattice vectors in that basis.
struct LatticeBasis {
    rank: usize,
    diag: Vec<BigInt>,
    v: IntMatrix,
}

impl LatticeBasis {
    fn new(gens: &[ExpVec]) -> Self {
        let snf = smith_normal_form(&to_int_matrix(gens));
        let diag = snf.diagonal();
        let rank = diag.iter().filter(|d| !d.is_zero()).count();
        LatticeBasis { rank, diag, v: snf.v }
    }

    /// Coordinates of `x` in the basis `d_i * (row i of V^-1)`, if `x` lies in the lattice.
    fn coordinates(&self, x: &ExpVec) -> Option<Vec<BigInt>> {
        let row: Vec<BigInt> = x.0.iter().map(|&e| BigInt::from(e)).collect();
        let y = mat_mul(&vec![row], &self.v).remove(0);
        for yj in y.iter().skip(self.rank) {
            if !yj.is_zero() {
                return None;
            }
        }
        let mut coords = Vec::with_capacity(self.rank);
        for i in 0..self.rank {
            let (q, r) = y[i].div_rem(&self.diag[i]);
            if !r.is_zero() {
                return None;
            }
            coords.push(q);
        }
        Some(coords)
    }
}

/// Group order of `<h_gens> / <a_gens>`; `Infinite` when the ranks differ.
pub fn lattice_index(h_gens: &[ExpVec], a_gens: &[ExpVec]) -> Result<LatticeIndex> {
    Ok(quotient(h_gens, a_gens)?.0)
}

/// Index together with the invariant factors (> 1) of the finite part of the quotient.
pub fn quotient(h_gens: &[ExpVec], a_gens: &[ExpVec]) -> Result<(LatticeIndex, Vec<BigInt>)> {
    let basis = LatticeBasis::new(h_gens);
    let mut coords = Vec::with_capacity(a_gens.len());
    for a in a_gens {
        match basis.coordinates(a) {
            Some(c) => coords.push(c),
            None => return Err(Error::NotASublattice(a.to_string())),
        }
    }
    if basis.rank == 0 {
        return Ok((LatticeIndex::Finite(BigInt::one()), vec![]));
    }
    if coords.is_empty() {
        return Ok((LatticeIndex::Infinite, vec![]));
    }
    let snf = smith_normal_form(&coords);
    let diag = snf.diagonal();
    let rank = diag.iter().filter(|d| !d.is_zero()).count();
    if rank < basis.rank {
        return Ok((LatticeIndex::Infinite, vec![]));
    }
    let order: BigInt = diag.iter().filter(|d| !d.is_zero()).product();
    let factors = diag.into_iter().filter(|d| d > &BigInt::one()).collect();
    Ok((LatticeIndex::Finite(order), factors))
}

/// Exact rank by fraction-free Gaussian elimination.
pub fn rank_of(vectors: &[ExpVec]) -> usize {
    let mut a = to_int_matrix(vectors);
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut rank = 0;
    let mut prev = BigInt::one();
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&i| !a[i][col].is_zero()) else {
            continue;
        };
        a.swap(p, rank);
        for i in rank + 1..rows {
            for j in col + 1..cols {
                a[i][j] = (&a[i][j] * &a[rank][col] - &a[i][col] * &a[rank][j]) / &prev;
            }
            a[i][col] = BigInt::zero();
        }
        prev = a[rank][col].clone();
        rank += 1;
    }
    rank
}

/// Cofactor expansion of a 3x3 determinant.
pub fn det3(m: &[[i64; 3]; 3]) -> i64 {
    let m: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&e| e as i128).collect()).collect();
    let d = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    i64::try_from(d).expect("3x3 exponent determinant overflows i64")
}

/// Determinant of the matrix with the three exponent vectors as rows.
pub fn det3_rows(a: &ExpVec, b: &ExpVec, c: &ExpVec) -> i64 {
    det3(&[
        [a.0[0], a.0[1], a.0[2]],
        [b.0[0], b.0[1], b.0[2]],
        [c.0[0], c.0[1], c.0[2]],
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]]) -> IntMatrix {
        rows.iter()
            .map(|r| r.iter().map(|&e| BigInt::from(e)).collect())
            .collect()
    }

    fn ev(v: &[i64]) -> ExpVec {
        ExpVec(v.to_vec())
    }

    fn check_snf(input: &IntMatrix) -> SnfResult {
        let r = smith_normal_form(input);
        assert_eq!(mat_mul(&mat_mul(&r.u, input), &r.v), r.d);
        assert_eq!(det(&r.u).abs(), BigInt::one());
        assert_eq!(det(&r.v).abs(), BigInt::one());
        r
    }

    #[test]
    fn snf_examples() {
        let r = check_snf(&m(&[&[2, 0], &[0, 3]]));
        assert_eq!(r.diagonal(), vec![BigInt::from(1), BigInt::from(6)]);
        let r = check_snf(&m(&[&[2, 4], &[6, 8]]));
        assert_eq!(r.diagonal(), vec![BigInt::from(2), BigInt::from(4)]);
        let r = check_snf(&identity(3));
        assert_eq!(r.d, identity(3));
    }

    #[test]
    fn snf_rectangular_and_zero() {
        let r = check_snf(&m(&[&[0, 0, 0], &[0, 0, 0]]));
        assert_eq!(r.rank(), 0);
        let r = check_snf(&m(&[&[2, 4, 6], &[1, 1, 1]]));
        assert_eq!(r.diagonal(), vec![BigInt::from(1), BigInt::from(2)]);
        let r = check_snf(&m(&[&[3], &[6], &[-9]]));
        assert_eq!(r.diagonal(), vec![BigInt::from(3)]);
    }

    #[test]
    fn lattice_index_examples() {
        let idx = lattice_index(&[ev(&[1, 0]), ev(&[0, 1])], &[ev(&[2, 0]), ev(&[0, 3])]).unwrap();
        assert_eq!(idx, LatticeIndex::Finite(6.into()));
        let h = [ev(&[3, 1, 4]), ev(&[1, 5, 9])];
        assert_eq!(lattice_index(&h, &h).unwrap(), LatticeIndex::Finite(1.into()));
        let idx = lattice_index(&[ev(&[2, 0]), ev(&[1, 1])], &[ev(&[2, 0]), ev(&[0, 2])]).unwrap();
        assert_eq!(idx, LatticeIndex::Finite(2.into()));
    }

    #[test]
    fn lattice_index_rank_deficient_and_errors() {
        let idx = lattice_index(&[ev(&[1, 0]), ev(&[0, 1])], &[ev(&[2, 0])]).unwrap();
        assert_eq!(idx, LatticeIndex::Infinite);
        let err = lattice_index(&[ev(&[2, 0]), ev(&[0, 2])], &[ev(&[1, 0])]).unwrap_err();
        assert!(matches!(err, Error::NotASublattice(_)));
        let err = lattice_index(&[ev(&[1, 0, 0])], &[ev(&[0, 1, 0])]).unwrap_err();
        assert!(matches!(err, Error::NotASublattice(_)));
    }

    #[test]
    fn rank_and_det() {
        let rows = [ev(&[2, 0, 2]), ev(&[0, 2, 2]), ev(&[3, 0, 1])];
        assert_eq!(rank_of(&rows), 3);
        assert_eq!(det3_rows(&rows[0], &rows[1], &rows[2]), -8);
        assert_eq!(rank_of(&[ev(&[1, 0, 0]), ev(&[2, 0, 0])]), 1);
        assert_eq!(SubMatrix::IDENTITY.det(), 1);
        assert_eq!(rank_of(&[]), 0);
    }

    #[test]
    fn charts_are_unimodular() {
        for (i, j) in [(0, 1), (1, 0), (0, 2), (2, 1)] {
            SubMatrix::two_curve_chart(i, j).check_chart().unwrap();
        }
        for k in 0..3 {
            SubMatrix::point_chart(k).check_chart().unwrap();
        }
        let u = ev(&[1, 2, 0]).apply_sub(&SubMatrix::two_curve_chart(0, 1));
        assert_eq!(u, ev(&[3, 2, 0]));
        let bad = SubMatrix([[1, 1, 0], [1, -1, 0], [0, 0, 1]]);
        assert!(matches!(bad.check_chart(), Err(Error::NonUnimodular(-2))));
    }
}
