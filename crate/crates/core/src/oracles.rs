//! Slow reference computations used to cross-check the lattice layer.

use std::collections::{HashSet, VecDeque};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::lattice::{ExpVec, IntMatrix};

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = vec![];
    go(0, n, k, &mut vec![], &mut out);
    out
}

/// Determinant by cofactor expansion along the first row.
fn laplace(m: &[Vec<BigInt>]) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::from(1);
    }
    let mut total = BigInt::zero();
    for j in 0..n {
        if m[0][j].is_zero() {
            continue;
        }
        let minor: Vec<Vec<BigInt>> = m[1..]
            .iter()
            .map(|r| r.iter().enumerate().filter(|&(c, _)| c != j).map(|(_, x)| x.clone()).collect())
            .collect();
        let term = &m[0][j] * laplace(&minor);
        if j % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
    }
    total
}

/// All `k x k` minors of `m`.
pub fn minors(m: &IntMatrix, k: usize) -> Vec<BigInt> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut out = vec![];
    for rs in subsets(rows, k) {
        for cs in subsets(cols, k) {
            let sub: Vec<Vec<BigInt>> = rs.iter().map(|&r| cs.iter().map(|&c| m[r][c].clone()).collect()).collect();
            out.push(laplace(&sub));
        }
    }
    out
}

/// Smith invariants from determinantal divisors: `d_k = D_k / D_(k-1)`, zeros padded to `min(rows, cols)`.
pub fn snf_by_minors(m: &IntMatrix) -> Vec<BigInt> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let n = rows.min(cols);
    let mut out = vec![];
    let mut prev = BigInt::from(1);
    for k in 1..=n {
        let g = minors(m, k).into_iter().fold(BigInt::zero(), |acc, x| acc.gcd(&x));
        if g.is_zero() {
            break;
        }
        out.push(&g / &prev);
        prev = g;
    }
    out.resize(n, BigInt::zero());
    out
}

pub fn rank_by_minors(m: &IntMatrix) -> usize {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    (1..=rows.min(cols)).rev().find(|&k| minors(m, k).iter().any(|x| !x.is_zero())).unwrap_or(0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CosetIndex {
    Finite(u64),
    Infinite,
    /// The enumeration would exceed the state limit.
    TooLarge,
}

fn closure(gens: &[Vec<i64>], modulus: i64, limit: usize) -> Option<usize> {
    let r = gens.first().map_or(0, Vec::len);
    let start = vec![0i64; r];
    let mut seen = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    while let Some(x) = queue.pop_front() {
        for g in gens {
            let y: Vec<i64> = x.iter().zip(g).map(|(a, b)| (a + b).rem_euclid(modulus)).collect();
            if seen.insert(y.clone()) {
                if seen.len() > limit {
                    return None;
                }
                queue.push_back(y);
            }
        }
    }
    Some(seen.len())
}

/// `|<h> / <a>|` by enumerating both groups modulo `D Z^r` in coordinates where `<a>` has full rank.
/// Assumes `<a>` is contained in `<h>`.
pub fn index_by_cosets(h: &[ExpVec], a: &[ExpVec], limit: usize) -> CosetIndex {
    let to_m = |v: &[ExpVec]| -> IntMatrix { v.iter().map(|e| e.0.iter().map(|&x| BigInt::from(x)).collect()).collect() };
    let (hm, am) = (to_m(h), to_m(a));
    let rh = if h.is_empty() { 0 } else { rank_by_minors(&hm) };
    let ra = if a.is_empty() { 0 } else { rank_by_minors(&am) };
    if rh == 0 {
        return CosetIndex::Finite(1);
    }
    if rh > ra {
        return CosetIndex::Infinite;
    }
    let dim = h[0].len();
    let Some(coords) = subsets(dim, ra).into_iter().find(|cs| {
        let proj: IntMatrix = am.iter().map(|r| cs.iter().map(|&c| r[c].clone()).collect()).collect();
        rank_by_minors(&proj) == ra
    }) else {
        return CosetIndex::TooLarge;
    };
    let project = |v: &[ExpVec]| -> Vec<Vec<i64>> { v.iter().map(|e| coords.iter().map(|&c| e.0[c]).collect()).collect() };
    let (hp, ap) = (project(h), project(a));
    let mut d: Option<BigInt> = None;
    for rs in subsets(ap.len(), ra) {
        let sub: Vec<Vec<BigInt>> = rs.iter().map(|&i| ap[i].iter().map(|&x| BigInt::from(x)).collect()).collect();
        let det = laplace(&sub).abs();
        if !det.is_zero() && d.as_ref().is_none_or(|d| &det < d) {
            d = Some(det);
        }
    }
    let Some(modulus) = d.and_then(|d| d.to_i64()) else {
        return CosetIndex::TooLarge;
    };
    match (closure(&hp, modulus, limit), closure(&ap, modulus, limit)) {
        (Some(nh), Some(na)) => CosetIndex::Finite((nh / na) as u64),
        _ => CosetIndex::TooLarge,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]]) -> IntMatrix {
        rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()
    }

    #[test]
    fn minors_and_snf() {
        let a = m(&[&[2, 4, 4], &[-6, 6, 12], &[10, -4, -16]]);
        assert_eq!(snf_by_minors(&a), vec![BigInt::from(2), BigInt::from(6), BigInt::from(12)]);
        assert_eq!(rank_by_minors(&m(&[&[1, 2], &[2, 4]])), 1);
    }

    #[test]
    fn coset_examples() {
        let e = |v: [i64; 3]| ExpVec::from(v);
        let h = [e([1, 0, 0]), e([0, 1, 0])];
        assert_eq!(index_by_cosets(&h, &[e([2, 0, 0]), e([0, 3, 0])], 10_000), CosetIndex::Finite(6));
        assert_eq!(index_by_cosets(&h, &[e([2, 0, 0])], 10_000), CosetIndex::Infinite);
        let h = [e([2, 1, 0]), e([1, 1, 3]), e([0, 0, 1])];
        assert_eq!(index_by_cosets(&h, &h, 10_000), CosetIndex::Finite(1));
    }
}
