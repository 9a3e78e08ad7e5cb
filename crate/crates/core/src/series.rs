//! Truncated power series in the local coordinates `x, y, z`.
//!
//! [`TruncSeries`] is the stored data model (a series known through a fixed
//! total degree). [`Jet`] is the working representation used for arithmetic:
//! a finite set of terms together with the absolute total degree through
//! which those terms are known to be correct.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{ExpVec, SubMatrix};
use crate::rational::{self, Q};

pub const NVARS: usize = 3;

/// Default truncation degree for series payloads.
pub const DEFAULT_TRUNC: u32 = 8;

/// Validity marker for jets that are exact polynomials.
pub const EXACT: i64 = i64::MAX / 4;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesTerm {
    pub exp: ExpVec,
    #[serde(with = "rational::as_string")]
    pub coef: Q,
}

/// A power series known through total degree `trunc`.
///
/// Terms keep their input order so that JSON round trips are exact.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncSeries {
    pub terms: Vec<SeriesTerm>,
    pub trunc: u32,
}

impl TruncSeries {
    pub fn new(terms: impl IntoIterator<Item = (ExpVec, Q)>, trunc: u32) -> Self {
        TruncSeries {
            terms: terms
                .into_iter()
                .map(|(exp, coef)| SeriesTerm { exp, coef })
                .collect(),
            trunc,
        }
    }

    /// `c + x_axis`, the translated-coordinate factor of many normal forms.
    pub fn shifted_coordinate(axis: usize, c: Q, trunc: u32) -> Self {
        let mut terms = vec![];
        if !c.is_zero() {
            terms.push((ExpVec::zero(NVARS), c));
        }
        terms.push((ExpVec::unit(NVARS, axis), Q::one()));
        TruncSeries::new(terms, trunc)
    }

    pub fn check(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for t in &self.terms {
            if t.exp.len() != NVARS || !t.exp.is_nonnegative() {
                return Err(Error::MalformedGerm(format!(
                    "series exponent {} must be a nonnegative 3-vector",
                    t.exp
                )));
            }
            if t.exp.degree() > self.trunc as i64 {
                return Err(Error::MalformedGerm(format!(
                    "series term {} exceeds truncation degree {}",
                    t.exp, self.trunc
                )));
            }
            if t.coef.is_zero() {
                return Err(Error::MalformedGerm(format!("zero coefficient at {}", t.exp)));
            }
            if !seen.insert(t.exp.clone()) {
                return Err(Error::MalformedGerm(format!("duplicate series term {}", t.exp)));
            }
        }
        Ok(())
    }

    pub fn constant_term(&self) -> Q {
        self.terms
            .iter()
            .find(|t| t.exp.is_zero())
            .map(|t| t.coef.clone())
            .unwrap_or_else(Q::zero)
    }

    /// Unit test at the truncated level: nonzero constant term.
    pub fn is_unit(&self) -> bool {
        !self.constant_term().is_zero()
    }

    pub fn to_jet(&self) -> Jet {
        Jet::from_terms(
            self.terms.iter().map(|t| (t.exp.clone(), t.coef.clone())),
            self.trunc as i64,
        )
    }
}

/// A truncated polynomial: `terms` are correct through total degree `valid`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Jet {
    terms: BTreeMap<ExpVec, Q>,
    valid: i64,
}

impl Jet {
    pub fn zero_exact() -> Self {
        Jet { terms: BTreeMap::new(), valid: EXACT }
    }

    pub fn constant(c: Q) -> Self {
        Jet::monomial(ExpVec::zero(NVARS), c)
    }

    pub fn monomial(exp: ExpVec, coef: Q) -> Self {
        Jet::from_terms([(exp, coef)], EXACT)
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (ExpVec, Q)>, valid: i64) -> Self {
        let mut jet = Jet { terms: BTreeMap::new(), valid };
        for (e, c) in terms {
            jet.add_term(e, c);
        }
        jet
    }

    fn add_term(&mut self, exp: ExpVec, coef: Q) {
        if coef.is_zero() || exp.degree() > self.valid {
            return;
        }
        let entry = self.terms.entry(exp).or_insert_with(Q::zero);
        *entry += coef;
        if entry.is_zero() {
            let key = self
                .terms
                .iter()
                .find(|(_, c)| c.is_zero())
                .map(|(k, _)| k.clone())
                .unwrap();
            self.terms.remove(&key);
        }
    }

    pub fn valid(&self) -> i64 {
        self.valid
    }

    pub fn is_exact(&self) -> bool {
        self.valid >= EXACT
    }

    pub fn terms(&self) -> impl Iterator<Item = (&ExpVec, &Q)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, exp: &ExpVec) -> Q {
        self.terms.get(exp).cloned().unwrap_or_else(Q::zero)
    }

    /// Lowest total degree among known terms; `valid + 1` when none are known.
    pub fn low_degree(&self) -> i64 {
        self.terms
            .keys()
            .map(ExpVec::degree)
            .min()
            .unwrap_or_else(|| self.valid.saturating_add(1))
    }

    fn truncate(mut self, valid: i64) -> Self {
        self.valid = valid.min(EXACT);
        self.terms.retain(|e, _| e.degree() <= valid);
        self
    }

    pub fn add(&self, other: &Jet) -> Jet {
        let valid = self.valid.min(other.valid);
        let mut out = Jet { terms: BTreeMap::new(), valid };
        for (e, c) in self.terms.iter().chain(other.terms.iter()) {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Jet {
        Jet {
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
            valid: self.valid,
        }
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: &Q) -> Jet {
        if k.is_zero() {
            return Jet { terms: BTreeMap::new(), valid: self.valid };
        }
        Jet {
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * k)).collect(),
            valid: self.valid,
        }
    }

    pub fn mul(&self, other: &Jet) -> Jet {
        let valid = self
            .valid
            .saturating_add(other.low_degree())
            .min(other.valid.saturating_add(self.low_degree()))
            .min(EXACT);
        let mut out = Jet { terms: BTreeMap::new(), valid };
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                out.add_term(e1.add(e2), c1 * c2);
            }
        }
        out
    }

    pub fn pow(&self, n: u32) -> Jet {
        let mut acc = Jet::constant(Q::one());
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Multiply by an exact monomial.
    pub fn shift(&self, exp: &ExpVec) -> Jet {
        Jet {
            terms: self.terms.iter().map(|(e, c)| (e.add(exp), c.clone())).collect(),
            valid: self.valid.saturating_add(exp.degree()).min(EXACT),
        }
    }

    pub fn derivative(&self, axis: usize) -> Jet {
        let mut out = Jet {
            terms: BTreeMap::new(),
            valid: if self.is_exact() { EXACT } else { self.valid - 1 },
        };
        for (e, c) in &self.terms {
            let p = e.0[axis];
            if p == 0 {
                continue;
            }
            let mut d = e.clone();
            d.0[axis] -= 1;
            out.add_term(d, c * Q::from_integer(p.into()));
        }
        out
    }

    /// Order along a coordinate axis, read from the known jet.
    ///
    /// Only terms inside the validity window are trusted; a jet with no
    /// known nonzero terms has no certified order.
    pub fn order_along(&self, axis: usize) -> Result<i64> {
        self.terms
            .keys()
            .map(|e| e.0[axis])
            .min()
            .ok_or_else(|| {
                Error::TruncationInsufficient(format!(
                    "jet vanishes through degree {}; order along axis {axis} undetermined",
                    self.valid
                ))
            })
    }

    /// Greatest common monomial divisor of the known terms.
    pub fn gcd_monomial(&self) -> Option<ExpVec> {
        let mut it = self.terms.keys();
        let first = it.next()?.clone();
        Some(it.fold(first, |acc, e| acc.componentwise_min(e)))
    }

    /// Substitute `old_i = new^{mono_i} * (new_k + c)` for each old coordinate.
    pub fn substitute(&self, subst: &Substitution) -> Jet {
        let min_row = subst.rows.iter().map(SubstRow::min_degree).min().unwrap_or(1);
        let valid = if self.is_exact() {
            EXACT
        } else {
            (self.valid + 1).saturating_mul(min_row) - 1
        };
        let images: Vec<Jet> = subst.rows.iter().map(SubstRow::image).collect();
        let mut out = Jet { terms: BTreeMap::new(), valid };
        for (e, c) in &self.terms {
            let mut acc = Jet::constant(c.clone());
            for (i, &p) in e.0.iter().enumerate() {
                acc = acc.mul(&images[i].pow(p as u32));
            }
            for (e2, c2) in acc.terms {
                out.add_term(e2, c2);
            }
        }
        out.truncate(valid)
    }

    pub fn to_series(&self, trunc: u32) -> TruncSeries {
        TruncSeries::new(
            self.terms
                .iter()
                .filter(|(e, _)| e.degree() <= trunc as i64)
                .map(|(e, c)| (e.clone(), c.clone())),
            trunc,
        )
    }
}

/// Image of one old coordinate under a chart substitution.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubstRow {
    /// Exponents of the new coordinates in the monomial factor.
    pub mono: ExpVec,
    /// Optional translated factor `(new_axis + shift)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<ShiftFactor>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftFactor {
    pub axis: usize,
    #[serde(with = "rational::as_string")]
    pub shift: Q,
}

impl SubstRow {
    fn min_degree(&self) -> i64 {
        let extra = match &self.factor {
            Some(f) if !f.shift.is_zero() => 0,
            Some(_) => 1,
            None => 0,
        };
        self.mono.degree() + extra
    }

    fn image(&self) -> Jet {
        let base = Jet::monomial(self.mono.clone(), Q::one());
        match &self.factor {
            None => base,
            Some(f) => {
                let lin = Jet::from_terms(
                    [
                        (ExpVec::unit(NVARS, f.axis), Q::one()),
                        (ExpVec::zero(NVARS), f.shift.clone()),
                    ],
                    EXACT,
                );
                base.mul(&lin)
            }
        }
    }
}

/// A chart substitution, possibly with translated coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Substitution {
    pub rows: [SubstRow; 3],
}

impl Substitution {
    pub fn monomial(sub: &SubMatrix) -> Self {
        let row = |i: usize| SubstRow { mono: ExpVec(sub.0[i].to_vec()), factor: None };
        Substitution { rows: [row(0), row(1), row(2)] }
    }

    /// The monomial part, if no translated factor carries a nonzero shift.
    pub fn as_monomial(&self) -> Option<SubMatrix> {
        let mut m = [[0i64; 3]; 3];
        for (i, row) in self.rows.iter().enumerate() {
            let mut e = row.mono.clone();
            if let Some(f) = &row.factor {
                if !f.shift.is_zero() {
                    return None;
                }
                e.0[f.axis] += 1;
            }
            m[i].copy_from_slice(&e.0);
        }
        Some(SubMatrix(m))
    }

    pub fn is_translated(&self) -> bool {
        self.as_monomial().is_none()
    }

    /// Relabel new coordinates: new coordinate `j` becomes `perm[j]`.
    pub fn permute_new(&self, perm: [usize; 3]) -> Substitution {
        let rows = self.rows.clone().map(|row| SubstRow {
            mono: row.mono.permute(&perm),
            factor: row.factor.map(|f| ShiftFactor { axis: perm[f.axis], shift: f.shift }),
        });
        Substitution { rows }
    }
}

impl std::fmt::Display for Substitution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        const OLD: [&str; 3] = ["x", "y", "z"];
        for (i, row) in self.rows.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}=", OLD[i])?;
            let mut parts = vec![];
            for (j, &e) in row.mono.0.iter().enumerate() {
                match e {
                    0 => {}
                    1 => parts.push(format!("{}1", OLD[j])),
                    _ => parts.push(format!("{}1^{}", OLD[j], e)),
                }
            }
            if let Some(s) = &row.factor {
                if s.shift.is_zero() {
                    parts.push(format!("{}1", OLD[s.axis]));
                } else {
                    parts.push(format!("({}1+{})", OLD[s.axis], rational::fmt_q(&s.shift)));
                }
            }
            if parts.is_empty() {
                write!(f, "1")?;
            } else {
                write!(f, "{}", parts.join("*"))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn e(v: [i64; 3]) -> ExpVec {
        ExpVec::from(v)
    }

    #[test]
    fn product_window_tracks_low_degrees() {
        // (1 + x + O(3)) * x^2 exactly
        let a = Jet::from_terms([(e([0, 0, 0]), q(1)), (e([1, 0, 0]), q(1))], 2);
        let b = Jet::monomial(e([2, 0, 0]), q(1));
        let p = a.mul(&b);
        assert_eq!(p.valid(), 4);
        assert_eq!(p.len(), 2);
        let sq = a.mul(&a);
        assert_eq!(sq.valid(), 2);
        assert_eq!(sq.coefficient(&e([1, 0, 0])), q(2));
        assert_eq!(sq.coefficient(&e([2, 0, 0])), q(1));
    }

    #[test]
    fn derivative_and_order() {
        let f = Jet::from_terms([(e([2, 1, 0]), q(1)), (e([3, 0, 0]), q(1))], 8);
        assert_eq!(f.order_along(0).unwrap(), 2);
        let fx = f.derivative(0);
        assert_eq!(fx.valid(), 7);
        assert_eq!(fx.coefficient(&e([1, 1, 0])), q(2));
        assert_eq!(fx.coefficient(&e([2, 0, 0])), q(3));
        let zero = Jet::from_terms([], 4);
        assert!(matches!(zero.order_along(0), Err(Error::TruncationInsufficient(_))));
    }

    #[test]
    fn substitution_keeps_window_for_blowup_charts() {
        // y = x1 (y1 + 2): degree-d terms land in degree >= d
        let s = Substitution {
            rows: [
                SubstRow { mono: e([1, 0, 0]), factor: None },
                SubstRow {
                    mono: e([1, 0, 0]),
                    factor: Some(ShiftFactor { axis: 1, shift: q(2) }),
                },
                SubstRow { mono: e([0, 0, 1]), factor: None },
            ],
        };
        let f = Jet::from_terms([(e([0, 1, 0]), q(1)), (e([0, 0, 0]), q(3))], 5);
        let g = f.substitute(&s);
        assert_eq!(g.valid(), 5);
        assert_eq!(g.coefficient(&e([1, 0, 0])), q(2));
        assert_eq!(g.coefficient(&e([1, 1, 0])), q(1));
        assert_eq!(g.coefficient(&e([0, 0, 0])), q(3));
        assert!(s.as_monomial().is_none());
        assert_eq!(s.to_string(), "x=x1, y=x1*(y1+2), z=z1");
    }

    #[test]
    fn pure_translation_destroys_window() {
        let s = Substitution {
            rows: [
                SubstRow { mono: e([0, 0, 0]), factor: Some(ShiftFactor { axis: 0, shift: q(1) }) },
                SubstRow { mono: e([0, 1, 0]), factor: None },
                SubstRow { mono: e([0, 0, 1]), factor: None },
            ],
        };
        let f = Jet::from_terms([(e([1, 0, 0]), q(1))], 4);
        let g = f.substitute(&s);
        assert!(g.valid() < 0);
        assert!(g.is_empty());
    }

    #[test]
    fn series_checks() {
        let s = TruncSeries::new([(e([0, 0, 0]), q(2)), (e([0, 1, 0]), q(1))], 8);
        s.check().unwrap();
        assert!(s.is_unit());
        let bad = TruncSeries::new([(e([5, 5, 0]), q(1))], 8);
        assert!(bad.check().is_err());
        let neg = TruncSeries::new([(e([-1, 0, 0]), q(1))], 8);
        assert!(neg.check().is_err());
    }
}
