//! The τ invariant `|H/A|` of a 3-point germ.

use std::fmt;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::germ::{PointKind, ThreePointGerm};
use crate::lattice::{quotient, ExpVec, LatticeIndex, SubMatrix};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TauValue {
    MinusInfinity,
    Order(BigInt),
}

impl TauValue {
    pub fn order(n: u64) -> Self {
        TauValue::Order(n.into())
    }
}

impl fmt::Display for TauValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TauValue::MinusInfinity => write!(f, "-inf"),
            TauValue::Order(n) => write!(f, "{n}"),
        }
    }
}

impl Serialize for TauValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            TauValue::MinusInfinity => s.serialize_str("-inf"),
            TauValue::Order(n) => match n.to_u64() {
                Some(k) => s.serialize_u64(k),
                None => s.serialize_str(&n.to_string()),
            },
        }
    }
}

impl<'de> Deserialize<'de> for TauValue {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        match &v {
            serde_json::Value::String(s) if s == "-inf" => Ok(TauValue::MinusInfinity),
            serde_json::Value::Number(n) => n
                .as_u64()
                .map(|k| TauValue::Order(k.into()))
                .ok_or_else(|| serde::de::Error::custom("tau must be a positive integer")),
            serde_json::Value::String(s) => s
                .parse::<BigInt>()
                .map(TauValue::Order)
                .map_err(serde::de::Error::custom),
            _ => Err(serde::de::Error::custom("tau must be \"-inf\" or a positive integer")),
        }
    }
}

/// τ together with the generating sets of `H` and `A`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TauReport {
    pub tau: TauValue,
    #[serde(rename = "H_gens")]
    pub h_gens: Vec<ExpVec>,
    #[serde(rename = "A_gens")]
    pub a_gens: Vec<ExpVec>,
    pub invariant_factors: Vec<u64>,
    /// The trivial quotient is reported as 1, never 0.
    pub convention: String,
}

const CONVENTION: &str = "trivial quotient reported as order 1; -inf only for monomial forms over 3-point targets";

pub fn tau_report(germ: &ThreePointGerm) -> Result<TauReport> {
    let bad = germ.rank_violations();
    if !bad.is_empty() {
        return Err(Error::MalformedGerm(bad.join("; ")));
    }
    let monomials = germ.monomials();
    if germ.target_kind == PointKind::ThreePoint && monomials.is_empty() {
        return Ok(TauReport {
            tau: TauValue::MinusInfinity,
            h_gens: vec![],
            a_gens: vec![],
            invariant_factors: vec![],
            convention: CONVENTION.into(),
        });
    }
    let mut h = vec![germ.u_exp.clone(), germ.v_exp.clone()];
    h.extend(monomials.iter().cloned());
    let mut a = vec![germ.u_exp.clone(), germ.v_exp.clone()];
    if germ.target_kind == PointKind::ThreePoint {
        a.push(monomials[0].clone());
    }
    let (index, factors) = quotient(&h, &a)?;
    let tau = match index {
        LatticeIndex::Finite(n) => TauValue::Order(n),
        LatticeIndex::Infinite => {
            return Err(Error::InvalidState("H/A is infinite on a germ satisfying the rank conditions".into()))
        }
    };
    Ok(TauReport { tau, h_gens: h, a_gens: a, invariant_factors: factors.iter().filter_map(ToPrimitive::to_u64).collect(), convention: CONVENTION.into() })
}

pub fn tau_of(germ: &ThreePointGerm) -> Result<TauValue> {
    Ok(tau_report(germ)?.tau)
}

/// τ before and after applying a domain chart to every exponent vector.
pub fn tau_preserved_under(germ: &ThreePointGerm, sub: &SubMatrix) -> Result<(TauValue, TauValue)> {
    sub.check_chart()?;
    let before = tau_of(germ)?;
    let after = tau_of(&germ.apply_sub(sub))?;
    Ok((before, after))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn e(v: [i64; 3]) -> ExpVec {
        ExpVec::from(v)
    }

    pub(crate) fn two_point_example() -> ThreePointGerm {
        ThreePointGerm::new(e([2, 0, 2]), e([0, 2, 2]), vec![(q(1), e([1, 1, 2]))], e([3, 0, 1]), PointKind::TwoPoint)
    }

    #[test]
    fn examples() {
        assert_eq!(tau_of(&two_point_example()).unwrap(), TauValue::order(2));
        let g = ThreePointGerm::new(
            e([2, 0, 0]),
            e([0, 2, 0]),
            vec![(q(1), e([1, 1, 0])), (q(3), e([2, 1, 0]))],
            e([1, 1, 1]),
            PointKind::ThreePoint,
        );
        assert_eq!(tau_of(&g).unwrap(), TauValue::order(2));
        let mono = ThreePointGerm::new(e([1, 0, 0]), e([0, 1, 0]), vec![], e([0, 0, 1]), PointKind::ThreePoint);
        assert_eq!(tau_of(&mono).unwrap(), TauValue::MinusInfinity);
    }

    #[test]
    fn preserved_under_charts() {
        let g = two_point_example();
        let (a, b) = tau_preserved_under(&g, &SubMatrix::IDENTITY).unwrap();
        assert_eq!(a, b);
        let (a, b) = tau_preserved_under(&g, &SubMatrix::two_curve_chart(0, 1)).unwrap();
        assert_eq!((a, b), (TauValue::order(2), TauValue::order(2)));
        let bad = SubMatrix([[2, 0, 0], [0, 1, 0], [0, 0, 1]]);
        assert!(matches!(tau_preserved_under(&g, &bad), Err(Error::NonUnimodular(2))));
    }

    #[test]
    fn report_json() {
        let r = tau_report(&two_point_example()).unwrap();
        let s = serde_json::to_value(&r).unwrap();
        assert_eq!(s["tau"], serde_json::json!(2));
        assert_eq!(s["invariant_factors"], serde_json::json!([2]));
        let back: TauReport = serde_json::from_value(s).unwrap();
        assert_eq!(back, r);
    }
}
