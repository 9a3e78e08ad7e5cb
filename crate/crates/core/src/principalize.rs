//! Principalization of monomial ideals on smooth fans by the lexicographic omega descent.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fan::{Divisor, DivisorSet, SmoothFan};

/// `-inf` sorts below every pair; pairs compare lexicographically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OmegaValue {
    MinusInfinity,
    Pair(i64, i64),
}

impl fmt::Display for OmegaValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OmegaValue::MinusInfinity => write!(f, "-inf"),
            OmegaValue::Pair(a, b) => write!(f, "({a},{b})"),
        }
    }
}

impl Serialize for OmegaValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            OmegaValue::MinusInfinity => s.serialize_str("-inf"),
            OmegaValue::Pair(a, b) => [a, b].serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for OmegaValue {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Pair([i64; 2]),
        }
        match Raw::deserialize(d)? {
            Raw::Text(s) if s == "-inf" => Ok(OmegaValue::MinusInfinity),
            Raw::Text(s) => Err(serde::de::Error::custom(format!("bad omega value {s:?}"))),
            Raw::Pair([a, b]) => Ok(OmegaValue::Pair(a, b)),
        }
    }
}

/// Local exponents `(a,b)` and `(c,d)` of two divisors at a 2-curve.
pub fn omega(a: i64, b: i64, c: i64, d: i64) -> OmegaValue {
    let (p, q) = (a - c, b - d);
    if p != 0 && q != 0 && (p > 0) != (q > 0) {
        let (p, q) = (p.abs(), q.abs());
        OmegaValue::Pair(p.max(q), p.min(q))
    } else {
        OmegaValue::MinusInfinity
    }
}

fn omega_at(face: (usize, usize), d1: &Divisor, d2: &Divisor) -> OmegaValue {
    let (i, j) = face;
    omega(d1.coeffs[i], d1.coeffs[j], d2.coeffs[i], d2.coeffs[j])
}

/// Maximum of omega over the 2-cones of the fan.
pub fn omega_bar(fan: &SmoothFan, d1: &Divisor, d2: &Divisor) -> OmegaValue {
    fan.two_cones()
        .keys()
        .map(|&f| omega_at(f, d1, d2))
        .max()
        .unwrap_or(OmegaValue::MinusInfinity)
}

/// Whether, in max cone `cone`, some divisor's local exponents divide all the others.
pub fn is_principal_at(fan: &SmoothFan, divisors: &DivisorSet, cone: usize) -> bool {
    let exps: Vec<_> = divisors
        .divisors
        .iter()
        .map(|d| fan.chart_exponents(d, cone).expect("cone index in range"))
        .collect();
    exps.iter().any(|e| exps.iter().all(|o| e.divides(o)))
}

pub fn is_locally_principal(fan: &SmoothFan, divisors: &DivisorSet) -> bool {
    (0..fan.cones.len()).all(|c| is_principal_at(fan, divisors, c))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Pair,
    Mixed,
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pair" => Ok(Strategy::Pair),
            "mixed" => Ok(Strategy::Mixed),
            _ => Err(Error::Parse(format!("unknown strategy {s:?} (pair|mixed)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Round {
    pub round: usize,
    /// Pair phase of the run the round belongs to, counted from 1.
    pub phase: usize,
    pub omega_bar: OmegaValue,
    /// Ray indices of each subdivided cone, in the fan current at the time.
    pub centers: Vec<Vec<usize>>,
}

/// One subdivision with the state it was applied to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub fan: SmoothFan,
    pub divisors: DivisorSet,
    pub center: Vec<usize>,
    /// Indices into `divisors` of the pair being principalized, if any.
    pub pair: Option<[usize; 2]>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Principalization {
    pub fan: SmoothFan,
    pub divisors: DivisorSet,
    pub history: Vec<Round>,
    #[serde(skip)]
    pub trace: Vec<TraceStep>,
}

struct Runner {
    fan: SmoothFan,
    divisors: DivisorSet,
    history: Vec<Round>,
    trace: Vec<TraceStep>,
    budget: usize,
    phase: usize,
    pair: Option<[usize; 2]>,
}

impl Runner {
    fn new(fan: &SmoothFan, divisors: &DivisorSet, budget: usize) -> Result<Self> {
        fan.check()?;
        for d in &divisors.divisors {
            if d.coeffs.len() != fan.rays.len() {
                return Err(Error::InvalidState(format!("divisor needs {} coefficients", fan.rays.len())));
            }
        }
        Ok(Runner { fan: fan.clone(), divisors: divisors.clone(), history: vec![], trace: vec![], budget, phase: 0, pair: None })
    }

    fn subdivide(&mut self, center: &[usize]) -> Result<()> {
        self.trace.push(TraceStep { fan: self.fan.clone(), divisors: self.divisors.clone(), center: center.to_vec(), pair: self.pair });
        let (fan, sub) = match center {
            [i, j] => self.fan.star_subdivide_2cone((*i, *j))?,
            [i, j, k] => {
                let c = self
                    .fan
                    .find_cone([*i, *j, *k])
                    .ok_or_else(|| Error::NotACone(format!("{center:?}")))?;
                self.fan.star_subdivide_3cone(c)?
            }
            _ => return Err(Error::InvalidState(format!("bad center {center:?}"))),
        };
        self.fan = fan;
        self.divisors = self.divisors.pull_back(&sub);
        Ok(())
    }

    fn round(&mut self, omega_bar: OmegaValue, centers: Vec<Vec<usize>>) -> Result<()> {
        if self.history.len() >= self.budget {
            return Err(Error::StepBudgetExceeded(self.budget));
        }
        for c in &centers {
            self.subdivide(c)?;
        }
        self.history.push(Round { round: self.history.len() + 1, phase: self.phase, omega_bar, centers });
        Ok(())
    }

    /// Pair descent on divisors `p` and `q` of the current set.
    fn pair(&mut self, p: usize, q: usize) -> Result<()> {
        self.phase += 1;
        self.pair = Some([p, q]);
        loop {
            let (d1, d2) = (&self.divisors.divisors[p], &self.divisors.divisors[q]);
            let faces = self.fan.two_cones();
            let best = faces.keys().map(|&f| omega_at(f, d1, d2)).max().unwrap_or(OmegaValue::MinusInfinity);
            if best == OmegaValue::MinusInfinity {
                self.pair = None;
                return Ok(());
            }
            let centers: Vec<Vec<usize>> = faces
                .keys()
                .filter(|&&f| omega_at(f, d1, d2) == best)
                .map(|&(i, j)| vec![i, j])
                .collect();
            self.round(best, centers)?;
        }
    }

    fn finish(self) -> Principalization {
        Principalization { fan: self.fan, divisors: self.divisors, history: self.history, trace: self.trace }
    }
}

pub const DEFAULT_BUDGET: usize = 1000;

/// Subdivides every 2-cone achieving the current maximum of omega until it is `-inf`.
pub fn principalize_pair(fan: &SmoothFan, d1: &Divisor, d2: &Divisor, budget: usize) -> Result<Principalization> {
    let mut r = Runner::new(fan, &DivisorSet::new(vec![d1.clone(), d2.clone()]), budget)?;
    r.pair(0, 1)?;
    Ok(r.finish())
}

/// Principalizes `D_1` with `D_2`, replaces the pair by its per-ray minimum, and continues with `D_3`, ...
pub fn principalize_many(fan: &SmoothFan, divisors: &DivisorSet, budget: usize) -> Result<Principalization> {
    let n = divisors.len();
    let mut set = divisors.divisors.clone();
    if n >= 2 {
        // The running gcd divisor is carried as an extra last entry.
        set.push(divisors.divisors[0].clone());
    }
    let mut r = Runner::new(fan, &DivisorSet::new(set), budget)?;
    for i in 1..n {
        r.pair(n, i)?;
        let g = r.divisors.divisors[n].meet(&r.divisors.divisors[i]);
        r.divisors.divisors[n] = g;
    }
    if n >= 2 {
        r.divisors.divisors.pop();
    }
    Ok(r.finish())
}

/// Mixed strategy: pair descents over every pair of divisors in turn (a pair once principal stays
/// principal under later subdivisions), then a star subdivision of any max cone still non-principal.
pub fn principalize_with_3points(fan: &SmoothFan, divisors: &DivisorSet, budget: usize) -> Result<Principalization> {
    let mut r = Runner::new(fan, divisors, budget)?;
    let n = divisors.len();
    for p in 0..n {
        for q in p + 1..n {
            r.pair(p, q)?;
        }
    }
    loop {
        let mut bad: Vec<Vec<usize>> = (0..r.fan.cones.len())
            .filter(|&c| !is_principal_at(&r.fan, &r.divisors, c))
            .map(|c| {
                let mut v = r.fan.cones[c].to_vec();
                v.sort_unstable();
                v
            })
            .collect();
        if bad.is_empty() {
            return Ok(r.finish());
        }
        bad.sort();
        r.round(OmegaValue::MinusInfinity, bad)?;
    }
}

pub fn principalize(fan: &SmoothFan, divisors: &DivisorSet, strategy: Strategy, budget: usize) -> Result<Principalization> {
    match strategy {
        Strategy::Pair => principalize_many(fan, divisors, budget),
        Strategy::Mixed => principalize_with_3points(fan, divisors, budget),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_examples() {
        assert_eq!(omega(2, 0, 0, 3), OmegaValue::Pair(3, 2));
        assert_eq!(omega(2, 1, 3, 2), OmegaValue::MinusInfinity);
        assert_eq!(omega(1, 1, 1, 1), OmegaValue::MinusInfinity);
        assert!(OmegaValue::MinusInfinity < OmegaValue::Pair(0, 0));
        assert!(OmegaValue::Pair(2, 5) < OmegaValue::Pair(3, 0));
        let s = serde_json::to_string(&vec![OmegaValue::Pair(3, 2), OmegaValue::MinusInfinity]).unwrap();
        assert_eq!(s, r#"[[3,2],"-inf"]"#);
    }

    #[test]
    fn omega_bar_examples() {
        let fan = SmoothFan::octant();
        let d1 = Divisor::prime(3, 0, 2);
        let d2 = Divisor::prime(3, 1, 3);
        assert_eq!(omega_bar(&fan, &d1, &d2), OmegaValue::Pair(3, 2));
        assert_eq!(omega_bar(&fan, &d1, &d1), OmegaValue::MinusInfinity);
        let zero = Divisor::new(vec![0; 3]);
        assert_eq!(omega_bar(&fan, &zero, &zero), OmegaValue::MinusInfinity);
        assert!(!is_locally_principal(&fan, &DivisorSet::new(vec![d1.clone(), d2.clone()])));
        assert!(is_locally_principal(&fan, &DivisorSet::new(vec![d1.clone()])));
        let nested = DivisorSet::new(vec![Divisor::new(vec![1, 2, 0]), Divisor::new(vec![2, 2, 1])]);
        assert!(is_locally_principal(&fan, &nested));
    }

    #[test]
    fn pair_descent() {
        let fan = SmoothFan::octant();
        let d1 = Divisor::prime(3, 0, 2);
        let d2 = Divisor::prime(3, 1, 3);
        let p = principalize_pair(&fan, &d1, &d2, 100).unwrap();
        assert!(is_locally_principal(&p.fan, &p.divisors));
        assert_eq!(p.history[0].omega_bar, OmegaValue::Pair(3, 2));
        for w in p.history.windows(2) {
            assert!(w[1].omega_bar < w[0].omega_bar);
        }
        let same = principalize_pair(&fan, &d1, &d1, 100).unwrap();
        assert!(same.history.is_empty());
    }

    #[test]
    fn many_and_mixed() {
        let fan = SmoothFan::octant();
        let ds = DivisorSet::new(vec![Divisor::prime(3, 0, 2), Divisor::prime(3, 1, 3), Divisor::prime(3, 2, 1)]);
        let p = principalize_many(&fan, &ds, 200).unwrap();
        assert!(is_locally_principal(&p.fan, &p.divisors));
        let m = principalize_with_3points(&fan, &ds, 200).unwrap();
        assert!(is_locally_principal(&m.fan, &m.divisors));
        let one = DivisorSet::new(vec![Divisor::prime(3, 0, 2)]);
        assert!(principalize_many(&fan, &one, 10).unwrap().history.is_empty());
        assert!(principalize_with_3points(&fan, &one, 10).unwrap().history.is_empty());
    }
}
