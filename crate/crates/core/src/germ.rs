//! Local map germs `u, v, w` in coordinates `x, y, z` and their normal-form classifier.

use std::collections::BTreeMap;
use std::fmt;

use num_integer::Integer;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{det3_rows, rank_of, ExpVec};
use crate::rational::{self, Q};
use crate::series::{Jet, TruncSeries, DEFAULT_TRUNC, NVARS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PointKind {
    OnePoint,
    TwoPoint,
    ThreePoint,
}

impl PointKind {
    /// Number of boundary components through the point.
    pub fn count(self) -> usize {
        match self {
            PointKind::OnePoint => 1,
            PointKind::TwoPoint => 2,
            PointKind::ThreePoint => 3,
        }
    }

    pub fn from_count(n: usize) -> Result<Self> {
        match n {
            1 => Ok(PointKind::OnePoint),
            2 => Ok(PointKind::TwoPoint),
            3 => Ok(PointKind::ThreePoint),
            _ => Err(Error::MalformedGerm(format!("{n} boundary components"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FormTag {
    TF1,
    TF21,
    TF22,
    TF3,
    TF01,
    TF02,
    Prep2b,
    Prep2c,
    Toroidal1,
    Toroidal2,
    Toroidal3,
    Toroidal4,
    Toroidal5,
    Toroidal6,
    Super1,
    Super2,
    Super3,
    Super4,
    Eq16,
    Unclassified,
}

impl FormTag {
    /// Classification priority, most specific first.
    pub const PRIORITY: [FormTag; 19] = [
        FormTag::Toroidal1,
        FormTag::Toroidal2,
        FormTag::Toroidal3,
        FormTag::Toroidal4,
        FormTag::Toroidal5,
        FormTag::Toroidal6,
        FormTag::Super1,
        FormTag::Super2,
        FormTag::Super3,
        FormTag::Super4,
        FormTag::Prep2b,
        FormTag::Prep2c,
        FormTag::Eq16,
        FormTag::TF1,
        FormTag::TF21,
        FormTag::TF22,
        FormTag::TF3,
        FormTag::TF01,
        FormTag::TF02,
    ];

    pub fn toroidal(n: u8) -> Option<FormTag> {
        Some(match n {
            1 => FormTag::Toroidal1,
            2 => FormTag::Toroidal2,
            3 => FormTag::Toroidal3,
            4 => FormTag::Toroidal4,
            5 => FormTag::Toroidal5,
            6 => FormTag::Toroidal6,
            _ => return None,
        })
    }

    pub fn is_toroidal(self) -> bool {
        matches!(
            self,
            FormTag::Toroidal1
                | FormTag::Toroidal2
                | FormTag::Toroidal3
                | FormTag::Toroidal4
                | FormTag::Toroidal5
                | FormTag::Toroidal6
        )
    }

    pub fn is_super(self) -> bool {
        matches!(self, FormTag::Super1 | FormTag::Super2 | FormTag::Super3 | FormTag::Super4)
    }

    pub fn parse(s: &str) -> Result<FormTag> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Parse(format!("unknown form tag {s:?}")))
    }
}

impl fmt::Display for FormTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// One of `u, v, w`: `coef * x^exp * series`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Payload {
    pub exp: ExpVec,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "rational::opt_string")]
    pub coef: Option<Q>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<TruncSeries>,
}

impl Payload {
    pub fn mono(exp: impl Into<ExpVec>) -> Self {
        Payload { exp: exp.into(), coef: None, series: None }
    }

    pub fn with_series(exp: impl Into<ExpVec>, series: TruncSeries) -> Self {
        Payload { exp: exp.into(), coef: None, series: Some(series) }
    }

    /// `x^exp * (x_axis + shift)`.
    pub fn shifted(exp: impl Into<ExpVec>, axis: usize, shift: Q) -> Self {
        Payload::with_series(exp, TruncSeries::shifted_coordinate(axis, shift, DEFAULT_TRUNC))
    }

    /// Payload whose full expansion is the given list of terms.
    pub fn from_terms(terms: Vec<(ExpVec, Q)>, trunc: u32) -> Self {
        if let [(e, c)] = terms.as_slice() {
            return Payload {
                exp: e.clone(),
                coef: if c.is_one() { None } else { Some(c.clone()) },
                series: None,
            };
        }
        Payload::with_series(ExpVec::zero(NVARS), TruncSeries::new(terms, trunc))
    }

    pub fn coefficient(&self) -> Q {
        self.coef.clone().unwrap_or_else(Q::one)
    }

    pub fn is_pure_monomial(&self) -> bool {
        self.series.is_none()
    }

    pub fn check(&self, name: &str) -> Result<()> {
        if self.exp.len() != NVARS || !self.exp.is_nonnegative() {
            return Err(Error::MalformedGerm(format!(
                "{name}: exponent {} must be a nonnegative 3-vector",
                self.exp
            )));
        }
        if self.coef.as_ref().is_some_and(Zero::is_zero) {
            return Err(Error::MalformedGerm(format!("{name}: zero coefficient")));
        }
        if let Some(s) = &self.series {
            s.check().map_err(|e| match e {
                Error::MalformedGerm(m) => Error::MalformedGerm(format!("{name}: {m}")),
                other => other,
            })?;
            if s.terms.is_empty() {
                return Err(Error::MalformedGerm(format!("{name}: empty series")));
            }
        }
        Ok(())
    }

    /// Full expansion as a jet.
    pub fn to_jet(&self) -> Jet {
        let base = match &self.series {
            Some(s) => s.to_jet(),
            None => Jet::constant(Q::one()),
        };
        base.shift(&self.exp).scale(&self.coefficient())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Germ {
    pub target_kind: PointKind,
    pub domain_kind: PointKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub form_tag: Option<FormTag>,
    pub u: Payload,
    pub v: Payload,
    pub w: Payload,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty", with = "rational::map_string")]
    pub constants: BTreeMap<String, Q>,
}

impl Germ {
    pub fn new(target: PointKind, domain: PointKind, u: Payload, v: Payload, w: Payload) -> Self {
        Germ {
            target_kind: target,
            domain_kind: domain,
            form_tag: None,
            u,
            v,
            w,
            constants: BTreeMap::new(),
        }
    }

    pub fn with_tag(mut self, tag: FormTag) -> Self {
        self.form_tag = Some(tag);
        self
    }

    pub fn with_constant(mut self, name: &str, value: Q) -> Self {
        self.constants.insert(name.to_string(), value);
        self
    }

    pub fn from_json(s: &str) -> Result<Germ> {
        let g: Germ = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        g.check()?;
        Ok(g)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("germ serializes")
    }

    pub fn payloads(&self) -> [&Payload; 3] {
        [&self.u, &self.v, &self.w]
    }

    pub fn check(&self) -> Result<()> {
        for (p, name) in self.payloads().into_iter().zip(["u", "v", "w"]) {
            p.check(name)?;
        }
        Ok(())
    }

    pub fn jets(&self) -> [Jet; 3] {
        [self.u.to_jet(), self.v.to_jet(), self.w.to_jet()]
    }

    /// Violated conditions of the form `tag`; empty iff the germ has that form.
    pub fn violations_for(&self, tag: FormTag) -> Vec<String> {
        if let Err(e) = self.check() {
            return vec![e.to_string()];
        }
        let views = self.views();
        for view in &views {
            if view.check(tag).is_empty() {
                return self.constant_mismatches(view, tag);
            }
        }
        views[0].check(tag)
    }

    /// Orderings of `u, v, w` the normal forms may use: all of them over a
    /// 3-point, `u <-> v` over a 2-point.
    fn parameter_orders(&self) -> Vec<[usize; 3]> {
        match self.target_kind {
            PointKind::OnePoint => vec![[0, 1, 2]],
            PointKind::TwoPoint => vec![[0, 1, 2], [1, 0, 2]],
            PointKind::ThreePoint => {
                vec![[0, 1, 2], [1, 0, 2], [0, 2, 1], [2, 0, 1], [1, 2, 0], [2, 1, 0]]
            }
        }
    }

    fn views(&self) -> Vec<View<'_>> {
        let jets = self.jets();
        self.parameter_orders()
            .into_iter()
            .map(|order| View {
                germ: self,
                order,
                jets: order.map(|i| jets[i].clone()),
            })
            .collect()
    }

    /// Ordering of `u, v, w` under which the germ has the form `tag`.
    pub fn matching_order(&self, tag: FormTag) -> Option<[usize; 3]> {
        self.check().ok()?;
        self.views().into_iter().find(|v| v.check(tag).is_empty()).map(|v| v.order)
    }

    fn constant_mismatches(&self, view: &View, tag: FormTag) -> Vec<String> {
        let mut out = vec![];
        for (name, value) in &self.constants {
            if let Some(found) = view.named_constant(tag, name) {
                if &found != value {
                    out.push(format!("constant {name} does not match the payload"));
                }
            }
        }
        out
    }

    /// Most specific matching tag, or `Unclassified`.
    pub fn classify(&self) -> Result<FormTag> {
        self.check()?;
        let views = self.views();
        Ok(FormTag::PRIORITY
            .into_iter()
            .find(|&t| views.iter().any(|v| v.check(t).is_empty()))
            .unwrap_or(FormTag::Unclassified))
    }

    /// Violations of the declared tag (none declared means nothing to check).
    pub fn validate(&self) -> Vec<String> {
        match self.form_tag {
            None | Some(FormTag::Unclassified) => match self.check() {
                Ok(()) => vec![],
                Err(e) => vec![e.to_string()],
            },
            Some(tag) => self.violations_for(tag),
        }
    }

    /// `u, v, w` pure monomials of rank 3 at a 3-point.
    pub fn is_monomial_form(&self) -> Result<bool> {
        if self.domain_kind != PointKind::ThreePoint {
            return Err(Error::MalformedGerm("monomial form needs a 3-point domain".into()));
        }
        self.check()?;
        let monos: Option<Vec<ExpVec>> = self.jets().iter().map(single_term).collect();
        Ok(match monos {
            Some(m) => rank_of(&m) == 3,
            None => false,
        })
    }

    /// Payload matches one of the four super-parameter shapes.
    pub fn is_super_parameters(&self) -> Result<bool> {
        if self.target_kind != PointKind::TwoPoint {
            return Err(Error::MalformedGerm("super parameters need a 2-point target".into()));
        }
        for (p, name) in self.payloads().into_iter().zip(["u", "v", "w"]) {
            if let Some(s) = &p.series {
                if s.terms.is_empty() {
                    return Err(Error::TruncationInsufficient(format!(
                        "{name}: no series terms known through degree {}",
                        s.trunc
                    )));
                }
            }
        }
        self.check()?;
        let views = self.views();
        Ok([FormTag::Super1, FormTag::Super2, FormTag::Super3, FormTag::Super4]
            .into_iter()
            .any(|t| views.iter().any(|v| v.check(t).is_empty())))
    }
}

/// Single term with coefficient 1.
fn single_term(j: &Jet) -> Option<ExpVec> {
    let mut it = j.terms();
    let (e, c) = it.next()?;
    if it.next().is_some() || !c.is_one() {
        return None;
    }
    Some(e.clone())
}

/// `x^m (x_axis + shift)` with coefficient 1 on the linear term; shift may be zero.
fn shifted_term(j: &Jet, axis: usize) -> Option<(ExpVec, Q)> {
    let terms: Vec<(&ExpVec, &Q)> = j.terms().collect();
    match terms.as_slice() {
        [(e, c)] if c.is_one() && e.0[axis] > 0 => {
            let mut m = (*e).clone();
            m.0[axis] -= 1;
            Some((m, Q::zero()))
        }
        [(e1, c1), (e2, c2)] => {
            for ((lo, clo), (hi, chi)) in [((e1, c1), (e2, c2)), ((e2, c2), (e1, c1))] {
                if chi.is_one() && hi.sub(lo) == ExpVec::unit(NVARS, axis) {
                    return Some(((*lo).clone(), (*clo).clone()));
                }
            }
            None
        }
        _ => None,
    }
}

/// Entries outside `allowed` axes vanish.
fn supported_on(e: &ExpVec, allowed: usize) -> bool {
    e.0.iter().skip(allowed).all(|&x| x == 0)
}

/// Result of reading a sum of terms as `monomial * unit`.
#[derive(Debug, PartialEq)]
enum UnitPart {
    Zero,
    Unit(ExpVec),
    NotUnit,
}

fn unit_part(terms: &[(ExpVec, Q)]) -> UnitPart {
    let Some((first, _)) = terms.first() else {
        return UnitPart::Zero;
    };
    let g = terms.iter().fold(first.clone(), |acc, (e, _)| acc.componentwise_min(e));
    if terms.iter().any(|(e, _)| e == &g) {
        UnitPart::Unit(g)
    } else {
        UnitPart::NotUnit
    }
}

fn det2(p: &ExpVec, q: &ExpVec) -> i64 {
    p.0[0] * q.0[1] - p.0[1] * q.0[0]
}

/// Read-only view of a germ's expansions used by the form checks.
struct View<'a> {
    germ: &'a Germ,
    order: [usize; 3],
    jets: [Jet; 3],
}

struct Violations(Vec<String>);

impl Violations {
    fn require(&mut self, ok: bool, msg: &str) -> bool {
        if !ok {
            self.0.push(msg.to_string());
        }
        ok
    }
}

impl<'a> View<'a> {
    fn terms(&self, i: usize) -> Vec<(ExpVec, Q)> {
        self.jets[i].terms().map(|(e, c)| (e.clone(), c.clone())).collect()
    }

    fn kinds(&self, v: &mut Violations, targets: &[PointKind], domain: PointKind) -> bool {
        let ok_t = targets.contains(&self.germ.target_kind);
        let ok_d = self.germ.domain_kind == domain;
        v.require(ok_t && ok_d, "point kinds")
    }

    /// `name = x^a` with a > 0 on a boundary coordinate.
    fn x_power(&self, v: &mut Violations, i: usize, name: &str) -> Option<i64> {
        match single_term(&self.jets[i]) {
            Some(e) if supported_on(&e, 1) && e.0[0] > 0 => Some(e.0[0]),
            _ => {
                v.require(false, &format!("{name} must be x^a with a > 0"));
                None
            }
        }
    }

    fn monomial_in(&self, v: &mut Violations, i: usize, name: &str, axes: usize) -> Option<ExpVec> {
        match single_term(&self.jets[i]) {
            Some(e) if supported_on(&e, axes) => Some(e),
            _ => {
                let vars = ["x", "x, y", "x, y, z"][axes - 1];
                v.require(false, &format!("{name} must be a monomial in {vars}"));
                None
            }
        }
    }

    fn coordinate(&self, v: &mut Violations, i: usize, name: &str, axis: usize) {
        let ok = single_term(&self.jets[i]) == Some(ExpVec::unit(NVARS, axis));
        v.require(ok, &format!("{name} must equal {}", ["x", "y", "z"][axis]));
    }

    /// `name = x^m (axis + α)` with `m` supported on `axes`, α ≠ 0.
    fn shifted(
        &self,
        v: &mut Violations,
        i: usize,
        name: &str,
        axis: usize,
        axes: usize,
    ) -> Option<(ExpVec, Q)> {
        match shifted_term(&self.jets[i], axis) {
            Some((m, a)) if supported_on(&m, axes) => {
                if v.require(!a.is_zero(), &format!("{name}: translation constant must be nonzero")) {
                    Some((m, a))
                } else {
                    None
                }
            }
            _ => {
                let c = ["x", "y", "z"][axis];
                v.require(false, &format!("{name} must be a monomial times ({c} + constant)"));
                None
            }
        }
    }

    /// `u = (x^a y^b)^k` with a, b, k > 0, gcd(a, b) = 1; returns ((a, b), k).
    fn power_of_primitive(&self, v: &mut Violations, i: usize, name: &str) -> Option<(ExpVec, i64)> {
        let e = self.monomial_in(v, i, name, 2)?;
        let k = e.0[0].gcd(&e.0[1]);
        if !v.require(e.0[0] > 0 && e.0[1] > 0, &format!("{name} must involve both x and y")) {
            return None;
        }
        Some((ExpVec::new(vec![e.0[0] / k, e.0[1] / k, 0]), k))
    }

    /// Shape (TF22) for u, v; returns (a, b, 0) and α.
    fn tf22(&self, v: &mut Violations) -> Option<(ExpVec, Q)> {
        let (ab, _k) = self.power_of_primitive(v, 0, "u")?;
        let (m, alpha) = self.shifted(v, 1, "v", 2, 2)?;
        let t = m.0[0] / ab.0[0];
        let ok = t > 0 && m == ab.scale(t);
        v.require(ok, "v must be a positive power of the primitive monomial of u")
            .then_some((ab, alpha))
    }

    fn tf_rank2(&self, v: &mut Violations, axes: usize) -> Option<(ExpVec, ExpVec)> {
        let a = self.monomial_in(v, 0, "u", axes)?;
        let b = self.monomial_in(v, 1, "v", axes)?;
        let nonzero = !a.is_zero() && !b.is_zero();
        v.require(nonzero && rank_of(&[a.clone(), b.clone()]) == 2, "rank condition")
            .then_some((a, b))
    }

    /// Split `w`'s terms by the predicate; the other side must be one monomial with coefficient 1.
    fn split_single<F: Fn(&ExpVec) -> bool>(
        &self,
        v: &mut Violations,
        i: usize,
        in_series: F,
        what: &str,
    ) -> Option<(Vec<(ExpVec, Q)>, ExpVec)> {
        let (series, rest): (Vec<_>, Vec<_>) = self.terms(i).into_iter().partition(|(e, _)| in_series(e));
        match rest.as_slice() {
            [(n, c)] if c.is_one() => Some((series, n.clone())),
            _ => {
                v.require(false, what);
                None
            }
        }
    }

    fn check(&self, tag: FormTag) -> Vec<String> {
        use PointKind::*;
        let mut v = Violations(vec![]);
        let two_three = [TwoPoint, ThreePoint];
        match tag {
            FormTag::Toroidal1 => {
                if self.kinds(&mut v, &[ThreePoint], ThreePoint) {
                    let m: Vec<_> = ["u", "v", "w"]
                        .iter()
                        .enumerate()
                        .filter_map(|(i, n)| self.monomial_in(&mut v, i, n, 3))
                        .collect();
                    if m.len() == 3 {
                        v.require(det3_rows(&m[0], &m[1], &m[2]) != 0, "determinant condition");
                    }
                }
            }
            FormTag::Toroidal2 => {
                if self.kinds(&mut v, &[ThreePoint], TwoPoint) {
                    let a = self.monomial_in(&mut v, 0, "u", 2);
                    let b = self.monomial_in(&mut v, 1, "v", 2);
                    if let (Some(a), Some(b)) = (a, b) {
                        v.require(det2(&a, &b) != 0, "determinant condition");
                    }
                    self.shifted(&mut v, 2, "w", 2, 2);
                }
            }
            FormTag::Toroidal3 => {
                if self.kinds(&mut v, &[ThreePoint], OnePoint) {
                    self.x_power(&mut v, 0, "u");
                    if let Some((m, _)) = self.shifted(&mut v, 1, "v", 1, 1) {
                        v.require(m.0[0] > 0, "v: exponent of x must be positive");
                    }
                    if let Some((m, _)) = self.shifted(&mut v, 2, "w", 2, 1) {
                        v.require(m.0[0] > 0, "w: exponent of x must be positive");
                    }
                }
            }
            FormTag::Toroidal4 => {
                if self.kinds(&mut v, &[TwoPoint], TwoPoint) {
                    let a = self.monomial_in(&mut v, 0, "u", 2);
                    let b = self.monomial_in(&mut v, 1, "v", 2);
                    if let (Some(a), Some(b)) = (a, b) {
                        v.require(det2(&a, &b) != 0, "determinant condition");
                    }
                    self.coordinate(&mut v, 2, "w", 2);
                }
            }
            FormTag::Toroidal5 => {
                if self.kinds(&mut v, &[TwoPoint], OnePoint) {
                    self.x_power(&mut v, 0, "u");
                    if let Some((m, _)) = self.shifted(&mut v, 1, "v", 1, 1) {
                        v.require(m.0[0] > 0, "v: exponent of x must be positive");
                    }
                    self.coordinate(&mut v, 2, "w", 2);
                }
            }
            FormTag::Toroidal6 => {
                if self.kinds(&mut v, &[OnePoint], OnePoint) {
                    self.x_power(&mut v, 0, "u");
                    self.coordinate(&mut v, 1, "v", 1);
                    self.coordinate(&mut v, 2, "w", 2);
                }
            }
            FormTag::TF1 => {
                if self.kinds(&mut v, &two_three, OnePoint) {
                    self.x_power(&mut v, 0, "u");
                    self.shifted(&mut v, 1, "v", 1, 1);
                }
            }
            FormTag::TF21 => {
                if self.kinds(&mut v, &two_three, TwoPoint) {
                    self.tf_rank2(&mut v, 2);
                }
            }
            FormTag::TF22 => {
                if self.kinds(&mut v, &two_three, TwoPoint) {
                    self.tf22(&mut v);
                }
            }
            FormTag::TF3 => {
                if self.kinds(&mut v, &two_three, ThreePoint) {
                    self.tf_rank2(&mut v, 3);
                }
            }
            FormTag::TF01 => {
                if self.kinds(&mut v, &[OnePoint], OnePoint) {
                    self.x_power(&mut v, 0, "u");
                    self.coordinate(&mut v, 1, "v", 1);
                }
            }
            FormTag::TF02 => {
                if self.kinds(&mut v, &[OnePoint], TwoPoint) {
                    self.power_of_primitive(&mut v, 0, "u");
                    self.coordinate(&mut v, 1, "v", 2);
                }
            }
            FormTag::Prep2b => {
                if self.kinds(&mut v, &[TwoPoint], OnePoint) {
                    self.x_power(&mut v, 0, "u");
                    self.coordinate(&mut v, 2, "w", 1);
                    // v = x^c (γ(x, y) + x^d z)
                    let terms = self.terms(1);
                    let (zpart, rest): (Vec<_>, Vec<_>) = terms.into_iter().partition(|(e, _)| e.0[2] > 0);
                    let z_ok = matches!(zpart.as_slice(), [(e, c)] if c.is_one() && e.0[2] == 1 && supported_on(&ExpVec::new(vec![e.0[0], e.0[1], 0]), 1));
                    if v.require(z_ok, "v must contain exactly one z-term x^(c+d) z") {
                        match unit_part(&rest) {
                            UnitPart::Unit(g) if supported_on(&g, 1) => {
                                v.require(g.0[0] <= zpart[0].0 .0[0], "v: exponent d must be nonnegative");
                            }
                            _ => {
                                v.require(false, "v: gamma must be a unit series");
                            }
                        }
                    }
                }
            }
            FormTag::Prep2c => {
                if self.kinds(&mut v, &[TwoPoint], TwoPoint) {
                    self.coordinate(&mut v, 2, "w", 2);
                    if let Some((ab, _)) = self.power_of_primitive(&mut v, 0, "u") {
                        let in_lattice = |e: &ExpVec| lattice_power(e, &ab).is_some();
                        if let Some((series, n)) =
                            self.split_single(&mut v, 1, in_lattice, "v must have exactly one term off the powers of x^a y^b")
                        {
                            match unit_part(&series) {
                                UnitPart::Unit(g) => {
                                    v.require(g.0[2] == 0, "v: gamma must be a unit series");
                                    let cd = n.sub(&g);
                                    v.require(cd.0[2] == 0 && cd.is_nonnegative(), "v: x^c y^d must be a monomial in x, y");
                                    v.require(det2(&ab, &cd) != 0, "determinant condition");
                                }
                                _ => {
                                    v.require(false, "v: gamma must be a unit series");
                                }
                            }
                        }
                    }
                }
            }
            FormTag::Super1 => {
                if self.kinds(&mut v, &[TwoPoint], OnePoint) {
                    self.x_power(&mut v, 0, "u");
                    self.shifted(&mut v, 1, "v", 1, 1);
                    self.super_w_linear(&mut v, 1);
                }
            }
            FormTag::Super2 => {
                if self.kinds(&mut v, &[TwoPoint], TwoPoint) {
                    let a = self.monomial_in(&mut v, 0, "u", 2);
                    let b = self.monomial_in(&mut v, 1, "v", 2);
                    if let (Some(a), Some(b)) = (a, b) {
                        v.require(det2(&a, &b) != 0, "determinant condition");
                    }
                    self.super_w_linear(&mut v, 2);
                }
            }
            FormTag::Super3 => {
                if self.kinds(&mut v, &[TwoPoint], TwoPoint) {
                    if let Some((ab, _)) = self.tf22(&mut v) {
                        let in_lattice = |e: &ExpVec| lattice_power(e, &ab).is_some();
                        if let Some((series, n)) =
                            self.split_single(&mut v, 2, in_lattice, "w must have exactly one term x^c y^d off the powers of x^a y^b")
                        {
                            v.require(n.0[2] == 0, "w: x^c y^d must not involve z");
                            v.require(det2(&ab, &n) != 0, "determinant condition");
                            match unit_part(&series) {
                                UnitPart::Zero => {}
                                UnitPart::Unit(g) => {
                                    v.require(g.0[2] == 0, "w: gamma must be a unit series or zero");
                                }
                                UnitPart::NotUnit => {
                                    v.require(false, "w: gamma must be a unit series or zero");
                                }
                            }
                        }
                    }
                }
            }
            FormTag::Super4 => {
                if self.kinds(&mut v, &[TwoPoint], ThreePoint) {
                    if let Some((a, b)) = self.tf_rank2(&mut v, 3) {
                        let rank2 = |e: &ExpVec| rank_of(&[a.clone(), b.clone(), e.clone()]) == 2;
                        if let Some((series, _n)) =
                            self.split_single(&mut v, 2, rank2, "w must have exactly one monomial N with rank(u, v, N) = 3")
                        {
                            v.require(
                                unit_part(&series) != UnitPart::NotUnit,
                                "w: gamma must be a unit series or zero",
                            );
                        }
                    }
                }
            }
            FormTag::Eq16 => {
                if self.kinds(&mut v, &two_three, ThreePoint) {
                    if let Some((a, b)) = self.tf_rank2(&mut v, 3) {
                        let rank2 = |e: &ExpVec| rank_of(&[a.clone(), b.clone(), e.clone()]) == 2;
                        if let Some((mut series, n)) =
                            self.split_single(&mut v, 2, rank2, "w must have exactly one monomial N with rank(u, v, N) = 3")
                        {
                            sort_series(&mut series);
                            for (i, (m, _)) in series.iter().enumerate() {
                                if n.divides(m) {
                                    v.0.push(format!("N divides M_{i}"));
                                }
                            }
                        }
                    }
                }
            }
            FormTag::Unclassified => {}
        }
        v.0
    }

    /// w = M γ + P (z + β) with γ a unit or zero, on `axes` boundary coordinates.
    fn super_w_linear(&self, v: &mut Violations, axes: usize) {
        let terms = self.terms(2);
        let (zpart, rest): (Vec<_>, Vec<_>) = terms.into_iter().partition(|(e, _)| e.0[2] > 0);
        let z_mono = match zpart.as_slice() {
            [(e, c)] if c.is_one() && e.0[2] == 1 => {
                let mut p = e.clone();
                p.0[2] = 0;
                supported_on(&p, axes).then_some(p)
            }
            _ => None,
        };
        let Some(p) = z_mono else {
            v.require(false, "w must contain exactly one z-term, linear in z");
            return;
        };
        let fits = |ts: &[(ExpVec, Q)]| match unit_part(ts) {
            UnitPart::Zero => true,
            UnitPart::Unit(g) => supported_on(&g, axes),
            UnitPart::NotUnit => false,
        };
        let without_beta: Vec<_> = rest.iter().filter(|(e, _)| e != &p).cloned().collect();
        v.require(fits(&rest) || fits(&without_beta), "w: gamma must be a unit series or zero");
    }

    /// Constant read off the payload for a named constant of the form.
    fn named_constant(&self, tag: FormTag, name: &str) -> Option<Q> {
        let alpha_axis = match tag {
            FormTag::Toroidal3 | FormTag::Toroidal5 | FormTag::TF1 | FormTag::Super1 => Some((1, 1)),
            FormTag::TF22 | FormTag::Super3 => Some((1, 2)),
            FormTag::Toroidal2 => Some((2, 2)),
            _ => None,
        };
        match name {
            "alpha" => alpha_axis.and_then(|(i, axis)| shifted_term(&self.jets[i], axis).map(|x| x.1)),
            "beta" if tag == FormTag::Toroidal3 => shifted_term(&self.jets[2], 2).map(|x| x.1),
            _ => None,
        }
    }
}

/// `e = i * ab + j * z` with i, j >= 0; returns i.
fn lattice_power(e: &ExpVec, ab: &ExpVec) -> Option<i64> {
    let i = e.0[0] / ab.0[0];
    (e.0[0] == i * ab.0[0] && e.0[1] == i * ab.0[1]).then_some(i)
}

/// Order series terms by total degree, ties lexicographic.
pub fn sort_series<T>(terms: &mut [(ExpVec, T)]) {
    terms.sort_by(|(a, _), (b, _)| a.degree().cmp(&b.degree()).then_with(|| a.cmp(b)));
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesMonomial {
    #[serde(with = "rational::as_string")]
    pub coef: Q,
    pub exp: ExpVec,
}

/// A germ `u, v` monomial, `w = Σ α_i M_i + N` at a 3-point.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreePointGerm {
    pub u_exp: ExpVec,
    pub v_exp: ExpVec,
    pub series_terms: Vec<SeriesMonomial>,
    pub n_exp: ExpVec,
    pub target_kind: PointKind,
}

impl ThreePointGerm {
    /// Builds the germ, sorting the series by degree.
    pub fn new(
        u_exp: ExpVec,
        v_exp: ExpVec,
        series: Vec<(Q, ExpVec)>,
        n_exp: ExpVec,
        target_kind: PointKind,
    ) -> Self {
        let mut g = ThreePointGerm {
            u_exp,
            v_exp,
            series_terms: series.into_iter().map(|(coef, exp)| SeriesMonomial { coef, exp }).collect(),
            n_exp,
            target_kind,
        };
        g.sort();
        g
    }

    fn sort(&mut self) {
        self.series_terms
            .sort_by(|a, b| a.exp.degree().cmp(&b.exp.degree()).then_with(|| a.exp.cmp(&b.exp)));
    }

    pub fn monomials(&self) -> Vec<ExpVec> {
        self.series_terms.iter().map(|t| t.exp.clone()).collect()
    }

    /// Violations of the rank, divisibility and ordering invariants.
    pub fn violations(&self) -> Vec<String> {
        let mut out = self.rank_violations();
        for (i, t) in self.series_terms.iter().enumerate() {
            if self.n_exp.divides(&t.exp) {
                out.push(format!("N divides M_{i}"));
            }
        }
        let sorted = self
            .series_terms
            .windows(2)
            .all(|w| (w[0].exp.degree(), &w[0].exp) <= (w[1].exp.degree(), &w[1].exp));
        if !sorted {
            out.push("series terms not sorted by degree".into());
        }
        out
    }

    /// Conditions needed for the lattice computations.
    pub fn rank_violations(&self) -> Vec<String> {
        let mut out = vec![];
        let vecs = [&self.u_exp, &self.v_exp, &self.n_exp]
            .into_iter()
            .chain(self.series_terms.iter().map(|t| &t.exp));
        if vecs.clone().any(|e| e.len() != NVARS) {
            out.push("exponent vectors must have length 3".into());
            return out;
        }
        if self.target_kind == PointKind::OnePoint {
            out.push("target must be a 2-point or a 3-point".into());
        }
        let uv = [self.u_exp.clone(), self.v_exp.clone()];
        if rank_of(&uv) != 2 {
            out.push("rank(u, v) = 2".into());
            return out;
        }
        for (i, t) in self.series_terms.iter().enumerate() {
            if t.coef.is_zero() {
                out.push(format!("zero coefficient on M_{i}"));
            }
            if rank_of(&[uv[0].clone(), uv[1].clone(), t.exp.clone()]) != 2 {
                out.push(format!("rank(u, v, M_{i}) = 2"));
            }
        }
        if rank_of(&[uv[0].clone(), uv[1].clone(), self.n_exp.clone()]) != 3 {
            out.push("rank(u, v, N) = 3".into());
        }
        out
    }

    pub fn check(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::MalformedGerm(v.join("; ")))
        }
    }

    /// Right-multiply every exponent vector by `sub`, re-sorting the series.
    pub fn apply_sub(&self, sub: &crate::lattice::SubMatrix) -> ThreePointGerm {
        let mut g = ThreePointGerm {
            u_exp: self.u_exp.apply_sub(sub),
            v_exp: self.v_exp.apply_sub(sub),
            series_terms: self
                .series_terms
                .iter()
                .map(|t| SeriesMonomial { coef: t.coef.clone(), exp: t.exp.apply_sub(sub) })
                .collect(),
            n_exp: self.n_exp.apply_sub(sub),
            target_kind: self.target_kind,
        };
        g.sort();
        g
    }

    /// Simultaneous permutation of the coordinate axes.
    pub fn permute_axes(&self, perm: [usize; 3]) -> ThreePointGerm {
        self.apply_sub(&crate::lattice::SubMatrix::permutation(perm))
    }

    pub fn swap_uv(&self) -> ThreePointGerm {
        let mut g = self.clone();
        std::mem::swap(&mut g.u_exp, &mut g.v_exp);
        g
    }

    /// Target chart `u = u1, v = u1 v1` of the blow-up of the 2-curve `u = v = 0`.
    pub fn target_two_curve_chart(&self, keep_u: bool) -> ThreePointGerm {
        let mut g = self.clone();
        if keep_u {
            g.v_exp = self.v_exp.sub(&self.u_exp);
        } else {
            g.u_exp = self.u_exp.sub(&self.v_exp);
        }
        g
    }

    pub fn from_germ(germ: &Germ) -> Result<ThreePointGerm> {
        let Some(order) = germ.matching_order(FormTag::Eq16) else {
            return Err(Error::MalformedGerm(germ.violations_for(FormTag::Eq16).join("; ")));
        };
        let jets = germ.jets();
        let [u, v, w] = order.map(|i| jets[i].clone());
        let u = single_term(&u).expect("checked");
        let v = single_term(&v).expect("checked");
        let (series, rest): (Vec<_>, Vec<_>) = w
            .terms()
            .map(|(e, c)| (e.clone(), c.clone()))
            .partition(|(e, _)| rank_of(&[u.clone(), v.clone(), e.clone()]) == 2);
        let n = rest[0].0.clone();
        Ok(ThreePointGerm::new(
            u,
            v,
            series.into_iter().map(|(e, c)| (c, e)).collect(),
            n,
            germ.target_kind,
        ))
    }

    pub fn to_germ(&self, trunc: u32) -> Germ {
        let mut w: Vec<(ExpVec, Q)> =
            self.series_terms.iter().map(|t| (t.exp.clone(), t.coef.clone())).collect();
        w.push((self.n_exp.clone(), Q::one()));
        let trunc = w.iter().map(|(e, _)| e.degree() as u32).max().unwrap_or(0).max(trunc);
        Germ::new(
            self.target_kind,
            PointKind::ThreePoint,
            Payload::mono(self.u_exp.clone()),
            Payload::mono(self.v_exp.clone()),
            Payload::from_terms(w, trunc),
        )
        .with_tag(FormTag::Eq16)
    }
}

/// Seeded template instances of the toroidal forms.
pub mod templates {
    use super::*;
    use crate::rational::q_frac;

    /// Nonzero rational with small numerator and denominator.
    pub fn nonzero_rational<R: Rng>(rng: &mut R) -> Q {
        loop {
            let n: i64 = rng.gen_range(-9..=9);
            let d: i64 = rng.gen_range(1..=5);
            if n != 0 {
                return q_frac(n, d);
            }
        }
    }

    fn exps<R: Rng>(rng: &mut R, n: usize, lo: i64) -> Vec<i64> {
        (0..n).map(|_| rng.gen_range(lo..=9)).collect()
    }

    /// A `ThreePointGerm` with exponents in [0, 9] and 0 to 4 series terms over a 2- or 3-point
    /// target. Over a 3-point target `M_0` divides the other `M_i` and `N`.
    pub fn three_point<R: Rng>(rng: &mut R, target: PointKind) -> ThreePointGerm {
        let rand_vec = |rng: &mut R| ExpVec::new(exps(rng, 3, 0));
        loop {
            let (u, v) = (rand_vec(rng), rand_vec(rng));
            if rank_of(&[u.clone(), v.clone()]) != 2 {
                continue;
            }
            let mut span = vec![];
            for i in 0..1000 {
                let e = ExpVec::from([i / 100, (i / 10) % 10, i % 10]);
                if !e.is_zero() && det3_rows(&u, &v, &e) == 0 {
                    span.push(e);
                }
            }
            let k = rng.gen_range(0..=4usize);
            let mut ms: Vec<ExpVec> = vec![];
            if k > 0 {
                let m0 = span[rng.gen_range(0..span.len())].clone();
                let pool: Vec<ExpVec> = match target {
                    PointKind::ThreePoint => span.iter().filter(|e| m0.divides(e) && **e != m0).cloned().collect(),
                    _ => span.iter().filter(|e| **e != m0).cloned().collect(),
                };
                ms.push(m0);
                for _ in 1..k {
                    if pool.is_empty() {
                        break;
                    }
                    let e = pool[rng.gen_range(0..pool.len())].clone();
                    if !ms.contains(&e) {
                        ms.push(e);
                    }
                }
            }
            let n = (0..200).map(|_| rand_vec(rng)).find(|n| {
                det3_rows(&u, &v, n) != 0
                    && (target != PointKind::ThreePoint || ms.is_empty() || ms[0].divides(n))
            });
            let Some(n) = n else { continue };
            let series = ms.into_iter().map(|e| (nonzero_rational(rng), e)).collect();
            let g = ThreePointGerm::new(u, v, series, n, target);
            if g.violations().is_empty() {
                return g;
            }
        }
    }

    /// Toroidal form `n` with exponents in [1, 9] and nonzero constants.
    pub fn toroidal<R: Rng>(n: u8, rng: &mut R) -> Germ {
        use PointKind::*;
        let tag = FormTag::toroidal(n).expect("form number in 1..=6");
        let g = match n {
            1 => loop {
                let e = exps(rng, 9, 1);
                let rows = [
                    ExpVec::new(e[0..3].to_vec()),
                    ExpVec::new(e[3..6].to_vec()),
                    ExpVec::new(e[6..9].to_vec()),
                ];
                if det3_rows(&rows[0], &rows[1], &rows[2]) != 0 {
                    let [a, b, c] = rows;
                    break Germ::new(ThreePoint, ThreePoint, Payload::mono(a), Payload::mono(b), Payload::mono(c));
                }
            },
            2 => loop {
                let e = exps(rng, 6, 1);
                if e[0] * e[3] - e[1] * e[2] != 0 {
                    let alpha = nonzero_rational(rng);
                    break Germ::new(
                        ThreePoint,
                        TwoPoint,
                        Payload::mono([e[0], e[1], 0]),
                        Payload::mono([e[2], e[3], 0]),
                        Payload::shifted([e[4], e[5], 0], 2, alpha.clone()),
                    )
                    .with_constant("alpha", alpha);
                }
            },
            3 => {
                let e = exps(rng, 3, 1);
                let (alpha, beta) = (nonzero_rational(rng), nonzero_rational(rng));
                Germ::new(
                    ThreePoint,
                    OnePoint,
                    Payload::mono([e[0], 0, 0]),
                    Payload::shifted([e[1], 0, 0], 1, alpha.clone()),
                    Payload::shifted([e[2], 0, 0], 2, beta.clone()),
                )
                .with_constant("alpha", alpha)
                .with_constant("beta", beta)
            }
            4 => loop {
                let e = exps(rng, 4, 1);
                if e[0] * e[3] - e[1] * e[2] != 0 {
                    break Germ::new(
                        TwoPoint,
                        TwoPoint,
                        Payload::mono([e[0], e[1], 0]),
                        Payload::mono([e[2], e[3], 0]),
                        Payload::mono([0, 0, 1]),
                    );
                }
            },
            5 => {
                let e = exps(rng, 2, 1);
                let alpha = nonzero_rational(rng);
                Germ::new(
                    TwoPoint,
                    OnePoint,
                    Payload::mono([e[0], 0, 0]),
                    Payload::shifted([e[1], 0, 0], 1, alpha.clone()),
                    Payload::mono([0, 0, 1]),
                )
                .with_constant("alpha", alpha)
            }
            6 => {
                let a = rng.gen_range(1..=9);
                Germ::new(
                    OnePoint,
                    OnePoint,
                    Payload::mono([a, 0, 0]),
                    Payload::mono([0, 1, 0]),
                    Payload::mono([0, 0, 1]),
                )
            }
            _ => unreachable!(),
        };
        g.with_tag(tag)
    }
}
