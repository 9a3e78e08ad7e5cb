//! 2-point and 3-point pre-relations, their strict transforms, and the resolver
//! for 3-point pre-relations by blow-ups of 2-curves.

use std::fmt;

use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::blowup::{target_chart_axis, target_chart_list, CenterKind, Chart, Side, TargetCenter};
use crate::error::{Error, Result};
use crate::lattice::{ExpVec, SubMatrix};
use crate::rational::{self, Q};
use crate::tree::{ChartTree, NodeStatus};

const PARAM: [&str; 3] = ["u", "v", "w"];

/// `w^e - lambda u^a v^b`; `a = b = None` encodes the degenerate `w = 0` relation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoPointPreRel {
    pub e: i64,
    pub a: Option<i64>,
    pub b: Option<i64>,
    #[serde(with = "rational::as_string")]
    pub lambda: Q,
}

impl TwoPointPreRel {
    pub fn new(e: i64, a: i64, b: i64, lambda: Q) -> Result<Self> {
        let r = TwoPointPreRel { e, a: Some(a), b: Some(b), lambda };
        r.check()?;
        Ok(r)
    }

    pub fn degenerate() -> Self {
        TwoPointPreRel { e: 1, a: None, b: None, lambda: Q::one() }
    }

    pub fn is_degenerate(&self) -> bool {
        self.a.is_none()
    }

    pub fn check(&self) -> Result<()> {
        match (self.a, self.b) {
            (None, None) => {
                if self.e != 1 || !self.lambda.is_one() {
                    return Err(Error::InvalidPreRelation("a=b=-inf requires e=1 and lambda=1".into()));
                }
            }
            (Some(a), Some(b)) => {
                if self.e <= 1 {
                    return Err(Error::InvalidPreRelation(format!("e={} must exceed 1", self.e)));
                }
                if a.gcd(&b).gcd(&self.e) != 1 {
                    return Err(Error::InvalidPreRelation(format!("gcd({a},{b},{}) != 1", self.e)));
                }
                if self.lambda.is_zero() {
                    return Err(Error::InvalidPreRelation("lambda must be nonzero".into()));
                }
            }
            _ => return Err(Error::InvalidPreRelation("a and b must both be finite or both -inf".into())),
        }
        Ok(())
    }
}

/// `u^a v^b w^c = lambda`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ThreePointPreRel {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    #[serde(with = "rational::as_string")]
    pub lambda: Q,
}

impl ThreePointPreRel {
    pub fn new(a: i64, b: i64, c: i64, lambda: Q) -> Result<Self> {
        let r = ThreePointPreRel { a, b, c, lambda };
        r.check()?;
        Ok(r)
    }

    fn from_exps(e: [i64; 3], lambda: Q) -> Self {
        ThreePointPreRel { a: e[0], b: e[1], c: e[2], lambda }
    }

    pub fn exps(&self) -> [i64; 3] {
        [self.a, self.b, self.c]
    }

    pub fn check(&self) -> Result<()> {
        let e = self.exps();
        if self.a.gcd(&self.b).gcd(&self.c) != 1 {
            return Err(Error::InvalidPreRelation(format!("gcd{:?} != 1", e)));
        }
        if !mixed_signs(&e) {
            return Err(Error::InvalidPreRelation(format!("{:?} needs min < 0 < max", e)));
        }
        if self.lambda.is_zero() {
            return Err(Error::InvalidPreRelation("lambda must be nonzero".into()));
        }
        Ok(())
    }
}

fn mixed_signs(e: &[i64; 3]) -> bool {
    e.iter().any(|&x| x < 0) && e.iter().any(|&x| x > 0)
}

/// `F = lead - coef * rest` with monomials in `u, v, w`; `unit` when `F(q) != 0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurfaceForm {
    pub lead: ExpVec,
    #[serde(with = "rational::as_string")]
    pub coef: Q,
    pub rest: ExpVec,
    pub unit: bool,
}

impl SurfaceForm {
    fn binomial(lead: [i64; 3], coef: Q, rest: [i64; 3]) -> Self {
        let unit = lead == [0; 3] || rest == [0; 3];
        SurfaceForm { lead: ExpVec::from(lead), coef, rest: ExpVec::from(rest), unit }
    }
}

fn fmt_mono(e: &ExpVec) -> String {
    let parts: Vec<String> = e
        .0
        .iter()
        .enumerate()
        .filter(|(_, &k)| k != 0)
        .map(|(i, &k)| if k == 1 { PARAM[i].to_string() } else { format!("{}^{}", PARAM[i], k) })
        .collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("*")
    }
}

impl fmt::Display for SurfaceForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coef.is_zero() {
            return write!(f, "F = {}", fmt_mono(&self.lead));
        }
        write!(f, "F = {} - {}", fmt_mono(&self.lead), rational::fmt_q(&self.coef))?;
        if !self.rest.is_zero() {
            write!(f, "*{}", fmt_mono(&self.rest))?;
        }
        Ok(())
    }
}

pub fn f_form_two_point(r: &TwoPointPreRel) -> SurfaceForm {
    let e = r.e;
    let (a, b) = match (r.a, r.b) {
        (Some(a), Some(b)) => (a, b),
        _ => return SurfaceForm { lead: ExpVec::from([0, 0, 1]), coef: Q::zero(), rest: ExpVec::zero(3), unit: false },
    };
    let l = r.lambda.clone();
    if a >= 0 && b >= 0 && a + b > 0 {
        SurfaceForm::binomial([0, 0, e], l, [a, b, 0])
    } else if a < 0 && b > 0 {
        SurfaceForm::binomial([-a, 0, e], l, [0, b, 0])
    } else if b < 0 && a > 0 {
        SurfaceForm::binomial([0, -b, e], l, [a, 0, 0])
    } else {
        SurfaceForm::binomial([-a, -b, e], l, [0, 0, 0])
    }
}

pub fn f_form_three_point(r: &ThreePointPreRel) -> SurfaceForm {
    let e = r.exps();
    let pos: Vec<usize> = (0..3).filter(|&i| e[i] > 0).collect();
    if pos.len() == 1 {
        let k = pos[0];
        let mut lead = [0; 3];
        lead[k] = e[k];
        let rest = std::array::from_fn(|i| if i == k { 0 } else { -e[i] });
        SurfaceForm::binomial(lead, r.lambda.clone(), rest)
    } else {
        let k = (0..3).find(|&i| e[i] < 0).unwrap_or(2);
        let mut lead = [0; 3];
        lead[k] = -e[k];
        let rest = std::array::from_fn(|i| if i == k { 0 } else { e[i] });
        SurfaceForm::binomial(lead, r.lambda.recip(), rest)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PreRel {
    TwoPoint(TwoPointPreRel),
    ThreePoint(ThreePointPreRel),
}

impl PreRel {
    pub fn check(&self) -> Result<()> {
        match self {
            PreRel::TwoPoint(r) => r.check(),
            PreRel::ThreePoint(r) => r.check(),
        }
    }
}

pub fn f_form(r: &PreRel) -> SurfaceForm {
    match r {
        PreRel::TwoPoint(r) => f_form_two_point(r),
        PreRel::ThreePoint(r) => f_form_three_point(r),
    }
}

/// `F = w^cbar - lambda u^abar v^bbar` in the roles `role_map = [u, v, w]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NormalForm3 {
    pub abar: i64,
    pub bbar: i64,
    pub cbar: i64,
    #[serde(with = "rational::as_string")]
    pub lambda: Q,
    pub role_map: [usize; 3],
}

impl NormalForm3 {
    pub fn check(&self) -> Result<()> {
        let ok = self.abar >= 0
            && self.bbar >= 0
            && self.cbar > 0
            && (self.abar > 0 || self.cbar <= self.bbar)
            && (self.bbar > 0 || self.cbar <= self.abar);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidPreRelation(format!("({},{},{}) is not a normal form", self.abar, self.bbar, self.cbar)))
        }
    }

    /// The pre-relation `u^abar v^bbar w^-cbar = 1/lambda` in role coordinates.
    pub fn to_prerel(&self) -> ThreePointPreRel {
        ThreePointPreRel { a: self.abar, b: self.bbar, c: -self.cbar, lambda: self.lambda.recip() }
    }

    /// `(cbar, abar + bbar)`, the descent key.
    pub fn key(&self) -> (i64, i64) {
        (self.cbar, self.abar + self.bbar)
    }
}

pub fn normalize3(r: &ThreePointPreRel) -> Result<NormalForm3> {
    r.check()?;
    let e = r.exps();
    let lone = |k: usize| {
        (e[k] > 0 && (0..3).all(|i| i == k || e[i] <= 0)) || (e[k] < 0 && (0..3).all(|i| i == k || e[i] >= 0))
    };
    let k = (0..3)
        .filter(|&k| lone(k))
        .min_by_key(|&k| (e[k].abs(), std::cmp::Reverse(k)))
        .expect("mixed signs leave a lone-sign entry");
    let others: Vec<usize> = (0..3).filter(|&i| i != k).collect();
    let nf = if e[k] > 0 {
        NormalForm3 { abar: -e[others[0]], bbar: -e[others[1]], cbar: e[k], lambda: r.lambda.clone(), role_map: [others[0], others[1], k] }
    } else {
        NormalForm3 { abar: e[others[0]], bbar: e[others[1]], cbar: -e[k], lambda: r.lambda.recip(), role_map: [others[0], others[1], k] }
    };
    nf.check()?;
    Ok(nf)
}

/// Branches of the resolver's case analysis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseTag {
    /// `abar + bbar < cbar`.
    SmallSum,
    /// `abar >= cbar`.
    ALarge,
    /// `bbar >= cbar`.
    BLarge,
    /// `abar + bbar >= cbar` with `abar, bbar < cbar`.
    Final,
}

impl CaseTag {
    pub fn of(nf: &NormalForm3) -> CaseTag {
        if nf.abar >= nf.cbar {
            CaseTag::ALarge
        } else if nf.bbar >= nf.cbar {
            CaseTag::BLarge
        } else if nf.abar + nf.bbar < nf.cbar {
            CaseTag::SmallSum
        } else {
            CaseTag::Final
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateEntry {
    pub parent: usize,
    pub node: usize,
    pub case: CaseTag,
    pub chart: String,
    pub before: (i64, i64),
    pub after: Option<(i64, i64)>,
    /// Exponents of the strict transform in the parent's roles, before renormalizing.
    pub strict_transform: [i64; 3],
    pub outcome: NodeStatus,
}

impl CertificateEntry {
    /// `cbar` drops, or ties while `abar + bbar` drops, or the point exits.
    pub fn descends(&self) -> bool {
        match self.after {
            None => true,
            Some((c, s)) => c < self.before.0 || (c == self.before.0 && s < self.before.1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolveCertificate {
    pub steps: Vec<CertificateEntry>,
}

impl ResolveCertificate {
    pub fn holds(&self) -> bool {
        self.steps.iter().all(CertificateEntry::descends)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepChild {
    pub chart: Chart,
    pub prerel: ThreePointPreRel,
    pub normal: Option<NormalForm3>,
    pub strict_transform: [i64; 3],
}

fn center_of(i: usize, j: usize) -> TargetCenter {
    match (i.min(j), i.max(j)) {
        (0, 1) => TargetCenter::CurveUV,
        (0, 2) => TargetCenter::CurveUW,
        _ => TargetCenter::CurveVW,
    }
}

/// The proof's blow-up for one pre-relation, in its own coordinates.
fn step_children(r: &ThreePointPreRel) -> Result<(NormalForm3, CaseTag, Vec<StepChild>)> {
    let nf = normalize3(r)?;
    let case = CaseTag::of(&nf);
    let keep = match case {
        CaseTag::BLarge => nf.role_map[1],
        _ => nf.role_map[0],
    };
    let w_axis = nf.role_map[2];
    let charts = target_chart_list(center_of(keep, w_axis));
    let mut children = vec![];
    for axis in [keep, w_axis] {
        let chart = charts
            .iter()
            .find(|c| target_chart_axis(c) == Some(axis))
            .cloned()
            .expect("both charts of a 2-curve blow-up");
        let m = chart.monomial().expect("monomial chart");
        let e = apply(&r.exps(), &m);
        let prerel = ThreePointPreRel::from_exps(e, r.lambda.clone());
        let normal = if mixed_signs(&e) { Some(normalize3(&prerel)?) } else { None };
        let strict_transform = role_exps(&e, &nf);
        children.push(StepChild { chart, prerel, normal, strict_transform });
    }
    Ok((nf, case, children))
}

fn apply(e: &[i64; 3], m: &SubMatrix) -> [i64; 3] {
    let v = ExpVec::from(*e).apply_sub(m);
    [v.0[0], v.0[1], v.0[2]]
}

/// `F^1 = w^c - (..) u^a v^b` read off in the parent's roles as `(a, b, c)`.
fn role_exps(e: &[i64; 3], parent: &NormalForm3) -> [i64; 3] {
    let [u, v, w] = parent.role_map;
    if e[w] < 0 {
        [e[u], e[v], -e[w]]
    } else {
        [-e[u], -e[v], e[w]]
    }
}

/// One resolver step on a normal form, in role coordinates.
pub fn resolve3_step(nf: &NormalForm3) -> Result<Vec<StepChild>> {
    nf.check()?;
    Ok(step_children(&nf.to_prerel())?.2)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolveNode {
    pub prerel: ThreePointPreRel,
    pub normal: Option<NormalForm3>,
}

impl fmt::Display for ResolveNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = &self.prerel;
        write!(f, "({},{},{}) lambda={}", r.a, r.b, r.c, rational::fmt_q(&r.lambda))?;
        if let Some(nf) = &self.normal {
            write!(f, " normal=({},{},{})", nf.abar, nf.bbar, nf.cbar)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub tree: ChartTree<ResolveNode>,
    pub certificate: ResolveCertificate,
}

impl Resolution {
    pub fn all_leaves_closed(&self) -> bool {
        self.tree
            .leaves()
            .all(|n| matches!(n.status, NodeStatus::Resolved | NodeStatus::Exited) && n.data.normal.is_none())
    }
}

/// Blows up 2-curves until every branch leaves the support of the strict transform.
pub fn resolve3(r: &ThreePointPreRel, max_steps: usize) -> Result<Resolution> {
    let root = ResolveNode { prerel: r.clone(), normal: Some(normalize3(r)?) };
    let mut tree = ChartTree::new(root);
    let mut steps = vec![];
    let mut queue = std::collections::VecDeque::from([0usize]);
    let mut expanded = 0;
    while let Some(id) = queue.pop_front() {
        if expanded == max_steps {
            return Err(Error::StepBudgetExceeded(max_steps));
        }
        expanded += 1;
        let parent = tree.node(id).data.prerel.clone();
        let (nf, case, children) = step_children(&parent)?;
        for child in children {
            let status = if child.normal.is_some() { NodeStatus::Interior } else { NodeStatus::Exited };
            let after = child.normal.as_ref().map(NormalForm3::key);
            let label = child.chart.label.clone();
            let node = tree.push(id, child.chart, ResolveNode { prerel: child.prerel, normal: child.normal }, status);
            steps.push(CertificateEntry {
                parent: id,
                node,
                case,
                chart: label,
                before: nf.key(),
                after,
                strict_transform: child.strict_transform,
                outcome: status,
            });
            if status == NodeStatus::Interior {
                queue.push_back(node);
            }
        }
    }
    Ok(Resolution { tree, certificate: ResolveCertificate { steps } })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum Transformed {
    Kept { prerel: PreRel },
    Dropped,
}

/// Strict transform of a pre-relation under a target chart.
pub fn transform_prerel(r: &PreRel, chart: &Chart) -> Result<Transformed> {
    if chart.side != Side::Target {
        return Err(Error::InvalidCenterForm("pre-relations transform under target charts".into()));
    }
    let m = chart
        .monomial()
        .ok_or_else(|| Error::InvalidCenterForm("target charts are monomial".into()))?;
    let k = target_chart_axis(chart).ok_or_else(|| Error::InvalidCenterForm("identity chart".into()))?;
    match r {
        PreRel::ThreePoint(r) => {
            r.check()?;
            if chart.center_kind != CenterKind::TwoCurve {
                return Err(Error::InvalidCenterForm("3-point pre-relations admit only 2-curve centers".into()));
            }
            let e = apply(&r.exps(), &m);
            if mixed_signs(&e) {
                Ok(Transformed::Kept { prerel: PreRel::ThreePoint(ThreePointPreRel::from_exps(e, r.lambda.clone())) })
            } else {
                Ok(Transformed::Dropped)
            }
        }
        PreRel::TwoPoint(r) => {
            r.check()?;
            if !matches!(chart.center_kind, CenterKind::TwoCurve | CenterKind::ThreePoint) {
                return Err(Error::InvalidCenterForm("unsupported center for a 2-point pre-relation".into()));
            }
            if k == 2 {
                return Ok(Transformed::Dropped);
            }
            let (Some(a), Some(b)) = (r.a, r.b) else {
                return Ok(Transformed::Kept { prerel: PreRel::TwoPoint(r.clone()) });
            };
            let ab = ExpVec::from([a, b, 0]).apply_sub(&m);
            let w_excess = m.0[2][k];
            let mut out = [ab.0[0], ab.0[1]];
            out[k] -= r.e * w_excess;
            Ok(Transformed::Kept {
                prerel: PreRel::TwoPoint(TwoPointPreRel { e: r.e, a: Some(out[0]), b: Some(out[1]), lambda: r.lambda.clone() }),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, q_frac};

    fn tp(a: i64, b: i64, c: i64) -> ThreePointPreRel {
        ThreePointPreRel::new(a, b, c, q(2)).unwrap()
    }

    fn nf(abar: i64, bbar: i64, cbar: i64) -> NormalForm3 {
        NormalForm3 { abar, bbar, cbar, lambda: q(1), role_map: [0, 1, 2] }
    }

    // Smallest depth over every sequence of 2-curve blow-ups.
    fn min_depth(r: [i64; 3], limit: usize) -> usize {
        if !mixed_signs(&r) {
            return 0;
        }
        if limit == 0 {
            return usize::MAX / 2;
        }
        let mut best = usize::MAX / 2;
        for i in 0..3 {
            for j in i + 1..3 {
                let mut p = r;
                p[i] += r[j];
                let mut q = r;
                q[j] += r[i];
                best = best.min(1 + min_depth(p, limit - 1).max(min_depth(q, limit - 1)));
            }
        }
        best
    }

    #[test]
    fn f_form_examples() {
        let f = f_form_three_point(&tp(-1, -1, 2));
        assert_eq!(f.to_string(), "F = w^2 - 2*u*v");
        let f = f_form_three_point(&tp(2, -1, 3));
        assert_eq!(f.to_string(), "F = v - 1/2*u^2*w^3");
        let r = TwoPointPreRel::new(3, -1, -2, q(1)).unwrap();
        assert!(f_form_two_point(&r).unit);
        assert_eq!(f_form_two_point(&TwoPointPreRel::degenerate()).to_string(), "F = w");
    }

    #[test]
    fn normalize_examples() {
        let n = normalize3(&tp(1, 1, -3)).unwrap();
        assert_eq!((n.abar, n.bbar, n.cbar), (1, 1, 3));
        assert_eq!(n.lambda, q_frac(1, 2));
        let n = normalize3(&tp(0, 1, -1)).unwrap();
        assert_eq!((n.abar, n.bbar, n.cbar), (0, 1, 1));
        let n = normalize3(&tp(5, -1, -1)).unwrap();
        assert_eq!((n.abar, n.bbar, n.cbar), (1, 1, 5));
        assert_eq!(n.role_map, [1, 2, 0]);
        assert_eq!(n.lambda, q(2));
        assert!(ThreePointPreRel::new(2, 4, -6, q(1)).is_err());
        assert!(ThreePointPreRel::new(1, 1, 1, q(1)).is_err());
    }

    #[test]
    fn step_examples() {
        let kids = resolve3_step(&nf(1, 1, 3)).unwrap();
        let cs: Vec<i64> = kids.iter().map(|k| k.normal.as_ref().unwrap().cbar).collect();
        assert_eq!(cs, vec![1, 2]);

        let kids = resolve3_step(&nf(3, 0, 2)).unwrap();
        assert_eq!(kids[0].strict_transform, [1, 0, 2]);
        assert_eq!(kids[0].normal.as_ref().unwrap().cbar, 1);
        assert!(kids[1].normal.is_none());

        let kids = resolve3_step(&nf(2, 2, 3)).unwrap();
        let cs: Vec<i64> = kids.iter().map(|k| k.normal.as_ref().unwrap().cbar).collect();
        assert_eq!(cs, vec![2, 1]);
    }

    #[test]
    fn resolve_examples() {
        let res = resolve3(&tp(1, 1, -3), 100).unwrap();
        assert!(res.all_leaves_closed());
        assert!(res.certificate.holds());
        assert_eq!(res.tree.depth(), 6);
        assert_eq!(min_depth([1, 1, -3], 8), 6);
        let res = resolve3(&tp(0, 1, -1), 100).unwrap();
        assert_eq!(res.tree.len(), 3);
        assert!(res.all_leaves_closed());
        assert!(matches!(resolve3(&tp(7, 5, -12), 1), Err(Error::StepBudgetExceeded(1))));
    }

    #[test]
    fn transforms() {
        let uw = target_chart_list(TargetCenter::CurveUW);
        let r = PreRel::ThreePoint(tp(-1, -1, 2));
        match transform_prerel(&r, &uw[0]).unwrap() {
            Transformed::Kept { prerel: PreRel::ThreePoint(t) } => assert_eq!(t.exps(), [1, -1, 2]),
            other => panic!("{other:?}"),
        }
        let point = target_chart_list(TargetCenter::Point);
        assert!(matches!(transform_prerel(&r, &point[0]), Err(Error::InvalidCenterForm(_))));

        let r2 = PreRel::TwoPoint(TwoPointPreRel::new(2, 1, 1, q(3)).unwrap());
        match transform_prerel(&r2, &point[0]).unwrap() {
            Transformed::Kept { prerel: PreRel::TwoPoint(t) } => assert_eq!((t.e, t.a, t.b), (2, Some(0), Some(1))),
            other => panic!("{other:?}"),
        }
        assert_eq!(transform_prerel(&r2, &point[2]).unwrap(), Transformed::Dropped);
        let uv = target_chart_list(TargetCenter::CurveUV);
        match transform_prerel(&r2, &uv[0]).unwrap() {
            Transformed::Kept { prerel: PreRel::TwoPoint(t) } => assert_eq!((t.a, t.b), (Some(2), Some(1))),
            other => panic!("{other:?}"),
        }
        let d = PreRel::TwoPoint(TwoPointPreRel::degenerate());
        assert_eq!(transform_prerel(&d, &uv[1]).unwrap(), Transformed::Kept { prerel: d.clone() });
    }
}
