//! Blow-up charts on the domain and target sides, and the `A(C)` descent.

use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::germ::{Germ, Payload, PointKind, ThreePointGerm};
use crate::lattice::{ExpVec, SubMatrix};
use crate::rational::{self, Q};
use crate::series::{Jet, ShiftFactor, SubstRow, Substitution, TruncSeries, NVARS};

const COORD: [&str; 3] = ["x", "y", "z"];
const PARAM: [&str; 3] = ["u", "v", "w"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Domain,
    Target,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CenterKind {
    TwoCurve,
    TwoPoint,
    ThreePoint,
    CurveThrough1Point,
    CurveThrough2Point,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chart {
    pub side: Side,
    pub center_kind: CenterKind,
    pub sub: Substitution,
    pub label: String,
}

impl Chart {
    /// Monomial part of the substitution, if the chart is not translated.
    pub fn monomial(&self) -> Option<SubMatrix> {
        self.sub.as_monomial()
    }

    /// Substitution written in the chart's own variable names.
    pub fn substitution_text(&self) -> String {
        let names = match self.side {
            Side::Domain => COORD,
            Side::Target => PARAM,
        };
        render_substitution(&self.sub, names)
    }
}

fn render_substitution(sub: &Substitution, names: [&str; 3]) -> String {
    let mut out = vec![];
    for (i, row) in sub.rows.iter().enumerate() {
        let mut parts = vec![];
        for (j, &e) in row.mono.0.iter().enumerate() {
            match e {
                0 => {}
                1 => parts.push(format!("{}1", names[j])),
                _ => parts.push(format!("{}1^{}", names[j], e)),
            }
        }
        if let Some(f) = &row.factor {
            if f.shift.is_zero() {
                parts.push(format!("{}1", names[f.axis]));
            } else {
                parts.push(format!("({}1+{})", names[f.axis], rational::fmt_q(&f.shift)));
            }
        }
        let rhs = if parts.is_empty() { "1".to_string() } else { parts.join("*") };
        out.push(format!("{}={}", names[i], rhs));
    }
    out.join(", ")
}

/// Inverse of [`Chart::substitution_text`].
pub fn parse_substitution(text: &str, side: Side) -> Result<Substitution> {
    let names = match side {
        Side::Domain => COORD,
        Side::Target => PARAM,
    };
    let axis_of = |name: &str| -> Result<usize> {
        names
            .iter()
            .position(|n| name == format!("{n}1"))
            .ok_or_else(|| Error::Parse(format!("unknown chart variable {name:?}")))
    };
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(Error::Parse(format!("substitution needs three rows: {text:?}")));
    }
    let mut rows = vec![];
    for (i, part) in parts.iter().enumerate() {
        let (lhs, rhs) = part
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("bad substitution row {part:?}")))?;
        if lhs.trim() != names[i] {
            return Err(Error::Parse(format!("row {i} must define {}", names[i])));
        }
        let mut mono = ExpVec::zero(NVARS);
        let mut factor = None;
        for f in rhs.trim().split('*').map(str::trim) {
            if f == "1" {
                continue;
            }
            if let Some(inner) = f.strip_prefix('(').and_then(|f| f.strip_suffix(')')) {
                let (var, shift) = inner
                    .split_once('+')
                    .ok_or_else(|| Error::Parse(format!("bad translated factor {f:?}")))?;
                factor = Some(ShiftFactor { axis: axis_of(var.trim())?, shift: rational::parse_q(shift)? });
                continue;
            }
            let (var, exp) = match f.split_once('^') {
                Some((v, e)) => (v, e.parse::<i64>().map_err(|_| Error::Parse(format!("bad exponent in {f:?}")))?),
                None => (f, 1),
            };
            mono.0[axis_of(var)?] += exp;
        }
        rows.push(SubstRow { mono, factor });
    }
    let rows: [SubstRow; 3] = rows.try_into().expect("three rows");
    Ok(Substitution { rows })
}

impl fmt::Display for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]", self.label, self.substitution_text())
    }
}

/// A domain center through the origin of the germ's coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainCenter {
    /// The 2-curve `x_i = x_j = 0` (both boundary coordinates).
    TwoCurve(usize, usize),
    /// The point itself (a 2-point or a 3-point).
    Point,
    /// The curve `x_i = x_j = 0` with `x_i` on the boundary and `x_j` not.
    Curve(usize, usize),
}

impl DomainCenter {
    pub fn parse(s: &str) -> Result<DomainCenter> {
        let axis = |c: &str| match c.trim() {
            "x" => Ok(0),
            "y" => Ok(1),
            "z" => Ok(2),
            other => Err(Error::Parse(format!("unknown coordinate {other:?}"))),
        };
        let s = s.trim();
        if s == "point" {
            return Ok(DomainCenter::Point);
        }
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("center {s:?}: expected point, 2curve:a,b or curve:a,b")))?;
        let (a, b) = rest
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("center {s:?}: expected two coordinates")))?;
        let (a, b) = (axis(a)?, axis(b)?);
        match kind {
            "2curve" => Ok(DomainCenter::TwoCurve(a, b)),
            "curve" => Ok(DomainCenter::Curve(a, b)),
            _ => Err(Error::Parse(format!("unknown center kind {kind:?}"))),
        }
    }

    fn axes(&self) -> Vec<usize> {
        match *self {
            DomainCenter::Point => vec![0, 1, 2],
            DomainCenter::TwoCurve(i, j) | DomainCenter::Curve(i, j) => {
                let mut v = vec![i, j];
                v.sort_unstable();
                v
            }
        }
    }

    fn kind_at(&self, domain: PointKind) -> Result<CenterKind> {
        let n = domain.count();
        let bad = |m: &str| Err(Error::InvalidCenterForm(m.to_string()));
        match *self {
            DomainCenter::TwoCurve(i, j) => {
                if i == j || i >= n || j >= n {
                    return bad("a 2-curve needs two distinct boundary coordinates");
                }
                Ok(CenterKind::TwoCurve)
            }
            DomainCenter::Point => match domain {
                PointKind::TwoPoint => Ok(CenterKind::TwoPoint),
                PointKind::ThreePoint => Ok(CenterKind::ThreePoint),
                PointKind::OnePoint => bad("point centers must be 2-points or 3-points"),
            },
            DomainCenter::Curve(i, j) => {
                if i >= n || j < n || j >= NVARS {
                    return bad("curve centers need one boundary and one free coordinate");
                }
                match domain {
                    PointKind::OnePoint => Ok(CenterKind::CurveThrough1Point),
                    PointKind::TwoPoint => Ok(CenterKind::CurveThrough2Point),
                    PointKind::ThreePoint => bad("no free coordinate at a 3-point"),
                }
            }
        }
    }

    fn text(&self) -> String {
        match *self {
            DomainCenter::Point => "point".into(),
            DomainCenter::TwoCurve(i, j) | DomainCenter::Curve(i, j) => {
                format!("{}={}=0", COORD[i], COORD[j])
            }
        }
    }
}

/// Raw chart: distinguished coordinate `k` of the center, shifts for the others.
fn raw_chart(axes: &[usize], k: usize, shifts: &[(usize, Q)]) -> Substitution {
    let rows = std::array::from_fn(|i| {
        let mut mono = ExpVec::unit(NVARS, i);
        let mut factor = None;
        if axes.contains(&i) && i != k {
            mono = ExpVec::unit(NVARS, k);
            match shifts.iter().find(|(a, _)| *a == i) {
                Some((_, s)) if !s.is_zero() => {
                    factor = Some(ShiftFactor { axis: i, shift: s.clone() });
                }
                _ => mono.0[i] += 1,
            }
        }
        SubstRow { mono, factor }
    });
    Substitution { rows }
}

/// Boundary coordinates after the chart, and the relabeling that puts them first.
fn boundary_after(sub: &Substitution, old_boundary: usize) -> (usize, [usize; 3]) {
    let mut is_boundary = [false; 3];
    for row in sub.rows.iter().take(old_boundary) {
        for (j, &e) in row.mono.0.iter().enumerate() {
            if e > 0 {
                is_boundary[j] = true;
            }
        }
    }
    let order: Vec<usize> = (0..3)
        .filter(|&j| is_boundary[j])
        .chain((0..3).filter(|&j| !is_boundary[j]))
        .collect();
    let mut perm = [0; 3];
    for (pos, &j) in order.iter().enumerate() {
        perm[j] = pos;
    }
    (is_boundary.iter().filter(|&&b| b).count(), perm)
}

/// Enumerate the monomial charts and the translated charts built from `constants`.
fn domain_substitutions(center: &DomainCenter, constants: &[Q]) -> Vec<(Substitution, String)> {
    let axes = center.axes();
    let mut out = vec![];
    let mut values = vec![Q::zero()];
    for c in constants {
        if !c.is_zero() && !values.contains(c) {
            values.push(c.clone());
        }
    }
    for (pos, &k) in axes.iter().enumerate() {
        // Points of the exceptional divisor belong to the first chart whose coordinate is nonzero.
        let later: Vec<usize> = axes[pos + 1..].to_vec();
        let mut assignments: Vec<Vec<(usize, Q)>> = vec![vec![]];
        for &a in &later {
            assignments = assignments
                .into_iter()
                .flat_map(|prefix| {
                    values.iter().map(move |v| {
                        let mut p = prefix.clone();
                        p.push((a, v.clone()));
                        p
                    })
                })
                .collect();
        }
        for shifts in assignments {
            let translated: Vec<&(usize, Q)> = shifts.iter().filter(|(_, s)| !s.is_zero()).collect();
            let mut label = format!("{} / {}-chart", center.text(), COORD[k]);
            if !translated.is_empty() {
                let t: Vec<String> = translated
                    .iter()
                    .map(|(a, s)| format!("{}1+{}", COORD[*a], rational::fmt_q(s)))
                    .collect();
                label.push_str(&format!(" at {}", t.join(", ")));
            }
            out.push((raw_chart(&axes, k, &shifts), label));
        }
    }
    out
}

/// Substitute a chart into the payload and refactor it as monomial times series.
pub fn transform_payload(p: &Payload, sub: &Substitution, trunc: u32) -> Result<Payload> {
    repayload(&p.to_jet().substitute(sub), trunc)
}

pub fn repayload(jet: &Jet, trunc: u32) -> Result<Payload> {
    let Some(g) = jet.gcd_monomial() else {
        return Err(Error::TruncationInsufficient(format!(
            "no terms known through degree {}",
            jet.valid()
        )));
    };
    let quotient: Vec<(ExpVec, Q)> = jet.terms().map(|(e, c)| (e.sub(&g), c.clone())).collect();
    if jet.is_exact() {
        if let [(_, c)] = quotient.as_slice() {
            return Ok(Payload {
                exp: g,
                coef: if c.is_one() { None } else { Some(c.clone()) },
                series: None,
            });
        }
        let top = quotient.iter().map(|(e, _)| e.degree()).max().unwrap_or(0) as u32;
        return Ok(Payload::with_series(g, TruncSeries::new(quotient, trunc.max(top))));
    }
    let window = jet.valid() - g.degree();
    if window < 0 {
        return Err(Error::TruncationInsufficient(format!(
            "series window ends at degree {} below the monomial factor {g}",
            jet.valid()
        )));
    }
    let t = (window as u64).min(trunc as u64) as i64;
    let kept: Vec<(ExpVec, Q)> = quotient.into_iter().filter(|(e, _)| e.degree() <= t).collect();
    if kept.is_empty() {
        return Err(Error::TruncationInsufficient(format!(
            "no series terms of degree <= {t} after the chart"
        )));
    }
    Ok(Payload::with_series(g, TruncSeries::new(kept, t as u32)))
}

/// Apply a domain substitution to every payload.
pub fn transform_germ(germ: &Germ, sub: &Substitution, domain: PointKind, trunc: u32) -> Result<Germ> {
    let mut g = Germ::new(
        germ.target_kind,
        domain,
        transform_payload(&germ.u, sub, trunc)?,
        transform_payload(&germ.v, sub, trunc)?,
        transform_payload(&germ.w, sub, trunc)?,
    );
    g.form_tag = Some(g.classify()?);
    Ok(g)
}

/// All charts of the blow-up of `center`, with the transformed germs.
///
/// Translated charts use the nonzero entries of `constants`.
pub fn domain_charts(
    center: &DomainCenter,
    germ: &Germ,
    constants: &[Q],
    trunc: u32,
) -> Result<Vec<(Chart, Germ)>> {
    germ.check()?;
    let kind = center.kind_at(germ.domain_kind)?;
    let mut out = vec![];
    for (raw, label) in domain_substitutions(center, constants) {
        let (count, perm) = boundary_after(&raw, germ.domain_kind.count());
        let sub = raw.permute_new(perm);
        if let Some(m) = sub.as_monomial() {
            m.check_chart()?;
        }
        let child = transform_germ(germ, &sub, PointKind::from_count(count)?, trunc)?;
        out.push((Chart { side: Side::Domain, center_kind: kind, sub, label }, child));
    }
    Ok(out)
}

/// Monomial domain charts only, as substitution matrices.
pub fn monomial_domain_charts(center: &DomainCenter, domain: PointKind) -> Result<Vec<SubMatrix>> {
    center.kind_at(domain)?;
    Ok(domain_substitutions(center, &[])
        .into_iter()
        .map(|(raw, _)| {
            let (_, perm) = boundary_after(&raw, domain.count());
            raw.permute_new(perm).as_monomial().expect("monomial chart")
        })
        .collect())
}

/// Admissible target centers: the point, or the curves `u=v=0`, `u=w=0`, `v=w=0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TargetCenter {
    Point,
    CurveUV,
    CurveUW,
    CurveVW,
}

impl TargetCenter {
    /// Forms 1, 2, 3 are `u=v=w=0`, `u=v=0`, `u=w=0`.
    pub fn from_form(n: u8) -> Result<TargetCenter> {
        match n {
            1 => Ok(TargetCenter::Point),
            2 => Ok(TargetCenter::CurveUV),
            3 => Ok(TargetCenter::CurveUW),
            _ => Err(Error::InvalidCenterForm(format!("center form {n} (expected 1, 2 or 3)"))),
        }
    }

    pub fn axes(self) -> Vec<usize> {
        match self {
            TargetCenter::Point => vec![0, 1, 2],
            TargetCenter::CurveUV => vec![0, 1],
            TargetCenter::CurveUW => vec![0, 2],
            TargetCenter::CurveVW => vec![1, 2],
        }
    }

    fn text(self) -> String {
        let a: Vec<&str> = self.axes().iter().map(|&i| PARAM[i]).collect();
        format!("{}=0", a.join("="))
    }
}

/// The monomial charts of a target blow-up; both orientations are emitted.
pub fn target_chart_list(center: TargetCenter) -> Vec<Chart> {
    let axes = center.axes();
    let kind = if axes.len() == 3 { CenterKind::ThreePoint } else { CenterKind::TwoCurve };
    axes.iter()
        .map(|&k| Chart {
            side: Side::Target,
            center_kind: kind,
            sub: raw_chart(&axes, k, &[]),
            label: format!("{} / {}-chart", center.text(), PARAM[k]),
        })
        .collect()
}

/// Distinguished parameter of a target chart (the exceptional one).
pub fn target_chart_axis(chart: &Chart) -> Option<usize> {
    let m = chart.monomial()?;
    (0..3).find(|&k| (0..3).any(|i| i != k && m.0[i][k] == 1))
}

/// Target 2-curve charts `u=u1, v=u1 v1` and `u=u1 v1, v=v1` on a 3-point germ over a 2-point.
pub fn target_charts(germ: &ThreePointGerm, center: TargetCenter) -> Result<Vec<(Chart, ThreePointGerm)>> {
    if center != TargetCenter::CurveUV || germ.target_kind != PointKind::TwoPoint {
        return Err(Error::InvalidCenterForm(
            "exponent data transforms only under the 2-curve u=v=0 over a 2-point".into(),
        ));
    }
    Ok(target_chart_list(center)
        .into_iter()
        .map(|c| {
            let keep_u = target_chart_axis(&c) == Some(0);
            let g = germ.target_two_curve_chart(keep_u);
            (c, g)
        })
        .collect())
}

/// States of the `A(C)` descent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum DescentState {
    /// `u = x^a, v = x^b (α + y), w = x^d z` at a 1-point.
    OnePoint {
        a: i64,
        b: i64,
        d: i64,
        #[serde(with = "rational::as_string")]
        alpha: Q,
    },
    /// `u = x^a y^b, v = x^c y^d, w = x^g y^h z` at a 2-point.
    TwoPoint { a: i64, b: i64, c: i64, d: i64, g: i64, h: i64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum DescentOutcome {
    Open { state: DescentState },
    Resolved { germ: Germ },
}

impl DescentState {
    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::MalformedGerm(m.to_string()));
        match self {
            DescentState::OnePoint { a, b, d, alpha } => {
                if *a <= 0 || *b < 0 || *d < 0 || alpha.is_zero() {
                    return bad("need a > 0, b, d >= 0 and alpha != 0");
                }
                if d >= a.min(b) {
                    return bad("need d < min(a, b)");
                }
            }
            DescentState::TwoPoint { a, b, c, d, g, h } => {
                if [a, b, c, d, g, h].iter().any(|&&e| e < 0) {
                    return bad("exponents must be nonnegative");
                }
                let (p, q) = ([*a, *b], [*c, *d]);
                let comparable = (p[0] <= q[0] && p[1] <= q[1]) || (q[0] <= p[0] && q[1] <= p[1]);
                if !comparable {
                    return bad("(a, b) and (c, d) must be comparable");
                }
                if a * d - b * c == 0 && (p == [0, 0] || q == [0, 0]) {
                    return bad("u and v must be nonconstant");
                }
                let m = [p[0].min(q[0]), p[1].min(q[1])];
                if *g > m[0] || *h > m[1] || (*g == m[0] && *h == m[1]) {
                    return bad("need (g, h) < min((a, b), (c, d)) componentwise");
                }
            }
        }
        Ok(())
    }

    /// Curve-wise gaps `(A_x, A_y)`; the second is zero at a 1-point.
    pub fn gaps(&self) -> (i64, i64) {
        match self {
            DescentState::OnePoint { a, b, d, .. } => (a.min(b) - d, 0),
            DescentState::TwoPoint { a, b, c, d, g, h } => (a.min(c) - g, b.min(d) - h),
        }
    }

    pub fn a_value(&self) -> i64 {
        let (x, y) = self.gaps();
        x + y
    }

    pub fn germ(&self) -> Germ {
        match self {
            DescentState::OnePoint { a, b, d, alpha } => Germ::new(
                PointKind::TwoPoint,
                PointKind::OnePoint,
                Payload::mono([*a, 0, 0]),
                Payload::shifted([*b, 0, 0], 1, alpha.clone()),
                Payload::mono([*d, 0, 1]),
            ),
            DescentState::TwoPoint { a, b, c, d, g, h } => Germ::new(
                PointKind::TwoPoint,
                PointKind::TwoPoint,
                Payload::mono([*a, *b, 0]),
                Payload::mono([*c, *d, 0]),
                Payload::mono([*g, *h, 1]),
            ),
        }
    }

    /// The curve blown up next: `x = z = 0` unless the `y` gap is larger.
    pub fn center(&self) -> DomainCenter {
        let (ax, ay) = self.gaps();
        if ay > ax {
            DomainCenter::Curve(1, 2)
        } else {
            DomainCenter::Curve(0, 2)
        }
    }
}

/// `(u, v, w)` is principal: some payload's monomial factor divides the others'.
///
/// Payloads must be a monomial times a unit (the monomial is then a term).
pub fn point_ideal_invertible(germ: &Germ) -> bool {
    let monos: Vec<Option<ExpVec>> = germ
        .jets()
        .iter()
        .map(|j| {
            let g = j.gcd_monomial()?;
            j.terms().any(|(e, _)| e == &g).then_some(g)
        })
        .collect();
    let Some(monos) = monos.into_iter().collect::<Option<Vec<_>>>() else {
        return false;
    };
    monos.iter().any(|m| monos.iter().all(|o| m.divides(o)))
}

/// One blow-up of the curve with the largest gap; charts (β = 0), (β = `beta`), and the
/// chart through the other end of the exceptional line.
pub fn a_descent_step(state: &DescentState, beta: &Q) -> Result<Vec<(Chart, DescentOutcome)>> {
    state.check()?;
    if beta.is_zero() {
        return Err(Error::InvalidCenterForm("the translated chart needs beta != 0".into()));
    }
    let germ = state.germ();
    let center = state.center();
    let kind = center.kind_at(germ.domain_kind)?;
    let axis = match center {
        DomainCenter::Curve(i, _) => i,
        _ => unreachable!(),
    };
    let mut out = vec![];

    // x = x1, z = x1 (z1 + β): w gains a power of x and loses z unless β = 0.
    for shift in [Q::zero(), beta.clone()] {
        let shifts = [(2usize, shift.clone())];
        let raw = raw_chart(&[axis, 2], axis, &shifts);
        let (count, perm) = boundary_after(&raw, germ.domain_kind.count());
        let sub = raw.permute_new(perm);
        let label = if shift.is_zero() {
            format!("{}=z=0 / {}-chart", COORD[axis], COORD[axis])
        } else {
            format!("{}=z=0 / {}-chart at z1+{}", COORD[axis], COORD[axis], rational::fmt_q(&shift))
        };
        let chart = Chart { side: Side::Domain, center_kind: kind, sub, label };
        let next = match (state, shift.is_zero()) {
            (DescentState::OnePoint { a, b, d, alpha }, true) => {
                DescentState::OnePoint { a: *a, b: *b, d: d + 1, alpha: alpha.clone() }
            }
            (DescentState::TwoPoint { a, b, c, d, g, h }, true) => {
                let (g, h) = if axis == 0 { (g + 1, *h) } else { (*g, h + 1) };
                DescentState::TwoPoint { a: *a, b: *b, c: *c, d: *d, g, h }
            }
            (_, false) => {
                let child = transform_germ(&germ, &chart.sub, PointKind::from_count(count)?, germ_trunc(&germ))?;
                out.push((chart, DescentOutcome::Resolved { germ: child }));
                continue;
            }
        };
        let outcome = if next.a_value() == 0 {
            DescentOutcome::Resolved { germ: next.germ() }
        } else {
            DescentOutcome::Open { state: next }
        };
        out.push((chart, outcome));
    }

    // x = x1 z1, z = z1
    let raw = raw_chart(&[axis, 2], 2, &[]);
    let (count, perm) = boundary_after(&raw, germ.domain_kind.count());
    let sub = raw.permute_new(perm);
    let chart = Chart {
        side: Side::Domain,
        center_kind: kind,
        sub,
        label: format!("{}=z=0 / z-chart", COORD[axis]),
    };
    let child = transform_germ(&germ, &chart.sub, PointKind::from_count(count)?, germ_trunc(&germ))?;
    out.push((chart, DescentOutcome::Resolved { germ: child }));
    Ok(out)
}

fn germ_trunc(germ: &Germ) -> u32 {
    germ.payloads()
        .iter()
        .filter_map(|p| p.series.as_ref().map(|s| s.trunc))
        .max()
        .unwrap_or(crate::series::DEFAULT_TRUNC)
}

/// Iterate the descent to the end; returns the number of rounds and all resolved leaves.
pub fn run_descent(state: &DescentState, beta: &Q, max_rounds: usize) -> Result<(usize, Vec<Germ>)> {
    let mut frontier = vec![state.clone()];
    let mut leaves = vec![];
    let mut rounds = 0;
    while !frontier.is_empty() {
        if rounds >= max_rounds {
            return Err(Error::StepBudgetExceeded(max_rounds));
        }
        rounds += 1;
        let mut next = vec![];
        for s in &frontier {
            for (_, outcome) in a_descent_step(s, beta)? {
                match outcome {
                    DescentOutcome::Open { state: child } => {
                        if child.a_value() >= s.a_value() {
                            return Err(Error::InvalidState("descent invariant did not drop".into()));
                        }
                        next.push(child);
                    }
                    DescentOutcome::Resolved { germ } => leaves.push(germ),
                }
            }
        }
        frontier = next;
    }
    Ok((rounds, leaves))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::germ::FormTag;
    use crate::rational::q;
    use crate::tau::tau_of;

    fn e(v: [i64; 3]) -> ExpVec {
        ExpVec::from(v)
    }

    #[test]
    fn two_curve_chart_transforms_exponents() {
        let g = Germ::new(
            PointKind::ThreePoint,
            PointKind::ThreePoint,
            Payload::mono([1, 2, 0]),
            Payload::mono([0, 1, 1]),
            Payload::mono([1, 0, 1]),
        );
        let charts = domain_charts(&DomainCenter::TwoCurve(0, 1), &g, &[], 8).unwrap();
        assert_eq!(charts.len(), 2);
        for (c, _) in &charts {
            assert_eq!(c.monomial().unwrap().det(), 1);
        }
        let (c, child) = &charts[0];
        assert_eq!(c.sub.to_string(), "x=x1, y=x1*y1, z=z1");
        assert_eq!(child.u.exp, e([3, 2, 0]));
        assert_eq!(child.domain_kind, PointKind::ThreePoint);
    }

    #[test]
    fn point_blowup_chart_counts() {
        let g = Germ::new(
            PointKind::ThreePoint,
            PointKind::ThreePoint,
            Payload::mono([1, 0, 0]),
            Payload::mono([0, 1, 0]),
            Payload::mono([0, 0, 1]),
        );
        let charts = domain_charts(&DomainCenter::Point, &g, &[q(2)], 8).unwrap();
        let monomial = charts.iter().filter(|(c, _)| c.monomial().is_some()).count();
        assert_eq!(monomial, 3);
        // x-chart: (2,0), (0,2), (2,2); y-chart: (0,2)
        assert_eq!(charts.len(), 7);
        let kinds: Vec<PointKind> = charts.iter().map(|(_, g)| g.domain_kind).collect();
        assert!(kinds.contains(&PointKind::OnePoint));
        assert!(kinds.contains(&PointKind::TwoPoint));
        // the translated 2-curve chart at a 3-point lands on a 2-point
        let charts = domain_charts(&DomainCenter::TwoCurve(0, 1), &g, &[q(3)], 8).unwrap();
        assert_eq!(charts.len(), 3);
        assert_eq!(charts[1].1.domain_kind, PointKind::TwoPoint);
        assert_eq!(charts[1].1.classify().unwrap(), FormTag::Toroidal2);
    }

    #[test]
    fn invalid_centers() {
        let g = Germ::new(
            PointKind::OnePoint,
            PointKind::OnePoint,
            Payload::mono([1, 0, 0]),
            Payload::mono([0, 1, 0]),
            Payload::mono([0, 0, 1]),
        );
        assert!(domain_charts(&DomainCenter::TwoCurve(0, 1), &g, &[], 8).is_err());
        assert!(domain_charts(&DomainCenter::Point, &g, &[], 8).is_err());
        let charts = domain_charts(&DomainCenter::Curve(0, 2), &g, &[q(1)], 8).unwrap();
        assert_eq!(charts.len(), 3);
        assert!(matches!(TargetCenter::from_form(4), Err(Error::InvalidCenterForm(_))));
    }

    #[test]
    fn eq16_chart_keeps_tau() {
        let g = ThreePointGerm::new(e([2, 0, 2]), e([0, 2, 2]), vec![(q(1), e([1, 1, 2]))], e([3, 0, 1]), PointKind::TwoPoint);
        let germ = g.to_germ(8);
        for center in [DomainCenter::TwoCurve(0, 1), DomainCenter::TwoCurve(1, 2), DomainCenter::Point] {
            for (chart, child) in domain_charts(&center, &germ, &[], 8).unwrap() {
                let moved = g.apply_sub(&chart.monomial().unwrap());
                assert_eq!(child.u.exp, moved.u_exp);
                assert_eq!(tau_of(&moved).unwrap(), tau_of(&g).unwrap());
            }
        }
        for (_, child) in target_charts(&g, TargetCenter::CurveUV).unwrap() {
            assert_eq!(tau_of(&child).unwrap(), tau_of(&g).unwrap());
        }
    }

    #[test]
    fn descent_examples() {
        let s = DescentState::OnePoint { a: 3, b: 5, d: 1, alpha: q(1) };
        assert_eq!(s.a_value(), 2);
        let kids = a_descent_step(&s, &q(1)).unwrap();
        assert_eq!(kids.len(), 3);
        assert!(matches!(&kids[0].1, DescentOutcome::Open { state } if state.a_value() == 1));
        assert!(matches!(&kids[2].1, DescentOutcome::Resolved { germ } if point_ideal_invertible(germ)));
        let (rounds, leaves) = run_descent(&s, &q(1), 10).unwrap();
        assert_eq!(rounds, 2);
        assert!(leaves.iter().all(point_ideal_invertible));

        let s = DescentState::TwoPoint { a: 2, b: 3, c: 4, d: 5, g: 1, h: 0 };
        let kids = a_descent_step(&s, &q(2)).unwrap();
        let (_, DescentOutcome::Resolved { germ }) = &kids[2] else { panic!() };
        assert_eq!(germ.domain_kind, PointKind::ThreePoint);
        assert!(point_ideal_invertible(germ));
    }
}
