//! Orders along boundary components, Jacobian determinants and the invariant `lambda(E)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::germ::{FormTag, Germ, Payload, PointKind};
use crate::series::Jet;

/// Largest power of the coordinate `axis` dividing the payload.
pub fn ord_along(payload: &Payload, axis: usize) -> Result<i64> {
    payload.check("payload")?;
    payload.to_jet().order_along(axis)
}

/// `det(d(u,v,w)/d(x,y,z))` on the truncated expansions.
pub fn jacobian_det(germ: &Germ) -> Result<Jet> {
    germ.check()?;
    let jets = germ.jets();
    let d: Vec<Vec<Jet>> = jets.iter().map(|f| (0..3).map(|i| f.derivative(i)).collect()).collect();
    let mut out = Jet::zero_exact();
    for (perm, sign) in [([0, 1, 2], 1), ([1, 2, 0], 1), ([2, 0, 1], 1), ([0, 2, 1], -1), ([2, 1, 0], -1), ([1, 0, 2], -1)] {
        let term = d[0][perm[0]].mul(&d[1][perm[1]]).mul(&d[2][perm[2]]);
        out = if sign > 0 { out.add(&term) } else { out.sub(&term) };
    }
    if out.valid() < 0 {
        return Err(Error::TruncationInsufficient(format!(
            "Jacobian window is empty (valid through degree {})",
            out.valid()
        )));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LambdaComponent {
    pub axis: usize,
    pub ord_boundary: i64,
    pub ord_jac: i64,
    pub lambda: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    AllLambdaOne,
    LambdaNotOne,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LambdaReport {
    pub components: Vec<LambdaComponent>,
    pub verdict: Verdict,
}

impl LambdaReport {
    pub fn witness(&self) -> Option<&LambdaComponent> {
        self.components.iter().find(|c| c.lambda != 1)
    }
}

/// `lambda(E) = ord_E(uvw) - ord_E(Jac)` for each boundary axis of the domain,
/// with `uv` over a 2-point target and `u` over a 1-point target.
pub fn lambda_of(germ: &Germ) -> Result<LambdaReport> {
    let jac = jacobian_det(germ)?;
    let payloads = germ.payloads();
    let mut components = vec![];
    for axis in 0..germ.domain_kind.count() {
        let mut ord_boundary = 0;
        for p in payloads.iter().take(germ.target_kind.count()) {
            ord_boundary += ord_along(p, axis)?;
        }
        let ord_jac = jac.order_along(axis)?;
        components.push(LambdaComponent { axis, ord_boundary, ord_jac, lambda: ord_boundary - ord_jac });
    }
    let verdict = if components.iter().all(|c| c.lambda == 1) { Verdict::AllLambdaOne } else { Verdict::LambdaNotOne };
    Ok(LambdaReport { components, verdict })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum ToroidalityVerdict {
    /// Every component has `lambda = 1`; `form` is the toroidal form the case analysis forces,
    /// `literal` what the classifier reads off the given coordinates.
    Toroidal { form: FormTag, literal: FormTag, report: LambdaReport },
    Counterexample { axis: usize, lambda: i64, report: LambdaReport },
}

/// Toroidal form forced at a point with the given target and domain kinds.
pub fn forced_form(target: PointKind, domain: PointKind) -> Option<FormTag> {
    use PointKind::*;
    match (target, domain) {
        (ThreePoint, ThreePoint) => Some(FormTag::Toroidal1),
        (ThreePoint, TwoPoint) => Some(FormTag::Toroidal2),
        (ThreePoint, OnePoint) => Some(FormTag::Toroidal3),
        (TwoPoint, TwoPoint) => Some(FormTag::Toroidal4),
        (TwoPoint, OnePoint) => Some(FormTag::Toroidal5),
        (OnePoint, OnePoint) => Some(FormTag::Toroidal6),
        _ => None,
    }
}

/// `lambda = 1` on all components forces a toroidal form; any other value is a witness against it.
pub fn theorem391_classify(germ: &Germ) -> Result<ToroidalityVerdict> {
    let report = lambda_of(germ)?;
    if let Some(w) = report.witness() {
        let (axis, lambda) = (w.axis, w.lambda);
        return Ok(ToroidalityVerdict::Counterexample { axis, lambda, report });
    }
    let form = forced_form(germ.target_kind, germ.domain_kind).ok_or_else(|| {
        Error::MalformedGerm(format!(
            "no prepared form maps a {:?} domain point to a {:?} target point",
            germ.domain_kind, germ.target_kind
        ))
    })?;
    let literal = germ.classify()?;
    Ok(ToroidalityVerdict::Toroidal { form, literal, report })
}

/// Random instances of the prepared forms met in the case analysis.
pub mod templates {
    use std::collections::BTreeMap;

    use num_traits::Zero;
    use rand::Rng;
    use serde::{Deserialize, Serialize};

    use super::*;
    use crate::germ::templates::nonzero_rational;
    use crate::lattice::ExpVec;
    use crate::rational::Q;
    use crate::series::TruncSeries;

    /// Polynomial payloads are declared known through this degree.
    pub const POLY_TRUNC: u32 = 96;

    #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
    pub enum PreparedForm {
        F318,
        F319,
        F323,
        F324,
        F325,
        F326,
        F327,
        F328,
        F329,
        F330,
    }

    impl PreparedForm {
        pub const ALL: [PreparedForm; 10] = [
            PreparedForm::F318,
            PreparedForm::F319,
            PreparedForm::F323,
            PreparedForm::F324,
            PreparedForm::F325,
            PreparedForm::F326,
            PreparedForm::F327,
            PreparedForm::F328,
            PreparedForm::F329,
            PreparedForm::F330,
        ];

        /// Forms that the case analysis rules out.
        pub const EXCLUDED: [PreparedForm; 4] =
            [PreparedForm::F324, PreparedForm::F326, PreparedForm::F328, PreparedForm::F330];

        pub fn number(self) -> u32 {
            match self {
                PreparedForm::F318 => 318,
                PreparedForm::F319 => 319,
                PreparedForm::F323 => 323,
                PreparedForm::F324 => 324,
                PreparedForm::F325 => 325,
                PreparedForm::F326 => 326,
                PreparedForm::F327 => 327,
                PreparedForm::F328 => 328,
                PreparedForm::F329 => 329,
                PreparedForm::F330 => 330,
            }
        }
    }

    #[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
    pub struct PreparedInstance {
        pub form: PreparedForm,
        pub germ: Germ,
        pub params: BTreeMap<String, i64>,
    }

    impl PreparedInstance {
        pub fn param(&self, name: &str) -> i64 {
            self.params[name]
        }
    }

    type Terms = Vec<(ExpVec, Q)>;

    fn e(x: i64, y: i64, z: i64) -> ExpVec {
        ExpVec::from([x, y, z])
    }

    fn poly(terms: Terms) -> Payload {
        let terms: Terms = terms.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        Payload::from_terms(terms, POLY_TRUNC)
    }

    fn times(m: &ExpVec, terms: Terms) -> Terms {
        terms.into_iter().map(|(x, c)| (x.add(m), c)).collect()
    }

    fn maybe_zero<R: Rng>(rng: &mut R) -> Q {
        if rng.gen_bool(0.3) {
            Q::zero()
        } else {
            nonzero_rational(rng)
        }
    }

    /// `(a, b, c, d)` with `a, b >= 1`, `c, d >= 0` and `ad - bc != 0`.
    fn det_pair<R: Rng>(rng: &mut R) -> (i64, i64, i64, i64) {
        loop {
            let (a, b) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
            let (c, d) = (rng.gen_range(0..=3), rng.gen_range(0..=3));
            if a * d - b * c != 0 {
                return (a, b, c, d);
            }
        }
    }

    /// Unit polynomial `g0 + g1 x + g2 y` (no `z`).
    fn unit_xy<R: Rng>(rng: &mut R) -> Terms {
        vec![(e(0, 0, 0), nonzero_rational(rng)), (e(1, 0, 0), maybe_zero(rng)), (e(0, 1, 0), maybe_zero(rng))]
    }

    /// `g(M, z)` with `M = x^a y^b`; a unit when `unit` is set, else vanishing at the origin.
    fn g_mz<R: Rng>(rng: &mut R, a: i64, b: i64, unit: bool) -> Terms {
        let c0 = if unit { nonzero_rational(rng) } else { Q::zero() };
        vec![
            (e(0, 0, 0), c0),
            (e(a, b, 0), maybe_zero(rng)),
            (e(0, 0, 1), maybe_zero(rng)),
            (e(a, b, 1), maybe_zero(rng)),
            (e(0, 0, 2), maybe_zero(rng)),
        ]
    }

    /// `g(x, y)` vanishing at the origin.
    fn g_xy<R: Rng>(rng: &mut R) -> Terms {
        vec![(e(1, 0, 0), maybe_zero(rng)), (e(0, 1, 0), maybe_zero(rng)), (e(1, 1, 0), maybe_zero(rng)), (e(0, 2, 0), maybe_zero(rng))]
    }

    fn shifted(m: ExpVec, axis: usize, alpha: Q) -> Payload {
        Payload::with_series(m, TruncSeries::shifted_coordinate(axis, alpha, POLY_TRUNC))
    }

    pub fn prepared<R: Rng>(form: PreparedForm, rng: &mut R) -> PreparedInstance {
        use PointKind::*;
        use PreparedForm::*;
        let mut params = BTreeMap::new();
        let mut put = |name: &str, v: i64| {
            params.insert(name.to_string(), v);
            v
        };
        let small = |rng: &mut R| rng.gen_range(1..=3);
        let germ = match form {
            F318 => {
                let (a, b, c) = (put("a", small(rng)), put("b", small(rng)), put("c", small(rng)));
                let d = put("d", rng.gen_range(0..=3));
                let mut w = unit_xy(rng);
                w.push((e(d, 0, 1), Q::from_integer(1.into())));
                Germ::new(ThreePoint, OnePoint, Payload::mono([a, 0, 0]), shifted(e(b, 0, 0), 1, nonzero_rational(rng)), poly(times(&e(c, 0, 0), w)))
            }
            F325 => {
                let (a, b, c, d) = det_pair(rng);
                for (n, v) in [("a", a), ("b", b), ("c", c), ("d", d)] {
                    put(n, v);
                }
                let (m, n) = (put("m", rng.gen_range(0..=2)), put("n", rng.gen_range(0..=2)));
                let (ee, f) = (put("e", rng.gen_range(0..=2)), put("f", rng.gen_range(0..=2)));
                let mut w = unit_xy(rng);
                w.push((e(ee, f, 1), Q::from_integer(1.into())));
                Germ::new(ThreePoint, TwoPoint, Payload::mono([a, b, 0]), Payload::mono([c, d, 0]), poly(times(&e(m, n, 0), w)))
            }
            F326 => {
                let (a, b, c, d) = det_pair(rng);
                for (n, v) in [("a", a), ("b", b), ("c", c), ("d", d)] {
                    put(n, v);
                }
                let (k, t, m) = (put("k", rng.gen_range(1..=2)), put("t", rng.gen_range(0..=2)), put("m", rng.gen_range(0..=2)));
                let mut w = g_mz(rng, a, b, true);
                w.push((e(c, d, 0), Q::from_integer(1.into())));
                Germ::new(
                    ThreePoint,
                    TwoPoint,
                    Payload::mono([a * k, b * k, 0]),
                    shifted(e(a * t, b * t, 0), 2, nonzero_rational(rng)),
                    poly(times(&e(a * m, b * m, 0), w)),
                )
            }
            F319 => {
                let (a, b) = (put("a", small(rng)), put("b", small(rng)));
                let c = put("c", rng.gen_range(0..=3));
                let mut w = g_xy(rng);
                w.push((e(c, 0, 1), Q::from_integer(1.into())));
                Germ::new(TwoPoint, OnePoint, Payload::mono([a, 0, 0]), shifted(e(b, 0, 0), 1, nonzero_rational(rng)), poly(w))
            }
            F329 => {
                let (a, c) = (put("a", small(rng)), put("c", small(rng)));
                let d = put("d", rng.gen_range(0..=3));
                let mut v = unit_xy(rng);
                v.push((e(d, 0, 1), Q::from_integer(1.into())));
                Germ::new(TwoPoint, OnePoint, Payload::mono([a, 0, 0]), poly(times(&e(c, 0, 0), v)), Payload::mono([0, 1, 0]))
            }
            F323 => {
                let (a, b, c, d) = det_pair(rng);
                for (n, v) in [("a", a), ("b", b), ("c", c), ("d", d)] {
                    put(n, v);
                }
                let (ee, f) = (put("e", rng.gen_range(0..=2)), put("f", rng.gen_range(0..=2)));
                let mut w = g_xy(rng);
                w.push((e(ee, f, 1), Q::from_integer(1.into())));
                Germ::new(TwoPoint, TwoPoint, Payload::mono([a, b, 0]), Payload::mono([c, d, 0]), poly(w))
            }
            F324 => {
                let (a, b, c, d) = det_pair(rng);
                for (n, v) in [("a", a), ("b", b), ("c", c), ("d", d)] {
                    put(n, v);
                }
                let (k, t) = (put("k", rng.gen_range(1..=2)), put("t", rng.gen_range(0..=2)));
                let mut w = g_mz(rng, a, b, false);
                w.push((e(c, d, 0), Q::from_integer(1.into())));
                Germ::new(
                    TwoPoint,
                    TwoPoint,
                    Payload::mono([a * k, b * k, 0]),
                    shifted(e(a * t, b * t, 0), 2, nonzero_rational(rng)),
                    poly(w),
                )
            }
            F330 => {
                let (a, b, c, d) = det_pair(rng);
                for (n, v) in [("a", a), ("b", b), ("c", c), ("d", d)] {
                    put(n, v);
                }
                let (k, l) = (put("k", rng.gen_range(1..=2)), put("l", rng.gen_range(0..=2)));
                let mut v = g_mz(rng, a, b, true);
                v.push((e(c, d, 0), Q::from_integer(1.into())));
                Germ::new(
                    TwoPoint,
                    TwoPoint,
                    Payload::mono([a * k, b * k, 0]),
                    poly(times(&e(a * l, b * l, 0), v)),
                    Payload::mono([0, 0, 1]),
                )
            }
            F327 => {
                let a = put("a", small(rng));
                let c = put("c", rng.gen_range(0..=3));
                let mut w = g_xy(rng);
                w.push((e(c, 0, 1), Q::from_integer(1.into())));
                Germ::new(OnePoint, OnePoint, Payload::mono([a, 0, 0]), Payload::mono([0, 1, 0]), poly(w))
            }
            F328 => {
                let (a, b, c, d) = det_pair(rng);
                for (n, v) in [("a", a), ("b", b), ("c", c), ("d", d)] {
                    put(n, v);
                }
                let k = put("k", rng.gen_range(1..=2));
                let mut w = g_mz(rng, a, b, false);
                w.push((e(c, d, 0), Q::from_integer(1.into())));
                Germ::new(OnePoint, TwoPoint, Payload::mono([a * k, b * k, 0]), Payload::mono([0, 0, 1]), poly(w))
            }
        };
        PreparedInstance { form, germ, params }
    }
}

#[cfg(test)]
mod tests {
    use super::templates::*;
    use super::*;
    use crate::germ::templates::toroidal;
    use crate::lattice::ExpVec;
    use crate::rational::q;
    use crate::series::TruncSeries;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ord_examples() {
        let p = Payload::with_series([3, 0, 0], TruncSeries::new([(ExpVec::zero(3), q(2)), (ExpVec::from([0, 1, 0]), q(1))], 8));
        assert_eq!(ord_along(&p, 0).unwrap(), 3);
        assert_eq!(ord_along(&Payload::mono([2, 1, 0]), 1).unwrap(), 1);
        let s = Payload::from_terms(vec![(ExpVec::from([2, 1, 0]), q(1)), (ExpVec::from([3, 0, 0]), q(1))], 8);
        assert_eq!(ord_along(&s, 0).unwrap(), 2);
    }

    #[test]
    fn jacobian_examples() {
        use PointKind::*;
        let g = Germ::new(
            ThreePoint,
            OnePoint,
            Payload::mono([2, 0, 0]),
            Payload::shifted([3, 0, 0], 1, q(5)),
            Payload::shifted([1, 0, 0], 2, q(-1)),
        );
        let j = jacobian_det(&g).unwrap();
        assert_eq!(j.coefficient(&ExpVec::from([5, 0, 0])), q(2));
        assert_eq!(j.order_along(0).unwrap(), 5);
        let id = Germ::new(OnePoint, OnePoint, Payload::mono([1, 0, 0]), Payload::mono([0, 1, 0]), Payload::mono([0, 0, 1]));
        let j = jacobian_det(&id).unwrap();
        assert_eq!(j.len(), 1);
        assert_eq!(j.coefficient(&ExpVec::zero(3)), q(1));
        assert_eq!(lambda_of(&id).unwrap().components[0].lambda, 1);
    }

    #[test]
    fn toroidal_lambda_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=6 {
            for _ in 0..5 {
                let g = toroidal(n, &mut rng);
                let r = lambda_of(&g).unwrap();
                assert_eq!(r.verdict, Verdict::AllLambdaOne, "form {n}: {r:?}");
            }
        }
    }

    #[test]
    fn form_319_example() {
        use PointKind::*;
        let g = Germ::new(
            TwoPoint,
            OnePoint,
            Payload::mono([3, 0, 0]),
            Payload::shifted([2, 0, 0], 1, q(1)),
            Payload::from_terms(vec![(ExpVec::from([0, 1, 0]), q(1)), (ExpVec::from([2, 0, 1]), q(1))], 32),
        );
        let r = lambda_of(&g).unwrap();
        assert_eq!(r.components[0].lambda, -1);
    }

    fn closed_form(inst: &PreparedInstance) -> Vec<i64> {
        use PreparedForm::*;
        let p = |n: &str| inst.param(n);
        match inst.form {
            F318 => vec![1 - p("d")],
            F319 | F327 => vec![1 - p("c")],
            F329 => vec![1 - p("d")],
            F323 | F325 => vec![1 - p("e"), 1 - p("f")],
            F324 | F326 | F328 | F330 => vec![1 - p("c"), 1 - p("d")],
        }
    }

    #[test]
    fn prepared_lambdas_match_closed_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for form in PreparedForm::ALL {
            for _ in 0..8 {
                let inst = prepared(form, &mut rng);
                let got: Vec<i64> = lambda_of(&inst.germ).unwrap().components.iter().map(|c| c.lambda).collect();
                assert_eq!(got, closed_form(&inst), "{form:?} {:?}", inst.params);
            }
        }
    }

    #[test]
    fn classify_prepared() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for form in PreparedForm::ALL {
            for _ in 0..5 {
                let inst = prepared(form, &mut rng);
                let v = theorem391_classify(&inst.germ).unwrap();
                if PreparedForm::EXCLUDED.contains(&form) {
                    assert!(matches!(v, ToroidalityVerdict::Counterexample { .. }), "{form:?}: {v:?}");
                }
            }
        }
    }
}
