//! Seeded property suites behind the `suite` command.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::blowup::{monomial_domain_charts, point_ideal_invertible, run_descent, DescentState, DomainCenter};
use crate::fan::{Divisor, DivisorSet, SmoothFan};
use crate::germ::templates::{nonzero_rational, three_point, toroidal};
use crate::germ::{FormTag, PointKind, ThreePointGerm};
use crate::jacobian::templates::{prepared, PreparedForm};
use crate::jacobian::{lambda_of, theorem391_classify, ToroidalityVerdict, Verdict};
use crate::lattice::{det, lattice_index, mat_mul, smith_normal_form, ExpVec, IntMatrix, LatticeIndex, SubMatrix};
use crate::oracles::{index_by_cosets, snf_by_minors, CosetIndex};
use crate::principalize::{
    is_locally_principal, is_principal_at, principalize_many, principalize_pair, principalize_with_3points, OmegaValue,
    Principalization, DEFAULT_BUDGET,
};
use crate::relations::{resolve3, ThreePointPreRel};
use crate::tau::{tau_of, TauValue};

const MAX_LISTED: usize = 5;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub id: String,
    pub passed: bool,
    pub cases: usize,
    pub failure_count: usize,
    /// The first few failures.
    pub failures: Vec<String>,
    pub stats: BTreeMap<String, i64>,
}

struct Tally {
    id: &'static str,
    cases: usize,
    failures: Vec<String>,
    failure_count: usize,
    stats: BTreeMap<String, i64>,
}

impl Tally {
    fn new(id: &'static str) -> Self {
        Tally { id, cases: 0, failures: vec![], failure_count: 0, stats: BTreeMap::new() }
    }

    fn case(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.fail(describe());
        }
    }

    fn fail(&mut self, msg: String) {
        self.failure_count += 1;
        if self.failures.len() < MAX_LISTED {
            self.failures.push(msg);
        }
    }

    fn max_stat(&mut self, key: &str, v: i64) {
        let e = self.stats.entry(key.to_string()).or_insert(v);
        *e = (*e).max(v);
    }

    fn add_stat(&mut self, key: &str, v: i64) {
        *self.stats.entry(key.to_string()).or_insert(0) += v;
    }

    fn finish(self) -> CriterionReport {
        CriterionReport {
            id: self.id.to_string(),
            passed: self.failure_count == 0 && self.cases > 0,
            cases: self.cases,
            failure_count: self.failure_count,
            failures: self.failures,
            stats: self.stats,
        }
    }
}

fn rng_for(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn random_target<R: Rng>(rng: &mut R) -> PointKind {
    if rng.gen_bool(0.5) {
        PointKind::ThreePoint
    } else {
        PointKind::TwoPoint
    }
}

fn random_chart<R: Rng>(rng: &mut R) -> SubMatrix {
    if rng.gen_bool(0.25) {
        SubMatrix::point_chart(rng.gen_range(0..3))
    } else {
        let keep = rng.gen_range(0..3);
        let other = (keep + rng.gen_range(1..3)) % 3;
        SubMatrix::two_curve_chart(keep, other)
    }
}

const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

fn same_tau(g: &ThreePointGerm, base: &TauValue, other: &ThreePointGerm) -> Result<(), String> {
    match tau_of(other) {
        Ok(t) if &t == base => Ok(()),
        Ok(t) => Err(format!("tau {base} became {t} for {}", serde_json::to_string(g).unwrap_or_default())),
        Err(e) => Err(format!("{}: {e}", e.name())),
    }
}

/// tau is unchanged by chains of unimodular charts, the u<->v swap and axis permutations.
pub fn tau_invariance(seed: u64) -> CriterionReport {
    let mut t = Tally::new("tau_invariance");
    let mut rng = rng_for(seed, 1);
    for _ in 0..500 {
        let target = random_target(&mut rng);
        let g = three_point(&mut rng, target);
        let base = match tau_of(&g) {
            Ok(v) => v,
            Err(e) => {
                t.case(false, || format!("{}: {e}", e.name()));
                continue;
            }
        };
        if let TauValue::Order(n) = &base {
            t.max_stat("max_tau", n.to_i64().unwrap_or(i64::MAX));
        }
        for _ in 0..20 {
            let len = rng.gen_range(1..=6);
            let mut h = g.clone();
            for _ in 0..len {
                h = h.apply_sub(&random_chart(&mut rng));
            }
            let r = same_tau(&g, &base, &h);
            t.case(r.is_ok(), || r.unwrap_err());
        }
        let r = same_tau(&g, &base, &g.swap_uv());
        t.case(r.is_ok(), || r.unwrap_err());
        for p in PERMS {
            let r = same_tau(&g, &base, &g.permute_axes(p));
            t.case(r.is_ok(), || r.unwrap_err());
        }
    }
    t.finish()
}

/// tau is unchanged by the monomial charts of 2-curve and 3-point blow-ups and by the target
/// charts of the blow-up of `u = v = 0` over a 2-point.
pub fn tau_blowups(seed: u64) -> CriterionReport {
    let mut t = Tally::new("tau_blowups");
    let mut rng = rng_for(seed, 2);
    let mut centers = vec![DomainCenter::Point];
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        centers.push(DomainCenter::TwoCurve(i, j));
    }
    let mut subs = vec![];
    for c in &centers {
        subs.extend(monomial_domain_charts(c, PointKind::ThreePoint).expect("3-point centers"));
    }
    for _ in 0..300 {
        let target = random_target(&mut rng);
        let g = three_point(&mut rng, target);
        let base = match tau_of(&g) {
            Ok(v) => v,
            Err(e) => {
                t.case(false, || format!("{}: {e}", e.name()));
                continue;
            }
        };
        for s in &subs {
            let r = same_tau(&g, &base, &g.apply_sub(s));
            t.case(r.is_ok(), || r.unwrap_err());
        }
        if target == PointKind::TwoPoint {
            for keep_u in [true, false] {
                let r = same_tau(&g, &base, &g.target_two_curve_chart(keep_u));
                t.case(r.is_ok(), || r.unwrap_err());
            }
        }
    }
    t.stats.insert("domain_charts_per_germ".into(), subs.len() as i64);
    t.finish()
}

/// Every mixed-sign 3-point pre-relation with entries up to 12 resolves within 200 expansions.
pub fn resolver_sweep(seed: u64) -> CriterionReport {
    let mut t = Tally::new("resolver_sweep");
    let mut rng = rng_for(seed, 3);
    let lambda = nonzero_rational(&mut rng);
    const B: i64 = 12;
    for a in -B..=B {
        for b in -B..=B {
            for c in -B..=B {
                let (lo, hi) = (a.min(b).min(c), a.max(b).max(c));
                if !(lo < 0 && 0 < hi) || a.gcd(&b).gcd(&c) != 1 {
                    continue;
                }
                let r = ThreePointPreRel::new(a, b, c, lambda.clone()).and_then(|r| resolve3(&r, 200));
                match r {
                    Ok(res) => {
                        t.max_stat("max_depth", res.tree.depth() as i64);
                        t.max_stat("max_nodes", res.tree.len() as i64);
                        let ok = res.all_leaves_closed() && res.certificate.holds();
                        t.case(ok, || format!("({a},{b},{c}): open leaf or broken descent"));
                    }
                    Err(e) => t.case(false, || format!("({a},{b},{c}) {}: {e}", e.name())),
                }
            }
        }
    }
    t.finish()
}

fn random_fan<R: Rng>(rng: &mut R) -> SmoothFan {
    let mut fan = SmoothFan::octant();
    for _ in 0..rng.gen_range(0..=5) {
        let next = if rng.gen_bool(0.5) {
            let faces: Vec<(usize, usize)> = fan.two_cones().keys().copied().collect();
            fan.star_subdivide_2cone(faces[rng.gen_range(0..faces.len())])
        } else {
            fan.star_subdivide_3cone(rng.gen_range(0..fan.cones.len()))
        };
        fan = next.expect("subdividing an existing cone").0;
    }
    fan
}

fn random_divisor<R: Rng>(rng: &mut R, n: usize) -> Divisor {
    Divisor::new((0..n).map(|_| rng.gen_range(0..=10)).collect())
}

fn incomparable(d1: &Divisor, d2: &Divisor, rays: &[usize]) -> bool {
    let diffs: Vec<i64> = rays.iter().map(|&r| d1.coeffs[r] - d2.coeffs[r]).collect();
    diffs.iter().any(|&x| x > 0) && diffs.iter().any(|&x| x < 0)
}

/// Problems with a principalization run; empty when every checked property holds.
fn audit(p: &Principalization) -> Vec<String> {
    let mut out = vec![];
    let mut last: Option<(usize, OmegaValue)> = None;
    for r in &p.history {
        if let Some((phase, w)) = last {
            if phase == r.phase && r.omega_bar >= w {
                out.push(format!("round {}: omega_bar {} after {}", r.round, r.omega_bar, w));
            }
        }
        last = Some((r.phase, r.omega_bar));
    }
    for (k, s) in p.trace.iter().enumerate() {
        if let Err(e) = s.fan.check() {
            out.push(format!("step {k}: fan not smooth: {e}"));
        }
        let inside = match (s.center.as_slice(), s.pair) {
            ([i, j], Some([a, b])) => incomparable(&s.divisors.divisors[a], &s.divisors.divisors[b], &[*i, *j]),
            ([i, j, k], None) => s
                .fan
                .find_cone([*i, *j, *k])
                .is_some_and(|c| !is_principal_at(&s.fan, &s.divisors, c)),
            _ => false,
        };
        if !inside {
            out.push(format!("step {k}: center {:?} outside the non-principal support", s.center));
        }
    }
    if let Err(e) = p.fan.check() {
        out.push(format!("final fan not smooth: {e}"));
    }
    if !is_locally_principal(&p.fan, &p.divisors) {
        out.push("final ideal not locally principal".into());
    }
    out
}

/// Pair, multi-divisor and mixed principalization on randomly subdivided octants.
pub fn principalization(seed: u64) -> CriterionReport {
    let mut t = Tally::new("principalization");
    let mut rng = rng_for(seed, 4);
    for (instances, n) in [(100, 2), (50, 3)] {
        for _ in 0..instances {
            let fan = random_fan(&mut rng);
            let ds: Vec<Divisor> = (0..n).map(|_| random_divisor(&mut rng, fan.rays.len())).collect();
            let set = DivisorSet::new(ds.clone());
            let runs = if n == 2 {
                vec![("pair", principalize_pair(&fan, &ds[0], &ds[1], DEFAULT_BUDGET))]
            } else {
                vec![
                    ("many", principalize_many(&fan, &set, DEFAULT_BUDGET)),
                    ("mixed", principalize_with_3points(&fan, &set, DEFAULT_BUDGET)),
                ]
            };
            for (name, run) in runs {
                let problems = match run {
                    Ok(p) => {
                        t.max_stat("max_rounds", p.history.len() as i64);
                        t.max_stat("max_rays", p.fan.rays.len() as i64);
                        audit(&p)
                    }
                    Err(e) => vec![format!("{}: {e}", e.name())],
                };
                let ctx = || serde_json::to_string(&(&fan.rays, &fan.cones, &ds)).unwrap_or_default();
                t.case(problems.is_empty(), || format!("{name}: {} on {}", problems.join("; "), ctx()));
            }
        }
    }
    t.finish()
}

/// lambda = 1 on toroidal forms; the excluded prepared forms produce a component with lambda != 1.
pub fn jacobian_characterization(seed: u64) -> CriterionReport {
    let mut t = Tally::new("jacobian_characterization");
    let mut rng = rng_for(seed, 5);
    for n in 1..=6u8 {
        for _ in 0..100 {
            let g = toroidal(n, &mut rng);
            let forced = match theorem391_classify(&g) {
                Ok(ToroidalityVerdict::Toroidal { form, .. }) => Some(form),
                _ => None,
            };
            let ok = matches!(lambda_of(&g), Ok(r) if r.verdict == Verdict::AllLambdaOne)
                && forced == FormTag::toroidal(n);
            t.case(ok, || format!("toroidal form {n}: {}", g.to_json()));
        }
    }
    for form in PreparedForm::EXCLUDED {
        for _ in 0..100 {
            let inst = prepared(form, &mut rng);
            let ok = match theorem391_classify(&inst.germ) {
                Ok(ToroidalityVerdict::Counterexample { lambda, .. }) => lambda != 1,
                _ => false,
            };
            t.case(ok, || format!("form ({}) {:?}: no component with lambda != 1", form.number(), inst.params));
        }
    }
    t.finish()
}

fn snf_problems(m: &IntMatrix) -> Option<String> {
    let snf = smith_normal_form(m);
    let diag = snf.diagonal();
    if diag != snf_by_minors(m) {
        return Some(format!("diagonal {diag:?} vs determinantal divisors {:?}", snf_by_minors(m)));
    }
    if mat_mul(&mat_mul(&snf.u, m), &snf.v) != snf.d {
        return Some("u * m * v != d".into());
    }
    if det(&snf.u).abs() != BigInt::one() || det(&snf.v).abs() != BigInt::one() {
        return Some("transforms are not unimodular".into());
    }
    let off_diagonal = snf.d.iter().enumerate().any(|(i, r)| r.iter().enumerate().any(|(j, x)| i != j && !x.is_zero()));
    if off_diagonal {
        return Some("d is not diagonal".into());
    }
    None
}

fn random_vecs<R: Rng>(rng: &mut R, n: usize, bound: i64) -> Vec<ExpVec> {
    (0..n).map(|_| ExpVec::new((0..3).map(|_| rng.gen_range(-bound..=bound)).collect::<Vec<_>>())).collect()
}

/// Smith normal form and lattice index against brute-force oracles.
pub fn lattice_oracles(seed: u64) -> CriterionReport {
    let mut t = Tally::new("lattice_oracles");
    let mut rng = rng_for(seed, 6);
    for _ in 0..200 {
        let (rows, cols) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
        let m: IntMatrix =
            (0..rows).map(|_| (0..cols).map(|_| BigInt::from(rng.gen_range(-9..=9))).collect()).collect();
        let p = snf_problems(&m);
        t.case(p.is_none(), || format!("{m:?}: {}", p.unwrap()));
    }
    let mut compared = 0;
    while compared < 200 {
        let k = rng.gen_range(1..=4);
        let h = random_vecs(&mut rng, k, 3);
        let a: Vec<ExpVec> = (0..rng.gen_range(1..=4))
            .map(|_| {
                h.iter().fold(ExpVec::zero(3), |acc, g| acc.add(&g.scale(rng.gen_range(-2..=2))))
            })
            .collect();
        let oracle = index_by_cosets(&h, &a, 200_000);
        if oracle == CosetIndex::TooLarge {
            t.add_stat("resampled", 1);
            continue;
        }
        compared += 1;
        let got = lattice_index(&h, &a);
        let ok = match (&got, oracle) {
            (Ok(LatticeIndex::Finite(n)), CosetIndex::Finite(k)) => *n == BigInt::from(k),
            (Ok(LatticeIndex::Infinite), CosetIndex::Infinite) => true,
            _ => false,
        };
        if matches!(oracle, CosetIndex::Finite(_)) {
            t.add_stat("finite_cases", 1);
        }
        t.case(ok, || format!("H={h:?} A={a:?}: {got:?} vs {oracle:?}"));
    }
    t.finish()
}

fn descent_states(alpha: &crate::rational::Q) -> Vec<DescentState> {
    const P: i64 = 8;
    let mut out = vec![];
    for a in 1..=P {
        for b in 0..=P {
            for d in 0..a.min(b) {
                out.push(DescentState::OnePoint { a, b, d, alpha: alpha.clone() });
            }
        }
    }
    for a in 0..=P {
        for b in 0..=P {
            for c in 0..=P {
                for d in 0..=P {
                    for g in 0..=a.min(c) {
                        for h in 0..=b.min(d) {
                            let s = DescentState::TwoPoint { a, b, c, d, g, h };
                            if s.check().is_ok() {
                                out.push(s);
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// The A(C) descent ends within A(initial) rounds with invertible point ideals.
pub fn a_descent(seed: u64) -> CriterionReport {
    let mut t = Tally::new("a_descent");
    let mut rng = rng_for(seed, 7);
    let (alpha, beta) = (nonzero_rational(&mut rng), nonzero_rational(&mut rng));
    for s in descent_states(&alpha) {
        let a0 = s.a_value();
        match run_descent(&s, &beta, a0 as usize) {
            Ok((rounds, leaves)) => {
                t.max_stat("max_rounds", rounds as i64);
                t.add_stat("leaves", leaves.len() as i64);
                let ok = rounds as i64 <= a0 && leaves.iter().all(point_ideal_invertible);
                t.case(ok, || format!("{}: {rounds} rounds, A = {a0}", serde_json::to_string(&s).unwrap_or_default()));
            }
            Err(e) => t.case(false, || format!("{} {}: {e}", serde_json::to_string(&s).unwrap_or_default(), e.name())),
        }
    }
    t.finish()
}

pub type CriterionFn = fn(u64) -> CriterionReport;

/// The property suites in report order.
pub const CRITERIA: [(&str, CriterionFn); 7] = [
    ("tau_invariance", tau_invariance),
    ("tau_blowups", tau_blowups),
    ("resolver_sweep", resolver_sweep),
    ("principalization", principalization),
    ("jacobian_characterization", jacobian_characterization),
    ("lattice_oracles", lattice_oracles),
    ("a_descent", a_descent),
];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub passed: bool,
    pub criteria: Vec<CriterionReport>,
}

pub fn run_suite(seed: u64, only: Option<&[&str]>) -> SuiteReport {
    let criteria: Vec<CriterionReport> = CRITERIA
        .iter()
        .filter(|(id, _)| only.is_none_or(|o| o.contains(id)))
        .map(|(_, f)| f(seed))
        .collect();
    let passed = criteria.iter().all(|c| c.passed);
    SuiteReport { seed, passed, criteria }
}
