use num_bigint::BigInt;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use toroidal_core::blowup::transform_germ;
use toroidal_core::fan::{Divisor, DivisorSet, FanFile, SmoothFan};
use toroidal_core::germ::{templates, Germ, Payload, PointKind};
use toroidal_core::jacobian::templates::{prepared, PreparedForm, POLY_TRUNC};
use toroidal_core::jacobian::{jacobian_det, lambda_of, Verdict};
use toroidal_core::lattice::{smith_normal_form, ExpVec, IntMatrix, SubMatrix};
use toroidal_core::oracles::snf_by_minors;
use toroidal_core::principalize::{is_locally_principal, principalize_many, principalize_pair, DEFAULT_BUDGET};
use toroidal_core::rational::q_frac;
use toroidal_core::relations::{normalize3, resolve3, ThreePointPreRel};
use toroidal_core::series::{Jet, Substitution};
use toroidal_core::tau::tau_of;

fn chart() -> impl Strategy<Value = SubMatrix> {
    prop_oneof![
        (0usize..3).prop_map(SubMatrix::point_chart),
        (0usize..3, 1usize..3).prop_map(|(k, s)| SubMatrix::two_curve_chart(k, (k + s) % 3)),
        Just(SubMatrix::permutation([1, 2, 0])),
        Just(SubMatrix::permutation([1, 0, 2])),
    ]
}

fn square3() -> impl Strategy<Value = [[i64; 3]; 3]> {
    prop::array::uniform3(prop::array::uniform3(-6i64..=6))
}

fn mixed_signs() -> impl Strategy<Value = (i64, i64, i64)> {
    (-12i64..=12, -12i64..=12, -12i64..=12).prop_filter("mixed signs", |&(a, b, c)| {
        let e = [a, b, c];
        e.iter().any(|&x| x > 0) && e.iter().any(|&x| x < 0)
    })
}

fn random_fan(seed: u64) -> SmoothFan {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fan = SmoothFan::octant();
    for _ in 0..rand::Rng::gen_range(&mut rng, 0..=5) {
        let next = if rand::Rng::gen_bool(&mut rng, 0.5) {
            let faces: Vec<(usize, usize)> = fan.two_cones().keys().copied().collect();
            fan.star_subdivide_2cone(faces[rand::Rng::gen_range(&mut rng, 0..faces.len())])
        } else {
            fan.star_subdivide_3cone(rand::Rng::gen_range(&mut rng, 0..fan.cones.len()))
        };
        fan = next.unwrap().0;
    }
    fan
}

/// Coefficients agree through the degree both jets are known to.
fn agree(a: &Jet, b: &Jet) -> bool {
    let v = a.valid().min(b.valid());
    a.terms().chain(b.terms()).filter(|(e, _)| e.degree() <= v).all(|(e, _)| a.coefficient(e) == b.coefficient(e))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sub_matrix_product_is_associative(a in square3(), b in square3(), c in square3()) {
        let (a, b, c) = (SubMatrix(a), SubMatrix(b), SubMatrix(c));
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        prop_assert_eq!(a.mul(&b).det(), a.det() * b.det());
    }

    #[test]
    fn exponent_action_composes(v in prop::array::uniform3(-9i64..=9), a in chart(), b in chart()) {
        let v = ExpVec::from(v);
        prop_assert_eq!(v.apply_sub(&a).apply_sub(&b), v.apply_sub(&a.mul(&b)));
        prop_assert!(a.check_chart().is_ok());
    }

    #[test]
    fn normalize3_is_idempotent((a, b, c) in mixed_signs(), n in 1i64..=5, d in 1i64..=5) {
        prop_assume!(num_integer::gcd(num_integer::gcd(a, b), c) == 1);
        let r = ThreePointPreRel::new(a, b, c, q_frac(n, d)).unwrap();
        let nf = normalize3(&r).unwrap();
        let again = normalize3(&nf.to_prerel()).unwrap();
        prop_assert_eq!(again.key(), nf.key());
        prop_assert_eq!((again.abar, again.bbar, &again.lambda), (nf.abar, nf.bbar, &nf.lambda));
    }

    #[test]
    fn resolve3_closes_every_leaf((a, b, c) in mixed_signs()) {
        prop_assume!(num_integer::gcd(num_integer::gcd(a, b), c) == 1);
        let res = resolve3(&ThreePointPreRel::new(a, b, c, q_frac(1, 1)).unwrap(), 200).unwrap();
        prop_assert!(res.all_leaves_closed());
        prop_assert!(res.certificate.holds());
    }

    #[test]
    fn snf_matches_determinantal_divisors(rows in 1usize..=4, cols in 1usize..=4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m: IntMatrix = (0..rows)
            .map(|_| (0..cols).map(|_| BigInt::from(rand::Rng::gen_range(&mut rng, -9i64..=9))).collect())
            .collect();
        let d = smith_normal_form(&m).diagonal();
        prop_assert_eq!(&d, &snf_by_minors(&m));
        for w in d.windows(2) {
            prop_assert!(w[1].is_zero() || (!w[0].is_zero() && (&w[1] % &w[0]).is_zero()));
        }
    }

    #[test]
    fn tau_survives_chart_chains(seed in any::<u64>(), two_point in any::<bool>(), charts in prop::collection::vec(chart(), 1..=6)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kind = if two_point { PointKind::TwoPoint } else { PointKind::ThreePoint };
        let g = templates::three_point(&mut rng, kind);
        let base = tau_of(&g).unwrap();
        let moved = charts.iter().fold(g.clone(), |acc, m| acc.apply_sub(m));
        prop_assert_eq!(tau_of(&moved).unwrap(), base.clone());
        prop_assert_eq!(tau_of(&g.swap_uv()).unwrap(), base);
    }

    #[test]
    fn monomial_jacobian_closed_form(a in square3()) {
        let a = a.map(|r| r.map(|x| x.rem_euclid(5)));
        let m = SubMatrix(a);
        prop_assume!(m.det() != 0);
        let g = Germ::new(PointKind::ThreePoint, PointKind::ThreePoint, Payload::mono(a[0]), Payload::mono(a[1]), Payload::mono(a[2]));
        let jac = jacobian_det(&g).unwrap();
        let colsum: Vec<i64> = (0..3).map(|j| a.iter().map(|r| r[j]).sum::<i64>() - 1).collect();
        prop_assert_eq!(jac.len(), 1);
        prop_assert_eq!(jac.coefficient(&ExpVec::new(colsum)), q_frac(m.det(), 1));
        prop_assert_eq!(lambda_of(&g).unwrap().verdict, Verdict::AllLambdaOne);
    }

    #[test]
    fn jacobian_chain_rule(seed in any::<u64>(), form in prop::sample::select(PreparedForm::ALL.to_vec()), m in chart()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = prepared(form, &mut rng).germ;
        let moved = transform_germ(&g, &Substitution::monomial(&m), g.domain_kind, POLY_TRUNC).unwrap();
        let colsum: Vec<i64> = (0..3).map(|j| m.0.iter().map(|r| r[j]).sum::<i64>() - 1).collect();
        let factor = Jet::monomial(ExpVec::new(colsum), q_frac(m.det(), 1));
        let expected = jacobian_det(&g).unwrap().substitute(&Substitution::monomial(&m)).mul(&factor);
        let got = jacobian_det(&moved).unwrap();
        prop_assert!(got.valid().min(expected.valid()) >= 8);
        prop_assert!(agree(&got, &expected));
    }

    #[test]
    fn germ_json_round_trips(seed in any::<u64>(), n in 1u8..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = templates::toroidal(n, &mut rng);
        prop_assert_eq!(Germ::from_json(&g.to_json()).unwrap(), g);
    }

    #[test]
    fn subdivided_fans_cover_the_octant(seed in any::<u64>(), p in prop::array::uniform3(0i64..=20)) {
        let fan = random_fan(seed);
        prop_assert!(fan.check_faces().is_ok());
        prop_assert!(fan.cones.iter().all(|c| fan.cone_det(c).abs() == 1));
        prop_assert!(fan.locate(p).is_some());
    }

    #[test]
    fn pair_principalization_ends_principal(seed in any::<u64>(), c1 in prop::collection::vec(0i64..=10, 64), c2 in prop::collection::vec(0i64..=10, 64)) {
        let fan = random_fan(seed);
        let n = fan.rays.len();
        let (d1, d2) = (Divisor::new(c1[..n].to_vec()), Divisor::new(c2[..n].to_vec()));
        let p = principalize_pair(&fan, &d1, &d2, DEFAULT_BUDGET).unwrap();
        prop_assert!(p.fan.check_faces().is_ok());
        prop_assert!(is_locally_principal(&p.fan, &p.divisors));
        let omegas: Vec<_> = p.history.iter().map(|r| r.omega_bar).collect();
        prop_assert!(omegas.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn fan_file_round_trips(seed in any::<u64>(), coeffs in prop::collection::vec(0i64..=10, 3 * 64)) {
        let fan = random_fan(seed);
        let n = fan.rays.len();
        let ds = DivisorSet::new(coeffs.chunks(64).map(|c| Divisor::new(c[..n].to_vec())).collect());
        let p = principalize_many(&fan, &ds, DEFAULT_BUDGET).unwrap();
        let (f2, d2) = FanFile::from_json(&FanFile::new(&p.fan, &p.divisors).to_json()).unwrap();
        prop_assert_eq!(f2.rays, p.fan.rays);
        prop_assert_eq!(d2, p.divisors);
    }
}

#[test]
fn unit_jet_has_trivial_jacobian() {
    let id = Germ::new(PointKind::OnePoint, PointKind::OnePoint, Payload::mono([1, 0, 0]), Payload::mono([0, 1, 0]), Payload::mono([0, 0, 1]));
    assert!(jacobian_det(&id).unwrap().coefficient(&ExpVec::zero(3)).is_one());
}
