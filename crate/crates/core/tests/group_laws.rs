//! Group laws and structural properties of map words, on random words.

use approx::assert_abs_diff_eq;
use diskqm::geometry::{EPS_SYMP_CLOSED, EPS_SYMP_FLOW};
use diskqm::hamiltonian::TimeDependentHamiltonian;
use diskqm::{Letter, MapWord, Point, RadialProfile};
use proptest::prelude::*;
use std::f64::consts::TAU;

fn letter(closed_form_only: bool) -> impl Strategy<Value = Letter> {
    let rotation = (-TAU..TAU).prop_map(|a| MapWord::rotation(a).letters[0].clone());
    let twist = (-2.0..2.0f64, 0..RadialProfile::builtin_labels().len()).prop_map(|(s, i)| {
        let profile = RadialProfile::builtin(RadialProfile::builtin_labels()[i]).unwrap();
        MapWord::twist(s, profile).letters[0].clone()
    });
    let flow = prop::sample::select(vec!["quarter_bump", "asym", "conjugator"]).prop_map(|label| {
        MapWord::flow(TimeDependentHamiltonian::builtin(label).unwrap(), 64)
            .unwrap()
            .letters[0]
            .clone()
    });
    let base = prop_oneof![3 => rotation, 3 => twist, (if closed_form_only { 0 } else { 1 }) => flow];
    (base, any::<bool>()).prop_map(|(l, inv)| if inv { l.inverse() } else { l })
}

fn word(closed_form_only: bool) -> impl Strategy<Value = MapWord> {
    prop::collection::vec(letter(closed_form_only), 0..4).prop_map(MapWord::from_letters)
}

fn disk_point() -> impl Strategy<Value = Point> {
    (0.0..1.0f64, 0.0..TAU).prop_map(|(u, t)| Point::polar(u.sqrt(), t))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn composition_is_associative(g in word(false), h in word(false), k in word(false), p in disk_point()) {
        let left = g.compose(&h).compose(&k).eval(p).unwrap();
        let right = g.compose(&h.compose(&k)).eval(p).unwrap();
        prop_assert!(left.dist(right) <= 1e-12);
    }

    #[test]
    fn closed_form_inverse_is_exact(g in word(true), p in disk_point()) {
        prop_assert!(g.compose(&g.inverse()).eval(p).unwrap().dist(p) <= 1e-9);
        prop_assert!(g.inverse().compose(&g).eval(p).unwrap().dist(p) <= 1e-9);
    }

    #[test]
    fn flow_inverse_within_integrator_tolerance(g in word(false), p in disk_point()) {
        prop_assert!(g.compose(&g.inverse()).eval(p).unwrap().dist(p) <= g.point_tolerance());
    }

    #[test]
    fn area_is_preserved(g in word(false), p in disk_point()) {
        let det = g.jacobian(p).unwrap().det();
        let tol = if g.has_flow() { EPS_SYMP_FLOW } else { EPS_SYMP_CLOSED };
        prop_assert!((det - 1.0).abs() <= tol, "det {det}");
    }

    #[test]
    fn boundary_is_preserved(g in word(false), theta in 0.0..TAU) {
        let image = g.eval(Point::polar(1.0, theta)).unwrap();
        prop_assert!((image.norm() - 1.0).abs() <= g.point_tolerance());
    }

    #[test]
    fn origin_fixing_words_fix_the_origin(g in word(false)) {
        if g.fixes_origin.is_yes() {
            prop_assert!(g.eval(Point::new(0.0, 0.0)).unwrap().norm() <= g.point_tolerance());
        }
    }
}

#[test]
fn twist_boundary_shift_matches_profile() {
    let g = MapWord::twist(0.7, RadialProfile::r_squared());
    for i in 0..256 {
        let theta = TAU * i as f64 / 256.0;
        assert_abs_diff_eq!(g.boundary_lift_eval(theta), theta + 0.7, epsilon = 1e-12);
    }
}

#[test]
fn powers_agree_with_repeated_composition() {
    let g = MapWord::twist(0.3, RadialProfile::bump()).compose(&MapWord::rotation(1.1));
    let p = Point::new(0.3, -0.4);
    let mut q = p;
    for _ in 0..5 {
        q = g.eval(q).unwrap();
    }
    let direct = g.power(5).reduce().eval(p).unwrap();
    assert_abs_diff_eq!(direct.x, q.x, epsilon = 1e-12);
    assert_abs_diff_eq!(direct.y, q.y, epsilon = 1e-12);
    let back = g.power(-5).eval(direct).unwrap();
    assert_abs_diff_eq!(back.dist(p), 0.0, epsilon = 1e-9);
}
