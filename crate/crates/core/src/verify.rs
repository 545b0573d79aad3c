//! Named verification suites over a built-in battery of maps and isotopies
//! plus seeded random elements.
//!
//! Every check is an [`IdentityReport`] carrying its residual and the
//! allowed bound broken into terms (homogenization `D/n`, translation
//! number `1/n`, quadrature).
//!
//! Homogenization is expensive for words whose powers do not reduce, so each
//! homogenized value uses the largest power `2^k <= 2^k_max` whose cost fits
//! `RunConfig::work_budget`. The power used is part of the report, and the
//! bound `D/n` is computed for that power.

use crate::circle::{self, CircleLift};
use crate::compute::{sigma_power, tau_power};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::forms::{DiskPath, PrimitiveOneForm, Quadrature};
use crate::geometry::{MapWord, RadialProfile};
use crate::hamiltonian::TimeDependentHamiltonian;
use crate::isotopy::{
    product_isotopy, r_functional, rk4_order_ratios, s_functional, s_is_homomorphism, verify_lemma_sigma_s,
    verify_lemma_tau_r, verify_thm_main1, verify_thm_main2, verify_thm_mod1, verify_thm_mod1_general, CheckConfig,
    IdentityReport, Isotopy, EXACT_IDENTITY_TOL,
};
use crate::quasimorphism::{
    self, alternative_form, calabi, coboundary, defect_estimate, flux, homogenize, tau, GroupSample,
    MeanDisplacementBase, QmEstimate, QuasiMorphismBase, SigmaBase, TauBase,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

pub const SUITES: [&str; 7] = [
    "theorem1",
    "theorem2",
    "theorem3",
    "mod1",
    "lemmas",
    "defects",
    "independence",
];

/// RK4 steps of the conjugating flow `k` used throughout the battery.
pub const CONJUGATOR_STEPS: usize = 32;
/// Tolerance for sampled defects of true homomorphisms.
pub const HOMOMORPHISM_DEFECT_TOL: f64 = 2e-6;
/// Bound on mean-displacement defects (`< 4 pi` integrated over the circle).
pub const MEAN_DISPLACEMENT_DEFECT_BOUND: f64 = 2.0;
/// Required raw spread of `tau` across forms for the independence check to
/// be meaningful.
pub const NON_VACUOUS_THRESHOLD: f64 = 1e-3;
/// Number of seeded pairs in the additivity check.
pub const ADDITIVITY_PAIRS: usize = 20;

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub checks: Vec<IdentityReport>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &IdentityReport> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

pub fn run_suite(name: &str, cfg: &RunConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    let checks = match name {
        "theorem1" => theorem1(cfg)?,
        "theorem2" => theorem2(cfg)?,
        "theorem3" => theorem3(cfg)?,
        "mod1" => mod1(cfg)?,
        "lemmas" => lemmas(cfg)?,
        "defects" => defects(cfg)?,
        "independence" => independence(cfg)?,
        other => {
            return Err(Error::Spec(format!(
                "unknown suite `{other}` (one of {SUITES:?} or all)"
            )))
        }
    };
    Ok(SuiteReport {
        suite: name.to_string(),
        seed: cfg.seed,
        checks,
    })
}

// ---------------------------------------------------------------- battery

pub fn conjugator() -> TimeDependentHamiltonian {
    TimeDependentHamiltonian::builtin("conjugator").expect("built-in")
}

fn builtin(label: &str) -> TimeDependentHamiltonian {
    TimeDependentHamiltonian::builtin(label).expect("built-in")
}

fn conj(inner: Isotopy) -> Isotopy {
    Isotopy::conjugated(inner, conjugator(), CONJUGATOR_STEPS).expect("valid conjugator")
}

fn conj_word(w: &MapWord) -> MapWord {
    w.conjugate(&MapWord::flow(conjugator(), CONJUGATOR_STEPS).expect("valid conjugator"))
}

fn random_profile(rng: &mut ChaCha8Rng) -> RadialProfile {
    let labels = RadialProfile::builtin_labels();
    RadialProfile::builtin(labels[rng.gen_range(0..labels.len())]).expect("built-in")
}

/// Seeded radial and conjugated-radial isotopies.
pub fn random_isotopies(seed: u64, count: usize) -> Vec<Isotopy> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1507);
    (0..count)
        .map(|i| {
            let inner = if rng.gen_bool(0.3) {
                Isotopy::rotation(rng.gen_range(-PI..PI))
            } else {
                Isotopy::twist(rng.gen_range(-0.8..0.8), random_profile(&mut rng))
            };
            if i % 2 == 1 {
                conj(inner)
            } else {
                inner
            }
        })
        .collect()
}

/// Built-in isotopies covering all kinds, followed by seeded random ones.
pub fn isotopy_battery(cfg: &RunConfig) -> Vec<Isotopy> {
    let steps = cfg.rk4_steps;
    let mut out = vec![
        Isotopy::rotation(0.8),
        Isotopy::rotation(-2.3),
        Isotopy::twist(1.0, RadialProfile::r_squared()),
        Isotopy::twist(-0.6, RadialProfile::bump()),
        Isotopy::twist(0.9, RadialProfile::ring()),
        Isotopy::twist(0.5, RadialProfile::one_minus_r2()),
        Isotopy::hamiltonian(builtin("quarter_bump"), steps).expect("valid"),
        Isotopy::hamiltonian(builtin("asym"), steps).expect("valid"),
        Isotopy::hamiltonian(builtin("drift"), steps).expect("valid"),
        conj(Isotopy::twist(0.7, RadialProfile::r_squared())),
        conj(Isotopy::rotation(1.2)),
        conj(Isotopy::twist(-0.5, RadialProfile::bump())),
    ];
    out.extend(random_isotopies(cfg.seed, 2));
    out
}

/// Seeded elements of the origin stabilizer: radial words and their
/// conjugates by `k`.
pub fn origin_fixing_sample(seed: u64, count: usize) -> Vec<MapWord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6_0001);
    (0..count)
        .map(|i| {
            let mut w = MapWord::rotation(rng.gen_range(-PI..PI))
                .compose(&MapWord::twist(rng.gen_range(-0.6..0.6), random_profile(&mut rng)));
            if rng.gen_bool(0.5) {
                w = w.compose(&MapWord::twist(rng.gen_range(-0.6..0.6), random_profile(&mut rng)));
            }
            if i % 2 == 1 {
                conj_word(&w)
            } else {
                w
            }
        })
        .collect()
}

/// Elements fixing the boundary pointwise.
pub fn boundary_fixing_sample(seed: u64, count: usize) -> Vec<MapWord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xCA1);
    (0..count)
        .map(|i| {
            let profile = if rng.gen_bool(0.5) {
                RadialProfile::bump()
            } else {
                RadialProfile::ring()
            };
            let w = MapWord::twist(rng.gen_range(-1.0..1.0), profile);
            if i % 2 == 1 {
                conj_word(&w)
            } else {
                w
            }
        })
        .collect()
}

// ---------------------------------------------------------------- helpers

fn tau_k(g: &MapWord, cfg: &RunConfig) -> u32 {
    tau_power(g, &PrimitiveOneForm::lambda(), cfg)
}

fn sigma_k(g: &MapWord, cfg: &RunConfig) -> u32 {
    sigma_power(g, &PrimitiveOneForm::lambda(), cfg)
}

fn check_cfg(cfg: &RunConfig, k_max: u32) -> CheckConfig {
    CheckConfig {
        k_max,
        ..cfg.check_config()
    }
}

fn with_power(mut rep: IdentityReport, k: u32) -> IdentityReport {
    rep.components.push(("n".into(), (1u64 << k) as f64));
    rep
}

fn label_word(w: &MapWord) -> String {
    w.to_string()
}

/// `tau-bar - pi sigma-bar` at a budgeted power.
fn hom_difference_budgeted(g: &MapWord, cfg: &RunConfig) -> Result<quasimorphism::HomDifference> {
    let k = tau_k(g, cfg).min(sigma_k(g, cfg));
    quasimorphism::hom_difference(g, k, &cfg.quadrature)
}

// ---------------------------------------------------------------- suites

fn theorem1(cfg: &RunConfig) -> Result<Vec<IdentityReport>> {
    isotopy_battery(cfg)
        .iter()
        .map(|iso| {
            let k = tau_k(&iso.endpoint_word(), cfg);
            Ok(with_power(verify_thm_main1(iso, &check_cfg(cfg, k))?, k))
        })
        .collect()
}

fn theorem2(cfg: &RunConfig) -> Result<Vec<IdentityReport>> {
    isotopy_battery(cfg)
        .iter()
        .filter(|iso| iso.fixes_origin())
        .map(|iso| {
            let k = sigma_k(&iso.endpoint_word(), cfg);
            Ok(with_power(verify_thm_main2(iso, &check_cfg(cfg, k))?, k))
        })
        .collect()
}

fn theorem3(cfg: &RunConfig) -> Result<Vec<IdentityReport>> {
    let q = cfg.quadrature;
    let mut out = Vec::new();

    // additivity of tau-bar - pi sigma-bar on seeded pairs
    let sample = GroupSample::random_pairs(origin_fixing_sample(cfg.seed, 8), ADDITIVITY_PAIRS, cfg.seed);
    let singles: Vec<_> = sample
        .elements
        .iter()
        .map(|g| hom_difference_budgeted(g, cfg))
        .collect::<Result<_>>()?;
    for &(i, j) in &sample.pairs {
        let (g, h) = (&sample.elements[i], &sample.elements[j]);
        let gh = g.compose(h);
        let prod = hom_difference_budgeted(&gh, cfg)?;
        let (a, b) = (&singles[i].difference, &singles[j].difference);
        out.push(IdentityReport::new(
            "hom_difference_additive",
            format!("({}) * ({})", label_word(g), label_word(h)),
            prod.difference.value,
            a.value + b.value,
            (prod.difference.value - a.value - b.value).abs(),
            vec![
                ("homogenization(gh)".into(), prod.difference.error_bound),
                ("homogenization(g)".into(), a.error_bound),
                ("homogenization(h)".into(), b.error_bound),
                ("quadrature".into(), 3.0 * EXACT_IDENTITY_TOL),
            ],
            vec![
                ("n(gh)".into(), prod.difference.meta.n.unwrap_or(1) as f64),
                ("n(g)".into(), a.meta.n.unwrap_or(1) as f64),
                ("n(h)".into(), b.meta.n.unwrap_or(1) as f64),
            ],
        ));
    }

    // surjectivity witness and rotations
    for s in [1.0, -2.0] {
        let g = MapWord::twist(s, RadialProfile::bump());
        let hd = quasimorphism::hom_difference(&g, cfg.k_max, &q)?;
        let expect = s * PI / 12.0;
        out.push(IdentityReport::new(
            "surjectivity_witness",
            label_word(&g),
            hd.difference.value,
            expect,
            (hd.difference.value - expect).abs(),
            vec![("oracle".into(), 1e-5)],
            vec![
                ("tau_bar".into(), hd.tau_bar.value),
                ("sigma_bar".into(), hd.sigma_bar.value),
            ],
        ));
    }
    for alpha in [0.9, -2.4] {
        let hd = quasimorphism::hom_difference(&MapWord::rotation(alpha), cfg.k_max, &q)?;
        out.push(IdentityReport::new(
            "rotation_kernel",
            format!("R({alpha})"),
            hd.difference.value,
            0.0,
            hd.difference.value.abs(),
            vec![
                ("homogenization".into(), hd.difference.error_bound),
                ("quadrature".into(), EXACT_IDENTITY_TOL),
            ],
            vec![],
        ));
    }

    // homogenizations extend Calabi and flux
    for g in boundary_fixing_sample(cfg.seed, 4) {
        let k = tau_k(&g, cfg).min(sigma_k(&g, cfg));
        let tau_bar = homogenize(&TauBase::lambda(q), &g, k, None)?;
        let cal = calabi(&g, &q)?;
        out.push(IdentityReport::new(
            "tau_bar_extends_calabi",
            label_word(&g),
            tau_bar.value,
            cal,
            (tau_bar.value - cal).abs(),
            vec![
                ("homogenization".into(), tau_bar.error_bound),
                ("quadrature".into(), EXACT_IDENTITY_TOL),
            ],
            vec![("n".into(), (1u64 << k) as f64)],
        ));
        let sigma_bar = homogenize(&SigmaBase::lambda_x_axis(q), &g, k, None)?;
        let fl = flux(&g, &DiskPath::x_axis(), &q)?;
        out.push(IdentityReport::new(
            "sigma_bar_extends_flux",
            label_word(&g),
            sigma_bar.value,
            fl,
            (sigma_bar.value - fl).abs(),
            vec![
                ("homogenization".into(), sigma_bar.error_bound),
                ("quadrature".into(), EXACT_IDENTITY_TOL),
            ],
            vec![("n".into(), (1u64 << k) as f64)],
        ));
    }
    Ok(out)
}

fn mod1(cfg: &RunConfig) -> Result<Vec<IdentityReport>> {
    let c = cfg.check_config();
    let mut out = Vec::new();
    for iso in [
        Isotopy::identity(),
        Isotopy::rotation(2.0 * PI),
        Isotopy::rotation(4.0 * PI),
        Isotopy::rotation(-2.0 * PI),
        conj(Isotopy::rotation(2.0 * PI)),
    ] {
        out.push(verify_thm_mod1(&iso, &c)?);
    }
    for iso in [
        Isotopy::rotation(0.8),
        Isotopy::rotation(PI / 2.0),
        Isotopy::twist(1.0, RadialProfile::r_squared()),
        Isotopy::twist(-0.6, RadialProfile::bump()),
        Isotopy::hamiltonian(builtin("quarter_bump"), cfg.rk4_steps)?,
        conj(Isotopy::twist(0.7, RadialProfile::r_squared())),
    ] {
        let k = tau_k(&iso.endpoint_word(), cfg);
        out.push(with_power(verify_thm_mod1_general(&iso, &check_cfg(cfg, k))?, k));
    }
    Ok(out)
}

fn lemmas(cfg: &RunConfig) -> Result<Vec<IdentityReport>> {
    let c = cfg.check_config();
    let q = cfg.quadrature;
    let battery = isotopy_battery(cfg);
    let mut out = Vec::new();
    for iso in &battery {
        out.push(verify_lemma_tau_r(iso, &c)?);
    }
    for iso in battery.iter().filter(|i| i.fixes_origin()) {
        out.push(verify_lemma_sigma_s(iso, &c)?);
        // S does not depend on the path
        let bent = DiskPath::bent(0.3)?;
        let (s1, s2) = (
            s_functional(iso, &DiskPath::x_axis(), &q, c.t_steps)?,
            s_functional(iso, &bent, &q, c.t_steps)?,
        );
        out.push(IdentityReport::new(
            "S_path_independent",
            iso.label(),
            s1,
            s2,
            (s1 - s2).abs(),
            vec![("quadrature".into(), 1e-8)],
            vec![],
        ));
    }

    // S and R are homomorphisms
    let steps = cfg.rk4_steps;
    let f = RadialProfile::bump();
    let pairs = vec![
        (Isotopy::rotation(0.4), Isotopy::rotation(-1.3)),
        (Isotopy::twist(0.6, f.clone()), Isotopy::twist(-0.2, f.clone())),
        (Isotopy::identity(), Isotopy::hamiltonian(builtin("asym"), steps)?),
        (Isotopy::hamiltonian(builtin("asym"), steps)?, Isotopy::rotation(0.5)),
        (
            conj(Isotopy::twist(0.7, RadialProfile::r_squared())),
            conj(Isotopy::rotation(-0.4)),
        ),
        (
            conj(Isotopy::twist(0.3, RadialProfile::ring())),
            Isotopy::twist(0.5, RadialProfile::r_squared()),
        ),
    ];
    for (a, b) in &pairs {
        out.push(s_is_homomorphism(a, b, &c)?);
    }
    for (a, b) in [
        (Isotopy::rotation(0.4), Isotopy::rotation(-1.3)),
        (Isotopy::twist(0.6, f.clone()), Isotopy::rotation(0.9)),
        (
            Isotopy::twist(0.6, f.clone()),
            Isotopy::twist(0.3, RadialProfile::ring()),
        ),
    ] {
        let prod = product_isotopy(&a, &b)?;
        let (rp, ra, rb) = (
            r_functional(&prod, &q, c.t_steps),
            r_functional(&a, &q, c.t_steps),
            r_functional(&b, &q, c.t_steps),
        );
        out.push(IdentityReport::new(
            "R_homomorphism",
            format!("{} * {}", a.label(), b.label()),
            rp,
            ra + rb,
            (rp - ra - rb).abs(),
            vec![("quadrature".into(), 2e-8)],
            vec![],
        ));
    }

    // Cal(h_1) = -2R on boundary-fixing paths
    for iso in [
        Isotopy::twist(-0.6, RadialProfile::bump()),
        Isotopy::twist(0.9, RadialProfile::ring()),
        conj(Isotopy::twist(-0.5, RadialProfile::bump())),
    ] {
        let cal = calabi(&iso.endpoint_word(), &q)?;
        let r = r_functional(&iso, &q, c.t_steps);
        out.push(IdentityReport::new(
            "calabi_equals_minus_2R",
            iso.label(),
            cal,
            -2.0 * r,
            (cal + 2.0 * r).abs(),
            vec![("quadrature".into(), 2e-6)],
            vec![],
        ));
    }

    // RK4 order across three step doublings
    for label in ["asym", "conjugator"] {
        let ratios = rk4_order_ratios(&builtin(label), 16, 3);
        for (i, ratio) in ratios.iter().enumerate() {
            out.push(IdentityReport::new(
                "rk4_order_ratio",
                format!("{label}: {} vs {} steps", 16 << i, 32 << i),
                *ratio,
                16.0,
                (ratio - 16.0).abs(),
                vec![("order-4 window [12, 20]".into(), 4.0)],
                vec![],
            ));
        }
    }
    Ok(out)
}

/// Calabi as a base for defect sampling.
struct CalabiBase {
    q: Quadrature,
}

impl QuasiMorphismBase for CalabiBase {
    type Element = MapWord;
    fn name(&self) -> String {
        "calabi".into()
    }
    fn value(&self, g: &MapWord) -> Result<f64> {
        calabi(g, &self.q)
    }
    fn product(&self, g: &MapWord, h: &MapWord) -> MapWord {
        g.compose(h)
    }
    fn power(&self, g: &MapWord, n: u64) -> MapWord {
        g.power(n as i64)
    }
}

/// Real flux along the x-axis as a base for defect sampling.
struct FluxBase {
    q: Quadrature,
}

impl QuasiMorphismBase for FluxBase {
    type Element = MapWord;
    fn name(&self) -> String {
        "flux".into()
    }
    fn value(&self, g: &MapWord) -> Result<f64> {
        flux(g, &DiskPath::x_axis(), &self.q)
    }
    fn product(&self, g: &MapWord, h: &MapWord) -> MapWord {
        g.compose(h)
    }
    fn power(&self, g: &MapWord, n: u64) -> MapWord {
        g.power(n as i64)
    }
}

fn defect_report(name: &str, subject: String, defect: f64, bound: f64, bound_label: &str) -> IdentityReport {
    IdentityReport::new(
        name,
        subject,
        defect,
        0.0,
        defect,
        vec![(bound_label.into(), bound)],
        vec![],
    )
}

fn defects(cfg: &RunConfig) -> Result<Vec<IdentityReport>> {
    let q = cfg.quadrature;
    let mut out = Vec::new();

    // mean displacement on circle lifts
    let mut lifts: Vec<CircleLift> = vec![CircleLift::shift(0.7), CircleLift::shift(-2.0)];
    for g in origin_fixing_sample(cfg.seed, 4) {
        lifts.push(circle::boundary_lift(&g, 0)?);
    }
    for iso in isotopy_battery(cfg)
        .iter()
        .filter(|i| !i.endpoint_word().is_rotation_equivariant())
    {
        lifts.push(iso.boundary_lift());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xF00);
    for _ in 0..3 {
        let (a, b) = (rng.gen_range(0.05..0.2), rng.gen_range(-PI..PI));
        lifts.push(CircleLift::from_fn(format!("wobble({a:.3},{b:.3})"), move |t| {
            t + b + a * (2.0 * t).sin()
        }));
    }
    let n_lifts = lifts.len();
    let sample = GroupSample::all_pairs(lifts, cfg.seed);
    let base = MeanDisplacementBase { q };
    let d = defect_estimate(&base, &sample)?;
    out.push(defect_report(
        "mean_displacement_defect",
        format!("{n_lifts} lifts, all pairs"),
        d,
        MEAN_DISPLACEMENT_DEFECT_BOUND,
        "bound",
    ));

    // Calabi and flux are homomorphisms on boundary-fixing maps
    let rel = GroupSample::all_pairs(boundary_fixing_sample(cfg.seed, 4), cfg.seed);
    let d = defect_estimate(&CalabiBase { q }, &rel)?;
    out.push(defect_report(
        "calabi_defect",
        "4 boundary-fixing maps, all pairs".into(),
        d,
        HOMOMORPHISM_DEFECT_TOL,
        "homomorphism",
    ));
    let d = defect_estimate(&FluxBase { q }, &rel)?;
    out.push(defect_report(
        "flux_defect",
        "4 boundary-fixing maps, all pairs".into(),
        d,
        HOMOMORPHISM_DEFECT_TOL,
        "homomorphism",
    ));

    // tau_lambda is additive on rotations and twists
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x7A0);
    let radial: Vec<MapWord> = (0..5)
        .map(|_| {
            MapWord::rotation(rng.gen_range(-PI..PI))
                .compose(&MapWord::twist(rng.gen_range(-1.0..1.0), random_profile(&mut rng)))
        })
        .collect();
    let d = defect_estimate(&TauBase::lambda(q), &GroupSample::all_pairs(radial, cfg.seed))?;
    out.push(defect_report(
        "tau_defect_radial",
        "5 radial words, all pairs".into(),
        d,
        HOMOMORPHISM_DEFECT_TOL,
        "homomorphism",
    ));

    // delta tau_lambda depends only on boundary restrictions
    let base = TauBase::lambda(q);
    let elems = origin_fixing_sample(cfg.seed.wrapping_add(1), 4);
    let rel = boundary_fixing_sample(cfg.seed.wrapping_add(1), 4);
    for i in 0..elems.len() {
        let (g, h) = (&elems[i], &elems[(i + 1) % elems.len()]);
        let (g2, h2) = (g.compose(&rel[i]), h.compose(&rel[(i + 2) % rel.len()]));
        let (d1, d2) = (coboundary(&base, g, h)?, coboundary(&base, &g2, &h2)?);
        out.push(IdentityReport::new(
            "coboundary_boundary_dependence",
            format!("({}) , ({})", label_word(g), label_word(h)),
            d1,
            d2,
            (d1 - d2).abs(),
            vec![("quadrature".into(), HOMOMORPHISM_DEFECT_TOL)],
            vec![],
        ));
    }
    Ok(out)
}

fn independence(cfg: &RunConfig) -> Result<Vec<IdentityReport>> {
    let q = cfg.quadrature;
    let mut out = Vec::new();
    let alt = alternative_form();
    let maps = vec![
        MapWord::rotation(0.7),
        MapWord::rotation(-2.1),
        MapWord::twist(0.8, RadialProfile::r_squared()),
        MapWord::rotation(1.1).compose(&MapWord::twist(-0.5, RadialProfile::ring())),
        conj_word(&MapWord::twist(0.6, RadialProfile::r_squared())),
        conj_word(&MapWord::rotation(0.9)),
    ];

    // tau-bar does not depend on the primitive, even where tau does
    let mut raw_spread: f64 = 0.0;
    for g in &maps {
        let k = tau_power(g, &alt, cfg);
        let lam = homogenize(&TauBase::lambda(q), g, k, None)?;
        let other = homogenize(&TauBase { eta: alt.clone(), q }, g, k, None)?;
        raw_spread = raw_spread.max((tau(&alt, g, &q)? - tau(&PrimitiveOneForm::lambda(), g, &q)?).abs());
        out.push(IdentityReport::new(
            "tau_bar_form_independent",
            label_word(g),
            other.value,
            lam.value,
            (other.value - lam.value).abs(),
            vec![
                ("homogenization(lambda)".into(), lam.error_bound),
                (format!("homogenization({})", alt.label), other.error_bound),
                ("quadrature".into(), EXACT_IDENTITY_TOL),
            ],
            vec![("n".into(), (1u64 << k) as f64)],
        ));
    }
    out.push(IdentityReport::exceeds(
        "tau_form_dependence_non_vacuous",
        format!("max |tau_{} - tau_lambda| over the maps", alt.label),
        raw_spread,
        NON_VACUOUS_THRESHOLD,
        vec![],
    ));

    // sigma-bar across two paths and two forms
    let choices = [
        (PrimitiveOneForm::lambda(), DiskPath::bent(0.3)?),
        (alt.clone(), DiskPath::x_axis()),
        (alt.clone(), DiskPath::bent(-0.25)?),
    ];
    for g in &maps {
        let k = choices
            .iter()
            .map(|(eta, _)| sigma_power(g, eta, cfg))
            .min()
            .unwrap_or(0);
        let reference = homogenize(&SigmaBase::lambda_x_axis(q), g, k, None)?;
        for (eta, path) in &choices {
            let est = homogenize(
                &SigmaBase {
                    eta: eta.clone(),
                    path: path.clone(),
                    q,
                },
                g,
                k,
                None,
            )?;
            out.push(IdentityReport::new(
                "sigma_bar_independent",
                format!("{} [{}, {}]", label_word(g), eta.label, path.label()),
                est.value,
                reference.value,
                (est.value - reference.value).abs(),
                vec![
                    ("homogenization(reference)".into(), reference.error_bound),
                    ("homogenization".into(), est.error_bound),
                    ("quadrature".into(), EXACT_IDENTITY_TOL),
                ],
                vec![("n".into(), (1u64 << k) as f64)],
            ));
        }
    }

    // homogeneity
    for g in [&maps[2], &maps[3], &maps[4]] {
        for m in [2i64, 3] {
            let gm = g.power(m);
            let k = tau_k(&gm, cfg).min(tau_k(g, cfg));
            let base = TauBase::lambda(q);
            let (one, many): (QmEstimate, QmEstimate) =
                (homogenize(&base, g, k, None)?, homogenize(&base, &gm, k, None)?);
            out.push(IdentityReport::new(
                "tau_bar_homogeneous",
                format!("({})^{m}", label_word(g)),
                many.value,
                m as f64 * one.value,
                (many.value - m as f64 * one.value).abs(),
                vec![
                    ("homogenization(g^m)".into(), many.error_bound),
                    ("homogenization(g)".into(), m as f64 * one.error_bound),
                    ("quadrature".into(), EXACT_IDENTITY_TOL),
                ],
                vec![],
            ));
        }
    }
    Ok(out)
}

/// Every suite, in `SUITES` order.
pub fn run_all(cfg: &RunConfig) -> Result<Vec<SuiteReport>> {
    SUITES.iter().map(|s| run_suite(s, cfg)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_are_seeded() {
        let a = origin_fixing_sample(3, 6);
        assert_eq!(a, origin_fixing_sample(3, 6));
        assert_ne!(a, origin_fixing_sample(4, 6));
        assert!(a.iter().all(|g| g.fixes_origin.is_yes()));
        assert!(boundary_fixing_sample(3, 4)
            .iter()
            .all(|g| g.boundary_identity.is_yes()));
        let cfg = RunConfig::default();
        let battery = isotopy_battery(&cfg);
        assert!(battery.iter().any(|i| !i.fixes_origin()));
        assert!(battery.iter().any(|i| !i.endpoint_word().is_rotation_equivariant()));
    }

    #[test]
    fn unknown_suite_is_a_spec_error() {
        assert!(run_suite("theorem9", &RunConfig::default())
            .unwrap_err()
            .is_spec_error());
    }

    #[test]
    fn budget_lowers_power_only_when_needed() {
        let cfg = RunConfig::default();
        assert_eq!(tau_k(&MapWord::twist(1.0, RadialProfile::r_squared()), &cfg), cfg.k_max);
        let sheared = MapWord::twist(1.0, RadialProfile::r_squared());
        assert!(tau_power(&sheared, &alternative_form(), &cfg) < cfg.k_max);
        let conj = conj_word(&MapWord::rotation(0.5));
        assert_eq!(tau_k(&conj, &cfg), cfg.k_max);
        let flow = MapWord::flow(builtin("asym"), 256).unwrap();
        assert!(tau_k(&flow, &cfg) < cfg.k_max);
    }
}
