//! Isotopies `g_t` from the identity, their generating Hamiltonians, the path
//! functionals `R` and `S`, and the identities tying them to `tau`, `sigma`
//! and the boundary translation number.

use crate::circle::{self, CircleLift};
use crate::error::{Error, Result};
use crate::forms::{composite_nodes, integrate_disk, integrate_path, DiskPath, PrimitiveOneForm, Quadrature};
use crate::geometry::{Generator, Letter, MapWord, Mat2, Point, RadialProfile};
use crate::hamiltonian::{self, TimeDependentHamiltonian};
use crate::quasimorphism::{homogenize, sigma, tau, SigmaBase, TauBase};
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Arc;

/// Quadrature-only tolerance of the exact (pre-homogenization) identities.
pub const EXACT_IDENTITY_TOL: f64 = 1e-6;
/// Minimum RK4 step count for flow endpoints.
pub const MIN_FLOW_STEPS: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub enum IsotopyKind {
    /// `g_t = R_{t alpha}`.
    RotationPath { alpha: f64 },
    /// `g_t = Twist(t s, f)`.
    TwistPath { s: f64, profile: Arc<RadialProfile> },
    /// `g_t` = flow of the Hamiltonian vector field of `H_t`.
    HamiltonianPath {
        hamiltonian: Arc<TimeDependentHamiltonian>,
        steps: usize,
    },
    /// `g_t = k inner_t k^{-1}` with `k` the time-1 flow of `conjugator`.
    /// Generated by `H_t o k^{-1}`, which is not polynomial, but powers of
    /// the endpoint reduce to `k inner_1^n k^{-1}`.
    Conjugated {
        inner: Box<Isotopy>,
        conjugator: Arc<TimeDependentHamiltonian>,
        steps: usize,
    },
}

/// A path in the group starting at the identity, i.e. an element of the
/// universal cover.
#[derive(Clone, Debug, PartialEq)]
pub struct Isotopy {
    pub kind: IsotopyKind,
    generator: Option<Arc<TimeDependentHamiltonian>>,
}

/// Time-1 flow of `H` as a map word.
pub fn flow_endpoint(h: &TimeDependentHamiltonian, steps: usize) -> Result<MapWord> {
    if steps < MIN_FLOW_STEPS {
        return Err(Error::InvalidConfig(format!(
            "flow_endpoint needs at least {MIN_FLOW_STEPS} RK4 steps"
        )));
    }
    MapWord::flow(h.clone(), steps)
}

impl Isotopy {
    pub fn rotation(alpha: f64) -> Self {
        Self {
            kind: IsotopyKind::RotationPath { alpha },
            generator: Some(Arc::new(TimeDependentHamiltonian::rotation(alpha))),
        }
    }

    pub fn twist(s: f64, profile: RadialProfile) -> Self {
        Self {
            generator: Some(Arc::new(TimeDependentHamiltonian::twist(s, &profile))),
            kind: IsotopyKind::TwistPath {
                s,
                profile: Arc::new(profile),
            },
        }
    }

    pub fn hamiltonian(h: TimeDependentHamiltonian, steps: usize) -> Result<Self> {
        if steps < MIN_FLOW_STEPS {
            return Err(Error::InvalidConfig(format!(
                "hamiltonian paths need at least {MIN_FLOW_STEPS} RK4 steps"
            )));
        }
        h.check_boundary_constant(1e-8)?;
        let h = Arc::new(h);
        Ok(Self {
            kind: IsotopyKind::HamiltonianPath {
                hamiltonian: h.clone(),
                steps,
            },
            generator: Some(h),
        })
    }

    pub fn conjugated(inner: Isotopy, conjugator: TimeDependentHamiltonian, steps: usize) -> Result<Self> {
        if steps < MIN_FLOW_STEPS {
            return Err(Error::InvalidConfig(format!(
                "conjugating flows need at least {MIN_FLOW_STEPS} RK4 steps"
            )));
        }
        conjugator.check_boundary_constant(1e-8)?;
        Ok(Self {
            kind: IsotopyKind::Conjugated {
                inner: Box::new(inner),
                conjugator: Arc::new(conjugator),
                steps,
            },
            generator: None,
        })
    }

    pub fn identity() -> Self {
        Self::rotation(0.0)
    }

    pub fn label(&self) -> String {
        match &self.kind {
            IsotopyKind::RotationPath { alpha } => format!("rotation_path({alpha})"),
            IsotopyKind::TwistPath { s, profile } => format!("twist_path({s}, {})", profile.label),
            IsotopyKind::HamiltonianPath { hamiltonian, steps } => {
                format!("hamiltonian_path({}, {steps} steps)", hamiltonian.label)
            }
            IsotopyKind::Conjugated { inner, conjugator, .. } => {
                format!("conjugated({}, by {})", inner.label(), conjugator.label)
            }
        }
    }

    /// Polynomial Hamiltonian of `X_t` under `i_X omega = dH`, when there is
    /// one (all kinds except conjugated paths).
    pub fn generator(&self) -> Option<&TimeDependentHamiltonian> {
        self.generator.as_deref()
    }

    /// True when `X_t` does not depend on `t`.
    pub fn is_autonomous(&self) -> bool {
        match &self.kind {
            IsotopyKind::Conjugated { inner, .. } => inner.is_autonomous(),
            _ => self.generator.as_ref().is_some_and(|h| h.is_autonomous()),
        }
    }

    fn conjugator_word(conjugator: &TimeDependentHamiltonian, steps: usize) -> MapWord {
        MapWord::flow(conjugator.clone(), steps).expect("validated at construction")
    }

    /// The projection to the group: `g_1` as a word.
    pub fn endpoint_word(&self) -> MapWord {
        match &self.kind {
            IsotopyKind::RotationPath { alpha } => MapWord::rotation(*alpha),
            IsotopyKind::TwistPath { s, profile } => MapWord::letter(Letter::new(
                Generator::Twist {
                    s: *s,
                    profile: profile.clone(),
                },
                false,
            )),
            IsotopyKind::HamiltonianPath { hamiltonian, steps } => {
                MapWord::flow((**hamiltonian).clone(), *steps).expect("validated at construction")
            }
            IsotopyKind::Conjugated {
                inner,
                conjugator,
                steps,
            } => inner
                .endpoint_word()
                .conjugate(&Self::conjugator_word(conjugator, *steps)),
        }
    }

    /// The lift `phi~_1` of `g_1|boundary` reached continuously from `phi~_0 = id`.
    pub fn boundary_lift(&self) -> CircleLift {
        match &self.kind {
            IsotopyKind::RotationPath { alpha } => CircleLift::shift(*alpha),
            IsotopyKind::TwistPath { s, profile } => CircleLift::shift(s * profile.f(1.0)),
            IsotopyKind::HamiltonianPath { hamiltonian, steps } => {
                let (h, steps) = (hamiltonian.clone(), *steps);
                CircleLift::from_fn(format!("lift[{}]", h.label), move |theta| {
                    theta + hamiltonian::flow_with_winding(&h, Point::on_circle(theta), 0.0, 1.0, steps).1
                })
            }
            IsotopyKind::Conjugated {
                inner,
                conjugator,
                steps,
            } => {
                let (k, steps) = (conjugator.clone(), *steps);
                let inner = inner.boundary_lift();
                CircleLift::from_fn(format!("lift[{}]", self.label()), move |theta| {
                    let back = theta + hamiltonian::flow_with_winding(&k, Point::on_circle(theta), 1.0, 0.0, steps).1;
                    let mid = inner.eval(back);
                    mid + hamiltonian::flow_with_winding(&k, Point::on_circle(mid), 0.0, 1.0, steps).1
                })
            }
        }
    }

    fn steps_to(steps: usize, t: f64) -> usize {
        ((steps as f64 * t.abs()).ceil() as usize).max(1)
    }

    /// `g_t(p)`.
    pub fn eval_at(&self, t: f64, p: Point) -> Point {
        match &self.kind {
            IsotopyKind::RotationPath { alpha } => Mat2::rotation(t * alpha).apply(p),
            IsotopyKind::TwistPath { s, profile } => Mat2::rotation(t * s * profile.f(p.norm())).apply(p),
            IsotopyKind::HamiltonianPath { hamiltonian, steps } => {
                hamiltonian::flow(hamiltonian, p, 0.0, t, Self::steps_to(*steps, t))
            }
            IsotopyKind::Conjugated {
                inner,
                conjugator,
                steps,
            } => {
                let back = hamiltonian::flow(conjugator, p, 1.0, 0.0, *steps);
                hamiltonian::flow(conjugator, inner.eval_at(t, back), 0.0, 1.0, *steps)
            }
        }
    }

    /// `g_t^{-1}(p)` with its Jacobian.
    pub fn inverse_at_with_jacobian(&self, t: f64, p: Point) -> (Point, Mat2) {
        match &self.kind {
            IsotopyKind::RotationPath { alpha } => {
                let m = Mat2::rotation(-t * alpha);
                (m.apply(p), m)
            }
            IsotopyKind::TwistPath { s, profile } => {
                MapWord::twist(-t * s, (**profile).clone()).eval_with_jacobian_unchecked(p)
            }
            IsotopyKind::HamiltonianPath { hamiltonian, steps } => {
                hamiltonian::flow_with_jacobian(hamiltonian, p, t, 0.0, Self::steps_to(*steps, t))
            }
            IsotopyKind::Conjugated {
                inner,
                conjugator,
                steps,
            } => {
                let (p1, j1) = hamiltonian::flow_with_jacobian(conjugator, p, 1.0, 0.0, *steps);
                let (p2, j2) = inner.inverse_at_with_jacobian(t, p1);
                let (p3, j3) = hamiltonian::flow_with_jacobian(conjugator, p2, 0.0, 1.0, *steps);
                (p3, j3 * j2 * j1)
            }
        }
    }

    /// `H_t(p)` for the generator of `X_t`.
    pub fn hamiltonian_value(&self, t: f64, p: Point) -> f64 {
        match (&self.kind, &self.generator) {
            (
                IsotopyKind::Conjugated {
                    inner,
                    conjugator,
                    steps,
                },
                _,
            ) => inner.hamiltonian_value(t, hamiltonian::flow(conjugator, p, 1.0, 0.0, *steps)),
            (_, Some(h)) => h.value(t, p),
            _ => unreachable!("non-conjugated isotopies carry a generator"),
        }
    }

    /// Spatial gradient of `H_t` at `p`.
    pub fn hamiltonian_gradient(&self, t: f64, p: Point) -> Point {
        match (&self.kind, &self.generator) {
            (
                IsotopyKind::Conjugated {
                    inner,
                    conjugator,
                    steps,
                },
                _,
            ) => {
                // d(K o k^{-1}) = (D k^{-1})^T dK
                let (back, jac) = hamiltonian::flow_with_jacobian(conjugator, p, 1.0, 0.0, *steps);
                jac.transpose().apply(inner.hamiltonian_gradient(t, back))
            }
            (_, Some(h)) => h.gradient(t, p),
            _ => unreachable!("non-conjugated isotopies carry a generator"),
        }
    }

    /// Boundary value of `H_t`, read at `(1, 0)`.
    pub fn hamiltonian_boundary_value(&self, t: f64) -> f64 {
        match &self.kind {
            // k preserves the circle and the inner H_t is constant there
            IsotopyKind::Conjugated { inner, .. } => inner.hamiltonian_boundary_value(t),
            _ => self.generator.as_ref().expect("generator").boundary_value(t),
        }
    }

    /// Max `|X_t(a)|` over the time grid. For conjugated paths this is
    /// measured in the inner frame at `k^{-1}(a)`; it vanishes exactly when
    /// `X_t(a)` does.
    pub fn speed_at(&self, a: Point) -> f64 {
        match &self.kind {
            IsotopyKind::Conjugated {
                inner,
                conjugator,
                steps,
            } => inner.speed_at(hamiltonian::flow(conjugator, a, 1.0, 0.0, *steps)),
            _ => self.generator.as_ref().expect("generator").max_speed_at(a),
        }
    }

    pub fn fixes_point(&self, a: Point) -> bool {
        self.speed_at(a) <= 1e-12
    }

    pub fn fixes_origin(&self) -> bool {
        self.fixes_point(Point::ORIGIN)
    }

    fn require_fixes(&self, a: Point) -> Result<()> {
        if !self.fixes_point(a) {
            return Err(Error::OriginNotFixed(format!(
                "{} moves ({}, {}) (|X_t| up to {:e})",
                self.label(),
                a.x,
                a.y,
                self.speed_at(a)
            )));
        }
        Ok(())
    }

    /// Largest displacement of the projection `g_1` on sample points.
    pub fn endpoint_displacement(&self) -> f64 {
        self.endpoint_word().max_displacement(128)
    }
}

/// Pointwise product `t -> g_t h_t` when its generator stays in a family we
/// can represent: radial paths (rotations and twists commute, so the
/// generator is `H_t + K_t`) and paths conjugated by the same flow.
pub fn product_isotopy(a: &Isotopy, b: &Isotopy) -> Result<Isotopy> {
    use IsotopyKind::*;
    match (&a.kind, &b.kind) {
        (RotationPath { alpha }, RotationPath { alpha: beta }) => Ok(Isotopy::rotation(alpha + beta)),
        (TwistPath { s, profile }, TwistPath { s: t, profile: p2 }) if profile == p2 => {
            Ok(Isotopy::twist(s + t, (**profile).clone()))
        }
        (RotationPath { .. } | TwistPath { .. }, RotationPath { .. } | TwistPath { .. }) => {
            let h = a.generator().expect("radial").sum(b.generator().expect("radial"));
            Isotopy::hamiltonian(h, 256)
        }
        (
            Conjugated {
                inner: i1,
                conjugator: k1,
                steps: s1,
            },
            Conjugated {
                inner: i2,
                conjugator: k2,
                steps: s2,
            },
        ) if k1 == k2 && s1 == s2 => Isotopy::conjugated(product_isotopy(i1, i2)?, (**k1).clone(), *s1),
        _ => Err(Error::UnsupportedCombination(format!(
            "product of {} and {} has no closed-form generator",
            a.label(),
            b.label()
        ))),
    }
}

/// Composite Gauss-Legendre time nodes, collapsed to one node for
/// autonomous paths.
fn time_nodes(iso: &Isotopy, t_steps: usize) -> Vec<(f64, f64)> {
    if iso.is_autonomous() {
        vec![(0.5, 1.0)]
    } else {
        composite_nodes(t_steps)
    }
}

/// `R([g_t]) = int_0^1 int_D f_{X_t} omega dt` with `f_{X_t}` vanishing on
/// the boundary.
pub fn r_functional(iso: &Isotopy, q: &Quadrature, t_steps: usize) -> f64 {
    time_nodes(iso, t_steps)
        .iter()
        .map(|&(t, w)| {
            let boundary = iso.hamiltonian_boundary_value(t);
            w * integrate_disk(|p| iso.hamiltonian_value(t, p) - boundary, q)
        })
        .sum()
}

/// `S(g_t) = int_0^1 int_gamma i_{X_t} omega dt`; the isotopy must fix the
/// path's anchor.
pub fn s_functional(iso: &Isotopy, path: &DiskPath, q: &Quadrature, t_steps: usize) -> Result<f64> {
    iso.require_fixes(path.anchor())?;
    Ok(time_nodes(iso, t_steps)
        .iter()
        .map(|&(t, w)| w * integrate_path(|p| iso.hamiltonian_gradient(t, p), path, q))
        .sum())
}
/// How a check's residual is compared with its bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// Pass when `residual <= bound`.
    AtMost,
    /// Pass when `residual > bound` (non-vacuousness checks).
    Exceeds,
}

/// One checked identity: both sides, the residual, and the allowed bound
/// with its decomposition.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub name: String,
    pub subject: String,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub relation: Relation,
    pub bound: f64,
    pub bound_terms: Vec<(String, f64)>,
    pub components: Vec<(String, f64)>,
    pub passed: bool,
}

impl IdentityReport {
    /// `|lhs - rhs|`-style check passing when `residual <= sum(bound_terms)`.
    pub fn new(
        name: &str,
        subject: String,
        lhs: f64,
        rhs: f64,
        residual: f64,
        bound_terms: Vec<(String, f64)>,
        components: Vec<(String, f64)>,
    ) -> Self {
        let bound = bound_terms.iter().map(|(_, v)| v).sum();
        Self {
            name: name.into(),
            subject,
            lhs,
            rhs,
            residual,
            relation: Relation::AtMost,
            bound,
            bound_terms,
            components,
            passed: residual.is_finite() && residual <= bound,
        }
    }

    /// Passes when `value > threshold`.
    pub fn exceeds(name: &str, subject: String, value: f64, threshold: f64, components: Vec<(String, f64)>) -> Self {
        Self {
            name: name.into(),
            subject,
            lhs: value,
            rhs: threshold,
            residual: value,
            relation: Relation::Exceeds,
            bound: threshold,
            bound_terms: vec![("lower threshold".into(), threshold)],
            components,
            passed: value > threshold,
        }
    }
}

/// Settings shared by the identity checks.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CheckConfig {
    pub q: Quadrature,
    pub t_steps: usize,
    pub k_max: u32,
    pub n_rot: u64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            q: Quadrature::default(),
            t_steps: 32,
            k_max: 10,
            n_rot: 1024,
        }
    }
}

/// `tau_lambda(g_1) + 2R = pi^2 f(phi~_1)`, exact up to quadrature.
pub fn verify_lemma_tau_r(iso: &Isotopy, cfg: &CheckConfig) -> Result<IdentityReport> {
    let g1 = iso.endpoint_word();
    let tau_val = tau(&PrimitiveOneForm::lambda(), &g1, &cfg.q)?;
    let r = r_functional(iso, &cfg.q, cfg.t_steps);
    let f = circle::mean_displacement(&iso.boundary_lift(), &cfg.q);
    let (lhs, rhs) = (tau_val + 2.0 * r, PI * PI * f);
    Ok(IdentityReport::new(
        "lemma_tau_R",
        iso.label(),
        lhs,
        rhs,
        (lhs - rhs).abs(),
        vec![("quadrature".into(), EXACT_IDENTITY_TOL)],
        vec![("tau".into(), tau_val), ("R".into(), r), ("f".into(), f)],
    ))
}

/// `tau-bar(g_1) + 2R = pi^2 rot~(phi~_1)`.
pub fn verify_thm_main1(iso: &Isotopy, cfg: &CheckConfig) -> Result<IdentityReport> {
    let g1 = iso.endpoint_word();
    let tau_bar = homogenize(&TauBase::lambda(cfg.q), &g1, cfg.k_max, None)?;
    let r = r_functional(iso, &cfg.q, cfg.t_steps);
    let rot = circle::translation_number(&iso.boundary_lift(), cfg.n_rot);
    let (lhs, rhs) = (tau_bar.value + 2.0 * r, PI * PI * rot.value);
    Ok(IdentityReport::new(
        "theorem_tau_R_rot",
        iso.label(),
        lhs,
        rhs,
        (lhs - rhs).abs(),
        vec![
            ("homogenization".into(), tau_bar.error_bound),
            ("translation".into(), PI * PI * rot.error_bound),
            ("quadrature".into(), EXACT_IDENTITY_TOL),
        ],
        vec![
            ("tau_bar".into(), tau_bar.value),
            ("R".into(), r),
            ("rot".into(), rot.value),
        ],
    ))
}

/// For a loop (`g_1 = id`), `2R / pi^2` is an integer.
pub fn verify_thm_mod1(iso: &Isotopy, cfg: &CheckConfig) -> Result<IdentityReport> {
    let disp = iso.endpoint_displacement();
    if disp > iso.endpoint_word().point_tolerance() {
        return Err(Error::EndpointNotIdentity(disp));
    }
    let v = 2.0 * r_functional(iso, &cfg.q, cfg.t_steps) / (PI * PI);
    Ok(IdentityReport::new(
        "theorem_mod1_loop",
        iso.label(),
        v,
        v.round(),
        (v - v.round()).abs(),
        vec![("quadrature".into(), EXACT_IDENTITY_TOL)],
        vec![("2R/pi^2".into(), v)],
    ))
}

/// `frac(tau-bar / pi^2) + frac(2R / pi^2) = rot (mod 1)` for any isotopy.
pub fn verify_thm_mod1_general(iso: &Isotopy, cfg: &CheckConfig) -> Result<IdentityReport> {
    let g1 = iso.endpoint_word();
    let tau_bar = homogenize(&TauBase::lambda(cfg.q), &g1, cfg.k_max, None)?;
    let r = r_functional(iso, &cfg.q, cfg.t_steps);
    let lift = circle::boundary_lift(&g1, 0)?;
    let rot = circle::translation_number(&lift, cfg.n_rot);
    let under_tau = circle::frac(tau_bar.value / (PI * PI));
    let under_r = circle::frac(2.0 * r / (PI * PI));
    let lhs = circle::frac(under_tau + under_r);
    let rhs = circle::frac(rot.value);
    Ok(IdentityReport::new(
        "theorem_mod1",
        iso.label(),
        lhs,
        rhs,
        circle::circular_distance(lhs, rhs),
        vec![
            ("homogenization".into(), tau_bar.error_bound / (PI * PI)),
            ("translation".into(), rot.error_bound),
            ("quadrature".into(), EXACT_IDENTITY_TOL),
        ],
        vec![
            ("underline_tau".into(), under_tau),
            ("underline_R".into(), under_r),
            ("rot".into(), rhs),
        ],
    ))
}

/// `sigma_{lambda,gamma}(g_1) - S = phi~_1(0) / 2` on the x-axis path.
pub fn verify_lemma_sigma_s(iso: &Isotopy, cfg: &CheckConfig) -> Result<IdentityReport> {
    iso.require_fixes(Point::ORIGIN)?;
    let path = DiskPath::x_axis();
    let g1 = iso.endpoint_word();
    let sig = sigma(&PrimitiveOneForm::lambda(), &path, &g1, &cfg.q)?;
    let s = s_functional(iso, &path, &cfg.q, cfg.t_steps)?;
    let half_lift = 0.5 * iso.boundary_lift().eval(0.0);
    let lhs = sig - s;
    Ok(IdentityReport::new(
        "lemma_sigma_S",
        iso.label(),
        lhs,
        half_lift,
        (lhs - half_lift).abs(),
        vec![("quadrature".into(), EXACT_IDENTITY_TOL)],
        vec![
            ("sigma".into(), sig),
            ("S".into(), s),
            ("phi1(0)".into(), 2.0 * half_lift),
        ],
    ))
}

/// `sigma-bar(g_1) - S = pi rot~(phi~_1)`.
pub fn verify_thm_main2(iso: &Isotopy, cfg: &CheckConfig) -> Result<IdentityReport> {
    iso.require_fixes(Point::ORIGIN)?;
    let path = DiskPath::x_axis();
    let g1 = iso.endpoint_word();
    let sigma_bar = homogenize(&SigmaBase::lambda_x_axis(cfg.q), &g1, cfg.k_max, None)?;
    let s = s_functional(iso, &path, &cfg.q, cfg.t_steps)?;
    let rot = circle::translation_number(&iso.boundary_lift(), cfg.n_rot);
    let (lhs, rhs) = (sigma_bar.value - s, PI * rot.value);
    Ok(IdentityReport::new(
        "theorem_sigma_S_rot",
        iso.label(),
        lhs,
        rhs,
        (lhs - rhs).abs(),
        vec![
            ("homogenization".into(), sigma_bar.error_bound),
            ("translation".into(), PI * rot.error_bound),
            ("quadrature".into(), EXACT_IDENTITY_TOL),
        ],
        vec![
            ("sigma_bar".into(), sigma_bar.value),
            ("S".into(), s),
            ("rot".into(), rot.value),
        ],
    ))
}

/// `S` of the pointwise product `t -> g_t h_t`, generated by
/// `H_t + K_t ∘ g_t^{-1}`. The second term is evaluated by flowing path
/// points back to time 0, so no closed form for the product is needed.
pub fn s_of_product(a: &Isotopy, b: &Isotopy, path: &DiskPath, q: &Quadrature, t_steps: usize) -> Result<f64> {
    a.require_fixes(path.anchor())?;
    b.require_fixes(path.anchor())?;
    let nodes = q.path_nodes();
    Ok(composite_nodes(t_steps)
        .iter()
        .map(|&(t, wt)| {
            let vals = crate::par::map_slice(&nodes, |&(u, wu)| {
                let p = path.point(u);
                let (back, jac) = a.inverse_at_with_jacobian(t, p);
                // d(K o g_t^{-1}) = (D g_t^{-1})^T dK
                let grad = a.hamiltonian_gradient(t, p) + jac.transpose().apply(b.hamiltonian_gradient(t, back));
                wu * grad.dot(path.derivative(u))
            });
            wt * crate::par::ordered_sum(&vals)
        })
        .sum())
}

/// `S(g_t h_t) = S(g_t) + S(h_t)`.
pub fn s_is_homomorphism(a: &Isotopy, b: &Isotopy, cfg: &CheckConfig) -> Result<IdentityReport> {
    let path = DiskPath::x_axis();
    let sa = s_functional(a, &path, &cfg.q, cfg.t_steps)?;
    let sb = s_functional(b, &path, &cfg.q, cfg.t_steps)?;
    let (sab, route) = match product_isotopy(a, b) {
        Ok(prod) => (s_functional(&prod, &path, &cfg.q, cfg.t_steps)?, 0.0),
        Err(Error::UnsupportedCombination(_)) => (s_of_product(a, b, &path, &cfg.q, cfg.t_steps)?, 1.0),
        Err(e) => return Err(e),
    };
    Ok(IdentityReport::new(
        "S_homomorphism",
        format!("{} * {}", a.label(), b.label()),
        sab,
        sa + sb,
        (sab - sa - sb).abs(),
        vec![("quadrature".into(), EXACT_IDENTITY_TOL)],
        vec![
            ("S(a)".into(), sa),
            ("S(b)".into(), sb),
            ("numerical_product".into(), route),
        ],
    ))
}

/// Max endpoint discrepancy of the RK4 flow at `steps` against `2 * steps`,
/// over a fixed set of interior points.
pub fn rk4_step_error(h: &TimeDependentHamiltonian, steps: usize) -> f64 {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..32)
        .map(|i| {
            let p = Point::polar(0.95 * ((i as f64 + 0.5) / 32.0).sqrt(), golden * i as f64);
            hamiltonian::flow(h, p, 0.0, 1.0, steps).dist(hamiltonian::flow(h, p, 0.0, 1.0, 2 * steps))
        })
        .fold(0.0, f64::max)
}

/// Ratios `e(n) / e(2n)` of successive step-doubling errors.
pub fn rk4_order_ratios(h: &TimeDependentHamiltonian, base_steps: usize, doublings: usize) -> Vec<f64> {
    let errs: Vec<f64> = (0..=doublings).map(|k| rk4_step_error(h, base_steps << k)).collect();
    errs.windows(2).map(|w| w[0] / w[1]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::HamiltonianTerm;
    use std::f64::consts::TAU;

    fn cfg() -> CheckConfig {
        CheckConfig {
            k_max: 4,
            n_rot: 256,
            ..CheckConfig::default()
        }
    }

    fn asym() -> TimeDependentHamiltonian {
        TimeDependentHamiltonian::new(
            "asym",
            vec![
                HamiltonianTerm::autonomous(vec![0.4, -0.4], 0, 0),
                HamiltonianTerm {
                    time: vec![0.2, 0.6],
                    radial: vec![1.0, -2.0, 1.0],
                    px: 1,
                    py: 1,
                },
                HamiltonianTerm::autonomous(vec![0.3, -0.3], 2, 0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn flow_endpoint_examples() {
        let id = flow_endpoint(&TimeDependentHamiltonian::zero(), 16).unwrap();
        assert!(id.max_displacement(64) == 0.0);
        let alpha = 1.3;
        let h = TimeDependentHamiltonian::new(
            "-a r^2/2",
            vec![HamiltonianTerm::autonomous(vec![0.0, -alpha / 2.0], 0, 0)],
        )
        .unwrap();
        let g = flow_endpoint(&h, 256).unwrap();
        let r = MapWord::rotation(alpha);
        for k in 0..16 {
            let p = Point::polar(0.9, k as f64);
            assert!(g.eval(p).unwrap().dist(r.eval(p).unwrap()) < 1e-8);
        }
        assert!(flow_endpoint(&h, 8).is_err());
        let ratios = rk4_order_ratios(&asym(), 16, 1);
        assert!((ratios[0] - 16.0).abs() <= 3.2, "{ratios:?}");
    }

    #[test]
    fn r_examples() {
        let q = Quadrature::default();
        assert_eq!(r_functional(&Isotopy::identity(), &q, 32), 0.0);
        let a = 0.9;
        assert!((r_functional(&Isotopy::rotation(a), &q, 32) - PI * a / 4.0).abs() < 1e-8);
        let s = -1.4;
        assert!((r_functional(&Isotopy::twist(s, RadialProfile::r_squared()), &q, 32) - PI * s / 6.0).abs() < 1e-8);
    }

    #[test]
    fn s_examples() {
        let q = Quadrature::default();
        let path = DiskPath::x_axis();
        assert_eq!(s_functional(&Isotopy::identity(), &path, &q, 32).unwrap(), 0.0);
        let a = 0.9;
        assert!((s_functional(&Isotopy::rotation(a), &path, &q, 32).unwrap() + a / 2.0).abs() < 1e-8);
        let s = 2.0;
        let v = s_functional(&Isotopy::twist(s, RadialProfile::r_squared()), &path, &q, 32).unwrap();
        assert!((v + s / 4.0).abs() < 1e-8);
        let other = s_functional(
            &Isotopy::twist(s, RadialProfile::r_squared()),
            &DiskPath::bent(0.3).unwrap(),
            &q,
            32,
        )
        .unwrap();
        assert!((v - other).abs() < 1e-8);
    }

    #[test]
    fn s_requires_origin_fixing() {
        let moving = Isotopy::hamiltonian(
            TimeDependentHamiltonian::new("x-bump", vec![HamiltonianTerm::autonomous(vec![1.0, -2.0, 1.0], 1, 0)])
                .unwrap(),
            32,
        )
        .unwrap();
        let err = s_functional(&moving, &DiskPath::x_axis(), &Quadrature::default(), 8).unwrap_err();
        assert!(matches!(err, Error::OriginNotFixed(_)));
    }

    #[test]
    fn lemma_tau_r_examples() {
        let c = cfg();
        for iso in [
            Isotopy::identity(),
            Isotopy::rotation(0.8),
            Isotopy::twist(1.0, RadialProfile::r_squared()),
            Isotopy::twist(0.7, RadialProfile::bump()),
            Isotopy::hamiltonian(asym(), 128).unwrap(),
        ] {
            let rep = verify_lemma_tau_r(&iso, &c).unwrap();
            assert!(rep.passed, "{rep:?}");
        }
        let rep = verify_lemma_tau_r(&Isotopy::rotation(0.8), &c).unwrap();
        assert!((rep.rhs - PI * 0.8 / 2.0).abs() < 1e-12);
        // boundary-fixing path: Cal = -2R
        let rep = verify_lemma_tau_r(&Isotopy::twist(0.7, RadialProfile::bump()), &c).unwrap();
        assert!(rep.lhs.abs() < 1e-6 && rep.rhs.abs() < 1e-12);
    }

    #[test]
    fn lemma_sigma_s_examples() {
        let c = cfg();
        for iso in [
            Isotopy::identity(),
            Isotopy::rotation(0.8),
            Isotopy::twist(1.0, RadialProfile::r_squared()),
            Isotopy::hamiltonian(asym(), 128).unwrap(),
        ] {
            let rep = verify_lemma_sigma_s(&iso, &c).unwrap();
            assert!(rep.passed, "{rep:?}");
        }
        let rep = verify_lemma_sigma_s(&Isotopy::twist(1.5, RadialProfile::r_squared()), &c).unwrap();
        assert!((rep.rhs - 0.75).abs() < 1e-15);
    }

    #[test]
    fn theorem_examples_on_closed_forms() {
        let c = cfg();
        for iso in [Isotopy::rotation(1.1), Isotopy::twist(0.6, RadialProfile::r_squared())] {
            assert!(verify_thm_main1(&iso, &c).unwrap().passed);
            assert!(verify_thm_main2(&iso, &c).unwrap().passed);
            assert!(verify_thm_mod1_general(&iso, &c).unwrap().passed);
        }
    }

    #[test]
    fn mod1_loop_examples() {
        let c = cfg();
        let rep = verify_thm_mod1(&Isotopy::rotation(TAU), &c).unwrap();
        assert!((rep.lhs - 1.0).abs() < 1e-6 && rep.passed);
        let rep = verify_thm_mod1(&Isotopy::rotation(2.0 * TAU), &c).unwrap();
        assert!((rep.lhs - 2.0).abs() < 1e-6 && rep.passed);
        assert_eq!(verify_thm_mod1(&Isotopy::identity(), &c).unwrap().lhs, 0.0);
        assert!(matches!(
            verify_thm_mod1(&Isotopy::rotation(1.0), &c),
            Err(Error::EndpointNotIdentity(_))
        ));
    }

    #[test]
    fn s_homomorphism_examples() {
        let c = cfg();
        let rep = s_is_homomorphism(&Isotopy::rotation(0.3), &Isotopy::rotation(-1.2), &c).unwrap();
        assert!(rep.passed && (rep.lhs + 0.15 - 0.6).abs() < 1e-8);
        let f = RadialProfile::r_squared();
        let rep = s_is_homomorphism(&Isotopy::twist(0.5, f.clone()), &Isotopy::twist(0.25, f), &c).unwrap();
        assert!(rep.passed && (rep.lhs + 0.75 / 4.0).abs() < 1e-8);
        let rep = s_is_homomorphism(&Isotopy::identity(), &Isotopy::hamiltonian(asym(), 64).unwrap(), &c).unwrap();
        assert!(rep.passed, "{rep:?}");
        let rep = s_is_homomorphism(&Isotopy::hamiltonian(asym(), 64).unwrap(), &Isotopy::rotation(0.4), &c).unwrap();
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn r_is_additive_on_radial_products() {
        let q = Quadrature::default();
        let a = Isotopy::twist(0.4, RadialProfile::bump());
        let b = Isotopy::rotation(1.3);
        let prod = product_isotopy(&a, &b).unwrap();
        let lhs = r_functional(&prod, &q, 32);
        let rhs = r_functional(&a, &q, 32) + r_functional(&b, &q, 32);
        assert!((lhs - rhs).abs() < 2e-8);
        assert!(matches!(
            product_isotopy(&Isotopy::hamiltonian(asym(), 32).unwrap(), &b),
            Err(Error::UnsupportedCombination(_))
        ));
    }

    #[test]
    fn isotopy_time_slices() {
        let iso = Isotopy::hamiltonian(asym(), 128).unwrap();
        let p = Point::new(0.3, -0.2);
        let q = iso.eval_at(0.6, p);
        let (back, _) = iso.inverse_at_with_jacobian(0.6, q);
        assert!(back.dist(p) < 1e-9);
        assert!(iso.eval_at(1.0, p).dist(iso.endpoint_word().eval(p).unwrap()) < 1e-12);
    }

    fn conjugator() -> TimeDependentHamiltonian {
        TimeDependentHamiltonian::new(
            "k",
            vec![
                HamiltonianTerm::autonomous(vec![0.3, -0.3], 0, 0),
                HamiltonianTerm::autonomous(vec![0.4, -0.8, 0.4], 2, 0),
                HamiltonianTerm::autonomous(vec![0.3, -0.6, 0.3], 1, 1),
            ],
        )
        .unwrap()
    }

    #[test]
    fn conjugated_paths() {
        let c = cfg();
        let inner = Isotopy::twist(0.5, RadialProfile::bump());
        let iso = Isotopy::conjugated(inner.clone(), conjugator(), 32).unwrap();
        assert!(iso.fixes_origin() && iso.is_autonomous());
        let g = iso.endpoint_word();
        assert!(g.boundary_identity.is_yes());
        assert!(g.power(8).reduce().len() == 3);
        // k is area preserving, so R is unchanged by conjugation
        let r = r_functional(&iso, &c.q, c.t_steps);
        assert!((r - r_functional(&inner, &c.q, c.t_steps)).abs() < 1e-7, "{r}");
        for rep in [
            verify_lemma_tau_r(&iso, &c).unwrap(),
            verify_lemma_sigma_s(&iso, &c).unwrap(),
        ] {
            assert!(rep.passed, "{rep:?}");
        }
        let rot = Isotopy::conjugated(Isotopy::rotation(0.7), conjugator(), 32).unwrap();
        assert!((rot.boundary_lift().eval(0.4) - 0.4 - 0.7).abs() < 1e-6);
        let p = Point::new(0.2, 0.5);
        let (back, _) = iso.inverse_at_with_jacobian(0.3, iso.eval_at(0.3, p));
        assert!(back.dist(p) < 1e-7);
        let prod = product_isotopy(&iso, &rot).unwrap();
        assert!(matches!(prod.kind, IsotopyKind::Conjugated { .. }));
        let rep = s_is_homomorphism(&iso, &rot, &c).unwrap();
        assert!(rep.passed, "{rep:?}");
        let rep = s_is_homomorphism(&iso, &Isotopy::rotation(0.4), &c).unwrap();
        assert!(rep.passed, "{rep:?}");
    }
}
