//! Disk symplectomorphisms as composition words of analytic generators.
//!
//! A [`MapWord`] is applied right to left. Rigid rotations and twists have
//! closed-form values and Jacobians; time-1 Hamiltonian flows are integrated
//! with RK4 and differentiated through the variational equation.

use crate::error::{Error, Result};
use crate::hamiltonian::{self, TimeDependentHamiltonian};
pub use crate::linalg::{Mat2, Point};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::sync::Arc;

/// Points may sit this far outside the unit circle and still count as disk points.
pub const EPS_GEOM: f64 = 1e-12;
/// Allowed `|det J - 1|` for closed-form words.
pub const EPS_SYMP_CLOSED: f64 = 1e-8;
/// Allowed `|det J - 1|` for words containing RK4 flow letters.
pub const EPS_SYMP_FLOW: f64 = 1e-6;

/// Radial profile `f(r) = sum_k coeffs[k] r^(2k)`, a polynomial in `r^2`, so
/// `f'(0) = 0` holds for every instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub label: String,
    pub coeffs: Vec<f64>,
}

impl RadialProfile {
    pub fn new(label: impl Into<String>, coeffs: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            coeffs,
        }
    }

    /// `f(r) = r^2`.
    pub fn r_squared() -> Self {
        Self::new("r2", vec![0.0, 1.0])
    }

    /// `f(r) = (1 - r^2)^2`, vanishing at the boundary.
    pub fn bump() -> Self {
        Self::new("bump", vec![1.0, -2.0, 1.0])
    }

    /// `f(r) = 1 - r^2`.
    pub fn one_minus_r2() -> Self {
        Self::new("one_minus_r2", vec![1.0, -1.0])
    }

    /// `f(r) = r^2 (1 - r^2)`, vanishing at the origin and the boundary.
    pub fn ring() -> Self {
        Self::new("ring", vec![0.0, 1.0, -1.0])
    }

    pub fn builtin(label: &str) -> Option<Self> {
        match label {
            "r2" => Some(Self::r_squared()),
            "bump" => Some(Self::bump()),
            "one_minus_r2" => Some(Self::one_minus_r2()),
            "ring" => Some(Self::ring()),
            _ => None,
        }
    }

    pub fn builtin_labels() -> &'static [&'static str] {
        &["r2", "bump", "one_minus_r2", "ring"]
    }

    pub fn f(&self, r: f64) -> f64 {
        let rho = r * r;
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * rho + c)
    }

    /// `f'(r) / r`, itself a polynomial in `r^2`.
    pub fn fprime_over_r(&self, r: f64) -> f64 {
        let rho = r * r;
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, &c)| acc * rho + 2.0 * k as f64 * c)
    }

    pub fn fprime(&self, r: f64) -> f64 {
        r * self.fprime_over_r(r)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Generator {
    RigidRotation {
        alpha: f64,
    },
    Twist {
        s: f64,
        profile: Arc<RadialProfile>,
    },
    FlowTime1 {
        hamiltonian: Arc<TimeDependentHamiltonian>,
        steps: usize,
        fixes_origin: bool,
        fixes_boundary: bool,
    },
}

impl Generator {
    pub fn rotation(alpha: f64) -> Self {
        Generator::RigidRotation { alpha }
    }

    pub fn twist(s: f64, profile: RadialProfile) -> Self {
        Generator::Twist {
            s,
            profile: Arc::new(profile),
        }
    }

    /// Time-1 RK4 flow. Origin and boundary behaviour are read off the
    /// Hamiltonian by sampling.
    pub fn flow(hamiltonian: TimeDependentHamiltonian, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidConfig("flow letters need at least one RK4 step".into()));
        }
        hamiltonian.check_boundary_constant(1e-8)?;
        let fixes_origin = hamiltonian.fixes_origin();
        let fixes_boundary = hamiltonian.fixes_boundary_pointwise();
        Ok(Generator::FlowTime1 {
            hamiltonian: Arc::new(hamiltonian),
            steps,
            fixes_origin,
            fixes_boundary,
        })
    }

    pub fn is_radial(&self) -> bool {
        !matches!(self, Generator::FlowTime1 { .. })
    }

    pub fn is_flow(&self) -> bool {
        matches!(self, Generator::FlowTime1 { .. })
    }

    /// Commutes with every rotation: radial letters, and flows whose
    /// Hamiltonian depends on `r` only. RK4 preserves this exactly.
    pub fn is_rotation_equivariant(&self) -> bool {
        match self {
            Generator::FlowTime1 { hamiltonian, .. } => hamiltonian.terms.iter().all(|t| t.px == 0 && t.py == 0),
            _ => true,
        }
    }

    /// Evaluation cost in elementary steps, used to plan power evaluation.
    pub fn cost(&self) -> usize {
        match self {
            Generator::FlowTime1 { steps, .. } => *steps,
            _ => 1,
        }
    }
}

fn near_multiple_of_tau(a: f64) -> bool {
    (a - TAU * (a / TAU).round()).abs() <= 1e-12
}

/// One letter of a word: a generator, possibly inverted.
#[derive(Clone, Debug, PartialEq)]
pub struct Letter {
    pub generator: Generator,
    pub inverted: bool,
}

impl Letter {
    pub fn new(generator: Generator, inverted: bool) -> Self {
        Self { generator, inverted }
    }

    fn sign(&self) -> f64 {
        if self.inverted {
            -1.0
        } else {
            1.0
        }
    }

    pub fn inverse(&self) -> Letter {
        Letter {
            generator: self.generator.clone(),
            inverted: !self.inverted,
        }
    }

    pub fn fixes_origin(&self) -> Tri {
        match &self.generator {
            Generator::FlowTime1 { fixes_origin, .. } => Tri::from(*fixes_origin),
            _ => Tri::Yes,
        }
    }

    pub fn boundary_identity(&self) -> Tri {
        match &self.generator {
            Generator::RigidRotation { alpha } => Tri::from(near_multiple_of_tau(*alpha)),
            Generator::Twist { s, profile } => Tri::from(near_multiple_of_tau(s * profile.f(1.0))),
            Generator::FlowTime1 { fixes_boundary, .. } => Tri::from(*fixes_boundary),
        }
    }

    pub fn eval(&self, p: Point) -> Point {
        match &self.generator {
            Generator::RigidRotation { alpha } => Mat2::rotation(self.sign() * alpha).apply(p),
            Generator::Twist { s, profile } => {
                let phi = self.sign() * s * profile.f(p.norm());
                Mat2::rotation(phi).apply(p)
            }
            Generator::FlowTime1 { hamiltonian, steps, .. } => {
                let (t0, t1) = if self.inverted { (1.0, 0.0) } else { (0.0, 1.0) };
                hamiltonian::flow(hamiltonian, p, t0, t1, *steps)
            }
        }
    }

    pub fn eval_with_jacobian(&self, p: Point) -> (Point, Mat2) {
        match &self.generator {
            Generator::RigidRotation { alpha } => {
                let rot = Mat2::rotation(self.sign() * alpha);
                (rot.apply(p), rot)
            }
            Generator::Twist { s, profile } => {
                let sp = self.sign() * s;
                let r = p.norm();
                let rot = Mat2::rotation(sp * profile.f(r));
                let q = rot.apply(p);
                // grad(phi) = s f'(r)/r (x, y)
                let g = sp * profile.fprime_over_r(r);
                let (gx, gy) = (g * p.x, g * p.y);
                let jac = Mat2::new(rot.a - q.y * gx, rot.b - q.y * gy, rot.c + q.x * gx, rot.d + q.x * gy);
                (q, jac)
            }
            Generator::FlowTime1 { hamiltonian, steps, .. } => {
                let (t0, t1) = if self.inverted { (1.0, 0.0) } else { (0.0, 1.0) };
                hamiltonian::flow_with_jacobian(hamiltonian, p, t0, t1, *steps)
            }
        }
    }

    /// Continuous lift of the boundary restriction, `theta -> theta + shift`
    /// for radial letters and the tracked winding for flows.
    pub fn boundary_lift_eval(&self, theta: f64) -> f64 {
        match &self.generator {
            Generator::RigidRotation { alpha } => theta + self.sign() * alpha,
            Generator::Twist { s, profile } => theta + self.sign() * s * profile.f(1.0),
            Generator::FlowTime1 { hamiltonian, steps, .. } => {
                let (t0, t1) = if self.inverted { (1.0, 0.0) } else { (0.0, 1.0) };
                let (_, w) = hamiltonian::flow_with_winding(hamiltonian, Point::on_circle(theta), t0, t1, *steps);
                theta + w
            }
        }
    }
}

/// Three-valued flag; composition only keeps `Yes` when both sides are `Yes`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tri {
    Yes,
    No,
    Unknown,
}

impl Tri {
    pub fn and(self, o: Tri) -> Tri {
        if self == Tri::Yes && o == Tri::Yes {
            Tri::Yes
        } else {
            Tri::Unknown
        }
    }

    pub fn is_yes(self) -> bool {
        self == Tri::Yes
    }
}

impl From<bool> for Tri {
    fn from(b: bool) -> Self {
        if b {
            Tri::Yes
        } else {
            Tri::No
        }
    }
}

/// A composition word; `letters[0]` is applied last.
#[derive(Clone, Debug, PartialEq)]
pub struct MapWord {
    pub letters: Vec<Letter>,
    pub fixes_origin: Tri,
    pub boundary_identity: Tri,
}

impl Default for MapWord {
    fn default() -> Self {
        Self::identity()
    }
}

/// Compact label such as `R(0.5000) T(1.0000,r2)^-1 Phi[asym]`; `id` when empty.
impl std::fmt::Display for MapWord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.letters.is_empty() {
            return f.write_str("id");
        }
        for (i, l) in self.letters.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            match &l.generator {
                Generator::RigidRotation { alpha } => write!(f, "R({alpha:.4})")?,
                Generator::Twist { s, profile } => write!(f, "T({s:.4},{})", profile.label)?,
                Generator::FlowTime1 { hamiltonian, .. } => write!(f, "Phi[{}]", hamiltonian.label)?,
            }
            if l.inverted {
                f.write_str("^-1")?;
            }
        }
        Ok(())
    }
}

impl MapWord {
    pub fn identity() -> Self {
        Self {
            letters: Vec::new(),
            fixes_origin: Tri::Yes,
            boundary_identity: Tri::Yes,
        }
    }

    pub fn letter(letter: Letter) -> Self {
        Self {
            fixes_origin: letter.fixes_origin(),
            boundary_identity: letter.boundary_identity(),
            letters: vec![letter],
        }
    }

    pub fn from_generator(generator: Generator) -> Self {
        Self::letter(Letter::new(generator, false))
    }

    pub fn rotation(alpha: f64) -> Self {
        Self::from_generator(Generator::rotation(alpha))
    }

    pub fn twist(s: f64, profile: RadialProfile) -> Self {
        Self::from_generator(Generator::twist(s, profile))
    }

    pub fn flow(hamiltonian: TimeDependentHamiltonian, steps: usize) -> Result<Self> {
        Ok(Self::from_generator(Generator::flow(hamiltonian, steps)?))
    }

    /// Word from a letter list, leftmost applied last.
    pub fn from_letters(letters: Vec<Letter>) -> Self {
        letters
            .into_iter()
            .map(MapWord::letter)
            .reduce(|a, b| a.compose(&b))
            .unwrap_or_else(MapWord::identity)
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_rotation_equivariant(&self) -> bool {
        self.letters.iter().all(|l| l.generator.is_rotation_equivariant())
    }

    pub fn has_flow(&self) -> bool {
        self.letters.iter().any(|l| l.generator.is_flow())
    }

    pub fn cost(&self) -> usize {
        self.letters.iter().map(|l| l.generator.cost()).sum()
    }

    /// Determinant tolerance appropriate for this word's letters.
    pub fn symplectic_tolerance(&self) -> f64 {
        if self.has_flow() {
            EPS_SYMP_FLOW
        } else {
            EPS_SYMP_CLOSED
        }
    }

    /// Pointwise tolerance for fixed-point and boundary checks.
    pub fn point_tolerance(&self) -> f64 {
        if self.has_flow() {
            1e-6
        } else {
            1e-9
        }
    }

    fn check_domain(p: Point) -> Result<()> {
        if p.norm().is_nan() || p.norm() > 1.0 + EPS_GEOM {
            return Err(Error::Domain { x: p.x, y: p.y });
        }
        Ok(())
    }

    pub fn eval(&self, p: Point) -> Result<Point> {
        Self::check_domain(p)?;
        Ok(self.eval_unchecked(p))
    }

    /// Evaluation without the domain check, for interior quadrature nodes.
    pub fn eval_unchecked(&self, p: Point) -> Point {
        self.letters.iter().rev().fold(p, |q, l| l.eval(q))
    }

    pub fn jacobian(&self, p: Point) -> Result<Mat2> {
        Ok(self.eval_with_jacobian(p)?.1)
    }

    pub fn eval_with_jacobian(&self, p: Point) -> Result<(Point, Mat2)> {
        Self::check_domain(p)?;
        Ok(self.eval_with_jacobian_unchecked(p))
    }

    /// Applies the word to `(p, acc)` and returns the image together with
    /// `J_word(p) * acc`.
    pub fn push_forward(&self, p: Point, acc: Mat2) -> (Point, Mat2) {
        let mut q = p;
        let mut jac = acc;
        for l in self.letters.iter().rev() {
            let (q2, jl) = l.eval_with_jacobian(q);
            q = q2;
            jac = jl * jac;
        }
        (q, jac)
    }

    pub fn eval_with_jacobian_unchecked(&self, p: Point) -> (Point, Mat2) {
        self.push_forward(p, Mat2::IDENTITY)
    }

    /// The word for `self ∘ other`.
    pub fn compose(&self, other: &MapWord) -> MapWord {
        let mut letters = self.letters.clone();
        letters.extend(other.letters.iter().cloned());
        MapWord {
            letters,
            fixes_origin: self.fixes_origin.and(other.fixes_origin),
            boundary_identity: self.boundary_identity.and(other.boundary_identity),
        }
    }

    pub fn inverse(&self) -> MapWord {
        MapWord {
            letters: self.letters.iter().rev().map(Letter::inverse).collect(),
            fixes_origin: self.fixes_origin,
            boundary_identity: self.boundary_identity,
        }
    }

    /// `by ∘ self ∘ by^{-1}`. Since `by` preserves the boundary circle, the
    /// conjugate is a boundary identity exactly when `self` is.
    pub fn conjugate(&self, by: &MapWord) -> MapWord {
        let mut w = by.compose(self).compose(&by.inverse());
        w.boundary_identity = self.boundary_identity;
        w.fixes_origin = match (self.fixes_origin, by.fixes_origin) {
            (Tri::Yes, Tri::Yes) => Tri::Yes,
            (Tri::No, Tri::Yes) => Tri::No,
            _ => Tri::Unknown,
        };
        w
    }

    /// `n`-fold composite by concatenation; negative `n` uses the inverse.
    pub fn power(&self, n: i64) -> MapWord {
        if n == 0 {
            return MapWord::identity();
        }
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let reps = n.unsigned_abs() as usize;
        let mut letters = Vec::with_capacity(base.letters.len() * reps);
        for _ in 0..reps {
            letters.extend(base.letters.iter().cloned());
        }
        MapWord {
            letters,
            fixes_origin: base.fixes_origin,
            boundary_identity: base.boundary_identity,
        }
    }

    /// Group-equal normal form: adjacent inverse flow letters cancel and
    /// every maximal run of radial letters (rotations and twists, which
    /// commute) collapses to one rotation plus one twist per profile.
    pub fn reduce(&self) -> MapWord {
        let mut out: Vec<Letter> = Vec::with_capacity(self.letters.len());
        for letter in &self.letters {
            if letter.generator.is_radial() {
                let mut run = vec![letter.clone()];
                while out.last().is_some_and(|l| l.generator.is_radial()) {
                    run.push(out.pop().expect("checked non-empty"));
                }
                out.extend(collapse_radial_run(&run));
            } else if out.last().is_some_and(|top| *top == letter.inverse()) {
                out.pop();
            } else {
                out.push(letter.clone());
            }
        }
        MapWord {
            letters: out,
            fixes_origin: self.fixes_origin,
            boundary_identity: self.boundary_identity,
        }
    }

    /// Canonical continuous lift of the boundary restriction obtained by
    /// composing letter lifts (no unwrapping).
    pub fn boundary_lift_eval(&self, theta: f64) -> f64 {
        self.letters.iter().rev().fold(theta, |t, l| l.boundary_lift_eval(t))
    }

    /// Residuals of symplecticity, boundary preservation and origin fixing.
    pub fn validate(&self, samples: usize) -> ValidationReport {
        let samples = samples.max(1);
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        let dets = crate::par::map_indexed(samples, |i| {
            let r = ((i as f64 + 0.5) / samples as f64).sqrt();
            let p = Point::polar(r, golden * i as f64);
            (self.eval_with_jacobian_unchecked(p).1.det() - 1.0).abs()
        });
        let escapes = crate::par::map_indexed(256, |k| {
            let p = Point::on_circle(TAU * k as f64 / 256.0);
            (self.eval_unchecked(p).norm() - p.norm()).abs()
        });
        let origin_displacement = if self.fixes_origin.is_yes() {
            Some(self.eval_unchecked(Point::ORIGIN).norm())
        } else {
            None
        };
        ValidationReport {
            samples,
            max_det_residual: dets.into_iter().fold(0.0, f64::max),
            max_boundary_escape: escapes.into_iter().fold(0.0, f64::max),
            origin_displacement,
            symplectic_tolerance: self.symplectic_tolerance(),
            point_tolerance: self.point_tolerance(),
        }
    }

    /// Determinant check on `samples` interior points.
    pub fn check_symplectic(&self, samples: usize) -> Result<()> {
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        let residual = crate::par::map_indexed(samples.max(1), |i| {
            let r = 0.999 * ((i as f64 + 0.5) / samples.max(1) as f64).sqrt();
            (self
                .eval_with_jacobian_unchecked(Point::polar(r, golden * i as f64))
                .1
                .det()
                - 1.0)
                .abs()
        })
        .into_iter()
        .fold(0.0, f64::max);
        let tol = self.symplectic_tolerance();
        if residual > tol {
            return Err(Error::NotSymplectic { residual, tol });
        }
        Ok(())
    }

    /// Max displacement from the identity over interior and boundary samples.
    pub fn max_displacement(&self, samples: usize) -> f64 {
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        (0..samples)
            .map(|i| {
                let r = ((i as f64 + 0.5) / samples as f64).sqrt();
                Point::polar(r, golden * i as f64)
            })
            .chain((0..64).map(|k| Point::on_circle(TAU * k as f64 / 64.0)))
            .map(|p| self.eval_unchecked(p).dist(p))
            .fold(0.0, f64::max)
    }

    /// Whether the word fixes `a` within its point tolerance.
    pub fn check_fixes(&self, a: Point) -> Result<()> {
        let d = self.eval(a)?.dist(a);
        if d > self.point_tolerance() {
            return Err(Error::AnchorNotFixed {
                x: a.x,
                y: a.y,
                displacement: d,
            });
        }
        Ok(())
    }
}

fn collapse_radial_run(run: &[Letter]) -> Vec<Letter> {
    let mut alpha = 0.0;
    let mut twists: Vec<(Arc<RadialProfile>, f64)> = Vec::new();
    // `run` is in reverse stack order; accumulate in original order for
    // deterministic profile ordering.
    for l in run.iter().rev() {
        let sign = if l.inverted { -1.0 } else { 1.0 };
        match &l.generator {
            Generator::RigidRotation { alpha: a } => alpha += sign * a,
            Generator::Twist { s, profile } => match twists.iter_mut().find(|(p, _)| p == profile) {
                Some(entry) => entry.1 += sign * s,
                None => twists.push((profile.clone(), sign * s)),
            },
            Generator::FlowTime1 { .. } => unreachable!("radial run contains a flow letter"),
        }
    }
    let mut out = Vec::new();
    if alpha != 0.0 {
        out.push(Letter::new(Generator::RigidRotation { alpha }, false));
    }
    for (profile, s) in twists {
        if s != 0.0 {
            out.push(Letter::new(Generator::Twist { s, profile }, false));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub samples: usize,
    pub max_det_residual: f64,
    pub max_boundary_escape: f64,
    pub origin_displacement: Option<f64>,
    pub symplectic_tolerance: f64,
    pub point_tolerance: f64,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.max_det_residual <= self.symplectic_tolerance
            && self.max_boundary_escape <= self.point_tolerance
            && self.origin_displacement.is_none_or(|d| d <= self.point_tolerance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(n: usize, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let r: f64 = rng.gen::<f64>().sqrt();
                Point::polar(r, rng.gen_range(0.0..TAU))
            })
            .collect()
    }

    fn close(a: Point, b: Point, tol: f64) -> bool {
        a.dist(b) <= tol
    }

    #[test]
    fn eval_examples() {
        let p = Point::new(0.3, 0.4);
        assert_eq!(MapWord::identity().eval(p).unwrap(), p);
        let q = MapWord::rotation(std::f64::consts::FRAC_PI_2)
            .eval(Point::new(1.0, 0.0))
            .unwrap();
        assert!(close(q, Point::new(0.0, 1.0), 1e-15));
        let q = MapWord::twist(1.0, RadialProfile::r_squared())
            .eval(Point::new(0.5, 0.0))
            .unwrap();
        assert!(close(q, Point::new(0.5 * 0.25f64.cos(), 0.5 * 0.25f64.sin()), 1e-15));
    }

    #[test]
    fn eval_rejects_outside_points() {
        let err = MapWord::identity().eval(Point::new(1.0, 1e-3)).unwrap_err();
        assert!(matches!(err, Error::Domain { .. }));
        assert!(MapWord::identity().eval(Point::new(1.0 + 5e-13, 0.0)).is_ok());
    }

    #[test]
    fn jacobian_examples() {
        let p = Point::new(0.1, -0.7);
        assert_eq!(MapWord::identity().jacobian(p).unwrap(), Mat2::IDENTITY);
        let j = MapWord::rotation(0.8).jacobian(p).unwrap();
        assert!(j.max_abs_diff(&Mat2::rotation(0.8)) < 1e-15);
        let j = MapWord::twist(1.0, RadialProfile::r_squared())
            .jacobian(Point::new(0.5, 0.0))
            .unwrap();
        assert!((j.det() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn twist_jacobian_matches_symbolic_polar_derivative() {
        // In polar coordinates the twist is (r, theta + s f(r)); at (r, 0)
        // d/dr of the image is (cos phi, sin phi) + r s f'(r) (-sin phi, cos phi).
        let s = 0.9;
        let f = RadialProfile::bump();
        let r = 0.6;
        let j = MapWord::twist(s, f.clone()).jacobian(Point::new(r, 0.0)).unwrap();
        let phi = s * f.f(r);
        let col_x = Point::new(
            phi.cos() - r * s * f.fprime(r) * phi.sin(),
            phi.sin() + r * s * f.fprime(r) * phi.cos(),
        );
        let col_y = Point::new(-phi.sin(), phi.cos());
        assert!((j.a - col_x.x).abs() < 1e-14 && (j.c - col_x.y).abs() < 1e-14);
        assert!((j.b - col_y.x).abs() < 1e-14 && (j.d - col_y.y).abs() < 1e-14);
    }

    #[test]
    fn compose_examples() {
        let pts = random_points(100, 3);
        let f = RadialProfile::r_squared();
        let ab = MapWord::rotation(0.4).compose(&MapWord::rotation(1.1));
        let st = MapWord::twist(0.3, f.clone()).compose(&MapWord::twist(-1.2, f.clone()));
        for &p in &pts {
            assert!(close(
                MapWord::identity().compose(&ab).eval(p).unwrap(),
                ab.eval(p).unwrap(),
                0.0
            ));
            assert!(close(
                ab.eval(p).unwrap(),
                MapWord::rotation(1.5).eval(p).unwrap(),
                1e-14
            ));
            assert!(close(
                st.eval(p).unwrap(),
                MapWord::twist(-0.9, f.clone()).eval(p).unwrap(),
                1e-14
            ));
        }
    }

    #[test]
    fn compose_combines_flags() {
        let a = MapWord::twist(1.0, RadialProfile::bump());
        assert_eq!(a.boundary_identity, Tri::Yes);
        let b = MapWord::twist(1.0, RadialProfile::r_squared());
        assert_eq!(b.boundary_identity, Tri::No);
        assert_eq!(a.compose(&a).boundary_identity, Tri::Yes);
        assert_eq!(a.compose(&b).boundary_identity, Tri::Unknown);
        assert_eq!(a.compose(&b).fixes_origin, Tri::Yes);
    }

    #[test]
    fn power_examples() {
        let f = RadialProfile::r_squared();
        let g = MapWord::twist(0.7, f.clone());
        assert!(g.power(0).is_empty());
        assert_eq!(g.power(5).len(), 5);
        let pts = random_points(50, 9);
        for &p in &pts {
            assert!(close(
                g.power(5).eval(p).unwrap(),
                MapWord::twist(3.5, f.clone()).eval(p).unwrap(),
                1e-13
            ));
            assert!(close(
                g.power(-3).eval(p).unwrap(),
                MapWord::twist(-2.1, f.clone()).eval(p).unwrap(),
                1e-13
            ));
            assert!(close(
                MapWord::rotation(0.3).power(3).eval(p).unwrap(),
                MapWord::rotation(0.9).eval(p).unwrap(),
                1e-14
            ));
        }
        assert_eq!(g.power(-2), g.inverse().power(2));
    }

    #[test]
    fn validate_examples() {
        let rep = MapWord::identity().validate(200);
        assert_eq!(rep.max_det_residual, 0.0);
        assert_eq!(rep.max_boundary_escape, 0.0);
        assert_eq!(rep.origin_displacement, Some(0.0));
        let rep = MapWord::twist(1.0, RadialProfile::r_squared()).validate(500);
        assert!(rep.max_det_residual <= 1e-10);
        assert!(rep.is_valid());
    }

    fn bump_flow(steps: usize) -> MapWord {
        let h = TimeDependentHamiltonian::new(
            "bump/4",
            vec![crate::hamiltonian::HamiltonianTerm::autonomous(
                vec![0.25, -0.5, 0.25],
                0,
                0,
            )],
        )
        .unwrap();
        MapWord::flow(h, steps).unwrap()
    }

    #[test]
    fn flow_validation_and_rk4_order() {
        let rep = bump_flow(200).validate(200);
        assert!(rep.max_det_residual <= 1e-6, "{rep:?}");
        assert_eq!(rep.origin_displacement.map(|d| d < 1e-12), Some(true));
        // At least fourth order; this symmetric field actually converges at fifth.
        let coarse = bump_flow(8).validate(200).max_det_residual;
        let fine = bump_flow(16).validate(200).max_det_residual;
        assert!(coarse / fine >= 12.0, "ratio {}", coarse / fine);
        // A field without rotational symmetry shows the plain fourth-order ratio.
        let h = TimeDependentHamiltonian::new(
            "asym",
            vec![
                crate::hamiltonian::HamiltonianTerm::autonomous(vec![0.4, -0.4], 0, 0),
                crate::hamiltonian::HamiltonianTerm {
                    time: vec![0.5, 1.0],
                    radial: vec![1.0, -2.0, 1.0],
                    px: 2,
                    py: 0,
                },
                crate::hamiltonian::HamiltonianTerm::autonomous(vec![0.3, -0.3], 1, 1),
            ],
        )
        .unwrap();
        let det = |steps| MapWord::flow(h.clone(), steps).unwrap().validate(200).max_det_residual;
        let ratio = det(64) / det(128);
        assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn flow_flags_from_hamiltonian() {
        let g = bump_flow(32);
        assert_eq!(g.fixes_origin, Tri::Yes);
        assert_eq!(g.boundary_identity, Tri::Yes);
        let rot = MapWord::flow(TimeDependentHamiltonian::rotation(0.5), 32).unwrap();
        assert_eq!(rot.boundary_identity, Tri::No);
    }

    #[test]
    fn reduce_cancels_and_merges() {
        let k = bump_flow(16);
        let t = MapWord::twist(0.2, RadialProfile::r_squared());
        let conj = k.compose(&t).compose(&k.inverse());
        let reduced = conj.power(64).reduce();
        assert_eq!(reduced.len(), 3);
        let expected = k
            .compose(&MapWord::twist(0.2 * 64.0, RadialProfile::r_squared()))
            .compose(&k.inverse());
        for p in random_points(20, 1) {
            assert!(close(reduced.eval(p).unwrap(), expected.eval(p).unwrap(), 1e-12));
        }
        let loop_word = MapWord::rotation(0.3).compose(&MapWord::rotation(-0.3));
        assert!(loop_word.reduce().is_empty());
    }

    #[test]
    fn group_laws_on_random_words() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let profiles = [
            RadialProfile::r_squared(),
            RadialProfile::bump(),
            RadialProfile::one_minus_r2(),
        ];
        let random_word = |rng: &mut ChaCha8Rng| {
            let n = rng.gen_range(1..4);
            let letters = (0..n)
                .map(|_| {
                    if rng.gen_bool(0.4) {
                        Letter::new(Generator::rotation(rng.gen_range(-3.0..3.0)), rng.gen_bool(0.5))
                    } else {
                        let f = profiles[rng.gen_range(0..profiles.len())].clone();
                        Letter::new(Generator::twist(rng.gen_range(-2.0..2.0), f), rng.gen_bool(0.5))
                    }
                })
                .collect();
            MapWord::from_letters(letters)
        };
        for _ in 0..10 {
            let (g, h, k) = (random_word(&mut rng), random_word(&mut rng), random_word(&mut rng));
            let left = g.compose(&h).compose(&k);
            let right = g.compose(&h.compose(&k));
            let gi = g.compose(&g.inverse());
            for p in random_points(100, rng.gen()) {
                assert!(close(left.eval(p).unwrap(), right.eval(p).unwrap(), 1e-12));
                assert!(close(gi.eval(p).unwrap(), p, 1e-9));
            }
        }
    }

    #[test]
    fn boundary_preservation_closed_form() {
        let g = MapWord::twist(2.0, RadialProfile::r_squared()).compose(&MapWord::rotation(0.4));
        let esc = (0..256)
            .map(|k| (g.eval(Point::on_circle(TAU * k as f64 / 256.0)).unwrap().norm() - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(esc <= 1e-9);
    }

    #[test]
    fn profile_derivative() {
        let f = RadialProfile::new("mix", vec![0.5, 0.0, 2.0, -1.0]);
        let r = 0.37;
        let h = 1e-6;
        let fd = (f.f(r + h) - f.f(r - h)) / (2.0 * h);
        assert!((f.fprime(r) - fd).abs() < 1e-8);
        assert_eq!(f.fprime(0.0), 0.0);
    }
}
