//! Group functionals on the disk group and its origin stabilizer: `tau`,
//! `sigma`, Calabi, flux, homogenization with error bars, defect estimates
//! and coboundaries.
//!
//! Coboundary convention: `delta phi(g, h) = phi(g) + phi(h) - phi(gh)`.

use crate::circle::{self, CircleLift};
use crate::error::{Error, Result};
use crate::forms::{pullback_covector, wedge_density, DiskPath, PrimitiveOneForm, Quadrature};
use crate::geometry::{MapWord, Mat2, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

/// Tolerance of the eta- and path-independence cross-checks in `calabi`/`flux`.
pub const INDEPENDENCE_TOL: f64 = 1e-6;

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EstimateMeta {
    /// Power or iteration count used.
    pub n: Option<u64>,
    pub quadrature: Option<Quadrature>,
    /// Defect estimate behind the error bound.
    pub defect: Option<f64>,
    /// True when the bound rests on a sampled (lower-bound) defect.
    pub heuristic: bool,
    /// `(n, phi(g^n) / n)` for `n = 1, 2, 4, ...`.
    pub sequence: Vec<(u64, f64)>,
}

/// A value with an error bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QmEstimate {
    pub value: f64,
    pub error_bound: f64,
    pub meta: EstimateMeta,
}

impl QmEstimate {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            error_bound: 0.0,
            meta: EstimateMeta::default(),
        }
    }
}

fn tau_density(eta: &PrimitiveOneForm, p: Point, image: Point, jac: Mat2) -> f64 {
    wedge_density(pullback_covector(jac, eta.at(image)), eta.at(p))
}

fn sigma_integrand(eta: &PrimitiveOneForm, path: &DiskPath, t: f64, image: Point, jac: Mat2) -> f64 {
    let p = path.point(t);
    (pullback_covector(jac, eta.at(image)) - eta.at(p)).dot(path.derivative(t))
}

/// `tau_eta(g) = int_D g^* eta ^ eta`.
pub fn tau(eta: &PrimitiveOneForm, g: &MapWord, q: &Quadrature) -> Result<f64> {
    g.check_symplectic(32)?;
    Ok(tau_unchecked(eta, g, q))
}

/// Disk nodes for `tau_eta(g)`: a single ray suffices when both `g` and
/// `eta` commute with rotations, since the density is then angle-free.
fn tau_nodes(eta: &PrimitiveOneForm, g: &MapWord, q: &Quadrature) -> Vec<(Point, f64)> {
    if eta.is_lambda() && g.is_rotation_equivariant() {
        q.ray_nodes()
    } else {
        q.disk_nodes()
    }
}

fn tau_unchecked(eta: &PrimitiveOneForm, g: &MapWord, q: &Quadrature) -> f64 {
    let nodes = tau_nodes(eta, g, q);
    let vals = crate::par::map_slice(&nodes, |&(p, w)| {
        let (image, jac) = g.eval_with_jacobian_unchecked(p);
        w * tau_density(eta, p, image, jac)
    });
    crate::par::ordered_sum(&vals)
}

/// `sigma_{eta,gamma}(g) = int_gamma g^* eta - eta`; `g` must fix the anchor.
pub fn sigma(eta: &PrimitiveOneForm, path: &DiskPath, g: &MapWord, q: &Quadrature) -> Result<f64> {
    g.check_fixes(path.anchor())?;
    g.check_symplectic(32)?;
    Ok(sigma_unchecked(eta, path, g, q))
}

fn sigma_unchecked(eta: &PrimitiveOneForm, path: &DiskPath, g: &MapWord, q: &Quadrature) -> f64 {
    let nodes = q.path_nodes();
    let vals = crate::par::map_slice(&nodes, |&(t, w)| {
        let (image, jac) = g.eval_with_jacobian_unchecked(path.point(t));
        w * sigma_integrand(eta, path, t, image, jac)
    });
    crate::par::ordered_sum(&vals)
}

/// Form used for the independence cross-checks.
pub fn alternative_form() -> PrimitiveOneForm {
    PrimitiveOneForm::lambda_plus_cxy(0.5)
}

/// A second admissible path with the same anchor.
pub fn alternative_path(path: &DiskPath) -> DiskPath {
    let anchor = path.anchor();
    if anchor.norm() == 0.0 {
        match path {
            DiskPath::Bent { .. } => DiskPath::Radial { angle: 2.0 },
            _ => DiskPath::Bent { bulge: 0.3 },
        }
    } else {
        DiskPath::Segment {
            anchor,
            end_angle: path.endpoint().angle() + 2.0,
        }
    }
}

fn require_boundary_identity(g: &MapWord) -> Result<()> {
    if !g.boundary_identity.is_yes() {
        return Err(Error::BoundaryIdentityRequired(g.to_string()));
    }
    Ok(())
}

/// Calabi invariant on boundary-fixing maps, cross-checked against a second
/// primitive.
pub fn calabi(g: &MapWord, q: &Quadrature) -> Result<f64> {
    require_boundary_identity(g)?;
    let value = tau(&PrimitiveOneForm::lambda(), g, q)?;
    let alt = tau_unchecked(&alternative_form(), g, q);
    if (value - alt).abs() > INDEPENDENCE_TOL {
        return Err(Error::IndependenceViolated {
            first: value,
            second: alt,
            tol: INDEPENDENCE_TOL,
        });
    }
    Ok(value)
}

/// Real flux on boundary-fixing maps that fix the path anchor, cross-checked
/// against a second (form, path) pair.
pub fn flux(g: &MapWord, path: &DiskPath, q: &Quadrature) -> Result<f64> {
    require_boundary_identity(g)?;
    let value = sigma(&PrimitiveOneForm::lambda(), path, g, q)?;
    let alt = sigma_unchecked(&alternative_form(), &alternative_path(path), g, q);
    if (value - alt).abs() > INDEPENDENCE_TOL {
        return Err(Error::IndependenceViolated {
            first: value,
            second: alt,
            tol: INDEPENDENCE_TOL,
        });
    }
    Ok(value)
}

/// A functional that can be homogenized.
pub trait QuasiMorphismBase: Sync {
    type Element: Clone + Send + Sync;

    fn name(&self) -> String;

    fn value(&self, g: &Self::Element) -> Result<f64>;

    fn product(&self, g: &Self::Element, h: &Self::Element) -> Self::Element;

    fn power(&self, g: &Self::Element, n: u64) -> Self::Element;

    /// Values at `g^(2^k)` for `k = 0..=k_max`.
    fn dyadic_values(&self, g: &Self::Element, k_max: u32) -> Result<Vec<f64>> {
        (0..=k_max).map(|k| self.value(&self.power(g, 1u64 << k))).collect()
    }

    fn quadrature(&self) -> Option<Quadrature> {
        None
    }
}

fn common_suffix_len(words: &[MapWord]) -> usize {
    let min_len = words.iter().map(MapWord::len).min().unwrap_or(0);
    (0..min_len)
        .take_while(|&i| {
            let first = &words[0].letters[words[0].len() - 1 - i];
            words.iter().all(|w| &w.letters[w.len() - 1 - i] == first)
        })
        .count()
}

/// Per-point letter-step cost of [`dyadic_pushforwards`] up to `k_max`.
pub fn dyadic_cost(g: &MapWord, k_max: u32) -> usize {
    let reduced: Vec<MapWord> = (0..=k_max).map(|k| g.power(1i64 << k).reduce()).collect();
    let shared = common_suffix_len(&reduced);
    let suffix_cost: usize = reduced[0].letters[reduced[0].len() - shared..]
        .iter()
        .map(|l| l.generator.cost())
        .sum();
    let separate = suffix_cost + reduced.iter().map(|w| w.cost() - suffix_cost).sum::<usize>();
    separate.min((1usize << k_max) * g.reduce().cost())
}

/// Largest `k <= k_max` whose dyadic evaluation over `nodes` points stays
/// within `budget` letter steps and, when `max_phase` is given, whose power
/// `g^(2^k)` shears by at most `max_phase` radians (at least 0).
pub fn affordable_k_max(g: &MapWord, nodes: usize, k_max: u32, budget: u64, max_phase: Option<f64>) -> u32 {
    (0..=k_max)
        .rev()
        .find(|&k| {
            (nodes as u64).saturating_mul(dyadic_cost(g, k) as u64) <= budget
                && max_phase.is_none_or(|m| shear_phase(&g.power(1i64 << k).reduce()) <= m)
        })
        .unwrap_or(0)
}

fn range_of(values: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo.is_finite() {
        hi - lo
    } else {
        0.0
    }
}

/// Upper estimate of how far a word winds points at different radii
/// against each other, in radians: the sum over letters of the spread of
/// their angular displacement. Integrands pulled back by the word oscillate
/// at about this phase, which bounds what a fixed quadrature resolves.
pub fn shear_phase(g: &MapWord) -> f64 {
    use crate::geometry::Generator;
    let radii: Vec<f64> = (0..=16).map(|i| 0.05 + 0.9 * i as f64 / 16.0).collect();
    let mut flow_cache: Vec<(*const crate::hamiltonian::TimeDependentHamiltonian, usize, f64)> = Vec::new();
    g.letters
        .iter()
        .map(|l| match &l.generator {
            Generator::RigidRotation { .. } => 0.0,
            Generator::Twist { s, profile } => s.abs() * range_of(radii.iter().map(|&r| profile.f(r))),
            Generator::FlowTime1 { hamiltonian, steps, .. } => {
                let key = (std::sync::Arc::as_ptr(hamiltonian), *steps);
                if let Some(&(_, _, v)) = flow_cache.iter().find(|(p, st, _)| (*p, *st) == key) {
                    return v;
                }
                let v = range_of(radii.iter().flat_map(|&r| {
                    (0..4).map(move |j| {
                        let p = Point::polar(r, std::f64::consts::FRAC_PI_2 * j as f64);
                        crate::hamiltonian::flow_with_winding(hamiltonian, p, 0.0, 1.0, *steps).1
                    })
                }));
                flow_cache.push((key.0, key.1, v));
                v
            }
        })
        .sum()
}

/// Phase a quadrature with `nodes` nodes per direction is trusted to resolve.
pub fn resolvable_phase(nodes: usize) -> f64 {
    nodes as f64 / 6.0
}

/// Number of disk nodes `tau_eta(g)` integrates over.
pub fn tau_node_count(eta: &PrimitiveOneForm, g: &MapWord, q: &Quadrature) -> usize {
    if eta.is_lambda() && g.is_rotation_equivariant() {
        q.n_r
    } else {
        q.n_r * q.n_theta
    }
}

/// Images and Jacobians of `g^(2^k)` at each point, indexed `[point][k]`.
///
/// Chooses between evaluating each reduced power separately and walking the
/// orbit once, whichever needs fewer letter evaluations.
pub fn dyadic_pushforwards(g: &MapWord, points: &[Point], k_max: u32) -> Vec<Vec<(Point, Mat2)>> {
    let reduced: Vec<MapWord> = (0..=k_max).map(|k| g.power(1i64 << k).reduce()).collect();
    let separate: usize = reduced.iter().map(MapWord::cost).sum();
    let base = g.reduce();
    let walk = (1usize << k_max) * base.cost();
    if separate <= walk {
        // every reduced power of k T k^{-1} ends in k^{-1}: apply shared
        // trailing letters once
        let shared = common_suffix_len(&reduced);
        let suffix = MapWord::from_letters(reduced[0].letters[reduced[0].len() - shared..].to_vec());
        let heads: Vec<MapWord> = reduced
            .iter()
            .map(|w| MapWord::from_letters(w.letters[..w.len() - shared].to_vec()))
            .collect();
        crate::par::map_slice(points, |&p| {
            let (q, jac) = suffix.eval_with_jacobian_unchecked(p);
            heads.iter().map(|w| w.push_forward(q, jac)).collect()
        })
    } else {
        let n = 1u64 << k_max;
        crate::par::map_slice(points, |&p| {
            let mut out = Vec::with_capacity(k_max as usize + 1);
            let mut state = (p, Mat2::IDENTITY);
            for i in 1..=n {
                state = base.push_forward(state.0, state.1);
                if i.is_power_of_two() {
                    out.push(state);
                }
            }
            out
        })
    }
}

/// `tau_eta` with fixed form and quadrature.
#[derive(Clone, Debug)]
pub struct TauBase {
    pub eta: PrimitiveOneForm,
    pub q: Quadrature,
}

impl TauBase {
    pub fn lambda(q: Quadrature) -> Self {
        Self {
            eta: PrimitiveOneForm::lambda(),
            q,
        }
    }
}

impl QuasiMorphismBase for TauBase {
    type Element = MapWord;

    fn name(&self) -> String {
        format!("tau[{}]", self.eta.label)
    }

    fn value(&self, g: &MapWord) -> Result<f64> {
        tau(&self.eta, g, &self.q)
    }

    fn product(&self, g: &MapWord, h: &MapWord) -> MapWord {
        g.compose(h)
    }

    fn power(&self, g: &MapWord, n: u64) -> MapWord {
        g.power(n as i64)
    }

    fn dyadic_values(&self, g: &MapWord, k_max: u32) -> Result<Vec<f64>> {
        g.check_symplectic(32)?;
        let nodes = tau_nodes(&self.eta, g, &self.q);
        let points: Vec<Point> = nodes.iter().map(|n| n.0).collect();
        let pushed = dyadic_pushforwards(g, &points, k_max);
        Ok((0..=k_max as usize)
            .map(|k| {
                let vals: Vec<f64> = nodes
                    .iter()
                    .zip(&pushed)
                    .map(|(&(p, w), per_k)| w * tau_density(&self.eta, p, per_k[k].0, per_k[k].1))
                    .collect();
                crate::par::ordered_sum(&vals)
            })
            .collect())
    }

    fn quadrature(&self) -> Option<Quadrature> {
        Some(self.q)
    }
}

/// `sigma_{eta,gamma}` with fixed form, path and quadrature.
#[derive(Clone, Debug)]
pub struct SigmaBase {
    pub eta: PrimitiveOneForm,
    pub path: DiskPath,
    pub q: Quadrature,
}

impl SigmaBase {
    pub fn lambda_x_axis(q: Quadrature) -> Self {
        Self {
            eta: PrimitiveOneForm::lambda(),
            path: DiskPath::x_axis(),
            q,
        }
    }
}

impl QuasiMorphismBase for SigmaBase {
    type Element = MapWord;

    fn name(&self) -> String {
        format!("sigma[{}, {}]", self.eta.label, self.path.label())
    }

    fn value(&self, g: &MapWord) -> Result<f64> {
        sigma(&self.eta, &self.path, g, &self.q)
    }

    fn product(&self, g: &MapWord, h: &MapWord) -> MapWord {
        g.compose(h)
    }

    fn power(&self, g: &MapWord, n: u64) -> MapWord {
        g.power(n as i64)
    }

    fn dyadic_values(&self, g: &MapWord, k_max: u32) -> Result<Vec<f64>> {
        g.check_fixes(self.path.anchor())?;
        g.check_symplectic(32)?;
        let nodes = self.q.path_nodes();
        let points: Vec<Point> = nodes.iter().map(|&(t, _)| self.path.point(t)).collect();
        let pushed = dyadic_pushforwards(g, &points, k_max);
        Ok((0..=k_max as usize)
            .map(|k| {
                let vals: Vec<f64> = nodes
                    .iter()
                    .zip(&pushed)
                    .map(|(&(t, w), per_k)| w * sigma_integrand(&self.eta, &self.path, t, per_k[k].0, per_k[k].1))
                    .collect();
                crate::par::ordered_sum(&vals)
            })
            .collect())
    }

    fn quadrature(&self) -> Option<Quadrature> {
        Some(self.q)
    }
}

/// Mean displacement `f` on lifts of circle diffeomorphisms.
#[derive(Clone, Debug)]
pub struct MeanDisplacementBase {
    pub q: Quadrature,
}

impl QuasiMorphismBase for MeanDisplacementBase {
    type Element = CircleLift;

    fn name(&self) -> String {
        "mean_displacement".into()
    }

    fn value(&self, g: &CircleLift) -> Result<f64> {
        Ok(circle::mean_displacement(g, &self.q))
    }

    fn product(&self, g: &CircleLift, h: &CircleLift) -> CircleLift {
        g.compose(h)
    }

    fn power(&self, g: &CircleLift, n: u64) -> CircleLift {
        g.iterate(n)
    }

    fn dyadic_values(&self, g: &CircleLift, k_max: u32) -> Result<Vec<f64>> {
        let nodes = self.q.circle_nodes();
        let n = 1u64 << k_max;
        let per_node = crate::par::map_slice(&nodes, |&(t, w)| {
            let mut x = t;
            let mut out = Vec::with_capacity(k_max as usize + 1);
            for i in 1..=n {
                x = g.eval(x);
                if i.is_power_of_two() {
                    out.push(w * (x - t));
                }
            }
            out
        });
        Ok((0..=k_max as usize)
            .map(|k| {
                let vals: Vec<f64> = per_node.iter().map(|v| v[k]).collect();
                crate::par::ordered_sum(&vals) / (4.0 * PI * PI)
            })
            .collect())
    }

    fn quadrature(&self) -> Option<Quadrature> {
        Some(self.q)
    }
}

/// `phi(g^n) / n` at `n = 2^k_max` with bound `D / n`.
///
/// `D` is the larger of `extra_defect` and the defect seen along the dyadic
/// powers themselves, `max_k |phi(g^(2^(k+1))) - 2 phi(g^(2^k))|`. Both are
/// sample maxima, i.e. lower bounds on the true defect, so the bound is
/// marked heuristic.
pub fn homogenize<B: QuasiMorphismBase>(
    base: &B,
    g: &B::Element,
    k_max: u32,
    extra_defect: Option<f64>,
) -> Result<QmEstimate> {
    let values = base.dyadic_values(g, k_max)?;
    let dyadic_defect = values.windows(2).map(|w| (w[1] - 2.0 * w[0]).abs()).fold(0.0, f64::max);
    let defect = dyadic_defect.max(extra_defect.unwrap_or(0.0));
    let n = 1u64 << k_max;
    let sequence = values
        .iter()
        .enumerate()
        .map(|(k, v)| (1u64 << k, v / (1u64 << k) as f64))
        .collect();
    Ok(QmEstimate {
        value: values[k_max as usize] / n as f64,
        error_bound: defect / n as f64,
        meta: EstimateMeta {
            n: Some(n),
            quadrature: base.quadrature(),
            defect: Some(defect),
            heuristic: true,
            sequence,
        },
    })
}

/// Elements plus index pairs used for defect and coboundary probes.
#[derive(Clone, Debug)]
pub struct GroupSample<E> {
    pub elements: Vec<E>,
    pub pairs: Vec<(usize, usize)>,
    pub seed: u64,
}

impl<E> GroupSample<E> {
    /// All ordered pairs of the given elements.
    pub fn all_pairs(elements: Vec<E>, seed: u64) -> Self {
        let n = elements.len();
        let pairs = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
        Self { elements, pairs, seed }
    }

    /// `count` pairs drawn with the given seed.
    pub fn random_pairs(elements: Vec<E>, count: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = elements.len().max(1);
        let pairs = (0..count).map(|_| (rng.gen_range(0..n), rng.gen_range(0..n))).collect();
        Self { elements, pairs, seed }
    }
}

/// Largest sampled `|phi(gh) - phi(g) - phi(h)|`. A lower bound on the true
/// defect.
pub fn defect_estimate<B: QuasiMorphismBase>(base: &B, sample: &GroupSample<B::Element>) -> Result<f64> {
    let values: Vec<f64> = sample.elements.iter().map(|g| base.value(g)).collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    for &(i, j) in &sample.pairs {
        let gh = base.product(&sample.elements[i], &sample.elements[j]);
        worst = worst.max((base.value(&gh)? - values[i] - values[j]).abs());
    }
    Ok(worst)
}

/// `delta phi(g, h) = phi(g) + phi(h) - phi(gh)`.
pub fn coboundary<B: QuasiMorphismBase>(base: &B, g: &B::Element, h: &B::Element) -> Result<f64> {
    Ok(base.value(g)? + base.value(h)? - base.value(&base.product(g, h))?)
}

fn require_origin_fixed(g: &MapWord) -> Result<()> {
    let d = g.eval(Point::ORIGIN)?.norm();
    if d > g.point_tolerance() {
        return Err(Error::OriginNotFixed(format!("map moves the origin by {d:e}")));
    }
    Ok(())
}

/// Components of `tau-bar - pi sigma-bar` on the origin stabilizer.
#[derive(Clone, Debug, Serialize)]
pub struct HomDifference {
    pub tau_bar: QmEstimate,
    pub sigma_bar: QmEstimate,
    pub difference: QmEstimate,
}

/// `tau-bar - pi sigma-bar` with `lambda` and the x-axis path; error bounds add.
pub fn hom_difference(g: &MapWord, k_max: u32, q: &Quadrature) -> Result<HomDifference> {
    require_origin_fixed(g)?;
    let tau_bar = homogenize(&TauBase::lambda(*q), g, k_max, None)?;
    let sigma_bar = homogenize(&SigmaBase::lambda_x_axis(*q), g, k_max, None)?;
    let difference = QmEstimate {
        value: tau_bar.value - PI * sigma_bar.value,
        error_bound: tau_bar.error_bound + PI * sigma_bar.error_bound,
        meta: EstimateMeta {
            n: tau_bar.meta.n,
            quadrature: Some(*q),
            defect: None,
            heuristic: true,
            sequence: Vec::new(),
        },
    };
    Ok(HomDifference {
        tau_bar,
        sigma_bar,
        difference,
    })
}

/// `(frac(tau-bar / pi^2), rot mod 1)`.
#[derive(Clone, Debug, Serialize)]
pub struct Mod1Reductions {
    pub underline_tau: f64,
    pub rot_mod1: f64,
    pub tau_bar: QmEstimate,
    pub translation: QmEstimate,
}

pub fn mod1_reductions(g: &MapWord, k_max: u32, q: &Quadrature, n_rot: u64) -> Result<Mod1Reductions> {
    let tau_bar = homogenize(&TauBase::lambda(*q), g, k_max, None)?;
    let lift = circle::boundary_lift(g, 0)?;
    let translation = circle::translation_number(&lift, n_rot);
    Ok(Mod1Reductions {
        underline_tau: circle::frac(tau_bar.value / (PI * PI)),
        rot_mod1: circle::frac(translation.value),
        tau_bar,
        translation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RadialProfile;
    use crate::hamiltonian::{HamiltonianTerm, TimeDependentHamiltonian};

    fn q() -> Quadrature {
        Quadrature::default()
    }

    #[test]
    fn tau_examples() {
        let lambda = PrimitiveOneForm::lambda();
        assert_eq!(tau(&lambda, &MapWord::identity(), &q()).unwrap(), 0.0);
        assert!(tau(&lambda, &MapWord::rotation(1.7), &q()).unwrap().abs() < 1e-8);
        let v = tau(&lambda, &MapWord::twist(1.0, RadialProfile::r_squared()), &q()).unwrap();
        assert!((v - PI / 6.0).abs() < 1e-8, "{v}");
    }

    #[test]
    fn sigma_examples() {
        let lambda = PrimitiveOneForm::lambda();
        let path = DiskPath::x_axis();
        assert_eq!(sigma(&lambda, &path, &MapWord::identity(), &q()).unwrap(), 0.0);
        assert!(sigma(&lambda, &path, &MapWord::rotation(0.4), &q()).unwrap().abs() < 1e-10);
        let v = sigma(&lambda, &path, &MapWord::twist(1.4, RadialProfile::r_squared()), &q()).unwrap();
        assert!((v - 1.4 / 4.0).abs() < 1e-10);
    }

    #[test]
    fn sigma_requires_fixed_anchor() {
        let path = DiskPath::segment(Point::new(0.3, 0.0), 1.0).unwrap();
        let err = sigma(&PrimitiveOneForm::lambda(), &path, &MapWord::rotation(0.4), &q()).unwrap_err();
        assert!(matches!(err, Error::AnchorNotFixed { .. }));
    }

    #[test]
    fn calabi_examples() {
        assert_eq!(calabi(&MapWord::identity(), &q()).unwrap(), 0.0);
        let h1 = MapWord::twist(1.0, RadialProfile::bump());
        let c1 = calabi(&h1, &q()).unwrap();
        assert!((c1 + PI / 12.0).abs() < 1e-6);
        let h2 = MapWord::twist(-0.6, RadialProfile::one_minus_r2());
        let c2 = calabi(&h2, &q()).unwrap();
        let c12 = calabi(&h1.compose(&h2), &q()).unwrap();
        assert!((c12 - c1 - c2).abs() < 2e-6);
    }

    #[test]
    fn calabi_requires_boundary_identity() {
        let err = calabi(&MapWord::twist(1.0, RadialProfile::r_squared()), &q()).unwrap_err();
        assert!(matches!(err, Error::BoundaryIdentityRequired(_)));
        assert!(err.to_string().contains("boundary_identity required"));
    }

    #[test]
    fn flux_examples() {
        assert_eq!(flux(&MapWord::identity(), &DiskPath::x_axis(), &q()).unwrap(), 0.0);
        let g = MapWord::twist(1.0, RadialProfile::bump());
        let a = flux(&g, &DiskPath::x_axis(), &q()).unwrap();
        assert!((a + 1.0 / 6.0).abs() < 1e-6);
        let b = flux(&g, &DiskPath::bent(0.3).unwrap(), &q()).unwrap();
        assert!((a - b).abs() < 1e-6);
    }

    #[test]
    fn homogenize_examples() {
        let est = homogenize(
            &TauBase::lambda(q()),
            &MapWord::twist(0.5, RadialProfile::r_squared()),
            6,
            None,
        )
        .unwrap();
        for (_, v) in &est.meta.sequence {
            assert!((v - 0.5 * PI / 6.0).abs() < 1e-8);
        }
        let est = homogenize(&TauBase::lambda(q()), &MapWord::rotation(0.9), 6, None).unwrap();
        assert!(est.value.abs() < 1e-8);
        let base = MeanDisplacementBase { q: q() };
        let est = homogenize(&base, &CircleLift::shift(0.7), 8, None).unwrap();
        assert!((est.value - 0.7 / (2.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn dyadic_walk_matches_direct_powers() {
        let h = TimeDependentHamiltonian::new(
            "asym",
            vec![
                HamiltonianTerm::autonomous(vec![0.3, -0.3], 0, 0),
                HamiltonianTerm::autonomous(vec![0.5, -1.0, 0.5], 1, 1),
            ],
        )
        .unwrap();
        let g = MapWord::flow(h, 16)
            .unwrap()
            .compose(&MapWord::twist(0.3, RadialProfile::r_squared()));
        let pts = [Point::new(0.2, 0.3), Point::new(-0.5, 0.1)];
        let pushed = dyadic_pushforwards(&g, &pts, 3);
        for (i, &p) in pts.iter().enumerate() {
            for (k, (want_img, want_jac)) in pushed[i].iter().enumerate() {
                let (img, jac) = g.power(1 << k).eval_with_jacobian_unchecked(p);
                assert!(img.dist(*want_img) < 1e-13);
                assert!(jac.max_abs_diff(want_jac) < 1e-11);
            }
        }
        // conjugate: separate evaluation with the shared k^{-1} suffix
        let k = MapWord::flow(TimeDependentHamiltonian::builtin("conjugator").unwrap(), 16).unwrap();
        let c = MapWord::twist(0.4, RadialProfile::bump()).conjugate(&k);
        assert!(dyadic_cost(&c, 6) < 7 * 2 * 16);
        let pushed = dyadic_pushforwards(&c, &pts, 6);
        for (i, &p) in pts.iter().enumerate() {
            for (k, (want_img, want_jac)) in pushed[i].iter().enumerate() {
                let (img, jac) = c.power(1 << k).reduce().eval_with_jacobian_unchecked(p);
                assert!(img.dist(*want_img) < 1e-13);
                assert!(jac.max_abs_diff(want_jac) < 1e-11);
            }
        }
    }

    #[test]
    fn defect_examples() {
        let rel: Vec<MapWord> = vec![
            MapWord::twist(0.7, RadialProfile::bump()),
            MapWord::twist(-1.1, RadialProfile::one_minus_r2()),
            MapWord::twist(0.4, RadialProfile::ring()),
        ];
        let sample = GroupSample::all_pairs(rel, 0);
        struct Cal(Quadrature);
        impl QuasiMorphismBase for Cal {
            type Element = MapWord;
            fn name(&self) -> String {
                "calabi".into()
            }
            fn value(&self, g: &MapWord) -> Result<f64> {
                calabi(g, &self.0)
            }
            fn product(&self, g: &MapWord, h: &MapWord) -> MapWord {
                g.compose(h)
            }
            fn power(&self, g: &MapWord, n: u64) -> MapWord {
                g.power(n as i64)
            }
        }
        assert!(defect_estimate(&Cal(q()), &sample).unwrap() <= 2e-6);
        let lifts = vec![
            CircleLift::from_fn("a", |t| t + 0.4 + 0.3 * t.sin()),
            CircleLift::from_fn("b", |t| t - 2.0 + 0.5 * (2.0 * t).cos()),
            CircleLift::shift(5.0),
        ];
        let d = defect_estimate(&MeanDisplacementBase { q: q() }, &GroupSample::all_pairs(lifts, 0)).unwrap();
        assert!(d <= 2.0);
    }

    #[test]
    fn coboundary_examples() {
        let base = TauBase::lambda(q());
        assert_eq!(
            coboundary(&base, &MapWord::identity(), &MapWord::identity()).unwrap(),
            0.0
        );
        let h1 = MapWord::twist(0.7, RadialProfile::bump());
        let h2 = MapWord::twist(-0.3, RadialProfile::one_minus_r2());
        assert!(coboundary(&base, &h1, &h2).unwrap().abs() < 2e-6);
    }

    #[test]
    fn hom_difference_examples() {
        for s in [1.0, -2.0] {
            let r = hom_difference(&MapWord::twist(s, RadialProfile::bump()), 4, &q()).unwrap();
            assert!((r.difference.value - s * PI / 12.0).abs() < 1e-6);
        }
        let r = hom_difference(&MapWord::rotation(1.2), 4, &q()).unwrap();
        assert!(r.difference.value.abs() < 1e-8);
        let moved = MapWord::flow(
            TimeDependentHamiltonian::new("shift", vec![HamiltonianTerm::autonomous(vec![1.0, -2.0, 1.0], 1, 0)])
                .unwrap(),
            32,
        )
        .unwrap();
        assert!(matches!(hom_difference(&moved, 2, &q()), Err(Error::OriginNotFixed(_))));
    }

    #[test]
    fn mod1_examples() {
        let r = mod1_reductions(&MapWord::identity(), 4, &q(), 64).unwrap();
        assert_eq!((r.underline_tau, r.rot_mod1), (0.0, 0.0));
        let r = mod1_reductions(&MapWord::rotation(PI / 2.0), 4, &q(), 64).unwrap();
        assert!(circle::circular_distance(r.underline_tau, 0.0) < 1e-9);
        assert!((r.rot_mod1 - 0.25).abs() < 1e-12);
        let r = mod1_reductions(&MapWord::twist(1.0, RadialProfile::r_squared()), 4, &q(), 64).unwrap();
        assert!((r.underline_tau - 1.0 / (6.0 * PI)).abs() < 1e-9);
        assert!((r.rot_mod1 - 1.0 / (2.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn ray_shortcut_matches_full_grid() {
        let h = TimeDependentHamiltonian::new("radial", vec![HamiltonianTerm::autonomous(vec![0.3, -0.2, -0.1], 0, 0)])
            .unwrap();
        let g = MapWord::flow(h, 64)
            .unwrap()
            .compose(&MapWord::twist(0.7, RadialProfile::ring()));
        assert!(g.is_rotation_equivariant());
        let q = q();
        let eta = PrimitiveOneForm::lambda();
        let full: f64 = q
            .disk_nodes()
            .iter()
            .map(|&(p, w)| {
                let (image, jac) = g.eval_with_jacobian_unchecked(p);
                w * tau_density(&eta, p, image, jac)
            })
            .sum();
        assert!((tau(&eta, &g, &q).unwrap() - full).abs() < 1e-12);
    }
}
