//! Time-dependent Hamiltonians on the disk and their RK4 flows.
//!
//! A Hamiltonian is a finite sum of terms `c(t) * Q(r^2) * x^px * y^py` with
//! `c` and `Q` polynomials. This family is closed under the operations the
//! isotopy functionals need (sums, exact gradients and Hessians) and covers
//! the rotation and twist generators exactly.
//!
//! Sign convention: the vector field is `X = (dH/dy, -dH/dx)`, so that
//! `i_X (dx ^ dy) = dH`.

use crate::error::{Error, Result};
use crate::geometry::RadialProfile;
use crate::jet::Jet2;
use crate::linalg::{Mat2, Point};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianTerm {
    /// Polynomial in `t`, lowest degree first.
    pub time: Vec<f64>,
    /// Polynomial in `r^2`, lowest degree first.
    pub radial: Vec<f64>,
    #[serde(default)]
    pub px: u32,
    #[serde(default)]
    pub py: u32,
}

impl HamiltonianTerm {
    pub fn autonomous(radial: Vec<f64>, px: u32, py: u32) -> Self {
        Self {
            time: vec![1.0],
            radial,
            px,
            py,
        }
    }

    fn time_coeff(&self, t: f64) -> f64 {
        self.time.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    fn jet(&self, t: f64, x: f64, y: f64) -> Jet2 {
        let c = self.time_coeff(t);
        if c == 0.0 {
            return Jet2::default();
        }
        let jx = Jet2::var_x(x);
        let jy = Jet2::var_y(y);
        let rho = jx * jx + jy * jy;
        let mut out = rho.poly(&self.radial);
        if self.px > 0 {
            out = out * jx.powi(self.px);
        }
        if self.py > 0 {
            out = out * jy.powi(self.py);
        }
        out.scale(c)
    }
}

/// `H(t, x, y)` on `[0,1] x D`, required to be spatially constant on the
/// boundary circle at every time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeDependentHamiltonian {
    pub label: String,
    pub terms: Vec<HamiltonianTerm>,
}

impl TimeDependentHamiltonian {
    /// Validates the boundary-constant invariant before returning.
    pub fn new(label: impl Into<String>, terms: Vec<HamiltonianTerm>) -> Result<Self> {
        let h = Self {
            label: label.into(),
            terms,
        };
        h.check_boundary_constant(1e-8)?;
        Ok(h)
    }

    pub fn zero() -> Self {
        Self {
            label: "zero".into(),
            terms: Vec::new(),
        }
    }

    /// Generator of the rotation path `t -> R_{t alpha}`: `(alpha/2)(1 - r^2)`.
    pub fn rotation(alpha: f64) -> Self {
        Self {
            label: format!("rotation({alpha})"),
            terms: vec![HamiltonianTerm::autonomous(vec![alpha / 2.0, -alpha / 2.0], 0, 0)],
        }
    }

    /// Generator of the twist path `t -> Twist(t s, f)`, normalized to vanish
    /// on the boundary: `s * int_r^1 f(u) u du`.
    pub fn twist(s: f64, profile: &RadialProfile) -> Self {
        let n = profile.coeffs.len();
        let mut radial = vec![0.0; n + 1];
        for (k, &c) in profile.coeffs.iter().enumerate() {
            let w = s * c / (2.0 * k as f64 + 2.0);
            radial[0] += w;
            radial[k + 1] -= w;
        }
        Self {
            label: format!("twist({s},{})", profile.label),
            terms: vec![HamiltonianTerm::autonomous(radial, 0, 0)],
        }
    }

    /// Named Hamiltonians used by the verification battery and spec files.
    ///
    /// - `quarter_bump`: `(1 - r^2)^2 / 4`, a radial twist generator.
    /// - `asym`: time-dependent, not rotation invariant, fixes the origin.
    /// - `conjugator`: autonomous, not rotation invariant, fixes the origin
    ///   and turns the boundary by `0.6`.
    /// - `drift`: moves the origin.
    pub fn builtin(label: &str) -> Option<Self> {
        let terms = match label {
            "zero" => return Some(Self::zero()),
            "quarter_bump" => vec![HamiltonianTerm::autonomous(vec![0.25, -0.5, 0.25], 0, 0)],
            "asym" => vec![
                HamiltonianTerm::autonomous(vec![0.4, -0.4], 0, 0),
                HamiltonianTerm {
                    time: vec![0.2, 0.6],
                    radial: vec![1.0, -2.0, 1.0],
                    px: 1,
                    py: 1,
                },
                HamiltonianTerm::autonomous(vec![0.3, -0.3], 2, 0),
            ],
            "conjugator" => vec![
                HamiltonianTerm::autonomous(vec![0.3, -0.3], 0, 0),
                HamiltonianTerm::autonomous(vec![0.4, -0.8, 0.4], 2, 0),
                HamiltonianTerm::autonomous(vec![0.3, -0.6, 0.3], 1, 1),
            ],
            "drift" => vec![
                HamiltonianTerm::autonomous(vec![0.2, -0.2], 0, 0),
                HamiltonianTerm {
                    time: vec![0.3, -0.2],
                    radial: vec![1.0, -2.0, 1.0],
                    px: 1,
                    py: 0,
                },
            ],
            _ => return None,
        };
        Some(Self {
            label: label.into(),
            terms,
        })
    }

    pub fn builtin_labels() -> &'static [&'static str] {
        &["zero", "quarter_bump", "asym", "conjugator", "drift"]
    }

    pub fn sum(&self, other: &TimeDependentHamiltonian) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self {
            label: format!("{}+{}", self.label, other.label),
            terms,
        }
    }

    pub fn jet(&self, t: f64, p: Point) -> Jet2 {
        self.terms
            .iter()
            .fold(Jet2::default(), |acc, term| acc + term.jet(t, p.x, p.y))
    }

    pub fn value(&self, t: f64, p: Point) -> f64 {
        self.jet(t, p).v
    }

    pub fn gradient(&self, t: f64, p: Point) -> Point {
        let j = self.jet(t, p);
        Point::new(j.dx, j.dy)
    }

    /// `X_t(p) = (dH/dy, -dH/dx)`.
    pub fn vector_field(&self, t: f64, p: Point) -> Point {
        let j = self.jet(t, p);
        Point::new(j.dy, -j.dx)
    }

    /// Vector field together with its spatial derivative `DX`.
    pub fn vector_field_with_derivative(&self, t: f64, p: Point) -> (Point, Mat2) {
        let j = self.jet(t, p);
        (Point::new(j.dy, -j.dx), Mat2::new(j.dxy, j.dyy, -j.dxx, -j.dxy))
    }

    /// Boundary value read at `(1, 0)`.
    pub fn boundary_value(&self, t: f64) -> f64 {
        self.value(t, Point::new(1.0, 0.0))
    }

    /// Max spread of `H(t, .)` over boundary samples, over a time grid.
    pub fn boundary_spread(&self) -> (f64, f64) {
        let mut worst = (0.0, 0.0);
        for ti in 0..=8 {
            let t = ti as f64 / 8.0;
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for k in 0..64 {
                let v = self.value(t, Point::on_circle(TAU * k as f64 / 64.0));
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if hi - lo > worst.1 {
                worst = (t, hi - lo);
            }
        }
        worst
    }

    pub fn check_boundary_constant(&self, tol: f64) -> Result<()> {
        let (t, spread) = self.boundary_spread();
        if spread > tol {
            return Err(Error::BoundaryNotConstant {
                label: self.label.clone(),
                t,
                spread,
            });
        }
        Ok(())
    }

    /// Max |X_t(p)| over a time grid of 33 nodes.
    pub fn max_speed_at(&self, p: Point) -> f64 {
        (0..=32)
            .map(|i| self.vector_field(i as f64 / 32.0, p).norm())
            .fold(0.0, f64::max)
    }

    /// Whether `X_t` vanishes at the origin for all sampled t.
    pub fn fixes_origin(&self) -> bool {
        self.max_speed_at(Point::ORIGIN) <= 1e-12
    }

    /// True when no term depends on time.
    pub fn is_autonomous(&self) -> bool {
        self.terms.iter().all(|t| t.time.iter().skip(1).all(|&c| c == 0.0))
    }

    /// Whether `X_t` vanishes on the boundary circle for all sampled t.
    pub fn fixes_boundary_pointwise(&self) -> bool {
        (0..64).all(|k| self.max_speed_at(Point::on_circle(TAU * k as f64 / 64.0)) <= 1e-12)
    }
}

/// RK4 integration of `dz/dt = X_t(z)` from `t0` to `t1` (either direction).
pub fn flow(h: &TimeDependentHamiltonian, p: Point, t0: f64, t1: f64, steps: usize) -> Point {
    let dt = (t1 - t0) / steps as f64;
    let mut z = p;
    for i in 0..steps {
        let t = t0 + dt * i as f64;
        let k1 = h.vector_field(t, z);
        let k2 = h.vector_field(t + 0.5 * dt, z + k1.scale(0.5 * dt));
        let k3 = h.vector_field(t + 0.5 * dt, z + k2.scale(0.5 * dt));
        let k4 = h.vector_field(t + dt, z + k3.scale(dt));
        z = z + (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(dt / 6.0);
    }
    z
}

fn mat_axpy(a: Mat2, s: f64, b: Mat2) -> Mat2 {
    Mat2::new(a.a + s * b.a, a.b + s * b.b, a.c + s * b.c, a.d + s * b.d)
}

/// RK4 flow together with its Jacobian, integrating the variational equation
/// `dJ/dt = DX_t(z) J` on the same grid.
pub fn flow_with_jacobian(h: &TimeDependentHamiltonian, p: Point, t0: f64, t1: f64, steps: usize) -> (Point, Mat2) {
    let dt = (t1 - t0) / steps as f64;
    let mut z = p;
    let mut jac = Mat2::IDENTITY;
    let rhs = |t: f64, z: Point, j: Mat2| {
        let (v, dv) = h.vector_field_with_derivative(t, z);
        (v, dv * j)
    };
    for i in 0..steps {
        let t = t0 + dt * i as f64;
        let (k1, l1) = rhs(t, z, jac);
        let (k2, l2) = rhs(t + 0.5 * dt, z + k1.scale(0.5 * dt), mat_axpy(jac, 0.5 * dt, l1));
        let (k3, l3) = rhs(t + 0.5 * dt, z + k2.scale(0.5 * dt), mat_axpy(jac, 0.5 * dt, l2));
        let (k4, l4) = rhs(t + dt, z + k3.scale(dt), mat_axpy(jac, dt, l3));
        z = z + (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(dt / 6.0);
        let incr = Mat2::new(
            l1.a + 2.0 * l2.a + 2.0 * l3.a + l4.a,
            l1.b + 2.0 * l2.b + 2.0 * l3.b + l4.b,
            l1.c + 2.0 * l2.c + 2.0 * l3.c + l4.c,
            l1.d + 2.0 * l2.d + 2.0 * l3.d + l4.d,
        );
        jac = mat_axpy(jac, dt / 6.0, incr);
    }
    (z, jac)
}

/// Flows a point away from the origin and accumulates its continuous angle
/// change `int (x dy - y dx) / r^2`. Returns the endpoint and the change.
pub fn flow_with_winding(h: &TimeDependentHamiltonian, p: Point, t0: f64, t1: f64, steps: usize) -> (Point, f64) {
    let dt = (t1 - t0) / steps as f64;
    let rhs = |t: f64, z: Point| {
        let v = h.vector_field(t, z);
        (v, (z.x * v.y - z.y * v.x) / z.norm_sq())
    };
    let mut z = p;
    let mut winding = 0.0;
    for i in 0..steps {
        let t = t0 + dt * i as f64;
        let (k1, w1) = rhs(t, z);
        let (k2, w2) = rhs(t + 0.5 * dt, z + k1.scale(0.5 * dt));
        let (k3, w3) = rhs(t + 0.5 * dt, z + k2.scale(0.5 * dt));
        let (k4, w4) = rhs(t + dt, z + k3.scale(dt));
        z = z + (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(dt / 6.0);
        winding += (w1 + 2.0 * w2 + 2.0 * w3 + w4) * dt / 6.0;
    }
    (z, winding)
}
