//! Primitive 1-forms of the area form, paths into the disk, and the
//! quadrature rules used for every integral in the crate.

use crate::error::{Error, Result};
use crate::geometry::{MapWord, Mat2, Point};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on the three-term recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let pn = if n == 1 { x } else { p1 };
                let pnm1 = if n == 1 { 1.0 } else { p0 };
                dp = n as f64 * (x * pn - pnm1) / (x * x - 1.0);
                let dx = pn / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn on_interval(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }
}

/// Nodes per panel in composite rules along paths and in time.
pub const PANEL_NODES: usize = 4;

/// Composite Gauss–Legendre nodes on `[0, 1]` with `panels` equal panels.
pub fn composite_nodes(panels: usize) -> Vec<(f64, f64)> {
    let gl = GaussLegendre::new(PANEL_NODES);
    (0..panels)
        .flat_map(|k| {
            let a = k as f64 / panels as f64;
            let b = (k + 1) as f64 / panels as f64;
            gl.on_interval(a, b).collect::<Vec<_>>()
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub n_r: usize,
    pub n_theta: usize,
    pub n_path: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            n_r: 64,
            n_theta: 128,
            n_path: 64,
        }
    }
}

impl Quadrature {
    pub fn new(n_r: usize, n_theta: usize, n_path: usize) -> Result<Self> {
        let q = Self { n_r, n_theta, n_path };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_r < 8 || self.n_theta < 16 || self.n_path < 16 {
            return Err(Error::InvalidConfig(format!(
                "quadrature needs n_r >= 8, n_theta >= 16, n_path >= 16 (got {}, {}, {})",
                self.n_r, self.n_theta, self.n_path
            )));
        }
        Ok(())
    }

    pub fn doubled(&self) -> Self {
        Self {
            n_r: 2 * self.n_r,
            n_theta: 2 * self.n_theta,
            n_path: 2 * self.n_path,
        }
    }

    /// Polar tensor nodes with weights that include the area factor `r`.
    pub fn disk_nodes(&self) -> Vec<(Point, f64)> {
        let gl = GaussLegendre::new(self.n_r);
        let dtheta = TAU / self.n_theta as f64;
        let radial: Vec<(f64, f64)> = gl.on_interval(0.0, 1.0).collect();
        let mut out = Vec::with_capacity(self.n_r * self.n_theta);
        for &(r, w) in &radial {
            for j in 0..self.n_theta {
                out.push((Point::polar(r, dtheta * j as f64), w * r * dtheta));
            }
        }
        out
    }

    /// Radial nodes on the ray `theta = 0` carrying the full angular weight,
    /// for integrands that do not depend on `theta`.
    pub fn ray_nodes(&self) -> Vec<(Point, f64)> {
        GaussLegendre::new(self.n_r)
            .on_interval(0.0, 1.0)
            .map(|(r, w)| (Point::new(r, 0.0), w * r * TAU))
            .collect()
    }

    pub fn path_nodes(&self) -> Vec<(f64, f64)> {
        composite_nodes(self.n_path)
    }

    /// Uniform periodic nodes on `[0, 2pi)` with equal weights.
    pub fn circle_nodes(&self) -> Vec<(f64, f64)> {
        let d = TAU / self.n_theta as f64;
        (0..self.n_theta).map(|j| (d * j as f64, d)).collect()
    }
}

/// One monomial `coeff * x^px * y^py` of the exact correction `F`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coeff: f64,
    pub px: u32,
    pub py: u32,
}

/// `eta = lambda + dF` with `lambda = (x dy - y dx)/2` and polynomial `F`,
/// so `d eta = dx ^ dy` exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveOneForm {
    pub label: String,
    pub correction: Vec<Monomial>,
}

impl PrimitiveOneForm {
    pub fn lambda() -> Self {
        Self {
            label: "lambda".into(),
            correction: Vec::new(),
        }
    }

    /// `lambda + d(c x y)`.
    pub fn lambda_plus_cxy(c: f64) -> Self {
        Self {
            label: format!("lambda+d({c}xy)"),
            correction: vec![Monomial { coeff: c, px: 1, py: 1 }],
        }
    }

    /// `lambda + d(c x^2)`.
    pub fn lambda_plus_cx2(c: f64) -> Self {
        Self {
            label: format!("lambda+d({c}x^2)"),
            correction: vec![Monomial { coeff: c, px: 2, py: 0 }],
        }
    }

    pub fn with_correction(label: impl Into<String>, correction: Vec<Monomial>) -> Self {
        Self {
            label: label.into(),
            correction,
        }
    }

    pub fn is_lambda(&self) -> bool {
        self.correction.iter().all(|m| m.coeff == 0.0)
    }

    fn mono_pow(v: f64, k: u32) -> f64 {
        if k == 0 {
            1.0
        } else {
            v.powi(k as i32)
        }
    }

    /// Value of `F`.
    pub fn potential(&self, p: Point) -> f64 {
        self.correction
            .iter()
            .map(|m| m.coeff * Self::mono_pow(p.x, m.px) * Self::mono_pow(p.y, m.py))
            .sum()
    }

    /// Components `(a, b)` of `eta = a dx + b dy` at `p`.
    pub fn at(&self, p: Point) -> Point {
        let mut a = -0.5 * p.y;
        let mut b = 0.5 * p.x;
        for m in &self.correction {
            if m.px > 0 {
                a += m.coeff * m.px as f64 * Self::mono_pow(p.x, m.px - 1) * Self::mono_pow(p.y, m.py);
            }
            if m.py > 0 {
                b += m.coeff * m.py as f64 * Self::mono_pow(p.x, m.px) * Self::mono_pow(p.y, m.py - 1);
            }
        }
        Point::new(a, b)
    }

    /// `db/dx - da/dy` by central differences of step `h`.
    pub fn exterior_derivative_fd(&self, p: Point, h: f64) -> f64 {
        let dbdx = (self.at(p + Point::new(h, 0.0)).y - self.at(p - Point::new(h, 0.0)).y) / (2.0 * h);
        let dady = (self.at(p + Point::new(0.0, h)).x - self.at(p - Point::new(0.0, h)).x) / (2.0 * h);
        dbdx - dady
    }
}

/// Smooth path from an interior anchor to the boundary circle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiskPath {
    /// `t -> t (cos a, sin a)`.
    Radial { angle: f64 },
    /// `t -> (t, bulge sin(pi t))`, from the origin to `(1, 0)`.
    Bent { bulge: f64 },
    /// Straight segment from `anchor` to the boundary point at `end_angle`.
    Segment { anchor: Point, end_angle: f64 },
}

impl DiskPath {
    /// The x-axis path `t -> (t, 0)`.
    pub fn x_axis() -> Self {
        DiskPath::Radial { angle: 0.0 }
    }

    pub fn bent(bulge: f64) -> Result<Self> {
        let p = DiskPath::Bent { bulge };
        p.validate()?;
        Ok(p)
    }

    pub fn segment(anchor: Point, end_angle: f64) -> Result<Self> {
        let p = DiskPath::Segment { anchor, end_angle };
        p.validate()?;
        Ok(p)
    }

    pub fn point(&self, t: f64) -> Point {
        match self {
            DiskPath::Radial { angle } => Point::polar(t, *angle),
            DiskPath::Bent { bulge } => Point::new(t, bulge * (PI * t).sin()),
            DiskPath::Segment { anchor, end_angle } => anchor.scale(1.0 - t) + Point::on_circle(*end_angle).scale(t),
        }
    }

    pub fn derivative(&self, t: f64) -> Point {
        match self {
            DiskPath::Radial { angle } => Point::on_circle(*angle),
            DiskPath::Bent { bulge } => Point::new(1.0, bulge * PI * (PI * t).cos()),
            DiskPath::Segment { anchor, end_angle } => Point::on_circle(*end_angle) - *anchor,
        }
    }

    pub fn anchor(&self) -> Point {
        self.point(0.0)
    }

    pub fn endpoint(&self) -> Point {
        self.point(1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.anchor().norm() >= 1.0 {
            return Err(Error::Spec("path anchor must be an interior point".into()));
        }
        if (self.endpoint().norm() - 1.0).abs() > 1e-12 {
            return Err(Error::Spec("path must end on the boundary circle".into()));
        }
        if (1..64).any(|i| self.point(i as f64 / 64.0).norm() >= 1.0) {
            return Err(Error::Spec("path leaves the open disk before its endpoint".into()));
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        match self {
            DiskPath::Radial { angle } => format!("radial({angle})"),
            DiskPath::Bent { bulge } => format!("bent({bulge})"),
            DiskPath::Segment { anchor, end_angle } => {
                format!("segment(({}, {}) -> {end_angle})", anchor.x, anchor.y)
            }
        }
    }
}

/// Pullback `(g^* eta)_p = J^T eta_{g(p)}`.
pub fn pullback_at(map: &MapWord, eta: &PrimitiveOneForm, p: Point) -> Result<Point> {
    let (q, jac) = map.eval_with_jacobian(p)?;
    Ok(pullback_covector(jac, eta.at(q)))
}

pub fn pullback_covector(jac: Mat2, covector: Point) -> Point {
    jac.transpose().apply(covector)
}

/// Coefficient of `u ^ v` against `dx ^ dy`.
pub fn wedge_density(u: Point, v: Point) -> f64 {
    u.x * v.y - u.y * v.x
}

/// Polar tensor quadrature of a density over the disk.
pub fn integrate_disk<F>(density: F, q: &Quadrature) -> f64
where
    F: Fn(Point) -> f64 + Sync + Send,
{
    let nodes = q.disk_nodes();
    let vals = crate::par::map_slice(&nodes, |&(p, w)| w * density(p));
    crate::par::ordered_sum(&vals)
}

/// Line integral of a covector field along a path, composite Gauss–Legendre.
pub fn integrate_path<F>(field: F, path: &DiskPath, q: &Quadrature) -> f64
where
    F: Fn(Point) -> Point + Sync + Send,
{
    let nodes = q.path_nodes();
    let vals = crate::par::map_slice(&nodes, |&(t, w)| w * field(path.point(t)).dot(path.derivative(t)));
    crate::par::ordered_sum(&vals)
}
