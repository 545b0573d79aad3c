//! Boundary circle dynamics: lifts to the real line, translation and
//! rotation numbers, and the mean-displacement quasi-morphism.
//!
//! Angles are radians; the circle is `R / 2 pi Z`. Translation numbers are
//! normalized by `2 pi`, so a rotation by `alpha` has translation number
//! `alpha / 2 pi`.

use crate::error::{Error, Result};
use crate::forms::Quadrature;
use crate::geometry::{MapWord, Point};
use crate::quasimorphism::{EstimateMeta, QmEstimate};
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

/// Samples used when unwrapping a boundary restriction.
pub const UNWRAP_SAMPLES: usize = 1024;
/// Largest accepted jump between consecutive unwrapped samples.
pub const UNWRAP_JUMP: f64 = PI / 2.0;

type LiftFn = dyn Fn(f64) -> f64 + Send + Sync;

/// A lift `phi~ : R -> R` with `phi~(theta + 2pi) = phi~(theta) + 2pi`.
#[derive(Clone)]
pub struct CircleLift {
    label: String,
    func: Arc<LiftFn>,
}

impl fmt::Debug for CircleLift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CircleLift").field("label", &self.label).finish()
    }
}

impl CircleLift {
    pub fn identity() -> Self {
        Self::shift(0.0)
    }

    /// `theta -> theta + c`.
    pub fn shift(c: f64) -> Self {
        Self {
            label: format!("shift({c})"),
            func: Arc::new(move |t| t + c),
        }
    }

    /// Lift from an explicit formula. The caller guarantees equivariance;
    /// [`CircleLift::check`] verifies it on samples.
    pub fn from_fn(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            func: Arc::new(f),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, theta: f64) -> f64 {
        (self.func)(theta)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &CircleLift) -> CircleLift {
        let (a, b) = (self.func.clone(), other.func.clone());
        CircleLift {
            label: format!("{}∘{}", self.label, other.label),
            func: Arc::new(move |t| a(b(t))),
        }
    }

    /// `n`-fold iterate, `n >= 0`.
    pub fn iterate(&self, n: u64) -> CircleLift {
        if n == 0 {
            return CircleLift::identity();
        }
        let f = self.func.clone();
        CircleLift {
            label: format!("{}^{n}", self.label),
            func: Arc::new(move |t| (0..n).fold(t, |acc, _| f(acc))),
        }
    }

    /// Shift by whole turns: `theta -> phi~(theta) + 2 pi k`.
    pub fn with_turns(&self, k: i64) -> CircleLift {
        let f = self.func.clone();
        let c = TAU * k as f64;
        CircleLift {
            label: format!("{}+2pi*{k}", self.label),
            func: Arc::new(move |t| f(t) + c),
        }
    }

    /// Checks equivariance (to 1e-9) and strict monotonicity on a 512 grid.
    pub fn check(&self) -> Result<()> {
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=512 {
            let t = TAU * i as f64 / 512.0;
            let v = self.eval(t);
            if v <= prev {
                return Err(Error::NonMonotoneLift(format!(
                    "{} decreases near theta = {t}",
                    self.label
                )));
            }
            prev = v;
            if i % 8 == 0 && (self.eval(t + TAU) - v - TAU).abs() > 1e-9 {
                return Err(Error::NonMonotoneLift(format!("{} is not 2pi-equivariant", self.label)));
            }
        }
        Ok(())
    }
}

fn nearest_branch(raw: f64, reference: f64) -> f64 {
    raw + TAU * ((reference - raw) / TAU).round()
}

fn boundary_angle(map: &MapWord, theta: f64) -> f64 {
    map.eval_unchecked(Point::on_circle(theta)).angle()
}

/// Unwraps `theta -> arg g(e^{i theta})` across `[a, b]` starting from the
/// lifted value `start`, subdividing whenever a jump exceeds the threshold.
fn unwrap_segment(map: &MapWord, a: f64, b: f64, start: f64, depth: u32) -> Result<f64> {
    let cand = nearest_branch(boundary_angle(map, b), start);
    if (cand - start).abs() <= UNWRAP_JUMP {
        return Ok(cand);
    }
    if depth == 0 {
        return Err(Error::NonMonotoneLift(format!(
            "boundary angle jumps by {:.3} rad within [{a:.6}, {b:.6}]",
            cand - start
        )));
    }
    let pieces = 16;
    let mut cur = start;
    for k in 0..pieces {
        let t0 = a + (b - a) * k as f64 / pieces as f64;
        let t1 = a + (b - a) * (k + 1) as f64 / pieces as f64;
        cur = unwrap_segment(map, t0, t1, cur, depth - 1)?;
    }
    Ok(cur)
}

/// Lift of the boundary restriction of `map`, unwrapped continuously from
/// `theta = 0` with `phi~(0)` in `[0, 2pi) + 2pi * branch`.
pub fn boundary_lift(map: &MapWord, branch: i64) -> Result<CircleLift> {
    let n = UNWRAP_SAMPLES;
    let step = TAU / n as f64;
    let mut lifted = Vec::with_capacity(n + 1);
    lifted.push(boundary_angle(map, 0.0).rem_euclid(TAU) + TAU * branch as f64);
    for i in 1..=n {
        let prev = lifted[i - 1];
        lifted.push(unwrap_segment(map, step * (i - 1) as f64, step * i as f64, prev, 3)?);
    }
    if lifted.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::NonMonotoneLift(
            "unwrapped boundary angle is not increasing".into(),
        ));
    }
    let closure = lifted[n] - lifted[0] - TAU;
    if closure.abs() > 1e-9 {
        return Err(Error::NonMonotoneLift(format!(
            "boundary restriction has degree error {closure:e}"
        )));
    }
    // periodic displacement table d_i = phi~(theta_i) - theta_i
    let disp: Vec<f64> = lifted[..n]
        .iter()
        .enumerate()
        .map(|(i, v)| v - step * i as f64)
        .collect();
    let word = map.clone();
    let lift = CircleLift::from_fn(format!("boundary_lift(branch {branch})"), move |theta| {
        let turns = (theta / TAU).floor();
        let local = theta - TAU * turns;
        let pos = local / step;
        let i = (pos.floor() as usize).min(n - 1);
        let frac = pos - i as f64;
        let d = disp[i] * (1.0 - frac) + disp[(i + 1) % n] * frac;
        nearest_branch(boundary_angle(&word, theta), theta + d)
    });
    Ok(lift)
}

/// `phi~^n(0) / (2 pi n)` with error bound `1/n`.
pub fn translation_number(lift: &CircleLift, n: u64) -> QmEstimate {
    let n = n.max(1);
    let mut x = 0.0;
    for _ in 0..n {
        x = lift.eval(x);
    }
    QmEstimate {
        value: x / (TAU * n as f64),
        error_bound: 1.0 / n as f64,
        meta: EstimateMeta {
            n: Some(n),
            ..EstimateMeta::default()
        },
    }
}

/// `(1 / 4 pi^2) int_0^{2pi} (phi~(theta) - theta) dtheta`, uniform periodic rule.
pub fn mean_displacement(lift: &CircleLift, q: &Quadrature) -> f64 {
    let nodes = q.circle_nodes();
    let vals = crate::par::map_slice(&nodes, |&(t, w)| w * (lift.eval(t) - t));
    crate::par::ordered_sum(&vals) / (4.0 * PI * PI)
}

/// Translation number reduced to `[0, 1)`.
pub fn rotation_number_mod1(lift: &CircleLift, n: u64) -> f64 {
    frac(translation_number(lift, n).value)
}

/// Fractional part in `[0, 1)`.
pub fn frac(v: f64) -> f64 {
    let f = v.rem_euclid(1.0);
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Distance between two classes in `R / Z`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = frac(a - b);
    d.min(1.0 - d)
}
