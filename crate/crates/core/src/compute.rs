//! Single-invariant computations on parsed specs, returned as result
//! records `{operation, inputs, value, error_bound, meta}`.

use crate::circle;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::forms::{DiskPath, PrimitiveOneForm};
use crate::geometry::MapWord;
use crate::isotopy::{r_functional, s_functional};
use crate::quasimorphism::{
    self, affordable_k_max, homogenize, resolvable_phase, tau_node_count, QuasiMorphismBase, SigmaBase, TauBase,
};
use crate::spec::Spec;
use serde::Serialize;
use serde_json::{json, Value};

/// One output row.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Record {
    pub operation: String,
    pub inputs: Value,
    pub value: f64,
    pub error_bound: f64,
    pub meta: Value,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Invariant {
    Tau,
    Sigma,
    Calabi,
    Flux,
    Rot,
    TauBar,
    SigmaBar,
    R,
    S,
    HomDifference,
}

impl Invariant {
    pub const ALL: [Invariant; 10] = [
        Invariant::Tau,
        Invariant::Sigma,
        Invariant::Calabi,
        Invariant::Flux,
        Invariant::Rot,
        Invariant::TauBar,
        Invariant::SigmaBar,
        Invariant::R,
        Invariant::S,
        Invariant::HomDifference,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Invariant::Tau => "tau",
            Invariant::Sigma => "sigma",
            Invariant::Calabi => "calabi",
            Invariant::Flux => "flux",
            Invariant::Rot => "rot",
            Invariant::TauBar => "tau_bar",
            Invariant::SigmaBar => "sigma_bar",
            Invariant::R => "R",
            Invariant::S => "S",
            Invariant::HomDifference => "hom_difference",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|i| i.name() == name).ok_or_else(|| {
            let names: Vec<_> = Self::ALL.iter().map(|i| i.name()).collect();
            Error::Spec(format!("unknown invariant `{name}` (one of {names:?})"))
        })
    }
}

/// Form and path choices for `tau`/`sigma`-type invariants.
#[derive(Clone, Debug)]
pub struct Choices {
    pub form: PrimitiveOneForm,
    pub path: DiskPath,
}

impl Default for Choices {
    fn default() -> Self {
        Self {
            form: PrimitiveOneForm::lambda(),
            path: DiskPath::x_axis(),
        }
    }
}

/// Shear limit for pulled-back integrands; `None` when the density stays
/// polynomial in the power (lambda against a rotation-equivariant word).
fn phase_limit(g: &MapWord, eta: &PrimitiveOneForm, nodes: usize) -> Option<f64> {
    (!(eta.is_lambda() && g.is_rotation_equivariant())).then(|| resolvable_phase(nodes))
}

/// Power exponent `k <= cfg.k_max` used to homogenize `tau_eta(g)`: the
/// largest within the work budget whose power the quadrature resolves.
pub fn tau_power(g: &MapWord, eta: &PrimitiveOneForm, cfg: &RunConfig) -> u32 {
    let nodes = tau_node_count(eta, g, &cfg.quadrature);
    affordable_k_max(
        g,
        nodes,
        cfg.k_max,
        cfg.work_budget,
        phase_limit(g, eta, cfg.quadrature.n_r),
    )
}

/// As [`tau_power`] for `sigma_{eta, gamma}`.
pub fn sigma_power(g: &MapWord, eta: &PrimitiveOneForm, cfg: &RunConfig) -> u32 {
    let nodes = cfg.quadrature.path_nodes().len();
    affordable_k_max(
        g,
        nodes,
        cfg.k_max,
        cfg.work_budget,
        phase_limit(g, eta, cfg.quadrature.n_path),
    )
}

fn estimate_meta(est: &quasimorphism::QmEstimate) -> Value {
    serde_json::to_value(&est.meta).expect("meta serializes")
}

/// Computes one invariant. Isotopy specs stand in for their endpoint
/// `g_1` wherever a map is expected.
pub fn compute(inv: Invariant, spec: &Spec, raw: &Value, choices: &Choices, cfg: &RunConfig) -> Result<Record> {
    cfg.validate()?;
    let q = cfg.quadrature;
    let g = spec.map_word();
    let t_steps = match spec {
        Spec::Isotopy { t_steps: Some(t), .. } => *t,
        _ => cfg.t_steps,
    };
    let mut inputs = json!({"spec": raw});
    let mut meta = json!({"quadrature": q});
    let (value, error_bound) = match inv {
        Invariant::Tau => {
            inputs["form"] = json!(choices.form.label);
            (quasimorphism::tau(&choices.form, &g, &q)?, 0.0)
        }
        Invariant::Sigma => {
            inputs["form"] = json!(choices.form.label);
            inputs["path"] = json!(choices.path.label());
            (quasimorphism::sigma(&choices.form, &choices.path, &g, &q)?, 0.0)
        }
        Invariant::Calabi => (quasimorphism::calabi(&g, &q)?, 0.0),
        Invariant::Flux => {
            inputs["path"] = json!(choices.path.label());
            (quasimorphism::flux(&g, &choices.path, &q)?, 0.0)
        }
        Invariant::Rot => {
            let lift = match spec {
                Spec::Isotopy { isotopy, .. } => isotopy.boundary_lift(),
                Spec::Map(_) => circle::boundary_lift(&g, 0)?,
            };
            let est = circle::translation_number(&lift, cfg.n_rot);
            meta = estimate_meta(&est);
            (est.value, est.error_bound)
        }
        Invariant::TauBar => {
            inputs["form"] = json!(choices.form.label);
            let base = TauBase {
                eta: choices.form.clone(),
                q,
            };
            let est = homogenize(&base, &g, tau_power(&g, &choices.form, cfg), None)?;
            meta = estimate_meta(&est);
            meta["base"] = json!(base.name());
            (est.value, est.error_bound)
        }
        Invariant::SigmaBar => {
            inputs["form"] = json!(choices.form.label);
            inputs["path"] = json!(choices.path.label());
            let base = SigmaBase {
                eta: choices.form.clone(),
                path: choices.path.clone(),
                q,
            };
            let est = homogenize(&base, &g, sigma_power(&g, &choices.form, cfg), None)?;
            meta = estimate_meta(&est);
            meta["base"] = json!(base.name());
            (est.value, est.error_bound)
        }
        Invariant::R => {
            meta["t_steps"] = json!(t_steps);
            (r_functional(spec.isotopy()?, &q, t_steps), 0.0)
        }
        Invariant::S => {
            inputs["path"] = json!(choices.path.label());
            meta["t_steps"] = json!(t_steps);
            (s_functional(spec.isotopy()?, &choices.path, &q, t_steps)?, 0.0)
        }
        Invariant::HomDifference => {
            let lambda = PrimitiveOneForm::lambda();
            let k = tau_power(&g, &lambda, cfg).min(sigma_power(&g, &lambda, cfg));
            let hd = quasimorphism::hom_difference(&g, k, &q)?;
            meta = json!({
                "tau_bar": hd.tau_bar.value,
                "tau_bar_error": hd.tau_bar.error_bound,
                "sigma_bar": hd.sigma_bar.value,
                "sigma_bar_error": hd.sigma_bar.error_bound,
                "n": hd.difference.meta.n,
                "quadrature": q,
                "heuristic": true,
            });
            (hd.difference.value, hd.difference.error_bound)
        }
    };
    Ok(Record {
        operation: inv.name().to_string(),
        inputs,
        value,
        error_bound,
        meta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::parse_spec_str;
    use std::f64::consts::PI;

    fn run(inv: &str, spec: &str) -> Result<Record> {
        let cfg = RunConfig {
            k_max: 4,
            ..RunConfig::default()
        };
        let (raw, spec) = parse_spec_str(spec, cfg.rk4_steps)?;
        compute(Invariant::parse(inv)?, &spec, &raw, &Choices::default(), &cfg)
    }

    #[test]
    fn cli_examples() {
        let rot = r#"{"letters": [{"kind": "rotation", "parameters": {"alpha": 1.0}}]}"#;
        assert!(run("tau", rot).unwrap().value.abs() < 1e-8);
        let twist = r#"{"letters": [{"kind": "twist", "parameters": {"s": 1.0, "profile": "r2"}}]}"#;
        let err = run("calabi", twist).unwrap_err();
        assert!(!err.is_spec_error() && err.to_string().contains("boundary_identity required"));
        let path = r#"{"kind": "rotation_path", "parameters": {"alpha": 1.0}}"#;
        assert!((run("R", path).unwrap().value - PI / 4.0).abs() < 1e-8);
        assert!((run("S", path).unwrap().value + 0.5).abs() < 1e-8);
        assert!((run("rot", rot).unwrap().value - 1.0 / (2.0 * PI)).abs() < 1e-12);
        assert!((run("tau_bar", twist).unwrap().value - PI / 6.0).abs() < 1e-8);
        assert!((run("sigma_bar", twist).unwrap().value - 0.25).abs() < 1e-8);
        let bump = r#"{"letters": [{"kind": "twist", "parameters": {"s": 1.0, "profile": "bump"}}]}"#;
        assert!((run("hom_difference", bump).unwrap().value - PI / 12.0).abs() < 1e-6);
        assert!((run("flux", bump).unwrap().value + 1.0 / 6.0).abs() < 1e-6);
        assert!(run("R", rot).unwrap_err().is_spec_error());
        assert!(run("volume", rot).unwrap_err().is_spec_error());
    }
}
