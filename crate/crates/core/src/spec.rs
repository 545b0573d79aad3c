//! Map and isotopy spec files (JSON).
//!
//! A map spec is `{"letters": [letter, ...]}` (or a bare letter array), a
//! letter being `{"kind", "parameters", "inverted"}` with kinds `rotation`
//! (`alpha`), `twist` (`s`, `profile`) and `flow` (`hamiltonian`, optional
//! `steps`). Letters are listed leftmost-applied-last, like the word.
//!
//! An isotopy spec is `{"kind", "parameters", "steps", "t_steps"}` with kinds
//! `rotation_path`, `twist_path`, `hamiltonian_path` and `conjugated_path`
//! (`inner`: isotopy spec, `conjugator`: Hamiltonian).
//!
//! Profiles are a built-in label or `{"coeffs": [...]}` in powers of `r^2`;
//! Hamiltonians are a built-in label or `{"terms": [...]}`.

use crate::error::{Error, Result};
use crate::forms::{DiskPath, PrimitiveOneForm};
use crate::geometry::{Generator, Letter, MapWord, Point, RadialProfile};
use crate::hamiltonian::{HamiltonianTerm, TimeDependentHamiltonian};
use crate::isotopy::Isotopy;
use serde::Deserialize;
use serde_json::{Map, Value};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LetterRecord {
    kind: String,
    #[serde(default)]
    parameters: Map<String, Value>,
    #[serde(default)]
    inverted: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MapRecord {
    #[serde(default)]
    #[allow(dead_code)]
    label: Option<String>,
    letters: Vec<LetterRecord>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IsotopyRecord {
    kind: String,
    #[serde(default)]
    parameters: Map<String, Value>,
    steps: Option<usize>,
    t_steps: Option<usize>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ProfileRecord {
    Label(String),
    Coeffs {
        #[serde(default)]
        label: Option<String>,
        coeffs: Vec<f64>,
    },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum HamiltonianRecord {
    Label(String),
    Terms {
        #[serde(default)]
        label: Option<String>,
        terms: Vec<HamiltonianTerm>,
    },
}

/// A parsed spec file.
#[derive(Clone, Debug)]
pub enum Spec {
    Map(MapWord),
    Isotopy { isotopy: Isotopy, t_steps: Option<usize> },
}

impl Spec {
    /// The map itself, or the endpoint `g_1` of an isotopy.
    pub fn map_word(&self) -> MapWord {
        match self {
            Spec::Map(w) => w.clone(),
            Spec::Isotopy { isotopy, .. } => isotopy.endpoint_word(),
        }
    }

    pub fn isotopy(&self) -> Result<&Isotopy> {
        match self {
            Spec::Isotopy { isotopy, .. } => Ok(isotopy),
            Spec::Map(_) => Err(Error::Spec(
                "this invariant needs an isotopy spec (with a `kind` field)".into(),
            )),
        }
    }
}

fn spec_err(msg: impl Into<String>) -> Error {
    Error::Spec(msg.into())
}

fn check_keys(kind: &str, params: &Map<String, Value>, allowed: &[&str]) -> Result<()> {
    match params.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(spec_err(format!(
            "{kind}: unknown parameter `{k}` (expected {allowed:?})"
        ))),
        None => Ok(()),
    }
}

fn number(kind: &str, params: &Map<String, Value>, name: &str) -> Result<f64> {
    params
        .get(name)
        .and_then(Value::as_f64)
        .filter(|v| v.is_finite())
        .ok_or_else(|| spec_err(format!("{kind}: missing or non-numeric parameter `{name}`")))
}

fn field<'a>(kind: &str, params: &'a Map<String, Value>, name: &str) -> Result<&'a Value> {
    params
        .get(name)
        .ok_or_else(|| spec_err(format!("{kind}: missing parameter `{name}`")))
}

fn steps_param(kind: &str, params: &Map<String, Value>, default: usize) -> Result<usize> {
    match params.get("steps") {
        None => Ok(default),
        Some(v) => v
            .as_u64()
            .map(|s| s as usize)
            .ok_or_else(|| spec_err(format!("{kind}: `steps` must be a positive integer"))),
    }
}

pub fn parse_profile(v: &Value) -> Result<RadialProfile> {
    let rec: ProfileRecord =
        serde_json::from_value(v.clone()).map_err(|_| spec_err("profile must be a label or {\"coeffs\": [...]}"))?;
    match rec {
        ProfileRecord::Label(l) => RadialProfile::builtin(&l).ok_or_else(|| {
            spec_err(format!(
                "unknown profile `{l}` (built-ins: {:?})",
                RadialProfile::builtin_labels()
            ))
        }),
        ProfileRecord::Coeffs { label, coeffs } => {
            if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                return Err(spec_err("profile coefficients must be finite and non-empty"));
            }
            Ok(RadialProfile::new(
                label.unwrap_or_else(|| format!("poly{coeffs:?}")),
                coeffs,
            ))
        }
    }
}

pub fn parse_hamiltonian(v: &Value) -> Result<TimeDependentHamiltonian> {
    let rec: HamiltonianRecord = serde_json::from_value(v.clone())
        .map_err(|e| spec_err(format!("hamiltonian must be a label or {{\"terms\": [...]}}: {e}")))?;
    match rec {
        HamiltonianRecord::Label(l) => TimeDependentHamiltonian::builtin(&l).ok_or_else(|| {
            spec_err(format!(
                "unknown hamiltonian `{l}` (built-ins: {:?})",
                TimeDependentHamiltonian::builtin_labels()
            ))
        }),
        // boundary-constancy failures are precondition errors, not parse errors
        HamiltonianRecord::Terms { label, terms } => {
            TimeDependentHamiltonian::new(label.unwrap_or_else(|| "custom".into()), terms)
        }
    }
}

fn parse_letter(rec: &LetterRecord, default_steps: usize) -> Result<Letter> {
    let kind = rec.kind.as_str();
    let p = &rec.parameters;
    let generator = match kind {
        "rotation" => {
            check_keys(kind, p, &["alpha"])?;
            Generator::rotation(number(kind, p, "alpha")?)
        }
        "twist" => {
            check_keys(kind, p, &["s", "profile"])?;
            Generator::twist(number(kind, p, "s")?, parse_profile(field(kind, p, "profile")?)?)
        }
        "flow" => {
            check_keys(kind, p, &["hamiltonian", "steps"])?;
            let steps = steps_param(kind, p, default_steps)?;
            if steps < crate::isotopy::MIN_FLOW_STEPS {
                return Err(spec_err(format!(
                    "flow: steps must be at least {}",
                    crate::isotopy::MIN_FLOW_STEPS
                )));
            }
            Generator::flow(parse_hamiltonian(field(kind, p, "hamiltonian")?)?, steps)?
        }
        other => {
            return Err(spec_err(format!(
                "unknown letter kind `{other}` (rotation, twist, flow)"
            )))
        }
    };
    Ok(Letter::new(generator, rec.inverted))
}

pub fn parse_map(v: &Value, default_steps: usize) -> Result<MapWord> {
    let letters: Vec<LetterRecord> = if v.is_array() {
        serde_json::from_value(v.clone()).map_err(|e| spec_err(format!("bad letter list: {e}")))?
    } else {
        let rec: MapRecord = serde_json::from_value(v.clone()).map_err(|e| spec_err(format!("bad map spec: {e}")))?;
        rec.letters
    };
    let letters = letters
        .iter()
        .map(|l| parse_letter(l, default_steps))
        .collect::<Result<Vec<_>>>()?;
    Ok(MapWord::from_letters(letters))
}

pub fn parse_isotopy(v: &Value, default_steps: usize) -> Result<(Isotopy, Option<usize>)> {
    let rec: IsotopyRecord =
        serde_json::from_value(v.clone()).map_err(|e| spec_err(format!("bad isotopy spec: {e}")))?;
    let kind = rec.kind.as_str();
    let p = &rec.parameters;
    let steps = rec.steps.unwrap_or(default_steps);
    let iso = match kind {
        "rotation_path" => {
            check_keys(kind, p, &["alpha"])?;
            Isotopy::rotation(number(kind, p, "alpha")?)
        }
        "twist_path" => {
            check_keys(kind, p, &["s", "profile"])?;
            Isotopy::twist(number(kind, p, "s")?, parse_profile(field(kind, p, "profile")?)?)
        }
        "hamiltonian_path" => {
            check_keys(kind, p, &["hamiltonian"])?;
            Isotopy::hamiltonian(parse_hamiltonian(field(kind, p, "hamiltonian")?)?, steps)?
        }
        "conjugated_path" => {
            check_keys(kind, p, &["inner", "conjugator"])?;
            let (inner, _) = parse_isotopy(field(kind, p, "inner")?, default_steps)?;
            Isotopy::conjugated(inner, parse_hamiltonian(field(kind, p, "conjugator")?)?, steps)?
        }
        other => {
            return Err(spec_err(format!(
                "unknown isotopy kind `{other}` (rotation_path, twist_path, hamiltonian_path, conjugated_path)"
            )))
        }
    };
    if rec.t_steps == Some(0) {
        return Err(spec_err("t_steps must be positive"));
    }
    Ok((iso, rec.t_steps))
}

/// Parses either spec flavour: objects with a `kind` are isotopies.
pub fn parse_spec(v: &Value, default_steps: usize) -> Result<Spec> {
    if v.get("kind").is_some() {
        let (isotopy, t_steps) = parse_isotopy(v, default_steps)?;
        Ok(Spec::Isotopy { isotopy, t_steps })
    } else {
        Ok(Spec::Map(parse_map(v, default_steps)?))
    }
}

pub fn parse_spec_str(text: &str, default_steps: usize) -> Result<(Value, Spec)> {
    let v: Value = serde_json::from_str(text).map_err(|e| spec_err(format!("spec is not valid JSON: {e}")))?;
    let spec = parse_spec(&v, default_steps)?;
    Ok((v, spec))
}

fn suffix_number(text: &str, prefix: &str) -> Option<Result<f64>> {
    text.strip_prefix(prefix).map(|rest| {
        rest.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| spec_err(format!("`{text}`: expected a number after `{prefix}`")))
    })
}

/// `lambda`, `lambda+cxy:<c>` or `lambda+cx2:<c>`.
pub fn parse_form(text: &str) -> Result<PrimitiveOneForm> {
    if text == "lambda" {
        return Ok(PrimitiveOneForm::lambda());
    }
    if let Some(c) = suffix_number(text, "lambda+cxy:") {
        return Ok(PrimitiveOneForm::lambda_plus_cxy(c?));
    }
    if let Some(c) = suffix_number(text, "lambda+cx2:") {
        return Ok(PrimitiveOneForm::lambda_plus_cx2(c?));
    }
    Err(spec_err(format!(
        "unknown form `{text}` (lambda, lambda+cxy:<c>, lambda+cx2:<c>)"
    )))
}

/// `x_axis`, `radial:<angle>`, `bent:<bulge>` or `segment:<x>,<y>,<end_angle>`.
pub fn parse_path(text: &str) -> Result<DiskPath> {
    if text == "x_axis" {
        return Ok(DiskPath::x_axis());
    }
    if let Some(a) = suffix_number(text, "radial:") {
        return Ok(DiskPath::Radial { angle: a? });
    }
    if let Some(b) = suffix_number(text, "bent:") {
        return DiskPath::bent(b?);
    }
    if let Some(rest) = text.strip_prefix("segment:") {
        let nums: Vec<f64> = rest
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| spec_err(format!("`{text}`: expected segment:<x>,<y>,<end_angle>")))?;
        if let [x, y, a] = nums[..] {
            return DiskPath::segment(Point::new(x, y), a);
        }
        return Err(spec_err(format!("`{text}`: expected segment:<x>,<y>,<end_angle>")));
    }
    Err(spec_err(format!(
        "unknown path `{text}` (x_axis, radial:<a>, bent:<b>, segment:<x>,<y>,<a>)"
    )))
}

/// Copy of a spec with one numeric parameter replaced: on letter `letter`
/// of a map spec, or on the top level of an isotopy spec.
pub fn with_parameter(v: &Value, letter: usize, name: &str, value: f64) -> Result<Value> {
    let mut out = v.clone();
    let params = if out.get("kind").is_some() {
        out.get_mut("parameters")
    } else {
        let letters = if out.is_array() {
            Some(&mut out)
        } else {
            out.get_mut("letters")
        };
        letters
            .and_then(|l| l.get_mut(letter))
            .and_then(|l| l.get_mut("parameters"))
    };
    let params = params
        .and_then(Value::as_object_mut)
        .ok_or_else(|| spec_err(format!("no parameters to sweep on letter {letter}")))?;
    if !params.contains_key(name) {
        return Err(spec_err(format!(
            "parameter `{name}` does not belong to this spec kind"
        )));
    }
    params.insert(name.to_string(), Value::from(value));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn forms_and_paths() {
        assert!(parse_form("lambda").unwrap().is_lambda());
        assert!(!parse_form("lambda+cxy:0.5").unwrap().is_lambda());
        assert!(parse_form("lambda+cx2:x").is_err());
        assert!(parse_form("mu").is_err());
        assert_eq!(parse_path("x_axis").unwrap(), DiskPath::x_axis());
        assert_eq!(parse_path("bent:0.2").unwrap(), DiskPath::Bent { bulge: 0.2 });
        assert!(parse_path("bent:5").is_err());
        assert!(parse_path("segment:0.1,0.2,1.0").is_ok());
        assert!(parse_path("segment:0.1,0.2").is_err());
    }

    #[test]
    fn parses_maps() {
        let v = json!({"letters": [
            {"kind": "rotation", "parameters": {"alpha": 1.0}},
            {"kind": "twist", "parameters": {"s": 0.5, "profile": "bump"}, "inverted": true},
            {"kind": "twist", "parameters": {"s": 0.5, "profile": {"coeffs": [0.0, 1.0]}}},
            {"kind": "flow", "parameters": {"hamiltonian": "asym", "steps": 32}}
        ]});
        let w = parse_map(&v, 256).unwrap();
        assert_eq!(w.len(), 4);
        assert!(w.letters[1].inverted);
        let bare = parse_map(&json!([{"kind": "rotation", "parameters": {"alpha": 2.0}}]), 256).unwrap();
        let p = Point::new(0.5, 0.0);
        assert!(bare.eval(p).unwrap().dist(MapWord::rotation(2.0).eval(p).unwrap()) < 1e-15);
    }

    #[test]
    fn rejects_bad_maps() {
        for v in [
            json!({"letters": [{"kind": "shear", "parameters": {}}]}),
            json!({"letters": [{"kind": "rotation", "parameters": {}}]}),
            json!({"letters": [{"kind": "rotation", "parameters": {"alpha": "x"}}]}),
            json!({"letters": [{"kind": "rotation", "parameters": {"alpha": 1, "beta": 2}}]}),
            json!({"letters": [{"kind": "twist", "parameters": {"s": 1, "profile": "nope"}}]}),
            json!({"letters": [{"kind": "flow", "parameters": {"hamiltonian": "asym", "steps": 4}}]}),
            json!({"letterz": []}),
        ] {
            assert!(matches!(parse_map(&v, 256), Err(Error::Spec(_))), "{v}");
        }
        let not_tangent = json!({"letters": [{"kind": "flow", "parameters": {
            "hamiltonian": {"terms": [{"time": [1.0], "radial": [1.0], "px": 1, "py": 0}]}}}]});
        assert!(matches!(
            parse_map(&not_tangent, 256),
            Err(Error::BoundaryNotConstant { .. })
        ));
    }

    #[test]
    fn parses_isotopies() {
        let (iso, t) = parse_isotopy(
            &json!({"kind": "rotation_path", "parameters": {"alpha": 1.0}, "t_steps": 8}),
            256,
        )
        .unwrap();
        assert_eq!(iso, Isotopy::rotation(1.0));
        assert_eq!(t, Some(8));
        let v = json!({"kind": "conjugated_path", "parameters": {
            "inner": {"kind": "twist_path", "parameters": {"s": 0.5, "profile": "ring"}},
            "conjugator": "conjugator"}, "steps": 32});
        let spec = parse_spec(&v, 256).unwrap();
        assert!(spec.isotopy().unwrap().fixes_origin());
        assert!(parse_spec(&json!({"letters": []}), 256).unwrap().isotopy().is_err());
        assert!(parse_isotopy(&json!({"kind": "spiral_path"}), 256).is_err());
    }

    #[test]
    fn parameter_substitution() {
        let v = json!({"letters": [{"kind": "twist", "parameters": {"s": 0.5, "profile": "r2"}}]});
        let w = with_parameter(&v, 0, "s", 2.0).unwrap();
        assert_eq!(w["letters"][0]["parameters"]["s"], json!(2.0));
        assert!(with_parameter(&v, 0, "alpha", 1.0).is_err());
        assert!(with_parameter(&v, 3, "s", 1.0).is_err());
        let iso = json!({"kind": "rotation_path", "parameters": {"alpha": 1.0}});
        assert_eq!(
            with_parameter(&iso, 0, "alpha", 3.0).unwrap()["parameters"]["alpha"],
            json!(3.0)
        );
    }
}
