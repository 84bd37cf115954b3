//! JSON file formats.
//!
//! Inputs and outcomes are 1-based in files; the non-detection symbol is the
//! string `"null-outcome"`. Probabilities are read from `"p/q"` strings,
//! decimal strings or JSON numbers. A file is *exact* when every number in it
//! was written as a string; exact tables are written back as `"p/q"` strings
//! and float tables as JSON numbers.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{LdlError, Result};
use crate::geometry::{Certificate, CertificateCheck, Membership, MembershipProblem};
use crate::model::{
    DetectionBounds, FullCorrelation, ObservedEfficiencies, Offense, PostselectedCorrelation, Scenario, Verdict,
};
use crate::quantum::{BlochAngles, ProjectiveSetting, TwoQubitState};
use crate::scalar::{format_rational, parse_rational, Rational, Scalar};
use crate::schemes::LocalDistribution;

pub const NULL_OUTCOME: &str = "null-outcome";

/// A number as read from a file, with whether it was written exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Number {
    pub value: Rational,
    pub exact: bool,
}

impl Number {
    pub fn parse(v: &Value) -> Result<Self> {
        match v {
            Value::String(s) => Ok(Number { value: parse_rational(s)?, exact: true }),
            // Shortest round-trip decimal of the float; converts back to the same f64.
            Value::Number(n) => Ok(Number { value: parse_rational(&n.to_string())?, exact: false }),
            other => Err(LdlError::Parse(format!("expected a number or numeric string, got {other}"))),
        }
    }

    pub fn get<T: Scalar>(&self) -> T {
        T::from_rational(&self.value)
    }
}

/// Writes a scalar in the file representation of its mode.
pub fn number_to_json<T: Scalar>(v: &T) -> Value {
    if T::EXACT {
        Value::String(format_rational(&v.to_rational()))
    } else {
        let f = v.to_f64_lossy();
        serde_json::Number::from_f64(f).map(Value::Number).unwrap_or(Value::Null)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioJson {
    pub parties: usize,
    pub inputs: Vec<usize>,
    pub outcomes: Vec<usize>,
}

impl ScenarioJson {
    pub fn to_scenario(&self) -> Result<Scenario> {
        if self.inputs.len() != self.parties || self.outcomes.len() != self.parties {
            return Err(LdlError::Parse(format!(
                "scenario declares {} parties but lists {} input and {} outcome alphabets",
                self.parties,
                self.inputs.len(),
                self.outcomes.len()
            )));
        }
        Scenario::new(self.inputs.clone(), self.outcomes.clone())
    }

    pub fn from_scenario(s: &Scenario) -> Self {
        ScenarioJson { parties: s.n_parties(), inputs: s.inputs().to_vec(), outcomes: s.outcomes().to_vec() }
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let v: Value = from_str(text)?;
    // Accept a bare scenario object or one wrapped as {"scenario": ...}.
    let inner = v.get("scenario").cloned().unwrap_or(v);
    let sj: ScenarioJson = serde_json::from_value(inner).map_err(|e| LdlError::Parse(e.to_string()))?;
    sj.to_scenario()
}

fn from_str(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| LdlError::Parse(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Full,
    Postselected,
}

impl Kind {
    fn as_str(self) -> &'static str {
        match self {
            Kind::Full => "full",
            Kind::Postselected => "postselected",
        }
    }
}

/// A correlation table read from JSON, before choosing a numeric mode.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedTable {
    pub kind: Kind,
    pub scenario: Scenario,
    /// Row-major by `(x, a)` in the layout of `kind`.
    pub values: Vec<Rational>,
    pub exact: bool,
}

impl LoadedTable {
    pub fn full<T: Scalar>(&self) -> Result<FullCorrelation<T>> {
        if self.kind != Kind::Full {
            return Err(LdlError::Parse("expected a table of kind \"full\"".into()));
        }
        FullCorrelation::new(self.scenario.clone(), self.values.iter().map(T::from_rational).collect())
    }

    pub fn postselected<T: Scalar>(&self) -> Result<PostselectedCorrelation<T>> {
        if self.kind != Kind::Postselected {
            return Err(LdlError::Parse("expected a table of kind \"postselected\"".into()));
        }
        PostselectedCorrelation::new(self.scenario.clone(), self.values.iter().map(T::from_rational).collect())
    }
}

fn parse_usize_list(v: &Value, what: &str) -> Result<Vec<usize>> {
    v.as_array()
        .ok_or_else(|| LdlError::Parse(format!("{what} must be an array")))?
        .iter()
        .map(|e| {
            e.as_u64()
                .map(|k| k as usize)
                .ok_or_else(|| LdlError::Parse(format!("{what} entries must be positive integers")))
        })
        .collect()
}

fn to_zero_based(t: &[usize], what: &str) -> Result<Vec<usize>> {
    t.iter().map(|&k| k.checked_sub(1).ok_or_else(|| LdlError::Parse(format!("{what} labels are 1-based")))).collect()
}

fn parse_outcome(v: &Value) -> Result<Option<usize>> {
    match v {
        Value::String(s) if s == NULL_OUTCOME => Ok(None),
        Value::Number(n) => n
            .as_u64()
            .and_then(|k| (k as usize).checked_sub(1))
            .map(Some)
            .ok_or_else(|| LdlError::Parse("outcome labels are 1-based integers".into())),
        other => Err(LdlError::Parse(format!("bad outcome label {other}"))),
    }
}

fn outcome_to_json(o: Option<usize>) -> Value {
    match o {
        Some(k) => json!(k + 1),
        None => json!(NULL_OUTCOME),
    }
}

/// Parses one correlation object. Entries not listed are zero.
pub fn parse_table_value(v: &Value) -> Result<LoadedTable> {
    let scenario: ScenarioJson = serde_json::from_value(
        v.get("scenario").cloned().ok_or_else(|| LdlError::Parse("missing \"scenario\"".into()))?,
    )
    .map_err(|e| LdlError::Parse(e.to_string()))?;
    let scenario = scenario.to_scenario()?;
    let kind = match v.get("kind").and_then(Value::as_str) {
        Some("full") => Kind::Full,
        Some("postselected") => Kind::Postselected,
        other => return Err(LdlError::Parse(format!("kind must be \"full\" or \"postselected\", got {other:?}"))),
    };
    let width = match kind {
        Kind::Full => scenario.full_count(),
        Kind::Postselected => scenario.detected_count(),
    };
    let mut values: Vec<Option<Rational>> = vec![None; scenario.input_count() * width];
    let mut exact = true;
    let entries = v
        .get("entries")
        .and_then(Value::as_array)
        .ok_or_else(|| LdlError::Parse("missing \"entries\" array".into()))?;
    for e in entries {
        let x = to_zero_based(&parse_usize_list(e.get("x").unwrap_or(&Value::Null), "x")?, "input")?;
        let a_raw =
            e.get("a").and_then(Value::as_array).ok_or_else(|| LdlError::Parse("entry without \"a\"".into()))?;
        let a: Vec<Option<usize>> = a_raw.iter().map(parse_outcome).collect::<Result<_>>()?;
        let p = Number::parse(e.get("p").unwrap_or(&Value::Null))?;
        exact &= p.exact;
        let xi = scenario.input_index(&x)?;
        let ai = match kind {
            Kind::Full => scenario.full_index(&a)?,
            Kind::Postselected => {
                let det: Vec<usize> = a
                    .iter()
                    .map(|o| o.ok_or_else(|| LdlError::Parse("postselected tables cannot contain null-outcome".into())))
                    .collect::<Result<_>>()?;
                scenario.detected_index(&det)?
            }
        };
        let slot = &mut values[xi * width + ai];
        if slot.is_some() {
            return Err(LdlError::Parse(format!("duplicate entry for x = {:?}, a = {a_raw:?}", e.get("x"))));
        }
        *slot = Some(p.value);
    }
    let values = values.into_iter().map(|v| v.unwrap_or_else(|| Rational::from_integer(0.into()))).collect();
    Ok(LoadedTable { kind, scenario, values, exact })
}

pub fn parse_table(text: &str) -> Result<LoadedTable> {
    parse_table_value(&from_str(text)?)
}

fn table_value<T: Scalar>(
    scenario: &Scenario,
    kind: Kind,
    values: &[T],
    outcome: impl Fn(usize) -> Vec<Option<usize>>,
    width: usize,
) -> Value {
    let mut entries = Vec::with_capacity(values.len());
    for (i, v) in values.iter().enumerate() {
        let x: Vec<usize> = scenario.input_tuple(i / width).iter().map(|k| k + 1).collect();
        let a: Vec<Value> = outcome(i % width).into_iter().map(outcome_to_json).collect();
        entries.push(json!({ "x": x, "a": a, "p": number_to_json(v) }));
    }
    let mut m = Map::new();
    m.insert("scenario".into(), serde_json::to_value(ScenarioJson::from_scenario(scenario)).expect("plain struct"));
    m.insert("kind".into(), json!(kind.as_str()));
    m.insert("entries".into(), Value::Array(entries));
    Value::Object(m)
}

pub fn full_to_value<T: Scalar>(c: &FullCorrelation<T>) -> Value {
    let s = c.scenario();
    table_value(s, Kind::Full, c.table(), |i| s.full_tuple(i), s.full_count())
}

pub fn postselected_to_value<T: Scalar>(c: &PostselectedCorrelation<T>) -> Value {
    let s = c.scenario();
    table_value(
        s,
        Kind::Postselected,
        c.table(),
        |i| s.detected_tuple(i).into_iter().map(Some).collect(),
        s.detected_count(),
    )
}

pub fn certificate_to_value<T: Scalar>(c: &Certificate<T>) -> Value {
    let s = c.scenario();
    let mut v = table_value(
        s,
        Kind::Postselected,
        c.coefficients(),
        |i| s.detected_tuple(i).into_iter().map(Some).collect(),
        s.detected_count(),
    );
    let m = v.as_object_mut().expect("object");
    m.insert("bound".into(), number_to_json(c.bound()));
    m.insert("violation".into(), number_to_json(c.violation()));
    v
}

pub fn parse_certificate<T: Scalar>(v: &Value) -> Result<Certificate<T>> {
    let table = parse_table_value(v)?;
    let bound = Number::parse(v.get("bound").unwrap_or(&Value::Null))?;
    let violation = Number::parse(v.get("violation").unwrap_or(&Value::Null))?;
    Certificate::new(table.scenario, table.values.iter().map(T::from_rational).collect(), bound.get(), violation.get())
}

/// Pretty JSON with a trailing newline.
pub fn to_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable value");
    s.push('\n');
    s
}

/// Bounds file: `{"bounds": [{"eta_min": .., "eta_max": ..}, ...]}`, one per party.
pub fn parse_bounds(text: &str) -> Result<(Vec<(Number, Number)>, bool)> {
    let v = from_str(text)?;
    let list = v
        .get("bounds")
        .and_then(Value::as_array)
        .ok_or_else(|| LdlError::Parse("bounds file needs a \"bounds\" array".into()))?;
    let mut exact = true;
    let mut out = Vec::with_capacity(list.len());
    for b in list {
        let lo = Number::parse(b.get("eta_min").unwrap_or(&Value::Null))?;
        let hi = Number::parse(b.get("eta_max").unwrap_or(&Value::Null))?;
        exact &= lo.exact && hi.exact;
        out.push((lo, hi));
    }
    Ok((out, exact))
}

pub fn bounds_from_numbers<T: Scalar>(nums: &[(Number, Number)]) -> Result<DetectionBounds<T>> {
    DetectionBounds::new(nums.iter().map(|(a, b)| (a.get(), b.get())).collect())
}

pub fn bounds_to_value<T: Scalar>(b: &DetectionBounds<T>) -> Value {
    let list: Vec<Value> = b
        .per_party()
        .iter()
        .map(|(lo, hi)| json!({ "eta_min": number_to_json(lo), "eta_max": number_to_json(hi) }))
        .collect();
    json!({ "bounds": list })
}

/// Efficiencies file: `{"effs": [{"x": [1, 1], "eta": ..}, ...]}` covering
/// every input tuple, or `{"uniform": ..}`.
pub fn parse_effs(text: &str, scenario: &Scenario) -> Result<(Vec<Number>, bool)> {
    let v = from_str(text)?;
    if let Some(u) = v.get("uniform") {
        let n = Number::parse(u)?;
        let exact = n.exact;
        return Ok((vec![n; scenario.input_count()], exact));
    }
    let list = v
        .get("effs")
        .and_then(Value::as_array)
        .ok_or_else(|| LdlError::Parse("efficiency file needs \"effs\" or \"uniform\"".into()))?;
    let mut slots: Vec<Option<Number>> = vec![None; scenario.input_count()];
    for e in list {
        let x = to_zero_based(&parse_usize_list(e.get("x").unwrap_or(&Value::Null), "x")?, "input")?;
        let i = scenario.input_index(&x)?;
        if slots[i].is_some() {
            return Err(LdlError::Parse(format!("duplicate efficiency for input {:?}", e.get("x"))));
        }
        slots[i] = Some(Number::parse(e.get("eta").unwrap_or(&Value::Null))?);
    }
    let nums: Vec<Number> = slots
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            s.ok_or_else(|| {
                LdlError::Parse(format!(
                    "missing efficiency for input {:?}",
                    crate::model::one_based(&scenario.input_tuple(i))
                ))
            })
        })
        .collect::<Result<_>>()?;
    let exact = nums.iter().all(|n| n.exact);
    Ok((nums, exact))
}

pub fn effs_from_numbers<T: Scalar>(scenario: &Scenario, nums: &[Number]) -> Result<ObservedEfficiencies<T>> {
    ObservedEfficiencies::new(scenario, nums.iter().map(Number::get).collect())
}

pub fn effs_to_value<T: Scalar>(scenario: &Scenario, e: &ObservedEfficiencies<T>) -> Value {
    let list: Vec<Value> = e
        .per_input()
        .iter()
        .enumerate()
        .map(|(i, eta)| json!({ "x": crate::model::one_based(&scenario.input_tuple(i)), "eta": number_to_json(eta) }))
        .collect();
    json!({ "effs": list })
}

pub fn membership_to_value<T: Scalar>(m: &Membership<T>, problem: &MembershipProblem<T>) -> Value {
    match m {
        Membership::Member { weights, residual } => {
            let witness: Vec<Value> = weights
                .iter()
                .enumerate()
                .filter(|(_, w)| !w.is_zero())
                .map(|(i, w)| json!({ "vertex": i + 1, "weight": number_to_json(w), "strategy": vertex_label(&problem.vertices()[i]) }))
                .collect();
            json!({ "member": true, "residual": number_to_json(residual), "witness": witness })
        }
        Membership::NonMember(c) => json!({ "member": false, "certificate": certificate_to_value(c) }),
    }
}

/// Compact description of a product vertex: per party, per input,
/// `[outcome (1-based), "min" | "max"]`.
pub fn vertex_label(v: &crate::vertices::ProductVertex) -> Value {
    use crate::vertices::EtaChoice;
    Value::Array(
        v.parts()
            .iter()
            .map(|p| {
                Value::Array(
                    p.choices()
                        .iter()
                        .map(|(a, e)| json!([a + 1, if *e == EtaChoice::Min { "min" } else { "max" }]))
                        .collect(),
                )
            })
            .collect(),
    )
}

pub fn check_to_value(c: &CertificateCheck) -> Value {
    json!({
        "passed": c.passed,
        "target_margin": c.target_margin,
        "worst_sample_margin": c.worst_sample_margin,
        "samples": c.samples,
        "no_feasible_sample": c.no_feasible_sample,
    })
}

pub fn verdict_to_value(v: &Verdict) -> Value {
    let worst = match &v.worst {
        None => Value::Null,
        Some(Offense::Negative { x, a, value }) => json!({
            "type": "negative",
            "x": x,
            "a": a.iter().map(|o| o.map(|k| json!(k)).unwrap_or(json!(NULL_OUTCOME))).collect::<Vec<_>>(),
            "value": value,
        }),
        Some(Offense::Normalization { x, sum }) => json!({ "type": "normalization", "x": x, "sum": sum }),
    };
    json!({ "valid": v.valid, "worst": worst })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct StateJson {
    amplitudes: Vec<[f64; 2]>,
}

/// `{"amplitudes": [[re, im], x4]}` in the basis `|00>, |01>, |10>, |11>`.
pub fn parse_state(text: &str) -> Result<TwoQubitState> {
    let s: StateJson = serde_json::from_str(text).map_err(|e| LdlError::Parse(e.to_string()))?;
    let amps: [[f64; 2]; 4] =
        s.amplitudes.try_into().map_err(|_| LdlError::Parse("a two-qubit state needs exactly 4 amplitudes".into()))?;
    TwoQubitState::new(amps.map(|[re, im]| num_complex::Complex64::new(re, im)))
}

pub fn state_to_value(s: &TwoQubitState) -> Value {
    json!({ "amplitudes": s.amplitudes().iter().map(|a| [a.re, a.im]).collect::<Vec<_>>() })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct AnglesJson {
    theta: f64,
    phi: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SettingsJson {
    alice: Vec<AnglesJson>,
    bob: Vec<AnglesJson>,
}

/// `{"alice": [{"theta": .., "phi": ..}, x2], "bob": [...]}`.
pub fn parse_settings(text: &str) -> Result<(ProjectiveSetting, ProjectiveSetting)> {
    let s: SettingsJson = serde_json::from_str(text).map_err(|e| LdlError::Parse(e.to_string()))?;
    let conv = |v: &[AnglesJson], who: &str| -> Result<ProjectiveSetting> {
        if v.len() != 2 {
            return Err(LdlError::Parse(format!("{who} needs exactly two measurements")));
        }
        Ok(ProjectiveSetting::new(BlochAngles::new(v[0].theta, v[0].phi)?, BlochAngles::new(v[1].theta, v[1].phi)?))
    };
    Ok((conv(&s.alice, "alice")?, conv(&s.bob, "bob")?))
}

pub fn settings_to_value(a: &ProjectiveSetting, b: &ProjectiveSetting) -> Value {
    let side = |s: &ProjectiveSetting| {
        s.per_input.iter().map(|m| json!({ "theta": m.theta, "phi": m.phi })).collect::<Vec<_>>()
    };
    json!({ "alice": side(a), "bob": side(b) })
}

/// `{"distribution": [[P(1|1), P(2|1), ..], [P(1|2), ..], ..]}`.
pub fn parse_local(text: &str) -> Result<(Vec<Vec<Number>>, bool)> {
    let v = from_str(text)?;
    let rows = v
        .get("distribution")
        .and_then(Value::as_array)
        .ok_or_else(|| LdlError::Parse("local distribution file needs a \"distribution\" array".into()))?;
    let mut exact = true;
    let mut out = Vec::with_capacity(rows.len());
    for r in rows {
        let row = r.as_array().ok_or_else(|| LdlError::Parse("distribution rows must be arrays".into()))?;
        let nums: Vec<Number> = row.iter().map(Number::parse).collect::<Result<_>>()?;
        exact &= nums.iter().all(|n| n.exact);
        out.push(nums);
    }
    Ok((out, exact))
}

pub fn local_from_numbers<T: Scalar>(rows: &[Vec<Number>]) -> Result<LocalDistribution<T>> {
    LocalDistribution::new(rows.iter().map(|r| r.iter().map(Number::get).collect()).collect())
}
