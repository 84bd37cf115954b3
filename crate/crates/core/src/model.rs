//! Scenarios, correlation tables, detection bounds and observed efficiencies.
//!
//! Indices are 0-based everywhere in this module. Input tuples and outcome
//! tuples are flattened in mixed radix with party 0 as the most significant
//! digit. In a [`FullCorrelation`] the non-detection symbol of party `i`
//! occupies local outcome index `m_i`, i.e. it sorts after every real outcome.

use crate::error::{LdlError, Result};
use crate::scalar::Scalar;

/// A single party's outcome in a full table; `None` is the non-detection symbol.
pub type Outcome = Option<usize>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Scenario {
    inputs: Vec<usize>,
    outcomes: Vec<usize>,
}

impl Scenario {
    pub fn new(inputs: Vec<usize>, outcomes: Vec<usize>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(LdlError::InvalidInput("scenario needs at least one party".into()));
        }
        if inputs.len() != outcomes.len() {
            return Err(LdlError::InvalidInput(format!(
                "{} input alphabets but {} outcome alphabets",
                inputs.len(),
                outcomes.len()
            )));
        }
        if inputs.iter().chain(&outcomes).any(|&k| k == 0) {
            return Err(LdlError::InvalidInput("alphabet sizes must be at least 1".into()));
        }
        Ok(Scenario { inputs, outcomes })
    }

    /// Two parties, two inputs, two outcomes each.
    pub fn chsh() -> Self {
        Scenario { inputs: vec![2, 2], outcomes: vec![2, 2] }
    }

    pub fn n_parties(&self) -> usize {
        self.inputs.len()
    }

    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }

    pub fn outcomes(&self) -> &[usize] {
        &self.outcomes
    }

    pub fn input_count(&self) -> usize {
        self.inputs.iter().product()
    }

    /// Number of outcome tuples with every party detecting.
    pub fn detected_count(&self) -> usize {
        self.outcomes.iter().product()
    }

    /// Number of outcome tuples including the non-detection symbol.
    pub fn full_count(&self) -> usize {
        self.outcomes.iter().map(|m| m + 1).product()
    }

    pub fn is_binary_pair(&self) -> bool {
        self.inputs == [2, 2] && self.outcomes == [2, 2]
    }

    pub fn input_index(&self, x: &[usize]) -> Result<usize> {
        flatten(x, &self.inputs).ok_or_else(|| LdlError::InvalidInput(format!("input tuple {x:?} out of range")))
    }

    pub fn input_tuple(&self, index: usize) -> Vec<usize> {
        unflatten(index, &self.inputs)
    }

    pub fn input_tuples(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.input_count()).map(move |i| self.input_tuple(i))
    }

    pub fn detected_index(&self, a: &[usize]) -> Result<usize> {
        flatten(a, &self.outcomes).ok_or_else(|| LdlError::InvalidInput(format!("outcome tuple {a:?} out of range")))
    }

    pub fn detected_tuple(&self, index: usize) -> Vec<usize> {
        unflatten(index, &self.outcomes)
    }

    fn full_radix(&self) -> Vec<usize> {
        self.outcomes.iter().map(|m| m + 1).collect()
    }

    pub fn full_index(&self, a: &[Outcome]) -> Result<usize> {
        let raw: Vec<usize> = a
            .iter()
            .zip(&self.outcomes)
            .map(|(o, &m)| match o {
                Some(k) if *k < m => Some(*k),
                Some(_) => None,
                None => Some(m),
            })
            .collect::<Option<_>>()
            .ok_or_else(|| LdlError::InvalidInput(format!("outcome tuple {a:?} out of range")))?;
        flatten(&raw, &self.full_radix())
            .ok_or_else(|| LdlError::InvalidInput(format!("outcome tuple {a:?} out of range")))
    }

    pub fn full_tuple(&self, index: usize) -> Vec<Outcome> {
        unflatten(index, &self.full_radix())
            .into_iter()
            .zip(&self.outcomes)
            .map(|(k, &m)| if k == m { None } else { Some(k) })
            .collect()
    }

    /// Full-table index of an all-detected outcome tuple.
    pub fn detected_to_full(&self, detected: usize) -> usize {
        let a: Vec<Outcome> = self.detected_tuple(detected).into_iter().map(Some).collect();
        self.full_index(&a).expect("detected tuple is always in range")
    }
}

fn flatten(digits: &[usize], radix: &[usize]) -> Option<usize> {
    if digits.len() != radix.len() {
        return None;
    }
    let mut idx = 0;
    for (&d, &r) in digits.iter().zip(radix) {
        if d >= r {
            return None;
        }
        idx = idx * r + d;
    }
    Some(idx)
}

fn unflatten(mut index: usize, radix: &[usize]) -> Vec<usize> {
    let mut out = vec![0; radix.len()];
    for (slot, &r) in out.iter_mut().zip(radix).rev() {
        *slot = index % r;
        index /= r;
    }
    out
}

/// Per-party bounds on the per-hidden-state detection probability.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionBounds<T> {
    per_party: Vec<(T, T)>,
}

impl<T: Scalar> DetectionBounds<T> {
    pub fn new(per_party: Vec<(T, T)>) -> Result<Self> {
        for (i, (lo, hi)) in per_party.iter().enumerate() {
            if !(lo >= &T::zero() && lo <= hi && hi <= &T::one()) {
                return Err(LdlError::InvalidInput(format!(
                    "party {} bounds must satisfy 0 <= eta_min <= eta_max <= 1, got ({lo}, {hi})",
                    i + 1
                )));
            }
        }
        Ok(DetectionBounds { per_party })
    }

    /// Same `(eta_min, eta_max)` for every party.
    pub fn symmetric(n_parties: usize, eta_min: T, eta_max: T) -> Result<Self> {
        Self::new(vec![(eta_min, eta_max); n_parties])
    }

    pub fn per_party(&self) -> &[(T, T)] {
        &self.per_party
    }

    pub fn n_parties(&self) -> usize {
        self.per_party.len()
    }

    pub fn eta_min(&self, party: usize) -> &T {
        &self.per_party[party].0
    }

    pub fn eta_max(&self, party: usize) -> &T {
        &self.per_party[party].1
    }

    pub fn is_degenerate(&self, party: usize) -> bool {
        self.per_party[party].0 == self.per_party[party].1
    }

    /// Lower bound on the all-parties detection probability per hidden state.
    pub fn joint_min(&self) -> T {
        self.per_party.iter().fold(T::one(), |acc, (lo, _)| acc * lo.clone())
    }

    pub fn joint_max(&self) -> T {
        self.per_party.iter().fold(T::one(), |acc, (_, hi)| acc * hi.clone())
    }

    pub fn check_scenario(&self, scenario: &Scenario) -> Result<()> {
        if self.per_party.len() != scenario.n_parties() {
            return Err(LdlError::ScenarioMismatch(format!(
                "bounds cover {} parties, scenario has {}",
                self.per_party.len(),
                scenario.n_parties()
            )));
        }
        Ok(())
    }

    pub fn convert<U: Scalar>(&self) -> DetectionBounds<U> {
        DetectionBounds {
            per_party: self
                .per_party
                .iter()
                .map(|(a, b)| (U::from_rational(&a.to_rational()), U::from_rational(&b.to_rational())))
                .collect(),
        }
    }
}

/// Observed all-detected probability per input tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedEfficiencies<T> {
    per_input: Vec<T>,
}

impl<T: Scalar> ObservedEfficiencies<T> {
    pub fn new(scenario: &Scenario, per_input: Vec<T>) -> Result<Self> {
        if per_input.len() != scenario.input_count() {
            return Err(LdlError::ScenarioMismatch(format!(
                "{} efficiencies for {} input tuples",
                per_input.len(),
                scenario.input_count()
            )));
        }
        for (i, eta) in per_input.iter().enumerate() {
            if eta <= &T::zero() {
                return Err(LdlError::ZeroEfficiency { x: one_based(&scenario.input_tuple(i)) });
            }
            if eta > &T::one() {
                return Err(LdlError::InvalidInput(format!("efficiency {eta} exceeds 1")));
            }
        }
        Ok(ObservedEfficiencies { per_input })
    }

    pub fn uniform(scenario: &Scenario, eta: T) -> Result<Self> {
        Self::new(scenario, vec![eta; scenario.input_count()])
    }

    pub fn per_input(&self) -> &[T] {
        &self.per_input
    }

    pub fn get(&self, x_index: usize) -> &T {
        &self.per_input[x_index]
    }

    pub fn is_uniform(&self) -> bool {
        self.per_input.windows(2).all(|w| w[0] == w[1])
    }

    /// Checks `prod eta_min_i <= eta_x <= prod eta_max_i` for every input.
    pub fn check_against(&self, scenario: &Scenario, bounds: &DetectionBounds<T>) -> Result<()> {
        let lo = bounds.joint_min();
        let hi = bounds.joint_max();
        for (i, eta) in self.per_input.iter().enumerate() {
            if eta < &lo || eta > &hi {
                return Err(LdlError::InconsistentEfficiencies {
                    x: one_based(&scenario.input_tuple(i)),
                    eta: eta.to_string(),
                    lo: lo.to_string(),
                    hi: hi.to_string(),
                });
            }
        }
        Ok(())
    }

    pub fn convert<U: Scalar>(&self) -> ObservedEfficiencies<U> {
        ObservedEfficiencies { per_input: self.per_input.iter().map(|e| U::from_rational(&e.to_rational())).collect() }
    }
}

pub(crate) fn one_based(t: &[usize]) -> Vec<usize> {
    t.iter().map(|k| k + 1).collect()
}

/// `P(a|x)` with the non-detection symbol allowed in every slot.
#[derive(Debug, Clone, PartialEq)]
pub struct FullCorrelation<T> {
    scenario: Scenario,
    table: Vec<T>,
}

/// `P(a|x)` conditioned on every party detecting.
#[derive(Debug, Clone, PartialEq)]
pub struct PostselectedCorrelation<T> {
    scenario: Scenario,
    table: Vec<T>,
}

impl<T: Scalar> FullCorrelation<T> {
    /// `table` is indexed `x_index * full_count + a_index`.
    pub fn new(scenario: Scenario, table: Vec<T>) -> Result<Self> {
        let expected = scenario.input_count() * scenario.full_count();
        if table.len() != expected {
            return Err(LdlError::ScenarioMismatch(format!("table has {} entries, expected {expected}", table.len())));
        }
        Ok(FullCorrelation { scenario, table })
    }

    pub fn from_fn(scenario: Scenario, mut f: impl FnMut(&[usize], &[Outcome]) -> T) -> Self {
        let mut table = Vec::with_capacity(scenario.input_count() * scenario.full_count());
        for xi in 0..scenario.input_count() {
            let x = scenario.input_tuple(xi);
            for ai in 0..scenario.full_count() {
                table.push(f(&x, &scenario.full_tuple(ai)));
            }
        }
        FullCorrelation { scenario, table }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn table(&self) -> &[T] {
        &self.table
    }

    pub fn at(&self, x_index: usize, a_index: usize) -> &T {
        &self.table[x_index * self.scenario.full_count() + a_index]
    }

    pub fn get(&self, x: &[usize], a: &[Outcome]) -> Result<&T> {
        Ok(self.at(self.scenario.input_index(x)?, self.scenario.full_index(a)?))
    }

    pub fn row(&self, x_index: usize) -> &[T] {
        let w = self.scenario.full_count();
        &self.table[x_index * w..(x_index + 1) * w]
    }

    /// Total probability that every party detects, at input `x_index`.
    pub fn detected_mass(&self, x_index: usize) -> T {
        (0..self.scenario.detected_count())
            .map(|d| self.at(x_index, self.scenario.detected_to_full(d)).clone())
            .fold(T::zero(), |acc, v| acc + v)
    }

    pub fn validate(&self, tol: f64) -> Verdict {
        validate_rows(&self.scenario, &self.table, self.scenario.full_count(), tol, |i| {
            self.scenario.full_tuple(i).iter().map(|o| o.map(|k| k + 1)).collect()
        })
    }

    pub fn convert<U: Scalar>(&self) -> FullCorrelation<U> {
        FullCorrelation {
            scenario: self.scenario.clone(),
            table: self.table.iter().map(|v| U::from_rational(&v.to_rational())).collect(),
        }
    }

    /// Convex combination `sum_k weights[k] * parts[k]`.
    pub fn mixture(parts: &[(T, &FullCorrelation<T>)]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| LdlError::InvalidInput("empty mixture".into()))?.1;
        let mut table = vec![T::zero(); first.table.len()];
        for (w, p) in parts {
            if p.scenario != first.scenario {
                return Err(LdlError::ScenarioMismatch("mixture of different scenarios".into()));
            }
            for (acc, v) in table.iter_mut().zip(&p.table) {
                *acc = acc.clone() + w.clone() * v.clone();
            }
        }
        Ok(FullCorrelation { scenario: first.scenario.clone(), table })
    }
}

impl<T: Scalar> PostselectedCorrelation<T> {
    /// `table` is indexed `x_index * detected_count + a_index`.
    pub fn new(scenario: Scenario, table: Vec<T>) -> Result<Self> {
        let expected = scenario.input_count() * scenario.detected_count();
        if table.len() != expected {
            return Err(LdlError::ScenarioMismatch(format!("table has {} entries, expected {expected}", table.len())));
        }
        Ok(PostselectedCorrelation { scenario, table })
    }

    pub fn from_fn(scenario: Scenario, mut f: impl FnMut(&[usize], &[usize]) -> T) -> Self {
        let mut table = Vec::with_capacity(scenario.input_count() * scenario.detected_count());
        for xi in 0..scenario.input_count() {
            let x = scenario.input_tuple(xi);
            for ai in 0..scenario.detected_count() {
                table.push(f(&x, &scenario.detected_tuple(ai)));
            }
        }
        PostselectedCorrelation { scenario, table }
    }

    /// `1 / prod m_i` everywhere.
    pub fn uniform(scenario: Scenario) -> Self {
        let v = T::one() / T::from_usize(scenario.detected_count()).expect("count fits");
        Self::from_fn(scenario, |_, _| v.clone())
    }

    /// Deterministic local point: `responses[i][x]` is party `i`'s outcome at input `x`.
    pub fn deterministic(scenario: Scenario, responses: &[Vec<usize>]) -> Result<Self> {
        let ok = responses.len() == scenario.n_parties()
            && responses
                .iter()
                .enumerate()
                .all(|(i, r)| r.len() == scenario.inputs()[i] && r.iter().all(|&a| a < scenario.outcomes()[i]));
        if !ok {
            return Err(LdlError::InvalidInput("response table does not fit the scenario".into()));
        }
        Ok(Self::from_fn(scenario, |x, a| {
            if a.iter().enumerate().all(|(i, &ai)| responses[i][x[i]] == ai) {
                T::one()
            } else {
                T::zero()
            }
        }))
    }

    /// Popescu-Rohrlich box: outcomes satisfy `a xor b = x and y`, each with weight 1/2.
    pub fn pr_box() -> Self {
        let half = T::one() / (T::one() + T::one());
        Self::from_fn(Scenario::chsh(), |x, a| if (a[0] ^ a[1]) == (x[0] & x[1]) { half.clone() } else { T::zero() })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn table(&self) -> &[T] {
        &self.table
    }

    pub fn at(&self, x_index: usize, a_index: usize) -> &T {
        &self.table[x_index * self.scenario.detected_count() + a_index]
    }

    pub fn get(&self, x: &[usize], a: &[usize]) -> Result<&T> {
        Ok(self.at(self.scenario.input_index(x)?, self.scenario.detected_index(a)?))
    }

    pub fn row(&self, x_index: usize) -> &[T] {
        let w = self.scenario.detected_count();
        &self.table[x_index * w..(x_index + 1) * w]
    }

    pub fn validate(&self, tol: f64) -> Verdict {
        validate_rows(&self.scenario, &self.table, self.scenario.detected_count(), tol, |i| {
            self.scenario.detected_tuple(i).iter().map(|k| Some(k + 1)).collect()
        })
    }

    pub fn convert<U: Scalar>(&self) -> PostselectedCorrelation<U> {
        PostselectedCorrelation {
            scenario: self.scenario.clone(),
            table: self.table.iter().map(|v| U::from_rational(&v.to_rational())).collect(),
        }
    }

    /// Re-attaches non-detection mass `1 - eta_x`, all of it on the
    /// everyone-missed outcome. Inverse of [`postselect`] on the detected block.
    pub fn to_full(&self, effs: &ObservedEfficiencies<T>) -> Result<FullCorrelation<T>> {
        if effs.per_input().len() != self.scenario.input_count() {
            return Err(LdlError::ScenarioMismatch("efficiencies do not cover the scenario".into()));
        }
        let s = &self.scenario;
        let all_missed = s.full_index(&vec![None; s.n_parties()])?;
        let mut table = vec![T::zero(); s.input_count() * s.full_count()];
        for xi in 0..s.input_count() {
            let eta = effs.get(xi);
            for d in 0..s.detected_count() {
                table[xi * s.full_count() + s.detected_to_full(d)] = eta.clone() * self.at(xi, d).clone();
            }
            table[xi * s.full_count() + all_missed] = T::one() - eta.clone();
        }
        FullCorrelation::new(s.clone(), table)
    }
}

/// Divides the all-detected block of `full` by its mass, per input tuple.
pub fn postselect<T: Scalar>(
    full: &FullCorrelation<T>,
) -> Result<(PostselectedCorrelation<T>, ObservedEfficiencies<T>)> {
    let s = full.scenario();
    let mut table = Vec::with_capacity(s.input_count() * s.detected_count());
    let mut effs = Vec::with_capacity(s.input_count());
    for xi in 0..s.input_count() {
        let eta = full.detected_mass(xi);
        if eta <= T::zero() {
            return Err(LdlError::ZeroEfficiency { x: one_based(&s.input_tuple(xi)) });
        }
        for d in 0..s.detected_count() {
            table.push(full.at(xi, s.detected_to_full(d)).clone() / eta.clone());
        }
        effs.push(eta);
    }
    Ok((PostselectedCorrelation { scenario: s.clone(), table }, ObservedEfficiencies { per_input: effs }))
}

/// Worst problem found by [`FullCorrelation::validate`] or
/// [`PostselectedCorrelation::validate`]. Outcome labels are 1-based with
/// `None` for the non-detection symbol.
#[derive(Debug, Clone, PartialEq)]
pub enum Offense {
    Negative { x: Vec<usize>, a: Vec<Option<usize>>, value: f64 },
    Normalization { x: Vec<usize>, sum: f64 },
}

impl Offense {
    pub fn magnitude(&self) -> f64 {
        match self {
            Offense::Negative { value, .. } => -value,
            Offense::Normalization { sum, .. } => (sum - 1.0).abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub valid: bool,
    pub worst: Option<Offense>,
}

fn validate_rows<T: Scalar>(
    scenario: &Scenario,
    table: &[T],
    width: usize,
    tol: f64,
    label: impl Fn(usize) -> Vec<Option<usize>>,
) -> Verdict {
    let mut worst: Option<Offense> = None;
    let mut consider = |o: Offense| {
        if worst.as_ref().is_none_or(|w| o.magnitude() > w.magnitude()) {
            worst = Some(o);
        }
    };
    for xi in 0..scenario.input_count() {
        let row = &table[xi * width..(xi + 1) * width];
        let x = one_based(&scenario.input_tuple(xi));
        for (ai, v) in row.iter().enumerate() {
            if v < &T::zero() {
                consider(Offense::Negative { x: x.clone(), a: label(ai), value: v.to_f64_lossy() });
            }
        }
        let sum = row.iter().cloned().fold(T::zero(), |acc, v| acc + v);
        let dev = (sum.clone() - T::one()).abs();
        if dev > T::zero() {
            consider(Offense::Normalization { x, sum: sum.to_f64_lossy() });
        }
    }
    let valid = worst.as_ref().is_none_or(|w| w.magnitude() <= tol);
    Verdict { valid, worst }
}
