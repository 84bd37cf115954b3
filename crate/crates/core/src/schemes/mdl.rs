//! Mapping limited-detection parameters onto measurement-dependent locality.
//!
//! A model whose hidden state may bias the joint input distribution within
//! `l <= P(xy|lambda) <= h` and whose detection probabilities obey
//! `(eta_min, eta_max)` bounds can be simulated, after postselection, by a
//! measurement-dependent model alone. With per-party bounds the joint
//! detection ratio is `(eta_min/eta_max)^2`; when the bounds already constrain
//! the joint detection probability it is `eta_min/eta_max`. Both readings are
//! exposed through the `joint` flag.

use crate::error::{LdlError, Result};
use crate::model::DetectionBounds;
use crate::scalar::Scalar;
use crate::vertices::ProductVertex;

/// Measurement-dependence bounds for `n_inputs` inputs per party.
#[derive(Debug, Clone, PartialEq)]
pub struct MdlParams<T> {
    l: T,
    h: T,
    n_inputs: usize,
}

impl<T: Scalar> MdlParams<T> {
    /// Requires `0 <= l <= 1/N^2 <= h <= 1`.
    pub fn new(l: T, h: T, n_inputs: usize) -> Result<Self> {
        if n_inputs == 0 {
            return Err(LdlError::InvalidInput("need at least one input".into()));
        }
        let n = T::from_usize(n_inputs).expect("fits");
        let uniform = T::one() / (n.clone() * n);
        if !(l >= T::zero() && l <= uniform && uniform <= h && h <= T::one()) {
            return Err(LdlError::InvalidInput(format!(
                "need 0 <= l <= 1/N^2 <= h <= 1 with N = {n_inputs}, got l = {l}, h = {h}"
            )));
        }
        Ok(MdlParams { l, h, n_inputs })
    }

    pub fn l(&self) -> &T {
        &self.l
    }

    pub fn h(&self) -> &T {
        &self.h
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdlMapping<T> {
    pub params: MdlParams<T>,
    /// True when the mapped `h` exceeded 1 and was clamped.
    pub clamped: bool,
}

fn ratio_of<T: Scalar>(eta_min: &T, eta_max: &T, joint: bool) -> Result<T> {
    if eta_min <= &T::zero() {
        return Err(LdlError::ZeroEtaMin);
    }
    if eta_min > eta_max || eta_max > &T::one() {
        return Err(LdlError::InvalidInput(format!("need 0 < eta_min <= eta_max <= 1, got ({eta_min}, {eta_max})")));
    }
    let r = eta_min.clone() / eta_max.clone();
    Ok(if joint { r } else { r.clone() * r })
}

/// `l' = rho * l`, `h' = h / rho` with `rho = eta_min/eta_max` (joint) or its
/// square (per-party); `h'` is clamped to 1 and the clamp reported.
pub fn ldl_to_mdl<T: Scalar>(mdl: &MdlParams<T>, eta_min: &T, eta_max: &T, joint: bool) -> Result<MdlMapping<T>> {
    let rho = ratio_of(eta_min, eta_max, joint)?;
    let l = rho.clone() * mdl.l.clone();
    let raw_h = mdl.h.clone() / rho;
    let clamped = raw_h > T::one();
    let h = if clamped { T::one() } else { raw_h };
    Ok(MdlMapping { params: MdlParams { l, h, n_inputs: mdl.n_inputs }, clamped })
}

/// `(eta_min/eta_max)^2 >= N^2 l` and `(eta_max/eta_min)^2 <= N^2 h`.
pub fn mdl_nonlocality_condition<T: Scalar>(eta_min: &T, eta_max: &T, n_inputs: usize, l: &T, h: &T) -> Result<bool> {
    let r2 = ratio_of(eta_min, eta_max, false)?;
    let n = T::from_usize(n_inputs).expect("fits");
    let n2 = n.clone() * n;
    Ok(r2 >= n2.clone() * l.clone() && T::one() / r2 <= n2 * h.clone())
}

/// `P(xy | all detect, lambda)` for a deterministic-outcome vertex `v` and
/// hidden-state input distribution `input_dist` (row-major over input tuples).
pub fn postselected_input_distribution<T: Scalar>(
    v: &ProductVertex,
    bounds: &DetectionBounds<T>,
    inputs: &[usize],
    input_dist: &[T],
) -> Result<Vec<T>> {
    let count: usize = inputs.iter().product();
    if input_dist.len() != count || v.parts().len() != inputs.len() {
        return Err(LdlError::ScenarioMismatch("input distribution does not fit the vertex".into()));
    }
    let scenario = crate::model::Scenario::new(inputs.to_vec(), vec![1; inputs.len()])?;
    let weighted: Vec<T> =
        input_dist.iter().enumerate().map(|(i, p)| p.clone() * v.detection(&scenario.input_tuple(i), bounds)).collect();
    let total = weighted.iter().cloned().fold(T::zero(), |a, b| a + b);
    if total <= T::zero() {
        return Err(LdlError::ZeroEfficiency { x: Vec::new() });
    }
    Ok(weighted.into_iter().map(|w| w / total.clone()).collect())
}

/// `[l * jmin / jmax, h * jmax / jmin]` with joint detection bounds
/// `jmin = prod eta_min_i`, `jmax = prod eta_max_i`.
pub fn joint_mdl_interval<T: Scalar>(l: &T, h: &T, bounds: &DetectionBounds<T>) -> Result<(T, T)> {
    let (jmin, jmax) = (bounds.joint_min(), bounds.joint_max());
    if jmin <= T::zero() {
        return Err(LdlError::ZeroEtaMin);
    }
    Ok((l.clone() * jmin.clone() / jmax.clone(), h.clone() * jmax / jmin))
}
