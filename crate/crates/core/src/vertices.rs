//! Extremal limited-detection strategies.
//!
//! A single-party vertex fixes, for every input, one outcome that fires with
//! probability `eta_min` or `eta_max` (non-detection otherwise). Multi-party
//! vertices are products of single-party ones.

use crate::error::{LdlError, Result};
use crate::model::{DetectionBounds, FullCorrelation, Outcome, Scenario};
use crate::scalar::Scalar;

/// Default cap on the number of enumerated vertices.
pub const DEFAULT_VERTEX_CAP: u128 = 10_000_000;

/// Which end of the detection interval a vertex uses at one input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EtaChoice {
    Min,
    Max,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SinglePartyVertex {
    /// `(outcome, efficiency choice)` per input, 0-based outcomes.
    choices: Vec<(usize, EtaChoice)>,
}

impl SinglePartyVertex {
    pub fn new(choices: Vec<(usize, EtaChoice)>) -> Self {
        SinglePartyVertex { choices }
    }

    pub fn choices(&self) -> &[(usize, EtaChoice)] {
        &self.choices
    }

    /// Detection probability at input `x`.
    pub fn efficiency<T: Scalar>(&self, x: usize, bounds: &DetectionBounds<T>, party: usize) -> T {
        match self.choices[x].1 {
            EtaChoice::Min => bounds.eta_min(party).clone(),
            EtaChoice::Max => bounds.eta_max(party).clone(),
        }
    }

    /// `V(a|x)`; `None` is the non-detection symbol.
    pub fn prob<T: Scalar>(&self, x: usize, a: Outcome, bounds: &DetectionBounds<T>, party: usize) -> T {
        let eta = self.efficiency(x, bounds, party);
        match a {
            None => T::one() - eta,
            Some(k) if k == self.choices[x].0 => eta,
            Some(_) => T::zero(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProductVertex {
    parts: Vec<SinglePartyVertex>,
}

impl ProductVertex {
    pub fn new(parts: Vec<SinglePartyVertex>) -> Self {
        ProductVertex { parts }
    }

    pub fn parts(&self) -> &[SinglePartyVertex] {
        &self.parts
    }

    pub fn prob<T: Scalar>(&self, x: &[usize], a: &[Outcome], bounds: &DetectionBounds<T>) -> T {
        self.parts.iter().enumerate().fold(T::one(), |acc, (i, part)| acc * part.prob(x[i], a[i], bounds, i))
    }

    /// Probability that every party detects at input tuple `x`.
    pub fn detection<T: Scalar>(&self, x: &[usize], bounds: &DetectionBounds<T>) -> T {
        self.parts.iter().enumerate().fold(T::one(), |acc, (i, part)| acc * part.efficiency(x[i], bounds, i))
    }
}

/// `(m_i * k_i)^{n_i}` with `k_i = 1` for degenerate bounds, `None` on overflow.
pub fn party_vertex_count<T: Scalar>(scenario: &Scenario, party: usize, bounds: &DetectionBounds<T>) -> Option<u128> {
    let k = if bounds.is_degenerate(party) { 1 } else { 2 };
    let per_input = (scenario.outcomes()[party] as u128).checked_mul(k)?;
    per_input.checked_pow(u32::try_from(scenario.inputs()[party]).ok()?)
}

/// Product of the per-party counts, `None` on overflow.
pub fn ldl_vertex_count<T: Scalar>(scenario: &Scenario, bounds: &DetectionBounds<T>) -> Option<u128> {
    (0..scenario.n_parties()).try_fold(1u128, |acc, i| acc.checked_mul(party_vertex_count(scenario, i, bounds)?))
}

fn check_cap(count: Option<u128>, cap: u128) -> Result<usize> {
    match count {
        Some(c) if c <= cap => usize::try_from(c).map_err(|_| LdlError::SizeOverflow { count: c, cap }),
        Some(c) => Err(LdlError::SizeOverflow { count: c, cap }),
        None => Err(LdlError::SizeOverflow { count: u128::MAX, cap }),
    }
}

/// All single-party vertices of `party`, in lexicographic order of
/// `(input, outcome, eta choice)` with input 0 most significant and
/// `eta_min` before `eta_max`.
pub fn enumerate_party_vertices<T: Scalar>(
    scenario: &Scenario,
    party: usize,
    bounds: &DetectionBounds<T>,
    cap: u128,
) -> Result<Vec<SinglePartyVertex>> {
    if party >= scenario.n_parties() {
        return Err(LdlError::InvalidInput(format!("party index {party} out of range")));
    }
    bounds.check_scenario(scenario)?;
    let total = check_cap(party_vertex_count(scenario, party, bounds), cap)?;

    let choices: Vec<(usize, EtaChoice)> = (0..scenario.outcomes()[party])
        .flat_map(|a| {
            let etas: &[EtaChoice] =
                if bounds.is_degenerate(party) { &[EtaChoice::Min] } else { &[EtaChoice::Min, EtaChoice::Max] };
            etas.iter().map(move |&e| (a, e))
        })
        .collect();
    let n = scenario.inputs()[party];
    let k = choices.len();

    let mut out = Vec::with_capacity(total);
    let mut digits = vec![0usize; n];
    for _ in 0..total {
        out.push(SinglePartyVertex::new(digits.iter().map(|&d| choices[d]).collect()));
        for slot in digits.iter_mut().rev() {
            *slot += 1;
            if *slot < k {
                break;
            }
            *slot = 0;
        }
    }
    Ok(out)
}

/// Cartesian product of the per-party vertex lists, party 0 most significant.
pub fn enumerate_ldl_vertices<T: Scalar>(
    scenario: &Scenario,
    bounds: &DetectionBounds<T>,
    cap: u128,
) -> Result<Vec<ProductVertex>> {
    bounds.check_scenario(scenario)?;
    let total = check_cap(ldl_vertex_count(scenario, bounds), cap)?;
    let per_party = (0..scenario.n_parties())
        .map(|i| enumerate_party_vertices(scenario, i, bounds, cap))
        .collect::<Result<Vec<_>>>()?;

    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; per_party.len()];
    for _ in 0..total {
        out.push(ProductVertex::new(idx.iter().zip(&per_party).map(|(&i, list)| list[i].clone()).collect()));
        for (slot, list) in idx.iter_mut().zip(&per_party).rev() {
            *slot += 1;
            if *slot < list.len() {
                break;
            }
            *slot = 0;
        }
    }
    Ok(out)
}

pub fn vertex_to_full<T: Scalar>(
    scenario: &Scenario,
    v: &ProductVertex,
    bounds: &DetectionBounds<T>,
) -> FullCorrelation<T> {
    FullCorrelation::from_fn(scenario.clone(), |x, a| v.prob(x, a, bounds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio, Rational};

    fn single(n: usize, m: usize) -> Scenario {
        Scenario::new(vec![n], vec![m]).unwrap()
    }

    #[test]
    fn one_outcome_one_input_half_to_one() {
        let s = single(1, 1);
        let b = DetectionBounds::new(vec![(ratio(1, 2), int(1))]).unwrap();
        let vs = enumerate_party_vertices(&s, 0, &b, DEFAULT_VERTEX_CAP).unwrap();
        assert_eq!(vs.len(), 2);
        let probs: Vec<Rational> = vs.iter().map(|v| v.prob(0, Some(0), &b, 0)).collect();
        assert_eq!(probs, vec![ratio(1, 2), int(1)]);
    }

    #[test]
    fn counts_for_binary_party() {
        let s = single(2, 2);
        let b = DetectionBounds::new(vec![(ratio(1, 3), ratio(2, 3))]).unwrap();
        assert_eq!(enumerate_party_vertices(&s, 0, &b, DEFAULT_VERTEX_CAP).unwrap().len(), 16);
        let det = DetectionBounds::new(vec![(int(1), int(1))]).unwrap();
        let vs = enumerate_party_vertices(&s, 0, &det, DEFAULT_VERTEX_CAP).unwrap();
        assert_eq!(vs.len(), 4);
        assert!(vs.iter().all(|v| v.prob::<Rational>(0, None, &det, 0) == int(0)));
    }

    #[test]
    fn lexicographic_order() {
        let s = single(2, 2);
        let b = DetectionBounds::new(vec![(ratio(1, 3), ratio(2, 3))]).unwrap();
        let vs = enumerate_party_vertices(&s, 0, &b, DEFAULT_VERTEX_CAP).unwrap();
        assert_eq!(vs[0].choices(), &[(0, EtaChoice::Min), (0, EtaChoice::Min)]);
        assert_eq!(vs[1].choices(), &[(0, EtaChoice::Min), (0, EtaChoice::Max)]);
        assert_eq!(vs[2].choices(), &[(0, EtaChoice::Min), (1, EtaChoice::Min)]);
        assert_eq!(vs[4].choices(), &[(0, EtaChoice::Max), (0, EtaChoice::Min)]);
        assert_eq!(vs[15].choices(), &[(1, EtaChoice::Max), (1, EtaChoice::Max)]);
    }

    #[test]
    fn product_counts_and_single_party_identity() {
        let s = Scenario::chsh();
        let b = DetectionBounds::symmetric(2, ratio(1, 4), ratio(3, 4)).unwrap();
        assert_eq!(enumerate_ldl_vertices(&s, &b, DEFAULT_VERTEX_CAP).unwrap().len(), 256);

        let one = single(2, 3);
        let b1 = DetectionBounds::new(vec![(ratio(1, 4), ratio(3, 4))]).unwrap();
        let a: Vec<_> = enumerate_ldl_vertices(&one, &b1, DEFAULT_VERTEX_CAP)
            .unwrap()
            .into_iter()
            .map(|v| v.parts()[0].clone())
            .collect();
        assert_eq!(a, enumerate_party_vertices(&one, 0, &b1, DEFAULT_VERTEX_CAP).unwrap());
    }

    #[test]
    fn cap_is_enforced() {
        let s = Scenario::new(vec![4, 4], vec![3, 3]).unwrap();
        let b = DetectionBounds::symmetric(2, ratio(1, 4), ratio(3, 4)).unwrap();
        let err = enumerate_ldl_vertices(&s, &b, 1000).unwrap_err();
        assert!(matches!(err, LdlError::SizeOverflow { count, cap: 1000 } if count == 6u128.pow(8)));
    }

    #[test]
    fn vertex_tables() {
        let s = Scenario::chsh();
        let b = DetectionBounds::new(vec![(ratio(1, 3), ratio(1, 2)), (ratio(1, 5), ratio(4, 5))]).unwrap();
        let vs = enumerate_ldl_vertices(&s, &b, DEFAULT_VERTEX_CAP).unwrap();
        let all_max = vs
            .iter()
            .find(|v| v.parts().iter().all(|p| p.choices().iter().all(|&c| c == (0, EtaChoice::Max))))
            .unwrap();
        let f = vertex_to_full(&s, all_max, &b);
        for x in s.input_tuples() {
            assert_eq!(f.get(&x, &[Some(0), Some(0)]).unwrap(), &ratio(2, 5));
        }
        assert!(f.validate(0.0).valid);

        let mixed = ProductVertex::new(vec![
            SinglePartyVertex::new(vec![(1, EtaChoice::Min), (0, EtaChoice::Min)]),
            SinglePartyVertex::new(vec![(0, EtaChoice::Max), (1, EtaChoice::Max)]),
        ]);
        let f = vertex_to_full(&s, &mixed, &b);
        assert_eq!(f.get(&[0, 1], &[Some(1), Some(1)]).unwrap(), &ratio(4, 15));
        assert_eq!(f.get(&[0, 1], &[Some(1), None]).unwrap(), &(ratio(1, 3) * ratio(1, 5)));
        assert_eq!(f.get(&[0, 1], &[Some(0), Some(1)]).unwrap(), &int(0));
    }
}
