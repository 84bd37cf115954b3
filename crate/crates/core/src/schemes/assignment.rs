use crate::error::{LdlError, Result};
use crate::model::PostselectedCorrelation;
use crate::scalar::Scalar;

/// Single-party conditional distribution `P(a|x)`, indexed `[x][a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalDistribution<T> {
    per_input: Vec<Vec<T>>,
}

impl<T: Scalar> LocalDistribution<T> {
    pub fn new(per_input: Vec<Vec<T>>) -> Result<Self> {
        let tol = if T::EXACT { T::zero() } else { T::from_f64(1e-12).unwrap() };
        for (x, row) in per_input.iter().enumerate() {
            let sum = row.iter().cloned().fold(T::zero(), |a, b| a + b);
            if row.is_empty() || row.iter().any(|v| v < &T::zero()) || (sum - T::one()).abs() > tol {
                return Err(LdlError::InvalidInput(format!("local distribution at input {} is not normalized", x + 1)));
            }
        }
        Ok(LocalDistribution { per_input })
    }

    pub fn uniform(inputs: usize, outcomes: usize) -> Self {
        let v = T::one() / T::from_usize(outcomes).expect("count fits");
        LocalDistribution { per_input: vec![vec![v; outcomes]; inputs] }
    }

    pub fn per_input(&self) -> &[Vec<T>] {
        &self.per_input
    }

    fn fits(&self, inputs: usize, outcomes: usize) -> bool {
        self.per_input.len() == inputs && self.per_input.iter().all(|r| r.len() == outcomes)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeParams<T> {
    /// Physical detector efficiency, in `(0, 1]`.
    pub eta: T,
    /// Probability that a non-detection is replaced by a local outcome.
    pub eta_min_assign: T,
    pub local_a: LocalDistribution<T>,
    pub local_b: LocalDistribution<T>,
}

/// Alice's and Bob's marginals and the largest signalling deviation.
///
/// Alice's marginal is read at Bob's first input and vice versa.
pub fn two_party_marginals<T: Scalar>(p: &PostselectedCorrelation<T>) -> Result<(Vec<Vec<T>>, Vec<Vec<T>>, f64)> {
    let s = p.scenario();
    if s.n_parties() != 2 {
        return Err(LdlError::ScenarioMismatch("marginals need exactly two parties".into()));
    }
    let (nx, ny) = (s.inputs()[0], s.inputs()[1]);
    let (ma, mb) = (s.outcomes()[0], s.outcomes()[1]);
    let at = |x: usize, y: usize, a: usize, b: usize| p.at(x * ny + y, a * mb + b).clone();
    let sum = |it: &mut dyn Iterator<Item = T>| it.fold(T::zero(), |acc, v| acc + v);

    let alice_at =
        |x: usize, y: usize| -> Vec<T> { (0..ma).map(|a| sum(&mut (0..mb).map(|b| at(x, y, a, b)))).collect() };
    let bob_at =
        |x: usize, y: usize| -> Vec<T> { (0..mb).map(|b| sum(&mut (0..ma).map(|a| at(x, y, a, b)))).collect() };

    let alice: Vec<Vec<T>> = (0..nx).map(|x| alice_at(x, 0)).collect();
    let bob: Vec<Vec<T>> = (0..ny).map(|y| bob_at(0, y)).collect();
    let mut residual: f64 = 0.0;
    for x in 0..nx {
        for y in 0..ny {
            for (u, v) in alice_at(x, y).iter().zip(&alice[x]) {
                residual = residual.max((u.clone() - v.clone()).abs().to_f64_lossy());
            }
            for (u, v) in bob_at(x, y).iter().zip(&bob[y]) {
                residual = residual.max((u.clone() - v.clone()).abs().to_f64_lossy());
            }
        }
    }
    Ok((alice, bob, residual))
}

/// Postselected correlation obtained when each undetected round still
/// reports a locally sampled outcome with probability `eta_min_assign`:
///
/// ```text
/// [eta^2 P + eta(1-eta) e (P_A L_B + L_A P_B) + (1-eta)^2 e^2 L_A L_B] / (eta + (1-eta) e)^2
/// ```
///
/// where `P_A`, `P_B` are the marginals of `p_nl` and `L_A`, `L_B` the local
/// distributions. `tol` bounds the accepted signalling of `p_nl`.
pub fn apply_scheme<T: Scalar>(
    p_nl: &PostselectedCorrelation<T>,
    params: &SchemeParams<T>,
    tol: f64,
) -> Result<PostselectedCorrelation<T>> {
    let s = p_nl.scenario().clone();
    let (pa, pb, residual) = two_party_marginals(p_nl)?;
    if residual > tol {
        return Err(LdlError::SignallingInput { residual });
    }
    let (nx, ny) = (s.inputs()[0], s.inputs()[1]);
    let (ma, mb) = (s.outcomes()[0], s.outcomes()[1]);
    if !params.local_a.fits(nx, ma) || !params.local_b.fits(ny, mb) {
        return Err(LdlError::ScenarioMismatch("local distributions do not fit the scenario".into()));
    }
    let (eta, e) = (params.eta.clone(), params.eta_min_assign.clone());
    if !(eta > T::zero() && eta <= T::one()) {
        return Err(LdlError::InvalidInput(format!("eta must lie in (0, 1], got {eta}")));
    }
    if e < T::zero() || e > T::one() {
        return Err(LdlError::InvalidInput(format!("assignment probability must lie in [0, 1], got {e}")));
    }

    let miss = T::one() - eta.clone();
    let w_nl = eta.clone() * eta.clone();
    let w_cross = eta.clone() * miss.clone() * e.clone();
    let w_local = miss.clone() * miss * e.clone() * e;
    let norm = {
        let d = eta + (T::one() - params.eta.clone()) * params.eta_min_assign.clone();
        d.clone() * d
    };
    let (la, lb) = (params.local_a.per_input(), params.local_b.per_input());

    let table = (0..nx * ny)
        .flat_map(|xi| (0..ma * mb).map(move |ai| (xi, ai)))
        .map(|(xi, ai)| {
            let (x, y) = (xi / ny, xi % ny);
            let (a, b) = (ai / mb, ai % mb);
            let v = w_nl.clone() * p_nl.at(xi, ai).clone()
                + w_cross.clone() * (pa[x][a].clone() * lb[y][b].clone() + la[x][a].clone() * pb[y][b].clone())
                + w_local.clone() * la[x][a].clone() * lb[y][b].clone();
            v / norm.clone()
        })
        .collect();
    PostselectedCorrelation::new(s, table)
}
