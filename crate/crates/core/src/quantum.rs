//! Born-rule correlations of two qubits under projective measurements.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;

use crate::error::{LdlError, Result};
use crate::model::{PostselectedCorrelation, Scenario};
use crate::scalar::Scalar;

const NORM_TOL: f64 = 1e-12;

/// Amplitudes in the basis `|00>, |01>, |10>, |11>` (Alice's qubit first).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitState {
    amplitudes: [Complex64; 4],
}

impl TwoQubitState {
    pub fn new(amplitudes: [Complex64; 4]) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOL {
            return Err(LdlError::InvalidInput(format!("state norm^2 is {norm}, expected 1")));
        }
        Ok(TwoQubitState { amplitudes })
    }

    /// Rescales to unit norm first.
    pub fn normalized(amplitudes: [Complex64; 4]) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(LdlError::InvalidInput("state has zero or non-finite norm".into()));
        }
        Self::new(amplitudes.map(|a| a / norm))
    }

    /// `(|01> - |10>) / sqrt 2`.
    pub fn singlet() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        TwoQubitState {
            amplitudes: [
                Complex64::new(0.0, 0.0),
                Complex64::new(h, 0.0),
                Complex64::new(-h, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        }
    }

    /// `cos(alpha)|00> + sin(alpha)|11>`.
    pub fn schmidt(alpha: f64) -> Self {
        let z = Complex64::new(0.0, 0.0);
        TwoQubitState { amplitudes: [Complex64::new(alpha.cos(), 0.0), z, z, Complex64::new(alpha.sin(), 0.0)] }
    }

    pub fn amplitudes(&self) -> &[Complex64; 4] {
        &self.amplitudes
    }
}

/// Qubit measurement direction; outcome 0 is the +1 eigenvector
/// `cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochAngles {
    pub theta: f64,
    pub phi: f64,
}

impl BlochAngles {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() || !phi.is_finite() || !(0.0..=PI).contains(&theta) || !(0.0..2.0 * PI).contains(&phi) {
            return Err(LdlError::InvalidInput(format!(
                "Bloch angles need theta in [0, pi] and phi in [0, 2pi), got ({theta}, {phi})"
            )));
        }
        Ok(BlochAngles { theta, phi })
    }

    /// Angles of the real direction `(c0, c1)` (up to sign).
    fn from_real(mut c0: f64, mut c1: f64) -> Self {
        let n = c0.hypot(c1);
        c0 /= n;
        c1 /= n;
        if c0 < 0.0 {
            c0 = -c0;
            c1 = -c1;
        }
        let theta = 2.0 * c1.abs().atan2(c0);
        let phi = if c1 < 0.0 { PI } else { 0.0 };
        BlochAngles { theta, phi }
    }

    /// Orthonormal eigenbasis `[outcome 0, outcome 1]`.
    fn basis(&self) -> [[Complex64; 2]; 2] {
        let (c, s) = ((self.theta / 2.0).cos(), (self.theta / 2.0).sin());
        let e = Complex64::from_polar(1.0, self.phi);
        [[Complex64::new(c, 0.0), e * s], [-e.conj() * s, Complex64::new(c, 0.0)]]
    }
}

/// One measurement per input `x in {0, 1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectiveSetting {
    pub per_input: [BlochAngles; 2],
}

impl ProjectiveSetting {
    pub fn new(x0: BlochAngles, x1: BlochAngles) -> Self {
        ProjectiveSetting { per_input: [x0, x1] }
    }
}

/// `P(ab|xy) = <psi| Pi_a^x (x) Pi_b^y |psi>` on the binary two-party scenario.
pub fn born_correlation(
    state: &TwoQubitState,
    alice: &ProjectiveSetting,
    bob: &ProjectiveSetting,
) -> PostselectedCorrelation<f64> {
    let psi = state.amplitudes;
    PostselectedCorrelation::from_fn(Scenario::chsh(), |x, a| {
        let u = alice.per_input[x[0]].basis()[a[0]];
        let v = bob.per_input[x[1]].basis()[a[1]];
        let amp = u[0].conj() * v[0].conj() * psi[0]
            + u[0].conj() * v[1].conj() * psi[1]
            + u[1].conj() * v[0].conj() * psi[2]
            + u[1].conj() * v[1].conj() * psi[3];
        amp.norm_sqr()
    })
}

/// Singlet-optimal CHSH directions in the x-z plane.
pub fn chsh_settings() -> (ProjectiveSetting, ProjectiveSetting) {
    let a = ProjectiveSetting::new(BlochAngles { theta: 0.0, phi: 0.0 }, BlochAngles { theta: FRAC_PI_2, phi: 0.0 });
    let b = ProjectiveSetting::new(
        BlochAngles { theta: FRAC_PI_4, phi: 0.0 },
        BlochAngles { theta: 3.0 * FRAC_PI_4, phi: 0.0 },
    );
    (a, b)
}

/// `max_k |E00 + E01 + E10 + E11 - 2 E_k|` with `E = P(same) - P(different)`.
pub fn chsh_value(p: &PostselectedCorrelation<f64>) -> Result<f64> {
    if !p.scenario().is_binary_pair() {
        return Err(LdlError::ScenarioMismatch("CHSH needs the binary two-party scenario".into()));
    }
    let e: Vec<f64> = (0..4).map(|xi| p.at(xi, 0) + p.at(xi, 3) - p.at(xi, 1) - p.at(xi, 2)).collect();
    let total: f64 = e.iter().sum();
    Ok(e.iter().map(|ek| (total - 2.0 * ek).abs()).fold(0.0, f64::max))
}

/// Largest change of a single party's marginal across the other party's inputs.
pub fn signalling_residual<T: Scalar>(p: &PostselectedCorrelation<T>) -> Result<f64> {
    let (_, _, r) = crate::schemes::two_party_marginals(p)?;
    Ok(r)
}

/// The Hardy directions for `cos(alpha)|00> + sin(alpha)|11>` with
/// `alpha = tau * pi / 4`, given Alice's `x = 1` angle `p` in the real plane.
///
/// Each zero constraint is linear in one remaining direction, which is then
/// fixed as the orthogonal complement of the corresponding partial overlap.
fn hardy_directions(alpha: f64, p: f64) -> [(f64, f64); 4] {
    let (c, s) = (alpha.cos(), alpha.sin());
    let (cp, sp) = (p.cos(), p.sin());
    // Overlap <a (x) b|psi> = c a0 b0 + s a1 b1 for real directions.
    let u1 = (cp, sp);
    // <u1 (x) v1|psi> = 0
    let v1 = (s * sp, -c * cp);
    // <u0 (x) v1_perp|psi> = 0 with v1_perp = (c cp, s sp)
    let u0 = (s * s * sp, -c * c * cp);
    // <u1_perp (x) v0|psi> = 0 with u1_perp = (-sp, cp)
    let v0 = (s * cp, c * sp);
    [u0, u1, v0, v1]
}

fn hardy_probability(alpha: f64, p: f64) -> f64 {
    let [u0, _, v0, _] = hardy_directions(alpha, p);
    let (c, s) = (alpha.cos(), alpha.sin());
    let amp = c * u0.0 * v0.0 + s * u0.1 * v0.1;
    amp * amp / ((u0.0.hypot(u0.1) * v0.0.hypot(v0.1)).powi(2))
}

/// State and settings realizing the Hardy structure
/// `P(01|01) = P(10|10) = P(00|11) = 0 < P(00|00)` for entanglement
/// parameter `tau` (0 product, 1 maximally entangled).
///
/// The free angle is chosen to maximize `P(00|00)`.
pub fn hardy_point(tau: f64) -> Result<(TwoQubitState, ProjectiveSetting, ProjectiveSetting)> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(LdlError::DegenerateTau(tau));
    }
    let alpha = tau * FRAC_PI_4;

    // Coarse scan, then golden-section refinement around the best cell.
    const N: usize = 720;
    let h = FRAC_PI_2 / N as f64;
    let best = (1..N)
        .map(|k| k as f64 * h)
        .max_by(|a, b| hardy_probability(alpha, *a).total_cmp(&hardy_probability(alpha, *b)))
        .expect("nonempty scan");
    let (mut lo, mut hi) = (best - h, best + h);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if hardy_probability(alpha, m1) < hardy_probability(alpha, m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    let p = 0.5 * (lo + hi);

    let [u0, u1, v0, v1] = hardy_directions(alpha, p);
    let alice = ProjectiveSetting::new(BlochAngles::from_real(u0.0, u0.1), BlochAngles::from_real(u1.0, u1.1));
    let bob = ProjectiveSetting::new(BlochAngles::from_real(v0.0, v0.1), BlochAngles::from_real(v1.0, v1.1));
    Ok((TwoQubitState::schmidt(alpha), alice, bob))
}

/// Born correlation of [`hardy_point`].
pub fn hardy_correlation(tau: f64) -> Result<PostselectedCorrelation<f64>> {
    let (state, a, b) = hardy_point(tau)?;
    Ok(born_correlation(&state, &a, &b))
}

/// `visibility * p + (1 - visibility) * uniform`.
pub fn mix_with_white_noise<T: Scalar>(
    p: &PostselectedCorrelation<T>,
    visibility: &T,
) -> Result<PostselectedCorrelation<T>> {
    if visibility < &T::zero() || visibility > &T::one() {
        return Err(LdlError::InvalidInput(format!("visibility {visibility} outside [0, 1]")));
    }
    let s = p.scenario().clone();
    let u = T::one() / T::from_usize(s.detected_count()).expect("count fits");
    let noise = (T::one() - visibility.clone()) * u;
    let table = p.table().iter().map(|v| visibility.clone() * v.clone() + noise.clone()).collect();
    PostselectedCorrelation::new(s, table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_state_computational_basis() {
        let z = Complex64::new(0.0, 0.0);
        let state = TwoQubitState::new([Complex64::new(1.0, 0.0), z, z, z]).unwrap();
        let up = BlochAngles::new(0.0, 0.0).unwrap();
        let s = ProjectiveSetting::new(up, up);
        let p = born_correlation(&state, &s, &s);
        for xi in 0..4 {
            assert!((p.at(xi, 0) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn singlet_reaches_tsirelson() {
        let (a, b) = chsh_settings();
        let p = born_correlation(&TwoQubitState::singlet(), &a, &b);
        assert!((chsh_value(&p).unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-9);
        assert!(p.validate(1e-12).valid);
    }

    #[test]
    fn hardy_constraints_hold() {
        for tau in [0.1, 0.2, 0.5, 0.8, 0.95] {
            let p = hardy_correlation(tau).unwrap();
            assert!(p.get(&[0, 1], &[0, 1]).unwrap().abs() < 1e-9);
            assert!(p.get(&[1, 0], &[1, 0]).unwrap().abs() < 1e-9);
            assert!(p.get(&[1, 1], &[0, 0]).unwrap().abs() < 1e-9);
            assert!(*p.get(&[0, 0], &[0, 0]).unwrap() > 1e-4, "tau {tau}");
            assert!(p.validate(1e-12).valid);
        }
    }

    #[test]
    fn hardy_probability_vanishes_at_endpoints() {
        let q = |tau: f64| *hardy_correlation(tau).unwrap().get(&[0, 0], &[0, 0]).unwrap();
        assert!(q(1e-4) < 1e-6);
        assert!(q(1.0 - 1e-4) < 1e-6);
        assert!(matches!(hardy_point(0.0), Err(LdlError::DegenerateTau(_))));
        assert!(matches!(hardy_point(1.0), Err(LdlError::DegenerateTau(_))));
    }

    #[test]
    fn state_validation() {
        let z = Complex64::new(0.0, 0.0);
        assert!(TwoQubitState::new([Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), z, z]).is_err());
        assert!(TwoQubitState::normalized([Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), z, z]).is_ok());
        assert!(BlochAngles::new(4.0, 0.0).is_err());
        assert!(BlochAngles::new(1.0, 2.0 * PI).is_err());
    }

    #[test]
    fn white_noise_endpoints() {
        let p = hardy_correlation(0.5).unwrap();
        assert_eq!(mix_with_white_noise(&p, &1.0).unwrap(), p);
        let u = mix_with_white_noise(&p, &0.0).unwrap();
        assert!(u.table().iter().all(|v| (v - 0.25).abs() < 1e-15));
        assert!(mix_with_white_noise(&p, &1.5).is_err());
    }
}
