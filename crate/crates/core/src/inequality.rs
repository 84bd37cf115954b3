//! The two-party Hardy-type inequality for limited detection:
//!
//! ```text
//! eta_min^2 P(00|00) - eta_min eta_max P(01|01) - eta_min eta_max P(10|10) - eta_max^2 P(00|11) <= 0
//! ```
//!
//! on postselected correlations with equal observed efficiencies. Outcome
//! labels 0 and 1 are alphabet indices 1 and 2 (0-based 0 and 1 here).

use crate::error::{LdlError, Result};
use crate::geometry::Certificate;
use crate::model::{PostselectedCorrelation, Scenario};
use crate::scalar::Scalar;

/// Default violation tolerance for exact targets.
pub const EXACT_TOL: f64 = 1e-12;
/// Default violation tolerance for float targets.
pub const FLOAT_TOL: f64 = 1e-9;

pub fn default_tol<T: Scalar>() -> f64 {
    if T::EXACT {
        EXACT_TOL
    } else {
        FLOAT_TOL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdlIneqResult<T> {
    pub lhs: T,
    pub violated: bool,
    /// Equal to `lhs`; the bound is 0.
    pub margin: T,
}

fn check_scenario(s: &Scenario) -> Result<()> {
    let ok = s.n_parties() == 2 && s.inputs() == [2, 2] && s.outcomes().iter().all(|&m| m >= 2);
    if ok {
        Ok(())
    } else {
        Err(LdlError::ScenarioMismatch(format!(
            "needs two parties with binary inputs and at least two outcomes, got inputs {:?} outcomes {:?}",
            s.inputs(),
            s.outcomes()
        )))
    }
}

fn check_etas<T: Scalar>(eta_min: &T, eta_max: &T) -> Result<()> {
    if eta_min >= &T::zero() && eta_min <= eta_max && eta_max <= &T::one() {
        Ok(())
    } else {
        Err(LdlError::InvalidInput(format!("need 0 <= eta_min <= eta_max <= 1, got ({eta_min}, {eta_max})")))
    }
}

pub fn eval_eq5<T: Scalar>(
    target: &PostselectedCorrelation<T>,
    eta_min: &T,
    eta_max: &T,
    tol: f64,
) -> Result<LdlIneqResult<T>> {
    check_scenario(target.scenario())?;
    check_etas(eta_min, eta_max)?;
    let p = |x: [usize; 2], a: [usize; 2]| target.get(&x, &a).cloned();
    let lhs = eta_min.clone() * eta_min.clone() * p([0, 0], [0, 0])?
        - eta_min.clone() * eta_max.clone() * p([0, 1], [0, 1])?
        - eta_min.clone() * eta_max.clone() * p([1, 0], [1, 0])?
        - eta_max.clone() * eta_max.clone() * p([1, 1], [0, 0])?;
    let violated = lhs > T::from_f64(tol).unwrap_or_else(T::zero);
    Ok(LdlIneqResult { margin: lhs.clone(), lhs, violated })
}

/// The inequality written as a [`Certificate`] with bound 0 (violation left at 0).
pub fn eq5_certificate<T: Scalar>(scenario: &Scenario, eta_min: &T, eta_max: &T) -> Result<Certificate<T>> {
    check_scenario(scenario)?;
    check_etas(eta_min, eta_max)?;
    let d = scenario.detected_count();
    let mut c = vec![T::zero(); scenario.input_count() * d];
    let mut set = |x: [usize; 2], a: [usize; 2], v: T| -> Result<()> {
        c[scenario.input_index(&x)? * d + scenario.detected_index(&a)?] = v;
        Ok(())
    };
    set([0, 0], [0, 0], eta_min.clone() * eta_min.clone())?;
    set([0, 1], [0, 1], -(eta_min.clone() * eta_max.clone()))?;
    set([1, 0], [1, 0], -(eta_min.clone() * eta_max.clone()))?;
    set([1, 1], [0, 0], -(eta_max.clone() * eta_max.clone()))?;
    Certificate::new(scenario.clone(), c, T::zero(), T::zero())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionPoint {
    pub eta_min: f64,
    pub eta_max: f64,
    pub lhs: f64,
    pub violated: bool,
}

/// Evaluates the inequality on the grid `eta = k / (grid - 1)`, keeping the
/// pairs with `eta_min <= eta_max`; rows ordered by `eta_min`, then `eta_max`.
pub fn eq5_region<T: Scalar>(target: &PostselectedCorrelation<T>, grid: usize, tol: f64) -> Result<Vec<RegionPoint>> {
    check_scenario(target.scenario())?;
    if grid < 2 {
        return Err(LdlError::InvalidInput("grid needs at least 2 points per axis".into()));
    }
    let step = |k: usize| T::from_usize(k).unwrap() / T::from_usize(grid - 1).unwrap();
    let mut out = Vec::with_capacity(grid * (grid + 1) / 2);
    for i in 0..grid {
        let lo = step(i);
        for j in i..grid {
            let hi = step(j);
            let r = eval_eq5(target, &lo, &hi, tol)?;
            out.push(RegionPoint {
                eta_min: lo.to_f64_lossy(),
                eta_max: hi.to_f64_lossy(),
                lhs: r.lhs.to_f64_lossy(),
                violated: r.violated,
            });
        }
    }
    Ok(out)
}

/// CSV with header `eta_min,eta_max,lhs,violated`.
pub fn region_csv(points: &[RegionPoint]) -> String {
    let mut s = String::from("eta_min,eta_max,lhs,violated\n");
    for p in points {
        s.push_str(&format!("{},{},{:e},{}\n", p.eta_min, p.eta_max, p.lhs, p.violated));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio, Rational};

    fn hardy_ideal(q: Rational) -> PostselectedCorrelation<Rational> {
        // P(00|00) = q; zeros where the inequality reads; the rest filled uniformly.
        PostselectedCorrelation::from_fn(Scenario::chsh(), |x, a| {
            let zero_at = match (x, a) {
                ([0, 1], [0, 1]) | ([1, 0], [1, 0]) | ([1, 1], [0, 0]) => true,
                _ => false,
            };
            if x == [0, 0] {
                if a == [0, 0] {
                    q.clone()
                } else {
                    (int(1) - q.clone()) / int(3)
                }
            } else if zero_at {
                int(0)
            } else {
                ratio(1, 3)
            }
        })
    }

    #[test]
    fn hardy_point_violates_for_positive_eta_min() {
        let t = hardy_ideal(ratio(1, 10));
        for eta_min in [ratio(1, 1_000_000), ratio(1, 1000), ratio(1, 2)] {
            let r = eval_eq5(&t, &eta_min, &int(1), EXACT_TOL).unwrap();
            assert_eq!(r.lhs, eta_min.clone() * eta_min.clone() * ratio(1, 10));
            assert!(r.lhs > int(0));
        }
    }

    #[test]
    fn zero_eta_min_never_violates() {
        let t = hardy_ideal(ratio(1, 10));
        let r = eval_eq5(&t, &int(0), &ratio(3, 4), EXACT_TOL).unwrap();
        assert!(!r.violated);
        assert!(r.lhs <= int(0));
    }

    #[test]
    fn uniform_target() {
        let t = PostselectedCorrelation::<Rational>::uniform(Scenario::chsh());
        let eta = ratio(2, 3);
        let r = eval_eq5(&t, &eta, &eta, EXACT_TOL).unwrap();
        assert_eq!(r.lhs, -(eta.clone() * eta) / int(2));
        assert_eq!(r.margin, r.lhs);
    }

    #[test]
    fn wrong_scenario_rejected() {
        let t = PostselectedCorrelation::<f64>::uniform(Scenario::new(vec![3, 2], vec![2, 2]).unwrap());
        assert!(matches!(eval_eq5(&t, &0.1, &1.0, FLOAT_TOL), Err(LdlError::ScenarioMismatch(_))));
        let t = PostselectedCorrelation::<f64>::uniform(Scenario::chsh());
        assert!(eval_eq5(&t, &0.6, &0.5, FLOAT_TOL).is_err());
    }

    #[test]
    fn certificate_form_matches_evaluation() {
        let t = hardy_ideal(ratio(1, 7));
        let (lo, hi) = (ratio(1, 3), ratio(4, 5));
        let c = eq5_certificate(t.scenario(), &lo, &hi).unwrap();
        assert_eq!(c.evaluate(&t), eval_eq5(&t, &lo, &hi, EXACT_TOL).unwrap().lhs);
    }

    #[test]
    fn region_grid_and_csv() {
        let t = hardy_ideal(ratio(1, 10));
        let pts = eq5_region(&t, 5, EXACT_TOL).unwrap();
        assert_eq!(pts.len(), 15);
        assert!(pts.iter().all(|p| p.violated == (p.eta_min > 0.0)));
        let csv = region_csv(&pts);
        assert!(csv.starts_with("eta_min,eta_max,lhs,violated\n0,0,"));
        assert_eq!(csv.lines().count(), 16);
    }
}
