//! Membership of postselected correlations in the sliced, rescaled LDL polytope.
//!
//! A target `P` with observed efficiencies `eta_x` is a member when some
//! mixture `Q = sum_v w_v V_v` of LDL vertices reproduces `eta_x * P(a|x)` on
//! every all-detected entry. The all-detected mass constraint follows by
//! summing those rows, because `P` is normalized.
//!
//! The LP minimizes the largest residual `t` of those equalities. Its dual is
//! a vector `y` in the unit L1 ball with `y . V_v <= beta` for every vertex and
//! `y . (eta P) - beta >= t`, which rescales into a Bell-like inequality on
//! postselected correlations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{LdlError, Result};
use crate::lp::{LinearProgram, LpOutcome};
use crate::model::{DetectionBounds, ObservedEfficiencies, PostselectedCorrelation, Scenario};
use crate::scalar::{Rational, Scalar, FLOAT_TOL};
use crate::vertices::{enumerate_ldl_vertices, ProductVertex};

#[derive(Debug, Clone)]
pub struct MembershipProblem<T> {
    target: PostselectedCorrelation<T>,
    effs: ObservedEfficiencies<T>,
    bounds: DetectionBounds<T>,
    vertices: Vec<ProductVertex>,
}

impl<T: Scalar> MembershipProblem<T> {
    pub fn new(
        target: PostselectedCorrelation<T>,
        effs: ObservedEfficiencies<T>,
        bounds: DetectionBounds<T>,
        vertices: Vec<ProductVertex>,
    ) -> Result<Self> {
        let s = target.scenario();
        bounds.check_scenario(s)?;
        if effs.per_input().len() != s.input_count() {
            return Err(LdlError::ScenarioMismatch(format!(
                "efficiencies cover {} input tuples, scenario has {}",
                effs.per_input().len(),
                s.input_count()
            )));
        }
        if vertices.is_empty() {
            return Err(LdlError::InvalidInput("empty vertex list".into()));
        }
        if vertices.iter().any(|v| v.parts().len() != s.n_parties()) {
            return Err(LdlError::ScenarioMismatch("vertex party count differs from scenario".into()));
        }
        Ok(MembershipProblem { target, effs, bounds, vertices })
    }

    /// Builds the problem with the full LDL vertex list for `bounds`.
    pub fn enumerate(
        target: PostselectedCorrelation<T>,
        effs: ObservedEfficiencies<T>,
        bounds: DetectionBounds<T>,
        cap: u128,
    ) -> Result<Self> {
        let vertices = enumerate_ldl_vertices(target.scenario(), &bounds, cap)?;
        Self::new(target, effs, bounds, vertices)
    }

    pub fn target(&self) -> &PostselectedCorrelation<T> {
        &self.target
    }

    pub fn effs(&self) -> &ObservedEfficiencies<T> {
        &self.effs
    }

    pub fn bounds(&self) -> &DetectionBounds<T> {
        &self.bounds
    }

    pub fn vertices(&self) -> &[ProductVertex] {
        &self.vertices
    }

    pub fn scenario(&self) -> &Scenario {
        self.target.scenario()
    }

    /// `V_v(a|x)` over all-detected entries, row-major by `(x, a)`.
    fn vertex_column(&self, v: &ProductVertex) -> Vec<T> {
        detected_column(self.scenario(), v, &self.bounds)
    }

    /// `eta_x * P(a|x)`, the sliced target in unnormalized coordinates.
    fn scaled_target(&self) -> Vec<T> {
        let s = self.scenario();
        let d = s.detected_count();
        (0..s.input_count() * d).map(|r| self.effs.get(r / d).clone() * self.target.table()[r].clone()).collect()
    }

    pub fn convert<U: Scalar>(&self) -> MembershipProblem<U> {
        MembershipProblem {
            target: self.target.convert(),
            effs: self.effs.convert(),
            bounds: self.bounds.convert(),
            vertices: self.vertices.clone(),
        }
    }
}

fn detected_column<T: Scalar>(s: &Scenario, v: &ProductVertex, bounds: &DetectionBounds<T>) -> Vec<T> {
    let mut col = Vec::with_capacity(s.input_count() * s.detected_count());
    for xi in 0..s.input_count() {
        let x = s.input_tuple(xi);
        for d in 0..s.detected_count() {
            let a: Vec<_> = s.detected_tuple(d).into_iter().map(Some).collect();
            col.push(v.prob(&x, &a, bounds));
        }
    }
    col
}

/// Bell-like inequality `sum coefficients * P <= bound` on postselected
/// correlations, violated by its target by `violation`.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate<T> {
    scenario: Scenario,
    coefficients: Vec<T>,
    bound: T,
    violation: T,
}

impl<T: Scalar> Certificate<T> {
    pub fn new(scenario: Scenario, coefficients: Vec<T>, bound: T, violation: T) -> Result<Self> {
        if coefficients.len() != scenario.input_count() * scenario.detected_count() {
            return Err(LdlError::ScenarioMismatch("coefficient table has the wrong size".into()));
        }
        Ok(Certificate { scenario, coefficients, bound, violation })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    /// Row-major by `(x, a)` like [`PostselectedCorrelation::table`].
    pub fn coefficients(&self) -> &[T] {
        &self.coefficients
    }

    pub fn coefficient(&self, x: &[usize], a: &[usize]) -> Result<&T> {
        let i = self.scenario.input_index(x)? * self.scenario.detected_count() + self.scenario.detected_index(a)?;
        Ok(&self.coefficients[i])
    }

    pub fn bound(&self) -> &T {
        &self.bound
    }

    pub fn violation(&self) -> &T {
        &self.violation
    }

    pub fn evaluate(&self, p: &PostselectedCorrelation<T>) -> T {
        dot(&self.coefficients, p.table())
    }

    /// Scales by a positive factor so that the largest `|coefficient|` is 1.
    pub fn normalized(&self) -> Self {
        let scale = self.coefficients.iter().fold(T::zero(), |m, c| T::max_of(m, c.abs()));
        if scale.is_zero() {
            return self.clone();
        }
        Certificate {
            scenario: self.scenario.clone(),
            coefficients: self.coefficients.iter().map(|c| c.clone() / scale.clone()).collect(),
            bound: self.bound.clone() / scale.clone(),
            violation: self.violation.clone() / scale,
        }
    }

    /// Largest value of the inequality's left-hand side over the vertices of
    /// `problem`, after slicing at its efficiencies and rescaling.
    fn vertex_bound(&self, problem: &MembershipProblem<T>) -> T {
        let d = self.scenario.detected_count();
        let y: Vec<T> =
            self.coefficients.iter().enumerate().map(|(r, c)| c.clone() / problem.effs.get(r / d).clone()).collect();
        problem.vertices.iter().map(|v| dot(&y, &problem.vertex_column(v))).reduce(T::max_of).unwrap_or_else(T::zero)
    }
}

impl Certificate<f64> {
    /// Rounds the coefficients to rationals with denominators at most
    /// `max_den`, then recomputes bound and violation exactly. Returns `None`
    /// when rounding destroys the violation.
    pub fn reconstruct_exact(
        &self,
        problem: &MembershipProblem<Rational>,
        max_den: u64,
    ) -> Option<Certificate<Rational>> {
        let coefficients: Vec<Rational> =
            self.coefficients.iter().map(|c| crate::scalar::rationalize(*c, max_den)).collect();
        let mut cert = Certificate {
            scenario: self.scenario.clone(),
            coefficients,
            bound: Rational::from_integer(0.into()),
            violation: Rational::from_integer(0.into()),
        };
        cert.bound = cert.vertex_bound(problem);
        cert.violation = cert.evaluate(&problem.target) - cert.bound.clone();
        (cert.violation > Rational::from_integer(0.into())).then(|| cert.normalized())
    }
}

#[derive(Debug, Clone)]
pub enum Membership<T> {
    Member {
        /// One weight per vertex of the problem, in vertex order.
        weights: Vec<T>,
        /// Largest equality residual of the witness (zero in exact mode).
        residual: T,
    },
    NonMember(Certificate<T>),
}

impl<T> Membership<T> {
    pub fn is_member(&self) -> bool {
        matches!(self, Membership::Member { .. })
    }

    pub fn certificate(&self) -> Option<&Certificate<T>> {
        match self {
            Membership::NonMember(c) => Some(c),
            Membership::Member { .. } => None,
        }
    }
}

/// Decides whether the problem's target lies in the sliced LDL polytope.
///
/// Exact scalars solve the equalities exactly and ignore `tol`. Float scalars
/// accept when every equality holds within `tol`.
pub fn check_membership<T: Scalar>(p: &MembershipProblem<T>, tol: f64) -> Result<Membership<T>> {
    let s = p.scenario();
    p.effs.check_against(s, &p.bounds)?;
    if !T::EXACT && !(tol > 0.0) {
        return Err(LdlError::InvalidInput("tolerance must be positive in float mode".into()));
    }

    let n_v = p.vertices.len();
    let rows = s.input_count() * s.detected_count();
    let columns: Vec<Vec<T>> = p.vertices.iter().map(|v| p.vertex_column(v)).collect();
    let b = p.scaled_target();

    // Columns: weights, residual bound t, then one slack per inequality.
    let t_col = n_v;
    let slack0 = n_v + 1;
    let mut lp = LinearProgram::new(n_v + 1 + 2 * rows);
    lp.c[t_col] = T::one();

    let mut simplex_row = vec![T::zero(); lp.cols()];
    simplex_row[..n_v].fill(T::one());
    lp.add_row(simplex_row, T::one());
    for r in 0..rows {
        for (sign, slack_sign, k) in [(-T::one(), T::one(), 0), (T::one(), -T::one(), 1)] {
            let mut row = vec![T::zero(); lp.cols()];
            for (v, col) in columns.iter().enumerate() {
                row[v] = col[r].clone();
            }
            row[t_col] = sign;
            row[slack0 + 2 * r + k] = slack_sign;
            lp.add_row(row, b[r].clone());
        }
    }

    let (x, objective, duals) = match lp.solve_guided() {
        LpOutcome::Optimal { x, objective, duals } => (x, objective, duals),
        // t is unbounded above and the simplex row is always satisfiable.
        other => unreachable!("residual LP is always feasible and bounded: {other:?}"),
    };

    let accept = if T::EXACT { objective.is_zero() } else { objective <= T::from_f64(tol).expect("finite tolerance") };
    if accept {
        return Ok(Membership::Member { weights: x[..n_v].to_vec(), residual: objective });
    }

    // Combine the two duals of each entry's pair of inequality rows.
    let y: Vec<T> = (0..rows).map(|r| duals[1 + 2 * r].clone() + duals[2 + 2 * r].clone()).collect();
    let d = s.detected_count();
    let coefficients: Vec<T> = y.iter().enumerate().map(|(r, yr)| yr.clone() * p.effs.get(r / d).clone()).collect();
    let bound = columns.iter().map(|col| dot(&y, col)).reduce(T::max_of).expect("nonempty vertex list");
    let violation = dot(&y, &b) - bound.clone();
    let cert = Certificate { scenario: s.clone(), coefficients, bound, violation }.normalized();
    Ok(Membership::NonMember(cert))
}

/// Mixes the vertices with `weights` and rescales by the efficiencies.
pub fn reconstruct_witness<T: Scalar>(p: &MembershipProblem<T>, weights: &[T]) -> PostselectedCorrelation<T> {
    let s = p.scenario();
    let d = s.detected_count();
    let mut table = vec![T::zero(); s.input_count() * d];
    for (v, w) in p.vertices.iter().zip(weights) {
        if w.is_zero() {
            continue;
        }
        for (acc, val) in table.iter_mut().zip(p.vertex_column(v)) {
            *acc = acc.clone() + w.clone() * val;
        }
    }
    for (r, acc) in table.iter_mut().enumerate() {
        *acc = acc.clone() / p.effs.get(r / d).clone();
    }
    PostselectedCorrelation::new(s.clone(), table).expect("table sized from scenario")
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

/// Random feasible points of the sliced polytope.
///
/// Extreme points are found by minimizing random linear objectives over the
/// slice; samples are random convex combinations of them. Works in `f64`.
pub struct SliceSampler {
    scenario: Scenario,
    effs: Vec<f64>,
    columns: Vec<Vec<f64>>,
    extremes: Vec<Vec<f64>>,
    rng: ChaCha8Rng,
}

impl SliceSampler {
    pub fn new<T: Scalar>(
        scenario: &Scenario,
        bounds: &DetectionBounds<T>,
        effs: &ObservedEfficiencies<T>,
        vertices: &[ProductVertex],
        extremes: usize,
        seed: u64,
    ) -> Result<Self> {
        let fb: DetectionBounds<f64> = bounds.convert();
        let columns: Vec<Vec<f64>> = vertices.iter().map(|v| detected_column(scenario, v, &fb)).collect();
        let effs: Vec<f64> = effs.per_input().iter().map(|e| e.to_f64_lossy()).collect();
        let mut sampler = SliceSampler {
            scenario: scenario.clone(),
            effs,
            columns,
            extremes: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        sampler.find_extremes(extremes.max(1))?;
        Ok(sampler)
    }

    /// Convenience constructor from a membership problem.
    pub fn for_problem<T: Scalar>(p: &MembershipProblem<T>, extremes: usize, seed: u64) -> Result<Self> {
        Self::new(p.scenario(), &p.bounds, &p.effs, &p.vertices, extremes, seed)
    }

    fn find_extremes(&mut self, count: usize) -> Result<()> {
        let s = &self.scenario;
        let d = s.detected_count();
        let n_v = self.columns.len();
        let mut base = LinearProgram::<f64>::new(n_v);
        base.add_row(vec![1.0; n_v], 1.0);
        for xi in 0..s.input_count() {
            let row: Vec<f64> = self.columns.iter().map(|c| c[xi * d..(xi + 1) * d].iter().sum()).collect();
            base.add_row(row, self.effs[xi]);
        }
        for _ in 0..count {
            let mut lp = base.clone();
            lp.c = (0..n_v).map(|_| self.rng.gen::<f64>()).collect();
            match lp.solve() {
                LpOutcome::Optimal { x, .. } => self.extremes.push(x.into_iter().map(|w| w.max(0.0)).collect()),
                _ => return Err(LdlError::NoFeasibleSample),
            }
        }
        Ok(())
    }

    /// Vertex weights of a random feasible point.
    pub fn sample_weights(&mut self) -> Vec<f64> {
        let lambdas: Vec<f64> = (0..self.extremes.len()).map(|_| -self.rng.gen::<f64>().max(1e-300).ln()).collect();
        let total: f64 = lambdas.iter().sum();
        let mut w = vec![0.0; self.columns.len()];
        for (lam, ext) in lambdas.iter().zip(&self.extremes) {
            for (acc, e) in w.iter_mut().zip(ext) {
                *acc += lam / total * e;
            }
        }
        w
    }

    /// A random feasible postselected correlation.
    pub fn sample(&mut self) -> PostselectedCorrelation<f64> {
        let w = self.sample_weights();
        let d = self.scenario.detected_count();
        let mut table = vec![0.0; self.scenario.input_count() * d];
        for (wv, col) in w.iter().zip(&self.columns) {
            if *wv == 0.0 {
                continue;
            }
            for (acc, v) in table.iter_mut().zip(col) {
                *acc += wv * v;
            }
        }
        for (r, acc) in table.iter_mut().enumerate() {
            *acc /= self.effs[r / d];
        }
        PostselectedCorrelation::new(self.scenario.clone(), table).expect("table sized from scenario")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateCheck {
    pub passed: bool,
    /// `lhs(target) - bound`, recomputed.
    pub target_margin: f64,
    /// Largest `lhs(sample) - bound` over the feasible samples.
    pub worst_sample_margin: Option<f64>,
    pub samples: usize,
    /// Set when the slice yielded no feasible sample; only the target side was checked.
    pub no_feasible_sample: bool,
}

/// Re-checks a certificate: the target must violate it by more than `tol` and
/// `samples` random feasible points must satisfy it within `tol`.
pub fn certificate_check<T: Scalar>(
    cert: &Certificate<T>,
    p: &MembershipProblem<T>,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<CertificateCheck> {
    if cert.scenario() != p.scenario() {
        return Err(LdlError::ScenarioMismatch("certificate was built for a different scenario".into()));
    }
    let target_margin = (cert.evaluate(&p.target) - cert.bound.clone()).to_f64_lossy();
    let violated = target_margin > tol;

    let coeffs: Vec<f64> = cert.coefficients.iter().map(|c| c.to_f64_lossy()).collect();
    let bound = cert.bound.to_f64_lossy();
    match SliceSampler::for_problem(p, 16, seed) {
        Ok(mut sampler) => {
            let mut worst = f64::NEG_INFINITY;
            for _ in 0..samples {
                let q = sampler.sample();
                worst = worst.max(dot(&coeffs, q.table()) - bound);
            }
            let worst_sample_margin = (samples > 0).then_some(worst);
            let feasible_ok = worst_sample_margin.is_none_or(|w| w <= tol);
            Ok(CertificateCheck {
                passed: violated && feasible_ok,
                target_margin,
                worst_sample_margin,
                samples,
                no_feasible_sample: false,
            })
        }
        Err(LdlError::NoFeasibleSample) => Ok(CertificateCheck {
            passed: violated,
            target_margin,
            worst_sample_margin: None,
            samples: 0,
            no_feasible_sample: true,
        }),
        Err(e) => Err(e),
    }
}

/// Result of scanning `eta_min` for a fixed target and `eta_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CriticalEtaMin {
    /// Rejected already at `eta_min = 0`.
    NeverMember,
    /// Accepted even at `eta_min = eta_max`.
    AlwaysMember,
    /// Accepted below, rejected above (to the bisection tolerance).
    Threshold(f64),
}

impl CriticalEtaMin {
    /// The infimum as a number: 0 for never, `eta_max` for always.
    pub fn value(self, eta_max: f64) -> f64 {
        match self {
            CriticalEtaMin::NeverMember => 0.0,
            CriticalEtaMin::AlwaysMember => eta_max,
            CriticalEtaMin::Threshold(v) => v,
        }
    }
}

/// Bisects for the smallest `eta_min` above which the target is rejected,
/// with the same `(eta_min, eta_max)` for every party.
pub fn critical_eta_min<T: Scalar>(
    target: &PostselectedCorrelation<T>,
    effs: &ObservedEfficiencies<T>,
    eta_max: f64,
    tol: f64,
    cap: u128,
) -> Result<CriticalEtaMin> {
    if !(0.0..=1.0).contains(&eta_max) || !(tol > 0.0) {
        return Err(LdlError::InvalidInput("need 0 <= eta_max <= 1 and tol > 0".into()));
    }
    let member_at = |eta_min: f64| -> Result<bool> {
        let to_t = |v: f64| T::from_rational(&v.to_rational());
        let bounds = DetectionBounds::symmetric(target.scenario().n_parties(), to_t(eta_min), to_t(eta_max))?;
        let problem = MembershipProblem::enumerate(target.clone(), effs.clone(), bounds, cap)?;
        match check_membership(&problem, FLOAT_TOL) {
            Ok(m) => Ok(m.is_member()),
            Err(LdlError::InconsistentEfficiencies { .. }) => Ok(false),
            Err(e) => Err(e),
        }
    };

    if !member_at(0.0)? {
        return Ok(CriticalEtaMin::NeverMember);
    }
    if member_at(eta_max)? {
        return Ok(CriticalEtaMin::AlwaysMember);
    }
    let (mut lo, mut hi) = (0.0, eta_max);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if member_at(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CriticalEtaMin::Threshold(hi))
}

/// Indices of vertices that are convex combinations of the other listed
/// vertices, compared as full tables. Exact; meant for small instances.
pub fn redundant_vertices<T: Scalar>(
    scenario: &Scenario,
    bounds: &DetectionBounds<T>,
    vertices: &[ProductVertex],
) -> Vec<usize> {
    let tables: Vec<Vec<T>> =
        vertices.iter().map(|v| crate::vertices::vertex_to_full(scenario, v, bounds).table().to_vec()).collect();
    let mut redundant = Vec::new();
    for (i, target) in tables.iter().enumerate() {
        let others: Vec<&Vec<T>> = tables.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, t)| t).collect();
        if others.is_empty() {
            continue;
        }
        let mut lp = LinearProgram::<T>::new(others.len());
        lp.add_row(vec![T::one(); others.len()], T::one());
        for (r, val) in target.iter().enumerate() {
            lp.add_row(others.iter().map(|t| t[r].clone()).collect(), val.clone());
        }
        if matches!(lp.solve_guided(), LpOutcome::Optimal { .. }) {
            redundant.push(i);
        }
    }
    redundant
}
