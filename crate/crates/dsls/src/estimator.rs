//! Per-sensor recursive estimation state and the two estimators built on it:
//! consensus least squares in information form, and the sparse round that
//! adds an adaptively weighted L1 penalty on top of it.
//!
//! Rounds are bulk-synchronous: every sensor reads only the previous round's
//! snapshot and produces its own next state, so a round is a pure function
//! `NetworkState -> NetworkState`. Consensus LS per sensor i:
//!
//! ```text
//! P_inv' = sum_{j in N_i} a_ij (P_inv_j + phi_j phi_j')
//! q'     = sum_{j in N_i} a_ij (q_j + phi_j y_j)
//! theta' = solve(P_inv', q')            (Cholesky)
//! ```
//!
//! The sparse round then builds, per sensor, the weighted problem
//! `min_b b' P_inv' b - 2 q'' b + sum_l gamma_l |b_l|` with
//! `gamma_l = alpha / |theta_hat(l)|`, where the pilot `theta_hat` pushes
//! every coordinate away from zero just enough to keep the weights finite.
//! Exact zeros of the minimizer are the sensor's estimated zero set.

use crate::error::{Error, Result};
use crate::graph::NetworkGraph;
use crate::solver::{self, QuadraticL1Problem, SolveOptions, SolveReport};
use nalgebra::{DMatrix, DVector};
use std::collections::BTreeSet;

/// Floor applied to `log(lambda_max)` inside the pilot bonus. Early rounds
/// can have `lambda_max <= 1`, where the raw log would make the bonus zero or
/// imaginary; any positive floor keeps the penalty weights well defined.
pub const LOG_FLOOR: f64 = 1e-6;

/// One sensor's estimation state after `t` rounds.
#[derive(Clone, Debug)]
pub struct SensorState {
    /// Information matrix (consensus-weighted Gram plus prior), symmetric
    /// positive definite.
    pub p_inv: DMatrix<f64>,
    /// Information vector; `theta_ls` solves `p_inv * theta = q`.
    pub q: DVector<f64>,
    /// Least-squares estimate.
    pub theta_ls: DVector<f64>,
    /// Sparse estimate from the weighted-L1 round (equals `theta0`, then the
    /// previous solve's minimizer until the next sparse round).
    pub xi: DVector<f64>,
    /// Penalty level used for the most recent sparse solve.
    pub alpha: f64,
    /// Smallest eigenvalue of `p_inv`.
    pub lambda_min: f64,
    /// Largest eigenvalue of `p_inv`.
    pub lambda_max: f64,
}

impl SensorState {
    /// Estimated zero set: coordinates of `xi` that are exactly zero.
    pub fn zero_set(&self) -> BTreeSet<usize> {
        (0..self.xi.len()).filter(|&l| self.xi[l] == 0.0).collect()
    }
}

/// All sensors after `t` synchronous rounds.
#[derive(Clone, Debug)]
pub struct NetworkState {
    pub sensors: Vec<SensorState>,
    pub t: usize,
}

impl NetworkState {
    pub fn n(&self) -> usize {
        self.sensors.len()
    }

    pub fn m(&self) -> usize {
        self.sensors[0].theta_ls.len()
    }

    pub fn sensor(&self, i: usize) -> &SensorState {
        &self.sensors[i]
    }
}

/// Penalty schedule `alpha = c * lambda_min(P_inv)^p`. The exponent must sit
/// in (1/2, 1): fast enough that `alpha = o(lambda_min)`, slow enough that
/// the penalty still dominates the noise scale. `c = 0` switches the sparse
/// round into plain least squares.
#[derive(Clone, Copy, Debug)]
pub struct AlphaSchedule {
    pub c: f64,
    pub p: f64,
}

impl Default for AlphaSchedule {
    fn default() -> Self {
        Self { c: 1.0, p: 0.75 }
    }
}

impl AlphaSchedule {
    pub fn value(&self, lambda_min: f64) -> f64 {
        if self.c == 0.0 {
            0.0
        } else {
            self.c * lambda_min.powf(self.p)
        }
    }
}

/// `alpha = c * lambda_min(p_inv)^p` straight from the matrix.
pub fn alpha_schedule(p_inv: &DMatrix<f64>, c: f64, p: f64) -> f64 {
    AlphaSchedule { c, p }.value(p_inv.symmetric_eigenvalues().min())
}

fn sgn(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

fn pilot_from(theta_ls: &DVector<f64>, lambda_min: f64, lambda_max: f64) -> DVector<f64> {
    let bonus = (lambda_max.ln().max(LOG_FLOOR) / lambda_min).sqrt();
    DVector::from_fn(theta_ls.len(), |l, _| theta_ls[l] + sgn(theta_ls[l]) * bonus)
}

/// Pilot estimate: each LS coordinate pushed away from zero by
/// `sqrt(log(lambda_max) / lambda_min)` in its own sign direction (with
/// `sgn(0) = +1`), so `|theta_hat(l)|` is bounded below by the bonus and the
/// penalty weights `alpha / |theta_hat(l)|` stay finite.
pub fn theta_hat(theta_ls: &DVector<f64>, p_inv: &DMatrix<f64>) -> DVector<f64> {
    let eigs = p_inv.symmetric_eigenvalues();
    pilot_from(theta_ls, eigs.min(), eigs.max())
}

/// Unweighted sparse criterion `beta' P_inv beta - 2 q' beta + alpha |beta|_1`
/// (up to a beta-independent constant), used as a regression-test yardstick.
pub fn plain_sparse_objective(
    p_inv: &DMatrix<f64>,
    q: &DVector<f64>,
    alpha: f64,
    beta: &DVector<f64>,
) -> f64 {
    let quad = (beta.transpose() * p_inv * beta)[(0, 0)];
    quad - 2.0 * q.dot(beta) + alpha * beta.iter().map(|b| b.abs()).sum::<f64>()
}

/// The weighted-L1 problem a sensor solves after its LS update: quadratic
/// part straight from `(p_inv, q)`, penalty `gamma_l = alpha / |pilot(l)|`.
/// With `alpha = 0` the weights vanish and the minimizer is exactly the LS
/// estimate.
pub fn assemble_weighted_problem(state: &SensorState, alpha: f64) -> QuadraticL1Problem {
    let m = state.theta_ls.len();
    let gamma = if alpha == 0.0 {
        DVector::zeros(m)
    } else {
        let pilot = pilot_from(&state.theta_ls, state.lambda_min, state.lambda_max);
        DVector::from_fn(m, |l, _| alpha / pilot[l].abs())
    };
    QuadraticL1Problem {
        psi: state.p_inv.clone(),
        q: state.q.clone(),
        gamma,
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let mt = m.transpose();
    (m + mt) * 0.5
}

fn spd_solve(i: usize, p_inv: &DMatrix<f64>, q: &DVector<f64>) -> Result<DVector<f64>> {
    match p_inv.clone().cholesky() {
        Some(chol) => Ok(chol.solve(q)),
        None => {
            let eigs = p_inv.symmetric_eigenvalues();
            Err(Error::Numerical(format!(
                "sensor {}: information matrix lost positive definiteness \
                 (lambda_min {:.3e}, lambda_max {:.3e})",
                i + 1,
                eigs.min(),
                eigs.max()
            )))
        }
    }
}

/// Start every sensor from the same prior: `P_inv = P0^-1`, `q = P0^-1 theta0`
/// (so the implied LS estimate at t = 0 is `theta0`), `xi = theta0`, `t = 0`.
pub fn init_state(n: usize, p0: &DMatrix<f64>, theta0: &DVector<f64>) -> Result<NetworkState> {
    let m = theta0.len();
    if n == 0 || m == 0 {
        return Err(Error::Config(format!(
            "init: need at least one sensor and one coordinate (n = {n}, m = {m})"
        )));
    }
    if p0.nrows() != m || p0.ncols() != m {
        return Err(Error::Config(format!(
            "init: P0 is {}x{}, expected {m}x{m}",
            p0.nrows(),
            p0.ncols()
        )));
    }
    let chol = p0.clone().cholesky().ok_or_else(|| {
        Error::Config("init: initial covariance P0 must be positive definite".into())
    })?;
    let p_inv = symmetrize(chol.inverse());
    let q = &p_inv * theta0;
    let eigs = p_inv.symmetric_eigenvalues();
    let sensor = SensorState {
        p_inv,
        q,
        theta_ls: theta0.clone(),
        xi: theta0.clone(),
        alpha: 0.0,
        lambda_min: eigs.min(),
        lambda_max: eigs.max(),
    };
    Ok(NetworkState {
        sensors: vec![sensor; n],
        t: 0,
    })
}

/// One synchronous consensus least-squares round. `obs[j]` is sensor j's
/// `(phi, y)` for this round. Every sensor mixes its neighbors'
/// innovation-augmented information pairs with its consensus weights, then
/// re-solves for its LS estimate. Sparse fields (`xi`, `alpha`) carry over
/// unchanged; they belong to [`sparse_round`].
pub fn dls_round(
    net: &NetworkState,
    g: &NetworkGraph,
    obs: &[(DVector<f64>, f64)],
) -> Result<NetworkState> {
    let n = net.n();
    let m = net.m();
    if g.n() != n {
        return Err(Error::Config(format!(
            "round: graph has {} nodes but the network has {n} sensors",
            g.n()
        )));
    }
    if obs.len() != n {
        return Err(Error::Config(format!(
            "round: got {} observations for {n} sensors",
            obs.len()
        )));
    }
    for (j, (phi, _)) in obs.iter().enumerate() {
        if phi.len() != m {
            return Err(Error::Config(format!(
                "round: sensor {} regressor has dimension {}, expected {m}",
                j + 1,
                phi.len()
            )));
        }
    }

    // Innovation-augmented information pairs, computed once per sensor from
    // the immutable previous-round snapshot.
    let augmented: Vec<(DMatrix<f64>, DVector<f64>)> = (0..n)
        .map(|j| {
            let (phi, y) = &obs[j];
            let p = &net.sensors[j].p_inv + phi * phi.transpose();
            let q = &net.sensors[j].q + phi * *y;
            (p, q)
        })
        .collect();

    let mut sensors = Vec::with_capacity(n);
    for i in 0..n {
        let mut p = DMatrix::<f64>::zeros(m, m);
        let mut q = DVector::<f64>::zeros(m);
        // Neighborhoods are sorted, so the floating-point summation order is
        // fixed and results are bit-reproducible.
        for &j in g.neighborhood(i) {
            let w = g.weight(i, j);
            p += w * &augmented[j].0;
            q += w * &augmented[j].1;
        }
        let p = symmetrize(p);
        let theta_ls = spd_solve(i, &p, &q)?;
        debug_assert!(
            (&p * &theta_ls - &q).norm() <= 1e-8 * q.norm().max(1.0),
            "normal-equation residual too large at sensor {i}"
        );
        let eigs = p.symmetric_eigenvalues();
        sensors.push(SensorState {
            p_inv: p,
            q,
            theta_ls,
            xi: net.sensors[i].xi.clone(),
            alpha: net.sensors[i].alpha,
            lambda_min: eigs.min(),
            lambda_max: eigs.max(),
        });
    }
    Ok(NetworkState {
        sensors,
        t: net.t + 1,
    })
}

/// One solved sparse subproblem, kept around when tracing is requested.
#[derive(Clone, Debug)]
pub struct SensorSolve {
    pub sensor: usize,
    pub problem: QuadraticL1Problem,
    pub report: SolveReport,
}

/// One full sparse round: the consensus LS update followed by each sensor's
/// weighted-L1 solve, warm-started from its previous sparse estimate.
pub fn sparse_round(
    net: &NetworkState,
    g: &NetworkGraph,
    obs: &[(DVector<f64>, f64)],
    sched: &AlphaSchedule,
    opts: &SolveOptions,
) -> Result<NetworkState> {
    sparse_round_traced(net, g, obs, sched, opts, None)
}

/// [`sparse_round`] with an optional trace sink for debugging dumps.
pub fn sparse_round_traced(
    net: &NetworkState,
    g: &NetworkGraph,
    obs: &[(DVector<f64>, f64)],
    sched: &AlphaSchedule,
    opts: &SolveOptions,
    mut trace: Option<&mut Vec<SensorSolve>>,
) -> Result<NetworkState> {
    let mut next = dls_round(net, g, obs)?;
    for i in 0..next.n() {
        let alpha = sched.value(next.sensors[i].lambda_min);
        let problem = assemble_weighted_problem(&next.sensors[i], alpha);
        let report = solver::coordinate_descent(&problem, &net.sensors[i].xi, opts);
        if !report.converged {
            return Err(Error::Numerical(format!(
                "sensor {}: sparse solve did not converge within {} sweeps \
                 (kkt residual {:.3e})",
                i + 1,
                report.iterations,
                report.kkt_residual
            )));
        }
        next.sensors[i].alpha = alpha;
        next.sensors[i].xi = report.beta.clone();
        if let Some(sink) = trace.as_deref_mut() {
            sink.push(SensorSolve {
                sensor: i,
                problem,
                report,
            });
        }
    }
    Ok(next)
}
