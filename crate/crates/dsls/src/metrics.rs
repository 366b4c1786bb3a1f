//! Diagnostics: estimation errors, cumulative regret, excitation scalars,
//! the cooperative excitation ratio, the error-bound monitor, and zero-set
//! agreement.
//!
//! The central object is [`ExcitationLedger`], which tracks two quantities
//! as rounds arrive: the excitation mass `r_t` (prior eigenvalue plus the
//! running sum of all squared regressor norms across the network) and the
//! smallest eigenvalue of the *delayed* network Gram window — regressors only
//! enter the window once they are old enough (`k <= t - D_G + 1`, with `D_G`
//! the graph diameter) to have diffused to every sensor through consensus.

use crate::estimator::NetworkState;
use crate::model::TrueParameter;
use nalgebra::{DMatrix, DVector};
use std::collections::VecDeque;

/// Running excitation quantities for one simulated run.
#[derive(Clone, Debug)]
pub struct ExcitationLedger {
    r: f64,
    window_gram: DMatrix<f64>,
    lambda_window_min: f64,
    d_g: usize,
    /// Rounds not yet old enough for the window (depth `d_g - 1`).
    pending: VecDeque<Vec<DVector<f64>>>,
    /// Per-sensor own Gram (prior plus the sensor's own regressors only),
    /// with no diffusion delay; diagnoses single-sensor identifiability.
    solo_gram: Vec<DMatrix<f64>>,
    solo_lambda_min: Vec<f64>,
}

impl ExcitationLedger {
    /// `p0_invs[i]` is sensor i's initial information matrix; `d_g` is the
    /// graph diameter (pass 1 for a single sensor or a cooperation-free
    /// topology, where the window has no delay).
    pub fn new(p0_invs: &[DMatrix<f64>], d_g: usize) -> Self {
        assert!(!p0_invs.is_empty());
        let m = p0_invs[0].nrows();
        let r = p0_invs
            .iter()
            .map(|p| p.symmetric_eigenvalues().max())
            .fold(f64::NEG_INFINITY, f64::max);
        let mut window_gram = DMatrix::<f64>::zeros(m, m);
        for p in p0_invs {
            window_gram += p;
        }
        let lambda_window_min = window_gram.symmetric_eigenvalues().min();
        let solo_lambda_min = p0_invs
            .iter()
            .map(|p| p.symmetric_eigenvalues().min())
            .collect();
        Self {
            r,
            window_gram,
            lambda_window_min,
            d_g: d_g.max(1),
            pending: VecDeque::new(),
            solo_gram: p0_invs.to_vec(),
            solo_lambda_min,
        }
    }

    /// Fold in one round of regressors (`phis[i]` from sensor i). `r` and the
    /// solo Grams update immediately; the network window only ingests the
    /// round once it has aged `d_g - 1` rounds.
    pub fn update(&mut self, phis: &[DVector<f64>]) {
        debug_assert_eq!(phis.len(), self.solo_gram.len());
        let r_before = self.r;
        let lambda_before = self.lambda_window_min;

        for (i, phi) in phis.iter().enumerate() {
            self.r += phi.norm_squared();
            self.solo_gram[i] += phi * phi.transpose();
            self.solo_lambda_min[i] = self.solo_gram[i].symmetric_eigenvalues().min();
        }
        self.pending.push_back(phis.to_vec());
        if self.pending.len() >= self.d_g {
            let aged = self.pending.pop_front().expect("non-empty");
            for phi in &aged {
                self.window_gram += phi * phi.transpose();
            }
            // Recomputed from scratch each time; m is small and this keeps
            // the value exactly tied to the assembled window.
            self.lambda_window_min = self.window_gram.symmetric_eigenvalues().min();
        }

        debug_assert!(self.r >= r_before);
        debug_assert!(self.lambda_window_min >= lambda_before - 1e-9 * (1.0 + lambda_before));
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn lambda_window_min(&self) -> f64 {
        self.lambda_window_min
    }

    pub fn window_gram(&self) -> &DMatrix<f64> {
        &self.window_gram
    }

    pub fn coop_ratio(&self) -> f64 {
        coop_ratio(self.r, self.lambda_window_min)
    }

    pub fn solo_lambda_min(&self) -> &[f64] {
        &self.solo_lambda_min
    }
}

/// Cooperative excitation ratio `(r / lambda) * sqrt(log(r) / lambda)`.
/// The whole-network identification machinery works precisely when this
/// trends to zero. Defensive conventions: `lambda <= 0` returns `+inf`, and
/// the log is clamped at zero for `r < 1`.
pub fn coop_ratio(r: f64, lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return f64::INFINITY;
    }
    (r / lambda) * (r.ln().max(0.0) / lambda).sqrt()
}

/// Error-bound expression `alpha / lambda_min + sqrt(log(r) / lambda_min)`
/// (the unknown multiplicative constant is handled by ratio tests, not here).
pub fn error_bound(lambda_min: f64, alpha: f64, r: f64) -> f64 {
    if lambda_min <= 0.0 {
        return f64::INFINITY;
    }
    alpha / lambda_min + (r.ln().max(0.0) / lambda_min).sqrt()
}

/// One round's regret increment `sum_i (phi_i' (xi_i - theta))^2`, where
/// `net` must be the state from *before* this round: the predictor is scored
/// with the estimate it held before seeing `y`.
pub fn regret_increment(net: &NetworkState, phis: &[DVector<f64>], theta: &DVector<f64>) -> f64 {
    debug_assert_eq!(phis.len(), net.n());
    net.sensors
        .iter()
        .zip(phis)
        .map(|(s, phi)| {
            let e = phi.dot(&s.xi) - phi.dot(theta);
            e * e
        })
        .sum()
}

/// Per sensor: does the estimated zero set equal the true one exactly?
pub fn zero_set_agreement(net: &NetworkState, truth: &TrueParameter) -> Vec<bool> {
    let target = truth.zero_set();
    net.sensors.iter().map(|s| s.zero_set() == target).collect()
}

/// Per-round diagnostics recorded by the simulation loop. Row `t` (1-based)
/// describes the state after `t` rounds.
#[derive(Clone, Debug)]
pub struct RunRow {
    pub t: usize,
    /// Cumulative regret up to and including round `t`.
    pub regret: f64,
    pub r: f64,
    pub lambda_window_min: f64,
    pub coop_ratio: f64,
    /// Per sensor `|theta_ls - theta*|`.
    pub ls_err: Vec<f64>,
    /// Per sensor `|xi - theta*|`.
    pub sparse_err: Vec<f64>,
    /// Per sensor zero-set agreement with the truth.
    pub zero_ok: Vec<bool>,
    /// Per sensor `sparse_err / error_bound(lambda_min, alpha, r)`.
    pub bound_ratio: Vec<f64>,
}

/// Everything recorded for one seeded run.
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub rows: Vec<RunRow>,
    /// Per sensor: earliest `t` such that the zero set agrees with the truth
    /// at every round from `t` through the horizon; `None` if it still
    /// disagrees at the horizon.
    pub t0: Vec<Option<usize>>,
    /// Final sparse estimates at the horizon.
    pub final_xi: Vec<DVector<f64>>,
}

/// Stable-agreement onset per sensor (see [`RunRecord::t0`]).
pub fn first_agreement_times(rows: &[RunRow], n: usize) -> Vec<Option<usize>> {
    (0..n)
        .map(|i| {
            let mut t0 = None;
            for row in rows.iter().rev() {
                if row.zero_ok[i] {
                    t0 = Some(row.t);
                } else {
                    break;
                }
            }
            t0
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::init_state;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::E;

    fn e1(m: usize) -> DVector<f64> {
        let mut v = DVector::zeros(m);
        v[0] = 1.0;
        v
    }

    #[test]
    fn ledger_before_any_data() {
        let l = ExcitationLedger::new(&[DMatrix::identity(2, 2)], 1);
        assert_eq!(l.r(), 1.0);
        assert_eq!(l.lambda_window_min(), 1.0);
        assert_eq!(l.solo_lambda_min(), &[1.0]);
    }

    #[test]
    fn two_sensor_single_round_window() {
        // n = 2, P0 = I (m = 2), D_G = 1, both sensors see phi = e1:
        // r = 1 + 2, window = 2I + diag(2, 0) = diag(4, 2).
        let p0 = vec![DMatrix::identity(2, 2); 2];
        let mut l = ExcitationLedger::new(&p0, 1);
        l.update(&[e1(2), e1(2)]);
        assert_abs_diff_eq!(l.r(), 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(l.lambda_window_min(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(l.window_gram()[(0, 0)], 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(l.window_gram()[(1, 1)], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn window_delays_by_diameter() {
        let p0 = vec![DMatrix::identity(2, 2); 1];
        let mut l = ExcitationLedger::new(&p0, 3);
        // Rounds 1 and 2: r moves immediately, the window does not.
        l.update(&[e1(2)]);
        l.update(&[e1(2)]);
        assert_abs_diff_eq!(l.r(), 3.0, epsilon = 1e-14);
        assert_eq!(l.window_gram()[(0, 0)], 1.0);
        // Round 3 ingests exactly round 1 (k <= t - D_G + 1 = 1).
        l.update(&[e1(2)]);
        assert_eq!(l.window_gram()[(0, 0)], 2.0);
        assert_eq!(l.window_gram()[(1, 1)], 1.0);
    }

    #[test]
    fn single_sensor_window_has_no_delay() {
        // With D_G = 1 the window after round t holds rounds 1..=t, i.e. the
        // plain single-sensor Gram.
        let p0 = vec![DMatrix::identity(2, 2)];
        let mut l = ExcitationLedger::new(&p0, 1);
        let phis = [e1(2), DVector::from_row_slice(&[0.5, -1.0])];
        let mut manual = DMatrix::identity(2, 2);
        for phi in &phis {
            l.update(&[phi.clone()]);
            manual += phi * phi.transpose();
        }
        assert_abs_diff_eq!((l.window_gram() - &manual).norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(
            l.lambda_window_min(),
            manual.symmetric_eigenvalues().min(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(l.solo_lambda_min()[0], l.lambda_window_min(), epsilon = 1e-12);
    }

    #[test]
    fn coop_ratio_closed_forms() {
        assert_abs_diff_eq!(coop_ratio(E, 1.0), E, epsilon = 1e-12);
        assert_abs_diff_eq!(coop_ratio(E, E * E), E.powi(-2), epsilon = 1e-12);
        assert_eq!(coop_ratio(E, 0.0), f64::INFINITY);
        assert_eq!(coop_ratio(0.5, 1.0), 0.0); // log clamped at zero
    }

    #[test]
    fn error_bound_closed_forms() {
        // alpha = 0, lambda_min = log r: bound = sqrt(1) = 1.
        let r = E * E;
        assert_abs_diff_eq!(error_bound(2.0, 0.0, r), 1.0, epsilon = 1e-12);
        // alpha = 4, lambda_min = 2, r = e^2: 2 + 1 = 3.
        assert_abs_diff_eq!(error_bound(2.0, 4.0, r), 3.0, epsilon = 1e-12);
        assert_eq!(error_bound(0.0, 1.0, r), f64::INFINITY);
    }

    #[test]
    fn regret_increment_closed_forms() {
        let theta = DVector::from_row_slice(&[0.8, 1.6, 0.0]);
        let mut net = init_state(2, &DMatrix::identity(3, 3), &theta).unwrap();
        let phis = vec![e1(3), DVector::from_row_slice(&[1.0, 2.0, 3.0])];
        // Exact estimates: zero increment.
        assert_eq!(regret_increment(&net, &phis, &theta), 0.0);
        // Perturb sensor 0 by +0.5 on the first coordinate, phi = e1: 0.25.
        net.sensors[0].xi[0] += 0.5;
        assert_abs_diff_eq!(
            regret_increment(&net, &phis[..], &theta),
            0.25,
            epsilon = 1e-14
        );
    }

    #[test]
    fn zero_set_agreement_examples() {
        let truth = TrueParameter::new(DVector::from_row_slice(&[0.8, 1.6, 0.0, 0.0, 0.0]));
        let mut net = init_state(2, &DMatrix::identity(5, 5), truth.theta()).unwrap();
        assert_eq!(zero_set_agreement(&net, &truth), vec![true, true]);
        // Sensor 1 zeroes a live coordinate: its set becomes {2,3,4,5} != H*.
        net.sensors[1].xi[1] = 0.0;
        assert_eq!(zero_set_agreement(&net, &truth), vec![true, false]);
    }

    #[test]
    fn monotone_quantities() {
        let p0 = vec![DMatrix::identity(3, 3); 2];
        let mut l = ExcitationLedger::new(&p0, 2);
        let mut prev_r = l.r();
        let mut prev_lambda = l.lambda_window_min();
        for k in 0..20 {
            let phi = DVector::from_fn(3, |j, _| ((k + j) as f64 * 0.37).sin());
            l.update(&[phi.clone(), phi]);
            assert!(l.r() >= prev_r);
            assert!(l.lambda_window_min() >= prev_lambda - 1e-12);
            prev_r = l.r();
            prev_lambda = l.lambda_window_min();
        }
    }

    #[test]
    fn first_agreement_scans_for_stable_suffix() {
        let row = |t: usize, oks: [bool; 2]| RunRow {
            t,
            regret: 0.0,
            r: 1.0,
            lambda_window_min: 1.0,
            coop_ratio: 1.0,
            ls_err: vec![0.0; 2],
            sparse_err: vec![0.0; 2],
            zero_ok: oks.to_vec(),
            bound_ratio: vec![0.0; 2],
        };
        // Sensor 0 agrees from t = 3 onward (an early flicker at t = 1 does
        // not count); sensor 1 never stabilizes.
        let rows = vec![
            row(1, [true, false]),
            row(2, [false, true]),
            row(3, [true, false]),
            row(4, [true, false]),
        ];
        assert_eq!(first_agreement_times(&rows, 2), vec![Some(3), None]);
        // All-true suffix from the start.
        let rows = vec![row(1, [true, true]), row(2, [true, true])];
        assert_eq!(first_agreement_times(&rows, 2), vec![Some(1), Some(1)]);
    }
}
