//! Ledger correctness against a from-scratch reconstruction of the delayed
//! window Gram.

use dsls::metrics::ExcitationLedger;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// The incrementally maintained window must match an explicit assembly of
/// `sum_j P0_inv_j + sum_j sum_{k <= t - D_G + 1} phi phi'` at every round.
#[test]
fn incremental_window_matches_scratch_assembly() {
    let n = 3;
    let m = 4;
    let d_g = 3;
    let mut rng = ChaCha12Rng::seed_from_u64(31);
    let p0_invs: Vec<DMatrix<f64>> =
        (0..n).map(|i| DMatrix::identity(m, m) * (1.0 + i as f64 * 0.5)).collect();
    let mut ledger = ExcitationLedger::new(&p0_invs, d_g);

    let mut history: Vec<Vec<DVector<f64>>> = Vec::new();
    for t in 1..=50usize {
        let phis: Vec<DVector<f64>> = (0..n)
            .map(|_| DVector::from_fn(m, |_, _| rng.random::<f64>() * 2.0 - 1.0))
            .collect();
        history.push(phis.clone());
        ledger.update(&phis);

        let mut scratch = DMatrix::<f64>::zeros(m, m);
        for p in &p0_invs {
            scratch += p;
        }
        // Rounds are 1-based here; the window admits rounds k <= t - d_g + 1.
        let cutoff = t as i64 - d_g as i64 + 1;
        for (k, round) in history.iter().enumerate() {
            if (k + 1) as i64 <= cutoff {
                for phi in round {
                    scratch += phi * phi.transpose();
                }
            }
        }
        let drift = (ledger.window_gram() - &scratch).norm();
        assert!(drift <= 1e-9, "window drift {drift} at t = {t}");
        let lambda_scratch = scratch.symmetric_eigenvalues().min();
        assert!(
            (ledger.lambda_window_min() - lambda_scratch).abs() <= 1e-9,
            "eigenvalue drift at t = {t}"
        );

        // r is prior mass plus every squared norm seen so far, no delay.
        let expect_r = p0_invs
            .iter()
            .map(|p| p.symmetric_eigenvalues().max())
            .fold(f64::NEG_INFINITY, f64::max)
            + history
                .iter()
                .flat_map(|round| round.iter().map(|phi| phi.norm_squared()))
                .sum::<f64>();
        assert!((ledger.r() - expect_r).abs() <= 1e-9 * (1.0 + expect_r));
    }
}

/// Solo Grams ingest immediately (no diffusion delay) and track only the
/// sensor's own regressors.
#[test]
fn solo_grams_are_per_sensor_and_undelayed() {
    let m = 2;
    let p0_invs = vec![DMatrix::identity(m, m); 2];
    let mut ledger = ExcitationLedger::new(&p0_invs, 3);
    let e1 = DVector::from_row_slice(&[1.0, 0.0]);
    let e2 = DVector::from_row_slice(&[0.0, 1.0]);
    for _ in 0..4 {
        ledger.update(&[e1.clone(), e2.clone()]);
    }
    // Sensor 0 saw only e1: its Gram is diag(5, 1), lambda_min = 1. Sensor 1
    // symmetric. Meanwhile the delayed network window holds rounds 1..=2.
    for lam in ledger.solo_lambda_min() {
        assert!((lam - 1.0).abs() <= 1e-12);
    }
    assert_eq!(ledger.window_gram()[(0, 0)], 4.0);
    assert_eq!(ledger.window_gram()[(1, 1)], 4.0);
}
