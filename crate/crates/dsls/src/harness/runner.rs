//! Experiment orchestration: resolve a config into runnable pieces, simulate
//! seeded runs (optionally in parallel across repeats), aggregate, and emit
//! CSV artifacts.
//!
//! Determinism contract: a run is fully determined by `(config, master seed,
//! repeat index)`. Repeats are independent (their seeds are derived, their
//! substreams indexed), rounds within a run are sequential, and files are
//! written after all parallel work completes — so results are byte-identical
//! for any worker count.

use crate::error::{Error, Result};
use crate::estimator::{
    dls_round, init_state, sparse_round_traced, AlphaSchedule, SensorSolve,
};
use crate::graph::NetworkGraph;
use crate::harness::config::{ExperimentConfig, Mode, NoiseKind, RegressorConfig};
use crate::harness::csvout;
use crate::metrics::{
    coop_ratio, error_bound, first_agreement_times, regret_increment, zero_set_agreement,
    ExcitationLedger, RunRecord, RunRow,
};
use crate::model::{
    load_replay, single_coordinate_regressor, NoiseDriver, RegressorDriver, SensorStream,
    TrueParameter,
};
use crate::rng::derive_seed;
use crate::solver::SolveOptions;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use std::path::Path;

/// Config resolved into simulation-ready pieces (graph built, prior formed,
/// replay data loaded). Built once per experiment, shared across repeats.
struct Resolved {
    graph: NetworkGraph,
    d_g: usize,
    truth: TrueParameter,
    p0: DMatrix<f64>,
    theta0: DVector<f64>,
    sched: AlphaSchedule,
    opts: SolveOptions,
    regressor: RegressorConfig,
    noise_kind: NoiseKind,
    noise_variance: f64,
    horizon: usize,
    /// Per-sensor replay rounds, when the regressor source is a file.
    replay: Option<Vec<Vec<(DVector<f64>, f64)>>>,
    /// Smallest entry of `A^D_G`; drives a debug-build excitation check.
    /// Absent in non-cooperative mode, where no diffusion happens.
    min_mixing_gain: Option<f64>,
}

fn resolve(cfg: &ExperimentConfig) -> Result<Resolved> {
    cfg.validate()?;
    let n = cfg.graph.n;
    let m = cfg.model.theta.len();

    let (graph, d_g) = match cfg.mode {
        Mode::NonCooperative => (NetworkGraph::identity(n)?, 1),
        Mode::Distributed | Mode::LsOnly => {
            let g = cfg.graph.build()?;
            if !g.is_connected() {
                return Err(Error::Config(
                    "graph: the distributed recursions require a connected \
                     communication graph"
                        .into(),
                ));
            }
            let d = g.diameter()?.max(1);
            (g, d)
        }
    };
    let min_mixing_gain = match cfg.mode {
        Mode::NonCooperative => None,
        _ => Some(graph.min_power_entry(d_g)),
    };

    let replay = match &cfg.model.regressor {
        RegressorConfig::Replay { path } => {
            let data = load_replay(path, n, m)?;
            if data[0].len() < cfg.horizon {
                return Err(Error::Config(format!(
                    "model.regressor.path: replay holds {} rounds but horizon is {}",
                    data[0].len(),
                    cfg.horizon
                )));
            }
            Some(data)
        }
        _ => None,
    };

    let theta0 = cfg
        .estimator
        .theta0
        .clone()
        .map(DVector::from_vec)
        .unwrap_or_else(|| DVector::from_element(m, 1.0));
    let alpha_c = match cfg.mode {
        Mode::LsOnly => 0.0,
        _ => cfg.estimator.alpha_c,
    };

    Ok(Resolved {
        graph,
        d_g,
        truth: TrueParameter::new(DVector::from_vec(cfg.model.theta.clone())),
        p0: DMatrix::identity(m, m) * cfg.estimator.p0_scale,
        theta0,
        sched: AlphaSchedule {
            c: alpha_c,
            p: cfg.estimator.alpha_p,
        },
        opts: SolveOptions {
            tol: cfg.estimator.solver_tol,
            max_iters: cfg.estimator.solver_max_iters,
            kkt_tol_rel: cfg.estimator.kkt_tol_rel,
        },
        regressor: cfg.model.regressor.clone(),
        noise_kind: cfg.model.noise.kind,
        noise_variance: cfg.model.noise.variance,
        horizon: cfg.horizon,
        replay,
        min_mixing_gain,
    })
}

fn build_streams(res: &Resolved, run_seed: u64) -> Result<Vec<SensorStream>> {
    let n = res.graph.n();
    let m = res.truth.dim();
    (0..n)
        .map(|i| {
            let driver = match &res.regressor {
                RegressorConfig::StateSpace {
                    a_scale,
                    eps_variance,
                } => RegressorDriver::StateSpace(single_coordinate_regressor(
                    m,
                    i % m,
                    *a_scale,
                    *eps_variance,
                )?),
                RegressorConfig::IidGaussian { variance } => RegressorDriver::IidGaussian {
                    m,
                    std: variance.sqrt(),
                },
                RegressorConfig::Replay { .. } => RegressorDriver::Replay {
                    rows: res.replay.as_ref().expect("loaded in resolve")[i].clone(),
                    cursor: 0,
                },
            };
            let noise = match res.noise_kind {
                NoiseKind::Gaussian => NoiseDriver::gaussian(res.noise_variance)?,
                NoiseKind::BoundedUniform => NoiseDriver::bounded_uniform(res.noise_variance)?,
            };
            Ok(SensorStream::new(driver, noise, run_seed, i))
        })
        .collect()
}

fn simulate_run(
    res: &Resolved,
    run_seed: u64,
    mut trace: Option<&mut Vec<(usize, SensorSolve)>>,
) -> Result<RunRecord> {
    let n = res.graph.n();
    let mut streams = build_streams(res, run_seed)?;
    let mut net = init_state(n, &res.p0, &res.theta0)?;
    let mut ledger = ExcitationLedger::new(&vec![net.sensors[0].p_inv.clone(); n], res.d_g);
    let mut regret = 0.0;
    let mut rows = Vec::with_capacity(res.horizon);

    for round in 0..res.horizon {
        let t = round + 1;
        let phis: Vec<DVector<f64>> = streams
            .iter_mut()
            .map(|s| s.next_phi())
            .collect::<Result<_>>()?;

        // Regret is charged against the estimates held before seeing y_t.
        let increment = regret_increment(&net, &phis, res.truth.theta());
        debug_assert!(increment >= 0.0);
        regret += increment;

        ledger.update(&phis);

        let obs: Vec<(DVector<f64>, f64)> = streams
            .iter_mut()
            .zip(phis)
            .map(|(s, phi)| {
                let y = s.observe(&res.truth, &phi);
                (phi, y)
            })
            .collect();

        let mut round_trace = trace.as_deref_mut().map(|_| Vec::new());
        net = sparse_round_traced(
            &net,
            &res.graph,
            &obs,
            &res.sched,
            &res.opts,
            round_trace.as_mut(),
        )?;
        if let (Some(sink), Some(rt)) = (trace.as_deref_mut(), round_trace) {
            sink.extend(rt.into_iter().map(|s| (t, s)));
        }

        #[cfg(debug_assertions)]
        if let Some(a_min) = res.min_mixing_gain {
            // Diffused-excitation floor: every sensor's information matrix
            // dominates the aged network window scaled by the smallest
            // D_G-step mixing weight. Spot-checked every 10 rounds.
            if t >= res.d_g && t % 10 == 0 {
                let floor = a_min * ledger.lambda_window_min();
                for (i, s) in net.sensors.iter().enumerate() {
                    debug_assert!(
                        s.lambda_min >= floor - 1e-9 * (1.0 + floor),
                        "sensor {i} lambda_min {} below mixing floor {floor} at t = {t}",
                        s.lambda_min
                    );
                }
            }
        }

        let r = ledger.r();
        let mut ls_err = Vec::with_capacity(n);
        let mut sparse_err = Vec::with_capacity(n);
        let mut bound_ratio = Vec::with_capacity(n);
        for s in &net.sensors {
            let le = (&s.theta_ls - res.truth.theta()).norm();
            let se = (&s.xi - res.truth.theta()).norm();
            let bound = error_bound(s.lambda_min, s.alpha, r);
            ls_err.push(le);
            sparse_err.push(se);
            bound_ratio.push(if bound > 0.0 { se / bound } else { f64::INFINITY });
        }
        if let Some(prev) = rows.last() {
            let prev: &RunRow = prev;
            debug_assert!(regret >= prev.regret);
        }
        rows.push(RunRow {
            t,
            regret,
            r,
            lambda_window_min: ledger.lambda_window_min(),
            coop_ratio: ledger.coop_ratio(),
            ls_err,
            sparse_err,
            zero_ok: zero_set_agreement(&net, &res.truth),
            bound_ratio,
        });
    }

    let t0 = first_agreement_times(&rows, n);
    let final_xi = net.sensors.iter().map(|s| s.xi.clone()).collect();
    Ok(RunRecord { rows, t0, final_xi })
}

/// Simulate one repeat of the experiment (no files written).
pub fn simulate(cfg: &ExperimentConfig, repeat: u64) -> Result<RunRecord> {
    let res = resolve(cfg)?;
    simulate_run(&res, derive_seed(cfg.seed, repeat), None)
}

/// Re-run one repeat capturing every sensor's solved subproblem per round.
pub fn solver_trace(cfg: &ExperimentConfig, repeat: u64) -> Result<Vec<(usize, SensorSolve)>> {
    let res = resolve(cfg)?;
    let mut trace = Vec::new();
    simulate_run(&res, derive_seed(cfg.seed, repeat), Some(&mut trace))?;
    Ok(trace)
}

/// Cross-repeat aggregate for one round index.
#[derive(Clone, Debug)]
pub struct SummaryRow {
    pub t: usize,
    /// Mean/std over all (repeat, sensor) pairs of `|theta_ls - theta*|`.
    pub ls_err_mean: f64,
    pub ls_err_std: f64,
    pub sparse_err_mean: f64,
    pub sparse_err_std: f64,
    /// Mean/std over repeats of cumulative regret.
    pub regret_mean: f64,
    pub regret_std: f64,
    pub coop_ratio_mean: f64,
    /// Fraction of (repeat, sensor) pairs whose zero set matches the truth.
    pub zero_agree_frac: f64,
    /// How many (repeat, sensor) pairs first became stably correct at this t.
    pub t0_count: usize,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub records: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
}

fn mean_std(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let vals: Vec<f64> = values.collect();
    if vals.is_empty() {
        return (0.0, 0.0);
    }
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64;
    (mean, var.sqrt())
}

fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    let horizon = records[0].rows.len();
    let mut out = Vec::with_capacity(horizon);
    for k in 0..horizon {
        let t = records[0].rows[k].t;
        let (ls_err_mean, ls_err_std) =
            mean_std(records.iter().flat_map(|r| r.rows[k].ls_err.iter().copied()));
        let (sparse_err_mean, sparse_err_std) = mean_std(
            records
                .iter()
                .flat_map(|r| r.rows[k].sparse_err.iter().copied()),
        );
        let (regret_mean, regret_std) = mean_std(records.iter().map(|r| r.rows[k].regret));
        let (coop_ratio_mean, _) = mean_std(records.iter().map(|r| r.rows[k].coop_ratio));
        let pairs: usize = records.iter().map(|r| r.rows[k].zero_ok.len()).sum();
        let agree: usize = records
            .iter()
            .map(|r| r.rows[k].zero_ok.iter().filter(|&&b| b).count())
            .sum();
        let t0_count = records
            .iter()
            .flat_map(|r| r.t0.iter())
            .filter(|t0| **t0 == Some(t))
            .count();
        out.push(SummaryRow {
            t,
            ls_err_mean,
            ls_err_std,
            sparse_err_mean,
            sparse_err_std,
            regret_mean,
            regret_std,
            coop_ratio_mean,
            zero_agree_frac: agree as f64 / pairs as f64,
            t0_count,
        });
    }
    out
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    if workers == 0 {
        return Err(Error::Config("workers: must be >= 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("workers: {e}")))
}

/// Run all repeats, aggregate, and (optionally) write `run_<s>.csv` per
/// repeat plus `summary.csv` into `out_dir`.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    out_dir: Option<&Path>,
    workers: usize,
) -> Result<ExperimentOutput> {
    let res = resolve(cfg)?;
    let pool = pool(workers)?;
    let records: Vec<RunRecord> = pool.install(|| {
        (0..cfg.repeats as u64)
            .into_par_iter()
            .map(|s| simulate_run(&res, derive_seed(cfg.seed, s), None))
            .collect::<Result<Vec<_>>>()
    })?;
    let summary = summarize(&records);
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        for (s, record) in records.iter().enumerate() {
            csvout::write_run_csv(&dir.join(format!("run_{s}.csv")), record, res.graph.n())?;
        }
        csvout::write_summary_csv(&dir.join("summary.csv"), &summary)?;
    }
    Ok(ExperimentOutput { records, summary })
}

#[derive(Clone, Debug)]
pub struct CompareRow {
    pub t: usize,
    pub distributed_err: f64,
    pub non_cooperative_err: f64,
}

#[derive(Clone, Debug)]
pub struct CompareOutput {
    pub rows: Vec<CompareRow>,
    pub distributed: ExperimentOutput,
    pub non_cooperative: ExperimentOutput,
}

/// Run the experiment twice — cooperative and non-cooperative — with the
/// same master seed (hence identical data realizations), and pair up the
/// mean sparse-estimation error curves.
pub fn compare_modes(
    cfg: &ExperimentConfig,
    out_dir: Option<&Path>,
    workers: usize,
) -> Result<CompareOutput> {
    let mut dist_cfg = cfg.clone();
    dist_cfg.mode = Mode::Distributed;
    let mut solo_cfg = cfg.clone();
    solo_cfg.mode = Mode::NonCooperative;

    let distributed = run_experiment(&dist_cfg, None, workers)?;
    let non_cooperative = run_experiment(&solo_cfg, None, workers)?;
    let rows: Vec<CompareRow> = distributed
        .summary
        .iter()
        .zip(&non_cooperative.summary)
        .map(|(d, s)| CompareRow {
            t: d.t,
            distributed_err: d.sparse_err_mean,
            non_cooperative_err: s.sparse_err_mean,
        })
        .collect();
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        csvout::write_compare_csv(&dir.join("compare.csv"), &rows)?;
    }
    Ok(CompareOutput {
        rows,
        distributed,
        non_cooperative,
    })
}

/// One round of excitation diagnostics.
#[derive(Clone, Debug)]
pub struct ExcitationRow {
    pub t: usize,
    pub r: f64,
    pub lambda_window_min: f64,
    pub coop_ratio: f64,
    /// `max_i phi' P phi` with each sensor's own covariance — a boundedness
    /// diagnostic that is logged, never asserted.
    pub phi_p_phi_max: f64,
    pub solo_lambda_min: Vec<f64>,
}

/// Trace the excitation quantities of the *cooperative* topology in the
/// config over one run (repeat 0): total excitation `r`, the delayed window
/// eigenvalue and ratio, and each sensor's solo Gram eigenvalue, which
/// exposes whether any sensor could identify the parameter alone. Errors if
/// the configured graph is disconnected — the whole point of the diagnostic
/// is the network-wide window, which needs a connected graph.
pub fn diagnose_excitation(
    cfg: &ExperimentConfig,
    out_dir: Option<&Path>,
) -> Result<Vec<ExcitationRow>> {
    let mut coop_cfg = cfg.clone();
    coop_cfg.mode = Mode::Distributed;
    let res = resolve(&coop_cfg)?;
    let n = res.graph.n();
    let run_seed = derive_seed(cfg.seed, 0);
    let mut streams = build_streams(&res, run_seed)?;
    let mut net = init_state(n, &res.p0, &res.theta0)?;
    let mut ledger = ExcitationLedger::new(&vec![net.sensors[0].p_inv.clone(); n], res.d_g);
    let mut rows = Vec::with_capacity(res.horizon);

    for round in 0..res.horizon {
        let phis: Vec<DVector<f64>> = streams
            .iter_mut()
            .map(|s| s.next_phi())
            .collect::<Result<_>>()?;
        ledger.update(&phis);
        let obs: Vec<(DVector<f64>, f64)> = streams
            .iter_mut()
            .zip(phis)
            .map(|(s, phi)| {
                let y = s.observe(&res.truth, &phi);
                (phi, y)
            })
            .collect();
        // Only the information-matrix evolution matters here, so the plain
        // LS round suffices.
        net = dls_round(&net, &res.graph, &obs)?;
        let phi_p_phi_max = net
            .sensors
            .iter()
            .zip(&obs)
            .map(|(s, (phi, _))| {
                let x = s
                    .p_inv
                    .clone()
                    .cholesky()
                    .expect("p_inv SPD after a successful round")
                    .solve(phi);
                phi.dot(&x)
            })
            .fold(0.0f64, f64::max);
        rows.push(ExcitationRow {
            t: round + 1,
            r: ledger.r(),
            lambda_window_min: ledger.lambda_window_min(),
            coop_ratio: coop_ratio(ledger.r(), ledger.lambda_window_min()),
            phi_p_phi_max,
            solo_lambda_min: ledger.solo_lambda_min().to_vec(),
        });
    }
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        csvout::write_excitation_csv(&dir.join("excitation.csv"), &rows, n)?;
    }
    Ok(rows)
}
