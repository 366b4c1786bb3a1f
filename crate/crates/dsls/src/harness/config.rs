//! Experiment configuration: a single JSON document describing the graph,
//! the data-generating model, estimator knobs, and the run shape.

use crate::error::{Error, Result};
use crate::graph::NetworkGraph;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub graph: GraphConfig,
    pub model: ModelConfig,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    /// Rounds per run (T).
    pub horizon: usize,
    /// Independent seeded runs (S).
    pub repeats: usize,
    /// Master seed; per-run seeds are derived from it.
    pub seed: u64,
    #[serde(default)]
    pub mode: Mode,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    pub n: usize,
    /// Undirected edges with 1-based node ids.
    #[serde(default)]
    pub edges: Vec<(usize, usize)>,
    /// Weight rule for the consensus matrix; currently only "metropolis".
    #[serde(default = "default_weights")]
    pub weights: String,
    /// Explicit weight matrix (row-major), overriding the rule. Must be
    /// symmetric and doubly stochastic with support on `edges` + diagonal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjacency: Option<Vec<Vec<f64>>>,
}

fn default_weights() -> String {
    "metropolis".into()
}

impl GraphConfig {
    pub fn build(&self) -> Result<NetworkGraph> {
        if let Some(rows) = &self.adjacency {
            if rows.len() != self.n || rows.iter().any(|r| r.len() != self.n) {
                return Err(Error::Config(format!(
                    "graph.adjacency: expected {0}x{0} matrix",
                    self.n
                )));
            }
            let a = nalgebra::DMatrix::from_fn(self.n, self.n, |i, j| rows[i][j]);
            return NetworkGraph::with_adjacency(self.n, &self.edges, a);
        }
        match self.weights.as_str() {
            "metropolis" => NetworkGraph::metropolis(self.n, &self.edges),
            other => Err(Error::Config(format!(
                "graph.weights: unsupported rule {other:?} (only \"metropolis\")"
            ))),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// True parameter; zeros define the target zero set.
    pub theta: Vec<f64>,
    pub noise: NoiseConfig,
    pub regressor: RegressorConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub kind: NoiseKind,
    pub variance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Gaussian,
    /// Uniform on `[-sqrt(3v), sqrt(3v)]`, i.e. parameterized by variance
    /// like the Gaussian.
    BoundedUniform,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegressorConfig {
    /// The reference single-coordinate driver: sensor i runs
    /// `x <- a_scale * x + e_j eps`, `phi = e_j e_j' x` with `j = i mod m`
    /// and `x0 = ones`, so each sensor excites exactly one coordinate.
    StateSpace { a_scale: f64, eps_variance: f64 },
    /// Fully exciting iid Gaussian regressors at every sensor.
    IidGaussian { variance: f64 },
    /// Pre-recorded regressors and observations from a CSV file
    /// (header `t,i,phi_1..phi_m,y`; rows round-major, sensors 1..n).
    Replay { path: PathBuf },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    /// Initial covariance `P0 = p0_scale * I`.
    pub p0_scale: f64,
    /// Initial estimate; defaults to all ones.
    pub theta0: Option<Vec<f64>>,
    /// Penalty schedule `alpha = alpha_c * lambda_min^alpha_p`.
    pub alpha_c: f64,
    pub alpha_p: f64,
    pub solver_tol: f64,
    pub solver_max_iters: usize,
    pub kkt_tol_rel: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            p0_scale: 1.0,
            theta0: None,
            alpha_c: 1.0,
            alpha_p: 0.75,
            solver_tol: 1e-10,
            solver_max_iters: 100_000,
            kkt_tol_rel: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Consensus over the configured graph, sparse penalty on.
    #[default]
    Distributed,
    /// Identity adjacency: every sensor estimates alone (the graph section
    /// is ignored apart from `n`).
    NonCooperative,
    /// Consensus on, penalty off (`alpha = 0`): classical distributed LS.
    LsOnly,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "distributed" => Ok(Mode::Distributed),
            "non_cooperative" => Ok(Mode::NonCooperative),
            "ls_only" => Ok(Mode::LsOnly),
            other => Err(Error::Config(format!(
                "mode: expected distributed | non_cooperative | ls_only, got {other:?}"
            ))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Distributed => "distributed",
            Mode::NonCooperative => "non_cooperative",
            Mode::LsOnly => "ls_only",
        })
    }
}

pub fn ring_edges(n: usize) -> Vec<(usize, usize)> {
    if n <= 1 {
        return Vec::new();
    }
    (1..=n).map(|i| (i, i % n + 1)).collect()
}

/// The built-in reference experiment: six sensors on a Metropolis-weighted
/// ring, five coordinates with two active, growing single-coordinate
/// regressors, Gaussian noise, 200 rounds, 100 repeats.
pub fn default_config() -> ExperimentConfig {
    ExperimentConfig {
        graph: GraphConfig {
            n: 6,
            edges: ring_edges(6),
            weights: default_weights(),
            adjacency: None,
        },
        model: ModelConfig {
            theta: vec![0.8, 1.6, 0.0, 0.0, 0.0],
            noise: NoiseConfig {
                kind: NoiseKind::Gaussian,
                variance: 0.1,
            },
            regressor: RegressorConfig::StateSpace {
                a_scale: 1.1,
                eps_variance: 0.2,
            },
        },
        estimator: EstimatorConfig::default(),
        horizon: 200,
        repeats: 100,
        seed: 42,
        mode: Mode::Distributed,
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.graph.n == 0 {
            return fail("graph.n: must be >= 1".into());
        }
        let m = self.model.theta.len();
        if m == 0 {
            return fail("model.theta: must be non-empty".into());
        }
        if self.model.theta.iter().any(|v| !v.is_finite()) {
            return fail("model.theta: entries must be finite".into());
        }
        if !(self.model.noise.variance >= 0.0) {
            return fail(format!(
                "model.noise.variance: must be >= 0, got {}",
                self.model.noise.variance
            ));
        }
        match &self.model.regressor {
            RegressorConfig::StateSpace {
                a_scale,
                eps_variance,
            } => {
                if !a_scale.is_finite() {
                    return fail("model.regressor.a_scale: must be finite".into());
                }
                if !(*eps_variance >= 0.0) {
                    return fail(format!(
                        "model.regressor.eps_variance: must be >= 0, got {eps_variance}"
                    ));
                }
            }
            RegressorConfig::IidGaussian { variance } => {
                if !(*variance >= 0.0) {
                    return fail(format!(
                        "model.regressor.variance: must be >= 0, got {variance}"
                    ));
                }
            }
            RegressorConfig::Replay { .. } => {}
        }
        let est = &self.estimator;
        if !(est.p0_scale > 0.0 && est.p0_scale.is_finite()) {
            return fail(format!(
                "estimator.p0_scale: must be positive, got {}",
                est.p0_scale
            ));
        }
        if let Some(theta0) = &est.theta0 {
            if theta0.len() != m {
                return fail(format!(
                    "estimator.theta0: length {} does not match model.theta length {m}",
                    theta0.len()
                ));
            }
            if theta0.iter().any(|v| !v.is_finite()) {
                return fail("estimator.theta0: entries must be finite".into());
            }
        }
        if !(est.alpha_c >= 0.0) {
            return fail(format!("estimator.alpha_c: must be >= 0, got {}", est.alpha_c));
        }
        if !(est.alpha_p > 0.5 && est.alpha_p < 1.0) {
            return fail(format!(
                "estimator.alpha_p: must lie in (0.5, 1), got {}",
                est.alpha_p
            ));
        }
        if !(est.solver_tol > 0.0) {
            return fail(format!(
                "estimator.solver_tol: must be > 0, got {}",
                est.solver_tol
            ));
        }
        if est.solver_max_iters == 0 {
            return fail("estimator.solver_max_iters: must be >= 1".into());
        }
        if !(est.kkt_tol_rel > 0.0) {
            return fail(format!(
                "estimator.kkt_tol_rel: must be > 0, got {}",
                est.kkt_tol_rel
            ));
        }
        if self.horizon == 0 {
            return fail("horizon: must be >= 1".into());
        }
        if self.repeats == 0 {
            return fail("repeats: must be >= 1".into());
        }
        // Surface graph construction problems (bad edges, bad adjacency) as
        // config errors up front rather than at run time.
        self.graph.build()?;
        Ok(())
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("config {}: {e}", path.display())))
}

/// Parse a JSON config document held in memory. Parsing only; call
/// [`ExperimentConfig::validate`] before running.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid_and_round_trips() {
        let cfg = default_config();
        cfg.validate().unwrap();
        let json = cfg.to_json_pretty();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        back.validate().unwrap();
        assert_eq!(back.model.theta, vec![0.8, 1.6, 0.0, 0.0, 0.0]);
        assert_eq!(back.horizon, 200);
        assert_eq!(back.repeats, 100);
        assert_eq!(back.mode, Mode::Distributed);
        assert_eq!(back.graph.edges.len(), 6);
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let json = r#"{
            "graph": {"n": 2, "edges": [[1, 2]]},
            "model": {
                "theta": [1.0, 0.0],
                "noise": {"kind": "gaussian", "variance": 0.1},
                "regressor": {"kind": "iid_gaussian", "variance": 1.0}
            },
            "horizon": 10,
            "repeats": 2,
            "seed": 7
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(json).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.mode, Mode::Distributed);
        assert_eq!(cfg.estimator, EstimatorConfig::default());
        assert_eq!(cfg.graph.weights, "metropolis");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let json = r#"{
            "graph": {"n": 1},
            "model": {
                "theta": [1.0],
                "noise": {"kind": "gaussian", "variance": 0.1},
                "regressor": {"kind": "iid_gaussian", "variance": 1.0}
            },
            "horizon": 1,
            "repeats": 1,
            "seed": 0,
            "horizons": 5
        }"#;
        let err = serde_json::from_str::<ExperimentConfig>(json).unwrap_err();
        assert!(err.to_string().contains("horizons"), "{err}");
    }

    #[test]
    fn validation_messages_carry_field_paths() {
        let mut cfg = default_config();
        cfg.estimator.alpha_p = 1.5;
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("estimator.alpha_p"), "{msg}");

        let mut cfg = default_config();
        cfg.model.noise.variance = -1.0;
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("model.noise.variance"), "{msg}");

        let mut cfg = default_config();
        cfg.estimator.theta0 = Some(vec![1.0; 4]);
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("estimator.theta0"), "{msg}");

        let mut cfg = default_config();
        cfg.horizon = 0;
        assert!(cfg.validate().unwrap_err().to_string().contains("horizon"));

        let mut cfg = default_config();
        cfg.graph.edges.push((1, 9));
        assert!(cfg.validate().unwrap_err().to_string().contains("graph.edges"));
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("distributed".parse::<Mode>().unwrap(), Mode::Distributed);
        assert_eq!(
            "non_cooperative".parse::<Mode>().unwrap(),
            Mode::NonCooperative
        );
        assert_eq!("ls_only".parse::<Mode>().unwrap(), Mode::LsOnly);
        assert!("both".parse::<Mode>().is_err());
        assert_eq!(Mode::LsOnly.to_string(), "ls_only");
    }

    #[test]
    fn explicit_adjacency_config_builds() {
        let cfg = GraphConfig {
            n: 2,
            edges: vec![(1, 2)],
            weights: default_weights(),
            adjacency: Some(vec![vec![0.5, 0.5], vec![0.5, 0.5]]),
        };
        let g = cfg.build().unwrap();
        assert_eq!(g.weight(0, 1), 0.5);
        let bad = GraphConfig {
            adjacency: Some(vec![vec![1.0]]),
            ..cfg
        };
        assert!(bad.build().is_err());
    }

    #[test]
    fn unsupported_weight_rule() {
        let cfg = GraphConfig {
            n: 2,
            edges: vec![(1, 2)],
            weights: "uniform".into(),
            adjacency: None,
        };
        assert!(cfg.build().is_err());
    }
}
