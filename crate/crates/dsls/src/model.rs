//! Data-generating model: the unknown sparse parameter, per-sensor regressor
//! processes, and measurement noise.
//!
//! Each sensor i produces a regressor stream `phi_{t,i}` and scalar
//! observations `y_{t+1,i} = phi_{t,i}' theta + w_{t+1,i}`. Regressors come
//! from a linear state-space driver (`x <- A x + B eps`, `phi = C x`), an iid
//! Gaussian source, or a replay file; noise is Gaussian or bounded uniform.
//! All draws go through the per-sensor substreams from [`crate::rng`].

use crate::error::{Error, Result};
use crate::rng::{substream, Purpose};
use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal, Uniform};
use std::collections::BTreeSet;
use std::path::Path;

/// The unknown parameter the network identifies, with its sparsity pattern.
#[derive(Clone, Debug)]
pub struct TrueParameter {
    theta: DVector<f64>,
}

impl TrueParameter {
    pub fn new(theta: DVector<f64>) -> Self {
        Self { theta }
    }

    pub fn theta(&self) -> &DVector<f64> {
        &self.theta
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    /// Indices (0-based) of exactly-zero coordinates.
    pub fn zero_set(&self) -> BTreeSet<usize> {
        (0..self.theta.len())
            .filter(|&l| self.theta[l] == 0.0)
            .collect()
    }

    pub fn nonzero_count(&self) -> usize {
        self.dim() - self.zero_set().len()
    }
}

/// Linear state-space regressor: `x <- A x + B eps`, `phi = C x`, with scalar
/// process noise `eps ~ N(0, eps_variance)`. The first `step` advances the
/// state away from `x0` before emitting, so `x0` itself is never observed.
#[derive(Clone, Debug)]
pub struct StateSpaceRegressor {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: DMatrix<f64>,
    x: DVector<f64>,
    eps: Normal<f64>,
}

impl StateSpaceRegressor {
    pub fn new(
        a: DMatrix<f64>,
        b: DVector<f64>,
        c: DMatrix<f64>,
        x0: DVector<f64>,
        eps_variance: f64,
    ) -> Result<Self> {
        let d = x0.len();
        if a.nrows() != d || a.ncols() != d || b.len() != d || c.ncols() != d {
            return Err(Error::Config(format!(
                "regressor: inconsistent state dimensions (A {}x{}, B {}, C {}x{}, x0 {})",
                a.nrows(),
                a.ncols(),
                b.len(),
                c.nrows(),
                c.ncols(),
                d
            )));
        }
        if !(eps_variance >= 0.0) {
            return Err(Error::Config(format!(
                "model.regressor.eps_variance: must be >= 0, got {eps_variance}"
            )));
        }
        let eps = Normal::new(0.0, eps_variance.sqrt())
            .map_err(|e| Error::Config(format!("model.regressor.eps_variance: {e}")))?;
        Ok(Self { a, b, c, x: x0, eps })
    }

    pub fn step(&mut self, rng: &mut ChaCha12Rng) -> DVector<f64> {
        let e: f64 = self.eps.sample(rng);
        self.x = &self.a * &self.x + &self.b * e;
        &self.c * &self.x
    }
}

/// Reference single-coordinate driver: sensor with map index `j` (0-based)
/// sees only parameter coordinate `j` through `A = a_scale * I`, `B = e_j`,
/// `C = e_j e_j'`, `x0 = ones`. With more sensors than coordinates the map
/// `j = i mod m` spreads sensors across coordinates so the team jointly
/// excites all of them while no single sensor does.
pub fn single_coordinate_regressor(
    m: usize,
    j: usize,
    a_scale: f64,
    eps_variance: f64,
) -> Result<StateSpaceRegressor> {
    if j >= m {
        return Err(Error::Config(format!(
            "regressor: coordinate {j} out of range for dimension {m}"
        )));
    }
    let a = DMatrix::<f64>::identity(m, m) * a_scale;
    let mut b = DVector::<f64>::zeros(m);
    b[j] = 1.0;
    let mut c = DMatrix::<f64>::zeros(m, m);
    c[(j, j)] = 1.0;
    StateSpaceRegressor::new(a, b, c, DVector::from_element(m, 1.0), eps_variance)
}

/// Measurement-noise distribution. `bounded_uniform` is parameterized by its
/// variance like the Gaussian: uniform on `[-sqrt(3 v), sqrt(3 v)]` has
/// variance `v`.
#[derive(Clone, Debug)]
pub enum NoiseDriver {
    Gaussian(Normal<f64>),
    BoundedUniform(Uniform<f64>),
}

impl NoiseDriver {
    pub fn gaussian(variance: f64) -> Result<Self> {
        if !(variance >= 0.0) {
            return Err(Error::Config(format!(
                "model.noise.variance: must be >= 0, got {variance}"
            )));
        }
        Ok(Self::Gaussian(Normal::new(0.0, variance.sqrt()).map_err(
            |e| Error::Config(format!("model.noise.variance: {e}")),
        )?))
    }

    pub fn bounded_uniform(variance: f64) -> Result<Self> {
        if !(variance >= 0.0) {
            return Err(Error::Config(format!(
                "model.noise.variance: must be >= 0, got {variance}"
            )));
        }
        let half_width = (3.0 * variance).sqrt();
        Ok(Self::BoundedUniform(
            Uniform::new_inclusive(-half_width, half_width)
                .map_err(|e| Error::Config(format!("model.noise.variance: {e}")))?,
        ))
    }

    pub fn sample(&self, rng: &mut ChaCha12Rng) -> f64 {
        match self {
            Self::Gaussian(d) => d.sample(rng),
            Self::BoundedUniform(d) => d.sample(rng),
        }
    }
}

/// Where a sensor's regressors come from.
#[derive(Clone, Debug)]
pub enum RegressorDriver {
    StateSpace(StateSpaceRegressor),
    IidGaussian { m: usize, std: f64 },
    /// Pre-recorded `(phi, y)` rounds; the noise model is ignored because
    /// the observations are data.
    Replay { rows: Vec<(DVector<f64>, f64)>, cursor: usize },
}

/// One sensor's live data source: a regressor driver plus a noise driver,
/// each drawing from its own substream.
#[derive(Clone, Debug)]
pub struct SensorStream {
    driver: RegressorDriver,
    noise: NoiseDriver,
    reg_rng: ChaCha12Rng,
    noise_rng: ChaCha12Rng,
    pending_y: Option<f64>,
}

impl SensorStream {
    pub fn new(driver: RegressorDriver, noise: NoiseDriver, run_seed: u64, sensor: usize) -> Self {
        Self {
            driver,
            noise,
            reg_rng: substream(run_seed, sensor, Purpose::Regressor),
            noise_rng: substream(run_seed, sensor, Purpose::Noise),
            pending_y: None,
        }
    }

    /// Advance the regressor process one round and return `phi`.
    pub fn next_phi(&mut self) -> Result<DVector<f64>> {
        match &mut self.driver {
            RegressorDriver::StateSpace(ss) => Ok(ss.step(&mut self.reg_rng)),
            RegressorDriver::IidGaussian { m, std } => {
                let normal = Normal::new(0.0, *std).expect("validated at construction");
                Ok(DVector::from_fn(*m, |_, _| normal.sample(&mut self.reg_rng)))
            }
            RegressorDriver::Replay { rows, cursor } => {
                let Some((phi, y)) = rows.get(*cursor) else {
                    return Err(Error::Config(format!(
                        "replay data exhausted after {} rounds; shorten the horizon or extend the file",
                        rows.len()
                    )));
                };
                *cursor += 1;
                self.pending_y = Some(*y);
                Ok(phi.clone())
            }
        }
    }

    /// Observe `y = phi' theta + w` (or the recorded `y` when replaying).
    pub fn observe(&mut self, theta: &TrueParameter, phi: &DVector<f64>) -> f64 {
        if let Some(y) = self.pending_y.take() {
            return y;
        }
        phi.dot(theta.theta()) + self.noise.sample(&mut self.noise_rng)
    }
}

/// Load a replay file: CSV with header `t,i,phi_1,...,phi_m,y`, rows ordered
/// round-major then sensor (t = 1..T, i = 1..n). Returns per-sensor rounds.
pub fn load_replay(path: &Path, n: usize, m: usize) -> Result<Vec<Vec<(DVector<f64>, f64)>>> {
    let label = path.display();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Config(format!("replay file {label}: {e}")))?;

    let mut expected_header = vec!["t".to_string(), "i".to_string()];
    expected_header.extend((1..=m).map(|l| format!("phi_{l}")));
    expected_header.push("y".to_string());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Config(format!("replay file {label}: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    if header != expected_header {
        return Err(Error::Config(format!(
            "replay file {label}: header {:?} does not match expected {:?}",
            header, expected_header
        )));
    }

    let mut per_sensor: Vec<Vec<(DVector<f64>, f64)>> = vec![Vec::new(); n];
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 2; // 1-based line number including the header
        let record = record.map_err(|e| Error::Config(format!("replay file {label}: {e}")))?;
        if record.len() != m + 3 {
            return Err(Error::Config(format!(
                "replay file {label} row {row}: expected {} fields, got {}",
                m + 3,
                record.len()
            )));
        }
        let parse = |field: usize| -> Result<f64> {
            record[field].trim().parse::<f64>().map_err(|_| {
                Error::Config(format!(
                    "replay file {label} row {row}: bad number {:?}",
                    &record[field]
                ))
            })
        };
        let t_expect = idx / n + 1;
        let i_expect = idx % n + 1;
        let t: usize = record[0].trim().parse().map_err(|_| {
            Error::Config(format!("replay file {label} row {row}: bad round index"))
        })?;
        let i: usize = record[1].trim().parse().map_err(|_| {
            Error::Config(format!("replay file {label} row {row}: bad sensor index"))
        })?;
        if t != t_expect || i != i_expect {
            return Err(Error::Config(format!(
                "replay file {label} row {row}: expected (t, i) = ({t_expect}, {i_expect}), got ({t}, {i})"
            )));
        }
        let mut phi = DVector::<f64>::zeros(m);
        for l in 0..m {
            phi[l] = parse(2 + l)?;
            if !phi[l].is_finite() {
                return Err(Error::Config(format!(
                    "replay file {label} row {row}: non-finite regressor entry"
                )));
            }
        }
        let y = parse(m + 2)?;
        per_sensor[i - 1].push((phi, y));
    }
    if per_sensor.iter().any(|rows| rows.is_empty()) {
        return Err(Error::Config(format!(
            "replay file {label}: no data rows for {n} sensors"
        )));
    }
    let rounds = per_sensor[0].len();
    if per_sensor.iter().any(|rows| rows.len() != rounds) {
        return Err(Error::Config(format!(
            "replay file {label}: incomplete final round (sensor counts differ)"
        )));
    }
    Ok(per_sensor)
}
