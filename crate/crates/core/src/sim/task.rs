//! Synthetic convex tasks with controllable smoothness and gradient noise.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, DeflError, Result};

/// Quadratic task parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadraticSpec {
    pub dimension: usize,
    /// Largest eigenvalue of `A`.
    pub smoothness: f64,
    /// Ratio of largest to smallest eigenvalue.
    pub condition_number: f64,
    /// Total per-sample gradient-noise variance.
    pub noise_sigma_sq: f64,
    /// Standard deviation of per-device linear-term shifts. Zero gives
    /// identical local objectives.
    pub heterogeneity: f64,
}

impl Default for QuadraticSpec {
    fn default() -> Self {
        Self {
            dimension: 10,
            smoothness: 1.0,
            condition_number: 10.0,
            noise_sigma_sq: 1.0,
            heterogeneity: 0.0,
        }
    }
}

/// `F_m(w) = 1/2 w'Aw - (u + delta_m)'w`, with the shifts weighted to zero so
/// the global objective is `1/2 w'Aw - u'w` and `w* = A^-1 u`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticTask {
    pub a: DMatrix<f64>,
    pub u: DVector<f64>,
    pub w_star: DVector<f64>,
    pub smoothness: f64,
    pub noise_sigma_sq: f64,
    /// Empty when every device sees the global objective.
    pub shifts: Vec<DVector<f64>>,
}

impl QuadraticTask {
    /// `A = Q diag(lambda) Q'` with log-spaced eigenvalues in `[L/kappa, L]`
    /// and a random orthogonal `Q`; `w*` is drawn uniformly from `[-1, 1]^d`.
    pub fn generate(spec: &QuadraticSpec, weights: &[f64], seed: u64) -> Result<Self> {
        let d = spec.dimension;
        ensure(d >= 1, || DeflError::Domain("dimension must be at least 1".into()))?;
        ensure(spec.smoothness > 0.0 && spec.condition_number >= 1.0, || {
            DeflError::Domain("need smoothness > 0 and condition number >= 1".into())
        })?;
        ensure(spec.noise_sigma_sq >= 0.0 && spec.heterogeneity >= 0.0, || {
            DeflError::Domain("noise variance and heterogeneity must be non-negative".into())
        })?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lo = spec.smoothness / spec.condition_number;
        let eig: Vec<f64> = (0..d)
            .map(|i| {
                if d == 1 {
                    spec.smoothness
                } else {
                    lo * (spec.condition_number).powf(i as f64 / (d - 1) as f64)
                }
            })
            .collect();
        let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let q = g.qr().q();
        let a = &q * DMatrix::from_diagonal(&DVector::from_vec(eig)) * q.transpose();
        let a = (&a + a.transpose()) * 0.5;
        let w_star = DVector::from_fn(d, |_, _| rng.random_range(-1.0..=1.0));
        let u = &a * &w_star;

        let shifts = if spec.heterogeneity > 0.0 {
            ensure(!weights.is_empty(), || DeflError::EmptyFleet)?;
            let total: f64 = weights.iter().sum();
            let mut raw: Vec<DVector<f64>> = weights
                .iter()
                .map(|_| DVector::from_fn(d, |_, _| spec.heterogeneity * rng.sample::<f64, _>(StandardNormal)))
                .collect();
            let mean = raw
                .iter()
                .zip(weights)
                .fold(DVector::zeros(d), |acc, (s, w)| acc + s * (w / total));
            for s in &mut raw {
                *s -= &mean;
            }
            raw
        } else {
            Vec::new()
        };

        Ok(Self {
            a,
            u,
            w_star,
            smoothness: spec.smoothness,
            noise_sigma_sq: spec.noise_sigma_sq,
            shifts,
        })
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    /// Exact local gradient `A w - u - delta_m`.
    pub fn local_gradient(&self, device: usize, w: &DVector<f64>) -> DVector<f64> {
        let mut g = &self.a * w - &self.u;
        if let Some(s) = self.shifts.get(device) {
            g -= s;
        }
        g
    }

    pub fn loss(&self, w: &DVector<f64>) -> f64 {
        0.5 * w.dot(&(&self.a * w)) - self.u.dot(w)
    }

    /// `F(w) - F(w*) = 1/2 (w - w*)' A (w - w*)`.
    pub fn gap(&self, w: &DVector<f64>) -> f64 {
        let e = w - &self.w_star;
        0.5 * e.dot(&(&self.a * &e))
    }
}

/// Logistic-regression task parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LogisticSpec {
    pub dimension: usize,
    /// Scale of the label-generating weight vector.
    pub signal: f64,
}

impl Default for LogisticSpec {
    fn default() -> Self {
        Self { dimension: 10, signal: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Row-major `n x d` features.
    pub features: Vec<f64>,
    /// Labels in `{0, 1}`.
    pub labels: Vec<f64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn row(&self, i: usize, d: usize) -> &[f64] {
        &self.features[i * d..(i + 1) * d]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticTask {
    pub dimension: usize,
    pub datasets: Vec<Dataset>,
    pub weights: Vec<f64>,
    pub smoothness: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LogisticTask {
    /// Gaussian features, Bernoulli labels from a random linear model. In
    /// identical mode device 0's dataset is copied to every device; otherwise
    /// each device draws its own disjoint sample.
    pub fn generate(spec: &LogisticSpec, sizes: &[u64], identical: bool, seed: u64) -> Result<Self> {
        let d = spec.dimension;
        ensure(d >= 1, || DeflError::Domain("dimension must be at least 1".into()))?;
        ensure(!sizes.is_empty(), || DeflError::EmptyFleet)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth: Vec<f64> = (0..d)
            .map(|_| spec.signal * rng.sample::<f64, _>(StandardNormal) / (d as f64).sqrt())
            .collect();
        let draw = |n: u64, rng: &mut ChaCha8Rng| {
            let mut features = Vec::with_capacity(n as usize * d);
            let mut labels = Vec::with_capacity(n as usize);
            for _ in 0..n {
                let x: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                let z: f64 = x.iter().zip(&truth).map(|(a, b)| a * b).sum();
                labels.push(if rng.random::<f64>() < sigmoid(z) { 1.0 } else { 0.0 });
                features.extend(x);
            }
            Dataset { features, labels }
        };
        let datasets: Vec<Dataset> = if identical {
            let shared = draw(sizes[0], &mut rng);
            vec![shared; sizes.len()]
        } else {
            sizes.iter().map(|&n| draw(n, &mut rng)).collect()
        };
        let weights: Vec<f64> = datasets.iter().map(|ds| ds.len() as f64).collect();

        // L = lambda_max(weighted second moment) / 4.
        let total: f64 = weights.iter().sum();
        let mut cov = DMatrix::<f64>::zeros(d, d);
        for (ds, w) in datasets.iter().zip(&weights) {
            let scale = w / total / ds.len() as f64;
            for i in 0..ds.len() {
                let x = DVector::from_column_slice(ds.row(i, d));
                cov += &x * x.transpose() * scale;
            }
        }
        let smoothness = 0.25 * SymmetricEigen::new(cov).eigenvalues.max();
        Ok(Self { dimension: d, datasets, weights, smoothness })
    }

    fn device_loss(&self, device: usize, w: &DVector<f64>) -> f64 {
        let ds = &self.datasets[device];
        let d = self.dimension;
        (0..ds.len())
            .map(|i| {
                let z: f64 = ds.row(i, d).iter().zip(w.iter()).map(|(a, b)| a * b).sum();
                // log(1 + e^z) - y z
                let softplus = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
                softplus - ds.labels[i] * z
            })
            .sum::<f64>()
            / ds.len() as f64
    }

    pub fn loss(&self, w: &DVector<f64>) -> f64 {
        let total: f64 = self.weights.iter().sum();
        (0..self.datasets.len())
            .map(|m| self.weights[m] / total * self.device_loss(m, w))
            .sum()
    }
}

/// A synthetic task the simulator can run.
#[derive(Debug, Clone, PartialEq)]
pub enum SyntheticTask {
    Quadratic(QuadraticTask),
    Logistic(LogisticTask),
}

impl SyntheticTask {
    pub fn dim(&self) -> usize {
        match self {
            SyntheticTask::Quadratic(q) => q.dim(),
            SyntheticTask::Logistic(l) => l.dimension,
        }
    }

    pub fn smoothness(&self) -> f64 {
        match self {
            SyntheticTask::Quadratic(q) => q.smoothness,
            SyntheticTask::Logistic(l) => l.smoothness,
        }
    }

    pub fn minimizer(&self) -> Option<&DVector<f64>> {
        match self {
            SyntheticTask::Quadratic(q) => Some(&q.w_star),
            SyntheticTask::Logistic(_) => None,
        }
    }

    /// Whether every device optimizes the same local objective.
    pub fn identical_data(&self) -> bool {
        match self {
            SyntheticTask::Quadratic(q) => q.shifts.is_empty(),
            SyntheticTask::Logistic(l) => l.datasets.windows(2).all(|p| p[0] == p[1]),
        }
    }

    /// Checks the task can serve a fleet of `devices` members.
    pub fn check_devices(&self, devices: usize) -> Result<()> {
        let expected = match self {
            SyntheticTask::Quadratic(q) if q.shifts.is_empty() => return Ok(()),
            SyntheticTask::Quadratic(q) => q.shifts.len(),
            SyntheticTask::Logistic(l) => l.datasets.len(),
        };
        ensure(expected == devices, || DeflError::DimensionMismatch { expected, got: devices })
    }

    pub fn global_loss(&self, w: &DVector<f64>) -> f64 {
        match self {
            SyntheticTask::Quadratic(q) => q.loss(w),
            SyntheticTask::Logistic(l) => l.loss(w),
        }
    }

    /// `F(w) - F(w*)` when the minimizer is known.
    pub fn optimality_gap(&self, w: &DVector<f64>) -> Option<f64> {
        match self {
            SyntheticTask::Quadratic(q) => Some(q.gap(w)),
            SyntheticTask::Logistic(_) => None,
        }
    }

    /// Mini-batch stochastic gradient on `device`.
    ///
    /// Quadratic: exact gradient plus the mean of `b` i.i.d. isotropic
    /// Gaussian draws of total variance `sigma^2`, sampled directly as one
    /// Gaussian of total variance `sigma^2 / b`. Logistic: mean gradient over
    /// `b` samples drawn uniformly with replacement.
    pub fn stochastic_gradient<R: Rng>(
        &self,
        device: usize,
        w: &DVector<f64>,
        batch: u64,
        rng: &mut R,
    ) -> Result<DVector<f64>> {
        ensure(batch >= 1, || DeflError::InvalidBatch(batch as f64))?;
        ensure(w.len() == self.dim(), || DeflError::DimensionMismatch { expected: self.dim(), got: w.len() })?;
        match self {
            SyntheticTask::Quadratic(q) => {
                let mut g = q.local_gradient(device, w);
                if q.noise_sigma_sq > 0.0 {
                    let sd = (q.noise_sigma_sq / (q.dim() as f64 * batch as f64)).sqrt();
                    for gi in g.iter_mut() {
                        let z: f64 = StandardNormal.sample(rng);
                        *gi += sd * z;
                    }
                }
                Ok(g)
            }
            SyntheticTask::Logistic(l) => {
                let ds = l.datasets.get(device).ok_or(DeflError::EmptyDataset(device))?;
                ensure(!ds.is_empty(), || DeflError::EmptyDataset(device))?;
                let d = l.dimension;
                let mut g = DVector::zeros(d);
                for _ in 0..batch {
                    let i = rng.random_range(0..ds.len());
                    let x = ds.row(i, d);
                    let z: f64 = x.iter().zip(w.iter()).map(|(a, b)| a * b).sum();
                    let r = sigmoid(z) - ds.labels[i];
                    for (gj, xj) in g.iter_mut().zip(x) {
                        *gj += r * xj;
                    }
                }
                Ok(g / batch as f64)
            }
        }
    }
}
