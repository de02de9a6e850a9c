//! RBF-kernel soft-margin SVM trained with SMO, plus sigmoid calibration of
//! its decision values into attack scores in `[0, 1]`.
//!
//! The dual solved is
//!
//! ```text
//! max  Σ αᵢ − ½ ΣΣ αᵢ αⱼ yᵢ yⱼ K(xᵢ, xⱼ)   s.t. 0 ≤ αᵢ ≤ C,  Σ αᵢ yᵢ = 0
//! ```
//!
//! with bona fide samples labelled `y = −1` and attacks `y = +1`. The working
//! pair is the maximal violating pair (first index wins ties), so training is
//! deterministic for a fixed sample order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::features::{FeatureChannel, FeatureVector};
use crate::io::write_string;
use crate::model::Label;

pub const MODEL_VERSION: u32 = 1;
/// Multipliers above this are kept as support vectors.
pub const SUPPORT_THRESHOLD: f64 = 1e-8;
const TAU: f64 = 1e-12;

/// `exp(−γ‖a − b‖²)`.
pub fn rbf_kernel(a: &[f64], b: &[f64], gamma: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    Ok(rbf_unchecked(a, b, gamma))
}

#[inline]
fn rbf_unchecked(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

/// Dense symmetric kernel matrix, row-major.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    n: usize,
    values: Vec<f64>,
}

impl KernelMatrix {
    // TODO: switch to an LRU row cache once training sets grow past ~15k
    // samples; the dense matrix is n² f64s.
    pub fn rbf(samples: &[Vec<f64>], gamma: f64, exec: Execution) -> Self {
        let n = samples.len();
        let mut values = vec![0.0; n * n];
        if n > 0 {
            exec.for_each_chunk(&mut values, n, |i, row| {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = rbf_unchecked(&samples[i], &samples[j], gamma);
                }
            });
        }
        Self { n, values }
    }

    pub fn from_values(n: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), n * n, "kernel matrix must be n×n");
        Self { n, values }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }
}

/// Result of the SMO dual solve.
#[derive(Debug, Clone)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    /// Decision offset: `f(x) = Σ αᵢ yᵢ K(xᵢ, x) + bias`.
    pub bias: f64,
    /// Dual objective `Σα − ½ αᵀQα` at the solution.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// SMO on a precomputed kernel. `y` entries must be ±1.
pub fn solve_dual(kernel: &KernelMatrix, y: &[f64], c: f64, tolerance: f64) -> DualSolution {
    let n = y.len();
    assert_eq!(kernel.len(), n, "kernel/label size mismatch");
    let mut alpha = vec![0.0; n];
    // gradient of ½αᵀQα − eᵀα
    let mut grad = vec![-1.0; n];
    let max_iter = 10_000_000usize.max(100 * n);
    let q = |i: usize, j: usize| y[i] * y[j] * kernel.get(i, j);

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let (mut i, mut g_max) = (usize::MAX, f64::NEG_INFINITY);
        let (mut j, mut g_min) = (usize::MAX, f64::INFINITY);
        for t in 0..n {
            let v = -y[t] * grad[t];
            let in_up = (y[t] > 0.0 && alpha[t] < c) || (y[t] < 0.0 && alpha[t] > 0.0);
            let in_low = (y[t] > 0.0 && alpha[t] > 0.0) || (y[t] < 0.0 && alpha[t] < c);
            if in_up && v > g_max {
                g_max = v;
                i = t;
            }
            if in_low && v < g_min {
                g_min = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || g_max - g_min < tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let mut quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        let (ki, kj) = (kernel.row(i), kernel.row(j));
        for t in 0..n {
            grad[t] += y[t] * (y[i] * ki[t] * di + y[j] * kj[t] * dj);
        }
    }

    // offset from free multipliers, else the midpoint of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    let rho = if free > 0 {
        sum_free / free as f64
    } else {
        (ub + lb) / 2.0
    };
    let objective = -0.5
        * alpha
            .iter()
            .zip(&grad)
            .map(|(a, g)| a * (g - 1.0))
            .sum::<f64>();

    DualSolution {
        alpha,
        bias: -rho,
        objective,
        iterations,
        converged,
    }
}

/// RBF width: a fixed value, or `1 / (dim · variance of all feature values)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gamma {
    Scale,
    Value(f64),
}

impl Gamma {
    pub fn resolve(self, samples: &[Vec<f64>]) -> f64 {
        match self {
            Gamma::Value(g) => g,
            Gamma::Scale => {
                let dim = samples.first().map_or(0, Vec::len);
                let count = (samples.len() * dim) as f64;
                if count == 0.0 {
                    return 1.0;
                }
                let mean = samples.iter().flatten().sum::<f64>() / count;
                let var = samples
                    .iter()
                    .flatten()
                    .map(|v| (v - mean) * (v - mean))
                    .sum::<f64>()
                    / count;
                if var > 0.0 {
                    1.0 / (dim as f64 * var)
                } else {
                    1.0
                }
            }
        }
    }
}

impl std::str::FromStr for Gamma {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "scale" {
            return Ok(Gamma::Scale);
        }
        match s.parse::<f64>() {
            Ok(g) if g > 0.0 && g.is_finite() => Ok(Gamma::Value(g)),
            _ => Err(Error::Config(format!(
                "gamma must be \"scale\" or a positive number, got {s:?}"
            ))),
        }
    }
}

impl std::fmt::Display for Gamma {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Gamma::Scale => f.write_str("scale"),
            Gamma::Value(g) => write!(f, "{g}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmParams {
    pub c: f64,
    pub gamma: Gamma,
    /// KKT violation tolerance of the SMO stopping rule.
    pub tolerance: f64,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            gamma: Gamma::Scale,
            tolerance: 1e-3,
        }
    }
}

/// Sigmoid mapping `score = 1 / (1 + exp(A·f + B))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
}

impl Calibration {
    pub fn apply(&self, decision: f64) -> f64 {
        sigmoid_neg(self.a * decision + self.b)
    }
}

/// `1 / (1 + e^z)` without overflow.
fn sigmoid_neg(z: f64) -> f64 {
    if z >= 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

/// Regularized maximum-likelihood sigmoid fit (Newton's method with
/// backtracking line search, Platt targets). `positive[i]` marks attacks.
pub fn fit_sigmoid(decisions: &[f64], positive: &[bool]) -> Calibration {
    let prior1 = positive.iter().filter(|&&p| p).count() as f64;
    let prior0 = positive.len() as f64 - prior1;
    let hi = (prior1 + 1.0) / (prior1 + 2.0);
    let lo = 1.0 / (prior0 + 2.0);
    let t: Vec<f64> = positive.iter().map(|&p| if p { hi } else { lo }).collect();

    let (max_iter, min_step, sigma, eps) = (100, 1e-10, 1e-12, 1e-5);
    let mut a = 0.0;
    let mut b = ((prior0 + 1.0) / (prior1 + 1.0)).ln();

    let objective = |a: f64, b: f64| -> f64 {
        decisions
            .iter()
            .zip(&t)
            .map(|(&f, &ti)| {
                let z = f * a + b;
                if z >= 0.0 {
                    ti * z + (-z).exp().ln_1p()
                } else {
                    (ti - 1.0) * z + z.exp().ln_1p()
                }
            })
            .sum()
    };
    let mut fval = objective(a, b);

    for _ in 0..max_iter {
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (sigma, sigma, 0.0, 0.0, 0.0);
        for (&f, &ti) in decisions.iter().zip(&t) {
            let z = f * a + b;
            let (p, q) = if z >= 0.0 {
                let e = (-z).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = z.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            let d1 = ti - p;
            g1 += f * d1;
            g2 += d1;
        }
        if g1.abs() < eps && g2.abs() < eps {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        while step >= min_step {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = objective(na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if step < min_step {
            break;
        }
    }
    Calibration { a, b }
}

/// A trained detector: SVM dual solution plus score calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedDetector {
    pub version: u32,
    pub channel: FeatureChannel,
    pub dim: usize,
    pub gamma: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub bias: f64,
    pub calibration: Calibration,
    pub support_vectors: Vec<Vec<f64>>,
    /// Signed `αᵢ yᵢ` per support vector.
    pub dual_coefficients: Vec<f64>,
}

/// Summary statistics of a training run.
#[derive(Debug, Clone)]
pub struct TrainingReport {
    pub support_vectors: usize,
    pub training_accuracy: f64,
    pub iterations: usize,
    pub converged: bool,
    pub dual_objective: f64,
}

pub fn train(
    samples: &[(FeatureVector, Label)],
    params: &SvmParams,
) -> Result<(TrainedDetector, TrainingReport)> {
    train_with(samples, params, Execution::default())
}

pub fn train_with(
    samples: &[(FeatureVector, Label)],
    params: &SvmParams,
    exec: Execution,
) -> Result<(TrainedDetector, TrainingReport)> {
    let attack = samples.iter().filter(|(_, l)| *l == Label::Attack).count();
    let bona_fide = samples.len() - attack;
    if attack == 0 || bona_fide == 0 {
        return Err(Error::SingleClass { bona_fide, attack });
    }
    if !(params.c > 0.0 && params.c.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "C must be positive, got {}",
            params.c
        )));
    }
    let channel = samples[0].0.channel;
    let dim = samples[0].0.dim();
    for (f, _) in samples {
        if f.channel != channel {
            return Err(Error::ChannelMismatch {
                expected: channel.to_string(),
                actual: f.channel.to_string(),
            });
        }
        if f.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: f.dim(),
            });
        }
        if f.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite feature value".into()));
        }
    }

    let xs: Vec<Vec<f64>> = samples.iter().map(|(f, _)| f.values.clone()).collect();
    let y: Vec<f64> = samples.iter().map(|(_, l)| l.sign()).collect();
    let gamma = params.gamma.resolve(&xs);
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    let kernel = KernelMatrix::rbf(&xs, gamma, exec);
    let sol = solve_dual(&kernel, &y, params.c, params.tolerance);

    let decisions: Vec<f64> = exec.map_range(xs.len(), |i| {
        let row = kernel.row(i);
        sol.alpha
            .iter()
            .zip(&y)
            .zip(row)
            .map(|((a, yy), k)| a * yy * k)
            .sum::<f64>()
            + sol.bias
    });
    let positive: Vec<bool> = y.iter().map(|&v| v > 0.0).collect();
    let mut calibration = fit_sigmoid(&decisions, &positive);
    if calibration.a.is_nan() || calibration.a >= 0.0 {
        // scores must increase with the decision value
        calibration = Calibration { a: -1.0, b: 0.0 };
    }

    let correct = decisions
        .iter()
        .zip(&y)
        .filter(|(f, yy)| (**f >= 0.0) == (**yy > 0.0))
        .count();

    let (mut support_vectors, mut dual_coefficients) = (Vec::new(), Vec::new());
    for (i, &a) in sol.alpha.iter().enumerate() {
        if a > SUPPORT_THRESHOLD {
            support_vectors.push(xs[i].clone());
            dual_coefficients.push(a * y[i]);
        }
    }

    let report = TrainingReport {
        support_vectors: support_vectors.len(),
        training_accuracy: correct as f64 / xs.len() as f64,
        iterations: sol.iterations,
        converged: sol.converged,
        dual_objective: sol.objective,
    };
    let model = TrainedDetector {
        version: MODEL_VERSION,
        channel,
        dim,
        gamma,
        c: params.c,
        bias: sol.bias,
        calibration,
        support_vectors,
        dual_coefficients,
    };
    Ok((model, report))
}

impl TrainedDetector {
    /// Raw SVM decision value; positive means attack.
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coefficients)
            .map(|(sv, coef)| coef * rbf_unchecked(sv, x, self.gamma))
            .sum::<f64>()
            + self.bias
    }

    fn check(&self, feature: &FeatureVector) -> Result<()> {
        if feature.channel != self.channel {
            return Err(Error::ChannelMismatch {
                expected: self.channel.to_string(),
                actual: feature.channel.to_string(),
            });
        }
        if feature.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: feature.dim(),
            });
        }
        Ok(())
    }

    /// Calibrated attack score in `[0, 1]`; higher is more attack-like.
    pub fn score(&self, feature: &FeatureVector) -> Result<f64> {
        self.check(feature)?;
        Ok(self.calibration.apply(self.decision(&feature.values)))
    }

    pub fn score_batch(&self, features: &[FeatureVector], exec: Execution) -> Result<Vec<f64>> {
        for f in features {
            self.check(f)?;
        }
        Ok(exec.map(features, |f| {
            self.calibration.apply(self.decision(&f.values))
        }))
    }

    /// Structural and numeric invariants of a detector.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::ModelFormat(m));
        if self.support_vectors.is_empty() {
            return fail("model has no support vectors".into());
        }
        if self.support_vectors.len() != self.dual_coefficients.len() {
            return fail(format!(
                "{} support vectors but {} dual coefficients",
                self.support_vectors.len(),
                self.dual_coefficients.len()
            ));
        }
        if let Some(sv) = self.support_vectors.iter().find(|sv| sv.len() != self.dim) {
            return fail(format!(
                "support vector of length {} in a dim-{} model",
                sv.len(),
                self.dim
            ));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) || !(self.c > 0.0 && self.c.is_finite()) {
            return fail(format!(
                "gamma ({}) and C ({}) must be positive",
                self.gamma, self.c
            ));
        }
        let finite = self.bias.is_finite()
            && self.calibration.a.is_finite()
            && self.calibration.b.is_finite()
            && self.support_vectors.iter().flatten().all(|v| v.is_finite())
            && self.dual_coefficients.iter().all(|v| v.is_finite());
        if !finite {
            return fail("non-finite model parameter".into());
        }
        if self
            .dual_coefficients
            .iter()
            .any(|v| v.abs() > self.c * (1.0 + 1e-9))
        {
            return fail("dual coefficient exceeds C".into());
        }
        Ok(())
    }
}

pub fn save_model(model: &TrainedDetector, path: impl AsRef<Path>) -> Result<()> {
    model.validate()?;
    let mut text = serde_json::to_string(model).map_err(|e| Error::ModelFormat(e.to_string()))?;
    text.push('\n');
    write_string(path.as_ref(), &text)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedDetector> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(&text)
}

pub fn parse_model(text: &str) -> Result<TrainedDetector> {
    #[derive(Deserialize)]
    struct Header {
        version: u32,
    }
    let header: Header =
        serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
    if header.version != MODEL_VERSION {
        return Err(Error::ModelVersion {
            found: header.version,
            expected: MODEL_VERSION,
        });
    }
    let model: TrainedDetector =
        serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
    model.validate()?;
    Ok(model)
}
