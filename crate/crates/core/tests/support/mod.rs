//! Independent oracles shared by the integration tests. None of these call
//! into the library's metric or solver code.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Every threshold at which a step of either rate can occur, plus ±∞.
fn raw_thresholds(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut t: Vec<f64> = a.iter().chain(b).copied().collect();
    t.push(f64::NEG_INFINITY);
    t.push(f64::INFINITY);
    t
}

/// `(apcer, bpcer)` by direct counting.
pub fn rates(attack: &[f64], bona_fide: &[f64], t: f64) -> (f64, f64) {
    let missed = attack.iter().filter(|&&s| s < t).count() as f64;
    let alarms = bona_fide.iter().filter(|&&s| s >= t).count() as f64;
    (
        missed / attack.len() as f64,
        alarms / bona_fide.len() as f64,
    )
}

/// Exhaustive D-EER: minimize |APCER − BPCER|, ties to the lower BPCER,
/// report the mean of the two rates.
pub fn d_eer(attack: &[f64], bona_fide: &[f64]) -> f64 {
    let mut best = (f64::INFINITY, f64::INFINITY, f64::NAN);
    for t in raw_thresholds(attack, bona_fide) {
        let (a, b) = rates(attack, bona_fide, t);
        let gap = (a - b).abs();
        if gap < best.0 || (gap == best.0 && b < best.1) {
            best = (gap, b, (a + b) / 2.0);
        }
    }
    best.2
}

/// Lowest BPCER over all thresholds whose APCER stays within the cap.
pub fn bpcer_at_apcer(attack: &[f64], bona_fide: &[f64], cap: f64) -> f64 {
    let n = attack.len() as f64;
    raw_thresholds(attack, bona_fide)
        .into_iter()
        .filter(|&t| attack.iter().filter(|&&s| s < t).count() as f64 <= cap * n + 1e-9)
        .map(|t| rates(attack, bona_fide, t).1)
        .fold(f64::INFINITY, f64::min)
}

/// Smallest impostor score (or +∞) whose FMR stays within the target.
pub fn threshold_at_fmr(impostor: &[f64], target: f64) -> (f64, f64) {
    let n = impostor.len() as f64;
    let mut best = (f64::INFINITY, 0.0);
    for &t in impostor {
        let accepted = impostor.iter().filter(|&&s| s >= t).count() as f64;
        if accepted <= target * n + 1e-9 && t < best.0 {
            best = (t, accepted / n);
        }
    }
    best
}

/// Random score set; half the time drawn from a coarse grid to force ties.
pub fn score_set(rng: &mut ChaCha8Rng, max_len: usize) -> Vec<f64> {
    let n = rng.random_range(1..=max_len);
    let coarse = rng.random_bool(0.5);
    (0..n)
        .map(|_| {
            if coarse {
                rng.random_range(0..12) as f64 / 11.0
            } else {
                rng.random::<f64>()
            }
        })
        .collect()
}

pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

/// Exact solution of the soft-margin SVM dual by active-set enumeration.
#[derive(Debug, Clone)]
pub struct QpSolution {
    pub alpha: Vec<f64>,
    /// `Σα − ½ αᵀQα`, maximized.
    pub objective: f64,
    pub bias: f64,
}

/// Maximize `Σα − ½ αᵀQα` subject to `0 ≤ α ≤ C`, `yᵀα = 0`, with
/// `Q = (yᵢyⱼK(xᵢ,xⱼ))`. Each multiplier is tried at 0, at C, or free; free
/// ones solve the stationarity system. The problem is convex, so the best
/// feasible stationary point of any face is the global optimum.
pub fn svm_dual_oracle(x: &[Vec<f64>], y: &[f64], c: f64, gamma: f64) -> QpSolution {
    let n = y.len();
    assert!(n <= 10, "enumeration is 3^n");
    let k = DMatrix::from_fn(n, n, |i, j| rbf(&x[i], &x[j], gamma));
    let q = DMatrix::from_fn(n, n, |i, j| y[i] * y[j] * k[(i, j)]);
    let objective = |a: &DVector<f64>| a.sum() - 0.5 * (a.transpose() * &q * a)[(0, 0)];

    let mut best: Option<(f64, DVector<f64>)> = None;
    let mut state = vec![0u8; n];
    loop {
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut alpha = DVector::from_fn(n, |i, _| if state[i] == 1 { c } else { 0.0 });
        let fixed_sum: f64 = (0..n)
            .filter(|&i| state[i] != 2)
            .map(|i| y[i] * alpha[i])
            .sum();
        let feasible = if free.is_empty() {
            fixed_sum.abs() < 1e-12
        } else {
            // [Q_FF  y_F] [α_F]   [1 − Q_FB α_B]
            // [y_Fᵀ   0 ] [ ν ] = [ −y_Bᵀα_B  ]
            let m = free.len();
            let mut a = DMatrix::zeros(m + 1, m + 1);
            let mut rhs = DVector::zeros(m + 1);
            for (r, &i) in free.iter().enumerate() {
                for (cc, &j) in free.iter().enumerate() {
                    a[(r, cc)] = q[(i, j)];
                }
                a[(r, m)] = y[i];
                a[(m, r)] = y[i];
                rhs[r] = 1.0
                    - (0..n)
                        .filter(|&j| state[j] == 1)
                        .map(|j| q[(i, j)] * c)
                        .sum::<f64>();
            }
            rhs[m] = -fixed_sum;
            match a.clone().lu().solve(&rhs) {
                Some(sol) if (&a * &sol - &rhs).amax() < 1e-9 => {
                    for (r, &i) in free.iter().enumerate() {
                        alpha[i] = sol[r];
                    }
                    free.iter()
                        .all(|&i| alpha[i] > -1e-12 && alpha[i] < c + 1e-12)
                }
                _ => false,
            }
        };
        if feasible {
            let val = objective(&alpha);
            if best.as_ref().is_none_or(|(b, _)| val > *b) {
                best = Some((val, alpha));
            }
        }
        // next state in base 3
        let mut d = 0;
        while d < n && state[d] == 2 {
            state[d] = 0;
            d += 1;
        }
        if d == n {
            break;
        }
        state[d] += 1;
    }
    let (objective, alpha) = best.expect("α = 0 is always feasible");
    let alpha: Vec<f64> = alpha.iter().map(|v| v.clamp(0.0, c)).collect();

    // bias: average over free multipliers, else midpoint of the KKT interval
    let f0 = |i: usize| (0..n).map(|j| alpha[j] * y[j] * k[(i, j)]).sum::<f64>();
    let eps = 1e-9 * c.max(1.0);
    let free: Vec<usize> = (0..n)
        .filter(|&i| alpha[i] > eps && alpha[i] < c - eps)
        .collect();
    let bias = if !free.is_empty() {
        free.iter().map(|&i| y[i] - f0(i)).sum::<f64>() / free.len() as f64
    } else {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..n {
            // y(f0 + b) ≥ 1 at α = 0, ≤ 1 at α = C
            let bound = y[i] - f0(i);
            let at_zero = alpha[i] <= eps;
            if (y[i] > 0.0) == at_zero {
                lo = lo.max(bound);
            } else {
                hi = hi.min(bound);
            }
        }
        (lo + hi) / 2.0
    };
    QpSolution {
        alpha,
        objective,
        bias,
    }
}

pub fn oracle_decision(x: &[Vec<f64>], y: &[f64], sol: &QpSolution, gamma: f64, p: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .zip(&sol.alpha)
        .map(|((xi, yi), a)| a * yi * rbf(xi, p, gamma))
        .sum::<f64>()
        + sol.bias
}

/// Random SVM problem with both classes present.
pub fn svm_problem(
    rng: &mut ChaCha8Rng,
    max_n: usize,
    max_dim: usize,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = rng.random_range(2..=max_n);
    let dim = rng.random_range(1..=max_dim);
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let mut y: Vec<f64> = (0..n)
        .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
        .collect();
    y[0] = 1.0;
    y[1] = -1.0;
    (x, y)
}
