//! Bias-free kernel SVM: the dual problem
//! `min -sum(a) + 1/2 a^T Q a` with `Q_ij = y_i y_j G_ij` and `0 <= a_i <= C`,
//! solved by projected coordinate descent.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Most negative eigenvalue tolerated in a Gram matrix.
pub const PSD_TOL: f64 = -1e-8;

/// `alpha_i` above this marks a support vector.
pub const SUPPORT_THRESHOLD: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvmParams {
    /// Box constraint; `None` is the hard margin `C = inf`.
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_tol() -> f64 {
    1e-8
}

fn default_max_iter() -> usize {
    100_000
}

impl Default for SvmParams {
    fn default() -> Self {
        Self { c: None, tol: default_tol(), max_iter: default_max_iter() }
    }
}

impl SvmParams {
    pub fn with_c(c: f64) -> Self {
        Self { c: Some(c), ..Self::default() }
    }

    fn upper(&self) -> f64 {
        self.c.unwrap_or(f64::INFINITY)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub alpha: Vec<f64>,
    pub labels: Vec<i8>,
    pub params: SvmParams,
    /// Sweeps over all coordinates until convergence.
    pub iterations: usize,
    /// Dual objective after each sweep, starting from `a = 0`.
    pub objective_history: Vec<f64>,
    #[serde(default)]
    pub meta: serde_json::Value,
}

impl SvmModel {
    pub fn support_vectors(&self) -> Vec<usize> {
        (0..self.alpha.len()).filter(|&i| self.alpha[i] > SUPPORT_THRESHOLD).collect()
    }

    /// `sum_i a_i y_i k_i`.
    pub fn decision(&self, k_new: &[f64]) -> Result<f64> {
        if k_new.len() != self.alpha.len() {
            return Err(Error::DimensionMismatch { expected: self.alpha.len(), found: k_new.len() });
        }
        Ok(self.alpha.iter().zip(&self.labels).zip(k_new).map(|((a, y), k)| a * f64::from(*y) * k).sum())
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(&mut f, self)?;
        f.write_all(b"\n")?;
        Ok(())
    }
}

/// `-sum(a) + 1/2 a^T Q a`.
pub fn dual_objective(q: &DMatrix<f64>, alpha: &[f64]) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * q[(i, j)];
        }
    }
    0.5 * quad - alpha.iter().sum::<f64>()
}

fn check_labels(labels: &[i8]) -> Result<()> {
    if let Some(bad) = labels.iter().find(|&&y| y != 1 && y != -1) {
        return Err(Error::InvalidConfig(format!("labels must be +1 or -1, got {bad}")));
    }
    Ok(())
}

/// Largest violation of the box-constrained optimality conditions.
fn kkt_residual(grad: &[f64], alpha: &[f64], upper: f64) -> f64 {
    grad.iter()
        .zip(alpha)
        .map(|(&g, &a)| {
            if a <= 0.0 && a >= upper {
                0.0
            } else if a <= 0.0 {
                (-g).max(0.0)
            } else if a >= upper {
                g.max(0.0)
            } else {
                g.abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Trains on the Gram matrix `g` with labels `labels`.
pub fn train_dual(g: &DMatrix<f64>, labels: &[i8], params: SvmParams) -> Result<SvmModel> {
    let n = labels.len();
    if g.nrows() != n || g.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: g.nrows() });
    }
    check_labels(labels)?;
    let upper = params.upper();
    if upper.is_nan() || upper < 0.0 {
        return Err(Error::InvalidConfig(format!("C must be nonnegative, got {upper}")));
    }
    if n == 0 {
        return Err(Error::InvalidConfig("empty training set".into()));
    }
    let min_eigenvalue = g.clone().symmetric_eigenvalues().min();
    if min_eigenvalue < PSD_TOL {
        return Err(Error::NotPsd { min_eigenvalue });
    }
    let y: Vec<f64> = labels.iter().map(|&v| f64::from(v)).collect();
    let q = DMatrix::from_fn(n, n, |i, j| y[i] * y[j] * 0.5 * (g[(i, j)] + g[(j, i)]));

    let mut alpha = vec![0.0; n];
    // grad = Q a - 1
    let mut grad = vec![-1.0; n];
    let mut history = vec![0.0];
    for sweep in 1..=params.max_iter {
        for i in 0..n {
            let qii = q[(i, i)];
            let target = if qii > 0.0 {
                (alpha[i] - grad[i] / qii).clamp(0.0, upper)
            } else if grad[i] < 0.0 {
                if upper.is_infinite() {
                    return Err(Error::Unbounded { index: i });
                }
                upper
            } else {
                0.0
            };
            let delta = target - alpha[i];
            if delta != 0.0 {
                alpha[i] = target;
                for (j, gj) in grad.iter_mut().enumerate() {
                    *gj += q[(j, i)] * delta;
                }
            }
        }
        history.push(dual_objective(&q, &alpha));
        if kkt_residual(&grad, &alpha, upper) <= params.tol {
            return Ok(SvmModel {
                alpha,
                labels: labels.to_vec(),
                params,
                iterations: sweep,
                objective_history: history,
                meta: serde_json::Value::Null,
            });
        }
    }
    Err(Error::NotConverged { iterations: params.max_iter, residual: kkt_residual(&grad, &alpha, upper) })
}

/// `sign(sum_i a_i y_i k_i)`, with `sign(0) = +1`.
pub fn predict(model: &SvmModel, k_new: &[f64]) -> Result<i8> {
    Ok(if model.decision(k_new)? >= 0.0 { 1 } else { -1 })
}

/// Two labelled clusters in `[-pi, pi)^n`: class `+1` around `+pi/4` and
/// class `-1` around `-pi/4` in every component, with uniform jitter of
/// half-width `spread`. Classes alternate, starting with `+1`.
///
/// Centres at `+-pi/2` would collide: `RZ(x) RY(x) |0>` is the same state
/// for both signs there.
pub fn two_clusters(points: usize, n: usize, spread: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<i8>) {
    use rand::Rng;
    let mut r = crate::rng::stream(seed, crate::rng::tags::SVM_DATA, 0);
    let labels: Vec<i8> = (0..points).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
    let data = labels
        .iter()
        .map(|&y| {
            let centre = f64::from(y) * std::f64::consts::FRAC_PI_4;
            (0..n).map(|_| centre + r.random_range(-spread..=spread)).collect()
        })
        .collect();
    (data, labels)
}

/// Fraction of `predicted` equal to `truth`.
pub fn accuracy(predicted: &[i8], truth: &[i8]) -> Result<f64> {
    if predicted.len() != truth.len() || truth.is_empty() {
        return Err(Error::DimensionMismatch { expected: truth.len(), found: predicted.len() });
    }
    Ok(predicted.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / truth.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_two_points() {
        let m = train_dual(&DMatrix::identity(2, 2), &[1, -1], SvmParams::default()).unwrap();
        assert!((m.alpha[0] - 1.0).abs() < 1e-12 && (m.alpha[1] - 1.0).abs() < 1e-12);
        assert_eq!(predict(&m, &[1.0, 0.0]).unwrap(), 1);
        assert_eq!(predict(&m, &[0.0, 1.0]).unwrap(), -1);
        assert_eq!(predict(&m, &[0.0, 0.0]).unwrap(), 1);
        assert_eq!(m.support_vectors(), vec![0, 1]);
    }

    #[test]
    fn single_point() {
        let m = train_dual(&DMatrix::from_element(1, 1, 1.0), &[1], SvmParams::default()).unwrap();
        assert!((m.alpha[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_box_gives_zero_alpha() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.0]);
        let m = train_dual(&g, &[1, -1], SvmParams::with_c(0.0)).unwrap();
        assert_eq!(m.alpha, vec![0.0, 0.0]);
        assert_eq!(predict(&m, &[0.2, 0.9]).unwrap(), 1);
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(train_dual(&g, &[1, -1], SvmParams::default()), Err(Error::NotPsd { .. })));
        assert!(train_dual(&DMatrix::identity(2, 2), &[1], SvmParams::default()).is_err());
        assert!(train_dual(&DMatrix::identity(2, 2), &[1, 0], SvmParams::default()).is_err());
        assert!(matches!(
            train_dual(&DMatrix::zeros(1, 1), &[1], SvmParams::default()),
            Err(Error::Unbounded { index: 0 })
        ));
        let tight = SvmParams { max_iter: 1, tol: 0.0, c: None };
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.9, 0.9, 1.0]);
        assert!(matches!(train_dual(&g, &[1, 1], tight), Err(Error::NotConverged { .. })));
    }

    #[test]
    fn model_json_round_trip() {
        let m = train_dual(&DMatrix::identity(2, 2), &[1, -1], SvmParams::default()).unwrap();
        let back: SvmModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
