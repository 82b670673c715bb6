//! Point estimates with standard errors: batch means and jackknife.

use serde::{Deserialize, Serialize};

/// A scalar estimate, its standard error, and the number of raw samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub value: f64,
    pub se: f64,
    pub samples: usize,
}

impl MeanEstimate {
    /// `|value - target| <= k * se`, with a 1e-12 floor for zero-SE cases.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= (k * self.se).max(1e-12)
    }

    /// Distance to `target` in units of the standard error.
    pub fn z(&self, target: f64) -> f64 {
        if self.se > 0.0 {
            (self.value - target) / self.se
        } else if self.value == target {
            0.0
        } else {
            f64::INFINITY.copysign(self.value - target)
        }
    }
}

/// Separation of two independent estimates in combined standard errors.
pub fn separation(a: &MeanEstimate, b: &MeanEstimate) -> f64 {
    let se = (a.se * a.se + b.se * b.se).sqrt();
    if se > 0.0 {
        (a.value - b.value) / se
    } else {
        f64::INFINITY.copysign(a.value - b.value)
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Unbiased sample variance (`N - 1` denominator).
pub fn variance(values: &[f64]) -> f64 {
    covariance(values, values)
}

/// Unbiased sample covariance.
pub fn covariance(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "covariance of unequal-length samples");
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let mx = mean(x);
    let my = mean(y);
    x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (n - 1) as f64
}

/// Contiguous batch boundaries; sizes differ by at most one.
fn batch_ranges(n: usize, batches: usize) -> impl Iterator<Item = std::ops::Range<usize>> {
    (0..batches).map(move |b| (b * n / batches)..((b + 1) * n / batches))
}

fn batch_se(per_batch: &[f64]) -> f64 {
    if per_batch.len() < 2 {
        return f64::NAN;
    }
    (variance(per_batch) / per_batch.len() as f64).sqrt()
}

/// Sample mean with a batch-means standard error over `batches` contiguous
/// batches (fewer if there are not enough samples).
pub fn batch_mean(values: &[f64], batches: usize) -> MeanEstimate {
    let n = values.len();
    let b = batches.min(n).max(1);
    let per: Vec<f64> = batch_ranges(n, b).map(|r| mean(&values[r])).collect();
    MeanEstimate { value: mean(values), se: batch_se(&per), samples: n }
}

/// Unbiased variance with a batch-means standard error: the spread of the
/// within-batch variances.
pub fn batch_variance(values: &[f64], batches: usize) -> MeanEstimate {
    batch_covariance(values, values, batches)
}

/// Unbiased covariance with a batch-means standard error.
pub fn batch_covariance(x: &[f64], y: &[f64], batches: usize) -> MeanEstimate {
    let n = x.len();
    let b = batches.min(n / 2).max(1);
    let per: Vec<f64> = batch_ranges(n, b).map(|r| covariance(&x[r.clone()], &y[r])).collect();
    MeanEstimate { value: covariance(x, y), se: batch_se(&per), samples: n }
}

/// Running sums of a group, centred on `shift` for numerical stability.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Sums {
    count: f64,
    sum: f64,
    sumsq: f64,
}

impl Sums {
    fn of(values: &[f64], shift: f64) -> Self {
        values.iter().fold(Self::default(), |acc, v| {
            let d = v - shift;
            Self { count: acc.count + 1.0, sum: acc.sum + d, sumsq: acc.sumsq + d * d }
        })
    }

    fn minus(self, other: Self) -> Self {
        Self { count: self.count - other.count, sum: self.sum - other.sum, sumsq: self.sumsq - other.sumsq }
    }

    fn plus(self, other: Self) -> Self {
        Self { count: self.count + other.count, sum: self.sum + other.sum, sumsq: self.sumsq + other.sumsq }
    }

    fn mean(&self, shift: f64) -> f64 {
        shift + self.sum / self.count
    }

    fn variance(&self) -> f64 {
        (self.sumsq - self.sum * self.sum / self.count) / (self.count - 1.0)
    }
}

/// Jackknife standard error from leave-one-out replicates.
pub fn jackknife_se(replicates: &[f64]) -> f64 {
    let g = replicates.len() as f64;
    if replicates.len() < 2 {
        return f64::NAN;
    }
    let m = mean(replicates);
    ((g - 1.0) / g * replicates.iter().map(|r| (r - m).powi(2)).sum::<f64>()).sqrt()
}

/// Pooled mean and unbiased variance over all values in all groups, with
/// delete-one-group jackknife standard errors.
pub fn pooled_with_group_jackknife(groups: &[Vec<f64>]) -> (MeanEstimate, MeanEstimate) {
    let all: Vec<f64> = groups.iter().flatten().copied().collect();
    let n = all.len();
    let shift = if n > 0 { mean(&all) } else { 0.0 };
    let sums: Vec<Sums> = groups.iter().map(|g| Sums::of(g, shift)).collect();
    let total = sums.iter().fold(Sums::default(), |a, s| a.plus(*s));
    let (mut means, mut vars) = (Vec::new(), Vec::new());
    for s in &sums {
        let rest = total.minus(*s);
        if rest.count >= 2.0 {
            means.push(rest.mean(shift));
            vars.push(rest.variance());
        }
    }
    (
        MeanEstimate { value: total.mean(shift), se: jackknife_se(&means), samples: n },
        MeanEstimate { value: total.variance(), se: jackknife_se(&vars), samples: n },
    )
}

/// Pooled covariance of paired values over all groups, with a
/// delete-one-group jackknife standard error.
pub fn pooled_covariance_with_group_jackknife(x: &[Vec<f64>], y: &[Vec<f64>]) -> MeanEstimate {
    assert_eq!(x.len(), y.len(), "group count mismatch");
    let flat = |skip: Option<usize>| -> (Vec<f64>, Vec<f64>) {
        let keep = |i: &usize| Some(*i) != skip;
        let fx = (0..x.len()).filter(keep).flat_map(|i| x[i].iter().copied()).collect();
        let fy = (0..y.len()).filter(keep).flat_map(|i| y[i].iter().copied()).collect();
        (fx, fy)
    };
    let (ax, ay) = flat(None);
    let reps: Vec<f64> = (0..x.len())
        .map(|g| {
            let (fx, fy) = flat(Some(g));
            covariance(&fx, &fy)
        })
        .collect();
    MeanEstimate { value: covariance(&ax, &ay), se: jackknife_se(&reps), samples: ax.len() }
}

/// Mean over groups of each group's statistic, with the standard error of
/// that mean across groups.
pub fn mean_of_groups(values: &[f64]) -> MeanEstimate {
    let g = values.len();
    let se = if g >= 2 { (variance(values) / g as f64).sqrt() } else { f64::NAN };
    MeanEstimate { value: mean(values), se, samples: g }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_mean_on_constant_has_zero_se() {
        let e = batch_mean(&[2.0; 500], 50);
        assert_eq!(e.value, 2.0);
        assert_eq!(e.se, 0.0);
        assert!(e.within(2.0, 5.0));
    }

    #[test]
    fn unbiased_variance_of_small_sample() {
        assert!((variance(&[1.0, 2.0, 3.0, 4.0]) - 5.0 / 3.0).abs() < 1e-15);
        assert!((covariance(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn jackknife_of_mean_matches_classical_se() {
        // for the mean with singleton groups the jackknife is exactly s/sqrt(n)
        let v = [0.3, 1.7, -0.4, 2.2, 0.9, 1.1, -1.3];
        let groups: Vec<Vec<f64>> = v.iter().map(|x| vec![*x]).collect();
        let (m, _) = pooled_with_group_jackknife(&groups);
        assert!((m.value - mean(&v)).abs() < 1e-14);
        assert!((m.se - (variance(&v) / v.len() as f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn pooled_variance_matches_direct() {
        let groups = vec![vec![0.1, 0.5, 0.2], vec![0.9, 0.4], vec![0.3, 0.35, 0.7, 0.6]];
        let all: Vec<f64> = groups.iter().flatten().copied().collect();
        let (m, v) = pooled_with_group_jackknife(&groups);
        assert!((m.value - mean(&all)).abs() < 1e-14);
        assert!((v.value - variance(&all)).abs() < 1e-14);
        assert!(v.se > 0.0);
    }

    #[test]
    fn pooled_covariance_of_identical_groups_is_variance() {
        let groups = vec![vec![0.1, 0.5, 0.2], vec![0.9, 0.4], vec![0.3, 0.35, 0.7, 0.6]];
        let (_, v) = pooled_with_group_jackknife(&groups);
        let c = pooled_covariance_with_group_jackknife(&groups, &groups);
        assert!((c.value - v.value).abs() < 1e-14);
        assert!((c.se - v.se).abs() < 1e-12);
    }

    #[test]
    fn separation_in_combined_se() {
        let a = MeanEstimate { value: 1.0, se: 0.3, samples: 10 };
        let b = MeanEstimate { value: 0.0, se: 0.4, samples: 10 };
        assert!((separation(&a, &b) - 2.0).abs() < 1e-12);
    }
}
