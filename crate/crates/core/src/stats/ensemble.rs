//! Ensemble estimators of kernel mean, variance and covariance.

use std::f64::consts::PI;

use rand::Rng;

use crate::ansatz::{BlockKind, CircuitInstance, CircuitSpec};
use crate::haar::BATCHES;
use crate::kernels::encode_dataset;
use crate::qstate::{hs_inner, prepare_initial, reduced_density, InitialState, Statevector, SubsystemMask};
use crate::rng::{self, tags};
use crate::theory::{self, TheoryPrediction};
use crate::{par, Error, Result};

use super::config::{EstimateConfig, Pooling, SamplingMode};
use super::estimator::{
    batch_covariance, batch_mean, batch_variance, covariance, mean, mean_of_groups, pooled_covariance_with_group_jackknife,
    pooled_with_group_jackknife, variance, MeanEstimate,
};
use super::report::EstimateReport;

/// Initial state for replicate `r`. Only Haar-random states depend on `r`.
pub fn replicate_init(cfg: &EstimateConfig, r: usize) -> Result<Statevector> {
    let seed = rng::child_seed(cfg.seed, tags::REPLICATE, r as u64);
    prepare_initial(&cfg.init, cfg.circuit.n(), seed)
}

/// Uniform points in `[-pi, pi)^n` for dataset `d`.
pub fn dataset(seed: u64, d: usize, points: usize, n: usize) -> Vec<Vec<f64>> {
    let mut r = rng::stream(seed, tags::DATASET, d as u64);
    (0..points).map(|_| (0..n).map(|_| r.random_range(-PI..PI)).collect()).collect()
}

/// Uniform angles in `[-pi, pi)` for parameter set `p`.
pub fn parameters(seed: u64, p: usize, count: usize) -> Vec<f64> {
    let mut r = rng::stream(seed, tags::PARAMETERS, p as u64);
    (0..count).map(|_| r.random_range(-PI..PI)).collect()
}

/// Raw kernel values for each mask, grouped as `[mask][group][value]`.
///
/// A Haar ensemble yields one group; a data ensemble yields one group per
/// (dataset, parameter set) cell, dataset-major.
pub fn kernel_samples(cfg: &EstimateConfig, masks: &[SubsystemMask], init: &Statevector) -> Result<Vec<Vec<Vec<f64>>>> {
    match cfg.sampling {
        SamplingMode::HaarEnsemble { pairs } => {
            let per = par::try_map_range(pairs, |i| {
                let left = CircuitInstance::haar(cfg.circuit, rng::child_seed(cfg.seed, tags::ENSEMBLE_LEFT, i as u64))?;
                let right = CircuitInstance::haar(cfg.circuit, rng::child_seed(cfg.seed, tags::ENSEMBLE_RIGHT, i as u64))?;
                let a = left.apply(init)?;
                let b = right.apply(init)?;
                masks
                    .iter()
                    .map(|k| hs_inner(&reduced_density(&a, k)?, &reduced_density(&b, k)?))
                    .collect::<Result<Vec<f64>>>()
            })?;
            Ok((0..masks.len()).map(|k| vec![per.iter().map(|v| v[k]).collect()]).collect())
        }
        SamplingMode::DataEnsemble { datasets, points, parameter_sets } => {
            let spec = match cfg.circuit {
                CircuitSpec::Ala(a) if a.kind() == BlockKind::Reupload => a,
                _ => return Err(Error::InvalidConfig("data ensemble needs re-upload circuits".into())),
            };
            let cells = par::try_map_range(datasets * parameter_sets, |c| {
                let (d, p) = (c / parameter_sets, c % parameter_sets);
                let data = dataset(cfg.seed, d, points, spec.n());
                let theta = parameters(cfg.seed, p, spec.parameter_count());
                let states = encode_dataset(spec, &data, &theta, init)?;
                masks
                    .iter()
                    .map(|k| {
                        let reduced = states.iter().map(|s| reduced_density(s, k)).collect::<Result<Vec<_>>>()?;
                        let mut values = Vec::with_capacity(points * (points - 1) / 2);
                        for i in 0..points {
                            for j in i + 1..points {
                                values.push(hs_inner(&reduced[i], &reduced[j])?);
                            }
                        }
                        Ok(values)
                    })
                    .collect::<Result<Vec<Vec<f64>>>>()
            })?;
            Ok((0..masks.len()).map(|k| cells.iter().map(|c| c[k].clone()).collect()).collect())
        }
    }
}

struct Moments {
    mean: MeanEstimate,
    variance: MeanEstimate,
    covariance: Option<MeanEstimate>,
}

fn moments(cfg: &EstimateConfig, x: &[Vec<f64>], y: Option<&[Vec<f64>]>) -> Moments {
    match (cfg.sampling, cfg.pooling) {
        (SamplingMode::HaarEnsemble { .. }, _) => Moments {
            mean: batch_mean(&x[0], BATCHES),
            variance: batch_variance(&x[0], BATCHES),
            covariance: y.map(|y| batch_covariance(&x[0], &y[0], BATCHES)),
        },
        (SamplingMode::DataEnsemble { .. }, Pooling::Pooled) => {
            let (m, v) = pooled_with_group_jackknife(x);
            Moments { mean: m, variance: v, covariance: y.map(|y| pooled_covariance_with_group_jackknife(x, y)) }
        }
        (SamplingMode::DataEnsemble { .. }, Pooling::PerCellMean) => {
            let total = x.iter().map(Vec::len).sum();
            let with_total = |e: MeanEstimate| MeanEstimate { samples: total, ..e };
            let cell_means: Vec<f64> = x.iter().map(|g| mean(g)).collect();
            let cell_vars: Vec<f64> = x.iter().map(|g| variance(g)).collect();
            Moments {
                mean: with_total(mean_of_groups(&cell_means)),
                variance: with_total(mean_of_groups(&cell_vars)),
                covariance: y.map(|y| {
                    let covs: Vec<f64> = x.iter().zip(y).map(|(a, b)| covariance(a, b)).collect();
                    with_total(mean_of_groups(&covs))
                }),
            }
        }
    }
}

/// Mean over replicates with the standard error `std / sqrt(R)`; a single
/// replicate keeps its own standard error.
fn combine(estimates: &[MeanEstimate]) -> MeanEstimate {
    if estimates.len() == 1 {
        return estimates[0];
    }
    let values: Vec<f64> = estimates.iter().map(|e| e.value).collect();
    MeanEstimate { samples: estimates.iter().map(|e| e.samples).sum(), ..mean_of_groups(&values) }
}

fn theory_for(cfg: &EstimateConfig, kappa: &SubsystemMask, init: &Statevector) -> (Option<TheoryPrediction>, Option<String>) {
    if cfg.circuit.kind() != BlockKind::Haar {
        return (None, Some("no closed form for re-upload circuits".into()));
    }
    let state_init = match cfg.init {
        InitialState::HaarRandom => InitialState::Explicit(init.amps().to_vec()),
        ref other => other.clone(),
    };
    match theory::ala_prediction(&cfg.circuit, kappa, &state_init) {
        Ok(p) => (Some(p), None),
        Err(e) => (None, Some(e.to_string())),
    }
}

fn run(cfg: &EstimateConfig, other: Option<&[usize]>) -> Result<EstimateReport> {
    let kappa = cfg.validate()?;
    let mut masks = vec![kappa.clone()];
    if let Some(o) = other {
        masks.push(cfg.mask(o)?);
    }
    let replicates = cfg.effective_replicates();
    let mut per = Vec::with_capacity(replicates);
    let mut first_init = None;
    for r in 0..replicates {
        let init = replicate_init(cfg, r)?;
        let samples = kernel_samples(cfg, &masks, &init)?;
        per.push(moments(cfg, &samples[0], samples.get(1).map(Vec::as_slice)));
        first_init.get_or_insert(init);
    }
    let init = first_init.expect("at least one replicate");
    let (theory, theory_note) = theory_for(cfg, &kappa, &init);
    let theory_covariance = match other {
        Some(_) if cfg.circuit.kind() == BlockKind::Haar => {
            let state_init = match cfg.init {
                InitialState::HaarRandom => InitialState::Explicit(init.amps().to_vec()),
                ref i => i.clone(),
            };
            theory::ala_covariance_claim(&cfg.circuit, &masks[0], &masks[1], &state_init).ok()
        }
        _ => None,
    };
    let mean = combine(&per.iter().map(|m| m.mean).collect::<Vec<_>>());
    let variance = combine(&per.iter().map(|m| m.variance).collect::<Vec<_>>());
    let covariance = other.map(|_| combine(&per.iter().map(|m| m.covariance.expect("paired run")).collect::<Vec<_>>()));
    Ok(EstimateReport {
        config: cfg.clone(),
        kappa_pair: other.map(<[usize]>::to_vec),
        samples: mean.samples,
        replicates,
        mean,
        variance,
        covariance,
        theory,
        theory_note,
        theory_covariance,
    })
}

/// Mean and variance of `Tr[rho_kappa rho'_kappa]` over the configured
/// ensemble, with the matching closed form when one exists.
pub fn estimate_kernel_stats(cfg: &EstimateConfig) -> Result<EstimateReport> {
    run(cfg, None)
}

/// Covariance of the kernels on `kappa` and `other` over one ensemble
/// (both evaluated on the same circuit draws). Variance and mean refer to
/// `kappa`.
pub fn estimate_covariance(cfg: &EstimateConfig, kappa: &[usize], other: &[usize]) -> Result<EstimateReport> {
    run(&cfg.clone().with_kappa(kappa.to_vec()), Some(other))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::AlaSpec;

    #[test]
    fn identical_subsystems_give_covariance_equal_to_variance() {
        let spec: CircuitSpec = AlaSpec::new(4, 2, 2, BlockKind::Haar).unwrap().into();
        let cfg = EstimateConfig::haar(spec, vec![1], 400, 3);
        let r = estimate_covariance(&cfg, &[1], &[1]).unwrap();
        assert_eq!(r.covariance.unwrap().value, r.variance.value);
    }

    #[test]
    fn reruns_are_identical() {
        let spec: CircuitSpec = AlaSpec::new(4, 2, 2, BlockKind::Reupload).unwrap().into();
        let cfg = EstimateConfig::data(spec, vec![1], 6, 11).with_init(InitialState::HaarRandom);
        let a = estimate_kernel_stats(&cfg).unwrap();
        let b = par::sequential(|| estimate_kernel_stats(&cfg).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.replicates, 5);
        assert_eq!(a.samples, 5 * 25 * 15);
        assert!(a.theory.is_none());
    }

    #[test]
    fn per_cell_pooling_averages_cells() {
        let spec: CircuitSpec = AlaSpec::new(4, 2, 2, BlockKind::Reupload).unwrap().into();
        let mut cfg = EstimateConfig::data(spec, vec![0], 5, 2);
        let pooled = estimate_kernel_stats(&cfg).unwrap();
        cfg.pooling = Pooling::PerCellMean;
        let cells = estimate_kernel_stats(&cfg).unwrap();
        // equal cell sizes: the two means coincide
        assert!((pooled.mean.value - cells.mean.value).abs() < 1e-12);
        assert_ne!(pooled.variance.value, cells.variance.value);
    }

    #[test]
    fn datasets_are_in_range_and_seeded() {
        let d = dataset(5, 0, 20, 3);
        assert!(d.iter().flatten().all(|x| (-PI..PI).contains(x)));
        assert_eq!(d, dataset(5, 0, 20, 3));
        assert_ne!(d, dataset(5, 1, 20, 3));
    }
}
