use anyhow::Result;
use serde::{Deserialize, Serialize};

use pqk_core::ansatz::{AlaSpec, BlockKind, CircuitSpec};
use pqk_core::qstate::InitialState;
use pqk_core::rng;
use pqk_core::stats::{estimate_covariance, estimate_kernel_stats, EstimateConfig, EstimateReport, ReportRow};
use pqk_core::theory::{ala_variance_exact, rqc_stats, Position, PurityProfile, VarianceKind};

use crate::manifest::{write_csv, Check, Outcome, RunContext};

const K_SE: f64 = 5.0;
const CASE_TAG: u64 = 0x7c;

fn default_pairs() -> usize {
    20_000
}

fn default_init() -> InitialState {
    InitialState::AllZero
}

/// One row of the suite.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum Case {
    /// Sampled mean and variance against the closed form.
    Variance {
        circuit: CircuitSpec,
        kappa: Vec<usize>,
        #[serde(default = "default_init")]
        init: InitialState,
        #[serde(default = "default_pairs")]
        pairs: usize,
    },
    /// Sampled covariance of two subsystems against the claimed value.
    Covariance {
        circuit: CircuitSpec,
        kappa: Vec<usize>,
        other: Vec<usize>,
        #[serde(default = "default_init")]
        init: InitialState,
        #[serde(default = "default_pairs")]
        pairs: usize,
    },
    /// One-layer ALA with a single block against the global formula.
    Bridge { max_m: usize },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TheoryCheckConfig {
    pub cases: Vec<Case>,
    pub seed: u64,
}

fn ala(n: usize, layers: usize) -> CircuitSpec {
    AlaSpec::new(n, 2, layers, BlockKind::Haar).expect("valid default spec").into()
}

impl Default for TheoryCheckConfig {
    fn default() -> Self {
        let variance = |circuit, kappa: Vec<usize>| Case::Variance { circuit, kappa, init: default_init(), pairs: default_pairs() };
        let covariance = |circuit, kappa: Vec<usize>, other: Vec<usize>| Case::Covariance {
            circuit,
            kappa,
            other,
            init: default_init(),
            pairs: default_pairs(),
        };
        let mut cases: Vec<Case> = [(2, 1), (3, 1), (4, 1), (4, 2)]
            .into_iter()
            .map(|(n, nk)| variance(CircuitSpec::Global { n }, (0..nk).collect()))
            .collect();
        cases.push(variance(ala(4, 1), vec![0]));
        cases.push(variance(ala(4, 2), vec![1]));
        cases.push(variance(ala(6, 3), vec![2]));
        cases.push(covariance(ala(4, 2), vec![1], vec![2]));
        cases.push(covariance(ala(6, 2), vec![1], vec![4]));
        cases.push(Case::Bridge { max_m: 6 });
        Self { cases, seed: 0 }
    }
}

fn label(r: &EstimateReport) -> String {
    let row = r.row();
    format!("{} n={} L={} kappa={}", row.circuit, row.n, row.layers, row.kappa)
}

fn variance_check(r: &EstimateReport) -> Check {
    let name = format!("variance {}", label(r));
    match r.theory {
        None => Check::new(name, false, r.theory_note.clone().unwrap_or_else(|| "no closed form".into())),
        Some(t) if t.kind == VarianceKind::Bound => Check::warn(
            name,
            format!("bound only ({}): sampled {:.4e}, bound {:.4e}", t.formula.as_str(), r.variance.value, t.variance),
        ),
        Some(t) => {
            let zm = r.mean.z(t.mean);
            let zv = r.variance.z(t.variance);
            Check::new(
                name,
                zm.abs() <= K_SE && zv.abs() <= K_SE,
                format!("mean z={zm:+.2}; var {:.4e} vs {:.4e} (z={zv:+.2})", r.variance.value, t.variance),
            )
        }
    }
}

fn covariance_check(r: &EstimateReport) -> Check {
    let name = format!("covariance {}", label(r));
    match (r.covariance, r.theory_covariance) {
        (Some(c), Some(claim)) => {
            let z = c.z(claim);
            Check::new(name, z.abs() <= K_SE, format!("cov {:.4e} vs claimed {claim:.4e} (z={z:+.2})", c.value))
        }
        _ => Check::new(name, false, "no covariance claim for this pair"),
    }
}

fn bridge_check(max_m: usize) -> Check {
    let mut worst: f64 = 0.0;
    let mut err = None;
    for m in 1..=max_m {
        for nk in 1..=m {
            let ala = ala_variance_exact(m, nk, 1, Position::Middle, &PurityProfile::product(m, 1));
            match (ala, rqc_stats(m, nk)) {
                (Ok((a, _)), Ok(g)) => worst = worst.max((a - g.variance).abs()),
                (Err(e), _) | (_, Err(e)) => err = Some(e.to_string()),
            }
        }
    }
    match err {
        Some(e) => Check::new(format!("bridge m=1..{max_m}"), false, e),
        None => Check::new(format!("bridge m=1..{max_m}"), worst <= 1e-12, format!("max difference {worst:.2e}")),
    }
}

pub fn run(ctx: &RunContext) -> Result<Outcome> {
    let mut cfg: TheoryCheckConfig = ctx.load()?;
    cfg.seed = ctx.seed_or(cfg.seed);
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for (i, case) in cfg.cases.iter().enumerate() {
        let seed = rng::child_seed(cfg.seed, CASE_TAG, i as u64);
        let (est, other) = match case {
            Case::Bridge { max_m } => {
                checks.push(bridge_check(*max_m));
                continue;
            }
            Case::Variance { circuit, kappa, init, pairs } => {
                (EstimateConfig::haar(*circuit, kappa.clone(), *pairs, seed).with_init(init.clone()), None)
            }
            Case::Covariance { circuit, kappa, other, init, pairs } => {
                (EstimateConfig::haar(*circuit, kappa.clone(), *pairs, seed).with_init(init.clone()), Some(other))
            }
        };
        let report = match other {
            None => estimate_kernel_stats(&est),
            Some(o) => estimate_covariance(&est, &est.kappa, o),
        };
        match report {
            Ok(r) => {
                checks.push(if other.is_some() { covariance_check(&r) } else { variance_check(&r) });
                rows.push(r.row());
            }
            Err(e) => {
                let mut row = ReportRow::from_config(&est);
                row.error = e.to_string();
                checks.push(Check::new(format!("case {i} {} kappa={}", row.circuit, row.kappa), false, e.to_string()));
                rows.push(row);
            }
        }
    }
    write_csv(&ctx.out_path("theory_check.csv")?, &rows)?;
    ctx.finish(cfg.seed, &cfg, &["theory_check.csv".to_string()], &checks)
}
