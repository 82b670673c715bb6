use anyhow::Result;
use serde::{Deserialize, Serialize};

use pqk_core::ansatz::{AlaSpec, BlockKind};
use pqk_core::qstate::InitialState;
use pqk_core::stats::{gram_study, sweep, EstimateConfig, GramStudyConfig, SweepKind};

use crate::manifest::{write_csv, Check, Outcome, RunContext};

/// Grid sweep around a base configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: EstimateConfig,
    /// Depths, qubit positions or register sizes.
    pub values: Vec<usize>,
    pub inits: Vec<InitialState>,
}

fn all_inits() -> Vec<InitialState> {
    vec![InitialState::AllZero, InitialState::Ghz, InitialState::HaarRandom]
}

/// Reduced-scale defaults: 10 points per dataset, 25 cells.
fn default_sweep(kind: SweepKind) -> SweepConfig {
    let (n, layers, kappa, values) = match kind {
        SweepKind::Depth => (6, 2, 2, vec![2, 4, 6]),
        SweepKind::Position => (9, 4, 4, (0..9).collect()),
        _ => (3, 4, 1, vec![3, 4, 5, 6, 7]),
    };
    let spec = AlaSpec::new(n, 2, layers, BlockKind::Reupload).expect("valid default spec");
    SweepConfig { base: EstimateConfig::data(spec.into(), vec![kappa], 10, 0), values, inits: all_inits() }
}

fn default_gram() -> GramStudyConfig {
    GramStudyConfig { qubits: vec![4, 6, 8], layers: 6, points: 40, inits: all_inits(), kappa: None, replicates: 5, seed: 0 }
}

pub fn run(ctx: &RunContext, kind: &str) -> Result<Outcome> {
    let kind: SweepKind = kind.parse()?;
    let file = format!("sweep_{}.csv", kind.as_str());
    if kind == SweepKind::Gram {
        let mut cfg = ctx.load_or(default_gram())?;
        cfg.seed = ctx.seed_or(cfg.seed);
        let rows = gram_study(&cfg)?;
        let checks: Vec<Check> = rows
            .iter()
            .map(|r| {
                let name = format!("gram n={} init={} replicate={}", r.n, r.init, r.replicate);
                match (r.error.is_empty(), r.off_std) {
                    (true, Some(s)) => Check::new(name, true, format!("off-diagonal std {s:.4e}")),
                    _ => Check::new(name, false, r.error.clone()),
                }
            })
            .collect();
        write_csv(&ctx.out_path(&file)?, &rows)?;
        return ctx.finish(cfg.seed, &cfg, &[file], &checks);
    }
    let mut cfg = ctx.load_or(default_sweep(kind))?;
    cfg.base.seed = ctx.seed_or(cfg.base.seed);
    let rows = sweep(kind, &cfg.values, &cfg.inits, &cfg.base)?;
    let checks: Vec<Check> = rows
        .iter()
        .map(|r| {
            let name = format!("{} {}={} init={}", kind.as_str(), kind.as_str(), r.value, r.row.init);
            match &r.report {
                Ok(rep) => Check::new(name, true, format!("var {:.4e} +- {:.1e}", rep.variance.value, rep.variance.se)),
                Err(e) => Check::new(name, false, e.clone()),
            }
        })
        .collect();
    let table: Vec<_> = rows.iter().map(|r| r.row.clone()).collect();
    write_csv(&ctx.out_path(&file)?, &table)?;
    ctx.finish(cfg.base.seed, &cfg, &[file], &checks)
}
