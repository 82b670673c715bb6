use anyhow::{bail, Result};
use serde::{Deserialize, Serialize};

use pqk_core::ansatz::{AlaSpec, BlockKind};
use pqk_core::kernels::{encode_dataset, gram_from_states, FeatureMap, Features, KernelKind};
use pqk_core::qstate::{prepare_initial, InitialState};
use pqk_core::rng::{self, tags};
use pqk_core::stats::ensemble::parameters;
use pqk_core::svm::{accuracy, predict, train_dual, two_clusters, SvmParams};

use crate::manifest::{write_csv, write_json, Check, Outcome, RunContext};

/// Points with `+1`/`-1` labels.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Labeled {
    pub x: Vec<Vec<f64>>,
    pub labels: Vec<i8>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvmDemoConfig {
    pub n: usize,
    pub layers: usize,
    pub kernel: KernelKind,
    pub init: InitialState,
    pub svm: SvmParams,
    /// Synthetic cluster sizes and jitter, used when `train`/`test` are absent.
    pub train_points: usize,
    pub test_points: usize,
    pub spread: f64,
    pub train: Option<Labeled>,
    pub test: Option<Labeled>,
    /// Circuit angles; drawn uniformly from the seed when absent.
    pub theta: Option<Vec<f64>>,
    pub seed: u64,
}

impl Default for SvmDemoConfig {
    fn default() -> Self {
        Self {
            n: 4,
            layers: 2,
            kernel: KernelKind::LinearProjected { kappas: None },
            init: InitialState::AllZero,
            svm: SvmParams::default(),
            train_points: 40,
            test_points: 20,
            spread: 0.4,
            train: None,
            test: None,
            theta: None,
            seed: 0,
        }
    }
}

#[derive(Serialize)]
struct PredictionRow {
    split: &'static str,
    index: usize,
    label: i8,
    decision: f64,
    predicted: i8,
}

fn data(cfg: &SvmDemoConfig, given: &Option<Labeled>, points: usize, index: u64) -> Result<Labeled> {
    let set = match given {
        Some(d) => d.clone(),
        None => {
            let (x, labels) = two_clusters(points, cfg.n, cfg.spread, rng::child_seed(cfg.seed, tags::SVM_DATA, index));
            Labeled { x, labels }
        }
    };
    if set.x.len() != set.labels.len() {
        bail!("{} points but {} labels", set.x.len(), set.labels.len());
    }
    if let Some(p) = set.x.iter().find(|p| p.len() != cfg.n) {
        bail!("point of dimension {} in a {}-qubit demo", p.len(), cfg.n);
    }
    Ok(set)
}

pub fn run(ctx: &RunContext) -> Result<Outcome> {
    let mut cfg: SvmDemoConfig = ctx.load()?;
    cfg.seed = ctx.seed_or(cfg.seed);
    let spec = AlaSpec::new(cfg.n, 2, cfg.layers, BlockKind::Reupload)?;
    let train = data(&cfg, &cfg.train, cfg.train_points, 0)?;
    let test = data(&cfg, &cfg.test, cfg.test_points, 1)?;
    let theta = cfg.theta.clone().unwrap_or_else(|| parameters(cfg.seed, 0, spec.parameter_count()));
    cfg.theta = Some(theta.clone());

    let init = prepare_initial(&cfg.init, cfg.n, cfg.seed)?;
    let train_states = encode_dataset(spec, &train.x, &theta, &init)?;
    let test_states = encode_dataset(spec, &test.x, &theta, &init)?;
    let gram = gram_from_states(&train_states, &cfg.kernel)?;
    let mut model = train_dual(gram.entries(), &train.labels, cfg.svm)?;
    model.meta = serde_json::json!({ "kernel": cfg.kernel, "n": cfg.n, "layers": cfg.layers });

    let map = FeatureMap::new(cfg.kernel.clone(), cfg.n)?;
    let train_features = train_states.iter().map(|s| map.features(s)).collect::<pqk_core::Result<Vec<Features>>>()?;
    let mut rows = Vec::new();
    let mut score = |split: &'static str, labels: &[i8], states: &[pqk_core::qstate::Statevector]| -> Result<f64> {
        let mut predicted = Vec::with_capacity(labels.len());
        for (index, (s, &label)) in states.iter().zip(labels).enumerate() {
            let f = map.features(s)?;
            let k = train_features.iter().map(|t| map.eval(&f, t)).collect::<pqk_core::Result<Vec<f64>>>()?;
            let p = predict(&model, &k)?;
            rows.push(PredictionRow { split, index, label, decision: model.decision(&k)?, predicted: p });
            predicted.push(p);
        }
        if labels.is_empty() {
            return Ok(f64::NAN);
        }
        Ok(accuracy(&predicted, labels)?)
    };
    let train_acc = score("train", &train.labels, &train_states)?;
    let test_acc = score("test", &test.labels, &test_states)?;

    let monotone = model.objective_history.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0));
    let mut checks = vec![
        Check::new("solver", true, format!("converged in {} sweeps, {} support vectors", model.iterations, model.support_vectors().len())),
        Check::new("objective_monotone", monotone, format!("final dual objective {:.6e}", model.objective_history.last().unwrap_or(&0.0))),
    ];
    if cfg.svm.c.is_none() {
        checks.push(Check::new("hard_margin_fit", train_acc == 1.0, format!("training accuracy {train_acc}")));
    } else {
        checks.push(Check::warn("train_accuracy", format!("{train_acc}")));
    }
    checks.push(Check::warn("test_accuracy", format!("{test_acc}")));

    let gram_file = ctx.out_path("gram_train.csv")?;
    gram.write_csv(&gram_file)?;
    model.write_json(&ctx.out_path("svm_model.json")?)?;
    write_csv(&ctx.out_path("svm_predictions.csv")?, &rows)?;
    write_json(&ctx.out_path("svm_accuracy.json")?, &serde_json::json!({ "train": train_acc, "test": test_acc }))?;
    let outputs = ["gram_train.csv", "svm_model.json", "svm_predictions.csv", "svm_accuracy.json"].map(String::from);
    ctx.finish(cfg.seed, &cfg, &outputs, &checks)
}
