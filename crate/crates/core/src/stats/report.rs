use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::theory::TheoryPrediction;
use crate::Result;

use super::config::EstimateConfig;
use super::estimator::MeanEstimate;

/// Monte-Carlo statistics of one configuration next to the closed form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub config: EstimateConfig,
    /// Second subsystem of a covariance run.
    pub kappa_pair: Option<Vec<usize>>,
    pub mean: MeanEstimate,
    pub variance: MeanEstimate,
    pub covariance: Option<MeanEstimate>,
    pub samples: usize,
    pub replicates: usize,
    pub theory: Option<TheoryPrediction>,
    /// Why `theory` is missing, when it is.
    pub theory_note: Option<String>,
    pub theory_covariance: Option<f64>,
}

impl EstimateReport {
    pub fn row(&self) -> ReportRow {
        let mut row = ReportRow::from_config(&self.config);
        if let Some(o) = &self.kappa_pair {
            row.kappa = format!("{}|{}", row.kappa, join(o));
        }
        row.samples = Some(self.samples);
        row.mean = Some(self.mean.value);
        row.mean_se = Some(self.mean.se);
        row.var = Some(self.variance.value);
        row.var_se = Some(self.variance.se);
        row.theory_mean = self.theory.map(|t| t.mean);
        row.theory_var = self.theory.map(|t| t.variance);
        row.formula_id = self.theory.map(|t| t.formula.as_str().to_string()).unwrap_or_default();
        row.cov = self.covariance.map(|c| c.value);
        row.cov_se = self.covariance.map(|c| c.se);
        row.theory_cov = self.theory_covariance;
        row
    }
}

fn join(q: &[usize]) -> String {
    q.iter().map(usize::to_string).collect::<Vec<_>>().join(";")
}

/// One CSV line. Statistics are empty when a row failed; `error` says why.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub seed: u64,
    pub circuit: String,
    pub n: usize,
    pub m: usize,
    #[serde(rename = "L")]
    pub layers: usize,
    pub kappa: String,
    pub init: String,
    pub samples: Option<usize>,
    pub mean: Option<f64>,
    pub mean_se: Option<f64>,
    pub var: Option<f64>,
    pub var_se: Option<f64>,
    pub theory_mean: Option<f64>,
    pub theory_var: Option<f64>,
    pub formula_id: String,
    pub cov: Option<f64>,
    pub cov_se: Option<f64>,
    pub theory_cov: Option<f64>,
    pub error: String,
}

impl ReportRow {
    /// Row with only the configuration columns filled in.
    pub fn from_config(cfg: &EstimateConfig) -> Self {
        Self {
            seed: cfg.seed,
            circuit: cfg.circuit.label().to_string(),
            n: cfg.circuit.n(),
            m: cfg.circuit.m(),
            layers: cfg.circuit.layers(),
            kappa: join(&cfg.kappa),
            init: cfg.init.label().to_string(),
            ..Self::default()
        }
    }
}

/// Writes rows as CSV with a header line.
pub fn write_rows<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
