use anyhow::{bail, Result};
use serde::{Deserialize, Serialize};

use pqk_core::haar::{
    closed_moment, entry_moment_first, entry_moment_second, estimate_complex, estimate_entry_moment, estimate_moment,
    ks_critical_1pct, ks_two_sample, overlap_samples, random_operator, sample_haar_unitary, twirl_trace,
    twirl_trace_blocks, twirl_trace_closed, EntryIndex, Lemma, MomentEstimate, MomentOperands, MIN_SAMPLES,
};
use pqk_core::rng::{self, tags};
use pqk_core::C64;

use crate::manifest::{write_csv, Check, Outcome, RunContext};

const K_SE: f64 = 5.0;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HaarCheckConfig {
    /// Unitary dimensions for the moment identities.
    pub dims: Vec<usize>,
    pub samples: usize,
    /// Samples per side of the left-invariance test.
    pub ks_samples: usize,
    /// `(n, m)`: twirl `m` trailing qubits of an `n`-qubit operator.
    pub twirl_cases: Vec<(usize, usize)>,
    pub seed: u64,
}

impl Default for HaarCheckConfig {
    fn default() -> Self {
        Self { dims: vec![2, 4], samples: 100_000, ks_samples: 10_000, twirl_cases: vec![(2, 1), (3, 1), (3, 2)], seed: 0 }
    }
}

impl HaarCheckConfig {
    fn validate(&self) -> Result<()> {
        if let Some(d) = self.dims.iter().find(|&&d| d < 2) {
            bail!("dims: dimension {d} is below 2");
        }
        if self.dims.is_empty() {
            bail!("dims: at least one dimension is required");
        }
        if self.samples < MIN_SAMPLES || self.ks_samples < MIN_SAMPLES {
            bail!("refusing to run with fewer than {MIN_SAMPLES} samples (samples={}, ks_samples={})", self.samples, self.ks_samples);
        }
        if let Some((n, m)) = self.twirl_cases.iter().find(|(n, m)| *m == 0 || m >= n || *n > 10) {
            bail!("twirl_cases: need 0 < m < n <= 10, got ({n}, {m})");
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct Row {
    check: String,
    d: usize,
    samples: usize,
    estimate_re: f64,
    estimate_im: f64,
    se_re: f64,
    se_im: f64,
    exact_re: f64,
    exact_im: f64,
    z: f64,
    passed: bool,
}

impl Row {
    fn sampled(check: String, d: usize, est: &MomentEstimate, exact: C64) -> Self {
        let z = |v: f64, t: f64, se: f64| if se > 0.0 { ((v - t) / se).abs() } else if v == t { 0.0 } else { f64::INFINITY };
        Self {
            check,
            d,
            samples: est.samples,
            estimate_re: est.value.re,
            estimate_im: est.value.im,
            se_re: est.se_re,
            se_im: est.se_im,
            exact_re: exact.re,
            exact_im: exact.im,
            z: z(est.value.re, exact.re, est.se_re).max(z(est.value.im, exact.im, est.se_im)),
            passed: est.agrees_with(exact, K_SE),
        }
    }
}

/// Index patterns with nonzero and zero Haar averages.
fn first_entries() -> [EntryIndex; 3] {
    [[0, 0, 0, 0], [0, 1, 0, 1], [0, 1, 1, 0]]
}

fn second_entries() -> [(EntryIndex, EntryIndex); 4] {
    [
        ([0, 0, 0, 0], [0, 0, 0, 0]),
        ([0, 0, 0, 0], [0, 1, 0, 1]),
        ([0, 1, 0, 0], [1, 0, 1, 1]),
        ([0, 0, 1, 0], [1, 1, 0, 1]),
    ]
}

pub fn run(ctx: &RunContext) -> Result<Outcome> {
    let mut cfg: HaarCheckConfig = ctx.load()?;
    cfg.seed = ctx.seed_or(cfg.seed);
    cfg.validate()?;
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    let seed = |tag: u64, i: u64| rng::child_seed(cfg.seed, tag, i);

    for &d in &cfg.dims {
        let mut r = rng::stream(cfg.seed, tags::OPERANDS, d as u64);
        let mut op = || random_operator(d, &mut r);
        let first = MomentOperands::first(op(), op());
        let second = MomentOperands::second(op(), op(), op(), op());
        for (i, (lemma, ops)) in [(Lemma::L1, &first), (Lemma::L2, &second), (Lemma::L3, &second)].into_iter().enumerate() {
            let est = estimate_moment(lemma, ops, cfg.samples, seed(tags::HAAR_MOMENT, (d * 10 + i) as u64))?;
            rows.push(Row::sampled(format!("lemma{}", i + 1), d, &est, closed_moment(lemma, ops)?));
        }
        for (i, e) in first_entries().into_iter().enumerate() {
            let est = estimate_entry_moment(d, &[e], cfg.samples, seed(tags::HAAR_MOMENT, (d * 100 + i) as u64))?;
            rows.push(Row::sampled(format!("first_moment{e:?}"), d, &est, C64::new(entry_moment_first(d, e), 0.0)));
        }
        for (i, (a, b)) in second_entries().into_iter().enumerate() {
            let est = estimate_entry_moment(d, &[a, b], cfg.samples, seed(tags::HAAR_MOMENT, (d * 1000 + i) as u64))?;
            rows.push(Row::sampled(format!("second_moment{a:?}{b:?}"), d, &est, C64::new(entry_moment_second(d, a, b), 0.0)));
        }
        let v = sample_haar_unitary(d, &mut rng::stream(cfg.seed, tags::KS_ROTATED, u64::MAX))?;
        let plain = overlap_samples(d, None, cfg.ks_samples, seed(tags::KS_REFERENCE, d as u64), tags::KS_REFERENCE)?;
        let rotated = overlap_samples(d, Some(&v), cfg.ks_samples, seed(tags::KS_ROTATED, d as u64), tags::KS_ROTATED)?;
        let stat = ks_two_sample(&plain, &rotated);
        let critical = ks_critical_1pct(plain.len(), rotated.len());
        checks.push(Check::new(format!("left_invariance d={d}"), stat < critical, format!("KS {stat:.4} vs 1% critical {critical:.4}")));
    }

    for (i, &(n, m)) in cfg.twirl_cases.iter().enumerate() {
        let dim = 1usize << n;
        let mut r = rng::stream(cfg.seed, tags::OPERANDS, 1000 + i as u64);
        let a = random_operator(dim, &mut r);
        let b = random_operator(dim, &mut r);
        let w = sample_haar_unitary(1 << m, &mut r)?;
        let err = (twirl_trace(&a, &b, &w, n)? - twirl_trace_blocks(&a, &b, &w, n)?).norm();
        checks.push(Check::new(format!("block_expansion n={n} m={m}"), err <= 1e-10, format!("|difference| = {err:.2e}")));
        let est = estimate_complex(cfg.samples, seed(tags::HAAR_MOMENT, 10_000 + i as u64), tags::HAAR_MOMENT, |g| {
            twirl_trace(&a, &b, &sample_haar_unitary(1 << m, g)?, n)
        })?;
        rows.push(Row::sampled(format!("partial_twirl n={n} m={m}"), 1 << m, &est, twirl_trace_closed(&a, &b, n, m)?));
    }

    for r in &rows {
        checks.push(Check::new(format!("{} d={}", r.check, r.d), r.passed, format!("|z| = {:.2}", r.z)));
    }
    let csv = ctx.out_path("haar_check.csv")?;
    write_csv(&csv, &rows)?;
    ctx.finish(cfg.seed, &cfg, &["haar_check.csv".to_string()], &checks)
}
