//! Haar-random unitaries and Monte-Carlo checks of low-order Haar moments.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::qstate::{self, embed, partial_trace, SubsystemMask};
use crate::rng::{self, StreamRng};
use crate::stats::estimator::{self, MeanEstimate};
use crate::{par, CMatrix, Error, Result, C64};

pub use crate::qstate::random_state;

/// Minimum sample count accepted by the Monte-Carlo moment estimators.
pub const MIN_SAMPLES: usize = 100;

/// Batches used for batch-means standard errors.
pub const BATCHES: usize = 50;

/// Haar-distributed `d x d` unitary.
///
/// QR-decomposes a matrix of i.i.d. standard complex Gaussians and
/// multiplies each column of `Q` by the phase of the matching diagonal
/// entry of `R`, which removes the bias of the plain QR output.
pub fn sample_haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<CMatrix> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let z = CMatrix::from_fn(d, d, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re * scale, im * scale)
    });
    let qr = z.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..d {
        let rjj = r[(j, j)];
        let norm = rjj.norm();
        let phase = if norm > 0.0 { rjj / norm } else { C64::new(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    Ok(q)
}

/// Which moment identity to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Lemma {
    /// `E Tr[W A W^dag B]`.
    L1,
    /// `E Tr[W A W^dag B W C W^dag D]`.
    L2,
    /// `E Tr[W A W^dag B] Tr[W C W^dag D]`.
    L3,
}

/// Operands `A, B` and, for second moments, `C, D`.
#[derive(Clone, Debug)]
pub struct MomentOperands {
    pub a: CMatrix,
    pub b: CMatrix,
    pub c: Option<CMatrix>,
    pub d: Option<CMatrix>,
}

impl MomentOperands {
    pub fn first(a: CMatrix, b: CMatrix) -> Self {
        Self { a, b, c: None, d: None }
    }

    pub fn second(a: CMatrix, b: CMatrix, c: CMatrix, d: CMatrix) -> Self {
        Self { a, b, c: Some(c), d: Some(d) }
    }

    /// Shared dimension of every operand.
    pub fn dim(&self) -> Result<usize> {
        let d = self.a.nrows();
        if d < 2 {
            return Err(Error::InvalidDimension(d));
        }
        for m in [Some(&self.a), Some(&self.b), self.c.as_ref(), self.d.as_ref()].into_iter().flatten() {
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::DimensionMismatch { expected: d, found: m.nrows().max(m.ncols()) });
            }
        }
        Ok(d)
    }

    fn second_pair(&self) -> Result<(&CMatrix, &CMatrix)> {
        let c = self.c.as_ref().ok_or(Error::MissingOperand("C"))?;
        let d = self.d.as_ref().ok_or(Error::MissingOperand("D"))?;
        Ok((c, d))
    }
}

/// Monte-Carlo estimate of a possibly complex quantity.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct MomentEstimate {
    pub value: C64,
    pub se_re: f64,
    pub se_im: f64,
    pub samples: usize,
}

impl MomentEstimate {
    /// True when both components are within `k` standard errors of `target`.
    /// A zero standard error only accepts agreement to 1e-12.
    pub fn agrees_with(&self, target: C64, k: f64) -> bool {
        let ok = |est: f64, se: f64, t: f64| (est - t).abs() <= (k * se).max(1e-12);
        ok(self.value.re, self.se_re, target.re) && ok(self.value.im, self.se_im, target.im)
    }
}

/// Exact Haar average of the chosen moment.
pub fn closed_moment(lemma: Lemma, ops: &MomentOperands) -> Result<C64> {
    let d = ops.dim()? as f64;
    let tr_a = ops.a.trace();
    let tr_b = ops.b.trace();
    match lemma {
        Lemma::L1 => Ok(tr_a * tr_b / d),
        Lemma::L2 | Lemma::L3 => {
            let (c, dm) = ops.second_pair()?;
            let tr_c = c.trace();
            let tr_d = dm.trace();
            let tr_ac = qstate::trace_product(&ops.a, c)?;
            let tr_bd = qstate::trace_product(&ops.b, dm)?;
            let s1 = 1.0 / (d * d - 1.0);
            let s2 = 1.0 / (d * (d * d - 1.0));
            let mixed = tr_a * tr_c * tr_bd + tr_ac * tr_b * tr_d;
            let paired = tr_a * tr_b * tr_c * tr_d + tr_ac * tr_bd;
            Ok(match lemma {
                Lemma::L2 => mixed * s1 - paired * s2,
                _ => paired * s1 - mixed * s2,
            })
        }
    }
}

/// The integrand of `lemma` at a fixed unitary `w`.
pub fn moment_integrand(lemma: Lemma, ops: &MomentOperands, w: &CMatrix) -> Result<C64> {
    let wd = w.adjoint();
    let wa = w * &ops.a * &wd;
    match lemma {
        Lemma::L1 => qstate::trace_product(&wa, &ops.b),
        Lemma::L2 => {
            let (c, d) = ops.second_pair()?;
            let wc = w * c * &wd;
            qstate::trace_product(&(wa * &ops.b * wc), d)
        }
        Lemma::L3 => {
            let (c, d) = ops.second_pair()?;
            let wc = w * c * &wd;
            Ok(qstate::trace_product(&wa, &ops.b)? * qstate::trace_product(&wc, d)?)
        }
    }
}

/// Sample mean of the integrand over `samples` Haar unitaries.
pub fn estimate_moment(lemma: Lemma, ops: &MomentOperands, samples: usize, seed: u64) -> Result<MomentEstimate> {
    let dim = ops.dim()?;
    if lemma != Lemma::L1 {
        ops.second_pair()?;
    }
    let est = estimate_complex(samples, seed, rng::tags::HAAR_MOMENT, |rng| {
        let w = sample_haar_unitary(dim, rng)?;
        moment_integrand(lemma, ops, &w)
    })?;
    Ok(est)
}

/// Batch-means estimate of `E f(W-sample)` for a complex-valued `f`.
pub fn estimate_complex<F>(samples: usize, seed: u64, tag: u64, f: F) -> Result<MomentEstimate>
where
    F: Fn(&mut StreamRng) -> Result<C64> + Sync + Send,
{
    let [re, im] = estimate_components::<2, _>(samples, seed, tag, |rng| {
        let z = f(rng)?;
        Ok([z.re, z.im])
    })?;
    Ok(MomentEstimate { value: C64::new(re.value, im.value), se_re: re.se, se_im: im.se, samples })
}

/// Batch-means estimates of each component of a vector-valued sample.
/// Sample `i` draws from its own stream, so results do not depend on
/// scheduling.
pub fn estimate_components<const K: usize, F>(
    samples: usize,
    seed: u64,
    tag: u64,
    f: F,
) -> Result<[MeanEstimate; K]>
where
    F: Fn(&mut StreamRng) -> Result<[f64; K]> + Sync + Send,
{
    if samples < MIN_SAMPLES {
        return Err(Error::TooFewSamples { got: samples, min: MIN_SAMPLES });
    }
    let draws = par::try_map_range(samples, |i| f(&mut rng::stream(seed, tag, i as u64)))?;
    let mut column = vec![0.0; samples];
    Ok(std::array::from_fn(|k| {
        for (slot, row) in column.iter_mut().zip(&draws) {
            *slot = row[k];
        }
        estimator::batch_mean(&column, BATCHES)
    }))
}

/// `Tr[(I (x) W) A (I (x) W^dag) B]` with `W` on the last `log2(w.nrows())` qubits of `n`.
pub fn twirl_trace(a: &CMatrix, b: &CMatrix, w: &CMatrix, n: usize) -> Result<C64> {
    let m = w.nrows().trailing_zeros() as usize;
    let targets: Vec<usize> = (n - m..n).collect();
    let full = embed(w, &targets, n)?;
    qstate::trace_product(&(&full * a * full.adjoint()), b)
}

/// Closed form of the single-factor twirl: `Tr[Tr_w A Tr_w B] / d_w`,
/// where `w` is the last `m` of `n` qubits.
pub fn twirl_trace_closed(a: &CMatrix, b: &CMatrix, n: usize, m: usize) -> Result<C64> {
    if m == 0 || m >= n {
        return Err(Error::InvalidTargets(format!("twirled factor of {m} qubits out of {n}")));
    }
    let keep = SubsystemMask::new(n, &(0..n - m).collect::<Vec<_>>())?;
    let ra = partial_trace(a, n, &keep)?;
    let rb = partial_trace(b, n, &keep)?;
    Ok(qstate::trace_product(&ra, &rb)? / (1u64 << m) as f64)
}

/// Block-sum form `sum_{p,q} Tr[W A_qp W^dag B_pq]`, where `A_qp` is the
/// `(q, p)` block of `A` over the first `n - m` qubits.
pub fn twirl_trace_blocks(a: &CMatrix, b: &CMatrix, w: &CMatrix, n: usize) -> Result<C64> {
    let dw = w.nrows();
    let dim = 1usize << n;
    if a.nrows() != dim || b.nrows() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: a.nrows() });
    }
    let outer = dim / dw;
    let wd = w.adjoint();
    let mut acc = C64::new(0.0, 0.0);
    for p in 0..outer {
        for q in 0..outer {
            let a_qp = a.view((q * dw, p * dw), (dw, dw));
            let b_pq = b.view((p * dw, q * dw), (dw, dw));
            let lhs = w * a_qp * &wd;
            acc += qstate::trace_product(&lhs, &b_pq.into_owned())?;
        }
    }
    Ok(acc)
}

/// Random complex matrix with i.i.d. standard complex Gaussian entries.
pub fn random_operator<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(d, d, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    })
}

/// Random Hermitian matrix `(G + G^dag) / 2`.
pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = random_operator(d, rng);
    (&g + g.adjoint()) * C64::new(0.5, 0.0)
}

/// `|<0| V W |0>|^2` for `samples` Haar `W`, one stream per sample.
pub fn overlap_samples(d: usize, v: Option<&CMatrix>, samples: usize, seed: u64, tag: u64) -> Result<Vec<f64>> {
    par::try_map_range(samples, |i| {
        let mut rng = rng::stream(seed, tag, i as u64);
        let w = sample_haar_unitary(d, &mut rng)?;
        let col = w.column(0);
        let amp = match v {
            Some(v) => (v.row(0) * col)[(0, 0)],
            None => col[0],
        };
        Ok(amp.norm_sqr())
    })
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic 1% critical value of the two-sample KS statistic.
pub fn ks_critical_1pct(na: usize, nb: usize) -> f64 {
    let (na, nb) = (na as f64, nb as f64);
    1.628 * ((na + nb) / (na * nb)).sqrt()
}

/// `W rho W^dag` summed over Haar samples, entrywise batch-means estimates
/// of the real and imaginary parts (row-major).
pub fn estimate_twirl(rho: &CMatrix, samples: usize, seed: u64) -> Result<Vec<MomentEstimate>> {
    let d = rho.nrows();
    (0..d * d)
        .map(|k| {
            let (i, j) = (k / d, k % d);
            estimate_complex(samples, seed, rng::tags::HAAR_MOMENT, |rng| {
                let w = sample_haar_unitary(d, rng)?;
                let out = &w * rho * w.adjoint();
                Ok(out[(i, j)])
            })
        })
        .collect()
}

/// Projector `|j><j|` in dimension `d`.
pub fn basis_projector(d: usize, j: usize) -> CMatrix {
    let mut v = DVector::from_element(d, C64::new(0.0, 0.0));
    v[j] = C64::new(1.0, 0.0);
    &v * v.adjoint()
}

/// Matrix-entry indices `(i, j, l, k)` of `W_ij W*_lk`.
pub type EntryIndex = [usize; 4];

fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// Haar average of `W_ij W*_lk`: `delta_il delta_jk / d`.
pub fn entry_moment_first(d: usize, [i, j, l, k]: EntryIndex) -> f64 {
    delta(i, l) * delta(j, k) / d as f64
}

/// Haar average of `W_i1j1 W*_l1k1 W_i2j2 W*_l2k2` (second-order
/// Weingarten formula).
pub fn entry_moment_second(d: usize, [i1, j1, l1, k1]: EntryIndex, [i2, j2, l2, k2]: EntryIndex) -> f64 {
    let d = d as f64;
    let rows_same = delta(i1, l1) * delta(i2, l2);
    let rows_swap = delta(i1, l2) * delta(i2, l1);
    let cols_same = delta(j1, k1) * delta(j2, k2);
    let cols_swap = delta(j1, k2) * delta(j2, k1);
    (rows_same * cols_same + rows_swap * cols_swap) / (d * d - 1.0)
        - (rows_same * cols_swap + rows_swap * cols_same) / (d * (d * d - 1.0))
}

/// Monte-Carlo average of the product of `W_ij W*_lk` over the given index
/// quadruples (one for a first moment, two for a second).
pub fn estimate_entry_moment(d: usize, entries: &[EntryIndex], samples: usize, seed: u64) -> Result<MomentEstimate> {
    if let Some(bad) = entries.iter().flatten().find(|&&x| x >= d) {
        return Err(Error::InvalidTargets(format!("entry index {bad} out of range for d = {d}")));
    }
    estimate_complex(samples, seed, rng::tags::HAAR_MOMENT, |rng| {
        let w = sample_haar_unitary(d, rng)?;
        Ok(entries.iter().map(|&[i, j, l, k]| w[(i, j)] * w[(l, k)].conj()).product())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::unitarity_deviation;

    #[test]
    fn sampled_unitaries_are_unitary() {
        let mut rng = rng::stream(1, 0, 0);
        for d in [2, 4, 8, 16] {
            let w = sample_haar_unitary(d, &mut rng).unwrap();
            assert!(unitarity_deviation(&w) < 1e-12);
        }
        assert!(matches!(sample_haar_unitary(1, &mut rng), Err(Error::InvalidDimension(1))));
    }

    #[test]
    fn closed_moment_examples() {
        let p0 = basis_projector(2, 0);
        let l1 = closed_moment(Lemma::L1, &MomentOperands::first(p0.clone(), p0.clone())).unwrap();
        assert!((l1 - C64::new(0.5, 0.0)).norm() < 1e-15);
        let ops = MomentOperands::second(p0.clone(), p0.clone(), p0.clone(), p0.clone());
        let l2 = closed_moment(Lemma::L2, &ops).unwrap();
        assert!((l2 - C64::new(1.0 / 3.0, 0.0)).norm() < 1e-15);
        assert!(matches!(
            closed_moment(Lemma::L2, &MomentOperands::first(p0.clone(), p0)),
            Err(Error::MissingOperand("C"))
        ));
    }

    #[test]
    fn lemma3_collapses_on_identity_operands() {
        let mut rng = rng::stream(2, 0, 0);
        for d in [2, 3, 4, 8] {
            let b = random_operator(d, &mut rng);
            let dm = random_operator(d, &mut rng);
            let id = CMatrix::identity(d, d);
            let got = closed_moment(Lemma::L3, &MomentOperands::second(id.clone(), b.clone(), id, dm.clone())).unwrap();
            let want = b.trace() * dm.trace();
            assert!((got - want).norm() < 1e-10 * want.norm().max(1.0));
        }
    }

    #[test]
    fn estimator_rejects_small_sample_counts() {
        let p0 = basis_projector(2, 0);
        let ops = MomentOperands::first(p0.clone(), p0);
        assert!(matches!(estimate_moment(Lemma::L1, &ops, 10, 0), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn estimates_are_seed_deterministic() {
        let p0 = basis_projector(2, 0);
        let ops = MomentOperands::first(p0.clone(), p0);
        let a = estimate_moment(Lemma::L1, &ops, 500, 9).unwrap();
        let b = estimate_moment(Lemma::L1, &ops, 500, 9).unwrap();
        let c = par::sequential(|| estimate_moment(Lemma::L1, &ops, 500, 9).unwrap());
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn block_sum_identity_holds_exactly() {
        let mut rng = rng::stream(4, 0, 0);
        for (n, m) in [(2, 1), (3, 1), (3, 2), (4, 2)] {
            let a = random_operator(1 << n, &mut rng);
            let b = random_operator(1 << n, &mut rng);
            let w = sample_haar_unitary(1 << m, &mut rng).unwrap();
            let lhs = twirl_trace(&a, &b, &w, n).unwrap();
            let rhs = twirl_trace_blocks(&a, &b, &w, n).unwrap();
            assert!((lhs - rhs).norm() < 1e-10, "n={n} m={m}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn entry_moment_examples() {
        for d in [2usize, 3, 4] {
            let df = d as f64;
            assert_eq!(entry_moment_first(d, [0, 1, 0, 1]), 1.0 / df);
            assert_eq!(entry_moment_first(d, [0, 1, 1, 1]), 0.0);
            let fourth = entry_moment_second(d, [0, 0, 0, 0], [0, 0, 0, 0]);
            assert!((fourth - 2.0 / (df * (df + 1.0))).abs() < 1e-15);
            let mixed = entry_moment_second(d, [0, 0, 0, 0], [0, 1, 0, 1]);
            assert!((mixed - 1.0 / (df * (df + 1.0))).abs() < 1e-15);
        }
        // row normalization: sum_j E|W_0j|^2 |W_00|^2 = E|W_00|^2 = 1/d
        let d = 4;
        let total: f64 = (0..d).map(|j| entry_moment_second(d, [0, 0, 0, 0], [0, j, 0, j])).sum();
        assert!((total - 0.25).abs() < 1e-15);
        assert!(estimate_entry_moment(2, &[[0, 2, 0, 0]], 200, 1).is_err());
    }

    #[test]
    fn ks_statistic_examples() {
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(ks_two_sample(&[0.0, 1.0], &[2.0, 3.0]), 1.0);
        assert!((ks_two_sample(&[0.0, 2.0], &[1.0, 3.0]) - 0.5).abs() < 1e-15);
        assert!((ks_critical_1pct(10_000, 10_000) - 0.02302).abs() < 1e-4);
    }
}
