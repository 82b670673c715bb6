//! Dense statevector and density-matrix primitives.
//!
//! Qubit 0 is the most significant bit of an amplitude index: on three
//! qubits, index `0b100` is `|100>`, i.e. qubit 0 set. The same
//! convention orders the local index of a block unitary over its target
//! list and the row index of a reduced density matrix over its kept
//! qubits.
//!
//! Values are immutable once built. Norm drift is an error, never
//! silently corrected.

use nalgebra::DMatrix;
use num_complex::ComplexFloat;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{rng, CMatrix, Error, Result, C64};

/// Default memory guard for statevector preparation.
pub const DEFAULT_MAX_QUBITS: usize = 14;

/// Tolerance on `sum |amp|^2 = 1`.
pub const NORM_TOL: f64 = 1e-10;

/// Tolerance used for Hermiticity, trace and unitarity checks.
pub const MATRIX_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    n: usize,
    amps: Vec<C64>,
}

impl Statevector {
    /// Validates length `2^n` and unit norm.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::InvalidQubitCount(len));
        }
        let n = len.trailing_zeros() as usize;
        let state = Self { n, amps };
        let norm_sqr = state.norm_sqr();
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(state)
    }

    /// Computational basis state `|index>`.
    pub fn basis(n: usize, index: usize) -> Result<Self> {
        if n == 0 || n >= usize::BITS as usize {
            return Err(Error::InvalidQubitCount(n));
        }
        let dim = 1usize << n;
        if index >= dim {
            return Err(Error::DimensionMismatch { expected: dim, found: index });
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Statevector) -> Result<C64> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// Returns `(I (x) u)|psi>` with `u` acting on `targets` (first target is
    /// the most significant local bit).
    pub fn apply_block(&self, u: &CMatrix, targets: &[usize]) -> Result<Statevector> {
        check_targets(self.n, targets)?;
        let d = 1usize << targets.len();
        if u.nrows() != d || u.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: u.nrows() });
        }
        let deviation = unitarity_deviation(u);
        if deviation > MATRIX_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        let mut out = self.clone();
        out.apply_block_unchecked(u, targets);
        let norm_sqr = out.norm_sqr();
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(out)
    }

    /// In-place block application for callers that already hold a valid
    /// unitary and target list.
    pub(crate) fn apply_block_unchecked(&mut self, u: &CMatrix, targets: &[usize]) {
        let n = self.n;
        let m = targets.len();
        let d = 1usize << m;
        let offsets = local_offsets(n, targets);
        let positions = sorted_bit_positions(n, targets);
        // row-major copy; nalgebra storage is column-major
        let mut rows = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                rows.push(u[(i, j)]);
            }
        }
        let mut buf = vec![C64::new(0.0, 0.0); d];
        for rest in 0..(1usize << (n - m)) {
            let base = insert_zero_bits(rest, &positions);
            for (slot, &off) in buf.iter_mut().zip(&offsets) {
                *slot = self.amps[base + off];
            }
            for (i, &off) in offsets.iter().enumerate() {
                let row = &rows[i * d..(i + 1) * d];
                let mut acc = C64::new(0.0, 0.0);
                for (r, b) in row.iter().zip(&buf) {
                    acc += r * b;
                }
                self.amps[base + off] = acc;
            }
        }
    }
}

/// Initial state families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// `|0...0>`.
    AllZero,
    /// `(|0...0> + |1...1>)/sqrt(2)`.
    Ghz,
    /// Haar-random pure state drawn from the seed.
    HaarRandom,
    /// Tensor product of single-qubit pure states, qubit 0 first.
    Product(Vec<[C64; 2]>),
    /// A caller-supplied amplitude vector.
    Explicit(Vec<C64>),
}

impl InitialState {
    /// Short label used in reports.
    pub fn label(&self) -> &'static str {
        match self {
            InitialState::AllZero => "all_zero",
            InitialState::Ghz => "ghz",
            InitialState::HaarRandom => "haar_random",
            InitialState::Product(_) => "product",
            InitialState::Explicit(_) => "explicit",
        }
    }
}

/// [`prepare_initial_with_max`] at [`DEFAULT_MAX_QUBITS`].
pub fn prepare_initial(kind: &InitialState, n: usize, seed: u64) -> Result<Statevector> {
    prepare_initial_with_max(kind, n, seed, DEFAULT_MAX_QUBITS)
}

pub fn prepare_initial_with_max(
    kind: &InitialState,
    n: usize,
    seed: u64,
    max_qubits: usize,
) -> Result<Statevector> {
    if n == 0 {
        return Err(Error::InvalidQubitCount(n));
    }
    if n > max_qubits {
        return Err(Error::QubitLimit { n, max: max_qubits });
    }
    let dim = 1usize << n;
    match kind {
        InitialState::AllZero => Statevector::basis(n, 0),
        InitialState::Ghz => {
            let h = std::f64::consts::FRAC_1_SQRT_2;
            let mut amps = vec![C64::new(0.0, 0.0); dim];
            amps[0] = C64::new(h, 0.0);
            amps[dim - 1] = C64::new(h, 0.0);
            Statevector::from_amplitudes(amps)
        }
        InitialState::HaarRandom => {
            let mut rng = rng::stream(seed, rng::tags::INIT_STATE, n as u64);
            Ok(random_state(n, &mut rng))
        }
        InitialState::Product(factors) => {
            if factors.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: factors.len() });
            }
            for f in factors {
                let norm = f[0].norm_sqr() + f[1].norm_sqr();
                if (norm - 1.0).abs() > NORM_TOL {
                    return Err(Error::NotNormalized { norm_sqr: norm });
                }
            }
            let amps = (0..dim)
                .map(|idx| {
                    factors
                        .iter()
                        .enumerate()
                        .map(|(q, f)| f[(idx >> (n - 1 - q)) & 1])
                        .product()
                })
                .collect();
            Statevector::from_amplitudes(amps)
        }
        InitialState::Explicit(amps) => {
            if amps.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: amps.len() });
            }
            Statevector::from_amplitudes(amps.clone())
        }
    }
}

/// Haar-random pure state: a normalized standard complex Gaussian vector,
/// which has the same law as any fixed column of a Haar unitary.
pub fn random_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Statevector {
    let dim = 1usize << n;
    let mut amps: Vec<C64> = (0..dim)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re, im)
        })
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= norm;
    }
    Statevector { n, amps }
}

/// Ordered set of retained qubits `S` out of `n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsystemMask {
    n: usize,
    kept: Vec<usize>,
}

impl SubsystemMask {
    /// Indices are sorted; duplicates, out-of-range indices and empty
    /// masks are rejected.
    pub fn new(n: usize, kept: &[usize]) -> Result<Self> {
        if kept.is_empty() {
            return Err(Error::InvalidMask("mask is empty".into()));
        }
        let mut sorted = kept.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidMask(format!("duplicate index in {kept:?}")));
        }
        if let Some(&q) = sorted.last().filter(|&&q| q >= n) {
            return Err(Error::InvalidMask(format!("index {q} out of range for {n} qubits")));
        }
        Ok(Self { n, kept: sorted })
    }

    pub fn single(n: usize, qubit: usize) -> Result<Self> {
        Self::new(n, &[qubit])
    }

    pub fn full(n: usize) -> Result<Self> {
        Self::new(n, &(0..n).collect::<Vec<_>>())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    pub fn len(&self) -> usize {
        self.kept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kept.is_empty()
    }

    pub fn contains(&self, q: usize) -> bool {
        self.kept.binary_search(&q).is_ok()
    }

    /// `None` when the mask already covers every qubit.
    pub fn complement(&self) -> Option<SubsystemMask> {
        let rest: Vec<usize> = (0..self.n).filter(|q| !self.contains(*q)).collect();
        (!rest.is_empty()).then_some(SubsystemMask { n: self.n, kept: rest })
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix on `k` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    k: usize,
    mat: CMatrix,
}

impl DensityMatrix {
    /// Validates every density-matrix invariant, including the spectrum.
    pub fn new(mat: CMatrix) -> Result<Self> {
        let d = mat.nrows();
        if d != mat.ncols() || d < 2 || !d.is_power_of_two() {
            return Err(Error::NotDensityMatrix(format!("shape {}x{}", d, mat.ncols())));
        }
        let herm = hermiticity_deviation(&mat);
        if herm > MATRIX_TOL {
            return Err(Error::NotDensityMatrix(format!("not Hermitian (deviation {herm:.3e})")));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > MATRIX_TOL || tr.im.abs() > MATRIX_TOL {
            return Err(Error::NotDensityMatrix(format!("trace {tr}")));
        }
        let min_eig = mat.clone().symmetric_eigenvalues().min();
        if min_eig < -MATRIX_TOL {
            return Err(Error::NotDensityMatrix(format!("negative eigenvalue {min_eig:.3e}")));
        }
        Ok(Self { k: d.trailing_zeros() as usize, mat })
    }

    /// `|psi><psi|`.
    pub fn pure(state: &Statevector) -> Self {
        let v = nalgebra::DVector::from_column_slice(state.amps());
        Self { k: state.n(), mat: &v * v.adjoint() }
    }

    /// Completely mixed state `I / 2^k`.
    pub fn maximally_mixed(k: usize) -> Self {
        let d = 1usize << k;
        Self { k, mat: CMatrix::identity(d, d) / C64::new(d as f64, 0.0) }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.mat.clone().symmetric_eigenvalues().iter().copied().collect()
    }

    pub fn purity(&self) -> f64 {
        purity(self)
    }
}

/// `Tr_{complement of keep}[|psi><psi|]`.
pub fn reduced_density(state: &Statevector, keep: &SubsystemMask) -> Result<DensityMatrix> {
    if keep.n() != state.n() {
        return Err(Error::InvalidMask(format!(
            "mask is over {} qubits, state has {}",
            keep.n(),
            state.n()
        )));
    }
    let n = state.n();
    let k = keep.len();
    let d = 1usize << k;
    let offsets = local_offsets(n, keep.kept());
    let positions = sorted_bit_positions(n, keep.kept());
    let amps = state.amps();
    let mut acc = vec![C64::new(0.0, 0.0); d * d];
    let mut buf = vec![C64::new(0.0, 0.0); d];
    for rest in 0..(1usize << (n - k)) {
        let base = insert_zero_bits(rest, &positions);
        for (slot, &off) in buf.iter_mut().zip(&offsets) {
            *slot = amps[base + off];
        }
        for a in 0..d {
            let va = buf[a];
            if va == C64::new(0.0, 0.0) {
                continue;
            }
            for b in 0..d {
                acc[a * d + b] += va * buf[b].conj();
            }
        }
    }
    Ok(DensityMatrix { k, mat: DMatrix::from_row_slice(d, d, &acc) })
}

/// `Tr[a b]` for two density matrices of equal size.
pub fn hs_inner(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    let value = trace_product(a.matrix(), b.matrix())?;
    debug_assert!(value.im.abs() < 1e-9, "Tr[ab] has imaginary part {}", value.im);
    Ok(value.re)
}

/// `Tr[a^2]`.
pub fn purity(a: &DensityMatrix) -> f64 {
    a.matrix().iter().map(|z| z.norm_sqr()).sum()
}

/// `||a - b||_2^2` in the Hilbert-Schmidt norm.
pub fn hs_distance_sqr(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    Ok(a.matrix().iter().zip(b.matrix().iter()).map(|(x, y)| (x - y).norm_sqr()).sum())
}

/// `Tr[a b]` for arbitrary square matrices.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Result<C64> {
    if a.nrows() != b.ncols() || a.ncols() != b.nrows() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), found: b.ncols() });
    }
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    Ok(acc)
}

/// Partial trace of an arbitrary operator on `n` qubits, keeping `keep`.
pub fn partial_trace(op: &CMatrix, n: usize, keep: &SubsystemMask) -> Result<CMatrix> {
    let dim = 1usize << n;
    if op.nrows() != dim || op.ncols() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: op.nrows() });
    }
    if keep.n() != n {
        return Err(Error::InvalidMask(format!("mask is over {} qubits, operator over {n}", keep.n())));
    }
    let d = 1usize << keep.len();
    let offsets = local_offsets(n, keep.kept());
    let positions = sorted_bit_positions(n, keep.kept());
    let mut out = CMatrix::zeros(d, d);
    for rest in 0..(1usize << (n - keep.len())) {
        let base = insert_zero_bits(rest, &positions);
        for a in 0..d {
            for b in 0..d {
                out[(a, b)] += op[(base + offsets[a], base + offsets[b])];
            }
        }
    }
    Ok(out)
}

/// Swap of subsystem `s` between two copies of an `n`-qubit register,
/// acting on `2n` qubits (copy one holds qubits `0..n`).
pub fn subsystem_swap(n: usize, s: &SubsystemMask) -> CMatrix {
    let dim = 1usize << n;
    let bits: usize = s.kept().iter().map(|&q| 1usize << (n - 1 - q)).sum();
    let mut out = CMatrix::zeros(dim * dim, dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            let i2 = (i & !bits) | (j & bits);
            let j2 = (j & !bits) | (i & bits);
            out[(i2 * dim + j2, i * dim + j)] = C64::new(1.0, 0.0);
        }
    }
    out
}

/// Kronecker product `a (x) b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Full-register matrix of `u` acting on `targets` of `n` qubits.
pub fn embed(u: &CMatrix, targets: &[usize], n: usize) -> Result<CMatrix> {
    check_targets(n, targets)?;
    let dim = 1usize << n;
    let mut out = CMatrix::zeros(dim, dim);
    for col in 0..dim {
        let mut v = vec![C64::new(0.0, 0.0); dim];
        v[col] = C64::new(1.0, 0.0);
        let mut s = Statevector { n, amps: v };
        s.apply_block_unchecked(u, targets);
        for (row, a) in s.amps.iter().enumerate() {
            out[(row, col)] = *a;
        }
    }
    Ok(out)
}

/// `max |u^dagger u - I|` entrywise.
pub fn unitarity_deviation(u: &CMatrix) -> f64 {
    if u.nrows() != u.ncols() {
        return f64::INFINITY;
    }
    let prod = u.adjoint() * u;
    let mut dev: f64 = 0.0;
    for i in 0..prod.nrows() {
        for j in 0..prod.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((prod[(i, j)] - C64::new(target, 0.0)).abs());
        }
    }
    dev
}

fn hermiticity_deviation(m: &CMatrix) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).abs());
        }
    }
    dev
}

fn check_targets(n: usize, targets: &[usize]) -> Result<()> {
    if targets.is_empty() {
        return Err(Error::InvalidTargets("no targets".into()));
    }
    for (i, &q) in targets.iter().enumerate() {
        if q >= n {
            return Err(Error::InvalidTargets(format!("qubit {q} out of range for {n} qubits")));
        }
        if targets[..i].contains(&q) {
            return Err(Error::InvalidTargets(format!("duplicate qubit {q}")));
        }
    }
    Ok(())
}

/// Offset of each local basis index over `qubits` within the full index.
fn local_offsets(n: usize, qubits: &[usize]) -> Vec<usize> {
    let m = qubits.len();
    (0..1usize << m)
        .map(|j| {
            qubits
                .iter()
                .enumerate()
                .filter(|(t, _)| (j >> (m - 1 - t)) & 1 == 1)
                .map(|(_, &q)| 1usize << (n - 1 - q))
                .sum()
        })
        .collect()
}

fn sorted_bit_positions(n: usize, qubits: &[usize]) -> Vec<usize> {
    let mut pos: Vec<usize> = qubits.iter().map(|&q| n - 1 - q).collect();
    pos.sort_unstable();
    pos
}

/// Spreads `rest` over the bit positions not listed in `positions`
/// (ascending), leaving zeros at the listed ones.
#[inline]
fn insert_zero_bits(rest: usize, positions: &[usize]) -> usize {
    let mut x = rest;
    for &p in positions {
        let low = x & ((1usize << p) - 1);
        x = ((x >> p) << (p + 1)) | low;
    }
    x
}
