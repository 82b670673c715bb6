//! Fidelity and projected quantum kernels, and Gram matrices over datasets.

use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::ansatz::{final_block, AlaSpec, CircuitInstance, CircuitSpec};
use crate::qstate::{self, hs_distance_sqr, hs_inner, reduced_density, DensityMatrix, InitialState, Statevector, SubsystemMask};
use crate::stats::estimator::{jackknife_se, MeanEstimate};
use crate::{par, Error, Result};

/// `|<a|b>|^2`.
pub fn fidelity_kernel(a: &Statevector, b: &Statevector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

/// `Tr[rho_a,kappa rho_b,kappa]`.
pub fn pqk_kappa(a: &Statevector, b: &Statevector, kappa: &SubsystemMask) -> Result<f64> {
    check_same_n(a, b)?;
    hs_inner(&reduced_density(a, kappa)?, &reduced_density(b, kappa)?)
}

/// Sum of [`pqk_kappa`] over `kappas`.
pub fn pqk_linear(a: &Statevector, b: &Statevector, kappas: &[SubsystemMask]) -> Result<f64> {
    if kappas.is_empty() {
        return Err(Error::InvalidKernel("empty subsystem list".into()));
    }
    kappas.iter().map(|k| pqk_kappa(a, b, k)).sum()
}

/// `exp(-gamma * sum_kappa ||rho_a,kappa - rho_b,kappa||_2^2)`.
pub fn pqk_gaussian(a: &Statevector, b: &Statevector, kappas: &[SubsystemMask], gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if kappas.is_empty() {
        return Err(Error::InvalidKernel("empty subsystem list".into()));
    }
    check_same_n(a, b)?;
    let mut dist = 0.0;
    for k in kappas {
        dist += hs_distance_sqr(&reduced_density(a, k)?, &reduced_density(b, k)?)?;
    }
    Ok((-gamma * dist).exp())
}

/// `{0}, {1}, ..., {n-1}`.
pub fn single_qubit_masks(n: usize) -> Vec<SubsystemMask> {
    (0..n).map(|q| SubsystemMask::single(n, q).expect("q < n")).collect()
}

fn check_same_n(a: &Statevector, b: &Statevector) -> Result<()> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    Ok(())
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidKernel(format!("gamma must be positive and finite, got {gamma}")));
    }
    Ok(())
}

/// Which kernel to evaluate. Subsystems are lists of qubit indices; `None`
/// means every single qubit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelKind {
    Fidelity,
    PerKappa { kappa: Vec<usize> },
    LinearProjected { kappas: Option<Vec<Vec<usize>>> },
    GaussianProjected { kappas: Option<Vec<Vec<usize>>>, gamma: f64 },
}

impl KernelKind {
    /// Validated masks over `n` qubits; empty for the fidelity kernel.
    pub fn masks(&self, n: usize) -> Result<Vec<SubsystemMask>> {
        let build = |lists: &Option<Vec<Vec<usize>>>| -> Result<Vec<SubsystemMask>> {
            match lists {
                None => Ok(single_qubit_masks(n)),
                Some(l) if l.is_empty() => Err(Error::InvalidKernel("empty subsystem list".into())),
                Some(l) => l.iter().map(|k| SubsystemMask::new(n, k)).collect(),
            }
        };
        match self {
            KernelKind::Fidelity => Ok(Vec::new()),
            KernelKind::PerKappa { kappa } => Ok(vec![SubsystemMask::new(n, kappa)?]),
            KernelKind::LinearProjected { kappas } => build(kappas),
            KernelKind::GaussianProjected { kappas, gamma } => {
                check_gamma(*gamma)?;
                build(kappas)
            }
        }
    }

    /// Whether Gram matrices of this kernel must be positive semidefinite.
    pub fn is_inner_product(&self) -> bool {
        !matches!(self, KernelKind::GaussianProjected { .. })
    }
}

/// A kernel bound to a circuit family and an initial state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelTask {
    pub kernel: KernelKind,
    pub circuit: CircuitSpec,
    pub init: InitialState,
    /// Seed for a Haar-random initial state.
    #[serde(default)]
    pub init_seed: u64,
}

impl KernelTask {
    /// Checks masks and, for multi-qubit subsystems, that each lies inside
    /// one final-layer block.
    pub fn validate(&self) -> Result<Vec<SubsystemMask>> {
        let n = self.circuit.n();
        let masks = self.kernel.masks(n)?;
        for k in masks.iter().filter(|k| k.len() > 1) {
            final_block(&self.circuit, k)?;
        }
        Ok(masks)
    }
}

/// Per-state data a kernel needs: the state itself or its reduced states.
#[derive(Clone, Debug)]
pub enum Features {
    State(Statevector),
    Reduced(Vec<DensityMatrix>),
}

/// Precomputed evaluator: reduces each state once, then compares features.
#[derive(Clone, Debug)]
pub struct FeatureMap {
    kernel: KernelKind,
    masks: Vec<SubsystemMask>,
}

impl FeatureMap {
    pub fn new(kernel: KernelKind, n: usize) -> Result<Self> {
        let masks = kernel.masks(n)?;
        Ok(Self { kernel, masks })
    }

    pub fn features(&self, state: &Statevector) -> Result<Features> {
        match self.kernel {
            KernelKind::Fidelity => Ok(Features::State(state.clone())),
            _ => Ok(Features::Reduced(
                self.masks.iter().map(|k| reduced_density(state, k)).collect::<Result<_>>()?,
            )),
        }
    }

    pub fn eval(&self, a: &Features, b: &Features) -> Result<f64> {
        match (&self.kernel, a, b) {
            (KernelKind::Fidelity, Features::State(a), Features::State(b)) => fidelity_kernel(a, b),
            (KernelKind::GaussianProjected { gamma, .. }, Features::Reduced(a), Features::Reduced(b)) => {
                let mut dist = 0.0;
                for (ra, rb) in a.iter().zip(b) {
                    dist += hs_distance_sqr(ra, rb)?;
                }
                Ok((-gamma * dist).exp())
            }
            (_, Features::Reduced(a), Features::Reduced(b)) => {
                a.iter().zip(b).map(|(ra, rb)| hs_inner(ra, rb)).sum()
            }
            _ => Err(Error::InvalidKernel("feature kind does not match kernel".into())),
        }
    }
}

/// Gram matrix of the task's kernel over states `U(x_i, theta)|init>`.
pub fn gram(dataset: &[Vec<f64>], theta: &[f64], task: &KernelTask) -> Result<GramMatrix> {
    task.validate()?;
    let spec = match task.circuit {
        CircuitSpec::Ala(a) => a,
        CircuitSpec::Global { .. } => {
            return Err(Error::InvalidKernel("data-dependent Gram matrices need a re-upload circuit".into()))
        }
    };
    let init = qstate::prepare_initial(&task.init, spec.n(), task.init_seed)?;
    let states = encode_dataset(spec, dataset, theta, &init)?;
    let mut g = gram_from_states(&states, &task.kernel)?;
    g.meta = serde_json::to_value(task)?;
    Ok(g)
}

/// `U(x, theta)|init>` for every `x`.
pub fn encode_dataset(spec: AlaSpec, dataset: &[Vec<f64>], theta: &[f64], init: &Statevector) -> Result<Vec<Statevector>> {
    par::try_map_range(dataset.len(), |i| {
        CircuitInstance::reupload(spec, &dataset[i], theta)?.apply(init)
    })
}

/// Gram matrix over already-prepared states. Each state is reduced once.
pub fn gram_from_states(states: &[Statevector], kernel: &KernelKind) -> Result<GramMatrix> {
    let n_points = states.len();
    if n_points == 0 {
        return Err(Error::InvalidKernel("empty dataset".into()));
    }
    let n = states[0].n();
    if let Some(s) = states.iter().find(|s| s.n() != n) {
        return Err(Error::DimensionMismatch { expected: 1 << n, found: s.dim() });
    }
    let map = FeatureMap::new(kernel.clone(), n)?;
    let feats = par::try_map_range(n_points, |i| map.features(&states[i]))?;
    let pairs: Vec<(usize, usize)> = (0..n_points).flat_map(|i| (i..n_points).map(move |j| (i, j))).collect();
    let values = par::try_map_range(pairs.len(), |p| {
        let (i, j) = pairs[p];
        map.eval(&feats[i], &feats[j])
    })?;
    let mut entries = DMatrix::zeros(n_points, n_points);
    for (&(i, j), v) in pairs.iter().zip(values) {
        entries[(i, j)] = v;
        entries[(j, i)] = v;
    }
    Ok(GramMatrix { entries, meta: serde_json::to_value(kernel)? })
}

/// Off-diagonal concentration summary of a Gram matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffDiagonalStats {
    pub mean: f64,
    /// Standard deviation with its delete-one-point jackknife SE.
    pub std: MeanEstimate,
    pub pairs: usize,
}

/// Real symmetric kernel matrix with JSON metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    entries: DMatrix<f64>,
    meta: serde_json::Value,
}

impl GramMatrix {
    pub fn new(entries: DMatrix<f64>, meta: serde_json::Value) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::DimensionMismatch { expected: entries.nrows(), found: entries.ncols() });
        }
        Ok(Self { entries, meta })
    }

    pub fn len(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.nrows() == 0
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn meta(&self) -> &serde_json::Value {
        &self.meta
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// `max |G_ij - G_ji|`.
    pub fn asymmetry(&self) -> f64 {
        (&self.entries - self.entries.transpose()).amax()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let sym = (&self.entries + self.entries.transpose()) * 0.5;
        sym.symmetric_eigenvalues().min()
    }

    /// Upper-triangle entries `G_ij`, `i < j`, row by row.
    pub fn off_diagonal(&self) -> Vec<f64> {
        let n = self.len();
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| self.entries[(i, j)]).collect()
    }

    /// Mean and standard deviation of the off-diagonal entries. The SE of
    /// the standard deviation comes from deleting one data point (its whole
    /// row and column) at a time.
    pub fn off_diagonal_stats(&self) -> Result<OffDiagonalStats> {
        let n = self.len();
        if n < 4 {
            return Err(Error::TooFewSamples { got: n, min: 4 });
        }
        let off = self.off_diagonal();
        let shift = off.iter().sum::<f64>() / off.len() as f64;
        let std_of = |count: f64, s: f64, s2: f64| ((s2 - s * s / count) / (count - 1.0)).max(0.0).sqrt();
        let (s, s2) = off.iter().fold((0.0, 0.0), |(a, b), v| (a + (v - shift), b + (v - shift).powi(2)));
        let count = off.len() as f64;
        let replicates: Vec<f64> = (0..n)
            .map(|i| {
                let (mut ri, mut ri2) = (0.0, 0.0);
                for j in (0..n).filter(|&j| j != i) {
                    let d = self.entries[(i.min(j), i.max(j))] - shift;
                    ri += d;
                    ri2 += d * d;
                }
                std_of(count - (n - 1) as f64, s - ri, s2 - ri2)
            })
            .collect();
        Ok(OffDiagonalStats {
            mean: shift + s / count,
            std: MeanEstimate { value: std_of(count, s, s2), se: jackknife_se(&replicates), samples: off.len() },
            pairs: off.len(),
        })
    }

    /// Writes `# <json metadata>` followed by one CSV row per matrix row.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn write_to<W: Write>(&self, out: W) -> Result<()> {
        let mut out = out;
        writeln!(out, "# {}", serde_json::to_string(&self.meta)?)?;
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        for i in 0..self.len() {
            w.write_record(self.entries.row(i).iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::read_from(std::io::BufReader::new(std::fs::File::open(path)?))
    }

    pub fn read_from<R: BufRead>(mut input: R) -> Result<Self> {
        let mut first = String::new();
        input.read_line(&mut first)?;
        let meta = match first.trim_end().strip_prefix("# ") {
            Some(json) => serde_json::from_str(json)?,
            None => return Err(Error::InvalidConfig("Gram CSV must start with a '# {json}' metadata line".into())),
        };
        let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|s| s.trim().parse::<f64>().map_err(|e| Error::InvalidConfig(format!("bad Gram entry {s:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: bad.len() });
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]), meta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::BlockKind;
    use crate::qstate::prepare_initial;
    use crate::C64;

    fn plus() -> Statevector {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Statevector::from_amplitudes(vec![C64::new(h, 0.0), C64::new(h, 0.0)]).unwrap()
    }

    #[test]
    fn fidelity_examples() {
        let z = Statevector::basis(1, 0).unwrap();
        let o = Statevector::basis(1, 1).unwrap();
        assert!((fidelity_kernel(&z, &z).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(fidelity_kernel(&z, &o).unwrap(), 0.0);
        assert!((fidelity_kernel(&z, &plus()).unwrap() - 0.5).abs() < 1e-15);
        assert!(fidelity_kernel(&z, &Statevector::basis(2, 0).unwrap()).is_err());
    }

    #[test]
    fn projected_kernel_examples() {
        let zeros = Statevector::basis(3, 0).unwrap();
        let ones = Statevector::basis(3, 7).unwrap();
        let ghz = prepare_initial(&InitialState::Ghz, 3, 0).unwrap();
        let k0 = SubsystemMask::single(3, 0).unwrap();
        assert!((pqk_kappa(&zeros, &zeros, &k0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(pqk_kappa(&zeros, &ones, &k0).unwrap(), 0.0);
        assert!((pqk_kappa(&ghz, &ghz, &k0).unwrap() - 0.5).abs() < 1e-15);

        let all = single_qubit_masks(3);
        assert!((pqk_linear(&zeros, &zeros, &all).unwrap() - 3.0).abs() < 1e-14);
        assert_eq!(pqk_linear(&zeros, &ones, &all).unwrap(), 0.0);
        assert!((pqk_linear(&ghz, &ghz, &all).unwrap() - 1.5).abs() < 1e-14);
        assert!(pqk_linear(&zeros, &ones, &[]).is_err());
    }

    #[test]
    fn gaussian_kernel_examples() {
        let n = 3;
        let zeros = Statevector::basis(n, 0).unwrap();
        let ones = Statevector::basis(n, 7).unwrap();
        let ghz = prepare_initial(&InitialState::Ghz, n, 0).unwrap();
        let all = single_qubit_masks(n);
        let gamma = 0.3;
        assert!((pqk_gaussian(&zeros, &zeros, &all, gamma).unwrap() - 1.0).abs() < 1e-15);
        let want = (-2.0 * gamma * n as f64).exp();
        assert!((pqk_gaussian(&zeros, &ones, &all, gamma).unwrap() - want).abs() < 1e-14);
        let k0 = [SubsystemMask::single(n, 0).unwrap()];
        assert!((pqk_gaussian(&ghz, &zeros, &k0, 1.0).unwrap() - (-0.5f64).exp()).abs() < 1e-14);
        assert!(pqk_gaussian(&zeros, &ones, &all, 0.0).is_err());
        assert!(pqk_gaussian(&zeros, &ones, &all, -1.0).is_err());
    }

    fn reupload_task(kernel: KernelKind) -> KernelTask {
        KernelTask {
            kernel,
            circuit: CircuitSpec::Ala(AlaSpec::new(4, 2, 2, BlockKind::Reupload).unwrap()),
            init: InitialState::AllZero,
            init_seed: 0,
        }
    }

    fn toy_data() -> (Vec<Vec<f64>>, Vec<f64>) {
        let data = vec![vec![0.1, -0.4, 2.0, 1.3], vec![-2.2, 0.5, 0.9, -0.1], vec![1.7, 1.1, -0.6, 0.3]];
        let theta: Vec<f64> = (0..12).map(|i| (i as f64 * 0.77).sin() * 3.0).collect();
        (data, theta)
    }

    #[test]
    fn gram_matches_direct_kernel_calls() {
        let (data, theta) = toy_data();
        let task = reupload_task(KernelKind::LinearProjected { kappas: None });
        let g = gram(&data, &theta, &task).unwrap();
        let spec = AlaSpec::new(4, 2, 2, BlockKind::Reupload).unwrap();
        let init = Statevector::basis(4, 0).unwrap();
        let states = encode_dataset(spec, &data, &theta, &init).unwrap();
        let all = single_qubit_masks(4);
        for i in 0..3 {
            for j in 0..3 {
                let direct = pqk_linear(&states[i], &states[j], &all).unwrap();
                assert!((g.get(i, j) - direct).abs() < 1e-12);
            }
        }
        assert!(g.asymmetry() < 1e-12);
        assert!(g.min_eigenvalue() > -1e-8);
    }

    #[test]
    fn fidelity_gram_has_unit_diagonal() {
        let (data, theta) = toy_data();
        let g = gram(&data, &theta, &reupload_task(KernelKind::Fidelity)).unwrap();
        for i in 0..3 {
            assert!((g.get(i, i) - 1.0).abs() < 1e-10);
        }
        let g1 = gram(&data[..1], &theta, &reupload_task(KernelKind::Fidelity)).unwrap();
        assert_eq!(g1.len(), 1);
    }

    #[test]
    fn gram_rejects_bad_inputs() {
        let (data, theta) = toy_data();
        let task = reupload_task(KernelKind::PerKappa { kappa: vec![0, 2] });
        assert!(matches!(gram(&data, &theta, &task), Err(Error::LightCone(_))));
        let task = reupload_task(KernelKind::GaussianProjected { kappas: None, gamma: 0.0 });
        assert!(gram(&data, &theta, &task).is_err());
        let short = vec![vec![0.1, 0.2, 0.3]];
        assert!(gram(&short, &theta, &reupload_task(KernelKind::Fidelity)).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let (data, theta) = toy_data();
        let task = reupload_task(KernelKind::GaussianProjected { kappas: Some(vec![vec![1]]), gamma: 1.0 });
        let g = gram(&data, &theta, &task).unwrap();
        let mut buf = Vec::new();
        g.write_to(&mut buf).unwrap();
        let back = GramMatrix::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, g);
        let back_task: KernelTask = serde_json::from_value(back.meta().clone()).unwrap();
        assert_eq!(back_task, task);
    }

    #[test]
    fn off_diagonal_stats_of_known_matrix() {
        // off-diagonal entries 0.1..=0.6: mean 0.35, sample std sqrt(0.035)
        #[rustfmt::skip]
        let m = DMatrix::from_row_slice(4, 4, &[
            1.0, 0.1, 0.2, 0.3,
            0.1, 1.0, 0.4, 0.5,
            0.2, 0.4, 1.0, 0.6,
            0.3, 0.5, 0.6, 1.0,
        ]);
        let g = GramMatrix::new(m, serde_json::Value::Null).unwrap();
        let s = g.off_diagonal_stats().unwrap();
        assert!((s.mean - 0.35).abs() < 1e-15);
        assert!((s.std.value - 0.035f64.sqrt()).abs() < 1e-14);
        assert_eq!(s.pairs, 6);
        // deleting point 0 leaves {0.4, 0.5, 0.6}, std 0.1
        assert!(s.std.se > 0.0);
    }
}
