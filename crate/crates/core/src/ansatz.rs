//! Circuit geometry: global random circuits, alternating layered ansatzes
//! (ALAs), the data re-uploading block and light cones.
//!
//! Layers are numbered from 1. Odd layers tile the register with
//! `m`-qubit blocks starting at qubit 0; even layers start at qubit
//! `m/2`. Blocks are placed while they fit, so trailing qubits that do
//! not fill a whole block idle in that layer. When `m` divides `n` this
//! is the usual brickwork with `n/m` blocks in odd layers and `n/m - 1`
//! in even layers.

use serde::{Deserialize, Serialize};

use crate::qstate::{Statevector, SubsystemMask};
use crate::{haar, rng, CMatrix, Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    /// Independent Haar-random unitary per block.
    Haar,
    /// Two-qubit data re-uploading block with four free angles.
    Reupload,
}

/// Geometry of an ALA.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawAlaSpec")]
pub struct AlaSpec {
    n: usize,
    m: usize,
    layers: usize,
    kind: BlockKind,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlaSpec {
    n: usize,
    m: usize,
    layers: usize,
    kind: BlockKind,
}

impl TryFrom<RawAlaSpec> for AlaSpec {
    type Error = Error;
    fn try_from(raw: RawAlaSpec) -> Result<Self> {
        AlaSpec::new(raw.n, raw.m, raw.layers, raw.kind)
    }
}

impl AlaSpec {
    pub fn new(n: usize, m: usize, layers: usize, kind: BlockKind) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidQubitCount(n));
        }
        if m == 0 || m > n {
            return Err(Error::InvalidSpec(format!("block width {m} must be in 1..={n}")));
        }
        if layers == 0 {
            return Err(Error::InvalidSpec("depth must be at least 1".into()));
        }
        if layers > 1 && m % 2 == 1 {
            return Err(Error::InvalidSpec(format!("block width {m} must be even for more than one layer")));
        }
        if layers > 1 && n < m + m / 2 {
            return Err(Error::InvalidSpec(format!("{n} qubits leave no room for a shifted layer of width {m}")));
        }
        if kind == BlockKind::Reupload && m != 2 {
            return Err(Error::InvalidSpec(format!("re-upload blocks act on 2 qubits, not {m}")));
        }
        Ok(Self { n, m, layers, kind })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn kind(&self) -> BlockKind {
        self.kind
    }

    /// Same geometry at a different depth.
    pub fn with_layers(&self, layers: usize) -> Result<Self> {
        Self::new(self.n, self.m, layers, self.kind)
    }

    /// Target qubits of every block in layer `d` (1-based).
    pub fn layer_layout(&self, d: usize) -> Result<Vec<Vec<usize>>> {
        if d == 0 || d > self.layers {
            return Err(Error::InvalidLayer { layer: d, layers: self.layers });
        }
        Ok(self.layout_unchecked(d))
    }

    fn layout_unchecked(&self, d: usize) -> Vec<Vec<usize>> {
        let mut start = if d % 2 == 1 { 0 } else { self.m / 2 };
        let mut out = Vec::new();
        while start + self.m <= self.n {
            out.push((start..start + self.m).collect());
            start += self.m;
        }
        out
    }

    /// Every block site, layer by layer.
    pub fn sites(&self) -> Vec<BlockSite> {
        (1..=self.layers)
            .flat_map(|layer| (0..self.layout_unchecked(layer).len()).map(move |block| BlockSite { layer, block }))
            .collect()
    }

    pub fn block_count(&self) -> usize {
        self.sites().len()
    }

    /// Number of free angles of a re-upload circuit with this geometry.
    pub fn parameter_count(&self) -> usize {
        match self.kind {
            BlockKind::Reupload => REUPLOAD_ANGLES * self.block_count(),
            BlockKind::Haar => 0,
        }
    }
}

/// A circuit family: one global unitary, or an ALA.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum CircuitSpec {
    /// Single Haar-random unitary on all `n` qubits.
    Global { n: usize },
    Ala(AlaSpec),
}

impl CircuitSpec {
    pub fn n(&self) -> usize {
        match self {
            CircuitSpec::Global { n } => *n,
            CircuitSpec::Ala(a) => a.n(),
        }
    }

    pub fn kind(&self) -> BlockKind {
        match self {
            CircuitSpec::Global { .. } => BlockKind::Haar,
            CircuitSpec::Ala(a) => a.kind(),
        }
    }

    pub fn layers(&self) -> usize {
        match self {
            CircuitSpec::Global { .. } => 1,
            CircuitSpec::Ala(a) => a.layers(),
        }
    }

    /// Block width; the whole register for a global circuit.
    pub fn m(&self) -> usize {
        match self {
            CircuitSpec::Global { n } => *n,
            CircuitSpec::Ala(a) => a.m(),
        }
    }

    /// Short label used in reports.
    pub fn label(&self) -> &'static str {
        match self {
            CircuitSpec::Global { .. } => "global_haar",
            CircuitSpec::Ala(a) if a.kind() == BlockKind::Haar => "ala_haar",
            CircuitSpec::Ala(_) => "ala_reupload",
        }
    }

    /// `(site, targets)` for every block in application order.
    pub fn blocks(&self) -> Vec<(BlockSite, Vec<usize>)> {
        match self {
            CircuitSpec::Global { n } => vec![(BlockSite { layer: 1, block: 0 }, (0..*n).collect())],
            CircuitSpec::Ala(a) => (1..=a.layers())
                .flat_map(|layer| {
                    a.layout_unchecked(layer)
                        .into_iter()
                        .enumerate()
                        .map(move |(block, t)| (BlockSite { layer, block }, t))
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let CircuitSpec::Global { n } = self {
            if *n == 0 {
                return Err(Error::InvalidQubitCount(0));
            }
        }
        Ok(())
    }
}

impl From<AlaSpec> for CircuitSpec {
    fn from(a: AlaSpec) -> Self {
        CircuitSpec::Ala(a)
    }
}

/// Position of a block: 1-based layer and 0-based index within the layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BlockSite {
    pub layer: usize,
    pub block: usize,
}

/// Angles per re-upload block: `RY`, `RZ` on each of the two wires.
pub const REUPLOAD_ANGLES: usize = 4;

/// `exp(-i beta Y / 2)`.
pub fn ry(beta: f64) -> CMatrix {
    let (s, c) = (beta / 2.0).sin_cos();
    CMatrix::from_row_slice(2, 2, &[C64::new(c, 0.0), C64::new(-s, 0.0), C64::new(s, 0.0), C64::new(c, 0.0)])
}

/// `exp(-i beta Z / 2)`.
pub fn rz(beta: f64) -> CMatrix {
    let h = beta / 2.0;
    let zero = C64::new(0.0, 0.0);
    CMatrix::from_row_slice(2, 2, &[C64::from_polar(1.0, -h), zero, zero, C64::from_polar(1.0, h)])
}

pub fn cz() -> CMatrix {
    let d = [1.0, 1.0, 1.0, -1.0].map(|v| C64::new(v, 0.0));
    CMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&d))
}

/// Re-upload block on wires `(a, b)`: data rotations `RY(x), RZ(x)` per
/// wire, then trainable `RY(theta), RZ(theta)` per wire, then `CZ`.
/// `theta` is `[ry_a, rz_a, ry_b, rz_b]`.
pub fn reupload_block(x_a: f64, x_b: f64, theta: &[f64]) -> CMatrix {
    debug_assert_eq!(theta.len(), REUPLOAD_ANGLES);
    let wire = |x: f64, t_ry: f64, t_rz: f64| rz(t_rz) * ry(t_ry) * rz(x) * ry(x);
    cz() * wire(x_a, theta[0], theta[1]).kronecker(&wire(x_b, theta[2], theta[3]))
}

/// A fully realized circuit: one unitary per block site.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitInstance {
    spec: CircuitSpec,
    blocks: Vec<(BlockSite, Vec<usize>, CMatrix)>,
}

impl CircuitInstance {
    /// Every block drawn from the Haar measure; block `j` (in application
    /// order) uses stream `j` of `(seed, HAAR_BLOCK)`.
    pub fn haar(spec: CircuitSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        if spec.kind() != BlockKind::Haar {
            return Err(Error::InvalidSpec("Haar instance requested for a re-upload spec".into()));
        }
        let blocks = spec
            .blocks()
            .into_iter()
            .enumerate()
            .map(|(j, (site, targets))| {
                let mut rng = rng::stream(seed, rng::tags::HAAR_BLOCK, j as u64);
                let u = haar::sample_haar_unitary(1 << targets.len(), &mut rng)?;
                Ok((site, targets, u))
            })
            .collect::<Result<_>>()?;
        Ok(Self { spec, blocks })
    }

    /// Re-upload circuit for data `x` (one component per qubit) and angles
    /// `theta`, enumerated block-major as (layer, block, wire, gate).
    pub fn reupload(spec: AlaSpec, x: &[f64], theta: &[f64]) -> Result<Self> {
        if spec.kind() != BlockKind::Reupload {
            return Err(Error::InvalidSpec("re-upload instance requested for a Haar spec".into()));
        }
        if x.len() != spec.n() {
            return Err(Error::DimensionMismatch { expected: spec.n(), found: x.len() });
        }
        if theta.len() != spec.parameter_count() {
            return Err(Error::DimensionMismatch { expected: spec.parameter_count(), found: theta.len() });
        }
        let spec = CircuitSpec::Ala(spec);
        let blocks = spec
            .blocks()
            .into_iter()
            .zip(theta.chunks_exact(REUPLOAD_ANGLES))
            .map(|((site, t), angles)| {
                let u = reupload_block(x[t[0]], x[t[1]], angles);
                (site, t, u)
            })
            .collect();
        Ok(Self { spec, blocks })
    }

    /// Identity on every block; useful as a baseline.
    pub fn identity(spec: CircuitSpec) -> Result<Self> {
        spec.validate()?;
        let blocks = spec
            .blocks()
            .into_iter()
            .map(|(site, t)| {
                let d = 1 << t.len();
                (site, t, CMatrix::identity(d, d))
            })
            .collect();
        Ok(Self { spec, blocks })
    }

    pub fn spec(&self) -> &CircuitSpec {
        &self.spec
    }

    pub fn blocks(&self) -> impl Iterator<Item = (&BlockSite, &[usize], &CMatrix)> {
        self.blocks.iter().map(|(s, t, u)| (s, t.as_slice(), u))
    }

    pub fn block(&self, site: BlockSite) -> Option<&CMatrix> {
        self.blocks.iter().find(|(s, _, _)| *s == site).map(|(_, _, u)| u)
    }

    /// Copy with the unitary at `site` swapped for `u`.
    pub fn with_block_replaced(&self, site: BlockSite, u: CMatrix) -> Result<Self> {
        let mut out = self.clone();
        let slot = out
            .blocks
            .iter_mut()
            .find(|(s, _, _)| *s == site)
            .ok_or_else(|| Error::InvalidSpec(format!("no block at {site:?}")))?;
        let d = 1 << slot.1.len();
        if u.nrows() != d || u.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: u.nrows() });
        }
        let deviation = crate::qstate::unitarity_deviation(&u);
        if deviation > crate::qstate::MATRIX_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        slot.2 = u;
        Ok(out)
    }

    /// `U |init>`, applying layers in order.
    pub fn apply(&self, init: &Statevector) -> Result<Statevector> {
        if init.n() != self.spec.n() {
            return Err(Error::DimensionMismatch { expected: self.spec.n(), found: init.n() });
        }
        let mut state = init.clone();
        for (_, targets, u) in &self.blocks {
            state.apply_block_unchecked(u, targets);
        }
        let norm_sqr = state.norm_sqr();
        if (norm_sqr - 1.0).abs() > crate::qstate::NORM_TOL {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(state)
    }
}

/// Haar instance for a Haar spec, re-upload instance otherwise.
pub fn build_instance(spec: CircuitSpec, x: &[f64], theta: &[f64], seed: u64) -> Result<CircuitInstance> {
    match spec {
        CircuitSpec::Ala(a) if a.kind() == BlockKind::Reupload => CircuitInstance::reupload(a, x, theta),
        _ => CircuitInstance::haar(spec, seed),
    }
}

/// `U |init>` for a realized instance.
pub fn apply_instance(inst: &CircuitInstance, init: &Statevector) -> Result<Statevector> {
    inst.apply(init)
}

/// The final-layer block that contains all of `kappa`.
pub fn final_block(spec: &CircuitSpec, kappa: &SubsystemMask) -> Result<(BlockSite, Vec<usize>)> {
    if kappa.n() != spec.n() {
        return Err(Error::InvalidMask(format!("mask over {} qubits, circuit has {}", kappa.n(), spec.n())));
    }
    let last = spec.layers();
    let blocks = spec.blocks();
    let mut final_layer = blocks.into_iter().filter(|(s, _)| s.layer == last);
    let first = kappa.kept()[0];
    let (site, targets) = final_layer.find(|(_, t)| t.contains(&first)).ok_or_else(|| {
        Error::LightCone(format!("qubit {first} is idle in the final layer {last}"))
    })?;
    if let Some(q) = kappa.kept().iter().find(|q| !targets.contains(q)) {
        return Err(Error::LightCone(format!(
            "subsystem {:?} spans more than one final-layer block (qubit {q} outside {targets:?})",
            kappa.kept()
        )));
    }
    Ok((site, targets))
}

/// Blocks that can influence the reduced state on `kappa`, from the final
/// layer back to layer 1.
pub fn light_cone(spec: &CircuitSpec, kappa: &SubsystemMask) -> Result<Vec<BlockSite>> {
    Ok(light_cone_with_support(spec, kappa)?.0)
}

/// Light cone plus the qubits it covers in layer 1.
pub fn light_cone_with_support(spec: &CircuitSpec, kappa: &SubsystemMask) -> Result<(Vec<BlockSite>, Vec<usize>)> {
    let (site, targets) = final_block(spec, kappa)?;
    let mut support = vec![false; spec.n()];
    for &q in &targets {
        support[q] = true;
    }
    let mut cone = vec![site];
    let blocks = spec.blocks();
    for layer in (1..spec.layers()).rev() {
        let hit: Vec<&(BlockSite, Vec<usize>)> =
            blocks.iter().filter(|(s, t)| s.layer == layer && t.iter().any(|&q| support[q])).collect();
        for (s, t) in hit {
            cone.push(*s);
            for &q in t {
                support[q] = true;
            }
        }
    }
    let qubits = (0..spec.n()).filter(|&q| support[q]).collect();
    Ok((cone, qubits))
}

/// Target lists of the layer-1 blocks inside the light cone, left to right.
pub fn cone_first_layer_blocks(spec: &CircuitSpec, kappa: &SubsystemMask) -> Result<Vec<Vec<usize>>> {
    let cone = light_cone(spec, kappa)?;
    let mut first: Vec<(BlockSite, Vec<usize>)> =
        spec.blocks().into_iter().filter(|(s, _)| s.layer == 1 && cone.contains(s)).collect();
    first.sort_by_key(|(s, _)| s.block);
    Ok(first.into_iter().map(|(_, t)| t).collect())
}
