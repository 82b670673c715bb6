//! Closed-form kernel mean and variance under the 2-design assumption.
//!
//! Every ALA formula is written in terms of the purities of the initial
//! state on contiguous runs of layer-1 blocks inside the light cone. A
//! [`PurityProfile`] holds those purities; [`purity_profile`] builds one
//! from a circuit, a subsystem and an initial state.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ansatz::{final_block, light_cone, AlaSpec, BlockKind, CircuitSpec};
use crate::qstate::{purity, reduced_density, InitialState, Statevector, SubsystemMask};
use crate::{Error, Result};

/// Where the subsystem sits relative to the register boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Position {
    /// The light cone reaches layer 1 without touching either end.
    Middle,
    /// The subsystem is in an end block of the final layer and the cone is
    /// cut off by that end only.
    Edge,
    /// Any other truncation of the cone (small registers, near-edge blocks).
    Other,
}

/// Which closed form produced a prediction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaId {
    GlobalRandom,
    OneLayer,
    TwoLayer,
    ThreeLayerMiddle,
    ThreeLayerEdge,
    DepthMiddle,
    DepthEdgeOdd,
    DepthEdgeEven,
}

impl FormulaId {
    pub fn as_str(&self) -> &'static str {
        match self {
            FormulaId::GlobalRandom => "global_random",
            FormulaId::OneLayer => "ala_one_layer",
            FormulaId::TwoLayer => "ala_two_layer",
            FormulaId::ThreeLayerMiddle => "ala_three_layer_middle",
            FormulaId::ThreeLayerEdge => "ala_three_layer_edge",
            FormulaId::DepthMiddle => "ala_depth_middle_bound",
            FormulaId::DepthEdgeOdd => "ala_depth_edge_odd_bound",
            FormulaId::DepthEdgeEven => "ala_depth_edge_even_bound",
        }
    }
}

/// Whether a variance is exact or a scaling bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceKind {
    Exact,
    Bound,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryPrediction {
    pub mean: f64,
    pub variance: f64,
    pub kind: VarianceKind,
    pub formula: FormulaId,
    pub n: usize,
    pub m: usize,
    pub layers: usize,
    pub n_kappa: usize,
    pub position: Option<Position>,
}

fn pow2(e: f64) -> f64 {
    e.exp2()
}

/// Mean and variance of the projected kernel for a global Haar circuit.
pub fn rqc_stats(n: usize, n_kappa: usize) -> Result<TheoryPrediction> {
    if n_kappa == 0 || n_kappa > n {
        return Err(Error::Theory(format!("subsystem size {n_kappa} must be in 1..={n}")));
    }
    let dk2 = pow2(2.0 * n_kappa as f64);
    let d = pow2(n as f64);
    Ok(TheoryPrediction {
        mean: ala_mean(n_kappa)?,
        variance: (dk2 - 1.0) / (dk2 * (d + 1.0).powi(2)),
        kind: VarianceKind::Exact,
        formula: FormulaId::GlobalRandom,
        n,
        m: n,
        layers: 1,
        n_kappa,
        position: None,
    })
}

/// `2^-n_kappa`, for every circuit and initial state.
pub fn ala_mean(n_kappa: usize) -> Result<f64> {
    if n_kappa == 0 {
        return Err(Error::Theory("subsystem size must be at least 1".into()));
    }
    Ok(pow2(-(n_kappa as f64)))
}

/// Purities `Tr[rho_0,h^2]` for every contiguous run `h` of the layer-1
/// blocks inside a light cone.
///
/// Blocks are indexed `0..blocks` left to right, except that for an edge
/// position the block at the register end is index 0 (so right-edge
/// profiles are mirrored).
#[derive(Clone, Debug, PartialEq)]
pub struct PurityProfile {
    m: usize,
    blocks: usize,
    runs: BTreeMap<(usize, usize), f64>,
}

impl PurityProfile {
    /// Product initial state: every purity is 1.
    pub fn product(m: usize, blocks: usize) -> Self {
        Self::from_fn(m, blocks, |_, _| 1.0)
    }

    /// Every reduced state maximally mixed: purity `2^-(m * run length)`.
    pub fn completely_mixed(m: usize, blocks: usize) -> Self {
        Self::from_fn(m, blocks, |i, j| pow2(-((m * (j - i + 1)) as f64)))
    }

    /// Purity of run `i..=j` given by `f(i, j)`.
    pub fn from_fn(m: usize, blocks: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let runs = (0..blocks).flat_map(|i| (i..blocks).map(move |j| (i, j))).map(|(i, j)| ((i, j), f(i, j))).collect();
        Self { m, blocks, runs }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    /// Purity on blocks `i..=j`.
    pub fn get(&self, i: usize, j: usize) -> Result<f64> {
        self.runs
            .get(&(i, j))
            .copied()
            .ok_or_else(|| Error::Theory(format!("profile has no entry for blocks {i}..={j}")))
    }

    /// Number of contiguous runs, `K (K + 1) / 2`.
    pub fn len(&self) -> usize {
        self.runs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.runs.iter().map(|(k, v)| (*k, *v))
    }

    fn is_product(&self) -> bool {
        self.runs.values().all(|&v| (v - 1.0).abs() <= 1e-12)
    }

    fn is_completely_mixed(&self) -> bool {
        self.runs.iter().all(|(&(i, j), &v)| (v - pow2(-((self.m * (j - i + 1)) as f64))).abs() <= 1e-12)
    }
}

/// Light-cone geometry relevant to the closed forms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConeGeometry {
    pub position: Position,
    /// Layer-1 block supports in profile order (edge block first for
    /// [`Position::Edge`]).
    pub blocks: Vec<Vec<usize>>,
}

/// Classifies `kappa` and lists the layer-1 blocks in its light cone.
/// Requires `m` to divide `n`, as the closed forms assume.
pub fn cone_geometry(spec: &AlaSpec, kappa: &SubsystemMask) -> Result<ConeGeometry> {
    let (n, m, layers) = (spec.n(), spec.m(), spec.layers());
    if n % m != 0 {
        return Err(Error::Theory(format!("closed forms need m | n, got n={n}, m={m}")));
    }
    let circuit = CircuitSpec::Ala(*spec);
    let (site, targets) = final_block(&circuit, kappa)?;
    let cone = light_cone(&circuit, kappa)?;
    let mut blocks: Vec<(usize, Vec<usize>)> = circuit
        .blocks()
        .into_iter()
        .filter(|(s, _)| s.layer == 1 && cone.contains(s))
        .map(|(s, t)| (s.block, t))
        .collect();
    blocks.sort_by_key(|(b, _)| *b);
    let mut blocks: Vec<Vec<usize>> = blocks.into_iter().map(|(_, t)| t).collect();

    // cone on an unbounded register: grows by m/2 qubits per layer each side
    let reach = (layers - 1) * m / 2;
    let cut_left = targets[0] < reach;
    let cut_right = targets[m - 1] + reach > n - 1;
    let last_in_layer = spec.layer_layout(layers)?.len() - 1;
    let position = match (cut_left, cut_right) {
        (false, false) => Position::Middle,
        (true, false) if site.block == 0 => Position::Edge,
        (false, true) if site.block == last_in_layer => {
            blocks.reverse();
            Position::Edge
        }
        _ => Position::Other,
    };
    Ok(ConeGeometry { position, blocks })
}

/// Purity profile of `init` over the light cone of `kappa`.
///
/// Product and GHZ states are handled analytically. Explicit vectors are
/// reduced numerically. Haar-random states need a concrete draw; use
/// [`purity_profile_of_state`].
pub fn purity_profile(init: &InitialState, spec: &AlaSpec, kappa: &SubsystemMask) -> Result<PurityProfile> {
    let geo = cone_geometry(spec, kappa)?;
    let (n, m, k) = (spec.n(), spec.m(), geo.blocks.len());
    match init {
        InitialState::AllZero => Ok(PurityProfile::product(m, k)),
        InitialState::Product(f) if f.len() == n => Ok(PurityProfile::product(m, k)),
        InitialState::Product(f) => Err(Error::DimensionMismatch { expected: n, found: f.len() }),
        InitialState::Ghz => Ok(PurityProfile::from_fn(m, k, |i, j| if (j - i + 1) * m == n { 1.0 } else { 0.5 })),
        InitialState::Explicit(amps) => {
            let state = Statevector::from_amplitudes(amps.clone())?;
            purity_profile_of_state(&state, spec, kappa)
        }
        InitialState::HaarRandom => {
            Err(Error::Theory("a Haar-random initial state needs a concrete draw; pass the state itself".into()))
        }
    }
}

/// Purity profile of a concrete initial state.
pub fn purity_profile_of_state(state: &Statevector, spec: &AlaSpec, kappa: &SubsystemMask) -> Result<PurityProfile> {
    if state.n() != spec.n() {
        return Err(Error::DimensionMismatch { expected: spec.n(), found: state.n() });
    }
    let geo = cone_geometry(spec, kappa)?;
    let k = geo.blocks.len();
    let mut runs = BTreeMap::new();
    for i in 0..k {
        for j in i..k {
            let qubits: Vec<usize> = geo.blocks[i..=j].iter().flatten().copied().collect();
            let mask = SubsystemMask::new(spec.n(), &qubits)?;
            runs.insert((i, j), purity(&reduced_density(state, &mask)?));
        }
    }
    Ok(PurityProfile { m: spec.m(), blocks: k, runs })
}

/// `2^{2m} (2^{2 n_kappa} - 1) / ((2^{2m} - 1)^2 2^{2 n_kappa})`.
fn base_factor(m: usize, n_kappa: usize) -> f64 {
    let q = pow2(2.0 * m as f64);
    let k = pow2(2.0 * n_kappa as f64);
    q * (k - 1.0) / ((q - 1.0).powi(2) * k)
}

fn check_inputs(m: usize, n_kappa: usize, profile: &PurityProfile) -> Result<()> {
    if n_kappa == 0 || n_kappa > m {
        return Err(Error::Theory(format!("subsystem size {n_kappa} must be in 1..={m}")));
    }
    if profile.m() != m {
        return Err(Error::Theory(format!("profile built for m={}, formula asked for m={m}", profile.m())));
    }
    Ok(())
}

fn need_blocks(profile: &PurityProfile, want: usize, what: &str) -> Result<()> {
    if profile.blocks() != want {
        return Err(Error::Theory(format!(
            "{what} needs {want} layer-1 blocks in the light cone, profile has {}",
            profile.blocks()
        )));
    }
    Ok(())
}

/// Exact variance for depth 1, 2 or 3.
///
/// Depths 1 and 2 use the same formula for every position. Depth 3 has
/// separate middle and edge formulas.
pub fn ala_variance_exact(
    m: usize,
    n_kappa: usize,
    layers: usize,
    position: Position,
    profile: &PurityProfile,
) -> Result<(f64, FormulaId)> {
    check_inputs(m, n_kappa, profile)?;
    let dm = pow2(m as f64);
    let base = base_factor(m, n_kappa);
    let p = |i, j| profile.get(i, j);
    match (layers, position) {
        (1, _) => {
            need_blocks(profile, 1, "depth 1")?;
            Ok((base * (p(0, 0)? - 1.0 / dm).powi(2), FormulaId::OneLayer))
        }
        (2, _) => {
            need_blocks(profile, 2, "depth 2")?;
            let bracket = -2.0 - 1.0 / dm + dm * (p(0, 0)? + p(1, 1)? + p(0, 1)?);
            Ok((base / (dm + 1.0).powi(4) * bracket.powi(2), FormulaId::TwoLayer))
        }
        (3, Position::Middle) => {
            need_blocks(profile, 3, "depth 3, middle")?;
            let bracket = -5.0 - 4.0 / dm - 1.0 / (dm * dm)
                + dm * (p(0, 0)? + p(1, 1)? + p(0, 1)?)
                + dm * (p(1, 1)? + p(2, 2)? + p(1, 2)?)
                + dm * (p(1, 1)? + p(1, 2)? + p(0, 1)? + p(0, 2)?);
            let pre = base * dm * dm / (dm + 1.0).powi(8);
            Ok((pre * bracket.powi(2), FormulaId::ThreeLayerMiddle))
        }
        (3, Position::Edge) => {
            need_blocks(profile, 2, "depth 3, edge")?;
            let half = dm.sqrt();
            let bracket = -2.0 / half - 1.0 / (dm * half) + half * (2.0 * p(0, 0)? + p(0, 1)?);
            let pre = base * dm / (dm + 1.0).powi(4);
            Ok((pre * bracket.powi(2), FormulaId::ThreeLayerEdge))
        }
        (3, Position::Other) => {
            Err(Error::Theory("depth 3 closed forms cover middle and edge positions only".into()))
        }
        _ => Err(Error::Theory(format!("no exact formula at depth {layers}; bound only"))),
    }
}

/// Depth-scaling bound for product-state profiles; zero for completely
/// mixed ones. Returns the exact value where one is known (depth <= 3).
///
/// For depth `L >= 4` the unknown positive weights in the general
/// expression are set to 1 and the constant terms are dropped, leaving
/// `prefactor(L) * (2^m |P|)^2` in the middle and
/// `prefactor(L) * (2^{m/2} |P|)^2` (odd `L`) or `(2^m |P|)^2` (even `L`)
/// at the edge, where `|P|` is the number of profile entries.
pub fn ala_variance_bound(
    m: usize,
    n_kappa: usize,
    layers: usize,
    position: Position,
    profile: &PurityProfile,
) -> Result<(f64, FormulaId)> {
    check_inputs(m, n_kappa, profile)?;
    if layers == 0 {
        return Err(Error::Theory("depth must be at least 1".into()));
    }
    if layers <= 3 {
        return ala_variance_exact(m, n_kappa, layers, position, profile);
    }
    let formula = match position {
        Position::Middle => FormulaId::DepthMiddle,
        Position::Edge if layers % 2 == 1 => FormulaId::DepthEdgeOdd,
        Position::Edge => FormulaId::DepthEdgeEven,
        Position::Other => return Err(Error::Theory("depth bounds cover middle and edge positions only".into())),
    };
    if profile.is_completely_mixed() {
        return Ok((0.0, formula));
    }
    if !profile.is_product() {
        return Err(Error::Theory(format!(
            "depth {layers} bound is only defined for product or completely mixed profiles"
        )));
    }
    let dm = pow2(m as f64);
    let terms = profile.len() as f64;
    let base = base_factor(m, n_kappa) / pow2(2.0 * m as f64);
    let l1 = (layers - 1) as i32;
    let value = match formula {
        FormulaId::DepthMiddle => base * dm.powi(2 * l1) / (dm + 1.0).powi(4 * l1) * (dm * terms).powi(2),
        FormulaId::DepthEdgeOdd => base * dm.powi(layers as i32) / (dm + 1.0).powi(2 * l1) * (dm.sqrt() * terms).powi(2),
        _ => base * dm.powi(layers as i32) / (dm + 1.0).powi(2 * l1) * (dm * terms).powi(2),
    };
    Ok((value, formula))
}

/// Prediction for a Haar-block circuit, subsystem and initial state.
/// Depth <= 3 gives an exact value; deeper ALAs give the bound.
pub fn ala_prediction(spec: &CircuitSpec, kappa: &SubsystemMask, init: &InitialState) -> Result<TheoryPrediction> {
    let n_kappa = kappa.len();
    match spec {
        CircuitSpec::Global { n } => {
            if kappa.n() != *n {
                return Err(Error::InvalidMask(format!("mask over {} qubits, circuit has {n}", kappa.n())));
            }
            rqc_stats(*n, n_kappa)
        }
        CircuitSpec::Ala(a) => {
            if a.kind() != BlockKind::Haar {
                return Err(Error::Theory("closed forms assume Haar-random blocks".into()));
            }
            let geo = cone_geometry(a, kappa)?;
            let profile = purity_profile(init, a, kappa)?;
            let (variance, formula) = ala_variance_bound(a.m(), n_kappa, a.layers(), geo.position, &profile)?;
            Ok(TheoryPrediction {
                mean: ala_mean(n_kappa)?,
                variance,
                kind: if a.layers() <= 3 { VarianceKind::Exact } else { VarianceKind::Bound },
                formula,
                n: a.n(),
                m: a.m(),
                layers: a.layers(),
                n_kappa,
                position: Some(geo.position),
            })
        }
    }
}

/// Claimed covariance of the projected kernels on `kappa` and `other`.
///
/// Equal subsystems, or subsystems sharing a final-layer block, are
/// claimed to have covariance equal to the variance on `kappa`; subsystems
/// in different final-layer blocks are claimed uncorrelated.
pub fn ala_covariance_claim(
    spec: &CircuitSpec,
    kappa: &SubsystemMask,
    other: &SubsystemMask,
    init: &InitialState,
) -> Result<f64> {
    let (a, _) = final_block(spec, kappa)?;
    let (b, _) = final_block(spec, other)?;
    if a == b {
        Ok(ala_prediction(spec, kappa, init)?.variance)
    } else {
        Ok(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ala(n: usize, m: usize, l: usize) -> AlaSpec {
        AlaSpec::new(n, m, l, BlockKind::Haar).unwrap()
    }

    fn single(n: usize, q: usize) -> SubsystemMask {
        SubsystemMask::single(n, q).unwrap()
    }

    #[test]
    fn global_examples() {
        let p = rqc_stats(3, 1).unwrap();
        assert_eq!(p.mean, 0.5);
        assert!((p.variance - 1.0 / 108.0).abs() < 1e-15);
        assert!((rqc_stats(2, 1).unwrap().variance - 0.03).abs() < 1e-15);
        assert!((rqc_stats(2, 2).unwrap().variance - 0.0375).abs() < 1e-15);
        let big = rqc_stats(10, 10).unwrap().variance;
        assert!((big * 2f64.powi(20) - 1.0).abs() < 0.01);
        assert!(rqc_stats(2, 3).is_err());
        assert!(rqc_stats(2, 0).is_err());
    }

    #[test]
    fn mean_examples() {
        assert_eq!(ala_mean(1).unwrap(), 0.5);
        assert_eq!(ala_mean(2).unwrap(), 0.25);
        for k in 1..6 {
            assert_eq!(ala_mean(k).unwrap(), rqc_stats(6, k).unwrap().mean);
        }
    }

    #[test]
    fn exact_product_values() {
        let (v1, f1) = ala_variance_exact(2, 1, 1, Position::Middle, &PurityProfile::product(2, 1)).unwrap();
        assert!((v1 - 0.03).abs() < 1e-15);
        assert_eq!(f1, FormulaId::OneLayer);
        let (v2, _) = ala_variance_exact(2, 1, 2, Position::Middle, &PurityProfile::product(2, 2)).unwrap();
        assert!((v2 - 48.0 / 562_500.0 * 95.0625).abs() < 1e-15);
        assert!((v2 - 8.112e-3).abs() < 1e-6);
        let (v3, _) = ala_variance_exact(2, 1, 3, Position::Middle, &PurityProfile::product(2, 3)).unwrap();
        assert!(v3 < v2 && v2 < v1);
        let (e3, _) = ala_variance_exact(2, 1, 3, Position::Edge, &PurityProfile::product(2, 2)).unwrap();
        assert!((e3 - v2).abs() < 1e-15);
    }

    #[test]
    fn completely_mixed_profiles_give_zero() {
        for m in [2, 4] {
            for nk in 1..=2 {
                for (l, pos, k) in [
                    (1, Position::Middle, 1),
                    (2, Position::Middle, 2),
                    (3, Position::Middle, 3),
                    (3, Position::Edge, 2),
                ] {
                    let (v, _) = ala_variance_exact(m, nk, l, pos, &PurityProfile::completely_mixed(m, k)).unwrap();
                    assert!(v.abs() < 1e-15, "m={m} L={l} {pos:?}: {v}");
                }
                for l in 4..9 {
                    let (v, _) = ala_variance_bound(m, nk, l, Position::Middle, &PurityProfile::completely_mixed(m, l)).unwrap();
                    assert_eq!(v, 0.0);
                }
            }
        }
    }

    #[test]
    fn one_layer_global_bridge() {
        for m in 1..=6 {
            for nk in 1..=m {
                let (v, _) = ala_variance_exact(m, nk, 1, Position::Middle, &PurityProfile::product(m, 1)).unwrap();
                let r = rqc_stats(m, nk).unwrap().variance;
                assert!((v - r).abs() <= 1e-12 * r.max(1e-300), "m={m} nk={nk}: {v} vs {r}");
            }
        }
    }

    #[test]
    fn exact_rejects_unsupported_depths() {
        let p = PurityProfile::product(2, 4);
        assert!(matches!(ala_variance_exact(2, 1, 4, Position::Middle, &p), Err(Error::Theory(_))));
        let p = PurityProfile::product(2, 1);
        assert!(ala_variance_exact(2, 1, 2, Position::Middle, &p).is_err());
        assert!(ala_variance_exact(2, 3, 1, Position::Middle, &p).is_err());
    }

    #[test]
    fn bound_matches_exact_at_shallow_depth() {
        for (l, pos, k) in [(1, Position::Middle, 1), (2, Position::Middle, 2), (3, Position::Middle, 3), (3, Position::Edge, 2)] {
            let p = PurityProfile::product(2, k);
            assert_eq!(
                ala_variance_bound(2, 1, l, pos, &p).unwrap(),
                ala_variance_exact(2, 1, l, pos, &p).unwrap()
            );
        }
    }

    #[test]
    fn bound_rejects_general_profiles_at_depth() {
        let p = PurityProfile::from_fn(2, 4, |i, j| if i == j { 0.7 } else { 0.4 });
        assert!(ala_variance_bound(2, 1, 4, Position::Middle, &p).is_err());
    }

    #[test]
    fn bound_log_slope_for_middle_product() {
        let m = 2;
        let values: Vec<f64> = (3..=8)
            .map(|l| {
                let spec = ala(64, m, l);
                let kappa = single(64, 32);
                let geo = cone_geometry(&spec, &kappa).unwrap();
                assert_eq!(geo.position, Position::Middle);
                let p = purity_profile(&InitialState::AllZero, &spec, &kappa).unwrap();
                ala_variance_bound(m, 1, l, geo.position, &p).unwrap().0
            })
            .collect();
        let centre = -2.0 * m as f64 * std::f64::consts::LN_2;
        for w in values.windows(2) {
            let slope = (w[1] / w[0]).ln();
            assert!((slope - centre).abs() <= 1.0, "slope {slope}");
        }
    }

    #[test]
    fn geometry_classification() {
        let g = cone_geometry(&ala(4, 2, 3), &single(4, 0)).unwrap();
        assert_eq!(g.position, Position::Edge);
        assert_eq!(g.blocks, vec![vec![0, 1], vec![2, 3]]);
        let g = cone_geometry(&ala(4, 2, 3), &single(4, 3)).unwrap();
        assert_eq!(g.position, Position::Edge);
        assert_eq!(g.blocks, vec![vec![2, 3], vec![0, 1]]);
        let g = cone_geometry(&ala(6, 2, 3), &single(6, 2)).unwrap();
        assert_eq!(g.position, Position::Middle);
        assert_eq!(g.blocks.len(), 3);
        assert_eq!(cone_geometry(&ala(4, 2, 2), &single(4, 1)).unwrap().position, Position::Middle);
        assert_eq!(cone_geometry(&ala(8, 2, 6), &single(8, 1)).unwrap().position, Position::Edge);
        assert!(cone_geometry(&ala(9, 2, 2), &single(9, 1)).is_err());
    }

    #[test]
    fn profile_examples() {
        let spec = ala(6, 2, 3);
        let kappa = single(6, 2);
        let p = purity_profile(&InitialState::AllZero, &spec, &kappa).unwrap();
        assert!(p.entries().all(|(_, v)| v == 1.0));
        assert_eq!(p.len(), 6);
        let g = purity_profile(&InitialState::Ghz, &spec, &kappa).unwrap();
        assert_eq!(g.get(0, 0).unwrap(), 0.5);
        assert_eq!(g.get(0, 2).unwrap(), 1.0);
        let ghz = crate::qstate::prepare_initial(&InitialState::Ghz, 6, 0).unwrap();
        let numeric = purity_profile_of_state(&ghz, &spec, &kappa).unwrap();
        for ((i, j), v) in g.entries() {
            assert!((numeric.get(i, j).unwrap() - v).abs() < 1e-12);
        }
        assert!(purity_profile(&InitialState::HaarRandom, &spec, &kappa).is_err());
    }

    #[test]
    fn covariance_claims() {
        let spec: CircuitSpec = ala(6, 2, 2).into();
        let same = ala_covariance_claim(&spec, &single(6, 1), &single(6, 2), &InitialState::AllZero).unwrap();
        let var = ala_prediction(&spec, &single(6, 1), &InitialState::AllZero).unwrap().variance;
        assert_eq!(same, var);
        assert_eq!(ala_covariance_claim(&spec, &single(6, 1), &single(6, 4), &InitialState::AllZero).unwrap(), 0.0);
    }

    #[test]
    fn prediction_for_specs() {
        let p = ala_prediction(&ala(4, 2, 2).into(), &single(4, 1), &InitialState::AllZero).unwrap();
        assert_eq!(p.formula, FormulaId::TwoLayer);
        assert_eq!(p.kind, VarianceKind::Exact);
        let p = ala_prediction(&CircuitSpec::Global { n: 3 }, &single(3, 0), &InitialState::AllZero).unwrap();
        assert_eq!(p.formula, FormulaId::GlobalRandom);
        let p = ala_prediction(&ala(16, 2, 5).into(), &single(16, 8), &InitialState::AllZero).unwrap();
        assert_eq!(p.kind, VarianceKind::Bound);
        let re = AlaSpec::new(4, 2, 2, BlockKind::Reupload).unwrap();
        assert!(ala_prediction(&re.into(), &single(4, 1), &InitialState::AllZero).is_err());
    }
}
