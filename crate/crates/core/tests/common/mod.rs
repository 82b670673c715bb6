//! Slow, independent reference implementations used only by tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

/// Brickwork blocks of layer `d` (1-based), built without the library.
pub fn layout(n: usize, m: usize, d: usize) -> Vec<Vec<usize>> {
    let mut s = if d % 2 == 1 { 0 } else { m / 2 };
    let mut out = Vec::new();
    while s + m <= n {
        out.push((s..s + m).collect());
        s += m;
    }
    out
}

/// Expected purity of the final block's reduced state after Haar layers
/// `L-1 .. 1`, as a linear combination of initial-state purities.
///
/// Averaging a purity over one Haar block `B` that straddles region `R`
/// (with `X = B & R`, `Y = B \ R`) gives
/// `a * purity(R \ X) + b * purity(R | Y)`,
/// `a = d_X (d_Y^2 - 1) / (d^2 - 1)`, `b = d_Y (d_X^2 - 1) / (d^2 - 1)`.
pub fn purity_terms(n: usize, m: usize, layers: usize, start: &[usize]) -> BTreeMap<BTreeSet<usize>, f64> {
    let mut terms = BTreeMap::new();
    terms.insert(start.iter().copied().collect::<BTreeSet<_>>(), 1.0);
    for d in (1..layers).rev() {
        for block in layout(n, m, d) {
            let b: BTreeSet<usize> = block.into_iter().collect();
            let mut next = BTreeMap::new();
            for (r, c) in terms {
                let x: BTreeSet<usize> = b.intersection(&r).copied().collect();
                let y: BTreeSet<usize> = b.difference(&r).copied().collect();
                if x.is_empty() || y.is_empty() {
                    *next.entry(r).or_insert(0.0) += c;
                    continue;
                }
                let dx = (1u64 << x.len()) as f64;
                let dy = (1u64 << y.len()) as f64;
                let dd = dx * dy;
                let a = dx * (dy * dy - 1.0) / (dd * dd - 1.0);
                let bb = dy * (dx * dx - 1.0) / (dd * dd - 1.0);
                let shrink: BTreeSet<usize> = r.difference(&x).copied().collect();
                let grow: BTreeSet<usize> = r.union(&y).copied().collect();
                *next.entry(shrink).or_insert(0.0) += c * a;
                *next.entry(grow).or_insert(0.0) += c * bb;
            }
            terms = next;
        }
    }
    terms
}

/// Exact projected-kernel variance for a Haar-block ALA and a subsystem of
/// `n_kappa` qubits inside the final block holding qubit `q`.
pub fn oracle_variance(
    n: usize,
    m: usize,
    layers: usize,
    q: usize,
    n_kappa: usize,
    purity: impl Fn(&BTreeSet<usize>) -> f64,
) -> f64 {
    let block = layout(n, m, layers).into_iter().find(|b| b.contains(&q)).expect("qubit active in final layer");
    let e: f64 = purity_terms(n, m, layers, &block)
        .iter()
        .map(|(r, c)| c * if r.is_empty() { 1.0 } else { purity(r) })
        .sum();
    let dm = (1u64 << m) as f64;
    let dk = (1u64 << (2 * n_kappa)) as f64;
    let pre = dm * dm * (dk - 1.0) / ((dm * dm - 1.0).powi(2) * dk);
    pre * (e - 1.0 / dm).powi(2)
}

/// Bit of qubit `q` (qubit 0 most significant) in basis index `i`.
pub fn bit(i: usize, q: usize, n: usize) -> usize {
    (i >> (n - 1 - q)) & 1
}

/// Reduced density matrix by direct summation over the traced-out index.
pub fn brute_reduced(amps: &[C64], n: usize, kept: &[usize]) -> DMatrix<C64> {
    let k = kept.len();
    let rest: Vec<usize> = (0..n).filter(|q| !kept.contains(q)).collect();
    let compose = |a: usize, r: usize| {
        let mut idx = 0;
        for (pos, &q) in kept.iter().enumerate() {
            idx |= ((a >> (k - 1 - pos)) & 1) << (n - 1 - q);
        }
        for (pos, &q) in rest.iter().enumerate() {
            idx |= ((r >> (rest.len() - 1 - pos)) & 1) << (n - 1 - q);
        }
        idx
    };
    let mut rho = DMatrix::zeros(1 << k, 1 << k);
    for r in 0..1usize << rest.len() {
        for a in 0..1usize << k {
            for b in 0..1usize << k {
                rho[(a, b)] += amps[compose(a, r)] * amps[compose(b, r)].conj();
            }
        }
    }
    rho
}

/// Purity of a pure state's reduction, taken on the smaller side of the cut.
pub fn brute_purity(amps: &[C64], n: usize, kept: &[usize]) -> f64 {
    let other: Vec<usize> = (0..n).filter(|q| !kept.contains(q)).collect();
    let side = if other.len() < kept.len() { &other } else { kept };
    if side.is_empty() {
        return 1.0;
    }
    let rho = brute_reduced(amps, n, side);
    (&rho * &rho).trace().re
}

/// Full `2^n` matrix of `u` acting on `targets`, built entry by entry.
pub fn dense_embed(u: &DMatrix<C64>, targets: &[usize], n: usize) -> DMatrix<C64> {
    let dim = 1 << n;
    let rest: Vec<usize> = (0..n).filter(|q| !targets.contains(q)).collect();
    let sub = |i: usize, qs: &[usize]| qs.iter().fold(0, |acc, &q| (acc << 1) | bit(i, q, n));
    DMatrix::from_fn(dim, dim, |i, j| {
        if sub(i, &rest) == sub(j, &rest) {
            u[(sub(i, targets), sub(j, targets))]
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Applies blocks in order by dense matrix-vector products.
pub fn dense_apply(blocks: &[(Vec<usize>, DMatrix<C64>)], init: &[C64], n: usize) -> Vec<C64> {
    let mut v = nalgebra::DVector::from_column_slice(init);
    for (t, u) in blocks {
        v = dense_embed(u, t, n) * v;
    }
    v.iter().copied().collect()
}

pub fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}
