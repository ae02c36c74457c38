//! Real Lie-algebra closure of sets of `m x m` complex matrices.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::commutator;
use crate::CMatrix;

/// Real coordinates `(Re x_00, Im x_00, Re x_01, …)`.
pub fn vectorize(x: &CMatrix) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * x.len());
    for i in 0..x.nrows() {
        for j in 0..x.ncols() {
            out.push(x[(i, j)].re);
            out.push(x[(i, j)].im);
        }
    }
    out
}

fn devectorize(v: &[f64], n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |i, j| {
        let k = 2 * (i * n + j);
        crate::C64::new(v[k], v[k + 1])
    })
}

/// An orthonormal basis (real Frobenius inner product) of the real span of
/// `items`, dropping singular values below `rel_tol` times the largest.
pub fn orthonormal_span(items: &[CMatrix], rel_tol: f64) -> Vec<CMatrix> {
    let Some(first) = items.first() else {
        return Vec::new();
    };
    let n = first.nrows();
    let rows = 2 * n * n;
    let cols = items.len();
    let mut a = DMatrix::<f64>::zeros(rows, cols);
    for (k, x) in items.iter().enumerate() {
        for (r, v) in vectorize(x).into_iter().enumerate() {
            a[(r, k)] = v;
        }
    }
    let svd = a.svd(true, false);
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    if sigma_max == 0.0 {
        return Vec::new();
    }
    let u = svd.u.expect("left singular vectors requested");
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > rel_tol * sigma_max)
        .map(|(k, _)| devectorize(u.column(k).as_slice(), n))
        .collect()
}

pub fn real_rank(items: &[CMatrix], rel_tol: f64) -> usize {
    orthonormal_span(items, rel_tol).len()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LieClosure {
    pub dim: usize,
    pub iterations: usize,
    /// Dimension after each commutator round.
    pub history: Vec<usize>,
}

/// Dimension of the real Lie algebra generated by `generators`: the span is
/// repeatedly enlarged by all pairwise commutators until its rank stops growing.
pub fn lie_closure(generators: &[CMatrix], rel_tol: f64, budget: usize) -> Result<LieClosure> {
    let mut basis = orthonormal_span(generators, rel_tol);
    let mut history = vec![basis.len()];
    for iteration in 1..=budget {
        let mut candidates = basis.clone();
        for i in 0..basis.len() {
            for j in i + 1..basis.len() {
                candidates.push(commutator(&basis[i], &basis[j]));
            }
        }
        let next = orthonormal_span(&candidates, rel_tol);
        let grew = next.len() > basis.len();
        basis = next;
        history.push(basis.len());
        if !grew {
            return Ok(LieClosure {
                dim: basis.len(),
                iterations: iteration,
                history,
            });
        }
    }
    Err(Error::NotStabilized {
        budget,
        partial: basis.len(),
    })
}
