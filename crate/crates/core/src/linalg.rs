//! Dense complex matrix helpers shared by the rest of the crate.

use nalgebra::linalg::{Schur, SymmetricEigen};
use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::{CMatrix, C64};

/// Relative tolerance on `G + G†` accepted by [`exp_antihermitian`].
pub const ANTI_HERMITIAN_TOL: f64 = 1e-12;

pub fn zeros(n: usize) -> CMatrix {
    CMatrix::zeros(n, n)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in max_abs_diff");
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Largest entry modulus restricted to the leading `n x n` block.
pub fn max_abs_block(m: &CMatrix, n: usize) -> f64 {
    let n = n.min(m.nrows()).min(m.ncols());
    let mut out = 0.0_f64;
    for j in 0..n {
        for i in 0..n {
            out = out.max(m[(i, j)].norm());
        }
    }
    out
}

/// `max |G + G†|`.
pub fn anti_hermitian_defect(g: &CMatrix) -> f64 {
    max_abs(&(g + g.adjoint()))
}

/// `max |H - H†|`.
pub fn hermitian_defect(h: &CMatrix) -> f64 {
    max_abs(&(h - h.adjoint()))
}

/// `max |U†U - 1|`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.ncols();
    max_abs(&(u.adjoint() * u - identity(n)))
}

/// Eigen-decomposition of a hermitian matrix, eigenvalues ascending.
///
/// The input is symmetrized first; only its hermitian part is used.
pub fn hermitian_eigen(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let sym = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(h.nrows(), h.ncols(), |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// `Q diag(f(λ_k)) Q†`.
pub fn spectral_apply(values: &[f64], vectors: &CMatrix, f: impl Fn(f64) -> C64) -> CMatrix {
    let diag = DVector::from_iterator(values.len(), values.iter().map(|&v| f(v)));
    let mut scaled = vectors.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= diag[j];
    }
    scaled * vectors.adjoint()
}

/// `e^G` for anti-hermitian `G`, via the eigenbasis of the hermitian `iG`.
///
/// With `iG = Q Λ Q†` the exponential is `Q e^{-iΛ} Q†`, unitary up to the
/// orthogonality of the computed eigenvectors.
pub fn exp_antihermitian(g: &CMatrix) -> Result<CMatrix> {
    if !g.is_square() {
        return Err(Error::ShapeMismatch {
            expected: (g.nrows(), g.nrows()),
            actual: g.shape(),
        });
    }
    let defect = anti_hermitian_defect(g);
    if defect > ANTI_HERMITIAN_TOL * max_abs(g).max(1.0) {
        return Err(Error::NotAntiHermitian { deviation: defect });
    }
    let h = g * C64::i();
    let (values, vectors) = hermitian_eigen(&h);
    Ok(spectral_apply(&values, &vectors, |v| C64::new(0.0, -v).exp()))
}

/// Exponential of a nilpotent (strictly triangular) matrix by its terminating series.
pub fn exp_nilpotent(x: &CMatrix) -> CMatrix {
    let n = x.nrows();
    let mut out = identity(n);
    let mut term = identity(n);
    for k in 1..n.max(1) {
        term = &term * x / C64::new(k as f64, 0.0);
        if max_abs(&term) == 0.0 {
            break;
        }
        out += &term;
    }
    out
}

/// Closest unitary in the polar sense, `W (W†W)^{-1/2}`.
pub fn polar_unitary(w: &CMatrix) -> CMatrix {
    let gram = w.adjoint() * w;
    let (values, vectors) = hermitian_eigen(&gram);
    let inv_sqrt = spectral_apply(&values, &vectors, |v| {
        C64::new(1.0 / v.max(f64::MIN_POSITIVE).sqrt(), 0.0)
    });
    w * inv_sqrt
}

/// Principal logarithm of a unitary matrix.
///
/// A unitary matrix is normal, so its complex Schur form is diagonal up to
/// roundoff and `log W = Q diag(log t_kk) Q†`.
pub fn unitary_log(w: &CMatrix) -> CMatrix {
    let (q, t) = Schur::new(w.clone()).unpack();
    let n = w.nrows();
    let mut diag = CMatrix::zeros(n, n);
    for k in 0..n {
        diag[(k, k)] = t[(k, k)].ln();
    }
    &q * diag * q.adjoint()
}

/// Rows and columns are mapped through `f(i, j, value)`.
pub fn map_entries(m: &CMatrix, f: impl Fn(usize, usize, C64) -> C64) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| f(i, j, m[(i, j)]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_of_zero_is_identity() {
        let u = exp_antihermitian(&zeros(5)).unwrap();
        assert!(max_abs_diff(&u, &identity(5)) < 1e-15);
    }

    #[test]
    fn exp_of_scalar_phase() {
        let mut g = zeros(4);
        g[(0, 0)] = C64::new(0.0, std::f64::consts::PI);
        let u = exp_antihermitian(&g).unwrap();
        let mut expected = identity(4);
        expected[(0, 0)] = C64::new(-1.0, 0.0);
        assert!(max_abs_diff(&u, &expected) < 1e-14);
    }

    #[test]
    fn exp_rejects_hermitian_input() {
        let mut g = zeros(3);
        g[(0, 1)] = C64::new(1.0, 0.0);
        g[(1, 0)] = C64::new(1.0, 0.0);
        assert!(matches!(exp_antihermitian(&g), Err(Error::NotAntiHermitian { .. })));
    }

    #[test]
    fn exp_rejects_non_square() {
        let g = CMatrix::zeros(2, 3);
        assert!(matches!(exp_antihermitian(&g), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn log_inverts_exp_near_identity() {
        let mut g = zeros(3);
        g[(0, 1)] = C64::new(0.1, 0.2);
        g[(1, 0)] = C64::new(-0.1, 0.2);
        g[(2, 2)] = C64::new(0.0, 0.3);
        g[(1, 1)] = C64::new(0.0, -0.05);
        let w = exp_antihermitian(&g).unwrap();
        assert!(max_abs_diff(&unitary_log(&w), &g) < 1e-13);
    }

    #[test]
    fn polar_restores_unitarity() {
        let mut g = zeros(2);
        g[(0, 1)] = C64::new(0.5, 0.0);
        g[(1, 0)] = C64::new(-0.5, 0.0);
        let u = exp_antihermitian(&g).unwrap();
        let noisy = &u * C64::new(1.0 + 1e-6, 0.0);
        let fixed = polar_unitary(&noisy);
        assert!(unitarity_defect(&fixed) < 1e-14);
        assert!(max_abs_diff(&fixed, &u) < 1e-12);
    }

    #[test]
    fn nilpotent_series_terminates() {
        let mut x = zeros(3);
        x[(1, 0)] = C64::new(2.0, 0.0);
        x[(2, 1)] = C64::new(3.0, 0.0);
        let e = exp_nilpotent(&x);
        // 1 + X + X²/2, X² has a single entry 6 at (2, 0)
        assert_eq!(e[(2, 0)], C64::new(3.0, 0.0));
        assert_eq!(e[(1, 0)], C64::new(2.0, 0.0));
        assert_eq!(e[(0, 0)], C64::new(1.0, 0.0));
    }
}
