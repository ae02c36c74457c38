//! Truncated Fock space: ladder operators, the su(1,1) triple, and their
//! unitary exponentials (displacement and squeeze).
//!
//! Truncation to the first `D` number states keeps `a|n⟩ = √n|n-1⟩` and
//! `a†|n⟩ = √(n+1)|n+1⟩` exact for every `n < D-1`; only the top levels see the
//! cut. Identities that hold in infinite dimension are therefore checked on an
//! interior block whose size shrinks with the strength of the generator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, exp_nilpotent, hermitian_eigen};
use crate::{CMatrix, C64};

/// The first `dim` Fock levels `|0⟩ … |dim-1⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TruncatedSpace {
    dim: usize,
}

impl TruncatedSpace {
    pub const MIN_DIM: usize = 2;

    pub fn new(dim: usize) -> Result<Self> {
        if dim < Self::MIN_DIM {
            return Err(Error::DimensionTooSmall {
                dim,
                min: Self::MIN_DIM,
            });
        }
        Ok(Self { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Matrix of `(a†)^order`, built entrywise: `⟨n+j|(a†)^j|n⟩ = √((n+1)…(n+j))`.
    pub fn creation_power(&self, order: usize) -> CMatrix {
        let d = self.dim;
        let mut m = CMatrix::zeros(d, d);
        for n in 0..d.saturating_sub(order) {
            let amp: f64 = (n + 1..=n + order).map(|k| k as f64).product::<f64>().sqrt();
            m[(n + order, n)] = C64::new(amp, 0.0);
        }
        m
    }

    /// Matrix of `a^order`, the transpose of [`Self::creation_power`].
    pub fn annihilation_power(&self, order: usize) -> CMatrix {
        self.creation_power(order).transpose()
    }

    /// Anti-hermitian generator `(c (a†)^j - c̄ a^j) / j`.
    pub fn mode_generator(&self, coupling: C64, order: usize) -> CMatrix {
        let up = self.creation_power(order);
        let scale = 1.0 / order as f64;
        let mut g = &up * (coupling * scale);
        g -= up.transpose() * (coupling.conj() * scale);
        g
    }

    /// `|0⟩ … |m-1⟩` as the columns of a `D x m` matrix.
    pub fn lowest_levels(&self, m: usize) -> CMatrix {
        CMatrix::identity(self.dim, m)
    }
}

/// A labelled operator on a truncated space.
#[derive(Clone, Debug)]
pub struct TruncatedOperator {
    pub matrix: CMatrix,
    pub space: TruncatedSpace,
    pub label: String,
}

impl TruncatedOperator {
    pub fn new(matrix: CMatrix, space: TruncatedSpace, label: impl Into<String>) -> Result<Self> {
        let d = space.dim();
        if matrix.shape() != (d, d) {
            return Err(Error::ShapeMismatch {
                expected: (d, d),
                actual: matrix.shape(),
            });
        }
        Ok(Self {
            matrix,
            space,
            label: label.into(),
        })
    }

    fn unchecked(matrix: CMatrix, space: TruncatedSpace, label: &str) -> Self {
        Self {
            matrix,
            space,
            label: label.to_string(),
        }
    }
}

/// A `D x D` unitary produced by exponentiating an anti-hermitian generator.
#[derive(Clone, Debug)]
pub struct UnitaryOperator {
    matrix: CMatrix,
}

impl UnitaryOperator {
    pub(crate) fn from_matrix(matrix: CMatrix) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `max |U†U - 1|`.
    pub fn unitarity_defect(&self) -> f64 {
        linalg::unitarity_defect(&self.matrix)
    }

    pub fn compose(&self, rhs: &UnitaryOperator) -> UnitaryOperator {
        UnitaryOperator::from_matrix(&self.matrix * &rhs.matrix)
    }
}

/// `a, a†, N` and the su(1,1) triple `K₊ = (a†)²/2`, `K₋ = a²/2`, `K₃ = (N + 1/2)/2`.
#[derive(Clone, Debug)]
pub struct LadderOperators {
    pub a: TruncatedOperator,
    pub a_dag: TruncatedOperator,
    pub n: TruncatedOperator,
    pub k_plus: TruncatedOperator,
    pub k_minus: TruncatedOperator,
    pub k_3: TruncatedOperator,
}

pub fn make_operators(space: TruncatedSpace) -> LadderOperators {
    let d = space.dim();
    let a_dag = space.creation_power(1);
    let a = a_dag.transpose();
    let n = CMatrix::from_fn(d, d, |i, j| {
        if i == j {
            C64::new(i as f64, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let half = C64::new(0.5, 0.0);
    let k_plus = space.creation_power(2) * half;
    let k_minus = space.annihilation_power(2) * half;
    let k_3 = (&n + CMatrix::identity(d, d) * half) * half;
    LadderOperators {
        a: TruncatedOperator::unchecked(a, space, "a"),
        a_dag: TruncatedOperator::unchecked(a_dag, space, "a_dag"),
        n: TruncatedOperator::unchecked(n, space, "N"),
        k_plus: TruncatedOperator::unchecked(k_plus, space, "K_plus"),
        k_minus: TruncatedOperator::unchecked(k_minus, space, "K_minus"),
        k_3: TruncatedOperator::unchecked(k_3, space, "K_3"),
    }
}

pub fn exp_antihermitian(g: &TruncatedOperator) -> Result<UnitaryOperator> {
    linalg::exp_antihermitian(&g.matrix).map(UnitaryOperator::from_matrix)
}

fn finite(z: C64) -> Result<C64> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(Error::NonFinite)
    }
}

/// `exp(λa† - λ̄a)`.
pub fn displacement(lambda: C64, space: TruncatedSpace) -> Result<UnitaryOperator> {
    let g = space.mode_generator(finite(lambda)?, 1);
    linalg::exp_antihermitian(&g).map(UnitaryOperator::from_matrix)
}

/// `exp(μK₊ - μ̄K₋)`.
pub fn squeeze(mu: C64, space: TruncatedSpace) -> Result<UnitaryOperator> {
    // (μ(a†)² - μ̄a²)/2 is exactly the order-2 mode generator with coupling μ.
    let g = space.mode_generator(finite(mu)?, 2);
    linalg::exp_antihermitian(&g).map(UnitaryOperator::from_matrix)
}

/// Disentangled squeeze parameter `ζ = μ tanh|μ| / |μ|`.
pub fn disentangled_zeta(mu: C64) -> C64 {
    let r = mu.norm();
    if r < 1e-8 {
        mu * (1.0 - r * r / 3.0)
    } else {
        mu * (r.tanh() / r)
    }
}

/// Number of leading Fock levels on which a truncated exponential of
/// `λa† - λ̄a` or `μK₊ - μ̄K₋` agrees with its infinite-dimensional counterpart
/// to ~1e-9.
///
/// Displacement couples neighbouring levels with strength `|λ|√n`, which sets
/// an additive buffer `8 + ⌈3|λ|√D⌉`. Squeezing maps level `n` to levels of
/// order `n e^{2|μ|}`, so the usable block shrinks by a factor `1 + 4|μ|`.
pub fn interior_size(lambda_abs: f64, mu_abs: f64, dim: usize) -> usize {
    let buffer = 8 + (3.0 * lambda_abs * (dim as f64).sqrt()).ceil() as usize;
    let remaining = dim.saturating_sub(buffer) as f64;
    (remaining / (1.0 + 4.0 * mu_abs)).floor() as usize
}

/// Deviation between two sides of an operator identity, split into the
/// trusted interior block and the truncation boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub interior_dev: f64,
    pub boundary_dev: f64,
    #[serde(rename = "D")]
    pub dim: usize,
    pub buffer: usize,
}

impl IdentityReport {
    /// Compare `lhs` and `rhs` on the leading `interior` levels and on the rest.
    pub fn compare(lhs: &CMatrix, rhs: &CMatrix, interior: usize) -> Self {
        let dim = lhs.nrows();
        let interior = interior.min(dim);
        let mut interior_dev = 0.0_f64;
        let mut boundary_dev = 0.0_f64;
        for j in 0..lhs.ncols() {
            for i in 0..dim {
                let dev = (lhs[(i, j)] - rhs[(i, j)]).norm();
                if i < interior && j < interior {
                    interior_dev = interior_dev.max(dev);
                } else {
                    boundary_dev = boundary_dev.max(dev);
                }
            }
        }
        Self {
            interior_dev,
            boundary_dev,
            dim,
            buffer: dim - interior,
        }
    }
}

/// Both sides of the displacement factorization
/// `e^{λa†-λ̄a} = e^{-|λ|²/2} e^{λa†} e^{-λ̄a}` and the squeeze factorization
/// `e^{μK₊-μ̄K₋} = e^{ζK₊} e^{log(1-|ζ|²)K₃} e^{-ζ̄K₋}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BchReport {
    pub displacement: IdentityReport,
    pub squeeze: IdentityReport,
}

impl BchReport {
    pub fn max_interior_dev(&self) -> f64 {
        self.displacement.interior_dev.max(self.squeeze.interior_dev)
    }
}

pub fn bch_identity_report(lambda: C64, mu: C64, space: TruncatedSpace) -> Result<BchReport> {
    let d = space.dim();
    let ops = make_operators(space);

    let lhs = displacement(lambda, space)?.into_matrix();
    let raise = exp_nilpotent(&(&ops.a_dag.matrix * lambda));
    let lower = exp_nilpotent(&(&ops.a.matrix * (-lambda.conj())));
    let rhs = (raise * lower) * C64::new((-lambda.norm_sqr() / 2.0).exp(), 0.0);
    let displacement = IdentityReport::compare(&lhs, &rhs, interior_size(lambda.norm(), 0.0, d));

    let lhs = squeeze(mu, space)?.into_matrix();
    let zeta = disentangled_zeta(mu);
    let log_scale = (1.0 - zeta.norm_sqr()).ln();
    let raise = exp_nilpotent(&(&ops.k_plus.matrix * zeta));
    let lower = exp_nilpotent(&(&ops.k_minus.matrix * (-zeta.conj())));
    let middle = CMatrix::from_fn(d, d, |i, j| {
        if i == j {
            C64::new((log_scale * ops.k_3.matrix[(i, i)].re).exp(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let rhs = raise * middle * lower;
    let squeeze = IdentityReport::compare(&lhs, &rhs, interior_size(0.0, mu.norm(), d));

    Ok(BchReport { displacement, squeeze })
}

/// Deviations of the canonical, number and su(1,1) commutation relations on
/// interior blocks (levels `< D - 4`, away from the truncation edge).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommutatorReport {
    #[serde(rename = "D")]
    pub dim: usize,
    pub interior: usize,
    /// `[a, a†] = 1`
    pub canonical: f64,
    /// `[N, a] = -a`, `[N, a†] = a†`
    pub number: f64,
    /// `[K₃, K₊] = K₊`, `[K₃, K₋] = -K₋`, `[K₊, K₋] = -2K₃`
    pub su11: f64,
}

impl CommutatorReport {
    pub fn max_dev(&self) -> f64 {
        self.canonical.max(self.number).max(self.su11)
    }
}

pub fn commutator_report(space: TruncatedSpace) -> Result<CommutatorReport> {
    let d = space.dim();
    if d < 8 {
        return Err(Error::DimensionTooSmall { dim: d, min: 8 });
    }
    let ops = make_operators(space);
    let interior = d - 4;
    let (a, ad, n) = (&ops.a.matrix, &ops.a_dag.matrix, &ops.n.matrix);
    let (kp, km, k3) = (&ops.k_plus.matrix, &ops.k_minus.matrix, &ops.k_3.matrix);
    let block = |x: CMatrix| linalg::max_abs_block(&x, interior);
    let canonical = block(linalg::commutator(a, ad) - CMatrix::identity(d, d));
    let number = block(linalg::commutator(n, a) + a).max(block(linalg::commutator(n, ad) - ad));
    let su11 = block(linalg::commutator(k3, kp) - kp)
        .max(block(linalg::commutator(k3, km) + km))
        .max(block(linalg::commutator(kp, km) + k3 * C64::new(2.0, 0.0)));
    Ok(CommutatorReport {
        dim: d,
        interior,
        canonical,
        number,
        su11,
    })
}

/// Cached eigenbasis of the unit-strength mode generator `((a†)^j - a^j)/j`.
///
/// Any coupling `c = r e^{iφ}` is reached by a diagonal phase rotation,
/// `(c(a†)^j - c̄a^j)/j = R G R†` with `R = e^{iφN/j}`, and scaling by `r`. So
/// one hermitian eigen-solve per order serves every parameter value, and
/// applying the exponential to a `D x k` block costs `O(D² k)`.
#[derive(Clone, Debug)]
pub struct ModeExponential {
    order: usize,
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
}

impl ModeExponential {
    pub fn new(space: TruncatedSpace, order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidArgument("mode order must be >= 1".into()));
        }
        let unit = space.mode_generator(C64::new(1.0, 0.0), order);
        let (eigenvalues, eigenvectors) = hermitian_eigen(&(unit * C64::i()));
        Ok(Self {
            order,
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `exp((c(a†)^j - c̄a^j)/j) · block`.
    pub fn apply(&self, coupling: C64, block: &CMatrix) -> CMatrix {
        let r = coupling.norm();
        if r == 0.0 {
            return block.clone();
        }
        let theta = coupling.arg() / self.order as f64;
        let rotate = |m: &mut CMatrix, sign: f64| {
            for (n, mut row) in m.row_iter_mut().enumerate() {
                row *= C64::from_polar(1.0, sign * theta * n as f64);
            }
        };
        let mut y = block.clone();
        rotate(&mut y, -1.0);
        let mut y = self.eigenvectors.adjoint() * y;
        for (k, mut row) in y.row_iter_mut().enumerate() {
            row *= C64::from_polar(1.0, -r * self.eigenvalues[k]);
        }
        let mut y = &self.eigenvectors * y;
        rotate(&mut y, 1.0);
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator, max_abs_block, max_abs_diff};

    fn space(d: usize) -> TruncatedSpace {
        TruncatedSpace::new(d).unwrap()
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn dimension_too_small() {
        let err = TruncatedSpace::new(1).unwrap_err();
        assert!(err.to_string().contains("dimension too small"));
    }

    #[test]
    fn smallest_annihilator() {
        let ops = make_operators(space(2));
        let expected = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)]);
        assert_eq!(ops.a.matrix, expected);
    }

    #[test]
    fn number_operator_is_diagonal() {
        let ops = make_operators(space(4));
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { i as f64 } else { 0.0 };
                assert_eq!(ops.n.matrix[(i, j)], c(want, 0.0));
            }
        }
    }

    #[test]
    fn canonical_commutator_interior_and_top() {
        let d = 64;
        let ops = make_operators(space(d));
        let comm = commutator(&ops.a.matrix, &ops.a_dag.matrix);
        let dev = &comm - CMatrix::identity(d, d);
        assert!(max_abs_block(&dev, d - 2) < 1e-12);
        // the top level sees the truncation: [a, a†] there equals 1 - D
        assert!((comm[(d - 1, d - 1)].re - (1.0 - d as f64)).abs() < 1e-12);
    }

    #[test]
    fn ladder_action_on_basis_columns() {
        for d in [2usize, 5, 17] {
            let ops = make_operators(space(d));
            for n in 0..d - 1 {
                if n > 0 {
                    assert_eq!(ops.a.matrix[(n - 1, n)].re, (n as f64).sqrt());
                }
                assert_eq!(ops.a_dag.matrix[(n + 1, n)].re, ((n + 1) as f64).sqrt());
            }
        }
    }

    #[test]
    fn number_commutators_interior() {
        let d = 64;
        let ops = make_operators(space(d));
        let na = commutator(&ops.n.matrix, &ops.a.matrix);
        let nad = commutator(&ops.n.matrix, &ops.a_dag.matrix);
        assert!(max_abs_block(&(&na + &ops.a.matrix), d - 1) < 1e-12);
        assert!(max_abs_block(&(&nad - &ops.a_dag.matrix), d - 1) < 1e-12);
    }

    #[test]
    fn su11_commutators_interior() {
        let d = 64;
        let ops = make_operators(space(d));
        let (kp, km, k3) = (&ops.k_plus.matrix, &ops.k_minus.matrix, &ops.k_3.matrix);
        let interior = d - 4;
        assert!(max_abs_block(&(commutator(k3, kp) - kp), interior) < 1e-12);
        assert!(max_abs_block(&(commutator(k3, km) + km), interior) < 1e-12);
        assert!(max_abs_block(&(commutator(kp, km) + k3 * c(2.0, 0.0)), interior) < 1e-12);
    }

    #[test]
    fn commutator_report_at_64() {
        let r = commutator_report(space(64)).unwrap();
        assert!(r.max_dev() < 1e-12, "{r:?}");
        assert!(commutator_report(space(4)).is_err());
    }

    #[test]
    fn zero_parameters_give_identity() {
        let s = space(16);
        let id = CMatrix::identity(16, 16);
        assert!(max_abs_diff(displacement(c(0., 0.), s).unwrap().matrix(), &id) < 1e-15);
        assert!(max_abs_diff(squeeze(c(0., 0.), s).unwrap().matrix(), &id) < 1e-15);
    }

    #[test]
    fn vacuum_amplitude_of_displacement() {
        let u = displacement(c(1.0, 0.0), space(64)).unwrap();
        assert!((u.matrix()[(0, 0)] - c((-0.5f64).exp(), 0.0)).norm() < 1e-10);
    }

    #[test]
    fn coherent_state_column() {
        for lambda in [c(0.5, 0.0), c(-1.2, 0.7), c(2.0, 0.0), c(0.0, -1.9)] {
            let g = TruncatedOperator::new(space(64).mode_generator(lambda, 1), space(64), "g").unwrap();
            let u = exp_antihermitian(&g).unwrap();
            let mut amp = c((-lambda.norm_sqr() / 2.0).exp(), 0.0);
            for n in 0..64 {
                if n > 0 {
                    amp = amp * lambda / (n as f64).sqrt();
                }
                assert!((u.matrix()[(n, 0)] - amp).norm() < 1e-10, "λ={lambda} n={n}");
            }
        }
    }

    #[test]
    fn unitarity_for_large_generators() {
        let s = space(64);
        // ‖λa† - λ̄a‖ ≈ 2|λ|√D, so |λ| = 3 is near the ‖G‖ ≤ 50 range
        let u = displacement(c(3.0, 1.0), s).unwrap();
        assert!(u.unitarity_defect() < 1e-12);
        let u = squeeze(c(0.2, 0.4), s).unwrap();
        assert!(u.unitarity_defect() < 1e-12);
    }

    #[test]
    fn bch_trivial_point() {
        let r = bch_identity_report(c(0., 0.), c(0., 0.), space(32)).unwrap();
        assert!(r.displacement.interior_dev < 1e-15);
        assert!(r.squeeze.interior_dev < 1e-15);
        assert!(r.displacement.boundary_dev < 1e-15);
    }

    #[test]
    fn bch_displacement_and_squeeze() {
        let r = bch_identity_report(c(0.5, 0.0), c(0.0, 0.0), space(64)).unwrap();
        assert!(r.displacement.interior_dev < 1e-8, "{r:?}");
        let r = bch_identity_report(c(0.0, 0.0), c(0.4, 0.0), space(64)).unwrap();
        assert!(r.squeeze.interior_dev < 1e-8, "{r:?}");
        // truncation pollutes the top levels visibly
        assert!(r.squeeze.boundary_dev > 1e-3);
    }

    #[test]
    fn report_serializes_dimension_as_d() {
        let r = bch_identity_report(c(0.1, 0.0), c(0.1, 0.0), space(16)).unwrap();
        let v = serde_json::to_value(&r.displacement).unwrap();
        assert_eq!(v["D"], 16);
        assert!(v.get("interior_dev").is_some());
        assert!(v.get("buffer").is_some());
    }

    #[test]
    fn cached_mode_exponential_matches_direct() {
        let s = space(48);
        for order in 1..=3 {
            let cached = ModeExponential::new(s, order).unwrap();
            let coupling = c(0.3, -0.2);
            let direct = linalg::exp_antihermitian(&s.mode_generator(coupling, order)).unwrap();
            let applied = cached.apply(coupling, &CMatrix::identity(48, 48));
            assert!(max_abs_diff(&direct, &applied) < 1e-12, "order {order}");
        }
    }

    #[test]
    fn zeta_stays_inside_unit_disk() {
        for r in [1e-9, 0.1, 1.0, 5.0, 15.0] {
            assert!(disentangled_zeta(c(0.0, r)).norm() < 1.0);
        }
    }
}
