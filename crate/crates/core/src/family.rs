//! The isospectral family `H(λ, μ) = U H₀ U†` with `U = e^{λa†-λ̄a} e^{μK₊-μ̄K₋}`,
//! its m-fold degenerate vacuum frame, the classifying projector, and the
//! m-parameter generalization `U = ∏_j exp((λ_j(a†)^j - λ̄_j a^j)/j)`.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{ModeExponential, TruncatedOperator, TruncatedSpace, UnitaryOperator};
use crate::linalg::{self, hermitian_eigen};
use crate::{json, CMatrix, C64};

/// A point `(λ, μ) ∈ C²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterPoint {
    #[serde(with = "json::complex")]
    pub lambda: C64,
    #[serde(with = "json::complex")]
    pub mu: C64,
}

impl ParameterPoint {
    pub const ORIGIN: ParameterPoint = ParameterPoint {
        lambda: C64::new(0.0, 0.0),
        mu: C64::new(0.0, 0.0),
    };

    pub fn new(lambda: C64, mu: C64) -> Self {
        Self { lambda, mu }
    }

    pub fn from_real(lambda: f64, mu: f64) -> Self {
        Self::new(C64::new(lambda, 0.0), C64::new(mu, 0.0))
    }

    pub fn is_finite(&self) -> bool {
        [self.lambda, self.mu]
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn check_finite(self) -> Result<Self> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(Error::NonFinite)
        }
    }

    /// Real coordinates `(Re λ, Im λ, Re μ, Im μ)`.
    pub fn to_real(&self) -> [f64; 4] {
        [self.lambda.re, self.lambda.im, self.mu.re, self.mu.im]
    }

    pub fn from_real_coords(x: [f64; 4]) -> Self {
        Self::new(C64::new(x[0], x[1]), C64::new(x[2], x[3]))
    }

    /// Euclidean distance in `C² ≅ R⁴`.
    pub fn distance(&self, other: &ParameterPoint) -> f64 {
        ((self.lambda - other.lambda).norm_sqr() + (self.mu - other.mu).norm_sqr()).sqrt()
    }
}

/// A real tangent vector at a point, written through its holomorphic
/// components `(dλ, dμ)`; the antiholomorphic ones are their conjugates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tangent {
    #[serde(with = "json::complex")]
    pub d_lambda: C64,
    #[serde(with = "json::complex")]
    pub d_mu: C64,
}

impl Tangent {
    pub const ZERO: Tangent = Tangent {
        d_lambda: C64::new(0.0, 0.0),
        d_mu: C64::new(0.0, 0.0),
    };

    pub fn new(d_lambda: C64, d_mu: C64) -> Self {
        Self { d_lambda, d_mu }
    }

    pub fn along(coord: RealCoord) -> Self {
        let mut x = [0.0; 4];
        x[coord as usize] = 1.0;
        Self::from_real(x)
    }

    pub fn from_real(x: [f64; 4]) -> Self {
        Self::new(C64::new(x[0], x[1]), C64::new(x[2], x[3]))
    }

    pub fn to_real(&self) -> [f64; 4] {
        [self.d_lambda.re, self.d_lambda.im, self.d_mu.re, self.d_mu.im]
    }

    pub fn norm(&self) -> f64 {
        (self.d_lambda.norm_sqr() + self.d_mu.norm_sqr()).sqrt()
    }
}

impl Add<Tangent> for ParameterPoint {
    type Output = ParameterPoint;
    fn add(self, t: Tangent) -> ParameterPoint {
        ParameterPoint::new(self.lambda + t.d_lambda, self.mu + t.d_mu)
    }
}

impl Sub for ParameterPoint {
    type Output = Tangent;
    fn sub(self, rhs: ParameterPoint) -> Tangent {
        Tangent::new(self.lambda - rhs.lambda, self.mu - rhs.mu)
    }
}

impl Mul<f64> for Tangent {
    type Output = Tangent;
    fn mul(self, s: f64) -> Tangent {
        Tangent::new(self.d_lambda * s, self.d_mu * s)
    }
}

impl Add for Tangent {
    type Output = Tangent;
    fn add(self, rhs: Tangent) -> Tangent {
        Tangent::new(self.d_lambda + rhs.d_lambda, self.d_mu + rhs.d_mu)
    }
}

/// Real coordinate axes of `C² ≅ R⁴`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RealCoord {
    LambdaRe = 0,
    LambdaIm = 1,
    MuRe = 2,
    MuIm = 3,
}

impl RealCoord {
    pub const ALL: [RealCoord; 4] = [
        RealCoord::LambdaRe,
        RealCoord::LambdaIm,
        RealCoord::MuRe,
        RealCoord::MuIm,
    ];
}

/// A point `(λ₁, …, λ_m)` of the m-parameter family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedPoint {
    #[serde(with = "json::complex_vec")]
    pub lambdas: Vec<C64>,
}

impl GeneralizedPoint {
    pub fn new(lambdas: Vec<C64>) -> Self {
        Self { lambdas }
    }

    pub fn zeros(m: usize) -> Self {
        Self::new(vec![C64::new(0.0, 0.0); m])
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// Embed `(λ, μ)`: `λ₁ = λ`, `λ₂ = μ`, all higher couplings zero.
    ///
    /// `(λ₂(a†)² - λ̄₂a²)/2` equals `μK₊ - μ̄K₋` exactly when `λ₂ = μ`.
    pub fn embed(p: ParameterPoint, m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidArgument(
                "embedding (λ, μ) needs at least two couplings".into(),
            ));
        }
        let mut lambdas = vec![C64::new(0.0, 0.0); m];
        lambdas[0] = p.lambda;
        lambdas[1] = p.mu;
        Ok(Self::new(lambdas))
    }

    fn check(&self, expected: usize) -> Result<()> {
        if self.lambdas.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: self.lambdas.len(),
            });
        }
        if self.lambdas.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite);
        }
        Ok(())
    }
}

/// Order in which the factors `exp((λ_j(a†)^j - λ̄_j a^j)/j)` are multiplied.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorOrder {
    /// `E₁ E₂ ⋯ E_m`
    #[default]
    Ascending,
    /// `E_m ⋯ E₂ E₁`
    Descending,
}

/// A point of the Stiefel manifold: `D x m` with orthonormal columns.
#[derive(Clone, Debug)]
pub struct Frame {
    pub matrix: CMatrix,
    pub m: usize,
    pub space: TruncatedSpace,
}

impl Frame {
    /// `max |V†V - 1_m|`.
    pub fn stiefel_defect(&self) -> f64 {
        linalg::unitarity_defect(&self.matrix)
    }

    /// `π(V) = V V†`.
    pub fn projector(&self) -> Projector {
        Projector {
            matrix: &self.matrix * self.matrix.adjoint(),
        }
    }

    /// Right action `V ↦ V g` of `g ∈ U(m)`.
    pub fn act(&self, g: &CMatrix) -> Frame {
        Frame {
            matrix: &self.matrix * g,
            m: self.m,
            space: self.space,
        }
    }
}

/// A point of the Grassmannian: a rank-m orthogonal projector.
#[derive(Clone, Debug)]
pub struct Projector {
    pub matrix: CMatrix,
}

impl Projector {
    /// `max(|P² - P|, |P† - P|, |tr P - m|)`.
    pub fn defect(&self, m: usize) -> f64 {
        let p = &self.matrix;
        let idem = linalg::max_abs(&(p * p - p));
        let herm = linalg::hermitian_defect(p);
        let trace = (p.trace() - C64::new(m as f64, 0.0)).norm();
        idem.max(herm).max(trace)
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }
}

fn check_degeneracy(m: usize, space: TruncatedSpace) -> Result<()> {
    if m == 0 || m >= space.dim() {
        return Err(Error::InvalidDegeneracy { m, dim: space.dim() });
    }
    Ok(())
}

/// `H₀ = N(N-1)⋯(N-m+1)` in units `ħω = 1`.
pub fn hamiltonian_h0(m: usize, space: TruncatedSpace) -> Result<TruncatedOperator> {
    check_degeneracy(m, space)?;
    let d = space.dim();
    let matrix = CMatrix::from_fn(d, d, |i, j| {
        if i != j {
            return C64::new(0.0, 0.0);
        }
        let n = i as f64;
        C64::new((0..m).map(|k| n - k as f64).product(), 0.0)
    });
    TruncatedOperator::new(matrix, space, format!("H0(m={m})"))
}

/// `U(λ, μ) = e^{λa†-λ̄a} e^{μK₊-μ̄K₋}`.
pub fn unitary_u(p: ParameterPoint, space: TruncatedSpace) -> Result<UnitaryOperator> {
    let p = p.check_finite()?;
    let d = crate::fock::displacement(p.lambda, space)?;
    let s = crate::fock::squeeze(p.mu, space)?;
    Ok(d.compose(&s))
}

/// Ordered product of `exp((λ_j(a†)^j - λ̄_j a^j)/j)`, `j = 1..m`.
pub fn unitary_u_generalized(
    p: &GeneralizedPoint,
    space: TruncatedSpace,
    order: FactorOrder,
) -> Result<UnitaryOperator> {
    p.check(p.len())?;
    let d = space.dim();
    let mut u = CMatrix::identity(d, d);
    let factors: Vec<(usize, C64)> = p.lambdas.iter().copied().enumerate().map(|(k, c)| (k + 1, c)).collect();
    let apply = |u: CMatrix, (j, c): (usize, C64)| -> Result<CMatrix> {
        Ok(u * linalg::exp_antihermitian(&space.mode_generator(c, j))?)
    };
    match order {
        FactorOrder::Ascending => {
            for f in factors {
                u = apply(u, f)?;
            }
        }
        FactorOrder::Descending => {
            for f in factors.into_iter().rev() {
                u = apply(u, f)?;
            }
        }
    }
    Ok(UnitaryOperator::from_matrix(u))
}

/// First `m` columns of `U(λ, μ)`.
pub fn vacuum_frame(p: ParameterPoint, m: usize, space: TruncatedSpace) -> Result<Frame> {
    check_degeneracy(m, space)?;
    let u = unitary_u(p, space)?;
    Ok(Frame {
        matrix: u.matrix().columns(0, m).into_owned(),
        m,
        space,
    })
}

/// `P(λ, μ) = U (Σ_{j<m} |j⟩⟨j|) U†`.
pub fn classifying_projector(p: ParameterPoint, m: usize, space: TruncatedSpace) -> Result<Projector> {
    Ok(vacuum_frame(p, m, space)?.projector())
}

/// Spectrum comparison of `U H₀ U†` against `H₀`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Number of lowest eigenvalues compared (`⌊D/2⌋`).
    pub matched_count: usize,
    /// Max |difference| over the compared eigenvalues.
    pub max_dev: f64,
    /// Max |difference| over the remaining (truncation-exposed) eigenvalues.
    pub boundary_dev: f64,
    /// Number of eigenvalues of `U H₀ U†` with modulus below the kernel tolerance.
    pub kernel_dim_estimate: usize,
}

pub const KERNEL_TOL: f64 = 1e-8;

pub fn isospectral_check(p: ParameterPoint, m: usize, space: TruncatedSpace) -> Result<SpectrumReport> {
    let h0 = hamiltonian_h0(m, space)?;
    let u = unitary_u(p, space)?;
    let h = u.matrix() * &h0.matrix * u.matrix().adjoint();
    let (values, _) = hermitian_eigen(&h);
    let mut reference: Vec<f64> = (0..space.dim()).map(|i| h0.matrix[(i, i)].re).collect();
    reference.sort_by(f64::total_cmp);

    let matched_count = space.dim() / 2;
    let dev = |range: std::ops::Range<usize>| range.map(|k| (values[k] - reference[k]).abs()).fold(0.0, f64::max);
    Ok(SpectrumReport {
        matched_count,
        max_dev: dev(0..matched_count),
        boundary_dev: dev(matched_count..space.dim()),
        kernel_dim_estimate: values.iter().filter(|v| v.abs() < KERNEL_TOL).count(),
    })
}

/// Fast evaluation of vacuum frames `U(p) V₀` for many parameter values on a
/// fixed truncation, using one cached eigen-solve per generator order.
#[derive(Clone, Debug)]
pub struct FamilyEvaluator {
    space: TruncatedSpace,
    modes: Vec<ModeExponential>,
}

impl FamilyEvaluator {
    /// Prepare generators of orders `1..=max_order` (2 suffices for `(λ, μ)`).
    pub fn new(space: TruncatedSpace, max_order: usize) -> Result<Self> {
        let modes = (1..=max_order.max(2))
            .map(|j| ModeExponential::new(space, j))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { space, modes })
    }

    pub fn space(&self) -> TruncatedSpace {
        self.space
    }

    pub fn max_order(&self) -> usize {
        self.modes.len()
    }

    /// `U(λ, μ) V₀` with `V₀ = (|0⟩, …, |m-1⟩)`.
    pub fn frame(&self, p: ParameterPoint, m: usize) -> Result<CMatrix> {
        check_degeneracy(m, self.space)?;
        let p = p.check_finite()?;
        let v0 = self.space.lowest_levels(m);
        let squeezed = self.modes[1].apply(p.mu, &v0);
        Ok(self.modes[0].apply(p.lambda, &squeezed))
    }

    /// `U(λ₁, …, λ_k) V₀` for the generalized family.
    pub fn frame_generalized(&self, p: &GeneralizedPoint, m: usize, order: FactorOrder) -> Result<CMatrix> {
        check_degeneracy(m, self.space)?;
        p.check(p.len())?;
        if p.len() > self.modes.len() {
            return Err(Error::InvalidArgument(format!(
                "evaluator prepared for {} couplings, got {}",
                self.modes.len(),
                p.len()
            )));
        }
        let mut block = self.space.lowest_levels(m);
        // The rightmost factor acts first.
        let indices: Vec<usize> = match order {
            FactorOrder::Ascending => (0..p.len()).rev().collect(),
            FactorOrder::Descending => (0..p.len()).collect(),
        };
        for k in indices {
            block = self.modes[k].apply(p.lambdas[k], &block);
        }
        Ok(block)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, unitarity_defect};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn space(d: usize) -> TruncatedSpace {
        TruncatedSpace::new(d).unwrap()
    }

    fn diag(h: &TruncatedOperator) -> Vec<f64> {
        (0..h.matrix.nrows()).map(|i| h.matrix[(i, i)].re).collect()
    }

    #[test]
    fn h0_diagonals() {
        assert_eq!(diag(&hamiltonian_h0(1, space(4)).unwrap()), vec![0., 1., 2., 3.]);
        assert_eq!(diag(&hamiltonian_h0(2, space(5)).unwrap()), vec![0., 0., 2., 6., 12.]);
        assert_eq!(
            diag(&hamiltonian_h0(3, space(6)).unwrap()),
            vec![0., 0., 0., 6., 24., 60.]
        );
    }

    #[test]
    fn h0_rejects_large_m() {
        assert!(matches!(
            hamiltonian_h0(4, space(4)),
            Err(Error::InvalidDegeneracy { .. })
        ));
        assert!(hamiltonian_h0(0, space(4)).is_err());
    }

    #[test]
    fn u_at_origin_and_on_lambda_axis() {
        let s = space(32);
        let id = CMatrix::identity(32, 32);
        assert!(max_abs_diff(unitary_u(ParameterPoint::ORIGIN, s).unwrap().matrix(), &id) < 1e-14);
        let lambda = c(0.4, -0.3);
        let u = unitary_u(ParameterPoint::new(lambda, c(0., 0.)), s).unwrap();
        let d = crate::fock::displacement(lambda, s).unwrap();
        assert!(max_abs_diff(u.matrix(), d.matrix()) < 1e-14);
    }

    #[test]
    fn u_is_unitary() {
        let u = unitary_u(ParameterPoint::new(c(0.3, 0.0), c(0.0, 0.2)), space(64)).unwrap();
        assert!(u.unitarity_defect() < 1e-12);
        let first = u.matrix().column(0);
        assert!((first.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn generalized_reduces_to_two_parameter_family() {
        let s = space(64);
        let p = ParameterPoint::new(c(0.2, 0.1), c(-0.15, 0.25));
        let g = GeneralizedPoint::embed(p, 2).unwrap();
        let ug = unitary_u_generalized(&g, s, FactorOrder::Ascending).unwrap();
        let u = unitary_u(p, s).unwrap();
        assert!(max_abs_diff(ug.matrix(), u.matrix()) < 1e-12);
        // λ₂ = 2μ is the squeeze at 2μ, not at μ
        let doubled = GeneralizedPoint::new(vec![p.lambda, p.mu * 2.0]);
        let ud = unitary_u_generalized(&doubled, s, FactorOrder::Ascending).unwrap();
        let u2 = unitary_u(ParameterPoint::new(p.lambda, p.mu * 2.0), s).unwrap();
        assert!(max_abs_diff(ud.matrix(), u2.matrix()) < 1e-12);
        assert!(max_abs_diff(ud.matrix(), u.matrix()) > 1e-2);
    }

    #[test]
    fn generalized_origin_and_unitarity() {
        let s = space(64);
        let id = CMatrix::identity(64, 64);
        let u0 = unitary_u_generalized(&GeneralizedPoint::zeros(3), s, FactorOrder::Ascending).unwrap();
        assert!(max_abs_diff(u0.matrix(), &id) < 1e-14);
        let p = GeneralizedPoint::new(vec![c(0.1, 0.), c(0., 0.), c(0.1, 0.)]);
        let u = unitary_u_generalized(&p, s, FactorOrder::Ascending).unwrap();
        assert!(u.unitarity_defect() < 1e-12);
    }

    #[test]
    fn factor_order_matters_for_noncommuting_factors() {
        let s = space(48);
        let p = GeneralizedPoint::new(vec![c(0.3, 0.), c(0.2, 0.1)]);
        let asc = unitary_u_generalized(&p, s, FactorOrder::Ascending).unwrap();
        let desc = unitary_u_generalized(&p, s, FactorOrder::Descending).unwrap();
        assert!(max_abs_diff(asc.matrix(), desc.matrix()) > 1e-3);
    }

    #[test]
    fn frame_at_origin() {
        let v = vacuum_frame(ParameterPoint::ORIGIN, 2, space(8)).unwrap();
        assert!(max_abs_diff(&v.matrix, &CMatrix::identity(8, 2)) < 1e-15);
        let p = v.projector();
        for i in 0..8 {
            let want = if i < 2 { 1.0 } else { 0.0 };
            assert!((p.matrix[(i, i)].re - want).abs() < 1e-15);
        }
    }

    #[test]
    fn projector_trace() {
        let p = classifying_projector(ParameterPoint::from_real(0.5, 0.3), 3, space(64)).unwrap();
        assert!((p.trace() - c(3.0, 0.0)).norm() < 1e-10);
        assert!(p.defect(3) < 1e-10);
    }

    #[test]
    fn frame_is_first_columns_of_u() {
        let s = space(40);
        let p = ParameterPoint::new(c(0.2, -0.1), c(0.3, 0.2));
        let u = unitary_u(p, s).unwrap();
        let v = vacuum_frame(p, 3, s).unwrap();
        assert_eq!(v.matrix, u.matrix().columns(0, 3).into_owned());
    }

    #[test]
    fn isospectral_at_origin_and_displaced() {
        let r = isospectral_check(ParameterPoint::ORIGIN, 2, space(16)).unwrap();
        assert!(r.max_dev < 1e-9);
        let r = isospectral_check(ParameterPoint::from_real(0.4, 0.0), 2, space(128)).unwrap();
        assert_eq!(r.matched_count, 64);
        assert!(r.max_dev < 1e-8, "{r:?}");
    }

    #[test]
    fn degenerate_vacuum_kernel() {
        let p = ParameterPoint::from_real(0.2, 0.2);
        let r = isospectral_check(p, 2, space(128)).unwrap();
        assert!(r.kernel_dim_estimate >= 2, "{r:?}");
        let s = space(128);
        let h0 = hamiltonian_h0(2, s).unwrap();
        let u = unitary_u(p, s).unwrap();
        let h = u.matrix() * &h0.matrix * u.matrix().adjoint();
        let v = vacuum_frame(p, 2, s).unwrap();
        assert!(crate::linalg::max_abs(&(h * &v.matrix)) < 1e-8);
    }

    #[test]
    fn evaluator_frames_match_direct() {
        let s = space(64);
        let eval = FamilyEvaluator::new(s, 3).unwrap();
        let p = ParameterPoint::new(c(0.3, 0.2), c(-0.2, 0.35));
        let direct = vacuum_frame(p, 3, s).unwrap();
        assert!(max_abs_diff(&eval.frame(p, 3).unwrap(), &direct.matrix) < 1e-12);
        assert!(unitarity_defect(&eval.frame(p, 3).unwrap()) < 1e-12);

        let g = GeneralizedPoint::new(vec![c(0.1, 0.), c(0.05, 0.02), c(0.02, -0.01)]);
        for order in [FactorOrder::Ascending, FactorOrder::Descending] {
            let u = unitary_u_generalized(&g, s, order).unwrap();
            let f = eval.frame_generalized(&g, 3, order).unwrap();
            assert!(max_abs_diff(&f, &u.matrix().columns(0, 3).into_owned()) < 1e-11);
        }
    }

    #[test]
    fn generalized_length_checked() {
        let eval = FamilyEvaluator::new(space(16), 2).unwrap();
        let g = GeneralizedPoint::zeros(3);
        assert!(eval.frame_generalized(&g, 2, FactorOrder::Ascending).is_err());
    }
}
