//! Curvature `F = dA + A∧A` of the vacuum connection.
//!
//! Components are stored in the ordered basis
//! `(dλ∧dμ, dλ∧dλ̄, dλ∧dμ̄, dμ∧dλ̄, dμ∧dμ̄, dλ̄∧dμ̄)`, i.e. the pairs `a < b` of
//! the coordinate order `(λ, μ, λ̄, μ̄)`.

use serde::{Deserialize, Serialize};

use crate::connection::{ConnectionField, ConnectionMatrices, Radial};
use crate::error::{Error, Result};
use crate::family::{ParameterPoint, Tangent};
use crate::lie::{lie_closure, LieClosure};
use crate::linalg::{commutator, hermitian_defect, max_abs, max_abs_diff};
use crate::oracle::{wirtinger_derivative, DifferentiationPlan};
use crate::path::RealPlane;
use crate::{json, CMatrix, C64};

/// Relative singular-value threshold for curvature-span rank decisions.
pub const SPAN_RANK_TOL: f64 = 1e-9;
pub const DEFAULT_CLOSURE_BUDGET: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    LambdaMu,
    LambdaLambdaBar,
    LambdaMuBar,
    MuLambdaBar,
    MuMuBar,
    LambdaBarMuBar,
}

impl Component {
    pub const ALL: [Component; 6] = [
        Component::LambdaMu,
        Component::LambdaLambdaBar,
        Component::LambdaMuBar,
        Component::MuLambdaBar,
        Component::MuMuBar,
        Component::LambdaBarMuBar,
    ];

    /// Positions in the coordinate order `(λ, μ, λ̄, μ̄)`.
    pub fn indices(self) -> (usize, usize) {
        match self {
            Component::LambdaMu => (0, 1),
            Component::LambdaLambdaBar => (0, 2),
            Component::LambdaMuBar => (0, 3),
            Component::MuLambdaBar => (1, 2),
            Component::MuMuBar => (1, 3),
            Component::LambdaBarMuBar => (2, 3),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Component::LambdaMu => "dlambda^dmu",
            Component::LambdaLambdaBar => "dlambda^dlambdabar",
            Component::LambdaMuBar => "dlambda^dmubar",
            Component::MuLambdaBar => "dmu^dlambdabar",
            Component::MuMuBar => "dmu^dmubar",
            Component::LambdaBarMuBar => "dlambdabar^dmubar",
        }
    }
}

/// `E` (superdiagonal `√k`), `F = E†`, `K = diag(0,…,0,1)`, `L = diag(0,…,0,1,1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisMatrices {
    #[serde(rename = "E", with = "json::matrix")]
    pub e: CMatrix,
    #[serde(rename = "F", with = "json::matrix")]
    pub f: CMatrix,
    #[serde(rename = "K", with = "json::matrix")]
    pub k: CMatrix,
    #[serde(rename = "L", with = "json::matrix")]
    pub l: CMatrix,
    #[serde(rename = "EK", with = "json::matrix")]
    pub ek: CMatrix,
    #[serde(rename = "KF", with = "json::matrix")]
    pub kf: CMatrix,
}

pub fn basis_matrices(m: usize) -> Result<BasisMatrices> {
    if m < 2 {
        return Err(Error::InvalidDegeneracy { m, dim: m });
    }
    Ok(basis_unchecked(m))
}

/// For `m = 1` this gives `E = 0`, `K = L = 1`; every `L` coefficient then vanishes.
fn basis_unchecked(m: usize) -> BasisMatrices {
    let e = CMatrix::from_fn(m, m, |i, j| {
        if j == i + 1 {
            C64::from((j as f64).sqrt())
        } else {
            C64::from(0.0)
        }
    });
    let f = e.adjoint();
    let diag = |from: usize| CMatrix::from_fn(m, m, |i, j| C64::from(if i == j && i >= from { 1.0 } else { 0.0 }));
    let k = diag(m - 1);
    let l = diag(m.saturating_sub(2));
    let ek = &e * &k;
    let kf = &k * &f;
    BasisMatrices { e, f, k, l, ek, kf }
}

/// Coefficient matrices of the curvature two-form at a point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureForm {
    #[serde(rename = "C_lambda_mu", with = "json::matrix")]
    pub lambda_mu: CMatrix,
    #[serde(rename = "C_lambda_lambdabar", with = "json::matrix")]
    pub lambda_lambda_bar: CMatrix,
    #[serde(rename = "C_lambda_mubar", with = "json::matrix")]
    pub lambda_mu_bar: CMatrix,
    #[serde(rename = "C_mu_lambdabar", with = "json::matrix")]
    pub mu_lambda_bar: CMatrix,
    #[serde(rename = "C_mu_mubar", with = "json::matrix")]
    pub mu_mu_bar: CMatrix,
    #[serde(rename = "C_lambdabar_mubar", with = "json::matrix")]
    pub lambda_bar_mu_bar: CMatrix,
    pub point: ParameterPoint,
    pub m: usize,
}

impl CurvatureForm {
    pub fn zeros(point: ParameterPoint, m: usize) -> Self {
        let z = CMatrix::zeros(m, m);
        Self {
            lambda_mu: z.clone(),
            lambda_lambda_bar: z.clone(),
            lambda_mu_bar: z.clone(),
            mu_lambda_bar: z.clone(),
            mu_mu_bar: z.clone(),
            lambda_bar_mu_bar: z,
            point,
            m,
        }
    }

    pub fn component(&self, c: Component) -> &CMatrix {
        match c {
            Component::LambdaMu => &self.lambda_mu,
            Component::LambdaLambdaBar => &self.lambda_lambda_bar,
            Component::LambdaMuBar => &self.lambda_mu_bar,
            Component::MuLambdaBar => &self.mu_lambda_bar,
            Component::MuMuBar => &self.mu_mu_bar,
            Component::LambdaBarMuBar => &self.lambda_bar_mu_bar,
        }
    }

    pub fn components(&self) -> [&CMatrix; 6] {
        Component::ALL.map(|c| self.component(c))
    }

    /// Largest entrywise violation of `F† = -F`: `C_λλ̄`, `C_μμ̄` hermitian,
    /// `C_λ̄μ̄ = -C_λμ†`, `C_μλ̄ = C_λμ̄†`.
    pub fn hermiticity_defect(&self) -> f64 {
        hermitian_defect(&self.lambda_lambda_bar)
            .max(hermitian_defect(&self.mu_mu_bar))
            .max(max_abs(&(&self.lambda_bar_mu_bar + self.lambda_mu.adjoint())))
            .max(max_abs_diff(&self.mu_lambda_bar, &self.lambda_mu_bar.adjoint()))
    }

    /// `F(X, Y)` for real tangent vectors; anti-hermitian.
    pub fn evaluate(&self, x: Tangent, y: Tangent) -> CMatrix {
        let dz = |t: Tangent| [t.d_lambda, t.d_mu, t.d_lambda.conj(), t.d_mu.conj()];
        let (zx, zy) = (dz(x), dz(y));
        let mut out = CMatrix::zeros(self.m, self.m);
        for c in Component::ALL {
            let (a, b) = c.indices();
            let w = zx[a] * zy[b] - zy[a] * zx[b];
            out += self.component(c) * w;
        }
        out
    }

    /// `F(∂_first, ∂_second)` on a coordinate plane.
    pub fn plane_value(&self, plane: RealPlane) -> CMatrix {
        self.evaluate(Tangent::along(plane.0), Tangent::along(plane.1))
    }

    pub fn max_abs_diff(&self, other: &CurvatureForm) -> f64 {
        Component::ALL
            .iter()
            .map(|&c| max_abs_diff(self.component(c), other.component(c)))
            .fold(0.0, f64::max)
    }

    /// Per-component maximum deviation.
    pub fn component_deviations(&self, other: &CurvatureForm) -> Vec<(Component, f64)> {
        Component::ALL
            .iter()
            .map(|&c| (c, max_abs_diff(self.component(c), other.component(c))))
            .collect()
    }
}

/// Closed-form curvature.
pub fn curvature_closed(p: ParameterPoint, m: usize) -> Result<CurvatureForm> {
    if m == 0 {
        return Err(Error::InvalidDegeneracy { m, dim: 0 });
    }
    let b = basis_unchecked(m);
    let p = p.check_finite()?;
    let rad = Radial::new(p.mu.norm());
    let (mu, mu_bar) = (p.mu, p.mu.conj());
    let mf = m as f64;
    let ch = rad.cosh;
    let cs = rad.cs;
    let q = rad.cs_excess;
    let sc = rad.sinhc;

    let lambda_mu = &b.ek * (mu_bar * mu_bar * (mf * ch * q / 4.0)) - &b.kf * (mu_bar * (mf * sc * (1.0 + cs) / 4.0));
    let lambda_lambda_bar = &b.k * C64::from(-mf);
    let lambda_mu_bar = -(&b.ek * C64::from(mf * ch * (1.0 + cs) / 4.0) - &b.kf * (mu * (mf * sc * (cs - 1.0) / 4.0)));
    let mu_lambda_bar =
        -(&b.kf * C64::from(mf * ch * (1.0 + cs) / 4.0) - &b.ek * (mu_bar * (mf * sc * (cs - 1.0) / 4.0)));
    let mu_mu_bar = -(&b.k * C64::from(mf / 2.0 * cs) + &b.l * C64::from(mf * (mf - 1.0) / 4.0 * cs));
    let lambda_bar_mu_bar = -(&b.kf * (mu * mu * (mf * ch * q / 4.0)) - &b.ek * (mu * (mf * sc * (1.0 + cs) / 4.0)));

    Ok(CurvatureForm {
        lambda_mu,
        lambda_lambda_bar,
        lambda_mu_bar,
        mu_lambda_bar,
        mu_mu_bar,
        lambda_bar_mu_bar,
        point: p,
        m,
    })
}

/// Curvature assembled from a connection field by Wirtinger differences:
///
/// ```text
/// C_λμ   = ∂_λA_μ - ∂_μA_λ + [A_λ, A_μ]
/// C_λλ̄   = -((∂_λ̄A_λ)† + ∂_λ̄A_λ + [A_λ, A_λ†])
/// C_λμ̄   = -((∂_λ̄A_μ)† + ∂_μ̄A_λ + [A_λ, A_μ†])
/// C_μλ̄   = -((∂_μ̄A_λ)† + ∂_λ̄A_μ + [A_μ, A_λ†])
/// C_μμ̄   = -((∂_μ̄A_μ)† + ∂_μ̄A_μ + [A_μ, A_μ†])
/// C_λ̄μ̄   = -((∂_λA_μ)† - (∂_μA_λ)† - [A_λ†, A_μ†])
/// ```
pub fn curvature_from_components<F: ConnectionField + ?Sized>(
    field: &F,
    p: ParameterPoint,
    plan: &DifferentiationPlan,
) -> Result<CurvatureForm> {
    let p = p.check_finite()?;
    let a: ConnectionMatrices = field.connection(p)?;
    let dl = wirtinger_derivative(|z| field.connection(ParameterPoint::new(z, p.mu)), p.lambda, plan)?;
    let dm = wirtinger_derivative(|z| field.connection(ParameterPoint::new(p.lambda, z)), p.mu, plan)?;
    let (al, am) = (&a.a_lambda, &a.a_mu);
    let (al_h, am_h) = (al.adjoint(), am.adjoint());

    let lambda_mu = &dl.d_z.a_mu - &dm.d_z.a_lambda + commutator(al, am);
    let lambda_lambda_bar = -(dl.d_zbar.a_lambda.adjoint() + &dl.d_zbar.a_lambda + commutator(al, &al_h));
    let lambda_mu_bar = -(dl.d_zbar.a_mu.adjoint() + &dm.d_zbar.a_lambda + commutator(al, &am_h));
    let mu_lambda_bar = -(dm.d_zbar.a_lambda.adjoint() + &dl.d_zbar.a_mu + commutator(am, &al_h));
    let mu_mu_bar = -(dm.d_zbar.a_mu.adjoint() + &dm.d_zbar.a_mu + commutator(am, &am_h));
    let lambda_bar_mu_bar = -(dl.d_z.a_mu.adjoint() - dm.d_z.a_lambda.adjoint() - commutator(&al_h, &am_h));

    Ok(CurvatureForm {
        lambda_mu,
        lambda_lambda_bar,
        lambda_mu_bar,
        mu_lambda_bar,
        mu_mu_bar,
        lambda_bar_mu_bar,
        point: p,
        m: field.degeneracy(),
    })
}

/// Coefficient of `dλ∧dμ∧dλ̄∧dμ̄`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourFormValue {
    #[serde(with = "json::matrix")]
    pub matrix: CMatrix,
}

/// `(cs/|μ|)(m²(m-1)/4 · L - m²(m+1)/2 · K)`, `cs = cosh|μ| sinh|μ|`.
pub fn f_squared(p: ParameterPoint, m: usize) -> Result<FourFormValue> {
    if m == 0 {
        return Err(Error::InvalidDegeneracy { m, dim: 0 });
    }
    let b = basis_unchecked(m);
    let cs = Radial::new(p.check_finite()?.mu.norm()).cs;
    let mf = m as f64;
    let matrix =
        (&b.l * C64::from(mf * mf * (mf - 1.0) / 4.0) - &b.k * C64::from(mf * mf * (mf + 1.0) / 2.0)) * C64::from(cs);
    Ok(FourFormValue { matrix })
}

/// `F∧F` expanded in the four-form basis:
/// `{C_λμ, C_λ̄μ̄} - {C_λλ̄, C_μμ̄} + {C_λμ̄, C_μλ̄}` with `{X, Y} = XY + YX`.
pub fn f_squared_from_wedge(f: &CurvatureForm) -> FourFormValue {
    let anti = |x: &CMatrix, y: &CMatrix| x * y + y * x;
    let matrix = anti(&f.lambda_mu, &f.lambda_bar_mu_bar) - anti(&f.lambda_lambda_bar, &f.mu_mu_bar)
        + anti(&f.lambda_mu_bar, &f.mu_lambda_bar);
    FourFormValue { matrix }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryDiscrepancy {
    /// `F2[i][j]`
    pub component: String,
    #[serde(with = "json::complex")]
    pub formula: C64,
    #[serde(with = "json::complex")]
    pub wedge: C64,
    pub deviation: f64,
}

/// Three-way comparison of `F²`: closed formula, wedge of the closed-form
/// curvature, and wedge of an independently computed curvature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FSquaredComparison {
    pub point: ParameterPoint,
    pub m: usize,
    pub tolerance: f64,
    pub formula_vs_wedge: f64,
    pub wedge_vs_oracle: Option<f64>,
    pub formula_vs_oracle: Option<f64>,
    /// Entries where the formula disagrees with the closed-form wedge.
    pub discrepancies: Vec<EntryDiscrepancy>,
    /// All available values agree within `tolerance`.
    pub agree: bool,
    /// The two wedge evaluations agree within `tolerance`.
    pub wedges_agree: bool,
}

pub fn compare_f_squared(
    p: ParameterPoint,
    m: usize,
    oracle: Option<&CurvatureForm>,
    tolerance: f64,
) -> Result<FSquaredComparison> {
    let formula = f_squared(p, m)?.matrix;
    let wedge = f_squared_from_wedge(&curvature_closed(p, m)?).matrix;
    let oracle_wedge = oracle.map(|f| f_squared_from_wedge(f).matrix);
    let formula_vs_wedge = max_abs_diff(&formula, &wedge);
    let wedge_vs_oracle = oracle_wedge.as_ref().map(|o| max_abs_diff(&wedge, o));
    let formula_vs_oracle = oracle_wedge.as_ref().map(|o| max_abs_diff(&formula, o));
    let mut discrepancies = Vec::new();
    for i in 0..m {
        for j in 0..m {
            let deviation = (formula[(i, j)] - wedge[(i, j)]).norm();
            if deviation >= tolerance {
                discrepancies.push(EntryDiscrepancy {
                    component: format!("F2[{i}][{j}]"),
                    formula: formula[(i, j)],
                    wedge: wedge[(i, j)],
                    deviation,
                });
            }
        }
    }
    let within = |d: Option<f64>| d.is_none_or(|d| d < tolerance);
    let wedges_agree = within(wedge_vs_oracle);
    Ok(FSquaredComparison {
        point: p,
        m,
        tolerance,
        formula_vs_wedge,
        wedge_vs_oracle,
        formula_vs_oracle,
        agree: formula_vs_wedge < tolerance && wedges_agree && within(formula_vs_oracle),
        wedges_agree,
        discrepancies,
    })
}

/// Traces of the six curvature components and of the `F²` coefficient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChernTraces {
    #[serde(with = "json::complex_vec")]
    pub tr_f: Vec<C64>,
    #[serde(with = "json::complex")]
    pub tr_f2: C64,
}

pub fn chern_trace_forms(f: &CurvatureForm, f2: &FourFormValue) -> Result<ChernTraces> {
    if f2.matrix.nrows() != f.m {
        return Err(Error::ShapeMismatch {
            expected: (f.m, f.m),
            actual: f2.matrix.shape(),
        });
    }
    Ok(ChernTraces {
        tr_f: f.components().iter().map(|c| c.trace()).collect(),
        tr_f2: f2.matrix.trace(),
    })
}

/// Lie closure of the real-plane curvature values `F(∂_a, ∂_b)` at the samples.
pub fn curvature_span(samples: &[ParameterPoint], m: usize, budget: usize) -> Result<LieClosure> {
    if samples.is_empty() {
        return Err(Error::NotEnoughSamples("curvature span", 1));
    }
    let mut generators = Vec::with_capacity(6 * samples.len());
    for &p in samples {
        let f = curvature_closed(p, m)?;
        generators.extend(RealPlane::ALL.iter().map(|&plane| f.plane_value(plane)));
    }
    lie_closure(&generators, SPAN_RANK_TOL, budget)
}

pub fn curvature_span_dimension(samples: &[ParameterPoint], m: usize) -> Result<usize> {
    curvature_span(samples, m, DEFAULT_CLOSURE_BUDGET).map(|c| c.dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::ClosedForm;
    use crate::linalg::anti_hermitian_defect;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn diag(v: &[f64]) -> CMatrix {
        CMatrix::from_fn(v.len(), v.len(), |i, j| C64::from(if i == j { v[i] } else { 0.0 }))
    }

    #[test]
    fn basis_examples() {
        let b = basis_matrices(2).unwrap();
        assert_eq!(
            b.e,
            CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)])
        );
        assert_eq!(b.k, diag(&[0.0, 1.0]));
        assert_eq!(b.l, diag(&[1.0, 1.0]));
        assert_eq!(b.ek, b.e);
        assert_eq!(b.kf, b.f);
        let b = basis_matrices(3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if (i, j) == (1, 2) { 2f64.sqrt() } else { 0.0 };
                assert!((b.ek[(i, j)] - C64::from(want)).norm() < 1e-15);
            }
        }
        for m in 2..7 {
            let b = basis_matrices(m).unwrap();
            assert_eq!(b.kf, b.ek.adjoint());
            assert_eq!(b.f, b.e.adjoint());
        }
        assert!(basis_matrices(1).is_err());
    }

    #[test]
    fn closed_examples() {
        let f = curvature_closed(ParameterPoint::new(c(0.4, 0.1), c(0.7, -0.2)), 3).unwrap();
        assert_eq!(f.lambda_lambda_bar, diag(&[0.0, 0.0, -3.0]));
        let f = curvature_closed(ParameterPoint::ORIGIN, 2).unwrap();
        assert!(max_abs_diff(&f.mu_mu_bar, &diag(&[-0.5, -1.5])) < 1e-15);
        let want = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(-1., 0.), c(0., 0.), c(0., 0.)]);
        assert!(max_abs_diff(&f.lambda_mu_bar, &want) < 1e-15);
        assert!(max_abs(&f.lambda_mu) < 1e-15);
    }

    #[test]
    fn abelian_closed_form() {
        let p = ParameterPoint::from_real(0.2, 0.5);
        let f = curvature_closed(p, 1).unwrap();
        assert_eq!(f.lambda_lambda_bar[(0, 0)], c(-1.0, 0.0));
        assert!((f.mu_mu_bar[(0, 0)] + C64::from(0.5 * Radial::new(0.5).cs)).norm() < 1e-15);
        assert_eq!(f.lambda_mu[(0, 0)], c(0.0, 0.0));
        let cmp = compare_f_squared(p, 1, None, 1e-13).unwrap();
        assert!(cmp.agree);
    }

    #[test]
    fn closed_is_lambda_independent() {
        let a = curvature_closed(ParameterPoint::new(c(0.0, 0.0), c(0.3, 0.4)), 4).unwrap();
        let b = curvature_closed(ParameterPoint::new(c(-0.9, 0.6), c(0.3, 0.4)), 4).unwrap();
        assert_eq!(a.max_abs_diff(&b), 0.0);
    }

    #[test]
    fn closed_matches_components_of_closed_connection() {
        let plan = DifferentiationPlan::default();
        for m in 1..=4 {
            for p in [
                ParameterPoint::from_real(0.3, 0.4),
                ParameterPoint::new(c(-0.5, 0.8), c(0.6, -0.7)),
                ParameterPoint::new(c(1.0, 0.0), c(0.0, 1.0)),
            ] {
                let closed = curvature_closed(p, m).unwrap();
                let assembled = curvature_from_components(&ClosedForm { m }, p, &plan).unwrap();
                assert!(
                    closed.max_abs_diff(&assembled) < 1e-6,
                    "m={m} {:?}",
                    closed.component_deviations(&assembled)
                );
            }
        }
    }

    struct Zero;
    impl ConnectionField for Zero {
        fn degeneracy(&self) -> usize {
            2
        }
        fn connection(&self, p: ParameterPoint) -> Result<ConnectionMatrices> {
            Ok(ConnectionMatrices::zeros(p, 2))
        }
    }

    #[test]
    fn zero_field_and_abelian_field() {
        let plan = DifferentiationPlan::default();
        let f = curvature_from_components(&Zero, ParameterPoint::from_real(0.1, 0.2), &plan).unwrap();
        assert_eq!(f, CurvatureForm::zeros(ParameterPoint::from_real(0.1, 0.2), 2));
        let f = curvature_from_components(
            &ClosedForm { m: 1 },
            ParameterPoint::new(c(0.2, 0.3), c(0.1, 0.0)),
            &plan,
        )
        .unwrap();
        assert!((f.lambda_lambda_bar[(0, 0)] - c(-1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn f_squared_examples() {
        let cs1 = 1f64.cosh() * 1f64.sinh();
        let f2 = f_squared(ParameterPoint::from_real(0.0, 1.0), 2).unwrap();
        assert!(max_abs_diff(&f2.matrix, &(diag(&[1.0, -5.0]) * C64::from(cs1))) < 1e-14);
        assert!((cs1 - 1.81343).abs() < 1e-5);
        let f2 = f_squared(ParameterPoint::ORIGIN, 2).unwrap();
        assert!(max_abs_diff(&f2.matrix, &diag(&[1.0, -5.0])) < 1e-15);
        let p = ParameterPoint::from_real(0.0, 0.6);
        let cs = Radial::new(0.6).cs;
        let f2 = f_squared(p, 3).unwrap();
        assert!(max_abs_diff(&f2.matrix, &diag(&[0.0, 4.5 * cs, 4.5 * cs - 18.0 * cs])) < 1e-13);
    }

    #[test]
    fn wedge_of_closed_matches_formula() {
        for m in 2..=5 {
            for p in [
                ParameterPoint::ORIGIN,
                ParameterPoint::from_real(0.0, 0.5),
                ParameterPoint::new(c(0.3, 0.2), c(-0.4, 0.9)),
            ] {
                let cmp = compare_f_squared(p, m, None, 1e-12).unwrap();
                assert!(cmp.agree, "{cmp:?}");
                assert!(cmp.discrepancies.is_empty());
            }
        }
        let zero = CurvatureForm::zeros(ParameterPoint::ORIGIN, 3);
        assert_eq!(max_abs(&f_squared_from_wedge(&zero).matrix), 0.0);
    }

    #[test]
    fn discrepancy_names_entries() {
        let mut bad = curvature_closed(ParameterPoint::from_real(0.0, 0.5), 2).unwrap();
        bad.mu_mu_bar[(1, 1)] += C64::from(1.0);
        let cmp = compare_f_squared(ParameterPoint::from_real(0.0, 0.5), 2, Some(&bad), 1e-9).unwrap();
        assert!(!cmp.agree && !cmp.wedges_agree);
        assert!(cmp.discrepancies.is_empty());
        assert!(cmp.wedge_vs_oracle.unwrap() > 1.0);
    }

    #[test]
    fn chern_traces() {
        let f = curvature_closed(ParameterPoint::ORIGIN, 2).unwrap();
        let f2 = f_squared(ParameterPoint::ORIGIN, 2).unwrap();
        let t = chern_trace_forms(&f, &f2).unwrap();
        assert!((t.tr_f[1] - c(-2.0, 0.0)).norm() < 1e-15);
        assert!((t.tr_f2 - c(-4.0, 0.0)).norm() < 1e-15);
        let z = chern_trace_forms(
            &CurvatureForm::zeros(ParameterPoint::ORIGIN, 2),
            &FourFormValue {
                matrix: CMatrix::zeros(2, 2),
            },
        )
        .unwrap();
        assert!(t.tr_f.len() == 6 && z.tr_f.iter().all(|x| x.norm() == 0.0) && z.tr_f2.norm() == 0.0);
        assert!(chern_trace_forms(
            &f,
            &FourFormValue {
                matrix: CMatrix::zeros(3, 3)
            }
        )
        .is_err());
    }

    #[test]
    fn span_dimensions() {
        let samples = [ParameterPoint::from_real(0.3, 0.4), ParameterPoint::from_real(0.1, 0.8)];
        assert_eq!(curvature_span_dimension(&samples, 2).unwrap(), 4);
        assert_eq!(curvature_span_dimension(&samples, 3).unwrap(), 4);
        assert!(curvature_span_dimension(&[], 2).is_err());
    }

    fn arb_point() -> impl Strategy<Value = ParameterPoint> {
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
            .prop_map(|(a, b, c, d)| ParameterPoint::from_real_coords([a, b, c, d]))
    }

    proptest! {
        #[test]
        fn closed_pairings_hold(p in arb_point(), m in 2usize..6) {
            let f = curvature_closed(p, m).unwrap();
            prop_assert!(f.hermiticity_defect() < 1e-13);
            for plane in RealPlane::ALL {
                prop_assert!(anti_hermitian_defect(&f.plane_value(plane)) < 1e-12);
            }
        }

        #[test]
        fn evaluation_is_bilinear_and_alternating(p in arb_point(), x in arb_point(), y in arb_point()) {
            let f = curvature_closed(p, 3).unwrap();
            let tx = Tangent::new(x.lambda, x.mu);
            let ty = Tangent::new(y.lambda, y.mu);
            prop_assert!(max_abs(&(f.evaluate(tx, ty) + f.evaluate(ty, tx))) < 1e-12);
            prop_assert!(max_abs(&f.evaluate(tx, tx)) < 1e-12);
            let sum = f.evaluate(tx + ty, ty) - f.evaluate(tx, ty);
            prop_assert!(max_abs(&sum) < 1e-12);
        }
    }
}
