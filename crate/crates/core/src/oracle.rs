//! Finite-difference evaluation of `A = V†dV` and `F = dA + A∧A` on the
//! truncated space, independent of any closed form.

use serde::{Deserialize, Serialize};

use crate::connection::{ConnectionField, ConnectionMatrices};
use crate::curvature::{curvature_from_components, CurvatureForm};
use crate::error::{Error, Result};
use crate::family::{FactorOrder, FamilyEvaluator, GeneralizedPoint, ParameterPoint};
use crate::fock::TruncatedSpace;
use crate::linalg::{max_abs, max_abs_diff};
use crate::{json, CMatrix, C64};

pub const DEFAULT_STEP: f64 = 1e-4;
pub const MIN_STEP: f64 = 1e-8;
pub const MAX_STEP: f64 = 1e-2;
/// Successive-difference threshold for declaring truncation convergence.
pub const CONVERGENCE_TOL: f64 = 1e-8;

/// Central-difference stencil settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DifferentiationPlan {
    pub h: f64,
    #[serde(default)]
    pub richardson: bool,
}

impl Default for DifferentiationPlan {
    fn default() -> Self {
        Self {
            h: DEFAULT_STEP,
            richardson: false,
        }
    }
}

impl DifferentiationPlan {
    pub fn new(h: f64) -> Result<Self> {
        Self { h, richardson: false }.validated()
    }

    pub fn with_richardson(mut self, on: bool) -> Self {
        self.richardson = on;
        self
    }

    pub fn validated(self) -> Result<Self> {
        if !(MIN_STEP..=MAX_STEP).contains(&self.h) {
            return Err(Error::InvalidStep(self.h));
        }
        Ok(self)
    }

    /// Leading truncation error scale of the stencil.
    pub fn error_scale(&self) -> f64 {
        if self.richardson {
            self.h.powi(4)
        } else {
            self.h * self.h
        }
    }
}

/// Values that finite-difference stencils can combine linearly.
pub trait Linear: Sized {
    fn combine(terms: &[(C64, &Self)]) -> Self;
}

impl Linear for C64 {
    fn combine(terms: &[(C64, &Self)]) -> Self {
        terms.iter().map(|(c, x)| c * *x).sum()
    }
}

impl Linear for CMatrix {
    fn combine(terms: &[(C64, &Self)]) -> Self {
        let (r, c) = terms[0].1.shape();
        let mut out = CMatrix::zeros(r, c);
        for (coeff, x) in terms {
            out.zip_apply(*x, |o, v| *o += coeff * v);
        }
        out
    }
}

impl Linear for ConnectionMatrices {
    fn combine(terms: &[(C64, &Self)]) -> Self {
        let lam: Vec<(C64, &CMatrix)> = terms.iter().map(|(c, x)| (*c, &x.a_lambda)).collect();
        let mu: Vec<(C64, &CMatrix)> = terms.iter().map(|(c, x)| (*c, &x.a_mu)).collect();
        ConnectionMatrices {
            a_lambda: CMatrix::combine(&lam),
            a_mu: CMatrix::combine(&mu),
            point: terms[0].1.point,
            m: terms[0].1.m,
        }
    }
}

/// `∂_z f` and `∂_z̄ f`.
#[derive(Clone, Debug, PartialEq)]
pub struct Wirtinger<T> {
    pub d_z: T,
    pub d_zbar: T,
}

fn central<T: Linear>(f: &impl Fn(C64) -> Result<T>, z0: C64, h: f64) -> Result<Wirtinger<T>> {
    let xp = f(z0 + C64::new(h, 0.0))?;
    let xm = f(z0 - C64::new(h, 0.0))?;
    let yp = f(z0 + C64::new(0.0, h))?;
    let ym = f(z0 - C64::new(0.0, h))?;
    let s = 0.25 / h;
    let i = C64::i();
    // ∂_z = (f_x - i f_y)/2, ∂_z̄ = (f_x + i f_y)/2
    let d_z = T::combine(&[(C64::from(s), &xp), (C64::from(-s), &xm), (-i * s, &yp), (i * s, &ym)]);
    let d_zbar = T::combine(&[(C64::from(s), &xp), (C64::from(-s), &xm), (i * s, &yp), (-i * s, &ym)]);
    Ok(Wirtinger { d_z, d_zbar })
}

/// Wirtinger derivatives of `f` at `z0` by central differences, optionally
/// with one Richardson level `(4 D(h/2) - D(h)) / 3`.
pub fn wirtinger_derivative<T: Linear>(
    f: impl Fn(C64) -> Result<T>,
    z0: C64,
    plan: &DifferentiationPlan,
) -> Result<Wirtinger<T>> {
    let plan = plan.validated()?;
    let coarse = central(&f, z0, plan.h)?;
    if !plan.richardson {
        return Ok(coarse);
    }
    let fine = central(&f, z0, plan.h / 2.0)?;
    let a = C64::from(4.0 / 3.0);
    let b = C64::from(-1.0 / 3.0);
    Ok(Wirtinger {
        d_z: T::combine(&[(a, &fine.d_z), (b, &coarse.d_z)]),
        d_zbar: T::combine(&[(a, &fine.d_zbar), (b, &coarse.d_zbar)]),
    })
}

/// `D = max(64, 16m, ⌈16(1 + |λ|² + |μ|²)⌉)` rounded up to a power of two.
pub fn auto_dimension(p: ParameterPoint, m: usize) -> usize {
    let load = (16.0 * (1.0 + p.lambda.norm_sqr() + p.mu.norm_sqr())).ceil() as usize;
    64usize.max(16 * m).max(load).next_power_of_two()
}

/// Weight of the frame in the top eighth of the truncated levels.
pub fn frame_tail(v: &CMatrix) -> f64 {
    let d = v.nrows();
    let start = d - (d / 8).max(1);
    (0..v.ncols())
        .map(|j| (start..d).map(|i| v[(i, j)].norm_sqr()).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleConnection {
    #[serde(flatten)]
    pub matrices: ConnectionMatrices,
    #[serde(rename = "D")]
    pub dim: usize,
    pub h: f64,
    pub estimated_error: f64,
    /// `max |V†∂_κ̄V + (V†∂_κV)†|` over both parameters.
    pub assembly_defect: f64,
}

/// Connection of the generalized family, one matrix per coupling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleGeneralConnection {
    #[serde(with = "json::complex_vec")]
    pub point: Vec<C64>,
    pub m: usize,
    pub order: FactorOrder,
    pub a: Vec<MatrixEntry>,
    #[serde(rename = "D")]
    pub dim: usize,
    pub h: f64,
    pub estimated_error: f64,
    pub assembly_defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixEntry {
    #[serde(with = "json::matrix")]
    pub matrix: CMatrix,
}

impl OracleGeneralConnection {
    /// `Σ_j A_j dλ_j - A_j† dλ̄_j` on the tangent `(dλ_1, …)`.
    pub fn contract(&self, tangent: &[C64]) -> Result<CMatrix> {
        if tangent.len() != self.a.len() {
            return Err(Error::LengthMismatch {
                expected: self.a.len(),
                actual: tangent.len(),
            });
        }
        let mut out = CMatrix::zeros(self.m, self.m);
        for (aj, dz) in self.a.iter().zip(tangent) {
            out += &aj.matrix * *dz - aj.matrix.adjoint() * dz.conj();
        }
        Ok(out)
    }
}

/// `V†∂V` for a frame-valued function of one complex coordinate.
fn pullback(
    v: &CMatrix,
    frame: impl Fn(C64) -> Result<CMatrix>,
    z0: C64,
    plan: &DifferentiationPlan,
) -> Result<(CMatrix, f64)> {
    let d = wirtinger_derivative(frame, z0, plan)?;
    let a = v.adjoint() * d.d_z;
    let a_bar = v.adjoint() * d.d_zbar;
    let defect = max_abs(&(a_bar + a.adjoint()));
    Ok((a, defect))
}

/// `A_κ = V†∂_κV` using a prepared evaluator.
pub fn connection_numeric_with(
    evaluator: &FamilyEvaluator,
    p: ParameterPoint,
    m: usize,
    plan: &DifferentiationPlan,
) -> Result<OracleConnection> {
    let p = p.check_finite()?;
    let v = evaluator.frame(p, m)?;
    let (a_lambda, dl) = pullback(&v, |z| evaluator.frame(ParameterPoint::new(z, p.mu), m), p.lambda, plan)?;
    let (a_mu, dm) = pullback(&v, |z| evaluator.frame(ParameterPoint::new(p.lambda, z), m), p.mu, plan)?;
    Ok(OracleConnection {
        matrices: ConnectionMatrices {
            a_lambda,
            a_mu,
            point: p,
            m,
        },
        dim: evaluator.space().dim(),
        h: plan.h,
        estimated_error: (10.0 * plan.error_scale()).max(frame_tail(&v)),
        assembly_defect: dl.max(dm),
    })
}

pub fn connection_numeric(
    p: ParameterPoint,
    m: usize,
    space: TruncatedSpace,
    plan: &DifferentiationPlan,
) -> Result<OracleConnection> {
    connection_numeric_with(&FamilyEvaluator::new(space, 2)?, p, m, plan)
}

/// `A_{λ_j} = V†∂_{λ_j}V` for the generalized family.
pub fn connection_numeric_generalized(
    p: &GeneralizedPoint,
    m: usize,
    space: TruncatedSpace,
    plan: &DifferentiationPlan,
    order: FactorOrder,
) -> Result<OracleGeneralConnection> {
    if p.is_empty() {
        return Err(Error::InvalidArgument(
            "generalized point needs at least one coupling".into(),
        ));
    }
    let evaluator = FamilyEvaluator::new(space, p.len())?;
    let v = evaluator.frame_generalized(p, m, order)?;
    let mut a = Vec::with_capacity(p.len());
    let mut defect: f64 = 0.0;
    for k in 0..p.len() {
        let shifted = |z: C64| {
            let mut q = p.clone();
            q.lambdas[k] = z;
            evaluator.frame_generalized(&q, m, order)
        };
        let (ak, dk) = pullback(&v, shifted, p.lambdas[k], plan)?;
        defect = defect.max(dk);
        a.push(MatrixEntry { matrix: ak });
    }
    Ok(OracleGeneralConnection {
        point: p.lambdas.clone(),
        m,
        order,
        a,
        dim: space.dim(),
        h: plan.h,
        estimated_error: (10.0 * plan.error_scale()).max(frame_tail(&v)),
        assembly_defect: defect,
    })
}

/// The numerically differentiated connection as a field over parameter space.
#[derive(Clone, Debug)]
pub struct NumericField {
    evaluator: FamilyEvaluator,
    m: usize,
    plan: DifferentiationPlan,
}

impl NumericField {
    pub fn new(space: TruncatedSpace, m: usize, plan: DifferentiationPlan) -> Result<Self> {
        Ok(Self {
            evaluator: FamilyEvaluator::new(space, 2)?,
            m,
            plan: plan.validated()?,
        })
    }

    pub fn evaluator(&self) -> &FamilyEvaluator {
        &self.evaluator
    }

    pub fn plan(&self) -> &DifferentiationPlan {
        &self.plan
    }

    pub fn oracle(&self, p: ParameterPoint) -> Result<OracleConnection> {
        connection_numeric_with(&self.evaluator, p, self.m, &self.plan)
    }
}

impl ConnectionField for NumericField {
    fn degeneracy(&self) -> usize {
        self.m
    }

    fn connection(&self, p: ParameterPoint) -> Result<ConnectionMatrices> {
        self.oracle(p).map(|o| o.matrices)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleCurvature {
    #[serde(flatten)]
    pub form: CurvatureForm,
    #[serde(rename = "D")]
    pub dim: usize,
    pub h: f64,
    pub estimated_error: f64,
}

pub fn curvature_numeric_with(field: &NumericField, p: ParameterPoint) -> Result<OracleCurvature> {
    let form = curvature_from_components(field, p, field.plan())?;
    let tail = frame_tail(&field.evaluator.frame(p, field.m)?);
    Ok(OracleCurvature {
        form,
        dim: field.evaluator.space().dim(),
        h: field.plan.h,
        estimated_error: field.plan.error_scale().max(tail),
    })
}

/// `F = dA + A∧A` with `A` itself numerically differentiated.
pub fn curvature_numeric(
    p: ParameterPoint,
    m: usize,
    space: TruncatedSpace,
    plan: &DifferentiationPlan,
) -> Result<OracleCurvature> {
    curvature_numeric_with(&NumericField::new(space, m, *plan)?, p)
}

/// Comparison of `P dP∧dP` with `V F V†` on the `dλ∧dλ̄` and `dμ∧dμ̄` components.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalFormReport {
    pub point: ParameterPoint,
    pub m: usize,
    #[serde(rename = "D")]
    pub dim: usize,
    pub lambda_lambda_bar_dev: f64,
    pub mu_mu_bar_dev: f64,
    pub max_deviation: f64,
}

pub fn global_form_check(
    p: ParameterPoint,
    m: usize,
    space: TruncatedSpace,
    plan: &DifferentiationPlan,
) -> Result<GlobalFormReport> {
    let field = NumericField::new(space, m, *plan)?;
    let ev = field.evaluator();
    let projector = |q: ParameterPoint| -> Result<CMatrix> {
        let v = ev.frame(q, m)?;
        Ok(&v * v.adjoint())
    };
    let proj = projector(p)?;
    let v = ev.frame(p, m)?;
    let dl = wirtinger_derivative(|z| projector(ParameterPoint::new(z, p.mu)), p.lambda, plan)?;
    let dm = wirtinger_derivative(|z| projector(ParameterPoint::new(p.lambda, z)), p.mu, plan)?;
    let wedge = |x: &CMatrix, y: &CMatrix| &proj * (x * y - y * x);
    let lhs_l = wedge(&dl.d_z, &dl.d_zbar);
    let lhs_m = wedge(&dm.d_z, &dm.d_zbar);
    let f = curvature_numeric_with(&field, p)?.form;
    let rhs_l = &v * &f.lambda_lambda_bar * v.adjoint();
    let rhs_m = &v * &f.mu_mu_bar * v.adjoint();
    let lambda_lambda_bar_dev = max_abs_diff(&lhs_l, &rhs_l);
    let mu_mu_bar_dev = max_abs_diff(&lhs_m, &rhs_m);
    Ok(GlobalFormReport {
        point: p,
        m,
        dim: space.dim(),
        lambda_lambda_bar_dev,
        mu_mu_bar_dev,
        max_deviation: lambda_lambda_bar_dev.max(mu_mu_bar_dev),
    })
}

/// Truncation study of the numeric connection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub point: ParameterPoint,
    pub m: usize,
    pub dims: Vec<usize>,
    /// `max |A(D_{k+1}) - A(D_k)|` for consecutive dimensions.
    pub deviations: Vec<f64>,
    pub converged: bool,
}

pub fn convergence_report(
    p: ParameterPoint,
    m: usize,
    plan: &DifferentiationPlan,
    dims: &[usize],
) -> Result<ConvergenceReport> {
    let min = 4 * m;
    if dims.len() < 2 || dims.windows(2).any(|w| w[0] >= w[1]) || dims[0] < min {
        return Err(Error::InvalidDimensionList { min });
    }
    let results = dims
        .iter()
        .map(|&d| connection_numeric(p, m, TruncatedSpace::new(d)?, plan))
        .collect::<Result<Vec<_>>>()?;
    let deviations: Vec<f64> = results
        .windows(2)
        .map(|w| w[1].matrices.max_abs_diff(&w[0].matrices))
        .collect();
    let converged = deviations.last().is_some_and(|&d| d < CONVERGENCE_TOL);
    Ok(ConvergenceReport {
        point: p,
        m,
        dims: dims.to_vec(),
        deviations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::connection_closed;
    use crate::family::GeneralizedPoint;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn step_bounds() {
        assert!(DifferentiationPlan::new(1e-9).is_err());
        assert!(DifferentiationPlan::new(0.1).is_err());
        assert!(DifferentiationPlan::new(1e-8).is_ok());
        assert!(DifferentiationPlan::new(1e-2).is_ok());
    }

    #[test]
    fn wirtinger_elementary() {
        let plan = DifferentiationPlan::default();
        let z0 = c(0.3, -0.7);
        let d = wirtinger_derivative(Ok, z0, &plan).unwrap();
        assert!((d.d_z - c(1.0, 0.0)).norm() < 1e-10 && d.d_zbar.norm() < 1e-10);
        let d = wirtinger_derivative(|z: C64| Ok(z.conj()), z0, &plan).unwrap();
        assert!(d.d_z.norm() < 1e-10 && (d.d_zbar - c(1.0, 0.0)).norm() < 1e-10);
        let d = wirtinger_derivative(|z: C64| Ok(C64::from(z.norm_sqr())), c(1.0, 1.0), &plan).unwrap();
        assert!((d.d_z - c(1.0, -1.0)).norm() < 1e-8);
    }

    #[test]
    fn richardson_gains_an_order_of_magnitude() {
        let f = |z: C64| Ok(z.exp() * z.conj().sin());
        let z0 = c(0.4, 0.9);
        let exact = z0.exp() * z0.conj().sin();
        let plain = DifferentiationPlan::new(1e-3).unwrap();
        let rich = plain.with_richardson(true);
        let e_plain = (wirtinger_derivative(f, z0, &plain).unwrap().d_z - exact).norm();
        let e_rich = (wirtinger_derivative(f, z0, &rich).unwrap().d_z - exact).norm();
        assert!(e_rich * 10.0 <= e_plain, "{e_plain} {e_rich}");
    }

    #[test]
    fn auto_dimension_policy() {
        assert_eq!(auto_dimension(ParameterPoint::ORIGIN, 2), 64);
        assert_eq!(auto_dimension(ParameterPoint::ORIGIN, 5), 128);
        assert_eq!(auto_dimension(ParameterPoint::from_real(2.0, 1.0), 2), 128);
        assert_eq!(auto_dimension(ParameterPoint::from_real(3.0, 1.0), 2), 256);
    }

    #[test]
    fn oracle_matches_closed_examples() {
        let space = TruncatedSpace::new(128).unwrap();
        let plan = DifferentiationPlan::default();
        let o = connection_numeric(ParameterPoint::from_real(0.3, 0.0), 2, space, &plan).unwrap();
        let want = connection_closed(ParameterPoint::from_real(0.3, 0.0), 2).unwrap();
        assert!(o.matrices.max_abs_diff(&want) < 1e-7);
        let o = connection_numeric(ParameterPoint::ORIGIN, 4, space, &plan).unwrap();
        for i in 0..4 {
            assert!(o.matrices.a_lambda[(i, i)].norm() < 1e-9);
            if i + 1 < 4 {
                let want = ((i + 1) as f64).sqrt();
                assert!((o.matrices.a_lambda[(i + 1, i)] - c(want, 0.0)).norm() < 1e-7);
            }
        }
        assert!(o.assembly_defect < 1e-8);
    }

    #[test]
    fn oracle_matches_closed_off_axis() {
        let space = TruncatedSpace::new(128).unwrap();
        let p = ParameterPoint::new(c(0.5, 0.5), c(-0.3, 0.6));
        for m in 2..=4 {
            let o = connection_numeric(p, m, space, &DifferentiationPlan::default()).unwrap();
            let want = connection_closed(p, m).unwrap();
            assert!(o.matrices.max_abs_diff(&want) < 1e-6);
        }
    }

    #[test]
    fn generalized_embeds_two_parameter_family() {
        let space = TruncatedSpace::new(128).unwrap();
        let plan = DifferentiationPlan::default();
        let p = ParameterPoint::new(c(0.2, -0.1), c(0.3, 0.25));
        let g = GeneralizedPoint::embed(p, 3).unwrap();
        let og = connection_numeric_generalized(&g, 3, space, &plan, FactorOrder::Ascending).unwrap();
        let o = connection_numeric(p, 3, space, &plan).unwrap();
        assert!(max_abs_diff(&og.a[0].matrix, &o.matrices.a_lambda) < 1e-7);
        assert!(max_abs_diff(&og.a[1].matrix, &o.matrices.a_mu) < 1e-7);
        assert!(og.assembly_defect < 1e-7);
    }

    #[test]
    fn generalized_assembly_is_anti_hermitian() {
        let space = TruncatedSpace::new(128).unwrap();
        let g = GeneralizedPoint::new(vec![c(0.1, 0.0), c(0.05, 0.0), c(0.02, 0.0)]);
        let og = connection_numeric_generalized(&g, 3, space, &DifferentiationPlan::default(), FactorOrder::Ascending)
            .unwrap();
        let x = og.contract(&[c(0.3, 0.1), c(-0.2, 0.5), c(0.7, -0.4)]).unwrap();
        assert!(crate::linalg::anti_hermitian_defect(&x) < 1e-12);
        assert!(og.assembly_defect < 1e-7);
        assert!(og.contract(&[c(1.0, 0.0)]).is_err());
    }

    #[test]
    fn global_form_at_origin() {
        let space = TruncatedSpace::new(128).unwrap();
        let r = global_form_check(ParameterPoint::ORIGIN, 2, space, &DifferentiationPlan::default()).unwrap();
        assert!(r.max_deviation < 1e-5, "{r:?}");
    }

    #[test]
    fn convergence_studies() {
        let plan = DifferentiationPlan::default();
        let r = convergence_report(ParameterPoint::new(c(0.3, 0.0), c(0.2, 0.0)), 2, &plan, &[32, 64, 128]).unwrap();
        // monotone down to the rounding floor
        assert!(r.deviations[1] <= r.deviations[0].max(1e-11));
        assert!(r.converged);
        let r = convergence_report(ParameterPoint::from_real(1.0, 1.0), 2, &plan, &[16, 32, 64, 128]).unwrap();
        assert!(r.deviations.windows(2).all(|w| w[1] < w[0]));
        let r = convergence_report(ParameterPoint::ORIGIN, 2, &plan, &[16, 32]).unwrap();
        assert!(r.deviations.iter().all(|&d| d < 1e-10), "{:?}", r.deviations);
        let r = convergence_report(ParameterPoint::from_real(2.0, 1.0), 2, &plan, &[32, 64]).unwrap();
        assert!(!r.converged);
        assert!(convergence_report(ParameterPoint::ORIGIN, 2, &plan, &[64, 32]).is_err());
        assert!(convergence_report(ParameterPoint::ORIGIN, 4, &plan, &[8, 32]).is_err());
    }
}
