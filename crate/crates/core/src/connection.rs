//! Closed-form adiabatic connection.
//!
//! With `U = D(λ)S(μ)` the Maurer–Cartan pullbacks are
//!
//! ```text
//! U⁻¹∂_λU = λ̄/2 + cosh|μ| a† + μ̄ sinh|μ|/|μ| a
//! U⁻¹∂_μU = γ (a†)² + α (a†a + 1/2) + β a²
//! γ = (1 + cosh|μ| sinh|μ|/|μ|)/4
//! α = μ̄ sinh²|μ| / (2|μ|²)
//! β = μ̄² (cosh|μ| sinh|μ|/|μ| - 1) / (4|μ|²)
//! ```
//!
//! and the connection `A = V†dV` on the vacuum frame `V = U V₀` is
//! `A_λ dλ + A_μ dμ - A_λ† dλ̄ - A_μ† dμ̄` with `A_κ = ⟨i|U⁻¹∂_κU|j⟩`, `i, j < m`.
//!
//! Every coefficient that divides by `|μ|` is rewritten as `μ̄^k` times an
//! entire function of `|μ|²`, so nothing is singular at `μ = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{ParameterPoint, Tangent};
use crate::oracle::{wirtinger_derivative, DifferentiationPlan};
use crate::path::LoopPath;
use crate::{json, CMatrix, C64};

/// Below this `|μ|` the radial functions use their Taylor series.
pub const SERIES_RADIUS: f64 = 1e-4;

/// Entire radial functions of `r = |μ|` appearing in the connection and curvature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Radial {
    pub cosh: f64,
    /// `sinh r / r`
    pub sinhc: f64,
    /// `sinh² r / r²`
    pub sinhc_sq: f64,
    /// `cosh r sinh r / r`
    pub cs: f64,
    /// `(cosh r sinh r / r - 1) / r²`
    pub cs_excess: f64,
    /// `tanh r / r`
    pub tanhc: f64,
}

impl Radial {
    pub fn new(r: f64) -> Self {
        if r < SERIES_RADIUS {
            Self::series(r)
        } else {
            let (s, c) = (r.sinh(), r.cosh());
            let cs = c * s / r;
            Self {
                cosh: c,
                sinhc: s / r,
                sinhc_sq: (s / r) * (s / r),
                cs,
                cs_excess: (cs - 1.0) / (r * r),
                tanhc: r.tanh() / r,
            }
        }
    }

    pub fn series(r: f64) -> Self {
        let r2 = r * r;
        let r4 = r2 * r2;
        Self {
            cosh: 1.0 + r2 / 2.0 + r4 / 24.0,
            sinhc: 1.0 + r2 / 6.0 + r4 / 120.0,
            sinhc_sq: 1.0 + r2 / 3.0 + 2.0 * r4 / 45.0,
            cs: 1.0 + 2.0 * r2 / 3.0 + 2.0 * r4 / 15.0,
            cs_excess: 2.0 / 3.0 + 2.0 * r2 / 15.0 + 4.0 * r4 / 315.0,
            tanhc: 1.0 - r2 / 3.0 + 2.0 * r4 / 15.0,
        }
    }
}

/// `α, β, γ` and the disentangled parameter `ζ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectionCoeffs {
    #[serde(with = "json::complex")]
    pub alpha: C64,
    #[serde(with = "json::complex")]
    pub beta: C64,
    #[serde(with = "json::complex")]
    pub gamma: C64,
    #[serde(with = "json::complex")]
    pub zeta: C64,
}

pub fn coefficients(mu: C64) -> ConnectionCoeffs {
    coefficients_from(mu, &Radial::new(mu.norm()))
}

fn coefficients_from(mu: C64, rad: &Radial) -> ConnectionCoeffs {
    let mu_bar = mu.conj();
    ConnectionCoeffs {
        alpha: mu_bar * (0.5 * rad.sinhc_sq),
        beta: mu_bar * mu_bar * (0.25 * rad.cs_excess),
        gamma: C64::new(0.25 * (1.0 + rad.cs), 0.0),
        zeta: mu * rad.tanhc,
    }
}

/// Scalar coefficients of `U⁻¹∂_λU` on `(1, a†, a)` and of `U⁻¹∂_μU` on
/// `((a†)², a†a + 1/2, a²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaurerCartan {
    #[serde(with = "json::complex")]
    pub c_id: C64,
    #[serde(with = "json::complex")]
    pub c_adag: C64,
    #[serde(with = "json::complex")]
    pub c_a: C64,
    #[serde(with = "json::complex")]
    pub c_adag2: C64,
    #[serde(with = "json::complex")]
    pub c_k3: C64,
    #[serde(with = "json::complex")]
    pub c_a2: C64,
}

pub fn maurer_cartan(p: ParameterPoint) -> MaurerCartan {
    let rad = Radial::new(p.mu.norm());
    let k = coefficients_from(p.mu, &rad);
    MaurerCartan {
        c_id: p.lambda.conj() * 0.5,
        c_adag: C64::new(rad.cosh, 0.0),
        c_a: p.mu.conj() * rad.sinhc,
        c_adag2: k.gamma,
        c_k3: k.alpha,
        c_a2: k.beta,
    }
}

impl MaurerCartan {
    /// `(U⁻¹∂_λU, U⁻¹∂_μU)` as truncated operators on `dim` levels.
    pub fn operators(&self, space: crate::TruncatedSpace) -> (CMatrix, CMatrix) {
        let d = space.dim();
        let up = space.creation_power(1);
        let down = up.transpose();
        let up2 = space.creation_power(2);
        let down2 = up2.transpose();
        let id = CMatrix::identity(d, d);
        let k3 = CMatrix::from_fn(d, d, |i, j| {
            if i == j {
                C64::new(i as f64 + 0.5, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let d_lambda = &id * self.c_id + &up * self.c_adag + &down * self.c_a;
        let d_mu = &up2 * self.c_adag2 + &k3 * self.c_k3 + &down2 * self.c_a2;
        (d_lambda, d_mu)
    }
}

/// `A_λ` and `A_μ` at a point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectionMatrices {
    #[serde(rename = "A_lambda", with = "json::matrix")]
    pub a_lambda: CMatrix,
    #[serde(rename = "A_mu", with = "json::matrix")]
    pub a_mu: CMatrix,
    pub point: ParameterPoint,
    pub m: usize,
}

impl ConnectionMatrices {
    pub fn zeros(point: ParameterPoint, m: usize) -> Self {
        Self {
            a_lambda: CMatrix::zeros(m, m),
            a_mu: CMatrix::zeros(m, m),
            point,
            m,
        }
    }

    pub fn max_abs_diff(&self, other: &ConnectionMatrices) -> f64 {
        crate::linalg::max_abs_diff(&self.a_lambda, &other.a_lambda)
            .max(crate::linalg::max_abs_diff(&self.a_mu, &other.a_mu))
    }
}

/// Closed-form connection matrices for degeneracy `m`.
pub fn connection_closed(p: ParameterPoint, m: usize) -> Result<ConnectionMatrices> {
    if m == 0 {
        return Err(Error::InvalidDegeneracy { m, dim: 0 });
    }
    let mc = maurer_cartan(p.check_finite()?);
    let mut out = ConnectionMatrices::zeros(p, m);
    for i in 0..m {
        let n = i as f64;
        out.a_lambda[(i, i)] = mc.c_id;
        out.a_mu[(i, i)] = mc.c_k3 * (0.5 + n);
        if i + 1 < m {
            let s = (n + 1.0).sqrt();
            out.a_lambda[(i + 1, i)] = mc.c_adag * s;
            out.a_lambda[(i, i + 1)] = mc.c_a * s;
        }
        if i + 2 < m {
            let s = ((n + 1.0) * (n + 2.0)).sqrt();
            out.a_mu[(i + 2, i)] = mc.c_adag2 * s;
            out.a_mu[(i, i + 2)] = mc.c_a2 * s;
        }
    }
    Ok(out)
}

/// Source of connection matrices over parameter space.
pub trait ConnectionField {
    fn degeneracy(&self) -> usize;
    fn connection(&self, p: ParameterPoint) -> Result<ConnectionMatrices>;
}

/// The closed-form connection.
#[derive(Clone, Copy, Debug)]
pub struct ClosedForm {
    pub m: usize,
}

impl ConnectionField for ClosedForm {
    fn degeneracy(&self) -> usize {
        self.m
    }

    fn connection(&self, p: ParameterPoint) -> Result<ConnectionMatrices> {
        connection_closed(p, self.m)
    }
}

/// The connection one-form evaluated on a real tangent vector; anti-hermitian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneFormValue {
    #[serde(with = "json::matrix")]
    pub matrix: CMatrix,
}

impl OneFormValue {
    pub fn anti_hermitian_defect(&self) -> f64 {
        crate::linalg::anti_hermitian_defect(&self.matrix)
    }
}

/// `A_λ dλ + A_μ dμ - A_λ† dλ̄ - A_μ† dμ̄` on the tangent `(dλ, dμ)`.
pub fn contract_one_form(cm: &ConnectionMatrices, tangent: Tangent) -> OneFormValue {
    let (dl, dm) = (tangent.d_lambda, tangent.d_mu);
    let matrix = &cm.a_lambda * dl + &cm.a_mu * dm - cm.a_lambda.adjoint() * dl.conj() - cm.a_mu.adjoint() * dm.conj();
    OneFormValue { matrix }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeCheck {
    pub name: String,
    #[serde(with = "json::complex")]
    pub numeric: C64,
    #[serde(with = "json::complex")]
    pub exact: C64,
    pub deviation: f64,
}

/// Central-difference check of the three radial derivative identities used to
/// differentiate the disentangled squeeze.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeIdentityReport {
    #[serde(with = "json::complex")]
    pub z: C64,
    pub h: f64,
    pub checks: Vec<DerivativeCheck>,
    pub max_deviation: f64,
}

/// `∂_z` of `z tanh|z|/|z|`, `log(1 - tanh²|z|)` and `z̄ tanh|z|/|z|` against their
/// closed forms.
pub fn derivative_identity_report(z: C64, h: f64) -> Result<DerivativeIdentityReport> {
    let plan = DifferentiationPlan::new(h)?;
    let r = z.norm();
    if r < 10.0 * h {
        return Err(Error::NearSingularity { modulus: r, step: h });
    }
    let t = r.tanh();
    let sech2 = 1.0 - t * t;
    let z_bar = z.conj();
    type Scalar = fn(C64) -> C64;
    let cases: [(&str, Scalar, C64); 3] = [
        (
            "d/dz [z tanh|z|/|z|]",
            |w| w * (w.norm().tanh() / w.norm()),
            C64::new(0.5 * (sech2 + t / r), 0.0),
        ),
        (
            "d/dz log(1 - tanh^2|z|)",
            |w| C64::new((1.0 - w.norm().tanh().powi(2)).ln(), 0.0),
            -z_bar * (t / r),
        ),
        (
            "d/dz [conj(z) tanh|z|/|z|]",
            |w| w.conj() * (w.norm().tanh() / w.norm()),
            z_bar * z_bar / (2.0 * r * r) * (sech2 - t / r),
        ),
    ];
    let mut checks = Vec::with_capacity(3);
    for (name, f, exact) in cases {
        let d = wirtinger_derivative(|w| Ok(f(w)), z, &plan)?;
        checks.push(DerivativeCheck {
            name: name.to_string(),
            numeric: d.d_z,
            exact,
            deviation: (d.d_z - exact).norm(),
        });
    }
    let max_deviation = checks.iter().map(|c| c.deviation).fold(0.0, f64::max);
    Ok(DerivativeIdentityReport {
        z,
        h,
        checks,
        max_deviation,
    })
}

/// Abelian phases `Im ∮ A_jj` of the diagonal of the closed-form connection,
/// integrated by the composite trapezoid rule on each segment.
pub fn berry_phase_diagonal(path: &LoopPath, m: usize) -> Result<Vec<f64>> {
    path.require_closed()?;
    let mut total = vec![C64::new(0.0, 0.0); m];
    for (segment, n) in path.segments.iter().zip(path.intervals_per_segment()) {
        let dt = 1.0 / n as f64;
        for k in 0..=n {
            let t = k as f64 * dt;
            let weight = if k == 0 || k == n { 0.5 * dt } else { dt };
            let cm = connection_closed(segment.point(t), m)?;
            let value = contract_one_form(&cm, segment.velocity(t));
            for (j, acc) in total.iter_mut().enumerate() {
                *acc += value.matrix[(j, j)] * weight;
            }
        }
    }
    Ok(total.into_iter().map(|z| z.im).collect())
}
