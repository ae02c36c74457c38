//! Parallel transport `W' = -A(γ̇) W`, small-loop holonomies and the
//! holonomy Lie algebra.

use serde::{Deserialize, Serialize};

use crate::connection::{connection_closed, contract_one_form, ClosedForm, ConnectionField};
use crate::curvature::curvature_closed;
use crate::error::{Error, Result};
use crate::family::ParameterPoint;
use crate::lie::{lie_closure, LieClosure};
use crate::linalg::{max_abs, polar_unitary, unitarity_defect, unitary_log};
use crate::path::{LoopPath, RealPlane, Segment};
use crate::{json, CMatrix, C64};

/// Minimum transport samples per unit path length.
pub const SAMPLES_PER_UNIT_LENGTH: f64 = 64.0;
pub const UNITARITY_TOL: f64 = 1e-8;
/// Relative singular-value threshold for holonomy-algebra rank decisions.
pub const HOLONOMY_RANK_TOL: f64 = 1e-6;
pub const SMALL_LOOP_SAMPLES: usize = 256;
/// Side lengths used to extrapolate small-loop generators.
pub const GENERATOR_EPS: [f64; 3] = [4e-3, 2e-3, 1e-3];
pub const MIN_EPS: f64 = 1e-4;
pub const MAX_EPS: f64 = 1e-2;

fn generator<F: ConnectionField + ?Sized>(field: &F, segment: &Segment, t: f64) -> Result<CMatrix> {
    let cm = field.connection(segment.point(t))?;
    Ok(contract_one_form(&cm, segment.velocity(t)).matrix)
}

/// Path-ordered transport along any path, by classical RK4 on each segment
/// and a final polar re-unitarization.
pub fn transport<F: ConnectionField + ?Sized>(path: &LoopPath, field: &F) -> Result<CMatrix> {
    let m = field.degeneracy();
    let mut w = CMatrix::identity(m, m);
    for (segment, n) in path.segments.iter().zip(path.intervals_per_segment()) {
        let dt = 1.0 / n as f64;
        let mut a0 = generator(field, segment, 0.0)?;
        for k in 0..n {
            let t = k as f64 * dt;
            let ah = generator(field, segment, t + 0.5 * dt)?;
            let a1 = generator(field, segment, t + dt)?;
            let k1 = -(&a0 * &w);
            let k2 = -(&ah * (&w + &k1 * C64::from(0.5 * dt)));
            let k3 = -(&ah * (&w + &k2 * C64::from(0.5 * dt)));
            let k4 = -(&a1 * (&w + &k3 * C64::from(dt)));
            w += (k1 + (k2 + k3) * C64::from(2.0) + k4) * C64::from(dt / 6.0);
            a0 = a1;
        }
    }
    Ok(polar_unitary(&w))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolonomyResult {
    #[serde(with = "json::matrix")]
    pub w: CMatrix,
    pub path_length: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub algebra_dim: Option<usize>,
}

/// Holonomy of a closed loop.
pub fn parallel_transport<F: ConnectionField + ?Sized>(path: &LoopPath, field: &F) -> Result<HolonomyResult> {
    path.require_closed()?;
    let path_length = path.length();
    let needed = (SAMPLES_PER_UNIT_LENGTH * path_length).ceil() as usize;
    if path.samples < needed {
        return Err(Error::NotEnoughSamples("transport", needed));
    }
    let w = transport(path, field)?;
    if unitarity_defect(&w) > UNITARITY_TOL {
        return Err(Error::NotAntiHermitian {
            deviation: unitarity_defect(&w),
        });
    }
    Ok(HolonomyResult {
        w,
        path_length,
        algebra_dim: None,
    })
}

/// Holonomy of the closed-form connection.
pub fn parallel_transport_closed(path: &LoopPath, m: usize) -> Result<HolonomyResult> {
    connection_closed(ParameterPoint::ORIGIN, m)?;
    parallel_transport(path, &ClosedForm { m })
}

/// `log W` around the positively oriented `eps`-square anchored at `corner`.
pub fn small_loop_log<F: ConnectionField + ?Sized>(
    field: &F,
    corner: ParameterPoint,
    plane: RealPlane,
    eps: f64,
) -> Result<CMatrix> {
    let path = LoopPath::square(corner, plane, eps, SMALL_LOOP_SAMPLES)?;
    Ok(unitary_log(&parallel_transport(&path, field)?.w))
}

/// `lim_{ε→0} log W(ε)/ε²` by two Richardson levels over [`GENERATOR_EPS`].
pub fn small_loop_generator<F: ConnectionField + ?Sized>(
    field: &F,
    corner: ParameterPoint,
    plane: RealPlane,
) -> Result<CMatrix> {
    let g = GENERATOR_EPS
        .iter()
        .map(|&e| small_loop_log(field, corner, plane, e).map(|x| x / C64::from(e * e)))
        .collect::<Result<Vec<_>>>()?;
    let r1a = &g[1] * C64::from(2.0) - &g[0];
    let r1b = &g[2] * C64::from(2.0) - &g[1];
    Ok((r1b * C64::from(4.0) - r1a) / C64::from(3.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallLoopReport {
    pub center: ParameterPoint,
    pub plane: RealPlane,
    pub m: usize,
    pub eps: f64,
    /// `log W / ε²` at `eps`.
    #[serde(with = "json::matrix")]
    pub log_w_over_area: CMatrix,
    /// `F(∂_first, ∂_second)` from the closed-form curvature.
    #[serde(with = "json::matrix")]
    pub curvature: CMatrix,
    /// `max |log W + F ε²|` at `eps` and `eps/2`.
    pub residual: f64,
    pub residual_half: f64,
    pub ratio: f64,
}

/// `log W = -F(∂_first, ∂_second) ε² + O(ε³)` for the square anchored at `center`.
pub fn small_loop_check<F: ConnectionField + ?Sized>(
    field: &F,
    center: ParameterPoint,
    plane: RealPlane,
    eps: f64,
) -> Result<SmallLoopReport> {
    if !(MIN_EPS..=MAX_EPS).contains(&eps) {
        return Err(Error::InvalidArgument(format!(
            "eps must lie in [{MIN_EPS}, {MAX_EPS}], got {eps}"
        )));
    }
    let m = field.degeneracy();
    let curvature = curvature_closed(center, m)?.plane_value(plane);
    let residual_at = |e: f64| -> Result<(CMatrix, f64)> {
        let log_w = small_loop_log(field, center, plane, e)?;
        let r = max_abs(&(&log_w + &curvature * C64::from(e * e)));
        Ok((log_w, r))
    };
    let (log_w, residual) = residual_at(eps)?;
    let (_, residual_half) = residual_at(eps / 2.0)?;
    Ok(SmallLoopReport {
        center,
        plane,
        m,
        eps,
        log_w_over_area: log_w / C64::from(eps * eps),
        curvature,
        residual,
        residual_half,
        ratio: residual / residual_half,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolonomyAlgebra {
    pub m: usize,
    pub dim: usize,
    pub centers: usize,
    pub generators: usize,
    pub closure: LieClosure,
}

/// Lie algebra generated by small-loop holonomies in all six coordinate planes
/// at each center, conjugated back to `centers[0]` along straight lines.
pub fn holonomy_algebra<F: ConnectionField + ?Sized>(
    field: &F,
    centers: &[ParameterPoint],
    budget: usize,
) -> Result<HolonomyAlgebra> {
    if centers.len() < 2 {
        return Err(Error::NotEnoughSamples("centers", 2));
    }
    let base = centers[0];
    let mut generators = Vec::with_capacity(6 * centers.len());
    for &c in centers {
        let to_center = if c == base {
            None
        } else {
            let len = base.distance(&c);
            let samples = ((4.0 * SAMPLES_PER_UNIT_LENGTH * len).ceil() as usize).max(64);
            Some(transport(&LoopPath::line(base, c, samples)?, field)?)
        };
        for plane in RealPlane::ALL {
            let x = small_loop_generator(field, c, plane)?;
            generators.push(match &to_center {
                None => x,
                Some(w) => w.adjoint() * x * w,
            });
        }
    }
    let closure = lie_closure(&generators, HOLONOMY_RANK_TOL, budget)?;
    Ok(HolonomyAlgebra {
        m: field.degeneracy(),
        dim: closure.dim,
        centers: centers.len(),
        generators: generators.len(),
        closure,
    })
}

pub fn holonomy_algebra_dimension(centers: &[ParameterPoint], m: usize, budget: usize) -> Result<usize> {
    connection_closed(ParameterPoint::ORIGIN, m)?;
    holonomy_algebra(&ClosedForm { m }, centers, budget).map(|a| a.dim)
}
