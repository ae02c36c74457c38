//! The six subcommands. Each returns a deterministic payload; the caller adds
//! metadata and writes it.

use std::f64::consts::{FRAC_PI_4, PI};

use berry_core::connection::{
    berry_phase_diagonal, connection_closed, derivative_identity_report, ClosedForm, ConnectionField,
};
use berry_core::curvature::{
    basis_matrices, chern_trace_forms, compare_f_squared, curvature_closed, curvature_span, f_squared,
    f_squared_from_wedge, Component, CurvatureForm, FSquaredComparison,
};
use berry_core::family::RealCoord;
use berry_core::fock::{bch_identity_report, commutator_report};
use berry_core::holonomy::{holonomy_algebra, parallel_transport, HolonomyResult};
use berry_core::linalg::{hermitian_eigen, max_abs_diff, unitarity_defect, unitary_log};
use berry_core::oracle::{curvature_numeric_with, NumericField, OracleConnection, OracleCurvature};
use berry_core::path::{LoopPath, RealPlane, Segment};
use berry_core::{json, CMatrix, ParameterPoint, TruncatedSpace, C64};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{default_centers, DimSpec, GridSpec, RunConfig, Source};
use crate::output::{to_value, Outcome, Table};
use crate::{CliError, EXIT_BREACH};

/// Truncation used by the Fock-space identity checks.
pub const IDENTITY_DIM: usize = 64;
/// Number of points of the three-way `F²` comparison.
pub const F_SQUARED_POINTS: usize = 5;

/// Numeric fields keyed by truncation: one shared field for a fixed `D`, one
/// per point for `auto`.
enum Fields {
    Shared(NumericField),
    PerPoint,
}

impl Fields {
    fn new(cfg: &RunConfig) -> Result<Self, CliError> {
        Ok(match cfg.dim {
            DimSpec::Fixed(d) => Fields::Shared(NumericField::new(TruncatedSpace::new(d)?, cfg.m, cfg.plan())?),
            DimSpec::Auto => Fields::PerPoint,
        })
    }

    fn with<T>(
        &self,
        cfg: &RunConfig,
        p: ParameterPoint,
        f: impl FnOnce(&NumericField) -> berry_core::Result<T>,
    ) -> Result<T, CliError> {
        match self {
            Fields::Shared(field) => Ok(f(field)?),
            Fields::PerPoint => {
                let field = NumericField::new(TruncatedSpace::new(cfg.dim_for(p))?, cfg.m, cfg.plan())?;
                Ok(f(&field)?)
            }
        }
    }
}

fn sweep<T: Send>(
    points: &[ParameterPoint],
    f: impl Fn(ParameterPoint) -> Result<T, CliError> + Sync,
) -> Result<Vec<T>, CliError> {
    points.par_iter().map(|&p| f(p)).collect()
}

fn check_degeneracy(cfg: &RunConfig) -> Result<(), CliError> {
    connection_closed(ParameterPoint::ORIGIN, cfg.m)?;
    Ok(())
}

#[derive(Serialize)]
struct GridPayload<'a, T> {
    command: &'static str,
    config: &'a RunConfig,
    points: Vec<T>,
}

#[derive(Serialize)]
#[serde(untagged)]
enum ConnectionEntry {
    Closed(berry_core::connection::ConnectionMatrices),
    Numeric(OracleConnection),
}

impl ConnectionEntry {
    fn matrices(&self) -> &berry_core::connection::ConnectionMatrices {
        match self {
            ConnectionEntry::Closed(c) => c,
            ConnectionEntry::Numeric(o) => &o.matrices,
        }
    }
}

pub fn cmd_connection(cfg: &RunConfig) -> Result<Outcome, CliError> {
    check_degeneracy(cfg)?;
    let points = cfg.points()?;
    let entries = match cfg.source {
        Source::Closed => sweep(&points, |p| Ok(ConnectionEntry::Closed(connection_closed(p, cfg.m)?)))?,
        Source::Numeric => {
            let fields = Fields::new(cfg)?;
            sweep(&points, |p| {
                fields.with(cfg, p, |f| f.oracle(p)).map(ConnectionEntry::Numeric)
            })?
        }
    };
    let mut headers = Table::point_headers();
    headers.extend(Table::matrix_headers("A_lambda", cfg.m));
    headers.extend(Table::matrix_headers("A_mu", cfg.m));
    let rows = entries
        .iter()
        .map(|e| {
            let cm = e.matrices();
            let mut row = Table::point_cells(cm.point);
            row.extend(Table::matrix_cells(&cm.a_lambda));
            row.extend(Table::matrix_cells(&cm.a_mu));
            row
        })
        .collect();
    let payload = GridPayload {
        command: "connection",
        config: cfg,
        points: entries,
    };
    Ok(Outcome::new(payload)?.with_table(Table { headers, rows }))
}

#[derive(Serialize)]
#[serde(untagged)]
enum CurvatureEntry {
    Closed(CurvatureForm),
    Numeric(OracleCurvature),
}

impl CurvatureEntry {
    fn form(&self) -> &CurvatureForm {
        match self {
            CurvatureEntry::Closed(f) => f,
            CurvatureEntry::Numeric(o) => &o.form,
        }
    }
}

const CURVATURE_NAMES: [&str; 6] = [
    "C_lambda_mu",
    "C_lambda_lambdabar",
    "C_lambda_mubar",
    "C_mu_lambdabar",
    "C_mu_mubar",
    "C_lambdabar_mubar",
];

fn curvature_entries(cfg: &RunConfig, points: &[ParameterPoint]) -> Result<Vec<CurvatureEntry>, CliError> {
    match cfg.source {
        Source::Closed => sweep(points, |p| Ok(CurvatureEntry::Closed(curvature_closed(p, cfg.m)?))),
        Source::Numeric => {
            let fields = Fields::new(cfg)?;
            sweep(points, |p| {
                fields
                    .with(cfg, p, |f| curvature_numeric_with(f, p))
                    .map(CurvatureEntry::Numeric)
            })
        }
    }
}

pub fn cmd_curvature(cfg: &RunConfig) -> Result<Outcome, CliError> {
    check_degeneracy(cfg)?;
    let points = cfg.points()?;
    let entries = curvature_entries(cfg, &points)?;
    let mut headers = Table::point_headers();
    for name in CURVATURE_NAMES {
        headers.extend(Table::matrix_headers(name, cfg.m));
    }
    let rows = entries
        .iter()
        .map(|e| {
            let f = e.form();
            let mut row = Table::point_cells(f.point);
            for c in f.components() {
                row.extend(Table::matrix_cells(c));
            }
            row
        })
        .collect();
    let payload = GridPayload {
        command: "curvature",
        config: cfg,
        points: entries,
    };
    Ok(Outcome::new(payload)?.with_table(Table { headers, rows }))
}

/// One block of the verification report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Section {
    pub name: &'static str,
    pub pass: bool,
    pub tolerance: f64,
    pub max_deviation: f64,
    pub details: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport<'a> {
    pub command: &'static str,
    pub config: &'a RunConfig,
    pub pass: bool,
    pub sections: Vec<Section>,
}

fn worst<'a>(items: impl Iterator<Item = (f64, &'a ParameterPoint)>) -> (f64, Option<ParameterPoint>) {
    items.fold((0.0, None), |(d, p), (x, q)| {
        if x > d || p.is_none() {
            (x.max(d), Some(*q))
        } else {
            (d, p)
        }
    })
}

/// `k(n-1)/(count-1)` for `k < count`: evenly spread indices including both ends.
fn spread(n: usize, count: usize) -> Vec<usize> {
    if n <= count {
        return (0..n).collect();
    }
    (0..count)
        .map(|k| (k * (n - 1) + (count - 1) / 2) / (count - 1))
        .collect()
}

fn bch_points() -> Vec<ParameterPoint> {
    let values = [
        C64::new(0.0, 0.0),
        C64::new(0.25, 0.0),
        C64::from_polar(0.5, FRAC_PI_4),
        C64::new(0.5, 0.0),
    ];
    let mut out = Vec::with_capacity(16);
    for &lambda in &values {
        for &mu in &values {
            out.push(ParameterPoint::new(lambda, mu));
        }
    }
    out
}

fn derivative_points() -> [C64; 5] {
    [
        C64::new(0.25, 0.0),
        C64::from_polar(0.5, FRAC_PI_4),
        C64::new(0.0, 0.75),
        C64::new(1.0, 0.0),
        C64::new(-0.6, 0.3),
    ]
}

struct PointCheck {
    point: ParameterPoint,
    connection_dev: f64,
    connection_estimate: f64,
    curvature_devs: Vec<(Component, f64)>,
    lambda_lambda_bar_numeric: f64,
    lambda_lambda_bar_closed: f64,
    closed_hermiticity: f64,
    oracle: CurvatureForm,
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    check_degeneracy(cfg)?;
    let tol = &cfg.tolerances;
    let points = cfg.points()?;
    let minus_mk = if cfg.m >= 2 {
        &basis_matrices(cfg.m)?.k * C64::from(-(cfg.m as f64))
    } else {
        CMatrix::from_element(1, 1, C64::from(-1.0))
    };
    let fields = Fields::new(cfg)?;
    let checks = sweep(&points, |p| {
        fields.with(cfg, p, |field| {
            let closed_a = connection_closed(p, cfg.m)?;
            let oracle_a = field.oracle(p)?;
            let closed_f = curvature_closed(p, cfg.m)?;
            let oracle_f = curvature_numeric_with(field, p)?.form;
            Ok(PointCheck {
                point: p,
                connection_dev: closed_a.max_abs_diff(&oracle_a.matrices),
                connection_estimate: oracle_a.estimated_error,
                curvature_devs: closed_f.component_deviations(&oracle_f),
                lambda_lambda_bar_numeric: max_abs_diff(&oracle_f.lambda_lambda_bar, &minus_mk),
                lambda_lambda_bar_closed: max_abs_diff(&closed_f.lambda_lambda_bar, &minus_mk),
                closed_hermiticity: closed_f.hermiticity_defect(),
                oracle: oracle_f,
            })
        })
    })?;

    let mut sections = Vec::new();

    let (dev, at) = worst(checks.iter().map(|c| (c.connection_dev, &c.point)));
    let estimate = checks.iter().map(|c| c.connection_estimate).fold(0.0, f64::max);
    sections.push(Section {
        name: "connection",
        pass: dev < tol.connection,
        tolerance: tol.connection,
        max_deviation: dev,
        details: json!({ "points": points.len(), "worst_point": at, "max_estimated_error": estimate }),
    });

    let (dev, at) = worst(
        checks
            .iter()
            .map(|c| (c.curvature_devs.iter().map(|x| x.1).fold(0.0, f64::max), &c.point)),
    );
    let per_component: serde_json::Map<String, Value> = Component::ALL
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let d = checks.iter().map(|pc| pc.curvature_devs[k].1).fold(0.0, f64::max);
            (c.label().to_string(), json!(d))
        })
        .collect();
    let llb_numeric = checks.iter().map(|c| c.lambda_lambda_bar_numeric).fold(0.0, f64::max);
    let llb_closed = checks.iter().map(|c| c.lambda_lambda_bar_closed).fold(0.0, f64::max);
    let hermiticity = checks.iter().map(|c| c.closed_hermiticity).fold(0.0, f64::max);
    sections.push(Section {
        name: "curvature",
        pass: dev < tol.curvature && llb_closed == 0.0 && llb_numeric < tol.curvature && hermiticity <= tol.hermiticity,
        tolerance: tol.curvature,
        max_deviation: dev,
        details: json!({
            "points": points.len(),
            "worst_point": at,
            "per_component": per_component,
            "lambda_lambdabar_minus_mK": { "closed": llb_closed, "numeric": llb_numeric },
            "closed_hermiticity_defect": hermiticity,
            "hermiticity_tolerance": tol.hermiticity,
        }),
    });

    let comparisons = spread(checks.len(), F_SQUARED_POINTS)
        .into_iter()
        .map(|k| compare_f_squared(checks[k].point, cfg.m, Some(&checks[k].oracle), tol.f_squared))
        .collect::<berry_core::Result<Vec<FSquaredComparison>>>()?;
    let dev = comparisons.iter().filter_map(|c| c.wedge_vs_oracle).fold(0.0, f64::max);
    let formula_dev = comparisons.iter().map(|c| c.formula_vs_wedge).fold(0.0, f64::max);
    sections.push(Section {
        name: "f_squared",
        pass: comparisons.iter().all(|c| c.wedges_agree),
        tolerance: tol.f_squared,
        max_deviation: dev,
        details: json!({
            "formula_agrees": comparisons.iter().all(|c| c.agree),
            "formula_vs_wedge": formula_dev,
            "comparisons": comparisons,
        }),
    });

    let space = TruncatedSpace::new(IDENTITY_DIM)?;
    let bch = bch_points()
        .par_iter()
        .map(|p| bch_identity_report(p.lambda, p.mu, space).map(|r| (*p, r)))
        .collect::<berry_core::Result<Vec<_>>>()?;
    let (dev, at) = worst(bch.iter().map(|(p, r)| (r.max_interior_dev(), p)));
    sections.push(Section {
        name: "bch",
        pass: dev < tol.bch,
        tolerance: tol.bch,
        max_deviation: dev,
        details: json!({ "D": IDENTITY_DIM, "points": bch.len(), "worst_point": at, "worst": bch.iter().find(|(p, _)| Some(*p) == at).map(|x| &x.1) }),
    });

    let derivative = derivative_points()
        .iter()
        .map(|&z| derivative_identity_report(z, cfg.h))
        .collect::<berry_core::Result<Vec<_>>>()?;
    let dev = derivative.iter().map(|r| r.max_deviation).fold(0.0, f64::max);
    sections.push(Section {
        name: "derivative_identities",
        pass: dev < tol.derivative,
        tolerance: tol.derivative,
        max_deviation: dev,
        details: json!({ "h": cfg.h, "reports": derivative }),
    });

    let commutators = commutator_report(space)?;
    sections.push(Section {
        name: "commutators",
        pass: commutators.max_dev() < tol.commutator,
        tolerance: tol.commutator,
        max_deviation: commutators.max_dev(),
        details: to_value(&commutators)?,
    });

    let pass = sections.iter().all(|s| s.pass);
    let report = VerifyReport {
        command: "verify",
        config: cfg,
        pass,
        sections,
    };
    let mut outcome = Outcome::new(report)?;
    if !pass {
        outcome.exit_code = EXIT_BREACH;
    }
    Ok(outcome)
}

fn transport_field(cfg: &RunConfig, base: ParameterPoint) -> Result<Box<dyn ConnectionField + Sync>, CliError> {
    Ok(match cfg.source {
        Source::Closed => Box::new(ClosedForm { m: cfg.m }),
        Source::Numeric => Box::new(NumericField::new(
            TruncatedSpace::new(cfg.dim_for(base))?,
            cfg.m,
            cfg.plan(),
        )?),
    })
}

fn base_point(cfg: &RunConfig) -> ParameterPoint {
    match &cfg.grid {
        GridSpec::Point(p) => *p,
        _ => ParameterPoint::ORIGIN,
    }
}

pub fn holonomy_loop(cfg: &RunConfig) -> Result<LoopPath, CliError> {
    let segments = match cfg.loop_segments()? {
        Some(s) => s,
        None => vec![Segment::Circle {
            center: base_point(cfg),
            radius: cfg.radius,
            plane: RealPlane(RealCoord::LambdaRe, RealCoord::LambdaIm),
            turns: 1.0,
            phase: 0.0,
        }],
    };
    Ok(LoopPath::new(segments, cfg.samples)?)
}

#[derive(Serialize)]
struct HolonomyPayload<'a> {
    command: &'static str,
    config: &'a RunConfig,
    segments: &'a [Segment],
    #[serde(flatten)]
    result: HolonomyResult,
    unitarity_defect: f64,
    /// Eigenvalues of `-i log W`, ascending.
    eigenphases: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    berry_phases: Option<Vec<f64>>,
}

/// Eigenphases `θ` of a unitary `W = Σ e^{iθ}|v⟩⟨v|`.
pub fn eigenphases(w: &CMatrix) -> Vec<f64> {
    let h = unitary_log(w) * C64::new(0.0, -1.0);
    let h = (&h + h.adjoint()) * C64::from(0.5);
    let (mut values, _) = hermitian_eigen(&h);
    values.sort_by(f64::total_cmp);
    values
}

pub fn cmd_holonomy(cfg: &RunConfig) -> Result<Outcome, CliError> {
    check_degeneracy(cfg)?;
    let path = holonomy_loop(cfg)?;
    let field = transport_field(cfg, path.start())?;
    let result = parallel_transport(&path, field.as_ref())?;
    let berry_phases = match cfg.source {
        Source::Closed => Some(berry_phase_diagonal(&path, cfg.m)?),
        Source::Numeric => None,
    };
    let payload = HolonomyPayload {
        command: "holonomy",
        config: cfg,
        segments: &path.segments,
        unitarity_defect: unitarity_defect(&result.w),
        eigenphases: eigenphases(&result.w),
        result,
        berry_phases,
    };
    Outcome::new(payload)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IrreducibilityReport {
    pub m: usize,
    pub source: Source,
    pub centers: Vec<ParameterPoint>,
    pub algebra_dim: usize,
    pub curvature_span_dim: usize,
    /// `dim u(m) = m²`.
    pub max_dim: usize,
    pub irreducible: bool,
    /// Both methods give the same dimension.
    pub consistent: bool,
    pub holonomy_history: Vec<usize>,
    pub curvature_history: Vec<usize>,
    pub generators: usize,
}

pub fn irreducibility(cfg: &RunConfig, centers: &[ParameterPoint]) -> Result<IrreducibilityReport, CliError> {
    check_degeneracy(cfg)?;
    if centers.len() < 2 {
        return Err(CliError::Config("irreducibility needs at least two centers".into()));
    }
    let field = transport_field(cfg, centers[0])?;
    let algebra = holonomy_algebra(field.as_ref(), centers, cfg.budget)?;
    let span = curvature_span(centers, cfg.m, cfg.budget)?;
    let max_dim = cfg.m * cfg.m;
    Ok(IrreducibilityReport {
        m: cfg.m,
        source: cfg.source,
        centers: centers.to_vec(),
        algebra_dim: algebra.dim,
        curvature_span_dim: span.dim,
        max_dim,
        irreducible: algebra.dim == max_dim,
        consistent: algebra.dim == span.dim,
        holonomy_history: algebra.closure.history,
        curvature_history: span.history,
        generators: algebra.generators,
    })
}

pub fn cmd_irreducibility(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let centers = if cfg.grid_explicit {
        cfg.points()?
    } else {
        default_centers()
    };
    let report = irreducibility(cfg, &centers)?;
    Outcome::new(json!({ "command": "irreducibility", "config": cfg, "result": report }))
}

pub const CHERN_NORMALIZATION: &str =
    "c1 = (i/2pi) tr F per two-form component; ch2 = -tr(F^F)/(8 pi^2) on dlambda^dmu^dlambdabar^dmubar";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChernEntry {
    pub point: ParameterPoint,
    #[serde(with = "json::complex_vec")]
    pub tr_f: Vec<C64>,
    #[serde(with = "json::complex")]
    pub tr_f2: C64,
    #[serde(with = "json::complex_vec")]
    pub c1: Vec<C64>,
    #[serde(with = "json::complex")]
    pub ch2: C64,
}

pub fn cmd_chern(cfg: &RunConfig) -> Result<Outcome, CliError> {
    check_degeneracy(cfg)?;
    let points = cfg.points()?;
    let forms = curvature_entries(cfg, &points)?;
    let entries = forms
        .iter()
        .map(|e| {
            let f = e.form();
            let f2 = match e {
                CurvatureEntry::Closed(_) => f_squared(f.point, cfg.m)?,
                CurvatureEntry::Numeric(_) => f_squared_from_wedge(f),
            };
            let t = chern_trace_forms(f, &f2)?;
            Ok(ChernEntry {
                point: f.point,
                c1: t.tr_f.iter().map(|z| z * C64::new(0.0, 1.0 / (2.0 * PI))).collect(),
                ch2: -t.tr_f2 / (8.0 * PI * PI),
                tr_f: t.tr_f,
                tr_f2: t.tr_f2,
            })
        })
        .collect::<berry_core::Result<Vec<_>>>()?;
    let mut headers = Table::point_headers();
    for prefix in ["tr_F", "c1"] {
        for c in Component::ALL {
            headers.push(format!("{prefix}.{}.re", c.label()));
            headers.push(format!("{prefix}.{}.im", c.label()));
        }
    }
    headers.extend(["tr_F2.re", "tr_F2.im", "ch2.re", "ch2.im"].map(String::from));
    let rows = entries
        .iter()
        .map(|e| {
            let mut row = Table::point_cells(e.point);
            for z in e.tr_f.iter().chain(&e.c1).chain([&e.tr_f2, &e.ch2]) {
                row.extend([z.re, z.im]);
            }
            row
        })
        .collect();
    let payload = json!({
        "command": "chern",
        "config": cfg,
        "normalization": CHERN_NORMALIZATION,
        "component_order": Component::ALL.map(|c| c.label()),
        "points": entries,
    });
    Ok(Outcome::new(payload)?.with_table(Table { headers, rows }))
}
