//! Piecewise-smooth paths in `(λ, μ)` parameter space.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{ParameterPoint, RealCoord, Tangent};

/// Endpoint tolerance for contiguity and closedness.
pub const CLOSURE_TOL: f64 = 1e-12;

/// An oriented coordinate 2-plane `(first, second)` of `R⁴`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RealPlane(pub RealCoord, pub RealCoord);

impl RealPlane {
    /// The six coordinate planes with `first < second`.
    pub const ALL: [RealPlane; 6] = [
        RealPlane(RealCoord::LambdaRe, RealCoord::LambdaIm),
        RealPlane(RealCoord::LambdaRe, RealCoord::MuRe),
        RealPlane(RealCoord::LambdaRe, RealCoord::MuIm),
        RealPlane(RealCoord::LambdaIm, RealCoord::MuRe),
        RealPlane(RealCoord::LambdaIm, RealCoord::MuIm),
        RealPlane(RealCoord::MuRe, RealCoord::MuIm),
    ];

    pub fn label(&self) -> String {
        let name = |c: RealCoord| match c {
            RealCoord::LambdaRe => "Re(lambda)",
            RealCoord::LambdaIm => "Im(lambda)",
            RealCoord::MuRe => "Re(mu)",
            RealCoord::MuIm => "Im(mu)",
        };
        format!("{}^{}", name(self.0), name(self.1))
    }
}

fn default_turns() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Segment {
    Line {
        from: ParameterPoint,
        to: ParameterPoint,
    },
    /// `center + radius (cos φ, sin φ)` in `plane`, `φ = phase + 2π turns t`.
    Circle {
        center: ParameterPoint,
        radius: f64,
        plane: RealPlane,
        #[serde(default = "default_turns")]
        turns: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl Segment {
    pub fn point(&self, t: f64) -> ParameterPoint {
        match self {
            Segment::Line { from, to } => *from + (*to - *from) * t,
            Segment::Circle {
                center,
                radius,
                plane,
                turns,
                phase,
            } => {
                let angle = phase + TAU * turns * t;
                *center
                    + Tangent::along(plane.0) * (radius * angle.cos())
                    + Tangent::along(plane.1) * (radius * angle.sin())
            }
        }
    }

    /// `dγ/dt`.
    pub fn velocity(&self, t: f64) -> Tangent {
        match self {
            Segment::Line { from, to } => *to - *from,
            Segment::Circle {
                radius,
                plane,
                turns,
                phase,
                ..
            } => {
                let angle = phase + TAU * turns * t;
                let speed = radius * TAU * turns;
                Tangent::along(plane.0) * (-speed * angle.sin()) + Tangent::along(plane.1) * (speed * angle.cos())
            }
        }
    }

    pub fn length(&self) -> f64 {
        match self {
            Segment::Line { from, to } => from.distance(to),
            Segment::Circle { radius, turns, .. } => TAU * radius.abs() * turns.abs(),
        }
    }

    pub fn start(&self) -> ParameterPoint {
        self.point(0.0)
    }

    pub fn end(&self) -> ParameterPoint {
        self.point(1.0)
    }

    pub fn reversed(&self) -> Segment {
        match self {
            Segment::Line { from, to } => Segment::Line { from: *to, to: *from },
            Segment::Circle {
                center,
                radius,
                plane,
                turns,
                phase,
            } => Segment::Circle {
                center: *center,
                radius: *radius,
                plane: *plane,
                turns: -turns,
                phase: phase + TAU * turns,
            },
        }
    }
}

/// A contiguous chain of segments with a total sampling budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopPath {
    pub segments: Vec<Segment>,
    pub samples: usize,
}

impl LoopPath {
    pub fn new(segments: Vec<Segment>, samples: usize) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::EmptyPath);
        }
        if samples == 0 {
            return Err(Error::NotEnoughSamples("path", 1));
        }
        for (index, pair) in segments.windows(2).enumerate() {
            let gap = pair[0].end().distance(&pair[1].start());
            if gap > CLOSURE_TOL {
                return Err(Error::DiscontinuousPath { index: index + 1, gap });
            }
        }
        Ok(Self { segments, samples })
    }

    pub fn line(from: ParameterPoint, to: ParameterPoint, samples: usize) -> Result<Self> {
        Self::new(vec![Segment::Line { from, to }], samples)
    }

    /// Counter-clockwise circle `λ = r e^{2πit}` at fixed `μ`.
    pub fn lambda_circle(radius: f64, mu: crate::C64, samples: usize) -> Result<Self> {
        let center = ParameterPoint::new(crate::C64::new(0.0, 0.0), mu);
        Self::new(
            vec![Segment::Circle {
                center,
                radius,
                plane: RealPlane(RealCoord::LambdaRe, RealCoord::LambdaIm),
                turns: 1.0,
                phase: 0.0,
            }],
            samples,
        )
    }

    /// Positively oriented square with one corner at `corner`, sides `eps`
    /// along `plane.0` then `plane.1`.
    pub fn square(corner: ParameterPoint, plane: RealPlane, eps: f64, samples: usize) -> Result<Self> {
        let e1 = Tangent::along(plane.0) * eps;
        let e2 = Tangent::along(plane.1) * eps;
        let p1 = corner + e1;
        let p2 = p1 + e2;
        let p3 = corner + e2;
        Self::new(
            vec![
                Segment::Line { from: corner, to: p1 },
                Segment::Line { from: p1, to: p2 },
                Segment::Line { from: p2, to: p3 },
                Segment::Line { from: p3, to: corner },
            ],
            samples,
        )
    }

    pub fn start(&self) -> ParameterPoint {
        self.segments[0].start()
    }

    pub fn end(&self) -> ParameterPoint {
        self.segments[self.segments.len() - 1].end()
    }

    pub fn closure_gap(&self) -> f64 {
        self.start().distance(&self.end())
    }

    pub fn is_closed(&self) -> bool {
        self.closure_gap() <= CLOSURE_TOL
    }

    pub fn require_closed(&self) -> Result<()> {
        let gap = self.closure_gap();
        if gap > CLOSURE_TOL {
            return Err(Error::OpenPath { gap });
        }
        Ok(())
    }

    pub fn length(&self) -> f64 {
        self.segments.iter().map(Segment::length).sum()
    }

    pub fn reversed(&self) -> LoopPath {
        LoopPath {
            segments: self.segments.iter().rev().map(Segment::reversed).collect(),
            samples: self.samples,
        }
    }

    /// Concatenate `self` then `other`.
    pub fn then(&self, other: &LoopPath) -> Result<LoopPath> {
        let mut segments = self.segments.clone();
        segments.extend(other.segments.iter().cloned());
        LoopPath::new(segments, self.samples + other.samples)
    }

    /// Sample intervals per segment, proportional to segment length.
    pub fn intervals_per_segment(&self) -> Vec<usize> {
        let total = self.length();
        let n = self.segments.len();
        if total <= 0.0 {
            return vec![(self.samples / n).max(1); n];
        }
        self.segments
            .iter()
            .map(|s| ((self.samples as f64 * s.length() / total).round() as usize).max(1))
            .collect()
    }
}
