//! Topological witnesses (degree, winding, `ℳ_k` intersection counts),
//! component classification, curve documents and the reproduction suite.

mod degree;
mod document;
mod grid;
mod intersections;
pub mod sampling;
mod suite;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::convexity::{multiconvex_multiplicity, Multiplicity};
use crate::curves::FramedCurve;
use crate::deform::{add_loops, LoopSpec};
use crate::error::{Error, Result};
use crate::families::{g0, HHat, SpherePoint};
use crate::rotations::UnitQuaternion;

pub use degree::{degree, degree_at, regular_values, DegreeReport, Preimage};
pub use document::{deserialize, read_document, serialize, CurveDocument, Metadata, FORMAT_VERSION};
pub use intersections::{count_mk_intersections, IntersectionReport, Zero};
pub use suite::{run_suite, CheckResult, SuiteConfig, SuiteReport, Tolerances, CHECK_IDS, SEED_ENV};

/// Parameter space of a family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    Sphere2,
    /// `(D²)^n`.
    DiskPower(usize),
    /// `[0, 1]`.
    Interval,
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Sphere2 => 2,
            Domain::DiskPower(n) => 2 * n,
            Domain::Interval => 1,
        }
    }
}

/// A point of a [`Domain`].
#[derive(Debug, Clone, PartialEq)]
pub enum DomainPoint {
    Sphere(SpherePoint),
    Disks(Vec<[f64; 2]>),
    Interval(f64),
}

impl DomainPoint {
    /// Ambient coordinates: `R³` for the sphere, concatenated disk coordinates, or `t`.
    pub fn coords(&self) -> Vec<f64> {
        match self {
            DomainPoint::Sphere(p) => vec![p.0.x, p.0.y, p.0.z],
            DomainPoint::Disks(d) => d.iter().flat_map(|q| *q).collect(),
            DomainPoint::Interval(t) => vec![*t],
        }
    }
}

/// Scan resolutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    /// Rows in `α ∈ [0, π]`, poles included, for the degree scan.
    pub alpha: usize,
    /// Columns in `θ` for the degree scan.
    pub theta: usize,
    /// Samples of `t ∈ S¹`.
    pub t: usize,
    /// Rows and columns of the sphere grid used for `M_k` scans.
    pub mk_alpha: usize,
    pub mk_theta: usize,
    /// Points per side of the square grid covering each disk factor.
    pub disk: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Self { alpha: 128, theta: 256, t: 1024, mk_alpha: 64, mk_theta: 128, disk: 33 }
    }
}

impl Resolution {
    /// Every count divided by `factor`, keeping at least three points.
    pub fn coarsened(self, factor: usize) -> Self {
        let f = |n: usize| (n / factor.max(1)).max(3);
        Self {
            alpha: f(self.alpha),
            theta: f(self.theta),
            t: f(self.t),
            mk_alpha: f(self.mk_alpha),
            mk_theta: f(self.mk_theta),
            disk: f(self.disk),
        }
    }
}

type Evaluator = dyn Fn(&DomainPoint) -> Result<FramedCurve> + Send + Sync;

/// A continuous family `K → ℒ_Q` together with its scan resolution.
#[derive(Clone)]
pub struct FamilyMap {
    pub name: String,
    pub domain: Domain,
    pub resolution: Resolution,
    evaluator: Arc<Evaluator>,
}

impl fmt::Debug for FamilyMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FamilyMap")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("resolution", &self.resolution)
            .finish_non_exhaustive()
    }
}

fn sphere_point(p: &DomainPoint) -> Result<&SpherePoint> {
    match p {
        DomainPoint::Sphere(s) => Ok(s),
        other => Err(Error::InvalidInput(format!("expected a point of S², got {other:?}"))),
    }
}

impl FamilyMap {
    pub fn new(
        name: impl Into<String>,
        domain: Domain,
        f: impl Fn(&DomainPoint) -> Result<FramedCurve> + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), domain, resolution: Resolution::default(), evaluator: Arc::new(f) }
    }

    pub fn with_resolution(mut self, resolution: Resolution) -> Self {
        self.resolution = resolution;
        self
    }

    pub fn eval(&self, p: &DomainPoint) -> Result<FramedCurve> {
        (self.evaluator)(p)
    }

    /// `g₀ : S² → ℒ_𝟏`.
    pub fn g0() -> Self {
        Self::new("g0", Domain::Sphere2, |p| Ok(g0(sphere_point(p)?)))
    }

    /// `p ↦ curve` on any domain.
    pub fn constant(name: impl Into<String>, domain: Domain, curve: FramedCurve) -> Self {
        Self::new(name, domain, move |_| Ok(curve.clone()))
    }

    /// `p ↦ g(p)^[t₀#n]`.
    pub fn with_loops(&self, spec: LoopSpec) -> Self {
        let inner = self.evaluator.clone();
        Self {
            name: format!("{}^[{}#{}]", self.name, spec.t0, spec.n),
            domain: self.domain,
            resolution: self.resolution,
            evaluator: Arc::new(move |p| add_loops(&inner(p)?, &spec)),
        }
    }

    /// `ĥ : (D²)^{k−1} → ℒ_{(−𝟏)^k z}`.
    pub fn h_hat(h: Arc<HHat>) -> Self {
        let domain = Domain::DiskPower(h.k - 1);
        Self::new(format!("h_hat(k={})", h.k), domain, move |p| match p {
            DomainPoint::Disks(d) => h.eval(d),
            other => Err(Error::InvalidInput(format!("expected disk coordinates, got {other:?}"))),
        })
    }
}

/// Winding number of a closed planar loop around the origin.
pub fn winding_number(points: &[[f64; 2]]) -> Result<i32> {
    if points.len() < 3 {
        return Err(Error::InvalidInput("a loop needs at least three points".into()));
    }
    if points.iter().any(|p| !(p[0].hypot(p[1]) > 0.0) || !p[0].is_finite() || !p[1].is_finite()) {
        return Err(Error::InvalidInput("loop passes through the origin".into()));
    }
    let mut total = 0.0;
    for (i, a) in points.iter().enumerate() {
        let b = points[(i + 1) % points.len()];
        let turn = (a[0] * b[1] - a[1] * b[0]).atan2(a[0] * b[0] + a[1] * b[1]);
        if turn.abs() > PI / 2.0 {
            return Err(Error::TooCoarse);
        }
        total += turn;
    }
    Ok((total / (2.0 * PI)).round() as i32)
}

/// The three components of `ℒ_{±𝟏}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Component {
    NegConvex,
    Pos,
    NegNonconvex,
}

/// Tolerance on the endpoint lift for [`classify_component`].
pub const ENDPOINT_TOL: f64 = 1e-6;

pub fn classify_component(curve: &FramedCurve) -> Result<Component> {
    let end = curve.based().endpoint_lift();
    if end.chordal(&UnitQuaternion::one()) < ENDPOINT_TOL {
        return Ok(Component::Pos);
    }
    if end.chordal(&-UnitQuaternion::one()) >= ENDPOINT_TOL {
        return Err(Error::WrongEndpoint);
    }
    Ok(match multiconvex_multiplicity(curve)?.multiplicity {
        Multiplicity::Multiconvex(1) => Component::NegConvex,
        _ => Component::NegNonconvex,
    })
}
