//! Built-in initial data and noise coefficients, named so configs can
//! round-trip them.

use crate::error::{Error, Result};
use crate::math;
use crate::mesh::BoundingBox;
use alloc::format;
use alloc::string::String;

/// Initial data selectable by name.
///
/// * `paper-poly` -- the quartic
///   `u0(x,y) = (x⁴ + 4x³ - 2x² - 12x)(y⁴ - 8/3·y³ - 2y² + 8y) / 16`,
///   non-symmetric, with vanishing normal derivative on all sides of
///   `(-1,1)²`.
/// * `eigen:k,m` -- the Neumann Laplacian eigenfunction
///   `cos(kπ(x-x0)/Lx)·cos(mπ(y-y0)/Ly)` of the mesh box, with eigenvalue
///   `(kπ/Lx)² + (mπ/Ly)²`. Exact heat-semigroup decay makes these the
///   deterministic test oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialData {
    PaperPoly,
    Eigenmode { k: u32, m: u32 },
}

impl InitialData {
    pub fn eval(&self, bbox: &BoundingBox, x: f64, y: f64) -> f64 {
        match *self {
            InitialData::PaperPoly => {
                let p = ((x + 4.0) * x * x - 2.0 * x - 12.0) * x;
                let q = ((y - 8.0 / 3.0) * y * y - 2.0 * y + 8.0) * y;
                p * q / 16.0
            }
            InitialData::Eigenmode { k, m } => {
                let (ax, ay) = Self::frequencies(bbox, k, m);
                math::cos(ax * (x - bbox.min[0])) * math::cos(ay * (y - bbox.min[1]))
            }
        }
    }

    pub fn laplacian(&self, bbox: &BoundingBox, x: f64, y: f64) -> f64 {
        match *self {
            InitialData::PaperPoly => {
                let p = ((x + 4.0) * x * x - 2.0 * x - 12.0) * x;
                let q = ((y - 8.0 / 3.0) * y * y - 2.0 * y + 8.0) * y;
                let pxx = 12.0 * x * x + 24.0 * x - 4.0;
                let qyy = 12.0 * y * y - 16.0 * y - 4.0;
                (pxx * q + p * qyy) / 16.0
            }
            InitialData::Eigenmode { .. } => -self.decay_rate(bbox) * self.eval(bbox, x, y),
        }
    }

    /// Heat-semigroup decay rate: `0` for the quartic has no closed form, so
    /// this is only defined for eigenmodes.
    pub fn decay_rate(&self, bbox: &BoundingBox) -> f64 {
        match *self {
            InitialData::PaperPoly => f64::NAN,
            InitialData::Eigenmode { k, m } => {
                let (ax, ay) = Self::frequencies(bbox, k, m);
                ax * ax + ay * ay
            }
        }
    }

    fn frequencies(bbox: &BoundingBox, k: u32, m: u32) -> (f64, f64) {
        (
            k as f64 * core::f64::consts::PI / bbox.side(0),
            m as f64 * core::f64::consts::PI / bbox.side(1),
        )
    }

    pub fn name(&self) -> String {
        match *self {
            InitialData::PaperPoly => "paper-poly".into(),
            InitialData::Eigenmode { k, m } => format!("eigen:{k},{m}"),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        if s == "paper-poly" {
            return Ok(InitialData::PaperPoly);
        }
        if let Some(rest) = s.strip_prefix("eigen:") {
            let mut parts = rest.splitn(2, ',');
            let k = parts.next().and_then(|t| t.trim().parse::<u32>().ok());
            let m = parts.next().and_then(|t| t.trim().parse::<u32>().ok());
            if let (Some(k), Some(m)) = (k, m) {
                return Ok(InitialData::Eigenmode { k, m });
            }
        }
        Err(Error::InvalidArgument(format!(
            "unknown initial data `{s}` (expected `paper-poly` or `eigen:k,m`)"
        )))
    }
}

/// Scalar noise coefficient `g` in the forcing term `g(u) dW`.
///
/// Both built-ins are globally Lipschitz; `sqrt-one-plus-sq` is
/// `g(r) = sqrt(1 + r²)`, `zero` switches the noise off entirely.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseModel {
    SqrtOnePlusSq,
    Zero,
}

impl NoiseModel {
    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            NoiseModel::SqrtOnePlusSq => math::sqrt(1.0 + r * r),
            NoiseModel::Zero => 0.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            NoiseModel::SqrtOnePlusSq => "sqrt-one-plus-sq",
            NoiseModel::Zero => "zero",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sqrt-one-plus-sq" => Ok(NoiseModel::SqrtOnePlusSq),
            "zero" => Ok(NoiseModel::Zero),
            _ => Err(Error::InvalidArgument(format!(
                "unknown noise model `{s}` (expected `sqrt-one-plus-sq` or `zero`)"
            ))),
        }
    }
}
