use serde::{Deserialize, Serialize};

use super::frame::Frame;
use super::polytope::HalfSpace;
use super::shear::ShearMap;
use crate::{Error, Mat3, Result, Vec3};

/// Species of box appearing in the constructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    FreqPlank,
    SpatialPlank,
    Tube,
    Plate,
    SmallPlank,
    FatPlate,
    BoxB,
    BoxSigma,
    BoxTau,
    BoxLambda,
    BoxU,
    PlatePhi,
    CubeDelta,
    CubeQ,
    CubeSmallQ,
    Generic,
}

/// Closed parameter interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::domain(format!("bad interval [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, t: f64) -> bool {
        self.lo <= t && t <= self.hi
    }
}

/// Scale parameter for [`make_box`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scale {
    /// Spatial or frequency scale `R`.
    R(f64),
    /// Plate scale `delta`; plates live in `[-delta^-2, delta^-2]^3`.
    Delta(f64),
    /// Small-cap scale: `R` together with an angle `sigma`.
    SmallCap { r: f64, sigma: f64 },
}

/// A parallelepiped: `center + E [-1/2, 1/2]^3` where `E` has columns
/// `axes[i] * lengths[i]`. Rectangular boxes have orthonormal axes; sheared
/// planks keep unit but non-orthogonal axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub center: Vec3,
    pub axes: [Vec3; 3],
    pub lengths: [f64; 3],
    pub role: Role,
    pub interval: Option<Interval>,
}

impl OrientedBox {
    pub fn new(
        center: Vec3,
        axes: [Vec3; 3],
        lengths: [f64; 3],
        role: Role,
        interval: Option<Interval>,
    ) -> Result<Self> {
        if lengths.iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
            return Err(Error::domain(format!("box lengths must be positive, got {lengths:?}")));
        }
        let mut unit = axes;
        for a in unit.iter_mut() {
            let n = a.norm();
            if !(n > 0.0) || !n.is_finite() {
                return Err(Error::domain("box axis must be a nonzero finite vector"));
            }
            *a /= n;
        }
        let det = Mat3::from_columns(&unit).determinant();
        if det.abs() < 1e-14 {
            return Err(Error::domain("box axes are linearly dependent"));
        }
        Ok(OrientedBox {
            center,
            axes: unit,
            lengths,
            role,
            interval,
        })
    }

    /// Box spanned by full edge vectors (columns of `edges`).
    pub fn from_edges(center: Vec3, edges: Mat3, role: Role, interval: Option<Interval>) -> Result<Self> {
        let cols: [Vec3; 3] = [edges.column(0).into(), edges.column(1).into(), edges.column(2).into()];
        let lengths = [cols[0].norm(), cols[1].norm(), cols[2].norm()];
        OrientedBox::new(center, cols, lengths, role, interval)
    }

    /// Axis-aligned cube with lower corner `lo` and side `side`.
    pub fn cube(lo: Vec3, side: f64, role: Role) -> Result<Self> {
        let h = Vec3::repeat(0.5 * side);
        OrientedBox::new(lo + h, [Vec3::x(), Vec3::y(), Vec3::z()], [side; 3], role, None)
    }

    /// Rectangular box aligned with the Frenet frame at `frame`.
    pub fn in_frame(frame: &Frame, center: Vec3, lengths: [f64; 3], role: Role, interval: Option<Interval>) -> Result<Self> {
        OrientedBox::new(center, frame.axes(), lengths, role, interval)
    }

    /// Full edge-vector matrix.
    pub fn edges(&self) -> Mat3 {
        Mat3::from_columns(&[
            self.axes[0] * self.lengths[0],
            self.axes[1] * self.lengths[1],
            self.axes[2] * self.lengths[2],
        ])
    }

    pub fn volume(&self) -> f64 {
        self.edges().determinant().abs()
    }

    pub fn is_rectangular(&self) -> bool {
        let a = &self.axes;
        a[0].dot(&a[1]).abs() < 1e-12 && a[0].dot(&a[2]).abs() < 1e-12 && a[1].dot(&a[2]).abs() < 1e-12
    }

    /// Coordinates of `x` in edge units; the box is `[-1/2, 1/2]^3`.
    pub fn local(&self, x: &Vec3) -> Vec3 {
        let inv = self.edges().try_inverse().expect("nondegenerate box");
        inv * (x - self.center)
    }

    /// Membership in the closed box dilated by `factor` about its center.
    pub fn contains_scaled(&self, x: &Vec3, factor: f64) -> bool {
        let u = self.local(x);
        let lim = 0.5 * factor * (1.0 + 1e-12);
        u.iter().all(|v| v.abs() <= lim)
    }

    pub fn contains(&self, x: &Vec3) -> bool {
        self.contains_scaled(x, 1.0)
    }

    pub fn vertices(&self) -> [Vec3; 8] {
        let e = self.edges();
        let mut out = [Vec3::zeros(); 8];
        for (k, v) in out.iter_mut().enumerate() {
            let s = Vec3::new(
                if k & 1 == 0 { -0.5 } else { 0.5 },
                if k & 2 == 0 { -0.5 } else { 0.5 },
                if k & 4 == 0 { -0.5 } else { 0.5 },
            );
            *v = self.center + e * s;
        }
        out
    }

    /// Six bounding half-spaces with unit outward normals.
    pub fn half_spaces(&self) -> Vec<HalfSpace> {
        let inv = self.edges().try_inverse().expect("nondegenerate box");
        let mut out = Vec::with_capacity(6);
        for i in 0..3 {
            let row: Vec3 = inv.row(i).transpose();
            let norm = row.norm();
            let n = row / norm;
            let half = 0.5 / norm;
            let c = n.dot(&self.center);
            out.push(HalfSpace::new(n, c + half));
            out.push(HalfSpace::new(-n, -c + half));
        }
        out
    }

    /// Same box dilated by `factor` about its center.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut b = self.clone();
        for d in b.lengths.iter_mut() {
            *d *= factor;
        }
        b
    }

    pub fn translated(&self, v: &Vec3) -> Self {
        let mut b = self.clone();
        b.center += v;
        b
    }

    /// Image under the linear map `m`.
    pub fn transformed(&self, m: &Mat3) -> Result<Self> {
        OrientedBox::from_edges(m * self.center, m * self.edges(), self.role, self.interval)
    }

    /// Axis-aligned bounding box as (min, max).
    pub fn aabb(&self) -> (Vec3, Vec3) {
        let e = self.edges();
        let mut half = Vec3::zeros();
        for i in 0..3 {
            half[i] = 0.5 * (e[(i, 0)].abs() + e[(i, 1)].abs() + e[(i, 2)].abs());
        }
        (self.center - half, self.center + half)
    }
}

/// Box with the standard dimensions for `role` at `scale`, aligned with the
/// Frenet frame at the left endpoint of `interval` and centered at `center`.
///
/// Small planks and union boxes take `Scale::SmallCap`; for small planks the
/// interval's left endpoint is the shear parameter `s` and the result is the
/// sheared set of [`small_plank`] translated to `center`.
pub fn make_box(role: Role, interval: Option<Interval>, scale: Scale, center: Vec3) -> Result<OrientedBox> {
    let frame_at = |iv: Option<Interval>| -> Result<Frame> {
        let c = iv.map(|i| i.lo).unwrap_or(0.0);
        super::frenet_frame(c)
    };
    let need_r = |scale: Scale| -> Result<f64> {
        match scale {
            Scale::R(r) if r >= 1.0 => Ok(r),
            _ => Err(Error::domain(format!("{role:?} needs a scale R >= 1, got {scale:?}"))),
        }
    };
    let cube = |side: f64, role: Role| {
        OrientedBox::new(center, [Vec3::x(), Vec3::y(), Vec3::z()], [side; 3], role, interval)
    };
    match role {
        Role::FreqPlank => {
            let r = need_r(scale)?;
            let f = frame_at(interval)?;
            OrientedBox::in_frame(&f, center, [r.powf(-1.0 / 3.0), r.powf(-2.0 / 3.0), 1.0 / r], role, interval)
        }
        Role::SpatialPlank => {
            let r = need_r(scale)?;
            let f = frame_at(interval)?;
            OrientedBox::in_frame(&f, center, [r.cbrt(), r.powf(2.0 / 3.0), r], role, interval)
        }
        Role::Tube => {
            let r = need_r(scale)?;
            let f = frame_at(interval)?;
            let w = r.powf(2.0 / 3.0);
            OrientedBox::in_frame(&f, center, [w, w, r], role, interval)
        }
        Role::Plate => {
            let delta = match scale {
                Scale::Delta(d) if d > 0.0 && d <= 1.0 => d,
                _ => return Err(Error::domain(format!("plates need a scale delta in (0, 1], got {scale:?}"))),
            };
            let f = frame_at(interval)?;
            OrientedBox::in_frame(&f, center, [1.0 / delta, delta.powi(-2), delta.powi(-2)], role, interval)
        }
        Role::FatPlate => {
            let r = need_r(scale)?;
            let f = frame_at(interval)?;
            OrientedBox::in_frame(&f, center, [r.powf(2.0 / 3.0), r, r], role, interval)
        }
        Role::BoxB => {
            let r = need_r(scale)?;
            let f = frame_at(interval)?;
            OrientedBox::in_frame(&f, center, [r.powf(2.0 / 3.0), r.powf(5.0 / 6.0), r], role, interval)
        }
        Role::BoxSigma => {
            let r = need_r(scale)?;
            let f = frame_at(interval)?;
            OrientedBox::in_frame(&f, center, [r.sqrt(), r.powf(5.0 / 6.0), r], role, interval)
        }
        Role::BoxTau => {
            let r = need_r(scale)?;
            let f = frame_at(interval)?;
            OrientedBox::in_frame(&f, center, [r.sqrt(), r.powf(2.0 / 3.0), r], role, interval)
        }
        Role::BoxLambda => {
            let r = need_r(scale)?;
            let f = frame_at(interval)?;
            OrientedBox::in_frame(&f, center, [r.sqrt(), r.powf(2.0 / 3.0), r.powf(5.0 / 6.0)], role, interval)
        }
        Role::BoxU => {
            let (r, sigma) = match scale {
                Scale::SmallCap { r, sigma } => (r, sigma),
                _ => return Err(Error::domain("union boxes need Scale::SmallCap")),
            };
            check_sigma(r, sigma)?;
            let f = frame_at(interval)?;
            let lengths = if sigma >= r.powf(-1.0 / 6.0) {
                [r.powf(2.0 / 3.0), r.powf(2.0 / 3.0) / sigma, r]
            } else {
                [r.cbrt() / (sigma * sigma), r.powf(2.0 / 3.0) / sigma, r]
            };
            OrientedBox::in_frame(&f, center, lengths, role, interval)
        }
        Role::SmallPlank => {
            let (r, sigma) = match scale {
                Scale::SmallCap { r, sigma } => (r, sigma),
                _ => return Err(Error::domain("small planks need Scale::SmallCap")),
            };
            let s = interval.map(|i| i.lo).unwrap_or(0.0);
            Ok(small_plank(r, sigma, s)?.translated(&center))
        }
        Role::CubeDelta => cube(need_r(scale)?.sqrt(), role),
        Role::CubeQ => cube(need_r(scale)?.powf(2.0 / 3.0), role),
        Role::CubeSmallQ => cube(need_r(scale)?.cbrt(), role),
        Role::PlatePhi | Role::Generic => Err(Error::domain(format!(
            "{role:?} has no canonical dimensions; build it with OrientedBox::new"
        ))),
    }
}

fn check_sigma(r: f64, sigma: f64) -> Result<()> {
    let lo = r.powf(-1.0 / 3.0);
    if !(r >= 1.0) || !(sigma >= lo * (1.0 - 1e-12)) || !(sigma <= 1.0 + 1e-12) {
        return Err(Error::domain(format!("sigma {sigma} outside [R^-1/3, 1] for R = {r}")));
    }
    Ok(())
}

/// The small plank `Theta(sigma, s)`:
/// `|w1| <= R^{-1/3} sigma^2`, `|w2 - 2 s w1| <= R^{-2/3} sigma`,
/// `|w3 - 3 s w2 + 3 s^2 w1| <= R^{-1}`.
///
/// With `sigma = 1` this is the sheared base plank at `s`.
pub fn small_plank(r: f64, sigma: f64, s: f64) -> Result<OrientedBox> {
    check_sigma(r, sigma)?;
    let half = Vec3::new(r.powf(-1.0 / 3.0) * sigma * sigma, r.powf(-2.0 / 3.0) * sigma, 1.0 / r);
    let base = Mat3::from_diagonal(&(half * 2.0));
    // Theta(sigma, s) = T_{1,-s} Theta(sigma, 0)
    let shear = ShearMap::new(1.0, -s)?.forward;
    let iv = Interval::new(s, s + r.powf(-1.0 / 3.0) / sigma)?;
    OrientedBox::from_edges(Vec3::zeros(), shear * base, Role::SmallPlank, Some(iv))
}

/// Dual box: edge matrix `E^{-T}`, centered at the origin. For rectangular
/// boxes this keeps the axes and inverts the lengths.
pub fn dual_box(b: &OrientedBox) -> Result<OrientedBox> {
    if b.lengths.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::domain("dual of a box with a zero length"));
    }
    let inv_t = b
        .edges()
        .try_inverse()
        .ok_or_else(|| Error::domain("degenerate box has no dual"))?
        .transpose();
    if b.is_rectangular() {
        let lengths = [1.0 / b.lengths[0], 1.0 / b.lengths[1], 1.0 / b.lengths[2]];
        return OrientedBox::new(Vec3::zeros(), b.axes, lengths, dual_role(b.role), b.interval);
    }
    OrientedBox::from_edges(Vec3::zeros(), inv_t, dual_role(b.role), b.interval)
}

fn dual_role(role: Role) -> Role {
    match role {
        Role::FreqPlank => Role::SpatialPlank,
        Role::SpatialPlank => Role::FreqPlank,
        _ => Role::Generic,
    }
}
