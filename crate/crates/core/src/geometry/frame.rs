use serde::Serialize;

use crate::{Error, Result, Vec3};

/// Point on the twisted cubic.
pub fn gamma(t: f64) -> Vec3 {
    Vec3::new(t, t * t, t * t * t)
}

/// Frenet triple of the twisted cubic at parameter `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Frame {
    pub c: f64,
    pub tangent: Vec3,
    pub normal: Vec3,
    pub binormal: Vec3,
    pub raw_tangent: Vec3,
    pub raw_binormal: Vec3,
}

pub fn frenet_frame(c: f64) -> Result<Frame> {
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::domain(format!("curve parameter {c} outside [0, 1]")));
    }
    Ok(Frame::at(c))
}

impl Frame {
    /// Frame at any real parameter; used internally where the parameter has
    /// already been validated or deliberately leaves [0, 1] (dual lattices).
    pub(crate) fn at(c: f64) -> Frame {
        let raw_tangent = Vec3::new(1.0, 2.0 * c, 3.0 * c * c);
        let raw_binormal = Vec3::new(3.0 * c * c, -3.0 * c, 1.0);
        let tangent = raw_tangent.normalize();
        let binormal = raw_binormal.normalize();
        let normal = binormal.cross(&tangent).normalize();
        Frame {
            c,
            tangent,
            normal,
            binormal,
            raw_tangent,
            raw_binormal,
        }
    }

    /// Axes in (t, n, b) order.
    pub fn axes(&self) -> [Vec3; 3] {
        [self.tangent, self.normal, self.binormal]
    }

    /// Coordinates of `x` along (t, n, b).
    pub fn coords(&self, x: &Vec3) -> Vec3 {
        Vec3::new(self.tangent.dot(x), self.normal.dot(x), self.binormal.dot(x))
    }

    /// Point with frame coordinates `u`.
    pub fn point(&self, u: &Vec3) -> Vec3 {
        self.tangent * u.x + self.normal * u.y + self.binormal * u.z
    }
}

/// The unnormalized normal as printed in the literature,
/// `(-2c - 9c^3, 1 - c^4, 3c + 6c^3)`. It is not exactly orthogonal to the
/// tangent; see [`Frame`] for the exact one.
pub fn approx_normal(c: f64) -> Vec3 {
    Vec3::new(-2.0 * c - 9.0 * c.powi(3), 1.0 - c.powi(4), 3.0 * c + 6.0 * c.powi(3))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_at_zero_is_standard_basis() {
        let f = frenet_frame(0.0).unwrap();
        assert!((f.tangent - Vec3::x()).norm() < 1e-15);
        assert!((f.normal - Vec3::y()).norm() < 1e-15);
        assert!((f.binormal - Vec3::z()).norm() < 1e-15);
    }

    #[test]
    fn raw_vectors_at_one() {
        let f = frenet_frame(1.0).unwrap();
        assert_eq!(f.raw_tangent, Vec3::new(1.0, 2.0, 3.0));
        assert_eq!(f.raw_binormal, Vec3::new(3.0, -3.0, 1.0));
    }

    #[test]
    fn out_of_range_parameter_rejected() {
        assert!(matches!(frenet_frame(1.5), Err(Error::Domain(_))));
        assert!(matches!(frenet_frame(-0.01), Err(Error::Domain(_))));
        assert!(frenet_frame(f64::NAN).is_err());
    }

    #[test]
    fn exact_normal_second_component() {
        // b x t = (-2c - 9c^3, 1 - 9c^4, 3c + 6c^3) before normalisation
        for &c in &[0.2, 0.5, 0.9] {
            let f = Frame::at(c);
            let raw = f.raw_binormal.cross(&f.raw_tangent);
            assert!((raw.y - (1.0 - 9.0 * c.powi(4))).abs() < 1e-12);
            assert!((raw.normalize() - f.normal).norm() < 1e-12);
        }
    }

    #[test]
    fn printed_normal_residual() {
        for &c in &[0.0, 0.3, 1.0] {
            let r = approx_normal(c).dot(&Frame::at(c).raw_tangent);
            assert!((r - 16.0 * c.powi(5)).abs() < 1e-12);
        }
    }
}
