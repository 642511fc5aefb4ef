use serde::Serialize;

use crate::{Error, Mat3, Result, Vec3};

/// The linear map `T_{sigma,c}` together with its inverse transpose
/// `A_{sigma,c}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShearMap {
    pub sigma: f64,
    pub c: f64,
    pub forward: Mat3,
    pub inverse_transpose: Mat3,
}

impl ShearMap {
    pub fn new(sigma: f64, c: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::domain(format!("shear scale must be positive, got {sigma}")));
        }
        if !c.is_finite() {
            return Err(Error::domain("shear shift must be finite"));
        }
        let (s, s2, s3) = (sigma, sigma * sigma, sigma * sigma * sigma);
        #[rustfmt::skip]
        let forward = Mat3::new(
            1.0 / s,             0.0,            0.0,
            -2.0 * c / s2,       1.0 / s2,       0.0,
            3.0 * c * c / s3,    -3.0 * c / s3,  1.0 / s3,
        );
        #[rustfmt::skip]
        let inverse_transpose = Mat3::new(
            s,   2.0 * c * s,   3.0 * c * c * s,
            0.0, s2,            3.0 * c * s2,
            0.0, 0.0,           s3,
        );
        Ok(ShearMap {
            sigma,
            c,
            forward,
            inverse_transpose,
        })
    }

    /// `T_{sigma,c} w`.
    pub fn apply(&self, w: &Vec3) -> Vec3 {
        self.forward * w
    }

    /// `A_{sigma,c} x`.
    pub fn apply_dual(&self, x: &Vec3) -> Vec3 {
        self.inverse_transpose * x
    }

    pub fn det(&self) -> f64 {
        self.sigma.powi(-6)
    }

    pub fn det_dual(&self) -> f64 {
        self.sigma.powi(6)
    }

    /// `T^{-1}`, which for `sigma = 1` equals `T_{1,-c}`.
    pub fn inverse(&self) -> Mat3 {
        self.inverse_transpose.transpose()
    }
}

/// The affine rescaling `~T_{Delta,c}` sending the arc over `[c, c + Delta]`
/// onto the whole curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AffineShear {
    pub linear: ShearMap,
    pub shift: Vec3,
}

impl AffineShear {
    pub fn new(delta: f64, c: f64) -> Result<Self> {
        let linear = ShearMap::new(delta, c)?;
        let shift = Vec3::new(-c / delta, c * c / delta.powi(2), -c.powi(3) / delta.powi(3));
        Ok(AffineShear { linear, shift })
    }

    pub fn apply(&self, w: &Vec3) -> Vec3 {
        self.linear.apply(w) + self.shift
    }
}
