use crate::{Error, Result};

/// `min_{2 <= k <= d} (1/k + (k^2 - k - 2) / (2 k p))`.
pub fn sigma_pd(p: f64, d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::domain(format!("dimension {d} must be at least 2")));
    }
    if !(p >= 2.0) {
        return Err(Error::domain(format!("exponent {p} must be at least 2")));
    }
    Ok((2..=d)
        .map(|k| {
            let k = k as f64;
            1.0 / k + (k * k - k - 2.0) / (2.0 * k * p)
        })
        .fold(f64::INFINITY, f64::min))
}

/// `min_{5 <= k <= d} 2 (k^2 - 2k - 2) / (k - 4)`.
pub fn critical_p_bound(d: usize) -> Result<f64> {
    if d < 5 {
        return Err(Error::domain(format!("the bound needs d >= 5, got {d}")));
    }
    Ok((5..=d)
        .map(|k| {
            let k = k as f64;
            2.0 * (k * k - 2.0 * k - 2.0) / (k - 4.0)
        })
        .fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        assert!((sigma_pd(10.0, 3).unwrap() - 0.4).abs() < 1e-12);
        assert_eq!(critical_p_bound(7).unwrap(), 22.0);
        assert_eq!(critical_p_bound(6).unwrap(), 22.0);
        assert_eq!(critical_p_bound(5).unwrap(), 26.0);
        assert!((sigma_pd(1e12, 3).unwrap() - 1.0 / 3.0).abs() < 1e-9);
        assert!(sigma_pd(10.0, 1).is_err());
        assert!(critical_p_bound(4).is_err());
    }
}
