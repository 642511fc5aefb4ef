use std::f64::consts::TAU;
use std::ops::Range;

use num_complex::Complex64;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::geometry::{gamma, Interval};
use crate::{rng, Error, Result, Vec3};

/// `e(z) = exp(2 pi i z)`, reducing `z` mod 1 first.
#[inline]
pub fn e(z: f64) -> Complex64 {
    let (s, c) = (TAU * (z - z.round())).sin_cos();
    Complex64::new(c, s)
}

/// `F(x) = sum_J a_J e(x . xi_J)` over the intervals of length `R^-alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpSum {
    #[serde(rename = "R")]
    pub r: f64,
    pub alpha: f64,
    pub intervals: Vec<Interval>,
    pub coeffs: Vec<Complex64>,
    pub freqs: Vec<Vec3>,
    /// Frequencies moved off the interval centers.
    pub jittered: bool,
}

/// `R^alpha`, which must be an integer.
pub fn interval_count(r: f64, alpha: f64) -> Result<usize> {
    if !(1.0 / 3.0 - 1e-12..=1.0 + 1e-12).contains(&alpha) {
        return Err(Error::domain(format!("cap exponent {alpha} outside [1/3, 1]")));
    }
    let n = r.powf(alpha);
    if !(r >= 1.0) || (n - n.round()).abs() > 1e-6 * n {
        return Err(Error::domain(format!("R^alpha = {n} is not an integer (R = {r}, alpha = {alpha})")));
    }
    Ok(n.round() as usize)
}

impl ExpSum {
    /// Frequencies at the interval centers.
    pub fn new(r: f64, alpha: f64, coeffs: Vec<Complex64>) -> Result<Self> {
        let n = interval_count(r, alpha)?;
        if coeffs.len() != n {
            return Err(Error::domain(format!("{} coefficients for {n} intervals", coeffs.len())));
        }
        let h = 1.0 / n as f64;
        let intervals: Vec<Interval> = (0..n).map(|k| Interval { lo: k as f64 * h, hi: (k + 1) as f64 * h }).collect();
        let freqs = intervals.iter().map(|iv| gamma(iv.center())).collect();
        Ok(ExpSum { r, alpha, intervals, coeffs, freqs, jittered: false })
    }

    pub fn constant(r: f64, alpha: f64) -> Result<Self> {
        let n = interval_count(r, alpha)?;
        ExpSum::new(r, alpha, vec![Complex64::new(1.0, 0.0); n])
    }

    /// Unimodular coefficients with independent uniform phases.
    pub fn random_phases(r: f64, alpha: f64, seed: u64) -> Result<Self> {
        let n = interval_count(r, alpha)?;
        let mut rng = rng::stream(seed, 0);
        let coeffs = (0..n).map(|_| e(rng.gen::<f64>())).collect();
        ExpSum::new(r, alpha, coeffs)
    }

    /// Moves each frequency to a random point of `N_J(R^-1)`:
    /// `(t, t^2 + s2, t^3 + s3)` with `t` in `J` and `|(s2, s3)| <= R^-1`.
    pub fn with_jitter(mut self, seed: u64) -> Self {
        let mut rng = rng::stream(seed, 1);
        for (iv, xi) in self.intervals.iter().zip(self.freqs.iter_mut()) {
            let t = rng.gen_range(iv.lo..iv.hi);
            let rad = rng.gen::<f64>().sqrt() / self.r;
            let ang = TAU * rng.gen::<f64>();
            *xi = gamma(t) + Vec3::new(0.0, rad * ang.cos(), rad * ang.sin());
        }
        self.jittered = true;
        self
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Indices of the intervals inside `[lo, hi]`.
    pub fn block(&self, lo: f64, hi: f64) -> Range<usize> {
        let inside: Vec<usize> = (0..self.len())
            .filter(|&k| self.intervals[k].lo >= lo - 1e-12 && self.intervals[k].hi <= hi + 1e-12)
            .collect();
        match (inside.first(), inside.last()) {
            (Some(&a), Some(&b)) => a..b + 1,
            _ => 0..0,
        }
    }

    pub fn eval(&self, x: &Vec3) -> Complex64 {
        self.eval_range(x, 0..self.len())
    }

    /// Partial sum over the intervals in `range`.
    pub fn eval_range(&self, x: &Vec3, range: Range<usize>) -> Complex64 {
        if range.is_empty() {
            return Complex64::new(0.0, 0.0);
        }
        if self.jittered {
            return range.map(|k| self.coeffs[k] * e(x.dot(&self.freqs[k]))).sum();
        }
        // centers t_k = t0 + k h: the phase is a cubic in k, advanced by
        // forward differences
        let h = 1.0 / self.len() as f64;
        let t = (range.start as f64 + 0.5) * h;
        let (x1, x2, x3) = (x[0], x[1], x[2]);
        let phase = x1 * t + x2 * t * t + x3 * t * t * t;
        let d1 = x1 * h + x2 * (2.0 * t * h + h * h) + x3 * (3.0 * t * t * h + 3.0 * t * h * h + h * h * h);
        let d2 = 2.0 * x2 * h * h + x3 * (6.0 * t * h * h + 6.0 * h * h * h);
        let d3 = 6.0 * x3 * h * h * h;
        let (mut z, mut s1, mut s2) = (e(phase), e(d1), e(d2));
        let s3 = e(d3);
        let mut acc = Complex64::new(0.0, 0.0);
        for k in range {
            acc += self.coeffs[k] * z;
            z *= s1;
            s1 *= s2;
            s2 *= s3;
        }
        acc
    }

    /// Frequencies scaled to integers by `8 N^3`, for sums at the centers.
    pub fn integer_freqs(&self) -> Option<(Vec<[i64; 3]>, i64)> {
        if self.jittered {
            return None;
        }
        let n = self.len() as i64;
        let keys = (0..n)
            .map(|k| {
                let o = 2 * k + 1;
                [o * 4 * n * n, o * o * 2 * n, o * o * o]
            })
            .collect();
        Some((keys, 8 * n * n * n))
    }
}

/// `F` at each point.
pub fn eval_exp_sum(sum: &ExpSum, points: &[Vec3]) -> Vec<Complex64> {
    points.iter().map(|x| sum.eval(x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recurrence_matches_direct_sum() {
        let s = ExpSum::random_phases(65536.0, 0.5, 4).unwrap();
        let mut rng = rng::stream(5, 0);
        for _ in 0..50 {
            let x = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * 65536.0;
            let direct: Complex64 = (0..s.len()).map(|k| s.coeffs[k] * e(x.dot(&s.freqs[k]))).sum();
            assert!((s.eval(&x) - direct).norm() < 1e-7, "{} vs {}", s.eval(&x), direct);
            let part: Complex64 = (40..90).map(|k| s.coeffs[k] * e(x.dot(&s.freqs[k]))).sum();
            assert!((s.eval_range(&x, 40..90) - part).norm() < 1e-8);
        }
    }

    #[test]
    fn integer_keys_reproduce_frequencies() {
        let s = ExpSum::constant(256.0, 0.5).unwrap();
        let (keys, d) = s.integer_freqs().unwrap();
        for (k, xi) in keys.iter().zip(&s.freqs) {
            for j in 0..3 {
                assert!((k[j] as f64 / d as f64 - xi[j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn jitter_stays_in_neighbourhood() {
        let s = ExpSum::constant(4096.0, 0.5).unwrap().with_jitter(3);
        for (iv, xi) in s.intervals.iter().zip(&s.freqs) {
            assert!(iv.contains(xi[0]));
            let g = gamma(xi[0]);
            assert!((xi - g).norm() <= 1.0 / 4096.0 + 1e-15);
        }
    }

    #[test]
    fn blocks() {
        let s = ExpSum::constant(4096.0, 0.5).unwrap();
        assert_eq!(s.block(0.0, 1.0 / 6.0), 0..10);
        assert_eq!(s.block(2.0 / 3.0, 1.0), 43..64);
        assert!(interval_count(512.0, 0.5).is_err());
    }
}
