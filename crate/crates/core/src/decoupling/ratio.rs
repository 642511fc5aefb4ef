use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::moment::trilinear_moments;
use super::{lp_moments, ExpSum, MomentEstimate, MomentOptions};
use crate::{rng, Error, Result};

/// The three frequency blocks of the trilinear form.
pub const TRILINEAR_BLOCKS: [(f64, f64); 3] = [(0.0, 1.0 / 6.0), (1.0 / 3.0, 0.5), (2.0 / 3.0, 1.0)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    pub p: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub alpha: f64,
    pub ratio: f64,
    pub stderr: f64,
    pub moment: MomentEstimate,
}

/// `R^{alpha (1/2 - 1/p)} (sum |a_J|^p)^{1/p}`: each `P_J F` is a single
/// plane wave, so its normalized `L^p` average is `|a_J|`.
fn right_side(sum: &ExpSum, p: f64) -> Result<f64> {
    let lp: f64 = sum.coeffs.iter().map(|a| a.norm().powf(p)).sum();
    if lp == 0.0 {
        return Err(Error::domain("all coefficients are zero"));
    }
    Ok(sum.r.powf(sum.alpha * (0.5 - 1.0 / p)) * lp.powf(1.0 / p))
}

/// Decoupling ratio over `B_R` with `R = sum.r`.
pub fn decoupling_ratio(sum: &ExpSum, p: f64, opts: &MomentOptions) -> Result<RatioEstimate> {
    Ok(decoupling_ratios(sum, &[p], opts)?.remove(0))
}

/// [`decoupling_ratio`] for several exponents from one set of samples.
pub fn decoupling_ratios(sum: &ExpSum, ps: &[f64], opts: &MomentOptions) -> Result<Vec<RatioEstimate>> {
    let rhs = ps.iter().map(|&p| right_side(sum, p)).collect::<Result<Vec<_>>>()?;
    Ok(lp_moments(sum, ps, sum.r, opts)?
        .into_iter()
        .zip(rhs)
        .map(|(m, d)| RatioEstimate {
            p: m.p,
            r: sum.r,
            alpha: sum.alpha,
            ratio: m.estimate / d,
            stderr: m.stderr / d,
            moment: m,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrilinearEstimate {
    pub p: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub ratio: f64,
    pub stderr: f64,
}

/// `||(F_1 F_2 F_3)^{1/3}||_p` over the right side of [`decoupling_ratio`].
pub fn trilinear_ratio(sum: &ExpSum, p: f64, opts: &MomentOptions) -> Result<TrilinearEstimate> {
    let blocks = TRILINEAR_BLOCKS.map(|(lo, hi)| sum.block(lo, hi));
    for (b, (lo, hi)) in blocks.iter().zip(TRILINEAR_BLOCKS) {
        if b.is_empty() || sum.coeffs[b.clone()].iter().all(|a| a.norm() == 0.0) {
            return Err(Error::domain(format!("block [{lo:.4}, {hi:.4}] carries no coefficients")));
        }
    }
    let d = right_side(sum, p)?;
    let (m, se) = trilinear_moments(sum, &blocks, &[p], sum.r, opts)?[0];
    Ok(TrilinearEstimate { p, r: sum.r, ratio: m / d, stderr: se / d })
}

/// Least-squares line through `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::domain("a line fit needs at least two paired points"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("a line fit needs distinct abscissae"));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok(LineFit { slope, intercept: my - slope * mx })
}

/// Slope of `log D` against `log R`.
pub fn log_slope(rs: &[f64], ds: &[f64]) -> Result<f64> {
    let xs: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = ds.iter().map(|d| d.ln()).collect();
    Ok(fit_line(&xs, &ys)?.slope)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatReport {
    pub blocks: usize,
    pub p: f64,
    pub block_len: usize,
    pub trials: usize,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
}

/// Mean of `|f|^p` over the circle from `q` equispaced samples of a
/// trigonometric polynomial with frequencies `0..coeffs.len()`.
fn circle_mean(coeffs: &[Complex64], p: f64, q: usize) -> f64 {
    (0..q)
        .map(|j| {
            let x = j as f64 / q as f64;
            let step = Complex64::from_polar(1.0, TAU * x);
            let mut z = Complex64::new(1.0, 0.0);
            let mut acc = Complex64::new(0.0, 0.0);
            for a in coeffs {
                acc += a * z;
                z *= step;
            }
            acc.norm().powf(p)
        })
        .sum::<f64>()
        / q as f64
}

/// Flat decoupling on the circle: frequencies `0..L*block_len` split into
/// `L` congruent blocks, Gaussian coefficients, ratio
/// `||F||_p / (L^{1-2/p} (sum_i ||P_i F||_p^p)^{1/p})` per trial.
pub fn flat_decoupling_check(blocks: usize, p: f64, trials: usize, block_len: usize, seed: u64) -> Result<FlatReport> {
    if blocks < 1 || block_len < 1 || trials < 1 {
        return Err(Error::domain("flat decoupling needs L, block length and trials of at least 1"));
    }
    if !(p >= 2.0) {
        return Err(Error::domain(format!("flat decoupling needs p >= 2, got {p}")));
    }
    let m = blocks * block_len;
    // q > p (m - 1) makes the mean exact for even p; other p use a finer grid
    let q = if p.fract() == 0.0 && (p as usize) % 2 == 0 { p as usize * m + 1 } else { 8 * (p.ceil() as usize) * m };
    let ratios: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::stream(seed, t as u64);
            let coeffs: Vec<Complex64> = (0..m)
                .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
            let whole = circle_mean(&coeffs, p, q).powf(1.0 / p);
            let pieces: f64 = coeffs.chunks(block_len).map(|c| circle_mean(c, p, q)).sum();
            whole / ((blocks as f64).powf(1.0 - 2.0 / p) * pieces.powf(1.0 / p))
        })
        .collect();
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(FlatReport { blocks, p, block_len, trials, ratios, max_ratio })
}

/// One `(R, trial)` cell of the criticality sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalityRow {
    #[serde(rename = "R")]
    pub r: f64,
    pub coefficients: String,
    pub p: f64,
    pub trial: usize,
    pub ratio: f64,
    pub stderr: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalityReport {
    pub rows: Vec<CriticalityRow>,
    /// Slope of the median random-phase ratio at p = 10.
    pub slope_random_p10: f64,
    pub slope_constant_p10: f64,
    pub slope_constant_p14: f64,
    pub slope_gap: f64,
}

pub const RANDOM_SLOPE_CAP: f64 = 0.05;
pub const SLOPE_GAP_MIN: f64 = 0.02;

impl CriticalityReport {
    pub fn pass(&self) -> bool {
        self.slope_random_p10 <= RANDOM_SLOPE_CAP && self.slope_gap >= SLOPE_GAP_MIN
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Ratios at `alpha = 1/2` over `rs`: random unimodular phases at p = 10 and
/// constant coefficients at p = 10 and 14, `trials` sampling seeds each;
/// slopes of the per-R medians.
pub fn criticality_sweep(rs: &[f64], trials: usize, opts: &MomentOptions) -> Result<CriticalityReport> {
    if rs.len() < 2 || trials < 1 {
        return Err(Error::domain("the sweep needs two scales and one trial"));
    }
    criticality_summary(criticality_rows(rs, 0..trials, opts)?)
}

/// The rows of [`criticality_sweep`] for the trial indices in `trials`.
pub fn criticality_rows(rs: &[f64], trials: std::ops::Range<usize>, opts: &MomentOptions) -> Result<Vec<CriticalityRow>> {
    let mut rows = Vec::new();
    for &r in rs {
        for t in trials.clone() {
            let seed = rng::derive(opts.seed, ((r.log2().round() as u64) << 32) | t as u64);
            let mopts = MomentOptions { seed, ..*opts };
            let random = ExpSum::random_phases(r, 0.5, seed)?;
            let est = decoupling_ratio(&random, 10.0, &mopts)?;
            rows.push(CriticalityRow { r, coefficients: "random".into(), p: 10.0, trial: t, ratio: est.ratio, stderr: est.stderr, seed });
            let constant = ExpSum::constant(r, 0.5)?;
            for est in decoupling_ratios(&constant, &[10.0, 14.0], &mopts)? {
                rows.push(CriticalityRow {
                    r,
                    coefficients: "constant".into(),
                    p: est.p,
                    trial: t,
                    ratio: est.ratio,
                    stderr: est.stderr,
                    seed,
                });
            }
        }
    }
    Ok(rows)
}

/// Slopes of the per-R medians of `rows`.
pub fn criticality_summary(rows: Vec<CriticalityRow>) -> Result<CriticalityReport> {
    let mut rs: Vec<f64> = rows.iter().map(|x| x.r).collect();
    rs.sort_by(f64::total_cmp);
    rs.dedup();
    if rs.len() < 2 {
        return Err(Error::domain("the sweep needs two scales"));
    }
    let slope = |kind: &str, p: f64| -> Result<f64> {
        let meds = rs
            .iter()
            .map(|&r| {
                let v: Vec<f64> = rows.iter().filter(|x| x.r == r && x.coefficients == kind && x.p == p).map(|x| x.ratio).collect();
                if v.is_empty() {
                    return Err(Error::domain(format!("no {kind} rows at p = {p}, R = {r}")));
                }
                Ok(median(v))
            })
            .collect::<Result<Vec<f64>>>()?;
        log_slope(&rs, &meds)
    };
    let slope_random_p10 = slope("random", 10.0)?;
    let slope_constant_p10 = slope("constant", 10.0)?;
    let slope_constant_p14 = slope("constant", 14.0)?;
    Ok(CriticalityReport {
        rows,
        slope_random_p10,
        slope_constant_p10,
        slope_constant_p14,
        slope_gap: slope_constant_p14 - slope_constant_p10,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(samples: usize) -> MomentOptions {
        MomentOptions::default().with_samples(samples)
    }

    #[test]
    fn single_interval_ratio() {
        let r = 4096.0;
        let mut a = vec![Complex64::new(0.0, 0.0); 64];
        a[17] = Complex64::new(0.0, 2.0);
        let s = ExpSum::new(r, 0.5, a).unwrap();
        for p in [4.0, 10.0, 14.0] {
            let d = decoupling_ratio(&s, p, &opts(1000)).unwrap();
            let want = r.powf(-0.5 * (0.5 - 1.0 / p));
            assert!((d.ratio - want).abs() < 1e-9 * want);
        }
        let zero = ExpSum::new(r, 0.5, vec![Complex64::new(0.0, 0.0); 64]).unwrap();
        assert!(decoupling_ratio(&zero, 10.0, &opts(1000)).is_err());
    }

    #[test]
    fn one_wave_per_block_trilinear() {
        let r = 4096.0;
        let mut a = vec![Complex64::new(0.0, 0.0); 64];
        for k in [3, 25, 50] {
            a[k] = Complex64::new(1.0, 0.0);
        }
        let s = ExpSum::new(r, 0.5, a).unwrap();
        let t = trilinear_ratio(&s, 10.0, &opts(1000)).unwrap();
        let want = 1.0 / (r.powf(0.5 * 0.4) * 3f64.powf(0.1));
        assert!((t.ratio - want).abs() < 1e-9 * want, "{} {}", t.ratio, want);
        let mut b = vec![Complex64::new(0.0, 0.0); 64];
        b[3] = Complex64::new(1.0, 0.0);
        assert!(trilinear_ratio(&ExpSum::new(r, 0.5, b).unwrap(), 10.0, &opts(1000)).is_err());
    }

    #[test]
    fn line_fit_recovers_slope() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 0.3 * x - 1.0).collect();
        let f = fit_line(&xs, &ys).unwrap();
        assert!((f.slope - 0.3).abs() < 1e-12 && (f.intercept + 1.0).abs() < 1e-12);
    }

    #[test]
    fn flat_decoupling_trivial_cases() {
        let one = flat_decoupling_check(1, 10.0, 5, 8, 1).unwrap();
        assert!(one.ratios.iter().all(|r| (r - 1.0).abs() < 1e-9));
        let two = flat_decoupling_check(8, 2.0, 5, 4, 1).unwrap();
        assert!(two.ratios.iter().all(|r| (r - 1.0).abs() < 1e-9));
        let ten = flat_decoupling_check(16, 10.0, 10, 4, 1).unwrap();
        assert!(ten.max_ratio <= 1.0, "{}", ten.max_ratio);
    }
}
