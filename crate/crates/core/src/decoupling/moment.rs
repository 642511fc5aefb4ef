use std::collections::HashMap;
use std::str::FromStr;

use num_complex::Complex64;
use num_integer::Integer;
use rand::Rng as _;
use rand_distr::{Beta, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ExpSum;
use crate::{rng, Error, Result, Vec3};

/// Smallest accepted sample budget.
pub const MIN_SAMPLES: usize = 1000;
/// Largest resonance set used for importance sampling.
pub const RESONANCE_CAP: usize = 4_000_000;
/// Largest spectral table built by the lattice sampler.
pub const SPECTRAL_CAP: usize = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampler {
    MonteCarlo,
    Lattice,
}

impl FromStr for Sampler {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "monte-carlo" | "mc" => Ok(Sampler::MonteCarlo),
            "lattice" => Ok(Sampler::Lattice),
            other => Err(Error::config("sampler", format!("unknown sampler `{other}`"))),
        }
    }
}

/// Averaging domain: the cube `[-R, R]^3` or the weight `(1 + |x|/R)^-300`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    Cube,
    Weighted,
}

impl FromStr for Domain {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cube" => Ok(Domain::Cube),
            "weighted" => Ok(Domain::Weighted),
            other => Err(Error::config("domain", format!("unknown domain `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentOptions {
    pub sampler: Sampler,
    pub domain: Domain,
    pub samples: usize,
    pub seed: u64,
    /// Batches for the batch-means standard error.
    pub batches: usize,
    /// Share of samples drawn near resonant points (cube domain, commensurate sums).
    pub resonance: f64,
}

impl Default for MomentOptions {
    fn default() -> Self {
        MomentOptions {
            sampler: Sampler::MonteCarlo,
            domain: Domain::Cube,
            samples: 1_000_000,
            seed: 0,
            batches: 20,
            resonance: 0.25,
        }
    }
}

impl MomentOptions {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }
}

/// `(avg |F|^p)^{1/p}` over the domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub p: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub alpha: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
    pub sampler: String,
}

/// Points of `[-R, R]^3` where the phases `x . xi_J` of all nonzero terms
/// agree mod 1, for sums with frequencies at the interval centers. `None` when the set is
/// not discrete or larger than [`RESONANCE_CAP`].
pub fn resonance_points(sum: &ExpSum, r: f64) -> Option<Vec<Vec3>> {
    let (keys, d) = sum.integer_freqs()?;
    let keys: Vec<[i64; 3]> = keys.into_iter().zip(&sum.coeffs).filter(|(_, a)| a.norm() > 0.0).map(|(k, _)| k).collect();
    let diffs: Vec<[i128; 3]> = keys
        .iter()
        .skip(1)
        .map(|k| [0, 1, 2].map(|j| (k[j] - keys[0][j]) as i128))
        .collect();
    let basis = triangular_basis(&diffs)?;
    // x is resonant iff basis * x lies in d Z^3
    let d = d as f64;
    let [a, b, g] = basis[0].map(|v| v as f64);
    let [_, c, e] = basis[1].map(|v| v as f64);
    let f = basis[2][2] as f64;
    let estimate = (2.0 * r).powi(3) * a * c * f / d.powi(3);
    if !(estimate <= RESONANCE_CAP as f64) {
        return None;
    }
    let tol = 1e-9 * r.max(1.0);
    let span = |centre: f64, half: f64| ((centre - half - tol) / d).ceil() as i64..=((centre + half + tol) / d).floor() as i64;
    let mut out = Vec::new();
    for m2 in span(0.0, r * f) {
        let x3 = d * m2 as f64 / f;
        for m1 in span(e * x3, c * r) {
            let x2 = (d * m1 as f64 - e * x3) / c;
            for m0 in span(b * x2 + g * x3, a * r) {
                let x1 = (d * m0 as f64 - b * x2 - g * x3) / a;
                out.push(Vec3::new(x1, x2, x3));
                if out.len() > RESONANCE_CAP {
                    return None;
                }
            }
        }
    }
    Some(out)
}

/// Upper-triangular basis with positive pivots for the lattice spanned by
/// `vs`; `None` when the span has rank below 3.
fn triangular_basis(vs: &[[i128; 3]]) -> Option<[[i128; 3]; 3]> {
    let mut rows: [Option<[i128; 3]>; 3] = [None; 3];
    for v in vs {
        let mut v = *v;
        for i in 0..3 {
            reduce_tail(&mut v, &rows, i);
            if v[i] == 0 {
                continue;
            }
            match rows[i] {
                None => {
                    if v[i] < 0 {
                        v = v.map(|x| -x);
                    }
                    rows[i] = Some(v);
                    break;
                }
                Some(row) => {
                    let eg = row[i].extended_gcd(&v[i]);
                    let mut top = [0, 1, 2].map(|j| eg.x * row[j] + eg.y * v[j]);
                    let (p, q) = (row[i] / eg.gcd, v[i] / eg.gcd);
                    v = [0, 1, 2].map(|j| p * v[j] - q * row[j]);
                    if top[i] < 0 {
                        top = top.map(|x| -x);
                    }
                    reduce_tail(&mut top, &rows, i + 1);
                    rows[i] = Some(top);
                }
            }
        }
    }
    let mut out = [rows[0]?, rows[1]?, rows[2]?];
    for i in 0..3 {
        let mut row = out[i];
        reduce_tail(&mut row, &rows, i + 1);
        out[i] = row;
    }
    Some(out)
}

/// Reduces entries `from..` of `v` modulo the pivots of the rows below.
fn reduce_tail(v: &mut [i128; 3], rows: &[Option<[i128; 3]>; 3], from: usize) {
    for j in from..3 {
        if let Some(row) = rows[j] {
            let q = Integer::div_floor(&v[j], &row[j]);
            if q != 0 {
                for k in j..3 {
                    v[k] -= q * row[k];
                }
            }
        }
    }
}

/// Mixture proposal: uniform on the cube plus uniform cubes of several
/// half-widths around resonant points.
struct Resonance {
    points: Vec<Vec3>,
    halves: Vec<f64>,
    cell: f64,
    grid: HashMap<[i64; 3], Vec<u32>>,
    share: f64,
}

impl Resonance {
    fn new(points: Vec<Vec3>, r: f64, share: f64) -> Option<Self> {
        let halves: Vec<f64> = [1.0, 4.0, 16.0, 64.0].into_iter().filter(|&h| h <= r / 8.0).collect();
        if points.is_empty() || halves.is_empty() || share <= 0.0 {
            return None;
        }
        let cell = 2.0 * halves[halves.len() - 1];
        let mut grid: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            grid.entry(p.map(|c| (c / cell).floor() as i64).into()).or_default().push(i as u32);
        }
        Some(Resonance { points, halves, cell, grid, share })
    }

    fn draw(&self, rng: &mut impl rand::Rng, r: f64) -> Vec3 {
        if rng.gen::<f64>() >= self.share {
            return Vec3::from_fn(|_, _| rng.gen_range(-r..r));
        }
        let h = self.halves[rng.gen_range(0..self.halves.len())];
        let p = self.points[rng.gen_range(0..self.points.len())];
        p + Vec3::from_fn(|_, _| rng.gen_range(-h..h))
    }

    /// Density of the uniform law on the cube over the proposal density.
    fn weight(&self, x: &Vec3, r: f64) -> f64 {
        let hmax = self.halves[self.halves.len() - 1];
        let lo = (x - Vec3::repeat(hmax)).map(|c| (c / self.cell).floor() as i64);
        let hi = (x + Vec3::repeat(hmax)).map(|c| (c / self.cell).floor() as i64);
        let mut counts = [0usize; 4];
        for i in lo[0]..=hi[0] {
            for j in lo[1]..=hi[1] {
                for k in lo[2]..=hi[2] {
                    let Some(bucket) = self.grid.get(&[i, j, k]) else { continue };
                    for &idx in bucket {
                        let dist = (x - self.points[idx as usize]).amax();
                        for (c, &h) in counts.iter_mut().zip(&self.halves) {
                            if dist <= h {
                                *c += 1;
                            }
                        }
                    }
                }
            }
        }
        let vol = (2.0 * r).powi(3);
        let per = self.share / self.halves.len() as f64 / self.points.len() as f64;
        let extra: f64 = counts.iter().zip(&self.halves).map(|(&c, &h)| per * c as f64 * vol / (2.0 * h).powi(3)).sum();
        1.0 / ((1.0 - self.share) + extra)
    }
}

/// Batch-means estimates of `avg g(x)^p` for each `p`, with standard errors.
fn power_means<G>(r: f64, opts: &MomentOptions, resonance: Option<&Resonance>, ps: &[f64], g: G) -> Result<Vec<(f64, f64)>>
where
    G: Fn(&Vec3) -> f64 + Sync,
{
    if opts.samples < MIN_SAMPLES {
        return Err(Error::SampleBudget(opts.samples));
    }
    if !(r > 0.0) {
        return Err(Error::domain(format!("domain radius {r} must be positive")));
    }
    let batches = opts.batches.clamp(2, opts.samples);
    let beta = Beta::new(3.0, 297.0).expect("valid beta parameters");
    let sums: Vec<Vec<f64>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng::stream(opts.seed, b as u64);
            let count = opts.samples / batches + usize::from(b < opts.samples % batches);
            let mut acc = vec![0.0; ps.len()];
            for _ in 0..count {
                let (x, w) = match (opts.domain, resonance) {
                    (Domain::Weighted, _) => {
                        // radius r v/(1-v) with v ~ Beta(3, 297) has density
                        // proportional to rho^2 (1 + rho/r)^-300
                        let v: f64 = beta.sample(&mut rng);
                        let dir = Vec3::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal)).normalize();
                        (dir * (r * v / (1.0 - v)), 1.0)
                    }
                    (Domain::Cube, Some(res)) => {
                        let x = res.draw(&mut rng, r);
                        if x.amax() > r {
                            (x, 0.0)
                        } else {
                            (x, res.weight(&x, r))
                        }
                    }
                    (Domain::Cube, None) => (Vec3::from_fn(|_, _| rng.gen_range(-r..r)), 1.0),
                };
                if w == 0.0 {
                    continue;
                }
                let v = g(&x);
                for (a, &p) in acc.iter_mut().zip(ps) {
                    *a += w * v.powf(p);
                }
            }
            acc.iter().map(|a| a / count as f64).collect()
        })
        .collect();
    let nb = batches as f64;
    Ok((0..ps.len())
        .map(|i| {
            let mean = sums.iter().map(|s| s[i]).sum::<f64>() / nb;
            let var = sums.iter().map(|s| (s[i] - mean).powi(2)).sum::<f64>() / (nb - 1.0);
            (mean, (var / nb).sqrt())
        })
        .collect())
}

/// `(m^{1/p}, stderr)` from a mean of `p`-th powers, by the delta method.
fn root(mean: f64, se: f64, p: f64) -> (f64, f64) {
    let est = mean.powf(1.0 / p);
    let se = if mean > 0.0 { est * se / (p * mean) } else { 0.0 };
    (est, se)
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::domain(format!("moment exponent {p} must be at least 1")));
    }
    Ok(())
}

/// Mean of `|F|^p` over a full period cell for even `p`, from the
/// coefficients of `F^{p/2}` on the integer frequency lattice.
pub fn spectral_mean(sum: &ExpSum, p: f64) -> Result<(f64, usize)> {
    let half = p / 2.0;
    if half.fract() != 0.0 || half < 1.0 {
        return Err(Error::domain(format!("lattice sampler needs an even p, got {p}")));
    }
    let (keys, _) = sum
        .integer_freqs()
        .ok_or_else(|| Error::domain("lattice sampler needs frequencies at the interval centers"))?;
    let mut table: HashMap<[i64; 3], Complex64> = HashMap::new();
    table.insert([0, 0, 0], Complex64::new(1.0, 0.0));
    for _ in 0..half as usize {
        if table.len().saturating_mul(keys.len()) > SPECTRAL_CAP {
            return Err(Error::domain(format!(
                "lattice sampler needs more than {SPECTRAL_CAP} spectral terms; use monte-carlo"
            )));
        }
        let mut next: HashMap<[i64; 3], Complex64> = HashMap::with_capacity(table.len() * keys.len());
        for (v, c) in &table {
            for (k, a) in keys.iter().zip(&sum.coeffs) {
                *next.entry([v[0] + k[0], v[1] + k[1], v[2] + k[2]]).or_default() += c * a;
            }
        }
        table = next;
    }
    let terms = table.len();
    Ok((table.values().map(|c| c.norm_sqr()).sum(), terms))
}

/// Normalized `L^p` average of the exponential sum.
pub fn lp_moment(sum: &ExpSum, p: f64, r: f64, opts: &MomentOptions) -> Result<MomentEstimate> {
    Ok(lp_moments(sum, &[p], r, opts)?.remove(0))
}

/// [`lp_moment`] for several exponents from one set of samples.
pub fn lp_moments(sum: &ExpSum, ps: &[f64], r: f64, opts: &MomentOptions) -> Result<Vec<MomentEstimate>> {
    for &p in ps {
        check_p(p)?;
    }
    let make = |p: f64, (estimate, stderr): (f64, f64), samples: usize, sampler: &str| MomentEstimate {
        p,
        r,
        alpha: sum.alpha,
        estimate,
        stderr,
        samples,
        seed: opts.seed,
        sampler: sampler.into(),
    };
    match opts.sampler {
        Sampler::Lattice => ps
            .iter()
            .map(|&p| {
                let (mean, terms) = spectral_mean(sum, p)?;
                Ok(make(p, (mean.powf(1.0 / p), 0.0), terms, "lattice"))
            })
            .collect(),
        Sampler::MonteCarlo => {
            let resonance = match opts.domain {
                Domain::Cube if opts.resonance > 0.0 => {
                    resonance_points(sum, r).and_then(|pts| Resonance::new(pts, r, opts.resonance.min(0.9)))
                }
                _ => None,
            };
            let label = if resonance.is_some() { "monte-carlo+resonance" } else { "monte-carlo" };
            let means = power_means(r, opts, resonance.as_ref(), ps, |x| sum.eval(x).norm())?;
            Ok(ps
                .iter()
                .zip(means)
                .map(|(&p, (m, se))| make(p, root(m, se, p), opts.samples, label))
                .collect())
        }
    }
}

/// Normalized `L^p` averages of `|(F_1 F_2 F_3)|^{1/3}` for blocks of the sum.
pub(crate) fn trilinear_moments(
    sum: &ExpSum,
    blocks: &[std::ops::Range<usize>; 3],
    ps: &[f64],
    r: f64,
    opts: &MomentOptions,
) -> Result<Vec<(f64, f64)>> {
    for &p in ps {
        check_p(p)?;
    }
    if opts.sampler == Sampler::Lattice {
        return Err(Error::domain("the trilinear average has no lattice sampler"));
    }
    let resonance = match opts.domain {
        Domain::Cube if opts.resonance > 0.0 => {
            resonance_points(sum, r).and_then(|pts| Resonance::new(pts, r, opts.resonance.min(0.9)))
        }
        _ => None,
    };
    let g = |x: &Vec3| {
        let prod: f64 = blocks.iter().map(|b| sum.eval_range(x, b.clone()).norm()).product();
        prod.cbrt()
    };
    Ok(power_means(r, opts, resonance.as_ref(), ps, g)?
        .into_iter()
        .zip(ps)
        .map(|((m, se), &p)| root(m, se, p))
        .collect())
}
