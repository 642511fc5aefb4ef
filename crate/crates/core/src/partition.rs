//! Layer decomposition of the union `Omega` of origin-centered sheared base
//! planks into small-plank families.
//!
//! Conventions: `R^{1/3}` must be a power of two. The base planks are the
//! sheared sets `Theta(1, c)` for `c = j R^{-1/3}`, `j < R^{1/3}`. The family
//! `CP_sigma` has centres `s' = k R^{-1/3} / sigma` on `[0, 1)`, so the grids
//! are nested and `CP_1` is the base-plank grid itself.
//!
//! A point of `Omega` belongs to the smallest layer `sigma` for which it lies
//! in some small plank of `CP_sigma`. An optional layer enlargement `f`
//! replaces the small planks by `f Theta` in that test (default `f = 1`).

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::geometry::{small_plank, OrientedBox};
use crate::{rng, Error, Result, Vec3};

/// Default enlargement constant for small-plank containment.
pub const DEFAULT_FACTOR: f64 = 49.0;
/// Enlargement under which covering curves stay inside base planks.
pub const CURVE_FACTOR: f64 = 7.0;

fn cube_root_power(r: f64) -> Result<u32> {
    if !(r >= 64.0) || !r.is_finite() {
        return Err(Error::domain(format!("scale R = {r} below 2^6")));
    }
    let k = r.log2() / 3.0;
    let kr = k.round();
    if (k - kr).abs() > 1e-9 {
        return Err(Error::domain(format!("R^(1/3) must be a power of two, R = {r}")));
    }
    Ok(kr as u32)
}

/// The dyadic angles `R^{-1/3}, 2 R^{-1/3}, ..., 1`.
pub fn dyadic_sigmas(r: f64) -> Result<Vec<f64>> {
    let k = cube_root_power(r)?;
    Ok((0..=k).map(|i| 2f64.powi(i as i32 - k as i32)).collect())
}

/// Scaled residuals of the three defining inequalities of `Theta(sigma, s)`;
/// `w` lies in `f Theta` iff all three are `<= f`.
#[inline]
fn plank_residuals(r13: f64, sigma: f64, s: f64, w: &Vec3) -> [f64; 3] {
    let a = sigma * sigma / r13;
    let b = sigma / (r13 * r13);
    let c = 1.0 / (r13 * r13 * r13);
    [
        w.x.abs() / a,
        (w.y - 2.0 * s * w.x).abs() / b,
        (w.z - 3.0 * s * w.y + 3.0 * s * s * w.x).abs() / c,
    ]
}

#[inline]
fn max3(v: [f64; 3]) -> f64 {
    v[0].max(v[1]).max(v[2])
}

const MEMBER_TOL: f64 = 1.0 + 1e-12;

/// A point on the sheared curve family `s -> (x, y + 2 s x, z + 3 s y + 3 s^2 x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoveringCurve {
    pub seed: Vec3,
    pub r: f64,
}

pub fn covering_curve(seed: Vec3, r: f64) -> Result<CoveringCurve> {
    let r13 = 2f64.powi(cube_root_power(r)? as i32);
    if max3(plank_residuals(r13, 1.0, 0.0, &seed)) > MEMBER_TOL {
        return Err(Error::domain("covering-curve seed lies outside the base plank"));
    }
    Ok(CoveringCurve { seed, r })
}

impl CoveringCurve {
    pub fn eval(&self, s: f64) -> Result<Vec3> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::domain(format!("curve parameter {s} outside [0, 1]")));
        }
        let (x, y, z) = (self.seed.x, self.seed.y, self.seed.z);
        Ok(Vec3::new(x, y + 2.0 * s * x, z + 3.0 * s * y + 3.0 * s * s * x))
    }
}

/// Small-plank family `CP_sigma`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionLayer {
    pub r: f64,
    pub sigma: f64,
    pub spacing: f64,
    pub centers: Vec<f64>,
    #[serde(skip)]
    r13: f64,
}

pub fn build_cp_family(r: f64, sigma: f64) -> Result<PartitionLayer> {
    let k = cube_root_power(r)?;
    let r13 = 2f64.powi(k as i32);
    let lg = sigma.log2();
    if !(sigma > 0.0) || (lg - lg.round()).abs() > 1e-9 {
        return Err(Error::domain(format!("sigma = {sigma} is not dyadic")));
    }
    if lg.round() < -(k as f64) || lg.round() > 0.0 {
        return Err(Error::domain(format!("sigma = {sigma} outside [R^-1/3, 1]")));
    }
    let count = (sigma * r13).round() as usize;
    let spacing = 1.0 / (sigma * r13);
    let centers = (0..count).map(|i| i as f64 * spacing).collect();
    Ok(PartitionLayer {
        r,
        sigma,
        spacing,
        centers,
        r13,
    })
}

impl PartitionLayer {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn plank(&self, k: usize) -> Result<OrientedBox> {
        small_plank(self.r, self.sigma, self.centers[k])
    }

    /// Smallest `f` with `w` in `f Theta_k`.
    pub fn needed_factor(&self, w: &Vec3, k: usize) -> f64 {
        max3(plank_residuals(self.r13, self.sigma, self.centers[k], w))
    }

    pub fn contains(&self, w: &Vec3, k: usize, factor: f64) -> bool {
        self.needed_factor(w, k) <= factor * MEMBER_TOL
    }

    /// Whether `w` lies in the union of the family enlarged by `factor`.
    pub fn covers(&self, w: &Vec3, factor: f64) -> bool {
        (0..self.len()).any(|k| self.contains(w, k, factor))
    }

    pub fn multiplicity(&self, w: &Vec3, factor: f64) -> usize {
        (0..self.len()).filter(|&k| self.contains(w, k, factor)).count()
    }

    /// Small planks associated with the base plank at `c`:
    /// those with `|c - s'| <= R^{-1/3} / sigma`.
    pub fn associated(&self, c: f64) -> Vec<usize> {
        (0..self.len())
            .filter(|&k| (c - self.centers[k]).abs() <= self.spacing * MEMBER_TOL)
            .collect()
    }
}

/// Layer assignment of a point of `Omega`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Classification {
    pub sigma: f64,
    /// Index into `CP_sigma` of a small plank whose enlargement holds the point.
    pub index: usize,
    pub multiplicity: usize,
}

/// All layers at one scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Partition {
    pub r: f64,
    /// Enlargement used for multiplicities and containment.
    pub factor: f64,
    /// Enlargement used to decide layer membership.
    pub layer_factor: f64,
    pub layers: Vec<PartitionLayer>,
}

impl Partition {
    pub fn new(r: f64, factor: f64) -> Result<Self> {
        if !(factor >= 1.0) {
            return Err(Error::domain("enlargement factor must be at least 1"));
        }
        let layers = dyadic_sigmas(r)?
            .into_iter()
            .map(|s| build_cp_family(r, s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Partition {
            r,
            factor,
            layer_factor: 1.0,
            layers,
        })
    }

    pub fn with_layer_factor(mut self, layer_factor: f64) -> Result<Self> {
        if !(layer_factor >= 1.0) {
            return Err(Error::domain("layer enlargement must be at least 1"));
        }
        self.layer_factor = layer_factor;
        Ok(self)
    }

    /// The base-plank family (`sigma = 1`).
    pub fn base(&self) -> &PartitionLayer {
        self.layers.last().expect("at least one layer")
    }

    pub fn in_union(&self, w: &Vec3) -> bool {
        self.base().covers(w, 1.0)
    }

    /// Index of the layer holding `w`, or `NotInUnion`.
    pub fn layer_of(&self, w: &Vec3) -> Result<usize> {
        if !self.in_union(w) {
            return Err(Error::NotInUnion);
        }
        let li = self.layers.iter().position(|l| l.covers(w, self.layer_factor));
        Ok(li.expect("base layer covers"))
    }

    pub fn classify(&self, w: &Vec3) -> Result<Classification> {
        let li = self.layer_of(w)?;
        let layer = &self.layers[li];
        let index = (0..layer.len())
            .min_by(|&a, &b| layer.needed_factor(w, a).total_cmp(&layer.needed_factor(w, b)))
            .expect("nonempty layer");
        Ok(Classification {
            sigma: layer.sigma,
            index,
            multiplicity: layer.multiplicity(w, self.factor),
        })
    }
}

pub fn classify_point(w: &Vec3, r: f64) -> Result<Classification> {
    Partition::new(r, DEFAULT_FACTOR)?.classify(w)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerCount {
    pub sigma: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionReport {
    #[serde(rename = "R")]
    pub r: f64,
    pub sigma_layers: Vec<LayerCount>,
    pub max_multiplicity: usize,
    pub violations: usize,
    pub coverage: f64,
    pub samples: usize,
    pub seed: u64,
    pub factor: f64,
    pub layer_factor: f64,
    /// Largest enlargement actually needed by an associated pair.
    pub needed_factor: f64,
    pub nesting_violations: usize,
}

#[derive(Debug, Default, Clone)]
struct Tally {
    layers: Vec<usize>,
    max_mult: usize,
    violations: usize,
    classified: usize,
    needed: f64,
    nesting: usize,
}

impl Tally {
    fn merge(mut self, o: Tally) -> Tally {
        if self.layers.is_empty() {
            self.layers = vec![0; o.layers.len()];
        }
        for (a, b) in self.layers.iter_mut().zip(&o.layers) {
            *a += b;
        }
        self.max_mult = self.max_mult.max(o.max_mult);
        self.violations += o.violations;
        self.classified += o.classified;
        self.needed = self.needed.max(o.needed);
        self.nesting += o.nesting;
        self
    }
}

/// Draw a point of `Omega`: even indices come from a uniformly chosen base
/// plank, odd indices from a uniformly chosen small plank of a uniformly
/// chosen layer (so that every layer is exercised).
pub fn sample_point(partition: &Partition, seed: u64, index: u64) -> Vec3 {
    let mut g = rng::stream(seed, index);
    let layer = if index % 2 == 0 {
        partition.base()
    } else {
        &partition.layers[g.gen_range(0..partition.layers.len())]
    };
    let k = g.gen_range(0..layer.len());
    let u = Vec3::new(g.gen_range(-1.0..1.0), g.gen_range(-1.0..1.0), g.gen_range(-1.0..1.0));
    let r13 = layer.r13;
    let (sigma, s) = (layer.sigma, layer.centers[k]);
    let w1 = u.x * sigma * sigma / r13;
    let v2 = u.y * sigma / (r13 * r13);
    let v3 = u.z / (r13 * r13 * r13);
    // invert the shear: w2 = v2 + 2 s w1, w3 = v3 + 3 s w2 - 3 s^2 w1
    let w2 = v2 + 2.0 * s * w1;
    let w3 = v3 + 3.0 * s * w2 - 3.0 * s * s * w1;
    Vec3::new(w1, w2, w3)
}

pub fn verify_partition_lemmas(r: f64, samples: usize, seed: u64) -> Result<PartitionReport> {
    verify_partition_lemmas_with(r, samples, seed, DEFAULT_FACTOR, 1.0)
}

pub fn verify_partition_lemmas_with(
    r: f64,
    samples: usize,
    seed: u64,
    factor: f64,
    layer_factor: f64,
) -> Result<PartitionReport> {
    let partition = Partition::new(r, factor)?.with_layer_factor(layer_factor)?;
    let nl = partition.layers.len();
    let base = partition.base();
    const CHUNK: usize = 4096;
    let chunks = samples.div_ceil(CHUNK);
    let tallies: Vec<Tally> = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let mut t = Tally {
                layers: vec![0; nl],
                ..Tally::default()
            };
            for i in ci * CHUNK..((ci + 1) * CHUNK).min(samples) {
                let w = sample_point(&partition, seed, i as u64);
                if !partition.in_union(&w) {
                    continue;
                }
                let covered: Vec<bool> = partition.layers.iter().map(|l| l.covers(&w, layer_factor)).collect();
                if covered.windows(2).any(|p| p[0] && !p[1]) {
                    t.nesting += 1;
                }
                let Some(li) = covered.iter().position(|&c| c) else {
                    continue;
                };
                t.classified += 1;
                t.layers[li] += 1;
                let layer = &partition.layers[li];
                t.max_mult = t.max_mult.max(layer.multiplicity(&w, factor));
                for (j, &c) in base.centers.iter().enumerate() {
                    if !base.contains(&w, j, 1.0) {
                        continue;
                    }
                    for k in layer.associated(c) {
                        let need = layer.needed_factor(&w, k);
                        t.needed = t.needed.max(need);
                        if need > factor * MEMBER_TOL {
                            t.violations += 1;
                        }
                    }
                }
            }
            t
        })
        .collect();
    let total = tallies.into_iter().fold(Tally::default(), Tally::merge);
    let layers = if total.layers.is_empty() { vec![0; nl] } else { total.layers };
    Ok(PartitionReport {
        r,
        sigma_layers: partition
            .layers
            .iter()
            .zip(layers)
            .map(|(l, count)| LayerCount { sigma: l.sigma, count })
            .collect(),
        max_multiplicity: total.max_mult,
        violations: total.violations,
        coverage: if samples == 0 { 0.0 } else { total.classified as f64 / samples as f64 },
        samples,
        seed,
        factor,
        layer_factor,
        needed_factor: total.needed,
        nesting_violations: total.nesting,
    })
}
