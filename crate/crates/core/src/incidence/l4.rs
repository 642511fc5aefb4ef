use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use super::BoxFamily;
use crate::geometry::{boxes_intersect, make_box, ConvexPolytope, Interval, OrientedBox, Role, Scale};
use crate::{rng, Error, Mat3, Result, Vec3};

/// Largest `1/delta` accepted by the exact method.
pub const EXACT_DELTA_CAP: usize = 32;
/// Largest number of intersection terms the exact method will clip.
pub const EXACT_TERM_CAP: usize = 2_000_000;

/// Surjections from a 4-element set onto a `k`-element set.
const SURJECTIONS: [f64; 5] = [0.0, 1.0, 14.0, 36.0, 24.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum L4Method {
    Exact,
    MonteCarlo { samples: usize, seed: u64 },
}

/// `int (sum 1_P)^4` and `int sum 1_P`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct L4Sums {
    pub l4: f64,
    pub l1: f64,
    /// Standard error of `l4`; zero for the exact method.
    pub stderr: f64,
    /// Intersection terms clipped, or points sampled.
    pub work: usize,
}

impl L4Sums {
    pub fn ratio(&self) -> f64 {
        self.l4 / self.l1
    }
}

/// Plank `(d^-1, d^-2, d^-3)` on `[c, c + d]` centered at `center`.
pub fn delta_plank(delta: f64, c: f64, center: Vec3) -> Result<OrientedBox> {
    make_box(Role::SpatialPlank, Some(Interval::new(c, c + delta)?), Scale::R(delta.powi(-3)), center)
}

/// One origin-centered plank per interval of length `delta`.
pub fn origin_family(delta: f64) -> Result<BoxFamily> {
    let count = (1.0 / delta).round() as usize;
    let boxes = (0..count)
        .map(|k| delta_plank(delta, k as f64 * delta, Vec3::zeros()))
        .collect::<Result<Vec<_>>>()?;
    let mut f = BoxFamily::custom(Role::SpatialPlank, Scale::Delta(delta), delta.powi(-3), boxes);
    f.direction = (0..count).collect();
    Ok(f)
}

fn adjacency(boxes: &[OrientedBox]) -> Vec<Vec<usize>> {
    (0..boxes.len())
        .into_par_iter()
        .map(|i| (0..boxes.len()).filter(|&j| j != i && boxes_intersect(&boxes[i], &boxes[j])).collect())
        .collect()
}

fn clip_box(p: &ConvexPolytope, b: &OrientedBox) -> ConvexPolytope {
    b.half_spaces().iter().fold(p.clone(), |acc, h| acc.clip(h))
}

fn exact(boxes: &[OrientedBox]) -> Result<L4Sums> {
    let adj = adjacency(boxes);
    let later = |i: usize, set: &[usize]| -> Vec<usize> { set.iter().copied().filter(|&j| j > i).collect() };
    let candidates: usize = (0..boxes.len())
        .map(|i| {
            let a = later(i, &adj[i]);
            1 + a.len() + a.iter().map(|&j| a.iter().filter(|&&k| k > j && adj[j].contains(&k)).count()).sum::<usize>()
        })
        .sum();
    if candidates > EXACT_TERM_CAP {
        return Err(Error::UseMonteCarlo { needed: candidates, cap: EXACT_TERM_CAP });
    }
    let parts: Vec<(f64, usize)> = (0..boxes.len())
        .into_par_iter()
        .map(|i| {
            let pi = ConvexPolytope::from_box(&boxes[i]);
            let mut sum = pi.volume();
            let mut work = 1;
            let nj = later(i, &adj[i]);
            for (a, &j) in nj.iter().enumerate() {
                let pij = clip_box(&pi, &boxes[j]);
                work += 1;
                if pij.is_empty() {
                    continue;
                }
                sum += SURJECTIONS[2] * pij.volume();
                let nk: Vec<usize> = nj[a + 1..].iter().copied().filter(|k| adj[j].contains(k)).collect();
                for (b, &k) in nk.iter().enumerate() {
                    let pijk = clip_box(&pij, &boxes[k]);
                    work += 1;
                    if pijk.is_empty() {
                        continue;
                    }
                    sum += SURJECTIONS[3] * pijk.volume();
                    for &l in nk[b + 1..].iter().filter(|l| adj[k].contains(l)) {
                        let v = clip_box(&pijk, &boxes[l]).volume();
                        work += 1;
                        sum += SURJECTIONS[4] * v;
                    }
                }
            }
            (sum, work)
        })
        .collect();
    Ok(L4Sums {
        l4: parts.iter().map(|p| p.0).sum(),
        l1: boxes.iter().map(|b| b.volume()).sum(),
        stderr: 0.0,
        work: parts.iter().map(|p| p.1).sum(),
    })
}

/// Stratified estimate: `int f^4 = sum_i |B_i| E_{x in B_i} f(x)^3`, each
/// stratum sampled uniformly with its own stream.
fn monte_carlo(boxes: &[OrientedBox], samples: usize, seed: u64) -> Result<L4Sums> {
    if samples < 1000 {
        return Err(Error::SampleBudget(samples));
    }
    let adj = adjacency(boxes);
    let inverses: Vec<Mat3> = boxes.iter().map(|b| b.edges().try_inverse().expect("nondegenerate box")).collect();
    let per = (samples / boxes.len().max(1)).max(2);
    let strata: Vec<(f64, f64)> = (0..boxes.len())
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, i as u64);
            let e = boxes[i].edges();
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..per {
                let u = Vec3::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
                let x = boxes[i].center + e * u;
                let f = 1 + adj[i]
                    .iter()
                    .filter(|&&j| (inverses[j] * (x - boxes[j].center)).amax() <= 0.5)
                    .count();
                let f3 = (f * f * f) as f64;
                s1 += f3;
                s2 += f3 * f3;
            }
            let n = per as f64;
            let mean = s1 / n;
            let var = (s2 / n - mean * mean).max(0.0) * n / (n - 1.0);
            let vol = boxes[i].volume();
            (vol * mean, vol * vol * var / n)
        })
        .collect();
    Ok(L4Sums {
        l4: strata.iter().map(|s| s.0).sum(),
        l1: boxes.iter().map(|b| b.volume()).sum(),
        stderr: strata.iter().map(|s| s.1).sum::<f64>().sqrt(),
        work: per * boxes.len(),
    })
}

/// L4 and L1 sums of the indicator functions of a box collection.
pub fn l4_sum(boxes: &[OrientedBox], method: L4Method) -> Result<L4Sums> {
    match method {
        L4Method::Exact => exact(boxes),
        L4Method::MonteCarlo { samples, seed } => monte_carlo(boxes, samples, seed),
    }
}

/// L4 and L1 sums for a plank family at scale `delta`.
pub fn l4_plank_sum(family: &BoxFamily, method: L4Method) -> Result<L4Sums> {
    if method == L4Method::Exact {
        if let Scale::Delta(d) = family.scale {
            let inv = (1.0 / d).round() as usize;
            if inv > EXACT_DELTA_CAP {
                return Err(Error::UseMonteCarlo { needed: inv, cap: EXACT_DELTA_CAP });
            }
        }
    }
    l4_sum(&family.boxes, method)
}

/// Volume of three origin-centered planks on `[c_k, c_k + delta]`.
pub fn triple_volume(delta: f64, c: [f64; 3]) -> Result<f64> {
    let boxes = c.iter().map(|&ck| delta_plank(delta, ck, Vec3::zeros())).collect::<Result<Vec<_>>>()?;
    Ok(crate::geometry::intersect_boxes(&boxes)?.volume())
}

/// The predicted order of the triple volume for separations `d2 >= d3`.
pub fn triple_volume_formula(delta: f64, d2: f64, d3: f64) -> f64 {
    (1.0 / delta) * (1.0 / delta) / (d2 + delta) * (1.0 / delta) / ((d3 + delta) * (d2 - d3 + delta))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TripleCase {
    pub delta: f64,
    pub d2: f64,
    pub d3: f64,
    pub volume: f64,
    pub formula: f64,
    pub ratio: f64,
}

/// Separations `0` and `delta, 2 delta, ...` up to `1/2`.
fn separations(delta: f64, upto: f64) -> Vec<f64> {
    let mut out = vec![0.0];
    let mut d = delta;
    while d <= upto * (1.0 + 1e-12) {
        out.push(d);
        d *= 2.0;
    }
    out
}

/// Triple volumes with intervals at `0`, `d2` and `d3` for every dyadic
/// `0 <= d3 <= d2 <= 1/2`.
pub fn triple_volume_law(delta: f64) -> Result<Vec<TripleCase>> {
    let mut cases = Vec::new();
    for d2 in separations(delta, 0.5) {
        for d3 in separations(delta, d2) {
            cases.push((d2, d3));
        }
    }
    cases
        .into_par_iter()
        .map(|(d2, d3)| {
            let volume = triple_volume(delta, [0.0, d2, d3])?;
            let formula = triple_volume_formula(delta, d2, d3);
            Ok(TripleCase { delta, d2, d3, volume, formula, ratio: volume / formula })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_plank_sums_equal_volume() {
        let p = delta_plank(0.125, 0.25, Vec3::new(1.0, 2.0, 3.0)).unwrap();
        let s = l4_sum(&[p.clone()], L4Method::Exact).unwrap();
        let v = 0.125f64.powi(-6);
        assert!((s.l4 - v).abs() < 1e-9 * v);
        assert!((s.l1 - v).abs() < 1e-9 * v);
    }

    #[test]
    fn two_identical_boxes_give_sixteen_volumes() {
        // (1 + 1)^4 = 16 on the common support
        let b = OrientedBox::cube(Vec3::zeros(), 1.0, Role::Generic).unwrap();
        let s = l4_sum(&[b.clone(), b], L4Method::Exact).unwrap();
        assert!((s.l4 - 16.0).abs() < 1e-9);
        assert!((s.l1 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn nested_cubes_oracle() {
        // unit cube inside a cube of side 2: f = 2 on the unit cube, 1 elsewhere
        let a = OrientedBox::cube(Vec3::zeros(), 1.0, Role::Generic).unwrap();
        let b = OrientedBox::cube(Vec3::repeat(-0.5), 2.0, Role::Generic).unwrap();
        let s = l4_sum(&[a, b], L4Method::Exact).unwrap();
        assert!((s.l4 - (16.0 + 7.0)).abs() < 1e-9);
    }

    #[test]
    fn identical_triple_matches_single_volume() {
        let v = triple_volume(0.125, [0.0, 0.0, 0.0]).unwrap();
        assert!((v / triple_volume_formula(0.125, 0.0, 0.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn exact_cap_signals_monte_carlo() {
        let f = origin_family(1.0 / 64.0).unwrap();
        assert!(matches!(l4_plank_sum(&f, L4Method::Exact), Err(Error::UseMonteCarlo { .. })));
        assert!(matches!(
            l4_plank_sum(&f, L4Method::MonteCarlo { samples: 10, seed: 0 }),
            Err(Error::SampleBudget(10))
        ));
    }
}
