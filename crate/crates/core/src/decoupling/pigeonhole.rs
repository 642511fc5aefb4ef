use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::packets::{synthesize_from_packets, PacketEnsemble, PacketScale, Window};
use super::e;
use crate::geometry::{frenet_frame, Frame};
use crate::{rng, Error, Result, Vec3};

/// Heights below this fraction of the largest are discarded.
pub const HEIGHT_FLOOR: f64 = 1e-12;
/// Exponent of the mass `sum |A|^p` that ranks dyadic classes.
const MASS_EXPONENT: i32 = 10;
/// Largest constant accepted by the plank-height check.
pub const HEIGHT_CONSTANT_CAP: f64 = 16.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstSequence {
    pub w: f64,
    pub n: f64,
    #[serde(rename = "X")]
    pub x: f64,
    pub m: f64,
    pub l: f64,
    #[serde(rename = "Y")]
    pub y: f64,
    /// Intervals `I` surviving the last step.
    pub heavy_intervals: usize,
    /// Surviving plates, as ensemble indices.
    pub kept: Vec<usize>,
    /// Surviving fat plates as (interval `I`, container key).
    pub heavy_fat_plates: Vec<(usize, [i64; 3])>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondSequence {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "N")]
    pub n: f64,
    #[serde(rename = "Z1")]
    pub z1: f64,
    #[serde(rename = "Z2")]
    pub z2: f64,
    pub contributing_intervals: usize,
    /// Surviving planks, as ensemble indices.
    pub kept: Vec<usize>,
}

/// Auxiliary counts of the rich-cube argument. The analyzer does not fill
/// them; they are carried so that reports have a fixed shape.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Auxiliary {
    #[serde(rename = "E1")]
    pub e1: Option<f64>,
    #[serde(rename = "E2")]
    pub e2: Option<f64>,
    #[serde(rename = "M1")]
    pub m1: Option<f64>,
    #[serde(rename = "M2")]
    pub m2: Option<f64>,
    #[serde(rename = "U1")]
    pub u1: Option<f64>,
    #[serde(rename = "U2")]
    pub u2: Option<f64>,
    #[serde(rename = "M_sigma")]
    pub m_sigma: Option<f64>,
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub first: Option<FirstSequence>,
    pub second: Option<SecondSequence>,
    pub aux: Auxiliary,
}

/// Dyadic exponent `ceil(log2 c)`: the class `(2^{e-1}, 2^e]`.
fn ceil_class(c: usize) -> i32 {
    (usize::BITS - (c.max(1) - 1).leading_zeros()) as i32
}

/// Dyadic exponent `floor(log2 c)`: the class `[2^e, 2^{e+1})`.
fn floor_class(c: usize) -> i32 {
    (usize::BITS - 1 - c.max(1).leading_zeros()) as i32
}

/// Dyadic height class `floor(log2 h)`, tolerant of rounding at powers of two.
fn height_class(h: f64) -> i32 {
    (h.log2() + 1e-9).floor() as i32
}

fn mass(h: f64) -> f64 {
    h.powi(MASS_EXPONENT)
}

/// Class with the largest mass; ties go to the larger class.
fn heaviest<K: Ord + Copy>(masses: &BTreeMap<K, f64>) -> Option<K> {
    masses
        .iter()
        .fold(None, |best: Option<(K, f64)>, (&k, &m)| match best {
            Some((_, bm)) if bm > m => best,
            _ => Some((k, m)),
        })
        .map(|(k, _)| k)
}

/// Container lattices in the frame of an interval `I`, offset by `R/2` so
/// that every lattice nests inside the fat plates.
struct Lattice {
    r: f64,
    third: f64,
    frames: BTreeMap<usize, Frame>,
}

impl Lattice {
    fn new(r: f64) -> Self {
        Lattice { r, third: r.powf(-1.0 / 3.0), frames: BTreeMap::new() }
    }

    fn parent(&self, t: f64) -> usize {
        let count = (1.0 / self.third).round() as usize;
        ((t / self.third).floor() as usize).min(count - 1)
    }

    fn frame(&mut self, i: usize) -> Result<&Frame> {
        if !self.frames.contains_key(&i) {
            self.frames.insert(i, frenet_frame(i as f64 * self.third)?);
        }
        Ok(&self.frames[&i])
    }

    fn key(&mut self, i: usize, x: &Vec3, dims: [f64; 3]) -> Result<[i64; 3]> {
        let half = 0.5 * self.r;
        let u = self.frame(i)?.coords(x);
        Ok([0, 1, 2].map(|k| ((u[k] + half) / dims[k]).floor() as i64))
    }

    fn fat_plate(&self) -> [f64; 3] {
        [self.r.powf(2.0 / 3.0), self.r, self.r]
    }
    fn sigma(&self) -> [f64; 3] {
        [self.r.sqrt(), self.r.powf(5.0 / 6.0), self.r]
    }
    fn tau(&self) -> [f64; 3] {
        [self.r.sqrt(), self.r.powf(2.0 / 3.0), self.r]
    }

    /// Center in the frame of `I` given `R/2`-offset coordinates.
    fn point(&mut self, i: usize, u: Vec3) -> Result<Vec3> {
        let half = 0.5 * self.r;
        Ok(self.frame(i)?.point(&(u - Vec3::repeat(half))))
    }
}

/// Classifies the packets of the ensemble into dyadic parameters.
pub fn pigeonhole_analysis(ensemble: &PacketEnsemble) -> Result<PacketEnsemble> {
    if ensemble.is_empty() {
        return Err(Error::domain("empty packet ensemble"));
    }
    let mut lat = Lattice::new(ensemble.r);
    let first = first_sequence(ensemble, &mut lat)?;
    let second = second_sequence(ensemble, &mut lat, first.as_ref())?;
    let mut out = ensemble.clone();
    out.params = Parameters { first, second, aux: Auxiliary::default() };
    Ok(out)
}

fn first_sequence(ens: &PacketEnsemble, lat: &mut Lattice) -> Result<Option<FirstSequence>> {
    let plates: Vec<usize> = ens.of_scale(PacketScale::Half).map(|(i, _)| i).collect();
    if plates.is_empty() {
        return Ok(None);
    }
    let h = |i: usize| ens.packets[i].height();
    let top = plates.iter().map(|&i| h(i)).fold(0.0, f64::max);
    if top == 0.0 {
        return Err(Error::domain("all plate coefficients are zero"));
    }

    // w: height class
    let mut by_w: BTreeMap<i32, f64> = BTreeMap::new();
    for &i in &plates {
        if h(i) >= HEIGHT_FLOOR * top {
            *by_w.entry(height_class(h(i))).or_default() += mass(h(i));
        }
    }
    let ew = heaviest(&by_w).expect("the top plate survives");
    let plates: Vec<usize> = plates.into_iter().filter(|&i| h(i) >= HEIGHT_FLOOR * top && height_class(h(i)) == ew).collect();

    // n, X: per (J, fat plate) counts and per-J fat-plate counts
    let half = ens.r.powf(-0.5);
    let dims = lat.fat_plate();
    let mut cells: BTreeMap<(usize, (usize, [i64; 3])), Vec<usize>> = BTreeMap::new();
    for &i in &plates {
        let p = &ens.packets[i];
        let j = (p.carrier.center() / half).floor() as usize;
        let parent = lat.parent(p.carrier.center());
        let key = lat.key(parent, &p.bx.center, dims)?;
        cells.entry((j, (parent, key))).or_default().push(i);
    }
    let mut per_j: BTreeMap<(usize, i32), Vec<(usize, [i64; 3])>> = BTreeMap::new();
    for ((j, pi), members) in &cells {
        per_j.entry((*j, ceil_class(members.len()))).or_default().push(*pi);
    }
    let mut by_nx: BTreeMap<(i32, i32), f64> = BTreeMap::new();
    for ((j, en), pis) in &per_j {
        let ex = ceil_class(pis.len());
        let m: f64 = pis.iter().flat_map(|pi| &cells[&(*j, *pi)]).map(|&i| mass(h(i))).sum();
        *by_nx.entry((*en, ex)).or_default() += m;
    }
    let (en, ex) = heaviest(&by_nx).expect("nonempty");
    // contributing (J, fat plate) pairs
    let mut contrib: BTreeSet<(usize, (usize, [i64; 3]))> = BTreeSet::new();
    for ((j, e_n), pis) in &per_j {
        if *e_n == en && ceil_class(pis.len()) == ex {
            contrib.extend(pis.iter().map(|pi| (*j, *pi)));
        }
    }

    // m: heavy J per I
    let mut heavy_js: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    let mut mass_i: BTreeMap<usize, f64> = BTreeMap::new();
    for (j, pi) in &contrib {
        heavy_js.entry(pi.0).or_default().insert(*j);
        *mass_i.entry(pi.0).or_default() += cells[&(*j, *pi)].iter().map(|&i| mass(h(i))).sum::<f64>();
    }
    let mut by_m: BTreeMap<i32, f64> = BTreeMap::new();
    for (i, js) in &heavy_js {
        *by_m.entry(ceil_class(js.len())).or_default() += mass_i[i];
    }
    let em = heaviest(&by_m).expect("nonempty");
    contrib.retain(|(_, pi)| ceil_class(heavy_js[&pi.0].len()) == em);

    // l, Y: contributing J per fat plate, heavy fat plates per I
    let mut per_pi: BTreeMap<(usize, [i64; 3]), (BTreeSet<usize>, f64)> = BTreeMap::new();
    for (j, pi) in &contrib {
        let entry = per_pi.entry(*pi).or_default();
        entry.0.insert(*j);
        entry.1 += cells[&(*j, *pi)].iter().map(|&i| mass(h(i))).sum::<f64>();
    }
    let mut per_iy: BTreeMap<(usize, i32), Vec<(usize, [i64; 3])>> = BTreeMap::new();
    for (pi, (js, _)) in &per_pi {
        per_iy.entry((pi.0, floor_class(js.len()))).or_default().push(*pi);
    }
    let mut by_ly: BTreeMap<(i32, i32), f64> = BTreeMap::new();
    for ((_, el), pis) in &per_iy {
        let ey = floor_class(pis.len());
        *by_ly.entry((*el, ey)).or_default() += pis.iter().map(|pi| per_pi[pi].1).sum::<f64>();
    }
    let (el, ey) = heaviest(&by_ly).expect("nonempty");
    let mut heavy_pis: Vec<(usize, [i64; 3])> = Vec::new();
    for ((_, e_l), pis) in &per_iy {
        if *e_l == el && floor_class(pis.len()) == ey {
            heavy_pis.extend(pis);
        }
    }
    let heavy_set: BTreeSet<_> = heavy_pis.iter().copied().collect();
    let mut kept: Vec<usize> = contrib
        .iter()
        .filter(|(_, pi)| heavy_set.contains(pi))
        .flat_map(|key| cells[key].iter().copied())
        .collect();
    kept.sort_unstable();
    let heavy_intervals = heavy_set.iter().map(|pi| pi.0).collect::<BTreeSet<_>>().len();

    let p2 = |e: i32| 2f64.powi(e);
    let seq = FirstSequence {
        w: p2(ew),
        n: p2(en),
        x: p2(ex),
        m: p2(em),
        l: p2(el),
        y: p2(ey),
        heavy_intervals,
        kept,
        heavy_fat_plates: heavy_pis,
    };
    if seq.l * seq.y > seq.m * seq.x {
        return Err(Error::domain(format!("lY = {} exceeds mX = {}", seq.l * seq.y, seq.m * seq.x)));
    }
    Ok(Some(seq))
}

fn second_sequence(ens: &PacketEnsemble, lat: &mut Lattice, first: Option<&FirstSequence>) -> Result<Option<SecondSequence>> {
    let heavy: Option<BTreeSet<(usize, [i64; 3])>> = first.map(|f| f.heavy_fat_plates.iter().copied().collect());
    let (fat, sigma, tau) = (lat.fat_plate(), lat.sigma(), lat.tau());
    struct Plank {
        idx: usize,
        i: usize,
        fat: [i64; 3],
        sigma: [i64; 3],
        tau: [i64; 3],
        h: f64,
    }
    let mut planks = Vec::new();
    for (idx, p) in ens.of_scale(PacketScale::Third) {
        let i = lat.parent(p.carrier.center());
        let c = p.bx.center;
        let pk = Plank { idx, i, fat: lat.key(i, &c, fat)?, sigma: lat.key(i, &c, sigma)?, tau: lat.key(i, &c, tau)?, h: p.height() };
        if heavy.as_ref().is_none_or(|set| set.contains(&(pk.i, pk.fat))) {
            planks.push(pk);
        }
    }
    if planks.is_empty() {
        return Ok(None);
    }
    let top = planks.iter().map(|p| p.h).fold(0.0, f64::max);
    if top == 0.0 {
        return Err(Error::domain("all plank coefficients are zero"));
    }

    // A: height class
    planks.retain(|p| p.h >= HEIGHT_FLOOR * top);
    let mut by_a: BTreeMap<i32, f64> = BTreeMap::new();
    for p in &planks {
        *by_a.entry(height_class(p.h)).or_default() += mass(p.h);
    }
    let ea = heaviest(&by_a).expect("nonempty");
    planks.retain(|p| height_class(p.h) == ea);

    // N: planks per tau
    let mut per_tau: BTreeMap<(usize, [i64; 3]), (usize, f64)> = BTreeMap::new();
    for p in &planks {
        let e = per_tau.entry((p.i, p.tau)).or_default();
        e.0 += 1;
        e.1 += mass(p.h);
    }
    let mut by_n: BTreeMap<i32, f64> = BTreeMap::new();
    for (c, m) in per_tau.values() {
        *by_n.entry(ceil_class(*c)).or_default() += m;
    }
    let en = heaviest(&by_n).expect("nonempty");
    planks.retain(|p| ceil_class(per_tau[&(p.i, p.tau)].0) == en);

    // Z1: heavy tau per Sigma
    let mut per_sigma: BTreeMap<(usize, [i64; 3]), (BTreeSet<[i64; 3]>, f64)> = BTreeMap::new();
    for p in &planks {
        let e = per_sigma.entry((p.i, p.sigma)).or_default();
        e.0.insert(p.tau);
        e.1 += mass(p.h);
    }
    let mut by_z1: BTreeMap<i32, f64> = BTreeMap::new();
    for (taus, m) in per_sigma.values() {
        *by_z1.entry(ceil_class(taus.len())).or_default() += m;
    }
    let ez1 = heaviest(&by_z1).expect("nonempty");
    planks.retain(|p| ceil_class(per_sigma[&(p.i, p.sigma)].0.len()) == ez1);

    // Z2: heavy Sigma per fat plate
    let mut per_fat: BTreeMap<(usize, [i64; 3]), (BTreeSet<[i64; 3]>, f64)> = BTreeMap::new();
    for p in &planks {
        let e = per_fat.entry((p.i, p.fat)).or_default();
        e.0.insert(p.sigma);
        e.1 += mass(p.h);
    }
    let mut by_z2: BTreeMap<i32, f64> = BTreeMap::new();
    for (sigmas, m) in per_fat.values() {
        *by_z2.entry(ceil_class(sigmas.len())).or_default() += m;
    }
    let ez2 = heaviest(&by_z2).expect("nonempty");
    planks.retain(|p| ceil_class(per_fat[&(p.i, p.fat)].0.len()) == ez2);

    let contributing_intervals = planks.iter().map(|p| p.i).collect::<BTreeSet<_>>().len();
    let p2 = |e: i32| 2f64.powi(e);
    Ok(Some(SecondSequence {
        a: p2(ea),
        n: p2(en),
        z1: p2(ez1),
        z2: p2(ez2),
        contributing_intervals,
        kept: planks.iter().map(|p| p.idx).collect(),
    }))
}

/// Planted parameters of a fixture; all powers of two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Planted {
    pub n: usize,
    #[serde(rename = "X")]
    pub x: usize,
    pub m: usize,
    pub l: usize,
    #[serde(rename = "Y")]
    pub y: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
    #[serde(rename = "Z1")]
    pub z1: usize,
    #[serde(rename = "Z2")]
    pub z2: usize,
    /// Number of heavy intervals `I`.
    pub intervals: usize,
}

impl Planted {
    #[allow(clippy::too_many_arguments)]
    pub const fn new(n: usize, x: usize, m: usize, l: usize, y: usize, big_n: usize, z1: usize, z2: usize, intervals: usize) -> Self {
        Planted { n, x, m, l, y, big_n, z1, z2, intervals }
    }
}

/// Ten fixtures at `R = 2^12` covering the corners of the parameter ranges.
pub fn standard_fixtures() -> Vec<Planted> {
    vec![
        Planted::new(1, 1, 1, 1, 1, 1, 1, 1, 1),
        Planted::new(4, 2, 2, 1, 4, 1, 1, 1, 2),
        Planted::new(4, 2, 2, 2, 2, 2, 1, 1, 1),
        Planted::new(2, 4, 4, 2, 8, 4, 1, 1, 3),
        Planted::new(1, 1, 4, 4, 1, 2, 2, 2, 2),
        Planted::new(2, 2, 4, 4, 2, 1, 4, 1, 4),
        Planted::new(4, 8, 2, 2, 8, 2, 2, 4, 1),
        Planted::new(1, 4, 4, 2, 8, 4, 4, 4, 2),
        Planted::new(2, 1, 2, 2, 1, 1, 2, 16, 1),
        Planted::new(4, 4, 4, 4, 4, 4, 4, 2, 16),
    ]
}

/// `R^{1/6}`, which must be a power of two.
fn sixth_root(r: f64) -> Result<usize> {
    let s = r.powf(1.0 / 6.0);
    let k = s.round() as usize;
    if k < 2 || !k.is_power_of_two() || (s - k as f64).abs() > 1e-9 * s {
        return Err(Error::domain(format!("fixtures need R = 64^k, got {r}")));
    }
    Ok(k)
}

/// Ensemble realising the planted counts exactly: each heavy `I` has `m`
/// heavy `J`, each sending `n` plates into `X` of the `Y` fat plates by
/// the cyclic rule `(a X + b) mod Y`; each fat plate holds `Z2` boxes
/// `Sigma` with `Z1` boxes `tau` of `N` planks each. Plank heights are the
/// root-mean-square of the plate field at the plank centers.
pub fn planted_fixture(r: f64, planted: &Planted, seed: u64) -> Result<PacketEnsemble> {
    let s = sixth_root(r)?;
    let Planted { n, x, m, l, y, big_n, z1, z2, intervals } = *planted;
    let all = [n, x, m, l, y, big_n, z1, z2];
    if intervals == 0 || all.iter().any(|&v| v == 0 || !v.is_power_of_two()) {
        return Err(Error::domain(format!("planted counts must be powers of two: {planted:?}")));
    }
    let slabs = s * s; // fat plates across [-R/2, R/2) along t(I)
    let checks = [
        (n <= s, "n <= R^{1/6}"),
        (m <= s, "m <= R^{1/6}"),
        (l <= m, "l <= m"),
        (x <= y, "X <= Y"),
        (m * x == l * y, "mX = lY"),
        (y <= slabs / 2, "Y <= R^{1/3}/2"),
        (big_n <= s, "N <= R^{1/6}"),
        (z1 <= s, "Z1 <= R^{1/6}"),
        (z2 <= s * s, "Z2 <= R^{1/3}"),
        (intervals <= s * s, "intervals <= R^{1/3}"),
    ];
    if let Some((_, what)) = checks.iter().find(|(ok, _)| !ok) {
        return Err(Error::domain(format!("planted fixture violates {what}: {planted:?}")));
    }
    let mut rng = rng::stream(seed, 0);
    let mut lat = Lattice::new(r);
    let mut ens = PacketEnsemble::new(r)?;
    let (r12, r13, r23, r56) = (r.sqrt(), r.cbrt(), r.powf(2.0 / 3.0), r.powf(5.0 / 6.0));
    let first_slab = slabs / 2 - y / 2;
    let heavy_is: Vec<usize> = (0..intervals).map(|q| q * (s * s / intervals)).collect();
    for &i in &heavy_is {
        for a in 0..m {
            let j = i * s + a;
            for b in 0..x {
                let slab = first_slab + (a * x + b) % y;
                for k in 0..n {
                    let u = Vec3::new(slab as f64 * r23 + (k as f64 + 0.5) * r12, 0.5 * r, 0.5 * r);
                    let c = lat.point(i, u)?;
                    ens.push(PacketScale::Half, j, c, e(rng.gen::<f64>()))?;
                }
            }
        }
    }
    let field = synthesize_from_packets(&ens, Window::default());
    let mut centers = Vec::new();
    for &i in &heavy_is {
        for q in 0..y {
            let t0 = (first_slab + q) as f64 * r23;
            // Sigma cells ordered by their t slot first so that they sit on plates
            for cell in 0..z2 {
                let (st, sn) = (cell / s, cell % s);
                for tn in 0..z1 {
                    for pt in 0..big_n {
                        let u = Vec3::new(
                            t0 + st as f64 * r12 + (pt as f64 + 0.5) * r13,
                            sn as f64 * r56 + (tn as f64 + 0.5) * r23,
                            0.5 * r,
                        );
                        centers.push((i, lat.point(i, u)?));
                    }
                }
            }
        }
    }
    let height = (centers.iter().map(|(_, c)| field.eval(c).norm_sqr()).sum::<f64>() / centers.len() as f64).sqrt();
    for (i, c) in centers {
        ens.push(PacketScale::Third, i, c, height * e(rng.gen::<f64>()))?;
    }
    Ok(ens)
}

/// Random ensemble at scale `R = 64^k`: random heavy intervals, plate
/// counts and heights; planks in random boxes `Sigma`, `tau` of every
/// occupied fat plate, with heights `|g|` at their centers.
pub fn random_ensemble(r: f64, seed: u64) -> Result<PacketEnsemble> {
    let s = sixth_root(r)?;
    let mut rng = rng::stream(seed, 0);
    let mut lat = Lattice::new(r);
    let mut ens = PacketEnsemble::new(r)?;
    let (r12, r13, r23, r56) = (r.sqrt(), r.cbrt(), r.powf(2.0 / 3.0), r.powf(5.0 / 6.0));
    let slabs = s * s;
    let central: Vec<usize> = (slabs / 4..slabs * 3 / 4).collect();
    let mut occupied: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut is: Vec<usize> = (0..s * s).filter(|_| rng.gen_bool(0.4)).collect();
    if is.is_empty() {
        is.push(rng.gen_range(0..s * s));
    }
    for &i in &is {
        for a in 0..s {
            if !rng.gen_bool(0.6) {
                continue;
            }
            let count = rng.gen_range(1..=central.len());
            for slab in central.choose_multiple(&mut rng, count).copied().collect::<Vec<_>>() {
                occupied.insert((i, slab));
                let mut slots: Vec<usize> = (0..s).collect();
                slots.shuffle(&mut rng);
                let stack = rng.gen_range(1..=s);
                for &k in &slots[..stack] {
                    let u = Vec3::new(slab as f64 * r23 + (k as f64 + 0.5) * r12, 0.5 * r, 0.5 * r);
                    let h = 2f64.powf(-rng.gen_range(0.0..3.0));
                    ens.push(PacketScale::Half, i * s + a, lat.point(i, u)?, h * e(rng.gen::<f64>()))?;
                }
            }
        }
    }
    let field = synthesize_from_packets(&ens, Window::default());
    let mut planks = Vec::new();
    // every occupied fat plate gets planks, so heavy plates are never empty
    for &(i, slab) in &occupied {
        let cells: Vec<usize> = (0..s * s).collect();
        let slots: Vec<usize> = (0..s).collect();
        let count = rng.gen_range(1..=s);
        for cell in cells.choose_multiple(&mut rng, count).copied().collect::<Vec<_>>() {
            let (st, sn) = (cell / s, cell % s);
            let taus = rng.gen_range(1..=s);
            for tn in slots.choose_multiple(&mut rng, taus).copied().collect::<Vec<_>>() {
                let stack = rng.gen_range(1..=s);
                for pt in slots.choose_multiple(&mut rng, stack).copied().collect::<Vec<_>>() {
                    let u = Vec3::new(
                        slab as f64 * r23 + st as f64 * r12 + (pt as f64 + 0.5) * r13,
                        sn as f64 * r56 + (tn as f64 + 0.5) * r23,
                        0.5 * r,
                    );
                    planks.push((i, lat.point(i, u)?));
                }
            }
        }
    }
    for (i, c) in planks {
        let h = field.eval(&c).norm().max(1e-3);
        ens.push(PacketScale::Third, i, c, Complex64::new(h, 0.0) * e(rng.gen::<f64>()))?;
    }
    Ok(ens)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeightReport {
    #[serde(rename = "R")]
    pub r: f64,
    /// Mean height of the surviving planks.
    #[serde(rename = "A")]
    pub a: f64,
    pub w: f64,
    pub l: f64,
    pub n: f64,
    #[serde(rename = "N")]
    pub big_n: f64,
    #[serde(rename = "Z1")]
    pub z1: f64,
    #[serde(rename = "Z2")]
    pub z2: f64,
    /// `L^2`, `L^4` and `L^6` branches of the bound.
    pub branches: [f64; 3],
    pub binding: String,
    /// `A` over the smallest branch.
    pub constant: f64,
    pub pass: bool,
}

/// Checks `A <= C min(w l^{1/2} R^{1/12} / N^{1/2}, w l^{1/4} R^{1/8} /
/// (N Z1)^{1/4}, w l^{1/2} n^{1/6} R^{1/12} / (N Z1 Z2)^{1/6})` on an
/// analyzed ensemble.
pub fn plank_height_check(ensemble: &PacketEnsemble, constant: f64) -> Result<HeightReport> {
    let (Some(f), Some(s)) = (&ensemble.params.first, &ensemble.params.second) else {
        return Err(Error::domain("both pigeonholing sequences are required; run the analyzer first"));
    };
    if s.kept.is_empty() {
        return Err(Error::domain("no surviving planks"));
    }
    let r = ensemble.r;
    let a = s.kept.iter().map(|&i| ensemble.packets[i].height()).sum::<f64>() / s.kept.len() as f64;
    let branches = [
        f.w * f.l.sqrt() * r.powf(1.0 / 12.0) / s.n.sqrt(),
        f.w * f.l.powf(0.25) * r.powf(0.125) / (s.n * s.z1).powf(0.25),
        f.w * f.l.sqrt() * f.n.powf(1.0 / 6.0) * r.powf(1.0 / 12.0) / (s.n * s.z1 * s.z2).powf(1.0 / 6.0),
    ];
    let (k, min) = branches.iter().enumerate().fold((0, f64::INFINITY), |acc, (k, &b)| if b < acc.1 { (k, b) } else { acc });
    let c = a / min;
    Ok(HeightReport {
        r,
        a,
        w: f.w,
        l: f.l,
        n: f.n,
        big_n: s.n,
        z1: s.z1,
        z2: s.z2,
        branches,
        binding: ["l2", "l4", "l6"][k].into(),
        constant: c,
        pass: c <= constant,
    })
}
