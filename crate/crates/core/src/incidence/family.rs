use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::geometry::{frenet_frame, Frame, Interval, OrientedBox, Role, Scale};
use crate::{rng, Error, Result, Vec3};

/// Spacing caps. `None` leaves a condition unconstrained.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    /// Tubes per fat plate `S_I` (tubes), per direction (plates), per
    /// `(d^-2, d^-2, d^-3)` tube (planks), or planks per nonempty `tau` box.
    pub n: Option<usize>,
    /// Tubes per `B_I` box.
    pub n1: Option<usize>,
    /// Boxes per direction.
    pub m: Option<usize>,
    /// Heavy `tau` boxes per nonempty `Sigma` box. Setting it selects the
    /// structured plank layout.
    pub z1: Option<usize>,
}

impl Caps {
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        for (name, v) in [("N", self.n), ("N1", self.n1), ("M", self.m), ("Z1", self.z1)] {
            if let Some(v) = v {
                parts.push(format!("{name}={v}"));
            }
        }
        parts.join(",")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Uniform,
    Bush,
    Plany,
    Grid,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" | "uniform-random" => Ok(Mode::Uniform),
            "bush" => Ok(Mode::Bush),
            "plany" => Ok(Mode::Plany),
            "grid" => Ok(Mode::Grid),
            _ => Err(Error::domain(format!("unknown family mode `{s}`"))),
        }
    }
}

/// Container boxes a cap is counted over.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Container {
    name: &'static str,
    /// Frame dimensions; `None` means the whole direction.
    dims: Option<[f64; 3]>,
    cap: usize,
}

/// The family layout derived from role and scale.
#[derive(Debug, Clone, PartialEq)]
struct Layout {
    /// Scale fed to the box constructor.
    r: f64,
    dims: [f64; 3],
    ambient: f64,
    intervals: Vec<Interval>,
    containers: Vec<Container>,
    /// `(tau, Sigma)` dimensions for the structured plank layout.
    structured: Option<([f64; 3], [f64; 3])>,
}

fn intervals(count: usize) -> Vec<Interval> {
    let h = 1.0 / count as f64;
    (0..count).map(|k| Interval { lo: k as f64 * h, hi: (k + 1) as f64 * h }).collect()
}

fn dyadic_count(x: f64, what: &str) -> Result<usize> {
    let k = x.log2();
    if (k - k.round()).abs() > 1e-9 || k < 0.5 {
        return Err(Error::domain(format!("{what} = {x} must be a power of two >= 2")));
    }
    Ok(x.round() as usize)
}

fn layout(role: Role, scale: Scale, caps: &Caps) -> Result<Layout> {
    if let (Some(n), Some(n1)) = (caps.n, caps.n1) {
        if n1 > n {
            return Err(Error::domain(format!("N1 = {n1} exceeds N = {n}")));
        }
    }
    let mut containers = Vec::new();
    if let Some(m) = caps.m {
        containers.push(Container { name: "M", dims: None, cap: m });
    }
    let out = match (role, scale) {
        (Role::Tube, Scale::R(r)) => {
            let count = dyadic_count(r.cbrt(), "R^(1/3)")?;
            let (w, r56) = (r.powf(2.0 / 3.0), r.powf(5.0 / 6.0));
            if let Some(n) = caps.n {
                containers.push(Container { name: "N", dims: Some([w, r, r]), cap: n });
            }
            if let Some(n1) = caps.n1 {
                containers.push(Container { name: "N1", dims: Some([w, r56, r]), cap: n1 });
            }
            Layout { r, dims: [w, w, r], ambient: r, intervals: intervals(count), containers, structured: None }
        }
        (Role::Plate, Scale::Delta(d)) => {
            let count = dyadic_count(1.0 / d, "1/delta")?;
            if let Some(n) = caps.n {
                containers.push(Container { name: "N", dims: None, cap: n });
            }
            let side = d.powi(-2);
            Layout {
                r: side,
                dims: [1.0 / d, side, side],
                ambient: side,
                intervals: intervals(count),
                containers,
                structured: None,
            }
        }
        (Role::SpatialPlank, Scale::R(_)) | (Role::SpatialPlank, Scale::Delta(_)) => {
            let (r, count) = match scale {
                Scale::R(r) => (r, dyadic_count(r.cbrt(), "R^(1/3)")?),
                Scale::Delta(d) => (d.powi(-3), dyadic_count(1.0 / d, "1/delta")?),
                _ => unreachable!(),
            };
            let (r13, r23) = (r.cbrt(), r.powf(2.0 / 3.0));
            let structured = match caps.z1 {
                Some(z1) => {
                    let n = caps.n.ok_or_else(|| Error::domain("structured plank layout needs N"))?;
                    let limit = r.powf(1.0 / 6.0) * (1.0 + 1e-9);
                    if n as f64 > limit || z1 as f64 > limit || n == 0 || z1 == 0 {
                        return Err(Error::domain(format!("N = {n}, Z1 = {z1} must lie in [1, R^(1/6)]")));
                    }
                    Some(([r.sqrt(), r23, r], [r.sqrt(), r.powf(5.0 / 6.0), r]))
                }
                None => {
                    if let Some(n) = caps.n {
                        containers.push(Container { name: "N", dims: Some([r23, r23, r]), cap: n });
                    }
                    None
                }
            };
            Layout { r, dims: [r13, r23, r], ambient: r, intervals: intervals(count), containers, structured }
        }
        _ => return Err(Error::domain(format!("no family layout for {role:?} at {scale:?}"))),
    };
    Ok(out)
}

/// Grid slot of a box: direction plus integer position in that direction's frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Slot {
    dir: usize,
    idx: [i64; 3],
}

/// A family of congruent boxes grouped by direction.
#[derive(Debug, Clone)]
pub struct BoxFamily {
    pub role: Role,
    pub scale: Scale,
    pub caps: Caps,
    pub mode: Mode,
    pub density: f64,
    pub seed: u64,
    pub intervals: Vec<Interval>,
    pub boxes: Vec<OrientedBox>,
    /// Interval index of each box.
    pub direction: Vec<usize>,
    /// Half side of the ambient cube `[-L, L]^3`.
    pub ambient: f64,
    /// Number of grid slots available to the generator.
    pub admissible_slots: usize,
    layout: Layout,
}

impl BoxFamily {
    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    /// `R` or `delta`, as given at construction.
    pub fn scale_value(&self) -> f64 {
        match self.scale {
            Scale::R(r) => r,
            Scale::Delta(d) => d,
            Scale::SmallCap { r, .. } => r,
        }
    }

    /// Side of the counting cubes.
    pub fn cube_side(&self) -> f64 {
        self.layout.dims[0]
    }

    /// Boxes of direction `k`.
    pub fn by_interval(&self, k: usize) -> impl Iterator<Item = &OrientedBox> {
        self.boxes.iter().zip(&self.direction).filter(move |(_, &d)| d == k).map(|(b, _)| b)
    }

    /// Re-checks caps and separation from the stored boxes.
    pub fn check_caps(&self) -> Result<()> {
        let frames = frames(&self.layout)?;
        let mut seen: HashMap<(usize, [i64; 3]), usize> = HashMap::new();
        let mut load: HashMap<(usize, usize, [i64; 3]), usize> = HashMap::new();
        let dims = self.layout.dims;
        for (b, &dir) in self.boxes.iter().zip(&self.direction) {
            let idx = slot_index(&frames[dir].coords(&b.center), &dims)?;
            let c = seen.entry((dir, idx)).or_default();
            *c += 1;
            if *c > 1 {
                return Err(Error::domain(format!("two boxes share slot {idx:?} in direction {dir}")));
            }
            for (ci, cont) in self.layout.containers.iter().enumerate() {
                let key = cont.dims.map(|d| container_key(&idx, &dims, &d)).unwrap_or([0; 3]);
                let c = load.entry((ci, dir, key)).or_default();
                *c += 1;
                if *c > cont.cap {
                    return Err(Error::Infeasible {
                        cap: cont.name.into(),
                        detail: format!("container {key:?} of direction {dir} holds {c} > {}", cont.cap),
                    });
                }
            }
        }
        if let Some((tau, sigma)) = self.layout.structured {
            let n = self.caps.n.unwrap_or(1);
            let z1 = self.caps.z1.unwrap_or(1);
            let mut per_tau: HashMap<(usize, [i64; 3]), usize> = HashMap::new();
            for (b, &dir) in self.boxes.iter().zip(&self.direction) {
                let idx = slot_index(&frames[dir].coords(&b.center), &dims)?;
                *per_tau.entry((dir, container_key(&idx, &dims, &tau))).or_default() += 1;
            }
            let mut per_sigma: HashMap<(usize, [i64; 3]), usize> = HashMap::new();
            for (&(dir, key), &count) in &per_tau {
                if count != n {
                    return Err(Error::Infeasible { cap: "N".into(), detail: format!("tau {key:?} holds {count} != {n}") });
                }
                *per_sigma.entry((dir, container_key(&key, &tau, &sigma))).or_default() += 1;
            }
            if let Some((key, count)) = per_sigma.iter().find(|(_, &c)| c != z1) {
                return Err(Error::Infeasible { cap: "Z1".into(), detail: format!("Sigma {key:?} has {count} heavy tau") });
            }
        }
        Ok(())
    }

    /// A family from explicit boxes, with no caps. Used for transformed and
    /// hand-built families.
    pub fn custom(role: Role, scale: Scale, ambient: f64, boxes: Vec<OrientedBox>) -> Self {
        let dims = boxes.first().map(|b| b.lengths).unwrap_or([1.0; 3]);
        let direction = vec![0; boxes.len()];
        BoxFamily {
            role,
            scale,
            caps: Caps::default(),
            mode: Mode::Grid,
            density: 0.0,
            seed: 0,
            intervals: boxes.first().and_then(|b| b.interval).into_iter().collect(),
            boxes,
            direction,
            ambient,
            admissible_slots: 0,
            layout: Layout {
                r: ambient,
                dims,
                ambient,
                intervals: Vec::new(),
                containers: Vec::new(),
                structured: None,
            },
        }
    }

    /// The same family with every box mapped by `m`.
    pub fn transformed(&self, m: &crate::Mat3) -> Result<Self> {
        let mut out = self.clone();
        out.boxes = self.boxes.iter().map(|b| b.transformed(m)).collect::<Result<_>>()?;
        Ok(out)
    }

    /// The same family translated by `v`.
    pub fn translated(&self, v: &Vec3) -> Self {
        let mut out = self.clone();
        out.boxes = self.boxes.iter().map(|b| b.translated(v)).collect();
        out
    }
}

fn frames(layout: &Layout) -> Result<Vec<Frame>> {
    layout.intervals.iter().map(|iv| frenet_frame(iv.lo)).collect()
}

/// Key of the container (centered lattice of size `cont`) holding the
/// lattice point `idx * cell`. Integer input keeps generation and checks
/// consistent at container boundaries.
fn container_key(idx: &[i64; 3], cell: &[f64; 3], cont: &[f64; 3]) -> [i64; 3] {
    let k = |j: usize| (idx[j] as f64 * cell[j] / cont[j] + 0.5).floor() as i64;
    [k(0), k(1), k(2)]
}

/// Slot lattice centered at the origin.
fn slot_centre(idx: &[i64; 3], dims: &[f64; 3]) -> Vec3 {
    Vec3::new(idx[0] as f64 * dims[0], idx[1] as f64 * dims[1], idx[2] as f64 * dims[2])
}

/// Lattice index of a box center given in frame coordinates.
fn slot_index(u: &Vec3, dims: &[f64; 3]) -> Result<[i64; 3]> {
    let idx = [(u[0] / dims[0]).round() as i64, (u[1] / dims[1]).round() as i64, (u[2] / dims[2]).round() as i64];
    let off = (u - slot_centre(&idx, dims)).abs();
    if (0..3).any(|j| off[j] > 1e-6 * dims[j]) {
        return Err(Error::domain(format!("box center {u:?} is off the slot lattice")));
    }
    Ok(idx)
}

/// Whether the box with frame coordinates `u` fits in `[-L, L]^3`.
fn fits(frame: &Frame, u: &Vec3, dims: &[f64; 3], l: f64) -> bool {
    let c = frame.point(u);
    let axes = frame.axes();
    (0..3).all(|x| {
        let ext: f64 = (0..3).map(|j| 0.5 * dims[j] * axes[j][x].abs()).sum();
        c[x].abs() + ext <= l * (1.0 + 1e-12)
    })
}

fn admissible_slots(layout: &Layout, frames: &[Frame]) -> Vec<Slot> {
    let l = layout.ambient;
    let d = layout.dims;
    let span = |j: usize| (l * 3f64.sqrt() / d[j]).ceil() as i64;
    let mut out = Vec::new();
    for (dir, frame) in frames.iter().enumerate() {
        for i in -span(0)..=span(0) {
            for j in -span(1)..=span(1) {
                for k in -span(2)..=span(2) {
                    let idx = [i, j, k];
                    if fits(frame, &slot_centre(&idx, &d), &d, l) {
                        out.push(Slot { dir, idx });
                    }
                }
            }
        }
    }
    out
}

struct Loads<'a> {
    containers: &'a [Container],
    dims: [f64; 3],
    counts: HashMap<(usize, usize, [i64; 3]), usize>,
    rejected: Vec<usize>,
}

impl<'a> Loads<'a> {
    fn new(layout: &'a Layout) -> Self {
        Loads {
            containers: &layout.containers,
            dims: layout.dims,
            counts: HashMap::new(),
            rejected: vec![0; layout.containers.len()],
        }
    }

    fn keys(&self, slot: &Slot) -> Vec<(usize, usize, [i64; 3])> {
        self.containers
            .iter()
            .enumerate()
            .map(|(ci, c)| (ci, slot.dir, c.dims.map(|d| container_key(&slot.idx, &self.dims, &d)).unwrap_or([0; 3])))
            .collect()
    }

    /// Places the slot if no cap binds.
    fn try_place(&mut self, slot: &Slot) -> bool {
        let keys = self.keys(slot);
        for k in &keys {
            if self.counts.get(k).copied().unwrap_or(0) >= self.containers[k.0].cap {
                self.rejected[k.0] += 1;
                return false;
            }
        }
        for k in keys {
            *self.counts.entry(k).or_default() += 1;
        }
        true
    }

    fn binding(&self) -> &'static str {
        self.rejected
            .iter()
            .enumerate()
            .max_by_key(|(_, &r)| r)
            .map(|(i, _)| self.containers[i].name)
            .unwrap_or("density")
    }
}

/// Generates a separated family on grid slots of the boxes' own dimensions.
///
/// Uniform and plany modes place `round(density * slots)` boxes, drawing
/// slots without replacement and skipping placements that break a cap.
/// Grid mode keeps every `round(1/density)`-th slot that fits the caps.
/// Bush mode puts one box per direction at the origin.
pub fn generate_family(role: Role, scale: Scale, caps: Caps, density: f64, mode: Mode, seed: u64) -> Result<BoxFamily> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::domain(format!("density {density} outside (0, 1]")));
    }
    let layout = layout(role, scale, &caps)?;
    let frames = frames(&layout)?;
    let mut rng = rng::stream(seed, 0);
    let mut slots = Vec::new();
    let mut centres = Vec::new();
    let admissible;

    if mode == Mode::Bush {
        let any_zero = layout.containers.iter().any(|c| c.cap == 0);
        if any_zero || caps.n == Some(0) {
            return Err(Error::Infeasible { cap: "N".into(), detail: "a cap of 0 admits no box".into() });
        }
        if layout.structured.is_some() && (caps.n != Some(1) || caps.z1 != Some(1)) {
            return Err(Error::Infeasible {
                cap: "Z1".into(),
                detail: "a bush has one plank per tau and one tau per Sigma".into(),
            });
        }
        for dir in 0..frames.len() {
            slots.push(dir);
            centres.push(Vec3::zeros());
        }
        admissible = frames.len();
    } else {
        let mut all = admissible_slots(&layout, &frames);
        if mode == Mode::Plany {
            let c0: f64 = rng.gen_range(0.0..1.0);
            let normal = frenet_frame(c0)?.tangent;
            let thick = layout.dims[0];
            all.retain(|s| frames[s.dir].point(&slot_centre(&s.idx, &layout.dims)).dot(&normal).abs() <= thick);
        }
        admissible = all.len();
        let chosen: Vec<Slot> = match layout.structured {
            Some((tau, sigma)) => structured(&all, &layout, tau, sigma, &caps, density, mode, &mut rng)?,
            None => placed(all, &layout, density, mode, &mut rng)?,
        };
        for s in chosen {
            slots.push(s.dir);
            centres.push(frames[s.dir].point(&slot_centre(&s.idx, &layout.dims)));
        }
    }

    let box_scale = if role == Role::Plate { scale } else { Scale::R(layout.r) };
    let boxes = slots
        .iter()
        .zip(&centres)
        .map(|(&dir, c)| crate::geometry::make_box(role, Some(layout.intervals[dir]), box_scale, *c))
        .collect::<Result<Vec<_>>>()?;
    let family = BoxFamily {
        role,
        scale,
        caps,
        mode,
        density,
        seed,
        intervals: layout.intervals.clone(),
        boxes,
        direction: slots,
        ambient: layout.ambient,
        admissible_slots: admissible,
        layout,
    };
    family.check_caps()?;
    Ok(family)
}

/// A density the caps comfortably admit: half the tightest container
/// allowance, or exactly filling per-direction caps. Structured plank
/// layouts use 1% of the eligible `Sigma` boxes.
pub fn default_density(role: Role, scale: Scale, caps: Caps) -> Result<f64> {
    let layout = layout(role, scale, &caps)?;
    if layout.structured.is_some() {
        return Ok(0.01);
    }
    let mut d: f64 = 0.5;
    let mut per_dir_caps = layout.containers.iter().filter(|c| c.dims.is_none()).map(|c| c.cap).peekable();
    if per_dir_caps.peek().is_some() {
        let cap = per_dir_caps.min().unwrap_or(usize::MAX);
        let frames = frames(&layout)?;
        let all = admissible_slots(&layout, &frames);
        let mut per = vec![0usize; frames.len()];
        for s in &all {
            per[s.dir] += 1;
        }
        let fill: usize = per.iter().map(|&p| p.min(cap)).sum();
        d = d.min(fill as f64 / all.len().max(1) as f64);
    }
    for c in layout.containers.iter() {
        if let Some(dims) = c.dims {
            let slots: f64 = (0..3).map(|j| (dims[j] / layout.dims[j]).round().max(1.0)).product();
            d = d.min(0.5 * c.cap as f64 / slots);
        }
    }
    Ok(d)
}

fn placed(mut all: Vec<Slot>, layout: &Layout, density: f64, mode: Mode, rng: &mut rng::Rng) -> Result<Vec<Slot>> {
    let mut loads = Loads::new(layout);
    let mut out = Vec::new();
    if mode == Mode::Grid {
        let stride = (1.0 / density).round().max(1.0) as usize;
        for s in all.iter().step_by(stride) {
            if loads.try_place(s) {
                out.push(*s);
            }
        }
        return Ok(out);
    }
    let target = (density * all.len() as f64).round() as usize;
    all.shuffle(rng);
    for s in &all {
        if out.len() == target {
            break;
        }
        if loads.try_place(s) {
            out.push(*s);
        }
    }
    if out.len() < target {
        return Err(Error::Infeasible {
            cap: loads.binding().into(),
            detail: format!("placed {} of {target} boxes at density {density}", out.len()),
        });
    }
    out.sort();
    Ok(out)
}

/// `Sigma` boxes hold exactly `Z1` heavy `tau` boxes, each with exactly `N`
/// planks; `density` is the fraction of eligible `Sigma` boxes used.
#[allow(clippy::too_many_arguments)]
fn structured(
    all: &[Slot],
    layout: &Layout,
    tau: [f64; 3],
    sigma: [f64; 3],
    caps: &Caps,
    density: f64,
    mode: Mode,
    rng: &mut rng::Rng,
) -> Result<Vec<Slot>> {
    let n = caps.n.unwrap_or(1);
    let z1 = caps.z1.unwrap_or(1);
    let mut taus: HashMap<(usize, [i64; 3]), Vec<Slot>> = HashMap::new();
    for s in all {
        taus.entry((s.dir, container_key(&s.idx, &layout.dims, &tau))).or_default().push(*s);
    }
    let mut sigmas: HashMap<(usize, [i64; 3]), Vec<(usize, [i64; 3])>> = HashMap::new();
    for (key, members) in &taus {
        if members.len() >= n {
            sigmas.entry((key.0, container_key(&key.1, &tau, &sigma))).or_default().push(*key);
        }
    }
    let mut eligible: Vec<_> = sigmas.into_iter().filter(|(_, t)| t.len() >= z1).collect();
    eligible.sort();
    if eligible.is_empty() {
        let cap = if taus.values().any(|m| m.len() >= n) { "Z1" } else { "N" };
        return Err(Error::Infeasible { cap: cap.into(), detail: "no Sigma box can host the layout".into() });
    }
    let target = ((density * eligible.len() as f64).round() as usize).max(1);
    let picked: Vec<_> = match mode {
        Mode::Grid => {
            let stride = (1.0 / density).round().max(1.0) as usize;
            eligible.iter().step_by(stride).cloned().collect()
        }
        _ => eligible.choose_multiple(rng, target).cloned().collect(),
    };
    let mut out = Vec::new();
    for (_, mut tau_keys) in picked {
        tau_keys.sort();
        let heavy: Vec<_> = tau_keys.choose_multiple(rng, z1).cloned().collect();
        for key in heavy {
            let mut members = taus[&key].clone();
            members.sort();
            out.extend(members.choose_multiple(rng, n).cloned());
        }
    }
    out.sort();
    Ok(out)
}
