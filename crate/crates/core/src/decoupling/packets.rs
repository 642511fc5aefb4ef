use num_complex::Complex64;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::e;
use super::pigeonhole::Parameters;
use crate::geometry::{gamma, make_box, Interval, OrientedBox, Role, Scale};
use crate::{rng, Error, Result, Vec3};

/// Plates `(R^{1/2}, R, R)` over intervals of length `R^{-1/2}`, or planks
/// `(R^{1/3}, R^{2/3}, R)` over intervals of length `R^{-1/3}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PacketScale {
    Half,
    Third,
}

impl PacketScale {
    pub fn interval_len(self, r: f64) -> f64 {
        match self {
            PacketScale::Half => r.powf(-0.5),
            PacketScale::Third => r.powf(-1.0 / 3.0),
        }
    }

    pub fn make_box(self, r: f64, carrier: Interval, center: Vec3) -> Result<OrientedBox> {
        match self {
            PacketScale::Half => make_box(Role::Plate, Some(carrier), Scale::Delta(r.powf(-0.5)), center),
            PacketScale::Third => make_box(Role::SpatialPlank, Some(carrier), Scale::R(r), center),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Packet {
    pub scale: PacketScale,
    #[serde(rename = "box")]
    pub bx: OrientedBox,
    pub coeff: Complex64,
    pub carrier: Interval,
}

impl Packet {
    /// Carrier frequency: the curve point over the carrier's center.
    pub fn frequency(&self) -> Vec3 {
        gamma(self.carrier.center())
    }

    pub fn height(&self) -> f64 {
        self.coeff.norm()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketEnsemble {
    #[serde(rename = "R")]
    pub r: f64,
    pub packets: Vec<Packet>,
    pub params: Parameters,
}

impl PacketEnsemble {
    pub fn new(r: f64) -> Result<Self> {
        if !(r >= 1.0) || !r.is_finite() {
            return Err(Error::domain(format!("scale R = {r} must be at least 1")));
        }
        Ok(PacketEnsemble { r, packets: Vec::new(), params: Parameters::default() })
    }

    /// Adds a packet over the `index`-th interval of its scale.
    pub fn push(&mut self, scale: PacketScale, index: usize, center: Vec3, coeff: Complex64) -> Result<&Packet> {
        let len = scale.interval_len(self.r);
        let count = (1.0 / len).round() as usize;
        if index >= count {
            return Err(Error::domain(format!("interval index {index} out of range 0..{count}")));
        }
        let carrier = Interval::new(index as f64 * len, ((index + 1) as f64 * len).min(1.0))?;
        let bx = scale.make_box(self.r, carrier, center)?;
        self.packets.push(Packet { scale, bx, coeff, carrier });
        Ok(self.packets.last().expect("just pushed"))
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    pub fn of_scale(&self, scale: PacketScale) -> impl Iterator<Item = (usize, &Packet)> {
        self.packets.iter().enumerate().filter(move |(_, p)| p.scale == scale)
    }
}

/// Separable window: `1` on the box, a raised-cosine blend over `blend`
/// (in edge units) into the tail `(1 + (s - 1/2)/blend)^-decay`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub decay: f64,
    pub blend: f64,
}

impl Default for Window {
    fn default() -> Self {
        Window { decay: 20.0, blend: 0.25 }
    }
}

impl Window {
    /// Profile in one local coordinate; `s = |u|` with the box at `s <= 1/2`.
    pub fn profile(&self, s: f64) -> f64 {
        if s <= 0.5 {
            return 1.0;
        }
        let excess = s - 0.5;
        let tail = (1.0 + excess / self.blend).powf(-self.decay);
        if excess >= self.blend {
            return tail;
        }
        let c = 0.5 * (1.0 + (std::f64::consts::PI * excess / self.blend).cos());
        c + (1.0 - c) * tail
    }

    /// Product of the profiles of the local coordinates.
    pub fn weight(&self, local: &Vec3) -> f64 {
        local.iter().map(|u| self.profile(u.abs())).product()
    }
}

struct Prepared {
    center: Vec3,
    inverse: crate::Mat3,
    freq: Vec3,
    coeff: Complex64,
}

/// `F(x) = sum_W A_W chi_W(x) e(x . xi_W)`.
pub struct PacketField {
    window: Window,
    packets: Vec<Prepared>,
    /// Identical boxes carrying different frequencies; such packets are summed.
    pub warnings: Vec<String>,
}

pub fn synthesize_from_packets(ensemble: &PacketEnsemble, window: Window) -> PacketField {
    synthesize_subset(ensemble, window, &(0..ensemble.len()).collect::<Vec<_>>())
}

/// Field of the packets with the given indices.
pub fn synthesize_subset(ensemble: &PacketEnsemble, window: Window, indices: &[usize]) -> PacketField {
    let mut warnings = Vec::new();
    let mut seen: std::collections::HashMap<[u64; 6], (usize, Interval)> = std::collections::HashMap::new();
    let packets = indices
        .iter()
        .map(|&i| {
            let p = &ensemble.packets[i];
            let key = [
                p.bx.center.x.to_bits(),
                p.bx.center.y.to_bits(),
                p.bx.center.z.to_bits(),
                p.bx.lengths[0].to_bits(),
                p.bx.axes[0].x.to_bits(),
                p.bx.axes[0].y.to_bits(),
            ];
            match seen.get(&key) {
                Some((j, carrier)) if *carrier != p.carrier => warnings.push(format!(
                    "packets {j} and {i} share a box but carry [{:.6}, {:.6}] and [{:.6}, {:.6}]; summed",
                    carrier.lo, carrier.hi, p.carrier.lo, p.carrier.hi
                )),
                Some(_) => {}
                None => {
                    seen.insert(key, (i, p.carrier));
                }
            }
            Prepared {
                center: p.bx.center,
                inverse: p.bx.edges().try_inverse().expect("nondegenerate box"),
                freq: p.frequency(),
                coeff: p.coeff,
            }
        })
        .collect();
    PacketField { window, packets, warnings }
}

impl PacketField {
    pub fn eval(&self, x: &Vec3) -> Complex64 {
        self.packets
            .iter()
            .map(|p| {
                let w = self.window.weight(&(p.inverse * (x - p.center)));
                if w == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    p.coeff * w * e(x.dot(&p.freq))
                }
            })
            .sum()
    }

    /// Monte Carlo `int_region |F|^p` with its standard error.
    pub fn lp_integral(&self, p: f64, region: &OrientedBox, samples: usize, seed: u64) -> Result<(f64, f64)> {
        if samples < super::MIN_SAMPLES {
            return Err(Error::SampleBudget(samples));
        }
        let mut rng = rng::stream(seed, 0);
        let edges = region.edges();
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..samples {
            let u = Vec3::from_fn(|_, _| rng.gen::<f64>() - 0.5);
            let v = self.eval(&(region.center + edges * u)).norm().powf(p);
            s1 += v;
            s2 += v * v;
        }
        let n = samples as f64;
        let mean = s1 / n;
        let var = (s2 / n - mean * mean).max(0.0) / (n - 1.0);
        let vol = region.volume();
        Ok((vol * mean, vol * var.sqrt()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_shape() {
        let w = Window::default();
        assert_eq!(w.profile(0.3), 1.0);
        assert_eq!(w.profile(0.5), 1.0);
        assert!(w.profile(0.6) < 1.0 && w.profile(0.6) > w.profile(0.7));
        assert!((w.profile(1.0) - 3f64.powf(-20.0)).abs() < 1e-18);
    }

    #[test]
    fn single_packet_modulus() {
        let r = 4096.0;
        let mut ens = PacketEnsemble::new(r).unwrap();
        let a = Complex64::new(0.0, 2.5);
        ens.push(PacketScale::Half, 10, Vec3::new(5.0, -3.0, 2.0), a).unwrap();
        let f = synthesize_from_packets(&ens, Window::default());
        let b = &ens.packets[0].bx;
        let mut rng = rng::stream(1, 0);
        for _ in 0..200 {
            let u = Vec3::from_fn(|_, _| rng.gen_range(-0.5..0.5));
            let x = b.center + b.edges() * u;
            assert!((f.eval(&x).norm() - 2.5).abs() < 1e-9);
            let out = b.center + b.edges() * (u * 3.0);
            let env = 2.5 * Window::default().weight(&(u * 3.0));
            assert!(f.eval(&out).norm() <= env + 1e-12);
        }
    }

    #[test]
    fn zero_coefficients_vanish_and_duplicates_warn() {
        let mut ens = PacketEnsemble::new(4096.0).unwrap();
        ens.push(PacketScale::Third, 2, Vec3::zeros(), Complex64::new(0.0, 0.0)).unwrap();
        let f = synthesize_from_packets(&ens, Window::default());
        assert_eq!(f.eval(&Vec3::new(1.0, 2.0, 3.0)).norm(), 0.0);
        assert!(f.warnings.is_empty());
        let mut dup = PacketEnsemble::new(4096.0).unwrap();
        let c = Complex64::new(1.0, 0.0);
        dup.push(PacketScale::Half, 3, Vec3::zeros(), c).unwrap();
        let mut p = dup.packets[0].clone();
        p.carrier = Interval::new(0.5, 0.5 + 1.0 / 64.0).unwrap();
        dup.packets.push(p);
        assert_eq!(synthesize_from_packets(&dup, Window::default()).warnings.len(), 1);
    }
}
