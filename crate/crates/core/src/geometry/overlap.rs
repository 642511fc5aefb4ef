use super::boxes::OrientedBox;
use crate::Vec3;

/// Parallelepiped prepared for repeated separating-axis tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SatBox {
    pub center: Vec3,
    /// Full edge vectors.
    pub edges: [Vec3; 3],
    /// Face normals (not normalised): `e1 x e2`, `e2 x e0`, `e0 x e1`.
    pub normals: [Vec3; 3],
}

impl SatBox {
    pub fn new(center: Vec3, edges: [Vec3; 3]) -> Self {
        let normals = [
            edges[1].cross(&edges[2]),
            edges[2].cross(&edges[0]),
            edges[0].cross(&edges[1]),
        ];
        SatBox { center, edges, normals }
    }

    pub fn from_box(b: &OrientedBox) -> Self {
        let e = b.edges();
        SatBox::new(b.center, [e.column(0).into(), e.column(1).into(), e.column(2).into()])
    }

    /// Half-extent of the projection onto `axis`.
    #[inline]
    pub fn radius(&self, axis: &Vec3) -> f64 {
        0.5 * (axis.dot(&self.edges[0]).abs() + axis.dot(&self.edges[1]).abs() + axis.dot(&self.edges[2]).abs())
    }

    /// The 15 candidate separating axes against `other`, skipping
    /// degenerate cross products. Returns the axes and how many are valid.
    pub fn axes_against(&self, other: &SatBox) -> ([Vec3; 15], usize) {
        let mut axes = [Vec3::zeros(); 15];
        axes[..3].copy_from_slice(&self.normals);
        axes[3..6].copy_from_slice(&other.normals);
        let mut n = 6;
        for a in &self.edges {
            for b in &other.edges {
                let c = a.cross(b);
                if c.norm() > 1e-12 * a.norm() * b.norm() {
                    axes[n] = c;
                    n += 1;
                }
            }
        }
        (axes, n)
    }

    /// Closed-set overlap test.
    pub fn intersects(&self, other: &SatBox) -> bool {
        let d = other.center - self.center;
        let (axes, n) = self.axes_against(other);
        axes[..n].iter().all(|axis| {
            let ra = self.radius(axis);
            let rb = other.radius(axis);
            axis.dot(&d).abs() <= (ra + rb) * (1.0 + 1e-12)
        })
    }
}

/// Whether two closed boxes share a point.
pub fn boxes_intersect(a: &OrientedBox, b: &OrientedBox) -> bool {
    SatBox::from_box(a).intersects(&SatBox::from_box(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{intersect_boxes, Role};
    use rand::Rng;

    fn random_box(rng: &mut crate::rng::Rng) -> OrientedBox {
        let mut v = || Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let center = v() * 1.5;
        let axes = [v(), v(), v()];
        let lengths = [0.3 + v().norm(), 0.3 + v().norm(), 0.3 + v().norm()];
        OrientedBox::new(center, axes, lengths, Role::Generic, None).unwrap_or_else(|_| {
            OrientedBox::cube(center, 1.0, Role::Generic).unwrap()
        })
    }

    #[test]
    fn agrees_with_polytope_clipping() {
        let mut rng = crate::rng::stream(21, 0);
        let mut hits = 0;
        for _ in 0..600 {
            let a = random_box(&mut rng);
            let b = random_box(&mut rng);
            let clip = intersect_boxes(&[a.clone(), b.clone()]).unwrap().volume();
            let sat = boxes_intersect(&a, &b);
            // skip near-touching pairs where volume is a sliver
            if clip > 1e-6 {
                assert!(sat);
                hits += 1;
            } else if clip == 0.0 && !sat {
                continue;
            } else if clip == 0.0 && sat {
                // touching or sliver: the two boxes must be within a hair
                let grown = intersect_boxes(&[a.scaled(1.001), b.scaled(1.001)]).unwrap().volume();
                assert!(grown > 0.0);
            }
        }
        assert!(hits > 50);
    }

    #[test]
    fn touching_cubes_intersect_as_closed_sets() {
        let a = OrientedBox::cube(Vec3::zeros(), 1.0, Role::Generic).unwrap();
        let b = a.translated(&Vec3::new(1.0, 1.0, 0.0));
        assert!(boxes_intersect(&a, &b));
        let c = a.translated(&Vec3::new(1.0 + 1e-9, 0.0, 0.0));
        assert!(!boxes_intersect(&a, &c));
    }
}
