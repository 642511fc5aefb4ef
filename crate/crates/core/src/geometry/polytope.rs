use serde::{Deserialize, Serialize};

use super::boxes::{OrientedBox, Role};
use crate::{Error, Result, Vec3};

/// `{x : normal . x <= offset}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    pub normal: Vec3,
    pub offset: f64,
}

impl HalfSpace {
    pub fn new(normal: Vec3, offset: f64) -> Self {
        HalfSpace { normal, offset }
    }

    /// Signed violation; positive outside.
    pub fn eval(&self, x: &Vec3) -> f64 {
        self.normal.dot(x) - self.offset
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Face {
    normal: Vec3,
    verts: Vec<Vec3>,
}

/// Bounded convex polytope kept both as its half-spaces and as a boundary
/// representation (faces with cyclically ordered vertices).
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolytope {
    half_spaces: Vec<HalfSpace>,
    faces: Vec<Face>,
    seed_volume: f64,
    scale: f64,
}

/// Relative floor below which a clipped volume counts as empty.
const EMPTY_RELATIVE: f64 = 1e-12;
/// Side of the seed cube used when no bounding box is supplied.
const HUGE: f64 = 1e9;

impl ConvexPolytope {
    /// The polytope of a single box.
    pub fn from_box(b: &OrientedBox) -> Self {
        let v = b.vertices();
        let e = b.edges();
        let inv = e.try_inverse().expect("nondegenerate box");
        // vertex k has sign bits (k & 1, k & 2, k & 4) along the three edges
        let quads: [([usize; 4], usize, f64); 6] = [
            ([0, 2, 6, 4], 0, -1.0),
            ([1, 3, 7, 5], 0, 1.0),
            ([0, 1, 5, 4], 1, -1.0),
            ([2, 3, 7, 6], 1, 1.0),
            ([0, 1, 3, 2], 2, -1.0),
            ([4, 5, 7, 6], 2, 1.0),
        ];
        let faces = quads
            .iter()
            .map(|(idx, axis, sign)| {
                let row: Vec3 = inv.row(*axis).transpose();
                Face {
                    normal: row.normalize() * *sign,
                    verts: idx.iter().map(|&k| v[k]).collect(),
                }
            })
            .collect();
        let (lo, hi) = b.aabb();
        ConvexPolytope {
            half_spaces: b.half_spaces(),
            faces,
            seed_volume: b.volume(),
            scale: (hi - lo).norm(),
        }
    }

    /// Intersection of half-spaces, seeded by `bound` when given. Without a
    /// bound a huge cube is used and an unbounded result is rejected.
    pub fn from_half_spaces(half_spaces: &[HalfSpace], bound: Option<&OrientedBox>) -> Result<Self> {
        let seed = match bound {
            Some(b) => b.clone(),
            None => OrientedBox::cube(Vec3::repeat(-HUGE), 2.0 * HUGE, Role::Generic)?,
        };
        let mut p = ConvexPolytope::from_box(&seed);
        p.half_spaces.clear();
        for h in half_spaces {
            p = p.clip(h);
        }
        if bound.is_none() {
            let verts = p.vertices();
            let reach = verts.iter().fold(0.0f64, |m, v| m.max(v.amax()));
            if reach > 0.5 * HUGE {
                return Err(Error::Unbounded);
            }
            if verts.is_empty() {
                return Ok(p);
            }
            // second pass from a tight cube for full precision
            let (mut lo, mut hi) = (verts[0], verts[0]);
            for v in &verts {
                lo = lo.inf(v);
                hi = hi.sup(v);
            }
            let side = (hi - lo).amax() * 1.1 + 1e-9;
            let tight = OrientedBox::cube((lo + hi) * 0.5 - Vec3::repeat(0.5 * side), side, Role::Generic)?;
            return ConvexPolytope::from_half_spaces(half_spaces, Some(&tight));
        }
        Ok(p)
    }

    pub fn half_spaces(&self) -> &[HalfSpace] {
        &self.half_spaces
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty() || self.volume() == 0.0
    }

    /// Distinct vertices of the boundary representation.
    pub fn vertices(&self) -> Vec<Vec3> {
        let tol = 1e-12 * self.scale;
        let mut out: Vec<Vec3> = Vec::new();
        for f in &self.faces {
            for v in &f.verts {
                if !out.iter().any(|u| (u - v).norm() <= tol) {
                    out.push(*v);
                }
            }
        }
        out
    }

    /// Keep the part with `h.eval(x) <= 0`.
    pub fn clip(&self, h: &HalfSpace) -> Self {
        let norm = h.normal.norm();
        let h = HalfSpace::new(h.normal / norm, h.offset / norm);
        let eps = 1e-13 * self.scale.max(1e-300);
        let mut half_spaces = self.half_spaces.clone();
        half_spaces.push(h);
        let mut out = ConvexPolytope {
            half_spaces,
            faces: Vec::with_capacity(self.faces.len() + 1),
            seed_volume: self.seed_volume,
            scale: self.scale,
        };
        if self.faces.is_empty() {
            return out;
        }
        let mut any_out = false;
        let mut any_in = false;
        for f in &self.faces {
            for v in &f.verts {
                let d = h.eval(v);
                any_out |= d > eps;
                any_in |= d < -eps;
            }
        }
        if !any_out {
            out.faces = self.faces.clone();
            return out;
        }
        if !any_in {
            return out;
        }
        let mut cap: Vec<Vec3> = Vec::new();
        for f in &self.faces {
            let n = f.verts.len();
            let dist: Vec<f64> = f.verts.iter().map(|v| h.eval(v)).collect();
            let mut poly = Vec::with_capacity(n + 2);
            for i in 0..n {
                let j = (i + 1) % n;
                let (a, b) = (f.verts[i], f.verts[j]);
                let (da, db) = (dist[i], dist[j]);
                if da <= eps {
                    poly.push(a);
                    if da >= -eps {
                        cap.push(a);
                    }
                }
                if (da < -eps && db > eps) || (da > eps && db < -eps) {
                    let t = da / (da - db);
                    let p = a + (b - a) * t;
                    poly.push(p);
                    cap.push(p);
                }
            }
            dedup_cyclic(&mut poly, eps);
            if poly.len() >= 3 {
                out.faces.push(Face {
                    normal: f.normal,
                    verts: poly,
                });
            }
        }
        let mut uniq: Vec<Vec3> = Vec::new();
        for p in cap {
            if !uniq.iter().any(|u| (u - p).norm() <= 10.0 * eps) {
                uniq.push(p);
            }
        }
        if uniq.len() >= 3 {
            order_in_plane(&mut uniq, &h.normal);
            out.faces.push(Face {
                normal: h.normal,
                verts: uniq,
            });
        }
        out
    }

    /// Exact volume by fan tetrahedra around the vertex centroid; volumes
    /// below `1e-12` of the seed volume are reported as zero.
    pub fn volume(&self) -> f64 {
        if self.faces.is_empty() {
            return 0.0;
        }
        let verts = self.vertices();
        let o = verts.iter().fold(Vec3::zeros(), |s, v| s + v) / verts.len() as f64;
        let mut vol = 0.0;
        for f in &self.faces {
            let a = f.verts[0] - o;
            for k in 1..f.verts.len() - 1 {
                let b = f.verts[k] - o;
                let c = f.verts[k + 1] - o;
                vol += a.dot(&b.cross(&c)).abs();
            }
        }
        vol /= 6.0;
        if vol < EMPTY_RELATIVE * self.seed_volume {
            0.0
        } else {
            vol
        }
    }
}

fn dedup_cyclic(poly: &mut Vec<Vec3>, eps: f64) {
    let mut out: Vec<Vec3> = Vec::with_capacity(poly.len());
    for p in poly.iter() {
        if out.last().map_or(true, |q| (q - p).norm() > 10.0 * eps) {
            out.push(*p);
        }
    }
    while out.len() > 1 && (out[0] - out[out.len() - 1]).norm() <= 10.0 * eps {
        out.pop();
    }
    *poly = out;
}

fn order_in_plane(pts: &mut [Vec3], normal: &Vec3) {
    let c = pts.iter().fold(Vec3::zeros(), |s, v| s + v) / pts.len() as f64;
    let helper = if normal.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let u = normal.cross(&helper).normalize();
    let w = normal.cross(&u);
    pts.sort_by(|a, b| {
        let (da, db) = (a - c, b - c);
        let ta = da.dot(&w).atan2(da.dot(&u));
        let tb = db.dot(&w).atan2(db.dot(&u));
        ta.total_cmp(&tb)
    });
}

/// Common part of all `boxes`, by clipping the first against the others.
pub fn intersect_boxes(boxes: &[OrientedBox]) -> Result<ConvexPolytope> {
    let first = boxes
        .first()
        .ok_or_else(|| Error::domain("intersection of an empty box sequence"))?;
    let mut p = ConvexPolytope::from_box(first);
    for b in &boxes[1..] {
        for h in b.half_spaces() {
            p = p.clip(&h);
            if p.faces.is_empty() {
                return Ok(p);
            }
        }
    }
    Ok(p)
}

pub fn polytope_volume(p: &ConvexPolytope) -> f64 {
    p.volume()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_box, Interval, Scale};
    use approx::assert_relative_eq;
    use rand::Rng;

    fn unit_cube() -> OrientedBox {
        OrientedBox::cube(Vec3::zeros(), 1.0, Role::Generic).unwrap()
    }

    #[test]
    fn unit_cube_volume() {
        assert_relative_eq!(ConvexPolytope::from_box(&unit_cube()).volume(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn bisected_cube() {
        let p = ConvexPolytope::from_box(&unit_cube()).clip(&HalfSpace::new(Vec3::x(), 0.5));
        assert_relative_eq!(p.volume(), 0.5, max_relative = 1e-14);
        let diag = ConvexPolytope::from_box(&unit_cube()).clip(&HalfSpace::new(Vec3::new(1.0, 1.0, 0.0), 1.0));
        assert_relative_eq!(diag.volume(), 0.5, max_relative = 1e-14);
    }

    #[test]
    fn corner_tetrahedron() {
        let p = ConvexPolytope::from_box(&unit_cube()).clip(&HalfSpace::new(Vec3::new(1.0, 1.0, 1.0), 1.0));
        assert_relative_eq!(p.volume(), 1.0 / 6.0, max_relative = 1e-13);
    }

    fn tet_volume(v: &[Vec3; 4]) -> f64 {
        (v[1] - v[0]).dot(&(v[2] - v[0]).cross(&(v[3] - v[0]))).abs() / 6.0
    }

    #[test]
    fn random_simplex_matches_determinant() {
        let mut rng = crate::rng::stream(11, 0);
        for _ in 0..200 {
            let v: [Vec3; 4] = std::array::from_fn(|_| {
                Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let exact = tet_volume(&v);
            if exact < 1e-3 {
                continue;
            }
            let mut hs = Vec::new();
            for skip in 0..4 {
                let f: Vec<Vec3> = (0..4).filter(|&k| k != skip).map(|k| v[k]).collect();
                let mut n = (f[1] - f[0]).cross(&(f[2] - f[0]));
                if n.dot(&(v[skip] - f[0])) > 0.0 {
                    n = -n;
                }
                hs.push(HalfSpace::new(n, n.dot(&f[0])));
            }
            let bound = OrientedBox::cube(Vec3::repeat(-2.0), 4.0, Role::Generic).unwrap();
            let p = ConvexPolytope::from_half_spaces(&hs, Some(&bound)).unwrap();
            assert_relative_eq!(p.volume(), exact, max_relative = 1e-12);
            let q = ConvexPolytope::from_half_spaces(&hs, None).unwrap();
            assert_relative_eq!(q.volume(), exact, max_relative = 1e-9);
        }
    }

    #[test]
    fn unbounded_without_bound_rejected() {
        let hs = [HalfSpace::new(Vec3::x(), 1.0)];
        assert_eq!(ConvexPolytope::from_half_spaces(&hs, None).unwrap_err(), Error::Unbounded);
    }

    #[test]
    fn self_intersection_is_box() {
        let iv = Some(Interval::new(0.3, 0.35).unwrap());
        let b = make_box(Role::SpatialPlank, iv, Scale::R(512.0), Vec3::new(3.0, -2.0, 1.0)).unwrap();
        let p = intersect_boxes(&[b.clone(), b.clone()]).unwrap();
        assert_relative_eq!(p.volume(), b.volume(), max_relative = 1e-9);
    }

    #[test]
    fn disjoint_boxes_are_empty() {
        let a = unit_cube();
        let b = a.translated(&Vec3::new(2.0, 0.0, 0.0));
        assert!(intersect_boxes(&[a, b]).unwrap().is_empty());
    }

    #[test]
    fn face_touching_boxes_are_empty() {
        let a = unit_cube();
        let b = a.translated(&Vec3::new(1.0, 0.3, 0.0));
        assert_eq!(intersect_boxes(&[a, b]).unwrap().volume(), 0.0);
    }

    #[test]
    fn clipping_never_grows() {
        let mut rng = crate::rng::stream(12, 0);
        let mut p = ConvexPolytope::from_box(&unit_cube());
        let mut last = p.volume();
        for _ in 0..40 {
            let n = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let c = Vec3::repeat(0.5) + Vec3::new(rng.gen_range(-0.3..0.3), 0.0, 0.0);
            p = p.clip(&HalfSpace::new(n, n.dot(&c) + 0.2));
            let v = p.volume();
            assert!(v <= last * (1.0 + 1e-12));
            last = v;
        }
    }
}
