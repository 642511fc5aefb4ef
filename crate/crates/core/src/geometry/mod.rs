//! Exact geometry of the twisted cubic.

mod boxes;
mod frame;
mod overlap;
mod polytope;
mod shear;

pub use boxes::{dual_box, make_box, small_plank, Interval, OrientedBox, Role, Scale};
pub use frame::{frenet_frame, gamma, approx_normal, Frame};
pub use overlap::{boxes_intersect, SatBox};
pub use polytope::{intersect_boxes, polytope_volume, ConvexPolytope, HalfSpace};
pub use shear::{AffineShear, ShearMap};

/// Angle between two nonzero vectors, in radians.
pub fn angle_between(a: &crate::Vec3, b: &crate::Vec3) -> f64 {
    let c = a.dot(b) / (a.norm() * b.norm());
    c.clamp(-1.0, 1.0).acos()
}
