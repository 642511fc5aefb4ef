//! Families of tubes, plates and planks under spacing caps, rich-cube
//! counting, L4 sums of indicator functions, and the incidence bounds.

mod cubes;
mod family;
mod l4;
mod union;
mod verify;

pub use cubes::{
    brute_force_rich_cubes, count_rich_cubes, cube_counts, cube_counts_brute, cube_counts_mapped, cubes_meeting,
    cubes_meeting_brute, family_grid, CubeCounts, CubeGrid, RichCube, RichCubeQuery,
};
pub use family::{default_density, generate_family, BoxFamily, Caps, Mode};
pub use l4::{
    delta_plank, l4_plank_sum, l4_sum, origin_family, triple_volume, triple_volume_formula, triple_volume_law,
    L4Method, L4Sums, TripleCase, EXACT_DELTA_CAP, EXACT_TERM_CAP,
};
pub use union::{containment_slack, plate_delta, verify_union_lemmas, UnionReport, UnionRow, SLACK_CAP, VOLUME_BAND};
pub use verify::{
    dyadic_r_grid, fit_envelope, sigma_search, verify_plank_incidence, verify_plate_kakeya, verify_tube_incidence,
    BoundSummary, Envelope, FamilyOptions, IncidenceReport, IncidenceRow, PlateBound, SigmaChoice, SLACK_EXPONENT,
};
