//! Exponential sums on the twisted cubic, L^p moments, decoupling ratios,
//! exponent arithmetic, wave packets and the pigeonholing analyzer.

mod exponents;
mod expsum;
mod moment;
mod packets;
mod pigeonhole;
mod ratio;

pub use exponents::{critical_p_bound, sigma_pd};
pub use expsum::{e, eval_exp_sum, interval_count, ExpSum};
pub use moment::{
    lp_moment, lp_moments, resonance_points, spectral_mean, Domain, MomentEstimate, MomentOptions, Sampler,
    MIN_SAMPLES, RESONANCE_CAP, SPECTRAL_CAP,
};
pub use packets::{
    synthesize_from_packets, synthesize_subset, Packet, PacketEnsemble, PacketField, PacketScale, Window,
};
pub use pigeonhole::{
    pigeonhole_analysis, planted_fixture, plank_height_check, random_ensemble, standard_fixtures, Auxiliary,
    FirstSequence, Parameters, Planted, HeightReport, SecondSequence, HEIGHT_FLOOR, HEIGHT_CONSTANT_CAP,
};
pub use ratio::{
    criticality_rows, criticality_summary, criticality_sweep, decoupling_ratio, decoupling_ratios, fit_line, flat_decoupling_check, log_slope,
    trilinear_ratio, CriticalityReport, CriticalityRow, FlatReport, LineFit, RatioEstimate, TrilinearEstimate,
    RANDOM_SLOPE_CAP, SLOPE_GAP_MIN, TRILINEAR_BLOCKS,
};
