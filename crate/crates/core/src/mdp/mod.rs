//! Rate functions, the block martingale decomposition, exact and
//! importance-sampling tail oracles, and moderate-deviation scans.

mod decompose;
mod oracle;
mod rate;
mod scan;

pub use decompose::{block_martingale_decompose, BlockDecomposition};
pub use oracle::{
    cramer_binomial_tail_log, exact_binomial_tail_log, ln_normal_tail, saddlepoint_tail_log, solve_tilt,
    tilted_is_estimator, TiltedEstimate,
};
pub use rate::{endpoint_rate, rate_i, rate_i_with, rate_j_weighted, PiecewiseLinearPath, ZeroSigma};
pub use scan::{
    empirical_mdp_point, mdp_scan, DeviationScanReport, MdpPoint, PointRequest, ScanRow, TailMethod,
    NAIVE_MIN_EXPECTED,
};
