//! Rank-one line probes, Legendre–Hadamard scans and scalar inequality checks.

pub mod checks;
pub mod fd;
pub mod optim;
pub mod probe;
pub mod report;
pub mod scan;
pub mod search;

pub use checks::{
    baker_ericksen_check, baker_ericksen_ordering_check, convexify_1d_check, convexify_coefficient, criterion_2d,
    linear_grid, log_grid, max_convexify_coefficient, monotonicity_necessity_check, sendova_walton_check,
    PROFILE_TOLERANCE,
};
pub use probe::{
    concave_critical_point, critical_tolerances, line_derivatives, line_profile, sample_points, CriticalPointVerdict,
    LineDerivatives, LineProfile, RankOneProbe,
};
pub use report::{CheckVerdict, ConvexityReport, Location};
pub use scan::{critical_directions, gradient_of, lh_scan, numeric_gradient, random_deformations, ScanConfig};
pub use search::{search_violation, SearchConfig, SearchOutcome, SearchStart};
