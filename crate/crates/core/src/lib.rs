//! Absorbing Markov chain models of randomised search heuristics.
//!
//! A heuristic on a finite state space becomes a kernel whose optimal states
//! are absorbing. From the canonical split into the transient block `Q` and
//! the absorbing block `R` this crate computes the convergence verdict, the
//! average convergence rate and its bounds, expected hitting and staying
//! times, and drift certificates, and checks all of them against seeded
//! simulation.
//!
//! ```
//! use rsh_lab::{build_chain, check_convergence_spectral, Algorithm, Builtin};
//!
//! let problem = Builtin::Square.problem();
//! let algo = Algorithm::Rsh1;
//! let kernel = algo.kernel(&problem, &algo.default_params());
//! let chain = build_chain(&kernel, &problem.state_space()).unwrap();
//! let verdict = check_convergence_spectral(&chain).unwrap();
//! assert!(verdict.convergent);
//! assert!((verdict.spectral_radius.unwrap() - 0.99).abs() < 1e-10);
//! ```

pub mod analysis;
pub mod cancel;
pub mod chain;
pub mod drift;
pub mod error;
pub mod float_serde;
pub mod heuristics;
pub mod linalg;
pub mod problem;
pub mod sim;

pub use analysis::{
    analyze, check_convergence_reachability, check_convergence_spectral, forward_backward_identity,
    hitting_times, log_grid, mean_hitting_time, rate_bounds, rate_bounds_at, read_rate_bounds_csv,
    spectral_radius, write_rate_bounds_csv, AnalysisOptions, AnalysisReport, ConvergenceVerdict,
    HittingTimes, RateBounds, RateRow,
};
pub use cancel::CancelToken;
pub use chain::{
    build_chain, iterate, lump_optimal, nonopt_probability, AbsorbingChain, Distribution,
    StateSpace, TransitionKernel,
};
pub use drift::{
    average_drift, backward_drift, certify, pointwise_drift, Certificate, CertificateStatus,
    CertifyMode, DriftFunction, DriftReport,
};
pub use error::{Error, Result};
pub use heuristics::{kernel_rsh1, kernel_rsh2, Algorithm, WalkParams};
pub use problem::{Builtin, ProblemSpec};
pub use sim::{
    empirical_average_rate, empirical_convergence_curve, empirical_hitting_time, simulate,
    HittingEstimate, Init, RunStats, SimConfig,
};
