//! Exact quantities of an absorbing chain: spectral radius, convergence
//! verdicts, hitting and staying times, and convergence-rate bounds.

pub mod convergence;
pub mod hitting;
pub mod rate;
pub mod spectral;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chain::{AbsorbingChain, Distribution, StateSpace, TransitionKernel};
use crate::error::{Error, Result};
use crate::float_serde;

pub use convergence::{
    check_convergence_reachability, check_convergence_spectral, spectral_summary,
    ConvergenceVerdict, SpectralSummary, VerdictMethod, CONVERGENCE_MARGIN,
};
pub use hitting::{forward_backward_identity, hitting_times, mean_hitting_time, HittingTimes};
pub use rate::{
    log_grid, rate_bounds, rate_bounds_at, read_rate_bounds_csv, write_rate_bounds_csv, RateBounds,
    RateRow, Q_SINGULAR,
};
pub use spectral::{
    spectral_radius, spectral_radius_with, SpectralEstimate, SpectralMethod, SpectralOptions,
};

/// Summary written to `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub rho: f64,
    pub convergent: bool,
    pub witness_k: Option<usize>,
    /// Indexed like `non_index`; empty when the chain is not convergent.
    #[serde(with = "float_serde::vec")]
    pub hitting_times: Vec<f64>,
    #[serde(with = "float_serde::vec")]
    pub staying_times: Vec<f64>,
    pub rate_bounds: Option<RateBounds>,
    #[serde(with = "float_serde")]
    pub spectral_gap: f64,
    pub stuck_states: Vec<usize>,
    /// `h(Phi_0)` for the initial distribution used by the rate bounds.
    #[serde(with = "float_serde::option")]
    pub mean_hitting_time: Option<f64>,
    pub non_index: Vec<usize>,
}

impl AnalysisReport {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    /// Initial distribution for the rate bounds and the mean hitting time.
    pub q0: Option<Distribution>,
    pub rate_horizon: u64,
}

/// Runs every exact analysis on a lumped kernel.
pub fn analyze(
    kernel: &TransitionKernel,
    space: &StateSpace,
    opts: &AnalysisOptions,
) -> Result<(AbsorbingChain, AnalysisReport)> {
    let chain = crate::chain::build_chain(kernel, space)?;
    let summary = spectral_summary(&chain, &SpectralOptions::default())?;
    let reach = check_convergence_reachability(kernel, space);
    let convergent = summary.convergent();
    let times = if convergent {
        Some(hitting_times(&chain)?)
    } else {
        None
    };
    let mean = match (&times, &opts.q0) {
        (Some(t), Some(q0)) => Some(mean_hitting_time(t, q0)?),
        _ => None,
    };
    let rate = match &opts.q0 {
        Some(q0) if opts.rate_horizon >= 1 => match rate_bounds(&chain, q0, opts.rate_horizon) {
            Ok(b) => Some(b),
            Err(Error::ZeroMass) => None,
            Err(e) => return Err(e),
        },
        _ => None,
    };
    let (hitting, staying) = times.map(|t| (t.hitting, t.staying)).unwrap_or_default();
    let report = AnalysisReport {
        rho: summary.rho(),
        convergent,
        witness_k: reach.witness_k,
        hitting_times: hitting,
        staying_times: staying,
        rate_bounds: rate,
        spectral_gap: summary.gap,
        stuck_states: reach.stuck_states,
        mean_hitting_time: mean,
        non_index: chain.non_index().to_vec(),
    };
    Ok((chain, report))
}
