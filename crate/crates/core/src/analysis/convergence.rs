//! Convergence verdicts: the spectral test `rho(Q) < 1` and the
//! reachability test (every non-optimal state can reach the optimal set).

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::analysis::spectral::{spectral_radius_with, SpectralEstimate, SpectralOptions};
use crate::chain::{AbsorbingChain, StateSpace, TransitionKernel};
use crate::error::{Error, Result};
use crate::linalg::MMatrixFactor;

/// A radius this close to 1 is not trusted as convergent without the
/// exact-pivot check on `I - Q`.
pub const CONVERGENCE_MARGIN: f64 = 1e-9;

const GAP_REL_TOL: f64 = 1e-9;
const GAP_MAX_ITERS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictMethod {
    Spectral,
    Reachability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceVerdict {
    pub convergent: bool,
    pub method: VerdictMethod,
    pub spectral_radius: Option<f64>,
    /// `1 - rho(Q)`, resolved below machine epsilon when needed.
    pub spectral_gap: Option<f64>,
    /// Longest shortest path (in steps) from a non-optimal state to the
    /// optimal set.
    pub witness_k: Option<usize>,
    /// Original indices of states with no path to the optimal set.
    pub stuck_states: Vec<usize>,
}

/// `rho(Q)` together with an accurately resolved gap `1 - rho(Q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralSummary {
    pub estimate: SpectralEstimate,
    pub gap: f64,
}

impl SpectralSummary {
    pub fn rho(&self) -> f64 {
        self.estimate.rho
    }

    pub fn convergent(&self) -> bool {
        self.gap > 0.0
    }

    /// `-ln rho(Q)`, accurate for radii next to 1.
    pub fn neg_log_rho(&self) -> f64 {
        if self.estimate.rho < 0.5 {
            -self.estimate.rho.ln()
        } else {
            -(-self.gap).ln_1p()
        }
    }
}

/// Computes `rho(Q)` and, when it is within [`CONVERGENCE_MARGIN`] of 1,
/// settles whether it is exactly 1 via the subtraction-free factorization of
/// `I - Q`: a zero pivot means a closed class of non-optimal states, and
/// otherwise `1 / rho((I - Q)^{-1})` gives the gap to full relative accuracy.
pub fn spectral_summary(chain: &AbsorbingChain, opts: &SpectralOptions) -> Result<SpectralSummary> {
    let estimate = spectral_radius_with(chain, opts)?;
    if estimate.rho < 1.0 - CONVERGENCE_MARGIN {
        return Ok(SpectralSummary {
            estimate,
            gap: 1.0 - estimate.rho,
        });
    }
    let gap = match MMatrixFactor::factor(chain.q(), chain.leak()) {
        Err(Error::Singular { .. }) => 0.0,
        Err(e) => return Err(e),
        Ok(factor) => inverse_gap(&factor),
    };
    Ok(SpectralSummary { estimate, gap })
}

/// Power iteration on the nonnegative matrix `(I - Q)^{-1}`, whose Perron
/// root is `1 / (1 - rho(Q))`.
fn inverse_gap(factor: &MMatrixFactor) -> f64 {
    let m = factor.dim();
    let mut x = vec![1.0; m];
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    for _ in 0..GAP_MAX_ITERS {
        let y = factor.solve(&x);
        // Collatz-Wielandt bounds of this sweep, each rigorous
        let (clo, chi) = y
            .iter()
            .zip(&x)
            .map(|(a, b)| a / b)
            .fold((f64::INFINITY, 0.0f64), |(l, h), r| (l.min(r), h.max(r)));
        lo = lo.max(clo);
        hi = hi.min(chi);
        let top = y.iter().copied().fold(0.0, f64::max);
        x = y.into_iter().map(|v| v / top).collect();
        if hi - lo <= GAP_REL_TOL * hi {
            break;
        }
    }
    2.0 / (lo + hi)
}

/// Spectral verdict: convergent iff `rho(Q) < 1`.
pub fn check_convergence_spectral(chain: &AbsorbingChain) -> Result<ConvergenceVerdict> {
    let summary = spectral_summary(chain, &SpectralOptions::default())?;
    let stuck_states = if summary.convergent() {
        Vec::new()
    } else {
        stuck_in_chain(chain)
    };
    Ok(ConvergenceVerdict {
        convergent: summary.convergent(),
        method: VerdictMethod::Spectral,
        spectral_radius: Some(summary.rho()),
        spectral_gap: Some(summary.gap),
        witness_k: None,
        stuck_states,
    })
}

/// Reachability verdict by reverse breadth-first search from the optimal
/// states over the support graph of the kernel.
pub fn check_convergence_reachability(
    kernel: &TransitionKernel,
    space: &StateSpace,
) -> ConvergenceVerdict {
    let n = kernel.size();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for (j, &p) in kernel.matrix().row(i).iter().enumerate() {
            if p > 0.0 && i != j {
                preds[j].push(i);
            }
        }
    }
    let depth = bfs_depths(&preds, &space.optimal_states());
    let non_opt = space.non_optimal_states();
    let stuck_states: Vec<usize> = non_opt
        .iter()
        .copied()
        .filter(|&i| depth[i].is_none())
        .collect();
    let convergent = stuck_states.is_empty();
    let witness_k = convergent.then(|| non_opt.iter().filter_map(|&i| depth[i]).max().unwrap_or(0));
    ConvergenceVerdict {
        convergent,
        method: VerdictMethod::Reachability,
        spectral_radius: None,
        spectral_gap: None,
        witness_k,
        stuck_states,
    }
}

fn bfs_depths(preds: &[Vec<usize>], sources: &[usize]) -> Vec<Option<usize>> {
    let mut depth = vec![None; preds.len()];
    let mut queue = VecDeque::new();
    for &s in sources {
        depth[s] = Some(0);
        queue.push_back(s);
    }
    while let Some(v) = queue.pop_front() {
        let d = depth[v].expect("queued states have a depth") + 1;
        for &u in &preds[v] {
            if depth[u].is_none() {
                depth[u] = Some(d);
                queue.push_back(u);
            }
        }
    }
    depth
}

/// Non-optimal states (original indices) that never reach the optimal set.
pub(crate) fn stuck_in_chain(chain: &AbsorbingChain) -> Vec<usize> {
    let m = chain.dim();
    // node m stands for the whole optimal set
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); m + 1];
    for i in 0..m {
        for &j in chain.nonzero(i) {
            if i != j {
                preds[j].push(i);
            }
        }
        if chain.leak()[i] > 0.0 {
            preds[m].push(i);
        }
    }
    let depth = bfs_depths(&preds, &[m]);
    (0..m)
        .filter(|&i| depth[i].is_none())
        .map(|i| chain.non_index()[i])
        .collect()
}
