//! Expected hitting times `h = N 1` and staying times `s^T = 1^T N`, with
//! `N = (I - Q)^{-1}` never formed explicitly.

use serde::{Deserialize, Serialize};

use crate::chain::{AbsorbingChain, Distribution};
use crate::error::{Error, Result};
use crate::linalg::MMatrixFactor;

/// Largest accepted residual `||(I - Q) x - 1||_inf / ||x||_inf`.
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingTimes {
    /// Expected iterations to reach the optimal set, per non-optimal state.
    pub hitting: Vec<f64>,
    /// Expected visits to each non-optimal state, summed over all starts.
    pub staying: Vec<f64>,
    pub hitting_residual: f64,
    pub staying_residual: f64,
}

impl HittingTimes {
    pub fn sum_hitting(&self) -> f64 {
        self.hitting.iter().sum()
    }

    pub fn sum_staying(&self) -> f64 {
        self.staying.iter().sum()
    }
}

/// Solves `(I - Q) h = 1` and `s^T (I - Q) = 1^T`.
///
/// The factorization works on the off-diagonal entries and the absorption
/// mass only, so it stays accurate when `1 - rho(Q)` is far below machine
/// epsilon and the times run to `1e17` and beyond.
pub fn hitting_times(chain: &AbsorbingChain) -> Result<HittingTimes> {
    let m = chain.dim();
    let factor = MMatrixFactor::factor(chain.q(), chain.leak())?;
    let ones = vec![1.0; m];
    let hitting = factor.solve(&ones);
    let staying = factor.solve_transposed(&ones);
    if let Some(state) = hitting.iter().chain(&staying).position(|v| !v.is_finite()) {
        return Err(Error::Singular {
            state: state % m.max(1),
        });
    }
    let hitting_residual = relative_residual(&hitting, &residual_right(chain, &hitting));
    let staying_residual = relative_residual(&staying, &residual_left(chain, &staying));
    let worst = hitting_residual.max(staying_residual);
    if worst > RESIDUAL_TOL {
        return Err(Error::SingularMatrix(format!(
            "relative residual {worst:e} exceeds {RESIDUAL_TOL:e}"
        )));
    }
    Ok(HittingTimes {
        hitting,
        staying,
        hitting_residual,
        staying_residual,
    })
}

/// `(I - Q) x` with the diagonal written as the outflow mass.
fn residual_right(chain: &AbsorbingChain, x: &[f64]) -> Vec<f64> {
    let q = chain.q();
    (0..chain.dim())
        .map(|i| {
            let off: f64 = chain
                .nonzero(i)
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| q[(i, j)] * x[j])
                .sum();
            chain.outflow()[i] * x[i] - off - 1.0
        })
        .collect()
}

/// `x^T (I - Q)` minus the ones vector.
fn residual_left(chain: &AbsorbingChain, x: &[f64]) -> Vec<f64> {
    let q = chain.q();
    let m = chain.dim();
    let mut inflow = vec![0.0; m];
    for i in 0..m {
        for &j in chain.nonzero(i) {
            if j != i {
                inflow[j] += x[i] * q[(i, j)];
            }
        }
    }
    (0..m)
        .map(|j| chain.outflow()[j] * x[j] - inflow[j] - 1.0)
        .collect()
}

fn relative_residual(x: &[f64], r: &[f64]) -> f64 {
    let scale = x.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    r.iter().fold(0.0f64, |a, v| a.max(v.abs())) / scale
}

/// `|sum(h) - sum(s)| / sum(h)`; both sums equal `1^T N 1`.
pub fn forward_backward_identity(times: &HittingTimes) -> f64 {
    let h = times.sum_hitting();
    if h == 0.0 {
        return 0.0;
    }
    (h - times.sum_staying()).abs() / h
}

/// `h(Phi_0) = sum_X h(X) P(Phi_0 = X)`; optimal starts contribute zero.
pub fn mean_hitting_time(times: &HittingTimes, q0: &Distribution) -> Result<f64> {
    if q0.len() != times.hitting.len() {
        return Err(Error::DimensionMismatch {
            expected: times.hitting.len(),
            found: q0.len(),
        });
    }
    Ok(q0
        .weights()
        .iter()
        .zip(&times.hitting)
        .map(|(w, h)| w * h)
        .sum())
}
