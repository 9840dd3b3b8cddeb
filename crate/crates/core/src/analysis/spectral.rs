//! Spectral radius of the nonnegative block `Q`.
//!
//! Power iteration from the all-ones vector, with the Collatz–Wielandt
//! ratios `min (Qx)_i / x_i <= rho <= max (Qx)_i / x_i` as a bracket. When
//! the iteration stagnates, or the bracket narrows only sublinearly
//! (defective or nearly defective `Q`, as for the elitist walk where every
//! diagonal entry is the same), the estimate is finished with Gelfand's
//! formula `||B^k||^(1/k)` by repeated squaring on each irreducible block `B`.

use serde::{Deserialize, Serialize};

use crate::cancel::CancelToken;
use crate::chain::AbsorbingChain;
use crate::error::{Error, Result};
use crate::linalg::{Lu, Matrix};

/// Sweeps in a row with no progress before switching to Gelfand squaring.
const STAGNATION_WINDOW: usize = 100;
/// Sweeps per progress check: a bracket that has not narrowed tenfold over
/// this many sweeps is converging sublinearly.
const PROGRESS_WINDOW: usize = 1000;
/// Upper limit on squarings; `2^64` iterations is beyond any useful horizon.
const MAX_SQUARINGS: u32 = 64;

#[derive(Debug, Clone)]
pub struct SpectralOptions {
    pub tol: f64,
    pub max_sweeps: usize,
    pub cancel: Option<CancelToken>,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_sweeps: 1_000_000,
            cancel: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralMethod {
    /// `Q^k 1` vanished, so `Q` is nilpotent.
    Nilpotent,
    PowerIteration,
    Gelfand,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralEstimate {
    pub rho: f64,
    pub method: SpectralMethod,
    pub sweeps: usize,
    /// Rigorous lower bound from the Collatz–Wielandt ratios.
    pub lower: f64,
    /// Upper bound (Collatz–Wielandt or Gelfand), never above 1.
    pub upper: f64,
}

/// `rho(Q)` to within `tol`.
pub fn spectral_radius(chain: &AbsorbingChain, tol: f64) -> Result<f64> {
    let opts = SpectralOptions {
        tol,
        ..SpectralOptions::default()
    };
    spectral_radius_with(chain, &opts).map(|e| e.rho)
}

pub fn spectral_radius_with(
    chain: &AbsorbingChain,
    opts: &SpectralOptions,
) -> Result<SpectralEstimate> {
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tolerance {} must be positive",
            opts.tol
        )));
    }
    let m = chain.dim();
    if m == 0 {
        return Ok(SpectralEstimate {
            rho: 0.0,
            method: SpectralMethod::Nilpotent,
            sweeps: 0,
            lower: 0.0,
            upper: 0.0,
        });
    }
    let tol = opts.tol;
    let mut x = vec![1.0 / m as f64; m];
    let mut lower: f64 = 0.0;
    let mut upper = chain.q().norm_inf().min(1.0);
    let mut prev = f64::NAN;
    let mut stalled = 0;
    let mut width_mark = f64::INFINITY;
    for sweep in 1..=opts.max_sweeps {
        if sweep % 1024 == 0 {
            CancelToken::check(opts.cancel.as_ref())?;
        }
        let y = chain.apply(&x);
        let norm: f64 = y.iter().sum();
        if norm == 0.0 {
            return Ok(SpectralEstimate {
                rho: 0.0,
                method: SpectralMethod::Nilpotent,
                sweeps: sweep,
                lower: 0.0,
                upper: 0.0,
            });
        }
        let (mut lo, mut hi, mut positive) = (f64::INFINITY, 0.0f64, true);
        let mut residual: f64 = 0.0;
        for (yi, xi) in y.iter().zip(&x) {
            if *xi > 0.0 {
                let ratio = yi / xi;
                lo = lo.min(ratio);
                hi = hi.max(ratio);
            } else {
                positive = false;
            }
            residual += (yi / norm - xi).abs();
        }
        lower = lower.max(lo);
        if positive {
            upper = upper.min(hi);
        }
        let estimate = norm.clamp(lower, upper.max(lower));
        // a small residual alone is not enough: for defective Q the iterate
        // settles long before the eigenvalue estimate does
        if upper - lower <= tol {
            return Ok(SpectralEstimate {
                rho: estimate,
                method: SpectralMethod::PowerIteration,
                sweeps: sweep,
                lower,
                upper,
            });
        }
        if ((estimate - prev) / estimate).abs() < tol / 10.0 && residual.max(upper - lower) > tol {
            stalled += 1;
        } else {
            stalled = 0;
        }
        let mut slow = false;
        if sweep % PROGRESS_WINDOW == 0 {
            let width = upper - lower;
            slow = width > width_mark / 10.0;
            width_mark = width;
        }
        if stalled >= STAGNATION_WINDOW || slow {
            return gelfand(chain, tol, lower, upper, sweep, opts.cancel.as_ref());
        }
        prev = estimate;
        x = y.into_iter().map(|v| v / norm).collect();
    }
    Err(Error::NoConvergence {
        sweeps: opts.max_sweeps,
        lower,
        upper,
    })
}

/// Gelfand squaring, applied to each irreducible diagonal block of `Q`.
///
/// The eigenvalues of `Q` are those of its irreducible blocks, and a block
/// of one state contributes its diagonal entry exactly. Working per block
/// matters: for a defective `Q` the normalised powers `Q^(2^j)` decay so fast
/// relative to their square roots that squaring the whole matrix underflows
/// long before the estimate is accurate.
fn gelfand(
    chain: &AbsorbingChain,
    tol: f64,
    lower: f64,
    upper: f64,
    sweeps: usize,
    cancel: Option<&CancelToken>,
) -> Result<SpectralEstimate> {
    let q = chain.q();
    let mut best: f64 = 0.0;
    for block in irreducible_blocks(chain) {
        CancelToken::check(cancel)?;
        let r = if let [i] = block[..] {
            q[(i, i)]
        } else {
            // any block whose terms drop below lower + tol is settled
            let b = submatrix(q, &block);
            block_gelfand(&b, lower + tol, cancel)?.exp()
        };
        best = best.max(r);
    }
    let upper = upper.min(best);
    Ok(SpectralEstimate {
        rho: best.clamp(lower, upper.max(lower)),
        method: SpectralMethod::Gelfand,
        sweeps,
        lower,
        upper,
    })
}

/// `ln ||B^(2^j)||^(1/2^j)` for increasing `j`, stopped once the value is
/// below `ln(stop)` or after [`MAX_SQUARINGS`] squarings.
fn block_gelfand(b: &Matrix, stop: f64, cancel: Option<&CancelToken>) -> Result<f64> {
    let norm = b.norm_inf();
    if norm == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let stop = stop.ln();
    let mut m = b.clone();
    m.scale(1.0 / norm);
    let mut log_norm = norm.ln();
    let mut estimate = log_norm;
    for j in 1..=MAX_SQUARINGS {
        if estimate <= stop {
            break;
        }
        CancelToken::check(cancel)?;
        let sq = m.matmul(&m);
        let n = sq.norm_inf();
        if !(n > 0.0 && n.is_finite()) {
            // keep the last term, which is still an upper bound
            break;
        }
        log_norm = 2.0 * log_norm + n.ln();
        m = sq;
        m.scale(1.0 / n);
        estimate = log_norm / 2f64.powi(j as i32);
    }
    Ok(estimate)
}

/// Strongly connected components of the support graph of `Q`, as lists of
/// positions.
pub(crate) fn irreducible_blocks(chain: &AbsorbingChain) -> Vec<Vec<usize>> {
    let m = chain.dim();
    let mut g = petgraph::graph::DiGraph::<(), ()>::with_capacity(m, 0);
    let nodes: Vec<_> = (0..m).map(|_| g.add_node(())).collect();
    for i in 0..m {
        for &j in chain.nonzero(i) {
            g.add_edge(nodes[i], nodes[j], ());
        }
    }
    petgraph::algo::tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut v: Vec<usize> = c.into_iter().map(|n| n.index()).collect();
            v.sort_unstable();
            v
        })
        .collect()
}

fn submatrix(a: &Matrix, idx: &[usize]) -> Matrix {
    let mut b = Matrix::zeros(idx.len(), idx.len());
    for (r, &i) in idx.iter().enumerate() {
        for (c, &j) in idx.iter().enumerate() {
            b[(r, c)] = a[(i, j)];
        }
    }
    b
}

/// `ln rho(Q^-1)` given `Q^-1`. The inverse shares the block structure of
/// `Q`, and its eigenvalues on a block are the reciprocals of the block's,
/// so singletons give `-ln Q_ii` exactly and larger blocks are inverted and
/// handled by Gelfand squaring.
pub(crate) fn log_spectral_radius_inverse(chain: &AbsorbingChain) -> Result<f64> {
    let q = chain.q();
    let mut best = f64::NEG_INFINITY;
    for block in irreducible_blocks(chain) {
        let r = if let [i] = block[..] {
            -q[(i, i)].ln()
        } else {
            let inv = Lu::factor(&submatrix(q, &block))?.inverse();
            block_gelfand(&inv, 0.0, None)?
        };
        best = best.max(r);
    }
    Ok(best)
}
