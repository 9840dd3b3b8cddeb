//! Average convergence rate `-(1/t) ln(||q_t|| / ||q_0||)` and its bounds:
//!
//! * `finite_lower = -(1/t) ln ||Q^t||_inf`
//! * `asymptotic_lower = -ln rho(Q)`
//! * `finite_upper = (1/t) ln ||Q^-t||_inf`
//! * `asymptotic_upper = ln rho(Q^-1)`
//!
//! Since `q_t^T = q_0^T Q^t`, the row-vector norm `||(Q^T)^t||_1` equals
//! the max-row-sum norm `||Q^t||_inf` used here.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::analysis::convergence::spectral_summary;
use crate::analysis::spectral::{log_spectral_radius_inverse, SpectralOptions};
use crate::chain::{AbsorbingChain, Distribution};
use crate::error::{Error, Result};
use crate::float_serde;
use crate::linalg::{Lu, Matrix};

/// `Q` is treated as singular above this 1-norm condition number.
pub const MAX_CONDITION: f64 = 1e12;

/// Machine-readable reason for missing upper bounds.
pub const Q_SINGULAR: &str = "q-singular";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateBounds {
    pub horizon: u64,
    #[serde(with = "float_serde")]
    pub exact_rate: f64,
    #[serde(with = "float_serde")]
    pub finite_lower: f64,
    #[serde(with = "float_serde")]
    pub asymptotic_lower: f64,
    #[serde(with = "float_serde::option")]
    pub finite_upper: Option<f64>,
    #[serde(with = "float_serde::option")]
    pub asymptotic_upper: Option<f64>,
    /// Why the upper bounds are absent.
    pub upper_unavailable: Option<String>,
    /// Iteration at which `q_t` became exactly zero, making the rate infinite.
    pub absorbed_at: Option<u64>,
    /// Whether `asymptotic_lower <= exact_rate` (up to 1e-9) at this horizon.
    /// Reported only: the asymptotic bound may be violated at finite `t`.
    pub asymptotic_lower_reached: bool,
}

/// `t`-independent ingredients shared by every horizon.
struct Shared {
    asymptotic_lower: f64,
    inverse: std::result::Result<Matrix, String>,
    asymptotic_upper: Option<f64>,
}

fn shared(chain: &AbsorbingChain) -> Result<Shared> {
    let summary = spectral_summary(chain, &SpectralOptions::default())?;
    let asymptotic_lower = summary.neg_log_rho();
    let inverse = invert_q(chain.q());
    let asymptotic_upper = match inverse {
        Ok(_) => Some(log_spectral_radius_inverse(chain)?),
        Err(_) => None,
    };
    Ok(Shared {
        asymptotic_lower,
        inverse,
        asymptotic_upper,
    })
}

fn invert_q(q: &Matrix) -> std::result::Result<Matrix, String> {
    let lu = Lu::factor(q).map_err(|e| e.to_string())?;
    let inv = lu.inverse();
    let cond = q.norm_one() * inv.norm_one();
    if cond.is_nan() || cond > MAX_CONDITION {
        return Err(format!("condition number {cond:e} above {MAX_CONDITION:e}"));
    }
    Ok(inv)
}

/// All bounds at a single horizon.
pub fn rate_bounds(chain: &AbsorbingChain, q0: &Distribution, horizon: u64) -> Result<RateBounds> {
    Ok(rate_bounds_at(chain, q0, &[horizon])?.remove(0))
}

/// All bounds at each of `horizons` (any order, duplicates allowed), sharing
/// one pass of the distribution iteration.
pub fn rate_bounds_at(
    chain: &AbsorbingChain,
    q0: &Distribution,
    horizons: &[u64],
) -> Result<Vec<RateBounds>> {
    if q0.len() != chain.dim() {
        return Err(Error::DimensionMismatch {
            expected: chain.dim(),
            found: q0.len(),
        });
    }
    if let Some(&t) = horizons.iter().find(|&&t| t == 0) {
        return Err(Error::InvalidParameter(format!(
            "horizon {t} must be at least 1"
        )));
    }
    let max_t = horizons.iter().copied().max().unwrap_or(0);
    let (log_mass, absorbed_at) = log_mass_curve(chain, q0, max_t)?;
    let shared = shared(chain)?;
    horizons
        .iter()
        .map(|&t| {
            let exact_rate = match absorbed_at {
                Some(a) if a <= t => f64::INFINITY,
                // 0 - x rather than -x keeps a zero rate from printing as -0
                _ => (0.0 - log_mass[t as usize]) / t as f64,
            };
            let finite_lower = (0.0 - log_norm_power(chain.q(), t)) / t as f64;
            let (finite_upper, upper_unavailable) = match &shared.inverse {
                Ok(inv) => (Some(log_norm_power(inv, t) / t as f64), None),
                Err(why) => (None, Some(format!("{Q_SINGULAR}: {why}"))),
            };
            Ok(RateBounds {
                horizon: t,
                exact_rate,
                finite_lower,
                asymptotic_lower: shared.asymptotic_lower,
                finite_upper,
                asymptotic_upper: shared.asymptotic_upper,
                upper_unavailable,
                absorbed_at: absorbed_at.filter(|&a| a <= t),
                asymptotic_lower_reached: shared.asymptotic_lower <= exact_rate + 1e-9,
            })
        })
        .collect()
}

/// `ln(||q_t|| / ||q_0||)` for `t = 0..=max_t`, accumulated from the
/// absorbed fraction of each step so it neither underflows nor cancels.
fn log_mass_curve(
    chain: &AbsorbingChain,
    q0: &Distribution,
    max_t: u64,
) -> Result<(Vec<f64>, Option<u64>)> {
    let mass0: f64 = q0.weights().iter().sum();
    if mass0 <= 0.0 {
        return Err(Error::ZeroMass);
    }
    let mut q: Vec<f64> = q0.weights().iter().map(|w| w / mass0).collect();
    let mut curve = Vec::with_capacity(max_t as usize + 1);
    curve.push(0.0);
    let mut acc = 0.0;
    for t in 1..=max_t {
        let lost: f64 = q.iter().zip(chain.leak()).map(|(w, l)| w * l).sum();
        let next = chain.apply_left(&q);
        let mass: f64 = next.iter().sum();
        if mass == 0.0 {
            curve.resize(max_t as usize + 1, f64::NEG_INFINITY);
            return Ok((curve, Some(t)));
        }
        // q is normalised, so the surviving fraction is 1 - lost
        acc += (-lost.min(1.0)).ln_1p();
        curve.push(acc);
        q = next.into_iter().map(|w| w / mass).collect();
    }
    Ok((curve, None))
}

/// `ln ||A^t||_inf` by binary exponentiation, renormalising every product.
pub(crate) fn log_norm_power(a: &Matrix, t: u64) -> f64 {
    let n0 = a.norm_inf();
    if n0 == 0.0 {
        return f64::NEG_INFINITY;
    }
    let mut base = a.clone();
    base.scale(1.0 / n0);
    let mut base_log = n0.ln();
    let mut acc: Option<(Matrix, f64)> = None;
    let mut e = t;
    loop {
        if e & 1 == 1 {
            acc = Some(match acc {
                None => (base.clone(), base_log),
                Some((m, l)) => {
                    let mut p = m.matmul(&base);
                    let n = p.norm_inf();
                    if n == 0.0 {
                        return f64::NEG_INFINITY;
                    }
                    p.scale(1.0 / n);
                    (p, l + base_log + n.ln())
                }
            });
        }
        e >>= 1;
        if e == 0 {
            break;
        }
        let mut sq = base.matmul(&base);
        let n = sq.norm_inf();
        if n == 0.0 {
            return f64::NEG_INFINITY;
        }
        sq.scale(1.0 / n);
        base = sq;
        base_log = 2.0 * base_log + n.ln();
    }
    let (m, l) = acc.expect("t >= 1");
    l + m.norm_inf().ln()
}

/// One line of `rate_bounds.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub t: u64,
    pub exact_rate: f64,
    pub finite_lower: f64,
    /// Empty when `Q` is singular.
    pub finite_upper: Option<f64>,
}

impl From<&RateBounds> for RateRow {
    fn from(b: &RateBounds) -> Self {
        Self {
            t: b.horizon,
            exact_rate: b.exact_rate,
            finite_lower: b.finite_lower,
            finite_upper: b.finite_upper,
        }
    }
}

/// Writes `t,exact_rate,finite_lower,finite_upper`. Infinite rates are
/// written as `inf`, which gnuplot and the reader both accept.
pub fn write_rate_bounds_csv<W: Write>(bounds: &[RateBounds], w: W) -> Result<()> {
    // header written by hand so that an empty table still has one
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(["t", "exact_rate", "finite_lower", "finite_upper"])?;
    for b in bounds {
        out.serialize(RateRow::from(b))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_rate_bounds_csv<R: Read>(r: R) -> Result<Vec<RateRow>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

/// Roughly log-spaced horizons `1, 2, 5, 10, 20, 50, ...` up to and
/// including `horizon`.
pub fn log_grid(horizon: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut decade = 1u64;
    'outer: loop {
        for k in [1, 2, 5] {
            let t = decade.saturating_mul(k);
            if t >= horizon {
                break 'outer;
            }
            out.push(t);
        }
        decade = decade.saturating_mul(10);
    }
    if horizon >= 1 {
        out.push(horizon);
    }
    out
}
