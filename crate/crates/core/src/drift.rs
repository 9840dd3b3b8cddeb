//! Drift functions and bound certificates for hitting and staying times.
//!
//! For a drift function `d >= 0` over the non-optimal states:
//!
//! * point-wise drift `Delta = (I - Q) d`
//! * average drift `Delta_t = q_t^T Delta / ||q_t||`
//! * backward drift `nabla^T = d^T (I - Q)`
//!
//! Drift at least 1 everywhere bounds the expected hitting time from above by
//! `d(Phi_0)`; at most 1 bounds it from below. Backward drift at least
//! (at most) 1 bounds each staying time `s(Y)` from above (below) by `d(Y)`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chain::{AbsorbingChain, Distribution};
use crate::error::{Error, Result};

/// Slack allowed when comparing a drift against 1.
pub const HYPOTHESIS_TOL: f64 = 1e-9;
/// A horizon certifies the average-drift hypothesis only if this little of
/// the initial mass is left unexamined.
pub const RESIDUAL_MASS_TOL: f64 = 1e-12;
/// The average drift stops once `||q_t||` falls below this.
pub const MASS_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftFunction {
    d: Vec<f64>,
}

impl DriftFunction {
    pub fn new(d: Vec<f64>) -> Result<Self> {
        if let Some(i) = d.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "d[{i}] = {} must be finite and nonnegative",
                d[i]
            )));
        }
        Ok(Self { d })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct File {
            d: Vec<f64>,
        }
        let file: File = serde_json::from_str(text)
            .map_err(|e| Error::InvalidParameter(format!("drift file: {e}")))?;
        Self::new(file.d)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("drift function serializes")
    }

    pub fn values(&self) -> &[f64] {
        &self.d
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    /// `d(Phi_0) = sum_X d(X) P(Phi_0 = X)`.
    pub fn expectation(&self, q0: &Distribution) -> f64 {
        self.d.iter().zip(q0.weights()).map(|(a, b)| a * b).sum()
    }

    fn check_dim(&self, chain: &AbsorbingChain) -> Result<()> {
        if self.d.len() != chain.dim() {
            return Err(Error::DimensionMismatch {
                expected: chain.dim(),
                found: self.d.len(),
            });
        }
        Ok(())
    }
}

/// `Delta = (I - Q) d`, written as `sum_j Q_ij (d_i - d_j) + leak_i d_i` so
/// that flat stretches of `d` give exact zeros.
pub fn pointwise_drift(chain: &AbsorbingChain, d: &DriftFunction) -> Result<Vec<f64>> {
    d.check_dim(chain)?;
    let d = d.values();
    let q = chain.q();
    Ok((0..chain.dim())
        .map(|i| {
            let moves: f64 = chain
                .nonzero(i)
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| q[(i, j)] * (d[i] - d[j]))
                .sum();
            moves + chain.leak()[i] * d[i]
        })
        .collect())
}

/// `nabla^T = d^T (I - Q)`.
pub fn backward_drift(chain: &AbsorbingChain, d: &DriftFunction) -> Result<Vec<f64>> {
    d.check_dim(chain)?;
    let d = d.values();
    let q = chain.q();
    let m = chain.dim();
    let mut inflow = vec![0.0; m];
    for i in 0..m {
        for &j in chain.nonzero(i) {
            if j != i {
                inflow[j] += d[i] * q[(i, j)];
            }
        }
    }
    Ok((0..m)
        .map(|j| chain.outflow()[j] * d[j] - inflow[j])
        .collect())
}

/// Average drift for `t = 0..=horizon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AverageDrift {
    /// `(t, Delta_t)`; iterations where no mass is left are skipped.
    pub by_t: Vec<(u64, f64)>,
    /// Set when `||q_t||` dropped below [`MASS_FLOOR`] before the horizon.
    pub truncated_at: Option<u64>,
    /// `||q_T|| / ||q_0||` at the last iteration examined.
    pub residual_mass: f64,
}

pub fn average_drift(
    chain: &AbsorbingChain,
    d: &DriftFunction,
    q0: &Distribution,
    horizon: u64,
) -> Result<AverageDrift> {
    let delta = pointwise_drift(chain, d)?;
    if q0.len() != chain.dim() {
        return Err(Error::DimensionMismatch {
            expected: chain.dim(),
            found: q0.len(),
        });
    }
    let mass0: f64 = q0.weights().iter().sum();
    if mass0 <= 0.0 {
        return Err(Error::ZeroMass);
    }
    // q is kept normalised; log_mass tracks ln ||q_t|| separately
    let mut q: Vec<f64> = q0.weights().iter().map(|w| w / mass0).collect();
    let mut log_mass = mass0.ln();
    let floor = MASS_FLOOR.ln();
    let mut by_t = Vec::with_capacity(horizon as usize + 1);
    let mut truncated_at = None;
    for t in 0..=horizon {
        if t > 0 {
            let next = chain.apply_left(&q);
            let mass: f64 = next.iter().sum();
            if mass == 0.0 {
                log_mass = f64::NEG_INFINITY;
                break;
            }
            log_mass += mass.ln();
            if log_mass < floor {
                truncated_at = Some(t);
                break;
            }
            q = next.into_iter().map(|w| w / mass).collect();
        }
        by_t.push((t, q.iter().zip(&delta).map(|(a, b)| a * b).sum()));
    }
    Ok(AverageDrift {
        by_t,
        truncated_at,
        residual_mass: (log_mass - mass0.ln()).exp(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertifyMode {
    AvgUpper,
    AvgLower,
    PointwiseUpper,
    PointwiseLower,
    BackwardUpper,
    BackwardLower,
}

impl CertifyMode {
    pub const ALL: [CertifyMode; 6] = [
        CertifyMode::AvgUpper,
        CertifyMode::AvgLower,
        CertifyMode::PointwiseUpper,
        CertifyMode::PointwiseLower,
        CertifyMode::BackwardUpper,
        CertifyMode::BackwardLower,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CertifyMode::AvgUpper => "avg_upper",
            CertifyMode::AvgLower => "avg_lower",
            CertifyMode::PointwiseUpper => "pointwise_upper",
            CertifyMode::PointwiseLower => "pointwise_lower",
            CertifyMode::BackwardUpper => "backward_upper",
            CertifyMode::BackwardLower => "backward_lower",
        }
    }

    /// Upper-bound modes need drift at least 1; lower-bound modes at most 1.
    pub fn is_upper(self) -> bool {
        matches!(
            self,
            CertifyMode::AvgUpper | CertifyMode::PointwiseUpper | CertifyMode::BackwardUpper
        )
    }

    fn certificate(self) -> Certificate {
        match self {
            CertifyMode::AvgUpper | CertifyMode::PointwiseUpper => Certificate::UpperHitting,
            CertifyMode::AvgLower | CertifyMode::PointwiseLower => Certificate::LowerHitting,
            CertifyMode::BackwardUpper => Certificate::UpperStaying,
            CertifyMode::BackwardLower => Certificate::LowerStaying,
        }
    }
}

impl fmt::Display for CertifyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CertifyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CertifyMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown drift mode {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certificate {
    UpperHitting,
    LowerHitting,
    UpperStaying,
    LowerStaying,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateStatus {
    Granted,
    /// The average-drift hypothesis held up to the horizon but too much mass
    /// was still non-optimal there to vouch for later iterations.
    HorizonLimited,
    Denied,
}

/// Where the hypothesis is tightest (or broken, when the margin is negative).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Original state index, for the point-wise and backward modes.
    pub state: Option<usize>,
    /// Iteration, for the average modes.
    pub iteration: Option<u64>,
    pub drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub mode: CertifyMode,
    pub pointwise: Vec<f64>,
    pub backward: Vec<f64>,
    pub average_by_t: Vec<(u64, f64)>,
    pub certificate: Certificate,
    pub status: CertificateStatus,
    /// `d(Phi_0)` for the hitting-time certificates.
    pub bound: Option<f64>,
    /// `d` itself for the staying-time certificates.
    pub bound_vector: Option<Vec<f64>>,
    /// Minimum of `drift - 1` (upper modes) or `1 - drift` (lower modes).
    pub hypothesis_margin: f64,
    /// The tightest point; a violation when the margin is below `-1e-9`.
    pub witness: Option<Violation>,
    pub average_truncated_at: Option<u64>,
    pub residual_mass: Option<f64>,
}

impl DriftReport {
    pub fn granted(&self) -> bool {
        self.certificate != Certificate::None
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("drift report serializes")
    }
}

/// Checks the hypothesis of `mode` and emits the corresponding bound.
///
/// A failed hypothesis is reported in the value, not as an error. The
/// average-drift modes examine `t <= horizon` only; the certificate is then
/// marked [`CertificateStatus::HorizonLimited`] unless `||q_horizon||` is
/// below `1e-12 ||q_0||`.
pub fn certify(
    chain: &AbsorbingChain,
    d: &DriftFunction,
    q0: &Distribution,
    horizon: u64,
    mode: CertifyMode,
) -> Result<DriftReport> {
    let pointwise = pointwise_drift(chain, d)?;
    let backward = backward_drift(chain, d)?;
    let avg = match mode {
        CertifyMode::AvgUpper | CertifyMode::AvgLower => {
            Some(average_drift(chain, d, q0, horizon)?)
        }
        _ => None,
    };
    let margin_of = |v: f64| if mode.is_upper() { v - 1.0 } else { 1.0 - v };
    let candidates: Vec<Violation> = match mode {
        CertifyMode::AvgUpper | CertifyMode::AvgLower => avg
            .as_ref()
            .expect("computed above")
            .by_t
            .iter()
            .map(|&(t, v)| Violation {
                state: None,
                iteration: Some(t),
                drift: v,
            })
            .collect(),
        CertifyMode::PointwiseUpper | CertifyMode::PointwiseLower => pointwise
            .iter()
            .enumerate()
            .map(|(i, &v)| Violation {
                state: Some(chain.non_index()[i]),
                iteration: None,
                drift: v,
            })
            .collect(),
        CertifyMode::BackwardUpper | CertifyMode::BackwardLower => backward
            .iter()
            .enumerate()
            .map(|(i, &v)| Violation {
                state: Some(chain.non_index()[i]),
                iteration: None,
                drift: v,
            })
            .collect(),
    };
    // first state or iteration attaining the minimum margin
    let witness = candidates
        .into_iter()
        .fold(None::<Violation>, |best, c| match best {
            Some(b) if margin_of(b.drift) <= margin_of(c.drift) => Some(b),
            _ => Some(c),
        });
    let hypothesis_margin = witness.map_or(f64::INFINITY, |w| margin_of(w.drift));
    let holds = hypothesis_margin >= -HYPOTHESIS_TOL;
    let status = match (&avg, holds) {
        (_, false) => CertificateStatus::Denied,
        (Some(a), true) if a.truncated_at.is_none() && a.residual_mass > RESIDUAL_MASS_TOL => {
            CertificateStatus::HorizonLimited
        }
        _ => CertificateStatus::Granted,
    };
    let certificate = if holds {
        mode.certificate()
    } else {
        Certificate::None
    };
    let (bound, bound_vector) = match certificate {
        Certificate::None => (None, None),
        Certificate::UpperStaying | Certificate::LowerStaying => (None, Some(d.values().to_vec())),
        _ => (Some(d.expectation(q0)), None),
    };
    Ok(DriftReport {
        mode,
        pointwise,
        backward,
        average_by_t: avg.as_ref().map(|a| a.by_t.clone()).unwrap_or_default(),
        certificate,
        status,
        bound,
        bound_vector,
        hypothesis_margin,
        witness,
        average_truncated_at: avg.as_ref().and_then(|a| a.truncated_at),
        residual_mass: avg.as_ref().map(|a| a.residual_mass),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    fn chain() -> AbsorbingChain {
        let q = Matrix::from_rows(&[vec![0.5, 0.25], vec![0.0, 0.5]]);
        AbsorbingChain::from_q(q).unwrap()
    }

    #[test]
    fn zero_drift_function_has_zero_drift() {
        let c = chain();
        let d = DriftFunction::new(vec![0.0, 0.0]).unwrap();
        assert_eq!(pointwise_drift(&c, &d).unwrap(), vec![0.0, 0.0]);
        assert_eq!(backward_drift(&c, &d).unwrap(), vec![0.0, 0.0]);
        let q0 = Distribution::new(vec![1.0, 0.0]).unwrap();
        for mode in [
            CertifyMode::AvgUpper,
            CertifyMode::PointwiseUpper,
            CertifyMode::BackwardUpper,
        ] {
            let r = certify(&c, &d, &q0, 10, mode).unwrap();
            assert_eq!(r.certificate, Certificate::None);
            assert_eq!(r.status, CertificateStatus::Denied);
            assert!((r.hypothesis_margin + 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn hand_computed_drifts() {
        // h = (I - Q)^{-1} 1: h1 = 2, h0 = (1 + 0.25 * 2) / 0.5 = 3
        let c = chain();
        let d = DriftFunction::new(vec![3.0, 2.0]).unwrap();
        let p = pointwise_drift(&c, &d).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-15 && (p[1] - 1.0).abs() < 1e-15);
        let b = backward_drift(&c, &d).unwrap();
        // column 1: 0.5 * 2 - 0.25 * 3
        assert!((b[0] - 1.5).abs() < 1e-15 && (b[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn certificate_at_the_exact_solution() {
        let c = chain();
        let d = DriftFunction::new(vec![3.0, 2.0]).unwrap();
        let q0 = Distribution::new(vec![0.5, 0.5]).unwrap();
        for mode in [CertifyMode::PointwiseUpper, CertifyMode::PointwiseLower] {
            let r = certify(&c, &d, &q0, 0, mode).unwrap();
            assert!(r.granted());
            assert_eq!(r.bound, Some(2.5));
        }
        let r = certify(&c, &d, &q0, 200, CertifyMode::AvgUpper).unwrap();
        assert_eq!(r.status, CertificateStatus::Granted);
        assert_eq!(r.average_by_t.len(), 201);
        let short = certify(&c, &d, &q0, 3, CertifyMode::AvgLower).unwrap();
        assert_eq!(short.status, CertificateStatus::HorizonLimited);
        assert_eq!(short.certificate, Certificate::LowerHitting);
    }

    #[test]
    fn denied_certificate_names_the_violator() {
        let c = chain();
        let d = DriftFunction::new(vec![3.0, 1.0]).unwrap();
        let q0 = Distribution::new(vec![1.0, 0.0]).unwrap();
        let r = certify(&c, &d, &q0, 0, CertifyMode::PointwiseUpper).unwrap();
        assert!(!r.granted());
        assert_eq!(r.witness.unwrap().state, Some(1));
        assert!((r.hypothesis_margin + 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(DriftFunction::new(vec![-1.0]).is_err());
        assert!(DriftFunction::new(vec![f64::NAN]).is_err());
        assert!(DriftFunction::from_json_str(r#"{"d": [1, 2], "x": 1}"#).is_err());
        let d = DriftFunction::from_json_str(r#"{"d": [1, 2, 3]}"#).unwrap();
        assert!(matches!(
            pointwise_drift(&chain(), &d),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 3
            })
        ));
    }

    #[test]
    fn average_drift_tracks_tiny_mass() {
        let q = Matrix::from_rows(&[vec![1e-200]]);
        let c = AbsorbingChain::from_q(q).unwrap();
        let d = DriftFunction::new(vec![1.0]).unwrap();
        let q0 = Distribution::new(vec![1.0]).unwrap();
        let a = average_drift(&c, &d, &q0, 10).unwrap();
        assert_eq!(a.truncated_at, Some(2));
        assert_eq!(a.by_t.len(), 2);
    }
}
