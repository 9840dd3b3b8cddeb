use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Surviving frequencies at or below this are too noisy for a rate estimate.
pub const RATE_CUTOFF: f64 = 1e-5;

/// Aggregates over all runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub runs: u64,
    /// First hitting iteration per run, `None` when censored.
    pub hitting_times: Vec<Option<u64>>,
    /// Recorded iterations `0, stride, 2 stride, ...`.
    pub ts: Vec<u64>,
    pub opt_counts: Vec<u64>,
    pub nonopt_counts: Vec<u64>,
    pub censored_count: u64,
}

#[derive(Serialize, Deserialize)]
struct CurveRow {
    t: u64,
    opt_count: u64,
    nonopt_count: u64,
}

#[derive(Serialize, Deserialize)]
struct TauRow {
    run: u64,
    tau: Option<u64>,
    censored: u8,
}

#[derive(Deserialize)]
struct RateCsvRow {
    t: u64,
    rate: Option<f64>,
}

impl RunStats {
    /// Tallies the per-iteration counts from the hitting times: a run is
    /// non-optimal at `t` iff it is censored or `tau > t`.
    pub fn from_hitting_times(
        hitting_times: Vec<Option<u64>>,
        max_iterations: u64,
        stride: u64,
    ) -> Self {
        let runs = hitting_times.len() as u64;
        let mut hit: Vec<u64> = hitting_times.iter().flatten().copied().collect();
        hit.sort_unstable();
        let censored_count = runs - hit.len() as u64;
        let ts: Vec<u64> = (0..=max_iterations).step_by(stride as usize).collect();
        let mut opt_counts = Vec::with_capacity(ts.len());
        let mut k = 0;
        for &t in &ts {
            while k < hit.len() && hit[k] <= t {
                k += 1;
            }
            opt_counts.push(k as u64);
        }
        let nonopt_counts = opt_counts.iter().map(|c| runs - c).collect();
        Self {
            runs,
            hitting_times,
            ts,
            opt_counts,
            nonopt_counts,
            censored_count,
        }
    }

    /// `t,opt_count,nonopt_count`
    pub fn write_curve_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for ((&t, &opt_count), &nonopt_count) in self
            .ts
            .iter()
            .zip(&self.opt_counts)
            .zip(&self.nonopt_counts)
        {
            out.serialize(CurveRow {
                t,
                opt_count,
                nonopt_count,
            })?;
        }
        out.flush()?;
        Ok(())
    }

    /// `run,tau,censored`, with an empty `tau` for censored runs.
    pub fn write_tau_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for (run, &tau) in self.hitting_times.iter().enumerate() {
            out.serialize(TauRow {
                run: run as u64,
                tau,
                censored: u8::from(tau.is_none()),
            })?;
        }
        out.flush()?;
        Ok(())
    }

    /// `t,rate`, with an empty `rate` below the cutoff.
    pub fn write_rate_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "rate"])?;
        for (t, rate) in empirical_average_rate(self) {
            out.write_record([
                t.to_string(),
                rate.map(|r| r.to_string()).unwrap_or_default(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Parses a file written by [`RunStats::write_rate_csv`].
    pub fn read_rate_csv<R: Read>(r: R) -> Result<Vec<(u64, Option<f64>)>> {
        let mut rows = Vec::new();
        for row in csv::Reader::from_reader(r).deserialize() {
            let row: RateCsvRow = row?;
            rows.push((row.t, row.rate));
        }
        Ok(rows)
    }

    pub fn read_csv<R1: Read, R2: Read>(curve: R1, tau: R2) -> Result<Self> {
        let mut ts = Vec::new();
        let mut opt_counts = Vec::new();
        let mut nonopt_counts = Vec::new();
        for row in csv::Reader::from_reader(curve).deserialize() {
            let row: CurveRow = row?;
            ts.push(row.t);
            opt_counts.push(row.opt_count);
            nonopt_counts.push(row.nonopt_count);
        }
        let mut hitting_times = Vec::new();
        for (i, row) in csv::Reader::from_reader(tau).deserialize().enumerate() {
            let row: TauRow = row?;
            if row.run != i as u64 || (row.censored == 1) != row.tau.is_none() {
                return Err(Error::InvalidParameter(format!(
                    "tau file: inconsistent row {i}"
                )));
            }
            hitting_times.push(row.tau);
        }
        let runs = hitting_times.len() as u64;
        if opt_counts
            .iter()
            .zip(&nonopt_counts)
            .any(|(a, b)| a + b != runs)
        {
            return Err(Error::InvalidParameter(
                "curve file: opt_count + nonopt_count differs from the number of runs".into(),
            ));
        }
        let censored_count = hitting_times.iter().filter(|t| t.is_none()).count() as u64;
        Ok(Self {
            runs,
            hitting_times,
            ts,
            opt_counts,
            nonopt_counts,
            censored_count,
        })
    }

    /// Writes `curve.csv`, `rate.csv` and `tau.csv` into `dir`.
    pub fn write_files(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.write_curve_csv(std::fs::File::create(dir.join("curve.csv"))?)?;
        self.write_rate_csv(std::fs::File::create(dir.join("rate.csv"))?)?;
        self.write_tau_csv(std::fs::File::create(dir.join("tau.csv"))?)?;
        Ok(())
    }

    pub fn read_files(dir: &Path) -> Result<Self> {
        Self::read_csv(
            std::fs::File::open(dir.join("curve.csv"))?,
            std::fs::File::open(dir.join("tau.csv"))?,
        )
    }
}

/// `n(Phi_t in S_opt) / k` per recorded iteration.
pub fn empirical_convergence_curve(stats: &RunStats) -> Vec<(u64, f64)> {
    let k = stats.runs as f64;
    stats
        .ts
        .iter()
        .zip(&stats.opt_counts)
        .map(|(&t, &c)| (t, c as f64 / k))
        .collect()
}

/// `-(1/t) ln(n_t / n_0)` per recorded `t >= 1`, where `n_t` counts the
/// non-optimal runs (`n_0 = k` when every run starts non-optimal). Absent
/// once `n_t / k <= 1e-5`.
pub fn empirical_average_rate(stats: &RunStats) -> Vec<(u64, Option<f64>)> {
    let k = stats.runs as f64;
    let base = stats.nonopt_counts.first().copied().unwrap_or(0) as f64;
    stats
        .ts
        .iter()
        .zip(&stats.nonopt_counts)
        .filter(|(&t, _)| t >= 1)
        .map(|(&t, &n)| {
            let n = n as f64;
            let rate =
                (base > 0.0 && n / k > RATE_CUTOFF).then(|| (0.0 - (n / base).ln()) / t as f64);
            (t, rate)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HittingEstimate {
    Estimate {
        mean: f64,
        stderr: f64,
        censored: u64,
        /// Some runs were censored, so `mean` underestimates the truth.
        lower_bound: bool,
    },
    AllCensored {
        censored: u64,
    },
}

impl HittingEstimate {
    pub fn censored(&self) -> u64 {
        match *self {
            HittingEstimate::Estimate { censored, .. }
            | HittingEstimate::AllCensored { censored } => censored,
        }
    }

    pub fn mean(&self) -> Option<f64> {
        match *self {
            HittingEstimate::Estimate { mean, .. } => Some(mean),
            HittingEstimate::AllCensored { .. } => None,
        }
    }

    pub fn stderr(&self) -> Option<f64> {
        match *self {
            HittingEstimate::Estimate { stderr, .. } => Some(stderr),
            HittingEstimate::AllCensored { .. } => None,
        }
    }
}

/// Mean and standard error of the uncensored first hitting times.
pub fn empirical_hitting_time(stats: &RunStats) -> HittingEstimate {
    let taus: Vec<f64> = stats
        .hitting_times
        .iter()
        .flatten()
        .map(|&t| t as f64)
        .collect();
    let censored = stats.censored_count;
    if taus.is_empty() {
        return HittingEstimate::AllCensored { censored };
    }
    let n = taus.len() as f64;
    let mean = taus.iter().sum::<f64>() / n;
    let stderr = if taus.len() > 1 {
        let var = taus.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    HittingEstimate::Estimate {
        mean,
        stderr,
        censored,
        lower_bound: censored > 0,
    }
}
