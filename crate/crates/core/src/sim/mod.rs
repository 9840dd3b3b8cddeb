//! Seeded Monte Carlo runs of the two walks, simulated step by step from
//! their propose/accept description rather than from the kernel rows.

mod rng;
mod stats;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heuristics::{Algorithm, WalkParams};
use crate::problem::ProblemSpec;

pub use rng::RunRng;
pub use stats::{
    empirical_average_rate, empirical_convergence_curve, empirical_hitting_time, HittingEstimate,
    RunStats, RATE_CUTOFF,
};

/// Starting point of every run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    State(usize),
    /// Uniform over the whole domain, optimal states included.
    Uniform,
}

impl fmt::Display for Init {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Init::State(s) => write!(f, "{s}"),
            Init::Uniform => f.write_str("uniform"),
        }
    }
}

impl FromStr for Init {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "uniform" {
            return Ok(Init::Uniform);
        }
        s.parse::<usize>().map(Init::State).map_err(|_| {
            Error::InvalidParameter(format!(
                "init {s:?} is neither a state index nor \"uniform\""
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub runs: u64,
    pub max_iterations: u64,
    pub seed: u64,
    pub init: Init,
    pub record_stride: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            runs: 100_000,
            max_iterations: 1_000_000,
            seed: 0,
            init: Init::State(20),
            record_stride: 100,
        }
    }
}

impl SimConfig {
    pub fn validate(&self, domain_size: usize) -> Result<()> {
        for (name, v) in [
            ("runs", self.runs),
            ("max_iterations", self.max_iterations),
            ("record_stride", self.record_stride),
        ] {
            if v == 0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be at least 1"
                )));
            }
        }
        if let Init::State(s) = self.init {
            if s >= domain_size {
                return Err(Error::InvalidParameter(format!(
                    "init state {s} outside the domain 0..{domain_size}"
                )));
            }
        }
        Ok(())
    }
}

/// Runs `config.runs` independent trajectories. The result depends only on
/// the inputs, never on the number of worker threads.
pub fn simulate(
    algorithm: Algorithm,
    problem: &ProblemSpec,
    params: &WalkParams,
    config: &SimConfig,
) -> Result<RunStats> {
    config.validate(problem.domain_size())?;
    let accept_worse = match algorithm {
        Algorithm::Rsh1 => 0.0,
        Algorithm::Rsh2 => params.accept_worse_prob(),
    };
    let walk = Walk {
        fitness: problem.fitness(),
        optimal: problem.state_space().optimal_mask().to_vec(),
        step: params.step_prob(),
        accept_worse,
    };
    let taus: Vec<Option<u64>> = (0..config.runs)
        .into_par_iter()
        .map(|run| walk.run(RunRng::new(config.seed, run), config))
        .collect();
    Ok(RunStats::from_hitting_times(
        taus,
        config.max_iterations,
        config.record_stride,
    ))
}

struct Walk<'a> {
    fitness: &'a [f64],
    optimal: Vec<bool>,
    step: f64,
    accept_worse: f64,
}

impl Walk<'_> {
    /// First iteration at which the walk holds an optimal point, or `None`
    /// if that did not happen within the budget.
    fn run(&self, mut rng: RunRng, config: &SimConfig) -> Option<u64> {
        let n = self.fitness.len();
        let mut x = match config.init {
            Init::State(s) => s,
            Init::Uniform => rng.below(n as u64) as usize,
        };
        if self.optimal[x] {
            return Some(0);
        }
        for t in 1..=config.max_iterations {
            let u = rng.unit();
            let proposal = if u < self.step {
                x.checked_sub(1)
            } else if u < 2.0 * self.step {
                (x + 1 < n).then_some(x + 1)
            } else {
                None
            };
            if let Some(y) = proposal {
                let better = self.fitness[y] > self.fitness[x];
                if better || (self.accept_worse > 0.0 && rng.unit() < self.accept_worse) {
                    x = y;
                    if self.optimal[x] {
                        return Some(t);
                    }
                }
            }
        }
        None
    }
}
