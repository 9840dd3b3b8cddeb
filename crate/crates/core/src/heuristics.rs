//! Exact transition kernels of the two reference random-walk heuristics.
//!
//! Both propose `x - 1` and `x + 1` with `step_prob` each (a proposal that
//! leaves the domain is simply absent) and otherwise stay. RSH-I keeps a
//! proposal only when it is strictly better; RSH-II also keeps a
//! non-improving proposal with probability `accept_worse_prob`, staying put
//! otherwise.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chain::{StateSpace, TransitionKernel};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::problem::ProblemSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Random walk with elitist selection.
    Rsh1,
    /// Random walk with non-elitist selection.
    Rsh2,
}

impl Algorithm {
    pub const ALL: [Algorithm; 2] = [Algorithm::Rsh1, Algorithm::Rsh2];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Rsh1 => "rsh1",
            Algorithm::Rsh2 => "rsh2",
        }
    }

    /// Step and acceptance probabilities used in the reference experiments.
    pub fn default_params(self) -> WalkParams {
        match self {
            Algorithm::Rsh1 => WalkParams::new(0.01, 0.0),
            Algorithm::Rsh2 => WalkParams::new(0.01, 0.5),
        }
        .expect("reference parameters are valid")
    }

    pub fn kernel(self, problem: &ProblemSpec, params: &WalkParams) -> TransitionKernel {
        match self {
            Algorithm::Rsh1 => kernel_rsh1(problem, params),
            Algorithm::Rsh2 => kernel_rsh2(problem, params),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rsh1" => Ok(Algorithm::Rsh1),
            "rsh2" => Ok(Algorithm::Rsh2),
            _ => Err(Error::InvalidParameter(format!(
                "algorithm {s:?} (expected rsh1 or rsh2)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkParams {
    step_prob: f64,
    accept_worse_prob: f64,
}

impl WalkParams {
    pub fn new(step_prob: f64, accept_worse_prob: f64) -> Result<Self> {
        if !(step_prob > 0.0 && step_prob <= 0.5) {
            return Err(Error::InvalidParameter(format!(
                "step_prob {step_prob} must lie in (0, 0.5]"
            )));
        }
        if !(0.0..=1.0).contains(&accept_worse_prob) {
            return Err(Error::InvalidParameter(format!(
                "accept_worse_prob {accept_worse_prob} must lie in [0, 1]"
            )));
        }
        Ok(Self {
            step_prob,
            accept_worse_prob,
        })
    }

    pub fn step_prob(&self) -> f64 {
        self.step_prob
    }

    pub fn accept_worse_prob(&self) -> f64 {
        self.accept_worse_prob
    }
}

/// Elitist walk: only strictly improving neighbours receive mass.
pub fn kernel_rsh1(problem: &ProblemSpec, params: &WalkParams) -> TransitionKernel {
    walk_kernel(problem, params.step_prob, 0.0)
}

/// Non-elitist walk: non-improving neighbours receive
/// `step_prob * accept_worse_prob`.
pub fn kernel_rsh2(problem: &ProblemSpec, params: &WalkParams) -> TransitionKernel {
    walk_kernel(problem, params.step_prob, params.accept_worse_prob)
}

fn walk_kernel(problem: &ProblemSpec, step: f64, accept_worse: f64) -> TransitionKernel {
    let space: StateSpace = problem.state_space();
    let f = problem.fitness();
    let n = f.len();
    let mut m = Matrix::zeros(n, n);
    for x in 0..n {
        if space.is_optimal(x) {
            m[(x, x)] = 1.0;
            continue;
        }
        let mut out = 0.0;
        for y in [x.checked_sub(1), (x + 1 < n).then_some(x + 1)]
            .into_iter()
            .flatten()
        {
            let p = if f[y] > f[x] {
                step
            } else {
                step * accept_worse
            };
            m[(x, y)] = p;
            out += p;
        }
        m[(x, x)] = 1.0 - out;
    }
    TransitionKernel::new(m).expect("walk kernels are stochastic")
}
