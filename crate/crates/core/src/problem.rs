//! Maximisation problems over `{0, ..., n-1}` and their JSON definition files.
//!
//! ```json
//! { "domain_size": 101, "fitness": [0, 1, 4, ...] }
//! { "domain_size": 101, "builtin": "shifted_square" }
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chain::StateSpace;
use crate::error::{Error, Result};

/// Domain size used by the built-in problems unless overridden.
pub const DEFAULT_DOMAIN_SIZE: usize = 101;

/// Built-in fitness functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builtin {
    /// `x^2`
    Square,
    /// `10 x^2`
    Square10,
    /// `(x - 49)^2`, local optimum at 0, global optimum at the top of the domain
    ShiftedSquare,
}

impl Builtin {
    pub const ALL: [Builtin; 3] = [Builtin::Square, Builtin::Square10, Builtin::ShiftedSquare];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Square => "square",
            Builtin::Square10 => "square10",
            Builtin::ShiftedSquare => "shifted_square",
        }
    }

    pub fn eval(self, x: usize) -> f64 {
        let x = x as f64;
        match self {
            Builtin::Square => x * x,
            Builtin::Square10 => 10.0 * x * x,
            Builtin::ShiftedSquare => (x - 49.0) * (x - 49.0),
        }
    }

    pub fn problem(self) -> ProblemSpec {
        self.problem_with_size(DEFAULT_DOMAIN_SIZE)
    }

    pub fn problem_with_size(self, n: usize) -> ProblemSpec {
        ProblemSpec {
            fitness: (0..n).map(|x| self.eval(x)).collect(),
            builtin: Some(self),
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Builtin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Builtin::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| {
                Error::Problem(format!(
                    "builtin: unknown name {s:?} (expected square, square10 or shifted_square)"
                ))
            })
    }
}

/// A fitness table over the integer domain `{0, ..., n-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    fitness: Vec<f64>,
    builtin: Option<Builtin>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    domain_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fitness: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    builtin: Option<String>,
}

impl ProblemSpec {
    pub fn new(fitness: Vec<f64>) -> Result<Self> {
        if fitness.len() < 2 {
            return Err(Error::Problem(format!(
                "domain_size: need at least 2 states, got {}",
                fitness.len()
            )));
        }
        if let Some(i) = fitness.iter().position(|v| !v.is_finite()) {
            return Err(Error::Problem(format!("fitness[{i}]: value is not finite")));
        }
        Ok(Self {
            fitness,
            builtin: None,
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ProblemFile = serde_json::from_str(text)
            .map_err(|e| Error::Problem(format!("malformed JSON: {e}")))?;
        let n = file.domain_size;
        if n < 2 {
            return Err(Error::Problem(format!(
                "domain_size: need at least 2 states, got {n}"
            )));
        }
        match (file.fitness, file.builtin) {
            (Some(_), Some(_)) => Err(Error::Problem(
                "fitness/builtin: give exactly one of the two fields".into(),
            )),
            (None, None) => Err(Error::Problem(
                "fitness/builtin: one of the two fields is required".into(),
            )),
            (None, Some(name)) => Ok(name.parse::<Builtin>()?.problem_with_size(n)),
            (Some(values), None) => {
                if values.len() != n {
                    return Err(Error::Problem(format!(
                        "fitness: expected {n} values (domain_size), got {}",
                        values.len()
                    )));
                }
                Self::new(values)
            }
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Problem(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        let file = ProblemFile {
            domain_size: self.domain_size(),
            fitness: self.builtin.is_none().then(|| self.fitness.clone()),
            builtin: self.builtin.map(|b| b.name().to_string()),
        };
        serde_json::to_string_pretty(&file).expect("problem file serializes")
    }

    pub fn domain_size(&self) -> usize {
        self.fitness.len()
    }

    pub fn fitness(&self) -> &[f64] {
        &self.fitness
    }

    pub fn builtin(&self) -> Option<Builtin> {
        self.builtin
    }

    pub fn state_space(&self) -> StateSpace {
        StateSpace::new(self.fitness.clone()).expect("validated on construction")
    }
}
