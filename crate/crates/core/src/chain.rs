//! Finite-state heuristics as absorbing Markov chains.
//!
//! A [`TransitionKernel`] over a [`StateSpace`] is split by [`build_chain`]
//! into the canonical blocks: `Q` (non-optimal to non-optimal) and `R`
//! (non-optimal to optimal). Distributions over the non-optimal states are
//! pushed forward with [`iterate`], `q_{t+1}^T = q_t^T Q`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Absolute tolerance for row-stochasticity and absorption checks.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Default cap on the number of states held in dense matrices.
pub const DEFAULT_STATE_CAP: usize = 5_000;

/// States `0..size` with their fitness; optimal states are all argmax states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpace {
    fitness: Vec<f64>,
    optimal: Vec<bool>,
}

impl StateSpace {
    pub fn new(fitness: Vec<f64>) -> Result<Self> {
        if fitness.len() < 2 {
            return Err(Error::TooFewStates(fitness.len()));
        }
        if let Some((state, &value)) = fitness.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteFitness { state, value });
        }
        let best = fitness.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let optimal = fitness.iter().map(|&f| f == best).collect();
        Ok(Self { fitness, optimal })
    }

    pub fn size(&self) -> usize {
        self.fitness.len()
    }

    pub fn fitness(&self) -> &[f64] {
        &self.fitness
    }

    pub fn optimal_mask(&self) -> &[bool] {
        &self.optimal
    }

    pub fn is_optimal(&self, state: usize) -> bool {
        self.optimal[state]
    }

    pub fn optimal_states(&self) -> Vec<usize> {
        (0..self.size()).filter(|&i| self.optimal[i]).collect()
    }

    pub fn non_optimal_states(&self) -> Vec<usize> {
        (0..self.size()).filter(|&i| !self.optimal[i]).collect()
    }
}

/// Square matrix of one-step transition probabilities `P(X, Y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel {
    matrix: Matrix,
}

impl TransitionKernel {
    /// Wraps a matrix after checking it is square with stochastic rows.
    pub fn new(matrix: Matrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::KernelShape {
                rows: matrix.rows(),
                cols: matrix.cols(),
                states: matrix.rows(),
            });
        }
        for i in 0..matrix.rows() {
            check_row(i, matrix.row(i))?;
        }
        Ok(Self { matrix })
    }

    pub fn size(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn prob(&self, from: usize, to: usize) -> f64 {
        self.matrix[(from, to)]
    }

    fn check_against(&self, space: &StateSpace, cap: usize) -> Result<()> {
        if self.size() != space.size() {
            return Err(Error::KernelShape {
                rows: self.size(),
                cols: self.size(),
                states: space.size(),
            });
        }
        if space.size() > cap {
            return Err(Error::TooLarge {
                states: space.size(),
                cap,
            });
        }
        Ok(())
    }
}

fn check_row(row: usize, values: &[f64]) -> Result<()> {
    if let Some((j, v)) = values
        .iter()
        .enumerate()
        .find(|(_, v)| !(0.0..=1.0).contains(*v))
    {
        return Err(Error::MalformedKernel {
            row,
            detail: format!("entry {j} = {v} outside [0, 1]"),
        });
    }
    let sum: f64 = values.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::MalformedKernel {
            row,
            detail: format!("row sums to {sum}"),
        });
    }
    Ok(())
}

/// Replaces every optimal row by a self-loop of probability 1.
pub fn lump_optimal(kernel: &TransitionKernel, space: &StateSpace) -> Result<TransitionKernel> {
    kernel.check_against(space, usize::MAX)?;
    let mut m = kernel.matrix.clone();
    for i in space.optimal_states() {
        let row = m.row_mut(i);
        row.iter_mut().for_each(|v| *v = 0.0);
        row[i] = 1.0;
    }
    Ok(TransitionKernel { matrix: m })
}

/// Canonical-form decomposition of an absorbing kernel.
#[derive(Debug, Clone)]
pub struct AbsorbingChain {
    q: Matrix,
    r: Matrix,
    non_index: Vec<usize>,
    opt_index: Vec<usize>,
    /// Row sums of `R`, the one-step absorption probability.
    leak: Vec<f64>,
    /// `1 - Q[i][i]` accumulated from the off-diagonal mass and the leak.
    outflow: Vec<f64>,
    /// Column indices of the nonzero entries of each row of `Q`.
    nonzero: Vec<Vec<usize>>,
}

/// Splits a lumped kernel into `Q` and `R`, with states kept in ascending
/// original order inside each block.
pub fn build_chain(kernel: &TransitionKernel, space: &StateSpace) -> Result<AbsorbingChain> {
    build_chain_with_cap(kernel, space, DEFAULT_STATE_CAP)
}

pub fn build_chain_with_cap(
    kernel: &TransitionKernel,
    space: &StateSpace,
    cap: usize,
) -> Result<AbsorbingChain> {
    kernel.check_against(space, cap)?;
    for i in 0..kernel.size() {
        check_row(i, kernel.matrix.row(i))?;
    }
    for i in space.optimal_states() {
        let self_loop = kernel.prob(i, i);
        if (self_loop - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::NotAbsorbing {
                state: i,
                self_loop,
            });
        }
    }
    let non_index = space.non_optimal_states();
    let opt_index = space.optimal_states();
    let m = non_index.len();
    let mut q = Matrix::zeros(m, m);
    let mut r = Matrix::zeros(m, opt_index.len());
    for (a, &i) in non_index.iter().enumerate() {
        for (b, &j) in non_index.iter().enumerate() {
            q[(a, b)] = kernel.prob(i, j);
        }
        for (b, &j) in opt_index.iter().enumerate() {
            r[(a, b)] = kernel.prob(i, j);
        }
    }
    Ok(AbsorbingChain::from_blocks(q, r, non_index, opt_index))
}

impl AbsorbingChain {
    fn from_blocks(q: Matrix, r: Matrix, non_index: Vec<usize>, opt_index: Vec<usize>) -> Self {
        let m = q.rows();
        let leak: Vec<f64> = (0..m).map(|i| r.row(i).iter().sum()).collect();
        let outflow = (0..m)
            .map(|i| {
                leak[i]
                    + q.row(i)
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != i)
                        .map(|(_, v)| v)
                        .sum::<f64>()
            })
            .collect();
        let nonzero = (0..m)
            .map(|i| (0..m).filter(|&j| q[(i, j)] != 0.0).collect())
            .collect();
        Self {
            q,
            r,
            non_index,
            opt_index,
            leak,
            outflow,
            nonzero,
        }
    }

    /// Builds a chain directly from a substochastic `Q` whose missing row mass
    /// goes to a single optimal state. Mainly useful for small fixtures.
    pub fn from_q(q: Matrix) -> Result<Self> {
        if !q.is_square() {
            return Err(Error::DimensionMismatch {
                expected: q.rows(),
                found: q.cols(),
            });
        }
        let m = q.rows();
        let mut r = Matrix::zeros(m, 1);
        for i in 0..m {
            let s: f64 = q.row(i).iter().sum();
            if q.row(i).iter().any(|v| !(0.0..=1.0).contains(v)) || s > 1.0 + STOCHASTIC_TOL {
                return Err(Error::MalformedKernel {
                    row: i,
                    detail: format!("Q row sums to {s}"),
                });
            }
            r[(i, 0)] = (1.0 - s).max(0.0);
        }
        Ok(Self::from_blocks(q, r, (0..m).collect(), vec![m]))
    }

    /// Number of non-optimal (transient) states.
    pub fn dim(&self) -> usize {
        self.q.rows()
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn r(&self) -> &Matrix {
        &self.r
    }

    pub fn non_index(&self) -> &[usize] {
        &self.non_index
    }

    pub fn opt_index(&self) -> &[usize] {
        &self.opt_index
    }

    pub fn leak(&self) -> &[f64] {
        &self.leak
    }

    pub fn outflow(&self) -> &[f64] {
        &self.outflow
    }

    pub(crate) fn nonzero(&self, row: usize) -> &[usize] {
        &self.nonzero[row]
    }

    /// Position of an original state among the non-optimal states.
    pub fn position_of(&self, state: usize) -> Option<usize> {
        self.non_index.binary_search(&state).ok()
    }

    /// `Q x` using the sparsity pattern.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                let row = self.q.row(i);
                self.nonzero[i].iter().map(|&j| row[j] * x[j]).sum()
            })
            .collect()
    }

    /// `x^T Q` using the sparsity pattern.
    pub fn apply_left(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (i, &w) in x.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let row = self.q.row(i);
            for &j in &self.nonzero[i] {
                out[j] += w * row[j];
            }
        }
        out
    }

    /// Inverse permutation back to a full kernel, optimal rows as self-loops.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.non_index.len() + self.opt_index.len();
        let mut p = Matrix::zeros(n, n);
        for (a, &i) in self.non_index.iter().enumerate() {
            for (b, &j) in self.non_index.iter().enumerate() {
                p[(i, j)] = self.q[(a, b)];
            }
            for (b, &j) in self.opt_index.iter().enumerate() {
                p[(i, j)] = self.r[(a, b)];
            }
        }
        for &j in &self.opt_index {
            p[(j, j)] = 1.0;
        }
        p
    }
}

/// Sub-probability row vector `q_t` over the non-optimal states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    weights: Vec<f64>,
    iteration: u64,
}

impl Distribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidParameter(
                "distribution weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total > 1.0 + STOCHASTIC_TOL {
            return Err(Error::InvalidParameter(format!(
                "distribution mass {total} exceeds 1"
            )));
        }
        Ok(Self {
            weights,
            iteration: 0,
        })
    }

    pub fn zeros(m: usize) -> Self {
        Self {
            weights: vec![0.0; m],
            iteration: 0,
        }
    }

    /// Point mass at an original state; all-zero if that state is optimal.
    pub fn point_mass(chain: &AbsorbingChain, state: usize) -> Result<Self> {
        let total = chain.non_index.len() + chain.opt_index.len();
        if state >= total {
            return Err(Error::InvalidParameter(format!(
                "state {state} outside 0..{total}"
            )));
        }
        let mut d = Self::zeros(chain.dim());
        if let Some(pos) = chain.position_of(state) {
            d.weights[pos] = 1.0;
        }
        Ok(d)
    }

    /// Uniform over all states, optimal ones included: each non-optimal state
    /// gets `1 / n`.
    pub fn uniform_all(chain: &AbsorbingChain) -> Self {
        let n = (chain.non_index.len() + chain.opt_index.len()) as f64;
        Self {
            weights: vec![1.0 / n; chain.dim()],
            iteration: 0,
        }
    }

    /// Uniform over the non-optimal states only.
    pub fn uniform_non_optimal(chain: &AbsorbingChain) -> Self {
        let m = chain.dim();
        Self {
            weights: vec![1.0 / m as f64; m],
            iteration: 0,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// One step of the matrix iteration `q_{t+1}^T = q_t^T Q`.
pub fn iterate(chain: &AbsorbingChain, dist: &Distribution) -> Result<Distribution> {
    if dist.len() != chain.dim() {
        return Err(Error::DimensionMismatch {
            expected: chain.dim(),
            found: dist.len(),
        });
    }
    let mut weights = chain.apply_left(&dist.weights);
    // subnormals are below anything the estimators can resolve and make the
    // long iterations crawl
    for w in &mut weights {
        if *w < f64::MIN_POSITIVE {
            *w = 0.0;
        }
    }
    Ok(Distribution {
        weights,
        iteration: dist.iteration + 1,
    })
}

/// `P(Phi_t in S_non)`, the 1-norm of the distribution.
pub fn nonopt_probability(dist: &Distribution) -> f64 {
    dist.weights.iter().sum()
}
