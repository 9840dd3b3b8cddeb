//! Independent oracles shared by the integration tests. Nothing here calls the
//! library's solvers; only the model types are reused.

#![allow(dead_code)]

use rsh_lab::{build_chain, AbsorbingChain, Algorithm, Builtin};

pub fn chain_for(algo: Algorithm, builtin: Builtin) -> AbsorbingChain {
    let problem = builtin.problem();
    let kernel = algo.kernel(&problem, &algo.default_params());
    build_chain(&kernel, &problem.state_space()).unwrap()
}

/// Every built-in (algorithm, problem) pair.
pub fn all_pairs() -> Vec<(Algorithm, Builtin)> {
    Algorithm::ALL
        .into_iter()
        .flat_map(|a| Builtin::ALL.into_iter().map(move |b| (a, b)))
        .collect()
}

/// The pairs whose chain reaches the optimum from everywhere.
pub fn convergent_pairs() -> Vec<(Algorithm, Builtin)> {
    all_pairs()
        .into_iter()
        .filter(|&p| p != (Algorithm::Rsh1, Builtin::ShiftedSquare))
        .collect()
}

pub fn dense_q(chain: &AbsorbingChain) -> Vec<Vec<f64>> {
    let m = chain.dim();
    (0..m)
        .map(|i| (0..m).map(|j| chain.q()[(i, j)]).collect())
        .collect()
}

/// Plain value iteration `h <- 1 + Q h` from zero until the relative change
/// drops below `tol`.
pub fn value_iteration(chain: &AbsorbingChain, tol: f64, max_sweeps: usize) -> Option<Vec<f64>> {
    let q = dense_q(chain);
    let m = q.len();
    let mut h = vec![0.0; m];
    for _ in 0..max_sweeps {
        let next: Vec<f64> = (0..m)
            .map(|i| 1.0 + (0..m).map(|j| q[i][j] * h[j]).sum::<f64>())
            .collect();
        let change = next
            .iter()
            .zip(&h)
            .map(|(a, b)| ((a - b) / a).abs())
            .fold(0.0, f64::max);
        h = next;
        if change < tol {
            return Some(h);
        }
    }
    None
}

/// Double-double number `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl Dd {
    pub fn new(v: f64) -> Self {
        Self { hi: v, lo: 0.0 }
    }

    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }

    pub fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    pub fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

type DdMatrix = Vec<Vec<Dd>>;

fn dd_matmul(a: &DdMatrix, b: &DdMatrix) -> DdMatrix {
    let n = a.len();
    let mut c = vec![vec![Dd::default(); n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik.hi == 0.0 {
                continue;
            }
            for j in 0..n {
                if b[k][j].hi != 0.0 {
                    c[i][j] = c[i][j].add(aik.mul(b[k][j]));
                }
            }
        }
    }
    c
}

fn dd_matvec(a: &DdMatrix, x: &[Dd]) -> Vec<Dd> {
    a.iter()
        .map(|row| {
            row.iter()
                .zip(x)
                .fold(Dd::default(), |acc, (r, v)| acc.add(r.mul(*v)))
        })
        .collect()
}

/// Value iteration accelerated by doubling, in double-double arithmetic:
/// with `S_k = sum_{t<k} Q^t 1` (the `k`-th value iterate from zero),
/// `S_{2k} = S_k + Q^k S_k`. The diagonal of `Q` is rebuilt as
/// `1 - leak - off-diagonal mass` in extended precision, so chains whose
/// escape probability is far below `f64` epsilon are handled. Stops once a
/// doubling changes no entry by more than `tol` relatively.
pub fn doubling_value_iteration(chain: &AbsorbingChain, tol: f64) -> Vec<f64> {
    let m = chain.dim();
    let mut qk: DdMatrix = (0..m)
        .map(|i| {
            let mut off = Dd::new(chain.leak()[i]);
            let mut row: Vec<Dd> = (0..m).map(|j| Dd::new(chain.q()[(i, j)])).collect();
            for (j, v) in row.iter().enumerate() {
                if j != i {
                    off = off.add(*v);
                }
            }
            row[i] = Dd::new(1.0).add(off.neg());
            row
        })
        .collect();
    let mut s = vec![Dd::new(1.0); m];
    for _ in 0..200 {
        let step = dd_matvec(&qk, &s);
        let next: Vec<Dd> = s.iter().zip(&step).map(|(a, b)| a.add(*b)).collect();
        let change = step
            .iter()
            .zip(&next)
            .map(|(d, n)| (d.to_f64() / n.to_f64()).abs())
            .fold(0.0, f64::max);
        s = next;
        if change < tol {
            break;
        }
        qk = dd_matmul(&qk, &qk);
    }
    s.into_iter().map(Dd::to_f64).collect()
}

/// `max_i |a_i - b_i| / |b_i|`
pub fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| ((x - y) / y).abs())
        .fold(0.0, f64::max)
}

/// `max_i |a_i - b_i|`
pub fn max_abs_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// The first example's drift function on the elitist walk over `x^2`:
/// `d(x) = (100 * 101 / 99) (100 - x)` for `1 <= x <= 99`, `d(0) = d(1)`.
pub fn example_one_drift() -> Vec<f64> {
    let c = 100.0 * 101.0 / 99.0;
    (0..100).map(|x| c * (100 - x.max(1)) as f64).collect()
}

/// The second example's drift function, `d(x) = 100 (x + 1)`.
pub fn example_two_drift() -> Vec<f64> {
    (0..100).map(|x| 100.0 * (x + 1) as f64).collect()
}
