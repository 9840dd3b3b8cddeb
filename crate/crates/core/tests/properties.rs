//! Randomised properties over small substochastic chains.

mod common;

use common::value_iteration;
use proptest::prelude::*;
use rsh_lab::linalg::Matrix;
use rsh_lab::*;

/// Rows of raw weights scaled so that each row keeps at least 5% leak.
fn chain_strategy() -> impl Strategy<Value = AbsorbingChain> {
    (2usize..8).prop_flat_map(|m| {
        (
            prop::collection::vec(prop::collection::vec(0.0f64..1.0, m), m),
            prop::collection::vec(0.05f64..0.6, m),
        )
            .prop_map(move |(raw, leaks)| {
                let rows: Vec<Vec<f64>> = raw
                    .into_iter()
                    .zip(leaks)
                    .map(|(r, leak)| {
                        let s: f64 = r.iter().sum::<f64>().max(1e-12);
                        r.into_iter().map(|v| v / s * (1.0 - leak)).collect()
                    })
                    .collect();
                AbsorbingChain::from_q(Matrix::from_rows(&rows)).unwrap()
            })
    })
}

fn chain_with_drift() -> impl Strategy<Value = (AbsorbingChain, Vec<f64>)> {
    chain_strategy().prop_flat_map(|c| {
        let m = c.dim();
        (Just(c), prop::collection::vec(0.0f64..50.0, m))
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reconstruction_is_stochastic(c in chain_strategy()) {
        let p = c.reconstruct();
        let n = c.dim() + c.opt_index().len();
        for i in 0..n {
            let sum: f64 = p.row(i).iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
        }
        for &o in c.opt_index() {
            prop_assert_eq!(p[(o, o)], 1.0);
        }
    }

    #[test]
    fn non_optimal_mass_never_grows(c in chain_strategy()) {
        let mut d = Distribution::uniform_non_optimal(&c);
        let mut last = nonopt_probability(&d);
        for _ in 0..30 {
            d = iterate(&c, &d).unwrap();
            let now = nonopt_probability(&d);
            prop_assert!(now <= last * (1.0 + 1e-14));
            last = now;
        }
    }

    #[test]
    fn hitting_times_solve_the_fixed_point(c in chain_strategy()) {
        let times = hitting_times(&c).unwrap();
        let oracle = value_iteration(&c, 1e-14, 100_000).unwrap();
        for (a, b) in times.hitting.iter().zip(&oracle) {
            prop_assert!(((a - b) / b).abs() < 1e-9);
        }
        prop_assert!(forward_backward_identity(&times) < 1e-12);
    }

    #[test]
    fn drifts_are_linear((c, d) in chain_with_drift(), a in 0.0f64..5.0) {
        let d1 = DriftFunction::new(d.clone()).unwrap();
        let scaled = DriftFunction::new(d.iter().map(|v| a * v + 1.0).collect()).unwrap();
        let ones = DriftFunction::new(vec![1.0; c.dim()]).unwrap();
        let (p, p1, ps) = (
            pointwise_drift(&c, &d1).unwrap(),
            pointwise_drift(&c, &ones).unwrap(),
            pointwise_drift(&c, &scaled).unwrap(),
        );
        let (b, b1, bs) = (
            backward_drift(&c, &d1).unwrap(),
            backward_drift(&c, &ones).unwrap(),
            backward_drift(&c, &scaled).unwrap(),
        );
        for i in 0..c.dim() {
            prop_assert!((ps[i] - (a * p[i] + p1[i])).abs() < 1e-9);
            prop_assert!((bs[i] - (a * b[i] + b1[i])).abs() < 1e-9);
        }
        // one step of drift loses exactly the leaked mass from a constant
        for (x, leak) in p1.iter().zip(c.leak()) {
            prop_assert!((x - leak).abs() < 1e-12);
        }
    }

    #[test]
    fn granted_certificates_are_sound((c, d) in chain_with_drift()) {
        let times = hitting_times(&c).unwrap();
        let f = DriftFunction::new(d.clone()).unwrap();
        let q0 = Distribution::uniform_non_optimal(&c);
        let slack = 1e-7;
        for mode in [CertifyMode::PointwiseUpper, CertifyMode::PointwiseLower] {
            let r = certify(&c, &f, &q0, 0, mode).unwrap();
            if r.granted() {
                for (h, dv) in times.hitting.iter().zip(&d) {
                    if mode.is_upper() {
                        prop_assert!(*h <= dv * (1.0 + slack) + slack);
                    } else {
                        prop_assert!(*h >= dv * (1.0 - slack) - slack);
                    }
                }
                let mean = dot(q0.weights(), &times.hitting);
                let bound = r.bound.unwrap();
                let holds = if mode.is_upper() {
                    mean <= bound * (1.0 + slack)
                } else {
                    mean >= bound * (1.0 - slack)
                };
                prop_assert!(holds);
            }
        }
        for mode in [CertifyMode::BackwardUpper, CertifyMode::BackwardLower] {
            let r = certify(&c, &f, &q0, 0, mode).unwrap();
            if r.granted() {
                let bv = r.bound_vector.unwrap();
                for (s, dv) in times.staying.iter().zip(&bv) {
                    if mode.is_upper() {
                        prop_assert!(*s <= dv * (1.0 + slack) + slack);
                    } else {
                        prop_assert!(*s >= dv * (1.0 - slack) - slack);
                    }
                }
            }
        }
    }

    #[test]
    fn exact_solution_is_always_certified(c in chain_strategy()) {
        let times = hitting_times(&c).unwrap();
        let q0 = Distribution::uniform_non_optimal(&c);
        let h = DriftFunction::new(times.hitting.clone()).unwrap();
        let s = DriftFunction::new(times.staying.clone()).unwrap();
        for mode in [CertifyMode::PointwiseUpper, CertifyMode::PointwiseLower, CertifyMode::AvgUpper, CertifyMode::AvgLower] {
            prop_assert!(certify(&c, &h, &q0, 2000, mode).unwrap().granted(), "{}", mode);
        }
        for mode in [CertifyMode::BackwardUpper, CertifyMode::BackwardLower] {
            prop_assert!(certify(&c, &s, &q0, 0, mode).unwrap().granted(), "{}", mode);
        }
    }

    #[test]
    fn rate_bounds_sandwich_the_exact_rate(c in chain_strategy(), t in 1u64..200) {
        let q0 = Distribution::uniform_non_optimal(&c);
        let b = rate_bounds(&c, &q0, t).unwrap();
        prop_assert!(b.finite_lower <= b.exact_rate + 1e-12);
        if let Some(up) = b.finite_upper {
            prop_assert!(b.exact_rate <= up + 1e-12);
        }
    }

    #[test]
    fn spectral_radius_is_bracketed_by_row_sums(c in chain_strategy()) {
        let rho = spectral_radius(&c, 1e-12).unwrap();
        let sums: Vec<f64> = (0..c.dim()).map(|i| c.q().row(i).iter().sum()).collect();
        let lo = sums.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = sums.iter().copied().fold(0.0, f64::max);
        prop_assert!(rho >= lo - 1e-10 && rho <= hi + 1e-10);
    }
}
