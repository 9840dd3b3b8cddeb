//! The reference experiments as a pass/fail table.

use std::fmt::Write as _;

use anyhow::{bail, Result};
use rsh_lab::analysis::{spectral_summary, SpectralOptions};
use rsh_lab::{
    average_drift, backward_drift, build_chain, certify, check_convergence_reachability,
    check_convergence_spectral, empirical_average_rate, empirical_convergence_curve,
    empirical_hitting_time, forward_backward_identity, hitting_times, mean_hitting_time,
    pointwise_drift, simulate, AbsorbingChain, Algorithm, Builtin, Certificate, CertificateStatus,
    CertifyMode, Distribution, DriftFunction, Init, RunStats, SimConfig,
};

use crate::args::ReproduceArgs;
use crate::Status;

pub const GROUPS: [&str; 7] = [
    "spectral",
    "convergence",
    "hitting",
    "drift",
    "simulation",
    "trap",
    "rate",
];

struct Row {
    group: &'static str,
    check: String,
    expected: String,
    observed: String,
    pass: bool,
}

#[derive(Default)]
struct Table {
    rows: Vec<Row>,
}

impl Table {
    fn push(
        &mut self,
        group: &'static str,
        check: impl Into<String>,
        expected: impl Into<String>,
        observed: impl Into<String>,
        pass: bool,
    ) {
        self.rows.push(Row {
            group,
            check: check.into(),
            expected: expected.into(),
            observed: observed.into(),
            pass,
        });
    }

    fn markdown(&self, args: &ReproduceArgs) -> String {
        let passed = self.rows.iter().filter(|r| r.pass).count();
        let mut s = String::from("# Reproduction\n\n");
        let _ = writeln!(
            s,
            "seed {}, {} runs per simulated experiment\n",
            args.seed, args.runs
        );
        s.push_str("| group | check | expected | observed | result |\n");
        s.push_str("|---|---|---|---|---|\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {} |",
                r.group,
                r.check,
                r.expected,
                r.observed,
                if r.pass { "pass" } else { "FAIL" }
            );
        }
        let _ = writeln!(s, "\n{passed} of {} rows pass", self.rows.len());
        s
    }
}

fn chain(algo: Algorithm, b: Builtin) -> Result<AbsorbingChain> {
    let p = b.problem();
    Ok(build_chain(
        &algo.kernel(&p, &algo.default_params()),
        &p.state_space(),
    )?)
}

fn show<T: std::fmt::Display>(v: Option<&T>) -> String {
    v.map_or_else(|| "none".into(), |v| v.to_string())
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

pub(crate) fn run(args: &ReproduceArgs) -> Result<Status> {
    for g in &args.only {
        if !GROUPS.contains(&g.as_str()) {
            bail!(
                "--only: unknown group {g:?} (expected one of {})",
                GROUPS.join(", ")
            );
        }
    }
    if args.runs == 0 {
        bail!("--runs: must be at least 1");
    }
    let wanted = |g: &str| args.only.is_empty() || args.only.iter().any(|o| o == g);
    let mut table = Table::default();
    if wanted("spectral") {
        spectral(&mut table)?;
    }
    if wanted("convergence") {
        convergence(&mut table)?;
    }
    if wanted("hitting") {
        hitting(&mut table)?;
    }
    if wanted("drift") {
        drift(&mut table)?;
    }
    if wanted("simulation") || wanted("rate") {
        let r1 = square_runs(Algorithm::Rsh1, args.seed, args.runs)?;
        let r2 = square_runs(Algorithm::Rsh2, args.seed, args.runs)?;
        if wanted("simulation") {
            simulation(&mut table, &r1, &r2)?;
        }
        if wanted("rate") {
            rate(&mut table, &r1, &r2);
        }
    }
    if wanted("trap") {
        trap(&mut table, args.seed)?;
    }

    std::fs::create_dir_all(&args.out)?;
    std::fs::write(args.out.join("reproduction.md"), table.markdown(args))?;
    for r in &table.rows {
        println!(
            "{} {}: {} (expected {}, observed {})",
            if r.pass { "pass" } else { "FAIL" },
            r.group,
            r.check,
            r.expected,
            r.observed
        );
    }
    Ok(if table.rows.iter().all(|r| r.pass) {
        Status::Success
    } else {
        Status::PreconditionFailed
    })
}

fn spectral(t: &mut Table) -> Result<()> {
    let c = chain(Algorithm::Rsh1, Builtin::Square)?;
    let rho = spectral_summary(&c, &SpectralOptions::default())?.rho();
    t.push(
        "spectral",
        "rho(Q), RSH-I on x^2",
        "0.99 (abs 1e-10)",
        format!("{rho:.12}"),
        (rho - 0.99).abs() <= 1e-10,
    );
    Ok(())
}

fn convergence(t: &mut Table) -> Result<()> {
    for algo in Algorithm::ALL {
        for b in Builtin::ALL {
            let p = b.problem();
            let kernel = algo.kernel(&p, &algo.default_params());
            let space = p.state_space();
            let spectral = check_convergence_spectral(&build_chain(&kernel, &space)?)?;
            let reach = check_convergence_reachability(&kernel, &space);
            let expected = !(algo == Algorithm::Rsh1 && b == Builtin::ShiftedSquare);
            let word = |c: bool| if c { "convergent" } else { "not convergent" };
            t.push(
                "convergence",
                format!("verdict, {algo} on {b}"),
                word(expected),
                format!(
                    "spectral {}, reachability {}",
                    word(spectral.convergent),
                    word(reach.convergent)
                ),
                spectral.convergent == expected && reach.convergent == expected,
            );
            if !expected {
                let stuck0 = reach.stuck_states.contains(&0) && spectral.stuck_states.contains(&0);
                t.push(
                    "convergence",
                    format!("stuck states, {algo} on {b}"),
                    "include 0",
                    format!(
                        "{} states, starting at {}",
                        reach.stuck_states.len(),
                        show(reach.stuck_states.first())
                    ),
                    stuck0,
                );
            }
        }
    }
    Ok(())
}

fn hitting(t: &mut Table) -> Result<()> {
    let c = chain(Algorithm::Rsh1, Builtin::Square)?;
    let times = hitting_times(&c)?;
    let mean = mean_hitting_time(&times, &Distribution::uniform_all(&c))?;
    t.push(
        "hitting",
        "mean hitting time, RSH-I on x^2, uniform start",
        "5000 (rel 1e-6)",
        format!("{mean:.6}"),
        rel(mean, 5000.0) <= 1e-6,
    );
    let (sh, ss) = (times.sum_hitting(), times.sum_staying());
    t.push(
        "hitting",
        "sum of hitting times equals sum of staying times",
        "505000 each (rel 1e-6)",
        format!(
            "{sh:.4} / {ss:.4} (gap {:e})",
            forward_backward_identity(&times)
        ),
        rel(sh, 505_000.0) <= 1e-6 && rel(ss, 505_000.0) <= 1e-6,
    );
    Ok(())
}

/// `(100 * 101 / 99)(100 - x)` for `x >= 1`, equal at 0 and 1.
fn example_one(m: usize) -> Vec<f64> {
    let c = 100.0 * 101.0 / 99.0;
    (0..m).map(|x| c * (100 - x.max(1)) as f64).collect()
}

fn example_two(m: usize) -> Vec<f64> {
    (0..m).map(|x| 100.0 * (x + 1) as f64).collect()
}

fn drift(t: &mut Table) -> Result<()> {
    let c = chain(Algorithm::Rsh1, Builtin::Square)?;
    let m = c.dim();
    let d1 = DriftFunction::new(example_one(m))?;
    let delta = pointwise_drift(&c, &d1)?;
    let want = 101.0 / 99.0;
    let worst = delta[1..]
        .iter()
        .map(|v| (v - want).abs())
        .fold(0.0, f64::max);
    t.push(
        "drift",
        "first example: pointwise drift on 1..=99",
        "101/99 (abs 1e-12)",
        format!("max deviation {worst:e}"),
        worst <= 1e-12,
    );
    t.push(
        "drift",
        "first example: pointwise drift at 0",
        "0 (abs 1e-12)",
        format!("{:e}", delta[0]),
        delta[0].abs() <= 1e-12,
    );
    let uniform = Distribution::uniform_all(&c);
    let avg0 = average_drift(&c, &d1, &uniform, 0)?.by_t[0].1;
    t.push(
        "drift",
        "first example: average drift at t = 0, uniform start",
        "1 (abs 1e-12)",
        format!("{avg0:.15}"),
        (avg0 - 1.0).abs() <= 1e-12,
    );
    let pw = certify(&c, &d1, &uniform, 0, CertifyMode::PointwiseUpper)?;
    let violator = pw.witness.and_then(|w| w.state);
    t.push(
        "drift",
        "first example: pointwise_upper certificate",
        "denied at state 0",
        format!(
            "{}, tightest state {}",
            if pw.granted() { "granted" } else { "denied" },
            show(violator.as_ref())
        ),
        !pw.granted() && violator == Some(0),
    );
    let av = certify(&c, &d1, &uniform, 100_000, CertifyMode::AvgUpper)?;
    t.push(
        "drift",
        "first example: avg_upper certificate",
        "granted",
        format!("{:?}, bound {}", av.status, show(av.bound.as_ref())),
        av.certificate == Certificate::UpperHitting && av.status == CertificateStatus::Granted,
    );
    let d2 = DriftFunction::new(example_two(m))?;
    let nabla = backward_drift(&c, &d2)?;
    let worst = nabla.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    t.push(
        "drift",
        "second example: backward drift",
        "1 everywhere (abs 1e-12)",
        format!("max deviation {worst:e}"),
        worst <= 1e-12,
    );
    let s = hitting_times(&c)?.staying;
    let worst = s
        .iter()
        .zip(d2.values())
        .map(|(a, b)| rel(*a, *b))
        .fold(0.0, f64::max);
    t.push(
        "drift",
        "second example: staying times",
        "100 (x + 1) (rel 1e-12)",
        format!("max deviation {worst:e}"),
        worst <= 1e-12,
    );
    Ok(())
}

fn square_runs(algo: Algorithm, seed: u64, runs: u64) -> Result<RunStats> {
    let config = SimConfig {
        runs,
        max_iterations: 1_000_000,
        seed,
        init: Init::State(20),
        record_stride: 100,
    };
    Ok(simulate(
        algo,
        &Builtin::Square.problem(),
        &algo.default_params(),
        &config,
    )?)
}

fn simulation(t: &mut Table, r1: &RunStats, r2: &RunStats) -> Result<()> {
    for (algo, stats) in [(Algorithm::Rsh1, r1), (Algorithm::Rsh2, r2)] {
        let exact = hitting_times(&chain(algo, Builtin::Square)?)?.hitting[20];
        let est = empirical_hitting_time(stats);
        let mean = est.mean().unwrap_or(f64::NAN);
        t.push(
            "simulation",
            format!("mean first hitting time, {algo} on x^2 from 20"),
            format!("{exact:.2} (rel 0.02)"),
            format!(
                "{mean:.1} (stderr {:.1}, censored {})",
                est.stderr().unwrap_or(f64::NAN),
                est.censored()
            ),
            rel(mean, exact) <= 0.02,
        );
    }
    Ok(())
}

fn trap(t: &mut Table, seed: u64) -> Result<()> {
    let algo = Algorithm::Rsh1;
    let config = SimConfig {
        runs: 1000,
        max_iterations: 100_000,
        seed,
        init: Init::State(20),
        record_stride: 100,
    };
    let stats = simulate(
        algo,
        &Builtin::ShiftedSquare.problem(),
        &algo.default_params(),
        &config,
    )?;
    let best = empirical_convergence_curve(&stats)
        .iter()
        .map(|&(_, p)| p)
        .fold(0.0, f64::max);
    t.push(
        "trap",
        "RSH-I on (x-49)^2 from 20: convergence probability",
        "0 at every t <= 100000",
        format!("max {best}"),
        best == 0.0,
    );
    t.push(
        "trap",
        "RSH-I on (x-49)^2 from 20: censored runs",
        "1000 of 1000",
        stats.censored_count.to_string(),
        stats.censored_count == 1000,
    );
    Ok(())
}

fn rate(t: &mut Table, r1: &RunStats, r2: &RunStats) {
    let horizon = 40_000;
    for (algo, stats, target) in [(Algorithm::Rsh1, r1, 0.0009), (Algorithm::Rsh2, r2, 0.0004)] {
        let rate = empirical_average_rate(stats);
        let (at, peak) = rate
            .iter()
            .filter(|(t, _)| *t <= horizon)
            .filter_map(|&(t, r)| r.map(|r| (t, r)))
            .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        t.push(
            "rate",
            format!("empirical average rate, {algo} on x^2, t <= {horizon}"),
            format!("reaches {target} (abs 0.0002)"),
            format!("peak {peak:.6} at t = {at}"),
            (peak - target).abs() <= 0.0002,
        );
        let k = stats.runs as f64;
        let consistent = stats
            .ts
            .iter()
            .zip(&stats.nonopt_counts)
            .filter(|(&t, _)| t >= 1)
            .zip(&rate)
            .all(|((_, &n), (_, r))| (n as f64 / k <= 1e-5) == r.is_none());
        let absent = rate.iter().filter(|(_, r)| r.is_none()).count();
        t.push(
            "rate",
            format!("cutoff, {algo} on x^2"),
            "absent exactly where surviving frequency <= 1e-5",
            format!("{absent} of {} values absent", rate.len()),
            consistent,
        );
    }
}
