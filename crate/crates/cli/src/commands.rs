use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rsh_lab::drift::CertificateStatus;
use rsh_lab::{
    analyze as analyze_chain, build_chain, certify, empirical_hitting_time, log_grid,
    rate_bounds_at, simulate as run_simulation, write_rate_bounds_csv, AbsorbingChain,
    AnalysisOptions, Distribution, DriftFunction, HittingEstimate, Init, ProblemSpec, SimConfig,
    TransitionKernel,
};
use serde::Serialize;

use crate::args::{AnalyzeArgs, DriftArgs, ProblemArgs, SimulateArgs};
use crate::Status;

pub(crate) fn load_problem(args: &ProblemArgs) -> Result<ProblemSpec> {
    match (&args.builtin, &args.problem) {
        (Some(b), None) => Ok(b.problem()),
        (None, Some(path)) => {
            ProblemSpec::load(path).with_context(|| format!("--problem {}", path.display()))
        }
        _ => bail!("give exactly one of --builtin and --problem"),
    }
}

fn kernel_for(args: &ProblemArgs, problem: &ProblemSpec) -> TransitionKernel {
    args.algo.kernel(problem, &args.algo.default_params())
}

pub(crate) fn initial(chain: &AbsorbingChain, init: Init, domain: usize) -> Result<Distribution> {
    match init {
        Init::Uniform => Ok(Distribution::uniform_all(chain)),
        Init::State(s) if s >= domain => {
            bail!("--init: state {s} is outside the domain 0..{domain}")
        }
        Init::State(s) => Ok(Distribution::point_mass(chain, s)?),
    }
}

fn create_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("--out {}", dir.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// The snake_case name serde gives a unit variant.
fn wire_name<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        other => format!("{other:?}"),
    }
}

/// `0-48, 50, 52-99`
pub(crate) fn compress_ranges(states: &[usize]) -> String {
    let mut parts = Vec::new();
    let mut i = 0;
    while i < states.len() {
        let start = states[i];
        let mut j = i;
        while j + 1 < states.len() && states[j + 1] == states[j] + 1 {
            j += 1;
        }
        parts.push(if j == i {
            start.to_string()
        } else {
            format!("{start}-{}", states[j])
        });
        i = j + 1;
    }
    parts.join(", ")
}

pub(crate) fn analyze(args: &AnalyzeArgs) -> Result<Status> {
    if args.rate_horizon == 0 {
        bail!("--rate-horizon: must be at least 1");
    }
    let problem = load_problem(&args.problem)?;
    let kernel = kernel_for(&args.problem, &problem);
    let space = problem.state_space();
    let probe = build_chain(&kernel, &space)?;
    let q0 = initial(&probe, args.init, problem.domain_size())?;
    let opts = AnalysisOptions {
        q0: Some(q0.clone()),
        rate_horizon: args.rate_horizon,
    };
    let (chain, report) = analyze_chain(&kernel, &space, &opts)?;

    create_out(&args.out)?;
    write_text(&args.out.join("report.json"), &report.to_json_string())?;
    let bounds = if q0.weights().iter().any(|&w| w > 0.0) {
        rate_bounds_at(&chain, &q0, &log_grid(args.rate_horizon))?
    } else {
        // the run starts optimal; there is no rate to bound
        Vec::new()
    };
    let csv_path = args.out.join("rate_bounds.csv");
    let file =
        File::create(&csv_path).with_context(|| format!("writing {}", csv_path.display()))?;
    write_rate_bounds_csv(&bounds, BufWriter::new(file))?;

    println!(
        "rho={} convergent={} spectral_gap={:e}",
        report.rho, report.convergent, report.spectral_gap
    );
    if let Some(k) = report.witness_k {
        println!("witness_k={k}");
    }
    if let Some(mean) = report.mean_hitting_time {
        println!("mean_hitting_time={mean} init={}", args.init);
    }
    if let Some(b) = &report.rate_bounds {
        if let Some(why) = &b.upper_unavailable {
            println!("upper rate bounds unavailable ({why})");
        }
    }
    if !report.convergent {
        let stuck = compress_ranges(&report.stuck_states);
        println!("stuck_states={stuck}");
        if args.hitting {
            eprintln!(
                "error: the chain is not convergent, so hitting times are infinite; \
                 stuck states (no path to an optimum): {stuck}"
            );
            return Ok(Status::PreconditionFailed);
        }
    }
    Ok(Status::Success)
}

pub(crate) fn simulate(args: &SimulateArgs) -> Result<Status> {
    let problem = load_problem(&args.problem)?;
    let config = SimConfig {
        runs: args.runs,
        max_iterations: args.max_iter,
        seed: args.seed,
        init: args.init,
        record_stride: args.stride,
    };
    let algo = args.problem.algo;
    let stats = run_simulation(algo, &problem, &algo.default_params(), &config)?;
    create_out(&args.out)?;
    stats.write_files(&args.out)?;
    match empirical_hitting_time(&stats) {
        HittingEstimate::Estimate {
            mean,
            stderr,
            censored,
            lower_bound,
        } => {
            println!("mean_tau={mean} stderr={stderr} censored={censored}");
            if lower_bound {
                eprintln!("warning: {censored} runs were censored, so mean_tau underestimates the expected hitting time");
            }
        }
        HittingEstimate::AllCensored { censored } => {
            println!("mean_tau=NA stderr=NA censored={censored}");
        }
    }
    Ok(Status::Success)
}

pub(crate) fn drift(args: &DriftArgs) -> Result<Status> {
    let problem = load_problem(&args.problem)?;
    let kernel = kernel_for(&args.problem, &problem);
    let chain = build_chain(&kernel, &problem.state_space())?;
    let d = DriftFunction::load(&args.drift)
        .with_context(|| format!("--drift {}", args.drift.display()))?;
    let m = chain.dim();
    if d.len() != m {
        bail!(
            "--drift {}: field d has {} values, expected m = {m} (one per non-optimal state)",
            args.drift.display(),
            d.len()
        );
    }
    let q0 = initial(&chain, args.init, problem.domain_size())?;
    let report = certify(&chain, &d, &q0, args.max_iter, args.mode)?;
    create_out(&args.out)?;
    write_text(
        &args.out.join("drift_report.json"),
        &report.to_json_string(),
    )?;

    println!(
        "index map: d[0..{m}] belongs to states {}",
        compress_ranges(chain.non_index())
    );
    println!(
        "mode={} certificate={} status={} margin={:e}",
        args.mode,
        wire_name(&report.certificate),
        wire_name(&report.status),
        report.hypothesis_margin
    );
    if let Some(b) = report.bound {
        println!("bound={b}");
    }
    if let Some(w) = report.witness {
        let at = match (w.state, w.iteration) {
            (Some(s), _) => format!("state {s}"),
            (None, Some(t)) => format!("iteration {t}"),
            (None, None) => "nowhere".into(),
        };
        println!("tightest point: {at}, drift {}", w.drift);
    }
    match report.status {
        CertificateStatus::Granted => Ok(Status::Success),
        CertificateStatus::HorizonLimited => {
            eprintln!(
                "warning: the average drift was checked only up to iteration {}; \
                 {:e} of the initial mass was still non-optimal there",
                args.max_iter,
                report.residual_mass.unwrap_or(f64::NAN)
            );
            Ok(Status::Success)
        }
        CertificateStatus::Denied => {
            eprintln!("certificate denied: the drift hypothesis fails at the tightest point above");
            Ok(Status::Denied)
        }
    }
}
