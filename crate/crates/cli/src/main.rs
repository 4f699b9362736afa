use clap::{Parser, Subcommand, ValueEnum};
use pwlf_core::infinity::{infinity_stability, InfinityReport};
use pwlf_core::io::fmt_f64;
use pwlf_core::melnikov::{analyze_melnikov, sample_m1, MelnikovParams, MelnikovReport};
use pwlf_core::roots::RootOptions;
use pwlf_core::sigma::find_folds;
use pwlf_core::simulate::{simulate, SimOptions};
use pwlf_core::sliding::{detect_sliding_cycle, sweep_csv, sweep_point, thresholds, SlidingParams, SlidingReport};
use pwlf_core::system::{check_hypotheses, HypothesisReport};
use pwlf_core::{examples, svg, verify, CanonicalParams, Error, PwlSystem, Vec2};
use rayon::prelude::*;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "pwlf", version, about = "Crossing and sliding limit cycles of planar piecewise-linear Filippov systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone)]
struct Common {
    /// System description (JSON).
    input: PathBuf,
    /// Replace the epsilon stored in the input.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Directory for output files.
    #[arg(long, short, default_value = ".")]
    out: PathBuf,
}

#[derive(clap::Args, Debug, Clone)]
struct Range {
    #[arg(long, default_value_t = 1e-3)]
    y0_lo: f64,
    #[arg(long, default_value_t = 1e3)]
    y0_hi: f64,
    /// Number of log-spaced amplitude samples (at least 256).
    #[arg(long, default_value_t = 4096)]
    grid: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Hypotheses, canonical form, Melnikov, infinity and sliding reports.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        range: Range,
    },
    /// Sample M1 to m1.csv and write its roots to roots.json.
    Melnikov {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        range: Range,
    },
    /// Sweep c11- + c22- and classify the sliding cycle at each value.
    Sliding {
        #[command(flatten)]
        common: Common,
        /// Sweep start (default 0).
        #[arg(long)]
        tau_lo: Option<f64>,
        /// Sweep end (default 5T).
        #[arg(long)]
        tau_hi: Option<f64>,
        #[arg(long, default_value_t = 101)]
        steps: usize,
    },
    /// Simulate one orbit to trajectory.csv.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.0)]
        x0: f64,
        #[arg(long)]
        y0: f64,
        #[arg(long, default_value_t = 50.0)]
        t_max: f64,
        #[arg(long, default_value_t = 0.02)]
        sample_dt: f64,
        /// Also write portrait.svg.
        #[arg(long)]
        svg: bool,
    },
    /// Run the built-in example checks and print one line per criterion.
    VerifyExamples {
        /// Write the simultaneity portrait here.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Print a built-in example system as JSON.
    Example {
        #[arg(value_enum)]
        name: ExampleName,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum ExampleName {
    Example1,
    Example1Rounded,
    Example2,
}

#[derive(Serialize)]
struct AnalysisReport {
    epsilon: f64,
    hypotheses: HypothesisReport,
    canonical: Option<CanonicalParams>,
    melnikov: Option<MelnikovReport>,
    infinity: Option<InfinityReport>,
    sliding: Option<SlidingReport>,
}

enum Failure {
    Invalid(String),
    Bound(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::BoundViolated(_) => Failure::Bound(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn load(common: &Common) -> std::result::Result<PwlSystem, Failure> {
    let text = std::fs::read_to_string(&common.input)
        .map_err(|e| Failure::Invalid(format!("{}: {e}", common.input.display())))?;
    let mut sys = PwlSystem::from_json(&text).map_err(|e| Failure::Invalid(format!("{}: {e}", common.input.display())))?;
    if let Some(eps) = common.epsilon {
        sys.epsilon = eps;
    }
    sys.validate()?;
    Ok(sys)
}

fn check_range(r: &Range) -> Outcome {
    if !(r.y0_lo > 0.0 && r.y0_lo < r.y0_hi) {
        return Err(Failure::Invalid(format!("need 0 < y0-lo < y0-hi, got ({}, {})", r.y0_lo, r.y0_hi)));
    }
    if r.grid < 256 {
        return Err(Failure::Invalid(format!("grid must be at least 256, got {}", r.grid)));
    }
    Ok(())
}

fn write(dir: &Path, name: &str, body: &str) -> Outcome {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), body)?;
    Ok(())
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn analyze(common: &Common, range: &Range) -> Outcome {
    check_range(range)?;
    let sys = load(common)?;
    let hypotheses = check_hypotheses(&sys)?;
    let opts = RootOptions { grid: range.grid, ..RootOptions::default() };
    let mut report = AnalysisReport {
        epsilon: sys.epsilon,
        canonical: hypotheses.canonical,
        hypotheses,
        melnikov: None,
        infinity: None,
        sliding: None,
    };
    if report.canonical.is_some() {
        let mp = MelnikovParams::from_system(&sys)?;
        report.melnikov = Some(analyze_melnikov(&mp, range.y0_lo, range.y0_hi, &opts)?);
        report.infinity = Some(infinity_stability(&mp));
        let sp = SlidingParams::from_system(&sys)?;
        if sp.is_constrained() {
            report.sliding = Some(detect_sliding_cycle(&sp));
        }
    }
    write(&common.out, "report.json", &json(&report))?;
    if let Some(m) = &report.melnikov {
        m.check_bound()?;
    }
    Ok(())
}

fn melnikov(common: &Common, range: &Range) -> Outcome {
    check_range(range)?;
    let sys = load(common)?;
    let mp = MelnikovParams::from_system(&sys)?;
    let mut csv = String::from("y0,m1\n");
    for (y, v) in sample_m1(&mp, range.y0_lo, range.y0_hi, range.grid)? {
        csv.push_str(&format!("{},{}\n", fmt_f64(y), fmt_f64(v)));
    }
    write(&common.out, "m1.csv", &csv)?;
    let rep = analyze_melnikov(&mp, range.y0_lo, range.y0_hi, &RootOptions { grid: range.grid, ..RootOptions::default() })?;
    write(&common.out, "roots.json", &json(&rep))?;
    rep.check_bound()?;
    Ok(())
}

fn thread_cap() -> Option<usize> {
    std::env::var("PWLF_THREADS").ok()?.parse().ok().filter(|&n| n > 0)
}

fn sliding(common: &Common, tau_lo: Option<f64>, tau_hi: Option<f64>, steps: usize) -> Outcome {
    let sys = load(common)?;
    let sp = SlidingParams::from_system(&sys)?;
    let t = thresholds(&sp);
    let lo = tau_lo.unwrap_or(0.0);
    let hi = tau_hi.unwrap_or(5.0 * t);
    if !(lo < hi) || steps < 2 {
        return Err(Failure::Invalid(format!("need tau-lo < tau-hi and steps >= 2, got ({lo}, {hi}), {steps}")));
    }
    let taus: Vec<f64> = (0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap() {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Failure::Invalid(e.to_string()))?;
    let rows = pool.install(|| taus.par_iter().map(|&tau| sweep_point(&sp, tau)).collect::<Result<Vec<_>, _>>())?;
    write(&common.out, "sweep.csv", &sweep_csv(&rows))?;
    Ok(())
}

fn simulate_cmd(common: &Common, x0: f64, y0: f64, t_max: f64, sample_dt: f64, emit_svg: bool) -> Outcome {
    let sys = load(common)?;
    let opts = SimOptions { sample_dt, ..SimOptions::default() };
    let traj = simulate(&sys, Vec2::new(x0, y0), t_max, &opts)?;
    write(&common.out, "trajectory.csv", &traj.to_csv())?;
    if emit_svg {
        let folds: Vec<f64> = find_folds(&sys)?.iter().map(|f| f.y).collect();
        let trajs = [traj];
        let frame = svg::Frame::fit(&trajs, 640.0, 640.0);
        write(&common.out, "portrait.svg", &svg::phase_portrait(&trajs, &folds, &frame))?;
    }
    Ok(())
}

fn verify_examples(out: Option<&Path>) -> Outcome {
    let results = verify::run_all();
    for c in &results {
        println!("{}", c.line());
    }
    if let Some(dir) = out {
        let p = verify::simultaneity_portrait()?;
        write(dir, "simultaneity.svg", &p.svg)?;
    }
    let failed: Vec<String> = results.iter().filter(|c| !c.pass).map(|c| c.id.to_string()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Bound(format!("failing criteria: {}", failed.join(", "))))
    }
}

fn example(name: ExampleName) -> Outcome {
    let sys = match name {
        ExampleName::Example1 => examples::example1_exact(),
        ExampleName::Example1Rounded => examples::example1_rounded(),
        ExampleName::Example2 => examples::example2(),
    };
    use std::io::Write;
    // A closed pipe (e.g. `| head`) is not an error worth reporting.
    let _ = writeln!(std::io::stdout(), "{}", sys.to_json());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match &cli.command {
        Command::Analyze { common, range } => analyze(common, range),
        Command::Melnikov { common, range } => melnikov(common, range),
        Command::Sliding { common, tau_lo, tau_hi, steps } => sliding(common, *tau_lo, *tau_hi, *steps),
        Command::Simulate { common, x0, y0, t_max, sample_dt, svg } => simulate_cmd(common, *x0, *y0, *t_max, *sample_dt, *svg),
        Command::VerifyExamples { out } => verify_examples(out.as_deref()),
        Command::Example { name } => example(*name),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Bound(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
