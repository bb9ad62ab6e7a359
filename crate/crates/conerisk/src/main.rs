use clap::{Parser, Subcommand};
use conerisk::error::{Error, Result};
use conerisk::limits::{limit_report, HighSigmaLimit};
use conerisk::numerics::{fmt_g17, parse_vector_inline, read_vector_csv};
use conerisk::risklab::{
    simulate_risks, table1_report, write_curve_csv, Scenario,
};
use conerisk::sets::ConstraintSet;
use conerisk::statdim::{mc_statdim, ConeTarget, NoiseModel};
use conerisk::verify::{all_passed, render_report, run_all, VerifyConfig};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_VERIFY: u8 = 3;

#[derive(Parser)]
#[command(
    name = "conerisk",
    about = "Convex projections, cone statistical dimensions, and misspecified-risk simulation",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Monte Carlo statistical dimension of a cone (optionally intersected
    /// with the hyperplane orthogonal to a vector). Prints one CSV line:
    /// value,std_error,samples,seed.
    Statdim {
        /// Set spec, e.g. orthant:n=3, monotone:n=6, blockmonotone:sizes=2,3,2,
        /// cone:A=rows.csv
        #[arg(long)]
        set: String,
        /// CSV file with the hyperplane normal vector.
        #[arg(long)]
        hyperplane: Option<PathBuf>,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 1_234_567)]
        seed: u64,
        /// gaussian or scaled-uniform.
        #[arg(long, default_value = "gaussian")]
        noise: String,
    },
    /// Low-noise limit, tangent-cone bound, high-noise limit, and (for
    /// monotone sets) the finest mean-preserving partition.
    Limits {
        #[arg(long)]
        set: String,
        /// Inline vector `1,-1,0` or a CSV file path.
        #[arg(long)]
        theta: String,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 1_234_567)]
        seed: u64,
    },
    /// Simulate the normalized risk curves for a scenario file and emit the
    /// CSV schema sigma,m_norm,m_se,e_norm,e_se,samples,seed.
    Sweep {
        scenario: PathBuf,
        /// Output CSV path (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reproduce the isotonic reference table: exact partitions, exact
    /// limits, and simulated low-noise risk.
    Table1 {
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 1_234_567)]
        seed: u64,
    },
    /// Run the acceptance checks; exits 3 if any check fails.
    Verify {
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 1_234_567)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    if let Err(code) = configure_workers() {
        return code;
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::from(EXIT_NUMERICAL)
            }
        }
    }
}

/// CONERISK_WORKERS sizes the rayon pool; results are worker-count
/// independent by construction.
fn configure_workers() -> std::result::Result<(), ExitCode> {
    if let Ok(raw) = std::env::var("CONERISK_WORKERS") {
        let workers: usize = match raw.trim().parse() {
            Ok(w) if w >= 1 => w,
            _ => {
                eprintln!("error: CONERISK_WORKERS must be a positive integer, got {raw:?}");
                return Err(ExitCode::from(EXIT_USAGE));
            }
        };
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
        {
            eprintln!("error: could not size the worker pool: {e}");
            return Err(ExitCode::from(EXIT_NUMERICAL));
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Statdim {
            set,
            hyperplane,
            samples,
            seed,
            noise,
        } => {
            let set = ConstraintSet::parse_spec(&set, Path::new("."))?;
            let noise = NoiseModel::parse(&noise)?;
            let target = match hyperplane {
                None => ConeTarget::Set(set),
                Some(path) => {
                    let v = read_vector_csv(&path)?;
                    let a = set.cone_h_rep().ok_or_else(|| {
                        Error::InvalidInput(format!(
                            "{} cannot be combined with --hyperplane",
                            set.label()
                        ))
                    })?;
                    if v.len() != a.cols() {
                        return Err(Error::InvalidInput(
                            "hyperplane vector dimension mismatch".into(),
                        ));
                    }
                    ConeTarget::Face { ineq: a, normal: v }
                }
            };
            let est = mc_statdim(&target, &noise, samples, seed)?;
            println!(
                "{},{},{},{}",
                fmt_g17(est.value),
                fmt_g17(est.std_error),
                est.samples,
                est.seed
            );
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Limits {
            set,
            theta,
            samples,
            seed,
        } => {
            let set = ConstraintSet::parse_spec(&set, Path::new("."))?;
            let theta = parse_theta(&theta)?;
            let report = limit_report(&set, &theta, samples, seed)?;
            print_limit_value("low_sigma_m", report.low_sigma_m.as_ref());
            print_limit_value("low_sigma_e", report.low_sigma_e.as_ref());
            print_limit_value("bellec_bound", report.bellec.as_ref());
            match &report.high_sigma {
                HighSigmaLimit::Known {
                    value,
                    std_error,
                    exactness,
                    condition_verified,
                } => {
                    println!("high_sigma = {}", fmt_g17(*value));
                    println!("high_sigma_se = {}", fmt_g17(*std_error));
                    println!("high_sigma_tag = {}", exactness.tag());
                    println!("high_sigma_condition_verified = {condition_verified}");
                }
                HighSigmaLimit::Unknown { reference, note } => {
                    println!("high_sigma = unknown");
                    println!("high_sigma_reference = {}", fmt_g17(*reference));
                    println!("high_sigma_note = {note}");
                }
            }
            if let Some(p) = &report.partition {
                println!("partition = {}", p.render(&theta));
                let counts: Vec<String> =
                    p.sub_block_counts().iter().map(|c| c.to_string()).collect();
                println!("partition_m = {}", counts.join(","));
            }
            for note in &report.notes {
                println!("note = {note}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Sweep { scenario, out } => {
            let s = parse_scenario_file(&scenario)?;
            let points = simulate_risks(&s)?;
            match out {
                Some(path) => {
                    let mut f = std::fs::File::create(path)?;
                    write_curve_csv(&points, s.samples, s.seed, &mut f)?;
                }
                None => {
                    let stdout = std::io::stdout();
                    let mut lock = stdout.lock();
                    write_curve_csv(&points, s.samples, s.seed, &mut lock)?;
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Table1 { samples, seed } => {
            let rows = table1_report(samples, seed)?;
            for row in rows {
                let theta: Vec<String> = row.theta.iter().map(|v| v.to_string()).collect();
                let proj: Vec<String> = row.projection.iter().map(|v| format!("{v}")).collect();
                let limit = if *row.limit.denom() == 1 {
                    format!("{}", row.limit.numer())
                } else {
                    format!("{}/{}", row.limit.numer(), row.limit.denom())
                };
                println!(
                    "theta=({}) projection=({}) partition={} m={} limit={} simulated={} se={}",
                    theta.join(","),
                    proj.join(","),
                    row.partition_string,
                    row.partition
                        .sub_block_counts()
                        .iter()
                        .map(|c| c.to_string())
                        .collect::<Vec<_>>()
                        .join(","),
                    limit,
                    fmt_g17(row.simulated),
                    fmt_g17(row.simulated_se)
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Verify { samples, seed } => {
            let checks = run_all(&VerifyConfig { samples, seed });
            print!("{}", render_report(&checks));
            if all_passed(&checks) {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(EXIT_VERIFY))
            }
        }
    }
}

fn print_limit_value(key: &str, v: Option<&conerisk::limits::LimitValue>) {
    match v {
        Some(v) => {
            println!("{key} = {}", fmt_g17(v.value));
            println!("{key}_se = {}", fmt_g17(v.std_error));
            println!("{key}_tag = {}", v.exactness.tag());
        }
        None => println!("{key} = unavailable"),
    }
}

/// Inline comma-separated numbers, or a CSV file path.
fn parse_theta(raw: &str) -> Result<Vec<f64>> {
    if let Ok(v) = parse_vector_inline(raw) {
        return Ok(v);
    }
    read_vector_csv(Path::new(raw))
}

/// Parse the scenario key-value file. Required keys: set, theta, noise,
/// sigma_min, sigma_max, sigma_points, samples, seed. `#` starts a comment.
/// Relative paths are resolved against the scenario file's directory.
fn parse_scenario_file(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let mut kv = std::collections::HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Parse(format!(
                "{}:{}: expected key = value",
                path.display(),
                lineno + 1
            ))
        })?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    let get = |key: &str| -> Result<&String> {
        kv.get(key)
            .ok_or_else(|| Error::Parse(format!("{}: missing key {key}", path.display())))
    };
    let parse_f64 = |key: &str| -> Result<f64> {
        get(key)?
            .parse()
            .map_err(|_| Error::Parse(format!("{}: bad number for {key}", path.display())))
    };
    let parse_usize = |key: &str| -> Result<usize> {
        get(key)?
            .parse()
            .map_err(|_| Error::Parse(format!("{}: bad integer for {key}", path.display())))
    };

    let set = ConstraintSet::parse_spec(get("set")?, &base)?;
    let theta_raw = get("theta")?;
    let theta = if let Ok(v) = parse_vector_inline(theta_raw) {
        v
    } else {
        read_vector_csv(&base.join(theta_raw))?
    };
    let noise = NoiseModel::parse(get("noise")?)?;
    let sigma_min = parse_f64("sigma_min")?;
    let sigma_max = parse_f64("sigma_max")?;
    let points = parse_usize("sigma_points")?;
    if !sigma_min.is_finite() || !sigma_max.is_finite() || sigma_min <= 0.0
        || sigma_max < sigma_min || points == 0
    {
        return Err(Error::InvalidInput(
            "need 0 < sigma_min <= sigma_max and sigma_points >= 1".into(),
        ));
    }
    if points == 1 && sigma_max != sigma_min {
        return Err(Error::InvalidInput(
            "sigma_points = 1 requires sigma_min = sigma_max".into(),
        ));
    }
    let grid: Vec<f64> = if points == 1 {
        vec![sigma_min]
    } else {
        let (l0, l1) = (sigma_min.log10(), sigma_max.log10());
        (0..points)
            .map(|i| 10f64.powf(l0 + (l1 - l0) * i as f64 / (points - 1) as f64))
            .collect()
    };
    let samples = parse_usize("samples")?;
    let seed = get("seed")?
        .parse()
        .map_err(|_| Error::Parse(format!("{}: bad integer for seed", path.display())))?;
    Scenario::new(set, theta, noise, grid, samples, seed)
}
