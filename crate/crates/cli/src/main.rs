//! `excoef`: extremal coefficient tooling on the command line.
//!
//! Reports go to stdout as canonical JSON, diagnostics to stderr. Exit codes:
//! 0 on success, 1 when a validation fails, 2 on usage or I/O errors.

mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use excoef::alternation::validate_ecf;
use excoef::depset::{build_polytope, face_touch_check, support_function, vertices};
use excoef::estimate::{estimate_chi, estimate_theta, marginal_quantile, DEFAULT_CHI_QUANTILE};
use excoef::io::{
    ecf_to_json, read_ecf, read_samples, read_shape, read_tau, tau_to_json, to_canonical_json,
    write_samples,
};
use excoef::maxlinear::{build_tau, recover_theta, simulate, theta_table, SampleBatch, TauTable};
use excoef::numeric::format_g17;
use excoef::setfun::{Subset, DEFAULT_MAX_M};
use excoef::stationary::{parse_window, storm_chi, storm_tau_with_cap, GridSpec, StormModel};
use excoef::transform::{
    transform_ecf, triangle_check_eta, triangle_check_theta, BernsteinSpec, TripleSampling,
};
use excoef::Error;

#[derive(Parser, Debug)]
#[command(name = "excoef", version, about = "Extremal coefficients, max-linear models and storm processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check that a table is a valid extremal coefficient function.
    Validate { ecf: PathBuf },
    /// Max-linear weights of a valid table.
    Tau {
        ecf: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Extremal coefficients of a max-linear model.
    Theta {
        #[arg(long)]
        tau: PathBuf,
        /// Print only theta of this subset, e.g. `0,1,2`.
        #[arg(long)]
        set: Option<Subset>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Simulate replicates of a max-linear model.
    Simulate {
        /// Extremal coefficient table; alternative to `--tau`.
        ecf: Option<PathBuf>,
        #[arg(long, conflicts_with = "ecf")]
        tau: Option<PathBuf>,
        #[arg(short = 'n', long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV destination; stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Estimate theta and chi from a sample file.
    Estimate {
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        set: Option<Subset>,
        /// Pair `s t` for the conditional exceedance estimate.
        #[arg(long, num_args = 2, value_names = ["S", "T"])]
        chi: Option<Vec<usize>>,
        /// Marginal quantile level of the chi threshold.
        #[arg(long, default_value_t = DEFAULT_CHI_QUANTILE)]
        threshold: f64,
    },
    /// Half-spaces, vertices and support values of the dependency set.
    Depset {
        ecf: PathBuf,
        /// Enumerate vertices (at most 5 locations).
        #[arg(long)]
        vertices: bool,
        /// Vertex maximizing `<y, 1_L>` for a subset `L`.
        #[arg(long)]
        check_face: Option<Subset>,
        /// Direction for the support function, e.g. `1,0.5,0`.
        #[arg(long, value_delimiter = ',')]
        support: Option<Vec<f64>>,
    },
    /// Apply a Bernstein function to a table.
    Transform {
        ecf: PathBuf,
        /// JSON such as `{"kind":"power","q":0.5}`.
        #[arg(long)]
        bernstein: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Triangle inequalities for sets and for eta.
    CheckTriangle {
        ecf: PathBuf,
        #[arg(long)]
        bernstein: Option<String>,
        /// Sampled triples when the exhaustive sweep is too large.
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Simulate the storm process on a window of the lattice.
    Storm {
        #[arg(long)]
        shape: PathBuf,
        /// Inclusive ranges per axis, e.g. `0..9` or `0..3,0..3`.
        #[arg(long)]
        window: String,
        #[arg(short = 'n', long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Extremal correlation of the storm process at a lag.
    StormChi {
        #[arg(long)]
        shape: PathBuf,
        /// Lag in cells, comma separated per axis.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        lag: Vec<i64>,
    },
    /// Every check for one model in a single document.
    Report {
        ecf: PathBuf,
        #[arg(short = 'n', long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

enum Outcome {
    Pass,
    Fail,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cap = match max_m() {
        Ok(cap) => cap,
        Err(msg) => {
            eprintln!("excoef: {msg}");
            return ExitCode::from(2);
        }
    };
    match run(cli.command, cap) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(Error::NotCompletelyAlternating(report)) => {
            eprintln!("excoef: input is not a valid extremal coefficient function");
            match to_canonical_json(&*report) {
                Ok(text) => print!("{text}"),
                Err(e) => eprintln!("excoef: {e}"),
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("excoef: {e}");
            ExitCode::from(2)
        }
    }
}

fn max_m() -> Result<usize, String> {
    match std::env::var("EXCOEF_MAX_M") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| format!("EXCOEF_MAX_M must be a positive integer, got {v:?}")),
        Err(_) => Ok(DEFAULT_MAX_M),
    }
}

fn emit(value: &Value, output: Option<&Path>) -> excoef::Result<()> {
    let text = to_canonical_json(value)?;
    match output {
        Some(p) => write_file(p, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> excoef::Result<()> {
    std::fs::write(path, text).map_err(|source| excoef::Error::File {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_bernstein(text: &str) -> excoef::Result<BernsteinSpec> {
    let g: BernsteinSpec = serde_json::from_str(text)
        .map_err(|e| Error::Format(format!("--bernstein: {e}")))?;
    g.validate()?;
    Ok(g)
}

fn batch_summary(batch: &SampleBatch) -> Value {
    json!({
        "n": batch.n,
        "seed": batch.seed,
        "labels": batch.labels,
        "model_digest": batch.model_digest,
    })
}

fn write_batch(batch: &SampleBatch, output: Option<&Path>) -> excoef::Result<()> {
    match output {
        Some(p) => {
            write_samples(p, batch)?;
            eprintln!("excoef: wrote {} replicates to {}", batch.n, p.display());
            emit(&batch_summary(batch), None)
        }
        None => {
            let mut out = batch.labels.join(",");
            out.push('\n');
            for row in batch.rows() {
                let cells: Vec<String> = row.iter().map(|v| format_g17(*v)).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
            print!("{out}");
            Ok(())
        }
    }
}

fn run(command: Command, cap: usize) -> excoef::Result<Outcome> {
    match command {
        Command::Validate { ecf } => {
            let theta = read_ecf(&ecf, cap)?;
            let report = validate_ecf(&theta);
            emit(&serde_json::to_value(&report).expect("serializable"), None)?;
            Ok(if report.valid {
                Outcome::Pass
            } else {
                Outcome::Fail
            })
        }
        Command::Tau { ecf, output } => {
            let tau = build_tau(&read_ecf(&ecf, cap)?)?;
            emit(&tau_to_json(&tau), output.as_deref())?;
            Ok(Outcome::Pass)
        }
        Command::Theta { tau, set, output } => {
            let tau = read_tau(&tau, cap)?;
            match set {
                Some(a) => {
                    let v = recover_theta(&tau, a)?;
                    match output {
                        Some(p) => write_file(&p, &format!("{}\n", format_g17(v)))?,
                        None => println!("{}", format_g17(v)),
                    }
                }
                None => emit(&ecf_to_json(&theta_table(&tau)), output.as_deref())?,
            }
            Ok(Outcome::Pass)
        }
        Command::Simulate {
            ecf,
            tau,
            n,
            seed,
            output,
        } => {
            let tau: TauTable = match (ecf, tau) {
                (Some(e), None) => build_tau(&read_ecf(&e, cap)?)?,
                (None, Some(t)) => read_tau(&t, cap)?,
                _ => {
                    return Err(Error::InvalidArgument(
                        "give either an extremal coefficient file or --tau".into(),
                    ))
                }
            };
            write_batch(&simulate(&tau, n, seed)?, output.as_deref())?;
            Ok(Outcome::Pass)
        }
        Command::Estimate {
            samples,
            set,
            chi,
            threshold,
        } => {
            let batch = read_samples(&samples)?;
            let mut out = serde_json::Map::new();
            out.insert("n".into(), json!(batch.n));
            if let Some(a) = set {
                let e = estimate_theta(&batch, a)?;
                out.insert(
                    "theta".into(),
                    json!({"set": a, "estimate": e}),
                );
            }
            if let Some(pair) = chi {
                let (s, t) = (pair[0], pair[1]);
                let x = marginal_quantile(&batch, t, threshold)?;
                let e = estimate_chi(&batch, s, t, x)?;
                out.insert(
                    "chi".into(),
                    json!({"s": s, "t": t, "quantile": threshold, "threshold": x, "estimate": e}),
                );
            }
            if set.is_none() && out.get("chi").is_none() {
                return Err(Error::InvalidArgument("nothing to estimate: pass --set or --chi".into()));
            }
            emit(&Value::Object(out), None)?;
            Ok(Outcome::Pass)
        }
        Command::Depset {
            ecf,
            vertices: with_vertices,
            check_face,
            support,
        } => {
            let theta = read_ecf(&ecf, cap)?;
            let poly = build_polytope(&theta)?;
            let mut out = serde_json::Map::new();
            out.insert("m".into(), json!(poly.dim()));
            out.insert("halfspaces".into(), json!(poly.halfspaces()));
            if with_vertices {
                out.insert("vertices".into(), json!(vertices(&poly)?.points));
            }
            let mut ok = true;
            if let Some(l) = check_face {
                let touch = face_touch_check(&theta, l)?;
                ok = touch.attained();
                out.insert(
                    "face".into(),
                    json!({"subset": l, "point": touch.point, "value": touch.value,
                           "target": touch.target, "attained": ok}),
                );
            }
            if let Some(x) = support {
                out.insert(
                    "support".into(),
                    json!({"direction": x, "value": support_function(&theta, &x)?}),
                );
            }
            emit(&Value::Object(out), None)?;
            Ok(if ok { Outcome::Pass } else { Outcome::Fail })
        }
        Command::Transform {
            ecf,
            bernstein,
            output,
        } => {
            let g = parse_bernstein(&bernstein)?;
            let out = transform_ecf(&read_ecf(&ecf, cap)?, &g)?;
            emit(&ecf_to_json(&out), output.as_deref())?;
            Ok(Outcome::Pass)
        }
        Command::CheckTriangle {
            ecf,
            bernstein,
            samples,
            seed,
        } => {
            let g = match bernstein {
                Some(text) => parse_bernstein(&text)?,
                None => BernsteinSpec::identity(),
            };
            let theta = read_ecf(&ecf, cap)?;
            let sets = triangle_check_theta(&theta, &g, TripleSampling { samples, seed })?;
            let validation = validate_ecf(&theta);
            let points = if validation.valid {
                Some(triangle_check_eta(&build_tau(&theta)?, &g)?)
            } else {
                None
            };
            let ok = sets.valid && points.as_ref().is_none_or(|r| r.valid);
            emit(
                &json!({"bernstein": g, "sets": sets, "eta": points, "input_valid": validation.valid}),
                None,
            )?;
            Ok(if ok { Outcome::Pass } else { Outcome::Fail })
        }
        Command::Storm {
            shape,
            window,
            n,
            seed,
            output,
        } => {
            let (model, cells) = storm_setup(&shape, &window)?;
            let tau = storm_tau_with_cap(&model, &cells, cap)?;
            write_batch(&simulate(&tau, n, seed)?, output.as_deref())?;
            Ok(Outcome::Pass)
        }
        Command::StormChi { shape, lag } => {
            let file = read_shape(&shape)?;
            let grid = GridSpec::new(vec![1; file.d], file.spacing)?;
            let model = StormModel::new(file.cells, grid)?;
            println!("{}", format_g17(storm_chi(&model, &lag)?));
            Ok(Outcome::Pass)
        }
        Command::Report { ecf, n, seed } => {
            let theta = read_ecf(&ecf, cap)?;
            let (doc, valid) = report::build(&theta, n, seed)?;
            emit(&doc, None)?;
            Ok(if valid { Outcome::Pass } else { Outcome::Fail })
        }
    }
}

/// Storm model on the smallest grid box holding the window.
fn storm_setup(shape: &Path, window: &str) -> excoef::Result<(StormModel, Vec<Vec<i64>>)> {
    let file = read_shape(shape)?;
    let cells = parse_window(window)?;
    if cells[0].len() != file.d {
        return Err(Error::InvalidArgument(format!(
            "window has dimension {}, shape has {}",
            cells[0].len(),
            file.d
        )));
    }
    let mut extent = vec![1usize; file.d];
    for c in &cells {
        for (k, x) in c.iter().enumerate() {
            if *x < 0 {
                return Err(Error::InvalidArgument(format!(
                    "window coordinates must be nonnegative, got {x}"
                )));
            }
            extent[k] = extent[k].max(*x as usize + 1);
        }
    }
    let model = StormModel::new(file.cells, GridSpec::new(extent, file.spacing)?)?;
    Ok((model, cells))
}
