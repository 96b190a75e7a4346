mod wordfile;

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ffreduce::bounds::{asymptote_table, ball_domination, write_asymptote_csv, write_ball_csv};
use ffreduce::cayley::{bfs_histogram, DistanceHistogram, DEFAULT_STATE_CAP};
use ffreduce::elemword::{canonicalize, is_canonical};
use ffreduce::reduce::{
    default_stripe_width, gauss_jordan, invert_via_word, striped_eliminate, verify_reduction,
};
use ffreduce::{FieldSpec, Matrix, ReductionResult};

#[derive(Parser)]
#[command(
    name = "ffreduce",
    version,
    about = "Row-operation complexity of matrix reduction over finite fields"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone, Copy)]
struct FieldArgs {
    /// Field characteristic.
    #[arg(long)]
    p: u32,
    /// Extension degree.
    #[arg(long, default_value_t = 1)]
    m: u32,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Gj,
    Striped,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Reduce a matrix to the identity and report the operation count.
    Reduce {
        #[arg(long, value_enum)]
        algo: Algo,
        #[arg(long = "in")]
        input: PathBuf,
        /// Stripe width for the striped algorithm.
        #[arg(long)]
        width: Option<usize>,
        /// Write the reduction word to this file.
        #[arg(long)]
        emit_word: Option<PathBuf>,
        /// Write the inverse matrix to this file.
        #[arg(long)]
        emit_inverse: Option<PathBuf>,
    },
    /// Compare both algorithms on seeded random invertible matrices.
    Bench {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        width: Option<usize>,
        /// Fill the wall_time column (makes output machine-dependent).
        #[arg(long)]
        timing: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact distance histogram of the Cayley graph of GL(n, q).
    Bfs {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, env = "FFREDUCE_STATE_CAP", default_value_t = DEFAULT_STATE_CAP)]
        state_cap: u64,
    },
    /// Threshold and cost table, optionally checked against a histogram.
    Bounds {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        alpha: f64,
        /// Histogram JSON from `bfs`.
        #[arg(long)]
        hist: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rewrite a word file into canonical form.
    Canon {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a uniformly random invertible matrix.
    Sample {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Invalid configuration detected after parsing; exits with status 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn field(args: FieldArgs) -> Result<Arc<FieldSpec>> {
    FieldSpec::new(args.p, args.m)
        .map(Arc::new)
        .map_err(|e| usage(e.to_string()))
}

fn validate_n(ns: &[usize]) -> Result<()> {
    if let Some(bad) = ns.iter().find(|&&n| n == 0) {
        return Err(usage(format!(
            "matrix dimension must be positive, got {bad}"
        )));
    }
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => io::stdout()
            .write_all(text.as_bytes())
            .context("writing stdout"),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn run_algo(a: &Matrix, algo: Algo, width: Option<usize>) -> Result<ReductionResult> {
    Ok(match algo {
        Algo::Gj => gauss_jordan(a)?,
        Algo::Striped => {
            let w = width.unwrap_or_else(|| default_stripe_width(a.n(), a.field().order()));
            striped_eliminate(a, w)?
        }
    })
}

fn cmd_reduce(
    algo: Algo,
    input: &Path,
    width: Option<usize>,
    emit_word: Option<&Path>,
    emit_inverse: Option<&Path>,
) -> Result<ExitCode> {
    if width == Some(0) {
        return Err(usage("--width must be positive"));
    }
    let a =
        Matrix::from_text(&read(input)?).with_context(|| format!("parsing {}", input.display()))?;
    let result = run_algo(&a, algo, width)?;
    let check = verify_reduction(&a, &result);

    let mut report = format!("algorithm: {}\n", result.algorithm);
    if let Some(w) = result.stripe_width {
        let _ = writeln!(report, "stripe_width: {w}");
    }
    let _ = writeln!(report, "op_count: {}", result.op_count);
    let _ = writeln!(
        report,
        "verified: {}",
        if check.passed { "yes" } else { "no" }
    );
    if let Some(k) = check.first_divergence {
        let _ = writeln!(report, "first_divergence: {k}");
    }
    print!("{report}");
    if !check.passed {
        return Ok(ExitCode::FAILURE);
    }

    if let Some(path) = emit_word {
        emit(Some(path), &wordfile::render(&result.word, a.field()))?;
    }
    if let Some(path) = emit_inverse {
        let inv = invert_via_word(&a, &result)?;
        emit(Some(path), &inv.to_text())?;
        println!("inverse_check: yes");
    }
    Ok(ExitCode::SUCCESS)
}

const BENCH_COLUMNS: [&str; 9] = [
    "n",
    "q",
    "algo",
    "stripe_width",
    "mean_ops",
    "max_ops",
    "n_squared",
    "n_squared_over_log_q_n",
    "wall_time",
];

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    ns: &[usize],
    f: Arc<FieldSpec>,
    trials: usize,
    seed: u64,
    width: Option<usize>,
    timing: bool,
    out: Option<&Path>,
) -> Result<ExitCode> {
    validate_n(ns)?;
    if let Some(w) = width {
        if let Some(&n) = ns.iter().find(|&&n| w == 0 || w > n) {
            return Err(usage(format!("--width {w} out of range [1, {n}]")));
        }
    }
    let q = f.order();
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(BENCH_COLUMNS)?;
    if trials > 0 {
        for &n in ns {
            let mut rng =
                ChaCha8Rng::seed_from_u64(seed ^ (n as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let mats = (0..trials)
                .map(|_| Matrix::random_invertible_with(n, f.clone(), &mut rng))
                .collect::<ffreduce::Result<Vec<_>>>()?;
            let nf = n as f64;
            let n2 = nf * nf;
            let n2_log = n2 * (q as f64).ln() / nf.ln();
            for algo in [Algo::Gj, Algo::Striped] {
                let start = Instant::now();
                let (mut sum, mut max, mut sw) = (0u64, 0u64, None);
                for a in &mats {
                    let r = run_algo(a, algo, width)?;
                    if !verify_reduction(a, &r).passed {
                        bail!("{} reduction failed verification at n={n}", r.algorithm);
                    }
                    sum += r.op_count;
                    max = max.max(r.op_count);
                    sw = r.stripe_width;
                }
                let elapsed = start.elapsed().as_secs_f64();
                w.write_record(&[
                    n.to_string(),
                    q.to_string(),
                    match algo {
                        Algo::Gj => "gj".into(),
                        Algo::Striped => "striped".into(),
                    },
                    sw.map_or("NA".into(), |s| s.to_string()),
                    format!("{:.3}", sum as f64 / trials as f64),
                    max.to_string(),
                    format!("{n2}"),
                    format!("{n2_log:.6}"),
                    if timing {
                        format!("{elapsed:.6}")
                    } else {
                        "NA".into()
                    },
                ])?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
    emit(out, std::str::from_utf8(&bytes)?)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_bfs(n: usize, f: Arc<FieldSpec>, state_cap: u64, out: Option<&Path>) -> Result<ExitCode> {
    validate_n(&[n])?;
    let table = bfs_histogram(n, f, state_cap)?;
    let mut json = table.histogram.to_json()?;
    json.push('\n');
    emit(out, &json)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_bounds(
    ns: &[usize],
    f: Arc<FieldSpec>,
    alpha: f64,
    hist: Option<&Path>,
    format: Format,
    out: Option<&Path>,
) -> Result<ExitCode> {
    validate_n(ns)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(usage(format!(
            "--alpha must lie strictly between 0 and 1, got {alpha}"
        )));
    }
    let rows = asymptote_table(ns, f.order(), alpha);
    let balls = match hist {
        Some(path) => {
            let h = DistanceHistogram::from_json(&read(path)?)
                .with_context(|| format!("parsing {}", path.display()))?;
            Some(ball_domination(&h))
        }
        None => None,
    };
    let text = match format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_asymptote_csv(&rows, &mut buf)?;
            if let Some(b) = &balls {
                buf.push(b'\n');
                write_ball_csv(b, &mut buf)?;
            }
            String::from_utf8(buf)?
        }
        Format::Json => {
            let mut doc = serde_json::json!({ "asymptote": rows });
            if let Some(b) = &balls {
                doc["ball"] = serde_json::to_value(b)?;
            }
            serde_json::to_string_pretty(&doc)? + "\n"
        }
    };
    emit(out, &text)?;
    let holds = balls.iter().flatten().all(|b| b.holds);
    if !holds {
        eprintln!("ball size exceeds the counting bound");
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_canon(input: &Path, out: Option<&Path>) -> Result<ExitCode> {
    let wf =
        wordfile::parse(&read(input)?).with_context(|| format!("parsing {}", input.display()))?;
    let cw = canonicalize(&wf.word, &wf.field);
    let canonical = cw.to_word();
    let before = wf.word.product(wf.field.clone())?;
    let after = canonical.product(wf.field.clone())?;
    let equal = before == after && is_canonical(&cw);

    emit(out, &wordfile::render(&canonical, &wf.field))?;
    let line = format!(
        "products equal: {}, length {} -> {}, blocks {:?}",
        if equal { "yes" } else { "no" },
        wf.word.len(),
        canonical.len(),
        cw.block_lengths()
    );
    if out.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
    Ok(if equal {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn cmd_sample(n: usize, f: Arc<FieldSpec>, seed: u64, out: Option<&Path>) -> Result<ExitCode> {
    validate_n(&[n])?;
    let a = Matrix::random_invertible(n, f, seed)?;
    emit(out, &a.to_text())?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Reduce {
            algo,
            input,
            width,
            emit_word,
            emit_inverse,
        } => cmd_reduce(
            algo,
            &input,
            width,
            emit_word.as_deref(),
            emit_inverse.as_deref(),
        ),
        Command::Bench {
            n,
            field: fa,
            trials,
            seed,
            width,
            timing,
            out,
        } => cmd_bench(&n, field(fa)?, trials, seed, width, timing, out.as_deref()),
        Command::Bfs {
            n,
            field: fa,
            out,
            state_cap,
        } => cmd_bfs(n, field(fa)?, state_cap, out.as_deref()),
        Command::Bounds {
            n,
            field: fa,
            alpha,
            hist,
            format,
            out,
        } => cmd_bounds(
            &n,
            field(fa)?,
            alpha,
            hist.as_deref(),
            format,
            out.as_deref(),
        ),
        Command::Canon { input, out } => cmd_canon(&input, out.as_deref()),
        Command::Sample {
            n,
            field: fa,
            seed,
            out,
        } => cmd_sample(n, field(fa)?, seed, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) if e.is::<Usage>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
