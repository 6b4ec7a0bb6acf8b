//! Command-line front end: iterate the exponent grid, print tables and derived
//! constants, and run the exact counting oracle.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use smooth_cubes::derived::{derive_all, emit_table, table_csv, table_moments, DerivedError};
use smooth_cubes::engine::{run_to_convergence, EngineError, IterationConfig, Mode};
use smooth_cubes::format::sig17;
use smooth_cubes::grid::{ExponentGrid, GridError, Step};
use smooth_cubes::oracle::{
    hybrid_count, mean_value_even, sample_series, slope_fit, MeanValueSample, Moment, OracleError,
    RPolicy, SmoothParams,
};
use smooth_cubes::reference::{parse_reference_csv, ReferenceError, REFERENCE_TABLE_CSV};

const GRID_FILE: &str = "grid.csv";
const LOG_FILE: &str = "sweeps.log";

#[derive(Parser, Debug)]
#[command(
    name = "smooth-cubes",
    version,
    about = "Exponents for smooth cubic Weyl sums"
)]
struct Cli {
    /// Directory for artifacts; later commands read the grid written here.
    #[arg(long, global = true, default_value = "out", env = "SMOOTH_CUBES_OUT")]
    out: PathBuf,
    /// Omit the `# generated=` header line so repeated runs are byte-identical.
    #[arg(long, global = true, env = "SMOOTH_CUBES_NO_TIMESTAMP")]
    no_timestamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Iterate the grid to convergence and write grid.csv and sweeps.log.
    Iterate(IterateArgs),
    /// Print exponents at s = 4.0, 4.1, …, 7.9 and write table.csv.
    Table,
    /// Print the exponents at one moment.
    Query {
        #[arg(long, env = "SMOOTH_CUBES_S", value_parser = parse_real)]
        s: f64,
    },
    /// Print derived constants as JSON and write derived.json.
    Derive,
    /// Count solutions exactly and write oracle.csv.
    Oracle(OracleArgs),
    /// Fit the growth exponent of a series of exact counts.
    Slope(SlopeArgs),
    /// Compare the computed table against a reference CSV.
    Compare {
        /// Reference `s,delta,Delta` CSV; defaults to the bundled table.
        #[arg(long = "ref", env = "SMOOTH_CUBES_REF")]
        reference: Option<PathBuf>,
        #[arg(long, default_value = "1e-6", env = "SMOOTH_CUBES_TOL", value_parser = parse_real)]
        tol: f64,
    },
}

#[derive(Args, Debug)]
struct IterateArgs {
    /// Grid step; 1/h must be a whole number.
    #[arg(long, env = "SMOOTH_CUBES_H", value_parser = parse_real)]
    h: Option<f64>,
    #[arg(long, env = "SMOOTH_CUBES_TAU", value_parser = parse_real)]
    tau: Option<f64>,
    #[arg(long, value_enum, env = "SMOOTH_CUBES_MODE")]
    mode: Option<ModeArg>,
    #[arg(long, env = "SMOOTH_CUBES_MAX_SWEEPS", value_parser = parse_whole)]
    max_sweeps: Option<u64>,
    #[arg(long, env = "SMOOTH_CUBES_EPS", value_parser = parse_real)]
    eps: Option<f64>,
    /// Full mode: scan every γ instead of the smallest feasible one.
    #[arg(long, env = "SMOOTH_CUBES_GAMMA_SCAN")]
    gamma_scan: bool,
    /// Allow full mode with steps finer than 1e-4.
    #[arg(long, env = "SMOOTH_CUBES_ALLOW_FINE_FULL")]
    allow_fine_full: bool,
    /// key=value file with iteration settings; flags override it.
    #[arg(long, env = "SMOOTH_CUBES_CONFIG")]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[arg(long = "P", env = "SMOOTH_CUBES_P", value_parser = parse_whole)]
    p: u64,
    #[arg(long = "R", env = "SMOOTH_CUBES_R", value_parser = parse_whole)]
    r: u64,
    /// Number of cubes per side (1 to 4), or `hybrid`.
    #[arg(long, default_value = "2", env = "SMOOTH_CUBES_K", value_parser = parse_moment)]
    k: Moment,
}

#[derive(Args, Debug)]
struct SlopeArgs {
    /// Comma-separated list of P values.
    #[arg(long = "P", env = "SMOOTH_CUBES_P", value_delimiter = ',', value_parser = parse_whole, required = true)]
    p: Vec<u64>,
    /// Smoothness bound for the fixed policy.
    #[arg(long = "R", env = "SMOOTH_CUBES_R", value_parser = parse_whole)]
    r: Option<u64>,
    #[arg(long, default_value = "2", env = "SMOOTH_CUBES_K", value_parser = parse_moment)]
    k: Moment,
    #[arg(
        long,
        value_enum,
        default_value = "r-eq-p",
        env = "SMOOTH_CUBES_POLICY"
    )]
    policy: PolicyArg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Full,
    Dominant,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PolicyArg {
    #[value(name = "r-eq-p")]
    REqP,
    Fixed,
    Sqrt,
}

fn parse_real(text: &str) -> Result<f64, String> {
    let x: f64 = text
        .trim()
        .parse()
        .map_err(|_| format!("not a number: {text:?}"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("not finite: {text:?}"))
    }
}

/// Whole numbers, also in scientific notation such as `1e4`.
fn parse_whole(text: &str) -> Result<u64, String> {
    if let Ok(n) = text.trim().parse::<u64>() {
        return Ok(n);
    }
    let x = parse_real(text)?;
    if x >= 0.0 && x.fract() == 0.0 && x < u64::MAX as f64 {
        Ok(x as u64)
    } else {
        Err(format!("not a whole number: {text:?}"))
    }
}

fn parse_moment(text: &str) -> Result<Moment, String> {
    if text.trim() == "hybrid" {
        return Ok(Moment::Hybrid);
    }
    let k = parse_whole(text)?;
    u32::try_from(k)
        .map(|k| Moment::Even { k })
        .map_err(|_| format!("k too large: {text}"))
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Derived(#[from] DerivedError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Reference(#[from] ReferenceError),
    #[error("comparison failed: max deviation {deviation:e} exceeds tolerance {tol:e}")]
    Mismatch { deviation: f64, tol: f64 },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Engine(EngineError::InvalidConfig(_)) => 2,
            CliError::Grid(
                GridError::StepNotReciprocal { .. } | GridError::StepTooCoarse { .. },
            ) => 2,
            CliError::Oracle(
                OracleError::InvalidParams { .. } | OracleError::InvalidMoment { .. },
            ) => 2,
            CliError::Engine(EngineError::CostGate { .. })
            | CliError::Oracle(OracleError::CostGate { .. } | OracleError::SieveTooLarge { .. }) => {
                3
            }
            CliError::Engine(EngineError::NotConverged { .. })
            | CliError::Derived(DerivedError::NotConverged { .. }) => 4,
            CliError::Mismatch { .. } => 5,
            _ => 1,
        }
    }
}

struct Context {
    out: PathBuf,
    stamp: Option<String>,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| CliError::Io { path, source }
        };
        fs::create_dir_all(&self.out).map_err(io(&self.out))?;
        let path = self.path(name);
        fs::write(&path, contents).map_err(io(&path))?;
        Ok(path)
    }

    fn header(&self) -> String {
        self.stamp
            .as_ref()
            .map(|s| format!("# generated={s}\n"))
            .unwrap_or_default()
    }

    fn load_grid(&self) -> Result<ExponentGrid, CliError> {
        let path = self.path(GRID_FILE);
        let text = fs::read_to_string(&path).map_err(|source| CliError::Io { path, source })?;
        Ok(ExponentGrid::from_csv(&text)?)
    }
}

fn iteration_config(args: &IterateArgs) -> Result<IterationConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            let mut text = text;
            // flags may supply the step the file leaves out
            if let Some(h) = args.h {
                text.push_str(&format!("\nstep_h={h}\n"));
            }
            if args.allow_fine_full {
                text.push_str("\nallow_fine_full=true\n");
            }
            if let Some(ModeArg::Dominant) = args.mode {
                text.push_str("\nmode=dominant\n");
            }
            IterationConfig::from_key_values(&text)?
        }
        None => {
            let h = args.h.ok_or_else(|| {
                CliError::Usage("iterate needs --h (or step_h in --config)".into())
            })?;
            IterationConfig::new(Step::from_h(h)?, Mode::Dominant)
        }
    };
    if let Some(mode) = args.mode {
        config.mode = match mode {
            ModeArg::Full => Mode::Full,
            ModeArg::Dominant => Mode::Dominant,
        };
    }
    if let Some(tau) = args.tau {
        config.inflation_tau = tau;
    }
    if let Some(n) = args.max_sweeps {
        config.max_sweeps = n;
    }
    if let Some(eps) = args.eps {
        config.convergence_eps = eps;
    }
    config.gamma_scan |= args.gamma_scan;
    config.allow_fine_full |= args.allow_fine_full;
    config.validate()?;
    Ok(config)
}

fn iterate(ctx: &Context, args: &IterateArgs) -> Result<(), CliError> {
    let config = iteration_config(args)?;
    let run = run_to_convergence(&config)?;
    ctx.write(GRID_FILE, &run.grid.to_csv(ctx.stamp.as_deref()))?;
    ctx.write(LOG_FILE, &format!("{}{}", ctx.header(), run.sweep_log()))?;
    let status = if run.converged() {
        "converged"
    } else {
        "not converged"
    };
    println!(
        "{status} after {} sweeps (h = {}, mode = {}); grid written to {}",
        run.reports.len(),
        config.step.h(),
        config.mode,
        ctx.path(GRID_FILE).display()
    );
    run.into_converged()?;
    Ok(())
}

fn table(ctx: &Context) -> Result<(), CliError> {
    let grid = ctx.load_grid()?;
    for row in emit_table(&grid, &table_moments())? {
        println!("{row}");
    }
    ctx.write(
        "table.csv",
        &format!("{}{}", ctx.header(), table_csv(&grid, &table_moments())?),
    )?;
    Ok(())
}

fn query(ctx: &Context, s: f64) -> Result<(), CliError> {
    let grid = ctx.load_grid()?;
    let delta = grid.query_delta(s)?;
    println!("s = {s}");
    println!("delta = {}", sig17(delta));
    if (4.0..=8.0).contains(&s) {
        println!("Delta = {}", sig17(grid.to_triple(s)?.admissible));
    }
    Ok(())
}

fn derive(ctx: &Context) -> Result<(), CliError> {
    let report = derive_all(&ctx.load_grid()?)?;
    let json = report.to_json();
    println!("{json}");
    ctx.write("derived.json", &format!("{json}\n"))?;
    Ok(())
}

fn count(params: SmoothParams, moment: Moment) -> Result<MeanValueSample, OracleError> {
    match moment {
        Moment::Even { k } => mean_value_even(params, k),
        Moment::Hybrid => hybrid_count(params),
    }
}

fn samples_csv(ctx: &Context, samples: &[MeanValueSample]) -> String {
    let mut out = ctx.header();
    out.push_str(MeanValueSample::CSV_HEADER);
    out.push('\n');
    for sample in samples {
        out.push_str(&sample.csv_row());
        out.push('\n');
    }
    out
}

fn oracle(ctx: &Context, args: &OracleArgs) -> Result<(), CliError> {
    let sample = count(SmoothParams::new(args.p, args.r)?, args.k)?;
    println!("{}", sample.count);
    ctx.write("oracle.csv", &samples_csv(ctx, &[sample]))?;
    Ok(())
}

fn slope(ctx: &Context, args: &SlopeArgs) -> Result<(), CliError> {
    let policy = match args.policy {
        PolicyArg::REqP => RPolicy::EqualP,
        PolicyArg::Sqrt => RPolicy::Sqrt,
        PolicyArg::Fixed => RPolicy::Fixed(
            args.r
                .ok_or_else(|| CliError::Usage("--policy fixed needs --R".into()))?,
        ),
    };
    let samples = sample_series(args.k, policy, &args.p)?;
    let fitted = slope_fit(&samples)?;
    println!("slope = {fitted:.6} (k = {}, policy = {policy})", args.k);
    ctx.write("slope.csv", &samples_csv(ctx, &samples))?;
    Ok(())
}

fn compare(ctx: &Context, reference: Option<&Path>, tol: f64) -> Result<(), CliError> {
    if tol.is_nan() || tol < 0.0 {
        return Err(CliError::Usage(format!("--tol must be >= 0, got {tol}")));
    }
    let text = match reference {
        Some(path) => fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?,
        None => REFERENCE_TABLE_CSV.to_string(),
    };
    let rows = parse_reference_csv(&text)?;
    let grid = ctx.load_grid()?;
    let moments: Vec<f64> = rows.iter().map(|r| r.s).collect();
    let computed = emit_table(&grid, &moments)?;
    let mut worst = (0.0f64, 0.0f64);
    for (row, line) in rows.iter().zip(&computed) {
        let fields: Vec<f64> = line
            .split(" | ")
            .skip(1)
            .map(|f| f.parse().expect("table field"))
            .collect();
        let deviation = (fields[0] - row.associated)
            .abs()
            .max((fields[1] - row.admissible).abs());
        if deviation > worst.0 {
            worst = (deviation, row.s);
        }
    }
    println!(
        "compared {} rows: max abs deviation {:e} at s = {} (tolerance {tol:e})",
        rows.len(),
        worst.0,
        worst.1
    );
    if worst.0 > tol {
        return Err(CliError::Mismatch {
            deviation: worst.0,
            tol,
        });
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let stamp = (!cli.no_timestamp).then(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
            .to_string()
    });
    let ctx = Context {
        out: cli.out,
        stamp,
    };
    match &cli.command {
        Command::Iterate(args) => iterate(&ctx, args),
        Command::Table => table(&ctx),
        Command::Query { s } => query(&ctx, *s),
        Command::Derive => derive(&ctx),
        Command::Oracle(args) => oracle(&ctx, args),
        Command::Slope(args) => slope(&ctx, args),
        Command::Compare { reference, tol } => compare(&ctx, reference.as_deref(), *tol),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
