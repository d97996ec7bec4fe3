//! Subcommand definitions and their implementations.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use dcf_core::{
    block_average, diagnostics, rejection_table, MCPlan, MultiplierBootstrap, TestConfig,
};

use crate::error::CliError;
use crate::io::{load_sample, read_matrix, write_matrix, write_text, CsvSampleFile};
use crate::report::{ResultDocument, SimulationMetadata, FORMAT_VERSION};
use crate::svg::power_curve;

#[derive(Debug, Parser)]
#[command(name = "dcf", version, about = "Two-sample test for high-dimensional means")]
pub struct Cli {
    /// Worker threads (default: available parallelism)
    #[arg(long, global = true, env = "DCF_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the test on two CSV samples
    Test(TestArgs),
    /// Run a Monte Carlo plan and write the rejection table
    Simulate(SimulateArgs),
    /// Bootstrap power over a grid of mean differences
    Power(PowerArgs),
    /// Block-average a gridded CSV matrix
    Pool(PoolArgs),
    /// Print moment diagnostics for two samples
    Check(CheckArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// First sample, one observation per row
    #[arg(long)]
    pub x: PathBuf,
    /// Second sample
    #[arg(long)]
    pub y: PathBuf,
    /// Input files start with a header row
    #[arg(long)]
    pub header: bool,
    /// Field delimiter
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
}

#[derive(Debug, Args)]
pub struct BootArgs {
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Bootstrap replicates N
    #[arg(long, default_value_t = 10_000)]
    pub boot: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub boot: BootArgs,
    /// Write the result document here
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub plan: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PowerArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub boot: BootArgs,
    /// CSV file of mean-difference vectors (one per row), or a scalar grid
    /// `a,b,c` / `start:stop:count` applied to the leading coordinates
    #[arg(long)]
    pub delta: String,
    /// Fraction of coordinates carrying a scalar grid value
    #[arg(long, default_value_t = 1.0)]
    pub sparsity: f64,
    /// Replicates for the power approximation (default: same as --boot)
    #[arg(long)]
    pub boot_star: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub star_seed: u64,
    /// CSV output (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PoolArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub rows: usize,
    #[arg(long)]
    pub cols: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub header: bool,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub input: InputArgs,
}

impl InputArgs {
    fn file(&self, path: &Path) -> Result<CsvSampleFile, CliError> {
        if !self.delimiter.is_ascii() {
            return Err(CliError::usage("--delimiter", "must be a single ASCII character"));
        }
        Ok(CsvSampleFile::new(path)
            .with_header(self.header)
            .with_delimiter(self.delimiter as u8))
    }

    fn load(&self) -> Result<(dcf_core::Sample64, dcf_core::Sample64), CliError> {
        Ok((load_sample(&self.file(&self.x)?)?, load_sample(&self.file(&self.y)?)?))
    }
}

impl BootArgs {
    fn config(&self) -> Result<TestConfig, CliError> {
        let config = TestConfig {
            alpha: self.alpha,
            n_boot: self.boot,
            seed: self.seed,
        };
        config.validate().map_err(|e| match e {
            dcf_core::DcfError::InvalidAlpha(_) => CliError::usage("--alpha", e.to_string()),
            _ => CliError::usage("--boot", e.to_string()),
        })?;
        Ok(config)
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Test(args) => run_test(args, out),
        Command::Simulate(args) => run_simulate(args, cli.threads, out),
        Command::Power(args) => run_power(args, out),
        Command::Pool(args) => run_pool(args, out),
        Command::Check(args) => run_check(args, out),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(|source| CliError::Io {
        path: "<stdout>".into(),
        source,
    })
}

fn to_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|source| CliError::Json {
            path: path.display().to_string(),
            source,
        })
}

fn run_test(args: TestArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = args.boot.config()?;
    let (x, y) = args.input.load()?;
    let start = Instant::now();
    let boot = MultiplierBootstrap::new(&x, &y)?;
    let (result, _) = boot.run(&config)?;
    let diag = diagnostics(&x, &y)?;
    let doc = ResultDocument::new(
        &result,
        &config,
        (x.n(), y.n(), x.p()),
        diag,
        start.elapsed().as_secs_f64(),
    );
    emit(out, &doc.summary())?;
    if let Some(path) = &args.json {
        write_text(path, &to_json(&doc, path)?)?;
    }
    Ok(())
}

/// Rows of the simulation table, without the header.
pub fn table_csv(rows: &[dcf_core::CellResult]) -> String {
    let mut s = String::from("delta,beta,rejection_rate,mc_stderr,mean_power_star,wall_time\n");
    for r in rows {
        let star = r.mean_power_star.map_or(String::new(), |v| v.to_string());
        s.push_str(&format!(
            "{},{},{},{},{},{:.3}\n",
            r.delta, r.beta, r.rejection_rate, r.mc_stderr, star, r.wall_time
        ));
    }
    s
}

fn run_simulate(args: SimulateArgs, threads: Option<usize>, out: &mut dyn Write) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.plan).map_err(|source| CliError::Io {
        path: args.plan.display().to_string(),
        source,
    })?;
    let plan: MCPlan = serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: args.plan.display().to_string(),
        source,
    })?;
    plan.validate()?;

    let start = Instant::now();
    let rows = rejection_table::<f64>(&plan)?;
    let wall = start.elapsed().as_secs_f64();
    write_text(&args.out, &table_csv(&rows))?;

    let meta = SimulationMetadata {
        format_version: FORMAT_VERSION.into(),
        software_version: env!("CARGO_PKG_VERSION").into(),
        scale_reduced: plan.setting.is_scale_reduced(),
        fast_transform: plan.setting.fast_transform,
        replace_all_innovations: plan.setting.replace_all_innovations,
        threads: threads.unwrap_or_else(rayon::current_num_threads),
        wall_time_secs: wall,
        plan,
    };
    let meta_path = sidecar_path(&args.out);
    write_text(&meta_path, &to_json(&meta, &meta_path)?)?;
    if meta.scale_reduced {
        emit(out, "note: sizes differ from the full-scale study (scale_reduced = true)\n")?;
    }
    emit(out, &format!("wrote {} cells to {}\n", rows.len(), args.out.display()))
}

/// `table.csv` -> `table.meta.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("meta.json")
}

/// Parses `a,b,c` or `start:stop:count`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = |msg: String| CliError::usage("--delta", msg);
    if let Some((range, count)) = spec.rsplit_once(':') {
        let (lo, hi) = range
            .split_once(':')
            .ok_or_else(|| bad(format!("expected start:stop:count, got {spec:?}")))?;
        let lo: f64 = lo.trim().parse().map_err(|_| bad(format!("bad start {lo:?}")))?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad(format!("bad stop {hi:?}")))?;
        let count: usize = count.trim().parse().map_err(|_| bad(format!("bad count {count:?}")))?;
        if count == 0 || !lo.is_finite() || !hi.is_finite() {
            return Err(bad("count must be positive and bounds finite".into()));
        }
        if count == 1 {
            return Ok(vec![lo]);
        }
        return Ok((0..count)
            .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
            .collect());
    }
    spec.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(format!("not a number: {t:?}")))
        })
        .collect()
}

fn run_power(args: PowerArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = args.boot.config()?;
    if !(0.0..=1.0).contains(&args.sparsity) {
        return Err(CliError::usage("--sparsity", "must lie in [0, 1]"));
    }
    let n_star = args.boot_star.unwrap_or(config.n_boot);
    if n_star == 0 {
        return Err(CliError::usage("--boot-star", "must be positive"));
    }
    let (x, y) = args.input.load()?;
    let p = x.p();

    // (label, vector) per grid point; the label is the scalar or the sup-norm
    let grid: Vec<(f64, Vec<f64>)> = if Path::new(&args.delta).is_file() {
        let m = read_matrix(&CsvSampleFile::new(&args.delta))?;
        if m.cols() != p {
            return Err(dcf_core::DcfError::DimensionMismatch {
                expected: p,
                found: m.cols(),
            }
            .into());
        }
        (0..m.rows())
            .map(|i| {
                let v = m.row(i).to_vec();
                (v.iter().fold(0.0f64, |a, b| a.max(b.abs())), v)
            })
            .collect()
    } else {
        let support = ((args.sparsity * p as f64 + 1e-9).floor() as usize).min(p);
        parse_grid(&args.delta)?
            .into_iter()
            .map(|d| {
                let mut v = vec![0.0; p];
                v[..support].fill(d);
                (d, v)
            })
            .collect()
    };

    let boot = MultiplierBootstrap::new(&x, &y)?;
    let c = boot.draws(&config)?.critical_value(config.alpha);
    let mut csv = String::from("delta,power_star\n");
    let mut points = Vec::with_capacity(grid.len());
    for (label, delta) in &grid {
        let power = boot.power_star(c, delta, n_star, args.star_seed)?;
        csv.push_str(&format!("{label},{power}\n"));
        points.push((*label, power));
    }
    match &args.out {
        Some(path) => write_text(path, &csv)?,
        None => emit(out, &csv)?,
    }
    if let Some(path) = &args.svg {
        let title = format!("Bootstrap power (alpha = {}, critical value {:.4})", config.alpha, c);
        write_text(path, &power_curve(&points, &title, "signal delta", "power"))?;
    }
    Ok(())
}

fn run_pool(args: PoolArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if args.rows == 0 {
        return Err(CliError::usage("--rows", "must be positive"));
    }
    if args.cols == 0 {
        return Err(CliError::usage("--cols", "must be positive"));
    }
    let m = read_matrix(&CsvSampleFile::new(&args.input).with_header(args.header))?;
    let pooled = block_average(&m, args.rows, args.cols)?;
    write_matrix(&args.out, &pooled)?;
    emit(
        out,
        &format!(
            "{}x{} -> {}x{} (flattened length {})\n",
            m.rows(),
            m.cols(),
            pooled.rows(),
            pooled.cols(),
            pooled.rows() * pooled.cols()
        ),
    )
}

fn run_check(args: CheckArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (x, y) = args.input.load()?;
    let d = diagnostics(&x, &y)?;
    emit(
        out,
        &format!(
            "n={} m={} p={}\n\
             min combined variance     {:.6}\n\
             max avg |centered|^3      {:.6}\n\
             max avg centered^4        {:.6}\n\
             moment bound proxy B      {:.6}\n\
             (sample-mean proxies for population moment conditions)\n",
            x.n(),
            y.n(),
            x.p(),
            d.min_combined_variance,
            d.max_avg_abs_moment_3,
            d.max_avg_moment_4,
            d.moment_bound()
        ),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        assert_eq!(parse_grid("0,0.5, 1").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_grid("0:1:5").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_grid("2:3:1").unwrap(), vec![2.0]);
        assert!(matches!(parse_grid("a,b"), Err(CliError::Usage { .. })));
        assert!(parse_grid("0:1:0").is_err());
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(sidecar_path(Path::new("out/t.csv")), PathBuf::from("out/t.meta.json"));
    }
}
