use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sortidx::datagen::{generate, parse_file_name, DatasetSpec, Family};
use sortidx::harness::{
    check_cap, parse_model_kind, parse_techniques, run_workload, sweep, BenchConfig, TechniqueParams, Variant,
    VerifyStatus, DEFAULT_REPS,
};
use sortidx::render::{render, Format};
use sortidx::verify::{verify, Outcome};
use sortidx::{read_file, write_file};
use sortidx_core::{KeyWidth, SortedDataset};

const EXIT_VERIFY: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(
    name = "sortidx",
    version,
    about = "Sorted-array search structures: data generation, benchmarking and verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset file.
    Generate(GenerateArgs),
    /// Time lookups for each technique and report latency, size and probes.
    Bench(BenchArgs),
    /// Check bound containment and results for every key, without timing.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// uden, uspr, logn or norm.
    #[arg(long)]
    family: Family,
    #[arg(long)]
    n: usize,
    /// Key width in bits, 32 or 64.
    #[arg(long, default_value_t = 64, value_parser = parse_width)]
    width: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Lognormal/normal location (default 0).
    #[arg(long)]
    mu: Option<f64>,
    /// Lognormal/normal scale (default: 2 for logn at 64 bits, else 1).
    #[arg(long)]
    sigma: Option<f64>,
    /// Output file, or a directory to place `<family>_<width>_<n>_<seed>.bin` in.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct IndexArgs {
    /// Comma-separated techniques: BS, IS, TIP, RBS, RS, RMI, B-tree, or all.
    #[arg(long, default_value = "all")]
    techniques: String,
    /// Radix bits for RBS and RS; a list sweeps RBS.
    #[arg(long = "r", value_delimiter = ',')]
    r: Vec<u32>,
    /// RS error bound in slots; a list sweeps RS.
    #[arg(long, value_delimiter = ',')]
    epsilon: Vec<usize>,
    /// RMI leaf count; a list sweeps RMI.
    #[arg(long, value_delimiter = ',')]
    branching: Vec<usize>,
    /// RMI root model: linear, spline or log.
    #[arg(long, default_value = "linear")]
    root_model: String,
    /// RMI leaf model: linear, spline or log.
    #[arg(long, default_value = "linear")]
    leaf_model: String,
    /// B-tree node capacity.
    #[arg(long)]
    fanout: Option<usize>,
    /// B-tree indexes every stride-th record.
    #[arg(long)]
    stride: Option<usize>,
}

impl IndexArgs {
    fn variants(&self) -> Result<Vec<Variant>, String> {
        let techniques = parse_techniques(&self.techniques).map_err(|e| e.to_string())?;
        let mut base = TechniqueParams {
            rmi_root: parse_model_kind(&self.root_model).map_err(|e| e.to_string())?,
            rmi_leaf: parse_model_kind(&self.leaf_model).map_err(|e| e.to_string())?,
            ..TechniqueParams::default()
        };
        if let Some(f) = self.fanout {
            base.fanout = f;
        }
        if let Some(s) = self.stride {
            base.btree_stride = s;
        }
        Ok(sweep(&techniques, base, &self.r, &self.epsilon, &self.branching))
    }
}

#[derive(Args)]
struct BenchArgs {
    /// Dataset file; repeat for several datasets.
    #[arg(long, required = true)]
    data: Vec<PathBuf>,
    #[command(flatten)]
    index: IndexArgs,
    /// Lookups per repetition.
    #[arg(long, default_value_t = 100_000)]
    lookups: usize,
    /// Workload seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_REPS)]
    reps: usize,
    /// table, csv or json.
    #[arg(long, default_value = "table")]
    format: Format,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Corrupt one TID after the workload is drawn.
    #[arg(long, hide = true)]
    inject_tid_fault: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, required = true)]
    data: Vec<PathBuf>,
    #[command(flatten)]
    index: IndexArgs,
}

fn parse_width(s: &str) -> Result<u32, String> {
    let bits: u32 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    KeyWidth::from_bits(bits).map(KeyWidth::bits).ok_or_else(|| "width must be 32 or 64".to_owned())
}

fn config_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_CONFIG)
}

fn dataset_label(path: &Path) -> String {
    let name = path.to_string_lossy();
    parse_file_name(&name).map_or_else(
        || path.file_stem().map_or_else(|| name.to_string(), |s| s.to_string_lossy().into_owned()),
        |spec| spec.label(),
    )
}

fn load(path: &Path) -> Result<SortedDataset, ExitCode> {
    read_file(path).map_err(|e| config_error(format!("{}: {e}", path.display())))
}

fn cmd_generate(args: GenerateArgs) -> ExitCode {
    let width = KeyWidth::from_bits(args.width).expect("validated by parser");
    let mut spec = DatasetSpec::new(args.family, args.n, width, args.seed);
    if let Some(mu) = args.mu {
        spec.mu = mu;
    }
    if let Some(sigma) = args.sigma {
        spec.sigma = sigma;
    }
    let path = if args.out.is_dir() { args.out.join(spec.file_name()) } else { args.out };
    let data = match generate(&spec) {
        Ok(d) => d,
        Err(e) => return config_error(e),
    };
    match write_file(&data, &path) {
        Ok(()) => {
            eprintln!("wrote {} keys to {}", data.len(), path.display());
            ExitCode::SUCCESS
        }
        Err(e) => config_error(e),
    }
}

fn cmd_bench(args: BenchArgs) -> ExitCode {
    let variants = match args.index.variants() {
        Ok(v) => v,
        Err(e) => return config_error(e),
    };
    let config = BenchConfig { variants, lookups: args.lookups, seed: args.seed, reps: args.reps };
    if let Err(e) = config.validate() {
        return config_error(e);
    }
    let mut report = sortidx::Report::default();
    for path in &args.data {
        let mut data = match load(path) {
            Ok(d) => d,
            Err(code) => return code,
        };
        if let Err(e) = check_cap(&data) {
            return config_error(format!("{}: {e}", path.display()));
        }
        let workload = match sortidx::generate_workload(&data, config.lookups, config.seed) {
            Ok(w) => w,
            Err(e) => return config_error(format!("{}: {e}", path.display())),
        };
        if args.inject_tid_fault {
            let pos = workload.queries[0].lower_bound;
            let tid = data.records()[pos].tid;
            data.set_tid(pos, tid ^ 1);
        }
        let label = dataset_label(path);
        report.append(run_workload(&label, &data, &workload, &config, &mut sortidx::counters::NoCounters));
    }
    for msg in &report.messages {
        eprintln!("{msg}");
    }

    let color = args.out.is_none() && std::io::stdout().is_terminal();
    let text = render(&report, args.format, color);
    let written = match &args.out {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        return config_error(e);
    }

    if report.rows.iter().any(|r| r.verify == VerifyStatus::Fail) {
        ExitCode::from(EXIT_VERIFY)
    } else if report.rows.iter().any(|r| r.verify == VerifyStatus::Error) {
        ExitCode::from(EXIT_CONFIG)
    } else {
        ExitCode::SUCCESS
    }
}

fn cmd_verify(args: VerifyArgs) -> ExitCode {
    let variants = match args.index.variants() {
        Ok(v) => v,
        Err(e) => return config_error(e),
    };
    let (mut failed, mut build_error) = (false, false);
    for path in &args.data {
        let data = match load(path) {
            Ok(d) => d,
            Err(code) => return code,
        };
        let label = dataset_label(path);
        for result in verify(&data, &variants) {
            println!("{label}/{result}");
            match result.outcome {
                Outcome::Pass { .. } => {}
                Outcome::Fail { .. } => failed = true,
                Outcome::BuildError(_) => build_error = true,
            }
        }
    }
    if failed {
        ExitCode::from(EXIT_VERIFY)
    } else if build_error {
        ExitCode::from(EXIT_CONFIG)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Verify(args) => cmd_verify(args),
    }
}
