use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand};
use ginnacer::bench::{self, BenchConfig, BenchPlan, Variant};
use ginnacer::{
    load_abstraction, load_baseline, load_network, random_network, save_abstraction, save_baseline, save_network,
    BuildOptions, GinnacerAbstraction, IntervalVector, MergeBaseline, NegInput,
};
use tracing_subscriber::EnvFilter;

/// Slack used when checking a concrete forward pass against computed bounds.
const CONTAINMENT_SLACK: f64 = 1e-7;

#[derive(Parser)]
#[command(
    name = "ginnacer",
    version,
    about = "Center-exact interval abstractions of ReLU networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an abstraction around a centroid.
    Abstract(AbstractArgs),
    /// Evaluate an abstraction or a baseline at a concrete input.
    Eval(EvalArgs),
    /// Build a merge baseline with group counts matched to an abstraction.
    Baseline(BaselineArgs),
    /// Measure worst-case margins on hypercube surfaces.
    Bench(BenchArgs),
    /// Write samples of the rational test polynomial as CSV.
    GenPoly(GenPolyArgs),
    /// Write a random network with Gaussian weights.
    RandomNet(RandomNetArgs),
}

#[derive(Args)]
struct AbstractArgs {
    #[arg(long)]
    network: PathBuf,
    /// JSON array with the centroid.
    #[arg(long)]
    centroid: PathBuf,
    #[arg(long, default_value = "auto")]
    neg_input: NegInput,
    #[arg(long, default_value_t = 0)]
    skip_layers: usize,
    /// JSON array with a known lower bound of the input domain.
    #[arg(long)]
    input_min: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
#[group(id = "model", required = true, multiple = false)]
struct EvalModel {
    #[arg(long, group = "model")]
    abstraction: Option<PathBuf>,
    #[arg(long, group = "model")]
    baseline: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    model: EvalModel,
    /// JSON array with the input point.
    #[arg(long)]
    input: PathBuf,
    /// Also check that the network's output lies inside the bounds.
    #[arg(long)]
    network: Option<PathBuf>,
}

#[derive(Args)]
struct BaselineArgs {
    #[arg(long)]
    network: PathBuf,
    /// Abstraction whose per-layer group counts are copied.
    #[arg(long = "match")]
    match_abstraction: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    centroid: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.1,1,10")]
    deltas: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "ginnacer,baseline,ibp")]
    variants: Vec<Variant>,
    /// Skip values as `A..B` (inclusive) or a comma-separated list.
    #[arg(long, default_value = "0")]
    skip_sweep: String,
    #[arg(long, default_value = "auto")]
    neg_input: NegInput,
    /// Fill the build_ms and eval_us_median columns.
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenPolyArgs {
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RandomNetArgs {
    /// Layer widths including input and output, e.g. `1,64,64,1`.
    #[arg(long, value_delimiter = ',', required = true)]
    dims: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v: Vec<f64> =
        serde_json::from_str(&text).with_context(|| format!("parsing {} as a JSON array", path.display()))?;
    Ok(v)
}

fn parse_skip_sweep(s: &str) -> Result<Vec<usize>> {
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a
            .trim()
            .parse()
            .with_context(|| format!("bad skip sweep start in {s:?}"))?;
        let b: usize = b
            .trim()
            .parse()
            .with_context(|| format!("bad skip sweep end in {s:?}"))?;
        ensure!(a <= b, "empty skip sweep {s:?}");
        return Ok((a..=b).collect());
    }
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .with_context(|| format!("bad skip value {p:?}"))
        })
        .collect()
}

fn run_abstract(args: AbstractArgs) -> Result<()> {
    let net = load_network(&args.network)?;
    let centroid = read_vector(&args.centroid)?;
    let input_lower_bound = args.input_min.as_deref().map(read_vector).transpose()?;
    let opts = BuildOptions {
        neg_input: args.neg_input,
        skip_layers: args.skip_layers,
        input_lower_bound,
    };
    let abs = GinnacerAbstraction::build(&net, &centroid, &opts)?;
    let stats = abs.relu_stats();
    for (k, l) in stats.layers.iter().enumerate() {
        tracing::info!(
            layer = k + 1,
            original = l.original,
            abstracted = l.abstracted,
            "{:.1}% of ReLUs remaining",
            l.percent_remaining()
        );
    }
    save_abstraction(&abs, &args.out)?;
    println!(
        "{} -> {} ReLUs ({} in the pre-layer)",
        stats.original_total(),
        stats.abstracted_total(),
        stats.pre_layer_relus
    );
    Ok(())
}

fn run_eval(args: EvalArgs) -> Result<()> {
    let x = read_vector(&args.input)?;
    let bounds: IntervalVector = match (&args.model.abstraction, &args.model.baseline) {
        (Some(path), None) => load_abstraction(path)?.eval(&x)?,
        (None, Some(path)) => load_baseline(path)?.eval(&x)?,
        _ => bail!("give exactly one of --abstraction and --baseline"),
    };
    ensure!(
        bounds.lower().iter().chain(bounds.upper()).all(|v| v.is_finite()),
        "bounds are not finite"
    );
    if let Some(path) = &args.network {
        let y = load_network(path)?.forward(&x)?;
        ensure!(
            bounds.contains(&y, CONTAINMENT_SLACK),
            "network output {y:?} lies outside the computed bounds"
        );
    }
    let doc = serde_json::json!({ "lower": bounds.lower(), "upper": bounds.upper() });
    println!("{doc}");
    Ok(())
}

fn run_baseline(args: BaselineArgs) -> Result<()> {
    let net = load_network(&args.network)?;
    let abs = load_abstraction(&args.match_abstraction)?;
    let bl = MergeBaseline::matched_to(&net, &abs, args.seed)?;
    save_baseline(&bl, &args.out)?;
    println!("{} groups, {} ReLUs", bl.groups_total(), bl.relus_total());
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn run_bench(args: BenchArgs) -> Result<()> {
    let net = load_network(&args.network)?;
    let config = BenchConfig {
        centroid: read_vector(&args.centroid)?,
        deltas: args.deltas,
        samples_per_delta: args.samples,
        seed: args.seed,
        timing: args.timing,
    };
    let plan = BenchPlan {
        variants: args.variants,
        skip_sweep: parse_skip_sweep(&args.skip_sweep)?,
        neg_input: args.neg_input,
    };
    let rows = bench::run_benchmark(&net, &config, &plan)?;
    let mut out = create(&args.out)?;
    bench::write_csv(&rows, &mut out)?;
    out.flush()?;
    println!("{} rows written to {}", rows.len(), args.out.display());
    Ok(())
}

fn run_gen_poly(args: GenPolyArgs) -> Result<()> {
    let mut out = create(&args.out)?;
    bench::write_polynomial_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

fn run_random_net(args: RandomNetArgs) -> Result<()> {
    let net = random_network(&args.dims, args.seed)?;
    save_network(&net, &args.out)?;
    Ok(())
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(io::stderr)
        .init();
    match Cli::parse().command {
        Command::Abstract(args) => run_abstract(args),
        Command::Eval(args) => run_eval(args),
        Command::Baseline(args) => run_baseline(args),
        Command::Bench(args) => run_bench(args),
        Command::GenPoly(args) => run_gen_poly(args),
        Command::RandomNet(args) => run_random_net(args),
    }
}
