use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use lgcf::config::{parse_activation, parse_cutoffs, parse_mode, RunConfig};
use lgcf::{report, runner};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "lgcf", about = "Hyperbolic graph collaborative filtering", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train embeddings and write a checkpoint, loss curve, and manifest
    Train(CommonArgs),
    /// Evaluate a checkpoint against the held-out split
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        /// Trained checkpoint to score
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Train and evaluate across several dimensionalities
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated dimensionalities, e.g. 4,8,16,32
        #[arg(long, default_value = "4,8,16,32")]
        dims: String,
    },
    /// Paired hyperbolic-vs-tangent comparison from a shared initialization
    Ablate(CommonArgs),
}

/// Flags shared by every verb. Anything left unset falls back to the
/// config file, then to the built-in defaults.
#[derive(Args)]
struct CommonArgs {
    /// key=value config file applied before flag overrides
    #[arg(long)]
    config: Option<PathBuf>,
    /// Interaction file with one `user item` pair per line
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output directory for run artifacts
    #[arg(long)]
    out: Option<PathBuf>,
    /// Spatial embedding dimensionality d
    #[arg(long)]
    dim: Option<usize>,
    /// Number of convolution layers L
    #[arg(long)]
    layers: Option<usize>,
    /// Learning rate
    #[arg(long)]
    lr: Option<f64>,
    /// Weight decay toward the origin
    #[arg(long)]
    weight_decay: Option<f64>,
    /// Ranking margin
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Convolution mode: hyperbolic | tangent
    #[arg(long)]
    mode: Option<String>,
    /// Layer activation: none | relu
    #[arg(long)]
    activation: Option<String>,
    /// Comma-separated ranking cutoffs, e.g. 10,20
    #[arg(long)]
    k: Option<String>,
    /// Initialization scale sigma
    #[arg(long)]
    init_sigma: Option<f64>,
    /// Per-user held-out fraction
    #[arg(long)]
    test_fraction: Option<f64>,
}

impl CommonArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.load_file(path)?;
        }
        if let Some(v) = &self.data {
            cfg.data = v.clone();
        }
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        if let Some(v) = self.dim {
            cfg.dim = v;
        }
        if let Some(v) = self.layers {
            cfg.layers = v;
        }
        if let Some(v) = self.lr {
            cfg.lr = v;
        }
        if let Some(v) = self.weight_decay {
            cfg.weight_decay = v;
        }
        if let Some(v) = self.margin {
            cfg.margin = v;
        }
        if let Some(v) = self.epochs {
            cfg.epochs = v;
        }
        if let Some(v) = self.batch_size {
            cfg.batch_size = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.mode {
            cfg.mode = parse_mode(v)?;
        }
        if let Some(v) = &self.activation {
            cfg.activation = parse_activation(v)?;
        }
        if let Some(v) = &self.k {
            cfg.cutoffs = parse_cutoffs(v)?;
        }
        if let Some(v) = self.init_sigma {
            cfg.init_sigma = v;
        }
        if let Some(v) = self.test_fraction {
            cfg.test_fraction = v;
        }
        if cfg.data.as_os_str().is_empty() {
            anyhow::bail!("no data file given (use --data or a config file)");
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(common) => {
            let cfg = common.resolve()?;
            let artifacts = runner::run_train(&cfg)?;
            let last = artifacts.loss_history.last().copied().unwrap_or(f64::NAN);
            println!("trained {} epochs, final loss {last:.6}", cfg.epochs);
            println!("checkpoint: {}", artifacts.checkpoint_path.display());
            println!("loss curve: {}", artifacts.loss_csv_path.display());
            println!("manifest:   {}", artifacts.manifest_path.display());
        }
        Command::Eval { common, checkpoint } => {
            let cfg = common.resolve()?;
            let (report, machine) = runner::run_eval(&cfg, &checkpoint)?;
            print!("{machine}");
            eprintln!("{}", report::human_table(&report));
        }
        Command::Sweep { common, dims } => {
            let cfg = common.resolve()?;
            let dims: Vec<usize> = dims
                .split(',')
                .map(|t| t.trim().parse::<usize>())
                .collect::<Result<_, _>>()
                .map_err(|_| anyhow::anyhow!("bad --dims list `{dims}`"))?;
            let (csv_path, rows) = runner::run_sweep(&cfg, &dims)?;
            for (dim, report) in &rows {
                println!("dim {dim}:");
                print!("{}", report::machine_lines(report));
            }
            println!("sweep csv: {}", csv_path.display());
        }
        Command::Ablate(common) => {
            let cfg = common.resolve()?;
            let outcome = runner::run_ablate(&cfg)?;
            print!("{}", outcome.text);
            println!("report: {}", outcome.report_path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
