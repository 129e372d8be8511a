//! `hyphc`: per-stage pipeline runner.
//!
//! Stages share a run directory; each writes its artifacts there, records
//! input/output hashes in `manifest.json` and logs the fully resolved
//! configuration to `resolved.cfg`. Exit codes: 0 success, 1 usage error,
//! 2 data error.

mod config;
mod manifest;
mod stages;

use std::fmt;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use hyphc_core::baselines::ReducerMethod;

use config::PipelineConfig;
use stages::Ctx;

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation or configuration; exit 1.
    Usage(String),
    /// The pipeline itself failed on the data; exit 2.
    Data(hyphc_core::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Data(err) => write!(f, "{err}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

#[derive(Parser)]
#[command(name = "hyphc", version, about = "Influencer-interaction features and ball embeddings for user classification")]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory holding all stage artifacts.
    #[arg(long, global = true, default_value = "run")]
    run_dir: PathBuf,

    /// Worker thread cap; 0 keeps the library default. Any value yields
    /// bit-identical artifacts.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Override a single config key, repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labeled corpus into the run directory.
    Synth(SynthArgs),
    /// Validate input files and write canonical copies.
    Ingest(IngestArgs),
    /// Rank accounts by distinct-retweeter count and keep the top p.
    Influencers {
        #[arg(long)]
        p: Option<usize>,
    },
    /// Influencer-selection trade-off curves over ranks 1..max_p.
    Curves {
        #[arg(long)]
        max_p: Option<usize>,
    },
    /// Build the interaction and user-level feature matrices.
    Features,
    /// Embed users in the ball from the standardized interaction matrix.
    Embed(EmbedArgs),
    /// Run comparison reducers over the standardized interaction matrix.
    Reduce {
        #[arg(long, value_enum, default_value_t = MethodArg::All)]
        method: MethodArg,
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Score one separation on one feature set.
    Classify {
        #[arg(long)]
        separation: String,
        #[arg(long)]
        feature_set: String,
    },
    /// The full score matrix plus per-reducer centroid reports.
    Evaluate,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Pca,
    Se,
    Fa,
    All,
}

impl MethodArg {
    fn methods(self) -> Vec<ReducerMethod> {
        match self {
            MethodArg::Pca => vec![ReducerMethod::Pca],
            MethodArg::Se => vec![ReducerMethod::Se],
            MethodArg::Fa => vec![ReducerMethod::Fa],
            MethodArg::All => vec![ReducerMethod::Pca, ReducerMethod::Se, ReducerMethod::Fa],
        }
    }
}

/// Every generator knob as a flag; unset flags keep the config value.
#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    horizon_seconds: Option<i64>,
    #[arg(long)]
    n_influencers: Option<usize>,
    #[arg(long)]
    tweets_per_influencer: Option<f64>,
    #[arg(long)]
    n_regular: Option<usize>,
    #[arg(long)]
    n_collusive_groups: Option<usize>,
    #[arg(long)]
    group_size: Option<usize>,
    #[arg(long)]
    targets_per_group: Option<usize>,
    #[arg(long)]
    mu_organic: Option<f64>,
    #[arg(long)]
    sigma_organic: Option<f64>,
    #[arg(long)]
    mu_collusive: Option<f64>,
    #[arg(long)]
    sigma_collusive: Option<f64>,
    #[arg(long)]
    p_organic: Option<f64>,
    #[arg(long)]
    p_collusive: Option<f64>,
    #[arg(long)]
    suspended_fraction: Option<f64>,
    #[arg(long)]
    background_rate: Option<f64>,
    #[arg(long)]
    mainstream_influencers: Option<usize>,
    #[arg(long)]
    shared_targets: Option<usize>,
    #[arg(long)]
    activity_sigma: Option<f64>,
    #[arg(long)]
    camp_bias: Option<f64>,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    tweets: Option<PathBuf>,
    #[arg(long)]
    profiles: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    anneal: Option<f64>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    lr_anneal: Option<f64>,
    #[arg(long)]
    rescale: Option<f64>,
}

/// Push set flags into the config; dedicated flags win over `--set`.
fn set_opt<T: ToString>(
    config: &mut PipelineConfig,
    key: &str,
    value: &Option<T>,
) -> Result<(), CliError> {
    if let Some(v) = value {
        config.set(key, &v.to_string())?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }

    let mut config = PipelineConfig::default();
    if let Some(path) = &cli.config {
        config.load_file(path)?;
    }
    config.apply_overrides(&cli.overrides)?;

    match &cli.command {
        Command::Synth(args) => {
            set_opt(&mut config, "synth_seed", &args.seed)?;
            set_opt(&mut config, "synth_horizon_seconds", &args.horizon_seconds)?;
            set_opt(&mut config, "synth_n_influencers", &args.n_influencers)?;
            set_opt(&mut config, "synth_tweets_per_influencer", &args.tweets_per_influencer)?;
            set_opt(&mut config, "synth_n_regular", &args.n_regular)?;
            set_opt(&mut config, "synth_n_collusive_groups", &args.n_collusive_groups)?;
            set_opt(&mut config, "synth_group_size", &args.group_size)?;
            set_opt(&mut config, "synth_targets_per_group", &args.targets_per_group)?;
            set_opt(&mut config, "synth_mu_organic", &args.mu_organic)?;
            set_opt(&mut config, "synth_sigma_organic", &args.sigma_organic)?;
            set_opt(&mut config, "synth_mu_collusive", &args.mu_collusive)?;
            set_opt(&mut config, "synth_sigma_collusive", &args.sigma_collusive)?;
            set_opt(&mut config, "synth_p_organic", &args.p_organic)?;
            set_opt(&mut config, "synth_p_collusive", &args.p_collusive)?;
            set_opt(&mut config, "synth_suspended_fraction", &args.suspended_fraction)?;
            set_opt(&mut config, "synth_background_rate", &args.background_rate)?;
            set_opt(&mut config, "synth_mainstream_influencers", &args.mainstream_influencers)?;
            set_opt(&mut config, "synth_shared_targets", &args.shared_targets)?;
            set_opt(&mut config, "synth_activity_sigma", &args.activity_sigma)?;
            set_opt(&mut config, "synth_camp_bias", &args.camp_bias)?;
        }
        Command::Ingest(args) => {
            set_opt(&mut config, "tweets", &args.tweets.as_ref().map(|p| p.display()))?;
            set_opt(&mut config, "profiles", &args.profiles.as_ref().map(|p| p.display()))?;
            set_opt(&mut config, "labels", &args.labels.as_ref().map(|p| p.display()))?;
        }
        Command::Influencers { p } => set_opt(&mut config, "p", p)?,
        Command::Curves { max_p } => set_opt(&mut config, "max_p", max_p)?,
        Command::Embed(args) => {
            set_opt(&mut config, "dim", &args.dim)?;
            set_opt(&mut config, "embed_seed", &args.seed)?;
            set_opt(&mut config, "epochs", &args.epochs)?;
            set_opt(&mut config, "tau", &args.tau)?;
            set_opt(&mut config, "anneal", &args.anneal)?;
            set_opt(&mut config, "learning_rate", &args.learning_rate)?;
            set_opt(&mut config, "lr_anneal", &args.lr_anneal)?;
            set_opt(&mut config, "rescale", &args.rescale)?;
        }
        Command::Reduce { dim, .. } => set_opt(&mut config, "dim", dim)?,
        Command::Features | Command::Classify { .. } | Command::Evaluate => {}
    }

    std::fs::create_dir_all(&cli.run_dir)
        .map_err(|e| CliError::Usage(format!("cannot create run dir: {e}")))?;
    let ctx = Ctx { config: &config, run_dir: &cli.run_dir };

    match &cli.command {
        Command::Synth(_) => stages::synth(&ctx),
        Command::Ingest(_) => stages::ingest(&ctx),
        Command::Influencers { .. } => stages::influencers(&ctx),
        Command::Curves { .. } => stages::curves(&ctx),
        Command::Features => stages::features(&ctx),
        Command::Embed(_) => stages::embed(&ctx),
        Command::Reduce { method, .. } => stages::reduce_stage(&ctx, &method.methods()),
        Command::Classify { separation, feature_set } => {
            stages::classify(&ctx, separation, feature_set)
        }
        Command::Evaluate => stages::evaluate(&ctx),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    if let Err(err) = run(&cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
