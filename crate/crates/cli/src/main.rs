use std::path::PathBuf;
use std::process;

use clap::{Args, Parser, Subcommand};
use har_cli::commands::{self, TrainOptions, DEFAULT_CLASSES, DEFAULT_ENCODING};
use har_cli::error::EXIT_CODES_HELP;
use har_cli::synth::{parse_phases, SynthSpec};
use har_cli::{CliError, ExitCode};
use har_core::features::WindowSpec;
use har_core::sensor::WakeupSpec;
use har_core::tree::{Encoding, TreeParams};

#[derive(Parser)]
#[command(name = "har", version, about = "On-sensor locomotion recognition toolchain", after_help = EXIT_CODES_HELP)]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Seed for synthetic data
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Output path (file, or directory for `replay`)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Ordered class list
    #[arg(long, global = true, default_value = DEFAULT_CLASSES)]
    classes: String,

    /// Class to register-value map
    #[arg(long, global = true, default_value = DEFAULT_ENCODING)]
    encoding: String,
}

#[derive(Args, Clone)]
struct TrainFlags {
    /// Maximum tree depth
    #[arg(long, default_value_t = 4)]
    max_depth: usize,

    /// Minimum samples per leaf
    #[arg(long, default_value_t = 2)]
    min_leaf: usize,

    /// Features kept by recursive feature elimination
    #[arg(long, default_value_t = 15)]
    features: usize,

    /// Classifier output data rate, Hz
    #[arg(long, default_value_t = 240.0)]
    odr_hz: f64,

    /// Window length, samples
    #[arg(long, default_value_t = 240)]
    window: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled synthetic recording
    Synth {
        /// Protocol as class:seconds pairs
        #[arg(long, default_value = "walk:16,stairsUp:16,stance:11")]
        segments: String,

        /// Sampling rate, Hz
        #[arg(long, default_value_t = 240.0)]
        rate_hz: f64,
    },
    /// Train a tree on a labeled recording and write the MLC config
    Train {
        csv: PathBuf,

        #[command(flatten)]
        flags: TrainFlags,

        /// Also write the metrics report here
        #[arg(long)]
        report: Option<PathBuf>,

        /// Also write the window feature vectors here
        #[arg(long)]
        features_out: Option<PathBuf>,
    },
    /// Rank features (ANOVA) and run recursive feature elimination
    Select {
        csv: PathBuf,

        #[command(flatten)]
        flags: TrainFlags,
    },
    /// Validate an MLC config and rewrite it canonically
    Compile {
        config: PathBuf,

        /// Replace the config's encoding with --encoding
        #[arg(long)]
        reencode: bool,
    },
    /// Replay a recording through the virtual sensor and host
    Replay {
        csv: PathBuf,
        config: PathBuf,

        /// Wakeup threshold on |ACC_V - 1 g|
        #[arg(long, default_value_t = 0.10)]
        wakeup_g: f64,
    },
    /// Confusion matrix, accuracy and kappa for per-window predictions
    Eval {
        /// CSV with a `predicted` column (e.g. replay's windows.csv)
        predictions: PathBuf,

        /// CSV with a `label` or `truth` column; defaults to the predictions file's `truth`
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Downsampled channel CSV (plus decision trace) for plotting
    Plotdata {
        csv: PathBuf,

        /// Config whose decisions are added as a column
        #[arg(long)]
        config: Option<PathBuf>,

        /// Output rate, Hz (must divide the recording rate)
        #[arg(long, default_value_t = 60.0)]
        rate_hz: f64,
    },
}

impl TrainFlags {
    fn options(&self, classes: Vec<String>, encoding: Encoding) -> Result<TrainOptions, CliError> {
        Ok(TrainOptions {
            classes,
            encoding,
            params: TreeParams {
                max_depth: self.max_depth,
                min_leaf: self.min_leaf,
            },
            features: self.features,
            window: WindowSpec::new(self.odr_hz, self.window)?,
        })
    }
}

fn require_out(out: &Option<PathBuf>) -> Result<&PathBuf, CliError> {
    out.as_ref()
        .ok_or_else(|| har_core::Error::Validation("--out is required for this command".into()).into())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let classes = commands::parse_classes(&cli.common.classes)?;
    let encoding: Encoding = cli.common.encoding.parse()?;
    let out = &cli.common.out;
    match cli.command {
        Command::Synth { segments, rate_hz } => {
            let spec = SynthSpec {
                rate_hz,
                seed: cli.common.seed,
                phases: parse_phases(&segments)?,
                ..SynthSpec::default()
            };
            let rec = commands::cmd_synth(&spec, &classes, require_out(out)?)?;
            println!("wrote {} frames at {} Hz", rec.len(), rec.rate_hz());
        }
        Command::Train {
            csv,
            flags,
            report,
            features_out,
        } => {
            let opts = flags.options(classes, encoding)?;
            let outcome = commands::cmd_train(&csv, &opts, require_out(out)?, report.as_deref(), features_out.as_deref())?;
            print!("{}", outcome.report());
        }
        Command::Select { csv, flags } => {
            let opts = flags.options(classes, encoding)?;
            let sel = commands::cmd_select(&csv, &opts, out.as_deref())?;
            print!("{}", sel.to_csv());
        }
        Command::Compile { config, reencode } => {
            let cfg = commands::cmd_compile(&config, reencode.then_some(&encoding), require_out(out)?)?;
            println!("config ok: {} features, {} nodes", cfg.feature_specs.len(), cfg.tree.size());
        }
        Command::Replay { csv, config, wakeup_g } => {
            let wakeup = WakeupSpec::new(wakeup_g)?;
            let res = commands::cmd_replay(&csv, &config, &classes, wakeup, require_out(out)?)?;
            print!("{}", res.timeline.to_csv());
            println!(
                "windows {} events {} host reads {} faults {}",
                res.windows.len(),
                res.events.len(),
                res.host_reads,
                res.faults.len()
            );
        }
        Command::Eval { predictions, labels } => {
            let ev = commands::cmd_eval(&predictions, labels.as_deref(), &classes)?;
            let report = ev.report();
            if let Some(p) = out {
                har_cli::output::write_atomic(p, &report)?;
            }
            print!("{report}");
        }
        Command::Plotdata { csv, config, rate_hz } => {
            let n = commands::cmd_plotdata(&csv, &classes, config.as_deref(), rate_hz, require_out(out)?)?;
            println!("wrote {n} rows");
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        let code = e.exit_code();
        debug_assert_ne!(code, ExitCode::Usage);
        process::exit(code as i32);
    }
}
