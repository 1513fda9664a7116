//! The `vgan` command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use vgan_core::augment::GroupMode;
use vgan_core::config::GlobalConfig;
use vgan_core::model::TargetKind;

use crate::io::tables::{
    parse_features_csv, parse_group_manifest, write_features_csv, write_folds_csv, write_group_manifest,
    write_loss_csv, write_loss_curve_csv, write_predictions_csv, write_report_json,
};
use crate::io::{deserialize_detector, deserialize_model, serialize_detector, serialize_model};
use crate::pipeline::{self, read_text, write_text, Dataset};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "vgan", version, about = "Vowel graph attention dysarthria severity regression")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides train.seed; also seeds synthesis and grouping.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for per-file and per-fold work.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Per-observation features CSV written by `extract`.
    #[arg(long)]
    features: PathBuf,
    /// Group manifest JSON written by `augment`.
    #[arg(long)]
    groups: PathBuf,
}

#[derive(Debug, Args, Default)]
struct TrainArgs {
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    k_folds: Option<usize>,
    #[arg(long)]
    validation_fraction: Option<f64>,
    /// Drop the lip branch.
    #[arg(long)]
    audio_only: bool,
    /// Balance training groups across severity bands in every fold.
    #[arg(long)]
    balance: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render a synthetic corpus with manifest.
    Synth {
        #[arg(long, default_value_t = 50)]
        subjects: usize,
        #[arg(long)]
        out: PathBuf,
        /// Lip severity drawn independently of acoustic severity.
        #[arg(long)]
        independent_lips: bool,
    },
    /// Manifest to per-observation feature CSV.
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Vowel detector used for recordings without a vowel tier.
        #[arg(long)]
        detector: Option<PathBuf>,
    },
    /// Detect vowel segments and write one TextGrid per recording.
    Segment {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Trained detector; trained from the manifest's vowel tiers when absent.
        #[arg(long)]
        detector: Option<PathBuf>,
        #[arg(long)]
        save_detector: Option<PathBuf>,
    },
    /// Build vowel groups from extracted features.
    Augment {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_parser = parse_mode)]
        mode: Option<GroupMode>,
        /// Groups per subject in random mode.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        balance: bool,
        #[arg(long, value_parser = parse_target)]
        target: Option<TargetKind>,
    },
    /// Train one model on all groups.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
        /// Per-epoch training loss CSV.
        #[arg(long)]
        loss_out: Option<PathBuf>,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Cross-validate, or score a trained model with --model.
    Eval {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Score groups with a trained model.
    Predict {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        model: PathBuf,
        /// CSV output; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write acoustic, visual and fused embeddings per group.
    ExportEmbeddings {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_mode(s: &str) -> std::result::Result<GroupMode, String> {
    match s {
        "zip" => Ok(GroupMode::Zip),
        "random" => Ok(GroupMode::Random),
        _ => Err(format!("unknown mode '{s}' (zip, random)")),
    }
}

fn parse_target(s: &str) -> std::result::Result<TargetKind, String> {
    TargetKind::parse(s).ok_or_else(|| format!("unknown target '{s}'"))
}

fn apply_train(cfg: &mut GlobalConfig, t: &TrainArgs) -> Result<()> {
    if let Some(v) = t.epochs {
        cfg.train.epochs = v;
    }
    if let Some(v) = t.batch_size {
        cfg.train.batch_size = v;
    }
    if let Some(v) = t.lr {
        cfg.train.learning_rate = v;
    }
    if let Some(v) = t.k_folds {
        cfg.train.k_folds = v;
    }
    if let Some(v) = t.validation_fraction {
        cfg.train.validation_fraction = v;
    }
    if t.audio_only {
        cfg.vgan.audio_only = true;
    }
    if t.balance {
        cfg.train.balance = true;
    }
    cfg.validate()?;
    Ok(())
}

fn load_examples(cfg: &mut GlobalConfig, data: &DataArgs) -> Result<Vec<vgan_core::train::GroupExample>> {
    let features = parse_features_csv(&read_text(&data.features)?)?;
    let groups = parse_group_manifest(&read_text(&data.groups)?)?;
    cfg.train.target = groups.target;
    pipeline::group_examples(&features, &groups)
}

fn load_model(path: &Path) -> Result<vgan_core::nn::VganModel> {
    deserialize_model(&read_text(path)?).map_err(|e| match e {
        Error::Load(m) => Error::Load(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn execute(cli: Cli) -> Result<()> {
    let mut cfg = pipeline::load_config(cli.config.as_deref())?;
    if let Some(s) = cli.seed {
        cfg.train.seed = s;
    }
    let seed = cfg.train.seed;
    let jobs = cli.jobs.max(1);
    match cli.command {
        Command::Synth {
            subjects,
            out,
            independent_lips,
        } => {
            if independent_lips {
                cfg.synth.independent_lip_severity = true;
            }
            pipeline::synth_corpus(&out, subjects, seed, &cfg, jobs)?;
        }
        Command::Extract { manifest, out, detector } => {
            let ds = Dataset::load(&manifest)?;
            let det = match detector {
                Some(p) => Some(deserialize_detector(&read_text(&p)?)?),
                None => None,
            };
            let features = pipeline::extract_features(&ds, &cfg, det.as_ref(), jobs)?;
            write_text(&out, &write_features_csv(&features)?)?;
        }
        Command::Segment {
            manifest,
            out,
            detector,
            save_detector,
        } => {
            let ds = Dataset::load(&manifest)?;
            let det = match detector {
                Some(p) => deserialize_detector(&read_text(&p)?)?,
                None => pipeline::train_vowel_detector(&ds, &cfg, seed)?,
            };
            if let Some(p) = save_detector {
                write_text(&p, &serialize_detector(&det))?;
            }
            pipeline::segment_dataset(&ds, &cfg, &det, &out, jobs)?;
        }
        Command::Augment {
            manifest,
            features,
            out,
            mode,
            n,
            balance,
            target,
        } => {
            if let Some(m) = mode {
                cfg.augment.mode = m;
            }
            if let Some(n) = n {
                cfg.augment.n_per_subject = n;
            }
            if balance {
                cfg.augment.balance = true;
            }
            if let Some(t) = target {
                cfg.train.target = t;
            }
            cfg.validate()?;
            let ds = Dataset::load(&manifest)?;
            let feats = parse_features_csv(&read_text(&features)?)?;
            let groups = pipeline::build_group_manifest(&feats, &ds, &cfg, seed)?;
            write_text(&out, &write_group_manifest(&groups))?;
        }
        Command::Train {
            data,
            out,
            loss_out,
            train,
        } => {
            apply_train(&mut cfg, &train)?;
            let examples = load_examples(&mut cfg, &data)?;
            let (model, history) = pipeline::train_model(&examples, &cfg)?;
            write_text(&out, &serialize_model(&model))?;
            if let Some(p) = loss_out {
                write_text(&p, &write_loss_curve_csv(&history.train_loss)?)?;
            }
        }
        Command::Eval {
            data,
            out,
            model,
            train,
        } => {
            apply_train(&mut cfg, &train)?;
            let examples = load_examples(&mut cfg, &data)?;
            let report = match model {
                Some(p) => {
                    let m = load_model(&p)?;
                    pipeline::check_model_against(&m, &cfg.vgan)?;
                    pipeline::evaluate_model(&m, &examples)?
                }
                None => {
                    let r = pipeline::cross_validate(&examples, &cfg, jobs)?;
                    write_text(&out.join("folds.csv"), &write_folds_csv(&r)?)?;
                    write_text(&out.join("loss.csv"), &write_loss_csv(&r)?)?;
                    r
                }
            };
            write_text(&out.join("report.json"), &write_report_json(&report))?;
            write_text(&out.join("predictions.csv"), &write_predictions_csv(&report.groups)?)?;
        }
        Command::Predict { data, model, out } => {
            let examples = load_examples(&mut cfg, &data)?;
            let m = load_model(&model)?;
            let preds = vgan_core::train::predict_groups(&m, &examples)?;
            let csv = write_predictions_csv(&preds)?;
            match out {
                Some(p) => write_text(&p, &csv)?,
                None => print!("{csv}"),
            }
        }
        Command::ExportEmbeddings { data, model, out } => {
            let examples = load_examples(&mut cfg, &data)?;
            let m = load_model(&model)?;
            pipeline::write_embeddings(&out, &pipeline::embeddings(&m, &examples)?)?;
        }
    }
    Ok(())
}

/// One-line diagnostic: `vgan: error[<kind>] exit=<code>: <message>`.
pub fn diagnostic(e: &Error) -> String {
    let msg = e.to_string().replace(['\n', '\r'], " ");
    format!("vgan: error[{}] exit={}: {msg}", e.kind(), e.exit_code())
}

/// Runs the command line and returns the process exit code: 0 success,
/// 1 usage, 2 data or validation, 3 numeric failure.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", diagnostic(&e));
            e.exit_code()
        }
    }
}
