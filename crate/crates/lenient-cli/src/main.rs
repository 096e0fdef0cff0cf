//! Command-line entry point for the lenient parsing workflow: corpus
//! synthesis, data generation, model training, repair/parse/type inference,
//! and evaluation.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use lenient::config::RunConfig;
use lenient::corpus::pairs::{make_blockfix_pairs, make_parser_pairs, make_typer_pairs, TrainPair};
use lenient::corpus::synth::{generate_corpus, TemplateSet};
use lenient::corpus::{fragmentize, ingest, load_index};
use lenient::eval::{bucket_report, mrr, CategoryCounts, EvalItem};
use lenient::jsonl::{read_jsonl, write_jsonl};
use lenient::pipeline::{repair_program, Models, RepairReport};
use lenient::train::{history_csv, train_tagger, train_translation, TrainedModel};
use lenient::trestyper::type_fragment;
use lenient::LenientError;
use minijava::tokenize;
use seqmodel::{load_checkpoint, save_checkpoint, Checkpoint};

#[derive(Parser)]
#[command(
    name = "lenient",
    about = "Lenient parsing, typing and repair of malformed Mini-Java",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// key=value config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed for all randomness.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker fan-out.
    #[arg(long)]
    jobs: Option<usize>,
    /// Hyperparameter profile: desk | paper.
    #[arg(long)]
    profile: Option<String>,
}

impl Common {
    fn run_config(&self) -> Result<RunConfig, LenientError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(jobs) = self.jobs {
            cfg.jobs = jobs;
        }
        if let Some(profile) = &self.profile {
            cfg.profile = profile.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic Mini-Java corpus.
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        files: Option<usize>,
    },
    /// Index a corpus directory (strict-parseable files under the limit).
    Ingest {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        root: PathBuf,
        #[arg(long, default_value = "mj")]
        ext: String,
    },
    /// Emit parser/blockfix/typer training pair files from a corpus.
    GenData {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        root: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "mj")]
        ext: String,
    },
    /// Train the fragment repair/parse model.
    TrainParser {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Train the block-structure repair model.
    TrainBlockfix {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Train the type tagger.
    TrainTyper {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Repair a program: JSON candidate list on stdout.
    Repair {
        #[command(flatten)]
        common: Common,
        #[arg(long = "in")]
        input: PathBuf,
        /// Model directory (default: $LENIENT_MODELS).
        #[arg(long)]
        models: Option<PathBuf>,
        #[arg(long, short)]
        k: Option<usize>,
    },
    /// Leniently parse a fragment to its serialized tree.
    Parse {
        #[command(flatten)]
        common: Common,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        models: Option<PathBuf>,
        /// Dump the block abstraction alongside the parse.
        #[arg(long)]
        dump_abstraction: bool,
    },
    /// Tag a fragment with types.
    Type {
        #[command(flatten)]
        common: Common,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        models: Option<PathBuf>,
        #[arg(long, short, default_value_t = 5)]
        k: usize,
    },
    /// Score predicted repairs against gold token sequences.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render an evaluation report as a per-bucket table.
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn models_dir(flag: &Option<PathBuf>) -> Result<PathBuf, LenientError> {
    if let Some(p) = flag {
        return Ok(p.clone());
    }
    std::env::var_os("LENIENT_MODELS")
        .map(PathBuf::from)
        .ok_or_else(|| LenientError::Config("pass --models or set LENIENT_MODELS".into()))
}

fn load_models(dir: &Path) -> Result<(Option<Checkpoint<f32>>, Checkpoint<f32>), LenientError> {
    let parser = load_checkpoint::<f32>(&dir.join("parser.ckpt"))?;
    let blockfix = load_checkpoint::<f32>(&dir.join("blockfix.ckpt")).ok();
    Ok((blockfix, parser))
}

fn read_tokens(path: &Path) -> Result<Vec<minijava::Token>, LenientError> {
    let source = std::fs::read_to_string(path)?;
    tokenize(&source).map_err(LenientError::Lex)
}

#[derive(Serialize, Deserialize)]
struct PredLine {
    candidates: Vec<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct GoldLine {
    tokens: Vec<String>,
}

fn run(cli: Cli) -> Result<ExitCode, LenientError> {
    match cli.command {
        Command::Synth { common, out, files } => {
            let mut cfg = common.run_config()?;
            if let Some(files) = files {
                cfg.files = files;
            }
            let templates = TemplateSet {
                file_tokens: (cfg.file_tokens_min, cfg.file_tokens_max),
                ..TemplateSet::default()
            };
            std::fs::create_dir_all(&out)?;
            let sources = generate_corpus(&templates, cfg.files, cfg.seed);
            for (i, src) in sources.iter().enumerate() {
                std::fs::write(out.join(format!("file_{i:06}.mj")), src)?;
            }
            std::fs::write(out.join("run_config.txt"), cfg.to_kv())?;
            println!("{}", serde_json::json!({"written": sources.len(), "dir": out}));
            Ok(ExitCode::SUCCESS)
        }
        Command::Ingest { common, root, ext } => {
            let _ = common.run_config()?;
            let index = ingest(&root, &ext)?;
            println!(
                "{}",
                serde_json::json!({
                    "files": index.files.len(),
                    "total_tokens": index.total_tokens,
                    "skipped": index.skipped.iter().map(|(p, r)| {
                        serde_json::json!({"path": p, "reason": r})
                    }).collect::<Vec<_>>(),
                })
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::GenData { common, root, out, ext } => {
            let cfg = common.run_config()?;
            let index = ingest(&root, &ext)?;
            let files = load_index(&index)?;
            let fragments: Vec<_> = files
                .iter()
                .enumerate()
                .flat_map(|(i, f)| fragmentize(f, i, cfg.seed))
                .collect();
            let parser_pairs = make_parser_pairs(&fragments, &cfg.corruption(), cfg.seed);
            write_jsonl(&out.join("parser_pairs.jsonl"), &cfg, parser_pairs.iter().cloned())?;
            let blockfix_pairs = make_blockfix_pairs(&files, cfg.seed);
            write_jsonl(&out.join("blockfix_pairs.jsonl"), &cfg, blockfix_pairs.iter().cloned())?;
            let typer_pairs = make_typer_pairs(&files, cfg.seed);
            write_jsonl(&out.join("typer_pairs.jsonl"), &cfg, typer_pairs.iter().cloned())?;
            println!(
                "{}",
                serde_json::json!({
                    "fragments": fragments.len(),
                    "parser_pairs": parser_pairs.len(),
                    "blockfix_pairs": blockfix_pairs.len(),
                    "typer_pairs": typer_pairs.len(),
                })
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::TrainParser { common, data, out, epochs } => {
            train_translation_cmd(common, data, out, epochs, "parser")
        }
        Command::TrainBlockfix { common, data, out, epochs } => {
            train_translation_cmd(common, data, out, epochs, "blockfix")
        }
        Command::TrainTyper { common, data, out, epochs } => {
            let mut cfg = common.run_config()?;
            if let Some(e) = epochs {
                cfg.epochs = e;
            }
            let (_, pairs): (RunConfig, Vec<TrainPair>) = read_jsonl(&data)?;
            let profile = cfg.train_profile()?;
            let trained = train_tagger(&pairs, &profile, cfg.seed, cfg.jobs, |_, e| {
                eprintln!("epoch {e} done");
                true
            })?;
            finish_training(trained, &out, &cfg)
        }
        Command::Repair { common, input, models, k } => {
            let mut cfg = common.run_config()?;
            if let Some(k) = k {
                cfg.beam_k = k;
            }
            let dir = models_dir(&models)?;
            let (blockfix, parser) = load_models(&dir)?;
            let tokens = read_tokens(&input)?;
            let models = Models { blockfix: blockfix.as_ref(), tresparser: &parser };
            let outcome = repair_program(&tokens, &models, &cfg.pipeline());
            let report = RepairReport::from_outcome(&outcome);
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(if report.status == "fixed" { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Parse { common, input, models, dump_abstraction } => {
            let cfg = common.run_config()?;
            let dir = models_dir(&models)?;
            let (blockfix, parser) = load_models(&dir)?;
            let tokens = read_tokens(&input)?;
            if dump_abstraction {
                let abs = lenient::blockfix::abstract_program(&tokens);
                eprintln!(
                    "{}",
                    serde_json::json!({
                        "abstraction": abs.text(),
                        "slot_map": abs.spans,
                    })
                );
            }
            let models = Models { blockfix: blockfix.as_ref(), tresparser: &parser };
            match lenient::pipeline::parse_fragment_pipeline(&tokens, &models, &cfg.pipeline()) {
                Ok(ast) => {
                    let labels = minijava::serialize_ast(&ast).label_texts();
                    println!(
                        "{}",
                        serde_json::json!({
                            "labels": labels,
                            "tokens": tokens.iter().map(|t| t.text.clone()).collect::<Vec<_>>(),
                        })
                    );
                    Ok(ExitCode::SUCCESS)
                }
                Err(LenientError::NotFixable { stage }) => {
                    println!("{}", serde_json::json!({"status": "not-fixable", "stage": stage}));
                    Ok(ExitCode::from(1))
                }
                Err(e) => Err(e),
            }
        }
        Command::Type { common, input, models, k } => {
            let _ = common.run_config()?;
            let dir = models_dir(&models)?;
            let typer = load_checkpoint::<f32>(&dir.join("typer.ckpt"))?;
            let tokens = read_tokens(&input)?;
            let tags = type_fragment(&typer, &tokens, k)?;
            let topk: serde_json::Map<String, serde_json::Value> = tags
                .topk
                .iter()
                .enumerate()
                .filter_map(|(i, t)| {
                    t.as_ref().map(|list| {
                        (
                            i.to_string(),
                            serde_json::json!(list
                                .iter()
                                .map(|(ty, p)| serde_json::json!([ty, p]))
                                .collect::<Vec<_>>()),
                        )
                    })
                })
                .collect();
            println!(
                "{}",
                serde_json::json!({
                    "tokens": tokens.iter().map(|t| t.text.clone()).collect::<Vec<_>>(),
                    "tags": tags.tags,
                    "topk": topk,
                })
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval { common, pred, gold, out } => {
            let _ = common.run_config()?;
            let (cfg, preds): (RunConfig, Vec<PredLine>) = read_jsonl(&pred)?;
            let (_, golds): (RunConfig, Vec<GoldLine>) = read_jsonl(&gold)?;
            if preds.len() != golds.len() {
                return Err(LenientError::Config(format!(
                    "{} predictions vs {} gold items",
                    preds.len(),
                    golds.len()
                )));
            }
            let items: Vec<EvalItem> = preds
                .iter()
                .zip(&golds)
                .map(|(p, g)| EvalItem {
                    len: g.tokens.len(),
                    rank: p.candidates.iter().position(|c| *c == g.tokens).map(|i| i + 1),
                    latency_ms: 0.0,
                })
                .collect();
            let ranks: Vec<Option<usize>> = items.iter().map(|i| i.rank).collect();
            let report = bucket_report(
                &items,
                &[100, 200, 300, 400, 500, 600, 700, 800, 900, 1000],
                CategoryCounts::default(),
            );
            let json = serde_json::json!({
                "run_config": cfg,
                "n": items.len(),
                "mrr": mrr(&ranks)?,
                "report": report,
            });
            match out {
                Some(path) => std::fs::write(path, serde_json::to_string_pretty(&json)?)?,
                None => println!("{}", serde_json::to_string_pretty(&json)?),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { common, input } => {
            let _ = common.run_config()?;
            let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&input)?)?;
            let rows = json["report"]["by_length_bucket"].as_array().cloned().unwrap_or_default();
            println!("{:<12} {:>6} {:>8} {:>12} {:>8}", "tokens", "n", "top1", "95% CI", "mrr");
            for row in rows {
                let lo = row["range"][0].as_u64().unwrap_or(0);
                let hi = row["range"][1].as_u64().unwrap_or(0);
                let n = row["n"].as_u64().unwrap_or(0);
                let top1 = row["top1"].as_f64().unwrap_or(0.0);
                let mrr = row["mrr"].as_f64().unwrap_or(0.0);
                let ci_text = match row["ci"].as_f64() {
                    Some(hw) => format!("±{hw:.3}"),
                    None => "-".to_string(),
                };
                println!(
                    "{:<12} {:>6} {:>8.3} {:>12} {:>8.3}",
                    format!("{lo}-{hi}"),
                    n,
                    top1,
                    ci_text,
                    mrr
                );
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn train_translation_cmd(
    common: Common,
    data: PathBuf,
    out: PathBuf,
    epochs: Option<usize>,
    what: &str,
) -> Result<ExitCode, LenientError> {
    let mut cfg = common.run_config()?;
    if let Some(e) = epochs {
        cfg.epochs = e;
    }
    let (_, pairs): (RunConfig, Vec<TrainPair>) = read_jsonl(&data)?;
    let profile = cfg.train_profile()?;
    let src_cutoff = if what == "parser" { profile.parser_src_cutoff } else { 1 };
    let trained = train_translation(&pairs, &profile, src_cutoff, cfg.seed, cfg.jobs, |_, e| {
        eprintln!("epoch {e} done");
        true
    })?;
    finish_training(trained, &out, &cfg)
}

fn finish_training(
    trained: TrainedModel,
    out: &Path,
    cfg: &RunConfig,
) -> Result<ExitCode, LenientError> {
    save_checkpoint(&trained.checkpoint, out)?;
    let csv =
        history_csv(&trained.history, &format!("run_config: {}", cfg.to_kv().replace('\n', " ")));
    std::fs::write(out.with_extension("loss.csv"), csv)?;
    println!(
        "{}",
        serde_json::json!({
            "checkpoint": out,
            "epochs": trained.checkpoint.meta.epoch,
            "final_loss": trained.checkpoint.meta.final_loss,
        })
    );
    Ok(ExitCode::SUCCESS)
}
