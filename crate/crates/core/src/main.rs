use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use daychat::chatlog::{parse_log, ParseMode};
use daychat::consolidate::{self, Label, DEFAULT_SILENCE_MINUTES, LABELS_FILE};
use daychat::eval::{self, EvalReport, ScoredItem, ScoredSet, REPORT_RECALL_TARGETS};
use daychat::features::{self, FeatureConfig, Vocabulary};
use daychat::harness::{run_experiment, ExperimentSpec};
use daychat::model::{self, TrainConfig};
use daychat::synth::{self, SynthConfig};
use daychat::textprep::{apply_variant, Base, TextVariant, Transform};

#[derive(Parser)]
#[command(name = "daychat", version, about = "Predictive coding for instant-message corpora")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Merge chat logs into raw/ and normalized/ day-chat corpus directories
    Consolidate {
        /// Directory of chat-log files (every regular file is read)
        #[arg(long)]
        logs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// labels.csv to copy into the corpus
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SILENCE_MINUTES)]
        silence_minutes: i64,
        /// Skip malformed lines instead of failing
        #[arg(long)]
        lenient: bool,
    },
    /// Write one text variant of every document in a corpus
    Prep {
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        variant: VariantArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a vocabulary and train a model on a labeled corpus
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        variant: VariantArgs,
        #[command(flatten)]
        features: FeatureArgs,
        #[arg(long, default_value_t = TrainConfig::default().l2_lambda)]
        lambda: f64,
        #[arg(long, default_value_t = TrainConfig::default().max_iterations)]
        max_iterations: usize,
        #[arg(long, default_value_t = TrainConfig::default().tolerance)]
        tolerance: f64,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        /// Print the top-k features after training
        #[arg(long, default_value_t = 25)]
        top_k: usize,
    },
    /// Score every document of a corpus with a trained model
    Score {
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        variant: VariantArgs,
        #[arg(long, default_value_t = features::DEFAULT_MIN_TOKEN_LENGTH)]
        min_token_length: usize,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Curves and precision at recall for a scores file
    Eval {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        /// Directory for pr.csv, roc.csv and summary.txt
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = REPORT_RECALL_TARGETS)]
        recall: Vec<f64>,
    },
    /// Documents to review to reach a recall level on a new corpus
    Savings {
        #[arg(long)]
        corpus_size: u64,
        #[arg(long)]
        rate: f64,
        #[arg(long)]
        recall: f64,
        #[arg(long)]
        precision: f64,
        /// Compare against a second model's precision
        #[arg(long)]
        compare_precision: Option<f64>,
    },
    /// Generate a synthetic chat corpus (logs/ and labels.csv)
    Synth {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = SynthConfig::default().n_rooms)]
        rooms: usize,
        #[arg(long, default_value_t = SynthConfig::default().n_days)]
        days: usize,
        #[arg(long, default_value_t = SynthConfig::default().participants_per_room)]
        participants: usize,
        #[arg(long, default_value_t = SynthConfig::default().messages_per_day)]
        messages: usize,
        #[arg(long, default_value_t = SynthConfig::default().responsive_rate)]
        rate: f64,
        #[arg(long, default_value_t = SynthConfig::default().signal_strength)]
        signal_strength: f64,
        #[arg(long, default_value_t = SynthConfig::default().numeric_noise_rate)]
        noise: f64,
        /// Comma-separated signal words
        #[arg(long, value_delimiter = ',')]
        signal_tokens: Option<Vec<String>>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the variant grid and write a report directory
    Experiment {
        /// key = value experiment file
        #[arg(long)]
        config: PathBuf,
        /// Corpus directory written by `consolidate`
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct VariantArgs {
    /// raw | norm
    #[arg(long, default_value = "raw")]
    base: Base,
    /// none | num | num-ts | strip
    #[arg(long, default_value = "none")]
    transform: Transform,
}

impl VariantArgs {
    fn variant(&self) -> TextVariant {
        TextVariant::new(self.base, self.transform)
    }
}

#[derive(Args)]
struct FeatureArgs {
    #[arg(long, default_value_t = features::DEFAULT_MIN_TOKEN_LENGTH)]
    min_token_length: usize,
    #[arg(long, default_value_t = features::DEFAULT_TOP_N)]
    top_n: usize,
}

fn read_log_dir(dir: &Path, mode: ParseMode) -> Result<Vec<daychat::ChatEvent>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.is_file());
    paths.sort();
    let mut events = Vec::new();
    for p in paths {
        let file = fs::File::open(&p).with_context(|| format!("opening {}", p.display()))?;
        let parsed = parse_log(std::io::BufReader::new(file), mode)
            .with_context(|| format!("parsing {}", p.display()))?;
        for skipped in &parsed.skipped {
            eprintln!("{}: skipped {}", p.display(), skipped);
        }
        events.extend(parsed.events);
    }
    Ok(events)
}

fn labeled(corpus: &[daychat::DayChat]) -> Result<Vec<Label>> {
    corpus
        .iter()
        .map(|d| d.label.with_context(|| format!("{} has no label", d.doc_id)))
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Consolidate { logs, out, labels, silence_minutes, lenient } => {
            let mode = if lenient { ParseMode::Lenient } else { ParseMode::Strict };
            let events = read_log_dir(&logs, mode)?;
            let n_events = events.len();
            let mut chats = consolidate::consolidate(events, silence_minutes);
            if let Some(path) = labels {
                consolidate::attach_labels(&mut chats, &consolidate::read_labels(&path)?);
            }
            consolidate::write_corpus(&out, &chats)?;
            println!("{n_events} events -> {} day chats in {}", chats.len(), out.display());
        }
        Command::Prep { corpus, variant, out } => {
            let docs = consolidate::read_corpus(&corpus)?;
            let v = variant.variant();
            fs::create_dir_all(&out)?;
            for d in &docs {
                fs::write(out.join(format!("{}.txt", d.doc_id)), apply_variant(d, v))?;
            }
            println!("{} documents written as {v}", docs.len());
        }
        Command::Train {
            corpus,
            variant,
            features,
            lambda,
            max_iterations,
            tolerance,
            model: model_path,
            vocab: vocab_path,
            top_k,
        } => {
            let docs = consolidate::read_corpus(&corpus)?;
            let labels = labeled(&docs)?;
            let v = variant.variant();
            let cfg = FeatureConfig { min_token_length: features.min_token_length, top_n: features.top_n };
            let tokens: Vec<Vec<String>> = docs
                .iter()
                .map(|d| features::tokenize(&apply_variant(d, v), cfg.min_token_length))
                .collect();
            let vocab = features::build_vocabulary(&tokens, &labels, &cfg)?;
            let vectors: Vec<_> = tokens.iter().map(|t| features::vectorize(t, &vocab)).collect();
            let train_cfg = TrainConfig { l2_lambda: lambda, max_iterations, tolerance, ..Default::default() };
            let m = model::train(&vectors, &labels, &vocab, &train_cfg)?;
            model::save(&m, &model_path)?;
            vocab.write_csv(&vocab_path)?;
            println!(
                "trained on {} documents, vocabulary {}, {} iterations",
                docs.len(),
                vocab.len(),
                m.iterations_run
            );
            print!("{}", model::format_top_features(&model::top_features(&m, top_k)));
        }
        Command::Score { corpus, variant, min_token_length, model: model_path, vocab, out } => {
            let docs = consolidate::read_corpus(&corpus)?;
            let m = model::load(&model_path)?;
            let vocab = Vocabulary::read_csv(&vocab)?;
            let v = variant.variant();
            let scores = docs
                .iter()
                .map(|d| {
                    let tokens = features::tokenize(&apply_variant(d, v), min_token_length);
                    Ok((d.doc_id.clone(), m.score(&features::vectorize(&tokens, &vocab))?))
                })
                .collect::<daychat::Result<Vec<_>>>()?;
            eval::write_scores(&out, &scores)?;
            println!("{} documents scored", scores.len());
        }
        Command::Eval { scores, labels, out, recall } => {
            let scores = eval::read_scores(&scores)?;
            let labels = consolidate::read_labels(&labels)?;
            let items = scores
                .into_iter()
                .map(|(doc_id, score)| {
                    let label = *labels
                        .get(&doc_id)
                        .with_context(|| format!("{doc_id} missing from labels"))?;
                    Ok(ScoredItem { doc_id, score, label })
                })
                .collect::<Result<Vec<_>>>()?;
            let report = EvalReport::evaluate(&ScoredSet::new(items)?, &recall)?;
            fs::create_dir_all(&out)?;
            report.write_pr_csv(&out.join("pr.csv"))?;
            report.write_roc_csv(&out.join("roc.csv"))?;
            fs::write(out.join("summary.txt"), report.summary())?;
            print!("{}", report.summary());
        }
        Command::Savings { corpus_size, rate, recall, precision, compare_precision } => {
            let base = eval::savings(corpus_size, rate, recall, precision)?;
            println!("{base}");
            if let Some(p) = compare_precision {
                let other = eval::savings(corpus_size, rate, recall, p)?;
                println!();
                println!("{other}");
                println!(
                    "{:<20}{}",
                    "review_difference",
                    base.review_count as i64 - other.review_count as i64
                );
            }
        }
        Command::Synth {
            seed,
            rooms,
            days,
            participants,
            messages,
            rate,
            signal_strength,
            noise,
            signal_tokens,
            out,
        } => {
            let mut cfg = SynthConfig {
                seed,
                n_rooms: rooms,
                n_days: days,
                participants_per_room: participants,
                messages_per_day: messages,
                responsive_rate: rate,
                signal_strength,
                numeric_noise_rate: noise,
                ..Default::default()
            };
            if let Some(tokens) = signal_tokens {
                cfg.signal_tokens = tokens;
            }
            let corpus = synth::generate(&cfg)?;
            corpus.write_to(&out)?;
            println!(
                "{} participant logs, {} day chats ({} responsive) in {}",
                corpus.logs.len(),
                corpus.labels.len(),
                corpus.labels.iter().filter(|l| l.1.is_responsive()).count(),
                out.display()
            );
        }
        Command::Experiment { config, corpus, out } => {
            let text = fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let spec = ExperimentSpec::parse_config(&text)?;
            let docs = consolidate::read_corpus(&corpus)?;
            if !corpus.join(LABELS_FILE).exists() {
                bail!("{} has no {LABELS_FILE}", corpus.display());
            }
            let report = run_experiment(docs, &spec)?;
            report.write(&out)?;
            print!("{}", report.render());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
