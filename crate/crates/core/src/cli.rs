//! Command-line front end.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::corpus::{self, load_parallel_corpus};
use crate::error::{Error, Result};
use crate::model::{self, load_model, save_model, train_count_baseline, ModelConfig};
use crate::orientation::{read_events, resolved_events, write_events, write_sentence, ReorderingEvent, Scheme};
use crate::rescore::{rescore_stream, rerank_stream, Weights};
use crate::synth;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "lstm-reorder", version, about = "Word-level LSTM reordering model for phrase-based MT")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Turn an aligned parallel corpus into orientation-labelled event TSV
    Extract(ExtractArgs),
    /// Train a model on event TSV or an aligned parallel corpus
    Train(TrainArgs),
    /// Per-sentence log-probability of event TSV under a model
    Score(ScoreArgs),
    /// Perplexity and accuracy of event TSV under a model
    Ppl(PplArgs),
    /// Add the LSTMRM feature to a Moses n-best list
    Rescore(RescoreArgs),
    /// Rerank n-best lists with fixed feature weights
    Rerank(RerankArgs),
    /// Write the trigger-pattern synthetic corpus
    GenSynth(GenSynthArgs),
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Source sentences, one per line
    #[arg(long)]
    pub src: Option<PathBuf>,
    /// Target sentences, one per line
    #[arg(long)]
    pub tgt: Option<PathBuf>,
    /// Pharaoh alignments, one line per sentence pair
    #[arg(long)]
    pub align: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long, default_value = "lr", value_parser = parse_scheme)]
    pub scheme: Scheme,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Output file (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training events (TSV); alternative to --src/--tgt/--align
    #[arg(long, conflicts_with_all = ["src", "tgt", "align"])]
    pub events: Option<PathBuf>,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Held-out events (TSV) for per-epoch perplexity
    #[arg(long)]
    pub heldout: Option<PathBuf>,
    /// Where to write the trained model
    #[arg(long, default_value = "model.lstmrm")]
    pub model: PathBuf,
    /// Epoch statistics file (stdout when omitted)
    #[arg(long)]
    pub stats: Option<PathBuf>,
    #[arg(long, default_value = "lr", value_parser = parse_scheme)]
    pub scheme: Scheme,
    #[arg(long, default_value_t = 100)]
    pub embed_dim: usize,
    #[arg(long, default_value_t = 100)]
    pub hidden_dim: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    /// Maximum source vocabulary size, reserved tokens included
    #[arg(long, default_value_t = 100_000)]
    pub src_vocab: usize,
    /// Maximum target vocabulary size, reserved tokens included
    #[arg(long, default_value_t = 50_000)]
    pub tgt_vocab: usize,
    /// Seed for the ChaCha8 generator (initialization and shuffling)
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Keep corpus order instead of reshuffling every epoch
    #[arg(long)]
    pub no_shuffle: bool,
    /// Use the LSTM without peephole connections
    #[arg(long)]
    pub no_peepholes: bool,
    /// Clip each sentence gradient to this global L2 norm
    #[arg(long)]
    pub clip: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Resolved events (TSV)
    #[arg(long)]
    pub events: PathBuf,
    /// Output file (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PplArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Resolved events (TSV)
    #[arg(long)]
    pub events: PathBuf,
    /// Also report the count baseline trained on these events (TSV)
    #[arg(long)]
    pub baseline_train: Option<PathBuf>,
    /// Add-alpha smoothing for the count baseline
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct RescoreArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Source sentences; line k is sentence id k
    #[arg(long)]
    pub source: PathBuf,
    /// Moses n-best list
    #[arg(long)]
    pub nbest: PathBuf,
    /// Pharaoh alignment per n-best line, used when the line has no fifth field
    #[arg(long)]
    pub align_sidecar: Option<PathBuf>,
    /// Output file (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RerankArgs {
    /// Moses n-best list
    #[arg(long)]
    pub nbest: PathBuf,
    /// Feature weights, `name<TAB>weight` per line
    #[arg(long)]
    pub weights: PathBuf,
    /// Weight for features missing from the weights file
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub default_weight: f64,
    /// Output file (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenSynthArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Training sentences
    #[arg(long, default_value_t = 2000)]
    pub sentences: usize,
    /// Held-out sentences
    #[arg(long, default_value_t = 500)]
    pub heldout: usize,
    /// Output directory; receives train.tsv and heldout.tsv
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_scheme(s: &str) -> std::result::Result<Scheme, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Parses `argv` (program name first) and runs the subcommand. Returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
    }
}

enum CliError {
    Usage(String),
    Data(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e)
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Error::io(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_err(path: Option<&Path>) -> impl Fn(io::Error) -> Error + '_ {
    move |e| Error::io(path.unwrap_or(Path::new("<stdout>")), e)
}

fn load_events(path: &Path, scheme: Scheme) -> Result<Vec<Vec<ReorderingEvent>>> {
    read_events(corpus::open(path)?, scheme).map_err(|e| match e {
        Error::Parse { line, msg } => Error::Parse {
            line,
            msg: format!("{}: {msg}", path.display()),
        },
        other => other,
    })
}

fn corpus_events(c: &CorpusArgs, scheme: Scheme) -> std::result::Result<Vec<Vec<ReorderingEvent>>, CliError> {
    let (Some(src), Some(tgt), Some(align)) = (&c.src, &c.tgt, &c.align) else {
        return Err(CliError::Usage("--src, --tgt and --align are required together".into()));
    };
    let mut out = Vec::new();
    for pair in load_parallel_corpus(src, tgt, align)? {
        out.push(resolved_events(&pair?, scheme)?);
    }
    Ok(out)
}

fn execute(command: Command) -> std::result::Result<(), CliError> {
    match command {
        Command::Extract(a) => {
            let (Some(src), Some(tgt), Some(align)) = (&a.corpus.src, &a.corpus.tgt, &a.corpus.align) else {
                return Err(CliError::Usage("--src, --tgt and --align are required".into()));
            };
            let mut out = output(a.out.as_deref())?;
            let werr = write_err(a.out.as_deref());
            for pair in load_parallel_corpus(src, tgt, align)? {
                let events = resolved_events(&pair?, a.scheme)?;
                write_sentence(&mut out, &events).map_err(&werr)?;
            }
            out.flush().map_err(&werr)?;
        }
        Command::Train(a) => {
            let train = match &a.events {
                Some(path) => load_events(path, a.scheme)?,
                None => corpus_events(&a.corpus, a.scheme)?,
            };
            let heldout = match &a.heldout {
                Some(path) => load_events(path, a.scheme)?,
                None => Vec::new(),
            };
            let config = ModelConfig {
                scheme: a.scheme,
                embed_dim: a.embed_dim,
                hidden_dim: a.hidden_dim,
                src_vocab_size: a.src_vocab,
                tgt_vocab_size: a.tgt_vocab,
                lr: a.lr,
                epochs: a.epochs,
                seed: a.seed,
                shuffle: !a.no_shuffle,
                peepholes: !a.no_peepholes,
                max_grad_norm: a.clip,
            };
            config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            let mut stats_out = output(a.stats.as_deref())?;
            let werr = write_err(a.stats.as_deref());
            let mut write_failure = None;
            let (model, _) = model::train(config, &train, &heldout, |s| {
                if let Err(e) = writeln!(stats_out, "{s}").and_then(|_| stats_out.flush()) {
                    write_failure.get_or_insert(e);
                }
            })?;
            if let Some(e) = write_failure {
                return Err(werr(e).into());
            }
            save_model(&model, &a.model)?;
        }
        Command::Score(a) => {
            let model = load_model(&a.model)?;
            let events = load_events(&a.events, model.scheme())?;
            let mut out = output(a.out.as_deref())?;
            let werr = write_err(a.out.as_deref());
            let mut total = 0.0;
            for sentence in &events {
                let s = model.score_events(sentence)?;
                total += s;
                writeln!(out, "{s}").map_err(&werr)?;
            }
            out.flush().map_err(&werr)?;
            eprintln!("sentences={} total_logprob={total}", events.len());
        }
        Command::Ppl(a) => {
            let model = load_model(&a.model)?;
            let events = load_events(&a.events, model.scheme())?;
            let eval = model.evaluate(&events)?;
            println!(
                "model=lstm events={} ppl={:.6} accuracy={:.6}",
                eval.events,
                eval.perplexity()?,
                eval.accuracy()
            );
            if let Some(path) = &a.baseline_train {
                let train = load_events(path, model.scheme())?;
                let counts = train_count_baseline(&train, model.scheme(), a.alpha)?;
                let eval = counts.evaluate(&events)?;
                println!(
                    "model=count events={} ppl={:.6} accuracy={:.6}",
                    eval.events,
                    eval.perplexity()?,
                    eval.accuracy()
                );
            }
        }
        Command::Rescore(a) => {
            let model = load_model(&a.model)?;
            let sources: Vec<Vec<String>> = corpus::open(&a.source)?
                .lines()
                .map(|l| l.map(|l| corpus::tokenize(&l)).map_err(|e| Error::io(&a.source, e)))
                .collect::<Result<_>>()?;
            let nbest = corpus::open(&a.nbest)?;
            let sidecar = a.align_sidecar.as_deref().map(corpus::open).transpose()?;
            let mut out = output(a.out.as_deref())?;
            let summary = rescore_stream(&model, &sources, nbest, sidecar, &mut out)?;
            out.flush().map_err(write_err(a.out.as_deref()))?;
            eprintln!("entries={} unaligned={}", summary.entries, summary.unaligned);
        }
        Command::Rerank(a) => {
            let weights = Weights::read_from(corpus::open(&a.weights)?, a.default_weight)?;
            let mut out = output(a.out.as_deref())?;
            rerank_stream(corpus::open(&a.nbest)?, &weights, &mut out)?;
            out.flush().map_err(write_err(a.out.as_deref()))?;
        }
        Command::GenSynth(a) => {
            fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
            let corpus = synth::trigger_corpus(a.seed, a.sentences, a.heldout);
            for (name, data) in [("train.tsv", &corpus.train), ("heldout.tsv", &corpus.heldout)] {
                let path = a.out.join(name);
                let mut out = output(Some(&path))?;
                write_events(&mut out, data)
                    .and_then(|_| out.flush())
                    .map_err(|e| Error::io(&path, e))?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["lstm-reorder", "frobnicate"]), EXIT_USAGE);
        assert_eq!(run(["lstm-reorder", "train", "--bogus"]), EXIT_USAGE);
        assert_eq!(run(["lstm-reorder", "extract", "--scheme", "xyz"]), EXIT_USAGE);
        assert_eq!(run(["lstm-reorder", "extract", "--src", "a"]), EXIT_USAGE);
    }

    #[test]
    fn help_lists_defaults() {
        let mut cmd = Cli::command();
        let help = cmd.find_subcommand_mut("train").unwrap().render_long_help().to_string();
        for flag in [
            "--scheme", "--embed-dim", "--hidden-dim", "--lr", "--epochs", "--src-vocab", "--tgt-vocab", "--seed",
            "--no-shuffle", "--no-peepholes",
        ] {
            assert!(help.contains(flag), "{flag} missing");
        }
        for default in ["[default: 100]", "[default: 0.01]", "[default: 10]", "[default: 100000]", "[default: 50000]", "[default: lr]"] {
            assert!(help.contains(default), "{default} missing");
        }
    }

    #[test]
    fn missing_file_is_data_error() {
        assert_eq!(run(["lstm-reorder", "score", "--model", "/nonexistent/m", "--events", "/nonexistent/e"]), EXIT_DATA);
    }
}
