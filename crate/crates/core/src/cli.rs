//! The `ppattach` command line: train, apply, eval, baseline, curve.
//!
//! Exit status is 0 on success, 1 for usage errors, 2 for data errors
//! (unreadable or malformed input files).

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::baseline::fit_lexassoc;
use crate::classes::{load_lexicon, ClassLexicon};
use crate::corpus::{read_records, split_corpus, AttachmentSite, Corpus, CorpusOptions, Sample};
use crate::error::Error;
use crate::evaluator::{evaluate, Metrics};
use crate::learner::{learning_curve, train, LearnerConfig};
use crate::rules::{apply_rules, LabelState, RuleList};

#[derive(Debug, Parser)]
#[command(name = "ppattach", version, about = "Learn and apply PP-attachment transformation rules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Learn a rule list from labeled tuples and write it to a rule file.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        learner: LearnerArgs,
        #[command(flatten)]
        held_out: HeldOutArgs,
        /// Where to write the learned rules.
        #[arg(long, value_name = "FILE")]
        rules_out: PathBuf,
        #[arg(long)]
        per_prep: bool,
    },
    /// Label tuples with a rule file; prints each record followed by its predicted label.
    Apply {
        #[arg(long, value_name = "FILE")]
        rules: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_name = "FILE")]
        classes: Option<PathBuf>,
        /// Write labeled records here instead of standard output.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Score a rule file against gold labels.
    Eval {
        #[arg(long, value_name = "FILE")]
        rules: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_name = "FILE")]
        classes: Option<PathBuf>,
        /// Evaluate only on the held-out part of a seeded split of --data.
        #[arg(long, default_value_t = 0)]
        n_test: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        per_prep: bool,
    },
    /// Fit the lexical-association baseline and score it on held-out data.
    Baseline {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        held_out: HeldOutArgs,
        /// Smoothing weight.
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long)]
        per_prep: bool,
    },
    /// Held-out accuracy as a function of training-set size, as CSV.
    Curve {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        learner: LearnerArgs,
        #[command(flatten)]
        held_out: HeldOutArgs,
        /// Comma-separated training sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        /// Write the CSV here instead of standard output.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Tuple file: `v n1 p n2 label` per line.
    #[arg(long, value_name = "FILE")]
    data: PathBuf,
    /// Records start with an identifier column.
    #[arg(long)]
    leading_id: bool,
    /// Keep token case as written.
    #[arg(long)]
    no_lowercase: bool,
}

impl DataArgs {
    fn options(&self) -> CorpusOptions {
        CorpusOptions {
            lowercase: !self.no_lowercase,
            leading_id: self.leading_id,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Initial {
    N1,
    V,
}

#[derive(Debug, Args)]
struct LearnerArgs {
    /// Class lexicon (`token<TAB>class ...`); enables class conditions on nouns.
    #[arg(long, value_name = "FILE")]
    classes: Option<PathBuf>,
    /// Never condition on n2.
    #[arg(long)]
    no_n2: bool,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    min_score: u64,
    #[arg(long)]
    max_rules: Option<usize>,
    /// Start-state attachment.
    #[arg(long, value_enum, default_value = "n1")]
    initial: Initial,
}

impl LearnerArgs {
    fn config(&self) -> LearnerConfig {
        LearnerConfig {
            initial: match self.initial {
                Initial::N1 => AttachmentSite::N1,
                Initial::V => AttachmentSite::V,
            },
            use_classes: self.classes.is_some(),
            no_n2: self.no_n2,
            min_score: self.min_score as usize,
            max_rules: self.max_rules,
        }
    }
}

#[derive(Debug, Args)]
struct HeldOutArgs {
    /// Separate held-out tuple file.
    #[arg(long, value_name = "FILE", conflicts_with = "n_test")]
    test: Option<PathBuf>,
    /// Hold out this many samples of --data via a seeded random split.
    #[arg(long, default_value_t = 0)]
    n_test: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl HeldOutArgs {
    fn is_set(&self) -> bool {
        self.test.is_some() || self.n_test > 0
    }

    /// Returns `(train, held_out)`.
    fn split(&self, data: Corpus, opts: CorpusOptions) -> Result<(Corpus, Option<Corpus>), CliError> {
        if let Some(path) = &self.test {
            return Ok((data, Some(read_corpus(path, opts)?)));
        }
        if self.n_test > 0 {
            let (train, test) = split_corpus(&data, self.n_test, self.seed)?;
            return Ok((train, Some(test)));
        }
        Ok((data, None))
    }
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Argument(msg) => CliError::Usage(msg),
            other => CliError::Data(other),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Data(Error::Io(e))
    }
}

fn with_path(path: &Path, e: Error) -> CliError {
    match e {
        Error::Io(io) => CliError::Data(Error::Io(io::Error::new(io.kind(), format!("{}: {}", path.display(), io)))),
        Error::Parse { line, text, message } => CliError::Data(Error::Parse {
            line,
            text,
            message: format!("{}: {}", path.display(), message),
        }),
        other => CliError::from(other),
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| with_path(path, Error::Io(e)))
}

fn read_records_from(path: &Path, opts: CorpusOptions) -> Result<Vec<(String, Sample)>, CliError> {
    read_records(open(path)?, opts).map_err(|e| with_path(path, e))
}

fn read_corpus(path: &Path, opts: CorpusOptions) -> Result<Corpus, CliError> {
    Ok(read_records_from(path, opts)?.into_iter().map(|(_, s)| s).collect())
}

fn read_lexicon(path: Option<&Path>, opts: CorpusOptions) -> Result<ClassLexicon, CliError> {
    let Some(path) = path else {
        return Ok(ClassLexicon::new());
    };
    let lexicon = load_lexicon(open(path)?).map_err(|e| with_path(path, e))?;
    Ok(if opts.lowercase {
        lexicon.lowercase_tokens()
    } else {
        lexicon
    })
}

fn read_rules(path: &Path) -> Result<RuleList, CliError> {
    let text = fs::read_to_string(path).map_err(|e| with_path(path, Error::Io(e)))?;
    text.parse().map_err(|e| with_path(path, e))
}

/// A rule file with class conditions needs a lexicon, and a lexicon is only
/// meaningful for a rule file learned with one.
fn check_class_flags(rules: &RuleList, classes: Option<&Path>) -> Result<(), CliError> {
    match (rules.meta.classes, classes) {
        (true, None) => Err(CliError::Usage(
            "rule file was learned with classes=on; pass --classes".into(),
        )),
        (false, Some(_)) => Err(CliError::Usage(
            "--classes given but the rule file header says classes=off".into(),
        )),
        _ => Ok(()),
    }
}

fn metrics(predicted: &LabelState, corpus: &Corpus) -> Result<Metrics, CliError> {
    Ok(evaluate(predicted, corpus)?)
}

fn output<'a>(path: Option<&Path>, stdout: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>, CliError> {
    Ok(match path {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).map_err(|e| with_path(path, Error::Io(e)))?,
        )),
        None => Box::new(stdout),
    })
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Train {
            data,
            learner,
            held_out,
            rules_out,
            per_prep,
        } => {
            let opts = data.options();
            let lexicon = read_lexicon(learner.classes.as_deref(), opts)?;
            let (train_set, test_set) = held_out.split(read_corpus(&data.data, opts)?, opts)?;
            let cfg = learner.config();

            let training = train(&train_set, &cfg, &lexicon, |step| {
                let _ = writeln!(err, "{}", step);
            });
            fs::write(&rules_out, training.rules.to_string()).map_err(|e| with_path(&rules_out, Error::Io(e)))?;

            if !train_set.is_empty() {
                metrics(&training.state, &train_set)?.write_report(out, per_prep)?;
            }
            if let Some(test_set) = test_set {
                let predicted = apply_rules(&training.rules, &test_set, &lexicon);
                writeln!(out, "# held-out")?;
                metrics(&predicted, &test_set)?.write_report(out, per_prep)?;
            }
        }

        Command::Apply {
            rules,
            data,
            classes,
            out: out_path,
        } => {
            let rule_list = read_rules(&rules)?;
            check_class_flags(&rule_list, classes.as_deref())?;
            let opts = data.options();
            let lexicon = read_lexicon(classes.as_deref(), opts)?;
            let records = read_records_from(&data.data, opts)?;
            let corpus: Corpus = records.iter().map(|(_, s)| s.clone()).collect();
            let predicted = apply_rules(&rule_list, &corpus, &lexicon);

            let mut sink = output(out_path.as_deref(), out)?;
            for ((line, _), label) in records.iter().zip(predicted.labels()) {
                writeln!(sink, "{}\t{}", line, label.label_token())?;
            }
            sink.flush()?;
        }

        Command::Eval {
            rules,
            data,
            classes,
            n_test,
            seed,
            per_prep,
        } => {
            let rule_list = read_rules(&rules)?;
            check_class_flags(&rule_list, classes.as_deref())?;
            let opts = data.options();
            let lexicon = read_lexicon(classes.as_deref(), opts)?;
            let mut corpus = read_corpus(&data.data, opts)?;
            if n_test > 0 {
                corpus = split_corpus(&corpus, n_test, seed)?.1;
            }
            let predicted = apply_rules(&rule_list, &corpus, &lexicon);
            metrics(&predicted, &corpus)?.write_report(out, per_prep)?;
        }

        Command::Baseline {
            data,
            held_out,
            alpha,
            per_prep,
        } => {
            let opts = data.options();
            let (train_set, test_set) = held_out.split(read_corpus(&data.data, opts)?, opts)?;
            let test_set = test_set.expect("validated before loading");
            let model = fit_lexassoc(&train_set, alpha)?;
            let labels = test_set
                .iter()
                .map(|s| model.predict(s))
                .collect::<Result<Vec<_>, _>>()?;
            metrics(&LabelState::from_labels(labels), &test_set)?.write_report(out, per_prep)?;
        }

        Command::Curve {
            data,
            learner,
            held_out,
            sizes,
            out: out_path,
        } => {
            let opts = data.options();
            let lexicon = read_lexicon(learner.classes.as_deref(), opts)?;
            let (train_set, test_set) = held_out.split(read_corpus(&data.data, opts)?, opts)?;
            let test_set = test_set.expect("validated before loading");
            let points = learning_curve(&train_set, &test_set, &sizes, &learner.config(), &lexicon)?;

            let mut sink = output(out_path.as_deref(), out)?;
            writeln!(sink, "train_size,rules_learned,test_accuracy")?;
            for point in points {
                writeln!(sink, "{},{},{:.6}", point.train_size, point.rules_learned, point.test_accuracy)?;
            }
            sink.flush()?;
        }
    }
    Ok(())
}

/// Checks that need no file access.
fn validate(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Baseline { held_out, alpha, .. } => {
            if !held_out.is_set() {
                return Err(CliError::Usage("baseline needs --test or --n-test".into()));
            }
            if !(*alpha > 0.0 && alpha.is_finite()) {
                return Err(CliError::Usage(format!("--alpha must be positive, got {}", alpha)));
            }
        }
        Command::Curve { held_out, .. }
            if !held_out.is_set() => {
                return Err(CliError::Usage("curve needs --test or --n-test".into()));
            }
        _ => {}
    }
    Ok(())
}

/// Run with explicit output streams; returns the process exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{}", rendered)
            } else {
                write!(err, "{}", rendered)
            };
            return code;
        }
    };

    let result = validate(&cli.command).and_then(|_| execute(cli.command, out, err));
    let _ = out.flush();
    match result {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(err, "error: {}", msg);
            1
        }
        Err(CliError::Data(e)) => {
            let _ = writeln!(err, "error: {}", e);
            2
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    let mut out = BufWriter::new(stdout.lock());
    let mut err = stderr.lock();
    run_with(args, &mut out, &mut err)
}
