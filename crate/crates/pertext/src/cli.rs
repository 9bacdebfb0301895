//! Command-line driver. Exit status: 0 success, 1 domain error, 2 I/O or
//! environment error.

use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, Read, Write};
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pertext_core::corpus::{build_ezafe_dataset, build_punct_dataset, build_zwnj_dataset, is_zwnj_bearing, split_dataset, tag_has_ezafe};
use pertext_core::eval::Confusion;
use pertext_core::pipeline::refine;
use pertext_core::tagger::{majority_baseline, train};
use pertext_core::{EzafeMarker, PipelineConfig, SplitSpec, Tagger, TaggerError, TaggerModel, Task, TrainConfig};
use thiserror::Error;

use crate::corpus_io::{read_corpus_file, ReadError};
use crate::dataset::{read_dataset_file, split_stats, write_dataset_file, DatasetError, DatasetStats};
use crate::model_io::{load_file, save_file, ModelIoError};
use crate::remote::{healthcheck, RemoteEndpoint, RemoteTagger, DEFAULT_TIMEOUT_MS};

#[derive(Debug, Parser)]
#[command(name = "pertext", version, about = "Persian text refinement: punctuation, ZWNJ and ezafe")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Turn a tagged corpus into train/val/test JSON Lines datasets.
    BuildDataset(BuildDatasetArgs),
    /// Train an averaged-perceptron tagger.
    Train(TrainArgs),
    /// Score a model or remote tagger on a dataset.
    Eval(EvalArgs),
    /// Refine text line by line.
    Refine(RefineArgs),
    /// Query a remote tagger's hello.
    Healthcheck(HealthcheckArgs),
}

fn parse_task(s: &str) -> Result<Task, String> {
    s.parse::<Task>().map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
pub struct BuildDatasetArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_parser = parse_task)]
    pub task: Task,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "0.8:0.1:0.1")]
    pub ratios: String,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Keep only sentences with at least one ZWNJ join.
    #[arg(long)]
    pub zwnj_only: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub val: Option<PathBuf>,
    #[arg(long, value_parser = parse_task)]
    pub task: Task,
    #[arg(short = 'o', long)]
    pub model_out: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub epochs: u32,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Keep the final weights instead of their average.
    #[arg(long)]
    pub no_average: bool,
    /// Write the majority-class baseline instead of training.
    #[arg(long)]
    pub majority: bool,
}

#[derive(Debug, Args, Clone)]
pub struct RemoteArgs {
    #[arg(long, default_value_t = DEFAULT_TIMEOUT_MS)]
    pub timeout_ms: u64,
    #[arg(long, default_value_t = NonZeroUsize::MIN)]
    pub max_inflight: NonZeroUsize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, required_unless_present = "endpoint", conflicts_with = "endpoint")]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_parser = parse_task)]
    pub task: Option<Task>,
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub remote: RemoteArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MarkerArg {
    Kasra,
    Ye,
    TagOnly,
}

impl From<MarkerArg> for EzafeMarker {
    fn from(m: MarkerArg) -> Self {
        match m {
            MarkerArg::Kasra => EzafeMarker::Kasra,
            MarkerArg::Ye => EzafeMarker::SuffixYe,
            MarkerArg::TagOnly => EzafeMarker::TagOnly,
        }
    }
}

#[derive(Debug, Args)]
pub struct RefineArgs {
    /// Input file; standard input when absent.
    pub input: Option<PathBuf>,
    #[arg(long, conflicts_with = "punct_endpoint")]
    pub punct_model: Option<PathBuf>,
    #[arg(long, conflicts_with = "zwnj_endpoint")]
    pub zwnj_model: Option<PathBuf>,
    #[arg(long, conflicts_with = "ezafe_endpoint")]
    pub ezafe_model: Option<PathBuf>,
    #[arg(long)]
    pub punct_endpoint: Option<String>,
    #[arg(long)]
    pub zwnj_endpoint: Option<String>,
    #[arg(long)]
    pub ezafe_endpoint: Option<String>,
    #[arg(long)]
    pub keep_punct: bool,
    #[arg(long, value_enum, default_value_t = MarkerArg::Kasra)]
    pub marker: MarkerArg,
    /// Side file receiving one stage-trace JSON object per line.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long, default_value_t = NonZeroUsize::MIN)]
    pub jobs: NonZeroUsize,
    #[command(flatten)]
    pub remote: RemoteArgs,
}

#[derive(Debug, Args)]
pub struct HealthcheckArgs {
    #[arg(long)]
    pub endpoint: String,
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub remote: RemoteArgs,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

fn domain(e: impl std::fmt::Display) -> CliError {
    CliError::Domain(e.to_string())
}

fn dataset_err(path: &Path, e: DatasetError) -> CliError {
    match e {
        DatasetError::Io(e) => io_err(path)(e),
        other => CliError::Domain(format!("{}: {other}", path.display())),
    }
}

fn model_err(path: &Path, e: ModelIoError) -> CliError {
    match e {
        ModelIoError::Io(e) => io_err(path)(e),
        ModelIoError::Codec(e) => CliError::Domain(format!("{}: {e}", path.display())),
    }
}

fn require_file(path: &Path) -> Result<(), CliError> {
    match fs::metadata(path) {
        Ok(m) if m.is_file() => Ok(()),
        Ok(_) => Err(CliError::Io(format!("{}: not a file", path.display()))),
        Err(e) => Err(io_err(path)(e)),
    }
}

fn endpoint(spec: &str, remote: &RemoteArgs) -> Result<RemoteEndpoint, CliError> {
    let e: RemoteEndpoint = spec.parse().map_err(|e| CliError::Domain(format!("endpoint `{spec}`: {e}")))?;
    Ok(e.with_timeout_ms(remote.timeout_ms).map_err(domain)?.with_max_inflight(remote.max_inflight))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::BuildDataset(a) => cmd_build_dataset(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Refine(a) => cmd_refine(&a),
        Command::Healthcheck(a) => cmd_healthcheck(&a),
    }
}

pub fn cmd_build_dataset(a: &BuildDatasetArgs) -> Result<(), CliError> {
    let spec = SplitSpec::parse(&a.ratios, a.seed).map_err(domain)?;
    require_file(&a.corpus)?;
    fs::create_dir_all(&a.out).map_err(io_err(&a.out))?;
    let sentences = read_corpus_file(&a.corpus).map_err(|e| match e {
        ReadError::Io(e) => io_err(&a.corpus)(e),
        ReadError::Corpus(e) => CliError::Domain(format!("{}: {e}", a.corpus.display())),
    })?;
    let sentences_read = sentences.len();
    let mut sentences = sentences;
    if a.zwnj_only {
        sentences.retain(|s| build_zwnj_dataset(std::slice::from_ref(s)).first().is_some_and(is_zwnj_bearing));
    }
    let data = match a.task {
        Task::Punctuation => build_punct_dataset(&sentences),
        Task::Zwnj => build_zwnj_dataset(&sentences),
        Task::Ezafe => build_ezafe_dataset(&sentences, &tag_has_ezafe),
    };
    let (train, val, test) = split_dataset(data, &spec).map_err(domain)?;
    for (name, part) in [("train", &train), ("val", &val), ("test", &test)] {
        let path = a.out.join(format!("{name}.jsonl"));
        write_dataset_file(&path, part).map_err(io_err(&path))?;
    }
    let stats = DatasetStats {
        task: a.task.as_str().to_string(),
        seed: a.seed,
        ratios: a.ratios.clone(),
        sentences_read,
        train: split_stats(a.task, &train),
        val: split_stats(a.task, &val),
        test: split_stats(a.task, &test),
    };
    let path = a.out.join("stats.json");
    let mut json = serde_json::to_string_pretty(&stats).expect("stats serialize");
    json.push('\n');
    fs::write(&path, json).map_err(io_err(&path))?;
    println!(
        "{}: {} train / {} val / {} test sequences",
        a.task,
        train.len(),
        val.len(),
        test.len()
    );
    Ok(())
}

pub fn cmd_train(a: &TrainArgs) -> Result<(), CliError> {
    require_file(&a.train)?;
    if let Some(v) = &a.val {
        require_file(v)?;
    }
    let train_set = read_dataset_file(&a.train, Some(a.task)).map_err(|e| dataset_err(&a.train, e))?;
    let val_set = match &a.val {
        Some(v) => read_dataset_file(v, Some(a.task)).map_err(|e| dataset_err(v, e))?,
        None => Vec::new(),
    };
    let model = if a.majority {
        majority_baseline(&train_set).map_err(domain)?
    } else {
        let cfg = TrainConfig {
            epochs: a.epochs,
            seed: a.seed,
            averaged: !a.no_average,
            ..TrainConfig::default()
        };
        let mut progress = |r: &pertext_core::tagger::EpochReport| {
            let val = r.val_macro_f1.map_or_else(|| "n/a".to_string(), |f| format!("{:.2}", f * 100.0));
            println!(
                "epoch {}: mistakes {} train-acc {:.2} val-macro-F1 {val}",
                r.epoch,
                r.mistakes,
                r.train_accuracy * 100.0
            );
        };
        train(&train_set, &val_set, &cfg, &mut progress).map_err(domain)?
    };
    save_file(&model, &a.model_out).map_err(io_err(&a.model_out))?;
    Ok(())
}

fn load_model(path: &Path, task: Option<Task>) -> Result<TaggerModel, CliError> {
    require_file(path)?;
    let model = load_file(path).map_err(|e| model_err(path, e))?;
    match task {
        Some(t) if t != model.task() => Err(CliError::Domain(format!(
            "{}: model is for {}, expected {t}",
            path.display(),
            model.task()
        ))),
        _ => Ok(model),
    }
}

pub fn cmd_eval(a: &EvalArgs) -> Result<(), CliError> {
    require_file(&a.dataset)?;
    let report = if let Some(path) = &a.model {
        let model = load_model(path, a.task)?;
        let data = read_dataset_file(&a.dataset, Some(model.task())).map_err(|e| dataset_err(&a.dataset, e))?;
        pertext_core::eval::evaluate(&model, &data).map_err(domain)?
    } else {
        let spec = a.endpoint.as_deref().expect("clap requires a model or endpoint");
        let ep = endpoint(spec, &a.remote)?;
        let data = read_dataset_file(&a.dataset, a.task).map_err(|e| dataset_err(&a.dataset, e))?;
        let task = a.task.or_else(|| data.first().map(|s| s.task())).ok_or_else(|| domain("dataset is empty"))?;
        let tagger = RemoteTagger::connect(&ep, task).map_err(domain)?;
        let seqs: Vec<_> = data.iter().map(|s| s.tokens()).collect();
        let preds = tagger.tag_batch(&seqs).map_err(domain)?;
        let mut confusion = Confusion::new(task);
        for (pred, seq) in preds.iter().zip(&data) {
            confusion.add(pred, seq.labels()).map_err(domain)?;
        }
        confusion.report().map_err(domain)?
    };
    if a.json {
        println!("{}", crate::report::to_json(&report));
    } else {
        print!("{}", crate::report::to_table(&report));
    }
    Ok(())
}

enum StageSource {
    Model(Arc<TaggerModel>),
    Remote(RemoteEndpoint),
}

impl StageSource {
    fn instantiate(&self, task: Task) -> Result<Box<dyn Tagger + Send>, TaggerError> {
        match self {
            StageSource::Model(m) => Ok(Box::new(Arc::clone(m))),
            StageSource::Remote(ep) => Ok(Box::new(RemoteTagger::connect(ep, task)?)),
        }
    }
}

struct Stages {
    sources: [(Task, Option<StageSource>); 3],
}

type Worker = [Option<Box<dyn Tagger + Send>>; 3];

impl Stages {
    fn connect(&self) -> Result<Worker, CliError> {
        let mut out: Worker = [None, None, None];
        for (slot, (task, source)) in out.iter_mut().zip(&self.sources) {
            if let Some(s) = source {
                *slot = Some(s.instantiate(*task).map_err(|e| CliError::Domain(format!("{task} tagger: {e}")))?);
            }
        }
        Ok(out)
    }
}

fn stage_source(task: Task, model: &Option<PathBuf>, spec: &Option<String>, remote: &RemoteArgs) -> Result<Option<StageSource>, CliError> {
    Ok(match (model, spec) {
        (Some(path), _) => Some(StageSource::Model(Arc::new(load_model(path, Some(task))?))),
        (None, Some(spec)) => Some(StageSource::Remote(endpoint(spec, remote)?)),
        (None, None) => None,
    })
}

fn refine_line(worker: &Worker, a: &RefineArgs, line: &str) -> Result<(String, String), CliError> {
    fn dyn_ref(t: &Option<Box<dyn Tagger + Send>>) -> Option<&dyn Tagger> {
        t.as_deref().map(|t| t as &dyn Tagger)
    }
    let cfg = PipelineConfig {
        punct: dyn_ref(&worker[0]),
        zwnj: dyn_ref(&worker[1]),
        ezafe: dyn_ref(&worker[2]),
        marker: a.marker.into(),
        keep_punct: a.keep_punct,
        ..PipelineConfig::default()
    };
    let result = refine(line, &cfg).map_err(domain)?;
    let trace = if a.trace.is_some() { crate::trace::to_json(&result) } else { String::new() };
    Ok((result.output, trace))
}

type LineResult = Result<(String, String), CliError>;

fn refine_all(stages: &Stages, a: &RefineArgs, lines: &[String]) -> Result<Vec<(String, String)>, CliError> {
    let jobs = a.jobs.get().min(lines.len().max(1));
    if jobs == 1 {
        let worker = stages.connect()?;
        return lines
            .iter()
            .enumerate()
            .map(|(i, l)| refine_line(&worker, a, l).map_err(|e| at_line(i, e)))
            .collect();
    }
    let (job_tx, job_rx) = crossbeam_channel::unbounded::<usize>();
    let (res_tx, res_rx) = crossbeam_channel::unbounded::<(usize, LineResult)>();
    for i in 0..lines.len() {
        job_tx.send(i).expect("receiver alive");
    }
    drop(job_tx);
    let stop = AtomicBool::new(false);
    let mut slots: Vec<Option<LineResult>> = (0..lines.len()).map(|_| None).collect();
    let mut setup_error = None;
    thread::scope(|scope| {
        let handles: Vec<_> = (0..jobs)
            .map(|_| {
                let (job_rx, res_tx, stop) = (job_rx.clone(), res_tx.clone(), &stop);
                scope.spawn(move || -> Result<(), CliError> {
                    let worker = stages.connect().inspect_err(|_| stop.store(true, Ordering::SeqCst))?;
                    for i in job_rx {
                        if stop.load(Ordering::SeqCst) {
                            break;
                        }
                        let r = refine_line(&worker, a, &lines[i]);
                        if r.is_err() {
                            stop.store(true, Ordering::SeqCst);
                        }
                        let _ = res_tx.send((i, r));
                    }
                    Ok(())
                })
            })
            .collect();
        drop(res_tx);
        for (i, r) in res_rx {
            slots[i] = Some(r);
        }
        for h in handles {
            if let Err(e) = h.join().expect("worker panicked") {
                setup_error.get_or_insert(e);
            }
        }
    });
    if let Some(e) = setup_error {
        return Err(e);
    }
    let mut out = Vec::with_capacity(lines.len());
    for (i, slot) in slots.into_iter().enumerate() {
        match slot {
            Some(Ok(r)) => out.push(r),
            Some(Err(e)) => return Err(at_line(i, e)),
            None => {}
        }
    }
    if out.len() != lines.len() {
        return Err(CliError::Domain("refinement stopped early".into()));
    }
    Ok(out)
}

fn at_line(i: usize, e: CliError) -> CliError {
    match e {
        CliError::Domain(m) => CliError::Domain(format!("line {}: {m}", i + 1)),
        other => other,
    }
}

fn read_lines(input: &Option<PathBuf>) -> Result<Vec<String>, CliError> {
    let reader: Box<dyn Read> = match input {
        Some(p) => Box::new(File::open(p).map_err(io_err(p))?),
        None => Box::new(io::stdin()),
    };
    let label = input.clone().unwrap_or_else(|| PathBuf::from("<stdin>"));
    let mut lines = Vec::new();
    for line in BufReader::new(reader).lines() {
        let mut line = line.map_err(|e| match e.kind() {
            io::ErrorKind::InvalidData => CliError::Domain(format!("{}: input is not valid UTF-8", label.display())),
            _ => io_err(&label)(e),
        })?;
        if line.ends_with('\r') {
            line.pop();
        }
        lines.push(line);
    }
    Ok(lines)
}

/// Output is written only once every line succeeded.
pub fn cmd_refine(a: &RefineArgs) -> Result<(), CliError> {
    if let Some(p) = &a.input {
        require_file(p)?;
    }
    let stages = Stages {
        sources: [
            (Task::Punctuation, stage_source(Task::Punctuation, &a.punct_model, &a.punct_endpoint, &a.remote)?),
            (Task::Zwnj, stage_source(Task::Zwnj, &a.zwnj_model, &a.zwnj_endpoint, &a.remote)?),
            (Task::Ezafe, stage_source(Task::Ezafe, &a.ezafe_model, &a.ezafe_endpoint, &a.remote)?),
        ],
    };
    let active = stages
        .sources
        .iter()
        .any(|(task, s)| s.is_some() && !(*task == Task::Punctuation && a.keep_punct));
    if !active {
        return Err(CliError::Domain("no stage configured: pass a --*-model or --*-endpoint".into()));
    }
    let lines = read_lines(&a.input)?;
    let results = refine_all(&stages, a, &lines)?;
    if let Some(path) = &a.trace {
        let mut body = String::new();
        for (_, t) in &results {
            body.push_str(t);
            body.push('\n');
        }
        fs::write(path, body).map_err(io_err(path))?;
    }
    let stdout = io::stdout();
    let mut out = stdout.lock();
    for (line, _) in &results {
        writeln!(out, "{line}").map_err(|e| CliError::Io(format!("<stdout>: {e}")))?;
    }
    Ok(())
}

pub fn cmd_healthcheck(a: &HealthcheckArgs) -> Result<(), CliError> {
    let ep = endpoint(&a.endpoint, &a.remote)?;
    let info = healthcheck(&ep).map_err(domain)?;
    let tasks: Vec<&str> = info.tasks.iter().map(|t| t.as_str()).collect();
    if a.json {
        let hello = crate::remote::protocol::Hello {
            proto: info.protocol_version,
            name: info.name,
            tasks: tasks.iter().map(|t| t.to_string()).collect(),
        };
        println!("{}", serde_json::to_string(&hello).expect("hello serializes"));
    } else {
        println!("name: {}", info.name);
        println!("protocol: {}", info.protocol_version);
        println!("tasks: {}", tasks.join(", "));
    }
    Ok(())
}
