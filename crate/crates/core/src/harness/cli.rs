//! `shadowtouch` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::gesture::{format_gestures, parse_gestures, summarize, ToolBindings};
use crate::shadowsense::{format_observations, Sensor};
use crate::synthkit::io::{format_trace, parse_trace, scene_header, read_frame_dir, write_frame_dir, TraceFile};
use crate::synthkit::render::mix_seed;
use crate::synthkit::{default_scripts, make_corpus, render_frame, NoiseModel, DEFAULT_CORPUS_SIZE};
use crate::touchfsm::{format_events, format_labels, parse_events, parse_labels};

use super::metrics::{frame_confusion, match_events, EvalReport, TraceEval};
use super::pipeline::{evaluate_run, run_trace, EVENT_TOLERANCE_FRAMES};
use super::sweep::{format_sweep, sweep_methods, SweepMethod, SweepSettings};
use super::{read_text, write_text, ConfigError, HarnessError, PipelineConfig};

pub const SEED_ENV: &str = "SHADOWTOUCH_SEED";

#[derive(Debug, Parser)]
#[command(name = "shadowtouch", version, about = "Shadow-based touch sensing on synthetic camera frames")]
struct Cli {
    /// Pipeline configuration file (`key = value` lines).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed; overrides SHADOWTOUCH_SEED and the config file.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output file or directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate the default gesture corpus as trace files.
    Synth {
        #[arg(long, default_value_t = DEFAULT_CORPUS_SIZE)]
        count: usize,
    },
    /// Render a trace file into PGM frames.
    Render {
        #[arg(long, value_name = "FILE")]
        trace: PathBuf,
    },
    /// Extract finger observations from a directory of PGM frames.
    Sense {
        #[arg(long, value_name = "DIR")]
        frames: PathBuf,
    },
    /// Synthesize, render, sense, classify and recognize end to end.
    Pipeline {
        #[arg(long, default_value_t = 4)]
        count: usize,
        /// Number of leading traces whose frames are written out.
        #[arg(long, default_value_t = 1)]
        dump_frames: usize,
    },
    /// Score predicted labels, events and gestures against trace files.
    Eval {
        /// Directory with labels/, events/ and gestures/.
        #[arg(long, value_name = "DIR")]
        pred: PathBuf,
        /// Directory with traces/; defaults to --pred.
        #[arg(long, value_name = "DIR")]
        truth: Option<PathBuf>,
    },
    /// Hover-resolution sweep of the shadow and finger-only classifiers.
    Sweep {
        #[arg(long, value_enum, default_value_t = MethodArg::Both)]
        method: MethodArg,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,7,8,9,10,11,12")]
        heights: Vec<f64>,
        /// Traces per class and height.
        #[arg(long, default_value_t = 200)]
        traces: usize,
        #[arg(long, default_value_t = 8)]
        frames: usize,
    },
    /// Print the effective configuration.
    Config,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Shadow,
    FingerOnly,
    Both,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status. Normal output goes to `stdout`, errors to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { write!(stdout, "{text}") } else { write!(stderr, "{text}") };
            return code;
        }
    };
    match execute(cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn config_for(cli: &Cli) -> Result<PipelineConfig, HarnessError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError::Invalid(format!("{}: {e}", path.display())))?;
            PipelineConfig::from_text(&text)?
        }
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    } else if let Ok(raw) = std::env::var(SEED_ENV) {
        cfg.seed = raw
            .trim()
            .parse()
            .map_err(|_| ConfigError::Invalid(format!("{SEED_ENV} must be an unsigned integer, got `{raw}`")))?;
    }
    Ok(cfg)
}

fn require_out(cli: &Cli) -> Result<PathBuf, HarnessError> {
    cli.out
        .clone()
        .ok_or_else(|| ConfigError::Invalid("this command needs --out".into()).into())
}

fn trace_name(i: usize) -> String {
    format!("trace_{i:04}")
}

fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<(), HarnessError> {
    let cfg = config_for(&cli)?;
    let io = |e: std::io::Error| HarnessError::Data(e.to_string());
    match &cli.command {
        Command::Config => {
            write!(stdout, "{}", cfg.to_text()).map_err(io)?;
        }
        Command::Synth { count } => {
            let out = require_out(&cli)?;
            let corpus = corpus(&cfg, *count)?;
            for (i, item) in corpus.items.iter().enumerate() {
                let file = trace_file(&cfg, item);
                write_text(&out.join(format!("{}.txt", trace_name(i))), &format_trace(&file))?;
            }
            writeln!(stdout, "wrote {} traces to {}", corpus.items.len(), out.display()).map_err(io)?;
        }
        Command::Render { trace } => {
            let out = require_out(&cli)?;
            let file = parse_trace(&read_text(trace)?).map_err(|e| HarnessError::in_file(trace, e))?;
            let noise_seed = match file.header("noise_seed") {
                Some(s) => s.parse().map_err(|_| HarnessError::Data(format!("{}: bad noise_seed header", trace.display())))?,
                None => mix_seed(cfg.seed, 0),
            };
            let noise = NoiseModel { seed: noise_seed, ..cfg.noise };
            let frames = file
                .records
                .iter()
                .map(|r| render_frame(r, &cfg.scene, &noise))
                .collect::<Result<Vec<_>, _>>()?;
            write_frame_dir(&out, &frames).map_err(|e| HarnessError::in_file(&out, e.into()))?;
            writeln!(stdout, "wrote {} frames to {}", frames.len(), out.display()).map_err(io)?;
        }
        Command::Sense { frames } => {
            let frames = read_frame_dir(frames).map_err(|e| HarnessError::in_file(frames, e))?;
            let mut sensor = Sensor::new(cfg.scene, cfg.segmentation);
            let obs: Vec<_> = frames.iter().flat_map(|f| sensor.observe(f)).collect();
            let text = format_observations(&obs);
            match &cli.out {
                Some(path) => write_text(path, &text)?,
                None => write!(stdout, "{text}").map_err(io)?,
            }
        }
        Command::Pipeline { count, dump_frames } => {
            let out = require_out(&cli)?;
            let report = pipeline(&cfg, *count, *dump_frames, &out)?;
            write!(stdout, "{}", report.to_text()).map_err(io)?;
        }
        Command::Eval { pred, truth } => {
            let truth = truth.as_deref().unwrap_or(pred);
            let report = eval_dirs(&cfg, pred, truth)?;
            if let Some(out) = &cli.out {
                write_text(&out.join("report.txt"), &report.to_text())?;
                write_text(&out.join("report.kv"), &report.to_kv())?;
            }
            write!(stdout, "{}", report.to_text()).map_err(io)?;
        }
        Command::Sweep { method, heights, traces, frames } => {
            let methods: &[SweepMethod] = match method {
                MethodArg::Shadow => &[SweepMethod::Shadow],
                MethodArg::FingerOnly => &[SweepMethod::FingerOnly],
                MethodArg::Both => &[SweepMethod::Shadow, SweepMethod::FingerOnly],
            };
            if *traces == 0 || *frames == 0 {
                return Err(ConfigError::Invalid("--traces and --frames must be positive".into()).into());
            }
            let settings = SweepSettings { traces_per_class: *traces, frames_per_trace: *frames, ..SweepSettings::default() };
            let results = sweep_methods(&cfg, heights, methods, &settings)?;
            let text = format_sweep(&results, &settings);
            if let Some(out) = &cli.out {
                write_text(&out.join("sweep.txt"), &text)?;
                let kv: String = results.iter().map(|r| r.to_kv()).collect();
                write_text(&out.join("sweep.kv"), &format!("data=synthetic\n{kv}"))?;
            }
            write!(stdout, "{text}").map_err(io)?;
        }
    }
    Ok(())
}

fn corpus(cfg: &PipelineConfig, count: usize) -> Result<crate::synthkit::Corpus, HarnessError> {
    cfg.validate()?;
    let scripts =
        default_scripts(count, cfg.seed, cfg.noise.jitter_sigma_mm, cfg.frame_period_ms, &cfg.scene)?;
    Ok(make_corpus(&scripts, cfg.seed, cfg.frame_period_ms, &cfg.scene)?)
}

fn trace_file(cfg: &PipelineConfig, item: &crate::synthkit::CorpusItem) -> TraceFile {
    TraceFile {
        headers: vec![
            ("label".into(), item.label.into()),
            ("expected".into(), item.script.kind.expected_gesture()),
            ("noise_seed".into(), item.noise_seed.to_string()),
            ("frame_period_ms".into(), cfg.frame_period_ms.to_string()),
            ("scene".into(), scene_header(&cfg.scene)),
        ],
        records: item.trace.clone(),
    }
}

/// Full end-to-end run writing every intermediate file under `out`.
pub fn pipeline(
    cfg: &PipelineConfig,
    count: usize,
    dump_frames: usize,
    out: &Path,
) -> Result<EvalReport, HarnessError> {
    let corpus = corpus(cfg, count)?;
    write_text(&out.join("config.txt"), &cfg.to_text())?;
    let bindings = ToolBindings::new();
    let mut evals = Vec::with_capacity(corpus.items.len());
    for (i, item) in corpus.items.iter().enumerate() {
        let name = trace_name(i);
        let file = format!("{name}.txt");
        write_text(&out.join("traces").join(&file), &format_trace(&trace_file(cfg, item)))?;
        let run = run_trace(&item.trace, cfg, item.noise_seed, &bindings, i < dump_frames)?;
        if let Some(frames) = &run.frames {
            let dir = out.join("frames").join(&name);
            write_frame_dir(&dir, frames).map_err(|e| HarnessError::in_file(&dir, e.into()))?;
        }
        write_text(&out.join("observations").join(&file), &format_observations(&run.observations))?;
        write_text(&out.join("events").join(&file), &format_events(&run.classification.events))?;
        write_text(&out.join("labels").join(&file), &format_labels(&run.classification.labels))?;
        write_text(&out.join("gestures").join(&file), &format_gestures(&run.gestures))?;
        let expected = item.script.kind.expected_gesture();
        evals.push(evaluate_run(&item.trace, &run, Some(&expected), cfg.frame_period_ms));
    }
    let report = EvalReport::from_traces(&evals);
    write_text(&out.join("report.txt"), &report.to_text())?;
    write_text(&out.join("report.kv"), &report.to_kv())?;
    Ok(report)
}

/// Scores every `truth/traces/*.txt` against the same-named files in
/// `pred/labels`, `pred/events` and `pred/gestures`.
pub fn eval_dirs(cfg: &PipelineConfig, pred: &Path, truth: &Path) -> Result<EvalReport, HarnessError> {
    let trace_dir = truth.join("traces");
    let listing = std::fs::read_dir(&trace_dir).map_err(|e| HarnessError::in_file(&trace_dir, e.into()))?;
    let mut names: Vec<String> = listing
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".txt"))
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(HarnessError::Data(format!("{}: no trace files", trace_dir.display())));
    }
    let mut evals = Vec::with_capacity(names.len());
    for name in &names {
        let path = trace_dir.join(name);
        let trace = parse_trace(&read_text(&path)?).map_err(|e| HarnessError::in_file(&path, e))?;
        let period = match trace.header("frame_period_ms") {
            Some(p) => p.parse().map_err(|_| HarnessError::Data(format!("{}: bad frame_period_ms header", path.display())))?,
            None => cfg.frame_period_ms,
        };
        let load = |sub: &str| -> Result<(PathBuf, String), HarnessError> {
            let p = pred.join(sub).join(name);
            let text = read_text(&p)?;
            Ok((p, text))
        };
        let (lp, labels) = load("labels")?;
        let labels = parse_labels(&labels).map_err(|e| HarnessError::in_file(&lp, e))?;
        let (ep, events) = load("events")?;
        let events = parse_events(&events).map_err(|e| HarnessError::in_file(&ep, e))?;
        let (gp, gestures) = load("gestures")?;
        let gestures = parse_gestures(&gestures).map_err(|e| HarnessError::in_file(&gp, e))?;
        evals.push(TraceEval {
            frames: frame_confusion(&labels, &super::truth_labels(&trace.records)),
            events: match_events(&events, &super::truth_events(&trace.records), EVENT_TOLERANCE_FRAMES, period),
            expected_gesture: trace.header("expected").map(str::to_owned),
            predicted_gesture: summarize(&gestures),
        });
    }
    Ok(EvalReport::from_traces(&evals))
}
