//! Render, sense, classify and recognize whole traces, and score them
//! against their generating ground truth.

use crate::gesture::{summarize, GestureEvent, Recognizer, ToolBindings};
use crate::hand::FingerId;
use crate::shadowsense::{FingerObservation, Sensor};
use crate::synthkit::{render_frame, Corpus, Frame, HandTraceRecord, NoiseModel};
use crate::touchfsm::{classify_trace, ContactLabel, TouchEvent, TouchKind, TraceClassification};

use super::metrics::{frame_confusion, match_events, EvalReport, TraceEval};
use super::{HarnessError, PipelineConfig};

/// Event matching tolerance, in frames.
pub const EVENT_TOLERANCE_FRAMES: u64 = 3;

/// Ground-truth contact label of every finger in every record.
pub fn truth_labels(trace: &[HandTraceRecord]) -> Vec<ContactLabel> {
    let mut out: Vec<ContactLabel> = trace
        .iter()
        .flat_map(|r| {
            r.fingers.iter().map(|f| ContactLabel { t_ms: r.t_ms, finger_id: f.id, contact: f.contact })
        })
        .collect();
    out.sort_by_key(|l| (l.t_ms, l.finger_id));
    out
}

/// Ground-truth Down at each finger's first contact record and Up at its
/// first record after contact ends.
pub fn truth_events(trace: &[HandTraceRecord]) -> Vec<TouchEvent> {
    let mut down = std::collections::BTreeMap::<FingerId, bool>::new();
    let mut out = Vec::new();
    for r in trace {
        for f in &r.fingers {
            let was = down.insert(f.id, f.contact).unwrap_or(false);
            let kind = match (was, f.contact) {
                (false, true) => TouchKind::Down,
                (true, false) => TouchKind::Up,
                _ => continue,
            };
            out.push(TouchEvent { kind, finger_id: f.id, t_ms: r.t_ms, pos: f.tip.xy() });
        }
    }
    out.sort_by_key(|e| (e.t_ms, e.finger_id));
    out
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceRun {
    /// Kept only when requested.
    pub frames: Option<Vec<Frame>>,
    pub observations: Vec<FingerObservation>,
    pub classification: TraceClassification,
    pub gestures: Vec<GestureEvent>,
}

/// Runs one trace through the whole chain with pixel noise seeded by
/// `noise_seed`.
pub fn run_trace(
    trace: &[HandTraceRecord],
    cfg: &PipelineConfig,
    noise_seed: u64,
    bindings: &ToolBindings,
    keep_frames: bool,
) -> Result<TraceRun, HarnessError> {
    let noise = NoiseModel { seed: noise_seed, ..cfg.noise };
    let mut sensor = Sensor::new(cfg.scene, cfg.segmentation);
    let mut frames = keep_frames.then(Vec::new);
    let mut per_frame = Vec::with_capacity(trace.len());
    for r in trace {
        let frame = render_frame(r, &cfg.scene, &noise)?;
        per_frame.push((r.t_ms, sensor.observe(&frame)));
        if let Some(f) = frames.as_mut() {
            f.push(frame);
        }
    }
    let classification = classify_trace(&per_frame, &FingerId::ALL, &cfg.touch)?;
    let gestures = Recognizer::new(cfg.gesture, bindings.clone()).recognize(&classification.events);
    Ok(TraceRun {
        frames,
        observations: per_frame.into_iter().flat_map(|(_, o)| o).collect(),
        classification,
        gestures,
    })
}

/// Scores one run against its trace.
pub fn evaluate_run(
    trace: &[HandTraceRecord],
    run: &TraceRun,
    expected_gesture: Option<&str>,
    frame_period_ms: u64,
) -> TraceEval {
    TraceEval {
        frames: frame_confusion(&run.classification.labels, &truth_labels(trace)),
        events: match_events(
            &run.classification.events,
            &truth_events(trace),
            EVENT_TOLERANCE_FRAMES,
            frame_period_ms,
        ),
        expected_gesture: expected_gesture.map(str::to_owned),
        predicted_gesture: summarize(&run.gestures),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusItemEval {
    pub eval: TraceEval,
    pub events: Vec<TouchEvent>,
    pub gestures: Vec<GestureEvent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEval {
    /// In corpus order.
    pub items: Vec<CorpusItemEval>,
    pub report: EvalReport,
}

/// Runs and scores every corpus item. Items are spread over the available
/// cores; results are reduced in corpus order.
pub fn evaluate_corpus(corpus: &Corpus, cfg: &PipelineConfig) -> Result<CorpusEval, HarnessError> {
    let n = corpus.items.len();
    let workers = std::thread::available_parallelism().map_or(1, |p| p.get()).clamp(1, n.max(1));
    let bindings = ToolBindings::new();
    let eval_one = |i: usize| -> Result<CorpusItemEval, HarnessError> {
        let item = &corpus.items[i];
        let run = run_trace(&item.trace, cfg, item.noise_seed, &bindings, false)?;
        let expected = item.script.kind.expected_gesture();
        Ok(CorpusItemEval {
            eval: evaluate_run(&item.trace, &run, Some(&expected), cfg.frame_period_ms),
            events: run.classification.events,
            gestures: run.gestures,
        })
    };
    let mut slots: Vec<Option<Result<CorpusItemEval, HarnessError>>> = (0..n).map(|_| None).collect();
    if workers == 1 {
        for (i, slot) in slots.iter_mut().enumerate() {
            *slot = Some(eval_one(i));
        }
    } else {
        let chunk = n.div_ceil(workers);
        std::thread::scope(|s| {
            for (c, part) in slots.chunks_mut(chunk).enumerate() {
                let eval_one = &eval_one;
                s.spawn(move || {
                    for (j, slot) in part.iter_mut().enumerate() {
                        *slot = Some(eval_one(c * chunk + j));
                    }
                });
            }
        });
    }
    let items = slots
        .into_iter()
        .map(|s| s.expect("every slot filled"))
        .collect::<Result<Vec<_>, _>>()?;
    let report = EvalReport::from_traces(items.iter().map(|i| &i.eval));
    Ok(CorpusEval { items, report })
}
