//! Contact, event and gesture metrics and the evaluation report.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::touchfsm::{ContactLabel, TouchEvent, TouchKind};

/// Binary confusion counts. Ratios with an empty denominator are 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    pub fn add(&mut self, other: &ConfusionCounts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
    }
}

/// Frame labels against ground truth, keyed by `(t_ms, finger)`. Truth
/// labels without a prediction count as predicted non-contact; predictions
/// without truth are ignored.
pub fn frame_confusion(predicted: &[ContactLabel], truth: &[ContactLabel]) -> ConfusionCounts {
    let pred: HashMap<_, bool> = predicted.iter().map(|l| ((l.t_ms, l.finger_id), l.contact)).collect();
    let mut c = ConfusionCounts::default();
    for l in truth {
        let p = pred.get(&(l.t_ms, l.finger_id)).copied().unwrap_or(false);
        match (p, l.contact) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EventMatch {
    /// `tp` matched pairs, `fp` unmatched predictions, `fn_` unmatched truth.
    pub counts: ConfusionCounts,
    /// Sum of signed frame offsets (prediction minus truth) of matched Downs.
    pub down_offset_sum: f64,
    pub matched_downs: u64,
}

impl EventMatch {
    pub fn f1(&self) -> f64 {
        self.counts.f1()
    }

    /// Mean signed offset of matched Downs in frames; 0 when none matched.
    pub fn latency_frames(&self) -> f64 {
        if self.matched_downs == 0 {
            0.0
        } else {
            self.down_offset_sum / self.matched_downs as f64
        }
    }

    pub fn add(&mut self, other: &EventMatch) {
        self.counts.add(&other.counts);
        self.down_offset_sum += other.down_offset_sum;
        self.matched_downs += other.matched_downs;
    }
}

/// Greedy chronological matching of Down and Up events: each truth event,
/// in time order, takes the earliest unmatched prediction of the same kind
/// and finger within `tolerance_frames`. Moves are ignored.
pub fn match_events(
    predicted: &[TouchEvent],
    truth: &[TouchEvent],
    tolerance_frames: u64,
    frame_period_ms: u64,
) -> EventMatch {
    let keep = |e: &&TouchEvent| e.kind != TouchKind::Move;
    let mut pred: Vec<&TouchEvent> = predicted.iter().filter(keep).collect();
    let mut truth: Vec<&TouchEvent> = truth.iter().filter(keep).collect();
    pred.sort_by_key(|e| (e.t_ms, e.finger_id));
    truth.sort_by_key(|e| (e.t_ms, e.finger_id));
    let tol_ms = tolerance_frames * frame_period_ms;

    let mut used = vec![false; pred.len()];
    let mut m = EventMatch::default();
    for t in &truth {
        let hit = pred.iter().enumerate().position(|(i, p)| {
            !used[i] && p.kind == t.kind && p.finger_id == t.finger_id && p.t_ms.abs_diff(t.t_ms) <= tol_ms
        });
        match hit {
            Some(i) => {
                used[i] = true;
                m.counts.tp += 1;
                if t.kind == TouchKind::Down {
                    m.matched_downs += 1;
                    m.down_offset_sum += (pred[i].t_ms as f64 - t.t_ms as f64) / frame_period_ms as f64;
                }
            }
            None => m.counts.fn_ += 1,
        }
    }
    m.counts.fp = used.iter().filter(|u| !**u).count() as u64;
    m
}

/// Per-trace evaluation inputs reduced into an [`EvalReport`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceEval {
    pub frames: ConfusionCounts,
    pub events: EventMatch,
    pub expected_gesture: Option<String>,
    pub predicted_gesture: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub n_traces: u64,
    pub frames: ConfusionCounts,
    pub events: EventMatch,
    pub gesture_total: u64,
    pub gesture_correct: u64,
    /// `(expected, predicted)` counts.
    pub gesture_confusion: BTreeMap<(String, String), u64>,
}

/// Coarse gesture class used for the confusion matrix rows and columns.
pub fn gesture_class(summary: &str) -> &str {
    summary.split(':').next().unwrap_or(summary)
}

impl EvalReport {
    /// Order-independent reduction over traces.
    pub fn from_traces<'a>(traces: impl IntoIterator<Item = &'a TraceEval>) -> Self {
        let mut r = EvalReport::default();
        for t in traces {
            r.n_traces += 1;
            r.frames.add(&t.frames);
            r.events.add(&t.events);
            if let Some(expected) = &t.expected_gesture {
                r.gesture_total += 1;
                if *expected == t.predicted_gesture {
                    r.gesture_correct += 1;
                }
                *r
                    .gesture_confusion
                    .entry((gesture_class(expected).to_owned(), gesture_class(&t.predicted_gesture).to_owned()))
                    .or_default() += 1;
            }
        }
        r
    }

    pub fn frame_accuracy(&self) -> f64 {
        self.frames.accuracy()
    }

    pub fn gesture_accuracy(&self) -> f64 {
        ratio(self.gesture_correct, self.gesture_total)
    }

    /// Machine-readable `key=value` lines.
    pub fn to_kv(&self) -> String {
        let f = &self.frames;
        let e = &self.events.counts;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k}={v}");
        };
        kv("data", "synthetic".into());
        kv("traces", self.n_traces.to_string());
        kv("frame_labels", f.total().to_string());
        kv("frame_tp", f.tp.to_string());
        kv("frame_fp", f.fp.to_string());
        kv("frame_fn", f.fn_.to_string());
        kv("frame_tn", f.tn.to_string());
        kv("frame_accuracy", format!("{:.6}", f.accuracy()));
        kv("precision", format!("{:.6}", f.precision()));
        kv("recall", format!("{:.6}", f.recall()));
        kv("f1", format!("{:.6}", f.f1()));
        kv("event_tp", e.tp.to_string());
        kv("event_fp", e.fp.to_string());
        kv("event_fn", e.fn_.to_string());
        kv("event_f1", format!("{:.6}", e.f1()));
        kv("latency_frames", format!("{:.6}", self.events.latency_frames()));
        kv("gesture_total", self.gesture_total.to_string());
        kv("gesture_correct", self.gesture_correct.to_string());
        kv("gesture_accuracy", format!("{:.6}", self.gesture_accuracy()));
        for ((exp, pred), n) in &self.gesture_confusion {
            kv(&format!("confusion.{exp}.{pred}"), n.to_string());
        }
        out
    }

    pub fn to_text(&self) -> String {
        let f = &self.frames;
        let e = &self.events.counts;
        let mut out = String::new();
        let _ = writeln!(out, "shadowtouch evaluation report");
        let _ = writeln!(out, "data: synthetic surrogate corpus (rendered frames, not camera captures)");
        let _ = writeln!(out, "traces: {}", self.n_traces);
        let _ = writeln!(out);
        let _ = writeln!(out, "contact state, per finger per frame ({} labels)", f.total());
        let _ = writeln!(out, "  tp {}  fp {}  fn {}  tn {}", f.tp, f.fp, f.fn_, f.tn);
        let _ = writeln!(out, "  accuracy  {:.4}", f.accuracy());
        let _ = writeln!(out, "  precision {:.4}", f.precision());
        let _ = writeln!(out, "  recall    {:.4}", f.recall());
        let _ = writeln!(out, "  f1        {:.4}", f.f1());
        let _ = writeln!(out);
        let _ = writeln!(out, "touch events (down/up, +-3 frames)");
        let _ = writeln!(out, "  matched {}  spurious {}  missed {}", e.tp, e.fp, e.fn_);
        let _ = writeln!(out, "  f1 {:.4}", e.f1());
        let _ = writeln!(out, "  mean down latency {:+.3} frames", self.events.latency_frames());
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "gestures: {}/{} correct ({:.4})",
            self.gesture_correct,
            self.gesture_total,
            self.gesture_accuracy()
        );
        if !self.gesture_confusion.is_empty() {
            let classes: Vec<&String> = {
                let mut c: Vec<&String> =
                    self.gesture_confusion.keys().flat_map(|(a, b)| [a, b]).collect();
                c.sort();
                c.dedup();
                c
            };
            let _ = write!(out, "  {:<10}", "expected");
            for c in &classes {
                let _ = write!(out, " {c:>7}");
            }
            out.push('\n');
            for r in &classes {
                let _ = write!(out, "  {r:<10}");
                for c in &classes {
                    let n = self.gesture_confusion.get(&((*r).clone(), (*c).clone())).copied().unwrap_or(0);
                    let _ = write!(out, " {n:>7}");
                }
                out.push('\n');
            }
        }
        out
    }
}
