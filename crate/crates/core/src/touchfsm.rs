//! Per-finger contact classification with hysteresis and debouncing, emitting
//! Down/Move/Up touch events.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::geometry::Vec2;
use crate::hand::FingerId;
use crate::shadowsense::FingerObservation;
use crate::textio::{data_lines, parse_field, FormatError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TouchParams {
    /// Engage when the gap is at or below this.
    pub t_down_mm: f64,
    /// Release when the gap is at or above this.
    pub t_up_mm: f64,
    pub n_down: u32,
    pub n_up: u32,
    pub move_eps_mm: f64,
}

impl Default for TouchParams {
    fn default() -> Self {
        Self { t_down_mm: 1.0, t_up_mm: 2.5, n_down: 2, n_up: 2, move_eps_mm: 1.0 }
    }
}

impl TouchParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.t_up_mm > self.t_down_mm) {
            return Err("t_up_mm must exceed t_down_mm".into());
        }
        if self.n_down == 0 || self.n_up == 0 {
            return Err("n_down and n_up must be at least 1".into());
        }
        if !(self.move_eps_mm >= 0.0) {
            return Err("move_eps_mm must be non-negative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TouchKind {
    Down,
    Move,
    Up,
}

impl fmt::Display for TouchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TouchKind::Down => "down",
            TouchKind::Move => "move",
            TouchKind::Up => "up",
        })
    }
}

impl FromStr for TouchKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "down" => Ok(TouchKind::Down),
            "move" => Ok(TouchKind::Move),
            "up" => Ok(TouchKind::Up),
            _ => Err(format!("unknown event kind `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TouchEvent {
    pub kind: TouchKind,
    pub finger_id: FingerId,
    pub t_ms: u64,
    /// Surface position in mm.
    pub pos: Vec2,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FsmError {
    #[error("observation at t = {got} ms arrived after t = {last} ms")]
    OutOfOrder { last: u64, got: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Idle,
    Contact,
}

/// Contact state machine for a single finger.
#[derive(Debug, Clone)]
pub struct TouchFsm {
    finger_id: FingerId,
    params: TouchParams,
    phase: Phase,
    run: u32,
    last_t: Option<u64>,
    last_emitted: Vec2,
}

impl TouchFsm {
    pub fn new(finger_id: FingerId, params: TouchParams) -> Self {
        Self {
            finger_id,
            params,
            phase: Phase::Idle,
            run: 0,
            last_t: None,
            last_emitted: Vec2::ZERO,
        }
    }

    pub fn in_contact(&self) -> bool {
        self.phase == Phase::Contact
    }

    /// Consumes one observation. Frames without a usable gap leave the run
    /// counters untouched.
    pub fn step(&mut self, obs: &FingerObservation) -> Result<Option<TouchEvent>, FsmError> {
        self.step_raw(obs.t_ms, obs.gap_mm.map(|g| if obs.merged { 0.0 } else { g }), obs.tip_mm)
    }

    /// Like [`TouchFsm::step`] with the gap given directly.
    pub fn step_raw(
        &mut self,
        t_ms: u64,
        gap_mm: Option<f64>,
        pos: Vec2,
    ) -> Result<Option<TouchEvent>, FsmError> {
        if let Some(last) = self.last_t {
            if t_ms < last {
                return Err(FsmError::OutOfOrder { last, got: t_ms });
            }
        }
        self.last_t = Some(t_ms);
        let Some(gap) = gap_mm else {
            return Ok(None);
        };
        let event = |kind| TouchEvent { kind, finger_id: self.finger_id, t_ms, pos };
        let p = &self.params;
        match self.phase {
            Phase::Idle => {
                if gap <= p.t_down_mm {
                    self.run += 1;
                    if self.run >= p.n_down {
                        self.phase = Phase::Contact;
                        self.run = 0;
                        self.last_emitted = pos;
                        return Ok(Some(event(TouchKind::Down)));
                    }
                } else {
                    self.run = 0;
                }
            }
            Phase::Contact => {
                if gap >= p.t_up_mm {
                    self.run += 1;
                    if self.run >= p.n_up {
                        self.phase = Phase::Idle;
                        self.run = 0;
                        return Ok(Some(event(TouchKind::Up)));
                    }
                } else {
                    self.run = 0;
                    if pos.distance(self.last_emitted) >= p.move_eps_mm {
                        self.last_emitted = pos;
                        return Ok(Some(event(TouchKind::Move)));
                    }
                }
            }
        }
        Ok(None)
    }
}

/// Contact label of one finger after one frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContactLabel {
    pub t_ms: u64,
    pub finger_id: FingerId,
    pub contact: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceClassification {
    /// One label per frame per finger, frame-major, fingers in id order.
    pub labels: Vec<ContactLabel>,
    /// All fingers' events ordered by time, then finger id.
    pub events: Vec<TouchEvent>,
}

/// Runs one state machine per finger over a whole trace.
///
/// `frames` holds each frame's timestamp and observations. Fingers in
/// `fingers` that are missing from a frame keep their state for it.
pub fn classify_trace(
    frames: &[(u64, Vec<FingerObservation>)],
    fingers: &[FingerId],
    params: &TouchParams,
) -> Result<TraceClassification, FsmError> {
    let mut machines: BTreeMap<FingerId, TouchFsm> =
        fingers.iter().map(|&f| (f, TouchFsm::new(f, *params))).collect();
    let mut out = TraceClassification::default();
    for (t_ms, obs) in frames {
        for o in obs {
            let fsm = machines
                .entry(o.finger_id)
                .or_insert_with(|| TouchFsm::new(o.finger_id, *params));
            if let Some(e) = fsm.step(o)? {
                out.events.push(e);
            }
        }
        for (&finger_id, fsm) in &machines {
            out.labels.push(ContactLabel { t_ms: *t_ms, finger_id, contact: fsm.in_contact() });
        }
    }
    out.events.sort_by_key(|e| (e.t_ms, e.finger_id));
    Ok(out)
}

/// Checks the per-finger Down, Move*, Up alternation and time order.
pub fn is_legal_stream(events: &[TouchEvent]) -> bool {
    let mut down: BTreeMap<FingerId, bool> = BTreeMap::new();
    let mut last_t: BTreeMap<FingerId, u64> = BTreeMap::new();
    for e in events {
        if last_t.get(&e.finger_id).is_some_and(|&t| e.t_ms < t) {
            return false;
        }
        last_t.insert(e.finger_id, e.t_ms);
        let is_down = down.entry(e.finger_id).or_insert(false);
        match (e.kind, *is_down) {
            (TouchKind::Down, false) => *is_down = true,
            (TouchKind::Move, true) => {}
            (TouchKind::Up, true) => *is_down = false,
            _ => return false,
        }
    }
    true
}

/// `t_ms finger_id kind x_mm y_mm`
pub fn format_events(events: &[TouchEvent]) -> String {
    let mut out = String::from("# t_ms finger_id kind x_mm y_mm\n");
    for e in events {
        let _ = writeln!(out, "{} {} {} {:.4} {:.4}", e.t_ms, e.finger_id, e.kind, e.pos.x, e.pos.y);
    }
    out
}

pub fn parse_events(text: &str) -> Result<Vec<TouchEvent>, FormatError> {
    data_lines(text)
        .map(|(n, line)| {
            let mut f = line.split_whitespace();
            let t_ms = parse_field(n, "t_ms", f.next())?;
            let finger_id = parse_field(n, "finger_id", f.next())?;
            let kind = parse_field(n, "kind", f.next())?;
            let pos = Vec2::new(parse_field(n, "x_mm", f.next())?, parse_field(n, "y_mm", f.next())?);
            if f.next().is_some() {
                return Err(FormatError::malformed(n, "trailing fields"));
            }
            Ok(TouchEvent { kind, finger_id, t_ms, pos })
        })
        .collect()
}

/// `t_ms finger_id contact` per finger per frame.
pub fn format_labels(labels: &[ContactLabel]) -> String {
    let mut out = String::from("# t_ms finger_id contact\n");
    for l in labels {
        let _ = writeln!(out, "{} {} {}", l.t_ms, l.finger_id, u8::from(l.contact));
    }
    out
}

pub fn parse_labels(text: &str) -> Result<Vec<ContactLabel>, FormatError> {
    data_lines(text)
        .map(|(n, line)| {
            let mut f = line.split_whitespace();
            let t_ms = parse_field(n, "t_ms", f.next())?;
            let finger_id = parse_field(n, "finger_id", f.next())?;
            let contact = crate::textio::parse_bool01(n, "contact", f.next())?;
            Ok(ContactLabel { t_ms, finger_id, contact })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn run(gaps: &[Option<f64>], params: TouchParams) -> Vec<(usize, TouchKind)> {
        let mut fsm = TouchFsm::new(FingerId(1), params);
        gaps.iter()
            .enumerate()
            .filter_map(|(i, &g)| {
                fsm.step_raw(i as u64 * 10, g, Vec2::ZERO).unwrap().map(|e| (i, e.kind))
            })
            .collect()
    }

    fn some(gaps: &[f64]) -> Vec<Option<f64>> {
        gaps.iter().map(|&g| Some(g)).collect()
    }

    #[test]
    fn hand_traced_sequence() {
        let events = run(&some(&[5.0, 3.0, 0.5, 0.4, 0.3, 2.0, 4.0, 6.0]), TouchParams::default());
        assert_eq!(events, vec![(3, TouchKind::Down), (7, TouchKind::Up)]);
    }

    #[test]
    fn far_gaps_emit_nothing() {
        assert!(run(&some(&[3.0, 5.0, 2.6, 9.0]), TouchParams::default()).is_empty());
    }

    #[test]
    fn merged_from_start_downs_once() {
        let obs = |t: u64| FingerObservation {
            t_ms: t,
            finger_id: FingerId(0),
            tip_px: Vec2::ZERO,
            tip_mm: Vec2::ZERO,
            centroid_px: Vec2::ZERO,
            shadow_tip_px: None,
            gap_mm: Some(0.0),
            merged: true,
        };
        let mut fsm = TouchFsm::new(FingerId(0), TouchParams::default());
        let events: Vec<_> = (0..10)
            .filter_map(|i| fsm.step(&obs(i * 10)).unwrap().map(|e| (i, e.kind)))
            .collect();
        assert_eq!(events, vec![(1, TouchKind::Down)]);
    }

    #[test]
    fn absent_gap_freezes_counters() {
        let gaps = [Some(0.5), None, Some(0.5), Some(3.0), None, None, Some(3.0)];
        let events = run(&gaps, TouchParams::default());
        assert_eq!(events, vec![(2, TouchKind::Down), (6, TouchKind::Up)]);
    }

    #[test]
    fn moves_follow_position() {
        let mut fsm = TouchFsm::new(FingerId(0), TouchParams::default());
        let mut kinds = Vec::new();
        for i in 0..10u64 {
            let pos = Vec2::new(i as f64 * 0.6, 0.0);
            if let Some(e) = fsm.step_raw(i, Some(0.0), pos).unwrap() {
                kinds.push((i, e.kind));
            }
        }
        // Down at 1 (x = 0.6); moves once 1 mm has accumulated
        assert_eq!(
            kinds,
            vec![(1, TouchKind::Down), (3, TouchKind::Move), (5, TouchKind::Move), (7, TouchKind::Move), (9, TouchKind::Move)]
        );
    }

    #[test]
    fn out_of_order_is_rejected() {
        let mut fsm = TouchFsm::new(FingerId(0), TouchParams::default());
        fsm.step_raw(20, Some(5.0), Vec2::ZERO).unwrap();
        assert!(fsm.step_raw(20, Some(5.0), Vec2::ZERO).is_ok());
        assert_eq!(
            fsm.step_raw(10, Some(5.0), Vec2::ZERO),
            Err(FsmError::OutOfOrder { last: 20, got: 10 })
        );
    }

    #[test]
    fn params_validate() {
        assert!(TouchParams::default().validate().is_ok());
        assert!(TouchParams { t_up_mm: 1.0, ..Default::default() }.validate().is_err());
        assert!(TouchParams { n_up: 0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn event_file_round_trip() {
        let events = vec![
            TouchEvent { kind: TouchKind::Down, finger_id: FingerId(1), t_ms: 30, pos: Vec2::new(1.5, -2.25) },
            TouchEvent { kind: TouchKind::Up, finger_id: FingerId(1), t_ms: 90, pos: Vec2::new(1.5, -2.0) },
        ];
        assert_eq!(parse_events(&format_events(&events)).unwrap(), events);
        match parse_events("10 1 hop 0 0\n") {
            Err(FormatError::Malformed { line: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn legality_checker() {
        let e = |kind, t| TouchEvent { kind, finger_id: FingerId(0), t_ms: t, pos: Vec2::ZERO };
        assert!(is_legal_stream(&[e(TouchKind::Down, 0), e(TouchKind::Move, 1), e(TouchKind::Up, 2)]));
        assert!(!is_legal_stream(&[e(TouchKind::Up, 0)]));
        assert!(!is_legal_stream(&[e(TouchKind::Down, 0), e(TouchKind::Down, 1)]));
        assert!(!is_legal_stream(&[e(TouchKind::Move, 0)]));
        assert!(!is_legal_stream(&[e(TouchKind::Down, 5), e(TouchKind::Up, 2)]));
    }

    fn two_finger_frames(a: &[Option<f64>], b: &[Option<f64>]) -> Vec<(u64, Vec<FingerObservation>)> {
        let obs = |t: u64, id: u8, g: Option<f64>| FingerObservation {
            t_ms: t,
            finger_id: FingerId(id),
            tip_px: Vec2::ZERO,
            tip_mm: Vec2::new(t as f64 * 0.1, 0.0),
            centroid_px: Vec2::ZERO,
            shadow_tip_px: None,
            gap_mm: g,
            merged: false,
        };
        a.iter()
            .zip(b)
            .enumerate()
            .map(|(i, (&ga, &gb))| {
                let t = i as u64 * 10;
                (t, vec![obs(t, 0, ga), obs(t, 1, gb)])
            })
            .collect()
    }

    fn gap_seq() -> impl Strategy<Value = Vec<Option<f64>>> {
        proptest::collection::vec(proptest::option::weighted(0.9, 0.0f64..6.0), 40)
    }

    proptest! {
        #[test]
        fn fingers_are_independent(a in gap_seq(), b in gap_seq(), b2 in gap_seq()) {
            let ids = [FingerId(0), FingerId(1)];
            let p = TouchParams::default();
            let r1 = classify_trace(&two_finger_frames(&a, &b), &ids, &p).unwrap();
            let r2 = classify_trace(&two_finger_frames(&a, &b2), &ids, &p).unwrap();
            let only_a = |r: &TraceClassification| -> (Vec<TouchEvent>, Vec<ContactLabel>) {
                (
                    r.events.iter().filter(|e| e.finger_id == FingerId(0)).copied().collect(),
                    r.labels.iter().filter(|l| l.finger_id == FingerId(0)).copied().collect(),
                )
            };
            prop_assert_eq!(only_a(&r1), only_a(&r2));
            prop_assert!(is_legal_stream(&r1.events));
        }

        #[test]
        fn hysteresis_band_never_chatters(band in proptest::collection::vec(1.0001f64..2.4999, 1..60)) {
            let mut gaps = some(&[0.0, 0.0]);
            gaps.extend(band.iter().map(|&g| Some(g)));
            let events = run(&gaps, TouchParams::default());
            prop_assert_eq!(events, vec![(1, TouchKind::Down)]);
        }

        #[test]
        fn single_spike_never_releases(prefix in 0usize..10, spike in 2.5f64..50.0, tail in 1usize..10) {
            let mut gaps = some(&[0.0, 0.0]);
            gaps.extend(std::iter::repeat(Some(0.2)).take(prefix));
            gaps.push(Some(spike));
            gaps.extend(std::iter::repeat(Some(0.2)).take(tail));
            let events = run(&gaps, TouchParams::default());
            prop_assert_eq!(events, vec![(1, TouchKind::Down)]);
        }
    }
}
