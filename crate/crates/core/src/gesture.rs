//! Gesture recognition over touch event streams: taps, one- and two-finger
//! swipes, and continuous two-finger pinch, tagged with per-finger tools.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::geometry::Vec2;
use crate::hand::{Direction, FingerId};
use crate::textio::{data_lines, parse_field, FormatError};
use crate::touchfsm::{TouchEvent, TouchKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GestureParams {
    pub tap_max_ms: u64,
    pub tap_max_disp_mm: f64,
    pub swipe_min_mm: f64,
    pub two_finger_overlap_ms: u64,
    pub pinch_min_scale_delta: f64,
    pub pinch_min_rot_rad: f64,
    pub pinch_min_pan_mm: f64,
}

impl Default for GestureParams {
    fn default() -> Self {
        Self {
            tap_max_ms: 300,
            tap_max_disp_mm: 5.0,
            swipe_min_mm: 20.0,
            two_finger_overlap_ms: 100,
            pinch_min_scale_delta: 0.05,
            pinch_min_rot_rad: 0.1,
            pinch_min_pan_mm: 5.0,
        }
    }
}

impl GestureParams {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("tap_max_ms", self.tap_max_ms as f64),
            ("tap_max_disp_mm", self.tap_max_disp_mm),
            ("swipe_min_mm", self.swipe_min_mm),
            ("two_finger_overlap_ms", self.two_finger_overlap_ms as f64),
            ("pinch_min_scale_delta", self.pinch_min_scale_delta),
            ("pinch_min_rot_rad", self.pinch_min_rot_rad),
            ("pinch_min_pan_mm", self.pinch_min_pan_mm),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinchTransform {
    pub scale: f64,
    pub rotation_rad: f64,
    pub pan: Vec2,
}

impl PinchTransform {
    pub const IDENTITY: PinchTransform = PinchTransform { scale: 1.0, rotation_rad: 0.0, pan: Vec2::ZERO };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("pinch start points coincide")]
pub struct CoincidentStart;

/// Similarity transform taking the start pair onto the current pair. The
/// rotation and scale act about the start centroid.
pub fn pinch_transform(
    p1_start: Vec2,
    p2_start: Vec2,
    p1_now: Vec2,
    p2_now: Vec2,
) -> Result<PinchTransform, CoincidentStart> {
    let ds = p2_start - p1_start;
    let dn = p2_now - p1_now;
    if ds.norm() == 0.0 {
        return Err(CoincidentStart);
    }
    Ok(PinchTransform {
        scale: dn.norm() / ds.norm(),
        rotation_rad: ds.perp_dot(dn).atan2(ds.dot(dn)),
        pan: p1_now.midpoint(p2_now) - p1_start.midpoint(p2_start),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GestureKind {
    Tap,
    Swipe(Direction),
    PinchUpdate(PinchTransform),
    PinchEnd(PinchTransform),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GestureEvent {
    pub t_ms: u64,
    pub kind: GestureKind,
    pub anchor: Vec2,
    /// Ascending.
    pub fingers: Vec<FingerId>,
    /// Tool tag per entry of `fingers`.
    pub tools: Vec<String>,
}

impl GestureEvent {
    /// Summary notation: `tap:1`, `swipe:up:1+2`, `pinch:0+1`. Pinch updates
    /// have none.
    pub fn summary(&self) -> Option<String> {
        let fingers = crate::synthkit::script::join_fingers(&self.fingers);
        match self.kind {
            GestureKind::Tap => Some(format!("tap:{fingers}")),
            GestureKind::Swipe(d) => Some(format!("swipe:{d}:{fingers}")),
            GestureKind::PinchEnd(_) => Some(format!("pinch:{fingers}")),
            GestureKind::PinchUpdate(_) => None,
        }
    }
}

/// Summary of a whole trace: its single completed gesture, `none`, or
/// `multi`.
pub fn summarize(gestures: &[GestureEvent]) -> String {
    let mut found = gestures.iter().filter_map(GestureEvent::summary);
    match (found.next(), found.next()) {
        (None, _) => "none".into(),
        (Some(s), None) => s,
        (Some(_), Some(_)) => "multi".into(),
    }
}

pub const DEFAULT_TOOL: &str = "default";

/// Finger to tool-tag routing. Tags are single tokens without `+`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ToolBindings {
    tags: BTreeMap<FingerId, String>,
}

impl ToolBindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(&mut self, finger: FingerId, tag: &str) -> Result<(), String> {
        if tag.is_empty() || tag.contains('+') || tag.chars().any(char::is_whitespace) {
            return Err(format!("invalid tool tag `{tag}`"));
        }
        self.tags.insert(finger, tag.to_owned());
        Ok(())
    }

    pub fn unbind(&mut self, finger: FingerId) {
        self.tags.remove(&finger);
    }

    pub fn tag(&self, finger: FingerId) -> &str {
        self.tags.get(&finger).map_or(DEFAULT_TOOL, String::as_str)
    }

    /// Overwrites the tool tags of `event` from its fingers.
    pub fn apply(&self, event: &mut GestureEvent) {
        event.tools = event.fingers.iter().map(|&f| self.tag(f).to_owned()).collect();
    }
}

#[derive(Debug, Clone)]
struct Contact {
    finger: FingerId,
    down_t: u64,
    start: Vec2,
    last: Vec2,
    path_mm: f64,
    up_t: Option<u64>,
    episode: Option<usize>,
}

impl Contact {
    fn net(&self) -> Vec2 {
        self.last - self.start
    }
}

/// Interval during which exactly two contacts were concurrent.
#[derive(Debug, Clone)]
struct Episode {
    members: [usize; 2],
    starts: [Vec2; 2],
    now: [Vec2; 2],
    pending: Vec<(u64, PinchTransform, Vec2)>,
    first_up: Option<(u64, PinchTransform, Vec2)>,
}

impl Episode {
    fn transform(&self) -> PinchTransform {
        pinch_transform(self.starts[0], self.starts[1], self.now[0], self.now[1])
            .unwrap_or(PinchTransform::IDENTITY)
    }
}

/// Offline recognizer over one trace's touch events.
#[derive(Debug, Clone)]
pub struct Recognizer {
    pub params: GestureParams,
    pub bindings: ToolBindings,
}

impl Recognizer {
    pub fn new(params: GestureParams, bindings: ToolBindings) -> Self {
        Self { params, bindings }
    }

    /// Gestures of a legal event stream, ordered by time.
    pub fn recognize(&self, events: &[TouchEvent]) -> Vec<GestureEvent> {
        let mut contacts: Vec<Contact> = Vec::new();
        let mut active: BTreeMap<FingerId, usize> = BTreeMap::new();
        let mut episodes: Vec<Episode> = Vec::new();
        let mut out = Vec::new();

        for e in events {
            match e.kind {
                TouchKind::Down => {
                    let ci = contacts.len();
                    contacts.push(Contact {
                        finger: e.finger_id,
                        down_t: e.t_ms,
                        start: e.pos,
                        last: e.pos,
                        path_mm: 0.0,
                        up_t: None,
                        episode: None,
                    });
                    active.insert(e.finger_id, ci);
                    if active.len() == 2 {
                        let members: Vec<usize> = active.values().copied().collect();
                        let free = members.iter().all(|&m| contacts[m].episode.is_none());
                        let starts = [contacts[members[0]].last, contacts[members[1]].last];
                        if free && starts[0] != starts[1] {
                            let ei = episodes.len();
                            for &m in &members {
                                contacts[m].episode = Some(ei);
                            }
                            episodes.push(Episode {
                                members: [members[0], members[1]],
                                starts,
                                now: starts,
                                pending: Vec::new(),
                                first_up: None,
                            });
                        }
                    }
                }
                TouchKind::Move | TouchKind::Up => {
                    let Some(&ci) = active.get(&e.finger_id) else { continue };
                    let c = &mut contacts[ci];
                    c.path_mm += e.pos.distance(c.last);
                    c.last = e.pos;
                    if e.kind == TouchKind::Up {
                        c.up_t = Some(e.t_ms);
                        active.remove(&e.finger_id);
                    }
                    let Some(ei) = contacts[ci].episode else {
                        if e.kind == TouchKind::Up {
                            self.emit_single(&contacts[ci], &mut out);
                        }
                        continue;
                    };
                    let ep = &mut episodes[ei];
                    if ep.first_up.is_none() {
                        let slot = usize::from(ep.members[1] == ci);
                        ep.now[slot] = e.pos;
                        let tf = ep.transform();
                        let anchor = ep.now[0].midpoint(ep.now[1]);
                        if e.kind == TouchKind::Up {
                            ep.first_up = Some((e.t_ms, tf, anchor));
                        } else {
                            ep.pending.push((e.t_ms, tf, anchor));
                        }
                    }
                    let [a, b] = ep.members;
                    if contacts[a].up_t.is_some() && contacts[b].up_t.is_some() {
                        self.resolve_episode(ei, &episodes, &contacts, &mut out);
                    }
                }
            }
        }
        out.sort_by_key(|g| g.t_ms);
        out
    }

    fn exceeds_pinch_delta(&self, tf: &PinchTransform) -> bool {
        let p = &self.params;
        (tf.scale - 1.0).abs() >= p.pinch_min_scale_delta
            || tf.rotation_rad.abs() >= p.pinch_min_rot_rad
            || tf.pan.norm() >= p.pinch_min_pan_mm
    }

    fn pinch_event(
        &self,
        t_ms: u64,
        kind: GestureKind,
        anchor: Vec2,
        ep: &Episode,
        contacts: &[Contact],
    ) -> GestureEvent {
        let mut fingers = vec![contacts[ep.members[0]].finger, contacts[ep.members[1]].finger];
        fingers.sort();
        self.event(t_ms, kind, anchor, fingers)
    }

    fn event(&self, t_ms: u64, kind: GestureKind, anchor: Vec2, fingers: Vec<FingerId>) -> GestureEvent {
        let mut ev = GestureEvent { t_ms, kind, anchor, fingers, tools: Vec::new() };
        self.bindings.apply(&mut ev);
        ev
    }

    fn classify_single(&self, c: &Contact) -> Option<GestureKind> {
        let p = &self.params;
        let up_t = c.up_t?;
        if up_t - c.down_t <= p.tap_max_ms && c.net().norm() <= p.tap_max_disp_mm {
            Some(GestureKind::Tap)
        } else if c.path_mm >= p.swipe_min_mm {
            Some(GestureKind::Swipe(Direction::dominant(c.net())))
        } else {
            None
        }
    }

    fn emit_single(&self, c: &Contact, out: &mut Vec<GestureEvent>) {
        if let Some(kind) = self.classify_single(c) {
            out.push(self.event(c.up_t.unwrap_or(c.down_t), kind, c.start, vec![c.finger]));
        }
    }

    /// Decides a finished pair episode: a parallel two-finger swipe, a pinch,
    /// or two independent contacts. Swipe takes precedence, since sensing lag
    /// between two translating fingers reads as a small scale or rotation.
    fn resolve_episode(
        &self,
        ei: usize,
        episodes: &[Episode],
        contacts: &[Contact],
        out: &mut Vec<GestureEvent>,
    ) {
        let p = &self.params;
        let ep = &episodes[ei];
        let (ca, cb) = (&contacts[ep.members[0]], &contacts[ep.members[1]]);
        let (Some(ua), Some(ub)) = (ca.up_t, cb.up_t) else { return };
        let overlap = ua.min(ub).saturating_sub(ca.down_t.max(cb.down_t));
        let both_swipe = ca.path_mm >= p.swipe_min_mm && cb.path_mm >= p.swipe_min_mm;
        let (da, db) = (Direction::dominant(ca.net()), Direction::dominant(cb.net()));
        if both_swipe && da == db && overlap >= p.two_finger_overlap_ms {
            let mut fingers = vec![ca.finger, cb.finger];
            fingers.sort();
            out.push(self.event(ua.max(ub), GestureKind::Swipe(da), ca.start.midpoint(cb.start), fingers));
            return;
        }
        let (t_up, tf_end, anchor) = ep.first_up.expect("first member up recorded");
        let onset = ep.pending.iter().position(|(_, tf, _)| self.exceeds_pinch_delta(tf));
        if onset.is_some() || self.exceeds_pinch_delta(&tf_end) {
            for &(t, tf, a) in &ep.pending[onset.unwrap_or(ep.pending.len())..] {
                out.push(self.pinch_event(t, GestureKind::PinchUpdate(tf), a, ep, contacts));
            }
            out.push(self.pinch_event(t_up, GestureKind::PinchEnd(tf_end), anchor, ep, contacts));
            return;
        }
        self.emit_single(ca, out);
        self.emit_single(cb, out);
    }
}

/// [`Recognizer::recognize`] with default tool bindings.
pub fn recognize(events: &[TouchEvent], params: &GestureParams) -> Vec<GestureEvent> {
    Recognizer::new(*params, ToolBindings::new()).recognize(events)
}

/// `t_ms kind params… finger_ids tool_tags`, where params are
/// `x y` for tap, `direction x y` for swipe and `scale rotation pan_x pan_y x y`
/// for pinch events; ids and tags are `+`-joined.
pub fn format_gestures(gestures: &[GestureEvent]) -> String {
    let mut out = String::from("# t_ms kind params... finger_ids tool_tags\n");
    for g in gestures {
        let _ = write!(out, "{} ", g.t_ms);
        match g.kind {
            GestureKind::Tap => {
                let _ = write!(out, "tap");
            }
            GestureKind::Swipe(d) => {
                let _ = write!(out, "swipe {d}");
            }
            GestureKind::PinchUpdate(tf) | GestureKind::PinchEnd(tf) => {
                let name = if matches!(g.kind, GestureKind::PinchEnd(_)) { "pinch_end" } else { "pinch_update" };
                let _ = write!(out, "{name} {:.6} {:.6} {:.4} {:.4}", tf.scale, tf.rotation_rad, tf.pan.x, tf.pan.y);
            }
        }
        let _ = writeln!(
            out,
            " {:.4} {:.4} {} {}",
            g.anchor.x,
            g.anchor.y,
            crate::synthkit::script::join_fingers(&g.fingers),
            g.tools.join("+")
        );
    }
    out
}

pub fn parse_gestures(text: &str) -> Result<Vec<GestureEvent>, FormatError> {
    data_lines(text)
        .map(|(n, line)| {
            let mut f = line.split_whitespace();
            let t_ms = parse_field(n, "t_ms", f.next())?;
            let name: String = parse_field(n, "kind", f.next())?;
            let kind = match name.as_str() {
                "tap" => GestureKind::Tap,
                "swipe" => GestureKind::Swipe(parse_field(n, "direction", f.next())?),
                "pinch_update" | "pinch_end" => {
                    let tf = PinchTransform {
                        scale: parse_field(n, "scale", f.next())?,
                        rotation_rad: parse_field(n, "rotation", f.next())?,
                        pan: Vec2::new(parse_field(n, "pan_x", f.next())?, parse_field(n, "pan_y", f.next())?),
                    };
                    if name == "pinch_end" {
                        GestureKind::PinchEnd(tf)
                    } else {
                        GestureKind::PinchUpdate(tf)
                    }
                }
                other => return Err(FormatError::malformed(n, format!("unknown gesture kind `{other}`"))),
            };
            let anchor = Vec2::new(parse_field(n, "x", f.next())?, parse_field(n, "y", f.next())?);
            let ids: String = parse_field(n, "finger_ids", f.next())?;
            let fingers = ids
                .split('+')
                .map(|s| s.parse().map_err(|_| FormatError::malformed(n, format!("bad finger id `{s}`"))))
                .collect::<Result<Vec<FingerId>, _>>()?;
            let tags: String = parse_field(n, "tool_tags", f.next())?;
            let tools: Vec<String> = tags.split('+').map(str::to_owned).collect();
            if tools.len() != fingers.len() {
                return Err(FormatError::malformed(n, "one tool tag per finger required"));
            }
            if f.next().is_some() {
                return Err(FormatError::malformed(n, "trailing fields"));
            }
            Ok(GestureEvent { t_ms, kind, anchor, fingers, tools })
        })
        .collect()
}
