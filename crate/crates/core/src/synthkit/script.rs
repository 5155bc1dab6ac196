//! Parametric finger-motion scripts and the traces they generate.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::SynthError;
use crate::geometry::{shadow_project, SceneConfig, Vec2, Vec3};
use crate::hand::{
    hand_layout, Direction, FingerId, CONTACT_EPS_MM, FINGER_AXIS, FINGER_LENGTH_MM,
    FINGER_RADIUS_MM,
};

/// Minimum clearance between two finger silhouettes on the surface.
const MIN_FINGER_CLEARANCE_MM: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FingerState {
    pub id: FingerId,
    pub tip: Vec3,
    pub contact: bool,
}

/// One frame of ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct HandTraceRecord {
    pub t_ms: u64,
    pub fingers: Vec<FingerState>,
}

impl HandTraceRecord {
    pub fn finger(&self, id: FingerId) -> Option<&FingerState> {
        self.fingers.iter().find(|f| f.id == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScriptKind {
    Tap { finger: FingerId },
    Swipe { direction: Direction, n_fingers: u8 },
    Pinch { scale: f64, rotation_rad: f64, pan: Vec2 },
    /// Index-finger tap on a keyboard key.
    TypeKey,
    /// Middle-finger horizontal swipe moving a text cursor.
    CursorSwipe { direction: Direction },
}

impl ScriptKind {
    pub fn label(&self) -> &'static str {
        match self {
            ScriptKind::Tap { .. } => "tap",
            ScriptKind::Swipe { .. } => "swipe",
            ScriptKind::Pinch { .. } => "pinch",
            ScriptKind::TypeKey => "type_key",
            ScriptKind::CursorSwipe { .. } => "cursor_swipe",
        }
    }

    pub fn involved_fingers(&self) -> Vec<FingerId> {
        match *self {
            ScriptKind::Tap { finger } => vec![finger],
            ScriptKind::Swipe { n_fingers: 1, .. } => vec![FingerId::INDEX],
            ScriptKind::Swipe { .. } => vec![FingerId::INDEX, FingerId::MIDDLE],
            ScriptKind::Pinch { .. } => vec![FingerId::THUMB, FingerId::INDEX],
            ScriptKind::TypeKey => vec![FingerId::INDEX],
            ScriptKind::CursorSwipe { .. } => vec![FingerId::MIDDLE],
        }
    }

    /// The gesture a correct recognizer reports for this script, in the
    /// summary notation used by the evaluator (`tap:1`, `swipe:up:1+2`, ...).
    pub fn expected_gesture(&self) -> String {
        let fingers = join_fingers(&self.involved_fingers());
        match *self {
            ScriptKind::Tap { .. } | ScriptKind::TypeKey => format!("tap:{fingers}"),
            ScriptKind::Swipe { direction, .. } | ScriptKind::CursorSwipe { direction } => {
                format!("swipe:{direction}:{fingers}")
            }
            ScriptKind::Pinch { .. } => format!("pinch:{fingers}"),
        }
    }
}

pub(crate) fn join_fingers(fingers: &[FingerId]) -> String {
    fingers
        .iter()
        .map(|f| f.to_string())
        .collect::<Vec<_>>()
        .join("+")
}

#[derive(Debug, Clone, PartialEq)]
pub struct GestureScript {
    pub kind: ScriptKind,
    /// Tip positions of thumb, index and middle at the start of the trace.
    pub start: [Vec2; 3],
    /// Swipe travel in mm; unused by taps and pinches.
    pub amplitude_mm: f64,
    pub duration_ms: u64,
    /// Idle hover time before and after the gesture, included in the duration.
    pub lead_ms: u64,
    pub hover_ceiling_mm: f64,
    /// Height of fingers not taking part in the gesture.
    pub rest_height_mm: f64,
    pub jitter_sigma_mm: f64,
    pub seed: u64,
}

impl GestureScript {
    fn base(kind: ScriptKind, index_tip: Vec2) -> Self {
        Self {
            kind,
            start: hand_layout(index_tip),
            amplitude_mm: 0.0,
            duration_ms: 300,
            lead_ms: 0,
            hover_ceiling_mm: 10.0,
            rest_height_mm: 5.0,
            jitter_sigma_mm: 0.0,
            seed: 0,
        }
    }

    pub fn tap(finger: FingerId, index_tip: Vec2) -> Self {
        Self::base(ScriptKind::Tap { finger }, index_tip)
    }

    pub fn type_key(index_tip: Vec2) -> Self {
        Self::base(ScriptKind::TypeKey, index_tip)
    }

    pub fn swipe(direction: Direction, n_fingers: u8, amplitude_mm: f64, index_tip: Vec2) -> Self {
        Self {
            amplitude_mm,
            duration_ms: 600,
            ..Self::base(ScriptKind::Swipe { direction, n_fingers }, index_tip)
        }
    }

    pub fn cursor_swipe(direction: Direction, amplitude_mm: f64, index_tip: Vec2) -> Self {
        Self {
            amplitude_mm,
            duration_ms: 600,
            ..Self::base(ScriptKind::CursorSwipe { direction }, index_tip)
        }
    }

    /// Thumb and index start at the given tips; the middle finger rests clear
    /// of both.
    pub fn pinch(scale: f64, rotation_rad: f64, pan: Vec2, thumb: Vec2, index: Vec2) -> Self {
        let mut script = Self::base(ScriptKind::Pinch { scale, rotation_rad, pan }, index);
        script.start = [thumb, index, index + Vec2::new(45.0, 10.0)];
        script.duration_ms = 600;
        script
    }

    pub fn with_lead(mut self, lead_ms: u64) -> Self {
        self.lead_ms = lead_ms;
        self
    }

    pub fn with_duration(mut self, duration_ms: u64) -> Self {
        self.duration_ms = duration_ms;
        self
    }

    pub fn with_jitter(mut self, sigma_mm: f64) -> Self {
        self.jitter_sigma_mm = sigma_mm;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn label(&self) -> &'static str {
        self.kind.label()
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidScript(m.to_string()));
        if self.duration_ms == 0 {
            return bad("duration must be positive");
        }
        if !(self.amplitude_mm >= 0.0) || !self.amplitude_mm.is_finite() {
            return bad("amplitude must be non-negative");
        }
        if !(self.hover_ceiling_mm > CONTACT_EPS_MM) || !self.hover_ceiling_mm.is_finite() {
            return bad("hover ceiling must be above the contact threshold");
        }
        if !(self.rest_height_mm > CONTACT_EPS_MM) || !self.rest_height_mm.is_finite() {
            return bad("rest height must be above the contact threshold");
        }
        if !(self.jitter_sigma_mm >= 0.0) {
            return bad("jitter sigma must be non-negative");
        }
        if self.start.iter().any(|p| !p.is_finite()) {
            return bad("start positions must be finite");
        }
        match self.kind {
            ScriptKind::Swipe { n_fingers, .. } if !(1..=2).contains(&n_fingers) => {
                bad("swipes use one or two fingers")
            }
            ScriptKind::Tap { finger } if finger.index() >= 3 => bad("unknown finger"),
            ScriptKind::Pinch { scale, rotation_rad, pan } => {
                if !(scale > 0.0) || !scale.is_finite() || !rotation_rad.is_finite() || !pan.is_finite()
                {
                    bad("pinch transform must be finite with positive scale")
                } else if self.start[0].distance(self.start[1]) < 1e-6 {
                    bad("pinch start points coincide")
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// Frame-index schedule of one script.
struct Phases {
    frames: usize,
    lead: usize,
    descent: usize,
    contact: usize,
}

impl Phases {
    fn new(script: &GestureScript, period_ms: u64) -> Result<Self, SynthError> {
        let frames = (script.duration_ms / period_ms) as usize;
        let lead = (script.lead_ms / period_ms) as usize;
        let core = frames.checked_sub(2 * lead).unwrap_or(0);
        let descent_share = match script.kind {
            ScriptKind::Tap { .. } | ScriptKind::TypeKey => 0.35,
            _ => 0.25,
        };
        let descent = (core as f64 * descent_share).round() as usize;
        let contact = core.saturating_sub(2 * descent);
        let min_contact = match script.kind {
            ScriptKind::Tap { .. } | ScriptKind::TypeKey => 3,
            _ => 2,
        };
        if descent == 0 || contact < min_contact {
            return Err(SynthError::InvalidScript(format!(
                "duration {} ms with lead {} ms leaves too few frames for the gesture",
                script.duration_ms, script.lead_ms
            )));
        }
        Ok(Self { frames, lead, descent, contact })
    }

    /// Height of an active finger at frame `i`.
    fn active_height(&self, i: usize, ceiling: f64) -> f64 {
        let descent_start = self.lead;
        let contact_start = descent_start + self.descent;
        let ascent_start = contact_start + self.contact;
        if i < descent_start {
            ceiling
        } else if i < contact_start {
            // quarter sine: leaves the ceiling at rest, meets the surface moving
            let j = (i - descent_start) as f64;
            ceiling * (0.5 * PI * j / self.descent as f64).cos()
        } else if i < ascent_start {
            0.0
        } else {
            let j = (i + 1 - ascent_start).min(self.descent) as f64;
            ceiling * (0.5 * PI * j / self.descent as f64).sin()
        }
    }

    /// Eased progress of the in-contact motion, 0 before it and 1 after.
    fn progress(&self, i: usize) -> f64 {
        let contact_start = self.lead + self.descent;
        if i <= contact_start {
            return 0.0;
        }
        let j = i - contact_start;
        if j >= self.contact - 1 {
            return 1.0;
        }
        0.5 * (1.0 - (PI * j as f64 / (self.contact - 1) as f64).cos())
    }
}

/// Similarity transform about `center`: scale and rotate, then translate.
pub fn apply_similarity(p: Vec2, center: Vec2, scale: f64, rotation_rad: f64, pan: Vec2) -> Vec2 {
    center + pan + (p - center).rotated(rotation_rad) * scale
}

/// Generates the ground-truth trace of a script.
pub fn generate_trace(
    script: &GestureScript,
    frame_period_ms: u64,
    scene: &SceneConfig,
) -> Result<Vec<HandTraceRecord>, SynthError> {
    if frame_period_ms == 0 {
        return Err(SynthError::InvalidScript("frame period must be positive".into()));
    }
    script.validate()?;
    let max_height = script.hover_ceiling_mm.max(script.rest_height_mm);
    scene.validate_for_hover(max_height)?;
    let phases = Phases::new(script, frame_period_ms)?;
    let involved = script.kind.involved_fingers();

    let mut rng = ChaCha8Rng::seed_from_u64(script.seed);
    let jitter = Normal::new(0.0, script.jitter_sigma_mm)
        .map_err(|e| SynthError::InvalidScript(e.to_string()))?;
    let pinch_center = script.start[0].midpoint(script.start[1]);

    let mut records = Vec::with_capacity(phases.frames);
    for i in 0..phases.frames {
        let t_ms = i as u64 * frame_period_ms;
        let p = phases.progress(i);
        let mut fingers = Vec::with_capacity(3);
        for id in FingerId::ALL {
            let start = script.start[id.index()];
            let active = involved.contains(&id);
            let xy = match script.kind {
                ScriptKind::Swipe { direction, .. } | ScriptKind::CursorSwipe { direction } => {
                    start + direction.unit() * (script.amplitude_mm * p)
                }
                ScriptKind::Pinch { scale, rotation_rad, pan } if active => apply_similarity(
                    start,
                    pinch_center,
                    1.0 + (scale - 1.0) * p,
                    rotation_rad * p,
                    pan * p,
                ),
                _ => start,
            };
            let z = if active {
                phases.active_height(i, script.hover_ceiling_mm)
            } else {
                script.rest_height_mm
            };
            let noise = if script.jitter_sigma_mm > 0.0 {
                Vec2::new(jitter.sample(&mut rng), jitter.sample(&mut rng))
            } else {
                Vec2::ZERO
            };
            let tip = Vec3::from_xy(xy + noise, z);
            fingers.push(FingerState { id, tip, contact: tip.z <= CONTACT_EPS_MM });
        }
        let record = HandTraceRecord { t_ms, fingers };
        check_visible(&record, scene)?;
        check_clearance(&record, scene)?;
        records.push(record);
    }
    Ok(records)
}

/// Every finger silhouette and every shadow tip must fall inside the image.
pub fn check_visible(record: &HandTraceRecord, scene: &SceneConfig) -> Result<(), SynthError> {
    let cam = &scene.camera;
    let light_z = scene.light.position.z;
    for f in &record.fingers {
        let out = || SynthError::OutOfView { t_ms: record.t_ms, finger: f.id };
        let r = FINGER_RADIUS_MM;
        let tip = f.tip;
        let proximal = Vec3::from_xy(tip.xy() - FINGER_AXIS * FINGER_LENGTH_MM, tip.z);
        let side = Vec2::new(FINGER_AXIS.y, -FINGER_AXIS.x) * r;
        let probes = [
            Vec3::from_xy(tip.xy() + FINGER_AXIS * r, tip.z),
            Vec3::from_xy(tip.xy() + side, tip.z),
            Vec3::from_xy(tip.xy() - side, tip.z),
            Vec3::from_xy(proximal.xy() - FINGER_AXIS * r, tip.z),
        ];
        for probe in probes {
            if !cam.contains_px(cam.project(probe)?) {
                return Err(out());
            }
        }
        let shadow = shadow_project(tip, &scene.light)?;
        let rs = r * light_z / (light_z - tip.z);
        let shadow_probes = [
            shadow + FINGER_AXIS * rs,
            shadow + Vec2::new(FINGER_AXIS.y, -FINGER_AXIS.x) * rs,
            shadow - Vec2::new(FINGER_AXIS.y, -FINGER_AXIS.x) * rs,
        ];
        for s in shadow_probes {
            if !cam.contains_px(cam.project(Vec3::from_xy(s, 0.0))?) {
                return Err(out());
            }
        }
    }
    Ok(())
}

fn check_clearance(record: &HandTraceRecord, scene: &SceneConfig) -> Result<(), SynthError> {
    let cam = &scene.camera;
    let mut footprints = Vec::with_capacity(record.fingers.len());
    for f in &record.fingers {
        let proximal = Vec3::from_xy(f.tip.xy() - FINGER_AXIS * FINGER_LENGTH_MM, f.tip.z);
        let scale = cam.center.z / (cam.center.z - f.tip.z);
        footprints.push((
            cam.apparent_on_surface(f.tip)?,
            cam.apparent_on_surface(proximal)?,
            FINGER_RADIUS_MM * scale,
        ));
    }
    for i in 0..footprints.len() {
        for j in i + 1..footprints.len() {
            let (a0, a1, ra) = footprints[i];
            let (b0, b1, rb) = footprints[j];
            if segment_distance(a0, a1, b0, b1) < ra + rb + MIN_FINGER_CLEARANCE_MM {
                return Err(SynthError::Collision {
                    t_ms: record.t_ms,
                    a: record.fingers[i].id,
                    b: record.fingers[j].id,
                });
            }
        }
    }
    Ok(())
}

pub(crate) fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    let t = if len2 > 0.0 { ((p - a).dot(ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    p.distance(a + ab * t)
}

fn segment_distance(a0: Vec2, a1: Vec2, b0: Vec2, b1: Vec2) -> f64 {
    let d1 = a1 - a0;
    let d2 = b1 - b0;
    let crosses = |p: Vec2, q: Vec2, r: Vec2, s: Vec2| {
        let o1 = (q - p).perp_dot(r - p);
        let o2 = (q - p).perp_dot(s - p);
        let o3 = (s - r).perp_dot(p - r);
        let o4 = (s - r).perp_dot(q - r);
        o1 * o2 < 0.0 && o3 * o4 < 0.0
    };
    if d1.perp_dot(d2) != 0.0 && crosses(a0, a1, b0, b1) {
        return 0.0;
    }
    point_segment_distance(a0, b0, b1)
        .min(point_segment_distance(a1, b0, b1))
        .min(point_segment_distance(b0, a0, a1))
        .min(point_segment_distance(b1, a0, a1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scene() -> SceneConfig {
        SceneConfig::default()
    }

    fn contact_runs(trace: &[HandTraceRecord], id: FingerId) -> Vec<(usize, usize)> {
        let mut runs = Vec::new();
        let mut start = None;
        for (i, r) in trace.iter().enumerate() {
            let c = r.finger(id).unwrap().contact;
            match (c, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    runs.push((s, i - s));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            runs.push((s, trace.len() - s));
        }
        runs
    }

    #[test]
    fn tap_has_one_contact_run() {
        let script = GestureScript::tap(FingerId::INDEX, Vec2::new(0.0, 0.0));
        let trace = generate_trace(&script, 10, &scene()).unwrap();
        assert_eq!(trace.len(), 30);
        let runs = contact_runs(&trace, FingerId::INDEX);
        assert_eq!(runs.len(), 1);
        assert!(runs[0].1 >= 3);
        assert!(contact_runs(&trace, FingerId::THUMB).is_empty());
        assert!(contact_runs(&trace, FingerId::MIDDLE).is_empty());
        // strictly increasing timestamps at the frame period
        for w in trace.windows(2) {
            assert_eq!(w[1].t_ms - w[0].t_ms, 10);
        }
    }

    #[test]
    fn swipe_travels_its_amplitude() {
        let script = GestureScript::swipe(Direction::Right, 1, 30.0, Vec2::new(-20.0, 0.0));
        let trace = generate_trace(&script, 10, &scene()).unwrap();
        let contacts: Vec<Vec3> = trace
            .iter()
            .filter_map(|r| r.finger(FingerId::INDEX).filter(|f| f.contact).map(|f| f.tip))
            .collect();
        let first = contacts.first().unwrap();
        let last = contacts.last().unwrap();
        assert!((last.x - first.x - 30.0).abs() < 0.01);
        assert!((last.y - first.y).abs() < 1e-12);
        assert!(contacts.iter().all(|t| t.z == 0.0));
    }

    #[test]
    fn swipe_y_drift_stays_within_jitter() {
        let sigma = 0.3;
        let script = GestureScript::swipe(Direction::Right, 1, 30.0, Vec2::new(-20.0, 0.0))
            .with_jitter(sigma)
            .with_seed(11);
        let trace = generate_trace(&script, 10, &scene()).unwrap();
        let contacts: Vec<Vec3> = trace
            .iter()
            .filter_map(|r| r.finger(FingerId::INDEX).filter(|f| f.contact).map(|f| f.tip))
            .collect();
        let (first, last) = (contacts[0], contacts[contacts.len() - 1]);
        // difference of two independent draws: 5 sigma of sqrt(2) sigma
        assert!((last.y - first.y).abs() <= 5.0 * sigma * 2f64.sqrt());
        assert!((last.x - first.x - 30.0).abs() <= 5.0 * sigma * 2f64.sqrt());
    }

    #[test]
    fn pinch_applies_similarity_about_centroid() {
        let script = GestureScript::pinch(
            1.5,
            0.0,
            Vec2::ZERO,
            Vec2::new(0.0, 0.0),
            Vec2::new(20.0, 0.0),
        );
        let trace = generate_trace(&script, 10, &scene()).unwrap();
        let last_contact = trace
            .iter()
            .filter(|r| r.finger(FingerId::THUMB).unwrap().contact)
            .last()
            .unwrap();
        let thumb = last_contact.finger(FingerId::THUMB).unwrap().tip;
        let index = last_contact.finger(FingerId::INDEX).unwrap().tip;
        assert!((thumb.x + 5.0).abs() < 0.01 && thumb.y.abs() < 0.01);
        assert!((index.x - 25.0).abs() < 0.01 && index.y.abs() < 0.01);
    }

    #[test]
    fn contact_flag_follows_height() {
        let script = GestureScript::swipe(Direction::Up, 2, 25.0, Vec2::new(0.0, -30.0))
            .with_jitter(0.3)
            .with_seed(3);
        for r in generate_trace(&script, 10, &scene()).unwrap() {
            for f in r.fingers {
                assert!(f.tip.z >= 0.0);
                assert_eq!(f.contact, f.tip.z <= CONTACT_EPS_MM);
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let script = GestureScript::tap(FingerId::THUMB, Vec2::new(10.0, 0.0))
            .with_jitter(0.3)
            .with_seed(99);
        let a = generate_trace(&script, 10, &scene()).unwrap();
        let b = generate_trace(&script, 10, &scene()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_out_of_view_and_invalid_scripts() {
        let far = GestureScript::tap(FingerId::INDEX, Vec2::new(150.0, 0.0));
        assert!(matches!(
            generate_trace(&far, 10, &scene()),
            Err(SynthError::OutOfView { .. })
        ));
        let too_short = GestureScript::tap(FingerId::INDEX, Vec2::ZERO).with_duration(40);
        assert!(matches!(
            generate_trace(&too_short, 10, &scene()),
            Err(SynthError::InvalidScript(_))
        ));
        let three = GestureScript::swipe(Direction::Up, 3, 20.0, Vec2::ZERO);
        assert!(generate_trace(&three, 10, &scene()).is_err());
        let zero = GestureScript::tap(FingerId::INDEX, Vec2::ZERO).with_duration(0);
        assert!(generate_trace(&zero, 10, &scene()).is_err());
    }

    #[test]
    fn rejects_colliding_fingers() {
        let script = GestureScript::pinch(
            1.0,
            0.0,
            Vec2::ZERO,
            Vec2::new(0.0, 0.0),
            Vec2::new(8.0, 0.0),
        );
        assert!(matches!(
            generate_trace(&script, 10, &scene()),
            Err(SynthError::Collision { .. })
        ));
    }

    #[test]
    fn segment_distance_cases() {
        let d = segment_distance(
            Vec2::new(0.0, 0.0),
            Vec2::new(0.0, 10.0),
            Vec2::new(3.0, 2.0),
            Vec2::new(3.0, 8.0),
        );
        assert!((d - 3.0).abs() < 1e-12);
        let d = segment_distance(
            Vec2::new(0.0, 0.0),
            Vec2::new(10.0, 10.0),
            Vec2::new(0.0, 10.0),
            Vec2::new(10.0, 0.0),
        );
        assert_eq!(d, 0.0);
    }
}
