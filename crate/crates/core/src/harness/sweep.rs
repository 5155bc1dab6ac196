//! Hover-resolution sweep: how low can a finger hover and still be told
//! apart from a touching one, with and without the shadow cue.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::geometry::{Vec2, Vec3};
use crate::hand::{FingerId, CONTACT_EPS_MM, FINGER_AXIS, FINGER_LENGTH_MM};
use crate::shadowsense::Sensor;
use crate::synthkit::render::mix_seed;
use crate::synthkit::{render_frame, FingerState, HandTraceRecord, NoiseModel};
use crate::touchfsm::TouchFsm;

use super::metrics::ConfusionCounts;
use super::{ConfigError, HarnessError, PipelineConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SweepMethod {
    /// Finger-to-shadow gap from the full sensing chain.
    Shadow,
    /// Apparent fingertip displacement from camera parallax alone.
    FingerOnly,
}

impl fmt::Display for SweepMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepMethod::Shadow => "shadow",
            SweepMethod::FingerOnly => "finger_only",
        })
    }
}

impl FromStr for SweepMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "shadow" => Ok(SweepMethod::Shadow),
            "finger_only" => Ok(SweepMethod::FingerOnly),
            _ => Err(format!("unknown method `{s}` (expected shadow or finger_only)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSettings {
    /// Traces per class (hover, contact) and height.
    pub traces_per_class: usize,
    pub frames_per_trace: usize,
    pub target_accuracy: f64,
    /// Accuracy drop below the running maximum that counts as a
    /// monotonicity violation.
    pub monotone_tolerance: f64,
    /// Lateral placement box of the fingertip, in mm.
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            traces_per_class: 200,
            frames_per_trace: 8,
            target_accuracy: 0.99,
            monotone_tolerance: 0.005,
            x_range: (40.0, 80.0),
            y_range: (-30.0, 30.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub height_mm: f64,
    pub counts: ConfusionCounts,
}

impl SweepPoint {
    pub fn accuracy(&self) -> f64 {
        self.counts.accuracy()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub method: SweepMethod,
    pub points: Vec<SweepPoint>,
    /// Smallest height reaching the target accuracy; `None` when no tested
    /// height does.
    pub min_separable_mm: Option<f64>,
    /// Heights whose accuracy fell below the best accuracy at lower heights.
    pub monotonicity_violations: Vec<f64>,
}

impl SweepResult {
    /// Orderable form of the result: "not separable" ranks above any height.
    pub fn rank(&self) -> f64 {
        self.min_separable_mm.unwrap_or(f64::INFINITY)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "method {}", self.method);
        for p in &self.points {
            let _ = writeln!(out, "  h {:>6.2} mm  accuracy {:.4}", p.height_mm, p.accuracy());
        }
        match self.min_separable_mm {
            Some(h) => {
                let _ = writeln!(out, "  minimal separable height {h} mm");
            }
            None => {
                let _ = writeln!(out, "  not separable in range");
            }
        }
        if !self.monotonicity_violations.is_empty() {
            let _ = writeln!(out, "  monotonicity violations at {:?} mm", self.monotonicity_violations);
        }
        out
    }

    pub fn to_kv(&self) -> String {
        let m = self.method;
        let mut out = String::new();
        for p in &self.points {
            let _ = writeln!(out, "{m}.accuracy.{}={:.6}", p.height_mm, p.accuracy());
        }
        let min = self.min_separable_mm.map_or("none".to_owned(), |h| h.to_string());
        let _ = writeln!(out, "{m}.min_separable_mm={min}");
        let _ = writeln!(out, "{m}.monotone={}", self.monotonicity_violations.is_empty());
        out
    }
}

/// Height-by-height sweep of both classifiers over the same rendered frames.
///
/// Each height gets `traces_per_class` static traces hovering at that height
/// and as many touching the surface, each at a random lateral position and
/// with per-frame jitter. Every frame is labeled by the method's contact
/// state machine; the first `n_down - 1` frames of a trace are excluded,
/// since no classifier can report contact before its debounce run completes.
pub fn sweep_methods(
    cfg: &PipelineConfig,
    heights: &[f64],
    methods: &[SweepMethod],
    settings: &SweepSettings,
) -> Result<Vec<SweepResult>, HarnessError> {
    if heights.windows(2).any(|w| !(w[0] < w[1])) || heights.iter().any(|h| !(*h > 0.0)) {
        return Err(ConfigError::Invalid("sweep heights must be positive and strictly ascending".into()).into());
    }
    cfg.validate()?;
    let jitter = Normal::new(0.0, cfg.noise.jitter_sigma_mm)
        .map_err(|e| ConfigError::Invalid(format!("jitter: {e}")))?;
    let warmup = cfg.touch.n_down.saturating_sub(1) as usize;
    let cam = cfg.scene.camera;

    let mut per_method: Vec<Vec<SweepPoint>> = vec![Vec::new(); methods.len()];
    for (hi, &h) in heights.iter().enumerate() {
        let mut counts = vec![ConfusionCounts::default(); methods.len()];
        for class_contact in [false, true] {
            let z = if class_contact { 0.0 } else { h };
            for k in 0..settings.traces_per_class {
                let seed = mix_seed(mix_seed(cfg.seed, hi as u64), (k as u64) << 1 | u64::from(class_contact));
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let base = Vec2::new(
                    rng.gen_range(settings.x_range.0..=settings.x_range.1),
                    rng.gen_range(settings.y_range.0..=settings.y_range.1),
                );
                let noise = NoiseModel { seed: rng.gen(), ..cfg.noise };
                let mut sensor = Sensor::new(cfg.scene, cfg.segmentation);
                let mut fsms: Vec<TouchFsm> =
                    methods.iter().map(|_| TouchFsm::new(FingerId::INDEX, cfg.touch)).collect();
                for f in 0..settings.frames_per_trace {
                    let xy = base + Vec2::new(jitter.sample(&mut rng), jitter.sample(&mut rng));
                    let tip = Vec3::from_xy(xy, z);
                    let t_ms = f as u64 * cfg.frame_period_ms;
                    let record = HandTraceRecord {
                        t_ms,
                        fingers: vec![FingerState { id: FingerId::INDEX, tip, contact: z <= CONTACT_EPS_MM }],
                    };
                    let frame = render_frame(&record, &cfg.scene, &noise)?;
                    let obs = sensor.observe(&frame);
                    let o = obs.first();
                    for (mi, method) in methods.iter().enumerate() {
                        let (feature, pos) = match (method, o) {
                            (_, None) => (None, xy),
                            (SweepMethod::Shadow, Some(o)) => (o.gap_mm, o.tip_mm),
                            (SweepMethod::FingerOnly, Some(o)) => {
                                // centroid of the seen footprint against the
                                // true footprint center on the surface
                                let mid = xy - FINGER_AXIS * (FINGER_LENGTH_MM / 2.0);
                                (Some(cam.unproject(o.centroid_px).distance(mid)), o.tip_mm)
                            }
                        };
                        fsms[mi].step_raw(t_ms, feature, pos)?;
                        if f >= warmup {
                            let c = &mut counts[mi];
                            match (fsms[mi].in_contact(), class_contact) {
                                (true, true) => c.tp += 1,
                                (true, false) => c.fp += 1,
                                (false, true) => c.fn_ += 1,
                                (false, false) => c.tn += 1,
                            }
                        }
                    }
                }
            }
        }
        for (mi, c) in counts.into_iter().enumerate() {
            per_method[mi].push(SweepPoint { height_mm: h, counts: c });
        }
    }

    Ok(methods
        .iter()
        .zip(per_method)
        .map(|(&method, points)| {
            let min_separable_mm =
                points.iter().find(|p| p.accuracy() >= settings.target_accuracy).map(|p| p.height_mm);
            let mut best = f64::NEG_INFINITY;
            let mut monotonicity_violations = Vec::new();
            for p in &points {
                if p.accuracy() + settings.monotone_tolerance < best {
                    monotonicity_violations.push(p.height_mm);
                }
                best = best.max(p.accuracy());
            }
            SweepResult { method, points, min_separable_mm, monotonicity_violations }
        })
        .collect())
}

/// Single-method sweep with default settings.
pub fn hover_resolution_sweep(
    cfg: &PipelineConfig,
    heights: &[f64],
    method: SweepMethod,
) -> Result<SweepResult, HarnessError> {
    Ok(sweep_methods(cfg, heights, &[method], &SweepSettings::default())?.remove(0))
}

/// Report header plus each method's table.
pub fn format_sweep(results: &[SweepResult], settings: &SweepSettings) -> String {
    let mut out = String::from("hover-resolution sweep (synthetic surrogate: rendered frames, not camera captures)\n");
    let _ = writeln!(
        out,
        "{} hover and {} contact traces per height, {} frames each, target accuracy {}",
        settings.traces_per_class, settings.traces_per_class, settings.frames_per_trace, settings.target_accuracy
    );
    for r in results {
        out.push_str(&r.to_text());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SweepSettings {
        SweepSettings { traces_per_class: 6, frames_per_trace: 5, ..SweepSettings::default() }
    }

    #[test]
    fn heights_must_ascend() {
        let cfg = PipelineConfig::default();
        assert!(sweep_methods(&cfg, &[2.0, 1.0], &[SweepMethod::Shadow], &small()).is_err());
        assert!(sweep_methods(&cfg, &[0.0, 1.0], &[SweepMethod::Shadow], &small()).is_err());
    }

    #[test]
    fn noiseless_shadow_separates_at_first_height_above_threshold() {
        let cfg = PipelineConfig { noise: NoiseModel::NONE, ..PipelineConfig::default() };
        let heights: Vec<f64> = (1..=4).map(f64::from).collect();
        let r = sweep_methods(&cfg, &heights, &[SweepMethod::Shadow], &small()).unwrap();
        // the analytic gap at 1 mm already exceeds t_down everywhere in the box
        assert_eq!(r[0].min_separable_mm, Some(1.0));
        assert!(r[0].monotonicity_violations.is_empty());
    }

    #[test]
    fn rank_puts_unseparable_last() {
        let r = SweepResult {
            method: SweepMethod::FingerOnly,
            points: vec![],
            min_separable_mm: None,
            monotonicity_violations: vec![],
        };
        assert!(r.rank() > 1e9);
    }

    #[test]
    fn method_names_round_trip() {
        for m in [SweepMethod::Shadow, SweepMethod::FingerOnly] {
            assert_eq!(m.to_string().parse::<SweepMethod>().unwrap(), m);
        }
    }
}
