//! Per-frame finger observations: segment finger and shadow regions, find
//! their tips, pair them, and measure the finger-shadow gap on the surface.

pub mod matching;
pub mod segment;
pub mod tips;

use std::fmt::Write as _;

use crate::geometry::{CameraModel, SceneConfig, Vec2};
use crate::hand::{FingerId, FINGER_AXIS};
use crate::synthkit::Frame;
use crate::textio::{data_lines, fmt_opt, parse_bool01, parse_field, parse_opt, FormatError};

pub use matching::{match_fingers_to_shadows, IdentityTracker};
pub use segment::{segment, Component, Segmentation, SegmentationThresholds};
pub use tips::{locate_tip, locate_tips};

#[derive(Debug, Clone, PartialEq)]
pub struct FingerObservation {
    pub t_ms: u64,
    pub finger_id: FingerId,
    pub tip_px: Vec2,
    /// Tip mapped onto the surface through the plane homography.
    pub tip_mm: Vec2,
    /// Centroid of the finger region, in pixels.
    pub centroid_px: Vec2,
    pub shadow_tip_px: Option<Vec2>,
    pub gap_mm: Option<f64>,
    /// No separate shadow: the finger covers its own shadow.
    pub merged: bool,
}

/// Finger-shadow gap in surface mm; 0 when merged, absent without a shadow.
pub fn measure_gap(
    tip_px: Vec2,
    shadow_tip_px: Option<Vec2>,
    merged: bool,
    cam: &CameraModel,
) -> Option<f64> {
    if merged {
        return Some(0.0);
    }
    shadow_tip_px.map(|s| cam.unproject(tip_px).distance(cam.unproject(s)))
}

/// Frame-to-observation extractor for one trace. Holds the identity tracker,
/// so frames of a trace must be fed in order.
#[derive(Debug, Clone)]
pub struct Sensor {
    pub scene: SceneConfig,
    pub thresholds: SegmentationThresholds,
    /// Finger direction in the image, used to find tips.
    pub axis: Vec2,
    tracker: IdentityTracker,
}

impl Sensor {
    pub fn new(scene: SceneConfig, thresholds: SegmentationThresholds) -> Self {
        Self { scene, thresholds, axis: FINGER_AXIS, tracker: IdentityTracker::new() }
    }

    /// Forget finger identities before starting another trace.
    pub fn reset(&mut self) {
        self.tracker.reset();
    }

    /// Observations of one frame, sorted by finger id.
    pub fn observe(&mut self, frame: &Frame) -> Vec<FingerObservation> {
        let seg = segment(frame, &self.thresholds);
        self.observe_segmentation(frame.t_ms, &seg)
    }

    pub fn observe_segmentation(&mut self, t_ms: u64, seg: &Segmentation) -> Vec<FingerObservation> {
        let cam = &self.scene.camera;
        let finger_tips = locate_tips(&seg.fingers, self.axis);
        let shadow_tips = locate_tips(&seg.shadows, self.axis);
        let ids = self.tracker.assign(&finger_tips);
        let pairing = match_fingers_to_shadows(&finger_tips, &ids, &shadow_tips, &self.scene);

        let mut out: Vec<FingerObservation> = finger_tips
            .iter()
            .enumerate()
            .map(|(i, &tip_px)| {
                let shadow_tip_px = pairing[i].map(|s| shadow_tips[s]);
                // A finger cut by the image border may have its shadow
                // outside the frame, so only interior fingers count as merged.
                let merged = shadow_tip_px.is_none() && !seg.fingers[i].touches_border;
                FingerObservation {
                    t_ms,
                    finger_id: ids[i],
                    tip_px,
                    tip_mm: cam.unproject(tip_px),
                    centroid_px: seg.fingers[i].centroid,
                    shadow_tip_px,
                    gap_mm: measure_gap(tip_px, shadow_tip_px, merged, cam),
                    merged,
                }
            })
            .collect();
        out.sort_by_key(|o| o.finger_id);
        out
    }
}

/// `t_ms finger_id tip_u tip_v shadow_u shadow_v gap_mm merged`, absent
/// values written as `-`.
pub fn format_observations(obs: &[FingerObservation]) -> String {
    let mut out = String::from("# t_ms finger_id tip_u tip_v shadow_u shadow_v gap_mm merged\n");
    for o in obs {
        let _ = writeln!(
            out,
            "{} {} {:.4} {:.4} {} {} {} {}",
            o.t_ms,
            o.finger_id,
            o.tip_px.x,
            o.tip_px.y,
            fmt_opt(o.shadow_tip_px.map(|s| s.x)),
            fmt_opt(o.shadow_tip_px.map(|s| s.y)),
            fmt_opt(o.gap_mm),
            u8::from(o.merged)
        );
    }
    out
}

/// Reads an observation dump back. The surface position is recomputed from
/// the tip pixel; the centroid is not stored and is set to the tip.
pub fn parse_observations(text: &str, cam: &CameraModel) -> Result<Vec<FingerObservation>, FormatError> {
    data_lines(text)
        .map(|(n, line)| {
            let mut f = line.split_whitespace();
            let t_ms = parse_field(n, "t_ms", f.next())?;
            let finger_id = parse_field(n, "finger_id", f.next())?;
            let tip_px = Vec2::new(parse_field(n, "tip_u", f.next())?, parse_field(n, "tip_v", f.next())?);
            let su: Option<f64> = parse_opt(n, "shadow_u", f.next())?;
            let sv: Option<f64> = parse_opt(n, "shadow_v", f.next())?;
            let gap_mm = parse_opt(n, "gap_mm", f.next())?;
            let merged = parse_bool01(n, "merged", f.next())?;
            if f.next().is_some() {
                return Err(FormatError::malformed(n, "trailing fields"));
            }
            let shadow_tip_px = match (su, sv) {
                (Some(u), Some(v)) => Some(Vec2::new(u, v)),
                (None, None) => None,
                _ => return Err(FormatError::malformed(n, "shadow_u and shadow_v must both be present")),
            };
            if merged && gap_mm != Some(0.0) {
                return Err(FormatError::malformed(n, "merged observation must have gap 0"));
            }
            Ok(FingerObservation {
                t_ms,
                finger_id,
                tip_px,
                tip_mm: cam.unproject(tip_px),
                centroid_px: tip_px,
                shadow_tip_px,
                gap_mm,
                merged,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measure_gap_cases() {
        let cam = CameraModel::default();
        assert_eq!(measure_gap(Vec2::new(10.0, 10.0), None, true, &cam), Some(0.0));
        assert_eq!(measure_gap(Vec2::new(10.0, 10.0), None, false, &cam), None);
        let g = measure_gap(Vec2::new(320.0, 240.0), Some(Vec2::new(332.0, 240.0)), false, &cam);
        assert!((g.unwrap() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn observation_dump_round_trip() {
        let cam = CameraModel::default();
        let obs = vec![
            FingerObservation {
                t_ms: 10,
                finger_id: FingerId(1),
                tip_px: Vec2::new(320.0, 252.0),
                tip_mm: cam.unproject(Vec2::new(320.0, 252.0)),
                centroid_px: Vec2::new(320.0, 252.0),
                shadow_tip_px: Some(Vec2::new(332.0, 252.0)),
                gap_mm: Some(6.0),
                merged: false,
            },
            FingerObservation {
                t_ms: 10,
                finger_id: FingerId(2),
                tip_px: Vec2::new(400.0, 250.0),
                tip_mm: cam.unproject(Vec2::new(400.0, 250.0)),
                centroid_px: Vec2::new(400.0, 250.0),
                shadow_tip_px: None,
                gap_mm: Some(0.0),
                merged: true,
            },
        ];
        let text = format_observations(&obs);
        assert_eq!(parse_observations(&text, &cam).unwrap(), obs);
        assert!(parse_observations("10 1 3 4 - 5 - 0\n", &cam).is_err());
    }
}
