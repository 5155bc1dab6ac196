//! Finger-to-shadow pairing and frame-to-frame finger identity.

use crate::geometry::{SceneConfig, Vec2};
use crate::hand::FingerId;

/// Half-angle of the cone, around the light-to-finger direction, in which a
/// finger's shadow may lie.
pub const MAX_SHADOW_ANGLE_DEG: f64 = 60.0;
/// Pair distances closer than this are ambiguous and resolved by finger id.
pub const AMBIGUITY_PX: f64 = 0.5;
pub const TRACK_GATE_PX: f64 = 30.0;

/// Pairs each finger tip with at most one shadow tip (both in pixels).
///
/// Greedy: the closest admissible pair is fixed first. A pair is admissible
/// when the finger-to-shadow displacement lies within
/// [`MAX_SHADOW_ANGLE_DEG`] of the lateral light-to-finger direction. When
/// several fingers are within [`AMBIGUITY_PX`] of the same shadow, the lowest
/// finger id wins. Returns, per finger, the index of its shadow.
pub fn match_fingers_to_shadows(
    finger_tips: &[Vec2],
    finger_ids: &[FingerId],
    shadow_tips: &[Vec2],
    scene: &SceneConfig,
) -> Vec<Option<usize>> {
    assert_eq!(finger_tips.len(), finger_ids.len());
    let cam = &scene.camera;
    let light = scene.light.position.xy();
    let min_cos = MAX_SHADOW_ANGLE_DEG.to_radians().cos();

    let mut candidates = Vec::new();
    for (fi, &ft) in finger_tips.iter().enumerate() {
        let finger_mm = cam.unproject(ft);
        let toward = finger_mm - light;
        for (si, &st) in shadow_tips.iter().enumerate() {
            let disp = cam.unproject(st) - finger_mm;
            let admissible = disp.norm() == 0.0
                || toward.norm() == 0.0
                || disp.dot(toward) >= min_cos * disp.norm() * toward.norm();
            if admissible {
                candidates.push((ft.distance(st), fi, si));
            }
        }
    }

    let mut pairing = vec![None; finger_tips.len()];
    let mut shadow_taken = vec![false; shadow_tips.len()];
    loop {
        let open = |&&(_, fi, si): &&(f64, usize, usize)| pairing[fi].is_none() && !shadow_taken[si];
        let Some(&(best, _, si)) = candidates
            .iter()
            .filter(open)
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        else {
            break;
        };
        let (_, fi, _) = *candidates
            .iter()
            .filter(open)
            .filter(|c| c.2 == si && c.0 <= best + AMBIGUITY_PX)
            .min_by_key(|c| finger_ids[c.1])
            .expect("the best candidate itself qualifies");
        pairing[fi] = Some(si);
        shadow_taken[si] = true;
    }
    pairing
}

/// Keeps finger identities stable across the frames of one trace.
///
/// The first frame numbers fingers left to right (thumb leftmost for a right
/// hand). Later frames follow each track by nearest neighbour within
/// [`TRACK_GATE_PX`]; a detection outside every gate takes over the closest
/// track that went unmatched, or opens a new id.
#[derive(Debug, Clone, Default)]
pub struct IdentityTracker {
    tracks: Vec<(FingerId, Vec2)>,
}

impl IdentityTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn reset(&mut self) {
        self.tracks.clear();
    }

    pub fn assign(&mut self, tips: &[Vec2]) -> Vec<FingerId> {
        if self.tracks.is_empty() {
            let mut order: Vec<usize> = (0..tips.len()).collect();
            order.sort_by(|&a, &b| tips[a].x.total_cmp(&tips[b].x).then(a.cmp(&b)));
            let mut ids = vec![FingerId(0); tips.len()];
            for (rank, &i) in order.iter().enumerate() {
                ids[i] = FingerId(rank as u8);
                self.tracks.push((ids[i], tips[i]));
            }
            self.tracks.sort_by_key(|t| t.0);
            return ids;
        }

        let mut assigned: Vec<Option<FingerId>> = vec![None; tips.len()];
        let mut track_used = vec![false; self.tracks.len()];
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (di, &tip) in tips.iter().enumerate() {
            for (ti, &(_, last)) in self.tracks.iter().enumerate() {
                let d = tip.distance(last);
                if d <= TRACK_GATE_PX {
                    pairs.push((d, di, ti));
                }
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        for (_, di, ti) in pairs {
            if assigned[di].is_none() && !track_used[ti] {
                assigned[di] = Some(self.tracks[ti].0);
                track_used[ti] = true;
            }
        }

        for di in 0..tips.len() {
            if assigned[di].is_some() {
                continue;
            }
            let free = (0..self.tracks.len())
                .filter(|&ti| !track_used[ti])
                .min_by(|&a, &b| {
                    tips[di]
                        .distance(self.tracks[a].1)
                        .total_cmp(&tips[di].distance(self.tracks[b].1))
                });
            match free {
                Some(ti) => {
                    assigned[di] = Some(self.tracks[ti].0);
                    track_used[ti] = true;
                }
                None => {
                    let next = self.tracks.iter().map(|t| t.0 .0).max().map_or(0, |m| m + 1);
                    self.tracks.push((FingerId(next), tips[di]));
                    track_used.push(true);
                    assigned[di] = Some(FingerId(next));
                }
            }
        }

        let ids: Vec<FingerId> = assigned.into_iter().map(|a| a.expect("every tip assigned")).collect();
        for (tip, id) in tips.iter().zip(&ids) {
            if let Some(track) = self.tracks.iter_mut().find(|t| t.0 == *id) {
                track.1 = *tip;
            }
        }
        ids
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scene() -> SceneConfig {
        SceneConfig::default()
    }

    fn px(x_mm: f64, y_mm: f64) -> Vec2 {
        scene().camera.project(crate::geometry::Vec3::new(x_mm, y_mm, 0.0)).unwrap()
    }

    #[test]
    fn single_pair_in_light_direction() {
        let m = match_fingers_to_shadows(&[px(50.0, 0.0)], &[FingerId(0)], &[px(60.0, 0.0)], &scene());
        assert_eq!(m, vec![Some(0)]);
    }

    #[test]
    fn shadow_toward_the_light_is_rejected() {
        let m = match_fingers_to_shadows(&[px(50.0, 0.0)], &[FingerId(0)], &[px(40.0, 0.0)], &scene());
        assert_eq!(m, vec![None]);
        // 70 degrees off the light direction
        let off = Vec2::new(10.0 * 70f64.to_radians().cos(), 10.0 * 70f64.to_radians().sin());
        let m = match_fingers_to_shadows(
            &[px(50.0, 0.0)],
            &[FingerId(0)],
            &[px(50.0 + off.x, off.y)],
            &scene(),
        );
        assert_eq!(m, vec![None]);
    }

    #[test]
    fn greedy_prefers_closest_and_each_shadow_once() {
        let fingers = [px(0.0, 0.0), px(40.0, 0.0)];
        let shadows = [px(55.0, 0.0), px(12.0, 0.0)];
        let m = match_fingers_to_shadows(&fingers, &[FingerId(0), FingerId(1)], &shadows, &scene());
        assert_eq!(m, vec![Some(1), Some(0)]);
        let m = match_fingers_to_shadows(&fingers, &[FingerId(0), FingerId(1)], &shadows[..1], &scene());
        assert_eq!(m, vec![None, Some(0)]);
    }

    #[test]
    fn equidistant_fingers_resolve_by_id() {
        // both fingers 10 px from the shadow, lateral light direction ~ +x
        let shadow = Vec2::new(420.0, 240.0);
        let a = 30f64.to_radians();
        let fingers = [Vec2::new(410.0, 240.0), Vec2::new(420.0 - 10.0 * a.cos(), 240.0 - 10.0 * a.sin())];
        let m = match_fingers_to_shadows(&fingers, &[FingerId(2), FingerId(1)], &[shadow], &scene());
        assert_eq!(m, vec![None, Some(0)]);
    }

    #[test]
    fn tracker_orders_left_to_right_then_follows() {
        let mut t = IdentityTracker::new();
        let ids = t.assign(&[Vec2::new(300.0, 10.0), Vec2::new(100.0, 10.0), Vec2::new(200.0, 10.0)]);
        assert_eq!(ids, vec![FingerId(2), FingerId(0), FingerId(1)]);
        // detections shuffled and moved a little
        let ids = t.assign(&[Vec2::new(105.0, 12.0), Vec2::new(295.0, 8.0), Vec2::new(210.0, 10.0)]);
        assert_eq!(ids, vec![FingerId(0), FingerId(2), FingerId(1)]);
        // a finger jumps beyond the gate: it keeps the only unmatched track
        let ids = t.assign(&[Vec2::new(105.0, 12.0), Vec2::new(295.0, 8.0), Vec2::new(260.0, 90.0)]);
        assert_eq!(ids, vec![FingerId(0), FingerId(2), FingerId(1)]);
        // an extra detection opens a new id
        let ids = t.assign(&[
            Vec2::new(105.0, 12.0),
            Vec2::new(295.0, 8.0),
            Vec2::new(260.0, 90.0),
            Vec2::new(500.0, 400.0),
        ]);
        assert_eq!(ids[3], FingerId(3));
    }
}
