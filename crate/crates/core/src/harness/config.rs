//! Flat `key = value` pipeline configuration.

use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::geometry::SceneConfig;
use crate::gesture::GestureParams;
use crate::shadowsense::SegmentationThresholds;
use crate::synthkit::NoiseModel;
use crate::touchfsm::TouchParams;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("config line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub scene: SceneConfig,
    /// The noise seed is not part of the file; it is derived per trace.
    pub noise: NoiseModel,
    pub segmentation: SegmentationThresholds,
    pub touch: TouchParams,
    pub gesture: GestureParams,
    pub frame_period_ms: u64,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            scene: SceneConfig::default(),
            noise: NoiseModel::default(),
            segmentation: SegmentationThresholds::default(),
            touch: TouchParams::default(),
            gesture: GestureParams::default(),
            frame_period_ms: 10,
            seed: 0,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
    value.parse().map_err(|_| format!("bad value `{value}` for `{key}`"))
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| ConfigError::Invalid(m);
        self.scene.validate().map_err(|e| invalid(e.to_string()))?;
        self.noise.validate().map_err(|e| invalid(e.to_string()))?;
        self.segmentation.validate().map_err(invalid)?;
        self.touch.validate().map_err(invalid)?;
        self.gesture.validate().map_err(invalid)?;
        if self.frame_period_ms == 0 {
            return Err(invalid("frame_period_ms must be positive".into()));
        }
        Ok(())
    }

    /// Every key with its current value, in file order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let l = self.scene.light.position;
        let c = &self.scene.camera;
        let (s, t, g) = (&self.segmentation, &self.touch, &self.gesture);
        vec![
            ("light.x", l.x.to_string()),
            ("light.y", l.y.to_string()),
            ("light.z", l.z.to_string()),
            ("camera.x", c.center.x.to_string()),
            ("camera.y", c.center.y.to_string()),
            ("camera.z", c.center.z.to_string()),
            ("camera.focal_px", c.focal_px.to_string()),
            ("camera.u0", c.principal_point.x.to_string()),
            ("camera.v0", c.principal_point.y.to_string()),
            ("camera.width", c.width.to_string()),
            ("camera.height", c.height.to_string()),
            ("noise.pixel_sigma", self.noise.pixel_sigma.to_string()),
            ("noise.jitter_sigma_mm", self.noise.jitter_sigma_mm.to_string()),
            ("segmentation.finger_min", s.finger_min.to_string()),
            ("segmentation.shadow_max", s.shadow_max.to_string()),
            ("segmentation.min_component_px", s.min_component_px.to_string()),
            ("touch.t_down_mm", t.t_down_mm.to_string()),
            ("touch.t_up_mm", t.t_up_mm.to_string()),
            ("touch.n_down", t.n_down.to_string()),
            ("touch.n_up", t.n_up.to_string()),
            ("touch.move_eps_mm", t.move_eps_mm.to_string()),
            ("gesture.tap_max_ms", g.tap_max_ms.to_string()),
            ("gesture.tap_max_disp_mm", g.tap_max_disp_mm.to_string()),
            ("gesture.swipe_min_mm", g.swipe_min_mm.to_string()),
            ("gesture.two_finger_overlap_ms", g.two_finger_overlap_ms.to_string()),
            ("gesture.pinch_min_scale_delta", g.pinch_min_scale_delta.to_string()),
            ("gesture.pinch_min_rot_rad", g.pinch_min_rot_rad.to_string()),
            ("gesture.pinch_min_pan_mm", g.pinch_min_pan_mm.to_string()),
            ("frame_period_ms", self.frame_period_ms.to_string()),
            ("seed", self.seed.to_string()),
        ]
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        let l = &mut self.scene.light.position;
        let c = &mut self.scene.camera;
        let (s, t, g) = (&mut self.segmentation, &mut self.touch, &mut self.gesture);
        match key {
            "light.x" => l.x = parse(key, v)?,
            "light.y" => l.y = parse(key, v)?,
            "light.z" => l.z = parse(key, v)?,
            "camera.x" => c.center.x = parse(key, v)?,
            "camera.y" => c.center.y = parse(key, v)?,
            "camera.z" => c.center.z = parse(key, v)?,
            "camera.focal_px" => c.focal_px = parse(key, v)?,
            "camera.u0" => c.principal_point.x = parse(key, v)?,
            "camera.v0" => c.principal_point.y = parse(key, v)?,
            "camera.width" => c.width = parse(key, v)?,
            "camera.height" => c.height = parse(key, v)?,
            "noise.pixel_sigma" => self.noise.pixel_sigma = parse(key, v)?,
            "noise.jitter_sigma_mm" => self.noise.jitter_sigma_mm = parse(key, v)?,
            "segmentation.finger_min" => s.finger_min = parse(key, v)?,
            "segmentation.shadow_max" => s.shadow_max = parse(key, v)?,
            "segmentation.min_component_px" => s.min_component_px = parse(key, v)?,
            "touch.t_down_mm" => t.t_down_mm = parse(key, v)?,
            "touch.t_up_mm" => t.t_up_mm = parse(key, v)?,
            "touch.n_down" => t.n_down = parse(key, v)?,
            "touch.n_up" => t.n_up = parse(key, v)?,
            "touch.move_eps_mm" => t.move_eps_mm = parse(key, v)?,
            "gesture.tap_max_ms" => g.tap_max_ms = parse(key, v)?,
            "gesture.tap_max_disp_mm" => g.tap_max_disp_mm = parse(key, v)?,
            "gesture.swipe_min_mm" => g.swipe_min_mm = parse(key, v)?,
            "gesture.two_finger_overlap_ms" => g.two_finger_overlap_ms = parse(key, v)?,
            "gesture.pinch_min_scale_delta" => g.pinch_min_scale_delta = parse(key, v)?,
            "gesture.pinch_min_rot_rad" => g.pinch_min_rot_rad = parse(key, v)?,
            "gesture.pinch_min_pan_mm" => g.pinch_min_pan_mm = parse(key, v)?,
            "frame_period_ms" => self.frame_period_ms = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# shadowtouch pipeline config\n");
        for (k, v) in self.entries() {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// Parses a config file over the defaults; missing keys keep their
    /// default, unknown or repeated keys are errors.
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut seen = std::collections::BTreeSet::new();
        for (line, raw) in crate::textio::data_lines(text) {
            let err = |message: String| ConfigError::Line { line, message };
            let (k, v) = raw.split_once('=').ok_or_else(|| err("expected `key = value`".into()))?;
            let (k, v) = (k.trim(), v.trim());
            if !seen.insert(k.to_owned()) {
                return Err(err(format!("duplicate key `{k}`")));
            }
            cfg.set(k, v).map_err(err)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
