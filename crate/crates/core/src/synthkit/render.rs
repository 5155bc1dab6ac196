//! Rasterizes trace records into grayscale frames with three intensity
//! classes: lit surface, cast shadow and finger.

use std::cell::RefCell;
use std::rc::Rc;

use rand::rngs::SmallRng;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::script::{point_segment_distance, HandTraceRecord};
use super::SynthError;
use crate::geometry::{shadow_project, CameraModel, SceneConfig, Vec2, Vec3};
use crate::hand::{FINGER_AXIS, FINGER_LENGTH_MM, FINGER_RADIUS_MM};

pub const BACKGROUND_LEVEL: u8 = 200;
pub const SHADOW_LEVEL: u8 = 100;
pub const FINGER_LEVEL: u8 = 255;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    /// Standard deviation of additive pixel noise, in gray levels.
    pub pixel_sigma: f64,
    /// Standard deviation of lateral fingertip jitter in generated traces.
    pub jitter_sigma_mm: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub const NONE: NoiseModel = NoiseModel { pixel_sigma: 0.0, jitter_sigma_mm: 0.0, seed: 0 };

    pub fn validate(&self) -> Result<(), SynthError> {
        if !(self.pixel_sigma >= 0.0) || !(self.jitter_sigma_mm >= 0.0) {
            return Err(SynthError::InvalidNoise);
        }
        Ok(())
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self { pixel_sigma: 6.0, jitter_sigma_mm: 0.3, seed: 0 }
    }
}

/// Row-major 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub t_ms: u64,
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

impl Frame {
    pub fn new(t_ms: u64, width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, SynthError> {
        if pixels.len() != width as usize * height as usize {
            return Err(SynthError::FrameSize {
                expected: width as usize * height as usize,
                actual: pixels.len(),
            });
        }
        Ok(Self { t_ms, width, height, pixels })
    }

    pub fn filled(t_ms: u64, width: u32, height: u32, level: u8) -> Self {
        Self { t_ms, width, height, pixels: vec![level; width as usize * height as usize] }
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }
}

pub(crate) fn mix_seed(a: u64, b: u64) -> u64 {
    // splitmix64 finalizer over the combined words
    let mut z = a ^ b.wrapping_add(0x9e37_79b9_7f4a_7c15).rotate_left(17);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Surface-space capsule painted into the pixel grid.
struct Capsule {
    a: Vec2,
    b: Vec2,
    radius: f64,
}

fn paint_capsule(pixels: &mut [u8], cam: &CameraModel, cap: &Capsule, level: u8) {
    let (w, h) = (cam.width as i64, cam.height as i64);
    let k = cam.focal_px / cam.center.z;
    let to_u = |x: f64| cam.principal_point.x + k * (x - cam.center.x);
    let to_v = |y: f64| cam.principal_point.y + k * (y - cam.center.y);
    let u0 = (to_u(cap.a.x.min(cap.b.x) - cap.radius).floor() as i64).max(0);
    let u1 = (to_u(cap.a.x.max(cap.b.x) + cap.radius).ceil() as i64).min(w - 1);
    let v0 = (to_v(cap.a.y.min(cap.b.y) - cap.radius).floor() as i64).max(0);
    let v1 = (to_v(cap.a.y.max(cap.b.y) + cap.radius).ceil() as i64).min(h - 1);
    for v in v0..=v1 {
        for u in u0..=u1 {
            let p = cam.unproject(Vec2::new(u as f64, v as f64));
            if point_segment_distance(p, cap.a, cap.b) <= cap.radius {
                pixels[(v * w + u) as usize] = level;
            }
        }
    }
}

/// Renders one record: background, then every shadow, then every finger on
/// top, then clamped additive Gaussian noise.
pub fn render_frame(
    record: &HandTraceRecord,
    scene: &SceneConfig,
    noise: &NoiseModel,
) -> Result<Frame, SynthError> {
    noise.validate()?;
    let cam = &scene.camera;
    let mut pixels = vec![BACKGROUND_LEVEL; cam.width as usize * cam.height as usize];

    let light_z = scene.light.position.z;
    for f in &record.fingers {
        let proximal = Vec3::from_xy(f.tip.xy() - FINGER_AXIS * FINGER_LENGTH_MM, f.tip.z);
        let shadow = Capsule {
            a: shadow_project(f.tip, &scene.light)?,
            b: shadow_project(proximal, &scene.light)?,
            radius: FINGER_RADIUS_MM * light_z / (light_z - f.tip.z),
        };
        paint_capsule(&mut pixels, cam, &shadow, SHADOW_LEVEL);
    }
    for f in &record.fingers {
        let proximal = Vec3::from_xy(f.tip.xy() - FINGER_AXIS * FINGER_LENGTH_MM, f.tip.z);
        let finger = Capsule {
            a: cam.apparent_on_surface(f.tip)?,
            b: cam.apparent_on_surface(proximal)?,
            radius: FINGER_RADIUS_MM * cam.center.z / (cam.center.z - f.tip.z),
        };
        paint_capsule(&mut pixels, cam, &finger, FINGER_LEVEL);
    }

    if noise.pixel_sigma > 0.0 {
        add_noise(&mut pixels, noise.pixel_sigma as f32, mix_seed(noise.seed, record.t_ms));
    }
    Frame::new(record.t_ms, cam.width, cam.height, pixels)
}

const NOISE_FIELD_LEN: usize = 1 << 22;

/// A long field of rounded `sigma`-scaled Gaussian offsets, cached for the
/// last sigma. Each frame adds a window of it starting at a seeded offset.
fn noise_field(sigma: f32) -> Rc<[i8]> {
    thread_local! {
        static CACHE: RefCell<Option<(u32, Rc<[i8]>)>> = const { RefCell::new(None) };
    }
    CACHE.with(|c| {
        let mut c = c.borrow_mut();
        if let Some((bits, field)) = &*c {
            if *bits == sigma.to_bits() {
                return field.clone();
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_9a55);
        let field: Rc<[i8]> = (0..NOISE_FIELD_LEN)
            .map(|_| {
                let z: f32 = StandardNormal.sample(&mut rng);
                // offsets saturate at the i8 range
                (sigma * z).round().clamp(-128.0, 127.0) as i8
            })
            .collect();
        *c = Some((sigma.to_bits(), field.clone()));
        field
    })
}

fn add_noise(pixels: &mut [u8], sigma: f32, seed: u64) {
    let field = noise_field(sigma);
    assert!(pixels.len() <= field.len(), "frame larger than the noise field");
    let span = (field.len() - pixels.len() + 1) as u64;
    let start = (SmallRng::seed_from_u64(seed).next_u64() % span) as usize;
    for (px, &off) in pixels.iter_mut().zip(&field[start..]) {
        *px = px.saturating_add_signed(off);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hand::FingerId;
    use crate::synthkit::script::FingerState;

    fn record(fingers: &[(f64, f64, f64)]) -> HandTraceRecord {
        HandTraceRecord {
            t_ms: 0,
            fingers: fingers
                .iter()
                .enumerate()
                .map(|(i, &(x, y, z))| FingerState {
                    id: FingerId(i as u8),
                    tip: Vec3::new(x, y, z),
                    contact: z <= 0.1,
                })
                .collect(),
        }
    }

    #[test]
    fn empty_record_is_uniform_background() {
        let frame = render_frame(&record(&[]), &SceneConfig::default(), &NoiseModel::NONE).unwrap();
        assert_eq!(frame.pixels.len(), 640 * 480);
        assert!(frame.pixels.iter().all(|&p| p == BACKGROUND_LEVEL));
    }

    #[test]
    fn only_three_levels_without_noise() {
        let frame = render_frame(
            &record(&[(50.0, 0.0, 8.0)]),
            &SceneConfig::default(),
            &NoiseModel::NONE,
        )
        .unwrap();
        let count = |l: u8| frame.pixels.iter().filter(|&&p| p == l).count();
        assert!(count(FINGER_LEVEL) > 500);
        assert!(count(SHADOW_LEVEL) > 500);
        assert_eq!(
            count(FINGER_LEVEL) + count(SHADOW_LEVEL) + count(BACKGROUND_LEVEL),
            frame.pixels.len()
        );
    }

    #[test]
    fn contact_hides_the_shadow_entirely() {
        let frame = render_frame(
            &record(&[(50.0, 0.0, 0.0), (-30.0, 20.0, 0.0)]),
            &SceneConfig::default(),
            &NoiseModel::NONE,
        )
        .unwrap();
        assert!(!frame.pixels.contains(&SHADOW_LEVEL));
    }

    #[test]
    fn noise_is_seeded_and_roughly_gaussian() {
        let noise = NoiseModel { pixel_sigma: 6.0, jitter_sigma_mm: 0.0, seed: 42 };
        let r = record(&[]);
        let a = render_frame(&r, &SceneConfig::default(), &noise).unwrap();
        let b = render_frame(&r, &SceneConfig::default(), &noise).unwrap();
        assert_eq!(a, b);
        let c = render_frame(&r, &SceneConfig::default(), &NoiseModel { seed: 43, ..noise }).unwrap();
        assert_ne!(a, c);

        let n = a.pixels.len() as f64;
        let mean = a.pixels.iter().map(|&p| f64::from(p)).sum::<f64>() / n;
        let var = a.pixels.iter().map(|&p| (f64::from(p) - mean).powi(2)).sum::<f64>() / n;
        assert!((mean - 200.0).abs() < 0.1, "mean {mean}");
        // rounding adds 1/12 to the variance
        assert!((var.sqrt() - (36.0f64 + 1.0 / 12.0).sqrt()).abs() < 0.1, "sd {}", var.sqrt());
    }

    #[test]
    fn frame_size_is_checked() {
        assert!(Frame::new(0, 4, 4, vec![0; 15]).is_err());
        assert!(Frame::new(0, 4, 4, vec![0; 16]).is_ok());
    }
}
