//! Intensity-class segmentation into 8-connected finger and shadow regions.

use crate::geometry::Vec2;
use crate::synthkit::Frame;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentationThresholds {
    /// Pixels at or above this level are finger.
    pub finger_min: u8,
    /// Pixels at or below this level are shadow.
    pub shadow_max: u8,
    /// Components smaller than this are dropped.
    pub min_component_px: usize,
}

impl Default for SegmentationThresholds {
    fn default() -> Self {
        Self { finger_min: 230, shadow_max: 140, min_component_px: 20 }
    }
}

impl SegmentationThresholds {
    pub fn validate(&self) -> Result<(), String> {
        if self.shadow_max >= self.finger_min {
            return Err(format!(
                "shadow_max ({}) must be below finger_min ({})",
                self.shadow_max, self.finger_min
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    /// `(x, y)` pixel coordinates in discovery order.
    pub pixels: Vec<(u32, u32)>,
    pub centroid: Vec2,
    pub touches_border: bool,
}

impl Component {
    pub fn from_pixels(pixels: Vec<(u32, u32)>, width: u32, height: u32) -> Self {
        let n = pixels.len().max(1) as f64;
        let (sx, sy) = pixels
            .iter()
            .fold((0.0, 0.0), |(sx, sy), &(x, y)| (sx + f64::from(x), sy + f64::from(y)));
        let touches_border = pixels
            .iter()
            .any(|&(x, y)| x == 0 || y == 0 || x + 1 == width || y + 1 == height);
        Self { centroid: Vec2::new(sx / n, sy / n), pixels, touches_border }
    }

    pub fn area(&self) -> usize {
        self.pixels.len()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Segmentation {
    pub fingers: Vec<Component>,
    pub shadows: Vec<Component>,
}

const NONE: u8 = 0;
const FINGER: u8 = 1;
const SHADOW: u8 = 2;

/// Components are reported in raster order of their first pixel.
pub fn segment(frame: &Frame, th: &SegmentationThresholds) -> Segmentation {
    let (w, h) = (frame.width as usize, frame.height as usize);
    let mut class: Vec<u8> = frame
        .pixels
        .iter()
        .map(|&p| {
            if p >= th.finger_min {
                FINGER
            } else if p <= th.shadow_max {
                SHADOW
            } else {
                NONE
            }
        })
        .collect();

    let mut out = Segmentation::default();
    let mut stack = Vec::new();
    for start in 0..class.len() {
        let label = class[start];
        if label == NONE {
            continue;
        }
        class[start] = NONE;
        stack.push(start);
        let mut pixels = Vec::new();
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            pixels.push((x as u32, y as u32));
            let (x0, x1) = (x.saturating_sub(1), (x + 1).min(w - 1));
            let (y0, y1) = (y.saturating_sub(1), (y + 1).min(h - 1));
            for ny in y0..=y1 {
                for nx in x0..=x1 {
                    let j = ny * w + nx;
                    if class[j] == label {
                        class[j] = NONE;
                        stack.push(j);
                    }
                }
            }
        }
        if pixels.len() < th.min_component_px {
            continue;
        }
        let component = Component::from_pixels(pixels, frame.width, frame.height);
        if label == FINGER {
            out.fingers.push(component);
        } else {
            out.shadows.push(component);
        }
    }
    out
}
