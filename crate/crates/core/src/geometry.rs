//! Analytic shadow casting and nadir pinhole camera model.
//!
//! Everything is expressed in millimeters in the surface frame: the surface
//! is the plane `z = 0`, `+z` points up, `+x` to the right and `+y` away
//! from the user. Pixels only appear at the camera boundary.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("non-finite coordinate in {0}")]
    NonFinite(&'static str),
    #[error("point lies below the surface (z = {0})")]
    BelowSurface(f64),
    #[error("light at z = {light_z} is not above the point at z = {point_z}")]
    LightNotAbove { light_z: f64, point_z: f64 },
    #[error("point at z = {point_z} is not below the camera at z = {camera_z}")]
    BehindCamera { point_z: f64, camera_z: f64 },
    #[error("invalid scene: {0}")]
    InvalidScene(String),
}

pub type Result<T> = std::result::Result<T, GeometryError>;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z component of the 3D cross product.
    pub fn perp_dot(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    pub fn rotated(self, angle_rad: f64) -> Vec2 {
        let (s, c) = angle_rad.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn midpoint(self, other: Vec2) -> Vec2 {
        Vec2::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn xy(self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn from_xy(xy: Vec2, z: f64) -> Self {
        Self::new(xy.x, xy.y, z)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

/// Wrist-mounted point illuminant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightSource {
    pub position: Vec3,
}

impl LightSource {
    pub fn new(position: Vec3) -> Result<Self> {
        let light = Self { position };
        light.validate()?;
        Ok(light)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.position.is_finite() {
            return Err(GeometryError::NonFinite("light position"));
        }
        if self.position.z <= 0.0 {
            return Err(GeometryError::InvalidScene(format!(
                "light must be above the surface, got z = {}",
                self.position.z
            )));
        }
        Ok(())
    }
}

/// Nadir-mounted pinhole camera (optical axis along -z, image `u` along +x,
/// image `v` along +y). Pixel `(i, j)` has its center at `(u, v) = (i, j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel {
    pub center: Vec3,
    pub focal_px: f64,
    pub principal_point: Vec2,
    pub width: u32,
    pub height: u32,
}

impl CameraModel {
    pub fn validate(&self) -> Result<()> {
        if !self.center.is_finite() || !self.focal_px.is_finite() || !self.principal_point.is_finite()
        {
            return Err(GeometryError::NonFinite("camera"));
        }
        if self.center.z <= 0.0 {
            return Err(GeometryError::InvalidScene("camera must be above the surface".into()));
        }
        if self.focal_px <= 0.0 {
            return Err(GeometryError::InvalidScene("focal_px must be positive".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(GeometryError::InvalidScene("image resolution must be non-zero".into()));
        }
        let pp = self.principal_point;
        if pp.x < 0.0 || pp.y < 0.0 || pp.x > f64::from(self.width) || pp.y > f64::from(self.height)
        {
            return Err(GeometryError::InvalidScene(
                "principal point must lie inside the image".into(),
            ));
        }
        Ok(())
    }

    /// Surface millimeters covered by one pixel on the `z = 0` plane.
    pub fn mm_per_px(&self) -> f64 {
        self.center.z / self.focal_px
    }

    pub fn project(&self, p: Vec3) -> Result<Vec2> {
        project_to_image(p, self)
    }

    pub fn unproject(&self, px: Vec2) -> Vec2 {
        unproject_on_surface(px, self)
    }

    /// Whether a pixel-space point lies within the pixel grid.
    pub fn contains_px(&self, px: Vec2) -> bool {
        px.x >= 0.0
            && px.y >= 0.0
            && px.x <= f64::from(self.width - 1)
            && px.y <= f64::from(self.height - 1)
    }

    /// Where a point appears on the surface when seen through this camera:
    /// the intersection of the camera ray through `p` with `z = 0`.
    pub fn apparent_on_surface(&self, p: Vec3) -> Result<Vec2> {
        check_finite(p, "point")?;
        let c = self.center;
        if p.z >= c.z {
            return Err(GeometryError::BehindCamera { point_z: p.z, camera_z: c.z });
        }
        if p.z == 0.0 {
            return Ok(p.xy());
        }
        let k = c.z / (c.z - p.z);
        Ok(c.xy() + (p.xy() - c.xy()) * k)
    }
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            center: Vec3::new(0.0, 0.0, 400.0),
            focal_px: 800.0,
            principal_point: Vec2::new(320.0, 240.0),
            width: 640,
            height: 480,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneConfig {
    pub light: LightSource,
    pub camera: CameraModel,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            light: LightSource { position: Vec3::new(-100.0, 0.0, 50.0) },
            camera: CameraModel::default(),
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        self.light.validate()?;
        self.camera.validate()?;
        if self.camera.center.z <= self.light.position.z {
            return Err(GeometryError::InvalidScene(
                "camera must sit higher than the light".into(),
            ));
        }
        Ok(())
    }

    /// Validates the scene against the highest hover height it must image.
    pub fn validate_for_hover(&self, max_hover_mm: f64) -> Result<()> {
        self.validate()?;
        if self.light.position.z <= max_hover_mm {
            return Err(GeometryError::InvalidScene(format!(
                "light z = {} must exceed the hover ceiling {max_hover_mm}",
                self.light.position.z
            )));
        }
        Ok(())
    }
}

fn check_finite(p: Vec3, what: &'static str) -> Result<()> {
    if p.is_finite() {
        Ok(())
    } else {
        Err(GeometryError::NonFinite(what))
    }
}

/// Shadow of `f` on the surface cast by a point light.
pub fn shadow_project(f: Vec3, light: &LightSource) -> Result<Vec2> {
    check_finite(f, "point")?;
    check_finite(light.position, "light position")?;
    if f.z < 0.0 {
        return Err(GeometryError::BelowSurface(f.z));
    }
    let l = light.position;
    if l.z <= f.z {
        return Err(GeometryError::LightNotAbove { light_z: l.z, point_z: f.z });
    }
    // A point on the surface is its own shadow; skipping the arithmetic keeps
    // that exact.
    if f.z == 0.0 {
        return Ok(f.xy());
    }
    let k = l.z / (l.z - f.z);
    Ok(l.xy() + (f.xy() - l.xy()) * k)
}

pub fn project_to_image(p: Vec3, cam: &CameraModel) -> Result<Vec2> {
    check_finite(p, "point")?;
    let c = cam.center;
    if p.z >= c.z {
        return Err(GeometryError::BehindCamera { point_z: p.z, camera_z: c.z });
    }
    let k = cam.focal_px / (c.z - p.z);
    Ok(Vec2::new(
        cam.principal_point.x + k * (p.x - c.x),
        cam.principal_point.y + k * (p.y - c.y),
    ))
}

/// Inverse of [`project_to_image`] restricted to the plane `z = 0`.
pub fn unproject_on_surface(px: Vec2, cam: &CameraModel) -> Vec2 {
    let k = cam.center.z / cam.focal_px;
    Vec2::new(
        cam.center.x + k * (px.x - cam.principal_point.x),
        cam.center.y + k * (px.y - cam.principal_point.y),
    )
}

/// Observable finger-shadow gap on the surface for a fingertip at `f`.
///
/// Distance between the shadow point and the camera-apparent fingertip, both
/// on `z = 0`. Zero exactly when `f.z == 0`; grows much faster than `f.z`
/// when the light is low and lateral.
pub fn apparent_gap_mm(f: Vec3, scene: &SceneConfig) -> Result<f64> {
    let shadow = shadow_project(f, &scene.light)?;
    let apparent = scene.camera.apparent_on_surface(f)?;
    Ok(shadow.distance(apparent))
}

/// Parallax-only displacement of a point at height `p.z`: how far its
/// camera-apparent surface position is from its true footprint.
pub fn parallax_mm(p: Vec3, cam: &CameraModel) -> Result<f64> {
    if p.z < 0.0 {
        return Err(GeometryError::BelowSurface(p.z));
    }
    Ok(cam.apparent_on_surface(p)?.distance(p.xy()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn light(x: f64, y: f64, z: f64) -> LightSource {
        LightSource::new(Vec3::new(x, y, z)).unwrap()
    }

    #[test]
    fn shadow_examples() {
        let s = shadow_project(Vec3::new(100.0, 0.0, 0.0), &light(0.0, 0.0, 50.0)).unwrap();
        assert_eq!(s, Vec2::new(100.0, 0.0));

        let s = shadow_project(Vec3::new(100.0, 0.0, 2.0), &light(0.0, 0.0, 50.0)).unwrap();
        assert!((s.x - 104.1667).abs() < 1e-4 && s.y.abs() < 1e-12);

        let s = shadow_project(Vec3::new(50.0, 50.0, 10.0), &light(0.0, 0.0, 100.0)).unwrap();
        assert!((s.x - 55.5556).abs() < 1e-4 && (s.y - 55.5556).abs() < 1e-4);
    }

    #[test]
    fn shadow_rejects_light_at_or_below_point() {
        let l = light(0.0, 0.0, 10.0);
        assert!(matches!(
            shadow_project(Vec3::new(0.0, 0.0, 10.0), &l),
            Err(GeometryError::LightNotAbove { .. })
        ));
        assert!(shadow_project(Vec3::new(0.0, 0.0, 12.0), &l).is_err());
        assert!(shadow_project(Vec3::new(0.0, 0.0, -1.0), &l).is_err());
        assert!(shadow_project(Vec3::new(f64::NAN, 0.0, 1.0), &l).is_err());
    }

    #[test]
    fn light_must_be_above_surface() {
        assert!(LightSource::new(Vec3::new(0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn projection_examples() {
        let cam = CameraModel::default();
        assert_eq!(project_to_image(Vec3::new(0.0, 0.0, 0.0), &cam).unwrap(), Vec2::new(320.0, 240.0));
        let p = project_to_image(Vec3::new(10.0, 20.0, 0.0), &cam).unwrap();
        assert!((p.x - 340.0).abs() < 1e-12 && (p.y - 280.0).abs() < 1e-12);
        let p = project_to_image(Vec3::new(50.0, 0.0, 2.0), &cam).unwrap();
        assert!((p.x - 420.502_512_6).abs() < 1e-3 && (p.y - 240.0).abs() < 1e-12);
        assert!(project_to_image(Vec3::new(0.0, 0.0, 400.0), &cam).is_err());
    }

    #[test]
    fn unprojection_examples() {
        let cam = CameraModel::default();
        assert_eq!(unproject_on_surface(Vec2::new(320.0, 240.0), &cam), Vec2::ZERO);
        let s = unproject_on_surface(Vec2::new(340.0, 280.0), &cam);
        assert!((s.x - 10.0).abs() < 1e-6 && (s.y - 20.0).abs() < 1e-6);
        let s = unproject_on_surface(Vec2::new(0.0, 0.0), &cam);
        assert!((s.x + 160.0).abs() < 1e-6 && (s.y + 120.0).abs() < 1e-6);
    }

    #[test]
    fn gap_examples() {
        let scene = SceneConfig::default();
        assert_eq!(apparent_gap_mm(Vec3::new(50.0, 0.0, 0.0), &scene).unwrap(), 0.0);
        let g = apparent_gap_mm(Vec3::new(50.0, 0.0, 2.0), &scene).unwrap();
        assert!((g - 5.999).abs() < 0.01, "gap {g}");
        assert!(g / 2.0 >= 3.0 - 1e-3);
    }

    #[test]
    fn scene_validation() {
        assert!(SceneConfig::default().validate().is_ok());
        assert!(SceneConfig::default().validate_for_hover(49.0).is_ok());
        assert!(SceneConfig::default().validate_for_hover(50.0).is_err());
        let mut s = SceneConfig::default();
        s.camera.center.z = 40.0;
        assert!(s.validate().is_err());
        let mut s = SceneConfig::default();
        s.camera.principal_point = Vec2::new(700.0, 10.0);
        assert!(s.validate().is_err());
    }

    #[test]
    fn parallax_is_small_under_a_high_camera() {
        let cam = CameraModel::default();
        let p = parallax_mm(Vec3::new(50.0, 0.0, 2.0), &cam).unwrap();
        assert!((p - 2.0 * 50.0 / 398.0).abs() < 1e-12);
        assert_eq!(parallax_mm(Vec3::new(50.0, 0.0, 0.0), &cam).unwrap(), 0.0);
    }
}
