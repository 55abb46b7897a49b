//! Aerial scene frames and the invariants they must satisfy.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::linalg::{self, Mat3, Mat4, Vec3};

/// Tolerance applied to every orthonormality check.
pub const ORTHONORMAL_TOL: f64 = 1e-6;

/// Integer pixel coordinate. Ordered in raster order (row, then column).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pixel {
    pub x: u32,
    pub y: u32,
}

impl Pixel {
    pub const fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }
}

impl Ord for Pixel {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

impl PartialOrd for Pixel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Inclusive pixel box `(x1, y1)`–`(x2, y2)`.
///
/// Model predictions may fall outside the image, so coordinates are signed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BBox {
    pub x1: i64,
    pub y1: i64,
    pub x2: i64,
    pub y2: i64,
}

impl BBox {
    pub const fn new(x1: i64, y1: i64, x2: i64, y2: i64) -> Self {
        Self { x1, y1, x2, y2 }
    }

    /// Reorders corners so that `x1 <= x2` and `y1 <= y2`.
    pub fn normalized(self) -> Self {
        Self {
            x1: self.x1.min(self.x2),
            y1: self.y1.min(self.y2),
            x2: self.x1.max(self.x2),
            y2: self.y1.max(self.y2),
        }
    }

    /// Number of pixels covered (inclusive grid).
    pub fn area(&self) -> i64 {
        (self.x2 - self.x1 + 1).max(0) * (self.y2 - self.y1 + 1).max(0)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x1 as f64 && x <= self.x2 as f64 && y >= self.y1 as f64 && y <= self.y2 as f64
    }
}

/// Packed 8-bit RGB image, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        let n = width as usize * height as usize;
        let mut data = Vec::with_capacity(n * 3);
        for _ in 0..n {
            data.extend_from_slice(&rgb);
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }
}

/// Per-pixel class ids plus the id→name table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SemanticMask {
    pub width: u32,
    pub height: u32,
    pub class_ids: Vec<u16>,
    pub class_table: BTreeMap<u16, String>,
}

impl SemanticMask {
    pub fn filled(width: u32, height: u32, class_id: u16, class_table: BTreeMap<u16, String>) -> Self {
        Self {
            width,
            height,
            class_ids: alloc::vec![class_id; width as usize * height as usize],
            class_table,
        }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u16 {
        self.class_ids[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, class_id: u16) {
        let w = self.width as usize;
        self.class_ids[y as usize * w + x as usize] = class_id;
    }

    pub fn in_bounds(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && x < self.width as i64 && y < self.height as i64
    }

    pub fn class_name(&self, class_id: u16) -> Option<&str> {
        self.class_table.get(&class_id).map(String::as_str)
    }

    /// Distinct class ids present in the pixels, ascending.
    pub fn present_classes(&self) -> Vec<u16> {
        let mut seen = alloc::vec![false; 65536];
        for &c in &self.class_ids {
            seen[c as usize] = true;
        }
        (0..=u16::MAX).filter(|&c| seen[c as usize]).collect()
    }
}

/// LiDAR points in meters, LiDAR frame.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    /// Per-point return intensity; empty when the source has none.
    pub intensity: Vec<f32>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Self {
        Self {
            points,
            intensity: Vec::new(),
        }
    }
}

/// Pinhole intrinsics plus LiDAR→camera extrinsics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl CameraModel {
    pub fn with_identity_extrinsics(fx: f64, fy: f64, cx: f64, cy: f64) -> Self {
        Self {
            fx,
            fy,
            cx,
            cy,
            rotation: linalg::IDENTITY3,
            translation: [0.0; 3],
        }
    }
}

/// Homogeneous camera→world transform.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseTransform {
    pub matrix: Mat4,
}

impl PoseTransform {
    pub const IDENTITY: Self = Self {
        matrix: linalg::IDENTITY4,
    };

    pub fn from_rigid(rotation: &Mat3, translation: &Vec3) -> Self {
        Self {
            matrix: linalg::compose_rigid(rotation, translation),
        }
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        linalg::transform_point(&self.matrix, p)
    }
}

/// One aerial capture.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneFrame {
    pub frame_id: String,
    pub rgb: RgbImage,
    pub mask: SemanticMask,
    pub cloud: Option<PointCloud>,
    pub camera: Option<CameraModel>,
    pub pose: Option<PoseTransform>,
}

impl SceneFrame {
    pub fn width(&self) -> u32 {
        self.mask.width
    }

    pub fn height(&self) -> u32 {
        self.mask.height
    }

    /// Distance questions need LiDAR and a calibrated camera.
    pub fn supports_metric(&self) -> bool {
        self.cloud.is_some() && self.camera.is_some()
    }

    /// Height questions additionally need the pose.
    pub fn supports_height(&self) -> bool {
        self.supports_metric() && self.pose.is_some()
    }
}

/// A connected component of a single semantic class.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectInstance {
    pub class_id: u16,
    /// Raster-ordered, duplicate-free.
    pub pixels: Vec<Pixel>,
    pub bbox: BBox,
    pub centroid: (f64, f64),
    pub area: usize,
}

impl ObjectInstance {
    /// Builds an instance from its pixels. Returns `None` when `pixels` is empty.
    pub fn from_pixels(class_id: u16, mut pixels: Vec<Pixel>) -> Option<Self> {
        if pixels.is_empty() {
            return None;
        }
        pixels.sort_unstable();
        pixels.dedup();
        let (mut x1, mut y1, mut x2, mut y2) = (u32::MAX, u32::MAX, 0, 0);
        let (mut sx, mut sy) = (0u64, 0u64);
        for p in &pixels {
            x1 = x1.min(p.x);
            y1 = y1.min(p.y);
            x2 = x2.max(p.x);
            y2 = y2.max(p.y);
            sx += u64::from(p.x);
            sy += u64::from(p.y);
        }
        let area = pixels.len();
        Some(Self {
            class_id,
            bbox: BBox::new(x1.into(), y1.into(), x2.into(), y2.into()),
            centroid: (sx as f64 / area as f64, sy as f64 / area as f64),
            area,
            pixels,
        })
    }

    pub fn contains(&self, p: Pixel) -> bool {
        self.pixels.binary_search(&p).is_ok()
    }

    /// Membership test for a real-valued point using nearest-integer rounding.
    pub fn contains_rounded(&self, x: f64, y: f64) -> bool {
        match round_to_pixel(x, y) {
            Some(p) => self.contains(p),
            None => false,
        }
    }
}

/// Nearest-integer pixel for a real coordinate; `None` if it rounds below zero
/// or is not finite.
pub fn round_to_pixel(x: f64, y: f64) -> Option<Pixel> {
    if !x.is_finite() || !y.is_finite() {
        return None;
    }
    let rx = libm::round(x);
    let ry = libm::round(y);
    if rx < 0.0 || ry < 0.0 || rx > u32::MAX as f64 || ry > u32::MAX as f64 {
        return None;
    }
    Some(Pixel::new(rx as u32, ry as u32))
}

/// A broken frame invariant. Violations are data, not errors.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    EmptyMask,
    MaskPixelCount { expected: usize, actual: usize },
    RgbDimensionMismatch { rgb: (u32, u32), mask: (u32, u32) },
    RgbBufferLength { expected: usize, actual: usize },
    UnknownClassId(u16),
    NonFinitePoint { index: usize },
    NonPositiveFocal,
    NonFiniteCamera,
    RotationNotOrthonormal { max_deviation: f64 },
    PoseBottomRow,
    PoseRotationNotOrthonormal { max_deviation: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmptyMask => write!(f, "mask has zero width or height"),
            Self::MaskPixelCount { expected, actual } => {
                write!(f, "mask holds {actual} pixels, expected {expected}")
            }
            Self::RgbDimensionMismatch { rgb, mask } => write!(
                f,
                "rgb is {}x{} but mask is {}x{}",
                rgb.0, rgb.1, mask.0, mask.1
            ),
            Self::RgbBufferLength { expected, actual } => {
                write!(f, "rgb buffer holds {actual} bytes, expected {expected}")
            }
            Self::UnknownClassId(id) => write!(f, "class id {id} missing from class table"),
            Self::NonFinitePoint { index } => write!(f, "point {index} has a non-finite coordinate"),
            Self::NonPositiveFocal => write!(f, "focal lengths must be positive"),
            Self::NonFiniteCamera => write!(f, "camera parameters must be finite"),
            Self::RotationNotOrthonormal { max_deviation } => {
                write!(f, "camera rotation not orthonormal (max |RᵀR−I| = {max_deviation:e})")
            }
            Self::PoseBottomRow => write!(f, "pose bottom row is not (0,0,0,1)"),
            Self::PoseRotationNotOrthonormal { max_deviation } => {
                write!(f, "pose rotation not orthonormal (max |RᵀR−I| = {max_deviation:e})")
            }
        }
    }
}

pub fn validate_mask(mask: &SemanticMask, out: &mut Vec<Violation>) {
    if mask.width == 0 || mask.height == 0 {
        out.push(Violation::EmptyMask);
    }
    let expected = mask.width as usize * mask.height as usize;
    if mask.class_ids.len() != expected {
        out.push(Violation::MaskPixelCount {
            expected,
            actual: mask.class_ids.len(),
        });
    }
    let mut seen = alloc::vec![false; 65536];
    for &c in &mask.class_ids {
        seen[c as usize] = true;
    }
    for id in 0..=u16::MAX {
        if seen[id as usize] && !mask.class_table.contains_key(&id) {
            out.push(Violation::UnknownClassId(id));
        }
    }
}

pub fn validate_camera(cam: &CameraModel, out: &mut Vec<Violation>) {
    let finite = [cam.fx, cam.fy, cam.cx, cam.cy]
        .iter()
        .chain(cam.rotation.iter().flatten())
        .chain(cam.translation.iter())
        .all(|v| v.is_finite());
    if !finite {
        out.push(Violation::NonFiniteCamera);
        return;
    }
    if !(cam.fx > 0.0 && cam.fy > 0.0) {
        out.push(Violation::NonPositiveFocal);
    }
    let dev = linalg::orthonormality_error(&cam.rotation);
    if dev > ORTHONORMAL_TOL {
        out.push(Violation::RotationNotOrthonormal { max_deviation: dev });
    }
}

pub fn validate_pose(pose: &PoseTransform, out: &mut Vec<Violation>) {
    if pose.matrix[3] != [0.0, 0.0, 0.0, 1.0] {
        out.push(Violation::PoseBottomRow);
    }
    let dev = linalg::orthonormality_error(&linalg::rotation_part(&pose.matrix));
    if !(dev <= ORTHONORMAL_TOL) {
        out.push(Violation::PoseRotationNotOrthonormal { max_deviation: dev });
    }
}

/// Lists every invariant the frame breaks; empty means valid.
pub fn validate_frame(frame: &SceneFrame) -> Vec<Violation> {
    let mut out = Vec::new();
    validate_mask(&frame.mask, &mut out);
    let (rw, rh) = (frame.rgb.width, frame.rgb.height);
    if (rw, rh) != (frame.mask.width, frame.mask.height) {
        out.push(Violation::RgbDimensionMismatch {
            rgb: (rw, rh),
            mask: (frame.mask.width, frame.mask.height),
        });
    }
    let expected = rw as usize * rh as usize * 3;
    if frame.rgb.data.len() != expected {
        out.push(Violation::RgbBufferLength {
            expected,
            actual: frame.rgb.data.len(),
        });
    }
    if let Some(cloud) = &frame.cloud {
        if let Some(index) = cloud
            .points
            .iter()
            .position(|p| !p.iter().all(|v| v.is_finite()))
        {
            out.push(Violation::NonFinitePoint { index });
        }
    }
    if let Some(cam) = &frame.camera {
        validate_camera(cam, &mut out);
    }
    if let Some(pose) = &frame.pose {
        validate_pose(pose, &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn small_frame() -> SceneFrame {
        let mut table = BTreeMap::new();
        table.insert(0, "ground".to_string());
        table.insert(3, "car".to_string());
        let mut mask = SemanticMask::filled(4, 3, 0, table);
        mask.set(1, 1, 3);
        SceneFrame {
            frame_id: "f".into(),
            rgb: RgbImage::filled(4, 3, [10, 20, 30]),
            mask,
            cloud: Some(PointCloud::new(alloc::vec![[0.0, 0.0, 1.0]])),
            camera: Some(CameraModel::with_identity_extrinsics(100.0, 100.0, 2.0, 1.5)),
            pose: Some(PoseTransform::IDENTITY),
        }
    }

    #[test]
    fn valid_frame_has_no_violations() {
        assert!(validate_frame(&small_frame()).is_empty());
    }

    #[test]
    fn pose_bottom_row_is_reported() {
        let mut frame = small_frame();
        frame.pose.as_mut().unwrap().matrix[3][3] = 2.0;
        assert_eq!(validate_frame(&frame), alloc::vec![Violation::PoseBottomRow]);
    }

    #[test]
    fn scaled_rotation_is_reported_with_its_deviation() {
        let mut frame = small_frame();
        let cam = frame.camera.as_mut().unwrap();
        for row in cam.rotation.iter_mut() {
            for v in row.iter_mut() {
                *v *= 2.0;
            }
        }
        // RᵀR = 4I, so the worst entry of RᵀR − I is 3.
        assert_eq!(
            validate_frame(&frame),
            alloc::vec![Violation::RotationNotOrthonormal { max_deviation: 3.0 }]
        );
    }

    #[test]
    fn unknown_class_and_dimension_mismatch() {
        let mut frame = small_frame();
        frame.mask.set(0, 0, 9);
        frame.rgb = RgbImage::filled(4, 4, [0, 0, 0]);
        let v = validate_frame(&frame);
        assert!(v.contains(&Violation::UnknownClassId(9)));
        assert!(v.contains(&Violation::RgbDimensionMismatch {
            rgb: (4, 4),
            mask: (4, 3)
        }));
    }

    #[test]
    fn non_finite_point_is_reported() {
        let mut frame = small_frame();
        frame.cloud.as_mut().unwrap().points.push([f64::NAN, 0.0, 0.0]);
        assert_eq!(
            validate_frame(&frame),
            alloc::vec![Violation::NonFinitePoint { index: 1 }]
        );
    }

    #[test]
    fn instance_from_pixels_is_tight() {
        let inst = ObjectInstance::from_pixels(
            2,
            alloc::vec![Pixel::new(3, 1), Pixel::new(1, 2), Pixel::new(3, 1)],
        )
        .unwrap();
        assert_eq!(inst.area, 2);
        assert_eq!(inst.bbox, BBox::new(1, 1, 3, 2));
        assert_eq!(inst.centroid, (2.0, 1.5));
        assert!(inst.contains(Pixel::new(1, 2)));
        assert!(inst.contains_rounded(0.6, 2.4));
        assert!(!inst.contains_rounded(-0.6, 2.0));
        assert!(ObjectInstance::from_pixels(1, Vec::new()).is_none());
    }

    #[test]
    fn bbox_normalization_and_area() {
        let b = BBox::new(9, 9, 0, 0).normalized();
        assert_eq!(b, BBox::new(0, 0, 9, 9));
        assert_eq!(b.area(), 100);
    }
}
