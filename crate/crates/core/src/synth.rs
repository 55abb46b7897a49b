//! Procedural frames with closed-form ground truth.
//!
//! The camera sits at altitude `A` above a flat ground plane (`z = 0`) and
//! looks straight down, optionally tilted about its own x axis. Every object
//! is a flat painted top at its physical height, so a pixel inside an object
//! sees the plane `z = h` and a background pixel sees the ground. LiDAR
//! returns are cast through pixels (with sub-pixel jitter), intersected with
//! those planes, and expressed in a LiDAR frame that differs from the camera
//! frame by a seeded rigid transform.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::default_class_table;
use crate::color::ColorTable;
use crate::geometry::RelationClass;
use crate::linalg::{self, Mat3, Vec3};
use crate::rng::stream;
use crate::scene::{BBox, CameraModel, PointCloud, PoseTransform, RgbImage, SceneFrame, SemanticMask};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Rectangle,
    Ellipse,
}

/// One painted object. `(x, y)` is the top-left corner of its `w × h`
/// bounding rectangle in pixels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub class_id: u16,
    pub shape: Shape,
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
    pub rgb: [u8; 3],
    /// Height of the object top above the ground, meters.
    pub height: f64,
}

impl Placement {
    fn covers(&self, px: u32, py: u32) -> bool {
        if px < self.x || py < self.y || px >= self.x + self.w || py >= self.y + self.h {
            return false;
        }
        match self.shape {
            Shape::Rectangle => true,
            Shape::Ellipse => {
                let (rx, ry) = (f64::from(self.w) / 2.0, f64::from(self.h) / 2.0);
                let dx = (f64::from(px - self.x) + 0.5 - rx) / rx;
                let dy = (f64::from(py - self.y) + 0.5 - ry) / ry;
                dx * dx + dy * dy <= 1.0
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub frame_id: String,
    pub width: u32,
    pub height: u32,
    /// Camera height above ground, meters.
    pub altitude: f64,
    pub fx: f64,
    pub fy: f64,
    /// Rotation of the camera about its x axis away from nadir, radians.
    pub tilt: f64,
    /// Painted in order; later placements cover earlier ones.
    pub placements: Vec<Placement>,
    pub background_class: u16,
    pub background_rgb: [u8; 3],
    /// LiDAR returns per pixel; zero omits the cloud, camera and pose.
    pub lidar_density: f64,
    /// Reject placements whose 1-pixel-dilated bounds overlap.
    pub strict: bool,
    pub seed: u64,
    pub class_table: BTreeMap<u16, String>,
}

impl SynthSpec {
    pub fn new(frame_id: &str, width: u32, height: u32, seed: u64) -> Self {
        Self {
            frame_id: frame_id.into(),
            width,
            height,
            altitude: 60.0,
            fx: f64::from(width),
            fy: f64::from(width),
            tilt: 0.0,
            placements: Vec::new(),
            background_class: crate::catalog::DEFAULT_BACKGROUND,
            background_rgb: [110, 110, 100],
            lidar_density: 1.0,
            strict: true,
            seed,
            class_table: default_class_table(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SynthError {
    OverlappingPlacementsNotAllowed { first: usize, second: usize },
    PlacementOutOfBounds(usize),
    AltitudeTooLow { altitude: f64, tallest: f64 },
    UnknownClass(u16),
    InvalidSpec(String),
}

impl fmt::Display for SynthError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::OverlappingPlacementsNotAllowed { first, second } => {
                write!(f, "placements {first} and {second} overlap or touch")
            }
            Self::PlacementOutOfBounds(i) => write!(f, "placement {i} leaves the image"),
            Self::AltitudeTooLow { altitude, tallest } => {
                write!(f, "altitude {altitude} m is not above the tallest object ({tallest} m)")
            }
            Self::UnknownClass(c) => write!(f, "class id {c} is not in the class table"),
            Self::InvalidSpec(why) => write!(f, "invalid spec: {why}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SheetObject {
    /// Index into the spec's placement list.
    pub placement: usize,
    pub class_id: u16,
    pub class_name: String,
    pub bbox: BBox,
    pub centroid: (f64, f64),
    pub area: usize,
    pub color: String,
    /// Mean camera depth of the object's LiDAR returns, meters.
    pub depth: f64,
    pub world_height: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SheetRelation {
    pub subject: usize,
    pub object: usize,
    pub relation: RelationClass,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SheetRegion {
    pub area: usize,
    pub bbox: BBox,
}

/// Ground truth computed directly from the placements.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthSheet {
    pub objects: Vec<SheetObject>,
    /// Direction of `object` seen from `subject`, for every ordered pair of
    /// objects whose centroids are farther apart than the relation threshold.
    pub relations: Vec<SheetRelation>,
    pub counts: BTreeMap<u16, usize>,
    /// Every 4-connected background component, largest first.
    pub free_regions: Vec<SheetRegion>,
}

fn validate(spec: &SynthSpec) -> Result<(), SynthError> {
    if spec.width == 0 || spec.height == 0 {
        return Err(SynthError::InvalidSpec("empty image".into()));
    }
    if !(spec.fx > 0.0 && spec.fy > 0.0) {
        return Err(SynthError::InvalidSpec("focal lengths must be positive".into()));
    }
    if !spec.class_table.contains_key(&spec.background_class) {
        return Err(SynthError::UnknownClass(spec.background_class));
    }
    let mut tallest = 0.0f64;
    for (i, p) in spec.placements.iter().enumerate() {
        if p.w == 0 || p.h == 0 || p.x + p.w > spec.width || p.y + p.h > spec.height {
            return Err(SynthError::PlacementOutOfBounds(i));
        }
        if !spec.class_table.contains_key(&p.class_id) {
            return Err(SynthError::UnknownClass(p.class_id));
        }
        if !(p.height >= 0.0) {
            return Err(SynthError::InvalidSpec(format!("placement {i} has a negative height")));
        }
        tallest = tallest.max(p.height);
    }
    if !(spec.altitude > tallest) {
        return Err(SynthError::AltitudeTooLow {
            altitude: spec.altitude,
            tallest,
        });
    }
    if spec.strict {
        for (i, a) in spec.placements.iter().enumerate() {
            for (j, b) in spec.placements.iter().enumerate().skip(i + 1) {
                let apart = a.x + a.w < b.x || b.x + b.w < a.x || a.y + a.h < b.y || b.y + b.h < a.y;
                if !apart {
                    return Err(SynthError::OverlappingPlacementsNotAllowed { first: i, second: j });
                }
            }
        }
    }
    Ok(())
}

/// Camera-to-world rotation: nadir view with image x east and image y south,
/// then tilted about the camera x axis.
fn camera_to_world(tilt: f64) -> Mat3 {
    let nadir = [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]];
    linalg::mat3_mul(&nadir, &linalg::rot_x(tilt))
}

fn lidar_extrinsics(seed: u64, frame_id: &str) -> (Mat3, Vec3) {
    let mut rng = stream(seed, &[frame_id, "extrinsics"]);
    let mut a = || rng.random_range(-0.3..0.3);
    let r = linalg::mat3_mul(&linalg::rot_z(a()), &linalg::mat3_mul(&linalg::rot_x(a()), &linalg::rot_y(a())));
    let t = [a(), a(), a()];
    (r, t)
}

fn background_components(owner: &[Option<usize>], w: u32, h: u32) -> Vec<SheetRegion> {
    let (wu, hu) = (w as usize, h as usize);
    let mut seen = alloc::vec![false; owner.len()];
    let mut out = Vec::new();
    for start in 0..owner.len() {
        if seen[start] || owner[start].is_some() {
            continue;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let (mut area, mut bbox) = (0usize, BBox::new(i64::MAX, i64::MAX, i64::MIN, i64::MIN));
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % wu, i / wu);
            area += 1;
            bbox = BBox::new(bbox.x1.min(x as i64), bbox.y1.min(y as i64), bbox.x2.max(x as i64), bbox.y2.max(y as i64));
            let mut push = |j: usize| {
                if !seen[j] && owner[j].is_none() {
                    seen[j] = true;
                    queue.push_back(j);
                }
            };
            if x > 0 {
                push(i - 1);
            }
            if x + 1 < wu {
                push(i + 1);
            }
            if y > 0 {
                push(i - wu);
            }
            if y + 1 < hu {
                push(i + wu);
            }
        }
        out.push(SheetRegion { area, bbox });
    }
    out.sort_by(|a, b| b.area.cmp(&a.area).then(a.bbox.y1.cmp(&b.bbox.y1)).then(a.bbox.x1.cmp(&b.bbox.x1)));
    out
}

/// Sector of `(dx, dy)` by slope comparison against tan(22.5°).
fn sheet_relation(dx: f64, dy: f64) -> RelationClass {
    let t = core::f64::consts::SQRT_2 - 1.0;
    let (ax, ay) = (libm::fabs(dx), libm::fabs(dy));
    if ay < ax * t {
        if dx > 0.0 {
            RelationClass::Right
        } else {
            RelationClass::Left
        }
    } else if ax < ay * t {
        if dy > 0.0 {
            RelationClass::Down
        } else {
            RelationClass::Up
        }
    } else {
        match (dx > 0.0, dy > 0.0) {
            (true, true) => RelationClass::DownRight,
            (false, true) => RelationClass::DownLeft,
            (false, false) => RelationClass::UpLeft,
            (true, false) => RelationClass::UpRight,
        }
    }
}

/// Renders a frame and its ground-truth sheet.
pub fn synth_scene(spec: &SynthSpec) -> Result<(SceneFrame, GroundTruthSheet), SynthError> {
    validate(spec)?;
    let (w, h) = (spec.width, spec.height);
    let mut owner: Vec<Option<usize>> = alloc::vec![None; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            for (i, p) in spec.placements.iter().enumerate() {
                if p.covers(x, y) {
                    owner[(y * w + x) as usize] = Some(i);
                }
            }
        }
    }

    let mut rgb = RgbImage::filled(w, h, spec.background_rgb);
    let mut mask = SemanticMask::filled(w, h, spec.background_class, spec.class_table.clone());
    for y in 0..h {
        for x in 0..w {
            if let Some(i) = owner[(y * w + x) as usize] {
                rgb.set(x, y, spec.placements[i].rgb);
                mask.set(x, y, spec.placements[i].class_id);
            }
        }
    }

    let cx = f64::from(w) / 2.0;
    let cy = f64::from(h) / 2.0;
    let r_cw = camera_to_world(spec.tilt);
    let (r_lc, t_lc) = lidar_extrinsics(spec.seed, &spec.frame_id);
    let r_cl = linalg::transpose3(&r_lc);
    let mut rng = stream(spec.seed, &[&spec.frame_id, "lidar"]);
    let mut points = Vec::new();
    let n_obj = spec.placements.len();
    let (mut depth_sum, mut depth_n) = (alloc::vec![0.0f64; n_obj], alloc::vec![0usize; n_obj]);
    if spec.lidar_density > 0.0 {
        let whole = libm::floor(spec.lidar_density);
        let frac = spec.lidar_density - whole;
        for v in 0..h {
            for u in 0..w {
                let o = owner[(v * w + u) as usize];
                let plane = o.map_or(0.0, |i| spec.placements[i].height);
                let extra = usize::from(frac > 0.0 && rng.random::<f64>() < frac);
                for _ in 0..whole as usize + extra {
                    let su = f64::from(u) + rng.random_range(-0.4..0.4);
                    let sv = f64::from(v) + rng.random_range(-0.4..0.4);
                    let ray = [(su - cx) / spec.fx, (sv - cy) / spec.fy, 1.0];
                    let d = linalg::mat3_mul_vec(&r_cw, &ray);
                    if !(d[2] < 0.0) {
                        continue;
                    }
                    // Camera at (0, 0, A); the ray meets z = plane at this depth.
                    let t = (plane - spec.altitude) / d[2];
                    let p_cam = [ray[0] * t, ray[1] * t, t];
                    if let Some(i) = o {
                        depth_sum[i] += t;
                        depth_n[i] += 1;
                    }
                    points.push(linalg::mat3_mul_vec(&r_cl, &linalg::sub(&p_cam, &t_lc)));
                }
            }
        }
    }

    let table = ColorTable::default();
    let mut objects = Vec::new();
    for (i, p) in spec.placements.iter().enumerate() {
        let (mut n, mut sx, mut sy) = (0usize, 0.0, 0.0);
        let mut bbox = BBox::new(i64::MAX, i64::MAX, i64::MIN, i64::MIN);
        for y in p.y..p.y + p.h {
            for x in p.x..p.x + p.w {
                if owner[(y * w + x) as usize] == Some(i) {
                    n += 1;
                    sx += f64::from(x);
                    sy += f64::from(y);
                    bbox = BBox::new(bbox.x1.min(x.into()), bbox.y1.min(y.into()), bbox.x2.max(x.into()), bbox.y2.max(y.into()));
                }
            }
        }
        if n == 0 {
            continue;
        }
        let depth = if spec.tilt == 0.0 {
            spec.altitude - p.height
        } else if depth_n[i] > 0 {
            depth_sum[i] / depth_n[i] as f64
        } else {
            f64::NAN
        };
        objects.push(SheetObject {
            placement: i,
            class_id: p.class_id,
            class_name: spec.class_table[&p.class_id].clone(),
            bbox,
            centroid: (sx / n as f64, sy / n as f64),
            area: n,
            color: table.describe(p.rgb).render(),
            depth,
            world_height: p.height,
        });
    }

    let mut relations = Vec::new();
    for (a, sa) in objects.iter().enumerate() {
        for (b, sb) in objects.iter().enumerate() {
            let (dx, dy) = (sb.centroid.0 - sa.centroid.0, sb.centroid.1 - sa.centroid.1);
            if a != b && dx * dx + dy * dy > crate::geometry::RELATION_MIN_DIST * crate::geometry::RELATION_MIN_DIST {
                relations.push(SheetRelation {
                    subject: a,
                    object: b,
                    relation: sheet_relation(dx, dy),
                });
            }
        }
    }
    let mut counts = BTreeMap::new();
    for o in &objects {
        *counts.entry(o.class_id).or_insert(0) += 1;
    }

    let (cloud, camera, pose) = if spec.lidar_density > 0.0 {
        let mut cam = CameraModel::with_identity_extrinsics(spec.fx, spec.fy, cx, cy);
        cam.rotation = r_lc;
        cam.translation = t_lc;
        (
            Some(PointCloud::new(points)),
            Some(cam),
            Some(PoseTransform::from_rigid(&r_cw, &[0.0, 0.0, spec.altitude])),
        )
    } else {
        (None, None, None)
    };
    let frame = SceneFrame {
        frame_id: spec.frame_id.clone(),
        rgb,
        mask,
        cloud,
        camera,
        pose,
    };
    let sheet = GroundTruthSheet {
        objects,
        relations,
        counts,
        free_regions: background_components(&owner, w, h),
    };
    Ok((frame, sheet))
}

/// Colors whose names are unambiguous under the default color table.
pub const PALETTE: [[u8; 3]; 10] = [
    [220, 30, 30],
    [240, 130, 20],
    [235, 220, 40],
    [40, 170, 60],
    [30, 200, 210],
    [40, 70, 220],
    [150, 40, 170],
    [250, 120, 190],
    [245, 245, 245],
    [20, 20, 20],
];

/// A random scene: 3–8 disjoint objects of 2–4 distinct classes drawn from
/// the default catalog, so classes repeat and counting has work to do.
pub fn random_spec(frame_id: &str, size: u32, seed: u64) -> SynthSpec {
    let mut spec = SynthSpec::new(frame_id, size, size, seed);
    let mut rng = stream(seed, &[frame_id, "layout"]);
    let classes: Vec<u16> = spec.class_table.keys().copied().filter(|&c| c != spec.background_class).collect();
    let n_classes = rng.random_range(2..=4usize);
    let chosen: Vec<u16> = (0..n_classes).map(|_| classes[rng.random_range(0..classes.len())]).collect();
    let target = rng.random_range(3..=8usize);
    let max_side = (size / 4).max(6);
    let min_side = (size / 16).max(4).min(max_side);
    let mut tries = 0;
    while spec.placements.len() < target && tries < 400 {
        tries += 1;
        let pw = rng.random_range(min_side..=max_side);
        let ph = rng.random_range(min_side..=max_side);
        if pw + 2 >= size || ph + 2 >= size {
            continue;
        }
        let p = Placement {
            class_id: chosen[rng.random_range(0..chosen.len())],
            shape: if rng.random::<bool>() { Shape::Rectangle } else { Shape::Ellipse },
            x: rng.random_range(1..size - pw - 1),
            y: rng.random_range(1..size - ph - 1),
            w: pw,
            h: ph,
            rgb: PALETTE[rng.random_range(0..PALETTE.len())],
            height: libm::round(rng.random_range(0.2..30.0) * 10.0) / 10.0,
        };
        // Two pixels of clearance keeps instances apart under either connectivity.
        let clear = spec.placements.iter().all(|q| {
            p.x + p.w + 1 < q.x || q.x + q.w + 1 < p.x || p.y + p.h + 1 < q.y || q.y + q.h + 1 < p.y
        });
        if clear {
            spec.placements.push(p);
        }
    }
    spec
}
