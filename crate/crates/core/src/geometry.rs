//! Mask geometry: connected-component instances, in-mask sampling, free
//! space, and eight-way spatial relations between centroids.

use alloc::collections::VecDeque;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::scene::{ObjectInstance, Pixel, SemanticMask};

/// Default area threshold for free-space regions (strictly greater than).
pub const FREE_SPACE_MIN_AREA: usize = 500;
/// Default centroid distance threshold for relations (strictly greater than).
pub const RELATION_MIN_DIST: f64 = 50.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Connectivity {
    #[default]
    Four,
    Eight,
}

impl Connectivity {
    fn offsets(self) -> &'static [(i64, i64)] {
        match self {
            Self::Four => &[(1, 0), (-1, 0), (0, 1), (0, -1)],
            Self::Eight => &[
                (1, 0),
                (-1, 0),
                (0, 1),
                (0, -1),
                (1, 1),
                (1, -1),
                (-1, 1),
                (-1, -1),
            ],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GeometryError {
    InsufficientArea { area: usize, requested: usize },
    InvalidSampleCount(usize),
    NoBackgroundClass,
    DegenerateCentroids,
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InsufficientArea { area, requested } => {
                write!(f, "cannot sample {requested} distinct points from {area} pixels")
            }
            Self::InvalidSampleCount(n) => write!(f, "sample count {n} outside 5..=8"),
            Self::NoBackgroundClass => write!(f, "no background class designated"),
            Self::DegenerateCentroids => write!(f, "centroids coincide"),
        }
    }
}

/// Labels the connected components of pixels accepted by `keep`.
///
/// Components are returned in raster order of their first pixel; each
/// component's pixels are raster-sorted.
fn components<F>(mask: &SemanticMask, connectivity: Connectivity, keep: F) -> Vec<(u16, Vec<Pixel>)>
where
    F: Fn(u16) -> bool,
{
    let (w, h) = (mask.width as usize, mask.height as usize);
    let mut visited = alloc::vec![false; w * h];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if visited[start] {
            continue;
        }
        let class = mask.class_ids[start];
        if !keep(class) {
            continue;
        }
        visited[start] = true;
        queue.push_back(start);
        let mut pixels = Vec::new();
        while let Some(idx) = queue.pop_front() {
            let (x, y) = ((idx % w) as i64, (idx / w) as i64);
            pixels.push(Pixel::new(x as u32, y as u32));
            for &(dx, dy) in connectivity.offsets() {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                    continue;
                }
                let n = ny as usize * w + nx as usize;
                if !visited[n] && mask.class_ids[n] == class {
                    visited[n] = true;
                    queue.push_back(n);
                }
            }
        }
        pixels.sort_unstable();
        out.push((class, pixels));
    }
    out
}

/// Splits every non-background class into connected-component instances.
pub fn extract_instances(
    mask: &SemanticMask,
    background: Option<u16>,
    connectivity: Connectivity,
) -> Vec<ObjectInstance> {
    components(mask, connectivity, |c| Some(c) != background)
        .into_iter()
        .filter_map(|(class, pixels)| ObjectInstance::from_pixels(class, pixels))
        .collect()
}

/// Draws `count` distinct pixels from `pixels` without replacement.
pub fn sample_distinct<R: Rng + ?Sized>(
    pixels: &[Pixel],
    count: usize,
    rng: &mut R,
) -> Result<Vec<Pixel>, GeometryError> {
    if pixels.len() < count {
        return Err(GeometryError::InsufficientArea {
            area: pixels.len(),
            requested: count,
        });
    }
    let mut picked: Vec<Pixel> = rand::seq::index::sample(rng, pixels.len(), count)
        .into_iter()
        .map(|i| pixels[i])
        .collect();
    picked.sort_unstable();
    Ok(picked)
}

/// Samples 5–8 distinct pixel coordinates inside an instance.
pub fn sample_points_in_mask<R: Rng + ?Sized>(
    inst: &ObjectInstance,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Pixel>, GeometryError> {
    if !(5..=8).contains(&count) {
        return Err(GeometryError::InvalidSampleCount(count));
    }
    sample_distinct(&inst.pixels, count, rng)
}

/// A connected background region large enough to be navigable.
#[derive(Clone, Debug, PartialEq)]
pub struct FreeRegion {
    pub pixels: Vec<Pixel>,
    pub area: usize,
    pub sample_points: Vec<Pixel>,
}

impl FreeRegion {
    pub fn contains(&self, p: Pixel) -> bool {
        self.pixels.binary_search(&p).is_ok()
    }
}

/// Background components with `area > min_area` and pixels only, no sampling.
pub fn background_regions(
    mask: &SemanticMask,
    background: Option<u16>,
    min_area: usize,
    connectivity: Connectivity,
) -> Result<Vec<Vec<Pixel>>, GeometryError> {
    let bg = background.ok_or(GeometryError::NoBackgroundClass)?;
    Ok(components(mask, connectivity, |c| c == bg)
        .into_iter()
        .map(|(_, px)| px)
        .filter(|px| px.len() > min_area)
        .collect())
}

/// Finds background regions larger than `min_area` and samples 3–5 points in each.
pub fn extract_free_space<R: Rng + ?Sized>(
    mask: &SemanticMask,
    background: Option<u16>,
    min_area: usize,
    connectivity: Connectivity,
    rng: &mut R,
) -> Result<Vec<FreeRegion>, GeometryError> {
    background_regions(mask, background, min_area, connectivity)?
        .into_iter()
        .map(|pixels| {
            let count = rng.random_range(3..=5usize);
            let sample_points = sample_distinct(&pixels, count, rng)?;
            Ok(FreeRegion {
                area: pixels.len(),
                pixels,
                sample_points,
            })
        })
        .collect()
}

/// Compass direction in image coordinates (y grows downward).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationClass {
    Right,
    DownRight,
    Down,
    DownLeft,
    Left,
    UpLeft,
    Up,
    UpRight,
}

impl RelationClass {
    /// Sector order, counter-clockwise in image space starting at +x.
    pub const ALL: [Self; 8] = [
        Self::Right,
        Self::DownRight,
        Self::Down,
        Self::DownLeft,
        Self::Left,
        Self::UpLeft,
        Self::Up,
        Self::UpRight,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn antipode(self) -> Self {
        Self::ALL[(self.index() + 4) % 8]
    }

    /// Machine name, e.g. `down_right`.
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Right => "right",
            Self::DownRight => "down_right",
            Self::Down => "down",
            Self::DownLeft => "down_left",
            Self::Left => "left",
            Self::UpLeft => "up_left",
            Self::Up => "up",
            Self::UpRight => "up_right",
        }
    }

    /// Phrase used in question options.
    pub fn phrase(self) -> &'static str {
        match self {
            Self::Right => "to the right",
            Self::DownRight => "to the lower right",
            Self::Down => "below",
            Self::DownLeft => "to the lower left",
            Self::Left => "to the left",
            Self::UpLeft => "to the upper left",
            Self::Up => "above",
            Self::UpRight => "to the upper right",
        }
    }

    /// Sector containing `theta` (radians, atan2 convention). Sector `k`
    /// spans `[k·45° − 22.5°, k·45° + 22.5°)`.
    pub fn from_angle(theta: f64) -> Self {
        let step = PI / 4.0;
        let k = libm::floor((theta + step / 2.0) / step) as i64;
        Self::ALL[k.rem_euclid(8) as usize]
    }
}

impl fmt::Display for RelationClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Direction of `cj` as seen from `ci`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Relation {
    /// `atan2(ȳj − ȳi, x̄j − x̄i)`, in `(−π, π]`.
    pub theta: f64,
    pub distance: f64,
    pub class: RelationClass,
}

/// A relation bound to two instances by index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelationJudgment {
    pub subject: usize,
    pub object: usize,
    pub relation: Relation,
}

/// Classifies where `cj` lies relative to `ci`. Returns `Ok(None)` when the
/// centroids are no more than `min_dist` apart.
pub fn classify_relation(
    ci: (f64, f64),
    cj: (f64, f64),
    min_dist: f64,
) -> Result<Option<Relation>, GeometryError> {
    let dx = cj.0 - ci.0;
    let dy = cj.1 - ci.1;
    if dx == 0.0 && dy == 0.0 {
        return Err(GeometryError::DegenerateCentroids);
    }
    let distance = libm::hypot(dx, dy);
    if distance <= min_dist {
        return Ok(None);
    }
    let theta = libm::atan2(dy, dx);
    Ok(Some(Relation {
        theta,
        distance,
        class: RelationClass::from_angle(theta),
    }))
}

/// Relation of instance `object` seen from instance `subject`.
pub fn judge_pair(
    instances: &[ObjectInstance],
    subject: usize,
    object: usize,
    min_dist: f64,
) -> Result<Option<RelationJudgment>, GeometryError> {
    let rel = classify_relation(instances[subject].centroid, instances[object].centroid, min_dist)?;
    Ok(rel.map(|relation| RelationJudgment {
        subject,
        object,
        relation,
    }))
}
