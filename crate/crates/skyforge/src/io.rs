//! Scene directories on disk.
//!
//! ```text
//! <scene>/rgb.png        8-bit RGB
//! <scene>/mask.png       16-bit grayscale class ids
//! <scene>/classes.json   {"classes": [{"id": 0, "name": "..."}]}
//! <scene>/cloud.bin      optional, little-endian f32 (x, y, z, intensity)
//! <scene>/camera.json    optional, {fx, fy, cx, cy, rotation[9], translation[3]}
//! <scene>/pose.txt       optional, 16 numbers, row-major 4x4
//! ```
//!
//! The frame id is the directory name.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use image::{ImageBuffer, Luma, Rgb};
use serde::{Deserialize, Serialize};
use skyforge_core::scene::{validate_camera, validate_pose, Violation};
use skyforge_core::{CameraModel, PointCloud, PoseTransform, RgbImage, SceneFrame, SemanticMask};
use thiserror::Error;

pub const RGB_FILE: &str = "rgb.png";
pub const MASK_FILE: &str = "mask.png";
pub const CLASSES_FILE: &str = "classes.json";
pub const CLOUD_FILE: &str = "cloud.bin";
pub const CAMERA_FILE: &str = "camera.json";
pub const POSE_FILE: &str = "pose.txt";

#[derive(Debug, Error)]
pub enum SceneIoError {
    #[error("{}: file not found", .0.display())]
    MissingFile(PathBuf),
    #[error("{}: {detail}", path.display())]
    DimensionMismatch { path: PathBuf, detail: String },
    #[error("{}: class id {id} is not listed in {CLASSES_FILE}", path.display())]
    UnknownClassId { path: PathBuf, id: u16 },
    #[error("{}: {detail}", path.display())]
    MalformedMatrix { path: PathBuf, detail: String },
    #[error("{}: {detail}", path.display())]
    Malformed { path: PathBuf, detail: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl SceneIoError {
    /// The file the error is about.
    pub fn path(&self) -> &Path {
        match self {
            Self::MissingFile(p) => p,
            Self::DimensionMismatch { path, .. }
            | Self::UnknownClassId { path, .. }
            | Self::MalformedMatrix { path, .. }
            | Self::Malformed { path, .. }
            | Self::Io { path, .. } => path,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ClassEntry {
    id: u16,
    name: String,
}

#[derive(Serialize, Deserialize)]
struct ClassesFile {
    classes: Vec<ClassEntry>,
}

#[derive(Serialize, Deserialize)]
struct CameraFile {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    rotation: Vec<f64>,
    translation: Vec<f64>,
}

fn malformed(path: &Path, detail: impl ToString) -> SceneIoError {
    SceneIoError::Malformed {
        path: path.to_path_buf(),
        detail: detail.to_string(),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, SceneIoError> {
    fs::read(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            SceneIoError::MissingFile(path.to_path_buf())
        } else {
            SceneIoError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), SceneIoError> {
    fs::write(path, bytes).map_err(|source| SceneIoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load_rgb(path: &Path) -> Result<RgbImage, SceneIoError> {
    let img = image::load_from_memory_with_format(&read(path)?, image::ImageFormat::Png)
        .map_err(|e| malformed(path, e))?
        .to_rgb8();
    Ok(RgbImage {
        width: img.width(),
        height: img.height(),
        data: img.into_raw(),
    })
}

fn load_mask(path: &Path, table: BTreeMap<u16, String>) -> Result<SemanticMask, SceneIoError> {
    let img = image::load_from_memory_with_format(&read(path)?, image::ImageFormat::Png)
        .map_err(|e| malformed(path, e))?;
    let gray = match img {
        image::DynamicImage::ImageLuma16(g) => g,
        image::DynamicImage::ImageLuma8(g) => {
            ImageBuffer::from_fn(g.width(), g.height(), |x, y| Luma([u16::from(g.get_pixel(x, y)[0])]))
        }
        other => {
            return Err(malformed(
                path,
                format!("expected a grayscale PNG, found {:?}", other.color()),
            ))
        }
    };
    let (width, height) = gray.dimensions();
    let class_ids = gray.into_raw();
    if let Some(&id) = class_ids.iter().find(|id| !table.contains_key(id)) {
        return Err(SceneIoError::UnknownClassId {
            path: path.to_path_buf(),
            id,
        });
    }
    Ok(SemanticMask {
        width,
        height,
        class_ids,
        class_table: table,
    })
}

fn load_classes(path: &Path) -> Result<BTreeMap<u16, String>, SceneIoError> {
    let file: ClassesFile = serde_json::from_slice(&read(path)?).map_err(|e| malformed(path, e))?;
    let mut table = BTreeMap::new();
    for c in file.classes {
        if table.insert(c.id, c.name).is_some() {
            return Err(malformed(path, format!("class id {} listed twice", c.id)));
        }
    }
    Ok(table)
}

fn load_cloud(path: &Path) -> Result<PointCloud, SceneIoError> {
    let bytes = read(path)?;
    if bytes.len() % 16 != 0 {
        return Err(malformed(path, format!("{} bytes is not a whole number of 16-byte points", bytes.len())));
    }
    let mut cloud = PointCloud::new(Vec::with_capacity(bytes.len() / 16));
    for chunk in bytes.chunks_exact(16) {
        let f = |i: usize| f32::from_le_bytes(chunk[i * 4..i * 4 + 4].try_into().expect("4-byte slice"));
        cloud.points.push([f64::from(f(0)), f64::from(f(1)), f64::from(f(2))]);
        cloud.intensity.push(f(3));
    }
    Ok(cloud)
}

fn matrix_error(path: &Path, violations: &[Violation]) -> Result<(), SceneIoError> {
    match violations.first() {
        None => Ok(()),
        Some(v) => Err(SceneIoError::MalformedMatrix {
            path: path.to_path_buf(),
            detail: v.to_string(),
        }),
    }
}

fn load_camera(path: &Path) -> Result<CameraModel, SceneIoError> {
    let file: CameraFile = serde_json::from_slice(&read(path)?).map_err(|e| malformed(path, e))?;
    if file.rotation.len() != 9 || file.translation.len() != 3 {
        return Err(SceneIoError::MalformedMatrix {
            path: path.to_path_buf(),
            detail: format!(
                "rotation needs 9 values and translation 3, found {} and {}",
                file.rotation.len(),
                file.translation.len()
            ),
        });
    }
    let r = &file.rotation;
    let cam = CameraModel {
        fx: file.fx,
        fy: file.fy,
        cx: file.cx,
        cy: file.cy,
        rotation: [[r[0], r[1], r[2]], [r[3], r[4], r[5]], [r[6], r[7], r[8]]],
        translation: [file.translation[0], file.translation[1], file.translation[2]],
    };
    let mut v = Vec::new();
    validate_camera(&cam, &mut v);
    matrix_error(path, &v)?;
    Ok(cam)
}

fn load_pose(path: &Path) -> Result<PoseTransform, SceneIoError> {
    let text = String::from_utf8(read(path)?).map_err(|e| malformed(path, e))?;
    let values: Vec<f64> = text
        .split_whitespace()
        .map(str::parse)
        .collect::<Result<_, _>>()
        .map_err(|e| SceneIoError::MalformedMatrix {
            path: path.to_path_buf(),
            detail: format!("not a number: {e}"),
        })?;
    if values.len() != 16 {
        return Err(SceneIoError::MalformedMatrix {
            path: path.to_path_buf(),
            detail: format!("expected 16 values, found {}", values.len()),
        });
    }
    let mut matrix = [[0.0; 4]; 4];
    for (i, v) in values.into_iter().enumerate() {
        matrix[i / 4][i % 4] = v;
    }
    let pose = PoseTransform { matrix };
    let mut v = Vec::new();
    validate_pose(&pose, &mut v);
    matrix_error(path, &v)?;
    Ok(pose)
}

fn optional<T>(path: PathBuf, load: impl Fn(&Path) -> Result<T, SceneIoError>) -> Result<Option<T>, SceneIoError> {
    if path.exists() {
        load(&path).map(Some)
    } else {
        Ok(None)
    }
}

/// Reads one scene directory.
pub fn load_scene(dir: &Path) -> Result<SceneFrame, SceneIoError> {
    let table = load_classes(&dir.join(CLASSES_FILE))?;
    let mask_path = dir.join(MASK_FILE);
    let mask = load_mask(&mask_path, table)?;
    let rgb_path = dir.join(RGB_FILE);
    let rgb = load_rgb(&rgb_path)?;
    if (rgb.width, rgb.height) != (mask.width, mask.height) {
        return Err(SceneIoError::DimensionMismatch {
            path: rgb_path,
            detail: format!(
                "image is {}x{} but {MASK_FILE} is {}x{}",
                rgb.width, rgb.height, mask.width, mask.height
            ),
        });
    }
    let frame_id = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string());
    Ok(SceneFrame {
        frame_id,
        rgb,
        mask,
        cloud: optional(dir.join(CLOUD_FILE), load_cloud)?,
        camera: optional(dir.join(CAMERA_FILE), load_camera)?,
        pose: optional(dir.join(POSE_FILE), load_pose)?,
    })
}

/// Writes a frame into `dir`, creating it if needed. Cloud coordinates are
/// stored as f32.
pub fn save_scene(frame: &SceneFrame, dir: &Path) -> Result<(), SceneIoError> {
    fs::create_dir_all(dir).map_err(|source| SceneIoError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let png_err = |path: &Path, e: image::ImageError| malformed(path, e);

    let rgb_path = dir.join(RGB_FILE);
    let rgb: ImageBuffer<Rgb<u8>, Vec<u8>> =
        ImageBuffer::from_raw(frame.rgb.width, frame.rgb.height, frame.rgb.data.clone())
            .ok_or_else(|| malformed(&rgb_path, "pixel buffer does not match dimensions"))?;
    rgb.save_with_format(&rgb_path, image::ImageFormat::Png)
        .map_err(|e| png_err(&rgb_path, e))?;

    let mask_path = dir.join(MASK_FILE);
    let mask: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(frame.mask.width, frame.mask.height, frame.mask.class_ids.clone())
            .ok_or_else(|| malformed(&mask_path, "class buffer does not match dimensions"))?;
    mask.save_with_format(&mask_path, image::ImageFormat::Png)
        .map_err(|e| png_err(&mask_path, e))?;

    let classes = ClassesFile {
        classes: frame
            .mask
            .class_table
            .iter()
            .map(|(&id, name)| ClassEntry { id, name: name.clone() })
            .collect(),
    };
    write(&dir.join(CLASSES_FILE), &to_pretty_json(&classes))?;

    if let Some(cloud) = &frame.cloud {
        let mut bytes = Vec::with_capacity(cloud.points.len() * 16);
        for (i, p) in cloud.points.iter().enumerate() {
            let intensity = cloud.intensity.get(i).copied().unwrap_or(0.0);
            for v in [p[0] as f32, p[1] as f32, p[2] as f32, intensity] {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        write(&dir.join(CLOUD_FILE), &bytes)?;
    }
    if let Some(cam) = &frame.camera {
        let file = CameraFile {
            fx: cam.fx,
            fy: cam.fy,
            cx: cam.cx,
            cy: cam.cy,
            rotation: cam.rotation.iter().flatten().copied().collect(),
            translation: cam.translation.to_vec(),
        };
        write(&dir.join(CAMERA_FILE), &to_pretty_json(&file))?;
    }
    if let Some(pose) = &frame.pose {
        let rows: Vec<String> = pose
            .matrix
            .iter()
            .map(|r| r.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(" "))
            .collect();
        write(&dir.join(POSE_FILE), format!("{}\n", rows.join("\n")).as_bytes())?;
    }
    Ok(())
}

fn to_pretty_json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(v).expect("serializable");
    bytes.push(b'\n');
    bytes
}

/// Scene directories under `root` (those holding a mask), sorted by name.
pub fn discover_scenes(root: &Path) -> Result<Vec<PathBuf>, SceneIoError> {
    let entries = fs::read_dir(root).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            SceneIoError::MissingFile(root.to_path_buf())
        } else {
            SceneIoError::Io {
                path: root.to_path_buf(),
                source,
            }
        }
    })?;
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.join(MASK_FILE).is_file())
        .collect();
    if root.join(MASK_FILE).is_file() {
        dirs.push(root.to_path_buf());
    }
    dirs.sort();
    Ok(dirs)
}
