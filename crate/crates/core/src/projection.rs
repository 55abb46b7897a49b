//! LiDAR → camera → image projection, per-object mean depth and mean
//! world-frame height.

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::linalg::{self, Vec3};
use crate::scene::{CameraModel, ObjectInstance, PointCloud, PoseTransform, SceneFrame};

/// Default tolerance (meters) under which two heights count as comparable.
pub const HEIGHT_TOLERANCE: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProjectionError {
    MissingCloud,
    MissingCamera,
    MissingPose,
    NoLidarCoverage,
}

impl fmt::Display for ProjectionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::MissingCloud => "frame has no point cloud",
            Self::MissingCamera => "frame has no camera model",
            Self::MissingPose => "frame has no pose",
            Self::NoLidarCoverage => "no LiDAR point projects into the object mask",
        })
    }
}

/// A LiDAR point that lands on the image.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectedPoint {
    pub u: f64,
    pub v: f64,
    /// Camera-frame z (meters), always positive.
    pub depth: f64,
    /// Index into the camera-frame point list (and so the source cloud).
    pub source_index: usize,
}

/// `p_cam = R·p + t` for every point, order preserved.
pub fn lidar_to_camera(cloud: &PointCloud, cam: &CameraModel) -> Vec<Vec3> {
    cloud
        .points
        .iter()
        .map(|p| {
            let r = linalg::mat3_mul_vec(&cam.rotation, p);
            [r[0] + cam.translation[0], r[1] + cam.translation[1], r[2] + cam.translation[2]]
        })
        .collect()
}

/// Pinhole projection. Keeps points with `z > 0` whose pixel lies in
/// `[0, width) × [0, height)`.
pub fn project_to_image(
    cam_points: &[Vec3],
    cam: &CameraModel,
    width: u32,
    height: u32,
) -> Vec<ProjectedPoint> {
    let (w, h) = (f64::from(width), f64::from(height));
    cam_points
        .iter()
        .enumerate()
        .filter_map(|(source_index, p)| {
            let z = p[2];
            if !(z > 0.0) {
                return None;
            }
            let u = cam.fx * p[0] / z + cam.cx;
            let v = cam.fy * p[1] / z + cam.cy;
            (u >= 0.0 && u < w && v >= 0.0 && v < h).then_some(ProjectedPoint {
                u,
                v,
                depth: z,
                source_index,
            })
        })
        .collect()
}

/// Inverse of the pinhole projection at a known depth.
pub fn lift(u: f64, v: f64, depth: f64, cam: &CameraModel) -> Vec3 {
    [(u - cam.cx) * depth / cam.fx, (v - cam.cy) * depth / cam.fy, depth]
}

/// Camera-frame points of the frame's cloud whose rounded projection falls
/// inside `inst`.
pub fn in_mask_camera_points(
    frame: &SceneFrame,
    inst: &ObjectInstance,
) -> Result<Vec<Vec3>, ProjectionError> {
    let cloud = frame.cloud.as_ref().ok_or(ProjectionError::MissingCloud)?;
    let cam = frame.camera.as_ref().ok_or(ProjectionError::MissingCamera)?;
    let cam_points = lidar_to_camera(cloud, cam);
    let hits: Vec<Vec3> = project_to_image(&cam_points, cam, frame.width(), frame.height())
        .into_iter()
        .filter(|p| inst.contains_rounded(p.u, p.v))
        .map(|p| cam_points[p.source_index])
        .collect();
    if hits.is_empty() {
        return Err(ProjectionError::NoLidarCoverage);
    }
    Ok(hits)
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

/// Mean camera-frame depth of the LiDAR points landing in the mask.
pub fn object_mean_depth(frame: &SceneFrame, inst: &ObjectInstance) -> Result<f64, ProjectionError> {
    let pts = in_mask_camera_points(frame, inst)?;
    Ok(mean(pts.iter().map(|p| p[2])))
}

/// Mean world-frame altitude of the in-mask points after applying the pose.
pub fn object_mean_height(frame: &SceneFrame, inst: &ObjectInstance) -> Result<f64, ProjectionError> {
    let pose = frame.pose.as_ref().ok_or(ProjectionError::MissingPose)?;
    let pts = in_mask_camera_points(frame, inst)?;
    Ok(mean_world_height(&pts, pose))
}

pub fn mean_world_height(cam_points: &[Vec3], pose: &PoseTransform) -> f64 {
    mean(cam_points.iter().map(|p| pose.apply(p)[2]))
}

/// Absolute difference of two object depths.
pub fn object_separation(depth_a: f64, depth_b: f64) -> f64 {
    libm::fabs(depth_a - depth_b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeightVerdict {
    AHigher,
    BHigher,
    Comparable,
}

pub fn compare_heights(h_a: f64, h_b: f64, tol: f64) -> HeightVerdict {
    if libm::fabs(h_a - h_b) <= tol {
        HeightVerdict::Comparable
    } else if h_a > h_b {
        HeightVerdict::AHigher
    } else {
        HeightVerdict::BHigher
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rot_z;
    use crate::scene::{Pixel, RgbImage, SemanticMask};
    use alloc::collections::BTreeMap;
    use alloc::string::ToString;
    use alloc::vec;

    fn cam() -> CameraModel {
        CameraModel::with_identity_extrinsics(100.0, 100.0, 50.0, 50.0)
    }

    #[test]
    fn identity_extrinsics_pass_through() {
        let cloud = PointCloud::new(vec![[1.0, 2.0, 3.0], [-4.0, 5.0, 6.5]]);
        assert_eq!(lidar_to_camera(&cloud, &cam()), cloud.points);
    }

    #[test]
    fn translation_and_rotation() {
        let mut c = cam();
        c.translation = [0.0, 0.0, 10.0];
        let out = lidar_to_camera(&PointCloud::new(vec![[0.0, 0.0, 5.0]]), &c);
        assert_eq!(out, vec![[0.0, 0.0, 15.0]]);

        let mut c = cam();
        c.rotation = rot_z(core::f64::consts::FRAC_PI_2);
        let out = lidar_to_camera(&PointCloud::new(vec![[1.0, 0.0, 0.0]]), &c);
        assert!((out[0][0]).abs() < 1e-9 && (out[0][1] - 1.0).abs() < 1e-9 && out[0][2].abs() < 1e-9);
    }

    #[test]
    fn projection_examples() {
        let p = project_to_image(&[[0.0, 0.0, 10.0], [0.0, 0.0, -1.0], [1.0, 0.0, 10.0]], &cam(), 100, 100);
        assert_eq!(p.len(), 2);
        assert_eq!((p[0].u, p[0].v, p[0].depth), (50.0, 50.0, 10.0));
        assert_eq!((p[1].u, p[1].v, p[1].source_index), (60.0, 50.0, 2));
    }

    #[test]
    fn projection_drops_out_of_bounds() {
        // u = 100 lands exactly on the right edge and is excluded.
        let p = project_to_image(&[[5.0, 0.0, 10.0], [0.0, -5.0, 10.0]], &cam(), 100, 100);
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].v, 0.0);
    }

    fn frame_with(points: Vec<Vec3>, pose: Option<PoseTransform>) -> (SceneFrame, ObjectInstance) {
        let table: BTreeMap<u16, _> = [(0, "ground".to_string()), (1, "roof".to_string())].into();
        let mut mask = SemanticMask::filled(100, 100, 0, table);
        let mut px = Vec::new();
        for y in 40..60 {
            for x in 40..60 {
                mask.set(x, y, 1);
                px.push(Pixel::new(x, y));
            }
        }
        let frame = SceneFrame {
            frame_id: "t".into(),
            rgb: RgbImage::filled(100, 100, [0, 0, 0]),
            mask,
            cloud: Some(PointCloud::new(points)),
            camera: Some(cam()),
            pose,
        };
        (frame, ObjectInstance::from_pixels(1, px).unwrap())
    }

    #[test]
    fn mean_depth_averages_in_mask_points() {
        let c = cam();
        let pts = vec![
            lift(45.0, 45.0, 10.0, &c),
            lift(55.0, 55.0, 20.0, &c),
            lift(5.0, 5.0, 99.0, &c), // outside the mask
        ];
        let (frame, inst) = frame_with(pts, None);
        assert_eq!(object_mean_depth(&frame, &inst), Ok(15.0));
        assert_eq!(object_mean_height(&frame, &inst), Err(ProjectionError::MissingPose));
    }

    #[test]
    fn lidar_shadow_is_an_error() {
        let (frame, inst) = frame_with(vec![lift(5.0, 5.0, 30.0, &cam())], None);
        assert_eq!(object_mean_depth(&frame, &inst), Err(ProjectionError::NoLidarCoverage));
    }

    #[test]
    fn heights_through_pose() {
        let c = cam();
        let pts = vec![lift(45.0, 45.0, 12.0, &c), lift(50.0, 52.0, 12.0, &c)];
        let (frame, inst) = frame_with(pts.clone(), Some(PoseTransform::IDENTITY));
        assert_eq!(object_mean_height(&frame, &inst), Ok(12.0));

        let up5 = PoseTransform::from_rigid(&crate::linalg::IDENTITY3, &[0.0, 0.0, 5.0]);
        let (frame, inst) = frame_with(pts, Some(up5));
        assert_eq!(object_mean_height(&frame, &inst), Ok(17.0));

        let flip = PoseTransform::from_rigid(&crate::linalg::rot_x(core::f64::consts::PI), &[0.0, 0.0, 1.5]);
        let (frame, inst) = frame_with(vec![lift(50.0, 50.0, 3.0, &c)], Some(flip));
        let h = object_mean_height(&frame, &inst).unwrap();
        assert!((h - (-3.0 + 1.5)).abs() < 1e-12);
    }

    #[test]
    fn height_comparison() {
        assert_eq!(compare_heights(10.0, 4.0, 0.5), HeightVerdict::AHigher);
        assert_eq!(compare_heights(4.2, 4.3, 0.5), HeightVerdict::Comparable);
        assert_eq!(compare_heights(4.2, 5.0, 0.5), HeightVerdict::BHigher);
        assert_eq!(compare_heights(1.0, 1.5, 0.5), HeightVerdict::Comparable);
    }
}
