//! World-frame alignment utilities: gravity alignment for in-the-wild
//! trajectories, hand depth correction from metric depth grids, and object
//! scale search by silhouette rendering error.

use thiserror::Error;

use crate::geom::{sample_surface, GeomError, RigidTransform, TriMesh, Vec3};
use crate::scalar::{real, Real};
use crate::trajectory::Trajectory;

#[derive(Debug, Error)]
pub enum CalibError {
    #[error("gravity vector is (near) zero")]
    ZeroVector,
    #[error("no keypoint falls on a valid depth sample")]
    NoValidSamples,
    #[error("candidate list is empty")]
    EmptyCandidates,
    #[error("no candidate projects any point into the image")]
    NoVisiblePoints,
    #[error("invalid intrinsics: {0}")]
    BadIntrinsics(String),
    #[error("mask is {mask_rows}x{mask_cols} but intrinsics expect {rows}x{cols}")]
    MaskSizeMismatch {
        mask_rows: usize,
        mask_cols: usize,
        rows: usize,
        cols: usize,
    },
    #[error("depth grid dimensions must be positive")]
    EmptyGrid,
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// Metric depth per pixel, row-major; values <= 0 mark invalid samples.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthGrid<R> {
    rows: usize,
    cols: usize,
    values: Vec<R>,
}

impl<R: Real> DepthGrid<R> {
    pub fn new(rows: usize, cols: usize, values: Vec<R>) -> Result<Self, CalibError> {
        if rows == 0 || cols == 0 || values.len() != rows * cols {
            return Err(CalibError::EmptyGrid);
        }
        Ok(Self { rows, cols, values })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> R {
        self.values[row * self.cols + col]
    }

    #[inline]
    pub fn values(&self) -> &[R] {
        &self.values
    }
}

/// Pinhole camera intrinsics in pixels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraIntrinsics<R> {
    pub fx: R,
    pub fy: R,
    pub cx: R,
    pub cy: R,
    pub width: usize,
    pub height: usize,
}

impl<R: Real> CameraIntrinsics<R> {
    pub fn new(
        fx: R,
        fy: R,
        cx: R,
        cy: R,
        width: usize,
        height: usize,
    ) -> Result<Self, CalibError> {
        if !(fx > R::zero()) || !(fy > R::zero()) {
            return Err(CalibError::BadIntrinsics(
                "focal lengths must be positive".into(),
            ));
        }
        let w = R::from_usize(width).unwrap();
        let h = R::from_usize(height).unwrap();
        let half = real::<R>(0.5);
        if cx < -w * half || cx > w + w * half || cy < -h * half || cy > h + h * half {
            return Err(CalibError::BadIntrinsics(
                "principal point outside image bounds +- 50%".into(),
            ));
        }
        Ok(Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        })
    }
}

/// Binary occupancy image, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskImage {
    rows: usize,
    cols: usize,
    data: Vec<bool>,
}

impl MaskImage {
    pub fn new(rows: usize, cols: usize, data: Vec<bool>) -> Option<Self> {
        (data.len() == rows * cols && rows > 0 && cols > 0).then_some(Self { rows, cols, data })
    }

    pub fn empty(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![false; rows * cols],
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: bool) {
        self.data[row * self.cols + col] = v;
    }

    #[inline]
    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn count_set(&self) -> usize {
        self.data.iter().filter(|v| **v).count()
    }

    /// Intersection-over-union; two empty masks count as identical (1.0).
    pub fn iou(&self, other: &MaskImage) -> f64 {
        let mut inter = 0usize;
        let mut union = 0usize;
        for (a, b) in self.data.iter().zip(&other.data) {
            if *a && *b {
                inter += 1;
            }
            if *a || *b {
                union += 1;
            }
        }
        if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        }
    }
}

/// Minimal rotation carrying the gravity direction onto `(0, 0, -1)`:
/// axis is the cross product, angle the arc cosine of the dot, identity when
/// already aligned; the antipodal case rotates half a turn about x.
pub fn gravity_rotation<R: Real>(g_cam: Vec3<R>) -> Result<RigidTransform<R>, CalibError> {
    if g_cam.norm() <= real::<R>(1e-9) {
        return Err(CalibError::ZeroVector);
    }
    let g = g_cam.normalized().ok_or(CalibError::ZeroVector)?;
    let target = Vec3::new(R::zero(), R::zero(), -R::one());
    let axis = g.cross(target);
    let c = g.dot(target).max(-R::one()).min(R::one());
    let rotation = if axis.norm() < real::<R>(1e-12) {
        if c > R::zero() {
            crate::geom::Quat::identity()
        } else {
            crate::geom::Quat::from_axis_angle(Vec3::new(R::one(), R::zero(), R::zero()), R::PI())
                .expect("x axis is unit")
        }
    } else {
        crate::geom::Quat::from_axis_angle(axis, c.acos()).expect("axis is nonzero")
    };
    Ok(RigidTransform::from_rotation(rotation))
}

/// Left-multiply every wrist and object pose by `r`; joint values and
/// timestamps are untouched.
pub fn align_trajectory<R: Real>(traj: &Trajectory<R>, r: &RigidTransform<R>) -> Trajectory<R> {
    let mut out = traj.clone();
    for frame in &mut out.frames {
        frame.config.wrist = r.compose(&frame.config.wrist);
        for pose in frame.objects.values_mut() {
            *pose = r.compose(pose);
        }
    }
    out
}

/// Mean of the valid metric depths at the nearest pixels of the 2D
/// keypoints; out-of-bounds or non-positive samples are skipped.
pub fn hand_depth_correction<R: Real>(
    keypoints_2d: &[(R, R)],
    depth: &DepthGrid<R>,
) -> Result<R, CalibError> {
    let mut sum = R::zero();
    let mut count = 0usize;
    for &(u, v) in keypoints_2d {
        let col = u.round().to_i64().unwrap_or(-1);
        let row = v.round().to_i64().unwrap_or(-1);
        if row < 0 || col < 0 || row as usize >= depth.rows() || col as usize >= depth.cols() {
            continue;
        }
        let d = depth.at(row as usize, col as usize);
        if d > R::zero() && d.is_finite() {
            sum += d;
            count += 1;
        }
    }
    if count == 0 {
        return Err(CalibError::NoValidSamples);
    }
    Ok(sum / R::from_usize(count).unwrap())
}

/// Project a camera-frame point through the pinhole model; `None` behind
/// the camera.
#[inline]
pub fn project_pinhole<R: Real>(intr: &CameraIntrinsics<R>, p: Vec3<R>) -> Option<(R, R)> {
    if !(p.z > real::<R>(1e-12)) {
        return None;
    }
    Some((intr.fx * p.x / p.z + intr.cx, intr.fy * p.y / p.z + intr.cy))
}

/// Splat camera-frame points into a binary silhouette with one pixel of
/// dilation. Returns the mask and the number of points that landed inside
/// the image.
pub fn render_silhouette<R: Real>(
    points: &[Vec3<R>],
    intr: &CameraIntrinsics<R>,
) -> (MaskImage, usize) {
    let mut mask = MaskImage::empty(intr.height, intr.width);
    let mut visible = 0usize;
    for p in points {
        let Some((u, v)) = project_pinhole(intr, *p) else {
            continue;
        };
        let col = u.round().to_i64().unwrap_or(i64::MIN);
        let row = v.round().to_i64().unwrap_or(i64::MIN);
        if row < 0 || col < 0 || row as usize >= intr.height || col as usize >= intr.width {
            continue;
        }
        visible += 1;
        for dr in -1i64..=1 {
            for dc in -1i64..=1 {
                let rr = row + dr;
                let cc = col + dc;
                if rr >= 0 && cc >= 0 && (rr as usize) < intr.height && (cc as usize) < intr.width {
                    mask.set(rr as usize, cc as usize, true);
                }
            }
        }
    }
    (mask, visible)
}

/// One observation for the scale search: the object mask and the object
/// pose (camera frame) for that video frame.
#[derive(Clone, Debug)]
pub struct ScaleFrame<R> {
    pub mask: MaskImage,
    pub pose: RigidTransform<R>,
}

#[derive(Clone, Copy, Debug)]
pub struct ScaleSearchOptions {
    /// Surface points sampled once on the base mesh.
    pub samples: usize,
    pub seed: u64,
}

impl Default for ScaleSearchOptions {
    fn default() -> Self {
        Self {
            samples: 50_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScaleSearchResult<R> {
    pub best_scale: R,
    pub best_index: usize,
    /// `1 - mean IoU` per candidate, in candidate order.
    pub errors: Vec<R>,
}

/// Search candidate scale factors: scale the mesh about its centroid, render
/// a point-splat silhouette per frame, and score `1 - IoU` against the
/// masks, averaged over frames. Ties break toward the candidate closest to
/// scale 1. Occlusion by other scene content is not modeled; masks should
/// cover the unoccluded object.
pub fn scale_search<R: Real>(
    mesh: &TriMesh<R>,
    intr: &CameraIntrinsics<R>,
    frames: &[ScaleFrame<R>],
    candidates: &[R],
    opts: &ScaleSearchOptions,
) -> Result<ScaleSearchResult<R>, CalibError> {
    if candidates.is_empty() {
        return Err(CalibError::EmptyCandidates);
    }
    for f in frames {
        if f.mask.rows() != intr.height || f.mask.cols() != intr.width {
            return Err(CalibError::MaskSizeMismatch {
                mask_rows: f.mask.rows(),
                mask_cols: f.mask.cols(),
                rows: intr.height,
                cols: intr.width,
            });
        }
    }
    // sample once on the base mesh; scaling about the centroid maps the
    // samples consistently (face selection probabilities are scale
    // invariant)
    let base = sample_surface(mesh, opts.samples, opts.seed)?;
    let centroid = mesh.centroid();

    let mut errors = Vec::with_capacity(candidates.len());
    let mut any_visible = false;
    for &s in candidates {
        let scaled: Vec<Vec3<R>> = base
            .points
            .iter()
            .map(|p| centroid + (*p - centroid) * s)
            .collect();
        let mut err_sum = 0.0f64;
        for frame in frames {
            let cam_points: Vec<Vec3<R>> = scaled.iter().map(|p| frame.pose.apply(*p)).collect();
            let (silhouette, visible) = render_silhouette(&cam_points, intr);
            if visible > 0 {
                any_visible = true;
            }
            err_sum += 1.0 - silhouette.iou(&frame.mask);
        }
        errors.push(real::<R>(err_sum / frames.len().max(1) as f64));
    }
    if !any_visible && !frames.is_empty() {
        return Err(CalibError::NoVisiblePoints);
    }
    let mut best_index = 0usize;
    for i in 1..candidates.len() {
        let better = errors[i] < errors[best_index]
            || (errors[i] == errors[best_index]
                && (candidates[i] - R::one()).abs() < (candidates[best_index] - R::one()).abs());
        if better {
            best_index = i;
        }
    }
    Ok(ScaleSearchResult {
        best_scale: candidates[best_index],
        best_index,
        errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{shapes, Quat};
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gravity_already_aligned_is_identity() {
        let r = gravity_rotation(Vec3::new(0.0f64, 0.0, -1.0)).unwrap();
        assert!(r.rotation.dot(Quat::identity()).abs() > 1.0 - 1e-12);
        assert_eq!(r.translation, Vec3::zero());
    }

    #[test]
    fn gravity_antipodal_uses_x_axis() {
        let r = gravity_rotation(Vec3::new(0.0f64, 0.0, 1.0)).unwrap();
        let mapped = r.rotate_vector(Vec3::new(0.0, 0.0, 1.0));
        assert!(mapped.distance(Vec3::new(0.0, 0.0, -1.0)) < 1e-12);
        // half turn about x: x stays fixed
        let x = r.rotate_vector(Vec3::new(1.0, 0.0, 0.0));
        assert!(x.distance(Vec3::new(1.0, 0.0, 0.0)) < 1e-12);
    }

    #[test]
    fn gravity_diagonal_maps_exactly() {
        let g = Vec3::new(1.0f64, 0.0, -1.0) * (1.0 / 2.0f64.sqrt());
        let r = gravity_rotation(g).unwrap();
        let mapped = r.rotate_vector(g.normalized().unwrap());
        assert!(mapped.distance(Vec3::new(0.0, 0.0, -1.0)) < 1e-12);
    }

    #[test]
    fn gravity_rotation_orthonormal_for_random_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..200 {
            let g = Vec3::new(
                rng.random::<f64>() * 2.0 - 1.0,
                rng.random::<f64>() * 2.0 - 1.0,
                rng.random::<f64>() * 2.0 - 1.0,
            );
            if g.norm() < 1e-6 {
                continue;
            }
            let r = gravity_rotation(g).unwrap();
            let m = r.rotation.to_matrix();
            for i in 0..3 {
                for j in 0..3 {
                    let dot: f64 = (0..3).map(|k| m[k][i] * m[k][j]).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((dot - want).abs() < 1e-9);
                }
            }
            assert!((crate::linalg::mat3_det(m) - 1.0).abs() < 1e-9);
            let mapped = r.rotate_vector(g.normalized().unwrap());
            assert!(mapped.distance(Vec3::new(0.0, 0.0, -1.0)) < 1e-9);
        }
    }

    #[test]
    fn zero_gravity_rejected() {
        assert!(matches!(
            gravity_rotation(Vec3::new(0.0f64, 0.0, 0.0)),
            Err(CalibError::ZeroVector)
        ));
    }

    fn small_trajectory() -> Trajectory<f64> {
        use crate::robot::RobotConfig;
        use crate::trajectory::Frame;
        use std::collections::BTreeMap;
        let mut frames = Vec::new();
        for i in 0..5 {
            let mut objects = BTreeMap::new();
            objects.insert(
                "obj".to_string(),
                RigidTransform::new(
                    Quat::from_axis_angle(Vec3::new(0.0, 1.0, 0.0), 0.1 * i as f64).unwrap(),
                    Vec3::new(0.1 * i as f64, 0.0, 0.0),
                ),
            );
            frames.push(Frame {
                time: i as f64 / 30.0,
                config: RobotConfig::new(
                    RigidTransform::from_translation(Vec3::new(0.0, 0.05 * i as f64, 0.1)),
                    vec![0.1, 0.2],
                ),
                objects,
            });
        }
        Trajectory::new(vec!["a".into(), "b".into()], frames).unwrap()
    }

    #[test]
    fn align_identity_is_noop() {
        let traj = small_trajectory();
        let aligned = align_trajectory(&traj, &RigidTransform::identity());
        assert_eq!(aligned, traj);
    }

    #[test]
    fn align_round_trip_restores() {
        let traj = small_trajectory();
        let r = gravity_rotation(Vec3::new(0.3f64, -0.2, -0.9)).unwrap();
        let back = align_trajectory(&align_trajectory(&traj, &r), &r.inverse());
        for (a, b) in traj.frames.iter().zip(&back.frames) {
            assert!(
                a.config
                    .wrist
                    .translation
                    .distance(b.config.wrist.translation)
                    < 1e-9
            );
            assert!(a.config.wrist.rotation.dot(b.config.wrist.rotation).abs() > 1.0 - 1e-9);
        }
    }

    #[test]
    fn align_preserves_relative_wrist_transforms() {
        let traj = small_trajectory();
        let r = gravity_rotation(Vec3::new(0.5f64, 0.5, -0.7)).unwrap();
        let aligned = align_trajectory(&traj, &r);
        for i in 1..traj.len() {
            let rel_before = traj.frames[i - 1]
                .config
                .wrist
                .inverse()
                .compose(&traj.frames[i].config.wrist);
            let rel_after = aligned.frames[i - 1]
                .config
                .wrist
                .inverse()
                .compose(&aligned.frames[i].config.wrist);
            assert!(rel_before.translation.distance(rel_after.translation) < 1e-9);
            assert!(rel_before.rotation.dot(rel_after.rotation).abs() > 1.0 - 1e-9);
        }
    }

    #[test]
    fn tilted_resting_object_aligns_up() {
        // camera tilted 25 degrees about y: gravity in camera frame
        let phi = 25.0f64.to_radians();
        let g_cam = Vec3::new(phi.sin(), 0.0, -phi.cos());
        // resting object: its local z points opposite gravity
        let up_cam = -g_cam;
        let obj_rot = {
            let axis = Vec3::new(0.0, 0.0, 1.0).cross(up_cam);
            Quat::from_axis_angle(axis, Vec3::new(0.0, 0.0, 1.0).dot(up_cam).acos()).unwrap()
        };
        let mut traj = small_trajectory();
        for f in &mut traj.frames {
            f.objects
                .insert("obj".into(), RigidTransform::from_rotation(obj_rot));
        }
        let r = gravity_rotation(g_cam).unwrap();
        let aligned = align_trajectory(&traj, &r);
        for f in &aligned.frames {
            let up_world = f.objects["obj"].rotate_vector(Vec3::new(0.0, 0.0, 1.0));
            assert!(
                up_world.dot(Vec3::new(0.0, 0.0, 1.0)) > 0.999,
                "{up_world:?}"
            );
        }
    }

    #[test]
    fn depth_correction_constant_grid() {
        let grid = DepthGrid::new(4, 4, vec![0.7f64; 16]).unwrap();
        let d = hand_depth_correction(&[(1.0, 1.0), (2.0, 3.0)], &grid).unwrap();
        assert!((d - 0.7).abs() < 1e-12);
    }

    #[test]
    fn depth_correction_mean_of_two() {
        let mut values = vec![0.0f64; 16];
        values[0] = 0.6; // (row 0, col 0)
        values[5] = 0.8; // (row 1, col 1)
        let grid = DepthGrid::new(4, 4, values).unwrap();
        let d = hand_depth_correction(&[(0.0, 0.0), (1.0, 1.0)], &grid).unwrap();
        assert!((d - 0.7).abs() < 1e-12);
    }

    #[test]
    fn depth_correction_skips_outside_and_invalid() {
        let mut values = vec![-1.0f64; 16];
        values[10] = 0.5; // (row 2, col 2)
        let grid = DepthGrid::new(4, 4, values).unwrap();
        // manual count: only the in-bounds valid keypoint contributes
        let d = hand_depth_correction(&[(2.0, 2.0), (100.0, 2.0), (-3.0, 1.0), (1.0, 1.0)], &grid)
            .unwrap();
        assert!((d - 0.5).abs() < 1e-12);
        let all_bad = hand_depth_correction(&[(1.0, 1.0)], &grid);
        assert!(matches!(all_bad, Err(CalibError::NoValidSamples)));
    }

    #[test]
    fn pinhole_projection_hand_check() {
        let intr = CameraIntrinsics::new(100.0f64, 120.0, 64.0, 48.0, 128, 96).unwrap();
        let (u, v) = project_pinhole(&intr, Vec3::new(0.2, -0.1, 0.5)).unwrap();
        assert!((u - (100.0 * 0.2 / 0.5 + 64.0)).abs() < 1e-12);
        assert!((v - (120.0 * -0.1 / 0.5 + 48.0)).abs() < 1e-12);
        assert!(project_pinhole(&intr, Vec3::new(0.0, 0.0, -1.0)).is_none());
    }

    #[test]
    fn intrinsics_validation() {
        assert!(CameraIntrinsics::new(0.0f64, 1.0, 0.0, 0.0, 10, 10).is_err());
        assert!(CameraIntrinsics::new(10.0f64, 10.0, 100.0, 0.0, 10, 10).is_err());
        assert!(CameraIntrinsics::new(10.0f64, 10.0, 5.0, 5.0, 10, 10).is_ok());
    }

    fn test_scene() -> (
        TriMesh<f64>,
        CameraIntrinsics<f64>,
        Vec<RigidTransform<f64>>,
    ) {
        let mesh = shapes::cuboid::<f64>(Vec3::new(0.08, 0.05, 0.12));
        let intr = CameraIntrinsics::new(300.0, 300.0, 80.0, 60.0, 160, 120).unwrap();
        let poses = (0..3)
            .map(|i| {
                RigidTransform::new(
                    Quat::from_axis_angle(Vec3::new(0.3, 1.0, 0.1), 0.4 * i as f64).unwrap(),
                    Vec3::new(0.01 * i as f64, -0.01, 0.6),
                )
            })
            .collect();
        (mesh, intr, poses)
    }

    fn masks_at_scale(
        mesh: &TriMesh<f64>,
        intr: &CameraIntrinsics<f64>,
        poses: &[RigidTransform<f64>],
        scale: f64,
        opts: &ScaleSearchOptions,
    ) -> Vec<ScaleFrame<f64>> {
        let base = sample_surface(mesh, opts.samples, opts.seed).unwrap();
        let centroid = mesh.centroid();
        poses
            .iter()
            .map(|pose| {
                let cam: Vec<Vec3<f64>> = base
                    .points
                    .iter()
                    .map(|p| pose.apply(centroid + (*p - centroid) * scale))
                    .collect();
                let (mask, _) = render_silhouette(&cam, intr);
                ScaleFrame { mask, pose: *pose }
            })
            .collect()
    }

    #[test]
    fn self_consistent_scale_is_recovered() {
        let (mesh, intr, poses) = test_scene();
        let opts = ScaleSearchOptions {
            samples: 8000,
            seed: 3,
        };
        let frames = masks_at_scale(&mesh, &intr, &poses, 1.0, &opts);
        let result = scale_search(&mesh, &intr, &frames, &[0.5, 1.0, 2.0], &opts).unwrap();
        assert_eq!(result.best_scale, 1.0);
        assert_eq!(result.errors[1], 0.0);
        assert!(result.errors[0] > 0.0 && result.errors[2] > 0.0);
    }

    #[test]
    fn grid_member_scale_recovered_exactly() {
        let (mesh, intr, poses) = test_scene();
        let opts = ScaleSearchOptions {
            samples: 8000,
            seed: 9,
        };
        let frames = masks_at_scale(&mesh, &intr, &poses, 1.3, &opts);
        let candidates: Vec<f64> = (0..16).map(|i| 0.5 + 0.1 * i as f64).collect();
        let result = scale_search(&mesh, &intr, &frames, &candidates, &opts).unwrap();
        assert!(
            (result.best_scale - 1.3).abs() < 1e-12,
            "got {}",
            result.best_scale
        );
        assert_eq!(result.errors[result.best_index], 0.0);
        for (i, e) in result.errors.iter().enumerate() {
            if i != result.best_index {
                assert!(
                    *e > 0.0,
                    "candidate {} should have positive error",
                    candidates[i]
                );
            }
        }
    }

    #[test]
    fn empty_masks_tie_break_toward_unit_scale() {
        let (mesh, intr, poses) = test_scene();
        let opts = ScaleSearchOptions {
            samples: 2000,
            seed: 1,
        };
        let frames: Vec<ScaleFrame<f64>> = poses
            .iter()
            .map(|pose| ScaleFrame {
                mask: MaskImage::empty(120, 160),
                pose: *pose,
            })
            .collect();
        let result = scale_search(&mesh, &intr, &frames, &[0.5, 0.9, 2.0], &opts).unwrap();
        for e in &result.errors {
            assert_eq!(*e, 1.0);
        }
        assert_eq!(result.best_scale, 0.9);
    }

    #[test]
    fn empty_candidates_rejected() {
        let (mesh, intr, _) = test_scene();
        let err = scale_search(&mesh, &intr, &[], &[], &ScaleSearchOptions::default());
        assert!(matches!(err, Err(CalibError::EmptyCandidates)));
    }

    #[test]
    fn all_points_behind_camera_is_no_visible_points() {
        let (mesh, intr, _) = test_scene();
        let behind = RigidTransform::from_translation(Vec3::new(0.0, 0.0, -2.0));
        let frames = vec![ScaleFrame {
            mask: MaskImage::empty(120, 160),
            pose: behind,
        }];
        let opts = ScaleSearchOptions {
            samples: 500,
            seed: 2,
        };
        let err = scale_search(&mesh, &intr, &frames, &[1.0], &opts);
        assert!(matches!(err, Err(CalibError::NoVisiblePoints)));
    }
}
