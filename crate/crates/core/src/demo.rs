//! Demonstration processing: segment trajectories into grasp and
//! manipulation stages, synthesize spatially randomized demonstrations by
//! rigid equivariance, propagate grasped-object poses, and export policy
//! training data.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geom::{
    sample_surface, GeomError, NearestNeighbors, PointCloud, Quat, RigidTransform, TriMesh, Vec3,
};
use crate::io::{
    IoError, WireAction, WireActions, WireConfigRecord, WireObservation, WirePoseRecord,
};
use crate::robot::{RobotConfig, RobotError, RobotModel};
use crate::scalar::{real, Real};
use crate::trajectory::{Trajectory, TrajectoryError};

#[derive(Debug, Error)]
pub enum DemoError {
    #[error("the hand never comes within the approach distance of the object")]
    NoApproach,
    #[error("no frame lies within interaction range of the target object")]
    NoSkillSegment,
    #[error("object `{id}` missing a pose at frame {frame}")]
    MissingPose { id: String, frame: usize },
    #[error("scene meshes do not include the target object `{id}`")]
    TargetMeshMissing { id: String },
    #[error("trajectory {index} has no stage marks")]
    UnmarkedTrajectory { index: usize },
    #[error("sample {sample}: no collision-free transform found in {retries} attempts")]
    RetryExhausted { sample: usize, retries: usize },
    #[error("synthesis bounds must satisfy low <= high")]
    BadBounds,
    #[error("target object moved during the approach segment (frame {frame})")]
    TargetNotStatic { frame: usize },
    #[error(transparent)]
    Robot(#[from] RobotError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Io(#[from] IoError),
}

/// Stage segmentation thresholds.
#[derive(Clone, Copy, Debug)]
pub struct SegmentParams<R> {
    /// Approach distance defining `t1`, meters.
    pub d_approach: R,
    /// Object translation per frame that counts as "moving", meters.
    pub motion_eps: R,
    /// Fingertip-to-object distance that counts as contact, meters.
    pub contact_eps: R,
}

impl<R: Real> Default for SegmentParams<R> {
    fn default() -> Self {
        Self {
            d_approach: real(0.02),
            motion_eps: real(0.005),
            contact_eps: real(0.002),
        }
    }
}

/// Minimum distance from the fingertip-link vertices at `q` to the object
/// vertices at `pose`, and the number of fingertip links within
/// `contact_eps`.
fn fingertip_proximity<R: Real>(
    model: &RobotModel<R>,
    q: &RobotConfig<R>,
    object_index: &NearestNeighbors<R>,
    object_pose_inv: &RigidTransform<R>,
    contact_eps: R,
) -> Result<(R, usize), RobotError> {
    let spans = model.robot_mesh_spans(q)?;
    let mut global_min = R::infinity();
    let mut links_in_contact = 0usize;
    for &leaf in &model.leaf_links() {
        let Some(range) = spans.span_of(leaf) else {
            continue;
        };
        let mut link_min = R::infinity();
        for v in &spans.mesh.vertices()[range] {
            // query in object-local coordinates so the index is reusable
            let local = object_pose_inv.apply(*v);
            let (d, _) = object_index.nearest(local);
            if d < link_min {
                link_min = d;
            }
        }
        if link_min < global_min {
            global_min = link_min;
        }
        if link_min < contact_eps {
            links_in_contact += 1;
        }
    }
    Ok((global_min, links_in_contact))
}

/// Find the grasp-stage marks: `t1` is the first frame where a fingertip
/// comes within `d_approach` of the object; `t2` is the first frame at or
/// after `t1` with at least two fingertip links in contact and the object
/// starting to move over the next frame. When the object never moves, `t2`
/// falls back to the last in-contact frame (or `t1` if contact never
/// stabilizes).
pub fn segment_stages<R: Real>(
    traj: &Trajectory<R>,
    object_id: &str,
    object: &TriMesh<R>,
    model: &RobotModel<R>,
    params: &SegmentParams<R>,
) -> Result<(usize, usize), DemoError> {
    let object_index = NearestNeighbors::build(object.vertices()).map_err(DemoError::Geom)?;
    let n = traj.len();
    let mut min_dist = Vec::with_capacity(n);
    let mut contacts = Vec::with_capacity(n);
    for (i, frame) in traj.frames.iter().enumerate() {
        let pose = frame
            .objects
            .get(object_id)
            .ok_or_else(|| DemoError::MissingPose {
                id: object_id.to_string(),
                frame: i,
            })?;
        let (d, c) = fingertip_proximity(
            model,
            &frame.config,
            &object_index,
            &pose.inverse(),
            params.contact_eps,
        )?;
        min_dist.push(d);
        contacts.push(c);
    }
    let t1 = min_dist
        .iter()
        .position(|d| *d < params.d_approach)
        .ok_or(DemoError::NoApproach)?;

    let object_moving = |t: usize| -> bool {
        if t + 1 >= n {
            return false;
        }
        let a = traj.frames[t].objects[object_id].translation;
        let b = traj.frames[t + 1].objects[object_id].translation;
        a.distance(b) > params.motion_eps
    };
    let mut t2 = None;
    for t in t1..n {
        if contacts[t] >= 2 && object_moving(t) {
            t2 = Some(t);
            break;
        }
    }
    let t2 = t2.unwrap_or_else(|| (t1..n).rfind(|&t| contacts[t] >= 2).unwrap_or(t1));
    Ok((t1, t2))
}

/// Sampler and bookkeeping for rigid-equivariant demonstration synthesis.
#[derive(Clone, Debug)]
pub struct SynthesisSpec<R> {
    pub target_object: String,
    /// Translation sample box in x, meters.
    pub x_bounds: (R, R),
    /// Translation sample box in y, meters.
    pub y_bounds: (R, R),
    /// Yaw sample range about world z, radians.
    pub yaw_bounds: (R, R),
    pub count: usize,
    pub seed: u64,
    /// Sample uniform rotations instead of yaw-only.
    pub full_so3: bool,
    /// Approach distance; frames within `3 * d_approach` of the target are
    /// the skill segment.
    pub d_approach: R,
    /// Reject samples whose regenerated wrist path passes closer than this
    /// to any scene mesh, meters.
    pub clearance: R,
    pub max_retries: usize,
}

impl<R: Real> SynthesisSpec<R> {
    pub fn identity(target_object: impl Into<String>, count: usize, seed: u64) -> Self {
        Self {
            target_object: target_object.into(),
            x_bounds: (R::zero(), R::zero()),
            y_bounds: (R::zero(), R::zero()),
            yaw_bounds: (R::zero(), R::zero()),
            count,
            seed,
            full_so3: false,
            d_approach: real(0.02),
            clearance: real(0.01),
            max_retries: 20,
        }
    }

    pub fn validate(&self) -> Result<(), DemoError> {
        let ok = self.count >= 1
            && self.x_bounds.0 <= self.x_bounds.1
            && self.y_bounds.0 <= self.y_bounds.1
            && self.yaw_bounds.0 <= self.yaw_bounds.1;
        if ok {
            Ok(())
        } else {
            Err(DemoError::BadBounds)
        }
    }
}

fn sample_uniform<R: Real>(rng: &mut ChaCha8Rng, lo: R, hi: R) -> R {
    if lo == hi {
        return lo;
    }
    let u: f64 = rng.random();
    lo + (hi - lo) * real::<R>(u)
}

fn sample_transform<R: Real>(rng: &mut ChaCha8Rng, spec: &SynthesisSpec<R>) -> RigidTransform<R> {
    let x = sample_uniform(rng, spec.x_bounds.0, spec.x_bounds.1);
    let y = sample_uniform(rng, spec.y_bounds.0, spec.y_bounds.1);
    let rotation = if spec.full_so3 {
        // uniform rotation (Shoemake's method)
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let u3: f64 = rng.random();
        let a = (1.0 - u1).sqrt();
        let b = u1.sqrt();
        let two_pi = 2.0 * std::f64::consts::PI;
        Quat {
            w: real::<R>(a * (two_pi * u2).sin()),
            x: real::<R>(a * (two_pi * u2).cos()),
            y: real::<R>(b * (two_pi * u3).sin()),
            z: real::<R>(b * (two_pi * u3).cos()),
        }
        .normalized()
        .unwrap_or_else(Quat::identity)
    } else {
        let yaw = sample_uniform(rng, spec.yaw_bounds.0, spec.yaw_bounds.1);
        if yaw == R::zero() {
            Quat::identity()
        } else {
            Quat::from_axis_angle(Vec3::new(R::zero(), R::zero(), R::one()), yaw)
                .unwrap_or_else(Quat::identity)
        }
    };
    RigidTransform::new(rotation, Vec3::new(x, y, R::zero()))
}

/// Synthesize spatially randomized demonstrations. For each sampled world
/// transform `T`: skill-segment configurations and target-object poses are
/// transformed by `T`; connecting free-space segments are regenerated by
/// interpolation (linear translation and joints, slerp rotation) between
/// their unchanged outer anchor and the transformed segment entry,
/// preserving frame counts; other objects are untouched. An exactly-identity
/// sample short-circuits to a verbatim copy of the source. Samples whose
/// regenerated wrist path violates the clearance against any scene mesh are
/// redrawn up to `max_retries` times.
pub fn synthesize<R: Real>(
    source: &Trajectory<R>,
    spec: &SynthesisSpec<R>,
    scene: &BTreeMap<String, TriMesh<R>>,
    model: &RobotModel<R>,
) -> Result<Vec<Trajectory<R>>, DemoError> {
    spec.validate()?;
    if source.stage_marks.is_none() {
        return Err(DemoError::UnmarkedTrajectory { index: 0 });
    }
    let n = source.len();
    // classify frames by interaction range on the source
    let target_mesh =
        scene
            .get(&spec.target_object)
            .ok_or_else(|| DemoError::TargetMeshMissing {
                id: spec.target_object.clone(),
            })?;
    let in_range =
        {
            let index = NearestNeighbors::build(target_mesh.vertices()).map_err(DemoError::Geom)?;
            let range = real::<R>(3.0) * spec.d_approach;
            let mut flags = Vec::with_capacity(n);
            for (i, frame) in source.frames.iter().enumerate() {
                let pose = frame.objects.get(&spec.target_object).ok_or_else(|| {
                    DemoError::MissingPose {
                        id: spec.target_object.clone(),
                        frame: i,
                    }
                })?;
                let (d, _) = fingertip_proximity(
                    model,
                    &frame.config,
                    &index,
                    &pose.inverse(),
                    spec.clearance,
                )?;
                flags.push(d < range);
            }
            flags
        };
    let first_skill = in_range
        .iter()
        .position(|f| *f)
        .ok_or(DemoError::NoSkillSegment)?;
    // the approach segment must see a static target (it is about to be
    // moved to a randomized location)
    for i in 1..first_skill {
        let a = source.frames[i - 1]
            .objects
            .get(&spec.target_object)
            .ok_or_else(|| DemoError::MissingPose {
                id: spec.target_object.clone(),
                frame: i,
            })?;
        let b = &source.frames[i].objects[&spec.target_object];
        if a.translation.distance(b.translation) > real::<R>(1e-6) {
            return Err(DemoError::TargetNotStatic { frame: i });
        }
    }

    // motion runs: maximal [start, end) ranges of out-of-range frames
    let mut motion_runs = Vec::new();
    let mut i = 0usize;
    while i < n {
        if !in_range[i] {
            let start = i;
            while i < n && !in_range[i] {
                i += 1;
            }
            motion_runs.push((start, i));
        } else {
            i += 1;
        }
    }

    let mut out = Vec::with_capacity(spec.count);
    for sample in 0..spec.count {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(sample as u64));
        let mut accepted = None;
        for _ in 0..spec.max_retries.max(1) {
            let t = sample_transform(&mut rng, spec);
            if t.is_identity_exact() {
                accepted = Some(source.clone());
                break;
            }
            let candidate = apply_sample(source, spec, &in_range, &motion_runs, &t)?;
            if candidate_clear(&candidate, spec, scene, &motion_runs) {
                accepted = Some(candidate);
                break;
            }
        }
        let Some(traj) = accepted else {
            return Err(DemoError::RetryExhausted {
                sample,
                retries: spec.max_retries.max(1),
            });
        };
        out.push(traj);
    }
    Ok(out)
}

fn apply_sample<R: Real>(
    source: &Trajectory<R>,
    spec: &SynthesisSpec<R>,
    in_range: &[bool],
    motion_runs: &[(usize, usize)],
    t: &RigidTransform<R>,
) -> Result<Trajectory<R>, DemoError> {
    let n = source.len();
    let mut traj = source.clone();
    // target object pose is randomized everywhere; skill-frame configs move
    // with it
    for frame in traj.frames.iter_mut() {
        if let Some(pose) = frame.objects.get_mut(&spec.target_object) {
            *pose = t.compose(pose);
        }
    }
    for (i, frame) in traj.frames.iter_mut().enumerate() {
        if in_range[i] {
            frame.config.wrist = t.compose(&frame.config.wrist);
        }
    }
    // regenerate motion runs between their anchors
    for &(start, end) in motion_runs {
        let (anchor_before, from_idx) = if start == 0 {
            (source.frames[0].config.clone(), 0)
        } else {
            (traj.frames[start - 1].config.clone(), start - 1)
        };
        let (anchor_after, to_idx) = if end < n {
            (traj.frames[end].config.clone(), end)
        } else {
            (source.frames[n - 1].config.clone(), n - 1)
        };
        let span = to_idx - from_idx;
        if span == 0 {
            continue;
        }
        for i in start..end.min(n) {
            let u = R::from_usize(i - from_idx).unwrap() / R::from_usize(span).unwrap();
            traj.frames[i].config = anchor_before.interpolate(&anchor_after, u);
        }
    }
    Ok(traj)
}

/// Clearance check on the regenerated motion frames: the wrist point must
/// stay at least `clearance` away from every scene mesh at its
/// candidate-frame pose.
fn candidate_clear<R: Real>(
    candidate: &Trajectory<R>,
    spec: &SynthesisSpec<R>,
    scene: &BTreeMap<String, TriMesh<R>>,
    motion_runs: &[(usize, usize)],
) -> bool {
    for &(start, end) in motion_runs {
        for i in start..end {
            let wrist = candidate.frames[i].config.wrist.translation;
            for (id, mesh) in scene {
                let Some(pose) = candidate.frames[i].objects.get(id) else {
                    continue;
                };
                let inv = pose.inverse();
                let local = inv.apply(wrist);
                for v in mesh.vertices() {
                    if local.distance(*v) < spec.clearance {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Propagate the grasped object under the fixed-grasp assumption: for
/// frames past `t2` the object pose becomes
/// `wrist_t . wrist_t2^-1 . object_t2`; earlier frames are untouched.
pub fn propagate_object_by_grasp<R: Real>(
    traj: &Trajectory<R>,
    object_id: &str,
    t2: usize,
) -> Result<Trajectory<R>, DemoError> {
    let anchor_pose = traj
        .frames
        .get(t2)
        .and_then(|f| f.objects.get(object_id))
        .copied()
        .ok_or_else(|| DemoError::MissingPose {
            id: object_id.to_string(),
            frame: t2,
        })?;
    let wrist_anchor_inv = traj.frames[t2].config.wrist.inverse();
    let mut out = traj.clone();
    for frame in out.frames.iter_mut().skip(t2 + 1) {
        let pose = frame
            .config
            .wrist
            .compose(&wrist_anchor_inv)
            .compose(&anchor_pose);
        frame.objects.insert(object_id.to_string(), pose);
    }
    Ok(out)
}

/// Integrate exported configuration deltas from a start configuration:
/// translation adds, rotation-vector deltas left-multiply, joints add.
pub fn integrate_actions<R: Real>(
    start: &RobotConfig<R>,
    actions: &[WireAction],
) -> RobotConfig<R> {
    let mut q = start.clone();
    for a in actions {
        q.wrist.translation = q.wrist.translation
            + Vec3::new(
                R::from_f64(a.translation[0]).unwrap(),
                R::from_f64(a.translation[1]).unwrap(),
                R::from_f64(a.translation[2]).unwrap(),
            );
        let dr = Vec3::new(
            R::from_f64(a.rotation[0]).unwrap(),
            R::from_f64(a.rotation[1]).unwrap(),
            R::from_f64(a.rotation[2]).unwrap(),
        );
        q.wrist.rotation = Quat::from_rotation_vector(dr).mul(q.wrist.rotation);
        for (v, d) in q.joint_values.iter_mut().zip(&a.joints) {
            *v += R::from_f64(*d).unwrap();
        }
    }
    q
}

/// Per-step configuration deltas from `t2` to the end of the trajectory.
pub fn action_deltas<R: Real>(traj: &Trajectory<R>, t2: usize) -> Vec<WireAction> {
    let f = |v: R| v.to_f64().unwrap_or(f64::NAN);
    let mut actions = Vec::new();
    for t in t2..traj.len().saturating_sub(1) {
        let cur = &traj.frames[t].config;
        let next = &traj.frames[t + 1].config;
        let dt = next.wrist.translation - cur.wrist.translation;
        let dr = next
            .wrist
            .rotation
            .mul(cur.wrist.rotation.conjugate())
            .to_rotation_vector();
        actions.push(WireAction {
            translation: [f(dt.x), f(dt.y), f(dt.z)],
            rotation: [f(dr.x), f(dr.y), f(dr.z)],
            joints: cur
                .joint_values
                .iter()
                .zip(&next.joint_values)
                .map(|(a, b)| f(*b - *a))
                .collect(),
        });
    }
    actions
}

/// Export a training set: one directory per trajectory containing
/// `obs.json` (robot and object point clouds plus the grasp configuration)
/// and `actions.json` (per-step deltas from the grasp frame). Object clouds
/// are sampled once per object in local coordinates and transported by the
/// grasp-frame pose. Returns the written directories.
pub fn export_training_set<R: Real>(
    trajectories: &[Trajectory<R>],
    model: &RobotModel<R>,
    meshes: &BTreeMap<String, TriMesh<R>>,
    n_points: usize,
    seed: u64,
    out_dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>, DemoError> {
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir).map_err(IoError::Io)?;
    // local object samples, one cloud per object id
    let mut local_clouds: BTreeMap<String, PointCloud<R>> = BTreeMap::new();
    for (k, (id, mesh)) in meshes.iter().enumerate() {
        local_clouds.insert(
            id.clone(),
            sample_surface(mesh, n_points, seed + 1 + k as u64)?,
        );
    }
    let f = |v: R| v.to_f64().unwrap_or(f64::NAN);
    let mut written = Vec::with_capacity(trajectories.len());
    for (index, traj) in trajectories.iter().enumerate() {
        let Some((_, t2)) = traj.stage_marks else {
            return Err(DemoError::UnmarkedTrajectory { index });
        };
        let q_grasp = &traj.frames[t2].config;
        let robot_cloud = model.robot_points_at(q_grasp, n_points, seed)?;
        let mut objects = BTreeMap::new();
        for (id, cloud) in &local_clouds {
            if let Some(pose) = traj.frames[t2].objects.get(id) {
                let world = cloud.transformed(pose);
                let flat: Vec<f64> = world
                    .points
                    .iter()
                    .flat_map(|p| [f(p.x), f(p.y), f(p.z)])
                    .collect();
                objects.insert(id.clone(), flat);
            }
        }
        let obs = WireObservation {
            joint_names: traj.joint_names.clone(),
            q_grasp: WireConfigRecord {
                wrist: WirePoseRecord {
                    q: [
                        f(q_grasp.wrist.rotation.w),
                        f(q_grasp.wrist.rotation.x),
                        f(q_grasp.wrist.rotation.y),
                        f(q_grasp.wrist.rotation.z),
                    ],
                    t: [
                        f(q_grasp.wrist.translation.x),
                        f(q_grasp.wrist.translation.y),
                        f(q_grasp.wrist.translation.z),
                    ],
                },
                joints: q_grasp.joint_values.iter().map(|v| f(*v)).collect(),
            },
            robot_points: robot_cloud
                .points
                .iter()
                .flat_map(|p| [f(p.x), f(p.y), f(p.z)])
                .collect(),
            objects,
        };
        let actions = WireActions {
            frame_start: t2,
            actions: action_deltas(traj, t2),
        };

        let dir = out_dir.join(format!("traj_{index:04}"));
        std::fs::create_dir_all(&dir).map_err(IoError::Io)?;
        let obs_file = std::fs::File::create(dir.join("obs.json")).map_err(IoError::Io)?;
        crate::io::write_observation(std::io::BufWriter::new(obs_file), &obs)?;
        let act_file = std::fs::File::create(dir.join("actions.json")).map_err(IoError::Io)?;
        crate::io::write_actions(std::io::BufWriter::new(act_file), &actions)?;
        written.push(dir);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn scene_map(p: &fixtures::PickAndMove<f64>) -> BTreeMap<String, TriMesh<f64>> {
        let mut m = BTreeMap::new();
        m.insert(p.scene.object_id.clone(), p.scene.object.clone());
        m
    }

    #[test]
    fn segmentation_finds_grasp_frame() {
        let p = fixtures::pick_and_move::<f64>(12, 6, 10, Vec3::new(0.12, 0.0, 0.06));
        let (t1, t2) = segment_stages(
            &p.trajectory,
            &p.scene.object_id,
            &p.scene.object,
            &p.scene.model,
            &SegmentParams::default(),
        )
        .unwrap();
        assert!(
            t1 < p.grasp_frame,
            "approach starts before the grasp ({t1})"
        );
        // the object moves right after the grasp frame
        assert_eq!(t2, p.grasp_frame);
    }

    #[test]
    fn segmentation_far_hand_is_no_approach() {
        let mut p = fixtures::pick_and_move::<f64>(6, 3, 4, Vec3::new(0.1, 0.0, 0.0));
        for f in &mut p.trajectory.frames {
            f.config.wrist.translation = f.config.wrist.translation + Vec3::new(5.0, 0.0, 0.0);
        }
        let err = segment_stages(
            &p.trajectory,
            &p.scene.object_id,
            &p.scene.object,
            &p.scene.model,
            &SegmentParams::default(),
        );
        assert!(matches!(err, Err(DemoError::NoApproach)));
    }

    #[test]
    fn segmentation_immediate_contact_and_motion_is_zero_zero() {
        let p = fixtures::pick_and_move::<f64>(10, 5, 10, Vec3::new(0.1, 0.0, 0.05));
        // build a trajectory that starts at the grasp and immediately moves
        let moving: Vec<_> = p.trajectory.frames[p.grasp_frame..].to_vec();
        let mut frames = moving;
        for (i, f) in frames.iter_mut().enumerate() {
            f.time = i as f64 / 30.0;
        }
        let traj = Trajectory::new(p.trajectory.joint_names.clone(), frames).unwrap();
        let (t1, t2) = segment_stages(
            &traj,
            &p.scene.object_id,
            &p.scene.object,
            &p.scene.model,
            &SegmentParams::default(),
        )
        .unwrap();
        assert_eq!((t1, t2), (0, 0));
    }

    #[test]
    fn identity_sampler_reproduces_source_exactly() {
        let p = fixtures::pick_and_move::<f64>(8, 4, 6, Vec3::new(0.1, 0.02, 0.04));
        let (t1, t2) = segment_stages(
            &p.trajectory,
            &p.scene.object_id,
            &p.scene.object,
            &p.scene.model,
            &SegmentParams::default(),
        )
        .unwrap();
        let source = p.trajectory.clone().with_stage_marks(t1, t2).unwrap();
        let spec = SynthesisSpec::identity(p.scene.object_id.clone(), 3, 42);
        let out = synthesize(&source, &spec, &scene_map(&p), &p.scene.model).unwrap();
        assert_eq!(out.len(), 3);
        for t in &out {
            assert_eq!(*t, source);
        }
    }

    #[test]
    fn translated_sample_is_invertible_on_skill_segment() {
        let p = fixtures::pick_and_move::<f64>(8, 4, 6, Vec3::new(0.1, 0.0, 0.05));
        let (t1, t2) = segment_stages(
            &p.trajectory,
            &p.scene.object_id,
            &p.scene.object,
            &p.scene.model,
            &SegmentParams::default(),
        )
        .unwrap();
        let source = p.trajectory.clone().with_stage_marks(t1, t2).unwrap();
        let mut spec = SynthesisSpec::identity(p.scene.object_id.clone(), 1, 7);
        spec.x_bounds = (0.08, 0.08);
        spec.y_bounds = (-0.05, -0.05);
        let out = synthesize(&source, &spec, &scene_map(&p), &p.scene.model).unwrap();
        let t = RigidTransform::from_translation(Vec3::new(0.08, -0.05, 0.0));
        let t_inv = t.inverse();
        // within interaction range the transformed frames recover the source
        // under T^-1
        let mut checked = 0usize;
        for (i, (orig, synth)) in source.frames.iter().zip(&out[0].frames).enumerate() {
            let obj_orig = orig.objects[&p.scene.object_id];
            let obj_synth = synth.objects[&p.scene.object_id];
            let obj_back = t_inv.compose(&obj_synth);
            assert!(
                obj_back.translation.distance(obj_orig.translation) < 1e-9,
                "frame {i}"
            );
            if i >= t1 {
                let back = t_inv.compose(&synth.config.wrist);
                assert!(back.translation.distance(orig.config.wrist.translation) < 1e-9);
                assert!(back.rotation.dot(orig.config.wrist.rotation).abs() > 1.0 - 1e-9);
                for (a, b) in orig
                    .config
                    .joint_values
                    .iter()
                    .zip(&synth.config.joint_values)
                {
                    assert_eq!(a, b, "joint values are carried verbatim");
                }
                checked += 1;
            }
        }
        assert!(checked > 0);
        // frame count preserved
        assert_eq!(out[0].len(), source.len());
        // frame 0 of the regenerated approach is the unchanged start
        assert!(
            out[0].frames[0]
                .config
                .wrist
                .translation
                .distance(source.frames[0].config.wrist.translation)
                < 1e-12
        );
    }

    #[test]
    fn impossible_clearance_exhausts_retries() {
        let p = fixtures::pick_and_move::<f64>(8, 4, 6, Vec3::new(0.1, 0.0, 0.05));
        let (t1, t2) = segment_stages(
            &p.trajectory,
            &p.scene.object_id,
            &p.scene.object,
            &p.scene.model,
            &SegmentParams::default(),
        )
        .unwrap();
        let source = p.trajectory.clone().with_stage_marks(t1, t2).unwrap();
        let mut spec = SynthesisSpec::identity(p.scene.object_id.clone(), 1, 13);
        spec.x_bounds = (0.05, 0.2);
        spec.clearance = 10.0; // nothing can clear a 10 m margin
        spec.max_retries = 5;
        let err = synthesize(&source, &spec, &scene_map(&p), &p.scene.model);
        assert!(matches!(
            err,
            Err(DemoError::RetryExhausted {
                sample: 0,
                retries: 5
            })
        ));
    }

    #[test]
    fn samples_are_deterministic_and_within_bounds() {
        let p = fixtures::pick_and_move::<f64>(8, 4, 6, Vec3::new(0.1, 0.0, 0.05));
        let (t1, t2) = segment_stages(
            &p.trajectory,
            &p.scene.object_id,
            &p.scene.object,
            &p.scene.model,
            &SegmentParams::default(),
        )
        .unwrap();
        let source = p.trajectory.clone().with_stage_marks(t1, t2).unwrap();
        let mut spec = SynthesisSpec::identity(p.scene.object_id.clone(), 40, 99);
        spec.x_bounds = (-0.2, 0.2);
        spec.y_bounds = (-0.2, 0.2);
        let a = synthesize(&source, &spec, &scene_map(&p), &p.scene.model).unwrap();
        let b = synthesize(&source, &spec, &scene_map(&p), &p.scene.model).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 40);
        let base = source.frames[0].objects[&p.scene.object_id].translation;
        for t in &a {
            let delta = t.frames[0].objects[&p.scene.object_id].translation - base;
            assert!(delta.x >= -0.2 - 1e-12 && delta.x <= 0.2 + 1e-12);
            assert!(delta.y >= -0.2 - 1e-12 && delta.y <= 0.2 + 1e-12);
            assert!(delta.z.abs() < 1e-12);
        }
    }

    #[test]
    fn propagate_static_wrist_keeps_object_static() {
        let p = fixtures::pick_and_move::<f64>(4, 2, 5, Vec3::new(0.0, 0.0, 0.0));
        let traj =
            propagate_object_by_grasp(&p.trajectory, &p.scene.object_id, p.grasp_frame).unwrap();
        let anchor = traj.frames[p.grasp_frame].objects[&p.scene.object_id];
        for f in &traj.frames[p.grasp_frame..] {
            let pose = f.objects[&p.scene.object_id];
            assert!(pose.translation.distance(anchor.translation) < 1e-12);
        }
    }

    #[test]
    fn propagate_matches_direct_composition() {
        let p = fixtures::pick_and_move::<f64>(6, 3, 8, Vec3::new(0.1, -0.05, 0.07));
        let t2 = p.grasp_frame;
        // zero out later object poses to prove propagation rebuilds them
        let mut stripped = p.trajectory.clone();
        for f in stripped.frames.iter_mut().skip(t2 + 1) {
            f.objects
                .insert(p.scene.object_id.clone(), RigidTransform::identity());
        }
        let rebuilt = propagate_object_by_grasp(&stripped, &p.scene.object_id, t2).unwrap();
        for (a, b) in rebuilt.frames.iter().zip(&p.trajectory.frames) {
            let pa = a.objects[&p.scene.object_id];
            let pb = b.objects[&p.scene.object_id];
            assert!(pa.translation.distance(pb.translation) < 1e-9);
            assert!(pa.rotation.dot(pb.rotation).abs() > 1.0 - 1e-9);
        }
    }

    #[test]
    fn propagate_wrist_rotation_conjugates_object() {
        // rotate the wrist about its own origin after t2: the object pose
        // follows by the conjugated transform (matrix-composition oracle)
        let p = fixtures::pick_and_move::<f64>(4, 2, 3, Vec3::new(0.0, 0.0, 0.0));
        let t2 = p.grasp_frame;
        let mut traj = p.trajectory.clone();
        let rot = Quat::from_axis_angle(Vec3::new(0.0, 0.0, 1.0), 0.4).unwrap();
        let n = traj.frames.len();
        for (k, f) in traj.frames.iter_mut().enumerate().skip(t2 + 1) {
            let w = f.config.wrist;
            let spin = Quat::from_axis_angle(
                Vec3::new(0.0, 0.0, 1.0),
                0.4 * (k as f64 - t2 as f64) / (n - t2) as f64,
            )
            .unwrap();
            f.config.wrist = RigidTransform::new(spin.mul(w.rotation), w.translation);
        }
        let _ = rot;
        let rebuilt = propagate_object_by_grasp(&traj, &p.scene.object_id, t2).unwrap();
        let w2 = traj.frames[t2].config.wrist;
        let o2 = traj.frames[t2].objects[&p.scene.object_id];
        for (k, f) in rebuilt.frames.iter().enumerate().skip(t2 + 1) {
            let expected = traj.frames[k]
                .config
                .wrist
                .compose(&w2.inverse())
                .compose(&o2);
            let got = f.objects[&p.scene.object_id];
            assert!(got.translation.distance(expected.translation) < 1e-9);
            assert!(got.rotation.dot(expected.rotation).abs() > 1.0 - 1e-9);
        }
    }

    #[test]
    fn export_and_integrate_round_trip() {
        let p = fixtures::pick_and_move::<f64>(6, 3, 12, Vec3::new(0.15, 0.03, 0.08));
        let (t1, t2) = segment_stages(
            &p.trajectory,
            &p.scene.object_id,
            &p.scene.object,
            &p.scene.model,
            &SegmentParams::default(),
        )
        .unwrap();
        let traj = p.trajectory.clone().with_stage_marks(t1, t2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let written = export_training_set(
            std::slice::from_ref(&traj),
            &p.scene.model,
            &scene_map(&p),
            128,
            7,
            dir.path(),
        )
        .unwrap();
        assert_eq!(written.len(), 1);
        let obs =
            crate::io::read_observation(std::fs::File::open(written[0].join("obs.json")).unwrap())
                .unwrap();
        assert_eq!(obs.robot_points.len(), 128 * 3);
        assert_eq!(obs.objects["cylinder"].len(), 128 * 3);
        let actions =
            crate::io::read_actions(std::fs::File::open(written[0].join("actions.json")).unwrap())
                .unwrap();
        assert_eq!(actions.frame_start, t2);
        assert_eq!(actions.actions.len(), traj.len() - 1 - t2);
        // integrating the deltas reproduces the final configuration
        let q_final = integrate_actions(&traj.frames[t2].config, &actions.actions);
        let want = &traj.frames.last().unwrap().config;
        assert!(
            q_final.wrist.translation.distance(want.wrist.translation) < 1e-6,
            "translation error {}",
            q_final.wrist.translation.distance(want.wrist.translation)
        );
        assert!(q_final.wrist.rotation.dot(want.wrist.rotation).abs() > 1.0 - 1e-9);
        for (a, b) in q_final.joint_values.iter().zip(&want.joint_values) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn export_constant_trajectory_has_zero_actions() {
        let p = fixtures::pick_and_move::<f64>(4, 2, 4, Vec3::new(0.0, 0.0, 0.0));
        let t2 = p.grasp_frame;
        let actions = action_deltas(&p.trajectory, t2);
        for a in &actions {
            assert_eq!(a.translation, [0.0, 0.0, 0.0]);
            assert_eq!(a.rotation, [0.0, 0.0, 0.0]);
            assert!(a.joints.iter().all(|j| *j == 0.0));
        }
    }

    #[test]
    fn export_one_centimeter_step() {
        // two-frame trajectory moved +1 cm in x: one action with that delta
        let p = fixtures::pick_and_move::<f64>(4, 2, 3, Vec3::new(0.0, 0.0, 0.0));
        let mut frames = vec![
            p.trajectory.frames[p.grasp_frame].clone(),
            p.trajectory.frames[p.grasp_frame].clone(),
        ];
        frames[0].time = 0.0;
        frames[1].time = 1.0 / 30.0;
        frames[1].config.wrist.translation =
            frames[1].config.wrist.translation + Vec3::new(0.01, 0.0, 0.0);
        let traj = Trajectory::new(p.trajectory.joint_names.clone(), frames).unwrap();
        let actions = action_deltas(&traj, 0);
        assert_eq!(actions.len(), 1);
        assert!((actions[0].translation[0] - 0.01).abs() < 1e-15);
        assert_eq!(actions[0].rotation, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn unmarked_trajectory_rejected_by_export() {
        let p = fixtures::pick_and_move::<f64>(4, 2, 3, Vec3::new(0.0, 0.0, 0.0));
        let dir = tempfile::tempdir().unwrap();
        let err = export_training_set(
            std::slice::from_ref(&p.trajectory),
            &p.scene.model,
            &scene_map(&p),
            64,
            1,
            dir.path(),
        );
        assert!(matches!(
            err,
            Err(DemoError::UnmarkedTrajectory { index: 0 })
        ));
    }
}
