//! Synthetic robot hands, objects, and trajectories used by tests, examples,
//! and the end-to-end verification suite.

use std::collections::BTreeMap;

use crate::geom::{shapes, Quat, RigidTransform, TriMesh, Vec3};
use crate::robot::{RobotConfig, RobotModel};
use crate::scalar::{real, Real};
use crate::trajectory::{Frame, Trajectory};

/// Planar two-link arm with unit-length segments: `base` (root), `upper`,
/// `fore` (carries a box), and a fixed `tip` frame one meter along the
/// forearm. Shoulder and elbow rotate about z.
pub const TWO_LINK_ARM_URDF: &str = r#"
<robot name="two_link_arm">
  <link name="base"/>
  <link name="upper"/>
  <link name="fore">
    <collision>
      <geometry><box size="0.2 0.1 0.1"/></geometry>
    </collision>
  </link>
  <link name="tip"/>
  <joint name="shoulder" type="revolute">
    <parent link="base"/>
    <child link="upper"/>
    <axis xyz="0 0 1"/>
    <limit lower="-3.1416" upper="3.1416"/>
  </joint>
  <joint name="elbow" type="revolute">
    <parent link="upper"/>
    <child link="fore"/>
    <origin xyz="1 0 0"/>
    <axis xyz="0 0 1"/>
    <limit lower="-3.1416" upper="3.1416"/>
  </joint>
  <joint name="wrist_fix" type="fixed">
    <parent link="fore"/>
    <child link="tip"/>
    <origin xyz="1 0 0"/>
  </joint>
</robot>
"#;

/// Finger base distance from the palm center axis.
pub const HAND_BASE_RADIUS: f64 = 0.05;
/// Finger segment lengths, proximal to distal, meters.
pub const HAND_SEGMENTS: [f64; 3] = [0.035, 0.030, 0.025];
/// Finger angular positions around the palm, radians.
pub const HAND_FINGER_ANGLES: [f64; 4] = [
    std::f64::consts::FRAC_PI_4,
    3.0 * std::f64::consts::FRAC_PI_4,
    5.0 * std::f64::consts::FRAC_PI_4,
    7.0 * std::f64::consts::FRAC_PI_4,
];

/// URDF for a 16-joint four-finger hand: a palm plate with four fingers at
/// 90-degree spacing, each with one abduction joint (about the palm normal)
/// and three flexion joints. Fingers hang along -z at the zero
/// configuration; positive flexion curls them inward toward the palm axis.
pub fn four_finger_hand_urdf() -> String {
    let mut s = String::from(
        r#"<robot name="four_finger_hand">
  <link name="palm">
    <collision>
      <geometry><box size="0.08 0.08 0.02"/></geometry>
    </collision>
  </link>
"#,
    );
    let segs = HAND_SEGMENTS;
    let widths = [(0.012, 0.010), (0.011, 0.009), (0.010, 0.008)];
    for (i, psi) in HAND_FINGER_ANGLES.iter().enumerate() {
        let bx = HAND_BASE_RADIUS * psi.cos();
        let by = HAND_BASE_RADIUS * psi.sin();
        s.push_str(&format!(
            r#"  <link name="f{i}_knuckle"/>
  <link name="f{i}_prox">
    <collision>
      <origin xyz="0 0 {po}"/>
      <geometry><box size="{pw} {pd} {pl}"/></geometry>
    </collision>
  </link>
  <link name="f{i}_mid">
    <collision>
      <origin xyz="0 0 {mo}"/>
      <geometry><box size="{mw} {md} {ml}"/></geometry>
    </collision>
  </link>
  <link name="f{i}_tip">
    <collision>
      <origin xyz="0 0 {to}"/>
      <geometry><box size="{tw} {td} {tl}"/></geometry>
    </collision>
  </link>
  <joint name="f{i}_abd" type="revolute">
    <parent link="palm"/>
    <child link="f{i}_knuckle"/>
    <origin xyz="{bx} {by} -0.01" rpy="0 0 {psi}"/>
    <axis xyz="0 0 1"/>
    <limit lower="-0.35" upper="0.35"/>
  </joint>
  <joint name="f{i}_mcp" type="revolute">
    <parent link="f{i}_knuckle"/>
    <child link="f{i}_prox"/>
    <axis xyz="0 1 0"/>
    <limit lower="-0.2" upper="1.8"/>
  </joint>
  <joint name="f{i}_pip" type="revolute">
    <parent link="f{i}_prox"/>
    <child link="f{i}_mid"/>
    <origin xyz="0 0 -{pl}"/>
    <axis xyz="0 1 0"/>
    <limit lower="-0.2" upper="1.8"/>
  </joint>
  <joint name="f{i}_dip" type="revolute">
    <parent link="f{i}_mid"/>
    <child link="f{i}_tip"/>
    <origin xyz="0 0 -{ml}"/>
    <axis xyz="0 1 0"/>
    <limit lower="-0.2" upper="1.8"/>
  </joint>
"#,
            i = i,
            psi = psi,
            bx = bx,
            by = by,
            pl = segs[0],
            ml = segs[1],
            tl = segs[2],
            po = -segs[0] / 2.0,
            mo = -segs[1] / 2.0,
            to = -segs[2] / 2.0,
            pw = widths[0].0,
            pd = widths[0].1,
            mw = widths[1].0,
            md = widths[1].1,
            tw = widths[2].0,
            td = widths[2].1,
        ));
    }
    s.push_str("</robot>\n");
    s
}

/// The four-finger hand as a parsed model.
pub fn four_finger_hand<R: Real>() -> RobotModel<R> {
    RobotModel::from_urdf_str(&four_finger_hand_urdf()).expect("hand fixture URDF is valid")
}

/// Joint values that curl every finger with equal flexion `alpha` at zero
/// abduction. Joint order is abd/mcp/pip/dip per finger, fingers in order.
pub fn hand_joints_equal_flexion<R: Real>(alpha: R) -> Vec<R> {
    let mut q = Vec::with_capacity(16);
    for _ in 0..4 {
        q.push(R::zero());
        q.push(alpha);
        q.push(alpha);
        q.push(alpha);
    }
    q
}

/// A cylinder-grasp scene: a vertical cylinder on the world origin and a
/// hand configuration whose fingertips just touch its wall.
pub struct GraspScene<R> {
    pub model: RobotModel<R>,
    pub object: TriMesh<R>,
    pub object_id: String,
    /// Hand configuration with fingertips in contact with the cylinder.
    pub q_grasp: RobotConfig<R>,
    pub cylinder_radius: R,
}

/// Cylinder radius used by [`cylinder_grasp_scene`].
pub const SCENE_CYLINDER_RADIUS: f64 = 0.025;
/// Cylinder height used by [`cylinder_grasp_scene`].
pub const SCENE_CYLINDER_HEIGHT: f64 = 0.12;
/// Palm height (wrist z) of the grasp configuration.
pub const SCENE_WRIST_HEIGHT: f64 = 0.08;

/// Build the cylinder-grasp scene. The flexion angle is solved by bisection
/// so the innermost fingertip vertices sit `surface_gap` outside the
/// cylinder wall.
pub fn cylinder_grasp_scene<R: Real>(surface_gap: R) -> GraspScene<R> {
    let model = four_finger_hand::<R>();
    let object = shapes::cylinder_grid::<R>(
        real(SCENE_CYLINDER_RADIUS),
        real(SCENE_CYLINDER_HEIGHT),
        32,
        16,
    );
    let wrist =
        RigidTransform::from_translation(Vec3::new(R::zero(), R::zero(), real(SCENE_WRIST_HEIGHT)));
    let target: R = real::<R>(SCENE_CYLINDER_RADIUS) + surface_gap;

    // inner fingertip radius decreases monotonically with flexion
    let tip_inner_radius = |alpha: R| -> R {
        let q = RobotConfig::new(wrist, hand_joints_equal_flexion(alpha));
        let spans = model.robot_mesh_spans(&q).expect("hand mesh");
        let mut best = R::infinity();
        for &leaf in &model.leaf_links() {
            if let Some(range) = spans.span_of(leaf) {
                for v in &spans.mesh.vertices()[range] {
                    let r = (v.x * v.x + v.y * v.y).sqrt();
                    if r < best {
                        best = r;
                    }
                }
            }
        }
        best
    };

    let mut lo: R = real(0.0);
    let mut hi: R = real(0.9);
    for _ in 0..60 {
        let mid = (lo + hi) * real::<R>(0.5);
        if tip_inner_radius(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let alpha = (lo + hi) * real::<R>(0.5);
    GraspScene {
        q_grasp: RobotConfig::new(wrist, hand_joints_equal_flexion(alpha)),
        model,
        object,
        object_id: "cylinder".to_string(),
        cylinder_radius: real(SCENE_CYLINDER_RADIUS),
    }
}

/// A synthetic pick-and-move trajectory over the cylinder scene:
/// descend toward the object, close the fingers, then carry the object
/// sideways. The approach and closing segments are generated with
/// [`RobotConfig::interpolate`] over uniform parameters; the object follows
/// the wrist rigidly once grasped.
///
/// Layout: frames `[0, approach_frames)` descend with open fingers, frames
/// `[approach_frames, approach_frames + close_frames)` close the grip, and
/// the remaining frames translate the wrist (and object) by `carry_delta`.
pub struct PickAndMove<R> {
    pub scene: GraspScene<R>,
    pub trajectory: Trajectory<R>,
    /// Frame where the fingers reach the grasp configuration.
    pub grasp_frame: usize,
}

pub fn pick_and_move<R: Real>(
    approach_frames: usize,
    close_frames: usize,
    carry_frames: usize,
    carry_delta: Vec3<R>,
) -> PickAndMove<R> {
    let scene = cylinder_grasp_scene::<R>(real(0.0005));
    let model = &scene.model;
    let dt: R = real(1.0 / 30.0);

    let q_grasp = scene.q_grasp.clone();
    // pre-grasp: fingers opened slightly, wrist lifted well above the object
    let mut open_joints = q_grasp.joint_values.clone();
    for v in open_joints.iter_mut() {
        *v *= real::<R>(0.25);
    }
    let q_high = RobotConfig::new(
        RigidTransform::from_translation(Vec3::new(R::zero(), R::zero(), real(0.25))),
        open_joints.clone(),
    );
    let q_hover = RobotConfig::new(q_grasp.wrist, open_joints);

    let object_rest = RigidTransform::identity();
    let mut frames: Vec<Frame<R>> = Vec::new();
    let push = |config: RobotConfig<R>, object: RigidTransform<R>, frames: &mut Vec<Frame<R>>| {
        let time = dt * R::from_usize(frames.len()).unwrap();
        let mut objects = BTreeMap::new();
        objects.insert(scene.object_id.clone(), object);
        frames.push(Frame {
            time,
            config,
            objects,
        });
    };

    for i in 0..approach_frames {
        let u = R::from_usize(i).unwrap() / R::from_usize(approach_frames).unwrap();
        push(q_high.interpolate(&q_hover, u), object_rest, &mut frames);
    }
    for i in 0..close_frames {
        let u = R::from_usize(i).unwrap() / R::from_usize(close_frames).unwrap();
        push(q_hover.interpolate(&q_grasp, u), object_rest, &mut frames);
    }
    let grasp_frame = frames.len();
    push(q_grasp.clone(), object_rest, &mut frames);
    // carry: wrist translates; the object keeps the grasp-relative pose
    let wrist_grasp = q_grasp.wrist;
    for i in 1..=carry_frames {
        let u = R::from_usize(i).unwrap() / R::from_usize(carry_frames).unwrap();
        let wrist = RigidTransform::from_translation(carry_delta * u).compose(&wrist_grasp);
        let object = wrist.compose(&wrist_grasp.inverse()).compose(&object_rest);
        push(
            RobotConfig::new(wrist, q_grasp.joint_values.clone()),
            object,
            &mut frames,
        );
    }

    let trajectory =
        Trajectory::new(model.joint_names(), frames).expect("fixture trajectory is valid");
    PickAndMove {
        scene,
        trajectory,
        grasp_frame,
    }
}

/// Rotation-only transform used in several alignment fixtures.
pub fn yaw_transform<R: Real>(yaw: R) -> RigidTransform<R> {
    RigidTransform::from_rotation(
        Quat::from_axis_angle(Vec3::new(R::zero(), R::zero(), R::one()), yaw)
            .expect("z axis is unit"),
    )
}

/// Keypoint mapping for the four-finger hand that observes the end of every
/// finger segment plus the palm: rich enough to determine all 22 DoF.
/// Fingertips land on the standard fingertip keypoint indices.
pub fn hand_test_mapping<R: Real>() -> crate::retarget::KeypointMapping<R> {
    use crate::retarget::{KeypointMapping, MappingEntry, WRIST_KEYPOINT};
    let mut entries = vec![MappingEntry {
        link: "palm".to_string(),
        offset: Vec3::zero(),
        keypoint: WRIST_KEYPOINT,
        weight: R::one(),
    }];
    for i in 0..4 {
        for (seg, (suffix, weight)) in [("prox", 0.5), ("mid", 0.5), ("tip", 1.0)]
            .iter()
            .enumerate()
        {
            entries.push(MappingEntry {
                link: format!("f{i}_{suffix}"),
                offset: Vec3::new(R::zero(), R::zero(), real(-HAND_SEGMENTS[seg])),
                keypoint: 2 + 4 * i + seg,
                weight: real(*weight),
            });
        }
    }
    let mapping = KeypointMapping::new(entries).expect("fixture mapping is valid");
    mapping
        .validate_coverage()
        .expect("fixture mapping covers the hand");
    mapping
}

/// Synthetic hand keypoints: forward kinematics of the mapped points at a
/// known configuration. Unmapped keypoint slots stay at the origin.
pub fn keypoints_for_config<R: Real>(
    model: &RobotModel<R>,
    mapping: &crate::retarget::KeypointMapping<R>,
    q: &RobotConfig<R>,
) -> Vec<Vec3<R>> {
    let poses = model.fk(q).expect("configuration matches model");
    let mut joints = vec![Vec3::zero(); crate::retarget::KEYPOINT_COUNT];
    for e in mapping.entries() {
        let link = model.link_index(&e.link).expect("mapping link exists");
        joints[e.keypoint] = poses[link].apply(e.offset);
    }
    joints
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::nearest_distances;
    use crate::geom::PointCloud;

    #[test]
    fn grasp_scene_fingertips_touch_cylinder() {
        let scene = cylinder_grasp_scene::<f64>(0.0005);
        let spans = scene.model.robot_mesh_spans(&scene.q_grasp).unwrap();
        let object_cloud = PointCloud::from_points(scene.object.vertices().to_vec());
        for &leaf in &scene.model.leaf_links() {
            let range = spans.span_of(leaf).unwrap();
            let tips = PointCloud::from_points(spans.mesh.vertices()[range].to_vec());
            let nearest = nearest_distances(&tips, &object_cloud).unwrap();
            let min = nearest
                .iter()
                .map(|(d, _)| *d)
                .fold(f64::INFINITY, f64::min);
            assert!(min < 0.004, "fingertip-to-cylinder distance {min}");
        }
    }

    #[test]
    fn grasp_scene_fingers_do_not_penetrate() {
        let scene = cylinder_grasp_scene::<f64>(0.0005);
        let spans = scene.model.robot_mesh_spans(&scene.q_grasp).unwrap();
        // no fingertip vertex inside the cylinder wall (with a band for the
        // polygonal wall approximation)
        for &leaf in &scene.model.leaf_links() {
            let range = spans.span_of(leaf).unwrap();
            for v in &spans.mesh.vertices()[range] {
                let r = (v.x * v.x + v.y * v.y).sqrt();
                assert!(
                    r > scene.cylinder_radius - 0.002,
                    "vertex at radius {r} penetrates the cylinder"
                );
            }
        }
    }

    #[test]
    fn pick_and_move_object_static_until_grasp() {
        let p = pick_and_move::<f64>(10, 5, 15, Vec3::new(0.15, 0.05, 0.1));
        for f in &p.trajectory.frames[..p.grasp_frame] {
            let pose = f.objects["cylinder"];
            assert!(pose.translation.norm() < 1e-12);
        }
        // object strictly moves afterwards
        let last = p.trajectory.frames.last().unwrap().objects["cylinder"];
        assert!(last.translation.distance(Vec3::new(0.15, 0.05, 0.1)) < 1e-9);
    }

    #[test]
    fn pick_and_move_object_follows_wrist() {
        let p = pick_and_move::<f64>(8, 4, 10, Vec3::new(0.1, 0.0, 0.05));
        let t2 = p.grasp_frame;
        let w2 = p.trajectory.frames[t2].config.wrist;
        let o2 = p.trajectory.frames[t2].objects["cylinder"];
        for f in &p.trajectory.frames[t2..] {
            let w = f.config.wrist;
            let expect = w.compose(&w2.inverse()).compose(&o2);
            let got = f.objects["cylinder"];
            assert!(got.translation.distance(expect.translation) < 1e-9);
        }
    }
}
