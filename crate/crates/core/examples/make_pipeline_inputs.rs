//! Generate a self-contained set of pipeline input files from the synthetic
//! fixtures, for driving the CLI without real perception data:
//!
//! ```sh
//! cargo run --release -p dexkit --example make_pipeline_inputs -- /tmp/demo
//! dexkit segment --model /tmp/demo/hand.urdf --trajectory /tmp/demo/source.jsonl \
//!     --object /tmp/demo/cylinder.obj --object-id cylinder --output /tmp/demo/marked.jsonl
//! ```
//!
//! Writes: `hand.urdf`, `cylinder.obj`, `source.jsonl` (pick-and-move
//! trajectory), `keypoints.jsonl` + `mapping.json` (retargeting inputs),
//! and `grasp.dmat` + `object_points.obj` (grasp recovery inputs).

use dexkit::fixtures;
use dexkit::geom::{obj, sample_surface, RigidTransform, TriMesh, Vec3};
use dexkit::grasp::DistanceMatrix;
use dexkit::io;
use dexkit::retarget::{HandKeypoints, KeypointFrame};
use dexkit::robot::RobotConfig;

fn main() {
    let out = std::env::args().nth(1).unwrap_or_else(|| {
        eprintln!("usage: make_pipeline_inputs <output-dir>");
        std::process::exit(2);
    });
    let out = std::path::PathBuf::from(out);
    std::fs::create_dir_all(&out).expect("create output dir");

    std::fs::write(out.join("hand.urdf"), fixtures::four_finger_hand_urdf()).unwrap();
    let p = fixtures::pick_and_move::<f64>(10, 5, 12, Vec3::new(0.12, 0.03, 0.06));
    obj::write_obj_file(&p.scene.object, out.join("cylinder.obj")).unwrap();
    io::write_trajectory_file(out.join("source.jsonl"), &p.trajectory).unwrap();

    // retargeting inputs: keypoints generated from known configurations
    let mapping = fixtures::hand_test_mapping::<f64>();
    io::write_mapping(
        std::fs::File::create(out.join("mapping.json")).unwrap(),
        &mapping,
    )
    .unwrap();
    let frames: Vec<KeypointFrame<f64>> = (0..12)
        .map(|i| {
            let q = RobotConfig::new(
                RigidTransform::from_translation(Vec3::new(0.0, 0.0, 0.1 + 0.004 * i as f64)),
                fixtures::hand_joints_equal_flexion(0.15 + 0.01 * i as f64),
            );
            KeypointFrame {
                time: i as f64 / 30.0,
                joints: fixtures::keypoints_for_config(&p.scene.model, &mapping, &q),
            }
        })
        .collect();
    io::write_keypoints(
        std::fs::File::create(out.join("keypoints.jsonl")).unwrap(),
        &HandKeypoints::new(frames).unwrap(),
    )
    .unwrap();

    // grasp recovery inputs: exact distances between the robot cloud at the
    // fixture grasp and sampled object points
    let q_grasp = &p.trajectory.frames[p.grasp_frame].config;
    let canonical = p.scene.model.canonical_points(192, 5).unwrap();
    let robot_cloud = canonical.at_config(&p.scene.model, q_grasp).unwrap();
    let object_points = sample_surface(&p.scene.object, 250, 6).unwrap();
    let d = DistanceMatrix::from_clouds(&robot_cloud, &object_points);
    io::write_distance_matrix(
        std::io::BufWriter::new(std::fs::File::create(out.join("grasp.dmat")).unwrap()),
        &d,
    )
    .unwrap();
    let cloud_mesh = TriMesh::new(object_points.points.clone(), vec![]).unwrap();
    obj::write_obj_file(&cloud_mesh, out.join("object_points.obj")).unwrap();

    println!(
        "wrote pipeline inputs to {} (grasp frame {}; solve grasp.dmat with \
         --robot-points 192 --robot-seed 5)",
        out.display(),
        p.grasp_frame
    );
}
