//! End-to-end checks of the command-line interface: every subcommand runs
//! against generated fixture files, errors carry machine-readable codes,
//! and outputs are deterministic.

use std::path::PathBuf;
use std::process::{Command, Output};

use dexkit::calib::{render_silhouette, CameraIntrinsics};
use dexkit::demo::{segment_stages, SegmentParams};
use dexkit::fixtures;
use dexkit::geom::{obj, sample_surface, RigidTransform, Vec3};
use dexkit::grasp::DistanceMatrix;
use dexkit::io;
use dexkit::retarget::{HandKeypoints, KeypointFrame};
use dexkit::robot::RobotConfig;

fn dexkit_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dexkit"))
}

fn run(args: &[&str]) -> Output {
    dexkit_bin().args(args).output().expect("binary runs")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

struct Fixture {
    dir: tempfile::TempDir,
    urdf: PathBuf,
    object: PathBuf,
    trajectory: PathBuf,
    marked: PathBuf,
    scene_arg: String,
    object_id: String,
    grasp_frame: usize,
    scene: fixtures::PickAndMove<f64>,
}

fn build_fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let urdf = dir.path().join("hand.urdf");
    std::fs::write(&urdf, fixtures::four_finger_hand_urdf()).unwrap();
    let scene = fixtures::pick_and_move::<f64>(10, 5, 12, Vec3::new(0.12, 0.03, 0.06));
    let object = dir.path().join("cylinder.obj");
    obj::write_obj_file(&scene.scene.object, &object).unwrap();
    let trajectory = dir.path().join("source.jsonl");
    io::write_trajectory_file(&trajectory, &scene.trajectory).unwrap();
    let (t1, t2) = segment_stages(
        &scene.trajectory,
        &scene.scene.object_id,
        &scene.scene.object,
        &scene.scene.model,
        &SegmentParams::default(),
    )
    .unwrap();
    let marked = dir.path().join("marked.jsonl");
    io::write_trajectory_file(
        &marked,
        &scene.trajectory.clone().with_stage_marks(t1, t2).unwrap(),
    )
    .unwrap();
    Fixture {
        scene_arg: format!("cylinder={}", object.display()),
        object_id: "cylinder".to_string(),
        grasp_frame: scene.grasp_frame,
        urdf,
        object,
        trajectory,
        marked,
        scene,
        dir,
    }
}

#[test]
fn fk_matches_planar_two_link_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let urdf = dir.path().join("arm.urdf");
    std::fs::write(&urdf, fixtures::TWO_LINK_ARM_URDF).unwrap();
    let out_path = dir.path().join("fk.json");
    let out = run(&[
        "fk",
        "--model",
        urdf.to_str().unwrap(),
        "--joints",
        "1.5707963267948966,-1.5707963267948966",
        "--output",
        out_path.to_str().unwrap(),
    ]);
    assert_success(&out);
    let value: serde_json::Value =
        serde_json::from_reader(std::fs::File::open(&out_path).unwrap()).unwrap();
    let tip = &value["links"]["tip"]["t"];
    assert!((tip[0].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!((tip[1].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!(tip[2].as_f64().unwrap().abs() < 1e-9);
    assert!(value["limit_warnings"].as_array().unwrap().is_empty());
}

#[test]
fn missing_input_exits_2_with_code() {
    let out = run(&["fk", "--model", "/no/such/file.urdf"]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value =
        serde_json::from_slice(&out.stderr).expect("stderr is machine readable");
    assert_eq!(err["error"], "E_IO_MISSING");
}

#[test]
fn unknown_subcommand_exits_2_with_code() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "E_UNKNOWN_SUBCOMMAND");
}

#[test]
fn segment_reports_stage_marks() {
    let f = build_fixture();
    let marked_out = f.dir.path().join("seg.jsonl");
    let out = run(&[
        "segment",
        "--model",
        f.urdf.to_str().unwrap(),
        "--trajectory",
        f.trajectory.to_str().unwrap(),
        "--object",
        f.object.to_str().unwrap(),
        "--object-id",
        &f.object_id,
        "--output",
        marked_out.to_str().unwrap(),
    ]);
    assert_success(&out);
    let marks: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(marks["t2"].as_u64().unwrap() as usize, f.grasp_frame);
    let written: dexkit::trajectory::Trajectory<f64> =
        io::read_trajectory_file(&marked_out).unwrap();
    assert!(written.stage_marks.is_some());
}

#[test]
fn synth_identity_is_byte_identical_to_input() {
    let f = build_fixture();
    let out_dir = f.dir.path().join("synth");
    let out = run(&[
        "synth",
        "--model",
        f.urdf.to_str().unwrap(),
        "--trajectory",
        f.marked.to_str().unwrap(),
        "--scene",
        &f.scene_arg,
        "--object-id",
        &f.object_id,
        "--count",
        "1",
        "--seed",
        "3",
        "--identity",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_success(&out);
    let input = std::fs::read(&f.marked).unwrap();
    let output = std::fs::read(out_dir.join("synth_0000.jsonl")).unwrap();
    assert_eq!(
        input, output,
        "identity synthesis must reproduce the input bytes"
    );
}

#[test]
fn synth_is_deterministic_across_runs() {
    let f = build_fixture();
    let run_once = |tag: &str| -> Vec<u8> {
        let out_dir = f.dir.path().join(tag);
        let out = run(&[
            "synth",
            "--model",
            f.urdf.to_str().unwrap(),
            "--trajectory",
            f.marked.to_str().unwrap(),
            "--scene",
            &f.scene_arg,
            "--object-id",
            &f.object_id,
            "--count",
            "5",
            "--seed",
            "11",
            "--x-bounds",
            "-0.1,0.1",
            "--y-bounds",
            "-0.1,0.1",
            "--out-dir",
            out_dir.to_str().unwrap(),
        ]);
        assert_success(&out);
        (0..5)
            .flat_map(|i| std::fs::read(out_dir.join(format!("synth_{i:04}.jsonl"))).unwrap())
            .collect()
    };
    assert_eq!(run_once("a"), run_once("b"));
}

#[test]
fn retarget_produces_trajectory() {
    let f = build_fixture();
    // synthesize keypoints from known configurations with the test mapping
    let mapping = fixtures::hand_test_mapping::<f64>();
    let mapping_path = f.dir.path().join("mapping.json");
    {
        let file = std::fs::File::create(&mapping_path).unwrap();
        io::write_mapping(file, &mapping).unwrap();
    }
    let frames: Vec<KeypointFrame<f64>> = (0..8)
        .map(|i| {
            let q = RobotConfig::new(
                RigidTransform::from_translation(Vec3::new(0.0, 0.0, 0.1 + 0.005 * i as f64)),
                fixtures::hand_joints_equal_flexion(0.2 + 0.01 * i as f64),
            );
            KeypointFrame {
                time: i as f64 / 30.0,
                joints: fixtures::keypoints_for_config(&f.scene.scene.model, &mapping, &q),
            }
        })
        .collect();
    let keypoints_path = f.dir.path().join("keypoints.jsonl");
    {
        let file = std::fs::File::create(&keypoints_path).unwrap();
        io::write_keypoints(file, &HandKeypoints::new(frames).unwrap()).unwrap();
    }
    let traj_out = f.dir.path().join("retargeted.jsonl");
    let out = run(&[
        "retarget",
        "--model",
        f.urdf.to_str().unwrap(),
        "--keypoints",
        keypoints_path.to_str().unwrap(),
        "--mapping",
        mapping_path.to_str().unwrap(),
        "--output",
        traj_out.to_str().unwrap(),
    ]);
    assert_success(&out);
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["frames"], 8);
    assert_eq!(summary["converged"], 8);
    let traj: dexkit::trajectory::Trajectory<f64> = io::read_trajectory_file(&traj_out).unwrap();
    assert_eq!(traj.len(), 8);
    // recovered flexion tracks the synthetic schedule
    let q5 = &traj.frames[5].config;
    assert!((q5.joint_values[1] - 0.25).abs() < 1e-3);
}

#[test]
fn grasp_solve_and_stability_pipeline() {
    let f = build_fixture();
    let model = &f.scene.scene.model;
    // analytic distance matrix at the grasp configuration
    let q_grasp = &f.scene.trajectory.frames[f.grasp_frame].config;
    let canonical = model.canonical_points(192, 5).unwrap();
    let robot_cloud = canonical.at_config(model, q_grasp).unwrap();
    let object_points = sample_surface(&f.scene.scene.object, 250, 6).unwrap();
    let distances = DistanceMatrix::from_clouds(&robot_cloud, &object_points);
    let dmat_path = f.dir.path().join("grasp.dmat");
    {
        let file = std::fs::File::create(&dmat_path).unwrap();
        io::write_distance_matrix(std::io::BufWriter::new(file), &distances).unwrap();
    }
    // object points file: OBJ with the sampled vertices
    let cloud_path = f.dir.path().join("object_points.obj");
    {
        let mesh = dexkit::geom::TriMesh::new(object_points.points.clone(), vec![]).unwrap();
        obj::write_obj_file(&mesh, &cloud_path).unwrap();
    }
    let grasp_out = f.dir.path().join("grasp.json");
    let out = run(&[
        "grasp-solve",
        "--model",
        f.urdf.to_str().unwrap(),
        "--distances",
        dmat_path.to_str().unwrap(),
        "--object-cloud",
        cloud_path.to_str().unwrap(),
        "--robot-points",
        "192",
        "--robot-seed",
        "5",
        "--output",
        grasp_out.to_str().unwrap(),
    ]);
    assert_success(&out);
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    // distances stored as f32 floor the achievable rms
    assert!(summary["fit_rms"].as_f64().unwrap() < 1e-4);

    let report_out = f.dir.path().join("stability.json");
    let out = run(&[
        "stability",
        "--model",
        f.urdf.to_str().unwrap(),
        "--grasp",
        grasp_out.to_str().unwrap(),
        "--object",
        f.object.to_str().unwrap(),
        "--mass",
        "0.3",
        "--mu",
        "0.5",
        "--contact-eps",
        "0.006",
        "--output",
        report_out.to_str().unwrap(),
    ]);
    assert_success(&out);
    let report: serde_json::Value =
        serde_json::from_reader(std::fs::File::open(&report_out).unwrap()).unwrap();
    assert_eq!(report["success"], true, "grasp should pass: {report}");
    assert_eq!(report["directions"].as_array().unwrap().len(), 6);
}

#[test]
fn contact_opt_refines_window() {
    let f = build_fixture();
    let refined_out = f.dir.path().join("refined.jsonl");
    let out = run(&[
        "contact-opt",
        "--model",
        f.urdf.to_str().unwrap(),
        "--trajectory",
        f.marked.to_str().unwrap(),
        "--object",
        f.object.to_str().unwrap(),
        "--object-id",
        &f.object_id,
        "--max-iters",
        "15",
        "--output",
        refined_out.to_str().unwrap(),
    ]);
    assert_success(&out);
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for frame in summary["frames"].as_array().unwrap() {
        assert!(frame["final"].as_f64().unwrap() <= frame["initial"].as_f64().unwrap());
    }
    let refined: dexkit::trajectory::Trajectory<f64> =
        io::read_trajectory_file(&refined_out).unwrap();
    assert_eq!(refined.len(), f.scene.trajectory.len());
}

#[test]
fn contact_opt_accepts_target_map_files() {
    let f = build_fixture();
    // targets: the contact maps of the trajectory's own grasp frame
    let model = &f.scene.scene.model;
    let q_grasp = &f.scene.trajectory.frames[f.grasp_frame].config;
    let hand_mesh = model.robot_mesh_at(q_grasp).unwrap();
    let c_rad = 0.01;
    let hand_map = dexkit::contact::contact_map(&hand_mesh, &f.scene.scene.object, c_rad).unwrap();
    let object_map =
        dexkit::contact::contact_map(&f.scene.scene.object, &hand_mesh, c_rad).unwrap();
    let hand_path = f.dir.path().join("hand_targets.json");
    let object_path = f.dir.path().join("object_targets.json");
    io::write_contact_map(std::fs::File::create(&hand_path).unwrap(), &hand_map).unwrap();
    io::write_contact_map(std::fs::File::create(&object_path).unwrap(), &object_map).unwrap();
    let refined_out = f.dir.path().join("refined_files.jsonl");
    let out = run(&[
        "contact-opt",
        "--model",
        f.urdf.to_str().unwrap(),
        "--trajectory",
        f.marked.to_str().unwrap(),
        "--object",
        f.object.to_str().unwrap(),
        "--object-id",
        &f.object_id,
        "--hand-targets",
        hand_path.to_str().unwrap(),
        "--object-targets",
        object_path.to_str().unwrap(),
        "--c-rad",
        "0.01",
        "--max-iters",
        "10",
        "--output",
        refined_out.to_str().unwrap(),
    ]);
    assert_success(&out);
    // passing only one of the two target files is a usage error
    let out = run(&[
        "contact-opt",
        "--model",
        f.urdf.to_str().unwrap(),
        "--trajectory",
        f.marked.to_str().unwrap(),
        "--object",
        f.object.to_str().unwrap(),
        "--object-id",
        &f.object_id,
        "--hand-targets",
        hand_path.to_str().unwrap(),
        "--output",
        refined_out.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "E_USAGE");
}

#[test]
fn calib_gravity_aligns_and_round_trips() {
    let f = build_fixture();
    let aligned_out = f.dir.path().join("aligned.jsonl");
    let out = run(&[
        "calib-gravity",
        "--gravity",
        "0.2,0.1,-0.95",
        "--trajectory",
        f.trajectory.to_str().unwrap(),
        "--output",
        aligned_out.to_str().unwrap(),
    ]);
    assert_success(&out);
    let aligned: dexkit::trajectory::Trajectory<f64> =
        io::read_trajectory_file(&aligned_out).unwrap();
    assert_eq!(aligned.len(), f.scene.trajectory.len());
    // relative wrist transforms are preserved
    let a0 = &f.scene.trajectory.frames[0].config.wrist;
    let a1 = &f.scene.trajectory.frames[1].config.wrist;
    let b0 = &aligned.frames[0].config.wrist;
    let b1 = &aligned.frames[1].config.wrist;
    let rel_a = a0.inverse().compose(a1);
    let rel_b = b0.inverse().compose(b1);
    assert!(rel_a.translation.distance(rel_b.translation) < 1e-9);
}

#[test]
fn scale_search_recovers_grid_scale() {
    let f = build_fixture();
    let intr = CameraIntrinsics::new(250.0, 250.0, 80.0, 60.0, 160, 120).unwrap();
    let intr_path = f.dir.path().join("intrinsics.json");
    {
        let file = std::fs::File::create(&intr_path).unwrap();
        io::write_intrinsics(file, &intr).unwrap();
    }
    let poses: Vec<RigidTransform<f64>> = (0..3)
        .map(|i| RigidTransform::from_translation(Vec3::new(0.01 * i as f64, 0.0, 0.5)))
        .collect();
    // masks rendered at scale 1.2 with the same sampler settings
    let samples = 6000usize;
    let seed = 17u64;
    let base = sample_surface(&f.scene.scene.object, samples, seed).unwrap();
    let centroid = f.scene.scene.object.centroid();
    let mut mask_args: Vec<String> = Vec::new();
    for (i, pose) in poses.iter().enumerate() {
        let cam: Vec<Vec3<f64>> = base
            .points
            .iter()
            .map(|p| pose.apply(centroid + (*p - centroid) * 1.2))
            .collect();
        let (mask, _) = render_silhouette(&cam, &intr);
        let path = f.dir.path().join(format!("mask_{i}.pgm"));
        io::write_mask_pgm_file(&path, &mask).unwrap();
        mask_args.push(path.display().to_string());
    }
    let poses_path = f.dir.path().join("poses.jsonl");
    {
        let file = std::fs::File::create(&poses_path).unwrap();
        io::write_pose_lines(file, &poses).unwrap();
    }
    let result_out = f.dir.path().join("scale.json");
    let mut args: Vec<String> = vec![
        "scale-search".into(),
        "--mesh".into(),
        f.object.display().to_string(),
        "--intrinsics".into(),
        intr_path.display().to_string(),
        "--poses".into(),
        poses_path.display().to_string(),
        "--candidates".into(),
        "0.5,0.6,0.7,0.8,0.9,1.0,1.1,1.2,1.3,1.4,1.5".into(),
        "--samples".into(),
        samples.to_string(),
        "--seed".into(),
        seed.to_string(),
        "--output".into(),
        result_out.display().to_string(),
    ];
    for m in &mask_args {
        args.push("--mask".into());
        args.push(m.clone());
    }
    let out = dexkit_bin().args(&args).output().unwrap();
    assert_success(&out);
    let result: serde_json::Value =
        serde_json::from_reader(std::fs::File::open(&result_out).unwrap()).unwrap();
    assert!((result["best_scale"].as_f64().unwrap() - 1.2).abs() < 1e-12);
}

#[test]
fn export_writes_training_set() {
    let f = build_fixture();
    let out_dir = f.dir.path().join("dataset");
    let out = run(&[
        "export",
        "--model",
        f.urdf.to_str().unwrap(),
        "--trajectory",
        f.marked.to_str().unwrap(),
        "--scene",
        &f.scene_arg,
        "--points",
        "96",
        "--seed",
        "9",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_success(&out);
    let obs =
        io::read_observation(std::fs::File::open(out_dir.join("traj_0000/obs.json")).unwrap())
            .unwrap();
    assert_eq!(obs.robot_points.len(), 96 * 3);
    let actions =
        io::read_actions(std::fs::File::open(out_dir.join("traj_0000/actions.json")).unwrap())
            .unwrap();
    assert!(!actions.actions.is_empty());
}

#[test]
fn config_file_supplies_defaults() {
    let f = build_fixture();
    let config_path = f.dir.path().join("config.json");
    std::fs::write(
        &config_path,
        r#"{"d_approach": 0.02, "contact_eps": 0.002}"#,
    )
    .unwrap();
    let out = run(&[
        "--config",
        config_path.to_str().unwrap(),
        "segment",
        "--model",
        f.urdf.to_str().unwrap(),
        "--trajectory",
        f.trajectory.to_str().unwrap(),
        "--object",
        f.object.to_str().unwrap(),
        "--object-id",
        &f.object_id,
    ]);
    assert_success(&out);
    // unknown config keys are rejected
    std::fs::write(&config_path, r#"{"nonsense": 1}"#).unwrap();
    let out = run(&[
        "--config",
        config_path.to_str().unwrap(),
        "segment",
        "--model",
        f.urdf.to_str().unwrap(),
        "--trajectory",
        f.trajectory.to_str().unwrap(),
        "--object",
        f.object.to_str().unwrap(),
        "--object-id",
        &f.object_id,
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "E_CONFIG");
}

#[test]
fn help_documents_magic_bytes() {
    let out = run(&["--help"]);
    assert_success(&out);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("VMDM1"));
    assert!(text.contains("VMGRID1"));
    assert!(text.contains("P5"));
}
