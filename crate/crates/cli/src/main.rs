//! Command-line entry points wiring the library operations into the
//! video-to-robot pipeline order. Every subcommand is deterministic: the
//! same inputs and seeds produce byte-identical outputs, and all randomized
//! subcommands require an explicit `--seed`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use dexkit::calib::{self, CameraIntrinsics, ScaleFrame, ScaleSearchOptions};
use dexkit::contact::{
    heuristic_targets, optimize_contact, ContactParams, ContactTargets, HeuristicTargetOptions,
};
use dexkit::demo::{self, SegmentParams, SynthesisSpec};
use dexkit::geom::{obj, PointCloud, RigidTransform, TriMesh, Vec3};
use dexkit::grasp::{extract_contacts, solve_grasp, stability_check, FitOptions, StabilityParams};
use dexkit::io;
use dexkit::retarget::{retarget_trajectory, KeypointMapping, RetargetOptions};
use dexkit::robot::{RobotConfig, RobotModel};
use dexkit::trajectory::Trajectory;

const FORMAT_HELP: &str = "\
FILE FORMATS:
  trajectory (.jsonl)   line 1 header {\"joints\": [names], \"t1\": int|null, \"t2\": int|null},
                        then one line per frame:
                        {\"t\": sec, \"wrist\": {\"q\": [w,x,y,z], \"t\": [x,y,z]},
                         \"joints\": [..], \"objects\": {id: {\"q\": .., \"t\": ..}}}
  keypoints (.jsonl)    one line per frame: {\"t\": sec, \"joints\": [[x,y,z] x 21]}
  mapping (.json)       {\"entries\": [{\"link\", \"offset\": [x,y,z], \"keypoint\", \"weight\"}]}
  contact map (.json)   {\"c_rad\": meters, \"values\": [per-vertex in 0..1]}
  mesh (.obj)           `v x y z` and `f i j k` lines (1-based, fan-triangulated)
  distance matrix       magic `VMDM1\\n`, ASCII `N_R N_O\\n`, then row-major
                        little-endian f32 values
  depth grid            magic `VMGRID1\\n`, ASCII `rows cols\\n`, then row-major
                        little-endian f32 values
  mask (.pgm)           binary PGM (`P5`), nonzero bytes = occupied
  intrinsics (.json)    {\"fx\", \"fy\", \"cx\", \"cy\", \"width\", \"height\"}
  poses (.jsonl)        one line per frame: {\"q\": [w,x,y,z], \"t\": [x,y,z]}

ERRORS:
  failures print machine-readable JSON to stderr:
  {\"error\": CODE, \"message\": text}; missing input files exit 2 with
  code E_IO_MISSING.";

#[derive(Parser)]
#[command(
    name = "dexkit",
    about = "Geometric and optimization toolkit for dexterous hand-object manipulation pipelines",
    after_long_help = FORMAT_HELP,
    version
)]
struct Cli {
    /// JSON config file with default parameter values (flags win).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Retarget hand keypoints to robot configurations.
    Retarget(RetargetArgs),
    /// Refine grasp-window configurations against contact-map targets.
    ContactOpt(ContactOptArgs),
    /// Recover a grasp from a robot-object distance matrix.
    GraspSolve(GraspSolveArgs),
    /// Check grasp stability under the six-direction disturbance protocol.
    Stability(StabilityArgs),
    /// Mark the grasp stage (t1, t2) of a trajectory.
    Segment(SegmentArgs),
    /// Synthesize spatially randomized demonstrations.
    Synth(SynthArgs),
    /// Export trajectories as a policy training set.
    Export(ExportArgs),
    /// Gravity-align a camera-frame trajectory.
    CalibGravity(CalibGravityArgs),
    /// Search object scale by silhouette rendering error.
    ScaleSearch(ScaleSearchArgs),
    /// Forward kinematics: link poses for one configuration.
    Fk(FkArgs),
}

#[derive(Args)]
struct RetargetArgs {
    /// Robot URDF file.
    #[arg(long)]
    model: PathBuf,
    /// Keypoints file (JSON lines).
    #[arg(long)]
    keypoints: PathBuf,
    /// Keypoint mapping JSON; defaults to root/leaf links when omitted.
    #[arg(long)]
    mapping: Option<PathBuf>,
    /// Temporal smoothness weight.
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    /// Output trajectory file.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct ContactOptArgs {
    #[arg(long)]
    model: PathBuf,
    /// Stage-marked input trajectory.
    #[arg(long)]
    trajectory: PathBuf,
    /// Object mesh (OBJ).
    #[arg(long)]
    object: PathBuf,
    /// Object id inside the trajectory.
    #[arg(long)]
    object_id: String,
    /// Hand target contact map JSON (heuristic targets when omitted).
    #[arg(long)]
    hand_targets: Option<PathBuf>,
    /// Object target contact map JSON (heuristic targets when omitted).
    #[arg(long)]
    object_targets: Option<PathBuf>,
    /// Contact falloff radius, meters.
    #[arg(long)]
    c_rad: Option<f64>,
    /// Penetration penalty weight.
    #[arg(long)]
    lambda_pen: Option<f64>,
    /// Strict two-term energy (disables the penetration term).
    #[arg(long)]
    strict: bool,
    #[arg(long, default_value_t = 150)]
    max_iters: usize,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct GraspSolveArgs {
    #[arg(long)]
    model: PathBuf,
    /// Distance matrix file (VMDM1).
    #[arg(long)]
    distances: PathBuf,
    /// OBJ whose vertices are the object points (matrix columns).
    #[arg(long)]
    object_cloud: PathBuf,
    /// Canonical robot cloud size (matrix rows).
    #[arg(long)]
    robot_points: Option<usize>,
    /// Seed of the canonical robot cloud sampling.
    #[arg(long)]
    robot_seed: u64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct StabilityArgs {
    #[arg(long)]
    model: PathBuf,
    /// Grasp result JSON (from grasp-solve) carrying wrist + joints.
    #[arg(long)]
    grasp: PathBuf,
    /// Object mesh, in the same frame as the grasp configuration.
    #[arg(long)]
    object: PathBuf,
    /// Object mass, kg.
    #[arg(long)]
    mass: f64,
    /// Friction coefficient.
    #[arg(long)]
    mu: Option<f64>,
    /// Disturbance acceleration scale (force = 0.5 * mass * scale newtons).
    #[arg(long)]
    disturbance_scale: Option<f64>,
    /// Friction cone edge count.
    #[arg(long)]
    cone_edges: Option<usize>,
    /// Contact extraction distance, meters.
    #[arg(long)]
    contact_eps: Option<f64>,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct SegmentArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    trajectory: PathBuf,
    #[arg(long)]
    object: PathBuf,
    #[arg(long)]
    object_id: String,
    #[arg(long)]
    d_approach: Option<f64>,
    #[arg(long)]
    motion_eps: Option<f64>,
    #[arg(long)]
    contact_eps: Option<f64>,
    /// Write the stage-marked trajectory here (marks print to stdout).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    model: PathBuf,
    /// Stage-marked source trajectory.
    #[arg(long)]
    trajectory: PathBuf,
    /// Scene meshes as `id=path.obj` (repeatable); must include the target.
    #[arg(long = "scene", value_parser = parse_scene_entry)]
    scene: Vec<(String, PathBuf)>,
    /// Target object id.
    #[arg(long)]
    object_id: String,
    #[arg(long)]
    count: usize,
    /// Base seed; sample k uses seed + k.
    #[arg(long)]
    seed: u64,
    /// Translation bounds `lo,hi` in x, meters.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true, default_value = "0,0")]
    x_bounds: (f64, f64),
    /// Translation bounds `lo,hi` in y, meters.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true, default_value = "0,0")]
    y_bounds: (f64, f64),
    /// Yaw bounds `lo,hi` about world z, radians.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true, default_value = "0,0")]
    yaw_bounds: (f64, f64),
    /// Force the identity transform (bounds collapse to zero).
    #[arg(long)]
    identity: bool,
    #[arg(long)]
    d_approach: Option<f64>,
    /// Collision clearance for regenerated paths, meters.
    #[arg(long)]
    clearance: Option<f64>,
    #[arg(long, default_value_t = 20)]
    max_retries: usize,
    /// Output directory; trajectories land in synth_0000.jsonl, ...
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    model: PathBuf,
    /// Stage-marked trajectories (repeatable).
    #[arg(long = "trajectory", required = true)]
    trajectories: Vec<PathBuf>,
    /// Scene meshes as `id=path.obj` (repeatable).
    #[arg(long = "scene", value_parser = parse_scene_entry)]
    scene: Vec<(String, PathBuf)>,
    /// Points per cloud.
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct CalibGravityArgs {
    /// Gravity direction in the camera frame, `x,y,z`.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    gravity: (f64, f64, f64),
    #[arg(long)]
    trajectory: PathBuf,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct ScaleSearchArgs {
    /// Object mesh (OBJ).
    #[arg(long)]
    mesh: PathBuf,
    /// Camera intrinsics JSON.
    #[arg(long)]
    intrinsics: PathBuf,
    /// Object masks, one PGM per frame (repeatable, ordered).
    #[arg(long = "mask", required = true)]
    masks: Vec<PathBuf>,
    /// Per-frame object poses (JSON lines), aligned with the masks.
    #[arg(long)]
    poses: PathBuf,
    /// Candidate scales, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    candidates: Vec<f64>,
    /// Silhouette sample count.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct FkArgs {
    #[arg(long)]
    model: PathBuf,
    /// Joint values, comma separated (defaults to zeros).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    joints: Option<Vec<f64>>,
    /// Wrist translation `x,y,z`.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true, default_value = "0,0,0")]
    wrist_t: (f64, f64, f64),
    /// Wrist quaternion `w,x,y,z`.
    #[arg(long, value_parser = parse_quat, allow_hyphen_values = true, default_value = "1,0,0,0")]
    wrist_q: (f64, f64, f64, f64),
    /// Output JSON path (stdout when omitted).
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_scene_entry(s: &str) -> Result<(String, PathBuf), String> {
    let (id, path) = s.split_once('=').ok_or("expected id=path.obj")?;
    if id.is_empty() {
        return Err("scene id is empty".into());
    }
    Ok((id.to_string(), PathBuf::from(path)))
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err("expected lo,hi".into());
    }
    let lo = parts[0].trim().parse().map_err(|_| "bad number")?;
    let hi = parts[1].trim().parse().map_err(|_| "bad number")?;
    Ok((lo, hi))
}

fn parse_vec3(s: &str) -> Result<(f64, f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err("expected x,y,z".into());
    }
    let mut vals = [0.0; 3];
    for (v, p) in vals.iter_mut().zip(&parts) {
        *v = p.trim().parse().map_err(|_| "bad number")?;
    }
    Ok((vals[0], vals[1], vals[2]))
}

fn parse_quat(s: &str) -> Result<(f64, f64, f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 4 {
        return Err("expected w,x,y,z".into());
    }
    let mut vals = [0.0; 4];
    for (v, p) in vals.iter_mut().zip(&parts) {
        *v = p.trim().parse().map_err(|_| "bad number")?;
    }
    Ok((vals[0], vals[1], vals[2], vals[3]))
}

/// Defaults loadable from a JSON config file; command-line flags win.
#[derive(Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PipelineConfig {
    c_rad: Option<f64>,
    lambda_pen: Option<f64>,
    d_approach: Option<f64>,
    motion_eps: Option<f64>,
    contact_eps: Option<f64>,
    mu: Option<f64>,
    disturbance_scale: Option<f64>,
    cone_edges: Option<usize>,
    samples: Option<usize>,
    points: Option<usize>,
    robot_points: Option<usize>,
    clearance: Option<f64>,
}

struct CliError {
    code: &'static str,
    message: String,
    exit: u8,
}

impl CliError {
    fn new(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            exit: 1,
        }
    }

    fn missing(path: &Path) -> Self {
        Self {
            code: "E_IO_MISSING",
            message: format!("input file not found: {}", path.display()),
            exit: 2,
        }
    }
}

macro_rules! from_error {
    ($ty:ty, $code:expr) => {
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::new($code, e.to_string())
            }
        }
    };
}

from_error!(dexkit::geom::GeomError, "E_GEOM");
from_error!(dexkit::robot::RobotError, "E_ROBOT");
from_error!(dexkit::retarget::RetargetError, "E_RETARGET");
from_error!(dexkit::contact::ContactError, "E_CONTACT");
from_error!(dexkit::grasp::GraspError, "E_GRASP");
from_error!(dexkit::demo::DemoError, "E_DEMO");
from_error!(dexkit::calib::CalibError, "E_CALIB");
from_error!(dexkit::trajectory::TrajectoryError, "E_TRAJECTORY");
from_error!(std::io::Error, "E_IO");

impl From<io::IoError> for CliError {
    fn from(e: io::IoError) -> Self {
        match e {
            io::IoError::Io(inner) if inner.kind() == std::io::ErrorKind::NotFound => CliError {
                code: "E_IO_MISSING",
                message: inner.to_string(),
                exit: 2,
            },
            io::IoError::Format(msg) => CliError::new("E_FORMAT", msg),
            io::IoError::Json(inner) => CliError::new("E_FORMAT", inner.to_string()),
            other => CliError::new("E_IO", other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{err}");
                    return ExitCode::SUCCESS;
                }
                ErrorKind::InvalidSubcommand | ErrorKind::UnknownArgument => {
                    emit_error(&CliError {
                        code: "E_UNKNOWN_SUBCOMMAND",
                        message: err.to_string(),
                        exit: 2,
                    });
                    return ExitCode::from(2);
                }
                _ => {
                    emit_error(&CliError {
                        code: "E_USAGE",
                        message: err.to_string(),
                        exit: 2,
                    });
                    return ExitCode::from(2);
                }
            }
        }
    };
    let config = match load_config(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            emit_error(&e);
            return ExitCode::from(e.exit);
        }
    };
    match run(cli.command, &config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            emit_error(&e);
            ExitCode::from(e.exit)
        }
    }
}

fn emit_error(e: &CliError) {
    eprintln!(
        "{}",
        serde_json::json!({ "error": e.code, "message": e.message })
    );
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig, CliError> {
    let Some(path) = path else {
        return Ok(PipelineConfig::default());
    };
    let file = open_input(path)?;
    serde_json::from_reader(file)
        .map_err(|e| CliError::new("E_CONFIG", format!("bad config file: {e}")))
}

fn open_input(path: &Path) -> Result<std::fs::File, CliError> {
    std::fs::File::open(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::missing(path)
        } else {
            CliError::new("E_IO", e.to_string())
        }
    })
}

fn load_model(path: &Path) -> Result<RobotModel<f64>, CliError> {
    if !path.exists() {
        return Err(CliError::missing(path));
    }
    Ok(RobotModel::from_urdf_file(path)?)
}

fn load_mesh(path: &Path) -> Result<TriMesh<f64>, CliError> {
    let file = open_input(path)?;
    Ok(obj::read_obj(file)?)
}

fn load_trajectory(path: &Path) -> Result<Trajectory<f64>, CliError> {
    Ok(io::read_trajectory(open_input(path)?)?)
}

fn load_scene(entries: &[(String, PathBuf)]) -> Result<BTreeMap<String, TriMesh<f64>>, CliError> {
    let mut scene = BTreeMap::new();
    for (id, path) in entries {
        scene.insert(id.clone(), load_mesh(path)?);
    }
    Ok(scene)
}

fn run(command: Command, config: &PipelineConfig) -> Result<(), CliError> {
    match command {
        Command::Retarget(args) => cmd_retarget(args),
        Command::ContactOpt(args) => cmd_contact_opt(args, config),
        Command::GraspSolve(args) => cmd_grasp_solve(args, config),
        Command::Stability(args) => cmd_stability(args, config),
        Command::Segment(args) => cmd_segment(args, config),
        Command::Synth(args) => cmd_synth(args, config),
        Command::Export(args) => cmd_export(args, config),
        Command::CalibGravity(args) => cmd_calib_gravity(args),
        Command::ScaleSearch(args) => cmd_scale_search(args, config),
        Command::Fk(args) => cmd_fk(args),
    }
}

fn cmd_retarget(args: RetargetArgs) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let keypoints = io::read_keypoints(open_input(&args.keypoints)?)?;
    let mapping = match &args.mapping {
        Some(path) => io::read_mapping(open_input(path)?)?,
        None => KeypointMapping::default_for_model(&model).ok_or_else(|| {
            CliError::new(
                "E_RETARGET",
                "no default mapping for this model; pass --mapping",
            )
        })?,
    };
    let (trajectory, report) = retarget_trajectory(
        &model,
        &mapping,
        &keypoints,
        args.lambda,
        &RetargetOptions::default(),
    )?;
    io::write_trajectory_file(&args.output, &trajectory)?;
    let converged = report.frames.iter().filter(|f| f.converged).count();
    println!(
        "{}",
        serde_json::json!({
            "frames": report.frames.len(),
            "converged": converged,
            "output": args.output.display().to_string(),
        })
    );
    Ok(())
}

fn cmd_contact_opt(args: ContactOptArgs, config: &PipelineConfig) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let mut trajectory = load_trajectory(&args.trajectory)?;
    let object = load_mesh(&args.object)?;
    let Some((t1, t2)) = trajectory.stage_marks else {
        return Err(CliError::new(
            "E_UNMARKED",
            "trajectory has no stage marks; run segment",
        ));
    };
    let c_rad = args.c_rad.or(config.c_rad).unwrap_or(0.01);
    let lambda_pen = if args.strict {
        0.0
    } else {
        args.lambda_pen.or(config.lambda_pen).unwrap_or(10.0)
    };
    let params = ContactParams { c_rad, lambda_pen };

    let file_targets = match (&args.hand_targets, &args.object_targets) {
        (Some(h), Some(o)) => {
            let hand_mesh = model.robot_mesh_at(&trajectory.frames[t1].config)?;
            let hand = io::read_contact_map::<f64>(open_input(h)?, hand_mesh.vertex_count())?;
            let object_map = io::read_contact_map::<f64>(open_input(o)?, object.vertex_count())?;
            Some(ContactTargets {
                hand: hand.values,
                object: object_map.values,
            })
        }
        (None, None) => None,
        _ => {
            return Err(CliError::new(
                "E_USAGE",
                "pass both --hand-targets and --object-targets or neither",
            ))
        }
    };

    let mut energies = Vec::new();
    for t in t1..=t2 {
        let pose = trajectory.frames[t]
            .objects
            .get(&args.object_id)
            .copied()
            .ok_or_else(|| {
                CliError::new(
                    "E_MISSING_POSE",
                    format!("object `{}` missing at frame {t}", args.object_id),
                )
            })?;
        let object_world = object.transformed(&pose);
        let q = trajectory.frames[t].config.clone();
        let targets = match &file_targets {
            Some(t) => t.clone(),
            None => heuristic_targets(
                &model,
                &q,
                &object_world,
                c_rad,
                &HeuristicTargetOptions::default(),
            )?,
        };
        let result =
            optimize_contact(&model, &q, &object_world, &targets, &params, args.max_iters)?;
        energies.push(serde_json::json!({
            "frame": t,
            "initial": result.trace.first().copied().unwrap_or(0.0),
            "final": result.trace.last().copied().unwrap_or(0.0),
            "iterations": result.iterations,
        }));
        trajectory.frames[t].config = result.config;
    }
    io::write_trajectory_file(&args.output, &trajectory)?;
    println!(
        "{}",
        serde_json::json!({
            "window": [t1, t2],
            "frames": energies,
            "output": args.output.display().to_string(),
        })
    );
    Ok(())
}

fn cmd_grasp_solve(args: GraspSolveArgs, config: &PipelineConfig) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let distances = io::read_distance_matrix::<f64>(open_input(&args.distances)?)?;
    let cloud_mesh = load_mesh(&args.object_cloud)?;
    let object_points = PointCloud::from_points(cloud_mesh.vertices().to_vec());
    let n_robot = args.robot_points.or(config.robot_points).unwrap_or(512);
    if distances.rows() != n_robot {
        return Err(CliError::new(
            "E_DIMENSION",
            format!(
                "matrix has {} rows but --robot-points is {n_robot}",
                distances.rows()
            ),
        ));
    }
    let canonical = model.canonical_points(n_robot, args.robot_seed)?;
    let q_init = RobotConfig::zero(model.dof_count());
    let result = solve_grasp(
        &model,
        &distances,
        &object_points,
        &canonical,
        &q_init,
        &FitOptions::default(),
    )?;
    let out = std::fs::File::create(&args.output)?;
    io::write_grasp_result(std::io::BufWriter::new(out), &result)?;
    println!(
        "{}",
        serde_json::json!({
            "fit_rms": result.fit_rms,
            "output": args.output.display().to_string(),
        })
    );
    Ok(())
}

fn cmd_stability(args: StabilityArgs, config: &PipelineConfig) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let grasp = io::read_grasp_config::<f64>(open_input(&args.grasp)?)?;
    let object = load_mesh(&args.object)?;
    let eps = args.contact_eps.or(config.contact_eps).unwrap_or(0.002);
    let robot_mesh = model.robot_mesh_at(&grasp)?;
    let contacts = extract_contacts(&robot_mesh, &object, eps);
    let params = StabilityParams {
        mass: args.mass,
        friction: args.mu.or(config.mu).unwrap_or(0.5),
        disturbance_scale: args
            .disturbance_scale
            .or(config.disturbance_scale)
            .unwrap_or(1.0),
        cone_edges: args.cone_edges.or(config.cone_edges).unwrap_or(8),
        gravity: 9.81,
    };
    let report = stability_check(&contacts, object.centroid(), &params);
    let out = std::fs::File::create(&args.output)?;
    io::write_stability_report(std::io::BufWriter::new(out), &report)?;
    println!(
        "{}",
        serde_json::json!({
            "success": report.success,
            "contacts": report.contacts.len(),
            "output": args.output.display().to_string(),
        })
    );
    Ok(())
}

fn cmd_segment(args: SegmentArgs, config: &PipelineConfig) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let trajectory = load_trajectory(&args.trajectory)?;
    let object = load_mesh(&args.object)?;
    let params = SegmentParams {
        d_approach: args.d_approach.or(config.d_approach).unwrap_or(0.02),
        motion_eps: args.motion_eps.or(config.motion_eps).unwrap_or(0.005),
        contact_eps: args.contact_eps.or(config.contact_eps).unwrap_or(0.002),
    };
    let (t1, t2) = demo::segment_stages(&trajectory, &args.object_id, &object, &model, &params)?;
    if let Some(output) = &args.output {
        let marked = trajectory.with_stage_marks(t1, t2)?;
        io::write_trajectory_file(output, &marked)?;
    }
    println!("{}", serde_json::json!({ "t1": t1, "t2": t2 }));
    Ok(())
}

fn cmd_synth(args: SynthArgs, config: &PipelineConfig) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let source = load_trajectory(&args.trajectory)?;
    let scene = load_scene(&args.scene)?;
    let mut spec = SynthesisSpec::identity(args.object_id.clone(), args.count, args.seed);
    if !args.identity {
        spec.x_bounds = args.x_bounds;
        spec.y_bounds = args.y_bounds;
        spec.yaw_bounds = args.yaw_bounds;
    }
    spec.d_approach = args.d_approach.or(config.d_approach).unwrap_or(0.02);
    spec.clearance = args.clearance.or(config.clearance).unwrap_or(0.01);
    spec.max_retries = args.max_retries;
    let out = demo::synthesize(&source, &spec, &scene, &model)?;
    std::fs::create_dir_all(&args.out_dir)?;
    let mut paths = Vec::new();
    for (i, traj) in out.iter().enumerate() {
        let path = args.out_dir.join(format!("synth_{i:04}.jsonl"));
        io::write_trajectory_file(&path, traj)?;
        paths.push(path.display().to_string());
    }
    println!(
        "{}",
        serde_json::json!({ "count": out.len(), "out_dir": args.out_dir.display().to_string() })
    );
    Ok(())
}

fn cmd_export(args: ExportArgs, config: &PipelineConfig) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let scene = load_scene(&args.scene)?;
    let mut trajectories = Vec::new();
    for path in &args.trajectories {
        trajectories.push(load_trajectory(path)?);
    }
    let points = args.points.or(config.points).unwrap_or(512);
    let written = demo::export_training_set(
        &trajectories,
        &model,
        &scene,
        points,
        args.seed,
        &args.out_dir,
    )?;
    println!(
        "{}",
        serde_json::json!({
            "trajectories": written.len(),
            "out_dir": args.out_dir.display().to_string(),
        })
    );
    Ok(())
}

fn cmd_calib_gravity(args: CalibGravityArgs) -> Result<(), CliError> {
    let trajectory = load_trajectory(&args.trajectory)?;
    let (gx, gy, gz) = args.gravity;
    let rotation = calib::gravity_rotation(Vec3::new(gx, gy, gz))?;
    let aligned = calib::align_trajectory(&trajectory, &rotation);
    io::write_trajectory_file(&args.output, &aligned)?;
    let q = rotation.rotation;
    println!(
        "{}",
        serde_json::json!({
            "rotation": { "q": [q.w, q.x, q.y, q.z] },
            "output": args.output.display().to_string(),
        })
    );
    Ok(())
}

fn cmd_scale_search(args: ScaleSearchArgs, config: &PipelineConfig) -> Result<(), CliError> {
    let mesh = load_mesh(&args.mesh)?;
    let intrinsics: CameraIntrinsics<f64> = io::read_intrinsics(open_input(&args.intrinsics)?)?;
    let poses = io::read_pose_lines_file::<f64>(&args.poses)?;
    if poses.len() != args.masks.len() {
        return Err(CliError::new(
            "E_DIMENSION",
            format!("{} masks but {} poses", args.masks.len(), poses.len()),
        ));
    }
    let mut frames = Vec::with_capacity(poses.len());
    for (mask_path, pose) in args.masks.iter().zip(poses) {
        let mask = io::read_mask_pgm(open_input(mask_path)?)?;
        frames.push(ScaleFrame { mask, pose });
    }
    let opts = ScaleSearchOptions {
        samples: args.samples.or(config.samples).unwrap_or(50_000),
        seed: args.seed,
    };
    let result = calib::scale_search(&mesh, &intrinsics, &frames, &args.candidates, &opts)?;
    let out = std::fs::File::create(&args.output)?;
    io::write_scale_search(std::io::BufWriter::new(out), &args.candidates, &result)?;
    println!(
        "{}",
        serde_json::json!({
            "best_scale": result.best_scale,
            "output": args.output.display().to_string(),
        })
    );
    Ok(())
}

fn cmd_fk(args: FkArgs) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let joints = args.joints.unwrap_or_else(|| vec![0.0; model.dof_count()]);
    let (qw, qx, qy, qz) = args.wrist_q;
    let (tx, ty, tz) = args.wrist_t;
    let rotation = dexkit::geom::Quat::from_wxyz(qw, qx, qy, qz)
        .ok_or_else(|| CliError::new("E_USAGE", "wrist quaternion must be nonzero"))?;
    let q = RobotConfig::new(RigidTransform::new(rotation, Vec3::new(tx, ty, tz)), joints);
    let poses = model.fk_named(&q)?;
    let violations = model.limit_violations(&q, 1e-9);
    match &args.output {
        Some(path) => {
            let out = std::fs::File::create(path)?;
            io::write_fk_output(std::io::BufWriter::new(out), &poses, &violations)?;
        }
        None => {
            let mut bytes = Vec::new();
            io::write_fk_output(&mut bytes, &poses, &violations)?;
            println!("{}", String::from_utf8_lossy(&bytes));
        }
    }
    Ok(())
}
