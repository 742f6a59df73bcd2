//! File formats shared by the CLI and library consumers.
//!
//! Text formats are JSON / JSON-lines with canonical serialization (sorted
//! object maps, shortest round-trip floats), so identical data always
//! produces identical bytes. Binary payloads store little-endian 32-bit
//! floats behind an ASCII magic and dimension header:
//!
//! - distance matrix: `VMDM1\n` + `N_R N_O\n` + row-major f32
//! - depth grid: `VMGRID1\n` + `rows cols\n` + row-major f32
//! - masks: binary PGM (`P5`), nonzero = occupied
//!
//! Trajectory files are JSON lines: a header record
//! `{"joints": [...], "t1": .., "t2": ..}` followed by one record per frame
//! `{"t", "wrist": {"q": [w,x,y,z], "t": [x,y,z]}, "joints", "objects"}`.
//! Keypoint files are JSON lines of `{"t", "joints": [[x,y,z] x 21]}`.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calib::{CalibError, CameraIntrinsics, DepthGrid, MaskImage, ScaleSearchResult};
use crate::contact::{ContactError, ContactMap};
use crate::geom::{Quat, RigidTransform, Vec3};
use crate::grasp::{DistanceMatrix, GraspError, GraspResult, StabilityReport};
use crate::retarget::{HandKeypoints, KeypointFrame, KeypointMapping, MappingEntry, RetargetError};
use crate::robot::{LimitViolation, RobotConfig};
use crate::scalar::Real;
use crate::trajectory::{Frame, Trajectory, TrajectoryError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad file format: {0}")]
    Format(String),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error(transparent)]
    Retarget(#[from] RetargetError),
    #[error(transparent)]
    Contact(#[from] ContactError),
    #[error(transparent)]
    Grasp(#[from] GraspError),
    #[error(transparent)]
    Calib(#[from] CalibError),
}

// ---------------------------------------------------------------------------
// poses and configurations
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct WirePose {
    q: [f64; 4],
    t: [f64; 3],
}

fn pose_to_wire<R: Real>(p: &RigidTransform<R>) -> WirePose {
    let f = |v: R| v.to_f64().unwrap_or(f64::NAN);
    WirePose {
        q: [
            f(p.rotation.w),
            f(p.rotation.x),
            f(p.rotation.y),
            f(p.rotation.z),
        ],
        t: [f(p.translation.x), f(p.translation.y), f(p.translation.z)],
    }
}

fn wire_to_pose<R: Real>(w: &WirePose) -> Result<RigidTransform<R>, IoError> {
    let norm = (w.q[0] * w.q[0] + w.q[1] * w.q[1] + w.q[2] * w.q[2] + w.q[3] * w.q[3]).sqrt();
    if !((norm - 1.0).abs() < 1e-6) {
        return Err(IoError::Format(format!("quaternion norm {norm} is not 1")));
    }
    let c = |v: f64| R::from_f64(v).unwrap();
    // keep raw components so write(read(x)) is byte-identical
    Ok(RigidTransform::new(
        Quat {
            w: c(w.q[0]),
            x: c(w.q[1]),
            y: c(w.q[2]),
            z: c(w.q[3]),
        },
        Vec3::new(c(w.t[0]), c(w.t[1]), c(w.t[2])),
    ))
}

// ---------------------------------------------------------------------------
// trajectories (JSON lines)
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct WireTrajHeader {
    joints: Vec<String>,
    t1: Option<usize>,
    t2: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct WireFrame {
    t: f64,
    wrist: WirePose,
    joints: Vec<f64>,
    objects: BTreeMap<String, WirePose>,
}

pub fn write_trajectory<R: Real>(mut w: impl Write, traj: &Trajectory<R>) -> Result<(), IoError> {
    let header = WireTrajHeader {
        joints: traj.joint_names.clone(),
        t1: traj.stage_marks.map(|(a, _)| a),
        t2: traj.stage_marks.map(|(_, b)| b),
    };
    writeln!(w, "{}", serde_json::to_string(&header)?)?;
    for frame in &traj.frames {
        let record = WireFrame {
            t: frame.time.to_f64().unwrap_or(f64::NAN),
            wrist: pose_to_wire(&frame.config.wrist),
            joints: frame
                .config
                .joint_values
                .iter()
                .map(|v| v.to_f64().unwrap_or(f64::NAN))
                .collect(),
            objects: frame
                .objects
                .iter()
                .map(|(k, v)| (k.clone(), pose_to_wire(v)))
                .collect(),
        };
        writeln!(w, "{}", serde_json::to_string(&record)?)?;
    }
    Ok(())
}

pub fn read_trajectory<R: Real>(r: impl Read) -> Result<Trajectory<R>, IoError> {
    let reader = BufReader::new(r);
    let mut lines = reader.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| IoError::Format("trajectory file is empty".into()))??;
    let header: WireTrajHeader = serde_json::from_str(&header_line)?;
    let mut frames = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let wire: WireFrame = serde_json::from_str(&line)?;
        let mut objects = BTreeMap::new();
        for (id, pose) in &wire.objects {
            objects.insert(id.clone(), wire_to_pose(pose)?);
        }
        frames.push(Frame {
            time: R::from_f64(wire.t).unwrap(),
            config: RobotConfig::new(
                wire_to_pose(&wire.wrist)?,
                wire.joints
                    .iter()
                    .map(|v| R::from_f64(*v).unwrap())
                    .collect(),
            ),
            objects,
        });
    }
    let mut traj = Trajectory::new(header.joints, frames)?;
    match (header.t1, header.t2) {
        (Some(t1), Some(t2)) => {
            traj = traj.with_stage_marks(t1, t2)?;
        }
        (None, None) => {}
        _ => {
            return Err(IoError::Format(
                "stage marks must carry both t1 and t2".into(),
            ))
        }
    }
    Ok(traj)
}

pub fn write_trajectory_file<R: Real>(
    path: impl AsRef<Path>,
    traj: &Trajectory<R>,
) -> Result<(), IoError> {
    write_trajectory(std::io::BufWriter::new(std::fs::File::create(path)?), traj)
}

pub fn read_trajectory_file<R: Real>(path: impl AsRef<Path>) -> Result<Trajectory<R>, IoError> {
    read_trajectory(std::fs::File::open(path)?)
}

// ---------------------------------------------------------------------------
// hand keypoints (JSON lines)
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct WireKeypointFrame {
    t: f64,
    joints: Vec<[f64; 3]>,
}

pub fn write_keypoints<R: Real>(
    mut w: impl Write,
    keypoints: &HandKeypoints<R>,
) -> Result<(), IoError> {
    for frame in &keypoints.frames {
        let record = WireKeypointFrame {
            t: frame.time.to_f64().unwrap_or(f64::NAN),
            joints: frame
                .joints
                .iter()
                .map(|p| {
                    [
                        p.x.to_f64().unwrap_or(f64::NAN),
                        p.y.to_f64().unwrap_or(f64::NAN),
                        p.z.to_f64().unwrap_or(f64::NAN),
                    ]
                })
                .collect(),
        };
        writeln!(w, "{}", serde_json::to_string(&record)?)?;
    }
    Ok(())
}

pub fn read_keypoints<R: Real>(r: impl Read) -> Result<HandKeypoints<R>, IoError> {
    let reader = BufReader::new(r);
    let mut frames = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let wire: WireKeypointFrame = serde_json::from_str(&line)?;
        frames.push(KeypointFrame {
            time: R::from_f64(wire.t).unwrap(),
            joints: wire
                .joints
                .iter()
                .map(|p| {
                    Vec3::new(
                        R::from_f64(p[0]).unwrap(),
                        R::from_f64(p[1]).unwrap(),
                        R::from_f64(p[2]).unwrap(),
                    )
                })
                .collect(),
        });
    }
    Ok(HandKeypoints::new(frames)?)
}

pub fn read_keypoints_file<R: Real>(path: impl AsRef<Path>) -> Result<HandKeypoints<R>, IoError> {
    read_keypoints(std::fs::File::open(path)?)
}

// ---------------------------------------------------------------------------
// keypoint mapping (JSON document)
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct WireMappingEntry {
    link: String,
    offset: [f64; 3],
    keypoint: usize,
    weight: f64,
}

#[derive(Serialize, Deserialize)]
struct WireMapping {
    entries: Vec<WireMappingEntry>,
}

pub fn write_mapping<R: Real>(w: impl Write, mapping: &KeypointMapping<R>) -> Result<(), IoError> {
    let wire = WireMapping {
        entries: mapping
            .entries()
            .iter()
            .map(|e| WireMappingEntry {
                link: e.link.clone(),
                offset: [
                    e.offset.x.to_f64().unwrap_or(f64::NAN),
                    e.offset.y.to_f64().unwrap_or(f64::NAN),
                    e.offset.z.to_f64().unwrap_or(f64::NAN),
                ],
                keypoint: e.keypoint,
                weight: e.weight.to_f64().unwrap_or(f64::NAN),
            })
            .collect(),
    };
    serde_json::to_writer_pretty(w, &wire)?;
    Ok(())
}

/// Read a hand mapping; the wrist/fingertip coverage invariant is enforced
/// here (synthetic rigs can build [`KeypointMapping`] directly).
pub fn read_mapping<R: Real>(r: impl Read) -> Result<KeypointMapping<R>, IoError> {
    let wire: WireMapping = serde_json::from_reader(r)?;
    let entries = wire
        .entries
        .into_iter()
        .map(|e| MappingEntry {
            link: e.link,
            offset: Vec3::new(
                R::from_f64(e.offset[0]).unwrap(),
                R::from_f64(e.offset[1]).unwrap(),
                R::from_f64(e.offset[2]).unwrap(),
            ),
            keypoint: e.keypoint,
            weight: R::from_f64(e.weight).unwrap(),
        })
        .collect();
    let mapping = KeypointMapping::new(entries)?;
    mapping.validate_coverage()?;
    Ok(mapping)
}

pub fn read_mapping_file<R: Real>(path: impl AsRef<Path>) -> Result<KeypointMapping<R>, IoError> {
    read_mapping(std::fs::File::open(path)?)
}

// ---------------------------------------------------------------------------
// contact maps (JSON document)
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct WireContactMap {
    c_rad: f64,
    values: Vec<f64>,
}

pub fn write_contact_map<R: Real>(w: impl Write, map: &ContactMap<R>) -> Result<(), IoError> {
    let wire = WireContactMap {
        c_rad: map.c_rad.to_f64().unwrap_or(f64::NAN),
        values: map
            .values
            .iter()
            .map(|v| v.to_f64().unwrap_or(f64::NAN))
            .collect(),
    };
    serde_json::to_writer(w, &wire)?;
    Ok(())
}

/// Read a contact map, validating length against the paired mesh's vertex
/// count.
pub fn read_contact_map<R: Real>(
    r: impl Read,
    expected_len: usize,
) -> Result<ContactMap<R>, IoError> {
    let wire: WireContactMap = serde_json::from_reader(r)?;
    if wire.values.len() != expected_len {
        return Err(IoError::Format(format!(
            "contact map has {} values, mesh has {} vertices",
            wire.values.len(),
            expected_len
        )));
    }
    Ok(ContactMap::new(
        wire.values
            .iter()
            .map(|v| R::from_f64(*v).unwrap())
            .collect(),
        R::from_f64(wire.c_rad).unwrap(),
    )?)
}

pub fn read_contact_map_file<R: Real>(
    path: impl AsRef<Path>,
    expected_len: usize,
) -> Result<ContactMap<R>, IoError> {
    read_contact_map(std::fs::File::open(path)?, expected_len)
}

// ---------------------------------------------------------------------------
// distance matrix (binary)
// ---------------------------------------------------------------------------

pub const DMAT_MAGIC: &[u8] = b"VMDM1\n";

pub fn write_distance_matrix<R: Real>(
    mut w: impl Write,
    d: &DistanceMatrix<R>,
) -> Result<(), IoError> {
    w.write_all(DMAT_MAGIC)?;
    w.write_all(format!("{} {}\n", d.rows(), d.cols()).as_bytes())?;
    for v in d.values() {
        w.write_all(&(v.to_f32().unwrap_or(f32::NAN)).to_le_bytes())?;
    }
    Ok(())
}

pub fn read_distance_matrix<R: Real>(mut r: impl Read) -> Result<DistanceMatrix<R>, IoError> {
    let (rows, cols) = read_binary_header(&mut r, DMAT_MAGIC, "distance matrix")?;
    let values = read_f32_payload::<R>(&mut r, rows * cols)?;
    Ok(DistanceMatrix::new(rows, cols, values)?)
}

pub fn write_distance_matrix_file<R: Real>(
    path: impl AsRef<Path>,
    d: &DistanceMatrix<R>,
) -> Result<(), IoError> {
    write_distance_matrix(std::io::BufWriter::new(std::fs::File::create(path)?), d)
}

pub fn read_distance_matrix_file<R: Real>(
    path: impl AsRef<Path>,
) -> Result<DistanceMatrix<R>, IoError> {
    read_distance_matrix(std::io::BufReader::new(std::fs::File::open(path)?))
}

// ---------------------------------------------------------------------------
// depth grid (binary)
// ---------------------------------------------------------------------------

pub const GRID_MAGIC: &[u8] = b"VMGRID1\n";

pub fn write_depth_grid<R: Real>(mut w: impl Write, g: &DepthGrid<R>) -> Result<(), IoError> {
    w.write_all(GRID_MAGIC)?;
    w.write_all(format!("{} {}\n", g.rows(), g.cols()).as_bytes())?;
    for v in g.values() {
        w.write_all(&(v.to_f32().unwrap_or(f32::NAN)).to_le_bytes())?;
    }
    Ok(())
}

pub fn read_depth_grid<R: Real>(mut r: impl Read) -> Result<DepthGrid<R>, IoError> {
    let (rows, cols) = read_binary_header(&mut r, GRID_MAGIC, "depth grid")?;
    let values = read_f32_payload::<R>(&mut r, rows * cols)?;
    Ok(DepthGrid::new(rows, cols, values)?)
}

pub fn read_depth_grid_file<R: Real>(path: impl AsRef<Path>) -> Result<DepthGrid<R>, IoError> {
    read_depth_grid(std::io::BufReader::new(std::fs::File::open(path)?))
}

fn read_binary_header(
    r: &mut impl Read,
    magic: &[u8],
    what: &str,
) -> Result<(usize, usize), IoError> {
    let mut got = vec![0u8; magic.len()];
    r.read_exact(&mut got)?;
    if got != magic {
        return Err(IoError::Format(format!(
            "bad {what} magic: expected {:?}",
            String::from_utf8_lossy(magic).trim_end()
        )));
    }
    let mut dims_line = Vec::new();
    loop {
        let mut byte = [0u8; 1];
        r.read_exact(&mut byte)?;
        if byte[0] == b'\n' {
            break;
        }
        dims_line.push(byte[0]);
        if dims_line.len() > 64 {
            return Err(IoError::Format(format!("{what} dimension header too long")));
        }
    }
    let text = String::from_utf8_lossy(&dims_line);
    let mut parts = text.split_whitespace();
    let rows: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| IoError::Format(format!("bad {what} dimensions `{text}`")))?;
    let cols: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| IoError::Format(format!("bad {what} dimensions `{text}`")))?;
    Ok((rows, cols))
}

fn read_f32_payload<R: Real>(r: &mut impl Read, count: usize) -> Result<Vec<R>, IoError> {
    let mut bytes = vec![0u8; count * 4];
    r.read_exact(&mut bytes)?;
    Ok(bytes
        .chunks_exact(4)
        .map(|c| R::from_f32(f32::from_le_bytes([c[0], c[1], c[2], c[3]])).unwrap_or_else(R::zero))
        .collect())
}

// ---------------------------------------------------------------------------
// masks (binary PGM)
// ---------------------------------------------------------------------------

pub fn write_mask_pgm(mut w: impl Write, mask: &MaskImage) -> Result<(), IoError> {
    w.write_all(format!("P5\n{} {}\n255\n", mask.cols(), mask.rows()).as_bytes())?;
    let bytes: Vec<u8> = mask
        .data()
        .iter()
        .map(|b| if *b { 255 } else { 0 })
        .collect();
    w.write_all(&bytes)?;
    Ok(())
}

pub fn read_mask_pgm(mut r: impl Read) -> Result<MaskImage, IoError> {
    let mut content = Vec::new();
    r.read_to_end(&mut content)?;
    if content.len() < 2 || &content[0..2] != b"P5" {
        return Err(IoError::Format("mask must be binary PGM (P5)".into()));
    }
    // header tokens: magic, width, height, maxval; '#' starts a comment
    let mut pos = 2usize;
    let mut tokens = Vec::new();
    while tokens.len() < 3 && pos < content.len() {
        while pos < content.len() && (content[pos] as char).is_whitespace() {
            pos += 1;
        }
        if pos < content.len() && content[pos] == b'#' {
            while pos < content.len() && content[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < content.len() && !(content[pos] as char).is_whitespace() {
            pos += 1;
        }
        tokens.push(String::from_utf8_lossy(&content[start..pos]).to_string());
    }
    if tokens.len() < 3 {
        return Err(IoError::Format("truncated PGM header".into()));
    }
    let cols: usize = tokens[0]
        .parse()
        .map_err(|_| IoError::Format("bad PGM width".into()))?;
    let rows: usize = tokens[1]
        .parse()
        .map_err(|_| IoError::Format("bad PGM height".into()))?;
    let maxval: usize = tokens[2]
        .parse()
        .map_err(|_| IoError::Format("bad PGM maxval".into()))?;
    if maxval == 0 || maxval > 255 {
        return Err(IoError::Format("PGM maxval must be in 1..=255".into()));
    }
    pos += 1; // single whitespace after maxval
    if content.len() < pos + rows * cols {
        return Err(IoError::Format("truncated PGM payload".into()));
    }
    let data: Vec<bool> = content[pos..pos + rows * cols]
        .iter()
        .map(|b| *b != 0)
        .collect();
    MaskImage::new(rows, cols, data).ok_or_else(|| IoError::Format("empty PGM dimensions".into()))
}

pub fn read_mask_pgm_file(path: impl AsRef<Path>) -> Result<MaskImage, IoError> {
    read_mask_pgm(std::fs::File::open(path)?)
}

pub fn write_mask_pgm_file(path: impl AsRef<Path>, mask: &MaskImage) -> Result<(), IoError> {
    write_mask_pgm(std::io::BufWriter::new(std::fs::File::create(path)?), mask)
}

// ---------------------------------------------------------------------------
// intrinsics (JSON document)
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct WireIntrinsics {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    width: usize,
    height: usize,
}

pub fn write_intrinsics<R: Real>(w: impl Write, intr: &CameraIntrinsics<R>) -> Result<(), IoError> {
    let f = |v: R| v.to_f64().unwrap_or(f64::NAN);
    serde_json::to_writer(
        w,
        &WireIntrinsics {
            fx: f(intr.fx),
            fy: f(intr.fy),
            cx: f(intr.cx),
            cy: f(intr.cy),
            width: intr.width,
            height: intr.height,
        },
    )?;
    Ok(())
}

pub fn read_intrinsics<R: Real>(r: impl Read) -> Result<CameraIntrinsics<R>, IoError> {
    let wire: WireIntrinsics = serde_json::from_reader(r)?;
    let c = |v: f64| R::from_f64(v).unwrap();
    Ok(CameraIntrinsics::new(
        c(wire.fx),
        c(wire.fy),
        c(wire.cx),
        c(wire.cy),
        wire.width,
        wire.height,
    )?)
}

pub fn read_intrinsics_file<R: Real>(
    path: impl AsRef<Path>,
) -> Result<CameraIntrinsics<R>, IoError> {
    read_intrinsics(std::fs::File::open(path)?)
}

// ---------------------------------------------------------------------------
// result reports (JSON documents)
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct WireDirection {
    direction: String,
    resisted: bool,
}

#[derive(Serialize)]
struct WireContact {
    point: [f64; 3],
    normal: [f64; 3],
}

#[derive(Serialize)]
struct WireStabilityReport {
    success: bool,
    directions: Vec<WireDirection>,
    contacts: Vec<WireContact>,
    friction: f64,
    disturbance_force_newtons: f64,
    protocol: WireProtocol,
}

#[derive(Serialize)]
struct WireProtocol {
    sim_steps: u32,
    displacement_threshold_m: f64,
}

pub fn write_stability_report<R: Real>(
    w: impl Write,
    report: &StabilityReport<R>,
) -> Result<(), IoError> {
    let f = |v: R| v.to_f64().unwrap_or(f64::NAN);
    let v3 = |v: Vec3<R>| [f(v.x), f(v.y), f(v.z)];
    let wire = WireStabilityReport {
        success: report.success,
        directions: report
            .directions
            .iter()
            .map(|d| WireDirection {
                direction: d.label.to_string(),
                resisted: d.resisted,
            })
            .collect(),
        contacts: report
            .contacts
            .iter()
            .map(|c| WireContact {
                point: v3(c.point),
                normal: v3(c.normal),
            })
            .collect(),
        friction: f(report.friction),
        disturbance_force_newtons: f(report.disturbance_force),
        protocol: WireProtocol {
            sim_steps: report.protocol.sim_steps,
            displacement_threshold_m: report.protocol.displacement_threshold_m,
        },
    };
    serde_json::to_writer_pretty(w, &wire)?;
    Ok(())
}

#[derive(Serialize)]
struct WireGraspResult {
    wrist: WirePose,
    joints: Vec<f64>,
    fit_rms: f64,
    point_residuals: Vec<f64>,
    multilateration_residuals: Option<Vec<f64>>,
}

pub fn write_grasp_result<R: Real>(w: impl Write, result: &GraspResult<R>) -> Result<(), IoError> {
    let f = |v: &R| v.to_f64().unwrap_or(f64::NAN);
    let wire = WireGraspResult {
        wrist: pose_to_wire(&result.wrist_pose),
        joints: result.config.joint_values.iter().map(f).collect(),
        fit_rms: f(&result.fit_rms),
        point_residuals: result.point_residuals.iter().map(f).collect(),
        multilateration_residuals: result
            .multilateration_residuals
            .as_ref()
            .map(|r| r.iter().map(f).collect()),
    };
    serde_json::to_writer_pretty(w, &wire)?;
    Ok(())
}

#[derive(Serialize)]
struct WireFkOutput {
    links: BTreeMap<String, WirePose>,
    limit_warnings: Vec<String>,
}

pub fn write_fk_output<R: Real>(
    w: impl Write,
    poses: &BTreeMap<String, RigidTransform<R>>,
    violations: &[LimitViolation<R>],
) -> Result<(), IoError> {
    let wire = WireFkOutput {
        links: poses
            .iter()
            .map(|(k, v)| (k.clone(), pose_to_wire(v)))
            .collect(),
        limit_warnings: violations
            .iter()
            .map(|v| {
                format!(
                    "joint `{}` value {} outside [{}, {}]",
                    v.joint,
                    v.value.to_f64().unwrap_or(f64::NAN),
                    v.lower.to_f64().unwrap_or(f64::NAN),
                    v.upper.to_f64().unwrap_or(f64::NAN)
                )
            })
            .collect(),
    };
    serde_json::to_writer_pretty(w, &wire)?;
    Ok(())
}

#[derive(Serialize)]
struct WireScaleSearch {
    best_scale: f64,
    best_index: usize,
    candidates: Vec<f64>,
    errors: Vec<f64>,
}

pub fn write_scale_search<R: Real>(
    w: impl Write,
    candidates: &[R],
    result: &ScaleSearchResult<R>,
) -> Result<(), IoError> {
    let f = |v: &R| v.to_f64().unwrap_or(f64::NAN);
    serde_json::to_writer_pretty(
        w,
        &WireScaleSearch {
            best_scale: f(&result.best_scale),
            best_index: result.best_index,
            candidates: candidates.iter().map(f).collect(),
            errors: result.errors.iter().map(f).collect(),
        },
    )?;
    Ok(())
}

// ---------------------------------------------------------------------------
// pose lines (JSON lines of {"q": [w,x,y,z], "t": [x,y,z]})
// ---------------------------------------------------------------------------

pub fn write_pose_lines<R: Real>(
    mut w: impl Write,
    poses: &[RigidTransform<R>],
) -> Result<(), IoError> {
    for p in poses {
        writeln!(w, "{}", serde_json::to_string(&pose_to_wire(p))?)?;
    }
    Ok(())
}

pub fn read_pose_lines<R: Real>(r: impl Read) -> Result<Vec<RigidTransform<R>>, IoError> {
    let reader = BufReader::new(r);
    let mut poses = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let wire: WirePose = serde_json::from_str(&line)?;
        poses.push(wire_to_pose(&wire)?);
    }
    Ok(poses)
}

pub fn read_pose_lines_file<R: Real>(
    path: impl AsRef<Path>,
) -> Result<Vec<RigidTransform<R>>, IoError> {
    read_pose_lines(std::fs::File::open(path)?)
}

/// Read the configuration part of a grasp-result JSON (`wrist` + `joints`).
pub fn read_grasp_config<R: Real>(r: impl Read) -> Result<RobotConfig<R>, IoError> {
    #[derive(Deserialize)]
    struct WireGraspConfig {
        wrist: WirePose,
        joints: Vec<f64>,
    }
    let wire: WireGraspConfig = serde_json::from_reader(r)?;
    Ok(RobotConfig::new(
        wire_to_pose(&wire.wrist)?,
        wire.joints
            .iter()
            .map(|v| R::from_f64(*v).unwrap())
            .collect(),
    ))
}

pub fn read_grasp_config_file<R: Real>(path: impl AsRef<Path>) -> Result<RobotConfig<R>, IoError> {
    read_grasp_config(std::fs::File::open(path)?)
}

// ---------------------------------------------------------------------------
// training set export (obs.json / actions.json)
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
pub struct WireConfigRecord {
    pub wrist: WirePoseRecord,
    pub joints: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
pub struct WirePoseRecord {
    pub q: [f64; 4],
    pub t: [f64; 3],
}

/// Initial observation of one exported demonstration: the robot cloud at
/// the grasp configuration, per-object clouds at the grasp-frame poses, and
/// the proprioceptive grasp configuration.
#[derive(Serialize, Deserialize)]
pub struct WireObservation {
    pub joint_names: Vec<String>,
    pub q_grasp: WireConfigRecord,
    /// Flat `[x, y, z, ...]` robot points.
    pub robot_points: Vec<f64>,
    /// Flat `[x, y, z, ...]` points per object id.
    pub objects: BTreeMap<String, Vec<f64>>,
}

/// One policy action: configuration delta between consecutive frames. The
/// wrist rotation delta is a rotation vector `log(R_next * R_cur^-1)`;
/// integration applies it as a left multiply.
#[derive(Serialize, Deserialize)]
pub struct WireAction {
    pub translation: [f64; 3],
    pub rotation: [f64; 3],
    pub joints: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
pub struct WireActions {
    /// Frame index the first action applies to (the grasp-stable frame).
    pub frame_start: usize,
    pub actions: Vec<WireAction>,
}

pub fn write_observation(w: impl Write, obs: &WireObservation) -> Result<(), IoError> {
    serde_json::to_writer(w, obs)?;
    Ok(())
}

pub fn read_observation(r: impl Read) -> Result<WireObservation, IoError> {
    Ok(serde_json::from_reader(r)?)
}

pub fn write_actions(w: impl Write, actions: &WireActions) -> Result<(), IoError> {
    serde_json::to_writer(w, actions)?;
    Ok(())
}

pub fn read_actions(r: impl Read) -> Result<WireActions, IoError> {
    Ok(serde_json::from_reader(r)?)
}
