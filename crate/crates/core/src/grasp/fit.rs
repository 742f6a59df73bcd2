//! Grasp-configuration fitting: rigid initialization by the orthogonal
//! Procrustes solution, then damped least-squares over the full
//! configuration against the placed point cloud.

use crate::geom::{PointCloud, Quat, RigidTransform, Vec3};
use crate::linalg::{mat3_det, mat3_mul, mat3_transpose, solve_spd, svd3};
use crate::robot::{apply_increment, CanonicalCloud, JointKind, RobotConfig, RobotModel};
use crate::scalar::{real, Real};

use super::{multilaterate_points, DistanceMatrix, GraspError};

/// Least-squares rigid transform `T` minimizing `sum ||T(src_i) - dst_i||^2`
/// via SVD of the cross-covariance with determinant correction.
pub fn kabsch<R: Real>(src: &[Vec3<R>], dst: &[Vec3<R>]) -> Result<RigidTransform<R>, GraspError> {
    if src.len() != dst.len() || src.is_empty() {
        return Err(GraspError::CloudSizeMismatch {
            placed: dst.len(),
            canonical: src.len(),
        });
    }
    let n = R::from_usize(src.len()).unwrap();
    let mut src_mean = Vec3::zero();
    let mut dst_mean = Vec3::zero();
    for (s, d) in src.iter().zip(dst) {
        src_mean = src_mean + *s;
        dst_mean = dst_mean + *d;
    }
    src_mean = src_mean / n;
    dst_mean = dst_mean / n;
    // cross covariance H = sum (src - mean)(dst - mean)^T
    let mut h = [[R::zero(); 3]; 3];
    for (s, d) in src.iter().zip(dst) {
        let a = *s - src_mean;
        let b = *d - dst_mean;
        let av = [a.x, a.y, a.z];
        let bv = [b.x, b.y, b.z];
        for i in 0..3 {
            for j in 0..3 {
                h[i][j] += av[i] * bv[j];
            }
        }
    }
    let (u, s, v) = svd3(h);
    // collinear clouds leave the rotation about the axis unobservable
    if !(s[1] > s[0] * real::<R>(1e-9)) {
        return Err(GraspError::RankDeficientFit);
    }
    // R = V diag(1, 1, det(V U^T)) U^T
    let vut = mat3_mul(v, mat3_transpose(u));
    let det = mat3_det(vut);
    let mut v_fixed = v;
    if det < R::zero() {
        for row in v_fixed.iter_mut() {
            row[2] = -row[2];
        }
    }
    let rot_m = mat3_mul(v_fixed, mat3_transpose(u));
    let rotation = Quat::from_matrix(rot_m);
    let translation = dst_mean - rotation.rotate(src_mean);
    Ok(RigidTransform::new(rotation, translation))
}

/// Recovered grasp: wrist pose, configuration, the placed cloud it was
/// fitted to, and residual diagnostics.
#[derive(Clone, Debug)]
pub struct GraspResult<R> {
    pub wrist_pose: RigidTransform<R>,
    pub config: RobotConfig<R>,
    pub placed_cloud: PointCloud<R>,
    /// Distance between each fitted point and its placed counterpart.
    pub point_residuals: Vec<R>,
    /// RMS of `point_residuals`.
    pub fit_rms: R,
    /// Per-point multilateration residuals when the placed cloud came from a
    /// distance matrix.
    pub multilateration_residuals: Option<Vec<R>>,
}

#[derive(Clone, Copy, Debug)]
pub struct FitOptions<R> {
    pub max_iters: usize,
    pub step_tol: R,
    pub init_damping: R,
}

impl<R: Real> Default for FitOptions<R> {
    fn default() -> Self {
        Self {
            max_iters: 100,
            step_tol: real(1e-10),
            init_damping: real(1e-6),
        }
    }
}

/// Fit a grasp configuration to a placed robot point cloud with index
/// correspondence to the canonical cloud. Stage 1 fits a rigid transform
/// (Procrustes) to initialize the wrist; stage 2 refines all degrees of
/// freedom with damped least squares through forward kinematics.
pub fn fit_grasp_config<R: Real>(
    model: &RobotModel<R>,
    placed: &PointCloud<R>,
    canonical: &CanonicalCloud<R>,
    q_init: &RobotConfig<R>,
    opts: &FitOptions<R>,
) -> Result<GraspResult<R>, GraspError> {
    if placed.len() != canonical.len() {
        return Err(GraspError::CloudSizeMismatch {
            placed: placed.len(),
            canonical: canonical.len(),
        });
    }
    // stage 1: canonical points at the initial joints with an identity
    // wrist; wrist equivariance makes the rigid fit the wrist estimate
    let mut joints = q_init.joint_values.clone();
    model.clamp_joints(&mut joints);
    let q_identity = RobotConfig::new(RigidTransform::identity(), joints.clone());
    let at_identity = canonical.at_config(model, &q_identity)?;
    let wrist0 = kabsch(&at_identity.points, &placed.points)?;
    let mut q = RobotConfig::new(wrist0, joints);

    // stage 2: damped least squares on sum ||p_i(q) - placed_i||^2
    let dim = model.config_dim();
    let slot_kinds: Vec<JointKind> = model
        .joints()
        .iter()
        .filter(|j| j.kind != JointKind::Fixed)
        .map(|j| j.kind)
        .collect();
    let objective = |q: &RobotConfig<R>| -> Result<R, GraspError> {
        let pts = canonical.at_config(model, q)?;
        Ok(pts
            .points
            .iter()
            .zip(&placed.points)
            .map(|(a, b)| a.distance_squared(*b))
            .sum())
    };
    let mut current = objective(&q)?;
    let mut damping = opts.init_damping;
    for _ in 0..opts.max_iters {
        let (poses, frames) = model.fk_with_joint_frames(&q)?;
        let mut h = vec![R::zero(); dim * dim];
        let mut g = vec![R::zero(); dim];
        let mut jrow = vec![R::zero(); dim];
        for (k, local) in canonical.local.iter().enumerate() {
            let link = canonical.links[k];
            let x = poses[link].apply(*local);
            let resid = x - placed.points[k];
            let rel = x - q.wrist.translation;
            // three rows share the same sparsity; accumulate per axis
            for axis in 0..3 {
                for v in jrow.iter_mut() {
                    *v = R::zero();
                }
                jrow[axis] = R::one();
                // wrist rotation columns: e_w x (x - t_wrist)
                for w in 0..3 {
                    let ew = match w {
                        0 => Vec3::new(R::one(), R::zero(), R::zero()),
                        1 => Vec3::new(R::zero(), R::one(), R::zero()),
                        _ => Vec3::new(R::zero(), R::zero(), R::one()),
                    };
                    let col = ew.cross(rel);
                    jrow[3 + w] = [col.x, col.y, col.z][axis];
                }
                for &slot in model.path_slots(link) {
                    let (ax, origin) = frames[slot];
                    let dv = match slot_kinds[slot] {
                        JointKind::Prismatic => ax,
                        _ => ax.cross(x - origin),
                    };
                    jrow[6 + slot] = [dv.x, dv.y, dv.z][axis];
                }
                let r_axis = [resid.x, resid.y, resid.z][axis];
                for a in 0..dim {
                    if jrow[a] == R::zero() {
                        continue;
                    }
                    g[a] += jrow[a] * r_axis;
                    for b in a..dim {
                        h[a * dim + b] += jrow[a] * jrow[b];
                    }
                }
            }
        }
        for a in 0..dim {
            for b in 0..a {
                h[a * dim + b] = h[b * dim + a];
            }
        }
        let mut stepped = false;
        for _ in 0..16 {
            let mut hd = h.clone();
            for a in 0..dim {
                hd[a * dim + a] += damping;
            }
            let neg_g: Vec<R> = g.iter().map(|v| -*v).collect();
            let Some(delta) = solve_spd(&hd, &neg_g, dim) else {
                damping *= real::<R>(10.0);
                continue;
            };
            let trial = apply_increment(model, &q, &delta, true);
            let trial_obj = objective(&trial)?;
            if trial_obj < current {
                let step_norm = delta.iter().map(|d| *d * *d).sum::<R>().sqrt();
                q = trial;
                current = trial_obj;
                damping = (damping / real::<R>(3.0)).max(real(1e-12));
                stepped = true;
                if step_norm < opts.step_tol {
                    stepped = false; // converged
                }
                break;
            }
            damping *= real::<R>(10.0);
        }
        if !stepped {
            break;
        }
    }

    let fitted = canonical.at_config(model, &q)?;
    let point_residuals: Vec<R> = fitted
        .points
        .iter()
        .zip(&placed.points)
        .map(|(a, b)| a.distance(*b))
        .collect();
    let fit_rms = (point_residuals.iter().map(|r| *r * *r).sum::<R>()
        / R::from_usize(point_residuals.len().max(1)).unwrap())
    .sqrt();
    Ok(GraspResult {
        wrist_pose: q.wrist,
        config: q,
        placed_cloud: placed.clone(),
        point_residuals,
        fit_rms,
        multilateration_residuals: None,
    })
}

/// Full grasp recovery: multilaterate the robot points from the distance
/// matrix, then fit the configuration.
pub fn solve_grasp<R: Real>(
    model: &RobotModel<R>,
    distances: &DistanceMatrix<R>,
    object_points: &PointCloud<R>,
    canonical: &CanonicalCloud<R>,
    q_init: &RobotConfig<R>,
    opts: &FitOptions<R>,
) -> Result<GraspResult<R>, GraspError> {
    let (placed, residuals) = multilaterate_points(distances, object_points)?;
    let mut result = fit_grasp_config(model, &placed, canonical, q_init, opts)?;
    result.multilateration_residuals = Some(residuals);
    Ok(result)
}
