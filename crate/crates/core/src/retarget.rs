//! Keypoint-based retargeting: map human hand joint positions to robot hand
//! configurations by minimizing weighted correspondence error with a damped
//! least-squares solver, per frame with optional temporal regularization.

use thiserror::Error;

use crate::geom::{RigidTransform, Vec3};
use crate::linalg::solve_spd;
use crate::robot::{JointKind, RobotConfig, RobotError, RobotModel};
use crate::scalar::{real, Real};
use crate::trajectory::{Frame, Trajectory, TrajectoryError};

/// Number of hand keypoints per frame: wrist plus four per finger.
pub const KEYPOINT_COUNT: usize = 21;
/// Keypoint index of the wrist.
pub const WRIST_KEYPOINT: usize = 0;
/// Keypoint indices of the five fingertips.
pub const FINGERTIP_KEYPOINTS: [usize; 5] = [4, 8, 12, 16, 20];

#[derive(Debug, Error)]
pub enum RetargetError {
    #[error("keypoint frame {frame} has {got} joints, expected {expected}")]
    BadKeypointCount {
        frame: usize,
        expected: usize,
        got: usize,
    },
    #[error("keypoint timestamps must be strictly increasing (frame {frame})")]
    NonMonotonicTime { frame: usize },
    #[error("mapping entry {entry}: weight must be nonnegative")]
    NegativeWeight { entry: usize },
    #[error("mapping entry {entry}: keypoint index {index} out of range")]
    KeypointOutOfRange { entry: usize, index: usize },
    #[error("mapping must cover the wrist keypoint and at least three fingertips")]
    InsufficientCoverage,
    #[error("mapping references unknown link `{0}`")]
    UnknownLink(String),
    #[error("no keypoint frames to retarget")]
    Empty,
    #[error(transparent)]
    Robot(#[from] RobotError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
}

/// Reconstructed hand keypoints for one video frame.
#[derive(Clone, Debug, PartialEq)]
pub struct KeypointFrame<R> {
    pub time: R,
    pub joints: Vec<Vec3<R>>,
}

/// A time-ordered sequence of 21-keypoint hand observations in a common
/// metric frame.
#[derive(Clone, Debug, PartialEq)]
pub struct HandKeypoints<R> {
    pub frames: Vec<KeypointFrame<R>>,
}

impl<R: Real> HandKeypoints<R> {
    pub fn new(frames: Vec<KeypointFrame<R>>) -> Result<Self, RetargetError> {
        for (i, f) in frames.iter().enumerate() {
            if f.joints.len() != KEYPOINT_COUNT {
                return Err(RetargetError::BadKeypointCount {
                    frame: i,
                    expected: KEYPOINT_COUNT,
                    got: f.joints.len(),
                });
            }
            if i > 0 && !(f.time > frames[i - 1].time) {
                return Err(RetargetError::NonMonotonicTime { frame: i });
            }
        }
        Ok(Self { frames })
    }
}

/// One keypoint correspondence: a point fixed in a robot link frame matched
/// against a human keypoint index.
#[derive(Clone, Debug, PartialEq)]
pub struct MappingEntry<R> {
    pub link: String,
    pub offset: Vec3<R>,
    pub keypoint: usize,
    pub weight: R,
}

/// The set of link-to-keypoint correspondences driving retargeting. Hand
/// mappings are expected to cover the wrist and at least three fingertips
/// ([`KeypointMapping::validate_coverage`], enforced when loading mapping
/// files); synthetic rigs may use any correspondences.
#[derive(Clone, Debug, PartialEq)]
pub struct KeypointMapping<R> {
    entries: Vec<MappingEntry<R>>,
}

impl<R: Real> KeypointMapping<R> {
    pub fn new(entries: Vec<MappingEntry<R>>) -> Result<Self, RetargetError> {
        for (i, e) in entries.iter().enumerate() {
            if e.weight < R::zero() {
                return Err(RetargetError::NegativeWeight { entry: i });
            }
            if e.keypoint >= KEYPOINT_COUNT {
                return Err(RetargetError::KeypointOutOfRange {
                    entry: i,
                    index: e.keypoint,
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[MappingEntry<R>] {
        &self.entries
    }

    /// Check the hand-mapping invariant: the wrist keypoint and at least
    /// three fingertip keypoints are covered.
    pub fn validate_coverage(&self) -> Result<(), RetargetError> {
        let has_wrist = self.entries.iter().any(|e| e.keypoint == WRIST_KEYPOINT);
        let fingertips = FINGERTIP_KEYPOINTS
            .iter()
            .filter(|&&k| self.entries.iter().any(|e| e.keypoint == k))
            .count();
        if has_wrist && fingertips >= 3 {
            Ok(())
        } else {
            Err(RetargetError::InsufficientCoverage)
        }
    }

    /// Default mapping: root link to the wrist keypoint, leaf links in
    /// declaration order to the fingertip keypoints, all at weight 1.
    /// `None` when the model has fewer than 3 or more than 5 leaves.
    pub fn default_for_model(model: &RobotModel<R>) -> Option<Self> {
        let leaves = model.leaf_links();
        if !(3..=5).contains(&leaves.len()) {
            return None;
        }
        let mut entries = vec![MappingEntry {
            link: model.links()[model.root_link()].name.clone(),
            offset: Vec3::zero(),
            keypoint: WRIST_KEYPOINT,
            weight: R::one(),
        }];
        for (leaf, keypoint) in leaves.iter().zip(FINGERTIP_KEYPOINTS) {
            entries.push(MappingEntry {
                link: model.links()[*leaf].name.clone(),
                offset: Vec3::zero(),
                keypoint,
                weight: R::one(),
            });
        }
        Some(Self { entries })
    }

    fn resolve(
        &self,
        model: &RobotModel<R>,
    ) -> Result<Vec<(usize, Vec3<R>, usize, R)>, RetargetError> {
        self.entries
            .iter()
            .map(|e| {
                let link = model
                    .link_index(&e.link)
                    .ok_or_else(|| RetargetError::UnknownLink(e.link.clone()))?;
                Ok((link, e.offset, e.keypoint, e.weight))
            })
            .collect()
    }
}

/// Solver parameters: at most 200 iterations, stop on step norm below
/// `step_tol` or on five consecutive relative residual decreases below
/// `rel_decrease_tol`.
#[derive(Clone, Copy, Debug)]
pub struct RetargetOptions<R> {
    pub max_iters: usize,
    pub step_tol: R,
    pub rel_decrease_tol: R,
    pub init_damping: R,
}

impl<R: Real> Default for RetargetOptions<R> {
    fn default() -> Self {
        Self {
            max_iters: 200,
            step_tol: real(1e-8),
            rel_decrease_tol: real(1e-10),
            init_damping: real(1e-3),
        }
    }
}

/// Result of a single-frame solve. Non-convergence within the iteration
/// budget is flagged, not fatal.
#[derive(Clone, Debug)]
pub struct RetargetSolution<R> {
    pub config: RobotConfig<R>,
    /// Final objective value (weighted sum of squared keypoint errors).
    pub residual: R,
    pub iterations: usize,
    pub converged: bool,
}

/// Per-frame solve statistics for a trajectory retarget.
#[derive(Clone, Debug, Default)]
pub struct RetargetReport<R> {
    pub frames: Vec<FrameStats<R>>,
}

#[derive(Clone, Debug)]
pub struct FrameStats<R> {
    pub residual: R,
    pub iterations: usize,
    pub converged: bool,
}

/// The least-squares problem for one frame: weighted keypoint residuals and
/// their analytic Jacobian over the `[wrist translation, wrist rotation
/// increment, joint values]` parameterization. Public so gradient checks can
/// compare against finite differences.
pub struct KeypointProblem<'a, R> {
    model: &'a RobotModel<R>,
    /// `(link, offset, keypoint, weight)` with the link resolved to an index.
    entries: Vec<(usize, Vec3<R>, usize, R)>,
    /// Joint kind per actuated slot, for Jacobian columns.
    slot_kinds: Vec<JointKind>,
    human: Vec<Vec3<R>>,
    /// Temporal anchor: `(previous config, sqrt(lambda))`.
    smooth: Option<(RobotConfig<R>, R)>,
}

impl<'a, R: Real> KeypointProblem<'a, R> {
    pub fn new(
        model: &'a RobotModel<R>,
        mapping: &KeypointMapping<R>,
        human: &[Vec3<R>],
    ) -> Result<Self, RetargetError> {
        if human.len() != KEYPOINT_COUNT {
            return Err(RetargetError::BadKeypointCount {
                frame: 0,
                expected: KEYPOINT_COUNT,
                got: human.len(),
            });
        }
        let slot_kinds = model
            .joints()
            .iter()
            .filter(|j| j.kind != JointKind::Fixed)
            .map(|j| j.kind)
            .collect();
        Ok(Self {
            model,
            entries: mapping.resolve(model)?,
            slot_kinds,
            human: human.to_vec(),
            smooth: None,
        })
    }

    pub fn with_smoothness(mut self, previous: RobotConfig<R>, lambda: R) -> Self {
        if lambda > R::zero() {
            self.smooth = Some((previous, lambda.sqrt()));
        }
        self
    }

    pub fn residual_len(&self) -> usize {
        3 * self.entries.len()
            + if self.smooth.is_some() {
                6 + self.model.dof_count()
            } else {
                0
            }
    }

    pub fn param_len(&self) -> usize {
        self.model.config_dim()
    }

    /// Keypoint part of the objective only (no temporal term).
    pub fn keypoint_objective(&self, q: &RobotConfig<R>) -> Result<R, RetargetError> {
        let poses = self.model.fk(q)?;
        let mut total = R::zero();
        for &(link, offset, keypoint, weight) in &self.entries {
            let x = poses[link].apply(offset);
            total += weight * x.distance_squared(self.human[keypoint]);
        }
        Ok(total)
    }

    /// Full objective: keypoint error plus the temporal term.
    pub fn objective(&self, q: &RobotConfig<R>) -> Result<R, RetargetError> {
        let mut total = self.keypoint_objective(q)?;
        if let Some((prev, sl)) = &self.smooth {
            let lambda = *sl * *sl;
            total += lambda * q.wrist.translation.distance_squared(prev.wrist.translation);
            let dr = prev
                .wrist
                .rotation
                .conjugate()
                .mul(q.wrist.rotation)
                .to_rotation_vector();
            total += lambda * dr.norm_squared();
            for (a, b) in q.joint_values.iter().zip(&prev.joint_values) {
                total += lambda * (*a - *b) * (*a - *b);
            }
        }
        Ok(total)
    }

    /// Residual vector at `q`; `objective = ||residuals||^2`.
    pub fn residuals(&self, q: &RobotConfig<R>) -> Result<Vec<R>, RetargetError> {
        let poses = self.model.fk(q)?;
        let mut r = Vec::with_capacity(self.residual_len());
        for &(link, offset, keypoint, weight) in &self.entries {
            let sw = weight.sqrt();
            let x = poses[link].apply(offset);
            let d = x - self.human[keypoint];
            r.push(sw * d.x);
            r.push(sw * d.y);
            r.push(sw * d.z);
        }
        if let Some((prev, sl)) = &self.smooth {
            let dt = q.wrist.translation - prev.wrist.translation;
            r.extend([*sl * dt.x, *sl * dt.y, *sl * dt.z]);
            let dr = prev
                .wrist
                .rotation
                .conjugate()
                .mul(q.wrist.rotation)
                .to_rotation_vector();
            r.extend([*sl * dr.x, *sl * dr.y, *sl * dr.z]);
            for (a, b) in q.joint_values.iter().zip(&prev.joint_values) {
                r.push(*sl * (*a - *b));
            }
        }
        Ok(r)
    }

    /// Row-major Jacobian of the keypoint residuals; temporal rows use the
    /// identity on the parameter increments. Columns: wrist translation
    /// delta (3), wrist rotation increment about the wrist origin (3), joint
    /// deltas (n).
    pub fn jacobian(&self, q: &RobotConfig<R>) -> Result<Vec<R>, RetargetError> {
        let (poses, frames) = self.model.fk_with_joint_frames(q)?;
        let cols = self.param_len();
        let rows = self.residual_len();
        let mut j = vec![R::zero(); rows * cols];
        for (e, &(link, offset, _keypoint, weight)) in self.entries.iter().enumerate() {
            let sw = weight.sqrt();
            let x = poses[link].apply(offset);
            let row0 = 3 * e;
            // wrist translation: identity block
            for axis in 0..3 {
                j[(row0 + axis) * cols + axis] = sw;
            }
            // wrist rotation increment about the wrist position:
            // dx/dw_k = e_k x (x - t_wrist)
            let rel = x - q.wrist.translation;
            let col_vecs = [
                Vec3::new(R::one(), R::zero(), R::zero()).cross(rel),
                Vec3::new(R::zero(), R::one(), R::zero()).cross(rel),
                Vec3::new(R::zero(), R::zero(), R::one()).cross(rel),
            ];
            for (k, cv) in col_vecs.iter().enumerate() {
                j[row0 * cols + 3 + k] = sw * cv.x;
                j[(row0 + 1) * cols + 3 + k] = sw * cv.y;
                j[(row0 + 2) * cols + 3 + k] = sw * cv.z;
            }
            // joints on this link's root path
            for &slot in self.model.path_slots(link) {
                let (axis, origin) = frames[slot];
                let dv = match self.slot_kinds[slot] {
                    JointKind::Prismatic => axis,
                    _ => axis.cross(x - origin),
                };
                let col = 6 + slot;
                j[row0 * cols + col] = sw * dv.x;
                j[(row0 + 1) * cols + col] = sw * dv.y;
                j[(row0 + 2) * cols + col] = sw * dv.z;
            }
        }
        if let Some((_, sl)) = &self.smooth {
            let row0 = 3 * self.entries.len();
            for k in 0..cols {
                j[(row0 + k) * cols + k] = *sl;
            }
        }
        Ok(j)
    }
}

fn solve_problem<R: Real>(
    model: &RobotModel<R>,
    problem: &KeypointProblem<R>,
    q_init: &RobotConfig<R>,
    opts: &RetargetOptions<R>,
) -> Result<RetargetSolution<R>, RetargetError> {
    let mut q = q_init.clone();
    model.clamp_joints(&mut q.joint_values);
    let dim = problem.param_len();
    let mut objective = problem.objective(&q)?;
    let mut damping = opts.init_damping;
    let mut tiny_decreases = 0usize;
    let mut converged = false;
    let mut iterations = 0usize;

    'outer: for iter in 0..opts.max_iters {
        iterations = iter + 1;
        let r = problem.residuals(&q)?;
        let j = problem.jacobian(&q)?;
        let rows = r.len();
        // normal equations: H = J^T J, g = J^T r
        let mut h = vec![R::zero(); dim * dim];
        let mut g = vec![R::zero(); dim];
        for row in 0..rows {
            let jr = &j[row * dim..(row + 1) * dim];
            for a in 0..dim {
                if jr[a] == R::zero() {
                    continue;
                }
                g[a] += jr[a] * r[row];
                for b in a..dim {
                    h[a * dim + b] += jr[a] * jr[b];
                }
            }
        }
        for a in 0..dim {
            for b in 0..a {
                h[a * dim + b] = h[b * dim + a];
            }
        }

        let mut accepted = false;
        for _ in 0..24 {
            let mut hd = h.clone();
            for a in 0..dim {
                hd[a * dim + a] += damping;
            }
            let neg_g: Vec<R> = g.iter().map(|v| -*v).collect();
            let Some(delta) = solve_spd(&hd, &neg_g, dim) else {
                damping *= real::<R>(10.0);
                continue;
            };
            let trial = crate::robot::apply_increment(model, &q, &delta, true);
            let trial_obj = problem.objective(&trial)?;
            if trial_obj < objective {
                let step_norm = delta.iter().map(|d| *d * *d).sum::<R>().sqrt();
                let rel_decrease = (objective - trial_obj) / objective.max(R::min_positive_value());
                q = trial;
                objective = trial_obj;
                damping = (damping / real::<R>(3.0)).max(real(1e-12));
                accepted = true;
                if step_norm < opts.step_tol {
                    converged = true;
                    break 'outer;
                }
                if rel_decrease < opts.rel_decrease_tol {
                    tiny_decreases += 1;
                    if tiny_decreases >= 5 {
                        converged = true;
                        break 'outer;
                    }
                } else {
                    tiny_decreases = 0;
                }
                break;
            }
            damping *= real::<R>(10.0);
        }
        if !accepted {
            // no descent direction at any damping: a (possibly constrained)
            // local minimum
            converged = true;
            break;
        }
    }

    Ok(RetargetSolution {
        config: q,
        residual: objective,
        iterations,
        converged,
    })
}

/// Solve one frame: find the configuration whose mapped link keypoints best
/// match the human keypoints, starting from `q_init`. Joint limits are
/// enforced by clamping; the returned objective never exceeds the initial
/// one.
pub fn retarget_frame<R: Real>(
    model: &RobotModel<R>,
    mapping: &KeypointMapping<R>,
    human: &[Vec3<R>],
    q_init: &RobotConfig<R>,
    opts: &RetargetOptions<R>,
) -> Result<RetargetSolution<R>, RetargetError> {
    let problem = KeypointProblem::new(model, mapping, human)?;
    solve_problem(model, &problem, q_init, opts)
}

/// Retarget a keypoint sequence. Frame 0 starts from the zero configuration
/// with the wrist at the human wrist point; every later frame warm-starts
/// from the previous solution. With `lambda > 0` a temporal term
/// `lambda * ||q_t - q_{t-1}||^2` is added to the objective.
pub fn retarget_trajectory<R: Real>(
    model: &RobotModel<R>,
    mapping: &KeypointMapping<R>,
    keypoints: &HandKeypoints<R>,
    lambda: R,
    opts: &RetargetOptions<R>,
) -> Result<(Trajectory<R>, RetargetReport<R>), RetargetError> {
    if keypoints.frames.is_empty() {
        return Err(RetargetError::Empty);
    }
    let mut report = RetargetReport::default();
    let mut frames = Vec::with_capacity(keypoints.frames.len());
    let mut previous: Option<RobotConfig<R>> = None;
    for kf in &keypoints.frames {
        let init = match &previous {
            Some(prev) => prev.clone(),
            None => {
                let mut q = RobotConfig::zero(model.dof_count());
                model.clamp_joints(&mut q.joint_values);
                q.wrist = RigidTransform::from_translation(kf.joints[WRIST_KEYPOINT]);
                q
            }
        };
        let mut problem = KeypointProblem::new(model, mapping, &kf.joints)?;
        if let Some(prev) = &previous {
            problem = problem.with_smoothness(prev.clone(), lambda);
        }
        let solution = solve_problem(model, &problem, &init, opts)?;
        report.frames.push(FrameStats {
            residual: solution.residual,
            iterations: solution.iterations,
            converged: solution.converged,
        });
        previous = Some(solution.config.clone());
        frames.push(Frame {
            time: kf.time,
            config: solution.config,
            objects: std::collections::BTreeMap::new(),
        });
    }
    let trajectory = Trajectory::new(model.joint_names(), frames)?;
    Ok((trajectory, report))
}
