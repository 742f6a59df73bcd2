//! Distance-based hand-object contact maps, the contact alignment energy,
//! and refinement of the hand configuration against target maps.
//!
//! A contact map assigns every vertex of a mesh a value
//! `max(0, 1 - d / c_rad)` where `d` is the smallest distance to the other
//! mesh's vertices. The alignment energy is the summed absolute deviation of
//! both maps from their targets, plus an optional penetration penalty; set
//! `lambda_pen` to zero for the strict two-term form.

use thiserror::Error;

use crate::geom::{nearest_distances, GeomError, NearestNeighbors, PointCloud, TriMesh, Vec3};
use crate::robot::{apply_increment, RobotConfig, RobotError, RobotModel};
use crate::scalar::{real, Real};

#[derive(Debug, Error)]
pub enum ContactError {
    #[error("mesh has no vertices")]
    EmptyMesh,
    #[error("contact radius must be positive")]
    NonPositiveRadius,
    #[error("target map has {got} values, mesh has {expected} vertices")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("contact value at index {index} is outside [0, 1]")]
    ValueOutOfRange { index: usize },
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Robot(#[from] RobotError),
}

/// Per-vertex contact values in `[0, 1]` with the falloff radius that
/// produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct ContactMap<R> {
    pub values: Vec<R>,
    pub c_rad: R,
}

impl<R: Real> ContactMap<R> {
    pub fn new(values: Vec<R>, c_rad: R) -> Result<Self, ContactError> {
        if !(c_rad > R::zero()) {
            return Err(ContactError::NonPositiveRadius);
        }
        for (index, v) in values.iter().enumerate() {
            if !(*v >= R::zero() && *v <= R::one()) {
                return Err(ContactError::ValueOutOfRange { index });
            }
        }
        Ok(Self { values, c_rad })
    }
}

/// Compute the contact map of `subject` against `other`:
/// `max(0, 1 - min_j ||v_other_j - v_subject_i|| / c_rad)` per subject
/// vertex, with vertex-to-vertex distances.
pub fn contact_map<R: Real>(
    subject: &TriMesh<R>,
    other: &TriMesh<R>,
    c_rad: R,
) -> Result<ContactMap<R>, ContactError> {
    if !(c_rad > R::zero()) {
        return Err(ContactError::NonPositiveRadius);
    }
    if subject.vertex_count() == 0 || other.vertex_count() == 0 {
        return Err(ContactError::EmptyMesh);
    }
    let query = PointCloud::from_points(subject.vertices().to_vec());
    let target = PointCloud::from_points(other.vertices().to_vec());
    let nearest = nearest_distances(&query, &target).map_err(|e| match e {
        GeomError::EmptyTarget => ContactError::EmptyMesh,
        other => ContactError::Geom(other),
    })?;
    let values = nearest
        .into_iter()
        .map(|(d, _)| (R::one() - d / c_rad).max(R::zero()))
        .collect();
    Ok(ContactMap { values, c_rad })
}

/// Target contact maps for the hand (robot mesh) and the object.
#[derive(Clone, Debug, PartialEq)]
pub struct ContactTargets<R> {
    pub hand: Vec<R>,
    pub object: Vec<R>,
}

/// Energy parameters. `lambda_pen = 0` disables the penetration term
/// (strict two-term formula).
#[derive(Clone, Copy, Debug)]
pub struct ContactParams<R> {
    pub c_rad: R,
    pub lambda_pen: R,
}

impl<R: Real> Default for ContactParams<R> {
    fn default() -> Self {
        Self {
            c_rad: real(0.01),
            lambda_pen: real(10.0),
        }
    }
}

/// Breakdown of the alignment energy.
#[derive(Clone, Copy, Debug)]
pub struct EnergyParts<R> {
    /// Sum of |object map - object target|.
    pub object_term: R,
    /// Sum of |hand map - hand target|.
    pub hand_term: R,
    /// Summed penetration depth over hand vertices, meters (unweighted).
    pub penetration: R,
}

impl<R: Real> EnergyParts<R> {
    pub fn total(&self, lambda_pen: R) -> R {
        self.object_term + self.hand_term + lambda_pen * self.penetration
    }
}

/// Mesh-level energy evaluation: both contact maps against their targets
/// plus the penetration term. Exposed for fixtures that construct hand
/// meshes directly.
pub fn contact_energy_meshes<R: Real>(
    hand_mesh: &TriMesh<R>,
    object: &TriMesh<R>,
    object_normals: &[Vec3<R>],
    targets: &ContactTargets<R>,
    params: &ContactParams<R>,
) -> Result<EnergyParts<R>, ContactError> {
    if targets.hand.len() != hand_mesh.vertex_count() {
        return Err(ContactError::DimensionMismatch {
            expected: hand_mesh.vertex_count(),
            got: targets.hand.len(),
        });
    }
    if targets.object.len() != object.vertex_count() {
        return Err(ContactError::DimensionMismatch {
            expected: object.vertex_count(),
            got: targets.object.len(),
        });
    }
    let object_map = contact_map(object, hand_mesh, params.c_rad)?;
    let object_term = object_map
        .values
        .iter()
        .zip(&targets.object)
        .map(|(v, t)| (*v - *t).abs())
        .sum::<R>();

    // hand map and penetration share the nearest-object-vertex query
    let hand_cloud = PointCloud::from_points(hand_mesh.vertices().to_vec());
    let object_cloud = PointCloud::from_points(object.vertices().to_vec());
    let nearest = nearest_distances(&hand_cloud, &object_cloud).map_err(|e| match e {
        GeomError::EmptyTarget => ContactError::EmptyMesh,
        other => ContactError::Geom(other),
    })?;
    let mut hand_term = R::zero();
    let mut penetration = R::zero();
    for (i, (d, idx)) in nearest.iter().enumerate() {
        let value = (R::one() - *d / params.c_rad).max(R::zero());
        hand_term += (value - targets.hand[i]).abs();
        // signed proximity along the nearest object vertex normal; negative
        // means the hand vertex sits inside the surface
        let v = hand_cloud.points[i];
        let o = object_cloud.points[*idx];
        let s = (v - o).dot(object_normals[*idx]);
        if s < R::zero() {
            penetration += -s;
        }
    }
    Ok(EnergyParts {
        object_term,
        hand_term,
        penetration,
    })
}

/// Contact alignment energy of a configuration: the summed absolute map
/// deviations `|C_object - target_object|` and `|C_hand - target_hand|`
/// plus `lambda_pen` times the summed penetration depth, with the hand maps
/// computed on the robot mesh at `q`. Build a [`ContactObjective`] instead
/// when evaluating many configurations against the same object.
pub fn contact_energy<R: Real>(
    model: &RobotModel<R>,
    q: &RobotConfig<R>,
    object: &TriMesh<R>,
    targets: &ContactTargets<R>,
    params: &ContactParams<R>,
) -> Result<R, ContactError> {
    ContactObjective::new(model, object, targets, *params).energy(q)
}

/// Reusable evaluation context for one object/targets pair: caches the
/// object's outward vertex normals and its spatial index across energy
/// evaluations.
pub struct ContactObjective<'a, R> {
    model: &'a RobotModel<R>,
    object: &'a TriMesh<R>,
    object_normals: Vec<Vec3<R>>,
    object_index: Option<NearestNeighbors<R>>,
    targets: &'a ContactTargets<R>,
    params: ContactParams<R>,
}

impl<'a, R: Real> ContactObjective<'a, R> {
    pub fn new(
        model: &'a RobotModel<R>,
        object: &'a TriMesh<R>,
        targets: &'a ContactTargets<R>,
        params: ContactParams<R>,
    ) -> Self {
        Self {
            model,
            object,
            object_normals: object.vertex_normals_outward(),
            object_index: NearestNeighbors::build(object.vertices()).ok(),
            targets,
            params,
        }
    }

    pub fn energy_parts(&self, q: &RobotConfig<R>) -> Result<EnergyParts<R>, ContactError> {
        let hand_mesh = self.model.robot_mesh_at(q)?;
        if hand_mesh.vertex_count() == 0 {
            return Err(ContactError::EmptyMesh);
        }
        let Some(object_index) = &self.object_index else {
            return Err(ContactError::EmptyMesh);
        };
        if self.targets.hand.len() != hand_mesh.vertex_count() {
            return Err(ContactError::DimensionMismatch {
                expected: hand_mesh.vertex_count(),
                got: self.targets.hand.len(),
            });
        }
        if self.targets.object.len() != self.object.vertex_count() {
            return Err(ContactError::DimensionMismatch {
                expected: self.object.vertex_count(),
                got: self.targets.object.len(),
            });
        }
        let hand_index =
            NearestNeighbors::build(hand_mesh.vertices()).map_err(|_| ContactError::EmptyMesh)?;
        let mut object_term = R::zero();
        for (i, v) in self.object.vertices().iter().enumerate() {
            let (d, _) = hand_index.nearest(*v);
            let value = (R::one() - d / self.params.c_rad).max(R::zero());
            object_term += (value - self.targets.object[i]).abs();
        }
        let mut hand_term = R::zero();
        let mut penetration = R::zero();
        for (i, v) in hand_mesh.vertices().iter().enumerate() {
            let (d, idx) = object_index.nearest(*v);
            let value = (R::one() - d / self.params.c_rad).max(R::zero());
            hand_term += (value - self.targets.hand[i]).abs();
            let o = self.object.vertices()[idx];
            let s = (*v - o).dot(self.object_normals[idx]);
            if s < R::zero() {
                penetration += -s;
            }
        }
        Ok(EnergyParts {
            object_term,
            hand_term,
            penetration,
        })
    }

    pub fn energy(&self, q: &RobotConfig<R>) -> Result<R, ContactError> {
        Ok(self.energy_parts(q)?.total(self.params.lambda_pen))
    }

    /// Central finite-difference gradient over the `[dt, dw, dq]` increment
    /// parameterization (joints unclamped during differencing).
    pub fn gradient_fd(&self, q: &RobotConfig<R>, h: R) -> Result<Vec<R>, ContactError> {
        let dim = self.model.config_dim();
        let mut g = vec![R::zero(); dim];
        let mut delta = vec![R::zero(); dim];
        for k in 0..dim {
            delta[k] = h;
            let ep = self.energy(&apply_increment(self.model, q, &delta, false))?;
            delta[k] = -h;
            let em = self.energy(&apply_increment(self.model, q, &delta, false))?;
            delta[k] = R::zero();
            g[k] = (ep - em) / (h + h);
        }
        Ok(g)
    }
}

/// Options for [`optimize_contact`]: finite-difference step, Armijo
/// parameters, and termination thresholds.
#[derive(Clone, Copy, Debug)]
pub struct OptimizeContactOptions<R> {
    pub fd_step: R,
    pub armijo_c: R,
    pub shrink: R,
    pub init_step: R,
    pub grad_tol: R,
}

impl<R: Real> Default for OptimizeContactOptions<R> {
    fn default() -> Self {
        Self {
            fd_step: real(1e-6),
            armijo_c: real(1e-4),
            shrink: real(0.5),
            init_step: real(0.01),
            grad_tol: real(1e-10),
        }
    }
}

/// Result of a contact optimization: the refined configuration and the
/// accepted-energy trace (first entry is the initial energy).
#[derive(Clone, Debug)]
pub struct OptimizeContactResult<R> {
    pub config: RobotConfig<R>,
    pub trace: Vec<R>,
    pub iterations: usize,
}

/// Projected gradient descent with backtracking line search over the full
/// configuration. The energy trace is non-increasing; joint limits are
/// respected by clamping; the result never exceeds the initial energy.
pub fn optimize_contact<R: Real>(
    model: &RobotModel<R>,
    q_init: &RobotConfig<R>,
    object: &TriMesh<R>,
    targets: &ContactTargets<R>,
    params: &ContactParams<R>,
    max_iters: usize,
) -> Result<OptimizeContactResult<R>, ContactError> {
    optimize_contact_with(
        model,
        q_init,
        object,
        targets,
        params,
        max_iters,
        &OptimizeContactOptions::default(),
    )
}

pub fn optimize_contact_with<R: Real>(
    model: &RobotModel<R>,
    q_init: &RobotConfig<R>,
    object: &TriMesh<R>,
    targets: &ContactTargets<R>,
    params: &ContactParams<R>,
    max_iters: usize,
    opts: &OptimizeContactOptions<R>,
) -> Result<OptimizeContactResult<R>, ContactError> {
    let objective = ContactObjective::new(model, object, targets, *params);
    let mut q = q_init.clone();
    model.clamp_joints(&mut q.joint_values);
    let mut energy = objective.energy(&q)?;
    let mut trace = vec![energy];
    let mut step = opts.init_step;
    // counts accepted iterations only
    let mut iterations = 0usize;

    for _ in 0..max_iters {
        let g = objective.gradient_fd(&q, opts.fd_step)?;
        let gnorm2: R = g.iter().map(|v| *v * *v).sum();
        if gnorm2.sqrt() < opts.grad_tol {
            break;
        }
        // scale so the first trial moves at most init_step in parameter space
        let mut alpha = step / gnorm2.sqrt().max(R::one());
        let mut accepted = false;
        for _ in 0..40 {
            let delta: Vec<R> = g.iter().map(|v| -*v * alpha).collect();
            let trial = apply_increment(model, &q, &delta, true);
            let trial_energy = objective.energy(&trial)?;
            // projected Armijo: compare against the realized step direction
            let mut g_dot_step = R::zero();
            g_dot_step += g[0] * (trial.wrist.translation.x - q.wrist.translation.x);
            g_dot_step += g[1] * (trial.wrist.translation.y - q.wrist.translation.y);
            g_dot_step += g[2] * (trial.wrist.translation.z - q.wrist.translation.z);
            let dr = q
                .wrist
                .rotation
                .conjugate()
                .mul(trial.wrist.rotation)
                .to_rotation_vector();
            let dr_world = q.wrist.rotation.rotate(dr);
            g_dot_step += g[3] * dr_world.x + g[4] * dr_world.y + g[5] * dr_world.z;
            for (k, (a, b)) in trial.joint_values.iter().zip(&q.joint_values).enumerate() {
                g_dot_step += g[6 + k] * (*a - *b);
            }
            if trial_energy <= energy + opts.armijo_c * g_dot_step && trial_energy < energy {
                q = trial;
                energy = trial_energy;
                trace.push(energy);
                step = (alpha * gnorm2.sqrt().max(R::one()) * real::<R>(2.0)).min(real::<R>(0.05));
                accepted = true;
                iterations += 1;
                break;
            }
            alpha *= opts.shrink;
            if alpha < real::<R>(1e-14) {
                break;
            }
        }
        if !accepted {
            break;
        }
    }
    Ok(OptimizeContactResult {
        config: q,
        trace,
        iterations,
    })
}

/// Options for the heuristic target generator.
#[derive(Clone, Debug)]
pub struct HeuristicTargetOptions {
    /// Object vertices marked per in-range fingertip vertex.
    pub k_nearest: usize,
    /// Link names to treat as fingertips; `None` means the model's leaves.
    pub fingertip_links: Option<Vec<String>>,
}

impl Default for HeuristicTargetOptions {
    fn default() -> Self {
        Self {
            k_nearest: 8,
            fingertip_links: None,
        }
    }
}

/// Stand-in for a learned target-map predictor: mark fingertip-link hand
/// vertices closer than `3 * c_rad` to the object with target 1, and for
/// each such vertex mark its `k` nearest object vertices.
pub fn heuristic_targets<R: Real>(
    model: &RobotModel<R>,
    q: &RobotConfig<R>,
    object: &TriMesh<R>,
    c_rad: R,
    opts: &HeuristicTargetOptions,
) -> Result<ContactTargets<R>, ContactError> {
    if !(c_rad > R::zero()) {
        return Err(ContactError::NonPositiveRadius);
    }
    if object.vertex_count() == 0 {
        return Err(ContactError::EmptyMesh);
    }
    let spans = model.robot_mesh_spans(q)?;
    let fingertip_links: Vec<usize> = match &opts.fingertip_links {
        Some(names) => names.iter().filter_map(|n| model.link_index(n)).collect(),
        None => model.leaf_links(),
    };
    let mut hand = vec![R::zero(); spans.mesh.vertex_count()];
    let mut object_targets = vec![R::zero(); object.vertex_count()];
    let object_points = object.vertices();
    let range_limit = real::<R>(3.0) * c_rad;

    for link in fingertip_links {
        let Some(range) = spans.span_of(link) else {
            continue;
        };
        for vi in range {
            let v = spans.mesh.vertices()[vi];
            // nearest object distance for the in-range test
            let mut best = R::infinity();
            for o in object_points {
                best = best.min(v.distance(*o));
            }
            if best >= range_limit {
                continue;
            }
            hand[vi] = R::one();
            mark_k_nearest(v, object_points, opts.k_nearest, &mut object_targets);
        }
    }
    Ok(ContactTargets {
        hand,
        object: object_targets,
    })
}

fn mark_k_nearest<R: Real>(p: Vec3<R>, points: &[Vec3<R>], k: usize, marks: &mut [R]) {
    // small k: partial selection by repeated scan over a bounded candidate set
    let mut best: Vec<(R, usize)> = Vec::with_capacity(k + 1);
    for (i, o) in points.iter().enumerate() {
        let d = p.distance_squared(*o);
        if best.len() < k {
            best.push((d, i));
            best.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        } else if let Some(last) = best.last() {
            if d < last.0 {
                best.pop();
                let pos = best.partition_point(|(bd, _)| *bd <= d);
                best.insert(pos, (d, i));
            }
        }
    }
    for (_, i) in best {
        marks[i] = R::one();
    }
}
