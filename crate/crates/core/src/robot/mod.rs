//! Articulated robot hand model: URDF-subset parsing, forward kinematics,
//! and mesh/point-cloud generation at any configuration.

mod mesh;
mod urdf;

pub use mesh::{CanonicalCloud, RobotMesh};

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use crate::geom::{GeomError, Quat, RigidTransform, TriMesh, Vec3};
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum RobotError {
    #[error("malformed XML: {0}")]
    MalformedXml(String),
    #[error("kinematic graph is not a tree rooted at a single link")]
    CyclicKinematics,
    #[error("joint `{joint}` references unknown link `{link}`")]
    MissingLink { joint: String, link: String },
    #[error("joint `{joint}` has a zero-length axis")]
    NonUnitAxis { joint: String },
    #[error("configuration has {got} joint values, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("link `{link}` declares geometry that is not loaded")]
    MissingGeometry { link: String },
    #[error("unknown link `{0}`")]
    UnknownLink(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Joint kind; `continuous` parses as revolute with unbounded limits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JointKind {
    Revolute,
    Prismatic,
    Fixed,
}

#[derive(Clone, Debug)]
pub struct Joint<R> {
    pub name: String,
    pub kind: JointKind,
    pub parent: usize,
    pub child: usize,
    pub origin: RigidTransform<R>,
    pub axis: Vec3<R>,
    /// `(lower, upper)` in radians or meters; `None` for unbounded joints.
    pub limits: Option<(R, R)>,
}

/// Geometry attached to a link, described but not necessarily loaded.
#[derive(Clone, Debug)]
pub enum GeometrySpec<R> {
    MeshFile { path: String },
    Cuboid { size: Vec3<R> },
    Sphere { radius: R },
    Cylinder { radius: R, length: R },
}

#[derive(Clone, Debug)]
pub struct Link<R> {
    pub name: String,
    /// Geometry description and its origin in the link frame.
    pub geometry: Option<(GeometrySpec<R>, RigidTransform<R>)>,
    /// Tessellated/loaded geometry in the link frame (origin applied).
    pub mesh: Option<TriMesh<R>>,
}

/// Parsed articulated model. The joint graph is a tree; the configuration
/// vector is the document-ordered list of non-fixed joints.
#[derive(Clone, Debug)]
pub struct RobotModel<R> {
    links: Vec<Link<R>>,
    joints: Vec<Joint<R>>,
    root: usize,
    /// Indices into `joints` for non-fixed joints, in document order.
    actuated: Vec<usize>,
    /// For each joint index, its position in `actuated` (if non-fixed).
    actuated_slot: Vec<Option<usize>>,
    /// Joint indices in parent-before-child traversal order.
    traversal: Vec<usize>,
    /// For each link, actuated-joint slots on its path from the root.
    path_slots: Vec<Vec<usize>>,
    warnings: Vec<String>,
}

/// A configuration: 6-DoF wrist pose plus one value per non-fixed joint.
#[derive(Clone, Debug, PartialEq)]
pub struct RobotConfig<R> {
    pub wrist: RigidTransform<R>,
    pub joint_values: Vec<R>,
}

impl<R: Real> RobotConfig<R> {
    pub fn new(wrist: RigidTransform<R>, joint_values: Vec<R>) -> Self {
        Self {
            wrist,
            joint_values,
        }
    }

    /// Zero joints at an identity wrist.
    pub fn zero(dofs: usize) -> Self {
        Self {
            wrist: RigidTransform::identity(),
            joint_values: vec![R::zero(); dofs],
        }
    }

    /// Interpolate two configurations: slerp on the wrist rotation, linear
    /// on the translation and joint values.
    pub fn interpolate(&self, other: &Self, t: R) -> Self {
        Self {
            wrist: self.wrist.interpolate(&other.wrist, t),
            joint_values: self
                .joint_values
                .iter()
                .zip(&other.joint_values)
                .map(|(a, b)| *a + (*b - *a) * t)
                .collect(),
        }
    }
}

/// A joint-limit violation found while checking a configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct LimitViolation<R> {
    pub joint: String,
    pub value: R,
    pub lower: R,
    pub upper: R,
}

impl<R: Real> RobotModel<R> {
    /// Parse a URDF-subset document. Mesh-file geometry stays unresolved
    /// until [`RobotModel::load_meshes`]; primitives are tessellated
    /// immediately.
    pub fn from_urdf_str(text: &str) -> Result<Self, RobotError> {
        urdf::parse(text)
    }

    /// Parse a URDF file and load mesh geometry relative to its directory.
    pub fn from_urdf_file(path: impl AsRef<Path>) -> Result<Self, RobotError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut model = Self::from_urdf_str(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        model.load_meshes(base)?;
        Ok(model)
    }

    /// Emit the supported URDF subset; `parse(write(model))` reproduces the
    /// model.
    pub fn to_urdf_string(&self) -> String {
        urdf::write(self)
    }

    /// Load every `MeshFile` geometry (OBJ only), resolving paths relative
    /// to `base`.
    pub fn load_meshes(&mut self, base: &Path) -> Result<(), RobotError> {
        for link in &mut self.links {
            if link.mesh.is_some() {
                continue;
            }
            if let Some((GeometrySpec::MeshFile { path }, origin)) = &link.geometry {
                let mesh = crate::geom::obj::read_obj_file::<R>(base.join(path))?;
                link.mesh = Some(mesh.transformed(origin));
            }
        }
        Ok(())
    }

    pub fn links(&self) -> &[Link<R>] {
        &self.links
    }

    pub fn joints(&self) -> &[Joint<R>] {
        &self.joints
    }

    pub fn root_link(&self) -> usize {
        self.root
    }

    /// Warnings recorded while parsing (unsupported elements, ignored
    /// attributes).
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Number of non-fixed joints (the length of the joint-value vector).
    pub fn dof_count(&self) -> usize {
        self.actuated.len()
    }

    /// Full configuration dimension: 6 wrist DoF plus the joint count.
    pub fn config_dim(&self) -> usize {
        6 + self.actuated.len()
    }

    /// Names of the non-fixed joints in configuration order.
    pub fn joint_names(&self) -> Vec<String> {
        self.actuated
            .iter()
            .map(|&j| self.joints[j].name.clone())
            .collect()
    }

    pub fn link_index(&self, name: &str) -> Option<usize> {
        self.links.iter().position(|l| l.name == name)
    }

    /// Links with no child joints, excluding the root: the fingertip set of
    /// a hand model.
    pub fn leaf_links(&self) -> Vec<usize> {
        let mut has_child = vec![false; self.links.len()];
        for j in &self.joints {
            has_child[j.parent] = true;
        }
        (0..self.links.len())
            .filter(|&l| !has_child[l] && l != self.root)
            .collect()
    }

    /// Joint limits in configuration order (`None` entries are unbounded).
    pub fn joint_limits(&self) -> Vec<Option<(R, R)>> {
        self.actuated
            .iter()
            .map(|&j| self.joints[j].limits)
            .collect()
    }

    /// Clamp joint values into their limits (no-op for unbounded joints).
    pub fn clamp_joints(&self, values: &mut [R]) {
        for (slot, &j) in self.actuated.iter().enumerate() {
            if let Some((lo, hi)) = self.joints[j].limits {
                values[slot] = values[slot].max(lo).min(hi);
            }
        }
    }

    /// Joint-limit violations beyond `tol`; informational, not fatal.
    pub fn limit_violations(&self, q: &RobotConfig<R>, tol: R) -> Vec<LimitViolation<R>> {
        let mut out = Vec::new();
        for (slot, &j) in self.actuated.iter().enumerate() {
            if let Some((lo, hi)) = self.joints[j].limits {
                let v = match q.joint_values.get(slot) {
                    Some(v) => *v,
                    None => continue,
                };
                if v < lo - tol || v > hi + tol {
                    out.push(LimitViolation {
                        joint: self.joints[j].name.clone(),
                        value: v,
                        lower: lo,
                        upper: hi,
                    });
                }
            }
        }
        out
    }

    fn check_dim(&self, q: &RobotConfig<R>) -> Result<(), RobotError> {
        if q.joint_values.len() != self.actuated.len() {
            return Err(RobotError::DimensionMismatch {
                expected: self.actuated.len(),
                got: q.joint_values.len(),
            });
        }
        Ok(())
    }

    /// Link poses by link index. The root link pose equals `q.wrist`; each
    /// child pose is `parent . joint origin . joint motion`.
    pub fn fk(&self, q: &RobotConfig<R>) -> Result<Vec<RigidTransform<R>>, RobotError> {
        self.check_dim(q)?;
        let mut poses = vec![RigidTransform::identity(); self.links.len()];
        poses[self.root] = q.wrist;
        for &j in &self.traversal {
            let joint = &self.joints[j];
            let motion = self.joint_motion(j, q);
            poses[joint.child] = poses[joint.parent].compose(&joint.origin).compose(&motion);
        }
        Ok(poses)
    }

    fn joint_motion(&self, j: usize, q: &RobotConfig<R>) -> RigidTransform<R> {
        let joint = &self.joints[j];
        match joint.kind {
            JointKind::Fixed => RigidTransform::identity(),
            JointKind::Revolute => {
                let slot = self.actuated_slot[j].unwrap();
                let angle = q.joint_values[slot];
                RigidTransform::from_rotation(
                    Quat::from_axis_angle(joint.axis, angle).unwrap_or_else(Quat::identity),
                )
            }
            JointKind::Prismatic => {
                let slot = self.actuated_slot[j].unwrap();
                RigidTransform::from_translation(joint.axis * q.joint_values[slot])
            }
        }
    }

    /// Link poses keyed by link name.
    pub fn fk_named(
        &self,
        q: &RobotConfig<R>,
    ) -> Result<BTreeMap<String, RigidTransform<R>>, RobotError> {
        let poses = self.fk(q)?;
        Ok(self
            .links
            .iter()
            .zip(poses)
            .map(|(link, pose)| (link.name.clone(), pose))
            .collect())
    }

    /// Forward kinematics with per-actuated-joint world frames, for
    /// analytic Jacobians: world axis direction and world origin point of
    /// each non-fixed joint.
    pub fn fk_with_joint_frames(
        &self,
        q: &RobotConfig<R>,
    ) -> Result<(Vec<RigidTransform<R>>, Vec<(Vec3<R>, Vec3<R>)>), RobotError> {
        self.check_dim(q)?;
        let mut poses = vec![RigidTransform::identity(); self.links.len()];
        let mut frames = vec![(Vec3::zero(), Vec3::zero()); self.actuated.len()];
        poses[self.root] = q.wrist;
        for &j in &self.traversal {
            let joint = &self.joints[j];
            let pre = poses[joint.parent].compose(&joint.origin);
            if let Some(slot) = self.actuated_slot[j] {
                frames[slot] = (pre.rotate_vector(joint.axis), pre.translation);
            }
            let motion = self.joint_motion(j, q);
            poses[joint.child] = pre.compose(&motion);
        }
        Ok((poses, frames))
    }

    /// Actuated-joint slots on the root path of `link` (which joints move it).
    pub fn path_slots(&self, link: usize) -> &[usize] {
        &self.path_slots[link]
    }

    pub(crate) fn from_parts(
        links: Vec<Link<R>>,
        joints: Vec<Joint<R>>,
        root: usize,
        warnings: Vec<String>,
    ) -> Result<Self, RobotError> {
        let actuated: Vec<usize> = (0..joints.len())
            .filter(|&j| joints[j].kind != JointKind::Fixed)
            .collect();
        let mut actuated_slot = vec![None; joints.len()];
        for (slot, &j) in actuated.iter().enumerate() {
            actuated_slot[j] = Some(slot);
        }
        // BFS from the root builds the traversal order and detects
        // unreachable links (cycles / disconnected forests)
        let mut child_joints: Vec<Vec<usize>> = vec![Vec::new(); links.len()];
        for (j, joint) in joints.iter().enumerate() {
            child_joints[joint.parent].push(j);
        }
        let mut traversal = Vec::with_capacity(joints.len());
        let mut visited = vec![false; links.len()];
        visited[root] = true;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(link) = queue.pop_front() {
            for &j in &child_joints[link] {
                let child = joints[j].child;
                if visited[child] {
                    return Err(RobotError::CyclicKinematics);
                }
                visited[child] = true;
                traversal.push(j);
                queue.push_back(child);
            }
        }
        if visited.iter().any(|v| !v) {
            return Err(RobotError::CyclicKinematics);
        }
        // root path slots per link
        let mut parent_joint = vec![None; links.len()];
        for (j, joint) in joints.iter().enumerate() {
            parent_joint[joint.child] = Some(j);
        }
        let mut path_slots = vec![Vec::new(); links.len()];
        for (link, slots_out) in path_slots.iter_mut().enumerate() {
            let mut slots = Vec::new();
            let mut cur = link;
            while let Some(j) = parent_joint[cur] {
                if let Some(slot) = actuated_slot[j] {
                    slots.push(slot);
                }
                cur = joints[j].parent;
            }
            slots.reverse();
            *slots_out = slots;
        }
        Ok(Self {
            links,
            joints,
            root,
            actuated,
            actuated_slot,
            traversal,
            path_slots,
            warnings,
        })
    }
}

/// Apply a `[dt(3), dw(3), dq(n)]` increment to a configuration: translation
/// add, exponential-map rotation pre-multiply about the wrist origin, joint
/// add (clamped into limits when `clamp` is set). This parameterization is
/// shared by every solver operating on configurations.
pub fn apply_increment<R: Real>(
    model: &RobotModel<R>,
    q: &RobotConfig<R>,
    delta: &[R],
    clamp: bool,
) -> RobotConfig<R> {
    let dt = Vec3::new(delta[0], delta[1], delta[2]);
    let dw = Vec3::new(delta[3], delta[4], delta[5]);
    let rot = Quat::from_rotation_vector(dw).mul(q.wrist.rotation);
    let translation = q.wrist.translation + dt;
    let mut joints = q.joint_values.clone();
    for (slot, v) in joints.iter_mut().enumerate() {
        *v += delta[6 + slot];
    }
    if clamp {
        model.clamp_joints(&mut joints);
    }
    RobotConfig::new(RigidTransform::new(rot, translation), joints)
}

/// URDF `rpy` (fixed-axis roll/pitch/yaw) to a quaternion.
pub(crate) fn quat_from_rpy<R: Real>(roll: R, pitch: R, yaw: R) -> Quat<R> {
    let rx = Quat::from_axis_angle(Vec3::new(R::one(), R::zero(), R::zero()), roll)
        .unwrap_or_else(Quat::identity);
    let ry = Quat::from_axis_angle(Vec3::new(R::zero(), R::one(), R::zero()), pitch)
        .unwrap_or_else(Quat::identity);
    let rz = Quat::from_axis_angle(Vec3::new(R::zero(), R::zero(), R::one()), yaw)
        .unwrap_or_else(Quat::identity);
    rz.mul(ry).mul(rx)
}

/// Tessellate a primitive geometry at the fixed resolutions used everywhere
/// (sphere 20x20, cylinder 24 segments).
pub(crate) fn tessellate<R: Real>(spec: &GeometrySpec<R>) -> Option<TriMesh<R>> {
    use crate::geom::shapes;
    match spec {
        GeometrySpec::MeshFile { .. } => None,
        GeometrySpec::Cuboid { size } => Some(shapes::cuboid(*size)),
        GeometrySpec::Sphere { radius } => Some(shapes::uv_sphere(*radius)),
        GeometrySpec::Cylinder { radius, length } => Some(shapes::cylinder(*radius, *length)),
    }
}
