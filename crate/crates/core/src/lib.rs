//! Geometry and optimization core for learning dexterous hand-object
//! manipulation from reconstructed trajectories.
//!
//! The crate covers the pipeline stages that sit between perception outputs
//! (meshes, depth grids, masks, hand keypoints, distance matrices) and policy
//! training data:
//!
//! - [`geom`]: vectors, rigid transforms, triangle meshes, point clouds,
//!   surface sampling, and nearest-distance queries.
//! - [`robot`]: URDF-subset hand models, forward kinematics, and robot
//!   mesh/point-cloud generation at any configuration.
//! - [`retarget`]: keypoint-based human-to-robot hand retargeting.
//! - [`contact`]: distance-based contact maps, the contact alignment energy,
//!   and configuration refinement against target maps.
//! - [`grasp`]: multilateration grasp recovery from dense distance matrices,
//!   grasp-configuration fitting, and quasi-static stability checks.
//! - [`demo`]: trajectory stage segmentation, rigid-equivariant demonstration
//!   synthesis, grasped-object propagation, and training-set export.
//! - [`calib`]: gravity alignment, hand depth correction, and object-scale
//!   search by silhouette rendering error.
//! - [`io`]: the file formats shared by the CLI and library consumers.
//!
//! All numeric code is generic over the [`scalar::Real`] scalar (`f32` or
//! `f64`); the `*64` aliases below are the working types of the file formats
//! and the CLI.

pub mod calib;
pub mod contact;
pub mod demo;
pub mod fixtures;
pub mod geom;
pub mod grasp;
pub mod io;
pub mod linalg;
pub mod retarget;
pub mod robot;
pub mod scalar;
pub mod trajectory;

pub use scalar::Real;

/// f64 working-precision aliases used by the file formats and the CLI.
pub type Vec3_64 = geom::Vec3<f64>;
pub type Quat64 = geom::Quat<f64>;
pub type RigidTransform64 = geom::RigidTransform<f64>;
pub type TriMesh64 = geom::TriMesh<f64>;
pub type PointCloud64 = geom::PointCloud<f64>;
pub type RobotModel64 = robot::RobotModel<f64>;
pub type RobotConfig64 = robot::RobotConfig<f64>;
pub type Trajectory64 = trajectory::Trajectory<f64>;

/// f32 aliases for memory-constrained callers.
pub type Vec3_32 = geom::Vec3<f32>;
pub type Quat32 = geom::Quat<f32>;
pub type RigidTransform32 = geom::RigidTransform<f32>;
pub type TriMesh32 = geom::TriMesh<f32>;
pub type PointCloud32 = geom::PointCloud<f32>;
