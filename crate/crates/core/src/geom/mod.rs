//! Foundational geometry: vectors, rigid transforms, triangle meshes, point
//! clouds, surface sampling, and nearest-distance queries.

mod cloud;
mod mesh;
mod nearest;
pub mod obj;
mod sample;
mod transform;
mod vec;

pub use cloud::PointCloud;
pub use mesh::{shapes, TriMesh};
pub use nearest::{nearest_distances, NearestIndex, NearestNeighbors};
pub use sample::{sample_surface, sample_surface_with_rng};
pub use transform::{Quat, RigidTransform};
pub use vec::Vec3;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeomError {
    #[error("mesh has no faces")]
    EmptyMesh,
    #[error("target point cloud is empty")]
    EmptyTarget,
    #[error("mesh has zero total surface area")]
    ZeroArea,
    #[error("face {face} references vertex {index} but mesh has {count} vertices")]
    FaceIndexOutOfBounds {
        face: usize,
        index: usize,
        count: usize,
    },
    #[error("face {face} repeats a vertex index")]
    DegenerateFace { face: usize },
    #[error("non-finite vertex coordinate at index {index}")]
    NonFiniteVertex { index: usize },
    #[error("OBJ parse error at line {line}: {message}")]
    ObjParse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
