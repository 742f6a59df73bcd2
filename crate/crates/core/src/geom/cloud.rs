use crate::scalar::Real;

use super::{RigidTransform, Vec3};

/// A set of 3D points, optionally tagged with the mesh face each point was
/// sampled from.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud<R> {
    pub points: Vec<Vec3<R>>,
    pub source_faces: Option<Vec<usize>>,
}

impl<R: Real> PointCloud<R> {
    pub fn from_points(points: Vec<Vec3<R>>) -> Self {
        Self {
            points,
            source_faces: None,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn transformed(&self, t: &RigidTransform<R>) -> Self {
        Self {
            points: self.points.iter().map(|p| t.apply(*p)).collect(),
            source_faces: self.source_faces.clone(),
        }
    }

    /// Mean position, zero for an empty cloud.
    pub fn centroid(&self) -> Vec3<R> {
        let mut c = Vec3::zero();
        for p in &self.points {
            c = c + *p;
        }
        c / R::from_usize(self.points.len().max(1)).unwrap()
    }
}
