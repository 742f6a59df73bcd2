//! Grasp recovery and evaluation: position a robot point cloud from a dense
//! robot-object distance matrix by multilateration, fit the grasp
//! configuration to the placed cloud, extract contacts, and check stability
//! under the six-direction disturbance protocol with a quasi-static wrench
//! feasibility test.

mod fit;
mod multilateration;
mod stability;

pub use fit::{fit_grasp_config, kabsch, solve_grasp, FitOptions, GraspResult};
pub use multilateration::multilaterate_points;
pub use stability::{
    extract_contacts, stability_check, Contact, DirectionCheck, ProtocolMeta, StabilityParams,
    StabilityReport,
};

use thiserror::Error;

use crate::geom::{GeomError, PointCloud};
use crate::robot::RobotError;
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum GraspError {
    #[error(
        "distance matrix is {rows}x{cols} but clouds are {robot} robot and {object} object points"
    )]
    DimensionMismatch {
        rows: usize,
        cols: usize,
        robot: usize,
        object: usize,
    },
    #[error("distance values must be finite and nonnegative")]
    InvalidDistance,
    #[error("{rows}x{cols} matrix needs {expected} values, got {got}")]
    BadShape {
        rows: usize,
        cols: usize,
        expected: usize,
        got: usize,
    },
    #[error("anchor set is degenerate (covariance rank < 3)")]
    DegenerateAnchors,
    #[error("need at least 4 anchors, got {0}")]
    TooFewAnchors(usize),
    #[error("placed cloud is degenerate; rigid fit is rank deficient")]
    RankDeficientFit,
    #[error("placed and canonical clouds differ in size: {placed} vs {canonical}")]
    CloudSizeMismatch { placed: usize, canonical: usize },
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Robot(#[from] RobotError),
}

/// Dense `N_R x N_O` nonnegative distances, row-major; rows follow the
/// canonical robot point cloud, columns the object point cloud.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix<R> {
    rows: usize,
    cols: usize,
    values: Vec<R>,
}

impl<R: Real> DistanceMatrix<R> {
    pub fn new(rows: usize, cols: usize, values: Vec<R>) -> Result<Self, GraspError> {
        if values.len() != rows * cols {
            return Err(GraspError::BadShape {
                rows,
                cols,
                expected: rows * cols,
                got: values.len(),
            });
        }
        for v in &values {
            if !(*v >= R::zero()) || !v.is_finite() {
                return Err(GraspError::InvalidDistance);
            }
        }
        Ok(Self { rows, cols, values })
    }

    /// Exact pairwise distances between two clouds (the ground-truth matrix
    /// construction).
    pub fn from_clouds(robot: &PointCloud<R>, object: &PointCloud<R>) -> Self {
        let rows = robot.len();
        let cols = object.len();
        let mut values = Vec::with_capacity(rows * cols);
        for r in &robot.points {
            for o in &object.points {
                values.push(r.distance(*o));
            }
        }
        Self { rows, cols, values }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> R {
        self.values[row * self.cols + col]
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[R] {
        &self.values[row * self.cols..(row + 1) * self.cols]
    }

    #[inline]
    pub fn values(&self) -> &[R] {
        &self.values
    }
}
