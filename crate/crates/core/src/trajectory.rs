//! Time-indexed robot/object trajectories with grasp/manipulation stage
//! marks.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::geom::RigidTransform;
use crate::robot::RobotConfig;
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("timestamps must be strictly increasing (frame {frame})")]
    NonMonotonicTime { frame: usize },
    #[error("stage marks ({t1}, {t2}) invalid for {frames} frames")]
    BadStageMarks { t1: usize, t2: usize, frames: usize },
    #[error("frame {frame} has {got} joint values, expected {expected}")]
    InconsistentJoints {
        frame: usize,
        expected: usize,
        got: usize,
    },
    #[error("object `{id}` missing a pose at frame {frame}")]
    MissingPose { id: String, frame: usize },
}

/// One trajectory sample: configuration plus per-object poses.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame<R> {
    pub time: R,
    pub config: RobotConfig<R>,
    pub objects: BTreeMap<String, RigidTransform<R>>,
}

/// Ordered frames with the joint naming convention they were produced under
/// and optional `(t1, t2)` grasp-stage marks.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<R> {
    pub joint_names: Vec<String>,
    pub frames: Vec<Frame<R>>,
    /// `(t1, t2)`: first approach frame and grasp-stable frame indices.
    pub stage_marks: Option<(usize, usize)>,
}

impl<R: Real> Trajectory<R> {
    pub fn new(joint_names: Vec<String>, frames: Vec<Frame<R>>) -> Result<Self, TrajectoryError> {
        let traj = Self {
            joint_names,
            frames,
            stage_marks: None,
        };
        traj.validate()?;
        Ok(traj)
    }

    pub fn validate(&self) -> Result<(), TrajectoryError> {
        let dofs = self.joint_names.len();
        for (i, f) in self.frames.iter().enumerate() {
            if f.config.joint_values.len() != dofs {
                return Err(TrajectoryError::InconsistentJoints {
                    frame: i,
                    expected: dofs,
                    got: f.config.joint_values.len(),
                });
            }
            if i > 0 && !(f.time > self.frames[i - 1].time) {
                return Err(TrajectoryError::NonMonotonicTime { frame: i });
            }
        }
        if let Some((t1, t2)) = self.stage_marks {
            if !(t1 <= t2 && t2 < self.frames.len()) {
                return Err(TrajectoryError::BadStageMarks {
                    t1,
                    t2,
                    frames: self.frames.len(),
                });
            }
        }
        Ok(())
    }

    pub fn with_stage_marks(mut self, t1: usize, t2: usize) -> Result<Self, TrajectoryError> {
        self.stage_marks = Some((t1, t2));
        self.validate()?;
        Ok(self)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Pose of an object at a frame.
    pub fn object_pose(
        &self,
        frame: usize,
        id: &str,
    ) -> Result<RigidTransform<R>, TrajectoryError> {
        self.frames[frame]
            .objects
            .get(id)
            .copied()
            .ok_or_else(|| TrajectoryError::MissingPose {
                id: id.to_string(),
                frame,
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec3;

    fn frame(t: f64) -> Frame<f64> {
        Frame {
            time: t,
            config: RobotConfig::new(
                RigidTransform::from_translation(Vec3::new(t, 0.0, 0.0)),
                vec![0.0, 0.0],
            ),
            objects: BTreeMap::new(),
        }
    }

    #[test]
    fn rejects_non_monotonic_time() {
        let err = Trajectory::new(
            vec!["a".into(), "b".into()],
            vec![frame(0.0), frame(1.0), frame(1.0)],
        )
        .unwrap_err();
        assert!(matches!(
            err,
            TrajectoryError::NonMonotonicTime { frame: 2 }
        ));
    }

    #[test]
    fn rejects_bad_stage_marks() {
        let traj =
            Trajectory::new(vec!["a".into(), "b".into()], vec![frame(0.0), frame(1.0)]).unwrap();
        assert!(traj.clone().with_stage_marks(0, 1).is_ok());
        assert!(matches!(
            traj.clone().with_stage_marks(1, 0),
            Err(TrajectoryError::BadStageMarks { .. })
        ));
        assert!(matches!(
            traj.with_stage_marks(0, 2),
            Err(TrajectoryError::BadStageMarks { .. })
        ));
    }

    #[test]
    fn rejects_joint_dim_mismatch() {
        let err = Trajectory::new(vec!["a".into()], vec![frame(0.0)]).unwrap_err();
        assert!(matches!(err, TrajectoryError::InconsistentJoints { .. }));
    }
}
