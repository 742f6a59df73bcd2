//! Algebraic multilateration: recover point positions from distances to a
//! set of anchors by linearizing the range equations.
//!
//! Each range equation `||x - a_j||^2 = d_j^2` expands to
//! `||x||^2 - 2 a_j . x + ||a_j||^2 = d_j^2`, linear in the unknowns
//! `(x, s)` with `s = ||x||^2`. Stacking all anchors gives a least-squares
//! system solved through its 4x4 normal equations. Anchors are mean-centered
//! first for conditioning.

use crate::geom::{PointCloud, Vec3};
use crate::linalg::{solve_dense, sym_eigen3};
use crate::scalar::{real, Real};

use super::{DistanceMatrix, GraspError};

/// Recover one position per distance-matrix row. Returns the placed cloud
/// and the per-point residual: the RMS over anchors of
/// `| ||x - a_j|| - d_j |`.
pub fn multilaterate_points<R: Real>(
    distances: &DistanceMatrix<R>,
    anchors: &PointCloud<R>,
) -> Result<(PointCloud<R>, Vec<R>), GraspError> {
    let n = anchors.len();
    if distances.cols() != n {
        return Err(GraspError::DimensionMismatch {
            rows: distances.rows(),
            cols: distances.cols(),
            robot: distances.rows(),
            object: n,
        });
    }
    if n < 4 {
        return Err(GraspError::TooFewAnchors(n));
    }
    // anchor covariance must have rank 3 (non-coplanar anchors)
    let mean = anchors.centroid();
    let mut cov = [[R::zero(); 3]; 3];
    for a in &anchors.points {
        let d = *a - mean;
        let v = [d.x, d.y, d.z];
        for i in 0..3 {
            for j in 0..3 {
                cov[i][j] += v[i] * v[j];
            }
        }
    }
    let (eigs, _) = sym_eigen3(cov);
    let trace = eigs[0] + eigs[1] + eigs[2];
    if !(eigs[2] > trace * real::<R>(1e-10)) {
        return Err(GraspError::DegenerateAnchors);
    }

    // centered anchors: rows [-2 a_x, -2 a_y, -2 a_z, 1]; A^T A is shared
    // across all points
    let centered: Vec<Vec3<R>> = anchors.points.iter().map(|a| *a - mean).collect();
    let neg_two = real::<R>(-2.0);
    let mut ata = [R::zero(); 16];
    let mut rows = Vec::with_capacity(n);
    for a in &centered {
        let row = [neg_two * a.x, neg_two * a.y, neg_two * a.z, R::one()];
        for i in 0..4 {
            for j in 0..4 {
                ata[i * 4 + j] += row[i] * row[j];
            }
        }
        rows.push(row);
    }

    let mut points = Vec::with_capacity(distances.rows());
    let mut residuals = Vec::with_capacity(distances.rows());
    for r in 0..distances.rows() {
        let d_row = distances.row(r);
        // b_j = d_j^2 - ||a_j||^2 in the centered frame
        let mut atb = [R::zero(); 4];
        for (j, a) in centered.iter().enumerate() {
            let b = d_row[j] * d_row[j] - a.norm_squared();
            for i in 0..4 {
                atb[i] += rows[j][i] * b;
            }
        }
        let sol = solve_dense(&ata, &atb, 4).ok_or(GraspError::DegenerateAnchors)?;
        let x = Vec3::new(sol[0], sol[1], sol[2]) + mean;
        let mut sq_sum = R::zero();
        for (j, a) in anchors.points.iter().enumerate() {
            let err = x.distance(*a) - d_row[j];
            sq_sum += err * err;
        }
        residuals.push((sq_sum / R::from_usize(n).unwrap()).sqrt());
        points.push(x);
    }
    Ok((PointCloud::from_points(points), residuals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_cloud(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> PointCloud<f64> {
        PointCloud::from_points(
            (0..n)
                .map(|_| {
                    Vec3::new(
                        (rng.random::<f64>() - 0.5) * scale,
                        (rng.random::<f64>() - 0.5) * scale,
                        (rng.random::<f64>() - 0.5) * scale,
                    )
                })
                .collect(),
        )
    }

    #[test]
    fn exact_recovery_from_noiseless_distances() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let targets = random_cloud(100, 0.4, &mut rng);
        let anchors = random_cloud(200, 0.5, &mut rng);
        let d = DistanceMatrix::from_clouds(&targets, &anchors);
        let (placed, residuals) = multilaterate_points(&d, &anchors).unwrap();
        for (got, want) in placed.points.iter().zip(&targets.points) {
            assert!(got.distance(*want) < 1e-9, "error {}", got.distance(*want));
        }
        for r in residuals {
            assert!(r < 1e-9);
        }
    }

    #[test]
    fn tetrahedron_centroid_recovered() {
        // four anchors on a regular tetrahedron, target at the centroid:
        // all distances equal the circumradius-like value
        let anchors = PointCloud::from_points(vec![
            Vec3::new(1.0, 1.0, 1.0),
            Vec3::new(1.0, -1.0, -1.0),
            Vec3::new(-1.0, 1.0, -1.0),
            Vec3::new(-1.0, -1.0, 1.0),
        ]);
        let centroid = Vec3::new(0.0, 0.0, 0.0);
        let d = DistanceMatrix::from_clouds(&PointCloud::from_points(vec![centroid]), &anchors);
        // sanity: equidistant anchors
        let r0: f64 = d.get(0, 0);
        for c in 1..4 {
            assert!((d.get(0, c) - r0).abs() < 1e-12);
        }
        let (placed, residuals) = multilaterate_points(&d, &anchors).unwrap();
        assert!(placed.points[0].distance(centroid) < 1e-9);
        assert!(residuals[0] < 1e-9);
    }

    #[test]
    fn coplanar_anchors_rejected() {
        let anchors = PointCloud::from_points(vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(0.5, 0.5, 0.0),
        ]);
        let d = DistanceMatrix::new(1, 5, vec![1.0; 5]).unwrap();
        assert!(matches!(
            multilaterate_points(&d, &anchors),
            Err(GraspError::DegenerateAnchors)
        ));
    }

    #[test]
    fn too_few_anchors_rejected() {
        let anchors = PointCloud::from_points(vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ]);
        let d = DistanceMatrix::new(1, 3, vec![1.0; 3]).unwrap();
        assert!(matches!(
            multilaterate_points(&d, &anchors),
            Err(GraspError::TooFewAnchors(3))
        ));
    }

    /// Gauss-Newton refinement oracle, implemented independently of the
    /// algebraic path: iteratively solves the nonlinear range least-squares.
    pub(crate) fn gauss_newton_point(
        anchors: &[Vec3<f64>],
        dists: &[f64],
        init: Vec3<f64>,
    ) -> Vec3<f64> {
        let mut x = init;
        for _ in 0..100 {
            let mut jtj = [[0.0f64; 3]; 3];
            let mut jtr = [0.0f64; 3];
            for (a, d) in anchors.iter().zip(dists) {
                let diff = x - *a;
                let dist = diff.norm().max(1e-15);
                let res = dist - d;
                let jrow = [diff.x / dist, diff.y / dist, diff.z / dist];
                for i in 0..3 {
                    for j in 0..3 {
                        jtj[i][j] += jrow[i] * jrow[j];
                    }
                    jtr[i] += jrow[i] * res;
                }
            }
            let flat: Vec<f64> = jtj.iter().flatten().copied().collect();
            let Some(step) = crate::linalg::solve_dense(&flat, &jtr, 3) else {
                break;
            };
            x = x - Vec3::new(step[0], step[1], step[2]);
            if (step[0] * step[0] + step[1] * step[1] + step[2] * step[2]).sqrt() < 1e-14 {
                break;
            }
        }
        x
    }

    #[test]
    fn noisy_distances_match_gauss_newton_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let targets = random_cloud(50, 0.4, &mut rng);
        let anchors = random_cloud(200, 0.5, &mut rng);
        let exact = DistanceMatrix::from_clouds(&targets, &anchors);
        // +-1 mm uniform noise
        let noisy_values: Vec<f64> = exact
            .values()
            .iter()
            .map(|d| (d + (rng.random::<f64>() * 2.0 - 1.0) * 0.001).max(0.0))
            .collect();
        let noisy = DistanceMatrix::new(50, 200, noisy_values).unwrap();
        let (placed, _) = multilaterate_points(&noisy, &anchors).unwrap();
        for (i, (got, want)) in placed.points.iter().zip(&targets.points).enumerate() {
            // recovered within 5 mm of the truth
            assert!(
                got.distance(*want) < 5e-3,
                "point {i}: {}",
                got.distance(*want)
            );
            // and within 1 mm of the independent nonlinear solution
            let gn = gauss_newton_point(&anchors.points, noisy.row(i), *got);
            assert!(
                got.distance(gn) < 1e-3,
                "point {i} vs oracle: {}",
                got.distance(gn)
            );
        }
    }
}
