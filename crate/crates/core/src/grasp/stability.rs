//! Quasi-static grasp stability under the six-direction disturbance
//! protocol: extract hand-object contacts, linearize friction cones, and
//! test wrench feasibility with a linear program per direction.
//!
//! The physical protocol this stands in for shakes the grasped object for a
//! fixed number of simulation steps and checks its displacement; here the
//! same question is answered statically: can nonnegative contact forces
//! inside the friction cones balance gravity plus the disturbance force?
//! The simulation-side constants are carried in the report metadata.

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use crate::geom::{nearest_distances, PointCloud, TriMesh, Vec3};
use crate::scalar::{real, Real};

/// A contact point on the object surface with its outward normal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Contact<R> {
    pub point: Vec3<R>,
    /// Unit normal pointing out of the object.
    pub normal: Vec3<R>,
}

/// Object vertices within `eps` of the robot mesh, clustered at radius
/// `2 * eps` (single linkage); each cluster yields one contact at its
/// centroid with the averaged outward vertex normal.
pub fn extract_contacts<R: Real>(
    robot_mesh: &TriMesh<R>,
    object: &TriMesh<R>,
    eps: R,
) -> Vec<Contact<R>> {
    if robot_mesh.vertex_count() == 0 || object.vertex_count() == 0 {
        return Vec::new();
    }
    let query = PointCloud::from_points(object.vertices().to_vec());
    let target = PointCloud::from_points(robot_mesh.vertices().to_vec());
    let Ok(nearest) = nearest_distances(&query, &target) else {
        return Vec::new();
    };
    let touching: Vec<usize> = (0..object.vertex_count())
        .filter(|&i| nearest[i].0 < eps)
        .collect();
    if touching.is_empty() {
        return Vec::new();
    }
    // single-linkage clustering at radius 2*eps via union-find
    let mut parent: Vec<usize> = (0..touching.len()).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut root = i;
        while parent[root] != root {
            root = parent[root];
        }
        let mut cur = i;
        while parent[cur] != root {
            let next = parent[cur];
            parent[cur] = root;
            cur = next;
        }
        root
    }
    let merge_radius = eps * real::<R>(2.0);
    for a in 0..touching.len() {
        for b in a + 1..touching.len() {
            let pa = object.vertices()[touching[a]];
            let pb = object.vertices()[touching[b]];
            if pa.distance(pb) <= merge_radius {
                let ra = find(&mut parent, a);
                let rb = find(&mut parent, b);
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let normals = object.vertex_normals_outward();
    let mut clusters: std::collections::BTreeMap<usize, (Vec3<R>, Vec3<R>, usize)> =
        std::collections::BTreeMap::new();
    for (local, &vertex) in touching.iter().enumerate() {
        let root = find(&mut parent, local);
        let entry = clusters
            .entry(root)
            .or_insert((Vec3::zero(), Vec3::zero(), 0));
        entry.0 = entry.0 + object.vertices()[vertex];
        entry.1 = entry.1 + normals[vertex];
        entry.2 += 1;
    }
    clusters
        .into_values()
        .map(|(sum_p, sum_n, count)| Contact {
            point: sum_p / R::from_usize(count).unwrap(),
            normal: sum_n
                .normalized()
                .unwrap_or(Vec3::new(R::zero(), R::zero(), R::one())),
        })
        .collect()
}

/// Parameters of the disturbance protocol.
#[derive(Clone, Copy, Debug)]
pub struct StabilityParams<R> {
    /// Object mass, kilograms.
    pub mass: R,
    /// Coulomb friction coefficient.
    pub friction: R,
    /// Disturbance acceleration scale; the disturbance force magnitude is
    /// `0.5 * mass * disturbance_scale` newtons (the literal protocol
    /// reading at scale 1, a gravity-relative one at 9.81).
    pub disturbance_scale: R,
    /// Friction cone linearization edge count (>= 4).
    pub cone_edges: usize,
    /// Gravitational acceleration, m/s^2.
    pub gravity: R,
}

impl<R: Real> Default for StabilityParams<R> {
    fn default() -> Self {
        Self {
            mass: R::one(),
            friction: real(0.5),
            disturbance_scale: R::one(),
            cone_edges: 8,
            gravity: real(9.81),
        }
    }
}

/// Outcome for one disturbance direction.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionCheck {
    /// `+x`, `-x`, `+y`, `-y`, `+z`, `-z`.
    pub label: &'static str,
    pub resisted: bool,
}

/// Simulation-protocol constants preserved as metadata: the dynamic test
/// this check substitutes runs 300 steps and passes when displacement stays
/// within 3 cm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProtocolMeta {
    pub sim_steps: u32,
    pub displacement_threshold_m: f64,
}

impl Default for ProtocolMeta {
    fn default() -> Self {
        Self {
            sim_steps: 300,
            displacement_threshold_m: 0.03,
        }
    }
}

/// Result of the six-direction check.
#[derive(Clone, Debug)]
pub struct StabilityReport<R> {
    pub directions: Vec<DirectionCheck>,
    pub contacts: Vec<Contact<R>>,
    pub friction: R,
    /// Disturbance force magnitude, newtons.
    pub disturbance_force: R,
    /// True iff all six directions are resisted.
    pub success: bool,
    pub protocol: ProtocolMeta,
}

const DIRECTIONS: [(&str, [f64; 3]); 6] = [
    ("+x", [1.0, 0.0, 0.0]),
    ("-x", [-1.0, 0.0, 0.0]),
    ("+y", [0.0, 1.0, 0.0]),
    ("-y", [0.0, -1.0, 0.0]),
    ("+z", [0.0, 0.0, 1.0]),
    ("-z", [0.0, 0.0, -1.0]),
];

/// Check whether the contact set can resist gravity plus a disturbance of
/// magnitude `0.5 * mass * disturbance_scale` applied at the centroid along
/// each of the six axis directions. Feasibility of nonnegative cone-edge
/// coefficients balancing the external wrench is decided by a linear
/// program; with no contacts every direction fails.
pub fn stability_check<R: Real>(
    contacts: &[Contact<R>],
    centroid: Vec3<R>,
    params: &StabilityParams<R>,
) -> StabilityReport<R> {
    let disturbance_force = real::<R>(0.5) * params.mass * params.disturbance_scale;
    let mut directions = Vec::with_capacity(6);
    let columns = wrench_columns(contacts, centroid, params);
    for (label, dir) in DIRECTIONS {
        let resisted = if columns.is_empty() {
            false
        } else {
            let fg = -params.gravity.to_f64().unwrap_or(9.81) * params.mass.to_f64().unwrap_or(1.0);
            let fd = disturbance_force.to_f64().unwrap_or(0.0);
            // contacts must supply the negated external wrench
            let b = [
                -(fd * dir[0]),
                -(fd * dir[1]),
                -(fg + fd * dir[2]),
                0.0,
                0.0,
                0.0,
            ];
            cone_feasible(&columns, b)
        };
        directions.push(DirectionCheck { label, resisted });
    }
    let success = directions.iter().all(|d| d.resisted);
    StabilityReport {
        directions,
        contacts: contacts.to_vec(),
        friction: params.friction,
        disturbance_force,
        success,
        protocol: ProtocolMeta::default(),
    }
}

/// Wrench-space columns (force, torque about the centroid) of every
/// linearized cone edge of every contact, in f64 for the LP backend.
fn wrench_columns<R: Real>(
    contacts: &[Contact<R>],
    centroid: Vec3<R>,
    params: &StabilityParams<R>,
) -> Vec<[f64; 6]> {
    let mu = params.friction.to_f64().unwrap_or(0.0).max(0.0);
    let m = params.cone_edges.max(4);
    let mut columns = Vec::with_capacity(contacts.len() * m);
    for c in contacts {
        // forces push into the object: cone axis is the inward normal
        let n_in = [
            -c.normal.x.to_f64().unwrap_or(0.0),
            -c.normal.y.to_f64().unwrap_or(0.0),
            -c.normal.z.to_f64().unwrap_or(0.0),
        ];
        let arm = [
            (c.point.x - centroid.x).to_f64().unwrap_or(0.0),
            (c.point.y - centroid.y).to_f64().unwrap_or(0.0),
            (c.point.z - centroid.z).to_f64().unwrap_or(0.0),
        ];
        let (t1, t2) = tangent_basis(n_in);
        for e in 0..m {
            let phi = 2.0 * std::f64::consts::PI * e as f64 / m as f64;
            let mut d = [0.0f64; 3];
            for k in 0..3 {
                d[k] = n_in[k] + mu * (phi.cos() * t1[k] + phi.sin() * t2[k]);
            }
            let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            if !(norm > 0.0) {
                continue;
            }
            for v in d.iter_mut() {
                *v /= norm;
            }
            let tau = cross3(arm, d);
            columns.push([d[0], d[1], d[2], tau[0], tau[1], tau[2]]);
        }
    }
    columns
}

/// Deterministic orthonormal tangent basis for a unit axis.
fn tangent_basis(axis: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let pick = if axis[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let t1 = cross3(axis, pick);
    let n = (t1[0] * t1[0] + t1[1] * t1[1] + t1[2] * t1[2])
        .sqrt()
        .max(1e-300);
    let t1 = [t1[0] / n, t1[1] / n, t1[2] / n];
    let t2 = cross3(axis, t1);
    (t1, t2)
}

fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Feasibility of `A x = b, x >= 0` over the wrench columns, solved as a
/// minimum-coefficient-sum linear program.
fn cone_feasible(columns: &[[f64; 6]], b: [f64; 6]) -> bool {
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = columns
        .iter()
        .map(|_| problem.add_var(1.0, (0.0, f64::INFINITY)))
        .collect();
    for row in 0..6 {
        let terms: Vec<_> = vars
            .iter()
            .enumerate()
            .map(|(c, &v)| (v, columns[c][row]))
            .collect();
        problem.add_constraint(&terms, ComparisonOp::Eq, b[row]);
    }
    problem.solve().is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::shapes;
    use crate::geom::RigidTransform;

    fn antipodal_cube_contacts() -> Vec<Contact<f64>> {
        vec![
            Contact {
                point: Vec3::new(0.5, 0.0, 0.0),
                normal: Vec3::new(1.0, 0.0, 0.0),
            },
            Contact {
                point: Vec3::new(-0.5, 0.0, 0.0),
                normal: Vec3::new(-1.0, 0.0, 0.0),
            },
        ]
    }

    #[test]
    fn antipodal_pinch_resists_all_six() {
        let params = StabilityParams {
            mass: 1.0,
            friction: 0.5,
            ..Default::default()
        };
        let report = stability_check(&antipodal_cube_contacts(), Vec3::zero(), &params);
        assert!(report.success, "{:?}", report.directions);
        assert_eq!(report.directions.len(), 6);
        assert!((report.disturbance_force - 0.5).abs() < 1e-12);
        assert_eq!(report.protocol.sim_steps, 300);
    }

    #[test]
    fn frictionless_single_contact_fails() {
        let contacts = vec![Contact {
            point: Vec3::new(0.0, 0.0, 0.5),
            normal: Vec3::new(0.0, 0.0, 1.0),
        }];
        let params = StabilityParams {
            friction: 0.0,
            ..Default::default()
        };
        let report = stability_check(&contacts, Vec3::<f64>::zero(), &params);
        assert!(!report.success);
        assert!(report.directions.iter().any(|d| !d.resisted));
    }

    #[test]
    fn no_contacts_fails_every_direction() {
        let report = stability_check::<f64>(&[], Vec3::zero(), &StabilityParams::default());
        assert!(!report.success);
        assert!(report.directions.iter().all(|d| !d.resisted));
    }

    #[test]
    fn three_contact_sphere_friction_threshold() {
        // contacts at 120 degree spacing on the equator of a unit sphere:
        // with friction the (unbounded-force) squeeze balances gravity, at
        // zero friction nothing can produce the vertical component
        let contacts: Vec<Contact<f64>> = (0..3)
            .map(|k| {
                let phi = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
                let n = Vec3::new(phi.cos(), phi.sin(), 0.0);
                Contact {
                    point: n,
                    normal: n,
                }
            })
            .collect();
        let high = StabilityParams {
            friction: 0.8,
            ..Default::default()
        };
        let none = StabilityParams {
            friction: 0.0,
            ..Default::default()
        };
        assert!(stability_check(&contacts, Vec3::zero(), &high).success);
        assert!(!stability_check(&contacts, Vec3::zero(), &none).success);
    }

    #[test]
    fn friction_increase_never_flips_to_failure() {
        let contacts = antipodal_cube_contacts();
        let mut previous: Option<Vec<bool>> = None;
        for mu_step in 0..10 {
            let mu = 0.05 + 0.1 * mu_step as f64;
            let params = StabilityParams {
                friction: mu,
                ..Default::default()
            };
            let report = stability_check(&contacts, Vec3::zero(), &params);
            let flags: Vec<bool> = report.directions.iter().map(|d| d.resisted).collect();
            if let Some(prev) = &previous {
                for (was, now) in prev.iter().zip(&flags) {
                    assert!(!(*was && !*now), "resisted direction flipped at mu={mu}");
                }
            }
            previous = Some(flags);
        }
    }

    #[test]
    fn separated_meshes_have_no_contacts() {
        let a = shapes::unit_cube::<f64>();
        let b = a.transformed(&RigidTransform::from_translation(Vec3::new(3.0, 0.0, 0.0)));
        assert!(extract_contacts(&a, &b, 0.002).is_empty());
    }

    #[test]
    fn sphere_touching_cube_face_gets_face_normal() {
        // fingertip sphere hovers just off the +x face of a subdivided cube
        let cube = shapes::cuboid_grid::<f64>(Vec3::new(1.0, 1.0, 1.0), 10);
        let sphere = shapes::uv_sphere::<f64>(0.05).transformed(&RigidTransform::from_translation(
            Vec3::new(0.5505, 0.0, 0.0),
        ));
        let contacts = extract_contacts(&sphere, &cube, 0.002);
        assert!(!contacts.is_empty());
        for c in &contacts {
            assert!(
                c.normal.dot(Vec3::new(1.0, 0.0, 0.0)) > 1.0 - 1e-6,
                "{:?}",
                c.normal
            );
            assert!((c.point.x - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn pinch_produces_two_clusters_matching_flood_fill_oracle() {
        // two small spheres touching opposite faces of a subdivided cube
        let cube = shapes::cuboid_grid::<f64>(Vec3::new(1.0, 1.0, 1.0), 10);
        let tip = shapes::uv_sphere::<f64>(0.05);
        let mut robot = tip.transformed(&RigidTransform::from_translation(Vec3::new(
            0.5505, 0.0, 0.0,
        )));
        robot.append(
            &tip.transformed(&RigidTransform::from_translation(Vec3::new(
                -0.5505, 0.0, 0.0,
            ))),
        );
        let eps = 0.002;
        let contacts = extract_contacts(&robot, &cube, eps);
        // independent density-based clustering oracle: BFS flood fill over
        // touching vertices with the same 2*eps radius
        let query = PointCloud::from_points(cube.vertices().to_vec());
        let target = PointCloud::from_points(robot.vertices().to_vec());
        let nearest = nearest_distances(&query, &target).unwrap();
        let touching: Vec<usize> = (0..cube.vertex_count())
            .filter(|&i| nearest[i].0 < eps)
            .collect();
        let mut visited = vec![false; touching.len()];
        let mut oracle_clusters = 0;
        for start in 0..touching.len() {
            if visited[start] {
                continue;
            }
            oracle_clusters += 1;
            let mut queue = vec![start];
            visited[start] = true;
            while let Some(cur) = queue.pop() {
                for next in 0..touching.len() {
                    if !visited[next] {
                        let pa = cube.vertices()[touching[cur]];
                        let pb = cube.vertices()[touching[next]];
                        if pa.distance(pb) <= 2.0 * eps {
                            visited[next] = true;
                            queue.push(next);
                        }
                    }
                }
            }
        }
        assert_eq!(contacts.len(), oracle_clusters);
        assert_eq!(
            contacts.len(),
            2,
            "pinch should produce two contact clusters"
        );
    }

    #[test]
    fn lp_agrees_with_subset_enumeration_oracle() {
        // Caratheodory-style oracle: b is in the cone iff some subset of at
        // most 6 columns combines it with nonnegative coefficients
        fn oracle(columns: &[[f64; 6]], b: [f64; 6]) -> bool {
            let n = columns.len();
            let mut idx = Vec::new();
            subsets(n, 6, &mut idx, &mut |subset| {
                let k = subset.len();
                let mut ata = vec![0.0f64; k * k];
                let mut atb = vec![0.0f64; k];
                for i in 0..k {
                    for j in 0..k {
                        let mut s = 0.0;
                        for row in 0..6 {
                            s += columns[subset[i]][row] * columns[subset[j]][row];
                        }
                        ata[i * k + j] = s;
                    }
                    let mut s = 0.0;
                    for row in 0..6 {
                        s += columns[subset[i]][row] * b[row];
                    }
                    atb[i] = s;
                }
                let Some(lambda) = crate::linalg::solve_dense(&ata, &atb, k) else {
                    return false;
                };
                if lambda.iter().any(|l| *l < -1e-9) {
                    return false;
                }
                // verify the reconstruction
                let mut err = 0.0;
                for row in 0..6 {
                    let mut s = 0.0;
                    for i in 0..k {
                        s += columns[subset[i]][row] * lambda[i];
                    }
                    err += (s - b[row]).abs();
                }
                err < 1e-7 * (1.0 + b.iter().map(|v| v.abs()).sum::<f64>())
            })
        }

        fn subsets(
            n: usize,
            max_k: usize,
            current: &mut Vec<usize>,
            check: &mut impl FnMut(&[usize]) -> bool,
        ) -> bool {
            if !current.is_empty() && check(current) {
                return true;
            }
            if current.len() == max_k {
                return false;
            }
            let start = current.last().map(|l| l + 1).unwrap_or(0);
            for next in start..n {
                current.push(next);
                if subsets(n, max_k, current, check) {
                    return true;
                }
                current.pop();
            }
            false
        }

        // fixtures with <= 3 contacts and 6 cone edges keep the oracle fast
        let fixture_sets: Vec<(Vec<Contact<f64>>, f64)> = vec![
            (antipodal_cube_contacts(), 0.5),
            (antipodal_cube_contacts(), 0.05),
            (
                vec![Contact {
                    point: Vec3::new(0.0, 0.0, 0.5),
                    normal: Vec3::new(0.0, 0.0, 1.0),
                }],
                0.0,
            ),
            (
                (0..3)
                    .map(|k| {
                        let phi = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
                        let n = Vec3::new(phi.cos(), phi.sin(), 0.0);
                        Contact {
                            point: n,
                            normal: n,
                        }
                    })
                    .collect(),
                0.6,
            ),
        ];
        for (contacts, mu) in fixture_sets {
            let params = StabilityParams {
                friction: mu,
                cone_edges: 6,
                ..Default::default()
            };
            let columns = wrench_columns(&contacts, Vec3::zero(), &params);
            for (_, dir) in DIRECTIONS {
                let fd = 0.5;
                let fg = -9.81;
                let b = [
                    -(fd * dir[0]),
                    -(fd * dir[1]),
                    -(fg + fd * dir[2]),
                    0.0,
                    0.0,
                    0.0,
                ];
                let lp = cone_feasible(&columns, b);
                let brute = oracle(&columns, b);
                assert_eq!(lp, brute, "contacts={} mu={mu} dir={dir:?}", contacts.len());
            }
        }
    }
}
