//! Robot mesh and point-cloud generation at a configuration.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geom::{sample_surface_with_rng, PointCloud, TriMesh, Vec3};
use crate::scalar::Real;

use super::{RobotConfig, RobotError, RobotModel};

/// Union robot mesh with the vertex span contributed by each link.
#[derive(Clone, Debug)]
pub struct RobotMesh<R> {
    pub mesh: TriMesh<R>,
    /// `(link index, vertex range in `mesh`)` for links with geometry,
    /// in link declaration order.
    pub link_spans: Vec<(usize, std::ops::Range<usize>)>,
}

impl<R: Real> RobotMesh<R> {
    /// Vertex range of a link, if it contributed geometry.
    pub fn span_of(&self, link: usize) -> Option<std::ops::Range<usize>> {
        self.link_spans
            .iter()
            .find(|(l, _)| *l == link)
            .map(|(_, r)| r.clone())
    }
}

/// A point cloud sampled once on the zero-configuration link meshes and
/// transported by forward kinematics, so point identity is stable across
/// configurations.
#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalCloud<R> {
    /// Link index per point.
    pub links: Vec<usize>,
    /// Link-local position per point.
    pub local: Vec<Vec3<R>>,
}

impl<R: Real> CanonicalCloud<R> {
    #[inline]
    pub fn len(&self) -> usize {
        self.local.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.local.is_empty()
    }

    /// Transport the canonical points to a configuration.
    pub fn at_config(
        &self,
        model: &RobotModel<R>,
        q: &RobotConfig<R>,
    ) -> Result<PointCloud<R>, RobotError> {
        let poses = model.fk(q)?;
        let points = self
            .links
            .iter()
            .zip(&self.local)
            .map(|(&link, p)| poses[link].apply(*p))
            .collect();
        Ok(PointCloud {
            points,
            source_faces: None,
        })
    }
}

impl<R: Real> RobotModel<R> {
    /// Union mesh of all link geometries at configuration `q`, vertices in
    /// link declaration order.
    pub fn robot_mesh_at(&self, q: &RobotConfig<R>) -> Result<TriMesh<R>, RobotError> {
        Ok(self.robot_mesh_spans(q)?.mesh)
    }

    /// As [`RobotModel::robot_mesh_at`], additionally reporting per-link
    /// vertex spans.
    pub fn robot_mesh_spans(&self, q: &RobotConfig<R>) -> Result<RobotMesh<R>, RobotError> {
        let poses = self.fk(q)?;
        let mut mesh = TriMesh::new(Vec::new(), Vec::new())?;
        let mut link_spans = Vec::new();
        for (idx, link) in self.links().iter().enumerate() {
            if let Some((_, _)) = &link.geometry {
                let Some(local) = &link.mesh else {
                    return Err(RobotError::MissingGeometry {
                        link: link.name.clone(),
                    });
                };
                let start = mesh.vertex_count();
                mesh.append(&local.transformed(&poses[idx]));
                link_spans.push((idx, start..mesh.vertex_count()));
            }
        }
        Ok(RobotMesh { mesh, link_spans })
    }

    /// Sample `n` points on the zero-configuration link meshes, allocated
    /// across links proportional to surface area (largest-remainder
    /// rounding) and drawn from a single seeded stream in link order.
    pub fn canonical_points(&self, n: usize, seed: u64) -> Result<CanonicalCloud<R>, RobotError> {
        let mut meshes: Vec<(usize, &TriMesh<R>)> = Vec::new();
        for (idx, link) in self.links().iter().enumerate() {
            if link.geometry.is_some() {
                let Some(mesh) = &link.mesh else {
                    return Err(RobotError::MissingGeometry {
                        link: link.name.clone(),
                    });
                };
                meshes.push((idx, mesh));
            }
        }
        let areas: Vec<f64> = meshes
            .iter()
            .map(|(_, m)| m.surface_area().to_f64().unwrap_or(0.0))
            .collect();
        let total: f64 = areas.iter().sum();
        if meshes.is_empty() || !(total > 0.0) {
            return Err(RobotError::Geom(crate::geom::GeomError::EmptyMesh));
        }
        // largest-remainder apportionment of n across links
        let mut counts: Vec<usize> = Vec::with_capacity(meshes.len());
        let mut fractions: Vec<(usize, f64)> = Vec::with_capacity(meshes.len());
        let mut assigned = 0usize;
        for (i, area) in areas.iter().enumerate() {
            let quota = n as f64 * area / total;
            let base = quota.floor() as usize;
            counts.push(base);
            assigned += base;
            fractions.push((i, quota - base as f64));
        }
        fractions.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        for k in 0..n.saturating_sub(assigned) {
            counts[fractions[k % fractions.len()].0] += 1;
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut links = Vec::with_capacity(n);
        let mut local = Vec::with_capacity(n);
        for ((idx, mesh), count) in meshes.iter().zip(&counts) {
            if *count == 0 {
                continue;
            }
            let cloud = sample_surface_with_rng(mesh, *count, &mut rng)?;
            links.extend(std::iter::repeat_n(*idx, *count));
            local.extend(cloud.points);
        }
        Ok(CanonicalCloud { links, local })
    }

    /// Robot point cloud at configuration `q`: canonical sampling
    /// transported by forward kinematics.
    pub fn robot_points_at(
        &self,
        q: &RobotConfig<R>,
        n: usize,
        seed: u64,
    ) -> Result<PointCloud<R>, RobotError> {
        self.canonical_points(n, seed)?.at_config(self, q)
    }
}
