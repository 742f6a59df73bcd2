use crate::scalar::{real, Real};

use super::{GeomError, RigidTransform, Vec3};

/// Indexed triangle mesh. Faces hold vertex indices; every face must
/// reference three distinct, in-range vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct TriMesh<R> {
    vertices: Vec<Vec3<R>>,
    faces: Vec<[usize; 3]>,
}

impl<R: Real> TriMesh<R> {
    pub fn new(vertices: Vec<Vec3<R>>, faces: Vec<[usize; 3]>) -> Result<Self, GeomError> {
        for (i, v) in vertices.iter().enumerate() {
            if !v.is_finite() {
                return Err(GeomError::NonFiniteVertex { index: i });
            }
        }
        for (f, idx) in faces.iter().enumerate() {
            for &i in idx {
                if i >= vertices.len() {
                    return Err(GeomError::FaceIndexOutOfBounds {
                        face: f,
                        index: i,
                        count: vertices.len(),
                    });
                }
            }
            if idx[0] == idx[1] || idx[1] == idx[2] || idx[0] == idx[2] {
                return Err(GeomError::DegenerateFace { face: f });
            }
        }
        Ok(Self { vertices, faces })
    }

    #[inline]
    pub fn vertices(&self) -> &[Vec3<R>] {
        &self.vertices
    }

    #[inline]
    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    #[inline]
    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn face_vertices(&self, f: usize) -> [Vec3<R>; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn face_area(&self, f: usize) -> R {
        let [a, b, c] = self.face_vertices(f);
        (b - a).cross(c - a).norm() * real::<R>(0.5)
    }

    /// Unit face normal; zero vector for area-degenerate faces.
    pub fn face_normal(&self, f: usize) -> Vec3<R> {
        let [a, b, c] = self.face_vertices(f);
        (b - a).cross(c - a).normalized().unwrap_or_else(Vec3::zero)
    }

    pub fn surface_area(&self) -> R {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Mean of the vertex positions.
    pub fn centroid(&self) -> Vec3<R> {
        let mut c = Vec3::zero();
        for v in &self.vertices {
            c = c + *v;
        }
        c / R::from_usize(self.vertices.len().max(1)).unwrap()
    }

    pub fn transformed(&self, t: &RigidTransform<R>) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| t.apply(*v)).collect(),
            faces: self.faces.clone(),
        }
    }

    /// Uniformly scale vertices about a pivot point.
    pub fn scaled_about(&self, pivot: Vec3<R>, scale: R) -> Self {
        Self {
            vertices: self
                .vertices
                .iter()
                .map(|v| pivot + (*v - pivot) * scale)
                .collect(),
            faces: self.faces.clone(),
        }
    }

    /// Append another mesh, reindexing its faces. Vertex order is this mesh's
    /// vertices followed by the other's.
    pub fn append(&mut self, other: &Self) {
        let base = self.vertices.len();
        self.vertices.extend_from_slice(&other.vertices);
        self.faces.extend(
            other
                .faces
                .iter()
                .map(|f| [f[0] + base, f[1] + base, f[2] + base]),
        );
    }

    /// Per-vertex normals: area-weighted average of incident face normals,
    /// normalized, oriented outward by majority vote against the centroid.
    pub fn vertex_normals_outward(&self) -> Vec<Vec3<R>> {
        let mut normals = vec![Vec3::zero(); self.vertices.len()];
        for f in 0..self.faces.len() {
            let [a, b, c] = self.face_vertices(f);
            // cross product length is twice the area, so this is area-weighted
            let weighted = (b - a).cross(c - a);
            for &i in &self.faces[f] {
                normals[i] = normals[i] + weighted;
            }
        }
        let centroid = self.centroid();
        let mut outward_votes = 0usize;
        let mut total_votes = 0usize;
        for (i, n) in normals.iter().enumerate() {
            if n.norm_squared() > R::zero() {
                total_votes += 1;
                if n.dot(self.vertices[i] - centroid) > R::zero() {
                    outward_votes += 1;
                }
            }
        }
        let flip = total_votes > 0 && outward_votes * 2 < total_votes;
        normals
            .into_iter()
            .map(|n| {
                let n = if flip { -n } else { n };
                n.normalized().unwrap_or_else(Vec3::zero)
            })
            .collect()
    }

    /// Axis-aligned bounds, `None` for an empty vertex set.
    pub fn bounds(&self) -> Option<(Vec3<R>, Vec3<R>)> {
        let first = *self.vertices.first()?;
        let mut lo = first;
        let mut hi = first;
        for v in &self.vertices[1..] {
            lo = lo.min_componentwise(*v);
            hi = hi.max_componentwise(*v);
        }
        Some((lo, hi))
    }
}

/// Deterministic tessellations of primitive solids, all centered at the
/// origin with outward-oriented faces.
pub mod shapes {
    use super::*;

    /// Axis-aligned box with the given full extents.
    pub fn cuboid<R: Real>(size: Vec3<R>) -> TriMesh<R> {
        let h = size * real::<R>(0.5);
        let v = |sx: f64, sy: f64, sz: f64| {
            Vec3::new(
                h.x * real::<R>(sx),
                h.y * real::<R>(sy),
                h.z * real::<R>(sz),
            )
        };
        let vertices = vec![
            v(-1.0, -1.0, -1.0),
            v(1.0, -1.0, -1.0),
            v(1.0, 1.0, -1.0),
            v(-1.0, 1.0, -1.0),
            v(-1.0, -1.0, 1.0),
            v(1.0, -1.0, 1.0),
            v(1.0, 1.0, 1.0),
            v(-1.0, 1.0, 1.0),
        ];
        let faces = vec![
            [0, 2, 1],
            [0, 3, 2], // bottom (-z)
            [4, 5, 6],
            [4, 6, 7], // top (+z)
            [0, 1, 5],
            [0, 5, 4], // -y
            [2, 3, 7],
            [2, 7, 6], // +y
            [1, 2, 6],
            [1, 6, 5], // +x
            [3, 0, 4],
            [3, 4, 7], // -x
        ];
        TriMesh::new(vertices, faces).expect("cuboid tessellation is valid")
    }

    /// Unit cube (edge length 1).
    pub fn unit_cube<R: Real>() -> TriMesh<R> {
        cuboid(Vec3::new(R::one(), R::one(), R::one()))
    }

    /// Axis-aligned box with each face subdivided into a `divs x divs` grid.
    /// Face grids do not share edge vertices; face interiors carry exact
    /// face normals.
    pub fn cuboid_grid<R: Real>(size: Vec3<R>, divs: usize) -> TriMesh<R> {
        let divs = divs.max(1);
        let h = size * real::<R>(0.5);
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        // (axis u, axis v, fixed axis, sign) per face
        let layouts: [(usize, usize, usize, f64); 6] = [
            (0, 1, 2, 1.0),
            (1, 0, 2, -1.0),
            (1, 2, 0, 1.0),
            (2, 1, 0, -1.0),
            (2, 0, 1, 1.0),
            (0, 2, 1, -1.0),
        ];
        let half = [h.x, h.y, h.z];
        for (ua, va, fa, sign) in layouts {
            let base = vertices.len();
            for i in 0..=divs {
                for j in 0..=divs {
                    let fu = real::<R>(2.0 * i as f64 / divs as f64 - 1.0);
                    let fv = real::<R>(2.0 * j as f64 / divs as f64 - 1.0);
                    let mut coord = [R::zero(); 3];
                    coord[ua] = half[ua] * fu;
                    coord[va] = half[va] * fv;
                    coord[fa] = half[fa] * real::<R>(sign);
                    vertices.push(Vec3::new(coord[0], coord[1], coord[2]));
                }
            }
            let at = |i: usize, j: usize| base + i * (divs + 1) + j;
            for i in 0..divs {
                for j in 0..divs {
                    faces.push([at(i, j), at(i + 1, j), at(i + 1, j + 1)]);
                    faces.push([at(i, j), at(i + 1, j + 1), at(i, j + 1)]);
                }
            }
        }
        TriMesh::new(vertices, faces).expect("cuboid grid tessellation is valid")
    }

    /// UV sphere with fixed 20x20 grid resolution.
    pub fn uv_sphere<R: Real>(radius: R) -> TriMesh<R> {
        sphere_grid(radius, 20, 20)
    }

    pub(crate) fn sphere_grid<R: Real>(radius: R, rings: usize, segments: usize) -> TriMesh<R> {
        let mut vertices = Vec::new();
        // poles as single vertices, interior rings as full circles
        vertices.push(Vec3::new(R::zero(), R::zero(), radius));
        for r in 1..rings {
            let theta = R::PI() * R::from_usize(r).unwrap() / R::from_usize(rings).unwrap();
            let (st, ct) = (theta.sin(), theta.cos());
            for s in 0..segments {
                let phi = real::<R>(2.0) * R::PI() * R::from_usize(s).unwrap()
                    / R::from_usize(segments).unwrap();
                vertices.push(Vec3::new(
                    radius * st * phi.cos(),
                    radius * st * phi.sin(),
                    radius * ct,
                ));
            }
        }
        vertices.push(Vec3::new(R::zero(), R::zero(), -radius));
        let south = vertices.len() - 1;
        let ring = |r: usize, s: usize| 1 + (r - 1) * segments + (s % segments);

        let mut faces = Vec::new();
        for s in 0..segments {
            faces.push([0, ring(1, s), ring(1, s + 1)]);
        }
        for r in 1..rings - 1 {
            for s in 0..segments {
                let a = ring(r, s);
                let b = ring(r, s + 1);
                let c = ring(r + 1, s);
                let d = ring(r + 1, s + 1);
                faces.push([a, c, d]);
                faces.push([a, d, b]);
            }
        }
        for s in 0..segments {
            faces.push([south, ring(rings - 1, s + 1), ring(rings - 1, s)]);
        }
        TriMesh::new(vertices, faces).expect("sphere tessellation is valid")
    }

    /// Closed cylinder along +z with fixed 24-segment resolution.
    pub fn cylinder<R: Real>(radius: R, length: R) -> TriMesh<R> {
        cylinder_grid(radius, length, 24, 1)
    }

    /// Closed cylinder along +z with configurable tessellation (used where a
    /// denser wall is needed for vertex-based contact queries).
    pub fn cylinder_grid<R: Real>(
        radius: R,
        length: R,
        segments: usize,
        height_divs: usize,
    ) -> TriMesh<R> {
        let half = length * real::<R>(0.5);
        let mut vertices = Vec::new();
        for h in 0..=height_divs {
            let z =
                -half + length * R::from_usize(h).unwrap() / R::from_usize(height_divs).unwrap();
            for s in 0..segments {
                let phi = real::<R>(2.0) * R::PI() * R::from_usize(s).unwrap()
                    / R::from_usize(segments).unwrap();
                vertices.push(Vec3::new(radius * phi.cos(), radius * phi.sin(), z));
            }
        }
        let bottom_center = vertices.len();
        vertices.push(Vec3::new(R::zero(), R::zero(), -half));
        let top_center = vertices.len();
        vertices.push(Vec3::new(R::zero(), R::zero(), half));

        let idx = |h: usize, s: usize| h * segments + (s % segments);
        let mut faces = Vec::new();
        for h in 0..height_divs {
            for s in 0..segments {
                let a = idx(h, s);
                let b = idx(h, s + 1);
                let c = idx(h + 1, s);
                let d = idx(h + 1, s + 1);
                faces.push([a, b, d]);
                faces.push([a, d, c]);
            }
        }
        for s in 0..segments {
            faces.push([bottom_center, idx(0, s + 1), idx(0, s)]);
            faces.push([top_center, idx(height_divs, s), idx(height_divs, s + 1)]);
        }
        TriMesh::new(vertices, faces).expect("cylinder tessellation is valid")
    }
}
