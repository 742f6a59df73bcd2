use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::scalar::{real, Real};

use super::{GeomError, PointCloud, TriMesh};

/// Sample `n` points uniformly over the mesh surface: face selection by
/// cumulative-area inversion, position by uniform barycentric sampling.
/// Deterministic for a fixed seed.
pub fn sample_surface<R: Real>(
    mesh: &TriMesh<R>,
    n: usize,
    seed: u64,
) -> Result<PointCloud<R>, GeomError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_surface_with_rng(mesh, n, &mut rng)
}

/// As [`sample_surface`] but drawing from a caller-provided stream, so that
/// multi-mesh sampling can share one seeded generator.
pub fn sample_surface_with_rng<R: Real>(
    mesh: &TriMesh<R>,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<PointCloud<R>, GeomError> {
    if mesh.face_count() == 0 {
        return Err(GeomError::EmptyMesh);
    }
    // cumulative areas in f64 so the inversion is independent of R
    let mut cumulative = Vec::with_capacity(mesh.face_count());
    let mut total = 0.0f64;
    for f in 0..mesh.face_count() {
        total += mesh.face_area(f).to_f64().unwrap_or(0.0);
        cumulative.push(total);
    }
    if !(total > 0.0) {
        return Err(GeomError::ZeroArea);
    }

    let mut points = Vec::with_capacity(n);
    let mut faces = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random::<f64>() * total;
        let face = cumulative
            .partition_point(|&c| c <= u)
            .min(mesh.face_count() - 1);
        let r1: f64 = rng.random();
        let r2: f64 = rng.random();
        let su = r1.sqrt();
        let a = 1.0 - su;
        let b = su * (1.0 - r2);
        let c = su * r2;
        let [v0, v1, v2] = mesh.face_vertices(face);
        let p = v0 * real::<R>(a) + v1 * real::<R>(b) + v2 * real::<R>(c);
        points.push(p);
        faces.push(face);
    }
    Ok(PointCloud {
        points,
        source_faces: Some(faces),
    })
}
