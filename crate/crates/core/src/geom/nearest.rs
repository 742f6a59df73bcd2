use std::collections::HashMap;

use crate::scalar::{real, Real};

use super::{GeomError, PointCloud, Vec3};

/// Distance and target index of a nearest-point query.
pub type NearestIndex<R> = (R, usize);

/// Threshold below which queries scan the target directly.
const BRUTE_FORCE_LIMIT: usize = 64;

/// For each query point, the exact minimum Euclidean distance over all
/// target points and the achieving index (ties broken toward the lowest
/// index). Accelerated by a uniform voxel grid; results are identical to a
/// brute-force scan.
pub fn nearest_distances<R: Real>(
    query: &PointCloud<R>,
    target: &PointCloud<R>,
) -> Result<Vec<NearestIndex<R>>, GeomError> {
    let index = NearestNeighbors::build(&target.points)?;
    Ok(query.points.iter().map(|q| index.nearest(*q)).collect())
}

/// Reusable nearest-neighbor index over a fixed target point set. Queries
/// return exactly what a brute-force scan with lowest-index tie-breaking
/// returns.
pub struct NearestNeighbors<R> {
    points: Vec<Vec3<R>>,
    accel: Accel<R>,
}

enum Accel<R> {
    Brute,
    Grid(VoxelGrid<R>),
}

impl<R: Real> NearestNeighbors<R> {
    pub fn build(points: &[Vec3<R>]) -> Result<Self, GeomError> {
        if points.is_empty() {
            return Err(GeomError::EmptyTarget);
        }
        let accel = if points.len() < BRUTE_FORCE_LIMIT {
            Accel::Brute
        } else {
            match VoxelGrid::build(points) {
                Some(grid) => Accel::Grid(grid),
                None => Accel::Brute,
            }
        };
        Ok(Self {
            points: points.to_vec(),
            accel,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn nearest(&self, q: Vec3<R>) -> NearestIndex<R> {
        match &self.accel {
            Accel::Brute => scan_all(q, &self.points),
            Accel::Grid(grid) => grid.nearest(q, &self.points),
        }
    }
}

fn scan_all<R: Real>(q: Vec3<R>, target: &[Vec3<R>]) -> NearestIndex<R> {
    let mut best_d2 = R::infinity();
    let mut best_idx = 0usize;
    for (i, t) in target.iter().enumerate() {
        let dx = q.x - t.x;
        let dy = q.y - t.y;
        let dz = q.z - t.z;
        let d2 = dx * dx + dy * dy + dz * dz;
        if d2 < best_d2 {
            best_d2 = d2;
            best_idx = i;
        }
    }
    (best_d2.sqrt(), best_idx)
}

/// Uniform voxel grid in CSR layout over the target bounds. Cells outside
/// the dense index bound fall back to a hash map of overflow cells; queries
/// expand Chebyshev shells until no closer cell can exist.
struct VoxelGrid<R> {
    origin: Vec3<R>,
    cell: R,
    dims: [i64; 3],
    starts: Vec<u32>,
    entries: Vec<u32>,
    /// Points whose cells fall outside the dense bound (degenerate spreads).
    overflow: HashMap<(i64, i64, i64), Vec<u32>>,
}

impl<R: Real> VoxelGrid<R> {
    fn build(points: &[Vec3<R>]) -> Option<Self> {
        let mut lo = points[0];
        let mut hi = points[0];
        for p in points {
            lo = lo.min_componentwise(*p);
            hi = hi.max_componentwise(*p);
        }
        let diag = (hi - lo).norm();
        if !(diag > R::zero()) || !diag.is_finite() {
            return None;
        }
        let n = R::from_usize(points.len()).unwrap();
        let cell = diag / n.powf(real::<R>(1.0 / 3.0));
        let extent = hi - lo;
        let dim_of = |e: R| -> i64 { (e / cell).floor().to_i64().unwrap_or(0) + 1 };
        let dims = [dim_of(extent.x), dim_of(extent.y), dim_of(extent.z)];
        let cell_count = dims[0].checked_mul(dims[1])?.checked_mul(dims[2])?;
        let budget = (points.len() as i64 * 8).max(4096);
        if cell_count > budget {
            return None;
        }
        let origin = lo;
        let key_of = |p: Vec3<R>| -> (i64, i64, i64) {
            let c = |v: R| v.floor().to_i64().unwrap_or(0);
            (
                c((p.x - origin.x) / cell),
                c((p.y - origin.y) / cell),
                c((p.z - origin.z) / cell),
            )
        };
        let flat = |k: (i64, i64, i64)| -> Option<usize> {
            if k.0 < 0 || k.1 < 0 || k.2 < 0 || k.0 >= dims[0] || k.1 >= dims[1] || k.2 >= dims[2] {
                None
            } else {
                Some(((k.0 * dims[1] + k.1) * dims[2] + k.2) as usize)
            }
        };
        // CSR fill: count, prefix, place (keeps point index order per cell)
        let mut counts = vec![0u32; cell_count as usize];
        let mut overflow: HashMap<(i64, i64, i64), Vec<u32>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            match flat(key_of(*p)) {
                Some(c) => counts[c] += 1,
                None => overflow.entry(key_of(*p)).or_default().push(i as u32),
            }
        }
        let mut starts = vec![0u32; cell_count as usize + 1];
        for c in 0..cell_count as usize {
            starts[c + 1] = starts[c] + counts[c];
        }
        let mut cursor = starts.clone();
        let mut entries = vec![0u32; starts[cell_count as usize] as usize];
        for (i, p) in points.iter().enumerate() {
            if let Some(c) = flat(key_of(*p)) {
                entries[cursor[c] as usize] = i as u32;
                cursor[c] += 1;
            }
        }
        Some(Self {
            origin,
            cell,
            dims,
            starts,
            entries,
            overflow,
        })
    }

    #[inline]
    fn key_of(&self, p: Vec3<R>) -> (i64, i64, i64) {
        let c = |v: R| v.floor().to_i64().unwrap_or(0);
        (
            c((p.x - self.origin.x) / self.cell),
            c((p.y - self.origin.y) / self.cell),
            c((p.z - self.origin.z) / self.cell),
        )
    }

    fn nearest(&self, q: Vec3<R>, points: &[Vec3<R>]) -> NearestIndex<R> {
        let (cx, cy, cz) = self.key_of(q);
        // seed with point 0 so the geometric termination bound is finite
        let d0 = {
            let t = points[0];
            let dx = q.x - t.x;
            let dy = q.y - t.y;
            let dz = q.z - t.z;
            dx * dx + dy * dy + dz * dz
        };
        let mut best = (d0, 0usize);
        fn consider<R: Real>(points: &[Vec3<R>], q: Vec3<R>, i: u32, best: &mut (R, usize)) {
            let t = points[i as usize];
            let dx = q.x - t.x;
            let dy = q.y - t.y;
            let dz = q.z - t.z;
            let d2 = dx * dx + dy * dy + dz * dz;
            if d2 < best.0 || (d2 == best.0 && (i as usize) < best.1) {
                *best = (d2, i as usize);
            }
        }
        // far queries would need huge shells; a direct scan is cheaper and
        // exact
        let budget = 4 * self.dims.iter().max().copied().unwrap_or(1) + 64;
        let mut terminated = false;
        let mut shell: i64 = 0;
        while shell <= budget {
            // any cell at Chebyshev distance k holds points no closer than
            // (k-1) * cell; stop once that bound exceeds the best distance
            let bound = R::from_i64(shell - 1).unwrap() * self.cell;
            if bound > R::zero() && bound * bound > best.0 {
                terminated = true;
                break;
            }
            self.for_shell(cx, cy, cz, shell, |key| {
                if key.0 >= 0
                    && key.1 >= 0
                    && key.2 >= 0
                    && key.0 < self.dims[0]
                    && key.1 < self.dims[1]
                    && key.2 < self.dims[2]
                {
                    let c = ((key.0 * self.dims[1] + key.1) * self.dims[2] + key.2) as usize;
                    for &i in &self.entries[self.starts[c] as usize..self.starts[c + 1] as usize] {
                        consider(points, q, i, &mut best);
                    }
                } else if !self.overflow.is_empty() {
                    if let Some(indices) = self.overflow.get(&key) {
                        for &i in indices {
                            consider(points, q, i, &mut best);
                        }
                    }
                }
            });
            shell += 1;
        }
        if !terminated {
            return scan_all(q, points);
        }
        (best.0.sqrt(), best.1)
    }

    /// Visit all cell keys at exactly Chebyshev distance `k` from the center.
    fn for_shell(&self, cx: i64, cy: i64, cz: i64, k: i64, mut f: impl FnMut((i64, i64, i64))) {
        if k == 0 {
            f((cx, cy, cz));
            return;
        }
        for dx in -k..=k {
            for dy in -k..=k {
                if dx.abs() == k || dy.abs() == k {
                    for dz in -k..=k {
                        f((cx + dx, cy + dy, cz + dz));
                    }
                } else {
                    f((cx + dx, cy + dy, cz - k));
                    f((cx + dx, cy + dy, cz + k));
                }
            }
        }
    }
}
