//! Small dense linear-algebra kernels used by the solvers: fixed-size
//! Gaussian elimination, symmetric Jacobi eigendecomposition, a 3x3 SVD,
//! and a Cholesky solve for the damped least-squares systems.

use crate::scalar::{real, Real};

/// Solve `a * x = b` for a small square system by Gaussian elimination with
/// partial pivoting. Returns `None` when the matrix is singular to working
/// precision.
pub fn solve_dense<R: Real>(a: &[R], b: &[R], n: usize) -> Option<Vec<R>> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let mut m = a.to_vec();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let mut pivot = col;
        let mut best = m[col * n + col].abs();
        for row in col + 1..n {
            let v = m[row * n + col].abs();
            if v > best {
                best = v;
                pivot = row;
            }
        }
        if best <= R::epsilon() * real::<R>(64.0) * scale_of(&m, n) {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                m.swap(col * n + k, pivot * n + k);
            }
            rhs.swap(col, pivot);
        }
        let d = m[col * n + col];
        for row in col + 1..n {
            let f = m[row * n + col] / d;
            if f == R::zero() {
                continue;
            }
            for k in col..n {
                let v = m[col * n + k];
                m[row * n + k] -= f * v;
            }
            let v = rhs[col];
            rhs[row] -= f * v;
        }
    }
    let mut x = vec![R::zero(); n];
    for row in (0..n).rev() {
        let mut s = rhs[row];
        for k in row + 1..n {
            s -= m[row * n + k] * x[k];
        }
        x[row] = s / m[row * n + row];
    }
    Some(x)
}

fn scale_of<R: Real>(m: &[R], n: usize) -> R {
    let mut s = R::zero();
    for v in m.iter().take(n * n) {
        let a = v.abs();
        if a > s {
            s = a;
        }
    }
    if s == R::zero() {
        R::one()
    } else {
        s
    }
}

/// Solve a symmetric positive-definite system `a * x = b` (row-major `n x n`)
/// by Cholesky factorization. Returns `None` when the matrix is not positive
/// definite to working precision.
pub fn solve_spd<R: Real>(a: &[R], b: &[R], n: usize) -> Option<Vec<R>> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let mut l = vec![R::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= R::zero() {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    // forward substitution L y = b
    let mut y = vec![R::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    // back substitution L^T x = y
    let mut x = vec![R::zero(); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    Some(x)
}

/// Eigendecomposition of a symmetric 3x3 matrix by cyclic Jacobi rotations.
/// Returns `(eigenvalues, eigenvectors)` with eigenvectors as columns,
/// sorted by descending eigenvalue.
pub fn sym_eigen3<R: Real>(m: [[R; 3]; 3]) -> ([R; 3], [[R; 3]; 3]) {
    let mut a = m;
    let mut v = identity3::<R>();
    for _ in 0..64 {
        // largest off-diagonal element
        let mut p = 0;
        let mut q = 1;
        let mut off = a[0][1].abs();
        if a[0][2].abs() > off {
            p = 0;
            q = 2;
            off = a[0][2].abs();
        }
        if a[1][2].abs() > off {
            p = 1;
            q = 2;
            off = a[1][2].abs();
        }
        let diag_scale = a[0][0].abs().max(a[1][1].abs()).max(a[2][2].abs());
        if off <= R::epsilon() * diag_scale.max(R::min_positive_value()) {
            break;
        }
        // Jacobi rotation annihilating a[p][q]
        let app = a[p][p];
        let aqq = a[q][q];
        let apq = a[p][q];
        let theta = (aqq - app) / (real::<R>(2.0) * apq);
        let t = {
            let s = if theta >= R::zero() {
                R::one()
            } else {
                -R::one()
            };
            s / (theta.abs() + (theta * theta + R::one()).sqrt())
        };
        let c = R::one() / (t * t + R::one()).sqrt();
        let s = t * c;
        for k in 0..3 {
            let akp = a[k][p];
            let akq = a[k][q];
            a[k][p] = c * akp - s * akq;
            a[k][q] = s * akp + c * akq;
        }
        for k in 0..3 {
            let apk = a[p][k];
            let aqk = a[q][k];
            a[p][k] = c * apk - s * aqk;
            a[q][k] = s * apk + c * aqk;
        }
        for k in 0..3 {
            let vkp = v[k][p];
            let vkq = v[k][q];
            v[k][p] = c * vkp - s * vkq;
            v[k][q] = s * vkp + c * vkq;
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[j][j].partial_cmp(&a[i][i]).unwrap());
    let vals = [
        a[order[0]][order[0]],
        a[order[1]][order[1]],
        a[order[2]][order[2]],
    ];
    let mut vecs = [[R::zero(); 3]; 3];
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..3 {
            vecs[k][dst] = v[k][src];
        }
    }
    (vals, vecs)
}

/// Singular value decomposition of a 3x3 matrix: `m = u * diag(s) * v^T`,
/// singular values in descending order, `u` and `v` orthonormal (not
/// necessarily proper rotations).
pub fn svd3<R: Real>(m: [[R; 3]; 3]) -> ([[R; 3]; 3], [R; 3], [[R; 3]; 3]) {
    // eigen of m^T m gives v and singular values
    let mtm = mat3_mul(mat3_transpose(m), m);
    let (vals, v) = sym_eigen3(mtm);
    let s = [
        vals[0].max(R::zero()).sqrt(),
        vals[1].max(R::zero()).sqrt(),
        vals[2].max(R::zero()).sqrt(),
    ];
    // u columns = m * v_i / s_i, re-orthonormalized for small singular values
    let mut u = [[R::zero(); 3]; 3];
    let tiny = s[0] * R::epsilon() * real::<R>(64.0);
    for i in 0..3 {
        let col = [v[0][i], v[1][i], v[2][i]];
        let mv = mat3_apply(m, col);
        let n = (mv[0] * mv[0] + mv[1] * mv[1] + mv[2] * mv[2]).sqrt();
        if n > tiny && s[i] > tiny {
            for k in 0..3 {
                u[k][i] = mv[k] / n;
            }
        } else {
            // complete to an orthonormal basis
            let fill = orthonormal_fill(&u, i);
            for k in 0..3 {
                u[k][i] = fill[k];
            }
        }
    }
    (u, s, v)
}

fn orthonormal_fill<R: Real>(u: &[[R; 3]; 3], col: usize) -> [R; 3] {
    // pick the axis least represented by the existing columns and
    // Gram-Schmidt it against them
    let mut best = [R::one(), R::zero(), R::zero()];
    let mut best_res = -R::one();
    for axis in 0..3 {
        let mut cand = [R::zero(); 3];
        cand[axis] = R::one();
        let mut w = cand;
        for j in 0..col {
            let d = w[0] * u[0][j] + w[1] * u[1][j] + w[2] * u[2][j];
            for k in 0..3 {
                w[k] -= d * u[k][j];
            }
        }
        let res = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
        if res > best_res {
            best_res = res;
            best = w;
        }
    }
    [best[0] / best_res, best[1] / best_res, best[2] / best_res]
}

pub fn identity3<R: Real>() -> [[R; 3]; 3] {
    let mut m = [[R::zero(); 3]; 3];
    m[0][0] = R::one();
    m[1][1] = R::one();
    m[2][2] = R::one();
    m
}

pub fn mat3_transpose<R: Real>(m: [[R; 3]; 3]) -> [[R; 3]; 3] {
    let mut t = [[R::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = m[j][i];
        }
    }
    t
}

pub fn mat3_mul<R: Real>(a: [[R; 3]; 3], b: [[R; 3]; 3]) -> [[R; 3]; 3] {
    let mut c = [[R::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut s = R::zero();
            for k in 0..3 {
                s += a[i][k] * b[k][j];
            }
            c[i][j] = s;
        }
    }
    c
}

pub fn mat3_apply<R: Real>(m: [[R; 3]; 3], v: [R; 3]) -> [R; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

pub fn mat3_det<R: Real>(m: [[R; 3]; 3]) -> R {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}
