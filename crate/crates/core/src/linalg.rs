//! Small dense linear-algebra helpers shared by the physics modules.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use crate::CMatrix;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `exp(G)` for an anti-Hermitian generator `G`.
///
/// `H = iG` is Hermitian, so `exp(G) = U exp(-i diag(lambda)) U^dagger` with the
/// eigendecomposition `H = U diag(lambda) U^dagger`. The result is unitary to
/// machine precision whatever the norm of `G`.
pub fn expm_anti_hermitian(generator: &CMatrix) -> CMatrix {
    let n = generator.nrows();
    debug_assert_eq!(n, generator.ncols());
    if n == 0 {
        return CMatrix::zeros(0, 0);
    }
    let mut h = generator.map(|z| I * z);
    // symmetrize away rounding before handing it to the Hermitian solver
    let ht = h.adjoint();
    h = (h + ht).map(|z| z * 0.5);
    let eig = SymmetricEigen::new(h);
    let u = eig.eigenvectors;
    let phases: Vec<Complex64> = eig
        .eigenvalues
        .iter()
        .map(|&lambda| Complex64::from_polar(1.0, -lambda))
        .collect();
    let mut scaled = u.clone();
    for (j, phase) in phases.iter().enumerate() {
        for i in 0..n {
            scaled[(i, j)] *= phase;
        }
    }
    scaled * u.adjoint()
}

/// Largest `|M_ij - conj(M_ji)|`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_hermitian_eigenvalue(m: &CMatrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let h = (m + m.adjoint()).map(|z| z * 0.5);
    SymmetricEigen::new(h)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Largest `|(U^dagger U - 1)_ij|`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let p = u.adjoint() * u;
    let mut worst = 0.0f64;
    for i in 0..p.nrows() {
        for j in 0..p.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((p[(i, j)] - target).norm());
        }
    }
    worst
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// `Tr(A B)` without forming the product.
pub fn trace_of_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

pub fn dot3(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross3(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm3(a: &Vec3) -> f64 {
    dot3(a, a).sqrt()
}

pub fn quad_form3(m: &Mat3, n: &Vec3) -> f64 {
    let mut acc = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            acc += n[i] * m[i][j] * n[j];
        }
    }
    acc
}

/// Cyclic Jacobi eigendecomposition of a real symmetric 3x3 matrix.
///
/// Returns eigenvalues in ascending order and the matching unit eigenvectors.
pub fn sym3_eigen(m: &Mat3) -> ([f64; 3], [Vec3; 3]) {
    let mut a = *m;
    let mut v: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for _sweep in 0..64 {
        let off = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
        let scale = a[0][0].powi(2) + a[1][1].powi(2) + a[2][2].powi(2) + off;
        if off <= 1e-32 * scale || off == 0.0 {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            if a[p][q] == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
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
            for row in v.iter_mut() {
                let vp = row[p];
                let vq = row[q];
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
    let values = [a[order[0]][order[0]], a[order[1]][order[1]], a[order[2]][order[2]]];
    let vectors = order.map(|k| [v[0][k], v[1][k], v[2][k]]);
    (values, vectors)
}

/// Eigendecomposition of a real symmetric 2x2 matrix `[[a, b], [b, c]]`,
/// ascending eigenvalues.
pub fn sym2_eigen(a: f64, b: f64, c: f64) -> ([f64; 2], [[f64; 2]; 2]) {
    let mean = 0.5 * (a + c);
    let half_diff = 0.5 * (a - c);
    let radius = half_diff.hypot(b);
    let lo = mean - radius;
    let hi = mean + radius;
    if b == 0.0 {
        return if a <= c {
            ([a, c], [[1.0, 0.0], [0.0, 1.0]])
        } else {
            ([c, a], [[0.0, 1.0], [1.0, 0.0]])
        };
    }
    // (A - lo) v = 0  =>  v = (b, lo - a), numerically safest of the two rows
    let v_lo = {
        let (x, y) = if half_diff >= 0.0 { (b, lo - a) } else { (lo - c, b) };
        let n = x.hypot(y);
        [x / n, y / n]
    };
    let v_hi = [-v_lo[1], v_lo[0]];
    ([lo, hi], [v_lo, v_hi])
}
