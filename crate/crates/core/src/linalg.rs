//! Small dense complex linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
}

/// Largest elementwise modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `max |M - M†|`.
pub fn hermiticity_error(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5, 0.0)
}

pub fn anti_hermitian_part(m: &CMatrix) -> CMatrix {
    (m - m.adjoint()) * c(0.5, 0.0)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted ascending.
/// Only the lower triangle is read, so the input is symmetrised first.
pub fn hermitian_eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 2 {
        return eigh_2x2(m);
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Closed-form 2×2 Hermitian eigenproblem. The iterative solver loses
/// relative accuracy on nearly diagonal matrices, which matters when
/// frames are differentiated numerically.
fn eigh_2x2(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = (m[(0, 1)] + m[(1, 0)].conj()) * 0.5;
    let mean = 0.5 * (a + d);
    let half = 0.5 * (a - d);
    let radius = half.hypot(b.norm());
    let values = vec![mean - radius, mean + radius];
    if radius == 0.0 {
        return (values, CMatrix::identity(2, 2));
    }
    // Lower eigenvector from whichever row is better conditioned.
    let (lo, hi) = if half >= 0.0 {
        // (b, -(half+radius)) is the lower eigenvector, stable when half >= 0
        let n = (b.norm_sqr() + (half + radius).powi(2)).sqrt();
        let lo = [b / n, c(-(half + radius) / n, 0.0)];
        (lo, [c((half + radius) / n, 0.0), b.conj() / n])
    } else {
        let n = (b.norm_sqr() + (radius - half).powi(2)).sqrt();
        let lo = [c((radius - half) / n, 0.0), -b.conj() / n];
        (lo, [b / n, c((radius - half) / n, 0.0)])
    };
    let vectors = CMatrix::from_row_slice(2, 2, &[lo[0], hi[0], lo[1], hi[1]]);
    (values, vectors)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    if m.nrows() == 2 {
        let a = m[(0, 0)].re;
        let d = m[(1, 1)].re;
        let b = (m[(0, 1)] + m[(1, 0)].conj()) * 0.5;
        return 0.5 * (a + d) - (0.5 * (a - d)).hypot(b.norm());
    }
    hermitian_eigh(m).0[0]
}

/// `max |U†U - 1|`.
pub fn unitarity_error(u: &CMatrix) -> f64 {
    let n = u.ncols();
    max_abs(&(u.adjoint() * u - CMatrix::identity(n, n)))
}

/// Outer product `|a⟩⟨b|`.
pub fn outer(a: &CVector, b: &CVector) -> CMatrix {
    a * b.adjoint()
}

/// `⟨a|b⟩`.
pub fn inner(a: &CVector, b: &CVector) -> C64 {
    a.dotc(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_eigh(m: &CMatrix) {
        let (vals, vecs) = hermitian_eigh(m);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        assert!(unitarity_error(&vecs) < 1e-12);
        let recon = &vecs
            * CMatrix::from_diagonal(&CVector::from_iterator(vals.len(), vals.iter().map(|&v| c(v, 0.))))
            * vecs.adjoint();
        assert!(max_abs(&(recon - m)) < 1e-12);
    }

    #[test]
    fn eigh_two_by_two_cases() {
        check_eigh(&pauli_x());
        check_eigh(&pauli_z());
        check_eigh(&(pauli_z() * c(-1., 0.)));
        check_eigh(&pauli_y());
        check_eigh(&(pauli_x() * c(1e-9, 0.) + pauli_z() * c(40.0, 0.)));
        check_eigh(&(pauli_x() * c(0.3, 0.) - pauli_y() * c(0.7, 0.) + pauli_z() * c(-1e-14, 0.)));
    }

    #[test]
    fn eigh_general_dimension() {
        let m = CMatrix::from_fn(4, 4, |i, j| {
            if i == j {
                c(i as f64, 0.)
            } else {
                c(0.1 * (i + j) as f64, 0.05 * (i as f64 - j as f64))
            }
        });
        assert!(hermiticity_error(&m) < 1e-15);
        check_eigh(&m);
    }

    #[test]
    fn min_eigenvalue_of_projector_mixture() {
        let rho = CMatrix::from_row_slice(2, 2, &[c(0.75, 0.), c(0., 0.), c(0., 0.), c(0.25, 0.)]);
        assert!((min_eigenvalue(&rho) - 0.25).abs() < 1e-15);
    }
}
