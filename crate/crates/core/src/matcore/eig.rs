//! Cyclic Jacobi eigensolver for complex Hermitian matrices.

use num_complex::Complex64;

use super::{ComplexMatrix, Tolerance, ZERO};
use crate::error::{Error, Result};

/// Sweep cap for the cyclic Jacobi iteration.
pub const MAX_SWEEPS: usize = 100;

/// Spectral decomposition `a = V diag(values) V^*`.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    /// Real eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Unitary matrix whose columns are the matching eigenvectors.
    pub vectors: ComplexMatrix,
}

impl HermitianEig {
    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// `V diag(values) V^*`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let v = &self.vectors;
        let scaled = ComplexMatrix::from_fn(v.rows(), v.cols(), |r, c| v[(r, c)] * self.values[c]);
        &scaled * &v.adjoint()
    }
}

fn off_diagonal_mass(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Diagonalises a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// Converges when the off-diagonal Frobenius mass drops below `tol.eig_eps`
/// (floored at a few ulps of `‖a‖_F` so that huge inputs can still settle);
/// gives up after [`MAX_SWEEPS`] sweeps.
pub fn hermitian_eig(a: &ComplexMatrix, tol: &Tolerance) -> Result<HermitianEig> {
    let n = a.require_square()?;
    let norm = a.frobenius_norm();
    let defect = a.hermitian_defect()?;
    if defect > tol.abs_eps * norm.max(1.0) {
        return Err(Error::NotHermitian { defect });
    }
    let mut m = super::hermitian_part(a);
    let mut v = ComplexMatrix::identity(n);
    let threshold = tol.eig_eps.max(64.0 * f64::EPSILON * norm);

    let mut sweeps = 0;
    let mut off = off_diagonal_mass(&m);
    while off >= threshold {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps, off });
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut m, &mut v, p, q);
            }
        }
        sweeps += 1;
        off = off_diagonal_mass(&m);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[(x, x)].re.total_cmp(&m[(y, y)].re));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(HermitianEig { values, vectors })
}

/// One rotation `m <- J^* m J`, `v <- v J` annihilating `m[p, q]`.
///
/// `J = diag(1, e^{-iφ}) · R(θ)` on the `(p, q)` plane, where `φ = arg m[p,q]`
/// makes the pivot real and `R(θ)` is the real symmetric Jacobi rotation.
fn rotate(m: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = m[(p, q)];
    let g = apq.norm();
    if g == 0.0 {
        return;
    }
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    let theta = 0.5 * (2.0 * g).atan2(aqq - app);
    let (s, c) = theta.sin_cos();
    let phase = apq / g;
    // J = [[c, s], [-e^{-iφ} s, e^{-iφ} c]] in the (p, q) plane.
    let jpp = Complex64::new(c, 0.0);
    let jpq = Complex64::new(s, 0.0);
    let jqp = -phase.conj() * s;
    let jqq = phase.conj() * c;

    let n = m.rows();
    for k in 0..n {
        let mkp = m[(k, p)];
        let mkq = m[(k, q)];
        m[(k, p)] = mkp * jpp + mkq * jqp;
        m[(k, q)] = mkp * jpq + mkq * jqq;
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * jpp + vkq * jqp;
        v[(k, q)] = vkp * jpq + vkq * jqq;
    }
    for k in 0..n {
        let mpk = m[(p, k)];
        let mqk = m[(q, k)];
        m[(p, k)] = jpp.conj() * mpk + jqp.conj() * mqk;
        m[(q, k)] = jpq.conj() * mpk + jqq.conj() * mqk;
    }
    m[(p, q)] = ZERO;
    m[(q, p)] = ZERO;
    m[(p, p)] = Complex64::new(m[(p, p)].re, 0.0);
    m[(q, q)] = Complex64::new(m[(q, q)].re, 0.0);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::random::{ginibre, random_hermitian};
    use crate::matcore::unitarity_defect;
    use crate::rng::SeedTree;

    #[test]
    fn diagonal_input() {
        let e = hermitian_eig(&ComplexMatrix::real_diag(&[3.0, 1.0, 2.0]), &Tolerance::default()).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn pauli_x_spectrum() {
        let x = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let e = hermitian_eig(&x, &Tolerance::default()).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-15);
        assert!((e.values[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn complex_pivot() {
        // Pauli Y has spectrum ±1 and purely imaginary off-diagonal entries
        let y = ComplexMatrix::from_rows(&[
            vec![ZERO, Complex64::new(0.0, -1.0)],
            vec![Complex64::new(0.0, 1.0), ZERO],
        ])
        .unwrap();
        let e = hermitian_eig(&y, &Tolerance::default()).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
        assert!(e.reconstruct().max_abs_diff(&y) < 1e-14);
    }

    #[test]
    fn random_reconstruction() {
        let tol = Tolerance::default();
        let mut rng = SeedTree::new(1).rng();
        for n in [1, 2, 4, 7, 16] {
            let a = random_hermitian(&mut rng, n);
            let e = hermitian_eig(&a, &tol).unwrap();
            assert!(e.reconstruct().distance(&a) < 1e-10, "n = {n}");
            assert!(unitarity_defect(&e.vectors).unwrap() < 1e-10);
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn rejects_non_hermitian_and_non_square() {
        let tol = Tolerance::default();
        let a = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(hermitian_eig(&a, &tol), Err(Error::NotHermitian { .. })));
        assert!(matches!(
            hermitian_eig(&ComplexMatrix::zeros(2, 3), &tol),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn gram_matrices_are_psd() {
        let tol = Tolerance::default();
        let mut rng = SeedTree::new(77).rng();
        for _ in 0..20 {
            let a = ginibre(&mut rng, 5, 5);
            let g = a.adjoint_mul(&a).unwrap();
            let e = hermitian_eig(&g, &tol).unwrap();
            assert!(e.min() >= -1e-12);
            assert!((e.values.iter().sum::<f64>() - g.trace().re).abs() < 1e-10);
        }
    }
}
