//! Seeded random matrices: Ginibre, Haar unitaries, Hermitian samples.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::ComplexMatrix;

fn normal_c<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| normal_c(rng))
}

/// GUE-like Hermitian sample `(g + g^*) / 2`.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let g = ginibre(rng, n, n);
    super::hermitian_part(&g)
}

/// Haar-distributed unitary: modified Gram–Schmidt on a Ginibre matrix.
///
/// Gram–Schmidt yields the QR factor with positive real diagonal in `R`,
/// which is the phase fixing that makes `Q` Haar distributed.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    loop {
        let g = ginibre(rng, n, n);
        if let Some(q) = gram_schmidt(&g) {
            return q;
        }
    }
}

/// Orthonormalises the columns of a square matrix; `None` if they are
/// numerically dependent.
pub fn gram_schmidt(a: &ComplexMatrix) -> Option<ComplexMatrix> {
    let (n, m) = a.shape();
    let mut cols: Vec<Vec<Complex64>> = (0..m).map(|c| (0..n).map(|r| a[(r, c)]).collect()).collect();
    for j in 0..m {
        for i in 0..j {
            let (done, rest) = cols.split_at_mut(j);
            let qi = &done[i];
            let cj = &mut rest[0];
            let proj: Complex64 = qi.iter().zip(cj.iter()).map(|(x, y)| x.conj() * y).sum();
            for (y, x) in cj.iter_mut().zip(qi) {
                *y -= proj * x;
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return None;
        }
        for z in &mut cols[j] {
            *z /= norm;
        }
    }
    let mut q = ComplexMatrix::zeros(n, m);
    for (c, col) in cols.iter().enumerate() {
        for (r, &z) in col.iter().enumerate() {
            q[(r, c)] = z;
        }
    }
    Some(q)
}

/// A point on the simplex drawn from the flat Dirichlet distribution.
pub fn simplex_point<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..m).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = w.iter().sum();
    for x in &mut w {
        *x /= total;
    }
    w
}

/// Uniform random phase `e^{iθ}`.
pub fn random_phase<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU)
}
