//! Discrete Schur multipliers `Φ(ε_{ij}) = B[i,j]·ε_{ij}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{BlockAlgebra, SubalgebraSpec};
use crate::channel::{check_bimodular, Channel};
use crate::dilation::FactorizablePresentation;
use crate::error::{mismatch, Error, Result};
use crate::matcore::{hermitian_eig, is_unitary, unitarity_defect, ComplexMatrix, Tolerance, ZERO};

#[derive(Deserialize)]
struct SchurJson {
    dim: usize,
    #[serde(rename = "B")]
    b: ComplexMatrix,
}

/// The coefficient matrix of a Schur multiplier on `M_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SchurJson")]
pub struct SchurSymbol {
    dim: usize,
    #[serde(rename = "B")]
    b: ComplexMatrix,
}

impl TryFrom<SchurJson> for SchurSymbol {
    type Error = Error;

    fn try_from(raw: SchurJson) -> Result<Self> {
        Self::new(raw.dim, raw.b)
    }
}

impl SchurSymbol {
    pub fn new(dim: usize, b: ComplexMatrix) -> Result<Self> {
        b.require_shape("Schur symbol", dim, dim)?;
        Ok(Self { dim, b })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.b
    }

    pub fn min_eigenvalue(&self, tol: &Tolerance) -> Result<f64> {
        Ok(hermitian_eig(&self.b, tol)?.min())
    }

    /// `max_i |B[i,i] − 1|`.
    pub fn diagonal_defect(&self) -> f64 {
        (0..self.dim).map(|i| (self.b[(i, i)] - 1.0).norm()).fold(0.0, f64::max)
    }
}

/// `B[i,j] = τ(d_i^* d_j)` for unitaries `d_i` of the algebra.
pub fn symbol_from_unitaries(alg: &BlockAlgebra, d: &[ComplexMatrix], tol: &Tolerance) -> Result<SchurSymbol> {
    if d.is_empty() {
        return Err(Error::Empty("unitary tuple"));
    }
    let k = alg.ambient_dim();
    for di in d {
        di.require_shape("Schur unitary", k, k)?;
        let defect = unitarity_defect(di)?;
        if defect > tol.abs_eps {
            return Err(Error::NotUnitary { defect });
        }
        let defect = alg.membership_defect(di)?;
        if defect > tol.abs_eps {
            return Err(Error::NotInAlgebra { defect });
        }
    }
    let n = d.len();
    let weights = alg.trace_weights();
    let b = ComplexMatrix::from_fn(n, n, |i, j| {
        // τ(d_i^* d_j) = Σ_κ w_κ Σ_μ conj(d_i[μ,κ]) d_j[μ,κ]
        (0..k)
            .map(|kap| {
                (0..k)
                    .map(|mu| d[i][(mu, kap)].conj() * d[j][(mu, kap)])
                    .sum::<Complex64>()
                    * weights[kap]
            })
            .sum()
    });
    SchurSymbol::new(n, b)
}

/// The channel with Choi matrix `Σ B[i,j]·ε_{ij} ⊗ ε_{ij}`.
pub fn schur_channel(s: &SchurSymbol) -> Channel {
    let n = s.dim;
    let mut choi = ComplexMatrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            choi[(i * n + i, j * n + j)] = s.b[(i, j)];
        }
    }
    Channel::from_choi(n, choi).expect("Schur Choi has consistent shape")
}

/// Recovers `B` from a channel that is bimodular over the diagonal masa and
/// maps each `ε_{ij}` onto its own span; `None` otherwise.
pub fn recognize_schur(ch: &Channel, tol: &Tolerance) -> Result<Option<SchurSymbol>> {
    let n = ch.dim();
    if !check_bimodular(ch, &SubalgebraSpec::diagonal(n)?, tol)? {
        return Ok(None);
    }
    let mut b = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut image = ch.unit_image(i, j);
            b[(i, j)] = image[(i, j)];
            image[(i, j)] = ZERO;
            if image.max_abs() >= tol.abs_eps {
                return Ok(None);
            }
        }
    }
    Ok(Some(SchurSymbol::new(n, b)?))
}

/// `D = Σ ε_{ii} ⊗ d_i`, modular over the diagonal masa.
pub fn diagonal_presentation(
    alg: &BlockAlgebra,
    d: &[ComplexMatrix],
    tol: &Tolerance,
) -> Result<FactorizablePresentation> {
    if d.is_empty() {
        return Err(Error::Empty("unitary tuple"));
    }
    let (n, k) = (d.len(), alg.ambient_dim());
    let mut big = ComplexMatrix::zeros(n * k, n * k);
    for (i, di) in d.iter().enumerate() {
        if di.shape() != (k, k) {
            return Err(mismatch(
                "diagonal slice",
                format!("{k}x{k}"),
                format!("{}x{}", di.rows(), di.cols()),
            ));
        }
        if !is_unitary(di, tol)? {
            return Err(Error::NotUnitary {
                defect: unitarity_defect(di)?,
            });
        }
        big.set_block(i * k, i * k, di);
    }
    FactorizablePresentation::new(n, alg.clone(), big, Some(SubalgebraSpec::diagonal(n)?), tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::choi_distance;
    use crate::matcore::random::haar_unitary;
    use crate::rng::SeedTree;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn identity_tuple_gives_all_ones() {
        let alg = BlockAlgebra::from_parts(&[2, 1], &[0.5, 0.5]).unwrap();
        let ids = vec![ComplexMatrix::identity(3); 4];
        let s = symbol_from_unitaries(&alg, &ids, &tol()).unwrap();
        assert!(
            s.matrix()
                .max_abs_diff(&ComplexMatrix::from_fn(4, 4, |_, _| 1.0.into()))
                < 1e-15
        );
        assert!(choi_distance(&schur_channel(&s), &Channel::identity(4)).unwrap() < 1e-15);
    }

    #[test]
    fn abelian_signs_give_identity_symbol() {
        let alg = BlockAlgebra::abelian(&[0.5, 0.5]).unwrap();
        let d = [
            ComplexMatrix::real_diag(&[1.0, 1.0]),
            ComplexMatrix::real_diag(&[1.0, -1.0]),
        ];
        let s = symbol_from_unitaries(&alg, &d, &tol()).unwrap();
        assert!(s.matrix().max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn identity_symbol_pinches() {
        let s = SchurSymbol::new(3, ComplexMatrix::identity(3)).unwrap();
        let ch = schur_channel(&s);
        let x = ComplexMatrix::from_fn(3, 3, |i, j| ((i * 3 + j) as f64).into());
        let expected = ComplexMatrix::real_diag(&[0.0, 4.0, 8.0]);
        assert_eq!(ch.apply(&x).unwrap(), expected);
    }

    #[test]
    fn random_block_unitaries_give_gram_symbols() {
        let alg = BlockAlgebra::full(2).unwrap();
        let mut rng = SeedTree::new(3).rng();
        for _ in 0..20 {
            let d: Vec<ComplexMatrix> = (0..4).map(|_| haar_unitary(&mut rng, 2)).collect();
            let s = symbol_from_unitaries(&alg, &d, &tol()).unwrap();
            assert!(s.min_eigenvalue(&tol()).unwrap() >= -1e-10);
            assert!(s.diagonal_defect() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_tuples() {
        let alg = BlockAlgebra::abelian(&[0.5, 0.5]).unwrap();
        let not_unitary = ComplexMatrix::real_diag(&[1.0, 0.5]);
        assert!(matches!(
            symbol_from_unitaries(&alg, &[not_unitary], &tol()),
            Err(Error::NotUnitary { .. })
        ));
        let swap = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert!(matches!(
            symbol_from_unitaries(&alg, &[swap], &tol()),
            Err(Error::NotInAlgebra { .. })
        ));
        assert!(symbol_from_unitaries(&alg, &[], &tol()).is_err());
    }

    #[test]
    fn schur_channel_matches_diagonal_presentation() {
        let alg = BlockAlgebra::from_parts(&[2, 1], &[0.3, 0.7]).unwrap();
        let mut rng = SeedTree::new(9).rng();
        let d: Vec<ComplexMatrix> = (0..3).map(|_| alg.random_unitary(&mut rng)).collect();
        let s = symbol_from_unitaries(&alg, &d, &tol()).unwrap();
        let p = diagonal_presentation(&alg, &d, &tol()).unwrap();
        assert!(choi_distance(&schur_channel(&s), &p.phi_of().unwrap()).unwrap() < 1e-13);
    }

    #[test]
    fn recognition() {
        let alg = BlockAlgebra::full(2).unwrap();
        let mut rng = SeedTree::new(10).rng();
        let d: Vec<ComplexMatrix> = (0..3).map(|_| haar_unitary(&mut rng, 2)).collect();
        let s = symbol_from_unitaries(&alg, &d, &tol()).unwrap();
        assert_eq!(recognize_schur(&schur_channel(&s), &tol()).unwrap(), Some(s));

        let ones = recognize_schur(&Channel::identity(3), &tol()).unwrap().unwrap();
        assert_eq!(*ones.matrix(), ComplexMatrix::from_fn(3, 3, |_, _| 1.0.into()));

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let had = ComplexMatrix::from_real_rows(&[&[h, h], &[h, -h]]);
        assert_eq!(
            recognize_schur(&Channel::conjugation(&had).unwrap(), &tol()).unwrap(),
            None
        );
    }

    #[test]
    fn json_shape() {
        let s = SchurSymbol::new(2, ComplexMatrix::identity(2)).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.starts_with("{\"dim\":2,\"B\":"));
        assert_eq!(serde_json::from_str::<SchurSymbol>(&text).unwrap(), s);
        assert!(serde_json::from_str::<SchurSymbol>(&text.replace("\"dim\":2", "\"dim\":3")).is_err());
    }
}
