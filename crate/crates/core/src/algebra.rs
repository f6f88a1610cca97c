//! Finite tracial algebras presented as block-diagonal subalgebras.
//!
//! [`BlockAlgebra`] is an ancilla `N = ⊕_b M_{n_b} ⊆ M_k` with the tracial
//! state `τ = Σ_b α_b tr_b / n_b`. [`SubalgebraSpec`] describes a system-side
//! algebra `⊕_p (M_{m_p} ⊗ I_{c_p}) ⊆ M_n` with multiplicities. Both are
//! fixed in the standard basis: blocks and parts occupy contiguous index
//! ranges in the order listed, and inside a part index `a·c + r` carries
//! factor index `a` and multiplicity index `r`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{mismatch, Error, Result};
use crate::matcore::random::haar_unitary;
use crate::matcore::{hermitian_eig, kron, matrix_unit, ComplexMatrix, Permutation, Tolerance, ZERO};

/// One full matrix block of an ancilla algebra.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub dim: usize,
    pub weight: f64,
}

#[derive(Deserialize)]
struct BlockAlgebraJson {
    blocks: Vec<Block>,
}

/// Weighted direct sum of full matrix blocks, embedded block-diagonally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BlockAlgebraJson")]
pub struct BlockAlgebra {
    blocks: Vec<Block>,
}

impl TryFrom<BlockAlgebraJson> for BlockAlgebra {
    type Error = Error;

    fn try_from(raw: BlockAlgebraJson) -> Result<Self> {
        Self::new(raw.blocks)
    }
}

impl BlockAlgebra {
    pub fn new(blocks: Vec<Block>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::MalformedSpec("ancilla needs at least one block".into()));
        }
        for b in &blocks {
            if b.dim == 0 {
                return Err(Error::MalformedSpec("block dimension must be positive".into()));
            }
            if !(b.weight > 0.0 && b.weight.is_finite()) {
                return Err(Error::InvalidWeights(format!(
                    "block weight {} is not positive",
                    b.weight
                )));
            }
        }
        let total: f64 = blocks.iter().map(|b| b.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidWeights(format!(
                "block weights sum to {total}, expected 1"
            )));
        }
        Ok(Self { blocks })
    }

    pub fn from_parts(dims: &[usize], weights: &[f64]) -> Result<Self> {
        if dims.len() != weights.len() {
            return Err(mismatch("block weights", dims.len(), weights.len()));
        }
        Self::new(
            dims.iter()
                .zip(weights)
                .map(|(&dim, &weight)| Block { dim, weight })
                .collect(),
        )
    }

    /// Blocks with weights proportional to their size, i.e. the normalised
    /// trace of `M_k` restricted to the subalgebra.
    pub fn with_dims(dims: &[usize]) -> Result<Self> {
        let k: usize = dims.iter().sum();
        let weights: Vec<f64> = dims.iter().map(|&d| d as f64 / k.max(1) as f64).collect();
        Self::from_parts(dims, &weights)
    }

    /// `M_k` with its normalised trace.
    pub fn full(k: usize) -> Result<Self> {
        Self::with_dims(&[k])
    }

    /// The diagonal algebra `C^k` with the given probability weights.
    pub fn abelian(weights: &[f64]) -> Result<Self> {
        Self::from_parts(&vec![1; weights.len()], weights)
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn ambient_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim).sum()
    }

    pub fn is_abelian(&self) -> bool {
        self.blocks.iter().all(|b| b.dim == 1)
    }

    /// Start index of every block.
    pub fn offsets(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .scan(0, |acc, b| {
                let start = *acc;
                *acc += b.dim;
                Some(start)
            })
            .collect()
    }

    /// Block label of every basis index.
    pub fn block_labels(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .enumerate()
            .flat_map(|(b, blk)| std::iter::repeat_n(b, blk.dim))
            .collect()
    }

    /// Diagonal weights `w_κ = α_b / n_b`, so that `τ(x) = Σ_κ w_κ x[κ,κ]`
    /// on the algebra. The vector sums to one.
    pub fn trace_weights(&self) -> Vec<f64> {
        self.blocks
            .iter()
            .flat_map(|b| std::iter::repeat_n(b.weight / b.dim as f64, b.dim))
            .collect()
    }

    fn check_dim(&self, x: &ComplexMatrix, context: &'static str) -> Result<()> {
        let k = self.ambient_dim();
        x.require_shape(context, k, k)
    }

    /// The tracial state, after checking `x` lies in the algebra.
    pub fn trace_checked(&self, x: &ComplexMatrix, tol: &Tolerance) -> Result<Complex64> {
        let defect = self.membership_defect(x)?;
        if defect > tol.abs_eps {
            return Err(Error::NotInAlgebra { defect });
        }
        Ok(self.weighted_trace(x))
    }

    /// [`trace_checked`](Self::trace_checked) with the default tolerance.
    pub fn trace(&self, x: &ComplexMatrix) -> Result<Complex64> {
        self.trace_checked(x, &Tolerance::default())
    }

    /// `Σ_κ w_κ x[κ,κ]`; equals `τ(E(x))` for any `x`.
    pub fn weighted_trace(&self, x: &ComplexMatrix) -> Complex64 {
        self.trace_weights()
            .iter()
            .enumerate()
            .map(|(i, &w)| x[(i, i)] * w)
            .sum()
    }

    /// Block-diagonal pinching `Σ_b P_b x P_b`.
    pub fn conditional_expectation(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_dim(x, "conditional expectation")?;
        let labels = self.block_labels();
        let k = labels.len();
        Ok(ComplexMatrix::from_fn(k, k, |i, j| {
            if labels[i] == labels[j] {
                x[(i, j)]
            } else {
                ZERO
            }
        }))
    }

    /// `‖x − E(x)‖_F`, the mass of `x` outside the diagonal blocks.
    pub fn membership_defect(&self, x: &ComplexMatrix) -> Result<f64> {
        self.check_dim(x, "membership test")?;
        let labels = self.block_labels();
        let mut acc = 0.0;
        for (i, li) in labels.iter().enumerate() {
            for (j, lj) in labels.iter().enumerate() {
                if li != lj {
                    acc += x[(i, j)].norm_sqr();
                }
            }
        }
        Ok(acc.sqrt())
    }

    pub fn contains(&self, x: &ComplexMatrix, tol: &Tolerance) -> Result<bool> {
        Ok(self.membership_defect(x)? <= tol.abs_eps)
    }

    /// `N₁ ⊕ N₂` with the state `λ τ₁ ⊕ (1 − λ) τ₂`, for `0 < λ < 1`.
    pub fn direct_sum(&self, other: &Self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "direct-sum weight must lie strictly inside (0, 1), got {lambda}"
            )));
        }
        let mut blocks: Vec<Block> = self
            .blocks
            .iter()
            .map(|b| Block {
                dim: b.dim,
                weight: lambda * b.weight,
            })
            .collect();
        blocks.extend(other.blocks.iter().map(|b| Block {
            dim: b.dim,
            weight: (1.0 - lambda) * b.weight,
        }));
        renormalise(&mut blocks);
        Self::new(blocks)
    }

    /// `N₁ ⊗ N₂ ⊆ M_{k₁k₂}` with the product state.
    ///
    /// The tensor of two block algebras is block-diagonal only after a basis
    /// reordering; the returned permutation maps the Kronecker index
    /// `κ₁·k₂ + κ₂` to the block-contiguous index used by the result.
    pub fn tensor(&self, other: &Self) -> Result<(Self, Permutation)> {
        let (k1, k2) = (self.ambient_dim(), other.ambient_dim());
        let (off1, off2) = (self.offsets(), other.offsets());
        let (lab1, lab2) = (self.block_labels(), other.block_labels());
        let mut blocks = Vec::with_capacity(self.blocks.len() * other.blocks.len());
        let mut start = vec![vec![0usize; other.blocks.len()]; self.blocks.len()];
        let mut cursor = 0;
        for (b, x) in self.blocks.iter().enumerate() {
            for (c, y) in other.blocks.iter().enumerate() {
                start[b][c] = cursor;
                cursor += x.dim * y.dim;
                blocks.push(Block {
                    dim: x.dim * y.dim,
                    weight: x.weight * y.weight,
                });
            }
        }
        let mut map = vec![0; k1 * k2];
        for p in 0..k1 {
            for q in 0..k2 {
                let (b, c) = (lab1[p], lab2[q]);
                let local = (p - off1[b]) * other.blocks[c].dim + (q - off2[c]);
                map[p * k2 + q] = start[b][c] + local;
            }
        }
        renormalise(&mut blocks);
        Ok((Self::new(blocks)?, Permutation::new(map)?))
    }

    /// Haar unitary inside the algebra (independent Haar unitary per block).
    pub fn random_unitary<R: Rng + ?Sized>(&self, rng: &mut R) -> ComplexMatrix {
        let k = self.ambient_dim();
        let mut u = ComplexMatrix::zeros(k, k);
        for (blk, off) in self.blocks.iter().zip(self.offsets()) {
            u.set_block(off, off, &haar_unitary(rng, blk.dim));
        }
        u
    }
}

/// Absorbs floating-point drift so the weights sum to one.
fn renormalise(blocks: &mut [Block]) {
    let total: f64 = blocks.iter().map(|b| b.weight).sum();
    for b in blocks {
        b.weight /= total;
    }
}

/// One part `M_factor ⊗ I_mult` of a system-side algebra.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Part {
    pub factor: usize,
    pub mult: usize,
}

impl Part {
    pub fn size(&self) -> usize {
        self.factor * self.mult
    }
}

#[derive(Deserialize)]
struct SubalgebraJson {
    parts: Vec<Part>,
}

/// A block subalgebra `⊕_p (M_{m_p} ⊗ I_{c_p})` of `M_n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SubalgebraJson")]
pub struct SubalgebraSpec {
    parts: Vec<Part>,
}

impl TryFrom<SubalgebraJson> for SubalgebraSpec {
    type Error = Error;

    fn try_from(raw: SubalgebraJson) -> Result<Self> {
        Self::new(raw.parts)
    }
}

impl SubalgebraSpec {
    pub fn new(parts: Vec<Part>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::MalformedSpec("subalgebra needs at least one part".into()));
        }
        if parts.iter().any(|p| p.factor == 0 || p.mult == 0) {
            return Err(Error::MalformedSpec("factor and multiplicity must be positive".into()));
        }
        Ok(Self { parts })
    }

    /// `M_n` itself.
    pub fn full(n: usize) -> Result<Self> {
        Self::new(vec![Part { factor: n, mult: 1 }])
    }

    /// Scalars `C·I_n`.
    pub fn scalars(n: usize) -> Result<Self> {
        Self::new(vec![Part { factor: 1, mult: n }])
    }

    /// The diagonal masa of `M_n`.
    pub fn diagonal(n: usize) -> Result<Self> {
        Self::new(vec![Part { factor: 1, mult: 1 }; n])
    }

    /// Block diagonal `⊕ M_{d}` with multiplicity one.
    pub fn blocks(dims: &[usize]) -> Result<Self> {
        Self::new(dims.iter().map(|&factor| Part { factor, mult: 1 }).collect())
    }

    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    pub fn ambient_dim(&self) -> usize {
        self.parts.iter().map(Part::size).sum()
    }

    /// Linear dimension `Σ m_p²` of the algebra.
    pub fn dimension(&self) -> usize {
        self.parts.iter().map(|p| p.factor * p.factor).sum()
    }

    pub fn offsets(&self) -> Vec<usize> {
        self.parts
            .iter()
            .scan(0, |acc, p| {
                let start = *acc;
                *acc += p.size();
                Some(start)
            })
            .collect()
    }

    /// Structural commutant: `(⊕ M_m ⊗ I_c)' = ⊕ I_m ⊗ M_c`.
    ///
    /// The result is described with factor and multiplicity swapped per
    /// part. Inside each part it is the commutant up to the reindexing
    /// `a·c + r ↦ r·m + a`; [`commutant_generators`](Self::commutant_generators)
    /// gives the commutant in the original basis.
    pub fn commutant(&self) -> Self {
        Self {
            parts: self
                .parts
                .iter()
                .map(|p| Part {
                    factor: p.mult,
                    mult: p.factor,
                })
                .collect(),
        }
    }

    /// Equality of the part multisets.
    pub fn same_up_to_ordering(&self, other: &Self) -> bool {
        let mut a = self.parts.clone();
        let mut b = other.parts.clone();
        a.sort();
        b.sort();
        a == b
    }

    /// Places `local ⊗ right` into part `index`, zero elsewhere.
    fn place(&self, index: usize, local: &ComplexMatrix, right: &ComplexMatrix) -> ComplexMatrix {
        let n = self.ambient_dim();
        let mut out = ComplexMatrix::zeros(n, n);
        out.set_block(self.offsets()[index], self.offsets()[index], &kron(local, right));
        out
    }

    /// Places a factor-sized matrix into part `index` as `x ⊗ I_mult`.
    pub fn embed_factor(&self, index: usize, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        let part = self
            .parts
            .get(index)
            .ok_or_else(|| Error::InvalidParameter(format!("part {index} out of range")))?;
        x.require_shape("part factor", part.factor, part.factor)?;
        Ok(self.place(index, x, &ComplexMatrix::identity(part.mult)))
    }

    /// Spanning family of the algebra: `ε_{ab} ⊗ I_c` in every part.
    pub fn generators(&self) -> Vec<ComplexMatrix> {
        let mut out = Vec::new();
        for (idx, p) in self.parts.iter().enumerate() {
            let id = ComplexMatrix::identity(p.mult);
            for a in 0..p.factor {
                for b in 0..p.factor {
                    let e = matrix_unit(p.factor, a, b).expect("index in range");
                    out.push(self.place(idx, &e, &id));
                }
            }
        }
        out
    }

    /// Spanning family of the commutant: `I_m ⊗ ε_{rs}` in every part.
    pub fn commutant_generators(&self) -> Vec<ComplexMatrix> {
        let mut out = Vec::new();
        for (idx, p) in self.parts.iter().enumerate() {
            let id = ComplexMatrix::identity(p.factor);
            for r in 0..p.mult {
                for s in 0..p.mult {
                    let e = matrix_unit(p.mult, r, s).expect("index in range");
                    out.push(self.place(idx, &id, &e));
                }
            }
        }
        out
    }

    /// Trace-preserving conditional expectation onto the algebra: pinch to
    /// the parts, then average each part over its multiplicity.
    pub fn project(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        let n = self.ambient_dim();
        x.require_shape("subalgebra projection", n, n)?;
        let mut out = ComplexMatrix::zeros(n, n);
        for (p, off) in self.parts.iter().zip(self.offsets()) {
            let (m, c) = (p.factor, p.mult);
            for a in 0..m {
                for b in 0..m {
                    let avg: Complex64 =
                        (0..c).map(|r| x[(off + a * c + r, off + b * c + r)]).sum::<Complex64>() / c as f64;
                    for r in 0..c {
                        out[(off + a * c + r, off + b * c + r)] = avg;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn membership_defect(&self, x: &ComplexMatrix) -> Result<f64> {
        Ok(self.project(x)?.distance(x))
    }

    pub fn contains(&self, x: &ComplexMatrix, tol: &Tolerance) -> Result<bool> {
        Ok(self.membership_defect(x)? <= tol.abs_eps)
    }

    /// Haar unitary of the algebra: `⊕ (u_p ⊗ I_{c_p})`.
    pub fn random_unitary<R: Rng + ?Sized>(&self, rng: &mut R) -> ComplexMatrix {
        let n = self.ambient_dim();
        let mut out = ComplexMatrix::zeros(n, n);
        for (idx, p) in self.parts.iter().enumerate() {
            let u = haar_unitary(rng, p.factor);
            let placed = self.place(idx, &u, &ComplexMatrix::identity(p.mult));
            out = &out + &placed;
        }
        out
    }
}

/// Dimension of `{X : X A = A X for every generator A}`.
///
/// Computed as the near-null space of `Σ_g M_g^* M_g` where `M_g` is the
/// matrix of `X ↦ X A_g − A_g X` on row-major `vec(X)`. An eigenvalue counts
/// as zero below `tol.eig_eps · (λ_max + 1)`. With no generators every `X`
/// qualifies and the answer is `n²`.
pub fn numeric_commutant_dim(n: usize, generators: &[ComplexMatrix], tol: &Tolerance) -> Result<usize> {
    if generators.is_empty() {
        return Ok(n * n);
    }
    let nn = n * n;
    let mut gram = ComplexMatrix::zeros(nn, nn);
    for a in generators {
        a.require_shape("commutant generator", n, n)?;
        let mut lin = ComplexMatrix::zeros(nn, nn);
        for i in 0..n {
            for j in 0..n {
                let row = i * n + j;
                for k in 0..n {
                    // (XA)[i,j] = Σ_k X[i,k] A[k,j],  (AX)[i,j] = Σ_k A[i,k] X[k,j]
                    lin[(row, i * n + k)] += a[(k, j)];
                    lin[(row, k * n + j)] -= a[(i, k)];
                }
            }
        }
        gram = &gram + &lin.adjoint_mul(&lin)?;
    }
    let eig = hermitian_eig(&crate::matcore::hermitian_part(&gram), tol)?;
    let cutoff = tol.eig_eps * (eig.max() + 1.0);
    Ok(eig.values.iter().filter(|&&l| l < cutoff).count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::random::ginibre;
    use crate::rng::SeedTree;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn state_normalisation() {
        for alg in [
            BlockAlgebra::full(3).unwrap(),
            BlockAlgebra::abelian(&[0.2, 0.8]).unwrap(),
            BlockAlgebra::from_parts(&[2, 1], &[0.3, 0.7]).unwrap(),
        ] {
            let k = alg.ambient_dim();
            assert!((alg.trace(&ComplexMatrix::identity(k)).unwrap() - 1.0).norm() < 1e-15);
        }
    }

    #[test]
    fn abelian_trace() {
        let lambda = 0.3;
        let alg = BlockAlgebra::abelian(&[lambda, 1.0 - lambda]).unwrap();
        let (a, b) = (Complex64::new(2.0, 1.0), Complex64::new(-1.0, 0.5));
        let x = ComplexMatrix::diag(&[a, b]);
        let expected = a * lambda + b * (1.0 - lambda);
        assert!((alg.trace(&x).unwrap() - expected).norm() < 1e-15);
    }

    #[test]
    fn single_block_trace_is_normalised_trace() {
        let mut rng = SeedTree::new(1).rng();
        let x = ginibre(&mut rng, 2, 2);
        let alg = BlockAlgebra::full(2).unwrap();
        let expected = (x[(0, 0)] + x[(1, 1)]) / 2.0;
        assert!((alg.trace(&x).unwrap() - expected).norm() < 1e-15);
    }

    #[test]
    fn trace_rejects_outsiders() {
        let alg = BlockAlgebra::abelian(&[0.5, 0.5]).unwrap();
        let x = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]);
        assert!(matches!(alg.trace(&x), Err(Error::NotInAlgebra { .. })));
    }

    #[test]
    fn weights_must_form_a_state() {
        assert!(BlockAlgebra::abelian(&[0.5, 0.6]).is_err());
        assert!(BlockAlgebra::abelian(&[1.0, 0.0]).is_err());
        assert!(BlockAlgebra::from_parts(&[0], &[1.0]).is_err());
        let json = r#"{"blocks":[{"dim":2,"weight":0.5},{"dim":1,"weight":0.4}]}"#;
        assert!(serde_json::from_str::<BlockAlgebra>(json).is_err());
        let ok = r#"{"blocks":[{"dim":2,"weight":0.5},{"dim":1,"weight":0.5}]}"#;
        let alg: BlockAlgebra = serde_json::from_str(ok).unwrap();
        assert_eq!(alg.ambient_dim(), 3);
        assert_eq!(serde_json::to_string(&alg).unwrap(), ok);
    }

    #[test]
    fn pinching_examples() {
        let alg = BlockAlgebra::abelian(&[0.5, 0.5]).unwrap();
        let ones = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[1.0, 1.0]]);
        assert_eq!(alg.conditional_expectation(&ones).unwrap(), ComplexMatrix::identity(2));

        let alg = BlockAlgebra::from_parts(&[2, 1], &[0.5, 0.5]).unwrap();
        let mut rng = SeedTree::new(2).rng();
        let x = ginibre(&mut rng, 3, 3);
        let e = alg.conditional_expectation(&x).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let off_strip = (i < 2) != (j < 2);
                if off_strip {
                    assert_eq!(e[(i, j)], ZERO);
                } else {
                    assert_eq!(e[(i, j)], x[(i, j)]);
                }
            }
        }
        assert_eq!(alg.conditional_expectation(&e).unwrap(), e);
        assert!(alg.contains(&e, &tol()).unwrap());
        assert!(alg.contains(&ComplexMatrix::identity(3), &tol()).unwrap());
        assert!(!alg.contains(&matrix_unit(3, 0, 2).unwrap(), &tol()).unwrap());
        assert!(alg.conditional_expectation(&ComplexMatrix::identity(2)).is_err());
    }

    #[test]
    fn commutant_examples() {
        assert_eq!(
            SubalgebraSpec::scalars(3).unwrap().commutant(),
            SubalgebraSpec::full(3).unwrap()
        );
        assert_eq!(
            SubalgebraSpec::full(3).unwrap().commutant(),
            SubalgebraSpec::scalars(3).unwrap()
        );
        let masa = SubalgebraSpec::diagonal(3).unwrap();
        assert_eq!(masa.commutant(), masa);
    }

    #[test]
    fn numeric_commutant_examples() {
        let t = tol();
        assert_eq!(numeric_commutant_dim(3, &[ComplexMatrix::identity(3)], &t).unwrap(), 9);
        assert_eq!(numeric_commutant_dim(3, &[], &t).unwrap(), 9);
        let units = SubalgebraSpec::full(3).unwrap().generators();
        assert_eq!(numeric_commutant_dim(3, &units, &t).unwrap(), 1);
        let masa = SubalgebraSpec::diagonal(3).unwrap().generators();
        assert_eq!(numeric_commutant_dim(3, &masa, &t).unwrap(), 3);
    }

    #[test]
    fn commutant_generators_commute() {
        let spec = SubalgebraSpec::new(vec![Part { factor: 2, mult: 2 }, Part { factor: 1, mult: 1 }]).unwrap();
        for a in spec.generators() {
            for b in spec.commutant_generators() {
                assert!((&a * &b).max_abs_diff(&(&b * &a)) < 1e-15);
            }
        }
        assert!(spec.generators().iter().all(|g| spec.contains(g, &tol()).unwrap()));
    }

    #[test]
    fn projection_is_trace_preserving_idempotent() {
        let spec = SubalgebraSpec::new(vec![Part { factor: 2, mult: 2 }, Part { factor: 1, mult: 2 }]).unwrap();
        let mut rng = SeedTree::new(4).rng();
        let x = ginibre(&mut rng, 6, 6);
        let p = spec.project(&x).unwrap();
        assert!((p.trace() - x.trace()).norm() < 1e-13);
        assert!(spec.project(&p).unwrap().max_abs_diff(&p) < 1e-15);
        let u = spec.random_unitary(&mut rng);
        assert!(spec.contains(&u, &tol()).unwrap());
        assert!(crate::matcore::is_unitary(&u, &tol()).unwrap());
    }

    #[test]
    fn tensor_of_algebras_is_block_contiguous() {
        let a = BlockAlgebra::from_parts(&[2, 1], &[0.4, 0.6]).unwrap();
        let b = BlockAlgebra::abelian(&[0.5, 0.5]).unwrap();
        let (t, perm) = a.tensor(&b).unwrap();
        assert_eq!(t.ambient_dim(), 6);
        let mut rng = SeedTree::new(6).rng();
        let x = a.random_unitary(&mut rng);
        let y = b.random_unitary(&mut rng);
        let xy = perm.conjugate(&kron(&x, &y)).unwrap();
        assert!(t.contains(&xy, &tol()).unwrap());
        let expected = a.weighted_trace(&x) * b.weighted_trace(&y);
        assert!((t.trace(&xy).unwrap() - expected).norm() < 1e-14);
    }

    #[test]
    fn direct_sum_state() {
        let a = BlockAlgebra::full(2).unwrap();
        let b = BlockAlgebra::abelian(&[0.5, 0.5]).unwrap();
        let s = a.direct_sum(&b, 0.25).unwrap();
        assert_eq!(s.ambient_dim(), 4);
        assert!((s.trace(&ComplexMatrix::identity(4)).unwrap() - 1.0).norm() < 1e-15);
        assert!(a.direct_sum(&b, 0.0).is_err());
    }
}
