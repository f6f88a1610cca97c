//! Factorisable presentations `Φ_D(x) = (id ⊗ τ)(D^*(x ⊗ I)D)`.
//!
//! `D` acts on `H ⊗ K` in system-major order, so the slice `d_{ij}` is the
//! `k×k` block of `D` at block position `(i, j)` and
//! `D = Σ ε_{ij} ⊗ d_{ij}`. The ancilla `N ⊆ M_k` carries the tracial state
//! of its [`BlockAlgebra`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{BlockAlgebra, SubalgebraSpec};
use crate::channel::{Channel, OperatorSymbol};
use crate::error::{mismatch, Error, Result};
use crate::matcore::{
    embed_on_legs, kron, matrix_unit, slice_right, unitarity_defect, ComplexMatrix, Permutation, Tolerance,
};

/// Largest admissible `n·k^m` in [`FactorizablePresentation::power_channel`].
pub const POWER_SIZE_CAP: usize = 4096;

/// Worst slice product outside the ancilla, with its index quadruple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReturnsDefect {
    pub defect: f64,
    pub quad: (usize, usize, usize, usize),
}

#[derive(Deserialize)]
struct PresentationJson {
    sys_dim: usize,
    ancilla: BlockAlgebra,
    #[serde(rename = "D")]
    d: ComplexMatrix,
    #[serde(default)]
    modular_over: Option<SubalgebraSpec>,
}

/// A unitary `D ∈ M_n ⊗ M_k` whose slices return to the ancilla.
///
/// Values deserialised from JSON or built with
/// [`new_unchecked`](Self::new_unchecked) are validated lazily by the first
/// operation that needs a valid presentation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "PresentationJson")]
pub struct FactorizablePresentation {
    sys_dim: usize,
    ancilla: BlockAlgebra,
    #[serde(rename = "D")]
    d: ComplexMatrix,
    modular_over: Option<SubalgebraSpec>,
    #[serde(skip)]
    checked: bool,
}

impl TryFrom<PresentationJson> for FactorizablePresentation {
    type Error = Error;

    fn try_from(raw: PresentationJson) -> Result<Self> {
        Self::new_unchecked(raw.sys_dim, raw.ancilla, raw.d, raw.modular_over)
    }
}

impl PartialEq for FactorizablePresentation {
    fn eq(&self, other: &Self) -> bool {
        self.sys_dim == other.sys_dim
            && self.ancilla == other.ancilla
            && self.d == other.d
            && self.modular_over == other.modular_over
    }
}

impl FactorizablePresentation {
    /// Builds and validates a presentation.
    pub fn new(
        sys_dim: usize,
        ancilla: BlockAlgebra,
        d: ComplexMatrix,
        modular_over: Option<SubalgebraSpec>,
        tol: &Tolerance,
    ) -> Result<Self> {
        let mut p = Self::new_unchecked(sys_dim, ancilla, d, modular_over)?;
        p.validate(tol)?;
        p.checked = true;
        Ok(p)
    }

    /// Checks shapes only.
    pub fn new_unchecked(
        sys_dim: usize,
        ancilla: BlockAlgebra,
        d: ComplexMatrix,
        modular_over: Option<SubalgebraSpec>,
    ) -> Result<Self> {
        if sys_dim == 0 {
            return Err(Error::InvalidParameter("system dimension must be positive".into()));
        }
        let nk = sys_dim * ancilla.ambient_dim();
        d.require_shape("dilation unitary", nk, nk)?;
        if let Some(spec) = &modular_over {
            if spec.ambient_dim() != sys_dim {
                return Err(mismatch("modular algebra", sys_dim, spec.ambient_dim()));
            }
        }
        Ok(Self {
            sys_dim,
            ancilla,
            d,
            modular_over,
            checked: false,
        })
    }

    /// `D = I_{nk}` over the given ancilla.
    pub fn identity(sys_dim: usize, ancilla: BlockAlgebra) -> Result<Self> {
        let nk = sys_dim * ancilla.ambient_dim();
        Self::new(
            sys_dim,
            ancilla,
            ComplexMatrix::identity(nk),
            None,
            &Tolerance::default(),
        )
    }

    /// `D = u ⊗ I_k`, presenting `Ad_u` (any ancilla works).
    pub fn conjugation(u: &ComplexMatrix, ancilla: BlockAlgebra, tol: &Tolerance) -> Result<Self> {
        let n = u.require_square()?;
        let d = kron(u, &ComplexMatrix::identity(ancilla.ambient_dim()));
        Self::new(n, ancilla, d, None, tol)
    }

    pub fn sys_dim(&self) -> usize {
        self.sys_dim
    }

    pub fn ancilla(&self) -> &BlockAlgebra {
        &self.ancilla
    }

    pub fn anc_dim(&self) -> usize {
        self.ancilla.ambient_dim()
    }

    pub fn d(&self) -> &ComplexMatrix {
        &self.d
    }

    pub fn modular_over(&self) -> Option<&SubalgebraSpec> {
        self.modular_over.as_ref()
    }

    /// Checks, in order: unitarity, returns to the ancilla, trace
    /// preservation at the first basis vector, and the modular algebra.
    pub fn validate(&self, tol: &Tolerance) -> Result<()> {
        let defect = unitarity_defect(&self.d)?;
        if defect > tol.abs_eps {
            return Err(Error::NotUnitary { defect });
        }
        let r = self.returns_defect();
        if r.defect > tol.abs_eps {
            let (i, j, k, l) = r.quad;
            return Err(Error::ReturnsViolation {
                i,
                j,
                k,
                l,
                defect: r.defect,
            });
        }
        let value = self.trace_preservation_value(0)?;
        if (value - 1.0).abs() > tol.abs_eps {
            return Err(Error::TracePreservation { index: 0, value });
        }
        if let Some((row, col, defect)) = self.modular_defect() {
            if defect > tol.abs_eps {
                return Err(Error::NotModular { row, col, defect });
            }
        }
        Ok(())
    }

    /// Trace preservation at every basis vector, not just the first.
    pub fn validate_all_basis(&self, tol: &Tolerance) -> Result<()> {
        self.validate(tol)?;
        for e in 1..self.sys_dim {
            let value = self.trace_preservation_value(e)?;
            if (value - 1.0).abs() > tol.abs_eps {
                return Err(Error::TracePreservation { index: e, value });
            }
        }
        Ok(())
    }

    fn ensure_valid(&self) -> Result<()> {
        if self.checked {
            Ok(())
        } else {
            self.validate(&Tolerance::default())
        }
    }

    /// The slice `d_{ij}`.
    pub fn slice_entry(&self, i: usize, j: usize) -> Result<ComplexMatrix> {
        let n = self.sys_dim;
        if i >= n || j >= n {
            return Err(Error::IndexOutOfRange { row: i, col: j, dim: n });
        }
        let k = self.anc_dim();
        Ok(self.d.block(i * k, j * k, k, k))
    }

    fn slices(&self) -> Vec<ComplexMatrix> {
        let (n, k) = (self.sys_dim, self.anc_dim());
        (0..n * n)
            .map(|ij| self.d.block((ij / n) * k, (ij % n) * k, k, k))
            .collect()
    }

    /// Row block `i` of `D`, a `k × nk` matrix.
    fn row_block(&self, i: usize) -> ComplexMatrix {
        let k = self.anc_dim();
        self.d.row_range(i * k, k)
    }

    /// Largest `‖d_{ij}^* d_{kl} − E(d_{ij}^* d_{kl})‖_F` over all quadruples.
    ///
    /// Products with the slices swapped are adjoints of each other, so each
    /// unordered pair is tested once.
    pub fn returns_defect(&self) -> ReturnsDefect {
        let n = self.sys_dim;
        let slices = self.slices();
        let mut worst = ReturnsDefect {
            defect: 0.0,
            quad: (0, 0, 0, 0),
        };
        for a in 0..n * n {
            for b in a..n * n {
                let prod = slices[a].adjoint_mul(&slices[b]).expect("slices share shape");
                let defect = self.ancilla.membership_defect(&prod).expect("slice matches ancilla");
                if defect > worst.defect {
                    worst = ReturnsDefect {
                        defect,
                        quad: (a / n, a % n, b / n, b % n),
                    };
                }
            }
        }
        worst
    }

    /// Whether every `d_{ij}^* d_{kl}` lies in the ancilla.
    pub fn returns_to_ancilla(&self, tol: &Tolerance) -> bool {
        self.returns_defect().defect <= tol.abs_eps
    }

    /// Whether every `k×k` block of `D^*(ε_{ij} ⊗ I)D` lies in the ancilla,
    /// computed from the full product rather than from slices.
    pub fn returns_equivalence_check(&self, tol: &Tolerance) -> bool {
        let (n, k) = (self.sys_dim, self.anc_dim());
        let id = ComplexMatrix::identity(k);
        for i in 0..n {
            for j in 0..n {
                let x = kron(&matrix_unit(n, i, j).expect("index in range"), &id);
                let z = self.d.adjoint_mul(&(&x * &self.d)).expect("square");
                for l in 0..n {
                    for m in 0..n {
                        let blk = z.block(l * k, m * k, k, k);
                        if self.ancilla.membership_defect(&blk).expect("block matches ancilla") > tol.abs_eps {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// `(tr ⊗ τ)(D^*(ε_{ee} ⊗ 1)D) = Σ_l τ(d_{el}^* d_{el})`.
    pub fn trace_preservation_value(&self, e_index: usize) -> Result<f64> {
        let n = self.sys_dim;
        if e_index >= n {
            return Err(Error::IndexOutOfRange {
                row: e_index,
                col: e_index,
                dim: n,
            });
        }
        let r = self.row_block(e_index);
        let z = r.adjoint_mul(&r)?;
        Ok(slice_right(&z, n, self.anc_dim(), &self.ancilla.trace_weights())?
            .trace()
            .re)
    }

    /// Largest distance from a slice `L_ω(D)` to the modular algebra, taken
    /// over the functionals `ω = ε_{κμ}`; `None` without a modular algebra.
    pub fn modular_defect(&self) -> Option<(usize, usize, f64)> {
        let spec = self.modular_over.as_ref()?;
        let (n, k) = (self.sys_dim, self.anc_dim());
        let mut worst = (0, 0, 0.0);
        for kap in 0..k {
            for mu in 0..k {
                let x = ComplexMatrix::from_fn(n, n, |i, j| self.d[(i * k + kap, j * k + mu)]);
                let defect = spec.membership_defect(&x).expect("spec matches system");
                if defect > worst.2 {
                    worst = (kap, mu, defect);
                }
            }
        }
        Some(worst)
    }

    /// `Φ_D`, with `Φ_D(ε_{ij}) = (id ⊗ τ)(R_i^* R_j)` for the row blocks
    /// `R_i` of `D`.
    pub fn phi_of(&self) -> Result<Channel> {
        self.ensure_valid()?;
        Ok(self.phi_unchecked())
    }

    pub(crate) fn phi_unchecked(&self) -> Channel {
        let (n, k) = (self.sys_dim, self.anc_dim());
        let weights = self.ancilla.trace_weights();
        let rows: Vec<ComplexMatrix> = (0..n).map(|i| self.row_block(i)).collect();
        Channel::from_unit_images(n, |i, j| {
            let z = rows[i].adjoint_mul(&rows[j]).expect("row blocks share shape");
            slice_right(&z, n, k, &weights).expect("weights validated by ancilla")
        })
        .expect("images are n×n")
    }

    /// `(id ⊗ id ⊗ τ)(D_{13}^* D_{23})` on `H ⊗ H ⊗ K`.
    pub fn symbol_formula(&self) -> Result<OperatorSymbol> {
        self.ensure_valid()?;
        let (n, k) = (self.sys_dim, self.anc_dim());
        let dims = [n, n, k];
        let d13 = embed_on_legs(&self.d, &dims, &[0, 2])?;
        let d23 = embed_on_legs(&self.d, &dims, &[1, 2])?;
        let prod = d13.adjoint_mul(&d23)?;
        OperatorSymbol::new(n, slice_right(&prod, n * n, k, &self.ancilla.trace_weights())?)
    }

    /// `Φ^m` from the dilation power formula: with
    /// `W = D_{1,m+1} ⋯ D_{1,2}` on `H ⊗ K^{⊗m}`,
    /// `Φ^m(x) = (id ⊗ τ^{⊗m})(W^*(x ⊗ 1)W)`.
    pub fn power_channel(&self, m: usize) -> Result<Channel> {
        self.ensure_valid()?;
        let (n, k) = (self.sys_dim, self.anc_dim());
        let km = u32::try_from(m)
            .ok()
            .and_then(|e| k.checked_pow(e))
            .filter(|&km| n.saturating_mul(km) <= POWER_SIZE_CAP)
            .ok_or(Error::SizeCap {
                size: n.saturating_mul(k.saturating_pow(m.min(64) as u32)),
                cap: POWER_SIZE_CAP,
            })?;
        if m == 0 {
            return Ok(Channel::identity(n));
        }
        let mut dims = vec![n];
        dims.extend(std::iter::repeat_n(k, m));
        let mut w = ComplexMatrix::identity(n * km);
        for leg in 1..=m {
            w = embed_on_legs(&self.d, &dims, &[0, leg])?.matmul(&w)?;
        }
        let base = self.ancilla.trace_weights();
        let mut weights = vec![1.0];
        for _ in 0..m {
            weights = weights.iter().flat_map(|&a| base.iter().map(move |&b| a * b)).collect();
        }
        let rows: Vec<ComplexMatrix> = (0..n).map(|i| w.row_range(i * km, km)).collect();
        let images: Vec<ComplexMatrix> = (0..n * n)
            .into_par_iter()
            .map(|ij| {
                let z = rows[ij / n].adjoint_mul(&rows[ij % n]).expect("row blocks share shape");
                slice_right(&z, n, km, &weights).expect("product weights form a state")
            })
            .collect();
        Channel::from_unit_images(n, |i, j| images[i * n + j].clone())
    }

    /// `λ·Φ_{D₁} + (1−λ)·Φ_{D₂}`, presented over `N₁ ⊕ N₂` with the state
    /// `λτ₁ ⊕ (1−λ)τ₂` and `D = Σ ε_{ij} ⊗ (d¹_{ij} ⊕ d²_{ij})`.
    ///
    /// At `λ ∈ {0, 1}` the zero-weight summand is dropped and the other
    /// presentation is returned unchanged.
    pub fn convex_combine(&self, other: &Self, lambda: f64) -> Result<Self> {
        if self.sys_dim != other.sys_dim {
            return Err(mismatch("convex combination", self.sys_dim, other.sys_dim));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidParameter(format!("λ must lie in [0, 1], got {lambda}")));
        }
        if lambda == 1.0 {
            return Ok(self.clone());
        }
        if lambda == 0.0 {
            return Ok(other.clone());
        }
        let n = self.sys_dim;
        let (k1, k2) = (self.anc_dim(), other.anc_dim());
        let k = k1 + k2;
        let ancilla = self.ancilla.direct_sum(&other.ancilla, lambda)?;
        let mut map = Vec::with_capacity(n * k);
        for i in 0..n {
            map.extend((0..k1).map(|a| i * k + a));
        }
        for i in 0..n {
            map.extend((0..k2).map(|b| i * k + k1 + b));
        }
        let d = Permutation::new(map)?.conjugate(&self.d.direct_sum(&other.d))?;
        let modular_over = match (&self.modular_over, &other.modular_over) {
            (Some(a), Some(b)) if a == b => Some(a.clone()),
            _ => None,
        };
        let mut p = Self::new_unchecked(n, ancilla, d, modular_over)?;
        p.checked = self.checked && other.checked;
        Ok(p)
    }

    /// `Φ_{D₁} ⊗ Φ_{D₂}`, presented over `N₁ ⊗ N₂` by the flipped `D₁ ⊗ D₂`.
    pub fn tensor_presentation(&self, other: &Self) -> Result<Self> {
        let (n1, n2) = (self.sys_dim, other.sys_dim);
        let (k1, k2) = (self.anc_dim(), other.anc_dim());
        let (ancilla, sigma) = self.ancilla.tensor(&other.ancilla)?;
        let k = k1 * k2;
        let mut map = vec![0; n1 * k1 * n2 * k2];
        for i1 in 0..n1 {
            for a in 0..k1 {
                for i2 in 0..n2 {
                    for b in 0..k2 {
                        let old = ((i1 * k1 + a) * n2 + i2) * k2 + b;
                        map[old] = (i1 * n2 + i2) * k + sigma.apply(a * k2 + b);
                    }
                }
            }
        }
        let d = Permutation::new(map)?.conjugate(&kron(&self.d, &other.d))?;
        let mut p = Self::new_unchecked(n1 * n2, ancilla, d, None)?;
        p.checked = self.checked && other.checked;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{choi_distance, compose, symbol_of, tensor};
    use crate::matcore::random::{haar_unitary, random_hermitian};
    use crate::matcore::unitary_exp;
    use crate::rng::SeedTree;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn hadamard() -> ComplexMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        ComplexMatrix::from_real_rows(&[&[s, s], &[s, -s]])
    }

    /// `exp(iA)` with `A` Hermitian in `M_n ⊗ N`.
    fn returning(seed: u64, n: usize, ancilla: &BlockAlgebra) -> FactorizablePresentation {
        let k = ancilla.ambient_dim();
        let mut rng = SeedTree::new(seed).rng();
        let a = random_hermitian(&mut rng, n * k);
        let mut pinched = ComplexMatrix::zeros(n * k, n * k);
        for i in 0..n {
            for j in 0..n {
                let e = ancilla.conditional_expectation(&a.block(i * k, j * k, k, k)).unwrap();
                pinched.set_block(i * k, j * k, &e);
            }
        }
        let d = unitary_exp(&pinched, 1.0, &tol()).unwrap();
        FactorizablePresentation::new(n, ancilla.clone(), d, None, &tol()).unwrap()
    }

    #[test]
    fn slices_of_identity_and_elementary_tensor() {
        let p = FactorizablePresentation::identity(3, BlockAlgebra::full(2).unwrap()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j {
                    ComplexMatrix::identity(2)
                } else {
                    ComplexMatrix::zeros(2, 2)
                };
                assert_eq!(p.slice_entry(i, j).unwrap(), expected);
            }
        }
        assert!(p.slice_entry(3, 0).is_err());

        let mut rng = SeedTree::new(4).rng();
        let u = haar_unitary(&mut rng, 2);
        let v = haar_unitary(&mut rng, 3);
        let q = FactorizablePresentation::new(2, BlockAlgebra::full(3).unwrap(), kron(&u, &v), None, &tol()).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!(q.slice_entry(i, j).unwrap().max_abs_diff(&v.scale(u[(i, j)])) < 1e-15);
            }
        }
    }

    #[test]
    fn reassembly_from_slices() {
        let p = returning(11, 3, &BlockAlgebra::from_parts(&[2, 1], &[0.6, 0.4]).unwrap());
        let mut rebuilt = ComplexMatrix::zeros(9, 9);
        for i in 0..3 {
            for j in 0..3 {
                rebuilt = &rebuilt + &kron(&matrix_unit(3, i, j).unwrap(), &p.slice_entry(i, j).unwrap());
            }
        }
        assert_eq!(rebuilt, *p.d());
    }

    #[test]
    fn full_ancilla_always_returns() {
        let mut rng = SeedTree::new(5).rng();
        let d = haar_unitary(&mut rng, 6);
        let p = FactorizablePresentation::new_unchecked(3, BlockAlgebra::full(2).unwrap(), d, None).unwrap();
        assert!(p.returns_to_ancilla(&tol()));
        assert!(p.returns_equivalence_check(&tol()));
    }

    #[test]
    fn off_diagonal_hadamard_block_fails_over_masa() {
        // D = [[Z, H], [H, -X]] / √2, so d₀₀^* d₀₁ = ZH / 2 has off-diagonal mass
        let h = hadamard();
        let z = ComplexMatrix::real_diag(&[1.0, -1.0]);
        let mut d = ComplexMatrix::zeros(4, 4);
        d.set_block(0, 0, &z.scale_real(std::f64::consts::FRAC_1_SQRT_2));
        d.set_block(0, 2, &h.scale_real(std::f64::consts::FRAC_1_SQRT_2));
        d.set_block(2, 0, &h.scale_real(std::f64::consts::FRAC_1_SQRT_2));
        d.set_block(2, 2, &(&(&h * &z) * &h).scale_real(-std::f64::consts::FRAC_1_SQRT_2));
        assert!(unitarity_defect(&d).unwrap() < 1e-14);
        let masa = BlockAlgebra::abelian(&[0.5, 0.5]).unwrap();
        let p = FactorizablePresentation::new_unchecked(2, masa, d, None).unwrap();
        let d00 = p.slice_entry(0, 0).unwrap();
        let d01 = p.slice_entry(0, 1).unwrap();
        let prod = d00.adjoint_mul(&d01).unwrap();
        assert!(prod[(0, 1)].norm() > 0.1);
        assert!(!p.returns_to_ancilla(&tol()));
        assert!(!p.returns_equivalence_check(&tol()));
        assert!(matches!(
            FactorizablePresentation::new(2, p.ancilla().clone(), p.d().clone(), None, &tol()),
            Err(Error::ReturnsViolation { .. })
        ));
    }

    #[test]
    fn block_of_conjugated_unit_is_slice_product() {
        let p = returning(21, 3, &BlockAlgebra::full(2).unwrap());
        let (n, k) = (3, 2);
        for i in 0..n {
            for j in 0..n {
                let x = kron(&matrix_unit(n, i, j).unwrap(), &ComplexMatrix::identity(k));
                let z = p.d().adjoint_mul(&(&x * p.d())).unwrap();
                for l in 0..n {
                    for kk in 0..n {
                        let expected = p
                            .slice_entry(i, l)
                            .unwrap()
                            .adjoint_mul(&p.slice_entry(j, kk).unwrap())
                            .unwrap();
                        assert!(z.block(l * k, kk * k, k, k).max_abs_diff(&expected) < 1e-13);
                    }
                }
            }
        }
    }

    #[test]
    fn phi_examples() {
        let anc = BlockAlgebra::from_parts(&[2, 1], &[0.5, 0.5]).unwrap();
        let p = FactorizablePresentation::identity(3, anc.clone()).unwrap();
        assert!(choi_distance(&p.phi_of().unwrap(), &Channel::identity(3)).unwrap() < 1e-15);

        let mut rng = SeedTree::new(8).rng();
        let u = haar_unitary(&mut rng, 3);
        let q = FactorizablePresentation::conjugation(&u, anc, &tol()).unwrap();
        assert!(choi_distance(&q.phi_of().unwrap(), &Channel::conjugation(&u).unwrap()).unwrap() < 1e-13);
    }

    #[test]
    fn diagonal_presentation_gives_schur_channel() {
        let anc = BlockAlgebra::from_parts(&[2, 1], &[0.7, 0.3]).unwrap();
        let mut rng = SeedTree::new(12).rng();
        let ds: Vec<ComplexMatrix> = (0..3).map(|_| anc.random_unitary(&mut rng)).collect();
        let mut d = ComplexMatrix::zeros(9, 9);
        for (i, di) in ds.iter().enumerate() {
            d.set_block(i * 3, i * 3, di);
        }
        let p = FactorizablePresentation::new(3, anc.clone(), d, Some(SubalgebraSpec::diagonal(3).unwrap()), &tol())
            .unwrap();
        let phi = p.phi_of().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let b = anc.trace(&ds[i].adjoint_mul(&ds[j]).unwrap()).unwrap();
                let expected = matrix_unit(3, i, j).unwrap().scale(b);
                assert!(phi.unit_image(i, j).max_abs_diff(&expected) < 1e-13);
            }
        }
    }

    #[test]
    fn channel_laws_and_symbol_identity() {
        let t = tol();
        for (seed, anc) in [
            (1, BlockAlgebra::full(2).unwrap()),
            (2, BlockAlgebra::abelian(&[0.25, 0.75]).unwrap()),
            (3, BlockAlgebra::from_parts(&[2, 1], &[0.4, 0.6]).unwrap()),
        ] {
            let p = returning(seed, 3, &anc);
            let phi = p.phi_of().unwrap();
            assert!(phi.is_cp(&t) && phi.is_tp(&t) && phi.is_unital(&t));
            let sym = p.symbol_formula().unwrap();
            assert!(sym.matrix.max_abs_diff(&symbol_of(&phi).matrix) < 1e-12);
            for i in 0..3 {
                for l in 0..3 {
                    for j in 0..3 {
                        for kk in 0..3 {
                            let dd = p
                                .slice_entry(i, l)
                                .unwrap()
                                .adjoint_mul(&p.slice_entry(j, kk).unwrap())
                                .unwrap();
                            let expected = anc.trace(&dd).unwrap();
                            assert!((sym.pairing(i, kk, l, j) - expected).norm() < 1e-12);
                        }
                    }
                }
            }
        }
        let id = FactorizablePresentation::identity(2, BlockAlgebra::full(2).unwrap()).unwrap();
        assert!(
            id.symbol_formula()
                .unwrap()
                .matrix
                .max_abs_diff(&ComplexMatrix::identity(4))
                < 1e-15
        );
    }

    #[test]
    fn powers_match_composition() {
        let p = returning(31, 2, &BlockAlgebra::full(2).unwrap());
        let phi = p.phi_of().unwrap();
        assert!(choi_distance(&p.power_channel(0).unwrap(), &Channel::identity(2)).unwrap() < 1e-15);
        assert!(choi_distance(&p.power_channel(1).unwrap(), &phi).unwrap() < 1e-13);
        let mut acc = phi.clone();
        for m in 2..=3 {
            acc = compose(&phi, &acc).unwrap();
            assert!(
                choi_distance(&p.power_channel(m).unwrap(), &acc).unwrap() < 1e-12,
                "m = {m}"
            );
        }
        assert!(matches!(p.power_channel(12), Err(Error::SizeCap { .. })));
        assert!(matches!(p.power_channel(usize::MAX), Err(Error::SizeCap { .. })));
    }

    #[test]
    fn trace_preservation_witness() {
        let p = returning(41, 3, &BlockAlgebra::abelian(&[0.5, 0.5]).unwrap());
        for e in 0..3 {
            assert!((p.trace_preservation_value(e).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!(p.trace_preservation_value(3).is_err());

        let mut d = p.d().clone();
        d.set_block(0, 0, &ComplexMatrix::zeros(2, 6));
        let broken = FactorizablePresentation::new_unchecked(3, p.ancilla().clone(), d, None).unwrap();
        assert!(broken.trace_preservation_value(0).unwrap().abs() < 1e-15);
        assert!(matches!(broken.validate(&tol()), Err(Error::NotUnitary { .. })));
        assert!(broken.phi_of().is_err());
    }

    #[test]
    fn convex_combination_is_choi_affine() {
        let mut rng = SeedTree::new(51).rng();
        let u = haar_unitary(&mut rng, 2);
        let v = haar_unitary(&mut rng, 2);
        let p1 = FactorizablePresentation::conjugation(&u, BlockAlgebra::full(1).unwrap(), &tol()).unwrap();
        let p2 = FactorizablePresentation::conjugation(&v, BlockAlgebra::full(1).unwrap(), &tol()).unwrap();
        let half = p1.convex_combine(&p2, 0.5).unwrap();
        half.validate(&tol()).unwrap();
        let avg = Channel::mixture(&[
            (0.5, &Channel::conjugation(&u).unwrap()),
            (0.5, &Channel::conjugation(&v).unwrap()),
        ])
        .unwrap();
        assert!(choi_distance(&half.phi_of().unwrap(), &avg).unwrap() < 1e-13);
        assert!((half.ancilla().trace(&ComplexMatrix::identity(2)).unwrap() - 1.0).norm() < 1e-15);

        let q1 = returning(52, 2, &BlockAlgebra::full(2).unwrap());
        let q2 = returning(53, 2, &BlockAlgebra::abelian(&[0.3, 0.2, 0.5]).unwrap());
        for lambda in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let c = q1.convex_combine(&q2, lambda).unwrap();
            c.validate(&tol()).unwrap();
            let expected =
                Channel::mixture(&[(lambda, &q1.phi_of().unwrap()), (1.0 - lambda, &q2.phi_of().unwrap())]).unwrap();
            assert!(choi_distance(&c.phi_of().unwrap(), &expected).unwrap() < 1e-12);
        }
        assert!(q1.convex_combine(&q2, 1.5).is_err());
        assert!(q1
            .convex_combine(&returning(54, 3, &BlockAlgebra::full(2).unwrap()), 0.5)
            .is_err());
    }

    #[test]
    fn tensor_presentation_factorises() {
        let q1 = returning(61, 2, &BlockAlgebra::from_parts(&[2, 1], &[0.5, 0.5]).unwrap());
        let q2 = returning(62, 2, &BlockAlgebra::abelian(&[0.3, 0.7]).unwrap());
        let t = q1.tensor_presentation(&q2).unwrap();
        t.validate(&tol()).unwrap();
        let expected = tensor(&q1.phi_of().unwrap(), &q2.phi_of().unwrap());
        assert!(choi_distance(&t.phi_of().unwrap(), &expected).unwrap() < 1e-12);

        let mut rng = SeedTree::new(63).rng();
        let u = haar_unitary(&mut rng, 2);
        let v = haar_unitary(&mut rng, 3);
        let a = FactorizablePresentation::conjugation(&u, BlockAlgebra::full(2).unwrap(), &tol()).unwrap();
        let b = FactorizablePresentation::conjugation(&v, BlockAlgebra::full(1).unwrap(), &tol()).unwrap();
        let uv = Channel::conjugation(&kron(&u, &v)).unwrap();
        assert!(choi_distance(&a.tensor_presentation(&b).unwrap().phi_of().unwrap(), &uv).unwrap() < 1e-13);
    }

    #[test]
    fn modular_presentation_validation() {
        let spec = SubalgebraSpec::diagonal(2).unwrap();
        let masa = BlockAlgebra::full(2).unwrap();
        let mut rng = SeedTree::new(71).rng();
        let d = haar_unitary(&mut rng, 4);
        let err = FactorizablePresentation::new(2, masa.clone(), d, Some(spec.clone()), &tol()).unwrap_err();
        assert!(matches!(err, Error::NotModular { .. }));
        let mut d = ComplexMatrix::zeros(4, 4);
        d.set_block(0, 0, &haar_unitary(&mut rng, 2));
        d.set_block(2, 2, &haar_unitary(&mut rng, 2));
        let p = FactorizablePresentation::new(2, masa, d, Some(spec), &tol()).unwrap();
        assert!(p.modular_defect().unwrap().2 < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let p = returning(81, 2, &BlockAlgebra::from_parts(&[1, 1], &[0.5, 0.5]).unwrap());
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"D\"") && s.contains("\"modular_over\":null"));
        let back: FactorizablePresentation = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        back.validate(&tol()).unwrap();
        let bad = s.replace("\"sys_dim\":2", "\"sys_dim\":3");
        assert!(serde_json::from_str::<FactorizablePresentation>(&bad).is_err());
    }
}
