//! Linear maps on `M_n` stored as Choi matrices.
//!
//! The Choi matrix is `C(Φ) = Σ_{i,j} ε_{ij} ⊗ Φ(ε_{ij})` with the input
//! factor first, so `C[(i,l),(j,m)] = Φ(ε_{ij})[l,m]`. Trace preservation
//! then reads "the partial trace over the second factor is `I_n`", which is
//! the same slice as [`slice_right`](crate::matcore::slice_right).

use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::SubalgebraSpec;
use crate::error::{mismatch, Error, Result};
use crate::matcore::{hermitian_eig, hermitian_part, ComplexMatrix, Tolerance, ONE, ZERO};

/// Cached structural predicates, evaluated at the default tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelFlags {
    pub cp: bool,
    pub tp: bool,
    pub unital: bool,
}

#[derive(Deserialize)]
struct ChannelJson {
    dim: usize,
    choi: ComplexMatrix,
}

/// A linear map on `M_n`, stored as its Choi matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ChannelJson")]
pub struct Channel {
    dim: usize,
    choi: ComplexMatrix,
    #[serde(skip)]
    flags: OnceLock<ChannelFlags>,
}

impl TryFrom<ChannelJson> for Channel {
    type Error = Error;

    fn try_from(raw: ChannelJson) -> Result<Self> {
        Self::from_choi(raw.dim, raw.choi)
    }
}

impl PartialEq for Channel {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.choi == other.choi
    }
}

impl Channel {
    pub fn from_choi(dim: usize, choi: ComplexMatrix) -> Result<Self> {
        choi.require_shape("Choi matrix", dim * dim, dim * dim)?;
        Ok(Self {
            dim,
            choi,
            flags: OnceLock::new(),
        })
    }

    fn with_flags(dim: usize, choi: ComplexMatrix, flags: ChannelFlags) -> Self {
        let cell = OnceLock::new();
        let _ = cell.set(flags);
        Self { dim, choi, flags: cell }
    }

    /// Builds the channel from the images of the matrix units.
    pub fn from_unit_images(dim: usize, mut image: impl FnMut(usize, usize) -> ComplexMatrix) -> Result<Self> {
        let mut choi = ComplexMatrix::zeros(dim * dim, dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                let b = image(i, j);
                b.require_shape("matrix unit image", dim, dim)?;
                choi.set_block(i * dim, j * dim, &b);
            }
        }
        Self::from_choi(dim, choi)
    }

    pub fn identity(dim: usize) -> Self {
        let choi = ComplexMatrix::from_fn(dim * dim, dim * dim, |r, c| {
            let (i, l) = (r / dim, r % dim);
            let (j, m) = (c / dim, c % dim);
            if i == l && j == m {
                ONE
            } else {
                ZERO
            }
        });
        Self::with_flags(
            dim,
            choi,
            ChannelFlags {
                cp: true,
                tp: true,
                unital: true,
            },
        )
    }

    /// `Φ(x) = Σ_r k_r^* x k_r`.
    pub fn from_kraus(kraus: &[ComplexMatrix]) -> Result<Self> {
        let first = kraus.first().ok_or(Error::Empty("Kraus operator list"))?;
        let n = first.require_square()?;
        for k in kraus {
            k.require_shape("Kraus operator", n, n)?;
        }
        let nn = n * n;
        let mut choi = ComplexMatrix::zeros(nn, nn);
        let mut left = ComplexMatrix::zeros(n, n);
        let mut right = ComplexMatrix::zeros(n, n);
        for k in kraus {
            // C[(i,l),(j,m)] += conj(k[i,l]) k[j,m]
            for r in 0..nn {
                let a = k.as_slice()[r].conj();
                if a == ZERO {
                    continue;
                }
                for c in 0..nn {
                    choi[(r, c)] += a * k.as_slice()[c];
                }
            }
            left = &left + &k.matmul(&k.adjoint())?;
            right = &right + &k.adjoint_mul(k)?;
        }
        let tol = Tolerance::default();
        let id = ComplexMatrix::identity(n);
        let flags = ChannelFlags {
            cp: true,
            tp: left.distance(&id) <= tol.abs_eps,
            unital: right.distance(&id) <= tol.abs_eps,
        };
        Ok(Self::with_flags(n, choi, flags))
    }

    /// `Ad_u : x ↦ u^* x u`.
    pub fn conjugation(u: &ComplexMatrix) -> Result<Self> {
        Self::from_kraus(std::slice::from_ref(u))
    }

    /// The transpose map, positive but not completely positive.
    pub fn transpose_map(dim: usize) -> Self {
        let choi = ComplexMatrix::from_fn(dim * dim, dim * dim, |r, c| {
            let (i, l) = (r / dim, r % dim);
            let (j, m) = (c / dim, c % dim);
            if l == j && m == i {
                ONE
            } else {
                ZERO
            }
        });
        Self::with_flags(
            dim,
            choi,
            ChannelFlags {
                cp: false,
                tp: true,
                unital: true,
            },
        )
    }

    /// `x ↦ tr(x) I / n`.
    pub fn completely_depolarising(dim: usize) -> Self {
        let choi = ComplexMatrix::from_fn(dim * dim, dim * dim, |r, c| {
            let (i, l) = (r / dim, r % dim);
            let (j, m) = (c / dim, c % dim);
            if i == j && l == m {
                Complex64::new(1.0 / dim as f64, 0.0)
            } else {
                ZERO
            }
        });
        Self::with_flags(
            dim,
            choi,
            ChannelFlags {
                cp: true,
                tp: true,
                unital: true,
            },
        )
    }

    /// Affine combination `Σ w_r Φ_r` of channels on the same space.
    pub fn mixture(terms: &[(f64, &Channel)]) -> Result<Self> {
        let (_, first) = terms.first().ok_or(Error::Empty("mixture terms"))?;
        let dim = first.dim;
        let mut choi = ComplexMatrix::zeros(dim * dim, dim * dim);
        for (w, ch) in terms {
            if ch.dim != dim {
                return Err(mismatch("mixture", dim, ch.dim));
            }
            choi.add_scaled(Complex64::new(*w, 0.0), &ch.choi);
        }
        Self::from_choi(dim, choi)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn choi(&self) -> &ComplexMatrix {
        &self.choi
    }

    /// `Φ(ε_{ij})`, the `(i, j)` block of the Choi matrix.
    pub fn unit_image(&self, i: usize, j: usize) -> ComplexMatrix {
        let n = self.dim;
        self.choi.block(i * n, j * n, n, n)
    }

    /// `Φ(x) = Σ_{i,j} x[i,j] Φ(ε_{ij})`.
    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        let n = self.dim;
        x.require_shape("channel input", n, n)?;
        let mut out = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let s = x[(i, j)];
                if s == ZERO {
                    continue;
                }
                for l in 0..n {
                    for m in 0..n {
                        out[(l, m)] += s * self.choi[(i * n + l, j * n + m)];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Smallest eigenvalue of the Hermitian part of the Choi matrix.
    pub fn min_choi_eigenvalue(&self, tol: &Tolerance) -> Result<f64> {
        let defect = self.choi.hermitian_defect()?;
        if defect > tol.abs_eps * self.choi.frobenius_norm().max(1.0) {
            return Err(Error::NotHermitian { defect });
        }
        Ok(hermitian_eig(&hermitian_part(&self.choi), tol)?.min())
    }

    /// `‖tr₂ C − I‖_F`, zero iff trace preserving.
    pub fn tp_defect(&self) -> f64 {
        let n = self.dim;
        let reduced = ComplexMatrix::from_fn(n, n, |i, j| (0..n).map(|l| self.choi[(i * n + l, j * n + l)]).sum());
        reduced.distance(&ComplexMatrix::identity(n))
    }

    /// `‖tr₁ C − I‖_F = ‖Φ(I) − I‖_F`, zero iff unital.
    pub fn unital_defect(&self) -> f64 {
        let n = self.dim;
        let reduced = ComplexMatrix::from_fn(n, n, |l, m| (0..n).map(|i| self.choi[(i * n + l, i * n + m)]).sum());
        reduced.distance(&ComplexMatrix::identity(n))
    }

    pub fn is_cp(&self, tol: &Tolerance) -> bool {
        self.min_choi_eigenvalue(tol).is_ok_and(|l| l >= -tol.abs_eps)
    }

    pub fn is_tp(&self, tol: &Tolerance) -> bool {
        self.tp_defect() <= tol.abs_eps
    }

    pub fn is_unital(&self, tol: &Tolerance) -> bool {
        self.unital_defect() <= tol.abs_eps
    }

    /// Structural flags at the default tolerance, computed once.
    pub fn flags(&self) -> ChannelFlags {
        *self.flags.get_or_init(|| {
            let tol = Tolerance::default();
            ChannelFlags {
                cp: self.is_cp(&tol),
                tp: self.is_tp(&tol),
                unital: self.is_unital(&tol),
            }
        })
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Channel) -> Result<Channel> {
        compose(self, inner)
    }

    pub fn tensor(&self, other: &Channel) -> Channel {
        tensor(self, other)
    }
}

/// The channel `x ↦ outer(inner(x))`.
pub fn compose(outer: &Channel, inner: &Channel) -> Result<Channel> {
    if outer.dim != inner.dim {
        return Err(mismatch("compose", outer.dim, inner.dim));
    }
    let n = outer.dim;
    let mut blocks = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            blocks.push(outer.apply(&inner.unit_image(i, j))?);
        }
    }
    Channel::from_unit_images(n, |i, j| blocks[i * n + j].clone())
}

/// `Φ₁ ⊗ Φ₂` on `M_{n₁} ⊗ M_{n₂}` with Kronecker index order.
pub fn tensor(a: &Channel, b: &Channel) -> Channel {
    let (n1, n2) = (a.dim, b.dim);
    let n = n1 * n2;
    let choi = ComplexMatrix::from_fn(n * n, n * n, |r, c| {
        let (big_i, big_l) = (r / n, r % n);
        let (big_j, big_m) = (c / n, c % n);
        let (i1, i2) = (big_i / n2, big_i % n2);
        let (l1, l2) = (big_l / n2, big_l % n2);
        let (j1, j2) = (big_j / n2, big_j % n2);
        let (m1, m2) = (big_m / n2, big_m % n2);
        a.choi[(i1 * n1 + l1, j1 * n1 + m1)] * b.choi[(i2 * n2 + l2, j2 * n2 + m2)]
    });
    Channel::from_choi(n, choi).expect("tensor Choi has consistent shape")
}

/// Frobenius distance between Choi matrices.
pub fn choi_distance(a: &Channel, b: &Channel) -> Result<f64> {
    if a.dim != b.dim {
        return Err(mismatch("choi_distance", a.dim, b.dim));
    }
    Ok(a.choi.distance(&b.choi))
}

/// The operator symbol `u_Φ` on `H ⊗ H`, defined entrywise by
/// `⟨u (e_i ⊗ e_k), e_l ⊗ e_j⟩ = tr(Φ(ε_{ij}) ε_{kl}) = Φ(ε_{ij})[l,k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorSymbol {
    pub dim: usize,
    pub matrix: ComplexMatrix,
}

impl OperatorSymbol {
    pub fn new(dim: usize, matrix: ComplexMatrix) -> Result<Self> {
        matrix.require_shape("operator symbol", dim * dim, dim * dim)?;
        Ok(Self { dim, matrix })
    }

    /// `⟨u (e_i ⊗ e_k), e_l ⊗ e_j⟩`.
    pub fn pairing(&self, i: usize, k: usize, l: usize, j: usize) -> Complex64 {
        let n = self.dim;
        self.matrix[(l * n + j, i * n + k)]
    }

    /// Recovers the channel by inverting the index permutation.
    pub fn to_channel(&self) -> Channel {
        let n = self.dim;
        let choi = ComplexMatrix::from_fn(n * n, n * n, |r, c| {
            let (i, l) = (r / n, r % n);
            let (j, k) = (c / n, c % n);
            self.matrix[(l * n + j, i * n + k)]
        });
        Channel::from_choi(n, choi).expect("symbol has consistent shape")
    }
}

/// `u[(l,j),(i,k)] = C[(i,l),(j,k)]`.
pub fn symbol_of(ch: &Channel) -> OperatorSymbol {
    let n = ch.dim;
    let matrix = ComplexMatrix::from_fn(n * n, n * n, |r, c| {
        let (l, j) = (r / n, r % n);
        let (i, k) = (c / n, c % n);
        ch.choi[(i * n + l, j * n + k)]
    });
    OperatorSymbol { dim: n, matrix }
}

/// Largest violation of `Φ(g x) = g Φ(x)` and `Φ(x g) = Φ(x) g` over matrix
/// units `x` and the given family `g`.
///
/// If the family generates an algebra `A` (as an algebra), a zero defect is
/// equivalent to `Φ(a x b) = a Φ(x) b` for all `a, b ∈ A`.
pub fn bimodular_defect(ch: &Channel, family: &[ComplexMatrix]) -> Result<f64> {
    let n = ch.dim;
    let mut worst: f64 = 0.0;
    for g in family {
        g.require_shape("bimodule generator", n, n)?;
        for i in 0..n {
            for j in 0..n {
                let image = ch.unit_image(i, j);
                // g ε_ij = Σ_a g[a,i] ε_aj,  ε_ij g = Σ_b g[j,b] ε_ib
                let mut left = ComplexMatrix::zeros(n, n);
                let mut right = ComplexMatrix::zeros(n, n);
                for a in 0..n {
                    if g[(a, i)] != ZERO {
                        left.add_scaled(g[(a, i)], &ch.unit_image(a, j));
                    }
                    if g[(j, a)] != ZERO {
                        right.add_scaled(g[(j, a)], &ch.unit_image(i, a));
                    }
                }
                worst = worst.max(left.distance(&(g * &image)));
                worst = worst.max(right.distance(&(&image * g)));
            }
        }
    }
    Ok(worst)
}

pub fn check_bimodular_with(ch: &Channel, family: &[ComplexMatrix], tol: &Tolerance) -> Result<bool> {
    Ok(bimodular_defect(ch, family)? <= tol.abs_eps)
}

/// Whether `Φ` is a bimodule map over the commutant of `spec`.
pub fn check_bimodular(ch: &Channel, spec: &SubalgebraSpec, tol: &Tolerance) -> Result<bool> {
    if spec.ambient_dim() != ch.dim {
        return Err(mismatch("bimodularity spec", ch.dim, spec.ambient_dim()));
    }
    check_bimodular_with(ch, &spec.commutant_generators(), tol)
}
