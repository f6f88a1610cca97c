//! Basis permutations and leg placement on multi-factor tensor spaces.
//!
//! All flips, direct-sum interleavings and leg operators in the crate go
//! through this module.

use super::{kron, ComplexMatrix};
use crate::error::{mismatch, Error, Result};

/// A permutation of basis indices: old index `i` moves to `map[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; map.len()];
        for &m in &map {
            if m >= map.len() || seen[m] {
                return Err(Error::InvalidParameter(format!("not a permutation: {map:?}")));
            }
            seen[m] = true;
        }
        Ok(Self { map })
    }

    pub fn identity(n: usize) -> Self {
        Self { map: (0..n).collect() }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.map.len()];
        for (i, &m) in self.map.iter().enumerate() {
            inv[m] = i;
        }
        Self { map: inv }
    }

    /// Reorders tensor legs. The input space has legs of sizes `dims`;
    /// leg `t` of the output space is input leg `order[t]`.
    pub fn legs(dims: &[usize], order: &[usize]) -> Result<Self> {
        if order.len() != dims.len() {
            return Err(mismatch("leg order", dims.len(), order.len()));
        }
        Permutation::new(order.to_vec())?;
        let total: usize = dims.iter().product();
        let out_dims: Vec<usize> = order.iter().map(|&o| dims[o]).collect();
        let mut digits = vec![0usize; dims.len()];
        let mut map = Vec::with_capacity(total);
        for old in 0..total {
            let mut rem = old;
            for (leg, &d) in dims.iter().enumerate().rev() {
                digits[leg] = rem % d;
                rem /= d;
            }
            let mut new = 0;
            for (t, &o) in order.iter().enumerate() {
                new = new * out_dims[t] + digits[o];
            }
            map.push(new);
        }
        Ok(Self { map })
    }

    /// The matrix `P` with `P e_i = e_{map[i]}`.
    pub fn matrix(&self) -> ComplexMatrix {
        let n = self.map.len();
        let mut p = ComplexMatrix::zeros(n, n);
        for (i, &m) in self.map.iter().enumerate() {
            p[(m, i)] = super::ONE;
        }
        p
    }

    /// `P a P^T`, computed by index relabelling.
    pub fn conjugate(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        let n = self.map.len();
        a.require_shape("permutation conjugate", n, n)?;
        let mut out = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(self.map[i], self.map[j])] = a[(i, j)];
            }
        }
        Ok(out)
    }
}

/// Places `op` on the tensor legs `legs` (in that order) of the space with
/// leg sizes `dims`, acting as the identity on every other leg.
///
/// Built as `op ⊗ I` on the rearranged space followed by one leg permutation
/// back to the natural order.
pub fn embed_on_legs(op: &ComplexMatrix, dims: &[usize], legs: &[usize]) -> Result<ComplexMatrix> {
    let op_dim: usize = legs.iter().map(|&l| dims.get(l).copied().unwrap_or(0)).product();
    op.require_shape("leg operator", op_dim, op_dim)?;
    let mut used = vec![false; dims.len()];
    for &l in legs {
        if l >= dims.len() || used[l] {
            return Err(Error::InvalidParameter(format!(
                "bad leg list {legs:?} for {} legs",
                dims.len()
            )));
        }
        used[l] = true;
    }
    let rest: Vec<usize> = (0..dims.len()).filter(|&l| !used[l]).collect();
    let rest_dim: usize = rest.iter().map(|&l| dims[l]).product();
    let arranged: Vec<usize> = legs.iter().chain(&rest).copied().collect();
    let arranged_dims: Vec<usize> = arranged.iter().map(|&l| dims[l]).collect();
    let mut order = vec![0; dims.len()];
    for (pos, &leg) in arranged.iter().enumerate() {
        order[leg] = pos;
    }
    let perm = Permutation::legs(&arranged_dims, &order)?;
    perm.conjugate(&kron(op, &ComplexMatrix::identity(rest_dim)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::random::ginibre;
    use crate::rng::SeedTree;

    #[test]
    fn swap_flip_matches_elementary_tensors() {
        let mut rng = SeedTree::new(2).rng();
        let a = ginibre(&mut rng, 2, 2);
        let b = ginibre(&mut rng, 3, 3);
        let flip = Permutation::legs(&[2, 3], &[1, 0]).unwrap();
        let flipped = flip.conjugate(&kron(&a, &b)).unwrap();
        assert!(flipped.max_abs_diff(&kron(&b, &a)) < 1e-15);
        let via_matrix = &(&flip.matrix() * &kron(&a, &b)) * &flip.matrix().transpose();
        assert!(via_matrix.max_abs_diff(&flipped) < 1e-15);
    }

    #[test]
    fn embedding_on_outer_legs() {
        let mut rng = SeedTree::new(9).rng();
        let a = ginibre(&mut rng, 2, 2);
        let c = ginibre(&mut rng, 3, 3);
        let ac = kron(&a, &c);
        let placed = embed_on_legs(&ac, &[2, 2, 3], &[0, 2]).unwrap();
        let expected = kron(&kron(&a, &ComplexMatrix::identity(2)), &c);
        assert!(placed.max_abs_diff(&expected) < 1e-15);
        let swapped = embed_on_legs(&kron(&c, &a), &[2, 2, 3], &[2, 0]).unwrap();
        assert!(swapped.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn inverse_round_trip() {
        let p = Permutation::legs(&[2, 3, 2], &[2, 0, 1]).unwrap();
        let inv = p.inverse();
        for i in 0..p.len() {
            assert_eq!(inv.apply(p.apply(i)), i);
        }
        assert!(Permutation::new(vec![0, 0]).is_err());
    }
}
