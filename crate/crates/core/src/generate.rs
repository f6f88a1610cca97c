//! Seeded instance generators and the compact block-spec syntax.
//!
//! Block specs are comma-separated lists. For an ancilla each item is `m`
//! or `m@w` (block size and optional weight; either every item carries a
//! weight or none does, in which case weights are proportional to size).
//! For a system algebra each item is `m` or `mxc` (factor size and
//! multiplicity).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{BlockAlgebra, Part, SubalgebraSpec};
use crate::dilation::FactorizablePresentation;
use crate::error::{Error, Result};
use crate::hierarchy::UnitaryFamily;
use crate::matcore::random::{haar_unitary, random_hermitian, simplex_point};
use crate::matcore::{unitary_exp, ComplexMatrix, Tolerance};
use crate::schur::{symbol_from_unitaries, SchurSymbol};

fn parse_count(item: &str, what: &str) -> Result<usize> {
    match item.trim().parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(Error::MalformedSpec(format!(
            "{what} must be a positive integer, got {item:?}"
        ))),
    }
}

/// Parses an ancilla such as `"2,1"` or `"2@0.6,1@0.4"`.
pub fn parse_ancilla(spec: &str) -> Result<BlockAlgebra> {
    let items: Vec<&str> = spec.split(',').map(str::trim).collect();
    if items.iter().any(|s| s.is_empty()) {
        return Err(Error::MalformedSpec(format!("empty block in {spec:?}")));
    }
    let weighted = items.iter().filter(|s| s.contains('@')).count();
    if weighted == 0 {
        let dims = items
            .iter()
            .map(|s| parse_count(s, "block size"))
            .collect::<Result<Vec<_>>>()?;
        return BlockAlgebra::with_dims(&dims);
    }
    if weighted != items.len() {
        return Err(Error::MalformedSpec(format!(
            "either all or no blocks carry weights in {spec:?}"
        )));
    }
    let mut dims = Vec::with_capacity(items.len());
    let mut weights = Vec::with_capacity(items.len());
    for item in items {
        let (d, w) = item.split_once('@').expect("checked above");
        dims.push(parse_count(d, "block size")?);
        let w: f64 = w
            .trim()
            .parse()
            .map_err(|_| Error::MalformedSpec(format!("bad weight {w:?}")))?;
        weights.push(w);
    }
    BlockAlgebra::from_parts(&dims, &weights)
}

/// Parses a system algebra such as `"2,2"` or `"2x1,1x2"`.
pub fn parse_subalgebra(spec: &str) -> Result<SubalgebraSpec> {
    let mut parts = Vec::new();
    for item in spec.split(',').map(str::trim) {
        if item.is_empty() {
            return Err(Error::MalformedSpec(format!("empty part in {spec:?}")));
        }
        let part = match item.split_once('x') {
            Some((m, c)) => Part {
                factor: parse_count(m, "factor size")?,
                mult: parse_count(c, "multiplicity")?,
            },
            None => Part {
                factor: parse_count(item, "factor size")?,
                mult: 1,
            },
        };
        parts.push(part);
    }
    SubalgebraSpec::new(parts)
}

/// The algebra `M_n ⊗ N` (or `A ⊗ N` for a modular algebra `A`), projected
/// onto slice by slice.
fn project_onto_dilation_algebra(
    a: &ComplexMatrix,
    n: usize,
    ancilla: &BlockAlgebra,
    modular_over: Option<&SubalgebraSpec>,
) -> Result<ComplexMatrix> {
    let k = ancilla.ambient_dim();
    let mut out = ComplexMatrix::zeros(n * k, n * k);
    for i in 0..n {
        for j in 0..n {
            let e = ancilla.conditional_expectation(&a.block(i * k, j * k, k, k))?;
            out.set_block(i * k, j * k, &e);
        }
    }
    if let Some(spec) = modular_over {
        for kap in 0..k {
            for mu in 0..k {
                let x = ComplexMatrix::from_fn(n, n, |i, j| out[(i * k + kap, j * k + mu)]);
                let px = spec.project(&x)?;
                for i in 0..n {
                    for j in 0..n {
                        out[(i * k + kap, j * k + mu)] = px[(i, j)];
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `D = exp(iA)` with `A` Hermitian in `M_n ⊗ N`, so `D` returns to the
/// ancilla by construction. With a modular algebra `A` is drawn from
/// `modular_over ⊗ N` instead.
pub fn random_presentation<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    ancilla: &BlockAlgebra,
    modular_over: Option<&SubalgebraSpec>,
    tol: &Tolerance,
) -> Result<FactorizablePresentation> {
    let k = ancilla.ambient_dim();
    let a = random_hermitian(rng, n * k);
    let a = project_onto_dilation_algebra(&a, n, ancilla, modular_over)?;
    let d = unitary_exp(&a, 1.0, tol)?;
    FactorizablePresentation::new(n, ancilla.clone(), d, modular_over.cloned(), tol)
}

/// A Haar unitary on `H ⊗ K` paired with the ancilla, without any validation;
/// for a non-factor ancilla it almost surely fails to return.
pub fn corrupted_presentation<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    ancilla: &BlockAlgebra,
) -> Result<FactorizablePresentation> {
    let d = haar_unitary(rng, n * ancilla.ambient_dim());
    FactorizablePresentation::new_unchecked(n, ancilla.clone(), d, None)
}

/// The ancilla `N` with randomised weights and the given block sizes.
pub fn random_weights<R: Rng + ?Sized>(rng: &mut R, dims: &[usize]) -> Result<BlockAlgebra> {
    let w = simplex_point(rng, dims.len());
    BlockAlgebra::from_parts(dims, &w)
}

pub fn random_unitary_family<R: Rng + ?Sized>(
    rng: &mut R,
    spec: &SubalgebraSpec,
    m: usize,
    tol: &Tolerance,
) -> Result<UnitaryFamily> {
    let us = (0..m).map(|_| spec.random_unitary(rng)).collect();
    UnitaryFamily::new(spec.clone(), us, tol)
}

/// A random Schur instance: the unitary tuple and its symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchurInstance {
    pub ancilla: BlockAlgebra,
    pub unitaries: Vec<ComplexMatrix>,
    pub symbol: SchurSymbol,
}

pub fn random_schur<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    ancilla: &BlockAlgebra,
    tol: &Tolerance,
) -> Result<SchurInstance> {
    if n == 0 {
        return Err(Error::InvalidParameter("Schur dimension must be positive".into()));
    }
    let unitaries: Vec<ComplexMatrix> = (0..n).map(|_| ancilla.random_unitary(rng)).collect();
    let symbol = symbol_from_unitaries(ancilla, &unitaries, tol)?;
    Ok(SchurInstance {
        ancilla: ancilla.clone(),
        unitaries,
        symbol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::check_bimodular;
    use crate::rng::SeedTree;

    #[test]
    fn ancilla_specs() {
        let a = parse_ancilla("2,1").unwrap();
        assert_eq!(a.ambient_dim(), 3);
        assert!((a.blocks()[0].weight - 2.0 / 3.0).abs() < 1e-15);
        let b = parse_ancilla("2@0.25, 1@0.75").unwrap();
        assert_eq!(b.blocks()[1].weight, 0.75);
        for bad in ["", "2,,1", "0", "2@0.5,1", "a", "2@x", "2@0.3,1@0.3"] {
            assert!(parse_ancilla(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn subalgebra_specs() {
        let s = parse_subalgebra("2x1,1x2").unwrap();
        assert_eq!(s.ambient_dim(), 4);
        assert_eq!(
            s,
            SubalgebraSpec::new(vec![Part { factor: 2, mult: 1 }, Part { factor: 1, mult: 2 }]).unwrap()
        );
        assert_eq!(
            parse_subalgebra("2,2").unwrap(),
            SubalgebraSpec::blocks(&[2, 2]).unwrap()
        );
        for bad in ["", "2x", "x2", "0x1", "2,"] {
            assert!(parse_subalgebra(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn generated_presentations_are_valid() {
        let tol = Tolerance::default();
        let root = SeedTree::new(1);
        for (idx, dims) in [vec![2], vec![1, 1], vec![2, 1], vec![1, 1, 1]].iter().enumerate() {
            let mut rng = root.child(idx as u64).rng();
            let anc = random_weights(&mut rng, dims).unwrap();
            let p = random_presentation(&mut rng, 3, &anc, None, &tol).unwrap();
            p.validate_all_basis(&tol).unwrap();
        }
    }

    #[test]
    fn modular_presentations_are_bimodular() {
        let tol = Tolerance::default();
        let mut rng = SeedTree::new(2).rng();
        let spec = SubalgebraSpec::blocks(&[2, 2]).unwrap();
        let anc = BlockAlgebra::full(2).unwrap();
        let p = random_presentation(&mut rng, 4, &anc, Some(&spec), &tol).unwrap();
        assert!(check_bimodular(&p.phi_of().unwrap(), &spec, &tol).unwrap());
    }

    #[test]
    fn corrupted_presentations_fail_to_return() {
        let tol = Tolerance::default();
        let mut rng = SeedTree::new(3).rng();
        let anc = BlockAlgebra::abelian(&[0.5, 0.5]).unwrap();
        let p = corrupted_presentation(&mut rng, 2, &anc).unwrap();
        assert!(!p.returns_to_ancilla(&tol));
    }

    #[test]
    fn schur_instances_are_gram() {
        let tol = Tolerance::default();
        let mut rng = SeedTree::new(4).rng();
        let inst = random_schur(&mut rng, 3, &parse_ancilla("1,1").unwrap(), &tol).unwrap();
        assert!(inst.symbol.min_eigenvalue(&tol).unwrap() >= -1e-10);
        assert!(inst.symbol.diagonal_defect() < 1e-12);
    }
}
