use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use clap::ValueEnum;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use factorisable::algebra::{BlockAlgebra, SubalgebraSpec};
use factorisable::channel::{check_bimodular, choi_distance, compose, symbol_of, Channel, OperatorSymbol};
use factorisable::dilation::FactorizablePresentation;
use factorisable::generate::{
    parse_ancilla, parse_subalgebra, random_presentation, random_schur, random_unitary_family, random_weights,
    SchurInstance,
};
use factorisable::hierarchy::{
    conv_membership, convergence_monitor, nearest_mixed_unitary, MembershipCertificate, UnitaryFamily, Verdict,
    DEFAULT_MAX_ITER,
};
use factorisable::matcore::random::simplex_point;
use factorisable::matcore::{unitarity_defect, Tolerance};
use factorisable::rng::SeedTree;
use factorisable::schur::{diagonal_presentation, recognize_schur, schur_channel, symbol_from_unitaries};

use crate::report::{Check, Checks};

pub const DIM_CAP: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[value(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
#[allow(clippy::enum_variant_names)]
pub enum Kind {
    RandomPresentation,
    RandomUnitaryFamily,
    RandomSchur,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Presentation,
    Symbol,
    Power(usize),
    Schur,
    Membership,
}

impl std::str::FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "presentation" => Ok(Self::Presentation),
            "symbol" => Ok(Self::Symbol),
            "schur" => Ok(Self::Schur),
            "membership" => Ok(Self::Membership),
            _ => match s.strip_prefix("power:").map(str::parse::<usize>) {
                Some(Ok(m)) if m >= 1 => Ok(Self::Power(m)),
                _ => Err(format!(
                    "unknown suite {s:?}; expected presentation, symbol, power:<m>, schur or membership"
                )),
            },
        }
    }
}

impl std::fmt::Display for Suite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Presentation => f.write_str("presentation"),
            Self::Symbol => f.write_str("symbol"),
            Self::Power(m) => write!(f, "power:{m}"),
            Self::Schur => f.write_str("schur"),
            Self::Membership => f.write_str("membership"),
        }
    }
}

/// A unitary family together with a target channel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MembershipInstance {
    pub spec: SubalgebraSpec,
    pub unitaries: Vec<factorisable::matcore::ComplexMatrix>,
    pub target: Channel,
}

impl MembershipInstance {
    fn family(&self, tol: &Tolerance) -> Result<UnitaryFamily> {
        UnitaryFamily::new(self.spec.clone(), self.unitaries.clone(), tol).context("invalid unitary family")
    }
}

/// Ancilla and unitary tuple of a Schur query; a stored symbol is optional.
#[derive(Debug, Clone, Deserialize)]
pub struct SchurInput {
    pub ancilla: BlockAlgebra,
    pub unitaries: Vec<factorisable::matcore::ComplexMatrix>,
    #[serde(default)]
    pub symbol: Option<factorisable::schur::SchurSymbol>,
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
}

fn check_cap(what: &str, value: usize) -> Result<()> {
    ensure!(value >= 1, "{what} must be at least 1");
    ensure!(value <= DIM_CAP, "{what} = {value} exceeds the cap of {DIM_CAP}");
    Ok(())
}

pub struct GenerateArgs<'a> {
    pub kind: Kind,
    pub n: usize,
    pub k: Option<usize>,
    pub blocks: Option<&'a str>,
    pub modular: Option<&'a str>,
    pub m: usize,
}

fn ancilla_from(k: Option<usize>, blocks: Option<&str>) -> Result<BlockAlgebra> {
    let anc = match (k, blocks) {
        (_, Some(b)) => parse_ancilla(b)?,
        (Some(k), None) => BlockAlgebra::full(k)?,
        (None, None) => bail!("either --k or --blocks is required"),
    };
    if let Some(k) = k {
        ensure!(
            anc.ambient_dim() == k,
            "--blocks describes an ancilla of dimension {} but --k is {k}",
            anc.ambient_dim()
        );
    }
    check_cap("ancilla dimension k", anc.ambient_dim())?;
    Ok(anc)
}

pub fn generate(args: &GenerateArgs, seed: u64, tol: &Tolerance) -> Result<Value> {
    check_cap("n", args.n)?;
    let mut rng = SeedTree::new(seed).named("generate").rng();
    let value = match args.kind {
        Kind::RandomPresentation => {
            let anc = ancilla_from(args.k, args.blocks)?;
            let modular = args.modular.map(parse_subalgebra).transpose()?;
            if let Some(spec) = &modular {
                ensure!(
                    spec.ambient_dim() == args.n,
                    "--modular must describe a subalgebra of M_{}",
                    args.n
                );
            }
            serde_json::to_value(random_presentation(&mut rng, args.n, &anc, modular.as_ref(), tol)?)?
        }
        Kind::RandomUnitaryFamily => {
            let spec = match args.blocks {
                Some(b) => parse_subalgebra(b)?,
                None => SubalgebraSpec::full(args.n)?,
            };
            ensure!(
                spec.ambient_dim() == args.n,
                "--blocks must describe a subalgebra of M_{}",
                args.n
            );
            ensure!(args.m >= 1, "--m must be at least 1");
            let fam = random_unitary_family(&mut rng, &spec, args.m, tol)?;
            let target = fam.mixture(&simplex_point(&mut rng, args.m))?;
            serde_json::to_value(MembershipInstance {
                spec,
                unitaries: fam.unitaries().to_vec(),
                target,
            })?
        }
        Kind::RandomSchur => {
            let anc = ancilla_from(args.k, args.blocks)?;
            serde_json::to_value(random_schur(&mut rng, args.n, &anc, tol)?)?
        }
    };
    Ok(value)
}

fn negativity(min_eig: f64) -> f64 {
    (-min_eig).max(0.0)
}

fn channel_checks(prefix: &str, ch: &Channel, tol: &Tolerance) -> Result<Vec<Check>> {
    Ok(vec![
        Check::at_most(
            &format!("{prefix}cp_negativity"),
            negativity(ch.min_choi_eigenvalue(tol)?),
            tol.abs_eps,
        ),
        Check::at_most(&format!("{prefix}tp_defect"), ch.tp_defect(), tol.abs_eps),
        Check::at_most(&format!("{prefix}unital_defect"), ch.unital_defect(), tol.abs_eps),
    ])
}

/// Re-validates a presentation at `tol`; `None` when it is not valid.
fn revalidated(p: &FactorizablePresentation, tol: &Tolerance) -> Option<FactorizablePresentation> {
    FactorizablePresentation::new(
        p.sys_dim(),
        p.ancilla().clone(),
        p.d().clone(),
        p.modular_over().cloned(),
        tol,
    )
    .ok()
}

pub fn presentation_checks(p: &FactorizablePresentation, tol: &Tolerance) -> Result<Vec<Check>> {
    let eps = tol.abs_eps;
    let mut checks = vec![
        Check::at_most("unitarity_defect", unitarity_defect(p.d())?, eps),
        Check::at_most("returns_defect", p.returns_defect().defect, eps),
        Check::holds(
            "returns_equivalence",
            p.returns_to_ancilla(tol) == p.returns_equivalence_check(tol),
        ),
        Check::at_most(
            "trace_preservation_defect",
            (p.trace_preservation_value(0)? - 1.0).abs(),
            eps,
        ),
        Check::at_most("modular_defect", p.modular_defect().map_or(0.0, |(_, _, d)| d), eps),
    ];
    if let Some(valid) = revalidated(p, tol) {
        checks.extend(channel_checks("", &valid.phi_of()?, tol)?);
    }
    Ok(checks)
}

pub fn symbol_checks(p: &FactorizablePresentation, tol: &Tolerance) -> Result<(Vec<Check>, Option<OperatorSymbol>)> {
    let Some(valid) = revalidated(p, tol) else {
        return Ok((vec![Check::holds("presentation_valid", false)], None));
    };
    let phi = valid.phi_of()?;
    let formula = valid.symbol_formula()?;
    let checks = vec![
        Check::holds("presentation_valid", true),
        Check::at_most(
            "symbol_formula_vs_choi",
            formula.matrix.max_abs_diff(&symbol_of(&phi).matrix),
            tol.abs_eps,
        ),
        Check::at_most(
            "symbol_round_trip",
            choi_distance(&formula.to_channel(), &phi)?,
            tol.abs_eps,
        ),
    ];
    Ok((checks, Some(formula)))
}

pub fn power_checks(p: &FactorizablePresentation, m: usize, tol: &Tolerance) -> Result<(Vec<Check>, Option<Channel>)> {
    let Some(valid) = revalidated(p, tol) else {
        return Ok((vec![Check::holds("presentation_valid", false)], None));
    };
    let phi = valid.phi_of()?;
    let power = valid.power_channel(m)?;
    let mut iterated = phi.clone();
    for _ in 1..m {
        iterated = compose(&phi, &iterated)?;
    }
    let mut checks = vec![
        Check::holds("presentation_valid", true),
        Check::at_most("power_vs_composition", choi_distance(&power, &iterated)?, tol.abs_eps),
    ];
    checks.extend(channel_checks("power_", &power, tol)?);
    Ok((checks, Some(power)))
}

pub fn schur_checks(input: &SchurInput, tol: &Tolerance) -> Result<(Vec<Check>, factorisable::schur::SchurSymbol)> {
    let eps = tol.abs_eps;
    let symbol = symbol_from_unitaries(&input.ancilla, &input.unitaries, tol)?;
    let phi = diagonal_presentation(&input.ancilla, &input.unitaries, tol)?.phi_of()?;
    let recognised = recognize_schur(&phi, tol)?;
    let mut checks = vec![
        Check::at_most("symbol_psd_negativity", negativity(symbol.min_eigenvalue(tol)?), eps),
        Check::at_most("symbol_diagonal_defect", symbol.diagonal_defect(), eps),
        Check::at_most(
            "schur_channel_vs_dilation",
            choi_distance(&schur_channel(&symbol), &phi)?,
            eps,
        ),
        Check::holds("schur_recognised", recognised.is_some()),
        Check::at_most(
            "recognised_symbol_defect",
            recognised
                .as_ref()
                .map_or(0.0, |r| r.matrix().max_abs_diff(symbol.matrix())),
            eps,
        ),
    ];
    if let Some(stored) = &input.symbol {
        ensure!(
            stored.dim() == symbol.dim(),
            "stored symbol has dimension {}, expected {}",
            stored.dim(),
            symbol.dim()
        );
        checks.push(Check::at_most(
            "stored_symbol_defect",
            stored.matrix().max_abs_diff(symbol.matrix()),
            eps,
        ));
    }
    Ok((checks, symbol))
}

/// `search` runs the heuristic with `(m, restarts)` and keeps the better
/// certificate when the exact hull query is not conclusive.
pub fn membership_checks(
    inst: &MembershipInstance,
    search: Option<(usize, usize)>,
    seed: u64,
    tol: &Tolerance,
) -> Result<(Vec<Check>, MembershipCertificate, bool)> {
    let fam = inst.family(tol)?;
    let mut cert = conv_membership(&inst.target, &fam, tol, DEFAULT_MAX_ITER)?;
    let mut from_search = false;
    if let Some((m, restarts)) = search {
        if cert.verdict != Verdict::Member {
            let found = nearest_mixed_unitary(&inst.target, fam.spec(), m, tol, restarts, seed)?;
            if found.verdict == Verdict::Member {
                cert = found;
                from_search = true;
            }
        }
    }
    let mut checks = vec![Check::at_most(
        "weights_simplex_defect",
        (cert.weights.iter().sum::<f64>() - 1.0).abs() + cert.weights.iter().map(|w| negativity(*w)).sum::<f64>(),
        tol.abs_eps,
    )];
    if cert.verdict == Verdict::Member && !from_search {
        let mixture = fam.mixture(&cert.weights)?;
        checks.push(Check::at_most(
            "member_reconstruction",
            choi_distance(&mixture, &inst.target)?,
            tol.abs_eps,
        ));
        checks.push(Check::holds(
            "member_bimodular",
            check_bimodular(&mixture, fam.spec(), tol)?,
        ));
    }
    Ok((checks, cert, from_search))
}

pub fn verify_file(path: &Path, suite: Suite, seed: u64, tol: &Tolerance) -> Result<Vec<Check>> {
    Ok(match suite {
        Suite::Presentation => presentation_checks(&read_json(path)?, tol)?,
        Suite::Symbol => symbol_checks(&read_json(path)?, tol)?.0,
        Suite::Power(m) => power_checks(&read_json(path)?, m, tol)?.0,
        Suite::Schur => schur_checks(&read_json(path)?, tol)?.0,
        Suite::Membership => membership_checks(&read_json(path)?, None, seed, tol)?.0,
    })
}

const TRIAL_ANCILLAS: [&[usize]; 4] = [&[2], &[1, 1], &[2, 1], &[1, 1, 1]];

/// Runs `trials` seeded random instances of the suite, keeping the worst
/// value of every check.
pub fn verify_random(suite: Suite, trials: usize, seed: u64, tol: &Tolerance) -> Result<Checks> {
    let root = SeedTree::new(seed).named("verify");
    let mut agg = Checks::default();
    for t in 0..trials {
        let mut rng = root.child(t as u64).rng();
        let n = 2 + t % 2;
        let dims = TRIAL_ANCILLAS[t % TRIAL_ANCILLAS.len()];
        let checks = match suite {
            Suite::Presentation | Suite::Symbol | Suite::Power(_) => {
                let anc = random_weights(&mut rng, dims)?;
                let p = random_presentation(&mut rng, n, &anc, None, tol)?;
                match suite {
                    Suite::Presentation => presentation_checks(&p, tol)?,
                    Suite::Symbol => symbol_checks(&p, tol)?.0,
                    Suite::Power(m) => power_checks(&p, m, tol)?.0,
                    _ => unreachable!(),
                }
            }
            Suite::Schur => {
                let anc = random_weights(&mut rng, dims)?;
                let inst: SchurInstance = random_schur(&mut rng, n + 1, &anc, tol)?;
                let input = SchurInput {
                    ancilla: inst.ancilla,
                    unitaries: inst.unitaries,
                    symbol: Some(inst.symbol),
                };
                schur_checks(&input, tol)?.0
            }
            Suite::Membership => {
                let spec = SubalgebraSpec::blocks(&[n, 1])?;
                let fam = random_unitary_family(&mut rng, &spec, 4, tol)?;
                let target = fam.mixture(&simplex_point(&mut rng, 4))?;
                let inst = MembershipInstance {
                    spec,
                    unitaries: fam.unitaries().to_vec(),
                    target,
                };
                membership_checks(&inst, None, seed, tol)?.0
            }
        };
        agg.extend(checks);
    }
    Ok(agg)
}

pub fn monitor(seq: &[FactorizablePresentation], tol: &Tolerance) -> Result<(Vec<Check>, Value)> {
    ensure!(!seq.is_empty(), "the presentation sequence is empty");
    let valid: Vec<Option<FactorizablePresentation>> = seq.iter().map(|p| revalidated(p, tol)).collect();
    let worst = valid.iter().filter(|p| p.is_none()).count();
    let checks = vec![Check::at_most("invalid_presentations", worst as f64, 0.0)];
    if worst > 0 {
        return Ok((checks, Value::Null));
    }
    let seq: Vec<FactorizablePresentation> = valid.into_iter().flatten().collect();
    Ok((checks, serde_json::to_value(convergence_monitor(&seq, tol)?)?))
}

pub fn summarize_presentation(p: &FactorizablePresentation) -> Value {
    json!({
        "sys_dim": p.sys_dim(),
        "anc_dim": p.anc_dim(),
        "ancilla_blocks": p.ancilla().blocks().len(),
        "modular": p.modular_over().is_some(),
    })
}
