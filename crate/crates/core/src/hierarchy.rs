//! Convex hulls of unitary conjugations over a system algebra.
//!
//! [`conv_membership`] decides, up to a certificate, whether a target lies in
//! the convex hull of a fixed finite family `{Ad_{u_i}}`.
//! [`nearest_mixed_unitary`] searches over the family as well and can only
//! ever report upper bounds. [`convergence_monitor`] tracks Choi distances
//! along a sequence of presentations.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::SubalgebraSpec;
use crate::channel::{choi_distance, Channel};
use crate::dilation::FactorizablePresentation;
use crate::error::{mismatch, Error, Result};
use crate::matcore::{polar_unitary, unitarity_defect, ComplexMatrix, Tolerance};
use crate::rng::SeedTree;

/// Default iteration cap for [`conv_membership`].
pub const DEFAULT_MAX_ITER: usize = 20_000;

/// Frank–Wolfe stops once the duality gap falls to this level.
pub const GAP_TOL: f64 = 1e-12;

/// Outer alternations per restart of [`nearest_mixed_unitary`].
pub const SEARCH_ROUNDS: usize = 300;

const SEARCH_INNER_ITER: usize = 2_000;
const MAX_HALVINGS: usize = 40;
const ARMIJO: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Member,
    NonMemberAtTolerance,
    Inconclusive,
}

/// Simplex weights and residual of a convex-hull query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipCertificate {
    pub weights: Vec<f64>,
    /// Frobenius distance between the target Choi matrix and the mixture.
    pub residual: f64,
    pub iterations: usize,
    pub verdict: Verdict,
    /// Objective `‖r‖²` after every iteration, starting from the initial vertex.
    #[serde(skip)]
    pub trace: Vec<f64>,
}

#[derive(Deserialize)]
struct FamilyJson {
    spec: SubalgebraSpec,
    unitaries: Vec<ComplexMatrix>,
}

/// Unitaries of a system algebra, generating conjugations `Ad_u(x) = u^*xu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FamilyJson")]
pub struct UnitaryFamily {
    spec: SubalgebraSpec,
    unitaries: Vec<ComplexMatrix>,
}

impl TryFrom<FamilyJson> for UnitaryFamily {
    type Error = Error;

    fn try_from(raw: FamilyJson) -> Result<Self> {
        Self::new(raw.spec, raw.unitaries, &Tolerance::default())
    }
}

impl UnitaryFamily {
    pub fn new(spec: SubalgebraSpec, unitaries: Vec<ComplexMatrix>, tol: &Tolerance) -> Result<Self> {
        if unitaries.is_empty() {
            return Err(Error::Empty("unitary family"));
        }
        let n = spec.ambient_dim();
        for u in &unitaries {
            u.require_shape("family unitary", n, n)?;
            let defect = unitarity_defect(u)?;
            if defect > tol.abs_eps {
                return Err(Error::NotUnitary { defect });
            }
            let defect = spec.membership_defect(u)?;
            if defect > tol.abs_eps {
                return Err(Error::NotInAlgebra { defect });
            }
        }
        Ok(Self { spec, unitaries })
    }

    pub fn spec(&self) -> &SubalgebraSpec {
        &self.spec
    }

    pub fn unitaries(&self) -> &[ComplexMatrix] {
        &self.unitaries
    }

    pub fn len(&self) -> usize {
        self.unitaries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unitaries.is_empty()
    }

    pub fn channels(&self) -> Vec<Channel> {
        self.unitaries
            .iter()
            .map(|u| Channel::conjugation(u).expect("family unitaries are square"))
            .collect()
    }

    /// `Σ λ_i Ad_{u_i}`.
    pub fn mixture(&self, weights: &[f64]) -> Result<Channel> {
        if weights.len() != self.len() {
            return Err(mismatch("mixture weights", self.len(), weights.len()));
        }
        let channels = self.channels();
        let terms: Vec<(f64, &Channel)> = weights.iter().copied().zip(&channels).collect();
        Channel::mixture(&terms)
    }
}

fn re_inner(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Minimises `‖C(target) − Σ λ_i C(Ad_{u_i})‖²_F` over the simplex with the
/// away-step Frank–Wolfe method and exact line search.
///
/// The verdict is `Member` when the recomputed residual is at most
/// `tol.abs_eps`, `NonMemberAtTolerance` when `f − gap > tol.abs_eps²`
/// (convexity makes `f − gap` a lower bound on the optimum), and
/// `Inconclusive` otherwise.
pub fn conv_membership(
    target: &Channel,
    fam: &UnitaryFamily,
    tol: &Tolerance,
    max_iter: usize,
) -> Result<MembershipCertificate> {
    if fam.is_empty() {
        return Err(Error::Empty("unitary family"));
    }
    if target.dim() != fam.spec.ambient_dim() {
        return Err(mismatch("membership target", fam.spec.ambient_dim(), target.dim()));
    }
    let atoms: Vec<Vec<Complex64>> = fam
        .channels()
        .into_iter()
        .map(|c| c.choi().clone().into_vec())
        .collect();
    let t = target.choi().as_slice();
    let m = atoms.len();

    let dist2 = |a: &[Complex64]| -> f64 { a.iter().zip(t).map(|(x, y)| (x - y).norm_sqr()).sum() };
    let start = (0..m)
        .min_by(|&a, &b| dist2(&atoms[a]).total_cmp(&dist2(&atoms[b])))
        .expect("non-empty family");
    let mut weights = vec![0.0; m];
    weights[start] = 1.0;
    let mut mix = atoms[start].clone();
    let mut resid: Vec<Complex64> = mix.iter().zip(t).map(|(x, y)| x - y).collect();
    let mut f = norm_sqr(&resid);
    let mut trace = vec![f];
    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    let tol2 = tol.abs_eps * tol.abs_eps;

    while iterations < max_iter {
        let grad: Vec<f64> = atoms.iter().map(|a| 2.0 * re_inner(a, &resid)).collect();
        let at_weights: f64 = grad.iter().zip(&weights).map(|(g, w)| g * w).sum();
        let s = (0..m).min_by(|&a, &b| grad[a].total_cmp(&grad[b])).expect("non-empty");
        gap = (at_weights - grad[s]).max(0.0);
        if gap <= GAP_TOL || f <= tol2 * 1e-4 || f - gap > tol2 {
            break;
        }
        let away = (0..m)
            .filter(|&i| weights[i] > 0.0)
            .max_by(|&a, &b| grad[a].total_cmp(&grad[b]))
            .expect("weights lie on the simplex");
        let away_gap = grad[away] - at_weights;

        let (delta, gamma_max, toward): (Vec<Complex64>, f64, bool) = if gap >= away_gap {
            (atoms[s].iter().zip(&mix).map(|(a, x)| a - x).collect(), 1.0, true)
        } else {
            let wa = weights[away];
            let gmax = if wa < 1.0 { wa / (1.0 - wa) } else { f64::INFINITY };
            (mix.iter().zip(&atoms[away]).map(|(x, a)| x - a).collect(), gmax, false)
        };
        let dd = norm_sqr(&delta);
        iterations += 1;
        if dd == 0.0 {
            break;
        }
        let gamma = (-re_inner(&resid, &delta) / dd).clamp(0.0, gamma_max);
        if toward {
            for w in &mut weights {
                *w *= 1.0 - gamma;
            }
            weights[s] += gamma;
        } else {
            for w in &mut weights {
                *w *= 1.0 + gamma;
            }
            weights[away] -= gamma;
            if gamma == gamma_max {
                weights[away] = 0.0;
            }
        }
        for (x, d) in mix.iter_mut().zip(&delta) {
            *x += d * gamma;
        }
        for ((r, x), y) in resid.iter_mut().zip(&mix).zip(t) {
            *r = x - y;
        }
        f = norm_sqr(&resid);
        trace.push(f);
    }

    for w in &mut weights {
        *w = w.max(0.0);
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let residual = choi_distance(&fam.mixture(&weights)?, target)?;
    let verdict = if residual <= tol.abs_eps {
        Verdict::Member
    } else if f - gap > tol2 {
        Verdict::NonMemberAtTolerance
    } else {
        Verdict::Inconclusive
    };
    Ok(MembershipCertificate {
        weights,
        residual,
        iterations,
        verdict,
        trace,
    })
}

/// Heuristic search for a mixture of `m` conjugations by unitaries of `spec`
/// close to `target`, returning the best certificate over `restarts`
/// independent restarts seeded from `seed`.
///
/// Each round re-solves the weights with [`conv_membership`], then moves every
/// weighted unitary by a Cayley step `u ← u·cay(−ηS)` where `S` is the
/// spec-projected skew part of `u^*∇f`, halving `η` from 1 until `f` drops
/// by at least `η‖S‖²/2`.
/// The verdict is never `NonMemberAtTolerance`.
pub fn nearest_mixed_unitary(
    target: &Channel,
    spec: &SubalgebraSpec,
    m: usize,
    tol: &Tolerance,
    restarts: usize,
    seed: u64,
) -> Result<MembershipCertificate> {
    if m == 0 {
        return Err(Error::InvalidParameter("mixture size m must be at least 1".into()));
    }
    if restarts == 0 {
        return Err(Error::InvalidParameter("at least one restart is required".into()));
    }
    if target.dim() != spec.ambient_dim() {
        return Err(mismatch("search target", spec.ambient_dim(), target.dim()));
    }
    let root = SeedTree::new(seed);
    let results: Vec<Result<MembershipCertificate>> = (0..restarts)
        .into_par_iter()
        .map(|r| search_once(target, spec, m, tol, root.child(r as u64)))
        .collect();
    let mut best: Option<MembershipCertificate> = None;
    for cert in results {
        let cert = cert?;
        if best.as_ref().is_none_or(|b| cert.residual < b.residual) {
            best = Some(cert);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn objective(target: &Channel, unitaries: &[ComplexMatrix], weights: &[f64]) -> f64 {
    let terms: Vec<Channel> = unitaries
        .iter()
        .map(|u| Channel::conjugation(u).expect("square"))
        .collect();
    let pairs: Vec<(f64, &Channel)> = weights.iter().copied().zip(&terms).collect();
    let d = choi_distance(&Channel::mixture(&pairs).expect("non-empty"), target).expect("same dimension");
    d * d
}

/// `(I − X/2)^{-1}(I + X/2)`.
fn cayley(x: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = x.rows();
    let id = ComplexMatrix::identity(n);
    let half = x.scale_real(0.5);
    (&id - &half).solve(&(&id + &half))
}

fn search_once(
    target: &Channel,
    spec: &SubalgebraSpec,
    m: usize,
    tol: &Tolerance,
    node: SeedTree,
) -> Result<MembershipCertificate> {
    let n = spec.ambient_dim();
    let mut rng = node.rng();
    let mut us: Vec<ComplexMatrix> = (0..m).map(|_| spec.random_unitary(&mut rng)).collect();
    let mut best: Option<MembershipCertificate> = None;
    let mut rounds = 0;
    for _ in 0..SEARCH_ROUNDS {
        rounds += 1;
        let fam = UnitaryFamily {
            spec: spec.clone(),
            unitaries: us.clone(),
        };
        let mut cert = conv_membership(target, &fam, tol, SEARCH_INNER_ITER)?;
        if cert.verdict == Verdict::NonMemberAtTolerance {
            cert.verdict = Verdict::Inconclusive;
        }
        let done = cert.verdict == Verdict::Member;
        let weights = cert.weights.clone();
        if best.as_ref().is_none_or(|b| cert.residual < b.residual) {
            best = Some(cert);
        }
        if done {
            break;
        }

        let mut f = objective(target, &us, &weights);
        for i in 0..m {
            if weights[i] == 0.0 {
                continue;
            }
            // residual R = Σλ C(u_j) − C(target); C(Ad_u) = ψψ^* with ψ = conj(vec u)
            let terms: Vec<Channel> = us.iter().map(|u| Channel::conjugation(u).expect("square")).collect();
            let pairs: Vec<(f64, &Channel)> = weights.iter().copied().zip(&terms).collect();
            let r = Channel::mixture(&pairs)?.choi() - target.choi();
            let psi = ComplexMatrix::from_fn(n * n, 1, |a, _| us[i][(a / n, a % n)].conj());
            let rpsi = r.matmul(&psi)?;
            let g = ComplexMatrix::from_fn(n, n, |a, b| (rpsi[(a * n + b, 0)] * (4.0 * weights[i])).conj());
            let ug = us[i].adjoint_mul(&g)?;
            let skew = (&ug - &ug.adjoint()).scale_real(0.5);
            let dir = -&spec.project(&skew)?;
            let slope = dir.frobenius_norm().powi(2);
            if slope == 0.0 {
                continue;
            }
            let mut eta = 1.0;
            for _ in 0..MAX_HALVINGS {
                let step = cayley(&dir.scale_real(eta))?;
                let cand = polar_unitary(&us[i].matmul(&step)?, tol)?;
                let mut trial = us.clone();
                trial[i] = cand;
                let ft = objective(target, &trial, &weights);
                if ft <= f - ARMIJO * eta * slope {
                    us = trial;
                    f = ft;
                    break;
                }
                eta *= 0.5;
            }
        }
    }
    let mut best = best.expect("at least one round");
    best.iterations = rounds;
    Ok(best)
}

/// Consecutive Choi distances along a sequence of presentations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub distances: Vec<f64>,
    /// The last distance is at most `tol.abs_eps` (vacuously true for fewer
    /// than two presentations).
    pub cauchy: bool,
}

pub fn convergence_monitor(seq: &[FactorizablePresentation], tol: &Tolerance) -> Result<Convergence> {
    if let Some(first) = seq.first() {
        if let Some(bad) = seq.iter().find(|p| p.sys_dim() != first.sys_dim()) {
            return Err(mismatch("presentation sequence", first.sys_dim(), bad.sys_dim()));
        }
    }
    let channels = seq
        .iter()
        .map(FactorizablePresentation::phi_of)
        .collect::<Result<Vec<_>>>()?;
    let distances = channels
        .windows(2)
        .map(|w| choi_distance(&w[0], &w[1]))
        .collect::<Result<Vec<_>>>()?;
    let cauchy = distances.last().is_none_or(|&d| d <= tol.abs_eps);
    Ok(Convergence { distances, cauchy })
}
