//! The extremal witness orbit, σ-profiles of subspaces, Selberg's
//! inequality, and a derivative-free search for subspaces of small width.
//!
//! Only real subspaces and the real signed permutation group are searched.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::Orbit;
use crate::measures::sample_uniform;
use crate::rng::{stream, sub_seed};
use crate::vectors::{
    check_len, decreasing_order, gaussian_matrix, orthonormalize_with_field, random_unit_in,
    Field, SubspaceBasis, Vector,
};
use crate::width::{width_altmax, width_orbit, DEFAULT_MAX_ITER, DEFAULT_RESTARTS};
use crate::C64;

const SIGMA_SUM_TOL: f64 = 1e-8;
const SIGMA_MAX_TOL: f64 = 1e-9;
const SELBERG_SLACK: f64 = 1e-9;
const REJECTIONS_BEFORE_DECAY: usize = 20;
const INITIAL_STEP: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct WitnessVector {
    /// `a / ‖a‖₂`.
    pub vector: Vector,
    /// `a_i = 1/√(⌊k/2⌋ + i)` for `i ≤ d - ⌊k/2⌋`, then zeros.
    pub unnormalized: Vec<f64>,
    /// `‖a‖₂² = H_d - H_{⌊k/2⌋}`.
    pub norm_sq: f64,
}

/// `H_d - H_h = Σ_{i=h+1}^d 1/i`.
pub fn harmonic_difference(d: usize, h: usize) -> f64 {
    // smallest terms first
    (h + 1..=d).rev().map(|i| 1.0 / i as f64).sum()
}

pub fn witness_vector(d: usize, k: usize) -> Result<WitnessVector> {
    if k == 0 || k > d {
        return Err(Error::InvalidArgument(format!("need 1 <= k <= d (k = {k}, d = {d})")));
    }
    let h = k / 2;
    let a: Vec<f64> = (1..=d)
        .map(|i| if i + h <= d { 1.0 / ((h + i) as f64).sqrt() } else { 0.0 })
        .collect();
    let norm_sq = harmonic_difference(d, h);
    let n = norm_sq.sqrt();
    Ok(WitnessVector {
        vector: Vector::real(&a.iter().map(|x| x / n).collect::<Vec<_>>())?,
        unnormalized: a,
        norm_sq,
    })
}

/// `σ_i = ‖proj_W e_i‖ / √k`, sorted non-increasing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaProfile {
    pub sigmas: Vec<f64>,
    pub k: usize,
}

impl SigmaProfile {
    /// Checks `Σσ² = 1` and `σ_i ≤ min(1/√k, 1/√i)` (1-based `i`).
    pub fn check(&self) -> Result<()> {
        let sum: f64 = self.sigmas.iter().map(|s| s * s).sum();
        if (sum - 1.0).abs() > SIGMA_SUM_TOL {
            return Err(Error::VerificationFailed(format!("Σσ² = {sum}, expected 1")));
        }
        let cap = 1.0 / (self.k as f64).sqrt();
        for (i, &s) in self.sigmas.iter().enumerate() {
            if s > cap + SIGMA_MAX_TOL || s > 1.0 / ((i + 1) as f64).sqrt() + SIGMA_MAX_TOL {
                return Err(Error::VerificationFailed(format!(
                    "σ_{} = {s} exceeds its cap",
                    i + 1
                )));
            }
            if i > 0 && s > self.sigmas[i - 1] {
                return Err(Error::VerificationFailed("σ-profile not sorted".into()));
            }
        }
        Ok(())
    }

    /// The coordinate order that sorts `σ` (needed to pair `y` with `a`).
    fn order(w: &SubspaceBasis) -> Vec<usize> {
        decreasing_order(&row_norms(w))
    }
}

fn row_norms(w: &SubspaceBasis) -> Vec<f64> {
    w.columns().row_iter().map(|r| r.norm()).collect()
}

pub fn sigma_profile(w: &SubspaceBasis) -> Result<SigmaProfile> {
    let k = w.dim();
    let scale = (k as f64).sqrt();
    let mut sigmas: Vec<f64> = row_norms(w).into_iter().map(|r| r / scale).collect();
    sigmas.sort_by(|a, b| b.total_cmp(a));
    let p = SigmaProfile { sigmas, k };
    p.check()?;
    Ok(p)
}

/// Both sides of the lower-bound chain for one subspace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaChain {
    /// Mean over uniform `y ∈ S(W)` of `Σ a_i |y_{π(i)}|`, with `π` sorting `σ`.
    pub mean_pairing: f64,
    /// `Σ a_i σ_i`.
    pub sigma_sum: f64,
    /// Number of `y` for which `⟨a^≻, y^≻⟩ < Σ a_i |y_{π(i)}|` (always 0).
    pub rearrangement_violations: usize,
}

pub fn sigma_chain(w: &SubspaceBasis, samples: usize, seed: u64) -> Result<SigmaChain> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be >= 1".into()));
    }
    let d = w.ambient();
    let a = witness_vector(d, w.dim())?.unnormalized;
    let profile = sigma_profile(w)?;
    let order = SigmaProfile::order(w);
    let mut rng = stream(seed, 0);
    let mut total = 0.0;
    let mut violations = 0;
    for _ in 0..samples {
        let y = random_unit_in(w, &mut rng);
        let paired: f64 = a.iter().zip(&order).map(|(ai, &j)| ai * y[j].norm()).sum();
        let mut ym: Vec<f64> = y.iter().map(|z| z.norm()).collect();
        ym.sort_by(|p, q| q.total_cmp(p));
        let best: f64 = a.iter().zip(&ym).map(|(x, y)| x * y).sum();
        if best < paired - 1e-12 {
            violations += 1;
        }
        total += paired;
    }
    Ok(SigmaChain {
        mean_pairing: total / samples as f64,
        sigma_sum: a.iter().zip(&profile.sigmas).map(|(x, s)| x * s).sum(),
        rearrangement_violations: violations,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelbergCheck {
    /// Largest eigenvalue of the Gram matrix.
    pub lhs: f64,
    /// Largest absolute row sum of the Gram matrix.
    pub rhs: f64,
    pub holds: bool,
}

pub fn selberg_check(vectors: &[Vector]) -> Result<SelbergCheck> {
    let Some(first) = vectors.first() else {
        return Err(Error::InvalidArgument("need at least one vector".into()));
    };
    let d = first.len();
    for v in vectors {
        check_len(d, v.len())?;
    }
    let m = vectors.len();
    let gram = DMatrix::<C64>::from_fn(m, m, |i, j| {
        vectors[j].coords().dotc(vectors[i].coords())
    });
    let lhs = gram
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let rhs = gram
        .row_iter()
        .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    Ok(SelbergCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + SELBERG_SLACK,
    })
}

/// What the adversary's subspace is measured against.
#[derive(Clone, Debug, PartialEq)]
pub enum AdversaryTarget {
    /// The `Γ_d`-orbit of [`witness_vector`], via ALTMAX.
    Witness,
    /// The `Γ_d`-orbit of a given vector, via ALTMAX.
    Vector(Vector),
    /// An enumerated orbit.
    Orbit(Orbit),
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdversarialResult {
    pub min_value: f64,
    pub best_w: SubspaceBasis,
    pub evaluations: usize,
}

/// Width objective `F(W)` used by [`adversarial_min_width`]. Deterministic in
/// `(W, seed)`.
pub struct WidthObjective {
    target: ObjectiveTarget,
    seed: u64,
}

enum ObjectiveTarget {
    Vector(Vector),
    Orbit(Orbit),
}

impl WidthObjective {
    pub fn new(d: usize, k: usize, target: &AdversaryTarget, seed: u64) -> Result<Self> {
        let target = match target {
            AdversaryTarget::Witness => ObjectiveTarget::Vector(witness_vector(d, k)?.vector),
            AdversaryTarget::Vector(v) => {
                check_len(d, v.len())?;
                ObjectiveTarget::Vector(v.clone())
            }
            AdversaryTarget::Orbit(o) => {
                check_len(d, o.dim())?;
                ObjectiveTarget::Orbit(o.clone())
            }
        };
        Ok(Self {
            target,
            seed: sub_seed(seed, 0x0F),
        })
    }

    pub fn eval(&self, w: &SubspaceBasis) -> Result<f64> {
        Ok(match &self.target {
            ObjectiveTarget::Vector(v) => {
                width_altmax(w, v, DEFAULT_RESTARTS, DEFAULT_MAX_ITER, self.seed)?.value
            }
            ObjectiveTarget::Orbit(o) => width_orbit(w, o)?.value,
        })
    }
}

/// Random search over real orthonormal `d × k` frames for a small width.
///
/// Each step perturbs the frame by Gaussian noise of scale `η`,
/// re-orthonormalizes, and accepts on strict decrease; `η` halves after 20
/// consecutive rejections. Restarts run in parallel and the minimum wins
/// (lowest restart index on ties).
pub fn adversarial_min_width(
    d: usize,
    k: usize,
    target: &AdversaryTarget,
    restarts: usize,
    steps: usize,
    seed: u64,
) -> Result<AdversarialResult> {
    if k == 0 || k > d {
        return Err(Error::InvalidArgument(format!("need 1 <= k <= d (k = {k}, d = {d})")));
    }
    if restarts == 0 {
        return Err(Error::InvalidArgument("restarts must be >= 1".into()));
    }
    let objective = WidthObjective::new(d, k, target, seed)?;
    if k == d {
        // every frame spans R^d
        let w = SubspaceBasis::identity(d)?;
        let value = match target {
            AdversaryTarget::Witness => 1.0,
            _ => objective.eval(&w)?,
        };
        return Ok(AdversarialResult {
            min_value: value,
            best_w: w,
            evaluations: 0,
        });
    }
    let runs = (0..restarts)
        .into_par_iter()
        .map(|r| search(&objective, d, k, steps, stream(seed, r as u64)))
        .collect::<Result<Vec<_>>>()?;
    let evaluations = runs.iter().map(|r| r.evaluations).sum();
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.min_value < a.min_value { b } else { a })
        .expect("restarts >= 1");
    Ok(AdversarialResult { evaluations, ..best })
}

fn search(
    objective: &WidthObjective,
    d: usize,
    k: usize,
    steps: usize,
    mut rng: crate::rng::Stream,
) -> Result<AdversarialResult> {
    let mut w = sample_uniform(k, d, Field::Real, &mut rng)?;
    let mut f = objective.eval(&w)?;
    let mut eta = INITIAL_STEP;
    let mut rejections = 0;
    let mut evaluations = 1;
    for _ in 0..steps {
        let noise = gaussian_matrix(d, k, Field::Real, &mut rng);
        let candidate = match orthonormalize_with_field(&(w.columns() + noise * C64::new(eta, 0.0)), Field::Real) {
            Ok(c) => c,
            Err(Error::RankDeficient { .. }) => continue,
            Err(e) => return Err(e),
        };
        let fc = objective.eval(&candidate)?;
        evaluations += 1;
        if fc < f {
            w = candidate;
            f = fc;
            rejections = 0;
        } else {
            rejections += 1;
            if rejections == REJECTIONS_BEFORE_DECAY {
                eta *= 0.5;
                rejections = 0;
            }
        }
    }
    Ok(AdversarialResult {
        min_value: f,
        best_w: w,
        evaluations,
    })
}
