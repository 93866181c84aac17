//! Suprema of `‖proj_W x‖₂` over signed permutations, orbits and `Dom(v)`,
//! and Monte-Carlo integrals of those suprema against a Grassmannian measure.
//!
//! The workhorse is [`width_altmax`]: given a unit `w ∈ W`, the best signed
//! permutation `γ` for the pairing `⟨γv, w⟩` matches the sorted moduli of `v`
//! and `w` and aligns phases, giving `⟨v^≻, w^≻⟩`. Replacing `w` by the
//! normalized projection of `γv` can only increase the objective.

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::{Orbit, SignedPermutation};
use crate::measures::GrassmannMeasure;
use crate::rng::{stream, sub_seed};
use crate::vectors::{check_len, decreasing_order, projection_norm, random_unit_in, Field, SubspaceBasis, Vector};
use crate::C64;

pub const BRUTE_MAX_D: usize = 8;
pub const DEFAULT_RESTARTS: usize = 20;
pub const DEFAULT_MAX_ITER: usize = 500;
pub const DEFAULT_TOL: f64 = 1e-10;
const ASCENT_SLACK: f64 = 1e-12;
const KICKS_PER_DIM: usize = 2;
const KICK_MOVES: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WidthMethod {
    Brute,
    AltMax,
    Orbit,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Witness {
    /// `γ` with `‖proj_W(γv)‖ = value`.
    Element(SignedPermutation),
    /// Orbit point attaining the maximum, with its index.
    Point { index: usize, point: Vector },
    /// Nothing to witness (`v = 0`).
    Zero,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WidthReport {
    pub value: f64,
    pub method: WidthMethod,
    pub restarts: usize,
    /// Ascent steps for ALTMAX, elements or points visited otherwise.
    pub iterations: usize,
    pub witness: Witness,
}

impl WidthReport {
    /// Recomputes `‖proj_W x‖` for the witnessed point `x` (`γv` for group witnesses).
    pub fn reevaluate(&self, w: &SubspaceBasis, v: &Vector) -> Result<f64> {
        match &self.witness {
            Witness::Element(g) => projection_norm(w, &g.apply(v)?),
            Witness::Point { point, .. } => projection_norm(w, point),
            Witness::Zero => Ok(0.0),
        }
    }
}

/// Exact `max_γ ‖proj_W(γv)‖` over the `2^d d!` real signed permutations.
///
/// Signs are walked in Gray-code order so each element costs `O(k)`. The
/// sign of the first coordinate is fixed since `-γ` gives the same norm.
pub fn width_brute_signed_perm(w: &SubspaceBasis, v: &Vector) -> Result<WidthReport> {
    let d = v.len();
    check_len(w.ambient(), d)?;
    if d > BRUTE_MAX_D {
        return Err(Error::InvalidArgument(format!(
            "brute force is limited to d <= {BRUTE_MAX_D} (got {d})"
        )));
    }
    if w.field() != Field::Real || v.field() != Field::Real {
        return Err(Error::InvalidArgument("brute force needs real W and v".into()));
    }
    let rows = w.real_columns();
    let k = rows.ncols();
    let x = v.re();
    let mut perm: Vec<usize> = (0..d).collect();
    let mut best = -1.0f64;
    let mut best_perm = perm.clone();
    let mut best_signs = vec![1.0f64; d];
    let mut visited = 0usize;
    let mut c = vec![0.0f64; k];
    loop {
        c.iter_mut().for_each(|z| *z = 0.0);
        for i in 0..d {
            for (l, z) in c.iter_mut().enumerate() {
                *z += x[perm[i]] * rows[(i, l)];
            }
        }
        let mut signs = vec![1.0f64; d];
        for g in 0..(1usize << (d - 1)) {
            if g > 0 {
                // flip the coordinate whose Gray bit changed
                let i = 1 + g.trailing_zeros() as usize;
                let delta = -2.0 * signs[i] * x[perm[i]];
                for (l, z) in c.iter_mut().enumerate() {
                    *z += delta * rows[(i, l)];
                }
                signs[i] = -signs[i];
            }
            visited += 1;
            let n2: f64 = c.iter().map(|z| z * z).sum();
            if n2 > best {
                best = n2;
                best_perm.copy_from_slice(&perm);
                best_signs.copy_from_slice(&signs);
            }
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    let gamma = SignedPermutation {
        perm: best_perm,
        phases: best_signs.iter().map(|&s| C64::new(s, 0.0)).collect(),
    };
    // recompute from scratch so the value matches the witness exactly
    let value = projection_norm(w, &gamma.apply(v)?)?;
    Ok(WidthReport {
        value,
        method: WidthMethod::Brute,
        restarts: 1,
        iterations: visited * 2,
        witness: Witness::Element(gamma),
    })
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AltMaxOptions {
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for AltMaxOptions {
    fn default() -> Self {
        Self {
            restarts: DEFAULT_RESTARTS,
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
        }
    }
}

/// Alternating maximization of `‖proj_W(γv)‖` over `Γ_d`.
///
/// Restart 0 starts from `proj_W v`; the others from random unit vectors of
/// `W`. Signs are real when both `W` and `v` are real, unit complex phases
/// otherwise.
pub fn width_altmax(
    w: &SubspaceBasis,
    v: &Vector,
    restarts: usize,
    max_iter: usize,
    seed: u64,
) -> Result<WidthReport> {
    width_altmax_with(
        w,
        v,
        &AltMaxOptions {
            restarts,
            max_iter,
            tol: DEFAULT_TOL,
        },
        seed,
    )
}

pub fn width_altmax_with(
    w: &SubspaceBasis,
    v: &Vector,
    opts: &AltMaxOptions,
    seed: u64,
) -> Result<WidthReport> {
    check_len(w.ambient(), v.len())?;
    if opts.restarts == 0 || opts.max_iter == 0 {
        return Err(Error::InvalidArgument("restarts and max_iter must be >= 1".into()));
    }
    if v.norm() == 0.0 {
        return Ok(WidthReport {
            value: 0.0,
            method: WidthMethod::AltMax,
            restarts: opts.restarts,
            iterations: 0,
            witness: Witness::Zero,
        });
    }
    let v_order = decreasing_order(&v.moduli());
    let runs: Vec<Ascent> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, r as u64);
            let start = if r == 0 {
                let p = w.columns() * w.coefficients(v).expect("length checked");
                let n = p.norm();
                if n > 1e-300 {
                    p.unscale(n)
                } else {
                    random_unit_in(w, &mut rng)
                }
            } else {
                random_unit_in(w, &mut rng)
            };
            run_restart(w, v, &v_order, start, opts, &mut rng)
        })
        .collect();
    let iterations = runs.iter().map(|a| a.iterations).sum();
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.value > a.value { b } else { a })
        .expect("at least one restart");
    Ok(WidthReport {
        value: best.value,
        method: WidthMethod::AltMax,
        restarts: opts.restarts,
        iterations,
        witness: Witness::Element(best.gamma),
    })
}

struct Ascent {
    value: f64,
    gamma: SignedPermutation,
    iterations: usize,
}

/// One restart: a monotone ascent, then (for `d <= BRUTE_MAX_D`) a few
/// kicks that perturb the best element by random moves and ascend again.
fn run_restart<R: Rng + ?Sized>(
    w: &SubspaceBasis,
    v: &Vector,
    v_order: &[usize],
    start: DVector<C64>,
    opts: &AltMaxOptions,
    rng: &mut R,
) -> Ascent {
    let mut budget = opts.max_iter;
    let mut best = ascend(w, v, v_order, start, opts, &mut budget);
    let d = v.len();
    if polish_depth(d) < 2 || w.dim() == 1 {
        return best;
    }
    let moves = Move::all(d);
    for _ in 0..KICKS_PER_DIM * d {
        if budget == 0 {
            break;
        }
        let mut g = best.gamma.clone();
        for _ in 0..KICK_MOVES {
            moves[rng.random_range(0..moves.len())].apply(&mut g);
        }
        let c = w
            .coefficients(&g.apply(v).expect("unit phases"))
            .expect("length checked");
        let n = c.norm();
        if n <= 1e-300 {
            continue;
        }
        let seg = ascend(w, v, v_order, w.columns() * c.unscale(n), opts, &mut budget);
        if seg.value > best.value {
            best.value = seg.value;
            best.gamma = seg.gamma;
        }
    }
    best.iterations = opts.max_iter - budget;
    best
}

/// Alternating steps from `u` until a fixed point that no polish move
/// improves, spending at most `budget` steps.
fn ascend(
    w: &SubspaceBasis,
    v: &Vector,
    v_order: &[usize],
    mut u: DVector<C64>,
    opts: &AltMaxOptions,
    budget: &mut usize,
) -> Ascent {
    let mut best = Ascent {
        value: -1.0,
        gamma: SignedPermutation::identity(v.len()),
        iterations: 0,
    };
    while *budget > 0 {
        *budget -= 1;
        best.iterations += 1;
        let gamma = align(v, v_order, &u);
        let x = gamma.apply(v).expect("aligned phases are unit");
        let c = w.coefficients(&x).expect("length checked");
        let value = c.norm();
        assert!(
            value >= best.value - ASCENT_SLACK,
            "ascent decreased: {} -> {value}",
            best.value
        );
        let gain = value - best.value;
        if value > best.value {
            best.value = value;
            best.gamma = gamma;
        }
        if value <= 1e-300 {
            break;
        }
        if gain < opts.tol {
            // fixed point of the alternating step
            match best_neighbor(w, v, &best.gamma, best.value + opts.tol) {
                Some((gamma, value, c)) => {
                    best.value = value;
                    best.gamma = gamma;
                    u = w.columns() * c.unscale(value);
                    continue;
                }
                None => break,
            }
        }
        u = w.columns() * c.unscale(value);
    }
    best.value = best.value.max(0.0);
    best
}

#[derive(Clone, Copy)]
enum Move {
    Flip(usize),
    Swap(usize, usize),
}

impl Move {
    fn all(d: usize) -> Vec<Move> {
        let mut out: Vec<Move> = (0..d).map(Move::Flip).collect();
        for i in 0..d {
            for j in i + 1..d {
                out.push(Move::Swap(i, j));
            }
        }
        out
    }

    fn apply(self, g: &mut SignedPermutation) {
        match self {
            Move::Flip(i) => g.phases[i] = -g.phases[i],
            Move::Swap(i, j) => {
                g.perm.swap(i, j);
                g.phases.swap(i, j);
            }
        }
    }

    /// `‖c'‖²` after applying the move to `x`, where `c = W* x` and
    /// `rows[i] = conj(W_{i,·})`.
    fn value_sq(self, x: &[C64], c: &[C64], rows: &[Vec<C64>]) -> f64 {
        match self {
            Move::Flip(i) => {
                let s = x[i] * -2.0;
                c.iter().zip(&rows[i]).map(|(a, r)| (a + r * s).norm_sqr()).sum()
            }
            Move::Swap(i, j) => {
                let s = x[j] - x[i];
                c.iter()
                    .zip(rows[i].iter().zip(&rows[j]))
                    .map(|(a, (ri, rj))| (a + (ri - rj) * s).norm_sqr())
                    .sum()
            }
        }
    }
}

/// Neighborhood depth of the fixed-point polish: two elementary moves
/// (transpositions or sign flips) up to the brute-force range, one up to 64
/// coordinates, none beyond (the cost grows like `d^{2·depth}`).
fn polish_depth(d: usize) -> usize {
    match d {
        0..=BRUTE_MAX_D => 2,
        9..=64 => 1,
        _ => 0,
    }
}

/// Best element within [`polish_depth`] moves of `γ`, if it beats `threshold`.
fn best_neighbor(
    w: &SubspaceBasis,
    v: &Vector,
    gamma: &SignedPermutation,
    threshold: f64,
) -> Option<(SignedPermutation, f64, DVector<C64>)> {
    let d = v.len();
    let depth = polish_depth(d);
    if depth == 0 {
        return None;
    }
    let adj = w.columns().adjoint();
    let rows: Vec<Vec<C64>> = (0..d).map(|i| adj.column(i).iter().copied().collect()).collect();
    let moves = Move::all(d);
    let eval = |g: &SignedPermutation| {
        let x = g.apply(v).expect("unit phases");
        let c = w.coefficients(&x).expect("length checked");
        (x.into_coords(), c)
    };
    let mut best: Option<(f64, Vec<Move>)> = None;
    let t2 = threshold * threshold;
    let mut consider = |value_sq: f64, path: &[Move]| {
        if value_sq > t2 && best.as_ref().is_none_or(|(b, _)| value_sq > *b) {
            best = Some((value_sq, path.to_vec()));
        }
    };
    let (x, c) = eval(gamma);
    for &m in &moves {
        consider(m.value_sq(x.as_slice(), c.as_slice(), &rows), &[m]);
        if depth >= 2 {
            let mut g1 = gamma.clone();
            m.apply(&mut g1);
            let (x1, c1) = eval(&g1);
            for &m2 in &moves {
                consider(m2.value_sq(x1.as_slice(), c1.as_slice(), &rows), &[m, m2]);
            }
        }
    }
    let (_, path) = best?;
    let mut next = gamma.clone();
    for m in path {
        m.apply(&mut next);
    }
    let (_, c) = eval(&next);
    let value = c.norm();
    (value > threshold).then_some((next, value, c))
}

/// The `γ` maximizing `Re⟨γv, u⟩`: the `r`-th largest modulus of `v` goes to
/// the position of the `r`-th largest modulus of `u`, with its phase rotated
/// onto that of `u`.
fn align(v: &Vector, v_order: &[usize], u: &DVector<C64>) -> SignedPermutation {
    let d = v.len();
    let u_mod: Vec<f64> = u.iter().map(|z| z.norm()).collect();
    let u_order = decreasing_order(&u_mod);
    let mut perm = vec![0usize; d];
    let mut phases = vec![C64::new(1.0, 0.0); d];
    for (&i, &j) in u_order.iter().zip(v_order) {
        perm[i] = j;
        let vj = v.coords()[j];
        let (mu, mv) = (u_mod[i], vj.norm());
        if mu > 0.0 && mv > 0.0 {
            let p = u[i].unscale(mu) * vj.conj().unscale(mv);
            // renormalize away rounding so the sign stays exactly unit
            phases[i] = p.unscale(p.norm());
        }
    }
    SignedPermutation { perm, phases }
}

/// `max_{x ∈ orbit} ‖proj_W x‖` with the attaining point.
pub fn width_orbit(w: &SubspaceBasis, orbit: &Orbit) -> Result<WidthReport> {
    check_len(w.ambient(), orbit.dim())?;
    let mut best = (0usize, -1.0f64);
    for (i, p) in orbit.points().iter().enumerate() {
        let n = projection_norm(w, p)?;
        if n > best.1 {
            best = (i, n);
        }
    }
    Ok(WidthReport {
        value: best.1,
        method: WidthMethod::Orbit,
        restarts: 1,
        iterations: orbit.len(),
        witness: Witness::Point {
            index: best.0,
            point: orbit.points()[best.0].clone(),
        },
    })
}

/// `sup_{u ∈ Dom(v)} ‖proj_W u‖`. `Dom(v)` is the convex hull of the
/// `Γ_d`-orbit of `v` and the objective is convex, so this is the ALTMAX value.
pub fn dom_sup(w: &SubspaceBasis, v: &Vector, restarts: usize, seed: u64) -> Result<WidthReport> {
    width_altmax(w, v, restarts, DEFAULT_MAX_ITER, seed)
}

/// Inner supremum used by [`estimate_f_integral`].
#[derive(Clone, Debug, PartialEq)]
pub enum SupEvaluator {
    AltMax { v: Vector, restarts: usize },
    Orbit(Orbit),
    Dom { v: Vector, restarts: usize },
}

impl SupEvaluator {
    pub fn evaluate(&self, w: &SubspaceBasis, seed: u64) -> Result<WidthReport> {
        match self {
            Self::AltMax { v, restarts } => width_altmax(w, v, *restarts, DEFAULT_MAX_ITER, seed),
            Self::Orbit(o) => width_orbit(w, o),
            Self::Dom { v, restarts } => dom_sup(w, v, *restarts, seed),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralEstimate {
    /// Mean of `sup²` over draws.
    pub mean: f64,
    pub std_err: f64,
    pub trials: usize,
    pub min: f64,
    pub max: f64,
}

/// Monte-Carlo estimate of `∫ sup ‖proj_W(·)‖² dμ(W)`.
pub fn estimate_f_integral(
    mu: &GrassmannMeasure,
    evaluator: &SupEvaluator,
    trials: usize,
    seed: u64,
) -> Result<IntegralEstimate> {
    if trials < 2 {
        return Err(Error::InvalidArgument("need at least 2 trials for a standard error".into()));
    }
    let values = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(seed, t as u64);
            let w = mu.sample(&mut rng)?;
            let inner: u64 = rng.random();
            Ok(evaluator.evaluate(&w, sub_seed(inner, t as u64))?.value.powi(2))
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = trials as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(IntegralEstimate {
        mean,
        std_err: (var / n).sqrt(),
        trials,
        min: values.iter().cloned().fold(f64::INFINITY, f64::min),
        max: values.iter().cloned().fold(0.0, f64::max),
    })
}
