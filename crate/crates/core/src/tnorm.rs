//! The delocalization norm
//!
//! ```text
//! ‖v‖_T² = max_{∅≠S⊆[d]} ln⁴(2d/|S|) · Σ_{j∈S} |v_j|²
//! ```
//!
//! The weight depends only on `|S|`, so the best `S` of each size is the set
//! of largest coordinates and the supremum is a maximum over prefix sums of
//! the sorted squared moduli.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream;
use crate::vectors::{gaussian_matrix, Field, SubspaceBasis, Vector};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TNormValue {
    pub value: f64,
    /// Subset size attaining the maximum (smallest such size).
    pub argmax_size: usize,
}

pub fn t_norm(v: &Vector) -> TNormValue {
    let mut sq: Vec<f64> = v.coords().iter().map(|z| z.norm_sqr()).collect();
    t_norm_of_squares(&mut sq)
}

/// T-norm from squared moduli; `sq` is sorted in place.
pub(crate) fn t_norm_of_squares(sq: &mut [f64]) -> TNormValue {
    let d = sq.len();
    sq.sort_unstable_by(|a, b| b.total_cmp(a));
    let two_d = 2.0 * d as f64;
    let mut prefix = 0.0;
    let mut best = 0.0;
    let mut argmax = 1;
    for (i, x) in sq.iter().enumerate() {
        prefix += x;
        let s = (i + 1) as f64;
        let val = (two_d / s).ln().powi(4) * prefix;
        if val > best {
            best = val;
            argmax = i + 1;
        }
    }
    TNormValue {
        value: best.sqrt(),
        argmax_size: argmax,
    }
}

pub(crate) fn t_norm_of_slice(x: &[C64]) -> f64 {
    let mut sq: Vec<f64> = x.iter().map(|z| z.norm_sqr()).collect();
    t_norm_of_squares(&mut sq).value
}

/// Upper bound on the Lipschitz constant of `‖·‖_T`: `ln²(2d)`.
pub fn lipschitz_bound(d: usize) -> f64 {
    (2.0 * d as f64).ln().powi(2)
}

/// Certified upper bound on `sup_{v ∈ W, ‖v‖=1} ‖v‖_T` for a real `W` of dimension `k ≤ 4`.
///
/// Evaluates the norm on a `δ`-net of the unit sphere of coefficient space
/// and divides by `1 - δ`. For `k = 1` the unit sphere is `{±w}` and the
/// value is exact.
pub fn t_norm_subspace_bound(w: &SubspaceBasis, net_step: f64) -> Result<f64> {
    if !(net_step > 0.0 && net_step <= 0.5) {
        return Err(Error::InvalidArgument(format!(
            "net step {net_step} outside (0, 1/2]"
        )));
    }
    if w.field() != Field::Real {
        return Err(Error::InvalidArgument("net bound needs a real subspace".into()));
    }
    let k = w.dim();
    if k > 4 {
        return Err(Error::NetTooLarge { k });
    }
    let u = w.real_columns();
    if k == 1 {
        return Ok(t_norm_real_combination(&u, &[1.0]));
    }
    let net = sphere_net(k, net_step);
    let max = net
        .par_iter()
        .map(|p| t_norm_real_combination(&u, p))
        .reduce(|| 0.0, f64::max);
    Ok(max / (1.0 - net_step))
}

fn t_norm_real_combination(u: &DMatrix<f64>, coeffs: &[f64]) -> f64 {
    let c = DVector::from_column_slice(coeffs);
    let x = u * c;
    let mut sq: Vec<f64> = x.iter().map(|v| v * v).collect();
    t_norm_of_squares(&mut sq).value
}

/// Points of the unit sphere in `R^k` such that every unit vector is within
/// `step` of `±` some point. Since the T-norm is even, half a net suffices.
pub(crate) fn sphere_net(k: usize, step: f64) -> Vec<Vec<f64>> {
    match k {
        1 => vec![vec![1.0]],
        2 => {
            // n angles on a half circle plus antipodes: spacing π/n, so the
            // farthest point is at chord 2 sin(π/(4n)) ≤ step
            let n = (std::f64::consts::PI / (4.0 * (step / 2.0).asin())).ceil() as usize;
            (0..n)
                .map(|m| {
                    let t = std::f64::consts::PI * m as f64 / n as f64;
                    vec![t.cos(), t.sin()]
                })
                .collect()
        }
        _ => cube_face_net(k, step),
    }
}

/// Grid on the faces `x_i = +1` of the cube, pushed to the sphere.
///
/// A unit `v` (up to sign) scaled to `v/‖v‖∞` lies on such a face; its
/// nearest grid point is within `h√(k-1)/2`, and normalizing at most doubles
/// the distance, so spacing `h = step/√(k-1)` yields a `step`-net.
fn cube_face_net(k: usize, step: f64) -> Vec<Vec<f64>> {
    let h = step / ((k - 1) as f64).sqrt();
    let n = (2.0 / h).ceil() as usize;
    let ticks: Vec<f64> = (0..=n).map(|i| -1.0 + 2.0 * i as f64 / n as f64).collect();
    let mut out = Vec::with_capacity(k * ticks.len().pow((k - 1) as u32));
    let mut idx = vec![0usize; k - 1];
    for face in 0..k {
        idx.iter_mut().for_each(|i| *i = 0);
        loop {
            let mut p = Vec::with_capacity(k);
            let mut it = idx.iter();
            for axis in 0..k {
                if axis == face {
                    p.push(1.0);
                } else {
                    p.push(ticks[*it.next().unwrap()]);
                }
            }
            let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
            p.iter_mut().for_each(|x| *x /= norm);
            out.push(p);
            // odometer
            let mut pos = 0;
            loop {
                if pos == idx.len() {
                    break;
                }
                idx[pos] += 1;
                if idx[pos] < ticks.len() {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
            if pos == idx.len() {
                break;
            }
        }
    }
    out
}

/// Standard Gaussian vector in `R^d`; with `sum_zero` the coordinate mean is
/// subtracted, giving `N(0, I - 11ᵀ/d)`.
pub fn sample_gaussian<R: rand::Rng + ?Sized>(d: usize, sum_zero: bool, rng: &mut R) -> Result<Vector> {
    if d == 0 || (sum_zero && d < 2) {
        return Err(Error::InvalidArgument(format!(
            "dimension {d} too small (sum_zero = {sum_zero})"
        )));
    }
    let mut g = gaussian_matrix(d, 1, Field::Real, rng);
    if sum_zero {
        let mean = g.iter().map(|z| z.re).sum::<f64>() / d as f64;
        g.iter_mut().for_each(|z| z.re -= mean);
    }
    Vector::new(g.column(0).into_owned(), Field::Real)
}

/// Monte-Carlo summary of `‖w‖_T / √d` over Gaussian draws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TNormSummary {
    pub d: usize,
    pub trials: usize,
    pub sum_zero: bool,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub q05: f64,
    pub median: f64,
    pub q95: f64,
}

pub fn gaussian_tnorm_statistics(
    d: usize,
    trials: usize,
    sum_zero: bool,
    seed: u64,
) -> Result<TNormSummary> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    let sqrt_d = (d as f64).sqrt();
    let mut ratios = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(seed, t as u64);
            sample_gaussian(d, sum_zero, &mut rng).map(|w| t_norm(&w).value / sqrt_d)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean = ratios.iter().sum::<f64>() / trials as f64;
    ratios.sort_by(f64::total_cmp);
    let q = |p: f64| ratios[((p * trials as f64).ceil() as usize).clamp(1, trials) - 1];
    Ok(TNormSummary {
        d,
        trials,
        sum_zero,
        mean,
        min: ratios[0],
        max: ratios[trials - 1],
        q05: q(0.05),
        median: q(0.5),
        q95: q(0.95),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::vectors::orthonormalize;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    /// Supremum over all nonempty subsets, straight from the definition.
    fn brute_t_norm(v: &[f64]) -> f64 {
        let d = v.len();
        let mut best = 0.0f64;
        for mask in 1u32..(1 << d) {
            let size = mask.count_ones() as f64;
            let s: f64 = (0..d).filter(|i| mask >> i & 1 == 1).map(|i| v[i] * v[i]).sum();
            best = best.max((2.0 * d as f64 / size).ln().powi(4) * s);
        }
        best.sqrt()
    }

    #[test]
    fn examples() {
        let e1 = Vector::basis(2, 0).unwrap();
        assert_abs_diff_eq!(t_norm(&e1).value, 4f64.ln().powi(2), epsilon = 1e-14);
        assert_abs_diff_eq!(t_norm(&e1).value, 1.92181, epsilon = 1e-5);
        let ones = Vector::real(&[1.0; 4]).unwrap();
        let tv = t_norm(&ones);
        assert_abs_diff_eq!(tv.value, brute_t_norm(&[1.0; 4]), epsilon = 1e-12);
        assert_abs_diff_eq!(tv.value, 4.32408, epsilon = 1e-5);
        assert_eq!(tv.argmax_size, 1);
        let z = Vector::zeros(5).unwrap();
        assert_eq!(t_norm(&z).value, 0.0);
    }

    #[test]
    fn lipschitz_examples() {
        assert_abs_diff_eq!(lipschitz_bound(2), 1.92181, epsilon = 1e-5);
        assert_abs_diff_eq!(lipschitz_bound(1), 0.48045, epsilon = 1e-5);
        assert!(lipschitz_bound(100) > lipschitz_bound(10));
    }

    #[test]
    fn complex_entries_use_moduli() {
        let v = Vector::complex(&[C64::new(0.6, 0.8), C64::new(0.0, 0.0)]).unwrap();
        let r = Vector::real(&[1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(t_norm(&v).value, t_norm(&r).value, epsilon = 1e-14);
    }

    #[test]
    fn matches_subset_brute_force() {
        let mut rng = stream(5, 0);
        for _ in 0..200 {
            let d = rng.random_range(1..=10);
            let v: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            let got = t_norm(&Vector::real(&v).unwrap()).value;
            assert!((got - brute_t_norm(&v)).abs() <= 1e-10);
        }
    }

    #[test]
    fn subspace_bound_one_dimensional_is_exact() {
        for d in [2, 8, 100] {
            let w = SubspaceBasis::coordinate(d, &[0]).unwrap();
            let b = t_norm_subspace_bound(&w, 0.3).unwrap();
            assert_abs_diff_eq!(b, (2.0 * d as f64).ln().powi(2), epsilon = 1e-12);
        }
    }

    #[test]
    fn subspace_bound_rejects_bad_arguments() {
        let w = SubspaceBasis::coordinate(8, &[0, 1, 2, 3, 4]).unwrap();
        assert!(matches!(t_norm_subspace_bound(&w, 0.25), Err(Error::NetTooLarge { k: 5 })));
        let w = SubspaceBasis::coordinate(8, &[0]).unwrap();
        assert!(t_norm_subspace_bound(&w, 0.0).is_err());
        assert!(t_norm_subspace_bound(&w, 0.6).is_err());
        assert!(t_norm_subspace_bound(&w.complexified(), 0.25).is_err());
    }

    #[test]
    fn nets_cover_the_sphere() {
        // dense random probing: every unit vector is within `step` of ± a net point
        let mut rng = stream(9, 0);
        for (k, step) in [(2, 0.25), (3, 0.3), (4, 0.5)] {
            let net = sphere_net(k, step);
            for _ in 0..2000 {
                let mut v: Vec<f64> = (0..k).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.iter_mut().for_each(|x| *x /= n);
                let best = net
                    .iter()
                    .map(|p| {
                        let plus: f64 = p.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum();
                        let minus: f64 = p.iter().zip(&v).map(|(a, b)| (a + b).powi(2)).sum();
                        plus.min(minus).sqrt()
                    })
                    .fold(f64::INFINITY, f64::min);
                assert!(best <= step + 1e-12, "k={k}: distance {best}");
            }
        }
    }

    #[test]
    fn subspace_bound_dominates_dense_sampling() {
        let d = 256;
        let mut rng = stream(21, 0);
        let g = gaussian_matrix(d, 2, Field::Real, &mut rng);
        let w = orthonormalize(&g).unwrap();
        let bound = t_norm_subspace_bound(&w, 0.25).unwrap();
        let u = w.real_columns();
        let col_max = (0..2)
            .map(|j| t_norm(&w.column(j)).value)
            .fold(0.0, f64::max);
        assert!(bound.is_finite() && bound >= col_max);
        let sampled = (0..100_000)
            .map(|_| {
                let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                t_norm_real_combination(&u, &[t.cos(), t.sin()])
            })
            .fold(0.0, f64::max);
        assert!(sampled <= bound, "sampled {sampled} > bound {bound}");
    }

    #[test]
    fn gaussian_samples() {
        let mut rng = stream(1, 0);
        assert_eq!(sample_gaussian(1, false, &mut rng).unwrap().len(), 1);
        assert!(sample_gaussian(1, true, &mut rng).is_err());
        assert!(sample_gaussian(0, false, &mut rng).is_err());
        for d in [2, 17, 300] {
            let g = sample_gaussian(d, true, &mut rng).unwrap();
            assert!(g.re().iter().sum::<f64>().abs() <= 1e-12 * d as f64);
        }
    }

    #[test]
    fn gaussian_norm_concentrates() {
        // chi-square with 10^4 degrees of freedom: ‖w‖²/d has sd ≈ 0.014 per draw
        let d = 10_000;
        let mean: f64 = (0..200)
            .map(|t| {
                let w = sample_gaussian(d, false, &mut stream(3, t)).unwrap();
                w.norm().powi(2) / d as f64
            })
            .sum::<f64>()
            / 200.0;
        assert!((0.97..=1.03).contains(&mean), "{mean}");
    }

    #[test]
    fn statistics_single_trial_is_the_draw() {
        let s = gaussian_tnorm_statistics(64, 1, false, 4).unwrap();
        let w = sample_gaussian(64, false, &mut stream(4, 0)).unwrap();
        let r = t_norm(&w).value / 8.0;
        for x in [s.mean, s.min, s.max, s.q05, s.median, s.q95] {
            assert_eq!(x, r);
        }
        assert!(gaussian_tnorm_statistics(64, 0, false, 4).is_err());
    }

    #[test]
    fn statistics_stable_across_dimension() {
        let a = gaussian_tnorm_statistics(1024, 100, false, 8).unwrap();
        let b = gaussian_tnorm_statistics(4096, 100, false, 8).unwrap();
        assert!(a.mean.is_finite() && b.mean.is_finite());
        assert!(a.mean / b.mean <= 2.0 && b.mean / a.mean <= 2.0);
    }

    fn random_vec(seed: u64, d: usize) -> Vec<f64> {
        let mut rng = stream(seed, 0);
        (0..d).map(|_| rng.sample(rand_distr::StandardNormal)).collect()
    }

    proptest! {
        #[test]
        fn dom_monotone(seed in any::<u64>(), d in 1usize..20, shrink in prop::collection::vec(0.0f64..1.0, 20)) {
            let v = random_vec(seed, d);
            let w: Vec<f64> = v.iter().zip(&shrink).map(|(a, s)| a * s).rev().collect();
            let (vv, ww) = (Vector::real(&v).unwrap(), Vector::real(&w).unwrap());
            prop_assert!(crate::vectors::dom_membership(&ww, &vv).unwrap());
            prop_assert!(t_norm(&ww).value <= t_norm(&vv).value + 1e-12);
        }

        #[test]
        fn norm_axioms(seed in any::<u64>(), d in 1usize..40, c in -5.0f64..5.0) {
            let v = random_vec(seed, d);
            let u = random_vec(seed.wrapping_add(1), d);
            let tv = t_norm(&Vector::real(&v).unwrap()).value;
            let tu = t_norm(&Vector::real(&u).unwrap()).value;
            let scaled: Vec<f64> = v.iter().map(|x| c * x).collect();
            prop_assert!((t_norm(&Vector::real(&scaled).unwrap()).value - c.abs() * tv).abs() <= 1e-9);
            let sum: Vec<f64> = v.iter().zip(&u).map(|(a, b)| a + b).collect();
            prop_assert!(t_norm(&Vector::real(&sum).unwrap()).value <= tv + tu + 1e-9);
        }

        #[test]
        fn sandwich(seed in any::<u64>(), d in 1usize..60) {
            let v = Vector::real(&random_vec(seed, d)).unwrap();
            let t = t_norm(&v).value;
            let n = v.norm();
            prop_assert!(t >= 2f64.ln().powi(2) * n - 1e-12);
            prop_assert!(t <= lipschitz_bound(d) * n + 1e-12);
        }
    }
}
