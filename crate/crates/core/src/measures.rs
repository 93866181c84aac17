//! Probability measures on Grassmannians.
//!
//! A [`GrassmannMeasure`] is an immutable sampler specification. Sampling
//! takes the caller's RNG, so disjoint streams give reproducible draws from
//! any number of threads.

use nalgebra::DMatrix;
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::{enumerate_group_elements, GroupPresentation};
use crate::rng::{stream, sub_seed};
use crate::tnorm::{t_norm_of_slice, t_norm_subspace_bound};
use crate::vectors::{
    gaussian_matrix, gaussian_scalar, orthonormalize_with_field, random_unit_in, Field,
    SubspaceBasis, Vector,
};
use crate::C64;

/// Default delocalization threshold on `sup_{v ∈ S(W)} ‖v‖_T`.
pub const DEFAULT_C_DELOC: f64 = 40.0;
/// Default desk-scale offset `Δ` in `j_min = ⌈log₂ 2k⌉ + Δ`.
pub const DEFAULT_DELTA: u32 = 1;
pub const DEFAULT_ATTEMPTS: usize = 20;
const CERT_NET_STEP: f64 = 0.25;
const CERT_MC_VECTORS: usize = 10_000;
const CERT_MC_SAFETY: f64 = 2.0;
pub const ORTHOGONAL_TOL: f64 = 1e-8;
const CLUSTER_GAP: f64 = 1e-6;
const INVARIANCE_TOL: f64 = 1e-6;
const MASCHKE_ROUNDS: usize = 10;

/// Haar-random `k`-dimensional subspace of `F^d`.
pub fn sample_uniform<R: Rng + ?Sized>(
    k: usize,
    d: usize,
    field: Field,
    rng: &mut R,
) -> Result<SubspaceBasis> {
    if k == 0 || k > d {
        return Err(Error::InvalidArgument(format!("need 1 <= k <= d (k = {k}, d = {d})")));
    }
    loop {
        match orthonormalize_with_field(&gaussian_matrix(d, k, field, rng), field) {
            Err(Error::RankDeficient { .. }) => continue,
            other => return other,
        }
    }
}

/// How a delocalization bound was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    /// Exact (`k = 1`) or net-based upper bound.
    Net,
    /// Monte-Carlo maximum times a safety factor.
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DelocalizedSubspace {
    pub basis: SubspaceBasis,
    /// Bound on `sup_{v ∈ S(W)} ‖v‖_T`.
    pub certificate: f64,
    pub kind: CertificateKind,
    /// 1-based index of the accepted attempt.
    pub attempts_used: usize,
}

/// Random `k`-dimensional real subspace of `1^⊥ ⊂ R^d` with all unit vectors
/// of T-norm at most [`DEFAULT_C_DELOC`].
pub fn build_delocalized_subspace(
    k: usize,
    d: usize,
    attempts: usize,
    seed: u64,
) -> Result<DelocalizedSubspace> {
    build_delocalized_subspace_with(k, d, attempts, DEFAULT_C_DELOC, seed)
}

pub fn build_delocalized_subspace_with(
    k: usize,
    d: usize,
    attempts: usize,
    threshold: f64,
    seed: u64,
) -> Result<DelocalizedSubspace> {
    if k == 0 || 4 * k > d {
        return Err(Error::InvalidArgument(format!(
            "delocalized subspaces need 1 <= k <= d/4 (k = {k}, d = {d})"
        )));
    }
    delocalized_block(k, d, attempts, threshold, seed)
}

/// Same as the public builder but only needs `k <= d - 1`.
fn delocalized_block(
    k: usize,
    d: usize,
    attempts: usize,
    threshold: f64,
    seed: u64,
) -> Result<DelocalizedSubspace> {
    if k == 0 || k >= d {
        return Err(Error::InvalidArgument(format!(
            "1^⊥ in dimension {d} has no {k}-dimensional subspace"
        )));
    }
    if attempts == 0 {
        return Err(Error::InvalidArgument("attempts must be >= 1".into()));
    }
    let mut best = f64::INFINITY;
    for a in 0..attempts {
        let attempt_seed = sub_seed(seed, a as u64);
        let mut rng = stream(attempt_seed, 0);
        let mut g = gaussian_matrix(d, k, Field::Real, &mut rng);
        for mut col in g.column_iter_mut() {
            let mean = col.iter().map(|z| z.re).sum::<f64>() / d as f64;
            col.iter_mut().for_each(|z| z.re -= mean);
        }
        let basis = match orthonormalize_with_field(&g, Field::Real) {
            Ok(b) => b,
            Err(Error::RankDeficient { .. }) => continue,
            Err(e) => return Err(e),
        };
        if !basis.is_sum_zero() {
            continue;
        }
        let (certificate, kind) = delocalization_bound(&basis, attempt_seed)?;
        if certificate <= threshold {
            return Ok(DelocalizedSubspace {
                basis,
                certificate,
                kind,
                attempts_used: a + 1,
            });
        }
        best = best.min(certificate);
    }
    Err(Error::CertificationFailed {
        attempts,
        best,
        threshold,
    })
}

/// Upper bound (`k <= 4`) or Monte-Carlo estimate (`k > 4`) of
/// `sup_{v ∈ S(W)} ‖v‖_T` for a real `W`.
pub fn delocalization_bound(w: &SubspaceBasis, seed: u64) -> Result<(f64, CertificateKind)> {
    if w.dim() <= 4 {
        return Ok((t_norm_subspace_bound(w, CERT_NET_STEP)?, CertificateKind::Net));
    }
    let max = (0..CERT_MC_VECTORS)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, 1 + i as u64);
            t_norm_of_slice(random_unit_in(w, &mut rng).as_slice())
        })
        .reduce(|| 0.0, f64::max);
    Ok((CERT_MC_SAFETY * max, CertificateKind::MonteCarlo))
}

/// The dyadic blocks `W_j ⊂ span{e_1, …, e_{2^j}} ∩ 1^⊥`, one for each `j ∈ J`.
#[derive(Clone, Debug, PartialEq)]
pub struct DyadicFamily {
    k: usize,
    d: usize,
    delta: Option<u32>,
    j_values: Vec<u32>,
    blocks: Vec<SubspaceBasis>,
    certificates: Vec<f64>,
    padded: Vec<SubspaceBasis>,
}

impl DyadicFamily {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// The `Δ` override, or `None` for the asymptotic endpoints.
    pub fn delta(&self) -> Option<u32> {
        self.delta
    }

    pub fn j_values(&self) -> &[u32] {
        &self.j_values
    }

    /// `W_j` in its own block coordinates (`2^j` rows, real).
    pub fn block(&self, index: usize) -> &SubspaceBasis {
        &self.blocks[index]
    }

    pub fn certificates(&self) -> &[f64] {
        &self.certificates
    }

    /// `W_j` embedded in `C^d`.
    pub fn embedded(&self, index: usize) -> &SubspaceBasis {
        &self.padded[index]
    }
}

/// Endpoints `(j_min, j_max)` of the dyadic index set.
///
/// Without an override `j_min = ⌈log₂(2k ln⁴ d)⌉`; with `Some(Δ)` it is
/// `⌈log₂ 2k⌉ + Δ`. `j_max = ⌊log₂ d⌋`. In both cases `j_min` is raised so
/// that `2^j - 1 >= k`.
pub fn dyadic_index_range(k: usize, d: usize, delta: Option<u32>) -> Result<(u32, u32)> {
    if k == 0 || d < 2 {
        return Err(Error::InvalidArgument(format!("need k >= 1 and d >= 2 (k = {k}, d = {d})")));
    }
    let j_max = (usize::BITS - 1 - d.leading_zeros()) as i64;
    let raw = match delta {
        None => (2.0 * k as f64 * (d as f64).ln().powi(4)).log2().ceil() as i64,
        Some(delta) => ceil_log2(2 * k) as i64 + delta as i64,
    };
    let j_min = raw.max(ceil_log2(k + 1) as i64);
    if j_min > j_max {
        return Err(Error::EmptyJ { j_min, j_max });
    }
    Ok((j_min as u32, j_max as u32))
}

fn ceil_log2(n: usize) -> u32 {
    usize::BITS - (n - 1).leading_zeros()
}

pub fn dyadic_family(k: usize, d: usize, delta: Option<u32>, seed: u64) -> Result<DyadicFamily> {
    let (j_min, j_max) = dyadic_index_range(k, d, delta)?;
    let j_values: Vec<u32> = (j_min..=j_max).collect();
    let built = j_values
        .iter()
        .map(|&j| {
            delocalized_block(k, 1 << j, DEFAULT_ATTEMPTS, DEFAULT_C_DELOC, sub_seed(seed, j as u64))
        })
        .collect::<Result<Vec<_>>>()?;
    let padded = built
        .iter()
        .map(|b| b.basis.zero_padded(d).map(|p| p.complexified()))
        .collect::<Result<Vec<_>>>()?;
    Ok(DyadicFamily {
        k,
        d,
        delta,
        j_values,
        certificates: built.iter().map(|b| b.certificate).collect(),
        blocks: built.into_iter().map(|b| b.basis).collect(),
        padded,
    })
}

/// The alternating measure: `j` uniform on `J`, then `W_j`.
pub fn dyadic_alt_measure(
    k: usize,
    d: usize,
    delta: Option<u32>,
    seed: u64,
) -> Result<GrassmannMeasure> {
    Ok(GrassmannMeasure::DyadicAlt(dyadic_family(k, d, delta, seed)?))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DirectSumComponent {
    /// Sampler in the block's own coordinates (`ambient = block.dim()`).
    pub measure: GrassmannMeasure,
    /// Isometric embedding of the block into `C^d`.
    pub block: SubspaceBasis,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TensorMeasure {
    mu1: GrassmannMeasure,
    mu2: GrassmannMeasure,
    gammas: Vec<DMatrix<C64>>,
    v1: SubspaceBasis,
}

#[derive(Clone, Debug, PartialEq)]
pub enum GrassmannMeasure {
    Uniform { k: usize, d: usize, field: Field },
    DyadicAlt(DyadicFamily),
    DirectSum {
        components: Vec<DirectSumComponent>,
        k: usize,
        d: usize,
    },
    CoordSelect { frame: SubspaceBasis, k: usize },
    Tensor(Box<TensorMeasure>),
    Atom(SubspaceBasis),
}

impl GrassmannMeasure {
    pub fn uniform(k: usize, d: usize, field: Field) -> Result<Self> {
        if k == 0 || k > d {
            return Err(Error::InvalidArgument(format!("need 1 <= k <= d (k = {k}, d = {d})")));
        }
        Ok(Self::Uniform { k, d, field })
    }

    pub fn k(&self) -> usize {
        match self {
            Self::Uniform { k, .. } | Self::DirectSum { k, .. } | Self::CoordSelect { k, .. } => *k,
            Self::DyadicAlt(f) => f.k,
            Self::Tensor(t) => t.mu1.k() * t.mu2.k(),
            Self::Atom(w) => w.dim(),
        }
    }

    pub fn d(&self) -> usize {
        match self {
            Self::Uniform { d, .. } | Self::DirectSum { d, .. } => *d,
            Self::DyadicAlt(f) => f.d,
            Self::CoordSelect { frame, .. } => frame.ambient(),
            Self::Tensor(t) => t.v1.ambient(),
            Self::Atom(w) => w.ambient(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::Uniform { .. } => "uniform",
            Self::DyadicAlt(_) => "dyadic_alt",
            Self::DirectSum { .. } => "direct_sum",
            Self::CoordSelect { .. } => "coord_select",
            Self::Tensor(_) => "tensor",
            Self::Atom(_) => "atom",
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SubspaceBasis> {
        match self {
            Self::Uniform { k, d, field } => sample_uniform(*k, *d, *field, rng),
            Self::DyadicAlt(f) => Ok(f.padded[rng.random_range(0..f.padded.len())].clone()),
            Self::DirectSum { components, k, .. } => {
                let mut cols = Vec::new();
                let mut field = Field::Real;
                for c in components {
                    let w = c.measure.sample(rng)?;
                    field = field.join(w.field()).join(c.block.field());
                    let embedded = c.block.columns() * w.columns();
                    cols.extend(embedded.column_iter().map(|x| x.into_owned()));
                }
                let sum = DMatrix::from_columns(&cols);
                let m = sum.ncols();
                let out = if *k == m {
                    sum
                } else {
                    let u = sample_uniform(*k, m, field, rng)?;
                    sum * u.columns()
                };
                SubspaceBasis::detect_sum_zero(out, field)
            }
            Self::CoordSelect { frame, k } => {
                let picked = sample_indices(rng, frame.dim(), *k).into_vec();
                let cols: Vec<_> = picked
                    .iter()
                    .map(|&j| frame.columns().column(j).into_owned())
                    .collect();
                SubspaceBasis::detect_sum_zero(DMatrix::from_columns(&cols), frame.field())
            }
            Self::Tensor(t) => t.sample(rng),
            Self::Atom(w) => Ok(w.clone()),
        }
    }
}

fn max_cross_gram(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.ad_mul(b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Orthogonal direct sum of component draws, then a uniform `k`-dimensional
/// subspace of the sum.
pub fn direct_sum_measure(components: Vec<DirectSumComponent>, k: usize) -> Result<GrassmannMeasure> {
    if components.is_empty() {
        return Err(Error::InvalidArgument("direct sum needs at least one component".into()));
    }
    let d = components[0].block.ambient();
    let mut total = 0;
    for (i, c) in components.iter().enumerate() {
        if c.block.ambient() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: c.block.ambient(),
            });
        }
        if c.measure.d() != c.block.dim() {
            return Err(Error::DimensionMismatch {
                expected: c.block.dim(),
                found: c.measure.d(),
            });
        }
        for other in &components[..i] {
            let overlap = max_cross_gram(c.block.columns(), other.block.columns());
            if overlap > ORTHOGONAL_TOL {
                return Err(Error::NonOrthogonal { overlap });
            }
        }
        total += c.measure.k();
    }
    if k == 0 || k > total {
        return Err(Error::InvalidArgument(format!(
            "direct sum has dimension {total}, cannot take k = {k}"
        )));
    }
    Ok(GrassmannMeasure::DirectSum { components, k, d })
}

/// Span of `k` frame vectors chosen uniformly without replacement.
pub fn coordinate_selection_measure(frame: &[Vector], k: usize) -> Result<GrassmannMeasure> {
    if frame.is_empty() {
        return Err(Error::InvalidArgument("empty frame".into()));
    }
    if k == 0 || k > frame.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot select {k} of {} frame vectors",
            frame.len()
        )));
    }
    let field = frame.iter().fold(Field::Real, |f, v| f.join(v.field()));
    let cols: Vec<_> = frame.iter().map(|v| v.coords().clone()).collect();
    let frame = SubspaceBasis::detect_sum_zero(DMatrix::from_columns(&cols), field)?;
    Ok(GrassmannMeasure::CoordSelect { frame, k })
}

/// Pushforward of `mu1 × mu2` under `ψ(x, λ) = Σ_j λ_j γ_j x`.
///
/// `mu1` samples in the coordinates of `v1` (so `mu1.d() = v1.dim()`) and
/// `mu2` samples in `C^{d₁}` with `d₁ = gammas.len()`.
pub fn tensor_pushforward_measure(
    mu1: GrassmannMeasure,
    mu2: GrassmannMeasure,
    gammas: Vec<DMatrix<C64>>,
    v1: SubspaceBasis,
) -> Result<GrassmannMeasure> {
    let d = v1.ambient();
    if mu1.d() != v1.dim() {
        return Err(Error::DimensionMismatch {
            expected: v1.dim(),
            found: mu1.d(),
        });
    }
    if mu2.d() != gammas.len() {
        return Err(Error::DimensionMismatch {
            expected: gammas.len(),
            found: mu2.d(),
        });
    }
    let mut images = Vec::with_capacity(gammas.len());
    for (index, g) in gammas.iter().enumerate() {
        if g.shape() != (d, d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: g.nrows(),
            });
        }
        let deviation = crate::groups::unitary_deviation(g);
        if deviation > crate::groups::UNITARY_TOL {
            return Err(Error::NonUnitary { index, deviation });
        }
        images.push(g * v1.columns());
    }
    for i in 0..images.len() {
        for j in 0..i {
            let overlap = max_cross_gram(&images[i], &images[j]);
            if overlap > ORTHOGONAL_TOL {
                return Err(Error::NonOrthogonal { overlap });
            }
        }
    }
    Ok(GrassmannMeasure::Tensor(Box::new(TensorMeasure {
        mu1,
        mu2,
        gammas,
        v1,
    })))
}

impl TensorMeasure {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SubspaceBasis> {
        let x = self.mu1.sample(rng)?;
        let lambda = self.mu2.sample(rng)?;
        let xs = self.v1.columns() * x.columns();
        let d = self.v1.ambient();
        let mut cols = Vec::with_capacity(xs.ncols() * lambda.dim());
        for xi in xs.column_iter() {
            for l in lambda.columns().column_iter() {
                let mut psi = nalgebra::DVector::<C64>::zeros(d);
                for (j, g) in self.gammas.iter().enumerate() {
                    psi += (g * xi) * l[j];
                }
                cols.push(psi);
            }
        }
        let m = DMatrix::from_columns(&cols);
        let field = if m.iter().all(|z| z.im == 0.0) {
            Field::Real
        } else {
            Field::Complex
        };
        SubspaceBasis::detect_sum_zero(m, field).map_err(|e| match e {
            Error::NotOrthonormal { deviation } => Error::VerificationFailed(format!(
                "tensor pushforward basis is not orthonormal (deviation {deviation:e})"
            )),
            other => other,
        })
    }
}

/// Splits `C^d` into mutually orthogonal `G`-invariant subspaces by
/// diagonalizing group averages of random Hermitian operators.
///
/// Blocks are invariant but not certified irreducible.
pub fn invariant_decomposition(
    g: &GroupPresentation,
    max_group_size: usize,
    seed: u64,
) -> Result<Vec<SubspaceBasis>> {
    let elements = enumerate_group_elements(g, max_group_size)?;
    let d = g.d();
    let mut blocks: Vec<DMatrix<C64>> = vec![DMatrix::identity(d, d)];
    let mut rng = stream(seed, 0);
    for _ in 0..MASCHKE_ROUNDS {
        let mut next = Vec::with_capacity(blocks.len());
        for b in &blocks {
            let m = b.ncols();
            if m == 1 {
                next.push(b.clone());
                continue;
            }
            let h = random_hermitian(m, &mut rng);
            let lifted = b * h * b.adjoint();
            let mut avg = DMatrix::<C64>::zeros(d, d);
            for e in &elements {
                avg += e * &lifted * e.adjoint();
            }
            avg /= C64::new(elements.len() as f64, 0.0);
            let restricted = b.ad_mul(&(avg * b));
            let eig = restricted.symmetric_eigen();
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
            let mut start = 0;
            for i in 1..=m {
                if i == m || eig.eigenvalues[order[i]] - eig.eigenvalues[order[i - 1]] > CLUSTER_GAP {
                    let cols: Vec<_> = order[start..i]
                        .iter()
                        .map(|&c| b * eig.eigenvectors.column(c))
                        .collect();
                    next.push(DMatrix::from_columns(&cols));
                    start = i;
                }
            }
        }
        let split = next.len() > blocks.len();
        blocks = next;
        if !split {
            break;
        }
    }
    let out = blocks
        .into_iter()
        .map(|b| {
            let q = b.qr().q();
            SubspaceBasis::detect_sum_zero(q, Field::Complex)
        })
        .collect::<Result<Vec<_>>>()?;
    for w in &out {
        let p = w.columns() * w.columns().adjoint();
        for gen in g.generators() {
            let gp = gen * &p;
            let dev = (&p * &gp - &gp).iter().map(|z| z.norm()).fold(0.0, f64::max);
            if dev > INVARIANCE_TOL {
                return Err(Error::VerificationFailed(format!(
                    "block of dimension {} is not invariant (deviation {dev:e})",
                    w.dim()
                )));
            }
        }
    }
    Ok(out)
}

fn random_hermitian<R: Rng + ?Sized>(m: usize, rng: &mut R) -> DMatrix<C64> {
    let a = DMatrix::from_fn(m, m, |_, _| gaussian_scalar(Field::Complex, rng));
    (&a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// Measure description usable in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureSpec {
    Uniform {
        #[serde(default = "complex_field")]
        field: Field,
    },
    DyadicAlt {
        /// `None` selects the asymptotic endpoints.
        #[serde(default)]
        delta: Option<u32>,
    },
}

fn complex_field() -> Field {
    Field::Complex
}

impl Default for MeasureSpec {
    fn default() -> Self {
        Self::DyadicAlt {
            delta: Some(DEFAULT_DELTA),
        }
    }
}

impl MeasureSpec {
    pub fn build(&self, k: usize, d: usize, seed: u64) -> Result<GrassmannMeasure> {
        match self {
            Self::Uniform { field } => GrassmannMeasure::uniform(k, d, *field),
            Self::DyadicAlt { delta } => dyadic_alt_measure(k, d, *delta, seed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{permutation_generators, signed_permutation_generators};
    use crate::tnorm::t_norm;
    use crate::vectors::{gram_deviation, projection_norm};

    fn one_dim(v: &[f64]) -> SubspaceBasis {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let m = DMatrix::from_fn(v.len(), 1, |i, _| C64::new(v[i] / n, 0.0));
        SubspaceBasis::detect_sum_zero(m, Field::Real).unwrap()
    }

    #[test]
    fn uniform_full_space_and_gram() {
        let mut rng = stream(1, 0);
        let w = sample_uniform(3, 3, Field::Complex, &mut rng).unwrap();
        let p = w.columns() * w.columns().adjoint();
        assert!((p - DMatrix::<C64>::identity(3, 3)).norm() < 1e-12);
        for _ in 0..1000 {
            let w = sample_uniform(2, 7, Field::Complex, &mut rng).unwrap();
            assert!(gram_deviation(w.columns()) <= 1e-9);
        }
        assert!(sample_uniform(4, 3, Field::Real, &mut rng).is_err());
    }

    #[test]
    fn uniform_symmetry() {
        // E|⟨e₁, w⟩|² = 1/d for a uniform line
        let mut rng = stream(2, 0);
        let n = 10_000;
        let e1 = Vector::basis(2, 0).unwrap();
        let mean = (0..n)
            .map(|_| {
                let w = sample_uniform(1, 2, Field::Complex, &mut rng).unwrap();
                projection_norm(&w, &e1).unwrap().powi(2)
            })
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.5).abs() < 0.02, "{mean}");
    }

    #[test]
    fn uniform_is_unitarily_invariant() {
        // the law of |⟨x, w⟩|² for fixed x must not depend on x
        let d = 4;
        let mut rng = stream(3, 0);
        let x = Vector::basis(d, 0).unwrap();
        let y = Vector::real(&[0.5, 0.5, 0.5, 0.5]).unwrap();
        let n = 20_000;
        let (mut sx, mut sy) = (0.0, 0.0);
        for _ in 0..n {
            let w = sample_uniform(2, d, Field::Real, &mut rng).unwrap();
            sx += projection_norm(&w, &x).unwrap().powi(4);
            sy += projection_norm(&w, &y).unwrap().powi(4);
        }
        assert!((sx / n as f64 - sy / n as f64).abs() < 0.02);
    }

    #[test]
    fn delocalized_subspace() {
        let out = build_delocalized_subspace(1, 256, 5, 9).unwrap();
        assert!(out.certificate.is_finite() && out.certificate < 10.0);
        assert!(out.basis.is_sum_zero());
        let s: C64 = out.basis.columns().iter().sum();
        assert!(s.norm() <= 1e-9);
        assert!(build_delocalized_subspace(2, 7, 5, 9).is_err());
    }

    #[test]
    fn delocalized_prefix_mass() {
        let d = 128;
        let out = build_delocalized_subspace(2, d, 5, 4).unwrap();
        let mut rng = stream(4, 1);
        for _ in 0..200 {
            let u = random_unit_in(&out.basis, &mut rng);
            let mut sq: Vec<f64> = u.iter().map(|z| z.norm_sqr()).collect();
            sq.sort_by(|a, b| b.total_cmp(a));
            let mut prefix = 0.0;
            for (s, x) in sq.iter().enumerate() {
                prefix += x;
                let size = (s + 1) as f64;
                let bound = out.certificate.powi(2) / (2.0 * d as f64 / size).ln().powi(4);
                assert!(prefix <= bound + 1e-12);
            }
        }
    }

    #[test]
    fn delocalized_monte_carlo_path() {
        let out = build_delocalized_subspace(5, 64, 3, 2).unwrap();
        assert_eq!(out.kind, CertificateKind::MonteCarlo);
        let mut rng = stream(5, 0);
        for _ in 0..100 {
            let u = Vector::infer(random_unit_in(&out.basis, &mut rng)).unwrap();
            assert!(t_norm(&u).value <= out.certificate);
        }
    }

    #[test]
    fn certification_failure_is_reported() {
        let err = build_delocalized_subspace_with(1, 64, 3, 0.1, 0).unwrap_err();
        assert!(matches!(err, Error::CertificationFailed { attempts: 3, .. }));
        assert!(err.is_guarantee_missed());
    }

    #[test]
    fn dyadic_index_sets() {
        assert_eq!(dyadic_index_range(2, 256, Some(0)).unwrap(), (2, 8));
        assert_eq!(dyadic_index_range(1, 1024, Some(1)).unwrap(), (2, 10));
        // ⌈log₂(2 ln⁴ 1024)⌉ = 13 > 10
        assert!(matches!(
            dyadic_index_range(1, 1024, None),
            Err(Error::EmptyJ { j_min: 13, j_max: 10 })
        ));
        let fam = dyadic_family(2, 256, Some(0), 3).unwrap();
        assert_eq!(fam.j_values().len(), 7);
        for (i, &j) in fam.j_values().iter().enumerate() {
            assert_eq!(fam.block(i).ambient(), 1 << j);
            assert!(fam.certificates()[i] <= DEFAULT_C_DELOC);
        }
    }

    #[test]
    fn dyadic_draws_are_sum_zero_and_reproducible() {
        let mu = dyadic_alt_measure(2, 256, Some(1), 11).unwrap();
        let again = dyadic_alt_measure(2, 256, Some(1), 11).unwrap();
        assert_eq!(mu, again);
        let mut r1 = stream(6, 0);
        let mut r2 = stream(6, 0);
        for _ in 0..1000 {
            let w = mu.sample(&mut r1).unwrap();
            assert_eq!(w, again.sample(&mut r2).unwrap());
            assert!(w.is_sum_zero());
            assert_eq!((w.ambient(), w.dim()), (256, 2));
            assert!(gram_deviation(w.columns()) <= 1e-9);
        }
    }

    #[test]
    fn direct_sum_examples() {
        let a = SubspaceBasis::coordinate(3, &[0]).unwrap();
        let b = SubspaceBasis::coordinate(3, &[2]).unwrap();
        let atom1 = GrassmannMeasure::Atom(SubspaceBasis::identity(1).unwrap());
        let comps = vec![
            DirectSumComponent { measure: atom1.clone(), block: a.clone() },
            DirectSumComponent { measure: atom1.clone(), block: b.clone() },
        ];
        let mu = direct_sum_measure(comps, 1).unwrap();
        let mut rng = stream(7, 0);
        let n = 10_000;
        let mut weight = 0.0;
        for _ in 0..n {
            let w = mu.sample(&mut rng).unwrap();
            assert!(gram_deviation(w.columns()) <= 1e-9);
            weight += projection_norm(&w, &a.column(0)).unwrap().powi(2);
        }
        assert!((weight / n as f64 - 0.5).abs() < 0.02);

        let single = direct_sum_measure(
            vec![DirectSumComponent { measure: atom1.clone(), block: a.clone() }],
            1,
        )
        .unwrap();
        assert_eq!(single.sample(&mut rng).unwrap(), a);

        let skew = one_dim(&[1.0, 0.0, 1.0]);
        let bad = vec![
            DirectSumComponent { measure: atom1.clone(), block: a },
            DirectSumComponent { measure: atom1, block: skew },
        ];
        assert!(matches!(direct_sum_measure(bad, 1), Err(Error::NonOrthogonal { .. })));
    }

    #[test]
    fn coordinate_selection_examples() {
        let frame: Vec<Vector> = (0..4).map(|i| Vector::basis(4, i).unwrap()).collect();
        let whole = coordinate_selection_measure(&frame, 4).unwrap();
        let mut rng = stream(8, 0);
        let w = whole.sample(&mut rng).unwrap();
        assert_eq!(w.dim(), 4);

        let mu = coordinate_selection_measure(&frame, 1).unwrap();
        let n = 10_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            let w = mu.sample(&mut rng).unwrap();
            let i = (0..4).find(|&i| w.columns()[(i, 0)].norm() > 0.5).unwrap();
            counts[i] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 0.25).abs() < 0.02);
        }
        assert!(coordinate_selection_measure(&frame, 5).is_err());
    }

    #[test]
    fn coordinate_selection_mean_identity() {
        // E‖proj_W v‖² = (k/ℓ) Σ_j |⟨v, w_j⟩|²
        let mut rng = stream(9, 0);
        let basis = sample_uniform(5, 8, Field::Real, &mut rng).unwrap();
        let frame: Vec<Vector> = (0..5).map(|j| basis.column(j)).collect();
        let v = Vector::real(&[0.3, -0.1, 0.8, 0.2, 0.0, -0.4, 0.5, 0.1]).unwrap();
        let exact = (2.0 / 5.0) * basis.coefficients(&v).unwrap().norm_squared();
        let mu = coordinate_selection_measure(&frame, 2).unwrap();
        let n = 20_000;
        let mean = (0..n)
            .map(|_| projection_norm(&mu.sample(&mut rng).unwrap(), &v).unwrap().powi(2))
            .sum::<f64>()
            / n as f64;
        assert!((mean - exact).abs() <= 0.02 * exact, "{mean} vs {exact}");
    }

    fn block_shift(d: usize, block: usize, shift: usize) -> DMatrix<C64> {
        DMatrix::from_fn(d, d, |i, j| {
            if i == (j + shift * block) % d {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    #[test]
    fn tensor_examples() {
        let d = 4;
        let v1 = SubspaceBasis::coordinate(d, &[0, 1]).unwrap();
        let gammas = vec![block_shift(d, 2, 0), block_shift(d, 2, 1)];
        let e1 = GrassmannMeasure::Atom(SubspaceBasis::coordinate(2, &[0]).unwrap());
        let mu = tensor_pushforward_measure(e1.clone(), e1.clone(), gammas.clone(), v1.clone())
            .unwrap();
        let mut rng = stream(10, 0);
        let w = mu.sample(&mut rng).unwrap();
        assert_eq!(w, SubspaceBasis::coordinate(d, &[0]).unwrap());

        let flat = GrassmannMeasure::Atom(one_dim(&[1.0, 1.0]));
        let mu = tensor_pushforward_measure(e1, flat, gammas.clone(), v1.clone()).unwrap();
        let w = mu.sample(&mut rng).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let expected = [h, 0.0, h, 0.0];
        for (i, e) in expected.iter().enumerate() {
            assert!((w.columns()[(i, 0)] - C64::new(*e, 0.0)).norm() < 1e-12);
        }

        let mu = tensor_pushforward_measure(
            GrassmannMeasure::uniform(1, 2, Field::Complex).unwrap(),
            GrassmannMeasure::uniform(2, 2, Field::Complex).unwrap(),
            gammas.clone(),
            v1.clone(),
        )
        .unwrap();
        assert_eq!(mu.k(), 2);
        for _ in 0..100 {
            let w = mu.sample(&mut rng).unwrap();
            assert!(gram_deviation(w.columns()) <= 1e-9);
        }

        let same = vec![block_shift(d, 2, 0), block_shift(d, 2, 0)];
        let e1 = GrassmannMeasure::Atom(SubspaceBasis::coordinate(2, &[0]).unwrap());
        assert!(matches!(
            tensor_pushforward_measure(e1.clone(), e1, same, v1),
            Err(Error::NonOrthogonal { .. })
        ));
    }

    fn assert_orthogonal_blocks(blocks: &[SubspaceBasis]) {
        for i in 0..blocks.len() {
            for j in 0..i {
                assert!(max_cross_gram(blocks[i].columns(), blocks[j].columns()) <= 1e-8);
            }
        }
    }

    #[test]
    fn maschke_trivial_group() {
        let g = GroupPresentation::explicit(2, vec![DMatrix::identity(2, 2)]).unwrap();
        let blocks = invariant_decomposition(&g, 10, 0).unwrap();
        assert_eq!(blocks.iter().map(|b| b.dim()).collect::<Vec<_>>(), vec![1, 1]);
        assert_orthogonal_blocks(&blocks);
    }

    #[test]
    fn maschke_permutation_representation() {
        let g = GroupPresentation::explicit(3, permutation_generators(3)).unwrap();
        let blocks = invariant_decomposition(&g, 100, 1).unwrap();
        let mut dims: Vec<usize> = blocks.iter().map(|b| b.dim()).collect();
        dims.sort();
        assert_eq!(dims, vec![1, 2]);
        assert_orthogonal_blocks(&blocks);
        let ones = Vector::real(&[1.0, 1.0, 1.0]).unwrap().normalized().unwrap();
        let line = blocks.iter().find(|b| b.dim() == 1).unwrap();
        assert!((projection_norm(line, &ones).unwrap() - 1.0).abs() < 1e-9);
        let plane = blocks.iter().find(|b| b.dim() == 2).unwrap();
        assert!(plane.is_sum_zero());
    }

    #[test]
    fn maschke_signed_permutations_irreducible() {
        let g = GroupPresentation::explicit(3, signed_permutation_generators(3)).unwrap();
        let blocks = invariant_decomposition(&g, 100, 2).unwrap();
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].dim(), 3);
    }

    #[test]
    fn maschke_direct_sum_of_two_reps() {
        // S₃ acting on two copies of C³: two trivial and two standard blocks
        let gens: Vec<DMatrix<C64>> = permutation_generators(3)
            .into_iter()
            .map(|p| {
                let mut m = DMatrix::zeros(6, 6);
                m.view_mut((0, 0), (3, 3)).copy_from(&p);
                m.view_mut((3, 3), (3, 3)).copy_from(&p);
                m
            })
            .collect();
        let g = GroupPresentation::explicit(6, gens).unwrap();
        let blocks = invariant_decomposition(&g, 100, 3).unwrap();
        let mut dims: Vec<usize> = blocks.iter().map(|b| b.dim()).collect();
        dims.sort();
        assert_eq!(dims, vec![1, 1, 2, 2]);
        assert_eq!(dims.iter().sum::<usize>(), 6);
        assert_orthogonal_blocks(&blocks);
    }

    #[test]
    fn measure_spec_json() {
        let spec: MeasureSpec = serde_json::from_str(r#"{"kind": "dyadic_alt", "delta": 2}"#).unwrap();
        assert_eq!(spec, MeasureSpec::DyadicAlt { delta: Some(2) });
        let mu = spec.build(1, 64, 0).unwrap();
        assert_eq!(mu.kind_name(), "dyadic_alt");
        let u: MeasureSpec = serde_json::from_str(r#"{"kind": "uniform"}"#).unwrap();
        assert_eq!(u.build(2, 5, 0).unwrap().k(), 2);
    }

    #[test]
    fn every_kind_yields_valid_bases() {
        let mut rng = stream(12, 0);
        let frame: Vec<Vector> = (0..5).map(|i| Vector::basis(5, i).unwrap()).collect();
        let kinds = vec![
            GrassmannMeasure::uniform(2, 6, Field::Real).unwrap(),
            dyadic_alt_measure(1, 32, Some(1), 0).unwrap(),
            coordinate_selection_measure(&frame, 2).unwrap(),
            GrassmannMeasure::Atom(SubspaceBasis::coordinate(4, &[1, 2]).unwrap()),
        ];
        for mu in &kinds {
            for _ in 0..1000 {
                let w = mu.sample(&mut rng).unwrap();
                assert_eq!((w.dim(), w.ambient()), (mu.k(), mu.d()));
                assert!(gram_deviation(w.columns()) <= 1e-9);
            }
        }
    }
}
