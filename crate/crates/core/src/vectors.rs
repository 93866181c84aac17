//! Vectors, subspace bases, decreasing rearrangement and the domination cone.
//!
//! All arithmetic is complex. A [`Field`] tag records whether a value is
//! known to be real so estimators can stay inside the real group when the
//! input is real.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::C64;

/// Entrywise tolerance on `Q*Q - I` for a basis to count as orthonormal.
pub const ORTHONORMAL_TOL: f64 = 1e-9;
/// Column-sum modulus allowed on a sum-zero basis.
pub const SUM_ZERO_TOL: f64 = 1e-9;
/// Slack used by [`dom_membership`].
pub const DOM_TOL: f64 = 1e-12;
/// Rank threshold for [`orthonormalize`], relative to the largest singular value.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
}

impl Field {
    /// The smallest field containing both.
    pub fn join(self, other: Field) -> Field {
        if self == Field::Real && other == Field::Real {
            Field::Real
        } else {
            Field::Complex
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Vector {
    coords: DVector<C64>,
    field: Field,
}

impl Vector {
    pub fn new(coords: DVector<C64>, field: Field) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::EmptyVector);
        }
        for (i, z) in coords.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite(i));
            }
            if field == Field::Real && z.im != 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "real vector has imaginary part at index {i}"
                )));
            }
        }
        Ok(Self { coords, field })
    }

    pub fn real(xs: &[f64]) -> Result<Self> {
        Self::new(
            DVector::from_iterator(xs.len(), xs.iter().map(|&x| C64::new(x, 0.0))),
            Field::Real,
        )
    }

    pub fn complex(zs: &[C64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(zs), Field::Complex)
    }

    /// Builds a vector whose field is inferred from the imaginary parts.
    pub fn infer(coords: DVector<C64>) -> Result<Self> {
        let field = if coords.iter().all(|z| z.im == 0.0) {
            Field::Real
        } else {
            Field::Complex
        };
        Self::new(coords, field)
    }

    pub fn zeros(d: usize) -> Result<Self> {
        Self::real(&vec![0.0; d])
    }

    /// Standard basis vector `e_i` (0-based).
    pub fn basis(d: usize, i: usize) -> Result<Self> {
        if i >= d {
            return Err(Error::InvalidArgument(format!("index {i} out of range for d = {d}")));
        }
        let mut xs = vec![0.0; d];
        xs[i] = 1.0;
        Self::real(&xs)
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &DVector<C64> {
        &self.coords
    }

    pub fn into_coords(self) -> DVector<C64> {
        self.coords
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.coords.iter().map(|z| z.norm()).collect()
    }

    /// Real parts; callers should check [`Vector::field`] first when it matters.
    pub fn re(&self) -> Vec<f64> {
        self.coords.iter().map(|z| z.re).collect()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::InvalidArgument("cannot normalize the zero vector".into()));
        }
        Ok(Self {
            coords: self.coords.unscale(n),
            field: self.field,
        })
    }

    pub fn scaled(&self, c: C64) -> Self {
        let field = if c.im == 0.0 { self.field } else { Field::Complex };
        Self {
            coords: self.coords.map(|z| z * c),
            field,
        }
    }

    /// `⟨self, other⟩ = Σ self_i · conj(other_i)`.
    pub fn inner(&self, other: &Vector) -> Result<C64> {
        check_len(self.len(), other.len())?;
        Ok(self
            .coords
            .iter()
            .zip(other.coords.iter())
            .map(|(a, b)| a * b.conj())
            .sum())
    }
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Non-negative values sorted non-increasingly.
#[derive(Clone, Debug, PartialEq)]
pub struct DecreasingProfile(Vec<f64>);

impl DecreasingProfile {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Indices of `moduli` ordered by decreasing value; ties keep index order.
pub fn decreasing_order(moduli: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..moduli.len()).collect();
    order.sort_by(|&a, &b| moduli[b].total_cmp(&moduli[a]));
    order
}

pub fn decreasing_rearrangement(v: &Vector) -> DecreasingProfile {
    let mut m = v.moduli();
    m.sort_by(|a, b| b.total_cmp(a));
    DecreasingProfile(m)
}

/// Whether `w ∈ Dom(v)`: the decreasing profile of `w` is entrywise below that of `v`.
pub fn dom_membership(w: &Vector, v: &Vector) -> Result<bool> {
    check_len(v.len(), w.len())?;
    let pw = decreasing_rearrangement(w);
    let pv = decreasing_rearrangement(v);
    Ok(pw
        .values()
        .iter()
        .zip(pv.values())
        .all(|(a, b)| *a <= *b + DOM_TOL))
}

/// Orthonormal columns spanning a subspace `W` of `C^d` (or `R^d`).
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceBasis {
    columns: DMatrix<C64>,
    field: Field,
    sum_zero: bool,
}

impl SubspaceBasis {
    /// Wraps already-orthonormal columns, checking the invariants.
    pub fn new(columns: DMatrix<C64>, field: Field, sum_zero: bool) -> Result<Self> {
        if columns.nrows() == 0 || columns.ncols() == 0 {
            return Err(Error::InvalidArgument("basis needs d >= 1 and k >= 1".into()));
        }
        if columns.ncols() > columns.nrows() {
            return Err(Error::InvalidArgument(format!(
                "{} columns cannot be orthonormal in dimension {}",
                columns.ncols(),
                columns.nrows()
            )));
        }
        if let Some(i) = columns
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite(i));
        }
        if field == Field::Real && columns.iter().any(|z| z.im != 0.0) {
            return Err(Error::InvalidArgument("real basis has imaginary entries".into()));
        }
        let deviation = gram_deviation(&columns);
        if deviation > ORTHONORMAL_TOL {
            return Err(Error::NotOrthonormal { deviation });
        }
        if sum_zero {
            for (j, col) in columns.column_iter().enumerate() {
                let s: C64 = col.iter().sum();
                if s.norm() > SUM_ZERO_TOL {
                    return Err(Error::NotSumZero { column: j, sum: s.norm() });
                }
            }
        }
        Ok(Self {
            columns,
            field,
            sum_zero,
        })
    }

    /// Like [`SubspaceBasis::new`] but sets the sum-zero flag when the columns qualify.
    pub fn detect_sum_zero(columns: DMatrix<C64>, field: Field) -> Result<Self> {
        let sum_zero = columns
            .column_iter()
            .all(|c| c.iter().sum::<C64>().norm() <= SUM_ZERO_TOL);
        Self::new(columns, field, sum_zero)
    }

    /// `span{e_{i}}` for the given coordinate indices.
    pub fn coordinate(d: usize, indices: &[usize]) -> Result<Self> {
        let mut m = DMatrix::zeros(d, indices.len());
        for (j, &i) in indices.iter().enumerate() {
            if i >= d {
                return Err(Error::InvalidArgument(format!("index {i} out of range for d = {d}")));
            }
            m[(i, j)] = C64::new(1.0, 0.0);
        }
        Self::new(m, Field::Real, false)
    }

    pub fn identity(d: usize) -> Result<Self> {
        Self::new(DMatrix::identity(d, d), Field::Real, false)
    }

    pub fn dim(&self) -> usize {
        self.columns.ncols()
    }

    pub fn ambient(&self) -> usize {
        self.columns.nrows()
    }

    pub fn columns(&self) -> &DMatrix<C64> {
        &self.columns
    }

    pub fn column(&self, j: usize) -> Vector {
        Vector {
            coords: self.columns.column(j).into_owned(),
            field: self.field,
        }
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn is_sum_zero(&self) -> bool {
        self.sum_zero
    }

    /// Same span, tagged complex.
    pub fn complexified(&self) -> Self {
        Self {
            columns: self.columns.clone(),
            field: Field::Complex,
            sum_zero: self.sum_zero,
        }
    }

    /// Real parts of the columns as an `f64` matrix.
    pub fn real_columns(&self) -> DMatrix<f64> {
        self.columns.map(|z| z.re)
    }

    /// Embeds into `C^d` by zero-padding trailing coordinates.
    pub fn zero_padded(&self, d: usize) -> Result<Self> {
        if d < self.ambient() {
            return Err(Error::DimensionMismatch {
                expected: self.ambient(),
                found: d,
            });
        }
        let mut m = DMatrix::zeros(d, self.dim());
        m.view_mut((0, 0), (self.ambient(), self.dim()))
            .copy_from(&self.columns);
        Ok(Self {
            columns: m,
            field: self.field,
            sum_zero: self.sum_zero,
        })
    }

    /// Coefficients `⟨x, w_ℓ⟩` of `x` against each basis column.
    pub fn coefficients(&self, x: &Vector) -> Result<DVector<C64>> {
        check_len(self.ambient(), x.len())?;
        Ok(self.columns.ad_mul(x.coords()))
    }

    pub fn project(&self, x: &Vector) -> Result<Vector> {
        let c = self.coefficients(x)?;
        Vector::new(&self.columns * c, self.field.join(x.field()))
    }

    /// Orthonormal basis of `W^⊥`. Errors when `W` is the whole space.
    pub fn complement(&self) -> Result<Self> {
        let d = self.ambient();
        let k = self.dim();
        if k == d {
            return Err(Error::InvalidArgument("complement of the full space is zero".into()));
        }
        let projector = DMatrix::<C64>::identity(d, d) - &self.columns * self.columns.adjoint();
        let eig = projector.symmetric_eigen();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let cols: Vec<_> = order[..d - k]
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect();
        orthonormalize_with_field(&DMatrix::from_columns(&cols), self.field)
    }
}

/// `max |(Q*Q - I)_{ij}|`.
pub fn gram_deviation(columns: &DMatrix<C64>) -> f64 {
    let gram = columns.ad_mul(columns);
    let k = gram.nrows();
    let mut worst = 0.0f64;
    for i in 0..k {
        for j in 0..k {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// `‖proj_W x‖₂`.
pub fn projection_norm(w: &SubspaceBasis, x: &Vector) -> Result<f64> {
    Ok(w.coefficients(x)?.norm())
}

/// Orthonormal basis of the column span, field inferred from the entries.
pub fn orthonormalize(columns: &DMatrix<C64>) -> Result<SubspaceBasis> {
    let field = if columns.iter().all(|z| z.im == 0.0) {
        Field::Real
    } else {
        Field::Complex
    };
    orthonormalize_with_field(columns, field)
}

pub fn orthonormalize_real(columns: &DMatrix<f64>) -> Result<SubspaceBasis> {
    orthonormalize_with_field(&columns.map(|x| C64::new(x, 0.0)), Field::Real)
}

pub(crate) fn orthonormalize_with_field(
    columns: &DMatrix<C64>,
    field: Field,
) -> Result<SubspaceBasis> {
    let (d, k) = columns.shape();
    if d == 0 || k == 0 {
        return Err(Error::InvalidArgument("empty column set".into()));
    }
    if k > d {
        return Err(Error::RankDeficient { ratio: 0.0 });
    }
    if let Some(i) = columns
        .iter()
        .position(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(Error::NonFinite(i));
    }
    let sv = columns.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == 0.0 || min <= RANK_TOL * max {
        return Err(Error::RankDeficient {
            ratio: if max == 0.0 { 0.0 } else { min / max },
        });
    }
    let mut q = columns.clone().qr().q();
    if field == Field::Real {
        q.iter_mut().for_each(|z| z.im = 0.0);
    }
    SubspaceBasis::detect_sum_zero(q, field)
}

/// `d × k` matrix of i.i.d. standard Gaussians (complex entries have unit variance).
pub(crate) fn gaussian_matrix<R: Rng + ?Sized>(
    d: usize,
    k: usize,
    field: Field,
    rng: &mut R,
) -> DMatrix<C64> {
    DMatrix::from_fn(d, k, |_, _| gaussian_scalar(field, rng))
}

pub(crate) fn gaussian_scalar<R: Rng + ?Sized>(field: Field, rng: &mut R) -> C64 {
    match field {
        Field::Real => C64::new(rng.sample(StandardNormal), 0.0),
        Field::Complex => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            C64::new(
                s * rng.sample::<f64, _>(StandardNormal),
                s * rng.sample::<f64, _>(StandardNormal),
            )
        }
    }
}

/// Uniformly random unit vector of `W` (real combinations when `W` is real).
pub(crate) fn random_unit_in<R: Rng + ?Sized>(w: &SubspaceBasis, rng: &mut R) -> DVector<C64> {
    loop {
        let c = DVector::from_fn(w.dim(), |_, _| gaussian_scalar(w.field(), rng));
        let n = c.norm();
        if n > 1e-300 {
            return w.columns() * c.unscale(n);
        }
    }
}
