//! Finite unitary groups given by generators, their orbits, and the
//! signed permutation group `Γ_d`.
//!
//! Orbits and element lists are closed under the generators by breadth-first
//! search. Points are identified after rounding every coordinate to a
//! `1e-8` grid, so groups whose elements (or orbit points) are closer than
//! that are not supported.

use std::collections::{HashMap, VecDeque};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vectors::{check_len, Field, Vector};
use crate::C64;

pub const UNITARY_TOL: f64 = 1e-9;
pub const DEDUP_GRID: f64 = 1e-8;
const ORBIT_NORM_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKind {
    Explicit,
    SignedPermutations,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupPresentation {
    kind: GroupKind,
    d: usize,
    generators: Vec<DMatrix<C64>>,
}

impl GroupPresentation {
    pub fn explicit(d: usize, generators: Vec<DMatrix<C64>>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("group dimension must be >= 1".into()));
        }
        for (index, g) in generators.iter().enumerate() {
            if g.shape() != (d, d) {
                return Err(Error::InvalidArgument(format!(
                    "generator {index} has shape {:?}, expected {d}x{d}",
                    g.shape()
                )));
            }
            let deviation = unitary_deviation(g);
            if deviation.is_nan() || deviation > UNITARY_TOL {
                return Err(Error::NonUnitary { index, deviation });
            }
        }
        Ok(Self {
            kind: GroupKind::Explicit,
            d,
            generators,
        })
    }

    /// `Γ_d`, kept symbolic.
    pub fn signed_permutations(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("group dimension must be >= 1".into()));
        }
        Ok(Self {
            kind: GroupKind::SignedPermutations,
            d,
            generators: Vec::new(),
        })
    }

    /// Same group with `Γ_d` replaced by explicit generators.
    pub fn to_explicit(&self) -> Result<Self> {
        match self.kind {
            GroupKind::Explicit => Ok(self.clone()),
            GroupKind::SignedPermutations => {
                Self::explicit(self.d, signed_permutation_generators(self.d))
            }
        }
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn generators(&self) -> &[DMatrix<C64>] {
        &self.generators
    }

    pub fn is_real(&self) -> bool {
        self.generators
            .iter()
            .all(|g| g.iter().all(|z| z.im == 0.0))
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: GroupFile = serde_json::from_str(s)?;
        file.into_presentation()
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    /// Serializes generators as flat row-major lists of `[re, im]` pairs.
    pub fn to_json(&self) -> String {
        let file = GroupFile {
            d: self.d,
            kind: self.kind,
            generators: self
                .generators
                .iter()
                .map(|g| {
                    let mut flat = Vec::with_capacity(self.d * self.d);
                    for i in 0..self.d {
                        for j in 0..self.d {
                            flat.push([g[(i, j)].re, g[(i, j)].im]);
                        }
                    }
                    MatrixJson::Flat(flat)
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("group serialization cannot fail")
    }
}

#[derive(Serialize, Deserialize)]
struct GroupFile {
    d: usize,
    kind: GroupKind,
    #[serde(default)]
    generators: Vec<MatrixJson>,
}

/// A generator: either `d²` row-major `[re, im]` pairs or `d` rows of `d` pairs.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum MatrixJson {
    Flat(Vec<[f64; 2]>),
    Rows(Vec<Vec<[f64; 2]>>),
}

impl GroupFile {
    fn into_presentation(self) -> Result<GroupPresentation> {
        match self.kind {
            GroupKind::SignedPermutations => {
                if !self.generators.is_empty() {
                    return Err(Error::InvalidArgument(
                        "signed_permutations groups take no generators".into(),
                    ));
                }
                GroupPresentation::signed_permutations(self.d)
            }
            GroupKind::Explicit => {
                let d = self.d;
                let gens = self
                    .generators
                    .into_iter()
                    .enumerate()
                    .map(|(i, m)| {
                        let flat: Vec<[f64; 2]> = match m {
                            MatrixJson::Flat(f) => f,
                            MatrixJson::Rows(rows) => {
                                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                                    return Err(Error::InvalidArgument(format!(
                                        "generator {i} is not {d}x{d}"
                                    )));
                                }
                                rows.into_iter().flatten().collect()
                            }
                        };
                        if flat.len() != d * d {
                            return Err(Error::InvalidArgument(format!(
                                "generator {i} has {} entries, expected {}",
                                flat.len(),
                                d * d
                            )));
                        }
                        Ok(DMatrix::from_fn(d, d, |r, c| {
                            let [re, im] = flat[r * d + c];
                            C64::new(re, im)
                        }))
                    })
                    .collect::<Result<Vec<_>>>()?;
                GroupPresentation::explicit(d, gens)
            }
        }
    }
}

pub fn unitary_deviation(g: &DMatrix<C64>) -> f64 {
    let n = g.nrows();
    (g.ad_mul(g) - DMatrix::<C64>::identity(n, n)).map(|z| z.norm()).max()
}

/// Real generators of `Γ_d` over `{±1}`: a transposition, a long cycle and
/// one sign flip.
pub fn signed_permutation_generators(d: usize) -> Vec<DMatrix<C64>> {
    let mut gens = permutation_generators(d);
    let mut flip = DMatrix::<C64>::identity(d, d);
    flip[(0, 0)] = C64::new(-1.0, 0.0);
    gens.push(flip);
    gens
}

/// Generators of the coordinate permutation representation of the symmetric group.
pub fn permutation_generators(d: usize) -> Vec<DMatrix<C64>> {
    let mut gens = Vec::new();
    if d >= 2 {
        let mut swap: Vec<usize> = (0..d).collect();
        swap.swap(0, 1);
        gens.push(permutation_matrix(&swap));
        if d >= 3 {
            let cycle: Vec<usize> = (0..d).map(|i| (i + 1) % d).collect();
            gens.push(permutation_matrix(&cycle));
        }
    }
    gens
}

/// Matrix `P` with `(Pv)_i = v_{perm[i]}`.
pub fn permutation_matrix(perm: &[usize]) -> DMatrix<C64> {
    let d = perm.len();
    let mut m = DMatrix::zeros(d, d);
    for (i, &p) in perm.iter().enumerate() {
        m[(i, p)] = C64::new(1.0, 0.0);
    }
    m
}

/// An element `γ` of `Γ_d`: `(γv)_i = phases_i · v_{perm[i]}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedPermutation {
    pub perm: Vec<usize>,
    pub phases: Vec<C64>,
}

impl SignedPermutation {
    pub fn identity(d: usize) -> Self {
        Self {
            perm: (0..d).collect(),
            phases: vec![C64::new(1.0, 0.0); d],
        }
    }

    pub fn apply(&self, v: &Vector) -> Result<Vector> {
        signed_permutation_apply(&self.perm, &self.phases, v)
    }

    pub fn to_matrix(&self) -> DMatrix<C64> {
        let mut m = permutation_matrix(&self.perm);
        for (i, p) in self.phases.iter().enumerate() {
            let mut row = m.row_mut(i);
            row *= *p;
        }
        m
    }
}

pub fn signed_permutation_apply(perm: &[usize], signs: &[C64], v: &Vector) -> Result<Vector> {
    let d = v.len();
    check_len(d, perm.len())?;
    check_len(d, signs.len())?;
    let mut seen = vec![false; d];
    for &p in perm {
        if p >= d || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidArgument(format!("{perm:?} is not a permutation")));
        }
    }
    for (index, s) in signs.iter().enumerate() {
        let modulus = s.norm();
        if (modulus - 1.0).abs() > 1e-12 {
            return Err(Error::NonUnitSign { index, modulus });
        }
    }
    let coords = DVector::from_fn(d, |i, _| signs[i] * v.coords()[perm[i]]);
    let field = if signs.iter().all(|s| s.im == 0.0) {
        v.field()
    } else {
        Field::Complex
    };
    Vector::new(coords, field)
}

/// Orbit of a base point under a finite group.
#[derive(Clone, Debug, PartialEq)]
pub struct Orbit {
    points: Vec<Vector>,
    base_index: usize,
}

impl Orbit {
    /// Wraps points, checking equal norms and that `base_index` is in range.
    pub fn new(points: Vec<Vector>, base_index: usize) -> Result<Self> {
        if base_index >= points.len() {
            return Err(Error::InvalidArgument("base point index out of range".into()));
        }
        let d = points[0].len();
        let r = points[base_index].norm();
        for p in &points {
            check_len(d, p.len())?;
            if (p.norm() - r).abs() > ORBIT_NORM_TOL {
                return Err(Error::VerificationFailed(format!(
                    "orbit point norm {} differs from base norm {r}",
                    p.norm()
                )));
            }
        }
        Ok(Self { points, base_index })
    }

    pub fn points(&self) -> &[Vector] {
        &self.points
    }

    pub fn base_point(&self) -> &Vector {
        &self.points[self.base_index]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn is_real(&self) -> bool {
        self.points
            .iter()
            .all(|p| p.coords().iter().all(|z| z.im.abs() <= 1e-12))
    }

    pub fn contains(&self, x: &Vector) -> bool {
        let key = vector_key(x.coords().iter());
        self.points
            .iter()
            .any(|p| vector_key(p.coords().iter()) == key)
    }

    pub fn max_norm_deviation(&self) -> f64 {
        let r = self.base_point().norm();
        self.points
            .iter()
            .map(|p| (p.norm() - r).abs())
            .fold(0.0, f64::max)
    }
}

fn vector_key<'a>(it: impl Iterator<Item = &'a C64>) -> Vec<i64> {
    it.flat_map(|z| [grid(z.re), grid(z.im)]).collect()
}

fn grid(x: f64) -> i64 {
    // +0.0 so that -0.0 and 0.0 share a cell
    ((x / DEDUP_GRID).round() + 0.0) as i64
}

fn explicit_generators(g: &GroupPresentation) -> Result<&[DMatrix<C64>]> {
    match g.kind {
        GroupKind::Explicit => Ok(&g.generators),
        GroupKind::SignedPermutations => Err(Error::SymbolicGroup),
    }
}

pub fn enumerate_orbit(g: &GroupPresentation, v: &Vector, max_size: usize) -> Result<Orbit> {
    let gens = explicit_generators(g)?;
    check_len(g.d, v.len())?;
    if max_size == 0 {
        return Err(Error::InvalidArgument("max_size must be >= 1".into()));
    }
    let mut seen: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut points = vec![v.clone()];
    seen.insert(vector_key(v.coords().iter()), 0);
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        for gen in gens {
            let image = gen * points[i].coords();
            let key = vector_key(image.iter());
            if seen.contains_key(&key) {
                continue;
            }
            if points.len() == max_size {
                return Err(Error::OrbitTooLarge { limit: max_size });
            }
            seen.insert(key, points.len());
            queue.push_back(points.len());
            let field = if image.iter().all(|z| z.im == 0.0) {
                Field::Real
            } else {
                Field::Complex
            };
            points.push(Vector::new(image, field)?);
        }
    }
    Orbit::new(points, 0)
}

/// All group elements as matrices (identity first).
pub fn enumerate_group_elements(
    g: &GroupPresentation,
    max_size: usize,
) -> Result<Vec<DMatrix<C64>>> {
    let gens = explicit_generators(g)?;
    if max_size == 0 {
        return Err(Error::InvalidArgument("max_size must be >= 1".into()));
    }
    let id = DMatrix::<C64>::identity(g.d, g.d);
    let mut seen: HashMap<Vec<i64>, usize> = HashMap::new();
    seen.insert(vector_key(id.iter()), 0);
    let mut elements = vec![id];
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        for gen in gens {
            let prod = gen * &elements[i];
            let key = vector_key(prod.iter());
            if seen.contains_key(&key) {
                continue;
            }
            if elements.len() == max_size {
                return Err(Error::GroupTooLarge { limit: max_size });
            }
            seen.insert(key, elements.len());
            queue.push_back(elements.len());
            elements.push(prod);
        }
    }
    Ok(elements)
}

/// Index of `m` in `elements` under the deduplication grid.
pub fn find_element(elements: &[DMatrix<C64>], m: &DMatrix<C64>) -> Option<usize> {
    let key = vector_key(m.iter());
    elements.iter().position(|e| vector_key(e.iter()) == key)
}
