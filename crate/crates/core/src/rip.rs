//! Restricted-invertibility column selection and the complex → real
//! subspace reduction built on it.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vectors::{orthonormalize_real, SubspaceBasis, RANK_TOL};

/// Accepted fraction of the restricted-invertibility target.
pub const C_RIP: f64 = 0.1;
/// The exhaustive oracle runs for `k` up to this value.
pub const EXHAUSTIVE_MAX_K: usize = 3;
const S2K_SLACK: f64 = 1e-9;

/// Full singular spectrum, non-increasing.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().singular_values().iter().map(|x| x.max(0.0)).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Smallest singular value of the submatrix on `cols` (with `rows >= cols.len()`).
fn s_min(m: &DMatrix<f64>, cols: &[usize]) -> f64 {
    let sub = m.select_columns(cols);
    singular_values(&sub).get(cols.len() - 1).copied().unwrap_or(0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnSelection {
    /// Selected column indices, ascending.
    pub columns: Vec<usize>,
    /// `s_k(M_S)`.
    pub achieved: f64,
    /// `√(Σ_{j=⌈3k/2⌉}^{2k} s_j(M)² / k)`.
    pub target: f64,
    pub ratio: f64,
    pub greedy_columns: Vec<usize>,
    pub greedy_achieved: f64,
    /// Best subset over all `C(4k, k)` when `k <= EXHAUSTIVE_MAX_K`.
    pub exhaustive_columns: Option<Vec<usize>>,
    pub exhaustive_achieved: Option<f64>,
}

pub fn rip_target(s: &[f64], k: usize) -> f64 {
    let lo = (3 * k).div_ceil(2);
    let sum: f64 = (lo..=2 * k).filter_map(|j| s.get(j - 1)).map(|x| x * x).sum();
    (sum / k as f64).sqrt()
}

/// Picks `k` columns of a `2k × 4k` matrix with large `s_k(M_S)`.
///
/// Greedy: repeatedly add the column that maximizes the smallest singular
/// value of the selected block (lowest index on ties). For small `k` the
/// exhaustive optimum is also computed and the better selection returned.
pub fn select_columns(m: &DMatrix<f64>, k: usize) -> Result<ColumnSelection> {
    if k == 0 || m.shape() != (2 * k, 4 * k) {
        return Err(Error::InvalidArgument(format!(
            "expected a {}x{} matrix, got {:?}",
            2 * k,
            4 * k,
            m.shape()
        )));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite(m.iter().position(|x| !x.is_finite()).unwrap_or(0)));
    }
    let s = singular_values(m);
    if s[0] == 0.0 || s[2 * k - 1] <= RANK_TOL * s[0] {
        return Err(Error::RankDeficient {
            ratio: if s[0] == 0.0 { 0.0 } else { s[2 * k - 1] / s[0] },
        });
    }
    let target = rip_target(&s, k);

    let mut greedy: Vec<usize> = Vec::with_capacity(k);
    let mut greedy_achieved = 0.0;
    for _ in 0..k {
        let scores: Vec<(usize, f64)> = (0..4 * k)
            .into_par_iter()
            .filter(|c| !greedy.contains(c))
            .map(|c| {
                let mut cols = greedy.clone();
                cols.push(c);
                (c, s_min(m, &cols))
            })
            .collect();
        let (c, v) = scores
            .into_iter()
            .reduce(|a, b| if b.1 > a.1 { b } else { a })
            .expect("4k > k candidates");
        greedy.push(c);
        greedy_achieved = v;
    }
    greedy.sort_unstable();

    let exhaustive = (k <= EXHAUSTIVE_MAX_K).then(|| {
        let subsets = combinations(4 * k, k);
        subsets
            .into_par_iter()
            .map(|cols| {
                let v = s_min(m, &cols);
                (cols, v)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .reduce(|a, b| if b.1 > a.1 { b } else { a })
            .expect("nonempty")
    });

    let (columns, achieved) = match &exhaustive {
        Some((cols, v)) if *v > greedy_achieved => (cols.clone(), *v),
        _ => (greedy.clone(), greedy_achieved),
    };
    let ratio = achieved / target;
    if achieved < C_RIP * target {
        return Err(Error::GuaranteeMissed(format!(
            "selection achieves s_k = {achieved:.6}, below {C_RIP} x target {target:.6}"
        )));
    }
    Ok(ColumnSelection {
        columns,
        achieved,
        target,
        ratio,
        greedy_columns: greedy,
        greedy_achieved,
        exhaustive_achieved: exhaustive.as_ref().map(|e| e.1),
        exhaustive_columns: exhaustive.map(|e| e.0),
    })
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// `[Re B | Im B]`.
pub fn real_imag_matrix(b: &SubspaceBasis) -> DMatrix<f64> {
    let (d, m) = (b.ambient(), b.dim());
    DMatrix::from_fn(d, 2 * m, |i, j| {
        let z = b.columns()[(i, j % m)];
        if j < m {
            z.re
        } else {
            z.im
        }
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Realization {
    /// Real `k`-dimensional subspace spanned by the selected columns of `M`.
    pub basis: SubspaceBasis,
    /// Selection on the row-compressed `2k × 4k` matrix.
    pub selection: ColumnSelection,
    /// `s_{2k}(M)`.
    pub s_2k: f64,
    /// `s_k` of the selected columns of the uncompressed `M`.
    pub selected_s_k: f64,
}

/// Real `k`-dimensional subspace from a complex orthonormal `d × 2k` basis.
///
/// Forms `M = [Re B | Im B]` (`d × 4k`), checks `s_{2k}(M) >= 1/√2`,
/// compresses `M` onto its top `2k` left singular vectors and selects `k`
/// columns there. Compression can only lower `s_k` of a column block, so the
/// selection guarantee carries over to the original columns.
pub fn realize_real_subspace(b: &SubspaceBasis) -> Result<Realization> {
    let m2 = b.dim();
    if !m2.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "basis dimension {m2} is odd; expected 2k columns"
        )));
    }
    let k = m2 / 2;
    let m = real_imag_matrix(b);
    let svd = m.clone().svd(true, false);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let s_2k = svd.singular_values[order[2 * k - 1]];
    if s_2k < std::f64::consts::FRAC_1_SQRT_2 - S2K_SLACK {
        return Err(Error::VerificationFailed(format!(
            "s_2k(M) = {s_2k} is below 1/√2; basis is not orthonormal"
        )));
    }
    let u = svd.u.as_ref().expect("requested U");
    let top: Vec<_> = order[..2 * k].iter().map(|&i| u.column(i)).collect();
    let u_top = DMatrix::from_columns(&top);
    let compressed = u_top.transpose() * &m;
    let selection = select_columns(&compressed, k)?;
    let selected = m.select_columns(&selection.columns);
    let selected_s_k = s_min(&m, &selection.columns);
    Ok(Realization {
        basis: orthonormalize_real(&selected)?,
        selection,
        s_2k,
        selected_s_k,
    })
}
