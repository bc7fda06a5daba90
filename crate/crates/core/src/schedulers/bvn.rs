//! Birkhoff-von Neumann decomposition into weighted permutation matrices.

use crate::error::{argument, internal, Result};

/// `perm[i]` is the column matched to row `i`.
pub type Permutation = Vec<usize>;

const ZERO: f64 = 1e-12;

/// Perfect matching on the support of `m` (`support(i, j)` true) by augmenting
/// paths, rows and columns scanned in ascending order.
pub(crate) fn perfect_matching(
    n: usize,
    support: impl Fn(usize, usize) -> bool,
) -> Option<Permutation> {
    fn augment(
        i: usize,
        n: usize,
        support: &dyn Fn(usize, usize) -> bool,
        seen: &mut [bool],
        col_owner: &mut [Option<usize>],
    ) -> bool {
        for j in 0..n {
            if support(i, j) && !seen[j] {
                seen[j] = true;
                if col_owner[j].is_none_or(|o| augment(o, n, support, seen, col_owner)) {
                    col_owner[j] = Some(i);
                    return true;
                }
            }
        }
        false
    }
    let mut col_owner = vec![None; n];
    for i in 0..n {
        let mut seen = vec![false; n];
        if !augment(i, n, &support, &mut seen, &mut col_owner) {
            return None;
        }
    }
    let mut perm = vec![0; n];
    for (j, owner) in col_owner.into_iter().enumerate() {
        perm[owner?] = j;
    }
    Some(perm)
}

/// Raises row and column sums to `target` by northwest-corner filling of the
/// deficits.
fn pad<T>(m: &mut [Vec<T>], target: T, eps: T)
where
    T: Copy + PartialOrd + std::ops::Add<Output = T> + std::ops::Sub<Output = T> + Default,
{
    let n = m.len();
    let sum = |it: &mut dyn Iterator<Item = T>| it.fold(T::default(), |a, b| a + b);
    let mut row_def: Vec<T> = m
        .iter()
        .map(|r| target - sum(&mut r.iter().copied()))
        .collect();
    let mut col_def: Vec<T> = (0..n)
        .map(|j| target - sum(&mut m.iter().map(|r| r[j])))
        .collect();
    let (mut i, mut j) = (0, 0);
    while i < n && j < n {
        if !(row_def[i] > eps) {
            i += 1;
            continue;
        }
        if !(col_def[j] > eps) {
            j += 1;
            continue;
        }
        let x = if row_def[i] < col_def[j] {
            row_def[i]
        } else {
            col_def[j]
        };
        m[i][j] = m[i][j] + x;
        row_def[i] = row_def[i] - x;
        col_def[j] = col_def[j] - x;
    }
}

/// Decomposes a nonnegative square matrix, normalized by its largest line sum
/// and padded to be doubly stochastic, into `(weight, permutation)` pairs with
/// weights summing to one.
pub fn bvn_decompose(matrix: &[Vec<f64>]) -> Result<Vec<(f64, Permutation)>> {
    let n = matrix.len();
    if n == 0 || matrix.iter().any(|r| r.len() != n) {
        return Err(argument("matrix must be square and nonempty"));
    }
    if matrix.iter().flatten().any(|&v| !v.is_finite() || v < 0.0) {
        return Err(argument("matrix entries must be finite and nonnegative"));
    }
    let line_max = (0..n)
        .map(|i| {
            matrix[i]
                .iter()
                .sum::<f64>()
                .max(matrix.iter().map(|r| r[i]).sum())
        })
        .fold(0.0f64, f64::max);
    if line_max == 0.0 {
        return Err(argument("matrix is all zero"));
    }
    let mut m: Vec<Vec<f64>> = matrix
        .iter()
        .map(|r| r.iter().map(|v| v / line_max).collect())
        .collect();
    pad(&mut m, 1.0, ZERO);

    let mut out = Vec::new();
    let mut left = 1.0;
    while m.iter().flatten().any(|&v| v > ZERO) {
        let Some(perm) = perfect_matching(n, |i, j| m[i][j] > ZERO) else {
            if left < 1e-9 {
                break;
            }
            return Err(internal("no perfect matching on the support"));
        };
        let w = perm
            .iter()
            .enumerate()
            .map(|(i, &j)| m[i][j])
            .fold(f64::INFINITY, f64::min);
        for (i, &j) in perm.iter().enumerate() {
            m[i][j] -= w;
            if m[i][j] <= ZERO {
                m[i][j] = 0.0;
            }
        }
        left -= w;
        out.push((w, perm));
        if out.len() > n * n {
            return Err(internal("decomposition did not terminate"));
        }
    }
    Ok(out)
}

/// Integer decomposition: a nonnegative integer matrix padded to line sum
/// `target` becomes `(count, permutation)` pairs whose counts sum to `target`.
pub(crate) fn bvn_integer(matrix: &[Vec<u64>], target: u64) -> Result<Vec<(u64, Permutation)>> {
    let n = matrix.len();
    let mut m = matrix.to_vec();
    pad(&mut m, target, 0);
    let mut out = Vec::new();
    let mut left = target;
    while left > 0 {
        let perm = perfect_matching(n, |i, j| m[i][j] > 0)
            .ok_or_else(|| internal("no perfect matching on the padded support"))?;
        let c = perm
            .iter()
            .enumerate()
            .map(|(i, &j)| m[i][j])
            .min()
            .unwrap_or(0);
        for (i, &j) in perm.iter().enumerate() {
            m[i][j] -= c;
        }
        left -= c;
        out.push((c, perm));
    }
    Ok(out)
}
