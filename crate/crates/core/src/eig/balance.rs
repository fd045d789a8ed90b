// Osborne balancing in the 2-norm on the coordinate form.
//
// Scale factors are not rounded to powers of two: the aim is to land as close
// as possible to the diagonal similarity that makes a decoupled
// Hatano-Nelson chain symmetric, and a rounded scaling leaves factors of up to
// sqrt(2) of non-normality per site in place.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

pub(crate) struct Balanced {
    /// Row-major dense `D^-1 A D`.
    pub matrix: Vec<f64>,
    pub scale: Vec<f64>,
}

const TOLERANCE: f64 = 1e-4;
const MAX_SWEEPS: usize = 10_000;

/// `entries` are `(row, col, value)` of a real square matrix of size `n`.
pub(crate) fn balance(n: usize, entries: &[(usize, usize, f64)], enabled: bool) -> Balanced {
    let mut scale = vec![1.0f64; n];
    if enabled {
        osborne(n, entries, &mut scale);
    }
    let mut matrix = vec![0.0f64; n * n];
    for &(r, c, v) in entries {
        matrix[r * n + c] += v * scale[c] / scale[r];
    }
    Balanced { matrix, scale }
}

fn osborne(n: usize, entries: &[(usize, usize, f64)], scale: &mut [f64]) {
    // off-diagonal entries grouped by row and by column
    let mut by_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(r, c, v) in entries {
        if r != c && v != 0.0 {
            by_row[r].push((c, v));
            by_col[c].push((r, v));
        }
    }
    for _ in 0..MAX_SWEEPS {
        let mut converged = true;
        for i in 0..n {
            if by_row[i].is_empty() || by_col[i].is_empty() {
                continue;
            }
            let row: f64 = by_row[i].iter().map(|&(c, v)| (v * scale[c]) * (v * scale[c])).sum();
            let col: f64 = by_col[i].iter().map(|&(r, v)| (v / scale[r]) * (v / scale[r])).sum();
            // row norm of the scaled matrix is sqrt(row)/d_i, column norm sqrt(col)*d_i
            let target = math::sqrt(math::sqrt(row / col));
            let f = target / scale[i];
            if !f.is_finite() || f <= 0.0 {
                continue;
            }
            if math::ln(f).abs() > TOLERANCE {
                converged = false;
                scale[i] = target;
            }
        }
        if converged {
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hatano_nelson_becomes_symmetric() {
        let n = 6;
        let mut entries = Vec::new();
        for x in 0..n - 1 {
            entries.push((x, x + 1, -1.0));
            entries.push((x + 1, x, -0.5));
        }
        let b = balance(n, &entries, true);
        for x in 0..n - 1 {
            let up = b.matrix[x * n + x + 1];
            let down = b.matrix[(x + 1) * n + x];
            assert!((up - down).abs() < 1e-3 * up.abs(), "{up} vs {down}");
            assert!((up + core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-3);
        }
    }

    #[test]
    fn disabled_is_identity() {
        let b = balance(2, &[(0, 1, 3.0), (1, 0, 0.25)], false);
        assert_eq!(b.matrix, vec![0.0, 3.0, 0.25, 0.0]);
        assert_eq!(b.scale, vec![1.0, 1.0]);
    }
}
