// Inverse iteration with a complex shift on a real upper Hessenberg matrix.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

/// Solve `(H - shift) y = x` repeatedly and return the normalized iterate.
///
/// `h` is row-major upper Hessenberg, `norm` a scale for replacing exactly
/// singular pivots.
pub(crate) fn inverse_iteration(n: usize, h: &[f64], shift: Complex64, norm: f64, steps: usize) -> Vec<Complex64> {
    let zero = Complex64::new(0.0, 0.0);
    let tiny = f64::EPSILON * norm.max(f64::MIN_POSITIVE);
    let width = |i: usize| n - i;

    // Packed upper rows: row i holds columns i..n.
    let mut offsets = Vec::with_capacity(n + 1);
    let mut total = 0usize;
    for i in 0..n {
        offsets.push(total);
        total += width(i);
    }
    offsets.push(total);
    let mut u = vec![zero; total];
    // the working lower row carried down the elimination
    let mut carry: Vec<Complex64> = (0..n).map(|j| Complex64::new(h[j], 0.0)).collect();
    carry[0] -= shift;
    let mut multipliers = vec![zero; n.saturating_sub(1)];
    let mut swaps = vec![false; n.saturating_sub(1)];

    for k in 0..n {
        if k + 1 == n {
            let mut piv = carry[k];
            if piv == zero {
                piv = Complex64::new(tiny, 0.0);
            }
            u[offsets[k]] = piv;
            break;
        }
        // next row of H - shift, restricted to columns k..n
        let mut next: Vec<Complex64> = (k..n).map(|j| Complex64::new(h[(k + 1) * n + j], 0.0)).collect();
        next[1] -= shift;
        let mut top: Vec<Complex64> = carry[k..n].to_vec();
        if next[0].norm() > top[0].norm() {
            core::mem::swap(&mut top, &mut next);
            swaps[k] = true;
        }
        if top[0] == zero {
            top[0] = Complex64::new(tiny, 0.0);
        }
        let m = next[0] / top[0];
        multipliers[k] = m;
        for j in 1..top.len() {
            carry[k + j] = next[j] - m * top[j];
        }
        u[offsets[k]..offsets[k + 1]].copy_from_slice(&top);
    }

    let back = |b: &mut [Complex64]| {
        for i in (0..n).rev() {
            let row = &u[offsets[i]..offsets[i + 1]];
            let mut s = b[i];
            for (j, &r) in row.iter().enumerate().skip(1) {
                s -= r * b[i + j];
            }
            b[i] = s / row[0];
        }
    };
    let forward = |b: &mut [Complex64]| {
        for k in 0..n.saturating_sub(1) {
            if swaps[k] {
                b.swap(k, k + 1);
            }
            let t = b[k];
            b[k + 1] -= multipliers[k] * t;
        }
    };
    let normalize = |b: &mut [Complex64]| {
        let s = b.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let s = crate::math::sqrt(s);
        if s > 0.0 && s.is_finite() {
            b.iter_mut().for_each(|z| *z /= s);
        }
    };

    // first step uses the upper factor alone, as in EISPACK invit
    let mut x = vec![Complex64::new(1.0, 0.0); n];
    back(&mut x);
    normalize(&mut x);
    for _ in 1..steps.max(1) {
        forward(&mut x);
        back(&mut x);
        normalize(&mut x);
    }
    x
}
