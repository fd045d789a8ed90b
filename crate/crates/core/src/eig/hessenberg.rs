// Householder reduction to upper Hessenberg form (EISPACK orthes/ortran).
//
// Loops over rows are arranged so the inner index walks contiguous memory of
// the row-major storage.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::math;

pub(crate) struct Hessenberg {
    pub n: usize,
    /// Hessenberg matrix on and above the subdiagonal; reflector tails below.
    pub reduced: Vec<f64>,
    ort: Vec<f64>,
}

impl Hessenberg {
    pub fn new(n: usize, mut a: Vec<f64>) -> Self {
        assert_eq!(a.len(), n * n);
        let mut ort = vec![0.0f64; n];
        let mut f = vec![0.0f64; n];
        if n > 2 {
            let high = n - 1;
            for m in 1..high {
                let mut scale = 0.0;
                for i in m..=high {
                    scale += a[i * n + m - 1].abs();
                }
                if scale == 0.0 {
                    ort[m] = 0.0;
                    continue;
                }
                let mut h = 0.0;
                for i in (m..=high).rev() {
                    ort[i] = a[i * n + m - 1] / scale;
                    h += ort[i] * ort[i];
                }
                let mut g = math::sqrt(h);
                if ort[m] > 0.0 {
                    g = -g;
                }
                h -= ort[m] * g;
                ort[m] -= g;

                // (I - u u'/h) A
                f[m..n].iter_mut().for_each(|x| *x = 0.0);
                for i in m..=high {
                    let oi = ort[i];
                    let row = &a[i * n..(i + 1) * n];
                    for j in m..n {
                        f[j] += oi * row[j];
                    }
                }
                for j in m..n {
                    f[j] /= h;
                }
                for i in m..=high {
                    let oi = ort[i];
                    let row = &mut a[i * n..(i + 1) * n];
                    for j in m..n {
                        row[j] -= f[j] * oi;
                    }
                }
                // A (I - u u'/h)
                for i in 0..=high {
                    let row = &mut a[i * n..(i + 1) * n];
                    let mut s = 0.0;
                    for j in m..=high {
                        s += ort[j] * row[j];
                    }
                    s /= h;
                    for j in m..=high {
                        row[j] -= s * ort[j];
                    }
                }
                ort[m] *= scale;
                a[m * n + m - 1] = scale * g;
            }
        }
        Hessenberg { n, reduced: a, ort }
    }

    #[inline]
    fn reflector_active(&self, m: usize) -> bool {
        self.reduced[m * self.n + m - 1] != 0.0 && self.ort[m] != 0.0
    }

    /// Reflector `m` as `(coefficient, u)` with `P x = x + coefficient * u (u . x)`,
    /// `u` spanning rows `m..n`.
    fn reflector(&self, m: usize, u: &mut Vec<f64>) -> f64 {
        let n = self.n;
        u.clear();
        u.push(self.ort[m]);
        for i in m + 1..n {
            u.push(self.reduced[i * n + m - 1]);
        }
        1.0 / self.ort[m] / self.reduced[m * n + m - 1]
    }

    /// Clean upper Hessenberg copy (reflector storage zeroed).
    pub fn matrix(&self) -> Vec<f64> {
        let n = self.n;
        let mut h = self.reduced.clone();
        for i in 0..n {
            for j in 0..i.saturating_sub(1) {
                h[i * n + j] = 0.0;
            }
        }
        h
    }

    /// Orthogonal factor `Q` with `A = Q H Q'`, row-major.
    pub fn q(&self) -> Vec<f64> {
        let n = self.n;
        let mut v = vec![0.0f64; n * n];
        for i in 0..n {
            v[i * n + i] = 1.0;
        }
        if n <= 2 {
            return v;
        }
        let mut u = Vec::with_capacity(n);
        let mut g = vec![0.0f64; n];
        for m in (1..n - 1).rev() {
            if !self.reflector_active(m) {
                continue;
            }
            let c = self.reflector(m, &mut u);
            g[m..n].iter_mut().for_each(|x| *x = 0.0);
            for (k, i) in (m..n).enumerate() {
                let row = &v[i * n..(i + 1) * n];
                for j in m..n {
                    g[j] += u[k] * row[j];
                }
            }
            for (k, i) in (m..n).enumerate() {
                let row = &mut v[i * n..(i + 1) * n];
                for j in m..n {
                    row[j] += c * g[j] * u[k];
                }
            }
        }
        v
    }

    /// `x <- Q x` for a complex vector.
    pub fn apply_q(&self, x: &mut [Complex64]) {
        let n = self.n;
        assert_eq!(x.len(), n);
        if n <= 2 {
            return;
        }
        let mut u = Vec::with_capacity(n);
        for m in (1..n - 1).rev() {
            if !self.reflector_active(m) {
                continue;
            }
            let c = self.reflector(m, &mut u);
            let dot: Complex64 = u.iter().zip(&x[m..]).map(|(&ui, &xi)| xi * ui).sum();
            let s = dot * c;
            for (xi, &ui) in x[m..].iter_mut().zip(&u) {
                *xi += s * ui;
            }
        }
    }
}
