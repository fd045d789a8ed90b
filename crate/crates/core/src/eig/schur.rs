// Francis double-shift QR on an upper Hessenberg matrix (EISPACK hqr/hqr2).
//
// With `vectors` set, the orthogonal transformations are accumulated into
// `v` and eigenvectors are recovered by back-substitution on the real Schur
// form. Without it only the active window is updated, which is the cheap
// eigenvalues-only path.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

const EPS: f64 = f64::EPSILON;

pub(crate) struct SchurOutput {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

/// Indices of eigenvalues that did not converge.
pub(crate) struct Unconverged(pub Vec<usize>);

fn cdiv(xr: f64, xi: f64, yr: f64, yi: f64) -> (f64, f64) {
    if yr.abs() > yi.abs() {
        let r = yi / yr;
        let d = yr + r * yi;
        ((xr + r * xi) / d, (xi - r * xr) / d)
    } else {
        let r = yr / yi;
        let d = yi + r * yr;
        ((r * xr + xi) / d, (r * xi - xr) / d)
    }
}

/// Reduce `h` (row-major `n x n`, upper Hessenberg) to real Schur form.
///
/// When `v` is given it must hold the Hessenberg reduction's orthogonal factor
/// on entry; on success it holds the real eigenvector columns in the JAMA
/// layout (a complex pair `k, k+1` is stored as real and imaginary parts of
/// the vector belonging to `re[k] + i im[k]`, `im[k] > 0`).
pub(crate) fn hqr(
    nn_usize: usize,
    h: &mut [f64],
    mut v: Option<&mut [f64]>,
    max_iter: usize,
) -> Result<SchurOutput, Unconverged> {
    let mut d = vec![0.0f64; nn_usize];
    let mut e = vec![0.0f64; nn_usize];
    if nn_usize == 0 {
        return Ok(SchurOutput { re: d, im: e });
    }
    let vectors = v.is_some();
    let nn = nn_usize as isize;
    let ix = move |i: isize, j: isize| (i * nn + j) as usize;
    let low: isize = 0;
    let high: isize = nn - 1;
    let mut n = nn - 1;
    let mut exshift = 0.0;
    let (mut p, mut q, mut r, mut s, mut z) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (mut w, mut x, mut y): (f64, f64, f64);

    let mut norm = 0.0;
    for i in 0..nn {
        for j in (i - 1).max(0)..nn {
            norm += h[ix(i, j)].abs();
        }
    }

    let mut iter = 0usize;
    while n >= low {
        let mut l = n;
        while l > low {
            s = h[ix(l - 1, l - 1)].abs() + h[ix(l, l)].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[ix(l, l - 1)].abs() < EPS * s {
                break;
            }
            l -= 1;
        }
        let row_end = if vectors { nn - 1 } else { n };
        let col_start = if vectors { 0 } else { l };

        if l == n {
            h[ix(n, n)] += exshift;
            d[n as usize] = h[ix(n, n)];
            e[n as usize] = 0.0;
            n -= 1;
            iter = 0;
        } else if l == n - 1 {
            w = h[ix(n, n - 1)] * h[ix(n - 1, n)];
            p = (h[ix(n - 1, n - 1)] - h[ix(n, n)]) / 2.0;
            q = p * p + w;
            z = math::sqrt(q.abs());
            h[ix(n, n)] += exshift;
            h[ix(n - 1, n - 1)] += exshift;
            x = h[ix(n, n)];
            if q >= 0.0 {
                z = if p >= 0.0 { p + z } else { p - z };
                d[(n - 1) as usize] = x + z;
                d[n as usize] = d[(n - 1) as usize];
                if z != 0.0 {
                    d[n as usize] = x - w / z;
                }
                e[(n - 1) as usize] = 0.0;
                e[n as usize] = 0.0;
                if let Some(v) = v.as_deref_mut() {
                    x = h[ix(n, n - 1)];
                    s = x.abs() + z.abs();
                    p = x / s;
                    q = z / s;
                    r = math::sqrt(p * p + q * q);
                    p /= r;
                    q /= r;
                    for j in (n - 1)..nn {
                        z = h[ix(n - 1, j)];
                        h[ix(n - 1, j)] = q * z + p * h[ix(n, j)];
                        h[ix(n, j)] = q * h[ix(n, j)] - p * z;
                    }
                    for i in 0..=n {
                        z = h[ix(i, n - 1)];
                        h[ix(i, n - 1)] = q * z + p * h[ix(i, n)];
                        h[ix(i, n)] = q * h[ix(i, n)] - p * z;
                    }
                    for i in low..=high {
                        z = v[ix(i, n - 1)];
                        v[ix(i, n - 1)] = q * z + p * v[ix(i, n)];
                        v[ix(i, n)] = q * v[ix(i, n)] - p * z;
                    }
                }
            } else {
                d[(n - 1) as usize] = x + p;
                d[n as usize] = x + p;
                e[(n - 1) as usize] = z;
                e[n as usize] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            x = h[ix(n, n)];
            y = 0.0;
            w = 0.0;
            if l < n {
                y = h[ix(n - 1, n - 1)];
                w = h[ix(n, n - 1)] * h[ix(n - 1, n)];
            }
            if iter == 10 {
                exshift += x;
                for i in low..=n {
                    h[ix(i, i)] -= x;
                }
                s = h[ix(n, n - 1)].abs() + h[ix(n - 1, n - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = math::sqrt(s);
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in low..=n {
                        h[ix(i, i)] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }
            iter += 1;
            if iter > max_iter {
                return Err(Unconverged((0..=n as usize).collect()));
            }

            let mut m = n - 2;
            while m >= l {
                z = h[ix(m, m)];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[ix(m + 1, m)] + h[ix(m, m + 1)];
                q = h[ix(m + 1, m + 1)] - z - r - s;
                r = h[ix(m + 2, m + 1)];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if h[ix(m, m - 1)].abs() * (q.abs() + r.abs())
                    < EPS * (p.abs() * (h[ix(m - 1, m - 1)].abs() + z.abs() + h[ix(m + 1, m + 1)].abs()))
                {
                    break;
                }
                m -= 1;
            }

            for i in (m + 2)..=n {
                h[ix(i, i - 2)] = 0.0;
                if i > m + 2 {
                    h[ix(i, i - 3)] = 0.0;
                }
            }

            for k in m..n {
                let notlast = k != n - 1;
                if k != m {
                    p = h[ix(k, k - 1)];
                    q = h[ix(k + 1, k - 1)];
                    r = if notlast { h[ix(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = math::sqrt(p * p + q * q + r * r);
                if p < 0.0 {
                    s = -s;
                }
                if s != 0.0 {
                    if k != m {
                        h[ix(k, k - 1)] = -s * x;
                    } else if l != m {
                        h[ix(k, k - 1)] = -h[ix(k, k - 1)];
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;

                    for j in k..=row_end {
                        p = h[ix(k, j)] + q * h[ix(k + 1, j)];
                        if notlast {
                            p += r * h[ix(k + 2, j)];
                            h[ix(k + 2, j)] -= p * z;
                        }
                        h[ix(k, j)] -= p * x;
                        h[ix(k + 1, j)] -= p * y;
                    }
                    for i in col_start..=n.min(k + 3) {
                        p = x * h[ix(i, k)] + y * h[ix(i, k + 1)];
                        if notlast {
                            p += z * h[ix(i, k + 2)];
                            h[ix(i, k + 2)] -= p * r;
                        }
                        h[ix(i, k)] -= p;
                        h[ix(i, k + 1)] -= p * q;
                    }
                    if let Some(v) = v.as_deref_mut() {
                        for i in low..=high {
                            p = x * v[ix(i, k)] + y * v[ix(i, k + 1)];
                            if notlast {
                                p += z * v[ix(i, k + 2)];
                                v[ix(i, k + 2)] -= p * r;
                            }
                            v[ix(i, k)] -= p;
                            v[ix(i, k + 1)] -= p * q;
                        }
                    }
                }
            }
        }
    }

    let v = match v {
        Some(v) => v,
        None => return Ok(SchurOutput { re: d, im: e }),
    };
    if norm == 0.0 {
        return Ok(SchurOutput { re: d, im: e });
    }

    // back-substitute for the eigenvectors of the quasi-triangular factor
    let mut t: f64;
    for n in (0..nn).rev() {
        p = d[n as usize];
        q = e[n as usize];
        if q == 0.0 {
            let mut l = n;
            h[ix(n, n)] = 1.0;
            for i in (0..n).rev() {
                w = h[ix(i, i)] - p;
                r = 0.0;
                for j in l..=n {
                    r += h[ix(i, j)] * h[ix(j, n)];
                }
                if e[i as usize] < 0.0 {
                    z = w;
                    s = r;
                } else {
                    l = i;
                    if e[i as usize] == 0.0 {
                        h[ix(i, n)] = if w != 0.0 { -r / w } else { -r / (EPS * norm) };
                    } else {
                        x = h[ix(i, i + 1)];
                        y = h[ix(i + 1, i)];
                        q = (d[i as usize] - p) * (d[i as usize] - p) + e[i as usize] * e[i as usize];
                        t = (x * s - z * r) / q;
                        h[ix(i, n)] = t;
                        h[ix(i + 1, n)] = if x.abs() > z.abs() { (-r - w * t) / x } else { (-s - y * t) / z };
                    }
                    t = h[ix(i, n)].abs();
                    if (EPS * t) * t > 1.0 {
                        for j in i..=n {
                            h[ix(j, n)] /= t;
                        }
                    }
                }
            }
        } else if q < 0.0 {
            let mut l = n - 1;
            if h[ix(n, n - 1)].abs() > h[ix(n - 1, n)].abs() {
                h[ix(n - 1, n - 1)] = q / h[ix(n, n - 1)];
                h[ix(n - 1, n)] = -(h[ix(n, n)] - p) / h[ix(n, n - 1)];
            } else {
                let (cr, ci) = cdiv(0.0, -h[ix(n - 1, n)], h[ix(n - 1, n - 1)] - p, q);
                h[ix(n - 1, n - 1)] = cr;
                h[ix(n - 1, n)] = ci;
            }
            h[ix(n, n - 1)] = 0.0;
            h[ix(n, n)] = 1.0;
            for i in (0..n - 1).rev() {
                let mut ra = 0.0;
                let mut sa = 0.0;
                for j in l..=n {
                    ra += h[ix(i, j)] * h[ix(j, n - 1)];
                    sa += h[ix(i, j)] * h[ix(j, n)];
                }
                w = h[ix(i, i)] - p;
                if e[i as usize] < 0.0 {
                    z = w;
                    r = ra;
                    s = sa;
                } else {
                    l = i;
                    if e[i as usize] == 0.0 {
                        let (cr, ci) = cdiv(-ra, -sa, w, q);
                        h[ix(i, n - 1)] = cr;
                        h[ix(i, n)] = ci;
                    } else {
                        x = h[ix(i, i + 1)];
                        y = h[ix(i + 1, i)];
                        let di = d[i as usize] - p;
                        let mut vr = di * di + e[i as usize] * e[i as usize] - q * q;
                        let vi = di * 2.0 * q;
                        if vr == 0.0 && vi == 0.0 {
                            vr = EPS * norm * (w.abs() + q.abs() + x.abs() + y.abs() + z.abs());
                        }
                        let (cr, ci) = cdiv(x * r - z * ra + q * sa, x * s - z * sa - q * ra, vr, vi);
                        h[ix(i, n - 1)] = cr;
                        h[ix(i, n)] = ci;
                        if x.abs() > z.abs() + q.abs() {
                            h[ix(i + 1, n - 1)] = (-ra - w * h[ix(i, n - 1)] + q * h[ix(i, n)]) / x;
                            h[ix(i + 1, n)] = (-sa - w * h[ix(i, n)] - q * h[ix(i, n - 1)]) / x;
                        } else {
                            let (cr, ci) = cdiv(-r - y * h[ix(i, n - 1)], -s - y * h[ix(i, n)], z, q);
                            h[ix(i + 1, n - 1)] = cr;
                            h[ix(i + 1, n)] = ci;
                        }
                    }
                    t = h[ix(i, n - 1)].abs().max(h[ix(i, n)].abs());
                    if (EPS * t) * t > 1.0 {
                        for j in i..=n {
                            h[ix(j, n - 1)] /= t;
                            h[ix(j, n)] /= t;
                        }
                    }
                }
            }
        }
    }

    // V <- V T, T upper triangular in h
    let nu = nn_usize;
    let mut row = vec![0.0f64; nu];
    for i in 0..nu {
        row.iter_mut().for_each(|x| *x = 0.0);
        for k in 0..nu {
            let vik = v[i * nu + k];
            if vik == 0.0 {
                continue;
            }
            let trow = &h[k * nu..(k + 1) * nu];
            for j in k..nu {
                row[j] += vik * trow[j];
            }
        }
        v[i * nu..(i + 1) * nu].copy_from_slice(&row);
    }
    Ok(SchurOutput { re: d, im: e })
}
