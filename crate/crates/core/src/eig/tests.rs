use super::*;

fn dense(n: usize, a: &[f64]) -> SparseOperator {
    SparseOperator::from_dense_real(n, a)
}

fn close_sets(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
    let mut used = vec![false; b.len()];
    a.len() == b.len()
        && a.iter().all(|x| {
            let hit = (0..b.len()).filter(|&k| !used[k]).min_by(|&i, &j| {
                (b[i] - x).norm().total_cmp(&(b[j] - x).norm())
            });
            match hit {
                Some(k) if (b[k] - x).norm() < tol => {
                    used[k] = true;
                    true
                }
                _ => false,
            }
        })
}

// Characteristic polynomial by Faddeev-LeVerrier, roots by Durand-Kerner.
fn charpoly_roots(n: usize, a: &[f64]) -> Vec<Complex64> {
    let mul = |x: &[f64], y: &[f64]| {
        let mut z = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                for j in 0..n {
                    z[i * n + j] += x[i * n + k] * y[k * n + j];
                }
            }
        }
        z
    };
    // p(t) = t^n + c[1] t^{n-1} + ... + c[n]
    let mut c = vec![1.0f64; n + 1];
    let mut m = vec![0.0f64; n * n];
    for k in 1..=n {
        let mut next = mul(a, &m);
        for i in 0..n {
            next[i * n + i] += c[k - 1];
        }
        m = next;
        let am = mul(a, &m);
        let tr: f64 = (0..n).map(|i| am[i * n + i]).sum();
        c[k] = -tr / k as f64;
    }
    let eval = |z: Complex64| c.iter().fold(Complex64::new(0.0, 0.0), |acc, &ck| acc * z + ck);
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..n).map(|k| seed.powu(k as u32)).collect();
    for _ in 0..2000 {
        for i in 0..n {
            let mut den = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    den *= roots[i] - roots[j];
                }
            }
            let step = eval(roots[i]) / den;
            roots[i] -= step;
        }
    }
    roots
}

fn pseudo_random(seed: u64, count: usize) -> Vec<f64> {
    let mut s = seed;
    (0..count)
        .map(|_| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
        .collect()
}

#[test]
fn two_by_two_example() {
    let op = dense(2, &[0.0, 1.0, 0.5, 0.0]);
    let r = eigendecompose(&op, &EigOptions::default()).unwrap();
    let s = math::sqrt(0.5);
    assert!((r.eigenvalues[0].re + s).abs() < 1e-14);
    assert!((r.eigenvalues[1].re - s).abs() < 1e-14);
    assert!(r.eigenvalues.iter().all(|z| z.im == 0.0));
}

#[test]
fn hatano_nelson_three_sites() {
    let op = dense(3, &[0.0, -1.0, 0.0, -0.5, 0.0, -1.0, 0.0, -0.5, 0.0]);
    let r = eigendecompose(&op, &EigOptions::default()).unwrap();
    for (z, want) in r.eigenvalues.iter().zip([-1.0, 0.0, 1.0]) {
        assert!((z.re - want).abs() < 1e-13 && z.im.abs() < 1e-13, "{z}");
    }
}

#[test]
fn identity_is_degenerate() {
    let mut a = vec![0.0; 25];
    for i in 0..5 {
        a[i * 5 + i] = 1.0;
    }
    let r = eigendecompose(&dense(5, &a), &EigOptions::default()).unwrap();
    assert!(r.eigenvalues.iter().all(|z| *z == Complex64::new(1.0, 0.0)));
    assert!(r.residuals.iter().all(|&x| x == 0.0));
}

#[test]
fn complex_pair_vectors() {
    // rotation plus a real eigenvalue
    let a = [0.0, -2.0, 0.0, 2.0, 0.0, 0.0, 1.0, 1.0, 3.0];
    let op = dense(3, &a);
    let r = eigendecompose(&op, &EigOptions::default()).unwrap();
    assert!(close_sets(&r.eigenvalues, &[Complex64::new(0.0, 2.0), Complex64::new(0.0, -2.0), Complex64::new(3.0, 0.0)], 1e-12));
    for (k, v) in r.right_eigenvectors.iter().enumerate() {
        let nrm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        assert!((nrm - 1.0).abs() < 1e-12);
        assert!(r.residuals[k] < 1e-12);
    }
    assert!((r.max_imag() - 2.0).abs() < 1e-14);
}

#[test]
fn charpoly_oracle_small_dimensions() {
    for n in 1..=4usize {
        for seed in 0..20u64 {
            let a = pseudo_random(seed * 31 + n as u64, n * n);
            let op = dense(n, &a);
            let got = eigendecompose(&op, &EigOptions::default()).unwrap();
            let want = charpoly_roots(n, &a);
            assert!(close_sets(&got.eigenvalues, &want, 1e-7), "n={n} seed={seed}: {:?} vs {want:?}", got.eigenvalues);
        }
    }
}

#[test]
fn eigenvalues_only_matches_full() {
    let n = 30;
    let a = pseudo_random(7, n * n);
    let op = dense(n, &a);
    let full = eigendecompose(&op, &EigOptions::default()).unwrap();
    let vals = eigenvalues(&op, &EigOptions::default()).unwrap();
    assert!(close_sets(&full.eigenvalues, &vals, 1e-9));
    let trace: f64 = (0..n).map(|i| a[i * n + i]).sum();
    let sum: Complex64 = vals.iter().sum();
    assert!((sum.re - trace).abs() < 1e-10 && sum.im.abs() < 1e-10);
}

#[test]
fn on_demand_vectors_are_verified() {
    let n = 25;
    let op = dense(n, &pseudo_random(3, n * n));
    let sys = Eigensystem::new(&op, &EigOptions::default()).unwrap();
    for k in 0..n {
        let (v, r) = sys.eigenvector(k).unwrap();
        assert!(r <= 1e-9 * sys.matrix_norm());
        let big = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let lead = v.iter().find(|z| (z.norm() - big).abs() < 1e-15).unwrap();
        assert!(lead.im == 0.0 && lead.re > 0.0);
    }
}

#[test]
fn rejects_complex_and_oversized() {
    let op = SparseOperator::from_triplets(2, [(0, 1, Complex64::new(0.0, 1.0))]);
    assert_eq!(eigenvalues(&op, &EigOptions::default()), Err(EigError::ComplexEntries));
    let op = dense(3, &[0.0; 9]);
    let opts = EigOptions { capacity: 2, ..EigOptions::default() };
    assert!(matches!(eigendecompose(&op, &opts), Err(EigError::Capacity { dimension: 3, capacity: 2 })));
    let opts = EigOptions { tol: 0.0, ..EigOptions::default() };
    assert_eq!(eigenvalues(&op, &opts), Err(EigError::InvalidTolerance));
}

#[test]
fn reality_helpers() {
    let s = [Complex64::new(1.0, 0.3), Complex64::new(1.0, -0.3), Complex64::new(2.0, 0.0)];
    assert_eq!(max_imag(&s), 0.3);
    assert!(!is_spectrum_real(&s, 1e-9));
    assert!(is_spectrum_real(&[Complex64::new(1.0, 1e-12)], 1e-9));
    assert_eq!(default_eps_im(10.0), 1e-9);
    assert_eq!(default_eps_im(1e4), 1e-8);
}
