// Independent constructions of the Hamiltonian and closed-form spectra.

use std::collections::HashMap;

use nhse_core::*;

fn dense(h: &SparseOperator) -> Vec<Vec<f64>> {
    let n = h.dimension();
    let mut m = vec![vec![0.0; n]; n];
    for &(r, c, v) in h.entries() {
        m[r][c] += v.re;
    }
    m
}

/// Terms `(to, from, coef)` of the single-particle part, written out from the
/// model definition rather than taken from the crate.
fn transfer_terms(p: &ModelParams) -> Vec<(usize, usize, f64)> {
    let l = p.cells;
    let mut t = Vec::new();
    for (leg, jl, jr) in [(0, p.j_left_a, p.j_right_a), (1, p.j_left_b, p.j_right_b)] {
        for x in 0..l - 1 {
            let (s, s1) = (leg * l + x, leg * l + x + 1);
            t.push((s, s1, -jl)); // a†_x a_{x+1}
            t.push((s1, s, -jr)); // a†_{x+1} a_x
        }
    }
    for x in 0..l {
        t.push((x, l + x, p.jp));
        t.push((l + x, x, p.jp));
    }
    t
}

fn onsite(p: &ModelParams, occ: &[u8]) -> f64 {
    let l = p.cells;
    let n: Vec<f64> = occ.iter().map(|&k| k as f64).collect();
    let mut e = 0.0;
    for x in 0..l {
        e += p.mu * (n[x] - n[l + x]);
    }
    match p.statistics {
        Statistics::Boson => e + 0.5 * p.u * n.iter().map(|k| k * (k - 1.0)).sum::<f64>(),
        Statistics::Fermion => {
            for leg in 0..2 {
                for x in 0..l - 1 {
                    e += p.unn * n[leg * l + x] * n[leg * l + x + 1];
                }
            }
            e
        }
    }
}

#[test]
fn two_cells_two_bosons_elementwise() {
    let p = ModelParams::new(2, 2, Statistics::Boson).with_jp(0.3).with_mu(0.7).with_u(4.0);
    let b = Basis::new(2, 2, Statistics::Boson).unwrap();
    assert_eq!(b.dimension(), 10);
    let h = dense(&build_hamiltonian(&p, &b).unwrap());

    // brute force: act with every term on every state, look targets up by value
    let index: HashMap<Vec<u8>, usize> = b.iter().enumerate().map(|(k, s)| (s.occupations().to_vec(), k)).collect();
    let mut want = vec![vec![0.0; 10]; 10];
    for (col, s) in b.iter().enumerate() {
        let occ = s.occupations().to_vec();
        want[col][col] += onsite(&p, &occ);
        for &(to, from, coef) in &transfer_terms(&p) {
            if occ[from] == 0 {
                continue;
            }
            let mut next = occ.clone();
            let amp = (next[from] as f64).sqrt();
            next[from] -= 1;
            let amp = amp * (next[to] as f64 + 1.0).sqrt();
            next[to] += 1;
            want[index[&next]][col] += coef * amp;
        }
    }
    for r in 0..10 {
        for c in 0..10 {
            assert!((h[r][c] - want[r][c]).abs() < 1e-14, "({r},{c}): {} vs {}", h[r][c], want[r][c]);
        }
    }

    // a few entries by hand: state 0 is the B-leg doublon on cell 2
    assert_eq!(b.unrank(0).unwrap().occupations(), &[0, 0, 0, 2]);
    assert_eq!(b.unrank(1).unwrap().occupations(), &[0, 0, 1, 1]);
    assert!((h[0][0] - (4.0 - 2.0 * 0.7)).abs() < 1e-15);
    assert!((h[1][0] + 0.5 * 2f64.sqrt()).abs() < 1e-15);
    assert!((h[0][1] + 1.0 * 2f64.sqrt()).abs() < 1e-15);
}

#[test]
fn fermions_match_jordan_wigner_operators() {
    for (l, n) in [(2usize, 1usize), (2, 2), (3, 2), (3, 3)] {
        let p = ModelParams::new(l, n, Statistics::Fermion).with_jp(0.37).with_mu(0.4).with_unn(2.5);
        let b = Basis::new(l, n, Statistics::Fermion).unwrap();
        let h = dense(&build_hamiltonian(&p, &b).unwrap());
        let sites = 2 * l;
        let full = 1usize << sites;

        // c_j on the full Fock space; site j is bit j, ordering c†_0 c†_1 ... |0>
        let annihilate = |j: usize, state: usize| -> Option<(usize, f64)> {
            if state >> j & 1 == 0 {
                return None;
            }
            let parity = (state & ((1 << j) - 1)).count_ones();
            Some((state ^ (1 << j), if parity % 2 == 0 { 1.0 } else { -1.0 }))
        };
        let create = |j: usize, state: usize| -> Option<(usize, f64)> {
            if state >> j & 1 == 1 {
                return None;
            }
            let parity = (state & ((1 << j) - 1)).count_ones();
            Some((state | (1 << j), if parity % 2 == 0 { 1.0 } else { -1.0 }))
        };
        let to_bits = |occ: &[u8]| occ.iter().enumerate().fold(0usize, |acc, (j, &k)| acc | (k as usize) << j);
        let index: HashMap<usize, usize> = b.iter().enumerate().map(|(k, s)| (to_bits(s.occupations()), k)).collect();
        assert_eq!(index.len(), b.dimension());

        let mut want = vec![vec![0.0; b.dimension()]; b.dimension()];
        for (col, s) in b.iter().enumerate() {
            let bits = to_bits(s.occupations());
            want[col][col] += onsite(&p, s.occupations());
            for &(to, from, coef) in &transfer_terms(&p) {
                if let Some((mid, s1)) = annihilate(from, bits) {
                    if let Some((out, s2)) = create(to, mid) {
                        want[index[&out]][col] += coef * s1 * s2;
                    }
                }
            }
        }
        assert!(full >= b.dimension());
        for r in 0..b.dimension() {
            for c in 0..b.dimension() {
                assert!((h[r][c] - want[r][c]).abs() < 1e-14, "L={l} N={n} ({r},{c})");
            }
        }
    }
}

#[test]
fn single_particle_sector_is_first_quantized_matrix() {
    for stats in [Statistics::Boson, Statistics::Fermion] {
        let mut p = ModelParams::new(4, 1, stats).with_jp(0.2).with_mu(-0.3);
        p.j_left_b = 0.7;
        let b = Basis::new(4, 1, stats).unwrap();
        let h = dense(&build_hamiltonian(&p, &b).unwrap());
        let sp = dense(&build_single_particle_matrix(&p));
        let site_of = |k: usize| b.unrank(k).unwrap().occupations().iter().position(|&x| x == 1).unwrap();
        assert_eq!(site_of(0), 7);
        for r in 0..8 {
            for c in 0..8 {
                assert_eq!(h[r][c], sp[site_of(r)][site_of(c)], "{stats:?} ({r},{c})");
            }
        }
    }
}

#[test]
fn hatano_nelson_open_chain_up_to_fifty_cells() {
    for l in [1usize, 2, 3, 7, 16, 31, 50] {
        let p = ModelParams::new(l, 1, Statistics::Boson);
        let h = build_hamiltonian(&p, &Basis::new(l, 1, Statistics::Boson).unwrap()).unwrap();
        let e = eigenvalues(&h, &EigOptions::default()).unwrap();
        let mut want = Vec::new();
        for (jl, jr) in [(p.j_left_a, p.j_right_a), (p.j_left_b, p.j_right_b)] {
            for k in 1..=l {
                want.push(-2.0 * (jl * jr).sqrt() * (k as f64 * std::f64::consts::PI / (l as f64 + 1.0)).cos());
            }
        }
        want.sort_by(f64::total_cmp);
        for (z, w) in e.iter().zip(&want) {
            assert!((z.re - w).abs() <= 1e-10 && z.im.abs() <= 1e-10, "L={l}: {z} vs {w}");
        }
    }
}

#[test]
fn chemical_potential_reflection() {
    let spectrum = |mu: f64| {
        let p = ModelParams::new(6, 2, Statistics::Boson).with_u(4.0).with_jp(0.05).with_mu(mu);
        let h = build_hamiltonian(&p, &Basis::new(6, 2, Statistics::Boson).unwrap()).unwrap();
        eigenvalues(&h, &EigOptions::default()).unwrap()
    };
    let (a, b) = (spectrum(0.7), spectrum(-0.7));
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).norm() < 1e-8, "{x} vs {y}");
    }
}

#[test]
fn transpose_reverses_nonreciprocity() {
    // swapping J_L and J_R on both legs transposes the matrix
    let p = ModelParams::new(3, 2, Statistics::Boson).with_u(3.0).with_jp(0.4).with_mu(0.2);
    let mut q = p.clone();
    std::mem::swap(&mut q.j_left_a, &mut q.j_right_a);
    std::mem::swap(&mut q.j_left_b, &mut q.j_right_b);
    let b = Basis::new(3, 2, Statistics::Boson).unwrap();
    let hp = build_hamiltonian(&p, &b).unwrap().transpose();
    let hq = build_hamiltonian(&q, &b).unwrap();
    assert_eq!(dense(&hp), dense(&hq));
}
