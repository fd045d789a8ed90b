// Parameter-free invariants: random small ladders, random matrices, exhaustive hop tables.
// Shared by the `properties` suite and the acceptance runner.

use nhse_core::fock::apply_single_hop;
use nhse_core::observables::{cluster_spectrum, entanglement_entropy, DEFAULT_GAP_FACTOR};
use nhse_core::*;
use proptest::prelude::*;

fn stats() -> impl Strategy<Value = Statistics> {
    prop_oneof![Just(Statistics::Boson), Just(Statistics::Fermion)]
}

fn small_ladder() -> impl Strategy<Value = ModelParams> {
    (1usize..=4, 1usize..=3, stats(), -2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64, -1.0..1.0f64, -1.0..1.0f64, 0.0..6.0f64)
        .prop_filter("fermions need room", |(l, n, s, ..)| *s == Statistics::Boson || *n <= 2 * *l)
        .prop_map(|(l, n, s, jla, jra, jlb, jrb, jp, mu, u)| {
            let mut p = ModelParams::new(l, n, s).with_jp(jp).with_mu(mu);
            p.j_left_a = jla;
            p.j_right_a = jra;
            p.j_left_b = jlb;
            p.j_right_b = jrb;
            match s {
                Statistics::Boson => p.with_u(u),
                Statistics::Fermion => p.with_u(0.0).with_unn(u),
            }
        })
}

fn random_matrix() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (1usize..=12).prop_flat_map(|n| (Just(n), proptest::collection::vec(-3.0..3.0f64, n * n)))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    fn basis_rank_is_a_bijection(l in 1usize..=4, n in 1usize..=4, s in stats()) {
        prop_assume!(s == Statistics::Boson || n <= 2 * l);
        let b = Basis::new(l, n, s).unwrap();
        for (k, st) in b.iter().enumerate() {
            prop_assert_eq!(b.index_of(st).unwrap(), k);
            prop_assert_eq!(b.unrank(k).unwrap(), st);
            prop_assert_eq!(st.particle_count(), n);
        }
        for w in b.states().windows(2) {
            prop_assert!(w[0].occupations() < w[1].occupations());
        }
    }

    fn eigen_residuals_and_trace((n, a) in random_matrix()) {
        let op = SparseOperator::from_dense_real(n, &a);
        let r = eigendecompose(&op, &EigOptions::default()).unwrap();
        let bound = 1e-9 * op.norm_inf().max(f64::MIN_POSITIVE);
        for (k, v) in r.right_eigenvectors.iter().enumerate() {
            let hv = op.matvec(v);
            let res = hv.iter().zip(v).map(|(x, y)| (x - r.eigenvalues[k] * y).norm()).fold(0.0, f64::max);
            prop_assert!(res <= bound, "residual {res} > {bound}");
        }
        let sum: Complex64 = r.eigenvalues.iter().sum();
        let tr: f64 = (0..n).map(|i| a[i * n + i]).sum();
        prop_assert!((sum.re - tr).abs() <= 1e-10 * (1.0 + op.norm_inf() * n as f64));
        prop_assert!(sum.im.abs() <= 1e-10 * (1.0 + op.norm_inf() * n as f64));
    }

    fn spectrum_is_closed_under_conjugation((n, a) in random_matrix()) {
        let e = eigenvalues(&SparseOperator::from_dense_real(n, &a), &EigOptions::default()).unwrap();
        let mut used = vec![false; e.len()];
        for z in &e {
            let k = (0..e.len())
                .filter(|&k| !used[k])
                .min_by(|&i, &j| (e[i] - z.conj()).norm().total_cmp(&(e[j] - z.conj()).norm()))
                .unwrap();
            prop_assert!((e[k] - z.conj()).norm() < 1e-9 * (1.0 + z.norm()));
            used[k] = true;
        }
    }

    fn hamiltonian_trace_is_onsite_sum(p in small_ladder()) {
        let b = Basis::new(p.cells, p.particles, p.statistics).unwrap();
        let h = build_hamiltonian(&p, &b).unwrap();
        let want: f64 = b.iter().map(|s| onsite_energy(s, &p)).sum();
        prop_assert!((h.trace().re - want).abs() < 1e-9 * (1.0 + want.abs()));
        let e = eigenvalues(&h, &EigOptions::default()).unwrap();
        let sum: Complex64 = e.iter().sum();
        prop_assert!((sum.re - want).abs() < 1e-8 * (1.0 + h.norm_inf() * b.dimension() as f64));
    }

    fn entropy_is_symmetric_under_complement(p in small_ladder(), seed in any::<u64>(), mask in any::<u16>()) {
        let b = Basis::new(p.cells, p.particles, p.statistics).unwrap();
        let mut s = seed;
        let v: Vec<Complex64> = (0..b.dimension())
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let re = ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let im = ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
                Complex64::new(re, im)
            })
            .collect();
        let sites = b.num_sites();
        let subset: Vec<usize> = (0..sites).filter(|i| mask >> i & 1 == 1).collect();
        let rest: Vec<usize> = (0..sites).filter(|i| mask >> i & 1 == 0).collect();
        prop_assume!(!subset.is_empty() && !rest.is_empty());
        let sa = entanglement_entropy(&v, &b, &subset).unwrap();
        let sb = entanglement_entropy(&v, &b, &rest).unwrap();
        prop_assert!((sa - sb).abs() < 1e-9, "{sa} vs {sb}");
        prop_assert!(sa >= -1e-12);
    }

    fn clustering_partitions_the_spectrum(
        pts in proptest::collection::vec((-5.0..5.0f64, -1.0..1.0f64), 1..60),
        min_gap in 0.0..1.0f64,
    ) {
        let mut e: Vec<Complex64> = pts.iter().map(|&(r, i)| Complex64::new(r, i)).collect();
        e.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        let clusters = cluster_spectrum(&e, DEFAULT_GAP_FACTOR, min_gap);
        let mut seen = vec![0usize; e.len()];
        for c in &clusters {
            prop_assert!(!c.is_empty());
            for &m in &c.members {
                seen[m] += 1;
            }
            let mi = c.members.iter().map(|&m| e[m].im).fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(mi, c.max_im);
        }
        prop_assert!(seen.iter().all(|&k| k == 1));
        for w in clusters.windows(2) {
            let hi = w[0].members.iter().map(|&m| e[m].re).fold(f64::NEG_INFINITY, f64::max);
            let lo = w[1].members.iter().map(|&m| e[m].re).fold(f64::INFINITY, f64::min);
            prop_assert!(hi < lo);
        }
    }
}

fn fermion_hop_signs_exhaustive_on_four_sites() {
    // two cells = four sites, every occupation pattern and every ordered pair
    for bits in 0u8..16 {
        let occ: Vec<u8> = (0..4).map(|i| bits >> i & 1).collect();
        let state = FockState::new(occ.clone());
        for from in 0..4 {
            for to in 0..4 {
                if from == to {
                    continue;
                }
                let got = apply_single_hop(&state, site(from), site(to), Statistics::Fermion);
                if occ[from] == 0 || occ[to] == 1 {
                    assert!(got.is_none(), "{bits:04b} {from}->{to}");
                    continue;
                }
                // Jordan-Wigner: annihilate at `from`, then create at `to`
                let mut work = occ.clone();
                let before = |w: &[u8], j: usize| w[..j].iter().map(|&x| x as u32).sum::<u32>();
                let mut sign = if before(&work, from) % 2 == 0 { 1.0 } else { -1.0 };
                work[from] = 0;
                sign *= if before(&work, to) % 2 == 0 { 1.0 } else { -1.0 };
                work[to] = 1;
                let (next, amp) = got.expect("allowed hop");
                assert_eq!(next.occupations(), &work[..]);
                assert_eq!(amp, sign, "{bits:04b} {from}->{to}");
            }
        }
    }
}

fn boson_hop_amplitudes_on_four_sites() {
    let b = Basis::new(2, 3, Statistics::Boson).unwrap();
    for st in b.iter() {
        for from in 0..4 {
            for to in 0..4 {
                if from == to {
                    continue;
                }
                let occ = st.occupations();
                match apply_single_hop(st, site(from), site(to), Statistics::Boson) {
                    None => assert_eq!(occ[from], 0),
                    Some((next, amp)) => {
                        let want = ((occ[from] as f64) * (occ[to] as f64 + 1.0)).sqrt();
                        assert!((amp - want).abs() < 1e-15);
                        assert_eq!(next.occupations()[to], occ[to] + 1);
                    }
                }
            }
        }
    }
}

fn site(i: usize) -> SiteIndex {
    // two cells: sites 0,1 are leg A, 2,3 leg B
    let leg = if i < 2 { Leg::A } else { Leg::B };
    combined_site(i % 2 + 1, leg, 2).unwrap()
}

pub const SUITE: &[(&str, fn())] = &[
    ("basis_rank_is_a_bijection", basis_rank_is_a_bijection),
    ("eigen_residuals_and_trace", eigen_residuals_and_trace),
    ("spectrum_is_closed_under_conjugation", spectrum_is_closed_under_conjugation),
    ("hamiltonian_trace_is_onsite_sum", hamiltonian_trace_is_onsite_sum),
    ("entropy_is_symmetric_under_complement", entropy_is_symmetric_under_complement),
    ("clustering_partitions_the_spectrum", clustering_partitions_the_spectrum),
    ("fermion_hop_signs_exhaustive_on_four_sites", fermion_hop_signs_exhaustive_on_four_sites),
    ("boson_hop_amplitudes_on_four_sites", boson_hop_amplitudes_on_four_sites),
];

#[allow(dead_code)]
pub fn run(name: &str) {
    let (_, f) = SUITE.iter().find(|(n, _)| *n == name).expect("unknown property");
    f()
}
