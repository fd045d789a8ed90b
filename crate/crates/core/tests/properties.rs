#[path = "support/props.rs"]
mod props;

macro_rules! properties {
    ($($name:ident),* $(,)?) => {
        $(
            #[test]
            fn $name() {
                props::run(stringify!($name))
            }
        )*
    };
}

properties!(
    basis_rank_is_a_bijection,
    eigen_residuals_and_trace,
    spectrum_is_closed_under_conjugation,
    hamiltonian_trace_is_onsite_sum,
    entropy_is_symmetric_under_complement,
    clustering_partitions_the_spectrum,
    fermion_hop_signs_exhaustive_on_four_sites,
    boson_hop_amplitudes_on_four_sites,
);

#[test]
fn suite_is_fully_wired() {
    assert_eq!(props::SUITE.len(), 8);
}
