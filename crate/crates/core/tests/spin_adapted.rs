use v2rdm::fock::fci_ground_state;
use v2rdm::integrals::{build_reduced_hamiltonian, hubbard, pairing_hamiltonian, IntegralSet};
use v2rdm::sdp::SolverOptions;
use v2rdm::vrdm::{minimize, VrdmConfig};

fn energy(set: &IntegralSet, n: usize, spin_adapted: bool) -> f64 {
    let config = VrdmConfig {
        spin_adapted,
        solver: SolverOptions {
            feas_tol: 1e-7,
            grad_tol: 1e-6,
            max_inner: 5000,
            max_outer: 200,
            ..Default::default()
        },
        ..Default::default()
    };
    let h = build_reduced_hamiltonian(set, n).unwrap();
    minimize(&h, n, &config).unwrap().energy
}

#[test]
fn pairing_agrees_with_plain() {
    let set = pairing_hamiltonian(&[0.0, 0.4, 1.1, 1.5], 0.5).unwrap();
    let plain = energy(&set, 4, false);
    let adapted = energy(&set, 4, true);
    assert!((plain - adapted).abs() < 1e-5, "{plain} vs {adapted}");
}

// Plain 2-positivity does not force the singlet conditions that the blocked
// form builds in, so the adapted bound is the tighter one here.
#[test]
fn hubbard_adapted_is_tighter() {
    let set = hubbard(4, 1.0, 4.0, true).unwrap();
    let plain = energy(&set, 4, false);
    let adapted = energy(&set, 4, true);
    let fci = fci_ground_state(&set, 4).unwrap().0;
    assert!(adapted > plain + 1e-2, "{plain} vs {adapted}");
    assert!(adapted <= fci + 1e-6, "{adapted} vs {fci}");
    // interior-point value with <a†a S±> = <a†a Sz> = 0 added to D, Q, G
    assert!((adapted - -2.10359694).abs() < 1e-5, "{adapted}");
}

#[test]
fn adapted_dimer_is_exact() {
    let set = hubbard(2, 1.0, 4.0, false).unwrap();
    let e = energy(&set, 2, true);
    assert!((e - (4.0 - 32f64.sqrt()) / 2.0).abs() < 1e-5, "{e}");
}
