use fracball_core::morse::{morse_index_auto, TheoremCheck};
use fracball_core::radial::radial_eigenvalues;
use fracball_core::semilinear::{pohozaev_residual, solve_radial_sign_changing, SolveOptions};
use fracball_core::spectrum::{assemble_full_spectrum, eval_eigenfunction, verify_conjecture, Verdict};
use fracball_core::{NonlinearitySpec, ProblemParams};

#[test]
fn one_node_power_solution_has_large_index() {
    let params = ProblemParams::new(1, 0.75).unwrap();
    let sol =
        solve_radial_sign_changing(&params, &NonlinearitySpec::power(1.0, 3.0), &SolveOptions::new(1, 16)).unwrap();
    assert!(sol.is_converged());
    assert_eq!(sol.nodal_count, 1);
    assert!(sol.psi0_at_1 != 0.0);
    let ph = pohozaev_residual(&sol, 64).unwrap();
    assert!(ph.lhs > 0.0 && ph.rhs > 0.0);
    let morse = morse_index_auto(&params, &sol, 16).unwrap();
    assert_eq!(morse.theorem_check, TheoremCheck::Passes);
    assert!(morse.total_index >= 2);
}

#[test]
fn linear_family_index_matches_spectrum() {
    let (n, s, k) = (2, 0.5, 12);
    let params = ProblemParams::new(n, s).unwrap();
    let lambda = radial_eigenvalues(n, s, k).unwrap().eigenvalues[1];
    let sol =
        solve_radial_sign_changing(&params, &NonlinearitySpec::linear(lambda), &SolveOptions::new(1, k)).unwrap();
    let morse = morse_index_auto(&params, &sol, k).unwrap();
    let spectrum = assemble_full_spectrum(&params, morse.ell_max, 3, k).unwrap();
    assert_eq!(morse.total_index, spectrum.count_below(lambda).unwrap());
    assert_eq!(morse.marginal_total, 1);
}

#[test]
fn second_eigenfunctions_are_odd() {
    let params = ProblemParams::new(3, 0.3).unwrap();
    let report = verify_conjecture(&params, 16, 2).unwrap();
    assert_eq!(report.verdict, Verdict::Yes);
    assert!(report.antisymmetric);
    let spectrum = assemble_full_spectrum(&params, 2, 1, 16).unwrap();
    let mode = spectrum.mode(1, 0).unwrap();
    let x = [0.2, -0.4, 0.1];
    let y = [-0.2, 0.4, -0.1];
    for j in 0..3 {
        assert_eq!(eval_eigenfunction(&mode, j, &x).unwrap(), -eval_eigenfunction(&mode, j, &y).unwrap());
    }
    assert_eq!(eval_eigenfunction(&mode, 0, &[0.0; 3]).unwrap(), 0.0);
}
