mod common;

use normsol::linalg::Matrix;
use normsol::synchronized::{
    check_nondegeneracy, example1_closed_form, example2_closed_form, solve_sigma, CouplingMatrix, SigmaOutcome,
    SpectrumPolicy, TestPath, Verdict,
};
use normsol::Error;
use proptest::prelude::*;

/// Positive symmetric couplings with off-diagonal entries above the diagonal
/// ones, a family in which synchronized states are common.
fn strong_coupling(k: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (prop::collection::vec(0.5f64..3.0, k), prop::collection::vec(3.5f64..6.0, k * (k - 1) / 2)).prop_map(
        move |(diag, off)| {
            let mut rows = vec![vec![0.0; k]; k];
            let mut it = off.into_iter();
            for i in 0..k {
                rows[i][i] = diag[i];
                for j in i + 1..k {
                    let v = it.next().unwrap();
                    rows[i][j] = v;
                    rows[j][i] = v;
                }
            }
            rows
        },
    )
}

/// Positive symmetric couplings with arbitrary relative sizes.
fn any_positive(k: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(0.1f64..5.0, k * (k + 1) / 2).prop_map(move |entries| {
        let mut rows = vec![vec![0.0; k]; k];
        let mut it = entries.into_iter();
        for i in 0..k {
            for j in i..k {
                let v = it.next().unwrap();
                rows[i][j] = v;
                rows[j][i] = v;
            }
        }
        rows
    })
}

fn couplings() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop_oneof![(1usize..=5).prop_flat_map(strong_coupling), (1usize..=4).prop_flat_map(any_positive)]
}

proptest! {
    #![proptest_config(common::config(64))]

    #[test]
    fn algebra_of_the_synchronized_state(rows in couplings()) {
        let b = CouplingMatrix::from_rows(&rows).unwrap();
        let s = match solve_sigma(&b) {
            Ok(SigmaOutcome::State(s)) => s,
            Ok(SigmaOutcome::NoSynchronizedState { offending, sigma_squared }) => {
                prop_assert!(!offending.is_empty());
                prop_assert!(offending.iter().all(|&i| sigma_squared[i] <= 0.0));
                return Ok(());
            }
            Err(Error::SingularCoupling) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let k = rows.len();
        let bt = b.matrix().mul_vec(&s.sigma_squared);
        prop_assert!(bt.iter().all(|v| (v - 1.0).abs() <= 1e-10));

        let norm = s.sigma.iter().map(|v| v * v).sum::<f64>().sqrt();
        let cs = s.c.mul_vec(&s.sigma);
        let res = cs.iter().zip(&s.sigma).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        prop_assert!(res <= 1e-10 * norm);
        prop_assert!((s.thetas[s.principal_index] - 1.0).abs() <= 1e-10);

        for (l, t) in s.lambdas.iter().zip(&s.thetas) {
            prop_assert!((l - (1.0 + 2.0 * t)).abs() <= 1e-12);
        }
        // M = I + 2C
        for i in 0..k {
            for j in 0..k {
                let id = if i == j { 1.0 } else { 0.0 };
                prop_assert!((s.m[(i, j)] - id - 2.0 * s.c[(i, j)]).abs() <= 1e-12);
            }
        }

        let prod: f64 = s.sigma_squared.iter().product();
        let lhs = s.c.determinant().abs();
        let rhs = prod * b.matrix().determinant().abs();
        prop_assert!((lhs - rhs).abs() <= 1e-8 * rhs.max(1e-300), "{lhs} vs {rhs}");

        // positive entries keep the non-principal Λ strictly inside (-1, 3)
        let others = s.non_principal_lambdas();
        prop_assert!(others.iter().all(|&l| l < 3.0 && l > -1.0));
    }
}

#[test]
fn fifty_random_positive_couplings_have_states() {
    // the property above must not pass vacuously
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let mut found = 0;
    for _ in 0..200 {
        let k = rng.gen_range(2..=4);
        let mut rows = vec![vec![0.0; k]; k];
        for i in 0..k {
            rows[i][i] = rng.gen_range(0.5..3.0);
            for j in i + 1..k {
                let v = rng.gen_range(3.5..6.0);
                rows[i][j] = v;
                rows[j][i] = v;
            }
        }
        if let Ok(SigmaOutcome::State(s)) = solve_sigma(&CouplingMatrix::from_rows(&rows).unwrap()) {
            let cs = s.c.mul_vec(&s.sigma);
            assert!(cs.iter().zip(&s.sigma).all(|(a, b)| (a - b).abs() <= 1e-10));
            found += 1;
        }
    }
    assert!(found >= 50, "{found}");
}

#[test]
fn example_with_two_components() {
    let closed = example1_closed_form(1.0, 2.0, 3.0).unwrap();
    assert!(closed.admissible);
    assert!((closed.sigma_squared[0] - 1.0 / 7.0).abs() <= 1e-10);
    assert!((closed.sigma_squared[1] - 2.0 / 7.0).abs() <= 1e-10);
    assert!((closed.lambda2 - 3.0 / 7.0).abs() <= 1e-10 && closed.lambda1 == 3.0);

    let s = common::example_one();
    assert!((s.sigma_squared[0] - 1.0 / 7.0).abs() <= 1e-10);
    assert!((s.sigma_squared[1] - 2.0 / 7.0).abs() <= 1e-10);
    assert!((s.lambdas[0] - 3.0 / 7.0).abs() <= 1e-10 && (s.lambdas[1] - 3.0).abs() <= 1e-10);
    assert_eq!(s.principal_index, 1);

    let report = check_nondegeneracy(
        &CouplingMatrix::from_rows(&[vec![1.0, 3.0], vec![3.0, 2.0]]).unwrap(),
        &SpectrumPolicy::Skip,
    )
    .unwrap();
    assert_eq!(report.verdict, Verdict::NondegenerateSufficient);
    assert_eq!(report.path, TestPath::PerronFrobenius);
}

#[test]
fn example_with_three_components() {
    let b = CouplingMatrix::uniform(&[1.0, 2.0, 3.0], 10.0).unwrap();
    let report = check_nondegeneracy(&b, &SpectrumPolicy::default()).unwrap();
    assert_eq!(report.verdict, Verdict::NondegenerateSufficient);
    assert!(report.sigma.iter().all(|&s| s > 0.0));
    let closed = example2_closed_form(&[1.0, 2.0, 3.0], 10.0).unwrap();
    for (a, b) in closed.iter().zip(&report.sigma) {
        assert!((a - b).abs() <= 1e-10);
    }
}

#[test]
fn coupling_between_the_self_interactions_is_rejected() {
    for beta in [1.0, 1.5, 1.99, 2.0] {
        let closed = example1_closed_form(1.0, 2.0, beta);
        if let Ok(c) = &closed {
            assert!(!c.admissible && c.sigma.is_none(), "beta={beta}");
        }
        let b = CouplingMatrix::from_rows(&[vec![1.0, beta], vec![beta, 2.0]]).unwrap();
        let report = check_nondegeneracy(&b, &SpectrumPolicy::Skip).unwrap();
        assert_eq!(report.verdict, Verdict::NoSynchronizedState, "beta={beta}");
    }
    assert!(matches!(example1_closed_form(1.0, 4.0, 2.0), Err(Error::DegenerateDenominator)));
}

#[test]
fn repulsive_coupling_goes_through_the_spectrum() {
    let b = CouplingMatrix::from_rows(&[vec![1.0, -0.2], vec![-0.2, 2.0]]).unwrap();
    let report = check_nondegeneracy(&b, &SpectrumPolicy::default()).unwrap();
    assert_eq!(report.path, TestPath::Spectral);
    assert_eq!(report.verdict, Verdict::NondegenerateSpectral);
    assert!(report.margins.iter().all(|&m| m > 1e-6));
    assert!(matches!(check_nondegeneracy(&b, &SpectrumPolicy::Skip), Err(Error::SpectrumUnavailable)));
}

#[test]
fn decoupled_components_are_a_risk() {
    let b = CouplingMatrix::new(Matrix::identity(2)).unwrap();
    let report = check_nondegeneracy(&b, &SpectrumPolicy::default()).unwrap();
    assert_eq!(report.verdict, Verdict::DegenerateRisk);
    assert!(!report.collisions.is_empty());
}

#[test]
fn invalid_couplings() {
    assert!(CouplingMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 1.0]]).is_err());
    assert!(CouplingMatrix::from_rows(&[vec![-1.0]]).is_err());
    assert!(matches!(
        solve_sigma(&CouplingMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap()),
        Err(Error::SingularCoupling)
    ));
}
