use mpstomo_core::certify::{fidelity_bound, gap_lower_bound, parent_hamiltonian};
use mpstomo_core::disentangle::{circuit_to_mps, error_bound, run_disentangle};
use mpstomo_core::linalg::{eigvalsh, trace_norm};
use mpstomo_core::pauli::{pauli_traces, reassemble, window_expectations};
use mpstomo_core::states::{spectral_gap, to_dense};
use mpstomo_core::tomography::{add_noise, epsilon_against_oracle, simulate_reductions};
use mpstomo_core::{Mps, C64};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_hermitian(dim: usize, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
    let a = DMatrix::from_fn(dim, dim, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    (&a + a.adjoint()).scale(0.5)
}

fn unit(v: DVector<C64>) -> DVector<C64> {
    let n = v.norm();
    v.unscale(n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn canonical_form_keeps_the_state(seed in any::<u64>(), n in 2usize..7, bond in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = Mps::random(&vec![2; n], bond, &mut rng).unwrap();
        let c = psi.canonicalize_left().unwrap();
        prop_assert!(c.is_left_canonical(1e-10));
        let a = unit(psi.to_dense_vector().unwrap());
        let b = unit(c.to_dense_vector().unwrap());
        prop_assert!((a - b).norm() < 1e-10);
    }

    #[test]
    fn pauli_coefficients_reassemble(seed in any::<u64>(), k in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_hermitian(1 << k, &mut rng);
        let coeffs: Vec<f64> = pauli_traces(&m, k).iter().map(|z| z.re).collect();
        prop_assert!((reassemble(k, &coeffs) - &m).norm() < 1e-12);
    }

    #[test]
    fn window_expectations_match_reduced_densities(seed in any::<u64>(), n in 3usize..7, w in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = Mps::random(&vec![2; n], 3, &mut rng).unwrap().canonicalize_left().unwrap();
        let e = window_expectations(&psi, w).unwrap();
        let dense = to_dense(&psi).unwrap();
        for (i, coeffs) in e.iter().enumerate() {
            let rho = dense.reduced_density(i, w);
            prop_assert!((reassemble(w, coeffs) - rho).norm() < 1e-10);
        }
    }

    #[test]
    fn noise_radius_covers_the_true_error(seed in any::<u64>(), sigma in 0.0f64..0.05) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = Mps::random(&[2; 5], 2, &mut rng).unwrap().canonicalize_left().unwrap();
        let ds = add_noise(&simulate_reductions(&psi, 2).unwrap(), sigma, seed).unwrap();
        let true_eps = epsilon_against_oracle(&ds, &psi).unwrap();
        for (t, r) in true_eps.iter().zip(ds.epsilons()) {
            prop_assert!(*t <= r + 1e-12);
        }
    }

    #[test]
    fn disentangling_error_stays_within_bound(seed in any::<u64>(), n in 4usize..8, bond in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = Mps::random(&vec![2; n], bond, &mut rng).unwrap();
        let circuit = run_disentangle(&psi, 2).unwrap();
        let rebuilt = circuit_to_mps(&circuit).unwrap().to_dense_vector().unwrap();
        let target = unit(psi.to_dense_vector().unwrap());
        prop_assert!((rebuilt - target).norm() <= error_bound(&circuit) + 1e-10);
    }

    #[test]
    fn witness_never_overstates_fidelity(seed in any::<u64>(), t in 0.0f64..0.3, p in 0.0f64..0.2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 6;
        let est = Mps::random(&[2; 6], 2, &mut rng).unwrap().canonicalize_left().unwrap();
        let ph = parent_hamiltonian(&est, 2).unwrap();
        let gap = gap_lower_bound(&ph).unwrap();
        let dense_gap = spectral_gap(&eigvalsh(&ph.to_dense().unwrap()), 1e-9).unwrap();
        prop_assert!(gap.bound <= dense_gap + 1e-9);

        // lab state: mixture of a perturbed pure state and a random pure state
        let psi = unit(est.to_dense_vector().unwrap());
        let kick = DVector::from_fn(1 << n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let phi = unit(&psi + kick.scale(t));
        let chi = unit(DVector::from_fn(1 << n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))));
        let fid = (1.0 - p) * psi.dotc(&phi).norm_sqr() + p * psi.dotc(&chi).norm_sqr();

        let a = simulate_reductions(&Mps::from_dense(phi.as_slice(), &[2; 6]).unwrap(), 4).unwrap();
        let b = simulate_reductions(&Mps::from_dense(chi.as_slice(), &[2; 6]).unwrap(), 4).unwrap();
        let coeffs: Vec<Vec<f64>> = a
            .coefficients()
            .iter()
            .zip(b.coefficients())
            .map(|(x, y)| x.iter().zip(y).map(|(u, v)| (1.0 - p) * u + p * v).collect())
            .collect();
        let ds = mpstomo_core::TomographyDataset::new(n, 4, coeffs, vec![0.0; 3], a.metadata.clone()).unwrap();
        if let Ok(cert) = fidelity_bound(&ph, &gap, &ds, ds.epsilons()) {
            if cert.unique_ground_state {
                prop_assert!(cert.bound <= fid + 1e-9, "bound {} above fidelity {}", cert.bound, fid);
            }
        }
        prop_assert!(trace_norm(&ds.window_state(0)) <= 1.0 + 1e-9);
    }
}
