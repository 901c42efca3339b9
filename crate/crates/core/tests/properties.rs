mod common;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use proptest::prelude::*;
use qutrit_chain::cli::parse_time;
use qutrit_chain::dynamics::EvolutionCache;
use qutrit_chain::hamiltonians::{
    chain_hamiltonian, christandl_couplings, project_to_sigma, sigma_block,
};
use qutrit_chain::linalg::{eig_hermitian, kron, SymTridiagonal};
use qutrit_chain::parity::{parity_resolved_eigenbasis, parity_spectrum, Parity, ParityKind};
use qutrit_chain::spin_ops::{embed_pair, pair_kron, site_exchange, site_matrix, Representation};
use qutrit_chain::tomography::{
    extract_spectrum, jacobi_reconstruct, spectral_data, synthesize_record, Channel, RecordMode,
    SpectralData,
};
use qutrit_chain::{ChainSpec, ProductState, SiteLabel, TimeSign, C64};
use rand::Rng;

use common::*;

fn band_strategy(max_n: usize) -> impl Strategy<Value = SymTridiagonal> {
    (1..=max_n).prop_flat_map(|n| {
        (
            prop::collection::vec(-2.0..2.0f64, n),
            prop::collection::vec(0.2..2.0f64, n - 1),
        )
            .prop_map(|(d, o)| SymTridiagonal::new(d, o))
    })
}

fn signed(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo..hi, any::<bool>()).prop_map(|(m, s)| if s { m } else { -m })
}

fn engineered_strategy(min_n: usize, max_n: usize) -> impl Strategy<Value = ChainSpec> {
    (min_n..=max_n).prop_flat_map(|n| {
        (
            prop::collection::vec(signed(0.5, 1.5), n - 1),
            prop::collection::vec(signed(0.5, 1.5), n - 1),
            prop::collection::vec(-1.0..1.0f64, n),
            prop::collection::vec(-2.0..2.0f64, n),
        )
            .prop_map(|(a, b, bl, cq)| ChainSpec::engineered(a, b, bl, cq).unwrap())
    })
}

fn max_elementwise(x: &SymTridiagonal, y: &SymTridiagonal) -> f64 {
    x.diagonal
        .iter()
        .zip(&y.diagonal)
        .chain(x.off_diagonal.iter().zip(&y.off_diagonal))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jacobi_round_trip(band in band_strategy(8)) {
        let rebuilt = jacobi_reconstruct(&spectral_data(&band)).unwrap();
        prop_assert!(max_elementwise(&band, &rebuilt) <= 1e-8);
    }

    #[test]
    fn spectral_data_is_a_probability_distribution(band in band_strategy(8)) {
        let sd = spectral_data(&band);
        prop_assert!(sd.validate().is_ok());
        prop_assert!(sd.weights.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn exact_records_reproduce_the_band(spec in engineered_strategy(2, 6), down in any::<bool>(), negative in any::<bool>()) {
        let spec = spec.with_time_sign(if negative { TimeSign::Negative } else { TimeSign::Positive });
        let channel = if down { Channel::Down } else { Channel::Up };
        let times: Vec<f64> = (0..120).map(|k| 0.4 * k as f64).collect();
        let record = synthesize_record(&spec, channel, RecordMode::Amplitude, &times, None, 0).unwrap();
        let truth = spectral_data(&sigma_block(&spec).map(|b| if down { b.down_tridiagonal() } else { b.up_tridiagonal() }).unwrap());
        let got: SpectralData = extract_spectrum(&record, spec.n, None).unwrap().spectral;
        for (e, t) in got.eigenvalues.iter().zip(&truth.eigenvalues) {
            prop_assert!((e - t).abs() <= 1e-8, "eigenvalue {e} vs {t}");
        }
        for (w, t) in got.weights.iter().zip(&truth.weights) {
            prop_assert!((w - t).abs() <= 1e-8, "weight {w} vs {t}");
            prop_assert!(*w >= -1e-9);
        }
        prop_assert!((got.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn sigma_subspace_is_invariant(spec in engineered_strategy(2, 4)) {
        let op = chain_hamiltonian(&spec, Representation::Dense).unwrap();
        let projected = project_to_sigma(&op).unwrap();
        prop_assert!(projected.leakage <= 1e-12);
        let direct = sigma_block(&spec).unwrap();
        prop_assert!(max_abs_diff(&projected.matrix, &direct.matrix) <= 1e-14);
        let dense = op.to_dense().unwrap();
        prop_assert!(dense.column(ProductState::vacuum(spec.n).index()).norm() <= 1e-13);
        prop_assert!(max_abs_diff(&dense, &dense.adjoint()) <= 1e-14);
    }

    #[test]
    fn propagator_is_unitary_and_obeys_the_group_law(seed in any::<u64>(), dim in 1usize..10, t1 in -6.0..6.0f64, t2 in -6.0..6.0f64) {
        let mut rng = rng(seed);
        let h = random_hermitian(&mut rng, dim);
        let cache = EvolutionCache::new(&h, TimeSign::Positive).unwrap();
        let u = cache.unitary(t1);
        prop_assert!(max_modulus(&(u.adjoint() * &u - DMatrix::<C64>::identity(dim, dim))) <= 1e-11);
        let v = random_state(&mut rng, dim);
        prop_assert!(((&u * &v).norm() - 1.0).abs() <= 1e-12);
        let stepwise = cache.unitary(t1) * (cache.unitary(t2) * &v);
        let direct = cache.unitary(t1 + t2) * &v;
        prop_assert!(max_modulus(&(stepwise - direct)) <= 1e-10);
        prop_assert!(max_abs_diff(&u, &propagator_oracle(&h, t1, 1.0)) <= 1e-10);
    }

    #[test]
    fn eigensystem_residuals(seed in any::<u64>(), dim in 1usize..16) {
        let mut rng = rng(seed);
        let h = random_hermitian(&mut rng, dim);
        let es = eig_hermitian(&h).unwrap();
        prop_assert!(es.residual(&h) <= 1e-11 * h.norm().max(1.0));
        prop_assert!(es.orthonormality_defect() <= 1e-12);
        prop_assert!(es.eigenvalues.as_slice().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn kron_trace_factorises(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let a = random_hermitian(&mut rng, 3);
        let b = DMatrix::from_fn(3, 3, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let k = kron(&a, &b).unwrap();
        prop_assert!((k.trace() - a.trace() * b.trace()).norm() <= 1e-13);
    }

    #[test]
    fn exchange_symmetric_operators_split_cleanly(x in 0usize..12, y in 0usize..12, cx in -1.0..1.0f64, cy in -1.0..1.0f64) {
        let hermitian: Vec<SiteLabel> = SiteLabel::ALL.into_iter().filter(|l| l.is_hermitian()).collect();
        let (p, q) = (site_matrix(hermitian[x % hermitian.len()]), site_matrix(hermitian[y % hermitian.len()]));
        let pair = pair_kron(&p, &q) + pair_kron(&q, &p);
        let extra = pair_kron(&p, &p);
        let op = embed_pair(&(pair * C64::new(cx, 0.0) + extra * C64::new(cy, 0.0)), 1, 2, 2).unwrap();
        let split = parity_spectrum(&op, ParityKind::TwoSiteExchange).unwrap();
        let dense = op.to_dense().unwrap();
        let mut full: Vec<f64> = eig_hermitian(&dense).unwrap().eigenvalues.iter().copied().collect();
        full.sort_by(|a, b| b.total_cmp(a));
        for (u, f) in split.union().iter().zip(&full) {
            prop_assert!((u - f).abs() <= 1e-10);
        }
        let m = site_exchange(1, 2, 2).unwrap();
        for pair in parity_resolved_eigenbasis(&dense, &m).unwrap() {
            let sign = if pair.parity == Parity::Even { 1.0 } else { -1.0 };
            let mv = m.apply(&pair.vector);
            prop_assert!(max_modulus(&(mv - &pair.vector * C64::new(sign, 0.0))) <= 1e-10);
        }
    }

    #[test]
    fn pi_multiples_parse_exactly(k in -64i32..64, d in 1u32..12) {
        prop_assert_eq!(parse_time(&format!("{k}pi")).unwrap(), k as f64 * PI);
        prop_assert_eq!(parse_time(&format!("{k}pi/{d}")).unwrap(), k as f64 * PI / d as f64);
    }
}

#[test]
fn christandl_blocks_are_mirror_symmetric_and_equispaced() {
    for n in 2..=12 {
        let a = christandl_couplings(n);
        let spec = ChainSpec::engineered(a.clone(), a, vec![0.0; n], vec![0.0; n]).unwrap();
        let block = sigma_block(&spec).unwrap();
        assert!(block.mirror_commutator() <= 1e-13, "n={n}");
        let (values, _) = block.up_tridiagonal().eigen();
        for w in values.windows(2) {
            assert!(
                (w[1] - w[0] - 1.0).abs() <= 1e-10,
                "n={n}: gap {}",
                w[1] - w[0]
            );
        }
    }
}
