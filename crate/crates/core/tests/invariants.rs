mod common;

use std::f64::consts::PI;

use proptest::prelude::*;

use pst_core::analogue::build_ladder;
use pst_core::chain::eigenstate_parity;
use pst_core::dynamics::{propagate, transfer_fidelity};
use pst_core::inverse::{reconstruct, reconstruct_full};
use pst_core::spectra::{check_pst_condition, pinched_spectrum, snap_to_pst, spectral_symmetry_check};
use pst_core::sweep::deviation_sweep;
use pst_core::{
    build_hamiltonian, eigendecompose, ChainSpec, Execution, MirrorOperator, PinchSpec, SignConvention, Spectrum,
};

fn chain_strategy(max_n: usize) -> impl Strategy<Value = ChainSpec> {
    (2..=max_n).prop_flat_map(|n| {
        (prop::collection::vec(-3.0f64..3.0, n), prop::collection::vec(0.1f64..2.0, n - 1))
            .prop_map(|(e, j)| ChainSpec::new(e, j, SignConvention::Negative).unwrap())
    })
}

fn mirror_chain_strategy(max_half: usize) -> impl Strategy<Value = ChainSpec> {
    (2..=2 * max_half).prop_flat_map(|n| {
        (prop::collection::vec(-2.0f64..2.0, n.div_ceil(2)), prop::collection::vec(0.2f64..2.0, n / 2)).prop_map(
            move |(e, j)| {
                let onsite = (0..n).map(|i| e[i.min(n - 1 - i)]).collect();
                let couplings = (0..n - 1).map(|i| j[i.min(n - 2 - i)]).collect();
                ChainSpec::new(onsite, couplings, SignConvention::Negative).unwrap()
            },
        )
    })
}

fn odd_p() -> impl Strategy<Value = u32> {
    (0u32..8).prop_map(|k| 2 * k + 1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn uniform_chain_dispersion(n in 2usize..=32, e in -2.0f64..2.0, j in 0.1f64..3.0) {
        let chain = ChainSpec::uniform(n, e, j, SignConvention::Negative).unwrap();
        let es = eigendecompose(&build_hamiltonian(&chain)).unwrap();
        let mut want: Vec<f64> = (1..=n).map(|k| e - 2.0 * j * (k as f64 * PI / (n + 1) as f64).cos()).collect();
        want.sort_by(f64::total_cmp);
        for (a, b) in es.values().iter().zip(&want) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + j), "{a} vs {b}");
        }
    }

    #[test]
    fn sign_flip_keeps_spectrum_and_fidelity(chain in chain_strategy(12), t in 0.0f64..20.0) {
        let flipped = chain.with_sign_convention(SignConvention::Positive);
        let a = eigendecompose(&build_hamiltonian(&chain)).unwrap();
        let b = eigendecompose(&build_hamiltonian(&flipped)).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).abs() <= 1e-11);
        }
        prop_assert!((transfer_fidelity(&a, t) - transfer_fidelity(&b, t)).abs() <= 1e-10);
    }

    #[test]
    fn eigenvectors_orthonormal(chain in chain_strategy(64)) {
        let h = build_hamiltonian(&chain);
        let es = eigendecompose(&h).unwrap();
        prop_assert!(es.orthonormality_error() <= 1e-12 * chain.n() as f64);
        prop_assert!(es.max_residual(&h) <= 1e-11 * (1.0 + h.norm_inf()));
        prop_assert!(es.values().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn mirror_chains_have_alternating_parity(chain in mirror_chain_strategy(8)) {
        let es = eigendecompose(&build_hamiltonian(&chain)).unwrap();
        let parity = eigenstate_parity(&es, &MirrorOperator::new(chain.n())).unwrap();
        prop_assert!(parity.windows(2).all(|w| w[0] == -w[1]), "{parity:?}");
    }

    #[test]
    fn propagation_conserves_norm(chain in chain_strategy(16), site in 0usize..16, t in 0.0f64..50.0) {
        let es = eigendecompose(&build_hamiltonian(&chain)).unwrap();
        let c = propagate(&es, site % chain.n(), t);
        let norm: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((norm - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn pinched_chains_are_periodic(n in 3usize..=12, p in odd_p(), alpha in 0.2f64..2.0) {
        let s = pinched_spectrum(PinchSpec { n, p, alpha }).unwrap();
        let t_m = s.t_m().unwrap();
        let es = eigendecompose(&build_hamiltonian(&reconstruct(&s).unwrap())).unwrap();
        prop_assert!(transfer_fidelity(&es, t_m) >= 1.0 - 1e-9);
        prop_assert!(transfer_fidelity(&es, 3.0 * t_m) >= 1.0 - 1e-9);
        // Back at the start after two mirror times.
        let c = propagate(&es, 0, 2.0 * t_m);
        prop_assert!((c[0].norm_sqr() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn pinched_roundtrip(n in 2usize..=20, p in odd_p(), alpha in 0.1f64..3.0) {
        let s = pinched_spectrum(PinchSpec { n, p, alpha }).unwrap();
        let rec = reconstruct_full(&s, SignConvention::Negative).unwrap();
        let es = eigendecompose(&build_hamiltonian(&rec.chain)).unwrap();
        for (a, b) in s.values().iter().zip(es.values()) {
            prop_assert!((a - b).abs() <= 1e-9 * alpha.max(1.0) * n as f64, "{a} vs {b}");
        }
        prop_assert!(check_pst_condition(&s, 1e-9).valid);
    }

    #[test]
    fn snap_is_idempotent(values in prop::collection::vec(0.0f64..10.0, 3..12), p in odd_p()) {
        prop_assume!(Spectrum::new(values.clone()).is_ok());
        let s = Spectrum::new(values).unwrap();
        prop_assume!(s.gaps().iter().all(|g| *g > 1e-3));
        let once = snap_to_pst(&s, p).unwrap();
        let twice = snap_to_pst(&once, p).unwrap();
        for (a, b) in once.values().iter().zip(twice.values()) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
        prop_assert!(check_pst_condition(&once, 1e-8).valid);
    }

    #[test]
    fn reconstruction_shift_covariant(n in 2usize..=15, p in odd_p(), c in -5.0f64..5.0) {
        let s = pinched_spectrum(PinchSpec { n, p, alpha: 0.5 }).unwrap();
        let a = reconstruct(&s).unwrap();
        let b = reconstruct(&s.shifted(c)).unwrap();
        for (x, y) in a.onsite().iter().zip(b.onsite()) {
            prop_assert!((x + c - y).abs() <= 1e-9);
        }
        for (x, y) in a.couplings().iter().zip(b.couplings()) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn random_spectra_roundtrip_and_interlace(gaps in prop::collection::vec(0.3f64..2.0, 1..40)) {
        let mut values = vec![0.0];
        for g in &gaps {
            values.push(values.last().unwrap() + g);
        }
        let s = Spectrum::new(values).unwrap();
        let rec = reconstruct_full(&s, SignConvention::Negative).unwrap();
        prop_assert!(rec.table.interlacing_holds());
        let es = eigendecompose(&build_hamiltonian(&rec.chain)).unwrap();
        let worst = s.values().iter().zip(es.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(worst <= 1e-8 * s.range(), "roundtrip {worst:e}");
        let chain = &rec.chain;
        let n = chain.n();
        prop_assert!((0..n).all(|i| chain.onsite()[i] == chain.onsite()[n - 1 - i]));
    }

    #[test]
    fn flat_onsite_gives_symmetric_spectrum(
        e in -2.0f64..2.0,
        j in prop::collection::vec(0.2f64..2.0, 1..20),
    ) {
        let chain = ChainSpec::new(vec![e; j.len() + 1], j, SignConvention::Negative).unwrap();
        let es = eigendecompose(&build_hamiltonian(&chain)).unwrap();
        prop_assert!(spectral_symmetry_check(&Spectrum::new(es.values().to_vec()).unwrap(), 1e-10));
    }

    #[test]
    fn symmetric_spectrum_gives_flat_onsite(n in 2usize..=20, alpha in 0.2f64..2.0, c in -3.0f64..3.0) {
        let s = pinched_spectrum(PinchSpec { n, p: 1, alpha }).unwrap().shifted(c);
        let chain = reconstruct(&s).unwrap();
        prop_assert!(chain.onsite().iter().all(|x| (x - c).abs() <= 1e-9), "{:?}", chain.onsite());
    }

    #[test]
    fn ladder_rebuilds_hamiltonian(n in 3usize..=20, p in (0u32..5).prop_map(|k| 2 * k + 1)) {
        let chain = reconstruct(&pinched_spectrum(PinchSpec { n, p, alpha: 0.5 }).unwrap()).unwrap();
        let h = build_hamiltonian(&chain);
        let es = eigendecompose(&h).unwrap();
        let ladder = build_ladder(&es, p, 1.0).unwrap();
        prop_assert!(ladder.hamiltonian_residual(&h, &es) <= 1e-10);
        prop_assert!(ladder.commutator_residual() <= 1e-10);
        prop_assert!(ladder.top_annihilation() == 0.0 && ladder.ground_annihilation() == 0.0);
    }

    #[test]
    fn sweep_spread_is_scale_free(n in 4usize..=16, alpha in 0.1f64..4.0) {
        let base = deviation_sweep(n..=n, &[3], 0.5, Execution::Sequential).unwrap();
        let scaled = deviation_sweep(n..=n, &[3], alpha, Execution::Sequential).unwrap();
        prop_assert!((base[0].max_rel_spread_j - scaled[0].max_rel_spread_j).abs() <= 1e-9);
        prop_assert!((base[0].std_j * 2.0 * alpha - scaled[0].std_j).abs() <= 1e-9 * alpha.max(1.0));
    }
}

#[test]
fn three_level_closed_forms() {
    for p in [1u32, 3, 5, 7, 9] {
        let pf = p as f64;
        let chain = reconstruct(&Spectrum::new(vec![1.0, 2.0, 2.0 + 1.0 / pf]).unwrap()).unwrap();
        assert!((chain.onsite()[0] - 2.0).abs() < 1e-12);
        assert!((chain.onsite()[1] - (pf + 2.0 + 1.0 / pf) / (pf + 1.0)).abs() < 1e-12);
        assert!((chain.couplings()[0] - 1.0 / (2.0 * pf).sqrt()).abs() < 1e-12);
    }
}

#[test]
fn rounded_five_site_chain_is_quasi_periodic() {
    let es = eigendecompose(&build_hamiltonian(&common::qpst5())).unwrap();
    let s = Spectrum::new(es.values().to_vec()).unwrap();
    assert!(!check_pst_condition(&s, 1e-3).valid);
    let snapped = snap_to_pst(&s, 3).unwrap();
    let shift = snapped.values().iter().zip(s.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(shift < 0.01, "{shift}");
}
