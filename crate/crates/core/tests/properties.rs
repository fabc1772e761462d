use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use qga::analysis::{
    bloch_decompose, ensemble_stats_with, fit_exponential, prepared_state, quantile_bins, Padding,
    SampleStats,
};
use qga::ga::{crossover, mutate, run, selection_probabilities, GaConfig};
use qga::genome::{decode, random_genome, Chromosome, CodecConfig, Genome};
use qga::linalg::{
    fidelity, hermitian_eig, su2_closed_form, unitary_from_params, Complex, ComplexMatrix,
    ParameterVector, StateVector,
};
use qga::tasks::deutsch_task;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn params(dim: usize) -> impl Strategy<Value = ParameterVector> {
    prop::collection::vec(-PI..PI, dim * dim - 1).prop_map(ParameterVector::new)
}

fn state2() -> impl Strategy<Value = StateVector> {
    prop::array::uniform4(-1.0f64..1.0)
        .prop_filter("nonzero", |a| a.iter().map(|x| x * x).sum::<f64>() > 1e-3)
        .prop_map(|a| {
            StateVector::new(vec![Complex::new(a[0], a[1]), Complex::new(a[2], a[3])])
                .unwrap()
                .normalized()
                .unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn decode_is_antisymmetric_under_complement(depth in 1u32..=30, idx in any::<u64>()) {
        let cfg = CodecConfig::new(depth, PI, 2).unwrap();
        let c = Chromosome::from_index(idx % (1u64 << depth), depth);
        assert_abs_diff_eq!(decode(&c, &cfg), -decode(&c.complement(), &cfg), epsilon = 1e-15);
    }

    #[test]
    fn decode_is_monotone_in_index(depth in 1u32..=30, a in any::<u64>(), b in any::<u64>()) {
        let cfg = CodecConfig::new(depth, 2.0, 2).unwrap();
        let (a, b) = (a % (1u64 << depth), b % (1u64 << depth));
        let (da, db) = (decode(&Chromosome::from_index(a, depth), &cfg), decode(&Chromosome::from_index(b, depth), &cfg));
        prop_assert_eq!(a.cmp(&b), da.partial_cmp(&db).unwrap());
        prop_assert!(da.abs() < cfg.half_range);
    }

    #[test]
    fn encode_nearest_is_within_half_spacing(depth in 2u32..=20, x in -3.0f64..3.0) {
        let cfg = CodecConfig::new(depth, PI, 2).unwrap();
        let c = cfg.encode_nearest(x);
        prop_assert!((cfg.decode(&c) - x).abs() <= cfg.spacing() / 2.0 + 1e-12);
    }

    #[test]
    fn crossover_conserves_bits_per_position(seed in any::<u64>(), depth in 1u32..=20) {
        let cfg = CodecConfig::new(depth, PI, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_genome(&mut rng, &cfg, 2);
        let b = random_genome(&mut rng, &cfg, 2);
        let (c, d) = crossover(&a, &b, &mut rng).unwrap();
        for (((ca, cb), cc), cd) in a.chromosomes().zip(b.chromosomes()).zip(c.chromosomes()).zip(d.chromosomes()) {
            for i in 0..ca.len() {
                let parents = (ca.bits()[i], cb.bits()[i]);
                let kids = (cc.bits()[i], cd.bits()[i]);
                prop_assert!(kids == parents || kids == (parents.1, parents.0));
            }
            // positions taken from the other parent form one contiguous run
            let taken: Vec<usize> = (0..ca.len())
                .filter(|&i| ca.bits()[i] != cb.bits()[i] && cc.bits()[i] == cb.bits()[i])
                .collect();
            if let (Some(first), Some(last)) = (taken.first(), taken.last()) {
                for i in *first..=*last {
                    prop_assert!(ca.bits()[i] == cb.bits()[i] || cc.bits()[i] == cb.bits()[i], "gap at {i}");
                }
            }
        }
    }

    #[test]
    fn zero_mutation_is_identity(seed in any::<u64>()) {
        let cfg = CodecConfig::new(15, PI, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_genome(&mut rng, &cfg, 2);
        let mut h = g.clone();
        mutate(&mut h, 0.0, &mut rng);
        prop_assert_eq!(g, h);
    }

    #[test]
    fn genome_text_round_trips(seed in any::<u64>(), slots in 1usize..4) {
        let cfg = CodecConfig::new(7, PI, 2).unwrap();
        let g = random_genome(&mut ChaCha8Rng::seed_from_u64(seed), &cfg, slots);
        let back: Genome = g.to_string().parse().unwrap();
        prop_assert_eq!(g, back);
    }

    #[test]
    fn random_unitaries_are_unitary(p2 in params(2), p3 in params(3), p4 in params(4)) {
        for (p, d) in [(p2, 2), (p3, 3), (p4, 4)] {
            let u = unitary_from_params(&p, d).unwrap();
            prop_assert!(u.unitarity_defect() <= 1e-12, "d = {d}: {}", u.unitarity_defect());
        }
    }

    #[test]
    fn su2_paths_agree(p in params(2)) {
        let a = su2_closed_form(&p).unwrap();
        let b = unitary_from_params(&p, 2).unwrap();
        prop_assert!(a.max_abs_diff(&b).unwrap() <= 1e-12);
    }

    #[test]
    fn eigendecomposition_reconstructs(p in params(3)) {
        let gens = qga::linalg::gell_mann_generators(3).unwrap();
        let mut h = ComplexMatrix::zeros(3).unwrap();
        for (g, x) in gens.iter().zip(p.components()) {
            h = h.add(&g.scale(Complex::new(*x, 0.0))).unwrap();
        }
        let eig = hermitian_eig(&h).unwrap();
        prop_assert!(eig.reconstruct().max_abs_diff(&h).unwrap() <= 1e-12);
        prop_assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn fidelity_is_symmetric_and_bounded(a in state2(), b in state2()) {
        let f = fidelity(&a, &b).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&f));
        assert_abs_diff_eq!(f, fidelity(&b, &a).unwrap(), epsilon = 1e-15);
        assert_abs_diff_eq!(fidelity(&a, &a).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn bloch_reconstructs(p in params(2)) {
        let u = su2_closed_form(&p).unwrap();
        let b = bloch_decompose(&u).unwrap();
        prop_assert!(b.residual <= 1e-12);
        prop_assert!((0.0..=PI).contains(&b.theta));
    }

    #[test]
    fn prepared_state_matches_amplitudes(p in params(2), psi in state2()) {
        let u = su2_closed_form(&p).unwrap();
        let ps = prepared_state(&u, &psi).unwrap();
        let out = u.apply(&psi).unwrap();
        assert_abs_diff_eq!(ps.alpha, out.amplitudes()[0].norm(), epsilon = 1e-12);
        if !ps.degenerate {
            let rebuilt = StateVector::new(vec![
                Complex::new(ps.alpha, 0.0),
                Complex::from_polar((1.0 - ps.alpha * ps.alpha).max(0.0).sqrt(), ps.phi),
            ]).unwrap();
            prop_assert!((fidelity(&rebuilt, &out).unwrap() - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn selection_law_holds(n in 2usize..=400) {
        let p = selection_probabilities(n).unwrap();
        prop_assert_eq!(p[n - 1], p[0] / n as f64);
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        prop_assert!(p.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn sample_stats_ignore_order(mut v in prop::collection::vec(-10.0f64..10.0, 1..50), seed in any::<u64>()) {
        let a = SampleStats::from_values(&v).unwrap();
        use rand::seq::SliceRandom;
        v.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(a, SampleStats::from_values(&v).unwrap());
    }

    #[test]
    fn quantile_bins_are_ordered(v in prop::collection::vec((0.0f64..1.0, 0.0f64..50.0), 1..200), bins in 1usize..30) {
        let b = quantile_bins(&v, bins);
        prop_assert_eq!(b.len(), bins.min(v.len()));
        prop_assert!(b.windows(2).all(|w| w[0].0 <= w[1].0));
    }
}

#[test]
fn ensemble_stats_are_permutation_invariant() {
    let task = deutsch_task();
    let cfg = GaConfig::new(10, 1e-3, CodecConfig::new(15, PI, 2).unwrap());
    let mut recs: Vec<_> = (0..24).map(|s| run(&cfg, &task, s).unwrap()).collect();
    let a = ensemble_stats_with(&recs, &[], Padding::HoldFinal, Some(50)).unwrap();
    recs.reverse();
    recs.swap(3, 17);
    let b = ensemble_stats_with(&recs, &[], Padding::HoldFinal, Some(50)).unwrap();
    assert_eq!(a, b);
    let c = ensemble_stats_with(&recs, &[], Padding::DropOut, None).unwrap();
    assert!(c.mean_fitness.len() <= a.mean_fitness.len());
}

#[test]
fn fit_recovers_synthetic_model() {
    let (a, b, c) = (40.0, 22.58, 15.46);
    let pts: Vec<(f64, f64)> = (0..20)
        .map(|k| {
            let e = 0.005 * k as f64;
            (e, a * (-b * e).exp() + c)
        })
        .collect();
    let fit = fit_exponential(&pts).unwrap();
    assert!(fit.converged);
    for (got, want) in fit.params().iter().zip([a, b, c]) {
        assert!((got - want).abs() <= 1e-6 * want.abs(), "{got} vs {want}");
    }
}

#[test]
fn runs_are_reproducible() {
    let task = deutsch_task();
    let cfg = GaConfig::new(20, 1e-3, CodecConfig::new(15, PI, 2).unwrap());
    let a = run(&cfg, &task, 7).unwrap();
    let b = run(&cfg, &task, 7).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, run(&cfg, &task, 8).unwrap());
}
