use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rrs::skr::{self, pam_model};
use rrs::special::ks_uniform;
use rrs::{Configuration, SofteningTransform, ThresholdStrategy};

fn strategy_from(adaptive: bool) -> ThresholdStrategy {
    if adaptive {
        ThresholdStrategy::Adaptive
    } else {
        ThresholdStrategy::Fixed
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Given the decision, the disclosed metric is uniform on [0, 1].
    #[test]
    fn metric_is_uniform_given_decision(
        log2m in 1usize..=3,
        db in -8.0f64..14.0,
        mask_seed in any::<u64>(),
        adaptive in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let m = 1usize << log2m;
        let config = Configuration::new(mask_seed % (1u64 << m), m).unwrap();
        let t = SofteningTransform::new(pam_model(m, db, strategy_from(adaptive)).unwrap(), config).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pooled = vec![Vec::new(); m];
        for _ in 0..3000 * m {
            let j = rng.random_range(0..m);
            let y = t.model().constellation().points()[j] + t.model().sigma() * rng.sample::<f64, _>(StandardNormal);
            let (i, n) = t.forward(y);
            prop_assert!((0.0..=1.0).contains(&n));
            pooled[i].push(n);
        }
        for (i, v) in pooled.iter_mut().enumerate() {
            if v.len() >= 200 {
                let ks = ks_uniform(v);
                prop_assert!(ks.p_value > 1e-4, "decision {i}: {ks:?}");
            }
        }
    }

    /// RRH <= RRS <= I(X;Y).
    #[test]
    fn rate_bound_chain(
        log2m in 1usize..=2,
        db in -10.0f64..15.0,
        mask_seed in any::<u64>(),
        adaptive in any::<bool>(),
    ) {
        let m = 1usize << log2m;
        let model = pam_model(m, db, strategy_from(adaptive)).unwrap();
        let rrh = skr::skr_rrh(&model);
        let ub = skr::mi_xy(&model).unwrap();
        let config = Configuration::new(mask_seed % (1u64 << m), m).unwrap();
        let rrs = skr::skr_rrs(&SofteningTransform::new(model, config).unwrap()).unwrap();
        prop_assert!(rrh <= rrs + 1e-6, "{rrh} > {rrs}");
        prop_assert!(rrs <= ub + 1e-6, "{rrs} > {ub}");
    }

    /// Equivalent configurations give the same key rate.
    #[test]
    fn equivalent_configurations_share_rates(
        db in -6.0f64..12.0,
        mask in 0u64..16,
        adaptive in any::<bool>(),
    ) {
        let model = pam_model(4, db, strategy_from(adaptive)).unwrap();
        let c = Configuration::new(mask, 4).unwrap();
        let base = skr::skr_rrs(&SofteningTransform::new(model.clone(), c).unwrap()).unwrap();
        for other in [c.flip(), c.reverse(), c.mirror()] {
            let r = skr::skr_rrs(&SofteningTransform::new(model.clone(), other).unwrap()).unwrap();
            prop_assert!((r - base).abs() < 1e-7, "{c} vs {other}: {base} {r}");
        }
    }

    /// G_i^{-1}(G_i(y)) = y inside the decision interval.
    #[test]
    fn transform_round_trip(
        db in -5.0f64..15.0,
        mask in 0u64..16,
        adaptive in any::<bool>(),
        u in -1.0f64..1.0,
    ) {
        let t = SofteningTransform::new(pam_model(4, db, strategy_from(adaptive)).unwrap(), Configuration::new(mask, 4).unwrap()).unwrap();
        let y = u * (3.0 + 3.0 * t.model().sigma());
        let (i, n) = t.forward(y);
        let back = t.invert(n, i).unwrap();
        prop_assert!((back - y).abs() <= 1e-8 * (1.0 + y.abs()), "{y} -> {n} -> {back}");
    }
}
