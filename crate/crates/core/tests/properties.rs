use proptest::prelude::*;

use trial_resizer::kernel::{bvn_cdf, cdf, quantile};
use trial_resizer::{
    adjusted_stage2_n, adjusted_stage2_n_gsd, bivariate_normal_cdf, boundary, conditional_error,
    fixed_power_diluted, gsd_power, joint_law, joint_law_general, marschner_becker, Correlation,
    DesignParams, DilutionSpec, InformationFraction, Limit, Probability, Record, Scheme,
    ShortTermDataset,
};

fn p(x: f64) -> Probability {
    Probability::new(x).unwrap()
}

fn tau(t: f64) -> InformationFraction {
    InformationFraction::new(t).unwrap()
}

fn scheme() -> impl Strategy<Value = Scheme> {
    prop_oneof![
        Just(Scheme::Pocock),
        Just(Scheme::ObrienFleming),
        (0.5f64..4.0).prop_map(|rho| Scheme::KimDemets { rho }),
    ]
}

fn record() -> impl Strategy<Value = Record> {
    (0u8..2, prop::option::of(any::<bool>()), any::<bool>(), any::<bool>()).prop_map(
        |(arm, s, complete, l)| Record {
            arm,
            s,
            l: if complete { s.map(|_| l) } else { None },
            covariates: Vec::new(),
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cdf_monotone_and_symmetric(x in -30.0f64..30.0, dx in 0.0f64..1.0) {
        prop_assert!(cdf(x + dx) >= cdf(x));
        prop_assert!((cdf(-x) - (1.0 - cdf(x))).abs() < 1e-15);
    }

    #[test]
    fn quantile_inverts_cdf(q in 1e-10f64..(1.0 - 1e-10)) {
        let x = quantile(q);
        prop_assert!((cdf(x) - q).abs() <= 1e-12);
    }

    #[test]
    fn bvn_margin_and_symmetry(a in -6.0f64..6.0, b in -6.0f64..6.0, rho in -1.0f64..=1.0) {
        let r = Correlation::new(rho).unwrap();
        let margin = bivariate_normal_cdf(a, Limit::PosInfinity, r).unwrap().value();
        prop_assert_eq!(margin, cdf(a));
        prop_assert!((bvn_cdf(a, b, rho) - bvn_cdf(b, a, rho)).abs() < 1e-14);
        let v = bvn_cdf(a, b, rho);
        prop_assert!(v <= cdf(a).min(cdf(b)) + 1e-14);
        prop_assert!(v >= (cdf(a) + cdf(b) - 1.0).max(0.0) - 1e-14);
    }

    #[test]
    fn bvn_nondecreasing_in_correlation(a in -4.0f64..4.0, b in -4.0f64..4.0, rho in -0.99f64..0.98) {
        prop_assert!(bvn_cdf(a, b, rho + 0.01) >= bvn_cdf(a, b, rho) - 1e-13);
    }

    #[test]
    fn boundaries_spend_alpha(s in scheme(), alpha in 0.005f64..0.1, t in 0.05f64..0.95) {
        let d = boundary(s, p(alpha), tau(t)).unwrap();
        prop_assert!((d.type_one_error() - alpha).abs() < 1e-9);
        prop_assert!(d.c1 > 0.0 && d.c2 > 0.0);
    }

    #[test]
    fn conditional_error_nondecreasing(s in scheme(), t in 0.1f64..0.9, z in -4.0f64..4.0, dz in 0.0f64..1.0) {
        let d = boundary(s, p(0.025), tau(t)).unwrap();
        let lo = conditional_error(z, &d).unwrap().value();
        let hi = conditional_error(z + dz, &d).unwrap().value();
        prop_assert!(hi >= lo);
    }

    #[test]
    fn stage_one_power_ignores_dilution(s in scheme(), t in 0.1f64..0.95, eta in -0.5f64..1.0, psi in 0.2f64..4.0) {
        let d = boundary(s, p(0.025), tau(t)).unwrap();
        let plain = gsd_power(&d, p(0.025), p(0.9), tau(t), DilutionSpec::NONE).unwrap();
        let diluted = gsd_power(&d, p(0.025), p(0.9), tau(t), DilutionSpec::new(eta, psi).unwrap()).unwrap();
        prop_assert_eq!(plain.stage1, diluted.stage1);
        prop_assert!(diluted.overall.value() >= diluted.stage1.value());
    }

    #[test]
    fn diluted_power_nonincreasing_in_psi(t in 0.05f64..0.95, eta in 0.0f64..1.0, psi in 1.0f64..5.0, step in 0.0f64..0.5) {
        let lo = fixed_power_diluted(p(0.025), p(0.8), tau(t), DilutionSpec::new(eta, psi).unwrap()).unwrap();
        let hi = fixed_power_diluted(p(0.025), p(0.8), tau(t), DilutionSpec::new(eta, psi + step).unwrap()).unwrap();
        prop_assert!(hi.value() <= lo.value() + 1e-15);
    }

    #[test]
    fn general_law_reduces_to_simple(t in 0.05f64..0.95, eta in -0.5f64..1.0, psi in 0.2f64..4.0,
                                     delta in 0.1f64..3.0, sigma in 0.2f64..5.0, r in 0.25f64..4.0, n in 10.0f64..2000.0) {
        let params = DesignParams::new(0.025, 0.1, delta, sigma, r).unwrap();
        let dil = DilutionSpec::new(eta, psi).unwrap();
        let simple = joint_law(n, tau(t), &params, dil).unwrap();
        let general = joint_law_general(n, tau(t), r, &dil.to_general(&params)).unwrap();
        for i in 0..3 {
            prop_assert!((simple.mean[i] - general.mean[i]).abs() < 1e-12 * (1.0 + simple.mean[i].abs()));
            for j in 0..3 {
                prop_assert!((simple.corr[i][j] - general.corr[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fixed_resize_at_least_remaining(t in 0.05f64..0.95, eta in 0.0f64..0.9) {
        let n = 100.0;
        let res = adjusted_stage2_n(n, tau(t), DilutionSpec::new(eta, 1.0).unwrap(), p(0.025), p(0.9)).unwrap();
        let remaining = n * (1.0 - t);
        if eta == 0.0 {
            prop_assert!((res.n1_tilde - remaining).abs() < 1e-9);
        } else {
            prop_assert!(res.n1_tilde > remaining);
        }
        prop_assert!(res.xi > 0.0 && res.xi <= 1.0);
        prop_assert!((res.n1_tilde - n * t * (1.0 - res.xi) / res.xi).abs() < 1e-9 * (1.0 + res.n1_tilde));
        prop_assert!((res.achieved_power.value() - 0.9).abs() < 1e-6);
    }

    #[test]
    fn mb_invariant_to_order_and_duplication(records in prop::collection::vec(record(), 1..60), seed in any::<u64>()) {
        let Ok(data) = ShortTermDataset::new(records.clone(), 0) else { return Ok(()) };
        let Ok(base) = marschner_becker(&data) else { return Ok(()) };
        prop_assert!((0.0..=1.0).contains(&base.p_arm0) && (0.0..=1.0).contains(&base.p_arm1));
        prop_assert!((-1.0..=1.0).contains(&base.difference));

        let mut shuffled = records.clone();
        // deterministic Fisher–Yates driven by an LCG
        let mut state = seed | 1;
        for i in (1..shuffled.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (state >> 33) as usize % (i + 1));
        }
        let reordered = marschner_becker(&ShortTermDataset::new(shuffled, 0).unwrap()).unwrap();
        prop_assert!((reordered.p_arm0 - base.p_arm0).abs() < 1e-15);
        prop_assert!((reordered.p_arm1 - base.p_arm1).abs() < 1e-15);

        let doubled: Vec<Record> = records.iter().chain(records.iter()).cloned().collect();
        let twice = marschner_becker(&ShortTermDataset::new(doubled, 0).unwrap()).unwrap();
        prop_assert!((twice.p_arm0 - base.p_arm0).abs() < 1e-15);
        prop_assert!((twice.p_arm1 - base.p_arm1).abs() < 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gsd_resize_nondecreasing_in_eta(t in 0.3f64..0.8) {
        let d = boundary(Scheme::Pocock, p(0.025), tau(t)).unwrap();
        let mut previous = 0.0;
        for eta in [0.0, 0.05, 0.1, 0.2] {
            let res = adjusted_stage2_n_gsd(&d, 100.0, tau(t), DilutionSpec::new(eta, 1.0).unwrap(), p(0.025), p(0.9), None)
                .unwrap();
            prop_assert!(res.n1_tilde >= previous - 1e-3);
            prop_assert!((res.achieved_power.value() - 0.9).abs() < 1e-4);
            previous = res.n1_tilde;
        }
    }
}
