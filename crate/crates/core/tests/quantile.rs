mod common;

use common::{problem, spd_from, zeros, INF};
use mvdist_core::qmc::probability;
use mvdist_core::quantile::*;
use mvdist_core::*;
use proptest::prelude::*;

fn cfg(tail: Tail) -> BisectionConfig {
    BisectionConfig {
        tail,
        ..BisectionConfig::default()
    }
}

fn rectangle(k: usize, q: f64, tail: Tail) -> ExtendedBounds {
    let (lo, hi) = match tail {
        Tail::Lower => (-INF, q),
        Tail::Upper => (q, INF),
        Tail::Both => (-q, q),
    };
    ExtendedBounds::new(vec![lo; k], vec![hi; k]).unwrap()
}

fn tail_from(i: u8) -> Tail {
    match i % 3 {
        0 => Tail::Lower,
        1 => Tail::Upper,
        _ => Tail::Both,
    }
}

#[test]
fn dunnett_three_arms() {
    let d = zeros(3);
    let s = ScaleMatrix::equicorrelated(3, 0.5).unwrap();
    let r = mvn_quantile(0.95, &d, &s, &cfg(Tail::Lower), &QmcConfig::default(), 1).unwrap();
    assert_eq!(r.flag, SearchStatus::Converged);
    assert!((2.04..=2.08).contains(&r.quantile), "{r:?}");
}

#[test]
fn large_df_matches_normal() {
    let d = zeros(2);
    let s = ScaleMatrix::equicorrelated(2, 0.5).unwrap();
    let nu = DegreesOfFreedom::new(1e6).unwrap();
    let c = cfg(Tail::Lower);
    let qmc = QmcConfig::default();
    let n = mvn_quantile(0.9, &d, &s, &c, &qmc, 4).unwrap();
    let t = mvt_quantile(0.9, &d, &s, nu, &c, &qmc, 4).unwrap();
    assert_eq!(n.flag, SearchStatus::Converged);
    assert_eq!(t.flag, SearchStatus::Converged);
    // the t quantile exceeds the normal one by O(1/ν); both carry the
    // integrator noise of their objective
    let slack = 2.0 * c.tolerance + n.error + t.error;
    assert!((n.quantile - t.quantile).abs() <= slack, "{n:?} {t:?}");
}

#[test]
fn whole_space_truncation_matches_parent() {
    let d = zeros(2);
    let s = ScaleMatrix::equicorrelated(2, 0.3).unwrap();
    let nu = DegreesOfFreedom::new(3.0).unwrap();
    let whole = TruncationBox::new(vec![-INF; 2], vec![INF; 2]).unwrap();
    let qmc = QmcConfig::default();
    for tail in [Tail::Lower, Tail::Upper, Tail::Both] {
        let c = cfg(tail);
        let a = mvt_quantile(0.8, &d, &s, nu, &c, &qmc, 9).unwrap();
        let b = tmvt_quantile(0.8, &d, &s, nu, &whole, &c, &qmc, 9).unwrap();
        assert!((a.quantile - b.quantile).abs() <= 2.0 * c.tolerance, "{tail}: {a:?} {b:?}");
        let a = mvn_quantile(0.8, &d, &s, &c, &qmc, 9).unwrap();
        let b = tmvn_quantile(0.8, &d, &s, &whole, &c, &qmc, 9).unwrap();
        assert!((a.quantile - b.quantile).abs() <= 2.0 * c.tolerance, "{tail}: {a:?} {b:?}");
    }
}

#[test]
fn both_tail_in_shifted_box_stays_in_support() {
    let d = LocationVector::new(vec![1.5]).unwrap();
    let s = ScaleMatrix::identity(1).unwrap();
    let b = TruncationBox::new(vec![1.0], vec![2.0]).unwrap();
    let r = tmvn_quantile(0.5, &d, &s, &b, &cfg(Tail::Both), &QmcConfig::default(), 0).unwrap();
    assert!((0.0..=2.0).contains(&r.quantile), "{r:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn roundtrip(pr in problem(1, 4), p in 0.05..0.95f64, tail in 0u8..3, t in 0u8..4, seed in 0u64..1000) {
        let tail = tail_from(tail);
        let nu = (t % 2 == 1).then(|| DegreesOfFreedom::new(2.5).unwrap());
        // truncate to a generous box around the location for half the cases
        let trunc = (t >= 2).then(|| {
            let lo = pr.delta.iter().map(|d| d - 2.0).collect();
            let hi = pr.delta.iter().map(|d| d + 2.5).collect();
            TruncationBox::new(lo, hi).unwrap()
        });
        let spec = DistributionSpec::new(pr.delta(), pr.sigma(), nu, trunc).unwrap();
        let qmc = QmcConfig::default();
        let c = cfg(tail);
        let r = quantile(&spec, p, &c, &qmc, seed).unwrap();
        prop_assert!(r.iterations <= c.itermax);
        if r.flag == SearchStatus::Converged {
            prop_assert!(r.fquantile.abs() <= c.tolerance);
            let est = probability(&spec, &rectangle(pr.k, r.quantile, tail), &qmc, seed).unwrap();
            prop_assert!((est.value - p).abs() <= c.tolerance + est.error, "{r:?} {est:?}");
        }
    }

    #[test]
    fn monotone_in_p(k in 1usize..4, a in prop::collection::vec(-1.0..1.0f64, 9), p in 0.1..0.8f64, dp in 0.05..0.15f64, upper in any::<bool>(), seed in 0u64..1000) {
        let sigma = spd_from(k, &a[..k * k]);
        let d = zeros(k);
        let tail = if upper { Tail::Upper } else { Tail::Lower };
        let c = cfg(tail);
        let qmc = QmcConfig::default();
        let lo = mvn_quantile(p, &d, &sigma, &c, &qmc, seed).unwrap();
        let hi = mvn_quantile(p + dp, &d, &sigma, &c, &qmc, seed).unwrap();
        if upper {
            prop_assert!(lo.quantile >= hi.quantile, "{lo:?} {hi:?}");
        } else {
            prop_assert!(lo.quantile <= hi.quantile, "{lo:?} {hi:?}");
        }
    }

    #[test]
    fn tail_duality(k in 1usize..4, a in prop::collection::vec(-1.0..1.0f64, 9), p in 0.05..0.95f64, student in any::<bool>(), seed in 0u64..1000) {
        let sigma = spd_from(k, &a[..k * k]);
        let nu = student.then(|| DegreesOfFreedom::new(4.0).unwrap());
        let spec = DistributionSpec::new(zeros(k), sigma, nu, None).unwrap();
        let qmc = QmcConfig::default();
        let upper = quantile(&spec, p, &cfg(Tail::Upper), &qmc, seed).unwrap();
        prop_assume!(upper.flag == SearchStatus::Converged);
        // X and -X share the distribution, so -q_upper solves the lower-tail
        // equation. The two searches integrate different (non-mirrored)
        // integrands, so the check is on the probability scale.
        let est = probability(&spec, &rectangle(k, -upper.quantile, Tail::Lower), &qmc, seed).unwrap();
        prop_assert!((est.value - p).abs() <= 1e-6 + est.error + upper.error, "{upper:?} {est:?}");
        let lower = quantile(&spec, p, &cfg(Tail::Lower), &qmc, seed).unwrap();
        prop_assert!((lower.quantile + upper.quantile).abs() <= 1e-2, "{lower:?} {upper:?}");
    }
}
