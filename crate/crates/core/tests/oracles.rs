use mdlab::diophantine::{cf_expand, convergents, FourierMode, IrrationalSpec, RealNumber};
use mdlab::inequalities::azuma_bound;
use mdlab::mdp::{exact_binomial_tail_log, mdp_scan, TailMethod};
use mdlab::processes::{experiment_id, make_circle_walk, make_iid, sample_paths, Law};
use mdlab::variance::{circle_covariances, sigma2_circle_fourier, sigma2_covariance_series, CovarianceSummation};
use mdlab::{RngStream, SpeedSequence};
use num_bigint::BigInt;

#[test]
fn golden_convergents_are_fibonacci() {
    let x = RealNumber::new(&IrrationalSpec::golden()).unwrap();
    let e = cf_expand(&x, 25).unwrap();
    assert_eq!(e.quotients[0], BigInt::from(0));
    assert!(e.quotients[1..].iter().all(|a| *a == BigInt::from(1)));
    let (mut p, mut q) = (0u64, 1u64);
    for c in convergents(&e.quotients) {
        assert_eq!((c.p, c.q), (BigInt::from(p), BigInt::from(q)), "k = {}", c.k);
        (p, q) = (q, p + q);
    }
}

#[test]
fn circle_walk_variance_closed_form_matches_direct_covariances() {
    let x = RealNumber::new(&IrrationalSpec::golden()).unwrap();
    let modes = [FourierMode { k: 1, re: 0.5, im: 0.0 }, FourierMode { k: 2, re: 0.0, im: 0.25 }];
    let gam = circle_covariances(&modes, &x, 4000).unwrap();
    let direct = gam[0] + 2.0 * gam[1..].iter().sum::<f64>();
    let closed = sigma2_circle_fourier(&modes, &x, 200).unwrap().value;
    assert!((direct - closed).abs() < 1e-9 * closed.abs().max(1.0), "{direct} vs {closed}");
}

#[test]
fn simulated_circle_walk_agrees_with_closed_form() {
    let x = RealNumber::new(&IrrationalSpec::golden()).unwrap();
    let modes = [FourierMode { k: 1, re: 0.5, im: 0.0 }];
    let walk = make_circle_walk(&IrrationalSpec::golden(), &modes).unwrap();
    let paths = sample_paths(&walk, 2000, 400, 17, experiment_id("it/circle")).unwrap();
    let values: Vec<&[f64]> = paths.iter().map(|p| p.values.as_slice()).collect();
    let est = sigma2_covariance_series(&values, 40, CovarianceSummation::Truncated).unwrap();
    let exact = sigma2_circle_fourier(&modes, &x, 200).unwrap().value;
    let se = est.standard_error.unwrap();
    assert!((est.value - exact).abs() < 4.0 * se + 0.01 * exact, "{} vs {exact} (se {se})", est.value);
}

#[test]
fn azuma_dominates_exact_sign_tails() {
    for n in [10u64, 100, 1000, 10_000] {
        for s in [0.5, 1.0, 2.0, 3.0] {
            let t = s * (n as f64).sqrt();
            let two_sided = std::f64::consts::LN_2 + exact_binomial_tail_log(n, t).unwrap();
            assert!(two_sided.exp() <= azuma_bound(n, 1.0, t).unwrap(), "n = {n}, t = {t}");
        }
    }
}

#[test]
fn exact_scan_approaches_quadratic_rate() {
    let model = make_iid(Law::Rademacher).unwrap();
    let speed = SpeedSequence::power(0.5).unwrap();
    let r = mdp_scan(&model, &speed, &[100, 10_000, 1_000_000], &[0.5, 1.5], 1.0, TailMethod::ExactBinomial, 0, 0).unwrap();
    assert_eq!(r.trend_pass, Some(true));
    let last = r.rows.iter().filter(|row| row.n == 1_000_000).map(|row| row.gap.unwrap().abs()).fold(0.0, f64::max);
    assert!(last < 0.05, "{last}");
}

#[test]
fn streams_are_reproducible_and_distinct() {
    let model = make_iid(Law::Uniform { c: 1.0 }).unwrap();
    let a = model.sample(500, RngStream::new(3, 9)).unwrap();
    let b = model.sample(500, RngStream::new(3, 9)).unwrap();
    let c = model.sample(500, RngStream::new(3, 10)).unwrap();
    assert_eq!(a.values, b.values);
    assert_ne!(a.values, c.values);
}
