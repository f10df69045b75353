use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use zerosum::decision::UnitsDavenportKernel;
use zerosum::montecarlo::*;
use zerosum::Modulus;

#[test]
fn reports_are_reproducible() {
    let config = TrialConfig::new(Scenario::DavenportPm1, 4096, 300, 11).length(7);
    assert_eq!(run_experiment(&config).unwrap(), run_experiment(&config).unwrap());
    let other = TrialConfig {
        seed: 12,
        ..config.clone()
    };
    let (a, b) = (run_experiment(&config).unwrap(), run_experiment(&other).unwrap());
    assert_eq!(a.trials, b.trials);
}

#[test]
fn estimate_is_one_past_known_constants() {
    let n = 16u64;
    let log = n.ilog2() as usize;
    let cases = [
        TrialConfig::new(Scenario::ErdosPm1, n, 100, 3).length(n as usize + log),
        TrialConfig::new(Scenario::DavenportUnweighted, n, 100, 3).length(n as usize),
        TrialConfig::new(Scenario::DavenportPm1, n, 100, 3).length(log + 1),
        TrialConfig::new(Scenario::ErdosUnweighted, n, 100, 3).length(2 * n as usize - 1),
    ];
    for c in cases {
        let r = run_experiment(&c).unwrap();
        assert_eq!(r.estimate, 1.0, "{}", c.scenario);
    }
}

#[test]
fn estimates_grow_with_length_at_matched_seeds() {
    for scenario in [Scenario::DavenportUnweighted, Scenario::DavenportPm1] {
        let mut last = 0u64;
        for m in 1..=16 {
            let r = run_experiment(&TrialConfig::new(scenario, 1024, 200, 5).length(m)).unwrap();
            // shared prefixes plus monotone decisions make this exact per trial
            assert!(r.successes >= last, "{scenario} m={m}");
            last = r.successes;
        }
    }
}

#[test]
fn ci_contains_estimate() {
    for m in [2, 5, 8, 12] {
        let r = run_experiment(&TrialConfig::new(Scenario::DavenportUnweighted, 512, 150, 1).length(m)).unwrap();
        assert!(r.ci95[0] <= r.estimate && r.estimate <= r.ci95[1]);
        assert!((0.0..=1.0).contains(&r.estimate));
    }
}

#[test]
fn certificates_are_sound() {
    let primes = [3u64, 5, 7, 11];
    let n = Modulus::new(1155).unwrap();
    let kernel = UnitsDavenportKernel::new(n).unwrap();
    let mut certified = 0;
    for trial in 0..10_000u64 {
        let m = 2 + (trial % 5) as usize;
        let x = sample_sequence(n, m, 99, trial);
        if certify_units_davenport(&x, &primes).unwrap() {
            certified += 1;
            assert!(kernel.is_z(&x).unwrap(), "{x}");
        }
    }
    assert!(certified > 1000);
}

#[test]
fn lemma_certificates_check_directly() {
    let primes = [3u64, 5, 7];
    let n = Modulus::new(105).unwrap();
    for trial in 0..2000u64 {
        let x = sample_sequence(n, 4, 17, trial);
        if x.entries().contains(&0) {
            continue;
        }
        if let Some(cert) = lemma1_certify(&x, &primes).unwrap() {
            assert!(cert.check(&x));
            for (f, &v) in cert.profiles.iter().zip(x.entries()) {
                let p_a: u64 = f.prime_index_set.iter().map(|&i| primes[i]).product();
                assert_eq!(f.unit_part * p_a % 105, v);
                assert!(n.is_unit(f.unit_part));
            }
        }
    }
}

#[test]
fn index_set_sampler_matches_uniform_residues() {
    for primes in [vec![3u64, 5, 7], vec![2, 3, 5, 7], vec![5, 11]] {
        let dist = support_distribution(&primes).unwrap();
        let total: BigRational = dist.values().cloned().sum();
        assert_eq!(total, BigRational::one());
        for set in 0u128..1 << primes.len() {
            let got = dist.get(&set).cloned().unwrap_or_else(BigRational::zero);
            assert_eq!(got, product_measure(&primes, set), "{primes:?} {set:b}");
        }
    }
}

#[test]
fn column_probability_matches_enumeration() {
    for p in [3u64, 5, 7] {
        for m in 0..=10u32 {
            let mut total = BigRational::zero();
            for col in 0u32..1 << m {
                let bits: Vec<u32> = (0..m).map(|i| col >> i & 1).collect();
                if bits.windows(2).any(|w| w[0] > w[1]) {
                    continue;
                }
                let ones = bits.iter().sum::<u32>() as usize;
                let w = BigRational::new(BigInt::one(), BigInt::from(p)).pow(ones as i32)
                    * BigRational::new(BigInt::from(p - 1), BigInt::from(p)).pow((m as usize - ones) as i32);
                total += w;
            }
            assert_eq!(column_increasing_probability(p, m).unwrap(), total, "p={p} m={m}");
            assert_eq!(
                column_increasing_probability_printed(p, m).unwrap() * BigRational::from_integer(p.into()),
                total
            );
        }
    }
}

#[test]
fn chain_simulation_tracks_exact_value() {
    let r = chain_probability(&[3, 5], 2, 20_000, 4).unwrap();
    assert_eq!(r.exact.as_deref(), Some("209/225"));
    assert_eq!(r.exact_in_ci, Some(true));
    assert!(!r.closed_form_in_ci);
    let single = chain_probability(&[3], 1, 100, 1).unwrap();
    assert_eq!(single.simulated.estimate, 1.0);
}

#[test]
fn chain_probability_is_positive_for_many_primes() {
    let primes: Vec<u64> = (3..=50).filter(|&p| zerosum::group::is_prime(p)).collect();
    let c = TrialConfig::with_primes(Scenario::PrimorialChain, primes, 2000, 8).length(2);
    assert!(run_experiment(&c).unwrap().successes > 0);
}

#[test]
fn certificate_mode_is_labelled_lower_bound() {
    let c = TrialConfig::with_primes(Scenario::DavenportUnitsSquarefree, vec![3, 5, 7], 50, 2)
        .length(4)
        .method(Method::Lemma1Certificate);
    let r = run_experiment(&c).unwrap();
    assert_eq!(r.estimate_kind, "lower-bound");
    assert_eq!(r.method_counts.get("lemma1-certificate"), Some(&50));
    let big =
        TrialConfig::with_primes(Scenario::DavenportUnitsSquarefree, vec![3, 5, 7, 11, 13, 17, 19], 50, 2).length(4);
    assert_eq!(run_experiment(&big).unwrap().estimate_kind, "lower-bound");
}
