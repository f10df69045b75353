use proptest::prelude::*;

use zerosum::bits::ResidueBits;
use zerosum::constructions::{gen_harborth2, gen_restricted_davenport};
use zerosum::decision::{brute_force_decide, decide, is_z, verify_witness, ZKind};
use zerosum::group::{is_k_restricted, Modulus, WeightSet, ZnSequence};
use zerosum::invariants::{
    compute_invariant, enumerate_restricted_multisets, restricted_davenport_constant, restricted_erdos_constant,
    InvariantQuery, SearchOptions, Symmetry,
};
use zerosum::sumsets::{subset_sums, subset_sums_of_size, subset_sums_with_zero, sumset, ResidueSet};

fn modulus(n: u64) -> Modulus {
    Modulus::new(n).unwrap()
}

fn kind_strategy() -> impl Strategy<Value = ZKind> {
    prop_oneof![Just(ZKind::Davenport), Just(ZKind::Erdos)]
}

/// `(n, entries, weights)` with `n ≤ 10`, `m ≤ 8`, `|A| ≤ 3`.
fn small_instance() -> impl Strategy<Value = (u64, Vec<u64>, Vec<u64>)> {
    (2u64..=10).prop_flat_map(|n| {
        (
            Just(n),
            proptest::collection::vec(0..n, 0..=8),
            proptest::collection::btree_set(1..n, 1..=3.min(n as usize - 1)).prop_map(|s| s.into_iter().collect()),
        )
    })
}

fn unit_of(n: u64, seed: u64) -> u64 {
    let units: Vec<u64> = (1..n).filter(|&u| zerosum::group::gcd(u, n) == 1).collect();
    units[(seed % units.len() as u64) as usize]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn dp_agrees_with_brute_force((n, xs, ws) in small_instance(), kind in kind_strategy()) {
        let n = modulus(n);
        let a = WeightSet::explicit(n, ws).unwrap();
        let x = ZnSequence::new(n, xs);
        prop_assert_eq!(is_z(&x, &a, kind).unwrap(), brute_force_decide(&x, &a, kind).unwrap());
    }

    #[test]
    fn witnesses_verify((n, xs, ws) in small_instance(), kind in kind_strategy()) {
        let n = modulus(n);
        let a = WeightSet::explicit(n, ws).unwrap();
        let x = ZnSequence::new(n, xs);
        let out = decide(&x, &a, kind).unwrap();
        prop_assert_eq!(out.witness.is_some(), out.is_z_sequence);
        if let Some(w) = out.witness {
            prop_assert!(verify_witness(&x, &a, kind, &w));
        }
    }

    #[test]
    fn order_does_not_matter((n, xs, ws) in small_instance(), kind in kind_strategy(), rot in 0usize..8) {
        let n = modulus(n);
        let a = WeightSet::explicit(n, ws).unwrap();
        let mut shuffled = xs.clone();
        shuffled.reverse();
        if !shuffled.is_empty() {
            let len = shuffled.len();
            shuffled.rotate_left(rot % len);
        }
        prop_assert_eq!(
            is_z(&ZnSequence::new(n, xs), &a, kind).unwrap(),
            is_z(&ZnSequence::new(n, shuffled), &a, kind).unwrap()
        );
    }

    #[test]
    fn unit_scaling_preserves_decision((n, xs, ws) in small_instance(), kind in kind_strategy(), pick in any::<u64>()) {
        let u = unit_of(n, pick);
        let n = modulus(n);
        let a = WeightSet::explicit(n, ws).unwrap();
        let x = ZnSequence::new(n, xs);
        prop_assert_eq!(is_z(&x, &a, kind).unwrap(), is_z(&x.scaled(u), &a, kind).unwrap());
    }

    #[test]
    fn extension_preserves_zero_sums((n, xs, ws) in small_instance(), kind in kind_strategy(), extra in any::<u64>()) {
        let n = modulus(n);
        let a = WeightSet::explicit(n, ws).unwrap();
        let x = ZnSequence::new(n, xs);
        if is_z(&x, &a, kind).unwrap() {
            prop_assert!(is_z(&x.pushed(extra % n.get()), &a, kind).unwrap());
        }
    }

    #[test]
    fn zero_entry_is_a_davenport_zero_sum((n, xs, ws) in small_instance(), at in any::<prop::sample::Index>()) {
        let n = modulus(n);
        let a = WeightSet::explicit(n, ws).unwrap();
        let mut xs = xs;
        let pos = if xs.is_empty() { 0 } else { at.index(xs.len() + 1) };
        xs.insert(pos, 0);
        prop_assert!(is_z(&ZnSequence::new(n, xs), &a, ZKind::Davenport).unwrap());
    }

    #[test]
    fn translation_preserves_unweighted_erdos(n in 2u64..=9, xs in proptest::collection::vec(0u64..9, 0..=12), c in 0u64..9) {
        let n = modulus(n);
        let x = ZnSequence::new(n, xs);
        let ones = WeightSet::ones(n);
        prop_assert_eq!(is_z(&x, &ones, ZKind::Erdos).unwrap(), is_z(&x.translated(c), &ones, ZKind::Erdos).unwrap());
    }

    #[test]
    fn units_weights_agree_with_brute_force(n in 2u64..=12, xs in proptest::collection::vec(0u64..12, 0..=5)) {
        let n = modulus(n);
        let a = WeightSet::units(n);
        let x = ZnSequence::new(n, xs);
        prop_assert_eq!(is_z(&x, &a, ZKind::Davenport).unwrap(), brute_force_decide(&x, &a, ZKind::Davenport).unwrap());
    }

    #[test]
    fn restriction_is_monotone(n in 2u64..=12, xs in proptest::collection::vec(0u64..12, 0..=15), k in 1usize..=4, drop in any::<prop::sample::Index>()) {
        let x = ZnSequence::new(modulus(n), xs.clone());
        if is_k_restricted(&x, k) {
            prop_assert!(is_k_restricted(&x, k + 1));
            if !xs.is_empty() {
                let mut fewer = xs;
                fewer.remove(drop.index(fewer.len()));
                prop_assert!(is_k_restricted(&ZnSequence::new(modulus(n), fewer), k));
            }
        }
    }

    #[test]
    fn subset_sums_match_brute_force(n in 2u64..=40, raw in proptest::collection::btree_set(0u64..40, 0..=12)) {
        let n = modulus(n);
        let a = ResidueSet::new(n, raw.iter().copied());
        let members = a.members();
        let mut naive = ResidueBits::new(n.size());
        for mask in 1u32..1 << members.len() {
            let s: u64 = (0..members.len()).filter(|i| mask >> i & 1 == 1).map(|i| members[i]).sum();
            naive.insert((s % n.get()) as usize);
        }
        prop_assert_eq!(subset_sums(&a).members(), naive.iter().collect::<Vec<_>>());
    }

    #[test]
    fn sized_sums_cover_all_sums(n in 2u64..=30, raw in proptest::collection::btree_set(0u64..30, 0..=10)) {
        let n = modulus(n);
        let a = ResidueSet::new(n, raw.iter().copied());
        let mut union = ResidueSet::empty(n);
        for t in 0..=a.len() {
            union = union.union(&subset_sums_of_size(&a, t).unwrap());
        }
        prop_assert_eq!(union, subset_sums_with_zero(&a));
    }

    #[test]
    fn sumset_matches_pairs(n in 2u64..=70, xa in proptest::collection::vec(0u64..70, 0..10), xb in proptest::collection::vec(0u64..70, 0..10)) {
        let n = modulus(n);
        let a = ResidueSet::new(n, xa.iter().copied());
        let b = ResidueSet::new(n, xb.iter().copied());
        let naive = ResidueSet::new(n, a.iter().flat_map(|x| b.iter().map(move |y| x + y)));
        prop_assert_eq!(sumset(&a, &b).unwrap(), naive);
    }
}

/// Coefficient of `x^m` in `(1 + x + … + x^k)^n`.
fn restricted_count(n: usize, m: usize, k: usize) -> u128 {
    let mut poly = vec![0u128; m + 1];
    poly[0] = 1;
    for _ in 0..n {
        let mut next = vec![0u128; m + 1];
        for (deg, &c) in poly.iter().enumerate() {
            for j in 0..=k {
                if deg + j <= m {
                    next[deg + j] += c;
                }
            }
        }
        poly = next;
    }
    poly[m]
}

#[test]
fn multiset_counts_match_generating_function() {
    for n in 2..=7u64 {
        for k in 1..=3 {
            for m in 0..=(n as usize * k + 1).min(12) {
                let got = enumerate_restricted_multisets(modulus(n), m, k).count() as u128;
                assert_eq!(got, restricted_count(n as usize, m, k), "n={n} m={m} k={k}");
            }
        }
    }
}

#[test]
fn multisets_are_sorted_restricted_and_distinct() {
    let all: Vec<_> = enumerate_restricted_multisets(modulus(5), 6, 2).collect();
    for w in all.windows(2) {
        assert!(w[0].entries() < w[1].entries());
    }
    for x in &all {
        assert!(is_k_restricted(x, 2));
        assert!(x.entries().windows(2).all(|p| p[0] <= p[1]));
    }
}

#[test]
fn symmetry_pruning_matches_plain_search() {
    let plain = SearchOptions::with_symmetry(Symmetry::None);
    let auto = SearchOptions::default();
    let scaled = SearchOptions::with_symmetry(Symmetry::UnitScaling);
    for nv in 2..=6u64 {
        let n = modulus(nv);
        let mut queries = vec![
            InvariantQuery::davenport(WeightSet::ones(n)),
            InvariantQuery::davenport(WeightSet::plus_minus_one(n)),
            InvariantQuery::davenport(WeightSet::units(n)),
            InvariantQuery::erdos(WeightSet::ones(n)),
            InvariantQuery::erdos(WeightSet::plus_minus_one(n)),
        ];
        for k in 1..=2 {
            queries.push(InvariantQuery::restricted_erdos(n, k));
            queries.push(InvariantQuery::restricted_davenport(n, k));
        }
        for q in &queries {
            let base = compute_invariant(q, plain).unwrap().value;
            assert_eq!(compute_invariant(q, auto).unwrap().value, base, "{q:?}");
            assert_eq!(compute_invariant(q, scaled).unwrap().value, base, "{q:?}");
        }
    }
}

#[test]
fn extremal_witnesses_are_not_zero_sums() {
    for nv in 2..=6u64 {
        let n = modulus(nv);
        for q in [
            InvariantQuery::davenport(WeightSet::ones(n)),
            InvariantQuery::erdos(WeightSet::plus_minus_one(n)),
        ] {
            let r = compute_invariant(&q, SearchOptions::default()).unwrap();
            assert_eq!(r.extremal_witness.len() + 1, r.value);
            assert!(!brute_force_decide(&r.extremal_witness, &q.weights, q.kind.z_kind()).unwrap());
        }
    }
}

#[test]
fn restricted_davenport_exceeds_construction() {
    for nv in 3..=12u64 {
        for k in 1..=2usize {
            if nv < 2 * k as u64 + 1 {
                continue;
            }
            let n = modulus(nv);
            let built = gen_restricted_davenport(n, k).unwrap();
            let value = restricted_davenport_constant(n, k, SearchOptions::default())
                .unwrap()
                .value;
            assert!(value > built.sequence.len(), "n={nv} k={k}");
        }
    }
}

#[test]
fn harborth_witness_length_matches_invariant() {
    for nv in (3..=10u64).filter(|&n| n != 4) {
        let n = modulus(nv);
        let value = restricted_erdos_constant(n, 2, SearchOptions::default()).unwrap().value;
        assert_eq!(gen_harborth2(n).unwrap().sequence.len(), value - 1);
    }
}

#[test]
fn repeated_restricted_erdos_is_at_least_n_plus_one() {
    // k = 1 is excluded: the full set {0, 1, 2} of Z_3 already sums to zero
    for nv in 2..=7u64 {
        for k in 2..=3 {
            let value = restricted_erdos_constant(modulus(nv), k, SearchOptions::default())
                .unwrap()
                .value;
            assert!(value as u64 > nv, "n={nv} k={k}");
        }
    }
}
