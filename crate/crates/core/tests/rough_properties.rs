//! Property checks for the rough-set engine against a pairwise brute-force
//! oracle that never builds hash keys.

use proptest::prelude::*;
use roughchange_core::rough::{
    approximate, induce_partition, rough_membership, ElementSet, InformationSystem,
};

/// Classes built by comparing every element with the first member of each
/// class found so far.
fn oracle_classes(rows: &[Vec<u32>], attrs: &[usize]) -> Vec<Vec<usize>> {
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let same = |j: usize| attrs.iter().all(|&a| rows[j][a] == row[a]);
        match classes.iter_mut().find(|c| same(c[0])) {
            Some(c) => c.push(i),
            None => classes.push(vec![i]),
        }
    }
    classes
}

struct OracleApprox {
    lower: Vec<bool>,
    upper: Vec<bool>,
    accuracy: f64,
}

fn oracle_approx(classes: &[Vec<usize>], target: &[bool]) -> OracleApprox {
    let n = target.len();
    let mut lower = vec![false; n];
    let mut upper = vec![false; n];
    for class in classes {
        let inside = class.iter().all(|&e| target[e]);
        let touches = class.iter().any(|&e| target[e]);
        for &e in class {
            lower[e] = inside;
            upper[e] = touches;
        }
    }
    let l = lower.iter().filter(|&&b| b).count();
    let u = upper.iter().filter(|&&b| b).count();
    OracleApprox {
        lower,
        upper,
        accuracy: if u == 0 { 1.0 } else { l as f64 / u as f64 },
    }
}

fn system_strategy() -> impl Strategy<Value = (Vec<u32>, Vec<Vec<u32>>, Vec<bool>)> {
    (1usize..=3, 1usize..=64)
        .prop_flat_map(|(m, n)| {
            (
                prop::collection::vec(1u32..=4, m),
                Just(n),
                prop::collection::vec(any::<bool>(), n),
            )
        })
        .prop_flat_map(|(domains, n, target)| {
            let row = domains
                .iter()
                .map(|&d| (0..d).boxed())
                .collect::<Vec<_>>();
            (
                Just(domains),
                prop::collection::vec(row, n),
                Just(target),
            )
        })
}

fn all_attrs(m: usize) -> Vec<usize> {
    (0..m).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn approximate_matches_oracle((domains, rows, target) in system_strategy()) {
        let m = domains.len();
        let is = InformationSystem::from_rows(domains, &rows).unwrap();
        let p = induce_partition(&is, &all_attrs(m)).unwrap();
        let got = approximate(&p, &ElementSet::from_flags(target.clone())).unwrap();
        let want = oracle_approx(&oracle_classes(&rows, &all_attrs(m)), &target);
        prop_assert_eq!(got.lower.flags(), want.lower.as_slice());
        prop_assert_eq!(got.upper.flags(), want.upper.as_slice());
        let boundary: Vec<bool> = want.upper.iter().zip(&want.lower).map(|(&u, &l)| u && !l).collect();
        prop_assert_eq!(got.boundary.flags(), boundary.as_slice());
        prop_assert_eq!(got.accuracy, want.accuracy);
    }

    #[test]
    fn partition_classes_match_oracle((domains, rows, _t) in system_strategy(), mask in 1u8..8) {
        let m = domains.len();
        let attrs: Vec<usize> = (0..m).filter(|a| mask & (1 << a) != 0).collect();
        prop_assume!(!attrs.is_empty());
        let is = InformationSystem::from_rows(domains, &rows).unwrap();
        let p = induce_partition(&is, &attrs).unwrap();
        prop_assert_eq!(p.classes(), oracle_classes(&rows, &attrs));
        prop_assert_eq!(p.class_sizes().iter().sum::<usize>(), rows.len());
        prop_assert!(p.class_sizes().iter().all(|&s| s > 0));
    }

    #[test]
    fn sandwich_and_crispness((domains, rows, target) in system_strategy()) {
        let m = domains.len();
        let is = InformationSystem::from_rows(domains, &rows).unwrap();
        let p = induce_partition(&is, &all_attrs(m)).unwrap();
        let x = ElementSet::from_flags(target);
        let a = approximate(&p, &x).unwrap();
        prop_assert!(a.lower.is_subset(&x));
        prop_assert!(x.is_subset(&a.upper));
        prop_assert_eq!(a.accuracy == 1.0, a.boundary.count() == 0);
        for e in 0..x.len() {
            let mu = rough_membership(&p, &x, e).unwrap();
            prop_assert!((0.0..=1.0).contains(&mu));
            prop_assert_eq!(mu == 1.0, a.lower[e]);
            prop_assert_eq!(mu > 0.0, a.upper[e]);
        }
    }

    #[test]
    fn extra_attribute_refines((domains, rows, _t) in system_strategy()) {
        let m = domains.len();
        prop_assume!(m >= 2);
        let is = InformationSystem::from_rows(domains, &rows).unwrap();
        let coarse = induce_partition(&is, &[0]).unwrap();
        let fine = induce_partition(&is, &[0, 1]).unwrap();
        for class in fine.classes() {
            let parent = coarse.class_of(class[0]);
            prop_assert!(class.iter().all(|&e| coarse.class_of(e) == parent));
        }
    }

    #[test]
    fn partition_is_deterministic((domains, rows, target) in system_strategy()) {
        let m = domains.len();
        let is = InformationSystem::from_rows(domains, &rows).unwrap();
        let p1 = induce_partition(&is, &all_attrs(m)).unwrap();
        let p2 = induce_partition(&is.clone(), &all_attrs(m)).unwrap();
        prop_assert_eq!(&p1, &p2);
        // first-occurrence numbering: class k's first member precedes class k+1's
        let firsts: Vec<usize> = p1.classes().iter().map(|c| c[0]).collect();
        prop_assert!(firsts.windows(2).all(|w| w[0] < w[1]));
        let x = ElementSet::from_flags(target);
        prop_assert_eq!(approximate(&p1, &x).unwrap(), approximate(&p2, &x).unwrap());
    }
}
