mod common;

use di_audit_core::curve::{auc_di, di_curve, pf_di, ProportionPrior};
use di_audit_core::ks::ks_statistic;
use di_audit_core::metrics::{bin_di_at, mean_di, med_di};
use di_audit_core::GroupPartition;
use proptest::prelude::*;

fn partition(groups: &[Vec<f64>]) -> GroupPartition {
    let names = ["g0", "g1", "g2", "g3"];
    GroupPartition::from_groups(
        ["group"],
        groups.iter().enumerate().map(|(i, g)| (names[i], g.clone())),
    )
    .unwrap()
}

/// 2-4 groups, at most 200 scores overall, drawn from a small integer
/// lattice so that ties are frequent.
fn groups_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..=4).prop_flat_map(|k| {
        prop::collection::vec(
            prop::collection::vec((0u32..40).prop_map(|x| x as f64 * 0.5 + 1.0), 1..=50),
            k,
        )
    })
}

fn weights_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..5.0, 100).prop_filter("positive mass", |w| w.iter().sum::<f64>() > 0.0)
}

proptest! {
    #[test]
    fn curve_matches_brute_force(groups in groups_strategy()) {
        let p = partition(&groups);
        let c = di_curve(&p).unwrap();
        let expected = common::curve(&groups);
        for (i, row) in c.values().values().enumerate() {
            prop_assert_eq!(row, &expected[i]);
        }
        for k in [0usize, 13, 50, 99] {
            let v = bin_di_at(&p, k as f64 / 100.0).unwrap();
            let brute = common::bin_di(&groups, k);
            prop_assert_eq!(v.values.values().copied().collect::<Vec<_>>(), brute);
        }
    }

    #[test]
    fn aggregates_match_brute_force(groups in groups_strategy(), weights in weights_strategy()) {
        let p = partition(&groups);
        let c = di_curve(&p).unwrap();
        let expected = common::curve(&groups);
        let flat = vec![1.0; 100];
        let custom = ProportionPrior::custom(weights.clone()).unwrap();
        let auc = auc_di(&c, &ProportionPrior::flat()).unwrap();
        let pf = pf_di(&c, &ProportionPrior::flat(), 0.8).unwrap();
        let auc_c = auc_di(&c, &custom).unwrap();
        let pf_c = pf_di(&c, &custom, 0.8).unwrap();
        for (i, key) in c.values().keys().enumerate() {
            prop_assert!((auc.values[key] - common::weighted_mean(&expected[i], &flat)).abs() <= 1e-12);
            prop_assert!((pf.values[key] - common::fair_mass(&expected[i], &flat, 0.8)).abs() <= 1e-12);
            prop_assert!((auc_c.values[key] - common::weighted_mean(&expected[i], &weights)).abs() <= 1e-12);
            prop_assert!((pf_c.values[key] - common::fair_mass(&expected[i], &weights, 0.8)).abs() <= 1e-12);
            // flat-prior PfDI sits on the 0.01 lattice
            let hundredths = pf.values[key] * 100.0;
            prop_assert_eq!(pf.values[key], hundredths.round() / 100.0);
        }
    }

    #[test]
    fn ks_matches_grid_oracle(a in prop::collection::vec(0u32..30, 1..100), b in prop::collection::vec(0u32..30, 1..100)) {
        let a: Vec<f64> = a.into_iter().map(f64::from).collect();
        let b: Vec<f64> = b.into_iter().map(f64::from).collect();
        let r = ks_statistic(&a, &b).unwrap();
        prop_assert_eq!(r.statistic, common::ks(&a, &b));
        prop_assert_eq!(r.statistic, ks_statistic(&b, &a).unwrap().statistic);
        let cubed: (Vec<f64>, Vec<f64>) = (a.iter().map(|x| x * x * x + 7.0).collect(), b.iter().map(|x| x * x * x + 7.0).collect());
        prop_assert_eq!(r.statistic, ks_statistic(&cubed.0, &cubed.1).unwrap().statistic);
    }

    #[test]
    fn pointwise_metrics_have_unit_maximum(groups in groups_strategy()) {
        let p = partition(&groups);
        for v in [mean_di(&p).unwrap(), med_di(&p).unwrap(), bin_di_at(&p, 0.37).unwrap()] {
            prop_assert_eq!(v.values[&v.reference_group], 1.0);
            prop_assert!(v.values.values().all(|&x| (0.0..=1.0).contains(&x)));
        }
        prop_assert!(bin_di_at(&p, 0.0).unwrap().values.values().all(|&x| x == 1.0));
    }

    #[test]
    fn monotone_transform_invariance(groups in groups_strategy()) {
        let p = partition(&groups);
        let t: Vec<Vec<f64>> = groups.iter().map(|g| g.iter().map(|x| x * x * x + 7.0).collect()).collect();
        let q = partition(&t);
        let (cp, cq) = (di_curve(&p).unwrap(), di_curve(&q).unwrap());
        prop_assert_eq!(cp.values(), cq.values());
        prop_assert_eq!(med_di(&p).unwrap().values, med_di(&q).unwrap().values);
        let flat = ProportionPrior::flat();
        prop_assert_eq!(auc_di(&cp, &flat).unwrap().values, auc_di(&cq, &flat).unwrap().values);
        prop_assert_eq!(pf_di(&cp, &flat, 0.8).unwrap().values, pf_di(&cq, &flat, 0.8).unwrap().values);
    }

    #[test]
    fn relabeling_and_shuffling_is_equivariant(groups in groups_strategy(), seed in any::<u64>()) {
        let p = partition(&groups);
        let mut rev: Vec<Vec<f64>> = groups.iter().rev().cloned().collect();
        // rotate each group's contents by a seed-dependent amount
        for g in &mut rev {
            let n = g.len();
            g.rotate_left((seed as usize) % n);
        }
        let q = partition(&rev);
        let n = groups.len();
        let (cp, cq) = (di_curve(&p).unwrap(), di_curve(&q).unwrap());
        for i in 0..n {
            let kp = format!("g{i}");
            let kq = format!("g{}", n - 1 - i);
            prop_assert_eq!(cp.group(kp.as_str()), cq.group(kq.as_str()));
        }
    }

    #[test]
    fn aggregates_are_monotone_in_curve(groups in groups_strategy(), bump in 0usize..100) {
        let p = partition(&groups);
        let c = di_curve(&p).unwrap();
        // raise one group's value at one grid point by substituting a pointwise max with 1
        let key = c.values().keys().next().unwrap().clone();
        let mut raised: Vec<Vec<f64>> = common::curve(&groups);
        raised[0][bump] = 1.0;
        let flat = vec![1.0; 100];
        let auc = auc_di(&c, &ProportionPrior::flat()).unwrap().values[&key];
        let pf = pf_di(&c, &ProportionPrior::flat(), 0.8).unwrap().values[&key];
        prop_assert!(common::weighted_mean(&raised[0], &flat) >= auc - 1e-15);
        prop_assert!(common::fair_mass(&raised[0], &flat, 0.8) >= pf - 1e-15);
        if pf == 1.0 {
            prop_assert!(auc >= 0.8);
        }
    }

    #[test]
    fn prior_scaling_leaves_aggregates_unchanged(groups in groups_strategy(), weights in weights_strategy(), scale in 0.001f64..1000.0) {
        let c = di_curve(&partition(&groups)).unwrap();
        let a = ProportionPrior::custom(weights.clone()).unwrap();
        let b = ProportionPrior::custom(weights.iter().map(|w| w * scale).collect()).unwrap();
        for (x, y) in auc_di(&c, &a).unwrap().values.values().zip(auc_di(&c, &b).unwrap().values.values()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
        for (x, y) in pf_di(&c, &a, 0.8).unwrap().values.values().zip(pf_di(&c, &b, 0.8).unwrap().values.values()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }
}

#[test]
fn mean_di_is_not_transform_invariant() {
    let groups = vec![vec![1.0, 9.0], vec![5.0, 5.0]];
    let cubed: Vec<Vec<f64>> = groups.iter().map(|g| g.iter().map(|x| x * x * x + 7.0).collect()).collect();
    let before = mean_di(&partition(&groups)).unwrap();
    let after = mean_di(&partition(&cubed)).unwrap();
    assert_eq!(before.value("g0"), Some(1.0));
    assert_ne!(before.values, after.values);
}

#[test]
fn separated_groups_auc_matches_oracle() {
    let groups = vec![vec![1.0, 2.0, 3.0, 4.0], vec![5.0, 6.0, 7.0, 8.0]];
    let c = di_curve(&partition(&groups)).unwrap();
    let expected = common::curve(&groups);
    let auc = auc_di(&c, &ProportionPrior::flat()).unwrap();
    let oracle = common::weighted_mean(&expected[0], &[1.0; 100]);
    assert!((auc.value("g0").unwrap() - oracle).abs() <= 1e-12);
    // ranks 1..=4 of the pooled sample of 8 cover k = 0..=50; k <= 12 select
    // all of g0, then g0 loses one member per 12.5 points until k = 50
    let by_hand: f64 = (0..100)
        .map(|k: usize| match common::rank(k, 8) {
            0 | 1 => 1.0,
            r if r <= 4 => (5 - r) as f64 / 4.0,
            _ => 0.0,
        })
        .sum::<f64>()
        / 100.0;
    assert!((oracle - by_hand).abs() <= 1e-12);
}
