mod common;

use common::{appendix_rows, bh_oracle, lower_tail, upper_tail};
use proptest::prelude::*;
use token_bias::paired_stats::*;

#[test]
fn appendix_z_values() {
    let rows = appendix_rows();
    assert_eq!(rows.len(), 324);
    for r in &rows {
        assert_eq!(r.n_star, r.n12 + r.n21, "{r:?}");
        let z = mcnemar_z(&ContingencyTable::discordant(r.n12, r.n21));
        assert!((z - r.z).abs() < 1e-5, "{r:?}: computed {z}");
    }
}

#[test]
fn appendix_tables_cover_every_hypothesis() {
    let rows = appendix_rows();
    for table in ["h1", "h2", "h3", "h4", "h5_sets_vs_framing", "h5_gold_vs_random", "h6"] {
        assert!(rows.iter().any(|r| r.table == table), "{table}");
    }
    // Every rejected H2 row has n12 > n21; one unrejected row has z > 0.
    assert!(rows.iter().filter(|r| r.table == "h2" && r.reject).all(|r| r.n12 > r.n21 && r.z < 0.0));
    assert_eq!(rows.iter().filter(|r| r.table == "h2" && r.z > 0.0).count(), 1);
}

#[test]
fn anchors() {
    let t = normal_test(&ContingencyTable::discordant(0, 1), TestDirection::Less);
    assert!((t.p_value - 0.158655).abs() < 1e-6);
    assert_eq!(t.z_stat, 1.0);
    let e = exact_test(&ContingencyTable::discordant(1, 9), TestDirection::Less);
    assert!((e.p_value - 11.0 / 1024.0).abs() < 1e-15);
    let s = select_test(&ContingencyTable::discordant(5, 6), TestDirection::Less);
    assert_eq!(s.method, TestMethod::Normal);
    let s = select_test(&ContingencyTable::discordant(5, 5), TestDirection::TwoSided);
    assert_eq!((s.method, s.p_value), (TestMethod::Exact, 1.0));
    let big = select_test(&ContingencyTable::discordant(4, 160), TestDirection::Less);
    assert!(big.p_value < 1e-12 && format!("{:.6}", big.p_value) == "0.000000");
}

#[test]
fn exact_oracle_all_small_tables() {
    let mut cases = 0;
    for n_star in 0..=20u64 {
        for n21 in 0..=n_star {
            let t = ContingencyTable::discordant(n_star - n21, n21);
            let less = exact_test(&t, TestDirection::Less).p_value;
            let greater = exact_test(&t, TestDirection::Greater).p_value;
            let two = exact_test(&t, TestDirection::TwoSided).p_value;
            let (lo, up) = if n_star == 0 { (1.0, 1.0) } else { (lower_tail(n_star, n21), upper_tail(n_star, n21)) };
            assert!((less - up).abs() < 1e-12, "{t:?}");
            assert!((greater - lo).abs() < 1e-12, "{t:?}");
            assert!((two - (2.0 * lo.min(up)).min(1.0)).abs() < 1e-12, "{t:?}");
            cases += 1;
        }
    }
    assert_eq!(cases, 231);
}

proptest! {
    #[test]
    fn z_antisymmetric(n12 in 0u64..5000, n21 in 0u64..5000) {
        let t = ContingencyTable::discordant(n12, n21);
        prop_assert_eq!(mcnemar_z(&t.swapped()), -mcnemar_z(&t));
    }

    #[test]
    fn p_values_are_probabilities(n12 in 0u64..400, n21 in 0u64..400) {
        let t = ContingencyTable::discordant(n12, n21);
        for d in [TestDirection::Less, TestDirection::Greater, TestDirection::TwoSided] {
            let r = select_test(&t, d);
            prop_assert!((0.0..=1.0).contains(&r.p_value));
            prop_assert_eq!(r.n_star, n12 + n21);
        }
    }

    #[test]
    fn less_p_nonincreasing_in_n21(n12 in 0u64..60, n21 in 0u64..60) {
        let a = select_test(&ContingencyTable::discordant(n12, n21), TestDirection::Less).p_value;
        let b = select_test(&ContingencyTable::discordant(n12, n21 + 1), TestDirection::Less).p_value;
        // the switch between exact and normal tests may not be monotone;
        // within one test family it must be
        let same_family = (n12 + n21 <= EXACT_MAX_DISCORDANT) == (n12 + n21 + 1 <= EXACT_MAX_DISCORDANT);
        if same_family {
            prop_assert!(b <= a + 1e-15, "{} then {}", a, b);
        }
    }

    #[test]
    fn bh_matches_oracle(p in prop::collection::vec(0.0f64..1.0, 1..=12), alpha in 0.001f64..0.5) {
        let got: Vec<bool> = bh_procedure(&p, alpha).iter().map(|d| d.reject).collect();
        prop_assert_eq!(got, bh_oracle(&p, alpha));
    }

    #[test]
    fn bh_monotone_in_alpha(p in prop::collection::vec(0.0f64..1.0, 1..=12), a in 0.001f64..0.5, b in 0.001f64..0.5) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let small = bh_procedure(&p, lo);
        let large = bh_procedure(&p, hi);
        for (s, l) in small.iter().zip(&large) {
            prop_assert!(!s.reject || l.reject);
        }
    }

    #[test]
    fn bh_adjusted_consistent(p in prop::collection::vec(0.0f64..1.0, 1..=12), alpha in 0.001f64..0.5) {
        for d in bh_procedure(&p, alpha) {
            prop_assert!(d.adjusted_p >= d.raw_p - 1e-15);
            prop_assert!(d.adjusted_p <= 1.0);
            prop_assert_eq!(d.reject, d.adjusted_p <= alpha + 1e-12);
        }
    }
}
