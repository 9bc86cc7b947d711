mod common;

use common::*;
use fptriage::annotate::cohen_kappa;
use fptriage::retrieval::{cosine_similarity, EmbeddingVector};
use fptriage::stats::{cliffs_delta, compute_effort, mann_whitney_u, mann_whitney_u_with, Method};
use proptest::prelude::*;

fn distinct_pair(na: usize, nb: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    Just((0..na + nb).map(|i| i as f64 + 0.5).collect::<Vec<_>>()).prop_shuffle().prop_map(move |mut values| {
        let b = values.split_off(na);
        (values, b)
    })
}

fn sample() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50i32..50, 1..25).prop_map(|v| v.into_iter().map(f64::from).collect())
}

proptest! {
    #[test]
    fn kappa_is_symmetric(pairs in prop::collection::vec((0u8..3, 0u8..3), 1..80)) {
        let (a, b): (Vec<u8>, Vec<u8>) = pairs.into_iter().unzip();
        let ab = cohen_kappa(&a, &b).unwrap().kappa;
        let ba = cohen_kappa(&b, &a).unwrap().kappa;
        prop_assert!((ab - ba).abs() < 1e-12);
    }

    #[test]
    fn kappa_ignores_category_names(pairs in prop::collection::vec((0u8..3, 0u8..3), 1..80)) {
        let (a, b): (Vec<u8>, Vec<u8>) = pairs.into_iter().unzip();
        let rename = |v: &[u8]| v.iter().map(|x| ["zeta", "alpha", "mid"][*x as usize]).collect::<Vec<_>>();
        let original = cohen_kappa(&a, &b).unwrap().kappa;
        let renamed = cohen_kappa(&rename(&a), &rename(&b)).unwrap().kappa;
        prop_assert!((original - renamed).abs() < 1e-12);
    }

    #[test]
    fn mwu_swap_invariance(a in sample(), b in sample()) {
        let ab = mann_whitney_u(&a, &b).unwrap();
        let ba = mann_whitney_u(&b, &a).unwrap();
        prop_assert!((ab.p_value - ba.p_value).abs() < 1e-12);
        prop_assert_eq!(ab.statistic + ba.statistic, (a.len() * b.len()) as f64);
    }

    #[test]
    fn exact_and_normal_agree_at_six_by_six((a, b) in distinct_pair(6, 6)) {
        let exact = mann_whitney_u_with(&a, &b, Method::Exact).unwrap().p_value;
        let normal = mann_whitney_u_with(&a, &b, Method::Normal).unwrap().p_value;
        prop_assert!((exact - normal).abs() <= 0.02, "exact {} normal {}", exact, normal);
    }

    #[test]
    fn cliff_is_antisymmetric(a in sample(), b in sample()) {
        let ab = cliffs_delta(&a, &b).unwrap().statistic;
        let ba = cliffs_delta(&b, &a).unwrap().statistic;
        prop_assert_eq!(ab, -ba);
        prop_assert!((-1.0..=1.0).contains(&ab));
    }

    #[test]
    fn cliff_survives_monotone_transforms(a in sample(), b in sample()) {
        let f = |v: &[f64]| v.iter().map(|x| (x / 10.0).exp() * 3.0 + 7.0).collect::<Vec<_>>();
        prop_assert_eq!(cliffs_delta(&a, &b).unwrap().statistic, cliffs_delta(&f(&a), &f(&b)).unwrap().statistic);
    }

    #[test]
    fn cosine_ignores_positive_scaling(
        u in prop::collection::vec(-10.0f32..10.0, 8),
        v in prop::collection::vec(-10.0f32..10.0, 8),
        scale in 0.01f32..100.0,
    ) {
        prop_assume!(u.iter().any(|x| x.abs() > 1e-3) && v.iter().any(|x| x.abs() > 1e-3));
        let scaled: Vec<f32> = u.iter().map(|x| x * scale).collect();
        let base = cosine_similarity(&EmbeddingVector::new(u).unwrap(), &EmbeddingVector::new(v.clone()).unwrap()).unwrap();
        let other = cosine_similarity(&EmbeddingVector::new(scaled).unwrap(), &EmbeddingVector::new(v).unwrap()).unwrap();
        prop_assert!((base - other).abs() < 1e-5);
    }

    #[test]
    fn adding_a_comment_never_lowers_effort(offsets in prop::collection::vec(0i64..100_000, 0..8), extra in 0i64..200_000, who in 0usize..4) {
        let authors = ["reporter", "dev1", "dev2", "dev3"];
        let at = |secs: i64| (ts("2022-01-01T00:00:00Z") + chrono::Duration::seconds(secs)).to_rfc3339();
        let comments: Vec<_> = offsets.iter().enumerate().map(|(i, s)| comment(authors[i % 4], &at(*s), i % 4 == 0)).collect();
        let mut more = comments.clone();
        more.push(comment(authors[who], &at(extra), who == 0));
        for (before, after) in [
            (bugzilla("1", Some("INVALID"), "2022-01-01T00:00:00Z", comments.clone()), bugzilla("1", Some("INVALID"), "2022-01-01T00:00:00Z", more.clone())),
            (syzkaller("1", "invalid", "2022-01-01T00:00:00Z", vec![comments.clone()]), syzkaller("1", "invalid", "2022-01-01T00:00:00Z", vec![more.clone()])),
        ] {
            let (x, y) = (compute_effort(&before).unwrap(), compute_effort(&after).unwrap());
            prop_assert!(y.participants >= x.participants);
            prop_assert!(y.comments > x.comments);
            prop_assert!(y.time_to_close_hours >= x.time_to_close_hours);
        }
    }
}
