//! Property tests for the geometric primitives.

use mmi_core::lipschitz::caps_of_points;
use mmi_core::net::{cap_fraction, coverage_bound};
use mmi_core::sdp::{fantope_project, sym_eigen};
use mmi_core::stein::truncate;
use mmi_core::theory::z_bound;
use ndarray::Array2;
use proptest::prelude::*;

fn symmetric_matrix(d: usize) -> impl Strategy<Value = Array2<f64>> {
    proptest::collection::vec(-3.0..3.0f64, d * (d + 1) / 2).prop_map(move |upper| {
        let mut a = Array2::zeros((d, d));
        let mut it = upper.into_iter();
        for i in 0..d {
            for j in i..d {
                let v = it.next().unwrap();
                a[[i, j]] = v;
                a[[j, i]] = v;
            }
        }
        a
    })
}

proptest! {
    #[test]
    fn truncation_is_bounded_and_sign_preserving(v in -1e6..1e6f64, tau in 1e-6..1e3f64) {
        let t = truncate(v, tau);
        prop_assert!(t.abs() <= tau + 1e-12);
        prop_assert!(t * v >= 0.0);
        if v.abs() <= tau {
            prop_assert_eq!(t, v);
        }
    }

    #[test]
    fn cap_fraction_is_a_probability_monotone_in_delta(
        k in 1usize..6,
        r in 0.1..3.0f64,
        delta in 0.0..6.0f64,
    ) {
        let f = cap_fraction(k, r, delta).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        let f2 = cap_fraction(k, r, (delta + 0.3).min(2.0 * r)).unwrap();
        prop_assert!(f2 >= f - 1e-12);
    }

    #[test]
    fn coverage_bound_is_monotone_in_net_size(
        k in 1usize..4,
        eps in 0.05..2.0f64,
        n0 in 1usize..64,
    ) {
        let small = coverage_bound(n0, k, 1.0, eps).unwrap();
        let large = coverage_bound(n0 * 2, k, 1.0, eps).unwrap();
        prop_assert!((0.0..=1.0).contains(&small));
        prop_assert!(large >= small - 1e-12);
    }

    #[test]
    fn z_bound_is_monotone_in_both_errors(
        e1 in 0.0..2.0f64,
        e2 in 0.0..2.0f64,
        bump in 0.0..1.0f64,
    ) {
        let base = z_bound(e1, e2, 1.0, 0.1, 2, 1.0);
        prop_assert!(base >= 0.0);
        prop_assert!(z_bound(e1 + bump, e2, 1.0, 0.1, 2, 1.0) >= base);
        prop_assert!(z_bound(e1, e2 + bump, 1.0, 0.1, 2, 1.0) >= base);
    }

    #[test]
    fn fantope_projection_lands_in_the_set(a in symmetric_matrix(5), k in 1usize..5) {
        let p = fantope_project(&a, k).unwrap();
        let trace: f64 = (0..5).map(|i| p[[i, i]]).sum();
        prop_assert!((trace - k as f64).abs() < 1e-9);
        let dec = sym_eigen(&p).unwrap();
        for ev in dec.eigenvalues {
            prop_assert!((-1e-9..=1.0 + 1e-9).contains(&ev));
        }
    }

    #[test]
    fn caps_are_nonnegative_with_zero_diagonal(
        coords in proptest::collection::vec(-2.0..2.0f64, 8),
    ) {
        let points: Vec<Vec<f64>> = coords.chunks(2).map(|c| c.to_vec()).collect();
        let caps = caps_of_points(&points);
        for i in 0..points.len() {
            prop_assert_eq!(caps[[i, i]], 0.0);
            for j in 0..points.len() {
                prop_assert!(caps[[i, j]] >= 0.0);
                // triangle-ish consistency: cap(i,j) <= ||xi - xj||
                let dist: f64 = points[i]
                    .iter()
                    .zip(&points[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                prop_assert!(caps[[i, j]] <= dist + 1e-12);
            }
        }
    }
}
