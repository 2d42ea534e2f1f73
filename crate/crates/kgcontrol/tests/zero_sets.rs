use std::f64::consts::PI;

use kgcontrol::state::State;
use kgcontrol::zero_sets::{
    inscribed_radius, inscribed_radius_brute_force, state_zero_mask, zero_mask, zero_measure, ZeroMask,
};
use kgcontrol::{make_field, TorusField, TorusGrid};
use proptest::prelude::*;

fn grid(dim: usize, n: usize) -> TorusGrid {
    TorusGrid::new(dim, n).unwrap()
}

fn masked_points(mask: &ZeroMask) -> Vec<usize> {
    (0..mask.grid().len()).filter(|&i| mask.values()[i]).collect()
}

#[test]
fn sine_vanishes_at_two_points() {
    let g = grid(1, 64);
    let mask = zero_mask(&make_field(&g, "sin(x)").unwrap(), 1e-9);
    assert_eq!(masked_points(&mask), vec![0, 32]);
    assert!(inscribed_radius(&mask) < 2.0 * g.spacing());
}

#[test]
fn arc_complement_is_zero_on_the_arc() {
    let g = grid(1, 128);
    let len = 2.0;
    let f = make_field(&g, "1 - arc(0, 2)").unwrap();
    let mask = zero_mask(&f, 1e-6);
    for i in 0..g.len() {
        let x = g.point(i)[0];
        assert_eq!(mask.values()[i], x <= len + 1e-12, "x = {x}");
    }
    let r = inscribed_radius(&mask);
    assert!((r - len / 2.0).abs() <= g.spacing(), "{r}");
}

#[test]
fn constant_field_has_no_zeros() {
    let g = grid(2, 32);
    let mask = zero_mask(&TorusField::constant(&g, 1.0), 1e-6);
    assert!(mask.is_empty());
    assert_eq!(zero_measure(&mask), 0.0);
    assert_eq!(inscribed_radius(&mask), 0.0);
}

#[test]
fn vanishing_field_is_flagged() {
    let g = grid(1, 16);
    let mask = zero_mask(&TorusField::zeros(&g), 1e-6);
    assert!(mask.is_full() && mask.is_degenerate());
    assert_eq!(inscribed_radius(&mask), PI);
}

#[test]
fn measures() {
    let g = grid(1, 128);
    let half = zero_mask(&make_field(&g, "1 - arc(1, 1 + pi)").unwrap(), 1e-6);
    assert!((zero_measure(&half) - PI).abs() <= g.spacing());

    let g2 = grid(2, 128);
    let disc = zero_mask(&make_field(&g2, "1 - ball(pi, pi, 1)").unwrap(), 1e-6);
    // Perimeter band of one cell width.
    let band = 2.0 * PI * 1.0 * g2.spacing() * 2.0;
    assert!((zero_measure(&disc) - PI).abs() <= band, "{}", zero_measure(&disc));
}

#[test]
fn ball_radius_matches_brute_force() {
    let g = grid(2, 64);
    let mask = zero_mask(&make_field(&g, "1 - ball(2, 3, 0.8)").unwrap(), 1e-6);
    let fast = inscribed_radius(&mask);
    let slow = inscribed_radius_brute_force(&mask);
    assert!((fast - slow).abs() < 1e-12, "{fast} vs {slow}");
    assert!((fast - 0.8).abs() <= 2.0 * g.spacing(), "{fast}");
}

#[test]
fn state_masks() {
    let g = grid(1, 64);
    let s = |a: &str, b: &str| State::new(make_field(&g, a).unwrap(), make_field(&g, b).unwrap()).unwrap();
    assert!(state_zero_mask(&s("sin(x)", "cos(x)"), 1e-9).is_empty());
    let profile_only = state_zero_mask(&s("sin(x)", "0"), 1e-9);
    assert_eq!(masked_points(&profile_only), vec![0, 32]);

    let (a, b) = ("1 - arc(0.5, 2)", "1 - arc(3, 5)");
    let joint = state_zero_mask(&s(a, b), 1e-6);
    let separate = zero_mask(&make_field(&g, a).unwrap(), 1e-6).intersection(&zero_mask(&make_field(&g, b).unwrap(), 1e-6));
    assert_eq!(joint.symmetric_difference_count(&separate), 0);
    assert!(joint.is_empty());

    let (a, b) = ("1 - arc(0.5, 3)", "1 - arc(2, 5)");
    let joint = state_zero_mask(&s(a, b), 1e-6);
    for i in 0..g.len() {
        let x = g.point(i)[0];
        assert_eq!(joint.values()[i], (2.0..=3.0).contains(&x), "x = {x}");
    }
}

fn random_mask(g: &TorusGrid, bits: &[bool]) -> ZeroMask {
    ZeroMask::from_bools(g, bits.to_vec(), 0.0)
}

proptest! {
    #[test]
    fn threshold_monotonicity(a in 0.0f64..0.5, b in 0.0f64..0.5, phase in 0.0f64..6.0) {
        let g = grid(1, 64);
        let f = TorusField::from_fn(&g, |x| (x[0] + phase).sin() * (2.0 * x[0]).cos());
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(zero_mask(&f, lo).is_subset_of(&zero_mask(&f, hi)));
    }

    #[test]
    fn radius_fits_inside_measure(cx in 0.0f64..6.2, cy in 0.0f64..6.2, r in 0.2f64..1.5) {
        let g = grid(2, 48);
        let src = format!("1 - ball({cx}, {cy}, {r})");
        let mask = zero_mask(&make_field(&g, &src).unwrap(), 1e-6);
        let radius = inscribed_radius(&mask);
        prop_assert!(radius <= (zero_measure(&mask) / PI).sqrt() + g.spacing());
    }

    #[test]
    fn radius_is_translation_invariant(
        bits in proptest::collection::vec(proptest::bool::weighted(0.7), 24 * 24),
        sx in 0usize..24,
        sy in 0usize..24,
    ) {
        let g = grid(2, 24);
        let mask = random_mask(&g, &bits);
        let shifted: Vec<bool> = (0..g.len())
            .map(|i| {
                let m = g.multi_index(i);
                bits[g.flat_index(&[(m[0] + sx) as i64, (m[1] + sy) as i64])]
            })
            .collect();
        let moved = random_mask(&g, &shifted);
        prop_assert_eq!(inscribed_radius(&mask), inscribed_radius(&moved));
        prop_assert!((inscribed_radius(&mask) - inscribed_radius_brute_force(&mask)).abs() < 1e-12);
    }
}
