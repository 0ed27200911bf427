use inclusion_core::linalg::point;
use inclusion_core::setcalc::{e_s_set, e_set, largest_invariant_subset, sublevel_band, w_zero_set, BandOptions, GridSet};
use inclusion_core::sysconfig::load_builtin;
use proptest::prelude::*;

fn grid() -> GridSet {
    GridSet::full(&[-1.0, 0.0], &[1.0, 3.0], &[9, 7]).unwrap()
}

fn masked(bits: &[bool]) -> GridSet {
    grid().with_mask(bits.to_vec()).unwrap()
}

fn bits() -> impl Strategy<Value = Vec<bool>> {
    proptest::collection::vec(any::<bool>(), 63)
}

proptest! {
    #[test]
    fn text_export_round_trips(b in bits()) {
        let g = masked(&b);
        prop_assert_eq!(GridSet::from_text(&g.to_text()).unwrap(), g);
    }

    #[test]
    fn boolean_algebra(a in bits(), b in bits()) {
        let (a, b) = (masked(&a), masked(&b));
        let i = a.intersect(&b).unwrap();
        let u = a.union(&b).unwrap();
        prop_assert!(i.is_subset_of(&a).unwrap() && a.is_subset_of(&u).unwrap());
        prop_assert_eq!(i.count() + u.count(), a.count() + b.count());
        let d = a.difference(&b).unwrap();
        prop_assert_eq!(d.intersect(&b).unwrap().count(), 0);
        prop_assert_eq!(d.union(&i).unwrap(), a.clone());
        prop_assert_eq!(a.excess_over(&b).unwrap(), d.count());
    }

    #[test]
    fn dilation_is_extensive_and_monotone(a in bits(), b in bits()) {
        let (a, b) = (masked(&a), masked(&b));
        prop_assert!(a.is_subset_of(&a.dilate(1)).unwrap());
        let ab = a.intersect(&b).unwrap();
        prop_assert!(ab.dilate(1).is_subset_of(&a.dilate(1)).unwrap());
        prop_assert_eq!(a.dilate(1).dilate(1), a.dilate(2));
    }

    #[test]
    fn components_partition_the_set(a in bits()) {
        let a = masked(&a);
        let comps = a.connected_components();
        let total: usize = comps.iter().map(GridSet::count).sum();
        prop_assert_eq!(total, a.count());
        for c in &comps {
            prop_assert!(c.is_subset_of(&a).unwrap());
        }
    }
}

#[test]
fn malformed_text_is_rejected() {
    let text = grid().to_text();
    let truncated: String = text.lines().take(2).collect::<Vec<_>>().join("\n");
    assert!(GridSet::from_text(&truncated).is_err());
    assert!(GridSet::from_text("not a grid").is_err());
}

#[test]
fn invariant_subset_is_a_fixed_point_inside_its_input() {
    let l = load_builtin("damped-oscillator", &[]).unwrap();
    let s = GridSet::cube(&[-1.5, -1.5], &[1.5, 1.5], 60).unwrap();
    let opts = l.invariance_options();
    let (m, _) = largest_invariant_subset(&l.system, &s, &opts).unwrap();
    assert!(m.is_subset_of(&s).unwrap());
    assert!(m.get(m.cell_of(&point(&[0.01, 0.01])).unwrap()));
    let (again, _) = largest_invariant_subset(&l.system, &m, &opts).unwrap();
    assert_eq!(again, m);
}

#[test]
fn band_and_zero_sets_on_rld() {
    let l = load_builtin("rld", &[]).unwrap();
    let v = l.v().unwrap();
    let band = sublevel_band(v, &l.s, 0.02, 0.08, BandOptions::default()).unwrap();
    // V = x²/2 in [0.02, 0.08] means 0.2 ≤ |x| ≤ 0.4, up to one cell
    let w = l.s.max_cell_width();
    for c in band.members() {
        let x = band.center(c)[0].abs();
        assert!(x >= 0.2 - w && x <= 0.4 + w, "{x}");
    }
    assert!(band.contains_point(&point(&[0.3])) && band.contains_point(&point(&[-0.3])));
    let zero = w_zero_set(l.w().unwrap(), &l.s, 1e-9).unwrap();
    assert!(zero.count() >= 1 && zero.members().all(|c| zero.center(c)[0].abs() <= w));
    // A ≠ 0 here, so only the subdifferential form applies
    assert!(matches!(e_set(&l.system, v, &l.s, l.tau()), Err(inclusion_core::Error::Unsupported(_))));
    let e = e_s_set(&l.system, v, &l.s, l.tau()).unwrap();
    assert!(e.count() >= 1 && e.members().all(|c| e.center(c)[0].abs() <= w));
}
