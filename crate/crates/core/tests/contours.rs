use glauber_core::contours::{extract, extract_with, reconstruct, sign_changes, star_crossing, Splitting};
use glauber_core::gibbs::{BoundaryCondition, SpinConfig};
use glauber_core::lattice::{Rect, Region};
use proptest::prelude::*;

fn rect(w: u32, h: u32) -> Region {
    Region::from_rect(Rect::with_size(w, h).unwrap())
}

fn cols(x0: i32, x1: i32, y0: i32, y1: i32) -> Region {
    Region::from_rect(Rect::new(x0, y0, x1, y1).unwrap())
}

/// Configurations where the bridge fails: no minus E-W *-crossing of rows
/// `1..=h`, yet the open contour stays below `h + 1/2`.
fn bridge_failures(split: Splitting) -> usize {
    let r = rect(3, 3);
    let bc = BoundaryCondition::per_side(&r, [-1, -1, 1, -1]).unwrap();
    let mut bad = 0;
    for h in 1..=2 {
        let strip = cols(1, 3, 1, h);
        let west = cols(1, 1, 1, h);
        let east = cols(3, 3, 1, h);
        for k in 0..1u64 << 9 {
            let c = SpinConfig::from_index(&r, k);
            if star_crossing(&c, -1, &west, &east, &strip).unwrap() {
                continue;
            }
            let set = extract_with(&c, &bc, split).unwrap();
            assert_eq!(set.open.len(), 1);
            if set.open[0].height() < f64::from(h) + 0.5 {
                bad += 1;
            }
        }
    }
    bad
}

#[test]
fn event_bridge_holds_for_the_default_splitting() {
    assert_eq!(bridge_failures(Splitting::default()), 0);
}

#[test]
fn event_bridge_needs_the_matching_diagonal() {
    assert!(bridge_failures(Splitting::NorthEast) > 0);
}

fn roundtrip_exhaustive(r: &Region, bc: &BoundaryCondition, split: Splitting) {
    let m = sign_changes(bc, r).unwrap();
    for k in 0..1u64 << r.len() {
        let c = SpinConfig::from_index(r, k);
        let set = extract_with(&c, bc, split).unwrap();
        assert_eq!(reconstruct(&set, bc).unwrap(), c, "state {k:#x}");
        assert_eq!(2 * set.open.len(), m);
        // every separating bond is used once
        let total: usize = set.all().map(|c| c.len()).sum();
        assert_eq!(total, set.bond_set().len());
    }
}

#[test]
fn roundtrip_plus_3x3() {
    let r = rect(3, 3);
    let bc = BoundaryCondition::uniform(&r, 1);
    roundtrip_exhaustive(&r, &bc, Splitting::NorthEast);
    roundtrip_exhaustive(&r, &bc, Splitting::NorthWest);
}

#[test]
fn roundtrip_mmpm_2x4() {
    let r = rect(2, 4);
    let bc = BoundaryCondition::per_side(&r, [-1, -1, 1, -1]).unwrap();
    roundtrip_exhaustive(&r, &bc, Splitting::NorthEast);
    roundtrip_exhaustive(&r, &bc, Splitting::NorthWest);
}

#[test]
fn roundtrip_mixed_bc_3x3() {
    let r = rect(3, 3);
    let bc = BoundaryCondition::from_fn(&r, |s| if (s.x + 2 * s.y) % 3 == 0 { -1 } else { 1 });
    roundtrip_exhaustive(&r, &bc, Splitting::NorthEast);
}

#[test]
fn empty_set_reconstructs_all_plus() {
    let r = rect(3, 3);
    let bc = BoundaryCondition::uniform(&r, 1);
    let set = extract(&SpinConfig::all_plus(&r), &bc).unwrap();
    assert_eq!(set.all().count(), 0);
    assert_eq!(reconstruct(&set, &bc).unwrap(), SpinConfig::all_plus(&r));
}

proptest! {
    #[test]
    fn roundtrip_random_4x5(idx in 0u64..1 << 20, bcs in prop::collection::vec(prop::bool::ANY, 18)) {
        let r = rect(4, 5);
        let mut it = bcs.into_iter();
        let bc = BoundaryCondition::from_fn(&r, |_| if it.next().unwrap() { 1 } else { -1 });
        let c = SpinConfig::from_index(&r, idx);
        let set = extract(&c, &bc).unwrap();
        prop_assert_eq!(reconstruct(&set, &bc).unwrap(), c);
        prop_assert_eq!(2 * set.open.len(), sign_changes(&bc, &r).unwrap());
    }
}
