use glauber_core::dynamics::{run, ChainSpec, CoupledEnsemble, EventStream};
use glauber_core::exact::ExactModel;
use glauber_core::gibbs::{energy, format_bc, leq, local_field, parse_bc, BoundaryCondition, SpinConfig};
use glauber_core::lattice::{boundary, enlarge, format_region, parse_region, Rect, Region, Site};
use glauber_core::schedules::{format_schedule, parse_schedule, schedule_q_from_r, schedule_stacked};
use proptest::prelude::*;

fn rect(w: u32, h: u32) -> Region {
    Region::from_rect(Rect::with_size(w, h).unwrap())
}

fn bc_from_bits(region: &Region, bits: u64) -> BoundaryCondition {
    let mut k = 0;
    BoundaryCondition::from_fn(region, |_| {
        k += 1;
        if bits >> (k - 1) & 1 == 1 {
            1
        } else {
            -1
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grand_coupling_keeps_order(
        seed in any::<u64>(),
        lo in any::<u64>(),
        up in any::<u64>(),
        bc_lo in any::<u64>(),
        bc_up in any::<u64>(),
        beta in 0.0f64..1.5,
    ) {
        let r = rect(5, 5);
        let lo_c = SpinConfig::from_index(&r, lo & 0x1ff_ffff);
        let hi_c = SpinConfig::from_index(&r, (lo | up) & 0x1ff_ffff);
        let lo_b = bc_from_bits(&r, bc_lo);
        let hi_b = bc_from_bits(&r, bc_lo | bc_up);
        prop_assert!(leq(&lo_c, &hi_c) && lo_b.leq(&hi_b));
        let ens = CoupledEnsemble {
            seed,
            region: r.clone(),
            beta,
            chains: vec![
                ChainSpec { init: lo_c, bc: lo_b, schedule: None },
                ChainSpec { init: hi_c, bc: hi_b, schedule: None },
            ],
        };
        let taps: Vec<f64> = (1..=8).map(|k| f64::from(k) * 0.5).collect();
        let out = run(&ens, 4.0, &taps).unwrap();
        for t in &out.taps {
            prop_assert!(leq(&t[0], &t[1]));
        }
    }

    #[test]
    fn energy_flip_identity(idx in 0u64..1 << 12, bits in any::<u64>(), i in 0usize..12) {
        let r = rect(3, 4);
        let bc = bc_from_bits(&r, bits);
        let c = SpinConfig::from_index(&r, idx);
        let mut d = c.clone();
        d.set(i, -c.get(i));
        let diff = energy(&d, &bc).unwrap() - energy(&c, &bc).unwrap();
        let want = 2.0 * f64::from(c.get(i)) * f64::from(local_field(&c, &bc, i));
        prop_assert!((diff - want).abs() < 1e-12);
    }

    #[test]
    fn stream_is_deterministic(seed in any::<u64>()) {
        let r = rect(4, 4);
        let a: Vec<_> = EventStream::new(seed, &r).take(50).collect();
        let b: Vec<_> = EventStream::new(seed, &r).take(50).collect();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn region_text_roundtrip(sites in prop::collection::btree_set((-5i32..5, -5i32..5), 1..20)) {
        let r = Region::from_sites(sites.into_iter().map(|(x, y)| Site::new(x, y))).unwrap();
        prop_assert_eq!(parse_region(&format_region(&r)).unwrap(), r);
    }

    #[test]
    fn bc_text_roundtrip(bits in any::<u64>(), w in 1u32..5, h in 1u32..5) {
        let r = rect(w, h);
        let bc = bc_from_bits(&r, bits);
        prop_assert_eq!(parse_bc(&format_bc(&bc, &r), &r).unwrap(), bc);
    }

    #[test]
    fn boundary_and_enlarge(w in 1u32..6, h in 1u32..6, l in 0u32..3) {
        let r = rect(w, h);
        for s in boundary(&r) {
            prop_assert!(!r.contains(s));
            prop_assert!(s.neighbors().iter().any(|&n| r.contains(n)));
        }
        prop_assert!(r.is_subset_of(&enlarge(&r, l).unwrap()));
    }

    #[test]
    fn schedule_text_roundtrip(l in 2u32..40, t in 0.1f64..50.0) {
        let s = schedule_q_from_r(l, 0.25, t, 1).unwrap().schedule;
        prop_assert_eq!(parse_schedule(&format_schedule(&s)).unwrap(), s);
        if let Ok(s) = schedule_stacked(l, 0.25, t) {
            prop_assert_eq!(parse_schedule(&format_schedule(&s)).unwrap(), s);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn semigroup_and_mass(bits in any::<u64>(), beta in 0.0f64..1.2, s in 0.0f64..2.0, t in 0.0f64..2.0) {
        let r = rect(2, 3);
        let m = ExactModel::build(&r, &bc_from_bits(&r, bits), beta).unwrap();
        let mu = m.delta(m.all_minus());
        let a = m.evolve_full(&m.evolve_full(&mu, s).unwrap(), t).unwrap();
        let b = m.evolve_full(&mu, s + t).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-10);
        }
        prop_assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        prop_assert!(b.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn gibbs_measure_is_monotone_in_bc(bits in any::<u64>(), up in any::<u64>(), beta in 0.0f64..1.2) {
        let r = rect(2, 3);
        let lo = ExactModel::build(&r, &bc_from_bits(&r, bits), beta).unwrap();
        let hi = ExactModel::build(&r, &bc_from_bits(&r, bits | up), beta).unwrap();
        prop_assert!(glauber_core::exact::dominates(hi.pi(), lo.pi(), 6).unwrap());
    }
}
