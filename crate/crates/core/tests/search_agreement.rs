use std::ops::ControlFlow;

use proptest::prelude::*;
use twosided::search::{enumerate_complete_matchings, find_matching_with, SearchOptions, SearchSpec, SearchStatus};
use twosided::{Instance, Side};

fn market(max_n: usize, vmax: u64) -> impl Strategy<Value = Instance> {
    (1usize..=max_n, 1usize..=max_n).prop_flat_map(move |(nl, nr)| {
        (
            prop::collection::vec(1..=nr, nl),
            prop::collection::vec(1..=nl, nr),
            prop::collection::vec(prop::collection::vec(0..=vmax, nr), nl),
            prop::collection::vec(prop::collection::vec(0..=vmax, nl), nr),
        )
            .prop_map(|(dl, dr, vl, vr)| Instance::new(dl, dr, vl, vr).unwrap())
    })
}

fn constraints(inst: &Instance) -> impl Strategy<Value = SearchSpec> {
    let (nl, nr) = (inst.n_left(), inst.n_right());
    (
        prop::option::of(0usize..=2),
        prop::option::of(0usize..=2),
        prop::option::of(0usize..=1),
        prop::option::of(0usize..=1),
        prop::collection::vec((any::<bool>(), 0usize..8, 0u64..12), 0..3),
    )
        .prop_map(move |(sdl, sdr, efl, efr, floors)| {
            let mut spec = SearchSpec::complete();
            if let Some(c) = sdl {
                spec = spec.with_sd_ef(Side::Left, c);
            }
            if let Some(c) = sdr {
                spec = spec.with_sd_ef(Side::Right, c);
            }
            if let Some(c) = efl {
                spec = spec.with_ef(Side::Left, c);
            }
            if let Some(c) = efr {
                spec = spec.with_ef(Side::Right, c);
            }
            for (left, a, min) in floors {
                let (side, n) = if left { (Side::Left, nl) } else { (Side::Right, nr) };
                spec = spec.with_floor(side, a % n, min);
            }
            spec
        })
}

fn brute_force_feasible(inst: &Instance, spec: &SearchSpec) -> bool {
    let mut found = false;
    enumerate_complete_matchings(inst, u64::MAX, |m| {
        if spec.is_satisfied_by(inst, m) {
            found = true;
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })
    .unwrap();
    found
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn pruned_search_agrees_with_enumeration(
        (inst, spec) in market(4, 5).prop_flat_map(|i| { let s = constraints(&i); (Just(i), s) })
    ) {
        let expected = brute_force_feasible(&inst, &spec);
        for workers in [1, 3] {
            let out = find_matching_with(&inst, &spec, &SearchOptions { propagate: true, workers }).unwrap();
            prop_assert_eq!(out.status == SearchStatus::Found, expected);
            prop_assert_ne!(out.status, SearchStatus::BudgetExceeded);
            if let Some(m) = &out.witness {
                prop_assert!(spec.is_satisfied_by(&inst, m));
            }
        }
        let plain = find_matching_with(&inst, &spec, &SearchOptions { propagate: false, workers: 1 }).unwrap();
        prop_assert_eq!(plain.status == SearchStatus::Found, expected);
    }

    #[test]
    fn pruned_search_agrees_with_tied_values(
        (inst, spec) in market(5, 1).prop_flat_map(|i| { let s = constraints(&i); (Just(i), s) })
    ) {
        let expected = brute_force_feasible(&inst, &spec);
        let out = find_matching_with(&inst, &spec, &SearchOptions::default()).unwrap();
        prop_assert_eq!(out.status == SearchStatus::Found, expected);
    }

    #[test]
    fn pruned_search_agrees_with_shared_left_values(
        (inst, spec) in market(5, 4)
            .prop_map(|i| {
                let row = i.row(Side::Left, 0).to_vec();
                Instance::new(i.caps(Side::Left).to_vec(), i.caps(Side::Right).to_vec(), vec![row; i.n_left()], i.valuations(Side::Right).to_vec()).unwrap()
            })
            .prop_flat_map(|i| {
                let s = constraints(&i);
                (Just(i), s, 0u64..12)
            })
            .prop_map(|(i, s, floor)| {
                let s = s.with_side_floor(&i, Side::Left, floor);
                (i, s)
            })
    ) {
        let expected = brute_force_feasible(&inst, &spec);
        let out = find_matching_with(&inst, &spec, &SearchOptions::default()).unwrap();
        prop_assert_eq!(out.status == SearchStatus::Found, expected);
    }
}
