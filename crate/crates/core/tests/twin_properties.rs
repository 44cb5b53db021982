use chessboard::*;
use proptest::prelude::*;

fn arb_path(max_len: usize) -> impl Strategy<Value = Path> {
    prop::collection::vec(prop::bool::ANY, 1..=max_len).prop_map(|bits| {
        Path::new(
            bits.into_iter()
                .map(|b| if b { Direction::Plus } else { Direction::Minus })
                .collect(),
        )
        .unwrap()
    })
}

fn arb_legs() -> impl Strategy<Value = LegSeq> {
    (prop::bool::ANY, prop::collection::vec(1usize..6, 1..12)).prop_map(|(plus, lens)| {
        let mut d = if plus { Direction::Plus } else { Direction::Minus };
        let legs = lens
            .into_iter()
            .map(|len| {
                let leg = Leg::new(d, len);
                d = -d;
                leg
            })
            .collect();
        LegSeq::new(legs).unwrap()
    })
}

/// Twin built the generic way: swap the legs of every pair of the extended path.
fn pair_swap_twin(path: &Path) -> Path {
    let legs = extend_even(path).to_legs().into_inner();
    let swapped: Vec<Leg> = legs.chunks(2).flat_map(|p| [p[1], p[0]]).collect();
    LegSeq::new(swapped).unwrap().to_path()
}

fn sorted_lengths(p: &Path) -> Vec<usize> {
    let mut v: Vec<_> = p.to_legs().legs().iter().map(|l| l.len).collect();
    v.sort();
    v
}

#[test]
fn zero_corner_row_agrees_with_generic_rule() {
    for n in 1..=8 {
        for d in Direction::BOTH {
            let p = Path::new(vec![d; n]).unwrap();
            assert_eq!(orthogonal_twin(&p), pair_swap_twin(&p));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn legs_round_trip(p in arb_path(40)) {
        let legs = p.to_legs();
        prop_assert_eq!(legs.to_path(), p.clone());
        prop_assert_eq!(p.corner_count() + 1, legs.len());
        prop_assert_eq!(legs.total_steps(), p.len());
    }

    #[test]
    fn steps_round_trip(legs in arb_legs()) {
        prop_assert_eq!(legs.to_path().to_legs(), legs);
    }

    #[test]
    fn positions_stay_in_light_cone(p in arb_path(40)) {
        let pos = p.positions();
        prop_assert_eq!(pos.len(), p.len() + 1);
        prop_assert!(pos.iter().all(|s| s.in_light_cone()));
    }

    #[test]
    fn text_round_trip(p in arb_path(40)) {
        prop_assert_eq!(p.to_string().parse::<Path>().unwrap(), p);
    }

    #[test]
    fn twin_matches_generic_pair_swap(p in arb_path(40)) {
        prop_assert_eq!(orthogonal_twin(&p), pair_swap_twin(&p));
    }

    #[test]
    fn twin_structure(p in arb_path(40)) {
        let ext = extend_even(&p);
        let twin = orthogonal_twin(&p);
        let r = p.corner_count();
        prop_assert_eq!(ext.corner_count() % 2, 1);
        prop_assert_eq!(sorted_lengths(&twin), sorted_lengths(&ext));
        prop_assert_eq!(twin.first(), -p.first());
        prop_assert_eq!(twin.endpoint(), ext.endpoint());
        if r % 2 == 1 {
            prop_assert_eq!(twin.corner_count(), r);
            prop_assert_eq!(orthogonal_twin(&twin), p.clone());
        } else {
            prop_assert_eq!(twin.corner_count(), r + 1);
        }
    }

    #[test]
    fn meetings_at_pair_boundaries(p in arb_path(40)) {
        let ext = extend_even(&p);
        let twin = orthogonal_twin(&p);
        let meets = meeting_points(&p, &twin).unwrap();
        prop_assert_eq!(meets.len(), ext.corner_count().div_ceil(2));
        prop_assert_eq!(*meets.last().unwrap(), ext.endpoint());
        let (pa, pb) = (ext.positions(), twin.positions());
        let mut boundary = 0;
        for (k, pair) in ext.to_legs().legs().chunks(2).enumerate() {
            boundary += pair[0].len + pair[1].len;
            prop_assert_eq!(meets[k], pa[boundary]);
            prop_assert_eq!(meets[k], pb[boundary]);
        }
    }

    #[test]
    fn non_twins_are_rejected(p in arb_path(20), q in arb_path(20)) {
        prop_assume!(q != orthogonal_twin(&p));
        prop_assert_eq!(meeting_points(&p, &q), Err(Error::NotTwins));
    }

    #[test]
    fn entwined_loop_invariants(p in arb_path(40)) {
        let lp = entwine(&p);
        prop_assert_eq!(twin::verify_entwined(&p, &lp), Ok(()));
    }
}
