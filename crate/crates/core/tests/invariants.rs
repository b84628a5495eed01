//! Properties that cross module boundaries, checked through the public API.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use freesplit::farey::{adjacent, distance, Slope};
use freesplit::growth::{iota_roses, random_rose, rank2_sg_distance, slope_sphere, sphere_slope, RoseVertex};
use freesplit::io::cache::splitting_data;
use freesplit::splittings::{disjoint, Sphere};
use freesplit::word::{Automorphism, NielsenMove};

fn slope() -> impl Strategy<Value = Slope> {
    prop_oneof![
        9 => (-40i64..=40, 1i64..=40).prop_filter("coprime", |(p, q)| gcd(*p, *q) == 1).prop_map(|(p, q)| Slope { p, q }),
        1 => Just(Slope::INFINITY),
    ]
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn moves(n: usize) -> impl Strategy<Value = Vec<NielsenMove>> {
    prop::collection::vec((0..n, 1..n, any::<bool>(), any::<bool>()), 0..8).prop_map(move |v| {
        v.into_iter()
            .map(|(i, d, left, pos)| {
                let j = (i + d) % n;
                let s = if pos { 1 } else { -1 };
                if left {
                    NielsenMove::left(i, j, s)
                } else {
                    NielsenMove::right(i, j, s)
                }
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn slopes_and_rank_two_spheres_correspond(s in slope()) {
        let sphere = slope_sphere(&s).unwrap();
        prop_assert_eq!(sphere_slope(&sphere).unwrap(), s);
    }

    #[test]
    fn disjoint_rank_two_spheres_are_farey_neighbours(s in slope(), t in slope()) {
        prop_assume!(s != t);
        let (a, b) = (Sphere::NonSep(slope_sphere(&s).unwrap()), Sphere::NonSep(slope_sphere(&t).unwrap()));
        let d = disjoint(&a, &b).unwrap();
        prop_assert_eq!(d.is_yes(), adjacent(&s, &t).unwrap());
        let sg = rank2_sg_distance(&a, &b).unwrap();
        prop_assert_eq!(sg, rank2_sg_distance(&b, &a).unwrap());
        // every Farey edge is a sphere-graph edge
        prop_assert!(sg <= distance(&s, &t));
    }

    #[test]
    fn cached_splitting_data_recovers_keys(seed in any::<u64>(), len in 0usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = random_rose(&mut rng, 3, len);
        for s in r.dual_spheres().unwrap() {
            let s = Sphere::NonSep(s);
            prop_assert_eq!(splitting_data(&s).to_sphere().unwrap().key(), s.key());
        }
    }

    #[test]
    fn intersection_numbers_are_invariant(m in moves(3), a in moves(3), b in moves(3)) {
        let phi = Automorphism::from_moves(3, &m);
        let x = RoseVertex::standard(3).apply(&Automorphism::from_moves(3, &a)).unwrap();
        let y = RoseVertex::standard(3).apply(&Automorphism::from_moves(3, &b)).unwrap();
        let before = iota_roses(&x, &y);
        prop_assert_eq!(iota_roses(&x, &x), 3);
        prop_assert_eq!(before, iota_roses(&x.apply(&phi).unwrap(), &y.apply(&phi).unwrap()));
    }
}
