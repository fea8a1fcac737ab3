mod common;

use designforge_core::block::{binomial, colex_rank, colex_unrank, Binomials};
use designforge_core::design::{
    complement_design, complement_lambda, decompose_block, design_from_orbit, lambda_s, lambda_s_integer,
    merge_orbits, subgroup_orbits, verify_t_design,
};
use designforge_core::orbit::{block_orbit, complement_partition, sigma_partition};
use designforge_core::{Block, Limits, OrbitPartition, PermGroup, Permutation};
use num_bigint::BigUint;
use num_rational::BigRational;
use proptest::prelude::*;

use common::*;

fn arb_perm(n: usize) -> impl Strategy<Value = Permutation> {
    Just((0..n as u32).collect::<Vec<_>>())
        .prop_shuffle()
        .prop_map(|images| Permutation::from_images(images).unwrap())
}

/// A transitive group: the n-cycle plus a random permutation.
fn arb_transitive() -> impl Strategy<Value = PermGroup> {
    (4usize..=8).prop_flat_map(|n| {
        arb_perm(n).prop_map(move |p| {
            let cycle: Vec<u32> = (0..n as u32).map(|i| (i + 1) % n as u32).collect();
            PermGroup::new(vec![perm(cycle), p]).unwrap()
        })
    })
}

fn arb_block(n: usize) -> impl Strategy<Value = Block> {
    proptest::sample::subsequence((0..n as u32).collect::<Vec<_>>(), 1..n)
        .prop_map(move |pts| Block::new(pts, n).unwrap())
}

fn arb_group_and_block() -> impl Strategy<Value = (PermGroup, Block)> {
    arb_transitive().prop_flat_map(|g| {
        let n = g.degree();
        (Just(g), arb_block(n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn perm_laws(a in arb_perm(9), b in arb_perm(9), c in arb_perm(9)) {
        prop_assert!(a.then(&a.inverse()).is_identity());
        prop_assert_eq!(a.then(&b).then(&c), a.then(&b.then(&c)));
        prop_assert_eq!(a.then(&b).inverse(), b.inverse().then(&a.inverse()));
        prop_assert!(a.pow(a.order()).is_identity());
    }

    #[test]
    fn colex_rank_round_trips(n in 1usize..30, seed in any::<u64>()) {
        let k = (seed as usize % n) + 1;
        let binom = Binomials::new(n);
        let total = binomial(n as u64, k as u64).unwrap() as u64;
        let rank = seed % total;
        let subset = colex_unrank(&binom, rank, k);
        prop_assert_eq!(subset.len(), k);
        prop_assert!(subset.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(subset.iter().all(|&p| (p as usize) < n));
        prop_assert_eq!(colex_rank(&binom, &subset), rank);
    }

    #[test]
    fn orbit_design_invariants((g, block) in arb_group_and_block()) {
        let limits = Limits::default();
        let orbit = block_orbit(&g, &block, &limits).unwrap();
        let design = design_from_orbit(&g, &orbit).unwrap();
        prop_assert_eq!(design.b * design.k as u64, design.v as u64 * design.r);
        prop_assert_eq!(design.b, design.blocks.len() as u64);
        prop_assert_eq!(verify_t_design(&design, 1, &limits).unwrap().lambda_t, Some(design.r));
        // orbit-stabilizer
        let stab = designforge_core::orbit::set_stabilizer(&g, &block, &limits).unwrap();
        prop_assert_eq!(stab.order() * BigUint::from(design.b), g.order());

        let c = complement_design(&design).unwrap();
        prop_assert_eq!(c.b, design.b);
        prop_assert_eq!(c.r, design.b - design.r);
        prop_assert_eq!(complement_design(&c).unwrap().blocks, design.blocks.clone());
        for t in 1..=design.k.min(design.v - design.k).min(3) {
            let cert = verify_t_design(&design, t, &limits).unwrap();
            if let Some(lambda) = cert.lambda_t {
                let got = verify_t_design(&c, t, &limits).unwrap().lambda_t;
                prop_assert_eq!(got, complement_lambda(design.b, design.v, design.k, t, lambda));
                for s in 1..=t {
                    let measured = verify_t_design(&design, s, &limits).unwrap().lambda_t;
                    prop_assert_eq!(measured, lambda_s_integer(lambda, t, s, design.v, design.k));
                }
            }
        }
    }

    #[test]
    fn lambda_s_chain(v in 6usize..40, k_off in 0usize..30, t_off in 0usize..6, lambda in 1u64..1000) {
        let k = 1 + k_off % (v - 1);
        let t = 1 + t_off % k;
        prop_assert_eq!(lambda_s(lambda, t, t, v, k).unwrap(), BigRational::from_integer(lambda.into()));
        for s in 0..t {
            let direct = lambda_s(lambda, t, s, v, k).unwrap();
            let next = lambda_s(lambda, t, s + 1, v, k).unwrap();
            // lambda_s (k - s) = lambda_{s+1} (v - s)
            prop_assert_eq!(direct.clone() * BigRational::from_integer((k - s).into()), next.clone() * BigRational::from_integer((v - s).into()));
            prop_assert!(direct >= next);
        }
    }

    #[test]
    fn sigma_partitions_the_subsets(g in arb_transitive(), k_seed in any::<usize>()) {
        let n = g.degree();
        let k = 1 + k_seed % (n - 1);
        let limits = Limits::default();
        let part = sigma_partition(&g, k, &limits).unwrap();
        prop_assert_eq!(part.total(), binomial(n as u64, k as u64).unwrap());
        let dual = sigma_partition(&g, n - k, &limits).unwrap();
        let mut a = complement_partition(&part).sizes();
        let mut b = dual.sizes();
        a.sort_unstable();
        b.sort_unstable();
        prop_assert_eq!(a, b);
        let back = OrbitPartition::from_json(&part.to_json().unwrap()).unwrap();
        prop_assert_eq!(back.sizes(), part.sizes());
        prop_assert_eq!(back.orbits.iter().map(|o| o.representative.clone()).collect::<Vec<_>>(),
            part.orbits.iter().map(|o| o.representative.clone()).collect::<Vec<_>>());
    }

    #[test]
    fn merge_then_decompose_psl27(mask in 1u64..3) {
        let g = psl27();
        let m = g.point_stabilizer(7).unwrap();
        let orbits = subgroup_orbits(&m);
        let selection: Vec<usize> = (0..orbits.len()).filter(|i| mask >> i & 1 == 1).collect();
        let limits = Limits::default();
        let design = merge_orbits(&g, &m, &selection, &limits).unwrap();
        let dec = decompose_block(&g, &design, &limits).unwrap();
        let mut back: Vec<Vec<usize>> = dec.merged.iter().map(|&i| dec.orbits[i].clone()).collect();
        let mut sel: Vec<Vec<usize>> = selection.iter().map(|&i| orbits[i].clone()).collect();
        back.sort();
        sel.sort();
        prop_assert_eq!(back, sel);
        prop_assert_eq!(dec.block_primitive, Some(true));
    }
}

#[test]
fn m22_point_stabilizer_merges() {
    let reg = registry();
    let m22 = load(&reg, "M22");
    let m = m22.point_stabilizer(0).unwrap();
    let limits = Limits::default();
    let small = merge_orbits(&m22, &m, &[0], &limits).unwrap();
    let large = merge_orbits(&m22, &m, &[1], &limits).unwrap();
    assert_eq!((small.b, small.k, small.r), (22, 1, 1));
    assert_eq!((large.b, large.k, large.r), (22, 21, 21));
    assert_eq!(verify_t_design(&large, 3, &limits).unwrap().lambda_t, Some(19));
}
