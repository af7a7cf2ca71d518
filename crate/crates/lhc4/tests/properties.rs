//! Cross-module invariants, exercised exhaustively at square scale and by
//! seeded sampling above it.

use proptest::prelude::*;

use lhc4::algebra::{find_isotopy, parastrophe, Isotopy, Parastrophy, Perm};
use lhc4::completion::split_2fold;
use lhc4::qcore::{CodeSet, QuasigroupTable};
use lhc4::structure::{
    canonical_decomposition, group_form, is_completely_reducible, is_reducible, is_semilinear,
    value_pair_code,
};
use lhc4::verify::{
    enumerate_quasigroups, exhaustive_split_oracle, irreducible_quasigroup, random_2fold_code,
    random_quasigroup, seeded_rng,
};
use rand::Rng;

fn arb_quasigroup(arity: usize) -> impl Strategy<Value = QuasigroupTable> {
    any::<u64>().prop_map(move |seed| random_quasigroup(arity, &mut seeded_rng(seed, 0)))
}

fn arb_perm() -> impl Strategy<Value = Perm> {
    (0..24usize).prop_map(|i| Perm::all()[i])
}

fn arb_isotopy(len: usize) -> impl Strategy<Value = Isotopy> {
    proptest::collection::vec(arb_perm(), len).prop_map(Isotopy::new)
}

fn arb_parastrophy(arity: usize) -> impl Strategy<Value = Parastrophy> {
    any::<u64>().prop_map(move |seed| {
        let mut rng = seeded_rng(seed, 1);
        let mut sigma: Vec<usize> = (0..=arity).collect();
        for i in (1..sigma.len()).rev() {
            let j = rng.random_range(0..=i);
            sigma.swap(i, j);
        }
        Parastrophy::new(sigma).expect("shuffled identity is a permutation")
    })
}

#[test]
fn graph_round_trip_exhaustive_over_squares() {
    let mut count = 0usize;
    for q in enumerate_quasigroups(2).unwrap() {
        let g = q.graph();
        assert!(g.is_mds());
        assert_eq!(QuasigroupTable::from_code(&g).unwrap(), q);
        count += 1;
    }
    assert_eq!(count, 576);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, .. ProptestConfig::default() })]

    #[test]
    fn graph_round_trip_sampled_ternary(q in arb_quasigroup(3)) {
        prop_assert_eq!(QuasigroupTable::from_code(&q.graph()).unwrap(), q);
    }

    #[test]
    fn complement_involution_and_fold(seed in any::<u64>()) {
        let code = random_2fold_code(3, &mut seeded_rng(seed, 2));
        let complement = code.kfold_complement(2).unwrap();
        prop_assert!(complement.is_kfold_mds(2));
        prop_assert_eq!(complement.kfold_complement(2).unwrap(), code);
    }

    #[test]
    fn mds_iff_onefold(q in arb_quasigroup(2)) {
        let g = q.graph();
        prop_assert_eq!(g.is_mds(), g.is_kfold_mds(1));
        let mut broken = g.clone();
        broken.insert_index(broken.complement().min_index().unwrap());
        prop_assert_eq!(broken.is_mds(), broken.is_kfold_mds(1) && broken.cardinality() == 16);
    }

    #[test]
    fn isotopy_preserves_kfold(seed in any::<u64>(), t in arb_isotopy(3)) {
        let code = random_2fold_code(3, &mut seeded_rng(seed, 3));
        let image = t.apply_code(&code).unwrap();
        prop_assert!(image.is_kfold_mds(2));
        prop_assert_eq!(image.cardinality(), code.cardinality());
    }

    #[test]
    fn isotopy_action_law(q in arb_quasigroup(2), s in arb_isotopy(3), t in arb_isotopy(3)) {
        let m = q.graph();
        let composed = t.compose(&s).apply_code(&m).unwrap();
        let staged = t.apply_code(&s.apply_code(&m).unwrap()).unwrap();
        prop_assert_eq!(composed, staged);
    }

    #[test]
    fn graph_commutes_with_quasigroup_isotopy(q in arb_quasigroup(3), t in arb_isotopy(4)) {
        let via_table = t.apply_quasigroup(&q).unwrap().graph();
        let via_code = t.apply_code(&q.graph()).unwrap();
        prop_assert_eq!(via_table, via_code);
    }

    #[test]
    fn parastrophe_inverse_round_trip(q in arb_quasigroup(3), p in arb_parastrophy(3)) {
        let there = parastrophe(&q, &p);
        prop_assert_eq!(parastrophe(&there, &p.inverse()), q);
    }

    #[test]
    fn isotopy_search_self_certifies(q in arb_quasigroup(2), t in arb_isotopy(3)) {
        let m1 = q.graph();
        let m2 = t.apply_code(&m1).unwrap();
        let witness = find_isotopy(&m1, &m2).unwrap().expect("isotopic by construction");
        prop_assert_eq!(witness.apply_code(&m1).unwrap(), m2);
    }

    #[test]
    fn reducibility_is_isotopy_and_parastrophy_invariant(
        q in arb_quasigroup(3),
        t in arb_isotopy(4),
        p in arb_parastrophy(3),
    ) {
        let reducible = is_reducible(&q).is_some();
        let isotope = t.apply_quasigroup(&q).unwrap();
        prop_assert_eq!(is_reducible(&isotope).is_some(), reducible);
        let parastroph = parastrophe(&q, &p);
        prop_assert_eq!(is_reducible(&parastroph).is_some(), reducible);
    }

    #[test]
    fn semilinearity_is_isotopy_invariant(q in arb_quasigroup(3), t in arb_isotopy(4)) {
        let semilinear = is_semilinear(&q).is_some();
        let isotope = t.apply_quasigroup(&q).unwrap();
        prop_assert_eq!(is_semilinear(&isotope).is_some(), semilinear);
    }

    #[test]
    fn value_pair_codes_are_two_fold(q in arb_quasigroup(3), a in 0u8..4, b in 0u8..4) {
        prop_assume!(a != b);
        prop_assert!(value_pair_code(&q, a, b).is_kfold_mds(2));
    }

    #[test]
    fn decomposition_tree_evaluates_pointwise(q in arb_quasigroup(3)) {
        let tree = canonical_decomposition(&q);
        for idx in 0..64usize {
            let coords = q.as_table().shape().coords_of(idx);
            prop_assert_eq!(tree.eval(&coords), q.cells()[idx]);
        }
    }

    #[test]
    fn split_verdict_matches_oracle(seed in any::<u64>()) {
        let code = random_2fold_code(3, &mut seeded_rng(seed, 4));
        let fast = split_2fold(&code).unwrap();
        let oracle = exhaustive_split_oracle(&code);
        prop_assert_eq!(fast.is_some(), oracle.is_some());
    }

    #[test]
    fn union_of_disjoint_graphs_has_splittable_complement(
        f in arb_quasigroup(2),
        seed in any::<u64>(),
    ) {
        let g = lhc4::verify::random_disjoint_mate(&f, &mut seeded_rng(seed, 5));
        let union = f.graph().union(&g.graph());
        prop_assert!(union.is_kfold_mds(2));
        let complement = union.kfold_complement(2).unwrap();
        prop_assert!(split_2fold(&complement).unwrap().is_some());
    }
}

/// A quasigroup with canonical root arity 3: an irreducible ternary root
/// over blocks `{1}, {2,3}, {4}`.
fn grouped_quaternary(square_seed: u64) -> QuasigroupTable {
    let root = irreducible_quasigroup(3);
    let square = random_quasigroup(2, &mut seeded_rng(square_seed, 6));
    QuasigroupTable::from_fn(4, 4, |x| root.eval(&[x[0], square.eval(&[x[1], x[2]]), x[3]]))
        .expect("composition of latin tables is latin")
}

fn permute_variables(q: &QuasigroupTable, pi: &[usize]) -> QuasigroupTable {
    QuasigroupTable::from_fn(4, q.arity(), |x| {
        let args: Vec<u8> = pi.iter().map(|&v| x[v - 1]).collect();
        q.eval(&args)
    })
    .expect("variable relabeling preserves the latin property")
}

fn relabeled_partition(partition: &[Vec<usize>], pi: &[usize]) -> Vec<Vec<usize>> {
    // a slot block B of q becomes {pi(j) : j in B} for the permuted table
    // q'(x) = q(x_pi(1), .., x_pi(n)): slot j of q reads variable pi(j)
    let mut blocks: Vec<Vec<usize>> = partition
        .iter()
        .map(|b| {
            let mut nb: Vec<usize> = b.iter().map(|&v| pi[v - 1]).collect();
            nb.sort_unstable();
            nb
        })
        .collect();
    blocks.sort();
    blocks
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, .. ProptestConfig::default() })]

    #[test]
    fn canonical_partition_commutes_with_relabeling(
        square_seed in any::<u64>(),
        perm_seed in any::<u64>(),
    ) {
        // root arity 3: the block collection is unique, so relabeling must
        // commute with decomposition
        let q = grouped_quaternary(square_seed);
        let tree = canonical_decomposition(&q);
        prop_assert!(tree.root_arity() >= 3);

        let mut rng = seeded_rng(perm_seed, 7);
        let mut pi: Vec<usize> = (1..=4).collect();
        for i in (1..4).rev() {
            let j = rng.random_range(0..=i);
            pi.swap(i, j);
        }
        let relabeled = permute_variables(&q, &pi);
        let relabeled_tree = canonical_decomposition(&relabeled);

        let mut expected = relabeled_partition(&tree.top_partition(), &pi);
        expected.sort();
        let mut actual = relabeled_tree.top_partition();
        actual.sort();
        prop_assert_eq!(actual, expected);
    }

    #[test]
    fn group_form_parts_commute_with_relabeling(
        iso in arb_isotopy(5),
        perm_seed in any::<u64>(),
    ) {
        // completely reducible family: isotopes of the 4-variable sum
        let q = iso.apply_quasigroup(&QuasigroupTable::cyclic_sum(4, 4)).unwrap();
        prop_assume!(is_completely_reducible(&q));
        let gf = group_form(&q).unwrap();
        for idx in (0..256usize).step_by(11) {
            let coords = q.as_table().shape().coords_of(idx);
            prop_assert_eq!(gf.eval(&coords), q.cells()[idx]);
        }

        let mut rng = seeded_rng(perm_seed, 8);
        let mut pi: Vec<usize> = (1..=4).collect();
        for i in (1..4).rev() {
            let j = rng.random_range(0..=i);
            pi.swap(i, j);
        }
        let relabeled = permute_variables(&q, &pi);
        let gf2 = group_form(&relabeled).unwrap();

        let parts1: Vec<Vec<usize>> = gf.parts.iter().map(|(_, v)| v.clone()).collect();
        let mut expected = relabeled_partition(&parts1, &pi);
        expected.sort();
        let mut actual: Vec<Vec<usize>> = gf2.parts.iter().map(|(_, v)| v.clone()).collect();
        actual.sort();
        prop_assert_eq!(actual, expected);
    }
}

#[test]
fn serialization_round_trips_for_sampled_tables() {
    use lhc4::fileio::{parse_document, table_to_json, table_to_text, Document};
    for seed in 0..24u64 {
        let mut rng = seeded_rng(seed, 9);
        let ndims = 1 + (seed % 3) as usize;
        let k = 1 + (seed % 4) as usize;
        let t = lhc4::verify::random_cuboid(ndims, k, &mut rng);
        for rendered in [table_to_text(&t), table_to_json(&t)] {
            match parse_document(&rendered).unwrap() {
                Document::Table { table, .. } => assert_eq!(table, t),
                _ => panic!("expected a table"),
            }
        }
    }
}

#[test]
fn splittable_codes_exist_too() {
    // unions of disjoint graphs give splittable 2-fold codes; make sure the
    // oracle and fast path agree on a positive instance
    let f = QuasigroupTable::cyclic_sum(4, 2);
    let g = lhc4::completion::disjoint_mate(&f);
    let m: CodeSet = f.graph().union(&g.graph());
    assert!(split_2fold(&m).unwrap().is_some());
    assert!(exhaustive_split_oracle(&m).is_some());
}
