mod common;

use common::*;
use flowbn::bn::{
    bn_from_flow, combinations, d_separated, d_separated_oracle, export_dot, factorizes,
    implied_independencies, is_imap, Bn, CiStatement, DiscreteJoint, NodeKind,
};
use flowbn::flows::{FlowModel, FlowSpec, Normalizer, StepSpec};
use flowbn::numcore::Rng;
use proptest::prelude::*;

/// Every query `a ⟂ b | Z` with `a < b` and `Z` drawn from the other nodes.
fn all_pair_queries(n: usize) -> Vec<CiStatement> {
    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let rest: Vec<usize> = (0..n).filter(|&v| v != a && v != b).collect();
            for size in 0..=rest.len() {
                for z in combinations(&rest, size) {
                    out.push(CiStatement::pair(a, b, &z).unwrap());
                }
            }
        }
    }
    out
}

#[test]
fn bayes_ball_matches_moralization_on_all_small_dags() {
    for n in 1..=4 {
        let queries = all_pair_queries(n);
        for mask in 0..1u64 << (n * (n - 1) / 2) {
            let bn = dag_from_mask(n, mask);
            for q in &queries {
                assert_eq!(d_separated(&bn, q).unwrap(), d_separated_oracle(&bn, q).unwrap());
                assert_eq!(d_separated(&bn, q).unwrap(), d_separated(&bn, &q.swapped()).unwrap());
            }
        }
    }
}

#[test]
fn bayes_ball_matches_moralization_on_random_set_queries() {
    let mut rng = Rng::new(31);
    for _ in 0..500 {
        let n = 3 + rng.below(6);
        let p = rng.uniform();
        let bn = random_dag(&mut rng, n, p);
        let mut ids: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut ids);
        let nx = 1 + rng.below(2);
        let ny = 1 + rng.below(2).min(n - nx - 1);
        let nz = rng.below(n - nx - ny + 1);
        let q = CiStatement::new(&ids[..nx], &ids[nx..nx + ny], &ids[nx + ny..nx + ny + nz]).unwrap();
        assert_eq!(d_separated(&bn, &q).unwrap(), d_separated_oracle(&bn, &q).unwrap(), "{bn:?} {q:?}");
    }
}

fn fixture_bn(spec: &FlowSpec, latents: bool) -> Bn {
    bn_from_flow(spec, latents).unwrap()
}

#[test]
fn figure_one_projections() {
    let a = fixture_bn(&fig1a_spec(), false);
    assert_eq!(labelled_edges(&a, false), fig1a_directed());
    // A complete DAG implies nothing: all 24 pairwise queries are connected.
    let queries = all_pair_queries(4);
    assert_eq!(queries.len(), 24);
    assert!(queries.iter().all(|q| !d_separated(&a, q).unwrap()));
    assert!(implied_independencies(&a, true, 2).unwrap().is_empty());

    let b = fixture_bn(&fig1b_spec(), false);
    assert_eq!(labelled_edges(&b, false), fig1b_directed());
    let id = |s: &str| b.resolve(s).unwrap();
    let sep = |x: &str, y: &str, z: &[&str]| {
        let z: Vec<usize> = z.iter().map(|s| id(s)).collect();
        d_separated(&b, &CiStatement::pair(id(x), id(y), &z).unwrap()).unwrap()
    };
    assert!(sep("x3", "x4", &["x1", "x2"]));
    assert!(!sep("x3", "x4", &[]));
    assert!(sep("x1", "x2", &[]));
    assert!(!sep("x1", "x2", &["x3"]));

    let c = fixture_bn(&fig1b_spec(), true);
    assert_eq!(c.node_count(), 8);
    assert_eq!(labelled_edges(&c, false), fig1b_directed());
    assert_eq!(
        labelled_edges(&c, true),
        pairs(&[("z1", "x1"), ("z2", "x2"), ("z3", "x3"), ("z4", "x4")])
    );
    for n in c.nodes() {
        assert_eq!(n.deterministic, n.kind == NodeKind::Observed);
    }
}

#[test]
fn figure_two_two_step_coupling() {
    let bn = fixture_bn(&fig2_spec(), true);
    assert_eq!(bn.node_count(), 12);
    assert_eq!(labelled_edges(&bn, false), fig2_directed());
    assert_eq!(labelled_edges(&bn, true), fig2_bijective());
    assert_eq!(bn.ids_of_kind(NodeKind::Latent).len(), 4);
    assert_eq!(bn.ids_of_kind(NodeKind::Intermediate).len(), 4);
    // x1 and x2 now share the ancestors z3 and z4.
    let (x1, x2) = (bn.resolve("x1").unwrap(), bn.resolve("x2").unwrap());
    assert!(!d_separated(&bn, &CiStatement::pair(x1, x2, &[]).unwrap()).unwrap());
    let anc = bn.ancestors_mask(&[x1]);
    assert!(anc[bn.resolve("z3").unwrap()] && anc[bn.resolve("z4").unwrap()]);
}

#[test]
fn figure_three_three_step_chain() {
    let bn = fixture_bn(&fig3_spec(), true);
    assert_eq!(bn.node_count(), 8);
    assert_eq!(labelled_edges(&bn, false), fig3_directed());
    assert_eq!(labelled_edges(&bn, true), fig3_bijective());
    let observed = bn.ids_of_kind(NodeKind::Observed);
    assert_eq!(observed.len(), 2);
    assert!(implied_independencies(&bn, true, 0).unwrap().is_empty());
}

#[test]
fn dot_export_counts_and_stability() {
    let b = fixture_bn(&fig1b_spec(), false);
    let dot = export_dot(&b);
    assert_eq!(dot.matches(" -> ").count(), 4);
    assert_eq!(dot.matches("[label=").count(), 4);
    assert_eq!(dot, export_dot(&fixture_bn(&fig1b_spec(), false)));
    let two = export_dot(&fixture_bn(&fig2_spec(), true));
    assert_eq!(two.matches("[label=").count(), 12);
    assert_eq!(two.matches("[dir=none]").count(), 8);
    assert_eq!(two.matches(" -> ").count(), 16);
}

#[test]
fn bn_json_round_trips() {
    for spec in [fig1a_spec(), fig1b_spec()] {
        let bn = fixture_bn(&spec, false);
        assert_eq!(Bn::from_json(&bn.to_json()).unwrap(), bn);
    }
    for spec in [fig2_spec(), fig3_spec()] {
        let bn = fixture_bn(&spec, true);
        assert_eq!(Bn::from_json(&bn.to_json()).unwrap(), bn);
    }
}

#[test]
fn stacking_only_removes_observed_independencies() {
    let counts: Vec<usize> = (1..=4)
        .map(|k| {
            let bn = bn_from_flow(&FlowSpec::coupling_stack(4, k, Normalizer::Affine), true).unwrap();
            implied_independencies(&bn, true, 2).unwrap().len()
        })
        .collect();
    assert!(counts.windows(2).all(|w| w[1] <= w[0]), "{counts:?}");
    assert!(counts[1] < counts[0], "{counts:?}");
}

#[test]
fn factorization_and_imap_agree() {
    let mut rng = Rng::new(32);
    let xor_bn = Bn::from_edges(3, &[(0, 2)]).unwrap();
    // x3 = x1 xor x2 with fair coins: pairwise independent, jointly dependent.
    let mut probs = vec![0.0; 8];
    for a in 0..2 {
        for b in 0..2 {
            probs[a * 4 + b * 2 + (a ^ b)] = 0.25;
        }
    }
    let xor = DiscreteJoint::new(vec![2, 2, 2], probs).unwrap();
    assert!(!factorizes(&xor, &xor_bn).unwrap());
    assert!(!is_imap(&xor_bn, &xor).unwrap());
    let complete = dag_from_mask(3, 0b111);
    assert!(factorizes(&xor, &complete).unwrap() && is_imap(&complete, &xor).unwrap());

    for _ in 0..150 {
        let n = 2 + rng.below(3);
        let bn = random_dag(&mut rng, n, 0.5);
        let cards: Vec<usize> = (0..n).map(|_| 2 + rng.below(2)).collect();
        let built = DiscreteJoint::random_from_bn(&bn, cards.clone(), &mut rng).unwrap();
        assert!(factorizes(&built, &bn).unwrap());
        assert!(is_imap(&bn, &built).unwrap());
        let free = DiscreteJoint::random(cards, &mut rng).unwrap();
        assert_eq!(factorizes(&free, &bn).unwrap(), is_imap(&bn, &free).unwrap());
        let full = dag_from_mask(n, (1 << (n * (n - 1) / 2)) - 1);
        assert!(is_imap(&full, &free).unwrap());
    }
}

/// Ancestor ids of `v` in the projected single-step graph, including `v`.
fn latent_ancestors(bn: &Bn, v: usize) -> Vec<usize> {
    let mask = bn.ancestors_mask(&[v]);
    (0..bn.node_count()).filter(|&i| mask[i]).collect()
}

#[test]
fn single_step_independencies_hold_in_the_flow() {
    let mut rng = Rng::new(33);
    let mut perturbed = 0;
    for _ in 0..40 {
        let dim = 2 + rng.below(3);
        let step = StepSpec {
            conditioner: random_conditioner(&mut rng, dim),
            normalizer: random_normalizer(&mut rng),
            permutation: random_permutation(&mut rng, dim),
        };
        let spec = FlowSpec { dim, steps: vec![step] };
        let order = spec.steps[0].permutation.order(dim);
        let bn = bn_from_flow(&spec, false).unwrap();
        let model = random_model(spec, &[8, 8], &mut rng, 0.5);
        let z = normal_vec(&mut rng, dim);
        let x = model.flow_inverse(&z).unwrap();
        // Observed node `x{i+1}` has id `i`; its latent sits at the slot that
        // reads component `i`.
        let slot_of = |i: usize| order.iter().position(|&o| o == i).unwrap();
        for q in implied_independencies(&bn, true, 2).unwrap() {
            let (a, b) = (q.x[0], q.y[0]);
            for (keep, other) in [(a, b), (b, a)] {
                let mut shielded = latent_ancestors(&bn, keep);
                for &c in &q.z {
                    shielded.extend(latent_ancestors(&bn, c));
                }
                let mut z2 = z.clone();
                let mut moved = 0;
                for anc in latent_ancestors(&bn, other) {
                    if !shielded.contains(&anc) {
                        z2[slot_of(anc)] += 0.75;
                        moved += 1;
                    }
                }
                if q.z.is_empty() {
                    // Marginal independence: no shared ancestry at all.
                    assert!(moved > 0 && !shielded.contains(&other));
                }
                perturbed += moved;
                let x2 = model.flow_inverse(&z2).unwrap();
                assert_eq!(x2[keep].to_bits(), x[keep].to_bits(), "{}", q.display(&bn));
                for &c in &q.z {
                    assert_eq!(x2[c].to_bits(), x[c].to_bits());
                }
            }
        }
    }
    assert!(perturbed > 0);
}

#[test]
fn constructed_joint_rejects_a_missing_dependency() {
    let mut rng = Rng::new(34);
    let chain = Bn::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
    let joint = DiscreteJoint::random_from_bn(&chain, vec![2, 3, 2], &mut rng).unwrap();
    let empty = Bn::from_edges(3, &[]).unwrap();
    assert!(!factorizes(&joint, &empty).unwrap());
    assert!(!is_imap(&empty, &joint).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn removing_an_edge_never_removes_an_independence(seed in any::<u64>(), n in 2usize..=6) {
        let mut rng = Rng::new(seed);
        let bn = random_dag(&mut rng, n, 0.6);
        prop_assume!(!bn.edges().is_empty());
        let before = implied_independencies(&bn, false, 2).unwrap();
        let smaller = bn.without_edge(rng.below(bn.edges().len()));
        let after = implied_independencies(&smaller, false, 2).unwrap();
        for q in &before {
            prop_assert!(after.contains(q));
        }
    }

    #[test]
    fn projection_is_a_dag_over_observed_nodes(seed in any::<u64>(), dim in 1usize..=5) {
        let mut rng = Rng::new(seed);
        let spec = random_spec(&mut rng, dim, 1, Some(Normalizer::Affine));
        let bn = bn_from_flow(&spec, false).unwrap();
        prop_assert_eq!(bn.node_count(), dim);
        prop_assert!(bn.topological_order().is_some());
        // Parents of each component are exactly its conditioning inputs.
        let model = FlowModel::new(spec.clone(), &[2], &mut rng).unwrap();
        let order = spec.steps[0].permutation.order(dim);
        for (pos, &i) in order.iter().enumerate() {
            prop_assert_eq!(bn.parents(i).is_empty(), model.is_unconditioned(0, i) || pos == 0);
        }
    }
}
