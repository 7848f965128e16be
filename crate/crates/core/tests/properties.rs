use hoclique::augmax::{build_augmax, variance_delta, AugmentationConfig};
use hoclique::clique::{enumerate_all, enumerate_maximal, participation, CliqueSet};
use hoclique::expected::{expected_k_cliques, expected_maximal_k_cliques, Normalization};
use hoclique::graph::laplacian_apply;
use hoclique::objective::{gradient, objective, project_simplex, WeightScheme};
use hoclique::rw::{solve_dirichlet, solve_via_equilibrium, DEFAULT_TOL};
use hoclique::{Graph, LabeledSets, ProbabilityField};
use proptest::prelude::*;

fn arb_graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (1..=max_n).prop_flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        (Just(n), prop::collection::vec(any::<bool>(), pairs))
    })
    .prop_map(|(n, bits)| {
        let mut edges = Vec::new();
        let mut k = 0;
        for u in 0..n {
            for v in u + 1..n {
                if bits[k] {
                    edges.push((u, v));
                }
                k += 1;
            }
        }
        Graph::from_edges(n, 1, edges, None).unwrap()
    })
}

fn is_clique(g: &Graph, nodes: &[usize]) -> bool {
    nodes
        .iter()
        .enumerate()
        .all(|(i, &u)| nodes[i + 1..].iter().all(|&v| g.is_adjacent(u, v)))
}

fn brute_cliques(g: &Graph) -> Vec<Vec<usize>> {
    let n = g.num_nodes();
    (0u32..1 << n)
        .map(|mask| (0..n).filter(|&v| mask & (1 << v) != 0).collect::<Vec<_>>())
        .filter(|s| s.len() >= 2 && is_clique(g, s))
        .collect()
}

fn brute_maximal(g: &Graph) -> Vec<Vec<usize>> {
    let n = g.num_nodes();
    brute_cliques(g)
        .into_iter()
        .filter(|c| {
            (0..n)
                .filter(|v| !c.contains(v))
                .all(|v| !c.iter().all(|&u| g.is_adjacent(u, v)))
        })
        .collect()
}

/// Labeled graph with at least one node per label and a prior that covers
/// every label.
fn arb_labeled(max_n: usize, max_l: usize) -> impl Strategy<Value = (Graph, LabeledSets)> {
    (arb_graph(max_n), 1..=max_l, any::<u64>()).prop_filter_map("need n >= l", |(g, l, seed)| {
        let n = g.num_nodes();
        if n < l + 1 {
            return None;
        }
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 33) as usize
        };
        // first l nodes are labeled 0..l, a few more at random
        let mut pairs: Vec<(usize, usize)> = (0..l).map(|i| (i, i)).collect();
        for v in l..n {
            if next() % 3 == 0 {
                pairs.push((v, next() % l));
            }
        }
        let labeled = LabeledSets::new(n, l, pairs).ok()?;
        let edges: Vec<_> = g.edges().collect();
        let g = Graph::from_edges(n, l, edges, None).ok()?;
        Some((g, labeled))
    })
}

fn arb_field(n: usize, l: usize) -> impl Strategy<Value = ProbabilityField> {
    prop::collection::vec(prop::collection::vec(0.01f64..1.0, l), n).prop_map(|rows| {
        let rows: Vec<Vec<f64>> = rows
            .into_iter()
            .map(|r| {
                let s: f64 = r.iter().sum();
                r.into_iter().map(|x| x / s).collect()
            })
            .collect();
        ProbabilityField::from_rows(&rows).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laplacian_kills_constants_and_sums_to_zero(g in arb_graph(15), seed in any::<u64>()) {
        let n = g.num_nodes();
        let ones = vec![1.0; n];
        prop_assert!(laplacian_apply(&g, &ones).unwrap().iter().all(|&x| x == 0.0));
        let x: Vec<f64> = (0..n).map(|i| ((seed >> (i % 60)) & 0xff) as f64 / 7.0).collect();
        let lx = laplacian_apply(&g, &x).unwrap();
        prop_assert!(lx.iter().sum::<f64>().abs() < 1e-9);
    }

    #[test]
    fn graph_text_round_trip(g in arb_graph(15)) {
        let l = g.num_nodes().min(2);
        let labels: Vec<usize> = (0..g.num_nodes()).map(|v| v % l).collect();
        let g = Graph::from_edges(g.num_nodes(), l, g.edges().collect::<Vec<_>>(), Some(labels)).unwrap();
        prop_assert_eq!(Graph::parse(&g.to_text()).unwrap(), g);
    }

    #[test]
    fn maximal_cliques_match_brute_force(g in arb_graph(12)) {
        let got = enumerate_maximal(&g);
        let want = CliqueSet::from_cliques(brute_maximal(&g));
        prop_assert_eq!(got, want);
    }

    #[test]
    fn all_cliques_match_brute_force(g in arb_graph(12), cap in 2usize..6) {
        let got = enumerate_all(&g, None).unwrap();
        let want = CliqueSet::from_cliques(brute_cliques(&g));
        prop_assert_eq!(&got, &want);
        let capped = enumerate_all(&g, Some(cap)).unwrap();
        prop_assert!(capped.iter().all(|c| c.len() <= cap));
        prop_assert_eq!(capped.len(), got.iter().filter(|c| c.len() <= cap).count());
    }

    #[test]
    fn maximal_and_all_are_consistent(g in arb_graph(14)) {
        let all = enumerate_all(&g, None).unwrap();
        let max = enumerate_maximal(&g);
        prop_assert!(max.iter().all(|c| all.contains(c)));
        for c in all.iter() {
            prop_assert!(max.iter().any(|m| c.iter().all(|v| m.contains(v))));
        }
    }

    #[test]
    fn augmax_steps_are_greedy_and_exact(g in arb_graph(13), budget in prop::option::of(0usize..20)) {
        let n = g.num_nodes();
        let max = enumerate_maximal(&g);
        let all = enumerate_all(&g, None).unwrap();
        let cfg = AugmentationConfig { budget, candidate_cap: None };
        let aug = build_augmax(&max, &all, &cfg, n).unwrap();
        if let Some(b) = budget {
            prop_assert!(aug.added.len() <= b);
        }
        prop_assert_eq!(aug.variance_trace.len(), aug.added.len() + 1);
        prop_assert!(aug.variance_trace.windows(2).all(|w| w[1] < w[0] + 1e-12));

        // replay each step against an exhaustive scan of the remaining pool
        let mut current = max.clone();
        for added in &aug.added {
            let stats = participation(&current, n).unwrap();
            let best = all
                .iter()
                .filter(|c| !current.contains(c))
                .map(|c| variance_delta(&stats, c, n).unwrap())
                .fold(f64::INFINITY, f64::min);
            let d = variance_delta(&stats, added, n).unwrap();
            prop_assert!(d < 0.0);
            prop_assert!((d - best).abs() < 1e-12);
            current = current.union(&CliqueSet::from_cliques([added.clone()]));
        }
        prop_assert_eq!(&current, &aug.set);
        let fresh = participation(&aug.set, n).unwrap();
        prop_assert!((fresh.variance - aug.variance_trace.last().unwrap()).abs() < 1e-12);
        prop_assert_eq!(&fresh.frequency, &aug.stats.frequency);

        // at a stop without exhausting the budget no candidate improves
        if budget.is_none_or(|b| aug.added.len() < b) {
            let stats = participation(&aug.set, n).unwrap();
            for c in all.iter().filter(|c| !aug.set.contains(c)) {
                prop_assert!(variance_delta(&stats, c, n).unwrap() >= -1e-12);
            }
        }
    }

    #[test]
    fn random_walk_fields_are_stochastic_and_harmonic((g, labeled) in arb_labeled(16, 3)) {
        let f = solve_dirichlet(&g, &labeled, DEFAULT_TOL).unwrap();
        f.validate().unwrap();
        prop_assert!(f.as_slice().iter().all(|&x| (0.0..=1.0).contains(&x)));
        let e = solve_via_equilibrium(&g, &labeled, DEFAULT_TOL).unwrap();
        prop_assert!(f.max_abs_diff(&e) <= 1e-8);
        let comp = g.components();
        for &v in labeled.unlabeled() {
            let grounded = (0..g.num_nodes()).any(|u| comp[u] == comp[v] && labeled.is_labeled(u));
            if !grounded || g.degree(v) == 0 {
                continue;
            }
            for m in 0..labeled.num_labels() {
                let nb: Vec<f64> = g.neighbors(v).iter().map(|&u| f.row(u)[m]).collect();
                let lo = nb.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = nb.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let x = f.row(v)[m];
                prop_assert!(x >= lo - 1e-9 && x <= hi + 1e-9);
                let avg = nb.iter().sum::<f64>() / nb.len() as f64;
                prop_assert!((x - avg).abs() < 1e-8);
            }
        }
        for (v, m) in labeled.pairs() {
            prop_assert_eq!(f.row(v)[m], 1.0);
        }
    }

    #[test]
    fn objective_is_invariant_under_relabeling(
        (g, field, perm) in arb_graph(10).prop_flat_map(|g| {
            let n = g.num_nodes();
            (Just(g), arb_field(n, 3), Just((0..n).collect::<Vec<_>>()).prop_shuffle())
        }),
        label_perm in Just(vec![0usize, 1, 2]).prop_shuffle(),
    ) {
        let n = g.num_nodes();
        let set = enumerate_all(&g, Some(4)).unwrap();
        let w = WeightScheme::linear();
        let j = objective(&set, &field, &w).unwrap();

        let moved = CliqueSet::from_cliques(set.iter().map(|c| c.iter().map(|&v| perm[v]).collect()));
        let mut rows = vec![Vec::new(); n];
        for v in 0..n {
            let r = field.row(v);
            rows[perm[v]] = (0..3).map(|m| r[label_perm[m]]).collect();
        }
        let moved_field = ProbabilityField::from_rows(&rows).unwrap();
        let j2 = objective(&moved, &moved_field, &w).unwrap();
        prop_assert!((j - j2).abs() <= 1e-12 * j.abs().max(1.0));
    }

    #[test]
    fn gradient_matches_finite_differences(
        (g, field) in arb_graph(9).prop_flat_map(|g| { let n = g.num_nodes(); (Just(g), arb_field(n, 3)) })
    ) {
        let set = enumerate_all(&g, Some(5)).unwrap();
        let w = WeightScheme::uniform();
        let grad = gradient(&set, &field, &w).unwrap();
        let h = 1e-6;
        for idx in 0..field.as_slice().len() {
            let mut plus = field.clone();
            plus.as_mut_slice()[idx] += h;
            let mut minus = field.clone();
            minus.as_mut_slice()[idx] -= h;
            let fd = (objective(&set, &plus, &w).unwrap() - objective(&set, &minus, &w).unwrap()) / (2.0 * h);
            prop_assert!((fd - grad[idx]).abs() <= 1e-5 * grad[idx].abs().max(1.0), "{} vs {}", fd, grad[idx]);
        }
    }

    #[test]
    fn simplex_projection_is_the_nearest_point(v in prop::collection::vec(-3.0f64..3.0, 1..6), probe in prop::collection::vec(0.0f64..1.0, 6)) {
        let x = project_simplex(&v);
        prop_assert!(x.iter().all(|&t| t >= 0.0));
        prop_assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert_eq!(project_simplex(&x), x.clone());
        let s: f64 = probe[..v.len()].iter().sum::<f64>().max(1e-9);
        let y: Vec<f64> = probe[..v.len()].iter().map(|t| t / s).collect();
        let d = |a: &[f64]| a.iter().zip(&v).map(|(p, q)| (p - q) * (p - q)).sum::<f64>();
        prop_assert!(d(&x) <= d(&y) + 1e-12);
    }

    #[test]
    fn field_csv_is_bit_exact(field in (1usize..8, 1usize..5).prop_flat_map(|(n, l)| arb_field(n, l))) {
        prop_assert_eq!(ProbabilityField::parse_csv(&field.to_csv().unwrap()).unwrap(), field);
    }

    #[test]
    fn maximal_expectation_never_exceeds_total(
        sizes in prop::collection::vec(1usize..6, 1..4),
        p in 0.0f64..=1.0,
        q in 0.0f64..=1.0,
        k in 2usize..7,
    ) {
        let m = Normalization::Multiplicity;
        let kk = expected_k_cliques(&sizes, p, q, k, m).unwrap();
        let qq = expected_maximal_k_cliques(&sizes, p, q, k, m).unwrap();
        prop_assert!(qq >= 0.0);
        prop_assert!(qq <= kk * (1.0 + 1e-12) + 1e-300);
    }
}
