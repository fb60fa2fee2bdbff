use proptest::prelude::*;

use annealbench::decomposition::{cross_residual, partition_items, solve_decomposed, DecompConfig, MatchMode, PartitionMethod, SubSolver};
use annealbench::formulations::{
    a_to_q, cut_value, encode_permutation, find_index, is_permutation, maxcut_to_qubo, prepare_matrix_a, prepare_vector_b, qap_violations,
    QuboProblem,
};
use annealbench::generators::{gen_orders, gen_tinyqap, gnm_random_graph, subgraph_sample, subgraph_survivors, Family, GeneratorSpec, Skew, WeightMode};
use annealbench::matrix::Matrix;
use annealbench::qubo::{summarize, BinarySample, QuboBuilder, QuboMatrix, SampleSet, Sense};
use annealbench::solvers::{enumerate_minimizers, simulated_annealing, PermAnnealConfig, PtConfig, SaConfig, SolverConfig, TempSchedule};
use annealbench::warehouse::{policy_abc, policy_coi, policy_random, route_from_locations, Layout, DEFAULT_ABC_CLASSES};

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

fn qubo_and_bits(max_n: usize) -> impl Strategy<Value = (QuboMatrix, Vec<u8>)> {
    (1..=max_n).prop_flat_map(|n| {
        (
            prop::collection::vec((0..n, 0..n, -10.0..10.0f64), 0..4 * n),
            -5.0..5.0f64,
            prop::collection::vec(0..2u8, n),
        )
            .prop_map(move |(terms, offset, x)| {
                let mut b = QuboBuilder::new(n);
                for (i, j, v) in terms {
                    b.add(i, j, v);
                }
                b.add_offset(offset);
                (b.build(), x)
            })
    })
}

fn symmetric_flow(n: usize, vals: &[u8]) -> Matrix {
    let mut f = Matrix::square(n);
    let mut it = vals.iter().cycle();
    for i in 0..n {
        for j in i + 1..n {
            let v = *it.next().unwrap() as f64;
            f.set(i, j, v);
            f.set(j, i, v);
        }
    }
    f
}

proptest! {
    #[test]
    fn delta_matches_recompute((q, x) in qubo_and_bits(32)) {
        let e = q.energy(&x).unwrap();
        for k in 0..q.n() {
            let mut y = x.clone();
            y[k] ^= 1;
            prop_assert!(close(q.delta_energy(&x, k).unwrap(), q.energy(&y).unwrap() - e));
        }
    }

    #[test]
    fn cached_deltas_track_flips((q, x) in qubo_and_bits(24), flips in prop::collection::vec(0usize..24, 1..40)) {
        let mut x = x;
        let mut d = vec![0.0; q.n()];
        q.all_deltas(&x, &mut d);
        for f in flips {
            let k = f % q.n();
            x[k] ^= 1;
            q.update_deltas(&x, k, &mut d);
        }
        let mut fresh = vec![0.0; q.n()];
        q.all_deltas(&x, &mut fresh);
        for (a, b) in d.iter().zip(&fresh) {
            prop_assert!(close(*a, *b));
        }
    }

    #[test]
    fn text_round_trip_keeps_energy((q, x) in qubo_and_bits(20)) {
        let back = QuboMatrix::from_text(&q.to_text()).unwrap();
        prop_assert_eq!(back.terms(), q.terms());
        prop_assert_eq!(back.offset(), q.offset());
        prop_assert_eq!(back.energy(&x).unwrap().to_bits(), q.energy(&x).unwrap().to_bits());
    }

    #[test]
    fn pf_ignores_sample_order(flags in prop::collection::vec(any::<bool>(), 1..40), seed in any::<u64>()) {
        let samples: Vec<BinarySample> = flags
            .iter()
            .enumerate()
            .map(|(i, &f)| BinarySample { bits: vec![0], energy: i as f64, feasible: f, violations: usize::from(!f) })
            .collect();
        let mut shuffled = samples.clone();
        let mut rng = annealbench::rng::stream(seed, "shuffle", 0);
        rand::seq::SliceRandom::shuffle(&mut shuffled[..], &mut rng);
        let a = summarize(&SampleSet::new(samples, "a", 1, Sense::Min).unwrap(), None, Sense::Min).unwrap();
        let b = summarize(&SampleSet::new(shuffled, "b", 1, Sense::Min).unwrap(), None, Sense::Min).unwrap();
        prop_assert_eq!(a.p_f, b.p_f);
        prop_assert_eq!(a.best_energy, b.best_energy);
    }

    #[test]
    fn atoq_identity(n in 1usize..=5, penalty in 0.1..100.0f64, bits in prop::collection::vec(0..2u8, 25)) {
        let a = prepare_matrix_a(n);
        let b = prepare_vector_b(n);
        let x = &bits[..n * n];
        let mut norm = 0.0;
        for r in 0..a.rows() {
            let ax: f64 = (0..a.cols()).map(|c| a.get(r, c) * x[c] as f64).sum();
            norm += (ax - b[r]).powi(2);
        }
        prop_assert!(close(a_to_q(&a, &b, penalty).unwrap().energy(x).unwrap(), norm * penalty));
    }

    #[test]
    fn find_index_is_bijective(n in 1usize..40) {
        let mut seen = vec![false; n * n];
        for i in 0..n {
            for k in 0..n {
                let v = find_index(n, i, k);
                prop_assert!(v < n * n && !seen[v]);
                seen[v] = true;
            }
        }
    }

    #[test]
    fn subgraph_is_induced(n in 2usize..30, density in 0.0..1.0f64, frac in 0.0..1.0f64, seed in any::<u64>()) {
        let m = ((n * (n - 1) / 2) as f64 * density) as usize;
        let g = gnm_random_graph(n, m, seed).unwrap();
        let keep_n = ((n as f64) * frac) as usize;
        let sub = subgraph_sample(&g, keep_n, seed, WeightMode::Unit).unwrap();
        let keep = subgraph_survivors(n, keep_n, seed);
        for a in 0..keep_n {
            for b in a + 1..keep_n {
                prop_assert_eq!(sub.has_edge(a, b), g.has_edge(keep[a], keep[b]));
            }
        }
    }

    #[test]
    fn generators_are_deterministic(n in 2usize..20, seed in any::<u64>()) {
        for family in [
            Family::Gnm { n, m: n - 1 },
            Family::Tinyqap { n: n.min(8) },
            Family::Orders { n_skus: n, n_orders: 5, lines_per_order: 2, skew: Skew::Pareto8020 },
        ] {
            let spec = GeneratorSpec::new(family, seed);
            let a = spec.generate().unwrap().to_text(&spec);
            let b = spec.generate().unwrap().to_text(&spec);
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn solver_config_json_round_trip(reads in 1usize..500, sweeps in 1usize..5000, replicas in 2usize..64, seed in any::<u64>()) {
        for c in [
            SolverConfig::Sa(SaConfig { num_reads: reads, sweeps, seed, ..Default::default() }),
            SolverConfig::Pt(PtConfig { replicas, iterations: sweeps as u64, seed, ..Default::default() }),
            SolverConfig::Random { reads, seed },
        ] {
            let text = serde_json::to_string(&c).unwrap();
            prop_assert_eq!(serde_json::from_str::<SolverConfig>(&text).unwrap(), c);
        }
    }

    #[test]
    fn route_ignores_visit_order(rows in 2usize..20, aisles in 1usize..4, picks in prop::collection::vec(any::<u32>(), 0..12), seed in any::<u64>()) {
        let layout = Layout::new(rows, 2 * aisles).unwrap();
        let locs: Vec<usize> = picks.iter().map(|&p| p as usize % layout.locations()).collect();
        let mut shuffled = locs.clone();
        rand::seq::SliceRandom::shuffle(&mut shuffled[..], &mut annealbench::rng::stream(seed, "route", 0));
        prop_assert_eq!(route_from_locations(&layout, locs), route_from_locations(&layout, shuffled));
    }

    #[test]
    fn policies_are_bijections(rows in 2usize..10, aisles in 1usize..3, orders in 1usize..20, seed in any::<u64>()) {
        let layout = Layout::new(rows, 2 * aisles).unwrap();
        let n = layout.locations();
        let o = gen_orders(n, orders, 2.min(n), Skew::Pareto8020, seed).unwrap();
        let items: Vec<usize> = (0..n).collect();
        for a in [
            policy_random(&layout, &o, &items, seed).unwrap(),
            policy_coi(&layout, &o, &items).unwrap(),
            policy_abc(&layout, &o, &items, &DEFAULT_ABC_CLASSES, seed).unwrap(),
        ] {
            prop_assert!(is_permutation(a.location_of()));
        }
    }

    #[test]
    fn qap_swap_delta_matches_recompute(n in 2usize..10, seed in any::<u64>(), r in any::<usize>(), s in any::<usize>()) {
        let inst = gen_tinyqap(n, seed).unwrap();
        let mut perm: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(&mut perm[..], &mut annealbench::rng::stream(seed, "perm", 0));
        let (r, s) = (r % n, s % n);
        let mut swapped = perm.clone();
        swapped.swap(r, s);
        prop_assert!(close(inst.swap_delta(&perm, r, s), inst.objective(&swapped) - inst.objective(&perm)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partitions_are_balanced(k in 1usize..5, s in 1usize..7, vals in prop::collection::vec(0u8..10, 1..50), seed in any::<u64>()) {
        let n = k * s;
        let f = symmetric_flow(n, &vals);
        for method in [PartitionMethod::Greedy, PartitionMethod::Anneal { iterations: 500, replicas: 4 }] {
            let p = partition_items(&f, k, &method, seed).unwrap();
            let subsets = p.subsets();
            prop_assert_eq!(subsets.len(), k);
            prop_assert!(subsets.iter().all(|g| g.len() == s));
            let mut all: Vec<usize> = subsets.concat();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn decomposition_is_valid_and_faithful(k in 1usize..4, s in 1usize..5, seed in any::<u64>()) {
        let n = k * s;
        let inst = gen_tinyqap(n, seed).unwrap();
        let cfg = DecompConfig {
            partition: PartitionMethod::Greedy,
            matching: MatchMode::Exhaustive,
            sub_solver: SubSolver::Permutation { config: PermAnnealConfig { iterations: 500, temperature_schedule: TempSchedule::Auto, seed: 0 } },
            seed,
        };
        let out = solve_decomposed(&inst, k, &cfg).unwrap();
        prop_assert!(is_permutation(&out.perm));
        prop_assert_eq!(qap_violations(n, &encode_permutation(&out.perm)).unwrap(), 0);
        prop_assert!(close(out.energy, inst.objective(&out.perm)));
        let total = out.sub_energies.iter().sum::<f64>() + cross_residual(&inst, &out.plan.item_partition, &out.perm);
        prop_assert!(close(total, out.energy));
    }

    #[test]
    fn maxcut_argmin_is_max_cut(n in 2usize..11, density in 0.0..1.0f64, seed in any::<u64>()) {
        let m = ((n * (n - 1) / 2) as f64 * density) as usize;
        let g = gnm_random_graph(n, m, seed).unwrap();
        let best = (0u32..1 << n)
            .map(|mask| g.edges().iter().filter(|&&(u, v, _)| (mask >> u & 1) != (mask >> v & 1)).count())
            .max()
            .unwrap() as f64;
        let mins = enumerate_minimizers(&maxcut_to_qubo(&g).qubo, 12).unwrap();
        for x in &mins.configs {
            prop_assert_eq!(cut_value(&g, x), best);
        }
    }

    #[test]
    fn sample_energies_are_exact((q, _) in qubo_and_bits(12), seed in any::<u64>()) {
        let p = QuboProblem::raw(q.clone());
        let s = simulated_annealing(&p, &SaConfig { num_reads: 4, sweeps: 20, seed, ..Default::default() }).unwrap();
        for x in &s.samples {
            prop_assert!(close(x.energy, q.energy(&x.bits).unwrap()));
        }
    }
}

