use coflow_core::lpcore::{self, check_feasible, LpProblem, LpStatus, Relation};
use coflow_core::model::{cumulative_load, Coflow, CoflowInstance};
use coflow_core::relaxations::{lp_lower_bound, solve_interval_lp, solve_ordering_lp};
use coflow_core::schedulers::{bvn_decompose, lp_ov_ls, SchedulerKind};
use coflow_core::sim::validate;
use coflow_core::verify::{check_prefix_bound, oracle_opt, OracleLimits};
use proptest::prelude::*;

fn instance_strategy(
    max_n: usize,
    max_k: usize,
    max_size: u32,
    releases: bool,
) -> impl Strategy<Value = CoflowInstance> {
    (1..=max_n).prop_flat_map(move |n| {
        let flow = (0..n, 0..n, 1..=max_size);
        let coflow = (
            prop::collection::vec(flow, 1..=n * n),
            if releases {
                (0u32..4).boxed()
            } else {
                Just(0u32).boxed()
            },
            prop::sample::select(vec![0.5, 1.0, 2.0, 3.0]),
        );
        prop::collection::vec(coflow, 1..=max_k).prop_map(move |cs| {
            let coflows = cs
                .into_iter()
                .map(|(flows, r, w)| {
                    let mut seen = std::collections::BTreeMap::new();
                    for (s, d, v) in flows {
                        seen.entry((s, d)).or_insert(v as f64);
                    }
                    Coflow::new(seen.into_iter().map(|((s, d), v)| (s, d, v)), r as f64, w).unwrap()
                })
                .collect();
            CoflowInstance::new(n, coflows).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn load_invariants(inst in instance_strategy(4, 5, 9, true)) {
        let n = inst.n_ports() as f64;
        for k in 0..inst.len() {
            let w = inst.effective_size(k);
            let total = inst.coflow(k).total_demand();
            prop_assert!(w <= total + 1e-12 && total <= n * w + 1e-12);
            let l = inst.loads(k);
            prop_assert!((l.source_total() - l.dest_total()).abs() < 1e-9);
        }
        let ids: Vec<usize> = (0..inst.len()).collect();
        let rev: Vec<usize> = ids.iter().rev().copied().collect();
        let (a, wa) = cumulative_load(&inst, &ids, inst.len()).unwrap();
        let (b, wb) = cumulative_load(&inst, &rev, inst.len()).unwrap();
        prop_assert_eq!(wa, wb);
        prop_assert_eq!(a, b);
        let mut prev = vec![0.0; 2 * inst.n_ports()];
        for k in 1..=inst.len() {
            let (l, _) = cumulative_load(&inst, &rev, k).unwrap();
            for (s, p) in prev.iter_mut().enumerate() {
                prop_assert!(l.node(s) >= *p);
                *p = l.node(s);
            }
            prop_assert!((l.source_total() - l.dest_total()).abs() < 1e-9);
        }
    }

    #[test]
    fn lp_duality_on_random_problems(
        n in 1usize..6,
        rows in prop::collection::vec(
            (prop::collection::vec(0.0f64..3.0, 6), 0u8..3, 0.0f64..2.0),
            1..6,
        ),
        x0 in prop::collection::vec(0.0f64..4.0, 6),
        cost in prop::collection::vec(0.1f64..5.0, 6),
    ) {
        let mut lp = LpProblem::new(n);
        for j in 0..n {
            lp.set_objective(j, cost[j]);
        }
        for (a, rel, s) in &rows {
            let act: f64 = (0..n).map(|j| a[j] * x0[j]).sum();
            let (relation, rhs) = match rel {
                0 => (Relation::Le, act + s),
                1 => (Relation::Ge, act - s),
                _ => (Relation::Eq, act),
            };
            lp.add_constraint((0..n).map(|j| (j, a[j])).collect(), relation, rhs);
        }
        let sol = lpcore::solve(&lp).unwrap();
        prop_assert_eq!(sol.status, LpStatus::Optimal);
        prop_assert!(check_feasible(&lp, &sol.values).unwrap().feasible);
        prop_assert!(sol.objective_value <= lp.objective_value(&x0) + 1e-7);
        let dual_obj: f64 = lp.constraints.iter().zip(&sol.duals).map(|(c, y)| c.rhs * y).sum();
        prop_assert!((dual_obj - sol.objective_value).abs() < 1e-6 * (1.0 + sol.objective_value.abs()));
        for (c, &y) in lp.constraints.iter().zip(&sol.duals) {
            match c.relation {
                Relation::Le => prop_assert!(y <= 1e-9),
                Relation::Ge => prop_assert!(y >= -1e-9),
                Relation::Eq => {}
            }
            prop_assert!((y * c.slack(&sol.values)).abs() < 1e-6);
        }
        for j in 0..n {
            let reduced = cost[j] - lp.constraints.iter().zip(&sol.duals)
                .map(|(c, y)| y * c.coeffs.iter().filter(|(v, _)| *v == j).map(|(_, a)| a).sum::<f64>())
                .sum::<f64>();
            prop_assert!(reduced >= -1e-7);
            prop_assert!((reduced * sol.values[j]).abs() < 1e-6);
        }
        prop_assert_eq!(lpcore::solve(&lp).unwrap(), sol);
    }

    #[test]
    fn ordering_lp_result_invariants(inst in instance_strategy(3, 5, 6, true)) {
        let res = solve_ordering_lp(&inst).unwrap();
        let k = inst.len();
        for a in 0..k {
            prop_assert!(res.f_tilde[a] >= inst.effective_size(a) + inst.coflow(a).release() - 1e-9);
            for b in 0..k {
                if a != b {
                    prop_assert!((res.delta[a][b] + res.delta[b][a] - 1.0).abs() < 1e-9);
                    prop_assert!((0.0..=1.0).contains(&res.delta[a][b]));
                }
            }
        }
        for w in res.ordering.windows(2) {
            prop_assert!(res.f_tilde[w[0]] <= res.f_tilde[w[1]] + 1e-6);
        }
        prop_assert!(check_prefix_bound(&res, &inst).unwrap().holds);
        let obj: f64 = (0..k).map(|a| inst.coflow(a).weight() * res.f_tilde[a]).sum();
        prop_assert!((obj - res.objective).abs() < 1e-6);
        prop_assert_eq!(solve_ordering_lp(&inst).unwrap(), res);
    }

    #[test]
    fn interval_lp_rows_sum_to_one(inst in instance_strategy(3, 5, 6, true)) {
        let res = solve_interval_lp(&inst).unwrap();
        for row in &res.x {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn every_scheduler_is_feasible_and_above_bound(inst in instance_strategy(3, 5, 6, true)) {
        let bound = lp_lower_bound(&inst).unwrap();
        for kind in SchedulerKind::ALL {
            let s = kind.run(&inst).unwrap();
            let rep = validate(&s, &inst).unwrap();
            prop_assert!(rep.ok, "{} {:?}", kind, rep.violations);
            let total = s.total_weighted_completion(&inst);
            prop_assert!(total >= bound * (1.0 - 1e-9) - 1e-9, "{} total {} bound {}", kind, total, bound);
            let moved: f64 = s.transmitted().values().sum();
            prop_assert!((moved - inst.total_demand()).abs() < 1e-6 * inst.num_flows() as f64);
            prop_assert_eq!(kind.run(&inst).unwrap(), s);
        }
    }

    #[test]
    fn list_schedule_segments_are_matchings(inst in instance_strategy(4, 5, 6, true)) {
        let s = lp_ov_ls(&inst).unwrap();
        for seg in &s.segments {
            let mut src = vec![0; inst.n_ports()];
            let mut dst = vec![0; inst.n_ports()];
            for r in seg.rates.iter().filter(|r| r.rate > 0.0) {
                src[r.key.source] += 1;
                dst[r.key.dest] += 1;
            }
            prop_assert!(src.iter().chain(&dst).all(|&c| c <= 1));
        }
    }

    #[test]
    fn bvn_reconstructs(m in prop::collection::vec(prop::collection::vec(0.0f64..5.0, 4), 4)) {
        prop_assume!(m.iter().flatten().any(|&v| v > 0.0));
        let n = 4;
        let d = bvn_decompose(&m).unwrap();
        prop_assert!(d.len() <= n * n - 2 * n + 2);
        let total: f64 = d.iter().map(|(w, _)| w).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        let line_max = (0..n)
            .map(|i| m[i].iter().sum::<f64>().max(m.iter().map(|r| r[i]).sum()))
            .fold(0.0f64, f64::max);
        let mut rebuilt = vec![vec![0.0; n]; n];
        for (w, perm) in &d {
            for (i, &j) in perm.iter().enumerate() {
                rebuilt[i][j] += w;
            }
        }
        for i in 0..n {
            for j in 0..n {
                // Padding only adds mass.
                prop_assert!(rebuilt[i][j] >= m[i][j] / line_max - 1e-9);
            }
            prop_assert!((rebuilt[i].iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn bvn_reconstructs_doubly_stochastic_exactly() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        // Random convex combination of permutations is doubly stochastic.
        let mut m = vec![vec![0.0; 4]; 4];
        let mut weights: Vec<f64> = (0..5).map(|_| rng.gen_range(0.1..1.0)).collect();
        let s: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= s);
        for w in &weights {
            let mut perm: Vec<usize> = (0..4).collect();
            for i in (1..4).rev() {
                perm.swap(i, rng.gen_range(0..=i));
            }
            for (i, &j) in perm.iter().enumerate() {
                m[i][j] += w;
            }
        }
        let d = bvn_decompose(&m).unwrap();
        let mut rebuilt = vec![vec![0.0; 4]; 4];
        for (w, perm) in &d {
            for (i, &j) in perm.iter().enumerate() {
                rebuilt[i][j] += w;
            }
        }
        for i in 0..4 {
            for j in 0..4 {
                assert!((rebuilt[i][j] - m[i][j]).abs() < 1e-9);
            }
        }
        assert!(d.len() <= 10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn oracle_sandwich(inst in instance_strategy(3, 4, 3, true)) {
        prop_assume!(inst.total_demand() <= 12.0);
        let opt = oracle_opt(&inst, OracleLimits::default()).unwrap();
        prop_assert!(validate(&opt.optimal_schedule, &inst).unwrap().ok);
        let bound = lp_lower_bound(&inst).unwrap();
        prop_assert!(bound <= opt.optimal_value + 1e-7);
        for kind in SchedulerKind::ALL {
            let total = kind.run(&inst).unwrap().total_weighted_completion(&inst);
            prop_assert!(opt.optimal_value <= total + 1e-7, "{} {} < {}", kind, total, opt.optimal_value);
        }
    }
}
