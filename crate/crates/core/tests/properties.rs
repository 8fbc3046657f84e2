use std::sync::Arc;

use covertour::cover::{gamma_k, lambda_k, Arity, OracleKind, TableItem, TableOracle};
use covertour::gen::{perturb, NoiseSpec};
use covertour::instance::{split_errors, Instance, Job, PredictionSet, Request, RideRequest};
use covertour::metric::{from_matrix, line_space, metric_closure, Edge, GraphInput, MetricSpace, PointId};
use covertour::policy::{Algo, AlgoConfig};
use covertour::sim::{run, verify_trace};
use covertour::tour::{approx_tour, exact_tour, gamma_tsp, halfline_opt, optimal, SolverConfig, TourProblem};
use proptest::prelude::*;

mod common;
use common::enumerate_covers;

fn euclid(pts: &[(f64, f64)]) -> MetricSpace {
    let d: Vec<Vec<f64>> = pts
        .iter()
        .map(|a| pts.iter().map(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()).collect())
        .collect();
    from_matrix(&d, PointId(0)).unwrap()
}

fn space_strategy(max: usize) -> impl Strategy<Value = Arc<MetricSpace>> {
    prop::collection::vec((0.0..10.0f64, 0.0..10.0f64), 2..max).prop_map(|p| Arc::new(euclid(&p)))
}

fn jobs_strategy(n: usize, max_jobs: usize, rides: bool) -> impl Strategy<Value = Vec<Job>> {
    prop::collection::vec((0..n, 0..n, 0.0..12.0f64), 0..=max_jobs).prop_map(move |v| {
        v.into_iter()
            .map(|(a, b, r)| Job { pickup: PointId(a), dropoff: PointId(if rides { b } else { a }), release: r })
            .collect()
    })
}

fn space_and_jobs(max_pts: usize, max_jobs: usize, rides: bool) -> impl Strategy<Value = (Arc<MetricSpace>, Vec<Job>)> {
    space_strategy(max_pts).prop_flat_map(move |s| {
        let n = s.n();
        (Just(s), jobs_strategy(n, max_jobs, rides))
    })
}

/// Completion of serving jobs in the given order, waiting for releases.
fn follow(space: &MetricSpace, jobs: &[Job], order: &[usize]) -> f64 {
    let mut t = 0.0f64;
    let mut at = space.origin();
    for &i in order {
        let j = jobs[i];
        t = (t + space.d(at, j.pickup)).max(j.release) + space.d(j.pickup, j.dropoff);
        at = j.dropoff;
    }
    t + space.d(at, space.origin())
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for k in 0..=p.len() {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out
}

fn brute_force(space: &MetricSpace, jobs: &[Job]) -> f64 {
    permutations(jobs.len()).iter().map(|o| follow(space, jobs, o)).fold(f64::INFINITY, f64::min)
}

fn problem(space: &MetricSpace, jobs: Vec<Job>) -> TourProblem<'_> {
    TourProblem { space, start: space.origin_position(), start_time: 0.0, jobs, terminal: space.origin() }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closure_is_idempotent(
        n in 2usize..9,
        extra in prop::collection::vec((0usize..9, 0usize..9, 1u32..10), 0..12),
        path in prop::collection::vec(1u32..10, 8),
    ) {
        let mut edges: Vec<Edge> = (1..n).map(|i| Edge { u: i - 1, v: i, w: path[i - 1] as f64 }).collect();
        edges.extend(extra.iter().filter(|e| e.0 < n && e.1 < n && e.0 != e.1).map(|e| Edge { u: e.0, v: e.1, w: e.2 as f64 }));
        let s = metric_closure(&GraphInput { nodes: n, edges, origin: PointId(0) }).unwrap();
        prop_assert!(s.check_triangle().is_ok());
        let mut complete = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                complete.push(Edge { u: i, v: j, w: s.d(PointId(i), PointId(j)) });
            }
        }
        let again = metric_closure(&GraphInput { nodes: n, edges: complete, origin: PointId(0) }).unwrap();
        prop_assert_eq!(again.matrix(), s.matrix());
    }

    #[test]
    fn line_distances_are_differences(xs in prop::collection::vec(-50i32..50, 1..10)) {
        let coords: Vec<f64> = xs.iter().map(|&x| x as f64 * 0.5).collect();
        let s = line_space(&coords, 0.0).unwrap();
        let c = s.coords().unwrap().to_vec();
        for i in 0..s.n() {
            for j in 0..s.n() {
                prop_assert_eq!(s.d(PointId(i), PointId(j)), (c[i] - c[j]).abs());
            }
        }
    }

    #[test]
    fn exact_matches_permutations((space, jobs) in space_and_jobs(7, 6, false)) {
        let t = exact_tour(&problem(&space, jobs.clone()), 14).unwrap();
        prop_assert!(close(t.completion, brute_force(&space, &jobs)));
        prop_assert!(close(t.completion, follow(&space, &jobs, &t.order)));
    }

    #[test]
    fn exact_matches_permutations_rides((space, jobs) in space_and_jobs(6, 5, true)) {
        let t = exact_tour(&problem(&space, jobs.clone()), 14).unwrap();
        prop_assert!(close(t.completion, brute_force(&space, &jobs)));
    }

    #[test]
    fn adding_a_request_never_helps((space, jobs) in space_and_jobs(7, 7, false)) {
        prop_assume!(!jobs.is_empty());
        let all = exact_tour(&problem(&space, jobs.clone()), 14).unwrap().completion;
        let fewer = exact_tour(&problem(&space, jobs[1..].to_vec()), 14).unwrap().completion;
        prop_assert!(fewer <= all + 1e-9);
    }

    #[test]
    fn approx_within_factor_three((space, jobs) in space_and_jobs(9, 8, false)) {
        let p = problem(&space, jobs);
        let e = exact_tour(&p, 14).unwrap().completion;
        let a = approx_tour(&p).unwrap().completion;
        prop_assert!(a >= e - 1e-9);
        prop_assert!(a <= 3.0 * e + 1e-9);
    }

    #[test]
    fn gamma_lower_bounds((space, jobs) in space_and_jobs(7, 5, false), anchor in 0usize..7, ar in 0.0..12.0f64) {
        let anchor = Request { loc: PointId(anchor % space.n()), release: ar };
        let subset: Vec<Request> = jobs.iter().map(|j| Request { loc: j.pickup, release: j.release }).collect();
        let g = gamma_tsp(&space, &subset, &anchor, 14).unwrap();
        for r in &subset {
            prop_assert!(g >= r.release - ar - 1e-9);
            prop_assert!(g >= 2.0 * space.d(anchor.loc, r.loc) - 1e-9);
        }
    }
}

fn table_strategy(monotone: bool) -> impl Strategy<Value = (usize, Vec<Vec<f64>>)> {
    (1usize..=6, 1usize..=4).prop_flat_map(move |(n, m)| {
        let size = 1usize << n;
        prop::collection::vec(prop::collection::vec(0.0..10.0f64, size), m).prop_map(move |raw| {
            let table = raw
                .into_iter()
                .map(|mut row| {
                    row[0] = 0.0;
                    if monotone {
                        for s in 1..size {
                            for i in 0..n {
                                if s & (1 << i) != 0 {
                                    row[s] = row[s].max(row[s & !(1 << i)]);
                                }
                            }
                        }
                    }
                    row
                })
                .collect();
            (n, table)
        })
    })
}

fn arities() -> [(Arity, usize); 4] {
    [(Arity::Finite(1), 1), (Arity::Finite(2), 2), (Arity::Finite(3), 3), (Arity::Unbounded, usize::MAX)]
}

fn run_gamma(n: usize, table: &[Vec<f64>], k: Arity, monotone: bool) -> f64 {
    let a: Vec<TableItem> = (0..n).map(TableItem::Left).collect();
    let b: Vec<TableItem> = (0..table.len()).map(TableItem::Right).collect();
    let oracle = TableOracle { costs: table.to_vec(), monotone };
    gamma_k(&a, &b, k, &oracle).unwrap().cost
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn partition_dp_matches_enumeration((n, table) in table_strategy(true)) {
        let mut prev = f64::INFINITY;
        for (k, kk) in arities() {
            let dp = run_gamma(n, &table, k, true);
            prop_assert!(close(dp, enumerate_covers(n, kk.min(n), &table)));
            prop_assert!(dp <= prev + 1e-12);
            prev = dp;
        }
        let single: f64 = (0..n).map(|i| table.iter().map(|r| r[1 << i]).fold(f64::INFINITY, f64::min)).sum();
        prop_assert!(close(run_gamma(n, &table, Arity::Finite(1), true), single));
    }

    #[test]
    fn overlap_search_matches_enumeration((n, table) in table_strategy(false)) {
        for (k, kk) in arities() {
            prop_assert!(close(run_gamma(n, &table, k, false), enumerate_covers(n, kk.min(n), &table)));
        }
    }
}

fn instance_strategy() -> impl Strategy<Value = Instance> {
    space_and_jobs(8, 6, false).prop_map(|(s, jobs)| {
        Instance::tsp(s, jobs.iter().map(|j| Request { loc: j.pickup, release: j.release }).collect()).unwrap()
    })
}

fn ride_instance_strategy() -> impl Strategy<Value = Instance> {
    space_and_jobs(6, 4, true).prop_map(|(s, jobs)| {
        let r = jobs.iter().map(|j| RideRequest { pickup: j.pickup, dropoff: j.dropoff, release: j.release }).collect();
        Instance::darp(s, r).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lambda_hierarchy(inst in instance_strategy(), seed in any::<u64>(), sl in 0.0..4.0f64, sr in 0.0..3.0f64) {
        let pred = perturb(&inst, &NoiseSpec::new(sr, sl, seed)).unwrap();
        prop_assume!(!inst.is_empty());
        let mut prev = f64::INFINITY;
        for (k, _) in arities() {
            let l = lambda_k(&inst, &pred, k, &OracleKind::Tsp).unwrap().lambda_k;
            prop_assert!(l >= -1e-12);
            prop_assert!(l <= prev + 1e-9);
            prev = l;
        }
        let same = PredictionSet::perfect(&inst);
        for (k, _) in arities() {
            prop_assert_eq!(lambda_k(&inst, &same, k, &OracleKind::Tsp).unwrap().lambda_k, 0.0);
        }
    }

    #[test]
    fn split_counts_and_symmetry(inst in instance_strategy(), seed in any::<u64>(), frac in 0.0..=1.0f64) {
        let mut noise = NoiseSpec::new(0.5, 1.0, seed);
        noise.fraction = frac;
        let pred = perturb(&inst, &noise).unwrap();
        let s = split_errors(&inst, &pred).unwrap();
        let n_pred = pred.requests().unwrap().len();
        prop_assert_eq!(s.unexpected.len() as i64 - s.absent.len() as i64, inst.len() as i64 - n_pred as i64);
        let swapped_inst = inst.with_requests(pred.requests().unwrap().clone()).unwrap();
        let swapped = split_errors(&swapped_inst, &PredictionSet::Requests(inst.requests.clone())).unwrap();
        prop_assert_eq!(swapped.unexpected, s.absent);
        prop_assert_eq!(swapped.absent, s.unexpected);
    }

    #[test]
    fn perturb_is_pure_and_valid(inst in instance_strategy(), seed in any::<u64>(), sl in 0.0..5.0f64, sr in 0.0..5.0f64) {
        let spec = NoiseSpec::new(sr, sl, seed);
        let a = perturb(&inst, &spec).unwrap();
        prop_assert_eq!(&a, &perturb(&inst, &spec).unwrap());
        for j in a.requests().unwrap().jobs() {
            prop_assert!(j.release >= 0.0);
            prop_assert!(inst.space.contains(j.pickup));
        }
    }

    #[test]
    fn traces_are_feasible(inst in instance_strategy(), seed in any::<u64>(), sl in 0.0..3.0f64) {
        let pred = perturb(&inst, &NoiseSpec::new(1.0, sl, seed)).unwrap();
        let opt = optimal(&inst, &SolverConfig::exact(14)).unwrap().completion;
        for algo in Algo::ALL.into_iter().filter(|a| !matches!(a, Algo::Mrin | Algo::Algohl)) {
            for approx in [false, true] {
                let cfg = AlgoConfig::new(algo).alpha(0.3).approx(approx);
                let mut p = cfg.build(Some(&pred)).unwrap();
                let trace = run(&inst, p.as_mut()).unwrap();
                prop_assert!(verify_trace(&inst, &trace).is_ok());
                prop_assert_eq!(trace.replayed_makespan().to_bits(), trace.makespan.to_bits());
                prop_assert!(trace.makespan >= opt - 1e-9, "{} below optimum", cfg.label());
            }
        }
    }

    #[test]
    fn ride_traces_are_feasible(inst in ride_instance_strategy(), seed in any::<u64>()) {
        let pred = perturb(&inst, &NoiseSpec::new(1.0, 1.0, seed)).unwrap();
        let opt = optimal(&inst, &SolverConfig::exact(14)).unwrap().completion;
        for algo in [Algo::Replan, Algo::Ignore, Algo::Smartstart, Algo::PredictReplan, Algo::DelayTrust, Algo::SmartTrust] {
            let cfg = AlgoConfig::new(algo).alpha(0.5);
            let mut p = cfg.build(Some(&pred)).unwrap();
            let trace = run(&inst, p.as_mut()).unwrap();
            prop_assert!(verify_trace(&inst, &trace).is_ok());
            prop_assert!(trace.makespan >= opt - 1e-9, "{} below optimum", cfg.label());
        }
    }

    #[test]
    fn half_line_policies(pts in prop::collection::vec((0.0..10.0f64, 0.0..10.0f64), 0..8), delta in -5.0..5.0f64) {
        let inst = covertour::gen::half_line_instance(&pts).unwrap();
        let opt = halfline_opt(pts.iter().copied());
        for cfg in [AlgoConfig::new(Algo::Mrin), AlgoConfig::new(Algo::Algohl).alpha(0.4)] {
            let pred = PredictionSet::Makespan((opt + delta).max(0.0));
            let mut p = cfg.build(Some(&pred)).unwrap();
            let trace = run(&inst, p.as_mut()).unwrap();
            prop_assert!(trace.makespan >= opt - 1e-9);
            prop_assert_eq!(trace.replayed_makespan().to_bits(), trace.makespan.to_bits());
        }
    }
}
