use std::sync::OnceLock;

use cellmis::baselines::{benchmark_bp, centralized_constant_power};
use cellmis::dynamics::Event;
use cellmis::fractopt::{centralized_oracle, compute_rates, project_feasible};
use cellmis::harness::events::{live_state, random_churn, replay};
use cellmis::harness::{preset_config, run_pipeline, RunResults};
use cellmis::intgraph::{build_graph_distance, random_bounded_degree};
use cellmis::lp::{LinearProgram, Relation};
use cellmis::miscolor::{generate_family, verify_family};
use cellmis::scheduler::build_cycle;
use cellmis::topology::channel_gain;
use cellmis::{MisParams, Objective, Scenario, StreamKey};
use proptest::prelude::*;

fn scenario_from(ues: &[(f64, f64)], sbs: &[(f64, f64)]) -> Scenario {
    let n = ues.len();
    Scenario {
        ue_positions: ues.iter().map(|&(x, y)| [x, y, 0.0]).collect(),
        sbs_positions: sbs.iter().map(|&(x, y)| [x, y, 0.5]).collect(),
        serving: (0..n).collect(),
        pmax: vec![50.0; n],
        rmin: vec![0.0; n],
        noise: vec![1e-2; sbs.len()],
        path_loss_exponent: 3.0,
        wall_counts: None,
        wall_planes: None,
        wall_coeff: 1.0,
        fading_scale: None,
    }
}

fn rooms_dynamics() -> &'static RunResults {
    static RESULTS: OnceLock<RunResults> = OnceLock::new();
    RESULTS.get_or_init(|| run_pipeline(&preset_config("rooms-dynamics").unwrap()).unwrap())
}

/// Maximum of a 2-variable LP with `x, y ≥ 0` by enumerating every
/// intersection of two boundary lines.
fn lp_by_vertices(c: (f64, f64), rows: &[(f64, f64, f64)]) -> f64 {
    let mut lines = rows.to_vec();
    lines.push((1.0, 0.0, 0.0));
    lines.push((0.0, 1.0, 0.0));
    let mut best = f64::NEG_INFINITY;
    for i in 0..lines.len() {
        for j in i + 1..lines.len() {
            let (a1, b1, r1) = lines[i];
            let (a2, b2, r2) = lines[j];
            let det = a1 * b2 - a2 * b1;
            if det.abs() < 1e-12 {
                continue;
            }
            let x = (r1 * b2 - r2 * b1) / det;
            let y = (a1 * r2 - a2 * r1) / det;
            let feasible = x >= -1e-9 && y >= -1e-9 && rows.iter().all(|&(a, b, r)| a * x + b * y <= r + 1e-9);
            if feasible {
                best = best.max(c.0 * x + c.1 * y);
            }
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn coloring_yields_valid_families(n in 2usize..80, seed in any::<u64>()) {
        let key = StreamKey::root(seed);
        let g = random_bounded_degree(n, 4, 3 * n, &mut key.stream("graph").rng());
        let params = MisParams { h: 5, c: 0.5, c1: 2.0, c2: 2.0 };
        let family = generate_family(&g, &params, key.stream("coloring"), None).unwrap();
        if family.success {
            prop_assert_eq!(family.classes.len(), 5);
            prop_assert!(verify_family(&g, &family.classes).is_ok());
            for v in 0..n {
                prop_assert!(family.classes.iter().any(|c| c.contains(&v)));
            }
        }
    }

    #[test]
    fn cycle_error_within_classes_over_length(
        gamma in prop::collection::vec(0.0f64..1.0, 1..7),
        d in 0u32..5,
    ) {
        prop_assume!(gamma.iter().any(|&g| g > 1e-3));
        let s = build_cycle(&gamma, d).unwrap();
        let l = s.cycle_length();
        prop_assert!(l >= 1);
        prop_assert_eq!(s.slots_per_class.iter().sum::<u64>() as usize, l);
        let realized = s.realized_fractions();
        prop_assert!((realized.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(s.max_fraction_error(&gamma) <= gamma.len() as f64 / l as f64 + 1e-12);
    }

    #[test]
    fn projection_satisfies_variational_inequality(
        v in prop::collection::vec(-2.0f64..2.0, 2..6),
        r_raw in prop::collection::vec(0.0f64..4.0, 6),
        level in 0.0f64..1.0,
        mix in prop::collection::vec(0.0f64..1.0, 6),
    ) {
        let h = v.len();
        let r = &r_raw[..h];
        let rmax = r.iter().copied().fold(0.0, f64::max);
        let rmin = level * rmax;
        let p = project_feasible(&v, r, rmin).unwrap();
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        let rp: f64 = p.iter().zip(r).map(|(a, b)| a * b).sum();
        prop_assert!(rp >= rmin - 1e-10);

        // A feasible point: a random simplex point pulled toward the best vertex.
        let total: f64 = mix[..h].iter().sum::<f64>().max(1e-9);
        let s: Vec<f64> = mix[..h].iter().map(|m| m / total).collect();
        let best = (0..h).fold(0, |b, k| if r[k] > r[b] { k } else { b });
        let rs: f64 = s.iter().zip(r).map(|(a, b)| a * b).sum();
        let t = if rs >= rmin || rmax <= rs { 0.0 } else { (rmin - rs) / (rmax - rs) };
        let q: Vec<f64> = (0..h).map(|k| (1.0 - t) * s[k] + if k == best { t } else { 0.0 }).collect();
        let vi: f64 = (0..h).map(|k| (v[k] - p[k]) * (q[k] - p[k])).sum();
        prop_assert!(vi <= 1e-8, "⟨v−p, q−p⟩ = {vi}");
    }

    #[test]
    fn simplex_matches_vertex_enumeration(
        c in (-2.0f64..3.0, -2.0f64..3.0),
        rows in prop::collection::vec((0.1f64..3.0, 0.1f64..3.0, 0.5f64..5.0), 1..6),
    ) {
        let mut lp = LinearProgram::new(2, vec![c.0, c.1]);
        for &(a, b, r) in &rows {
            lp.push(vec![a, b], Relation::Le, r);
        }
        let (_, value) = lp.solve().optimal().map(|(x, v)| (x.to_vec(), v)).unwrap();
        let expect = lp_by_vertices(c, &rows);
        prop_assert!((value - expect).abs() <= 1e-7 * (1.0 + expect.abs()), "{value} vs {expect}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn benchmark_dominates_mis_and_on_off_policies(
        pts in prop::collection::vec(((-1.5f64..1.5, -1.5f64..1.5), (-0.3f64..0.3, -0.3f64..0.3)), 2..6),
        dth in 0.5f64..2.5,
        seed in any::<u64>(),
    ) {
        let sbs: Vec<(f64, f64)> = pts.iter().map(|p| p.0).collect();
        let ues: Vec<(f64, f64)> = pts.iter().map(|(s, o)| (s.0 + o.0, s.1 + o.1)).collect();
        let s = scenario_from(&ues, &sbs);
        let gains = channel_gain(&s, None).unwrap();
        let g = build_graph_distance(&s, dth);
        let family = generate_family(&g, &MisParams::for_graph(&g), StreamKey::root(seed), None).unwrap();
        prop_assume!(family.success);
        let rates = compute_rates(&s, &gains, &family.classes);
        let n = s.num_ues();
        for obj in [Objective::sum(n), Objective::MaxMin] {
            let mis = centralized_oracle(&rates, &s.rmin, &obj).unwrap().value;
            let bp = benchmark_bp(&s, &gains, &obj, &s.rmin, 16).unwrap().value;
            let constant = centralized_constant_power(&s, &gains, 1, &obj, &s.rmin).unwrap().value;
            prop_assert!(bp >= mis - 1e-9 * (1.0 + mis.abs()), "{} bp {bp} < mis {mis}", obj.name());
            prop_assert!(bp >= constant - 1e-9 * (1.0 + constant.abs()), "{} bp {bp} < constant {constant}", obj.name());
        }
    }

    #[test]
    fn churn_keeps_dynamics_invariants(seed in any::<u64>(), count in 1usize..40) {
        let res = rooms_dynamics();
        let events = random_churn(&res.config, count, &mut StreamKey::root(seed).rng()).unwrap();
        let out = replay(live_state(res).unwrap(), &events).unwrap();
        prop_assert!(out.clashes.is_empty());
        prop_assert!(out.conservation_failures.is_empty());
        prop_assert!(out.safety_violations.is_empty());
        let state = &out.final_state;
        let actual = state.actual_throughputs();
        for i in state.active_ues() {
            prop_assert!(actual[i] >= state.accounted(i) - 1e-9, "UE {i}: actual {} < accounted {}", actual[i], state.accounted(i));
        }
    }

    #[test]
    fn exits_in_any_order_stay_clash_free(order in Just((0..9usize).collect::<Vec<_>>()).prop_shuffle(), keep in 0usize..9) {
        let res = rooms_dynamics();
        let events: Vec<Event> = order[keep..].iter().map(|&u| Event::Exit(u)).collect();
        let out = replay(live_state(res).unwrap(), &events).unwrap();
        prop_assert!(out.clashes.is_empty());
        prop_assert!(out.safety_violations.is_empty());
        prop_assert_eq!(out.final_state.active_ues().len(), keep);
    }
}
