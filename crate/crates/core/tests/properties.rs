mod common;

use std::collections::BTreeSet;
use std::sync::OnceLock;

use netsynth::abstraction::{in_relation_mu, network_symbolic_succ, symbolic_succ, GridPoint, Quantizer};
use netsynth::automata::{combine, CombineOp, OutputLabel, SymbolTable};
use netsynth::heating;
use netsynth::plant::{
    accuracy_plan, quantization_bound, thermal_contraction, Dynamics, GasCertificate, InputSet, KInfinityFn,
    NetworkModel, PlanMode, ThermalParams,
};
use netsynth::runtime::{run_cen, run_dec, verify_enforcement, Pick};
use netsynth::specification::{build_word, build_word_plus, to_transition_spec, TransitionSpec};
use netsynth::synthesis::{
    algorithm1, algorithm2, extract_cen_controller, extract_dec_controllers, refine_inputs, select_word,
    DecControllerSet, RefineTarget, RegionSet, SynthesisOptions, WordPolicy,
};
use netsynth::Dec;
use proptest::prelude::*;
use rand::Rng;

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(cfg(256))]

    #[test]
    fn trim_algebra(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let s = common::random_system(&mut r, 7, 2);
        prop_assert_eq!(s.accessible_part().coaccessible_part(), s.coaccessible_part().accessible_part());
        let t = s.trim();
        prop_assert_eq!(t.trim(), t.clone());
        if !t.is_empty() {
            prop_assert!(t.is_nonblocking());
            prop_assert_eq!(t.accessible_part(), t.clone());
        }
        for k in [0, 3, 6] {
            prop_assert_eq!(t.marked_words(k), s.marked_words(k));
        }
    }

    #[test]
    fn combine_matches_set_oracle(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let symbols = SymbolTable::from_points([vec![Dec::ZERO], vec![Dec::ONE]]);
        let a = common::random_recognizer(&mut r, &symbols, 3);
        let b = common::random_recognizer(&mut r, &symbols, 3);
        let in_a = |w: &[usize]| a.system.accepts_input_word(w);
        let in_b = |w: &[usize]| b.system.accepts_input_word(w);
        let union = combine(CombineOp::Union, &[&a, &b]).unwrap();
        let prod = combine(CombineOp::Product, &[&a, &b]).unwrap();
        let cat = combine(CombineOp::Concat, &[&a, &b]).unwrap();
        let star = combine(CombineOp::Star, &[&a]).unwrap();
        let comp = combine(CombineOp::Complement, &[&a]).unwrap();
        for w in common::all_words(2, 8) {
            prop_assert_eq!(union.system.accepts_input_word(&w), in_a(&w) || in_b(&w));
            prop_assert_eq!(prod.system.accepts_input_word(&w), in_a(&w) && in_b(&w));
            prop_assert_eq!(comp.system.accepts_input_word(&w), !in_a(&w));
            let split = (0..=w.len()).any(|k| in_a(&w[..k]) && in_b(&w[k..]));
            prop_assert_eq!(cat.system.accepts_input_word(&w), split);
            // Prefix k of w splits into nonempty words of A.
            let mut ok = vec![false; w.len() + 1];
            ok[0] = true;
            for e in 1..=w.len() {
                ok[e] = (0..e).any(|s| ok[s] && in_a(&w[s..e]));
            }
            prop_assert_eq!(star.system.accepts_input_word(&w), ok[w.len()]);
        }
    }
}

proptest! {
    #![proptest_config(cfg(2000))]

    #[test]
    fn quantizer_soundness(z in -1.0e3f64..1.0e3, m in 1i64..500, scale in 0u32..4) {
        let eta = Dec::new(m, scale);
        let q = Quantizer::uniform(eta, 1).unwrap();
        let (g, near) = q.quantize_flagged(0, &[z]);
        let e = eta.to_f64();
        let back = q.dequantize_f64(&g)[0];
        if !near {
            prop_assert!(z - back >= -e / 2.0 && z - back < e / 2.0, "z {} back {}", z, back);
        }
        let exact = q.dequantize(&g).unwrap();
        prop_assert_eq!(q.quantize_exact(0, &exact), g.clone());
        prop_assert_eq!(q.quantize(0, &[back]), g);
    }

    #[test]
    fn half_open_cells_exact(k in -10_000i64..10_000, m in 1i64..500, scale in 0u32..4) {
        let eta = Dec::new(m, scale);
        let q = Quantizer::uniform(eta, 1).unwrap();
        let upper_edge = eta.mul_int(2 * k + 1).unwrap().checked_mul(Dec::new(5, 1)).unwrap();
        prop_assert_eq!(q.quantize_exact(0, &[upper_edge]).index, vec![k + 1]);
        let on_grid = eta.mul_int(k).unwrap();
        prop_assert_eq!(q.quantize_exact(0, &[on_grid]).index, vec![k]);
    }
}

fn random_thermal(r: &mut impl Rng, n: usize) -> NetworkModel {
    let p = ThermalParams {
        alpha: Dec::new(r.gen_range(0..=30), 2),
        beta: Dec::new(r.gen_range(0..=100), 3),
        gamma: Dec::new(r.gen_range(0..=20), 2),
        t_ext: Dec::from_int(r.gen_range(-10..=10)),
        t_heater: Dec::from_int(r.gen_range(30..=60)),
    };
    let set = InputSet::new((0..=4).map(|k| vec![Dec::new(25 * k, 2)]));
    NetworkModel::new(vec![1; n], vec![set; n], Dynamics::ThermalRing(p)).unwrap()
}

proptest! {
    #![proptest_config(cfg(200))]

    #[test]
    fn step_agrees_with_psi(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let n = r.gen_range(3..=6);
        let model = if r.gen_bool(0.5) { random_thermal(&mut r, n) } else { common::random_linear_model(&mut r, n, 5) };
        for _ in 0..50 {
            let x: Vec<f64> = (0..n).map(|_| r.gen_range(-30.0..30.0)).collect();
            let idx: Vec<usize> = (0..n).map(|i| r.gen_range(0..model.inputs(i).len())).collect();
            let next = model.step_by_index(&x, &idx);
            for i in 0..n {
                let w = model.gather_neighbors(&x, i);
                let psi = model.psi_eval(i, model.component_slice(&x, i), &w, model.inputs(i).point(idx[i])).unwrap();
                prop_assert_eq!(model.component_slice(&next, i), psi.as_slice());
            }
        }
    }

    #[test]
    fn bound_monotone(c in 0.01f64..5.0, p in 0.2f64..4.0, c2 in 0.01f64..2.0, a in 0.001f64..10.0, b in 0.001f64..10.0) {
        let forms = [
            KInfinityFn::Linear { c },
            KInfinityFn::Power { c, p },
            KInfinityFn::Table { points: vec![(0.0, 0.0), (1.0, c2), (3.0, c2 + c)] },
        ];
        for rho in &forms {
            for alpha in &forms {
                let cert = GasCertificate {
                    weights: vec![1.0],
                    alpha_lo: alpha.clone(),
                    alpha_hi: KInfinityFn::Linear { c: c2 + 1.0 },
                    rho: rho.clone(),
                    sigma: KInfinityFn::Power { c: c2, p },
                };
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                let bl = quantization_bound(&cert, lo).unwrap();
                let bh = quantization_bound(&cert, hi).unwrap();
                prop_assert!(bl <= bh * (1.0 + 1e-9) + 1e-12, "{} > {}", bl, bh);
            }
        }
    }

    #[test]
    fn plans_satisfy_their_constraints(c in 0.001f64..0.5, theta_m in 1i64..2000, pts in proptest::collection::vec(-400i64..400, 1..6)) {
        let cert = GasCertificate {
            weights: vec![1.0],
            alpha_lo: KInfinityFn::identity(),
            alpha_hi: KInfinityFn::identity(),
            rho: KInfinityFn::Linear { c },
            sigma: KInfinityFn::identity(),
        };
        let theta = Dec::new(theta_m, 3);
        let y_q: Vec<Vec<Dec>> = pts.iter().map(|v| vec![Dec::new(*v, 2)]).collect();
        for mode in [PlanMode::Budget, PlanMode::GridAligned] {
            if let Ok(plan) = accuracy_plan(&cert, theta, &y_q, mode) {
                let bound = quantization_bound(&cert, plan.mu.to_f64()).unwrap();
                prop_assert!(plan.eta.to_f64() <= bound * (1.0 + 1e-12));
                match mode {
                    PlanMode::Budget => prop_assert!(plan.mu.checked_add(plan.eta.checked_mul(Dec::new(5, 1)).unwrap()).unwrap() <= theta),
                    PlanMode::GridAligned => {
                        prop_assert!(plan.mu <= theta);
                        prop_assert!(y_q.iter().flatten().all(|v| v.is_multiple_of(plan.eta)));
                    }
                }
            }
        }
    }

    #[test]
    fn contraction_brute_force(a in 0i64..=50, b in 0i64..=100, g in 0i64..=100) {
        let (alpha, beta, gamma) = (Dec::new(a, 2), Dec::new(b, 3), Dec::new(g, 3));
        let exact = thermal_contraction(alpha, beta, gamma).unwrap().to_f64();
        let (af, bf, gf) = (alpha.to_f64(), beta.to_f64(), gamma.to_f64());
        let brute = (0..=1000)
            .map(|k| k as f64 / 1000.0)
            .map(|u| (1.0 - 2.0 * af - bf - gf * u).abs() + 2.0 * af)
            .fold(f64::MIN, f64::max);
        prop_assert!((exact - brute).abs() < 1e-12, "{} vs {}", exact, brute);
    }

    #[test]
    fn symbolic_succ_deterministic(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let model = heating::ring_model(4, &heating::paper_input_grid()).unwrap();
        let q = Quantizer::uniform(Dec::new(1, 2), 4).unwrap();
        let xi: Vec<GridPoint> = (0..4).map(|i| GridPoint { component: i, index: vec![r.gen_range(1500..2200)] }).collect();
        let u: Vec<Vec<Dec>> = (0..4).map(|i| model.inputs(i).point(r.gen_range(0..41)).to_vec()).collect();
        let a = network_symbolic_succ(&model, &q, &xi, &u).unwrap();
        let b = network_symbolic_succ(&model, &q, &xi, &u).unwrap();
        prop_assert_eq!(&a, &b);
        let w: Vec<GridPoint> = model.neighbors(0).unwrap().iter().map(|j| xi[*j].clone()).collect();
        prop_assert_eq!(symbolic_succ(&model, &q, 0, &xi[0], &w, &u[0]).unwrap(), a[0].clone());
    }
}

proptest! {
    #![proptest_config(cfg(1000))]

    /// Related pairs stay related under every sampled joint input.
    #[test]
    fn bisimulation_spot_check(seed in any::<u64>()) {
        let n = 3;
        let mut r = common::rng(seed);
        let model = heating::ring_model(n, &heating::paper_input_grid()).unwrap();
        let cert = heating::certificate(n);
        let plan = accuracy_plan(&cert, Dec::new(5, 1), &heating::schedule_word(n), PlanMode::GridAligned).unwrap();
        let mu = plan.mu.to_f64();
        let q = Quantizer::uniform(plan.eta, n).unwrap();
        let xi: Vec<GridPoint> = (0..n).map(|i| GridPoint { component: i, index: vec![r.gen_range(1000..3000)] }).collect();
        let center: Vec<f64> = xi.iter().flat_map(|g| q.dequantize_f64(g)).collect();
        let x: Vec<f64> = center.iter().map(|c| c + r.gen_range(-mu..=mu)).collect();
        prop_assume!(in_relation_mu(&cert, &q, mu, &x, &xi));
        for _ in 0..20 {
            let idx: Vec<usize> = (0..n).map(|_| r.gen_range(0..41)).collect();
            let u: Vec<Vec<Dec>> = idx.iter().enumerate().map(|(i, k)| model.inputs(i).point(*k).to_vec()).collect();
            let x_next = model.step_by_index(&x, &idx);
            let xi_next = network_symbolic_succ(&model, &q, &xi, &u).unwrap();
            prop_assert!(in_relation_mu(&cert, &q, mu, &x_next, &xi_next));
        }
    }
}

fn transition_spec_words(sq: &TransitionSpec, max_len: usize) -> BTreeSet<Vec<Vec<Dec>>> {
    sq.system()
        .marked_words(max_len)
        .into_iter()
        .map(|w| {
            w.into_iter()
                .map(|o| match o {
                    OutputLabel::Point(p) => p,
                    OutputLabel::Tag(t) => panic!("tag {t} in a spec system"),
                })
                .collect()
        })
        .collect()
}

proptest! {
    #![proptest_config(cfg(100))]

    #[test]
    fn transition_spec_preserves_language(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let spec = common::random_spec(&mut r, 2, 5);
        prop_assert!(spec.system().is_deterministic());
        let sq = to_transition_spec(&spec);
        let k = 2 * spec.system().states().len() + 2;
        // States of the transition system are spec edges, so the empty word is not representable.
        let mut expected = spec.marked_point_words(k);
        expected.remove(&Vec::new());
        prop_assert_eq!(transition_spec_words(&sq, k), expected);
    }

    #[test]
    fn dec_equals_cen(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let inst = common::random_instance(&mut r, 3, 4, 5);
        let opts = SynthesisOptions::default();
        let a1 = algorithm1(&inst.model, &inst.q, &inst.sq, &opts).unwrap();
        let a2 = algorithm2(&inst.model, &inst.q, &inst.sq, &opts, Some(1 << 12)).unwrap();
        prop_assert_eq!(a1.table.retained(), a2.table.retained());
        prop_assert_eq!(&a1.spec.trim, &a2.spec.trim);
        let oracle = inst.sq.system().filter_transitions(|t| common::joint_oracle(&inst).contains(t)).trim();
        prop_assert_eq!(&a1.spec.trim, &oracle);
        prop_assert_eq!(a1.spec.trim.marked_words(8), a2.spec.trim.marked_words(8));
    }

    #[test]
    fn parallel_determinism(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let inst = common::random_instance(&mut r, 4, 5, 6);
        let runs: Vec<_> = [1, 2, 4]
            .iter()
            .map(|w| algorithm1(&inst.model, &inst.q, &inst.sq, &SynthesisOptions { workers: *w, slack: 0 }).unwrap())
            .collect();
        prop_assert_eq!(&runs[0], &runs[1]);
        prop_assert_eq!(&runs[0], &runs[2]);
    }
}

struct HeatingSetup {
    model: NetworkModel,
    dec: DecControllerSet,
    cen: netsynth::synthesis::CenController,
    theta: f64,
}

/// Heating ring of 4 rooms designed once per process: planned parameters,
/// refined inputs, the shortest word.
fn heating_setup() -> &'static HeatingSetup {
    static CELL: OnceLock<HeatingSetup> = OnceLock::new();
    CELL.get_or_init(|| {
        let n = 4;
        let cert = heating::certificate(n);
        let word = heating::schedule_word(n);
        let plan = accuracy_plan(&cert, Dec::new(5, 1), &word, PlanMode::GridAligned).unwrap();
        let q = Quantizer::uniform(plan.eta, n).unwrap();
        let base = heating::ring_model(n, &heating::paper_input_grid()).unwrap();
        let opts = SynthesisOptions::default();
        let sq = to_transition_spec(&build_word(&word).unwrap());
        let out = refine_inputs(&base, &heating::paper_input_grid(), &q, &sq, RefineTarget::Full, 4001, &opts).unwrap();
        let w = select_word(&out.result.spec.trim, &sq, WordPolicy::Shortest).unwrap();
        let mu = plan.mu.to_f64();
        let dec = extract_dec_controllers(&out.model, &q, &cert, mu, &sq, &w, &out.result.table).unwrap();
        let a2 = algorithm2(&out.model, &q, &sq, &opts, None).unwrap();
        let cen = extract_cen_controller(&out.model, &q, &cert, mu, &sq, &a2.spec, &a2.table).unwrap();
        HeatingSetup { model: out.model, dec, cen, theta: plan.theta.to_f64() }
    })
}

proptest! {
    #![proptest_config(cfg(64))]

    #[test]
    fn heating_closed_loop_enforces(seed in any::<u64>()) {
        let h = heating_setup();
        let mut r = common::rng(seed);
        let x0 = h.dec.initial_region.sample(&mut r);
        let tr = run_dec(&h.model, &h.dec, &x0, Pick::Min).unwrap();
        let initial = RegionSet { boxes: vec![h.dec.initial_region.clone()] };
        let final_ = RegionSet { boxes: vec![h.dec.final_region.clone()] };
        let v = verify_enforcement(&tr, &h.dec.word.word, h.theta, &initial, &final_).unwrap();
        prop_assert!(v.enforced, "{:?}", v);
        // Trace dynamics consistency.
        for t in 0..tr.inputs.len() {
            prop_assert_eq!(&h.model.step(&tr.states[t], &tr.inputs[t]).unwrap(), &tr.states[t + 1]);
        }
    }

    #[test]
    fn open_loop_inputs_independent_of_x0(seed in any::<u64>(), pick in prop_oneof![Just(Pick::Min), Just(Pick::Max), any::<u64>().prop_map(Pick::Seeded)]) {
        let h = heating_setup();
        let mut r = common::rng(seed);
        let a = run_dec(&h.model, &h.dec, &h.dec.initial_region.sample(&mut r), pick).unwrap();
        let b = run_dec(&h.model, &h.dec, &h.dec.initial_region.sample(&mut r), pick).unwrap();
        prop_assert_eq!(&a.inputs, &b.inputs);
        let c = run_cen(&h.model, &h.cen, &a.states[0], Pick::Min, pick, None).unwrap();
        prop_assert_eq!(&a.inputs, &c.inputs);
        prop_assert_eq!(&a.states, &c.states);
    }
}

/// Full enforceability holds exactly when the trimmed controlled system
/// equals the trimmed spec system, in both directions.
#[test]
fn full_enforceability_iff_trims_equal() {
    let n = 4;
    let word = heating::schedule_word(n);
    let sq = to_transition_spec(&build_word_plus(&word).unwrap());
    let q = Quantizer::uniform(Dec::new(1, 2), n).unwrap();
    let opts = SynthesisOptions::default();
    for (step, expect) in [("0.0025", true), ("0.025", false)] {
        let grid = netsynth::plant::InputGrid { start: Dec::ZERO, step: step.parse().unwrap(), stop: Dec::ONE };
        let model = heating::ring_model(n, &grid).unwrap();
        let a2 = algorithm2(&model, &q, &sq, &opts, None).unwrap();
        let every_word = a2.spec.trim.marked_words(26) == sq.system().trim().marked_words(26);
        assert_eq!(a2.spec.trim == sq.system().trim(), expect, "step {step}");
        assert_eq!(every_word, expect, "step {step}");
    }
}

proptest! {
    #![proptest_config(cfg(100))]

    #[test]
    fn word_plus_shortest_is_the_word(pts in proptest::collection::vec(proptest::collection::vec(-3i64..3, 2), 1..7)) {
        let word: Vec<Vec<Dec>> = pts.iter().map(|p| p.iter().map(|v| Dec::from_int(*v)).collect()).collect();
        let spec = build_word_plus(&word).unwrap();
        let words = spec.marked_point_words(word.len());
        let shortest = words.iter().map(Vec::len).min().unwrap();
        prop_assert_eq!(shortest, word.len());
        prop_assert!(words.contains(&word));
        let doubled: Vec<Vec<Dec>> = word.iter().chain(&word).cloned().collect();
        prop_assert!(spec.marked_point_words(doubled.len()).contains(&doubled));
    }
}
