//! Randomized invariants across modules.

use proptest::prelude::*;

use crate::audit::{
    demand_set, envy_check, envy_pairs, gross_substitutes_check, ir_check, ir_violations, npt_check, GsVerdict,
};
use crate::flowcert::{build_d_minus2_with, build_flow_graph, decompose, decompose_raw, normalize_excluded, Vertex};
use crate::fuzz::*;
use crate::instance::{bundle_value, load, save, Instance};
use crate::matching::{brute_force_optimum, opt_excluding, social_optimum};
use crate::mechanisms::{subadditive_2x2, vcg_outcome, Clarke, MaxSingleton2x2, PivotRule, TwoAgentTopC};
use crate::rational::Rat;
use crate::valuation::{CapacitatedValuation, Valuation};
use crate::walrasian::{compute_walrasian_prices, prop31_chain, verify_walrasian};

fn hetero(seed: u64) -> Instance {
    random_instance(&mut case_rng(seed, 0), 4, 5, CapacityMode::Hetero)
}

fn homo(seed: u64) -> Instance {
    random_instance(&mut case_rng(seed, 0), 4, 5, CapacityMode::Homo)
}

/// All bundles of a unit-supply market over `m` goods as count vectors.
fn subsets(m: usize) -> Vec<Vec<u32>> {
    (0..1usize << m)
        .map(|mask| (0..m).map(|j| ((mask >> j) & 1) as u32).collect())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bundle_value_is_monotone_and_subadditive(seed in any::<u64>()) {
        let mut rng = case_rng(seed, 0);
        let m = 6;
        let inst = Instance::unit(vec![rand::Rng::gen_range(&mut rng, 0..=6)], vec![random_row(&mut rng, m)]).unwrap();
        let all = subsets(m);
        for s in &all {
            for t in &all {
                let vs = bundle_value(&inst, 0, s).unwrap();
                let vt = bundle_value(&inst, 0, t).unwrap();
                if s.iter().zip(t).all(|(a, b)| a <= b) {
                    prop_assert!(vs <= vt);
                }
                if s.iter().zip(t).all(|(a, b)| a + b <= 1) {
                    let union: Vec<u32> = s.iter().zip(t).map(|(a, b)| a + b).collect();
                    prop_assert!(bundle_value(&inst, 0, &union).unwrap() <= &vs + &vt);
                }
            }
        }
    }

    #[test]
    fn unbinding_capacity_is_additive(seed in any::<u64>()) {
        let mut rng = case_rng(seed, 0);
        let row = random_row(&mut rng, 5);
        let v = CapacitatedValuation::new(5, row.clone());
        for s in subsets(5) {
            let additive: Rat = row.iter().zip(&s).filter(|(_, &k)| k == 1).map(|(x, _)| x.clone()).sum();
            prop_assert_eq!(v.value(&s), additive);
        }
    }

    #[test]
    fn save_load_round_trip(seed in any::<u64>()) {
        let inst = hetero(seed);
        prop_assert_eq!(load(&save(&inst)).unwrap(), inst);
    }

    #[test]
    fn solver_matches_oracle(seed in any::<u64>()) {
        let inst = hetero(seed);
        let opt = social_optimum(&inst).unwrap();
        prop_assert_eq!(&opt.welfare, &brute_force_optimum(&inst).unwrap().welfare);
        opt.allocation.check_feasible(&inst).unwrap();
        for i in 0..inst.n_agents() {
            prop_assert!(opt_excluding(&inst, i).unwrap().welfare <= opt.welfare);
        }
    }

    #[test]
    fn pivots_ignore_own_row(seed in any::<u64>()) {
        let mut rng = case_rng(seed, 1);
        let inst = hetero(seed);
        for i in 0..inst.n_agents() {
            let moved = inst.with_row(i, random_row(&mut rng, inst.n_goods()));
            prop_assert_eq!(Clarke.pivot(&inst, i).unwrap(), Clarke.pivot(&moved, i).unwrap());
        }
        let two = random_two_agent(&mut rng, 6);
        let sq = random_capacitated_2x2(&mut rng);
        for i in 0..2 {
            let moved = two.with_row(i, random_row(&mut rng, two.n_goods()));
            prop_assert_eq!(TwoAgentTopC.pivot(&two, i).unwrap(), TwoAgentTopC.pivot(&moved, i).unwrap());
            let moved = sq.with_row(i, random_row(&mut rng, 2));
            prop_assert_eq!(MaxSingleton2x2.pivot(&sq, i).unwrap(), MaxSingleton2x2.pivot(&moved, i).unwrap());
        }
    }

    #[test]
    fn clarke_is_ir_and_npt(seed in any::<u64>()) {
        let inst = hetero(seed);
        let out = vcg_outcome(&inst, &Clarke).unwrap();
        prop_assert!(ir_check(&inst, &out).is_empty());
        prop_assert!(npt_check(&out).is_empty());
    }

    #[test]
    fn clarke_equal_capacities_envy_free(seed in any::<u64>()) {
        let inst = homo(seed);
        let out = vcg_outcome(&inst, &Clarke).unwrap();
        prop_assert!(envy_check(&inst, &out).is_empty());
    }

    #[test]
    fn clarke_no_envy_of_smaller_capacity(seed in any::<u64>()) {
        let inst = hetero(seed);
        let out = vcg_outcome(&inst, &Clarke).unwrap();
        for p in envy_check(&inst, &out) {
            prop_assert!(inst.capacities[p.envier] < inst.capacities[p.envied]);
        }
    }

    #[test]
    fn topc_envy_free_and_ir(seed in any::<u64>()) {
        let inst = random_two_agent(&mut case_rng(seed, 0), 6);
        let out = vcg_outcome(&inst, &TwoAgentTopC).unwrap();
        prop_assert!(envy_check(&inst, &out).is_empty());
        prop_assert!(ir_check(&inst, &out).is_empty());
    }

    #[test]
    fn max_singleton_envy_free_and_ir(seed in any::<u64>()) {
        let mut rng = case_rng(seed, 0);
        let vals = [random_subadditive(&mut rng), random_subadditive(&mut rng)];
        let out = subadditive_2x2(&vals[0], &vals[1]);
        prop_assert!(envy_pairs(&vals, &out.allocation, &out.payments).is_empty());
        prop_assert!(ir_violations(&vals, &out.allocation, &out.payments).is_empty());
    }

    #[test]
    fn papai_criterion_matches_envy(seed in any::<u64>()) {
        let inst = hetero(seed);
        let two = random_two_agent(&mut case_rng(seed, 1), 6);
        for (inst, rule) in [(&inst, &Clarke as &dyn PivotRule), (&two, &TwoAgentTopC)] {
            let out = vcg_outcome(inst, rule).unwrap();
            let envy = envy_check(inst, &out);
            for i in 0..inst.n_agents() {
                for j in 0..inst.n_agents() {
                    if i == j {
                        continue;
                    }
                    let bj = out.allocation.bundle(j);
                    let lhs = &out.pivot_values[i] - &out.pivot_values[j];
                    let rhs = bundle_value(inst, j, bj).unwrap() - bundle_value(inst, i, bj).unwrap();
                    let listed = envy.iter().any(|p| p.envier == i && p.envied == j);
                    prop_assert_eq!(listed, lhs > rhs);
                }
            }
        }
    }

    #[test]
    fn demand_bundles_attain_utility(seed in any::<u64>()) {
        let mut rng = case_rng(seed, 0);
        let v = random_capacitated(&mut rng, 6);
        let (p, _) = random_price_pair(&mut rng, v.num_goods());
        let d = demand_set(&v, &p).unwrap();
        for b in &d.optimal_bundles {
            let cost: Rat = b.iter().map(|&j| p[j].clone()).sum();
            prop_assert_eq!(v.value_of_set(b) - cost, d.utility.clone());
        }
    }

    #[test]
    fn capacitated_valuations_are_gross_substitutes(seed in any::<u64>()) {
        let mut rng = case_rng(seed, 0);
        let v = random_capacitated(&mut rng, 6);
        let pairs: Vec<_> = (0..5).map(|_| random_price_pair(&mut rng, v.num_goods())).collect();
        prop_assert_eq!(gross_substitutes_check(&v, &pairs).unwrap(), GsVerdict::Ok);
    }

    #[test]
    fn walrasian_certificates_verify(seed in any::<u64>()) {
        let inst = hetero(seed);
        let cert = compute_walrasian_prices(&inst).unwrap();
        prop_assert!(verify_walrasian(&inst, &cert.prices.0, &cert.allocation).unwrap().is_ok());
    }

    #[test]
    fn walrasian_duality(seed in any::<u64>()) {
        let inst = random_two_agent(&mut case_rng(seed, 0), 6);
        let cert = compute_walrasian_prices(&inst).unwrap();
        let revenue: Rat = (0..inst.n_goods())
            .filter(|&j| cert.allocation.good_total(j) > 0)
            .map(|j| cert.prices.0[j].clone())
            .sum();
        let surplus: Rat = cert.per_agent.iter().map(|a| a.demand_utility.clone()).sum();
        prop_assert_eq!(revenue + surplus, social_optimum(&inst).unwrap().welfare);
    }

    #[test]
    fn pivot_conflict_margin_is_half_epsilon(k in 1i64..100) {
        let eps = Rat::new(k, 100);
        let chain = prop31_chain(&eps, None).unwrap();
        prop_assert!(chain.verdict);
        prop_assert_eq!(chain.get("contradiction margin").unwrap().lhs.clone(), &eps * &Rat::new(1, 2));
    }

    #[test]
    fn decomposition_reproduces_flow(seed in any::<u64>()) {
        let inst = hetero(seed);
        let m = social_optimum(&inst).unwrap();
        for h in 0..inst.n_agents() {
            let mx = opt_excluding(&inst, h).unwrap();
            let g = build_flow_graph(&inst, &m.allocation, &mx.allocation, h).unwrap();
            let d = decompose_raw(&inst, &g).unwrap();
            let totals = d.arc_totals();
            prop_assert_eq!(totals.len(), g.arcs.len());
            for ((a, b), f) in totals {
                prop_assert_eq!(g.flow(a, b), f);
            }
            prop_assert_eq!(d.weighted_value(), &m.welfare - &mx.welfare);
            for p in &d.paths {
                let bound = g.excess_of(p.vertices[0]).min(-g.excess_of(*p.vertices.last().unwrap()));
                prop_assert!(i64::from(p.flow) <= bound);
            }
        }
    }

    #[test]
    fn normalized_graph_has_single_source(seed in any::<u64>()) {
        let inst = hetero(seed);
        let m = social_optimum(&inst).unwrap();
        for h in 0..inst.n_agents() {
            let mx = opt_excluding(&inst, h).unwrap();
            let norm = normalize_excluded(&inst, &m.allocation, &mx.allocation, h).unwrap();
            prop_assert_eq!(norm.welfare(&inst), mx.welfare.clone());
            let g = build_flow_graph(&inst, &m.allocation, &norm, h).unwrap();
            prop_assert!(g.arcs.iter().all(|a| a.to != Vertex::Agent(h)));
            let d = decompose(&inst, &g).unwrap();
            prop_assert!(d.cycles.is_empty());
        }
    }

    #[test]
    fn certificate_sandwich(seed in any::<u64>()) {
        let inst = hetero(seed);
        let m = social_optimum(&inst).unwrap();
        for hi in 0..inst.n_agents() {
            for lo in 0..inst.n_agents() {
                if hi == lo || inst.capacities[hi] < inst.capacities[lo] {
                    continue;
                }
                let cert = build_d_minus2_with(&inst, hi, lo, &m).unwrap();
                let oracle = brute_force_optimum(&inst.without_agent(lo)).unwrap().welfare;
                prop_assert!(oracle >= cert.value);
                prop_assert!(cert.value >= cert.bound);
            }
        }
    }
}
