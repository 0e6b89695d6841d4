//! Acceptance suite: one line per criterion, then a single verdict.
//!
//! Library results are checked against oracles written here: brute-force
//! welfare, unit-expanded valuations, direct envy margins and exhaustive
//! demand enumeration.

use std::time::{Duration, Instant};

use capvcg::audit::{gross_substitutes_check, ic_probe, GsVerdict};
use capvcg::flowcert::{build_d_minus2_with, thm41_chain, thm41_profiles};
use capvcg::fuzz::{
    case_rng, random_capacitated, random_capacitated_2x2, random_instance, random_price_pair, random_row,
    random_subadditive, random_two_agent, CapacityMode,
};
use capvcg::mechanisms::{subadditive_2x2, vcg_outcome, Clarke, MaxSingleton2x2, TwoAgentTopC};
use capvcg::walrasian::{compute_walrasian_prices, prop31_chain, prop31_instances};
use capvcg::{
    brute_force_optimum, load, opt_excluding, social_optimum, Allocation, Instance, Rat, SetFunction,
    Subadditive2x2Valuation,
};

const CASES: u64 = 1000;
const FIXTURE: &[u8] = include_bytes!("../fixtures/example1.json");

fn r(n: i64, d: i64) -> Rat {
    Rat::new(n, d)
}

// ---------- oracles ----------

/// Value of `bundle` to `agent`: the best `capacity` units, unit by unit.
fn unit_value(inst: &Instance, agent: usize, bundle: &[u32]) -> Rat {
    let mut units: Vec<Rat> = bundle
        .iter()
        .enumerate()
        .flat_map(|(j, &k)| std::iter::repeat_n(inst.values[agent][j].clone(), k as usize))
        .collect();
    units.sort_by(|a, b| b.cmp(a));
    units.into_iter().take(inst.capacities[agent] as usize).sum()
}

fn oracle_welfare(inst: &Instance, alloc: &Allocation) -> Rat {
    (0..inst.n_agents()).map(|i| unit_value(inst, i, &alloc.units[i])).sum()
}

fn feasible(inst: &Instance, alloc: &Allocation) -> bool {
    (0..inst.n_agents()).all(|i| alloc.units[i].iter().sum::<u32>() <= inst.capacities[i])
        && (0..inst.n_goods()).all(|j| alloc.units.iter().map(|row| row[j]).sum::<u32>() <= inst.supplies[j])
}

/// `(envier, envied, margin)` for every strictly envious pair.
fn oracle_envy(inst: &Instance, alloc: &Allocation, pay: &[Rat]) -> Vec<(usize, usize, Rat)> {
    let n = inst.n_agents();
    let mut pairs = Vec::new();
    for i in 0..n {
        let own = unit_value(inst, i, &alloc.units[i]) - pay[i].clone();
        for j in (0..n).filter(|&j| j != i) {
            let other = unit_value(inst, i, &alloc.units[j]) - pay[j].clone();
            if other > own {
                pairs.push((i, j, other - own.clone()));
            }
        }
    }
    pairs
}

fn oracle_ir(inst: &Instance, alloc: &Allocation, pay: &[Rat]) -> usize {
    (0..inst.n_agents()).filter(|&i| unit_value(inst, i, &alloc.units[i]) < pay[i]).count()
}

/// Clarke payments from brute-force optima.
fn oracle_clarke(inst: &Instance, alloc: &Allocation) -> Vec<Rat> {
    let total = oracle_welfare(inst, alloc);
    (0..inst.n_agents())
        .map(|i| {
            let without = brute_force_optimum(&inst.without_agent(i)).unwrap().welfare;
            without - (total.clone() - unit_value(inst, i, &alloc.units[i]))
        })
        .collect()
}

/// Every multiset bundle within supplies and the agent's capacity.
fn bundles(supplies: &[u32], cap: u32) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for &q in supplies {
        out = out
            .into_iter()
            .flat_map(|b: Vec<u32>| {
                (0..=q).map(move |k| {
                    let mut b = b.clone();
                    b.push(k);
                    b
                })
            })
            .collect();
    }
    out.retain(|b| b.iter().sum::<u32>() <= cap);
    out
}

/// Whether `alloc` at `prices` is an equilibrium, by exhaustive demand search.
fn oracle_walrasian(inst: &Instance, prices: &[Rat], alloc: &Allocation) -> Result<(), String> {
    if prices.iter().any(|p| *p < Rat::zero()) {
        return Err("negative price".into());
    }
    if !feasible(inst, alloc) {
        return Err("infeasible allocation".into());
    }
    for j in 0..inst.n_goods() {
        let sold: u32 = alloc.units.iter().map(|row| row[j]).sum();
        if sold < inst.supplies[j] && prices[j] != Rat::zero() {
            return Err(format!("good {j} has unsold units at price {}", prices[j]));
        }
    }
    let cost = |b: &[u32]| -> Rat { b.iter().zip(prices).map(|(&k, p)| p.times(k)).sum() };
    for i in 0..inst.n_agents() {
        let held = unit_value(inst, i, &alloc.units[i]) - cost(&alloc.units[i]);
        for b in bundles(&inst.supplies, inst.capacities[i]) {
            if unit_value(inst, i, &b) - cost(&b) > held {
                return Err(format!("agent {i} prefers {b:?}"));
            }
        }
    }
    Ok(())
}

fn sub_value(v: &Subadditive2x2Valuation, bundle: &[u32]) -> Rat {
    match (bundle[0], bundle[1]) {
        (0, 0) => Rat::zero(),
        (1, 0) => v.single(0).clone(),
        (0, 1) => v.single(1).clone(),
        _ => v.pair().clone(),
    }
}

// ---------- criteria ----------

type Outcome = (bool, String);

fn criterion1() -> Outcome {
    let inst = load(FIXTURE).unwrap();
    let out = vcg_outcome(&inst, &Clarke).unwrap();
    let envy = oracle_envy(&inst, &out.allocation, &out.payments);
    let ok = out.payments == [r(1, 1), r(0, 1)]
        && oracle_clarke(&inst, &out.allocation) == out.payments
        && envy == [(0, 1, r(1, 1))];
    (ok, format!("payments {:?}, envy {:?}", out.payments, envy))
}

fn criterion2() -> Outcome {
    let mut envious = 0;
    let mut payment_mismatch = 0;
    for i in 0..CASES {
        let inst = random_instance(&mut case_rng(2, i), 4, 5, CapacityMode::Homo);
        let out = vcg_outcome(&inst, &Clarke).unwrap();
        if oracle_clarke(&inst, &out.allocation) != out.payments {
            payment_mismatch += 1;
        }
        if !oracle_envy(&inst, &out.allocation, &out.payments).is_empty() {
            envious += 1;
        }
    }
    (
        envious == 0 && payment_mismatch == 0,
        format!("{envious} envious instances, {payment_mismatch} payment mismatches in {CASES}"),
    )
}

fn criterion3() -> Outcome {
    let mut bad_envy = 0;
    let mut bad_cert = 0;
    let mut certs = 0;
    for i in 0..CASES {
        let inst = random_instance(&mut case_rng(3, i), 4, 5, CapacityMode::Hetero);
        let opt = social_optimum(&inst).unwrap();
        let out = vcg_outcome(&inst, &Clarke).unwrap();
        let caps = &inst.capacities;
        bad_envy += oracle_envy(&inst, &out.allocation, &out.payments)
            .iter()
            .filter(|(a, b, _)| caps[*a] >= caps[*b])
            .count();
        for hi in 0..inst.n_agents() {
            for lo in (0..inst.n_agents()).filter(|&lo| lo != hi && caps[hi] >= caps[lo]) {
                certs += 1;
                let Ok(cert) = build_d_minus2_with(&inst, hi, lo, &opt) else {
                    bad_cert += 1;
                    continue;
                };
                let m_lo = &opt.allocation.units[lo];
                let swap: Rat = m_lo
                    .iter()
                    .enumerate()
                    .map(|(j, &k)| (inst.values[hi][j].clone() - inst.values[lo][j].clone()).times(k))
                    .sum();
                let bound = brute_force_optimum(&inst.without_agent(hi)).unwrap().welfare + swap;
                let top = brute_force_optimum(&inst.without_agent(lo)).unwrap().welfare;
                let d = &cert.allocation;
                let value = oracle_welfare(&inst, d);
                let holds = feasible(&inst, d)
                    && d.units[lo].iter().all(|&k| k == 0)
                    && value == cert.value
                    && value >= bound
                    && top >= value;
                if !holds {
                    bad_cert += 1;
                }
            }
        }
    }
    (
        bad_envy == 0 && bad_cert == 0,
        format!("{bad_envy} envy pairs with c_i >= c_j, {bad_cert}/{certs} certificates failing"),
    )
}

fn criterion4() -> Outcome {
    let (mut envy, mut ir, mut witnesses) = (0, 0, 0);
    for i in 0..CASES {
        let mut rng = case_rng(4, i);
        let inst = random_two_agent(&mut rng, 6);
        let out = vcg_outcome(&inst, &TwoAgentTopC).unwrap();
        envy += oracle_envy(&inst, &out.allocation, &out.payments).len();
        ir += oracle_ir(&inst, &out.allocation, &out.payments);
        for agent in 0..2 {
            let rows: Vec<Vec<Rat>> = (0..50).map(|_| random_row(&mut rng, inst.n_goods())).collect();
            witnesses += ic_probe(&inst, &TwoAgentTopC, agent, &rows).unwrap().len();
        }
    }
    (
        envy == 0 && ir == 0 && witnesses == 0,
        format!("{envy} envy pairs, {ir} IR violations, {witnesses} IC witnesses over {CASES} instances"),
    )
}

fn criterion5() -> Outcome {
    let x = r(1, 1);
    let eps = r(1, 10);
    let chain = thm41_chain(1, &x, &eps).unwrap();
    let conclusion = chain.steps.last().unwrap().lhs.clone();
    let general = thm41_chain(3, &r(2, 1), &eps).unwrap();
    let general_conclusion = general.steps.last().unwrap().lhs.clone();
    let [_, pb, pc] = thm41_profiles(1, &x, &eps).unwrap();
    let topc = vcg_outcome(&pc, &TwoAgentTopC).unwrap();
    let clarke = vcg_outcome(&pb, &Clarke).unwrap();
    let envy = oracle_envy(&pb, &clarke.allocation, &clarke.payments);
    let margin = envy.first().map(|e| e.2.clone());

    let checks = [
        ("chain", chain.verdict && conclusion == r(9, 10)),
        ("topc pays -1 on (c)", topc.payments[0] == r(-1, 1)),
        ("clarke margin 1/10 on (b)", envy.len() == 1 && margin == Some(r(1, 10))),
        ("general chain", general.verdict && general_conclusion == r(17, 10)),
    ];
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    (
        failed.is_empty(),
        format!(
            "h_1(0,0) >= {conclusion}; topc payments {:?}; clarke envy {:?}; general bound {general_conclusion}; failed: {failed:?}",
            topc.payments, envy
        ),
    )
}

fn criterion6() -> Outcome {
    let eps = r(1, 5);
    let chain = prop31_chain(&eps, None).unwrap();
    let bound = chain.get("h_1(v_2) lower bound").unwrap().lhs.clone();
    let margin = chain.get("contradiction margin").unwrap().lhs.clone();
    let (v, _) = prop31_instances(&eps).unwrap();
    let cert = compute_walrasian_prices(&v).unwrap();
    let p = &cert.prices.0;
    let verified = oracle_walrasian(&v, p, &cert.allocation);
    let ok = chain.verdict
        && bound == r(31, 10)
        && margin == r(1, 10)
        && margin == eps.clone() * r(1, 2)
        && verified.is_ok()
        && p[0] >= r(9, 10)
        && p[1] >= r(1, 1);
    (ok, format!("h_1 >= {bound}, margin {margin}, prices {p:?}, oracle {verified:?}"))
}

fn criterion7() -> Outcome {
    let mut failures = 0;
    for i in 0..CASES {
        let mut rng = case_rng(7, i);
        let v = random_capacitated(&mut rng, 6);
        let pairs: Vec<_> = (0..5).map(|_| random_price_pair(&mut rng, v.values.len())).collect();
        if gross_substitutes_check(&v, &pairs).unwrap() != GsVerdict::Ok {
            failures += 1;
        }
    }
    let complements = SetFunction::new(2, vec![r(0, 1), r(0, 1), r(0, 1), r(1, 1)]).unwrap();
    let fixture_pair = vec![(vec![r(1, 4), r(1, 4)], vec![r(1, 4), r(2, 1)])];
    let rejected = matches!(
        gross_substitutes_check(&complements, &fixture_pair).unwrap(),
        GsVerdict::Counterexample(_)
    );
    (
        failures == 0 && rejected,
        format!("{failures}/{CASES} capacitated failures, complements fixture rejected: {rejected}"),
    )
}

fn criterion8() -> Outcome {
    let (mut envy, mut ir, mut suboptimal) = (0, 0, 0);
    for i in 0..CASES {
        let mut rng = case_rng(8, i);
        let vals = [random_subadditive(&mut rng), random_subadditive(&mut rng)];
        let out = subadditive_2x2(&vals[0], &vals[1]);
        let a = &out.allocation.units;
        let u = |k: usize, b: &[u32], p: &Rat| sub_value(&vals[k], b) - p.clone();
        for k in 0..2 {
            if u(k, &a[1 - k], &out.payments[1 - k]) > u(k, &a[k], &out.payments[k]) {
                envy += 1;
            }
            if u(k, &a[k], &out.payments[k]) < Rat::zero() {
                ir += 1;
            }
        }
        let welfare = sub_value(&vals[0], &a[0]) + sub_value(&vals[1], &a[1]);
        const SHAPES: [[u32; 2]; 4] = [[0, 0], [1, 0], [0, 1], [1, 1]];
        let mut best = Rat::zero();
        for b0 in &SHAPES {
            for b1 in SHAPES.iter().filter(|b1| b0[0] + b1[0] <= 1 && b0[1] + b1[1] <= 1) {
                best = best.max(sub_value(&vals[0], b0) + sub_value(&vals[1], b1));
            }
        }
        if welfare != best {
            suboptimal += 1;
        }
    }

    let mut disagree = 0;
    for i in 0..CASES {
        let inst = random_capacitated_2x2(&mut case_rng(80, i));
        let out = vcg_outcome(&inst, &MaxSingleton2x2).unwrap();
        let h: Vec<Rat> = (0..2)
            .map(|k| {
                let o = 1 - k;
                if inst.capacities[o] == 0 {
                    Rat::zero()
                } else {
                    inst.values[o][0].clone().max(inst.values[o][1].clone())
                }
            })
            .collect();
        let as_sub = [0, 1].map(|k| {
            Subadditive2x2Valuation::from_capacitated(inst.capacities[k], &inst.values[k][0], &inst.values[k][1])
        });
        let sub_out = subadditive_2x2(&as_sub[0], &as_sub[1]);
        let ok = out.pivot_values == h
            && sub_out.pivot_values == h
            && oracle_envy(&inst, &out.allocation, &out.payments).is_empty()
            && oracle_ir(&inst, &out.allocation, &out.payments) == 0
            && oracle_welfare(&inst, &out.allocation) == brute_force_optimum(&inst).unwrap().welfare;
        if !ok {
            disagree += 1;
        }
    }
    (
        envy == 0 && ir == 0 && suboptimal == 0 && disagree == 0,
        format!(
            "subadditive: {envy} envy, {ir} IR, {suboptimal} inefficient; capacitated: {disagree}/{CASES} disagreeing"
        ),
    )
}

fn criterion9() -> Outcome {
    let (mut welfare_mismatch, mut excl_mismatch, mut bad_cert) = (0, 0, 0);
    for i in 0..CASES {
        let inst = random_instance(&mut case_rng(9, i), 4, 5, CapacityMode::Hetero);
        let opt = social_optimum(&inst).unwrap();
        let brute = brute_force_optimum(&inst).unwrap();
        if opt.welfare != brute.welfare
            || oracle_welfare(&inst, &opt.allocation) != opt.welfare
            || !feasible(&inst, &opt.allocation)
        {
            welfare_mismatch += 1;
        }
        let h = (i as usize) % inst.n_agents();
        if opt_excluding(&inst, h).unwrap().welfare != brute_force_optimum(&inst.without_agent(h)).unwrap().welfare {
            excl_mismatch += 1;
        }
        let cert = compute_walrasian_prices(&inst).unwrap();
        if oracle_walrasian(&inst, &cert.prices.0, &cert.allocation).is_err() {
            bad_cert += 1;
        }
    }
    (
        welfare_mismatch == 0 && excl_mismatch == 0 && bad_cert == 0,
        format!(
            "{welfare_mismatch} optimum mismatches, {excl_mismatch} exclusion mismatches, {bad_cert} rejected certificates in {CASES}"
        ),
    )
}

#[test]
fn acceptance() {
    let criteria: [(u32, fn() -> Outcome, Duration); 9] = [
        (1, criterion1, Duration::from_millis(1)),
        (2, criterion2, Duration::from_secs(30)),
        (3, criterion3, Duration::from_secs(60)),
        (4, criterion4, Duration::from_secs(60)),
        (5, criterion5, Duration::from_millis(10)),
        (6, criterion6, Duration::from_millis(10)),
        (7, criterion7, Duration::from_secs(60)),
        (8, criterion8, Duration::from_secs(10)),
        (9, criterion9, Duration::from_secs(60)),
    ];
    let mut failed = Vec::new();
    for (n, check, limit) in criteria {
        let start = Instant::now();
        let (ok, detail) = check();
        let elapsed = start.elapsed();
        let pass = ok && elapsed < limit;
        println!(
            "criterion {n}: {} | {detail} | {elapsed:?}/{limit:?}",
            if pass { "PASS" } else { "FAIL" }
        );
        if !pass {
            failed.push(n);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
