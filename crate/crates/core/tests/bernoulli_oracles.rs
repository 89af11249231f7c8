use bandit_minimax::batchdp::solve_batch_risk;
use bandit_minimax::bernoulli::{brute_force_bernoulli, solve_bernoulli_dp, BernoulliAtom, BernoulliModel};
use bandit_minimax::quadrature::XGrid;
use bandit_minimax::schedule::BatchSchedule;
use bandit_minimax::{ModelParams, PriorSpec};
use proptest::prelude::*;

/// Expected loss of one strategy, given as an action per method-2-only
/// history; method 1 is kept once chosen.
fn strategy_loss(model: &BernoulliModel, choice: &dyn Fn(usize, usize) -> bool) -> f64 {
    fn walk(model: &BernoulliModel, a: &BernoulliAtom, len: usize, bits: usize, choice: &dyn Fn(usize, usize) -> bool) -> f64 {
        if len == model.n {
            return 0.0;
        }
        if len >= model.n0 && !choice(len, bits) {
            return (model.n - len) as f64 * (a.p2 - model.p).max(0.0);
        }
        (model.p - a.p2).max(0.0)
            + a.p2 * walk(model, a, len + 1, bits << 1 | 1, choice)
            + (1.0 - a.p2) * walk(model, a, len + 1, bits << 1, choice)
    }
    model.prior.iter().map(|a| a.q * walk(model, a, 0, 0, choice)).sum()
}

/// Minimum over every assignment of actions to decision histories.
fn enumerate_strategies(model: &BernoulliModel) -> f64 {
    assert!(model.n <= 4);
    // Decision node (len, bits) gets bit offset[len] + bits.
    let mut offset = vec![0usize; model.n + 1];
    let mut nodes = 0;
    for len in model.n0..model.n {
        offset[len] = nodes;
        nodes += 1 << len;
    }
    let mut best = f64::INFINITY;
    for mask in 0u64..(1u64 << nodes) {
        let choice = |len: usize, bits: usize| mask >> (offset[len] + bits) & 1 == 1;
        best = best.min(strategy_loss(model, &choice));
    }
    best
}

fn model(p: f64, prior: &[(f64, f64)], n: usize, n0: usize) -> BernoulliModel {
    BernoulliModel::new(p, prior.iter().map(|&(p2, q)| BernoulliAtom { p2, q }).collect(), n, n0).unwrap()
}

#[test]
fn literal_enumeration_agrees() {
    for m in [
        model(0.5, &[(0.7, 0.5), (0.3, 0.5)], 3, 1),
        model(0.5, &[(0.6, 0.3), (0.45, 0.7)], 4, 2),
        model(0.3, &[(0.1, 0.2), (0.5, 0.5), (0.35, 0.3)], 4, 1),
    ] {
        let dp = solve_bernoulli_dp(&m).unwrap().risk;
        let tree = brute_force_bernoulli(&m).unwrap();
        let listed = enumerate_strategies(&m);
        assert!((dp - tree).abs() <= 1e-12 && (dp - listed).abs() <= 1e-12, "{dp} {tree} {listed}");
    }
}

#[test]
fn symmetric_two_atom_value() {
    // Forced play: 0.5·0.2 = 0.1. After a success the joint weights are
    // (good 0.35, bad 0.15) and the best continuation costs 0.06; after a
    // failure they are (0.15, 0.35) and switching costs 2·0.15·0.2 = 0.06.
    let m = model(0.5, &[(0.7, 0.5), (0.3, 0.5)], 3, 1);
    let dp = solve_bernoulli_dp(&m).unwrap().risk;
    assert!((dp - 0.22).abs() < 1e-12, "{dp}");
}

fn random_model() -> impl Strategy<Value = BernoulliModel> {
    (
        0.05f64..0.95,
        prop::collection::vec((0.02f64..0.98, 0.05f64..1.0), 1..=3),
        1usize..=6,
    )
        .prop_flat_map(|(p, raw, n)| (Just(p), Just(raw), Just(n), 1usize..=n))
        .prop_map(|(p, raw, n, n0)| {
            let total: f64 = raw.iter().map(|r| r.1).sum();
            let mut prior: Vec<BernoulliAtom> = raw.iter().map(|&(p2, w)| BernoulliAtom { p2, q: w / total }).collect();
            let head: f64 = prior[..prior.len() - 1].iter().map(|a| a.q).sum();
            prior.last_mut().unwrap().q = 1.0 - head;
            BernoulliModel::new(p, prior, n, n0).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(160))]

    #[test]
    fn dp_matches_history_tree(m in random_model()) {
        let dp = solve_bernoulli_dp(&m).unwrap().risk;
        let tree = brute_force_bernoulli(&m).unwrap();
        prop_assert!((dp - tree).abs() <= 1e-12, "{} vs {}", dp, tree);
    }

    #[test]
    fn adaptive_part_shrinks_with_more_forced_plays(m in random_model()) {
        let mut last = f64::INFINITY;
        for n0 in 1..=m.n {
            let v = solve_bernoulli_dp(&BernoulliModel { n0, ..m.clone() }).unwrap().adaptive_loss;
            prop_assert!(v <= last + 1e-12, "n0 = {}: {} > {}", n0, v, last);
            last = v;
        }
    }
}

#[test]
fn scaled_risk_approaches_gaussian_batches() {
    let gauss_prior = PriorSpec::two_point(1.65, 2.52, 0.38).unwrap();
    let params = ModelParams::for_prior(1.0, &gauss_prior).unwrap();
    let mut gaps = Vec::new();
    for n in [200usize, 500, 1000, 2000] {
        let n0 = n / 50;
        let prior = BernoulliModel::mapped_prior(0.5, gauss_prior.atoms(), n).unwrap();
        let bern = solve_bernoulli_dp(&BernoulliModel::new(0.5, prior, n, n0).unwrap()).unwrap().scaled_risk;
        let schedule: BatchSchedule = format!("1x{n0}/{n},{}x1/{n}", n - n0).parse().unwrap();
        let step = if n >= 1000 { 0.005 } else { 0.01 };
        let gauss = solve_batch_risk(&gauss_prior, &params, &schedule, &XGrid::new(6.0, step).unwrap()).unwrap().at_origin();
        gaps.push((bern / gauss - 1.0).abs());
    }
    assert!(gaps.windows(2).all(|w| w[1] <= w[0]), "{gaps:?}");
    assert!(gaps[3] <= 0.05, "{gaps:?}");
}
