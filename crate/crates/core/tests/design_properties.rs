mod common;

use common::*;
use contest_core::design::{
    objective_for_gamma, optimal_general_design, DesignRegime, GammaWeights,
};
use contest_core::equilibrium::{expected_group_output, solve, SolverOptions};
use contest_core::verify::{expected_target_total, simulate_group_output};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_gamma(rng: &mut ChaCha8Rng, m: usize) -> GammaWeights<f64> {
    let raw: Vec<f64> = (0..m).map(|_| -rng.gen::<f64>().ln()).collect();
    let total: f64 = raw.iter().sum();
    GammaWeights::new(raw.into_iter().map(|x| x / total).collect()).unwrap()
}

#[test]
fn vertex_dominates_every_simplex_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for (pop, n) in [
        (strong_target(), 30usize),
        (high_variance_target(), 30),
        (low_variance_target(), 20),
    ] {
        let best = optimal_general_design(&pop, n).unwrap();
        for _ in 0..25 {
            let g = random_gamma(&mut rng, n - 1);
            let v = objective_for_gamma(&pop, n, &g, DesignRegime::General).unwrap();
            assert!(v <= best.objective_value + 1e-15);
        }
    }
}

#[test]
fn gamma_objective_matches_equilibrium_output() {
    // analytic pipeline: gamma weights vs solving the equilibrium of the prize vector
    let pop = low_variance_target();
    let n = 6;
    let prizes = vec![0.4, 0.3, 0.2, 0.1, 0.0, 0.0];
    let gamma = GammaWeights::from_prizes(&prizes).unwrap();
    let via_gamma = objective_for_gamma(&pop, n, &gamma, DesignRegime::General).unwrap();
    let spec = contest(n, pop.clone(), prizes, vec![]);
    let eq = solve(&spec, &SolverOptions::default()).unwrap();
    let via_eq = expected_group_output(&eq.alpha, pop.target()).unwrap();
    assert!((via_gamma - via_eq).abs() < 1e-9, "{via_gamma} vs {via_eq}");
}

#[test]
fn small_contests_agree_with_brute_force_simulation() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for n in 2..=4usize {
        for trial in 0..3 {
            let mu = rng.gen_range(0.2..0.9);
            let mut w: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
            w.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let total: f64 = w.iter().sum();
            let w: Vec<f64> = w.into_iter().map(|x| x / total).collect();
            let spec = uniform_contest(n, mu, w, vec![]);
            let eq = solve(&spec, &SolverOptions::default()).unwrap();
            let analytic = expected_target_total(
                &spec,
                expected_group_output(&eq.alpha, spec.population().target()).unwrap(),
            );
            let est = simulate_group_output(&spec, (&eq.alpha, &eq.beta), 200_000, 1000 + trial);
            assert!(
                est.agrees_with(analytic, 0.0),
                "n={n}: {est:?} vs {analytic}"
            );
        }
    }
}
