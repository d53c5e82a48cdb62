mod common;

use common::*;
use contest_core::dist::{AbilityDistribution, PopulationModel};
use contest_core::equilibrium::{
    expected_group_output, mixed_equilibrium, solve, ContestSpec, GroupTag, PrizeSchedule, Regime,
    SolverOptions,
};
use contest_core::verify::foc_residual;
use contest_core::{AbilityDistributionF32, PopulationModelF32};

#[test]
fn mixed_target_outproduces_equally_able_nontarget() {
    let spec = contest(
        8,
        PopulationModel::new(0.35, AbilityDistribution::power(2.0).unwrap(), uniform()).unwrap(),
        vec![0.3, 0.2],
        vec![0.3, 0.2],
    );
    let eq = mixed_equilibrium(&spec, &SolverOptions::default()).unwrap();
    assert_eq!(eq.regime, Regime::Mixed);
    for i in 0..=200 {
        let v = i as f64 / 200.0;
        assert!(eq.alpha.output(v) + 1e-12 >= eq.beta.output(v), "v = {v}");
        assert!(eq.link.evaluate(v) <= v + 1e-12, "v = {v}");
    }
}

#[test]
fn mixed_strategies_satisfy_first_order_conditions_off_uniform() {
    let spec = contest(7, low_variance_target(), vec![0.4], vec![0.4, 0.2]);
    let eq = mixed_equilibrium(&spec, &SolverOptions::default()).unwrap();
    let grid = interior_grid();
    for label in [GroupTag::Target, GroupTag::NonTarget] {
        let worst = foc_residual(&spec, &eq, label, &grid)
            .into_iter()
            .fold(0.0, f64::max);
        assert!(worst < 1e-4, "{label:?}: {worst}");
    }
}

#[test]
fn finer_grid_changes_mixed_solution_little() {
    let spec = uniform_contest(5, 0.5, vec![0.5], vec![0.5]);
    let coarse = mixed_equilibrium(&spec, &SolverOptions::with_grid(512)).unwrap();
    let fine = mixed_equilibrium(&spec, &SolverOptions::with_grid(4096)).unwrap();
    assert!((coarse.link.k_at_1 - fine.link.k_at_1).abs() < 1e-7);
    for i in 0..=100 {
        let v = i as f64 / 100.0;
        assert!((coarse.alpha.output(v) - fine.alpha.output(v)).abs() < 1e-7);
        assert!((coarse.beta.output(v) - fine.beta.output(v)).abs() < 1e-7);
    }
}

#[test]
fn general_prize_output_matches_closed_form_mean() {
    for n in [2usize, 5, 20] {
        let spec = uniform_contest(n, 0.5, vec![1.0], vec![]);
        let eq = solve(&spec, &SolverOptions::default()).unwrap();
        let mean = expected_group_output(&eq.alpha, spec.population().target()).unwrap();
        let nf = n as f64;
        assert!((mean - (nf - 1.0) / (nf * (nf + 1.0))).abs() < 1e-10);
    }
}

#[test]
fn single_precision_instantiation_agrees() {
    let pop = PopulationModelF32::new(
        0.5,
        AbilityDistributionF32::uniform(),
        AbilityDistributionF32::uniform(),
    )
    .unwrap();
    let spec = ContestSpec::new(
        5,
        pop,
        PrizeSchedule::padded(5, vec![1.0f32], vec![]).unwrap(),
    )
    .unwrap();
    let eq = solve(&spec, &SolverOptions::with_grid(256)).unwrap();
    let spec64 = uniform_contest(5, 0.5, vec![1.0], vec![]);
    let eq64 = solve(&spec64, &SolverOptions::with_grid(256)).unwrap();
    for i in 0..=20 {
        let v = i as f64 / 20.0;
        assert!((eq.alpha.output(v as f32) as f64 - eq64.alpha.output(v)).abs() < 1e-5);
    }
}

#[test]
fn mixed_regime_without_target_agents_is_a_config_error() {
    let spec = uniform_contest(4, 0.0, vec![0.5], vec![0.5]);
    assert!(matches!(
        solve(&spec, &SolverOptions::default()),
        Err(contest_core::Error::InvalidRegime(_))
    ));
}
