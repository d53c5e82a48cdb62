#![allow(dead_code)]

use contest_core::dist::{AbilityDistribution, PopulationModel, SurvivalExpr, SurvivalSegment};
use contest_core::equilibrium::{ContestSpec, PrizeSchedule};

pub fn uniform() -> AbilityDistribution<f64> {
    AbilityDistribution::uniform()
}

fn seg(start: f64, survival: SurvivalExpr<f64>) -> SurvivalSegment<f64> {
    SurvivalSegment { start, survival }
}

/// Weak target group: `F = 1 - (1 - x)^(n-1)`, `mu = 1/(n-1)`, pooled `H` uniform.
pub fn flattened_family(n: usize) -> PopulationModel<f64> {
    let m = (n - 1) as f64;
    let f =
        AbilityDistribution::piecewise_survival(vec![seg(0.0, SurvivalExpr::Tail(vec![(1.0, m)]))])
            .unwrap();
    pooled_uniform(1.0 / m, f)
}

/// Target group stronger than the pool, `mu = 1/8`.
pub fn strong_target() -> PopulationModel<f64> {
    let f = AbilityDistribution::piecewise_survival(vec![
        seg(0.0, SurvivalExpr::Poly(vec![1.0])),
        seg(0.75, SurvivalExpr::Tail(vec![(16.0, 2.0)])),
        seg(15.0 / 16.0, SurvivalExpr::Tail(vec![(1.0, 1.0)])),
    ])
    .unwrap();
    pooled_uniform(0.125, f)
}

/// Same mean as the pool, lower variance, `mu = 2/3`.
pub fn low_variance_target() -> PopulationModel<f64> {
    PopulationModel::new(2.0 / 3.0, low_variance_f(), low_variance_g()).unwrap()
}

pub fn low_variance_f() -> AbilityDistribution<f64> {
    AbilityDistribution::polynomial(vec![0.0, 0.0, 3.0, -2.0]).unwrap()
}

pub fn low_variance_g() -> AbilityDistribution<f64> {
    AbilityDistribution::polynomial(vec![0.0, 3.0, -6.0, 4.0]).unwrap()
}

/// Same mean as the pool, higher variance, `mu = 1/4`.
pub fn high_variance_target() -> PopulationModel<f64> {
    let f = AbilityDistribution::piecewise_survival(vec![
        seg(0.0, SurvivalExpr::Poly(vec![1.0, -48.0 / 31.0])),
        seg(31.0 / 96.0, SurvivalExpr::Poly(vec![0.5])),
        seg(0.75, SurvivalExpr::Tail(vec![(8.0, 2.0)])),
        seg(0.875, SurvivalExpr::Tail(vec![(1.0, 1.0)])),
    ])
    .unwrap();
    pooled_uniform(0.25, f)
}

/// Non-target distribution chosen so that the pooled ability is uniform.
fn pooled_uniform(mu: f64, f: AbilityDistribution<f64>) -> PopulationModel<f64> {
    let g = AbilityDistribution::residual(uniform(), f.clone(), mu).unwrap();
    PopulationModel::new(mu, f, g).unwrap()
}

pub fn contest(
    n: usize,
    pop: PopulationModel<f64>,
    general: Vec<f64>,
    group: Vec<f64>,
) -> ContestSpec<f64> {
    ContestSpec::new(n, pop, PrizeSchedule::padded(n, general, group).unwrap()).unwrap()
}

pub fn uniform_contest(n: usize, mu: f64, general: Vec<f64>, group: Vec<f64>) -> ContestSpec<f64> {
    contest(
        n,
        PopulationModel::new(mu, uniform(), uniform()).unwrap(),
        general,
        group,
    )
}

/// 50 interior abilities.
pub fn interior_grid() -> Vec<f64> {
    (0..50).map(|i| 0.02 + 0.96 * i as f64 / 49.0).collect()
}
