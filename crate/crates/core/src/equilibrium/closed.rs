//! Closed-form equilibria for a single prize family.

use super::{
    cumulative_table, grid_with_knots, prize_steps, ContestSpec, GroupTag, SolverOptions,
    TabulatedStrategy,
};
use crate::error::{Error, Result};
use crate::numerics::MonotoneTable;
use crate::orderstats::RankDensitySum;
use crate::real::Real;

/// General prizes only: both groups play
/// `alpha(v) = sum_j (w_j - w_{j+1}) int_0^v y f^H_{n-1,j}(y) dy` with `H = mu F + (1 - mu) G`.
pub fn general_equilibrium<T: Real>(
    spec: &ContestSpec<T>,
    opts: &SolverOptions<T>,
) -> Result<TabulatedStrategy<T>> {
    if spec.prizes().has_group() {
        return Err(Error::InvalidRegime(
            "general-prize equilibrium needs all group prizes zero".into(),
        ));
    }
    let pop = spec.population();
    cumulative_strategy(
        spec.n(),
        &prize_steps(spec.prizes().general()),
        |v| pop.mixture_cdf_at(v),
        |v| pop.mixture_pdf_at(v),
        |v| pop.mixture_pdf_left_at(v),
        pop.knots(),
        opts,
        GroupTag::Target,
    )
}

/// Group-specific prizes only: target agents play the same form with the
/// shifted mixture `mu F + (1 - mu)`; non-target agents produce nothing.
pub fn group_equilibrium<T: Real>(
    spec: &ContestSpec<T>,
    opts: &SolverOptions<T>,
) -> Result<TabulatedStrategy<T>> {
    if spec.prizes().has_general() {
        return Err(Error::InvalidRegime(
            "group-prize equilibrium needs all general prizes zero".into(),
        ));
    }
    let pop = spec.population();
    cumulative_strategy(
        spec.n(),
        &prize_steps(spec.prizes().group()),
        |v| pop.shifted_mixture_cdf_at(v),
        |v| pop.shifted_mixture_pdf_at(v),
        |v| pop.shifted_mixture_pdf_left_at(v),
        pop.target().knots(),
        opts,
        GroupTag::Target,
    )
}

#[allow(clippy::too_many_arguments)]
fn cumulative_strategy<T, C, P, L>(
    n: usize,
    steps: &[T],
    cdf: C,
    pdf: P,
    pdf_left: L,
    knots: &[T],
    opts: &SolverOptions<T>,
    group: GroupTag,
) -> Result<TabulatedStrategy<T>>
where
    T: Real,
    C: Fn(T) -> T + Sync,
    P: Fn(T) -> T + Sync,
    L: Fn(T) -> T + Sync,
{
    if steps.iter().all(|&s| s == T::zero()) {
        return Ok(TabulatedStrategy::zero(group));
    }
    let ranks = RankDensitySum::new(n - 1, steps);
    let marginal = |y: T, density: T| y * ranks.eval(cdf(y)) * density;
    let grid = grid_with_knots(T::zero(), T::one(), opts.grid_size, knots);
    let (xs, ys, left, right) = cumulative_table(
        grid,
        T::zero(),
        |v| marginal(v, pdf(v)),
        |v| marginal(v, pdf_left(v)),
        &opts.quadrature,
    )?;
    TabulatedStrategy::new(
        MonotoneTable::with_one_sided_slopes(xs, ys, left, right)?,
        group,
    )
}
