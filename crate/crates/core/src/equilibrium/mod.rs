//! Symmetric Bayes–Nash equilibria for general prizes, group-specific prizes
//! and both together.

mod closed;
mod mixed;

pub use closed::{general_equilibrium, group_equilibrium};
pub use mixed::{mixed_equilibrium, MixedOdeContext};

use crate::dist::{merge_knots, AbilityDistribution, PopulationModel};
use crate::error::{Error, Result};
use crate::numerics::quadrature::{integrate, QuadratureConfig};
use crate::numerics::MonotoneTable;
use crate::real::Real;

/// General prizes `w` (rank among everyone) and target-group prizes `omega`
/// (rank among target agents), both nonincreasing within a unit budget.
#[derive(Debug, Clone, PartialEq)]
pub struct PrizeSchedule<T> {
    general: Vec<T>,
    group: Vec<T>,
}

impl<T: Real> PrizeSchedule<T> {
    pub fn new(general: Vec<T>, group: Vec<T>) -> Result<Self> {
        if general.len() != group.len() {
            return Err(Error::InvalidPrizes(format!(
                "general list has {} entries, group list {}",
                general.len(),
                group.len()
            )));
        }
        for (name, list) in [("general", &general), ("group", &group)] {
            if list.iter().any(|&p| !(p >= T::zero()) || !p.is_finite()) {
                return Err(Error::InvalidPrizes(format!(
                    "{name} prizes must be finite and nonnegative"
                )));
            }
            if let Some(i) = (1..list.len()).find(|&i| list[i] > list[i - 1]) {
                return Err(Error::InvalidPrizes(format!(
                    "{name} prizes increase at rank {}",
                    i + 1
                )));
            }
        }
        let total: T = general.iter().chain(&group).copied().sum();
        if total > T::one() + T::tol(1e-12) {
            return Err(Error::InvalidPrizes(format!(
                "prizes total {total} exceeds the unit budget"
            )));
        }
        Ok(Self { general, group })
    }

    /// Pads both lists with zeros to `n` entries.
    pub fn padded(n: usize, mut general: Vec<T>, mut group: Vec<T>) -> Result<Self> {
        if general.len() > n || group.len() > n {
            return Err(Error::InvalidPrizes(format!(
                "more prizes than the {n} agents"
            )));
        }
        general.resize(n, T::zero());
        group.resize(n, T::zero());
        Self::new(general, group)
    }

    /// `1/k` to each of the top `k` ranks.
    pub fn top_k(n: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::InvalidPrizes(format!(
                "cannot split the budget over {k} of {n} ranks"
            )));
        }
        let share = T::one() / T::from_count(k);
        let w = (0..n)
            .map(|i| if i < k { share } else { T::zero() })
            .collect();
        Self::new(w, vec![T::zero(); n])
    }

    pub fn general(&self) -> &[T] {
        &self.general
    }

    pub fn group(&self) -> &[T] {
        &self.group
    }

    pub fn len(&self) -> usize {
        self.general.len()
    }

    pub fn is_empty(&self) -> bool {
        self.general.is_empty()
    }

    pub fn has_general(&self) -> bool {
        self.general.iter().any(|&w| w > T::zero())
    }

    pub fn has_group(&self) -> bool {
        self.group.iter().any(|&w| w > T::zero())
    }

    pub fn regime(&self) -> Regime {
        match (self.has_general(), self.has_group()) {
            (false, false) => Regime::NoPrizes,
            (true, false) => Regime::General,
            (false, true) => Regime::Group,
            (true, true) => Regime::Mixed,
        }
    }
}

/// Consecutive differences `p_j - p_{j+1}` for `j = 1..n-1`.
pub(crate) fn prize_steps<T: Real>(prizes: &[T]) -> Vec<T> {
    prizes.windows(2).map(|w| w[0] - w[1]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    NoPrizes,
    General,
    Group,
    Mixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContestSpec<T> {
    n: usize,
    population: PopulationModel<T>,
    prizes: PrizeSchedule<T>,
}

impl<T: Real> ContestSpec<T> {
    pub fn new(n: usize, population: PopulationModel<T>, prizes: PrizeSchedule<T>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidPrizes(format!(
                "a contest needs at least 2 agents, got {n}"
            )));
        }
        if prizes.len() != n {
            return Err(Error::InvalidPrizes(format!(
                "prize lists have {} entries for {n} agents",
                prizes.len()
            )));
        }
        Ok(Self {
            n,
            population,
            prizes,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn population(&self) -> &PopulationModel<T> {
        &self.population
    }

    pub fn prizes(&self) -> &PrizeSchedule<T> {
        &self.prizes
    }

    pub fn mu(&self) -> T {
        self.population.mu()
    }

    pub fn with_prizes(&self, prizes: PrizeSchedule<T>) -> Result<Self> {
        Self::new(self.n, self.population.clone(), prizes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupTag {
    Target,
    NonTarget,
}

/// Output as a function of ability, tabulated on [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedStrategy<T> {
    pub table: MonotoneTable<T>,
    pub group: GroupTag,
}

impl<T: Real> TabulatedStrategy<T> {
    pub fn new(table: MonotoneTable<T>, group: GroupTag) -> Result<Self> {
        if table.x_min() != T::zero() || table.x_max() != T::one() {
            return Err(Error::InvalidTable(
                "strategy must be tabulated on [0, 1]".into(),
            ));
        }
        if table.y_min() != T::zero() {
            return Err(Error::InvalidTable(format!(
                "strategy output at ability 0 is {}",
                table.y_min()
            )));
        }
        Ok(Self { table, group })
    }

    pub fn zero(group: GroupTag) -> Self {
        let table =
            MonotoneTable::from_points(vec![T::zero(), T::one()], vec![T::zero(), T::zero()])
                .expect("two-point zero table");
        Self { table, group }
    }

    pub fn output(&self, ability: T) -> T {
        self.table.evaluate(ability)
    }

    pub fn slope(&self, ability: T) -> T {
        self.table.derivative(ability)
    }

    /// Lowest ability producing `output`.
    pub fn ability_for(&self, output: T) -> Result<T> {
        self.table.invert(output)
    }

    pub fn max_output(&self) -> T {
        self.table.y_max()
    }

    pub fn is_zero(&self) -> bool {
        self.table.y_max() == T::zero()
    }

    /// Same strategy with every output multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        Self {
            table: self.table.scaled(factor),
            group: self.group,
        }
    }
}

/// `k(v) = alpha^{-1}(beta(v))`: the target ability matching a non-target
/// agent of ability `v` in output.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkFunction<T> {
    pub table: MonotoneTable<T>,
    pub k_at_1: T,
}

impl<T: Real> LinkFunction<T> {
    pub fn identity() -> Self {
        let table = MonotoneTable::with_slopes(
            vec![T::zero(), T::one()],
            vec![T::zero(), T::one()],
            vec![T::one(); 2],
        )
        .expect("identity table");
        Self {
            table,
            k_at_1: T::one(),
        }
    }

    pub fn zero() -> Self {
        let table =
            MonotoneTable::from_points(vec![T::zero(), T::one()], vec![T::zero(), T::zero()])
                .expect("zero table");
        Self {
            table,
            k_at_1: T::zero(),
        }
    }

    pub fn evaluate(&self, v: T) -> T {
        self.table.evaluate(v)
    }
}

/// Strategies of both groups, plus the link function when it is nontrivial.
#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium<T> {
    pub regime: Regime,
    pub alpha: TabulatedStrategy<T>,
    pub beta: TabulatedStrategy<T>,
    pub link: LinkFunction<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions<T> {
    pub grid_size: usize,
    pub eps_start: T,
    pub quadrature: QuadratureConfig<T>,
}

impl<T: Real> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            grid_size: 2048,
            eps_start: T::c(1e-4),
            quadrature: QuadratureConfig::default(),
        }
    }
}

impl<T: Real> SolverOptions<T> {
    pub fn with_grid(grid_size: usize) -> Self {
        Self {
            grid_size,
            ..Self::default()
        }
    }
}

/// Solves whichever regime the prize schedule describes.
pub fn solve<T: Real>(spec: &ContestSpec<T>, opts: &SolverOptions<T>) -> Result<Equilibrium<T>> {
    let regime = spec.prizes().regime();
    match regime {
        Regime::NoPrizes => Ok(Equilibrium {
            regime,
            alpha: TabulatedStrategy::zero(GroupTag::Target),
            beta: TabulatedStrategy::zero(GroupTag::NonTarget),
            link: LinkFunction::identity(),
        }),
        Regime::General => {
            let alpha = general_equilibrium(spec, opts)?;
            let beta = TabulatedStrategy {
                table: alpha.table.clone(),
                group: GroupTag::NonTarget,
            };
            Ok(Equilibrium {
                regime,
                alpha,
                beta,
                link: LinkFunction::identity(),
            })
        }
        Regime::Group => {
            let alpha = group_equilibrium(spec, opts)?;
            Ok(Equilibrium {
                regime,
                alpha,
                beta: TabulatedStrategy::zero(GroupTag::NonTarget),
                link: LinkFunction::zero(),
            })
        }
        Regime::Mixed => mixed_equilibrium(spec, opts),
    }
}

/// `E_{v ~ d}[strategy(v)]`.
pub fn expected_group_output<T: Real>(
    strategy: &TabulatedStrategy<T>,
    d: &AbilityDistribution<T>,
) -> Result<T> {
    if strategy.is_zero() {
        return Ok(T::zero());
    }
    let knots = merge_knots(&[d.knots(), strategy.table.xs()]);
    integrate(
        |v| strategy.output(v) * d.pdf_at(v),
        T::zero(),
        T::one(),
        &knots,
        &QuadratureConfig::default(),
    )
}

/// Nodes, values, left slopes and right slopes of a tabulated function.
pub(crate) type Columns<T> = (Vec<T>, Vec<T>, Vec<T>, Vec<T>);

/// Cumulative integral of a marginal on `grid`, starting from `start`, as a
/// Hermite table whose node slopes are the marginal's one-sided values.
pub(crate) fn cumulative_table<T, R, L>(
    grid: Vec<T>,
    start: T,
    marginal_right: R,
    marginal_left: L,
    quad: &QuadratureConfig<T>,
) -> Result<Columns<T>>
where
    T: Real,
    R: Fn(T) -> T + Sync,
    L: Fn(T) -> T + Sync,
{
    use rayon::prelude::*;
    let pieces: Vec<T> = grid
        .par_windows(2)
        .map(|w| integrate(&marginal_right, w[0], w[1], &[], quad))
        .collect::<Result<_>>()?;
    let mut values = Vec::with_capacity(grid.len());
    let mut acc = start;
    values.push(acc);
    for p in pieces {
        acc = acc + p;
        values.push(acc);
    }
    let right: Vec<T> = grid.iter().map(|&v| marginal_right(v)).collect();
    let left: Vec<T> = grid.iter().map(|&v| marginal_left(v)).collect();
    Ok((grid, values, left, right))
}

/// Uniform grid on `[lo, hi]` with `cells` cells, with the knots inside merged in.
pub(crate) fn grid_with_knots<T: Real>(lo: T, hi: T, cells: usize, knots: &[T]) -> Vec<T> {
    let cells = cells.max(1);
    let h = (hi - lo) / T::from_count(cells);
    let min_gap = T::tol(1e-12);
    let mut pts: Vec<T> = (0..=cells)
        .map(|i| {
            if i == cells {
                hi
            } else {
                lo + h * T::from_count(i)
            }
        })
        .collect();
    for &k in knots {
        if k > lo && k < hi {
            pts.push(k);
        }
    }
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    let mut out: Vec<T> = Vec::with_capacity(pts.len());
    for p in pts {
        match out.last() {
            Some(&last) if p - last <= min_gap => {
                // a knot replaces a grid point it nearly coincides with
                if knots.contains(&p) && last != lo {
                    *out.last_mut().expect("nonempty") = p;
                }
            }
            _ => out.push(p),
        }
    }
    out
}
