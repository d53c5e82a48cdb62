//! Equilibrium with general and group-specific prizes together.
//!
//! The unknown is the link `k(v) = alpha^{-1}(beta(v))`, which solves
//!
//! ```text
//! k' = (1 - mu) g(v) (v - k) A / (mu f(k) (k A + k B - v A))
//! ```
//!
//! with `A`, `B` the prize-weighted rank-probability derivatives seen by
//! general and group prizes. `beta` follows by quadrature, `alpha` is
//! `beta o k^{-1}` below `k(1)` and continues above it on the group-prize
//! first-order condition alone.

use rayon::prelude::*;

use super::{
    cumulative_table, grid_with_knots, Columns, ContestSpec, Equilibrium, GroupTag, LinkFunction,
    Regime, SolverOptions, TabulatedStrategy,
};
use crate::dist::PopulationModel;
use crate::error::{Error, Result};
use crate::numerics::ode::{integrate_ivp, StepControl};
use crate::numerics::quadrature::integrate;
use crate::numerics::MonotoneTable;
use crate::orderstats::PsiSum;
use crate::real::Real;

/// Denominators smaller than this fraction of their terms are treated as singular.
const DENOMINATOR_GUARD: f64 = 1e-14;
/// Largest gap tolerated between the two branches of `alpha` at `k(1)`.
const STITCH_TOL: f64 = 1e-6;

/// The `A`, `B`, `C` evaluators of the link ODE for one contest.
#[derive(Debug, Clone)]
pub struct MixedOdeContext<'a, T> {
    pop: &'a PopulationModel<T>,
    general: PsiSum<T>,
    group: PsiSum<T>,
    both: PsiSum<T>,
}

impl<'a, T: Real> MixedOdeContext<'a, T> {
    pub fn new(spec: &'a ContestSpec<T>) -> Self {
        let n = spec.n();
        let w = spec.prizes().general();
        let om = spec.prizes().group();
        let sum: Vec<T> = w.iter().zip(om).map(|(&a, &b)| a + b).collect();
        Self {
            pop: spec.population(),
            general: PsiSum::new(n, w),
            group: PsiSum::new(n, om),
            both: PsiSum::new(n, &sum),
        }
    }

    fn mu(&self) -> T {
        self.pop.mu()
    }

    /// Rank distribution of outputs among everyone at the output of a
    /// non-target agent of ability `v`.
    pub fn general_rank_cdf(&self, v: T, k: T) -> T {
        self.mu() * self.pop.target().cdf_at(k)
            + (T::one() - self.mu()) * self.pop.nontarget().cdf_at(v)
    }

    /// Rank distribution among target agents at the same output.
    pub fn group_rank_cdf(&self, k: T) -> T {
        self.mu() * self.pop.target().cdf_at(k) + (T::one() - self.mu())
    }

    /// `A(v) = sum_j w_j psi_j(mu F(k) + (1 - mu) G(v))`.
    pub fn a(&self, v: T, k: T) -> T {
        self.general.eval(self.general_rank_cdf(v, k))
    }

    /// `B(v) = sum_j omega_j psi_j(mu F(k) + 1 - mu)`.
    pub fn b(&self, k: T) -> T {
        self.group.eval(self.group_rank_cdf(k))
    }

    /// `C(v) = sum_j (w_j + omega_j) psi_j(mu F(v) + 1 - mu)`.
    pub fn c(&self, v: T) -> T {
        self.both.eval(self.group_rank_cdf(v))
    }

    /// `k A + k B - v A`.
    pub fn denominator(&self, v: T, k: T) -> T {
        let a = self.a(v, k);
        k * (a + self.b(k)) - v * a
    }

    /// Right-hand side of the link ODE; NaN where the denominator is singular.
    pub fn rhs(&self, v: T, k: T) -> T {
        let a = self.a(v, k);
        let b = self.b(k);
        let d = k * (a + b) - v * a;
        // singular when the two terms of the denominator cancel to rounding level
        let scale = k * (a.abs() + b.abs()) + v * a.abs();
        if !(d.abs() > T::tol(DENOMINATOR_GUARD) * scale) {
            return T::nan();
        }
        self.rhs_unguarded(v, k)
    }

    fn rhs_unguarded(&self, v: T, k: T) -> T {
        let mu = self.mu();
        let a = self.a(v, k);
        let d = k * (a + self.b(k)) - v * a;
        let num = (T::one() - mu) * self.pop.nontarget().pdf_at(v) * (v - k) * a;
        let den = mu * self.pop.target().pdf_at(k) * d;
        if den == T::zero() {
            return if num == T::zero() {
                T::zero()
            } else {
                T::nan()
            };
        }
        num / den
    }

    /// `beta'(v)` given `k(v)` and `k'(v)`.
    pub fn beta_slope(&self, v: T, k: T, k_slope: T, left: bool) -> T {
        let mu = self.mu();
        let g = if left {
            self.pop.nontarget().pdf_left_at(v)
        } else {
            self.pop.nontarget().pdf_at(v)
        };
        v * self.a(v, k) * (mu * self.pop.target().pdf_at(k) * k_slope + (T::one() - mu) * g)
    }

    /// `alpha'(u)` above `k(1)`, where only target agents compete at that output.
    pub fn upper_alpha_slope(&self, u: T, left: bool) -> T {
        let f = if left {
            self.pop.target().pdf_left_at(u)
        } else {
            self.pop.target().pdf_at(u)
        };
        u * self.mu() * f * self.c(u)
    }
}

/// Both prize families at once. Falls back to the exact specialisations when
/// one family is absent (`k = v` without group prizes, `k = 0` without
/// general prizes or without non-target agents).
pub fn mixed_equilibrium<T: Real>(
    spec: &ContestSpec<T>,
    opts: &SolverOptions<T>,
) -> Result<Equilibrium<T>> {
    if !(opts.eps_start > T::zero() && opts.eps_start <= T::c(1e-3)) {
        return Err(Error::Domain(format!(
            "eps_start must lie in (0, 1e-3], got {}",
            opts.eps_start
        )));
    }
    let prizes = spec.prizes();
    if !prizes.has_general() && !prizes.has_group() {
        return Err(Error::InvalidRegime(
            "at least one prize must be positive".into(),
        ));
    }
    let ctx = MixedOdeContext::new(spec);
    let mu = spec.mu();
    if !prizes.has_group() {
        return identity_link(spec, &ctx, opts);
    }
    if !prizes.has_general() || mu == T::one() {
        return collapsed_link(spec, &ctx, opts);
    }
    if mu == T::zero() {
        return Err(Error::InvalidRegime(
            "group prizes with no target agents (mu = 0)".into(),
        ));
    }
    ode_link(spec, &ctx, opts)
}

/// Without group prizes the two groups face identical incentives: `k = v`, `alpha = beta`.
fn identity_link<T: Real>(
    spec: &ContestSpec<T>,
    ctx: &MixedOdeContext<'_, T>,
    opts: &SolverOptions<T>,
) -> Result<Equilibrium<T>> {
    let pop = spec.population();
    let grid = grid_with_knots(T::zero(), T::one(), opts.grid_size, pop.knots());
    let (xs, ys, left, right) = cumulative_table(
        grid,
        T::zero(),
        |y| y * pop.mixture_pdf_at(y) * ctx.a(y, y),
        |y| y * pop.mixture_pdf_left_at(y) * ctx.a(y, y),
        &opts.quadrature,
    )?;
    let table = MonotoneTable::with_one_sided_slopes(xs, ys, left, right)?;
    let alpha = TabulatedStrategy::new(table.clone(), GroupTag::Target)?;
    let beta = TabulatedStrategy::new(table, GroupTag::NonTarget)?;
    Ok(Equilibrium {
        regime: spec.prizes().regime(),
        alpha,
        beta,
        link: LinkFunction::identity(),
    })
}

/// `k = 0`: non-target agents produce nothing and `alpha` is the upper branch from 0.
fn collapsed_link<T: Real>(
    spec: &ContestSpec<T>,
    ctx: &MixedOdeContext<'_, T>,
    opts: &SolverOptions<T>,
) -> Result<Equilibrium<T>> {
    let (xs, ys, left, right) = upper_branch(spec, ctx, T::zero(), T::zero(), opts)?;
    let alpha = TabulatedStrategy::new(
        MonotoneTable::with_one_sided_slopes(xs, ys, left, right)?,
        GroupTag::Target,
    )?;
    Ok(Equilibrium {
        regime: spec.prizes().regime(),
        alpha,
        beta: TabulatedStrategy::zero(GroupTag::NonTarget),
        link: LinkFunction::zero(),
    })
}

/// `alpha` on `[k_bar, 1]`, starting from `alpha(k_bar) = start`.
fn upper_branch<T: Real>(
    spec: &ContestSpec<T>,
    ctx: &MixedOdeContext<'_, T>,
    k_bar: T,
    start: T,
    opts: &SolverOptions<T>,
) -> Result<Columns<T>> {
    let cells = ((T::one() - k_bar) * T::from_count(opts.grid_size))
        .ceil()
        .to_usize()
        .unwrap_or(1)
        .max(8);
    let grid = grid_with_knots(k_bar, T::one(), cells, spec.population().target().knots());
    cumulative_table(
        grid,
        start,
        |u| ctx.upper_alpha_slope(u, false),
        |u| ctx.upper_alpha_slope(u, true),
        &opts.quadrature,
    )
}

/// Slope `c` of the local ansatz `k(eps) = c eps`, taken as the fixed point
/// `c = rhs(eps, c eps)` on the branch where the denominator is positive.
fn startup_slope<T: Real>(ctx: &MixedOdeContext<'_, T>, eps: T) -> Result<T> {
    let fail = |why: String| Error::OdeStartupFailure(why);
    if !(ctx.denominator(eps, eps) > T::zero()) {
        return Err(fail(format!("denominator not positive at k = v = {eps}")));
    }
    // Pole of the right-hand side: smallest c with a positive denominator.
    let (mut lo, mut hi) = (T::zero(), T::one());
    if ctx.denominator(eps, T::zero()) > T::zero() {
        hi = T::min_positive_value();
    } else {
        for _ in 0..2000 {
            let mid = (lo + hi) * T::c(0.5);
            if !(mid > lo && mid < hi) {
                break;
            }
            if ctx.denominator(eps, mid * eps) > T::zero() {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    // Just above the pole the fixed-point residual c - rhs is negative; at c = 1 it is positive.
    // Next to the pole the guard would hide the branch we are looking for.
    let residual = |c: T| c - ctx.rhs_unguarded(eps, c * eps);
    let mut below = None;
    let mut delta = T::epsilon() * T::c(4.0);
    loop {
        let c = if hi > T::zero() {
            hi * (T::one() + delta)
        } else {
            delta
        };
        if c >= T::one() {
            break;
        }
        let r = residual(c);
        if r.is_finite() && r < T::zero() {
            below = Some(c);
            break;
        }
        delta = delta * T::c(4.0);
    }
    let below = below.ok_or_else(|| fail(format!("no consistent startup slope at eps = {eps}")))?;
    let (mut a, mut b) = (below, T::one());
    for _ in 0..2000 {
        let mid = (a + b) * T::c(0.5);
        if !(mid > a && mid < b) {
            break;
        }
        let r = residual(mid);
        if r.is_finite() && r < T::zero() {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(b)
}

fn ode_link<T: Real>(
    spec: &ContestSpec<T>,
    ctx: &MixedOdeContext<'_, T>,
    opts: &SolverOptions<T>,
) -> Result<Equilibrium<T>> {
    let eps = opts.eps_start;
    let c0 = startup_slope(ctx, eps)?;
    let k0 = c0 * eps;

    let stops = grid_with_knots(
        T::zero(),
        T::one(),
        opts.grid_size,
        spec.population().nontarget().knots(),
    );
    let ctrl = StepControl {
        abs_tol: T::tol(1e-10),
        initial_step: eps,
        max_step: T::one() / T::from_count(opts.grid_size.max(1)),
        stops,
        ..StepControl::default()
    };
    let sol =
        integrate_ivp(|v, k| ctx.rhs(v, k), eps, k0, T::one(), &ctrl).map_err(|e| match e {
            Error::Stiffness { at } => Error::OdeStartupFailure(format!(
                "link ODE step size underflow at v = {at} (singular denominator)"
            )),
            Error::Domain(msg) => Error::OdeStartupFailure(msg),
            other => other,
        })?;

    let mut vs = Vec::with_capacity(sol.vs.len() + 1);
    let mut ks = Vec::with_capacity(sol.vs.len() + 1);
    let mut kp = Vec::with_capacity(sol.vs.len() + 1);
    vs.push(T::zero());
    ks.push(T::zero());
    kp.push(c0);
    vs.extend(&sol.vs);
    ks.extend(&sol.ks);
    kp.extend(&sol.slopes);
    if let Some(i) = (0..vs.len()).find(|&i| ks[i] > vs[i] + T::tol(1e-9)) {
        return Err(Error::OdeStartupFailure(format!(
            "link exceeds identity at v = {}",
            vs[i]
        )));
    }
    let link_table = MonotoneTable::with_slopes(vs.clone(), ks.clone(), kp.clone())?;
    let k_bar = ks[ks.len() - 1];

    // beta by quadrature of its first-order condition along the link
    let beta_marginal = |y: T| {
        let k = link_table.evaluate(y);
        let mut s = ctx.rhs(y, k);
        if !(s.is_finite() && s >= T::zero()) {
            s = link_table.derivative(y);
        }
        ctx.beta_slope(y, k, s, false)
    };
    let first = ctx.beta_slope(vs[1], ks[1], kp[1], false) * vs[1] * T::c(0.5);
    let pieces: Vec<T> = vs[1..]
        .par_windows(2)
        .map(|w| integrate(beta_marginal, w[0], w[1], &[], &opts.quadrature))
        .collect::<Result<_>>()?;
    let mut beta_vals = Vec::with_capacity(vs.len());
    beta_vals.push(T::zero());
    let mut acc = first;
    beta_vals.push(acc);
    for p in pieces {
        acc = acc + p;
        beta_vals.push(acc);
    }
    let beta_right: Vec<T> = (0..vs.len())
        .map(|i| ctx.beta_slope(vs[i], ks[i], kp[i], false))
        .collect();
    let beta_left: Vec<T> = (0..vs.len())
        .map(|i| ctx.beta_slope(vs[i], ks[i], kp[i], true))
        .collect();
    let beta_bar = beta_vals[beta_vals.len() - 1];

    // alpha below k_bar: nodes (k(v_i), beta(v_i)) with slope beta'/k'
    let mut ax = vec![T::zero()];
    let mut ay = vec![T::zero()];
    let mut aslope = vec![T::zero()];
    for i in 1..vs.len() {
        if !(ks[i] > ax[ax.len() - 1]) {
            continue;
        }
        let s = beta_right[i] / kp[i];
        ax.push(ks[i]);
        ay.push(beta_vals[i]);
        aslope.push(if s.is_finite() { s } else { T::zero() });
    }
    aslope[0] = if ax.len() > 1 {
        (ay[1] - ay[0]) / (ax[1] - ax[0])
    } else {
        T::zero()
    };
    let mut a_left = aslope.clone();
    let mut a_right = aslope;

    // alpha above k_bar from the group-prize-only first-order condition
    if k_bar < T::one() - T::tol(1e-12) {
        let (ux, uy, ul, ur) = upper_branch(spec, ctx, k_bar, beta_bar, opts)?;
        let last = ax.len() - 1;
        ax[last] = ux[0];
        ay[last] = uy[0];
        a_right[last] = ur[0];
        ax.extend(&ux[1..]);
        ay.extend(&uy[1..]);
        a_left.extend(&ul[1..]);
        a_right.extend(&ur[1..]);
    }
    let alpha_table = MonotoneTable::with_one_sided_slopes(ax, ay, a_left, a_right)?;

    // the two descriptions of alpha must agree at k_bar
    let v_at_bar = link_table.invert(k_bar)?;
    let beta_table = MonotoneTable::with_one_sided_slopes(vs, beta_vals, beta_left, beta_right)?;
    let gap = (beta_table.evaluate(v_at_bar) - alpha_table.evaluate(k_bar)).abs();
    if gap > T::tol(STITCH_TOL) {
        return Err(Error::Stitching {
            k_at_1: k_bar.as_f64(),
            gap: gap.as_f64(),
        });
    }

    Ok(Equilibrium {
        regime: Regime::Mixed,
        alpha: TabulatedStrategy::new(alpha_table, GroupTag::Target)?,
        beta: TabulatedStrategy::new(beta_table, GroupTag::NonTarget)?,
        link: LinkFunction {
            table: link_table,
            k_at_1: k_bar,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::AbilityDistribution;
    use crate::equilibrium::{general_equilibrium, group_equilibrium, PrizeSchedule};
    use crate::verify::foc_residual;

    fn spec(
        n: usize,
        mu: f64,
        f: AbilityDistribution<f64>,
        g: AbilityDistribution<f64>,
        w: Vec<f64>,
        om: Vec<f64>,
    ) -> ContestSpec<f64> {
        let pop = PopulationModel::new(mu, f, g).unwrap();
        ContestSpec::new(n, pop, PrizeSchedule::padded(n, w, om).unwrap()).unwrap()
    }

    fn uniform() -> AbilityDistribution<f64> {
        AbilityDistribution::uniform()
    }

    fn sup_gap(a: &TabulatedStrategy<f64>, b: &TabulatedStrategy<f64>) -> f64 {
        (0..=1000)
            .map(|i| i as f64 / 1000.0)
            .map(|v| (a.output(v) - b.output(v)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn smooth_instance_satisfies_both_first_order_conditions() {
        let s = spec(5, 0.5, uniform(), uniform(), vec![0.5], vec![0.5]);
        let eq = mixed_equilibrium(&s, &SolverOptions::default()).unwrap();
        assert_eq!(eq.regime, Regime::Mixed);
        let k_bar = eq.link.k_at_1;
        assert!(k_bar > 0.0 && k_bar < 1.0, "k(1) = {k_bar}");
        let grid: Vec<f64> = (1..=50)
            .map(|i| 0.02 + 0.96 * (i as f64 - 1.0) / 49.0)
            .collect();
        let ra = foc_residual(&s, &eq, GroupTag::Target, &grid);
        let rb = foc_residual(&s, &eq, GroupTag::NonTarget, &grid);
        let worst = ra.iter().chain(&rb).cloned().fold(0.0, f64::max);
        assert!(worst < 1e-4, "max residual {worst}");
        for &v in &grid {
            assert!(eq.alpha.output(v) >= eq.beta.output(v) - 1e-12);
            assert!(eq.link.evaluate(v) <= v + 1e-12);
        }
    }

    #[test]
    fn startup_slope_is_a_fixed_point() {
        let s = spec(5, 0.5, uniform(), uniform(), vec![0.5], vec![0.5]);
        let ctx = MixedOdeContext::new(&s);
        let eps = 1e-4;
        let c = startup_slope(&ctx, eps).unwrap();
        assert!(c > 0.0 && c < 1.0);
        assert!((c - ctx.rhs(eps, c * eps)).abs() < 1e-8 * (1.0 + c));
        assert!(ctx.denominator(eps, c * eps) > 0.0);
    }

    #[test]
    fn without_group_prizes_matches_general_closed_form() {
        let pops = [
            (uniform(), uniform()),
            (AbilityDistribution::power(2.0).unwrap(), uniform()),
            (
                AbilityDistribution::polynomial(vec![0.0, 0.0, 3.0, -2.0]).unwrap(),
                AbilityDistribution::polynomial(vec![0.0, 3.0, -6.0, 4.0]).unwrap(),
            ),
        ];
        for (f, g) in pops {
            let s = spec(6, 0.4, f, g, vec![0.6, 0.4], vec![]);
            let eq = mixed_equilibrium(&s, &SolverOptions::default()).unwrap();
            let closed = general_equilibrium(&s, &SolverOptions::default()).unwrap();
            assert!(sup_gap(&eq.alpha, &closed) < 1e-6);
            assert!(sup_gap(&eq.beta, &closed) < 1e-6);
        }
    }

    #[test]
    fn without_general_prizes_matches_group_closed_form() {
        let s = spec(
            6,
            0.3,
            AbilityDistribution::power(2.0).unwrap(),
            uniform(),
            vec![],
            vec![0.7, 0.3],
        );
        let eq = mixed_equilibrium(&s, &SolverOptions::default()).unwrap();
        let closed = group_equilibrium(&s, &SolverOptions::default()).unwrap();
        assert!(sup_gap(&eq.alpha, &closed) < 1e-6);
        assert!(eq.beta.is_zero());
    }

    #[test]
    fn no_target_agents_is_rejected() {
        let s = spec(4, 0.0, uniform(), uniform(), vec![0.5], vec![0.5]);
        assert!(matches!(
            mixed_equilibrium(&s, &SolverOptions::default()),
            Err(Error::InvalidRegime(_))
        ));
    }

    #[test]
    fn bad_start_offset_is_rejected() {
        let s = spec(4, 0.5, uniform(), uniform(), vec![0.5], vec![0.5]);
        let opts = SolverOptions {
            eps_start: 0.1,
            ..SolverOptions::default()
        };
        assert!(matches!(
            mixed_equilibrium(&s, &opts),
            Err(Error::Domain(_))
        ));
    }
}
