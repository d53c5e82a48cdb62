//! Optimal prize structures for the target group and the general-versus-group
//! prize comparison.
//!
//! Every schedule is a mixture of "equal prize to the top j" schedules with
//! weights `gamma_j = j (w_j - w_{j+1})`, so the designer's objective is
//! linear in `gamma` and one per-rank value per `j` decides the optimum.

use rayon::prelude::*;
use serde::ser::{Serialize, SerializeStruct, Serializer};

use crate::dist::{AbilityDistribution, PopulationModel};
use crate::error::{Error, Result};
use crate::numerics::quadrature::{integrate, QuadratureConfig};
use crate::numerics::roots::find_root;
use crate::orderstats::{binomial, orderstat_pdf_at};
use crate::real::Real;

/// Allowed gap between group rank `j > 1` and rank 1 before certification fails.
const CERTIFICATION_SLACK: f64 = 1e-9;

/// Simplex coordinates over the `n - 1` flat top-j schedules.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaWeights<T> {
    gamma: Vec<T>,
}

impl<T: Real> GammaWeights<T> {
    pub fn new(gamma: Vec<T>) -> Result<Self> {
        if gamma.is_empty() {
            return Err(Error::Domain("gamma must have at least one entry".into()));
        }
        if gamma.iter().any(|&g| !(g >= T::zero()) || !g.is_finite()) {
            return Err(Error::Domain(
                "gamma entries must be finite and nonnegative".into(),
            ));
        }
        let total: T = gamma.iter().copied().sum();
        if (total - T::one()).abs() > T::tol(1e-12) {
            return Err(Error::Domain(format!("gamma must sum to 1, got {total}")));
        }
        Ok(Self { gamma })
    }

    /// Unit mass on the top-`k` schedule, for `n` agents.
    pub fn vertex(n: usize, k: usize) -> Result<Self> {
        if n < 2 || k == 0 || k >= n {
            return Err(Error::Domain(format!(
                "vertex needs 1 <= k < n, got k = {k}, n = {n}"
            )));
        }
        let mut gamma = vec![T::zero(); n - 1];
        gamma[k - 1] = T::one();
        Ok(Self { gamma })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain("uniform gamma needs n >= 2".into()));
        }
        Self::new(vec![T::one() / T::from_count(n - 1); n - 1])
    }

    /// Weights of a nonincreasing, unit-budget prize vector. The last rank's
    /// share is dropped; a schedule with `w_n > 0` wastes that part of the budget.
    pub fn from_prizes(prizes: &[T]) -> Result<Self> {
        let n = prizes.len();
        if n < 2 {
            return Err(Error::Domain("need at least two prizes".into()));
        }
        let gamma: Vec<T> = (1..n)
            .map(|j| T::from_count(j) * (prizes[j - 1] - prizes[j]))
            .collect();
        let total: T = gamma.iter().copied().sum();
        if total <= T::zero() {
            return Err(Error::Domain("prize vector has no rank differences".into()));
        }
        Self::new(gamma.into_iter().map(|g| g / total).collect())
    }

    pub fn as_slice(&self) -> &[T] {
        &self.gamma
    }

    /// The prize vector the weights describe, `w_i = sum_{j >= i} gamma_j / j`.
    pub fn prizes(&self) -> Vec<T> {
        let m = self.gamma.len();
        let mut w = vec![T::zero(); m + 1];
        let mut acc = T::zero();
        for j in (1..=m).rev() {
            acc = acc + self.gamma[j - 1] / T::from_count(j);
            w[j - 1] = acc;
        }
        w
    }
}

/// `psi(x) = x (1 - F(x)) / (1 - H(x))` with `H = mu F + (1 - mu) G`.
#[derive(Debug, Clone)]
pub struct DesignKernel<'a, T> {
    pop: &'a PopulationModel<T>,
}

impl<'a, T: Real> DesignKernel<'a, T> {
    pub fn new(pop: &'a PopulationModel<T>) -> Self {
        Self { pop }
    }

    /// Evaluated below `1 - 1e-9` only; the value at 1 is the indeterminate 0/0.
    pub fn eval(&self, x: T) -> T {
        let x = x.min(T::one() - T::c(1e-9));
        let tail = T::one() - self.pop.mixture_cdf_at(x);
        if tail <= T::zero() {
            return T::nan();
        }
        x * (T::one() - self.pop.target().cdf_at(x)) / tail
    }

    pub fn knots(&self) -> &[T] {
        self.pop.knots()
    }
}

/// Which prize family a design problem allocates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignRegime {
    General,
    Group,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignResult<T> {
    pub k_star: usize,
    /// Value of the top-`j` schedule for `j = 1..n-1`.
    pub per_j_objective: Vec<T>,
    pub prize_vector: Vec<T>,
    /// Expected output of one target agent.
    pub objective_value: T,
    /// Expected output of one agent drawn from the whole population.
    pub total_output: T,
}

impl<T: Real> Serialize for DesignResult<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let f = |v: &[T]| v.iter().map(|x| x.as_f64()).collect::<Vec<_>>();
        let mut st = s.serialize_struct("DesignResult", 5)?;
        st.serialize_field("k_star", &self.k_star)?;
        st.serialize_field("prizes", &f(&self.prize_vector))?;
        st.serialize_field("objective", &self.objective_value.as_f64())?;
        st.serialize_field("per_j", &f(&self.per_j_objective))?;
        st.serialize_field("total_output", &self.total_output.as_f64())?;
        st.end()
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Domain(format!(
            "need at least two agents, got n = {n}"
        )));
    }
    Ok(())
}

/// Rejects populations whose pooled CDF reaches 1 strictly inside the unit
/// interval: beyond that point the design kernel is undefined.
fn check_nondegenerate<T: Real>(pop: &PopulationModel<T>) -> Result<()> {
    let cells = 4096;
    for i in 1..cells {
        let x = T::from_count(i) / T::from_count(cells);
        if x > T::one() - T::c(1e-6) {
            break;
        }
        if T::one() - pop.mixture_cdf_at(x) <= T::zero() {
            return Err(Error::DegenerateDistribution(format!(
                "1 - H vanishes at x = {x} < 1"
            )));
        }
    }
    Ok(())
}

/// `(1/j) int y S(y) f^H_{n-1,j}(y) dy` written without the 0/0 of `psi`:
/// the integrand is `y S C(n-1, j) H^{n-1-j} (1-H)^{j-1} h`.
fn general_rank_value<T, S>(
    pop: &PopulationModel<T>,
    n: usize,
    j: usize,
    survival: S,
    quad: &QuadratureConfig<T>,
) -> Result<T>
where
    T: Real,
    S: Fn(T) -> T,
{
    let coef = binomial::<T>(n - 1, j);
    let integrand = |y: T| {
        let h = pop.mixture_cdf_at(y);
        let dh = pop.mixture_pdf_at(y);
        if dh == T::zero() {
            return T::zero();
        }
        y * survival(y) * coef * h.powi((n - 1 - j) as i32) * (T::one() - h).powi(j as i32 - 1) * dh
    };
    integrate(integrand, T::zero(), T::one(), pop.knots(), quad)
}

/// `(1/(mu n)) int y h~_{n,j+1}(y) dy` with `H~ = mu F + 1 - mu`.
fn group_rank_value<T: Real>(
    pop: &PopulationModel<T>,
    n: usize,
    j: usize,
    quad: &QuadratureConfig<T>,
) -> Result<T> {
    let mu = pop.mu();
    if !(mu > T::zero()) {
        return Err(Error::Domain("group prizes need mu > 0".into()));
    }
    let integrand = |y: T| {
        y * orderstat_pdf_at(
            n,
            j + 1,
            pop.shifted_mixture_cdf_at(y),
            pop.shifted_mixture_pdf_at(y),
        )
    };
    let raw = integrate(integrand, T::zero(), T::one(), pop.target().knots(), quad)?;
    Ok(raw / (mu * T::from_count(n)))
}

/// Expected target-agent output under the top-`j` schedule for every `j` in `1..n`.
pub fn per_rank_objectives<T: Real>(
    pop: &PopulationModel<T>,
    n: usize,
    regime: DesignRegime,
) -> Result<Vec<T>> {
    check_n(n)?;
    let quad = QuadratureConfig::default();
    (1..n)
        .into_par_iter()
        .map(|j| match regime {
            DesignRegime::General => {
                general_rank_value(pop, n, j, |y| T::one() - pop.target().cdf_at(y), &quad)
            }
            DesignRegime::Group => group_rank_value(pop, n, j, &quad),
        })
        .collect()
}

/// Expected output per agent over the whole population under the top-`j` general schedule.
fn all_agent_output<T: Real>(pop: &PopulationModel<T>, n: usize, j: usize) -> Result<T> {
    general_rank_value(
        pop,
        n,
        j,
        |y| T::one() - pop.mixture_cdf_at(y),
        &QuadratureConfig::default(),
    )
}

/// Smallest index of the maximum.
fn argmax<T: Real>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn flat_prizes<T: Real>(n: usize, k: usize) -> Vec<T> {
    let share = T::one() / T::from_count(k);
    (0..n)
        .map(|i| if i < k { share } else { T::zero() })
        .collect()
}

/// Best equal-prize-to-top-k general schedule for the target group.
pub fn optimal_general_design<T: Real>(
    pop: &PopulationModel<T>,
    n: usize,
) -> Result<DesignResult<T>> {
    check_n(n)?;
    check_nondegenerate(pop)?;
    let per_j = per_rank_objectives(pop, n, DesignRegime::General)?;
    let k_star = argmax(&per_j) + 1;
    Ok(DesignResult {
        k_star,
        objective_value: per_j[k_star - 1],
        total_output: all_agent_output(pop, n, k_star)?,
        prize_vector: flat_prizes(n, k_star),
        per_j_objective: per_j,
    })
}

/// Total output under the output-maximising schedule (winner-take-all)
/// divided by total output under the target-optimal one.
pub fn general_design_loss_ratio<T: Real>(pop: &PopulationModel<T>, n: usize) -> Result<T> {
    let design = optimal_general_design(pop, n)?;
    Ok(all_agent_output(pop, n, 1)? / design.total_output)
}

/// Winner-take-all group prize, certified against every other top-j schedule.
pub fn optimal_group_design<T: Real>(
    pop: &PopulationModel<T>,
    n: usize,
) -> Result<DesignResult<T>> {
    check_n(n)?;
    let per_j = per_rank_objectives(pop, n, DesignRegime::Group)?;
    for (i, &v) in per_j.iter().enumerate().skip(1) {
        let margin = v - per_j[0];
        if margin > T::tol(CERTIFICATION_SLACK) {
            return Err(Error::CertificationFailure {
                j: i + 1,
                margin: margin.as_f64(),
            });
        }
    }
    let objective = per_j[0];
    Ok(DesignResult {
        k_star: 1,
        objective_value: objective,
        // non-target agents produce nothing under group prizes
        total_output: pop.mu() * objective,
        prize_vector: flat_prizes(n, 1),
        per_j_objective: per_j,
    })
}

/// Expected target-agent output of the schedule described by `gamma`.
pub fn objective_for_gamma<T: Real>(
    pop: &PopulationModel<T>,
    n: usize,
    gamma: &GammaWeights<T>,
    regime: DesignRegime,
) -> Result<T> {
    if gamma.as_slice().len() != n - 1 {
        return Err(Error::Domain(format!(
            "gamma has {} entries, expected {}",
            gamma.as_slice().len(),
            n - 1
        )));
    }
    let per_j = per_rank_objectives(pop, n, regime)?;
    Ok(gamma
        .as_slice()
        .iter()
        .zip(&per_j)
        .map(|(&g, &v)| g * v)
        .sum())
}

/// One row of the scheme comparison: per-target-agent output with a single
/// general prize (A), a single group prize (B), and a group prize of `mu` (C).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeRow<T> {
    pub mu: T,
    pub a: T,
    pub b: T,
    pub c: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeComparison<T> {
    pub rows: Vec<SchemeRow<T>>,
    /// Where schemes A and B cross, if they do on the grid's span.
    pub crossing: Option<T>,
}

/// `(n - 1) / (n (n + 1))`.
pub fn scheme_a_uniform<T: Real>(n: usize) -> T {
    let nf = T::from_count(n);
    (nf - T::one()) / (nf * (nf + T::one()))
}

/// Single group prize with uniform abilities.
pub fn scheme_b_uniform<T: Real>(n: usize, mu: T) -> T {
    let nf = T::from_count(n);
    let one = T::one();
    let q = one - mu;
    let bracket =
        (nf - one) - q * (nf + one) + q.powi(n as i32) * (T::c(2.0) * q + (nf + one) * mu);
    bracket / (nf * (nf + one) * mu * mu)
}

fn scheme_values<T: Real>(
    n: usize,
    mu: T,
    f: &AbilityDistribution<T>,
    g: &AbilityDistribution<T>,
) -> Result<(T, T)> {
    if !(mu > T::zero() && mu <= T::one()) {
        return Err(Error::Domain(format!(
            "scheme comparison needs mu in (0, 1], got {mu}"
        )));
    }
    if f.is_uniform() && g.is_uniform() {
        return Ok((scheme_a_uniform(n), scheme_b_uniform(n, mu)));
    }
    let pop = PopulationModel::new(mu, f.clone(), g.clone())?;
    let quad = QuadratureConfig::default();
    let a = general_rank_value(&pop, n, 1, |y| T::one() - f.cdf_at(y), &quad)?;
    let b = group_rank_value(&pop, n, 1, &quad)?;
    Ok((a, b))
}

/// Schemes A, B, C over `mu_grid`, with the A/B crossing located by root finding.
pub fn compare_schemes<T: Real>(
    n: usize,
    mu_grid: &[T],
    f: &AbilityDistribution<T>,
    g: &AbilityDistribution<T>,
) -> Result<SchemeComparison<T>> {
    check_n(n)?;
    let rows: Vec<SchemeRow<T>> = mu_grid
        .par_iter()
        .map(|&mu| {
            scheme_values(n, mu, f, g).map(|(a, b)| SchemeRow {
                mu,
                a,
                b,
                c: mu * b,
            })
        })
        .collect::<Result<_>>()?;
    let mut crossing = None;
    for w in rows.windows(2) {
        let (d0, d1) = (w[0].b - w[0].a, w[1].b - w[1].a);
        if d0 == T::zero() {
            crossing = Some(w[0].mu);
            break;
        }
        if d0 * d1 < T::zero() {
            let root = find_root(
                |mu| {
                    scheme_values(n, mu, f, g)
                        .map(|(a, b)| b - a)
                        .unwrap_or_else(|_| T::nan())
                },
                w[0].mu,
                w[1].mu,
            )?;
            crossing = Some(root);
            break;
        }
    }
    Ok(SchemeComparison { rows, crossing })
}
