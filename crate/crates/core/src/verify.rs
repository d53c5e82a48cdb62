//! Monte Carlo oracle that plays the contest directly: draw labels and
//! abilities, map them to outputs through the strategies, rank, and pay.
//! Nothing here reuses the analytic solvers, so agreement is evidence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dist::AbilityDistribution;
use crate::equilibrium::{ContestSpec, Equilibrium, GroupTag, TabulatedStrategy};
use crate::orderstats::PsiSum;
use crate::real::Real;

/// Samples per independent random stream.
const BATCH: usize = 4096;
/// Absolute floor added to the `3 SE` tolerance of deviation checks.
pub const GAIN_FLOOR: f64 = 1e-3;
/// Standard errors tolerated before a Monte Carlo check fails.
pub const SE_MULTIPLIER: f64 = 3.0;

/// Inverse-CDF sampler built from a fine tabulation of the CDF.
#[derive(Debug, Clone)]
pub struct QuantileSampler {
    xs: Vec<f64>,
    cdf: Vec<f64>,
    uniform: bool,
}

impl QuantileSampler {
    pub fn new<T: Real>(d: &AbilityDistribution<T>) -> Self {
        if d.is_uniform() {
            return Self {
                xs: Vec::new(),
                cdf: Vec::new(),
                uniform: true,
            };
        }
        let cells = 1 << 14;
        let mut xs: Vec<f64> = (0..=cells).map(|i| i as f64 / cells as f64).collect();
        xs.extend(d.knots().iter().map(|k| k.as_f64()));
        xs.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
        xs.dedup();
        let mut cdf: Vec<f64> = xs.iter().map(|&x| d.cdf_at(T::c(x)).as_f64()).collect();
        // enforce monotonicity against rounding
        for i in 1..cdf.len() {
            if cdf[i] < cdf[i - 1] {
                cdf[i] = cdf[i - 1];
            }
        }
        Self {
            xs,
            cdf,
            uniform: false,
        }
    }

    /// Ability with CDF value `u`.
    pub fn quantile(&self, u: f64) -> f64 {
        if self.uniform {
            return u;
        }
        let j = self.cdf.partition_point(|&c| c < u);
        if j == 0 {
            return self.xs[0];
        }
        if j >= self.xs.len() {
            return 1.0;
        }
        let (c0, c1) = (self.cdf[j - 1], self.cdf[j]);
        let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
        self.xs[j - 1] + t * (self.xs[j] - self.xs[j - 1])
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.gen::<f64>())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentDraw {
    pub label: GroupTag,
    pub ability: f64,
    pub output: f64,
}

/// Rankings and payments of one simulated contest.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationOutcome {
    /// Agent indices from best to worst output.
    pub general_rank_of: Vec<usize>,
    /// Target agents only, best to worst.
    pub group_rank_of: Vec<usize>,
    pub prize_paid: Vec<f64>,
}

/// Ranks `draws` by output with ties broken uniformly at random and pays
/// `general[r]` to overall rank `r` and `group[r]` to target rank `r`.
pub fn simulate_contest<R: Rng>(
    draws: &[AgentDraw],
    general: &[f64],
    group: &[f64],
    rng: &mut R,
) -> AllocationOutcome {
    let keys: Vec<f64> = draws.iter().map(|_| rng.gen()).collect();
    let mut order: Vec<usize> = (0..draws.len()).collect();
    order.sort_by(|&a, &b| {
        draws[b]
            .output
            .partial_cmp(&draws[a].output)
            .expect("finite output")
            .then(keys[b].total_cmp(&keys[a]))
    });
    let group_order: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| draws[i].label == GroupTag::Target)
        .collect();
    let mut paid = vec![0.0; draws.len()];
    for (r, &i) in order.iter().enumerate() {
        paid[i] += general.get(r).copied().unwrap_or(0.0);
    }
    for (r, &i) in group_order.iter().enumerate() {
        paid[i] += group.get(r).copied().unwrap_or(0.0);
    }
    AllocationOutcome {
        general_rank_of: order,
        group_rank_of: group_order,
        prize_paid: paid,
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    /// Whether `target` lies within `SE_MULTIPLIER` standard errors (plus `floor`).
    pub fn agrees_with(&self, target: f64, floor: f64) -> bool {
        (self.mean - target).abs() <= SE_MULTIPLIER * self.se + floor
    }
}

/// Running sums for means and variances of several paired statistics.
#[derive(Debug, Clone, Default)]
struct Moments {
    count: usize,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl Moments {
    fn new(k: usize) -> Self {
        Self {
            count: 0,
            sum: vec![0.0; k],
            sum_sq: vec![0.0; k],
        }
    }

    fn push(&mut self, values: &[f64]) {
        self.count += 1;
        for (i, &v) in values.iter().enumerate() {
            self.sum[i] += v;
            self.sum_sq[i] += v * v;
        }
    }

    fn merge(mut self, other: &Self) -> Self {
        self.count += other.count;
        for i in 0..self.sum.len() {
            self.sum[i] += other.sum[i];
            self.sum_sq[i] += other.sum_sq[i];
        }
        self
    }

    fn estimate(&self, i: usize) -> Estimate {
        let n = self.count as f64;
        let mean = self.sum[i] / n;
        let var = if self.count > 1 {
            ((self.sum_sq[i] - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        Estimate {
            mean,
            se: (var / n).sqrt(),
        }
    }
}

/// Runs `samples` draws split into fixed batches, each on its own ChaCha
/// stream, and merges them in batch order so the result is independent of
/// thread scheduling.
fn run_batches<F>(samples: usize, seed: u64, k: usize, body: F) -> Moments
where
    F: Fn(&mut ChaCha8Rng, &mut Vec<f64>) + Sync,
{
    let batches = samples.div_ceil(BATCH);
    let parts: Vec<Moments> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let count = BATCH.min(samples - b * BATCH);
            let mut m = Moments::new(k);
            let mut out = vec![0.0; k];
            for _ in 0..count {
                body(&mut rng, &mut out);
                m.push(&out);
            }
            m
        })
        .collect();
    parts.iter().fold(Moments::new(k), |acc, p| acc.merge(p))
}

/// Everything needed to draw opponents.
struct Field<'a, T> {
    n: usize,
    mu: f64,
    f: QuantileSampler,
    g: QuantileSampler,
    alpha: &'a TabulatedStrategy<T>,
    beta: &'a TabulatedStrategy<T>,
    general: Vec<f64>,
    group: Vec<f64>,
}

impl<'a, T: Real> Field<'a, T> {
    fn new(
        spec: &ContestSpec<T>,
        alpha: &'a TabulatedStrategy<T>,
        beta: &'a TabulatedStrategy<T>,
    ) -> Self {
        let pop = spec.population();
        Self {
            n: spec.n(),
            mu: spec.mu().as_f64(),
            f: QuantileSampler::new(pop.target()),
            g: QuantileSampler::new(pop.nontarget()),
            alpha,
            beta,
            general: spec.prizes().general().iter().map(|x| x.as_f64()).collect(),
            group: spec.prizes().group().iter().map(|x| x.as_f64()).collect(),
        }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> AgentDraw {
        if rng.gen::<f64>() < self.mu {
            let v = self.f.sample(rng);
            AgentDraw {
                label: GroupTag::Target,
                ability: v,
                output: self.alpha.output(T::c(v)).as_f64(),
            }
        } else {
            let v = self.g.sample(rng);
            AgentDraw {
                label: GroupTag::NonTarget,
                ability: v,
                output: self.beta.output(T::c(v)).as_f64(),
            }
        }
    }

    /// Prize won by a focal agent with output `b` against `opponents`, with
    /// `tie_key` and `opp_keys` deciding ties.
    fn focal_prize(
        &self,
        b: f64,
        label: GroupTag,
        opponents: &[AgentDraw],
        tie_key: f64,
        opp_keys: &[f64],
    ) -> f64 {
        let mut ahead = 0;
        let mut ahead_target = 0;
        for (o, &k) in opponents.iter().zip(opp_keys) {
            let beats = o.output > b || (o.output == b && k > tie_key);
            if beats {
                ahead += 1;
                if o.label == GroupTag::Target {
                    ahead_target += 1;
                }
            }
        }
        let mut prize = self.general.get(ahead).copied().unwrap_or(0.0);
        if label == GroupTag::Target {
            prize += self.group.get(ahead_target).copied().unwrap_or(0.0);
        }
        prize
    }
}

/// Mean utility `v * prize - b` of one focal agent playing `focal_output`
/// against `n - 1` opponents following `(alpha, beta)`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_utility<T: Real>(
    spec: &ContestSpec<T>,
    strategies: (&TabulatedStrategy<T>, &TabulatedStrategy<T>),
    focal_ability: T,
    focal_label: GroupTag,
    focal_output: T,
    samples: usize,
    seed: u64,
) -> Estimate {
    simulate_payoffs(
        spec,
        strategies,
        focal_ability,
        focal_label,
        &[focal_output],
        samples,
        seed,
    )
    .0[0]
}

/// Payoff estimates for each candidate output under common random numbers,
/// plus paired estimates of each candidate's gain over `outputs[0]`.
pub fn simulate_payoffs<T: Real>(
    spec: &ContestSpec<T>,
    strategies: (&TabulatedStrategy<T>, &TabulatedStrategy<T>),
    focal_ability: T,
    focal_label: GroupTag,
    outputs: &[T],
    samples: usize,
    seed: u64,
) -> (Vec<Estimate>, Vec<Estimate>) {
    let field = Field::new(spec, strategies.0, strategies.1);
    let v = focal_ability.as_f64();
    let bs: Vec<f64> = outputs.iter().map(|b| b.as_f64()).collect();
    let k = bs.len();
    let m = run_batches(samples.max(1), seed, 2 * k, |rng, out| {
        let opponents: Vec<AgentDraw> = (1..field.n).map(|_| field.draw(rng)).collect();
        let keys: Vec<f64> = opponents.iter().map(|_| rng.gen()).collect();
        let tie_key: f64 = rng.gen();
        for (i, &b) in bs.iter().enumerate() {
            out[i] = v * field.focal_prize(b, focal_label, &opponents, tie_key, &keys) - b;
        }
        let base = out[0];
        for i in 0..k {
            out[k + i] = out[i] - base;
        }
    });
    (
        (0..k).map(|i| m.estimate(i)).collect(),
        (0..k).map(|i| m.estimate(k + i)).collect(),
    )
}

/// Mean and SE of the total output of target agents in one contest.
pub fn simulate_group_output<T: Real>(
    spec: &ContestSpec<T>,
    strategies: (&TabulatedStrategy<T>, &TabulatedStrategy<T>),
    samples: usize,
    seed: u64,
) -> Estimate {
    let field = Field::new(spec, strategies.0, strategies.1);
    let m = run_batches(samples.max(1), seed, 1, |rng, out| {
        out[0] = (0..field.n)
            .map(|_| field.draw(rng))
            .filter(|d| d.label == GroupTag::Target)
            .map(|d| d.output)
            .sum();
    });
    m.estimate(0)
}

/// The 21 multiplicative deviations in `[0.5 b, 1.5 b]` plus zero output.
pub fn deviation_grid(b: f64) -> Vec<f64> {
    let mut grid: Vec<f64> = (0..21).map(|i| b * (0.5 + i as f64 * 0.05)).collect();
    grid.push(0.0);
    grid
}

#[derive(Debug, Clone, Serialize)]
pub struct DeviationCheck {
    pub label: GroupTag,
    pub ability: f64,
    pub equilibrium_output: f64,
    pub best_deviation: f64,
    pub gain: Estimate,
    pub threshold: f64,
    pub pass: bool,
}

/// Checks that no grid deviation beats the equilibrium output by more than
/// `3 SE + 1e-3` for each ability and each group that can win something.
pub fn best_response_check<T: Real>(
    spec: &ContestSpec<T>,
    eq: &Equilibrium<T>,
    abilities: &[f64],
    samples: usize,
    seed: u64,
) -> Vec<DeviationCheck> {
    let mut labels = Vec::new();
    if spec.mu() > T::zero() {
        labels.push(GroupTag::Target);
    }
    if spec.mu() < T::one() {
        labels.push(GroupTag::NonTarget);
    }
    let mut checks = Vec::new();
    for (li, &label) in labels.iter().enumerate() {
        let own = if label == GroupTag::Target {
            &eq.alpha
        } else {
            &eq.beta
        };
        for (ai, &v) in abilities.iter().enumerate() {
            let b = own.output(T::c(v)).as_f64();
            let mut candidates = vec![b];
            candidates.extend(deviation_grid(b));
            let cand_t: Vec<T> = candidates.iter().map(|&x| T::c(x)).collect();
            let stream_seed = seed ^ ((li as u64) << 40) ^ ((ai as u64 + 1) << 20);
            let (_, gains) = simulate_payoffs(
                spec,
                (&eq.alpha, &eq.beta),
                T::c(v),
                label,
                &cand_t,
                samples,
                stream_seed,
            );
            let (best, gain) = gains
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, g)| (i, *g))
                .max_by(|a, b| {
                    (a.1.mean - SE_MULTIPLIER * a.1.se)
                        .total_cmp(&(b.1.mean - SE_MULTIPLIER * b.1.se))
                })
                .expect("nonempty grid");
            let threshold = SE_MULTIPLIER * gain.se + GAIN_FLOOR;
            checks.push(DeviationCheck {
                label,
                ability: v,
                equilibrium_output: b,
                best_deviation: candidates[best],
                gain,
                threshold,
                pass: gain.mean <= threshold,
            });
        }
    }
    checks
}

/// `E[number of target agents] * E_F[alpha]`, the analytic counterpart of
/// [`simulate_group_output`].
pub fn expected_target_total<T: Real>(spec: &ContestSpec<T>, mean_alpha: T) -> T {
    spec.mu() * T::from_count(spec.n()) * mean_alpha
}

/// Evaluates `|a^{-1}(x) * dP/dx - 1|` at `x = a(v)` for each grid point,
/// where `a` is the group's strategy and `P(x)` the expected prize of output
/// `x` against the tabulated strategies. Zero at an interior optimum.
pub fn foc_residual<T: Real>(
    spec: &ContestSpec<T>,
    eq: &Equilibrium<T>,
    label: GroupTag,
    v_grid: &[T],
) -> Vec<T> {
    let pop = spec.population();
    let mu = spec.mu();
    let n = spec.n();
    let general = PsiSum::new(n, spec.prizes().general());
    let group = PsiSum::new(n, spec.prizes().group());
    let (alpha, beta) = (&eq.alpha, &eq.beta);
    v_grid
        .iter()
        .map(|&v| {
            let x = if label == GroupTag::Target {
                alpha.output(v)
            } else {
                beta.output(v)
            };
            // abilities in each group producing x, with their CDF and density terms
            let (fa, dfa) = preimage_terms(alpha, pop.target(), x);
            let (gb, dgb) = preimage_terms(beta, pop.nontarget(), x);
            let all = mu * fa + (T::one() - mu) * gb;
            let d_all = mu * dfa + (T::one() - mu) * dgb;
            let mut marginal = general.eval(all) * d_all;
            if label == GroupTag::Target {
                marginal = marginal + group.eval(mu * fa + T::one() - mu) * mu * dfa;
            }
            (v * marginal - T::one()).abs()
        })
        .collect()
}

/// `(D(s^{-1}(x)), d/dx D(s^{-1}(x)))` for strategy `s` and ability CDF `D`.
fn preimage_terms<T: Real>(s: &TabulatedStrategy<T>, d: &AbilityDistribution<T>, x: T) -> (T, T) {
    if s.is_zero() || x >= s.max_output() {
        return (T::one(), T::zero());
    }
    let u = match s.ability_for(x) {
        Ok(u) => u,
        Err(_) => return (T::one(), T::zero()),
    };
    let slope = s.slope(u);
    if !(slope > T::zero()) {
        return (d.cdf_at(u), T::zero());
    }
    (d.cdf_at(u), d.pdf_at(u) / slope)
}
