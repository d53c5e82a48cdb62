//! Knot-aware composite Gauss–Legendre quadrature.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::real::Real;

/// Rule sizes with precomputed node tables.
pub const SUPPORTED_NODE_COUNTS: [usize; 4] = [4, 8, 16, 32];

/// Deepest local bisection before a panel is declared unresolved.
const MAX_DEPTH: u32 = 60;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig<T> {
    pub panels_per_unit: usize,
    pub nodes_per_panel: usize,
    pub target_rel_tol: T,
}

impl<T: Real> Default for QuadratureConfig<T> {
    fn default() -> Self {
        Self {
            panels_per_unit: 64,
            nodes_per_panel: 16,
            target_rel_tol: T::tol(1e-9),
        }
    }
}

impl<T: Real> QuadratureConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.panels_per_unit == 0 {
            return Err(Error::Domain("panels_per_unit must be at least 1".into()));
        }
        if !SUPPORTED_NODE_COUNTS.contains(&self.nodes_per_panel) {
            return Err(Error::Domain(format!(
                "nodes_per_panel must be one of {SUPPORTED_NODE_COUNTS:?}, got {}",
                self.nodes_per_panel
            )));
        }
        if !(self.target_rel_tol > T::zero()) {
            return Err(Error::Domain("target_rel_tol must be positive".into()));
        }
        Ok(())
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on the Legendre polynomial from Chebyshev-like guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d.is_finite() {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Cached rule for one of [`SUPPORTED_NODE_COUNTS`]; builds others on demand.
    pub fn cached(n: usize) -> std::borrow::Cow<'static, GaussLegendre> {
        static RULES: OnceLock<Vec<GaussLegendre>> = OnceLock::new();
        let rules = RULES.get_or_init(|| {
            SUPPORTED_NODE_COUNTS
                .iter()
                .map(|&m| Self::new(m))
                .collect()
        });
        match SUPPORTED_NODE_COUNTS.iter().position(|&m| m == n) {
            Some(i) => std::borrow::Cow::Borrowed(&rules[i]),
            None => std::borrow::Cow::Owned(Self::new(n)),
        }
    }

    /// Single-panel rule on [a, b].
    pub fn apply<T: Real, F: Fn(T) -> T>(&self, f: &F, a: T, b: T) -> T {
        let half = (b - a) * T::c(0.5);
        let mid = (a + b) * T::c(0.5);
        let mut acc = T::zero();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + T::c(w) * f(mid + half * T::c(x));
        }
        acc * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Sorted, deduplicated breakpoints `a, knots ∩ (a, b), b`.
pub fn breakpoints<T: Real>(a: T, b: T, knots: &[T]) -> Vec<T> {
    let mut pts = Vec::with_capacity(knots.len() + 2);
    pts.push(a);
    pts.extend(knots.iter().copied().filter(|&k| k > a && k < b));
    pts.push(b);
    pts.sort_by(|x, y| x.partial_cmp(y).expect("finite breakpoints"));
    pts.dedup();
    pts
}

/// Integrates `f` over `[a, b]`.
///
/// Panels never straddle a knot (knots outside `[a, b]` are ignored). Each
/// panel is compared against its two halves and bisected locally until the
/// halves agree, which also resolves integrable endpoint singularities such
/// as `x^{-1/2}`.
pub fn integrate<T: Real, F: Fn(T) -> T>(
    f: F,
    a: T,
    b: T,
    knots: &[T],
    cfg: &QuadratureConfig<T>,
) -> Result<T> {
    cfg.validate()?;
    if !(a <= b) {
        return Err(Error::Domain(format!(
            "integration bounds reversed: [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(T::zero());
    }
    let rule = GaussLegendre::cached(cfg.nodes_per_panel);
    let pts = breakpoints(a, b, knots);

    let mut panels = Vec::new();
    for w in pts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let count = ((hi - lo) * T::from_count(cfg.panels_per_unit))
            .ceil()
            .to_usize()
            .unwrap_or(1)
            .max(1);
        let h = (hi - lo) / T::from_count(count);
        for i in 0..count {
            let p_lo = lo + h * T::from_count(i);
            let p_hi = if i + 1 == count { hi } else { p_lo + h };
            panels.push((p_lo, p_hi));
        }
    }

    let coarse: Vec<T> = panels
        .iter()
        .map(|&(lo, hi)| rule.apply(&f, lo, hi))
        .collect();
    let scale = T::one() + coarse.iter().copied().sum::<T>().abs();
    let local_tol = cfg.target_rel_tol * scale / T::from_count(4 * panels.len());

    let mut total = T::zero();
    for (&(lo, hi), &whole) in panels.iter().zip(&coarse) {
        total = total + refine(&rule, &f, lo, hi, whole, local_tol, 0)?;
    }
    if !total.is_finite() {
        return Err(Error::ToleranceNotMet {
            a: a.as_f64(),
            b: b.as_f64(),
            change: f64::NAN,
        });
    }
    Ok(total)
}

fn refine<T: Real, F: Fn(T) -> T>(
    rule: &GaussLegendre,
    f: &F,
    lo: T,
    hi: T,
    whole: T,
    tol: T,
    depth: u32,
) -> Result<T> {
    let mid = (lo + hi) * T::c(0.5);
    let left = rule.apply(f, lo, mid);
    let right = rule.apply(f, mid, hi);
    let halves = left + right;
    let change = (halves - whole).abs();
    if change <= tol || change <= T::epsilon() * T::c(8.0) * halves.abs() {
        return Ok(halves);
    }
    if depth >= MAX_DEPTH || !(mid > lo && mid < hi) {
        return Err(Error::ToleranceNotMet {
            a: lo.as_f64(),
            b: hi.as_f64(),
            change: change.as_f64(),
        });
    }
    Ok(refine(rule, f, lo, mid, left, tol, depth + 1)?
        + refine(rule, f, mid, hi, right, tol, depth + 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> QuadratureConfig<f64> {
        QuadratureConfig::default()
    }

    #[test]
    fn weights_sum_to_two() {
        for n in SUPPORTED_NODE_COUNTS {
            let r = GaussLegendre::new(n);
            let s: f64 = r.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n} sum={s}");
        }
    }

    #[test]
    fn linear_integrand() {
        let v = integrate(|x: f64| x, 0.0, 1.0, &[], &cfg()).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn exact_for_high_degree_polynomials() {
        for &m in &SUPPORTED_NODE_COUNTS {
            let c = QuadratureConfig {
                nodes_per_panel: m,
                ..cfg()
            };
            let deg = 2 * m - 1;
            let v = integrate(|x: f64| x.powi(deg as i32), 0.0, 1.0, &[], &c).unwrap();
            assert!((v - 1.0 / (deg as f64 + 1.0)).abs() < 1e-12, "m={m}");
        }
    }

    #[test]
    fn kink_at_knot() {
        let f = |x: f64| (x - 0.3).abs();
        let v = integrate(f, 0.0, 1.0, &[0.3], &cfg()).unwrap();
        let exact = 0.3 * 0.3 / 2.0 + 0.7 * 0.7 / 2.0;
        assert!((v - exact).abs() < 1e-14);
    }

    #[test]
    fn jump_at_knot() {
        let f = |x: f64| if x < 0.75 { 0.0 } else { 2.0 };
        let v = integrate(f, 0.0, 1.0, &[0.75], &cfg()).unwrap();
        assert!((v - 0.5).abs() < 1e-14);
    }

    #[test]
    fn endpoint_singularity() {
        let v = integrate(|x: f64| 0.5 / x.sqrt(), 0.0, 1.0, &[], &cfg()).unwrap();
        assert!((v - 1.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn reversed_bounds_rejected() {
        assert!(matches!(
            integrate(|x: f64| x, 1.0, 0.0, &[], &cfg()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn bad_config_rejected() {
        let c = QuadratureConfig {
            nodes_per_panel: 5,
            ..cfg()
        };
        assert!(integrate(|x: f64| x, 0.0, 1.0, &[], &c).is_err());
    }

    #[test]
    fn nonintegrable_reports_tolerance() {
        let r = integrate(|x: f64| 1.0 / x, 0.0, 1.0, &[], &cfg());
        assert!(matches!(r, Err(Error::ToleranceNotMet { .. })), "{r:?}");
    }

    #[test]
    fn works_in_single_precision() {
        let c = QuadratureConfig::<f32>::default();
        let v = integrate(|x: f32| x * x, 0.0, 1.0, &[], &c).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-6);
    }
}
