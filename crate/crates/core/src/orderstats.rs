//! Rank probabilities, order-statistic densities and CDFs, and the derivative
//! kernel of rank probabilities.
//!
//! Ranks count from the top: `j = 1` is the highest of `n` draws.

use crate::error::{Error, Result};
use crate::real::Real;

/// Largest `n` for which binomial coefficients are formed by exact products.
const EXACT_BINOMIAL_LIMIT: usize = 30;

/// `(n, j)`: the `j`-th highest of `n` i.i.d. draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrderStatQuery {
    pub n: usize,
    pub j: usize,
}

impl OrderStatQuery {
    pub fn new(n: usize, j: usize) -> Result<Self> {
        if n == 0 || j == 0 || j > n {
            return Err(Error::Domain(format!(
                "rank {j} out of range for {n} samples"
            )));
        }
        Ok(Self { n, j })
    }
}

/// `C(n, k)`; exact integer products for small `n`, floating products above.
pub fn binomial<T: Real>(n: usize, k: usize) -> T {
    if k > n {
        return T::zero();
    }
    let k = k.min(n - k);
    if n <= EXACT_BINOMIAL_LIMIT {
        let mut acc: u64 = 1;
        for i in 0..k {
            acc = acc * (n - i) as u64 / (i + 1) as u64;
        }
        return T::from_u64(acc).expect("binomial representable");
    }
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    T::c(acc)
}

fn check_prob<T: Real>(x: T, what: &str) -> Result<()> {
    if x >= T::zero() && x <= T::one() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} = {x} outside [0, 1]")))
    }
}

/// Probability that value `v` with `H(v) = h_cdf` ranks `j`-th among `n` draws:
/// `C(n-1, j-1) H^{n-j} (1-H)^{j-1}`.
pub fn win_prob<T: Real>(q: OrderStatQuery, h_cdf: T) -> Result<T> {
    check_prob(h_cdf, "H(v)")?;
    Ok(win_prob_at(q.n, q.j, h_cdf))
}

pub fn win_prob_at<T: Real>(n: usize, j: usize, h: T) -> T {
    binomial::<T>(n - 1, j - 1) * h.powi((n - j) as i32) * (T::one() - h).powi((j - 1) as i32)
}

/// Density of the `j`-th highest of `n` draws from `H` at a point with
/// `H(v) = h_cdf` and `H'(v) = h_pdf`.
pub fn orderstat_pdf<T: Real>(q: OrderStatQuery, h_cdf: T, h_pdf: T) -> Result<T> {
    check_prob(h_cdf, "H(v)")?;
    if !(h_pdf >= T::zero()) {
        return Err(Error::Domain(format!("density {h_pdf} is negative")));
    }
    Ok(orderstat_pdf_at(q.n, q.j, h_cdf, h_pdf))
}

pub fn orderstat_pdf_at<T: Real>(n: usize, j: usize, h: T, dh: T) -> T {
    T::from_count(n) * win_prob_at(n, j, h) * dh
}

/// CDF of the `j`-th highest of `n` draws: `sum_{l<j} C(n,l) H^{n-l} (1-H)^l`,
/// the regularized incomplete beta `I_H(n+1-j, j)`.
pub fn orderstat_cdf<T: Real>(q: OrderStatQuery, h_cdf: T) -> Result<T> {
    check_prob(h_cdf, "H(v)")?;
    Ok(orderstat_cdf_at(q.n, q.j, h_cdf))
}

pub fn orderstat_cdf_at<T: Real>(n: usize, j: usize, h: T) -> T {
    let g = T::one() - h;
    (0..j)
        .map(|l| binomial::<T>(n, l) * h.powi((n - l) as i32) * g.powi(l as i32))
        .sum::<T>()
        .min(T::one())
}

/// Derivative of [`win_prob_at`] with respect to `H`.
///
/// Expanded as `C(n-1,j-1) [(n-j) H^{n-j-1} (1-H)^{j-1} - (j-1) H^{n-j} (1-H)^{j-2}]`,
/// dropping whichever term has a zero factor, so it is a polynomial for every
/// rank including `j = 1` and `j = n`.
pub fn psi_kernel<T: Real>(j: usize, n: usize, x: T) -> Result<T> {
    if n < 2 || j == 0 || j > n {
        return Err(Error::Domain(format!(
            "psi kernel needs n >= 2 and 1 <= j <= n, got n = {n}, j = {j}"
        )));
    }
    check_prob(x, "x")?;
    Ok(psi_at(j, n, x))
}

pub fn psi_at<T: Real>(j: usize, n: usize, x: T) -> T {
    let y = T::one() - x;
    let mut d = T::zero();
    if n > j {
        d = d + T::from_count(n - j) * x.powi((n - j - 1) as i32) * y.powi((j - 1) as i32);
    }
    if j > 1 {
        d = d - T::from_count(j - 1) * x.powi((n - j) as i32) * y.powi((j - 2) as i32);
    }
    binomial::<T>(n - 1, j - 1) * d
}

/// Residuals of `H f_{n-1,j} = (n-j)/n f_{n,j}` and `(1-H) f_{n-1,j} = j/n f_{n,j+1}`.
pub fn orderstat_identities_check<T: Real>(q: OrderStatQuery, h_cdf: T, h_pdf: T) -> (T, T) {
    let (n, j) = (q.n, q.j);
    let nf = T::from_count(n);
    let lower = orderstat_pdf_at(n - 1, j, h_cdf, h_pdf);
    let r1 = h_cdf * lower - T::from_count(n - j) / nf * orderstat_pdf_at(n, j, h_cdf, h_pdf);
    let r2 = (T::one() - h_cdf) * lower
        - T::from_count(j) / nf * orderstat_pdf_at(n, j + 1, h_cdf, h_pdf);
    (r1.abs(), r2.abs())
}

/// `sum_j weight_j * d p_j / dH` over ranks `j = 1..=n`, with the binomial
/// coefficients cached for repeated evaluation.
#[derive(Debug, Clone)]
pub struct PsiSum<T> {
    n: usize,
    scaled: Vec<T>,
}

impl<T: Real> PsiSum<T> {
    pub fn new(n: usize, weights: &[T]) -> Self {
        let scaled = (1..=n)
            .map(|j| {
                weights.get(j - 1).copied().unwrap_or_else(T::zero) * binomial::<T>(n - 1, j - 1)
            })
            .collect();
        Self { n, scaled }
    }

    pub fn is_zero(&self) -> bool {
        self.scaled.iter().all(|&c| c == T::zero())
    }

    pub fn eval(&self, x: T) -> T {
        let n = self.n;
        let (hp, gp) = power_tables(x, n);
        let mut acc = T::zero();
        for j in 1..=n {
            let c = self.scaled[j - 1];
            if c == T::zero() {
                continue;
            }
            let mut d = T::zero();
            if n > j {
                d = d + T::from_count(n - j) * hp[n - j - 1] * gp[j - 1];
            }
            if j > 1 {
                d = d - T::from_count(j - 1) * hp[n - j] * gp[j - 2];
            }
            acc = acc + c * d;
        }
        acc
    }
}

/// `sum_j weight_j f_{m,j}(v) / h(v)` for ranks `j = 1..=m`: an order-statistic
/// density mixture with the common density factor left to the caller.
#[derive(Debug, Clone)]
pub struct RankDensitySum<T> {
    m: usize,
    scaled: Vec<T>,
}

impl<T: Real> RankDensitySum<T> {
    pub fn new(m: usize, weights: &[T]) -> Self {
        let mf = T::from_count(m);
        let scaled = (1..=m)
            .map(|j| {
                weights.get(j - 1).copied().unwrap_or_else(T::zero)
                    * mf
                    * binomial::<T>(m - 1, j - 1)
            })
            .collect();
        Self { m, scaled }
    }

    pub fn eval(&self, h: T) -> T {
        let m = self.m;
        let (hp, gp) = power_tables(h, m);
        (1..=m)
            .filter(|&j| self.scaled[j - 1] != T::zero())
            .map(|j| self.scaled[j - 1] * hp[m - j] * gp[j - 1])
            .sum()
    }
}

fn power_tables<T: Real>(x: T, n: usize) -> (Vec<T>, Vec<T>) {
    let y = T::one() - x;
    let mut hp = Vec::with_capacity(n + 1);
    let mut gp = Vec::with_capacity(n + 1);
    let (mut a, mut b) = (T::one(), T::one());
    for _ in 0..=n {
        hp.push(a);
        gp.push(b);
        a = a * x;
        b = b * y;
    }
    (hp, gp)
}
