use crate::error::{Error, Result};
use crate::real::Real;

/// Bisection root of `f` on `[lo, hi]`.
///
/// Stops once `|f(x)| <= 1e-10` or the bracket is narrower than `1e-12`.
pub fn find_root<T: Real, F: FnMut(T) -> T>(mut f: F, lo: T, hi: T) -> Result<T> {
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut fa = f(a);
    let fb = f(b);
    if !(fa * fb <= T::zero()) {
        return Err(Error::NoSignChange {
            lo: a.as_f64(),
            hi: b.as_f64(),
        });
    }
    let ftol = T::tol(1e-10);
    let xtol = T::tol(1e-12);
    if fa.abs() <= ftol {
        return Ok(a);
    }
    if fb.abs() <= ftol {
        return Ok(b);
    }
    loop {
        let m = (a + b) * T::c(0.5);
        let fm = f(m);
        if fm.abs() <= ftol || (b - a) <= xtol || !(m > a && m < b) {
            return Ok(m);
        }
        if (fa < T::zero()) == (fm < T::zero()) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_root() {
        assert!((find_root(|x: f64| x - 0.5, 0.0, 1.0).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sqrt_two() {
        let r = find_root(|x: f64| x * x - 2.0, 1.0, 2.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn no_sign_change() {
        assert!(matches!(
            find_root(|x: f64| x * x + 1.0, -1.0, 1.0),
            Err(Error::NoSignChange { .. })
        ));
    }
}
