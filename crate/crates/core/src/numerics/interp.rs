//! Shape-preserving cubic tables used to carry tabulated monotone functions.

use crate::error::{Error, Result};
use crate::real::Real;

/// Piecewise cubic Hermite interpolant of nondecreasing data.
///
/// Each cell stores its own endpoint slopes, so a function with a kink at a
/// node (a knot of the underlying distribution, or the stitching point of a
/// two-branch strategy) is represented without smoothing across it. Slopes
/// are limited cell by cell so the interpolant never overshoots.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneTable<T> {
    xs: Vec<T>,
    ys: Vec<T>,
    lo_slope: Vec<T>,
    hi_slope: Vec<T>,
}

impl<T: Real> MonotoneTable<T> {
    /// Slopes estimated from the data (Fritsch–Butland harmonic mean).
    pub fn from_points(xs: Vec<T>, ys: Vec<T>) -> Result<Self> {
        check_data(&xs, &ys)?;
        let n = xs.len();
        let secants: Vec<T> = (0..n - 1)
            .map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]))
            .collect();
        let mut m = vec![T::zero(); n];
        if n == 2 {
            m[0] = secants[0];
            m[1] = secants[0];
        } else {
            for i in 1..n - 1 {
                let (a, b) = (secants[i - 1], secants[i]);
                if a > T::zero() && b > T::zero() {
                    let h0 = xs[i] - xs[i - 1];
                    let h1 = xs[i + 1] - xs[i];
                    let w1 = T::c(2.0) * h1 + h0;
                    let w2 = h1 + T::c(2.0) * h0;
                    m[i] = (w1 + w2) / (w1 / a + w2 / b);
                }
            }
            m[0] = end_slope(xs[1] - xs[0], xs[2] - xs[1], secants[0], secants[1]);
            m[n - 1] = end_slope(
                xs[n - 1] - xs[n - 2],
                xs[n - 2] - xs[n - 3],
                secants[n - 2],
                secants[n - 3],
            );
        }
        Ok(Self::assemble(xs, ys, m.clone(), m))
    }

    /// Hermite table with known derivatives at the nodes.
    pub fn with_slopes(xs: Vec<T>, ys: Vec<T>, slopes: Vec<T>) -> Result<Self> {
        Self::with_one_sided_slopes(xs, ys, slopes.clone(), slopes)
    }

    /// Hermite table with separate left and right derivatives at each node.
    pub fn with_one_sided_slopes(
        xs: Vec<T>,
        ys: Vec<T>,
        left: Vec<T>,
        right: Vec<T>,
    ) -> Result<Self> {
        check_data(&xs, &ys)?;
        if left.len() != xs.len() || right.len() != xs.len() {
            return Err(Error::InvalidTable(
                "slope count does not match node count".into(),
            ));
        }
        if left.iter().chain(&right).any(|s| !s.is_finite()) {
            return Err(Error::InvalidTable("non-finite slope".into()));
        }
        Ok(Self::assemble(xs, ys, left, right))
    }

    fn assemble(xs: Vec<T>, ys: Vec<T>, left: Vec<T>, right: Vec<T>) -> Self {
        let cells = xs.len() - 1;
        let mut lo_slope = Vec::with_capacity(cells);
        let mut hi_slope = Vec::with_capacity(cells);
        let three = T::c(3.0);
        for i in 0..cells {
            let delta = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
            let (mut a, mut b) = (right[i].max(T::zero()), left[i + 1].max(T::zero()));
            if delta <= T::zero() {
                a = T::zero();
                b = T::zero();
            } else {
                let (ra, rb) = (a / delta, b / delta);
                let r2 = ra * ra + rb * rb;
                if r2 > three * three {
                    let tau = three / r2.sqrt();
                    a = tau * a;
                    b = tau * b;
                }
            }
            lo_slope.push(a);
            hi_slope.push(b);
        }
        Self {
            xs,
            ys,
            lo_slope,
            hi_slope,
        }
    }

    pub fn xs(&self) -> &[T] {
        &self.xs
    }

    pub fn ys(&self) -> &[T] {
        &self.ys
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn x_min(&self) -> T {
        self.xs[0]
    }

    pub fn x_max(&self) -> T {
        self.xs[self.xs.len() - 1]
    }

    pub fn y_min(&self) -> T {
        self.ys[0]
    }

    pub fn y_max(&self) -> T {
        self.ys[self.ys.len() - 1]
    }

    fn cell(&self, x: T) -> usize {
        let i = self.xs.partition_point(|&v| v <= x);
        i.saturating_sub(1).min(self.xs.len() - 2)
    }

    /// Interpolated value; arguments outside the table are clamped to its ends.
    pub fn evaluate(&self, x: T) -> T {
        if !(x > self.x_min()) {
            return self.y_min();
        }
        if x >= self.x_max() {
            return self.y_max();
        }
        let i = self.cell(x);
        self.eval_cell(i, x)
    }

    fn eval_cell(&self, i: usize, x: T) -> T {
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let two = T::c(2.0);
        let three = T::c(3.0);
        let h00 = two * t3 - three * t2 + T::one();
        let h10 = t3 - two * t2 + t;
        let h01 = three * t2 - two * t3;
        let h11 = t3 - t2;
        self.ys[i] * h00
            + h * self.lo_slope[i] * h10
            + self.ys[i + 1] * h01
            + h * self.hi_slope[i] * h11
    }

    /// Derivative of the interpolant (right derivative at interior nodes, zero outside).
    pub fn derivative(&self, x: T) -> T {
        if x < self.x_min() || x > self.x_max() {
            return T::zero();
        }
        let i = self.cell(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let t2 = t * t;
        let six = T::c(6.0);
        let d00 = six * t2 - six * t;
        let d10 = T::c(3.0) * t2 - T::c(4.0) * t + T::one();
        let d01 = six * t - six * t2;
        let d11 = T::c(3.0) * t2 - T::c(2.0) * t;
        (self.ys[i] * d00 + self.ys[i + 1] * d01) / h
            + self.lo_slope[i] * d10
            + self.hi_slope[i] * d11
    }

    /// Smallest `x` with `evaluate(x) = y`, located by bisection on the nodes and
    /// refined by bisection inside the cell.
    pub fn invert(&self, y: T) -> Result<T> {
        let (lo, hi) = (self.y_min(), self.y_max());
        let slack = T::tol(1e-12) * (T::one() + lo.abs().max(hi.abs()));
        if !(y >= lo - slack && y <= hi + slack) {
            return Err(Error::Range {
                value: y.as_f64(),
                lo: lo.as_f64(),
                hi: hi.as_f64(),
            });
        }
        if y <= lo {
            return Ok(self.x_min());
        }
        if y >= hi {
            let first = self.ys.partition_point(|&v| v < hi);
            return Ok(self.xs[first]);
        }
        // First node with ys >= y; the crossing lies in the cell ending there.
        let j = self.ys.partition_point(|&v| v < y);
        if self.ys[j] == y {
            return Ok(self.xs[j]);
        }
        let i = j - 1;
        let (mut a, mut b) = (self.xs[i], self.xs[j]);
        for _ in 0..200 {
            let m = (a + b) * T::c(0.5);
            if !(m > a && m < b) {
                break;
            }
            if self.eval_cell(i, m) < y {
                a = m;
            } else {
                b = m;
            }
        }
        let (fa, fb) = (self.eval_cell(i, a), self.eval_cell(i, b));
        Ok(if (fa - y).abs() <= (fb - y).abs() {
            a
        } else {
            b
        })
    }

    /// Same nodes with every value and slope multiplied by `factor >= 0`.
    pub fn scaled(&self, factor: T) -> Self {
        Self {
            xs: self.xs.clone(),
            ys: self.ys.iter().map(|&y| y * factor).collect(),
            lo_slope: self.lo_slope.iter().map(|&s| s * factor).collect(),
            hi_slope: self.hi_slope.iter().map(|&s| s * factor).collect(),
        }
    }
}

fn end_slope<T: Real>(h0: T, h1: T, d0: T, d1: T) -> T {
    // three-point one-sided estimate, clipped to keep the end cell monotone
    let m = ((T::c(2.0) * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m.signum() != d0.signum() || d0 == T::zero() {
        T::zero()
    } else if d0.signum() != d1.signum() && m.abs() > (T::c(3.0) * d0).abs() {
        T::c(3.0) * d0
    } else {
        m
    }
}

fn check_data<T: Real>(xs: &[T], ys: &[T]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidTable(format!(
            "{} abscissae but {} values",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::InvalidTable("need at least two nodes".into()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::InvalidTable("non-finite entry".into()));
    }
    if let Some(i) = (1..xs.len()).find(|&i| !(xs[i] > xs[i - 1])) {
        return Err(Error::InvalidTable(format!(
            "abscissae not strictly increasing at index {i}"
        )));
    }
    let scale = T::one() + ys.iter().fold(T::zero(), |m, &y| m.max(y.abs()));
    let slack = T::tol(1e-12) * scale;
    if let Some(i) = (1..ys.len()).find(|&i| ys[i] < ys[i - 1] - slack) {
        return Err(Error::InvalidTable(format!("values decrease at index {i}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(n: usize) -> Vec<f64> {
        (0..=n).map(|i| i as f64 / n as f64).collect()
    }

    #[test]
    fn identity_inverse() {
        let xs = grid(10);
        let t = MonotoneTable::from_points(xs.clone(), xs).unwrap();
        assert!((t.invert(0.37).unwrap() - 0.37).abs() < 1e-12);
    }

    #[test]
    fn square_inverse() {
        let xs = grid(200);
        let ys: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let s: Vec<f64> = xs.iter().map(|x| 2.0 * x).collect();
        let t = MonotoneTable::with_slopes(xs, ys, s).unwrap();
        assert!((t.invert(0.25).unwrap() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn nodes_reproduced_exactly() {
        let xs = grid(17);
        let ys: Vec<f64> = xs.iter().map(|x| x.powi(3) + 0.1 * x).collect();
        let t = MonotoneTable::from_points(xs.clone(), ys.clone()).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert_eq!(t.evaluate(*x), *y);
        }
    }

    #[test]
    fn hermite_cubic_is_exact() {
        let xs = grid(8);
        let ys: Vec<f64> = xs.iter().map(|x| x.powi(3)).collect();
        let s: Vec<f64> = xs.iter().map(|x| 3.0 * x * x).collect();
        let t = MonotoneTable::with_slopes(xs, ys, s).unwrap();
        for i in 0..100 {
            let x = i as f64 / 99.0;
            assert!((t.evaluate(x) - x.powi(3)).abs() < 1e-14);
            assert!((t.derivative(x) - 3.0 * x * x).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_steps_do_not_overshoot() {
        let xs = vec![0.0, 0.1, 0.2, 0.3, 0.4];
        let ys = vec![0.0, 0.0, 1.0, 1.0, 1.0];
        let t = MonotoneTable::from_points(xs, ys).unwrap();
        let mut prev = -1.0;
        for i in 0..=400 {
            let v = t.evaluate(i as f64 * 0.001);
            assert!((0.0..=1.0).contains(&v));
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(MonotoneTable::from_points(vec![0.0, 0.0], vec![0.0, 1.0]).is_err());
        assert!(MonotoneTable::from_points(vec![0.0, 1.0], vec![1.0, 0.0]).is_err());
        assert!(MonotoneTable::from_points(vec![0.0], vec![0.0]).is_err());
    }

    #[test]
    fn invert_out_of_range() {
        let t = MonotoneTable::from_points(grid(4), grid(4)).unwrap();
        assert!(matches!(t.invert(1.5), Err(Error::Range { .. })));
        assert!(matches!(t.invert(-0.1), Err(Error::Range { .. })));
    }

    #[test]
    fn invert_flat_top_returns_first_node() {
        let t = MonotoneTable::from_points(vec![0.0, 0.5, 1.0], vec![0.0, 1.0, 1.0]).unwrap();
        assert_eq!(t.invert(1.0).unwrap(), 0.5);
    }

    proptest! {
        #[test]
        fn invert_round_trip(seed_pts in proptest::collection::vec(0.001f64..1.0, 5..40), xq in 0.0f64..1.0) {
            let n = seed_pts.len();
            let xs = grid(n);
            let mut acc = 0.0;
            let mut ys = vec![0.0];
            for d in &seed_pts { acc += d; ys.push(acc); }
            let t = MonotoneTable::from_points(xs, ys).unwrap();
            let y = t.evaluate(xq);
            let back = t.invert(y).unwrap();
            prop_assert!((back - xq).abs() < 1e-9, "x={} back={}", xq, back);
            prop_assert!((t.evaluate(back) - y).abs() <= 1e-10);
        }

        #[test]
        fn interpolant_is_monotone(seed_pts in proptest::collection::vec(0.0f64..1.0, 3..30)) {
            let n = seed_pts.len();
            let xs = grid(n);
            let mut acc = 0.0;
            let mut ys = vec![0.0];
            for d in &seed_pts { acc += d; ys.push(acc); }
            let t = MonotoneTable::from_points(xs, ys).unwrap();
            let mut prev = f64::NEG_INFINITY;
            for i in 0..=1000 {
                let v = t.evaluate(i as f64 / 1000.0);
                prop_assert!(v >= prev - 1e-15);
                prev = v;
            }
        }
    }
}
