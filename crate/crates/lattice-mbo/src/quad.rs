//! Adaptive Simpson quadrature, used by the integral cross-checks.

/// Integrate `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Classic recursive Simpson with Richardson acceleration. The interval is
/// first split into `panels` equal pieces so that narrow peaks or mild
/// oscillation inside a long interval cannot be missed by the first few
/// samples.
pub fn adaptive_simpson<F>(f: &F, a: f64, b: f64, tol: f64, panels: usize) -> f64
where
    F: Fn(f64) -> f64,
{
    let panels = panels.max(1);
    let step = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let x0 = a + k as f64 * step;
        let x1 = x0 + step;
        let fx0 = f(x0);
        let fx1 = f(x1);
        let m = 0.5 * (x0 + x1);
        let fm = f(m);
        let whole = simpson(f, x0, x1, fx0, fm, fx1);
        total += adapt(f, x0, x1, fx0, fm, fx1, whole, tol / panels as f64, 60);
    }
    total
}

fn simpson<F: Fn(f64) -> f64>(_f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(f, a, m, fa, flm, fm);
    let right = simpson(f, m, b, fm, frm, fb);
    let err = left + right - whole;
    if depth == 0 || err.abs() <= 15.0 * tol {
        left + right + err / 15.0
    } else {
        adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Neumaier running sum: incremental form of [`compensated_sum`] for loops
/// that need to inspect partial results or stop early.
#[derive(Clone, Copy, Default)]
pub(crate) struct RunningSum {
    s: f64,
    c: f64,
}

impl RunningSum {
    pub(crate) fn new() -> Self {
        RunningSum::default()
    }

    #[inline]
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.s + v;
        if self.s.abs() >= v.abs() {
            self.c += (self.s - t) + v;
        } else {
            self.c += (v - t) + self.s;
        }
        self.s = t;
    }

    #[inline]
    pub(crate) fn value(&self) -> f64 {
        self.s + self.c
    }
}

/// Neumaier compensated summation over an iterator. Used wherever a long sum
/// must stay accurate to near machine precision (kernel normalization, tail
/// accumulations).
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = RunningSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomial_exactly() {
        // Simpson is exact on cubics; the adaptive wrapper must not spoil it.
        let f = |x: f64| 3.0 * x * x - 2.0 * x + 1.0;
        let got = adaptive_simpson(&f, 0.0, 2.0, 1e-12, 4);
        assert!((got - 6.0).abs() < 1e-12);
    }

    #[test]
    fn integrates_narrow_gaussian() {
        // Peak of width 0.01 inside [0, pi]; the panel presplit must catch it.
        let f = |x: f64| (-(x * x) * 10_000.0).exp();
        let got = adaptive_simpson(&f, 0.0, std::f64::consts::PI, 1e-12, 64);
        let exact = 0.5 * std::f64::consts::PI.sqrt() / 100.0;
        assert!((got - exact).abs() < 1e-11, "got {got}, want {exact}");
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let vals: Vec<f64> = (0..100_000).map(|k| 0.1 + 1e-18 * k as f64).collect();
        let got = compensated_sum(vals.iter().copied());
        let expect = 0.1 * 100_000.0 + 1e-18 * (99_999.0 * 100_000.0 / 2.0);
        assert!((got - expect).abs() / expect < 1e-15);
    }
}
