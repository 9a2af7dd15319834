//! The lattice Green's function for semi-discrete heat flow and the scaling
//! parameters of the scheme.
//!
//! Solving du_n/dt = (u_(n+1) - 2 u_n + u_(n-1)) / h^2 on the integer line for
//! time tau propagates each unit of mass with weights
//!
//!   G_n(alpha) = e^(-alpha) I_|n|(alpha),   alpha = 2 tau / h^2,
//!
//! where I_n is the modified Bessel function. The weights are positive, sum
//! to one, and are symmetric and non-increasing in |n|; two dimensions factor
//! into a product of two one-dimensional convolutions. [`KernelTable`] holds
//! the weights truncated at a certified tail bound so the evolution can use a
//! finite stencil with a known error.

use crate::quad::{adaptive_simpson, compensated_sum};
use crate::special_fns::{scaled_bessel_i, scaled_bessel_table_upto, SERIES_ALPHA_MAX};
use crate::{Error, Result};

/// Truncated kernel: `coeff(n)` is G_n(alpha) for 0 <= n <= radius, and the
/// discarded mass `2 * sum_(n > radius) G_n` is at most `tail_bound`.
#[derive(Debug, Clone)]
pub struct KernelTable {
    alpha: f64,
    coeffs: Vec<f64>,
    tail_bound: f64,
}

impl KernelTable {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Largest retained order.
    pub fn radius(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// G_|n|(alpha); orders beyond the radius are treated as zero.
    pub fn coeff(&self, n: i64) -> f64 {
        self.coeffs.get(n.unsigned_abs() as usize).copied().unwrap_or(0.0)
    }

    /// Retained weights, index = order.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Certified bound on the total discarded mass (both signs of n).
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// Upper estimate of `sum_(k >= from) G_k(alpha)` (one-sided sum).
    ///
    /// Stored coefficients are summed exactly; whatever lies beyond the radius
    /// is covered by the table's tail bound.
    pub fn tail_sum(&self, from: usize) -> f64 {
        if from > self.radius() {
            return self.tail_bound;
        }
        let stored = compensated_sum(self.coeffs[from..].iter().copied());
        stored + self.tail_bound
    }

    /// Debug dump: `n,coeff` rows with full-precision decimals.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "n,coeff")?;
        for (n, c) in self.coeffs.iter().enumerate() {
            writeln!(w, "{},{}", n, crate::config::format_float(*c))?;
        }
        Ok(())
    }
}

/// Hard ceiling on the table radius: generous multiple of the diffusive band.
fn radius_cap(alpha: f64) -> usize {
    let base = (3.0 * alpha).ceil().max(64.0) as usize;
    base + 64
}

/// Build the truncated kernel for `alpha = 2 tau / h^2` with total discarded
/// mass at most `eps_tail`.
///
/// The radius is the smallest one whose certified tail fits under `eps_tail`;
/// if even the cap cannot reach it, the call fails with the best achieved
/// bound so the caller can see how far off it was.
pub fn kernel_table(alpha: f64, eps_tail: f64) -> Result<KernelTable> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::Domain(format!(
            "kernel_table requires finite alpha >= 0, got {alpha}"
        )));
    }
    if !(eps_tail > 0.0 && eps_tail < 1.0) {
        return Err(Error::Domain(format!(
            "kernel_table requires 0 < eps_tail < 1, got {eps_tail}"
        )));
    }
    if alpha == 0.0 {
        return Ok(KernelTable {
            alpha,
            coeffs: vec![1.0],
            tail_bound: 0.0,
        });
    }

    let cap = radius_cap(alpha);
    let all = if alpha <= SERIES_ALPHA_MAX {
        (0..=cap.min(series_band(alpha)))
            .map(|n| scaled_bessel_i(n as u32, alpha))
            .collect::<Result<Vec<_>>>()?
    } else {
        scaled_bessel_table_upto(alpha, cap)
    };

    // Sum the stored orders from the far end once; tail(R) is then a suffix
    // sum plus a geometric closure for what lies beyond the computed range.
    // The ratio G_(k+1)/G_k decreases in k (the order sequence is log-concave),
    // so the last computed ratio bounds all later ones.
    let len = all.len();
    let mut suffix = vec![0.0f64; len + 1];
    for k in (0..len).rev() {
        suffix[k] = suffix[k + 1] + all[k];
    }
    let beyond = {
        let g_last = all[len - 1];
        let g_prev = all[len - 2];
        if g_last > 0.0 && g_last < g_prev {
            let r = g_last / g_prev;
            g_last * r / (1.0 - r)
        } else {
            0.0
        }
    };

    let tail_at = |radius: usize| -> f64 { 2.0 * (suffix[radius + 1] + beyond) };

    let mut chosen = None;
    for radius in 0..len.min(cap + 1) {
        let t = tail_at(radius);
        if t <= eps_tail {
            chosen = Some((radius, t));
            break;
        }
    }
    match chosen {
        Some((radius, tail_bound)) => {
            let coeffs = all[..=radius].to_vec();
            debug_assert!(coeffs.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
            Ok(KernelTable {
                alpha,
                coeffs,
                tail_bound,
            })
        }
        None => Err(Error::Truncation {
            achieved: tail_at(len - 1),
            requested: eps_tail,
            cap,
        }),
    }
}

/// Orders worth computing by series at small alpha: the values decay faster
/// than any Gaussian band, but keep a wide margin before giving up.
fn series_band(alpha: f64) -> usize {
    ((2.0 * alpha * 710.0).sqrt().ceil() as usize).max(80) + 16
}

/// Radius of the `eps_tail` kernel table; the padding unit used by the FFT
/// evolution path.
pub fn truncation_radius(alpha: f64, eps_tail: f64) -> Result<usize> {
    Ok(kernel_table(alpha, eps_tail)?.radius())
}

/// Direct quadrature of the Green's function integral
/// (1/2pi) * integral over [-pi, pi] of cos(n xi) e^(alpha (cos xi - 1)) d xi.
///
/// Independent of the Bessel evaluation path; meant as a cross-check, not for
/// production use (cost grows with alpha and n). Absolute accuracy 1e-10 for
/// alpha <= 1e4.
pub fn green_integral_oracle(n: i64, alpha: f64) -> Result<f64> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::Domain(format!(
            "green_integral_oracle requires finite alpha >= 0, got {alpha}"
        )));
    }
    let n = n.unsigned_abs() as f64;
    let f = |xi: f64| (n * xi).cos() * (alpha * (xi.cos() - 1.0)).exp();
    // The integrand is even; panels resolve both the e^(alpha(cos xi - 1))
    // peak at 0 (width ~ 1/sqrt(alpha)) and the cos(n xi) oscillation.
    let panels = (alpha.sqrt().ceil() as usize).max(n.ceil() as usize).clamp(64, 4096);
    let val = adaptive_simpson(&f, 0.0, std::f64::consts::PI, 1e-12, panels);
    Ok(val / std::f64::consts::PI)
}

/// Leading-order Gaussian approximation of the kernel at standing-wave
/// coordinates: G_([sqrt(tau) x / h])(2 tau / h^2) is approximately
/// (h / sqrt(4 pi tau)) e^(-x^2/4) for x at least h/sqrt(tau).
pub fn asymptotic_green(x: f64, h: f64, tau: f64) -> Result<f64> {
    if !(h > 0.0) || !(tau > 0.0) {
        return Err(Error::Domain(format!(
            "asymptotic_green requires h > 0 and tau > 0, got h={h}, tau={tau}"
        )));
    }
    let floor = h / tau.sqrt();
    if x < floor {
        return Err(Error::Domain(format!(
            "asymptotic_green requires x >= h/sqrt(tau) = {floor:.6e}, got {x}"
        )));
    }
    // Only meaningful deep in the diffusive regime tau >> h^2; the caller is
    // responsible for keeping tau/h^2 large (say >= 10).
    Ok(h / (4.0 * std::f64::consts::PI * tau).sqrt() * (-x * x / 4.0).exp())
}

/// Space-time scaling of one scheme run: grid spacing `h`, time step `tau`,
/// and the derived ratios mu = tau/h and gamma (exponent in h = C tau^gamma)
/// that decide which of the three regimes the run sits in.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeParams {
    h: f64,
    tau: f64,
    mu: f64,
    gamma: f64,
    scale_c: f64,
    steps: usize,
}

/// Velocity regime implied by the gamma exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// gamma > 1: tau dominates h, fronts move by mean curvature.
    Subcritical,
    /// gamma = 1: tau = mu h, quantized velocities, pinning, anisotropy.
    Critical,
    /// gamma < 1: h dominates tau, nothing moves.
    Supercritical,
}

impl SchemeParams {
    /// Explicit h and tau. Gamma is derived with C = 1, i.e. gamma = ln h / ln tau.
    pub fn from_tau(h: f64, tau: f64, steps: usize) -> Result<Self> {
        validate_h_tau(h, tau)?;
        let gamma = h.ln() / tau.ln();
        Ok(SchemeParams {
            h,
            tau,
            mu: tau / h,
            gamma,
            scale_c: 1.0,
            steps,
        })
    }

    /// Critical-regime constructor: tau = mu * h, i.e. gamma = 1 with C = 1/mu.
    pub fn from_mu(h: f64, mu: f64, steps: usize) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::Domain(format!("mu must be positive, got {mu}")));
        }
        let tau = mu * h;
        validate_h_tau(h, tau)?;
        Ok(SchemeParams {
            h,
            tau,
            mu,
            gamma: 1.0,
            scale_c: 1.0 / mu,
            steps,
        })
    }

    /// Scaling-law constructor: h = scale_c * tau^gamma, solved for tau.
    pub fn from_scaling(gamma: f64, scale_c: f64, h: f64, steps: usize) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::Domain(format!("gamma must be positive, got {gamma}")));
        }
        if !(scale_c > 0.0) || !scale_c.is_finite() {
            return Err(Error::Domain(format!(
                "scale constant must be positive, got {scale_c}"
            )));
        }
        let tau = (h / scale_c).powf(1.0 / gamma);
        validate_h_tau(h, tau)?;
        Ok(SchemeParams {
            h,
            tau,
            mu: tau / h,
            gamma,
            scale_c,
            steps,
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// tau / h, the critical-regime mobility parameter.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn scale_c(&self) -> f64 {
        self.scale_c
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Diffusion argument of the kernel, 2 tau / h^2.
    pub fn alpha(&self) -> f64 {
        2.0 * self.tau / (self.h * self.h)
    }

    pub fn regime(&self) -> Regime {
        let tol = 1e-9;
        if self.gamma > 1.0 + tol {
            Regime::Subcritical
        } else if self.gamma < 1.0 - tol {
            Regime::Supercritical
        } else {
            Regime::Critical
        }
    }
}

fn validate_h_tau(h: f64, tau: f64) -> Result<()> {
    if !(h > 0.0) || !h.is_finite() || h >= 1.0 {
        return Err(Error::Domain(format!(
            "grid spacing must satisfy 0 < h < 1, got {h}"
        )));
    }
    if !(tau > 0.0) || !tau.is_finite() || tau >= 1.0 {
        return Err(Error::Domain(format!(
            "time step must satisfy 0 < tau < 1, got {tau}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_alpha_is_identity_kernel() {
        let t = kernel_table(0.0, 1e-12).unwrap();
        assert_eq!(t.radius(), 0);
        assert_eq!(t.coeff(0), 1.0);
        assert_eq!(t.tail_bound(), 0.0);
    }

    #[test]
    fn table_center_value() {
        let t = kernel_table(2.0, 1e-14).unwrap();
        assert!((t.coeff(0) - 0.308508).abs() < 1e-6);
        assert_eq!(t.coeff(1), t.coeff(-1));
    }

    #[test]
    fn normalization_and_half_mass() {
        for &alpha in &[0.5, 2.0, 10.0, 100.0, 1000.0] {
            let t = kernel_table(alpha, 1e-13).unwrap();
            let sum_pos = compensated_sum(t.coeffs()[1..].iter().copied());
            let norm = t.coeff(0) + 2.0 * sum_pos;
            assert!(
                (norm - 1.0).abs() <= 1e-12,
                "alpha={alpha}: norm residual {}",
                (norm - 1.0).abs()
            );
            let half = 0.5 * t.coeff(0) + sum_pos;
            assert!(
                (half - 0.5).abs() <= 1e-12,
                "alpha={alpha}: half-mass residual {}",
                (half - 0.5).abs()
            );
        }
    }

    #[test]
    fn coefficients_positive_and_non_increasing() {
        for &alpha in &[0.3, 4.0, 77.0, 900.0] {
            let t = kernel_table(alpha, 1e-12).unwrap();
            let c = t.coeffs();
            assert!(c.iter().all(|&v| v >= 0.0));
            for w in c.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn table_matches_integral_oracle() {
        for &alpha in &[0.5, 2.0, 10.0, 100.0] {
            let t = kernel_table(alpha, 1e-13).unwrap();
            for n in 0..=20i64 {
                let want = green_integral_oracle(n, alpha).unwrap();
                let got = t.coeff(n);
                assert!(
                    (got - want).abs() < 1e-10,
                    "alpha={alpha} n={n}: table {got}, oracle {want}"
                );
            }
        }
    }

    #[test]
    fn oracle_handles_negative_orders() {
        let a = green_integral_oracle(-3, 5.0).unwrap();
        let b = green_integral_oracle(3, 5.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tail_sum_from_zero_is_half_plus_center() {
        let t = kernel_table(2.0, 1e-13).unwrap();
        let got = t.tail_sum(0);
        let want = 0.5 * (1.0 + t.coeff(0));
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn tail_sum_beyond_radius_is_tail_bound() {
        let t = kernel_table(2.0, 1e-12).unwrap();
        assert_eq!(t.tail_sum(t.radius() + 5), t.tail_bound());
    }

    #[test]
    fn tail_bound_honored_by_direct_summation() {
        // Compare the certified tail with a much deeper sweep's exact suffix.
        let t = kernel_table(40.0, 1e-10).unwrap();
        let deep = scaled_bessel_table_upto(40.0, 600);
        let exact: f64 =
            2.0 * compensated_sum(deep.iter().copied().skip(t.radius() + 1));
        assert!(exact <= t.tail_bound() * (1.0 + 1e-9));
        assert!(t.tail_bound() <= 1e-10);
    }

    #[test]
    fn critical_scaling_tail_decay() {
        // With tau = mu h, the mass beyond 3 mu / h cells is bounded by
        // (2 pi 3 mu / h)^(-1/2) (e tau / (3 mu h))^(3 mu / h).
        for &(mu, h) in &[(0.5, 0.1), (1.0, 0.1), (0.5, 0.05), (1.0, 0.05)] {
            let alpha = 2.0 * mu / h;
            let t = kernel_table(alpha, 1e-13).unwrap();
            let from = (3.0 * mu / h).ceil() as usize;
            let bound = (1.0 / (2.0 * std::f64::consts::PI * 3.0 * mu / h).sqrt())
                * (std::f64::consts::E / 3.0).powf(3.0 * mu / h);
            assert!(
                t.tail_sum(from) <= bound,
                "mu={mu} h={h}: tail {} vs bound {bound}",
                t.tail_sum(from)
            );
        }
    }

    #[test]
    fn truncation_failure_reports_best_effort() {
        // At alpha = 20 the radius cap is 128, where the tail sits near
        // 1e-96; demanding 1e-100 must fail with that context attached.
        let err = kernel_table(20.0, 1e-100).unwrap_err();
        match err {
            Error::Truncation {
                achieved,
                requested,
                cap,
            } => {
                assert!(achieved > 1e-100);
                assert!(achieved < 1e-40);
                assert_eq!(requested, 1e-100);
                assert_eq!(cap, 128);
            }
            other => panic!("wrong error: {other}"),
        }
    }

    #[test]
    fn asymptotic_center_value() {
        // n = 0 corresponds to x at its floor; compare against the exact
        // kernel at large tau/h^2.
        let h = 0.01f64;
        let tau = 0.02f64; // tau/h^2 = 200
        let alpha = 2.0 * tau / (h * h);
        let x = h / tau.sqrt();
        let approx = asymptotic_green(x, h, tau).unwrap();
        let exact = scaled_bessel_i(0, alpha).unwrap();
        assert!((approx - exact).abs() / exact < 0.02);
    }

    #[test]
    fn asymptotic_error_at_least_halves_with_refinement() {
        // The relative gap is bounded by a constant times h / (x sqrt(tau)),
        // so halving that ratio must at least halve the gap. (The measured
        // decay is in fact quadratic — the even symmetry of the kernel kills
        // the odd correction — so this checks the bound, not a tight rate.)
        let x = 1.0;
        let gap = |ratio2: f64| {
            // ratio2 = tau / h^2; pick h so that sqrt(tau) x / h is integral.
            let h = 1.0 / ratio2.sqrt();
            let tau = 1.0f64;
            let n = (tau.sqrt() * x / h).round();
            let x_snap = n * h / tau.sqrt();
            let exact = scaled_bessel_i(n as u32, 2.0 * tau / (h * h)).unwrap();
            let approx = asymptotic_green(x_snap, h, tau).unwrap();
            (approx - exact).abs() / exact
        };
        let coarse = gap(200.0);
        let fine = gap(800.0);
        assert!(
            fine <= coarse / 1.9,
            "expected at least halving: coarse {coarse}, fine {fine}"
        );
        assert!(coarse < 1e-3);
    }

    #[test]
    fn asymptotic_domain_checks() {
        assert!(asymptotic_green(0.0005, 0.01, 0.02).is_err());
        assert!(asymptotic_green(1.0, 0.0, 0.02).is_err());
    }

    #[test]
    fn params_constructors_agree() {
        let a = SchemeParams::from_tau(0.01, 0.005, 10).unwrap();
        let b = SchemeParams::from_mu(0.01, 0.5, 10).unwrap();
        assert!((a.mu() - b.mu()).abs() < 1e-12);
        assert!((a.tau() - b.tau()).abs() < 1e-15);
        assert!((a.alpha() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn regime_classification() {
        let h = 1.0 / 256.0;
        let sub = SchemeParams::from_tau(h, h.powf(2.0 / 3.0), 5).unwrap();
        assert_eq!(sub.regime(), Regime::Subcritical);
        let crit = SchemeParams::from_mu(h, 0.8, 5).unwrap();
        assert_eq!(crit.regime(), Regime::Critical);
        let sup = SchemeParams::from_tau(h, h * h, 5).unwrap();
        assert_eq!(sup.regime(), Regime::Supercritical);
        assert!((sup.gamma() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn scaling_constructor_solves_for_tau() {
        let p = SchemeParams::from_scaling(2.0, 1.0, 1.0 / 256.0, 3).unwrap();
        assert!((p.tau() - (1.0f64 / 256.0).sqrt()).abs() < 1e-15);
        assert_eq!(p.regime(), Regime::Subcritical);
    }

    #[test]
    fn params_reject_bad_values() {
        assert!(SchemeParams::from_tau(0.0, 0.1, 1).is_err());
        assert!(SchemeParams::from_tau(0.1, -0.1, 1).is_err());
        assert!(SchemeParams::from_mu(0.1, 0.0, 1).is_err());
        assert!(SchemeParams::from_scaling(0.0, 1.0, 0.1, 1).is_err());
        assert!(SchemeParams::from_tau(1.5, 0.1, 1).is_err());
    }
}
