//! Velocity law for fronts tilted by a rational angle tan(theta) = p/q.
//!
//! Tilting the front changes which lattice points the interface sweeps
//! through. The relevant points form a strip pattern indexed by column
//! residue s in [0, q-1]; ordered by their normal distance d = F / sqrt(p^2+q^2)
//! with F = s p - j q running over the positive integers, they generalize the
//! axis-aligned cell ladder (where d_i = i). The same sign criterion as in
//! [`crate::velocity_law`], evaluated on this d-ladder, yields the index n0
//! and the normal velocity d_{n0} / mu — which now depends on the angle:
//! the lattice scheme moves tilted fronts at genuinely different speeds.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::io::Write;

use crate::config::gcd;
use crate::quad::RunningSum;
use crate::special_fns::{gauss_integral, gauss_tail};
use crate::{Error, Result};

/// One strip point: column residue `s`, row `j`, normal distance `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripEntry {
    pub s: u64,
    pub j: i64,
    pub d: f64,
}

/// The first `entries.len()` strip points below the tilted line j = (p/q) s,
/// sorted by normal distance. Distances are strictly increasing; for coprime
/// (p, q) the level F = s p - j q takes each positive integer exactly once,
/// so d_i = i / sqrt(p^2 + q^2).
#[derive(Debug, Clone, PartialEq)]
pub struct StripOrdering {
    pub p: u64,
    pub q: u64,
    pub entries: Vec<StripEntry>,
}

impl StripOrdering {
    /// Degenerate axis ordering (theta = 0): the plain cell ladder d_i = i.
    pub fn axis(count: usize) -> Self {
        strip_ordering(0, 1, count).expect("axis ordering parameters are always valid")
    }

    pub fn norm(&self) -> f64 {
        ((self.p * self.p + self.q * self.q) as f64).sqrt()
    }
}

/// Anisotropic velocity result: the strip index n0, the normal displacement
/// d_{n0} in units of h, and the physical normal velocity d_{n0} / mu.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnisoVelocityReport {
    pub p: u64,
    pub q: u64,
    pub mu: f64,
    pub kappa: f64,
    pub n0: u64,
    /// d_{n0}; zero when pinned (n0 = 0).
    pub normal_displacement: f64,
    pub velocity: f64,
}

/// One row of an angle sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleRow {
    /// The requested angle in degrees (the rational actually used is (p, q)).
    pub theta_degrees: f64,
    pub p: u64,
    pub q: u64,
    pub n0: u64,
    pub d_n0: f64,
    pub velocity: f64,
}

fn validate_direction(p: u64, q: u64) -> Result<()> {
    if q == 0 || p > q {
        return Err(Error::Domain(format!(
            "strip direction requires 0 <= p <= q with q >= 1, got p = {p}, q = {q}"
        )));
    }
    if gcd(p, q) != 1 {
        return Err(Error::Domain(format!(
            "p = {p} and q = {q} must be coprime (level values would collide)"
        )));
    }
    Ok(())
}

/// First `count` strip points in order of increasing normal distance.
///
/// Generation is a q-way frontier merge: within one column s the level
/// F = s p - j q walks the arithmetic progression F_min(s), F_min(s) + q, ...
/// as j decreases, so a min-heap seeded with every column's nearest point
/// always pops the globally nearest unexamined point — no unexamined point
/// can beat the frontier.
pub fn strip_ordering(p: u64, q: u64, count: usize) -> Result<StripOrdering> {
    validate_direction(p, q)?;
    if count == 0 {
        return Err(Error::Domain("ordering needs count >= 1".into()));
    }
    let norm = ((p * p + q * q) as f64).sqrt();
    // Seed: per column s, the largest j with j q < s p, i.e. the smallest
    // positive level in that column.
    let mut heap: BinaryHeap<Reverse<(u64, u64, i64)>> = BinaryHeap::new();
    for s in 0..q {
        let sp = s * p;
        // Largest j with j*q < sp: for sp = 0 that is -1, else floor((sp-1)/q).
        let j = if sp == 0 {
            -1i64
        } else {
            ((sp - 1) / q) as i64
        };
        let f = sp as i64 - j * q as i64;
        debug_assert!(f >= 1);
        heap.push(Reverse((f as u64, s, j)));
    }
    let mut entries = Vec::with_capacity(count);
    let mut last_f = 0u64;
    while entries.len() < count {
        let Reverse((f, s, j)) = heap.pop().expect("frontier never empties");
        debug_assert!(f > last_f, "level values must be distinct for coprime p, q");
        last_f = f;
        entries.push(StripEntry {
            s,
            j,
            d: f as f64 / norm,
        });
        heap.push(Reverse((f + q, s, j - 1)));
    }
    Ok(StripOrdering { p, q, entries })
}

/// Distance ladder that serves `d_i` (1-based) and regenerates a longer
/// ordering on demand.
struct Ladder {
    p: u64,
    q: u64,
    ds: Vec<f64>,
}

impl Ladder {
    fn from_ordering(ordering: &StripOrdering) -> Self {
        Ladder {
            p: ordering.p,
            q: ordering.q,
            ds: ordering.entries.iter().map(|e| e.d).collect(),
        }
    }

    fn d(&mut self, i: u64) -> Result<f64> {
        let idx = i as usize - 1;
        if idx >= self.ds.len() {
            let want = (idx + 1).max(self.ds.len() * 2).max(64);
            let fresh = strip_ordering(self.p, self.q, want)?;
            self.ds = fresh.entries.iter().map(|e| e.d).collect();
        }
        Ok(self.ds[idx])
    }
}

/// The tilted sign criterion on the ordering's distance ladder:
///
/// ```text
/// Phi(n) = sum_{i<n} I(a_i) + I(a_n)/2 - T(a_n)/2 - sum_{i>n} T(a_i)
/// ```
///
/// with a_i = sqrt(2 d_i / m). n = 0 uses d_0 = 0 (the pinned-side residual).
/// The ordering is extended automatically until the tail beyond its last
/// entry is below 1e-14.
pub fn aniso_phi(n: u64, mu_kappa: f64, ordering: &StripOrdering) -> Result<f64> {
    if !mu_kappa.is_finite() || mu_kappa <= 0.0 {
        return Err(Error::Domain(format!(
            "aniso_phi requires mu_kappa > 0, got {mu_kappa}"
        )));
    }
    let m = mu_kappa;
    let mut ladder = Ladder::from_ordering(ordering);
    let arg = |d: f64| (2.0 * d / m).sqrt();
    let mut acc = RunningSum::new();
    for i in 1..n {
        acc.add(gauss_integral(arg(ladder.d(i)?))?);
    }
    let a_n = if n == 0 { 0.0 } else { arg(ladder.d(n)?) };
    acc.add(0.5 * gauss_integral(a_n)?);
    acc.add(-0.5 * gauss_tail(a_n)?);
    // Tail terms shrink by at least e^(-delta/(2m)) per entry, where delta
    // is the ladder spacing 1/sqrt(p^2+q^2); same geometric closure as the
    // axis case.
    let delta = 1.0 / ((ordering.p * ordering.p + ordering.q * ordering.q) as f64).sqrt();
    let ratio = (-delta / (2.0 * m)).exp();
    let closure = ratio / (1.0 - ratio);
    let mut i = n + 1;
    loop {
        let term = gauss_tail(arg(ladder.d(i)?))?;
        acc.add(-term);
        if term * closure < 1e-14 {
            break;
        }
        i += 1;
    }
    Ok(acc.value())
}

/// Largest index n with aniso_phi(n) <= 0 (0 when even the nearest strip
/// point survives: pinned). p > q is accepted and mirrored to (q, p) — the
/// lattice reflection swapping the axes leaves the distance ladder unchanged.
pub fn aniso_velocity(p: u64, q: u64, mu: f64, kappa: f64) -> Result<AnisoVelocityReport> {
    if !mu.is_finite() || mu <= 0.0 {
        return Err(Error::Domain(format!(
            "aniso_velocity requires mu > 0, got {mu}"
        )));
    }
    if !kappa.is_finite() || kappa <= 0.0 {
        return Err(Error::Domain(format!(
            "aniso_velocity requires kappa > 0, got {kappa}"
        )));
    }
    let (pp, qq) = if p > q { (q, p) } else { (p, q) };
    let m = mu * kappa;
    let mut ordering = strip_ordering(pp, qq, 256)?;
    // phi(0) < 0 always; scan up for the first sign change.
    let mut lo = 0u64;
    let mut hi = 1u64;
    while aniso_phi(hi, m, &ordering)? <= 0.0 {
        lo = hi;
        hi *= 2;
        if hi > 1 << 40 {
            return Err(Error::Bracketing(format!(
                "aniso_phi stayed non-positive up to n = {lo} at mu_kappa = {m}"
            )));
        }
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if aniso_phi(mid, m, &ordering)? <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let n0 = lo;
    let normal_displacement = if n0 == 0 {
        0.0
    } else {
        if n0 as usize > ordering.entries.len() {
            ordering = strip_ordering(pp, qq, n0 as usize)?;
        }
        ordering.entries[n0 as usize - 1].d
    };
    Ok(AnisoVelocityReport {
        p,
        q,
        mu,
        kappa,
        n0,
        normal_displacement,
        velocity: normal_displacement / mu,
    })
}

/// Best rational slope p/q (coprime, q <= q_max, 0 <= p <= q) approximating
/// tan(theta_degrees), for 0 <= theta_degrees <= 45.
pub fn best_rational_tangent(theta_degrees: f64, q_max: u64) -> Result<(u64, u64)> {
    if !(0.0..=45.0).contains(&theta_degrees) {
        return Err(Error::Domain(format!(
            "angle {theta_degrees} outside [0, 45] degrees"
        )));
    }
    if q_max == 0 {
        return Err(Error::Domain("q_max must be >= 1".into()));
    }
    let target = theta_degrees.to_radians().tan();
    let mut best = (0u64, 1u64);
    let mut best_err = f64::INFINITY;
    for q in 1..=q_max {
        let p = ((target * q as f64).round() as i64).clamp(0, q as i64) as u64;
        let (pr, qr) = {
            let g = gcd(p.max(1), q); // gcd(0, q) = q would divide q away
            if p == 0 {
                (0, 1)
            } else {
                (p / g, q / g)
            }
        };
        let err = (pr as f64 / qr as f64 - target).abs();
        if err < best_err {
            best_err = err;
            best = (pr, qr);
        }
    }
    Ok(best)
}

/// Velocity as a function of angle: each requested degree is mapped to its
/// best rational slope with q <= q_max, and the report records the rational
/// actually used.
pub fn angle_sweep(
    mu: f64,
    kappa: f64,
    degrees: &[f64],
    q_max: u64,
) -> Result<Vec<AngleRow>> {
    let mut rows = Vec::with_capacity(degrees.len());
    for &deg in degrees {
        let (p, q) = best_rational_tangent(deg, q_max)?;
        let report = aniso_velocity(p, q, mu, kappa)?;
        rows.push(AngleRow {
            theta_degrees: deg,
            p,
            q,
            n0: report.n0,
            d_n0: report.normal_displacement,
            velocity: report.velocity,
        });
    }
    Ok(rows)
}

/// CSV: `theta_degrees,p,q,n0,d_n0,velocity`.
pub fn write_angle_sweep_csv<W: Write>(rows: &[AngleRow], mut out: W) -> Result<()> {
    writeln!(out, "theta_degrees,p,q,n0,d_n0,velocity")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            crate::config::format_float(r.theta_degrees),
            r.p,
            r.q,
            r.n0,
            crate::config::format_float(r.d_n0),
            crate::config::format_float(r.velocity)
        )?;
    }
    Ok(())
}

/// Gnuplot script plotting velocity against angle, one series per labelled
/// CSV (as produced by [`write_angle_sweep_csv`]).
pub fn write_angle_plot_script<W: Write>(series: &[(String, String)], mut out: W) -> Result<()> {
    writeln!(out, "set datafile separator comma")?;
    writeln!(out, "set xlabel 'theta (degrees)'")?;
    writeln!(out, "set ylabel 'normal velocity'")?;
    writeln!(out, "set key top right")?;
    writeln!(out, "set grid")?;
    write!(out, "plot ")?;
    for (i, (label, path)) in series.iter().enumerate() {
        if i > 0 {
            write!(out, ", \\\n     ")?;
        }
        write!(
            out,
            "'{path}' skip 1 using 1:6 with linespoints title '{label}'"
        )?;
    }
    writeln!(out)?;
    Ok(())
}
