//! One scheme step — exact semi-discrete heat evolution for time tau, then a
//! pointwise threshold at 1/2 — plus the multi-step driver and a brute-force
//! ODE integrator used as ground truth for the fast paths.
//!
//! All evolution paths emulate the infinite lattice with the window's zero
//! exterior: results at retained cells are exact (up to kernel truncation)
//! whenever the occupied set keeps a kernel radius of clearance from the
//! frame, which the drivers check by watching the frame after each step.

use std::path::Path;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::heat_kernel::{kernel_table, truncation_radius, KernelTable, SchemeParams};
use crate::lattice::{extract_front, measure_radius, BinaryField, GridGeometry};
use crate::quad::{compensated_sum, RunningSum};
use crate::{Error, Result};

/// Real-valued field on the same window layout as `BinaryField`; holds the
/// diffused values w before thresholding. Values stay in [0 - eps, 1 + eps]
/// by the maximum principle.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    geom: GridGeometry,
    cells: Vec<f64>,
}

impl RealField {
    pub fn from_binary(field: &BinaryField) -> Self {
        RealField {
            geom: *field.geometry(),
            cells: field.as_slice().iter().map(|&b| f64::from(b)).collect(),
        }
    }

    pub fn uniform(geom: GridGeometry, value: f64) -> Self {
        RealField {
            geom,
            cells: vec![value; geom.len()],
        }
    }

    pub fn from_values(geom: GridGeometry, cells: Vec<f64>) -> Result<Self> {
        if cells.len() != geom.len() {
            return Err(Error::Domain(format!(
                "value buffer length {} does not match {}x{} window",
                cells.len(),
                geom.width,
                geom.height
            )));
        }
        Ok(RealField { geom, cells })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geom
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.cells[self.geom.idx(i, j)]
    }

    pub fn values(&self) -> &[f64] {
        &self.cells
    }

    /// Total value sum (compensated); mass in cell units.
    pub fn mass(&self) -> f64 {
        compensated_sum(self.cells.iter().copied())
    }

    pub fn max_on_frame(&self) -> f64 {
        let g = &self.geom;
        let mut m = f64::NEG_INFINITY;
        for i in 0..g.width {
            m = m.max(self.get(i, 0)).max(self.get(i, g.height - 1));
        }
        for j in 0..g.height {
            m = m.max(self.get(0, j)).max(self.get(g.width - 1, j));
        }
        m
    }
}

fn check_frame_spill(out: &RealField) -> Result<()> {
    let m = out.max_on_frame();
    if m > 0.5 {
        return Err(Error::InsufficientPadding(format!(
            "diffused value {m:.6} on the window frame exceeds 1/2; the thresholded set \
             would extend past the window"
        )));
    }
    Ok(())
}

/// Exact heat evolution by two separable 1-D convolutions with the truncated
/// kernel (zero beyond the window). Error vs the untruncated kernel is at
/// most 2 * tail_bound per cell.
pub fn heat_step_direct(input: &RealField, table: &KernelTable) -> Result<RealField> {
    let g = input.geom;
    let coeffs = table.coeffs();
    let r = coeffs.len() - 1;
    let width = g.width;
    let height = g.height;
    let src = &input.cells;
    // Horizontal pass.
    let mut mid = vec![0.0f64; g.len()];
    for j in 0..height {
        let row = &src[j * width..(j + 1) * width];
        let out = &mut mid[j * width..(j + 1) * width];
        for (i, slot) in out.iter_mut().enumerate() {
            let mut acc = RunningSum::new();
            acc.add(coeffs[0] * row[i]);
            for (k, &c) in coeffs.iter().enumerate().skip(1) {
                let mut pair = 0.0;
                if i >= k {
                    pair += row[i - k];
                }
                if i + k < width {
                    pair += row[i + k];
                }
                if pair != 0.0 {
                    acc.add(c * pair);
                }
                if k > i && i + k >= width {
                    break;
                }
            }
            *slot = acc.value();
        }
    }
    // Vertical pass.
    let mut out = vec![0.0f64; g.len()];
    for j in 0..height {
        for i in 0..width {
            let mut acc = RunningSum::new();
            acc.add(coeffs[0] * mid[j * width + i]);
            for (k, &c) in coeffs.iter().enumerate().skip(1) {
                let mut pair = 0.0;
                if j >= k {
                    pair += mid[(j - k) * width + i];
                }
                if j + k < height {
                    pair += mid[(j + k) * width + i];
                }
                if pair != 0.0 {
                    acc.add(c * pair);
                }
                if k > j && j + k >= height {
                    break;
                }
            }
            out[j * width + i] = acc.value();
        }
    }
    let _ = r;
    let result = RealField { geom: g, cells: out };
    check_frame_spill(&result)?;
    Ok(result)
}

/// Smallest length >= n whose factors are all 2, 3, or 5 (fast FFT sizes).
fn next_fast_len(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut k = m;
        for f in [2usize, 3, 5] {
            while k % f == 0 {
                k /= f;
            }
        }
        if k == 1 {
            return m;
        }
        m += 1;
    }
}

/// Exact heat evolution via the semigroup symbol e^(alpha (cos xi1 + cos xi2 - 2))
/// on a zero-padded grid: the production path. `padding` must cover the
/// truncation radius of the 1e-12 kernel table so that circular wrap-around
/// stays below the agreement tolerance with the direct path.
pub fn heat_step_fft(input: &RealField, alpha: f64, padding: usize) -> Result<RealField> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::Domain(format!(
            "heat_step_fft requires finite alpha >= 0, got {alpha}"
        )));
    }
    let needed = truncation_radius(alpha, 1e-12)?;
    if padding < needed {
        return Err(Error::InsufficientPadding(format!(
            "padding {padding} below the required kernel radius {needed} for alpha = {alpha}"
        )));
    }
    let g = input.geom;
    let pw = next_fast_len(g.width + 2 * padding);
    let ph = next_fast_len(g.height + 2 * padding);
    let mut buf = vec![Complex::new(0.0f64, 0.0f64); pw * ph];
    for j in 0..g.height {
        for i in 0..g.width {
            buf[(j + padding) * pw + (i + padding)] =
                Complex::new(input.cells[j * g.width + i], 0.0);
        }
    }

    let mut planner = FftPlanner::<f64>::new();
    let fwd_row = planner.plan_fft_forward(pw);
    let inv_row = planner.plan_fft_inverse(pw);
    let fwd_col = planner.plan_fft_forward(ph);
    let inv_col = planner.plan_fft_inverse(ph);

    for row in buf.chunks_mut(pw) {
        fwd_row.process(row);
    }
    let mut col = vec![Complex::new(0.0f64, 0.0); ph];
    for i in 0..pw {
        for (j, slot) in col.iter_mut().enumerate() {
            *slot = buf[j * pw + i];
        }
        fwd_col.process(&mut col);
        for (j, &v) in col.iter().enumerate() {
            buf[j * pw + i] = v;
        }
    }

    let symbol = |k: usize, n: usize| -> f64 {
        let xi = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        (alpha * (xi.cos() - 1.0)).exp()
    };
    let sym_x: Vec<f64> = (0..pw).map(|k| symbol(k, pw)).collect();
    let sym_y: Vec<f64> = (0..ph).map(|k| symbol(k, ph)).collect();
    for j in 0..ph {
        let sy = sym_y[j];
        for i in 0..pw {
            buf[j * pw + i] *= sy * sym_x[i];
        }
    }

    for i in 0..pw {
        for (j, slot) in col.iter_mut().enumerate() {
            *slot = buf[j * pw + i];
        }
        inv_col.process(&mut col);
        for (j, &v) in col.iter().enumerate() {
            buf[j * pw + i] = v;
        }
    }
    for row in buf.chunks_mut(pw) {
        inv_row.process(row);
    }

    let scale = 1.0 / (pw as f64 * ph as f64);
    let mut cells = vec![0.0f64; g.len()];
    for j in 0..g.height {
        for i in 0..g.width {
            cells[j * g.width + i] = buf[(j + padding) * pw + (i + padding)].re * scale;
        }
    }
    let result = RealField { geom: g, cells };
    check_frame_spill(&result)?;
    Ok(result)
}

/// Thresholding step: 1 where w > 1/2, 0 elsewhere. A value of exactly 1/2
/// goes to 0 — ties fall on the expelled side, which keeps a flat interface
/// exactly stationary instead of drifting.
pub fn threshold(field: &RealField) -> BinaryField {
    let cells = field.cells.iter().map(|&w| w > 0.5).collect();
    BinaryField::from_parts(field.geom, cells).expect("geometry matches by construction")
}

/// Which heat-step implementation drives the scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepBackend {
    Direct,
    Fft,
}

/// Per-step front metrics recorded by the driver.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    pub k: usize,
    pub t: f64,
    pub front_cell_count: usize,
    pub radius_estimate: f64,
    /// Occupied area, count * h^2.
    pub area: f64,
}

/// Full record of one scheme run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: SchemeParams,
    /// (k, state after step k); always includes k = 0.
    pub snapshots: Vec<(usize, BinaryField)>,
    pub diagnostics: Vec<StepDiagnostics>,
    /// Step index at which the set emptied, if it did.
    pub vanished_at: Option<usize>,
}

impl Trajectory {
    pub fn final_field(&self) -> &BinaryField {
        &self.snapshots.last().expect("snapshots never empty").1
    }

    pub fn write_diagnostics_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "k,t,front_cell_count,radius_estimate,area")?;
        for d in &self.diagnostics {
            writeln!(
                w,
                "{},{},{},{},{}",
                d.k,
                crate::config::format_float(d.t),
                d.front_cell_count,
                crate::config::format_float(d.radius_estimate),
                crate::config::format_float(d.area)
            )?;
        }
        Ok(())
    }

    /// Write snapshots (text bitmaps) and the diagnostics CSV into `dir`.
    pub fn export(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (k, field) in &self.snapshots {
            let mut buf = Vec::new();
            field.write_p1(&mut buf)?;
            crate::write_atomic(&dir.join(format!("snap_{k:05}.pbm")), &buf)?;
        }
        let mut buf = Vec::new();
        self.write_diagnostics_csv(&mut buf)?;
        crate::write_atomic(&dir.join("diagnostics.csv"), &buf)?;
        Ok(())
    }
}

fn diagnostics_for(field: &BinaryField, k: usize, tau: f64) -> StepDiagnostics {
    let (front_cell_count, radius_estimate) = match extract_front(field, k) {
        Some(front) => (front.boundary_cells.len(), measure_radius(&front)),
        None => (0, 0.0),
    };
    StepDiagnostics {
        k,
        t: k as f64 * tau,
        front_cell_count,
        radius_estimate,
        area: field.area(),
    }
}

/// Run the scheme for `params.steps()` steps (FFT heat path), recording a
/// snapshot every `stride` steps plus the initial and final states. Stops
/// early when the set vanishes.
pub fn run_scheme(params: &SchemeParams, init: &BinaryField, stride: usize) -> Result<Trajectory> {
    run_scheme_with(params, init, stride, StepBackend::Fft)
}

pub fn run_scheme_with(
    params: &SchemeParams,
    init: &BinaryField,
    stride: usize,
    backend: StepBackend,
) -> Result<Trajectory> {
    if stride == 0 {
        return Err(Error::Domain("stride must be >= 1".into()));
    }
    let g = init.geometry();
    if (g.h - params.h()).abs() > 1e-12 * params.h() {
        return Err(Error::Domain(format!(
            "field spacing {} does not match scheme h {}",
            g.h,
            params.h()
        )));
    }
    if !init.frame_is_clear() {
        return Err(Error::Domain(
            "initial field has occupied frame cells; rasterize with more margin".into(),
        ));
    }
    let alpha = params.alpha();
    let table = match backend {
        StepBackend::Direct => Some(kernel_table(alpha, 1e-12)?),
        StepBackend::Fft => None,
    };
    let padding = match &table {
        Some(t) => t.radius() + 8,
        None => truncation_radius(alpha, 1e-12)? + 8,
    };
    let tau = params.tau();

    let mut snapshots = vec![(0usize, init.clone())];
    let mut diagnostics = vec![diagnostics_for(init, 0, tau)];
    let mut vanished_at = None;
    let mut current = init.clone();
    for k in 1..=params.steps() {
        let real = RealField::from_binary(&current);
        let w = match &table {
            Some(t) => heat_step_direct(&real, t)?,
            None => heat_step_fft(&real, alpha, padding)?,
        };
        current = threshold(&w);
        diagnostics.push(diagnostics_for(&current, k, tau));
        let empty = current.count_ones() == 0;
        if k % stride == 0 || k == params.steps() || empty {
            snapshots.push((k, current.clone()));
        }
        if empty {
            vanished_at = Some(k);
            break;
        }
    }
    if snapshots.last().map(|(k, _)| *k) != diagnostics.last().map(|d| d.k) {
        let k = diagnostics.last().expect("at least the k=0 row").k;
        snapshots.push((k, current));
    }
    Ok(Trajectory {
        params: params.clone(),
        snapshots,
        diagnostics,
        vanished_at,
    })
}

/// Brute-force reference: integrate the semi-discrete heat system
/// du/dt = (5-point Laplacian u) / h^2 over [0, tau] with adaptive
/// Runge-Kutta (step doubling, local tolerance 1e-10).
///
/// The window is embedded in a zero sea wide enough that the missing
/// exterior cannot influence the retained cells above truncation level, so
/// the result is comparable cell-by-cell with `heat_step_direct`. Test-scale
/// only: the input window may not exceed 128 x 128.
pub fn ode_oracle(field: &BinaryField, tau: f64, h: f64) -> Result<RealField> {
    let g = *field.geometry();
    if g.width > 128 || g.height > 128 {
        return Err(Error::Domain(format!(
            "ode_oracle is limited to 128x128 windows, got {}x{}",
            g.width, g.height
        )));
    }
    if (g.h - h).abs() > 1e-12 * h.abs() {
        return Err(Error::Domain(format!(
            "ode_oracle spacing mismatch: field h = {}, argument h = {}",
            g.h, h
        )));
    }
    if !(h > 0.0) || !tau.is_finite() || tau < 0.0 {
        return Err(Error::Domain(format!(
            "ode_oracle requires h > 0 and tau >= 0, got h={h}, tau={tau}"
        )));
    }
    if tau == 0.0 {
        return Ok(RealField::from_binary(field));
    }
    let alpha = 2.0 * tau / (h * h);
    let pad = truncation_radius(alpha, 1e-12)? + 4;
    let pw = g.width + 2 * pad;
    let ph = g.height + 2 * pad;
    let mut u = vec![0.0f64; pw * ph];
    for j in 0..g.height {
        for i in 0..g.width {
            if field.get(i, j) {
                u[(j + pad) * pw + (i + pad)] = 1.0;
            }
        }
    }

    let h2inv = 1.0 / (h * h);
    let laplacian = |u: &[f64], out: &mut [f64]| {
        for j in 0..ph {
            for i in 0..pw {
                let c = u[j * pw + i];
                let left = if i > 0 { u[j * pw + i - 1] } else { 0.0 };
                let right = if i + 1 < pw { u[j * pw + i + 1] } else { 0.0 };
                let down = if j > 0 { u[(j - 1) * pw + i] } else { 0.0 };
                let up = if j + 1 < ph { u[(j + 1) * pw + i] } else { 0.0 };
                out[j * pw + i] = (left + right + up + down - 4.0 * c) * h2inv;
            }
        }
    };
    let n = pw * ph;
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut rk4_step = |u: &[f64], dt: f64, out: &mut Vec<f64>| {
        laplacian(u, &mut k1);
        for i in 0..n {
            tmp[i] = u[i] + 0.5 * dt * k1[i];
        }
        laplacian(&tmp, &mut k2);
        for i in 0..n {
            tmp[i] = u[i] + 0.5 * dt * k2[i];
        }
        laplacian(&tmp, &mut k3);
        for i in 0..n {
            tmp[i] = u[i] + dt * k3[i];
        }
        laplacian(&tmp, &mut k4);
        out.resize(n, 0.0);
        for i in 0..n {
            out[i] = u[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    };

    let tol = 1e-10;
    // Explicit RK4 stability for the eigenvalue -8/h^2 needs dt below about
    // 0.35 h^2; start safely inside that.
    let mut dt = tau.min(0.2 * h * h);
    let mut t = 0.0;
    let mut big = Vec::new();
    let mut half = Vec::new();
    let mut fine = Vec::new();
    while t < tau {
        if dt < tau * 1e-14 {
            return Err(Error::StepSizeUnderflow);
        }
        let step = dt.min(tau - t);
        rk4_step(&u, step, &mut big);
        rk4_step(&u, 0.5 * step, &mut half);
        rk4_step(&half, 0.5 * step, &mut fine);
        let mut err = 0.0f64;
        for i in 0..n {
            err = err.max((big[i] - fine[i]).abs());
        }
        err /= 15.0;
        if err <= tol {
            // Accept with the Richardson-extrapolated value.
            for i in 0..n {
                u[i] = fine[i] + (fine[i] - big[i]) / 15.0;
            }
            t += step;
            let grow = if err > 0.0 {
                0.9 * (tol / err).powf(0.2)
            } else {
                3.0
            };
            dt = step * grow.clamp(0.2, 3.0);
        } else {
            dt = step * (0.9 * (tol / err).powf(0.2)).clamp(0.05, 0.9);
        }
    }

    let mut cells = vec![0.0f64; g.len()];
    for j in 0..g.height {
        for i in 0..g.width {
            cells[j * g.width + i] = u[(j + pad) * pw + (i + pad)];
        }
    }
    Ok(RealField { geom: g, cells })
}
