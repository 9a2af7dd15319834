//! Lattice-side state: binary occupancy fields on a window of the integer
//! grid, rasterization of analytic regions, front extraction, and the
//! measurement probes the experiments use.
//!
//! Physical space and the lattice are tied by x = m h, y = n h for integer
//! (m, n); a field stores a rectangular window [m0, m0+width) x [n0, n0+height)
//! of that lattice. The outermost frame of the window is forced to 0 and acts
//! as the (certified-by-padding) stand-in for the infinite exterior.

use std::io::{BufRead, Write};

use crate::config::{format_float, RasterMode};
use crate::shapes::Region;
use crate::{Error, Result};

/// Window geometry: array cell (i, j) is lattice point (origin.0 + i,
/// origin.1 + j), at physical ((origin.0 + i) h, (origin.1 + j) h).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGeometry {
    pub width: usize,
    pub height: usize,
    /// Lattice coordinate of array cell (0, 0).
    pub origin: (i64, i64),
    pub h: f64,
}

impl GridGeometry {
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.width && j < self.height);
        j * self.width + i
    }

    /// Lattice coordinate of array cell (i, j).
    #[inline]
    pub fn lattice_of(&self, i: usize, j: usize) -> (i64, i64) {
        (self.origin.0 + i as i64, self.origin.1 + j as i64)
    }

    /// Array cell of lattice point (m, n), if inside the window.
    pub fn array_of(&self, m: i64, n: i64) -> Option<(usize, usize)> {
        let i = m - self.origin.0;
        let j = n - self.origin.1;
        if i >= 0 && j >= 0 && (i as usize) < self.width && (j as usize) < self.height {
            Some((i as usize, j as usize))
        } else {
            None
        }
    }

    /// Physical coordinates of array cell (i, j).
    pub fn physical(&self, i: usize, j: usize) -> (f64, f64) {
        let (m, n) = self.lattice_of(i, j);
        (m as f64 * self.h, n as f64 * self.h)
    }

    pub fn on_frame(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.width - 1 || j == self.height - 1
    }
}

/// {0,1} occupancy field: the scheme state between steps.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryField {
    geom: GridGeometry,
    cells: Vec<bool>,
}

impl BinaryField {
    pub fn new_empty(geom: GridGeometry) -> Self {
        let cells = vec![false; geom.len()];
        BinaryField { geom, cells }
    }

    pub fn from_parts(geom: GridGeometry, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != geom.len() {
            return Err(Error::Domain(format!(
                "cell buffer length {} does not match {}x{} window",
                cells.len(),
                geom.width,
                geom.height
            )));
        }
        Ok(BinaryField { geom, cells })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geom
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.cells[self.geom.idx(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        let idx = self.geom.idx(i, j);
        self.cells[idx] = v;
    }

    /// Value at lattice point (m, n); points outside the window read as 0.
    pub fn get_lattice(&self, m: i64, n: i64) -> bool {
        match self.geom.array_of(m, n) {
            Some((i, j)) => self.get(i, j),
            None => false,
        }
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.cells
    }

    pub fn count_ones(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// Occupied area in physical units: count * h^2.
    pub fn area(&self) -> f64 {
        self.count_ones() as f64 * self.geom.h * self.geom.h
    }

    pub fn frame_is_clear(&self) -> bool {
        let g = &self.geom;
        for i in 0..g.width {
            if self.get(i, 0) || self.get(i, g.height - 1) {
                return false;
            }
        }
        for j in 0..g.height {
            if self.get(0, j) || self.get(g.width - 1, j) {
                return false;
            }
        }
        true
    }

    /// Number of 4-connected components of the 1-set.
    pub fn components(&self) -> usize {
        let g = &self.geom;
        let mut seen = vec![false; g.len()];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..g.len() {
            if !self.cells[start] || seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(idx) = stack.pop() {
                let i = idx % g.width;
                let j = idx / g.width;
                let mut push = |ii: usize, jj: usize, stack: &mut Vec<usize>| {
                    let nidx = g.idx(ii, jj);
                    if self.cells[nidx] && !seen[nidx] {
                        seen[nidx] = true;
                        stack.push(nidx);
                    }
                };
                if i > 0 {
                    push(i - 1, j, &mut stack);
                }
                if i + 1 < g.width {
                    push(i + 1, j, &mut stack);
                }
                if j > 0 {
                    push(i, j - 1, &mut stack);
                }
                if j + 1 < g.height {
                    push(i, j + 1, &mut stack);
                }
            }
        }
        count
    }

    /// Serialize as a plain-text bitmap. Rows are written top-down (largest n
    /// first) so the file reads like the physical picture; metadata comments
    /// carry the lattice placement.
    pub fn write_p1<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "P1")?;
        writeln!(w, "# h {}", format_float(self.geom.h))?;
        writeln!(w, "# origin {} {}", self.geom.origin.0, self.geom.origin.1)?;
        writeln!(w, "{} {}", self.geom.width, self.geom.height)?;
        for j in (0..self.geom.height).rev() {
            let mut line = String::with_capacity(2 * self.geom.width);
            for i in 0..self.geom.width {
                if i > 0 {
                    line.push(' ');
                }
                line.push(if self.get(i, j) { '1' } else { '0' });
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_p1<R: BufRead>(r: R) -> Result<Self> {
        let mut h = 1.0f64;
        let mut origin = (0i64, 0i64);
        let mut magic_seen = false;
        let mut dims: Option<(usize, usize)> = None;
        let mut bits: Vec<bool> = Vec::new();
        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut parts = rest.split_whitespace();
                match parts.next() {
                    Some("h") => {
                        if let Some(v) = parts.next() {
                            h = v
                                .parse()
                                .map_err(|e| Error::Domain(format!("bad h comment: {e}")))?;
                        }
                    }
                    Some("origin") => {
                        let m = parts.next().and_then(|v| v.parse().ok());
                        let n = parts.next().and_then(|v| v.parse().ok());
                        if let (Some(m), Some(n)) = (m, n) {
                            origin = (m, n);
                        }
                    }
                    _ => {}
                }
                continue;
            }
            if !magic_seen {
                if line != "P1" {
                    return Err(Error::Domain(format!(
                        "expected P1 magic, found '{line}'"
                    )));
                }
                magic_seen = true;
                continue;
            }
            if dims.is_none() {
                let mut parts = line.split_whitespace();
                let w: usize = parts
                    .next()
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| Error::Domain("bad dimension line".into()))?;
                let ht: usize = parts
                    .next()
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| Error::Domain("bad dimension line".into()))?;
                dims = Some((w, ht));
                continue;
            }
            for tok in line.split_whitespace() {
                for ch in tok.chars() {
                    match ch {
                        '0' => bits.push(false),
                        '1' => bits.push(true),
                        other => {
                            return Err(Error::Domain(format!(
                                "unexpected character '{other}' in bitmap body"
                            )))
                        }
                    }
                }
            }
        }
        let (width, height) =
            dims.ok_or_else(|| Error::Domain("missing bitmap dimensions".into()))?;
        if bits.len() != width * height {
            return Err(Error::Domain(format!(
                "bitmap body has {} cells, expected {}x{}",
                bits.len(),
                width,
                height
            )));
        }
        let geom = GridGeometry {
            width,
            height,
            origin,
            h,
        };
        // Undo the top-down row order.
        let mut cells = vec![false; geom.len()];
        for (row_out, row_bits) in bits.chunks(width).enumerate() {
            let j = height - 1 - row_out;
            for (i, &b) in row_bits.iter().enumerate() {
                cells[geom.idx(i, j)] = b;
            }
        }
        BinaryField::from_parts(geom, cells)
    }
}

/// Rasterize `region` onto the lattice window covered by `bbox`
/// ([x0, y0, x1, y1], physical units).
///
/// Membership follows `mode`: either the cell center lies in the region, or
/// the region comes within h of the center (exact when the shape provides a
/// signed distance, otherwise approximated by the center plus 8 ring samples
/// at radius h). The window frame is always left 0; a bounded region reaching
/// the frame is an error, an unbounded one is silently clipped.
pub fn rasterize(
    region: &dyn Region,
    h: f64,
    bbox: [f64; 4],
    mode: RasterMode,
) -> Result<BinaryField> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Domain(format!("rasterize requires h > 0, got {h}")));
    }
    let [x0, y0, x1, y1] = bbox;
    if !(x0 < x1 && y0 < y1) || !bbox.iter().all(|v| v.is_finite()) {
        return Err(Error::Domain(format!(
            "rasterize requires a proper window, got [{x0}, {y0}, {x1}, {y1}]"
        )));
    }
    let m0 = (x0 / h).ceil() as i64;
    let m1 = (x1 / h).floor() as i64;
    let n0 = (y0 / h).ceil() as i64;
    let n1 = (y1 / h).floor() as i64;
    if m1 - m0 < 2 || n1 - n0 < 2 {
        return Err(Error::Domain(format!(
            "window too small: {}x{} lattice points",
            m1 - m0 + 1,
            n1 - n0 + 1
        )));
    }
    let geom = GridGeometry {
        width: (m1 - m0 + 1) as usize,
        height: (n1 - n0 + 1) as usize,
        origin: (m0, n0),
        h,
    };
    let mut field = BinaryField::new_empty(geom);
    let mut frame_hit = false;
    for j in 0..geom.height {
        for i in 0..geom.width {
            let (x, y) = geom.physical(i, j);
            let inside = match mode {
                RasterMode::CenterInside => region.contains(x, y),
                RasterMode::DistanceH => match region.signed_distance(x, y) {
                    Some(sd) => sd <= h,
                    None => {
                        region.contains(x, y) || {
                            // 8 ring samples at radius h approximate dist <= h.
                            const DIAG: f64 = std::f64::consts::FRAC_1_SQRT_2;
                            let ring = [
                                (1.0, 0.0),
                                (-1.0, 0.0),
                                (0.0, 1.0),
                                (0.0, -1.0),
                                (DIAG, DIAG),
                                (DIAG, -DIAG),
                                (-DIAG, DIAG),
                                (-DIAG, -DIAG),
                            ];
                            ring.iter()
                                .any(|(dx, dy)| region.contains(x + dx * h, y + dy * h))
                        }
                    }
                },
            };
            if inside {
                if geom.on_frame(i, j) {
                    frame_hit = true;
                } else {
                    field.set(i, j, true);
                }
            }
        }
    }
    if frame_hit && !region.unbounded() {
        return Err(Error::InsufficientPadding(format!(
            "shape reaches the window frame; enlarge the window beyond [{x0}, {y0}, {x1}, {y1}]"
        )));
    }
    Ok(field)
}

/// Boundary cells of a field at one time index: the 1-cells with at least one
/// zero 4-neighbor.
#[derive(Debug, Clone)]
pub struct FrontSample {
    /// Lattice coordinates (m, n) of each boundary cell.
    pub boundary_cells: Vec<(i64, i64)>,
    /// Mean physical position of the boundary cells.
    pub centroid: (f64, f64),
    pub time_index: usize,
    h: f64,
}

/// Extract the front; `None` means the set has vanished (no 1-cells), which
/// terminates experiments rather than signalling an error.
pub fn extract_front(field: &BinaryField, time_index: usize) -> Option<FrontSample> {
    let g = field.geometry();
    let mut cells = Vec::new();
    let mut sx = 0.0;
    let mut sy = 0.0;
    for j in 0..g.height {
        for i in 0..g.width {
            if !field.get(i, j) {
                continue;
            }
            let (m, n) = g.lattice_of(i, j);
            let exposed = !field.get_lattice(m - 1, n)
                || !field.get_lattice(m + 1, n)
                || !field.get_lattice(m, n - 1)
                || !field.get_lattice(m, n + 1);
            if exposed {
                cells.push((m, n));
                let (x, y) = g.physical(i, j);
                sx += x;
                sy += y;
            }
        }
    }
    if cells.is_empty() {
        return None;
    }
    let count = cells.len() as f64;
    Some(FrontSample {
        boundary_cells: cells,
        centroid: (sx / count, sy / count),
        time_index,
        h: g.h,
    })
}

/// Mean distance of the boundary cells to their centroid, physical units.
pub fn measure_radius(front: &FrontSample) -> f64 {
    let (cx, cy) = front.centroid;
    let sum: f64 = front
        .boundary_cells
        .iter()
        .map(|&(m, n)| {
            let dx = m as f64 * front.h - cx;
            let dy = n as f64 * front.h - cy;
            (dx * dx + dy * dy).sqrt()
        })
        .sum();
    sum / front.boundary_cells.len() as f64
}

/// Where to measure a front displacement.
#[derive(Debug, Clone, Copy)]
pub enum Probe {
    /// Track the topmost 1 of one lattice column m.
    Column(i64),
    /// Track the boundary level along the normal of a slope-p/q front.
    Rational { p: u64, q: u64 },
}

/// Result of a displacement measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Displacement {
    /// Signed cell count along the probed column; positive = moved down.
    Cells(i64),
    /// Change of the integer normal level F = m p - n q across the step;
    /// `units_h` = level / sqrt(p^2 + q^2) is the normal displacement in
    /// multiples of h, positive = retreat.
    Normal { level_change: i64, units_h: f64 },
}

/// Measure how far the front moved between two fields along `probe`.
pub fn front_displacement(
    before: &BinaryField,
    after: &BinaryField,
    probe: Probe,
) -> Result<Displacement> {
    if before.geometry() != after.geometry() {
        return Err(Error::Domain(
            "front_displacement requires identical window geometry".into(),
        ));
    }
    let g = before.geometry();
    match probe {
        Probe::Column(m) => {
            let top = |f: &BinaryField| -> Option<i64> {
                let i = (m - g.origin.0).try_into().ok().filter(|&i: &usize| i < g.width)?;
                (0..g.height)
                    .rev()
                    .find(|&j| f.get(i, j))
                    .map(|j| g.lattice_of(i, j).1)
            };
            let tb = top(before).ok_or_else(|| {
                Error::ProbeMiss(format!("column m={m} has no 1-cells in the first field"))
            })?;
            let ta = top(after).ok_or_else(|| {
                Error::ProbeMiss(format!("column m={m} has no 1-cells in the second field"))
            })?;
            Ok(Displacement::Cells(tb - ta))
        }
        Probe::Rational { p, q } => {
            if p == 0 || q == 0 || crate::config::gcd(p, q) != 1 {
                return Err(Error::Domain(format!(
                    "rational probe needs coprime positive (p, q), got ({p}, {q})"
                )));
            }
            let (pi, qi) = (p as i64, q as i64);
            // Cells within a few lattice units of the apex along the
            // boundary direction (q, p); the front level is flat there.
            let slab_halfwidth = pi + qi + 2;
            let min_level = |f: &BinaryField| -> Option<i64> {
                let mut best: Option<i64> = None;
                for j in 0..g.height {
                    for i in 0..g.width {
                        if !f.get(i, j) {
                            continue;
                        }
                        let (m, n) = g.lattice_of(i, j);
                        let along = m * qi + n * pi;
                        if along.abs() > slab_halfwidth {
                            continue;
                        }
                        let level = m * pi - n * qi;
                        best = Some(match best {
                            Some(b) => b.min(level),
                            None => level,
                        });
                    }
                }
                best
            };
            let lb = min_level(before).ok_or_else(|| {
                Error::ProbeMiss("apex slab has no 1-cells in the first field".into())
            })?;
            let la = min_level(after).ok_or_else(|| {
                Error::ProbeMiss("apex slab has no 1-cells in the second field".into())
            })?;
            let level_change = la - lb;
            let norm = ((p * p + q * q) as f64).sqrt();
            Ok(Displacement::Normal {
                level_change,
                units_h: level_change as f64 / norm,
            })
        }
    }
}

/// CSV rows `k,m,n,x,y`, one per boundary cell.
pub fn write_front_csv<W: Write>(front: &FrontSample, mut w: W) -> std::io::Result<()> {
    writeln!(w, "k,m,n,x,y")?;
    for &(m, n) in &front.boundary_cells {
        writeln!(
            w,
            "{},{},{},{},{}",
            front.time_index,
            m,
            n,
            format_float(m as f64 * front.h),
            format_float(n as f64 * front.h)
        )?;
    }
    Ok(())
}
