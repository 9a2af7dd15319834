//! Analytic initial regions: membership predicates plus (where cheap) exact
//! signed distances that the rasterizer can use instead of ring sampling.

/// An implicit region of the plane. `contains` must be exact; the signed
/// distance is optional (negative inside) and used by the rasterizer for the
/// distance-based membership rule when available.
pub trait Region {
    fn contains(&self, x: f64, y: f64) -> bool;

    fn signed_distance(&self, _x: f64, _y: f64) -> Option<f64> {
        None
    }

    /// True when the set extends beyond every bounding box; such regions are
    /// silently clipped to the rasterization window.
    fn unbounded(&self) -> bool;

    /// Tight bounding box [x0, y0, x1, y1] of the set; None when unbounded.
    fn bbox(&self) -> Option<[f64; 4]>;
}

#[derive(Debug, Clone, Copy)]
pub struct Disk {
    pub center: (f64, f64),
    pub radius: f64,
}

impl Region for Disk {
    fn contains(&self, x: f64, y: f64) -> bool {
        let dx = x - self.center.0;
        let dy = y - self.center.1;
        dx * dx + dy * dy <= self.radius * self.radius
    }

    fn signed_distance(&self, x: f64, y: f64) -> Option<f64> {
        let dx = x - self.center.0;
        let dy = y - self.center.1;
        Some((dx * dx + dy * dy).sqrt() - self.radius)
    }

    fn unbounded(&self) -> bool {
        false
    }

    fn bbox(&self) -> Option<[f64; 4]> {
        Some([
            self.center.0 - self.radius,
            self.center.1 - self.radius,
            self.center.0 + self.radius,
            self.center.1 + self.radius,
        ])
    }
}

/// Two bulbs joined by a thin rectangular neck, symmetric about both axes:
/// disks of radius `bulb_radius` centered at (±bulb_offset, 0) plus the strip
/// [−bulb_offset, bulb_offset] × [−neck_halfwidth, neck_halfwidth].
#[derive(Debug, Clone, Copy)]
pub struct Dumbbell {
    pub bulb_radius: f64,
    pub bulb_offset: f64,
    pub neck_halfwidth: f64,
}

impl Dumbbell {
    fn rect_sd(&self, x: f64, y: f64) -> f64 {
        let dx = x.abs() - self.bulb_offset;
        let dy = y.abs() - self.neck_halfwidth;
        if dx > 0.0 || dy > 0.0 {
            let px = dx.max(0.0);
            let py = dy.max(0.0);
            (px * px + py * py).sqrt()
        } else {
            dx.max(dy)
        }
    }
}

impl Region for Dumbbell {
    fn contains(&self, x: f64, y: f64) -> bool {
        self.signed_distance(x, y).unwrap() <= 0.0
    }

    fn signed_distance(&self, x: f64, y: f64) -> Option<f64> {
        let left = Disk {
            center: (-self.bulb_offset, 0.0),
            radius: self.bulb_radius,
        };
        let right = Disk {
            center: (self.bulb_offset, 0.0),
            radius: self.bulb_radius,
        };
        let d = left
            .signed_distance(x, y)
            .unwrap()
            .min(right.signed_distance(x, y).unwrap())
            .min(self.rect_sd(x, y));
        Some(d)
    }

    fn unbounded(&self) -> bool {
        false
    }

    fn bbox(&self) -> Option<[f64; 4]> {
        let half_h = self.bulb_radius.max(self.neck_halfwidth);
        Some([
            -self.bulb_offset - self.bulb_radius,
            -half_h,
            self.bulb_offset + self.bulb_radius,
            half_h,
        ])
    }
}

/// The set y <= 0.
#[derive(Debug, Clone, Copy)]
pub struct HalfPlane;

impl Region for HalfPlane {
    fn contains(&self, _x: f64, y: f64) -> bool {
        y <= 0.0
    }

    fn signed_distance(&self, _x: f64, y: f64) -> Option<f64> {
        Some(y)
    }

    fn unbounded(&self) -> bool {
        true
    }

    fn bbox(&self) -> Option<[f64; 4]> {
        None
    }
}

/// The subgraph y <= -(kappa/2) x^2: a front with apex curvature `kappa`
/// opening downward, used for the axis-aligned velocity experiments.
#[derive(Debug, Clone, Copy)]
pub struct Parabola {
    pub kappa: f64,
}

impl Region for Parabola {
    fn contains(&self, x: f64, y: f64) -> bool {
        y <= -0.5 * self.kappa * x * x
    }

    fn unbounded(&self) -> bool {
        true
    }

    fn bbox(&self) -> Option<[f64; 4]> {
        None
    }
}

/// The subgraph y <= (p/q) x - v0 x^2, a front tilted to slope p/q whose
/// curvature at the apex of its normal-direction profile equals `kappa`:
/// v0 = kappa (p^2 + q^2)^(3/2) / (2 q^3).
#[derive(Debug, Clone, Copy)]
pub struct Finger {
    pub kappa: f64,
    pub p: u64,
    pub q: u64,
}

impl Finger {
    pub fn v0(&self) -> f64 {
        let p = self.p as f64;
        let q = self.q as f64;
        self.kappa * (p * p + q * q).powf(1.5) / (2.0 * q * q * q)
    }

    pub fn slope(&self) -> f64 {
        self.p as f64 / self.q as f64
    }
}

impl Region for Finger {
    fn contains(&self, x: f64, y: f64) -> bool {
        y <= self.slope() * x - self.v0() * x * x
    }

    fn unbounded(&self) -> bool {
        true
    }

    fn bbox(&self) -> Option<[f64; 4]> {
        None
    }
}

/// `region` translated by `offset`. Useful for placing a shape in generic
/// position relative to the lattice (e.g. half a cell off axis): exact
/// alignment of a boundary extremum with a lattice point creates measure-zero
/// single-cell features that no continuum statement accounts for.
#[derive(Debug, Clone, Copy)]
pub struct Translated<R> {
    pub region: R,
    pub offset: (f64, f64),
}

impl<R: Region> Region for Translated<R> {
    fn contains(&self, x: f64, y: f64) -> bool {
        self.region.contains(x - self.offset.0, y - self.offset.1)
    }

    fn signed_distance(&self, x: f64, y: f64) -> Option<f64> {
        self.region
            .signed_distance(x - self.offset.0, y - self.offset.1)
    }

    fn unbounded(&self) -> bool {
        self.region.unbounded()
    }

    fn bbox(&self) -> Option<[f64; 4]> {
        self.region.bbox().map(|[x0, y0, x1, y1]| {
            [
                x0 + self.offset.0,
                y0 + self.offset.1,
                x1 + self.offset.0,
                y1 + self.offset.1,
            ]
        })
    }
}
