//! Agreement between the full thresholding scheme and the one-step velocity
//! law: a parabolic front of curvature `kappa` advanced once with time step
//! `tau = mu * h^2` must drop by exactly the law's cell count, provided the
//! apex sits in generic position between lattice columns.

use lattice_mbo::anisotropy::aniso_velocity;
use lattice_mbo::config::RasterMode;
use lattice_mbo::evolution::run_scheme;
use lattice_mbo::heat_kernel::SchemeParams;
use lattice_mbo::lattice::{front_displacement, rasterize, Displacement, Probe};
use lattice_mbo::shapes::{Finger, Parabola, Translated};
use lattice_mbo::velocity_law::discrete_velocity;

/// One scheme step on a parabolic front with apex shifted `dx_cells` columns
/// off the lattice; returns the apex-column drop in cells.
fn parabola_one_step(kappa: f64, mu: f64, h: f64, dx_cells: f64) -> i64 {
    let params = SchemeParams::from_mu(h, mu, 1).unwrap();
    let region = Translated {
        region: Parabola { kappa },
        offset: (dx_cells * h, 0.0),
    };
    let init = rasterize(&region, h, [-1.0, -1.0, 1.0, 1.0], RasterMode::CenterInside).unwrap();
    let traj = run_scheme(&params, &init, 1).unwrap();
    let before = &traj.snapshots.first().unwrap().1;
    let after = &traj.snapshots.last().unwrap().1;
    match front_displacement(before, after, Probe::Column(0)).unwrap() {
        Displacement::Cells(c) => c,
        _ => unreachable!("column probe reports cells"),
    }
}

#[test]
fn parabola_first_step_matches_cell_count_law() {
    // (mu, kappa) spanning pinned, unit, fractional and multi-cell drops.
    for &(mu, kappa) in &[(1.0, 0.5), (1.0, 1.0), (1.0, 1.6), (1.0, 2.0), (0.5, 3.0)] {
        let n0 = discrete_velocity(mu, kappa).unwrap().n0 as i64;
        for &h in &[1.0 / 200.0, 1.0 / 400.0] {
            let drop = parabola_one_step(kappa, mu, h, 0.5);
            assert_eq!(
                drop, n0,
                "mu={mu} kappa={kappa} h={h}: one step moved {drop} cells, law says {n0}"
            );
        }
    }
}

#[test]
fn aligned_apex_sheds_its_single_cell_tip() {
    // With the apex exactly on a lattice column, the top row of the raster is
    // a single cell. Convolving the kernel against that spike leaves strictly
    // less than half mass at it for every positive time step, so the cell
    // always erodes -- one cell beyond the law, which counts rows of
    // macroscopic width. The generic half-cell offset used above removes the
    // artifact; this pins down the aligned behaviour so a regression in the
    // rasterizer or the threshold tie rule shows up.
    for &(mu, kappa) in &[(1.0, 0.5), (1.0, 1.0), (1.0, 2.0)] {
        let n0 = discrete_velocity(mu, kappa).unwrap().n0 as i64;
        let drop = parabola_one_step(kappa, mu, 1.0 / 400.0, 0.0);
        assert_eq!(drop, n0 + 1, "mu={mu} kappa={kappa}");
    }
}

#[test]
fn diagonal_finger_first_step_matches_anisotropic_law() {
    // Same experiment rotated to 45 degrees: a finger along (1,1) has the
    // analogue of the apex spike at its tip (the extreme diagonal stripe
    // holds a single cell when the tip is on a lattice point). The fix must
    // shift the tip *along* the front direction -- a shift with a component
    // along the normal would move the whole stripe family relative to the
    // boundary and change which stripes erode -- so use (h/2, h/2) and
    // compare the one-step stripe-level drop with the anisotropic law.
    let h = 1.0 / 400.0;
    for &(mu, kappa) in &[(1.0, 1.0), (1.0, 1.6), (1.0, 3.0)] {
        let n0 = aniso_velocity(1, 1, mu, kappa).unwrap().n0 as i64;
        let params = SchemeParams::from_mu(h, mu, 1).unwrap();
        let region = Translated {
            region: Finger {
                kappa,
                p: 1,
                q: 1,
            },
            offset: (0.5 * h, 0.5 * h),
        };
        let init =
            rasterize(&region, h, [-1.0, -1.0, 1.0, 1.0], RasterMode::CenterInside).unwrap();
        let traj = run_scheme(&params, &init, 1).unwrap();
        let before = &traj.snapshots.first().unwrap().1;
        let after = &traj.snapshots.last().unwrap().1;
        let d = front_displacement(before, after, Probe::Rational { p: 1, q: 1 }).unwrap();
        match d {
            Displacement::Normal { level_change, .. } => {
                assert_eq!(
                    level_change, n0,
                    "mu={mu} kappa={kappa}: one step dropped {level_change} stripes, law says {n0}"
                );
            }
            _ => unreachable!("rational probe reports stripe levels"),
        }
    }
}
