//! End-to-end runs of the three stock simulate presets through the CLI,
//! checking the qualitative behaviour each one is shipped to demonstrate.

use lattice_mbo::cli::run_from;

fn run_preset(preset: &str, out_dir: &std::path::Path) -> (i32, String) {
    let mut out = Vec::new();
    let code = run_from(
        [
            "lattice-mbo",
            "simulate",
            "--preset",
            preset,
            "--output-dir",
            out_dir.to_str().unwrap(),
        ],
        &mut out,
    );
    (code, String::from_utf8(out).unwrap())
}

/// diagnostics.csv rows as (k, t, front_cell_count, radius_estimate, area).
fn read_diagnostics(dir: &std::path::Path) -> Vec<(usize, f64, usize, f64, f64)> {
    let csv = std::fs::read_to_string(dir.join("diagnostics.csv")).unwrap();
    csv.lines()
        .skip(1)
        .map(|line| {
            let f: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
            (f[0] as usize, f[1], f[2] as usize, f[3], f[4])
        })
        .collect()
}

#[test]
fn subcritical_preset_radius_strictly_decreases_until_vanish() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout) = run_preset("subcritical", dir.path());
    assert_eq!(code, 0, "run failed:\n{stdout}");

    let rows = read_diagnostics(dir.path());
    let alive: Vec<f64> = rows
        .iter()
        .filter(|r| r.2 > 0)
        .map(|r| r.3)
        .collect();
    assert!(alive.len() >= 10, "expected a multi-step shrink, got {rows:?}");
    for w in alive.windows(2) {
        assert!(
            w[1] < w[0],
            "radius estimate must strictly decrease while the set is alive: {alive:?}"
        );
    }
    assert_eq!(rows.last().unwrap().2, 0, "the disk must vanish within the run");
    assert!(stdout.contains("front vanished at step"), "stdout:\n{stdout}");
    assert!(dir.path().join("radius.gp").exists());
}

#[test]
fn supercritical_preset_keeps_first_and_last_snapshots_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout) = run_preset("supercritical", dir.path());
    assert_eq!(code, 0, "run failed:\n{stdout}");

    let first = std::fs::read(dir.path().join("snap_00000.pbm")).unwrap();
    let last = std::fs::read(dir.path().join("snap_00010.pbm")).unwrap();
    assert_eq!(first, last, "supercritical run must not move any cell");
    assert!(stdout.contains("regime = supercritical"), "stdout:\n{stdout}");
}

#[test]
fn dumbbell_preset_neck_pinches_into_two_components() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout) = run_preset("dumbbell", dir.path());
    assert_eq!(code, 0, "run failed:\n{stdout}");

    // Per-snapshot stdout lines carry the component count; the run must pass
    // through 1 -> 2 (neck pinches, bulbs persist) before the bulbs vanish.
    let counts: Vec<usize> = stdout
        .lines()
        .filter_map(|l| l.split("components = ").nth(1))
        .map(|v| v.trim().parse().unwrap())
        .collect();
    assert_eq!(counts.first(), Some(&1), "starts connected: {counts:?}");
    let split = counts.iter().position(|&c| c == 2);
    assert!(
        split.is_some(),
        "the neck must pinch into two components during the run: {counts:?}"
    );
    assert!(
        counts[..split.unwrap()].iter().all(|&c| c == 1),
        "no stray components before the pinch: {counts:?}"
    );
}
