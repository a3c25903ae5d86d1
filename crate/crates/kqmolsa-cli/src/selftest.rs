//! Built-in checks against analytically known answers. Everything is
//! deterministic: fixture motions use fixed seeds and the Möbius samples
//! are hard-coded, so a rerun prints the identical report.

use std::f64::consts::PI;

use kqmolsa::descriptor_distance::{
    min_distance, sanitize, scale_optimum, scaled_distance, sym_power_rep, AlignOptions,
};
use kqmolsa::fixtures;
use kqmolsa::mobius::MobiusMap;
use kqmolsa::pipeline::sphere_set_descriptor;
use kqmolsa::quantizer::{load_descriptor, save_descriptor, QuantizeOptions};
use kqmolsa::similarity::{score_from_parts, Weights};
use num_complex::Complex64;

type Check = (&'static str, Result<(), String>);

/// Runs every check at the given quadrature settings, prints one line per
/// check, and returns the process exit code.
pub fn run(opts: &QuantizeOptions) -> u8 {
    let opts = QuantizeOptions { k: 1, ..*opts };
    let checks: Vec<Check> = vec![
        ("unit-sphere descriptor", unit_sphere(&opts)),
        ("area conservation", area_conservation(&opts)),
        ("descriptor round-trip", round_trip(&opts)),
        ("scale quotient", scale_quotient()),
        ("orbit invariance", orbit_invariance(&opts)),
        ("rigid-motion stability", rigid_motion(&opts)),
        ("weight-sweep linearity", weight_sweep()),
    ];

    let mut failures = 0usize;
    for (name, outcome) in &checks {
        match outcome {
            Ok(()) => println!("{name}: PASS"),
            Err(reason) => {
                println!("{name}: FAIL ({reason})");
                failures += 1;
            }
        }
    }
    println!("{}/{} checks passed", checks.len() - failures, checks.len());
    u8::from(failures > 0)
}

/// k=1 descriptor of a round sphere against the closed-form moments
/// diag(4π/3, 2π/3, 4π/3).
fn unit_sphere(opts: &QuantizeOptions) -> Result<(), String> {
    let desc = sphere_set_descriptor(&fixtures::single(1.0), opts).map_err(|e| e.to_string())?;
    let want = [4.0 * PI / 3.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0];
    for i in 0..3 {
        for j in 0..3 {
            let got = desc.matrix[(i, j)];
            if i == j {
                let rel = (got.re - want[i]).abs() / want[i];
                if rel > 0.03 || got.im.abs() > 1e-9 {
                    return Err(format!("entry ({i},{i}) off by {:.2}%", 100.0 * rel));
                }
            } else if got.norm() > 1e-3 * want[0] {
                return Err(format!("off-diagonal ({i},{j}) = {:.2e}", got.norm()));
            }
        }
    }
    Ok(())
}

/// Quadrature must recover the rescaled total area 4π on every chain
/// fixture to 0.5%.
fn area_conservation(opts: &QuantizeOptions) -> Result<(), String> {
    for n in 2..=8 {
        let desc = sphere_set_descriptor(&fixtures::chain(n), opts)
            .map_err(|e| format!("chain-{n}: {e}"))?;
        if desc.area_deviation() > 0.005 {
            return Err(format!(
                "chain-{n} area {:.4} vs {:.4}",
                desc.area_check,
                4.0 * PI
            ));
        }
    }
    Ok(())
}

/// A descriptor written to disk and read back must be bit-identical.
fn round_trip(opts: &QuantizeOptions) -> Result<(), String> {
    let desc = sphere_set_descriptor(&fixtures::chain(3), opts).map_err(|e| e.to_string())?;
    let path = std::env::temp_dir().join(format!("kq-selftest-{}.kq.json", std::process::id()));
    let result = (|| -> Result<(), String> {
        save_descriptor(&desc, &path.to_string_lossy()).map_err(|e| e.to_string())?;
        let back = load_descriptor(&path.to_string_lossy()).map_err(|e| e.to_string())?;
        for i in 0..desc.dim() {
            for j in 0..desc.dim() {
                if desc.matrix[(i, j)] != back.matrix[(i, j)] {
                    return Err(format!("matrix entry ({i},{j}) changed"));
                }
            }
        }
        if back.area_original != desc.area_original || back.area_check != desc.area_check {
            return Err("area fields changed".into());
        }
        Ok(())
    })();
    let _ = std::fs::remove_file(&path);
    result
}

/// Scaling a descriptor by c is undone exactly: optimal p = −log c and
/// zero residual distance.
fn scale_quotient() -> Result<(), String> {
    let m = kqmolsa::linalg::CMat::diagonal(&[4.0 * PI / 3.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0]);
    for c in [1e-3, 1.0, 1e3] {
        let scaled = m.scale(c);
        let p = scale_optimum(&m, &scaled).map_err(|e| e.to_string())?;
        if (p + c.ln()).abs() > 1e-12 {
            return Err(format!("c = {c}: p = {p}, want {}", -c.ln()));
        }
        let d = scaled_distance(&m, &scaled).map_err(|e| e.to_string())?;
        if d > 1e-12 {
            return Err(format!("c = {c}: residual distance {d:.2e}"));
        }
    }
    Ok(())
}

/// Conjugating a descriptor by the representation of a Möbius map must be
/// recoverable by the alignment search.
fn orbit_invariance(opts: &QuantizeOptions) -> Result<(), String> {
    let desc = sphere_set_descriptor(&fixtures::chain(3), opts).map_err(|e| e.to_string())?;
    let m = sanitize(&desc.matrix).map_err(|e| e.to_string())?;
    let samples = [
        (1.1, 0.3, 0.2, -0.1, 0.15, 0.25),
        (0.9, -0.2, -0.4, 0.3, -0.1, 0.2),
        (1.3, 0.1, 0.05, 0.4, 0.3, -0.15),
        (0.8, 0.5, -0.3, -0.2, 0.2, 0.1),
        (1.0, -0.4, 0.25, 0.15, -0.35, 0.3),
    ];
    for (i, (ar, ai, br, bi, cr, ci)) in samples.into_iter().enumerate() {
        let a = Complex64::new(ar, ai);
        let b = Complex64::new(br, bi);
        let c = Complex64::new(cr, ci);
        let d = (Complex64::new(1.0, 0.0) + b * c) / a;
        let g = MobiusMap::new(a, b, c, d).map_err(|e| e.to_string())?;
        let rep = sym_power_rep(&g, desc.k);
        let mut moved = rep.adjoint().mul(&m).mul(&rep);
        moved.hermitize();
        let al = min_distance(&m, &moved, &AlignOptions::default()).map_err(|e| e.to_string())?;
        if al.distance > 1e-2 {
            return Err(format!("sample {i}: residual {:.4}", al.distance));
        }
    }
    Ok(())
}

/// A rotated and translated copy of a chain must align back to its
/// original descriptor.
fn rigid_motion(opts: &QuantizeOptions) -> Result<(), String> {
    let set = fixtures::chain(3);
    let desc = sphere_set_descriptor(&set, opts).map_err(|e| e.to_string())?;
    let m = sanitize(&desc.matrix).map_err(|e| e.to_string())?;
    for seed in [7u64, 19, 31] {
        let moved = sphere_set_descriptor(&fixtures::rigidly_moved(&set, seed), opts)
            .map_err(|e| e.to_string())?;
        let mm = sanitize(&moved.matrix).map_err(|e| e.to_string())?;
        let al = min_distance(&m, &mm, &AlignOptions::default()).map_err(|e| e.to_string())?;
        if al.distance > 0.05 {
            return Err(format!("seed {seed}: residual {:.4}", al.distance));
        }
    }
    Ok(())
}

/// With the distance and areas held fixed the score is affine in the area
/// weight x; six sample points must sit on the line through the endpoints.
fn weight_sweep() -> Result<(), String> {
    let (d, a1, a2) = (1.0, 30.0, 60.0);
    let at = |x: f64| score_from_parts(d, a1, a2, &Weights { x, y: 1.0 - x });
    let (s0, s5) = (at(0.0), at(0.5));
    for i in 0..=5 {
        let x = 0.1 * i as f64;
        let line = s0 + (s5 - s0) * (x / 0.5);
        if (at(x) - line).abs() > 1e-12 {
            return Err(format!("x = {x}: {} vs line {line}", at(x)));
        }
    }
    Ok(())
}
