//! Chooses the Möbius chart each region is integrated through.
//!
//! The region integrals are grid sums on a fixed polar rule, so the chart
//! is free up to any Möbius map carrying the unit disc onto the region's
//! patch. That freedom is spent deliberately: each chart family keeps one
//! real parameter, and the parameter is solved so that the radial rule
//! reproduces a fine radial integral on the same angular rays. The angular
//! rule is spectrally accurate for the smooth factors, so a chart that
//! zeroes the radial defect leaves the region integral accurate even on
//! coarse grids where a child-disc boundary would otherwise land on a
//! radial node and bias every ray coherently.
//!
//! Chart families:
//! - disc region: rotate the region's spherical cap to the chart centre
//!   (making the area density radially symmetric), centre the child disc
//!   if there is exactly one, then slide along the real axis;
//! - base region, one child: rotate the child's cap to the origin and
//!   dilate, which moves the hole boundary between node rings;
//! - base region, two children: send the pair's common inverse points to
//!   0 and ∞, making both holes concentric, and tune the scale;
//! - base region otherwise: slide along the real axis.

use crate::mobius::{Disc, MobiusMap};
use crate::planar_domain::{region_f, PlanarDomain, PlanarRegion};
use num_complex::Complex64;
use std::f64::consts::PI;

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// z ↦ 1/z as a Möbius map.
fn inversion() -> MobiusMap {
    let i = Complex64::new(0.0, 1.0);
    MobiusMap::new(re(0.0), i, i, re(0.0)).expect("unit antidiagonal is invertible")
}

/// Disc automorphism sliding along the real axis; identity at p = 0.
fn slide(p: f64) -> Option<MobiusMap> {
    MobiusMap::new(re(1.0), re(p), re(p), re(1.0)).ok()
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Unit disc onto the region's disc with the region's spherical cap
/// centred, so the pulled-back area density is a function of |w| alone.
fn cap_centered(region: &PlanarRegion) -> Option<MobiusMap> {
    let disc = region.disc.as_ref()?;
    let b = region.metric_b;
    if !(b > 0.0) || !b.is_finite() {
        return None;
    }
    let sqrt_b = b.sqrt();
    let c_v = (disc.centre - region.metric_a) / sqrt_b;
    let r_v = disc.radius / sqrt_b;
    let dist = c_v.norm();
    let u = if dist < 1e-12 { re(1.0) } else { c_v / dist };
    // half-angles of the cap edge seen from the metric's north pole
    let th1 = 2.0 * (dist - r_v).atan();
    let th2 = 2.0 * (dist + r_v).atan();
    let th0 = 0.5 * (th1 + th2);
    let alpha = 0.5 * (th2 - th1);
    let s = (0.5 * alpha).tan();
    if !(s > 0.0) || !s.is_finite() {
        return None;
    }
    let (cos_h, sin_h) = ((0.5 * th0).cos(), (0.5 * th0).sin());
    let rot = MobiusMap::new(re(cos_h), sin_h * u, -sin_h * u.conj(), re(cos_h)).ok()?;
    let dil = MobiusMap::new(re(s.sqrt()), re(0.0), re(0.0), re(1.0 / s.sqrt())).ok()?;
    let q = MobiusMap::new(re(sqrt_b), region.metric_a, re(0.0), re(1.0)).ok()?;
    Some(q.compose(&rot.compose(&dil)))
}

/// Disc automorphism sending `hole` (strictly inside 𝔻) to a disc centred
/// at the origin. None when it is already centred.
fn hole_centering(hole: &Disc) -> Option<MobiusMap> {
    let dist = hole.centre.norm();
    if dist < 1e-9 {
        return None;
    }
    let u = hole.centre / dist;
    let p = dist + hole.radius;
    let q = dist - hole.radius;
    let sum = p + q;
    let a = 1.0 + p * q;
    let disc = a * a - sum * sum;
    if disc <= 0.0 || sum.abs() < 1e-12 {
        return None;
    }
    let z_h = (a - disc.sqrt()) / sum;
    let r1 = MobiusMap::new(u.conj(), re(0.0), re(0.0), re(1.0)).ok()?;
    let mc = MobiusMap::new(re(1.0), re(-z_h), re(-z_h), re(1.0)).ok()?;
    let r2 = MobiusMap::new(u, re(0.0), re(0.0), re(1.0)).ok()?;
    Some(r2.compose(&mc.compose(&r1)))
}

/// Sphere rotation, written in base-chart coordinates, that centres one
/// child cap on the origin. Keeps the round area density round.
fn cap_rotation(child: &Disc) -> Option<MobiusMap> {
    let dist = child.centre.norm();
    if dist < 1e-12 {
        return Some(MobiusMap::IDENTITY);
    }
    let u = child.centre / dist;
    let psi = (dist + child.radius).atan() + (dist - child.radius).atan();
    let z_c = (0.5 * psi).tan() * u;
    MobiusMap::new(re(1.0), -z_c, z_c.conj(), re(1.0)).ok()
}

/// Möbius map sending two disjoint discs to circles concentric with the
/// origin (the first inside, the second around ∞), scale left free.
/// Returns the map and the two image radii at unit scale.
fn annulus_map(k1: &Disc, k2: &Disc) -> Option<(MobiusMap, f64, f64)> {
    let sep = k2.centre - k1.centre;
    let dd = sep.norm();
    if dd < 1e-12 {
        return None;
    }
    let u = sep / dd;
    let beta = (k1.radius * k1.radius + dd * dd - k2.radius * k2.radius) / dd;
    let disc = beta * beta - 4.0 * k1.radius * k1.radius;
    if disc <= 0.0 {
        return None;
    }
    let xp = 0.5 * (beta + disc.sqrt());
    let xm = k1.radius * k1.radius / xp;
    let p_in = k1.centre + xm * u;
    let p_out = k1.centre + xp * u;
    let w0 = MobiusMap::new(re(1.0), -p_in, re(1.0), -p_out).ok()?;
    let rho1 = w0.apply(k1.centre + k1.radius * u).norm();
    let rho2 = w0.apply(k2.centre + k2.radius * u).norm();
    if !(rho1 > 0.0) || !(rho2 > rho1) {
        return None;
    }
    Some((w0, rho1, rho2))
}

/// Radial-rule defect of a chart family: node-rule minus fine-rule radial
/// integrals accumulated over the same angular rays the quadrature uses,
/// child-disc masking included. The angular discretization cancels, so a
/// root of this defect leaves only the spectrally small angular residual.
/// Mask crossings are bisected on the same point test the node rule uses,
/// which keeps hole images of any orientation (including discs around ∞)
/// correct.
fn radial_defect(
    region: &PlanarRegion,
    holes: &[Disc],
    maps: &[&MobiusMap],
    n_r: usize,
    n_theta: usize,
) -> f64 {
    let h = 1.0 / n_r as f64;
    let dtheta = 2.0 * PI / n_theta as f64;
    let live = |m: &MobiusMap, w: Complex64| -> bool {
        let z = m.apply(w);
        z.is_finite() && !holes.iter().any(|d| d.contains(z))
    };
    let dens = |m: &MobiusMap, w: Complex64| -> f64 {
        let z = m.apply(w);
        if !z.is_finite() {
            return 0.0;
        }
        let v = 2.0 * region_f(region, z) * m.jacobian_sq(w);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let scan = 240.max(2 * n_r);
    let fine_per_unit = 400.max(4 * n_r) as f64;
    let mut defect = 0.0;
    for m in maps {
        for t in 0..n_theta {
            let theta = dtheta * t as f64;
            let dir = Complex64::new(theta.cos(), theta.sin());
            let mut coarse = 0.0;
            for s in 1..=n_r {
                let rho = s as f64 * h;
                let w_r = if s == n_r { 0.5 * h } else { h };
                if live(m, rho * dir) {
                    coarse += w_r * rho * dens(m, rho * dir);
                }
            }
            let mut xs = vec![0.0f64];
            let mut prev = live(m, Complex64::new(0.0, 0.0));
            for i in 1..=scan {
                let x = i as f64 / scan as f64;
                let l = live(m, x * dir);
                if l != prev {
                    let (mut lo, mut hi) = (x - 1.0 / scan as f64, x);
                    for _ in 0..45 {
                        let mid = 0.5 * (lo + hi);
                        if live(m, mid * dir) == prev {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    xs.push(0.5 * (lo + hi));
                    prev = l;
                }
            }
            xs.push(1.0);
            let mut fine = 0.0;
            for pair in xs.windows(2) {
                let (a, b) = (pair[0], pair[1]);
                if b - a < 1e-14 || !live(m, 0.5 * (a + b) * dir) {
                    continue;
                }
                let n_f = ((b - a) * fine_per_unit).ceil().max(8.0) as usize;
                let hf = (b - a) / n_f as f64;
                for s in 0..=n_f {
                    let rho = a + s as f64 * hf;
                    let w_f = if s == 0 || s == n_f { 0.5 * hf } else { hf };
                    fine += w_f * rho * dens(m, rho * dir);
                }
            }
            defect += (coarse - fine) * dtheta;
        }
    }
    defect
}

/// Scans `grid`, bisects the sign-change bracket with the smallest
/// endpoint defect, and falls back to the grid argmin when the defect
/// never changes sign. Returns the chosen parameter.
fn solve_knob(eval: &dyn Fn(f64) -> Option<f64>, grid: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = grid
        .iter()
        .filter_map(|&p| eval(p).map(|e| (p, e)))
        .collect();
    if pts.is_empty() {
        return None;
    }
    let mut bracket: Option<((f64, f64), (f64, f64))> = None;
    for pair in pts.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if a.1.signum() != b.1.signum() {
            let span = a.1.abs().max(b.1.abs());
            if bracket.map_or(true, |(x, y): ((f64, f64), (f64, f64))| {
                span < x.1.abs().max(y.1.abs())
            }) {
                bracket = Some((a, b));
            }
        }
    }
    let best_grid = pts
        .iter()
        .cloned()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .expect("pts is non-empty");
    let Some((mut lo, mut hi)) = bracket else {
        return Some(best_grid.0);
    };
    for _ in 0..40 {
        let mid = 0.5 * (lo.0 + hi.0);
        let Some(fm) = eval(mid) else { break };
        if fm.signum() == lo.1.signum() {
            lo = (mid, fm);
        } else {
            hi = (mid, fm);
        }
    }
    let refined = if lo.1.abs() < hi.1.abs() { lo } else { hi };
    Some(if refined.1.abs() < best_grid.1.abs() {
        refined.0
    } else {
        best_grid.0
    })
}

/// The Möbius charts region `idx` is integrated through: one map from the
/// unit disc for a disc region, two (a patch and its complement through
/// z ↦ 1/z) for the base region. Each chart's free parameter is fitted so
/// the polar rule at (n_r, n_theta) reproduces the region integral.
pub fn region_charts(
    domain: &PlanarDomain,
    idx: usize,
    n_r: usize,
    n_theta: usize,
) -> Vec<MobiusMap> {
    let region = &domain.regions[idx];
    let holes: Vec<Disc> = region
        .children
        .iter()
        .filter_map(|&c| domain.regions[c].disc.clone())
        .collect();
    // offsets beyond this start aliasing the angular rule, which the
    // radial defect cannot see
    let offsets = linspace(-0.35, 0.35, 29);
    match &region.disc {
        Some(disc) => {
            let mut t0 = cap_centered(region).unwrap_or_else(|| MobiusMap::onto_disc(disc));
            if holes.len() == 1 {
                if let Ok(hw) = t0.inverse().disc_image(&holes[0]) {
                    if let Some(mh) = hole_centering(&hw) {
                        t0 = t0.compose(&mh.inverse());
                    }
                }
            }
            let eval = |p: f64| -> Option<f64> {
                let tp = t0.compose(&slide(p)?);
                for hz in &holes {
                    let hw = tp.inverse().disc_image(hz).ok()?;
                    if hw.centre.norm() + hw.radius >= 0.999 {
                        return None;
                    }
                }
                Some(radial_defect(region, &holes, &[&tp], n_r, n_theta))
            };
            let t = solve_knob(&eval, &offsets)
                .and_then(slide)
                .map(|m| t0.compose(&m))
                .unwrap_or(t0);
            vec![t]
        }
        None => {
            let inv = inversion();
            let charts = |u: &MobiusMap| -> (MobiusMap, MobiusMap) {
                let m = u.inverse();
                let mb = m.compose(&inv);
                (m, mb)
            };
            let defect_of = |u: &MobiusMap| -> f64 {
                let (ma, mb) = charts(u);
                radial_defect(region, &holes, &[&ma, &mb], n_r, n_theta)
            };
            let dilation = |t: f64| MobiusMap::new(re(t), re(0.0), re(0.0), re(1.0)).ok();
            let slide_best = || -> Option<MobiusMap> {
                let eval = |p: f64| -> Option<f64> { Some(defect_of(&slide(p)?)) };
                solve_knob(&eval, &offsets).and_then(slide)
            };
            let best = match holes.len() {
                // a bare sphere's two-chart cover is left untouched: the
                // rule's radial deficit is already small and the identity
                // keeps the quadrature exactly circularly symmetric
                0 => None,
                1 => cap_rotation(&holes[0]).and_then(|rot| {
                    let d0 = holes[0].centre.norm();
                    let u0 = if d0 < 1e-12 {
                        re(1.0)
                    } else {
                        holes[0].centre / d0
                    };
                    let rho_c = rot.apply(holes[0].centre + holes[0].radius * u0).norm();
                    if !(rho_c > 0.0) || !rho_c.is_finite() {
                        return None;
                    }
                    // dilations parking the hole edge anywhere between the
                    // innermost and outermost node rings
                    let h = 1.0 / n_r as f64;
                    let lo = (0.5 * h / rho_c).ln();
                    let hi = (((n_r as f64 - 0.5) * h) / rho_c).ln();
                    let eval = |p: f64| -> Option<f64> {
                        Some(defect_of(&dilation(p.exp())?.compose(&rot)))
                    };
                    let p = solve_knob(&eval, &linspace(lo, hi, 60))?;
                    Some(dilation(p.exp())?.compose(&rot))
                }),
                2 => annulus_map(&holes[0], &holes[1])
                    .and_then(|(w0, rho1, rho2)| {
                        // nearly tangent holes (a folded molecule after the
                        // sibling repair) collapse the annulus; the charts
                        // split it at the geometric mean, so each needs a
                        // couple of radial steps of room to resolve it
                        if 1.0 - (rho1 / rho2).sqrt() < 2.0 / n_r as f64 {
                            return None;
                        }
                        // scales keeping hole one inside 𝔻 and hole two outside
                        let lo = (1.0 / rho2).ln();
                        let hi = (1.0 / rho1).ln();
                        let margin = 1e-3 * (hi - lo);
                        let eval = |p: f64| -> Option<f64> {
                            Some(defect_of(&dilation(p.exp())?.compose(&w0)))
                        };
                        let p = solve_knob(&eval, &linspace(lo + margin, hi - margin, 60))?;
                        Some(dilation(p.exp())?.compose(&w0))
                    })
                    .or_else(slide_best),
                _ => slide_best(),
            };
            let u = best.unwrap_or(MobiusMap::IDENTITY);
            let (ma, mb) = charts(&u);
            vec![ma, mb]
        }
    }
}
