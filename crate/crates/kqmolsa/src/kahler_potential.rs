//! Closed-form Kähler potential for the glued piecewise-sphere metric.
//!
//! On each region the potential is a local round-sphere term plus a sum of
//! harmonic `log|αz + β|²` corrections, one per sphere added to the
//! surface. Spheres are added in the gluing-tree order; each addition
//! rewrites the potential inside the new disc and appends one correction
//! term to every region so that the result stays C¹ across the boundary
//! circle and satisfies ∂²φ/∂z∂z̄ = F everywhere off the circles.

use crate::error::{Error, Result};
use crate::mobius::MobiusMap;
use crate::planar_domain::PlanarDomain;
use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct KahlerPotential {
    n: usize,
    /// coeff[s·n + t]: weight in region s of the term produced when sphere
    /// t was glued in. Column `base` is identically zero.
    pub coeff: Vec<f64>,
    pub alpha: Vec<Complex64>,
    pub beta: Vec<Complex64>,
    /// Additive constants not yet absorbed into a linear form (normally
    /// all zero after construction).
    pub constant: Vec<f64>,
    /// Per-region local data (2r², A, B): the non-harmonic part of the
    /// potential is 2r²·log(|z − A|² + B).
    pub local: Vec<(f64, Complex64, f64)>,
}

impl KahlerPotential {
    pub fn regions(&self) -> usize {
        self.n
    }

    /// Potential evaluated with region `s`'s formula (caller picks the
    /// region, typically via `PlanarDomain::region_at`).
    pub fn evaluate_in(&self, s: usize, z: Complex64) -> f64 {
        let (two_r2, a, b) = self.local[s];
        let mut phi = two_r2 * ((z - a).norm_sqr() + b).ln() + self.constant[s];
        for t in 0..self.n {
            let k = self.coeff[s * self.n + t];
            if k != 0.0 {
                let form = self.alpha[s * self.n + t] * z + self.beta[s * self.n + t];
                phi += k * form.norm_sqr().ln();
            }
        }
        phi
    }

    pub fn evaluate(&self, domain: &PlanarDomain, z: Complex64) -> f64 {
        self.evaluate_in(domain.region_at(z), z)
    }
}

pub fn build_potential(domain: &PlanarDomain) -> Result<KahlerPotential> {
    let n = domain.regions.len();
    let base = domain.base;
    let mut coeff = vec![0.0; n * n];
    let mut alpha = vec![Complex64::new(0.0, 0.0); n * n];
    let mut beta = vec![Complex64::new(0.0, 0.0); n * n];
    let mut constant = vec![0.0; n];
    let mut local = vec![(0.0, Complex64::new(0.0, 0.0), 0.0); n];

    let rb = domain.regions[base].radius;
    local[base] = (2.0 * rb * rb, Complex64::new(0.0, 0.0), 1.0);

    let mut built = vec![false; n];
    built[base] = true;

    for &c in domain.order.iter().skip(1) {
        let region = &domain.regions[c];
        let p = region.parent.expect("non-base region has a parent");
        let parent = &domain.regions[p];
        let (rc, rp) = (region.radius, parent.radius);
        let w = region.w_boundary;
        let (eps, eps_t) = (region.eps, region.eps_tilde);

        // gluing map rescaled so the boundary circle becomes |ζ| = 1
        let m = MobiusMap::scaling(w).compose(&region.chart);

        // every region glued so far freezes the old potential outside the
        // new disc up to one extra harmonic term
        let c_out = rc * (rc + rc * (1.0 - eps) / (1.0 + eps))
            - rp * (rp - rp * (eps_t - 1.0) / (eps_t + 1.0));
        for s in 0..n {
            if built[s] {
                coeff[s * n + c] = c_out;
                alpha[s * n + c] = m.a;
                beta[s * n + c] = m.b;
            }
        }

        // the new region inherits its parent's corrections, swaps in its
        // own round-sphere term, and adds the boundary-matching term
        for t in 0..n {
            if t == c {
                continue;
            }
            coeff[c * n + t] = coeff[p * n + t];
            alpha[c * n + t] = alpha[p * n + t];
            beta[c * n + t] = beta[p * n + t];
        }
        local[c] = (2.0 * rc * rc, region.metric_a, region.metric_b);
        coeff[c * n + c] = 2.0 * (rp * rp - rc * rc) + c_out;
        alpha[c * n + c] = m.c;
        beta[c * n + c] = m.d;

        // constant that keeps the potential continuous across the circle
        let p_c = 1.0 / region.metric_b.sqrt();
        let b_p = parent.metric_b;
        constant[c] = constant[p]
            + 2.0 * rc * rc * ((p_c / w).ln() - (1.0 + eps).ln())
            - rp * rp * ((eps_t / b_p).ln() - 2.0 * (1.0 + eps_t).ln());

        built[c] = true;
    }

    // fold each region's constant into its largest correction term
    for s in 0..n {
        if constant[s] == 0.0 {
            continue;
        }
        let mut best = 0usize;
        let mut best_mag = 0.0;
        for t in 0..n {
            let mag = coeff[s * n + t].abs();
            if mag > best_mag {
                best_mag = mag;
                best = t;
            }
        }
        if best_mag > 1e-12 {
            let factor = (constant[s] / (2.0 * coeff[s * n + best])).exp();
            alpha[s * n + best] *= factor;
            beta[s * n + best] *= factor;
            constant[s] = 0.0;
        } else {
            log::warn!("region {s}: no correction term to absorb constant {:.3e}", constant[s]);
        }
    }

    let pot = KahlerPotential {
        n,
        coeff,
        alpha,
        beta,
        constant,
        local,
    };
    for v in pot
        .coeff
        .iter()
        .chain(pot.constant.iter())
        .chain(pot.local.iter().flat_map(|(t, _, b)| [t, b]))
    {
        if !v.is_finite() {
            return Err(Error::Potential("non-finite coefficient".into()));
        }
    }
    Ok(pot)
}

/// Σ of a region's correction weights plus its round term; for the base
/// row of a tree-shaped model this equals total area / 2π = 2.
pub fn row_weight(pot: &KahlerPotential, s: usize) -> f64 {
    let n = pot.regions();
    pot.local[s].0 + (0..n).map(|t| pot.coeff[s * n + t]).sum::<f64>()
}
