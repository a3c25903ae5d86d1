//! Distance between shape descriptors, minimized over the Möbius motions
//! and rescalings that leave a shape's quantization orbit.
//!
//! Two positive-definite moment matrices are compared through their
//! generalized eigenvalues η: d = k^{-3/2}·√(Σ log²ηᵢ). The scale optimum
//! has a closed form; the six-parameter Möbius alignment is searched
//! numerically through the symmetric-power representation.

use crate::error::{Error, Result};
use crate::linalg::{generalized_eigenvalues, CMat};
use crate::mobius::MobiusMap;
use crate::optim::{minimize, Minimizer, OptimOptions};
use num_complex::Complex64;

fn level_of(m1: &CMat, m2: &CMat) -> Result<u32> {
    if m1.n() != m2.n() {
        return Err(Error::OrderMismatch(m1.n(), m2.n()));
    }
    let n = m1.n();
    if n < 3 || n % 2 == 0 {
        return Err(Error::Domain(format!(
            "descriptor dimension {n} is not of the form 2k+1 with k ≥ 1"
        )));
    }
    Ok(((n - 1) / 2) as u32)
}

fn log_etas(m1: &CMat, m2: &CMat) -> Result<Vec<f64>> {
    let etas = generalized_eigenvalues(m1, m2)?;
    if etas[0] <= 0.0 {
        return Err(Error::NonPd(etas[0]));
    }
    Ok(etas.into_iter().map(f64::ln).collect())
}

/// Distance with no alignment: k^{-3/2}·√(Σ log²ηᵢ).
pub fn raw_distance(m1: &CMat, m2: &CMat) -> Result<f64> {
    let k = level_of(m1, m2)? as f64;
    let logs = log_etas(m1, m2)?;
    Ok(logs.iter().map(|l| l * l).sum::<f64>().sqrt() / k.powf(1.5))
}

/// The log-scale p minimizing the distance between m1 and e^p·m2:
/// p = −(1/(2k+1))·Σ log ηᵢ with η the eigenvalues of M1⁻¹M2.
pub fn scale_optimum(m1: &CMat, m2: &CMat) -> Result<f64> {
    level_of(m1, m2)?;
    let logs = log_etas(m1, m2)?;
    Ok(-logs.iter().sum::<f64>() / logs.len() as f64)
}

/// Distance minimized over rescaling only.
pub fn scaled_distance(m1: &CMat, m2: &CMat) -> Result<f64> {
    let k = level_of(m1, m2)? as f64;
    let logs = log_etas(m1, m2)?;
    let mean = logs.iter().sum::<f64>() / logs.len() as f64;
    Ok(logs
        .iter()
        .map(|l| (l - mean) * (l - mean))
        .sum::<f64>()
        .sqrt()
        / k.powf(1.5))
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut out = 1.0;
    for i in 0..k.min(n - k) {
        out = out * (n - i) as f64 / (i + 1) as f64;
    }
    out
}

/// Matrix of the degree-2k symmetric-power action of g:
/// column j holds the coefficients of (αz+β)ʲ(γz+δ)^{2k−j}.
pub fn sym_power_rep(g: &MobiusMap, k: u32) -> CMat {
    let (alpha, beta, gamma, delta) = (g.a, g.b, g.c, g.d);
    let deg = 2 * k as usize;
    let mut rep = CMat::zeros(deg + 1);
    for j in 0..=deg {
        for t in 0..=j {
            let left = binomial(j, t) * alpha.powu(t as u32) * beta.powu((j - t) as u32);
            for s in 0..=(deg - j) {
                let right = binomial(deg - j, s)
                    * gamma.powu(s as u32)
                    * delta.powu((deg - j - s) as u32);
                rep[(t + s, j)] += left * right;
            }
        }
    }
    rep
}

/// Completes six real parameters into a determinant-one 2×2 matrix:
/// α = x₁+ix₂, β = x₃+ix₄, γ = x₅+ix₆, δ = (1+βγ)/α. Fails when α ≈ 0.
pub fn params_to_mobius(x: &[f64]) -> Option<MobiusMap> {
    let alpha = Complex64::new(x[0], x[1]);
    if alpha.norm_sqr() < 1e-16 {
        return None;
    }
    let beta = Complex64::new(x[2], x[3]);
    let gamma = Complex64::new(x[4], x[5]);
    let delta = (Complex64::new(1.0, 0.0) + beta * gamma) / alpha;
    Some(MobiusMap {
        a: alpha,
        b: beta,
        c: gamma,
        d: delta,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct AlignOptions {
    pub minimizer: Minimizer,
    pub max_iters: usize,
    pub tolerance: f64,
    pub step: f64,
    /// Starting parameters, e.g. the optimum found at a lower level.
    pub warm_start: Option<[f64; 6]>,
    /// Extra restarts if the search drifts into the α ≈ 0 wall.
    pub restarts: usize,
}

impl Default for AlignOptions {
    fn default() -> Self {
        AlignOptions {
            minimizer: Minimizer::NelderMead,
            max_iters: 2000,
            tolerance: 1e-8,
            step: 0.1,
            warm_start: None,
            restarts: 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Alignment {
    pub distance: f64,
    pub params: [f64; 6],
    /// Optimal log-scale between m1 and the aligned m2.
    pub scale: f64,
    /// Minimized objective ζ = Σ log²η (so distance = k^{-3/2}·√ζ).
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn apply_rep(m2: &CMat, g: &MobiusMap, k: u32) -> CMat {
    let rep = sym_power_rep(g, k);
    let mut out = rep.adjoint().mul(m2).mul(&rep);
    out.hermitize();
    out
}

/// Distance minimized over rescaling and the Möbius group.
pub fn min_distance(m1: &CMat, m2: &CMat, opts: &AlignOptions) -> Result<Alignment> {
    let k = level_of(m1, m2)?;
    // fail fast on inputs the objective could not evaluate anywhere
    log_etas(m1, m2)?;

    let objective = |x: &[f64]| -> f64 {
        let penalty = 1e12 * (1.0 + x.iter().map(|v| v * v).sum::<f64>());
        match params_to_mobius(x) {
            Some(g) => match scaled_distance(m1, &apply_rep(m2, &g, k)) {
                Ok(d) => d * d,
                Err(_) => penalty,
            },
            None => penalty,
        }
    };

    let identity = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    let start = opts.warm_start.unwrap_or(identity);
    let optim_opts = OptimOptions {
        max_iters: opts.max_iters,
        tolerance: opts.tolerance,
        step: opts.step,
    };

    let mut best = minimize(&objective, &start, opts.minimizer, &optim_opts);
    let mut attempt = 0;
    while params_to_mobius(&best.x)
        .map(|g| g.a.norm_sqr() < 1e-12)
        .unwrap_or(true)
        && attempt < opts.restarts
    {
        attempt += 1;
        // deterministic jitter away from the degenerate α direction
        let mut jittered = identity;
        for (i, v) in jittered.iter_mut().enumerate() {
            *v += 0.07 * attempt as f64 * ((1.3 * (i as f64 + 1.0)).sin());
        }
        jittered[0] = 1.0 + 0.1 * attempt as f64;
        let retry = minimize(&objective, &jittered, opts.minimizer, &optim_opts);
        if retry.value < best.value {
            best = retry;
        }
    }

    // a search seeded off-identity must never end above the unaligned value
    let at_identity = objective(&identity);
    if at_identity < best.value {
        best.x = identity.to_vec();
        best.value = at_identity;
    }

    let g = params_to_mobius(&best.x).ok_or_else(|| {
        Error::Domain("alignment search ended on a degenerate Möbius parameter".into())
    })?;
    let aligned = apply_rep(m2, &g, k);
    let mut params = [0.0; 6];
    params.copy_from_slice(&best.x);
    let distance = scaled_distance(m1, &aligned)?;
    Ok(Alignment {
        distance,
        params,
        scale: scale_optimum(m1, &aligned)?,
        objective: (k as f64).powi(3) * distance * distance,
        iterations: best.iterations,
        converged: best.converged,
    })
}

/// Validates a descriptor matrix before comparison: it must be positive
/// definite and not hopelessly ill-conditioned. Matrices whose smallest
/// eigenvalue sits below 1e-3 are rescaled by a decade step (distances are
/// scale-minimized, so this is free) or rejected if three decades are not
/// enough.
pub fn sanitize(m: &CMat) -> Result<CMat> {
    let eigs = m.hermitian_eigenvalues();
    let (min, max) = (eigs[0], eigs[eigs.len() - 1]);
    if min <= 0.0 {
        return Err(Error::NonPd(min));
    }
    if min / max < 1e-12 {
        return Err(Error::IllConditioned(min / max));
    }
    if min >= 1e-3 {
        return Ok(m.clone());
    }
    for decades in 1..=3 {
        let factor = 10f64.powi(decades);
        if min * factor >= 1e-3 {
            log::warn!("rescaling a weak descriptor by 1e{decades} before comparison");
            return Ok(m.scale(factor));
        }
    }
    Err(Error::IllConditioned(min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_pd(rng: &mut ChaCha8Rng, n: usize) -> CMat {
        let mut g = CMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                g[(i, j)] = c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            }
        }
        let mut a = g.mul(&g.adjoint());
        for i in 0..n {
            a[(i, i)] += 1.0;
        }
        a
    }

    #[test]
    fn identity_versus_exponential_spread() {
        let m1 = CMat::identity(3);
        let e = std::f64::consts::E;
        let m2 = CMat::diagonal(&[e, 1.0, 1.0 / e]);
        // log η = (−1, 0, 1), k = 1 ⇒ distance √2
        let d = raw_distance(&m1, &m2).unwrap();
        assert!((d - 2.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn pure_scaling_at_level_two() {
        let m1 = CMat::identity(5);
        let m2 = m1.scale(std::f64::consts::E);
        // log η = 1 five times, k = 2 ⇒ 2^{-3/2}·√5
        let d = raw_distance(&m1, &m2).unwrap();
        assert!((d - 5.0f64.sqrt() / 8.0f64.sqrt()).abs() < 1e-12);
        // and the scale optimum removes it entirely
        assert!(scaled_distance(&m1, &m2).unwrap() < 1e-12);
    }

    #[test]
    fn scale_optimum_inverts_a_known_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_pd(&mut rng, 3);
        let p = scale_optimum(&m, &m.scale(2.0)).unwrap();
        assert!((p + 2.0f64.ln()).abs() < 1e-10, "p(M,2M) = −log 2, got {p}");
        assert!(scaled_distance(&m, &m.scale(2.7)).unwrap() < 1e-10);
    }

    #[test]
    fn rep_of_a_diagonal_mobius_is_diagonal() {
        let t = 1.7;
        let g = MobiusMap {
            a: c(t, 0.0),
            b: c(0.0, 0.0),
            c: c(0.0, 0.0),
            d: c(1.0 / t, 0.0),
        };
        let rep = sym_power_rep(&g, 1);
        let expect = [1.0 / (t * t), 1.0, t * t];
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { expect[i] } else { 0.0 };
                assert!((rep[(i, j)] - c(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn rep_reverses_composition() {
        // coefficient matrices compose contravariantly: ϑ(g∘h) = ϑ(h)·ϑ(g)
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..30 {
            let mut sample = || {
                MobiusMap::new(
                    c(rng.gen::<f64>() + 0.5, rng.gen::<f64>() - 0.5),
                    c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5),
                    c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5),
                    c(rng.gen::<f64>() + 0.5, rng.gen::<f64>() - 0.5),
                )
                .unwrap()
            };
            let g = sample();
            let h = sample();
            for k in [1u32, 2] {
                let lhs = sym_power_rep(&g.compose(&h), k);
                let rhs = sym_power_rep(&h, k).mul(&sym_power_rep(&g, k));
                let scale = lhs.max_abs();
                for i in 0..lhs.n() {
                    for j in 0..lhs.n() {
                        assert!(
                            (lhs[(i, j)] - rhs[(i, j)]).norm() < 1e-10 * scale,
                            "composition mismatch at k={k}, ({i},{j})"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn conjugated_diagonal_pairs_follow_the_log_ratio_formula() {
        // when M1 and M2 share an eigenbasis, the generalized eigenvalues
        // are the diagonal ratios, so the distance has a closed form
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..15 {
            let n = 2 * rng.gen_range(1..=2usize) + 1;
            let d1: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..5.0)).collect();
            let d2: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..5.0)).collect();

            // random unitary as a product of complex Givens rotations
            let mut u = CMat::identity(n);
            for p in 0..n {
                for q in (p + 1)..n {
                    let t = rng.gen_range(0.0..std::f64::consts::PI);
                    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
                    let mut giv = CMat::identity(n);
                    giv[(p, p)] = c(t.cos(), 0.0);
                    giv[(q, q)] = c(t.cos(), 0.0);
                    giv[(p, q)] = c(0.0, phase).exp() * t.sin();
                    giv[(q, p)] = -(c(0.0, -phase).exp() * t.sin());
                    u = u.mul(&giv);
                }
            }
            let conj = |d: &[f64]| {
                let mut m = u.mul(&CMat::diagonal(d)).mul(&u.adjoint());
                m.hermitize();
                m
            };
            let (m1, m2) = (conj(&d1), conj(&d2));
            let k = ((n - 1) / 2) as f64;
            let expect = d1
                .iter()
                .zip(&d2)
                .map(|(a, b)| (b / a).ln().powi(2))
                .sum::<f64>()
                .sqrt()
                / k.powf(1.5);
            let got = raw_distance(&m1, &m2).unwrap();
            assert!(
                (got - expect).abs() < 1e-8 * (1.0 + expect),
                "closed form {expect} vs computed {got}"
            );
        }
    }

    #[test]
    fn alignment_recovers_a_mobius_orbit() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let m = random_pd(&mut rng, 3);
        let x_true = [1.0, 0.02, 0.05, -0.03, 0.04, 0.01];
        let g = params_to_mobius(&x_true).unwrap();
        let m2 = apply_rep(&m, &g, 1).scale(1.8);

        let raw = raw_distance(&m, &m2).unwrap();
        let aligned = min_distance(&m, &m2, &AlignOptions::default()).unwrap();
        assert!(
            aligned.distance < 1e-2,
            "orbit should be recovered, distance {}",
            aligned.distance
        );
        assert!(aligned.distance < 0.1 * raw, "alignment must beat raw ({raw})");

        let powell = min_distance(
            &m,
            &m2,
            &AlignOptions {
                minimizer: Minimizer::Powell,
                ..AlignOptions::default()
            },
        )
        .unwrap();
        assert!(powell.distance < 1e-2, "Powell distance {}", powell.distance);
    }

    #[test]
    fn warm_starts_shortcut_the_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = random_pd(&mut rng, 3);
        let x_true = [1.05, -0.04, 0.08, 0.02, -0.06, 0.03];
        let g = params_to_mobius(&x_true).unwrap();
        let m2 = apply_rep(&m, &g, 1);

        // the true inverse alignment parameters seed the search
        let inv = g.inverse();
        let seed = [inv.a.re, inv.a.im, inv.b.re, inv.b.im, inv.c.re, inv.c.im];
        let aligned = min_distance(
            &m,
            &m2,
            &AlignOptions {
                warm_start: Some(seed),
                ..AlignOptions::default()
            },
        )
        .unwrap();
        assert!(aligned.distance < 1e-4, "distance {}", aligned.distance);
        assert!(aligned.converged);
    }

    #[test]
    fn mismatched_levels_are_rejected() {
        let m1 = CMat::identity(3);
        let m2 = CMat::identity(5);
        assert!(matches!(
            raw_distance(&m1, &m2),
            Err(Error::OrderMismatch(3, 5))
        ));
        assert!(matches!(
            min_distance(&m1, &m2, &AlignOptions::default()),
            Err(Error::OrderMismatch(3, 5))
        ));
    }

    #[test]
    fn sanitize_applies_the_decade_ladder() {
        let ok = CMat::diagonal(&[2.0, 1.0, 0.5]);
        assert_eq!(sanitize(&ok).unwrap(), ok);

        let weak = CMat::diagonal(&[3e-5, 2e-5, 1e-5]);
        let fixed = sanitize(&weak).unwrap();
        let eigs = fixed.hermitian_eigenvalues();
        assert!((eigs[0] - 1e-3).abs() < 1e-15, "1e-5 × 100 = 1e-3");

        let negative = CMat::diagonal(&[1.0, -0.1, 2.0]);
        assert!(matches!(sanitize(&negative), Err(Error::NonPd(_))));

        let skewed = CMat::diagonal(&[1.0, 1.0, 1e-14]);
        assert!(matches!(sanitize(&skewed), Err(Error::IllConditioned(_))));

        let hopeless = CMat::diagonal(&[1e-7, 2e-7, 3e-7]);
        assert!(matches!(sanitize(&hopeless), Err(Error::IllConditioned(_))));
    }
}
