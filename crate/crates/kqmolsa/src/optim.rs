//! Derivative-free minimizers for the Möbius alignment search.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Minimizer {
    NelderMead,
    Powell,
}

impl std::str::FromStr for Minimizer {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "nelder-mead" | "neldermead" | "nm" => Ok(Minimizer::NelderMead),
            "powell" => Ok(Minimizer::Powell),
            other => Err(format!("unknown minimizer '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OptimOptions {
    pub max_iters: usize,
    /// Absolute spread of objective values at which the search stops.
    pub tolerance: f64,
    /// Initial displacement used to seed the simplex / line searches.
    pub step: f64,
}

impl Default for OptimOptions {
    fn default() -> Self {
        OptimOptions {
            max_iters: 2000,
            tolerance: 1e-8,
            step: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn minimize(
    f: &dyn Fn(&[f64]) -> f64,
    x0: &[f64],
    method: Minimizer,
    opts: &OptimOptions,
) -> OptimResult {
    match method {
        Minimizer::NelderMead => nelder_mead(f, x0, opts),
        Minimizer::Powell => powell(f, x0, opts),
    }
}

fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], opts: &OptimOptions) -> OptimResult {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += opts.step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    let lincomb = |a: &[f64], wa: f64, b: &[f64], wb: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| wa * x + wb * y).collect()
    };

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iters {
        iterations += 1;
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
        let (best, second_worst, worst) = (idx[0], idx[n - 1], idx[n]);
        if values[worst] - values[best] < opts.tolerance {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; n];
        for &i in idx.iter().take(n) {
            for (c, x) in centroid.iter_mut().zip(&simplex[i]) {
                *c += x / n as f64;
            }
        }

        let reflected = lincomb(&centroid, 2.0, &simplex[worst], -1.0);
        let fr = f(&reflected);
        if fr < values[best] {
            let expanded = lincomb(&centroid, 3.0, &simplex[worst], -2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
            continue;
        }
        if fr < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = fr;
            continue;
        }
        let contracted = if fr < values[worst] {
            lincomb(&centroid, 1.5, &simplex[worst], -0.5)
        } else {
            lincomb(&centroid, 0.5, &simplex[worst], 0.5)
        };
        let fc = f(&contracted);
        if fc < values[worst].min(fr) {
            simplex[worst] = contracted;
            values[worst] = fc;
            continue;
        }
        // shrink toward the best vertex
        let anchor = simplex[best].clone();
        for i in 0..=n {
            if i == best {
                continue;
            }
            simplex[i] = lincomb(&anchor, 0.5, &simplex[i], 0.5);
            values[i] = f(&simplex[i]);
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap();
    OptimResult {
        x: simplex[best].clone(),
        value: values[best],
        iterations,
        converged,
    }
}

fn powell(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], opts: &OptimOptions) -> OptimResult {
    let n = x0.len();
    let mut dirs: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut d = vec![0.0; n];
            d[i] = 1.0;
            d
        })
        .collect();
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iters {
        iterations += 1;
        let x_start = x.clone();
        let f_start = fx;
        let mut biggest_drop = 0.0;
        let mut biggest_idx = 0;
        for (i, dir) in dirs.iter().enumerate() {
            let (t, ft) = line_minimum(f, &x, dir, opts.step);
            if fx - ft > biggest_drop {
                biggest_drop = fx - ft;
                biggest_idx = i;
            }
            for (xi, di) in x.iter_mut().zip(dir) {
                *xi += t * di;
            }
            fx = ft;
        }
        if f_start - fx < opts.tolerance {
            converged = true;
            break;
        }
        let net: Vec<f64> = x.iter().zip(&x_start).map(|(a, b)| a - b).collect();
        if net.iter().map(|v| v * v).sum::<f64>().sqrt() > 1e-14 {
            dirs.remove(biggest_idx);
            dirs.push(net.clone());
            let (t, ft) = line_minimum(f, &x, &net, opts.step);
            for (xi, di) in x.iter_mut().zip(&net) {
                *xi += t * di;
            }
            fx = ft;
        }
    }

    OptimResult {
        x,
        value: fx,
        iterations,
        converged,
    }
}

/// Brackets a minimum along `x + t·dir` and refines it by golden-section.
fn line_minimum(f: &dyn Fn(&[f64]) -> f64, x: &[f64], dir: &[f64], step: f64) -> (f64, f64) {
    let eval = |t: f64| -> f64 {
        let point: Vec<f64> = x.iter().zip(dir).map(|(xi, di)| xi + t * di).collect();
        f(&point)
    };
    let f0 = eval(0.0);
    let mut a = 0.0;
    let mut fa = f0;
    let mut b = step;
    let mut fb = eval(b);
    if fb > fa {
        b = -step;
        fb = eval(b);
        if fb > fa {
            // 0 already sits between two rises: refine inside [-step, step]
            return golden(&eval, -step, step, 0.0, f0);
        }
    }
    // expand until the function turns upward
    let mut c = b * 2.0;
    let mut fc = eval(c);
    let mut guard = 0;
    while fc < fb && guard < 60 {
        a = b;
        fa = fb;
        b = c;
        fb = fc;
        c *= 2.0;
        fc = eval(c);
        guard += 1;
    }
    let _ = fa;
    let (lo, hi) = if a < c { (a, c) } else { (c, a) };
    let (t_known, f_known) = if fb < f0 { (b, fb) } else { (0.0, f0) };
    golden(&eval, lo, hi, t_known, f_known)
}

fn golden(
    eval: &dyn Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    t_known: f64,
    f_known: f64,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut m1 = hi - INV_PHI * (hi - lo);
    let mut m2 = lo + INV_PHI * (hi - lo);
    let mut f1 = eval(m1);
    let mut f2 = eval(m2);
    for _ in 0..80 {
        if (hi - lo).abs() < 1e-12 * (1.0 + lo.abs() + hi.abs()) {
            break;
        }
        if f1 < f2 {
            hi = m2;
            m2 = m1;
            f2 = f1;
            m1 = hi - INV_PHI * (hi - lo);
            f1 = eval(m1);
        } else {
            lo = m1;
            m1 = m2;
            f1 = f2;
            m2 = lo + INV_PHI * (hi - lo);
            f2 = eval(m2);
        }
    }
    let (t, ft) = if f1 < f2 { (m1, f1) } else { (m2, f2) };
    if ft <= f_known {
        (t, ft)
    } else {
        (t_known, f_known)
    }
}
