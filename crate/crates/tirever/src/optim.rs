//! Derivative-free simplex search refined by a quasi-Newton stage.
//!
//! Objectives are minimized and may return `f64::INFINITY` to encode hard
//! constraints (the likelihood layer uses that for the root-margin penalty);
//! both stages treat non-finite values as "worse than anything finite" and
//! never step through them.

/// Outcome of a minimization stage.
#[derive(Debug, Clone)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub converged: bool,
    pub evals: usize,
}

fn better(a: f64, b: f64) -> bool {
    // Total order with NaN treated as +infinity.
    match (a.is_nan(), b.is_nan()) {
        (true, _) => false,
        (false, true) => true,
        (false, false) => a < b,
    }
}

/// Nelder-Mead simplex minimization.
///
/// `steps` sets the initial simplex spread per coordinate. Terminates when the
/// function spread across the simplex falls below `ftol` (absolute plus
/// relative) or after `max_evals` objective calls.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    steps: &[f64],
    ftol: f64,
    max_evals: usize,
) -> OptimResult {
    let n = x0.len();
    assert_eq!(steps.len(), n, "one initial step per coordinate");
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    // simplex[i] = (f, x)
    let mut simplex: Vec<(f64, Vec<f64>)> = Vec::with_capacity(n + 1);
    let f0 = eval(x0, &mut evals);
    simplex.push((f0, x0.to_vec()));
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += steps[i];
        let fv = eval(&v, &mut evals);
        simplex.push((fv, v));
    }

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut converged = false;

    while evals < max_evals {
        simplex.sort_by(|a, b| a.0.total_cmp(&b.0));
        let best = simplex[0].0;
        let worst = simplex[n].0;
        if worst.is_finite() && (worst - best).abs() <= ftol * (1.0 + best.abs()) {
            converged = true;
            break;
        }

        // Centroid of all but the worst vertex.
        let mut centroid = vec![0.0; n];
        for (_, x) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi;
            }
        }
        for c in centroid.iter_mut() {
            *c /= n as f64;
        }

        let reflect: Vec<f64> = centroid
            .iter()
            .zip(&simplex[n].1)
            .map(|(c, w)| c + alpha * (c - w))
            .collect();
        let f_reflect = eval(&reflect, &mut evals);

        if better(f_reflect, simplex[0].0) {
            // Try to expand past the reflection.
            let expand: Vec<f64> = centroid
                .iter()
                .zip(&reflect)
                .map(|(c, r)| c + gamma * (r - c))
                .collect();
            let f_expand = eval(&expand, &mut evals);
            simplex[n] = if better(f_expand, f_reflect) {
                (f_expand, expand)
            } else {
                (f_reflect, reflect)
            };
            continue;
        }
        if better(f_reflect, simplex[n - 1].0) {
            simplex[n] = (f_reflect, reflect);
            continue;
        }

        // Contract toward the centroid, from the better of worst/reflected.
        let (f_base, base) = if better(f_reflect, simplex[n].0) {
            (f_reflect, &reflect)
        } else {
            (simplex[n].0, &simplex[n].1)
        };
        let contract: Vec<f64> = centroid
            .iter()
            .zip(base)
            .map(|(c, b)| c + rho * (b - c))
            .collect();
        let f_contract = eval(&contract, &mut evals);
        if better(f_contract, f_base) {
            simplex[n] = (f_contract, contract);
            continue;
        }

        // Shrink toward the best vertex.
        let best_x = simplex[0].1.clone();
        for (fv, x) in simplex.iter_mut().skip(1) {
            for (xi, bi) in x.iter_mut().zip(&best_x) {
                *xi = bi + sigma * (*xi - bi);
            }
            *fv = eval(x, &mut evals);
        }
    }

    simplex.sort_by(|a, b| a.0.total_cmp(&b.0));
    OptimResult {
        x: simplex[0].1.clone(),
        f: simplex[0].0,
        converged,
        evals,
    }
}

/// Central finite-difference gradient with per-coordinate relative step.
/// Coordinates whose difference quotient is non-finite are retried with a
/// smaller step and zeroed as flat if that fails (the caller sits next to a
/// constraint boundary there).
pub fn grad_central<F: FnMut(&[f64]) -> f64>(f: &mut F, x: &[f64], rel_step: f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut xw = x.to_vec();
    for i in 0..x.len() {
        let mut h = rel_step * x[i].abs().max(1.0);
        let mut ok = false;
        for _ in 0..3 {
            xw[i] = x[i] + h;
            let fp = f(&xw);
            xw[i] = x[i] - h;
            let fm = f(&xw);
            xw[i] = x[i];
            let d = (fp - fm) / (2.0 * h);
            if d.is_finite() {
                g[i] = d;
                ok = true;
                break;
            }
            h *= 0.1;
        }
        if !ok {
            g[i] = 0.0;
        }
    }
    g
}

/// BFGS with finite-difference gradients and Armijo backtracking.
pub fn bfgs<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    gtol: f64,
    max_iters: usize,
) -> OptimResult {
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut x = x0.to_vec();
    let mut fx = eval(&x, &mut evals);
    if !fx.is_finite() {
        return OptimResult {
            x,
            f: fx,
            converged: false,
            evals,
        };
    }
    let grad_step = 1e-6;
    let mut g = {
        let mut gf = |y: &[f64]| eval(y, &mut evals);
        grad_central(&mut gf, &x, grad_step)
    };

    // Inverse Hessian approximation, dense row-major.
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = 1.0;
    }
    let mut converged = false;

    for _ in 0..max_iters {
        let gnorm = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if gnorm <= gtol * (1.0 + fx.abs()) {
            converged = true;
            break;
        }

        // d = -H g
        let mut d = vec![0.0; n];
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += h[i * n + j] * g[j];
            }
            d[i] = -acc;
        }
        let mut slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if !(slope < 0.0) {
            // Reset to steepest descent if the approximation degenerated.
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] = if i == j { 1.0 } else { 0.0 };
                }
            }
            for (di, gi) in d.iter_mut().zip(&g) {
                *di = -gi;
            }
            slope = -g.iter().map(|v| v * v).sum::<f64>();
            if slope == 0.0 {
                converged = true;
                break;
            }
        }

        // Backtracking line search.
        let mut t = 1.0;
        let mut accepted = false;
        let mut xn = x.clone();
        let mut fn_ = fx;
        for _ in 0..45 {
            for i in 0..n {
                xn[i] = x[i] + t * d[i];
            }
            fn_ = eval(&xn, &mut evals);
            if fn_.is_finite() && fn_ <= fx + 1e-4 * t * slope {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // No finite descent along d; declare convergence only if the
            // gradient is already small.
            converged = gnorm <= 1e2 * gtol * (1.0 + fx.abs());
            break;
        }

        let gn = {
            let mut gf = |y: &[f64]| eval(y, &mut evals);
            grad_central(&mut gf, &xn, grad_step)
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&yv).map(|(a, b)| a * b).sum();
        let s_norm: f64 = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        let y_norm: f64 = yv.iter().map(|v| v * v).sum::<f64>().sqrt();
        if sy > 1e-12 * s_norm * y_norm {
            // H <- (I - rho s y') H (I - rho y s') + rho s s'
            let rho = 1.0 / sy;
            let mut hy = vec![0.0; n];
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += h[i * n + j] * yv[j];
                }
                hy[i] = acc;
            }
            let yhy: f64 = yv.iter().zip(&hy).map(|(a, b)| a * b).sum();
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] += -rho * (s[i] * hy[j] + hy[i] * s[j])
                        + rho * rho * yhy * s[i] * s[j]
                        + rho * s[i] * s[j];
                }
            }
        }
        x = xn;
        fx = fn_;
        g = gn;
    }

    OptimResult {
        x,
        f: fx,
        converged,
        evals,
    }
}

/// Simplex search followed by quasi-Newton refinement; returns the better of
/// the two stage results.
pub fn minimize<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    steps: &[f64],
    max_nm_evals: usize,
) -> OptimResult {
    let nm = nelder_mead(&mut f, x0, steps, 1e-9, max_nm_evals);
    if !nm.f.is_finite() {
        return nm;
    }
    let qn = bfgs(&mut f, &nm.x, 1e-6, 120);
    if better(qn.f, nm.f) {
        OptimResult {
            evals: nm.evals + qn.evals,
            ..qn
        }
    } else {
        OptimResult {
            converged: nm.converged || qn.converged,
            evals: nm.evals + qn.evals,
            ..nm
        }
    }
}
