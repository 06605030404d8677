//! BFGS minimization with a strong-Wolfe line search, plus the
//! gradient-based numerical Hessian used for standard errors.
//!
//! The search works on plain unconstrained coordinates; callers that need
//! constraints are expected to reparameterize before calling in.

use nalgebra::{DMatrix, DVector};

const WOLFE_C1: f64 = 1e-4;
const WOLFE_C2: f64 = 0.9;
const MAX_LINE_SEARCH: usize = 25;
const MAX_ZOOM: usize = 40;

#[derive(Debug, Clone, Copy)]
pub(crate) struct BfgsOptions {
    /// Infinity-norm gradient threshold.
    pub gradient_tolerance: f64,
    /// Relative objective change counted as a stall.
    pub value_stall_tolerance: f64,
    /// Consecutive stalled iterations accepted as convergence.
    pub stall_iterations: usize,
    pub max_iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum StopReason {
    GradientNorm,
    ValueStall,
    MaxIterations,
    LineSearchFailed,
}

#[derive(Debug, Clone)]
pub(crate) struct BfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub reason: StopReason,
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Minimizes `f` from `x0`. The objective may return a non-finite value for
/// points it cannot evaluate; the line search backs away from those.
pub(crate) fn minimize<F>(mut f: F, x0: &[f64], opts: &BfgsOptions) -> BfgsOutcome
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let (mut fx, gx) = f(x.as_slice());
    let mut g = DVector::from_vec(gx);
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut first_update = true;
    let mut stall_count = 0usize;
    let mut iterations = 0usize;

    if !fx.is_finite() {
        return BfgsOutcome {
            x: x.as_slice().to_vec(),
            value: fx,
            gradient_norm: inf_norm(&g),
            iterations: 0,
            converged: false,
            reason: StopReason::LineSearchFailed,
        };
    }

    loop {
        let grad_norm = inf_norm(&g);
        if grad_norm < opts.gradient_tolerance {
            return BfgsOutcome {
                x: x.as_slice().to_vec(),
                value: fx,
                gradient_norm: grad_norm,
                iterations,
                converged: true,
                reason: StopReason::GradientNorm,
            };
        }
        if iterations >= opts.max_iterations {
            return BfgsOutcome {
                x: x.as_slice().to_vec(),
                value: fx,
                gradient_norm: grad_norm,
                iterations,
                converged: false,
                reason: StopReason::MaxIterations,
            };
        }

        let mut direction = -(&h * &g);
        let mut descent = direction.dot(&g);
        if !(descent < 0.0) || !descent.is_finite() {
            // Stale curvature information; restart from steepest descent.
            h = DMatrix::identity(n, n);
            first_update = true;
            direction = -g.clone();
            descent = direction.dot(&g);
        }

        let search = line_search(&mut f, &x, fx, &direction, descent);
        let (alpha, f_new, g_new) = match search {
            Some(hit) => hit,
            None => {
                if first_update {
                    return BfgsOutcome {
                        x: x.as_slice().to_vec(),
                        value: fx,
                        gradient_norm: grad_norm,
                        iterations,
                        converged: false,
                        reason: StopReason::LineSearchFailed,
                    };
                }
                // Retry once along steepest descent before giving up.
                h = DMatrix::identity(n, n);
                first_update = true;
                continue;
            }
        };

        let step = alpha * &direction;
        let x_new = &x + &step;
        let y = &g_new - &g;
        let sy = step.dot(&y);
        if sy > 1e-12 * step.norm() * y.norm() {
            if first_update {
                // Scale the initial inverse Hessian to the observed curvature.
                let yy = y.dot(&y);
                if yy > 0.0 {
                    h = DMatrix::identity(n, n) * (sy / yy);
                }
                first_update = false;
            }
            let rho = 1.0 / sy;
            // H <- (I - rho s y') H (I - rho y s') + rho s s'
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            let ss = &step * step.transpose();
            let hy_s = &hy * step.transpose();
            h += (rho * rho * yhy + rho) * &ss - rho * (&hy_s + hy_s.transpose());
        }

        // A stalled iteration only counts toward convergence near a
        // stationary point; elsewhere slow progress keeps iterating.
        let rel_change = (fx - f_new).abs() / f_new.abs().max(1.0);
        let near_stationary = inf_norm(&g_new) < opts.gradient_tolerance.sqrt();
        if rel_change < opts.value_stall_tolerance && near_stationary {
            stall_count += 1;
        } else {
            stall_count = 0;
        }
        x = x_new;
        fx = f_new;
        g = g_new;
        iterations += 1;

        if stall_count >= opts.stall_iterations {
            return BfgsOutcome {
                x: x.as_slice().to_vec(),
                value: fx,
                gradient_norm: inf_norm(&g),
                iterations,
                converged: true,
                reason: StopReason::ValueStall,
            };
        }
    }
}

// Strong-Wolfe line search (bracket then zoom). Returns (alpha, f, grad).
fn line_search<F>(
    f: &mut F,
    x: &DVector<f64>,
    f0: f64,
    direction: &DVector<f64>,
    dphi0: f64,
) -> Option<(f64, f64, DVector<f64>)>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let mut eval = |alpha: f64| {
        let point = x + alpha * direction;
        let (value, grad) = f(point.as_slice());
        let grad = DVector::from_vec(grad);
        let slope = grad.dot(direction);
        (value, grad, slope)
    };

    let mut alpha_prev = 0.0f64;
    let mut phi_prev = f0;
    let mut alpha = 1.0f64;
    for iter in 0..MAX_LINE_SEARCH {
        let (phi, grad, slope) = eval(alpha);
        if !phi.is_finite() {
            // Stepped outside the evaluable region; bring the trial back.
            alpha = alpha_prev + 0.5 * (alpha - alpha_prev);
            continue;
        }
        if phi > f0 + WOLFE_C1 * alpha * dphi0 || (iter > 0 && phi >= phi_prev) {
            return zoom(&mut eval, f0, dphi0, alpha_prev, phi_prev, alpha);
        }
        if slope.abs() <= -WOLFE_C2 * dphi0 {
            return Some((alpha, phi, grad));
        }
        if slope >= 0.0 {
            return zoom(&mut eval, f0, dphi0, alpha, phi, alpha_prev);
        }
        alpha_prev = alpha;
        phi_prev = phi;
        alpha *= 2.0;
    }
    None
}

fn zoom<E>(
    eval: &mut E,
    f0: f64,
    dphi0: f64,
    mut alpha_lo: f64,
    mut phi_lo: f64,
    mut alpha_hi: f64,
) -> Option<(f64, f64, DVector<f64>)>
where
    E: FnMut(f64) -> (f64, DVector<f64>, f64),
{
    for _ in 0..MAX_ZOOM {
        let alpha = 0.5 * (alpha_lo + alpha_hi);
        if (alpha_hi - alpha_lo).abs() < 1e-16 * alpha_lo.abs().max(1.0) {
            break;
        }
        let (phi, grad, slope) = eval(alpha);
        if !phi.is_finite() || phi > f0 + WOLFE_C1 * alpha * dphi0 || phi >= phi_lo {
            alpha_hi = alpha;
        } else {
            if slope.abs() <= -WOLFE_C2 * dphi0 {
                return Some((alpha, phi, grad));
            }
            if slope * (alpha_hi - alpha_lo) >= 0.0 {
                alpha_hi = alpha_lo;
            }
            alpha_lo = alpha;
            phi_lo = phi;
        }
    }
    // No strong-Wolfe point found; accept any strict improvement.
    if phi_lo < f0 && alpha_lo > 0.0 {
        let (phi, grad, _) = eval(alpha_lo);
        if phi.is_finite() && phi < f0 {
            return Some((alpha_lo, phi, grad));
        }
    }
    None
}

/// Central-difference Jacobian of `grad`, symmetrized as (H + H')/2.
/// `boundary_distance` caps each coordinate's step so probe points stay
/// inside the feasible region; `f64::INFINITY` means unbounded.
pub(crate) fn numerical_hessian_from_gradient<G>(
    mut grad: G,
    x: &[f64],
    rel_step: f64,
    boundary_distance: impl Fn(usize) -> f64,
) -> DMatrix<f64>
where
    G: FnMut(&[f64]) -> Vec<f64>,
{
    let n = x.len();
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let mut h = rel_step * x[k].abs().max(1.0);
        let cap = boundary_distance(k);
        if cap.is_finite() {
            h = h.min(0.45 * cap);
        }
        let mut hi = x.to_vec();
        let mut lo = x.to_vec();
        hi[k] += h;
        lo[k] -= h;
        let ghi = grad(&hi);
        let glo = grad(&lo);
        for j in 0..n {
            jac[(j, k)] = (ghi[j] - glo[j]) / (2.0 * h);
        }
    }
    let transposed = jac.transpose();
    (jac + transposed) * 0.5
}
