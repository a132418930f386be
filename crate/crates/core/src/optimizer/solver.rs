//! Trust-region Newton conjugate-gradient minimisation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Execution};

/// A smooth scalar function of a parameter vector.
pub trait Objective: Sync {
    fn dim(&self) -> usize;

    /// Value only; may return a non-finite number for invalid points.
    fn value(&self, x: &DVector<f64>) -> f64;

    fn gradient(&self, x: &DVector<f64>) -> (f64, DVector<f64>);

    /// Curvature model at `x`. `None` makes the solver build a BFGS
    /// approximation instead.
    fn hessian(&self, _x: &DVector<f64>) -> Option<DMatrix<f64>> {
        None
    }

    /// Value, gradient and curvature together; override when they share work.
    fn derivatives(&self, x: &DVector<f64>) -> (f64, DVector<f64>, Option<DMatrix<f64>>) {
        let (f, g) = self.gradient(x);
        (f, g, self.hessian(x))
    }
}

/// Wraps closures as an [`Objective`].
pub struct FnObjective<F, G, H = fn(&DVector<f64>) -> DMatrix<f64>> {
    pub dim: usize,
    pub value: F,
    pub gradient: G,
    pub hessian: Option<H>,
}

impl<F, G> FnObjective<F, G>
where
    F: Fn(&DVector<f64>) -> f64 + Sync,
    G: Fn(&DVector<f64>) -> DVector<f64> + Sync,
{
    pub fn new(dim: usize, value: F, gradient: G) -> Self {
        FnObjective {
            dim,
            value,
            gradient,
            hessian: None,
        }
    }
}

impl<F, G, H> FnObjective<F, G, H>
where
    F: Fn(&DVector<f64>) -> f64 + Sync,
    G: Fn(&DVector<f64>) -> DVector<f64> + Sync,
    H: Fn(&DVector<f64>) -> DMatrix<f64> + Sync,
{
    pub fn with_hessian(dim: usize, value: F, gradient: G, hessian: H) -> Self {
        FnObjective {
            dim,
            value,
            gradient,
            hessian: Some(hessian),
        }
    }
}

impl<F, G, H> Objective for FnObjective<F, G, H>
where
    F: Fn(&DVector<f64>) -> f64 + Sync,
    G: Fn(&DVector<f64>) -> DVector<f64> + Sync,
    H: Fn(&DVector<f64>) -> DMatrix<f64> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        ((self.value)(x), (self.gradient)(x))
    }

    fn hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        self.hessian.as_ref().map(|h| h(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub max_iter: usize,
    pub grad_tol: f64,
    pub initial_radius: f64,
    pub max_radius: f64,
    /// Minimum ratio of actual to predicted reduction for accepting a step.
    pub eta: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iter: 100,
            grad_tol: 1e-6,
            initial_radius: 1.0,
            max_radius: 1e4,
            eta: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convergence {
    GradientNorm,
    StepSize,
    MaxIter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    /// Objective at the current iterate after this iteration.
    pub value: f64,
    pub radius: f64,
    pub step_norm: f64,
    pub ratio: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub initial_value: f64,
    pub final_value: f64,
    pub gradient_norm: f64,
    pub reason: Convergence,
    pub trace: Vec<TraceEntry>,
}

impl SolveReport {
    /// True when no accepted iterate increased the objective.
    pub fn is_monotone(&self) -> bool {
        let mut last = self.initial_value;
        for t in &self.trace {
            if t.value > last {
                return false;
            }
            last = t.value;
        }
        true
    }
}

/// Step length `τ ≥ 0` with `‖z + τ d‖ = radius`.
fn to_boundary(z: &DVector<f64>, d: &DVector<f64>, radius: f64) -> f64 {
    let a = d.dot(d);
    let b = 2.0 * z.dot(d);
    let c = z.dot(z) - radius * radius;
    let disc = (b * b - 4.0 * a * c).max(0.0);
    (-b + disc.sqrt()) / (2.0 * a)
}

/// Steihaug's truncated CG for `min gᵀp + ½ pᵀBp, ‖p‖ ≤ radius`.
/// Returns the step and whether it reached the boundary.
fn steihaug(b: &DMatrix<f64>, g: &DVector<f64>, radius: f64) -> (DVector<f64>, bool) {
    let n = g.len();
    let gnorm = g.norm();
    let tol = gnorm.sqrt().min(0.5) * gnorm;
    let mut z = DVector::zeros(n);
    let mut r = g.clone();
    let mut d = -g;
    let mut rr = r.dot(&r);
    for _ in 0..(2 * n).max(10) {
        let bd = b * &d;
        let dbd = d.dot(&bd);
        if dbd <= 0.0 {
            let tau = to_boundary(&z, &d, radius);
            return (z + d * tau, true);
        }
        let alpha = rr / dbd;
        let next = &z + &d * alpha;
        if next.norm() >= radius {
            let tau = to_boundary(&z, &d, radius);
            return (z + d * tau, true);
        }
        z = next;
        r += bd * alpha;
        let rr_next = r.dot(&r);
        if rr_next.sqrt() < tol {
            break;
        }
        d = -&r + d * (rr_next / rr);
        rr = rr_next;
    }
    (z, false)
}

/// Minimises `obj` from `x0`. Accepted iterates never increase the objective.
pub fn solve_trust_region_ncg(
    obj: &dyn Objective,
    x0: &DVector<f64>,
    opts: &SolverOptions,
) -> Result<(DVector<f64>, SolveReport)> {
    let n = x0.len();
    let mut x = x0.clone();
    let (mut f, mut g, hess) = obj.derivatives(&x);
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("objective at the starting point is {f}")));
    }
    let bfgs = hess.is_none();
    let mut b = hess.unwrap_or_else(|| DMatrix::identity(n, n));
    let mut bfgs_scaled = false;
    let mut radius = opts.initial_radius;
    let initial_value = f;
    let mut trace = Vec::new();
    let mut reason = Convergence::MaxIter;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        if g.norm() <= opts.grad_tol {
            reason = Convergence::GradientNorm;
            break;
        }
        iterations += 1;
        let (p, on_boundary) = steihaug(&b, &g, radius);
        let step_norm = p.norm();
        let predicted = -(g.dot(&p) + 0.5 * p.dot(&(&b * &p)));
        let trial = &x + &p;
        let f_trial = obj.value(&trial);
        let ratio = if predicted > 0.0 && f_trial.is_finite() {
            (f - f_trial) / predicted
        } else {
            f64::NEG_INFINITY
        };

        if ratio < 0.25 {
            radius = 0.25 * step_norm.min(radius);
        } else if ratio > 0.75 && on_boundary {
            radius = (2.0 * radius).min(opts.max_radius);
        }

        let accepted = ratio > opts.eta && f_trial <= f;
        if accepted {
            let decrease = f - f_trial;
            let (f_new, g_new, h_new) = obj.derivatives(&trial);
            if bfgs {
                let s = &p;
                let y = &g_new - &g;
                let sy = s.dot(&y);
                if sy > 1e-12 * s.norm() * y.norm() {
                    if !bfgs_scaled {
                        b = DMatrix::identity(n, n) * (y.dot(&y) / sy);
                        bfgs_scaled = true;
                    }
                    let bs = &b * s;
                    let sbs = s.dot(&bs);
                    b += &y * y.transpose() / sy - &bs * bs.transpose() / sbs;
                }
            } else if let Some(h) = h_new {
                b = h;
            }
            x = trial;
            f = f_new;
            g = g_new;
            trace.push(TraceEntry {
                iteration: iterations,
                value: f,
                radius,
                step_norm,
                ratio,
                accepted,
            });
            let tiny_step = step_norm <= 1e-14 * (1.0 + x.norm());
            let stalled = decrease <= 1e-16 * f.abs().max(1e-300);
            if tiny_step || stalled {
                reason = if g.norm() <= opts.grad_tol {
                    Convergence::GradientNorm
                } else {
                    Convergence::StepSize
                };
                break;
            }
        } else {
            trace.push(TraceEntry {
                iteration: iterations,
                value: f,
                radius,
                step_norm,
                ratio,
                accepted,
            });
        }
        if radius <= 1e-13 * (1.0 + x.norm()) {
            reason = Convergence::StepSize;
            break;
        }
    }
    if iterations >= opts.max_iter && reason == Convergence::MaxIter && g.norm() <= opts.grad_tol {
        reason = Convergence::GradientNorm;
    }
    let gradient_norm = g.norm();
    Ok((
        x,
        SolveReport {
            iterations,
            initial_value,
            final_value: f,
            gradient_norm,
            reason,
            trace,
        },
    ))
}

/// Largest deviation between the analytic gradient and central differences,
/// relative to the largest analytic gradient component.
pub fn check_gradient(obj: &dyn Objective, x: &DVector<f64>, eps: f64, exec: Execution) -> Result<f64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Invalid(format!("finite-difference step must be > 0, got {eps}")));
    }
    let (_, g) = obj.gradient(x);
    let numeric = par::map_range(exec, x.len(), |i| {
        let mut a = x.clone();
        let mut b = x.clone();
        a[i] += eps;
        b[i] -= eps;
        (obj.value(&a) - obj.value(&b)) / (2.0 * eps)
    });
    let scale = g.amax().max(f64::MIN_POSITIVE);
    let err = g
        .iter()
        .zip(&numeric)
        .map(|(a, n)| (a - n).abs())
        .fold(0.0, f64::max);
    if !err.is_finite() {
        return Err(Error::NonFinite("gradient check produced a non-finite difference".into()));
    }
    Ok(err / scale)
}
