//! Limited-memory BFGS ascent with a weak-Wolfe bisection line search.

use std::collections::VecDeque;
use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};

/// A smooth function to maximize.
pub trait Objective {
    fn dim(&self) -> usize;

    fn value_and_gradient(&self, weights: &[f64]) -> (f64, Vec<f64>);

    fn value(&self, weights: &[f64]) -> f64 {
        self.value_and_gradient(weights).0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    /// Number of curvature pairs kept.
    pub memory: usize,
    pub max_iterations: usize,
    /// Stop once ‖∇‖ ≤ tolerance · max(1, ‖w‖).
    pub gradient_tolerance: f64,
    /// Sufficient increase constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    pub max_line_search_trials: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            memory: 10,
            max_iterations: 200,
            gradient_tolerance: 1e-5,
            c1: 1e-4,
            c2: 0.9,
            max_line_search_trials: 50,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.memory == 0 {
            return Err(Error::InvalidConfig("L-BFGS memory must be at least 1".into()));
        }
        if !(self.gradient_tolerance > 0.0) {
            return Err(Error::InvalidConfig("gradient tolerance must be positive".into()));
        }
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(Error::InvalidConfig("Wolfe constants need 0 < c1 < c2 < 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub objective: f64,
    pub gradient_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Gradient norm below tolerance.
    Converged,
    /// Iteration cap reached first.
    MaxIterations,
    /// No representable increase left along the search direction.
    PrecisionLimit,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::Converged => "converged",
            Termination::MaxIterations => "max-iterations",
            Termination::PrecisionLimit => "precision-limit",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Optimum {
    pub weights: Vec<f64>,
    pub value: f64,
    pub trace: Vec<TraceEntry>,
    pub termination: Termination,
}

impl Optimum {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    /// `iteration<TAB>objective<TAB>gradnorm` per line.
    pub fn write_trace(&self, out: &mut impl Write) -> std::io::Result<()> {
        for e in &self.trace {
            writeln!(out, "{}\t{}\t{}", e.iteration, e.objective, e.gradient_norm)?;
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

/// Two-loop recursion: returns `H · grad` for the implicit inverse Hessian `H`
/// of the minimization problem.
fn two_loop(grad: &[f64], history: &VecDeque<Pair>) -> Vec<f64> {
    let mut q = grad.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for pair in history.iter().rev() {
        let a = pair.rho * dot(&pair.s, &q);
        q.iter_mut().zip(&pair.y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some(last) = history.back() {
        let gamma = dot(&last.s, &last.y) / dot(&last.y, &last.y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for (pair, a) in history.iter().zip(alphas.into_iter().rev()) {
        let b = pair.rho * dot(&pair.y, &q);
        q.iter_mut().zip(&pair.s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q
}

enum Search {
    Accepted { x: Vec<f64>, value: f64, grad: Vec<f64> },
    Failed,
}

/// Maximizes `objective` from `init`. Internally minimizes the negation.
pub fn maximize<O: Objective + ?Sized>(objective: &O, init: &[f64], cfg: &OptimizerConfig) -> Result<Optimum> {
    cfg.validate()?;
    if init.len() != objective.dim() {
        return Err(Error::FeatureSpaceMismatch(format!(
            "initial point has {} coordinates, objective {}",
            init.len(),
            objective.dim()
        )));
    }
    let eval = |x: &[f64], iteration: usize| -> Result<(f64, Vec<f64>)> {
        let (f, g) = objective.value_and_gradient(x);
        if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { iteration });
        }
        Ok((-f, g.into_iter().map(|v| -v).collect()))
    };

    let mut x = init.to_vec();
    let (mut phi, mut grad) = eval(&x, 0)?;
    let mut trace = vec![TraceEntry {
        iteration: 0,
        objective: -phi,
        gradient_norm: norm(&grad),
    }];
    let mut history: VecDeque<Pair> = VecDeque::with_capacity(cfg.memory);
    let mut termination = Termination::MaxIterations;

    for iteration in 1..=cfg.max_iterations {
        let gnorm = norm(&grad);
        if gnorm <= cfg.gradient_tolerance * norm(&x).max(1.0) {
            termination = Termination::Converged;
            break;
        }

        let mut direction: Vec<f64> = two_loop(&grad, &history).into_iter().map(|v| -v).collect();
        let mut slope = dot(&grad, &direction);
        let mut step = 1.0;
        if history.is_empty() || !(slope < 0.0) {
            history.clear();
            direction = grad.iter().map(|g| -g).collect();
            slope = -gnorm * gnorm;
            step = 1.0 / gnorm;
        }

        let mut outcome = line_search(&eval, &x, phi, &direction, slope, step, cfg, iteration)?;
        if matches!(outcome, Search::Failed) && !history.is_empty() {
            history.clear();
            direction = grad.iter().map(|g| -g).collect();
            slope = -gnorm * gnorm;
            outcome = line_search(&eval, &x, phi, &direction, slope, 1.0 / gnorm, cfg, iteration)?;
        }
        let (x_new, phi_new, grad_new) = match outcome {
            Search::Accepted { x, value, grad } => (x, value, grad),
            Search::Failed => {
                if -slope <= 1e-12 * phi.abs().max(1.0) {
                    termination = Termination::PrecisionLimit;
                    break;
                }
                return Err(Error::LineSearch {
                    iteration,
                    trials: cfg.max_line_search_trials,
                });
            }
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = grad_new.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            if history.len() == cfg.memory {
                history.pop_front();
            }
            history.push_back(Pair { s, y, rho: 1.0 / sy });
        }
        x = x_new;
        phi = phi_new;
        grad = grad_new;
        trace.push(TraceEntry {
            iteration,
            objective: -phi,
            gradient_norm: norm(&grad),
        });
    }
    if termination == Termination::MaxIterations
        && norm(&grad) <= cfg.gradient_tolerance * norm(&x).max(1.0)
    {
        termination = Termination::Converged;
    }

    Ok(Optimum {
        weights: x,
        value: -phi,
        trace,
        termination,
    })
}

/// Weak-Wolfe bisection: shrink on insufficient decrease, grow on
/// insufficient curvature.
#[allow(clippy::too_many_arguments)]
fn line_search<F>(
    eval: &F,
    x: &[f64],
    phi0: f64,
    direction: &[f64],
    slope0: f64,
    initial_step: f64,
    cfg: &OptimizerConfig,
    iteration: usize,
) -> Result<Search>
where
    F: Fn(&[f64], usize) -> Result<(f64, Vec<f64>)>,
{
    let mut step = initial_step;
    let mut lo = 0.0;
    let mut hi = f64::INFINITY;
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    for _ in 0..cfg.max_line_search_trials {
        let trial: Vec<f64> = x.iter().zip(direction).map(|(xi, di)| xi + step * di).collect();
        let (phi, grad) = eval(&trial, iteration)?;
        if phi > phi0 + cfg.c1 * step * slope0 {
            hi = step;
            step = 0.5 * (lo + hi);
            continue;
        }
        if dot(&grad, direction) < cfg.c2 * slope0 {
            if best.as_ref().is_none_or(|(b, _, _)| phi < *b) {
                best = Some((phi, trial, grad));
            }
            lo = step;
            step = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * step };
            continue;
        }
        return Ok(Search::Accepted {
            x: trial,
            value: phi,
            grad,
        });
    }
    // A sufficient-decrease point without the curvature condition still makes progress.
    Ok(match best {
        Some((value, x, grad)) if value < phi0 => Search::Accepted { x, value, grad },
        _ => Search::Failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic {
        centre: Vec<f64>,
        scale: Vec<f64>,
    }

    impl Objective for Quadratic {
        fn dim(&self) -> usize {
            self.centre.len()
        }

        fn value_and_gradient(&self, w: &[f64]) -> (f64, Vec<f64>) {
            let mut f = 0.0;
            let mut g = Vec::with_capacity(w.len());
            for ((wi, ci), si) in w.iter().zip(&self.centre).zip(&self.scale) {
                f -= si * (wi - ci) * (wi - ci);
                g.push(-2.0 * si * (wi - ci));
            }
            (f, g)
        }
    }

    #[test]
    fn one_dimensional_quadratic() {
        let q = Quadratic {
            centre: vec![3.0],
            scale: vec![1.0],
        };
        let cfg = OptimizerConfig {
            gradient_tolerance: 1e-9,
            ..Default::default()
        };
        let opt = maximize(&q, &[0.0], &cfg).unwrap();
        assert!(opt.converged());
        assert!((opt.weights[0] - 3.0).abs() < 1e-6);
    }

    #[test]
    fn ill_conditioned_quadratic_is_monotone() {
        let q = Quadratic {
            centre: vec![1.0, -2.0, 0.5, 4.0],
            scale: vec![1e-2, 1.0, 1e2, 1e4],
        };
        let opt = maximize(&q, &[0.0; 4], &OptimizerConfig::default()).unwrap();
        assert!(opt.converged());
        for pair in opt.trace.windows(2) {
            assert!(pair[1].objective >= pair[0].objective);
        }
        for (w, c) in opt.weights.iter().zip(&q.centre) {
            assert!((w - c).abs() < 1e-3);
        }
    }

    #[test]
    fn iteration_cap_is_reported() {
        let q = Quadratic {
            centre: vec![1.0, -2.0, 0.5, 4.0],
            scale: vec![1e-2, 1.0, 1e2, 1e4],
        };
        let cfg = OptimizerConfig {
            max_iterations: 1,
            ..Default::default()
        };
        let opt = maximize(&q, &[0.0; 4], &cfg).unwrap();
        assert_eq!(opt.termination, Termination::MaxIterations);
        assert_eq!(opt.trace.len(), 2);
    }

    struct Broken;

    impl Objective for Broken {
        fn dim(&self) -> usize {
            1
        }
        fn value_and_gradient(&self, w: &[f64]) -> (f64, Vec<f64>) {
            if w[0] > 0.5 {
                (f64::NAN, vec![f64::NAN])
            } else {
                (w[0], vec![1.0])
            }
        }
    }

    #[test]
    fn nan_is_an_error() {
        assert!(matches!(
            maximize(&Broken, &[0.0], &OptimizerConfig::default()),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn config_validation() {
        let bad = OptimizerConfig {
            memory: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = OptimizerConfig {
            c1: 0.95,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
