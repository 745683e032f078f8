use std::collections::VecDeque;
use std::fmt;
use std::time::{Duration, Instant};

use log::{debug, info};

use super::{ConstrainedProblem, SolverConfig};
use crate::error::{Error, Result};
use crate::integrability::max_violation;
use crate::sparse::{CholeskySolver, CscMatrix};
use crate::INFEASIBLE;

/// Iterate and multiplier state of the outer loop.
#[derive(Debug, Clone, PartialEq)]
pub struct AugLagState {
    /// Free variables.
    pub x: Vec<f64>,
    pub multipliers: Vec<f64>,
    pub penalty: f64,
    /// Constraint tolerance of the current outer iteration.
    pub eta: f64,
    /// Gradient tolerance of the current inner solve.
    pub omega: f64,
}

/// Value, gradient and Hessian of `L = E − λ·Q + μ/2 ‖Q‖²` in the free variables.
#[derive(Debug, Clone)]
pub struct LagrangianEval {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: Option<CscMatrix>,
    pub residual: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `L(x)` only; `INFEASIBLE` outside the domain.
pub fn lagrangian_value(problem: &ConstrainedProblem, x: &[f64], multipliers: &[f64], penalty: f64) -> f64 {
    let full = problem.layout().expand(x);
    if !problem.feasible(&full) {
        return INFEASIBLE;
    }
    let e = problem.objective().value(&full);
    if e >= INFEASIBLE || !e.is_finite() {
        return INFEASIBLE;
    }
    let q = problem.residual(&full);
    e - dot(multipliers, &q) + 0.5 * penalty * dot(&q, &q)
}

/// Evaluates the augmented Lagrangian. Outside the domain the value is the sentinel and the
/// derivatives are left empty.
pub fn augmented_lagrangian(
    problem: &ConstrainedProblem,
    x: &[f64],
    multipliers: &[f64],
    penalty: f64,
    with_hessian: bool,
) -> Result<LagrangianEval> {
    let layout = problem.layout();
    let full = layout.expand(x);
    let infeasible = || LagrangianEval {
        value: INFEASIBLE,
        gradient: Vec::new(),
        hessian: None,
        residual: Vec::new(),
    };
    if !problem.feasible(&full) {
        return Ok(infeasible());
    }
    let e = problem.objective().value(&full);
    if e >= INFEASIBLE || !e.is_finite() {
        return Ok(infeasible());
    }
    let q = problem.residual(&full);
    let value = e - dot(multipliers, &q) + 0.5 * penalty * dot(&q, &q);
    // Weights μQ − λ multiply both DQᵀ in the gradient and ∂²Q in the Hessian.
    let w: Vec<f64> = q.iter().zip(multipliers).map(|(qi, li)| penalty * qi - li).collect();
    let mut g = problem.objective().gradient(&full)?;
    for (gi, ci) in g.iter_mut().zip(problem.jacobian_transpose_mul(&full, &w)) {
        *gi += ci;
    }
    let hessian = if with_hessian {
        let objective = problem.objective().hessian(&full)?.to_csc();
        let constraints = problem.constraint_hessian(&full, &w, penalty);
        Some(layout.restrict_matrix(objective.add(&constraints)))
    } else {
        None
    };
    Ok(LagrangianEval {
        value,
        gradient: layout.restrict(&g),
        hessian,
        residual: q,
    })
}

/// Wall time per phase, accumulated over a solve.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimings {
    /// Lagrangian, gradient and Hessian assembly.
    pub evaluation: Duration,
    /// Factorization and triangular solves.
    pub solve: Duration,
    pub line_search: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxOuterIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub penalty_increases: usize,
    pub multiplier_updates: usize,
    /// Inner solves that ended because the line search could not make progress.
    pub inner_stalls: usize,
    pub constraint_violation: f64,
    pub gradient_norm: f64,
    pub objective: f64,
    pub final_penalty: f64,
    pub timings: PhaseTimings,
    /// Per outer iteration: `‖Q‖_∞` after the inner solve.
    pub violation_history: Vec<f64>,
    /// Iterations during which the gradient norm of the inner solves was recorded.
    pub newton_evaluations: usize,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    /// Mean evaluation time per Newton iteration.
    pub fn evaluation_per_iteration(&self) -> Duration {
        if self.newton_evaluations == 0 {
            Duration::ZERO
        } else {
            self.timings.evaluation / self.newton_evaluations as u32
        }
    }
}

impl fmt::Display for SolveReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = match self.status {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxOuterIterations => "max_outer_iterations",
        };
        writeln!(f, "status = {status}")?;
        writeln!(f, "outer_iterations = {}", self.outer_iterations)?;
        writeln!(f, "inner_iterations = {}", self.inner_iterations)?;
        writeln!(f, "penalty_increases = {}", self.penalty_increases)?;
        writeln!(f, "multiplier_updates = {}", self.multiplier_updates)?;
        writeln!(f, "inner_stalls = {}", self.inner_stalls)?;
        writeln!(f, "constraint_violation = {:e}", self.constraint_violation)?;
        writeln!(f, "lagrangian_gradient_norm = {:e}", self.gradient_norm)?;
        writeln!(f, "objective = {:e}", self.objective)?;
        writeln!(f, "final_penalty = {:e}", self.final_penalty)?;
        writeln!(f, "time_evaluation_s = {:.6}", self.timings.evaluation.as_secs_f64())?;
        writeln!(f, "time_solve_s = {:.6}", self.timings.solve.as_secs_f64())?;
        write!(f, "time_line_search_s = {:.6}", self.timings.line_search.as_secs_f64())
    }
}

/// Result of a constrained solve: the full stacked vector, multipliers and the report.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub z: Vec<f64>,
    pub multipliers: Vec<f64>,
    pub report: SolveReport,
}

struct InnerResult {
    iterations: usize,
    evaluations: usize,
    gradient_norm: f64,
    stalled: bool,
}

/// Backtracking from `x` along `d`; returns the accepted step length and value.
#[allow(clippy::too_many_arguments)]
fn armijo(
    problem: &ConstrainedProblem,
    state: &AugLagState,
    x: &[f64],
    d: &[f64],
    value: f64,
    slope: f64,
    config: &SolverConfig,
) -> Option<(f64, f64, Vec<f64>)> {
    let mut alpha = 1.0;
    while alpha >= config.min_step {
        let trial: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + alpha * b).collect();
        let v = lagrangian_value(problem, &trial, &state.multipliers, state.penalty);
        if v < INFEASIBLE && v <= value + config.armijo * alpha * slope {
            return Some((alpha, v, trial));
        }
        alpha *= config.backtrack;
    }
    None
}

/// Shifted-Cholesky Newton iterations on `L(·; λ, μ)` until `‖∇L‖₂ ≤ ω` or the budget is spent.
fn newton_inner(
    problem: &ConstrainedProblem,
    state: &mut AugLagState,
    config: &SolverConfig,
    chol: &mut CholeskySolver,
    timings: &mut PhaseTimings,
) -> Result<InnerResult> {
    let mut iterations = 0;
    let mut evaluations = 0;
    loop {
        let t0 = Instant::now();
        let eval = augmented_lagrangian(problem, &state.x, &state.multipliers, state.penalty, true)?;
        timings.evaluation += t0.elapsed();
        evaluations += 1;
        if eval.value >= INFEASIBLE {
            return Err(Error::InfeasiblePoint);
        }
        let gnorm = norm(&eval.gradient);
        if gnorm <= state.omega || iterations >= config.j_max || eval.gradient.is_empty() {
            return Ok(InnerResult {
                iterations,
                evaluations,
                gradient_norm: gnorm,
                stalled: false,
            });
        }
        let h = eval.hessian.expect("hessian requested");

        let t1 = Instant::now();
        let min_diag = h.diagonal().into_iter().fold(f64::INFINITY, f64::min);
        let mut tau = if min_diag > 0.0 { 0.0 } else { -min_diag + config.beta_shift };
        let factor = loop {
            match chol.factor(&h, tau) {
                Ok(f) => break f,
                Err(Error::NotPositiveDefinite) => tau = (config.tau_plus * tau).max(config.beta_shift),
                Err(e) => return Err(e),
            }
        };
        let mut d = factor.solve(&eval.gradient);
        d.iter_mut().for_each(|v| *v = -*v);
        timings.solve += t1.elapsed();

        let t2 = Instant::now();
        let slope = dot(&d, &eval.gradient);
        let step = armijo(problem, state, &state.x, &d, eval.value, slope, config);
        timings.line_search += t2.elapsed();
        iterations += 1;
        match step {
            Some((alpha, _, x)) => {
                debug!("newton {iterations}: |g| = {gnorm:.3e}, shift = {tau:.1e}, step = {alpha:.3e}");
                state.x = x;
            }
            None => {
                debug!("newton {iterations}: line search stalled at |g| = {gnorm:.3e}");
                return Ok(InnerResult {
                    iterations,
                    evaluations,
                    gradient_norm: gnorm,
                    stalled: true,
                });
            }
        }
    }
}

/// A few limited-memory BFGS steps on `L(·; λ, μ)`.
fn bfgs_warm_start(
    problem: &ConstrainedProblem,
    state: &mut AugLagState,
    config: &SolverConfig,
    timings: &mut PhaseTimings,
) -> Result<()> {
    const MEMORY: usize = 8;
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let t0 = Instant::now();
    let mut eval = augmented_lagrangian(problem, &state.x, &state.multipliers, state.penalty, false)?;
    timings.evaluation += t0.elapsed();
    for _ in 0..config.bfgs_iterations {
        if eval.value >= INFEASIBLE {
            break;
        }
        let g = &eval.gradient;
        // Two-loop recursion.
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, y, rho) in hist.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        if let Some((s, y, _)) = hist.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        } else {
            let scale = 1.0 / norm(g).max(1.0);
            q.iter_mut().for_each(|v| *v *= scale);
        }
        for ((s, y, rho), a) in hist.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut d: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&d, g);
        if slope >= 0.0 {
            hist.clear();
            d = g.iter().map(|v| -v).collect();
            slope = dot(&d, g);
        }
        let t1 = Instant::now();
        let step = armijo(problem, state, &state.x, &d, eval.value, slope, config);
        timings.line_search += t1.elapsed();
        let Some((_, _, x)) = step else { break };
        let t2 = Instant::now();
        let next = augmented_lagrangian(problem, &x, &state.multipliers, state.penalty, false)?;
        timings.evaluation += t2.elapsed();
        let s: Vec<f64> = x.iter().zip(&state.x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next.gradient.iter().zip(g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            hist.push_back((s, y, 1.0 / sy));
            if hist.len() > MEMORY {
                hist.pop_front();
            }
        }
        state.x = x;
        eval = next;
    }
    Ok(())
}

/// Augmented Lagrangian method with Newton inner solves, started from the free part of the
/// layout's base vector.
pub fn solve_constrained(problem: &ConstrainedProblem, config: &SolverConfig) -> Result<SolveOutcome> {
    config.validate()?;
    let layout = problem.layout();
    let x0 = layout.restrict(layout.base());
    if !problem.feasible(layout.base()) {
        return Err(Error::InfeasibleStart(
            "a face violates the triangle inequality or an angle lies outside (-pi, pi)".into(),
        ));
    }
    if problem.objective().value(layout.base()) >= INFEASIBLE {
        return Err(Error::InfeasibleStart("objective is infinite at the starting point".into()));
    }

    let mu0 = config.mu0;
    let mut state = AugLagState {
        x: x0,
        multipliers: vec![config.lambda0; problem.constraint_rows()],
        penalty: mu0,
        eta: 1.0 / mu0.powf(0.1),
        omega: 1.0 / mu0,
    };
    let mut chol = CholeskySolver::new();
    let mut timings = PhaseTimings::default();
    let mut report = SolveReport {
        status: SolveStatus::MaxOuterIterations,
        outer_iterations: 0,
        inner_iterations: 0,
        penalty_increases: 0,
        multiplier_updates: 0,
        inner_stalls: 0,
        constraint_violation: f64::INFINITY,
        gradient_norm: f64::INFINITY,
        objective: f64::INFINITY,
        final_penalty: mu0,
        timings: PhaseTimings::default(),
        violation_history: Vec::new(),
        newton_evaluations: 0,
    };

    if config.bfgs_warm_start {
        bfgs_warm_start(problem, &mut state, config, &mut timings)?;
    }

    for k in 0..config.k_max {
        // Below eps_l the inner tolerance no longer affects the stopping test.
        state.omega = state.omega.max(config.eps_l);
        let inner = newton_inner(problem, &mut state, config, &mut chol, &mut timings)?;
        report.inner_iterations += inner.iterations;
        report.newton_evaluations += inner.evaluations;
        report.outer_iterations = k + 1;
        if inner.stalled {
            report.inner_stalls += 1;
        }
        let full = layout.expand(&state.x);
        let q = problem.residual(&full);
        let viol = max_violation(&q);
        report.violation_history.push(viol);
        report.constraint_violation = viol;
        report.gradient_norm = inner.gradient_norm;
        info!(
            "outer {k}: |Q| = {viol:.3e}, |grad L| = {:.3e}, mu = {:.1e}, inner = {}",
            inner.gradient_norm, state.penalty, inner.iterations
        );
        if viol <= config.eps_q && inner.gradient_norm <= config.eps_l {
            report.status = SolveStatus::Converged;
            break;
        }
        if viol <= state.eta {
            for (l, qi) in state.multipliers.iter_mut().zip(&q) {
                *l -= state.penalty * qi;
            }
            state.eta = (state.eta / state.penalty.powf(config.eta_plus)).max(config.eps_q);
            state.omega /= state.penalty;
            report.multiplier_updates += 1;
        } else {
            state.penalty *= config.mu_plus;
            state.eta = (1.0 / state.penalty.powf(0.1)).max(config.eps_q);
            state.omega = 1.0 / state.penalty;
            report.penalty_increases += 1;
        }
    }
    let z = layout.expand(&state.x);
    report.objective = problem.objective().value(&z);
    report.final_penalty = state.penalty;
    report.timings = timings;
    Ok(SolveOutcome {
        z,
        multipliers: state.multipliers,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{DeformationEnergy, MaterialParameters, QuadraticWeights, WeightRecipe};
    use crate::forward::nric_from_positions;
    use crate::generators;
    use crate::integrability::ConstraintSystem;
    use crate::mesh::NricVector;
    use crate::objectives::DissimilarityObjective;
    use crate::optim::{Objective, VariableLayout};

    fn pair() -> (generators::Shape, Vec<f64>, Vec<f64>) {
        let a = generators::bent_plate(5, 0.5, 0);
        let b = generators::bent_plate(5, 0.5, 1);
        let za = nric_from_positions(&a.surface, &a.positions).unwrap().into_vec();
        let zb = nric_from_positions(&b.surface, &b.positions).unwrap().into_vec();
        (a, za, zb)
    }

    #[test]
    fn unconstrained_quadratic_takes_one_newton_step() {
        let (a, za, zb) = pair();
        let s = &a.surface;
        let w = QuadraticWeights::from_reference(s, &NricVector::from_flat(s, za.clone()).unwrap(), WeightRecipe::InverseLength).unwrap();
        let obj = DissimilarityObjective::new(DeformationEnergy::quadratic(s, MaterialParameters::default(), w), zb.clone()).unwrap();
        let sys = ConstraintSystem::new(s);
        let problem = ConstrainedProblem::new(&obj, &sys, VariableLayout::all_free(za.clone())).unwrap();
        let mut state = AugLagState {
            x: za.clone(),
            multipliers: vec![0.0; problem.constraint_rows()],
            penalty: 0.0,
            eta: 1.0,
            omega: 1e-10,
        };
        let config = SolverConfig::default();
        let mut chol = CholeskySolver::new();
        let mut t = PhaseTimings::default();
        let r = newton_inner(&problem, &mut state, &config, &mut chol, &mut t).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(state.x.iter().zip(&zb).all(|(x, y)| (x - y).abs() < 1e-12));
    }

    #[test]
    fn lagrangian_derivatives_match_finite_differences() {
        let (a, za, zb) = pair();
        let s = &a.surface;
        let obj = DissimilarityObjective::new(DeformationEnergy::nonlinear(s, MaterialParameters::default()), za.clone()).unwrap();
        let sys = ConstraintSystem::new(s);
        let problem = ConstrainedProblem::new(&obj, &sys, VariableLayout::all_free(za.clone())).unwrap();
        let x: Vec<f64> = za.iter().zip(&zb).map(|(p, q)| 0.6 * p + 0.4 * q).collect();
        let lambda: Vec<f64> = (0..problem.constraint_rows()).map(|i| 0.1 * ((i % 7) as f64 - 3.0)).collect();
        let mu = 25.0;
        let eval = augmented_lagrangian(&problem, &x, &lambda, mu, true).unwrap();
        let h = eval.hessian.unwrap().to_dense();
        let gs = eval.gradient.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let hs = h.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let step = 1e-6;
        for i in 0..x.len() {
            let mut p = x.clone();
            let mut m = x.clone();
            p[i] += step;
            m[i] -= step;
            let fd = (lagrangian_value(&problem, &p, &lambda, mu) - lagrangian_value(&problem, &m, &lambda, mu)) / (2.0 * step);
            assert!((fd - eval.gradient[i]).abs() < 1e-6 * gs, "grad {i}");
            let gp = augmented_lagrangian(&problem, &p, &lambda, mu, false).unwrap().gradient;
            let gm = augmented_lagrangian(&problem, &m, &lambda, mu, false).unwrap().gradient;
            for j in 0..x.len() {
                let fd = (gp[j] - gm[j]) / (2.0 * step);
                assert!((fd - h[(j, i)]).abs() < 1e-5 * hs, "hess ({j},{i})");
            }
        }
    }

    #[test]
    fn reduces_to_objective_without_multipliers() {
        let (a, za, zb) = pair();
        let s = &a.surface;
        let obj = DissimilarityObjective::new(DeformationEnergy::nonlinear(s, MaterialParameters::default()), za.clone()).unwrap();
        let sys = ConstraintSystem::new(s);
        let problem = ConstrainedProblem::new(&obj, &sys, VariableLayout::all_free(za.clone())).unwrap();
        let x: Vec<f64> = za.iter().zip(&zb).map(|(p, q)| 0.5 * (p + q)).collect();
        let l = lagrangian_value(&problem, &x, &vec![0.0; problem.constraint_rows()], 0.0);
        assert_eq!(l, obj.value(&x));
    }

    #[test]
    fn optimal_start_returns_immediately() {
        let (a, za, _) = pair();
        let s = &a.surface;
        let obj = DissimilarityObjective::new(DeformationEnergy::nonlinear(s, MaterialParameters::default()), za.clone()).unwrap();
        let sys = ConstraintSystem::new(s);
        let problem = ConstrainedProblem::new(&obj, &sys, VariableLayout::all_free(za.clone())).unwrap();
        let out = solve_constrained(&problem, &SolverConfig::default()).unwrap();
        assert!(out.report.converged());
        assert_eq!(out.report.penalty_increases, 0);
        assert_eq!(out.report.inner_iterations, 0);
        assert_eq!(out.z, za);
    }

    #[test]
    fn projects_linear_blend_onto_manifold() {
        let (a, za, zb) = pair();
        let s = &a.surface;
        let blend: Vec<f64> = za.iter().zip(&zb).map(|(p, q)| 0.5 * (p + q)).collect();
        let w = QuadraticWeights::from_reference(s, &NricVector::from_flat(s, za.clone()).unwrap(), WeightRecipe::InverseLength).unwrap();
        let obj = DissimilarityObjective::new(DeformationEnergy::quadratic(s, MaterialParameters::default(), w), blend.clone()).unwrap();
        let sys = ConstraintSystem::new(s);
        assert!(max_violation(&sys.residual_flat(&blend)) > 1e-4);
        let problem = ConstrainedProblem::new(&obj, &sys, VariableLayout::all_free(blend)).unwrap();
        for warm in [false, true] {
            let config = SolverConfig {
                bfgs_warm_start: warm,
                ..Default::default()
            };
            let out = solve_constrained(&problem, &config).unwrap();
            assert!(out.report.converged(), "{}", out.report);
            assert!(max_violation(&sys.residual_flat(&out.z)) <= 1e-8);
            assert!(out.report.gradient_norm <= 1e-4);
        }
    }

    #[test]
    fn fixed_coordinates_never_move() {
        let (a, za, zb) = pair();
        let s = &a.surface;
        let blend: Vec<f64> = za.iter().zip(&zb).map(|(p, q)| 0.5 * (p + q)).collect();
        let obj = DissimilarityObjective::new(DeformationEnergy::nonlinear(s, MaterialParameters::default()), blend.clone()).unwrap();
        let sys = ConstraintSystem::new(s);
        let mut fixed = vec![false; blend.len()];
        fixed[3] = true;
        fixed[s.edge_count() + 2] = true;
        let problem = ConstrainedProblem::new(&obj, &sys, VariableLayout::new(blend.clone(), &fixed)).unwrap();
        let out = solve_constrained(&problem, &SolverConfig::default()).unwrap();
        assert_eq!(out.z[3], blend[3]);
        assert_eq!(out.z[s.edge_count() + 2], blend[s.edge_count() + 2]);
        assert!(out.report.converged(), "{}", out.report);
    }

    #[test]
    fn rejects_infeasible_start() {
        let (a, za, _) = pair();
        let s = &a.surface;
        let obj = DissimilarityObjective::new(DeformationEnergy::nonlinear(s, MaterialParameters::default()), za.clone()).unwrap();
        let sys = ConstraintSystem::new(s);
        let mut bad = za.clone();
        bad[0] = 50.0;
        let problem = ConstrainedProblem::new(&obj, &sys, VariableLayout::all_free(bad)).unwrap();
        assert!(matches!(solve_constrained(&problem, &SolverConfig::default()), Err(Error::InfeasibleStart(_))));
    }
}
