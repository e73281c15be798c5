//! Majorization-minimization driver and the projected subgradient solver
//! used for each convex subproblem.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScrnError};
use crate::linalg::norm;

/// Slack allowed when checking `f(x⁽ˡ⁺¹⁾) ≤ f(x⁽ˡ⁾)`.
pub const DESCENT_SLACK: f64 = 1e-9;

/// A convex function with a subgradient oracle.
pub trait ConvexFunction {
    fn value(&self, x: &[f64]) -> f64;
    fn subgradient(&self, x: &[f64]) -> Vec<f64>;
}

/// Adapts a pair of closures to [`ConvexFunction`].
pub struct FnConvex<F, G> {
    pub value: F,
    pub subgradient: G,
}

impl<F, G> ConvexFunction for FnConvex<F, G>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }
    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        (self.subgradient)(x)
    }
}

/// An objective together with a family of convex majorizers: for every
/// anchor `z`, `g(·, z) ≥ f` everywhere and `g(z, z) = f(z)`.
pub trait SurrogateOracle {
    fn objective(&self, x: &[f64]) -> f64;
    fn majorize<'a>(&'a self, anchor: &[f64]) -> Box<dyn ConvexFunction + 'a>;
}

/// Per-coordinate box constraints. Infinite entries mean unconstrained.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn unbounded(n: usize) -> Self {
        Bounds {
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(ScrnError::DimensionMismatch {
                expected: lower.len(),
                found: upper.len(),
            });
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(ScrnError::Config("bounds need lower <= upper".into()));
        }
        Ok(Bounds { lower, upper })
    }

    /// Constrains coordinate `i` to `≤ 0`.
    pub fn set_nonpositive(&mut self, i: usize) {
        self.upper[i] = 0.0;
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn project(&self, x: &mut [f64]) {
        for ((v, &l), &u) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(l, u);
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.lower)
            .zip(&self.upper)
            .all(|((v, l), u)| l <= v && v <= u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub budget: usize,
    /// `η₀ = step_scale / (1 + ‖g(x_warm)‖)`.
    pub step_scale: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            budget: 2000,
            step_scale: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexSolution {
    pub x: Vec<f64>,
    pub value: f64,
    pub warm_value: f64,
    pub iterations: usize,
}

/// Projected subgradient descent with step `η₀/√(t+1)`, returning the best
/// feasible iterate seen. The warm start is projected first and is itself a
/// candidate, so the returned value never exceeds `g(proj(x_warm))`.
pub fn solve_convex(
    g: &dyn ConvexFunction,
    x_warm: &[f64],
    bounds: Option<&Bounds>,
    opts: &SolverOptions,
) -> Result<ConvexSolution> {
    let mut x = x_warm.to_vec();
    if let Some(b) = bounds {
        if b.len() != x.len() {
            return Err(ScrnError::DimensionMismatch {
                expected: x.len(),
                found: b.len(),
            });
        }
        b.project(&mut x);
    }
    let warm_value = g.value(&x);
    if !warm_value.is_finite() {
        return Err(ScrnError::NonFinite {
            context: "surrogate at warm start".into(),
        });
    }
    let mut best = x.clone();
    let mut best_value = warm_value;
    let g0 = g.subgradient(&x);
    let eta0 = opts.step_scale / (1.0 + norm(&g0));
    let mut grad = g0;
    let mut iterations = 0;
    for t in 0..opts.budget {
        if grad.iter().all(|v| *v == 0.0) {
            break;
        }
        if grad.iter().any(|v| !v.is_finite()) {
            return Err(ScrnError::NonFinite {
                context: "surrogate subgradient".into(),
            });
        }
        let eta = eta0 / ((t + 1) as f64).sqrt();
        for (v, d) in x.iter_mut().zip(&grad) {
            *v -= eta * d;
        }
        if let Some(b) = bounds {
            b.project(&mut x);
        }
        iterations = t + 1;
        let v = g.value(&x);
        if v < best_value {
            best_value = v;
            best.copy_from_slice(&x);
        }
        grad = g.subgradient(&x);
    }
    Ok(ConvexSolution {
        x: best,
        value: best_value,
        warm_value,
        iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmOptions {
    pub ftol: f64,
    pub max_outer: usize,
    pub inner: SolverOptions,
    /// Record wall-clock time per iteration; otherwise `time_ms` is 0 so
    /// traces are reproducible byte for byte.
    pub timing: bool,
}

impl Default for MmOptions {
    fn default() -> Self {
        MmOptions {
            ftol: 1e-8,
            max_outer: 100,
            inner: SolverOptions::default(),
            timing: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepType {
    Full,
    SecondLayer,
    FirstLayer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmIteration {
    pub iteration: usize,
    pub objective: f64,
    pub surrogate: f64,
    pub time_ms: f64,
    pub step_type: StepType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Ftol,
    MaxOuter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmTrace {
    pub initial_objective: f64,
    pub iterations: Vec<MmIteration>,
    pub converged: bool,
    pub stop_reason: StopReason,
}

impl MmTrace {
    pub fn new(initial_objective: f64) -> Self {
        MmTrace {
            initial_objective,
            iterations: Vec::new(),
            converged: false,
            stop_reason: StopReason::MaxOuter,
        }
    }

    pub fn last_objective(&self) -> f64 {
        self.iterations.last().map_or(self.initial_objective, |it| it.objective)
    }

    /// Appends an iteration, failing if the objective rose by more than
    /// [`DESCENT_SLACK`].
    pub fn push(&mut self, objective: f64, surrogate: f64, time_ms: f64, step_type: StepType) -> Result<()> {
        if !objective.is_finite() {
            return Err(ScrnError::NonFinite {
                context: "objective".into(),
            });
        }
        let previous = self.last_objective();
        let iteration = self.iterations.len() + 1;
        if objective > previous + DESCENT_SLACK {
            return Err(ScrnError::DescentViolation {
                iteration,
                previous,
                current: objective,
            });
        }
        self.iterations.push(MmIteration {
            iteration,
            objective,
            surrogate,
            time_ms,
            step_type,
        });
        Ok(())
    }

    pub fn final_objective(&self) -> f64 {
        self.last_objective()
    }

    pub fn is_monotone(&self) -> bool {
        let mut prev = self.initial_objective;
        self.iterations.iter().all(|it| {
            let ok = it.objective <= prev + DESCENT_SLACK;
            prev = it.objective;
            ok
        })
    }

    /// `iteration,objective,surrogate_min,time_ms`; row 0 is the starting
    /// point with its surrogate equal to the objective.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,objective,surrogate_min,time_ms\n");
        let _ = writeln!(out, "0,{},{},0", self.initial_objective, self.initial_objective);
        for it in &self.iterations {
            let _ = writeln!(out, "{},{},{},{}", it.iteration, it.objective, it.surrogate, it.time_ms);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmStep {
    pub x: Vec<f64>,
    pub objective: f64,
    pub surrogate: f64,
}

/// One majorize-then-minimize update from `x`.
pub fn mm_step(
    oracle: &dyn SurrogateOracle,
    x: &[f64],
    bounds: Option<&Bounds>,
    inner: &SolverOptions,
) -> Result<MmStep> {
    let g = oracle.majorize(x);
    let sol = solve_convex(g.as_ref(), x, bounds, inner)?;
    let objective = oracle.objective(&sol.x);
    Ok(MmStep {
        x: sol.x,
        objective,
        surrogate: sol.value,
    })
}

pub(crate) fn elapsed_ms(start: Instant, timing: bool) -> f64 {
    if timing {
        start.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    }
}

/// Iterates `x ← argmin g(·, x)` until the objective changes by less than
/// `ftol` or `max_outer` steps have run.
pub fn mm_minimize(
    oracle: &dyn SurrogateOracle,
    x0: &[f64],
    bounds: Option<&Bounds>,
    opts: &MmOptions,
) -> Result<(Vec<f64>, MmTrace)> {
    let mut x = x0.to_vec();
    if let Some(b) = bounds {
        b.project(&mut x);
    }
    let f0 = oracle.objective(&x);
    if !f0.is_finite() {
        return Err(ScrnError::NonFinite {
            context: "initial objective".into(),
        });
    }
    let mut trace = MmTrace::new(f0);
    for _ in 0..opts.max_outer {
        let start = Instant::now();
        let prev = trace.last_objective();
        let step = mm_step(oracle, &x, bounds, &opts.inner)?;
        trace.push(
            step.objective,
            step.surrogate,
            elapsed_ms(start, opts.timing),
            StepType::Full,
        )?;
        x = step.x;
        if (prev - step.objective).abs() < opts.ftol {
            trace.converged = true;
            trace.stop_reason = StopReason::Ftol;
            break;
        }
    }
    Ok((x, trace))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurrogateCheck {
    /// `max f(p) − g(p, anchor)` over the probes; ≤ 0 for a valid majorizer.
    pub max_bound_gap: f64,
    /// `|f(anchor) − g(anchor, anchor)|`.
    pub touch_gap: f64,
}

pub fn verify_surrogate(oracle: &dyn SurrogateOracle, anchor: &[f64], probes: &[Vec<f64>]) -> SurrogateCheck {
    let g = oracle.majorize(anchor);
    let max_bound_gap = probes
        .iter()
        .map(|p| oracle.objective(p) - g.value(p))
        .fold(f64::NEG_INFINITY, f64::max);
    SurrogateCheck {
        max_bound_gap,
        touch_gap: (oracle.objective(anchor) - g.value(anchor)).abs(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Exact<F: Fn(&[f64]) -> f64, G: Fn(&[f64]) -> Vec<f64> + Clone> {
        f: F,
        g: G,
    }

    impl<F, G> SurrogateOracle for Exact<F, G>
    where
        F: Fn(&[f64]) -> f64 + Clone,
        G: Fn(&[f64]) -> Vec<f64> + Clone,
    {
        fn objective(&self, x: &[f64]) -> f64 {
            (self.f)(x)
        }
        fn majorize<'a>(&'a self, _anchor: &[f64]) -> Box<dyn ConvexFunction + 'a> {
            Box::new(FnConvex {
                value: self.f.clone(),
                subgradient: self.g.clone(),
            })
        }
    }

    fn quad() -> impl SurrogateOracle {
        Exact {
            f: |x: &[f64]| (x[0] - 3.0).powi(2),
            g: |x: &[f64]| vec![2.0 * (x[0] - 3.0)],
        }
    }

    #[test]
    fn warm_start_at_minimum_is_returned() {
        let g = FnConvex {
            value: |x: &[f64]| (x[0] - 1.0).powi(2),
            subgradient: |x: &[f64]| vec![2.0 * (x[0] - 1.0)],
        };
        let s = solve_convex(&g, &[1.0], None, &SolverOptions::default()).unwrap();
        assert_eq!(s.x, vec![1.0]);
        assert_eq!(s.value, 0.0);
    }

    #[test]
    fn projected_abs_hits_boundary() {
        let g = FnConvex {
            value: |x: &[f64]| (x[0] - 1.0).abs(),
            subgradient: |x: &[f64]| vec![if x[0] > 1.0 { 1.0 } else { -1.0 }],
        };
        let mut b = Bounds::unbounded(1);
        b.set_nonpositive(0);
        let s = solve_convex(&g, &[-2.0], Some(&b), &SolverOptions::default()).unwrap();
        assert_eq!(s.x, vec![0.0]);
    }

    #[test]
    fn never_worse_than_warm_start() {
        // a huge step scale makes every subgradient step overshoot
        let g = FnConvex {
            value: |x: &[f64]| x[0].abs() + (x[1] - 0.5).abs(),
            subgradient: |x: &[f64]| vec![x[0].signum(), (x[1] - 0.5).signum()],
        };
        let opts = SolverOptions {
            budget: 50,
            step_scale: 1e6,
        };
        let s = solve_convex(&g, &[0.0, 0.5], None, &opts).unwrap();
        assert!(s.value <= s.warm_value);
        assert_eq!(s.x, vec![0.0, 0.5]);
    }

    #[test]
    fn quadratic_converges_to_three() {
        let o = quad();
        let (x, trace) = mm_minimize(&o, &[0.0], None, &MmOptions::default()).unwrap();
        assert!((x[0] - 3.0).abs() < 1e-3, "{x:?}");
        assert!(trace.is_monotone());
        assert!(trace.converged);
    }

    #[test]
    fn abs_converges_to_zero() {
        let o = Exact {
            f: |x: &[f64]| x[0].abs(),
            g: |x: &[f64]| {
                vec![if x[0] > 0.0 {
                    1.0
                } else if x[0] < 0.0 {
                    -1.0
                } else {
                    0.0
                }]
            },
        };
        let (x, trace) = mm_minimize(&o, &[2.0], None, &MmOptions::default()).unwrap();
        assert!(x[0].abs() < 1e-2, "{x:?}");
        assert!(trace.final_objective() <= trace.initial_objective);
    }

    #[test]
    fn descent_violation_is_reported() {
        let mut t = MmTrace::new(1.0);
        t.push(0.5, 0.5, 0.0, StepType::Full).unwrap();
        assert!(matches!(
            t.push(0.6, 0.6, 0.0, StepType::Full),
            Err(ScrnError::DescentViolation { iteration: 2, .. })
        ));
        t.push(0.5 + 5e-10, 0.5, 0.0, StepType::Full).unwrap();
    }

    #[test]
    fn surrogate_check_flags_broken_oracle() {
        let o = quad();
        let probes: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let ok = verify_surrogate(&o, &[1.0], &probes);
        assert_eq!(ok.max_bound_gap, 0.0);
        assert_eq!(ok.touch_gap, 0.0);

        struct Flipped;
        impl SurrogateOracle for Flipped {
            fn objective(&self, x: &[f64]) -> f64 {
                x[0] * x[0]
            }
            fn majorize<'a>(&'a self, _anchor: &[f64]) -> Box<dyn ConvexFunction + 'a> {
                Box::new(FnConvex {
                    value: |x: &[f64]| 0.5 * x[0] * x[0],
                    subgradient: |x: &[f64]| vec![x[0]],
                })
            }
        }
        assert!(verify_surrogate(&Flipped, &[1.0], &probes).max_bound_gap > 0.0);
    }

    #[test]
    fn projection_is_idempotent_and_csv_has_initial_row() {
        let b = Bounds::new(vec![-1.0, f64::NEG_INFINITY], vec![1.0, 0.0]).unwrap();
        let mut x = vec![5.0, 3.0];
        b.project(&mut x);
        let once = x.clone();
        b.project(&mut x);
        assert_eq!(x, once);
        assert!(b.contains(&x));

        let mut t = MmTrace::new(2.0);
        t.push(1.0, 1.5, 0.0, StepType::Full).unwrap();
        assert_eq!(
            t.to_csv(),
            "iteration,objective,surrogate_min,time_ms\n0,2,2,0\n1,1,1.5,0\n"
        );
    }
}
