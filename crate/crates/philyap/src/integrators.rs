//! Matrix-valued exponential integrators for `X' = A X + X A^T + N(t, X)`.
//!
//! Three fixed-step schemes, all driven by the phi kernel:
//!
//! * exponential Euler (order 1),
//!   `X+ = e^{h L_A}[X] + h phi_1(h L_A)[N(t, X)]`;
//! * an exponential Rosenbrock-Euler scheme of order two (`exprb2`);
//! * a two-stage exponential Rosenbrock scheme of order three (`exprb3`)
//!   whose correction weight is `2 phi_3`.
//!
//! For the differential Riccati equation the Rosenbrock schemes freeze the
//! Jacobian each step; the Frechet derivative of the Riccati right-hand side
//! at symmetric `X` is again a Lyapunov operator, with coefficient
//! `A_n = A - X B B^T`, so every kernel call stays in Lyapunov form.

use crate::error::{Error, Result};
use crate::kernel::{phi_lyap_with, phi_multi_with, PhiOptions};
use crate::lyapop::LyapunovOperator;
use crate::matrix::DenseMatrix;

/// Matrix differential equation `X' = A X + X A^T + N(t, X)`.
pub struct MDEProblem<F>
where
    F: Fn(f64, &DenseMatrix) -> DenseMatrix,
{
    pub a: DenseMatrix,
    pub nonlinearity: F,
    pub x0: DenseMatrix,
    pub t0: f64,
}

/// Differential Riccati equation
/// `X' = A X + X A^T + C C^T - X B B^T X`, `X(t0) = X0`.
pub struct DREProblem {
    pub a: DenseMatrix,
    /// Input map, `N x p`.
    pub b: DenseMatrix,
    /// Output map as a column block, `N x q`, entering as `C C^T`.
    pub c: DenseMatrix,
    pub x0: DenseMatrix,
    pub t0: f64,
    bbt: DenseMatrix,
    cct: DenseMatrix,
}

impl DREProblem {
    pub fn new(
        a: DenseMatrix,
        b: DenseMatrix,
        c: DenseMatrix,
        x0: DenseMatrix,
        t0: f64,
    ) -> Result<Self> {
        let n = a.rows();
        if !a.is_square() {
            return Err(Error::ShapeMismatch {
                context: "DREProblem",
                expected: (n, n),
                found: a.shape(),
            });
        }
        for (mat, what) in [(&b, "B"), (&c, "C")] {
            if mat.rows() != n {
                return Err(Error::InvalidArgument(format!(
                    "DREProblem: {what} must have {n} rows, found {:?}",
                    mat.shape()
                )));
            }
        }
        x0.require_same_shape(&a, "DREProblem initial value")?;
        let bbt = b.matmul(&b.transpose());
        let cct = c.matmul(&c.transpose());
        Ok(Self { a, b, c, x0, t0, bbt, cct })
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    pub fn bbt(&self) -> &DenseMatrix {
        &self.bbt
    }

    pub fn cct(&self) -> &DenseMatrix {
        &self.cct
    }
}

/// Riccati right-hand side `F(X) = A X + X A^T + C C^T - X B B^T X`.
pub fn dre_rhs(problem: &DREProblem, _t: f64, x: &DenseMatrix) -> Result<DenseMatrix> {
    x.require_same_shape(&problem.a, "dre_rhs")?;
    let lin = problem.a.matmul(x).add(&x.matmul(&problem.a.transpose()));
    let quad = x.matmul(problem.bbt()).matmul(x);
    Ok(lin.add(problem.cct()).sub(&quad))
}

/// Scheme selector for the fixed-step driver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    ExpEuler,
    Exprb2,
    Exprb3,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::ExpEuler => "exp_euler",
            Scheme::Exprb2 => "exprb2",
            Scheme::Exprb3 => "exprb3",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp_euler" => Ok(Scheme::ExpEuler),
            "exprb2" => Ok(Scheme::Exprb2),
            "exprb3" => Ok(Scheme::Exprb3),
            other => Err(Error::InvalidArgument(format!("unknown scheme `{other}`"))),
        }
    }
}

/// Trajectory record with kernel-call instrumentation.
#[derive(Debug, Clone)]
pub struct IntegrationResult {
    pub times: Vec<f64>,
    pub states: Vec<DenseMatrix>,
    pub steps_taken: usize,
    pub phi_calls: usize,
    /// Total matrix products consumed inside the kernel calls.
    pub products_used: u64,
    /// Taylor degree and scaling of the first kernel call, as a
    /// representative of the per-step parameter choice.
    pub first_params: Option<(usize, u32)>,
}

impl IntegrationResult {
    pub fn final_state(&self) -> &DenseMatrix {
        self.states.last().expect("at least the initial state")
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct StepCost {
    phi_calls: usize,
    products: u64,
    params: Option<(usize, u32)>,
}

/// Shared body of the exponential Euler update for an already-evaluated
/// source term: `X+ = E X E^T + h phi_1(h L_A)[N]` with both pieces from one
/// kernel call.
fn exp_euler_apply(
    a: &DenseMatrix,
    x: &DenseMatrix,
    n_val: &DenseMatrix,
    h: f64,
    options: &PhiOptions,
) -> Result<(DenseMatrix, StepCost)> {
    n_val.require_same_shape(x, "exp_euler nonlinearity output")?;
    let opts = PhiOptions { want_exp_factor: true, ..*options };
    let res = phi_multi_with(&a.scale(h), n_val, 1, &opts)?;
    let e = res.exp_factor.as_ref().expect("exp factor requested");
    let mut next = e.matmul(x).matmul(&e.transpose());
    next.add_scaled_assign(h, res.phi(1));
    let cost = StepCost {
        phi_calls: 1,
        products: res.products_used,
        params: Some((res.params.m, res.params.s)),
    };
    Ok((next, cost))
}

fn exp_euler_core<F>(
    problem: &MDEProblem<F>,
    t: f64,
    x: &DenseMatrix,
    h: f64,
    options: &PhiOptions,
) -> Result<(DenseMatrix, StepCost)>
where
    F: Fn(f64, &DenseMatrix) -> DenseMatrix,
{
    let n_val = (problem.nonlinearity)(t, x);
    exp_euler_apply(&problem.a, x, &n_val, h, options)
}

/// One exponential Euler step,
/// `X+ = e^{h L_A}[X] + h phi_1(h L_A)[N(t, X)]`; a single kernel call
/// provides both the exponential factor and `phi_1`.
pub fn exp_euler_step<F>(
    problem: &MDEProblem<F>,
    t: f64,
    x: &DenseMatrix,
    h: f64,
) -> Result<DenseMatrix>
where
    F: Fn(f64, &DenseMatrix) -> DenseMatrix,
{
    require_positive_step(h)?;
    Ok(exp_euler_core(problem, t, x, h, &PhiOptions::default())?.0)
}

/// Frozen-Jacobian coefficient `A_n = A - X B B^T` of the Riccati flow at
/// symmetric `X`.
fn frozen_coefficient(problem: &DREProblem, x: &DenseMatrix) -> DenseMatrix {
    problem.a.sub(&x.matmul(problem.bbt()))
}

fn exprb2_core(
    problem: &DREProblem,
    t: f64,
    x: &DenseMatrix,
    h: f64,
    options: &PhiOptions,
) -> Result<(DenseMatrix, StepCost)> {
    let f = dre_rhs(problem, t, x)?;
    let a_n = frozen_coefficient(problem, x);
    let res = phi_lyap_with(&a_n.scale(h), &f, 1, options)?;
    let mut next = x.clone();
    next.add_scaled_assign(h, res.phi(1));
    let cost = StepCost {
        phi_calls: 1,
        products: res.products_used,
        params: Some((res.params.m, res.params.s)),
    };
    Ok((next, cost))
}

/// One exponential Rosenbrock-Euler step for the Riccati equation:
/// `X+ = X + h phi_1(h L_{A_n})[F(X)]`. Order two.
pub fn exprb2_step(problem: &DREProblem, t: f64, x: &DenseMatrix, h: f64) -> Result<DenseMatrix> {
    require_positive_step(h)?;
    Ok(exprb2_core(problem, t, x, h, &PhiOptions::default())?.0)
}

fn exprb3_core(
    problem: &DREProblem,
    t: f64,
    x: &DenseMatrix,
    h: f64,
    options: &PhiOptions,
) -> Result<(DenseMatrix, StepCost)> {
    let f = dre_rhs(problem, t, x)?;
    let a_n = frozen_coefficient(problem, x);
    let a_n_scaled = a_n.scale(h);

    let res1 = phi_lyap_with(&a_n_scaled, &f, 1, options)?;
    let mut u = x.clone();
    u.add_scaled_assign(h, res1.phi(1));

    // Defect D = F(U) - F(X) - L_{A_n}[U - X]; the phi_1 and phi_3 operands
    // differ, so the correction is a second kernel call.
    let op = LyapunovOperator::new(a_n)?;
    let du = u.sub(x);
    let defect = dre_rhs(problem, t + h, &u)?.sub(&f).sub(&op.apply(&du)?);

    let res3 = phi_lyap_with(&a_n_scaled, &defect, 3, options)?;
    let mut next = u;
    next.add_scaled_assign(2.0 * h, res3.phi(3));

    let cost = StepCost {
        phi_calls: 2,
        products: res1.products_used + res3.products_used,
        params: Some((res1.params.m, res1.params.s)),
    };
    Ok((next, cost))
}

/// One third-order exponential Rosenbrock step for the Riccati equation:
/// stage `U = X + h phi_1(h L_{A_n})[F(X)]`, then
/// `X+ = U + 2 h phi_3(h L_{A_n})[F(U) - F(X) - L_{A_n}[U - X]]`.
pub fn exprb3_step(problem: &DREProblem, t: f64, x: &DenseMatrix, h: f64) -> Result<DenseMatrix> {
    require_positive_step(h)?;
    Ok(exprb3_core(problem, t, x, h, &PhiOptions::default())?.0)
}

fn require_positive_step(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("step size must be positive, got {h}")))
    }
}

const MAX_STEPS: usize = 1 << 20;

fn step_count(t0: f64, t_end: f64, h: f64) -> Result<usize> {
    require_positive_step(h)?;
    let span = t_end - t0;
    if span <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "integration needs t_end > t0, got span {span}"
        )));
    }
    let n = (span / h).round() as usize;
    if n == 0 {
        return Err(Error::InvalidArgument("zero steps requested".into()));
    }
    if n > MAX_STEPS {
        return Err(Error::InvalidArgument(format!("{n} steps exceed the {MAX_STEPS} cap")));
    }
    Ok(n)
}

/// Fixed-step driver for the Riccati problem. The step `h` is snapped to an
/// integer division of `[t0, t_end]`; every state is recorded.
pub fn integrate_dre(
    problem: &DREProblem,
    scheme: Scheme,
    h: f64,
    t_end: f64,
) -> Result<IntegrationResult> {
    integrate_dre_with(problem, scheme, h, t_end, &PhiOptions::default())
}

pub fn integrate_dre_with(
    problem: &DREProblem,
    scheme: Scheme,
    h: f64,
    t_end: f64,
    options: &PhiOptions,
) -> Result<IntegrationResult> {
    let n = step_count(problem.t0, t_end, h)?;
    let h = (t_end - problem.t0) / n as f64;

    let mut times = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    times.push(problem.t0);
    states.push(problem.x0.clone());
    let mut phi_calls = 0usize;
    let mut products = 0u64;
    let mut first_params = None;

    for step in 0..n {
        let t = problem.t0 + step as f64 * h;
        let x = states.last().unwrap();
        let (next, cost) = match scheme {
            Scheme::ExpEuler => {
                // Constant plus quadratic part of the Riccati flow as the
                // explicit source.
                let source = problem.cct().sub(&x.matmul(problem.bbt()).matmul(x));
                exp_euler_apply(&problem.a, x, &source, h, options)?
            }
            Scheme::Exprb2 => exprb2_core(problem, t, x, h, options)?,
            Scheme::Exprb3 => exprb3_core(problem, t, x, h, options)?,
        };
        if !next.is_finite() {
            return Err(Error::BlowUp { step });
        }
        phi_calls += cost.phi_calls;
        products += cost.products;
        if first_params.is_none() {
            first_params = cost.params;
        }
        times.push(problem.t0 + (step + 1) as f64 * h);
        states.push(next);
    }

    Ok(IntegrationResult { times, states, steps_taken: n, phi_calls, products_used: products, first_params })
}

/// Fixed-step exponential Euler driver for a general matrix differential
/// equation.
pub fn integrate_mde<F>(problem: &MDEProblem<F>, h: f64, t_end: f64) -> Result<IntegrationResult>
where
    F: Fn(f64, &DenseMatrix) -> DenseMatrix,
{
    let n = step_count(problem.t0, t_end, h)?;
    let h = (t_end - problem.t0) / n as f64;
    let mut times = vec![problem.t0];
    let mut states = vec![problem.x0.clone()];
    let mut phi_calls = 0usize;
    let mut products = 0u64;
    let mut first_params = None;
    for step in 0..n {
        let t = problem.t0 + step as f64 * h;
        let (next, cost) =
            exp_euler_core(problem, t, states.last().unwrap(), h, &PhiOptions::default())?;
        if !next.is_finite() {
            return Err(Error::BlowUp { step });
        }
        phi_calls += cost.phi_calls;
        products += cost.products;
        if first_params.is_none() {
            first_params = cost.params;
        }
        times.push(problem.t0 + (step + 1) as f64 * h);
        states.push(next);
    }
    Ok(IntegrationResult { times, states, steps_taken: n, phi_calls, products_used: products, first_params })
}

/// Least-squares slope of `log(err)` against `log(h)`; the measured
/// convergence order of a step-size ladder.
pub fn convergence_slope(hs: &[f64], errors: &[f64]) -> f64 {
    assert_eq!(hs.len(), errors.len());
    assert!(hs.len() >= 2);
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}
