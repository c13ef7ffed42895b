//! The phi-function kernel: modified scaling and squaring over truncated
//! Taylor series.
//!
//! Pipeline for `phi_l(L_A)[Q]`:
//!
//! 1. pick the Taylor degree `m` and scaling exponent `s`
//!    ([`crate::params::select_params`]);
//! 2. Horner-evaluate the top truncation `T_{l,m}(L_Atilde)[Q]` at the scaled
//!    coefficient `Atilde = 2^{-s} A`; if `s = 0` that is the answer;
//! 3. fill `T_{l-1} .. T_1` by the downward recursion;
//! 4. build the matrix exponential factor `E = T_0(Atilde)` by the
//!    Paterson-Stockmeyer scheme;
//! 5. climb the scales: at each doubling,
//!    `T_k(2L)[Q] = 2^{-k} (E T_k E^T + sum_{j<=k} T_j/(k-j)!)` for the whole
//!    stack (the operator exponential acts as the sandwich `E . E^T`, never
//!    as repeated operator composition), then square `E`; the last doubling
//!    touches only the requested indices.
//!
//! Product accounting (the convention under which the predicted counts are
//! exact): an operator application to a symmetric operand is 1 product, to a
//! general operand 2; `E X E^T` is 2; `E E` is 1. With symmetric `Q` the
//! total for the single-index pipeline is
//! `m` when `s = 0`, else `pi_{m+l} + m + l + 1 + (s-1)(2l+1)`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::lyapop::{inverse_factorials, LyapunovOperator, SYMMETRY_WARN_TOL};
use crate::matrix::{DenseMatrix, ProductCounter};
use crate::normest::NormEstimator;
use crate::params::{select_params_with, PhiParams, ThetaTable};

/// Tuning knobs for a kernel call.
#[derive(Debug, Clone, Copy)]
pub struct PhiOptions {
    /// Seed for the power-norm estimator probes.
    pub seed: u64,
    /// Dimension below which power norms are computed exactly.
    pub exact_norm_threshold: usize,
    /// Also return the full-scale exponential factor `E ~ e^A`. Costs one
    /// extra squaring when `s >= 1`, a Paterson-Stockmeyer evaluation when
    /// `s = 0`.
    pub want_exp_factor: bool,
}

impl Default for PhiOptions {
    fn default() -> Self {
        let estimator = NormEstimator::default();
        Self {
            seed: estimator.seed,
            exact_norm_threshold: estimator.exact_threshold,
            want_exp_factor: false,
        }
    }
}

impl PhiOptions {
    pub fn with_exp_factor() -> Self {
        Self { want_exp_factor: true, ..Self::default() }
    }

    fn estimator(&self) -> NormEstimator {
        NormEstimator {
            exact_threshold: self.exact_norm_threshold,
            seed: self.seed,
            ..NormEstimator::default()
        }
    }
}

/// Computed phi-values at full scale plus instrumentation.
#[derive(Debug, Clone)]
pub struct PhiResult {
    values: BTreeMap<usize, DenseMatrix>,
    /// Full-scale exponential factor, when requested (always present for
    /// `l = 0`, where it is the result's own machinery).
    pub exp_factor: Option<DenseMatrix>,
    pub params: PhiParams,
    /// Measured matrix-product count for this call.
    pub products_used: u64,
}

impl PhiResult {
    /// `phi_j(L_A)[Q]`; panics if index `j` was not computed by this call.
    pub fn phi(&self, j: usize) -> &DenseMatrix {
        self.values.get(&j).expect("phi index not computed by this call")
    }

    pub fn get(&self, j: usize) -> Option<&DenseMatrix> {
        self.values.get(&j)
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.values.keys().copied()
    }
}

/// Paterson-Stockmeyer product count `pi_d = ceil(sqrt d) + floor(d / ceil(sqrt d)) - 2`.
pub fn ps_product_count(d: usize) -> u64 {
    let r = (d as f64).sqrt().ceil() as u64;
    r + (d as u64) / r - 2
}

/// Predicted matrix-product count for the single-index evaluation of
/// `phi_l` with symmetric `Q`: `m` when `s = 0`, else
/// `pi_{m+l} + m + l + 1 + (s-1)(2l+1)`. The `l = 0` exponential path is
/// `pi_m + s + 2` (Paterson-Stockmeyer, squaring chain, sandwich).
pub fn predicted_product_count(l: usize, m: usize, s: u32) -> u64 {
    if l == 0 {
        return ps_product_count(m) + s as u64 + 2;
    }
    if s == 0 {
        m as u64
    } else {
        ps_product_count(m + l)
            + (m + l + 1) as u64
            + (s as u64 - 1) * (2 * l as u64 + 1)
    }
}

/// Full cost model of the pipeline, covering the multi-index and
/// exponential-factor variants and non-symmetric `Q`. Tests assert measured
/// counts against this.
pub fn expected_product_count(
    l: usize,
    m: usize,
    s: u32,
    symmetric_q: bool,
    multi: bool,
    want_exp: bool,
) -> u64 {
    if l == 0 {
        return ps_product_count(m) + s as u64 + 2;
    }
    let app = if symmetric_q { 1u64 } else { 2u64 };
    if s == 0 {
        let mut c = m as u64 * app;
        if multi && l >= 2 {
            c += (l as u64 - 1) * app;
        }
        if want_exp {
            c += ps_product_count(m + l);
        }
        c
    } else {
        let mut c = (m as u64 + l as u64 - 1) * app
            + ps_product_count(m + l)
            + (s as u64 - 1) * (2 * l as u64 + 1)
            + if multi { 2 * l as u64 } else { 2 };
        if want_exp {
            c += 1;
        }
        c
    }
}

/// Degree-`d` Taylor polynomial of the matrix exponential by the
/// Paterson-Stockmeyer scheme, `d` from the optimal set {6, 9, 12, 16, 20, 25};
/// consumes exactly `pi_d` products.
pub fn exp_taylor_ps(a_tilde: &DenseMatrix, d: usize) -> Result<DenseMatrix> {
    let counter = ProductCounter::new();
    exp_taylor_ps_counted(a_tilde, d, &counter)
}

/// [`exp_taylor_ps`] plus the measured product count.
pub fn exp_taylor_ps_with_count(a_tilde: &DenseMatrix, d: usize) -> Result<(DenseMatrix, u64)> {
    let counter = ProductCounter::new();
    let value = exp_taylor_ps_counted(a_tilde, d, &counter)?;
    Ok((value, counter.count()))
}

pub(crate) fn exp_taylor_ps_counted(
    a_tilde: &DenseMatrix,
    d: usize,
    counter: &ProductCounter,
) -> Result<DenseMatrix> {
    if !crate::params::DEGREE_SET.contains(&d) {
        return Err(Error::UnsupportedDegree(d));
    }
    if !a_tilde.is_square() {
        return Err(Error::ShapeMismatch {
            context: "exp_taylor_ps",
            expected: (a_tilde.rows(), a_tilde.rows()),
            found: a_tilde.shape(),
        });
    }
    let n = a_tilde.rows();
    let r = (d as f64).sqrt().ceil() as usize;
    let v = d / r; // exact for every degree in the set
    debug_assert_eq!(r * v, d);

    // Powers A^1 .. A^r: r - 1 products.
    let mut powers: Vec<DenseMatrix> = Vec::with_capacity(r + 1);
    powers.push(DenseMatrix::identity(n));
    powers.push(a_tilde.clone());
    for _ in 2..=r {
        powers.push(powers.last().unwrap().matmul_counted(a_tilde, counter));
    }

    let coeff = inverse_factorials(d);
    let block = |i: usize| -> DenseMatrix {
        let mut b = DenseMatrix::identity(n).scale(coeff[i * r]);
        for j in 1..r {
            b.add_scaled_assign(coeff[i * r + j], &powers[j]);
        }
        b
    };

    // Top block is the scalar c_d I, so its product with A^r is a scaling:
    // start the Horner recursion one level down for free.
    let mut acc = powers[r].scale(coeff[d]).add(&block(v - 1));
    for i in (0..v - 1).rev() {
        acc = acc.matmul_counted(&powers[r], counter).add(&block(i));
    }
    Ok(acc)
}

/// `phi_l(L_A)[Q]` for `l >= 1`; the result carries only index `l`.
pub fn phi_lyap(a: &DenseMatrix, q: &DenseMatrix, l: usize) -> Result<PhiResult> {
    phi_lyap_with(a, q, l, &PhiOptions::default())
}

pub fn phi_lyap_with(
    a: &DenseMatrix,
    q: &DenseMatrix,
    l: usize,
    options: &PhiOptions,
) -> Result<PhiResult> {
    if l == 0 {
        return Err(Error::InvalidArgument(
            "phi_lyap needs l >= 1; use phi_multi with l_max = 0 for the exponential".into(),
        ));
    }
    phi_pipeline(a, q, l, options, false)
}

/// All of `phi_1 .. phi_{l_max}` from one pipeline run; `l_max = 0` yields
/// the operator exponential `e^{L_A}[Q] = E Q E^T` under index 0.
pub fn phi_multi(a: &DenseMatrix, q: &DenseMatrix, l_max: usize) -> Result<PhiResult> {
    phi_multi_with(a, q, l_max, &PhiOptions::default())
}

pub fn phi_multi_with(
    a: &DenseMatrix,
    q: &DenseMatrix,
    l_max: usize,
    options: &PhiOptions,
) -> Result<PhiResult> {
    phi_pipeline(a, q, l_max, options, true)
}

/// Time-scaled variant: `phi_j(t L_A)[Q]` for `j = 1..=l`, by folding `t`
/// into the coefficient before parameter selection.
pub fn phi_scaled(a: &DenseMatrix, q: &DenseMatrix, l: usize, t: f64) -> Result<PhiResult> {
    phi_scaled_with(a, q, l, t, &PhiOptions::default())
}

pub fn phi_scaled_with(
    a: &DenseMatrix,
    q: &DenseMatrix,
    l: usize,
    t: f64,
    options: &PhiOptions,
) -> Result<PhiResult> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("phi_scaled needs t > 0, got {t}")));
    }
    phi_multi_with(&a.scale(t), q, l, options)
}

fn phi_pipeline(
    a: &DenseMatrix,
    q: &DenseMatrix,
    l: usize,
    options: &PhiOptions,
    all_final: bool,
) -> Result<PhiResult> {
    if !a.is_square() {
        return Err(Error::ShapeMismatch {
            context: "phi kernel",
            expected: (a.rows(), a.rows()),
            found: a.shape(),
        });
    }
    q.require_same_shape(a, "phi kernel")?;
    a.check_finite("phi kernel coefficient")?;
    q.check_finite("phi kernel operand")?;

    let symmetric = q.is_symmetric_within(SYMMETRY_WARN_TOL);
    if !symmetric {
        log::warn!(
            "phi kernel: Q has relative asymmetry {:.2e}; proceeding with the general path",
            q.asymmetry()
        );
    }

    let params = select_params_with(a, l, ThetaTable::shared(), &options.estimator())?;
    let counter = ProductCounter::new();
    let a_tilde = a.scale(2f64.powi(-(params.s as i32)));
    let op = LyapunovOperator::new(a_tilde)?;
    let (m, s) = (params.m, params.s);

    if l == 0 {
        return phi_exponential_path(&op, q, params, options, &counter);
    }

    let t_top = op.taylor_apply_counted(q, l, m, symmetric, &counter)?;

    if s == 0 {
        let mut values = BTreeMap::new();
        if all_final && l >= 2 {
            let stack = op.phi_stack_down_counted(q, l, t_top, m, symmetric, &counter)?;
            for j in 1..=l {
                values.insert(j, stack.t(j).clone());
            }
        } else {
            values.insert(l, t_top);
        }
        let exp_factor = if options.want_exp_factor {
            // At s = 0 the scaled and full coefficients coincide.
            Some(exp_taylor_ps_counted(op.coefficient(), m + l, &counter)?)
        } else {
            None
        };
        return Ok(PhiResult { values, exp_factor, params, products_used: counter.count() });
    }

    // Squaring phase. `stack[k-1]` holds T_k at the current scale.
    let stack = op.phi_stack_down_counted(q, l, t_top, m, symmetric, &counter)?;
    let mut current: Vec<DenseMatrix> = (1..=l).map(|j| stack.t(j).clone()).collect();
    let mut e = exp_taylor_ps_counted(op.coefficient(), m + l, &counter)?;
    let inv_fact = inverse_factorials(l);

    for _scale in 1..s {
        let mut next = Vec::with_capacity(l);
        for k in 1..=l {
            next.push(double_index(k, &e, &current, &inv_fact, &counter));
        }
        for t in &next {
            if !t.is_finite() {
                return Err(Error::SquaringOverflow);
            }
        }
        current = next;
        e = e.matmul_counted(&e, &counter);
        if !e.is_finite() {
            return Err(Error::SquaringOverflow);
        }
    }

    // Final doubling to full scale; only the requested indices.
    let mut values = BTreeMap::new();
    if all_final {
        for k in 1..=l {
            values.insert(k, double_index(k, &e, &current, &inv_fact, &counter));
        }
    } else {
        values.insert(l, double_index(l, &e, &current, &inv_fact, &counter));
    }
    for t in values.values() {
        if !t.is_finite() {
            return Err(Error::SquaringOverflow);
        }
    }

    let exp_factor = if options.want_exp_factor {
        let full = e.matmul_counted(&e, &counter);
        if !full.is_finite() {
            return Err(Error::SquaringOverflow);
        }
        Some(full)
    } else {
        None
    };

    Ok(PhiResult { values, exp_factor, params, products_used: counter.count() })
}

/// One doubling of index `k`:
/// `T_k(2L)[Q] = 2^{-k} (E T_k E^T + sum_{j=1..k} T_j / (k-j)!)`.
fn double_index(
    k: usize,
    e: &DenseMatrix,
    stack: &[DenseMatrix],
    inv_fact: &[f64],
    counter: &ProductCounter,
) -> DenseMatrix {
    let sandwich = e.matmul_counted(&stack[k - 1], counter).matmul_transb_counted(e, counter);
    let mut acc = sandwich;
    for j in 1..=k {
        acc.add_scaled_assign(inv_fact[k - j], &stack[j - 1]);
    }
    acc.scale_assign(2f64.powi(-(k as i32)));
    acc
}

/// `l = 0`: plain exponential path, `e^{L_A}[Q] = E Q E^T` with
/// `E = T_0(Atilde)^{2^s}`.
fn phi_exponential_path(
    op: &LyapunovOperator,
    q: &DenseMatrix,
    params: PhiParams,
    options: &PhiOptions,
    counter: &ProductCounter,
) -> Result<PhiResult> {
    let mut e = exp_taylor_ps_counted(op.coefficient(), params.m, counter)?;
    for _ in 0..params.s {
        e = e.matmul_counted(&e, counter);
        if !e.is_finite() {
            return Err(Error::SquaringOverflow);
        }
    }
    let result = e.matmul_counted(q, counter).matmul_transb_counted(&e, counter);
    if !result.is_finite() {
        return Err(Error::SquaringOverflow);
    }
    let mut values = BTreeMap::new();
    values.insert(0, result);
    let exp_factor = if options.want_exp_factor { Some(e) } else { None };
    Ok(PhiResult { values, exp_factor, params, products_used: counter.count() })
}
