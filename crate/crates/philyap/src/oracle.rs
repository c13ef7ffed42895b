//! Brute-force reference computations, independent of the kernel.
//!
//! Everything here works on the Kronecker-sum vectorization: the Lyapunov
//! operator becomes the dense `N^2 x N^2` matrix `A (+) A`, and the operator
//! phi-functions become matrix phi-functions acting on `vec(Q)`. Three
//! references are provided, built on deliberately plain machinery so they do
//! not share failure modes with the kernel:
//!
//! * [`phi_reference`] - augmented-matrix exponential via deep scaling, a
//!   high-degree Taylor sum, and repeated squaring;
//! * [`dle_reference`]  - adaptive Dormand-Prince integration of the
//!   vectorized differential Lyapunov equation;
//! * [`phi_symmetric_reference`] - spectral route for symmetric `A` (Jacobi
//!   eigendecomposition plus entrywise scalar phi on eigenvalue sums), the
//!   only reference usable beyond the dense `N <= 64` guard.
//!
//! Memory scales as `N^4`; callers should not run several `N = 64` oracles
//! concurrently.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Largest `N` the dense vectorized oracles accept.
pub const ORACLE_MAX_N: usize = 64;

fn guard_scale(n: usize) -> Result<()> {
    if n > ORACLE_MAX_N {
        Err(Error::OracleScale { n, max: ORACLE_MAX_N })
    } else {
        Ok(())
    }
}

/// The vectorized picture of a Lyapunov problem: the `N^2 x N^2` matrix
/// `L = A (+) A` and the right-hand side `b = vec(Q)`, satisfying
/// `L vec(X) = vec(A X + X A^T)`.
#[derive(Debug, Clone)]
pub struct VectorizedSystem {
    pub l: DenseMatrix,
    pub b: Vec<f64>,
}

impl VectorizedSystem {
    pub fn new(a: &DenseMatrix, q: &DenseMatrix) -> Result<Self> {
        if !q.same_shape(a) {
            return Err(Error::ShapeMismatch {
                context: "VectorizedSystem",
                expected: a.shape(),
                found: q.shape(),
            });
        }
        Ok(Self { l: kron_sum(a)?, b: q.vectorize() })
    }
}

/// Dense Kronecker sum `A (+) A = A (x) I + I (x) A` of size `N^2 x N^2`,
/// the matrix of the Lyapunov operator under column-wise vectorization.
pub fn kron_sum(a: &DenseMatrix) -> Result<DenseMatrix> {
    if !a.is_square() {
        return Err(Error::ShapeMismatch {
            context: "kron_sum",
            expected: (a.rows(), a.rows()),
            found: a.shape(),
        });
    }
    guard_scale(a.rows())?;
    let n = a.rows();
    let mut l = DenseMatrix::zeros(n * n, n * n);
    // vec index v = j*n + i for entry (i, j).
    for j in 0..n {
        for i in 0..n {
            let row = j * n + i;
            // (I (x) A): block diagonal, couples i within fixed j.
            for k in 0..n {
                l[(row, j * n + k)] += a[(i, k)];
            }
            // (A (x) I): couples j within fixed i.
            for lcol in 0..n {
                l[(row, lcol * n + i)] += a[(j, lcol)];
            }
        }
    }
    Ok(l)
}

/// Plain scaling-and-squaring exponential: Taylor of degree 60 after scaling
/// the 1-norm below 1/4, then repeated squaring. Intentionally naive.
fn naive_expm(m: &DenseMatrix) -> Result<DenseMatrix> {
    const TAYLOR_DEGREE: usize = 60;
    let norm = m.one_norm();
    let mut squarings = 0u32;
    let mut scaled_norm = norm;
    while scaled_norm >= 0.25 {
        scaled_norm *= 0.5;
        squarings += 1;
    }
    let scaled = m.scale(0.5f64.powi(squarings as i32));

    // Horner over scalar coefficients 1/k!.
    let inv_fact = crate::lyapop::inverse_factorials(TAYLOR_DEGREE);
    let n = m.rows();
    let mut acc = DenseMatrix::identity(n).scale(inv_fact[TAYLOR_DEGREE]);
    for k in (0..TAYLOR_DEGREE).rev() {
        acc = acc.matmul(&scaled).add_scaled_identity(inv_fact[k]);
    }
    for _ in 0..squarings {
        acc = acc.matmul(&acc);
        if !acc.is_finite() {
            return Err(Error::NonFinite("oracle exponential squaring"));
        }
    }
    Ok(acc)
}

/// Reference values `phi_j(L_A)[Q]` for `j = 1..=l_max` from one augmented
/// exponential: with the coupling block `W = [b, 0, ...]` and the nilpotent
/// upshift `J`, column `N^2 + j` of `exp([[L, W], [0, J]])` is `phi_j(L) b`.
pub fn phi_reference_all(a: &DenseMatrix, q: &DenseMatrix, l_max: usize) -> Result<Vec<DenseMatrix>> {
    if !a.is_square() || !q.same_shape(a) {
        return Err(Error::ShapeMismatch {
            context: "phi_reference",
            expected: a.shape(),
            found: q.shape(),
        });
    }
    guard_scale(a.rows())?;
    let n = a.rows();
    let nn = n * n;
    let l_big = kron_sum(a)?;
    let b = q.vectorize();

    if l_max == 0 {
        return Ok(Vec::new());
    }

    let dim = nn + l_max;
    let mut aug = DenseMatrix::zeros(dim, dim);
    for i in 0..nn {
        for j in 0..nn {
            aug[(i, j)] = l_big[(i, j)];
        }
    }
    for i in 0..nn {
        aug[(i, nn)] = b[i];
    }
    for k in 0..l_max.saturating_sub(1) {
        aug[(nn + k, nn + k + 1)] = 1.0;
    }

    let e = naive_expm(&aug)?;
    let mut out = Vec::with_capacity(l_max);
    for j in 1..=l_max {
        let col: Vec<f64> = (0..nn).map(|i| e[(i, nn + j - 1)]).collect();
        out.push(DenseMatrix::from_vectorized(n, &col));
    }
    Ok(out)
}

/// Reference `phi_l(L_A)[Q]`; `l = 0` is the plain exponential sandwich
/// `unvec(exp(A (+) A) vec(Q))`.
pub fn phi_reference(a: &DenseMatrix, q: &DenseMatrix, l: usize) -> Result<DenseMatrix> {
    if l == 0 {
        if !a.is_square() || !q.same_shape(a) {
            return Err(Error::ShapeMismatch {
                context: "phi_reference",
                expected: a.shape(),
                found: q.shape(),
            });
        }
        guard_scale(a.rows())?;
        let e = naive_expm(&kron_sum(a)?)?;
        let x = matvec(&e, &q.vectorize());
        return Ok(DenseMatrix::from_vectorized(a.rows(), &x));
    }
    Ok(phi_reference_all(a, q, l)?.pop().expect("l >= 1"))
}

fn matvec(m: &DenseMatrix, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m.rows()];
    for i in 0..m.rows() {
        let mut s = 0.0;
        for j in 0..m.cols() {
            s += m[(i, j)] * v[j];
        }
        out[i] = s;
    }
    out
}

// ---------------------------------------------------------------------------
// Adaptive Dormand-Prince (RK45) integration.
// ---------------------------------------------------------------------------

/// Dormand-Prince 5(4) with elementary step-size control. Exposed so tests
/// can integrate their own reference systems; `f` maps `(t, y)` to `dy/dt`.
pub fn rk45<F>(f: F, t0: f64, t_end: f64, y0: Vec<f64>, atol: f64, rtol: f64) -> Result<Vec<f64>>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    const A21: f64 = 1.0 / 5.0;
    const A31: f64 = 3.0 / 40.0;
    const A32: f64 = 9.0 / 40.0;
    const A41: f64 = 44.0 / 45.0;
    const A42: f64 = -56.0 / 15.0;
    const A43: f64 = 32.0 / 9.0;
    const A51: f64 = 19372.0 / 6561.0;
    const A52: f64 = -25360.0 / 2187.0;
    const A53: f64 = 64448.0 / 6561.0;
    const A54: f64 = -212.0 / 729.0;
    const A61: f64 = 9017.0 / 3168.0;
    const A62: f64 = -355.0 / 33.0;
    const A63: f64 = 46732.0 / 5247.0;
    const A64: f64 = 49.0 / 176.0;
    const A65: f64 = -5103.0 / 18656.0;
    // 5th order solution weights (also the last stage row).
    const B1: f64 = 35.0 / 384.0;
    const B3: f64 = 500.0 / 1113.0;
    const B4: f64 = 125.0 / 192.0;
    const B5: f64 = -2187.0 / 6784.0;
    const B6: f64 = 11.0 / 84.0;
    // Embedded 4th order weights.
    const C1: f64 = 5179.0 / 57600.0;
    const C3: f64 = 7571.0 / 16695.0;
    const C4: f64 = 393.0 / 640.0;
    const C5: f64 = -92097.0 / 339200.0;
    const C6: f64 = 187.0 / 2100.0;
    const C7: f64 = 1.0 / 40.0;

    let span = t_end - t0;
    if span <= 0.0 {
        return Err(Error::InvalidArgument("rk45 needs t_end > t0".into()));
    }
    let dim = y0.len();
    let mut t = t0;
    let mut y = y0;
    let mut h = (span / 100.0).min(1e-3 * span.max(1.0));
    let h_min = span * 1e-14;
    let combine = |y: &[f64], parts: &[(f64, &[f64])], h: f64| -> Vec<f64> {
        let mut out = y.to_vec();
        for (w, k) in parts {
            for i in 0..dim {
                out[i] += h * w * k[i];
            }
        }
        out
    };

    let mut k1 = f(t, &y);
    while t < t_end {
        if h < h_min {
            return Err(Error::StiffOracle(t));
        }
        if t + h > t_end {
            h = t_end - t;
        }
        let k2 = f(t + 0.2 * h, &combine(&y, &[(A21, &k1)], h));
        let k3 = f(t + 0.3 * h, &combine(&y, &[(A31, &k1), (A32, &k2)], h));
        let k4 = f(t + 0.8 * h, &combine(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h));
        let k5 = f(
            t + 8.0 / 9.0 * h,
            &combine(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h),
        );
        let k6 = f(
            t + h,
            &combine(&y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], h),
        );
        let y5 = combine(&y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], h);
        let k7 = f(t + h, &y5);
        let y4 = combine(&y, &[(C1, &k1), (C3, &k3), (C4, &k4), (C5, &k5), (C6, &k6), (C7, &k7)], h);

        // Scaled RMS error estimate.
        let mut err = 0.0f64;
        for i in 0..dim {
            let sc = atol + rtol * y[i].abs().max(y5[i].abs());
            let e = (y5[i] - y4[i]) / sc;
            err += e * e;
        }
        err = (err / dim as f64).sqrt();

        if !err.is_finite() {
            h *= 0.25;
            continue;
        }
        if err <= 1.0 {
            t += h;
            y = y5;
            k1 = k7; // first-same-as-last
        }
        let factor = if err == 0.0 { 5.0 } else { 0.9 * err.powf(-0.2) };
        h *= factor.clamp(0.2, 5.0);
    }
    Ok(y)
}

/// Exact DLE solution `X(t)` of `X' = A X + X A^T + t^{l-1}/(l-1)! Q`,
/// `X(0) = 0`, by integrating the vectorized system; equals
/// `t^l phi_l(t L_A)[Q]`. A structurally different second oracle.
///
/// The absolute tolerance sits at 1e-16 because high indices produce
/// solutions of size `||Q||/l!`; at `l = 8` a looser floor already costs
/// more relative accuracy than the oracle is allowed.
pub fn dle_reference(a: &DenseMatrix, q: &DenseMatrix, l: usize, t: f64) -> Result<DenseMatrix> {
    if l == 0 {
        return Err(Error::InvalidArgument("dle_reference needs l >= 1".into()));
    }
    if !a.is_square() || !q.same_shape(a) {
        return Err(Error::ShapeMismatch {
            context: "dle_reference",
            expected: a.shape(),
            found: q.shape(),
        });
    }
    if t <= 0.0 {
        return Err(Error::InvalidArgument("dle_reference needs t > 0".into()));
    }
    guard_scale(a.rows())?;
    let n = a.rows();
    let l_big = kron_sum(a)?;
    let b = q.vectorize();
    let inv_fact_l1 = crate::lyapop::inverse_factorials(l.saturating_sub(1));
    let source_coeff = inv_fact_l1[l - 1];

    let rhs = |tau: f64, y: &[f64]| -> Vec<f64> {
        let mut dy = matvec(&l_big, y);
        let s = source_coeff * tau.powi((l - 1) as i32);
        for i in 0..dy.len() {
            dy[i] += s * b[i];
        }
        dy
    };
    let y = rk45(rhs, 0.0, t, vec![0.0; n * n], 1e-16, 1e-13)?;
    Ok(DenseMatrix::from_vectorized(n, &y))
}

// ---------------------------------------------------------------------------
// Spectral reference for symmetric A.
// ---------------------------------------------------------------------------

/// Scalar `phi_l(z)`: Taylor series for small arguments, the upward
/// recurrence `phi_k = (phi_{k-1} - 1/(k-1)!) / z` elsewhere. The recurrence
/// amplifies rounding by roughly `l! / |z|^l`, so the series branch extends
/// to `|z| = 2.5` where that factor is still harmless for `l <= 8`.
pub fn phi_scalar(z: f64, l: usize) -> f64 {
    const SERIES_RADIUS: f64 = 2.5;
    const SERIES_TERMS: usize = 34;
    if z.abs() < SERIES_RADIUS {
        let inv_fact = crate::lyapop::inverse_factorials(l + SERIES_TERMS);
        let mut acc = 0.0;
        let mut zk = 1.0;
        for k in 0..=SERIES_TERMS {
            acc += zk * inv_fact[k + l];
            zk *= z;
        }
        return acc;
    }
    let inv_fact = crate::lyapop::inverse_factorials(l.max(1));
    let mut phi = z.exp();
    for k in 1..=l {
        phi = (phi - inv_fact[k - 1]) / z;
    }
    phi
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix: returns
/// `(eigenvalues, V)` with `A = V diag(lambda) V^T`, `V` orthogonal.
pub fn jacobi_eigh(a: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    if !a.is_square() {
        return Err(Error::ShapeMismatch {
            context: "jacobi_eigh",
            expected: (a.rows(), a.rows()),
            found: a.shape(),
        });
    }
    let n = a.rows();
    let mut m = a.clone();
    let mut v = DenseMatrix::identity(n);
    let tol = 1e-15 * a.frobenius_norm().max(f64::MIN_POSITIVE);

    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m[(p, q)].abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= tol * 1e-2 {
                    continue;
                }
                let tau = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let lambda: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    Ok((lambda, v))
}

/// Spectral reference for symmetric `A`:
/// `phi_l(L_A)[Q] = V (Phi_l .* (V^T Q V)) V^T` with
/// `(Phi_l)_{ij} = phi_l(lambda_i + lambda_j)`. Valid at any `N`.
pub fn phi_symmetric_reference(a: &DenseMatrix, q: &DenseMatrix, l: usize) -> Result<DenseMatrix> {
    if !a.is_square() || !q.same_shape(a) {
        return Err(Error::ShapeMismatch {
            context: "phi_symmetric_reference",
            expected: a.shape(),
            found: q.shape(),
        });
    }
    if a.asymmetry() > 1e-12 {
        return Err(Error::InvalidArgument(
            "phi_symmetric_reference needs symmetric A".into(),
        ));
    }
    let n = a.rows();
    let (lambda, v) = jacobi_eigh(a)?;
    let mut core = v.transpose().matmul(q).matmul(&v);
    for i in 0..n {
        for j in 0..n {
            core[(i, j)] *= phi_scalar(lambda[i] + lambda[j], l);
        }
    }
    Ok(v.matmul(&core).matmul(&v.transpose()))
}
