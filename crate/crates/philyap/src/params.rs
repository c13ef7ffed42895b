//! Selection of the Taylor degree `m` and scaling exponent `s`.
//!
//! The scaled operator must satisfy `alpha* <= theta_{m+l}`, where the
//! `theta` thresholds come from the quasi-backward error majorant (module
//! [`crate::theta`]) and `alpha*` is a cheap surrogate for the operator
//! power norms `||L^k||^{1/k}`, built from the binomial bound
//!
//! ```text
//! d_p = 2 max{ ||A^k||_1 ||A^{p-k}||_1 : k = 0..p },
//! alpha_p = max(d_p^{1/p}, d_{p+1}^{1/(p+1)}).
//! ```
//!
//! The candidate total degrees are `m + l in {6, 9, 12, 16, 20, 25}`; the
//! first with `alpha* <= theta` wins with `s = 0`, otherwise the degree is
//! pinned at 25 and `s = ceil(log2(alpha*_25 / theta_25))`.
//!
//! The backward criterion alone does not control the forward error of the
//! index-`l` value when the argument is small: the degree-`m` truncation of
//! `phi_l` carries a relative tail of roughly `l! alpha^{m+1} / (m+l+1)!`,
//! which for, say, `alpha = 1e-3`, `l = 5`, `m = 1` sits near 3e-8. The scan
//! therefore also requires that tail to stay at or below the tolerance, and
//! the scaled branch raises `s` until it does. Small arguments simply move
//! one or two degrees up the candidate list; large-norm regimes are
//! untouched.
//!
//! Norms of the powers of `A` are estimated by [`crate::normest`] and cached
//! in a monotone ladder so the `d_p` share work.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::kernel::predicted_product_count;
use crate::matrix::DenseMatrix;
use crate::normest::NormEstimator;

/// Candidate total degrees `m + l`, in increasing order.
pub const DEGREE_SET: [usize; 6] = [6, 9, 12, 16, 20, 25];

/// Largest admissible `p` in the `alpha_p` scan.
pub const P_MAX: usize = 5;

/// Backward-error thresholds `theta_d`, keyed by total degree.
#[derive(Debug, Clone)]
pub struct ThetaTable {
    entries: BTreeMap<usize, f64>,
    /// Backward-error target the entries were derived for.
    pub tolerance: f64,
}

/// Thresholds for tolerance 2^-53, derived offline by
/// [`crate::theta::derive_theta`] and frozen as a plain-text asset.
const THETA_ASSET: &str = include_str!("../assets/theta_default.txt");

impl ThetaTable {
    /// Parses a `degree theta` per-line table; `#` starts a comment.
    pub fn parse(text: &str, tolerance: f64) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<f64> {
                tok.ok_or_else(|| Error::Parse {
                    line: idx + 1,
                    message: "expected `degree theta`".into(),
                })?
                .parse::<f64>()
                .map_err(|e| Error::Parse { line: idx + 1, message: e.to_string() })
            };
            let degree = parse(parts.next())? as usize;
            let theta = parse(parts.next())?;
            entries.insert(degree, theta);
        }
        let table = Self { entries, tolerance };
        table.validate()?;
        Ok(table)
    }

    fn validate(&self) -> Result<()> {
        let mut prev = 0.0;
        for (&d, &theta) in &self.entries {
            if theta <= prev || !theta.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "theta table must increase strictly with the degree; offending degree {d}"
                )));
            }
            prev = theta;
        }
        for d in DEGREE_SET {
            if !self.entries.contains_key(&d) {
                return Err(Error::InvalidArgument(format!(
                    "theta table is missing required degree {d}"
                )));
            }
        }
        Ok(())
    }

    /// The table shipped with the crate (tolerance 2^-53).
    pub fn shared() -> &'static ThetaTable {
        static TABLE: OnceLock<ThetaTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            ThetaTable::parse(THETA_ASSET, 2f64.powi(-53)).expect("embedded theta table is valid")
        })
    }

    pub fn theta(&self, degree: usize) -> Option<f64> {
        self.entries.get(&degree).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().map(|(&d, &t)| (d, t))
    }
}

/// Selected kernel parameters plus selection diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiParams {
    /// Taylor degree of the top-index truncation.
    pub m: usize,
    /// Scaling exponent: the kernel works with `2^{-s} A`.
    pub s: u32,
    /// The winning norm surrogate `alpha*_{m+l}`.
    pub alpha_star: f64,
    /// `m + l`.
    pub total_degree: usize,
    /// Matrix-product count the kernel will consume for this `(l, m, s)`.
    pub predicted_products: u64,
}

/// Caches 1-norms of powers of `A`; small matrices keep the power ladder so
/// each new exact norm costs one product.
pub struct PowerNormCache<'a> {
    a: &'a DenseMatrix,
    estimator: NormEstimator,
    norms: RefCell<BTreeMap<usize, f64>>,
    ladder: RefCell<Option<(usize, DenseMatrix)>>,
}

impl<'a> PowerNormCache<'a> {
    pub fn new(a: &'a DenseMatrix, estimator: NormEstimator) -> Self {
        Self { a, estimator, norms: RefCell::new(BTreeMap::new()), ladder: RefCell::new(None) }
    }

    /// `||A^k||_1`, with `||A^0||_1 = 1`.
    pub fn norm(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Ok(1.0);
        }
        if let Some(&v) = self.norms.borrow().get(&k) {
            return Ok(v);
        }
        let value = if self.a.rows() < self.estimator.exact_threshold {
            self.exact_norm(k)?
        } else {
            self.estimator.power_norm(self.a, k)?.value
        };
        self.norms.borrow_mut().insert(k, value);
        Ok(value)
    }

    fn exact_norm(&self, k: usize) -> Result<f64> {
        let mut ladder = self.ladder.borrow_mut();
        let (mut kk, mut power) = match ladder.take() {
            Some((kk, power)) if kk <= k => (kk, power),
            _ => (1, self.a.clone()),
        };
        while kk < k {
            power = power.matmul(self.a);
            kk += 1;
            if !power.is_finite() {
                return Err(Error::NormOverflow);
            }
        }
        let value = power.one_norm();
        *ladder = Some((kk, power));
        Ok(value)
    }
}

/// Raw binomial surrogate without roots,
/// `d_p = 2 max{||A^k||_1 ||A^{p-k}||_1}`, as the selection algorithm uses it.
fn d_raw(cache: &PowerNormCache<'_>, p: usize) -> Result<f64> {
    let mut best = 0.0f64;
    for k in 0..=p {
        best = best.max(cache.norm(k)? * cache.norm(p - k)?);
    }
    Ok(2.0 * best)
}

/// Power-norm bound with the root applied inside the maximum:
/// `d_k = 2 max_j (||A^j||_1 ||A^{k-j}||_1)^{1/k}`.
pub fn d_bound(a: &DenseMatrix, k: usize) -> Result<f64> {
    d_bound_cached(&PowerNormCache::new(a, NormEstimator::default()), k)
}

pub fn d_bound_cached(cache: &PowerNormCache<'_>, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("d_bound needs k >= 1".into()));
    }
    let mut best = 0.0f64;
    for j in 0..=k {
        best = best.max((cache.norm(j)? * cache.norm(k - j)?).powf(1.0 / k as f64));
    }
    Ok(2.0 * best)
}

/// Surrogate `alpha_p = max(d_p^{1/p}, d_{p+1}^{1/(p+1)})` with the raw
/// (rootless) `d_p` of the selection algorithm.
pub fn alpha_p(a: &DenseMatrix, p: usize) -> Result<f64> {
    alpha_p_cached(&PowerNormCache::new(a, NormEstimator::default()), p)
}

pub fn alpha_p_cached(cache: &PowerNormCache<'_>, p: usize) -> Result<f64> {
    if p == 0 {
        return Err(Error::InvalidArgument("alpha_p needs p >= 1".into()));
    }
    let dp = d_raw(cache, p)?;
    let dp1 = d_raw(cache, p + 1)?;
    Ok(dp.powf(1.0 / p as f64).max(dp1.powf(1.0 / (p + 1) as f64)))
}

/// Relative truncation tail of the degree-`m` series for `phi_l` at
/// argument norm `alpha`, normalized by the leading coefficient `1/l!`:
/// `l! sum_{k > m} alpha^k / (k+l)!`.
fn phi_truncation_tail(alpha: f64, l: usize, m: usize) -> f64 {
    if alpha == 0.0 {
        return 0.0;
    }
    // term_k = alpha^k l!/(k+l)! built up iteratively.
    let mut term = 1.0f64;
    for i in 1..=m + 1 {
        term *= alpha / (l + i) as f64;
    }
    let mut tail = term;
    for i in m + 2..m + 40 {
        term *= alpha / (l + i) as f64;
        tail += term;
        if term < tail * 1e-18 {
            break;
        }
    }
    tail
}

/// Chooses `(m, s)` for evaluating `phi_l` with the shared theta table and
/// the default norm estimator.
pub fn select_params(a: &DenseMatrix, l: usize) -> Result<PhiParams> {
    select_params_with(a, l, ThetaTable::shared(), &NormEstimator::default())
}

pub fn select_params_with(
    a: &DenseMatrix,
    l: usize,
    table: &ThetaTable,
    estimator: &NormEstimator,
) -> Result<PhiParams> {
    if !a.is_square() {
        return Err(Error::ShapeMismatch {
            context: "select_params",
            expected: (a.rows(), a.rows()),
            found: a.shape(),
        });
    }
    if l >= *DEGREE_SET.last().unwrap() {
        return Err(Error::DegreeSetExhausted(l));
    }

    let cache = PowerNormCache::new(a, *estimator);
    let mut alphas = [0.0f64; P_MAX];
    for p in 1..=P_MAX {
        alphas[p - 1] = alpha_p_cached(&cache, p)?;
    }

    let alpha_star_for = |total: usize| -> f64 {
        (1..=P_MAX)
            .filter(|p| p * (p - 1) <= total)
            .map(|p| alphas[p - 1])
            .fold(f64::INFINITY, f64::min)
    };

    for &total in DEGREE_SET.iter() {
        if total <= l {
            // m = total - l would drop below 1; skip the index.
            continue;
        }
        let m = total - l;
        let theta = table
            .theta(total)
            .ok_or_else(|| Error::InvalidArgument(format!("theta table misses degree {total}")))?;
        let alpha_star = alpha_star_for(total);
        if alpha_star <= theta && phi_truncation_tail(alpha_star, l, m) <= table.tolerance {
            return Ok(PhiParams {
                m,
                s: 0,
                alpha_star,
                total_degree: total,
                predicted_products: predicted_product_count(l, m, 0),
            });
        }
    }

    let total = *DEGREE_SET.last().unwrap();
    let m = total - l;
    let theta = table.theta(total).expect("validated table has degree 25");
    let alpha_star = alpha_star_for(total);
    let mut s = ((alpha_star / theta).log2().ceil()).max(1.0) as u32;
    while phi_truncation_tail(alpha_star * 2f64.powi(-(s as i32)), l, m) > table.tolerance {
        s += 1;
    }
    Ok(PhiParams {
        m,
        s,
        alpha_star,
        total_degree: total,
        predicted_products: predicted_product_count(l, m, s),
    })
}
