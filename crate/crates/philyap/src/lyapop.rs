//! The Lyapunov operator `L_A[X] = A X + X A^T` and its truncated Taylor
//! machinery: operator powers, the Horner evaluation of
//! `T_{l,m}(L)[Q] = sum_{k=0..m} L^k[Q] / (k+l)!`, and the downward recursion
//! `T_{j,m} = L[T_{j+1,m}] + Q/j!` that fills the stack of lower indices.
//!
//! Cost convention: applying `L` to a symmetric operand costs one matrix
//! product (`A B` followed by a transpose-add, since `B A^T = (A B)^T` for
//! symmetric `B`); a general operand costs two. This single-product form is
//! what makes the Horner loop cost `m` products and is the convention under
//! which the kernel's product counts are exact.

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, ProductCounter};

/// Relative asymmetry above which a `Q` input is reported as non-symmetric.
pub const SYMMETRY_WARN_TOL: f64 = 1e-12;

/// The linear map `X -> A X + X A^T` on square matrices.
#[derive(Debug, Clone)]
pub struct LyapunovOperator {
    a: DenseMatrix,
}

impl LyapunovOperator {
    pub fn new(a: DenseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::ShapeMismatch {
                context: "LyapunovOperator::new",
                expected: (a.rows(), a.rows()),
                found: a.shape(),
            });
        }
        a.check_finite("LyapunovOperator coefficient")?;
        Ok(Self { a })
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    pub fn coefficient(&self) -> &DenseMatrix {
        &self.a
    }

    fn check_operand(&self, x: &DenseMatrix, context: &'static str) -> Result<()> {
        if x.shape() != self.a.shape() {
            return Err(Error::ShapeMismatch {
                context,
                expected: self.a.shape(),
                found: x.shape(),
            });
        }
        Ok(())
    }

    /// `A X + X A^T`; two matrix products.
    pub fn apply(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        let counter = ProductCounter::new();
        self.apply_counted(x, &counter)
    }

    /// General-operand application, two counted products.
    pub fn apply_counted(&self, x: &DenseMatrix, counter: &ProductCounter) -> Result<DenseMatrix> {
        self.check_operand(x, "LyapunovOperator::apply")?;
        let ax = self.a.matmul_counted(x, counter);
        let xat = x.matmul_transb_counted(&self.a, counter);
        Ok(ax.add(&xat))
    }

    /// Application to a symmetric operand: `A B + (A B)^T`, one counted
    /// product. The caller guarantees `B = B^T`; the result is then exactly
    /// symmetric in floating point.
    pub(crate) fn apply_symmetric(&self, b: &DenseMatrix, counter: &ProductCounter) -> DenseMatrix {
        let ab = self.a.matmul_counted(b, counter);
        ab.add_transposed(&ab)
    }

    pub(crate) fn apply_auto(
        &self,
        x: &DenseMatrix,
        symmetric: bool,
        counter: &ProductCounter,
    ) -> Result<DenseMatrix> {
        if symmetric {
            Ok(self.apply_symmetric(x, counter))
        } else {
            self.apply_counted(x, counter)
        }
    }

    /// `L^k[X]`; `k = 0` returns `X` unchanged.
    pub fn apply_power(&self, x: &DenseMatrix, k: usize) -> Result<DenseMatrix> {
        self.check_operand(x, "LyapunovOperator::apply_power")?;
        let mut y = x.clone();
        for _ in 0..k {
            y = self.apply(&y)?;
        }
        Ok(y)
    }

    /// Horner evaluation of the truncated series
    /// `T_{l,m}(L)[Q] = sum_{k=0}^{m} L^k[Q] / (k+l)!`.
    ///
    /// Costs `m` products for symmetric `Q`, `2m` otherwise; a zero `Q`
    /// short-circuits without consuming products.
    pub fn taylor_apply(&self, q: &DenseMatrix, l: usize, m: usize) -> Result<DenseMatrix> {
        let counter = ProductCounter::new();
        let symmetric = q.is_symmetric_within(SYMMETRY_WARN_TOL);
        self.taylor_apply_counted(q, l, m, symmetric, &counter)
    }

    pub(crate) fn taylor_apply_counted(
        &self,
        q: &DenseMatrix,
        l: usize,
        m: usize,
        symmetric: bool,
        counter: &ProductCounter,
    ) -> Result<DenseMatrix> {
        if m == 0 {
            return Err(Error::InvalidArgument("taylor_apply needs degree m >= 1".into()));
        }
        self.check_operand(q, "LyapunovOperator::taylor_apply")?;
        if q.max_abs() == 0.0 {
            return Ok(DenseMatrix::zeros(q.rows(), q.cols()));
        }

        // Reciprocal factorials 1/(k+l)! for k = 0..=m, built largest index
        // first to avoid integer factorial overflow.
        let coeffs = inverse_factorials(m + l);

        let mut acc = q.scale(coeffs[m + l]);
        for k in (0..m).rev() {
            acc = self.apply_auto(&acc, symmetric, counter)?;
            acc.add_scaled_assign(coeffs[k + l], q);
        }
        Ok(acc)
    }

    /// Fills `T_j` for `j = l-1 .. 1` below a given `T_l` by the downward
    /// recursion; each step is one operator application.
    pub fn phi_stack_down(
        &self,
        q: &DenseMatrix,
        l: usize,
        t_l: DenseMatrix,
        m: usize,
    ) -> Result<PhiStack> {
        let counter = ProductCounter::new();
        let symmetric = q.is_symmetric_within(SYMMETRY_WARN_TOL);
        self.phi_stack_down_counted(q, l, t_l, m, symmetric, &counter)
    }

    pub(crate) fn phi_stack_down_counted(
        &self,
        q: &DenseMatrix,
        l: usize,
        t_l: DenseMatrix,
        m: usize,
        symmetric: bool,
        counter: &ProductCounter,
    ) -> Result<PhiStack> {
        if l == 0 {
            return Err(Error::NoLowerIndices);
        }
        self.check_operand(q, "LyapunovOperator::phi_stack_down")?;
        self.check_operand(&t_l, "LyapunovOperator::phi_stack_down")?;

        let inv_fact = inverse_factorials(l);
        let mut values = vec![t_l];
        for j in (1..l).rev() {
            let mut t = self.apply_auto(values.last().unwrap(), symmetric, counter)?;
            t.add_scaled_assign(inv_fact[j], q);
            values.push(t);
        }
        values.reverse(); // now values[j-1] = T_j
        Ok(PhiStack { l, degree: m, values })
    }
}

/// Truncated-series stack `T_j` for `j = 1..=l` at one scale; `T_j` is the
/// degree `m + l - j` truncation of `phi_j`.
#[derive(Debug, Clone)]
pub struct PhiStack {
    l: usize,
    degree: usize,
    values: Vec<DenseMatrix>,
}

impl PhiStack {
    pub fn top_index(&self) -> usize {
        self.l
    }

    /// Taylor degree `m` of the top entry `T_l`.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// `T_j` for `1 <= j <= l`.
    pub fn t(&self, j: usize) -> &DenseMatrix {
        assert!(j >= 1 && j <= self.l, "PhiStack index out of range");
        &self.values[j - 1]
    }

    pub fn values(&self) -> &[DenseMatrix] {
        &self.values
    }
}

/// `1/j!` for `j = 0..=n` as doubles.
pub fn inverse_factorials(n: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(n + 1);
    let mut c = 1.0f64;
    v.push(c);
    for j in 1..=n {
        c /= j as f64;
        v.push(c);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::phi_scalar;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        DenseMatrix::from_vec(n, n, data).unwrap()
    }

    fn random_symmetric(n: usize, seed: u64) -> DenseMatrix {
        let m = random_matrix(n, seed);
        m.add(&m.transpose()).scale(0.5)
    }

    fn binomial(n: usize, k: usize) -> f64 {
        let mut c = 1.0f64;
        for i in 0..k {
            c = c * (n - i) as f64 / (i + 1) as f64;
        }
        c
    }

    /// Independent route for L^k[X]: the binomial expansion
    /// sum_j C(k,j) A^j X (A^{k-j})^T.
    fn power_by_binomial(a: &DenseMatrix, x: &DenseMatrix, k: usize) -> DenseMatrix {
        let n = a.rows();
        let mut a_pow = vec![DenseMatrix::identity(n)];
        for j in 1..=k {
            a_pow.push(a_pow[j - 1].matmul(a));
        }
        let mut acc = DenseMatrix::zeros(n, n);
        for j in 0..=k {
            let term = a_pow[j].matmul(x).matmul(&a_pow[k - j].transpose());
            acc.add_scaled_assign(binomial(k, j), &term);
        }
        acc
    }

    #[test]
    fn apply_examples() {
        let op = LyapunovOperator::new(DenseMatrix::diagonal(&[1.0, 2.0])).unwrap();
        let out = op.apply(&DenseMatrix::identity(2)).unwrap();
        assert_eq!(out, DenseMatrix::diagonal(&[2.0, 4.0]));

        let zero = LyapunovOperator::new(DenseMatrix::zeros(2, 2)).unwrap();
        let x = random_matrix(2, 1);
        assert_eq!(zero.apply(&x).unwrap().max_abs(), 0.0);

        let op = LyapunovOperator::new(
            DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap(),
        )
        .unwrap();
        let out = op.apply(&DenseMatrix::identity(2)).unwrap();
        let expected = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(out.sub(&expected).max_abs() < 1e-15);
    }

    #[test]
    fn apply_costs_two_products() {
        let op = LyapunovOperator::new(random_matrix(4, 2)).unwrap();
        let counter = ProductCounter::new();
        let _ = op.apply_counted(&random_matrix(4, 3), &counter).unwrap();
        assert_eq!(counter.count(), 2);
    }

    #[test]
    fn apply_power_examples() {
        let op = LyapunovOperator::new(random_matrix(3, 4)).unwrap();
        let x = random_matrix(3, 5);
        assert_eq!(op.apply_power(&x, 0).unwrap(), x);

        let op = LyapunovOperator::new(DenseMatrix::diagonal(&[1.0, 2.0])).unwrap();
        let ones = DenseMatrix::from_vec(2, 2, vec![1.0; 4]).unwrap();
        let out = op.apply_power(&ones, 2).unwrap();
        let expected =
            DenseMatrix::from_rows(&[vec![4.0, 9.0], vec![9.0, 16.0]]).unwrap();
        assert!(out.sub(&expected).max_abs() < 1e-14);
    }

    #[test]
    fn apply_power_matches_binomial_expansion() {
        let a = random_matrix(4, 10);
        let x = random_matrix(4, 11);
        let op = LyapunovOperator::new(a.clone()).unwrap();
        for k in 0..=4 {
            let direct = op.apply_power(&x, k).unwrap();
            let expansion = power_by_binomial(&a, &x, k);
            let scale = expansion.max_abs().max(1.0);
            assert!(direct.sub(&expansion).max_abs() / scale < 1e-13, "k = {k}");
        }
    }

    #[test]
    fn taylor_apply_zero_coefficient() {
        let op = LyapunovOperator::new(DenseMatrix::zeros(3, 3)).unwrap();
        let q = random_symmetric(3, 6);
        for (l, m) in [(0usize, 3usize), (2, 1), (4, 7)] {
            let out = op.taylor_apply(&q, l, m).unwrap();
            let expected = q.scale(inverse_factorials(l)[l]);
            assert!(out.sub(&expected).max_abs() < 1e-16);
        }
    }

    #[test]
    fn taylor_apply_two_term_series() {
        let a = random_matrix(3, 7);
        let op = LyapunovOperator::new(a.clone()).unwrap();
        let q = random_matrix(3, 8);
        let out = op.taylor_apply(&q, 0, 1).unwrap();
        let expected = q.add(&op.apply(&q).unwrap());
        assert!(out.sub(&expected).max_abs() < 1e-14);
    }

    #[test]
    fn taylor_apply_diagonal_matches_scalar_phi() {
        // For diagonal A the operator acts entrywise with scalar argument
        // lambda_i + lambda_j, so a large-degree truncation must match the
        // scalar phi values.
        let op = LyapunovOperator::new(DenseMatrix::diagonal(&[1.0, -1.0])).unwrap();
        let ones = DenseMatrix::from_vec(2, 2, vec![1.0; 4]).unwrap();
        let out = op.taylor_apply(&ones, 1, 30).unwrap();
        let e = std::f64::consts::E;
        let expected = DenseMatrix::from_rows(&[
            vec![(e * e - 1.0) / 2.0, 1.0],
            vec![1.0, (1.0 / (e * e) - 1.0) / -2.0],
        ])
        .unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let rel = (out[(i, j)] - expected[(i, j)]).abs() / expected[(i, j)].abs();
                assert!(rel < 1e-13, "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn taylor_apply_product_counts() {
        let op = LyapunovOperator::new(random_matrix(5, 12)).unwrap();
        let q_sym = random_symmetric(5, 13);
        let counter = ProductCounter::new();
        let _ = op.taylor_apply_counted(&q_sym, 1, 9, true, &counter).unwrap();
        assert_eq!(counter.count(), 9);

        let q_gen = random_matrix(5, 14);
        let counter = ProductCounter::new();
        let _ = op.taylor_apply_counted(&q_gen, 1, 9, false, &counter).unwrap();
        assert_eq!(counter.count(), 18);

        let counter = ProductCounter::new();
        let zero = DenseMatrix::zeros(5, 5);
        let _ = op.taylor_apply_counted(&zero, 1, 9, true, &counter).unwrap();
        assert_eq!(counter.count(), 0);
    }

    #[test]
    fn stack_down_zero_coefficient() {
        let op = LyapunovOperator::new(DenseMatrix::zeros(3, 3)).unwrap();
        let q = random_symmetric(3, 20);
        let l = 4;
        let t_l = op.taylor_apply(&q, l, 6).unwrap();
        let stack = op.phi_stack_down(&q, l, t_l, 6).unwrap();
        let inv = inverse_factorials(l);
        for j in 1..=l {
            let expected = q.scale(inv[j]);
            assert!(stack.t(j).sub(&expected).max_abs() < 1e-16, "j = {j}");
        }
    }

    #[test]
    fn stack_down_l1_is_just_the_top() {
        let op = LyapunovOperator::new(random_matrix(3, 21)).unwrap();
        let q = random_symmetric(3, 22);
        let t1 = op.taylor_apply(&q, 1, 5).unwrap();
        let stack = op.phi_stack_down(&q, 1, t1.clone(), 5).unwrap();
        assert_eq!(stack.values().len(), 1);
        assert_eq!(stack.t(1), &t1);
    }

    #[test]
    fn stack_down_rejects_l0() {
        let op = LyapunovOperator::new(random_matrix(3, 23)).unwrap();
        let q = random_symmetric(3, 24);
        let t = q.clone();
        assert!(matches!(
            op.phi_stack_down(&q, 0, t, 5),
            Err(Error::NoLowerIndices)
        ));
    }

    #[test]
    fn stack_down_diagonal_matches_truncated_scalar_series() {
        // T_j must be the degree m + l - j truncation of phi_j, checked
        // entrywise for diagonal A.
        let lambda = [0.3, -0.4, 0.1];
        let op = LyapunovOperator::new(DenseMatrix::diagonal(&lambda)).unwrap();
        let q = random_symmetric(3, 25);
        let (l, m) = (3usize, 8usize);
        let t_l = op.taylor_apply(&q, l, m).unwrap();
        let stack = op.phi_stack_down(&q, l, t_l, m).unwrap();
        for j in 1..=l {
            let degree = m + l - j;
            let inv = inverse_factorials(degree + j);
            for r in 0..3 {
                for c in 0..3 {
                    let z = lambda[r] + lambda[c];
                    let mut scalar = 0.0;
                    let mut zk = 1.0;
                    for k in 0..=degree {
                        scalar += zk * inv[k + j];
                        zk *= z;
                    }
                    let expected = scalar * q[(r, c)];
                    assert!(
                        (stack.t(j)[(r, c)] - expected).abs() < 1e-14,
                        "j = {j}, entry ({r},{c})"
                    );
                }
            }
        }
    }

    #[test]
    fn downward_consistency_to_ten_ulps() {
        let op = LyapunovOperator::new(random_matrix(6, 30).scale(0.2)).unwrap();
        let q = random_symmetric(6, 31);
        let (l, m) = (5usize, 10usize);
        let t_l = op.taylor_apply(&q, l, m).unwrap();
        let stack = op.phi_stack_down(&q, l, t_l, m).unwrap();
        let inv = inverse_factorials(l);
        for j in 1..l {
            let lhs = op.apply(stack.t(j + 1)).unwrap().add(&q.scale(inv[j]));
            let scale = stack.t(j).max_abs();
            assert!(
                lhs.sub(stack.t(j)).max_abs() <= 10.0 * f64::EPSILON * scale,
                "j = {j}"
            );
        }
    }

    #[test]
    fn symmetry_preserved_through_stack() {
        let op = LyapunovOperator::new(random_matrix(5, 40)).unwrap();
        let q = random_symmetric(5, 41);
        let t_l = op.taylor_apply(&q, 4, 8).unwrap();
        let stack = op.phi_stack_down(&q, 4, t_l, 8).unwrap();
        for j in 1..=4 {
            assert!(stack.t(j).asymmetry() <= 10.0 * f64::EPSILON, "j = {j}");
        }
    }

    #[test]
    fn operator_norm_bound() {
        // ||L_A[X]||_1 <= 2 ||A||_1 ||X||_1 on random operands.
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        for trial in 0..30 {
            let n = rng.gen_range(1..9);
            let a = random_matrix(n, 100 + trial);
            let x = random_matrix(n, 200 + trial);
            let op = LyapunovOperator::new(a.clone()).unwrap();
            let image = op.apply(&x).unwrap();
            assert!(
                image.one_norm() <= 2.0 * a.one_norm() * x.one_norm() * (1.0 + 1e-14),
                "trial {trial}"
            );
        }
    }

    #[test]
    fn diagonal_phi_equivalence_small_argument() {
        // Entrywise scalar phi_l(lambda_i + lambda_j) for |sums| <= 1.
        let lambda = [0.25, -0.5, 0.4];
        let op = LyapunovOperator::new(DenseMatrix::diagonal(&lambda)).unwrap();
        let q = random_symmetric(3, 60);
        for l in 1..=4usize {
            let out = op.taylor_apply(&q, l, 21).unwrap();
            for r in 0..3 {
                for c in 0..3 {
                    let expected = phi_scalar(lambda[r] + lambda[c], l) * q[(r, c)];
                    let rel = (out[(r, c)] - expected).abs() / expected.abs().max(1e-300);
                    assert!(rel < 1e-13, "l = {l}, entry ({r},{c})");
                }
            }
        }
    }
}
