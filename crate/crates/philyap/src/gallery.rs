//! Deterministic test-problem generators.
//!
//! Covers the regimes the kernel has to survive: wide norm ranges,
//! nonnormality, defectiveness, and the two discretized PDE operators used
//! by the experiments (a scaled 1-D Laplacian and a 2-D advection-diffusion
//! matrix with Dirichlet boundaries). Everything is reproducible: the same
//! `(name, size, seed)` regenerates bitwise-identical matrices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::matrix::DenseMatrix;

/// One named test operator with its symmetric right-hand side.
#[derive(Debug, Clone)]
pub struct GalleryCase {
    pub name: String,
    pub a: DenseMatrix,
    pub q: DenseMatrix,
    /// Human-readable provenance of the construction.
    pub notes: String,
}

/// `c * tridiag(1, -2, 1)` of size `n`.
pub fn laplacian_1d(n: usize, c: f64) -> DenseMatrix {
    assert!(n >= 2, "laplacian_1d needs n >= 2");
    let mut a = DenseMatrix::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = -2.0 * c;
        if i > 0 {
            a[(i, i - 1)] = c;
        }
        if i + 1 < n {
            a[(i, i + 1)] = c;
        }
    }
    a
}

/// Grid axis selector for [`load_vector_indicator`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Finite-difference discretization of
/// `Laplacian(u) - 10 x u_x - 100 y u_y` on the unit square with homogeneous
/// Dirichlet boundaries: 5-point Laplacian plus centered first differences,
/// with the advection coefficients evaluated at the grid nodes
/// `x_i = i * delta`, `y_j = j * delta`, `delta = 1/(n0+1)`. Nodes are
/// ordered lexicographically with `x` fastest; `N = n0^2`.
pub fn fdm_advection_diffusion(n0: usize) -> DenseMatrix {
    assert!(n0 >= 1, "fdm_advection_diffusion needs n0 >= 1");
    let n = n0 * n0;
    let delta = 1.0 / (n0 as f64 + 1.0);
    let diff = 1.0 / (delta * delta);
    let mut a = DenseMatrix::zeros(n, n);
    let idx = |i: usize, j: usize| (j - 1) * n0 + (i - 1);
    for j in 1..=n0 {
        let y = j as f64 * delta;
        for i in 1..=n0 {
            let x = i as f64 * delta;
            let row = idx(i, j);
            a[(row, row)] = -4.0 * diff;
            let adv_x = -10.0 * x / (2.0 * delta);
            let adv_y = -100.0 * y / (2.0 * delta);
            if i < n0 {
                a[(row, idx(i + 1, j))] = diff + adv_x;
            }
            if i >= 2 {
                a[(row, idx(i - 1, j))] = diff - adv_x;
            }
            if j < n0 {
                a[(row, idx(i, j + 1))] = diff + adv_y;
            }
            if j >= 2 {
                a[(row, idx(i, j - 1))] = diff - adv_y;
            }
        }
    }
    a
}

/// Pure 5-point diffusion part of [`fdm_advection_diffusion`], exactly
/// symmetric; useful for separating the stencil contributions.
pub fn fdm_diffusion_part(n0: usize) -> DenseMatrix {
    assert!(n0 >= 1);
    let n = n0 * n0;
    let delta = 1.0 / (n0 as f64 + 1.0);
    let diff = 1.0 / (delta * delta);
    let mut a = DenseMatrix::zeros(n, n);
    let idx = |i: usize, j: usize| (j - 1) * n0 + (i - 1);
    for j in 1..=n0 {
        for i in 1..=n0 {
            let row = idx(i, j);
            a[(row, row)] = -4.0 * diff;
            if i < n0 {
                a[(row, idx(i + 1, j))] = diff;
            }
            if i >= 2 {
                a[(row, idx(i - 1, j))] = diff;
            }
            if j < n0 {
                a[(row, idx(i, j + 1))] = diff;
            }
            if j >= 2 {
                a[(row, idx(i, j - 1))] = diff;
            }
        }
    }
    a
}

/// Column indicator vector on the same grid: entry 1 at nodes whose selected
/// coordinate lies in `(lo, hi]`, else 0.
pub fn load_vector_indicator(n0: usize, axis: Axis, lo: f64, hi: f64) -> DenseMatrix {
    assert!(n0 >= 1);
    assert!((0.0..1.0).contains(&lo) && lo < hi && hi <= 1.0, "band must satisfy 0 <= lo < hi <= 1");
    let n = n0 * n0;
    let delta = 1.0 / (n0 as f64 + 1.0);
    let mut v = DenseMatrix::zeros(n, 1);
    let idx = |i: usize, j: usize| (j - 1) * n0 + (i - 1);
    for j in 1..=n0 {
        for i in 1..=n0 {
            let coord = match axis {
                Axis::X => i as f64 * delta,
                Axis::Y => j as f64 * delta,
            };
            if coord > lo && coord <= hi {
                v[(idx(i, j), 0)] = 1.0;
            }
        }
    }
    v
}

/// Seeded dense matrix with entries uniform in (-1, 1).
pub fn random_dense(n: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    DenseMatrix::from_vec(n, n, data).expect("finite by construction")
}

/// Seeded random symmetric matrix, `(M + M^T)/2` of a uniform(-1, 1) draw.
pub fn random_symmetric(n: usize, seed: u64) -> DenseMatrix {
    let m = random_dense(n, seed);
    m.add(&m.transpose()).scale(0.5)
}

fn case_seed(seed: u64, index: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index)
}

/// Negative log-spaced diagonal with `||A||_1 = norm` and six decades of
/// spread.
fn spread_diagonal(n: usize, norm: f64) -> DenseMatrix {
    let mut entries = Vec::with_capacity(n);
    for i in 0..n {
        let decade = if n > 1 { 6.0 * i as f64 / (n - 1) as f64 } else { 0.0 };
        entries.push(-norm * 10f64.powf(-decade));
    }
    DenseMatrix::diagonal(&entries)
}

/// The structured operator suite: at least twelve deterministic cases per
/// `(n, seed)` spanning zero/identity, spread diagonal spectra with 1-norms
/// from 1e-3 to 1e3, Jordan and nilpotent blocks, random dense, symmetric and
/// skew-symmetric draws, a nonnormal triangular, embedded defective 2x2
/// pairs, a scaled Laplacian, and the advection-diffusion operator. Each case
/// carries a seeded random symmetric `Q` of the matching size.
pub fn structured_suite(n: usize, seed: u64) -> Vec<GalleryCase> {
    assert!(n >= 2, "structured_suite needs n >= 2");
    let mut cases: Vec<GalleryCase> = Vec::new();
    let mut push = |name: &str, a: DenseMatrix, notes: String| {
        let index = cases.len() as u64;
        let q = random_symmetric(a.rows(), case_seed(seed, 1000 + index));
        cases.push(GalleryCase { name: name.to_string(), a, q, notes });
    };

    push("zero", DenseMatrix::zeros(n, n), "zero matrix".into());
    push("identity", DenseMatrix::identity(n), "identity".into());
    push("diag_small", spread_diagonal(n, 1e-3), "negative log-spread diagonal, ||A||_1 = 1e-3".into());
    push("diag_unit", spread_diagonal(n, 1.0), "negative log-spread diagonal, ||A||_1 = 1".into());
    push("diag_stiff", spread_diagonal(n, 1e3), "negative log-spread diagonal, ||A||_1 = 1e3".into());

    let mut jordan = DenseMatrix::identity(n).scale(0.5);
    for i in 0..n - 1 {
        jordan[(i, i + 1)] = 1.0;
    }
    push("jordan", jordan, "single Jordan block, eigenvalue 0.5".into());

    let mut nilpotent = DenseMatrix::zeros(n, n);
    for i in 0..n - 1 {
        nilpotent[(i, i + 1)] = 1.0;
    }
    push("nilpotent", nilpotent, "superdiagonal shift".into());

    push("random_dense", random_dense(n, case_seed(seed, 1)), "uniform(-1,1) entries".into());
    push("random_symmetric", random_symmetric(n, case_seed(seed, 2)), "symmetrized uniform draw".into());

    let m = random_dense(n, case_seed(seed, 3));
    push("random_skew", m.sub(&m.transpose()).scale(0.5), "antisymmetrized uniform draw".into());

    let mut tri = DenseMatrix::zeros(n, n);
    let off = 4.0 / (n as f64).sqrt();
    for i in 0..n {
        tri[(i, i)] = -1.0 - i as f64 / n as f64;
        for j in (i + 1)..n {
            tri[(i, j)] = off;
        }
    }
    push("nonnormal_triangular", tri, format!("upper triangular, off-diagonal {off:.3}"));

    let mut defective = DenseMatrix::zeros(n, n);
    let mus = [0.5, -0.5, 1.0, -1.0];
    let mut i = 0;
    let mut pair = 0;
    while i + 1 < n {
        let mu = mus[pair % mus.len()];
        defective[(i, i)] = mu;
        defective[(i, i + 1)] = 1.0;
        defective[(i + 1, i + 1)] = mu;
        i += 2;
        pair += 1;
    }
    if i < n {
        defective[(i, i)] = -0.25;
    }
    push("defective_pairs", defective, "embedded defective 2x2 Jordan pairs".into());

    let c = ((n + 1) * (n + 1)) as f64;
    push("laplacian", laplacian_1d(n, c), format!("1-D Laplacian scaled by (n+1)^2 = {c}"));

    let n0 = (n as f64).sqrt().ceil() as usize;
    push(
        "advdiff",
        fdm_advection_diffusion(n0),
        format!("advection-diffusion grid {n0}x{n0}, N = {}", n0 * n0),
    );

    cases
}
