//! Lyapunov operator phi-functions and matrix-valued exponential integrators.
//!
//! The central object is the Lyapunov operator `L_A[X] = A X + X A^T` and its
//! phi-functions `phi_l(L_A)[Q]`, the building blocks of exponential
//! integrators for matrix differential equations. The kernel evaluates them
//! by a modified scaling-and-squaring procedure over truncated Taylor series,
//! with the Taylor degree and scaling exponent chosen from a quasi-backward
//! error analysis. On top of the kernel sit exponential Euler and two
//! exponential Rosenbrock schemes for differential Lyapunov and Riccati
//! equations, a brute-force Kronecker-vectorized oracle for verification, a
//! deterministic gallery of test operators, and a benchmark harness.
//!
//! # Examples
//!
//! Each major capability has a runnable example:
//!
//! ```bash
//! cargo run --release -p philyap --example phi_basic        # evaluate phi_l(L_A)[Q]
//! cargo run --release -p philyap --example phi_oracle_check # kernel vs. both oracles
//! cargo run --release -p philyap --example laplacian_sweep  # stiff 1-D Laplacian sweep, l = 1..8
//! cargo run --release -p philyap --example theta_table      # regenerate the theta thresholds
//! cargo run --release -p philyap --example dre_exprb        # Riccati integration orders
//! cargo run --release -p philyap --example dle_exp_euler    # one-step exactness on a DLE
//! ```
//!
//! The `philyap-cli` crate wraps the same entry points in a small command
//! line (`phi`, `bench`, `integrate`, `theta`).

pub mod error;
pub mod gallery;
pub mod integrators;
pub mod kernel;
pub mod lyapop;
pub mod matio;
pub mod matrix;
pub mod normest;
pub mod oracle;
pub mod params;
pub mod report;
pub mod theta;

pub use error::{Error, Result};
pub use kernel::{exp_taylor_ps, phi_lyap, phi_multi, phi_scaled, PhiOptions, PhiResult};
pub use lyapop::{LyapunovOperator, PhiStack};
pub use matrix::{relative_error, DenseMatrix, ProductCounter};
pub use normest::{estimate_power_norm, NormEstimate, NormEstimator};
pub use params::{select_params, PhiParams, ThetaTable};
pub use theta::derive_theta;
