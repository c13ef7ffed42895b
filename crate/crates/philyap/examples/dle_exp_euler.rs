//! Exponential Euler on a differential Lyapunov equation with a constant
//! source: a single step from X(0) = 0 reproduces the exact solution
//! h phi_1(h L_A)[Q], checked against the ODE oracle.

use philyap::gallery::{random_dense, random_symmetric};
use philyap::integrators::{exp_euler_step, MDEProblem};
use philyap::matrix::{relative_error, DenseMatrix};
use philyap::oracle::dle_reference;

fn main() {
    let n = 10;
    let a = random_dense(n, 1).scale(3.0);
    let q = random_symmetric(n, 2);

    let source = q.clone();
    let problem = MDEProblem {
        a: a.clone(),
        nonlinearity: move |_t: f64, _x: &DenseMatrix| source.clone(),
        x0: DenseMatrix::zeros(n, n),
        t0: 0.0,
    };

    for h in [0.5, 0.1, 0.02] {
        let step = exp_euler_step(&problem, 0.0, &problem.x0, h).unwrap();
        let exact = dle_reference(&a, &q, 1, h).unwrap();
        println!(
            "h = {h:<5}: one-step error vs exact DLE solution {:.3e}",
            relative_error(&exact, &step).unwrap()
        );
    }
    println!("(the scheme is exact for constant sources; errors are oracle-level)");
}
