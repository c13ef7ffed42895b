//! Three-way check on a small operator: the kernel against both brute-force
//! references (augmented Kronecker exponential and vectorized ODE
//! integration).

use philyap::gallery::{random_dense, random_symmetric};
use philyap::kernel::phi_lyap;
use philyap::matrix::relative_error;
use philyap::oracle::{dle_reference, phi_reference};

fn main() {
    let n = 12;
    let a = random_dense(n, 3).scale(2.0);
    let q = random_symmetric(n, 4);

    println!("{:>3} {:>14} {:>14} {:>14}", "l", "kernel vs kron", "kernel vs ode", "kron vs ode");
    for l in 1..=8usize {
        let kernel = phi_lyap(&a, &q, l).unwrap();
        let kron = phi_reference(&a, &q, l).unwrap();
        let ode = dle_reference(&a, &q, l, 1.0).unwrap();
        println!(
            "{l:>3} {:>14.3e} {:>14.3e} {:>14.3e}",
            relative_error(&kron, kernel.phi(l)).unwrap(),
            relative_error(&ode, kernel.phi(l)).unwrap(),
            relative_error(&kron, &ode).unwrap(),
        );
    }
}
