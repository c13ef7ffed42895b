//! Stiff benchmark sweep: phi_l of the Lyapunov operator generated by the
//! scaled 1-D Laplacian 2500 tridiag(1, -2, 1) at N = 100, for l = 1..8,
//! with errors against the spectral reference and the predicted product
//! counts. A desk-scale analogue of the classic 400x400 table.

use std::time::Instant;

use philyap::gallery::{laplacian_1d, random_symmetric};
use philyap::kernel::phi_lyap;
use philyap::matrix::relative_error;
use philyap::oracle::phi_symmetric_reference;

fn main() {
    let n = 100;
    let a = laplacian_1d(n, 2500.0);
    let q = random_symmetric(n, 42);

    println!("{:>3} {:>12} {:>6} {:>4} {:>10} {:>10}", "l", "error", "m", "s", "products", "time");
    for l in 1..=8usize {
        let start = Instant::now();
        let result = phi_lyap(&a, &q, l).unwrap();
        let elapsed = start.elapsed().as_secs_f64();
        let reference = phi_symmetric_reference(&a, &q, l).unwrap();
        let error = relative_error(&reference, result.phi(l)).unwrap();
        assert_eq!(result.products_used, result.params.predicted_products);
        println!(
            "{l:>3} {error:>12.4e} {:>6} {:>4} {:>10} {elapsed:>9.3}s",
            result.params.m, result.params.s, result.products_used
        );
    }
}
