//! Smallest possible usage: evaluate phi_l(L_A)[Q] for a dense coefficient
//! and print the result with the chosen parameters.

use philyap::kernel::phi_lyap;
use philyap::matrix::DenseMatrix;

fn main() {
    // A mildly nonnormal 4x4 coefficient and a symmetric right-hand side.
    let a = DenseMatrix::from_rows(&[
        vec![-2.0, 1.0, 0.0, 0.5],
        vec![0.0, -1.0, 1.0, 0.0],
        vec![0.0, 0.0, -0.5, 1.0],
        vec![0.0, 0.0, 0.0, -0.25],
    ])
    .unwrap();
    let q = philyap::gallery::random_symmetric(4, 7);

    for l in 1..=3usize {
        let result = phi_lyap(&a, &q, l).unwrap();
        println!(
            "phi_{l}: degree m = {}, scaling s = {}, {} matrix products",
            result.params.m, result.params.s, result.products_used
        );
        println!("{:?}", result.phi(l));
    }
}
