//! Regenerates the backward-error threshold table.
//!
//! Derives theta_d at tolerance 2^-53 for the even degrees 6..30 plus the
//! odd members of the kernel's degree set (9 and 25), printing them in the
//! plain-text asset format. Redirect into `assets/theta_default.txt` to
//! refresh the shipped table.

use philyap::derive_theta;

fn main() {
    let tol = 2f64.powi(-53);
    let mut degrees: Vec<usize> = (3..=15).map(|d| 2 * d).collect();
    degrees.extend([9, 25]);
    degrees.sort_unstable();

    println!("# Backward-error thresholds theta_d at tolerance 2^-53,");
    println!("# derived from the quasi-backward error majorant of the");
    println!("# truncated-Taylor scaling-and-squaring scheme.");
    for d in degrees {
        match derive_theta(d, tol) {
            Ok(theta) => println!("{d} {theta:.12e}"),
            Err(e) => eprintln!("# degree {d} failed: {e}"),
        }
    }
}
