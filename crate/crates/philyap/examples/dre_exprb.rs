//! Riccati integration orders: runs the three exponential schemes on the
//! advection-diffusion Riccati problem (10x10 grid, indicator load vectors)
//! over a step ladder and fits the convergence slopes against a tight
//! exprb3 self-reference.
//!
//! Expect slopes near 1, 2, and 3. The reference run dominates the time.

use philyap::integrators::{convergence_slope, integrate_dre, Scheme};
use philyap::matrix::relative_error;
use philyap::report::advection_diffusion_dre;

fn main() {
    let problem = advection_diffusion_dre(10, (0.1, 0.3), (0.7, 0.9)).unwrap();
    let t_end = 0.05;
    eprintln!("computing the 8192-step exprb3 reference ...");
    let reference = integrate_dre(&problem, Scheme::Exprb3, t_end / 8192.0, t_end).unwrap();
    let ref_state = reference.final_state();

    for scheme in [Scheme::ExpEuler, Scheme::Exprb2, Scheme::Exprb3] {
        let mut hs = Vec::new();
        let mut errors = Vec::new();
        println!("{}:", scheme.name());
        for k in 4..=9u32 {
            let steps = 1usize << k;
            let h = t_end / steps as f64;
            let run = integrate_dre(&problem, scheme, h, t_end).unwrap();
            let error = relative_error(ref_state, run.final_state()).unwrap();
            println!(
                "  {steps:>4} steps: error {error:.4e} ({} phi calls, {} products)",
                run.phi_calls, run.products_used
            );
            hs.push(h);
            errors.push(error);
        }
        println!("  slope: {:.3}", convergence_slope(&hs, &errors));
    }
}
