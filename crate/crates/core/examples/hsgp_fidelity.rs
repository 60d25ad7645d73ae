//! Compares the basis-function covariance with the exact Matérn 3/2 kernel.

use socialpop::models::hsgp::{basis_scales, hsgp_basis, matern32_kernel};
use socialpop::models::HsgpSpec;

fn main() -> socialpop::Result<()> {
    // 7 x 7 grid on [-1.5, 1.5]^2, roughly the spread of z-scored coordinates
    let pts: Vec<[f64; 2]> = (0..49)
        .map(|i| [-1.5 + 0.5 * (i % 7) as f64, -1.5 + 0.5 * (i / 7) as f64])
        .collect();
    for n_basis in [4, 8, 16, 32] {
        let spec = HsgpSpec {
            n_basis,
            boundary_factor: 2.5,
        };
        let b = hsgp_basis(&pts, n_basis, spec.boundary(&pts)?)?;
        print!("n_b = {n_basis:>2}:");
        for delta in [0.5, 1.0, 1.5] {
            let s = basis_scales(&b.omega_sq, 1.0, delta);
            let (mut num, mut den) = (0.0, 0.0);
            for i in 0..pts.len() {
                for j in 0..pts.len() {
                    let approx: f64 = b.row(i).iter().zip(b.row(j)).zip(&s).map(|((a, c), s)| a * c * s * s).sum();
                    let r = ((pts[i][0] - pts[j][0]).powi(2) + (pts[i][1] - pts[j][1]).powi(2)).sqrt();
                    let exact = matern32_kernel(r, 1.0, delta);
                    num += (approx - exact).powi(2);
                    den += exact * exact;
                }
            }
            print!("  delta {delta}: {:5.2}%", 100.0 * (num / den).sqrt());
        }
        println!();
    }
    Ok(())
}
