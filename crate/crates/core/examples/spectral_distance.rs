//! Hausdorff distance and its resolvent-image variant between small spectra, with a rate fit.

use neumann_crack::spectral::{dbar, fit_rate, hausdorff, Spectrum};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = [0.0, 9.87, 9.87, 19.74];
    let b = [0.0, 9.5, 9.87, 19.74, 39.5];
    println!("hausdorff = {:.6}", hausdorff(&a, &b)?);
    println!("dbar      = {:.6}", dbar(&Spectrum::new(&a)?, &Spectrum::new(&b)?)?);
    let pts: Vec<(f64, f64)> = [0.2, 0.1, 0.05, 0.025].iter().map(|&e: &f64| (e, 0.3 * e * e)).collect();
    let fit = fit_rate(&pts)?;
    println!("fit of 0.3 ε²: exponent {:.4}, prefactor {:.4}", fit.exponent, fit.prefactor);
    Ok(())
}
