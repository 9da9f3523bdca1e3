//! Lyapunov exponents on the invariant fiber and at a generic point, whose
//! orbit falls into the fiber and inherits its spectrum.

use skewlab::config::RunConfig;
use skewlab::skew::SkewPoint;
use skewlab::splitting::lyapunov_qr;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let con = RunConfig::default().construct()?;
    for z in [0.0, 0.6] {
        let r = lyapunov_qr(
            &con.tower,
            &SkewPoint::new(vec![0.2, 0.9], vec![z]),
            10_000,
            1,
        )?;
        println!(
            "z = {z}: exponents {:.5?} ± {:.1e}",
            r.exponents,
            r.std_errors.iter().cloned().fold(0.0, f64::max)
        );
    }
    println!(
        "ln λ = {:.5}, ln μ_s = {:.5}",
        0.2f64.ln(),
        ((3.0 - 5f64.sqrt()) / 2.0).ln()
    );
    Ok(())
}
