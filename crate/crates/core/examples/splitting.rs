//! Estimate the splitting along a fiber and watch the stable bundle turn
//! from vertical (z = 0) to horizontal (z = 1).

use skewlab::config::RunConfig;
use skewlab::skew::SkewPoint;
use skewlab::splitting::estimate_splitting;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let con = RunConfig::default().construct()?;
    let t = &con.tower;
    println!(
        "{:>6} {:>12} {:>12} {:>10}",
        "z", "E^s vertical", "E^c vertical", "residual"
    );
    for k in 0..=10 {
        let z = k as f64 / 10.0;
        let e = estimate_splitting(t, &SkewPoint::new(vec![0.3, 0.4], vec![z]), 200, 7)?;
        let res = e.residuals.iter().cloned().fold(0.0, f64::max);
        println!(
            "{z:>6.2} {:>12.6} {:>12.6} {res:>10.1e}",
            e.stable[(2, 0)].abs(),
            e.center[(2, 0)].abs()
        );
    }
    Ok(())
}
