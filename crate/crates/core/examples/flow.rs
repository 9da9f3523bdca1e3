//! The suspension construction: rescale ε until the cones certify, then
//! measure one-step norms on the estimated bundles over a coarse grid.

use skewlab::config::RunConfig;
use skewlab::suites::{sandwich_bounds, sandwich_suite};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = RunConfig::flow();
    cfg.grids.sandwich = 6;
    let con = cfg.construct()?;
    println!(
        "N = {}, ε rescaled to {}",
        con.tower.profile().n,
        con.epsilon
    );
    let (lam, mu) = sandwich_bounds(&con);
    let r = sandwich_suite(&con)?;
    println!("λ̂ = {lam}, μ̂ = {mu:.3} over {} points", r.points);
    println!("max ‖Df v^s‖ = {:.3}", r.max_stable);
    println!("‖Df v^c‖ ∈ [{:.3}, {:.3}]", r.min_center, r.max_center);
    println!("min ‖Df v^u‖ = {:.3}", r.min_unstable);
    println!("worst margin {:.3} at {:?}", r.worst_margin, r.worst_point);
    Ok(())
}
