//! Two switching stages over a T³ automorphism with two stable directions:
//! each stage trades one stable direction for a circle fiber.

use skewlab::config::RunConfig;
use skewlab::suites::nested_suite;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let con = RunConfig::multi_switch().construct()?;
    let t = &con.tower;
    for s in t.stages() {
        println!(
            "stage trading frame direction {}: λ = {}",
            s.weak_stable_index, s.profile.lambda
        );
    }
    let n = nested_suite(&con)?;
    for l in &n.report.levels {
        println!(
            "k = {}: split {:?}, min gaps {:.3?}",
            l.k, l.split_dims, l.min_gaps
        );
    }
    println!(
        "angle of Ê^s to the fiber directions at z = 0: {:.1e}",
        n.fiber_angle
    );
    Ok(())
}
