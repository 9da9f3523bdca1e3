//! Integrate falling curves from above and below the invariant fiber.
//! Leaves from both sides reach z = 0 in finite length, so no invariant
//! center-stable foliation can exist.

use skewlab::config::RunConfig;
use skewlab::incoherence::{foliation_box_demo, integrate_falling, IntegratorOptions};
use skewlab::skew::SkewPoint;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let con = RunConfig::default().construct()?;
    let t = &con.tower;
    let c = t.profile().c;
    let opts = IntegratorOptions::new(0.02, 1e-8 * c, 100.0);
    let curve = integrate_falling(t, &SkewPoint::new(vec![0.25, 0.5], vec![c]), &opts)?;
    println!(
        "from z = c = {c:.4}: reached {:.1e} after projected length {:.5} in {} samples",
        curve.terminal_z,
        curve.length,
        curve.points.len()
    );
    for track in foliation_box_demo(t, &[0.5, 0.5], (-0.5 * c, 0.5 * c), 6, &opts)? {
        println!(
            "start {:+.4} → end {:+.1e} at length {:.5}",
            track.start_z,
            track.z.last().unwrap(),
            track.arclength.last().unwrap()
        );
    }
    Ok(())
}
