//! Certify the cone inclusions for the cat map and for a base with two
//! stable directions, where the cones must also avoid the strong-stable
//! bundle.

use skewlab::cones::{certify, FrameModel};
use skewlab::config::RunConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (name, cfg) in [
        ("cat map", RunConfig::default()),
        ("two stable", RunConfig::two_stable()),
    ] {
        let con = cfg.construct()?;
        let cert = certify(&FrameModel::of_tower(&con.tower), con.config.aperture)?;
        println!("{name}: min margin {:.3}", cert.min_margin);
        for m in cert
            .inclusions
            .iter()
            .filter(|m| m.t.is_none_or(|t| t == 1.0))
        {
            println!("  {:<22} {:.3}", m.name, m.margin);
        }
        if cert.adapted {
            println!(
                "  zero intersection {:.3} (cross weight 2 would give {:.3}), power n = {:?}",
                cert.zero_intersection_margin.unwrap_or(f64::NAN),
                cert.zero_intersection_margin_k2.unwrap_or(f64::NAN),
                cert.power_n
            );
        }
    }
    Ok(())
}
