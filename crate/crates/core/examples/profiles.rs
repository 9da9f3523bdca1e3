//! Print the fiber profile `h, τ` at a few heights and its constants.

use skewlab::profile::ShearProfile;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = ShearProfile::build(0.2, 0.4, 2.5, 0.9, 1, 1000)?;
    println!(
        "c = {:.5}, h(a) = {:.4}, h²(a) = {:.4}, h³(a) = {:.5}",
        p.c, p.h_a, p.h2_a, p.h3_a
    );
    println!("{:>6} {:>10} {:>8} {:>8} {:>8}", "z", "h", "h'", "τ", "τ'");
    for row in p.table(11) {
        println!(
            "{:>6.2} {:>10.6} {:>8.4} {:>8.4} {:>8.4}",
            row[0], row[1], row[2], row[3], row[4]
        );
    }
    // Orbit of a point under h: lingers near 1, then drops geometrically.
    let mut z = 0.99;
    let orbit: Vec<String> = (0..8)
        .map(|_| {
            z = p.h(z);
            format!("{z:.4}")
        })
        .collect();
    println!("orbit of 0.99: {}", orbit.join(" → "));
    Ok(())
}
