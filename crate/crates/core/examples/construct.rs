//! Build the cat-map tower, apply it and its inverse, and show `Df`.

use skewlab::config::RunConfig;
use skewlab::skew::SkewPoint;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let con = RunConfig::default().construct()?;
    let t = &con.tower;
    println!(
        "T³ tower, ε = {}, splitting dims {:?}",
        con.epsilon,
        t.bundle_dims()
    );
    let p = SkewPoint::new(vec![0.1, 0.7], vec![0.5]);
    let q = t.apply(&p);
    let back = t.inverse(&q);
    println!("f{:?} = {:?}", p, q);
    println!("f⁻¹(f(p)) = {:?}", back);
    println!("Df(p) in the eigenframe:{}", t.df_matrix(&p));
    Ok(())
}
