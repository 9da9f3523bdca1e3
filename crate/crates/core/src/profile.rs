//! The one-dimensional profiles of the construction: the contraction `h`
//! of the circle coordinate, the shear schedule `τ`, and (for flow bases)
//! the flow-time schedule `ρ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Quintic smoothstep `6t⁵ − 15t⁴ + 10t³` clamped to `[0, 1]`.
pub fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * (t * (6.0 * t - 15.0) + 10.0)
    }
}

pub fn smoothstep_prime(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        30.0 * t * t * (1.0 - t) * (1.0 - t)
    }
}

/// `∫₀ʷ S(tᵖ) dt` for the quintic smoothstep `S`.
fn warped_integral(w: f64, p: f64) -> f64 {
    let e = |k: f64| w.powf(k * p + 1.0) / (k * p + 1.0);
    10.0 * e(3.0) - 15.0 * e(4.0) + 6.0 * e(5.0)
}

/// Blend on `[x0, x1]` defined through its slope
/// `h' = lo + (hi − lo) φ(w)`, `w = (x − x0)/(x1 − x0)`, with
/// `φ(w) = S(wᵖ)` or its reflection `1 − S((1 − w)ᵖ)`. The power `p ≥ 1`
/// is fixed by the required rise, so `lo ≤ h' ≤ hi` and `h''` vanishes at
/// both ends.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct SlopeBlend {
    x0: f64,
    x1: f64,
    y0: f64,
    lo: f64,
    hi: f64,
    p: f64,
    reflected: bool,
}

impl SlopeBlend {
    /// Blend from `(x0, y0)` to `(x1, y1)` with end slopes `lo < hi`.
    fn new(x0: f64, x1: f64, y0: f64, y1: f64, lo: f64, hi: f64) -> Result<Self> {
        let mean = (y1 - y0) / (x1 - x0);
        let theta = (mean - lo) / (hi - lo);
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::ConstantsOutOfOrder(format!(
                "blend needs a mean slope in (λ, μ); got {mean} on [{x0}, {x1}]"
            )));
        }
        let reflected = theta > 0.5;
        let target = if reflected { 1.0 - theta } else { theta };
        // warped_integral(1, p) falls from 1/2 at p = 1 toward 0.
        let (mut lo_p, mut hi_p) = (0.0f64, 30.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo_p + hi_p);
            if warped_integral(1.0, mid.exp()) > target {
                lo_p = mid;
            } else {
                hi_p = mid;
            }
        }
        Ok(SlopeBlend {
            x0,
            x1,
            y0,
            lo,
            hi,
            p: (0.5 * (lo_p + hi_p)).exp(),
            reflected,
        })
    }

    fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    fn phi(&self, w: f64) -> f64 {
        if self.reflected {
            1.0 - smoothstep((1.0 - w).powf(self.p))
        } else {
            smoothstep(w.powf(self.p))
        }
    }

    fn phi_integral(&self, w: f64) -> f64 {
        if self.reflected {
            w - (warped_integral(1.0, self.p) - warped_integral(1.0 - w, self.p))
        } else {
            warped_integral(w, self.p)
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let d = self.width();
        let w = ((x - self.x0) / d).clamp(0.0, 1.0);
        self.y0 + d * (self.lo * w + (self.hi - self.lo) * self.phi_integral(w))
    }

    fn slope(&self, x: f64) -> f64 {
        let w = ((x - self.x0) / self.width()).clamp(0.0, 1.0);
        self.lo + (self.hi - self.lo) * self.phi(w)
    }
}

/// The triple `(h, τ, ρ)` with its constants.
///
/// `h` is `λ z` on `[0, c]`, `1 − μ (1 − z)` on `[a, 1]` and a C² blend
/// whose slope rises monotonically from `λ` to `μ` in between;
/// `c` is fixed at `h³(a)/2`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShearProfile {
    pub lambda: f64,
    pub eta: f64,
    pub mu: f64,
    pub a: f64,
    pub c: f64,
    pub n: u32,
    /// `h(a)`, `h²(a)`, `h³(a)`.
    pub h_a: f64,
    pub h2_a: f64,
    pub h3_a: f64,
    blend: SlopeBlend,
    /// Smallest `z − h(z)` and smallest `h'` seen on the validation grid.
    pub grid_margin: f64,
    pub min_slope: f64,
}

impl ShearProfile {
    /// Build and validate a profile. `grid` is the number of uniform points
    /// used to check `h(z) < z` and `h' > 0`.
    pub fn build(lambda: f64, eta: f64, mu: f64, a: f64, n: u32, grid: usize) -> Result<Self> {
        if !(0.0 < lambda && lambda < eta && eta < 1.0 && 1.0 < mu) {
            return Err(Error::ConstantsOutOfOrder(format!(
                "0 < λ < η < 1 < μ violated by λ={lambda}, η={eta}, μ={mu}"
            )));
        }
        if !(0.0 < a && a < 1.0) {
            return Err(Error::ConstantsOutOfOrder(format!(
                "0 < a < 1 violated by a={a}"
            )));
        }
        let h_a = 1.0 - mu * (1.0 - a);
        if h_a <= 0.0 {
            return Err(Error::ConstantsOutOfOrder(format!(
                "h(a) = 1 − μ(1 − a) = {h_a} must be positive"
            )));
        }
        if n < 1 {
            return Err(Error::ConstantsOutOfOrder("N must be at least 1".into()));
        }

        // c and the blend depend on each other through h³(a); iterate the
        // map c ↦ h³(a)/2 to a fixed point.
        let mut c = 0.5 * lambda * lambda * h_a;
        let mut blend = Self::blend_for(lambda, mu, a, h_a, c)?;
        for _ in 0..200 {
            let h2 = Self::h_with(lambda, mu, a, c, &blend, h_a);
            let h3 = Self::h_with(lambda, mu, a, c, &blend, h2);
            let next = 0.5 * h3;
            let done = (next - c).abs() <= 1e-15 * c.max(1e-300);
            c = next;
            blend = Self::blend_for(lambda, mu, a, h_a, c)?;
            if done {
                break;
            }
        }
        if !(c > 0.0 && c < h_a) {
            return Err(Error::ConstantsOutOfOrder(format!(
                "0 < c < h(a) violated by c={c}"
            )));
        }
        let h2_a = Self::h_with(lambda, mu, a, c, &blend, h_a);
        let h3_a = Self::h_with(lambda, mu, a, c, &blend, h2_a);
        if c >= h3_a {
            return Err(Error::BranchOverlap { c, h3a: h3_a });
        }

        let mut profile = ShearProfile {
            lambda,
            eta,
            mu,
            a,
            c,
            n,
            h_a,
            h2_a,
            h3_a,
            blend,
            grid_margin: f64::INFINITY,
            min_slope: f64::INFINITY,
        };
        let grid = grid.max(2);
        for i in 0..=grid {
            let z = i as f64 / grid as f64;
            let s = profile.h_prime(z);
            if s <= 0.0 {
                return Err(Error::BlendNotMonotone { z, slope: s });
            }
            profile.min_slope = profile.min_slope.min(s);
            if z > 0.0 && z < 1.0 {
                let gap = z - profile.h(z);
                if gap <= 0.0 {
                    return Err(Error::ConstantsOutOfOrder(format!(
                        "h(z) < z violated at z={z}"
                    )));
                }
                profile.grid_margin = profile.grid_margin.min(gap);
            }
        }
        Ok(profile)
    }

    fn blend_for(lambda: f64, mu: f64, a: f64, h_a: f64, c: f64) -> Result<SlopeBlend> {
        SlopeBlend::new(c, a, lambda * c, h_a, lambda, mu)
    }

    fn h_with(lambda: f64, mu: f64, a: f64, c: f64, blend: &SlopeBlend, z: f64) -> f64 {
        if z <= c {
            lambda * z
        } else if z >= a {
            1.0 - mu * (1.0 - z)
        } else {
            blend.eval(z)
        }
    }

    pub fn h(&self, z: f64) -> f64 {
        Self::h_with(self.lambda, self.mu, self.a, self.c, &self.blend, z)
    }

    pub fn h_prime(&self, z: f64) -> f64 {
        if z <= self.c {
            self.lambda
        } else if z >= self.a {
            self.mu
        } else {
            self.blend.slope(z)
        }
    }

    /// Solve `h(w) = z`: analytic on the outer branches, bisection with a
    /// Newton polish on the blend.
    pub fn h_inverse(&self, z: f64) -> f64 {
        if z <= self.lambda * self.c {
            return z / self.lambda;
        }
        if z >= self.h_a {
            return 1.0 - (1.0 - z) / self.mu;
        }
        let (mut lo, mut hi) = (self.c, self.a);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.blend.eval(mid) < z {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        let mut w = 0.5 * (lo + hi);
        for _ in 0..3 {
            let s = self.blend.slope(w);
            if s <= 0.0 {
                break;
            }
            let next = w - (self.blend.eval(w) - z) / s;
            if next > self.c && next < self.a {
                w = next;
            }
        }
        w
    }

    /// `h^k(z)` for `k ≥ 0`.
    pub fn h_iter(&self, z: f64, k: usize) -> f64 {
        (0..k).fold(z, |acc, _| self.h(acc))
    }

    pub fn tau(&self, z: f64) -> f64 {
        smoothstep((z - self.h2_a) / (self.a - self.h2_a))
    }

    pub fn tau_prime(&self, z: f64) -> f64 {
        let w = self.a - self.h2_a;
        smoothstep_prime((z - self.h2_a) / w) / w
    }

    pub fn rho(&self, z: f64) -> f64 {
        let w = self.h2_a - self.h3_a;
        1.0 + (self.n as f64 - 1.0) * smoothstep((z - self.h3_a) / w)
    }

    pub fn rho_prime(&self, z: f64) -> f64 {
        let w = self.h2_a - self.h3_a;
        (self.n as f64 - 1.0) * smoothstep_prime((z - self.h3_a) / w) / w
    }

    fn check(z: f64) -> Result<f64> {
        if (0.0..=1.0).contains(&z) {
            Ok(z)
        } else {
            Err(Error::OutOfDomain(z))
        }
    }

    pub fn h_eval(&self, z: f64) -> Result<f64> {
        Self::check(z).map(|z| self.h(z))
    }

    pub fn h_prime_eval(&self, z: f64) -> Result<f64> {
        Self::check(z).map(|z| self.h_prime(z))
    }

    pub fn h_inverse_eval(&self, z: f64) -> Result<f64> {
        Self::check(z).map(|z| self.h_inverse(z))
    }

    pub fn tau_eval(&self, z: f64) -> Result<f64> {
        Self::check(z).map(|z| self.tau(z))
    }

    pub fn tau_prime_eval(&self, z: f64) -> Result<f64> {
        Self::check(z).map(|z| self.tau_prime(z))
    }

    pub fn rho_eval(&self, z: f64) -> Result<f64> {
        Self::check(z).map(|z| self.rho(z))
    }

    pub fn rho_prime_eval(&self, z: f64) -> Result<f64> {
        Self::check(z).map(|z| self.rho_prime(z))
    }

    /// Rows `(z, h, h', τ, τ', ρ, ρ')` on a uniform grid of `points`.
    pub fn table(&self, points: usize) -> Vec<[f64; 7]> {
        let points = points.max(2);
        (0..points)
            .map(|i| {
                let z = i as f64 / (points - 1) as f64;
                [
                    z,
                    self.h(z),
                    self.h_prime(z),
                    self.tau(z),
                    self.tau_prime(z),
                    self.rho(z),
                    self.rho_prime(z),
                ]
            })
            .collect()
    }

    /// Whether the flow-time inequality `μ_s^N < λ` holds.
    pub fn flow_time_ok(&self, mu_s: f64) -> bool {
        mu_s.powi(self.n as i32) < self.lambda
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default() -> ShearProfile {
        ShearProfile::build(0.2, 0.4, 2.5, 0.9, 1, 10_000).unwrap()
    }

    #[test]
    fn endpoints_are_fixed() {
        let p = default();
        assert_eq!(p.h(0.0), 0.0);
        assert_eq!(p.h(1.0), 1.0);
    }

    #[test]
    fn outer_branch_value() {
        let p = default();
        assert!((p.h(0.95) - 0.875).abs() < 1e-15);
    }

    #[test]
    fn inner_branch_at_half_c() {
        let p = ShearProfile::build(0.36, 0.4, 2.5, 0.9, 1, 1000).unwrap();
        let z = p.c / 2.0;
        assert!((p.h(z) - 0.18 * p.c).abs() < 1e-16);
        assert_eq!(p.h_prime(z), 0.36);
        assert_eq!(p.h_prime(0.0), 0.36);
    }

    #[test]
    fn c_is_half_of_h3a() {
        let p = default();
        assert!((p.c - 0.5 * p.h3_a).abs() < 1e-14);
        assert!(p.c < p.h3_a);
        assert!((p.h_iter(p.a, 3) - p.h3_a).abs() < 1e-15);
    }

    #[test]
    fn blend_slope_stays_between_branches() {
        for lam in [0.05, 0.1, 0.2, 0.36] {
            let p = ShearProfile::build(lam, 0.7, 2.5, 0.9, 1, 10_000).unwrap();
            assert!(p.min_slope >= lam - 1e-12, "λ={lam}: {}", p.min_slope);
            for i in 0..=1000 {
                let z = p.c + (p.a - p.c) * i as f64 / 1000.0;
                assert!(p.h_prime(z) <= p.mu + 1e-12);
            }
            // Value continuity at both joins.
            assert!((p.h(p.c + 1e-13) - p.lambda * p.c).abs() < 1e-12);
            assert!((p.h(p.a - 1e-13) - p.h_a).abs() < 1e-11);
        }
    }

    #[test]
    fn tau_plateaus() {
        let p = default();
        assert_eq!(p.tau(p.h2_a), 0.0);
        assert_eq!(p.tau(p.a), 1.0);
        assert_eq!(p.tau_prime(p.a), 0.0);
        assert_eq!(p.tau_prime(p.h2_a), 0.0);
        let mid = 0.5 * (p.h2_a + p.a);
        assert!((p.tau(mid) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rho_plateaus() {
        let p = ShearProfile::build(0.2, 0.4, 2.5, 0.9, 4, 1000).unwrap();
        assert_eq!(p.rho(1.0), 4.0);
        assert_eq!(p.rho(p.h3_a), 1.0);
        assert_eq!(p.rho(0.0), 1.0);
        assert_eq!(p.rho(p.h2_a), 4.0);
    }

    #[test]
    fn out_of_order_constants() {
        assert!(matches!(
            ShearProfile::build(0.5, 0.4, 2.5, 0.9, 1, 100),
            Err(Error::ConstantsOutOfOrder(_))
        ));
        assert!(matches!(
            ShearProfile::build(0.2, 0.4, 0.9, 0.9, 1, 100),
            Err(Error::ConstantsOutOfOrder(_))
        ));
    }

    #[test]
    fn domain_is_enforced() {
        let p = default();
        assert_eq!(p.h_eval(1.5), Err(Error::OutOfDomain(1.5)));
        assert_eq!(p.tau_eval(-0.1), Err(Error::OutOfDomain(-0.1)));
    }

    #[test]
    fn inverse_on_blend_matches_tabulation() {
        let p = default();
        // Independent oracle: fine tabulation of h and linear interpolation.
        let n = 200_000;
        let tab: Vec<(f64, f64)> = (0..=n)
            .map(|i| {
                let z = p.c + (p.a - p.c) * i as f64 / n as f64;
                (z, p.h(z))
            })
            .collect();
        for target in [0.05, 0.2, 0.5, 0.7] {
            let k = tab.partition_point(|(_, hz)| *hz < target);
            let (z0, h0) = tab[k - 1];
            let (z1, h1) = tab[k];
            let approx = z0 + (target - h0) * (z1 - z0) / (h1 - h0);
            let w = p.h_inverse(target);
            assert!((w - approx).abs() < 1e-9, "{w} vs {approx}");
            assert!((p.h(w) - target).abs() < 1e-14);
        }
    }
}
