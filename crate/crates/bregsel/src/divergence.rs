//! Bregman divergences between densities, generated by a power-family
//! convex function, with an exact integral form for closed-form densities
//! and a truncated plug-in form for kernel density estimates.

use std::cell::Cell;

use crate::density::DensityEstimate;
use crate::quad::QuadratureSpec;
use crate::{Error, Result};

/// Densities below this floor are treated as outside the common support of
/// the exact integrand; it only exists to keep ratios representable.
const DENSITY_FLOOR: f64 = 1e-300;

/// Convex generator phi(t) = c1 * t^beta / (beta (beta - 1)) + c2 * t + c3,
/// with the usual limiting branches t ln t at beta = 1 and -ln t at
/// beta = 0. The affine part (c2, c3) never affects the divergence.
#[derive(Debug, Clone, Copy)]
pub struct BregmanGenerator {
    pub beta: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl BregmanGenerator {
    pub fn new(beta: f64, c1: f64, c2: f64, c3: f64) -> Result<Self> {
        if !(c1 > 0.0 && c1.is_finite()) {
            return Err(Error::Domain(format!(
                "generator weight c1 must be positive and finite, got {c1}"
            )));
        }
        if !beta.is_finite() || !c2.is_finite() || !c3.is_finite() {
            return Err(Error::Domain(
                "generator coefficients must be finite".into(),
            ));
        }
        Ok(Self { beta, c1, c2, c3 })
    }

    /// The cubic-generator default used throughout the selection pipeline.
    pub fn cubic() -> Self {
        Self {
            beta: 3.0,
            c1: 1.0,
            c2: 0.0,
            c3: 0.0,
        }
    }

    pub fn phi(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!(
                "generator argument must be positive and finite, got {t}"
            )));
        }
        Ok(self.phi_raw(t))
    }

    pub fn phi_prime(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!(
                "generator argument must be positive and finite, got {t}"
            )));
        }
        Ok(self.phi_prime_raw(t))
    }

    fn phi_raw(&self, t: f64) -> f64 {
        if self.beta == 1.0 {
            self.c1 * t * t.ln() + self.c2 * t + self.c3
        } else if self.beta == 0.0 {
            -self.c1 * t.ln() + self.c2 * t + self.c3
        } else {
            self.c1 * t.powf(self.beta) / (self.beta * (self.beta - 1.0)) + self.c2 * t + self.c3
        }
    }

    fn phi_prime_raw(&self, t: f64) -> f64 {
        if self.beta == 1.0 {
            self.c1 * (t.ln() + 1.0) + self.c2
        } else if self.beta == 0.0 {
            -self.c1 / t + self.c2
        } else {
            self.c1 * t.powf(self.beta - 1.0) / (self.beta - 1.0) + self.c2
        }
    }

    fn pointwise_raw(&self, p: f64, q: f64) -> f64 {
        let d = self.phi_raw(p) - self.phi_raw(q) - (p - q) * self.phi_prime_raw(q);
        // convexity makes the true value nonnegative; tiny negatives are rounding
        d.max(0.0)
    }
}

/// Pointwise Bregman divergence phi(p) - phi(q) - (p - q) phi'(q).
pub fn bregman_pointwise(gen: &BregmanGenerator, p: f64, q: f64) -> Result<f64> {
    if !(p > 0.0) || !p.is_finite() || !(q > 0.0) || !q.is_finite() {
        return Err(Error::Domain(format!(
            "pointwise divergence requires positive finite arguments, got p={p}, q={q}"
        )));
    }
    Ok(gen.pointwise_raw(p, q))
}

/// Sample-size-indexed truncation threshold gamma_n = c / n below which the
/// density estimate is masked out of the plug-in integrand.
#[derive(Debug, Clone, Copy)]
pub struct TruncationPolicy {
    pub c_gamma: f64,
}

impl TruncationPolicy {
    pub fn new(c_gamma: f64) -> Result<Self> {
        if !(c_gamma > 0.0 && c_gamma.is_finite()) {
            return Err(Error::Domain(format!(
                "truncation constant must be positive and finite, got {c_gamma}"
            )));
        }
        Ok(Self { c_gamma })
    }

    pub fn threshold(&self, n: usize) -> f64 {
        self.c_gamma / n as f64
    }
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self { c_gamma: 0.01 }
    }
}

/// Divergence between two closed-form densities over the quadrature window.
/// Points where either density underflows the representable floor
/// contribute zero.
pub fn divergence_exact<F, G>(
    gen: &BregmanGenerator,
    f: F,
    g: G,
    quad: &QuadratureSpec,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    quad.integrate(|x| {
        let p = f(x);
        let q = g(x);
        if p < DENSITY_FLOOR || q < DENSITY_FLOOR {
            0.0
        } else {
            gen.pointwise_raw(p, q)
        }
    })
}

/// Plug-in divergence of a kernel density estimate from a model density.
///
/// The estimate is masked wherever it falls below the truncation threshold
/// for its own sample size; the model density is floored at the smallest
/// representable positive value so the generator derivative stays finite.
/// If no quadrature node survives the mask the estimate is reported as
/// degenerate rather than silently zero.
pub fn divergence_estimate<Q>(
    gen: &BregmanGenerator,
    est: &DensityEstimate,
    model: Q,
    trunc: &TruncationPolicy,
    quad: &QuadratureSpec,
) -> Result<f64>
where
    Q: Fn(f64) -> f64,
{
    let threshold = trunc.threshold(est.sample().len());
    let any_pass = Cell::new(false);
    let value = quad.integrate(|x| {
        let p = est.density_at(x);
        if p < threshold {
            return 0.0;
        }
        any_pass.set(true);
        let q = model(x).max(DENSITY_FLOOR);
        gen.pointwise_raw(p, q)
    })?;
    if !any_pass.get() {
        return Err(Error::DegenerateEstimate);
    }
    Ok(value)
}

/// Hand-expanded integrand for the cubic generator,
/// (p^3 - 3 p q^2 + 2 q^3) / 6, exact-density form.
pub fn beta3_divergence_exact<F, G>(f: F, g: G, quad: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    quad.integrate(|x| {
        let p = f(x);
        let q = g(x);
        if p < DENSITY_FLOOR || q < DENSITY_FLOOR {
            0.0
        } else {
            beta3_integrand(p, q)
        }
    })
}

/// Hand-expanded cubic-generator integrand, plug-in form with truncation.
pub fn beta3_divergence_estimate<Q>(
    est: &DensityEstimate,
    model: Q,
    trunc: &TruncationPolicy,
    quad: &QuadratureSpec,
) -> Result<f64>
where
    Q: Fn(f64) -> f64,
{
    let threshold = trunc.threshold(est.sample().len());
    let any_pass = Cell::new(false);
    let value = quad.integrate(|x| {
        let p = est.density_at(x);
        if p < threshold {
            return 0.0;
        }
        any_pass.set(true);
        let q = model(x).max(DENSITY_FLOOR);
        beta3_integrand(p, q)
    })?;
    if !any_pass.get() {
        return Err(Error::DegenerateEstimate);
    }
    Ok(value)
}

fn beta3_integrand(p: f64, q: f64) -> f64 {
    ((p * p * p - 3.0 * p * q * q + 2.0 * q * q * q) / 6.0).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{Kernel, KdeVariant, Sample};
    use crate::special::SQRT_2PI;

    #[test]
    fn generator_branches() {
        let cubic = BregmanGenerator::new(3.0, 2.0, 5.0, 7.0).unwrap();
        // 2 * 8 / 6 + 10 + 7
        assert!((cubic.phi(2.0).unwrap() - (16.0 / 6.0 + 17.0)).abs() < 1e-14);
        assert!((cubic.phi_prime(2.0).unwrap() - (2.0 * 4.0 / 2.0 + 5.0)).abs() < 1e-14);

        let entropic = BregmanGenerator::new(1.0, 1.0, 0.0, 0.0).unwrap();
        assert!((entropic.phi(2.0).unwrap() - 2.0 * 2.0f64.ln()).abs() < 1e-15);
        assert!((entropic.phi_prime(2.0).unwrap() - (2.0f64.ln() + 1.0)).abs() < 1e-15);

        let burg = BregmanGenerator::new(0.0, 1.0, 0.0, 0.0).unwrap();
        assert!((burg.phi(2.0).unwrap() + 2.0f64.ln()).abs() < 1e-15);
        assert!((burg.phi_prime(2.0).unwrap() + 0.5).abs() < 1e-15);
    }

    #[test]
    fn generator_rejects_bad_coefficients_and_arguments() {
        assert!(BregmanGenerator::new(3.0, 0.0, 0.0, 0.0).is_err());
        assert!(BregmanGenerator::new(3.0, -1.0, 0.0, 0.0).is_err());
        assert!(BregmanGenerator::new(f64::NAN, 1.0, 0.0, 0.0).is_err());
        let gen = BregmanGenerator::cubic();
        assert!(gen.phi(0.0).is_err());
        assert!(gen.phi(-1.0).is_err());
        assert!(gen.phi_prime(f64::NAN).is_err());
    }

    #[test]
    fn pointwise_cubic_reference_value() {
        let gen = BregmanGenerator::cubic();
        let got = bregman_pointwise(&gen, 2.0, 1.0).unwrap();
        assert!((got - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(bregman_pointwise(&gen, 0.7, 0.7).unwrap(), 0.0);
        assert!(bregman_pointwise(&gen, 0.0, 1.0).is_err());
        assert!(bregman_pointwise(&gen, 1.0, -2.0).is_err());
    }

    #[test]
    fn exact_divergence_squared_l2_between_gaussians() {
        // beta = 2 gives half the squared L2 distance; for two unit-width
        // normals separated by mu the closed form is (1 - exp(-mu^2/4)) / (2 sqrt(pi))
        let gen = BregmanGenerator::new(2.0, 1.0, 0.0, 0.0).unwrap();
        let quad = QuadratureSpec::new(-10.0, 11.0, 1e-12, 40).unwrap();
        let f = |x: f64| (-0.5 * x * x).exp() / SQRT_2PI;
        let g = |x: f64| (-0.5 * (x - 1.0) * (x - 1.0)).exp() / SQRT_2PI;
        let got = divergence_exact(&gen, f, g, &quad).unwrap();
        let want = (1.0 - (-0.25f64).exp()) / (2.0 * std::f64::consts::PI.sqrt());
        assert!((got - want).abs() < 1e-9, "got {got} want {want}");
    }

    #[test]
    fn exact_divergence_kullback_leibler_between_exponentials() {
        // beta = 1 gives integral of p ln(p/q) - p + q; between Exp(1) and
        // Exp(2) the mass terms cancel and the value is 1 - ln 2
        let gen = BregmanGenerator::new(1.0, 1.0, 0.0, 0.0).unwrap();
        let quad = QuadratureSpec::new(0.0, 60.0, 1e-12, 40).unwrap();
        let got = divergence_exact(&gen, |x| (-x).exp(), |x| 2.0 * (-2.0 * x).exp(), &quad)
            .unwrap();
        let want = 1.0 - 2.0f64.ln();
        assert!((got - want).abs() < 1e-9, "got {got} want {want}");
    }

    #[test]
    fn exact_divergence_itakura_saito_between_constants() {
        // beta = 0 gives ln(q/p) + p/q - 1 pointwise; constants 2 and 1 on
        // a unit window integrate to 1 - ln 2
        let gen = BregmanGenerator::new(0.0, 1.0, 0.0, 0.0).unwrap();
        let quad = QuadratureSpec::new(0.0, 1.0, 1e-12, 40).unwrap();
        let got = divergence_exact(&gen, |_| 2.0, |_| 1.0, &quad).unwrap();
        let want = 1.0 - 2.0f64.ln();
        assert!((got - want).abs() < 1e-12, "got {got} want {want}");
    }

    #[test]
    fn affine_generator_part_does_not_move_the_divergence() {
        let plain = BregmanGenerator::new(3.0, 1.0, 0.0, 0.0).unwrap();
        let shifted = BregmanGenerator::new(3.0, 1.0, -4.0, 9.0).unwrap();
        for (p, q) in [(0.3, 0.9), (2.0, 0.1), (1.0, 1.0)] {
            let a = bregman_pointwise(&plain, p, q).unwrap();
            let b = bregman_pointwise(&shifted, p, q).unwrap();
            assert!((a - b).abs() < 1e-12, "p={p} q={q}: {a} vs {b}");
        }
    }

    #[test]
    fn truncation_policy_threshold() {
        let trunc = TruncationPolicy::default();
        assert!((trunc.threshold(100) - 1e-4).abs() < 1e-19);
        assert!(TruncationPolicy::new(0.0).is_err());
        assert!(TruncationPolicy::new(-0.5).is_err());
    }

    #[test]
    fn plugin_divergence_with_unreachable_threshold_is_degenerate() {
        let sample = Sample::new(vec![1.0, 2.0, 3.0], "t").unwrap();
        let est =
            DensityEstimate::new(sample, 1.0, Kernel::Gaussian, KdeVariant::BiasReduced).unwrap();
        let trunc = TruncationPolicy::new(1e9).unwrap();
        let quad = QuadratureSpec::new(0.0, 10.0, 1e-10, 40).unwrap();
        let err = divergence_estimate(
            &BregmanGenerator::cubic(),
            &est,
            |x| (-x).exp(),
            &trunc,
            &quad,
        )
        .unwrap_err();
        assert!(matches!(err, Error::DegenerateEstimate));
    }

    #[test]
    fn cubic_fast_path_matches_generic_generator() {
        let sample = Sample::new(vec![1.5, 2.0, 2.5, 3.5, 5.0], "t").unwrap();
        let est =
            DensityEstimate::new(sample, 0.8, Kernel::Gaussian, KdeVariant::BiasReduced).unwrap();
        let trunc = TruncationPolicy::default();
        let quad = QuadratureSpec::new(0.0, 20.0, 1e-11, 40).unwrap();
        let model = |x: f64| if x > 0.0 { 0.4 * (-0.4 * x).exp() } else { 0.0 };
        let generic = divergence_estimate(
            &BregmanGenerator::cubic(),
            &est,
            model,
            &trunc,
            &quad,
        )
        .unwrap();
        let fast = beta3_divergence_estimate(&est, model, &trunc, &quad).unwrap();
        assert!((generic - fast).abs() < 1e-10, "{generic} vs {fast}");

        let exact_generic = divergence_exact(
            &BregmanGenerator::cubic(),
            |x: f64| (-x).exp(),
            |x: f64| 2.0 * (-2.0 * x).exp(),
            &QuadratureSpec::new(0.0, 40.0, 1e-11, 40).unwrap(),
        )
        .unwrap();
        let exact_fast = beta3_divergence_exact(
            |x: f64| (-x).exp(),
            |x: f64| 2.0 * (-2.0 * x).exp(),
            &QuadratureSpec::new(0.0, 40.0, 1e-11, 40).unwrap(),
        )
        .unwrap();
        assert!((exact_generic - exact_fast).abs() < 1e-10);
    }
}
