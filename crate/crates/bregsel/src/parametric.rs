//! Gamma and log-normal models: densities, estimators, and samplers, plus
//! the two-component mixture used as a data-generating process.
//!
//! The gamma shape estimator starts from method-of-moments on a short
//! prefix of the sample and applies the scoring update
//! alpha <- alpha + (log-likelihood slope) / (observed curvature)
//! until it stabilizes, so the result solves the shape score equation to
//! near machine precision while inheriting root-n consistency from the
//! prefix start.

use rand::Rng;
use rand_distr::Distribution;

use crate::density::Sample;
use crate::special::{digamma, ln_gamma, trigamma, LN_SQRT_2PI};
use crate::{Error, Result};

/// Gamma distribution in shape/rate form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaParams {
    pub alpha: f64,
    pub eta: f64,
}

impl GammaParams {
    pub fn new(alpha: f64, eta: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0 && eta.is_finite() && eta > 0.0) {
            return Err(Error::Domain(format!(
                "gamma parameters must be positive and finite, got alpha={alpha}, eta={eta}"
            )));
        }
        Ok(Self { alpha, eta })
    }

    pub fn mean(&self) -> f64 {
        self.alpha / self.eta
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogNormalParams {
    pub mu: f64,
    pub sigma: f64,
}

impl LogNormalParams {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !(mu.is_finite() && sigma.is_finite() && sigma > 0.0) {
            return Err(Error::Domain(format!(
                "log-normal parameters must be finite with sigma > 0, got mu={mu}, sigma={sigma}"
            )));
        }
        Ok(Self { mu, sigma })
    }

    pub fn mean(&self) -> f64 {
        (self.mu + 0.5 * self.sigma * self.sigma).exp()
    }
}

/// Two-component positive mixture: each observation is drawn from the gamma
/// component with probability `pi`, otherwise from the log-normal component.
#[derive(Debug, Clone, Copy)]
pub struct MixtureDgp {
    pub pi: f64,
    pub gamma: GammaParams,
    pub lognormal: LogNormalParams,
}

impl MixtureDgp {
    pub fn new(pi: f64, gamma: GammaParams, lognormal: LogNormalParams) -> Result<Self> {
        if !(0.0..=1.0).contains(&pi) || !pi.is_finite() {
            return Err(Error::Domain(format!(
                "mixture weight must lie in [0, 1], got {pi}"
            )));
        }
        Ok(Self {
            pi,
            gamma,
            lognormal,
        })
    }
}

/// Settings for the scoring-based gamma fit: the prefix used for the
/// preliminary moment estimate has length floor(n^delta).
#[derive(Debug, Clone, Copy)]
pub struct OneStepConfig {
    pub delta: f64,
}

impl OneStepConfig {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.5 && delta < 1.0) {
            return Err(Error::Domain(format!(
                "prefix exponent must lie in (0.5, 1), got {delta}"
            )));
        }
        Ok(Self { delta })
    }
}

impl Default for OneStepConfig {
    fn default() -> Self {
        Self { delta: 0.6 }
    }
}

/// Gamma density, total on the reals: 0 for x < 0, and at x = 0 the finite
/// limit (eta when alpha = 1, zero otherwise; the integrable singularity
/// for alpha < 1 is reported as 0 rather than infinity).
pub fn gamma_pdf(p: &GammaParams, x: f64) -> f64 {
    if x < 0.0 || x.is_nan() {
        return 0.0;
    }
    if x == 0.0 {
        return if p.alpha == 1.0 { p.eta } else { 0.0 };
    }
    (p.alpha * p.eta.ln() + (p.alpha - 1.0) * x.ln() - p.eta * x - ln_gamma(p.alpha)).exp()
}

/// Log-normal density, total on the reals: 0 for x <= 0.
pub fn lognormal_pdf(p: &LogNormalParams, x: f64) -> f64 {
    if x <= 0.0 || x.is_nan() {
        return 0.0;
    }
    let z = (x.ln() - p.mu) / p.sigma;
    (-0.5 * z * z - x.ln() - p.sigma.ln() - LN_SQRT_2PI).exp()
}

/// Mixture density.
pub fn mixture_pdf(dgp: &MixtureDgp, x: f64) -> f64 {
    dgp.pi * gamma_pdf(&dgp.gamma, x) + (1.0 - dgp.pi) * lognormal_pdf(&dgp.lognormal, x)
}

/// Closed-form log-normal maximum likelihood fit (1/n variance divisor).
pub fn lognormal_mle(sample: &Sample) -> Result<LogNormalParams> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::SampleTooSmall { need: 2, got: n });
    }
    if let Some(bad) = sample.values().iter().find(|v| **v <= 0.0) {
        return Err(Error::Domain(format!(
            "log-normal fit requires positive observations, got {bad}"
        )));
    }
    let logs: Vec<f64> = sample.values().iter().map(|v| v.ln()).collect();
    let mu = logs.iter().sum::<f64>() / n as f64;
    let var = logs.iter().map(|l| (l - mu) * (l - mu)).sum::<f64>() / n as f64;
    if !(var > 0.0) {
        return Err(Error::DegenerateFit(
            "zero log-scale variance in log-normal fit".into(),
        ));
    }
    Ok(LogNormalParams {
        mu,
        sigma: var.sqrt(),
    })
}

/// Method-of-moments gamma fit (1/n variance divisor) on a slice of
/// observations, used both standalone and as the prefix initializer.
pub fn gamma_method_of_moments(values: &[f64]) -> Result<GammaParams> {
    if values.len() < 2 {
        return Err(Error::SampleTooSmall {
            need: 2,
            got: values.len(),
        });
    }
    if let Some(bad) = values.iter().find(|v| **v <= 0.0) {
        return Err(Error::Domain(format!(
            "gamma fit requires positive observations, got {bad}"
        )));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if !(var > 0.0) {
        return Err(Error::DegenerateFit(
            "zero variance in method-of-moments gamma fit".into(),
        ));
    }
    GammaParams::new(mean * mean / var, mean / var)
}

const SHAPE_REL_TOL: f64 = 1e-13;
// the scoring map contracts linearly at roughly 1 - 1/(2 alpha), so a
// tight tolerance needs on the order of 60 * alpha iterations
const SHAPE_MAX_ITER: usize = 2000;

/// Gamma fit by scoring iteration from a prefix moment start.
///
/// The shape score g(a) = mean(ln X) - ln(mean X) + ln a - digamma(a) is
/// driven to zero by a = a + g(a) / trigamma(a), halving on any proposal
/// that leaves the parameter space; the rate is alpha / mean.
pub fn gamma_one_step_mle(sample: &Sample, cfg: &OneStepConfig) -> Result<GammaParams> {
    let n = sample.len();
    if n < 4 {
        return Err(Error::SampleTooSmall { need: 4, got: n });
    }
    let values = sample.values();
    if let Some(bad) = values.iter().find(|v| **v <= 0.0) {
        return Err(Error::Domain(format!(
            "gamma fit requires positive observations, got {bad}"
        )));
    }
    let prefix_len = ((n as f64).powf(cfg.delta).floor() as usize).clamp(2, n);
    let prelim = gamma_method_of_moments(&values[..prefix_len])?;

    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let mean_log = values.iter().map(|v| v.ln()).sum::<f64>() / nf;
    let gap = mean_log - mean.ln(); // always <= 0, = 0 only for constant data

    let mut a = prelim.alpha;
    let mut converged = false;
    for _ in 0..SHAPE_MAX_ITER {
        let g = gap + a.ln() - digamma(a)?;
        let proposal = a + g / trigamma(a)?;
        let next = if proposal.is_finite() && proposal > 0.0 {
            proposal
        } else {
            0.5 * a
        };
        let done = (next - a).abs() <= SHAPE_REL_TOL * a.abs();
        a = next;
        if done {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::StepFailure(format!(
            "gamma shape update did not stabilize after {SHAPE_MAX_ITER} iterations"
        )));
    }
    GammaParams::new(a, a / mean)
}

/// Draw `n` gamma observations.
pub fn sample_gamma<R: Rng + ?Sized>(p: &GammaParams, n: usize, rng: &mut R) -> Vec<f64> {
    let dist = rand_distr::Gamma::new(p.alpha, 1.0 / p.eta).expect("validated gamma parameters");
    (0..n).map(|_| dist.sample(rng)).collect()
}

/// Draw `n` log-normal observations.
pub fn sample_lognormal<R: Rng + ?Sized>(p: &LogNormalParams, n: usize, rng: &mut R) -> Vec<f64> {
    let dist =
        rand_distr::LogNormal::new(p.mu, p.sigma).expect("validated log-normal parameters");
    (0..n).map(|_| dist.sample(rng)).collect()
}

/// Draw `n` mixture observations. Each observation consumes one uniform for
/// the component pick and then one draw from the chosen component, in that
/// order, which pins the stream layout for reproducibility.
pub fn sample_mixture<R: Rng + ?Sized>(dgp: &MixtureDgp, n: usize, rng: &mut R) -> Vec<f64> {
    let gamma =
        rand_distr::Gamma::new(dgp.gamma.alpha, 1.0 / dgp.gamma.eta).expect("validated parameters");
    let lognormal = rand_distr::LogNormal::new(dgp.lognormal.mu, dgp.lognormal.sigma)
        .expect("validated parameters");
    (0..n)
        .map(|_| {
            if rng.random::<f64>() < dgp.pi {
                gamma.sample(rng)
            } else {
                lognormal.sample(rng)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample(values: &[f64]) -> Sample {
        Sample::new(values.to_vec(), "test").unwrap()
    }

    #[test]
    fn gamma_pdf_matches_reference_point() {
        let p = GammaParams::new(4.02804, 0.055767).unwrap();
        let want = 1.08600739433139231e-2;
        assert!((gamma_pdf(&p, 72.22) - want).abs() < 1e-16);
    }

    #[test]
    fn gamma_pdf_boundary_conventions() {
        let steep = GammaParams::new(2.5, 1.0).unwrap();
        assert_eq!(gamma_pdf(&steep, -1.0), 0.0);
        assert_eq!(gamma_pdf(&steep, 0.0), 0.0);
        let exponential = GammaParams::new(1.0, 3.0).unwrap();
        assert_eq!(gamma_pdf(&exponential, 0.0), 3.0);
        let singular = GammaParams::new(0.5, 1.0).unwrap();
        assert_eq!(gamma_pdf(&singular, 0.0), 0.0);
        assert!(gamma_pdf(&singular, 1e-12).is_finite());
    }

    #[test]
    fn lognormal_pdf_median_matches_reference() {
        // at x = e^mu the exponent vanishes and the density is
        // 1 / (sqrt(2 pi) sigma x)
        let p = LogNormalParams::new(4.150614, 0.521485).unwrap();
        let want = 1.20525651634387360e-2;
        assert!((lognormal_pdf(&p, p.mu.exp()) - want).abs() < 1e-15);
        assert_eq!(lognormal_pdf(&p, 0.0), 0.0);
        assert_eq!(lognormal_pdf(&p, -3.0), 0.0);
    }

    #[test]
    fn lognormal_mle_closed_form() {
        let e = std::f64::consts::E;
        let fit = lognormal_mle(&sample(&[e, e, e * e * e])).unwrap();
        assert!((fit.mu - 5.0 / 3.0).abs() < 1e-15);
        assert!((fit.sigma - (8.0f64 / 9.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn lognormal_mle_rejects_degenerate_and_nonpositive() {
        assert!(matches!(
            lognormal_mle(&sample(&[2.0, 2.0, 2.0])),
            Err(Error::DegenerateFit(_))
        ));
        assert!(matches!(
            lognormal_mle(&sample(&[1.0, -2.0])),
            Err(Error::Domain(_))
        ));
        assert!(lognormal_mle(&sample(&[1.0])).is_err());
    }

    #[test]
    fn method_of_moments_exact_case() {
        // mean 2.5, population variance 1.25 -> alpha 5, eta 2
        let fit = gamma_method_of_moments(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((fit.alpha - 5.0).abs() < 1e-12);
        assert!((fit.eta - 2.0).abs() < 1e-12);
        assert!(gamma_method_of_moments(&[2.0, 2.0]).is_err());
        assert!(gamma_method_of_moments(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn one_step_fit_solves_the_shape_score_equation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let truth = GammaParams::new(4.0, 0.056).unwrap();
        let s = Sample::new(sample_gamma(&truth, 400, &mut rng), "sim").unwrap();
        let fit = gamma_one_step_mle(&s, &OneStepConfig::default()).unwrap();

        let mean = s.mean();
        let mean_log = s.values().iter().map(|v| v.ln()).sum::<f64>() / s.len() as f64;
        let score = mean_log - mean.ln() + fit.alpha.ln() - digamma(fit.alpha).unwrap();
        assert!(score.abs() < 1e-12, "score residual {score}");
        assert!((fit.eta - fit.alpha / mean).abs() < 1e-15);
        // sanity: in the neighbourhood of the truth for a decent n
        assert!((fit.alpha - truth.alpha).abs() < 1.0);
    }

    #[test]
    fn one_step_fit_input_contracts() {
        assert!(matches!(
            gamma_one_step_mle(&sample(&[1.0, 2.0, 3.0]), &OneStepConfig::default()),
            Err(Error::SampleTooSmall { need: 4, .. })
        ));
        assert!(matches!(
            gamma_one_step_mle(&sample(&[1.0, 2.0, -3.0, 4.0]), &OneStepConfig::default()),
            Err(Error::Domain(_))
        ));
        // constant prefix has no moment information to start from
        assert!(matches!(
            gamma_one_step_mle(&sample(&[5.0, 5.0, 1.0, 2.0, 3.0, 4.0]), &OneStepConfig::default()),
            Err(Error::DegenerateFit(_))
        ));
        assert!(OneStepConfig::new(0.5).is_err());
        assert!(OneStepConfig::new(1.0).is_err());
        assert!(OneStepConfig::new(0.75).is_ok());
    }

    #[test]
    fn mixture_pdf_interpolates_components() {
        let gamma = GammaParams::new(4.0, 0.056).unwrap();
        let lognormal = LogNormalParams::new(4.15, 0.52).unwrap();
        let x = 60.0;
        let pure_g = MixtureDgp::new(1.0, gamma, lognormal).unwrap();
        let pure_l = MixtureDgp::new(0.0, gamma, lognormal).unwrap();
        let half = MixtureDgp::new(0.5, gamma, lognormal).unwrap();
        assert_eq!(mixture_pdf(&pure_g, x), gamma_pdf(&gamma, x));
        assert_eq!(mixture_pdf(&pure_l, x), lognormal_pdf(&lognormal, x));
        let want = 0.5 * gamma_pdf(&gamma, x) + 0.5 * lognormal_pdf(&lognormal, x);
        assert!((mixture_pdf(&half, x) - want).abs() < 1e-18);
        assert!(MixtureDgp::new(1.5, gamma, lognormal).is_err());
    }

    #[test]
    fn samplers_track_their_theoretical_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let gamma = GammaParams::new(4.0, 0.056).unwrap();
        let draws = sample_gamma(&gamma, 40_000, &mut rng);
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        // se ~ mean/sqrt(alpha n) ~ 0.18
        assert!((mean - gamma.mean()).abs() < 1.0, "gamma mean {mean}");

        let lognormal = LogNormalParams::new(1.0, 0.5).unwrap();
        let draws = sample_lognormal(&lognormal, 40_000, &mut rng);
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!((mean - lognormal.mean()).abs() < 0.1, "lognormal mean {mean}");
    }

    #[test]
    fn mixture_draws_pick_components_per_observation() {
        // components with disjoint bulks: gamma around 2, log-normal around e^10;
        // a per-observation mixture must produce both groups in proportion
        let gamma = GammaParams::new(4.0, 2.0).unwrap();
        let lognormal = LogNormalParams::new(10.0, 0.1).unwrap();
        let dgp = MixtureDgp::new(0.5, gamma, lognormal).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = sample_mixture(&dgp, 10_000, &mut rng);
        let low = draws.iter().filter(|v| **v < 100.0).count();
        assert!(
            (low as f64 / 10_000.0 - 0.5).abs() < 0.02,
            "low fraction {low}"
        );
    }
}
