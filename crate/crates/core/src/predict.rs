//! Mixture predictions over posterior hyper-parameter samples and their
//! CRPS scores.
//!
//! Each posterior sample contributes one Gaussian component at a query
//! point; the mixture carries the hyper-parameter uncertainty that a single
//! plug-in (e.g. MAP) prediction discards. The CRPS of a Gaussian mixture
//! has the closed form
//! `Σ_m ω_m A(x-μ_m, s_m²) - ½ Σ_m Σ_n ω_m ω_n A(μ_m-μ_n, s_m²+s_n²)` with
//! `A(μ, σ²) = 2σ f_N(μ/σ) + μ (2 F_N(μ/σ) - 1)` and `A(μ, 0) = |μ|`.

use crate::error::Error;

/// Weighted one-dimensional Gaussian components at a single query point.
#[derive(Debug, Clone)]
pub struct PredictiveMixture {
    weights: Vec<f64>,
    means: Vec<f64>,
    variances: Vec<f64>,
}

impl PredictiveMixture {
    pub fn new(weights: Vec<f64>, means: Vec<f64>, variances: Vec<f64>) -> Result<Self, Error> {
        if weights.is_empty() {
            return Err(Error::BadMixture("no components".into()));
        }
        if weights.len() != means.len() || weights.len() != variances.len() {
            return Err(Error::BadMixture(format!(
                "component counts differ: {} weights, {} means, {} variances",
                weights.len(),
                means.len(),
                variances.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::BadMixture("weights must be finite and >= 0".into()));
        }
        if means.iter().any(|m| !m.is_finite()) {
            return Err(Error::BadMixture("means must be finite".into()));
        }
        if variances.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::BadMixture(
                "variances must be finite and >= 0".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::UnnormalisedWeights(sum));
        }
        Ok(Self {
            weights,
            means,
            variances,
        })
    }

    /// Equal-weight mixture over posterior samples.
    pub fn equal_weight(means: Vec<f64>, variances: Vec<f64>) -> Result<Self, Error> {
        let m = means.len();
        if m == 0 {
            return Err(Error::BadMixture("no components".into()));
        }
        Self::new(vec![1.0 / m as f64; m], means, variances)
    }

    /// A single Gaussian as a degenerate mixture (the plug-in predictor).
    pub fn single(mean: f64, variance: f64) -> Result<Self, Error> {
        Self::new(vec![1.0], vec![mean], vec![variance])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }
}

/// Mean and variance of the mixture:
/// `μ = Σ ω_i μ_i`, `s² = Σ ω_i ((μ_i - μ)² + s_i²)`.
pub fn mixture_moments(mix: &PredictiveMixture) -> (f64, f64) {
    let mu: f64 = mix
        .weights
        .iter()
        .zip(&mix.means)
        .map(|(w, m)| w * m)
        .sum();
    let s2: f64 = mix
        .weights
        .iter()
        .zip(&mix.means)
        .zip(&mix.variances)
        .map(|((w, m), v)| w * ((m - mu) * (m - mu) + v))
        .sum();
    (mu, s2)
}

/// Cross-covariance of the mixture prediction at two query points that
/// share component weights (same posterior samples):
/// `cov = Σ ω_i ((μ_i - μ)(μ'_i - μ') + c_i)` with `c_i` the per-component
/// conditional cross-covariances.
pub fn mixture_cov(
    a: &PredictiveMixture,
    b: &PredictiveMixture,
    cross: &[f64],
) -> Result<f64, Error> {
    if a.len() != b.len() || cross.len() != a.len() {
        return Err(Error::BadMixture(format!(
            "cross-covariance needs matching components: {} vs {} vs {}",
            a.len(),
            b.len(),
            cross.len()
        )));
    }
    if a.weights
        .iter()
        .zip(&b.weights)
        .any(|(wa, wb)| (wa - wb).abs() > 1e-12)
    {
        return Err(Error::BadMixture(
            "the two points must share component weights".into(),
        ));
    }
    let (mu_a, _) = mixture_moments(a);
    let (mu_b, _) = mixture_moments(b);
    Ok(a.weights
        .iter()
        .zip(a.means.iter().zip(&b.means))
        .zip(cross)
        .map(|((w, (ma, mb)), c)| w * ((ma - mu_a) * (mb - mu_b) + c))
        .sum())
}

fn std_normal_pdf(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn std_normal_cdf(t: f64) -> f64 {
    0.5 * libm::erfc(-t / std::f64::consts::SQRT_2)
}

/// The CRPS kernel `A(μ, σ²) = 2σ f_N(μ/σ) + μ (2 F_N(μ/σ) - 1)`;
/// degenerates to `|μ|` at zero variance.
pub fn crps_a(mu: f64, sigma2: f64) -> f64 {
    if sigma2 <= 0.0 {
        return mu.abs();
    }
    let sigma = sigma2.sqrt();
    let t = mu / sigma;
    2.0 * sigma * std_normal_pdf(t) + mu * (2.0 * std_normal_cdf(t) - 1.0)
}

/// Closed-form CRPS of a Gaussian mixture against a scalar observation
/// (lower is better). The double sum exploits the symmetry of `A`.
pub fn crps_mixture(mix: &PredictiveMixture, x: f64) -> f64 {
    let m = mix.len();
    let mut first = 0.0;
    for i in 0..m {
        first += mix.weights[i] * crps_a(x - mix.means[i], mix.variances[i]);
    }
    let mut second = 0.0;
    for i in 0..m {
        second += mix.weights[i]
            * mix.weights[i]
            * crps_a(0.0, mix.variances[i] + mix.variances[i]);
        for j in i + 1..m {
            second += 2.0
                * mix.weights[i]
                * mix.weights[j]
                * crps_a(
                    mix.means[i] - mix.means[j],
                    mix.variances[i] + mix.variances[j],
                );
        }
    }
    first - 0.5 * second
}

/// Index of the minimum-energy sample (the MAP draw); NaN energies are
/// treated as `+∞` and ties break towards the lowest index.
pub fn map_estimate(h_values: &[f64]) -> Result<usize, Error> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &h) in h_values.iter().enumerate() {
        if h.is_nan() {
            continue;
        }
        match best {
            Some((_, hb)) if h >= hb => {}
            _ => best = Some((i, h)),
        }
    }
    best.map(|(i, _)| i).ok_or(Error::EmptySampleSet)
}

/// Root-mean-squared error between predictions and truths.
pub fn rmse(predictions: &[f64], truths: &[f64]) -> Result<f64, Error> {
    if predictions.len() != truths.len() {
        return Err(Error::LengthMismatch {
            predictions: predictions.len(),
            truths: truths.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let ss: f64 = predictions
        .iter()
        .zip(truths)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok((ss / predictions.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn mixture_construction_validates() {
        assert!(PredictiveMixture::new(vec![], vec![], vec![]).is_err());
        assert!(matches!(
            PredictiveMixture::new(vec![0.6, 0.6], vec![0.0, 1.0], vec![1.0, 1.0]),
            Err(Error::UnnormalisedWeights(_))
        ));
        assert!(PredictiveMixture::new(vec![0.5, 0.5], vec![0.0, 1.0], vec![1.0, -0.1]).is_err());
        assert!(PredictiveMixture::new(vec![1.0], vec![f64::NAN], vec![1.0]).is_err());
        assert!(PredictiveMixture::equal_weight(vec![0.0; 4], vec![1.0; 4]).is_ok());
    }

    #[test]
    fn single_component_moments_pass_through() {
        let mix = PredictiveMixture::single(2.0, 3.0).unwrap();
        assert_eq!(mixture_moments(&mix), (2.0, 3.0));
    }

    #[test]
    fn two_component_moments_hand_value() {
        // w = (1/2, 1/2), means (0, 2), variances (1, 1):
        // mu = 1, s2 = 1 + 1 = 2
        let mix =
            PredictiveMixture::equal_weight(vec![0.0, 2.0], vec![1.0, 1.0]).unwrap();
        let (mu, s2) = mixture_moments(&mix);
        assert_relative_eq!(mu, 1.0, epsilon = 1e-15);
        assert_relative_eq!(s2, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn mixture_cov_at_same_point_equals_variance() {
        let mix =
            PredictiveMixture::equal_weight(vec![0.3, -0.4, 1.2], vec![0.5, 0.2, 0.9]).unwrap();
        let (_, s2) = mixture_moments(&mix);
        let cov = mixture_cov(&mix, &mix, mix.variances()).unwrap();
        assert_relative_eq!(cov, s2, epsilon = 1e-14);
    }

    #[test]
    fn mixture_cov_validates_weight_sharing() {
        let a = PredictiveMixture::new(vec![0.5, 0.5], vec![0.0, 1.0], vec![1.0, 1.0]).unwrap();
        let b = PredictiveMixture::new(vec![0.6, 0.4], vec![0.0, 1.0], vec![1.0, 1.0]).unwrap();
        assert!(mixture_cov(&a, &b, &[0.0, 0.0]).is_err());
        assert!(mixture_cov(&a, &a, &[0.0]).is_err());
    }

    #[test]
    fn crps_a_hand_values() {
        // A(0, 1) = 2 f_N(0) = sqrt(2/pi)
        assert_relative_eq!(
            crps_a(0.0, 1.0),
            (2.0 / std::f64::consts::PI).sqrt(),
            epsilon = 1e-14
        );
        assert_relative_eq!(crps_a(1.0, 1.0), 1.166_630_941_175_372_6, epsilon = 1e-12);
        // zero variance degenerates to |mu|
        assert_eq!(crps_a(-2.5, 0.0), 2.5);
        assert_eq!(crps_a(3.0, 0.0), 3.0);
    }

    proptest! {
        #[test]
        fn crps_a_is_symmetric_and_dominates_abs(mu in -5.0..5.0f64, s2 in 0.0..4.0f64) {
            let a = crps_a(mu, s2);
            prop_assert!((a - crps_a(-mu, s2)).abs() < 1e-12);
            prop_assert!(a >= mu.abs() - 1e-12);
        }
    }

    #[test]
    fn crps_standard_gaussian_at_zero() {
        let mix = PredictiveMixture::single(0.0, 1.0).unwrap();
        assert_relative_eq!(crps_mixture(&mix, 0.0), 0.233_694_977_255_109, epsilon = 1e-12);
    }

    #[test]
    fn crps_is_invariant_to_component_permutation_and_duplication() {
        let mix =
            PredictiveMixture::new(vec![0.2, 0.3, 0.5], vec![1.0, -2.0, 0.5], vec![0.5, 2.0, 1.0])
                .unwrap();
        let perm =
            PredictiveMixture::new(vec![0.5, 0.2, 0.3], vec![0.5, 1.0, -2.0], vec![1.0, 0.5, 2.0])
                .unwrap();
        let x = 0.37;
        assert_relative_eq!(crps_mixture(&mix, x), crps_mixture(&perm, x), epsilon = 1e-13);

        // merging duplicated components changes nothing
        let dup = PredictiveMixture::new(
            vec![0.2, 0.3, 0.25, 0.25],
            vec![1.0, -2.0, 0.5, 0.5],
            vec![0.5, 2.0, 1.0, 1.0],
        )
        .unwrap();
        assert_relative_eq!(crps_mixture(&mix, x), crps_mixture(&dup, x), epsilon = 1e-13);
    }

    #[test]
    fn crps_scale_equivariance() {
        // scaling everything by k scales the CRPS by |k|
        let mix =
            PredictiveMixture::new(vec![0.4, 0.6], vec![0.3, -1.1], vec![0.8, 1.7]).unwrap();
        let k = 3.5;
        let scaled = PredictiveMixture::new(
            vec![0.4, 0.6],
            vec![k * 0.3, k * -1.1],
            vec![k * k * 0.8, k * k * 1.7],
        )
        .unwrap();
        let x = 0.9;
        assert_relative_eq!(
            crps_mixture(&scaled, k * x),
            k * crps_mixture(&mix, x),
            max_relative = 1e-12
        );
    }

    #[test]
    fn crps_grows_linearly_in_the_tails() {
        // far from the mixture the CRPS behaves like |x - mu|
        let mix =
            PredictiveMixture::equal_weight(vec![0.0, 1.0], vec![1.0, 0.5]).unwrap();
        let (mu, _) = mixture_moments(&mix);
        for &x in &[500.0, -500.0] {
            let c = crps_mixture(&mix, x);
            assert_relative_eq!(c, (x - mu).abs(), max_relative = 1e-2);
        }
    }

    #[test]
    fn map_estimate_picks_minimum_with_tie_break() {
        assert_eq!(map_estimate(&[3.0, 1.0, 2.0]).unwrap(), 1);
        assert_eq!(map_estimate(&[3.0, 1.0, 1.0]).unwrap(), 1);
        assert_eq!(map_estimate(&[f64::NAN, 5.0]).unwrap(), 1);
        assert!(map_estimate(&[]).is_err());
        assert!(map_estimate(&[f64::NAN]).is_err());
    }

    #[test]
    fn rmse_hand_value() {
        assert_relative_eq!(
            rmse(&[3.0, 4.0], &[0.0, 0.0]).unwrap(),
            12.5f64.sqrt(),
            epsilon = 1e-14
        );
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
    }
}
