use nalgebra::DVector;

/// Negative log-density of a target distribution, up to an additive constant.
///
/// Implementations return `f64::INFINITY` for states outside the support and
/// may do so for states whose evaluation fails numerically; the sampler
/// treats any non-finite value as "outside every slice". Implementations
/// must not panic on finite input.
pub trait NegLogDensity: Sync {
    fn eval(&self, x: &DVector<f64>) -> f64;
}

/// Plain functions and closures work as targets, which keeps analytic test
/// densities cheap to set up.
impl<F> NegLogDensity for F
where
    F: Fn(&DVector<f64>) -> f64 + Sync,
{
    fn eval(&self, x: &DVector<f64>) -> f64 {
        self(x)
    }
}
