//! Space-filling designs and affine rescaling between natural units and the
//! unit hypercube.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::Error;

/// Latin hypercube on `[0,1]^p`: per column, one point jittered uniformly
/// inside each of the `n` strata `[j/n, (j+1)/n)`, with independent column
/// permutations.
pub fn lhs_design<R: Rng>(n: usize, p: usize, rng: &mut R) -> Result<DMatrix<f64>, Error> {
    if n == 0 || p == 0 {
        return Err(Error::BadSpec(format!(
            "design needs n >= 1 and p >= 1, got n = {n}, p = {p}"
        )));
    }
    let mut x = DMatrix::zeros(n, p);
    let mut strata: Vec<usize> = (0..n).collect();
    for c in 0..p {
        strata.shuffle(rng);
        for (r, &j) in strata.iter().enumerate() {
            let u: f64 = rng.random();
            x[(r, c)] = (j as f64 + u) / n as f64;
        }
    }
    Ok(x)
}

fn check_bounds(bounds: &[(f64, f64)], p: usize) -> Result<(), Error> {
    if bounds.len() != p {
        return Err(Error::BoundsDimensionMismatch {
            got: bounds.len(),
            expected: p,
        });
    }
    for (dim, &(lo, hi)) in bounds.iter().enumerate() {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::DegenerateBounds { dim, lo, hi });
        }
    }
    Ok(())
}

/// Maps natural-unit inputs onto `[0,1]^p`, dimension by dimension.
pub fn rescale_to_unit(x: &DMatrix<f64>, bounds: &[(f64, f64)]) -> Result<DMatrix<f64>, Error> {
    check_bounds(bounds, x.ncols())?;
    let mut u = x.clone();
    for c in 0..x.ncols() {
        let (lo, hi) = bounds[c];
        for r in 0..x.nrows() {
            u[(r, c)] = (x[(r, c)] - lo) / (hi - lo);
        }
    }
    Ok(u)
}

/// Inverse of [`rescale_to_unit`]: back to natural units for reporting.
pub fn rescale_from_unit(u: &DMatrix<f64>, bounds: &[(f64, f64)]) -> Result<DMatrix<f64>, Error> {
    check_bounds(bounds, u.ncols())?;
    let mut x = u.clone();
    for c in 0..u.ncols() {
        let (lo, hi) = bounds[c];
        for r in 0..u.nrows() {
            x[(r, c)] = lo + u[(r, c)] * (hi - lo);
        }
    }
    Ok(x)
}
