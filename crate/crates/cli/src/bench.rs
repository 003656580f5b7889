//! Analytic benchmark simulators.

use crate::error::Error;

/// Franke's two-peak/one-dip surface on `[0,1]²`. Note the second term's
/// exponent is linear in `(9x₂+1)/10` — some references square it; this
/// implementation keeps the linear form deliberately.
pub fn franke(x1: f64, x2: f64) -> f64 {
    let a = 9.0 * x1;
    let b = 9.0 * x2;
    0.75 * (-(a - 2.0).powi(2) / 4.0 - (b - 2.0).powi(2) / 4.0).exp()
        + 0.75 * (-(a + 1.0).powi(2) / 49.0 - (b + 1.0) / 10.0).exp()
        + 0.5 * (-(a - 7.0).powi(2) / 4.0 - (b - 3.0).powi(2) / 4.0).exp()
        - 0.2 * (-(a - 4.0).powi(2) - (b - 7.0).powi(2)).exp()
}

/// Input ranges of the wing-weight model, in natural units. The sweep angle
/// is in degrees.
pub const WING_BOUNDS: [(f64, f64); 10] = [
    (150.0, 200.0),  // wing area
    (220.0, 300.0),  // weight of fuel in the wing
    (6.0, 10.0),     // aspect ratio
    (-10.0, 10.0),   // quarter-chord sweep (degrees)
    (16.0, 45.0),    // dynamic pressure at cruise
    (0.5, 1.0),      // taper ratio
    (0.08, 0.18),    // aerofoil thickness-to-chord ratio
    (2.5, 6.0),      // ultimate load factor
    (1700.0, 2500.0),// flight design gross weight
    (0.025, 0.08),   // paint weight
];

const WING_NAMES: [&str; 10] = [
    "S_w", "W_fw", "A", "Lambda", "q", "lambda", "t_c", "N_z", "W_dg", "W_p",
];

/// Weight of a light-aircraft wing, natural units per [`WING_BOUNDS`]
/// (the sweep angle in degrees, converted to radians for the cosines).
/// Inputs outside their ranges are a domain error.
pub fn wing_weight(x: &[f64]) -> Result<f64, Error> {
    if x.len() != 10 {
        return Err(Error::WrongArity {
            got: x.len(),
            expected: 10,
        });
    }
    for (i, (&v, &(lo, hi))) in x.iter().zip(WING_BOUNDS.iter()).enumerate() {
        if !(v >= lo && v <= hi) {
            return Err(Error::OutOfRange {
                name: WING_NAMES[i],
                value: v,
                lo,
                hi,
            });
        }
    }
    let [sw, wfw, a, sweep_deg, q, taper, tc, nz, wdg, wp] = x else {
        unreachable!()
    };
    let cos_sweep = sweep_deg.to_radians().cos();
    Ok(0.036
        * sw.powf(0.758)
        * wfw.powf(0.0035)
        * (a / (cos_sweep * cos_sweep)).powf(0.6)
        * q.powf(0.006)
        * taper.powf(0.04)
        * (100.0 * tc / cos_sweep).powf(-0.3)
        * (nz * wdg).powf(0.49)
        + sw * wp)
}
