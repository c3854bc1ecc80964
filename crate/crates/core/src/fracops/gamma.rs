use std::f64::consts::PI;

use crate::error::{Error, Result};

// Lanczos approximation, g = 7, n = 9 (coefficients as published with the
// GNU Scientific Library).
const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// The gamma function Γ(x).
///
/// Uses the reflection formula below 1/2. Non-positive integers are poles.
pub fn gamma(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::InvalidArgument("gamma of NaN".into()));
    }
    if x <= 0.0 && x == x.floor() {
        return Err(Error::GammaPole(x));
    }
    if x == x.floor() && x <= 21.0 {
        // exact factorials while they are representable
        let mut acc = 1.0;
        let mut k = 2.0;
        while k < x {
            acc *= k;
            k += 1.0;
        }
        return Ok(acc);
    }
    Ok(gamma_unchecked(x))
}

fn gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma_unchecked(1.0 - x));
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}

/// 1/Γ(x), which is entire: returns 0 at the poles of Γ.
pub fn recip_gamma(x: f64) -> f64 {
    match gamma(x) {
        Ok(g) => 1.0 / g,
        Err(_) => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integers_are_factorials() {
        assert_eq!(gamma(1.0).unwrap(), 1.0);
        assert_eq!(gamma(2.0).unwrap(), 1.0);
        assert_eq!(gamma(5.0).unwrap(), 24.0);
        assert_eq!(gamma(11.0).unwrap(), 3_628_800.0);
    }

    #[test]
    fn poles_are_errors() {
        for x in [0.0, -1.0, -2.0, -7.0] {
            assert_eq!(gamma(x), Err(Error::GammaPole(x)));
        }
        assert_eq!(recip_gamma(-3.0), 0.0);
    }

    #[test]
    fn half_integer_and_reflection() {
        let sqrt_pi = PI.sqrt();
        assert!((gamma(0.5).unwrap() - sqrt_pi).abs() < 1e-14);
        assert!((gamma(1.5).unwrap() - sqrt_pi / 2.0).abs() < 1e-14);
        assert!((gamma(-0.5).unwrap() + 2.0 * sqrt_pi).abs() < 1e-13);
    }

    #[test]
    fn recurrence_holds() {
        for i in 1..200 {
            let x = 0.05 * i as f64;
            let lhs = gamma(x + 1.0).unwrap();
            let rhs = x * gamma(x).unwrap();
            assert!((lhs - rhs).abs() <= 2e-14 * lhs.abs(), "x={x}");
        }
    }
}
