//! Integer combinatorics and the unit-ball volume.

use std::f64::consts::PI;

/// Binomial coefficient `C(n, k)` with the convention that it vanishes whenever
/// `k < 0`, `n < 0` or `k > n`. Exact for `n <= 60`.
pub fn binomial(n: i64, k: i64) -> u64 {
    if n < 0 || k < 0 || k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is always divisible by (i + 1) at this point
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    u64::try_from(acc).expect("binomial coefficient overflows u64")
}

/// `C(n, k)` as a float, same conventions as [`binomial`].
#[inline]
pub fn binomial_f(n: i64, k: i64) -> f64 {
    binomial(n, k) as f64
}

/// Gamma function at a positive half-integer `half_twice / 2`, by upward
/// recurrence from `Gamma(1) = 1` or `Gamma(1/2) = sqrt(pi)`.
pub fn gamma_half_integer(half_twice: u32) -> f64 {
    assert!(half_twice > 0, "gamma argument must be positive");
    let (mut x, mut g) = if half_twice % 2 == 0 { (1.0, 1.0) } else { (0.5, PI.sqrt()) };
    let target = half_twice as f64 / 2.0;
    while x < target {
        g *= x;
        x += 1.0;
    }
    g
}

/// Volume of the unit ball in `R^n`, `pi^(n/2) / Gamma(n/2 + 1)`.
pub fn unit_ball_volume(n: usize) -> f64 {
    PI.powf(n as f64 / 2.0) / gamma_half_integer(n as u32 + 2)
}

/// Sign of a real number with a zero band `|x| <= tol`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn of(x: f64, tol: f64) -> Sign {
        if x > tol {
            Sign::Positive
        } else if x < -tol {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Negative => -1,
            Sign::Zero => 0,
            Sign::Positive => 1,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Negative => Sign::Positive,
            Sign::Zero => Sign::Zero,
            Sign::Positive => Sign::Negative,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_conventions() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(3, -1), 0);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(0, 0), 1);
        assert_eq!(binomial(-1, 0), 0);
        assert_eq!(binomial(60, 30), 118_264_581_564_861_424);
    }

    #[test]
    fn pascal_rule_up_to_sixty() {
        for n in 1..=60 {
            for k in 0..=n {
                assert_eq!(binomial(n, k), binomial(n - 1, k) + binomial(n - 1, k - 1), "n={n} k={k}");
            }
        }
    }

    #[test]
    fn gamma_half_integers() {
        assert!((gamma_half_integer(1) - PI.sqrt()).abs() < 1e-15);
        assert_eq!(gamma_half_integer(2), 1.0);
        assert_eq!(gamma_half_integer(10), 24.0);
        // Gamma(7/2) = 15 sqrt(pi) / 8
        let g = gamma_half_integer(7);
        assert!((g - 15.0 * PI.sqrt() / 8.0).abs() < 1e-12 * g);
    }

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(1) - 2.0).abs() < 1e-14);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-14);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-13);
    }
}
