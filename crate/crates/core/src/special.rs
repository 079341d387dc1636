//! Binomial coefficients and harmonic sums.

use statrs::function::gamma::ln_gamma;

/// Largest `n` for which `C(n, k)` is evaluated in exact integer arithmetic.
const EXACT_BINOMIAL_MAX_N: u64 = 40;

/// `C(n, k)` exactly (u128) for `n <= 40`, otherwise `None`.
pub fn binomial_exact(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    if n > EXACT_BINOMIAL_MAX_N {
        return None;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step.
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    Some(acc)
}

/// Natural log of `C(n, k)`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if let Some(c) = binomial_exact(n, k) {
        return (c as f64).ln();
    }
    let (n, k) = (n as f64, k as f64);
    ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)
}

/// `C(n, k)` as a float.
pub fn binomial(n: u64, k: u64) -> f64 {
    match binomial_exact(n, k) {
        Some(c) => c as f64,
        None => ln_binomial(n, k).exp(),
    }
}

/// `H_n - H_m = sum_{j=m+1}^{n} 1/j` for `m <= n`.
pub fn harmonic_difference(n: u64, m: u64) -> f64 {
    debug_assert!(m <= n);
    ((m + 1)..=n).rev().map(|j| 1.0 / j as f64).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_binomials() {
        assert_eq!(binomial_exact(29, 15), Some(77_558_760));
        assert_eq!(binomial_exact(40, 20), Some(137_846_528_820));
        assert_eq!(binomial_exact(5, 7), Some(0));
        assert_eq!(binomial_exact(41, 3), None);
    }

    #[test]
    fn log_gamma_path_matches_exact() {
        let (n, k) = (60u64, 30u64);
        // C(60, 30) = 118264581564861424
        let exact = 118_264_581_564_861_424f64;
        assert!((binomial(n, k) / exact - 1.0).abs() < 1e-12);
        assert!((ln_binomial(40, 20) - (137_846_528_820f64).ln()).abs() < 1e-14);
    }

    #[test]
    fn harmonic() {
        assert!((harmonic_difference(15, 14) - 1.0 / 15.0).abs() < 1e-17);
        assert_eq!(harmonic_difference(4, 4), 0.0);
        assert!((harmonic_difference(3, 0) - 11.0 / 6.0).abs() < 1e-15);
    }
}
