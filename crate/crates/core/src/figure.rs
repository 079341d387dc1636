//! Reference designs for the `n = 15` comparison of Gumbel, Pareto and Burr
//! noise, and the errata found while reproducing the published values.

use serde::Serialize;

use crate::error::Result;
use crate::noise::{Noise, NoiseDistribution};
use crate::prizes::PrizeSchedule;
use crate::rank_stats::{compute_beta, r_hat};

pub const FIGURE_N: usize = 15;

/// The six-prize schedule `v'` exactly as published. It is not a valid
/// schedule: the sixth prize exceeds the fifth and the total is 23/21.
pub fn v_prime_as_published() -> Vec<f64> {
    let mut v = vec![0.0; FIGURE_N];
    v[..6].copy_from_slice(&[
        2.0 / 7.0,
        5.0 / 21.0,
        4.0 / 21.0,
        1.0 / 7.0,
        2.0 / 21.0,
        1.0 / 7.0,
    ]);
    v
}

/// `v'` with the sixth prize set to 1/21, the only single-entry change that
/// makes it non-increasing with unit sum.
pub fn v_prime() -> Result<PrizeSchedule> {
    let mut v = v_prime_as_published();
    v[5] = 1.0 / 21.0;
    PrizeSchedule::new(v)
}

/// `v''`: nine prizes of 1/10, then five of 1/50.
pub fn v_double_prime() -> Result<PrizeSchedule> {
    let mut v = vec![0.1; 9];
    v.extend([0.02; 5]);
    v.push(0.0);
    PrizeSchedule::new(v)
}

pub fn figure_families() -> [NoiseDistribution; 3] {
    [
        NoiseDistribution::Gumbel,
        NoiseDistribution::Pareto,
        NoiseDistribution::Burr,
    ]
}

/// A published value that the computation does not reproduce, with the value used instead.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Erratum {
    pub topic: String,
    pub published: String,
    pub computed: String,
    pub note: String,
}

/// Errata relevant to the reference designs. The Gumbel `r_hat` entry is
/// recomputed from the rank coefficients on every call.
pub fn errata() -> Result<Vec<Erratum>> {
    let gumbel = compute_beta(&NoiseDistribution::Gumbel, FIGURE_N)?;
    let rh = r_hat(&gumbel);
    let (b8, b9) = (gumbel.b(8), gumbel.b(9));
    let burr_b7 = NoiseDistribution::Burr
        .closed_form_b(FIGURE_N, 7)?
        .unwrap_or(f64::NAN);
    Ok(vec![
        Erratum {
            topic: "gumbel r_hat (n = 15)".into(),
            published: "8".into(),
            computed: rh.to_string(),
            note: format!(
                "B_9 = {b9:.7} > B_8 = {b8:.7}, so beta_9 > 0 and r_hat = {rh}; the optimal \
                 number of prizes also reaches and holds 9"
            ),
        },
        Erratum {
            topic: "schedule v' sixth prize".into(),
            published: "1/7".into(),
            computed: "1/21".into(),
            note: "as published v' is increasing at rank 6 and sums to 23/21; 1/21 restores \
                   monotonicity and the unit budget"
                .into(),
        },
        Erratum {
            topic: "gumbel cdf convention".into(),
            published: "F(t) = 1 - exp(-exp(-t))".into(),
            computed: "F(t) = exp(-exp(-t))".into(),
            note: "the published form is decreasing in t; the maximum-type law reproduces \
                   B_r = (1 - r/n)(H_n - H_{n-r})"
                .into(),
        },
        Erratum {
            topic: "burr B_7 (n = 15)".into(),
            published: "0.4523157".into(),
            computed: format!("{burr_b7:.10}"),
            note: "the closed form evaluates to the computed value; B_7 / 7 = 0.0646169 agrees \
                   with the plotted M*(0)"
                .into(),
        },
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_schedules() {
        assert!(PrizeSchedule::new(v_prime_as_published()).is_err());
        assert_eq!(v_prime().unwrap().positive_count(), 6);
        let v = v_double_prime().unwrap();
        let d = v.differentials();
        assert!((d.values()[8] - 0.08).abs() < 1e-15);
        assert!((d.values()[13] - 0.02).abs() < 1e-15);
    }

    #[test]
    fn gumbel_r_hat_erratum() {
        let e = errata().unwrap();
        assert_eq!(e[0].computed, "9");
        assert_eq!(e[0].published, "8");
    }
}
