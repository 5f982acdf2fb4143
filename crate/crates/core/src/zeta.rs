//! Truncated products `prod_{j <= J} (1 - alpha^j)^{|P_j|}` for the inverse zeta
//! function of the full shift, with a certified bound on the neglected factor.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::geometry::Dim;
use crate::orbits::{count_to_f64, orbit_counts_upto, orbit_size_budget, sublattice_count};
use crate::patterns::Alphabet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZetaTruncation {
    pub alpha: f64,
    pub j_max: u64,
    /// The truncated product, or `0` when `alpha >= 1/|A|`.
    pub value: f64,
    /// Natural log of `value` (`-inf` serialized as null).
    pub log_value: f64,
    /// Upper bound on `-log` of the neglected factor `prod_{j > J}`; infinite
    /// when divergent.
    pub tail_bound: f64,
    /// Constant `C1 = 1/(1 - alpha^(J+1))` with `-log(1 - x) <= C1 x` for
    /// `0 <= x <= alpha^(J+1)`.
    pub tail_constant: f64,
    /// `alpha >= 1/|A|`: the full product diverges to zero.
    pub divergent: bool,
    /// The finite product up to `J`, reported even when divergent.
    pub truncated_value: f64,
}

/// Compensated sum.
#[derive(Default, Clone, Copy)]
struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }
}

/// `sum_{j <= J} |P_j| log(1 - alpha^j)`.
fn truncated_log_product(alphabet: Alphabet, dim: Dim, alpha: f64, j_max: u64) -> Result<f64> {
    if j_max == 0 {
        return Ok(0.0);
    }
    let counts = orbit_counts_upto(alphabet, dim, j_max)?;
    let mut acc = Kahan::default();
    for c in &counts {
        let x = alpha.powi(c.j as i32);
        let term = if x >= 1.0 { f64::NEG_INFINITY } else { (-x).ln_1p() };
        acc.add(count_to_f64(&c.count) * term);
    }
    Ok(acc.sum)
}

/// Bound on `sum_{j > J} |P_j| (-log(1 - alpha^j))`.
///
/// Uses `|P_j| <= s_d(j) |A|^j / j`, where `s_d(j)` counts index-`j`
/// sublattices (every configuration of an orbit of size `j` is fixed by one of
/// them), and `-log(1 - x) <= C1 x`. The series is summed explicitly until the
/// remainder is dominated by a geometric series using `s_d(j) <= j^(2d)`.
fn tail_bound(alphabet: Alphabet, dim: Dim, alpha: f64, j_max: u64, c1: f64) -> f64 {
    let q = alpha * alphabet.size() as f64;
    if q == 0.0 {
        return 0.0;
    }
    let d2 = 2 * dim.get() as i32;
    let mut sum = Kahan::default();
    let mut j = j_max + 1;
    let ln_q = q.ln();
    loop {
        let s = sublattice_count(dim, j) as f64;
        sum.add((s.ln() + j as f64 * ln_q - (j as f64).ln()).exp());
        let jf = j as f64;
        let ratio = ((jf + 2.0) / (jf + 1.0)).powi(d2) * q;
        if ratio < 1.0 {
            // remainder sum_{i > j} i^(2d) q^i <= (j+1)^(2d) q^(j+1) / (1 - ratio)
            let rem = ((jf + 1.0).ln() * d2 as f64 + (jf + 1.0) * ln_q).exp() / (1.0 - ratio);
            if rem <= 1e-6 * sum.sum || rem < 1e-300 || j > j_max + 200_000 {
                return c1 * (sum.sum + rem) * (1.0 + 1e-12);
            }
        }
        j += 1;
    }
}

/// Truncated inverse zeta product with a certified tail bound.
pub fn zeta_inverse(alphabet: Alphabet, dim: Dim, alpha: f64, j_max: Option<u64>) -> Result<ZetaTruncation> {
    if !(0.0..=1.0).contains(&alpha) || alpha.is_nan() {
        return domain(format!("alpha {alpha} outside [0, 1]"));
    }
    let j_max = j_max.unwrap_or(orbit_size_budget(dim) as u64);
    let log_trunc = truncated_log_product(alphabet, dim, alpha, j_max)?;
    let truncated_value = log_trunc.exp();
    let divergent = alpha * alphabet.size() as f64 >= 1.0;
    if divergent {
        return Ok(ZetaTruncation {
            alpha,
            j_max,
            value: 0.0,
            log_value: f64::NEG_INFINITY,
            tail_bound: f64::INFINITY,
            tail_constant: f64::INFINITY,
            divergent,
            truncated_value,
        });
    }
    let c1 = 1.0 / (1.0 - alpha.powi(j_max as i32 + 1));
    let tail = tail_bound(alphabet, dim, alpha, j_max, c1);
    Ok(ZetaTruncation {
        alpha,
        j_max,
        value: truncated_value,
        log_value: log_trunc,
        tail_bound: tail,
        tail_constant: c1,
        divergent,
        truncated_value,
    })
}

/// `prod_{|gamma| <= n/2} (1 - alpha^|gamma|)`, an upper bound on the probability
/// that the random shift has no finite orbit.
pub fn independence_upper_bound(alphabet: Alphabet, dim: Dim, alpha: f64, n: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return domain(format!("alpha {alpha} outside [0, 1]"));
    }
    Ok(truncated_log_product(alphabet, dim, alpha, (n / 2) as u64)?.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_alpha() {
        let z = zeta_inverse(Alphabet::BINARY, Dim::TWO, 0.0, None).unwrap();
        assert_eq!(z.value, 1.0);
        assert_eq!(z.tail_bound, 0.0);
        assert_eq!(independence_upper_bound(Alphabet::BINARY, Dim::ONE, 0.0, 10).unwrap(), 1.0);
    }

    #[test]
    fn quarter_three_factors() {
        let z = zeta_inverse(Alphabet::BINARY, Dim::ONE, 0.25, Some(3)).unwrap();
        let direct = 0.75f64.powi(2) * 0.9375 * 0.984375f64.powi(2);
        assert!((z.value - direct).abs() < 1e-14);
        assert!((z.value - 0.51099).abs() < 1e-5);
        let ub = independence_upper_bound(Alphabet::BINARY, Dim::ONE, 0.25, 6).unwrap();
        assert_eq!(ub, z.value);
    }

    #[test]
    fn one_dim_limit_is_one_minus_alpha_a() {
        // for d = 1 the full product equals 1 - |A| alpha
        for (a, alpha) in [(2u32, 0.1), (2, 0.25), (3, 0.2), (2, 0.4)] {
            let z = zeta_inverse(Alphabet::new(a).unwrap(), Dim::ONE, alpha, Some(30)).unwrap();
            let exact = (1.0 - a as f64 * alpha).ln();
            let neglected = z.log_value - exact;
            assert!(neglected >= -1e-12, "a={a} alpha={alpha}");
            assert!(neglected <= z.tail_bound, "a={a} alpha={alpha}: {neglected} > {}", z.tail_bound);
        }
    }

    #[test]
    fn divergence_sentinel() {
        for alpha in [0.5, 0.7, 1.0] {
            let z = zeta_inverse(Alphabet::BINARY, Dim::ONE, alpha, Some(10)).unwrap();
            assert!(z.divergent);
            assert_eq!(z.value, 0.0);
        }
        assert!(zeta_inverse(Alphabet::BINARY, Dim::ONE, 1.5, None).is_err());
    }

    #[test]
    fn truncations_are_consistent() {
        for d in 1..=3 {
            let dim = Dim::new(d).unwrap();
            let budget = orbit_size_budget(dim) as u64;
            for alpha in [0.05, 0.15, 0.3] {
                let lo = zeta_inverse(Alphabet::BINARY, dim, alpha, Some(budget / 2)).unwrap();
                for jm in budget / 2 + 1..=budget {
                    let hi = zeta_inverse(Alphabet::BINARY, dim, alpha, Some(jm)).unwrap();
                    assert!((lo.log_value - hi.log_value).abs() <= lo.tail_bound + 1e-14);
                    assert!(hi.value <= lo.value);
                }
            }
        }
    }

    #[test]
    fn upper_bound_monotone_in_n() {
        let mut prev = 1.0;
        for n in 1..=20 {
            let b = independence_upper_bound(Alphabet::BINARY, Dim::ONE, 0.3, n).unwrap();
            assert!(b <= prev);
            prev = b;
        }
    }
}
