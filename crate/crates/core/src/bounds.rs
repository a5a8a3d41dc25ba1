//! Limits on extraction with bounded advice, and the advice length that
//! suffices.

use num_rational::BigRational;
use num_traits::Signed;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ratio;

/// Default slack standing in for doubly-logarithmic terms.
pub const DEFAULT_SLACK: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HardStringParams {
    /// `H = 2^{h+1} - 1`.
    pub big_h: u64,
    /// `n - H·log2(2^m + 1)`.
    pub complexity_floor: f64,
    pub degenerate: bool,
}

/// Complexity guaranteed for the hard string that defeats `h` bits of advice.
pub fn hard_string_params(n: u32, h: u32, m: u32) -> Result<HardStringParams> {
    if n == 0 || m == 0 {
        return Err(Error::PreconditionViolated("n and m must be at least 1".into()));
    }
    if h >= 63 {
        return Err(Error::PreconditionViolated("h must be below 63".into()));
    }
    let big_h = (1u64 << (h + 1)) - 1;
    // log2(2^m + 1) = m + log2(1 + 2^-m)
    let per_block = m as f64 + (-(m as f64)).exp2().ln_1p() / std::f64::consts::LN_2;
    let complexity_floor = n as f64 - big_h as f64 * per_block;
    Ok(HardStringParams { big_h, complexity_floor, degenerate: complexity_floor <= 0.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonBound {
    /// `max(0, leading - slack_term)`.
    pub epsilon_min: f64,
    /// `(1 - sigma)/H`.
    pub leading: f64,
    /// `(h + log2 n + 2 log2 m + slack)/m`.
    pub slack_term: f64,
    /// Set when `(log2 n + h)/m > 1/10`, i.e. the output is too short for
    /// the asymptotic side condition to be plausible.
    pub advisory: Option<String>,
}

/// Least rate loss `epsilon` forced on any extractor using `h` bits of
/// advice for sources of rate `sigma`.
pub fn epsilon_lower_bound(n: u64, m: u64, h: u32, sigma: f64, slack_c: f64) -> Result<EpsilonBound> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::PreconditionViolated(format!("sigma = {sigma} outside (0, 1)")));
    }
    if h == 0 {
        return Err(Error::PreconditionViolated("h must be positive".into()));
    }
    if h >= 63 {
        return Err(Error::PreconditionViolated("h must be below 63".into()));
    }
    if !(m > 0 && m < n) {
        return Err(Error::PreconditionViolated(format!("need 0 < m < n, got m = {m}, n = {n}")));
    }
    let big_h = ((1u64 << (h + 1)) - 1) as f64;
    let (nf, mf) = (n as f64, m as f64);
    let leading = (1.0 - sigma) / big_h;
    let slack_term = (h as f64 + nf.log2() + 2.0 * mf.log2() + slack_c) / mf;
    let side = (nf.log2() + h as f64) / mf;
    let advisory = (side > 0.1).then(|| {
        format!("(log2 n + h)/m = {side:.4} > 0.1: m = ω(log n + h) is doubtful here")
    });
    Ok(EpsilonBound { epsilon_min: (leading - slack_term).max(0.0), leading, slack_term, advisory })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdviceCheck {
    pub pass: bool,
    pub threshold: f64,
    pub margin: f64,
}

/// Finite stand-in for `h = ω(log(n/m))`: `h >= r·log2(max(n/m, 2))`.
pub fn advice_length_check(n: u64, m: u64, h: u32, ratio_r: &BigRational) -> Result<AdviceCheck> {
    if m == 0 || m > n {
        return Err(Error::PreconditionViolated(format!("need 0 < m <= n, got m = {m}, n = {n}")));
    }
    if !ratio_r.is_positive() {
        return Err(Error::PreconditionViolated("ratio must be positive".into()));
    }
    let log_ratio = ((n as f64) / (m as f64)).max(2.0).log2();
    let threshold = ratio::to_f64(ratio_r) * log_ratio;
    let margin = h as f64 - threshold;
    Ok(AdviceCheck { pass: h > 0 && margin >= 0.0, threshold, margin })
}

/// Both sides at one parameter point: what `h` bits of advice cannot
/// achieve, and whether `h` is long enough for the balanced-table extractor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContrastReport {
    pub impossibility: EpsilonBound,
    pub sufficiency: AdviceCheck,
}

pub fn contrast(n: u64, m: u64, h: u32, sigma: f64, slack_c: f64, ratio_r: &BigRational) -> Result<ContrastReport> {
    Ok(ContrastReport {
        impossibility: epsilon_lower_bound(n, m, h, sigma, slack_c)?,
        sufficiency: advice_length_check(n, m, h, ratio_r)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio::ratio_u64;

    #[test]
    fn hard_string_examples() {
        assert_eq!(hard_string_params(10, 0, 1).unwrap().big_h, 1);
        let p = hard_string_params(100, 1, 3).unwrap();
        assert_eq!(p.big_h, 3);
        assert!((p.complexity_floor - (100.0 - 3.0 * 9f64.log2())).abs() < 1e-12);
        assert!((p.complexity_floor - 90.49).abs() < 0.01);
        assert!(!p.degenerate);
        assert!(hard_string_params(100, 3, 7).unwrap().degenerate);
    }

    #[test]
    fn epsilon_reference_point() {
        let e = epsilon_lower_bound(1 << 20, 1 << 16, 1, 0.5, 0.0).unwrap();
        assert!((e.leading - 1.0 / 6.0).abs() < 1e-15);
        assert!((e.epsilon_min - (1.0 / 6.0 - 53.0 / 65536.0)).abs() < 1e-12);
        assert!(e.advisory.is_none());
    }

    #[test]
    fn epsilon_clamps_and_flags() {
        let e = epsilon_lower_bound(1 << 20, 1 << 16, 1, 0.999_999, 0.0).unwrap();
        assert_eq!(e.epsilon_min, 0.0);
        let e = epsilon_lower_bound(1 << 20, 500, 40, 0.5, 8.0).unwrap();
        assert_eq!(e.epsilon_min, 0.0);
        assert!(e.advisory.is_some());
        assert!(epsilon_lower_bound(100, 10, 1, 1.0, 0.0).is_err());
        assert!(epsilon_lower_bound(100, 10, 0, 0.5, 0.0).is_err());
        assert!(epsilon_lower_bound(100, 100, 1, 0.5, 0.0).is_err());
    }

    #[test]
    fn advice_threshold() {
        let c = advice_length_check(1024, 64, 40, &ratio_u64(4, 1)).unwrap();
        assert_eq!(c.threshold, 16.0);
        assert_eq!(c.margin, 24.0);
        assert!(c.pass);
        let c = advice_length_check(64, 64, 3, &ratio_u64(3, 1)).unwrap();
        assert!(c.pass && c.margin == 0.0);
        assert!(!advice_length_check(64, 64, 0, &ratio_u64(1, 8)).unwrap().pass);
    }
}
