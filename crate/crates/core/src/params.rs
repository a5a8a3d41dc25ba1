//! Log-scale parameters and the exact sizes derived from them.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ratio::{self, Exponent};

/// Largest number of cells a table may hold (`2^30`).
pub const MAX_CELL_BITS: u32 = 30;

/// Table dimensions in log scale: `N = 2^n` rows, `N1 = 2^n1` columns,
/// `M = 2^m` colors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shape {
    pub n: u32,
    pub n1: u32,
    pub m: u32,
}

impl Shape {
    pub fn new(n: u32, n1: u32, m: u32) -> Result<Self> {
        let s = Shape { n, n1, m };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParams("n must be positive".into()));
        }
        if self.n1 == 0 {
            return Err(Error::InvalidParams("n1 must be positive".into()));
        }
        if self.m == 0 {
            return Err(Error::InvalidParams("m must be positive".into()));
        }
        if self.n + self.n1 > MAX_CELL_BITS {
            return Err(Error::InvalidParams(format!(
                "n + n1 = {} exceeds {MAX_CELL_BITS}",
                self.n + self.n1
            )));
        }
        if self.m > 32 {
            return Err(Error::InvalidParams("m must be at most 32".into()));
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        1 << self.n
    }

    pub fn cols(&self) -> usize {
        1 << self.n1
    }

    pub fn colors(&self) -> u64 {
        1u64 << self.m
    }

    pub fn cells(&self) -> usize {
        self.rows() * self.cols()
    }
}

/// Unvalidated parameter bundle, as read from a command line or config.
/// All of `k`, `d`, `delta` are base-2 logarithms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamSpec {
    pub n: u32,
    pub n1: u32,
    pub m: u32,
    pub k: Exponent,
    pub d: Exponent,
    pub delta: Exponent,
}

impl ParamSpec {
    pub fn new(n: u32, n1: u32, m: u32, k: i64, d: i64, delta: i64) -> Self {
        ParamSpec {
            n,
            n1,
            m,
            k: Exponent::from_integer(k),
            d: Exponent::from_integer(d),
            delta: Exponent::from_integer(delta),
        }
    }

    /// Checks every invariant and derives the exact sizes.
    ///
    /// `K = ⌈2^k⌉` exactly. `D` and `Δ` are exact for integer exponents; a
    /// fractional exponent is rounded to a dyadic rational, `D` upward and
    /// `Δ` downward, so that a table balanced under the rounded values is
    /// balanced under the true ones.
    pub fn validate(&self) -> Result<Params> {
        let shape = Shape::new(self.n, self.n1, self.m)?;
        if self.m > self.n {
            return Err(Error::InvalidParams(format!("m > n ({} > {})", self.m, self.n)));
        }
        if self.k.is_negative() {
            return Err(Error::InvalidParams("k must be nonnegative".into()));
        }
        if self.k > Exponent::from_integer(self.n as i64) {
            return Err(Error::InvalidParams(format!("k > n ({} > {})", self.k, self.n)));
        }
        if !self.d.is_positive() {
            return Err(Error::InvalidParams("d must be positive".into()));
        }
        if self.delta.is_negative() {
            return Err(Error::InvalidParams("delta must be nonnegative".into()));
        }
        if self.d > Exponent::from_integer(64) || self.delta > Exponent::from_integer(64) {
            return Err(Error::InvalidParams("d and delta must be at most 64".into()));
        }
        let k_rows = ratio::ceil_pow2(&self.k)?;
        let d = ratio::pow2_rational(&self.d, true);
        let delta = ratio::pow2_rational(&self.delta, false);
        let mut p = Params::from_factors(shape, k_rows, d, delta)?;
        p.exponents = Some((self.k, self.d, self.delta));
        Ok(p)
    }
}

/// Validated one-source parameters with exact sizes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Params {
    pub shape: Shape,
    k_rows: u64,
    d: BigRational,
    delta: BigRational,
    exponents: Option<(Exponent, Exponent, Exponent)>,
}

impl Params {
    /// Builds parameters directly from `K`, `D` and `Δ`.
    pub fn from_factors(shape: Shape, k_rows: u64, d: BigRational, delta: BigRational) -> Result<Self> {
        shape.validate()?;
        if shape.m > shape.n {
            return Err(Error::InvalidParams(format!("m > n ({} > {})", shape.m, shape.n)));
        }
        if k_rows == 0 {
            return Err(Error::InvalidParams("K must be at least 1".into()));
        }
        if k_rows > shape.rows() as u64 {
            return Err(Error::InvalidParams(format!("K > N ({k_rows} > {})", shape.rows())));
        }
        if d <= BigRational::one() {
            return Err(Error::InvalidParams("D must exceed 1".into()));
        }
        if delta < BigRational::one() {
            return Err(Error::InvalidParams("Δ must be at least 1".into()));
        }
        let p = Params { shape, k_rows, d, delta, exponents: None };
        let a = p.min_heavy_size();
        if a < 1 || a > shape.colors() {
            return Err(Error::InvalidParams(format!("⌈M/D⌉ = {a} outside [1, M]")));
        }
        Ok(p)
    }

    /// Convenience constructor for small integer sizes, `D` and `Δ` given
    /// as `num/den` pairs.
    pub fn with_sizes(
        n: u32,
        n1: u32,
        m: u32,
        k_rows: u64,
        d: (u64, u64),
        delta: (u64, u64),
    ) -> Result<Self> {
        Self::from_factors(
            Shape::new(n, n1, m)?,
            k_rows,
            ratio::ratio_u64(d.0, d.1),
            ratio::ratio_u64(delta.0, delta.1),
        )
    }

    pub fn k_rows(&self) -> u64 {
        self.k_rows
    }

    pub fn d(&self) -> &BigRational {
        &self.d
    }

    pub fn delta(&self) -> &BigRational {
        &self.delta
    }

    /// The log-scale exponents, when built from a [`ParamSpec`].
    pub fn exponents(&self) -> Option<(Exponent, Exponent, Exponent)> {
        self.exponents
    }

    /// `⌈M/D⌉`, the smallest color-set size the balance condition covers.
    pub fn min_heavy_size(&self) -> u64 {
        let m = BigRational::from_integer(BigInt::from(self.shape.colors()));
        ratio::ceil_u64(&(m / &self.d)).max(1)
    }

    /// `Δ·|A|/M·|B|·N1`, the most A-cells a `B x [N1]` rectangle may hold.
    pub fn cell_bound(&self, colors: u64, rows: u64) -> BigRational {
        &self.delta
            * ratio::ratio_u64(colors, self.shape.colors())
            * BigRational::from_integer(BigInt::from(rows * self.shape.cols() as u64))
    }

    pub fn summary(&self) -> ParamSummary {
        ParamSummary {
            n: self.shape.n,
            n1: self.shape.n1,
            m: self.shape.m,
            k: self.exponents.map(|e| e.0.to_string()),
            d: self.exponents.map(|e| e.1.to_string()),
            delta: self.exponents.map(|e| e.2.to_string()),
            k_rows: self.k_rows,
            d_factor: ratio::format_rational(&self.d),
            delta_factor: ratio::format_rational(&self.delta),
            min_heavy_size: self.min_heavy_size(),
        }
    }
}

/// JSON view of [`Params`].
#[derive(Debug, Clone, Serialize)]
pub struct ParamSummary {
    pub n: u32,
    pub n1: u32,
    pub m: u32,
    pub k: Option<String>,
    pub d: Option<String>,
    pub delta: Option<String>,
    pub k_rows: u64,
    pub d_factor: String,
    pub delta_factor: String,
    pub min_heavy_size: u64,
}

/// Rectangle thresholds for a two-source table: `K_x` rows, `K_y` columns,
/// color sets of size at least `⌈M/D⌉`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Thresholds2 {
    pub kx_rows: u64,
    pub ky_cols: u64,
    pub d: BigRational,
}

impl Thresholds2 {
    pub fn from_exponents(n: u32, kx: Exponent, ky: Exponent, d: Exponent) -> Result<Self> {
        if kx.is_negative() || ky.is_negative() {
            return Err(Error::InvalidParams("kx and ky must be nonnegative".into()));
        }
        if !d.is_positive() {
            return Err(Error::InvalidParams("d must be positive".into()));
        }
        let t = Thresholds2 {
            kx_rows: ratio::ceil_pow2(&kx)?,
            ky_cols: ratio::ceil_pow2(&ky)?,
            d: ratio::pow2_rational(&d, true),
        };
        t.check(n)?;
        Ok(t)
    }

    pub fn check(&self, n: u32) -> Result<()> {
        let rows = 1u64 << n;
        if self.kx_rows == 0 || self.ky_cols == 0 {
            return Err(Error::InvalidParams("Kx and Ky must be at least 1".into()));
        }
        if self.kx_rows > rows || self.ky_cols > rows {
            return Err(Error::InvalidParams(format!(
                "Kx = {}, Ky = {} must not exceed N = {rows}",
                self.kx_rows, self.ky_cols
            )));
        }
        if self.d < BigRational::one() {
            return Err(Error::InvalidParams("D must be at least 1".into()));
        }
        Ok(())
    }

    pub fn min_heavy_size(&self, m: u32) -> u64 {
        let colors = BigRational::from_integer(BigInt::from(1u64 << m));
        ratio::ceil_u64(&(colors / &self.d)).clamp(1, 1u64 << m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_slack_params() {
        let p = ParamSpec::new(4, 2, 2, 1, 1, 1).validate().unwrap();
        assert_eq!(p.k_rows(), 2);
        assert_eq!(p.min_heavy_size(), 2);
        assert_eq!(*p.delta(), ratio::ratio_u64(2, 1));
    }

    #[test]
    fn rejects_m_above_n() {
        let err = ParamSpec::new(2, 1, 3, 0, 1, 0).validate().unwrap_err();
        assert!(matches!(err, Error::InvalidParams(ref s) if s.contains("m > n")), "{err}");
    }

    #[test]
    fn rejects_k_above_n() {
        let err = ParamSpec::new(4, 2, 2, 5, 1, 0).validate().unwrap_err();
        assert!(matches!(err, Error::InvalidParams(ref s) if s.contains("k > n")), "{err}");
    }

    #[test]
    fn fractional_exponents_round_conservatively() {
        let spec = ParamSpec {
            n: 6,
            n1: 3,
            m: 3,
            k: Exponent::new(5, 2),
            d: Exponent::new(3, 2),
            delta: Exponent::new(1, 3),
        };
        let p = spec.validate().unwrap();
        // ⌈2^2.5⌉ = ⌈5.657⌉
        assert_eq!(p.k_rows(), 6);
        assert!(ratio::to_f64(p.d()) >= 2f64.powf(1.5));
        assert!(ratio::to_f64(p.delta()) <= 2f64.powf(1.0 / 3.0));
        // ⌈8 / 2.83⌉
        assert_eq!(p.min_heavy_size(), 3);
    }

    #[test]
    fn heavy_size_clamps_to_one_when_d_exceeds_m() {
        let p = Params::with_sizes(2, 1, 1, 1, (4, 1), (1, 1)).unwrap();
        assert_eq!(p.min_heavy_size(), 1);
    }
}
