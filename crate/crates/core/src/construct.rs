//! Building balanced tables: union-bound feasibility, random sampling,
//! first-in-order search and balanced-fraction estimation.

use std::str::FromStr;

use dashu_float::DBig;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};
use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use crate::balance::{check_balance_exact, WorkBudget};
use crate::error::{Error, Result};
use crate::params::{Params, Thresholds2};
use crate::rng;
use crate::table::{Table, Table2};

/// Decimal digits used for log-space bounds unless `KXT_PRECISION` says otherwise.
pub const DEFAULT_DIGITS: usize = 50;

pub fn precision_digits() -> usize {
    std::env::var("KXT_PRECISION")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&d: &usize| d >= 10)
        .unwrap_or(DEFAULT_DIGITS)
}

/// Natural log of the union bound on the probability that a uniformly
/// random table is not balanced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Feasibility {
    pub feasible: bool,
    /// Decimal expansion; `None` when the bound is undefined (`Δ <= 1`).
    pub log_bound: Option<String>,
    pub log_bound_f64: Option<f64>,
    /// `1 - min(1, e^log_bound)`, a lower bound on the balanced fraction.
    pub balanced_fraction_lower_bound: f64,
    pub digits: usize,
}

struct Hp {
    digits: usize,
}

impl Hp {
    fn working(&self) -> usize {
        self.digits + 10
    }

    fn int(&self, v: impl ToString) -> DBig {
        DBig::from_str(&v.to_string()).unwrap().with_precision(self.working()).value()
    }

    fn rational(&self, r: &BigRational) -> DBig {
        self.int(r.numer()) / self.int(r.denom())
    }

    fn ln2(&self) -> DBig {
        self.int(2).ln()
    }

    fn finish(&self, v: DBig) -> Feasibility {
        let feasible = v < DBig::ZERO;
        let rounded = v.with_precision(self.digits).value();
        let f = rounded.to_f64().value();
        Feasibility {
            feasible,
            log_bound: Some(rounded.to_string()),
            log_bound_f64: Some(f),
            balanced_fraction_lower_bound: (1.0 - f.exp().min(1.0)).max(0.0),
            digits: self.digits,
        }
    }
}

/// `K ln N + (M/D)(1 + ln D) - Δ'·ln(Δ'/3)·K·N1/D` with `Δ' = Δ - 1`;
/// feasible iff negative.
pub fn chernoff_feasibility(p: &Params, digits: usize) -> Feasibility {
    let hp = Hp { digits };
    let delta_prime = p.delta() - BigRational::one();
    if !delta_prime.is_positive() {
        return Feasibility {
            feasible: false,
            log_bound: None,
            log_bound_f64: None,
            balanced_fraction_lower_bound: 0.0,
            digits,
        };
    }
    let k = BigRational::from_integer(BigInt::from(p.k_rows()));
    let m_over_d = BigRational::from_integer(BigInt::from(p.shape.colors())) / p.d();
    let kn1_over_d = &k * BigRational::from_integer(BigInt::from(p.shape.cols() as u64)) / p.d();

    let ln2 = hp.ln2();
    let rows_term = hp.rational(&k) * hp.int(p.shape.n) * &ln2;
    let colors_term = hp.rational(&m_over_d) * (hp.int(1) + hp.rational(p.d()).ln());
    let dp = hp.rational(&delta_prime);
    let chernoff = &dp * (hp.rational(&(delta_prime.clone() / BigRational::from_integer(3.into())))).ln()
        * hp.rational(&kn1_over_d);
    hp.finish(rows_term + colors_term - chernoff)
}

/// Two-source bound: `Kx ln N + Ky ln N + (M/D)(1 + ln D) - Kx·Ky/(3D)`.
pub fn chernoff_feasibility_2src(n: u32, m: u32, th: &Thresholds2, digits: usize) -> Feasibility {
    let hp = Hp { digits };
    let kx = BigRational::from_integer(BigInt::from(th.kx_rows));
    let ky = BigRational::from_integer(BigInt::from(th.ky_cols));
    let m_over_d = BigRational::from_integer(BigInt::from(1u64 << m)) / &th.d;
    let rect = &kx * &ky / (BigRational::from_integer(3.into()) * &th.d);
    let rows_term = hp.rational(&(kx + ky)) * hp.int(n) * hp.ln2();
    let colors_term = hp.rational(&m_over_d) * (hp.int(1) + hp.rational(&th.d).ln());
    hp.finish(rows_term + colors_term - hp.rational(&rect))
}

/// Uniform i.i.d. cells, determined by `rng_seed`.
pub fn sample_random_table(p: &Params, rng_seed: u64) -> Table {
    let mut rng = rng::stream(rng_seed, "table", 0);
    let colors = p.shape.colors() as u32;
    let cells = (0..p.shape.cells()).map(|_| rng.random_range(0..colors)).collect();
    Table::new(p.shape, cells).expect("sampled cells are in range")
}

pub fn sample_random_table2(n: u32, m: u32, rng_seed: u64) -> Result<Table2> {
    let mut rng = rng::stream(rng_seed, "table2", 0);
    let side = 1usize << n;
    let colors = 1u32 << m;
    let cells = (0..side * side).map(|_| rng.random_range(0..colors)).collect();
    Table2::new(n, m, cells)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    RandomRetry,
    Exhaustive,
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random-retry" | "random" => Ok(Strategy::RandomRetry),
            "exhaustive" => Ok(Strategy::Exhaustive),
            other => Err(Error::InvalidParams(format!("unknown strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Found {
    pub table: Table,
    /// Candidates examined, including the returned one.
    pub attempts: u64,
}

/// Returns the first candidate that verifies balanced.
///
/// `RandomRetry` draws candidate `i` from stream `(rng_seed, "gen", i)`.
/// `Exhaustive` walks all `M^(N·N1)` tables in row-major lexicographic
/// order, color 0 first, ignoring `rng_seed`.
pub fn find_balanced_table(
    p: &Params,
    strategy: Strategy,
    max_candidates: u64,
    rng_seed: u64,
    verify: WorkBudget,
) -> Result<Found> {
    match strategy {
        Strategy::RandomRetry => {
            for i in 0..max_candidates {
                let t = sample_random_table(p, rng::derive_seed(rng_seed, "gen", i));
                if check_balance_exact(&t, p, verify)?.balanced {
                    return Ok(Found { table: t, attempts: i + 1 });
                }
            }
            Err(Error::NotFound { attempts: max_candidates })
        }
        Strategy::Exhaustive => {
            let colors = p.shape.colors() as u32;
            let mut cells = vec![0u32; p.shape.cells()];
            let mut attempts = 0u64;
            loop {
                if attempts == max_candidates {
                    return Err(Error::NotFound { attempts });
                }
                attempts += 1;
                let t = Table::new(p.shape, cells.clone())?;
                if check_balance_exact(&t, p, verify)?.balanced {
                    return Ok(Found { table: t, attempts });
                }
                // odometer, last cell fastest
                let mut i = cells.len();
                loop {
                    if i == 0 {
                        return Err(Error::NotFound { attempts });
                    }
                    i -= 1;
                    cells[i] += 1;
                    if cells[i] < colors {
                        break;
                    }
                    cells[i] = 0;
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FractionEstimate {
    pub trials: u64,
    pub balanced: u64,
    pub fraction: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub confidence: f64,
    pub rng_seed: u64,
}

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `successes / trials`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Fraction of uniformly random tables that verify balanced, with a 95%
/// Wilson interval. Trial `i` uses stream `(rng_seed, "fraction", i)`, so
/// the estimate does not depend on how trials are spread over threads.
pub fn estimate_balanced_fraction(
    p: &Params,
    trials: u64,
    rng_seed: u64,
    verify: WorkBudget,
) -> Result<FractionEstimate> {
    if trials < 30 {
        return Err(Error::PreconditionViolated(format!(
            "trials must be at least 30, got {trials}"
        )));
    }
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|i| {
            let t = sample_random_table(p, rng::derive_seed(rng_seed, "fraction", i));
            check_balance_exact(&t, p, verify).map(|r| r.balanced as u64)
        })
        .collect::<Result<Vec<_>>>()?;
    let balanced: u64 = outcomes.iter().sum();
    let (wilson_low, wilson_high) = wilson_interval(balanced, trials, Z95);
    Ok(FractionEstimate {
        trials,
        balanced,
        fraction: balanced as f64 / trials as f64,
        wilson_low,
        wilson_high,
        confidence: 0.95,
        rng_seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ParamSpec;
    use crate::ratio::ratio_u64;

    #[test]
    fn small_delta_is_infeasible() {
        for delta in [(1, 1), (3, 2), (2, 1), (4, 1)] {
            let p = Params::with_sizes(8, 6, 2, 16, (2, 1), delta).unwrap();
            assert!(!chernoff_feasibility(&p, 50).feasible, "Δ = {delta:?}");
        }
        let p = Params::with_sizes(8, 6, 2, 16, (2, 1), (1, 1)).unwrap();
        assert_eq!(chernoff_feasibility(&p, 50).log_bound, None);
    }

    #[test]
    fn reference_point_is_feasible() {
        let p = ParamSpec::new(8, 6, 2, 4, 1, 3).validate().unwrap();
        let f = chernoff_feasibility(&p, 50);
        assert!(f.feasible);
        let v = f.log_bound_f64.unwrap();
        assert!((-3000.0..-2900.0).contains(&v), "{v}");
        assert!(f.balanced_fraction_lower_bound > 0.999);
    }

    #[test]
    fn more_columns_never_raise_the_bound() {
        let mut last = f64::INFINITY;
        for n1 in 1..=8 {
            let p = ParamSpec::new(8, n1, 2, 4, 1, 3).validate().unwrap();
            let v = chernoff_feasibility(&p, 30).log_bound_f64.unwrap();
            assert!(v <= last);
            last = v;
        }
    }

    #[test]
    fn two_source_tiny_thresholds_are_infeasible() {
        let th = Thresholds2 { kx_rows: 1, ky_cols: 1, d: ratio_u64(1, 1) };
        assert!(!chernoff_feasibility_2src(20, 20, &th, 50).feasible);
    }

    #[test]
    fn sampling_is_deterministic() {
        let p = Params::with_sizes(3, 2, 2, 2, (2, 1), (3, 2)).unwrap();
        assert_eq!(sample_random_table(&p, 5), sample_random_table(&p, 5));
        assert_ne!(sample_random_table(&p, 5), sample_random_table(&p, 6));
    }

    #[test]
    fn exhaustive_finds_row_permutations() {
        let p = Params::with_sizes(1, 1, 1, 1, (2, 1), (1, 1)).unwrap();
        let f = find_balanced_table(&p, Strategy::Exhaustive, 100, 0, WorkBudget::default()).unwrap();
        assert_eq!(f.table.cells(), &[0, 1, 0, 1]);
        assert_eq!(f.attempts, 6);
    }

    #[test]
    fn exhaustive_with_vacuous_bound_returns_all_zeros() {
        let p = Params::with_sizes(2, 1, 1, 1, (2, 1), (2, 1)).unwrap();
        let f = find_balanced_table(&p, Strategy::Exhaustive, 1, 0, WorkBudget::default()).unwrap();
        assert!(f.table.cells().iter().all(|&c| c == 0));
    }

    #[test]
    fn exhaustive_reports_not_found() {
        let p = Params::with_sizes(1, 1, 1, 1, (2, 1), (1, 1)).unwrap();
        assert_eq!(
            find_balanced_table(&p, Strategy::Exhaustive, 5, 0, WorkBudget::default()),
            Err(Error::NotFound { attempts: 5 })
        );
    }

    #[test]
    fn fraction_needs_thirty_trials() {
        let p = Params::with_sizes(2, 1, 1, 1, (2, 1), (1, 1)).unwrap();
        assert!(matches!(
            estimate_balanced_fraction(&p, 0, 0, WorkBudget::default()),
            Err(Error::PreconditionViolated(_))
        ));
    }

    #[test]
    fn wilson_interval_brackets_estimate() {
        let (lo, hi) = wilson_interval(50, 100, Z95);
        assert!(lo < 0.5 && 0.5 < hi);
        assert!((hi - lo - 0.192).abs() < 0.01);
        let (lo, hi) = wilson_interval(200, 200, Z95);
        assert!(lo > 0.98 && hi == 1.0);
    }
}
