//! Parameter algebra behind the chain rule for random strings, and a
//! flat-model experiment over two-source tables.
//!
//! Complexities are supplied as plain integers; every unspecified additive
//! constant is the single knob `c0`. Logarithms of counts use
//! `⌈log2 max(v, 2)⌉` so that they stay defined and nonnegative.

use num_rational::BigRational;
use rand::seq::index;
use rand::Rng as _;
use serde::Serialize;

use crate::balance::{check_balance2_exact, BalanceReport, Combinations, WorkBudget};
use crate::construct::sample_random_table2;
use crate::error::{Error, Result};
use crate::params::Thresholds2;
use crate::ratio::{self, serialize_rational};
use crate::rng;
use crate::table::Table2;

/// Number of constants absorbed between the chain rule and the symmetry
/// corollary: the extraction claim, the encoding of the table index, two
/// applications of the chain rule, and the clamp on mutual information.
pub const SYMMETRY_CONSTANTS: u64 = 5;

/// `⌈log2 max(v, 2)⌉`.
pub fn log2_ceil(v: i64) -> i64 {
    let v = v.max(2) as u64;
    (64 - (v - 1).leading_zeros()) as i64
}

/// `⌈log2 v⌉` for `v >= 2`, else 0.
fn log2_ceil0(v: i64) -> i64 {
    if v < 2 {
        0
    } else {
        log2_ceil(v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SoiInputs {
    /// String length.
    pub n: i64,
    /// `C(x|n)`, `C(y|n)`, `C(y|x)`.
    pub tx: i64,
    pub ty: i64,
    pub tyx: i64,
    /// `C(tx|n)`, `C(ty|n)`, `C(tyx|n)`.
    pub c2x: i64,
    pub c2y: i64,
    pub c2yx: i64,
    pub c0: i64,
}

impl SoiInputs {
    /// Inputs for `c`-random strings: every first-level term is `n - c`.
    pub fn random_strings(n: i64, c: i64, c2: i64, c0: i64) -> Self {
        SoiInputs { n, tx: n - c, ty: n - c, tyx: n - c, c2x: c2, c2y: c2, c2yx: c2, c0 }
    }

    fn validate(&self) -> Result<()> {
        let bad = |s: String| Err(Error::InvalidParams(s));
        if self.n < 1 {
            return bad("n must be positive".into());
        }
        if self.c0 < 0 {
            return bad("c0 must be nonnegative".into());
        }
        for (name, v) in [("tx", self.tx), ("ty", self.ty), ("tyx", self.tyx)] {
            if v < 0 || v > self.n + self.c0 {
                return bad(format!("{name} = {v} outside [0, n + c0]"));
            }
        }
        let cap = 2 * log2_ceil(self.n) + self.c0;
        for (name, v) in [("c2x", self.c2x), ("c2y", self.c2y), ("c2yx", self.c2yx)] {
            if v < 0 || v > cap {
                return bad(format!("{name} = {v} outside [0, 2 log n + c0 = {cap}]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SoiLedger {
    pub mutual_info: i64,
    pub d: i64,
    pub kx: i64,
    pub ky: i64,
    pub log_d: i64,
    pub m: i64,
    pub lambda: i64,
    pub chain_lower_bound: i64,
    /// Premises hold and `d > lambda + mutual_info`.
    pub feasible: bool,
    pub c0: i64,
}

/// Evaluates the extractor parameters and the resulting chain-rule bound.
///
/// `lambda` counts the self-delimiting encoding of the six complexity
/// values with bit doubling: the three second-level values, their own
/// complexities (bounded by their logarithms), and two length prefixes for
/// each, plus `c0`.
pub fn soi_ledger(inp: &SoiInputs) -> Result<SoiLedger> {
    inp.validate()?;
    let c0 = inp.c0;
    let mutual_info = (inp.ty - inp.tyx).max(0);
    let log_n = log2_ceil(inp.n);
    let need_x = 13 * log_n + mutual_info + c0;
    if inp.tx < need_x {
        return Err(Error::InfeasiblePremise(format!(
            "C(x|n) >= 13 log n + I + c0 fails: {} < {need_x}",
            inp.tx
        )));
    }
    let need_y = 7 * log_n + mutual_info + c0;
    if inp.ty < need_y {
        return Err(Error::InfeasiblePremise(format!(
            "C(y|n) >= 7 log n + I + c0 fails: {} < {need_y}",
            inp.ty
        )));
    }
    let second = [inp.c2x, inp.c2y, inp.c2yx];
    let s2: i64 = second.iter().sum();
    let d = 2 * s2 + mutual_info + c0;
    let kx = inp.tx - 2 * s2 - c0;
    let ky = inp.ty - c0;
    let log_d = log2_ceil(d);
    let m = kx + ky - log_d - c0;
    let third: Vec<i64> = second.iter().map(|&v| log2_ceil0(v)).collect();
    let lambda = s2
        + third.iter().sum::<i64>()
        + 2 * second.iter().map(|&v| log2_ceil0(v)).sum::<i64>()
        + 2 * third.iter().map(|&v| log2_ceil0(v)).sum::<i64>()
        + c0;
    let chain_lower_bound = m - d - lambda - c0;
    Ok(SoiLedger {
        mutual_info,
        d,
        kx,
        ky,
        log_d,
        m,
        lambda,
        chain_lower_bound,
        feasible: d > lambda + mutual_info,
        c0,
    })
}

/// For `c`-random `x, y` with `y` `c`-random given `x`: `x` is
/// `c'`-random given `y` with `c' = c + 5·c0`. Independent of `n`.
pub fn symmetry_corollary(c: u64, _n: u64, c0: u64) -> u64 {
    c + SYMMETRY_CONSTANTS * c0
}

/// One `(A, B_y)` probe of the bad-row bound.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProbeResult {
    pub colors: Vec<u32>,
    pub cols: Vec<u32>,
    pub bad_rows: u64,
    pub threshold: u64,
    /// Most A-cells in `{x} x B_y` over good rows.
    pub good_row_max: u64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExperimentReport {
    /// Candidates tried; 0 when a table was probed directly.
    pub table_attempts: u64,
    /// Balance verdict of the probed table, when this run checked it.
    pub balance: Option<BalanceReport>,
    #[serde(serialize_with = "serialize_rational")]
    pub factor: BigRational,
    pub probes: Vec<ProbeResult>,
    pub failures: u64,
    pub pass: bool,
}

/// Flat-model run of the bad-row bound on a two-source table.
#[derive(Debug, Clone)]
pub struct SoiExperiment {
    pub n: u32,
    pub m: u32,
    pub thresholds: Thresholds2,
    pub factor: BigRational,
    /// Column sets sampled per color set.
    pub column_samples: u64,
    /// Candidate tables tried before giving up.
    pub construction_budget: u64,
    pub rng_seed: u64,
    pub verify: WorkBudget,
}

impl SoiExperiment {
    pub fn new(n: u32, m: u32, thresholds: Thresholds2, rng_seed: u64) -> Self {
        SoiExperiment {
            n,
            m,
            thresholds,
            factor: ratio::ratio_u64(2, 1),
            column_samples: 16,
            construction_budget: 100,
            rng_seed,
            verify: WorkBudget::default(),
        }
    }

    /// Samples candidate tables until one passes two-source balance, then
    /// probes it.
    pub fn run(&self) -> Result<ExperimentReport> {
        self.run_with(|i| self.candidate(i)).map(|(report, _)| report)
    }

    /// Candidate table `i` of [`run`](Self::run).
    pub fn candidate(&self, i: u64) -> Result<Table2> {
        sample_random_table2(self.n, self.m, rng::derive_seed(self.rng_seed, "soi", i))
    }

    /// As [`run`](Self::run) with candidate `i` supplied by `source(i)`;
    /// also returns the accepted table.
    pub fn run_with(&self, mut source: impl FnMut(u64) -> Result<Table2>) -> Result<(ExperimentReport, Table2)> {
        for i in 0..self.construction_budget {
            let t = source(i)?;
            let balance = check_balance2_exact(&t, &self.thresholds, &self.factor, self.verify)?;
            if balance.balanced {
                let mut report = self.probe(&t)?;
                report.table_attempts = i + 1;
                report.balance = Some(balance);
                return Ok((report, t));
            }
        }
        Err(Error::NoBalancedTable { attempts: self.construction_budget })
    }

    /// Probes a given table without checking its balance first.
    ///
    /// Every color set of size `⌈M/D⌉` is paired with `column_samples`
    /// random column sets of size in `[Ky, min(N, 2·Ky)]`. A row is bad when
    /// it holds more than `factor·|A|/M·|B_y|` A-cells in `B_y`; a probe
    /// passes when fewer than `Kx` rows are bad.
    pub fn probe(&self, t: &Table2) -> Result<ExperimentReport> {
        if t.n() != self.n || t.m() != self.m {
            return Err(Error::InvalidParams("table shape does not match the experiment".into()));
        }
        self.thresholds.check(self.n)?;
        let side = t.side();
        let colors = t.colors();
        let a_min = self.thresholds.min_heavy_size(self.m);
        let (kx, ky) = (self.thresholds.kx_rows, self.thresholds.ky_cols);
        let max_cols = (2 * ky).min(side as u64);
        let mut rng = rng::stream(self.rng_seed, "soi-probe", 0);
        let mut probes = Vec::new();
        let mut in_a = vec![false; colors as usize];
        let mut sets = Combinations::new(colors as u32, a_min as u32);
        while let Some(aset) = sets.next_subset() {
            in_a.iter_mut().for_each(|v| *v = false);
            for &c in aset {
                in_a[c as usize] = true;
            }
            for _ in 0..self.column_samples {
                let size = rng.random_range(ky..=max_cols) as usize;
                let mut cols: Vec<u32> =
                    index::sample(&mut rng, side, size).iter().map(|c| c as u32).collect();
                cols.sort_unstable();
                // bad iff count·M > factor·|A|·|B_y|
                let bound = &self.factor * ratio::ratio_u64(a_min * size as u64, colors);
                let mut bad_rows = 0u64;
                let mut good_row_max = 0u64;
                for x in 0..side {
                    let count = cols.iter().filter(|&&y| in_a[t.get(x, y as usize) as usize]).count() as u64;
                    if ratio::ratio_u64(count, 1) > bound {
                        bad_rows += 1;
                    } else {
                        good_row_max = good_row_max.max(count);
                    }
                }
                probes.push(ProbeResult {
                    colors: aset.to_vec(),
                    cols,
                    bad_rows,
                    threshold: kx,
                    good_row_max,
                    pass: bad_rows < kx,
                });
            }
        }
        let failures = probes.iter().filter(|p| !p.pass).count() as u64;
        Ok(ExperimentReport {
            table_attempts: 0,
            balance: None,
            factor: self.factor.clone(),
            probes,
            failures,
            pass: failures == 0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_clamps() {
        assert_eq!(log2_ceil(0), 1);
        assert_eq!(log2_ceil(2), 1);
        assert_eq!(log2_ceil(6), 3);
        assert_eq!(log2_ceil(8), 3);
        assert_eq!(log2_ceil(1024), 10);
        assert_eq!(log2_ceil0(1), 0);
    }

    #[test]
    fn hand_computed_ledger() {
        let l = soi_ledger(&SoiInputs::random_strings(1024, 0, 1, 0)).unwrap();
        assert_eq!(l.mutual_info, 0);
        assert_eq!(l.d, 6);
        assert_eq!(l.kx, 1018);
        assert_eq!(l.ky, 1024);
        assert_eq!(l.log_d, 3);
        assert_eq!(l.m, 2039);
        assert_eq!(l.lambda, 3);
        assert_eq!(l.chain_lower_bound, 2039 - 6 - 3);
        assert!(l.feasible);
    }

    #[test]
    fn mutual_info_clamps_at_zero() {
        let mut inp = SoiInputs::random_strings(1024, 0, 1, 0);
        inp.tyx = inp.ty;
        assert_eq!(soi_ledger(&inp).unwrap().mutual_info, 0);
        inp.tyx = 1000;
        inp.ty = 990;
        assert_eq!(soi_ledger(&inp).unwrap().mutual_info, 0);
        inp.ty = 1010;
        assert_eq!(soi_ledger(&inp).unwrap().mutual_info, 10);
    }

    #[test]
    fn premise_failures_name_the_inequality() {
        let mut inp = SoiInputs::random_strings(1024, 0, 1, 0);
        inp.tx = 129;
        let err = soi_ledger(&inp).unwrap_err();
        assert!(matches!(err, Error::InfeasiblePremise(ref s) if s.contains("C(x|n)")), "{err}");
        let mut inp = SoiInputs::random_strings(1024, 0, 1, 0);
        inp.ty = 69;
        inp.tyx = 69;
        let err = soi_ledger(&inp).unwrap_err();
        assert!(matches!(err, Error::InfeasiblePremise(ref s) if s.contains("C(y|n)")), "{err}");
    }

    #[test]
    fn out_of_range_inputs_are_rejected() {
        let mut inp = SoiInputs::random_strings(1024, 0, 1, 0);
        inp.c2x = 21;
        assert!(matches!(soi_ledger(&inp), Err(Error::InvalidParams(_))));
        let mut inp = SoiInputs::random_strings(1024, 0, 1, 0);
        inp.tx = 1025;
        assert!(matches!(soi_ledger(&inp), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn corollary_constant() {
        assert_eq!(symmetry_corollary(0, 100, 0), 0);
        assert_eq!(symmetry_corollary(3, 100, 2), 13);
        assert_eq!(symmetry_corollary(3, 1 << 20, 2), 13);
    }

    #[test]
    fn constant_table_is_rejected_by_construction() {
        let th = Thresholds2 { kx_rows: 2, ky_cols: 2, d: ratio::ratio_u64(4, 1) };
        let mut exp = SoiExperiment::new(2, 2, th, 0);
        exp.construction_budget = 1;
        let res = exp.run_with(|_| Table2::from_fn(2, 2, |_, _| 0));
        assert_eq!(res, Err(Error::NoBalancedTable { attempts: 1 }));
    }
}
