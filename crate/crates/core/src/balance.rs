//! Exact and sampled `(K, D, Δ)`-balance verification.
//!
//! A table fails to be balanced exactly when some rectangle `B x [N1]` with
//! `|B| >= K` holds more than `Δ·|A|/M·|B|·N1` cells colored from some `A`
//! with `|A| >= ⌈M/D⌉`. The load of a rectangle is its A-cell count divided
//! by that bound; a table is balanced iff its worst load is at most 1.
//!
//! The worst load is always attained at `|A| = ⌈M/D⌉` and `|B| = K`: the
//! densest `a` colors of any larger color set are at least as dense, and the
//! `K` heaviest rows of any larger row set are at least as heavy. The exact
//! checkers use this to enumerate color sets only, picking the heaviest rows
//! directly. The naive checker enumerates every quantifier and serves as the
//! reference.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rand::seq::index;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{Params, Thresholds2};
use crate::ratio::{self, serialize_rational};
use crate::rng;
use crate::table::{Table, Table2};

/// Work allowance in cell inspections.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WorkBudget(pub u64);

impl Default for WorkBudget {
    fn default() -> Self {
        WorkBudget(1_000_000_000)
    }
}

impl WorkBudget {
    pub fn unlimited() -> Self {
        WorkBudget(u64::MAX)
    }

    pub fn charge(&self, required: u128) -> Result<()> {
        if required > self.0 as u128 {
            Err(Error::WorkBudgetExceeded { required, budget: self.0 })
        } else {
            Ok(())
        }
    }
}

/// A rectangle that exceeds its A-cell bound.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub rows: Vec<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cols: Option<Vec<u32>>,
    pub colors: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BalanceReport {
    pub balanced: bool,
    #[serde(serialize_with = "serialize_rational")]
    pub worst_load: BigRational,
    pub witness: Option<Witness>,
}

impl BalanceReport {
    fn from_worst(worst_load: BigRational, witness: Witness) -> Self {
        let balanced = worst_load <= BigRational::one();
        BalanceReport {
            balanced,
            worst_load,
            witness: (!balanced).then_some(witness),
        }
    }
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i + 1) as u128,
            None => return u128::MAX,
        };
    }
    acc
}

/// Lexicographic enumeration of the `k`-subsets of `0..n`.
pub struct Combinations {
    n: u32,
    current: Vec<u32>,
    started: bool,
    done: bool,
}

impl Combinations {
    pub fn new(n: u32, k: u32) -> Self {
        Combinations {
            n,
            current: (0..k).collect(),
            started: false,
            done: k > n,
        }
    }

    pub fn next_subset(&mut self) -> Option<&[u32]> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(&self.current);
        }
        let k = self.current.len();
        let mut i = k;
        while i > 0 {
            i -= 1;
            if self.current[i] < self.n - (k - i) as u32 {
                self.current[i] += 1;
                for j in i + 1..k {
                    self.current[j] = self.current[j - 1] + 1;
                }
                return Some(&self.current);
            }
        }
        self.done = true;
        None
    }
}

/// `count·M / (factor·|A|·rows·cols)`.
fn load(count: u64, colors: u64, factor: &BigRational, a: u64, rows: u64, cols: u64) -> BigRational {
    ratio::ratio_u64(count * colors, a * rows * cols) / factor
}

/// Indices of the `k` largest entries, ties to the smallest index, sorted.
fn top_k(counts: &[u64], k: usize, scratch: &mut Vec<u32>) -> u64 {
    scratch.clear();
    scratch.extend(0..counts.len() as u32);
    let key = |&i: &u32| (std::cmp::Reverse(counts[i as usize]), i);
    if k < scratch.len() {
        scratch.select_nth_unstable_by_key(k, key);
        scratch.truncate(k);
    }
    scratch.iter().map(|&i| counts[i as usize]).sum()
}

/// Enumerates every row set `|B| >= K` and color set `|A| >= ⌈M/D⌉`.
///
/// Limited to tables with at most 24 rows and 24 colors.
pub fn check_balance_naive(t: &Table, p: &Params, budget: WorkBudget) -> Result<BalanceReport> {
    check_shape(t, p)?;
    let shape = t.shape();
    let (rows, cols, colors) = (shape.rows(), shape.cols() as u64, shape.colors());
    if rows > 24 || colors > 24 {
        return Err(Error::WorkBudgetExceeded { required: u128::MAX, budget: budget.0 });
    }
    let required = (shape.cells() as u128) + (1u128 << colors) * (rows as u128 * colors as u128 + (1u128 << rows));
    budget.charge(required)?;

    let k = p.k_rows() as u32;
    let a_min = p.min_heavy_size() as u32;
    let hist = t.row_histograms();
    let mut row_count = vec![0u64; rows];
    let mut sums = vec![0u64; 1 << rows];
    // (count, |A|, |B|, A mask, B mask), compared by count / (|A|·|B|)
    let mut best: Option<(u64, u64, u64, u32, u32)> = None;
    for amask in 1u32..(1u32 << colors) {
        let a = amask.count_ones();
        if a < a_min {
            continue;
        }
        for (x, rc) in row_count.iter_mut().enumerate() {
            *rc = (0..colors as usize)
                .filter(|c| amask >> c & 1 == 1)
                .map(|c| hist[x * colors as usize + c] as u64)
                .sum();
        }
        for bmask in 1u32..(1u32 << rows) {
            let s = sums[(bmask & (bmask - 1)) as usize] + row_count[bmask.trailing_zeros() as usize];
            sums[bmask as usize] = s;
            let b = bmask.count_ones();
            if b < k {
                continue;
            }
            let better = match best {
                None => true,
                Some((bc, ba, bb, _, _)) => {
                    (s as u128) * (ba as u128) * (bb as u128) > (bc as u128) * (a as u128) * (b as u128)
                }
            };
            if better {
                best = Some((s, a as u64, b as u64, amask, bmask));
            }
        }
    }
    let (count, a, b, amask, bmask) = best.expect("K <= N and ⌈M/D⌉ <= M leave a rectangle");
    let worst = load(count, colors, p.delta(), a, b, cols);
    let bits = |mask: u32, len: u64| (0..len as u32).filter(|i| mask >> i & 1 == 1).collect();
    Ok(BalanceReport::from_worst(
        worst,
        Witness { rows: bits(bmask, rows as u64), cols: None, colors: bits(amask, colors) },
    ))
}

/// Exact verdict enumerating only color sets of size `⌈M/D⌉`; for each,
/// the `K` rows with the most A-cells form the worst row set.
pub fn check_balance_exact(t: &Table, p: &Params, budget: WorkBudget) -> Result<BalanceReport> {
    check_shape(t, p)?;
    let shape = t.shape();
    let (rows, cols, colors) = (shape.rows(), shape.cols() as u64, shape.colors());
    let a_min = p.min_heavy_size();
    let k = p.k_rows() as usize;
    let required = (shape.cells() as u128)
        .saturating_add(binomial(colors, a_min).saturating_mul(rows as u128 * (a_min as u128 + 1)));
    budget.charge(required)?;

    let hist = t.row_histograms();
    let mut row_count = vec![0u64; rows];
    let mut scratch = Vec::with_capacity(rows);
    let mut best: Option<(u64, Vec<u32>, Vec<u32>)> = None;
    let mut sets = Combinations::new(colors as u32, a_min as u32);
    while let Some(aset) = sets.next_subset() {
        for (x, rc) in row_count.iter_mut().enumerate() {
            let h = &hist[x * colors as usize..(x + 1) * colors as usize];
            *rc = aset.iter().map(|&c| h[c as usize] as u64).sum();
        }
        let s = top_k(&row_count, k, &mut scratch);
        if best.as_ref().is_none_or(|(bs, _, _)| s > *bs) {
            let mut rows_sel = scratch.clone();
            rows_sel.sort_unstable();
            best = Some((s, aset.to_vec(), rows_sel));
        }
    }
    let (count, aset, rows_sel) = best.expect("at least one color set");
    let worst = load(count, colors, p.delta(), a_min, k as u64, cols);
    Ok(BalanceReport::from_worst(worst, Witness { rows: rows_sel, cols: None, colors: aset }))
}

fn check_shape(t: &Table, p: &Params) -> Result<()> {
    if t.shape() != p.shape {
        return Err(Error::InvalidParams(format!(
            "table shape {:?} does not match parameters {:?}",
            t.shape(),
            p.shape
        )));
    }
    Ok(())
}

/// Two-source balance: every rectangle `B1 x B2` with `|B1| >= Kx`,
/// `|B2| >= Ky` holds at most `factor·|A|/M·|B1|·|B2|` A-cells for every
/// `|A| >= ⌈M/D⌉`.
///
/// Exact. The worst rectangle has `|A| = ⌈M/D⌉`, `|B1| = Kx`, `|B2| = Ky`,
/// and once one side is fixed the other is best chosen greedily, so only
/// the side with fewer subsets is enumerated.
pub fn check_balance2_exact(
    t: &Table2,
    th: &Thresholds2,
    factor: &BigRational,
    budget: WorkBudget,
) -> Result<BalanceReport> {
    th.check(t.n())?;
    let side = t.side() as u64;
    let colors = t.colors();
    let a_min = th.min_heavy_size(t.m());
    let (kx, ky) = (th.kx_rows, th.ky_cols);
    let enumerate_cols = binomial(side, ky) <= binomial(side, kx);
    let (k_enum, k_pick) = if enumerate_cols { (ky, kx) } else { (kx, ky) };
    let required = binomial(colors, a_min)
        .saturating_mul(binomial(side, k_enum))
        .saturating_mul(side as u128 * k_enum as u128);
    budget.charge(required)?;

    // cell(pick, enumerated)
    let cell = |u: usize, j: usize| if enumerate_cols { t.get(u, j) } else { t.get(j, u) };
    let mut in_a = vec![false; colors as usize];
    let mut counts = vec![0u64; side as usize];
    let mut scratch = Vec::with_capacity(side as usize);
    let mut best: Option<(u64, Vec<u32>, Vec<u32>, Vec<u32>)> = None;
    let mut color_sets = Combinations::new(colors as u32, a_min as u32);
    while let Some(aset) = color_sets.next_subset() {
        in_a.iter_mut().for_each(|v| *v = false);
        for &c in aset {
            in_a[c as usize] = true;
        }
        let mut enum_sets = Combinations::new(side as u32, k_enum as u32);
        while let Some(eset) = enum_sets.next_subset() {
            for (u, cnt) in counts.iter_mut().enumerate() {
                *cnt = eset.iter().filter(|&&j| in_a[cell(u, j as usize) as usize]).count() as u64;
            }
            let s = top_k(&counts, k_pick as usize, &mut scratch);
            if best.as_ref().is_none_or(|b| s > b.0) {
                let mut picked = scratch.clone();
                picked.sort_unstable();
                best = Some((s, aset.to_vec(), picked, eset.to_vec()));
            }
        }
    }
    let (count, aset, picked, eset) = best.expect("at least one rectangle");
    let (rows, cols) = if enumerate_cols { (picked, eset) } else { (eset, picked) };
    let worst = load(count, colors, factor, a_min, kx, ky);
    Ok(BalanceReport::from_worst(worst, Witness { rows, cols: Some(cols), colors: aset }))
}

/// Outcome of a Monte Carlo screen. Never certifies balance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SampledEstimate {
    pub trials: u64,
    pub violations: u64,
    #[serde(serialize_with = "serialize_rational")]
    pub max_load: BigRational,
    pub verdict: &'static str,
    pub rng_seed: u64,
}

/// Samples rectangles uniformly at sizes `(K, ⌈M/D⌉)`.
pub fn check_balance_sampled(t: &Table, p: &Params, trials: u64, rng_seed: u64) -> Result<SampledEstimate> {
    check_shape(t, p)?;
    if trials == 0 {
        return Err(Error::PreconditionViolated("trials must be at least 1".into()));
    }
    let shape = t.shape();
    let (rows, cols, colors) = (shape.rows(), shape.cols() as u64, shape.colors());
    let a_min = p.min_heavy_size();
    let k = p.k_rows();
    let mut rng = rng::stream(rng_seed, "sampled", 0);
    let mut in_a = vec![false; colors as usize];
    let mut max_count = 0u64;
    let mut violations = 0u64;
    let bound = p.cell_bound(a_min, k);
    for _ in 0..trials {
        let b = index::sample(&mut rng, rows, k as usize);
        let a = index::sample(&mut rng, colors as usize, a_min as usize);
        in_a.iter_mut().for_each(|v| *v = false);
        for c in a.iter() {
            in_a[c] = true;
        }
        let count = b
            .iter()
            .map(|x| t.row(x).iter().filter(|&&c| in_a[c as usize]).count() as u64)
            .sum::<u64>();
        max_count = max_count.max(count);
        if BigRational::from_integer(BigInt::from(count)) > bound {
            violations += 1;
        }
    }
    Ok(SampledEstimate {
        trials,
        violations,
        max_load: load(max_count, colors, p.delta(), a_min, k, cols),
        verdict: if violations > 0 { "violation_found" } else { "no_violation_found" },
        rng_seed,
    })
}
