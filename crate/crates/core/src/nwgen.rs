//! Toy Nisan-Wigderson generator: greedy combinatorial designs, a
//! pluggable hard function, and a seed scan for balanced tables.

use num_rational::BigRational;
use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use crate::balance::{binomial, check_balance_exact, WorkBudget};
use crate::error::{Error, Result};
use crate::params::Params;
use crate::ratio;
use crate::rng;
use crate::table::Table;

/// `t` subsets of `[seed_len]`, each of size `l`, pairwise meeting in at
/// most `max_intersect` positions. Each set is sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Design {
    pub seed_len: usize,
    pub set_size: usize,
    pub max_intersect: usize,
    pub sets: Vec<Vec<u32>>,
}

impl Design {
    pub fn validate(&self) -> Result<()> {
        let bad = |s: String| Err(Error::InvalidParams(s));
        if self.sets.is_empty() {
            return bad("design needs at least one set".into());
        }
        let mut member = vec![vec![false; self.seed_len]; self.sets.len()];
        for (i, s) in self.sets.iter().enumerate() {
            if s.len() != self.set_size {
                return bad(format!("set {i} has {} positions, expected {}", s.len(), self.set_size));
            }
            if s.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!("set {i} is not strictly increasing"));
            }
            if s.iter().any(|&p| p as usize >= self.seed_len) {
                return bad(format!("set {i} leaves [0, {})", self.seed_len));
            }
            for &p in s {
                member[i][p as usize] = true;
            }
        }
        for i in 0..self.sets.len() {
            for (j, mj) in member.iter().enumerate().take(i) {
                let common = self.sets[i].iter().filter(|&&p| mj[p as usize]).count();
                if common > self.max_intersect {
                    return bad(format!("sets {j} and {i} share {common} > {} positions", self.max_intersect));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }
}

/// Lexicographically least `l`-subset of `[len]` after `prev` that meets
/// every kept set in at most `a` positions.
struct Greedy<'a> {
    len: usize,
    l: usize,
    a: u32,
    member: &'a [Vec<bool>],
    overlap: Vec<u32>,
    partial: Vec<u32>,
}

impl Greedy<'_> {
    fn next_after(&mut self, prev: Option<&[u32]>) -> Option<Vec<u32>> {
        self.partial.clear();
        self.overlap.iter_mut().for_each(|v| *v = 0);
        if self.dfs(0, prev) {
            Some(self.partial.clone())
        } else {
            None
        }
    }

    fn dfs(&mut self, depth: usize, tight: Option<&[u32]>) -> bool {
        if depth == self.l {
            return true;
        }
        let floor = self.partial.last().map_or(0, |&v| v as usize + 1);
        let lo = match tight {
            Some(prev) if depth + 1 == self.l => prev[depth] as usize + 1,
            Some(prev) => prev[depth] as usize,
            None => floor,
        }
        .max(floor);
        let hi = self.len - (self.l - depth);
        for v in lo..=hi.min(self.len.saturating_sub(1)) {
            if lo > hi {
                break;
            }
            let mut ok = true;
            for (s, m) in self.member.iter().enumerate() {
                if m[v] {
                    self.overlap[s] += 1;
                    if self.overlap[s] > self.a {
                        ok = false;
                    }
                }
            }
            if ok {
                self.partial.push(v as u32);
                let next_tight = match tight {
                    Some(prev) if prev[depth] as usize == v => Some(prev),
                    _ => None,
                };
                if self.dfs(depth + 1, next_tight) {
                    return true;
                }
                self.partial.pop();
            }
            for (s, m) in self.member.iter().enumerate() {
                if m[v] {
                    self.overlap[s] -= 1;
                }
            }
        }
        false
    }
}

fn greedy_at(len: usize, t: usize, l: usize, a: usize) -> Option<Vec<Vec<u32>>> {
    let mut sets: Vec<Vec<u32>> = Vec::with_capacity(t);
    let mut member: Vec<Vec<bool>> = Vec::with_capacity(t);
    while sets.len() < t {
        let mut g = Greedy {
            len,
            l,
            a: a as u32,
            member: &member,
            overlap: vec![0; member.len()],
            partial: Vec::with_capacity(l),
        };
        let next = g.next_after(sets.last().map(|s| s.as_slice()))?;
        let mut m = vec![false; len];
        for &p in &next {
            m[p as usize] = true;
        }
        member.push(m);
        sets.push(next);
    }
    Some(sets)
}

/// Scans `l`-subsets of `[ℓ]` lexicographically, keeping each that meets
/// all kept sets in at most `a` positions, until `t` are kept; returns the
/// design for the smallest `ℓ <= budget` where this succeeds.
///
/// Seed lengths below the packing bound `t·C(l, a+1) <= C(ℓ, a+1)` are
/// skipped, since no design fits there.
pub fn design_greedy(t: usize, l: usize, a: usize, budget: usize) -> Result<Design> {
    if t == 0 || l == 0 {
        return Err(Error::InvalidParams("t and l must be positive".into()));
    }
    if budget < l {
        return Err(Error::BudgetTooSmall { sets: t, budget });
    }
    let fits = |len: usize| {
        if a >= l {
            binomial(len as u64, l as u64) >= t as u128
        } else {
            let per_set = binomial(l as u64, a as u64 + 1);
            binomial(len as u64, a as u64 + 1) >= per_set.saturating_mul(t as u128)
        }
    };
    for len in l..=budget {
        if !fits(len) {
            continue;
        }
        if let Some(sets) = greedy_at(len, t, l, a) {
            return Ok(Design { seed_len: len, set_size: l, max_intersect: a, sets });
        }
    }
    Err(Error::BudgetTooSmall { sets: t, budget })
}

/// Boolean function on `arity` bits given by its truth table. Input bit 0
/// is the most significant bit of the table index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HardFunction {
    pub arity: usize,
    pub truth_table: Vec<bool>,
    /// Seed of the random truth table, if it is one.
    pub rng_seed: Option<u64>,
}

impl HardFunction {
    pub fn new(arity: usize, truth_table: Vec<bool>) -> Result<Self> {
        if arity > 24 || truth_table.len() != 1 << arity {
            return Err(Error::InvalidParams(format!(
                "truth table of length {} for arity {arity}",
                truth_table.len()
            )));
        }
        Ok(HardFunction { arity, truth_table, rng_seed: None })
    }

    pub fn parity(arity: usize) -> Self {
        let tt = (0..1usize << arity).map(|i| i.count_ones() % 2 == 1).collect();
        HardFunction { arity, truth_table: tt, rng_seed: None }
    }

    pub fn random(arity: usize, rng_seed: u64) -> Self {
        let mut rng = rng::stream(rng_seed, "hard-function", arity as u64);
        let tt = (0..1usize << arity).map(|_| rng.random::<bool>()).collect();
        HardFunction { arity, truth_table: tt, rng_seed: Some(rng_seed) }
    }
}

fn check_compatible(f: &HardFunction, dgn: &Design, seed: &[bool]) -> Result<()> {
    if f.arity != dgn.set_size {
        return Err(Error::InvalidParams(format!(
            "function arity {} differs from design set size {}",
            f.arity, dgn.set_size
        )));
    }
    if seed.len() != dgn.seed_len {
        return Err(Error::InvalidParams(format!(
            "seed has {} bits, design needs {}",
            seed.len(),
            dgn.seed_len
        )));
    }
    Ok(())
}

/// Bit `i` of the generator output together with the number of seed bits
/// and table entries touched to produce it.
pub fn nw_bit_counted(f: &HardFunction, dgn: &Design, seed: &[bool], i: usize) -> Result<(bool, usize)> {
    check_compatible(f, dgn, seed)?;
    let set = dgn.sets.get(i).ok_or(Error::IndexOutOfRange {
        what: "output bit",
        index: i as u64,
        limit: dgn.sets.len() as u64,
    })?;
    let mut idx = 0usize;
    let mut steps = 0;
    for &p in set {
        idx = idx << 1 | seed[p as usize] as usize;
        steps += 1;
    }
    Ok((f.truth_table[idx], steps + 1))
}

/// `f` applied to the seed restricted to `sets[i]`.
pub fn nw_bit(f: &HardFunction, dgn: &Design, seed: &[bool], i: usize) -> Result<bool> {
    nw_bit_counted(f, dgn, seed, i).map(|(b, _)| b)
}

pub fn nw_expand(f: &HardFunction, dgn: &Design, seed: &[bool]) -> Result<Vec<bool>> {
    check_compatible(f, dgn, seed)?;
    (0..dgn.sets.len()).map(|i| nw_bit(f, dgn, seed, i)).collect()
}

/// Seed number `j` in lexicographic order (0 < 1, bit 0 first).
pub fn seed_from_index(j: u64, len: usize) -> Vec<bool> {
    (0..len)
        .map(|i| {
            let shift = len - 1 - i;
            shift < 64 && (j >> shift) & 1 == 1
        })
        .collect()
}

/// Reads `N·N1` cells of `m` bits each, most significant bit first.
pub fn table_from_bits(p: &Params, bits: &[bool]) -> Result<Table> {
    let m = p.shape.m as usize;
    let needed = p.shape.cells() * m;
    if bits.len() != needed {
        return Err(Error::InvalidParams(format!(
            "{} output bits, a table needs N·N1·m = {needed}",
            bits.len()
        )));
    }
    let cells = bits
        .chunks_exact(m)
        .map(|c| c.iter().fold(0u32, |acc, &b| acc << 1 | b as u32))
        .collect();
    Table::new(p.shape, cells)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NwFound {
    pub seed_index: u64,
    pub seed: Vec<bool>,
    pub table: Table,
    pub scanned: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NwNotFound {
    pub scanned: u64,
    pub best_load: Option<BigRational>,
}

const SCAN_CHUNK: u64 = 256;

/// First seed, in lexicographic order, whose expansion is a balanced table.
pub fn nw_table_search(
    p: &Params,
    f: &HardFunction,
    dgn: &Design,
    seed_budget: u64,
    verify: WorkBudget,
) -> Result<std::result::Result<NwFound, NwNotFound>> {
    let needed = p.shape.cells() * p.shape.m as usize;
    if dgn.sets.len() != needed {
        return Err(Error::InvalidParams(format!(
            "design has {} sets, a table needs N·N1·m = {needed}",
            dgn.sets.len()
        )));
    }
    if f.arity != dgn.set_size {
        return Err(Error::InvalidParams("function arity differs from design set size".into()));
    }
    let total = if dgn.seed_len >= 64 { u64::MAX } else { 1u64 << dgn.seed_len };
    let limit = seed_budget.min(total);
    let mut best: Option<BigRational> = None;
    let mut start = 0u64;
    while start < limit {
        let end = (start + SCAN_CHUNK).min(limit);
        let results = (start..end)
            .into_par_iter()
            .map(|j| {
                let seed = seed_from_index(j, dgn.seed_len);
                let table = table_from_bits(p, &nw_expand(f, dgn, &seed)?)?;
                let report = check_balance_exact(&table, p, verify)?;
                Ok((j, seed, table, report))
            })
            .collect::<Result<Vec<_>>>()?;
        for (j, seed, table, report) in results {
            if report.balanced {
                return Ok(Ok(NwFound { seed_index: j, seed, table, scanned: j + 1 }));
            }
            if best.as_ref().is_none_or(|b| report.worst_load < *b) {
                best = Some(report.worst_load);
            }
        }
        start = end;
    }
    Ok(Err(NwNotFound { scanned: limit, best_load: best }))
}

impl NwNotFound {
    pub fn best_load_string(&self) -> Option<String> {
        self.best_load.as_ref().map(ratio::format_rational)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(s: &str) -> Vec<bool> {
        s.bytes().map(|b| b == b'1').collect()
    }

    #[test]
    fn single_set_design() {
        let d = design_greedy(1, 3, 0, 5).unwrap();
        assert_eq!(d.seed_len, 3);
        assert_eq!(d.sets, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn greedy_reference_design() {
        let d = design_greedy(4, 2, 1, 4).unwrap();
        assert_eq!(d.seed_len, 4);
        assert_eq!(d.sets, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2]]);
        d.validate().unwrap();
    }

    #[test]
    fn vacuous_intersection_uses_all_subsets() {
        let d = design_greedy(10, 3, 3, 10).unwrap();
        // C(5, 3) = 10
        assert_eq!(d.seed_len, 5);
        d.validate().unwrap();
    }

    #[test]
    fn budget_too_small() {
        assert_eq!(design_greedy(4, 2, 0, 7), Err(Error::BudgetTooSmall { sets: 4, budget: 7 }));
        assert!(design_greedy(4, 2, 0, 8).is_ok());
        assert!(design_greedy(1, 3, 0, 2).is_err());
        assert!(design_greedy(0, 3, 0, 10).is_err());
    }

    #[test]
    fn parity_bits() {
        let f = HardFunction::parity(2);
        let d = Design { seed_len: 4, set_size: 2, max_intersect: 0, sets: vec![vec![0, 1], vec![2, 3]] };
        assert!(!nw_bit(&f, &d, &bits("1100"), 0).unwrap());
        assert!(nw_bit(&f, &d, &bits("0110"), 1).unwrap());
        assert_eq!(nw_expand(&f, &d, &bits("0110")).unwrap(), bits("11"));
        assert!(matches!(nw_bit(&f, &d, &bits("0110"), 2), Err(Error::IndexOutOfRange { .. })));
        assert!(nw_expand(&f, &d, &bits("011")).is_err());
    }

    #[test]
    fn bits_outside_all_sets_do_not_matter() {
        let f = HardFunction::random(2, 3);
        let d = Design { seed_len: 5, set_size: 2, max_intersect: 0, sets: vec![vec![0, 1], vec![3, 4]] };
        assert_eq!(nw_expand(&f, &d, &bits("10101")).unwrap(), nw_expand(&f, &d, &bits("10001")).unwrap());
    }

    #[test]
    fn seeds_count_in_lex_order() {
        assert_eq!(seed_from_index(0, 3), bits("000"));
        assert_eq!(seed_from_index(1, 3), bits("001"));
        assert_eq!(seed_from_index(6, 3), bits("110"));
        assert_eq!(seed_from_index(1, 70), [vec![false; 69], vec![true]].concat());
    }

    #[test]
    fn cells_are_big_endian() {
        let p = Params::with_sizes(1, 1, 1, 1, (2, 1), (1, 1)).unwrap();
        let t = table_from_bits(&p, &bits("0110")).unwrap();
        assert_eq!(t.cells(), &[0, 1, 1, 0]);
        let p = Params::with_sizes(2, 1, 2, 1, (2, 1), (1, 1)).unwrap();
        let t = table_from_bits(&p, &bits("0110000000001111")).unwrap();
        assert_eq!(&t.cells()[..2], &[1, 2]);
        assert_eq!(t.cells()[7], 3);
    }

    #[test]
    fn vacuous_balance_takes_the_zero_seed() {
        let p = Params::with_sizes(2, 1, 1, 1, (2, 1), (2, 1)).unwrap();
        let d = design_greedy(8, 2, 1, 16).unwrap();
        let f = HardFunction::random(2, 0);
        let found = nw_table_search(&p, &f, &d, 10, WorkBudget::default()).unwrap().unwrap();
        assert_eq!(found.seed_index, 0);
        assert_eq!(found.scanned, 1);
    }

    #[test]
    fn zero_budget_scans_nothing() {
        let p = Params::with_sizes(2, 1, 1, 1, (2, 1), (1, 1)).unwrap();
        let d = design_greedy(8, 2, 1, 16).unwrap();
        let f = HardFunction::parity(2);
        let nf = nw_table_search(&p, &f, &d, 0, WorkBudget::default()).unwrap().unwrap_err();
        assert_eq!(nf, NwNotFound { scanned: 0, best_load: None });
    }

    #[test]
    fn step_count_ignores_output_length() {
        let f = HardFunction::random(4, 1);
        let small = design_greedy(64, 4, 1, 200).unwrap();
        let large = design_greedy(1024, 4, 2, 400).unwrap();
        let s1 = seed_from_index(12345, small.seed_len);
        let s2 = seed_from_index(12345, large.seed_len);
        let (_, a) = nw_bit_counted(&f, &small, &s1, 5).unwrap();
        let (_, b) = nw_bit_counted(&f, &large, &s2, 1000).unwrap();
        assert_eq!(a, b);
    }
}
