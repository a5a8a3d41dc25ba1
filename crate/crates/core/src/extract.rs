//! Extraction over flat sources.
//!
//! A flat source is the uniform distribution on a row set `S`, with
//! min-entropy `log2 |S|`. The seed is uniform on `[N1]`. A caller-supplied
//! color set `A` plays the adversarial "compressible outputs" set; the
//! heaviest colors of an output distribution play the same role when no set
//! is given.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ratio::{self, serialize_rational, serialize_rationals};
use crate::table::Table;

/// Uniform distribution over a nonempty set of rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatSource {
    support: Vec<u32>,
}

impl FlatSource {
    /// Sorts and deduplicates `rows`; rejects empty or out-of-range input.
    pub fn new(mut rows: Vec<u32>, row_count: usize) -> Result<Self> {
        rows.sort_unstable();
        rows.dedup();
        if rows.is_empty() {
            return Err(Error::PreconditionViolated("flat source must be nonempty".into()));
        }
        if let Some(&x) = rows.iter().find(|&&x| x as usize >= row_count) {
            return Err(Error::IndexOutOfRange { what: "row", index: x as u64, limit: row_count as u64 });
        }
        Ok(FlatSource { support: rows })
    }

    pub fn support(&self) -> &[u32] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn min_entropy_bits(&self) -> f64 {
        (self.support.len() as f64).log2()
    }
}

/// Output distribution with a common denominator: `P[z] = counts[z] / total`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputDist {
    counts: Vec<u64>,
    total: u64,
}

impl OutputDist {
    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::PreconditionViolated("distribution has no mass".into()));
        }
        Ok(OutputDist { counts, total })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn probabilities(&self) -> Vec<BigRational> {
        self.counts.iter().map(|&c| ratio::ratio_u64(c, self.total)).collect()
    }

    pub fn view(&self) -> DistView {
        DistView { probabilities: self.probabilities() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DistView {
    #[serde(serialize_with = "serialize_rationals")]
    pub probabilities: Vec<BigRational>,
}

fn color_mask(t: &Table, colors: &[u32]) -> Result<Vec<bool>> {
    let m = t.shape().colors();
    if colors.is_empty() {
        return Err(Error::PreconditionViolated("color set must be nonempty".into()));
    }
    let mut mask = vec![false; m as usize];
    for &c in colors {
        if c as u64 >= m {
            return Err(Error::IndexOutOfRange { what: "color", index: c as u64, limit: m });
        }
        mask[c as usize] = true;
    }
    Ok(mask)
}

fn check_row(t: &Table, x: u32) -> Result<()> {
    let rows = t.shape().rows() as u64;
    if x as u64 >= rows {
        return Err(Error::IndexOutOfRange { what: "row", index: x as u64, limit: rows });
    }
    Ok(())
}

/// `E(x, y)`.
pub fn extract(t: &Table, x: u32, y: u32) -> Result<u32> {
    check_row(t, x)?;
    let cols = t.shape().cols() as u64;
    if y as u64 >= cols {
        return Err(Error::IndexOutOfRange { what: "seed", index: y as u64, limit: cols });
    }
    Ok(t.get(x as usize, y as usize))
}

/// Rows holding strictly more than `factor·|A|/M·N1` A-cells.
pub fn count_bad_rows(t: &Table, colors: &[u32], factor: &BigRational) -> Result<Vec<u32>> {
    let mask = color_mask(t, colors)?;
    let a = mask.iter().filter(|&&b| b).count() as u64;
    let shape = t.shape();
    let bound = factor * ratio::ratio_u64(a * shape.cols() as u64, shape.colors());
    Ok((0..shape.rows())
        .filter(|&x| {
            let count = t.row(x).iter().filter(|&&c| mask[c as usize]).count();
            BigRational::from_integer(BigInt::from(count)) > bound
        })
        .map(|x| x as u32)
        .collect())
}

/// Seeds `y` with `E(x, y) ∉ A`.
pub fn good_seeds(t: &Table, x: u32, colors: &[u32]) -> Result<Vec<u32>> {
    check_row(t, x)?;
    let mask = color_mask(t, colors)?;
    Ok(t.row(x as usize)
        .iter()
        .enumerate()
        .filter(|(_, &c)| !mask[c as usize])
        .map(|(y, _)| y as u32)
        .collect())
}

/// The least good seed of row `x` and its output: the advice for `x`.
pub fn advice_extract(t: &Table, x: u32, colors: &[u32]) -> Result<(u32, u32)> {
    let seeds = good_seeds(t, x, colors)?;
    let y = *seeds.first().ok_or(Error::NoGoodSeed { row: x })?;
    Ok((y, t.get(x as usize, y as usize)))
}

/// Distribution of `E(X, Y)` for `X` flat on `s` and `Y` uniform.
pub fn output_distribution(t: &Table, s: &FlatSource) -> Result<OutputDist> {
    for &x in s.support() {
        check_row(t, x)?;
    }
    let mut counts = vec![0u64; t.shape().colors() as usize];
    for &x in s.support() {
        for &c in t.row(x as usize) {
            counts[c as usize] += 1;
        }
    }
    OutputDist::from_counts(counts)
}

/// Largest total probability of any `set_size` colors.
pub fn heavy_set_mass(dist: &OutputDist, set_size: usize) -> Result<BigRational> {
    if set_size == 0 || set_size > dist.counts.len() {
        return Err(Error::PreconditionViolated(format!(
            "set size {set_size} outside [1, {}]",
            dist.counts.len()
        )));
    }
    let mut sorted = dist.counts.clone();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let top: u64 = sorted[..set_size].iter().sum();
    Ok(ratio::ratio_u64(top, dist.total))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothEntropy {
    pub bits: f64,
    /// The probability cap `2^-bits`, exact.
    #[serde(serialize_with = "serialize_rational")]
    pub cap: BigRational,
    #[serde(serialize_with = "serialize_rational")]
    pub eps: BigRational,
}

/// Smooth min-entropy under the cap-and-trim convention: the largest `h`
/// such that lowering every probability above `2^-h` to `2^-h` removes at
/// most `eps` of mass. No renormalization.
pub fn smooth_min_entropy(dist: &OutputDist, eps: &BigRational) -> Result<SmoothEntropy> {
    if eps.is_negative() || *eps >= BigRational::one() {
        return Err(Error::PreconditionViolated(format!("eps = {eps} outside [0, 1)")));
    }
    let mut sorted = dist.counts.clone();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let total = dist.total;
    // With the top j probabilities capped at c, the trimmed mass is
    // prefix_j - j·c; the smallest admissible cap solves prefix_j - j·c = eps
    // on the first segment where that c stays above p_{j+1}.
    let mut prefix = 0u64;
    let mut cap = None;
    for j in 0..sorted.len() {
        prefix += sorted[j];
        let c = (ratio::ratio_u64(prefix, total) - eps) / BigRational::from_integer(BigInt::from(j + 1));
        let next = sorted.get(j + 1).copied().unwrap_or(0);
        if c >= ratio::ratio_u64(next, total) {
            cap = Some(c);
            break;
        }
    }
    let cap = cap.expect("the last segment always admits a cap");
    debug_assert!(cap > BigRational::zero());
    Ok(SmoothEntropy { bits: -ratio::log2(&cap), cap, eps: eps.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Shape;
    use crate::ratio::ratio_u64;

    fn row_table(row: &[u32], m: u32) -> Table {
        let n1 = row.len().trailing_zeros();
        Table::from_fn(Shape::new(1, n1, m).unwrap(), |_, y| row[y]).unwrap()
    }

    fn equidistributed(n: u32, m: u32) -> Table {
        Table::from_fn(Shape::new(n, m, m).unwrap(), |_, y| y as u32).unwrap()
    }

    #[test]
    fn extract_looks_up_cells() {
        let t = equidistributed(3, 2);
        assert_eq!(extract(&t, 5, 3).unwrap(), 3);
        assert!(matches!(extract(&t, 8, 0), Err(Error::IndexOutOfRange { what: "row", .. })));
        assert!(matches!(extract(&t, 0, 4), Err(Error::IndexOutOfRange { what: "seed", .. })));
    }

    #[test]
    fn bad_rows_of_constant_table() {
        let t = Table::from_fn(Shape::new(2, 1, 1).unwrap(), |_, _| 0).unwrap();
        assert_eq!(count_bad_rows(&t, &[0], &BigRational::one()).unwrap(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn equidistributed_rows_sit_on_the_bound() {
        let t = equidistributed(3, 2);
        for a in [vec![0], vec![1, 3], vec![0, 1, 2]] {
            assert!(count_bad_rows(&t, &a, &BigRational::one()).unwrap().is_empty());
        }
    }

    #[test]
    fn good_seeds_and_advice() {
        let t = row_table(&[0, 1, 2, 3], 2);
        assert_eq!(good_seeds(&t, 0, &[0]).unwrap(), vec![1, 2, 3]);
        assert!(good_seeds(&t, 0, &[0, 1, 2, 3]).unwrap().is_empty());
        assert_eq!(advice_extract(&t, 0, &[0]).unwrap(), (1, 1));
        assert_eq!(advice_extract(&t, 0, &[0, 1, 2, 3]), Err(Error::NoGoodSeed { row: 0 }));
        assert!(good_seeds(&t, 0, &[]).is_err());
    }

    #[test]
    fn single_row_distribution() {
        let t = row_table(&[0, 1, 0, 1], 1);
        let s = FlatSource::new(vec![0], 2).unwrap();
        let d = output_distribution(&t, &s).unwrap();
        assert_eq!(d.probabilities(), vec![ratio_u64(1, 2), ratio_u64(1, 2)]);
    }

    #[test]
    fn equidistributed_output_is_uniform() {
        let t = equidistributed(3, 2);
        let s = FlatSource::new(vec![1, 4, 6], 8).unwrap();
        let d = output_distribution(&t, &s).unwrap();
        assert!(d.probabilities().iter().all(|p| *p == ratio_u64(1, 4)));
        assert_eq!(heavy_set_mass(&d, 3).unwrap(), ratio_u64(3, 4));
        let h = smooth_min_entropy(&d, &BigRational::zero()).unwrap();
        assert_eq!(h.bits, 2.0);
    }

    #[test]
    fn point_mass() {
        let d = OutputDist::from_counts(vec![0, 5, 0, 0]).unwrap();
        assert_eq!(heavy_set_mass(&d, 1).unwrap(), BigRational::one());
        let h = smooth_min_entropy(&d, &BigRational::zero()).unwrap();
        assert_eq!(h.bits, 0.0);
        assert!(heavy_set_mass(&d, 0).is_err());
        assert!(heavy_set_mass(&d, 5).is_err());
    }

    #[test]
    fn cap_trims_exactly_eps() {
        let d = OutputDist::from_counts(vec![2, 1, 1, 0]).unwrap();
        let h = smooth_min_entropy(&d, &ratio_u64(1, 4)).unwrap();
        assert_eq!(h.cap, ratio_u64(1, 4));
        assert_eq!(h.bits, 2.0);
        assert!(smooth_min_entropy(&d, &BigRational::one()).is_err());
    }

    #[test]
    fn cap_can_fall_inside_a_segment() {
        // (1/2, 1/4, 1/4, 0) with eps = 1/8: cap 3/8 trims 1/8 from the top
        let d = OutputDist::from_counts(vec![2, 1, 1, 0]).unwrap();
        let h = smooth_min_entropy(&d, &ratio_u64(1, 8)).unwrap();
        assert_eq!(h.cap, ratio_u64(3, 8));
    }

    #[test]
    fn flat_source_validation() {
        assert!(FlatSource::new(vec![], 4).is_err());
        assert!(FlatSource::new(vec![4], 4).is_err());
        assert_eq!(FlatSource::new(vec![3, 1, 3], 4).unwrap().support(), &[1, 3]);
    }
}
