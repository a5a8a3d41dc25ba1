//! Slow reference implementations, written without the crate's shortcuts.
#![allow(dead_code)]

use kxt_core::nwgen::{Design, HardFunction};
use kxt_core::{Params, Table, Table2};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Fixed-point numbers `v / 10^digits` on plain integers.
pub struct Fixed {
    pub digits: u32,
    pub scale: BigInt,
}

impl Fixed {
    pub fn new(digits: u32) -> Self {
        Fixed { digits, scale: BigInt::from(10).pow(digits) }
    }

    pub fn from_rational(&self, r: &BigRational) -> BigInt {
        (&self.scale * r.numer()).div_floor(r.denom())
    }

    pub fn mul_rational(&self, v: &BigInt, r: &BigRational) -> BigInt {
        (v * r.numer()).div_floor(r.denom())
    }

    /// `atanh(p/q)` for `|p/q| < 1` by its odd power series.
    fn atanh(&self, p: &BigInt, q: &BigInt) -> BigInt {
        let mut sum = BigInt::zero();
        let mut pn = p.clone();
        let mut pd = q.clone();
        let (p2, q2) = (p * p, q * q);
        let mut k = 1u32;
        loop {
            let term = (&self.scale * &pn) / (&pd * k);
            if term.is_zero() {
                return sum;
            }
            sum += term;
            pn *= &p2;
            pd *= &q2;
            k += 2;
        }
    }

    pub fn ln2(&self) -> BigInt {
        self.atanh(&BigInt::from(1), &BigInt::from(3)) * 2
    }

    /// Natural log of a positive rational. Halves or doubles into
    /// `[2/3, 4/3]`, then `ln y = 2·atanh((y-1)/(y+1))`.
    pub fn ln(&self, r: &BigRational) -> BigInt {
        assert!(r.is_positive());
        let mut y = r.clone();
        let mut e = 0i64;
        let two = rat(2, 1);
        while y > rat(4, 3) {
            y /= &two;
            e += 1;
        }
        while y < rat(2, 3) {
            y *= &two;
            e -= 1;
        }
        let z = (&y - BigRational::one()) / (&y + BigRational::one());
        self.atanh(z.numer(), z.denom()) * 2 + self.ln2() * e
    }

    /// Parses a plain decimal such as `-12.5` into this scale, truncating.
    pub fn parse_decimal(&self, s: &str) -> BigInt {
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        let mut frac: String = frac.chars().take(self.digits as usize).collect();
        while frac.len() < self.digits as usize {
            frac.push('0');
        }
        let v: BigInt = format!("{int}{frac}").parse().unwrap();
        if neg {
            -v
        } else {
            v
        }
    }

    /// True when `a` and `b` agree to `sig` significant digits.
    pub fn agree(&self, a: &BigInt, b: &BigInt, sig: u32) -> bool {
        let diff = (a - b).abs() * BigInt::from(10).pow(sig);
        diff <= a.abs().max(BigInt::from(1))
    }
}

/// Union bound `K ln N + (M/D)(1 + ln D) - Δ' ln(Δ'/3) K N1/D`, summed on
/// fixed-point integers.
pub fn union_bound(fx: &Fixed, n: u32, n1: u32, m: u32, k: u64, d: &BigRational, delta: &BigRational) -> BigInt {
    let dp = delta - BigRational::one();
    let k = BigRational::from_integer(BigInt::from(k));
    let rows = fx.mul_rational(&fx.ln2(), &(&k * rat(n as i64, 1)));
    let colors = BigRational::from_integer(BigInt::from(1u64 << m)) / d;
    let colors_term = fx.mul_rational(&(&fx.scale + fx.ln(d)), &colors);
    let coef = &dp * &k * BigRational::from_integer(BigInt::from(1u64 << n1)) / d;
    let chernoff = fx.mul_rational(&fx.ln(&(&dp / rat(3, 1))), &coef);
    rows + colors_term - chernoff
}

/// `(Kx + Ky) n ln 2 + (M/D)(1 + ln D) - Kx Ky/(3D)`.
pub fn union_bound_2src(fx: &Fixed, n: u32, m: u32, kx: u64, ky: u64, d: &BigRational) -> BigInt {
    let rows = fx.mul_rational(&fx.ln2(), &rat(((kx + ky) * n as u64) as i64, 1));
    let colors = BigRational::from_integer(BigInt::from(1u64 << m)) / d;
    let colors_term = fx.mul_rational(&(&fx.scale + fx.ln(d)), &colors);
    let rect = fx.from_rational(&(rat((kx * ky) as i64, 3) / d));
    rows + colors_term - rect
}

fn min_heavy(colors: u64, d: &BigRational) -> u64 {
    let q = BigRational::from_integer(BigInt::from(colors)) / d;
    let c = q.ceil().to_integer();
    u64::try_from(c).unwrap().max(1)
}

/// Worst `count / (Δ·|A|/M·|B|·N1)` over every `|B| >= K`, `|A| >= ⌈M/D⌉`,
/// by direct enumeration of both masks.
pub fn worst_load_brute(t: &Table, p: &Params) -> BigRational {
    let shape = t.shape();
    let (rows, cols, colors) = (shape.rows(), shape.cols(), shape.colors());
    let a_min = min_heavy(colors, p.d());
    let mut worst = BigRational::zero();
    for amask in 1u64..(1 << colors) {
        let a = amask.count_ones() as u64;
        if a < a_min {
            continue;
        }
        for bmask in 1u64..(1 << rows) {
            let b = bmask.count_ones() as u64;
            if b < p.k_rows() {
                continue;
            }
            let mut count = 0u64;
            for x in 0..rows {
                if bmask >> x & 1 == 0 {
                    continue;
                }
                for y in 0..cols {
                    if amask >> t.get(x, y) & 1 == 1 {
                        count += 1;
                    }
                }
            }
            let bound = p.delta() * rat((a * b * cols as u64) as i64, colors as i64);
            let load = rat(count as i64, 1) / bound;
            if load > worst {
                worst = load;
            }
        }
    }
    worst
}

/// Two-source worst load over every `|B1| >= Kx`, `|B2| >= Ky`,
/// `|A| >= ⌈M/D⌉`, enumerating all three masks.
pub fn worst_load2_brute(t: &Table2, kx: u64, ky: u64, d: &BigRational, factor: &BigRational) -> BigRational {
    let side = t.side();
    let colors = t.colors();
    let a_min = min_heavy(colors, d).min(colors);
    let mut worst = BigRational::zero();
    for amask in 1u64..(1 << colors) {
        let a = amask.count_ones() as u64;
        if a < a_min {
            continue;
        }
        for cmask in 1u64..(1 << side) {
            let bc = cmask.count_ones() as u64;
            if bc < ky {
                continue;
            }
            let per_row: Vec<u64> = (0..side)
                .map(|x| {
                    (0..side)
                        .filter(|&y| cmask >> y & 1 == 1 && amask >> t.get(x, y) & 1 == 1)
                        .count() as u64
                })
                .collect();
            for rmask in 1u64..(1 << side) {
                let br = rmask.count_ones() as u64;
                if br < kx {
                    continue;
                }
                let count: u64 = (0..side).filter(|&x| rmask >> x & 1 == 1).map(|x| per_row[x]).sum();
                let bound = factor * rat((a * br * bc) as i64, colors as i64);
                let load = rat(count as i64, 1) / bound;
                if load > worst {
                    worst = load;
                }
            }
        }
    }
    worst
}

/// Generator output computed bit by bit from the definition.
pub fn expand_reference(f: &HardFunction, dgn: &Design, seed: &[bool]) -> Vec<bool> {
    dgn.sets
        .iter()
        .map(|set| {
            let mut idx = 0usize;
            for (j, &pos) in set.iter().enumerate() {
                if seed[pos as usize] {
                    idx |= 1 << (set.len() - 1 - j);
                }
            }
            f.truth_table[idx]
        })
        .collect()
}

/// First seed index, scanning all `2^ℓ` seeds in order, whose expansion
/// parses to a table that the brute-force check accepts.
pub fn first_balanced_seed(p: &Params, f: &HardFunction, dgn: &Design) -> Option<u64> {
    let len = dgn.seed_len;
    let m = p.shape.m as usize;
    for j in 0u64..(1 << len) {
        let seed: Vec<bool> = (0..len).map(|i| j >> (len - 1 - i) & 1 == 1).collect();
        let bits = expand_reference(f, dgn, &seed);
        let cells: Vec<u32> = bits
            .chunks(m)
            .map(|c| c.iter().enumerate().map(|(i, &b)| (b as u32) << (m - 1 - i)).sum())
            .collect();
        let t = Table::new(p.shape, cells).unwrap();
        if worst_load_brute(&t, p) <= BigRational::one() {
            return Some(j);
        }
    }
    None
}
