//! Color tables and the KXTB binary format.
//!
//! Layout: magic `KXTB`, version `0x01`, kind (`0x01` one-source, `0x02`
//! two-source), then `n`, `n1`, `m` as single bytes (`n1 = n` for
//! two-source tables), then the cells in row-major order, each as
//! `⌈m/8⌉` little-endian bytes.

use crate::error::{Error, Result};
use crate::params::Shape;

pub const MAGIC: &[u8; 4] = b"KXTB";
pub const VERSION: u8 = 0x01;
pub const KIND_ONE_SOURCE: u8 = 0x01;
pub const KIND_TWO_SOURCE: u8 = 0x02;
const HEADER_LEN: usize = 9;

/// One-source table `E: [N] x [N1] -> [M]`, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Table {
    shape: Shape,
    cells: Vec<u32>,
}

impl Table {
    pub fn new(shape: Shape, cells: Vec<u32>) -> Result<Self> {
        shape.validate()?;
        check_cells(&shape, &cells)?;
        Ok(Table { shape, cells })
    }

    /// Builds a table from a cell function `f(row, col)`.
    pub fn from_fn(shape: Shape, mut f: impl FnMut(usize, usize) -> u32) -> Result<Self> {
        shape.validate()?;
        let mut cells = Vec::with_capacity(shape.cells());
        for x in 0..shape.rows() {
            for y in 0..shape.cols() {
                cells.push(f(x, y));
            }
        }
        Self::new(shape, cells)
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn cells(&self) -> &[u32] {
        &self.cells
    }

    pub fn row(&self, x: usize) -> &[u32] {
        let w = self.shape.cols();
        &self.cells[x * w..(x + 1) * w]
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.cells[x * self.shape.cols() + y]
    }

    /// Per-row color counts, `hist[x * M + c]`.
    pub fn row_histograms(&self) -> Vec<u32> {
        let colors = self.shape.colors() as usize;
        let mut hist = vec![0u32; self.shape.rows() * colors];
        for x in 0..self.shape.rows() {
            for &c in self.row(x) {
                hist[x * colors + c as usize] += 1;
            }
        }
        hist
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        encode(KIND_ONE_SOURCE, &self.shape, &self.cells)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        match decode(bytes)? {
            AnyTable::One(t) => Ok(t),
            AnyTable::Two(_) => Err(Error::MalformedHeader(
                "expected a one-source table, found two-source".into(),
            )),
        }
    }
}

/// Two-source table `E: [N] x [N] -> [M]`, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Table2 {
    shape: Shape,
    cells: Vec<u32>,
}

impl Table2 {
    pub fn new(n: u32, m: u32, cells: Vec<u32>) -> Result<Self> {
        let shape = Shape::new(n, n, m)?;
        check_cells(&shape, &cells)?;
        Ok(Table2 { shape, cells })
    }

    pub fn from_fn(n: u32, m: u32, mut f: impl FnMut(usize, usize) -> u32) -> Result<Self> {
        let side = 1usize << n;
        let mut cells = Vec::with_capacity(side * side);
        for x in 0..side {
            for y in 0..side {
                cells.push(f(x, y));
            }
        }
        Self::new(n, m, cells)
    }

    pub fn n(&self) -> u32 {
        self.shape.n
    }

    pub fn m(&self) -> u32 {
        self.shape.m
    }

    pub fn side(&self) -> usize {
        self.shape.rows()
    }

    pub fn colors(&self) -> u64 {
        self.shape.colors()
    }

    pub fn cells(&self) -> &[u32] {
        &self.cells
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.cells[x * self.side() + y]
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        encode(KIND_TWO_SOURCE, &self.shape, &self.cells)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        match decode(bytes)? {
            AnyTable::Two(t) => Ok(t),
            AnyTable::One(_) => Err(Error::MalformedHeader(
                "expected a two-source table, found one-source".into(),
            )),
        }
    }
}

/// Either kind of table, as read from a KXTB stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnyTable {
    One(Table),
    Two(Table2),
}

fn check_cells(shape: &Shape, cells: &[u32]) -> Result<()> {
    if cells.len() != shape.cells() {
        return Err(Error::InvalidParams(format!(
            "table needs {} cells, got {}",
            shape.cells(),
            cells.len()
        )));
    }
    let colors = shape.colors();
    if let Some((index, &value)) = cells.iter().enumerate().find(|(_, &c)| c as u64 >= colors) {
        return Err(Error::CellOutOfRange { index, value: value as u64, colors });
    }
    Ok(())
}

fn cell_width(m: u32) -> usize {
    m.div_ceil(8) as usize
}

fn encode(kind: u8, shape: &Shape, cells: &[u32]) -> Vec<u8> {
    let w = cell_width(shape.m);
    let mut out = Vec::with_capacity(HEADER_LEN + cells.len() * w);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[VERSION, kind, shape.n as u8, shape.n1 as u8, shape.m as u8]);
    for &c in cells {
        out.extend_from_slice(&c.to_le_bytes()[..w]);
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<AnyTable> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::MalformedHeader(format!(
            "{} bytes is shorter than the {HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::MalformedHeader(format!("bad magic {:02x?}", &bytes[..4])));
    }
    if bytes[4] != VERSION {
        return Err(Error::MalformedHeader(format!("unsupported version {}", bytes[4])));
    }
    let kind = bytes[5];
    let (n, n1, m) = (bytes[6] as u32, bytes[7] as u32, bytes[8] as u32);
    match kind {
        KIND_ONE_SOURCE => {}
        KIND_TWO_SOURCE if n1 == n => {}
        KIND_TWO_SOURCE => {
            return Err(Error::MalformedHeader(format!(
                "two-source table with n = {n} but n1 = {n1}"
            )))
        }
        other => return Err(Error::MalformedHeader(format!("unknown kind {other:#04x}"))),
    }
    let shape = Shape::new(n, n1, m).map_err(|e| Error::MalformedHeader(e.to_string()))?;
    let w = cell_width(m);
    let payload = &bytes[HEADER_LEN..];
    let expected = shape.cells() * w;
    if payload.len() < expected {
        return Err(Error::TruncatedPayload { expected, actual: payload.len() });
    }
    if payload.len() > expected {
        return Err(Error::MalformedHeader(format!(
            "{} trailing bytes after payload",
            payload.len() - expected
        )));
    }
    let colors = shape.colors();
    let mut cells = Vec::with_capacity(shape.cells());
    for (index, chunk) in payload.chunks_exact(w).enumerate() {
        let mut buf = [0u8; 4];
        buf[..w].copy_from_slice(chunk);
        let value = u32::from_le_bytes(buf);
        if value as u64 >= colors {
            return Err(Error::CellOutOfRange { index, value: value as u64, colors });
        }
        cells.push(value);
    }
    Ok(match kind {
        KIND_ONE_SOURCE => AnyTable::One(Table { shape, cells }),
        _ => AnyTable::Two(Table2 { shape, cells }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_by_two() -> Table {
        Table::new(Shape::new(1, 1, 1).unwrap(), vec![0, 1, 1, 0]).unwrap()
    }

    #[test]
    fn round_trips_small_table() {
        let t = two_by_two();
        let bytes = t.to_bytes();
        assert_eq!(&bytes[..9], b"KXTB\x01\x01\x01\x01\x01");
        assert_eq!(Table::from_bytes(&bytes).unwrap(), t);
    }

    #[test]
    fn wrong_magic_is_malformed() {
        let mut bytes = two_by_two().to_bytes();
        bytes[0] = b'Q';
        assert!(matches!(Table::from_bytes(&bytes), Err(Error::MalformedHeader(_))));
    }

    #[test]
    fn short_payload_is_truncated() {
        let bytes = two_by_two().to_bytes();
        let err = Table::from_bytes(&bytes[..bytes.len() - 1]).unwrap_err();
        assert_eq!(err, Error::TruncatedPayload { expected: 4, actual: 3 });
    }

    #[test]
    fn out_of_range_cell_is_rejected() {
        let mut bytes = two_by_two().to_bytes();
        bytes[10] = 2;
        assert!(matches!(
            Table::from_bytes(&bytes),
            Err(Error::CellOutOfRange { index: 1, value: 2, colors: 2 })
        ));
    }

    #[test]
    fn multi_byte_cells_are_little_endian() {
        let shape = Shape::new(1, 1, 12).unwrap();
        let t = Table::new(shape, vec![0x0abc, 1, 2, 0x0fff]).unwrap();
        let bytes = t.to_bytes();
        assert_eq!(&bytes[9..11], &[0xbc, 0x0a]);
        assert_eq!(bytes.len(), 9 + 8);
        assert_eq!(Table::from_bytes(&bytes).unwrap(), t);
    }

    #[test]
    fn kinds_are_distinguished() {
        let t2 = Table2::new(1, 1, vec![0, 1, 1, 0]).unwrap();
        let bytes = t2.to_bytes();
        assert_eq!(bytes[5], KIND_TWO_SOURCE);
        assert!(Table::from_bytes(&bytes).is_err());
        assert_eq!(Table2::from_bytes(&bytes).unwrap(), t2);
    }

    fn any_table() -> impl Strategy<Value = Table> {
        (1u32..=6, 1u32..=6, 1u32..=6)
            .prop_filter("fits", |(n, n1, _)| n + n1 <= 10)
            .prop_flat_map(|(n, n1, m)| {
                let shape = Shape::new(n, n1, m).unwrap();
                proptest::collection::vec(0u32..(1 << m), shape.cells())
                    .prop_map(move |cells| Table::new(shape, cells).unwrap())
            })
    }

    proptest! {
        #[test]
        fn serialization_round_trip(t in any_table()) {
            prop_assert_eq!(Table::from_bytes(&t.to_bytes()).unwrap(), t);
        }
    }
}
