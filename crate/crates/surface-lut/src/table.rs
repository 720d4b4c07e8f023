//! Classical lookup tables: 2^k entries of m bits each.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// A lookup table with K entries of m bits (m <= 64) addressed by k bits.
/// K need not be a power of two; addresses at or beyond K read as zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitTable {
    k: usize,
    m: usize,
    rows: Vec<u64>,
}

#[derive(Debug, Error)]
pub enum TableError {
    #[error("entry count {0} does not fit in {1} address bits")]
    BadLen(usize, usize),
    #[error("output width {0} exceeds 64 bits")]
    TooWide(usize),
    #[error("line {0}: rows must all have the same width")]
    RaggedRow(usize),
    #[error("line {0}: expected only '0' and '1' characters")]
    BadChar(usize),
    #[error("empty table")]
    Empty,
}

fn ceil_log2(n: usize) -> usize {
    (usize::BITS - (n - 1).leading_zeros()) as usize
}

impl BitTable {
    pub fn new(k: usize, m: usize, rows: Vec<u64>) -> Result<Self, TableError> {
        if m > 64 {
            return Err(TableError::TooWide(m));
        }
        if rows.is_empty() {
            return Err(TableError::Empty);
        }
        if k >= 64 || rows.len() > 1 << k {
            return Err(TableError::BadLen(rows.len(), k));
        }
        Ok(BitTable { k, m, rows })
    }

    pub fn from_fn(k: usize, m: usize, f: impl Fn(usize) -> u64) -> Self {
        let mask = if m == 64 { u64::MAX } else { (1u64 << m) - 1 };
        let rows = (0..1usize << k).map(|x| f(x) & mask).collect();
        BitTable { k, m, rows }
    }

    pub fn random(k: usize, m: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mask = if m == 64 { u64::MAX } else { (1u64 << m) - 1 };
        let rows = (0..1usize << k).map(|_| rng.gen::<u64>() & mask).collect();
        BitTable { k, m, rows }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of defined entries K (addresses at or beyond K read as zero).
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row for address `x`, as a word with output bit j at position j.
    pub fn get(&self, x: usize) -> u64 {
        self.rows.get(x).copied().unwrap_or(0)
    }

    pub fn bit(&self, x: usize, j: usize) -> bool {
        self.get(x) >> j & 1 == 1
    }

    /// Sub-table restricted to addresses whose most significant address bit
    /// equals `msb`. Undefined addresses stay zero-valued.
    pub fn split_msb(&self, msb: bool) -> BitTable {
        assert!(self.k >= 1);
        let half = 1usize << (self.k - 1);
        let rows = if msb {
            if self.rows.len() > half {
                self.rows[half..].to_vec()
            } else {
                vec![0]
            }
        } else {
            self.rows[..self.rows.len().min(half)].to_vec()
        };
        BitTable { k: self.k - 1, m: self.m, rows }
    }

    /// Parses the text form: one row per line, most significant output bit
    /// first. `#` starts a comment; blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self, TableError> {
        let mut rows = Vec::new();
        let mut width: Option<usize> = None;
        for (ln, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            match width {
                None => {
                    if line.len() > 64 {
                        return Err(TableError::TooWide(line.len()));
                    }
                    width = Some(line.len());
                }
                Some(w) if w != line.len() => return Err(TableError::RaggedRow(ln + 1)),
                _ => {}
            }
            let mut word = 0u64;
            for (i, ch) in line.chars().enumerate() {
                let bitpos = line.len() - 1 - i;
                match ch {
                    '0' => {}
                    '1' => word |= 1 << bitpos,
                    _ => return Err(TableError::BadChar(ln + 1)),
                }
            }
            rows.push(word);
        }
        let m = width.ok_or(TableError::Empty)?;
        let k = ceil_log2(rows.len());
        Ok(BitTable { k, m, rows })
    }

    pub fn dump(&self) -> String {
        let mut s = String::new();
        for &row in &self.rows {
            for j in (0..self.m).rev() {
                s.push(if row >> j & 1 == 1 { '1' } else { '0' });
            }
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trip() {
        let text = "# demo\n101\n000\n\n111\n010  # trailing comment\n";
        let t = BitTable::parse(text).unwrap();
        assert_eq!((t.k(), t.m()), (2, 3));
        assert_eq!(t.get(0), 0b101);
        assert_eq!(t.get(3), 0b010);
        let t2 = BitTable::parse(&t.dump()).unwrap();
        assert_eq!(t, t2);
    }

    #[test]
    fn split_msb_halves() {
        let t = BitTable::from_fn(3, 4, |x| x as u64);
        let lo = t.split_msb(false);
        let hi = t.split_msb(true);
        assert_eq!(lo.get(2), 2);
        assert_eq!(hi.get(2), 6);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(BitTable::parse("10\n1\n"), Err(TableError::RaggedRow(2))));
        assert!(matches!(BitTable::parse("1x\n"), Err(TableError::BadChar(1))));
        assert!(matches!(BitTable::parse("# only comments\n"), Err(TableError::Empty)));
        assert!(matches!(BitTable::new(1, 2, vec![0, 1, 2]), Err(TableError::BadLen(3, 1))));
    }

    #[test]
    fn partial_table_zero_pads() {
        let t = BitTable::parse("11\n10\n01\n").unwrap();
        assert_eq!((t.k(), t.m(), t.len()), (2, 2, 3));
        assert_eq!(t.get(3), 0);
        assert_eq!(t.split_msb(true).get(1), 0);
    }
}
