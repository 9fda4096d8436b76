//! Beacon identifiers that stay unambiguous when transmitted in an endless loop.
//!
//! A beacon repeats its identifier without a synchronization symbol, so the
//! receiver sees an arbitrary rotation of it. Usable identifiers are therefore
//! the aperiodic binary necklaces of length 12, each stored by its
//! lexicographically smallest rotation.

use std::fmt;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Identifier length in bits.
pub const CODE_LEN: usize = 12;

const MASK: u16 = (1 << CODE_LEN) - 1;

/// Header line of the codebook file format.
pub const CODEBOOK_HEADER: &str = "# beacon-codebook v1";

/// Parses a string of exactly twelve `0`/`1` characters, most significant bit first.
pub fn parse_bits(s: &str) -> Result<u16> {
    if s.len() != CODE_LEN {
        return Err(Error::InvalidArgument(format!(
            "expected {CODE_LEN} bits, got {} characters in {s:?}",
            s.len()
        )));
    }
    let mut v = 0u16;
    for c in s.chars() {
        v = (v << 1)
            | match c {
                '0' => 0,
                '1' => 1,
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "invalid bit character {c:?} in {s:?}"
                    )))
                }
            };
    }
    Ok(v)
}

/// Packs a slice of twelve 0/1 values, most significant bit first.
pub fn pack_bits(bits: &[u8]) -> Result<u16> {
    if bits.len() != CODE_LEN {
        return Err(Error::InvalidArgument(format!(
            "expected {CODE_LEN} bits, got {}",
            bits.len()
        )));
    }
    let mut v = 0u16;
    for &b in bits {
        if b > 1 {
            return Err(Error::InvalidArgument(format!(
                "bit value {b} is not 0 or 1"
            )));
        }
        v = (v << 1) | b as u16;
    }
    Ok(v)
}

/// Cyclic left rotation of a 12-bit pattern by `k` positions.
pub fn rotate_left(pattern: u16, k: usize) -> u16 {
    let p = pattern & MASK;
    let k = k % CODE_LEN;
    if k == 0 {
        return p;
    }
    ((p << k) | (p >> (CODE_LEN - k))) & MASK
}

/// Lexicographically smallest rotation of a 12-bit pattern.
pub fn canonical_rotation(pattern: u16) -> u16 {
    (0..CODE_LEN)
        .map(|k| rotate_left(pattern, k))
        .min()
        .unwrap_or(0)
}

/// True iff some proper rotation of the pattern equals the pattern itself.
pub fn is_ambiguous(pattern: u16) -> bool {
    (1..CODE_LEN).any(|k| rotate_left(pattern, k) == pattern & MASK)
}

/// Slice form of [`is_ambiguous`]; rejects inputs that are not twelve bits long.
pub fn is_ambiguous_bits(bits: &[u8]) -> Result<bool> {
    pack_bits(bits).map(is_ambiguous)
}

/// A twelve-bit aperiodic identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Codeword {
    value: u16,
}

impl Codeword {
    /// Builds a codeword from its integer value, rejecting periodic patterns.
    pub fn new(value: u16) -> Result<Self> {
        if value > MASK {
            return Err(Error::InvalidArgument(format!(
                "{value} does not fit in {CODE_LEN} bits"
            )));
        }
        if is_ambiguous(value) {
            return Err(Error::InvalidArgument(format!(
                "{} is periodic under rotation",
                fmt_bits(value)
            )));
        }
        Ok(Codeword { value })
    }

    pub fn parse(s: &str) -> Result<Self> {
        Codeword::new(parse_bits(s)?)
    }

    /// The bit sequence read as a binary number.
    pub fn id_value(&self) -> u16 {
        self.value
    }

    /// Bit `i`, counting from the most significant end.
    pub fn bit(&self, i: usize) -> u8 {
        ((self.value >> (CODE_LEN - 1 - i % CODE_LEN)) & 1) as u8
    }

    pub fn bits(&self) -> [u8; CODE_LEN] {
        std::array::from_fn(|i| self.bit(i))
    }

    pub fn rotated(&self, k: usize) -> Codeword {
        Codeword {
            value: rotate_left(self.value, k),
        }
    }

    pub fn canonical(&self) -> Codeword {
        Codeword {
            value: canonical_rotation(self.value),
        }
    }

    /// True if `other` is a rotation of this codeword.
    pub fn is_rotation_of(&self, other: &Codeword) -> bool {
        canonical_rotation(self.value) == canonical_rotation(other.value)
    }
}

impl fmt::Display for Codeword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&fmt_bits(self.value))
    }
}

fn fmt_bits(v: u16) -> String {
    (0..CODE_LEN)
        .map(|i| {
            if (v >> (CODE_LEN - 1 - i)) & 1 == 1 {
                '1'
            } else {
                '0'
            }
        })
        .collect()
}

const NO_ENTRY: u16 = u16::MAX;

/// An ordered set of pairwise cyclically distinct codewords.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codebook {
    entries: Vec<Codeword>,
    version: String,
    // Maps every 12-bit pattern to the index of the entry it rotates into.
    lookup: Vec<u16>,
}

impl Codebook {
    /// Builds a codebook, sorting entries and rejecting rotation collisions.
    pub fn from_entries(mut entries: Vec<Codeword>, version: impl Into<String>) -> Result<Self> {
        entries.sort();
        let mut lookup = vec![NO_ENTRY; 1 << CODE_LEN];
        for (idx, c) in entries.iter().enumerate() {
            for k in 0..CODE_LEN {
                let slot = &mut lookup[rotate_left(c.value, k) as usize];
                if *slot != NO_ENTRY && *slot != idx as u16 {
                    return Err(Error::InvalidArgument(format!(
                        "{} collides with {} under rotation",
                        c, entries[*slot as usize]
                    )));
                }
                *slot = idx as u16;
            }
        }
        Ok(Codebook {
            entries,
            version: version.into(),
            lookup,
        })
    }

    pub fn empty() -> Self {
        Codebook {
            entries: Vec::new(),
            version: "v1".into(),
            lookup: vec![NO_ENTRY; 1 << CODE_LEN],
        }
    }

    pub fn entries(&self) -> &[Codeword] {
        &self.entries
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Index of the entry that `pattern` is a rotation of.
    pub fn index_of_rotation(&self, pattern: u16) -> Option<usize> {
        match self.lookup[(pattern & MASK) as usize] {
            NO_ENTRY => None,
            i => Some(i as usize),
        }
    }

    /// The stored codeword cyclically equivalent to `pattern`, if any.
    pub fn contains_cyclic(&self, pattern: u16) -> Option<Codeword> {
        self.index_of_rotation(pattern).map(|i| self.entries[i])
    }

    /// Writes the codebook in its text format.
    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(14 * (self.entries.len() + 2));
        s.push_str(CODEBOOK_HEADER);
        s.push('\n');
        for c in &self.entries {
            s.push_str(&c.to_string());
            s.push('\n');
        }
        s
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text).map_err(|msg| Error::format(path, msg))
    }

    /// Parses the text format; the error is a human-readable message.
    pub fn from_text(text: &str) -> std::result::Result<Self, String> {
        let mut lines = text.split('\n');
        if lines.next() != Some(CODEBOOK_HEADER) {
            return Err(format!("first line must be {CODEBOOK_HEADER:?}"));
        }
        let mut entries = Vec::new();
        for (n, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let c = Codeword::parse(line).map_err(|e| format!("line {}: {e}", n + 2))?;
            entries.push(c);
        }
        if !text.ends_with('\n') {
            return Err("file must end with a newline".into());
        }
        Codebook::from_entries(entries, "v1").map_err(|e| e.to_string())
    }
}

/// Lyndon words of length `n` over {0,1}, in lexicographic order.
///
/// Duval's iterative generator: it visits every Lyndon word of length at most
/// `n` in lexicographic order; words of length exactly `n` are the aperiodic
/// necklace representatives.
pub fn lyndon_words(n: usize) -> Vec<u32> {
    let mut out = Vec::new();
    let mut w: Vec<i8> = vec![-1];
    while let Some(last) = w.last_mut() {
        *last += 1;
        let m = w.len();
        if m == n {
            out.push(w.iter().fold(0u32, |v, &b| (v << 1) | b as u32));
        }
        while w.len() < n {
            w.push(w[w.len() - m]);
        }
        while w.last() == Some(&1) {
            w.pop();
        }
    }
    out
}

/// Every aperiodic 12-bit necklace, represented by its smallest rotation.
pub fn generate_codebook() -> Codebook {
    let entries = lyndon_words(CODE_LEN)
        .into_iter()
        .map(|v| Codeword { value: v as u16 })
        .collect();
    Codebook::from_entries(entries, "v1").expect("Lyndon words are rotation-distinct")
}
