//! Box-shaped patterns, window extraction and window codes.
//!
//! A pattern is stored translation-normalized: symbols are laid out in
//! lexicographic order of the box (first axis most significant). When a pattern
//! is addressed by absolute coordinates it is understood to sit with its minimal
//! point at `(1, ..., 1)`, matching the host cube `F_k = [1, k]^d`.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, SftError};
use crate::geometry::{splat, sub, Cube, Dim, Point, MAX_DIM};

/// Largest window table an allowed set may index (`|A|^(n^d)` entries).
pub const WINDOW_TABLE_LIMIT: u64 = 1 << 28;

/// Exhaustive enumeration budget for pattern histograms.
pub const ENUMERATION_LIMIT: u64 = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Alphabet(u32);

impl Alphabet {
    pub const BINARY: Alphabet = Alphabet(2);

    pub fn new(size: u32) -> Result<Alphabet> {
        if !(2..=255).contains(&size) {
            return domain(format!("alphabet size {size} outside 2..=255"));
        }
        Ok(Alphabet(size))
    }

    #[inline]
    pub fn size(self) -> u32 {
        self.0
    }
}

impl TryFrom<u32> for Alphabet {
    type Error = SftError;
    fn try_from(v: u32) -> Result<Alphabet> {
        Alphabet::new(v)
    }
}

impl From<Alphabet> for u32 {
    fn from(a: Alphabet) -> u32 {
        a.0
    }
}

/// `base^exp` if it fits in a `u64`.
pub fn checked_pow(base: u64, exp: u64) -> Option<u64> {
    let mut acc: u64 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pattern {
    pub dim: Dim,
    extent: [usize; MAX_DIM],
    symbols: Vec<u8>,
}

impl Pattern {
    /// Pattern on a box with the given side lengths.
    pub fn new(dim: Dim, extent: &[usize], symbols: Vec<u8>) -> Result<Pattern> {
        if extent.len() != dim.get() || extent.iter().any(|&e| e == 0) {
            return domain(format!("extent {extent:?} does not describe a nonempty {}-box", dim.get()));
        }
        let mut ext = [1usize; MAX_DIM];
        ext[..extent.len()].copy_from_slice(extent);
        let len: usize = ext.iter().product();
        if symbols.len() != len {
            return domain(format!("{} symbols supplied for a shape of {len} cells", symbols.len()));
        }
        Ok(Pattern { dim, extent: ext, symbols })
    }

    pub fn cube(dim: Dim, side: usize, symbols: Vec<u8>) -> Result<Pattern> {
        Pattern::new(dim, &vec![side; dim.get()], symbols)
    }

    pub fn constant(dim: Dim, side: usize, sym: u8) -> Pattern {
        let mut ext = [1usize; MAX_DIM];
        ext[..dim.get()].iter_mut().for_each(|e| *e = side);
        Pattern { dim, extent: ext, symbols: vec![sym; side.pow(dim.get() as u32)] }
    }

    /// One-dimensional pattern from a word.
    pub fn word(symbols: &[u8]) -> Pattern {
        Pattern { dim: Dim::ONE, extent: [symbols.len(), 1, 1], symbols: symbols.to_vec() }
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.dim.get()
    }

    pub fn extent(&self) -> &[usize] {
        &self.extent[..self.d()]
    }

    /// Side length if the shape is a cube.
    pub fn side(&self) -> Option<usize> {
        let e = self.extent();
        e.iter().all(|&x| x == e[0]).then_some(e[0])
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn max_symbol(&self) -> u8 {
        self.symbols.iter().copied().max().unwrap_or(0)
    }

    /// Linear index of a 0-based offset.
    #[inline]
    pub fn index(&self, off: &Point) -> usize {
        let mut idx = 0usize;
        for i in 0..self.d() {
            idx = idx * self.extent[i] + off[i] as usize;
        }
        idx
    }

    /// 0-based offset of a linear index.
    pub fn offset_of(&self, mut idx: usize) -> Point {
        let mut p = [0i64; MAX_DIM];
        for i in (0..self.d()).rev() {
            p[i] = (idx % self.extent[i]) as i64;
            idx /= self.extent[i];
        }
        p
    }

    #[inline]
    pub fn get(&self, off: &Point) -> u8 {
        self.symbols[self.index(off)]
    }

    #[inline]
    pub fn set(&mut self, off: &Point, s: u8) {
        let i = self.index(off);
        self.symbols[i] = s;
    }

    /// Symbol at an absolute point, with the pattern's minimal point at `1`.
    #[inline]
    pub fn at(&self, p: &Point) -> u8 {
        self.get(&sub(*p, splat(self.dim, 1)))
    }

    /// Whether an absolute point lies in the shape.
    pub fn contains(&self, p: &Point) -> bool {
        (0..self.d()).all(|i| p[i] >= 1 && p[i] <= self.extent[i] as i64)
    }

    /// Sub-box starting at 0-based offset `start`.
    pub fn restrict_box(&self, start: &Point, extent: &[usize]) -> Result<Pattern> {
        let d = self.d();
        if extent.len() != d {
            return domain("restriction extent has the wrong dimension");
        }
        for i in 0..d {
            if start[i] < 0 || start[i] as usize + extent[i] > self.extent[i] {
                return domain(format!("box at {start:?} with extent {extent:?} leaves the shape"));
            }
        }
        let mut ext = [1usize; MAX_DIM];
        ext[..d].copy_from_slice(extent);
        let len: usize = ext.iter().product();
        let mut symbols = Vec::with_capacity(len);
        let sub_shape = Pattern { dim: self.dim, extent: ext, symbols: Vec::new() };
        for idx in 0..len {
            let o = sub_shape.offset_of(idx);
            let mut q = [0i64; MAX_DIM];
            for i in 0..d {
                q[i] = start[i] + o[i];
            }
            symbols.push(self.get(&q));
        }
        Ok(Pattern { dim: self.dim, extent: ext, symbols })
    }

    /// Restriction to a cube given in absolute coordinates.
    pub fn restrict(&self, s: &Cube) -> Result<Pattern> {
        if s.dim != self.dim {
            return domain("cube dimension differs from pattern dimension");
        }
        let start = sub(s.origin, splat(self.dim, 1));
        self.restrict_box(&start, &vec![s.side as usize; self.d()])
    }

    /// Code of the `n`-window whose minimal point is at 0-based offset `start`.
    pub fn window_code(&self, start: &Point, n: usize, alphabet: Alphabet) -> u64 {
        let a = alphabet.size() as u64;
        let d = self.d();
        let mut code = 0u64;
        let cells = n.pow(d as u32);
        for idx in 0..cells {
            let mut rem = idx;
            let mut q = [0i64; MAX_DIM];
            for i in (0..d).rev() {
                q[i] = start[i] + (rem % n) as i64;
                rem /= n;
            }
            code = code * a + self.get(&q) as u64;
        }
        code
    }

    /// Window codes for every translate of `F_n` inside the shape, in
    /// lexicographic order of the translate's minimal point.
    pub fn window_codes(&self, n: usize, alphabet: Alphabet) -> Result<Vec<u64>> {
        let d = self.d();
        if n == 0 || self.extent().iter().any(|&e| e < n) {
            return domain(format!("no {n}-cube fits in shape {:?}", self.extent()));
        }
        if checked_pow(alphabet.size() as u64, n.pow(d as u32) as u64).is_none() {
            return Err(SftError::Resource(format!("window codes for n={n}, d={d} overflow 64 bits")));
        }
        let mut counts = [1usize; MAX_DIM];
        for i in 0..d {
            counts[i] = self.extent[i] - n + 1;
        }
        let origins = Pattern { dim: self.dim, extent: counts, symbols: Vec::new() };
        let total: usize = counts.iter().product();
        Ok((0..total).map(|i| self.window_code(&origins.offset_of(i), n, alphabet)).collect())
    }

    /// The set of `n`-windows appearing in the pattern.
    pub fn windows(&self, n: usize, alphabet: Alphabet) -> Result<BTreeSet<u64>> {
        Ok(self.window_codes(n, alphabet)?.into_iter().collect())
    }

    /// Number of distinct `n`-windows, comparing symbol blocks directly so it
    /// works for windows too large to encode.
    pub fn window_complexity(&self, n: usize) -> Result<usize> {
        Ok(window_blocks(self, n)?.into_iter().collect::<BTreeSet<_>>().len())
    }

    /// Periodic extension of this box pattern to a box of the given extent.
    pub fn tile(&self, extent: &[usize]) -> Result<Pattern> {
        let d = self.d();
        let mut ext = [1usize; MAX_DIM];
        ext[..d].copy_from_slice(extent);
        let len: usize = ext.iter().product();
        let shape = Pattern { dim: self.dim, extent: ext, symbols: Vec::new() };
        let symbols = (0..len)
            .map(|idx| {
                let mut o = shape.offset_of(idx);
                for i in 0..d {
                    o[i] %= self.extent[i] as i64;
                }
                self.get(&o)
            })
            .collect();
        Pattern::new(self.dim, extent, symbols)
    }

    /// Text form: a header `d side |A|` followed by rows of symbols.
    pub fn to_text(&self, alphabet: Alphabet) -> Result<String> {
        let side = self.side().ok_or_else(|| SftError::Format("text format stores cubes only".into()))?;
        let mut s = format!("{} {} {}\n", self.d(), side, alphabet.size());
        let row = side;
        let plane = side * side;
        for (i, sym) in self.symbols.iter().enumerate() {
            s.push_str(&sym.to_string());
            if (i + 1) % row == 0 {
                s.push('\n');
                if self.d() == 3 && (i + 1) % plane == 0 && i + 1 < self.len() {
                    s.push('\n');
                }
            } else {
                s.push(' ');
            }
        }
        Ok(s)
    }

    /// Parses the text form. Symbols are whitespace separated; for alphabets of
    /// size at most 10 a run of digits is also read one symbol per digit.
    pub fn from_text(text: &str) -> Result<(Pattern, Alphabet)> {
        let mut tokens = text.split_whitespace();
        let mut header = [0usize; 3];
        for h in header.iter_mut() {
            let t = tokens.next().ok_or_else(|| SftError::Format("missing header `d side |A|`".into()))?;
            *h = t.parse().map_err(|_| SftError::Format(format!("bad header token `{t}`")))?;
        }
        let dim = Dim::new(header[0])?;
        let alphabet = Alphabet::new(header[2] as u32)?;
        let side = header[1];
        let mut symbols = Vec::new();
        for t in tokens {
            let digits = alphabet.size() <= 10 && t.len() > 1 && t.bytes().all(|b| b.is_ascii_digit());
            if digits {
                symbols.extend(t.bytes().map(|b| b - b'0'));
            } else {
                let v: u8 = t.parse().map_err(|_| SftError::Format(format!("bad symbol `{t}`")))?;
                symbols.push(v);
            }
        }
        if let Some(&bad) = symbols.iter().find(|&&s| s as u32 >= alphabet.size()) {
            return Err(SftError::Format(format!("symbol {bad} not in alphabet of size {}", alphabet.size())));
        }
        let p = Pattern::cube(dim, side, symbols).map_err(|e| SftError::Format(e.to_string()))?;
        Ok((p, alphabet))
    }
}

/// Symbol blocks of every `n`-window, in lexicographic order of position.
pub fn window_blocks(u: &Pattern, n: usize) -> Result<Vec<Vec<u8>>> {
    let d = u.d();
    if n == 0 || u.extent().iter().any(|&e| e < n) {
        return domain(format!("no {n}-cube fits in shape {:?}", u.extent()));
    }
    let mut counts = [1usize; MAX_DIM];
    for i in 0..d {
        counts[i] = u.extent[i] - n + 1;
    }
    let origins = Pattern { dim: u.dim, extent: counts, symbols: Vec::new() };
    let total: usize = counts.iter().product();
    let inner = Pattern { dim: u.dim, extent: { let mut e = [1; MAX_DIM]; e[..d].iter_mut().for_each(|x| *x = n); e }, symbols: Vec::new() };
    let cells = n.pow(d as u32);
    let offs: Vec<Point> = (0..cells).map(|c| inner.offset_of(c)).collect();
    Ok((0..total)
        .map(|i| {
            let o = origins.offset_of(i);
            offs.iter()
                .map(|c| {
                    let mut q = o;
                    for t in 0..d {
                        q[t] += c[t];
                    }
                    u.get(&q)
                })
                .collect()
        })
        .collect())
}

/// Bijection between `F_n`-patterns and integers in `[0, |A|^(n^d))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindowCodec {
    pub dim: Dim,
    pub n: usize,
    pub alphabet: Alphabet,
    /// Number of cells `n^d`.
    pub cells: usize,
    /// Number of windows `|A|^(n^d)`.
    pub count: u64,
}

impl WindowCodec {
    pub fn new(dim: Dim, n: usize, alphabet: Alphabet) -> Result<WindowCodec> {
        if n == 0 {
            return domain("window side must be positive");
        }
        let cells = n.pow(dim.get() as u32);
        let count = checked_pow(alphabet.size() as u64, cells as u64)
            .filter(|&c| c <= 1 << 62)
            .ok_or_else(|| SftError::Resource(format!("|A|^(n^d) too large for n={n}, d={}", dim.get())))?;
        Ok(WindowCodec { dim, n, alphabet, cells, count })
    }

    pub fn encode(&self, w: &Pattern) -> Result<u64> {
        if w.dim != self.dim || w.side() != Some(self.n) {
            return domain("pattern is not an F_n-pattern for this codec");
        }
        let a = self.alphabet.size() as u64;
        Ok(w.symbols.iter().fold(0u64, |acc, &s| acc * a + s as u64))
    }

    pub fn decode(&self, mut code: u64) -> Pattern {
        let a = self.alphabet.size() as u64;
        let mut symbols = vec![0u8; self.cells];
        for s in symbols.iter_mut().rev() {
            *s = (code % a) as u8;
            code /= a;
        }
        Pattern::cube(self.dim, self.n, symbols).expect("codec shape is consistent")
    }
}

/// Writes window codes as consecutive little-endian 64-bit integers.
pub fn write_window_codes<W: Write>(mut w: W, codes: &[u64]) -> Result<()> {
    for c in codes {
        w.write_all(&c.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_window_codes<R: Read>(mut r: R) -> Result<Vec<u64>> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    if buf.len() % 8 != 0 {
        return Err(SftError::Format("window code stream length is not a multiple of 8".into()));
    }
    Ok(buf.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().unwrap())).collect())
}

/// Advances `symbols` as a base-`a` odometer (last cell fastest); false on wraparound.
pub(crate) fn odometer(symbols: &mut [u8], a: u8) -> bool {
    for s in symbols.iter_mut().rev() {
        *s += 1;
        if *s < a {
            return true;
        }
        *s = 0;
    }
    false
}

/// Exhaustive counts `j -> #{u in A^{F_k} : |W_n(u)| = j}`.
pub fn complexity_histogram(alphabet: Alphabet, dim: Dim, n: usize, k: usize) -> Result<BTreeMap<usize, u64>> {
    if n == 0 || n > k {
        return domain(format!("need 1 <= n <= k, got n={n}, k={k}"));
    }
    let cells = k.pow(dim.get() as u32);
    let total = checked_pow(alphabet.size() as u64, cells as u64)
        .filter(|&t| t <= ENUMERATION_LIMIT)
        .ok_or_else(|| SftError::Resource(format!("|A|^(k^d) exceeds {ENUMERATION_LIMIT}")))?;
    WindowCodec::new(dim, n, alphabet)?;
    let mut hist = BTreeMap::new();
    let mut u = Pattern::constant(dim, k, 0);
    let a = alphabet.size() as u8;
    let mut seen = 0u64;
    loop {
        let j = u.windows(n, alphabet)?.len();
        *hist.entry(j).or_insert(0) += 1;
        seen += 1;
        if !odometer(&mut u.symbols, a) {
            break;
        }
    }
    debug_assert_eq!(seen, total);
    Ok(hist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::point;

    #[test]
    fn restrict_examples() {
        let u = Pattern::word(&[0, 1, 0, 1]);
        let s = Cube::new(Dim::ONE, point(&[2]), 2).unwrap();
        assert_eq!(u.restrict(&s).unwrap(), Pattern::word(&[1, 0]));
        let bad = Cube::new(Dim::ONE, point(&[4]), 2).unwrap();
        assert!(u.restrict(&bad).is_err());
        let c = Pattern::constant(Dim::TWO, 5, 1);
        let s = Cube::new(Dim::TWO, point(&[2, 3]), 3).unwrap();
        assert_eq!(c.restrict(&s).unwrap(), Pattern::constant(Dim::TWO, 3, 1));
    }

    #[test]
    fn restrict_composes() {
        let syms: Vec<u8> = (0..36).map(|i| (i * 7 % 5) as u8).collect();
        let u = Pattern::cube(Dim::TWO, 6, syms).unwrap();
        let s = Cube::new(Dim::TWO, point(&[2, 2]), 4).unwrap();
        let inner = Cube::new(Dim::TWO, point(&[3, 4]), 2).unwrap();
        let via = u.restrict(&s).unwrap().restrict(&inner.translate(point(&[-1, -1]))).unwrap();
        assert_eq!(via, u.restrict(&inner).unwrap());
    }

    #[test]
    fn window_examples() {
        let a = Alphabet::BINARY;
        assert_eq!(Pattern::constant(Dim::TWO, 6, 1).windows(3, a).unwrap().len(), 1);
        let w = Pattern::word(&[0, 1, 0, 1]).windows(2, a).unwrap();
        assert_eq!(w.into_iter().collect::<Vec<_>>(), vec![0b01, 0b10]);
        assert!(Pattern::word(&[0, 1]).windows(3, a).is_err());
    }

    #[test]
    fn histogram_small_words() {
        let h = complexity_histogram(Alphabet::BINARY, Dim::ONE, 2, 4).unwrap();
        assert_eq!(h.values().sum::<u64>(), 16);
        // brute-force oracle over the 16 words
        let mut oracle = BTreeMap::new();
        for w in 0u32..16 {
            let bits: Vec<u32> = (0..4).map(|i| (w >> (3 - i)) & 1).collect();
            let set: BTreeSet<(u32, u32)> = (0..3).map(|i| (bits[i], bits[i + 1])).collect();
            *oracle.entry(set.len()).or_insert(0u64) += 1;
        }
        assert_eq!(h, oracle);
        assert_eq!(h.get(&1), Some(&2));
        assert!(complexity_histogram(Alphabet::BINARY, Dim::TWO, 2, 5).is_err());
    }

    #[test]
    fn histogram_mass_and_range() {
        let h = complexity_histogram(Alphabet::new(3).unwrap(), Dim::TWO, 2, 3).unwrap();
        assert_eq!(h.values().sum::<u64>(), 3u64.pow(9));
        assert!(h.keys().all(|&j| (1..=4).contains(&j)));
        assert_eq!(h.get(&1), Some(&3));
    }

    #[test]
    fn codec_roundtrip_exhaustive() {
        for (d, n, a) in [(1, 4, 2), (2, 2, 3), (2, 4, 2), (3, 2, 2), (1, 8, 4)] {
            let codec = WindowCodec::new(Dim::new(d).unwrap(), n, Alphabet::new(a).unwrap()).unwrap();
            assert!(codec.count <= 1 << 16);
            for c in 0..codec.count {
                assert_eq!(codec.encode(&codec.decode(c)).unwrap(), c);
            }
        }
    }

    #[test]
    fn tiling_contains_tile() {
        let a = Alphabet::new(3).unwrap();
        let p = Pattern::cube(Dim::TWO, 3, vec![0, 1, 2, 2, 1, 0, 1, 1, 2]).unwrap();
        let big = p.tile(&[9, 9]).unwrap();
        let codec = WindowCodec::new(Dim::TWO, 3, a).unwrap();
        assert!(big.windows(3, a).unwrap().contains(&codec.encode(&p).unwrap()));
    }

    #[test]
    fn text_roundtrip() {
        let a = Alphabet::new(3).unwrap();
        for d in 1..=3 {
            let dim = Dim::new(d).unwrap();
            let len = 4usize.pow(d as u32);
            let u = Pattern::cube(dim, 4, (0..len).map(|i| (i % 3) as u8).collect()).unwrap();
            let (v, b) = Pattern::from_text(&u.to_text(a).unwrap()).unwrap();
            assert_eq!((v, b), (u, a));
        }
        let (w, _) = Pattern::from_text("1 5 2\n01101\n").unwrap();
        assert_eq!(w, Pattern::word(&[0, 1, 1, 0, 1]));
        assert!(Pattern::from_text("1 3 2\n0 1 2").is_err());
        assert!(Pattern::from_text("1 3 2\n0 1").is_err());
    }

    #[test]
    fn binary_codes_roundtrip() {
        let codes = vec![0u64, 5, u64::MAX, 1 << 40];
        let mut buf = Vec::new();
        write_window_codes(&mut buf, &codes).unwrap();
        assert_eq!(buf.len(), 32);
        assert_eq!(&buf[8..16], &5u64.to_le_bytes());
        assert_eq!(read_window_codes(&buf[..]).unwrap(), codes);
    }
}
