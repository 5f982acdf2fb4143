//! Finite orbits of the full shift: period lattices, counting by Möbius
//! inversion over sublattices, canonical enumeration, window sets, and the
//! extraction of an orbit from a pattern with few distinct windows.

use std::collections::{BTreeSet, HashMap};

use num_bigint::{BigInt, BigUint};
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, SftError};
use crate::geometry::{Dim, Point, MAX_DIM};
use crate::patterns::{checked_pow, odometer, Alphabet, Pattern, WindowCodec};

/// Largest orbit size handled by counting and enumeration, per dimension.
pub const ORBIT_SIZE_BUDGET: [usize; MAX_DIM] = [30, 8, 4];
/// Cap on the number of orbits materialized by enumeration.
pub const ORBIT_ENUMERATION_LIMIT: u64 = 1 << 20;

pub fn orbit_size_budget(dim: Dim) -> usize {
    ORBIT_SIZE_BUDGET[dim.get() - 1]
}

/// Full-rank sublattice of `Z^d` in Hermite normal form.
///
/// Basis vectors are the columns of `m`; the matrix is upper triangular with a
/// positive diagonal, and each off-diagonal entry `m[r][c]` (`r < c`) lies in
/// `[0, m[r][r])`. Rows and columns past `d` hold the identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Lattice {
    pub dim: Dim,
    pub m: [[i64; MAX_DIM]; MAX_DIM],
}

impl Lattice {
    /// The lattice generated by `diag[i] e_i`.
    pub fn diagonal(dim: Dim, diag: &[i64]) -> Lattice {
        let mut m = [[0; MAX_DIM]; MAX_DIM];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = if i < diag.len() { diag[i] } else { 1 };
        }
        Lattice { dim, m }
    }

    pub fn index(&self) -> u64 {
        (0..self.dim.get()).map(|i| self.m[i][i] as u64).product()
    }

    /// Side lengths of the fundamental box `prod [0, m[i][i])`.
    pub fn box_extent(&self) -> Vec<usize> {
        (0..self.dim.get()).map(|i| self.m[i][i] as usize).collect()
    }

    pub fn column(&self, c: usize) -> Point {
        let mut v = [0; MAX_DIM];
        for (r, vr) in v.iter_mut().enumerate() {
            *vr = self.m[r][c];
        }
        v
    }

    /// Representative of `v` modulo the lattice inside the fundamental box.
    #[inline]
    pub fn reduce(&self, mut v: Point) -> Point {
        for c in (0..self.dim.get()).rev() {
            let q = v[c].div_euclid(self.m[c][c]);
            if q != 0 {
                for r in 0..=c {
                    v[r] -= q * self.m[r][c];
                }
            }
        }
        v
    }

    pub fn contains(&self, v: Point) -> bool {
        self.reduce(v) == [0; MAX_DIM]
    }

    /// Whether `self` is contained in `other`.
    pub fn is_sublattice_of(&self, other: &Lattice) -> bool {
        (0..self.dim.get()).all(|c| other.contains(self.column(c)))
    }
}

fn ordered_factorizations(j: u64, parts: usize) -> Vec<Vec<u64>> {
    if parts == 1 {
        return vec![vec![j]];
    }
    let mut out = Vec::new();
    for a in 1..=j {
        if j % a == 0 {
            for mut rest in ordered_factorizations(j / a, parts - 1) {
                rest.insert(0, a);
                out.push(rest);
            }
        }
    }
    out
}

/// All sublattices of index `j`, each once, in a fixed order.
pub fn sublattices(dim: Dim, j: u64) -> Result<Vec<Lattice>> {
    if j == 0 {
        return domain("lattice index must be positive");
    }
    let d = dim.get();
    let mut out = Vec::new();
    for diag in ordered_factorizations(j, d) {
        let base = Lattice::diagonal(dim, &diag.iter().map(|&x| x as i64).collect::<Vec<_>>());
        let slots: Vec<(usize, usize)> = (0..d).flat_map(|c| (0..c).map(move |r| (r, c))).collect();
        let mut vals = vec![0i64; slots.len()];
        loop {
            let mut l = base;
            for (&(r, c), &v) in slots.iter().zip(&vals) {
                l.m[r][c] = v;
            }
            out.push(l);
            // odometer over off-diagonal entries
            let mut t = slots.len();
            let mut advanced = false;
            while t > 0 {
                t -= 1;
                let (r, _) = slots[t];
                vals[t] += 1;
                if vals[t] < diag[r] as i64 {
                    advanced = true;
                    break;
                }
                vals[t] = 0;
            }
            if !advanced {
                break;
            }
        }
    }
    Ok(out)
}

/// Number of index-`j` sublattices of `Z^d`: the sum over `a_1 ... a_d = j` of
/// `prod a_i^(d - i)`.
pub fn sublattice_count(dim: Dim, j: u64) -> u128 {
    let d = dim.get();
    ordered_factorizations(j, d)
        .iter()
        .map(|f| f.iter().enumerate().map(|(i, &a)| (a as u128).pow((d - 1 - i) as u32)).product::<u128>())
        .sum()
}

/// A finite orbit: its stabilizer lattice and the canonical pattern on the
/// lattice's fundamental box.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Orbit {
    pub lattice: Lattice,
    pub fundamental: Pattern,
    pub size: u64,
}

impl Orbit {
    /// Symbol of the periodic configuration at `p`, with the fundamental box
    /// anchored at the origin.
    #[inline]
    pub fn value(&self, p: Point) -> u8 {
        self.fundamental.get(&self.lattice.reduce(p))
    }

    /// Orbit of the periodic extension of a finite word.
    pub fn from_word(word: &[u8]) -> Orbit {
        let l = Lattice::diagonal(Dim::ONE, &[word.len() as i64]);
        Orbit::canonical(l, |p| word[p[0] as usize])
    }

    /// Orbit of a configuration that is periodic under `lattice`; `cell`
    /// gives its values on the fundamental box of `lattice`. The exact
    /// stabilizer and the lexicographically minimal representative are computed.
    pub fn canonical(lattice: Lattice, cell: impl Fn(Point) -> u8) -> Orbit {
        let dim = lattice.dim;
        let value = |p: Point| cell(lattice.reduce(p));
        let ext = lattice.box_extent();
        let n_cells = lattice.index() as usize;
        let shape = Pattern::new(dim, &ext, vec![0; n_cells]).expect("box shape");
        let cells: Vec<Point> = (0..n_cells).map(|i| shape.offset_of(i)).collect();
        // exact stabilizer: the coarsest superlattice under which x is invariant
        let mut stab = lattice;
        let idx = lattice.index();
        'search: for m in 1..idx {
            if idx % m != 0 {
                continue;
            }
            for cand in sublattices(dim, m).expect("positive index") {
                if !lattice.is_sublattice_of(&cand) {
                    continue;
                }
                let periodic = (0..dim.get()).all(|c| {
                    let g = cand.column(c);
                    cells.iter().all(|&p| {
                        let mut q = p;
                        for t in 0..MAX_DIM {
                            q[t] += g[t];
                        }
                        value(q) == value(p)
                    })
                });
                if periodic {
                    stab = cand;
                    break 'search;
                }
            }
        }
        let sext = stab.box_extent();
        let s_cells = stab.index() as usize;
        let sshape = Pattern::new(dim, &sext, vec![0; s_cells]).expect("box shape");
        let s_pts: Vec<Point> = (0..s_cells).map(|i| sshape.offset_of(i)).collect();
        let mut best: Option<Vec<u8>> = None;
        for t in &s_pts {
            let syms: Vec<u8> = s_pts
                .iter()
                .map(|p| {
                    let mut q = *p;
                    for i in 0..MAX_DIM {
                        q[i] += t[i];
                    }
                    value(q)
                })
                .collect();
            if best.as_ref().is_none_or(|b| syms < *b) {
                best = Some(syms);
            }
        }
        let fundamental = Pattern::new(dim, &sext, best.expect("nonempty box")).expect("box shape");
        Orbit { lattice: stab, fundamental, size: stab.index() }
    }

    /// The orbit's configuration on the box `[0, extent)` as a pattern.
    pub fn window_pattern(&self, start: Point, extent: &[usize]) -> Pattern {
        let d = self.lattice.dim.get();
        let len: usize = extent.iter().product();
        let shape = Pattern::new(self.lattice.dim, extent, vec![0; len]).expect("box shape");
        let syms = (0..len)
            .map(|i| {
                let o = shape.offset_of(i);
                let mut q = start;
                for t in 0..d {
                    q[t] += o[t];
                }
                self.value(q)
            })
            .collect();
        Pattern::new(self.lattice.dim, extent, syms).expect("box shape")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitCount {
    pub j: u64,
    #[serde(with = "crate::bigcount")]
    pub count: BigUint,
}

fn check_size_budget(dim: Dim, j: u64) -> Result<()> {
    let b = orbit_size_budget(dim) as u64;
    if j > b {
        return Err(SftError::Resource(format!("orbit size {j} exceeds the budget {b} for d={}", dim.get())));
    }
    Ok(())
}

/// Number of configurations whose stabilizer is exactly each lattice of index
/// dividing `j`, by inclusion-exclusion over superlattices.
fn exact_stabilizer_counts(alphabet: Alphabet, dim: Dim, j: u64, memo: &mut HashMap<Lattice, BigInt>) {
    let a = BigInt::from(alphabet.size());
    for m in (1..=j).filter(|m| j % m == 0) {
        for l in sublattices(dim, m).expect("positive index") {
            if memo.contains_key(&l) {
                continue;
            }
            let mut f = num_traits::pow(a.clone(), m as usize);
            for m2 in (1..m).filter(|m2| m % m2 == 0) {
                for sup in sublattices(dim, m2).expect("positive index") {
                    if l.is_sublattice_of(&sup) {
                        f -= &memo[&sup];
                    }
                }
            }
            memo.insert(l, f);
        }
    }
}

/// `|P_j|`, the number of orbits of size `j` in the full shift.
pub fn count_orbits(alphabet: Alphabet, dim: Dim, j: u64) -> Result<OrbitCount> {
    if j == 0 {
        return domain("orbit size must be positive");
    }
    check_size_budget(dim, j)?;
    let mut memo = HashMap::new();
    exact_stabilizer_counts(alphabet, dim, j, &mut memo);
    let total: BigInt = sublattices(dim, j)?.iter().map(|l| memo[l].clone()).sum();
    let count = (total / BigInt::from(j)).to_biguint().expect("orbit counts are nonnegative");
    Ok(OrbitCount { j, count })
}

/// `|P_1|, ..., |P_jmax|`.
pub fn orbit_counts_upto(alphabet: Alphabet, dim: Dim, j_max: u64) -> Result<Vec<OrbitCount>> {
    check_size_budget(dim, j_max)?;
    let mut memo = HashMap::new();
    let mut out = Vec::new();
    for j in 1..=j_max {
        exact_stabilizer_counts(alphabet, dim, j, &mut memo);
        let total: BigInt = sublattices(dim, j)?.iter().map(|l| memo[l].clone()).sum();
        let count = (total / BigInt::from(j)).to_biguint().expect("orbit counts are nonnegative");
        out.push(OrbitCount { j, count });
    }
    Ok(out)
}

/// Lyndon words of length exactly `len` over `a` symbols, in lexicographic order.
fn lyndon_words(a: u8, len: usize, mut emit: impl FnMut(&[u8])) {
    // Duval's generation of all Lyndon words of length <= len
    let mut w: Vec<u8> = vec![0];
    loop {
        if w.len() == len {
            emit(&w);
        }
        let m = w.len();
        while w.len() < len {
            let c = w[w.len() - m];
            w.push(c);
        }
        while let Some(&last) = w.last() {
            if last == a - 1 {
                w.pop();
            } else {
                break;
            }
        }
        match w.last_mut() {
            Some(last) => *last += 1,
            None => break,
        }
    }
}

/// One canonical representative of every orbit of size at most `max_size`,
/// sorted by size and then by fundamental pattern.
pub fn enumerate_orbits(alphabet: Alphabet, dim: Dim, max_size: u64) -> Result<Vec<Orbit>> {
    check_size_budget(dim, max_size)?;
    let counts = orbit_counts_upto(alphabet, dim, max_size)?;
    let total: BigUint = counts.iter().map(|c| c.count.clone()).sum();
    if total > BigUint::from(ORBIT_ENUMERATION_LIMIT) {
        return Err(SftError::Resource(format!("{total} orbits exceed the enumeration limit {ORBIT_ENUMERATION_LIMIT}")));
    }
    let a = alphabet.size();
    let mut out = Vec::new();
    for j in 1..=max_size {
        let start = out.len();
        if dim.get() == 1 {
            lyndon_words(a as u8, j as usize, |w| {
                let l = Lattice::diagonal(dim, &[j as i64]);
                let fundamental = Pattern::word(w);
                out.push(Orbit { lattice: l, fundamental, size: j });
            });
        } else {
            let work = sublattice_count(dim, j) * checked_pow(a as u64, j).map_or(u128::MAX, |x| x as u128);
            if work > 1 << 26 {
                return Err(SftError::Resource(format!("enumerating orbits of size {j} needs {work} checks")));
            }
            for l in sublattices(dim, j)? {
                let ext = l.box_extent();
                let mut syms = vec![0u8; j as usize];
                loop {
                    let p = Pattern::new(dim, &ext, syms.clone()).expect("box shape");
                    let o = Orbit::canonical(l, |q| p.get(&q));
                    if o.lattice == l && o.fundamental == p {
                        out.push(o);
                    }
                    if !odometer(&mut syms, a as u8) {
                        break;
                    }
                }
            }
        }
        out[start..].sort_by(|x, y| x.fundamental.cmp(&y.fundamental).then(x.lattice.cmp(&y.lattice)));
    }
    Ok(out)
}

/// Window codes of the periodic configuration, `W_n(gamma)`.
pub fn orbit_windows(orbit: &Orbit, n: usize, alphabet: Alphabet) -> Result<BTreeSet<u64>> {
    let dim = orbit.lattice.dim;
    let codec = WindowCodec::new(dim, n, alphabet)?;
    let a = alphabet.size() as u64;
    let cube = Pattern::constant(dim, n, 0);
    let offs: Vec<Point> = (0..codec.cells).map(|i| cube.offset_of(i)).collect();
    let ext = orbit.lattice.box_extent();
    let shape = Pattern::new(dim, &ext, vec![0; orbit.size as usize]).expect("box shape");
    let mut out = BTreeSet::new();
    for t in 0..orbit.size as usize {
        let base = shape.offset_of(t);
        let mut code = 0u64;
        for o in &offs {
            let mut q = base;
            for i in 0..MAX_DIM {
                q[i] += o[i];
            }
            code = code * a + orbit.value(q) as u64;
        }
        out.insert(code);
    }
    Ok(out)
}

/// Least period of a sequence.
pub fn least_period<T: PartialEq>(s: &[T]) -> usize {
    // prefix function
    let n = s.len();
    if n == 0 {
        return 0;
    }
    let mut pi = vec![0usize; n];
    for i in 1..n {
        let mut k = pi[i - 1];
        while k > 0 && s[i] != s[k] {
            k = pi[k - 1];
        }
        if s[i] == s[k] {
            k += 1;
        }
        pi[i] = k;
    }
    n - pi[n - 1]
}

/// Least period of the middle segment `w[n, k - n]` (1-based, inclusive) of a
/// word of length `k > 3n`; `None` when the least period is the segment length.
pub fn word_periodicity<T: PartialEq>(w: &[T], n: usize) -> Result<Option<usize>> {
    let k = w.len();
    if n == 0 || k <= 3 * n {
        return domain(format!("word length {k} must exceed 3n = {}", 3 * n));
    }
    let seg = &w[n - 1..k - n];
    let p = least_period(seg);
    Ok((p < seg.len()).then_some(p))
}

/// Orbit with `W_n(gamma) ⊆ W_n(u)` and `|gamma| <= n/2`, built from the
/// per-axis least periods of the slab words of `u`, when `u` has at most `n/2`
/// distinct windows.
pub fn extract_orbit(u: &Pattern, n: usize) -> Result<Option<Orbit>> {
    let k = u.side().ok_or_else(|| SftError::Domain("extract_orbit needs a cube pattern".into()))?;
    if n == 0 || k <= 4 * n {
        return domain(format!("extract_orbit needs k > 4n, got k={k}, n={n}"));
    }
    let j = u.window_complexity(n)?;
    if 2 * j > n {
        return Ok(None);
    }
    let dim = u.dim;
    let d = dim.get();
    // slab words: letter m is u restricted to the slab {x_i = 1 + m} ∩ F_n-box
    let mut periods = vec![0i64; d];
    for (i, period) in periods.iter_mut().enumerate() {
        let mut ext = vec![n; d];
        ext[i] = 1;
        let letters: Vec<Pattern> = (0..k)
            .map(|m| {
                let mut start = [0i64; MAX_DIM];
                start[i] = m as i64;
                u.restrict_box(&start, &ext).expect("slab inside the cube")
            })
            .collect();
        *period = least_period(&letters[n..=k - n]) as i64;
    }
    let lattice = Lattice::diagonal(dim, &periods);
    // fundamental domain D = n*1 + prod [0, r_i - 1], absolute coordinates
    let orbit = Orbit::canonical(lattice, |p| {
        let mut q = [0i64; MAX_DIM];
        for i in 0..d {
            q[i] = n as i64 - 1 + p[i];
        }
        u.get(&q)
    });
    let blocks: BTreeSet<Vec<u8>> = crate::patterns::window_blocks(u, n)?.into_iter().collect();
    let cube = Pattern::constant(dim, n, 0);
    let shape = Pattern::new(dim, &orbit.lattice.box_extent(), vec![0; orbit.size as usize]).expect("box shape");
    for t in 0..orbit.size as usize {
        let base = shape.offset_of(t);
        let block: Vec<u8> = (0..cube.len())
            .map(|c| {
                let o = cube.offset_of(c);
                let mut q = base;
                for i in 0..d {
                    q[i] += o[i];
                }
                orbit.value(q)
            })
            .collect();
        assert!(blocks.contains(&block), "extracted orbit has a window absent from the pattern");
    }
    assert!(2 * orbit.size <= n as u64, "extracted orbit larger than n/2");
    Ok(Some(orbit))
}

/// Upper bound `j^(d+1) |A|^j` on `|P_j|`.
pub fn orbit_count_upper(alphabet: Alphabet, dim: Dim, j: u64) -> BigUint {
    BigUint::from(j).pow(dim.get() as u32 + 1) * BigUint::from(alphabet.size()).pow(j as u32)
}

/// Whether `2 j |P_j| >= |A|^j`.
pub fn orbit_count_lower_holds(alphabet: Alphabet, j: u64, count: &BigUint) -> bool {
    BigUint::from(2 * j) * count >= BigUint::from(alphabet.size()).pow(j as u32)
}

pub fn count_to_f64(c: &BigUint) -> f64 {
    c.to_f64().unwrap_or(f64::INFINITY)
}
