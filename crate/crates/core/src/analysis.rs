//! Per-sample analyses of `X_omega`: emptiness, window-pattern counts `phi`,
//! periodic-boundary counts `psi`, entropy bounds and short periodic orbits.

use std::collections::HashMap;
use std::ops::AddAssign;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand_chacha::rand_core::RngCore;
use serde::{Deserialize, Serialize};

use crate::ensemble::{trial_rng, AllowedSet, STREAM_BOUNDARY};
use crate::error::{domain, Result, SftError};
use crate::geometry::{Dim, Point, MAX_DIM};
use crate::orbits::{enumerate_orbits, orbit_size_budget, orbit_windows, Lattice, Orbit};
use crate::patterns::{checked_pow, Alphabet, Pattern};

/// Node budget of a single backtracking search.
pub const SEARCH_NODE_BUDGET: u64 = 1 << 22;
/// Largest number of states of the two-dimensional row transfer, `|A|^((n-1)k)`.
pub const ROW_STATE_BUDGET: u64 = 1 << 20;
/// Rough bound on elementary steps of a one-dimensional count.
const TRANSFER_WORK_BUDGET: f64 = 4e9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Empty,
    NonEmpty,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Certificate {
    /// No locally allowed `F_k`-pattern exists.
    NoPatternAt { k: usize },
    /// A periodic configuration all of whose windows are allowed.
    PeriodicOrbit(Orbit),
    None,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Effort {
    /// Largest `k` for which a locally allowed `F_k`-pattern was exhibited.
    pub k_reached: usize,
    /// Number of torus shapes searched.
    pub tori_searched: usize,
    pub nodes: u64,
    /// Some search ran out of its node budget.
    pub budget_hit: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmptinessVerdict {
    pub verdict: Verdict,
    pub certificate: Certificate,
    pub effort: Effort,
}

impl EmptinessVerdict {
    fn empty_at(k: usize, effort: Effort) -> Self {
        EmptinessVerdict { verdict: Verdict::Empty, certificate: Certificate::NoPatternAt { k }, effort }
    }

    fn periodic(orbit: Orbit, effort: Effort) -> Self {
        EmptinessVerdict { verdict: Verdict::NonEmpty, certificate: Certificate::PeriodicOrbit(orbit), effort }
    }

    pub fn orbit(&self) -> Option<&Orbit> {
        match &self.certificate {
            Certificate::PeriodicOrbit(o) => Some(o),
            _ => None,
        }
    }
}

/// `a^(n-1)`, the number of overlap states of one-dimensional windows.
fn state_count(omega: &AllowedSet) -> u64 {
    omega.len() / omega.alphabet().size() as u64
}

/// Exact emptiness for `d = 1` through the overlap graph on allowed windows.
pub fn decide_empty_1d(omega: &AllowedSet) -> Result<EmptinessVerdict> {
    if omega.dim() != Dim::ONE {
        return domain("decide_empty_1d needs d = 1");
    }
    let n = omega.n();
    let a = omega.alphabet().size() as u64;
    let m = state_count(omega);
    let allowed: Vec<u64> = omega.allowed_codes().collect();
    let mut effort = Effort { nodes: allowed.len() as u64, ..Effort::default() };
    if allowed.is_empty() {
        return Ok(EmptinessVerdict::empty_at(n, effort));
    }
    let succ = |u: u64| (0..a).map(move |c| (u % m) * a + c).filter(|&v| omega.is_allowed(v));
    let pred = |u: u64| (0..a).map(move |c| c * m + u / a).filter(|&v| omega.is_allowed(v));

    // Kahn's algorithm; the longest path gives the emptiness certificate.
    let mut indeg: HashMap<u64, u32> = allowed.iter().map(|&u| (u, pred(u).count() as u32)).collect();
    let mut longest: HashMap<u64, usize> = HashMap::new();
    let mut queue: Vec<u64> = allowed.iter().copied().filter(|u| indeg[u] == 0).collect();
    for &u in &queue {
        longest.insert(u, 1);
    }
    let mut removed = 0usize;
    let mut best = 0usize;
    while let Some(u) = queue.pop() {
        removed += 1;
        let lu = longest[&u];
        best = best.max(lu);
        for v in succ(u) {
            let e = longest.entry(v).or_insert(0);
            *e = (*e).max(lu + 1);
            let dv = indeg.get_mut(&v).expect("allowed window");
            *dv -= 1;
            if *dv == 0 {
                queue.push(v);
            }
        }
    }
    if removed == allowed.len() {
        // the longest allowed word has n + best - 1 symbols
        effort.k_reached = n + best - 1;
        return Ok(EmptinessVerdict::empty_at(n + best, effort));
    }
    // every surviving window has a surviving predecessor; walk backwards to a cycle
    let alive = |u: u64| indeg[&u] > 0;
    let start = *allowed.iter().find(|&&u| alive(u)).expect("a window survives");
    let mut seen: HashMap<u64, usize> = HashMap::new();
    let mut path = vec![start];
    let mut cur = start;
    seen.insert(start, 0);
    loop {
        cur = pred(cur).find(|&v| alive(v)).expect("surviving predecessor");
        if let Some(&i) = seen.get(&cur) {
            path.drain(..i);
            break;
        }
        seen.insert(cur, path.len());
        path.push(cur);
    }
    path.reverse();
    let first = m;
    let word: Vec<u8> = path.iter().map(|&u| (u / first) as u8).collect();
    let orbit = Orbit::from_word(&word);
    Ok(EmptinessVerdict::periodic(orbit, effort))
}

/// Allowed prefixes of windows, in the window's lexicographic cell order.
struct PrefixTables {
    a: u64,
    bits: Vec<Vec<u64>>,
}

impl PrefixTables {
    fn new(omega: &AllowedSet) -> PrefixTables {
        let a = omega.alphabet().size() as u64;
        let cells = omega.codec.cells;
        let mut bits = vec![Vec::new(); cells + 1];
        bits[cells] = omega.words().to_vec();
        let mut size = omega.len();
        for p in (0..cells).rev() {
            let next = size / a;
            let mut b = vec![0u64; next.div_ceil(64) as usize];
            for c in 0..size {
                if bits[p + 1][(c >> 6) as usize] >> (c & 63) & 1 == 1 {
                    let q = c / a;
                    b[(q >> 6) as usize] |= 1 << (q & 63);
                }
            }
            bits[p] = b;
            size = next;
        }
        PrefixTables { a, bits }
    }

    #[inline]
    fn allows(&self, p: usize, code: u64) -> bool {
        self.bits[p][(code >> 6) as usize] >> (code & 63) & 1 == 1
    }
}

#[derive(Clone, Copy, Debug)]
enum Var {
    Free,
    Fixed(u8),
    /// Equal to an earlier variable.
    Alias(usize),
}

/// Constraint problem: variables assigned in index order, each window a list
/// of variables in the window's cell order. After variable `t` is assigned,
/// every window whose leading cells are all assigned is checked against the
/// allowed prefixes.
struct Csp<'a> {
    tables: &'a PrefixTables,
    vars: Vec<Var>,
    windows: Vec<Vec<usize>>,
    checks: Vec<Vec<(usize, usize)>>,
}

#[derive(Debug, Default, Clone, Copy)]
struct SearchStats {
    leaves: u64,
    nodes: u64,
    aborted: bool,
}

impl<'a> Csp<'a> {
    fn new(tables: &'a PrefixTables, vars: Vec<Var>, windows: Vec<Vec<usize>>) -> Csp<'a> {
        let mut checks = vec![Vec::new(); vars.len()];
        for (w, cells) in windows.iter().enumerate() {
            let mut avail = 0usize;
            let mut last: Option<(usize, usize)> = None;
            for (i, &c) in cells.iter().enumerate() {
                avail = avail.max(c);
                match last {
                    Some((t, _)) if t == avail => last = Some((t, i + 1)),
                    _ => {
                        if let Some((t, p)) = last {
                            checks[t].push((w, p));
                        }
                        last = Some((avail, i + 1));
                    }
                }
            }
            if let Some((t, p)) = last {
                checks[t].push((w, p));
            }
        }
        Csp { tables, vars, windows, checks }
    }

    fn prefix_ok(&self, vals: &[u8], w: usize, p: usize) -> bool {
        let code = self.windows[w][..p].iter().fold(0u64, |acc, &c| acc * self.tables.a + vals[c] as u64);
        self.tables.allows(p, code)
    }

    /// Depth-first search; `on_leaf` returns `false` to stop.
    fn run(&self, budget: u64, mut on_leaf: impl FnMut(&[u8]) -> bool) -> SearchStats {
        let mut vals = vec![0u8; self.vars.len()];
        let mut st = SearchStats::default();
        self.rec(0, &mut vals, &mut st, budget, &mut on_leaf);
        st
    }

    fn rec(&self, t: usize, vals: &mut [u8], st: &mut SearchStats, budget: u64, on_leaf: &mut impl FnMut(&[u8]) -> bool) -> bool {
        if t == self.vars.len() {
            st.leaves += 1;
            return !on_leaf(vals);
        }
        let (lo, hi) = match self.vars[t] {
            Var::Free => (0, self.tables.a as u8),
            Var::Fixed(s) => (s, s + 1),
            Var::Alias(r) => (vals[r], vals[r] + 1),
        };
        for s in lo..hi {
            st.nodes += 1;
            if st.nodes > budget {
                st.aborted = true;
                return true;
            }
            vals[t] = s;
            if self.checks[t].iter().all(|&(w, p)| self.prefix_ok(vals, w, p)) && self.rec(t + 1, vals, st, budget, on_leaf) {
                return true;
            }
        }
        false
    }
}

fn box_shape(dim: Dim, extent: &[usize]) -> Pattern {
    let len = extent.iter().product();
    Pattern::new(dim, extent, vec![0; len]).expect("box shape")
}

/// Windows of the box `[0,k)^d`, as lists of cell indices.
fn box_windows(dim: Dim, k: usize, n: usize) -> Vec<Vec<usize>> {
    let d = dim.get();
    let host = box_shape(dim, &vec![k; d]);
    let origins = box_shape(dim, &vec![k + 1 - n; d]);
    let window = box_shape(dim, &vec![n; d]);
    (0..origins.len())
        .map(|o| {
            let base = origins.offset_of(o);
            (0..window.len())
                .map(|i| {
                    let off = window.offset_of(i);
                    let mut q = base;
                    for t in 0..MAX_DIM {
                        q[t] += off[t];
                    }
                    host.index(&q)
                })
                .collect()
        })
        .collect()
}

/// Windows of the torus with the given periods, as lists of cell indices.
fn torus_windows(dim: Dim, periods: &[usize], n: usize) -> Vec<Vec<usize>> {
    let d = dim.get();
    let host = box_shape(dim, periods);
    let window = box_shape(dim, &vec![n; d]);
    (0..host.len())
        .map(|o| {
            let base = host.offset_of(o);
            (0..window.len())
                .map(|i| {
                    let off = window.offset_of(i);
                    let mut q = [0i64; MAX_DIM];
                    for t in 0..d {
                        q[t] = (base[t] + off[t]).rem_euclid(periods[t] as i64);
                    }
                    host.index(&q)
                })
                .collect()
        })
        .collect()
}

/// A locally allowed `F_k`-pattern, if one exists within the node budget.
fn find_pattern(omega: &AllowedSet, tables: &PrefixTables, k: usize, budget: u64) -> (Option<Pattern>, SearchStats) {
    let dim = omega.dim();
    let cells = k.pow(dim.get() as u32);
    let csp = Csp::new(tables, vec![Var::Free; cells], box_windows(dim, k, omega.n()));
    let mut found = None;
    let st = csp.run(budget, |v| {
        found = Some(v.to_vec());
        false
    });
    (found.map(|s| Pattern::cube(dim, k, s).expect("cube shape")), st)
}

/// A periodic configuration with the given periods, if one exists.
fn find_torus(omega: &AllowedSet, tables: &PrefixTables, periods: &[usize], budget: u64) -> (Option<Orbit>, SearchStats) {
    let dim = omega.dim();
    let host = box_shape(dim, periods);
    let csp = Csp::new(tables, vec![Var::Free; host.len()], torus_windows(dim, periods, omega.n()));
    let mut found: Option<Vec<u8>> = None;
    let st = csp.run(budget, |v| {
        found = Some(v.to_vec());
        false
    });
    let orbit = found.map(|v| {
        let diag: Vec<i64> = periods.iter().map(|&p| p as i64).collect();
        let tile = Pattern::new(dim, periods, v).expect("torus shape");
        Orbit::canonical(Lattice::diagonal(dim, &diag), |q| tile.get(&q))
    });
    (orbit, st)
}

/// Torus period vectors with entries in `[1, max]`, by volume then lexicographically.
fn torus_shapes(dim: Dim, max: usize) -> Vec<Vec<usize>> {
    let d = dim.get();
    let mut out = Vec::new();
    let mut cur = vec![1usize; d];
    if max == 0 {
        return out;
    }
    loop {
        out.push(cur.clone());
        let mut i = d;
        loop {
            if i == 0 {
                out.sort_by_key(|p| (p.iter().product::<usize>(), p.clone()));
                return out;
            }
            i -= 1;
            if cur[i] < max {
                cur[i] += 1;
                break;
            }
            cur[i] = 1;
        }
    }
}

/// Emptiness decision for `d = 1`, semi-decision for `d >= 2`: searches for
/// locally allowed `F_k`-patterns up to `k_max` and for periodic
/// configurations on tori with periods up to `torus_max`.
pub fn decide_empty(omega: &AllowedSet, k_max: usize, torus_max: usize) -> Result<EmptinessVerdict> {
    if omega.dim() == Dim::ONE {
        return decide_empty_1d(omega);
    }
    let n = omega.n();
    let mut effort = Effort::default();
    if omega.is_empty() {
        return Ok(EmptinessVerdict::empty_at(n, effort));
    }
    let tables = PrefixTables::new(omega);
    let shapes = torus_shapes(omega.dim(), torus_max);
    let (small, large): (Vec<_>, Vec<_>) = shapes.into_iter().partition(|p| p.iter().product::<usize>() <= 4);
    let mut existence_open = true;

    let existence = |k: usize, effort: &mut Effort| -> Option<EmptinessVerdict> {
        let (found, st) = find_pattern(omega, &tables, k, SEARCH_NODE_BUDGET);
        effort.nodes += st.nodes;
        if found.is_some() {
            effort.k_reached = effort.k_reached.max(k);
            None
        } else if st.aborted {
            effort.budget_hit = true;
            None
        } else {
            Some(EmptinessVerdict::empty_at(k, effort.clone()))
        }
    };
    let torus = |shapes: &[Vec<usize>], effort: &mut Effort| -> Option<EmptinessVerdict> {
        for p in shapes {
            let (found, st) = find_torus(omega, &tables, p, SEARCH_NODE_BUDGET);
            effort.nodes += st.nodes;
            effort.tori_searched += 1;
            effort.budget_hit |= st.aborted;
            if let Some(o) = found {
                return Some(EmptinessVerdict::periodic(o, effort.clone()));
            }
        }
        None
    };

    if k_max >= n {
        if let Some(v) = existence(n, &mut effort) {
            return Ok(v);
        }
        existence_open = effort.k_reached == n;
    }
    if let Some(v) = torus(&small, &mut effort) {
        return Ok(v);
    }
    if existence_open {
        for k in n + 1..=k_max {
            if let Some(v) = existence(k, &mut effort) {
                return Ok(v);
            }
            if effort.k_reached < k {
                break;
            }
        }
    }
    if let Some(v) = torus(&large, &mut effort) {
        return Ok(v);
    }
    Ok(EmptinessVerdict { verdict: Verdict::Unknown, certificate: Certificate::None, effort })
}

/// Counter arithmetic shared by the exact counts.
trait Count: Clone + Zero + One + for<'x> AddAssign<&'x Self> + Into<BigUint> {}

impl Count for u128 {}

impl Count for BigUint {}

/// Whether `a^cells` fits comfortably in a `u128`.
fn fits_u128(a: u32, cells: u64) -> bool {
    (a as f64).log2() * cells as f64 <= 126.0
}

/// One step of the word transfer: `next[s'] += cur[s]` for every allowed
/// window `s.c` with `s'` its suffix.
fn transfer_step<T: Count>(omega: &AllowedSet, cur: &[T], next: &mut [T]) {
    let a = omega.alphabet().size() as u64;
    let m = cur.len() as u64;
    for x in next.iter_mut() {
        *x = T::zero();
    }
    for (s, v) in cur.iter().enumerate() {
        if v.is_zero() {
            continue;
        }
        for c in 0..a {
            let u = s as u64 * a + c;
            if omega.is_allowed(u) {
                next[(u % m) as usize] += v;
            }
        }
    }
}

fn count_words_dp<T: Count>(omega: &AllowedSet, k: usize) -> BigUint {
    let m = state_count(omega) as usize;
    let mut cur = vec![T::one(); m];
    let mut next = vec![T::zero(); m];
    for _ in 0..k + 1 - omega.n() {
        transfer_step(omega, &cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    let mut total = T::zero();
    for v in &cur {
        total += v;
    }
    total.into()
}

fn mat_mul(x: &[Vec<BigUint>], y: &[Vec<BigUint>]) -> Vec<Vec<BigUint>> {
    let m = x.len();
    let mut out = vec![vec![BigUint::zero(); m]; m];
    for i in 0..m {
        for (l, xil) in x[i].iter().enumerate() {
            if xil.is_zero() {
                continue;
            }
            for j in 0..m {
                if !y[l][j].is_zero() {
                    out[i][j] += xil * &y[l][j];
                }
            }
        }
    }
    out
}

fn count_words_power(omega: &AllowedSet, k: usize) -> BigUint {
    let a = omega.alphabet().size() as u64;
    let m = state_count(omega) as usize;
    let mut base = vec![vec![BigUint::zero(); m]; m];
    for s in 0..m as u64 {
        for c in 0..a {
            let u = s * a + c;
            if omega.is_allowed(u) {
                base[s as usize][(u % m as u64) as usize] += 1u32;
            }
        }
    }
    let mut e = k + 1 - omega.n();
    let mut acc: Option<Vec<Vec<BigUint>>> = None;
    while e > 0 {
        if e & 1 == 1 {
            acc = Some(match acc {
                None => base.clone(),
                Some(x) => mat_mul(&x, &base),
            });
        }
        e >>= 1;
        if e > 0 {
            base = mat_mul(&base, &base);
        }
    }
    acc.expect("at least one step").iter().flatten().sum()
}

/// Two-dimensional count by a broken-profile transfer over cells in
/// lexicographic order; the state holds the last `(n-1)k + n-1` symbols.
fn count_rows_2d<T: Count>(omega: &AllowedSet, k: usize) -> BigUint {
    let n = omega.n();
    let a = omega.alphabet().size() as u64;
    let look = (n - 1) * k + (n - 1);
    let modulus = checked_pow(a, look as u64).expect("state code fits");
    let pw: Vec<u128> = (0..=look).map(|t| (a as u128).pow(t as u32)).collect();
    // steps back of each window cell, in window order, from the bottom corner
    let mut back = Vec::with_capacity(n * n);
    for r in 0..n {
        for q in 0..n {
            back.push((n - 1 - r) * k + (n - 1 - q));
        }
    }
    let mut states: HashMap<u64, T> = HashMap::new();
    states.insert(0, T::one());
    for i in 0..k {
        for j in 0..k {
            let check = i + 1 >= n && j + 1 >= n;
            let mut next: HashMap<u64, T> = HashMap::with_capacity(states.len() * a as usize);
            for (&st, v) in &states {
                for c in 0..a {
                    let full = st as u128 * a as u128 + c as u128;
                    if check {
                        let code = back.iter().fold(0u64, |acc, &t| acc * a + ((full / pw[t]) % a as u128) as u64);
                        if !omega.is_allowed(code) {
                            continue;
                        }
                    }
                    let ns = (full % modulus as u128) as u64;
                    *next.entry(ns).or_insert_with(T::zero) += v;
                }
            }
            states = next;
        }
    }
    let mut total = T::zero();
    for v in states.values() {
        total += v;
    }
    total.into()
}

/// Exact `phi_{n,k}`: the number of `F_k`-patterns all of whose `n`-windows
/// are allowed.
pub fn count_phi(omega: &AllowedSet, k: usize) -> Result<BigUint> {
    let dim = omega.dim();
    let d = dim.get();
    let n = omega.n();
    let a = omega.alphabet().size();
    let cells = (k as u64).checked_pow(d as u32).ok_or_else(|| SftError::Resource(format!("k={k} too large")))?;
    if k == 0 {
        return Ok(BigUint::one());
    }
    if k < n {
        return Ok(BigUint::from(a).pow(cells as u32));
    }
    if n == 1 {
        let c = omega.count_allowed();
        return Ok(BigUint::from(c).pow(cells as u32));
    }
    if d == 1 {
        let m = state_count(omega) as f64;
        let steps = (k + 1 - n) as f64;
        let dp_work = steps * m * a as f64;
        let pow_work = m.powi(3) * steps.log2().max(1.0) * 2.0;
        if fits_u128(a, cells) && dp_work <= TRANSFER_WORK_BUDGET {
            return Ok(count_words_dp::<u128>(omega, k));
        }
        if dp_work <= pow_work && dp_work * (cells as f64 / 64.0).max(1.0) <= TRANSFER_WORK_BUDGET {
            return Ok(count_words_dp::<BigUint>(omega, k));
        }
        if pow_work * (cells as f64 / 64.0).max(1.0) <= TRANSFER_WORK_BUDGET * 16.0 {
            return Ok(count_words_power(omega, k));
        }
        return Err(SftError::Resource(format!("phi for n={n}, k={k} exceeds the transfer budget")));
    }
    if d == 2 {
        let row_states = checked_pow(a as u64, ((n - 1) * k) as u64);
        let look_bits = ((n - 1) * k + n) as f64 * (a as f64).log2();
        if row_states.is_some_and(|s| s <= ROW_STATE_BUDGET) && look_bits <= 126.0 {
            return Ok(if fits_u128(a, cells) {
                count_rows_2d::<u128>(omega, k)
            } else {
                count_rows_2d::<BigUint>(omega, k)
            });
        }
    }
    // small cases: exhaustive backtracking
    let tables = PrefixTables::new(omega);
    let csp = Csp::new(&tables, vec![Var::Free; cells as usize], box_windows(dim, k, n));
    let st = csp.run(SEARCH_NODE_BUDGET, |_| true);
    if st.aborted {
        return Err(SftError::Resource(format!(
            "phi for d={d}, n={n}, k={k} exceeds the row-state budget {ROW_STATE_BUDGET} and the search budget"
        )));
    }
    Ok(BigUint::from(st.leaves))
}

/// `psi_{n,k}`: the average over periodic boundaries of the number of allowed
/// fillings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiCount {
    pub k: usize,
    /// Number of classes of boundary cells; `|V_{n,k}| = |A|^classes`.
    pub boundary_classes: usize,
    /// `sum_b xi_b` over patterns with periodic boundary, when computed exactly.
    #[serde(with = "crate::bigcount::option")]
    pub allowed_total: Option<BigUint>,
    /// Natural log of `psi` (`-inf` when zero).
    pub log_psi: f64,
    /// Standard error of the sample mean when estimated.
    pub std_error: Option<f64>,
    /// Boundaries sampled; 0 when exact.
    pub samples: u64,
}

impl PsiCount {
    pub fn exact(&self) -> bool {
        self.allowed_total.is_some()
    }

    pub fn value(&self) -> f64 {
        self.log_psi.exp()
    }
}

/// `ln x` for arbitrary size, `-inf` at zero.
pub fn ln_big(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().expect("finite").ln();
    }
    let shift = bits - 64;
    (x >> shift).to_f64().expect("finite").ln() + shift as f64 * std::f64::consts::LN_2
}

/// Union-find classes of `F_k` under the periodic boundary identifications
/// `t ~ t + l e_i`, `l = k - n + 1`; returns each cell's representative (its
/// smallest cell) and the boundary mask.
fn periodic_classes(dim: Dim, n: usize, k: usize) -> (Vec<usize>, Vec<bool>) {
    let d = dim.get();
    let host = box_shape(dim, &vec![k; d]);
    let l = (k + 1 - n) as i64;
    let len = host.len();
    let on_boundary = |p: &Point| (0..d).any(|i| p[i] < n as i64 || p[i] >= (k - n) as i64);
    let boundary: Vec<bool> = (0..len).map(|c| on_boundary(&host.offset_of(c))).collect();
    let mut parent: Vec<usize> = (0..len).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for c in 0..len {
        if !boundary[c] {
            continue;
        }
        let p = host.offset_of(c);
        for i in 0..d {
            let mut q = p;
            q[i] += l;
            if q[i] < k as i64 {
                let e = host.index(&q);
                if boundary[e] {
                    let (x, y) = (find(&mut parent, c), find(&mut parent, e));
                    let (lo, hi) = (x.min(y), x.max(y));
                    parent[hi] = lo;
                }
            }
        }
    }
    let reps = (0..len).map(|c| find(&mut parent, c)).collect();
    (reps, boundary)
}

fn boundary_class_count(reps: &[usize], boundary: &[bool]) -> usize {
    (0..reps.len()).filter(|&c| boundary[c] && reps[c] == c).count()
}

/// Number of words of length `l` all of whose cyclic `n`-windows are allowed,
/// `trace(M^l)` for the overlap transfer matrix `M`.
fn cyclic_words<T: Count>(omega: &AllowedSet, l: usize) -> BigUint {
    let a = omega.alphabet().size() as u64;
    let m = state_count(omega);
    // only states on cycles contribute; prune sources and sinks
    let mut alive = vec![true; m as usize];
    loop {
        let mut changed = false;
        for s in 0..m {
            if !alive[s as usize] {
                continue;
            }
            let out = (0..a).any(|c| {
                let u = s * a + c;
                omega.is_allowed(u) && alive[(u % m) as usize]
            });
            let inn = (0..a).any(|c| {
                let u = c * m + s;
                omega.is_allowed(u) && alive[(u / a) as usize]
            });
            if !out || !inn {
                alive[s as usize] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let core: Vec<u64> = (0..m).filter(|&s| alive[s as usize]).collect();
    let mut pos = vec![usize::MAX; m as usize];
    for (i, &s) in core.iter().enumerate() {
        pos[s as usize] = i;
    }
    let edges: Vec<Vec<usize>> = core
        .iter()
        .map(|&s| {
            (0..a)
                .map(|c| s * a + c)
                .filter(|&u| omega.is_allowed(u) && alive[(u % m) as usize])
                .map(|u| pos[(u % m) as usize])
                .collect()
        })
        .collect();
    let c = core.len();
    let mut total = T::zero();
    let mut cur = vec![T::zero(); c];
    let mut next = vec![T::zero(); c];
    for start in 0..c {
        for x in cur.iter_mut() {
            *x = T::zero();
        }
        cur[start] = T::one();
        for _ in 0..l {
            for x in next.iter_mut() {
                *x = T::zero();
            }
            for (s, v) in cur.iter().enumerate() {
                if v.is_zero() {
                    continue;
                }
                for &t in &edges[s] {
                    next[t] += v;
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        total += &cur[start];
    }
    total.into()
}

/// Uniform symbol by multiply-shift.
fn uniform_symbol(rng: &mut impl RngCore, a: u32) -> u8 {
    ((rng.next_u64() as u128 * a as u128) >> 64) as u8
}

/// `psi_{n,k}(omega)`. Exact for `d = 1` through the cyclic transfer count and
/// for small boundaries by exhaustive search; otherwise a Monte Carlo mean over
/// `boundary_samples` uniform periodic boundaries drawn from the boundary
/// stream of `(seed, trial)`.
pub fn count_psi(omega: &AllowedSet, k: usize, boundary_samples: u64) -> Result<PsiCount> {
    let dim = omega.dim();
    let d = dim.get();
    let n = omega.n();
    if k < n {
        return domain(format!("psi needs k >= n, got k={k}, n={n}"));
    }
    let a = omega.alphabet().size();
    let l = k + 1 - n;
    let (reps, boundary) = periodic_classes(dim, n, k);
    let classes = boundary_class_count(&reps, &boundary);
    let log_v = classes as f64 * (a as f64).ln();
    let exact = |total: BigUint| PsiCount {
        k,
        boundary_classes: classes,
        log_psi: ln_big(&total) - log_v,
        allowed_total: Some(total),
        std_error: None,
        samples: 0,
    };
    if d == 1 {
        let m = state_count(omega) as f64;
        if m * m * l as f64 * a as f64 > TRANSFER_WORK_BUDGET {
            return Err(SftError::Resource(format!("psi for n={n}, k={k} exceeds the transfer budget")));
        }
        let total = if fits_u128(a, l as u64) { cyclic_words::<u128>(omega, l) } else { cyclic_words::<BigUint>(omega, l) };
        return Ok(exact(total));
    }
    let tables = PrefixTables::new(omega);
    let windows = box_windows(dim, k, n);
    let vars: Vec<Var> = reps.iter().enumerate().map(|(c, &r)| if r == c { Var::Free } else { Var::Alias(r) }).collect();
    let st = Csp::new(&tables, vars.clone(), windows.clone()).run(SEARCH_NODE_BUDGET, |_| true);
    if !st.aborted {
        return Ok(exact(BigUint::from(st.leaves)));
    }
    if boundary_samples == 0 {
        return Err(SftError::Resource("psi needs boundary samples beyond the exact search budget".into()));
    }
    let mut rng = trial_rng(omega.seed, STREAM_BOUNDARY, omega.trial);
    let (mut sum, mut sum2) = (0f64, 0f64);
    let mut fixed = vars;
    for _ in 0..boundary_samples {
        for c in 0..fixed.len() {
            if boundary[c] && reps[c] == c {
                fixed[c] = Var::Fixed(uniform_symbol(&mut rng, a));
            }
        }
        let st = Csp::new(&tables, fixed.clone(), windows.clone()).run(SEARCH_NODE_BUDGET, |_| true);
        if st.aborted {
            return Err(SftError::Resource(format!("filling one boundary for k={k} exceeds the search budget")));
        }
        let x = st.leaves as f64;
        sum += x;
        sum2 += x * x;
    }
    let s = boundary_samples as f64;
    let mean = sum / s;
    let var = if boundary_samples > 1 { ((sum2 - s * mean * mean) / (s - 1.0)).max(0.0) } else { 0.0 };
    Ok(PsiCount {
        k,
        boundary_classes: classes,
        allowed_total: None,
        log_psi: mean.ln(),
        std_error: Some((var / s).sqrt()),
        samples: boundary_samples,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub k: usize,
    #[serde(with = "crate::bigcount")]
    pub phi: BigUint,
    /// `ln(phi) / k^d`, an upper bound on the entropy.
    pub h_upper: f64,
    pub psi: PsiCount,
    /// `ln(psi) / k^d`, a lower bound on the periodic entropy.
    pub h_per_lower: f64,
}

pub fn entropy_estimate(omega: &AllowedSet, k: usize, boundary_samples: u64) -> Result<EntropyEstimate> {
    let phi = count_phi(omega, k)?;
    let psi = count_psi(omega, k, boundary_samples)?;
    let vol = (k as f64).powi(omega.dim().get() as i32);
    Ok(EntropyEstimate { k, h_upper: ln_big(&phi) / vol, phi, h_per_lower: psi.log_psi / vol, psi })
}

/// Orbits up to a size with their window codes, reusable across samples.
#[derive(Clone, Debug)]
pub struct OrbitTable {
    pub max_size: u64,
    pub orbits: Vec<Orbit>,
    windows: Vec<Vec<u64>>,
}

impl OrbitTable {
    pub fn new(dim: Dim, n: usize, alphabet: Alphabet, max_size: u64) -> Result<OrbitTable> {
        let budget = orbit_size_budget(dim) as u64;
        if max_size > budget {
            return Err(SftError::Resource(format!("orbit size {max_size} exceeds the budget {budget}")));
        }
        let orbits = enumerate_orbits(alphabet, dim, max_size)?;
        let windows = orbits
            .iter()
            .map(|o| orbit_windows(o, n, alphabet).map(|w| w.into_iter().collect()))
            .collect::<Result<_>>()?;
        Ok(OrbitTable { max_size, orbits, windows })
    }

    pub fn for_omega(omega: &AllowedSet, max_size: u64) -> Result<OrbitTable> {
        OrbitTable::new(omega.dim(), omega.n(), omega.alphabet(), max_size)
    }

    /// Indices of the orbits all of whose windows are allowed.
    pub fn allowed(&self, omega: &AllowedSet) -> Vec<usize> {
        (0..self.orbits.len()).filter(|&i| self.windows[i].iter().all(|&c| omega.is_allowed(c))).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbits {
    pub max_size: u64,
    pub orbits: Vec<Orbit>,
    /// Every orbit of size at most `max_size` was examined.
    pub exhaustive: bool,
}

/// All allowed orbits of size at most `max_size`.
pub fn periodic_orbits_present(omega: &AllowedSet, max_size: u64) -> Result<PeriodicOrbits> {
    let table = OrbitTable::for_omega(omega, max_size)?;
    let orbits = table.allowed(omega).into_iter().map(|i| table.orbits[i].clone()).collect();
    Ok(PeriodicOrbits { max_size, orbits, exhaustive: true })
}
