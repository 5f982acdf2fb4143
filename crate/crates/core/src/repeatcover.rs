//! Repeats of `n`-windows inside a pattern, repeat covers, reconstruction of a
//! pattern from a cover, and the constructions of small covers near faces,
//! between faces and in interiors.
//!
//! Points are absolute with the pattern's minimal point at `1`.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, SftError};
use crate::geometry::{all_faces, faces_of_dim, skeleton_distance, splat, sub, Cube, Dim, Face, Point, PointSet, MAX_DIM};
use crate::patterns::{window_blocks, Pattern};

/// A pair of equal `n`-subpatterns, the first being the lexicographically
/// minimal appearance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Repeat {
    pub first: Cube,
    pub second: Cube,
}

impl Repeat {
    /// `m(S2) - m(S1)`.
    pub fn shift(&self) -> Point {
        sub(self.second.origin, self.first.origin)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepeatCover {
    pub dim: Dim,
    /// Extent of the host box.
    pub extent: Vec<usize>,
    pub n: usize,
    pub repeats: Vec<Repeat>,
}

fn shape_of(dim: Dim, extent: &[usize]) -> Pattern {
    let len = extent.iter().product();
    Pattern::new(dim, extent, vec![0; len]).expect("box shape")
}

/// Box-cell index of an absolute point.
fn cell(shape: &Pattern, p: &Point) -> usize {
    shape.index(&sub(*p, splat(shape.dim, 1)))
}

fn absolute(shape: &Pattern, idx: usize) -> Point {
    let mut p = shape.offset_of(idx);
    for v in p.iter_mut().take(shape.d()) {
        *v += 1;
    }
    p
}

/// Origins of the `n`-windows in lexicographic order, with each window's
/// first-appearance index.
fn window_occurrences(u: &Pattern, n: usize) -> Result<(Vec<Point>, Vec<usize>)> {
    let blocks = window_blocks(u, n)?;
    let d = u.d();
    let counts: Vec<usize> = (0..d).map(|i| u.extent()[i] + 1 - n).collect();
    let origins_shape = shape_of(u.dim, &counts);
    let origins = (0..blocks.len()).map(|i| absolute(&origins_shape, i)).collect();
    let mut seen: HashMap<&[u8], usize> = HashMap::with_capacity(blocks.len());
    let first = blocks.iter().enumerate().map(|(i, b)| *seen.entry(b.as_slice()).or_insert(i)).collect();
    Ok((origins, first))
}

/// All `n`-repeats of `u`, ordered by the minimal point of the second cube.
/// The list is itself a repeat cover.
pub fn find_repeats(u: &Pattern, n: usize) -> Result<Vec<Repeat>> {
    let (origins, first) = window_occurrences(u, n)?;
    let cube = |o: Point| Cube { dim: u.dim, origin: o, side: n as i64 };
    Ok((0..origins.len())
        .filter(|&i| first[i] != i)
        .map(|i| Repeat { first: cube(origins[first[i]]), second: cube(origins[i]) })
        .collect())
}

impl RepeatCover {
    pub fn new(u: &Pattern, n: usize, repeats: Vec<Repeat>) -> RepeatCover {
        RepeatCover { dim: u.dim, extent: u.extent().to_vec(), n, repeats }
    }

    /// The cover made of every repeat of `u`.
    pub fn full(u: &Pattern, n: usize) -> Result<RepeatCover> {
        Ok(RepeatCover::new(u, n, find_repeats(u, n)?))
    }

    pub fn len(&self) -> usize {
        self.repeats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.repeats.is_empty()
    }

    fn shape(&self) -> Pattern {
        shape_of(self.dim, &self.extent)
    }

    /// Membership mask of the covered region over the host box cells.
    pub fn area_mask(&self) -> Vec<bool> {
        let shape = self.shape();
        let mut mask = vec![false; shape.len()];
        for r in &self.repeats {
            for p in r.second.points() {
                if shape.contains(&p) {
                    mask[cell(&shape, &p)] = true;
                }
            }
        }
        mask
    }

    /// `A(J)`, the union of the second cubes.
    pub fn area(&self) -> PointSet {
        let shape = self.shape();
        let mask = self.area_mask();
        PointSet::new(self.dim, (0..mask.len()).filter(|&i| mask[i]).map(|i| absolute(&shape, i)).collect())
    }

    /// Every member is a repeat of `u`, and every repeat of `u` has its second
    /// cube inside the covered region.
    pub fn is_cover_of(&self, u: &Pattern) -> bool {
        if u.dim != self.dim || u.extent() != self.extent.as_slice() {
            return false;
        }
        let Ok((origins, first)) = window_occurrences(u, self.n) else {
            return self.repeats.is_empty();
        };
        let index: HashMap<Point, usize> = origins.iter().enumerate().map(|(i, &o)| (o, i)).collect();
        for r in &self.repeats {
            if r.first.side != self.n as i64 || r.second.side != self.n as i64 {
                return false;
            }
            let (Some(&a), Some(&b)) = (index.get(&r.first.origin), index.get(&r.second.origin)) else {
                return false;
            };
            if a == b || first[b] != a {
                return false;
            }
        }
        let shape = self.shape();
        let mask = self.area_mask();
        (0..origins.len()).filter(|&i| first[i] != i).all(|i| {
            let s = Cube { dim: self.dim, origin: origins[i], side: self.n as i64 };
            let all = s.points().all(|p| mask[cell(&shape, &p)]);
            all
        })
    }

    /// Symbols of `u` outside the covered region, in lexicographic order.
    pub fn complement_symbols(&self, u: &Pattern) -> Vec<u8> {
        let mask = self.area_mask();
        u.symbols().iter().zip(&mask).filter(|(_, &m)| !m).map(|(&s, _)| s).collect()
    }
}

/// The unique pattern agreeing with `outside` off the covered region and
/// having `cover` as a repeat cover, if there is one. `outside` lists the
/// symbols of the uncovered cells in lexicographic order.
pub fn reconstruct(cover: &RepeatCover, outside: &[u8]) -> Option<Pattern> {
    let shape = cover.shape();
    let len = shape.len();
    let mut shift: Vec<Option<Point>> = vec![None; len];
    for r in &cover.repeats {
        let p = r.shift();
        for q in r.second.points() {
            if !shape.contains(&q) {
                return None;
            }
            let c = cell(&shape, &q);
            if shift[c].is_none() {
                shift[c] = Some(p);
            }
        }
    }
    let mut symbols = vec![0u8; len];
    let mut next = outside.iter();
    for t in 0..len {
        symbols[t] = match shift[t] {
            None => *next.next()?,
            Some(p) => {
                let q = sub(absolute(&shape, t), p);
                if !shape.contains(&q) {
                    return None;
                }
                let c = cell(&shape, &q);
                if c >= t {
                    return None;
                }
                symbols[c]
            }
        };
    }
    if next.next().is_some() {
        return None;
    }
    let u = Pattern::new(cover.dim, &cover.extent, symbols).ok()?;
    cover.is_cover_of(&u).then_some(u)
}

/// Keeps a subfamily of intervals with the same union in which every point
/// lies in at most two intervals. Returns indices into `intervals`.
pub fn reduce_intervals(intervals: &[(i64, i64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..intervals.len()).filter(|&i| intervals[i].0 <= intervals[i].1).collect();
    order.sort_by_key(|&i| (intervals[i].0, std::cmp::Reverse(intervals[i].1), i));
    let mut kept = Vec::new();
    let mut idx = 0;
    while idx < order.len() {
        // start of a new connected stretch
        let first = order[idx];
        kept.push(first);
        let mut end = intervals[first].1;
        idx += 1;
        loop {
            // among intervals starting at or before end + 1, take the one reaching furthest
            let mut best: Option<usize> = None;
            while idx < order.len() && intervals[order[idx]].0 <= end + 1 {
                let c = order[idx];
                if intervals[c].1 > end && best.is_none_or(|b| intervals[c].1 > intervals[b].1) {
                    best = Some(c);
                }
                idx += 1;
            }
            match best {
                Some(b) => {
                    kept.push(b);
                    end = intervals[b].1;
                }
                None => break,
            }
        }
    }
    kept.sort_unstable();
    kept
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NearFaceCover {
    /// Indices of the kept cubes, increasing.
    pub indices: Vec<usize>,
    /// Axis of the line segments used for the reduction (a free axis of the face).
    pub line_axis: usize,
    /// `|U|`, the number of covered points of the region.
    pub covered: usize,
}

/// Reduces `cubes` to a subfamily covering the same part of
/// `R = {p in F_k : |p_i - s_i| <= n for restricted i}`, with at most `2|U|/n` cubes.
pub fn cover_near_face(k: i64, n: usize, face: &Face, cubes: &[Cube]) -> Result<NearFaceCover> {
    cover_near_face_within(k, n, face, cubes, n as i64)
}

/// As [`cover_near_face`] with the region's reach in the restricted
/// directions given explicitly.
pub fn cover_near_face_within(k: i64, n: usize, face: &Face, cubes: &[Cube], reach: i64) -> Result<NearFaceCover> {
    let free = face.free_axes();
    let Some(&axis) = free.first() else {
        return domain("cover_near_face needs a face of dimension at least 1");
    };
    if face.k != k || reach < 0 {
        return domain("face and host side disagree or reach is negative");
    }
    let host = Cube::host(face.dim, k);
    let ns = n as i64;
    let in_region = |p: &Point| face.restricted.iter().zip(&face.anchor).all(|(&i, &s)| (p[i] - s).abs() <= reach);
    // segment corner: the cube's corner nearest the face in restricted directions
    let corner = |c: &Cube| {
        let mut q = c.origin;
        for (&i, &s) in face.restricted.iter().zip(&face.anchor) {
            if s != 1 {
                q[i] = c.origin[i] + ns - 1;
            }
        }
        q
    };
    let mut lines: HashMap<Point, Vec<usize>> = HashMap::new();
    for (idx, c) in cubes.iter().enumerate() {
        if c.side != ns || !host.contains_cube(c) {
            return domain(format!("cube {c:?} is not an {n}-cube of the host"));
        }
        let q = corner(c);
        if !in_region(&q) {
            continue;
        }
        let mut key = q;
        key[axis] = 0;
        lines.entry(key).or_default().push(idx);
    }
    let mut indices = Vec::new();
    for members in lines.values() {
        let iv: Vec<(i64, i64)> = members.iter().map(|&i| (cubes[i].origin[axis], cubes[i].origin[axis] + ns - 1)).collect();
        indices.extend(reduce_intervals(&iv).into_iter().map(|t| members[t]));
    }
    indices.sort_unstable();
    let mut covered: BTreeSet<Point> = BTreeSet::new();
    for c in cubes {
        covered.extend(c.points().filter(|p| in_region(p)));
    }
    Ok(NearFaceCover { indices, line_axis: axis, covered: covered.len() })
}

fn point_mask(t: &PointSet, host: &Cube) -> Result<Vec<bool>> {
    let mut mask = vec![false; host.len()];
    for p in t.iter() {
        if !host.contains(p) {
            return domain(format!("point {p:?} lies outside the host cube"));
        }
        mask[host.index_of(p)] = true;
    }
    Ok(mask)
}

/// Whether `p` (in `T`) is `(E, T)`-necessary: the segments from `p` toward
/// the face along each restricted axis meet `T` only at `p`.
fn is_face_necessary(mask: &[bool], host: &Cube, face: &Face, p: &Point) -> bool {
    face.restricted.iter().zip(&face.anchor).all(|(&i, &s)| {
        let step = if s < p[i] { -1 } else { 1 };
        let mut q = *p;
        while q[i] != s {
            q[i] += step;
            if mask[host.index_of(&q)] {
                return false;
            }
        }
        true
    })
}

/// `(l, T)`-necessary points with skeleton distance in `[lo, hi]`.
fn necessary_in(mask: &[bool], host: &Cube, ell: usize, lo: i64, hi: i64) -> Vec<Point> {
    let faces = faces_of_dim(host.side, host.dim, ell).expect("valid face dimension");
    host.points()
        .filter(|p| mask[host.index_of(p)])
        .filter(|p| {
            let dist = skeleton_distance(p, host.side, host.dim, ell);
            dist >= lo && dist <= hi
        })
        .filter(|p| faces.iter().any(|f| is_face_necessary(mask, host, f, p)))
        .collect()
}

/// The `(l, T)`-necessary points in `(F_k ∩ B(F_{k,l}, n)) \ B(F_{k,l}, r)`.
pub fn necessary_points(t: &PointSet, k: i64, n: i64, ell: usize, r: i64) -> Result<PointSet> {
    let d = t.dim.get();
    if n >= k || r < 1 || r >= n || ell >= d {
        return domain(format!("necessary points need n < k, 1 <= r < n, l < d; got n={n}, k={k}, r={r}, l={ell}"));
    }
    let host = Cube::host(t.dim, k);
    let mask = point_mask(t, &host)?;
    Ok(PointSet::new(t.dim, necessary_in(&mask, &host, ell, r + 1, n)))
}

/// `floor(n/3)`-coverage, `n/2`-separated net of `[lo, hi]` with the fewest points.
fn net_1d(lo: i64, hi: i64, n: i64) -> Result<Vec<i64>> {
    if lo > hi {
        return Ok(Vec::new());
    }
    let t = n / 3;
    let (smin, smax) = (n / 2 + 1, 2 * t + 1);
    let span = (hi - lo) as usize;
    let mut parent: Vec<Option<usize>> = vec![None; span + 1];
    let mut seen = vec![false; span + 1];
    let mut queue = VecDeque::new();
    for x in 0..=(t as usize).min(span) {
        seen[x] = true;
        queue.push_back(x);
    }
    while let Some(x) = queue.pop_front() {
        if x as i64 >= hi - lo - t {
            let mut path = vec![x];
            let mut cur = x;
            while let Some(p) = parent[cur] {
                path.push(p);
                cur = p;
            }
            path.reverse();
            return Ok(path.into_iter().map(|o| lo + o as i64).collect());
        }
        for s in (smin..=smax).rev() {
            let y = x + s as usize;
            if y <= span && !seen[y] {
                seen[y] = true;
                parent[y] = Some(x);
                queue.push_back(y);
            }
        }
    }
    Err(SftError::Degenerate(format!("no n/2-separated n/3-net of [{lo}, {hi}] exists for n={n}")))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteriorCover {
    pub indices: Vec<usize>,
    pub net: Vec<Point>,
}

/// Selects at most `(2k/n)^d0` cubes covering `int_n(F)`, given that every
/// interior point has a cube center within `n/6` of it.
pub fn cover_interior(f: &Cube, n: usize, cubes: &[Cube]) -> Result<InteriorCover> {
    let d0 = f.d();
    let ns = n as i64;
    let mut by_origin: HashMap<Point, usize> = HashMap::new();
    for (i, c) in cubes.iter().enumerate() {
        if c.dim != f.dim || c.side != ns || !f.contains_cube(c) {
            return domain(format!("cube {c:?} is not an {n}-cube of the host"));
        }
        by_origin.entry(c.origin).or_insert(i);
    }
    let lo: Vec<i64> = (0..d0).map(|i| f.origin[i] + ns).collect();
    let hi: Vec<i64> = (0..d0).map(|i| f.origin[i] + f.side - 1 - ns).collect();
    if (0..d0).any(|i| lo[i] > hi[i]) {
        return Ok(InteriorCover { indices: Vec::new(), net: Vec::new() });
    }
    // origins o with 3|2p - (2o + n - 1)| <= n on one axis
    let near = |p: i64| -> Vec<i64> {
        let lo_o = (6 * p - 3 * ns + 3 - ns).div_euclid(6) - 1;
        (lo_o..=lo_o + ns).filter(|o| 3 * (2 * p - 2 * o - ns + 1).abs() <= ns).collect()
    };
    let closest = |p: &Point| -> Option<usize> {
        let lists: Vec<Vec<i64>> = (0..d0).map(|i| near(p[i])).collect();
        let mut best: Option<usize> = None;
        let mut o = [0i64; MAX_DIM];
        fn rec(axis: usize, lists: &[Vec<i64>], o: &mut Point, by: &HashMap<Point, usize>, best: &mut Option<usize>) {
            if axis == lists.len() {
                if let Some(&i) = by.get(o) {
                    *best = Some(best.map_or(i, |b| b.min(i)));
                }
                return;
            }
            for &v in &lists[axis] {
                o[axis] = v;
                rec(axis + 1, lists, o, by, best);
            }
        }
        rec(0, &lists, &mut o, &by_origin, &mut best);
        best
    };
    let ext: Vec<usize> = (0..d0).map(|i| (hi[i] - lo[i] + 1) as usize).collect();
    let box_shape = shape_of(f.dim, &ext);
    for idx in 0..box_shape.len() {
        let mut p = box_shape.offset_of(idx);
        for i in 0..d0 {
            p[i] += lo[i];
        }
        if closest(&p).is_none() {
            return Err(SftError::Precondition(format!("no cube center within n/6 of interior point {:?}", &p[..d0])));
        }
    }
    let axes: Vec<Vec<i64>> = (0..d0).map(|i| net_1d(lo[i], hi[i], ns)).collect::<Result<_>>()?;
    let mut net = Vec::new();
    let sizes: Vec<usize> = axes.iter().map(|a| a.len()).collect();
    let net_shape = shape_of(f.dim, &sizes);
    for idx in 0..net_shape.len() {
        let o = net_shape.offset_of(idx);
        let mut p = [0i64; MAX_DIM];
        for i in 0..d0 {
            p[i] = axes[i][o[i] as usize];
        }
        net.push(p);
    }
    let mut indices: Vec<usize> = net.iter().map(|p| closest(p).expect("checked above")).collect();
    indices.sort_unstable();
    indices.dedup();
    Ok(InteriorCover { indices, net })
}

/// Value of a nonnegative integer power as `u128`.
fn pow(b: u128, e: usize) -> u128 {
    b.pow(e as u32)
}

fn binomial(n: usize, r: usize) -> u128 {
    (0..r).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Number of faces of dimension `l`, `2^(d-l) C(d, l)`.
fn faces(d: usize, l: usize) -> u128 {
    (1u128 << (d - l)) * binomial(d, l)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EfficientCover {
    pub cover: RepeatCover,
    pub k: usize,
    pub n: usize,
    pub r: usize,
    pub ell: usize,
    /// `|W_n(u)|`.
    pub j: usize,
    /// Repeats chosen near the skeleton, between skeleton and interiors, and in
    /// face interiors.
    pub near_skeleton: usize,
    pub between: usize,
    pub interior: usize,
    /// Faces whose interior selection fell back to the repair step.
    pub interior_fallbacks: usize,
    /// Repeats added because the three selections left part of the area uncovered.
    pub repairs: usize,
    /// `k^d - |A(J)|`.
    pub uncovered: usize,
    /// The three terms of the cardinality bound.
    pub bound_terms: [f64; 3],
    /// `|J|` is within the bound, checked in exact integer arithmetic.
    pub within_bound: bool,
}

fn cube_side(u: &Pattern) -> Result<usize> {
    u.side().ok_or_else(|| SftError::Domain(format!("pattern of shape {:?} is not a cube", u.extent())))
}

/// Repeat cover assembled from three regions around the `l`-skeleton:
/// within `r - 1` of it, between `r` and `n - 1`, and the thickened interiors
/// of the faces of dimension above `l`.
pub fn efficient_cover(u: &Pattern, n: usize, r: usize, ell: usize) -> Result<EfficientCover> {
    let dim = u.dim;
    let d = dim.get();
    let k = cube_side(u)?;
    if r < 1 || r >= n {
        return domain(format!("r must lie in [1, n), got r={r}, n={n}"));
    }
    if ell < 1 || ell + 1 > d {
        return domain(format!("l must lie in [1, d-1], got l={ell}, d={d}"));
    }
    if k <= 2 * n {
        return Err(SftError::Degenerate(format!("three-region cover needs k > 2n, got k={k}, n={n}")));
    }
    let j = u.window_complexity(n)?;
    if pow(3, d) * j as u128 >= pow(n as u128, ell + 1) {
        return domain(format!("|W_n(u)| = {j} is not below n^(l+1)/3^d"));
    }
    let base = find_repeats(u, n)?;
    let seconds: Vec<Cube> = base.iter().map(|r| r.second).collect();
    let host = Cube::host(dim, k as i64);
    let full = RepeatCover::new(u, n, base.clone());
    let target = full.area_mask();
    // first repeat covering each cell
    let mut owner: Vec<Option<usize>> = vec![None; host.len()];
    for (i, s) in seconds.iter().enumerate() {
        for p in s.points() {
            let c = host.index_of(&p);
            if owner[c].is_none() {
                owner[c] = Some(i);
            }
        }
    }
    let mut chosen: BTreeSet<usize> = BTreeSet::new();

    let mut near = BTreeSet::new();
    for face in faces_of_dim(k as i64, dim, ell)? {
        near.extend(cover_near_face_within(k as i64, n, &face, &seconds, r as i64 - 1)?.indices);
    }
    chosen.extend(near.iter().copied());

    let between: BTreeSet<usize> = necessary_in(&target, &host, ell, r as i64, n as i64 - 1)
        .iter()
        .map(|p| owner[host.index_of(p)].expect("necessary points lie in the covered area"))
        .collect();
    chosen.extend(between.iter().copied());

    let mut interior = BTreeSet::new();
    let mut fallbacks = 0;
    for face in all_faces(k as i64, dim).into_iter().filter(|f| f.dimension() > ell) {
        let free = face.free_axes();
        let d0 = free.len();
        let fdim = Dim::new(d0)?;
        let touches = |c: &Cube| {
            face.restricted.iter().zip(&face.anchor).all(|(&i, &s)| if s == 1 { c.origin[i] == 1 } else { c.origin[i] + n as i64 - 1 == k as i64 })
        };
        let mut projected = Vec::new();
        let mut back = Vec::new();
        for (i, c) in seconds.iter().enumerate() {
            if touches(c) {
                let mut o = [0i64; MAX_DIM];
                for (t, &a) in free.iter().enumerate() {
                    o[t] = c.origin[a];
                }
                projected.push(Cube { dim: fdim, origin: o, side: n as i64 });
                back.push(i);
            }
        }
        match cover_interior(&Cube::host(fdim, k as i64), n, &projected) {
            Ok(ic) => interior.extend(ic.indices.into_iter().map(|t| back[t])),
            Err(SftError::Precondition(_)) | Err(SftError::Degenerate(_)) => fallbacks += 1,
            Err(e) => return Err(e),
        }
    }
    chosen.extend(interior.iter().copied());

    let mut repairs = 0;
    let mut covered = vec![false; host.len()];
    for &i in &chosen {
        for p in seconds[i].points() {
            covered[host.index_of(&p)] = true;
        }
    }
    for c in 0..host.len() {
        if target[c] && !covered[c] {
            let i = owner[c].expect("target cells have an owner");
            if chosen.insert(i) {
                repairs += 1;
            }
            for p in seconds[i].points() {
                covered[host.index_of(&p)] = true;
            }
        }
    }
    let repeats: Vec<Repeat> = chosen.iter().map(|&i| base[i]).collect();
    let area = target.iter().filter(|&&b| b).count();
    let vol = pow(k as u128, d);
    let uncovered = (vol - area as u128) as usize;
    let (kk, nn, rr) = (k as u128, n as u128, r as u128);
    // |J| <= 2 c k^l r^(d-l) / n + d (k^d - A) / r + sum c (2k/n)^d0, times n^d r
    let lhs = repeats.len() as u128 * pow(nn, d) * rr;
    let t1 = 2 * faces(d, ell) * pow(kk, ell) * pow(rr, d - ell + 1) * pow(nn, d - 1);
    let t2 = d as u128 * uncovered as u128 * pow(nn, d);
    let t3: u128 = (ell + 1..=d).map(|d0| faces(d, d0) * pow(2 * kk, d0) * pow(nn, d - d0) * rr).sum();
    let scale = (pow(nn, d) * rr) as f64;
    Ok(EfficientCover {
        cover: RepeatCover::new(u, n, repeats),
        k,
        n,
        r,
        ell,
        j,
        near_skeleton: near.len(),
        between: between.len(),
        interior: interior.len(),
        interior_fallbacks: fallbacks,
        repairs,
        uncovered,
        bound_terms: [t1 as f64 / scale, t2 as f64 / scale, t3 as f64 / scale],
        within_bound: lhs <= t1 + t2 + t3,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticCover {
    pub cover: RepeatCover,
    pub k: usize,
    pub n: usize,
    pub j: usize,
    /// Skeleton dimension used, or `None` for the whole-cube reduction.
    pub ell: Option<usize>,
    pub r: usize,
    /// `|J| log n / j`.
    pub ratio: f64,
    pub details: Option<EfficientCover>,
}

/// `ceil(n^tau)`.
pub fn growth_factor(n: usize, tau: f64) -> usize {
    ((n as f64).powf(tau) - 1e-9).ceil().max(1.0) as usize
}

/// Repeat cover for `u` on `F_k` with `k = n ceil(n^tau)`: the whole-cube
/// line reduction when `|W_n(u)| >= n^d / 3^d`, otherwise the three-region
/// cover with `l` chosen by `n^l <= 5^d j < ...` and `3^d j < n^(l+1)`.
pub fn asymptotic_cover(u: &Pattern, n: usize, tau: f64) -> Result<AsymptoticCover> {
    if !(tau > 0.0 && tau < 1.0) {
        return domain(format!("tau must lie in (0, 1), got {tau}"));
    }
    let d = u.d();
    let k = cube_side(u)?;
    let f = growth_factor(n, tau);
    if k != n * f {
        return domain(format!("pattern side {k} differs from n ceil(n^tau) = {}", n * f));
    }
    let j = u.window_complexity(n)?;
    let (jj, nn) = (j as u128, n as u128);
    if pow(5, d) * jj < nn || jj > pow((k - n + 1) as u128, d) {
        return domain(format!("|W_n(u)| = {j} lies outside [n/5^d, (k-n+1)^d]"));
    }
    let r = f.clamp(1, n.saturating_sub(1).max(1));
    let ratio = |len: usize| len as f64 * (n as f64).ln() / j as f64;
    if pow(3, d) * jj >= pow(nn, d) {
        let base = find_repeats(u, n)?;
        let seconds: Vec<Cube> = base.iter().map(|r| r.second).collect();
        let reduced = cover_near_face(k as i64, n, &Face::full(k as i64, u.dim), &seconds)?;
        let cover = RepeatCover::new(u, n, reduced.indices.iter().map(|&i| base[i]).collect());
        let len = cover.len();
        return Ok(AsymptoticCover { cover, k, n, j, ell: None, r, ratio: ratio(len), details: None });
    }
    let ell = (1..d)
        .find(|&l| pow(nn, l) <= pow(5, d) * jj && pow(3, d) * jj < pow(nn, l + 1))
        .ok_or_else(|| SftError::Domain(format!("|W_n(u)| = {j} falls in no skeleton band for n={n}, d={d}")))?;
    let ec = efficient_cover(u, n, r, ell)?;
    Ok(AsymptoticCover { cover: ec.cover.clone(), k, n, j, ell: Some(ell), r, ratio: ratio(ec.cover.len()), details: Some(ec) })
}

/// `k^d - |A(J)| <= j (1 + 4dn/k)`, in exact arithmetic.
pub fn nuggets_bound_check(u: &Pattern, n: usize, cover: &RepeatCover) -> Result<bool> {
    let d = u.d();
    let k = cube_side(u)?;
    if k <= (2 * d + 1) * n {
        return domain(format!("needs k > (2d+1)n, got k={k}, n={n}, d={d}"));
    }
    let j = u.window_complexity(n)? as u128;
    let area = cover.area_mask().iter().filter(|&&b| b).count() as u128;
    let kk = k as u128;
    let lhs = (pow(kk, d) - area) * kk;
    Ok(lhs <= j * (kk + 4 * d as u128 * n as u128))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::point;
    use crate::patterns::odometer;
    use proptest::prelude::*;
    use rand_chacha::rand_core::{RngCore, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cube1(a: i64, n: i64) -> Cube {
        Cube::new(Dim::ONE, point(&[a]), n).unwrap()
    }

    /// Random pattern that tiles a small random block, so repeats are plentiful.
    fn periodic_pattern(rng: &mut ChaCha8Rng, dim: Dim, k: usize, max_period: usize, noise: u32) -> Pattern {
        let d = dim.get();
        let per: Vec<usize> = (0..d).map(|_| 1 + (rng.next_u32() as usize % max_period)).collect();
        let len: usize = per.iter().product();
        let tile = Pattern::new(dim, &per, (0..len).map(|_| (rng.next_u32() % 2) as u8).collect()).unwrap();
        let mut u = tile.tile(&vec![k; d]).unwrap();
        for _ in 0..noise {
            let idx = rng.next_u32() as usize % u.len();
            let off = u.offset_of(idx);
            let s = u.get(&off);
            u.set(&off, 1 - s);
        }
        u
    }

    #[test]
    fn repeats_of_constant_word() {
        let u = Pattern::word(&[0, 0, 0, 0]);
        let reps = find_repeats(&u, 2).unwrap();
        assert_eq!(reps, vec![Repeat { first: cube1(1, 2), second: cube1(2, 2) }, Repeat { first: cube1(1, 2), second: cube1(3, 2) }]);
        assert!(find_repeats(&Pattern::word(&[0, 0, 1, 1]), 2).unwrap().is_empty());
        let full = RepeatCover::full(&u, 2).unwrap();
        assert!(full.is_cover_of(&u));
        assert_eq!(full.area().len(), 3);
    }

    #[test]
    fn reconstruction_exhaustive_words() {
        let mut w = vec![0u8; 6];
        loop {
            let u = Pattern::word(&w);
            let cover = RepeatCover::full(&u, 2).unwrap();
            assert_eq!(reconstruct(&cover, &cover.complement_symbols(&u)), Some(u.clone()));
            if !odometer(&mut w, 2) {
                break;
            }
        }
    }

    #[test]
    fn reconstruction_rejects_inconsistent_input() {
        let u = Pattern::word(&[0, 1, 0, 1, 0]);
        let cover = RepeatCover::full(&u, 2).unwrap();
        // A(J) = [3,5]; changing the free symbols breaks the repeat structure
        assert_eq!(reconstruct(&cover, &[0, 0]), None);
        assert_eq!(reconstruct(&cover, &[0]), None);
        let empty = RepeatCover::new(&u, 2, Vec::new());
        assert_eq!(reconstruct(&empty, &[0, 0, 1, 1, 0]), Some(Pattern::word(&[0, 0, 1, 1, 0])));
    }

    #[test]
    fn interval_reduction_example() {
        let kept = reduce_intervals(&[(1, 4), (2, 5), (3, 6)]);
        assert_eq!(kept, vec![0, 2]);
        assert_eq!(reduce_intervals(&[(1, 3)]), vec![0]);
    }

    #[test]
    fn near_face_single_cube() {
        let k = 10;
        let face = faces_of_dim(k, Dim::TWO, 1).unwrap()[0].clone();
        let c = [Cube::new(Dim::TWO, point(&[1, 2]), 3).unwrap()];
        let out = cover_near_face(k, 3, &face, &c).unwrap();
        assert_eq!(out.indices, vec![0]);
        let corner = faces_of_dim(k, Dim::TWO, 0).unwrap()[0].clone();
        assert!(cover_near_face(k, 3, &corner, &c).is_err());
    }

    #[test]
    fn near_face_on_far_side() {
        // cubes reaching the face at k along the restricted axis are kept
        let k = 12;
        let n = 3;
        let face = faces_of_dim(k, Dim::TWO, 1).unwrap().into_iter().find(|f| f.restricted == vec![0] && f.anchor == vec![k]).unwrap();
        let cubes: Vec<Cube> = (1..=8).map(|y| Cube::new(Dim::TWO, point(&[k - 4, y]), n).unwrap()).collect();
        let out = cover_near_face(k, n as usize, &face, &cubes).unwrap();
        assert!(out.indices.len() * n as usize <= 2 * out.covered);
        let union = |idx: &[usize]| -> BTreeSet<Point> { idx.iter().flat_map(|&i| cubes[i].points().collect::<Vec<_>>()).collect() };
        assert_eq!(union(&out.indices), union(&(0..cubes.len()).collect::<Vec<_>>()));
    }

    #[test]
    fn staircase_necessary_points() {
        let k = 20;
        let host = Cube::host(Dim::TWO, k);
        let hole = |p: &Point| (p[0] <= 3 && p[1] <= 5) || (p[0] <= 6 && p[1] <= 2);
        let t = PointSet::new(Dim::TWO, host.points().filter(|p| !hole(p)).collect());
        let nec = necessary_points(&t, k, 7, 0, 2).unwrap();
        assert_eq!(nec.points(), &[point(&[1, 6]), point(&[4, 3]), point(&[7, 1])]);
        let full = PointSet::from_cube(&host);
        assert!(necessary_points(&full, k, 7, 1, 2).unwrap().is_empty());
        assert!(necessary_points(&full, k, 7, 2, 2).is_err());
        assert!(necessary_points(&full, k, 7, 1, 7).is_err());
    }

    #[test]
    fn interior_example() {
        let f = cube1(1, 20);
        let cubes: Vec<Cube> = (1..=15).map(|a| cube1(a, 6)).collect();
        let out = cover_interior(&f, 6, &cubes).unwrap();
        assert!(out.indices.len() <= 6);
        for p in 7..=14 {
            assert!(out.indices.iter().any(|&i| cubes[i].contains(&point(&[p]))));
        }
        // only every third origin: centers too far from some interior points
        let sparse: Vec<Cube> = (1..=15).step_by(5).map(|a| cube1(a, 6)).collect();
        assert!(matches!(cover_interior(&f, 6, &sparse), Err(SftError::Precondition(_))));
    }

    #[test]
    fn nets_are_separated_and_covering() {
        for n in 3..30i64 {
            for len in 0..80i64 {
                let net = net_1d(1, 1 + len, n).unwrap();
                assert!(net.windows(2).all(|w| 2 * (w[1] - w[0]) > n));
                for x in 1..=1 + len {
                    assert!(net.iter().any(|&c| 3 * (c - x).abs() <= n), "n={n} len={len} x={x}");
                }
                let k = len + 1 + 2 * n;
                assert!(net.len() as i64 * n <= 2 * k);
            }
        }
        assert!(net_1d(1, 3, 2).is_err());
    }

    #[test]
    fn efficient_cover_periodic_orbit() {
        // period (3, 1) has three distinct windows, below 6^2 / 9
        let tile = Pattern::new(Dim::TWO, &[3, 1], vec![0, 1, 1]).unwrap();
        let u = tile.tile(&[30, 30]).unwrap();
        let ec = efficient_cover(&u, 6, 3, 1).unwrap();
        assert_eq!(ec.j, 3);
        assert!(ec.cover.is_cover_of(&u));
        assert_eq!(ec.cover.area(), RepeatCover::full(&u, 6).unwrap().area());
        assert!(ec.within_bound);
        assert_eq!(ec.repairs, 0);
        assert_eq!(reconstruct(&ec.cover, &ec.cover.complement_symbols(&u)), Some(u.clone()));
        let c = Pattern::constant(Dim::TWO, 30, 1);
        let ec = efficient_cover(&c, 6, 3, 1).unwrap();
        assert!(ec.within_bound && ec.cover.is_cover_of(&c));
        assert!(efficient_cover(&c, 6, 6, 1).is_err());
        assert!(efficient_cover(&Pattern::constant(Dim::ONE, 30, 1), 6, 3, 1).is_err());
    }

    #[test]
    fn nuggets_examples() {
        let u = Pattern::constant(Dim::ONE, 21, 0);
        let cover = RepeatCover::full(&u, 4).unwrap();
        assert_eq!(21 - cover.area().len(), 1);
        assert!(nuggets_bound_check(&u, 4, &cover).unwrap());
        assert!(nuggets_bound_check(&Pattern::constant(Dim::ONE, 12, 0), 4, &cover).is_err());
        // distinct windows: a de Bruijn word of order 4 plus its wrap-around
        let db = [0u8, 0, 0, 0, 1, 0, 0, 1, 1, 0, 1, 0, 1, 1, 1, 1, 0, 0, 0];
        let w = Pattern::word(&db);
        let dbc = RepeatCover::full(&w, 4).unwrap();
        assert!(dbc.is_empty());
        assert!(nuggets_bound_check(&w, 4, &dbc).unwrap());
    }

    #[test]
    fn asymptotic_paths() {
        // d = 1 only has the whole-cube route
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 32;
        let k = n * growth_factor(n, 1.0 / 3.0);
        let u = periodic_pattern(&mut rng, Dim::ONE, k, 1, 40);
        let out = asymptotic_cover(&u, n, 1.0 / 3.0).unwrap();
        assert!(out.cover.is_cover_of(&u));
        assert!(out.ell.is_none());
        assert!(out.cover.len() * n <= 2 * k);
        // d = 2 with few windows uses the skeleton band
        let tile = Pattern::new(Dim::TWO, &[2, 2], vec![0, 1, 1, 1]).unwrap();
        let n = 16;
        let k = n * growth_factor(n, 0.2);
        let v = tile.tile(&[k, k]).unwrap();
        let out = asymptotic_cover(&v, n, 0.2);
        assert!(out.is_err(), "j = 4 lies below n/5^d only when n > 100");
        let noisy = periodic_pattern(&mut rng, Dim::TWO, k, 2, 30);
        if let Ok(out) = asymptotic_cover(&noisy, n, 0.2) {
            assert!(out.cover.is_cover_of(&noisy));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn interval_lemma(raw in proptest::collection::vec((0i64..40, 1i64..8), 1..30)) {
            let iv: Vec<(i64, i64)> = raw.iter().map(|&(a, l)| (a, a + l - 1)).collect();
            let kept = reduce_intervals(&iv);
            let union = |idx: &mut dyn Iterator<Item = usize>| -> BTreeSet<i64> { idx.flat_map(|i| iv[i].0..=iv[i].1).collect() };
            prop_assert_eq!(union(&mut kept.iter().copied()), union(&mut (0..iv.len())));
            for x in 0..50 {
                prop_assert!(kept.iter().filter(|&&i| iv[i].0 <= x && x <= iv[i].1).count() <= 2);
            }
        }

        #[test]
        fn reconstruction_two_dim(seed in 0u64..100_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = periodic_pattern(&mut rng, Dim::TWO, 12, 4, seed as u32 % 6);
            let cover = RepeatCover::full(&u, 3).unwrap();
            prop_assert_eq!(reconstruct(&cover, &cover.complement_symbols(&u)), Some(u));
        }

        #[test]
        fn general_coding_bound(seed in 0u64..100_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (k, n) = (20i64, 4usize);
            let faces = all_faces(k, Dim::TWO).into_iter().filter(|f| f.dimension() >= 1).collect::<Vec<_>>();
            let face = &faces[rng.next_u32() as usize % faces.len()];
            let count = 1 + rng.next_u32() as usize % 60;
            let cubes: Vec<Cube> = (0..count)
                .map(|_| {
                    let o = point(&[1 + (rng.next_u32() % 17) as i64, 1 + (rng.next_u32() % 17) as i64]);
                    Cube::new(Dim::TWO, o, n as i64).unwrap()
                })
                .collect();
            let out = cover_near_face(k, n, face, &cubes).unwrap();
            prop_assert!(out.indices.len() * n <= 2 * out.covered);
            let region = |p: &Point| face.restricted.iter().zip(&face.anchor).all(|(&i, &s)| (p[i] - s).abs() <= n as i64);
            let union = |idx: &mut dyn Iterator<Item = usize>| -> BTreeSet<Point> {
                idx.flat_map(|i| cubes[i].points().filter(|p| region(p)).collect::<Vec<_>>()).collect()
            };
            prop_assert_eq!(union(&mut out.indices.iter().copied()), union(&mut (0..cubes.len())));
        }

        #[test]
        fn place2_bound(seed in 0u64..100_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (k, n, r) = (20i64, 5i64, 2i64);
            let host = Cube::host(Dim::TWO, k);
            let density = rng.next_u32() % 100;
            let t = PointSet::new(Dim::TWO, host.points().filter(|_| rng.next_u32() % 100 >= density).collect());
            for ell in 0..2 {
                let nec = necessary_points(&t, k, n, ell, r).unwrap();
                prop_assert!(nec.len() as i64 * r <= 2 * (k * k - t.len() as i64));
            }
        }

        #[test]
        fn efficient_cover_is_valid(seed in 0u64..100_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // periods up to 2x2 give at most 4 windows, below 7^2 / 9
            let (k, n) = (20usize, 7usize);
            let u = periodic_pattern(&mut rng, Dim::TWO, k, 2, 0);
            let r = 1 + rng.next_u32() as usize % (n - 1);
            let ec = efficient_cover(&u, n, r, 1).unwrap();
            prop_assert!(ec.cover.is_cover_of(&u));
            prop_assert!(ec.within_bound);
            prop_assert_eq!(ec.repairs, 0);
            prop_assert_eq!(ec.cover.area(), RepeatCover::full(&u, n).unwrap().area());
        }

        #[test]
        fn nuggets_hold(seed in 0u64..100_000, two in any::<bool>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (dim, k, n) = if two { (Dim::TWO, 16, 3) } else { (Dim::ONE, 40, 5) };
            let noise = rng.next_u32() % 8;
            let u = periodic_pattern(&mut rng, dim, k, 5, noise);
            let cover = RepeatCover::full(&u, n).unwrap();
            prop_assert!(nuggets_bound_check(&u, n, &cover).unwrap());
        }
    }
}
