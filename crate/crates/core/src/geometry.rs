//! Integer geometry of `Z^d` for `d <= 3`: cubes, faces of a host cube, thickened
//! face interiors, inner boundaries and cube enumeration.
//!
//! Points are fixed arrays of length [`MAX_DIM`]; coordinates past the ambient
//! dimension are always zero, so array comparison is the lexicographic order.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, SftError};

pub const MAX_DIM: usize = 3;

pub type Point = [i64; MAX_DIM];

/// Lattice dimension, validated to lie in `1..=MAX_DIM`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Dim(usize);

impl Dim {
    pub const ONE: Dim = Dim(1);
    pub const TWO: Dim = Dim(2);
    pub const THREE: Dim = Dim(3);

    pub fn new(d: usize) -> Result<Dim> {
        if d == 0 || d > MAX_DIM {
            return domain(format!("dimension {d} outside 1..={MAX_DIM}"));
        }
        Ok(Dim(d))
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }
}

impl TryFrom<usize> for Dim {
    type Error = SftError;
    fn try_from(d: usize) -> Result<Dim> {
        Dim::new(d)
    }
}

impl From<Dim> for usize {
    fn from(d: Dim) -> usize {
        d.0
    }
}

/// Builds a point from its first `coords.len()` coordinates.
pub fn point(coords: &[i64]) -> Point {
    let mut p = [0; MAX_DIM];
    p[..coords.len()].copy_from_slice(coords);
    p
}

/// The point with value `v` in each of the first `d` coordinates.
pub fn splat(dim: Dim, v: i64) -> Point {
    let mut p = [0; MAX_DIM];
    p[..dim.get()].iter_mut().for_each(|c| *c = v);
    p
}

#[inline]
pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Sup-norm distance.
#[inline]
pub fn dist(a: Point, b: Point) -> i64 {
    (0..MAX_DIM).map(|i| (a[i] - b[i]).abs()).max().unwrap_or(0)
}

/// Number of faces of dimension `l` of a `d`-cube: `2^(d-l) * binom(d, l)`.
pub fn face_count(dim: Dim, l: usize) -> usize {
    let d = dim.get();
    if l > d {
        return 0;
    }
    let mut binom = 1usize;
    for i in 0..l {
        binom = binom * (d - i) / (i + 1);
    }
    binom << (d - l)
}

/// The cube `origin + [0, side)^d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cube {
    pub dim: Dim,
    pub origin: Point,
    pub side: i64,
}

impl Cube {
    pub fn new(dim: Dim, origin: Point, side: i64) -> Result<Cube> {
        if side < 1 {
            return domain(format!("cube side {side} must be positive"));
        }
        Ok(Cube { dim, origin, side })
    }

    /// The host cube `[1, k]^d`.
    pub fn host(dim: Dim, k: i64) -> Cube {
        Cube { dim, origin: splat(dim, 1), side: k.max(1) }
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.dim.get()
    }

    /// Lexicographically minimal point.
    #[inline]
    pub fn min_point(&self) -> Point {
        self.origin
    }

    /// Coordinatewise maximal point.
    pub fn max_point(&self) -> Point {
        add(self.origin, splat(self.dim, self.side - 1))
    }

    pub fn len(&self) -> usize {
        (self.side as usize).pow(self.d() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn contains(&self, p: &Point) -> bool {
        (0..self.d()).all(|i| p[i] >= self.origin[i] && p[i] < self.origin[i] + self.side)
    }

    pub fn contains_cube(&self, other: &Cube) -> bool {
        self.contains(&other.min_point()) && self.contains(&other.max_point())
    }

    /// Twice the center, so that centers of even cubes stay integral.
    pub fn center2(&self) -> Point {
        let mut c = [0; MAX_DIM];
        for (i, ci) in c.iter_mut().enumerate().take(self.d()) {
            *ci = 2 * self.origin[i] + self.side - 1;
        }
        c
    }

    /// Rank of `p` in the lexicographic enumeration of the cube.
    pub fn index_of(&self, p: &Point) -> usize {
        let mut idx = 0usize;
        for i in 0..self.d() {
            idx = idx * self.side as usize + (p[i] - self.origin[i]) as usize;
        }
        idx
    }

    pub fn point_at(&self, mut idx: usize) -> Point {
        let mut p = self.origin;
        let s = self.side as usize;
        for i in (0..self.d()).rev() {
            p[i] += (idx % s) as i64;
            idx /= s;
        }
        p
    }

    /// Points in lexicographic order.
    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len()).map(move |i| self.point_at(i))
    }

    pub fn translate(&self, v: Point) -> Cube {
        Cube { origin: add(self.origin, v), ..*self }
    }
}

/// Finite point set kept sorted and deduplicated.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointSet {
    pub dim: Dim,
    points: Vec<Point>,
}

impl PointSet {
    pub fn new(dim: Dim, mut points: Vec<Point>) -> PointSet {
        points.sort_unstable();
        points.dedup();
        PointSet { dim, points }
    }

    pub fn empty(dim: Dim) -> PointSet {
        PointSet { dim, points: Vec::new() }
    }

    pub fn from_cube(c: &Cube) -> PointSet {
        PointSet { dim: c.dim, points: c.points().collect() }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.points.binary_search(p).is_ok()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point> {
        self.points.iter()
    }

    /// Lexicographically minimal element.
    pub fn min_point(&self) -> Option<Point> {
        self.points.first().copied()
    }

    pub fn union(&self, other: &PointSet) -> PointSet {
        let mut v = self.points.clone();
        v.extend_from_slice(&other.points);
        PointSet::new(self.dim, v)
    }

    pub fn difference(&self, other: &PointSet) -> PointSet {
        let v = self.points.iter().filter(|p| !other.contains(p)).copied().collect();
        PointSet { dim: self.dim, points: v }
    }

    pub fn is_subset(&self, other: &PointSet) -> bool {
        self.points.iter().all(|p| other.contains(p))
    }

    pub fn is_disjoint(&self, other: &PointSet) -> bool {
        self.points.iter().all(|p| !other.contains(p))
    }
}

/// Offsets of the closed sup-norm ball of radius `r` around the origin.
fn ball_offsets(dim: Dim, r: i64) -> impl Iterator<Item = Point> {
    let c = Cube { dim, origin: splat(dim, -r), side: 2 * r + 1 };
    (0..c.len()).map(move |i| c.point_at(i))
}

/// Inner boundary: points of `e` within distance `r` of the complement.
pub fn boundary(e: &PointSet, r: i64) -> PointSet {
    let offs: Vec<Point> = ball_offsets(e.dim, r.max(0)).collect();
    let v = e
        .iter()
        .filter(|&&x| offs.iter().any(|o| !e.contains(&add(x, *o))))
        .copied()
        .collect();
    PointSet { dim: e.dim, points: v }
}

/// Points of `e` whose closed `r`-ball lies in `e`.
pub fn interior(e: &PointSet, r: i64) -> PointSet {
    let offs: Vec<Point> = ball_offsets(e.dim, r.max(0)).collect();
    let v = e
        .iter()
        .filter(|&&x| offs.iter().all(|o| e.contains(&add(x, *o))))
        .copied()
        .collect();
    PointSet { dim: e.dim, points: v }
}

/// Closed `r`-neighbourhood of `e`.
pub fn thicken(e: &PointSet, r: i64) -> PointSet {
    let offs: Vec<Point> = ball_offsets(e.dim, r.max(0)).collect();
    let mut v = Vec::with_capacity(e.len() * offs.len());
    for x in e.iter() {
        for o in &offs {
            v.push(add(*x, *o));
        }
    }
    PointSet::new(e.dim, v)
}

/// All translates of the `n`-cube contained in `e`, sorted by minimal point.
pub fn cubes_in(e: &PointSet, n: i64) -> Vec<Cube> {
    if n < 1 {
        return Vec::new();
    }
    e.iter()
        .map(|&o| Cube { dim: e.dim, origin: o, side: n })
        .filter(|c| c.points().all(|p| e.contains(&p)))
        .collect()
}

/// All translates of the `n`-cube inside a cube, sorted by minimal point.
pub fn cubes_in_cube(host: &Cube, n: i64) -> Vec<Cube> {
    if n < 1 || n > host.side {
        return Vec::new();
    }
    let origins = Cube { dim: host.dim, origin: host.origin, side: host.side - n + 1 };
    origins.points().map(|o| Cube { dim: host.dim, origin: o, side: n }).collect()
}

/// The face of `[1, k]^d` fixing the coordinates in `restricted` to the
/// corresponding `anchor` values, each of which is `1` or `k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Face {
    pub k: i64,
    pub dim: Dim,
    /// Restricted axes, 0-based and increasing.
    pub restricted: Vec<usize>,
    pub anchor: Vec<i64>,
}

impl Face {
    /// The whole host cube as a face with no restricted axes.
    pub fn full(k: i64, dim: Dim) -> Face {
        Face { k, dim, restricted: Vec::new(), anchor: Vec::new() }
    }

    pub fn dimension(&self) -> usize {
        self.dim.get() - self.restricted.len()
    }

    pub fn anchor_of(&self, axis: usize) -> Option<i64> {
        self.restricted.iter().position(|&a| a == axis).map(|i| self.anchor[i])
    }

    pub fn free_axes(&self) -> Vec<usize> {
        (0..self.dim.get()).filter(|a| !self.restricted.contains(a)).collect()
    }

    pub fn contains(&self, p: &Point) -> bool {
        Cube::host(self.dim, self.k).contains(p)
            && self.restricted.iter().zip(&self.anchor).all(|(&i, &s)| p[i] == s)
    }

    /// Sup-norm distance from a point of the host cube to the face.
    pub fn distance(&self, p: &Point) -> i64 {
        self.restricted
            .iter()
            .zip(&self.anchor)
            .map(|(&i, &s)| (p[i] - s).abs())
            .max()
            .unwrap_or(0)
    }

    pub fn points(&self) -> PointSet {
        let host = Cube::host(self.dim, self.k);
        PointSet { dim: self.dim, points: host.points().filter(|p| self.contains(p)).collect() }
    }
}

fn combinations(d: usize, size: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, d: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..d {
            cur.push(i);
            rec(i + 1, d, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, d, size, &mut Vec::new(), &mut out);
    out
}

/// Faces of `[1, k]^d` of dimension `l`, ordered by restricted axes then anchors.
pub fn faces_of_dim(k: i64, dim: Dim, l: usize) -> Result<Vec<Face>> {
    let d = dim.get();
    if l > d {
        return domain(format!("face dimension {l} exceeds ambient dimension {d}"));
    }
    if k < 1 {
        return domain(format!("host side {k} must be positive"));
    }
    let mut out = Vec::with_capacity(face_count(dim, l));
    for restricted in combinations(d, d - l) {
        let m = restricted.len();
        for mask in 0..(1u32 << m) {
            // bit set means anchor k; the most significant bit belongs to the first axis
            let anchor = (0..m).map(|t| if mask >> (m - 1 - t) & 1 == 1 { k } else { 1 }).collect();
            out.push(Face { k, dim, restricted: restricted.clone(), anchor });
        }
    }
    Ok(out)
}

/// Every face, from the full cube down to the corners.
pub fn all_faces(k: i64, dim: Dim) -> Vec<Face> {
    (0..=dim.get())
        .rev()
        .flat_map(|l| faces_of_dim(k, dim, l).unwrap_or_default())
        .collect()
}

/// The `n`-thickened interior of a face.
///
/// Restricted coordinates range over the `n` layers adjacent to the anchor
/// (`|p_i - s_i| <= n - 1`) and free coordinates over `[n + 1, k - n]`. With this
/// reading the sets over all faces partition the host cube.
pub fn thickened_interior(face: &Face, n: i64) -> Result<PointSet> {
    let k = face.k;
    if n < 1 || k <= 2 * n {
        return Err(SftError::Degenerate(format!("thickened interior needs k > 2n, got k={k}, n={n}")));
    }
    let d = face.dim.get();
    let mut ranges = [(0i64, 0i64); MAX_DIM];
    for (axis, range) in ranges.iter_mut().enumerate().take(d) {
        *range = match face.anchor_of(axis) {
            Some(1) => (1, n),
            Some(_) => (k - n + 1, k),
            None => (n + 1, k - n),
        };
    }
    let mut pts = Vec::new();
    let mut p = [0i64; MAX_DIM];
    fn rec(axis: usize, d: usize, ranges: &[(i64, i64); MAX_DIM], p: &mut Point, out: &mut Vec<Point>) {
        if axis == d {
            out.push(*p);
            return;
        }
        for v in ranges[axis].0..=ranges[axis].1 {
            p[axis] = v;
            rec(axis + 1, d, ranges, p, out);
        }
    }
    rec(0, d, &ranges, &mut p, &mut pts);
    Ok(PointSet { dim: face.dim, points: pts })
}

/// Distance from a point of `[1, k]^d` to the `l`-skeleton.
pub fn skeleton_distance(p: &Point, k: i64, dim: Dim, l: usize) -> i64 {
    let d = dim.get();
    if l >= d {
        return 0;
    }
    let mut ends: Vec<i64> = (0..d).map(|i| (p[i] - 1).min(k - p[i])).collect();
    ends.sort_unstable();
    ends[d - l - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn face_counts() {
        assert_eq!(faces_of_dim(10, Dim::TWO, 0).unwrap().len(), 4);
        let top = faces_of_dim(10, Dim::TWO, 2).unwrap();
        assert_eq!(top.len(), 1);
        assert_eq!(top[0].points().len(), 100);
        assert_eq!(faces_of_dim(6, Dim::THREE, 1).unwrap().len(), 12);
        assert!(faces_of_dim(6, Dim::TWO, 3).is_err());
        for d in 1..=3 {
            let dim = Dim::new(d).unwrap();
            for l in 0..=d {
                let fs = faces_of_dim(5, dim, l).unwrap();
                assert_eq!(fs.len(), face_count(dim, l));
                assert!(fs.iter().all(|f| f.dimension() == l));
            }
        }
    }

    #[test]
    fn thickened_interiors_partition() {
        for d in 1..=2 {
            let dim = Dim::new(d).unwrap();
            for n in 1..=5 {
                for k in (2 * n + 1)..=12 {
                    let host = PointSet::from_cube(&Cube::host(dim, k));
                    let parts: Vec<PointSet> =
                        all_faces(k, dim).iter().map(|f| thickened_interior(f, n).unwrap()).collect();
                    let total: usize = parts.iter().map(|p| p.len()).sum();
                    assert_eq!(total, host.len());
                    let mut union = PointSet::empty(dim);
                    for p in &parts {
                        assert!(union.is_disjoint(p));
                        union = union.union(p);
                    }
                    assert_eq!(union, host);
                }
            }
        }
    }

    #[test]
    fn thickened_interior_examples() {
        let full = Face::full(9, Dim::TWO);
        assert_eq!(thickened_interior(&full, 2).unwrap().len(), 25);
        let corner = &faces_of_dim(9, Dim::TWO, 0).unwrap()[0];
        let t = thickened_interior(corner, 2).unwrap();
        assert_eq!(t.len(), 4);
        assert_eq!(t.points()[0], point(&[1, 1]));
        assert!(thickened_interior(&full, 5).is_err());
    }

    #[test]
    fn skeleton_decomposition() {
        let dim = Dim::TWO;
        for n in 1..=4i64 {
            for k in (2 * n + 1)..=12 {
                for l in 0..=1usize {
                    let skel: Vec<Point> = faces_of_dim(k, dim, l)
                        .unwrap()
                        .iter()
                        .flat_map(|f| f.points().points().to_vec())
                        .collect();
                    let near = thicken(&PointSet::new(dim, skel), n);
                    let high: Vec<PointSet> = all_faces(k, dim)
                        .iter()
                        .filter(|f| f.dimension() > l)
                        .map(|f| thickened_interior(f, n).unwrap())
                        .collect();
                    for p in Cube::host(dim, k).points() {
                        let in_near = near.contains(&p);
                        assert_eq!(in_near, skeleton_distance(&p, k, dim, l) <= n);
                        let hits = high.iter().filter(|t| t.contains(&p)).count();
                        assert!(hits <= 1);
                        assert!(in_near || hits == 1);
                    }
                }
            }
        }
    }

    #[test]
    fn boundary_examples() {
        let seg = PointSet::from_cube(&Cube::new(Dim::ONE, point(&[1]), 5).unwrap());
        let b = boundary(&seg, 1);
        assert_eq!(b.points(), &[point(&[1]), point(&[5])]);
        let sq = PointSet::from_cube(&Cube::host(Dim::TWO, 4));
        assert_eq!(boundary(&sq, 1).len(), 12);
        assert_eq!(interior(&sq, 1).len(), 4);
        let th = thicken(&sq, 2);
        assert!(interior(&th, 2).len() >= sq.len());
        assert!(sq.is_subset(&interior(&th, 2)));
        assert!(interior(&sq, 1).is_subset(&sq));
    }

    #[test]
    fn cube_enumeration() {
        let host = Cube::host(Dim::TWO, 7);
        let cs = cubes_in_cube(&host, 3);
        assert_eq!(cs.len(), 25);
        assert_eq!(cubes_in(&PointSet::from_cube(&host), 3), cs);
        let seg = PointSet::from_cube(&Cube::new(Dim::ONE, point(&[1]), 4).unwrap());
        let origins: Vec<i64> = cubes_in(&seg, 2).iter().map(|c| c.origin[0]).collect();
        assert_eq!(origins, vec![1, 2, 3]);
        for c in &cs {
            let m = PointSet::from_cube(c).min_point().unwrap();
            assert_eq!(m, c.origin);
            let f = Cube::host(Dim::TWO, 3).translate(sub(m, splat(Dim::TWO, 1)));
            assert_eq!(&f, c);
        }
    }

    #[test]
    fn cube_index_roundtrip() {
        let c = Cube::new(Dim::THREE, point(&[-2, 3, 5]), 4).unwrap();
        let pts: Vec<Point> = c.points().collect();
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
        for (i, p) in pts.iter().enumerate() {
            assert_eq!(c.index_of(p), i);
        }
    }
}
