//! Persistent homology over Z/2 and Euler characteristic curves.
//!
//! Simplices are processed in (time, dimension, lexicographic vertex)
//! order and the boundary matrix is reduced by standard left-to-right
//! column reduction. Zero-persistence pairs are discarded. Classes of
//! the top recorded degree of an `m`-skeleton never meet their
//! potential killers, so that degree is flagged as truncated and the
//! metric policies can exclude it.
//!
//! The reduction is deliberately the textbook algorithm — no clearing
//! or cohomology tricks — but its bookkeeping is flat: pivot ownership
//! and face positions live in arrays (vertices and edges index
//! directly; only dimensions ≥ 2 fall back to hashing), and the working
//! column is a hierarchical bit accumulator, so a column addition costs
//! the stored column's length and each successive pivot is found by a
//! cache-resident summary scan rather than a walk over the position
//! range. That keeps full 2-skeletons of a few hundred points
//! tractable.

use std::collections::{BTreeMap, HashMap};

use smallvec::SmallVec;

use crate::filtration::{FilteredComplex, RoundingGrid, VertexSet};
use crate::{Error, Result, Scalar};

/// One off-diagonal diagram point; `death` is `+inf` for essential
/// classes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersistencePoint<F> {
    pub birth: F,
    pub death: F,
}

impl<F: Scalar> PersistencePoint<F> {
    pub fn persistence(&self) -> F {
        self.death - self.birth
    }

    pub fn is_essential(&self) -> bool {
        self.death.is_infinite()
    }
}

/// A persistence diagram split by homological degree. Point lists are
/// kept sorted by (birth, death) with essential points last, so equal
/// diagrams compare equal structurally.
#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceDiagram<F> {
    skeleton_dim: usize,
    degrees: BTreeMap<usize, Vec<PersistencePoint<F>>>,
}

impl<F: Scalar> PersistenceDiagram<F> {
    pub fn new(skeleton_dim: usize) -> Self {
        Self { skeleton_dim, degrees: BTreeMap::new() }
    }

    pub fn from_points(
        skeleton_dim: usize,
        points: impl IntoIterator<Item = (usize, PersistencePoint<F>)>,
    ) -> Result<Self> {
        let mut dg = Self::new(skeleton_dim);
        for (degree, p) in points {
            if p.birth.is_infinite() || p.birth.is_nan() || p.death.is_nan() {
                return Err(Error::Domain("diagram point with non-finite birth".into()));
            }
            if p.death < p.birth {
                return Err(Error::Domain("diagram point dies before it is born".into()));
            }
            if p.death == p.birth {
                continue;
            }
            dg.degrees.entry(degree).or_default().push(p);
        }
        for pts in dg.degrees.values_mut() {
            sort_points(pts);
        }
        Ok(dg)
    }

    pub fn skeleton_dim(&self) -> usize {
        self.skeleton_dim
    }

    /// Degree-`m` classes of an `m`-skeleton are truncated: their
    /// deaths are artifacts of the missing `(m+1)`-simplices.
    pub fn is_truncated(&self, degree: usize) -> bool {
        degree == self.skeleton_dim
    }

    pub fn points(&self, degree: usize) -> &[PersistencePoint<F>] {
        self.degrees.get(&degree).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Degrees that carry at least one point, ascending.
    pub fn active_degrees(&self) -> impl Iterator<Item = usize> + '_ {
        self.degrees.keys().copied()
    }

    pub fn total_points(&self) -> usize {
        self.degrees.values().map(Vec::len).sum()
    }

    /// Projects births and deaths to the grid, dropping points that
    /// collapse onto the diagonal. Infinite deaths stay infinite.
    pub fn round_to_grid(&self, grid: &RoundingGrid<F>) -> Self {
        let mut degrees = BTreeMap::new();
        for (&deg, pts) in &self.degrees {
            let mut rounded: Vec<PersistencePoint<F>> = pts
                .iter()
                .map(|p| PersistencePoint {
                    birth: grid.project(p.birth),
                    death: if p.is_essential() { p.death } else { grid.project(p.death) },
                })
                .filter(|p| p.death != p.birth)
                .collect();
            if !rounded.is_empty() {
                sort_points(&mut rounded);
                degrees.insert(deg, rounded);
            }
        }
        Self { skeleton_dim: self.skeleton_dim, degrees }
    }
}

pub(crate) fn sort_points<F: Scalar>(pts: &mut [PersistencePoint<F>]) {
    pts.sort_by(|a, b| {
        a.birth
            .partial_cmp(&b.birth)
            .unwrap()
            .then(a.death.partial_cmp(&b.death).unwrap())
    });
}

/// The critical simplices behind one diagram point.
#[derive(Debug, Clone, PartialEq)]
pub struct PairingEntry<F> {
    pub degree: usize,
    pub birth: F,
    /// `None` for essential classes.
    pub death: Option<F>,
    /// The positive simplex creating the class; its appearance time is
    /// the birth.
    pub birth_simplex: VertexSet,
    /// The negative simplex killing the class; its appearance time is
    /// the death.
    pub death_simplex: Option<VertexSet>,
}

/// Critical simplex pairs for every recorded diagram point, in the
/// same per-degree order as the diagram's point lists.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CriticalPairing<F> {
    pub entries: Vec<PairingEntry<F>>,
}

impl<F: Scalar> CriticalPairing<F> {
    pub fn of_degree(&self, degree: usize) -> impl Iterator<Item = &PairingEntry<F>> {
        self.entries.iter().filter(move |e| e.degree == degree)
    }
}

/// Persistent homology of the full skeleton. Equivalent to
/// [`compute_persistence_up_to`] with `max_degree = skeleton_dim`.
pub fn compute_persistence<F: Scalar>(
    complex: &FilteredComplex<F>,
) -> Result<(PersistenceDiagram<F>, CriticalPairing<F>)> {
    compute_persistence_up_to(complex, complex.skeleton_dim())
}

/// Persistent homology recording only degrees `<= max_degree`. The
/// reduction always runs over the whole complex; the cap only skips
/// recording (useful when the truncated top degree would dominate the
/// output).
pub fn compute_persistence_up_to<F: Scalar>(
    complex: &FilteredComplex<F>,
    max_degree: usize,
) -> Result<(PersistenceDiagram<F>, CriticalPairing<F>)> {
    if complex.is_empty() {
        return Err(Error::Domain("persistence of an empty complex".into()));
    }
    let simplices = complex.simplices();
    let n = simplices.len();

    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_unstable_by(|&a, &b| {
        let (sa, sb) = (&simplices[a as usize], &simplices[b as usize]);
        sa.time
            .partial_cmp(&sb.time)
            .unwrap()
            .then(sa.vertices.len().cmp(&sb.vertices.len()))
            .then_with(|| sa.vertices.cmp(&sb.vertices))
    });

    if n >= u32::MAX as usize {
        return Err(Error::Domain("complex exceeds the supported simplex count".into()));
    }
    let nv = complex.n_vertices();

    // Face positions are needed for every dimension that occurs as a
    // face of something present. Vertices and edges — the only hot
    // cases — index into flat arrays; higher dimensions hash.
    let mut has_dim = vec![false; complex.skeleton_dim() + 2];
    for s in simplices {
        has_dim[s.dim()] = true;
    }
    const NONE: u32 = u32::MAX;
    let need_vert = has_dim[1];
    let need_edge = has_dim.get(2).copied().unwrap_or(false);
    // Condensed upper-triangular edge index; falls back to hashing for
    // huge vertex sets, where the n² table would dominate memory.
    let edge_table = need_edge && nv <= 4096;
    let mut vert_pos: Vec<u32> = if need_vert { vec![NONE; nv] } else { Vec::new() };
    let mut edge_pos: Vec<u32> =
        if edge_table { vec![NONE; nv * (nv - 1) / 2] } else { Vec::new() };
    let eidx = |u: usize, v: usize| -> usize {
        // u < v
        u * (2 * nv - u - 1) / 2 + (v - u - 1)
    };
    let mut face_map: HashMap<VertexSet, u32> = HashMap::new();

    // Standard column reduction: each stored reduced column is keyed by
    // its pivot (largest face position). `pivot_owner[p]` is the index
    // of the stored column with pivot `p`, `death_of[p]` the position of
    // the simplex that owns it. The working column lives in a
    // three-level bit tree (`l0` holds the bits, `l1` flags nonzero
    // `l0` words, `l2` flags nonzero `l1` words), so a column addition
    // costs one flip per stored entry, and locating the next pivot or
    // draining a finished column reads the few-hundred-byte summaries
    // instead of scanning the whole position range. Stored columns never
    // contain an entry above their pivot, so the pivot only moves down
    // and the summary scan resumes where it left off.
    #[inline]
    fn flip_bit(l0: &mut [u64], l1: &mut [u64], l2: &mut [u64], fp: u32) {
        let w = (fp >> 6) as usize;
        let before = l0[w];
        let after = before ^ (1u64 << (fp & 63));
        l0[w] = after;
        if before == 0 {
            l1[w >> 6] |= 1u64 << (w & 63);
            l2[w >> 12] |= 1u64 << ((w >> 6) & 63);
        } else if after == 0 {
            let w1 = w >> 6;
            l1[w1] &= !(1u64 << (w & 63));
            if l1[w1] == 0 {
                l2[w1 >> 6] &= !(1u64 << (w1 & 63));
            }
        }
    }

    let mut pivot_owner: Vec<u32> = vec![NONE; n];
    let mut death_of: Vec<u32> = vec![NONE; n];
    let mut stored: Vec<Vec<u32>> = Vec::new();
    let mut positive = vec![false; n];
    let l0_len = n.div_ceil(64);
    let l1_len = l0_len.div_ceil(64);
    let mut l0: Vec<u64> = vec![0u64; l0_len];
    let mut l1: Vec<u64> = vec![0u64; l1_len];
    let mut l2: Vec<u64> = vec![0u64; l1_len.div_ceil(64)];
    let mut face_buf: VertexSet = SmallVec::new();
    let mut face_pos_buf: Vec<u32> = Vec::new();

    for (pos, &orig) in order.iter().enumerate() {
        let s = &simplices[orig as usize];
        let d = s.dim();

        // Positions of the boundary faces of the current simplex.
        face_pos_buf.clear();
        let mut missing = false;
        match d {
            0 => {}
            1 => {
                for &v in &s.vertices {
                    let fp = vert_pos[v as usize];
                    if fp == NONE {
                        missing = true;
                    } else {
                        face_pos_buf.push(fp);
                    }
                }
            }
            2 if edge_table => {
                let (a, b, c) =
                    (s.vertices[0] as usize, s.vertices[1] as usize, s.vertices[2] as usize);
                for (u, v) in [(a, b), (a, c), (b, c)] {
                    let fp = edge_pos[eidx(u, v)];
                    if fp == NONE {
                        missing = true;
                    } else {
                        face_pos_buf.push(fp);
                    }
                }
            }
            _ => {
                for skip in 0..s.vertices.len() {
                    face_buf.clear();
                    face_buf.extend(
                        s.vertices.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &v)| v),
                    );
                    match face_map.get(&face_buf) {
                        Some(&fp) => face_pos_buf.push(fp),
                        None => missing = true,
                    }
                }
            }
        }
        if missing {
            return Err(Error::Domain(format!(
                "simplex {:?} is missing one of its faces",
                s.vertices
            )));
        }

        // Register this simplex as a face for the dimension above.
        if has_dim.get(d + 1).copied().unwrap_or(false) {
            match d {
                0 => vert_pos[s.vertices[0] as usize] = pos as u32,
                1 if edge_table => {
                    edge_pos[eidx(s.vertices[0] as usize, s.vertices[1] as usize)] = pos as u32;
                }
                _ => {
                    face_map.insert(s.vertices.clone(), pos as u32);
                }
            }
        }

        if d == 0 {
            positive[pos] = true;
            continue;
        }
        let mut low: u32 = NONE; // largest live face position
        for &fp in &face_pos_buf {
            flip_bit(&mut l0, &mut l1, &mut l2, fp);
            if low == NONE || fp > low {
                low = fp;
            }
        }
        loop {
            if low == NONE {
                // Column cancelled to zero; the accumulator is clean.
                positive[pos] = true;
                break;
            }
            let owner = pivot_owner[low as usize];
            if owner == NONE {
                pivot_owner[low as usize] = stored.len() as u32;
                death_of[low as usize] = pos as u32;
                // Extract the reduced column in ascending order,
                // draining all three levels as it goes.
                let mut col: Vec<u32> = Vec::new();
                for w2 in 0..=(low >> 18) as usize {
                    let mut word2 = l2[w2];
                    l2[w2] = 0;
                    while word2 != 0 {
                        let i1 = (w2 << 6) | word2.trailing_zeros() as usize;
                        word2 &= word2 - 1;
                        let mut word1 = l1[i1];
                        l1[i1] = 0;
                        while word1 != 0 {
                            let i0 = (i1 << 6) | word1.trailing_zeros() as usize;
                            word1 &= word1 - 1;
                            let mut word0 = l0[i0];
                            l0[i0] = 0;
                            while word0 != 0 {
                                col.push(((i0 as u32) << 6) | word0.trailing_zeros());
                                word0 &= word0 - 1;
                            }
                        }
                    }
                }
                stored.push(col);
                break;
            }
            // Flip in the stored column; its pivot equals `low`, every
            // other entry is smaller, so the new pivot is strictly lower
            // and the summary scan can resume at the old pivot's word.
            for &e in &stored[owner as usize] {
                flip_bit(&mut l0, &mut l1, &mut l2, e);
            }
            let mut w2 = (low >> 18) as usize;
            low = NONE;
            loop {
                if l2[w2] != 0 {
                    let i1 = (w2 << 6) | (63 - l2[w2].leading_zeros()) as usize;
                    let i0 = (i1 << 6) | (63 - l1[i1].leading_zeros()) as usize;
                    low = ((i0 as u32) << 6) | (63 - l0[i0].leading_zeros());
                    break;
                }
                if w2 == 0 {
                    break;
                }
                w2 -= 1;
            }
        }
    }
    drop(stored);
    drop(pivot_owner);
    drop(l0);
    drop(l1);
    drop(l2);
    drop(face_map);
    drop(vert_pos);
    drop(edge_pos);

    let mut entries: Vec<PairingEntry<F>> = Vec::new();
    for (pos, &orig) in order.iter().enumerate() {
        if !positive[pos] {
            continue;
        }
        let s = &simplices[orig as usize];
        if s.dim() > max_degree {
            continue;
        }
        let dpos = death_of[pos];
        let (death, death_simplex) = if dpos != NONE {
            let ds = &simplices[order[dpos as usize] as usize];
            if ds.time == s.time {
                continue;
            }
            (Some(ds.time), Some(ds.vertices.clone()))
        } else {
            (None, None)
        };
        entries.push(PairingEntry {
            degree: s.dim(),
            birth: s.time,
            death,
            birth_simplex: s.vertices.clone(),
            death_simplex,
        });
    }
    entries.sort_by(|a, b| {
        a.degree
            .cmp(&b.degree)
            .then(a.birth.partial_cmp(&b.birth).unwrap())
            .then_with(|| match (a.death, b.death) {
                (Some(x), Some(y)) => x.partial_cmp(&y).unwrap(),
                (Some(_), None) => std::cmp::Ordering::Less,
                (None, Some(_)) => std::cmp::Ordering::Greater,
                (None, None) => std::cmp::Ordering::Equal,
            })
            .then_with(|| a.birth_simplex.cmp(&b.birth_simplex))
    });

    let mut diagram = PersistenceDiagram::new(complex.skeleton_dim());
    for e in &entries {
        diagram.degrees.entry(e.degree).or_default().push(PersistencePoint {
            birth: e.birth,
            death: e.death.unwrap_or_else(F::infinity),
        });
    }
    Ok((diagram, CriticalPairing { entries }))
}

/// An integer-valued right-continuous step function that is zero before
/// its first breakpoint. Breakpoint times are strictly increasing and
/// consecutive values differ.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EulerCurve<F> {
    breakpoints: Vec<(F, i64)>,
}

impl<F: Scalar> EulerCurve<F> {
    /// Builds a curve from (time, value) jumps, canonicalizing: merges
    /// equal times (keeping the last value), drops no-op breakpoints,
    /// and drops a leading zero segment.
    pub fn new(mut breakpoints: Vec<(F, i64)>) -> Result<Self> {
        if breakpoints.iter().any(|(t, _)| !t.is_finite()) {
            return Err(Error::Domain("euler curve breakpoints must be finite".into()));
        }
        if !breakpoints.windows(2).all(|w| w[0].0 < w[1].0) {
            return Err(Error::Domain("euler curve breakpoints must be strictly increasing".into()));
        }
        let mut canon: Vec<(F, i64)> = Vec::with_capacity(breakpoints.len());
        let mut prev = 0i64;
        for (t, v) in breakpoints.drain(..) {
            if v != prev {
                canon.push((t, v));
                prev = v;
            }
        }
        Ok(Self { breakpoints: canon })
    }

    pub fn zero() -> Self {
        Self { breakpoints: Vec::new() }
    }

    /// A curve that is `value` on `[from, +inf)` and zero before.
    pub fn step(from: F, value: i64) -> Result<Self> {
        Self::new(vec![(from, value)])
    }

    pub fn breakpoints(&self) -> &[(F, i64)] {
        &self.breakpoints
    }

    pub fn is_zero(&self) -> bool {
        self.breakpoints.is_empty()
    }

    pub fn value_at(&self, t: F) -> i64 {
        let idx = self.breakpoints.partition_point(|&(bt, _)| bt <= t);
        if idx == 0 {
            0
        } else {
            self.breakpoints[idx - 1].1
        }
    }

    /// Pointwise combination `f(self, other)` with `f(0,0) = 0`.
    fn combine(&self, other: &Self, f: impl Fn(i64, i64) -> i64) -> Self {
        let mut out: Vec<(F, i64)> = Vec::with_capacity(self.breakpoints.len() + other.breakpoints.len());
        let (mut i, mut j) = (0, 0);
        let (mut va, mut vb) = (0i64, 0i64);
        let mut prev = 0i64;
        while i < self.breakpoints.len() || j < other.breakpoints.len() {
            let ta = self.breakpoints.get(i).map(|&(t, _)| t);
            let tb = other.breakpoints.get(j).map(|&(t, _)| t);
            let t = match (ta, tb) {
                (Some(x), Some(y)) => {
                    if x <= y {
                        x
                    } else {
                        y
                    }
                }
                (Some(x), None) => x,
                (None, Some(y)) => y,
                (None, None) => unreachable!(),
            };
            if ta == Some(t) {
                va = self.breakpoints[i].1;
                i += 1;
            }
            if tb == Some(t) {
                vb = other.breakpoints[j].1;
                j += 1;
            }
            let v = f(va, vb);
            if v != prev {
                out.push((t, v));
                prev = v;
            }
        }
        Self { breakpoints: out }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a - b)
    }

    pub fn negate(&self) -> Self {
        Self { breakpoints: self.breakpoints.iter().map(|&(t, v)| (t, -v)).collect() }
    }

    /// Largest absolute pointwise difference (an integer, since both
    /// curves are integer-valued).
    pub fn sup_distance(&self, other: &Self) -> i64 {
        let diff = self.combine(other, |a, b| (a - b).abs());
        diff.breakpoints.iter().map(|&(_, v)| v).max().unwrap_or(0)
    }
}

/// Euler characteristic curve of a filtered complex:
/// `chi(t) = sum over simplices alive at t of (-1)^dim`.
pub fn euler_curve<F: Scalar>(complex: &FilteredComplex<F>) -> Result<EulerCurve<F>> {
    if complex.is_empty() {
        return Err(Error::Domain("euler curve of an empty complex".into()));
    }
    let mut events: Vec<(F, i64)> = complex
        .simplices()
        .iter()
        .map(|s| (s.time, if s.dim() % 2 == 0 { 1 } else { -1 }))
        .collect();
    events.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut breakpoints: Vec<(F, i64)> = Vec::new();
    let mut acc = 0i64;
    for (t, delta) in events {
        acc += delta;
        match breakpoints.last_mut() {
            Some(last) if last.0 == t => last.1 = acc,
            _ => breakpoints.push((t, acc)),
        }
    }
    EulerCurve::new(breakpoints)
}

/// Betti number step curves of a filtered complex, one per degree
/// `0..=skeleton_dim`: `beta_d(t) = #{classes of degree d alive at t}`.
/// Their alternating sum reproduces [`euler_curve`] exactly.
pub fn betti_curves<F: Scalar>(complex: &FilteredComplex<F>) -> Result<Vec<EulerCurve<F>>> {
    let (diagram, _) = compute_persistence(complex)?;
    (0..=complex.skeleton_dim())
        .map(|deg| betti_curve_of_points(diagram.points(deg)))
        .collect()
}

/// One degree's rank curve from its diagram points.
pub(crate) fn betti_curve_of_points<F: Scalar>(
    points: &[PersistencePoint<F>],
) -> Result<EulerCurve<F>> {
    let mut events: Vec<(F, i64)> = Vec::new();
    for p in points {
        events.push((p.birth, 1));
        if !p.is_essential() {
            events.push((p.death, -1));
        }
    }
    events.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut breakpoints: Vec<(F, i64)> = Vec::new();
    let mut acc = 0i64;
    for (t, delta) in events {
        acc += delta;
        match breakpoints.last_mut() {
            Some(last) if last.0 == t => last.1 = acc,
            _ => breakpoints.push((t, acc)),
        }
    }
    EulerCurve::new(breakpoints)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::filtration::{cech_filtration, rips_filtration};
    use crate::geometry::{pairwise_distances, PointCloud};

    fn cloud(rows: &[&[f64]]) -> PointCloud<f64> {
        PointCloud::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn random_cloud(n: usize, dim: usize, rng: &mut ChaCha8Rng) -> PointCloud<f64> {
        PointCloud::from_rows(
            (0..n).map(|_| (0..dim).map(|_| rng.random::<f64>() * 2.0).collect()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn two_points_merge_at_their_distance() {
        let c = cloud(&[&[0.0], &[3.0]]);
        let k = rips_filtration(&pairwise_distances(&c), 1).unwrap();
        let (dg, pairing) = compute_persistence(&k).unwrap();
        let pts = dg.points(0);
        assert_eq!(pts.len(), 2);
        assert_eq!((pts[0].birth, pts[0].death), (0.0, 3.0));
        assert!(pts[1].is_essential());
        assert_eq!(pairing.entries.len(), 2);
        let killed = pairing.of_degree(0).find(|e| e.death.is_some()).unwrap();
        assert_eq!(killed.death_simplex.as_ref().unwrap().as_slice(), &[0, 1]);
        // The elder vertex survives: the positive simplex of the finite
        // class is the younger vertex 1.
        assert_eq!(killed.birth_simplex.as_slice(), &[1]);
    }

    #[test]
    fn square_cycle_births_and_dies() {
        // Unit square, m = 2: one 1-cycle born at side length 1, killed
        // at diagonal sqrt(2) when triangles fill in.
        let c = cloud(&[&[0.0, 0.0], &[1.0, 0.0], &[1.0, 1.0], &[0.0, 1.0]]);
        let k = rips_filtration(&pairwise_distances(&c), 2).unwrap();
        let (dg, _) = compute_persistence(&k).unwrap();
        let h1 = dg.points(1);
        assert_eq!(h1.len(), 1);
        assert!((h1[0].birth - 1.0).abs() < 1e-15);
        assert!((h1[0].death - 2f64.sqrt()).abs() < 1e-15);
        // One essential component.
        let h0 = dg.points(0);
        assert_eq!(h0.iter().filter(|p| p.is_essential()).count(), 1);
        assert_eq!(h0.len(), 4);
    }

    #[test]
    fn zero_persistence_pairs_are_dropped() {
        // Equilateral triangle: all edges at the same time; two of the
        // three degree-0 deaths coincide with births of nothing -- all
        // three vertices merge at time 1 with finite positive bars, and
        // the triangle itself pairs with an edge at equal time.
        let c = cloud(&[&[0.0, 0.0], &[1.0, 0.0], &[0.5, 3f64.sqrt() / 2.0]]);
        let k = rips_filtration(&pairwise_distances(&c), 2).unwrap();
        let (dg, _) = compute_persistence(&k).unwrap();
        assert_eq!(dg.points(0).len(), 3);
        // The 1-cycle is born and killed at time 1: dropped.
        assert!(dg.points(1).is_empty());
        assert!(dg.points(2).is_empty());
    }

    #[test]
    fn truncation_flag_and_capped_recording() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = random_cloud(7, 2, &mut rng);
        let k = rips_filtration(&pairwise_distances(&c), 2).unwrap();
        let (full, _) = compute_persistence(&k).unwrap();
        let (capped, _) = compute_persistence_up_to(&k, 1).unwrap();
        assert!(full.is_truncated(2));
        assert!(!full.is_truncated(1));
        assert!(capped.points(2).is_empty());
        assert_eq!(full.points(0), capped.points(0));
        assert_eq!(full.points(1), capped.points(1));
    }

    #[test]
    fn pairing_is_consistent_with_diagram() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let c = random_cloud(8, 3, &mut rng);
            let k = rips_filtration(&pairwise_distances(&c), 2).unwrap();
            let (dg, pairing) = compute_persistence(&k).unwrap();
            let total: usize = dg.active_degrees().map(|d| dg.points(d).len()).sum();
            assert_eq!(pairing.entries.len(), total);
            for deg in dg.active_degrees() {
                let from_pairing: Vec<(f64, f64)> = pairing
                    .of_degree(deg)
                    .map(|e| (e.birth, e.death.unwrap_or(f64::INFINITY)))
                    .collect();
                let from_diagram: Vec<(f64, f64)> =
                    dg.points(deg).iter().map(|p| (p.birth, p.death)).collect();
                assert_eq!(from_pairing, from_diagram);
            }
            // Critical simplices realize their times.
            for e in &pairing.entries {
                let bs = k
                    .simplices()
                    .iter()
                    .find(|s| s.vertices == e.birth_simplex)
                    .unwrap();
                assert_eq!(bs.time, e.birth);
                if let (Some(d), Some(ds)) = (e.death, e.death_simplex.as_ref()) {
                    let killer = k.simplices().iter().find(|s| &s.vertices == ds).unwrap();
                    assert_eq!(killer.time, d);
                }
            }
        }
    }

    #[test]
    fn circle_has_one_prominent_cycle() {
        let c = crate::geometry::shapes::circle::<f64>(20, 1.0);
        let k = rips_filtration(&pairwise_distances(&c), 2).unwrap();
        let (dg, _) = compute_persistence(&k).unwrap();
        let h1 = dg.points(1);
        // The main cycle of the 20-gon: born at the side length.
        let side = 2.0 * (std::f64::consts::PI / 20.0).sin();
        assert!(h1.iter().any(|p| (p.birth - side).abs() < 1e-12 && p.persistence() > 0.5));
    }

    #[test]
    fn betti_curves_match_diagram_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let c = random_cloud(9, 2, &mut rng);
        let k = rips_filtration(&pairwise_distances(&c), 2).unwrap();
        let (dg, _) = compute_persistence(&k).unwrap();
        let betti = betti_curves(&k).unwrap();
        assert_eq!(betti.len(), 3);
        // At t = 0 all components are alive.
        assert_eq!(betti[0].value_at(0.0), 9);
        // Far beyond the diameter one component remains.
        assert_eq!(betti[0].value_at(1e9), 1);
        // Spot-check a few times against direct point counts.
        for t in [0.1, 0.25, 0.5, 1.0] {
            for (deg, curve) in betti.iter().enumerate() {
                let count = dg
                    .points(deg)
                    .iter()
                    .filter(|p| p.birth <= t && t < p.death)
                    .count() as i64;
                assert_eq!(curve.value_at(t), count);
            }
        }
    }

    #[test]
    fn euler_curve_two_points() {
        let c = cloud(&[&[0.0], &[2.0]]);
        let k = rips_filtration(&pairwise_distances(&c), 1).unwrap();
        let e = euler_curve(&k).unwrap();
        assert_eq!(e.breakpoints(), &[(0.0, 2), (2.0, 1)]);
    }

    #[test]
    fn euler_curve_equilateral_two_skeleton() {
        let c = cloud(&[&[0.0, 0.0], &[1.0, 0.0], &[0.5, 3f64.sqrt() / 2.0]]);
        let k = rips_filtration(&pairwise_distances(&c), 2).unwrap();
        let e = euler_curve(&k).unwrap();
        // chi = 3 before the edges arrive, then 3 - 3 + 1 = 1.
        assert_eq!(e.breakpoints().len(), 2);
        assert_eq!(e.breakpoints()[0], (0.0, 3));
        assert_eq!(e.breakpoints()[1].1, 1);
        assert!((e.breakpoints()[1].0 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn euler_poincare_identity_on_random_complexes() {
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        for _ in 0..20 {
            let n = rng.random_range(3..8usize);
            let m = rng.random_range(1..3usize);
            let c = random_cloud(n, 2, &mut rng);
            let k = rips_filtration(&pairwise_distances(&c), m).unwrap();
            let chi = euler_curve(&k).unwrap();
            let betti = betti_curves(&k).unwrap();
            // Probe at all breakpoints and at midpoints between them.
            let mut probes: Vec<f64> = chi.breakpoints().iter().map(|&(t, _)| t).collect();
            for s in k.simplices() {
                probes.push(s.time);
                probes.push(s.time + 1e-7);
            }
            probes.push(1e9);
            for &t in &probes {
                let alternating: i64 = betti
                    .iter()
                    .enumerate()
                    .map(|(d, c)| if d % 2 == 0 { c.value_at(t) } else { -c.value_at(t) })
                    .sum();
                assert_eq!(chi.value_at(t), alternating, "chi mismatch at t={t}");
            }
        }
    }

    #[test]
    fn curve_algebra_round_trips() {
        let a = EulerCurve::new(vec![(0.0, 2), (1.0, 1)]).unwrap();
        let b = EulerCurve::new(vec![(0.5, 3), (1.0, -1)]).unwrap();
        let sum = a.add(&b);
        assert_eq!(sum.value_at(-0.1), 0);
        assert_eq!(sum.value_at(0.0), 2);
        assert_eq!(sum.value_at(0.7), 5);
        assert_eq!(sum.value_at(2.0), 0);
        assert_eq!(sum.sub(&b), a);
        assert_eq!(a.sub(&a), EulerCurve::zero());
        assert_eq!(a.sup_distance(&b), 2);
        assert_eq!(a.negate().add(&a), EulerCurve::zero());
    }

    #[test]
    fn curve_canonicalization() {
        // Leading zero segments and no-op jumps disappear.
        let c = EulerCurve::new(vec![(0.0, 0), (1.0, 2), (2.0, 2), (3.0, 0)]).unwrap();
        assert_eq!(c.breakpoints(), &[(1.0, 2), (3.0, 0)]);
        assert!(EulerCurve::new(vec![(1.0, 1), (0.0, 2)]).is_err());
        assert!(EulerCurve::new(vec![(f64::INFINITY, 1)]).is_err());
    }

    #[test]
    fn cech_and_rips_persistence_agree_in_degree_zero() {
        // Degree-0 structure only depends on edges, where the two
        // filtrations coincide.
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let c = random_cloud(8, 2, &mut rng);
        let kr = rips_filtration(&pairwise_distances(&c), 2).unwrap();
        let kc = cech_filtration(&c, 2).unwrap();
        let (dr, _) = compute_persistence(&kr).unwrap();
        let (dc, _) = compute_persistence(&kc).unwrap();
        let pr: Vec<(f64, f64)> = dr.points(0).iter().map(|p| (p.birth, p.death)).collect();
        let pc: Vec<(f64, f64)> = dc.points(0).iter().map(|p| (p.birth, p.death)).collect();
        assert_eq!(pr, pc);
    }
}
