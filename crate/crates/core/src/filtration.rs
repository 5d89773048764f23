//! Filtered simplicial complexes: Vietoris-Rips and Čech constructions
//! truncated at a skeleton dimension, and grid rounding of filtration
//! values.
//!
//! Čech appearance times use the diameter convention — twice the radius
//! of the minimal enclosing ball — so Čech and Rips agree on vertices
//! and edges.

use smallvec::SmallVec;

use crate::geometry::{DistanceMatrix, PointCloud};
use crate::util::for_each_subset;
use crate::{minball, Error, Result, Scalar};

/// Vertex storage for one simplex; inline up to dimension 5.
pub type VertexSet = SmallVec<[u32; 6]>;

/// A simplex with its filtration appearance time. Vertices are sorted
/// and distinct.
#[derive(Debug, Clone, PartialEq)]
pub struct Simplex<F> {
    pub vertices: VertexSet,
    pub time: F,
}

impl<F: Scalar> Simplex<F> {
    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }
}

/// A filtered complex on vertices `0..n_vertices`, truncated at
/// `skeleton_dim`: only simplices of dimension `<= skeleton_dim` are
/// present. Every face of a simplex is present with an appearance time
/// no later than the simplex itself.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredComplex<F> {
    n_vertices: usize,
    skeleton_dim: usize,
    simplices: Vec<Simplex<F>>,
}

impl<F: Scalar> FilteredComplex<F> {
    /// Validates the complex invariants: sorted distinct vertex tuples
    /// in range, finite non-negative times, no duplicate simplices,
    /// dimensions within the skeleton bound, and face monotonicity.
    pub fn new(n_vertices: usize, skeleton_dim: usize, simplices: Vec<Simplex<F>>) -> Result<Self> {
        let mut times: std::collections::HashMap<&[u32], F> =
            std::collections::HashMap::with_capacity(simplices.len());
        for s in &simplices {
            if s.vertices.is_empty() {
                return Err(Error::Domain("simplex with no vertices".into()));
            }
            if s.dim() > skeleton_dim {
                return Err(Error::Domain(format!(
                    "simplex {:?} exceeds skeleton dimension {skeleton_dim}",
                    s.vertices
                )));
            }
            if !s.vertices.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::Domain(format!(
                    "simplex {:?} vertices must be sorted and distinct",
                    s.vertices
                )));
            }
            if s.vertices.last().map(|&v| v as usize >= n_vertices).unwrap_or(false) {
                return Err(Error::Domain(format!(
                    "simplex {:?} has a vertex outside 0..{n_vertices}",
                    s.vertices
                )));
            }
            if !s.time.is_finite() || s.time < F::zero() {
                return Err(Error::Domain(format!(
                    "simplex {:?} must have a finite non-negative time",
                    s.vertices
                )));
            }
            if times.insert(s.vertices.as_slice(), s.time).is_some() {
                return Err(Error::Domain(format!("duplicate simplex {:?}", s.vertices)));
            }
        }
        for s in &simplices {
            if s.dim() == 0 {
                continue;
            }
            let mut face: Vec<u32> = Vec::with_capacity(s.dim());
            for skip in 0..s.vertices.len() {
                face.clear();
                face.extend(s.vertices.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &v)| v));
                match times.get(face.as_slice()) {
                    None => {
                        return Err(Error::Domain(format!(
                            "simplex {:?} is missing its face {:?}",
                            s.vertices, face
                        )))
                    }
                    Some(&t) if t > s.time => {
                        return Err(Error::Domain(format!(
                            "face {face:?} appears later than its coface {:?}",
                            s.vertices
                        )))
                    }
                    _ => {}
                }
            }
        }
        Ok(Self { n_vertices, skeleton_dim, simplices })
    }

    /// Constructor for internally generated complexes whose invariants
    /// hold by construction.
    pub(crate) fn from_parts_unchecked(
        n_vertices: usize,
        skeleton_dim: usize,
        simplices: Vec<Simplex<F>>,
    ) -> Self {
        Self { n_vertices, skeleton_dim, simplices }
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn skeleton_dim(&self) -> usize {
        self.skeleton_dim
    }

    pub fn simplices(&self) -> &[Simplex<F>] {
        &self.simplices
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    /// The largest filtration value in the complex.
    pub fn max_time(&self) -> F {
        self.simplices.iter().fold(F::zero(), |m, s| if s.time > m { s.time } else { m })
    }
}

/// Vietoris-Rips `m`-skeleton of a distance matrix: a simplex enters
/// when its largest pairwise distance does. Vertices enter at zero.
pub fn rips_filtration<F: Scalar>(d: &DistanceMatrix<F>, m: usize) -> Result<FilteredComplex<F>> {
    let n = d.len();
    if n == 0 {
        return Err(Error::Domain("rips filtration needs at least one point".into()));
    }
    let labels: Vec<u32> = (0..n as u32).collect();
    let mut simplices: Vec<Simplex<F>> = Vec::new();
    for &v in &labels {
        simplices.push(Simplex { vertices: SmallVec::from_slice(&[v]), time: F::zero() });
    }
    for size in 2..=(m + 1).min(n) {
        for_each_subset(&labels, size, &mut |s| {
            let mut t = F::zero();
            for i in 0..size {
                for j in (i + 1)..size {
                    let dij = d.get(s[i] as usize, s[j] as usize);
                    if dij > t {
                        t = dij;
                    }
                }
            }
            simplices.push(Simplex { vertices: SmallVec::from_slice(s), time: t });
        });
    }
    Ok(FilteredComplex::from_parts_unchecked(n, m, simplices))
}

/// Čech `m`-skeleton of a Euclidean cloud under the diameter
/// convention: a simplex enters at twice the radius of the minimal
/// ball enclosing its vertices. Edges therefore enter at their length,
/// matching Rips on the 1-skeleton.
pub fn cech_filtration<F: Scalar>(cloud: &PointCloud<F>, m: usize) -> Result<FilteredComplex<F>> {
    let n = cloud.len();
    if n == 0 {
        return Err(Error::Domain("cech filtration needs at least one point".into()));
    }
    let labels: Vec<u32> = (0..n as u32).collect();
    let mut simplices: Vec<Simplex<F>> = Vec::new();
    for &v in &labels {
        simplices.push(Simplex { vertices: SmallVec::from_slice(&[v]), time: F::zero() });
    }
    let two = F::one() + F::one();
    // Times of the previous size level, to clamp each simplex to its
    // facets: the minimal-ball radius is monotone under inclusion, but
    // floating point alone does not guarantee it ulp-for-ulp.
    let mut prev_level: std::collections::HashMap<VertexSet, F> = std::collections::HashMap::new();
    for size in 2..=(m + 1).min(n) {
        let mut level: std::collections::HashMap<VertexSet, F> = std::collections::HashMap::new();
        for_each_subset(&labels, size, &mut |s| {
            // Edges get the plain distance so that Čech and Rips edge
            // times agree bit-for-bit, not just analytically.
            let mut t = if size == 2 {
                crate::geometry::euclidean(cloud.point(s[0] as usize), cloud.point(s[1] as usize))
            } else {
                let pts: Vec<&[F]> = s.iter().map(|&v| cloud.point(v as usize)).collect();
                two * minball::min_ball_radius(&pts)
            };
            if size > 2 {
                let mut facet: VertexSet = SmallVec::new();
                for skip in 0..size {
                    facet.clear();
                    facet.extend(s.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &v)| v));
                    let ft = prev_level[&facet];
                    if ft > t {
                        t = ft;
                    }
                }
            }
            level.insert(SmallVec::from_slice(s), t);
            simplices.push(Simplex { vertices: SmallVec::from_slice(s), time: t });
        });
        prev_level = level;
    }
    Ok(FilteredComplex::from_parts_unchecked(n, m, simplices))
}

/// A finite strictly increasing grid of filtration values with
/// nearest-point projection (ties round up).
#[derive(Debug, Clone, PartialEq)]
pub struct RoundingGrid<F> {
    values: Vec<F>,
}

impl<F: Scalar> RoundingGrid<F> {
    pub fn new(values: Vec<F>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("rounding grid must be nonempty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("rounding grid values must be finite".into()));
        }
        if !values.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Domain("rounding grid values must be strictly increasing".into()));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    /// Nearest grid value; an exact midpoint rounds to the larger one.
    pub fn project(&self, x: F) -> F {
        let vals = &self.values;
        let hi = vals.partition_point(|&v| v < x);
        if hi == 0 {
            return vals[0];
        }
        if hi == vals.len() {
            return vals[hi - 1];
        }
        let (lo_v, hi_v) = (vals[hi - 1], vals[hi]);
        if x - lo_v < hi_v - x {
            lo_v
        } else {
            hi_v
        }
    }
}

/// Rounds every appearance time to the grid. Projection is monotone,
/// so the result is again a valid filtered complex.
pub fn round_filtration<F: Scalar>(
    complex: &FilteredComplex<F>,
    grid: &RoundingGrid<F>,
) -> Result<FilteredComplex<F>> {
    if grid.values()[0] < F::zero() {
        return Err(Error::Domain("grid would produce negative filtration values".into()));
    }
    let simplices = complex
        .simplices
        .iter()
        .map(|s| Simplex { vertices: s.vertices.clone(), time: grid.project(s.time) })
        .collect();
    Ok(FilteredComplex::from_parts_unchecked(
        complex.n_vertices,
        complex.skeleton_dim,
        simplices,
    ))
}
