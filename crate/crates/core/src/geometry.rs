//! Point clouds, distance matrices, labeled bijections, and the sampling
//! primitives built on them.

use rand::Rng;

use crate::{sc, Error, Result, Scalar};

/// A finite labeled point cloud in `R^dim`, stored row-major.
///
/// Labels are the indices `0..n`; every operation that moves points
/// around (restriction, perturbation, alignment) preserves them.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud<F> {
    coords: Vec<F>,
    dim: usize,
}

impl<F: Scalar> PointCloud<F> {
    /// Builds a cloud from one coordinate row per point. All rows must
    /// share a length and all entries must be finite.
    pub fn from_rows(rows: Vec<Vec<F>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Domain("point cloud must be nonempty".into()));
        }
        let dim = rows[0].len();
        if dim == 0 {
            return Err(Error::Domain("points must have at least one coordinate".into()));
        }
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Domain(format!(
                    "point {i} has {} coordinates, expected {dim}",
                    row.len()
                )));
            }
            if row.iter().any(|c| !c.is_finite()) {
                return Err(Error::Domain(format!("point {i} has a non-finite coordinate")));
            }
            coords.extend_from_slice(row);
        }
        Ok(Self { coords, dim })
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[F] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn point_mut(&mut self, i: usize) -> &mut [F] {
        &mut self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_points(&self) -> impl Iterator<Item = &[F]> {
        self.coords.chunks_exact(self.dim)
    }

    /// The sub-cloud on the given labels, in the given order.
    pub fn restrict(&self, labels: &[u32]) -> Result<Self> {
        let n = self.len();
        let mut coords = Vec::with_capacity(labels.len() * self.dim);
        for &l in labels {
            if l as usize >= n {
                return Err(Error::Domain(format!("label {l} out of range for {n} points")));
            }
            coords.extend_from_slice(self.point(l as usize));
        }
        Ok(Self { coords, dim: self.dim })
    }

    /// Largest pairwise Euclidean distance.
    pub fn diameter(&self) -> F {
        let mut best = F::zero();
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                let d = euclidean(self.point(i), self.point(j));
                if d > best {
                    best = d;
                }
            }
        }
        best
    }
}

pub(crate) fn euclidean<F: Scalar>(a: &[F], b: &[F]) -> F {
    let mut s = F::zero();
    for (x, y) in a.iter().zip(b) {
        let d = *x - *y;
        s = s + d * d;
    }
    s.sqrt()
}

/// A symmetric matrix of pairwise distances with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix<F> {
    n: usize,
    data: Vec<F>,
}

impl<F: Scalar> DistanceMatrix<F> {
    /// Validates symmetry, zero diagonal, non-negativity, finiteness.
    pub fn from_rows(rows: Vec<Vec<F>>) -> Result<Self> {
        let n = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::SizeMismatch { expected: n, actual: row.len() });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < F::zero() {
                    return Err(Error::Domain(format!("distance ({i},{j}) must be finite and >= 0")));
                }
                if i == j && v != F::zero() {
                    return Err(Error::Domain(format!("diagonal entry ({i},{i}) must be zero")));
                }
                if j < i && (rows[i][j] != rows[j][i]) {
                    return Err(Error::Domain(format!("matrix not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(Self { n, data: rows.into_iter().flatten().collect() })
    }

    pub(crate) fn from_raw(n: usize, data: Vec<F>) -> Self {
        debug_assert_eq!(data.len(), n * n);
        Self { n, data }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> F {
        self.data[i * self.n + j]
    }

    /// The principal submatrix on the given labels, in the given order.
    pub fn restrict(&self, labels: &[u32]) -> Result<Self> {
        for &l in labels {
            if l as usize >= self.n {
                return Err(Error::Domain(format!("label {l} out of range for {} points", self.n)));
            }
        }
        let k = labels.len();
        let mut data = Vec::with_capacity(k * k);
        for &a in labels {
            for &b in labels {
                data.push(self.get(a as usize, b as usize));
            }
        }
        Ok(Self { n: k, data })
    }

    pub fn max_entry(&self) -> F {
        self.data.iter().fold(F::zero(), |m, &v| if v > m { v } else { m })
    }

    pub fn rows(&self) -> Vec<Vec<F>> {
        (0..self.n).map(|i| self.data[i * self.n..(i + 1) * self.n].to_vec()).collect()
    }
}

/// Euclidean pairwise distances of a point cloud.
pub fn pairwise_distances<F: Scalar>(cloud: &PointCloud<F>) -> DistanceMatrix<F> {
    let n = cloud.len();
    let mut data = vec![F::zero(); n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = euclidean(cloud.point(i), cloud.point(j));
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    DistanceMatrix { n, data }
}

/// A bijection of labels `0..n`, i.e. a permutation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bijection {
    map: Vec<u32>,
}

impl Bijection {
    pub fn new(map: Vec<u32>) -> Result<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &v in &map {
            if v as usize >= n || seen[v as usize] {
                return Err(Error::Domain(format!("map is not a permutation of 0..{n}")));
            }
            seen[v as usize] = true;
        }
        Ok(Self { map })
    }

    pub fn identity(n: usize) -> Self {
        Self { map: (0..n as u32).collect() }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.map[i] as usize
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0u32; self.map.len()];
        for (i, &v) in self.map.iter().enumerate() {
            inv[v as usize] = i as u32;
        }
        Self { map: inv }
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.map
    }
}

/// Additive metric distortion of a labeled bijection:
/// `max_{i<j} |d_X(i,j) - d_Y(phi(i), phi(j))|`.
pub fn quasi_isometry_distortion<F: Scalar>(
    dx: &DistanceMatrix<F>,
    dy: &DistanceMatrix<F>,
    phi: &Bijection,
) -> Result<F> {
    let n = dx.len();
    if dy.len() != n {
        return Err(Error::SizeMismatch { expected: n, actual: dy.len() });
    }
    if phi.len() != n {
        return Err(Error::SizeMismatch { expected: n, actual: phi.len() });
    }
    let mut worst = F::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            let gap = (dx.get(i, j) - dy.get(phi.apply(i), phi.apply(j))).abs();
            if gap > worst {
                worst = gap;
            }
        }
    }
    Ok(worst)
}

/// Greedy furthest-point sampling of `s` centers, starting from label 0.
/// Each step adds the point furthest from the chosen set; distance ties
/// pick the lowest label. Returns the centers in selection order and the
/// covering radius `max_i min_c d(i, c)` of the final set.
pub fn furthest_point_sample<F: Scalar>(
    d: &DistanceMatrix<F>,
    s: usize,
) -> Result<(Vec<u32>, F)> {
    let n = d.len();
    if s == 0 || s > n {
        return Err(Error::Domain(format!("sample size s={s} must satisfy 1 <= s <= n={n}")));
    }
    let mut centers = Vec::with_capacity(s);
    let mut dist_to_set: Vec<F> = (0..n).map(|i| d.get(i, 0)).collect();
    centers.push(0u32);
    for _ in 1..s {
        let mut best = 0usize;
        for i in 1..n {
            if dist_to_set[i] > dist_to_set[best] {
                best = i;
            }
        }
        centers.push(best as u32);
        for i in 0..n {
            let di = d.get(i, best);
            if di < dist_to_set[i] {
                dist_to_set[i] = di;
            }
        }
    }
    let radius = dist_to_set.iter().fold(F::zero(), |m, &v| if v > m { v } else { m });
    Ok((centers, radius))
}

/// Deterministic synthetic clouds used by the case study, the alignment
/// experiments, and the CLI generator.
pub mod shapes {
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    use super::PointCloud;
    use crate::{sc, Scalar};

    /// `n` points equally spaced on the circle of the given radius.
    pub fn circle<F: Scalar>(n: usize, radius: f64) -> PointCloud<F> {
        let mut coords = Vec::with_capacity(2 * n);
        for i in 0..n {
            let theta = 2.0 * std::f64::consts::PI * (i as f64) / (n as f64);
            coords.push(sc(radius * theta.cos()));
            coords.push(sc(radius * theta.sin()));
        }
        PointCloud { coords, dim: 2 }
    }

    /// `n` points drawn uniformly from the disc of the given radius, by
    /// rejection sampling from the bounding square.
    pub fn disc_uniform<F: Scalar>(n: usize, radius: f64, rng: &mut impl Rng) -> PointCloud<F> {
        let mut coords = Vec::with_capacity(2 * n);
        let mut accepted = 0;
        while accepted < n {
            let x = radius * (2.0 * rng.random::<f64>() - 1.0);
            let y = radius * (2.0 * rng.random::<f64>() - 1.0);
            if x * x + y * y <= radius * radius {
                coords.push(sc(x));
                coords.push(sc(y));
                accepted += 1;
            }
        }
        PointCloud { coords, dim: 2 }
    }

    /// A circle of `n_circle` equally spaced points contaminated with
    /// `n_noise` uniform points from the same-radius disc.
    pub fn noisy_circle<F: Scalar>(
        n_circle: usize,
        n_noise: usize,
        radius: f64,
        rng: &mut impl Rng,
    ) -> PointCloud<F> {
        let mut cloud = circle(n_circle, radius);
        let noise = disc_uniform::<F>(n_noise, radius, rng);
        cloud.coords.extend_from_slice(&noise.coords);
        cloud
    }

    /// A `nu x nv` grid on the torus in `R^3` with the given major and
    /// minor radii.
    pub fn torus_grid<F: Scalar>(nu: usize, nv: usize, major: f64, minor: f64) -> PointCloud<F> {
        let mut coords = Vec::with_capacity(3 * nu * nv);
        for i in 0..nu {
            let u = 2.0 * std::f64::consts::PI * (i as f64) / (nu as f64);
            for j in 0..nv {
                let v = 2.0 * std::f64::consts::PI * (j as f64) / (nv as f64);
                let w = major + minor * v.cos();
                coords.push(sc(w * u.cos()));
                coords.push(sc(w * u.sin()));
                coords.push(sc(minor * v.sin()));
            }
        }
        PointCloud { coords, dim: 3 }
    }

    /// Adds i.i.d. centered Gaussian noise with standard deviation
    /// `sigma` to every coordinate.
    pub fn gaussian_perturb<F: Scalar>(
        cloud: &PointCloud<F>,
        sigma: f64,
        rng: &mut impl Rng,
    ) -> PointCloud<F> {
        let coords = cloud
            .coords
            .iter()
            .map(|&c| {
                let g: f64 = StandardNormal.sample(rng);
                c + sc(sigma * g)
            })
            .collect();
        PointCloud { coords, dim: cloud.dim }
    }
}

/// One uniform `k`-subset of `0..n`, returned sorted.
pub(crate) fn uniform_k_subset(rng: &mut impl Rng, n: usize, k: usize) -> Vec<u32> {
    let mut picked = rand::seq::index::sample(rng, n, k).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| i as u32).collect()
}

/// Mean over unordered pairs of `|d_X(i,j) - d_Y(i,j)|` under the
/// identity labeling; the alignment experiments track this scalar.
pub fn mean_pairwise_distortion<F: Scalar>(
    dx: &DistanceMatrix<F>,
    dy: &DistanceMatrix<F>,
) -> Result<F> {
    let n = dx.len();
    if dy.len() != n {
        return Err(Error::SizeMismatch { expected: n, actual: dy.len() });
    }
    if n < 2 {
        return Ok(F::zero());
    }
    let mut total = F::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            total = total + (dx.get(i, j) - dy.get(i, j)).abs();
        }
    }
    Ok(total / sc_pairs(n))
}

fn sc_pairs<F: Scalar>(n: usize) -> F {
    sc::<F>((n * (n - 1) / 2) as f64)
}
