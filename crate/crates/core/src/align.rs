//! Gradient-based alignment of a movable labeled cloud to a fixed one.
//!
//! Each iteration samples a size-`k` subset `S`, compares the Rips
//! 2-skeleton diagrams of `X|S` and `Y|S` in degrees 0 and 1 under the
//! squared 2-Wasserstein loss, pushes the loss gradient through the
//! matched diagram coordinates onto the endpoints of the critical edges
//! that realize them, and applies a bias-corrected Adam update to the
//! sampled rows of `Y` only.
//!
//! Ground metric: diagram points are matched under squared euclidean
//! plane distance, with the diagonal as a sink at half the squared
//! persistence. Births and deaths of a Rips filtration equal critical
//! edge lengths, so a matched coordinate's derivative flows to the two
//! edge endpoints along the unit vector between them; a
//! diagonal-matched point flows toward equal birth and death. At
//! non-generic configurations (tied edge lengths) the lexicographically
//! first longest edge is charged, a valid subgradient consistent with
//! the engine's deterministic simplex order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::filtration::{rips_filtration, VertexSet};
use crate::geometry::{pairwise_distances, uniform_k_subset, DistanceMatrix, PointCloud};
use crate::matching::min_cost_assignment;
use crate::metrics::MatchTarget;
use crate::persistence::{
    compute_persistence_up_to, CriticalPairing, PersistenceDiagram, PersistencePoint,
};
use crate::{sc, Error, Result, Scalar};

/// Adam hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamParams<F> {
    pub lr: F,
    pub beta1: F,
    pub beta2: F,
    pub eps_stab: F,
}

impl<F: Scalar> Default for AdamParams<F> {
    fn default() -> Self {
        Self { lr: sc(1e-2), beta1: sc(0.9), beta2: sc(0.999), eps_stab: sc(1e-8) }
    }
}

/// Bias-corrected Adam state over the coordinates of a cloud. The
/// moment buffers span every coordinate; the step counter is global, so
/// rows updated only on some iterations still share one bias-correction
/// schedule (the usual sparse-update convention, and deterministic).
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<F> {
    first_moment: Vec<F>,
    second_moment: Vec<F>,
    step_count: u64,
    params: AdamParams<F>,
    dim: usize,
}

impl<F: Scalar> AdamState<F> {
    pub fn new(rows: usize, dim: usize, params: AdamParams<F>) -> Self {
        Self {
            first_moment: vec![F::zero(); rows * dim],
            second_moment: vec![F::zero(); rows * dim],
            step_count: 0,
            params,
            dim,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn first_moment(&self) -> &[F] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[F] {
        &self.second_moment
    }

    /// One full update: `grad[i]` is the gradient for row `i`.
    pub fn step(&mut self, y: &mut PointCloud<F>, grad: &[Vec<F>]) -> Result<()> {
        if grad.len() != y.len() {
            return Err(Error::SizeMismatch { expected: y.len(), actual: grad.len() });
        }
        let rows: Vec<u32> = (0..y.len() as u32).collect();
        self.step_rows(y, &rows, grad)
    }

    /// One update touching only `rows[i]`, fed by `grad[i]`. Advances
    /// the global step counter once.
    pub fn step_rows(&mut self, y: &mut PointCloud<F>, rows: &[u32], grad: &[Vec<F>]) -> Result<()> {
        if rows.len() != grad.len() {
            return Err(Error::SizeMismatch { expected: rows.len(), actual: grad.len() });
        }
        if y.dim() != self.dim || y.len() * self.dim != self.first_moment.len() {
            return Err(Error::Domain("Adam state shaped for a different cloud".into()));
        }
        for (i, &row) in rows.iter().enumerate() {
            if row as usize >= y.len() {
                return Err(Error::Domain(format!("row {row} out of range")));
            }
            if grad[i].len() != self.dim {
                return Err(Error::SizeMismatch { expected: self.dim, actual: grad[i].len() });
            }
        }
        self.step_count += 1;
        let one = F::one();
        let AdamParams { lr, beta1, beta2, eps_stab } = self.params;
        let bc1 = one - beta1.powi(self.step_count as i32);
        let bc2 = one - beta2.powi(self.step_count as i32);
        for (i, &row) in rows.iter().enumerate() {
            let base = row as usize * self.dim;
            let point = y.point_mut(row as usize);
            for c in 0..self.dim {
                let g = grad[i][c];
                let m = beta1 * self.first_moment[base + c] + (one - beta1) * g;
                let v = beta2 * self.second_moment[base + c] + (one - beta2) * g * g;
                self.first_moment[base + c] = m;
                self.second_moment[base + c] = v;
                point[c] = point[c] - lr * (m / bc1) / ((v / bc2).sqrt() + eps_stab);
            }
        }
        Ok(())
    }
}

/// The optimal matching of one degree of the loss, kept for the
/// gradient: targets index the other diagram's points of the same
/// degree.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeMatching<F> {
    pub degree: usize,
    /// This degree's share of the loss.
    pub value: F,
    pub x_targets: Vec<MatchTarget>,
    pub y_targets: Vec<MatchTarget>,
}

/// Loss value together with the per-degree matchings that realize it.
#[derive(Debug, Clone, PartialEq)]
pub struct LossDetail<F> {
    pub loss: F,
    pub degrees: Vec<DegreeMatching<F>>,
}

fn diagram_with_pairing<F: Scalar>(
    cloud: &PointCloud<F>,
) -> Result<(PersistenceDiagram<F>, CriticalPairing<F>)> {
    let complex = rips_filtration(&pairwise_distances(cloud), 2)?;
    compute_persistence_up_to(&complex, 1)
}

/// Squared 2-Wasserstein between the degree-0 plus degree-1 Rips
/// diagrams of two equally sized subsets, with the matchings retained.
///
/// The ground metric is squared euclidean distance in the plane; a
/// point may instead pay half its squared persistence to reach the
/// diagonal. Essential classes pair by birth order at squared birth
/// difference (for Rips subsets this is the single degree-0 class on
/// each side, at cost zero).
pub fn subset_loss<F: Scalar>(
    x_sub: &PointCloud<F>,
    y_sub: &PointCloud<F>,
) -> Result<LossDetail<F>> {
    if x_sub.len() != y_sub.len() {
        return Err(Error::SizeMismatch { expected: x_sub.len(), actual: y_sub.len() });
    }
    if x_sub.is_empty() {
        return Err(Error::Domain("subset_loss needs a nonempty subset".into()));
    }
    let (xr, yr) = rayon::join(|| diagram_with_pairing(x_sub), || diagram_with_pairing(y_sub));
    let (xd, _) = xr?;
    let (yd, _) = yr?;
    let mut loss = F::zero();
    let mut degrees = Vec::with_capacity(2);
    for degree in [0usize, 1] {
        let (value, x_targets, y_targets) = w2sq_match(xd.points(degree), yd.points(degree))?;
        loss = loss + value;
        degrees.push(DegreeMatching { degree, value, x_targets, y_targets });
    }
    Ok(LossDetail { loss, degrees })
}

/// Loss and its analytic gradient on the coordinates of `y_sub`
/// (row-major per point). `x_sub` is the fixed side and receives no
/// gradient.
pub fn subset_loss_gradient<F: Scalar>(
    x_sub: &PointCloud<F>,
    y_sub: &PointCloud<F>,
) -> Result<(F, Vec<Vec<F>>)> {
    if x_sub.len() != y_sub.len() {
        return Err(Error::SizeMismatch { expected: x_sub.len(), actual: y_sub.len() });
    }
    if x_sub.is_empty() {
        return Err(Error::Domain("subset_loss_gradient needs a nonempty subset".into()));
    }
    let (xr, yr) = rayon::join(|| diagram_with_pairing(x_sub), || diagram_with_pairing(y_sub));
    let (xd, _) = xr?;
    let (yd, y_pairing) = yr?;
    let dist = pairwise_distances(y_sub);
    let two = sc::<F>(2.0);

    let mut loss = F::zero();
    let mut grad = vec![vec![F::zero(); y_sub.dim()]; y_sub.len()];
    for degree in [0usize, 1] {
        let x_pts = xd.points(degree);
        let y_pts = yd.points(degree);
        let (value, _, y_targets) = w2sq_match(x_pts, y_pts)?;
        loss = loss + value;
        let entries: Vec<_> = y_pairing.of_degree(degree).collect();
        debug_assert_eq!(entries.len(), y_pts.len());
        for (j, pt) in y_pts.iter().enumerate() {
            let entry = entries[j];
            debug_assert_eq!(entry.birth, pt.birth);
            let (target_birth, target_death) = match y_targets[j] {
                MatchTarget::Point(i) => (x_pts[i].birth, x_pts[i].death),
                MatchTarget::Diagonal => {
                    let mid = (pt.birth + pt.death) / two;
                    (mid, mid)
                }
            };
            // d/dc of (c − target)², for c = birth then c = death. A
            // degree-0 birth is a vertex time, constant zero: no flow.
            let g_birth = two * (pt.birth - target_birth);
            if g_birth != F::zero() {
                if let Some(edge) = critical_edge(&dist, &entry.birth_simplex) {
                    accumulate_edge(&mut grad, y_sub, &dist, edge, g_birth);
                }
            }
            if pt.death.is_finite() {
                let g_death = two * (pt.death - target_death);
                if g_death != F::zero() {
                    if let Some(simplex) = &entry.death_simplex {
                        if let Some(edge) = critical_edge(&dist, simplex) {
                            accumulate_edge(&mut grad, y_sub, &dist, edge, g_death);
                        }
                    }
                }
            }
        }
    }
    Ok((loss, grad))
}

/// The lexicographically first longest edge of a simplex — the edge
/// whose length is the simplex's Rips time. `None` for vertices.
fn critical_edge<F: Scalar>(dist: &DistanceMatrix<F>, simplex: &VertexSet) -> Option<(u32, u32)> {
    if simplex.len() < 2 {
        return None;
    }
    let mut best = (simplex[0], simplex[1]);
    let mut best_len = dist.get(simplex[0] as usize, simplex[1] as usize);
    for a in 0..simplex.len() {
        for b in (a + 1)..simplex.len() {
            let len = dist.get(simplex[a] as usize, simplex[b] as usize);
            if len > best_len {
                best_len = len;
                best = (simplex[a], simplex[b]);
            }
        }
    }
    Some(best)
}

/// Adds `g · ∂‖Y_u − Y_v‖/∂Y` to the gradient rows of `u` and `v`.
/// Coincident endpoints have no defined direction; zero is a valid
/// subgradient there.
fn accumulate_edge<F: Scalar>(
    grad: &mut [Vec<F>],
    y: &PointCloud<F>,
    dist: &DistanceMatrix<F>,
    (u, v): (u32, u32),
    g: F,
) {
    let len = dist.get(u as usize, v as usize);
    if len <= F::zero() {
        return;
    }
    let pu = y.point(u as usize);
    let pv = y.point(v as usize);
    for c in 0..y.dim() {
        let unit = (pu[c] - pv[c]) / len;
        grad[u as usize][c] = grad[u as usize][c] + g * unit;
        grad[v as usize][c] = grad[v as usize][c] - g * unit;
    }
}

fn sq<F: Scalar>(a: &PersistencePoint<F>, b: &PersistencePoint<F>) -> F {
    let db = a.birth - b.birth;
    let dd = a.death - b.death;
    db * db + dd * dd
}

fn half_sq_persistence<F: Scalar>(p: &PersistencePoint<F>) -> F {
    let pers = p.death - p.birth;
    pers * pers / sc::<F>(2.0)
}

/// Optimal matching of two finite-degree point lists under squared
/// euclidean costs with diagonal slots, via the square augmented
/// assignment problem. Returns (value, a_targets, b_targets).
fn w2sq_match<F: Scalar>(
    a: &[PersistencePoint<F>],
    b: &[PersistencePoint<F>],
) -> Result<(F, Vec<MatchTarget>, Vec<MatchTarget>)> {
    let mut a_targets = vec![MatchTarget::Diagonal; a.len()];
    let mut b_targets = vec![MatchTarget::Diagonal; b.len()];
    let mut value = F::zero();

    let (fa, mut ea): (Vec<usize>, Vec<usize>) =
        (0..a.len()).partition(|&i| !a[i].is_essential());
    let (fb, mut eb): (Vec<usize>, Vec<usize>) =
        (0..b.len()).partition(|&j| !b[j].is_essential());
    if ea.len() != eb.len() {
        return Err(Error::Domain(
            "alignment loss compared diagrams with different essential class counts".into(),
        ));
    }
    let sort_by_birth = |idx: &mut Vec<usize>, pts: &[PersistencePoint<F>]| {
        idx.sort_by(|&p, &q| {
            pts[p].birth.partial_cmp(&pts[q].birth).expect("finite births").then(p.cmp(&q))
        });
    };
    sort_by_birth(&mut ea, a);
    sort_by_birth(&mut eb, b);
    for (&i, &j) in ea.iter().zip(&eb) {
        let db = a[i].birth - b[j].birth;
        value = value + db * db;
        a_targets[i] = MatchTarget::Point(j);
        b_targets[j] = MatchTarget::Point(i);
    }

    let (na, nb) = (fa.len(), fb.len());
    let n = na + nb;
    if n == 0 {
        return Ok((value, a_targets, b_targets));
    }
    let mut cost = vec![F::zero(); n * n];
    let mut max_real = F::zero();
    for (i, &ai) in fa.iter().enumerate() {
        for (j, &bj) in fb.iter().enumerate() {
            let c = sq(&a[ai], &b[bj]);
            cost[i * n + j] = c;
            if c > max_real {
                max_real = c;
            }
        }
        let c = half_sq_persistence(&a[ai]);
        cost[i * n + nb + i] = c;
        if c > max_real {
            max_real = c;
        }
    }
    for (j, &bj) in fb.iter().enumerate() {
        let c = half_sq_persistence(&b[bj]);
        cost[(na + j) * n + j] = c;
        if c > max_real {
            max_real = c;
        }
    }
    // Forbid cross-diagonal pairings with a cost no optimum can touch.
    let big = (max_real + F::one()) * sc::<F>(4.0);
    for i in 0..na {
        for j in nb..n {
            if j - nb != i {
                cost[i * n + j] = big;
            }
        }
    }
    for i in na..n {
        for j in 0..nb {
            if i - na != j {
                cost[i * n + j] = big;
            }
        }
    }
    let (assign, total) = min_cost_assignment(&cost, n);
    for (i, &ai) in fa.iter().enumerate() {
        let j = assign[i];
        if j < nb {
            a_targets[ai] = MatchTarget::Point(fb[j]);
            b_targets[fb[j]] = MatchTarget::Point(ai);
        } else {
            debug_assert_eq!(j - nb, i, "optimum never pays a forbidden slot");
        }
    }
    Ok((value + total, a_targets, b_targets))
}

/// Configuration of the alignment loop. The loss itself is fixed —
/// squared 2-Wasserstein over degrees 0 and 1 of Rips 2-skeleton
/// diagrams — only the sampling and update schedule vary.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignConfig<F> {
    /// Points sampled per iteration.
    pub k: usize,
    pub iterations: usize,
    pub seed: u64,
    /// Record a snapshot every this many iterations (0: endpoints
    /// only). The initial and final clouds are always recorded.
    pub snapshot_every: usize,
    pub adam: AdamParams<F>,
}

/// Trajectory of an alignment run.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignResult<F> {
    /// `(iterations completed, cloud state)`, starting at 0 and ending
    /// at the final iteration.
    pub snapshots: Vec<(usize, PointCloud<F>)>,
    /// Per-iteration subset loss.
    pub loss_history: Vec<F>,
    pub final_cloud: PointCloud<F>,
}

/// Runs the stochastic alignment of `y0` toward `x` under the identity
/// labeling. Each iteration draws a uniform `k`-subset, computes the
/// subset loss gradient, and Adam-updates the sampled rows of `Y` only
/// — all other coordinates are untouched that iteration. Fixed seed ⇒
/// bitwise-reproducible trajectory.
pub fn align<F: Scalar>(
    x: &PointCloud<F>,
    y0: &PointCloud<F>,
    cfg: &AlignConfig<F>,
) -> Result<AlignResult<F>> {
    let n = x.len();
    if y0.len() != n {
        return Err(Error::SizeMismatch { expected: n, actual: y0.len() });
    }
    if n == 0 {
        return Err(Error::Domain("align needs a nonempty cloud".into()));
    }
    if cfg.k == 0 || cfg.k > n {
        return Err(Error::Domain(format!(
            "subset size must satisfy 1 <= k <= n, got k={} with n={n}",
            cfg.k
        )));
    }
    if cfg.iterations == 0 {
        return Err(Error::Domain("align needs at least one iteration".into()));
    }
    let mut y = y0.clone();
    let mut state = AdamState::new(n, y.dim(), cfg.adam.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut snapshots = vec![(0usize, y.clone())];
    let mut loss_history = Vec::with_capacity(cfg.iterations);
    for it in 1..=cfg.iterations {
        let subset = uniform_k_subset(&mut rng, n, cfg.k);
        let xs = x.restrict(&subset)?;
        let ys = y.restrict(&subset)?;
        let (loss, grad) = subset_loss_gradient(&xs, &ys)?;
        loss_history.push(loss);
        state.step_rows(&mut y, &subset, &grad)?;
        if cfg.snapshot_every != 0 && it % cfg.snapshot_every == 0 && it != cfg.iterations {
            snapshots.push((it, y.clone()));
        }
    }
    snapshots.push((cfg.iterations, y.clone()));
    Ok(AlignResult { snapshots, loss_history, final_cloud: y })
}
