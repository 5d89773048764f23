//! Metrics between persistence diagrams and derived summaries: exact
//! bottleneck and Wasserstein distances, per-degree aggregation,
//! persistence images, and the subset-wise metric on distributed
//! invariants.

use std::collections::BTreeSet;

use crate::distributed::{DistributedInvariant, InvariantValue};
use crate::matching::{max_bipartite_matching, min_cost_assignment};
use crate::persistence::{PersistenceDiagram, PersistencePoint};
use crate::{sc, sc_usize, Error, Result, Scalar};

/// Which distance compares two diagrams of the same degree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricFlavor {
    Bottleneck,
    /// `p >= 1`.
    Wasserstein { p: f64 },
}

/// Which degrees of the diagrams enter the aggregated distance.
#[derive(Debug, Clone, PartialEq)]
pub enum DegreePolicy {
    /// All degrees carrying points, including the truncated top one.
    All,
    /// Degrees `0..skeleton_dim`: skip the truncated top degree, whose
    /// deaths are artifacts of the skeleton cutoff.
    ExcludeTruncated,
    Explicit(Vec<usize>),
}

/// Whether distributed invariants are compared subset-by-subset or as
/// unlabeled sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelMode {
    /// Entries with equal subset labels are compared; the label sets
    /// must coincide.
    Labeled,
    /// Hausdorff distance between the two families of values, labels
    /// ignored.
    Unlabeled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricConfig {
    pub flavor: MetricFlavor,
    pub degrees: DegreePolicy,
    pub mode: LabelMode,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            flavor: MetricFlavor::Bottleneck,
            degrees: DegreePolicy::All,
            mode: LabelMode::Labeled,
        }
    }
}

fn split_finite<F: Scalar>(pts: &[PersistencePoint<F>]) -> (Vec<PersistencePoint<F>>, Vec<F>) {
    let mut finite = Vec::new();
    let mut essential = Vec::new();
    for p in pts {
        if p.is_essential() {
            essential.push(p.birth);
        } else {
            finite.push(*p);
        }
    }
    (finite, essential)
}

fn sup_dist<F: Scalar>(a: &PersistencePoint<F>, b: &PersistencePoint<F>) -> F {
    let db = (a.birth - b.birth).abs();
    let dd = (a.death - b.death).abs();
    if db > dd {
        db
    } else {
        dd
    }
}

fn half_pers<F: Scalar>(p: &PersistencePoint<F>) -> F {
    (p.death - p.birth) / (F::one() + F::one())
}

/// Bottleneck distance between the degree-`degree` parts of two
/// diagrams.
pub fn bottleneck<F: Scalar>(
    a: &PersistenceDiagram<F>,
    b: &PersistenceDiagram<F>,
    degree: usize,
) -> F {
    bottleneck_points(a.points(degree), b.points(degree))
}

/// Bottleneck distance between two single-degree point lists under the
/// sup-norm ground metric, with diagonal projections allowed for
/// finite points. Essential classes must match essential classes (by
/// sorted birth, which is optimal in one dimension); a count mismatch
/// makes the distance infinite.
///
/// The optimum is located by binary search over candidate costs with a
/// bipartite-matching feasibility test at each probe. The candidate set
/// — pairwise sup-distances and half-persistences — is finite and
/// representable, and feasibility is a monotone step function jumping
/// exactly at the optimal candidate, so bisecting down to adjacent
/// floats recovers that candidate without enumerating the set.
pub fn bottleneck_points<F: Scalar>(a: &[PersistencePoint<F>], b: &[PersistencePoint<F>]) -> F {
    let (fa, mut ea) = split_finite(a);
    let (fb, mut eb) = split_finite(b);
    if ea.len() != eb.len() {
        return F::infinity();
    }
    ea.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eb.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let essential_part = ea.iter().zip(&eb).fold(F::zero(), |m, (&x, &y)| {
        let d = (x - y).abs();
        if d > m {
            d
        } else {
            m
        }
    });

    if fa.is_empty() && fb.is_empty() {
        return essential_part;
    }
    let feasible = |c: F| bottleneck_feasible(&fa, &fb, c);
    let mut hi = fa.iter().chain(&fb).fold(F::zero(), |m, p| {
        let h = half_pers(p);
        if h > m {
            h
        } else {
            m
        }
    });
    let finite_part = if feasible(F::zero()) {
        F::zero()
    } else {
        let mut lo = F::zero();
        debug_assert!(feasible(hi));
        loop {
            let two = F::one() + F::one();
            let mid = lo + (hi - lo) / two;
            if mid <= lo || mid >= hi {
                break;
            }
            if feasible(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    if finite_part > essential_part {
        finite_part
    } else {
        essential_part
    }
}

/// Can every point with persistence above `2c` be matched within
/// sup-distance `c`, on both sides simultaneously? Checking each side
/// separately suffices: two one-sided matchings always merge into one
/// partial matching covering both demanding sets.
fn bottleneck_feasible<F: Scalar>(
    a: &[PersistencePoint<F>],
    b: &[PersistencePoint<F>],
    c: F,
) -> bool {
    let two = F::one() + F::one();
    let demand = |pts: &[PersistencePoint<F>]| -> Vec<usize> {
        (0..pts.len()).filter(|&i| pts[i].death - pts[i].birth > two * c).collect()
    };
    let side = |from: &[PersistencePoint<F>], to: &[PersistencePoint<F>]| -> bool {
        let need = demand(from);
        if need.is_empty() {
            return true;
        }
        let adj: Vec<Vec<u32>> = need
            .iter()
            .map(|&i| {
                (0..to.len())
                    .filter(|&j| sup_dist(&from[i], &to[j]) <= c)
                    .map(|j| j as u32)
                    .collect()
            })
            .collect();
        max_bipartite_matching(&adj, to.len()) == need.len()
    };
    side(a, b) && side(b, a)
}

/// Where a diagram point goes under an optimal matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchTarget {
    /// Index into the other diagram's point list (same degree).
    Point(usize),
    Diagonal,
}

#[derive(Debug, Clone)]
pub struct WassersteinResult<F> {
    pub value: F,
    /// Target of each point of `a`, in input order.
    pub a_targets: Vec<MatchTarget>,
    /// Target of each point of `b`, in input order.
    pub b_targets: Vec<MatchTarget>,
}

/// `p`-Wasserstein distance between the degree-`degree` parts of two
/// diagrams.
pub fn wasserstein<F: Scalar>(
    a: &PersistenceDiagram<F>,
    b: &PersistenceDiagram<F>,
    p: f64,
    degree: usize,
) -> Result<F> {
    wasserstein_points(a.points(degree), b.points(degree), p)
}

/// `p`-Wasserstein distance between single-degree point lists under
/// the sup-norm ground metric; finite points may project onto the
/// diagonal at half their persistence. Essential classes are excluded
/// from the cost: they pair up by birth order at no charge, and a count
/// mismatch makes the distance infinite.
pub fn wasserstein_points<F: Scalar>(
    a: &[PersistencePoint<F>],
    b: &[PersistencePoint<F>],
    p: f64,
) -> Result<F> {
    Ok(wasserstein_full(a, b, p)?.value)
}

/// Wasserstein distance together with the optimal matching that
/// attains it.
pub fn wasserstein_full<F: Scalar>(
    a: &[PersistencePoint<F>],
    b: &[PersistencePoint<F>],
    p: f64,
) -> Result<WassersteinResult<F>> {
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("wasserstein exponent p={p} must be >= 1")));
    }
    let pow = |x: F| -> F {
        if p == 1.0 {
            x
        } else if p == 2.0 {
            x * x
        } else {
            x.powf(sc(p))
        }
    };

    let mut a_targets = vec![MatchTarget::Diagonal; a.len()];
    let mut b_targets = vec![MatchTarget::Diagonal; b.len()];

    let ea: Vec<usize> = (0..a.len()).filter(|&i| a[i].is_essential()).collect();
    let eb: Vec<usize> = (0..b.len()).filter(|&j| b[j].is_essential()).collect();
    if ea.len() != eb.len() {
        return Ok(WassersteinResult { value: F::infinity(), a_targets, b_targets });
    }
    // Essential classes pair by birth order but carry no cost.
    let mut ea_sorted = ea.clone();
    ea_sorted.sort_by(|&x, &y| a[x].birth.partial_cmp(&a[y].birth).unwrap());
    let mut eb_sorted = eb.clone();
    eb_sorted.sort_by(|&x, &y| b[x].birth.partial_cmp(&b[y].birth).unwrap());
    for (&i, &j) in ea_sorted.iter().zip(&eb_sorted) {
        a_targets[i] = MatchTarget::Point(j);
        b_targets[j] = MatchTarget::Point(i);
    }

    let mut total = F::zero();
    let fa: Vec<usize> = (0..a.len()).filter(|&i| !a[i].is_essential()).collect();
    let fb: Vec<usize> = (0..b.len()).filter(|&j| !b[j].is_essential()).collect();
    let (na, nb) = (fa.len(), fb.len());
    let n = na + nb;
    if n > 0 {
        // Square augmented matrix: each point may go to a real partner
        // or to its diagonal slot; slot-to-slot transport is free.
        let mut cost = vec![F::zero(); n * n];
        for (r, &i) in fa.iter().enumerate() {
            for (c, &j) in fb.iter().enumerate() {
                cost[r * n + c] = pow(sup_dist(&a[i], &b[j]));
            }
            for c in nb..n {
                cost[r * n + c] = if c - nb == r { pow(half_pers(&a[i])) } else { F::infinity() };
            }
        }
        for r in na..n {
            for (c, &j) in fb.iter().enumerate() {
                cost[r * n + c] = if r - na == c { pow(half_pers(&b[j])) } else { F::infinity() };
            }
        }
        // Replace the structural infinities: any value strictly larger
        // than every useful entry keeps the solver exact and finite.
        let finite_max = cost.iter().filter(|v| v.is_finite()).fold(F::zero(), |m, &v| {
            if v > m {
                v
            } else {
                m
            }
        });
        let big = (finite_max + F::one()) * sc::<F>(4.0);
        for v in cost.iter_mut() {
            if !v.is_finite() {
                *v = big;
            }
        }
        let (assign, _) = min_cost_assignment(&cost, n);
        for (r, &c) in assign.iter().enumerate() {
            match (r < na, c < nb) {
                (true, true) => {
                    total = total + pow(sup_dist(&a[fa[r]], &b[fb[c]]));
                    a_targets[fa[r]] = MatchTarget::Point(fb[c]);
                    b_targets[fb[c]] = MatchTarget::Point(fa[r]);
                }
                (true, false) => total = total + pow(half_pers(&a[fa[r]])),
                (false, true) => total = total + pow(half_pers(&b[fb[c]])),
                (false, false) => {}
            }
        }
    }

    let value = if p == 1.0 {
        total
    } else if p == 2.0 {
        total.sqrt()
    } else {
        total.powf(sc(1.0 / p))
    };
    Ok(WassersteinResult { value, a_targets, b_targets })
}

/// Aggregated distance between two diagrams: the configured flavor per
/// degree, combined by max over the compared degrees.
pub fn diagram_distance<F: Scalar>(
    a: &PersistenceDiagram<F>,
    b: &PersistenceDiagram<F>,
    config: &MetricConfig,
) -> Result<F> {
    if a.skeleton_dim() != b.skeleton_dim() {
        return Err(Error::Domain(format!(
            "diagrams have different skeleton dimensions ({} vs {})",
            a.skeleton_dim(),
            b.skeleton_dim()
        )));
    }
    let degrees: BTreeSet<usize> = match &config.degrees {
        DegreePolicy::Explicit(ds) => ds.iter().copied().collect(),
        policy => {
            let cap = match policy {
                DegreePolicy::ExcludeTruncated => a.skeleton_dim(),
                _ => a.skeleton_dim() + 1,
            };
            a.active_degrees().chain(b.active_degrees()).filter(|&d| d < cap).collect()
        }
    };
    let mut worst = F::zero();
    for d in degrees {
        let dist = match config.flavor {
            MetricFlavor::Bottleneck => bottleneck(a, b, d),
            MetricFlavor::Wasserstein { p } => wasserstein(a, b, p, d)?,
        };
        if dist > worst {
            worst = dist;
        }
    }
    Ok(worst)
}

fn entry_distance<F: Scalar>(
    a: &InvariantValue<F>,
    b: &InvariantValue<F>,
    config: &MetricConfig,
) -> Result<F> {
    match (a, b) {
        (InvariantValue::Diagram(da), InvariantValue::Diagram(db)) => {
            diagram_distance(da, db, config)
        }
        (InvariantValue::Curve(ca), InvariantValue::Curve(cb)) => {
            Ok(sc::<F>(ca.sup_distance(cb) as f64))
        }
        _ => Err(Error::Domain("cannot compare a diagram with an Euler curve".into())),
    }
}

/// Distance between two distributed invariants.
///
/// Labeled mode compares entries subset-by-subset and takes the max;
/// the two label sets must coincide. Unlabeled mode ignores labels and
/// returns the Hausdorff distance between the two families of values.
/// Diagrams compare with the configured flavor, Euler curves with the
/// sup norm.
pub fn distributed_distance<F: Scalar>(
    a: &DistributedInvariant<F>,
    b: &DistributedInvariant<F>,
    config: &MetricConfig,
) -> Result<F> {
    if a.kind() != b.kind() || a.skeleton_dim() != b.skeleton_dim() {
        return Err(Error::Domain(
            "distributed invariants have different kind or skeleton".into(),
        ));
    }
    match config.mode {
        LabelMode::Labeled => {
            if a.len() != b.len() {
                return Err(Error::SizeMismatch { expected: a.len(), actual: b.len() });
            }
            let mut worst = F::zero();
            for (subset, va) in a.entries() {
                let Some(vb) = b.get(subset) else {
                    return Err(Error::MissingSubset(subset.clone()));
                };
                let dist = entry_distance(va, vb, config)?;
                if dist > worst {
                    worst = dist;
                }
            }
            Ok(worst)
        }
        LabelMode::Unlabeled => {
            if a.is_empty() && b.is_empty() {
                return Ok(F::zero());
            }
            if a.is_empty() || b.is_empty() {
                return Ok(F::infinity());
            }
            let directed = |x: &DistributedInvariant<F>,
                            y: &DistributedInvariant<F>|
             -> Result<F> {
                let mut sup = F::zero();
                for vx in x.entries().values() {
                    let mut inf = F::infinity();
                    for vy in y.entries().values() {
                        let d = entry_distance(vx, vy, config)?;
                        if d < inf {
                            inf = d;
                        }
                    }
                    if inf > sup {
                        sup = inf;
                    }
                }
                Ok(sup)
            };
            let ab = directed(a, b)?;
            let ba = directed(b, a)?;
            Ok(if ab > ba { ab } else { ba })
        }
    }
}

/// Rasterization parameters for persistence images over the
/// (birth, persistence) plane.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageConfig<F> {
    /// (columns, rows) = (birth cells, persistence cells).
    pub resolution: (usize, usize),
    pub birth_range: (F, F),
    pub pers_range: (F, F),
    pub sigma: F,
}

/// The default raster over the bounding box of a batch of diagrams:
/// 20×20 pixels, kernel bandwidth 5% of the persistence range.
///
/// Only finite points of the requested degree enter the box. Degenerate
/// or empty ranges are widened by half a unit on each side so the
/// config stays valid.
pub fn fit_image_config<'a, F, I>(diagrams: I, degree: usize) -> ImageConfig<F>
where
    F: Scalar,
    I: IntoIterator<Item = &'a PersistenceDiagram<F>>,
{
    let mut b_lo = F::infinity();
    let mut b_hi = F::neg_infinity();
    let mut p_lo = F::infinity();
    let mut p_hi = F::neg_infinity();
    for dg in diagrams {
        for p in dg.points(degree) {
            if p.is_essential() {
                continue;
            }
            let q = p.persistence();
            if p.birth < b_lo {
                b_lo = p.birth;
            }
            if p.birth > b_hi {
                b_hi = p.birth;
            }
            if q < p_lo {
                p_lo = q;
            }
            if q > p_hi {
                p_hi = q;
            }
        }
    }
    let widen = |lo: F, hi: F| -> (F, F) {
        if lo.is_finite() && hi.is_finite() && lo < hi {
            (lo, hi)
        } else {
            let c = if lo.is_finite() { lo } else { F::zero() };
            (c - sc(0.5), c + sc(0.5))
        }
    };
    let birth_range = widen(b_lo, b_hi);
    let pers_range = widen(p_lo, p_hi);
    let sigma = (pers_range.1 - pers_range.0) * sc(0.05);
    ImageConfig { resolution: (20, 20), birth_range, pers_range, sigma }
}

/// A rasterized diagram: Gaussian bumps at (birth, persistence),
/// weighted linearly by persistence, sampled at pixel centers.
#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceImage<F> {
    config: ImageConfig<F>,
    values: Vec<F>,
    dropped_essential: usize,
}

impl<F: Scalar> PersistenceImage<F> {
    pub fn config(&self) -> &ImageConfig<F> {
        &self.config
    }

    /// Row-major pixel values: `values[row * nx + col]`, row = the
    /// persistence axis, col = the birth axis.
    pub fn values(&self) -> &[F] {
        &self.values
    }

    /// How many infinite-death points were omitted from the raster.
    pub fn dropped_essential(&self) -> usize {
        self.dropped_essential
    }

    pub fn max_value(&self) -> F {
        self.values.iter().fold(F::zero(), |m, &v| if v > m { v } else { m })
    }

    pub fn l2_distance(&self, other: &Self) -> Result<F> {
        if self.config != other.config {
            return Err(Error::Domain("persistence images have different configurations".into()));
        }
        let mut s = F::zero();
        for (x, y) in self.values.iter().zip(&other.values) {
            let d = *x - *y;
            s = s + d * d;
        }
        Ok(s.sqrt())
    }
}

/// Rasterizes one degree of a diagram. Essential points have no finite
/// persistence coordinate; they are dropped and counted in the result.
pub fn persistence_image<F: Scalar>(
    diagram: &PersistenceDiagram<F>,
    degree: usize,
    config: &ImageConfig<F>,
) -> Result<PersistenceImage<F>> {
    let (nx, ny) = config.resolution;
    if nx == 0 || ny == 0 {
        return Err(Error::Domain("image resolution must be positive".into()));
    }
    if !(config.birth_range.0 < config.birth_range.1)
        || !(config.pers_range.0 < config.pers_range.1)
    {
        return Err(Error::Domain("image ranges must be nonempty intervals".into()));
    }
    if !(config.sigma > F::zero()) {
        return Err(Error::Domain("image kernel sigma must be positive".into()));
    }
    let two = F::one() + F::one();
    let dx = (config.birth_range.1 - config.birth_range.0) / sc_usize(nx);
    let dy = (config.pers_range.1 - config.pers_range.0) / sc_usize(ny);
    let denom = two * config.sigma * config.sigma;
    let mut values = vec![F::zero(); nx * ny];
    let mut dropped = 0usize;
    for p in diagram.points(degree) {
        if p.is_essential() {
            dropped += 1;
            continue;
        }
        let (b, q) = (p.birth, p.persistence());
        for row in 0..ny {
            let y = config.pers_range.0 + dy * (sc_usize::<F>(row) + sc(0.5));
            for col in 0..nx {
                let x = config.birth_range.0 + dx * (sc_usize::<F>(col) + sc(0.5));
                let e = ((x - b) * (x - b) + (y - q) * (y - q)) / denom;
                values[row * nx + col] = values[row * nx + col] + q * (-e).exp();
            }
        }
    }
    Ok(PersistenceImage { config: config.clone(), values, dropped_essential: dropped })
}

/// Pixel-wise mean of images sharing a configuration. The dropped
/// essential counts accumulate: the result reports their sum across the
/// batch.
pub fn average_images<F: Scalar>(images: &[PersistenceImage<F>]) -> Result<PersistenceImage<F>> {
    let Some(first) = images.first() else {
        return Err(Error::Domain("cannot average zero images".into()));
    };
    let mut values = vec![F::zero(); first.values.len()];
    let mut dropped = 0usize;
    for img in images {
        if img.config != first.config {
            return Err(Error::Domain("persistence images have different configurations".into()));
        }
        for (acc, v) in values.iter_mut().zip(&img.values) {
            *acc = *acc + *v;
        }
        dropped += img.dropped_essential;
    }
    let count = sc_usize::<F>(images.len());
    for v in values.iter_mut() {
        *v = *v / count;
    }
    Ok(PersistenceImage { config: first.config.clone(), values, dropped_essential: dropped })
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn pt(b: f64, d: f64) -> PersistencePoint<f64> {
        PersistencePoint { birth: b, death: d }
    }

    fn random_points(rng: &mut ChaCha8Rng, max_n: usize) -> Vec<PersistencePoint<f64>> {
        let n = rng.random_range(0..=max_n);
        (0..n)
            .map(|_| {
                let b = rng.random::<f64>() * 2.0;
                if rng.random::<f64>() < 0.15 {
                    pt(b, f64::INFINITY)
                } else {
                    pt(b, b + rng.random::<f64>() * 2.0 + 1e-3)
                }
            })
            .collect()
    }

    #[test]
    fn bottleneck_known_value() {
        // Single points (0,2) vs (0,1): matching them costs 1, while
        // the diagonal route costs max(1, 1/2) = 1.
        assert_eq!(bottleneck_points(&[pt(0.0, 2.0)], &[pt(0.0, 1.0)]), 1.0);
    }

    #[test]
    fn bottleneck_empty_and_identical() {
        assert_eq!(bottleneck_points::<f64>(&[], &[]), 0.0);
        let a = [pt(0.0, 2.0), pt(1.0, 4.0)];
        assert_eq!(bottleneck_points(&a, &a), 0.0);
        // One side empty: everything projects to the diagonal.
        assert_eq!(bottleneck_points(&[pt(1.0, 3.0)], &[]), 1.0);
    }

    #[test]
    fn bottleneck_diagram_wrapper_selects_degree() {
        let a = PersistenceDiagram::from_points(1, vec![(0, pt(0.0, 2.0)), (1, pt(0.0, 4.0))])
            .unwrap();
        let b = PersistenceDiagram::from_points(1, vec![(0, pt(0.0, 2.0)), (1, pt(0.0, 3.0))])
            .unwrap();
        assert_eq!(bottleneck(&a, &b, 0), 0.0);
        // (0,4) vs (0,3): matching costs 1; the double-diagonal route
        // costs max(2, 1.5) = 2.
        assert_eq!(bottleneck(&a, &b, 1), 1.0);
        assert_eq!(bottleneck(&a, &b, 7), 0.0);
        assert_eq!(wasserstein(&a, &b, 1.0, 1).unwrap(), 1.0);
    }

    #[test]
    fn bottleneck_essential_mismatch_is_infinite() {
        assert_eq!(bottleneck_points(&[pt(0.0, f64::INFINITY)], &[]), f64::INFINITY);
        let d = bottleneck_points(&[pt(0.0, f64::INFINITY)], &[pt(0.5, f64::INFINITY)]);
        assert_eq!(d, 0.5);
    }

    #[test]
    fn wasserstein_known_value() {
        // W1({(0,2),(1,3)}, {(0,2)}): (1,3) -> diagonal costs 1.
        let w = wasserstein_points(&[pt(0.0, 2.0), pt(1.0, 3.0)], &[pt(0.0, 2.0)], 1.0).unwrap();
        assert!((w - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wasserstein_essential_mismatch_is_infinite() {
        let w = wasserstein_points(&[pt(0.0, f64::INFINITY)], &[pt(0.0, 1.0)], 2.0).unwrap();
        assert_eq!(w, f64::INFINITY);
        assert!(wasserstein_points(&[pt(0.0, 1.0)], &[], 0.5).is_err());
    }

    #[test]
    fn wasserstein_matching_is_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..100 {
            let a = random_points(&mut rng, 5);
            let b = random_points(&mut rng, 5);
            let r = wasserstein_full(&a, &b, 2.0).unwrap();
            if !r.value.is_finite() {
                continue;
            }
            // Recompute the cost from the reported matching; essential
            // pairs are free.
            let mut total = 0.0;
            for (i, t) in r.a_targets.iter().enumerate() {
                match *t {
                    MatchTarget::Point(j) => {
                        if !a[i].is_essential() {
                            total += sup_dist(&a[i], &b[j]).powi(2);
                        }
                        assert_eq!(r.b_targets[j], MatchTarget::Point(i));
                        assert_eq!(a[i].is_essential(), b[j].is_essential());
                    }
                    MatchTarget::Diagonal => {
                        assert!(!a[i].is_essential());
                        total += half_pers(&a[i]).powi(2);
                    }
                }
            }
            for (j, t) in r.b_targets.iter().enumerate() {
                if *t == MatchTarget::Diagonal {
                    total += half_pers(&b[j]).powi(2);
                }
            }
            assert!((total.sqrt() - r.value).abs() < 1e-9);
        }
    }

    #[test]
    fn wasserstein_agrees_with_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..60 {
            let a: Vec<_> =
                random_points(&mut rng, 3).into_iter().filter(|p| !p.is_essential()).collect();
            let b: Vec<_> =
                random_points(&mut rng, 3).into_iter().filter(|p| !p.is_essential()).collect();
            for p in [1.0, 2.0, 3.0] {
                let fast = wasserstein_points(&a, &b, p).unwrap();
                let slow = brute_wasserstein(&a, &b, p);
                assert!(
                    (fast - slow).abs() < 1e-9,
                    "p={p} fast={fast} slow={slow} a={a:?} b={b:?}"
                );
            }
        }
    }

    /// Enumerates all matchings via permutations of the padded square.
    fn brute_wasserstein(
        a: &[PersistencePoint<f64>],
        b: &[PersistencePoint<f64>],
        p: f64,
    ) -> f64 {
        let n = a.len() + b.len();
        if n == 0 {
            return 0.0;
        }
        let cost = |r: usize, c: usize| -> f64 {
            match (r < a.len(), c < b.len()) {
                (true, true) => sup_dist(&a[r], &b[c]).powf(p),
                (true, false) => {
                    if c - b.len() == r {
                        half_pers(&a[r]).powf(p)
                    } else {
                        f64::INFINITY
                    }
                }
                (false, true) => {
                    if r - a.len() == c {
                        half_pers(&b[c]).powf(p)
                    } else {
                        f64::INFINITY
                    }
                }
                (false, false) => 0.0,
            }
        };
        fn go(
            r: usize,
            n: usize,
            used: &mut Vec<bool>,
            acc: f64,
            best: &mut f64,
            cost: &impl Fn(usize, usize) -> f64,
        ) {
            if r == n {
                *best = best.min(acc);
                return;
            }
            for c in 0..n {
                if !used[c] && cost(r, c).is_finite() {
                    used[c] = true;
                    go(r + 1, n, used, acc + cost(r, c), best, cost);
                    used[c] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        go(0, n, &mut vec![false; n], 0.0, &mut best, &cost);
        best.powf(1.0 / p)
    }

    #[test]
    fn metric_axioms_hold_on_random_diagrams() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..80 {
            let a = random_points(&mut rng, 4);
            let b = random_points(&mut rng, 4);
            let c = random_points(&mut rng, 4);
            let dab = bottleneck_points(&a, &b);
            let dba = bottleneck_points(&b, &a);
            assert_eq!(dab, dba);
            assert_eq!(bottleneck_points(&a, &a), 0.0);
            let dac = bottleneck_points(&a, &c);
            let dbc = bottleneck_points(&b, &c);
            if dab.is_finite() && dbc.is_finite() {
                assert!(dac <= dab + dbc + 1e-12);
            }
            // Bottleneck is the p -> inf limit, so it never exceeds W_p
            // on the finite parts; essential births are free only in
            // W_p, so compare on essential-free samples.
            let af: Vec<_> = a.iter().copied().filter(|p| !p.is_essential()).collect();
            let bf: Vec<_> = b.iter().copied().filter(|p| !p.is_essential()).collect();
            let w2 = wasserstein_points(&af, &bf, 2.0).unwrap();
            assert!(bottleneck_points(&af, &bf) <= w2 + 1e-12);
        }
    }

    #[test]
    fn diagram_distance_respects_degree_policy() {
        let mk = |deg_pts: Vec<(usize, PersistencePoint<f64>)>| {
            PersistenceDiagram::from_points(2, deg_pts).unwrap()
        };
        let a = mk(vec![(0, pt(0.0, 1.0)), (2, pt(0.0, 5.0))]);
        let b = mk(vec![(0, pt(0.0, 1.0)), (2, pt(0.0, 9.0))]);
        // All degrees by default; (0,5) vs (0,9) in degree 2 costs 4.
        assert_eq!(diagram_distance(&a, &b, &MetricConfig::default()).unwrap(), 4.0);
        let excl = MetricConfig { degrees: DegreePolicy::ExcludeTruncated, ..Default::default() };
        assert_eq!(diagram_distance(&a, &b, &excl).unwrap(), 0.0);
        let explicit =
            MetricConfig { degrees: DegreePolicy::Explicit(vec![2]), ..Default::default() };
        assert_eq!(diagram_distance(&a, &b, &explicit).unwrap(), 4.0);
    }

    #[test]
    fn image_peaks_at_the_point() {
        // Birth 0.55 and persistence 1.1 hit the centers of column 5 and
        // row 5 exactly, so the argmax pixel is unambiguous.
        let dg = PersistenceDiagram::from_points(1, vec![(0, pt(0.55, 1.65))]).unwrap();
        let cfg = ImageConfig {
            resolution: (10, 10),
            birth_range: (0.0, 1.0),
            pers_range: (0.0, 2.0),
            sigma: 0.2,
        };
        let img = persistence_image(&dg, 0, &cfg).unwrap();
        assert_eq!(img.dropped_essential(), 0);
        let (best_idx, _) = img
            .values()
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        assert_eq!(best_idx % 10, 5);
        assert_eq!(best_idx / 10, 5);
        // Weighting is linear in persistence (heavier point kept inside
        // the window so no kernel mass is clipped away).
        let dg2 = PersistenceDiagram::from_points(1, vec![(0, pt(0.55, 2.05))]).unwrap();
        let img2 = persistence_image(&dg2, 0, &cfg).unwrap();
        let sum: f64 = img.values().iter().sum();
        let sum2: f64 = img2.values().iter().sum();
        assert!(sum2 > sum);
    }

    #[test]
    fn image_is_additive_and_reports_dropped_points() {
        let cfg = ImageConfig {
            resolution: (6, 6),
            birth_range: (0.0, 2.0),
            pers_range: (0.0, 2.0),
            sigma: 0.25,
        };
        let one = PersistenceDiagram::from_points(1, vec![(0, pt(0.5, 1.5))]).unwrap();
        let two = PersistenceDiagram::from_points(
            1,
            vec![(0, pt(0.5, 1.5)), (0, pt(0.5, 1.5)), (0, pt(0.0, f64::INFINITY))],
        )
        .unwrap();
        let img_one = persistence_image(&one, 0, &cfg).unwrap();
        let img_two = persistence_image(&two, 0, &cfg).unwrap();
        assert_eq!(img_two.dropped_essential(), 1);
        for (&x, &y) in img_one.values().iter().zip(img_two.values()) {
            assert!((2.0 * x - y).abs() < 1e-12);
        }
        // Empty diagram -> zero image.
        let empty = PersistenceDiagram::<f64>::new(1);
        let img = persistence_image(&empty, 0, &cfg).unwrap();
        assert!(img.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fitted_config_covers_the_batch() {
        let a = PersistenceDiagram::from_points(1, vec![(1, pt(0.25, 1.0))]).unwrap();
        let b =
            PersistenceDiagram::from_points(1, vec![(1, pt(0.5, 3.0)), (1, pt(0.0, f64::INFINITY))])
                .unwrap();
        let cfg = fit_image_config::<f64, _>([&a, &b], 1);
        assert_eq!(cfg.resolution, (20, 20));
        assert_eq!(cfg.birth_range, (0.25, 0.5));
        assert_eq!(cfg.pers_range, (0.75, 2.5));
        assert!((cfg.sigma - 0.05 * 1.75).abs() < 1e-12);
        // Degenerate batch: a single point still yields a usable config.
        let solo = fit_image_config::<f64, _>([&a], 1);
        assert_eq!(solo.birth_range, (-0.25, 0.75));
        assert!(solo.sigma > 0.0);
        assert!(persistence_image(&a, 1, &solo).is_ok());
    }

    #[test]
    fn image_averaging_and_l2() {
        let cfg = ImageConfig {
            resolution: (5, 5),
            birth_range: (0.0, 1.0),
            pers_range: (0.0, 3.0),
            sigma: 0.3,
        };
        let mk = |d: f64| {
            let dg = PersistenceDiagram::from_points(1, vec![(0, pt(0.0, d))]).unwrap();
            persistence_image(&dg, 0, &cfg).unwrap()
        };
        let (a, b) = (mk(1.0), mk(2.0));
        let avg = average_images(&[a.clone(), b.clone()]).unwrap();
        for ((&v, &x), &y) in avg.values().iter().zip(a.values()).zip(b.values()) {
            assert!((v - (x + y) / 2.0).abs() < 1e-12);
        }
        assert_eq!(a.l2_distance(&a).unwrap(), 0.0);
        let d = a.l2_distance(&b).unwrap();
        assert!(d > 0.0);
        assert_eq!(d, b.l2_distance(&a).unwrap());
        // Mismatched configurations are rejected.
        let other = persistence_image(
            &PersistenceDiagram::from_points(1, vec![(0, pt(0.0, 1.0))]).unwrap(),
            0,
            &ImageConfig { resolution: (4, 5), ..cfg.clone() },
        )
        .unwrap();
        assert!(a.l2_distance(&other).is_err());
        assert!(average_images(&[a, other]).is_err());
        assert!(average_images::<f64>(&[]).is_err());
    }

    #[test]
    fn essential_births_cost_in_bottleneck_but_not_wasserstein() {
        let a = [pt(0.0, f64::INFINITY), pt(2.0, f64::INFINITY)];
        let b = [pt(0.5, f64::INFINITY), pt(2.1, f64::INFINITY)];
        assert_eq!(bottleneck_points(&a, &b), 0.5);
        assert_eq!(wasserstein_points(&a, &b, 1.0).unwrap(), 0.0);
        assert_eq!(wasserstein_points(&a, &b, 2.0).unwrap(), 0.0);
    }
}
