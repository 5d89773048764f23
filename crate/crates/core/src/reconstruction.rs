//! The inverse direction: recovering geometry from distributed
//! invariants.
//!
//! The pipeline has three legs. The rounding construction
//! ([`rounding_grid`], [`densify_grid`], [`pair_rounding_grid`]) builds
//! finite grids on which matched values — scalars or whole diagrams —
//! become indistinguishable after projection, while no value moves by
//! more than a controlled multiple of the matching gaps. The
//! inclusion–exclusion machinery ([`euler_ie_step`],
//! [`euler_reconstruct_pairs`], [`euler_sparse_step`],
//! [`distances_from_pair_curves`]) telescopes Euler curves of size-`k`
//! subsets down to pair curves and reads the distance matrix off their
//! unique breakpoints. The bound formulas ([`quasi_isometry_bound`] and
//! friends) turn an observed invariant discrepancy into an explicit
//! quasi-isometry constant, and [`certify_alignment`] packages the
//! whole comparison for a given bijection.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::distributed::{
    check_cover_closure, subset_invariant, DistributedInvariant, InvariantKind, InvariantValue,
    SubsetCollection,
};
use crate::filtration::RoundingGrid;
use crate::geometry::{
    pairwise_distances, quasi_isometry_distortion, Bijection, DistanceMatrix, PointCloud,
};
use crate::metrics::{diagram_distance, wasserstein_full, MatchTarget, MetricConfig, MetricFlavor};
use crate::persistence::{EulerCurve, PersistenceDiagram};
use crate::util::{binomial, for_each_subset};
use crate::{sc, sc_usize, Error, Result, Scalar};

/// Outcome of the rounding construction: the grid, the projection of
/// every input value, and the gap statistics the guarantees are stated
/// in. With `ε` the largest and `δ` the total matched gap, matched
/// values project identically and nothing moves by more than `3ε + 4δ`
/// (hence by more than `7δ`, as `ε ≤ δ`).
#[derive(Debug, Clone, PartialEq)]
pub struct RoundingResult<F> {
    grid: RoundingGrid<F>,
    pi: Vec<(F, F)>,
    epsilon: F,
    delta: F,
}

impl<F: Scalar> RoundingResult<F> {
    pub fn grid(&self) -> &RoundingGrid<F> {
        &self.grid
    }

    pub fn into_grid(self) -> RoundingGrid<F> {
        self.grid
    }

    /// `(x, π(x))` for every input value: the first coordinates in
    /// ascending order, then their matched partners in the same order.
    pub fn pi(&self) -> &[(F, F)] {
        &self.pi
    }

    /// Largest single matched gap.
    pub fn epsilon(&self) -> F {
        self.epsilon
    }

    /// Sum of all matched gaps.
    pub fn delta(&self) -> F {
        self.delta
    }

    /// Smallest and largest input value.
    pub fn data_range(&self) -> (F, F) {
        let mut lo = F::infinity();
        let mut hi = F::neg_infinity();
        for &(x, _) in &self.pi {
            if x < lo {
                lo = x;
            }
            if x > hi {
                hi = x;
            }
        }
        (lo, hi)
    }
}

/// Builds a grid from index-matched value lists `p`, `q` so that
/// matched values round to the same grid point while every input moves
/// by at most `3ε + 4δ`.
///
/// The pairs are scanned by ascending `p` (stable in input order on
/// ties). The smallest `p` seeds the grid; each later `p` is skipped
/// while it is within `2ε + 4δ` of the last accepted point, and is
/// otherwise accepted after being pushed up by `2·|p_i − q_i|` for
/// every earlier pair that the candidate midpoint would separate. The
/// side test reproduces [`RoundingGrid::project`]'s tie rule bit for
/// bit, so matched projections agree exactly, not just up to rounding.
pub fn rounding_grid<F: Scalar>(p: &[F], q: &[F]) -> Result<RoundingResult<F>> {
    if p.len() != q.len() {
        return Err(Error::SizeMismatch { expected: p.len(), actual: q.len() });
    }
    if p.is_empty() {
        return Err(Error::Domain("rounding_grid needs at least one matched pair".into()));
    }
    if p.iter().chain(q).any(|x| !x.is_finite()) {
        return Err(Error::Domain("rounding_grid inputs must be finite".into()));
    }
    let mut pairs: Vec<(F, F)> = p.iter().copied().zip(q.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite values are totally ordered"));

    let mut epsilon = F::zero();
    let mut delta = F::zero();
    for &(a, b) in &pairs {
        let d = (a - b).abs();
        if d > epsilon {
            epsilon = d;
        }
        delta = delta + d;
    }
    let gap = sc::<F>(2.0) * epsilon + sc::<F>(4.0) * delta;
    let two = sc::<F>(2.0);

    let mut values: Vec<F> = vec![pairs[0].0];
    for n in 1..pairs.len() {
        let p_n = pairs[n].0;
        let r_star = *values.last().expect("seeded");
        if p_n < r_star + gap {
            continue;
        }
        let mut r_n = p_n;
        // `x` lands on the upper point iff NOT (x − r_* < r_n − x),
        // exactly the projection's comparison. Each push moves the
        // midpoint up, which can newly separate a pair an earlier sweep
        // saw intact, so sweep to a fixed point; a separated pair ends
        // up below the raised midpoint, so every pair settles and the
        // sweep count stays linear.
        let mut sweeps = 0usize;
        loop {
            let mut changed = false;
            for &(pi_v, qi_v) in &pairs[..n] {
                let hi_p = !(pi_v - r_star < r_n - pi_v);
                let hi_q = !(qi_v - r_star < r_n - qi_v);
                if hi_p != hi_q {
                    let bumped = r_n + two * (pi_v - qi_v).abs();
                    if bumped <= r_n {
                        return Err(Error::Domain(
                            "rounding_grid increment stalled below float precision".into(),
                        ));
                    }
                    r_n = bumped;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
            sweeps += 1;
            if sweeps > 4 * n + 8 {
                return Err(Error::Domain(
                    "rounding_grid side-consistency rescan failed to settle".into(),
                ));
            }
        }
        // Equal inputs with a zero gap budget would re-admit the same
        // value; the grid stays strictly increasing instead.
        if r_n > r_star {
            values.push(r_n);
        }
    }

    let grid = RoundingGrid::new(values)?;
    let mut pi = Vec::with_capacity(2 * pairs.len());
    for &(a, _) in &pairs {
        pi.push((a, grid.project(a)));
    }
    for &(_, b) in &pairs {
        pi.push((b, grid.project(b)));
    }
    debug_assert!(pairs.iter().all(|&(a, b)| grid.project(a) == grid.project(b)));
    Ok(RoundingResult { grid, pi, epsilon, delta })
}

/// Extends the grid of a rounding result so it is `14δ`-dense over
/// `range` (every point of the range has a grid value within `14δ`)
/// without changing any input's projection: new values are laid out
/// from existing grid values at exact `14δ` spacing, which keeps them
/// at least twice the maximum input displacement away from every value
/// the construction placed. A grid that is already dense over the range
/// comes back unchanged.
///
/// When `δ = 0` the density scale degenerates and `fallback_spacing`
/// (which must then be positive) supplies the pitch instead.
pub fn densify_grid<F: Scalar>(
    r: &RoundingResult<F>,
    range: (F, F),
    fallback_spacing: F,
) -> Result<RoundingGrid<F>> {
    let (lo, hi) = range;
    if !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(Error::Domain("densify_grid range must be finite and ordered".into()));
    }
    let h = if r.delta() > F::zero() { sc::<F>(14.0) * r.delta() } else { fallback_spacing };
    if !(h > F::zero()) || !h.is_finite() {
        return Err(Error::Domain(
            "densify_grid needs positive spacing (delta = 0 requires a positive fallback_spacing)"
                .into(),
        ));
    }
    let stall =
        || Error::Domain("densify_grid spacing stalled below float precision".to_string());

    let values = r.grid().values();
    let mut added: Vec<F> = Vec::new();
    for w in values.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mut prev = a;
        let mut j = 1usize;
        loop {
            let c = a + h * sc_usize::<F>(j);
            if !(c < b - h) {
                break;
            }
            if c <= prev {
                return Err(stall());
            }
            added.push(c);
            prev = c;
            j += 1;
        }
    }
    // Extend past the ends only while part of the range is farther than
    // `h` from every grid value.
    let base_hi = *values.last().expect("grids are nonempty");
    let mut cur = base_hi;
    let mut j = 1usize;
    while cur + h < hi {
        let c = base_hi + h * sc_usize::<F>(j);
        if c <= cur {
            return Err(stall());
        }
        added.push(c);
        cur = c;
        j += 1;
    }
    let base_lo = values[0];
    let mut cur = base_lo;
    let mut j = 1usize;
    while cur - h > lo {
        let c = base_lo - h * sc_usize::<F>(j);
        if c >= cur {
            return Err(stall());
        }
        added.push(c);
        cur = c;
        j += 1;
    }

    let mut merged = values.to_vec();
    merged.extend(added);
    merged.sort_by(|a, b| a.partial_cmp(b).expect("finite values are totally ordered"));
    let grid = RoundingGrid::new(merged)?;
    debug_assert!(r.pi().iter().all(|&(x, px)| grid.project(x) == px));
    Ok(grid)
}

/// Builds a single grid that makes every diagram pair round
/// identically: each pair's optimal per-degree 1-Wasserstein matching
/// supplies matched birth/death values (a point matched to the diagonal
/// contributes its projection there), all of which feed
/// [`rounding_grid`]; the grid is then densified at 14× the accumulated
/// gap over the data range. Every pair must respect the caller-asserted
/// per-degree 1-Wasserstein budget `delta`; a violation is rejected
/// loudly rather than silently producing a grid without its guarantee.
pub fn pair_rounding_grid<F: Scalar>(
    pairs: &[(&PersistenceDiagram<F>, &PersistenceDiagram<F>)],
    delta: F,
) -> Result<RoundingGrid<F>> {
    if !(delta >= F::zero()) || !delta.is_finite() {
        return Err(Error::Domain("pair_rounding_grid delta must be finite and nonnegative".into()));
    }
    let two = sc::<F>(2.0);
    let mut ps: Vec<F> = Vec::new();
    let mut qs: Vec<F> = Vec::new();
    for (idx, &(a, b)) in pairs.iter().enumerate() {
        let degrees: BTreeSet<usize> = a.active_degrees().chain(b.active_degrees()).collect();
        let mut matches = Vec::new();
        let mut w1 = F::zero();
        for deg in degrees {
            let res = wasserstein_full(a.points(deg), b.points(deg), 1.0)?;
            if res.value > w1 {
                w1 = res.value;
            }
            matches.push((deg, res));
        }
        if !(w1 <= delta) {
            return Err(Error::Domain(format!(
                "diagram pair {idx} exceeds the asserted 1-Wasserstein budget ({w1} > {delta})"
            )));
        }
        for (deg, res) in matches {
            let pa = a.points(deg);
            let pb = b.points(deg);
            for (i, t) in res.a_targets.iter().enumerate() {
                let x = &pa[i];
                match *t {
                    MatchTarget::Point(j) => {
                        let y = &pb[j];
                        ps.push(x.birth);
                        qs.push(y.birth);
                        if x.death.is_finite() && y.death.is_finite() {
                            ps.push(x.death);
                            qs.push(y.death);
                        }
                    }
                    MatchTarget::Diagonal => {
                        let mid = (x.birth + x.death) / two;
                        ps.push(x.birth);
                        qs.push(mid);
                        ps.push(x.death);
                        qs.push(mid);
                    }
                }
            }
            for (j, t) in res.b_targets.iter().enumerate() {
                if matches!(t, MatchTarget::Diagonal) {
                    let y = &pb[j];
                    let mid = (y.birth + y.death) / two;
                    ps.push(y.birth);
                    qs.push(mid);
                    ps.push(y.death);
                    qs.push(mid);
                }
            }
        }
    }
    if ps.is_empty() {
        // No off-diagonal mass anywhere; any grid works, pin one point.
        return RoundingGrid::new(vec![F::zero()]);
    }
    let res = rounding_grid(&ps, &qs)?;
    if res.delta() > F::zero() {
        let range = res.data_range();
        densify_grid(&res, range, F::one())
    } else {
        Ok(res.into_grid())
    }
}

/// Solves the inclusion–exclusion identity over a window `w` for the
/// Euler curve of `w` minus all of `removed`. With `Y_i = w ∖ {x_i}`
/// ranging over the removed points, `χ(w) = Σ_{∅≠I} (−1)^{|I|+1}
/// χ(w ∖ x_I)` and the full-intersection term is the single unknown.
/// `curve_of` must supply `χ(w ∖ x_I)` for every nonempty proper `I`;
/// it receives the remaining subset, sorted ascending.
pub fn euler_ie_step<F: Scalar>(
    w: &[u32],
    chi_w: &EulerCurve<F>,
    removed: &[u32],
    mut curve_of: impl FnMut(&[u32]) -> Option<EulerCurve<F>>,
) -> Result<EulerCurve<F>> {
    if !w.windows(2).all(|p| p[0] < p[1]) {
        return Err(Error::Domain("euler_ie_step window must be sorted and distinct".into()));
    }
    if !removed.windows(2).all(|p| p[0] < p[1]) {
        return Err(Error::Domain(
            "euler_ie_step removed points must be sorted and distinct".into(),
        ));
    }
    if removed.len() < 2 {
        return Err(Error::Domain(
            "euler_ie_step needs at least two removed points (their complements must cover the window)".into(),
        ));
    }
    if removed.iter().any(|x| w.binary_search(x).is_err()) {
        return Err(Error::Domain("euler_ie_step removed points must lie in the window".into()));
    }

    // acc = χ(w) − Σ over nonempty proper I of (−1)^{|I|+1} χ(w ∖ x_I);
    // the unknown enters the identity with sign (−1)^{|removed|+1}.
    let mut acc = chi_w.clone();
    let mut err: Option<Error> = None;
    for size in 1..removed.len() {
        for_each_subset(removed, size, &mut |i_set| {
            if err.is_some() {
                return;
            }
            let rest = set_minus(w, i_set);
            match curve_of(&rest) {
                Some(c) => {
                    acc = if size % 2 == 1 { acc.sub(&c) } else { acc.add(&c) };
                }
                None => err = Some(Error::MissingSubset(rest)),
            }
        });
    }
    if let Some(e) = err {
        return Err(e);
    }
    Ok(if removed.len() % 2 == 0 { acc.negate() } else { acc })
}

/// Telescopes [`euler_ie_step`] from the size-`k` members of an
/// Euler-curve invariant down to the curve of every ground-set pair.
/// The entry keys must cover all pairs (every pair lies in some size-`k`
/// member) and contain the closure sizes `k−m−1 ‥ k−1` of each member;
/// violations are reported through the cover report. A `k = 2` input is
/// already at pair level and passes through restricted to its pair
/// entries (closure completion may have added singletons).
pub fn euler_reconstruct_pairs<F: Scalar>(
    inv: &DistributedInvariant<F>,
) -> Result<DistributedInvariant<F>> {
    if inv.kind().is_persistence() {
        return Err(Error::Domain(
            "euler_reconstruct_pairs needs an Euler-curve invariant (kind re or ce)".into(),
        ));
    }
    if inv.is_empty() {
        return Err(Error::Domain("euler_reconstruct_pairs needs a nonempty invariant".into()));
    }
    let m = inv.skeleton_dim();
    let k = inv.entries().keys().map(Vec::len).max().expect("nonempty");
    if k < 2 {
        return Err(Error::Domain(
            "euler_reconstruct_pairs needs members of size at least 2".into(),
        ));
    }
    if k == 2 {
        let pair_entries: BTreeMap<Vec<u32>, InvariantValue<F>> = inv
            .entries()
            .iter()
            .filter(|(key, _)| key.len() == 2)
            .map(|(key, value)| (key.clone(), value.clone()))
            .collect();
        return DistributedInvariant::from_entries(inv.kind(), m, pair_entries);
    }
    let n = inv.inferred_ground_size();
    let collection = SubsetCollection::new(n, inv.entries().keys().cloned().collect())?;
    let report = check_cover_closure(&collection, n, k, m, 2);
    if !report.ok() {
        return Err(Error::CoverClosure(Box::new(report)));
    }

    let mut cache: BTreeMap<Vec<u32>, EulerCurve<F>> = BTreeMap::new();
    for (key, value) in inv.entries() {
        let curve = value
            .as_curve()
            .ok_or_else(|| Error::Domain("Euler-kind invariant holds a non-curve entry".into()))?;
        cache.insert(key.clone(), curve.clone());
    }

    // Dynamic program per size-k member: at level c the curve of every
    // c-subset T is solved inside the window T ∪ (lowest m+2 points of
    // member ∖ T). Windows and their sub-curves have size > c, so they
    // are closure entries when large (≥ k−m−1) and otherwise were
    // produced at an earlier level of the same member.
    let members: Vec<Vec<u32>> =
        collection.subsets().iter().filter(|s| s.len() == k).cloned().collect();
    let hi = k.saturating_sub(m + 2);
    for member in &members {
        for size in (2..=hi).rev() {
            let mut err: Option<Error> = None;
            for_each_subset(member, size, &mut |t: &[u32]| {
                if err.is_some() || cache.contains_key(t) {
                    return;
                }
                let rest = set_minus(member, t);
                let removed = rest[..m + 2].to_vec();
                let window = sorted_union(t, &removed);
                let Some(chi_w) = cache.get(&window).cloned() else {
                    err = Some(Error::MissingSubset(window));
                    return;
                };
                match euler_ie_step(&window, &chi_w, &removed, |s| cache.get(s).cloned()) {
                    Ok(curve) => {
                        cache.insert(t.to_vec(), curve);
                    }
                    Err(e) => err = Some(e),
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
        }
    }

    let pair_entries: BTreeMap<Vec<u32>, InvariantValue<F>> = cache
        .into_iter()
        .filter(|(key, _)| key.len() == 2)
        .map(|(key, curve)| (key, InvariantValue::Curve(curve)))
        .collect();
    DistributedInvariant::from_entries(inv.kind(), m, pair_entries)
}

/// Inclusion–exclusion for 1-skeletons when the union of `Y₁` and `Y₂`
/// misses exactly one edge of the window's complex: `χ(Y₁ ∩ Y₂) =
/// χ(Y₁) + χ(Y₂) − χ(W) − 1_{[r,∞)}`, where `r` is the length of the
/// edge between the two points outside the intersection. A non-finite
/// `r` means the edge never appears, so no correction is applied.
pub fn euler_sparse_step<F: Scalar>(
    chi_w: &EulerCurve<F>,
    chi_y1: &EulerCurve<F>,
    chi_y2: &EulerCurve<F>,
    edge_length: F,
) -> EulerCurve<F> {
    let base = chi_y1.add(chi_y2).sub(chi_w);
    if edge_length.is_finite() {
        base.sub(&EulerCurve::step(edge_length, 1).expect("finite step time"))
    } else {
        base
    }
}

/// Reads pairwise distances off a pair-level invariant. A pair's Euler
/// curve holds its two vertices and then drops to value 1 at the edge
/// length; a pair's diagram shows the same length as its single finite
/// degree-0 death (no finite point means the points coincide).
pub fn distances_from_pair_curves<F: Scalar>(
    pairs: &DistributedInvariant<F>,
) -> Result<DistanceMatrix<F>> {
    let n = pairs.inferred_ground_size();
    if n < 2 {
        return Err(Error::Domain(
            "distances_from_pair_curves needs at least two labels".into(),
        ));
    }
    for key in pairs.entries().keys() {
        if key.len() != 2 {
            return Err(Error::MalformedPair(key.clone(), "entry is not a pair".into()));
        }
    }
    let mut data = vec![F::zero(); n * n];
    for i in 0..n as u32 {
        for j in (i + 1)..n as u32 {
            let key = vec![i, j];
            let value =
                pairs.get(&key).ok_or_else(|| Error::MissingSubset(key.clone()))?;
            let d = pair_distance_value(&key, value)?;
            data[i as usize * n + j as usize] = d;
            data[j as usize * n + i as usize] = d;
        }
    }
    Ok(DistanceMatrix::from_raw(n, data))
}

fn pair_distance_value<F: Scalar>(key: &[u32], value: &InvariantValue<F>) -> Result<F> {
    match value {
        InvariantValue::Curve(curve) => match curve.breakpoints() {
            [(_, 2), (t, 1)] => Ok(*t),
            [(t, 1)] => Ok(*t),
            other => Err(Error::MalformedPair(
                key.to_vec(),
                format!("pair curve has {} breakpoints where 2 → 1 was expected", other.len()),
            )),
        },
        InvariantValue::Diagram(diagram) => {
            let finite: Vec<_> =
                diagram.points(0).iter().filter(|p| !p.is_essential()).collect();
            match finite.as_slice() {
                [] => Ok(F::zero()),
                [p] => Ok(p.death),
                _ => Err(Error::MalformedPair(
                    key.to_vec(),
                    format!("pair diagram has {} finite degree-0 points", finite.len()),
                )),
            }
        }
    }
}

/// `S(k,m) = C(k,2) + C(k,3) + ⋯ + C(k,m+1)`, the count of subsets a
/// point participates in across the reconstruction cascade.
pub fn s_km(k: usize, m: usize) -> Result<u128> {
    if m == 0 || m >= k {
        return Err(Error::Domain(format!("s_km needs 0 < m < k, got k={k}, m={m}")));
    }
    Ok((2..=m + 1).fold(0u128, |acc, j| acc.saturating_add(binomial(k, j))))
}

/// Which persistence invariant a stability bound refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    RipsPersistence,
    CechPersistence,
}

impl Flavor {
    pub fn code(self) -> &'static str {
        match self {
            Flavor::RipsPersistence => "rp",
            Flavor::CechPersistence => "cp",
        }
    }

    pub fn from_code(code: &str) -> Result<Self> {
        match code.to_ascii_lowercase().as_str() {
            "rp" => Ok(Flavor::RipsPersistence),
            "cp" => Ok(Flavor::CechPersistence),
            other => Err(Error::Domain(format!("unknown flavor '{other}' (expected rp or cp)"))),
        }
    }

    /// The flavor of a persistence invariant kind; Euler kinds have no
    /// associated persistence bound.
    pub fn from_kind(kind: InvariantKind) -> Option<Self> {
        match kind {
            InvariantKind::RipsPersistence => Some(Flavor::RipsPersistence),
            InvariantKind::CechPersistence => Some(Flavor::CechPersistence),
            _ => None,
        }
    }
}

/// A quasi-isometry bound together with the inputs that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport<F> {
    pub flavor: Flavor,
    pub k: usize,
    pub m: usize,
    pub epsilon: F,
    pub bound: F,
    pub formula: &'static str,
}

/// Quasi-isometry constant implied by an invariant discrepancy of at
/// most `eps` on all compared subsets: `112 k² ε` for Rips persistence
/// and `224 S(k,m) k^{m+1} ε` for Čech persistence.
pub fn quasi_isometry_bound<F: Scalar>(
    flavor: Flavor,
    k: usize,
    m: usize,
    eps: F,
) -> Result<BoundReport<F>> {
    if m == 0 || m >= k {
        return Err(Error::Domain(format!(
            "quasi_isometry_bound needs k > m > 0, got k={k}, m={m}"
        )));
    }
    if !(eps >= F::zero()) {
        return Err(Error::Domain("quasi_isometry_bound eps must be nonnegative".into()));
    }
    let kf = sc_usize::<F>(k);
    let (bound, formula) = match flavor {
        Flavor::RipsPersistence => (sc::<F>(112.0) * kf * kf * eps, "112 k^2 eps"),
        Flavor::CechPersistence => {
            let s = sc::<F>(s_km(k, m)? as f64);
            (sc::<F>(224.0) * s * kf.powi(m as i32 + 1) * eps, "224 S(k,m) k^(m+1) eps")
        }
    };
    Ok(BoundReport { flavor, k, m, epsilon: eps, bound, formula })
}

/// Gromov–Hausdorff bound when the alignment is only known on a
/// `δ`-dense subsample: the quasi-isometry bound plus `2δ`.
pub fn gh_bound_dense_cover<F: Scalar>(
    flavor: Flavor,
    k: usize,
    m: usize,
    eps: F,
    delta: F,
) -> Result<F> {
    if !(delta >= F::zero()) {
        return Err(Error::Domain("gh_bound_dense_cover delta must be nonnegative".into()));
    }
    Ok(quasi_isometry_bound(flavor, k, m, eps)?.bound + sc::<F>(2.0) * delta)
}

/// Quasi-isometry constant when Čech invariants are compared through
/// Rips computations, with the clouds living in ambient dimensions
/// `d1`, `d2`: `112 k² (ε + √(2d₁/(d₁+1)) + √(2d₂/(d₂+1)))`.
pub fn cech_via_rips_bound<F: Scalar>(k: usize, eps: F, d1: usize, d2: usize) -> Result<F> {
    if k == 0 {
        return Err(Error::Domain("cech_via_rips_bound needs k >= 1".into()));
    }
    if d1 < 1 || d2 < 1 {
        return Err(Error::Domain("cech_via_rips_bound ambient dimensions must be >= 1".into()));
    }
    if !(eps >= F::zero()) {
        return Err(Error::Domain("cech_via_rips_bound eps must be nonnegative".into()));
    }
    let radical = |d: usize| (sc::<F>(2.0) * sc_usize::<F>(d) / sc_usize::<F>(d + 1)).sqrt();
    let kf = sc_usize::<F>(k);
    Ok(sc::<F>(112.0) * kf * kf * (eps + radical(d1) + radical(d2)))
}

/// Quasi-isometry constant for the anchored sparse scheme:
/// `56 (k+1) ε₁ + 28 ε₂`, where `ε₁` bounds the 1-Wasserstein
/// discrepancy of the compared 1-skeleton diagrams and `ε₂` the summed
/// anchor edge discrepancy.
pub fn sparse_quasi_isometry_bound<F: Scalar>(k: usize, eps1: F, eps2: F) -> Result<F> {
    if k <= 1 {
        return Err(Error::Domain(format!("sparse_quasi_isometry_bound needs k > 1, got k={k}")));
    }
    if !(eps1 >= F::zero()) || !(eps2 >= F::zero()) {
        return Err(Error::Domain(
            "sparse_quasi_isometry_bound discrepancies must be nonnegative".into(),
        ));
    }
    Ok(sc::<F>(56.0) * sc_usize::<F>(k + 1) * eps1 + sc::<F>(28.0) * eps2)
}

/// Outcome of certifying a labeled alignment through its distributed
/// invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct CertifyReport<F> {
    pub flavor: Flavor,
    pub k: usize,
    pub m: usize,
    pub eps_obs: F,
    pub bound: F,
    pub distortion: F,
    pub collection_size: usize,
}

/// Certifies the bijection `phi` between equally sized clouds: computes
/// the observed invariant discrepancy `eps_obs = max over members S of
/// d(λ(S), λ(φ(S)))` in bottleneck distance, the quasi-isometry bound
/// it implies, and the directly measured metric distortion for
/// comparison. The collection must pass the cover (`p = 2`) and closure
/// checks for its member size.
pub fn certify_alignment<F: Scalar>(
    x: &PointCloud<F>,
    y: &PointCloud<F>,
    phi: &Bijection,
    collection: &SubsetCollection,
    kind: InvariantKind,
    m: usize,
) -> Result<CertifyReport<F>> {
    let flavor = Flavor::from_kind(kind).ok_or_else(|| {
        Error::Domain("certify_alignment needs a persistence invariant kind (rp or cp)".into())
    })?;
    let n = x.len();
    if y.len() != n {
        return Err(Error::SizeMismatch { expected: n, actual: y.len() });
    }
    if phi.len() != n {
        return Err(Error::SizeMismatch { expected: n, actual: phi.len() });
    }
    if collection.ground_size() != n {
        return Err(Error::SizeMismatch { expected: n, actual: collection.ground_size() });
    }
    let k = collection
        .subsets()
        .iter()
        .map(Vec::len)
        .max()
        .ok_or_else(|| Error::Domain("certify_alignment needs a nonempty collection".into()))?;
    let report = check_cover_closure(collection, n, k, m, 2);
    if !report.ok() {
        return Err(Error::CoverClosure(Box::new(report)));
    }

    let config = MetricConfig::default();
    let eps_obs = observed_discrepancy(x, y, phi, collection, kind, m, &config)?;
    let bound = quasi_isometry_bound(flavor, k, m, eps_obs)?.bound;
    let distortion =
        quasi_isometry_distortion(&pairwise_distances(x), &pairwise_distances(y), phi)?;
    Ok(CertifyReport {
        flavor,
        k,
        m,
        eps_obs,
        bound,
        distortion,
        collection_size: collection.len(),
    })
}

/// Worst per-member distance between the invariant of a subset on `x`
/// and the invariant of its image on `y`.
fn observed_discrepancy<F: Scalar>(
    x: &PointCloud<F>,
    y: &PointCloud<F>,
    phi: &Bijection,
    collection: &SubsetCollection,
    kind: InvariantKind,
    m: usize,
    config: &MetricConfig,
) -> Result<F> {
    collection
        .subsets()
        .par_iter()
        .map(|s| -> Result<F> {
            let a = subset_invariant(x, s, kind, m)?;
            let mut mapped: Vec<u32> =
                s.iter().map(|&i| phi.apply(i as usize) as u32).collect();
            mapped.sort_unstable();
            let b = subset_invariant(y, &mapped, kind, m)?;
            diagram_distance(
                a.as_diagram().expect("persistence kinds yield diagrams"),
                b.as_diagram().expect("persistence kinds yield diagrams"),
                config,
            )
        })
        .try_reduce(|| F::zero(), |a, b| Ok(if b > a { b } else { a }))
}

/// Outcome of the anchored sparse certification.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCertifyReport<F> {
    pub k: usize,
    pub eps1: F,
    pub eps2: F,
    pub bound: F,
    pub distortion: F,
    pub anchor: Vec<u32>,
    pub collection_size: usize,
}

/// Sparse certification against a designated anchor of size `k − 1`:
/// every member must be the anchor or the anchor plus one point, the
/// members must jointly cover the ground set, and 1-skeletons are
/// compared in 1-Wasserstein distance. `eps1` is the worst member
/// discrepancy; `eps2` sums `|‖x_i − x_j‖ − ‖φx_i − φx_j‖|` over
/// ordered anchor pairs. The bound is `56 (k+1) eps1 + 28 eps2`.
pub fn certify_alignment_sparse<F: Scalar>(
    x: &PointCloud<F>,
    y: &PointCloud<F>,
    phi: &Bijection,
    collection: &SubsetCollection,
    anchor: &[u32],
    kind: InvariantKind,
) -> Result<SparseCertifyReport<F>> {
    if !kind.is_persistence() {
        return Err(Error::Domain(
            "certify_alignment_sparse needs a persistence invariant kind (rp or cp)".into(),
        ));
    }
    let n = x.len();
    if y.len() != n {
        return Err(Error::SizeMismatch { expected: n, actual: y.len() });
    }
    if phi.len() != n {
        return Err(Error::SizeMismatch { expected: n, actual: phi.len() });
    }
    if collection.ground_size() != n {
        return Err(Error::SizeMismatch { expected: n, actual: collection.ground_size() });
    }
    if anchor.is_empty()
        || !anchor.windows(2).all(|p| p[0] < p[1])
        || anchor.last().is_some_and(|&a| a as usize >= n)
    {
        return Err(Error::Domain(
            "certify_alignment_sparse anchor must be a sorted nonempty subset of the ground set"
                .into(),
        ));
    }
    let k = anchor.len() + 1;
    let mut covered = vec![false; n];
    for &a in anchor {
        covered[a as usize] = true;
    }
    for s in collection.subsets() {
        let is_anchor = s.as_slice() == anchor;
        let is_extension =
            s.len() == k && anchor.iter().all(|a| s.binary_search(a).is_ok());
        if !is_anchor && !is_extension {
            return Err(Error::Domain(format!(
                "certify_alignment_sparse members must be the anchor or the anchor plus one point; {s:?} is neither"
            )));
        }
        for &i in s {
            covered[i as usize] = true;
        }
    }
    if let Some(i) = covered.iter().position(|&c| !c) {
        return Err(Error::Domain(format!(
            "certify_alignment_sparse members must cover the ground set; point {i} is in no member"
        )));
    }

    let config =
        MetricConfig { flavor: MetricFlavor::Wasserstein { p: 1.0 }, ..MetricConfig::default() };
    let eps1 = observed_discrepancy(x, y, phi, collection, kind, 1, &config)?;
    let dx = pairwise_distances(x);
    let dy = pairwise_distances(y);
    let mut eps2 = F::zero();
    for &a in anchor {
        for &b in anchor {
            eps2 = eps2
                + (dx.get(a as usize, b as usize)
                    - dy.get(phi.apply(a as usize), phi.apply(b as usize)))
                .abs();
        }
    }
    let bound = sparse_quasi_isometry_bound(k, eps1, eps2)?;
    let distortion = quasi_isometry_distortion(&dx, &dy, phi)?;
    Ok(SparseCertifyReport {
        k,
        eps1,
        eps2,
        bound,
        distortion,
        anchor: anchor.to_vec(),
        collection_size: collection.len(),
    })
}

/// `w ∖ drop` for sorted slices.
fn set_minus(w: &[u32], drop: &[u32]) -> Vec<u32> {
    w.iter().copied().filter(|x| drop.binary_search(x).is_err()).collect()
}

/// Merge of two sorted disjoint label lists.
fn sorted_union(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] < b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}
