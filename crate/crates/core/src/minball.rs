//! Exact minimal enclosing balls of small point sets.
//!
//! The center of the minimal enclosing ball is the circumcenter (taken
//! inside the affine hull) of its support set, so enumerating every
//! affinely independent subset of at most `d + 1` points and taking the
//! candidate center whose covering radius is smallest is exact. Input
//! sets here are simplex vertex sets, so the enumeration is tiny.

use crate::Scalar;

/// Radius of the minimal ball enclosing all points. Points must be
/// nonempty and share a dimension.
pub(crate) fn min_ball_radius<F: Scalar>(points: &[&[F]]) -> F {
    let v = points.len();
    assert!(v > 0, "minimal enclosing ball of an empty set");
    assert!(v <= 31, "support enumeration limited to 31 points");
    let dim = points[0].len();
    let max_support = dim + 1;
    let mut best = F::infinity();
    for mask in 1u32..(1 << v) {
        if mask.count_ones() as usize > max_support {
            continue;
        }
        let subset: Vec<&[F]> = (0..v).filter(|i| mask >> i & 1 == 1).map(|i| points[i]).collect();
        let Some(center) = circumcenter(&subset) else { continue };
        let mut radius = F::zero();
        for p in points {
            let d = dist(&center, p);
            if d > radius {
                radius = d;
            }
        }
        if radius < best {
            best = radius;
        }
    }
    best
}

fn dist<F: Scalar>(a: &[F], b: &[F]) -> F {
    let mut s = F::zero();
    for (x, y) in a.iter().zip(b) {
        let d = *x - *y;
        s = s + d * d;
    }
    s.sqrt()
}

/// Circumcenter of affinely independent points within their affine
/// hull: the unique point of the hull equidistant from all of them.
/// Returns `None` when the points are (numerically) affinely dependent.
fn circumcenter<F: Scalar>(pts: &[&[F]]) -> Option<Vec<F>> {
    let j = pts.len() - 1;
    let dim = pts[0].len();
    if j == 0 {
        return Some(pts[0].to_vec());
    }
    // Solve  G lambda = b,  G[i][l] = 2 (p_i - p_0) . (p_l - p_0),
    // b[i] = |p_i - p_0|^2, then  c = p_0 + sum lambda_i (p_i - p_0).
    let diff = |i: usize, c: usize| pts[i + 1][c] - pts[0][c];
    let mut g = vec![F::zero(); j * j];
    let mut b = vec![F::zero(); j];
    for i in 0..j {
        for l in 0..j {
            let mut s = F::zero();
            for c in 0..dim {
                s = s + diff(i, c) * diff(l, c);
            }
            g[i * j + l] = s + s;
        }
        let mut s = F::zero();
        for c in 0..dim {
            s = s + diff(i, c) * diff(i, c);
        }
        b[i] = s;
    }
    let lambda = solve(&mut g, &mut b, j)?;
    let mut center = pts[0].to_vec();
    for i in 0..j {
        for c in 0..dim {
            center[c] = center[c] + lambda[i] * diff(i, c);
        }
    }
    Some(center)
}

/// Gaussian elimination with partial pivoting; `None` on a singular
/// system (relative pivot below 1e-12).
fn solve<F: Scalar>(a: &mut [F], b: &mut [F], n: usize) -> Option<Vec<F>> {
    let scale = a.iter().fold(F::zero(), |m, &v| if v.abs() > m { v.abs() } else { m });
    if scale == F::zero() {
        return None;
    }
    let tol = scale * crate::sc(1e-12);
    for col in 0..n {
        let mut piv = col;
        for r in (col + 1)..n {
            if a[r * n + col].abs() > a[piv * n + col].abs() {
                piv = r;
            }
        }
        if a[piv * n + col].abs() <= tol {
            return None;
        }
        if piv != col {
            for c in 0..n {
                a.swap(piv * n + c, col * n + c);
            }
            b.swap(piv, col);
        }
        for r in (col + 1)..n {
            let f = a[r * n + col] / a[col * n + col];
            for c in col..n {
                a[r * n + c] = a[r * n + c] - f * a[col * n + c];
            }
            b[r] = b[r] - f * b[col];
        }
    }
    let mut x = vec![F::zero(); n];
    for r in (0..n).rev() {
        let mut s = b[r];
        for c in (r + 1)..n {
            s = s - a[r * n + c] * x[c];
        }
        x[r] = s / a[r * n + r];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn single_point_has_zero_radius() {
        assert_eq!(min_ball_radius::<f64>(&[&[1.0, 2.0]]), 0.0);
    }

    #[test]
    fn pair_gives_half_distance() {
        let r = min_ball_radius::<f64>(&[&[0.0, 0.0], &[3.0, 4.0]]);
        assert!((r - 2.5).abs() < 1e-15);
    }

    #[test]
    fn coincident_points_give_zero() {
        assert_eq!(min_ball_radius::<f64>(&[&[1.0, 1.0], &[1.0, 1.0], &[1.0, 1.0]]), 0.0);
    }

    #[test]
    fn equilateral_triangle_circumradius() {
        // Side s: radius s / sqrt(3).
        let s = 2.0;
        let h = s * 3f64.sqrt() / 2.0;
        let r = min_ball_radius::<f64>(&[&[0.0, 0.0], &[s, 0.0], &[s / 2.0, h]]);
        assert!((r - s / 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn obtuse_triangle_is_diametral_on_longest_edge() {
        let r = min_ball_radius::<f64>(&[&[0.0, 0.0], &[4.0, 0.0], &[3.0, 1.0]]);
        assert_eq!(r, 2.0);
    }

    #[test]
    fn unit_square_corners() {
        let r = min_ball_radius::<f64>(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        assert!((r - 0.5f64 * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn random_sets_are_enclosed_and_tight() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..200 {
            let dim = rng.random_range(1..4usize);
            let k = rng.random_range(1..6usize);
            let pts: Vec<Vec<f64>> =
                (0..k).map(|_| (0..dim).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()).collect();
            let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
            let r = min_ball_radius(&refs);
            // At least half the largest pairwise distance, and every
            // point must fit inside some witness ball of radius r.
            let mut maxd: f64 = 0.0;
            for i in 0..k {
                for j in (i + 1)..k {
                    maxd = maxd.max(dist(&pts[i], &pts[j]));
                }
            }
            assert!(r >= maxd / 2.0 - 1e-12);
            assert!(r <= maxd + 1e-12);
        }
    }
}
