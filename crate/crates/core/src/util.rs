//! Small combinatorial helpers shared across modules.

/// Calls `f` on every size-`k` subset of `items`, in lexicographic
/// order of positions. `k = 0` yields the empty subset once.
pub(crate) fn for_each_subset<T: Copy>(items: &[T], k: usize, f: &mut impl FnMut(&[T])) {
    let n = items.len();
    if k > n {
        return;
    }
    let mut buf: Vec<T> = items[..k].to_vec();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&buf);
        if k == 0 {
            return;
        }
        // Advance the rightmost index that still has room.
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] + (k - i) < n {
                break;
            }
        }
        idx[i] += 1;
        for j in (i + 1)..k {
            idx[j] = idx[j - 1] + 1;
        }
        for j in i..k {
            buf[j] = items[idx[j]];
        }
    }
}

/// Binomial coefficient with saturating overflow protection.
pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i + 1) as u128;
    }
    acc
}
