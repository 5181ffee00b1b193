//! Small counting and enumeration helpers shared by the builders and checkers.

/// `C(n, r)`, saturating at `u64::MAX`.
pub fn binomial(n: usize, r: usize) -> u64 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Index of the unordered pair `{u, v}` in the lexicographic list of all
/// pairs of `0..n`.
#[inline]
pub fn pair_index(n: usize, u: usize, v: usize) -> usize {
    debug_assert!(u != v && u < n && v < n);
    let (u, v) = if u < v { (u, v) } else { (v, u) };
    u * n - u * (u + 1) / 2 + (v - u - 1)
}

/// All pairs `(u, v)`, `u < v < n`, in [`pair_index`] order.
pub fn all_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |u| (u + 1..n).map(move |v| (u, v)))
}

/// Calls `f` on every `r`-subset of `items`, in lexicographic order of positions.
pub fn for_each_combination(items: &[usize], r: usize, mut f: impl FnMut(&[usize])) {
    if r > items.len() {
        return;
    }
    let mut idx: Vec<usize> = (0..r).collect();
    let mut buf = vec![0; r];
    loop {
        for (b, &i) in buf.iter_mut().zip(&idx) {
            *b = items[i];
        }
        f(&buf);
        // Advance the rightmost index that still has room.
        let mut i = r;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + items.len() - r {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..r {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(10, 0), 1);
        assert_eq!(binomial(52, 5), 2_598_960);
        assert_eq!(binomial(1000, 500), u64::MAX);
    }

    #[test]
    fn pair_indices_are_dense() {
        for n in 2..7 {
            for (i, (u, v)) in all_pairs(n).enumerate() {
                assert_eq!(pair_index(n, u, v), i);
                assert_eq!(pair_index(n, v, u), i);
            }
        }
    }

    #[test]
    fn combinations_enumerated() {
        let mut seen = Vec::new();
        for_each_combination(&[3, 5, 7, 9], 2, |c| seen.push(c.to_vec()));
        assert_eq!(seen, vec![vec![3, 5], vec![3, 7], vec![3, 9], vec![5, 7], vec![5, 9], vec![7, 9]]);
        let mut count = 0;
        for_each_combination(&[0, 1, 2], 0, |_| count += 1);
        assert_eq!(count, 1);
        for_each_combination(&[0, 1], 3, |_| panic!("no 3-subsets of a pair"));
        let mut all = 0;
        for_each_combination(&(0..9).collect::<Vec<_>>(), 4, |_| all += 1);
        assert_eq!(all, 126);
    }
}
