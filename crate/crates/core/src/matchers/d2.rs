use crate::error::{Error, Result};
use crate::instance::{derive_side_ordinal, Instance, Matching, Side};
use crate::matchers::restricted::from_rank_space;

/// Symmetric cap-2 matching in rank space: left `i` and right `i` both get
/// `{i, n - 1 - i}`, except that for odd `n` the three middle agents
/// `f - 1, f, f + 1` (with `f = n / 2`) get `{f-1, f}`, `{f-1, f+1}`, `{f, f+1}`.
pub fn d2_dmms_def1(n: usize) -> Result<Matching> {
    if n < 2 {
        return Err(Error::BadParameter("needs n >= 2".into()));
    }
    let mut bundles: Vec<Vec<usize>> = (0..n).map(|i| vec![i, n - 1 - i]).collect();
    if n % 2 == 1 {
        let f = n / 2;
        bundles[f - 1] = vec![f - 1, f];
        bundles[f] = vec![f - 1, f + 1];
        bundles[f + 1] = vec![f, f + 1];
    }
    Matching::from_left_bundles(n, &bundles)
}

/// [`d2_dmms_def1`] mapped onto an instance whose sides each share one ranking.
pub fn d2_dmms_def1_for(instance: &Instance) -> Result<Matching> {
    let n = instance.n_left();
    if instance.n_right() != n
        || instance.uniform_cap(Side::Left) != Some(2)
        || instance.uniform_cap(Side::Right) != Some(2)
    {
        return Err(Error::BadParameter("needs an n x n market with every cap equal to 2".into()));
    }
    let left = derive_side_ordinal(instance, Side::Left);
    let right = derive_side_ordinal(instance, Side::Right);
    if !left.is_identical() || !right.is_identical() {
        return Err(Error::BadParameter("ordinal preferences differ within a side".into()));
    }
    Ok(from_rank_space(&d2_dmms_def1(n)?, &right.rankings[0], &left.rankings[0]))
}
