use crate::error::{Error, Result};
use crate::fairness::mms::{weak_mms_partition, ShareOptions};
use crate::instance::{Instance, Matching, Side};

/// Block-to-block matching from best partitions of each side: block `k` of
/// the left partition is matched to every member of block `k` of the right
/// partition.
pub fn weak_mms_matching(instance: &Instance, opts: &ShareOptions) -> Result<Matching> {
    let n = instance.n_left();
    let d = instance.uniform_cap(Side::Left);
    if instance.n_right() != n || d.is_none() || d != instance.uniform_cap(Side::Right) {
        return Err(Error::BadParameter("needs an n x n market with one common cap".into()));
    }
    if !instance.has_identical_values(Side::Left) || !instance.has_identical_values(Side::Right) {
        return Err(Error::BadParameter("valuations differ within a side".into()));
    }
    let d = d.unwrap();
    let mut m = Matching::for_instance(instance);
    if d == 0 {
        return Ok(m);
    }
    let right_blocks = weak_mms_partition(instance.row(Side::Left, 0), d, opts)?.bundles;
    let left_blocks = weak_mms_partition(instance.row(Side::Right, 0), d, opts)?.bundles;
    for (lb, rb) in left_blocks.iter().zip(&right_blocks) {
        for &i in lb {
            for &j in rb {
                m.set(i, j, true);
            }
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::matching_status;

    #[test]
    fn four_by_two() {
        let inst = Instance::identical(4, 2, vec![3, 2, 1, 0], vec![3, 2, 1, 0]).unwrap();
        let m = weak_mms_matching(&inst, &ShareOptions::default()).unwrap();
        assert!(matching_status(&inst, &m).unwrap().valid);
        for side in Side::BOTH {
            assert!(inst.utilities(side, &m).iter().all(|&u| u >= 3));
        }
    }

    #[test]
    fn five_by_two_uses_three_blocks() {
        let row = vec![4, 3, 2, 1, 0];
        let inst = Instance::identical(5, 2, row.clone(), row).unwrap();
        let m = weak_mms_matching(&inst, &ShareOptions::default()).unwrap();
        assert!(matching_status(&inst, &m).unwrap().valid);
        assert!(inst.utilities(Side::Left, &m).iter().all(|&u| u >= 3));
    }
}
