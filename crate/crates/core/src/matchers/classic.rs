use crate::error::{Error, Result};
use crate::instance::{rank_row, Instance, Matching, Side};

/// Cyclic greedy picking: in `order`, each picker takes its favourite
/// opposite agent (own values, ties by index) that it is not yet matched to
/// and that still has capacity. Stops once a full cycle makes no pick.
pub fn classic_round_robin(instance: &Instance, picking_side: Side, order: &[usize]) -> Result<Matching> {
    let n = instance.size(picking_side);
    let mut seen = vec![false; n];
    for &a in order {
        if a >= n || std::mem::replace(&mut seen[a], true) {
            return Err(Error::BadParameter("order must be a permutation of the picking side".into()));
        }
    }
    if order.len() != n {
        return Err(Error::BadParameter("order must be a permutation of the picking side".into()));
    }
    let other = picking_side.opposite();
    let prefs: Vec<Vec<usize>> = (0..n).map(|a| rank_row(instance.row(picking_side, a))).collect();
    let mut own_left: Vec<usize> = instance.caps(picking_side).to_vec();
    let mut other_left: Vec<usize> = instance.caps(other).to_vec();
    let mut m = Matching::for_instance(instance);
    loop {
        let mut picked = false;
        for &a in order {
            if own_left[a] == 0 {
                continue;
            }
            let choice = prefs[a]
                .iter()
                .copied()
                .find(|&o| other_left[o] > 0 && !m.has(picking_side, a, o));
            if let Some(o) = choice {
                match picking_side {
                    Side::Left => m.set(a, o, true),
                    Side::Right => m.set(o, a, true),
                }
                own_left[a] -= 1;
                other_left[o] -= 1;
                picked = true;
            }
        }
        if !picked {
            return Ok(m);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matchers::{restricted_rr_coprime, round_robin_ordering};

    fn decreasing5() -> Instance {
        let row: Vec<u64> = (0..5).rev().collect();
        Instance::identical(5, 2, row.clone(), row).unwrap()
    }

    #[test]
    fn natural_order_baseline() {
        let m = classic_round_robin(&decreasing5(), Side::Left, &[0, 1, 2, 3, 4]).unwrap();
        assert_eq!(m.bundle_right(0), vec![0, 1]);
        assert_eq!(m.bundle_right(1), vec![2, 3]);
    }

    #[test]
    fn engineered_order_matches_coprime_rr() {
        let r = round_robin_ordering(5, 3, 2).unwrap();
        let m = classic_round_robin(&decreasing5(), Side::Left, &r.order).unwrap();
        assert_eq!(m, restricted_rr_coprime(5, 2, 3, 2).unwrap());
    }

    #[test]
    fn zero_caps_give_empty() {
        let inst = Instance::identical(3, 0, vec![1, 2, 3], vec![3, 2, 1]).unwrap();
        let m = classic_round_robin(&inst, Side::Right, &[2, 0, 1]).unwrap();
        assert_eq!(m.edge_count(), 0);
    }

    #[test]
    fn rejects_non_permutation() {
        assert!(classic_round_robin(&decreasing5(), Side::Left, &[0, 0, 1, 2, 3]).is_err());
    }
}
