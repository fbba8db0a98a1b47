//! The two-sided market: agents, degree caps, additive valuations, and matchings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Left, Side::Right];

    pub fn opposite(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

impl std::str::FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Side> {
        match s {
            "left" | "l" => Ok(Side::Left),
            "right" | "r" => Ok(Side::Right),
            other => Err(Error::BadParameter(format!("unknown side {other:?}"))),
        }
    }
}

/// Unchecked instance data, as read from a file or built by hand.
///
/// Signed integers so that negative entries can be reported instead of
/// wrapping.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawInstance {
    pub n_left: i64,
    pub n_right: i64,
    pub deg_left: Vec<i64>,
    pub deg_right: Vec<i64>,
    pub val_left: Vec<Vec<i64>>,
    pub val_right: Vec<Vec<i64>>,
}

/// A validated market. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Instance {
    n_left: usize,
    n_right: usize,
    deg_left: Vec<usize>,
    deg_right: Vec<usize>,
    val_left: Vec<Vec<u64>>,
    val_right: Vec<Vec<u64>>,
}

fn count(path: &str, v: i64) -> Result<usize> {
    if v < 0 {
        return Err(Error::NegativeValue {
            path: path.to_string(),
            value: v,
        });
    }
    Ok(v as usize)
}

fn check_len(path: &str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            path: path.to_string(),
            expected,
            found,
        });
    }
    Ok(())
}

fn degrees(name: &str, raw: &[i64], len: usize, other: usize) -> Result<Vec<usize>> {
    check_len(name, len, raw.len())?;
    raw.iter()
        .enumerate()
        .map(|(k, &d)| {
            let path = format!("{name}[{k}]");
            let d = count(&path, d)?;
            if d > other {
                return Err(Error::DegreeExceedsSide {
                    path,
                    cap: d,
                    side_size: other,
                });
            }
            Ok(d)
        })
        .collect()
}

fn values(name: &str, raw: &[Vec<i64>], rows: usize, cols: usize) -> Result<Vec<Vec<u64>>> {
    check_len(name, rows, raw.len())?;
    raw.iter()
        .enumerate()
        .map(|(r, row)| {
            check_len(&format!("{name}[{r}]"), cols, row.len())?;
            row.iter()
                .enumerate()
                .map(|(c, &v)| {
                    if v < 0 {
                        Err(Error::NegativeValue {
                            path: format!("{name}[{r}][{c}]"),
                            value: v,
                        })
                    } else {
                        Ok(v as u64)
                    }
                })
                .collect()
        })
        .collect()
}

/// Checks every instance invariant and returns the validated instance, or the
/// first violation found (sizes, then degrees, then valuations).
pub fn validate_instance(raw: &RawInstance) -> Result<Instance> {
    let n_left = count("n_left", raw.n_left)?;
    let n_right = count("n_right", raw.n_right)?;
    if n_left == 0 || n_right == 0 {
        return Err(Error::BadParameter("both sides need at least one agent".into()));
    }
    let deg_left = degrees("deg_left", &raw.deg_left, n_left, n_right)?;
    let deg_right = degrees("deg_right", &raw.deg_right, n_right, n_left)?;
    let val_left = values("val_left", &raw.val_left, n_left, n_right)?;
    let val_right = values("val_right", &raw.val_right, n_right, n_left)?;
    Ok(Instance {
        n_left,
        n_right,
        deg_left,
        deg_right,
        val_left,
        val_right,
    })
}

impl Instance {
    pub fn new(
        deg_left: Vec<usize>,
        deg_right: Vec<usize>,
        val_left: Vec<Vec<u64>>,
        val_right: Vec<Vec<u64>>,
    ) -> Result<Instance> {
        validate_instance(&RawInstance {
            n_left: deg_left.len() as i64,
            n_right: deg_right.len() as i64,
            deg_left: deg_left.iter().map(|&d| d as i64).collect(),
            deg_right: deg_right.iter().map(|&d| d as i64).collect(),
            val_left: to_signed(&val_left),
            val_right: to_signed(&val_right),
        })
    }

    /// Equal-sized sides, one common cap `d`, and one valuation row shared by
    /// every agent of each side.
    pub fn identical(n: usize, d: usize, left_row: Vec<u64>, right_row: Vec<u64>) -> Result<Instance> {
        Instance::new(
            vec![d; n],
            vec![d; n],
            vec![left_row; n],
            vec![right_row; n],
        )
    }

    pub fn to_raw(&self) -> RawInstance {
        RawInstance {
            n_left: self.n_left as i64,
            n_right: self.n_right as i64,
            deg_left: self.deg_left.iter().map(|&d| d as i64).collect(),
            deg_right: self.deg_right.iter().map(|&d| d as i64).collect(),
            val_left: to_signed(&self.val_left),
            val_right: to_signed(&self.val_right),
        }
    }

    pub fn n_left(&self) -> usize {
        self.n_left
    }

    pub fn n_right(&self) -> usize {
        self.n_right
    }

    pub fn size(&self, side: Side) -> usize {
        match side {
            Side::Left => self.n_left,
            Side::Right => self.n_right,
        }
    }

    pub fn caps(&self, side: Side) -> &[usize] {
        match side {
            Side::Left => &self.deg_left,
            Side::Right => &self.deg_right,
        }
    }

    pub fn cap(&self, side: Side, agent: usize) -> usize {
        self.caps(side)[agent]
    }

    /// The common cap of a side, if all its agents share one.
    pub fn uniform_cap(&self, side: Side) -> Option<usize> {
        let caps = self.caps(side);
        caps.iter().all(|&c| c == caps[0]).then_some(caps[0])
    }

    pub fn total_cap(&self, side: Side) -> usize {
        self.caps(side).iter().sum()
    }

    /// Number of edges in a complete matching.
    pub fn complete_size(&self) -> usize {
        self.total_cap(Side::Left).min(self.total_cap(Side::Right))
    }

    pub fn valuations(&self, side: Side) -> &[Vec<u64>] {
        match side {
            Side::Left => &self.val_left,
            Side::Right => &self.val_right,
        }
    }

    /// Valuation row of `agent` over the opposite side.
    pub fn row(&self, side: Side, agent: usize) -> &[u64] {
        &self.valuations(side)[agent]
    }

    pub fn value(&self, side: Side, agent: usize, other: usize) -> u64 {
        self.valuations(side)[agent][other]
    }

    pub fn bundle_value(&self, side: Side, agent: usize, bundle: &[usize]) -> u64 {
        let row = self.row(side, agent);
        bundle.iter().map(|&o| row[o]).sum()
    }

    /// Utility `agent` receives from its own bundle in `m`.
    pub fn utility(&self, side: Side, agent: usize, m: &Matching) -> u64 {
        self.bundle_value(side, agent, &m.bundle(side, agent))
    }

    pub fn utilities(&self, side: Side, m: &Matching) -> Vec<u64> {
        (0..self.size(side)).map(|a| self.utility(side, a, m)).collect()
    }

    /// True when every agent of `side` has the same valuation row.
    pub fn has_identical_values(&self, side: Side) -> bool {
        let rows = self.valuations(side);
        rows.iter().all(|r| r == &rows[0])
    }

    /// The same market seen from the other side.
    pub fn transposed(&self) -> Instance {
        Instance {
            n_left: self.n_right,
            n_right: self.n_left,
            deg_left: self.deg_right.clone(),
            deg_right: self.deg_left.clone(),
            val_left: self.val_right.clone(),
            val_right: self.val_left.clone(),
        }
    }
}

fn to_signed(rows: &[Vec<u64>]) -> Vec<Vec<i64>> {
    rows.iter()
        .map(|r| r.iter().map(|&v| v as i64).collect())
        .collect()
}

/// Per-agent linear orders over the opposite side, best first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferenceProfile {
    pub side: Side,
    pub rankings: Vec<Vec<usize>>,
}

impl PreferenceProfile {
    pub fn ranking(&self, agent: usize) -> &[usize] {
        &self.rankings[agent]
    }

    pub fn is_identical(&self) -> bool {
        self.rankings.iter().all(|r| r == &self.rankings[0])
    }
}

/// Descending valuation, ties broken by ascending index.
pub fn rank_row(row: &[u64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[b].cmp(&row[a]).then(a.cmp(&b)));
    order
}

pub fn derive_side_ordinal(instance: &Instance, side: Side) -> PreferenceProfile {
    PreferenceProfile {
        side,
        rankings: instance.valuations(side).iter().map(|r| rank_row(r)).collect(),
    }
}

/// Ordinal preferences consistent with the valuations, for both sides.
pub fn derive_ordinal(instance: &Instance) -> (PreferenceProfile, PreferenceProfile) {
    (
        derive_side_ordinal(instance, Side::Left),
        derive_side_ordinal(instance, Side::Right),
    )
}

/// Binary `n_left x n_right` incidence matrix. Bundles are derived from the
/// matrix on demand, so the two views cannot disagree.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Matching {
    n_left: usize,
    n_right: usize,
    cells: Vec<bool>,
}

impl Matching {
    pub fn empty(n_left: usize, n_right: usize) -> Matching {
        Matching {
            n_left,
            n_right,
            cells: vec![false; n_left * n_right],
        }
    }

    pub fn for_instance(instance: &Instance) -> Matching {
        Matching::empty(instance.n_left(), instance.n_right())
    }

    pub fn from_edges(n_left: usize, n_right: usize, edges: &[(usize, usize)]) -> Result<Matching> {
        let mut m = Matching::empty(n_left, n_right);
        for &(i, j) in edges {
            if i >= n_left || j >= n_right {
                return Err(Error::BadParameter(format!(
                    "edge ({i}, {j}) outside a {n_left}x{n_right} market"
                )));
            }
            m.set(i, j, true);
        }
        Ok(m)
    }

    /// Builds a matching from the left bundles.
    pub fn from_left_bundles(n_right: usize, bundles: &[Vec<usize>]) -> Result<Matching> {
        let edges: Vec<_> = bundles
            .iter()
            .enumerate()
            .flat_map(|(i, b)| b.iter().map(move |&j| (i, j)))
            .collect();
        Matching::from_edges(bundles.len(), n_right, &edges)
    }

    /// Builds a matching from the right bundles.
    pub fn from_right_bundles(n_left: usize, bundles: &[Vec<usize>]) -> Result<Matching> {
        let edges: Vec<_> = bundles
            .iter()
            .enumerate()
            .flat_map(|(j, b)| b.iter().map(move |&i| (i, j)))
            .collect();
        Matching::from_edges(n_left, bundles.len(), &edges)
    }

    pub fn n_left(&self) -> usize {
        self.n_left
    }

    pub fn n_right(&self) -> usize {
        self.n_right
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.cells[i * self.n_right + j]
    }

    pub fn set(&mut self, i: usize, j: usize, on: bool) {
        self.cells[i * self.n_right + j] = on;
    }

    pub fn bundle_left(&self, i: usize) -> Vec<usize> {
        (0..self.n_right).filter(|&j| self.contains(i, j)).collect()
    }

    pub fn bundle_right(&self, j: usize) -> Vec<usize> {
        (0..self.n_left).filter(|&i| self.contains(i, j)).collect()
    }

    pub fn bundle(&self, side: Side, agent: usize) -> Vec<usize> {
        match side {
            Side::Left => self.bundle_left(agent),
            Side::Right => self.bundle_right(agent),
        }
    }

    /// Whether `agent` on `side` is matched to `other` on the opposite side.
    pub fn has(&self, side: Side, agent: usize, other: usize) -> bool {
        match side {
            Side::Left => self.contains(agent, other),
            Side::Right => self.contains(other, agent),
        }
    }

    pub fn degree(&self, side: Side, agent: usize) -> usize {
        match side {
            Side::Left => (0..self.n_right).filter(|&j| self.contains(agent, j)).count(),
            Side::Right => (0..self.n_left).filter(|&i| self.contains(i, agent)).count(),
        }
    }

    pub fn edge_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// Edges in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.n_left)
            .flat_map(|i| (0..self.n_right).map(move |j| (i, j)))
            .filter(|&(i, j)| self.contains(i, j))
            .collect()
    }

    pub fn transposed(&self) -> Matching {
        let mut t = Matching::empty(self.n_right, self.n_left);
        for (i, j) in self.edges() {
            t.set(j, i, true);
        }
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchingStatus {
    pub valid: bool,
    pub complete: bool,
}

/// Validity (caps respected) and completeness (edge count equals the smaller
/// total capacity). An invalid matching is never reported complete.
pub fn matching_status(instance: &Instance, m: &Matching) -> Result<MatchingStatus> {
    check_len("matching.n_left", instance.n_left(), m.n_left())?;
    check_len("matching.n_right", instance.n_right(), m.n_right())?;
    let valid = Side::BOTH.iter().all(|&side| {
        (0..instance.size(side)).all(|a| m.degree(side, a) <= instance.cap(side, a))
    });
    let complete = valid && m.edge_count() == instance.complete_size();
    Ok(MatchingStatus { valid, complete })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw5() -> RawInstance {
        RawInstance {
            n_left: 5,
            n_right: 5,
            deg_left: vec![2; 5],
            deg_right: vec![2; 5],
            val_left: vec![vec![4, 3, 2, 1, 0]; 5],
            val_right: vec![vec![4, 3, 2, 1, 0]; 5],
        }
    }

    #[test]
    fn accepts_well_formed() {
        let inst = validate_instance(&raw5()).unwrap();
        assert_eq!(inst.n_left(), 5);
        assert_eq!(inst.uniform_cap(Side::Right), Some(2));
        assert_eq!(inst.complete_size(), 10);
    }

    #[test]
    fn rejects_cap_above_side() {
        let mut raw = raw5();
        raw.deg_left[0] = 6;
        assert!(matches!(
            validate_instance(&raw),
            Err(Error::DegreeExceedsSide { cap: 6, side_size: 5, .. })
        ));
    }

    #[test]
    fn rejects_short_row() {
        let mut raw = raw5();
        raw.val_left[2] = vec![1, 2, 3, 4];
        match validate_instance(&raw) {
            Err(Error::DimensionMismatch { path, expected, found }) => {
                assert_eq!(path, "val_left[2]");
                assert_eq!((expected, found), (5, 4));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_negative_entries() {
        let mut raw = raw5();
        raw.val_right[1][3] = -1;
        assert!(matches!(validate_instance(&raw), Err(Error::NegativeValue { value: -1, .. })));
        let mut raw = raw5();
        raw.deg_right[0] = -2;
        assert!(matches!(validate_instance(&raw), Err(Error::NegativeValue { .. })));
    }

    #[test]
    fn ordinal_examples() {
        assert_eq!(rank_row(&[6, 5, 4, 3, 2, 1, 0]), vec![0, 1, 2, 3, 4, 5, 6]);
        assert_eq!(rank_row(&[7, 7, 7, 7]), vec![0, 1, 2, 3]);
        assert_eq!(rank_row(&[1, 3, 3, 0]), vec![1, 2, 0, 3]);
    }

    #[test]
    fn status_of_empty_and_overfull() {
        let inst = validate_instance(&raw5()).unwrap();
        let empty = Matching::for_instance(&inst);
        assert_eq!(
            matching_status(&inst, &empty).unwrap(),
            MatchingStatus { valid: true, complete: false }
        );
        let over = Matching::from_edges(5, 5, &[(0, 0), (0, 1), (0, 2)]).unwrap();
        assert!(!matching_status(&inst, &over).unwrap().valid);
    }

    #[test]
    fn status_rejects_wrong_shape() {
        let inst = validate_instance(&raw5()).unwrap();
        assert!(matching_status(&inst, &Matching::empty(4, 5)).is_err());
    }

    #[test]
    fn bundle_views_follow_matrix() {
        let mut m = Matching::empty(3, 4);
        m.set(1, 2, true);
        m.set(1, 3, true);
        m.set(0, 2, true);
        assert_eq!(m.bundle_left(1), vec![2, 3]);
        assert_eq!(m.bundle_right(2), vec![0, 1]);
        m.set(1, 2, false);
        assert_eq!(m.bundle_right(2), vec![0]);
        assert_eq!(m.transposed().bundle_left(3), vec![1]);
    }
}
