use crate::error::{Error, LowerBound, Result};
use crate::fairness::report::dmms_alpha;
use crate::instance::{Instance, Matching, Side};
use crate::ratio::{floor_scaled, Ratio};
use crate::search::engine::find_matching_with;
use crate::search::spec::{SearchOptions, SearchSpec, SearchStatus};

/// Largest `alpha` for which some complete matching gives every agent at
/// least `alpha` times its share, with a matching attaining it.
///
/// Each round demands a strict improvement for every agent with a positive
/// share; the last feasible round is optimal. The budgets in `base` cover all
/// rounds together.
pub fn max_dmms_alpha(
    instance: &Instance,
    base: &SearchSpec,
    mms_left: &[u64],
    mms_right: &[u64],
    opts: &SearchOptions,
) -> Result<(Ratio, Matching)> {
    if mms_left.len() != instance.n_left() || mms_right.len() != instance.n_right() {
        return Err(Error::BadParameter("one share per agent is required".into()));
    }
    let start = std::time::Instant::now();
    let mut spent = 0u64;
    let mut best: Option<(Ratio, Matching)> = None;
    let any_zero = mms_left.iter().chain(mms_right).any(|&s| s == 0);
    loop {
        let mut spec = base.clone();
        spec.require_complete = true;
        spec.node_budget = base.node_budget.saturating_sub(spent).max(1);
        spec.time_budget = (base.time_budget - start.elapsed().as_secs_f64()).max(1e-3);
        if let Some((alpha, _)) = &best {
            for (side, shares) in [(Side::Left, mms_left), (Side::Right, mms_right)] {
                for (a, &share) in shares.iter().enumerate() {
                    if share > 0 {
                        spec = spec.with_floor(side, a, floor_scaled(*alpha, share) + 1);
                    }
                }
            }
        }
        let out = find_matching_with(instance, &spec, opts)?;
        spent += out.nodes_explored;
        match out.status {
            SearchStatus::Found => {
                let m = out.witness.expect("found outcome carries a witness");
                let alpha = dmms_alpha(instance, &m, mms_left, mms_right);
                let stop = (any_zero && alpha >= Ratio::from_integer(1))
                    || mms_left.iter().chain(mms_right).all(|&s| s == 0);
                best = Some((alpha, m));
                if stop {
                    break;
                }
            }
            SearchStatus::ExhaustedInfeasible => break,
            SearchStatus::BudgetExceeded => {
                return Err(Error::BudgetExceeded {
                    nodes_explored: spent,
                    lower_bound: best.map(|(a, _)| LowerBound::Alpha(a)),
                })
            }
        }
    }
    best.ok_or_else(|| Error::BadParameter("no complete matching exists".into()))
}
