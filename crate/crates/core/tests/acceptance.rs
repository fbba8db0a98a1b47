//! One PASS/FAIL line per acceptance criterion; exits non-zero on any FAIL.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use twosided::experiments::{
    grid, run_existence_census, run_sweep, CensusProperty, SweepAlgorithm, SweepCell, SweepConfig, DEFAULT_PCTS,
};
use twosided::fairness::{dmms_alpha, is_ef_c, is_sd_def_c, is_sd_ef_c, mms_values, ShareOptions};
use twosided::generate::{generate_instance, InstanceGenConfig};
use twosided::matchers::{
    d2_dmms_def1_for, from_rank_space, gcd, general_sd_def1, restricted_rr, restricted_rr_coprime,
    round_robin_ordering, three_phase_rr, weak_mms_matching,
};
use twosided::paperbench::{instances, verify_claim, ClaimId, Verdict, VerifyOptions};
use twosided::ratio::ceil_scaled;
use twosided::search::{
    find_matching, find_matching_with, max_dmms_alpha, SearchOptions, SearchSpec, SearchStatus,
};
use twosided::{matching_status, Instance, Matching, Ratio, Side};

type Check = Result<String, String>;

const THM1_BUDGET: (u64, f64) = (1_000_000_000, 7200.0);
const THM6_BUDGET: (u64, f64) = (1_000_000_000, 1800.0);
const THM7_BUDGET: (u64, f64) = (10_000_000_000, 28_800.0);
const THM4_ALPHA: (u64, u64) = (8, 9);
const THM4_REJECTED_ALPHA: (u64, u64) = (89, 100);
const THM7_LEFT_MMS: u64 = 15;
const THM8_MMS: [u64; 8] = [1, 1, 3, 3, 5, 5, 7, 7];
const THM5_INSTANCES: usize = 60;
const APPA_TRIALS: usize = 200;
const APPE_TRIALS: usize = 200;
const APPE_SEED: u64 = 2025;
const CENSUS_DEF_MAX: f64 = 0.25;
const CENSUS_EF_MIN: f64 = 0.75;
const CROSS_CHECK_SPECS: usize = 50;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn positional(n: usize, d: usize) -> Instance {
    let row: Vec<u64> = (0..n as u64).rev().collect();
    Instance::identical(n, d, row.clone(), row).unwrap()
}

fn complete(inst: &Instance, m: &Matching) -> bool {
    matching_status(inst, m).map(|s| s.valid && s.complete).unwrap_or(false)
}

fn side_floors(mut spec: SearchSpec, side: Side, floors: &[u64]) -> SearchSpec {
    for (a, &f) in floors.iter().enumerate() {
        spec = spec.with_floor(side, a, f);
    }
    spec
}

fn exhausted(label: &str, inst: &Instance, spec: &SearchSpec) -> Result<u64, String> {
    let out = find_matching(inst, spec).map_err(err)?;
    ensure(out.status == SearchStatus::ExhaustedInfeasible, || {
        format!("{label}: {:?} after {} nodes", out.status, out.nodes_explored)
    })?;
    Ok(out.nodes_explored)
}

fn criterion_1() -> Check {
    let m = restricted_rr_coprime(5, 2, 3, 2).map_err(err)?;
    let expected: [(usize, [usize; 2]); 5] = [(3, [0, 2]), (1, [0, 3]), (4, [1, 3]), (2, [1, 4]), (0, [2, 4])];
    for (i, b) in expected {
        ensure(m.bundle_left(i) == b, || format!("left {i} got {:?}", m.bundle_left(i)))?;
    }
    ensure(m.edge_count() == 10, || "extra edges".into())?;
    let table: [(usize, [usize; 5], [usize; 5]); 5] = [
        (0, [0, 3, 1, 4, 2], [0, 2, 4, 1, 3]),
        (1, [1, 4, 2, 0, 3], [1, 3, 0, 2, 4]),
        (2, [2, 0, 3, 1, 4], [2, 4, 1, 3, 0]),
        (3, [3, 1, 4, 2, 0], [3, 0, 2, 4, 1]),
        (4, [4, 2, 0, 3, 1], [4, 1, 3, 0, 2]),
    ];
    for (a, with_d, with_n_minus_d) in table {
        for (x, row) in [(2, with_d), (3, with_n_minus_d)] {
            let r = round_robin_ordering(5, a, x).map_err(err)?;
            let got: Vec<usize> = (0..5).map(|p| r.at(p)).collect();
            ensure(got == row, || format!("a={a} x={x}: {got:?}"))?;
        }
    }
    Ok("example matching and 10 ordering rows exact".into())
}

fn criterion_2() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut runs = 0;
    for n in 1..=12usize {
        for d in 1..=n {
            let g = gcd(n as u64, d as u64) as usize;
            let inst = positional(n, d);
            let fair = |m: &Matching| complete(&inst, m) && is_sd_def_c(&inst, m, 1) && {
                common::sd_ef_c(&inst, m, Side::Left, 1) && common::sd_ef_c(&inst, m, Side::Right, 1)
            };
            if g == 1 && d < n {
                let steps = if 2 * d == n { vec![d] } else { vec![d, n - d] };
                let mut seen: Vec<Matching> = Vec::new();
                for a in 0..n {
                    for &x in &steps {
                        let m = restricted_rr_coprime(n, d, a, x).map_err(err)?;
                        ensure(fair(&m), || format!("coprime n={n} d={d} a={a} x={x}"))?;
                        ensure(!seen.contains(&m), || format!("duplicate n={n} d={d} a={a} x={x}"))?;
                        seen.push(m);
                        runs += 1;
                    }
                }
            } else {
                let (np, dp) = (n / g, d / g);
                for _ in 0..10 {
                    let choices: Vec<(usize, usize)> = (0..g * g)
                        .map(|_| {
                            let x = if np > dp && rng.gen_bool(0.5) { np - dp } else { dp };
                            (rng.gen_range(0..np), x)
                        })
                        .collect();
                    let m = restricted_rr(n, d, Some(&choices)).map_err(err)?;
                    ensure(fair(&m), || format!("blocks n={n} d={d} {choices:?}"))?;
                    runs += 1;
                }
            }
        }
    }
    let mut shapes = 0;
    for nl in 1..=24usize {
        for nr in 1..=24usize {
            for dl in 1..=nr {
                for dr in 1..=nl {
                    if nl * dl != nr * dr || nl * dl > 24 {
                        continue;
                    }
                    let mut lorder: Vec<usize> = (0..nr).collect();
                    let mut rorder: Vec<usize> = (0..nl).collect();
                    for k in (1..nr).rev() {
                        lorder.swap(k, rng.gen_range(0..=k));
                    }
                    for k in (1..nl).rev() {
                        rorder.swap(k, rng.gen_range(0..=k));
                    }
                    let mut lrow = vec![0; nr];
                    for (pos, &o) in lorder.iter().enumerate() {
                        lrow[o] = (nr - pos) as u64;
                    }
                    let mut rrow = vec![0; nl];
                    for (pos, &o) in rorder.iter().enumerate() {
                        rrow[o] = (nl - pos) as u64;
                    }
                    let inst = Instance::new(vec![dl; nl], vec![dr; nr], vec![lrow; nl], vec![rrow; nr]).unwrap();
                    let m = general_sd_def1(&inst).map_err(err)?;
                    ensure(complete(&inst, &m) && is_sd_def_c(&inst, &m, 1), || {
                        format!("shape {nl}x{dl} / {nr}x{dr}")
                    })?;
                    ensure(
                        common::sd_ef_c(&inst, &m, Side::Left, 1) && common::sd_ef_c(&inst, &m, Side::Right, 1),
                        || format!("oracle disagrees on shape {nl}x{dl} / {nr}x{dr}"),
                    )?;
                    shapes += 1;
                }
            }
        }
    }
    Ok(format!("{runs} square runs, {shapes} side shapes, all complete and SD-DEF1"))
}

fn criterion_3() -> Check {
    let inst = instances::sd_def1_impossible(3).map_err(err)?;
    let spec = SearchSpec::complete()
        .with_sd_ef(Side::Left, 1)
        .with_sd_ef(Side::Right, 1)
        .with_budget(THM1_BUDGET.0, THM1_BUDGET.1);
    let nodes = exhausted("d=3", &inst, &spec)?;
    Ok(format!("n=12, d=3: ExhaustedInfeasible after {nodes} nodes"))
}

fn criterion_4() -> Check {
    let inst = instances::dmms_gap();
    let opts = ShareOptions::default();
    let ml = mms_values(&inst, Side::Left, &opts).map_err(err)?;
    let mr = mms_values(&inst, Side::Right, &opts).map_err(err)?;
    let (alpha, witness) =
        max_dmms_alpha(&inst, &SearchSpec::complete(), &ml, &mr, &SearchOptions::default()).map_err(err)?;
    let target = Ratio::new(THM4_ALPHA.0, THM4_ALPHA.1);
    ensure(alpha == target, || format!("alpha {alpha}"))?;
    ensure(complete(&inst, &witness) && dmms_alpha(&inst, &witness, &ml, &mr) == target, || {
        "witness does not realize the ratio".into()
    })?;
    let rejected = Ratio::new(THM4_REJECTED_ALPHA.0, THM4_REJECTED_ALPHA.1);
    let fl: Vec<u64> = ml.iter().map(|&s| ceil_scaled(rejected, s)).collect();
    let fr: Vec<u64> = mr.iter().map(|&s| ceil_scaled(rejected, s)).collect();
    let spec = side_floors(side_floors(SearchSpec::complete(), Side::Left, &fl), Side::Right, &fr);
    let nodes = exhausted("0.89-DMMS", &inst, &spec)?;
    Ok(format!("alpha = {}/{} with witness; no 0.89-DMMS matching ({nodes} nodes)", alpha.numer(), alpha.denom()))
}

fn criterion_5() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let opts = ShareOptions::default();
    for t in 0..THM5_INSTANCES {
        let n = rng.gen_range(2..=8);
        let d = rng.gen_range(1..=n);
        let inst = generate_instance(&InstanceGenConfig::square(n, d, 100, 100, rng.gen())).map_err(err)?;
        let lrank = common::ranking(inst.row(Side::Left, 0));
        let rrank = common::ranking(inst.row(Side::Right, 0));
        let m = from_rank_space(&restricted_rr(n, d, None).map_err(err)?, &rrank, &lrank);
        ensure(complete(&inst, &m), || format!("trial {t} incomplete"))?;
        for side in Side::BOTH {
            let shares = mms_values(&inst, side, &opts).map_err(err)?;
            for a in 0..n {
                let u = inst.utility(side, a, &m);
                ensure(common::meets_fraction(u, shares[a], d), || {
                    format!("trial {t} n={n} d={d} {side} {a}: {u} * {d} < {}", shares[a])
                })?;
            }
        }
    }
    Ok(format!("{THM5_INSTANCES} identical-valuation markets, every utility >= MMS/d"))
}

fn criterion_6() -> Check {
    let inst = instances::sd_ef_vs_mms(3, 9).map_err(err)?;
    let ml = mms_values(&inst, Side::Left, &ShareOptions::default()).map_err(err)?;
    ensure(ml.iter().all(|&v| v == 3), || format!("left MMS {ml:?}"))?;
    let spec = side_floors(SearchSpec::complete().with_sd_ef(Side::Left, 1), Side::Left, &ml)
        .with_budget(THM6_BUDGET.0, THM6_BUDGET.1);
    let nodes = exhausted("SD-EF1 left + floors 3", &inst, &spec)?;
    Ok(format!("ExhaustedInfeasible after {nodes} nodes"))
}

fn criterion_7() -> Check {
    let inst = instances::one_sided_sd_vs_mms();
    let opts = ShareOptions::default();
    let ml = mms_values(&inst, Side::Left, &opts).map_err(err)?;
    ensure(ml.iter().all(|&v| v == THM7_LEFT_MMS), || format!("left MMS {ml:?}"))?;
    let spec = side_floors(SearchSpec::complete().with_sd_ef(Side::Right, 1), Side::Left, &ml)
        .with_budget(THM7_BUDGET.0, THM7_BUDGET.1);
    let nodes = exhausted("SD-EF1 right + left MMS", &inst, &spec)?;
    let mr = mms_values(&inst, Side::Right, &opts).map_err(err)?;
    let swapped = side_floors(SearchSpec::complete().with_sd_ef(Side::Left, 1), Side::Right, &mr)
        .with_budget(THM7_BUDGET.0, THM7_BUDGET.1);
    let nodes2 = exhausted("SD-EF1 left + right MMS", &inst, &swapped)?;
    Ok(format!("left MMS {THM7_LEFT_MMS}; both orientations exhausted ({nodes} + {nodes2} nodes)"))
}

fn criterion_8() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for n in 4..=30usize {
        let left_row: Vec<u64> = (0..n as u64).rev().collect();
        for t in 0..APPA_TRIALS {
            let right: Vec<Vec<u64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(0..=20)).collect()).collect();
            let inst = Instance::new(vec![2; n], vec![2; n], vec![left_row.clone(); n], right).unwrap();
            let m = three_phase_rr(&inst).map_err(|e| format!("n={n} trial {t}: {e}"))?;
            let ok = complete(&inst, &m)
                && is_ef_c(&inst, &m, Side::Left, 1)
                && is_ef_c(&inst, &m, Side::Right, 1)
                && is_sd_ef_c(&inst, &m, Side::Left, 1);
            ensure(ok, || format!("n={n} trial {t}"))?;
        }
    }
    Ok(format!("{} markets, zero violations", 27 * APPA_TRIALS))
}

fn criterion_9() -> Check {
    let opts = ShareOptions::default();
    for n in 2..=9usize {
        let inst = instances::d2_decreasing(n).map_err(err)?;
        let m = d2_dmms_def1_for(&inst).map_err(err)?;
        ensure(complete(&inst, &m) && is_sd_def_c(&inst, &m, 1), || format!("n={n} not SD-DEF1"))?;
        for side in Side::BOTH {
            let shares = mms_values(&inst, side, &opts).map_err(err)?;
            ensure(shares.iter().all(|&s| s == THM8_MMS[n - 2]), || format!("n={n} {side} MMS {shares:?}"))?;
            let utils = inst.utilities(side, &m);
            ensure(utils.iter().all(|&u| u >= shares[0]), || format!("n={n} {side} below MMS: {utils:?}"))?;
            ensure(utils.iter().min() == Some(&shares[0]), || format!("n={n} {side} min utility above MMS"))?;
        }
    }
    Ok("n = 2..9: SD-DEF1, lowest utility equals MMS on both sides".into())
}

fn criterion_10() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut markets = 0;
    for n in 1..=8usize {
        for d in 1..=n {
            for k in 0..4 {
                let (lrow, rrow): (Vec<u64>, Vec<u64>) = if k == 0 {
                    ((0..n as u64).rev().collect(), (0..n as u64).rev().collect())
                } else {
                    (
                        (0..n).map(|_| rng.gen_range(0..=20)).collect(),
                        (0..n).map(|_| rng.gen_range(0..=20)).collect(),
                    )
                };
                let inst = Instance::identical(n, d, lrow.clone(), rrow.clone()).unwrap();
                let m = weak_mms_matching(&inst, &ShareOptions::default()).map_err(err)?;
                ensure(matching_status(&inst, &m).map_err(err)?.valid, || format!("n={n} d={d} invalid"))?;
                let (wl, wr) = (common::weak_mms(&lrow, d), common::weak_mms(&rrow, d));
                for a in 0..n {
                    ensure(inst.utility(Side::Left, a, &m) >= wl && inst.utility(Side::Right, a, &m) >= wr, || {
                        format!("n={n} d={d} agent {a} below weak share")
                    })?;
                }
                markets += 1;
            }
        }
    }
    let mut notes = Vec::new();
    for n in [8, 10, 12] {
        let r = verify_claim(ClaimId::AppcRatio { n }, &VerifyOptions::default()).map_err(err)?;
        ensure(r.verdict == Verdict::Confirmed, || format!("n={n}: {:?}", r.verdict))?;
        let lowest = r.evidence["lowest_left_utility"].as_u64();
        ensure(lowest == Some(2), || format!("n={n}: lowest utility {lowest:?}"))?;
        notes.push(format!("n={n} share {}", r.evidence["unconstrained_share"]));
    }
    Ok(format!("{markets} markets meet weak shares; MMS matching leaves utility 2 ({})", notes.join(", ")))
}

fn criterion_11() -> Check {
    let mut parts = Vec::new();
    for id in [ClaimId::AppdP1, ClaimId::AppdP2, ClaimId::AppdP3, ClaimId::Thm9Property] {
        let r = verify_claim(id, &VerifyOptions::default()).map_err(err)?;
        ensure(r.verdict == Verdict::Confirmed, || format!("{id}: {:?} {}", r.verdict, r.evidence))?;
        parts.push(id.to_string());
    }
    Ok(format!("{} Confirmed", parts.join(", ")))
}

fn criterion_12() -> Check {
    let ds = [13usize, 23, 27];
    let cfg = SweepConfig::new(grid(&[50], &ds, &DEFAULT_PCTS), APPE_TRIALS, APPE_SEED);
    let res = run_sweep(&cfg).map_err(err)?;
    let mean = |d: usize, pct: u32, alg: SweepAlgorithm| -> Result<f64, String> {
        let s = res.summary(SweepCell { n: 50, d, pct }, alg).ok_or("missing cell")?;
        ensure(s.errors == 0, || format!("d={d} pct={pct} {alg}: {} errors", s.errors))?;
        Ok(s.mean)
    };
    let mut rows = Vec::new();
    for d in ds {
        let means: Vec<f64> =
            DEFAULT_PCTS.iter().map(|&p| mean(d, p, SweepAlgorithm::RestrictedRr)).collect::<Result<_, _>>()?;
        ensure(means.windows(2).all(|w| w[1] <= w[0]), || format!("d={d}: {means:?} increases"))?;
        ensure(*means.last().unwrap() == 0.0, || format!("d={d}: nonzero at 100%"))?;
        let classic = mean(d, 100, SweepAlgorithm::ClassicRr)?;
        ensure(classic > 0.0, || format!("d={d}: classic mean {classic} at 100%"))?;
        rows.push(format!("d={d} rr {:.2}->0 crr@100 {:.2}", means[0], classic));
    }
    let census = run_existence_census(6..=7, 2..=5, APPE_TRIALS, APPE_SEED).map_err(err)?;
    let mut cells = 0;
    for c in census.iter().filter(|c| c.d + 2 <= c.n) {
        let (ef, def) = (c.fraction(CensusProperty::EfLeft), c.fraction(CensusProperty::Def));
        ensure(c.undecided() == 0 && c.errors.is_empty(), || format!("n={} d={}: undecided", c.n, c.d))?;
        ensure(def < CENSUS_DEF_MAX && ef > CENSUS_EF_MIN, || {
            format!("n={} d={}: EF {ef:.3} DEF {def:.3}", c.n, c.d)
        })?;
        ensure(c.fraction(CensusProperty::MmsLeft) == 1.0, || format!("n={} d={}: one-sided MMS < 1", c.n, c.d))?;
        ensure(c.dmms.no == c.dmms_failures_rescued, || {
            format!("n={} d={}: {} DMMS failures, {} rescued", c.n, c.d, c.dmms.no, c.dmms_failures_rescued)
        })?;
        cells += 1;
    }
    Ok(format!("{}; census {cells} cells EF > {CENSUS_EF_MIN}, DEF < {CENSUS_DEF_MAX}, MMS 1.0", rows.join("; ")))
}

fn random_spec(rng: &mut ChaCha8Rng, inst: &Instance) -> SearchSpec {
    let mut spec = SearchSpec::complete();
    for side in Side::BOTH {
        if rng.gen_bool(0.5) {
            spec = spec.with_sd_ef(side, rng.gen_range(0..=3));
        }
        if rng.gen_bool(0.3) {
            spec = spec.with_ef(side, rng.gen_range(0..=1));
        }
    }
    for _ in 0..rng.gen_range(0..=3) {
        let side = if rng.gen_bool(0.5) { Side::Left } else { Side::Right };
        spec = spec.with_floor(side, rng.gen_range(0..inst.size(side)), rng.gen_range(0..=8));
    }
    spec
}

fn oracle_accepts(inst: &Instance, spec: &SearchSpec, m: &Matching) -> bool {
    spec.sd_ef_constraints.iter().all(|k| common::sd_ef_c(inst, m, k.side, k.c))
        && spec.ef_constraints.iter().all(|k| common::ef_c(inst, m, k.side, k.c))
        && spec.utility_floor.iter().all(|f| inst.utility(f.side, f.agent, m) >= f.min)
}

fn criterion_13() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (mut feasible, mut infeasible) = (0, 0);
    for t in 0..CROSS_CHECK_SPECS {
        let inst = loop {
            let (nl, nr) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
            let dl: Vec<usize> = (0..nl).map(|_| rng.gen_range(1..=nr)).collect();
            let dr: Vec<usize> = (0..nr).map(|_| rng.gen_range(1..=nl)).collect();
            if dl.iter().sum::<usize>() > 12 || dr.iter().sum::<usize>() > 12 {
                continue;
            }
            let vl = (0..nl).map(|_| (0..nr).map(|_| rng.gen_range(0..=6)).collect()).collect();
            let vr = (0..nr).map(|_| (0..nl).map(|_| rng.gen_range(0..=6)).collect()).collect();
            break Instance::new(dl, dr, vl, vr).unwrap();
        };
        let spec = random_spec(&mut rng, &inst);
        let expected = common::complete_matchings(&inst).iter().any(|m| oracle_accepts(&inst, &spec, m));
        for workers in [1, 3] {
            let out = find_matching_with(&inst, &spec, &SearchOptions { propagate: true, workers }).map_err(err)?;
            let got = match out.status {
                SearchStatus::Found => true,
                SearchStatus::ExhaustedInfeasible => false,
                SearchStatus::BudgetExceeded => return Err(format!("case {t}: budget")),
            };
            ensure(got == expected, || format!("case {t} workers {workers}: search {got}, enumeration {expected}"))?;
            if let Some(w) = &out.witness {
                ensure(complete(&inst, w) && oracle_accepts(&inst, &spec, w), || format!("case {t}: bad witness"))?;
            }
        }
        if expected {
            feasible += 1;
        } else {
            infeasible += 1;
        }
    }
    Ok(format!("{CROSS_CHECK_SPECS} specs agree ({feasible} feasible, {infeasible} infeasible)"))
}

fn main() -> ExitCode {
    let criteria: [(u32, fn() -> Check); 13] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
        (11, criterion_11),
        (12, criterion_12),
        (13, criterion_13),
    ];
    let mut failed = 0;
    for (k, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {k}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {k}: {detail} [{secs:.1}s]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
