//! Acceptance suite. Runs as a plain binary so every criterion prints one
//! line whether or not it passes:
//!
//! ```text
//! cargo test -p pqeval-core --test acceptance
//! ```

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use pqeval::dataset::{write_synthetic, DatasetLayout};
use pqeval::evaluate::{evaluate_submission, GroundTruth};
use pqeval::harness::{Harness, HarnessError, Phase, PhaseConfig, PhaseSetup, SubmissionArchive};
use pqeval::labels::{CategoryTable, PanopticLabelMap};
use pqeval::matching::match_pair;
use pqeval::metrics::{
    build_report, class_pq, rank_submissions, weighted_scores, ConditionScores, Marginal,
    ScoreAccumulator, ScoreReport, WeightConfig, WeightedScores,
};
use pqeval::oracle::{generate_scene, oracle_match, oracle_pq, Perturbation, SynthSpec};
use pqeval::ConditionTag;

const SCORE_TOL: f64 = 1e-12;
const WEIGHT_TOL: f64 = 1e-9;

type Check = Result<String, String>;
type Criterion = (u8, &'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn identity_score() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut spec = SynthSpec::new(256, 128, 40, 1);
    spec.void_fraction = 0.05;
    let layout = DatasetLayout::new(dir.path());
    let manifest = write_synthetic(&layout, &spec, 50).map_err(|e| e.to_string())?;
    let gt = GroundTruth::new(manifest, layout.gt_dir(), CategoryTable::default());
    let perfect = common::perfect_submission(&gt);

    let start = Instant::now();
    let report = evaluate_submission(&gt, &perfect, &WeightConfig::default())
        .map_err(|e| e.to_string())?
        .report;
    let secs = start.elapsed().as_secs_f64();

    let mut values = vec![
        report.pq_all, report.sq_all, report.rq_all, report.wpq, report.wsq, report.wrq,
    ];
    for c in &report.per_condition {
        values.extend([c.pq, c.sq, c.rq]);
    }
    ensure(values.iter().all(|&v| v == 100.0), || format!("non-100 score in {values:?}"))?;
    ensure(report.per_condition.len() == 8, || "not all conditions scored".into())?;
    ensure(secs < 5.0, || format!("took {secs:.2} s"))?;
    Ok(format!("50 scenes at 256x128, all scores 100.00, {secs:.2} s"))
}

fn oracle_equivalence() -> Check {
    let start = Instant::now();
    let mut scenes = Vec::new();
    let mut results = Vec::new();
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for seed in 0..1000 {
        let spec = common::small_spec(seed);
        ensure(
            spec.width <= 16 && spec.height <= 16 && spec.n_segments <= 6 && spec.void_fraction <= 0.3,
            || format!("seed {seed}: spec outside the envelope"),
        )?;
        let s = generate_scene(&spec).map_err(|e| e.to_string())?;
        let fast = match_pair(&s.gt, &s.pred).map_err(|e| e.to_string())?;
        let slow = oracle_match(&s.gt, &s.pred).map_err(|e| e.to_string())?;
        let (mut a, mut b) = (fast.iou_multiset(), slow.iou_multiset());
        a.sort_unstable();
        b.sort_unstable();
        ensure(
            (fast.tp_count(), fast.fp_count(), fast.fn_count(), a)
                == (slow.tp_count(), slow.fp_count(), slow.fn_count(), b),
            || format!("seed {seed}: match disagreement"),
        )?;
        tp += fast.tp_count();
        fp += fast.fp_count();
        fn_ += fast.fn_count();
        results.push((slow, s.tag));
        scenes.push((s.gt, s.pred, s.tag));
    }

    let weights = WeightConfig::default();
    let report = pqeval::evaluate::evaluate_maps(&scenes, &weights).map_err(|e| e.to_string())?;
    let oracle = oracle_pq(&results, &weights);
    let mut worst: f64 = 0.0;
    let (wpq, wsq, wrq) = oracle.weighted.ok_or("oracle has no weighted score")?;
    for (x, y) in [(report.wpq, wpq), (report.wsq, wsq), (report.wrq, wrq)] {
        worst = worst.max((x - y).abs());
    }
    for c in &report.per_condition {
        let o = oracle.conditions.get(&c.condition).ok_or("condition missing in oracle")?;
        for (x, y) in [(c.pq, o.mean.pq), (c.sq, o.mean.sq), (c.rq, o.mean.rq)] {
            worst = worst.max((x - y).abs());
        }
    }
    for m in Marginal::ALL {
        if let (Some(a), Some(Some(b))) = (report.breakdown.get(m), oracle.marginals.get(&m)) {
            for (x, y) in [(a.pq, b.mean.pq), (a.sq, b.mean.sq), (a.rq, b.mean.rq)] {
                worst = worst.max((x - y).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst < SCORE_TOL, || format!("score gap {worst:e}"))?;
    ensure(secs < 60.0, || format!("took {secs:.1} s"))?;
    Ok(format!(
        "1000 pairs, TP/FP/FN {tp}/{fp}/{fn_}, max score gap {worst:.1e}, {secs:.2} s"
    ))
}

fn factorization() -> Check {
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    let mut visit = |acc: &ScoreAccumulator| {
        for classes in acc.per_class().values() {
            for c in classes.values().filter(|c| c.tp > 0) {
                let q = class_pq(c).expect("present class");
                worst = worst.max((q.pq - q.sq * q.rq).abs());
                checked += 1;
            }
        }
    };
    let mut pooled = ScoreAccumulator::new();
    for seed in 0..1000 {
        let s = generate_scene(&common::small_spec(seed)).map_err(|e| e.to_string())?;
        let r = match_pair(&s.gt, &s.pred).map_err(|e| e.to_string())?;
        let single = ScoreAccumulator::single(&r, s.tag);
        visit(&single);
        pooled = pooled.merge(single);
    }
    visit(&pooled);
    let (gt, pred) = overlap_fixture();
    visit(&ScoreAccumulator::single(&match_pair(&gt, &pred).unwrap(), tag("clear/day")));
    ensure(worst < SCORE_TOL, || format!("|PQ - SQ*RQ| reached {worst:e}"))?;
    Ok(format!("{checked} class scores with TP > 0, max |PQ - SQ*RQ| {worst:.1e}"))
}

fn table_ranking() -> Check {
    let published = [
        ("mljp", 36.15, 68.28, 45.58),
        ("eliet", 45.84, 73.23, 56.40),
        ("wg", 54.23, 76.62, 65.66),
        ("michele24", 47.03, 72.61, 57.62),
    ];
    let entries: Vec<(String, WeightedScores)> = published
        .iter()
        .map(|&(team, wpq, wsq, wrq)| {
            let json = format!(r#"{{"wpq": {wpq}, "wsq": {wsq}, "wrq": {wrq}}}"#);
            let scores: WeightedScores = serde_json::from_str(&json).expect("scores json");
            (team.to_string(), scores)
        })
        .collect();
    let rows = rank_submissions(&entries);
    let got: Vec<(usize, &str)> = rows.iter().map(|r| (r.rank, r.team.as_str())).collect();
    let want = vec![(1, "wg"), (2, "michele24"), (3, "eliet"), (4, "mljp")];
    ensure(got == want, || format!("got {got:?}"))?;
    Ok("wg, michele24, eliet, mljp ranked 1-4".into())
}

fn cond(t: &str, x: f64) -> ConditionScores {
    ConditionScores {
        condition: tag(t),
        pq: x,
        sq: x,
        rq: x,
        per_class: Vec::new(),
        n_scenes: 1,
    }
}

fn weighting() -> Check {
    let w = WeightConfig::default();
    ensure(w.total() == 7.5, || format!("sum of weights {}", w.total()))?;
    for c in [0.0, 0.1, 1.0 / 3.0, 42.42, 57.123456789, 99.99, 100.0] {
        let per: Vec<_> = ConditionTag::all()
            .into_iter()
            .map(|t| cond(&t.to_string(), c))
            .collect();
        let s = weighted_scores(&per, &w).map_err(|e| e.to_string())?;
        ensure((s.wpq, s.wsq, s.wrq) == (c, c, c), || {
            format!("constant {c} gave {:?}", (s.wpq, s.wsq, s.wrq))
        })?;
    }
    let s = weighted_scores(&[cond("clear/day", 60.0), cond("fog/night", 40.0)], &w)
        .map_err(|e| e.to_string())?;
    ensure((s.wpq - 46.6667).abs() < 1e-4 && (s.wpq - 140.0 / 3.0).abs() < WEIGHT_TOL, || {
        format!("two-condition fixture gave {}", s.wpq)
    })?;
    Ok(format!("constant scores exact, two-condition fixture {:.4}", s.wpq))
}

fn quota_enforcement() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let spec = SynthSpec::new(8, 8, 4, 5);
    let (val_gt, val_pred) = common::synthetic_dataset(&dir.path().join("val"), &spec, 2);
    let (final_gt, final_pred) = common::synthetic_dataset(&dir.path().join("final"), &spec, 2);
    let phases = vec![
        PhaseSetup {
            config: PhaseConfig::validation(),
            ground_truth: val_gt,
            weights: WeightConfig::default(),
        },
        PhaseSetup {
            config: PhaseConfig::final_phase(),
            ground_truth: final_gt,
            weights: WeightConfig::default(),
        },
    ];
    let root = dir.path().join("harness");
    let h = Harness::open(&root, phases.clone()).map_err(|e| e.to_string())?;

    let run = |phase: Phase, n: u64, archive: &SubmissionArchive, limit: u32| -> Result<usize, String> {
        let mut accepted = 0;
        for i in 0..n {
            match h.submit("wg", phase, archive, i) {
                Ok(_) => accepted += 1,
                Err(e @ HarnessError::QuotaExhausted { .. }) => {
                    ensure(e.to_string().contains(&limit.to_string()), || {
                        format!("denial does not name the limit: {e}")
                    })?;
                }
                Err(e) => return Err(e.to_string()),
            }
        }
        Ok(accepted)
    };
    let val = run(Phase::Validation, 101, &val_pred, 100)?;
    let fin = run(Phase::Final, 6, &final_pred, 5)?;
    ensure((val, fin) == (100, 5), || format!("accepted {val} + {fin}"))?;

    let before = (h.counts(), h.records(), h.leaderboard(Phase::Final));
    drop(h);
    {
        use std::io::Write;
        let mut log = std::fs::OpenOptions::new()
            .append(true)
            .open(root.join(pqeval::harness::LEDGER_FILE))
            .map_err(|e| e.to_string())?;
        log.write_all(br#"{"event":"submit","team":"wg","#).map_err(|e| e.to_string())?;
    }
    let h = Harness::open(&root, phases).map_err(|e| e.to_string())?;
    let after = (h.counts(), h.records(), h.leaderboard(Phase::Final));
    ensure(before == after, || "replayed state differs".into())?;
    Ok("100 of 101 validation and 5 of 6 final accepted, replay after torn write identical".into())
}

const CAR: u32 = 13;
const ROAD: u32 = 0;

fn overlap_fixture() -> (PanopticLabelMap, PanopticLabelMap) {
    #[rustfmt::skip]
    let gt = vec![
        1, 1, 2, 2,
        1, 1, 2, 2,
        2, 2, 2, 2,
        2, 2, 2, 2,
    ];
    #[rustfmt::skip]
    let pred = vec![
        7, 7, 7, 8,
        7, 8, 8, 8,
        8, 8, 8, 8,
        8, 8, 8, 8,
    ];
    (
        PanopticLabelMap::from_grid(4, 4, 0, gt, &[(1, CAR), (2, ROAD)]).unwrap(),
        PanopticLabelMap::from_grid(4, 4, 0, pred, &[(7, CAR), (8, ROAD)]).unwrap(),
    )
}

fn hand_fixture() -> Check {
    let (gt, pred) = overlap_fixture();
    let r = match_pair(&gt, &pred).map_err(|e| e.to_string())?;
    let acc = ScoreAccumulator::single(&r, tag("clear/day"));
    let car = acc.per_class()[&tag("clear/day")][&CAR];
    let q = class_pq(&car).ok_or("car absent")?;
    ensure((q.pq, q.sq, q.rq) == (0.6, 0.6, 1.0), || format!("car scored {q:?}"))?;

    let o = oracle_pq(&[(oracle_match(&gt, &pred).unwrap(), tag("clear/day"))], &WeightConfig::default());
    let oq = o.conditions[&tag("clear/day")].classes[&CAR];
    ensure((oq.pq, oq.sq, oq.rq) == (0.6, 0.6, 1.0), || format!("reference scored {oq:?}"))?;
    Ok(format!("car PQ {:.2} SQ {:.2} RQ {:.2}", q.pq, q.sq, q.rq))
}

fn invariance() -> Check {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    let weights = WeightConfig::default();
    let bytes = |r: &ScoreReport| serde_json::to_vec(r).unwrap();
    for trial in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(trial);
        let scenes: Vec<_> = (0..8)
            .map(|k| generate_scene(&common::small_spec(7_000 + trial * 8 + k)).unwrap())
            .collect();

        let mut plain = ScoreAccumulator::new();
        let mut relabeled = ScoreAccumulator::new();
        let mut singles = Vec::new();
        for s in &scenes {
            let r = match_pair(&s.gt, &s.pred).unwrap();
            plain.add(&r, s.tag);
            singles.push(ScoreAccumulator::single(&r, s.tag));
            let g = common::relabel(&s.gt, &mut rng);
            let p = common::relabel(&s.pred, &mut rng);
            relabeled.add(&match_pair(&g, &p).unwrap(), s.tag);
        }
        singles.shuffle(&mut rng);
        let mid = singles.len() / 2;
        let right = singles.split_off(mid);
        let fold = |v: Vec<ScoreAccumulator>| v.into_iter().fold(ScoreAccumulator::new(), |a, b| b.merge(a));
        let reordered = fold(right).merge(fold(singles));

        let base = build_report(&plain, &weights).map_err(|e| e.to_string())?;
        ensure(bytes(&base) == bytes(&build_report(&relabeled, &weights).unwrap()), || {
            format!("trial {trial}: relabeling changed the report")
        })?;
        ensure(bytes(&base) == bytes(&build_report(&reordered, &weights).unwrap()), || {
            format!("trial {trial}: merge order changed the report")
        })?;
    }
    Ok("200 trials, relabeled and reordered reports byte-identical".into())
}

fn throughput() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut spec = SynthSpec::new(1024, 512, 60, 11);
    spec.void_fraction = 0.05;
    spec.perturbation = Perturbation::from_strength(0.3, 60);
    let n = 40;
    let (gt, archive) = common::synthetic_dataset(dir.path(), &spec, n);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .map_err(|e| e.to_string())?;
    let weights = WeightConfig::default();
    let start = Instant::now();
    pool.install(|| evaluate_submission(&gt, &archive, &weights))
        .map_err(|e| e.to_string())?;
    let rate = n as f64 / start.elapsed().as_secs_f64();
    let line = format!("{rate:.1} pairs/s at 1024x512 on 4 threads (target 20)");
    if rate >= 20.0 {
        Ok(line)
    } else {
        Err(line)
    }
}

fn tag(s: &str) -> ConditionTag {
    s.parse().expect("condition tag")
}

fn main() {
    let hard: [Criterion; 8] = [
        (1, "identity score", identity_score),
        (2, "oracle equivalence", oracle_equivalence),
        (3, "PQ = SQ x RQ", factorization),
        (4, "leaderboard ranking", table_ranking),
        (5, "weighting arithmetic", weighting),
        (6, "quota enforcement", quota_enforcement),
        (7, "hand-computed fixture", hand_fixture),
        (8, "invariance suite", invariance),
    ];
    let run = |f: fn() -> Check| match catch_unwind(AssertUnwindSafe(f)) {
        Ok(r) => r,
        Err(p) => Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into())),
    };

    let mut failed = 0;
    for (id, name, f) in hard {
        match run(f) {
            Ok(detail) => println!("criterion {id} {name:<22} PASS  {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id} {name:<22} FAIL  {detail}");
            }
        }
    }
    // Soft target: reported, never fails the suite.
    match run(throughput) {
        Ok(detail) => println!("criterion 9 {:<22} PASS  {detail}", "throughput"),
        Err(detail) => println!("criterion 9 {:<22} BELOW TARGET (soft)  {detail}", "throughput"),
    }

    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
