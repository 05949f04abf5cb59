//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::Instant;

use appletaste::experiments::{
    adversary_experiment, default_trichotomy_cases, eval_seeds, run_seeds, trichotomy,
    AdversarySettings, SweepSummary,
};
use appletaste::formats::transcript_csv;
use appletaste_core::adversary::{
    greedy_worst_stream, lower_bound_tree, plan_adversary, realize_stream,
};
use appletaste_core::dimensions::{
    aldim, brute_force_aldim, effective_width, ldim, AppleNode, DimensionCache,
};
use appletaste_core::hypothesis::{DimValue, Quantity};
use appletaste_core::learners::{
    loss_estimate, ConstrainedSoa, DetLdim1, DetW1, Exp4At, ExpertSet, FixedAdvice, Learner,
    LearnerSpec, DEFAULT_EXPERT_CAP, LEARNER_KINDS,
};
use appletaste_core::protocol::{run_game, FeedbackMode};
use appletaste_core::rngs::{seeded, SimRng};
use appletaste_core::{HypothesisClass, Label, LabeledStream};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_class(rng: &mut SimRng, max_x: usize, max_h: usize) -> HypothesisClass {
    let n = rng.gen_range(1..=max_x);
    let m = rng.gen_range(1..=max_h);
    let rows: Vec<Vec<u8>> = (0..m)
        .map(|_| (0..n).map(|_| rng.gen_range(0..=1)).collect())
        .collect();
    HypothesisClass::from_rows(&rows).unwrap()
}

fn oracle_sweep_classes() -> Vec<HypothesisClass> {
    let mut rng = seeded(0xC1);
    (0..240).map(|_| random_class(&mut rng, 4, 8)).collect()
}

fn c1_oracle_equivalence() -> Outcome {
    let mut comparisons = 0;
    for (i, class) in oracle_sweep_classes().iter().enumerate() {
        let full = class.full_space();
        for w in 1..=4 {
            let fast = aldim(class, &full, w).map_err(|e| e.to_string())?;
            let brute = brute_force_aldim(class, &full, w).map_err(|e| e.to_string())?;
            check(fast == brute, || {
                format!("class {i} width {w}: recursion {fast}, brute force {brute}")
            })?;
            comparisons += 1;
        }
        let l = ldim(class, &full).map_err(|e| e.to_string())?;
        let at = aldim(class, &full, l + 1).map_err(|e| e.to_string())?;
        check(at == l, || {
            format!("class {i}: ldim {l} but aldim at width {} is {at}", l + 1)
        })?;
    }
    Ok(format!(
        "240 classes, {comparisons} width comparisons, all exact"
    ))
}

fn c2_structure() -> Outcome {
    for (i, class) in oracle_sweep_classes().iter().enumerate() {
        let full = class.full_space();
        let l = ldim(class, &full).map_err(|e| e.to_string())?;
        let mut prev = u32::MAX;
        for w in 1..=l + 3 {
            let a = aldim(class, &full, w).map_err(|e| e.to_string())?;
            check(a <= prev, || {
                format!("class {i}: aldim rises from {prev} to {a} at width {w}")
            })?;
            check(a >= w.min(l), || {
                format!("class {i}: aldim {a} below min(w = {w}, ldim = {l})")
            })?;
            prev = a;
        }
        let width = effective_width(class, &full)
            .map_err(|e| e.to_string())?
            .finite;
        check(width <= l + 1, || {
            format!("class {i}: effective width {width} above ldim + 1")
        })?;
    }
    let sing = HypothesisClass::singletons(6).unwrap();
    let fam = sing
        .family()
        .unwrap()
        .lookup(Quantity::EffectiveWidth)
        .unwrap();
    check(fam.value == DimValue::Finite(2), || {
        format!("singletons family width {:?}", fam.value)
    })?;
    let power = HypothesisClass::powerset(3, 16).unwrap();
    let full = power.full_space();
    let (l, a1) = (
        ldim(&power, &full).unwrap(),
        aldim(&power, &full, 1).unwrap(),
    );
    check(l == 3 && a1 == 3, || {
        format!("powerset d=3: ldim {l}, aldim_1 {a1}")
    })?;
    Ok("240 classes: monotone in width, floor min(w, ldim), width <= ldim + 1; powerset d=3 gives 3 = 3".into())
}

fn budget_classes() -> Vec<Arc<HypothesisClass>> {
    let mut rng = seeded(0xC3);
    let mut out: Vec<Arc<HypothesisClass>> = (0..22)
        .map(|_| Arc::new(random_class(&mut rng, 3, 6)))
        .collect();
    out.push(Arc::new(HypothesisClass::singletons(4).unwrap()));
    out.push(Arc::new(HypothesisClass::kwise(3, 2).unwrap()));
    out.push(Arc::new(HypothesisClass::powerset(2, 16).unwrap()));
    out
}

const SWEEP_LEN: usize = 6;

fn c3_constrained_budgets() -> Outcome {
    let mut streams = 0usize;
    let mut fp_rounds = 0usize;
    let mut failure: Option<String> = None;
    let mut cache = DimensionCache::new();
    for (i, class) in budget_classes().iter().enumerate() {
        let full = class.full_space();
        let l = ldim(class, &full).map_err(|e| e.to_string())?;
        for w in 1..=l + 1 {
            let fp_budget = aldim(class, &full, w).unwrap() as usize;
            let mut learner = ConstrainedSoa::new(class.clone(), w).unwrap();
            let mut rng = seeded(0);
            class.for_each_realizable_stream(SWEEP_LEN, |rounds| {
                if failure.is_some() {
                    return;
                }
                streams += 1;
                learner.reset();
                let (mut fp, mut fneg) = (0usize, 0usize);
                for (t, &(x, y)) in rounds.iter().enumerate() {
                    let (w0, v0) = (learner.width(), learner.version_space().clone());
                    let before = cache.aldim(class, &v0, w0).unwrap();
                    let yhat = learner.predict(x, &mut rng).unwrap();
                    if let Err(e) = learner.update(x, yhat, Some(y)) {
                        failure = Some(format!("class {i} w {w} round {t}: {e}"));
                        return;
                    }
                    let w1 = learner.width();
                    let fn_round = !yhat.is_one() && y.is_one();
                    if w1 != if fn_round { w0 - 1 } else { w0 } {
                        failure = Some(format!("class {i} w {w} round {t}: width {w0} -> {w1}"));
                        return;
                    }
                    if yhat.is_one() && !y.is_one() {
                        fp += 1;
                        fp_rounds += 1;
                        let after = cache.aldim(class, learner.version_space(), w1).unwrap();
                        if after + 1 > before {
                            failure = Some(format!("class {i} w {w} round {t}: potential {before} -> {after}"));
                            return;
                        }
                    }
                    fneg += fn_round as usize;
                }
                if fneg + 1 > w as usize || fp > fp_budget {
                    failure = Some(format!("class {i} w {w}: {fp} false positives (budget {fp_budget}), {fneg} false negatives"));
                }
            });
        }
    }
    match failure {
        Some(f) => Err(f),
        None => Ok(format!(
            "{} classes, {streams} realizable streams of length {SWEEP_LEN}, {fp_rounds} false-positive rounds, zero violations",
            budget_classes().len()
        )),
    }
}

fn c4_width_one_learner() -> Outcome {
    let mut streams = 0usize;
    let mut worst_gap = i64::MIN;
    for (i, class) in budget_classes().iter().enumerate() {
        let bound = aldim(class, &class.full_space(), 1).unwrap() as usize;
        let mut det = DetW1::new(class.clone());
        let mut bad = None;
        class.for_each_realizable_stream(SWEEP_LEN, |rounds| {
            streams += 1;
            let t = run_game(
                &mut det,
                &LabeledStream::new(rounds.to_vec()),
                FeedbackMode::AppleTasting,
                0,
            );
            worst_gap = worst_gap.max(t.mistakes as i64 - bound as i64);
            if !t.is_complete() || t.mistakes > bound {
                bad.get_or_insert(format!(
                    "class {i}: {} mistakes against bound {bound} ({:?})",
                    t.mistakes, t.error
                ));
            }
        });
        if let Some(b) = bad {
            return Err(b);
        }
    }
    let mut flipped_max = 0;
    for n in 2..=4 {
        let class = Arc::new(HypothesisClass::flipped_singletons(n).unwrap());
        let mut det = DetW1::new(class.clone());
        class.for_each_realizable_stream(SWEEP_LEN, |rounds| {
            let t = run_game(
                &mut det,
                &LabeledStream::new(rounds.to_vec()),
                FeedbackMode::AppleTasting,
                0,
            );
            flipped_max = flipped_max.max(t.mistakes);
        });
    }
    check(flipped_max <= 1, || {
        format!("flipped singletons: {flipped_max} mistakes")
    })?;
    Ok(format!(
        "{streams} streams within aldim_1 (tightest slack {}); flipped singletons n=2..4 at most {flipped_max} mistake",
        -worst_gap
    ))
}

fn c5_ldim_one_learner() -> Outcome {
    let mut parts = Vec::new();
    for horizon in [16usize, 25, 64] {
        let class = Arc::new(HypothesisClass::singletons(horizon).unwrap());
        let threshold = DetLdim1::threshold_for(horizon);
        check(threshold as usize * threshold as usize >= horizon, || {
            format!("threshold {threshold}")
        })?;
        let mut learner = DetLdim1::new(class.clone(), threshold).map_err(|e| e.to_string())?;
        let bound = 1.0 + 2.0 * (horizon as f64).sqrt();
        let worst =
            greedy_worst_stream(&class, &mut learner, horizon, FeedbackMode::AppleTasting, 0)
                .map_err(|e| e.to_string())?;
        check(class.is_realizable(&worst.stream), || {
            "greedy stream not realizable".into()
        })?;
        let mut streams = vec![worst.stream.clone()];
        let xs: Vec<usize> = (0..horizon).collect();
        streams.extend((0..horizon).step_by(7).map(|h| class.label_stream(h, &xs)));
        let mut max = 0;
        for (k, s) in streams.iter().enumerate() {
            for seed in 0..5 {
                let t = run_game(&mut learner, s, FeedbackMode::AppleTasting, seed);
                check(t.is_complete(), || {
                    format!("T={horizon} stream {k}: {:?}", t.error)
                })?;
                check(t.mistakes as f64 <= bound, || {
                    format!(
                        "T={horizon} stream {k}: {} mistakes > {bound:.2}",
                        t.mistakes
                    )
                })?;
                max = max.max(t.mistakes);
            }
        }
        parts.push(format!(
            "T={horizon}: greedy {} / max {max} <= {bound:.2}",
            worst.mistakes
        ));
    }
    Ok(parts.join("; "))
}

fn c6_conversion_bound() -> Outcome {
    const SEEDS: usize = 10_000;
    let class = Arc::new(HypothesisClass::singletons(32).unwrap());
    let full = class.full_space();
    let mut parts = Vec::new();
    for width in [1u32, 2] {
        let plus = aldim(&class, &full, width).unwrap() as f64;
        let minus = (width - 1) as f64;
        for horizon in [64usize, 256] {
            let bound = plus + 2.0 * (horizon as f64 * minus).sqrt();
            let spec = LearnerSpec::Conversion {
                width,
                false_negative_budget: None,
            };
            let mut learner = spec
                .build(class.clone(), horizon)
                .map_err(|e| e.to_string())?;
            let tree = lower_bound_tree(&class, 1, horizon).map_err(|e| e.to_string())?;
            let mut worst_mean = f64::MIN;
            for plan_seed in 0..3u64 {
                let plan = plan_adversary(&class, &tree, learner.as_mut(), 200, plan_seed)
                    .map_err(|e| e.to_string())?;
                let stream = realize_stream(&plan, horizon).map_err(|e| e.to_string())?;
                let outcomes = run_seeds(
                    &class,
                    learner.as_ref(),
                    &stream,
                    FeedbackMode::AppleTasting,
                    &eval_seeds(plan_seed, SEEDS),
                    0,
                )
                .map_err(|e| e.to_string())?;
                let s = SweepSummary::of(&outcomes);
                check(s.errors == 0, || {
                    format!("w={width} T={horizon}: {} runs failed", s.errors)
                })?;
                check(s.mistakes.mean <= bound + 3.0 * s.mistakes.std_err, || {
                    format!(
                        "w={width} T={horizon} plan {plan_seed}: mean {:.3} ± {:.3} > bound {bound:.2}",
                        s.mistakes.mean, s.mistakes.std_err
                    )
                })?;
                worst_mean = worst_mean.max(s.mistakes.mean);
            }
            parts.push(format!(
                "w={width} T={horizon}: {worst_mean:.2} <= {bound:.2}"
            ));
        }
    }
    Ok(format!(
        "{SEEDS} seeds per stream, 3 planned streams per cell; {}",
        parts.join("; ")
    ))
}

const EXPERTS: usize = 8;
const EXP_HORIZON: usize = 1000;

fn expert_table() -> Vec<Vec<Label>> {
    let mut rng = seeded(0xC7);
    let mut table: Vec<Vec<Label>> = (0..EXPERTS - 2)
        .map(|i| {
            let p = 0.2 + 0.1 * i as f64;
            (0..EXP_HORIZON)
                .map(|_| Label::from_bool(rng.gen_bool(p)))
                .collect()
        })
        .collect();
    table.push(vec![Label::Zero; EXP_HORIZON]);
    table.push(vec![Label::One; EXP_HORIZON]);
    table
}

fn label_sequences(table: &[Vec<Label>]) -> Vec<(String, Vec<Label>)> {
    let mut rng = seeded(0xC8);
    let mut out = Vec::new();
    for p in [0.5, 0.5, 0.2, 0.8, 0.35] {
        out.push((
            format!("bernoulli({p})"),
            (0..EXP_HORIZON)
                .map(|_| Label::from_bool(rng.gen_bool(p)))
                .collect(),
        ));
    }
    let majority: Vec<Label> = (0..EXP_HORIZON)
        .map(|t| Label::from_bool(table.iter().filter(|e| e[t].is_one()).count() * 2 > table.len()))
        .collect();
    out.push((
        "against majority".into(),
        majority.iter().map(|y| y.flip()).collect(),
    ));
    out.push((
        "noisy expert 3".into(),
        table[3]
            .iter()
            .map(|&y| if rng.gen_bool(0.1) { y.flip() } else { y })
            .collect(),
    ));
    out.push((
        "switching".into(),
        (0..EXP_HORIZON)
            .map(|t| Label::from_bool((t / 100) % 2 == 0))
            .collect(),
    ));
    out.push((
        "against expert 5".into(),
        table[5].iter().map(|y| y.flip()).collect(),
    ));
    out.push(("all zero".into(), vec![Label::Zero; EXP_HORIZON]));
    out
}

fn c7_exponential_weights() -> Outcome {
    const SEEDS: u64 = 240;
    let table = expert_table();
    let bound = 3.0 * (EXP_HORIZON as f64 * (EXPERTS as f64).ln()).sqrt();
    let learner = Exp4At::with_horizon(
        Box::new(FixedAdvice::new(table.clone()).unwrap()),
        EXP_HORIZON,
    )
    .unwrap();
    let eta = learner.eta();
    let mut min_p1 = f64::MAX;
    let mut observed_p1 = Vec::new();
    let mut worst = (f64::MIN, String::new());
    for (name, labels) in label_sequences(&table) {
        let stream = LabeledStream::new(labels.iter().map(|&y| (0, y)).collect());
        let best = table
            .iter()
            .map(|e| e.iter().zip(&labels).filter(|(a, b)| a != b).count())
            .min()
            .unwrap();
        let mut regrets = Vec::new();
        let mut l = learner.clone();
        for seed in 0..SEEDS {
            let t = run_game(&mut l, &stream, FeedbackMode::AppleTasting, seed);
            check(t.is_complete(), || format!("{name}: {:?}", t.error))?;
            for r in &t.rounds {
                let p = r.p1.ok_or("missing p1")?;
                min_p1 = min_p1.min(p);
                check(p >= eta, || {
                    format!("{name} round {}: p1 {p} below eta {eta}", r.round)
                })?;
            }
            if seed == 0 {
                observed_p1.extend([0, 10, 500, 999].iter().map(|&i| t.rounds[i].p1.unwrap()));
            }
            regrets.push(t.mistakes as f64 - best as f64);
        }
        let s = appletaste_core::stats::SampleSummary::from_samples(&regrets);
        check(s.mean <= bound + 3.0 * s.std_err, || {
            format!(
                "{name}: mean regret {:.2} ± {:.2} > {bound:.2}",
                s.mean, s.std_err
            )
        })?;
        if s.mean > worst.0 {
            worst = (s.mean, name);
        }
    }
    const SAMPLES: usize = 100_000;
    let mut rng = seeded(0xC9);
    let mut cells = 0;
    observed_p1.extend([eta, 0.5, 1.0]);
    for &p1 in &observed_p1 {
        for truth in [Label::Zero, Label::One] {
            for y in [Label::Zero, Label::One] {
                let xs: Vec<f64> = (0..SAMPLES)
                    .map(|_| loss_estimate(y, truth, Label::from_bool(rng.gen::<f64>() < p1), p1))
                    .collect();
                let s = appletaste_core::stats::SampleSummary::from_samples(&xs);
                let target = (y != truth) as u8 as f64;
                let exact_se = (target * (1.0 / p1 - 1.0) / SAMPLES as f64).sqrt();
                let se = s.std_err.max(exact_se);
                check((s.mean - target).abs() <= 3.0 * se + 1e-12, || {
                    format!("estimate at p1 {p1}: mean {} vs {target} (se {se})", s.mean)
                })?;
                cells += 1;
            }
        }
    }
    Ok(format!(
        "p1 >= eta = {eta:.4} on every round (min {min_p1:.4}); {cells} unbiasedness cells x {SAMPLES} samples; \
         regret over 10 sequences x {SEEDS} seeds, worst mean {:.2} ({}) <= {bound:.2}",
        worst.0, worst.1
    ))
}

/// Instance sequences of length `len` over `n` symbols where each symbol's
/// first occurrence follows the previous symbol's, one per relabeling orbit.
fn canonical_sequences(n: usize, len: usize, visit: &mut dyn FnMut(&[usize])) {
    fn go(
        n: usize,
        len: usize,
        seq: &mut Vec<usize>,
        used: usize,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if seq.len() == len {
            visit(seq);
            return;
        }
        for x in 0..(used + 1).min(n) {
            seq.push(x);
            go(n, len, seq, used.max(x + 1), visit);
            seq.pop();
        }
    }
    go(n, len, &mut Vec::with_capacity(len), 0, visit);
}

fn covered(class: &HypothesisClass, experts: &mut ExpertSet, xs: &[usize]) -> Result<(), String> {
    let trajectories = experts.trajectories(xs).map_err(|e| e.to_string())?;
    let known: BTreeSet<&Vec<Label>> = trajectories.iter().collect();
    for h in 0..class.len() {
        let labels: Vec<Label> = xs.iter().map(|&x| class.label(h, x)).collect();
        if !known.contains(&labels) {
            return Err(format!("hypothesis {h} uncovered on {xs:?}"));
        }
    }
    Ok(())
}

fn c8_agnostic_learner() -> Outcome {
    const HORIZON: usize = 12;
    const SEEDS: usize = 600;
    let class = Arc::new(HypothesisClass::singletons(4).unwrap());
    let bound = 3.0 * (HORIZON as f64 * (HORIZON as f64).ln()).sqrt();
    let spec = LearnerSpec::AgnosticExperts { max_experts: None };
    let learner = spec
        .build(class.clone(), HORIZON)
        .map_err(|e| e.to_string())?;
    let mut rng = seeded(0xCA);
    let mut sequences: Vec<LabeledStream> = (0..120)
        .map(|_| {
            LabeledStream::new(
                (0..HORIZON)
                    .map(|_| (rng.gen_range(0..4), Label::from_bool(rng.gen_bool(0.5))))
                    .collect(),
            )
        })
        .collect();
    for x in 0..4 {
        sequences.push(LabeledStream::new(
            (0..HORIZON)
                .map(|t| ((x + t) % 4, Label::from_bool(t % 2 == 0)))
                .collect(),
        ));
        sequences.push(LabeledStream::new(vec![(x, Label::One); HORIZON]));
        sequences.push(LabeledStream::new(
            (0..HORIZON)
                .map(|t| (t % 4, Label::from_bool(t % 4 != x)))
                .collect(),
        ));
    }
    let mut worst = f64::MIN;
    for (k, s) in sequences.iter().enumerate() {
        let outcomes = run_seeds(
            &class,
            learner.as_ref(),
            s,
            FeedbackMode::AppleTasting,
            &eval_seeds(k as u64, SEEDS),
            0,
        )
        .map_err(|e| e.to_string())?;
        let sum = SweepSummary::of(&outcomes);
        check(sum.errors == 0, || format!("sequence {k}: failed runs"))?;
        check(sum.regret.mean <= bound + 3.0 * sum.regret.std_err, || {
            format!(
                "sequence {k}: mean regret {:.3} ± {:.3} > {bound:.2}",
                sum.regret.mean, sum.regret.std_err
            )
        })?;
        worst = worst.max(sum.regret.mean);
    }
    let mut orbits = 0usize;
    let mut experts =
        ExpertSet::new(class.clone(), HORIZON, DEFAULT_EXPERT_CAP).map_err(|e| e.to_string())?;
    let mut failure = None;
    canonical_sequences(4, HORIZON, &mut |xs| {
        if failure.is_none() {
            orbits += 1;
            failure = covered(&class, &mut experts, xs).err();
        }
    });
    if let Some(f) = failure {
        return Err(format!("cover: {f}"));
    }
    let mut direct = 0usize;
    for horizon in 1..=6 {
        let mut experts = ExpertSet::new(class.clone(), horizon, DEFAULT_EXPERT_CAP).unwrap();
        let total = 4usize.pow(horizon as u32);
        for code in 0..total {
            let xs: Vec<usize> = (0..horizon)
                .map(|i| (code / 4usize.pow(i as u32)) % 4)
                .collect();
            covered(&class, &mut experts, &xs).map_err(|e| format!("cover at T={horizon}: {e}"))?;
            direct += 1;
        }
    }
    Ok(format!(
        "{} sequences x {SEEDS} seeds, worst mean regret {worst:.3} <= {bound:.2}; cover holds on all {orbits} \
         relabeling orbits of length-12 sequences and all {direct} sequences of length <= 6",
        sequences.len()
    ))
}

fn c9_lower_bound() -> Outcome {
    const HORIZON: usize = 64;
    const EVAL: usize = 2000;
    const SIMS: usize = 200;
    let class = Arc::new(HypothesisClass::singletons(64).unwrap());
    let learners = [
        LearnerSpec::Exp4at {
            eta: None,
            advice: None,
        },
        LearnerSpec::Conversion {
            width: 1,
            false_negative_budget: None,
        },
        LearnerSpec::Conversion {
            width: 2,
            false_negative_budget: None,
        },
        LearnerSpec::DetW1 {},
        LearnerSpec::DetLdim1 { threshold: None },
        LearnerSpec::AgnosticExperts { max_experts: None },
        LearnerSpec::Soa {},
        LearnerSpec::Always0 {},
        LearnerSpec::Always1 {},
    ];
    let mut parts = Vec::new();
    let mut slack_noted = None;
    for (k, spec) in learners.iter().enumerate() {
        let mut learner = spec
            .build(class.clone(), HORIZON)
            .map_err(|e| e.to_string())?;
        let (report, outcomes) = adversary_experiment(
            &class,
            learner.as_mut(),
            AdversarySettings {
                width: 1,
                horizon: HORIZON,
                num_sims: SIMS,
                eval_count: EVAL,
                seed: k as u64,
                jobs: 0,
            },
        )
        .map_err(|e| format!("{}: {e}", spec.kind()))?;
        let s = &report.summary.mistakes;
        let floor = report.floor - 3.0 * s.std_err - report.slack;
        check(report.summary.errors == 0, || {
            format!("{}: failed runs", spec.kind())
        })?;
        check(s.mean >= floor, || {
            format!(
                "{}: mean {:.3} below d/4 - 3se - slack = {floor:.3}",
                spec.kind(),
                s.mean
            )
        })?;
        slack_noted = Some((report.depth, report.slack));
        if matches!(spec, LearnerSpec::Always0 {} | LearnerSpec::Always1 {}) {
            let predicts_one = matches!(spec, LearnerSpec::Always1 {});
            let mut expected_sigma = Vec::new();
            let mut node = &report.plan.tree.root;
            while let AppleNode::Internal { zero, one, .. } = node {
                expected_sigma.push(Label::from_bool(!predicts_one));
                node = if predicts_one { zero } else { one };
            }
            let p = if predicts_one { 1.0 } else { 0.0 };
            check(report.sigma == expected_sigma, || {
                format!("{}: sigma {:?}", spec.kind(), report.sigma)
            })?;
            check(report.p_hat.iter().all(|&e| e == p), || {
                format!("{}: estimates {:?}", spec.kind(), report.p_hat)
            })?;
            check(outcomes.iter().all(|o| o.mistakes == HORIZON), || {
                format!("{}: mistakes differ from T", spec.kind())
            })?;
        }
        parts.push(format!("{} {:.2}", spec.kind(), s.mean));
    }
    let (d, slack) = slack_noted.unwrap();
    Ok(format!(
        "d = {d}, floor d/4 = {:.2}, slack = {slack:.4} (delta 0.1, {SIMS} sims), {EVAL} seeds: {}; \
         always0/always1 match their forced sigma and make exactly T mistakes",
        d as f64 / 4.0,
        parts.join(", ")
    ))
}

fn c10_trichotomy() -> Outcome {
    let horizons = [16, 32, 64, 128, 256, 512];
    let report = trichotomy(&default_trichotomy_cases(), &horizons, 400, 0xCB, 0)
        .map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    for f in &report.fits {
        let exponent = f
            .fit
            .as_ref()
            .map(|p| p.exponent)
            .ok_or(format!("{}: no fit", f.case))?;
        check(f.in_band == Some(true), || {
            format!("{}: exponent {exponent:.3} outside {:?}", f.case, f.band)
        })?;
        parts.push(format!("{} alpha {exponent:.3}", f.case));
    }
    Ok(format!("T in {horizons:?}: {}", parts.join(", ")))
}

fn c11_determinism_and_firewall() -> Outcome {
    const TRIALS: usize = 150;
    let mut rng = seeded(0xCC);
    let mut firewall_trials = 0;
    let mut hidden_flips = 0;
    let mut kinds_seen = BTreeSet::new();
    let mut trial = 0;
    while trial < TRIALS {
        let class = Arc::new(random_class(&mut rng, 5, 8));
        let kind = LEARNER_KINDS[rng.gen_range(0..LEARNER_KINDS.len())];
        let horizon = rng.gen_range(5..=24);
        let spec = LearnerSpec::named(kind, Some(rng.gen_range(1..=3))).unwrap();
        let Ok(mut learner) = spec.build(class.clone(), horizon) else {
            continue;
        };
        trial += 1;
        kinds_seen.insert(kind);
        let h = rng.gen_range(0..class.len());
        let xs: Vec<usize> = (0..horizon)
            .map(|_| rng.gen_range(0..class.instance_count()))
            .collect();
        let stream = class.label_stream(h, &xs);
        let mode = if spec.needs_full_information() {
            FeedbackMode::FullInformation
        } else {
            FeedbackMode::AppleTasting
        };
        let seed = rng.gen();
        let a = run_game(learner.as_mut(), &stream, mode, seed);
        let mut fresh = spec.build(class.clone(), horizon).unwrap();
        let b = run_game(fresh.as_mut(), &stream, mode, seed);
        let (ca, cb) = (transcript_csv(&a).unwrap(), transcript_csv(&b).unwrap());
        check(ca == cb && a == b, || {
            format!("trial {trial} ({kind}): transcripts differ")
        })?;
        if mode == FeedbackMode::AppleTasting {
            let mut altered = stream.clone();
            for r in &a.rounds {
                if !r.feedback_visible && rng.gen_bool(0.7) {
                    altered.rounds[r.round].1 = r.true_label.flip();
                    hidden_flips += 1;
                }
            }
            let c = run_game(learner.as_mut(), &altered, mode, seed);
            let n = a.rounds.len().min(c.rounds.len());
            let same = a.rounds[..n]
                .iter()
                .zip(&c.rounds[..n])
                .all(|(p, q)| p.prediction == q.prediction && p.p1 == q.p1);
            check(same && a.rounds.len() <= c.rounds.len(), || {
                format!("trial {trial} ({kind}): hidden labels changed predictions")
            })?;
            firewall_trials += 1;
        }
    }
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let args = [
            "--out-dir",
            d.path().to_str().unwrap(),
            "--seed",
            "5",
            "bench",
            "--class",
            r#"{"family": "singletons", "n": 6}"#,
            "--learner",
            "exp4at",
            "--stream",
            r#"{"generator": "noisy", "noise": 0.1}"#,
            "--horizon",
            "30",
            "--seeds",
            "20",
        ];
        let out = Command::new(env!("CARGO_BIN_EXE_appletaste"))
            .args(args)
            .output()
            .map_err(|e| e.to_string())?;
        check(out.status.success(), || {
            String::from_utf8_lossy(&out.stderr).into_owned()
        })?;
    }
    for f in ["results.csv", "bench.json", "manifest.json"] {
        let (x, y) = (
            std::fs::read(dirs[0].path().join(f)).unwrap(),
            std::fs::read(dirs[1].path().join(f)).unwrap(),
        );
        check(x == y, || {
            format!("cli output {f} differs between identical runs")
        })?;
    }
    Ok(format!(
        "{TRIALS} trials over {} learner kinds byte-identical; {firewall_trials} apple-tasting trials with \
         {hidden_flips} hidden labels flipped left every prediction unchanged; CLI outputs byte-identical",
        kinds_seen.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        (1, "dimension oracle equivalence", c1_oracle_equivalence),
        (2, "structural invariants", c2_structure),
        (
            3,
            "width-constrained learner budgets",
            c3_constrained_budgets,
        ),
        (4, "width-one apple-tasting learner", c4_width_one_learner),
        (5, "ldim-one counter learner", c5_ldim_one_learner),
        (6, "conversion bound", c6_conversion_bound),
        (
            7,
            "exponential weights with apple tasting",
            c7_exponential_weights,
        ),
        (8, "agnostic expert learner", c8_agnostic_learner),
        (9, "lower-bound adversary", c9_lower_bound),
        (10, "trichotomy regimes", c10_trichotomy),
        (
            11,
            "determinism and feedback firewall",
            c11_determinism_and_firewall,
        ),
    ];
    let filter: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (id, title, f) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS C{id} {title}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL C{id} {title}: {detail} [{secs:.1}s]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
