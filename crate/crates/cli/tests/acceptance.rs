//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line for
//! each, and exits non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use sha2::{Digest, Sha256};

use weapo::baselines::{
    convert_abstain, ds_fit, ds_posterior, fs_fit, fs_from_moments, DsConfig, DsModel, SignedVotes,
    DEFAULT_EPS_CLIP,
};
use weapo::covering::{build_constraints, covers, hasse_edges};
use weapo::data::{read_dataset, write_dataset};
use weapo::endmodel::{fit_krr, predict_krr};
use weapo::metrics::{evaluate_label_model, pr_auc, roc_auc};
use weapo::model::{fit_label_model, FitOptions, ModelKind};
use weapo::synth::{generate, oracle_posterior, oracle_posteriors, population_moments, SyntheticSpec};
use weapo::weapo::{fit, WeapoConfig};
use weapo::{Dataset, Label, LabelModel, Prior, Record, VoteVector};

const BIN: &str = env!("CARGO_BIN_EXE_weapo");

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($msg)+));
        }
    };
}

fn within(elapsed: Duration, limit_secs: u64) -> Outcome {
    if elapsed <= Duration::from_secs(limit_secs) {
        Ok(format!("{:.2}s (limit {limit_secs}s)", elapsed.as_secs_f64()))
    } else {
        Err(format!("took {:.2}s, limit {limit_secs}s", elapsed.as_secs_f64()))
    }
}

/// Random covered dataset with `M <= 8`, `N <= 500` and a prior inside the
/// range of attainable mean scores.
struct RandomCase {
    dataset: Dataset,
    prior: Prior,
}

fn random_suite(seed: u64, count: usize) -> Vec<RandomCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let m = rng.random_range(1..=8usize);
            let n = rng.random_range(1..=500usize);
            let rates: Vec<f64> = (0..m).map(|_| rng.random_range(0.02..0.7)).collect();
            let mut rows: Vec<Vec<u8>> = (0..n)
                .map(|_| rates.iter().map(|&r| u8::from(rng.random_bool(r))).collect())
                .collect();
            if rows.iter().all(|r| r.iter().all(|&b| b == 0)) {
                rows[0][0] = 1;
            }
            let prior = Prior::new(rng.random_range(0.05..0.6)).unwrap();
            RandomCase {
                dataset: Dataset::from_votes(&rows).unwrap(),
                prior,
            }
        })
        .collect()
}

fn scores(theta: &[f64], d: &Dataset) -> Vec<f64> {
    d.votes().map(|v| v.dot(theta)).collect()
}

fn c1_feasibility(suite: &[RandomCase]) -> Outcome {
    let start = Instant::now();
    let mut worst_hinge = 0.0f64;
    for (i, case) in suite.iter().enumerate() {
        let m = fit(&case.dataset, Some(case.prior), &WeapoConfig::default()).map_err(|e| format!("case {i}: {e}"))?;
        let sum: f64 = m.theta.iter().sum();
        ensure!(m.theta.iter().all(|&t| t >= -1e-12), "case {i}: negative theta {:?}", m.theta);
        ensure!((sum - 1.0).abs() <= 1e-9, "case {i}: sum theta = {sum}");
        let (_, a) = build_constraints(&case.dataset);
        for h in a.apply(&scores(&m.theta, &case.dataset)) {
            worst_hinge = worst_hinge.max(h.max(0.0));
        }
        ensure!(worst_hinge <= 1e-12, "case {i}: hinge {worst_hinge}");
    }
    let t = within(start.elapsed(), 30)?;
    Ok(format!("{} datasets, max hinge {worst_hinge:e}, {t}", suite.len()))
}

fn c2_uniform(suite: &[RandomCase]) -> Outcome {
    let mut worst = 0.0f64;
    for (i, case) in suite.iter().enumerate() {
        let m = fit(&case.dataset, None, &WeapoConfig::without_prior()).map_err(|e| format!("case {i}: {e}"))?;
        let u = 1.0 / m.theta.len() as f64;
        let dev = m.theta.iter().map(|t| (t - u).abs()).fold(0.0, f64::max);
        worst = worst.max(dev);
        ensure!(dev <= 1e-6, "case {i}: |theta - uniform|_inf = {dev}");
    }
    Ok(format!("max deviation {worst:e} over {} datasets", suite.len()))
}

fn c3_prior_matching() -> Outcome {
    // Each spec admits a simplex theta whose mean score equals p_plus:
    // p_plus lies between the smallest and largest LF firing rate.
    let specs = [
        SyntheticSpec::new(0.3, vec![0.9, 0.8, 0.7, 0.6, 0.5], vec![0.2, 0.15, 0.1, 0.05, 0.05], 20_000, 31),
        SyntheticSpec::new(0.2, vec![0.8, 0.6, 0.5, 0.4], vec![0.1, 0.05, 0.05, 0.02], 20_000, 32),
        SyntheticSpec::new(0.4, vec![0.95, 0.7, 0.6, 0.3, 0.2, 0.1], vec![0.3, 0.2, 0.1, 0.05, 0.02, 0.01], 20_000, 33),
        SyntheticSpec::new(0.25, vec![0.9, 0.5, 0.3], vec![0.15, 0.1, 0.02], 20_000, 34),
        SyntheticSpec::new(0.35, vec![0.85, 0.75, 0.65, 0.55, 0.45, 0.35, 0.25, 0.15], vec![0.25, 0.2, 0.15, 0.1, 0.05, 0.05, 0.02, 0.01], 20_000, 35),
    ];
    let mut gaps = Vec::new();
    for (i, spec) in specs.iter().enumerate() {
        let d = generate(spec).unwrap();
        let rates = d.fire_rates();
        let lo = rates.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = rates.iter().copied().fold(0.0, f64::max);
        ensure!(lo <= spec.p_plus && spec.p_plus <= hi, "spec {i}: p_plus not attainable ({lo}, {hi})");
        let m = fit(&d, Some(Prior::new(spec.p_plus).unwrap()), &WeapoConfig::default()).map_err(|e| e.to_string())?;
        let mean = scores(&m.theta, &d).iter().sum::<f64>() / d.len() as f64;
        gaps.push((mean - spec.p_plus).abs());
    }
    let listed: Vec<String> = gaps.iter().map(|g| format!("{g:.4}")).collect();
    ensure!(gaps.iter().all(|&g| g <= 0.02), "|mean f - p_plus| per spec {listed:?}, limit 0.02");
    Ok(format!("|mean f - p_plus| per spec {listed:?}"))
}

fn c4_covering() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut rows_checked = 0usize;
    for set in 0..200 {
        let m = rng.random_range(1..=6usize);
        let size = rng.random_range(1..=(1usize << m));
        let vectors: Vec<VoteVector> = (0..size)
            .map(|_| VoteVector::from_mask(rng.random_range(0..(1u64 << m)), m))
            .collect();
        let mut uniq = vectors.clone();
        uniq.sort();
        uniq.dedup();
        let k = uniq.len();
        let index = |v: &VoteVector| uniq.binary_search(v).unwrap();
        let mut reach = vec![vec![false; k]; k];
        for e in hasse_edges(&vectors) {
            reach[index(&e.low)][index(&e.high)] = true;
        }
        for mid in 0..k {
            for a in 0..k {
                if reach[a][mid] {
                    let via = reach[mid].clone();
                    for (b, &r) in via.iter().enumerate() {
                        reach[a][b] |= r;
                    }
                }
            }
        }
        for a in 0..k {
            for b in 0..k {
                let brute = covers(&uniq[b], &uniq[a]).unwrap();
                ensure!(reach[a][b] == brute, "set {set}: closure({}, {}) = {} but covers = {brute}", uniq[a], uniq[b], reach[a][b]);
            }
        }
        let rows: Vec<Vec<u8>> = vectors
            .iter()
            .flat_map(|v| std::iter::repeat_n(v.bits().to_vec(), 1 + (v.count_ones() % 3)))
            .collect();
        let d = Dataset::from_votes(&rows).unwrap();
        let (_, a) = build_constraints(&d);
        for r in 0..a.num_rows() {
            ensure!(a.row_sum(r) == 0.0, "set {set}: row {r} sums to {}", a.row_sum(r));
        }
        rows_checked += a.num_rows();
    }
    Ok(format!("200 sets, {rows_checked} rows with zero sum"))
}

fn pair_count(s: &[f64], l: &[Label]) -> f64 {
    let mut doubled = 0u64;
    let (mut p, mut n) = (0u64, 0u64);
    for (i, li) in l.iter().enumerate() {
        if li.is_positive() {
            p += 1;
        } else {
            n += 1;
            continue;
        }
        for (j, lj) in l.iter().enumerate() {
            if !lj.is_positive() {
                doubled += if s[i] > s[j] { 2 } else if s[i] == s[j] { 1 } else { 0 };
            }
        }
    }
    doubled as f64 / (2 * p * n) as f64
}

fn rank_walk(s: &[f64], l: &[Label]) -> f64 {
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let n_pos = l.iter().filter(|x| x.is_positive()).count();
    let mut tp = 0usize;
    let mut acc = 0.0;
    for (k, &i) in order.iter().enumerate() {
        if l[i].is_positive() {
            tp += 1;
            acc += tp as f64 / (k + 1) as f64;
        }
    }
    acc / n_pos as f64
}

fn c5_metrics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for inst in 0..1000 {
        let n = rng.random_range(2..=500usize);
        let levels = rng.random_range(2..=20u32);
        let mut labels: Vec<Label> = (0..n)
            .map(|_| if rng.random_bool(0.4) { Label::Positive } else { Label::Negative })
            .collect();
        labels[0] = Label::Positive;
        labels[1] = Label::Negative;
        let tied: Vec<f64> = (0..n).map(|_| rng.random_range(0..levels) as f64 / levels as f64).collect();
        let got = roc_auc(&tied, &labels).unwrap();
        let want = pair_count(&tied, &labels);
        ensure!(got.to_bits() == want.to_bits(), "instance {inst}: roc {got} vs oracle {want}");

        let distinct: Vec<f64> = (0..n).map(|i| rng.random::<f64>() + i as f64 * 1e-9).collect();
        let got = pr_auc(&distinct, &labels).unwrap();
        let want = rank_walk(&distinct, &labels);
        ensure!(got.to_bits() == want.to_bits(), "instance {inst}: ap {got} vs oracle {want}");
        let got = roc_auc(&distinct, &labels).unwrap();
        ensure!(got.to_bits() == pair_count(&distinct, &labels).to_bits(), "instance {inst}: tie-free roc");
    }
    use Label::{Negative as N, Positive as P};
    let roc = roc_auc(&[0.9, 0.2, 0.8, 0.4], &[P, P, N, N]).unwrap();
    ensure!(roc == 0.5, "hand roc {roc}, want 0.5");
    let ap = pr_auc(&[0.9, 0.8, 0.3, 0.2], &[P, N, P, N]).unwrap();
    ensure!(ap == (1.0 + 2.0 / 3.0) / 2.0, "hand ap {ap}, want 0.8333");
    Ok(format!("1000 instances exact; hand values roc {roc}, ap {ap:.4}"))
}

fn ds_monotone(fit: &weapo::baselines::DsFit) -> Result<(), String> {
    for w in fit.log_likelihoods.windows(2) {
        ensure!(w[1] >= w[0] - 1e-10, "log-likelihood decreased {} -> {}", w[0], w[1]);
    }
    Ok(())
}

fn c6_ds() -> Outcome {
    let start = Instant::now();
    let (tpr, fpr) = (vec![0.9, 0.8, 0.7], vec![0.1, 0.2, 0.3]);
    let spec = SyntheticSpec::new(0.4, tpr.clone(), fpr.clone(), 10_000, 606);
    let truth = DsModel::from_rates(spec.p_plus, &tpr, &fpr);

    let mut worst_post = 0.0f64;
    let oracle_specs = [
        spec.clone(),
        SyntheticSpec::new(0.2, vec![0.7, 0.6, 0.5, 0.4, 0.3], vec![0.1, 0.1, 0.05, 0.05, 0.02], 1, 0),
        SyntheticSpec::new(0.7, vec![1.0, 0.5, 0.2, 0.9], vec![0.0, 0.5, 0.01, 0.3], 1, 0),
    ];
    for s in &oracle_specs {
        let model = DsModel::from_rates(s.p_plus, &s.tpr, &s.fpr);
        for e in oracle_posteriors(s).unwrap().entries() {
            let got = ds_posterior(&model, &SignedVotes::from(&e.votes));
            worst_post = worst_post.max((got - e.posterior).abs());
        }
    }
    ensure!(worst_post <= 1e-12, "posterior differs from oracle by {worst_post:e}");

    let d = generate(&spec).unwrap();
    let fitted = ds_fit(&convert_abstain(&d), Prior::new(0.5).unwrap(), &DsConfig::default()).map_err(|e| e.to_string())?;
    ds_monotone(&fitted)?;
    let mut worst = (fitted.model.class_prior - truth.class_prior).abs();
    for (a, b) in fitted.model.confusion.iter().zip(&truth.confusion) {
        for c in 0..2 {
            for o in 0..2 {
                worst = worst.max((a[c][o] - b[c][o]).abs());
            }
        }
    }
    ensure!(worst <= 0.05, "parameter error {worst}");

    let mut runs = 1;
    for seed in 0..20u64 {
        let s = SyntheticSpec::new(0.3, vec![0.7, 0.6, 0.5, 0.4], vec![0.1, 0.1, 0.05, 0.05], 2000, seed);
        let f = ds_fit(&convert_abstain(&generate(&s).unwrap()), Prior::new(0.5).unwrap(), &DsConfig::default())
            .map_err(|e| e.to_string())?;
        ds_monotone(&f)?;
        runs += 1;
    }
    let t = within(start.elapsed(), 10)?;
    Ok(format!("posterior err {worst_post:e}, recovery err {worst:.4}, {runs} monotone runs, {t}"))
}

fn symmetric(p: f64, acc: &[f64], n: usize, seed: u64) -> SyntheticSpec {
    let tpr = acc.iter().map(|a| (1.0 + a) / 2.0).collect();
    let fpr = acc.iter().map(|a| (1.0 - a) / 2.0).collect();
    SyntheticSpec::new(p, tpr, fpr, n, seed)
}

fn c7_fs() -> Outcome {
    let prior = Prior::new(0.3).unwrap();
    let worked = symmetric(0.3, &[0.8, 0.6, 0.5], 1, 0);
    let m = fs_from_moments(&population_moments(&worked).unwrap(), prior, DEFAULT_EPS_CLIP).map_err(|e| e.to_string())?;
    let a1 = m.mean_accuracies[0];
    ensure!((a1 - 0.8).abs() <= 1e-9, "a_1 = {a1}");

    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let k = rng.random_range(3..=8usize);
        let acc: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..0.95)).collect();
        let spec = symmetric(rng.random_range(0.05..0.95), &acc, 1, 0);
        let m = fs_from_moments(&population_moments(&spec).unwrap(), prior, DEFAULT_EPS_CLIP).map_err(|e| e.to_string())?;
        for (a, b) in m.mean_accuracies.iter().zip(&acc) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure!(worst <= 1e-9, "exact recovery error {worst:e}");

    let acc = [0.8, 0.6, 0.5, 0.7, 0.4];
    let sampled = symmetric(0.3, &acc, 20_000, 708);
    let m = fs_fit(&convert_abstain(&generate(&sampled).unwrap()), prior, DEFAULT_EPS_CLIP).map_err(|e| e.to_string())?;
    let sampled_err = m
        .mean_accuracies
        .iter()
        .zip(&acc)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    ensure!(sampled_err <= 0.05, "sampled recovery error {sampled_err}");
    Ok(format!("worked a_1 = {a1:.12}, exact err {worst:e}, sampled err {sampled_err:.4}"))
}

fn check_monotone(model: &LabelModel, d: &Dataset) -> Result<usize, String> {
    let mut vs: Vec<VoteVector> = d.votes().cloned().collect();
    vs.sort();
    vs.dedup();
    let s: Vec<f64> = vs.iter().map(|v| model.score(v).unwrap()).collect();
    let mut pairs = 0;
    for i in 0..vs.len() {
        for j in 0..vs.len() {
            if covers(&vs[j], &vs[i]).unwrap() {
                pairs += 1;
                ensure!(s[j] >= s[i], "{}: score({}) = {} < score({}) = {}", model.kind(), vs[j], s[j], vs[i], s[i]);
            }
        }
    }
    Ok(pairs)
}

fn c8_monotone(suite: &[RandomCase], synthetic: &[Dataset]) -> Outcome {
    let opts = FitOptions::default();
    let mut pairs = 0;
    let mut datasets = 0;
    let cases = suite
        .iter()
        .map(|c| (&c.dataset, c.prior))
        .chain(synthetic.iter().map(|d| (d, Prior::new(0.3).unwrap())));
    for (d, prior) in cases {
        for kind in [ModelKind::Weapo, ModelKind::WeapoNoPrior, ModelKind::Mv] {
            let m = fit_label_model(kind, d, Some(prior), &opts).map_err(|e| e.to_string())?;
            pairs += check_monotone(&m, d)?;
        }
        datasets += 1;
    }
    Ok(format!("{datasets} datasets, {pairs} covering pairs checked"))
}

fn bayes_specs() -> Vec<SyntheticSpec> {
    vec![
        SyntheticSpec::new(0.3, vec![0.7, 0.6, 0.5, 0.4, 0.3], vec![0.1, 0.1, 0.05, 0.05, 0.02], 20_000, 901),
        SyntheticSpec::new(0.2, vec![0.9, 0.7, 0.5, 0.3, 0.2], vec![0.2, 0.1, 0.1, 0.02, 0.01], 20_000, 902),
        SyntheticSpec::new(0.5, vec![0.6, 0.6, 0.6, 0.6, 0.6], vec![0.2, 0.2, 0.2, 0.2, 0.2], 20_000, 903),
        SyntheticSpec::new(0.4, vec![0.8, 0.5, 0.4, 0.35, 0.3], vec![0.3, 0.05, 0.1, 0.02, 0.05], 20_000, 904),
        SyntheticSpec::new(0.15, vec![0.95, 0.85, 0.6, 0.5, 0.4], vec![0.15, 0.1, 0.08, 0.05, 0.03], 20_000, 905),
    ]
}

fn covered_auc(scores: &[f64], d: &Dataset) -> Result<f64, String> {
    let covered: Vec<bool> = d.votes().map(|v| v.is_covered()).collect();
    evaluate_label_model(scores, &covered, &d.gold_labels().unwrap())
        .map(|r| r.roc_auc)
        .map_err(|e| e.to_string())
}

/// Oracle ROC-AUC, per-model ROC-AUC and the test set, all on covered test records.
type SpecAucs = (f64, Vec<(ModelKind, f64)>, Dataset);

fn model_aucs(spec: &SyntheticSpec) -> Result<SpecAucs, String> {
    let train = generate(spec).unwrap();
    let test = generate(&spec.with_seed(spec.seed + 10_000)).unwrap();
    let oracle: Vec<f64> = test.votes().map(|v| oracle_posterior(spec, v).unwrap()).collect();
    let oracle_auc = covered_auc(&oracle, &test)?;
    let prior = Some(Prior::new(spec.p_plus).unwrap());
    let mut rows = Vec::new();
    for kind in ModelKind::ALL {
        let m = fit_label_model(kind, &train, prior, &FitOptions::default()).map_err(|e| format!("{kind}: {e}"))?;
        let pred = m.predict(&test).unwrap();
        rows.push((kind, covered_auc(&pred.scores, &test)?));
    }
    Ok((oracle_auc, rows, test))
}

fn c9_bayes(tests_out: &mut Vec<Dataset>) -> Outcome {
    let mut summary = Vec::new();
    for (i, spec) in bayes_specs().iter().enumerate() {
        let (oracle, rows, test) = model_aucs(spec)?;
        for (kind, auc) in &rows {
            ensure!(oracle >= auc - 0.01, "spec {i}: oracle {oracle:.4} < {kind} {auc:.4} - 0.01");
            ensure!(*auc > 0.55, "spec {i}: {kind} roc {auc:.4} <= 0.55");
        }
        let min = rows.iter().map(|r| r.1).fold(1.0, f64::min);
        summary.push(format!("oracle {oracle:.3}/min {min:.3}"));
        tests_out.push(test);
    }
    let flat = SyntheticSpec::new(0.3, vec![0.5, 0.4, 0.3, 0.2, 0.1], vec![0.5, 0.4, 0.3, 0.2, 0.1], 20_000, 909);
    let (oracle, rows, _) = model_aucs(&flat)?;
    ensure!((oracle - 0.5).abs() <= 0.05, "uninformative oracle {oracle:.4}");
    for (kind, auc) in &rows {
        ensure!((auc - 0.5).abs() <= 0.05, "uninformative {kind} roc {auc:.4}");
    }
    Ok(format!("{}; uninformative within 0.05 of 0.5", summary.join(", ")))
}

fn run(args: &[&str]) -> Result<std::process::Output, String> {
    let out = Command::new(BIN).args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("weapo {}: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out)
}

fn c10_end_model() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let x: Vec<Vec<f64>> = (0..60).map(|_| vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)]).collect();
    let t: Vec<f64> = (0..60).map(|_| rng.random::<f64>()).collect();
    let m = fit_krr(&x, &t, 0.5, 0.0).map_err(|e| e.to_string())?;
    let interp = predict_krr(&m, &x)
        .unwrap()
        .iter()
        .zip(&t)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    ensure!(interp <= 1e-6, "interpolation error {interp:e}");

    let m = fit_krr(&[vec![0.0], vec![1.0]], &[0.0, 1.0], 1.0, 0.1).map_err(|e| e.to_string())?;
    let (a, b) = (1.1f64, (-1.0f64).exp());
    let det = a * a - b * b;
    let closed = [-b / det, a / det];
    let coef_err = (m.coefficients[0] - closed[0]).abs().max((m.coefficients[1] - closed[1]).abs());
    ensure!(coef_err <= 1e-10, "closed-form error {coef_err:e}");

    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let synth = |seed: &str, n: &str, out: &str| {
        run(&["synth", "--n", n, "--seed", seed, "--feature-dim", "2", "--separation", "4", "--sigma", "1", "--out", out, "--quiet"])
    };
    synth("1001", "1500", &p("train.jsonl"))?;
    synth("1002", "1000", &p("test.jsonl"))?;
    run(&["fit", &p("train.jsonl"), "--model", "weapo", "--prior", "0.3", "--out", &p("model.json"), "--quiet"])?;
    run(&["end", &p("model.json"), &p("train.jsonl"), &p("test.jsonl"), "--out", &p("end.json"), "--quiet"])?;
    let v: Value = serde_json::from_str(&std::fs::read_to_string(p("end.json")).unwrap()).unwrap();
    let roc = v["result"]["roc_auc"].as_f64().ok_or("missing roc_auc")?;
    ensure!(roc > 0.8, "pipeline test roc {roc:.4} <= 0.8");
    let t = within(start.elapsed(), 20)?;
    Ok(format!("interp err {interp:e}, closed-form err {coef_err:e}, pipeline roc {roc:.4}, {t}"))
}

fn sha(path: &Path) -> Vec<u8> {
    Sha256::digest(std::fs::read(path).unwrap()).to_vec()
}

fn c11_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name);
    let s = |name: &str| p(name).to_string_lossy().into_owned();
    let models = ["weapo", "weapo-noprior", "mv", "ds", "fs"];
    // Identical flags both times; result files echo their paths, so they are
    // hashed in place between runs.
    let mut digests: Vec<Vec<Vec<u8>>> = Vec::new();
    for _ in 0..2 {
        run(&["synth", "--n", "3000", "--seed", "77", "--feature-dim", "3", "--out", &s("data.jsonl"), "--quiet"])?;
        let mut d = vec![sha(&p("data.jsonl")), sha(&p("data.oracle.json"))];
        for model in models {
            let out = s(&format!("{model}.json"));
            run(&["fit", &s("data.jsonl"), "--model", model, "--prior", "0.3", "--seed", "5", "--out", &out, "--quiet"])?;
            d.push(sha(Path::new(&out)));
        }
        digests.push(d);
    }
    let names: Vec<&str> = ["dataset", "oracle"].into_iter().chain(models).collect();
    for (k, name) in names.iter().enumerate() {
        ensure!(digests[0][k] == digests[1][k], "{name} output differs across runs");
    }

    let original = std::fs::read(p("data.jsonl")).unwrap();
    let d = read_dataset(original.as_slice()).map_err(|e| e.to_string())?;
    let mut rewritten = Vec::new();
    write_dataset(&d, &mut rewritten).unwrap();
    ensure!(rewritten == original, "JSONL rewrite is not byte-identical");

    let mut rng = ChaCha8Rng::seed_from_u64(1111);
    for i in 0..50 {
        let m = rng.random_range(1..=6usize);
        let f = rng.random_range(0..=3usize);
        let records: Vec<Record> = (0..rng.random_range(1..=40usize))
            .map(|k| {
                let v = VoteVector::from_mask(rng.random_range(0..(1u64 << m)), m);
                let mut r = Record::new(format!("r{k}"), v);
                if f > 0 {
                    r = r.with_features((0..f).map(|_| rng.random::<f64>() * 1e3 - 5e2).collect());
                }
                if rng.random_bool(0.7) {
                    r = r.with_gold(if rng.random_bool(0.5) { Label::Positive } else { Label::Negative });
                }
                r
            })
            .collect();
        let d = Dataset::new(records, m, None).unwrap();
        let mut buf = Vec::new();
        write_dataset(&d, &mut buf).unwrap();
        let back = read_dataset(buf.as_slice()).map_err(|e| e.to_string())?;
        ensure!(back == d, "dataset {i} changed on round trip");
    }
    Ok("synth, oracle and 5 model files byte-identical; JSONL round trips exact".into())
}

fn main() -> ExitCode {
    let suite = random_suite(1, 100);
    let mut bayes_tests = Vec::new();
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let mut check = |name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        results.push((name, outcome));
    };
    check("1 simplex feasibility and hinge vanishing", &mut || c1_feasibility(&suite));
    check("2 uniform optimum without prior", &mut || c2_uniform(&suite));
    check("3 prior matching", &mut c3_prior_matching);
    check("4 covering order and zero row sums", &mut c4_covering);
    check("5 metric oracles", &mut c5_metrics);
    check("6 Dawid-Skene correctness", &mut c6_ds);
    check("7 triplet method correctness", &mut c7_fs);
    check("9 Bayes dominance", &mut || c9_bayes(&mut bayes_tests));
    check("8 score monotonicity", &mut || c8_monotone(&suite, &bayes_tests));
    check("10 end model", &mut c10_end_model);
    check("11 determinism and round trip", &mut c11_determinism);

    results.sort_by_key(|(name, _)| name.split(' ').next().unwrap().parse::<u32>().unwrap());
    let mut failed = 0;
    println!();
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail}");
            }
        }
    }
    println!("\nacceptance: {} passed, {failed} failed\n", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
