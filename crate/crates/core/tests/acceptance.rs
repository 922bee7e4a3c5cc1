//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Run alone with `cargo test -p crisis-al-core --test acceptance`.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::panic::{self, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crisis_al_core::corpus::{Document, Label, Pool};
use crisis_al_core::engine::{drive_with_gold, gold_answers, metrics_csv, run_simulated, Session, SessionConfig};
use crisis_al_core::evaluation::{evaluate, ConfusionMatrix};
use crisis_al_core::features::{FeatureMatrix, RowRef, SpaceTag};
use crisis_al_core::filter::{classify_pool, edit_distance, EditDistanceBudget, KeywordList, MatchMode};
use crisis_al_core::model::TrainingSet;
use crisis_al_core::strategies::{QueryContext, Strategy};
use crisis_al_core::synthetic::{separable_corpus, SyntheticSpec};

type Check = fn() -> Result<String, String>;

fn main() {
    let checks: [(&str, Check); 10] = [
        ("edit distance equals the memoized recursion", edit_distance_oracle),
        ("edit distance metric identities", metric_identities),
        ("greedy core-set equals brute-force greedy", coreset_oracle),
        ("LC, PE and BT pick identical batches", uncertainty_equivalence),
        ("log-loss gradient matches finite differences", gradient_check),
        ("default simulated session protocol", protocol_conformance),
        ("LC beats random on synthetic data", lc_beats_random),
        ("evaluation arithmetic against hand rules", evaluation_arithmetic),
        ("keyword filter golden corpus", keyword_golden),
        ("checkpoint, resume and continue", persistence),
    ];
    // Failures are reported by the summary lines, not the panic hook.
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in checks {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|payload| {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    println!("{} of {} criteria passed", checks.len() - failed, checks.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// Edit distance

/// ed(x[..i], y[..j]) by direct recursion on prefixes, memoized per pair.
fn recursive_distance(x: &[char], y: &[char]) -> usize {
    fn ed(i: usize, j: usize, x: &[char], y: &[char], memo: &mut [Option<usize>], width: usize) -> usize {
        if i == 0 {
            return j;
        }
        if j == 0 {
            return i;
        }
        if let Some(v) = memo[i * width + j] {
            return v;
        }
        let v = (ed(i - 1, j, x, y, memo, width) + 1)
            .min(ed(i, j - 1, x, y, memo, width) + 1)
            .min(ed(i - 1, j - 1, x, y, memo, width) + usize::from(x[i - 1] != y[j - 1]));
        memo[i * width + j] = Some(v);
        v
    }
    let width = y.len() + 1;
    let mut memo = vec![None; (x.len() + 1) * width];
    ed(x.len(), y.len(), x, y, &mut memo, width)
}

fn random_string(rng: &mut ChaCha8Rng, alphabet: &[char], len: usize) -> String {
    (0..len).map(|_| *alphabet.choose(rng).unwrap()).collect()
}

fn edit_distance_oracle() -> Result<String, String> {
    let start = Instant::now();

    // Every string over {a,b,c} up to length 8, shortest first, so a
    // string's prefix without its last character always has a smaller index.
    let mut words: Vec<String> = vec![String::new()];
    let mut prefix: Vec<usize> = vec![0];
    let mut level = 0..1;
    for _ in 0..8 {
        let next_start = words.len();
        for parent in level.clone() {
            for c in ['a', 'b', 'c'] {
                words.push(format!("{}{c}", words[parent]));
                prefix.push(parent);
            }
        }
        level = next_start..words.len();
    }
    let n = words.len();
    let last: Vec<Option<char>> = words.iter().map(|w| w.chars().last()).collect();
    let len: Vec<usize> = words.iter().map(|w| w.len()).collect();

    // The recursion memoized over all prefix pairs at once.
    let mut table = vec![0u8; n * n];
    for a in 0..n {
        for b in 0..n {
            table[a * n + b] = if len[a] == 0 {
                len[b] as u8
            } else if len[b] == 0 {
                len[a] as u8
            } else {
                let (pa, pb) = (prefix[a], prefix[b]);
                (table[pa * n + b] + 1)
                    .min(table[a * n + pb] + 1)
                    .min(table[pa * n + pb] + u8::from(last[a] != last[b]))
            };
        }
    }

    let mut mismatches = 0usize;
    let mut first = None;
    for a in 0..n {
        for b in 0..n {
            if edit_distance(&words[a], &words[b]) != table[a * n + b] as usize {
                mismatches += 1;
                first.get_or_insert((a, b));
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let alphabet: Vec<char> = "abcdeüßé ".chars().collect();
    for _ in 0..10_000 {
        let lx = rng.gen_range(9..=30);
        let ly = rng.gen_range(9..=30);
        let x = random_string(&mut rng, &alphabet, lx);
        let y = random_string(&mut rng, &alphabet, ly);
        let xc: Vec<char> = x.chars().collect();
        let yc: Vec<char> = y.chars().collect();
        if edit_distance(&x, &y) != recursive_distance(&xc, &yc) {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure(mismatches == 0, || {
        let (a, b) = first.unwrap_or_default();
        format!("{mismatches} mismatches, first `{}` vs `{}`", words[a], words[b])
    })?;
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}, limit 60s"))?;
    Ok(format!("{} exhaustive pairs and 10000 random pairs, 0 mismatches", n * n))
}

fn metric_identities() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let alphabet: Vec<char> = "abcdü".chars().collect();
    for _ in 0..100_000 {
        let mut s = || {
            let l = rng.gen_range(0..=12);
            random_string(&mut rng, &alphabet, l)
        };
        let (x, y, z) = (s(), s(), s());
        let dxy = edit_distance(&x, &y);
        let (lx, ly) = (x.chars().count(), y.chars().count());
        ensure(dxy == edit_distance(&y, &x), || format!("asymmetric on `{x}`, `{y}`"))?;
        ensure(edit_distance(&x, &z) <= dxy + edit_distance(&y, &z), || {
            format!("triangle inequality fails on `{x}`, `{y}`, `{z}`")
        })?;
        ensure(lx.abs_diff(ly) <= dxy && dxy <= lx.max(ly), || {
            format!("length bound fails on `{x}`, `{y}`: {dxy}")
        })?;
        ensure((dxy == 0) == (x == y), || format!("identity fails on `{x}`, `{y}`"))?;
    }
    Ok("symmetry, triangle inequality, length bounds and identity on 100000 triples".into())
}

// ---------------------------------------------------------------------------
// Query strategies

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Greedy k-center by exhaustive search at every step.
fn brute_force_coreset(points: &BTreeMap<String, Vec<f64>>, labeled: &[String], unlabeled: &[String], batch: usize) -> Vec<String> {
    let mut centers: Vec<&Vec<f64>> = labeled.iter().map(|id| &points[id]).collect();
    let mut remaining: BTreeSet<&String> = unlabeled.iter().collect();
    let mut picked = Vec::new();
    if centers.is_empty() {
        let first = *remaining.iter().next().unwrap();
        remaining.remove(first);
        centers.push(&points[first]);
        picked.push(first.clone());
    }
    while picked.len() < batch {
        let mut best: Option<(&String, f64)> = None;
        for id in &remaining {
            let nearest = centers
                .iter()
                .map(|c| euclidean(&points[*id], c))
                .fold(f64::INFINITY, f64::min);
            if best.is_none_or(|(_, d)| nearest > d) {
                best = Some((id, nearest));
            }
        }
        let (id, _) = best.unwrap();
        remaining.remove(id);
        centers.push(&points[id]);
        picked.push(id.clone());
    }
    picked
}

fn coreset_oracle() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut with_ties = 0;
    for instance in 0..500 {
        let n = rng.gen_range(2..=12);
        let dim = rng.gen_range(1..=3);
        let integer = instance % 2 == 0;
        with_ties += usize::from(integer);
        let mut ids: Vec<String> = (0..n).map(|i| format!("p{i:02}")).collect();
        ids.shuffle(&mut rng);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..dim)
                    .map(|_| if integer { rng.gen_range(0..4) as f64 } else { rng.gen_range(-1.0..1.0) })
                    .collect()
            })
            .collect();
        let points: BTreeMap<String, Vec<f64>> = ids.iter().cloned().zip(rows.iter().cloned()).collect();
        let labeled_count = rng.gen_range(0..n);
        let (labeled, unlabeled) = ids.split_at(labeled_count);
        let batch = rng.gen_range(1..=unlabeled.len().min(4));
        let features = FeatureMatrix::from_dense(ids.clone(), rows, SpaceTag::External).map_err(|e| e.to_string())?;
        let ctx = QueryContext::new(unlabeled, labeled, batch, instance).with_features(&features);
        let got = Strategy::Gcs.query(&ctx).map_err(|e| e.to_string())?.ids;
        let want = brute_force_coreset(&points, labeled, unlabeled, batch);
        ensure(got == want, || format!("instance {instance}: got {got:?}, oracle {want:?}"))?;
    }
    Ok(format!("500 instances ({with_ties} on an integer grid with ties), 0 mismatches"))
}

fn uncertainty_equivalence() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..1000 {
        let n = rng.gen_range(1..=40);
        let mut ids: Vec<String> = (0..n).map(|i| format!("d{i:03}")).collect();
        ids.shuffle(&mut rng);
        let mut preds = HashMap::new();
        for (k, id) in ids.iter().enumerate() {
            let p = match case % 4 {
                0 => rng.gen::<f64>(),
                // Coarse grid: many exact ties.
                1 => rng.gen_range(0..=8) as f64 / 8.0,
                // Mirrored pairs p and 1 - p.
                2 if k % 2 == 1 => 1.0 - preds[&ids[k - 1]],
                _ => rng.gen_range(0..=20) as f64 / 20.0,
            };
            preds.insert(id.clone(), p);
        }
        let batch = rng.gen_range(1..=n);
        let ctx = QueryContext::new(&ids, &[], batch, case).with_predictions(&preds);
        let run = |s: Strategy| s.query(&ctx).map(|b| b.ids).map_err(|e| e.to_string());
        let (lc, pe, bt) = (run(Strategy::Lc)?, run(Strategy::Pe)?, run(Strategy::Bt)?);
        ensure(lc == pe && pe == bt, || format!("vector {case}: lc {lc:?}, pe {pe:?}, bt {bt:?}"))?;
    }
    Ok("1000 prediction vectors, identical batches".into())
}

// ---------------------------------------------------------------------------
// Classifier

/// Weighted mean log-loss plus the L2 term, written independently of the
/// library.
fn reference_loss(rows: &[Vec<f64>], ys: &[bool], ws: &[f64], weights: &[f64], bias: f64, l2: f64) -> f64 {
    let mut total = 0.0;
    let mut sum = 0.0;
    for ((x, &y), &s) in rows.iter().zip(ys).zip(ws) {
        let z: f64 = x.iter().zip(weights).map(|(a, b)| a * b).sum::<f64>() + bias;
        // -ln sigma(z) = ln(1 + e^-z), -ln(1 - sigma(z)) = ln(1 + e^z)
        let t = if y { -z } else { z };
        let nll = if t > 0.0 { t + (-t).exp().ln_1p() } else { t.exp().ln_1p() };
        sum += s * nll;
        total += s;
    }
    sum / total + 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>()
}

fn gradient_check() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for instance in 0..100 {
        let dim = rng.gen_range(1..=5);
        let n = rng.gen_range(1..=10);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let ys: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
        let ws: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
        let weights: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let bias = rng.gen_range(-1.0..1.0);
        let l2 = rng.gen_range(0.0..0.1);

        let mut set = TrainingSet::new(dim);
        for ((row, &y), &s) in rows.iter().zip(&ys).zip(&ws) {
            set.push(RowRef::Dense(row), y, s);
        }
        let (loss, grad_w, grad_b) = set.loss_and_gradient(&weights, bias, l2);
        let reference = reference_loss(&rows, &ys, &ws, &weights, bias, l2);
        ensure((loss - reference).abs() <= 1e-12 * reference.abs().max(1.0), || {
            format!("instance {instance}: loss {loss} vs reference {reference}")
        })?;

        let f = |w: &[f64], b: f64| reference_loss(&rows, &ys, &ws, w, b, l2);
        let mut numeric = Vec::with_capacity(dim + 1);
        for k in 0..dim {
            let (mut up, mut down) = (weights.clone(), weights.clone());
            up[k] += h;
            down[k] -= h;
            numeric.push((f(&up, bias) - f(&down, bias)) / (2.0 * h));
        }
        numeric.push((f(&weights, bias + h) - f(&weights, bias - h)) / (2.0 * h));
        let analytic: Vec<f64> = grad_w.iter().copied().chain([grad_b]).collect();
        for (k, (a, num)) in analytic.iter().zip(&numeric).enumerate() {
            let rel = (a - num).abs() / a.abs().max(num.abs()).max(1e-8);
            worst = worst.max(rel);
            ensure(rel <= 1e-5, || {
                format!("instance {instance}, component {k}: analytic {a}, numeric {num}, relative error {rel:e}")
            })?;
        }
    }
    Ok(format!("100 instances, worst relative error {worst:.1e}"))
}

// ---------------------------------------------------------------------------
// Engine

fn synthetic_pool(seed: u64) -> Arc<Pool> {
    let corpus = separable_corpus(&SyntheticSpec {
        seed,
        ..SyntheticSpec::default()
    });
    Arc::new(corpus.split(0.2, seed).expect("synthetic corpus splits"))
}

fn protocol_conformance() -> Result<String, String> {
    let pool = synthetic_pool(0);
    let config = SessionConfig::default();
    let mut session = Session::start(pool, config.clone(), None).map_err(|e| e.to_string())?;
    drive_with_gold(&mut session).map_err(|e| e.to_string())?;
    let metrics = session.metrics();
    ensure(metrics.len() == 11, || format!("{} metric records, expected 11", metrics.len()))?;
    let counts: Vec<usize> = metrics.iter().map(|m| m.labeled_count).collect();
    let expected: Vec<usize> = (0..=10).map(|r| 20 + 20 * r).collect();
    ensure(counts == expected, || format!("labeled counts {counts:?}"))?;
    let rounds: Vec<usize> = metrics.iter().map(|m| m.round).collect();
    ensure(rounds == (0..=10).collect::<Vec<_>>(), || format!("rounds {rounds:?}"))?;
    ensure(session.state().labeled_count() == 220, || {
        format!("labeled_count {}", session.state().labeled_count())
    })?;
    let queried: Vec<&String> = session.state().history.iter().flat_map(|r| &r.queried).collect();
    let distinct: HashSet<&&String> = queried.iter().collect();
    ensure(queried.len() == 220 && distinct.len() == 220, || {
        format!("{} queries, {} distinct", queried.len(), distinct.len())
    })?;
    Ok(format!(
        "strategy {}, 11 records, labeled_count 220, 220 distinct queries",
        config.strategy
    ))
}

fn mean_curve(strategy: Strategy, seeds: std::ops::Range<u64>) -> Result<Vec<f64>, String> {
    let runs = (seeds.end - seeds.start) as f64;
    let mut curve = vec![0.0; 11];
    for seed in seeds {
        let config = SessionConfig {
            strategy,
            seed,
            ..SessionConfig::default()
        };
        let metrics = run_simulated(synthetic_pool(seed), config, None).map_err(|e| e.to_string())?;
        for (slot, m) in curve.iter_mut().zip(&metrics) {
            *slot += m.accuracy / runs;
        }
    }
    Ok(curve)
}

fn lc_beats_random() -> Result<String, String> {
    let start = Instant::now();
    // Both strategies see the same corpus, split and seed batch per seed.
    let random = mean_curve(Strategy::Random, 0..20)?;
    let lc = mean_curve(Strategy::Lc, 0..20)?;
    let elapsed = start.elapsed();
    let reach = |curve: &[f64]| curve.iter().position(|&a| a >= 0.95);
    let gap = lc[10] - random[10];
    let detail = format!(
        "final accuracy lc {:.4} vs random {:.4} (+{:.2} points); 0.95 reached at round {:?} vs {:?}",
        lc[10],
        random[10],
        100.0 * gap,
        reach(&lc),
        reach(&random)
    );
    ensure(gap >= 0.02, || format!("gap too small: {detail}"))?;
    let lc_round = reach(&lc).ok_or_else(|| format!("lc never reaches 0.95: {detail}"))?;
    ensure(reach(&random).is_none_or(|r| lc_round <= r), || format!("random reaches 0.95 first: {detail}"))?;
    ensure(elapsed < Duration::from_secs(300), || format!("took {elapsed:?}, limit 300s"))?;
    Ok(detail)
}

fn persistence() -> Result<String, String> {
    let pool = synthetic_pool(4);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let scenarios = [
        (Strategy::Gcs, 0),
        (Strategy::Gcs, 4),
        (Strategy::Lc, 7),
        (Strategy::Dal, 3),
        (Strategy::Random, 10),
    ];
    for (strategy, interrupt_after) in scenarios {
        let config = SessionConfig {
            strategy,
            seed: 11,
            ..SessionConfig::default()
        };
        let straight = run_simulated(pool.clone(), config.clone(), None).map_err(|e| e.to_string())?;

        let path = dir.path().join(format!("{strategy}-{interrupt_after}.json"));
        let mut session = Session::start(pool.clone(), config, None)
            .and_then(|s| s.with_checkpoint(&path))
            .map_err(|e| e.to_string())?;
        for _ in 0..interrupt_after {
            let ids = session.pending_batch().expect("session still running").ids.clone();
            let labels = gold_answers(&pool, &ids).map_err(|e| e.to_string())?;
            session.submit_labels(&labels).map_err(|e| e.to_string())?;
        }
        drop(session);
        let mut resumed = Session::resume(&path, pool.clone(), None).map_err(|e| e.to_string())?;
        drive_with_gold(&mut resumed).map_err(|e| e.to_string())?;
        let (a, b) = (metrics_csv(&straight), metrics_csv(&resumed.metrics()));
        ensure(a.as_bytes() == b.as_bytes(), || {
            format!("{strategy} interrupted after {interrupt_after} submissions:\n{a}\nvs\n{b}")
        })?;
    }
    Ok(format!("{} interruption points, metric CSVs byte-identical", scenarios.len()))
}

// ---------------------------------------------------------------------------
// Evaluation

fn evaluation_arithmetic() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let mut degenerate_cases = 0;
    for case in 0..50 {
        let mut count = || if rng.gen_bool(0.3) { 0 } else { rng.gen_range(1..=30) };
        let (mut tp, fp, fn_, tn) = (count(), count(), count(), count());
        // A few fixed corner cases among the random ones.
        let (tp, fp, fn_, tn) = match case {
            0 => (0, 0, 0, 7),
            1 => (5, 0, 0, 0),
            2 => (0, 3, 4, 0),
            _ => {
                if tp + fp + fn_ + tn == 0 {
                    tp = 1;
                }
                (tp, fp, fn_, tn)
            }
        };
        let mut gold = BTreeMap::new();
        let mut pred = BTreeMap::new();
        let cells = [
            (tp, Label::Related, Label::Related),
            (fp, Label::Related, Label::Unrelated),
            (fn_, Label::Unrelated, Label::Related),
            (tn, Label::Unrelated, Label::Unrelated),
        ];
        let mut next = 0;
        for (n, p, g) in cells {
            for _ in 0..n {
                let id = format!("doc{next:04}");
                next += 1;
                pred.insert(id.clone(), p);
                gold.insert(id, g);
            }
        }
        let report = evaluate(&pred, &gold).map_err(|e| e.to_string())?;

        // Hand rules, counted from the label lists.
        let mut flags = BTreeSet::new();
        let mut div = |num: usize, den: usize, name: &str| {
            if den == 0 {
                flags.insert(name.to_string());
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let mut expected = Vec::new();
        for class in [Label::Unrelated, Label::Related] {
            let both = gold.iter().filter(|(id, &g)| g == class && pred[*id] == class).count();
            let predicted = pred.values().filter(|&&p| p == class).count();
            let actual = gold.values().filter(|&&g| g == class).count();
            let name = class.name();
            expected.push(div(both, predicted, &format!("precision_{name}")));
            expected.push(div(both, actual, &format!("recall_{name}")));
            expected.push(div(2 * both, predicted + actual, &format!("f1_{name}")));
        }
        let correct = gold.iter().filter(|(id, g)| pred[*id] == **g).count();
        expected.push(correct as f64 / gold.len() as f64);

        let got = [
            report.unrelated.precision,
            report.unrelated.recall,
            report.unrelated.f1,
            report.related.precision,
            report.related.recall,
            report.related.f1,
            report.accuracy,
        ];
        ensure(got.iter().zip(&expected).all(|(a, b)| a.to_bits() == b.to_bits()), || {
            format!("matrix {tp}/{fp}/{fn_}/{tn}: got {got:?}, expected {expected:?}")
        })?;
        let reported: BTreeSet<String> = report.degenerate.iter().cloned().collect();
        ensure(reported == flags, || {
            format!("matrix {tp}/{fp}/{fn_}/{tn}: flags {reported:?}, expected {flags:?}")
        })?;
        ensure(report.matrix == ConfusionMatrix::new(tp, fp, fn_, tn), || format!("matrix {:?}", report.matrix))?;
        degenerate_cases += usize::from(!flags.is_empty());
    }
    ensure(degenerate_cases > 0, || "no degenerate case exercised".into())?;
    Ok(format!("50 matrices ({degenerate_cases} with zero denominators) match exactly"))
}

// ---------------------------------------------------------------------------
// Keyword filter

/// (id, text, exact match, fuzzy match with budget 2), worked out by hand.
const GERMANY: &[(&str, &str, bool, bool)] = &[
    ("g01", "Hochwasser im Ahrtal, viele Keller stehen unter Wasser", true, true),
    ("g02", "Die Flutwelle erreichte Schuld am Mittwoch", true, false),
    ("g03", "Massive flooding in the Ahr valley", true, false),
    ("g04", "Overstroming in Limburg na zware regen", true, true),
    ("g05", "Hoogwater in de Maas bij Roermond", true, true),
    ("g06", "Sunny weather and a quiet weekend", false, false),
    ("g07", "Floood warning for the Ahr", false, true),
    ("g08", "Inondation à Liège après la crue de la Meuse", true, true),
    ("g09", "Marée haute et vent fort sur la côte", true, true),
    ("g10", "Maree haute ce soir", false, true),
    ("g11", "Der Keller ist voll mit Wasser", false, false),
    ("g12", "Totale Überschwemmung in Erftstadt-Blessem", true, true),
    ("g13", "Uberschwemmung gemeldet", false, true),
    ("g14", "The flood disaster in Germany", true, true),
    ("g15", "Disastrous week for the markets", false, false),
    ("g16", "Flut in Rheinland-Pfalz", true, true),
    ("g17", "Flat tire on the Autobahn", false, true),
    ("g18", "Blut spenden hilft", false, true),
    ("g19", "Het water stijgt, vloed verwacht", true, true),
    ("g20", "Crue exceptionnelle de l'Ahr", true, true),
    ("g21", "La rue est calme", false, true),
    ("g22", "Gut gemacht, Team!", false, true),
    ("g23", "Inundation of the lower valley", true, true),
    ("g24", "Inundations expected", true, true),
    ("g25", "Hochwasserschutz versagt", true, false),
    ("g26", "Starkregen und Gewitter im Westen", false, false),
    ("g27", "Hochwaser in Bad Neuenahr", false, true),
    ("g28", "hoog water bij Venlo", false, false),
    ("g29", "Flooded streets, FLOOD alert", true, true),
    ("g30", "Le niveau monte, inondation possible", true, true),
];

const CHILE: &[(&str, &str, bool, bool)] = &[
    ("c01", "Incendio forestal en Viña del Mar", true, true),
    ("c02", "Gran incendio en Valparaíso", true, true),
    ("c03", "Forest fire near Santiago", true, true),
    ("c04", "Forest fires spreading", true, true),
    ("c05", "Forrest fire danger", false, true),
    ("c06", "Fuego forestal en Quilpué", true, true),
    ("c07", "El bosque quemado tras el fuego", true, true),
    ("c08", "Incendios en la región", true, true),
    ("c09", "Hermoso día en la playa", false, false),
    ("c10", "The fire department trained today", false, false),
];

fn keyword_golden() -> Result<String, String> {
    let mut fuzzy_only = 0;
    let mut exact_only = 0;
    for (rows, keywords) in [(GERMANY, KeywordList::germany_flood()), (CHILE, KeywordList::chile_forest_fires())] {
        let docs: Vec<Document> = rows.iter().map(|(id, text, _, _)| Document::new(*id, text)).collect();
        let pool = Pool::from_documents(docs, false).map_err(|e| e.to_string())?;
        let run = |mode, budget| classify_pool(&pool, &keywords, mode, EditDistanceBudget(budget)).map_err(|e| e.to_string());
        let exact = run(MatchMode::Exact, 0)?;
        let fuzzy = run(MatchMode::Fuzzy, 2)?;
        let token_exact = run(MatchMode::Fuzzy, 0)?;
        for &(id, text, want_exact, want_fuzzy) in rows {
            let got_exact = exact[id].is_related();
            let got_fuzzy = fuzzy[id].is_related();
            ensure(got_exact == want_exact, || format!("{id} `{text}`: exact {got_exact}, expected {want_exact}"))?;
            ensure(got_fuzzy == want_fuzzy, || format!("{id} `{text}`: fuzzy {got_fuzzy}, expected {want_fuzzy}"))?;
            ensure(!token_exact[id].is_related() || got_fuzzy, || format!("{id}: token-exact match missing from fuzzy"))?;
            fuzzy_only += usize::from(want_fuzzy && !want_exact);
            exact_only += usize::from(want_exact && !want_fuzzy);
        }
    }
    Ok(format!(
        "40 documents match the hand enumeration ({fuzzy_only} fuzzy-only, {exact_only} exact-only), fuzzy covers token-exact"
    ))
}
