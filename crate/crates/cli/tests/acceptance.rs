//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero when
//! any criterion fails. `SAGE_BLESS=1` rewrites the golden reports.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use sage_core::alignment::{AlignmentRecord, Method};
use sage_core::corpus::{document_from_json, Vocabulary};
use sage_core::ensemble::{nll_and_gradient, train, FeatureSchema, FeatureVector, LogRegModel, TrainParams};
use sage_core::metrics::{spearman_rho, topk_prf, wilcoxon_signed_rank, Tier};
use sage_core::rng::substream;
use sage_core::salience::{aggregate, position_baseline, SegmentTable};
use sage_core::string_match::{tokens_match, MatchConfig, PreparedSummary};
use sage_core::sumqual::{bleu, rouge_l, rouge_n, self_bleu};

use common::*;

const SEED: u64 = 20_241_018;

const SPEARMAN_TOL: f64 = 1e-9;
const SPEARMAN_BUDGET: Duration = Duration::from_secs(5);
const WILCOXON_TOL: f64 = 1e-12;
const GRAD_STEP: f64 = 1e-5;
const GRAD_REL_TOL: f64 = 1e-5;
const TRAIN_ITER_CAP: usize = 5000;
const ROUGE_TOL: f64 = 1e-9;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn rng(name: &str) -> ChaCha8Rng {
    substream(SEED, &format!("acceptance/{name}"))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// 1 -------------------------------------------------------------------------

/// Average ranks (1-based) by counting smaller and equal values.
fn brute_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|x| {
            let less = v.iter().filter(|y| *y < x).count() as f64;
            let equal = v.iter().filter(|y| *y == x).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    (va > 0.0 && vb > 0.0).then(|| cov / (va * vb).sqrt())
}

fn spearman() -> Outcome {
    let mut r = rng("spearman");
    let start = Instant::now();
    let mut defined = 0;
    for case in 0..1000 {
        let n = r.random_range(2..=12);
        let a: Vec<f64> = (0..n).map(|_| f64::from(r.random_range(0..=5u8))).collect();
        let b: Vec<f64> = (0..n).map(|_| f64::from(r.random_range(0..=5u8))).collect();
        let oracle = pearson(&brute_ranks(&a), &brute_ranks(&b));
        match (spearman_rho(&a, &b), oracle) {
            (Ok(got), Some(want)) => {
                defined += 1;
                ensure((got - want).abs() <= SPEARMAN_TOL, || format!("case {case}: {got} vs oracle {want}"))?;
            }
            (Err(_), None) => {}
            (got, want) => return Err(format!("case {case}: definedness differs: {got:?} vs {want:?}")),
        }
    }
    let took = start.elapsed();
    ensure(took < SPEARMAN_BUDGET, || format!("took {took:?}"))?;
    Ok(format!("1000 vectors ({defined} defined), max tol {SPEARMAN_TOL:e}, {took:.2?}"))
}

// 2 -------------------------------------------------------------------------

/// Two-sided exact p by enumerating every sign pattern of the ranks.
fn enumerated_p(diffs: &[f64]) -> f64 {
    let nz: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    let ranks = brute_ranks(&nz.iter().map(|d| d.abs()).collect::<Vec<_>>());
    let observed: f64 = nz.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let n = ranks.len();
    let (mut le, mut ge) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        let w: f64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| ranks[i]).sum();
        le += u64::from(w <= observed);
        ge += u64::from(w >= observed);
    }
    (2.0 * le.min(ge) as f64 / (1u64 << n) as f64).min(1.0)
}

fn wilcoxon() -> Outcome {
    let mut r = rng("wilcoxon");
    let mut mismatches = Vec::new();
    for case in 0..200 {
        let n = r.random_range(1..=12);
        let mut diffs: Vec<f64> = (0..n).map(|_| f64::from(r.random_range(-6..=6i8)) / 2.0).collect();
        if diffs.iter().all(|d| *d == 0.0) {
            diffs[0] = 1.0;
        }
        let got = wilcoxon_signed_rank(&diffs).map_err(|e| format!("case {case}: {e}"))?;
        let want = enumerated_p(&diffs);
        if !got.exact || (got.p_value - want).abs() > WILCOXON_TOL {
            mismatches.push(format!("case {case}: {} vs {want}", got.p_value));
        }
    }
    ensure(mismatches.is_empty(), || format!("{} mismatches: {}", mismatches.len(), mismatches.join("; ")))?;
    Ok("200 fixtures, 0 mismatches against 2^n enumeration".into())
}

// 3 -------------------------------------------------------------------------

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn gradient_check() -> Result<f64, String> {
    let mut r = rng("logreg-gradient");
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let dim = r.random_range(1..=8);
        let n = r.random_range(1..=30);
        let schema = FeatureSchema::raw(dim);
        let mut model = LogRegModel::zeros(&schema, r.random_range(0.0..0.5));
        model.weights = (0..dim).map(|_| r.random_range(-2.0..2.0)).collect();
        model.bias = r.random_range(-1.0..1.0);
        let data: Vec<(FeatureVector, bool)> = (0..n)
            .map(|_| {
                let x = (0..dim).map(|_| r.random_range(-3.0..3.0)).collect();
                (schema.vector(x).unwrap(), r.random_bool(0.5))
            })
            .collect();
        let (_, analytic) = nll_and_gradient(&model, &data);
        let mut numeric = Vec::with_capacity(dim + 1);
        for j in 0..=dim {
            let shifted = |delta: f64| {
                let mut m = model.clone();
                if j < dim {
                    m.weights[j] += delta;
                } else {
                    m.bias += delta;
                }
                nll_and_gradient(&m, &data).0
            };
            numeric.push((shifted(GRAD_STEP) - shifted(-GRAD_STEP)) / (2.0 * GRAD_STEP));
        }
        let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
        let rel = norm(&diff) / norm(&analytic).max(norm(&numeric)).max(f64::MIN_POSITIVE);
        ensure(rel <= GRAD_REL_TOL, || format!("case {case}: relative error {rel:e}"))?;
        worst = worst.max(rel);
    }
    Ok(worst)
}

fn separable_fit() -> Result<(usize, bool), String> {
    let text = read(fixture("separable.jsonl"));
    let rows: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let dim = rows[0]["x"].as_array().unwrap().len();
    let schema = FeatureSchema::raw(dim);
    let data: Vec<(FeatureVector, bool)> = rows
        .iter()
        .map(|v| {
            let x = v["x"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
            (schema.vector(x).unwrap(), v["y"].as_bool().unwrap())
        })
        .collect();
    let hp = TrainParams {
        max_iters: TRAIN_ITER_CAP,
        ..TrainParams::default()
    };
    let (model, summary) = train(&data, &schema, &hp).map_err(|e| e.to_string())?;
    let wrong = data.iter().filter(|(x, y)| model.label(x).unwrap() != *y).count();
    ensure(wrong == 0, || format!("{wrong} of {} misclassified", data.len()))?;
    ensure(summary.iterations <= TRAIN_ITER_CAP, || format!("{} iterations", summary.iterations))?;
    Ok((summary.iterations, summary.converged))
}

fn logistic() -> Outcome {
    let worst = gradient_check()?;
    let (iters, converged) = separable_fit()?;
    Ok(format!(
        "100 gradient checks, worst relative error {worst:.2e}; separable fixture 100% accurate after {iters} iterations (gradient tolerance reached: {converged})"
    ))
}

// 4 -------------------------------------------------------------------------

fn string_match() -> Outcome {
    let cfg = MatchConfig::default();
    let cases: [(&str, &str, bool); 11] = [
        (
            "The prevalence of discrimination across racial groups in contemporary America",
            "A study of the prevalence of racial discrimination in the United States.",
            true,
        ),
        ("Niels Bohr", "Einstein's long debates with Niels Bohr shaped physics.", true),
        ("Niels Bohr", "Bohr and Niels were colleagues.", false),
        ("he", "he said he would return", false),
        ("the United States", "Life in the united states, then.", true),
        ("Einstein", "Einsteinian ideas spread quickly.", false),
        ("PARIS", "She moved to paris in 1891.", true),
        ("Curie", "The prize went to (Curie), eventually.", true),
        ("of the", "the history of the war", false),
        ("The history of quantum mechanics in Europe", "a quantum history lecture", false),
        ("The history of quantum mechanics in Europe", "a lecture on quantum history across europe", true),
    ];
    let mut bad = Vec::new();
    for (i, (mention, summary, want)) in cases.iter().enumerate() {
        let toks: Vec<&str> = mention.split_whitespace().collect();
        let got = tokens_match(&toks, &PreparedSummary::new(summary, &cfg), &cfg);
        if got != *want {
            bad.push(format!("#{i} `{mention}` in `{summary}`: got {got}"));
        }
    }
    ensure(bad.is_empty(), || bad.join("; "))?;
    Ok("worked example aligned, 10 controls exact".into())
}

// 5 -------------------------------------------------------------------------

/// `sentences` sentences of three tokens; entity `i` first appears at `token_of[i]`.
fn synthetic_doc(id: &str, sentences: usize, token_of: &[usize]) -> sage_core::corpus::Document {
    let tokens: Vec<_> = (0..sentences * 3)
        .map(|t| serde_json::json!({"s": format!("w{t}"), "sent": t / 3}))
        .collect();
    let entities: Vec<_> = token_of
        .iter()
        .enumerate()
        .map(|(i, &t)| serde_json::json!({"id": format!("e{i:02}"), "type": "person", "mentions": [[t, t + 1]]}))
        .collect();
    let v = serde_json::json!({
        "id": id, "genre": "news", "partition": "test", "tokens": tokens, "entities": entities,
        "summaries": (1..=5).map(|i| serde_json::json!({"id": format!("s{i}"), "source": "human", "text": "x"})).collect::<Vec<_>>()
    });
    document_from_json(&v.to_string(), &Vocabulary::default()).unwrap()
}

fn position() -> Outcome {
    let table = SegmentTable::default();
    let doc = synthetic_doc("twenty", 20, &(0..20).map(|s| s * 3).collect::<Vec<_>>());
    let expected: Vec<u32> = (0..20)
        .map(|s| match s {
            0..=1 => 5,
            2..=5 => 4,
            6..=9 => 3,
            10..=13 => 2,
            14..=15 => 1,
            _ => 0,
        })
        .collect();
    let got: Vec<u32> = position_baseline(&doc, &table).iter().map(|s| s.score).collect();
    ensure(got == expected, || format!("20-sentence document: {got:?}"))?;

    let mut r = rng("position");
    for case in 0..1000 {
        let sentences = r.random_range(1..=40);
        let k = r.random_range(1..=8usize.min(sentences * 3));
        let mut slots: Vec<usize> = (0..sentences * 3).collect();
        slots.shuffle(&mut r);
        let doc = synthetic_doc(&format!("r{case}"), sentences, &slots[..k]);
        let scores = position_baseline(&doc, &table);
        let mut pairs: Vec<(usize, u32)> = doc
            .entities_by_position()
            .iter()
            .zip(&scores)
            .map(|(e, s)| (doc.first_mention_sentence(e).unwrap(), s.score))
            .collect();
        pairs.sort();
        ensure(pairs.windows(2).all(|w| w[0].1 >= w[1].1), || format!("case {case}: {pairs:?}"))?;
    }
    Ok("20-sentence mapping exact; monotone on 1000 random documents".into())
}

// 6 -------------------------------------------------------------------------

fn aggregation() -> Outcome {
    let mut r = rng("aggregation");
    for case in 0..500 {
        let n_ent = r.random_range(1..=10);
        let n_sum = r.random_range(1..=8);
        let entities: Vec<String> = (0..n_ent).map(|i| format!("e{i}")).collect();
        let mut records = Vec::new();
        let mut want = vec![0u32; n_ent];
        for (i, e) in entities.iter().enumerate() {
            for s in 0..n_sum {
                let label = r.random_bool(0.4);
                want[i] += u32::from(label);
                records.push(AlignmentRecord::new("d", e, &format!("s{s}"), Method::String, label));
            }
        }
        let got = aggregate("d", &entities, n_sum, &records).map_err(|e| format!("case {case}: {e}"))?;
        let scores: Vec<u32> = got.iter().map(|s| s.score).collect();
        ensure(scores == want, || format!("case {case}: {scores:?} vs {want:?}"))?;
        ensure(scores.iter().all(|&s| s as usize <= n_sum), || format!("case {case}: out of [0,{n_sum}]"))?;
        records.shuffle(&mut r);
        let shuffled = aggregate("d", &entities, n_sum, &records).map_err(|e| e.to_string())?;
        ensure(shuffled == got, || format!("case {case}: record order changed scores"))?;
    }
    Ok("500 fixtures: count of positives, bounded, permutation invariant".into())
}

// 7 -------------------------------------------------------------------------

const GOLDEN_REPORTS: [(&str, &str); 2] = [("eval-ensemble", "report.ensemble.json"), ("eval-llm", "report.llm-3shot.json")];

/// Every file a golden pipeline run writes, except manifests and caches.
fn golden_pipeline(out: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let o = s(out);
    let t = toy();
    let c = s(&t);
    let dir = |id: &str| out.join(id).to_str().unwrap().to_owned();
    let steps: Vec<Vec<String>> = vec![
        vec!["--run-id", "align", "align"],
        vec!["--run-id", "train", "train-ensemble", "--alignments", &dir("align")],
        vec!["--run-id", "score-ensemble", "score", "--predictor", "aggregate:ensemble", "--alignments", &dir("train")],
        vec!["--run-id", "score-baseline", "score", "--predictor", "baseline"],
        vec!["--run-id", "score-llm", "score", "--predictor", "llm-3shot"],
        vec![
            "--run-id", "eval-ensemble", "eval",
            "--pred", &format!("{}/scores.aggregate-ensemble.tsv", dir("score-ensemble")),
            "--compare", &format!("{}/scores.baseline.tsv", dir("score-baseline")),
        ],
        vec!["--run-id", "eval-llm", "eval", "--pred", &format!("{}/scores.llm-3shot.tsv", dir("score-llm"))],
    ]
    .into_iter()
    .map(|v| v.into_iter().map(str::to_owned).collect())
    .collect();
    for step in &steps {
        let mut args = vec!["--corpus", c, "--outdir", o, "--seed", "7", "--mock-llm", "--mock-coref"];
        args.extend(step.iter().map(String::as_str));
        let res = sage(&args, &[]);
        if !res.status.success() {
            return Err(format!("{step:?} exited {:?}: {}", res.status.code(), String::from_utf8_lossy(&res.stderr)));
        }
    }
    let mut files = BTreeMap::new();
    for run in fs::read_dir(out).map_err(|e| e.to_string())? {
        let run = run.map_err(|e| e.to_string())?.path();
        if run.file_name().is_some_and(|n| n == "cache") {
            continue;
        }
        for f in fs::read_dir(&run).map_err(|e| e.to_string())? {
            let f = f.map_err(|e| e.to_string())?.path();
            if f.file_name().is_some_and(|n| n != "manifest.json") {
                let rel = f.strip_prefix(out).unwrap().to_string_lossy().into_owned();
                files.insert(rel, fs::read(&f).map_err(|e| e.to_string())?);
            }
        }
    }
    Ok(files)
}

fn golden() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = golden_pipeline(a.path())?;
    let second = golden_pipeline(b.path())?;
    ensure(first.keys().eq(second.keys()), || "runs wrote different file sets".into())?;
    let differing: Vec<&String> = first.iter().filter(|(k, v)| second[*k] != **v).map(|(k, _)| k).collect();
    ensure(differing.is_empty(), || format!("outputs differ between runs: {differing:?}"))?;

    let bless = std::env::var("SAGE_BLESS").is_ok_and(|v| v == "1");
    for (run, name) in GOLDEN_REPORTS {
        let got = &first[&format!("{run}/report.json")];
        let path = fixture("golden").join(name);
        if bless {
            fs::create_dir_all(path.parent().unwrap()).unwrap();
            fs::write(&path, got).unwrap();
            continue;
        }
        let want = fs::read(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        ensure(*got == want, || format!("{run}/report.json differs from {}", path.display()))?;
    }
    Ok(format!(
        "{} outputs byte-identical across two seeded runs; reports equal golden{}",
        first.len(),
        if bless { " (blessed)" } else { "" }
    ))
}

// 8 -------------------------------------------------------------------------

fn close(got: f64, want: f64, what: &str) -> Result<(), String> {
    ensure((got - want).abs() <= ROUGE_TOL, || format!("{what}: {got} vs {want}"))
}

fn rouge_bleu() -> Outcome {
    let text = "Marie Curie won the Nobel Prize in Paris.";
    for (what, v) in [
        ("rouge-1", rouge_n(text, text, 1).f),
        ("rouge-2", rouge_n(text, text, 2).f),
        ("rouge-l", rouge_l(text, text).f),
        ("bleu", bleu(text, text)),
    ] {
        ensure(v == 1.0, || format!("identity {what} = {v}"))?;
    }

    // LCS "a c d": 3 of 4 either way
    let l = rouge_l("a b c d", "a c d e");
    close(l.precision, 0.75, "rouge-l P")?;
    close(l.recall, 0.75, "rouge-l R")?;
    // unigrams: the x2, cat, on shared -> 4 of 6
    let r1 = rouge_n("the cat sat on the mat", "the cat lay on the rug", 1);
    close(r1.precision, 4.0 / 6.0, "rouge-1 P")?;
    close(r1.f, 4.0 / 6.0, "rouge-1 F")?;
    // bigrams: "the cat", "on the" shared -> 2 of 5
    let r2 = rouge_n("the cat sat on the mat", "the cat lay on the rug", 2);
    close(r2.recall, 0.4, "rouge-2 R")?;
    close(r2.f, 0.4, "rouge-2 F")?;
    // p1 3/4, p2 (2+1)/(3+1), p3 (1+1)/(2+1), p4 (0+1)/(1+1), equal lengths
    let want = (0.75f64 * 0.75 * (2.0 / 3.0) * 0.5).powf(0.25);
    close(bleu("a b c d", "a b c e"), want, "bleu")?;

    let five = ["the same sentence about radium"; 5];
    let sb = self_bleu(&five).ok_or("self-bleu undefined")?;
    ensure(sb == 1.0, || format!("self-bleu of identical summaries = {sb}"))?;
    Ok("identities 1.0; hand cases within 1e-9; self-bleu of 5 identical = 1.0".into())
}

// 9 -------------------------------------------------------------------------

fn universe_rule() -> Outcome {
    let mut r = rng("topk-universe");
    for case in 0..100 {
        let n = r.random_range(0..=15);
        let mut pred = BTreeMap::new();
        let mut gold = BTreeMap::new();
        for i in 0..n {
            gold.insert(format!("e{i:02}"), r.random_range(0..=5u32));
            pred.insert(format!("e{i:02}"), r.random_range(0.0..=5.0));
        }
        let before = [Tier::Top1, Tier::Top3].map(|t| topk_prf(&pred, &gold, t));
        for j in 0..r.random_range(1..=10) {
            let k = format!("z{j:02}");
            gold.insert(k.clone(), 0);
            // any prediction, including top-tier ones
            pred.insert(k, f64::from(r.random_range(0..=5u8)));
        }
        let after = [Tier::Top1, Tier::Top3].map(|t| topk_prf(&pred, &gold, t));
        ensure(before == after, || format!("case {case}: {before:?} -> {after:?}"))?;
    }
    Ok("100 fixtures unchanged by inserted gold-0 entities".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("spearman oracle", spearman),
        ("wilcoxon exactness", wilcoxon),
        ("logistic regression", logistic),
        ("string match", string_match),
        ("position baseline", position),
        ("aggregation", aggregation),
        ("golden run", golden),
        ("rouge / self-bleu", rouge_bleu),
        ("top-k universe rule", universe_rule),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
