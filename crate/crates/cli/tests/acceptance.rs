//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Tolerances and sizes are fixed here.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use qam::catalog::{AttributeSchema, Catalog, Product, TextField};
use qam::config::Config;
use qam::evaluation::{ap_at_k, generate_synthetic_corpus, map_at_k, precision_at_k, run_synthetic};
use qam::filter::{filter_catalog, FilterPolicy};
use qam::lexical::{Bm25Params, InvertedIndex};
use qam::query::{Constraint, ConstraintKind};
use qam::rank::{rrf_fuse, top_n, RankedResult};
use qam::text::TokenizerConfig;
use qam::{SearchEngine, StrategyId};
use qam_cli::{cmd_eval, cmd_index, cmd_ingest, EvalArgs, IngestArgs, QuerySource, Workspace};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within_budget(elapsed: Duration, budget: Duration) -> Result<(), String> {
    if elapsed < budget {
        Ok(())
    } else {
        Err(format!("took {elapsed:?}, budget {budget:?}"))
    }
}

// -- independent references -------------------------------------------------

fn ref_precision(labels: &[bool], k: usize) -> f64 {
    (0..k).filter(|&i| labels.get(i).copied().unwrap_or(false)).count() as f64 / k as f64
}

fn ref_ap(labels: &[bool], total: usize, k: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 1..=k {
        if labels.get(i - 1).copied().unwrap_or(false) {
            s += ref_precision(labels, i);
        }
    }
    s / k.min(total) as f64
}

fn ref_bm25(docs: &[Vec<String>], query: &[String], k1: f64, b: f64) -> Vec<f64> {
    let n = docs.len() as f64;
    let avg = docs.iter().map(Vec::len).sum::<usize>() as f64 / n;
    let terms: BTreeSet<&String> = query.iter().collect();
    docs.iter()
        .map(|d| {
            terms
                .iter()
                .map(|t| {
                    let tf = d.iter().filter(|w| w == t).count() as f64;
                    if tf == 0.0 {
                        return 0.0;
                    }
                    let df = docs.iter().filter(|x| x.contains(t)).count() as f64;
                    let norm = if avg > 0.0 { d.len() as f64 / avg } else { 1.0 };
                    (1.0 + (n - df + 0.5) / (df + 0.5)).ln() * tf * (k1 + 1.0)
                        / (tf + k1 * (1.0 - b + b * norm))
                })
                .sum()
        })
        .collect()
}

/// Constraint semantics restated from scratch: numeric bounds widened by 20%,
/// `around` by ±20%, age ranges by plain interval overlap, missing attributes fail.
fn ref_satisfies(p: &Product, c: &Constraint) -> bool {
    let le = |a: f64, b: f64| a <= b + 1e-9;
    match c.field.as_str() {
        "brand" => p.brand.as_deref() == c.value.as_deref(),
        "color" => p.color.as_deref() == c.value.as_deref(),
        "category" => p.categories.iter().any(|x| Some(x.as_str()) == c.value.as_deref()),
        "price" | "rating" => {
            let Some(v) = (if c.field == "price" { p.price } else { p.rating }) else {
                return false;
            };
            match c.kind {
                ConstraintKind::AtMost => le(v, c.high.unwrap() * 1.2),
                ConstraintKind::AtLeast => le(c.low.unwrap() * 0.8, v),
                ConstraintKind::Between => le(c.low.unwrap() * 0.8, v) && le(v, c.high.unwrap() * 1.2),
                ConstraintKind::Around => le(c.low.unwrap() * 0.8, v) && le(v, c.low.unwrap() * 1.2),
                ConstraintKind::Equals => false,
            }
        }
        "age" => match (p.min_age, p.max_age) {
            (None, None) => false,
            (lo, hi) => {
                le(f64::from(lo.unwrap_or(0)), c.high.unwrap())
                    && le(c.low.unwrap(), hi.map_or(f64::MAX, f64::from))
            }
        },
        _ => false,
    }
}

fn random_catalog(r: &mut ChaCha8Rng) -> Catalog {
    const PRICES: &[f64] = &[80.0, 79.99, 100.0, 110.0, 120.0, 120.01, 9.6, 12.0, 14.4, 14.41, 55.5];
    let n = r.gen_range(1..=30);
    let products: Vec<Product> = (0..n)
        .map(|i| {
            let min_age = r.gen_bool(0.8).then(|| r.gen_range(0u32..=12));
            let max_age = min_age.and_then(|lo| r.gen_bool(0.8).then(|| lo + r.gen_range(0..=6)));
            Product {
                id: format!("p{i:02}"),
                title: "item".into(),
                brand: r.gen_bool(0.85).then(|| ["lego", "hasbro", "zara"].choose(r).unwrap().to_string()),
                color: r.gen_bool(0.85).then(|| ["red", "blue", "black"].choose(r).unwrap().to_string()),
                price: r.gen_bool(0.9).then(|| {
                    if r.gen_bool(0.5) {
                        *PRICES.choose(r).unwrap()
                    } else {
                        f64::from(r.gen_range(100u32..=20_000)) / 100.0
                    }
                }),
                rating: r.gen_bool(0.85).then(|| f64::from(r.gen_range(10u32..=50)) / 10.0),
                min_age,
                max_age,
                categories: if r.gen_bool(0.5) { vec!["toys".into()] } else { vec![] },
                ..Default::default()
            }
        })
        .collect();
    Catalog::from_products(products, AttributeSchema::default()).unwrap()
}

fn random_constraints(r: &mut ChaCha8Rng) -> Vec<Constraint> {
    (0..r.gen_range(0..=4))
        .map(|_| match r.gen_range(0..7) {
            0 => Constraint::equals("brand", ["lego", "hasbro", "zara"].choose(r).unwrap()),
            1 => Constraint::equals("color", ["red", "blue", "black"].choose(r).unwrap()),
            2 => Constraint::equals("category", "toys"),
            3 => Constraint::at_most("price", *[100.0, 10.0, 50.0].choose(r).unwrap()),
            4 => Constraint::around("price", *[12.0, 100.0].choose(r).unwrap()),
            5 => Constraint::at_least("rating", f64::from(r.gen_range(1u32..=5))),
            _ => {
                let lo = r.gen_range(0u32..=12);
                Constraint::between("age", f64::from(lo), f64::from(lo + r.gen_range(0..=4)))
            }
        })
        .collect()
}

// -- criteria ---------------------------------------------------------------

fn metric_oracle() -> Outcome {
    let start = Instant::now();
    let mut r = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let mut aps = Vec::new();
    for _ in 0..1000 {
        let labels: Vec<bool> = (0..r.gen_range(0..=15)).map(|_| r.gen_bool(0.4)).collect();
        let k = r.gen_range(1..=12);
        let total = labels.iter().filter(|&&x| x).count() + r.gen_range(0..=5);
        worst = worst.max((precision_at_k(&labels, k) - ref_precision(&labels, k)).abs());
        let ap = ap_at_k(&labels, total, k);
        worst = worst.max((ap - ref_ap(&labels, total, k)).abs());
        aps.push(ap);
    }
    let mean = aps.iter().sum::<f64>() / aps.len() as f64;
    worst = worst.max((map_at_k(&aps).map_err(|e| e.to_string())? - mean).abs());
    within_budget(start.elapsed(), Duration::from_secs(5))?;
    check(worst <= 1e-12, format!("1000 lists, max |diff| = {worst:e}, {:?}", start.elapsed()))
}

fn worked_metrics() -> Outcome {
    let (t, f) = (true, false);
    let ap = ap_at_k(&[t, f, t, f, f], 2, 5);
    let p = precision_at_k(&[t, t], 5);
    check(ap == 5.0 / 6.0 && p == 0.4, format!("AP = {ap:?}, P = {p:?}"))
}

fn bm25_correctness() -> Outcome {
    let start = Instant::now();
    let titled = |titles: &[&str]| {
        let products: Vec<Product> = titles
            .iter()
            .enumerate()
            .map(|(i, t)| Product {
                id: format!("d{}", i + 1),
                title: t.to_string(),
                ..Default::default()
            })
            .collect();
        let c = Catalog::from_products(products, AttributeSchema::default()).unwrap();
        InvertedIndex::build(&c, &[TextField::Title], Bm25Params::default(), TokenizerConfig::default()).unwrap()
    };
    let idx = titled(&["red toy car", "blue toy", "red car"]);
    let q = vec!["red".to_string(), "car".to_string()];
    let frozen = [("d1", 0.8416344058586429), ("d2", 0.0), ("d3", 0.9983525366047352)];
    for (id, want) in frozen {
        let got = idx.bm25_score(&q, id).map_err(|e| e.to_string())?;
        if (got - want).abs() > 1e-9 {
            return Err(format!("{id}: {got} vs {want}"));
        }
    }
    let ranked: Vec<String> = idx.search("red car", 2).into_iter().map(|x| x.product_id).collect();
    if ranked != ["d3", "d1"] {
        return Err(format!("hand corpus ranking {ranked:?}"));
    }

    const VOCAB: &[&str] = &["red", "blue", "toy", "car", "train", "doll", "wooden", "kit", "fast", "big"];
    let mut r = ChaCha8Rng::seed_from_u64(3);
    for round in 0..100 {
        let n = r.gen_range(1..=20);
        let docs: Vec<Vec<String>> = (0..n)
            .map(|_| (0..r.gen_range(1..=8)).map(|_| VOCAB.choose(&mut r).unwrap().to_string()).collect())
            .collect();
        let joined: Vec<String> = docs.iter().map(|d| d.join(" ")).collect();
        let idx = titled(&joined.iter().map(String::as_str).collect::<Vec<_>>());
        let query: Vec<String> = (0..r.gen_range(1..=8)).map(|_| VOCAB.choose(&mut r).unwrap().to_string()).collect();
        let reference = ref_bm25(&docs, &query, 1.2, 0.75);
        let want = top_n(
            reference
                .iter()
                .enumerate()
                .filter(|(_, s)| **s > 0.0)
                .map(|(i, s)| (format!("d{}", i + 1), *s)),
            n,
        );
        let got = idx.search(&query.join(" "), n);
        let ids = |v: &[RankedResult]| v.iter().map(|x| x.product_id.clone()).collect::<Vec<_>>();
        if ids(&got) != ids(&want) {
            return Err(format!("corpus {round}: ranking differs from the naive reference"));
        }
        for (g, w) in got.iter().zip(&want) {
            if (g.score - w.score).abs() > 1e-9 {
                return Err(format!("corpus {round}: {} scored {} vs {}", g.product_id, g.score, w.score));
            }
        }
    }
    within_budget(start.elapsed(), Duration::from_secs(10))?;
    check(true, format!("hand corpus within 1e-9, 100 random corpora agree, {:?}", start.elapsed()))
}

fn filter_oracle() -> Outcome {
    let policy = FilterPolicy::default();
    let mut r = ChaCha8Rng::seed_from_u64(4);
    for round in 0..200 {
        let c = random_catalog(&mut r);
        let cs = random_constraints(&mut r);
        let got = filter_catalog(&c, &cs, &policy);
        let want: BTreeSet<String> = c
            .products()
            .filter(|p| cs.iter().all(|x| ref_satisfies(p, x)))
            .map(|p| p.id.clone())
            .collect();
        if got != want {
            return Err(format!("pair {round} differs for {cs:?}"));
        }
    }
    let priced = |v: f64| {
        Catalog::from_products(
            vec![Product {
                id: "x".into(),
                title: "x".into(),
                price: Some(v),
                ..Default::default()
            }],
            AttributeSchema::default(),
        )
        .unwrap()
    };
    let cap = [Constraint::at_most("price", 100.0)];
    let keeps_110 = filter_catalog(&priced(110.0), &cap, &policy).len() == 1;
    let drops_121 = filter_catalog(&priced(121.0), &cap, &policy).is_empty();
    check(keeps_110 && drops_121, "200 pairs match brute force; 110 passes at_most 100".into())
}

fn qam_constraints() -> Outcome {
    let cfg = Config::default();
    let corpus = generate_synthetic_corpus(cfg.seed, 200, 50, &cfg.policy()).map_err(|e| e.to_string())?;
    let engine = SearchEngine::build(corpus.catalog, &cfg).map_err(|e| e.to_string())?;
    let mut checked = 0;
    for q in &corpus.queries {
        let out = engine.search(StrategyId::Qam, &q.text, 10).map_err(|e| e.to_string())?;
        let d = out.trace.decomposition.as_ref().ok_or("missing decomposition")?;
        let allowed = engine.filter(&d.constraints);
        for res in &out.results {
            let p = engine.catalog().get(&res.product_id).ok_or("unknown id")?;
            if !allowed.contains(&p.id) || !d.constraints.iter().all(|c| ref_satisfies(p, c)) {
                return Err(format!("{} violates constraints of {:?}", p.id, q.text));
            }
            checked += 1;
        }
    }
    check(checked > 0, format!("{checked} results over 50 queries re-checked"))
}

fn directional() -> Outcome {
    let start = Instant::now();
    let cfg = Config::default();
    let (_, _, eval) = run_synthetic(&cfg, &StrategyId::ALL).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let at5: BTreeMap<StrategyId, f64> = StrategyId::ALL
        .iter()
        .map(|&s| (s, eval.report.map_at(s, 5).unwrap_or(0.0)))
        .collect();
    let qam = at5[&StrategyId::Qam];
    let summary = StrategyId::ALL
        .iter()
        .map(|s| format!("{}={:.2}%", s.as_str(), at5[s] * 100.0))
        .collect::<Vec<_>>()
        .join(" ");
    within_budget(elapsed, Duration::from_secs(60))?;
    let margin = qam - at5[&StrategyId::Keyword] >= 0.05;
    let dominates = at5.values().all(|&v| qam >= v);
    check(margin && dominates, format!("mAP@5 {summary}, {elapsed:?}"))
}

fn rrf_values() -> Outcome {
    let list = |ids: &[&str]| top_n(ids.iter().enumerate().map(|(i, id)| (id.to_string(), -(i as f64))), ids.len());
    let tie = rrf_fuse(&[list(&["x", "y"]), list(&["y", "x"])], 60.0, 10);
    let tie_ok = tie.len() == 2
        && tie[0].score == tie[1].score
        && tie[0].score == 1.0 / 61.0 + 1.0 / 62.0
        && tie[0].product_id == "x";
    let both = rrf_fuse(&[list(&["a", "b"]), list(&["c", "b"])], 60.0, 10);
    let score = |id: &str| both.iter().find(|r| r.product_id == id).map(|r| r.score);
    let both_ok = score("b") == Some(2.0 / 62.0) && score("a") == Some(1.0 / 61.0) && both[0].product_id == "b";
    check(tie_ok && both_ok, format!("tie {:.6}, 2/62 = {:.6} > 1/61 = {:.6}", tie[0].score, 2.0 / 62.0, 1.0 / 61.0))
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let ws = Workspace::new(tmp.path().join("ws"));
    let cfg = Config::default();
    let sample = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/sample_catalog.jsonl");
    let mut sink = Vec::new();
    let args = IngestArgs {
        catalog: Some(&sample),
        format: None,
        mapping: None,
    };
    cmd_ingest(&ws, &cfg, args, &mut sink).map_err(|e| e.to_string())?;
    let mut index_runs = Vec::new();
    for _ in 0..2 {
        cmd_index(&ws, &cfg, &mut sink).map_err(|e| e.to_string())?;
        index_runs.push([ws.lexical(), ws.vectors()].map(|p| std::fs::read(p).unwrap()));
    }
    let mut eval_runs = Vec::new();
    for run in 0..2 {
        let out = tmp.path().join(format!("eval{run}"));
        let args = EvalArgs {
            strategies: StrategyId::ALL.to_vec(),
            source: QuerySource::Synthetic,
            out_dir: Some(&out),
        };
        cmd_eval(&ws, &cfg, args, &mut sink).map_err(|e| e.to_string())?;
        eval_runs.push(files(&out));
    }
    let index_same = index_runs[0] == index_runs[1];
    let eval_same = eval_runs[0] == eval_runs[1] && !eval_runs[0].is_empty();
    check(
        index_same && eval_same,
        format!("index files identical: {index_same}; {} eval files identical: {eval_same}", eval_runs[0].len()),
    )
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 8] = [
        ("metric oracle equivalence", metric_oracle),
        ("worked metric values", worked_metrics),
        ("bm25 correctness", bm25_correctness),
        ("filter oracle", filter_oracle),
        ("qam constraint satisfaction", qam_constraints),
        ("directional strategy ordering", directional),
        ("rrf worked values", rrf_values),
        ("artifact determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS [{}] {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{}] {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
