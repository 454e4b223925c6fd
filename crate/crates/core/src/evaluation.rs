//! Relevance judging, rank metrics, the synthetic benchmark corpus and the
//! per-strategy comparison report.
//!
//! Conventions:
//! - lists shorter than k are padded with non-relevant entries;
//! - at each k, only queries with at least k relevant items are aggregated;
//! - the relevant count comes from ground truth when a query carries one,
//!   otherwise from judged-relevant results pooled across all strategies.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::{AttributeSchema, Catalog, Product, Review};
use crate::error::{Error, Result};
use crate::filter::{satisfies_all, FilterPolicy};
use crate::par::{self, Execution};
use crate::pipeline::{RunRecord, SearchEngine, StrategyId};
use crate::query::{Constraint, DecomposedQuery};
use crate::text::{is_stopword, tokenize};

// ---------------------------------------------------------------------------
// metrics

/// Fraction of relevant items among the first `k`; missing positions count
/// as non-relevant.
pub fn precision_at_k(labels: &[bool], k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let hits = labels.iter().take(k).filter(|&&l| l).count();
    hits as f64 / k as f64
}

/// `(1 / min(k, R)) · Σ_{i ≤ k} P@i · rel(i)`, defined as 0 when `R = 0`.
///
/// Summed as an exact fraction while it fits, so the result is the nearest
/// double to the true value (5/6 comes out as `5.0 / 6.0`).
pub fn ap_at_k(labels: &[bool], total_relevant: usize, k: usize) -> f64 {
    let denom = k.min(total_relevant);
    if denom == 0 {
        return 0.0;
    }
    let ap = ap_exact(labels, denom as u128, k).unwrap_or_else(|| {
        let mut hits = 0usize;
        let mut sum = 0.0;
        for (i, &rel) in labels.iter().take(k).enumerate() {
            if rel {
                hits += 1;
                sum += hits as f64 / (i + 1) as f64;
            }
        }
        sum / denom as f64
    });
    // Clamp guards against callers passing a total below the hits they label.
    ap.min(1.0)
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn ap_exact(labels: &[bool], denom: u128, k: usize) -> Option<f64> {
    const EXACT: u128 = 1 << 53;
    let (mut num, mut den) = (0u128, 1u128);
    let mut hits = 0u128;
    for (i, &rel) in labels.iter().take(k).enumerate() {
        if !rel {
            continue;
        }
        hits += 1;
        let pos = i as u128 + 1;
        // num/den + hits/pos
        num = num.checked_mul(pos)?.checked_add(hits.checked_mul(den)?)?;
        den = den.checked_mul(pos)?;
        let g = gcd(num, den);
        (num, den) = (num / g, den / g);
    }
    den = den.checked_mul(denom)?;
    let g = gcd(num, den).max(1);
    (num, den) = (num / g, den / g);
    (num < EXACT && den < EXACT).then(|| num as f64 / den as f64)
}

pub fn map_at_k(per_query_ap: &[f64]) -> Result<f64> {
    if per_query_ap.is_empty() {
        return Err(Error::InvalidArgument("mAP over an empty query set".into()));
    }
    Ok(per_query_ap.iter().sum::<f64>() / per_query_ap.len() as f64)
}

// ---------------------------------------------------------------------------
// judging

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgment {
    pub query_id: String,
    pub product_id: String,
    pub relevant: bool,
    pub judge_id: String,
}

/// Decides whether a product answers a query, e.g. an LLM adapter.
pub trait Judge: Send + Sync {
    fn id(&self) -> &str;
    fn judge(&self, query: &str, decomposition: &DecomposedQuery, product: &Product) -> bool;
}

/// Relevant iff every constraint holds under the policy and, when the residual
/// has content words, at least `min_overlap` of them occur in the product text.
pub fn judge_deterministic(
    d: &DecomposedQuery,
    p: &Product,
    policy: &FilterPolicy,
    min_overlap: usize,
) -> bool {
    if !satisfies_all(p, &d.constraints, policy) {
        return false;
    }
    let wanted: BTreeSet<String> = tokenize(&d.semantic_residual)
        .into_iter()
        .filter(|t| !is_stopword(t))
        .collect();
    if wanted.is_empty() {
        return true;
    }
    let text: BTreeSet<String> = tokenize(&p.full_text()).into_iter().collect();
    let shared = wanted.intersection(&text).count();
    shared >= min_overlap.min(wanted.len())
}

#[derive(Clone, Debug)]
pub struct DeterministicJudge {
    pub policy: FilterPolicy,
    pub min_overlap: usize,
}

impl DeterministicJudge {
    pub fn new(policy: FilterPolicy) -> Self {
        DeterministicJudge {
            policy,
            min_overlap: 1,
        }
    }
}

impl Judge for DeterministicJudge {
    fn id(&self) -> &str {
        "deterministic"
    }

    fn judge(&self, _query: &str, d: &DecomposedQuery, p: &Product) -> bool {
        judge_deterministic(d, p, &self.policy, self.min_overlap)
    }
}

// ---------------------------------------------------------------------------
// queries

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalQuery {
    pub id: String,
    #[serde(alias = "query")]
    pub text: String,
    /// Known decomposition; judges use it instead of parsing `text`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intent: Option<DecomposedQuery>,
    /// Ground-truth relevant ids, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relevant: Option<BTreeSet<String>>,
}

pub fn load_queries(path: &Path) -> Result<Vec<EvalQuery>> {
    read_jsonl(path)
}

pub fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| {
            Error::InvalidArgument(format!("{}:{}: {e}", path.display(), n + 1))
        })?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// synthetic corpus

struct Kind {
    noun: &'static str,
    related: [&'static str; 3],
    price: (u32, u32),
}

const KINDS: &[Kind] = &[
    Kind { noun: "puzzle", related: ["jigsaw", "pieces", "picture"], price: (8, 40) },
    Kind { noun: "robot", related: ["coding", "motor", "sensors"], price: (30, 150) },
    Kind { noun: "doll", related: ["outfit", "hair", "accessories"], price: (10, 60) },
    Kind { noun: "kite", related: ["wind", "flying", "outdoor"], price: (8, 45) },
    Kind { noun: "train", related: ["tracks", "engine", "wagons"], price: (20, 120) },
];
const BRANDS: &[&str] = &["LEGO", "Hasbro", "Mattel", "Playmobil", "Melissa & Doug"];
const SYNTH_COLORS: &[&str] = &["red", "blue", "green", "yellow", "pink", "black"];
const ADJECTIVES: &[&str] = &["Deluxe", "Classic", "Mini", "Super", "Creative", "Junior"];
const MIN_AGES: &[u32] = &[3, 4, 5, 6, 8, 10];
const AGE_SPANS: &[u32] = &[2, 3, 4, 6];
const FILLER: &[&str] = &[
    "Makes a wonderful gift.",
    "Made from durable materials.",
    "Encourages imaginative play.",
    "Easy to clean and store.",
];
const REVIEWS: &[&str] = &[
    "My kids love this {noun}.",
    "Great quality for the price.",
    "Arrived quickly and well packaged.",
    "A perfect birthday gift.",
    "Kept them busy for hours.",
    "The best {noun} we have owned.",
    "Sturdy and colorful.",
];

/// A generated benchmark: catalog, queries with intents and ground truth.
#[derive(Clone, Debug)]
pub struct SyntheticCorpus {
    pub catalog: Catalog,
    pub queries: Vec<EvalQuery>,
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next()
        .map(|f| f.to_uppercase().collect::<String>() + c.as_str())
        .unwrap_or_default()
}

fn synth_product(rng: &mut ChaCha8Rng, index: usize) -> Product {
    let id = format!("p{index:04}");
    let kind = KINDS.choose(rng).unwrap();
    let brand = *BRANDS.choose(rng).unwrap();
    let color = *SYNTH_COLORS.choose(rng).unwrap();
    let adjective = *ADJECTIVES.choose(rng).unwrap();
    let min_age = *MIN_AGES.choose(rng).unwrap();
    let max_age = min_age + *AGE_SPANS.choose(rng).unwrap();
    let price = f64::from(rng.gen_range(kind.price.0..=kind.price.1)) + 0.99;
    let rating = f64::from(rng.gen_range(25u32..=50)) / 10.0;
    let mut related = kind.related.to_vec();
    related.shuffle(rng);
    let description = format!(
        "A {} {} with {} and {} by {}. Ages {}-{}. {}",
        color,
        kind.noun,
        related[0],
        related[1],
        brand,
        min_age,
        max_age,
        FILLER.choose(rng).unwrap()
    );
    let n_reviews = rng.gen_range(1..=3);
    let reviews = REVIEWS
        .choose_multiple(rng, n_reviews)
        .map(|t| Review {
            product_id: id.clone(),
            text: t.replace("{noun}", kind.noun),
            rating: Some(f64::from(rng.gen_range(1u32..=5))),
        })
        .collect();
    Product {
        title: format!("{} {} {}", adjective, capitalize(color), capitalize(kind.noun)),
        id,
        description,
        brand: Some(brand.to_string()),
        color: Some(color.to_string()),
        price: Some(price),
        rating: Some(rating),
        min_age: Some(min_age),
        max_age: Some(max_age),
        categories: vec!["toys".into(), kind.noun.to_string()],
        reviews,
    }
}

fn noun_of(p: &Product) -> &'static str {
    KINDS
        .iter()
        .find(|k| p.categories.iter().any(|c| c == k.noun))
        .map(|k| k.noun)
        .expect("synthetic product has a kind")
}

fn brand_display(normalized: &str) -> &'static str {
    BRANDS
        .iter()
        .find(|b| b.to_lowercase() == normalized)
        .copied()
        .expect("synthetic brand")
}

/// Rounds a price up to the next multiple of 5.
fn cap_above(price: f64, rng: &mut ChaCha8Rng) -> f64 {
    let stretched = price * rng.gen_range(1.0..1.5);
    (stretched / 5.0).ceil() * 5.0
}

/// Query text and its intended constraints, built around `anchor` so the
/// anchor is always relevant.
fn synth_query(rng: &mut ChaCha8Rng, anchor: &Product) -> (String, Vec<Constraint>) {
    let noun = noun_of(anchor);
    let brand_norm = anchor.brand.clone().unwrap();
    let brand = brand_display(&brand_norm);
    let color = anchor.color.clone().unwrap();
    let price = anchor.price.unwrap();
    let (lo, hi) = (anchor.min_age.unwrap(), anchor.max_age.unwrap());
    let child_age = rng.gen_range(lo..=hi);
    let (a, b) = {
        let a = rng.gen_range(lo.saturating_sub(2)..=lo);
        (a, a + rng.gen_range(2..=4))
    };
    let template = if anchor.rating.unwrap() >= 4.0 {
        rng.gen_range(0..7)
    } else {
        rng.gen_range(0..6)
    };
    match template {
        0 => {
            let cap = cap_above(price, rng);
            (
                format!("{noun} from {brand} under ${cap}"),
                vec![
                    Constraint::equals("brand", &brand_norm),
                    Constraint::at_most("price", cap),
                ],
            )
        }
        1 => {
            let around = price.round();
            (
                format!("Looking for a {noun} for my {child_age}-year-old, priced around ${around}"),
                vec![
                    Constraint::between("age", f64::from(child_age), f64::from(child_age)),
                    Constraint::around("price", around),
                ],
            )
        }
        2 => (
            format!("{} {noun} for kids aged {a}-{b}", capitalize(&color)),
            vec![
                Constraint::equals("color", &color),
                Constraint::between("age", f64::from(a), f64::from(b)),
            ],
        ),
        3 => (
            format!("Can I find {brand} {noun} sets for kids aged {a} to {b}?"),
            vec![
                Constraint::equals("brand", &brand_norm),
                Constraint::between("age", f64::from(a), f64::from(b)),
            ],
        ),
        4 => (
            format!("{} {noun} by {brand}", capitalize(&color)),
            vec![
                Constraint::equals("color", &color),
                Constraint::equals("brand", &brand_norm),
            ],
        ),
        5 => {
            let cap = cap_above(price, rng);
            (
                format!("a {noun} for a {child_age} year old under ${cap}"),
                vec![
                    Constraint::between("age", f64::from(child_age), f64::from(child_age)),
                    Constraint::at_most("price", cap),
                ],
            )
        }
        _ => {
            let cap = cap_above(price, rng);
            (
                format!(
                    "Locate a top-rated {noun} from {brand} for kids aged {a}-{b} within a budget of ${cap}"
                ),
                vec![
                    Constraint::at_least("rating", crate::query::DEFAULT_TOP_RATED_THRESHOLD),
                    Constraint::equals("brand", &brand_norm),
                    Constraint::between("age", f64::from(a), f64::from(b)),
                    Constraint::at_most("price", cap),
                ],
            )
        }
    }
}

/// Deterministic benchmark corpus for `seed`.
///
/// Products draw kind, brand, color, price, rating and age range from fixed
/// lexicons. Each query is templated around an anchor product; its intent is
/// the templated constraints plus the product noun as residual, and its ground
/// truth is every product the deterministic judge accepts for that intent
/// under `policy`.
pub fn generate_synthetic_corpus(
    seed: u64,
    n_products: usize,
    n_queries: usize,
    policy: &FilterPolicy,
) -> Result<SyntheticCorpus> {
    if n_products == 0 || n_queries == 0 {
        return Err(Error::InvalidArgument("corpus sizes must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let products: Vec<Product> = (0..n_products).map(|i| synth_product(&mut rng, i)).collect();
    let catalog = Catalog::from_products(products, AttributeSchema::default())?;
    let all: Vec<&Product> = catalog.products().collect();
    let judge = DeterministicJudge::new(*policy);

    let mut queries = Vec::with_capacity(n_queries);
    let mut attempts = 0usize;
    while queries.len() < n_queries {
        attempts += 1;
        if attempts > n_queries * 100 {
            return Err(Error::InvalidArgument(
                "could not generate queries with non-empty ground truth".into(),
            ));
        }
        let anchor = *all.choose(&mut rng).unwrap();
        let (text, constraints) = synth_query(&mut rng, anchor);
        let intent = DecomposedQuery {
            raw: text.clone(),
            constraints,
            semantic_residual: noun_of(anchor).to_string(),
        };
        let relevant: BTreeSet<String> = all
            .iter()
            .filter(|p| judge.judge(&text, &intent, p))
            .map(|p| p.id.clone())
            .collect();
        if relevant.is_empty() {
            continue;
        }
        queries.push(EvalQuery {
            id: format!("q{:03}", queries.len()),
            text,
            intent: Some(intent),
            relevant: Some(relevant),
        });
    }
    Ok(SyntheticCorpus { catalog, queries })
}

// ---------------------------------------------------------------------------
// report

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelMetrics {
    pub k: usize,
    /// Queries with at least `k` relevant items.
    pub queries: usize,
    pub precision: Option<f64>,
    pub map: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryBreakdown {
    pub query_id: String,
    pub total_relevant: usize,
    /// AP@k per entry of the report's k set; `None` where the query was excluded.
    pub ap: Vec<Option<f64>>,
    pub precision: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyMetrics {
    pub strategy: StrategyId,
    pub levels: Vec<LevelMetrics>,
    pub per_query: Vec<QueryBreakdown>,
}

impl StrategyMetrics {
    pub fn level(&self, k: usize) -> Option<&LevelMetrics> {
        self.levels.iter().find(|l| l.k == k)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub format_version: u32,
    pub k_set: Vec<usize>,
    pub query_count: usize,
    pub judge_id: String,
    pub notes: Vec<String>,
    pub strategies: Vec<StrategyMetrics>,
}

pub const REPORT_FORMAT_VERSION: u32 = 1;
const TABLE_COLUMNS: [(&str, usize); 6] = [("P", 3), ("P", 5), ("P", 10), ("mAP", 3), ("mAP", 5), ("mAP", 10)];

impl MetricReport {
    pub fn strategy(&self, s: StrategyId) -> Option<&StrategyMetrics> {
        self.strategies.iter().find(|m| m.strategy == s)
    }

    pub fn map_at(&self, s: StrategyId, k: usize) -> Option<f64> {
        self.strategy(s)?.level(k)?.map
    }

    pub fn precision_at(&self, s: StrategyId, k: usize) -> Option<f64> {
        self.strategy(s)?.level(k)?.precision
    }

    /// Plain-text table: one row per strategy, P@3/5/10 then mAP@3/5/10 in percent.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let width = self
            .strategies
            .iter()
            .map(|s| s.strategy.label().len())
            .max()
            .unwrap_or(0)
            .max("Method".len());
        let _ = write!(out, "{:<width$}", "Method");
        for (name, k) in TABLE_COLUMNS {
            let _ = write!(out, " | {:>8}", format!("{name}@{k}"));
        }
        out.push('\n');
        out.push_str(&"-".repeat(width + TABLE_COLUMNS.len() * 11));
        out.push('\n');
        for s in &self.strategies {
            let _ = write!(out, "{:<width$}", s.strategy.label());
            for (name, k) in TABLE_COLUMNS {
                let v = s.level(k).and_then(|l| if name == "P" { l.precision } else { l.map });
                let cell = v.map_or("-".to_string(), |v| format!("{:.2}%", v * 100.0));
                let _ = write!(out, " | {cell:>8}");
            }
            out.push('\n');
        }
        let counts: Vec<String> = [3, 5, 10]
            .iter()
            .filter_map(|&k| {
                let n = self.strategies.first()?.level(k)?.queries;
                Some(format!("k={k}: {n}"))
            })
            .collect();
        let _ = writeln!(
            out,
            "queries: {} total; aggregated at {}",
            self.query_count,
            counts.join(", ")
        );
        out
    }
}

/// Computes the report from run records and judgments alone.
///
/// `ground_truth` gives the relevant count for queries that have one; other
/// queries use the pooled count of judged-relevant results.
pub fn build_report(
    runs: &[RunRecord],
    judgments: &[Judgment],
    ground_truth: &BTreeMap<String, usize>,
    query_ids: &[String],
    k_set: &[usize],
) -> Result<MetricReport> {
    if query_ids.is_empty() {
        return Err(Error::InvalidArgument("no queries to evaluate".into()));
    }
    let mut k_set = k_set.to_vec();
    k_set.sort_unstable();
    k_set.dedup();

    let mut label: BTreeMap<(&str, &str), bool> = BTreeMap::new();
    let mut judge_ids = BTreeSet::new();
    for j in judgments {
        label.insert((j.query_id.as_str(), j.product_id.as_str()), j.relevant);
        judge_ids.insert(j.judge_id.as_str());
    }
    let mut pooled: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for ((q, p), rel) in &label {
        if *rel {
            pooled.entry(q).or_default().insert(p);
        }
    }
    let total_relevant = |q: &str| {
        ground_truth
            .get(q)
            .copied()
            .unwrap_or_else(|| pooled.get(q).map_or(0, BTreeSet::len))
    };

    let mut by_strategy: BTreeMap<StrategyId, BTreeMap<&str, &RunRecord>> = BTreeMap::new();
    for r in runs {
        by_strategy
            .entry(r.strategy)
            .or_default()
            .insert(r.query_id.as_str(), r);
    }

    let mut strategies = Vec::new();
    for (strategy, per_q) in by_strategy {
        let mut per_query = Vec::new();
        for q in query_ids {
            let labels: Vec<bool> = per_q
                .get(q.as_str())
                .map(|r| {
                    r.results
                        .iter()
                        .map(|x| label.get(&(q.as_str(), x.product_id.as_str())).copied().unwrap_or(false))
                        .collect()
                })
                .unwrap_or_default();
            let total = total_relevant(q);
            let eligible = |k: usize| total >= k;
            per_query.push(QueryBreakdown {
                query_id: q.clone(),
                total_relevant: total,
                ap: k_set
                    .iter()
                    .map(|&k| eligible(k).then(|| ap_at_k(&labels, total, k)))
                    .collect(),
                precision: k_set
                    .iter()
                    .map(|&k| eligible(k).then(|| precision_at_k(&labels, k)))
                    .collect(),
            });
        }
        let levels = k_set
            .iter()
            .enumerate()
            .map(|(i, &k)| {
                let aps: Vec<f64> = per_query.iter().filter_map(|b| b.ap[i]).collect();
                let ps: Vec<f64> = per_query.iter().filter_map(|b| b.precision[i]).collect();
                LevelMetrics {
                    k,
                    queries: aps.len(),
                    precision: map_at_k(&ps).ok(),
                    map: map_at_k(&aps).ok(),
                }
            })
            .collect();
        strategies.push(StrategyMetrics {
            strategy,
            levels,
            per_query,
        });
    }

    Ok(MetricReport {
        format_version: REPORT_FORMAT_VERSION,
        k_set,
        query_count: query_ids.len(),
        judge_id: judge_ids.into_iter().collect::<Vec<_>>().join(","),
        notes: vec![
            "results shorter than k are padded with non-relevant entries for every strategy".into(),
            "queries with fewer than k relevant items are excluded at level k".into(),
            "relevant counts come from ground truth when available, else from judged-relevant results pooled across strategies".into(),
        ],
        strategies,
    })
}

/// Everything an evaluation run produces.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub report: MetricReport,
    pub runs: Vec<RunRecord>,
    pub judgments: Vec<Judgment>,
}

/// Runs `strategies` over `queries` at depth `depth`, judges every returned
/// product once per query, and builds the report.
pub fn evaluate(
    engine: &SearchEngine,
    strategies: &[StrategyId],
    queries: &[EvalQuery],
    judge: &dyn Judge,
    k_set: &[usize],
    depth: usize,
) -> Result<Evaluation> {
    evaluate_with(engine.options().execution, engine, strategies, queries, judge, k_set, depth)
}

pub fn evaluate_with(
    exec: Execution,
    engine: &SearchEngine,
    strategies: &[StrategyId],
    queries: &[EvalQuery],
    judge: &dyn Judge,
    k_set: &[usize],
    depth: usize,
) -> Result<Evaluation> {
    if queries.is_empty() {
        return Err(Error::InvalidArgument("no queries to evaluate".into()));
    }
    if strategies.is_empty() {
        return Err(Error::InvalidArgument("no strategies to evaluate".into()));
    }
    let mut ids = BTreeSet::new();
    if let Some(dup) = queries.iter().find(|q| !ids.insert(q.id.as_str())) {
        return Err(Error::InvalidArgument(format!("duplicate query id `{}`", dup.id)));
    }

    let per_query = par::map(exec, queries, |q| -> Result<(Vec<RunRecord>, Vec<Judgment>)> {
        let mut runs = Vec::with_capacity(strategies.len());
        for &s in strategies {
            let out = engine.search(s, &q.text, depth)?;
            runs.push(RunRecord {
                query_id: q.id.clone(),
                strategy: s,
                results: out.results,
                trace: out.trace,
            });
        }
        let intent = match &q.intent {
            Some(d) => d.clone(),
            None => engine.decompose(&q.text)?.0,
        };
        let pool: BTreeSet<&str> = runs
            .iter()
            .flat_map(|r| r.results.iter().map(|x| x.product_id.as_str()))
            .collect();
        let judgments = pool
            .into_iter()
            .map(|pid| {
                let p = engine.catalog().product(pid)?;
                Ok(Judgment {
                    query_id: q.id.clone(),
                    product_id: pid.to_string(),
                    relevant: judge.judge(&q.text, &intent, p),
                    judge_id: judge.id().to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((runs, judgments))
    });

    let mut runs = Vec::new();
    let mut judgments = Vec::new();
    for item in per_query {
        let (r, j) = item?;
        runs.extend(r);
        judgments.extend(j);
    }
    // strategy-major order, queries in input order
    let order: BTreeMap<&str, usize> = queries.iter().enumerate().map(|(i, q)| (q.id.as_str(), i)).collect();
    runs.sort_by_key(|r| (r.strategy, order[r.query_id.as_str()]));

    let ground_truth: BTreeMap<String, usize> = queries
        .iter()
        .filter_map(|q| q.relevant.as_ref().map(|r| (q.id.clone(), r.len())))
        .collect();
    let query_ids: Vec<String> = queries.iter().map(|q| q.id.clone()).collect();
    let report = build_report(&runs, &judgments, &ground_truth, &query_ids, k_set)?;
    Ok(Evaluation {
        report,
        runs,
        judgments,
    })
}

/// Generates the seed-fixed synthetic corpus from `config`, builds an engine
/// over it and evaluates `strategies` with the deterministic judge.
pub fn run_synthetic(
    config: &crate::config::Config,
    strategies: &[StrategyId],
) -> Result<(SearchEngine, SyntheticCorpus, Evaluation)> {
    let policy = config.policy();
    let corpus = generate_synthetic_corpus(
        config.seed,
        config.synthetic_products,
        config.synthetic_queries,
        &policy,
    )?;
    let engine = SearchEngine::build(corpus.catalog.clone(), config)?;
    let judge = DeterministicJudge {
        policy,
        min_overlap: config.judge_min_overlap,
    };
    let depth = config.k_set.iter().copied().max().unwrap_or(config.result_size);
    let eval = evaluate(&engine, strategies, &corpus.queries, &judge, &config.k_set, depth)?;
    Ok((engine, corpus, eval))
}

#[cfg(test)]
mod tests {
    use super::*;

    const T: bool = true;
    const F: bool = false;

    #[test]
    fn precision_examples() {
        assert!((precision_at_k(&[T, T, T, F, F], 5) - 0.6).abs() < 1e-15);
        assert_eq!(precision_at_k(&[T, T], 5), 0.4);
        assert_eq!(precision_at_k(&[F, F, F], 3), 0.0);
    }

    #[test]
    fn ap_examples() {
        assert_eq!(ap_at_k(&[T, F, T, F, F], 2, 5), 5.0 / 6.0);
        assert_eq!(ap_at_k(&[T, T, T], 3, 3), 1.0);
        assert_eq!(ap_at_k(&[T, T], 0, 3), 0.0);
        // padding: a two-item list with two relevant items is perfect at k = 5
        assert_eq!(ap_at_k(&[T, T], 2, 5), 1.0);
    }

    #[test]
    fn map_examples() {
        assert_eq!(map_at_k(&[1.0, 0.0]).unwrap(), 0.5);
        assert_eq!(map_at_k(&[0.37]).unwrap(), 0.37);
        assert!(map_at_k(&[]).is_err());
    }

    fn product(brand: &str, price: f64, title: &str) -> Product {
        Product {
            id: "p".into(),
            title: title.into(),
            brand: Some(brand.into()),
            price: Some(price),
            ..Default::default()
        }
    }

    #[test]
    fn deterministic_judge_rules() {
        let pol = FilterPolicy::default();
        let d = DecomposedQuery {
            raw: "a long dress from zara under $100".into(),
            constraints: vec![
                Constraint::equals("brand", "zara"),
                Constraint::at_most("price", 100.0),
            ],
            semantic_residual: "a long dress".into(),
        };
        assert!(judge_deterministic(&d, &product("zara", 115.0, "Evening dress"), &pol, 1));
        assert!(!judge_deterministic(&d, &product("mango", 50.0, "Evening dress"), &pol, 1));
        assert!(!judge_deterministic(&d, &product("zara", 50.0, "Wool coat"), &pol, 1));
        let free = DecomposedQuery::passthrough("wool coat");
        assert!(judge_deterministic(&free, &product("x", 1.0, "Wool coat"), &pol, 1));
        // residual made of stopwords only is vacuous
        let stop = DecomposedQuery::passthrough("for the");
        assert!(judge_deterministic(&stop, &product("x", 1.0, "anything"), &pol, 1));
    }

    #[test]
    fn synthetic_corpus_is_deterministic_and_non_empty() {
        let pol = FilterPolicy::default();
        let a = generate_synthetic_corpus(7, 60, 12, &pol).unwrap();
        let b = generate_synthetic_corpus(7, 60, 12, &pol).unwrap();
        assert_eq!(a.catalog, b.catalog);
        assert_eq!(a.queries, b.queries);
        assert_eq!(a.queries.len(), 12);
        assert!(a.queries.iter().all(|q| !q.relevant.as_ref().unwrap().is_empty()));
        let c = generate_synthetic_corpus(8, 60, 12, &pol).unwrap();
        assert_ne!(a.catalog, c.catalog);
        assert!(generate_synthetic_corpus(1, 0, 1, &pol).is_err());
    }

    #[test]
    fn report_table_layout() {
        let run = |s: StrategyId, ids: &[&str]| RunRecord {
            query_id: "q".into(),
            strategy: s,
            results: crate::rank::top_n(ids.iter().map(|i| (i.to_string(), 1.0)), 10),
            trace: serde_json::from_value(serde_json::json!({
                "strategy": s, "catalog_size": 3, "stages": []
            }))
            .unwrap(),
        };
        let runs: Vec<_> = StrategyId::ALL.iter().map(|&s| run(s, &["a", "b"])).collect();
        let judgments = vec![Judgment {
            query_id: "q".into(),
            product_id: "a".into(),
            relevant: true,
            judge_id: "j".into(),
        }];
        let gt = BTreeMap::from([("q".to_string(), 3usize)]);
        let r = build_report(&runs, &judgments, &gt, &["q".into()], &[1, 3, 5, 10]).unwrap();
        let table = r.table();
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 2 + 5 + 1);
        assert_eq!(lines[0].matches('|').count(), 6);
        assert!(lines[2].starts_with("Keyword Search"));
        assert!(lines[6].starts_with("QAM"));
        // 3 relevant: k = 3 aggregates the query, k = 5 and 10 do not
        assert_eq!(r.map_at(StrategyId::Qam, 3), Some(1.0 / 3.0));
        assert_eq!(r.precision_at(StrategyId::Qam, 1), Some(1.0));
        assert_eq!(r.map_at(StrategyId::Qam, 5), None);
        assert!(lines[6].contains("-"));
    }
}
