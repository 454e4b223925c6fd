//! Seeded generators and from-scratch reference implementations shared by the
//! integration tests. The references deliberately avoid the library's helpers.
#![allow(dead_code)]

use qam::catalog::{AttributeSchema, Catalog, Product, Review};
use qam::query::{Constraint, ConstraintKind};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const WORDS: &[&str] = &[
    "red", "blue", "toy", "car", "train", "doll", "puzzle", "wooden", "kit", "fast", "soft", "big",
];
pub const BRANDS: &[&str] = &["lego", "hasbro", "mattel", "zara"];
pub const COLORS: &[&str] = &["red", "blue", "green", "black"];
pub const CATEGORIES: &[&str] = &["toys", "games", "outdoor"];

pub fn words(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> Vec<String> {
    let n = rng.gen_range(lo..=hi);
    (0..n).map(|_| WORDS.choose(rng).unwrap().to_string()).collect()
}

/// Prices concentrate on the 100 ± 20% boundary so slack arithmetic is exercised.
fn price(rng: &mut ChaCha8Rng) -> f64 {
    const EDGE: &[f64] = &[80.0, 79.99, 100.0, 110.0, 120.0, 120.01, 9.6, 12.0, 14.4, 14.41];
    if rng.gen_bool(0.4) {
        *EDGE.choose(rng).unwrap()
    } else {
        f64::from(rng.gen_range(100u32..=20_000)) / 100.0
    }
}

pub fn random_product(rng: &mut ChaCha8Rng, i: usize) -> Product {
    let id = format!("p{i:03}");
    let min_age = rng.gen_bool(0.8).then(|| rng.gen_range(0u32..=12));
    let max_age = match min_age {
        Some(lo) if rng.gen_bool(0.8) => Some(lo + rng.gen_range(0..=6)),
        Some(_) => None,
        None => rng.gen_bool(0.3).then(|| rng.gen_range(2u32..=14)),
    };
    let reviews = (0..rng.gen_range(0..=2))
        .map(|_| Review {
            product_id: id.clone(),
            text: words(rng, 1, 5).join(" "),
            rating: None,
        })
        .collect();
    let n_categories = rng.gen_range(0..=2);
    Product {
        title: words(rng, 1, 4).join(" "),
        description: words(rng, 0, 8).join(" "),
        brand: rng.gen_bool(0.85).then(|| BRANDS.choose(rng).unwrap().to_string()),
        color: rng.gen_bool(0.85).then(|| COLORS.choose(rng).unwrap().to_string()),
        price: rng.gen_bool(0.9).then(|| price(rng)),
        rating: rng.gen_bool(0.85).then(|| f64::from(rng.gen_range(10u32..=50)) / 10.0),
        min_age,
        max_age,
        categories: CATEGORIES
            .choose_multiple(rng, n_categories)
            .map(|c| c.to_string())
            .collect(),
        reviews,
        id,
    }
}

pub fn random_catalog(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> Catalog {
    let n = rng.gen_range(lo..=hi);
    let products: Vec<Product> = (0..n).map(|i| random_product(rng, i)).collect();
    Catalog::from_products(products, AttributeSchema::default()).unwrap()
}

pub fn random_constraint(rng: &mut ChaCha8Rng) -> Constraint {
    match rng.gen_range(0..8) {
        0 => Constraint::equals("brand", BRANDS.choose(rng).unwrap()),
        1 => Constraint::equals("color", COLORS.choose(rng).unwrap()),
        2 => Constraint::equals("category", CATEGORIES.choose(rng).unwrap()),
        3 => Constraint::at_most("price", *[100.0, 10.0, 50.0].choose(rng).unwrap()),
        4 => Constraint::around("price", *[12.0, 100.0].choose(rng).unwrap()),
        5 => Constraint::at_least("rating", f64::from(rng.gen_range(1u32..=5))),
        6 => {
            let lo = rng.gen_range(0u32..=12);
            Constraint::between("age", f64::from(lo), f64::from(lo + rng.gen_range(0..=4)))
        }
        _ => {
            let lo = f64::from(rng.gen_range(5u32..=100));
            Constraint::between("price", lo, lo + f64::from(rng.gen_range(0u32..=80)))
        }
    }
}

pub fn random_constraints(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> Vec<Constraint> {
    let n = rng.gen_range(lo..=hi);
    (0..n).map(|_| random_constraint(rng)).collect()
}

// ---------------------------------------------------------------------------
// references

/// Okapi BM25 straight from the formula over raw token lists.
pub fn naive_bm25(docs: &[Vec<String>], query: &[String], k1: f64, b: f64) -> Vec<f64> {
    let n = docs.len() as f64;
    let avgdl = docs.iter().map(Vec::len).sum::<usize>() as f64 / n;
    let mut q: Vec<&String> = query.iter().collect();
    q.sort();
    q.dedup();
    docs.iter()
        .map(|d| {
            let mut s = 0.0;
            for t in &q {
                let tf = d.iter().filter(|w| w == t).count() as f64;
                if tf == 0.0 {
                    continue;
                }
                let df = docs.iter().filter(|x| x.contains(t)).count() as f64;
                let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
                let norm = if avgdl > 0.0 { d.len() as f64 / avgdl } else { 1.0 };
                s += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * norm));
            }
            s
        })
        .collect()
}

/// P@k: count hits in the first k positions of a padded list.
pub fn ref_precision(labels: &[bool], k: usize) -> f64 {
    let mut padded = labels.to_vec();
    padded.resize(k.max(labels.len()), false);
    padded[..k].iter().filter(|&&x| x).count() as f64 / k as f64
}

/// AP@k with P@i recomputed from scratch at every relevant position.
pub fn ref_ap(labels: &[bool], total: usize, k: usize) -> f64 {
    let denom = std::cmp::min(k, total);
    if denom == 0 {
        return 0.0;
    }
    let mut sum = 0.0;
    for i in 1..=k.min(labels.len()) {
        if labels[i - 1] {
            sum += ref_precision(labels, i);
        }
    }
    sum / denom as f64
}

pub fn ref_mean(xs: &[f64]) -> f64 {
    let mut s = 0.0;
    for x in xs {
        s += x;
    }
    s / xs.len() as f64
}

/// Conjunction check written from the constraint semantics: numeric bounds
/// stretched by `slack`, `around` by `around`, age ranges by plain interval
/// overlap, missing attributes excluded.
pub fn ref_satisfies(p: &Product, c: &Constraint, slack: f64, around: f64) -> bool {
    const EPS: f64 = 1e-9;
    let le = |a: f64, b: f64| a <= b + EPS;
    match (c.field.as_str(), c.kind) {
        ("brand", ConstraintKind::Equals) => p.brand.as_deref() == c.value.as_deref(),
        ("color", ConstraintKind::Equals) => p.color.as_deref() == c.value.as_deref(),
        ("category", ConstraintKind::Equals) => {
            p.categories.iter().any(|x| Some(x.as_str()) == c.value.as_deref())
        }
        ("price" | "rating", kind) => {
            let Some(v) = (if c.field == "price" { p.price } else { p.rating }) else {
                return false;
            };
            match kind {
                ConstraintKind::AtMost => le(v, c.high.unwrap() * (1.0 + slack)),
                ConstraintKind::AtLeast => le(c.low.unwrap() * (1.0 - slack), v),
                ConstraintKind::Between => {
                    le(c.low.unwrap() * (1.0 - slack), v) && le(v, c.high.unwrap() * (1.0 + slack))
                }
                ConstraintKind::Around => {
                    let m = c.low.unwrap();
                    le(m - m * around, v) && le(v, m + m * around)
                }
                ConstraintKind::Equals => false,
            }
        }
        ("age", ConstraintKind::Between) => {
            if p.min_age.is_none() && p.max_age.is_none() {
                return false;
            }
            let lo = p.min_age.unwrap_or(0) as f64;
            let hi = p.max_age.map_or(f64::MAX, f64::from);
            le(lo, c.high.unwrap()) && le(c.low.unwrap(), hi)
        }
        _ => false,
    }
}
