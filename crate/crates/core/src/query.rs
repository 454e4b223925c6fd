//! Query decomposition: typed metadata constraints plus a semantic residual.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::catalog::{is_color, AttributeSchema, Catalog, FieldType};
use crate::error::{Error, Result};
use crate::text::{Token, Tokenizer, TokenizerConfig, QUERY_TOKEN_PATTERN};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    Equals,
    AtMost,
    AtLeast,
    Between,
    Around,
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstraintKind::Equals => "equals",
            ConstraintKind::AtMost => "at_most",
            ConstraintKind::AtLeast => "at_least",
            ConstraintKind::Between => "between",
            ConstraintKind::Around => "around",
        })
    }
}

/// One attribute predicate.
///
/// `equals` carries `value`. `at_most` stores its bound in `high`, `at_least`
/// in `low`, `around` stores the center in `low`, and `between` uses both.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub field: String,
    pub kind: ConstraintKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub low: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub high: Option<f64>,
}

impl Constraint {
    fn new(field: &str, kind: ConstraintKind) -> Self {
        Constraint {
            field: field.to_string(),
            kind,
            value: None,
            low: None,
            high: None,
        }
    }

    pub fn equals(field: &str, value: &str) -> Self {
        Constraint {
            value: Some(value.to_string()),
            ..Self::new(field, ConstraintKind::Equals)
        }
    }

    pub fn at_most(field: &str, bound: f64) -> Self {
        Constraint {
            high: Some(bound),
            ..Self::new(field, ConstraintKind::AtMost)
        }
    }

    pub fn at_least(field: &str, bound: f64) -> Self {
        Constraint {
            low: Some(bound),
            ..Self::new(field, ConstraintKind::AtLeast)
        }
    }

    pub fn between(field: &str, low: f64, high: f64) -> Self {
        Constraint {
            low: Some(low),
            high: Some(high),
            ..Self::new(field, ConstraintKind::Between)
        }
    }

    pub fn around(field: &str, center: f64) -> Self {
        Constraint {
            low: Some(center),
            ..Self::new(field, ConstraintKind::Around)
        }
    }

    /// The single numeric bound of an `at_most`/`at_least`/`around` constraint.
    pub fn bound(&self) -> Option<f64> {
        match (self.low, self.high) {
            (Some(v), None) | (None, Some(v)) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.field, self.kind)?;
        match self.kind {
            ConstraintKind::Equals => write!(f, " {:?}", self.value.as_deref().unwrap_or("")),
            ConstraintKind::Between => write!(
                f,
                " [{}, {}]",
                self.low.unwrap_or(f64::NAN),
                self.high.unwrap_or(f64::NAN)
            ),
            _ => write!(f, " {}", self.bound().unwrap_or(f64::NAN)),
        }
    }
}

/// A raw query split into constraints and the text left after removing the
/// constraint spans.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecomposedQuery {
    pub raw: String,
    #[serde(default)]
    pub constraints: Vec<Constraint>,
    pub semantic_residual: String,
}

impl DecomposedQuery {
    /// A decomposition with no constraints whose residual is the whole query.
    pub fn passthrough(raw: &str) -> Self {
        DecomposedQuery {
            raw: raw.to_string(),
            constraints: Vec::new(),
            semantic_residual: query_tokenizer()
                .tokenize(raw)
                .join(" "),
        }
    }
}

/// Anything that can turn a raw query into a [`DecomposedQuery`], e.g. an
/// adapter around a language model. Output is validated by the caller.
pub trait Decomposer: Send + Sync {
    fn id(&self) -> &str;
    fn decompose(&self, raw: &str) -> Result<DecomposedQuery>;
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// Offending constraint, if the violation is about one.
    pub constraint: Option<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.constraint {
            Some(i) => write!(f, "constraint {i}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Returns every invariant violation of `d` against `schema`.
pub fn validate_decomposition(
    d: &DecomposedQuery,
    schema: &AttributeSchema,
) -> std::result::Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    let mut push = |constraint: Option<usize>, message: String| {
        out.push(Violation {
            constraint,
            message,
        })
    };

    if d.raw.trim().is_empty() {
        push(None, "empty raw query".into());
    }
    let tok = query_tokenizer();
    if !is_subsequence(&tok.tokenize(&d.semantic_residual), &tok.tokenize(&d.raw)) {
        push(None, "residual is not a subsequence of the query tokens".into());
    }

    for (i, c) in d.constraints.iter().enumerate() {
        let i = Some(i);
        let Some(ty) = schema.field_type(&c.field) else {
            push(i, format!("unknown field `{}`", c.field));
            continue;
        };
        let finite = |v: Option<f64>| v.is_none_or(f64::is_finite);
        if !finite(c.low) || !finite(c.high) {
            push(i, "non-finite bound".into());
            continue;
        }
        match (c.kind, ty) {
            (ConstraintKind::Equals, FieldType::Categorical) => {
                if c.value.as_deref().is_none_or(|v| v.trim().is_empty()) {
                    push(i, "equals requires a value".into());
                }
                if c.low.is_some() || c.high.is_some() {
                    push(i, "equals takes no numeric bounds".into());
                }
            }
            (ConstraintKind::Equals, _) => {
                push(i, format!("equals on non-categorical field `{}`", c.field))
            }
            (_, FieldType::Categorical) => push(
                i,
                format!("{} on categorical field `{}`", c.kind, c.field),
            ),
            (kind, _) => {
                if c.value.is_some() {
                    push(i, format!("{kind} takes no categorical value"));
                }
                match kind {
                    ConstraintKind::Between => match (c.low, c.high) {
                        (Some(lo), Some(hi)) if lo > hi => {
                            push(i, format!("inverted range [{lo}, {hi}]"))
                        }
                        (Some(_), Some(_)) => {}
                        _ => push(i, "between requires both bounds".into()),
                    },
                    ConstraintKind::AtMost | ConstraintKind::AtLeast => {
                        if c.bound().is_none() {
                            push(i, format!("{kind} requires exactly one bound"));
                        }
                    }
                    ConstraintKind::Around => {
                        if c.low.is_none() || c.high.is_some() {
                            push(i, "around requires a single center in `low`".into());
                        }
                    }
                    ConstraintKind::Equals => unreachable!(),
                }
            }
        }
    }

    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

fn is_subsequence(needle: &[String], haystack: &[String]) -> bool {
    let mut it = haystack.iter();
    needle.iter().all(|n| it.any(|h| h == n))
}

/// Tokenizer used for query decomposition: keeps decimals such as `12.99` whole.
pub fn query_tokenizer() -> &'static Tokenizer {
    static T: std::sync::OnceLock<Tokenizer> = std::sync::OnceLock::new();
    T.get_or_init(|| {
        Tokenizer::new(TokenizerConfig {
            lowercase: true,
            pattern: QUERY_TOKEN_PATTERN.to_string(),
        })
        .expect("query pattern compiles")
    })
}

pub const DEFAULT_TOP_RATED_THRESHOLD: f64 = 4.0;

/// Deterministic grammar-based decomposer.
///
/// Recognizes colors from a fixed lexicon, brands from the catalog's brand
/// values, price phrases ("under $X", "around $X", "between $X and $Y",
/// "within a budget of $X"), age phrases ("for my N-year-old", "aged X-Y",
/// "X to Y years", "ages X+", "X years and up") and rating phrases
/// ("top-rated", "4 stars and up").
#[derive(Clone, Debug)]
pub struct RuleDecomposer {
    schema: AttributeSchema,
    /// Tokenized brand name → normalized brand value, longest first.
    brands: Vec<(Vec<String>, String)>,
    top_rated_threshold: f64,
}

/// Rule-based output plus the tokens each constraint consumed.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub query: DecomposedQuery,
    pub consumed: Vec<String>,
}

const PRICE_AT_MOST: &[&[&str]] = &[
    &["on", "a", "budget", "of"],
    &["within", "a", "budget", "of"],
    &["within", "budget", "of"],
    &["within", "my", "budget", "of"],
    &["a", "budget", "of"],
    &["budget", "of"],
    &["no", "more", "than"],
    &["not", "more", "than"],
    &["less", "than"],
    &["cheaper", "than"],
    &["at", "most"],
    &["up", "to"],
    &["under"],
    &["below"],
    &["within"],
    &["max"],
    &["maximum"],
];
const PRICE_AT_LEAST: &[&[&str]] = &[
    &["more", "than"],
    &["at", "least"],
    &["starting", "at"],
    &["over"],
    &["above"],
    &["minimum"],
];
const PRICE_AROUND: &[&[&str]] = &[
    &["close", "to"],
    &["around"],
    &["about"],
    &["approximately"],
    &["roughly"],
    &["near"],
    &["at"],
    &["for"],
];
const PRICE_PREFIX: &[&str] = &["priced", "costing", "costs", "cost", "price", "that"];
const CURRENCY_WORDS: &[&str] = &["dollars", "dollar", "usd", "bucks"];
const AGE_WORDS: &[&str] = &["aged", "ages", "age"];
const YEAR_WORDS: &[&str] = &["year", "years", "yr", "yrs"];
const KID_WORDS: &[&str] = &[
    "kids", "kid", "children", "child", "toddlers", "toddler", "boys", "boy", "girls", "girl",
    "teens", "teen",
];
const DETERMINERS: &[&str] = &["my", "a", "an", "our"];
const UP_WORDS: &[&[&str]] = &[
    &["and", "up"],
    &["and", "older"],
    &["and", "over"],
    &["or", "older"],
    &["or", "more"],
    &["or", "higher"],
    &["and", "above"],
    &["plus"],
];
const TOP_RATED: &[&[&str]] = &[
    &["top", "rated"],
    &["highly", "rated"],
    &["best", "rated"],
    &["well", "rated"],
    &["high", "rated"],
];

struct Scan<'a> {
    raw: &'a str,
    toks: Vec<Token>,
    used: Vec<bool>,
    found: Vec<(usize, Constraint)>,
}

impl<'a> Scan<'a> {
    fn text(&self, i: usize) -> &str {
        self.toks.get(i).map_or("", |t| t.text.as_str())
    }

    fn free(&self, i: usize) -> bool {
        i < self.toks.len() && !self.used[i]
    }

    fn free_range(&self, start: usize, len: usize) -> bool {
        (start..start + len).all(|i| self.free(i))
    }

    /// Length of `words` if it matches the free tokens starting at `i`.
    fn phrase_at(&self, i: usize, words: &[&str]) -> Option<usize> {
        (self.free_range(i, words.len())
            && words.iter().enumerate().all(|(k, w)| self.text(i + k) == *w))
        .then_some(words.len())
    }

    fn longest_phrase(&self, i: usize, options: &[&[&str]]) -> Option<usize> {
        options.iter().filter_map(|p| self.phrase_at(i, p)).max()
    }

    fn number(&self, i: usize) -> Option<f64> {
        if !self.free(i) {
            return None;
        }
        self.text(i).parse::<f64>().ok().filter(|v| v.is_finite())
    }

    /// A dollar amount at `i`: number preceded by `$` or followed by a
    /// currency word. Returns (value, tokens used).
    fn price(&self, i: usize) -> Option<(f64, usize)> {
        let v = self.number(i)?;
        let dollar = self.raw[..self.toks[i].start].trim_end().ends_with('$');
        if CURRENCY_WORDS.contains(&self.text(i + 1)) && self.free(i + 1) {
            Some((v, 2))
        } else if dollar {
            Some((v, 1))
        } else {
            None
        }
    }

    /// Raw text between tokens `a` and `b` (exclusive).
    fn gap(&self, a: usize, b: usize) -> &str {
        &self.raw[self.toks[a].end..self.toks[b].start]
    }

    fn plus_after(&self, i: usize) -> bool {
        let rest = &self.raw[self.toks[i].end..];
        rest.trim_start().starts_with('+')
    }

    fn take(&mut self, start: usize, end: usize, c: Constraint) {
        for u in &mut self.used[start..end] {
            *u = true;
        }
        self.found.push((start, c));
    }

    /// Extends a match start backwards over free tokens drawn from `options`.
    fn extend_back(&self, mut start: usize, options: &[&str]) -> usize {
        if start > 0 && self.free(start - 1) && options.contains(&self.text(start - 1)) {
            start -= 1;
        }
        start
    }
}

impl RuleDecomposer {
    pub fn new(schema: AttributeSchema, brands: impl IntoIterator<Item = String>) -> Self {
        let tok = query_tokenizer();
        let mut brands: Vec<(Vec<String>, String)> = brands
            .into_iter()
            .filter_map(|b| {
                let toks = tok.tokenize(&b);
                (!toks.is_empty()).then_some((toks, b))
            })
            .collect();
        brands.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.1.cmp(&b.1)));
        brands.dedup();
        RuleDecomposer {
            schema,
            brands,
            top_rated_threshold: DEFAULT_TOP_RATED_THRESHOLD,
        }
    }

    /// Decomposer using the catalog's schema and brand lexicon.
    pub fn for_catalog(catalog: &Catalog) -> Self {
        Self::new(catalog.schema().clone(), catalog.brands())
    }

    pub fn with_top_rated_threshold(mut self, threshold: f64) -> Self {
        self.top_rated_threshold = threshold;
        self
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    fn wants(&self, field: &str) -> bool {
        self.schema.contains(field)
    }

    pub fn decompose_traced(&self, raw: &str) -> Result<Decomposition> {
        if raw.trim().is_empty() {
            return Err(Error::EmptyQuery);
        }
        let toks = query_tokenizer().tokens(raw);
        let mut s = Scan {
            raw,
            used: vec![false; toks.len()],
            toks,
            found: Vec::new(),
        };
        if self.wants("price") {
            self.scan_price(&mut s);
        }
        if self.wants("age") {
            self.scan_age(&mut s);
        }
        if self.wants("rating") {
            self.scan_rating(&mut s);
        }
        if self.wants("brand") {
            self.scan_brand(&mut s);
        }
        if self.wants("color") {
            for i in 0..s.toks.len() {
                if s.free(i) && is_color(s.text(i)) {
                    let c = Constraint::equals("color", s.text(i));
                    s.take(i, i + 1, c);
                }
            }
        }

        s.found.sort_by_key(|(start, _)| *start);
        let mut constraints: Vec<Constraint> = Vec::new();
        for (_, c) in s.found {
            if !constraints.contains(&c) {
                constraints.push(c);
            }
        }
        let (mut residual, mut consumed) = (Vec::new(), Vec::new());
        for (t, used) in s.toks.into_iter().zip(s.used) {
            if used {
                consumed.push(t.text);
            } else {
                residual.push(t.text);
            }
        }
        Ok(Decomposition {
            query: DecomposedQuery {
                raw: raw.to_string(),
                constraints,
                semantic_residual: residual.join(" "),
            },
            consumed,
        })
    }

    fn scan_price(&self, s: &mut Scan) {
        let n = s.toks.len();
        // between $X and $Y / from $X to $Y / $X-$Y
        for i in 0..n {
            let cue = ["between", "from"].contains(&s.text(i)) && s.free(i);
            let first = if cue { i + 1 } else { i };
            let Some((lo, used_lo)) = s.price(first) else {
                continue;
            };
            let mid = first + used_lo;
            let sep_len = match s.text(mid) {
                "and" | "to" if s.free(mid) => 1,
                _ if mid < n && s.gap(mid - 1, mid).trim() == "-" => 0,
                _ => continue,
            };
            let second = mid + sep_len;
            let Some((hi, used_hi)) = s.price(second).or_else(|| s.number(second).map(|v| (v, 1)))
            else {
                continue;
            };
            let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
            let start = s.extend_back(i, PRICE_PREFIX);
            let start = s.extend_back(start, &["priced"]);
            s.take(start, second + used_hi, Constraint::between("price", lo, hi));
        }
        for (cues, make) in [
            (PRICE_AT_MOST, Constraint::at_most as fn(&str, f64) -> Constraint),
            (PRICE_AT_LEAST, Constraint::at_least),
            (PRICE_AROUND, Constraint::around),
        ] {
            for i in 0..n {
                let Some(len) = s.longest_phrase(i, cues) else {
                    continue;
                };
                let Some((v, used)) = s.price(i + len) else {
                    continue;
                };
                let start = s.extend_back(i, PRICE_PREFIX);
                s.take(start, i + len + used, make("price", v));
            }
        }
        // a bare "$12"
        for i in 0..n {
            if let Some((v, used)) = s.price(i) {
                let start = s.extend_back(i, PRICE_PREFIX);
                s.take(start, i + used, Constraint::around("price", v));
            }
        }
    }

    fn age_prefix(&self, s: &Scan, start: usize) -> usize {
        let start = s.extend_back(start, KID_WORDS);
        let start = s.extend_back(start, DETERMINERS);
        s.extend_back(start, &["for"])
    }

    fn scan_age(&self, s: &mut Scan) {
        let n = s.toks.len();
        let is_year = |s: &Scan, i: usize| s.free(i) && YEAR_WORDS.contains(&s.text(i));
        let whole = |v: f64| (v.fract() == 0.0 && (0.0..=120.0).contains(&v)).then_some(v);
        // "aged 9-12", "ages 6 to 15", "age 5", "ages 3+", "aged 4 and up"
        for i in 0..n {
            if !(s.free(i) && AGE_WORDS.contains(&s.text(i))) {
                continue;
            }
            let Some(lo) = s.number(i + 1).and_then(whole) else {
                continue;
            };
            let mut end = i + 2;
            let constraint = if let Some(hi) = self.range_tail(s, i + 1) {
                end = hi.1;
                Constraint::between("age", lo.min(hi.0), lo.max(hi.0))
            } else if s.plus_after(i + 1) {
                Constraint::at_least("age", lo)
            } else {
                if is_year(s, end) {
                    end += 1;
                }
                if let Some(len) = s.longest_phrase(end, UP_WORDS) {
                    end += len;
                    Constraint::at_least("age", lo)
                } else {
                    Constraint::between("age", lo, lo)
                }
            };
            if is_year(s, end) {
                end += 1;
                if s.phrase_at(end, &["old"]).is_some() {
                    end += 1;
                }
            }
            let start = self.age_prefix(s, i);
            s.take(start, end, constraint);
        }
        // "3-year-old", "6 to 15 years", "5 years and up", "3+ years"
        for i in 0..n {
            let Some(lo) = s.number(i).and_then(whole) else {
                continue;
            };
            let (constraint, mut end) = if is_year(s, i + 1) {
                let mut end = i + 2;
                if s.phrase_at(end, &["old"]).is_some() {
                    end += 1;
                    (Constraint::between("age", lo, lo), end)
                } else if let Some(len) = s.longest_phrase(end, UP_WORDS) {
                    end += len;
                    (Constraint::at_least("age", lo), end)
                } else if s.plus_after(i) {
                    (Constraint::at_least("age", lo), end)
                } else {
                    (Constraint::between("age", lo, lo), end)
                }
            } else if let Some((hi, end)) = self.range_tail(s, i) {
                if !is_year(s, end) {
                    continue;
                }
                (Constraint::between("age", lo.min(hi), lo.max(hi)), end + 1)
            } else if s.plus_after(i) && is_year(s, i + 1) {
                (Constraint::at_least("age", lo), i + 2)
            } else {
                continue;
            };
            if s.phrase_at(end, &["old"]).is_some() {
                end += 1;
            }
            let start = self.age_prefix(s, i);
            s.take(start, end, constraint);
        }
    }

    /// Upper end of "N-M" / "N to M" / "N and M" after the number at `i`.
    /// Returns (M, index one past M).
    fn range_tail(&self, s: &Scan, i: usize) -> Option<(f64, usize)> {
        let next = i + 1;
        if !s.free(next) {
            return None;
        }
        let (j, ok) = if ["to", "and"].contains(&s.text(next)) {
            (next + 1, true)
        } else {
            let gap = s.gap(i, next).trim();
            (next, gap == "-" || gap == "–")
        };
        if !ok {
            return None;
        }
        let hi = s.number(j).filter(|v| v.fract() == 0.0 && *v <= 120.0)?;
        Some((hi, j + 1))
    }

    fn scan_rating(&self, s: &mut Scan) {
        let n = s.toks.len();
        for i in 0..n {
            if let Some(len) = s.longest_phrase(i, TOP_RATED) {
                s.take(i, i + len, Constraint::at_least("rating", self.top_rated_threshold));
            }
        }
        // "4 stars and up", "4+ stars", "rated at least 4 stars"
        for i in 0..n {
            let Some(v) = s.number(i).filter(|v| (0.0..=5.0).contains(v)) else {
                continue;
            };
            if !(s.free(i + 1) && ["star", "stars"].contains(&s.text(i + 1))) {
                continue;
            }
            let mut end = i + 2;
            if let Some(len) = s.longest_phrase(end, UP_WORDS) {
                end += len;
            }
            let mut start = i;
            if let Some(len) = [&["at", "least"][..], &["over"], &["above"], &["minimum"]]
                .iter()
                .find_map(|p| start.checked_sub(p.len()).and_then(|b| s.phrase_at(b, p)))
            {
                start -= len;
            }
            let start = s.extend_back(start, &["rated", "with"]);
            s.take(start, end, Constraint::at_least("rating", v));
        }
    }

    fn scan_brand(&self, s: &mut Scan) {
        for i in 0..s.toks.len() {
            for (words, value) in &self.brands {
                let refs: Vec<&str> = words.iter().map(String::as_str).collect();
                if let Some(len) = s.phrase_at(i, &refs) {
                    let start = s.extend_back(i, &["from", "by"]);
                    let c = Constraint::equals("brand", value);
                    s.take(start, i + len, c);
                    break;
                }
            }
        }
    }
}

impl Decomposer for RuleDecomposer {
    fn id(&self) -> &str {
        "rule"
    }

    fn decompose(&self, raw: &str) -> Result<DecomposedQuery> {
        self.decompose_traced(raw).map(|d| d.query)
    }
}

/// Which decomposer produced a decomposition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecompositionSource {
    Rule,
    External(String),
    /// The external decomposer failed or returned an invalid shape.
    RuleFallback { reason: String },
}

/// Runs `external` if present, validating its output and falling back to the
/// rule grammar when it errors or violates an invariant.
pub fn decompose_guarded(
    external: Option<&dyn Decomposer>,
    rules: &RuleDecomposer,
    raw: &str,
) -> Result<(DecomposedQuery, DecompositionSource)> {
    if raw.trim().is_empty() {
        return Err(Error::EmptyQuery);
    }
    if let Some(ext) = external {
        let reason = match ext.decompose(raw) {
            Ok(d) if d.raw != raw => "raw query was altered".to_string(),
            Ok(d) => match validate_decomposition(&d, rules.schema()) {
                Ok(()) => return Ok((d, DecompositionSource::External(ext.id().to_string()))),
                Err(v) => v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "),
            },
            Err(e) => e.to_string(),
        };
        let d = rules.decompose(raw)?;
        return Ok((d, DecompositionSource::RuleFallback { reason }));
    }
    Ok((rules.decompose(raw)?, DecompositionSource::Rule))
}

/// Token counts, used for the residual/consumed multiset property.
pub fn token_multiset<'a>(tokens: impl IntoIterator<Item = &'a String>) -> BTreeMap<&'a str, usize> {
    let mut m = BTreeMap::new();
    for t in tokens {
        *m.entry(t.as_str()).or_insert(0) += 1;
    }
    m
}
