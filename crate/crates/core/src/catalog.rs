//! Product data model, catalog ingestion (JSONL / CSV) and rule-based
//! attribute extraction from free-text descriptions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::persist;

pub const CATALOG_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Review {
    pub product_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rating: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Product {
    pub id: String,
    pub title: String,
    #[serde(default)]
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub brand: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rating: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_age: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_age: Option<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reviews: Vec<Review>,
}

impl Product {
    /// Checks the type invariants, returning the first violation.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("empty id".into());
        }
        if let Some(p) = self.price {
            if !p.is_finite() || p < 0.0 {
                return Err(format!("price {p} is negative or not finite"));
            }
        }
        check_rating(self.rating)?;
        if let (Some(lo), Some(hi)) = (self.min_age, self.max_age) {
            if lo > hi {
                return Err(format!("min_age {lo} exceeds max_age {hi}"));
            }
        }
        for r in &self.reviews {
            if r.product_id != self.id {
                return Err(format!("review references `{}`", r.product_id));
            }
            check_rating(r.rating)?;
        }
        Ok(())
    }

    /// Lowercases and trims the categorical fields; blank values become absent.
    pub fn normalize(&mut self) {
        self.brand = self.brand.as_deref().and_then(normalize_label);
        self.color = self.color.as_deref().and_then(normalize_label);
        let cats: BTreeSet<String> = self
            .categories
            .iter()
            .filter_map(|c| normalize_label(c))
            .collect();
        self.categories = cats.into_iter().collect();
    }

    /// Concatenation of the selected text fields, separated by newlines.
    pub fn text_of(&self, fields: &[TextField]) -> String {
        let mut parts: Vec<&str> = Vec::new();
        for f in fields {
            match f {
                TextField::Title => parts.push(&self.title),
                TextField::Description => parts.push(&self.description),
                TextField::Reviews => parts.extend(self.reviews.iter().map(|r| r.text.as_str())),
            }
        }
        parts.retain(|p| !p.is_empty());
        parts.join("\n")
    }

    /// All text fields, reviews included.
    pub fn full_text(&self) -> String {
        self.text_of(&TextField::ALL)
    }
}

fn check_rating(r: Option<f64>) -> std::result::Result<(), String> {
    match r {
        Some(v) if !(0.0..=5.0).contains(&v) => Err(format!("rating {v} outside [0, 5]")),
        _ => Ok(()),
    }
}

pub fn normalize_label(s: &str) -> Option<String> {
    let joined = s.split_whitespace().collect::<Vec<_>>().join(" ");
    (!joined.is_empty()).then(|| joined.to_lowercase())
}

/// Text-bearing product fields that can be indexed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextField {
    Title,
    Description,
    Reviews,
}

impl TextField {
    pub const ALL: [TextField; 3] = [TextField::Title, TextField::Description, TextField::Reviews];

    pub fn as_str(self) -> &'static str {
        match self {
            TextField::Title => "title",
            TextField::Description => "description",
            TextField::Reviews => "reviews",
        }
    }
}

impl FromStr for TextField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "title" => Ok(TextField::Title),
            "description" => Ok(TextField::Description),
            "reviews" | "review" => Ok(TextField::Reviews),
            other => Err(Error::UnknownField(other.to_string())),
        }
    }
}

impl fmt::Display for TextField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldType {
    Categorical,
    Numeric,
    /// Matched against a product's `[min_age, max_age]` interval.
    AgeRange,
}

/// The filterable fields and their types.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeSchema {
    fields: BTreeMap<String, FieldType>,
}

impl AttributeSchema {
    pub fn new(fields: impl IntoIterator<Item = (String, FieldType)>) -> Self {
        AttributeSchema {
            fields: fields.into_iter().collect(),
        }
    }

    pub fn field_type(&self, name: &str) -> Option<FieldType> {
        self.fields.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.fields.contains_key(name)
    }

    pub fn fields(&self) -> impl Iterator<Item = (&str, FieldType)> {
        self.fields.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

impl Default for AttributeSchema {
    fn default() -> Self {
        AttributeSchema::new([
            ("brand".to_string(), FieldType::Categorical),
            ("color".to_string(), FieldType::Categorical),
            ("category".to_string(), FieldType::Categorical),
            ("price".to_string(), FieldType::Numeric),
            ("rating".to_string(), FieldType::Numeric),
            ("age".to_string(), FieldType::AgeRange),
        ])
    }
}

/// An immutable, id-keyed set of products.
#[derive(Clone, Debug, PartialEq)]
pub struct Catalog {
    products: BTreeMap<String, Product>,
    schema: AttributeSchema,
    version: String,
}

impl Catalog {
    /// Builds a catalog from products that are already known to be valid.
    /// Fails on the first invariant violation or duplicate id.
    pub fn from_products(
        products: impl IntoIterator<Item = Product>,
        schema: AttributeSchema,
    ) -> Result<Self> {
        let mut builder = CatalogBuilder::new(schema);
        for p in products {
            builder
                .push(p)
                .map_err(Error::InvalidArgument)?;
        }
        builder.finish("<in-memory>")
    }

    pub fn len(&self) -> usize {
        self.products.len()
    }

    pub fn is_empty(&self) -> bool {
        self.products.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Product> {
        self.products.get(id)
    }

    pub fn product(&self, id: &str) -> Result<&Product> {
        self.get(id).ok_or_else(|| Error::UnknownProduct(id.to_string()))
    }

    /// Products in ascending id order.
    pub fn products(&self) -> impl ExactSizeIterator<Item = &Product> {
        self.products.values()
    }

    pub fn ids(&self) -> impl ExactSizeIterator<Item = &str> {
        self.products.keys().map(String::as_str)
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    /// Content digest of schema and products; indexes record it to detect staleness.
    pub fn version(&self) -> &str {
        &self.version
    }

    /// Distinct normalized brand values, the lexicon for query brand matching.
    pub fn brands(&self) -> BTreeSet<String> {
        self.products
            .values()
            .filter_map(|p| p.brand.clone())
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        persist::write_json(
            path,
            &CatalogFile {
                format_version: CATALOG_FORMAT_VERSION,
                version: self.version.clone(),
                schema: self.schema.clone(),
                products: self.products.values().cloned().collect(),
            },
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file: CatalogFile = persist::read_json(path)?;
        persist::check_format("catalog", file.format_version, CATALOG_FORMAT_VERSION)?;
        let catalog = Catalog::from_products(file.products, file.schema)?;
        if catalog.version != file.version {
            return Err(Error::VersionMismatch {
                expected: file.version,
                found: catalog.version,
            });
        }
        Ok(catalog)
    }
}

#[derive(Serialize, Deserialize)]
struct CatalogFile {
    format_version: u32,
    version: String,
    schema: AttributeSchema,
    products: Vec<Product>,
}

fn compute_version(products: &BTreeMap<String, Product>, schema: &AttributeSchema) -> String {
    let bytes = serde_json::to_vec(&(schema, products.values().collect::<Vec<_>>()))
        .expect("catalog serializes");
    persist::stable_digest(&bytes)
}

/// Accumulates products, enforcing id uniqueness and the type invariants.
#[derive(Debug)]
pub struct CatalogBuilder {
    products: BTreeMap<String, Product>,
    schema: AttributeSchema,
}

impl CatalogBuilder {
    pub fn new(schema: AttributeSchema) -> Self {
        CatalogBuilder {
            products: BTreeMap::new(),
            schema,
        }
    }

    /// Normalizes and inserts a product, or returns why it was rejected.
    pub fn push(&mut self, mut product: Product) -> std::result::Result<(), String> {
        product.id = product.id.trim().to_string();
        product.normalize();
        product.validate()?;
        if self.products.contains_key(&product.id) {
            return Err(format!("duplicate id `{}`", product.id));
        }
        self.products.insert(product.id.clone(), product);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.products.len()
    }

    pub fn is_empty(&self) -> bool {
        self.products.is_empty()
    }

    pub fn finish(self, source: &str) -> Result<Catalog> {
        if self.products.is_empty() {
            return Err(Error::EmptyCatalog(source.to_string()));
        }
        let version = compute_version(&self.products, &self.schema);
        Ok(Catalog {
            products: self.products,
            schema: self.schema,
            version,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CatalogFormat {
    Jsonl,
    Csv,
}

impl FromStr for CatalogFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(CatalogFormat::Jsonl),
            "csv" => Ok(CatalogFormat::Csv),
            other => Err(Error::Config(format!("unknown catalog format `{other}`"))),
        }
    }
}

/// A record that was skipped during ingestion.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IngestWarning {
    /// 1-based line (JSONL) or record (CSV, header excluded) number.
    pub record: usize,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub records: usize,
    pub accepted: usize,
    pub warnings: Vec<IngestWarning>,
}

/// Column mapping for CSV catalogs: product field name to CSV header.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CsvMapping {
    columns: BTreeMap<String, String>,
}

const CSV_KEYS: &[&str] = &[
    "id",
    "title",
    "description",
    "brand",
    "color",
    "price",
    "rating",
    "min_age",
    "max_age",
    "categories",
    "reviews",
];

impl CsvMapping {
    /// Parses `key=column` lines. Blank lines and `#` comments are ignored;
    /// surrounding quotes on either side are stripped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut columns = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("mapping line {}: expected key=column", n + 1)))?;
            let k = unquote(k);
            if !CSV_KEYS.contains(&k) {
                return Err(Error::Config(format!("mapping line {}: unknown key `{k}`", n + 1)));
            }
            columns.insert(k.to_string(), unquote(v).to_string());
        }
        for required in ["id", "title"] {
            if !columns.contains_key(required) {
                return Err(Error::Config(format!("mapping must declare `{required}`")));
            }
        }
        Ok(CsvMapping { columns })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn column(&self, key: &str) -> Option<&str> {
        self.columns.get(key).map(String::as_str)
    }
}

fn unquote(s: &str) -> &str {
    let s = s.trim();
    s.strip_prefix('"')
        .and_then(|x| x.strip_suffix('"'))
        .unwrap_or(s)
}

/// Loads a catalog file, skipping (and reporting) malformed records.
///
/// Attributes missing from a record are filled in from its title and
/// description with [`extract_attributes`]. CSV input requires a mapping.
pub fn ingest_catalog(
    path: &Path,
    format: CatalogFormat,
    mapping: Option<&CsvMapping>,
    schema: AttributeSchema,
) -> Result<(Catalog, IngestReport)> {
    let mut builder = CatalogBuilder::new(schema);
    let mut report = IngestReport::default();
    let mut accept = |record: usize, raw: std::result::Result<RawProduct, String>| {
        report.records += 1;
        let outcome = raw.and_then(RawProduct::into_product).and_then(|p| builder.push(p));
        match outcome {
            Ok(()) => report.accepted += 1,
            Err(reason) => report.warnings.push(IngestWarning { record, reason }),
        }
    };

    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    match format {
        CatalogFormat::Jsonl => {
            for (n, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| Error::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                accept(n + 1, serde_json::from_str(&line).map_err(|e| e.to_string()));
            }
        }
        CatalogFormat::Csv => {
            let mapping =
                mapping.ok_or_else(|| Error::Config("CSV ingestion needs a column mapping".into()))?;
            let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(file);
            let headers = reader.headers()?.clone();
            let index: BTreeMap<&str, usize> = CSV_KEYS
                .iter()
                .filter_map(|k| {
                    let col = mapping.column(k)?;
                    headers.iter().position(|h| h.trim() == col).map(|i| (*k, i))
                })
                .collect();
            for key in ["id", "title"] {
                if !index.contains_key(key) {
                    return Err(Error::Config(format!(
                        "CSV header lacks column `{}` mapped to `{key}`",
                        mapping.column(key).unwrap_or_default()
                    )));
                }
            }
            for (n, row) in reader.records().enumerate() {
                let raw = row
                    .map_err(|e| e.to_string())
                    .and_then(|r| RawProduct::from_csv(&r, &index));
                accept(n + 1, raw);
            }
        }
    }

    let catalog = builder.finish(&path.display().to_string())?;
    Ok((catalog, report))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Scalar {
    Num(f64),
    Text(String),
}

impl Scalar {
    fn number(&self) -> std::result::Result<f64, String> {
        match self {
            Scalar::Num(v) => Ok(*v),
            Scalar::Text(s) => s
                .trim()
                .trim_start_matches('$')
                .parse::<f64>()
                .map_err(|_| format!("`{s}` is not a number")),
        }
    }

    fn text(&self) -> String {
        match self {
            Scalar::Num(v) => v.to_string(),
            Scalar::Text(s) => s.clone(),
        }
    }
}

#[derive(Deserialize)]
struct RawReview {
    text: String,
    #[serde(default)]
    rating: Option<Scalar>,
}

#[derive(Deserialize)]
struct RawProduct {
    id: Scalar,
    title: String,
    #[serde(default)]
    description: Option<String>,
    #[serde(default)]
    brand: Option<String>,
    #[serde(default)]
    color: Option<String>,
    #[serde(default)]
    price: Option<Scalar>,
    #[serde(default)]
    rating: Option<Scalar>,
    #[serde(default)]
    min_age: Option<Scalar>,
    #[serde(default)]
    max_age: Option<Scalar>,
    #[serde(default)]
    categories: Option<Vec<String>>,
    #[serde(default)]
    reviews: Option<Vec<RawReview>>,
}

fn age_value(v: &Scalar) -> std::result::Result<u32, String> {
    let x = v.number()?;
    if x.fract() != 0.0 || !(0.0..=150.0).contains(&x) {
        return Err(format!("age {x} is not a whole number of years"));
    }
    Ok(x as u32)
}

impl RawProduct {
    fn from_csv(
        row: &csv::StringRecord,
        index: &BTreeMap<&str, usize>,
    ) -> std::result::Result<Self, String> {
        let cell = |k: &str| -> Option<String> {
            let v = row.get(*index.get(k)?)?.trim();
            (!v.is_empty()).then(|| v.to_string())
        };
        Ok(RawProduct {
            id: Scalar::Text(cell("id").ok_or("missing id")?),
            title: cell("title").unwrap_or_default(),
            description: cell("description"),
            brand: cell("brand"),
            color: cell("color"),
            price: cell("price").map(Scalar::Text),
            rating: cell("rating").map(Scalar::Text),
            min_age: cell("min_age").map(Scalar::Text),
            max_age: cell("max_age").map(Scalar::Text),
            categories: cell("categories").map(|c| c.split(';').map(str::to_string).collect()),
            reviews: cell("reviews").map(|r| {
                r.split('|')
                    .map(str::trim)
                    .filter(|t| !t.is_empty())
                    .map(|t| RawReview {
                        text: t.to_string(),
                        rating: None,
                    })
                    .collect()
            }),
        })
    }

    fn into_product(self) -> std::result::Result<Product, String> {
        let id = self.id.text().trim().to_string();
        let reviews = self
            .reviews
            .unwrap_or_default()
            .into_iter()
            .map(|r| {
                Ok(Review {
                    product_id: id.clone(),
                    text: r.text,
                    rating: r.rating.as_ref().map(Scalar::number).transpose()?,
                })
            })
            .collect::<std::result::Result<Vec<_>, String>>()?;
        let mut p = Product {
            id,
            title: self.title,
            description: self.description.unwrap_or_default(),
            brand: self.brand,
            color: self.color,
            price: self.price.as_ref().map(Scalar::number).transpose()?,
            rating: self.rating.as_ref().map(Scalar::number).transpose()?,
            min_age: self.min_age.as_ref().map(age_value).transpose()?,
            max_age: self.max_age.as_ref().map(age_value).transpose()?,
            categories: self.categories.unwrap_or_default(),
            reviews,
        };
        fill_missing_attributes(&mut p);
        Ok(p)
    }
}

fn fill_missing_attributes(p: &mut Product) {
    let x = extract_attributes(&p.description, &p.title);
    if p.brand.as_deref().is_none_or(|b| b.trim().is_empty()) {
        p.brand = x.brand;
    }
    if p.color.as_deref().is_none_or(|c| c.trim().is_empty()) {
        p.color = x.color;
    }
    if p.min_age.is_none() && p.max_age.is_none() {
        p.min_age = x.min_age;
        p.max_age = x.max_age;
    }
}

/// Attributes recovered from free text. Absent fields were not found.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedAttributes {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub brand: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub color: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_age: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_age: Option<u32>,
}

impl ExtractedAttributes {
    pub fn is_empty(&self) -> bool {
        *self == ExtractedAttributes::default()
    }
}

/// Fixed color lexicon shared with the query grammar.
pub const COLORS: &[&str] = &[
    "black", "white", "red", "blue", "green", "yellow", "orange", "purple", "pink", "brown",
    "gray", "grey", "silver", "gold", "beige", "navy", "teal", "turquoise", "multicolor",
];

pub fn is_color(token: &str) -> bool {
    COLORS.contains(&token)
}

struct AgePatterns {
    range: Regex,
    years_range: Regex,
    plus: Regex,
    and_up: Regex,
}

fn age_patterns() -> &'static AgePatterns {
    static P: OnceLock<AgePatterns> = OnceLock::new();
    P.get_or_init(|| AgePatterns {
        // "Ages 5-8", "Age: 3 to 6"
        range: Regex::new(r"(?i)\bages?\s*:?\s*(\d{1,3})\s*(?:-|–|to)\s*(\d{1,3})\b").unwrap(),
        // "5 to 8 years", "5-8 yrs"
        years_range: Regex::new(r"(?i)\b(\d{1,3})\s*(?:-|–|to)\s*(\d{1,3})\s*(?:years?|yrs?)\b")
            .unwrap(),
        // "Ages 3+"
        plus: Regex::new(r"(?i)\bages?\s*:?\s*(\d{1,3})\s*\+").unwrap(),
        // "3 years and up", "ages 3 and up", "3+ years"
        and_up: Regex::new(
            r"(?i)\b(?:ages?\s*:?\s*)?(\d{1,3})\s*(?:\+\s*(?:years?|yrs?)|(?:years?|yrs?)?\s*(?:old\s*)?(?:and|&)\s*(?:up|older|over))\b",
        )
        .unwrap(),
    })
}

fn brand_pattern() -> &'static (Regex, Regex) {
    static P: OnceLock<(Regex, Regex)> = OnceLock::new();
    P.get_or_init(|| {
        (
            // capitalized name after "by"/"from": "by LEGO", "from Melissa & Doug"
            Regex::new(r"\b(?:[Bb]y|[Ff]rom)\s+([A-Z][\w'.]*(?:\s+(?:&\s+)?[A-Z][\w'.]*)*)")
                .unwrap(),
            Regex::new(r"(?i)\bbrand\s*:\s*([^,;\n]+)").unwrap(),
        )
    })
}

fn extract_age(text: &str) -> Option<(Option<u32>, Option<u32>)> {
    let p = age_patterns();
    let num = |c: &regex::Captures, i| c.get(i).and_then(|m| m.as_str().parse::<u32>().ok());
    for re in [&p.range, &p.years_range] {
        if let Some(c) = re.captures(text) {
            if let (Some(lo), Some(hi)) = (num(&c, 1), num(&c, 2)) {
                if lo <= hi && hi <= 120 {
                    return Some((Some(lo), Some(hi)));
                }
            }
        }
    }
    for re in [&p.plus, &p.and_up] {
        if let Some(lo) = re.captures(text).and_then(|c| num(&c, 1)) {
            if lo <= 120 {
                return Some((Some(lo), None));
            }
        }
    }
    None
}

fn extract_brand(text: &str) -> Option<String> {
    let (after_prep, labelled) = brand_pattern();
    if let Some(c) = labelled.captures(text) {
        if let Some(b) = normalize_label(&c[1]) {
            return Some(b);
        }
    }
    after_prep
        .captures_iter(text)
        .map(|c| c[1].trim_end_matches('.').to_string())
        .find(|name| {
            let first = name.split_whitespace().next().unwrap_or("");
            !matches!(first.to_ascii_lowercase().as_str(), "age" | "ages" | "the" | "a" | "an")
        })
        .and_then(|name| normalize_label(&name))
}

fn extract_color(text: &str) -> Option<String> {
    crate::text::tokenize(text)
        .into_iter()
        .find(|t| is_color(t))
}

/// Pulls categorical attributes and the age range out of product text with fixed patterns.
/// The description is searched first, then the title.
pub fn extract_attributes(description: &str, title: &str) -> ExtractedAttributes {
    let mut out = ExtractedAttributes::default();
    for text in [description, title] {
        if out.brand.is_none() {
            out.brand = extract_brand(text);
        }
        if out.min_age.is_none() && out.max_age.is_none() {
            if let Some((lo, hi)) = extract_age(text) {
                out.min_age = lo;
                out.max_age = hi;
            }
        }
    }
    out.color = extract_color(title).or_else(|| extract_color(description));
    out
}
