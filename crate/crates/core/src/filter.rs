//! Metadata filtering: the conjunction of a query's constraints over the catalog.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, FieldType, Product};
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::query::{Constraint, ConstraintKind};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingField {
    #[default]
    Exclude,
    Include,
}

/// Numeric tolerance shared by the filter and the deterministic judge.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterPolicy {
    /// Relative slack for `at_most`, `at_least` and `between`.
    pub numeric_slack: f64,
    /// Half-width of the `around` window, relative to its center.
    pub around_slack: f64,
    /// Relative widening of queried age ranges. Zero means exact intersection.
    pub age_slack: f64,
    pub missing_field: MissingField,
}

impl Default for FilterPolicy {
    fn default() -> Self {
        FilterPolicy {
            numeric_slack: 0.20,
            around_slack: 0.20,
            age_slack: 0.0,
            missing_field: MissingField::Exclude,
        }
    }
}

impl FilterPolicy {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("numeric_slack", self.numeric_slack),
            ("around_slack", self.around_slack),
            ("age_slack", self.age_slack),
        ] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::Config(format!("{name} = {v} is outside [0, 1)")));
            }
        }
        Ok(())
    }

    /// Closed interval a numeric value must fall in, after slack.
    pub fn numeric_window(&self, c: &Constraint) -> Option<(f64, f64)> {
        let s = self.numeric_slack;
        Some(match c.kind {
            ConstraintKind::AtMost => (f64::NEG_INFINITY, c.bound()? * (1.0 + s)),
            ConstraintKind::AtLeast => (c.bound()? * (1.0 - s), f64::INFINITY),
            ConstraintKind::Between => (c.low? * (1.0 - s), c.high? * (1.0 + s)),
            ConstraintKind::Around => {
                let v = c.low?;
                (v * (1.0 - self.around_slack), v * (1.0 + self.around_slack))
            }
            ConstraintKind::Equals => return None,
        })
    }

    /// Queried age interval, after `age_slack`.
    pub fn age_window(&self, c: &Constraint) -> Option<(f64, f64)> {
        let s = self.age_slack;
        Some(match c.kind {
            ConstraintKind::AtMost => (f64::NEG_INFINITY, c.bound()? * (1.0 + s)),
            ConstraintKind::AtLeast => (c.bound()? * (1.0 - s), f64::INFINITY),
            ConstraintKind::Between => (c.low? * (1.0 - s), c.high? * (1.0 + s)),
            ConstraintKind::Around => {
                let v = c.low?;
                (v * (1.0 - s), v * (1.0 + s))
            }
            ConstraintKind::Equals => return None,
        })
    }

    fn missing(&self) -> bool {
        self.missing_field == MissingField::Include
    }
}

/// Does product `p` satisfy constraint `c`? Field types follow the default
/// schema names: brand/color/category are categorical, price/rating numeric,
/// age matches the product's age interval. An unknown field never matches.
pub fn satisfies(p: &Product, c: &Constraint, policy: &FilterPolicy) -> bool {
    match field_type(&c.field) {
        Some(FieldType::Categorical) => {
            let Some(want) = c.value.as_deref().map(str::trim) else {
                return false;
            };
            let want = want.to_lowercase();
            match c.field.as_str() {
                "category" => {
                    if p.categories.is_empty() {
                        policy.missing()
                    } else {
                        p.categories.contains(&want)
                    }
                }
                field => match categorical(p, field) {
                    Some(have) => have == want,
                    None => policy.missing(),
                },
            }
        }
        Some(FieldType::Numeric) => {
            let value = match c.field.as_str() {
                "price" => p.price,
                _ => p.rating,
            };
            match (value, policy.numeric_window(c)) {
                (None, _) => policy.missing(),
                (Some(v), Some((lo, hi))) => within(v, lo, hi),
                (Some(_), None) => false,
            }
        }
        Some(FieldType::AgeRange) => {
            if p.min_age.is_none() && p.max_age.is_none() {
                return policy.missing();
            }
            let Some((qlo, qhi)) = policy.age_window(c) else {
                return false;
            };
            let plo = p.min_age.map_or(f64::NEG_INFINITY, f64::from);
            let phi = p.max_age.map_or(f64::INFINITY, f64::from);
            within(plo, f64::NEG_INFINITY, qhi) && within(qlo, f64::NEG_INFINITY, phi)
        }
        None => false,
    }
}

/// Absolute tolerance on window edges so that decimal boundaries such as
/// 12 * 0.8 = 9.6 compare as in exact arithmetic.
pub const BOUND_EPSILON: f64 = 1e-9;

fn within(v: f64, lo: f64, hi: f64) -> bool {
    lo - BOUND_EPSILON <= v && v <= hi + BOUND_EPSILON
}

fn field_type(field: &str) -> Option<FieldType> {
    match field {
        "brand" | "color" | "category" => Some(FieldType::Categorical),
        "price" | "rating" => Some(FieldType::Numeric),
        "age" => Some(FieldType::AgeRange),
        _ => None,
    }
}

fn categorical<'a>(p: &'a Product, field: &str) -> Option<&'a str> {
    match field {
        "brand" => p.brand.as_deref(),
        "color" => p.color.as_deref(),
        _ => None,
    }
}

pub fn satisfies_all(p: &Product, constraints: &[Constraint], policy: &FilterPolicy) -> bool {
    constraints.iter().all(|c| satisfies(p, c, policy))
}

/// Ids of products satisfying every constraint.
pub fn filter_catalog(
    catalog: &Catalog,
    constraints: &[Constraint],
    policy: &FilterPolicy,
) -> BTreeSet<String> {
    filter_catalog_with(Execution::default(), catalog, constraints, policy)
}

pub fn filter_catalog_with(
    exec: Execution,
    catalog: &Catalog,
    constraints: &[Constraint],
    policy: &FilterPolicy,
) -> BTreeSet<String> {
    if constraints.is_empty() {
        return catalog.ids().map(str::to_string).collect();
    }
    let products: Vec<&Product> = catalog.products().collect();
    par::filter_map(exec, &products, |p| {
        satisfies_all(p, constraints, policy).then(|| p.id.clone())
    })
    .into_iter()
    .collect()
}

/// Per-constraint outcome for one product, for `--explain`.
pub fn explain_product(
    p: &Product,
    constraints: &[Constraint],
    policy: &FilterPolicy,
) -> Vec<(Constraint, bool)> {
    constraints
        .iter()
        .map(|c| (c.clone(), satisfies(p, c, policy)))
        .collect()
}
