//! Ego-network composition measures used as covariates: attribute
//! heterogeneity for continuous attributes, the index of qualitative
//! variation (IQV) for categorical attributes, and network size.
//!
//! Heterogeneity of a continuous attribute is the population standard
//! deviation over the alters that carry it. The IQV for category shares
//! p_1..p_C is
//!
//! ```text
//! IQV = [C / (C - 1)] (1 - sum p_j^2)
//! ```
//!
//! which equals the number of unlike alter pairs divided by its even-split
//! maximum C(C-1)/2 (n/C)^2, and ranges from 0 (homogeneous) to 1.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An alter attribute: numeric for heterogeneity, labelled for IQV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttributeValue {
    Number(f64),
    Label(String),
}

impl AttributeValue {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            Self::Number(v) => Some(*v),
            Self::Label(_) => None,
        }
    }

    // Category key: labels by value, numbers by bit pattern.
    fn category_key(&self) -> String {
        match self {
            Self::Label(s) => format!("l:{s}"),
            Self::Number(v) => format!("n:{}", v.to_bits()),
        }
    }
}

/// One respondent's alter roster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoNetwork {
    pub ego_id: String,
    pub alters: Vec<BTreeMap<String, AttributeValue>>,
}

impl EgoNetwork {
    pub fn new(ego_id: impl Into<String>) -> Self {
        Self {
            ego_id: ego_id.into(),
            alters: Vec::new(),
        }
    }

    /// Alter count (the network-size covariate). Isolates have size 0.
    pub fn network_size(&self) -> usize {
        self.alters.len()
    }
}

/// Heterogeneity of one attribute across a roster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeterogeneityResult {
    /// Population standard deviation; `None` when no alter carries the
    /// attribute with a numeric value.
    pub value: Option<f64>,
    pub n_with_attribute: usize,
    pub n_missing: usize,
}

/// Population (divide-by-n) standard deviation of a numeric attribute over
/// the alters that carry it; alters without the attribute are excluded and
/// counted.
pub fn continuous_heterogeneity(network: &EgoNetwork, attribute: &str) -> HeterogeneityResult {
    let values: Vec<f64> = network
        .alters
        .iter()
        .filter_map(|a| a.get(attribute).and_then(AttributeValue::as_number))
        .filter(|v| v.is_finite())
        .collect();
    let n_with = values.len();
    let n_missing = network.alters.len() - n_with;
    if n_with == 0 {
        return HeterogeneityResult {
            value: None,
            n_with_attribute: 0,
            n_missing,
        };
    }
    let mean = values.iter().sum::<f64>() / n_with as f64;
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n_with as f64;
    HeterogeneityResult {
        value: Some(variance.sqrt()),
        n_with_attribute: n_with,
        n_missing,
    }
}

/// IQV of one attribute across a roster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IqvResult {
    /// `None` when no alter carries the attribute.
    pub value: Option<f64>,
    pub n_with_attribute: usize,
    pub n_categories: usize,
}

/// Index of qualitative variation over the alters carrying `attribute`.
/// `declared_categories` fixes C; otherwise C is the larger of 2 and the
/// number of distinct observed labels.
pub fn iqv(
    network: &EgoNetwork,
    attribute: &str,
    declared_categories: Option<usize>,
) -> Result<IqvResult> {
    if let Some(c) = declared_categories {
        if c < 2 {
            return Err(Error::Domain(format!(
                "IQV needs at least 2 categories, {c} declared"
            )));
        }
    }
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for alter in &network.alters {
        if let Some(value) = alter.get(attribute) {
            *counts.entry(value.category_key()).or_insert(0) += 1;
        }
    }
    let n: usize = counts.values().sum();
    let observed = counts.len();
    let c = match declared_categories {
        Some(c) => {
            if observed > c {
                return Err(Error::Data(format!(
                    "attribute '{attribute}' shows {observed} distinct values but {c} categories \
                     were declared"
                )));
            }
            c
        }
        None => observed.max(2),
    };
    if n == 0 {
        return Ok(IqvResult {
            value: None,
            n_with_attribute: 0,
            n_categories: c,
        });
    }
    Ok(IqvResult {
        value: Some(iqv_from_counts(counts.values().copied(), c, n)),
        n_with_attribute: n,
        n_categories: c,
    })
}

fn iqv_from_counts(counts: impl IntoIterator<Item = usize>, c: usize, n: usize) -> f64 {
    let sum_p2: f64 = counts
        .into_iter()
        .map(|k| {
            let p = k as f64 / n as f64;
            p * p
        })
        .sum();
    (c as f64 / (c as f64 - 1.0)) * (1.0 - sum_p2)
}
