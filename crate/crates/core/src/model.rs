//! Model specification, observation data model and design-matrix construction.
//!
//! The joint model couples two equations over the same observations:
//!
//! ```text
//! ln d = gamma . y + alpha          (continuous departure duration, hours)
//! tt   = k  iff  mu_{k-1} < beta . x + eps <= mu_k   (ordinal travel class)
//! ```
//!
//! This module owns everything upstream of the likelihood: which columns feed
//! each equation, how raw travel hours map onto ordinal categories, derived
//! indicator/interaction columns, and the listwise-cleaned design matrices.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reserved name of the automatically inserted intercept column.
pub const INTERCEPT_NAME: &str = "const";

/// Optimizer and multi-start settings used by `estimate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimationSettings {
    /// Convergence threshold on the gradient infinity norm (reparameterized space).
    pub gradient_tolerance: f64,
    /// Relative log-likelihood change treated as a stall.
    pub ll_relative_tolerance: f64,
    /// Number of consecutive stalled iterations that counts as convergence.
    pub ll_stall_iterations: usize,
    /// Iteration cap per start.
    pub max_iterations: usize,
    /// Number of starts: one heuristic start plus seeded perturbations.
    pub n_starts: usize,
    /// Seed for the start perturbations.
    pub seed: u64,
    /// Std-dev of the Gaussian start perturbations in reparameterized space.
    pub perturbation_scale: f64,
}

impl Default for EstimationSettings {
    fn default() -> Self {
        Self {
            gradient_tolerance: 1e-6,
            ll_relative_tolerance: 1e-9,
            ll_stall_iterations: 3,
            max_iterations: 500,
            n_starts: 5,
            seed: 0,
            perturbation_scale: 0.5,
        }
    }
}

/// A column computed from other columns before design matrices are built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedColumn {
    pub name: String,
    pub transform: ColumnTransform,
}

/// Supported column transforms. Derived columns are evaluated in declaration
/// order, so a transform may reference an earlier derived column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ColumnTransform {
    /// Elementwise product of two binary columns (logical AND).
    Interaction { a: String, b: String },
    /// 1 where `source >= cutoff`, 0 otherwise.
    Threshold { source: String, cutoff: f64 },
}

/// Declares the covariates of each equation and the categorization scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    /// Covariate columns of the duration equation, in reporting order.
    pub duration_covariates: Vec<String>,
    /// Covariate columns of the ordinal equation, in reporting order.
    pub ordinal_covariates: Vec<String>,
    /// Prepend an intercept column to the duration design matrix.
    #[serde(default = "default_true")]
    pub include_duration_intercept: bool,
    /// Ordered cut points (hours) mapping travel hours onto categories.
    #[serde(default = "default_bounds")]
    pub category_bounds: Vec<f64>,
    /// Columns computed from other columns before matrix construction.
    #[serde(default)]
    pub derived_columns: Vec<DerivedColumn>,
    #[serde(default)]
    pub settings: EstimationSettings,
}

fn default_true() -> bool {
    true
}

fn default_bounds() -> Vec<f64> {
    vec![1.0, 3.0]
}

impl ModelSpec {
    /// Spec with default categorization (cut points at 1 and 3 hours),
    /// a duration intercept and default estimation settings.
    pub fn new<S: Into<String>>(
        duration_covariates: Vec<S>,
        ordinal_covariates: Vec<S>,
    ) -> Result<Self> {
        let spec = Self {
            duration_covariates: duration_covariates.into_iter().map(Into::into).collect(),
            ordinal_covariates: ordinal_covariates.into_iter().map(Into::into).collect(),
            include_duration_intercept: true,
            category_bounds: default_bounds(),
            derived_columns: Vec::new(),
            settings: EstimationSettings::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Number of ordinal categories implied by the cut points.
    pub fn n_categories(&self) -> usize {
        self.category_bounds.len() + 1
    }

    /// Number of duration-equation coefficients including the intercept.
    pub fn n_duration_params(&self) -> usize {
        self.duration_covariates.len() + usize::from(self.include_duration_intercept)
    }

    /// Number of ordinal-equation coefficients including the intercept.
    pub fn n_ordinal_params(&self) -> usize {
        self.ordinal_covariates.len() + 1
    }

    pub fn validate(&self) -> Result<()> {
        check_no_duplicates("duration_covariates", &self.duration_covariates)?;
        check_no_duplicates("ordinal_covariates", &self.ordinal_covariates)?;
        for name in self
            .duration_covariates
            .iter()
            .chain(self.ordinal_covariates.iter())
            .chain(self.derived_columns.iter().map(|d| &d.name))
        {
            if name == INTERCEPT_NAME {
                return Err(Error::Config(format!(
                    "column name '{INTERCEPT_NAME}' is reserved for the automatic intercept"
                )));
            }
        }
        if self.category_bounds.is_empty() {
            return Err(Error::Config("category_bounds must not be empty".into()));
        }
        for (i, b) in self.category_bounds.iter().enumerate() {
            if !b.is_finite() || *b <= 0.0 {
                return Err(Error::Config(format!(
                    "category bound {b} is not a positive finite number"
                )));
            }
            if i > 0 && self.category_bounds[i - 1] >= *b {
                return Err(Error::Config(
                    "category_bounds must be strictly increasing".into(),
                ));
            }
        }
        let mut derived_names = BTreeSet::new();
        for d in &self.derived_columns {
            if !derived_names.insert(d.name.as_str()) {
                return Err(Error::Config(format!(
                    "derived column '{}' declared twice",
                    d.name
                )));
            }
            if let ColumnTransform::Threshold { cutoff, .. } = &d.transform {
                if !cutoff.is_finite() {
                    return Err(Error::Config(format!(
                        "threshold cutoff for '{}' is not finite",
                        d.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Names of every raw (non-derived) column the spec needs from the data.
    pub fn required_input_columns(&self) -> BTreeSet<String> {
        let derived: BTreeSet<&str> = self.derived_columns.iter().map(|d| d.name.as_str()).collect();
        let mut needed: BTreeSet<String> = BTreeSet::new();
        let mut stack: Vec<&str> = self
            .duration_covariates
            .iter()
            .chain(self.ordinal_covariates.iter())
            .map(String::as_str)
            .collect();
        while let Some(name) = stack.pop() {
            match self.derived_columns.iter().find(|d| d.name == name) {
                Some(d) => match &d.transform {
                    ColumnTransform::Interaction { a, b } => {
                        stack.push(a);
                        stack.push(b);
                    }
                    ColumnTransform::Threshold { source, .. } => stack.push(source),
                },
                None => {
                    if !derived.contains(name) {
                        needed.insert(name.to_string());
                    }
                }
            }
        }
        needed
    }
}

fn check_no_duplicates(what: &str, names: &[String]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for n in names {
        if !seen.insert(n.as_str()) {
            return Err(Error::Config(format!("duplicate column '{n}' in {what}")));
        }
    }
    Ok(())
}

/// One respondent: a positive departure duration, an ordinal travel category
/// and the raw covariate values the row carried at ingestion. Simulated rows
/// leave the map empty because the design matrices are built directly.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub id: String,
    pub departure_hours: f64,
    pub travel_category: u8,
    pub covariates: BTreeMap<String, f64>,
}

impl Observation {
    pub fn new(id: impl Into<String>, departure_hours: f64, travel_category: u8) -> Self {
        Self {
            id: id.into(),
            departure_hours,
            travel_category,
            covariates: BTreeMap::new(),
        }
    }

    pub fn with_covariates(
        id: impl Into<String>,
        departure_hours: f64,
        travel_category: u8,
        covariates: BTreeMap<String, f64>,
    ) -> Self {
        Self {
            id: id.into(),
            departure_hours,
            travel_category,
            covariates,
        }
    }
}

/// Dense row-major matrix with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    names: Vec<String>,
    data: Vec<f64>,
    nrows: usize,
}

impl DesignMatrix {
    pub fn from_rows(names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let ncols = names.len();
        let mut data = Vec::with_capacity(rows.len() * ncols);
        for row in rows {
            if row.len() != ncols {
                return Err(Error::Data(format!(
                    "design row has {} values, expected {}",
                    row.len(),
                    ncols
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            names,
            data,
            nrows: rows.len(),
        })
    }

    pub(crate) fn from_raw(names: Vec<String>, data: Vec<f64>, nrows: usize) -> Self {
        debug_assert_eq!(data.len(), nrows * names.len());
        Self { names, data, nrows }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.ncols();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.ncols() + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.nrows).map(|i| self.get(i, j)).collect()
    }

    /// True when every stored value is 0 or 1.
    pub fn column_is_binary(&self, j: usize) -> bool {
        (0..self.nrows).all(|i| {
            let v = self.get(i, j);
            v == 0.0 || v == 1.0
        })
    }
}

/// A dropped input row together with the reason it was excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct DroppedRow {
    /// Zero-based index into the input row slice.
    pub index: usize,
    pub id: String,
    pub reason: String,
}

/// Row-aligned observations and design matrices; immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    observations: Vec<Observation>,
    y: DesignMatrix,
    x: DesignMatrix,
    dropped: Vec<DroppedRow>,
}

impl Dataset {
    /// Assembles a dataset from already-validated parts. Row counts must
    /// agree and the matrices must be free of non-finite values.
    pub fn new(observations: Vec<Observation>, y: DesignMatrix, x: DesignMatrix) -> Result<Self> {
        Self::with_dropped(observations, y, x, Vec::new())
    }

    pub fn with_dropped(
        observations: Vec<Observation>,
        y: DesignMatrix,
        x: DesignMatrix,
        dropped: Vec<DroppedRow>,
    ) -> Result<Self> {
        if y.nrows() != observations.len() || x.nrows() != observations.len() {
            return Err(Error::Data(format!(
                "design matrices not row-aligned: {} observations, Y has {} rows, X has {} rows",
                observations.len(),
                y.nrows(),
                x.nrows()
            )));
        }
        if y.data.iter().any(|v| !v.is_finite()) || x.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("design matrices contain non-finite values".into()));
        }
        for (i, obs) in observations.iter().enumerate() {
            if !(obs.departure_hours.is_finite() && obs.departure_hours > 0.0) {
                return Err(Error::Data(format!(
                    "observation {} ('{}') has non-positive departure_hours",
                    i, obs.id
                )));
            }
        }
        Ok(Self {
            observations,
            y,
            x,
            dropped,
        })
    }

    pub fn n_obs(&self) -> usize {
        self.observations.len()
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn y(&self) -> &DesignMatrix {
        &self.y
    }

    pub fn x(&self) -> &DesignMatrix {
        &self.x
    }

    pub fn dropped(&self) -> &[DroppedRow] {
        &self.dropped
    }

    /// Observed count of each category `1..=3`.
    pub fn category_counts(&self) -> [usize; 3] {
        let mut counts = [0usize; 3];
        for obs in &self.observations {
            let c = obs.travel_category as usize;
            if (1..=3).contains(&c) {
                counts[c - 1] += 1;
            }
        }
        counts
    }

    /// The dataset stacked `copies` times; ids gain a `#k` suffix so they stay
    /// unique. Used for information-scaling experiments.
    pub fn repeated(&self, copies: usize) -> Dataset {
        let mut observations = Vec::with_capacity(self.n_obs() * copies);
        let mut ydata = Vec::with_capacity(self.y.data.len() * copies);
        let mut xdata = Vec::with_capacity(self.x.data.len() * copies);
        for k in 0..copies {
            for obs in &self.observations {
                let mut o = obs.clone();
                if k > 0 {
                    o.id = format!("{}#{k}", obs.id);
                }
                observations.push(o);
            }
            ydata.extend_from_slice(&self.y.data);
            xdata.extend_from_slice(&self.x.data);
        }
        let nrows = self.n_obs() * copies;
        Dataset {
            observations,
            y: DesignMatrix::from_raw(self.y.names.clone(), ydata, nrows),
            x: DesignMatrix::from_raw(self.x.names.clone(), xdata, nrows),
            dropped: Vec::new(),
        }
    }

    /// A copy with observation order permuted by `order` (a permutation of
    /// `0..n_obs`).
    pub fn reordered(&self, order: &[usize]) -> Result<Dataset> {
        if order.len() != self.n_obs() {
            return Err(Error::Data("permutation length mismatch".into()));
        }
        let mut observations = Vec::with_capacity(order.len());
        let mut rows_y = Vec::with_capacity(order.len());
        let mut rows_x = Vec::with_capacity(order.len());
        for &i in order {
            observations.push(self.observations[i].clone());
            rows_y.push(self.y.row(i).to_vec());
            rows_x.push(self.x.row(i).to_vec());
        }
        Ok(Dataset {
            observations,
            y: DesignMatrix::from_rows(self.y.names.clone(), &rows_y)?,
            x: DesignMatrix::from_rows(self.x.names.clone(), &rows_x)?,
            dropped: Vec::new(),
        })
    }
}

/// Maps positive travel hours onto ordinal categories. Cut points are
/// inclusive on the lower category: `hours <= bounds[0]` is category 1,
/// `bounds[k-1] < hours <= bounds[k]` is category k+1, anything above the
/// last bound is the top category.
pub fn categorize_travel_time(hours: f64, bounds: &[f64]) -> Result<u8> {
    if !(hours.is_finite() && hours > 0.0) {
        return Err(Error::Domain(format!(
            "travel hours must be positive and finite, got {hours}"
        )));
    }
    if bounds.is_empty() || bounds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("cut points must be strictly increasing".into()));
    }
    for (k, b) in bounds.iter().enumerate() {
        if hours <= *b {
            return Ok((k + 1) as u8);
        }
    }
    Ok((bounds.len() + 1) as u8)
}

/// Elementwise product of two binary columns: 1 iff both entries are 1.
pub fn make_interaction(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::Data(format!(
            "interaction inputs have different lengths ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    for v in a.iter().chain(b.iter()) {
        if !(*v == 0.0 || *v == 1.0) {
            return Err(Error::Domain(format!(
                "interaction inputs must be binary (0/1), got {v}"
            )));
        }
    }
    Ok(a.iter().zip(b).map(|(x, y)| x * y).collect())
}

/// Indicator column: 1 where `value >= cutoff`, else 0.
pub fn make_threshold_indicator(values: &[f64], cutoff: f64) -> Result<Vec<f64>> {
    if !cutoff.is_finite() {
        return Err(Error::Domain("threshold cutoff must be finite".into()));
    }
    values
        .iter()
        .map(|v| {
            if !v.is_finite() {
                Err(Error::Domain(format!("non-finite value {v} in threshold input")))
            } else {
                Ok(if *v >= cutoff { 1.0 } else { 0.0 })
            }
        })
        .collect()
}

/// Resolves the spec against raw rows: evaluates derived columns, drops rows
/// with missing or invalid values (counted and reported), and assembles the
/// row-aligned design matrices with intercepts in place.
pub fn build_design_matrices(spec: &ModelSpec, rows: &[Observation]) -> Result<Dataset> {
    spec.validate()?;
    let n_categories = spec.n_categories() as u8;

    // A column no row provides is a specification mistake, not missing data.
    for name in spec.required_input_columns() {
        if !rows.iter().any(|r| r.covariates.contains_key(&name)) {
            return Err(Error::UnknownColumn(name));
        }
    }

    let mut y_names: Vec<String> = Vec::with_capacity(spec.n_duration_params());
    if spec.include_duration_intercept {
        y_names.push(INTERCEPT_NAME.to_string());
    }
    y_names.extend(spec.duration_covariates.iter().cloned());
    let mut x_names: Vec<String> = Vec::with_capacity(spec.n_ordinal_params());
    x_names.push(INTERCEPT_NAME.to_string());
    x_names.extend(spec.ordinal_covariates.iter().cloned());

    let mut kept: Vec<Observation> = Vec::with_capacity(rows.len());
    let mut y_rows: Vec<Vec<f64>> = Vec::with_capacity(rows.len());
    let mut x_rows: Vec<Vec<f64>> = Vec::with_capacity(rows.len());
    let mut dropped: Vec<DroppedRow> = Vec::new();

    'rows: for (index, row) in rows.iter().enumerate() {
        let note_drop = |reason: String, dropped: &mut Vec<DroppedRow>| {
            dropped.push(DroppedRow {
                index,
                id: row.id.clone(),
                reason,
            });
        };
        if !(row.departure_hours.is_finite() && row.departure_hours > 0.0) {
            note_drop(
                format!("departure_hours {} is not positive", row.departure_hours),
                &mut dropped,
            );
            continue;
        }
        if row.travel_category < 1 || row.travel_category > n_categories {
            note_drop(
                format!(
                    "travel_category {} outside 1..={n_categories}",
                    row.travel_category
                ),
                &mut dropped,
            );
            continue;
        }
        let mut values = row.covariates.clone();
        if values.values().any(|v| !v.is_finite()) {
            // Treat non-finite raw entries as missing.
            values.retain(|_, v| v.is_finite());
        }
        for derived in &spec.derived_columns {
            let computed = match &derived.transform {
                ColumnTransform::Interaction { a, b } => {
                    match (values.get(a).copied(), values.get(b).copied()) {
                        (Some(va), Some(vb)) => {
                            Some(make_interaction(&[va], &[vb]).map(|v| v[0])?)
                        }
                        _ => None,
                    }
                }
                ColumnTransform::Threshold { source, cutoff } => values
                    .get(source)
                    .copied()
                    .map(|v| make_threshold_indicator(&[v], *cutoff).map(|col| col[0]))
                    .transpose()?,
            };
            if let Some(v) = computed {
                values.insert(derived.name.clone(), v);
            }
        }
        let mut y_row = Vec::with_capacity(y_names.len());
        let mut x_row = Vec::with_capacity(x_names.len());
        for (names, out) in [(&y_names, &mut y_row), (&x_names, &mut x_row)] {
            for name in names.iter() {
                if name == INTERCEPT_NAME {
                    out.push(1.0);
                } else {
                    match values.get(name) {
                        Some(v) => out.push(*v),
                        None => {
                            note_drop(format!("missing value for '{name}'"), &mut dropped);
                            continue 'rows;
                        }
                    }
                }
            }
        }
        kept.push(row.clone());
        y_rows.push(y_row);
        x_rows.push(x_row);
    }

    if kept.is_empty() {
        return Err(Error::Data(format!(
            "no usable rows remain after dropping {}",
            dropped.len()
        )));
    }
    Dataset::with_dropped(
        kept,
        DesignMatrix::from_rows(y_names, &y_rows)?,
        DesignMatrix::from_rows(x_names, &x_rows)?,
        dropped,
    )
}
