//! Dataset CSV ingestion and emission.
//!
//! Schema: comma-separated, header row, UTF-8, '.' decimal separator, empty
//! cell = missing. Required columns: `id`; `departure_hours` (positive) or
//! `departure_raw` together with a declared origin offset; `travel_category`
//! or `travel_hours` (auto-categorized through the spec's cut points); plus
//! every covariate column the spec consumes. Rows with missing or invalid
//! values are dropped and reported with their line numbers; cells that are
//! present but not numeric are hard errors.

use std::collections::BTreeMap;
use std::path::Path;

use durprobit::{build_design_matrices, categorize_travel_time, Dataset, ModelSpec, Observation};

use crate::error::CliError;

/// A loaded dataset plus the dropped-row report (1-based line numbers).
#[derive(Debug)]
pub struct LoadedCsv {
    pub dataset: Dataset,
    pub n_input_rows: usize,
    pub dropped: Vec<DroppedRecord>,
}

#[derive(Debug, Clone)]
pub struct DroppedRecord {
    pub line: usize,
    pub id: String,
    pub reason: String,
}

pub fn load_csv(path: &Path, spec: &ModelSpec, origin_offset: Option<f64>) -> Result<LoadedCsv, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::user(format!("cannot open '{}': {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::user(format!("'{}': {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();

    let column = |name: &str| headers.iter().position(|h| h == name);
    let id_col = column("id")
        .ok_or_else(|| CliError::user("missing required column 'id'".to_string()))?;
    let departure_col = column("departure_hours");
    let departure_raw_col = column("departure_raw");
    let (departure_col, offset) = match (departure_col, departure_raw_col, origin_offset) {
        (Some(c), _, _) => (c, 0.0),
        (None, Some(c), Some(offset)) => (c, offset),
        (None, Some(_), None) => {
            return Err(CliError::user(
                "column 'departure_raw' needs an origin offset (--origin or [data].origin_offset)"
                    .to_string(),
            ))
        }
        (None, None, _) => {
            return Err(CliError::user(
                "missing required column 'departure_hours' (or 'departure_raw')".to_string(),
            ))
        }
    };
    let category_col = column("travel_category");
    let hours_col = column("travel_hours");
    if category_col.is_none() && hours_col.is_none() {
        return Err(CliError::user(
            "missing required column 'travel_category' (or 'travel_hours')".to_string(),
        ));
    }
    let mut covariate_cols: Vec<(String, usize)> = Vec::new();
    for name in spec.required_input_columns() {
        match column(&name) {
            Some(idx) => covariate_cols.push((name, idx)),
            None => {
                return Err(CliError::user(format!(
                    "missing required column '{name}'"
                )))
            }
        }
    }

    let mut rows: Vec<Observation> = Vec::new();
    let mut row_lines: Vec<usize> = Vec::new();
    let mut dropped: Vec<DroppedRecord> = Vec::new();
    let mut n_input_rows = 0usize;
    for (index, record) in reader.records().enumerate() {
        let line = index + 2; // header is line 1
        let record = record.map_err(|e| CliError::user(format!("line {line}: {e}")))?;
        n_input_rows += 1;
        let cell = |idx: usize| record.get(idx).unwrap_or("");
        let id = cell(id_col).to_string();

        let parse = |name: &str, raw: &str| -> Result<Option<f64>, CliError> {
            if raw.is_empty() {
                return Ok(None);
            }
            raw.parse::<f64>().map(Some).map_err(|_| {
                CliError::user(format!("line {line}: cannot parse '{raw}' in column '{name}'"))
            })
        };

        let departure = match parse(&headers[departure_col], cell(departure_col))? {
            Some(v) => v - offset,
            None => {
                dropped.push(DroppedRecord {
                    line,
                    id,
                    reason: "missing departure time".into(),
                });
                continue;
            }
        };

        let category: u8 = if let Some(c) = category_col.filter(|c| !cell(*c).is_empty()) {
            let raw = cell(c);
            let value = parse("travel_category", raw)?.expect("non-empty");
            if value.fract() != 0.0 || !(0.0..=255.0).contains(&value) {
                return Err(CliError::user(format!(
                    "line {line}: travel_category '{raw}' is not a small integer"
                )));
            }
            value as u8
        } else if let Some(c) = hours_col {
            match parse("travel_hours", cell(c))? {
                Some(hours) => match categorize_travel_time(hours, &spec.category_bounds) {
                    Ok(cat) => cat,
                    Err(_) => {
                        dropped.push(DroppedRecord {
                            line,
                            id,
                            reason: format!("travel_hours {hours} is not positive"),
                        });
                        continue;
                    }
                },
                None => {
                    dropped.push(DroppedRecord {
                        line,
                        id,
                        reason: "missing travel time".into(),
                    });
                    continue;
                }
            }
        } else {
            dropped.push(DroppedRecord {
                line,
                id,
                reason: "missing travel category".into(),
            });
            continue;
        };

        let mut covariates = BTreeMap::new();
        for (name, idx) in &covariate_cols {
            if let Some(value) = parse(name, cell(*idx))? {
                covariates.insert(name.clone(), value);
            }
        }
        rows.push(Observation::with_covariates(id, departure, category, covariates));
        row_lines.push(line);
    }

    let dataset = build_design_matrices(spec, &rows)?;
    for drop in dataset.dropped() {
        dropped.push(DroppedRecord {
            line: row_lines[drop.index],
            id: drop.id.clone(),
            reason: drop.reason.clone(),
        });
    }
    dropped.sort_by_key(|d| d.line);
    Ok(LoadedCsv {
        dataset,
        n_input_rows,
        dropped,
    })
}

/// Writes a dataset in the same schema `load_csv` ingests. Covariate columns
/// come from the design matrices (the intercept column is skipped); floats
/// use the shortest representation that parses back to the same value.
pub fn write_csv(dataset: &Dataset, path: &Path) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| CliError::user(format!("cannot write '{}': {e}", path.display())))?;
    let mut columns: Vec<(String, Source)> = Vec::new();
    for (j, name) in dataset.y().names().iter().enumerate() {
        if name != durprobit::INTERCEPT_NAME {
            columns.push((name.clone(), Source::Y(j)));
        }
    }
    for (j, name) in dataset.x().names().iter().enumerate() {
        if name != durprobit::INTERCEPT_NAME && !columns.iter().any(|(n, _)| n == name) {
            columns.push((name.clone(), Source::X(j)));
        }
    }

    let mut header = vec!["id".to_string(), "departure_hours".into(), "travel_category".into()];
    header.extend(columns.iter().map(|(n, _)| n.clone()));
    writer
        .write_record(&header)
        .map_err(|e| CliError::user(e.to_string()))?;
    for (i, obs) in dataset.observations().iter().enumerate() {
        let mut record = vec![
            obs.id.clone(),
            format!("{}", obs.departure_hours),
            format!("{}", obs.travel_category),
        ];
        for (_, source) in &columns {
            let value = match source {
                Source::Y(j) => dataset.y().get(i, *j),
                Source::X(j) => dataset.x().get(i, *j),
            };
            record.push(format!("{value}"));
        }
        writer
            .write_record(&record)
            .map_err(|e| CliError::user(e.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

enum Source {
    Y(usize),
    X(usize),
}
