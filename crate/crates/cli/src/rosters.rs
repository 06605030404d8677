//! Ego-network roster ingestion: long-format CSV with one row per alter
//! attribute (`ego_id, alter_index, attribute, value`). A row with all three
//! alter fields empty registers an isolate ego with no alters. Values that
//! parse as numbers become numeric attributes; everything else is a label.

use std::collections::BTreeMap;
use std::path::Path;

use durprobit::{AttributeValue, EgoNetwork};

use crate::error::CliError;

pub fn load_rosters(path: &Path) -> Result<Vec<EgoNetwork>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::user(format!("cannot open '{}': {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::user(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let column = |name: &str| -> Result<usize, CliError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::user(format!("missing required column '{name}'")))
    };
    let ego_col = column("ego_id")?;
    let alter_col = column("alter_index")?;
    let attr_col = column("attribute")?;
    let value_col = column("value")?;

    // ego -> alter index -> attributes
    let mut egos: BTreeMap<String, BTreeMap<u64, BTreeMap<String, AttributeValue>>> =
        BTreeMap::new();
    for (index, record) in reader.records().enumerate() {
        let line = index + 2;
        let record = record.map_err(|e| CliError::user(format!("line {line}: {e}")))?;
        let cell = |idx: usize| record.get(idx).unwrap_or("");
        let ego_id = cell(ego_col);
        if ego_id.is_empty() {
            return Err(CliError::user(format!("line {line}: empty ego_id")));
        }
        let alter_raw = cell(alter_col);
        let attribute = cell(attr_col);
        let value_raw = cell(value_col);
        if alter_raw.is_empty() && attribute.is_empty() && value_raw.is_empty() {
            egos.entry(ego_id.to_string()).or_default();
            continue;
        }
        let alter_index: u64 = alter_raw.parse().map_err(|_| {
            CliError::user(format!("line {line}: alter_index '{alter_raw}' is not an integer"))
        })?;
        if attribute.is_empty() {
            return Err(CliError::user(format!("line {line}: empty attribute name")));
        }
        let value = match value_raw.parse::<f64>() {
            Ok(v) if v.is_finite() => AttributeValue::Number(v),
            _ => AttributeValue::Label(value_raw.to_string()),
        };
        egos.entry(ego_id.to_string())
            .or_default()
            .entry(alter_index)
            .or_default()
            .insert(attribute.to_string(), value);
    }

    Ok(egos
        .into_iter()
        .map(|(ego_id, alters)| EgoNetwork {
            ego_id,
            alters: alters.into_values().collect(),
        })
        .collect())
}
