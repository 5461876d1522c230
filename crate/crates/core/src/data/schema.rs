//! Sidecar schema files mapping csv columns to pipeline roles.

use std::path::Path;

use indexmap::IndexMap;

use super::DataError;

/// Role of a csv column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnRole {
    Feature,
    Target,
    /// Carried alongside the features under the given metadata name.
    Metadata(String),
    Id,
}

impl ColumnRole {
    pub fn parse(role: &str) -> Result<ColumnRole, DataError> {
        match role {
            "feature" => Ok(ColumnRole::Feature),
            "target" => Ok(ColumnRole::Target),
            "id" => Ok(ColumnRole::Id),
            other => match other.strip_prefix("metadata:") {
                Some(name) if !name.is_empty() => Ok(ColumnRole::Metadata(name.to_string())),
                _ => Err(DataError::UnknownRole {
                    role: role.to_string(),
                }),
            },
        }
    }

    pub fn as_string(&self) -> String {
        match self {
            ColumnRole::Feature => "feature".to_string(),
            ColumnRole::Target => "target".to_string(),
            ColumnRole::Metadata(name) => format!("metadata:{name}"),
            ColumnRole::Id => "id".to_string(),
        }
    }
}

/// Ordered column-name to role map. Columns not listed in the schema are
/// ignored at ingestion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    pub roles: IndexMap<String, ColumnRole>,
}

impl Schema {
    /// Load from a json object of `"column": "role"` pairs.
    pub fn load(path: &Path) -> Result<Schema, DataError> {
        let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Schema::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Schema, DataError> {
        let raw: IndexMap<String, String> =
            serde_json::from_str(text).map_err(|e| DataError::UnknownRole {
                role: format!("<schema parse error: {e}>"),
            })?;
        let mut roles = IndexMap::new();
        for (column, role) in raw {
            roles.insert(column, ColumnRole::parse(&role)?);
        }
        Schema::validate(&roles)?;
        Ok(Schema { roles })
    }

    fn validate(roles: &IndexMap<String, ColumnRole>) -> Result<(), DataError> {
        let n_targets = roles
            .values()
            .filter(|r| **r == ColumnRole::Target)
            .count();
        if n_targets != 1 {
            return Err(DataError::TargetCount { count: n_targets });
        }
        if !roles.values().any(|r| *r == ColumnRole::Feature) {
            return Err(DataError::NoFeatureColumns);
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let raw: IndexMap<&str, String> = self
            .roles
            .iter()
            .map(|(c, r)| (c.as_str(), r.as_string()))
            .collect();
        let mut out = serde_json::to_string_pretty(&raw).expect("schema is serialisable");
        out.push('\n');
        out
    }
}
