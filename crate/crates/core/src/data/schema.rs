//! Dataset schema manifests.
//!
//! A manifest is a line-oriented `key = value` text file. Blank lines and
//! lines starting with `#` are ignored. Feature columns are declared with
//! `column.<name> = numeric` or `column.<name> = categorical`, optionally
//! followed by a fixed category list (`categorical: 3, 6, 7`). Feature order
//! is the order of declaration.
//!
//! ```text
//! schema_version = 1
//! name = heart
//! label = num
//! positive = 1, 2, 3, 4
//! negative = 0
//! positive_name = heart-disease
//! negative_name = no-heart-disease
//! column.age = numeric
//! column.thal = categorical: 3, 6, 7
//! ```

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnDecl {
    pub name: String,
    pub categorical: bool,
    /// Fixed category list; inferred from the data when absent.
    pub categories: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub name: String,
    pub label: String,
    pub positive_values: Vec<String>,
    /// When empty, any non-positive value is negative but the label column
    /// must then hold exactly two distinct values.
    pub negative_values: Vec<String>,
    pub positive_name: String,
    pub negative_name: String,
    pub columns: Vec<ColumnDecl>,
}

fn split_list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

/// String equality, falling back to numeric equality so that `1` matches `1.0`.
pub(crate) fn token_matches(a: &str, b: &str) -> bool {
    if a == b {
        return true;
    }
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

impl Schema {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut version = None;
        let mut name = None;
        let mut label = None;
        let mut positive = None;
        let mut negative = None;
        let mut positive_name = None;
        let mut negative_name = None;
        let mut columns: Vec<ColumnDecl> = Vec::new();

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Schema(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();

            fn set<T>(slot: &mut Option<T>, v: T, key: &str) -> Result<()> {
                if slot.replace(v).is_some() {
                    return Err(Error::Schema(format!("duplicate key `{key}`")));
                }
                Ok(())
            }

            match key {
                "schema_version" => {
                    let v: u32 = value
                        .parse()
                        .map_err(|_| Error::Schema(format!("bad schema_version `{value}`")))?;
                    set(&mut version, v, key)?
                }
                "name" => set(&mut name, value.to_string(), key)?,
                "label" => set(&mut label, value.to_string(), key)?,
                "positive" => set(&mut positive, split_list(value), key)?,
                "negative" => set(&mut negative, split_list(value), key)?,
                "positive_name" => set(&mut positive_name, value.to_string(), key)?,
                "negative_name" => set(&mut negative_name, value.to_string(), key)?,
                _ => {
                    let Some(col) = key.strip_prefix("column.") else {
                        return Err(Error::Schema(format!("unknown key `{key}`")));
                    };
                    let col = col.trim();
                    if col.is_empty() {
                        return Err(Error::Schema("empty column name".into()));
                    }
                    if columns.iter().any(|c| c.name == col) {
                        return Err(Error::Schema(format!("column `{col}` declared twice")));
                    }
                    let (kind, rest) = match value.split_once(':') {
                        Some((k, rest)) => (k.trim(), Some(rest)),
                        None => (value, None),
                    };
                    let decl = match (kind, rest) {
                        ("numeric", None) => ColumnDecl {
                            name: col.to_string(),
                            categorical: false,
                            categories: None,
                        },
                        ("categorical", rest) => {
                            let categories = rest.map(split_list);
                            if matches!(&categories, Some(c) if c.is_empty()) {
                                return Err(Error::Schema(format!(
                                    "column `{col}` declares an empty category list"
                                )));
                            }
                            ColumnDecl {
                                name: col.to_string(),
                                categorical: true,
                                categories,
                            }
                        }
                        _ => {
                            return Err(Error::Schema(format!(
                                "column `{col}`: unknown kind `{value}`"
                            )))
                        }
                    };
                    columns.push(decl);
                }
            }
        }

        match version {
            Some(SCHEMA_VERSION) => {}
            Some(v) => return Err(Error::Schema(format!("unsupported schema_version {v}"))),
            None => return Err(Error::Schema("missing schema_version".into())),
        }
        let label = label.ok_or_else(|| Error::Schema("missing `label`".into()))?;
        let positive_values = positive.ok_or_else(|| Error::Schema("missing `positive`".into()))?;
        if positive_values.is_empty() {
            return Err(Error::Schema("`positive` lists no values".into()));
        }
        let negative_values = negative.unwrap_or_default();
        if negative_values
            .iter()
            .any(|n| positive_values.iter().any(|p| token_matches(n, p)))
        {
            return Err(Error::Schema(
                "a label value is both positive and negative".into(),
            ));
        }
        if columns.is_empty() {
            return Err(Error::Schema("no feature columns declared".into()));
        }
        if columns.iter().any(|c| c.name == label) {
            return Err(Error::Schema(
                "label column is also declared as a feature".into(),
            ));
        }
        Ok(Schema {
            name: name.unwrap_or_else(|| "dataset".to_string()),
            label,
            positive_values,
            negative_values,
            positive_name: positive_name.unwrap_or_else(|| "positive".to_string()),
            negative_name: negative_name.unwrap_or_else(|| "negative".to_string()),
            columns,
        })
    }

    /// Canonical manifest text; `parse(to_manifest())` reproduces `self`.
    pub fn to_manifest(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "schema_version = {SCHEMA_VERSION}");
        let _ = writeln!(out, "name = {}", self.name);
        let _ = writeln!(out, "label = {}", self.label);
        let _ = writeln!(out, "positive = {}", self.positive_values.join(", "));
        if !self.negative_values.is_empty() {
            let _ = writeln!(out, "negative = {}", self.negative_values.join(", "));
        }
        let _ = writeln!(out, "positive_name = {}", self.positive_name);
        let _ = writeln!(out, "negative_name = {}", self.negative_name);
        for c in &self.columns {
            match (&c.categorical, &c.categories) {
                (false, _) => {
                    let _ = writeln!(out, "column.{} = numeric", c.name);
                }
                (true, None) => {
                    let _ = writeln!(out, "column.{} = categorical", c.name);
                }
                (true, Some(cats)) => {
                    let _ = writeln!(out, "column.{} = categorical: {}", c.name, cats.join(", "));
                }
            }
        }
        out
    }

    /// Maps a raw label cell to {0, 1}.
    pub fn encode_label(&self, raw: &str) -> Option<u8> {
        if self.positive_values.iter().any(|p| token_matches(p, raw)) {
            Some(1)
        } else if self.negative_values.is_empty()
            || self.negative_values.iter().any(|n| token_matches(n, raw))
        {
            Some(0)
        } else {
            None
        }
    }

    pub fn class_name(&self, class: u8) -> &str {
        if class == 1 {
            &self.positive_name
        } else {
            &self.negative_name
        }
    }
}
