use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::schema::{token_matches, Schema};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric,
    /// Values are codes indexing into `categories`.
    Categorical {
        categories: Vec<String>,
    },
}

impl FeatureKind {
    pub fn is_categorical(&self) -> bool {
        matches!(self, FeatureKind::Categorical { .. })
    }
}

/// Name and kind of one feature column, enough to re-parse raw cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: FeatureKind,
}

impl FeatureSpec {
    /// Parses one raw cell. `Ok(None)` marks a missing entry.
    pub fn parse_cell(&self, raw: &str) -> Result<Option<f64>> {
        let raw = raw.trim();
        if is_missing(raw) {
            return Ok(None);
        }
        match &self.kind {
            FeatureKind::Numeric => {
                let v: f64 = raw.parse().map_err(|_| {
                    Error::Data(format!(
                        "column `{}`: cannot parse `{raw}` as a number",
                        self.name
                    ))
                })?;
                if !v.is_finite() {
                    return Err(Error::Data(format!(
                        "column `{}`: non-finite value `{raw}`",
                        self.name
                    )));
                }
                Ok(Some(v))
            }
            FeatureKind::Categorical { categories } => categories
                .iter()
                .position(|c| token_matches(c, raw))
                .map(|code| Some(code as f64))
                .ok_or_else(|| {
                    Error::Data(format!("column `{}`: unknown category `{raw}`", self.name))
                }),
        }
    }

    /// Renders a value the way it appears in a CSV cell.
    pub fn render_value(&self, value: f64) -> String {
        match &self.kind {
            FeatureKind::Numeric => format!("{value}"),
            FeatureKind::Categorical { categories } => categories
                .get(value as usize)
                .cloned()
                .unwrap_or_else(|| format!("{value}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureColumn {
    pub spec: FeatureSpec,
    pub values: Vec<Option<f64>>,
}

impl FeatureColumn {
    pub fn name(&self) -> &str {
        &self.spec.name
    }
}

/// Typed feature columns plus binary outcome labels (1 = positive class).
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub columns: Vec<FeatureColumn>,
    pub labels: Vec<u8>,
}

pub(crate) fn is_missing(raw: &str) -> bool {
    raw.is_empty() || raw == "?"
}

/// Numeric-aware ordering for inferred category lists.
fn sort_categories(cats: &mut [String]) {
    let numeric: Option<Vec<f64>> = cats.iter().map(|c| c.parse::<f64>().ok()).collect();
    if numeric.is_some() {
        cats.sort_by(|a, b| {
            let x: f64 = a.parse().unwrap();
            let y: f64 = b.parse().unwrap();
            x.total_cmp(&y)
        });
    } else {
        cats.sort();
    }
}

impl Dataset {
    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn specs(&self) -> Vec<FeatureSpec> {
        self.columns.iter().map(|c| c.spec.clone()).collect()
    }

    pub fn has_missing(&self) -> bool {
        self.columns
            .iter()
            .any(|c| c.values.iter().any(Option::is_none))
    }

    pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file, schema)
    }

    /// Reads a headed CSV, keeping only the schema's columns. Missing cells
    /// (empty or `?`) are kept as `None`; see [`Dataset::impute_mode`].
    pub fn read_csv<R: Read>(reader: R, schema: &Schema) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let find = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Data(format!("column `{name}` absent from header")))
        };
        let label_idx = find(&schema.label)?;
        let col_idx: Vec<usize> = schema
            .columns
            .iter()
            .map(|c| find(&c.name))
            .collect::<Result<_>>()?;

        let mut labels = Vec::new();
        let mut raw_cols: Vec<Vec<String>> = vec![Vec::new(); col_idx.len()];
        let mut distinct_labels: Vec<String> = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            let raw_label = record.get(label_idx).unwrap_or("");
            if is_missing(raw_label) {
                return Err(Error::Data(format!("row {}: missing label", row + 1)));
            }
            let label = schema.encode_label(raw_label).ok_or_else(|| {
                Error::Data(format!("row {}: unrecognised label `{raw_label}`", row + 1))
            })?;
            if !distinct_labels.iter().any(|l| token_matches(l, raw_label)) {
                distinct_labels.push(raw_label.to_string());
            }
            labels.push(label);
            for (dst, &i) in raw_cols.iter_mut().zip(&col_idx) {
                dst.push(record.get(i).unwrap_or("").to_string());
            }
        }
        if labels.len() < 2 {
            return Err(Error::Data(format!(
                "need at least 2 rows, found {}",
                labels.len()
            )));
        }
        if schema.negative_values.is_empty() && distinct_labels.len() != 2 {
            return Err(Error::Data(format!(
                "label column `{}` has {} distinct values, expected 2",
                schema.label,
                distinct_labels.len()
            )));
        }

        let mut columns = Vec::with_capacity(raw_cols.len());
        for (decl, raw) in schema.columns.iter().zip(raw_cols) {
            let kind = if decl.categorical {
                let categories = match &decl.categories {
                    Some(c) => c.clone(),
                    None => {
                        let mut cats: Vec<String> = Vec::new();
                        for v in raw.iter().map(|s| s.as_str()).filter(|s| !is_missing(s)) {
                            if !cats.iter().any(|c| token_matches(c, v)) {
                                cats.push(v.to_string());
                            }
                        }
                        sort_categories(&mut cats);
                        cats
                    }
                };
                FeatureKind::Categorical { categories }
            } else {
                FeatureKind::Numeric
            };
            let spec = FeatureSpec {
                name: decl.name.clone(),
                kind,
            };
            let values = raw
                .iter()
                .map(|cell| spec.parse_cell(cell))
                .collect::<Result<Vec<_>>>()?;
            columns.push(FeatureColumn { spec, values });
        }

        let dataset = Dataset {
            name: schema.name.clone(),
            columns,
            labels,
        };
        dataset.check_labels()?;
        Ok(dataset)
    }

    fn check_labels(&self) -> Result<()> {
        let pos = self.labels.iter().filter(|&&l| l == 1).count();
        if pos == 0 || pos == self.labels.len() {
            return Err(Error::SingleClass);
        }
        Ok(())
    }

    /// Most frequent category of each categorical column (first on ties);
    /// `None` for numeric columns.
    pub fn category_modes(&self) -> Result<Vec<Option<f64>>> {
        self.columns
            .iter()
            .map(|col| {
                let FeatureKind::Categorical { categories } = &col.spec.kind else {
                    return Ok(None);
                };
                let mut counts = vec![0usize; categories.len()];
                for v in col.values.iter().flatten() {
                    counts[*v as usize] += 1;
                }
                // max_by_key keeps the last maximum; scan in reverse to keep the first.
                match counts.iter().enumerate().rev().max_by_key(|(_, &c)| c) {
                    Some((mode, &best)) if best > 0 => Ok(Some(mode as f64)),
                    _ => Err(Error::Data(format!(
                        "column `{}` is entirely missing",
                        col.spec.name
                    ))),
                }
            })
            .collect()
    }

    /// Replaces every missing categorical entry with the column's most
    /// frequent value (ties resolved to the smallest code). Missing numeric
    /// entries are rejected.
    pub fn impute_mode(&self) -> Result<Self> {
        let mut out = self.clone();
        for col in &out.columns {
            if !col.spec.kind.is_categorical() && col.values.iter().any(Option::is_none) {
                return Err(Error::Data(format!(
                    "numeric column `{}` has missing values",
                    col.spec.name
                )));
            }
        }
        let modes = self.category_modes()?;
        for (col, mode) in out.columns.iter_mut().zip(modes) {
            if let Some(mode) = mode {
                for v in &mut col.values {
                    v.get_or_insert(mode);
                }
            }
        }
        Ok(out)
    }

    /// Writes the dataset as CSV; missing entries become `?`.
    pub fn write_csv<W: Write>(
        &self,
        writer: W,
        label_column: &str,
        class_tokens: [&str; 2],
    ) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.columns.iter().map(|c| c.name()).collect();
        header.push(label_column);
        wtr.write_record(&header)?;
        for (i, &label) in self.labels.iter().enumerate() {
            let mut rec: Vec<String> = self
                .columns
                .iter()
                .map(|c| match c.values[i] {
                    Some(v) => c.spec.render_value(v),
                    None => "?".to_string(),
                })
                .collect();
            rec.push(class_tokens[label as usize].to_string());
            wtr.write_record(&rec)?;
        }
        wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Dense row-major feature matrix with no missing entries. Categorical
/// features hold their category code.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    n_rows: usize,
    specs: Vec<FeatureSpec>,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn from_dataset(dataset: &Dataset) -> Result<Self> {
        let n_rows = dataset.n_samples();
        let n_cols = dataset.n_features();
        let mut values = vec![0.0; n_rows * n_cols];
        for (j, col) in dataset.columns.iter().enumerate() {
            for (i, v) in col.values.iter().enumerate() {
                values[i * n_cols + j] = v.ok_or_else(|| {
                    Error::Data(format!(
                        "column `{}` row {} is missing; impute first",
                        col.name(),
                        i + 1
                    ))
                })?;
            }
        }
        Ok(FeatureMatrix {
            n_rows,
            specs: dataset.specs(),
            values,
        })
    }

    pub fn from_rows(specs: Vec<FeatureSpec>, rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = specs.len();
        let mut values = Vec::with_capacity(rows.len() * n_cols);
        for row in rows {
            if row.len() != n_cols {
                return Err(Error::FeatureCount {
                    expected: n_cols,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("feature matrix"));
            }
            values.extend_from_slice(row);
        }
        Ok(FeatureMatrix {
            n_rows: rows.len(),
            specs,
            values,
        })
    }

    /// Parses a headed CSV against `specs` by column name; extra columns are
    /// ignored. Missing categorical cells take the value from `fill`, when
    /// given; any other missing cell is an error.
    pub fn read_csv<R: Read>(
        reader: R,
        specs: &[FeatureSpec],
        fill: Option<&[Option<f64>]>,
    ) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let idx: Vec<usize> = specs
            .iter()
            .map(|s| {
                headers
                    .iter()
                    .position(|h| h == s.name)
                    .ok_or_else(|| Error::Data(format!("column `{}` absent from header", s.name)))
            })
            .collect::<Result<_>>()?;
        let mut values = Vec::new();
        let mut n_rows = 0;
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            for (j, (spec, &i)) in specs.iter().zip(&idx).enumerate() {
                let cell = record.get(i).unwrap_or("");
                let v = match spec.parse_cell(cell)? {
                    Some(v) => v,
                    None => fill
                        .and_then(|f| f.get(j).copied().flatten())
                        .ok_or_else(|| {
                            Error::Data(format!(
                                "row {}: column `{}` is missing",
                                row + 1,
                                spec.name
                            ))
                        })?,
                };
                values.push(v);
            }
            n_rows += 1;
        }
        Ok(FeatureMatrix {
            n_rows,
            specs: specs.to_vec(),
            values,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.specs.len()
    }

    pub fn specs(&self) -> &[FeatureSpec] {
        &self.specs
    }

    pub fn is_categorical(&self, feature: usize) -> bool {
        self.specs[feature].kind.is_categorical()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.specs.len();
        &self.values[i * d..(i + 1) * d]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.specs.len() + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.n_rows).map(move |i| self.row(i))
    }

    /// Copy holding the given rows, in that order.
    pub fn select(&self, rows: &[usize]) -> FeatureMatrix {
        let mut values = Vec::with_capacity(rows.len() * self.specs.len());
        for &i in rows {
            values.extend_from_slice(self.row(i));
        }
        FeatureMatrix {
            n_rows: rows.len(),
            specs: self.specs.clone(),
            values,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema(extra: &str) -> Schema {
        Schema::parse(&format!(
            "schema_version = 1\nname = t\nlabel = y\npositive = 1\n{extra}"
        ))
        .unwrap()
    }

    #[test]
    fn loads_simple_numeric_csv() {
        let s = schema("column.age = numeric\n");
        let d = Dataset::read_csv("age,y\n30,0\n40,1\n50,1\n".as_bytes(), &s).unwrap();
        assert_eq!(d.n_samples(), 3);
        assert_eq!(d.n_features(), 1);
        assert_eq!(
            d.columns[0].values,
            vec![Some(30.0), Some(40.0), Some(50.0)]
        );
        assert_eq!(d.labels, vec![0, 1, 1]);
    }

    #[test]
    fn marks_missing_categorical_cells() {
        let s = schema("negative = 0\ncolumn.ca = categorical\ncolumn.x = numeric\n");
        let d = Dataset::read_csv("x,ca,y\n1,0,0\n2,?,1\n3,,0\n4,2,1\n".as_bytes(), &s).unwrap();
        assert_eq!(d.columns[0].values, vec![Some(0.0), None, None, Some(1.0)]);
        assert_eq!(
            d.columns[0].spec.kind,
            FeatureKind::Categorical {
                categories: vec!["0".into(), "2".into()]
            }
        );
    }

    #[test]
    fn rejects_three_label_values() {
        let s = schema("column.a = numeric\n");
        let err = Dataset::read_csv("a,y\n1,0\n2,1\n3,2\n".as_bytes(), &s).unwrap_err();
        assert!(matches!(err, Error::Data(_)), "{err}");
    }

    #[test]
    fn load_errors() {
        let s = schema("column.a = numeric\n");
        assert!(Dataset::read_csv("a,y\nfoo,0\n2,1\n".as_bytes(), &s).is_err());
        assert!(Dataset::read_csv("a,z\n1,0\n2,1\n".as_bytes(), &s).is_err());
        assert!(Dataset::read_csv("a,y\n1,0\n".as_bytes(), &s).is_err());
        assert!(Dataset::read_csv("a,y\n1,1\n2,1\n".as_bytes(), &s).is_err());
        let with_neg = schema("negative = 0\ncolumn.a = numeric\n");
        assert!(matches!(
            Dataset::read_csv("a,y\n1,1\n2,1\n".as_bytes(), &with_neg),
            Err(Error::SingleClass)
        ));
        assert!(Dataset::read_csv("a,y\ninf,0\n2,1\n".as_bytes(), &s).is_err());
    }

    fn cat_dataset(values: Vec<Option<f64>>, n_cats: usize) -> Dataset {
        let n = values.len();
        Dataset {
            name: "t".into(),
            columns: vec![FeatureColumn {
                spec: FeatureSpec {
                    name: "c".into(),
                    kind: FeatureKind::Categorical {
                        categories: (0..n_cats).map(|i| format!("k{i}")).collect(),
                    },
                },
                values,
            }],
            labels: (0..n).map(|i| (i % 2) as u8).collect(),
        }
    }

    #[test]
    fn impute_most_frequent() {
        let d = cat_dataset(vec![Some(0.0), Some(0.0), Some(1.0), None], 2);
        let out = d.impute_mode().unwrap();
        assert_eq!(
            out.columns[0].values,
            vec![Some(0.0), Some(0.0), Some(1.0), Some(0.0)]
        );
    }

    #[test]
    fn impute_tie_takes_lowest_code() {
        let d = cat_dataset(vec![Some(1.0), Some(0.0), Some(1.0), None, Some(0.0)], 3);
        let out = d.impute_mode().unwrap();
        assert_eq!(out.columns[0].values[3], Some(0.0));
        assert_eq!(out.impute_mode().unwrap(), out);
    }

    #[test]
    fn impute_identity_without_missing() {
        let d = cat_dataset(vec![Some(1.0), Some(0.0)], 2);
        assert_eq!(d.impute_mode().unwrap(), d);
    }

    #[test]
    fn impute_errors() {
        let d = cat_dataset(vec![None, None], 2);
        assert!(d.impute_mode().is_err());
        let mut d = cat_dataset(vec![Some(1.0), None], 2);
        d.columns[0].spec.kind = FeatureKind::Numeric;
        assert!(d.impute_mode().is_err());
    }

    #[test]
    fn matrix_requires_imputation() {
        let d = cat_dataset(vec![Some(1.0), None], 2);
        assert!(FeatureMatrix::from_dataset(&d).is_err());
        let m = FeatureMatrix::from_dataset(&d.impute_mode().unwrap()).unwrap();
        assert_eq!(m.row(1), &[1.0]);
    }

    #[test]
    fn feature_csv_with_fill() {
        let specs = vec![
            FeatureSpec {
                name: "a".into(),
                kind: FeatureKind::Numeric,
            },
            FeatureSpec {
                name: "b".into(),
                kind: FeatureKind::Categorical {
                    categories: vec!["x".into(), "y".into()],
                },
            },
        ];
        let m = FeatureMatrix::read_csv(
            "b,a\ny,1.5\n?,2\n".as_bytes(),
            &specs,
            Some(&[None, Some(0.0)]),
        )
        .unwrap();
        assert_eq!(m.row(0), &[1.5, 1.0]);
        assert_eq!(m.row(1), &[2.0, 0.0]);
        assert!(FeatureMatrix::read_csv("b,a\nz,1\n".as_bytes(), &specs, None).is_err());
        assert!(FeatureMatrix::read_csv("b\nx\n".as_bytes(), &specs, None).is_err());
        let empty = FeatureMatrix::read_csv("a,b\n".as_bytes(), &specs, None).unwrap();
        assert_eq!(empty.n_rows(), 0);
    }
}
