use std::io::{Read, Write};

use serde::Serialize;

use super::{feature_names, FeatureError, FeatureVector, FEATURE_COUNT, TIME_COUNT, AMOUNT_COUNT};

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub address: String,
    pub features: FeatureVector,
    pub label: Option<u8>,
}

/// A feature matrix read back from CSV.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureMatrix {
    pub addresses: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Present only when the file has a `label` column.
    pub labels: Option<Vec<u8>>,
}

impl FeatureMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Arity(#[from] FeatureError),
    #[error("feature column {index} is `{found}`, expected `{expected}`")]
    ColumnName {
        index: usize,
        found: String,
        expected: String,
    },
    #[error("line {line}: {reason}")]
    Value { line: u64, reason: String },
}

/// Writes `address,<75 names>[,label]`. Floats use the shortest round-trip
/// representation, so equal inputs give byte-identical files.
pub fn write_feature_csv<W: Write>(
    sink: W,
    rows: &[FeatureRow],
    with_labels: bool,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec!["address".to_string()];
    header.extend(feature_names().iter().cloned());
    if with_labels {
        header.push("label".into());
    }
    w.write_record(&header)?;
    let mut fields: Vec<String> = Vec::with_capacity(header.len());
    for row in rows {
        fields.clear();
        fields.push(row.address.clone());
        fields.extend(row.features.values().iter().map(|v| v.to_string()));
        if with_labels {
            fields.push(row.label.map_or(String::new(), |l| l.to_string()));
        }
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_feature_csv<R: Read>(input: R) -> Result<FeatureMatrix, TableError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let headers = reader.headers()?.clone();
    let mut cols: Vec<&str> = headers.iter().collect();
    let has_label = cols.last() == Some(&"label");
    if has_label {
        cols.pop();
    }
    if cols.first() != Some(&"address") {
        return Err(TableError::ColumnName {
            index: 0,
            found: cols.first().unwrap_or(&"").to_string(),
            expected: "address".into(),
        });
    }
    let names = &cols[1..];
    if names.len() != FEATURE_COUNT {
        return Err(FeatureError::ArityMismatch {
            component: "feature matrix",
            expected: FEATURE_COUNT,
            got: names.len(),
        }
        .into());
    }
    for (i, (found, expected)) in names.iter().zip(feature_names()).enumerate() {
        if found != expected {
            return Err(TableError::ColumnName {
                index: i,
                found: found.to_string(),
                expected: expected.clone(),
            });
        }
    }

    let mut m = FeatureMatrix {
        labels: has_label.then(Vec::new),
        ..FeatureMatrix::default()
    };
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let expected_len = 1 + FEATURE_COUNT + usize::from(has_label);
        if rec.len() != expected_len {
            return Err(FeatureError::ArityMismatch {
                component: "feature row",
                expected: expected_len,
                got: rec.len(),
            }
            .into());
        }
        m.addresses.push(rec[0].to_string());
        let mut values = Vec::with_capacity(FEATURE_COUNT);
        for field in rec.iter().skip(1).take(FEATURE_COUNT) {
            let v: f64 = field.parse().map_err(|_| TableError::Value {
                line,
                reason: format!("`{field}` is not a number"),
            })?;
            values.push(v);
        }
        m.rows.push(values);
        if let Some(labels) = m.labels.as_mut() {
            let raw = &rec[1 + FEATURE_COUNT];
            let label = match raw.trim() {
                "0" => 0,
                "1" => 1,
                other => {
                    return Err(TableError::Value {
                        line,
                        reason: format!("label `{other}` is not 0 or 1"),
                    })
                }
            };
            labels.push(label);
        }
    }
    Ok(m)
}

#[derive(Debug, Serialize)]
pub struct ManifestEntry {
    pub index: usize,
    pub name: String,
    pub group: &'static str,
}

#[derive(Debug, Serialize)]
pub struct FeatureManifest {
    pub count: usize,
    pub features: Vec<ManifestEntry>,
}

/// The name list as a standalone JSON document for downstream consumers.
pub fn feature_manifest() -> FeatureManifest {
    FeatureManifest {
        count: FEATURE_COUNT,
        features: feature_names()
            .iter()
            .enumerate()
            .map(|(index, name)| ManifestEntry {
                index,
                name: name.clone(),
                group: if index < TIME_COUNT {
                    "time"
                } else if index < TIME_COUNT + AMOUNT_COUNT {
                    "amount"
                } else {
                    "network"
                },
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(addr: &str, seed: f64, label: Option<u8>) -> FeatureRow {
        let values: Vec<f64> = (0..FEATURE_COUNT).map(|i| seed * i as f64 - 1.0).collect();
        FeatureRow {
            address: addr.into(),
            features: FeatureVector::from_slice(&values).unwrap(),
            label,
        }
    }

    #[test]
    fn write_then_read_preserves_values() {
        let rows = vec![row("a", 0.1, Some(1)), row("b", 1.0 / 3.0, Some(0))];
        let mut buf = Vec::new();
        write_feature_csv(&mut buf, &rows, true).unwrap();
        let m = read_feature_csv(buf.as_slice()).unwrap();
        assert_eq!(m.addresses, ["a", "b"]);
        assert_eq!(m.rows[1], rows[1].features.values());
        assert_eq!(m.labels, Some(vec![1, 0]));
    }

    #[test]
    fn header_only_when_empty() {
        let mut buf = Vec::new();
        write_feature_csv(&mut buf, &[], false).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("address,first_gas_time,"));
        assert!(read_feature_csv(text.as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn wrong_width_is_arity_mismatch() {
        let header = format!("address,{}\n", feature_names()[..74].join(","));
        let err = read_feature_csv(header.as_bytes()).unwrap_err();
        assert!(matches!(
            err,
            TableError::Arity(FeatureError::ArityMismatch { got: 74, .. })
        ));
    }

    #[test]
    fn swapped_columns_are_detected() {
        let mut names: Vec<String> = feature_names().to_vec();
        names.swap(7, 8);
        let header = format!("address,{}\n", names.join(","));
        let err = read_feature_csv(header.as_bytes()).unwrap_err();
        assert!(matches!(err, TableError::ColumnName { index: 7, .. }));
    }

    #[test]
    fn manifest_groups() {
        let m = feature_manifest();
        assert_eq!(m.count, 75);
        let count = |g| m.features.iter().filter(|e| e.group == g).count();
        assert_eq!((count("time"), count("amount"), count("network")), (7, 60, 8));
    }
}
