//! Series container and CSV ingestion.
//!
//! A [`TimeSeries`] is an immutable, validated vector of finite observations in
//! chronological order plus a sampling frequency. All transformations return
//! new values; nothing mutates in place.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sampling frequency of a series. Drives the detrending penalty rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frequency {
    Annual,
    Quarterly,
    Monthly,
    Unspecified,
}

impl Frequency {
    /// Observations per year; `None` when the frequency is unspecified.
    pub fn observations_per_year(&self) -> Option<f64> {
        match self {
            Frequency::Annual => Some(1.0),
            Frequency::Quarterly => Some(4.0),
            Frequency::Monthly => Some(12.0),
            Frequency::Unspecified => None,
        }
    }
}

/// Which CSV column holds the observations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSelector {
    /// Zero-based column index.
    Index(usize),
    /// Column name, resolved against a header row (which must then exist).
    Name(String),
}

impl std::fmt::Display for ColumnSelector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ColumnSelector::Index(i) => write!(f, "column {i}"),
            ColumnSelector::Name(n) => write!(f, "column '{n}'"),
        }
    }
}

/// Univariate time series: finite values in chronological order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    values: Vec<f64>,
    frequency: Frequency,
    label: String,
}

impl TimeSeries {
    /// Builds a series, rejecting empty input and non-finite values.
    pub fn new(values: Vec<f64>, frequency: Frequency, label: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Invalid("series must be non-empty".to_string()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!(
                "non-finite value {} at index {i}",
                values[i]
            )));
        }
        Ok(TimeSeries {
            values,
            frequency,
            label: label.into(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn frequency(&self) -> Frequency {
        self.frequency
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Sample variance with denominator n.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.values.len() as f64
    }

    /// Same series with the sample mean subtracted.
    pub fn demean(&self) -> TimeSeries {
        let m = self.mean();
        TimeSeries {
            values: self.values.iter().map(|v| v - m).collect(),
            frequency: self.frequency,
            label: self.label.clone(),
        }
    }

    /// Time-reversed copy.
    pub fn reversed(&self) -> TimeSeries {
        let mut values = self.values.clone();
        values.reverse();
        TimeSeries {
            values,
            frequency: self.frequency,
            label: self.label.clone(),
        }
    }

    /// Replaces the values, keeping frequency and label. Values are validated.
    pub fn with_values(&self, values: Vec<f64>) -> Result<TimeSeries> {
        TimeSeries::new(values, self.frequency, self.label.clone())
    }

    /// Renders a single-column CSV (`value` header). Values are printed with
    /// the shortest representation that parses back to the identical f64, so a
    /// write/load cycle is bit-exact.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 20 + 8);
        out.push_str("value\n");
        for v in &self.values {
            let _ = writeln!(out, "{v}");
        }
        out
    }
}

/// Loads a univariate series from a CSV file.
///
/// The file is UTF-8, comma-separated, one observation per row, chronological.
/// A single header row is detected when the first row's value column does not
/// parse as a number; a [`ColumnSelector::Name`] requires that header. Values
/// may use decimal or scientific notation. Fully empty rows are skipped.
pub fn load_csv(path: &Path, column: &ColumnSelector, frequency: Frequency) -> Result<TimeSeries> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let label = match column {
        ColumnSelector::Name(n) => n.clone(),
        ColumnSelector::Index(_) => path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "value".to_string()),
    };
    let values = parse_csv_text(&text, column)?;
    TimeSeries::new(values, frequency, label)
}

fn parse_field(field: &str) -> Option<f64> {
    let trimmed = field.trim();
    if trimmed.is_empty() {
        return None;
    }
    match f64::from_str(trimmed) {
        Ok(v) if v.is_finite() => Some(v),
        _ => None,
    }
}

fn parse_csv_text(text: &str, column: &ColumnSelector) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());

    // (1-based physical line, record) with fully empty rows dropped.
    let mut rows: Vec<(usize, csv::StringRecord)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Csv {
            row: e
                .position()
                .map(|p| p.line() as usize)
                .unwrap_or(rows.len() + 1),
            message: e.to_string(),
        })?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(rows.len() + 1);
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        rows.push((line, record));
    }
    if rows.is_empty() {
        return Err(Error::Invalid("csv file holds no observations".to_string()));
    }

    // Resolve the value column and decide whether row 1 is a header.
    let (col_index, first_data_row) = match column {
        ColumnSelector::Name(name) => {
            let (line, header) = &rows[0];
            match header.iter().position(|f| f.trim() == name) {
                Some(i) => (i, 1),
                None => {
                    return Err(Error::Csv {
                        row: *line,
                        message: format!("column '{name}' not found in header row"),
                    })
                }
            }
        }
        ColumnSelector::Index(i) => {
            let (line, first) = &rows[0];
            match first.get(*i) {
                None => {
                    return Err(Error::Csv {
                        row: *line,
                        message: format!("row has no column {i}"),
                    })
                }
                Some(field) => {
                    if parse_field(field).is_some() {
                        (*i, 0)
                    } else {
                        (*i, 1) // header row
                    }
                }
            }
        }
    };

    let data_rows = &rows[first_data_row..];
    if data_rows.is_empty() {
        return Err(Error::Invalid(
            "csv file holds a header but no observations".to_string(),
        ));
    }
    let mut values = Vec::with_capacity(data_rows.len());
    for (line, record) in data_rows {
        let field = record.get(col_index).ok_or_else(|| Error::Csv {
            row: *line,
            message: format!("row has no column {col_index}"),
        })?;
        let v = parse_field(field).ok_or_else(|| Error::Csv {
            row: *line,
            message: format!("value '{}' in column {col_index} is not a finite number", field.trim()),
        })?;
        values.push(v);
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write;

    fn temp_csv(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn loads_headerless_single_column() {
        let f = temp_csv("1.5\n-2.25\n3e2\n");
        let s = load_csv(f.path(), &ColumnSelector::Index(0), Frequency::Quarterly).unwrap();
        assert_eq!(s.values(), &[1.5, -2.25, 300.0]);
        assert_eq!(s.frequency(), Frequency::Quarterly);
    }

    #[test]
    fn detects_header_for_index_selector() {
        let f = temp_csv("value\n1.0\n2.0\n");
        let s = load_csv(f.path(), &ColumnSelector::Index(0), Frequency::Unspecified).unwrap();
        assert_eq!(s.values(), &[1.0, 2.0]);
    }

    #[test]
    fn resolves_named_column() {
        let f = temp_csv("date,level\n2001Q1,4.5\n2001Q2,5.5\n");
        let s = load_csv(
            f.path(),
            &ColumnSelector::Name("level".to_string()),
            Frequency::Quarterly,
        )
        .unwrap();
        assert_eq!(s.values(), &[4.5, 5.5]);
        assert_eq!(s.label(), "level");
    }

    #[test]
    fn named_column_missing_is_an_error_naming_the_header_row() {
        let f = temp_csv("date,level\n2001Q1,4.5\n");
        let err = load_csv(
            f.path(),
            &ColumnSelector::Name("price".to_string()),
            Frequency::Quarterly,
        )
        .unwrap_err();
        match err {
            Error::Csv { row, message } => {
                assert_eq!(row, 1);
                assert!(message.contains("price"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn bad_value_error_names_physical_row() {
        // "abc" sits on physical line 7 (line 1 is the header).
        let f = temp_csv("value\n1\n2\n3\n4\n5\nabc\n7\n");
        let err = load_csv(f.path(), &ColumnSelector::Index(0), Frequency::Unspecified).unwrap_err();
        match err {
            Error::Csv { row, message } => {
                assert_eq!(row, 7);
                assert!(message.contains("abc"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn non_finite_values_are_rejected() {
        let f = temp_csv("1.0\ninf\n");
        assert!(load_csv(f.path(), &ColumnSelector::Index(0), Frequency::Unspecified).is_err());
        assert!(TimeSeries::new(vec![1.0, f64::NAN], Frequency::Unspecified, "x").is_err());
        assert!(TimeSeries::new(vec![], Frequency::Unspecified, "x").is_err());
    }

    #[test]
    fn demean_centers_within_1e_12_of_scale() {
        let s = TimeSeries::new(vec![10.0, 12.5, 9.0, 11.25, 14.0], Frequency::Annual, "x").unwrap();
        let d = s.demean();
        let scale = s.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(d.mean().abs() <= 1e-12 * scale);
        assert_eq!(d.len(), s.len());
    }

    #[test]
    fn reversal_is_an_involution() {
        let s = TimeSeries::new(vec![1.0, 2.0, 3.0, 4.0], Frequency::Unspecified, "x").unwrap();
        assert_eq!(s.reversed().reversed(), s);
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_bit_exact(values in proptest::collection::vec(-1.0e12f64..1.0e12, 1..60)) {
            let s = TimeSeries::new(values.clone(), Frequency::Unspecified, "value").unwrap();
            let text = s.to_csv_string();
            let parsed = parse_csv_text(&text, &ColumnSelector::Index(0)).unwrap();
            prop_assert_eq!(parsed, values);
        }

        #[test]
        fn seventeen_digit_rendering_round_trips(values in proptest::collection::vec(-1.0e12f64..1.0e12, 1..40)) {
            // Fixed 17-significant-digit rendering also reproduces the bits.
            for v in &values {
                let printed = format!("{v:.16e}");
                let back = f64::from_str(&printed).unwrap();
                prop_assert_eq!(back.to_bits(), v.to_bits());
            }
        }

        #[test]
        fn demean_is_shift_equivariant(
            values in proptest::collection::vec(-1.0e6f64..1.0e6, 4..50),
            shift in -1.0e6f64..1.0e6,
        ) {
            let a = TimeSeries::new(values.clone(), Frequency::Unspecified, "x").unwrap();
            let shifted: Vec<f64> = values.iter().map(|v| v + shift).collect();
            let b = TimeSeries::new(shifted, Frequency::Unspecified, "x").unwrap();
            let da = a.demean();
            let db = b.demean();
            let scale = 1.0 + shift.abs() + values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (x, y) in da.values().iter().zip(db.values()) {
                prop_assert!((x - y).abs() <= 1e-9 * scale);
            }
        }
    }
}
