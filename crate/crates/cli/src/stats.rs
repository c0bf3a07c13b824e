//! `assess sus` and `assess ttest` over CSV files.

use std::path::Path;

use serde::Serialize;

use assess_core::analytics::{sus_mean, sus_score, t_test_two_sample, SusResponse, TTestResult, TTestVariant};

use crate::error::{read_file, CliError};

/// Rows of a CSV file with a leading header row dropped. A first row counts
/// as a header when none of its fields is a number.
fn rows(path: &Path) -> Result<(Option<Vec<String>>, Vec<(usize, Vec<String>)>), CliError> {
    let text = read_file(path)?;
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::domain(format!("{}: {e}", path.display())))?;
        let fields: Vec<String> = record.iter().map(str::to_owned).collect();
        if fields.iter().all(|f| f.is_empty()) {
            continue;
        }
        out.push((i + 1, fields));
    }
    let header = match out.first() {
        Some((_, first)) if first.iter().all(|f| f.parse::<f64>().is_err()) => Some(out.remove(0).1),
        _ => None,
    };
    Ok((header, out))
}

/// One number per row: the `score` column when the header names one, the last column otherwise.
pub fn read_scores(path: &Path) -> Result<Vec<f64>, CliError> {
    let (header, rows) = rows(path)?;
    let column = header.and_then(|h| h.iter().position(|f| f.eq_ignore_ascii_case("score")));
    let mut errors = Vec::new();
    let mut scores = Vec::new();
    for (line, fields) in rows {
        let cell = match column {
            Some(c) => fields.get(c).map(String::as_str).unwrap_or(""),
            None => fields.last().map(String::as_str).unwrap_or(""),
        };
        match cell.parse::<f64>() {
            Ok(x) if x.is_finite() => scores.push(x),
            _ => errors.push(format!("{}:{line}: `{cell}` is not a finite number", path.display())),
        }
    }
    if errors.is_empty() {
        Ok(scores)
    } else {
        Err(CliError::Domain(errors))
    }
}

/// Ten answers per row, each 1..=5.
pub fn read_sus(path: &Path) -> Result<Vec<SusResponse>, CliError> {
    let (_, rows) = rows(path)?;
    let mut errors = Vec::new();
    let mut responses = Vec::new();
    for (line, fields) in rows {
        let values: Result<Vec<i64>, _> = fields.iter().map(|f| f.parse::<i64>()).collect();
        let parsed = values
            .map_err(|e| e.to_string())
            .and_then(|v| SusResponse::new(&v).map_err(|e| e.to_string()));
        match parsed {
            Ok(r) => responses.push(r),
            Err(e) => errors.push(format!("{}:{line}: {e}", path.display())),
        }
    }
    if errors.is_empty() {
        Ok(responses)
    } else {
        Err(CliError::Domain(errors))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SusReport {
    pub respondents: usize,
    pub mean: f64,
    pub scores: Vec<f64>,
}

pub fn sus(path: &Path) -> Result<SusReport, CliError> {
    let responses = read_sus(path)?;
    let mean = sus_mean(&responses).map_err(|e| CliError::domain(format!("{}: {e}", path.display())))?;
    Ok(SusReport { respondents: responses.len(), mean, scores: responses.iter().map(sus_score).collect() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleSummary {
    pub n: usize,
    pub mean: f64,
}

impl SampleSummary {
    fn of(xs: &[f64]) -> Self {
        SampleSummary { n: xs.len(), mean: xs.iter().sum::<f64>() / xs.len() as f64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TTestReport {
    pub a: SampleSummary,
    pub b: SampleSummary,
    #[serde(flatten)]
    pub result: TTestResult,
}

pub fn ttest(a: &Path, b: &Path, variant: TTestVariant) -> Result<TTestReport, CliError> {
    let xs = read_scores(a)?;
    let ys = read_scores(b)?;
    let result = t_test_two_sample(&xs, &ys, variant).map_err(|e| CliError::domain(e.to_string()))?;
    Ok(TTestReport { a: SampleSummary::of(&xs), b: SampleSummary::of(&ys), result })
}
