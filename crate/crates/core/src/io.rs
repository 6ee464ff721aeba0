//! Delimited matrix input and per-test result output.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::GroupedDataset;
use crate::error::{Result, TdError};
use crate::tdp::{DecisionSet, FinalScore, Label};

/// Field separator of a matrix file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Delimiter {
    Tab,
    Comma,
    /// Any run of spaces or tabs.
    Whitespace,
    Char(char),
}

impl Delimiter {
    fn split<'a>(&self, line: &'a str) -> Vec<&'a str> {
        match self {
            Delimiter::Tab => line.split('\t').collect(),
            Delimiter::Comma => line.split(',').collect(),
            Delimiter::Whitespace => line.split_whitespace().collect(),
            Delimiter::Char(c) => line.split(*c).collect(),
        }
    }

    fn as_str(&self) -> String {
        match self {
            Delimiter::Tab | Delimiter::Whitespace => "\t".into(),
            Delimiter::Comma => ",".into(),
            Delimiter::Char(c) => c.to_string(),
        }
    }
}

impl std::str::FromStr for Delimiter {
    type Err = TdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tab" | "\t" | "\\t" => Ok(Delimiter::Tab),
            "comma" | "," => Ok(Delimiter::Comma),
            "whitespace" | "space" | " " => Ok(Delimiter::Whitespace),
            other => {
                let mut chars = other.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) => Ok(Delimiter::Char(c)),
                    _ => Err(TdError::InvalidParameter(format!("unknown delimiter {other:?}"))),
                }
            }
        }
    }
}

/// A set of data columns, given as 1-based indices or ranges (`2-4`, `1,3`,
/// `1-3,7`) or as header names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSpec(String);

impl ColumnSpec {
    pub fn new(spec: impl Into<String>) -> Self {
        Self(spec.into())
    }

    /// 0-based data-column indices in the order given.
    pub fn resolve(&self, header: Option<&[String]>, width: usize) -> Result<Vec<usize>> {
        let bad = |msg: String| TdError::InvalidGroups(msg);
        let mut out = Vec::new();
        for part in self.0.split(',').map(str::trim) {
            if part.is_empty() {
                return Err(bad(format!("empty entry in column list {:?}", self.0)));
            }
            if let Some(idx) = header.and_then(|h| h.iter().position(|name| name == part)) {
                out.push(idx);
                continue;
            }
            let (lo, hi) = match part.split_once('-') {
                Some((a, b)) => (a.trim().parse::<usize>(), b.trim().parse::<usize>()),
                None => (part.parse::<usize>(), part.parse::<usize>()),
            };
            let (lo, hi) = match (lo, hi) {
                (Ok(lo), Ok(hi)) => (lo, hi),
                _ => return Err(bad(format!("unknown column {part:?}"))),
            };
            if lo == 0 || hi < lo || hi > width {
                return Err(bad(format!("column range {part:?} outside 1..={width}")));
            }
            out.extend(lo - 1..hi);
        }
        Ok(out)
    }
}

/// How to read a matrix file.
#[derive(Debug, Clone)]
pub struct MatrixFormat {
    pub delimiter: Delimiter,
    /// First line names the columns.
    pub header: bool,
    /// First column holds test ids rather than data.
    pub id_column: bool,
    pub cases: ColumnSpec,
    pub controls: ColumnSpec,
}

/// A parsed dataset plus the rows that were skipped.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub dataset: GroupedDataset,
    /// `(line number, reason)` of each dropped row.
    pub dropped: Vec<(usize, String)>,
}

fn is_missing(field: &str) -> bool {
    matches!(field, "" | "NA" | "na" | "NaN" | "nan" | "N/A" | "null" | "NULL")
}

/// Reads a test-by-sample matrix.
///
/// Rows with a missing, non-numeric or non-finite value in a selected column
/// are dropped and counted; a row with the wrong number of fields is an
/// error.
pub fn ingest_matrix(path: &Path, format: &MatrixFormat) -> Result<Ingested> {
    let text = std::fs::read_to_string(path).map_err(|e| TdError::io(path, e))?;
    parse_matrix(&text, format)
}

pub fn parse_matrix(text: &str, format: &MatrixFormat) -> Result<Ingested> {
    let skip = usize::from(format.id_column);
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty());

    let mut header: Option<Vec<String>> = None;
    let mut first_data = None;
    let mut width = None;
    if format.header {
        let (line_no, line) = lines.next().ok_or(TdError::EmptyDataset)?;
        let fields = format.delimiter.split(line);
        if fields.len() <= skip {
            return Err(TdError::Parse {
                line: line_no,
                message: "header has no data columns".into(),
            });
        }
        width = Some(fields.len());
        header = Some(fields[skip..].iter().map(|s| s.trim().to_string()).collect());
    } else {
        first_data = lines.next();
        if let Some((_, line)) = first_data {
            width = Some(format.delimiter.split(line).len());
        }
    }
    let width = width.ok_or(TdError::EmptyDataset)?;
    let data_width = width.saturating_sub(skip);

    let cases = format.cases.resolve(header.as_deref(), data_width)?;
    let controls = format.controls.resolve(header.as_deref(), data_width)?;
    if let Some(c) = cases.iter().find(|c| controls.contains(c)) {
        return Err(TdError::InvalidGroups(format!("column {} is both a case and a control", c + 1)));
    }
    // keep the selected columns in file order
    let mut selected: Vec<usize> = cases.iter().chain(&controls).copied().collect();
    selected.sort_unstable();
    if selected.windows(2).any(|w| w[0] == w[1]) {
        return Err(TdError::InvalidGroups("a column is listed twice".into()));
    }
    let position = |c: usize| selected.binary_search(&c).expect("selected");
    let case_columns: Vec<usize> = cases.iter().map(|&c| position(c)).collect();
    let control_columns: Vec<usize> = controls.iter().map(|&c| position(c)).collect();
    let column_names: Vec<String> = match &header {
        Some(h) => selected.iter().map(|&c| h[c].clone()).collect(),
        None => selected.iter().map(|&c| format!("column{}", c + 1)).collect(),
    };

    let mut ids = Vec::new();
    let mut samples = Vec::new();
    let mut dropped = Vec::new();
    let mut row_buf = Vec::with_capacity(selected.len());
    for (line_no, line) in first_data.into_iter().chain(lines) {
        let fields = format.delimiter.split(line);
        if fields.len() != width {
            return Err(TdError::Parse {
                line: line_no,
                message: format!("expected {width} fields, found {}", fields.len()),
            });
        }
        row_buf.clear();
        let mut reason = None;
        for &c in &selected {
            let field = fields[skip + c].trim();
            if is_missing(field) {
                reason = Some(format!("missing value in column {}", c + 1));
                break;
            }
            match field.parse::<f64>() {
                Ok(v) if v.is_finite() => row_buf.push(v),
                Ok(_) => {
                    reason = Some(format!("non-finite value {field:?}"));
                    break;
                }
                Err(_) => {
                    reason = Some(format!("non-numeric value {field:?}"));
                    break;
                }
            }
        }
        if let Some(r) = reason {
            dropped.push((line_no, r));
            continue;
        }
        ids.push(if format.id_column {
            fields[0].trim().to_string()
        } else {
            format!("test{}", ids.len() + 1)
        });
        samples.extend_from_slice(&row_buf);
    }
    if ids.is_empty() {
        return Err(TdError::EmptyDataset);
    }
    let dataset = GroupedDataset::new(ids, column_names, samples, case_columns, control_columns)?;
    Ok(Ingested { dataset, dropped })
}

/// Renders `dataset` with a header and an id column; values use the shortest
/// representation that parses back to the same `f64`.
pub fn format_matrix(dataset: &GroupedDataset, delimiter: Delimiter) -> String {
    let sep = delimiter.as_str();
    let mut out = String::from("id");
    for name in dataset.column_names() {
        out.push_str(&sep);
        out.push_str(name);
    }
    out.push('\n');
    for j in 0..dataset.m() {
        out.push_str(&dataset.ids()[j]);
        for v in dataset.row(j) {
            let _ = write!(out, "{sep}{v}");
        }
        out.push('\n');
    }
    out
}

pub fn write_matrix(path: &Path, dataset: &GroupedDataset, delimiter: Delimiter) -> Result<()> {
    std::fs::write(path, format_matrix(dataset, delimiter)).map_err(|e| TdError::io(path, e))
}

/// Marker written in place of the final score of an unused test.
pub const BOTTOM_MARKER: &str = "BOTTOM";

pub const RESULTS_HEADER: &str = "id\ttarget_score\tlabel\tfinal_rank\tfinal_score\trejected";

/// One line per test, in input order.
pub fn format_results(dataset: &GroupedDataset, decisions: &DecisionSet) -> String {
    let mut rejected = vec![false; dataset.m()];
    for &id in &decisions.rejected_ids {
        rejected[id] = true;
    }
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for t in &decisions.per_test {
        let target = t.target_score.map_or_else(|| "NA".to_string(), |v| v.to_string());
        let final_score = match t.final_score {
            FinalScore::Score(v) => v.to_string(),
            FinalScore::Bottom => BOTTOM_MARKER.to_string(),
        };
        let _ = writeln!(
            out,
            "{}\t{target}\t{}\t{}\t{final_score}\t{}",
            dataset.ids()[t.id],
            t.label.as_char(),
            t.global_rank,
            u8::from(rejected[t.id])
        );
    }
    out
}

pub fn write_results(path: &Path, dataset: &GroupedDataset, decisions: &DecisionSet) -> Result<()> {
    std::fs::write(path, format_results(dataset, decisions)).map_err(|e| TdError::io(path, e))
}

/// Aggregate view of a run, written as JSON next to the per-test table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub variant: String,
    pub score: String,
    pub alpha: f64,
    pub r: f64,
    pub t: usize,
    pub permutation_mode: String,
    pub tests: usize,
    pub k: usize,
    pub rejections: usize,
    pub targets: usize,
    pub decoys: usize,
    pub unused: usize,
    pub estimated_fdr: f64,
    pub no_discoveries: bool,
    pub degenerate_tests: Vec<String>,
    pub dropped_rows: usize,
    pub adaptive: Option<crate::tdp::AdaptiveInfo>,
}

impl RunSummary {
    pub fn new(
        dataset: &GroupedDataset,
        decisions: &DecisionSet,
        variant: &str,
        score: &str,
        dropped_rows: usize,
    ) -> Self {
        let count = |l: Label| decisions.per_test.iter().filter(|t| t.label == l).count();
        Self {
            variant: variant.to_string(),
            score: score.to_string(),
            alpha: decisions.alpha,
            r: decisions.r,
            t: decisions.t,
            permutation_mode: match decisions.mode {
                crate::permute::PermutationMode::Exhaustive => "exhaustive".into(),
                crate::permute::PermutationMode::WithReplacement => "with-replacement".into(),
            },
            tests: decisions.per_test.len(),
            k: decisions.k,
            rejections: decisions.rejected_ids.len(),
            targets: count(Label::T),
            decoys: count(Label::D),
            unused: count(Label::U),
            estimated_fdr: decisions.estimated_fdr,
            no_discoveries: decisions.no_discoveries,
            degenerate_tests: decisions
                .degenerate_ids
                .iter()
                .map(|&id| dataset.ids()[id].clone())
                .collect(),
            dropped_rows,
            adaptive: decisions.adaptive.clone(),
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| TdError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| TdError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fmt(cases: &str, controls: &str, header: bool, id_column: bool) -> MatrixFormat {
        MatrixFormat {
            delimiter: Delimiter::Tab,
            header,
            id_column,
            cases: ColumnSpec::new(cases),
            controls: ColumnSpec::new(controls),
        }
    }

    #[test]
    fn column_specs() {
        let h: Vec<String> = ["a", "b", "c", "d", "e"].iter().map(|s| s.to_string()).collect();
        assert_eq!(ColumnSpec::new("2-4").resolve(None, 5).unwrap(), vec![1, 2, 3]);
        assert_eq!(ColumnSpec::new("1,3").resolve(None, 5).unwrap(), vec![0, 2]);
        assert_eq!(ColumnSpec::new("1-2,5").resolve(None, 5).unwrap(), vec![0, 1, 4]);
        assert_eq!(ColumnSpec::new("b,e").resolve(Some(&h), 5).unwrap(), vec![1, 4]);
        assert!(ColumnSpec::new("0").resolve(None, 5).is_err());
        assert!(ColumnSpec::new("4-6").resolve(None, 5).is_err());
        assert!(ColumnSpec::new("x").resolve(Some(&h), 5).is_err());
        assert!(ColumnSpec::new("1,,2").resolve(None, 5).is_err());
    }

    #[test]
    fn parses_with_header_and_ids() {
        let text = "gene\ta\tb\tc\td\ng1\t1\t2\t3\t4\ng2\t5\t6\t7\t9\n";
        let got = parse_matrix(text, &fmt("a,b", "c,d", true, true)).unwrap();
        let d = got.dataset;
        assert_eq!(d.ids(), ["g1", "g2"]);
        assert_eq!(d.row(1), [5.0, 6.0, 7.0, 9.0]);
        assert_eq!(d.test(0).cases(), [1.0, 2.0]);
        assert!(got.dropped.is_empty());
    }

    #[test]
    fn drops_rows_with_missing_values() {
        let text = "1\t2\t3\t4\nNA\t2\t3\t4\n1\tx\t3\t4\n1\tinf\t3\t4\n5\t6\t7\t8\n";
        let got = parse_matrix(text, &fmt("1-2", "3-4", false, false)).unwrap();
        assert_eq!(got.dataset.m(), 2);
        assert_eq!(got.dropped.iter().map(|d| d.0).collect::<Vec<_>>(), vec![2, 3, 4]);
        assert_eq!(got.dataset.ids(), ["test1", "test2"]);
    }

    #[test]
    fn wrong_field_count_reports_line() {
        let text = "1\t2\t3\t4\n1\t2\t3\n";
        match parse_matrix(text, &fmt("1-2", "3-4", false, false)) {
            Err(TdError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn overlapping_groups_are_rejected() {
        let text = "1\t2\t3\t4\n";
        assert!(matches!(
            parse_matrix(text, &fmt("1-3", "3-4", false, false)),
            Err(TdError::InvalidGroups(_))
        ));
    }

    #[test]
    fn header_only_is_empty() {
        assert!(matches!(
            parse_matrix("a\tb\tc\td\n", &fmt("1-2", "3-4", true, false)),
            Err(TdError::EmptyDataset)
        ));
        assert!(matches!(parse_matrix("", &fmt("1-2", "3-4", false, false)), Err(TdError::EmptyDataset)));
    }

    #[test]
    fn unselected_columns_are_ignored_and_order_kept() {
        let text = "9\t1\t2\t9\t3\t4\n";
        let got = parse_matrix(text, &fmt("5,6", "2,3", false, false)).unwrap();
        let d = got.dataset;
        assert_eq!(d.row(0), [1.0, 2.0, 3.0, 4.0]);
        assert_eq!(d.test(0).cases(), [3.0, 4.0]);
        assert_eq!(d.test(0).controls(), [1.0, 2.0]);
    }

    #[test]
    fn comma_and_whitespace() {
        let got = parse_matrix("1,2,3,4\n", &MatrixFormat {
            delimiter: Delimiter::Comma,
            ..fmt("1-2", "3-4", false, false)
        })
        .unwrap();
        assert_eq!(got.dataset.row(0), [1.0, 2.0, 3.0, 4.0]);
        let got = parse_matrix("1  2 \t3 4\n", &MatrixFormat {
            delimiter: Delimiter::Whitespace,
            ..fmt("1-2", "3-4", false, false)
        })
        .unwrap();
        assert_eq!(got.dataset.row(0), [1.0, 2.0, 3.0, 4.0]);
        assert_eq!("tab".parse::<Delimiter>().unwrap(), Delimiter::Tab);
        assert_eq!(";".parse::<Delimiter>().unwrap(), Delimiter::Char(';'));
        assert!("ab".parse::<Delimiter>().is_err());
    }

    #[test]
    fn write_then_read_round_trips() {
        let rows = vec![vec![0.1, 1.0 / 3.0, -2.5e-12, 7.0], vec![1e300, -0.0, 3.25, 2.0]];
        let d = GroupedDataset::from_rows(rows, 2).unwrap();
        let text = format_matrix(&d, Delimiter::Tab);
        let back = parse_matrix(&text, &fmt("case1,case2", "control1,control2", true, true)).unwrap();
        assert_eq!(back.dataset, d);
    }
}
