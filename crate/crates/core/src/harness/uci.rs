use crate::dsp::Signal;
use crate::error::{Error, Result};
use crate::simgen::LabeledDataset;
use std::path::Path;

/// Samples per segment in the pre-processed epileptic-seizure file.
pub const UCI_SEGMENT_LEN: usize = 178;
/// Sampling rate of the underlying recordings.
pub const UCI_FS: f64 = 173.61;
pub const UCI_ROWS: usize = 11_500;

/// Class names indexed by file label minus one: 1 seizure, 2 tumour area,
/// 3 healthy area of the same patients, 4 eyes closed, 5 eyes open.
pub const UCI_CLASSES: [&str; 5] = ["S", "F", "N", "O", "Z"];

fn is_numeric(cell: &str) -> bool {
    cell.trim().parse::<f64>().is_ok()
}

/// Parses the CSV text. Rows carry 178 samples then the label, optionally preceded by
/// an id column; a non-numeric first row is taken as the header.
pub fn parse_uci_csv(text: &str) -> Result<LabeledDataset> {
    let mut signals = Vec::new();
    let mut labels = Vec::new();
    let mut id_column: Option<bool> = None;
    let mut seen_row = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        let has_id = match (id_column, cells.len()) {
            (Some(has_id), n) if n == UCI_SEGMENT_LEN + 1 + usize::from(has_id) => has_id,
            (Some(has_id), n) => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected {} columns, found {n}", UCI_SEGMENT_LEN + 1 + usize::from(has_id)),
                })
            }
            (None, n) if n == UCI_SEGMENT_LEN + 1 => false,
            (None, n) if n == UCI_SEGMENT_LEN + 2 => true,
            (None, n) => {
                return Err(Error::Schema(format!(
                    "expected {} or {} columns, found {n}",
                    UCI_SEGMENT_LEN + 1,
                    UCI_SEGMENT_LEN + 2
                )))
            }
        };
        id_column = Some(has_id);
        let body = if has_id { &cells[1..] } else { &cells[..] };
        let first = !seen_row;
        seen_row = true;
        if first && !body.iter().all(|c| is_numeric(c)) {
            // header row
            continue;
        }
        let parse_err = |message: String| Error::Parse { line: line_no, message };
        let samples = body[..UCI_SEGMENT_LEN]
            .iter()
            .map(|c| {
                let v: f64 = c.trim().parse().map_err(|_| parse_err(format!("'{}' is not a number", c.trim())))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(parse_err(format!("non-finite sample '{}'", c.trim())))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        let label_cell = body[UCI_SEGMENT_LEN].trim();
        let label: usize = label_cell
            .parse::<f64>()
            .ok()
            .filter(|v| v.fract() == 0.0 && (1.0..=5.0).contains(v))
            .map(|v| v as usize)
            .ok_or_else(|| parse_err(format!("label '{label_cell}' is not one of 1..5")))?;
        signals.push(Signal::new(samples, UCI_FS).map_err(|e| parse_err(e.to_string()))?);
        labels.push(label - 1);
    }
    if signals.is_empty() {
        return Err(Error::Schema("no data rows".into()));
    }
    LabeledDataset::new(signals, labels, UCI_CLASSES.iter().map(|s| s.to_string()).collect())
}

/// Reads the pre-processed file; `expect_full` additionally demands 11,500 rows.
pub fn load_uci_csv(path: &Path, expect_full: bool) -> Result<LabeledDataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ds = parse_uci_csv(&text)?;
    if expect_full && ds.len() != UCI_ROWS {
        return Err(Error::Schema(format!("expected {UCI_ROWS} rows, found {}", ds.len())));
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: Option<&str>, fill: f64, label: &str) -> String {
        let mut cells: Vec<String> = id.into_iter().map(str::to_string).collect();
        cells.extend((0..UCI_SEGMENT_LEN).map(|j| format!("{}", fill + j as f64)));
        cells.push(label.into());
        cells.join(",")
    }

    #[test]
    fn header_and_id_column() {
        let header = std::iter::once(String::new())
            .chain((1..=UCI_SEGMENT_LEN).map(|j| format!("X{j}")))
            .chain(std::iter::once("y".to_string()))
            .collect::<Vec<_>>()
            .join(",");
        let text = format!("{header}\n{}\n{}\n", row(Some("X21.V1.791"), 0.5, "1"), row(Some("X15.V1.924"), -3.0, "5"));
        let ds = parse_uci_csv(&text).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.labels, vec![0, 4]);
        assert_eq!(ds.class_names[ds.labels[1]], "Z");
        assert_eq!(ds.signals[0].samples()[3], 3.5);
    }

    #[test]
    fn bad_rows() {
        let ok = row(None, 0.0, "2");
        let truncated = &ok[..ok.len() / 2];
        let err = parse_uci_csv(&format!("{ok}\n{truncated}\n")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(matches!(parse_uci_csv("1,2,3\n").unwrap_err(), Error::Schema(_)));
        let bad = row(None, 0.0, "7");
        assert!(matches!(parse_uci_csv(&format!("{ok}\n{ok}\n{bad}\n")).unwrap_err(), Error::Parse { line: 3, .. }));
        let nan = row(None, 0.0, "1").replacen("0,", "nan,", 1);
        assert!(matches!(parse_uci_csv(&nan).unwrap_err(), Error::Parse { line: 1, .. }));
    }
}
