use std::cmp::Ordering;
use std::path::Path;

use super::{ResultRecord, Table};
use crate::error::{invalid, Error, Result};

pub fn read_record(path: &Path) -> Result<ResultRecord> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn compare_rows(a: &[super::Cell], b: &[super::Cell]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let ord = match (x.as_f64(), y.as_f64()) {
            (Some(x), Some(y)) => x.total_cmp(&y),
            _ => x.to_csv().cmp(&y.to_csv()),
        };
        if ord != Ordering::Equal {
            return ord;
        }
    }
    Ordering::Equal
}

/// Merge the summaries of records of one experiment kind into a single table,
/// ordered by its leading columns.
pub fn report(records: &[ResultRecord]) -> Result<Table> {
    let first = records.first().ok_or_else(|| invalid("records", "nothing to report"))?;
    let mut merged = Table {
        name: first.experiment.as_str().to_string(),
        header: first.summary.header.clone(),
        rows: Vec::new(),
    };
    for r in records {
        if r.experiment != first.experiment {
            return Err(invalid(
                "records",
                format!(
                    "mixed experiment kinds: {} and {}",
                    first.experiment.as_str(),
                    r.experiment.as_str()
                ),
            ));
        }
        if r.summary.header != merged.header {
            return Err(invalid("records", "summary columns differ between records"));
        }
        merged.rows.extend(r.summary.rows.iter().cloned());
    }
    merged.rows.sort_by(|a, b| compare_rows(a, b));
    Ok(merged)
}
