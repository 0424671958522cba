//! Binary annotation matrices and nominal Krippendorff's alpha.
//!
//! Each annotator row holds one 0/1 cell per token followed by a virtual
//! "no error" cell, set exactly when the row marks no real token. Columns
//! are the units of the reliability computation.

use serde::{Deserialize, Serialize};

use super::{MetricsError, StimulusKey};
use crate::collector::ResponseRecord;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationMatrix {
    pub key: StimulusKey,
    pub annotators: Vec<String>,
    /// Rows of `token_count + 1` cells; the last is the virtual column.
    pub cells: Vec<Vec<bool>>,
    pub token_count: usize,
}

impl AnnotationMatrix {
    pub fn from_marks(
        key: StimulusKey,
        token_count: usize,
        rows: Vec<(String, Vec<bool>)>,
    ) -> Result<Self, MetricsError> {
        let mut annotators = Vec::with_capacity(rows.len());
        let mut cells = Vec::with_capacity(rows.len());
        for (annotator, marks) in rows {
            if marks.len() != token_count {
                return Err(MetricsError::InconsistentTokenCount {
                    key: key.clone(),
                    expected: token_count,
                    found: marks.len(),
                });
            }
            let none = !marks.iter().any(|&m| m);
            let mut row = marks;
            row.push(none);
            annotators.push(annotator);
            cells.push(row);
        }
        Ok(Self {
            key,
            annotators,
            cells,
            token_count,
        })
    }

    pub fn rows(&self) -> usize {
        self.cells.len()
    }

    fn marks_any(row: &[bool]) -> bool {
        row[..row.len() - 1].iter().any(|&m| m)
    }

    /// Rows with at least one real-column mark.
    pub fn marking_rows(&self) -> impl Iterator<Item = &Vec<bool>> {
        self.cells.iter().filter(|r| Self::marks_any(r))
    }
}

/// Rows for `key`, in record order, with the virtual column appended.
pub fn build_matrix(
    records: &[&ResponseRecord],
    key: &StimulusKey,
    token_count: usize,
) -> Result<AnnotationMatrix, MetricsError> {
    let rows = records
        .iter()
        .filter(|r| r.text_id == key.text_id && r.system_id == key.system_id)
        .map(|r| (r.session_id.clone(), r.marks.clone()))
        .collect();
    AnnotationMatrix::from_marks(key.clone(), token_count, rows)
}

/// Number of annotators who marked at least one real token.
pub fn n_p(matrix: &AnnotationMatrix) -> usize {
    matrix.marking_rows().count()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alpha {
    pub value: f64,
    /// Expected disagreement was zero (a single value throughout), so the
    /// ratio is indeterminate and `value` is reported as 1.
    pub degenerate: bool,
}

/// Nominal alpha over binary cells, `1 - D_o / D_e`, from the coincidence
/// matrix with columns as units.
///
/// With `include_all_rows == false` only rows marking at least one real
/// token are kept (the virtual column stays). Returns `None` when fewer than
/// two rows remain.
pub fn krippendorff_alpha(matrix: &AnnotationMatrix, include_all_rows: bool) -> Option<Alpha> {
    let rows: Vec<&Vec<bool>> = if include_all_rows {
        matrix.cells.iter().collect()
    } else {
        matrix.marking_rows().collect()
    };
    alpha_from_rows(&rows)
}

pub(crate) fn alpha_from_rows(rows: &[&Vec<bool>]) -> Option<Alpha> {
    let m = rows.len();
    if m < 2 {
        return None;
    }
    let units = rows[0].len();
    // Coincidences o[c][k]: within each unit, every ordered pair of distinct
    // annotators contributes 1 / (m - 1).
    let mut o = [[0.0f64; 2]; 2];
    for u in 0..units {
        let ones = rows.iter().filter(|r| r[u]).count() as f64;
        let zeros = m as f64 - ones;
        let w = 1.0 / (m as f64 - 1.0);
        o[1][1] += ones * (ones - 1.0) * w;
        o[0][0] += zeros * (zeros - 1.0) * w;
        o[0][1] += ones * zeros * w;
        o[1][0] += ones * zeros * w;
    }
    let n0 = o[0][0] + o[0][1];
    let n1 = o[1][0] + o[1][1];
    let n = n0 + n1;
    let d_o = (o[0][1] + o[1][0]) / n;
    let d_e = 2.0 * n0 * n1 / (n * (n - 1.0));
    if d_e == 0.0 {
        return Some(Alpha {
            value: 1.0,
            degenerate: true,
        });
    }
    Some(Alpha {
        value: 1.0 - d_o / d_e,
        degenerate: false,
    })
}
