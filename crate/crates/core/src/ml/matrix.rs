//! Dense feature matrix with binary labels.

use std::path::Path;

use super::MlError;
use crate::js::MetricVector;

/// Row-major numeric matrix plus labels, the common currency of training and
/// evaluation. All values are finite after construction; labels are 0/1.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n: usize,
    d: usize,
    data: Vec<f64>,
    pub labels: Vec<u8>,
    pub column_names: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(
        data: Vec<f64>,
        n: usize,
        d: usize,
        labels: Vec<u8>,
        column_names: Vec<String>,
    ) -> Result<Self, MlError> {
        if data.len() != n * d || labels.len() != n {
            return Err(MlError::BadDataset(format!(
                "shape mismatch: {} values for {n}x{d}, {} labels",
                data.len(),
                labels.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(MlError::BadDataset("non-finite feature value".into()));
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(MlError::BadDataset("labels must be 0 or 1".into()));
        }
        if column_names.len() != d {
            return Err(MlError::BadDataset(format!(
                "{} column names for {d} columns",
                column_names.len()
            )));
        }
        Ok(FeatureMatrix {
            n,
            d,
            data,
            labels,
            column_names,
        })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self, MlError> {
        let n = rows.len();
        let d = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != d) {
            return Err(MlError::BadDataset("ragged rows".into()));
        }
        let data: Vec<f64> = rows.into_iter().flatten().collect();
        let names = (0..d).map(|i| format!("f{i}")).collect();
        Self::new(data, n, d, labels, names)
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    /// Materialize the rows at `idx` (duplicates allowed, e.g. after
    /// over-sampling).
    pub fn select(&self, idx: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(idx.len() * self.d);
        let mut labels = Vec::with_capacity(idx.len());
        for &i in idx {
            data.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        FeatureMatrix {
            n: idx.len(),
            d: self.d,
            data,
            labels,
            column_names: self.column_names.clone(),
        }
    }

    /// Same matrix with the given labels (for the random-label check).
    pub fn with_labels(&self, labels: Vec<u8>) -> Result<Self, MlError> {
        if labels.len() != self.n {
            return Err(MlError::BadDataset("label count mismatch".into()));
        }
        let mut out = self.clone();
        out.labels = labels;
        Ok(out)
    }

    /// Load a dataset CSV. The 35 metric columns are located by name
    /// (case-insensitive); the label column is one of
    /// `vulnerable`/`vuln`/`flag`/`label`/`bug`, else the last column.
    /// External dataset files with extra identity columns load fine.
    pub fn load_csv(path: &Path) -> Result<Self, MlError> {
        let mut rdr = csv::Reader::from_path(path)
            .map_err(|e| MlError::BadDataset(format!("{}: {e}", path.display())))?;
        let headers: Vec<String> = rdr
            .headers()
            .map_err(|e| MlError::BadDataset(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();

        let mut metric_cols: Vec<usize> = Vec::with_capacity(35);
        for name in MetricVector::COLUMN_NAMES {
            let found = headers
                .iter()
                .position(|h| h == name)
                .or_else(|| headers.iter().position(|h| h.eq_ignore_ascii_case(name)));
            match found {
                Some(i) => metric_cols.push(i),
                None => {
                    return Err(MlError::BadDataset(format!(
                        "{}: metric column `{name}` not found",
                        path.display()
                    )))
                }
            }
        }
        const LABEL_NAMES: [&str; 5] = ["vulnerable", "vuln", "flag", "label", "bug"];
        let label_col = headers
            .iter()
            .position(|h| LABEL_NAMES.iter().any(|l| h.eq_ignore_ascii_case(l)))
            .unwrap_or(headers.len() - 1);

        let mut data = Vec::new();
        let mut labels = Vec::new();
        for (ridx, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| MlError::BadDataset(e.to_string()))?;
            for &c in &metric_cols {
                let v: f64 = rec
                    .get(c)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| {
                        MlError::BadDataset(format!(
                            "{}:{}: bad numeric value in column {}",
                            path.display(),
                            ridx + 2,
                            headers[c]
                        ))
                    })?;
                data.push(v);
            }
            let raw = rec.get(label_col).unwrap_or("").trim();
            let label = match raw {
                "0" | "0.0" | "false" => 0u8,
                "1" | "1.0" | "true" => 1u8,
                other => {
                    return Err(MlError::BadDataset(format!(
                        "{}:{}: bad label `{other}`",
                        path.display(),
                        ridx + 2
                    )))
                }
            };
            labels.push(label);
        }
        let n = labels.len();
        let names = MetricVector::COLUMN_NAMES
            .iter()
            .map(|s| s.to_string())
            .collect();
        Self::new(data, n, 35, labels, names)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn select_duplicates_rows() {
        let m = FeatureMatrix::from_rows(
            vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]],
            vec![0, 1, 0],
        )
        .unwrap();
        let s = m.select(&[2, 0, 2]);
        assert_eq!(s.rows(), 3);
        assert_eq!(s.row(0), &[5.0, 6.0]);
        assert_eq!(s.row(2), &[5.0, 6.0]);
        assert_eq!(s.labels, vec![0, 0, 0]);
    }

    #[test]
    fn rejects_non_finite_and_bad_labels() {
        assert!(FeatureMatrix::from_rows(vec![vec![f64::NAN]], vec![0]).is_err());
        assert!(FeatureMatrix::from_rows(vec![vec![1.0]], vec![2]).is_err());
    }
}
