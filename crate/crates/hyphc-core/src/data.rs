//! Row-labelled feature matrices and their CSV form.
//!
//! Every stage of the pipeline that hands a matrix to the next one uses the
//! same schema: first column `user_id`, then one labelled column per feature.
//! Float formatting uses Rust's shortest round-trip representation, so
//! export/import preserves values bit-exactly.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1, Axis};

use crate::error::{Error, Result};

/// A dense real matrix whose rows are identified by user id and whose
/// columns carry labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    ids: Vec<String>,
    columns: Vec<String>,
    values: Array2<f64>,
}

impl FeatureMatrix {
    pub fn new(ids: Vec<String>, columns: Vec<String>, values: Array2<f64>) -> Self {
        assert_eq!(ids.len(), values.nrows(), "row count mismatch");
        assert_eq!(columns.len(), values.ncols(), "column count mismatch");
        Self { ids, columns, values }
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array2<f64> {
        &mut self.values
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    /// Position of every id, for joining matrices row-wise.
    pub fn id_index(&self) -> HashMap<&str, usize> {
        self.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect()
    }

    /// Replace the values while keeping row ids, relabelling columns.
    pub fn with_values(&self, columns: Vec<String>, values: Array2<f64>) -> Self {
        Self::new(self.ids.clone(), columns, values)
    }

    /// Column-wise concatenation. The other matrix must cover exactly the
    /// same ids; its rows are aligned to this matrix's row order.
    pub fn concat(&self, other: &FeatureMatrix) -> Result<FeatureMatrix> {
        if self.n_rows() != other.n_rows() {
            return Err(Error::RowMismatch(format!(
                "{} vs {} rows",
                self.n_rows(),
                other.n_rows()
            )));
        }
        let other_index = other.id_index();
        let mut values = Array2::zeros((self.n_rows(), self.n_cols() + other.n_cols()));
        for (i, id) in self.ids.iter().enumerate() {
            let j = *other_index
                .get(id.as_str())
                .ok_or_else(|| Error::RowMismatch(format!("id `{id}` missing from right matrix")))?;
            values
                .row_mut(i)
                .slice_mut(ndarray::s![..self.n_cols()])
                .assign(&self.values.row(i));
            values
                .row_mut(i)
                .slice_mut(ndarray::s![self.n_cols()..])
                .assign(&other.values.row(j));
        }
        let mut columns = self.columns.clone();
        columns.extend(other.columns.iter().cloned());
        Ok(FeatureMatrix::new(self.ids.clone(), columns, values))
    }

    /// Restrict to the given row positions, preserving their order.
    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        let ids = rows.iter().map(|&i| self.ids[i].clone()).collect();
        let values = self.values.select(Axis(0), rows);
        FeatureMatrix::new(ids, self.columns.clone(), values)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut out = BufWriter::new(file);
        write!(out, "user_id")?;
        for c in &self.columns {
            write!(out, ",{c}")?;
        }
        writeln!(out)?;
        for (i, id) in self.ids.iter().enumerate() {
            write!(out, "{id}")?;
            for v in self.values.row(i) {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<FeatureMatrix> {
        let file = std::fs::File::open(path)?;
        let mut lines = BufReader::new(file).lines();
        let header = lines.next().transpose()?.ok_or_else(|| Error::MalformedRecord {
            line: 1,
            reason: "empty feature csv".into(),
        })?;
        let mut fields = header.split(',');
        let first = fields.next().unwrap_or_default();
        if first != "user_id" {
            return Err(Error::MalformedRecord {
                line: 1,
                reason: format!("expected `user_id` header, got `{first}`"),
            });
        }
        let columns: Vec<String> = fields.map(str::to_string).collect();
        let mut ids = Vec::new();
        let mut data = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let id = fields.next().unwrap_or_default().to_string();
            let mut count = 0usize;
            for f in fields {
                let v: f64 = f.parse().map_err(|_| Error::MalformedRecord {
                    line: lineno + 2,
                    reason: format!("bad float `{f}`"),
                })?;
                data.push(v);
                count += 1;
            }
            if count != columns.len() {
                return Err(Error::MalformedRecord {
                    line: lineno + 2,
                    reason: format!("expected {} values, got {count}", columns.len()),
                });
            }
            ids.push(id);
        }
        let values = Array2::from_shape_vec((ids.len(), columns.len()), data)
            .expect("shape checked per row");
        Ok(FeatureMatrix::new(ids, columns, values))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn sample() -> FeatureMatrix {
        FeatureMatrix::new(
            vec!["u1".into(), "u2".into()],
            vec!["a".into(), "b".into()],
            array![[1.5, -2.0], [0.1, 1e-9]],
        )
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let m = sample();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        m.write_csv(&path).unwrap();
        let back = FeatureMatrix::read_csv(&path).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn concat_aligns_rows_by_id() {
        let left = sample();
        let right = FeatureMatrix::new(
            vec!["u2".into(), "u1".into()],
            vec!["c".into()],
            array![[9.0], [7.0]],
        );
        let joined = left.concat(&right).unwrap();
        assert_eq!(joined.columns(), &["a", "b", "c"]);
        assert_eq!(joined.values().row(0).to_vec(), vec![1.5, -2.0, 7.0]);
        assert_eq!(joined.values().row(1).to_vec(), vec![0.1, 1e-9, 9.0]);
    }

    #[test]
    fn concat_rejects_disjoint_ids() {
        let left = sample();
        let right = FeatureMatrix::new(vec!["zz".into(), "u1".into()], vec!["c".into()], array![[1.0], [2.0]]);
        assert!(matches!(left.concat(&right), Err(Error::RowMismatch(_))));
    }
}
