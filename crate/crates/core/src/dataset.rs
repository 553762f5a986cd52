//! Observation matrices over tuples of global variables, and their CSV form.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::VariableTuple;

/// `l` observations of the variables in `vars`, stored column-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    vars: VariableTuple,
    columns: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(vars: VariableTuple, columns: Vec<Vec<f64>>) -> Result<Self> {
        if columns.len() != vars.len() {
            return Err(Error::input(format!("{} columns for {} variables", columns.len(), vars.len())));
        }
        let l = columns.first().map_or(0, Vec::len);
        if l == 0 {
            return Err(Error::input("a dataset needs at least one row"));
        }
        if columns.iter().any(|c| c.len() != l) {
            return Err(Error::input("columns have different lengths"));
        }
        if columns.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::input("dataset contains non-finite values"));
        }
        Ok(Dataset { vars, columns })
    }

    pub fn from_rows(vars: VariableTuple, rows: &[Vec<f64>]) -> Result<Self> {
        let k = vars.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::input(format!("every row needs {k} values")));
        }
        let columns = (0..k).map(|c| rows.iter().map(|r| r[c]).collect()).collect();
        Self::new(vars, columns)
    }

    /// Number of observations.
    pub fn l(&self) -> usize {
        self.columns[0].len()
    }

    pub fn vars(&self) -> &VariableTuple {
        &self.vars
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn row(&self, r: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[r]).collect()
    }

    /// Column of global variable `var`.
    pub fn column(&self, var: usize) -> Result<&[f64]> {
        self.vars
            .position(var)
            .map(|k| self.columns[k].as_slice())
            .ok_or_else(|| Error::input(format!("variable {var} not in dataset {:?}", self.vars.as_slice())))
    }

    /// Column projection onto `vars`, in that order.
    pub fn project(&self, vars: &[usize]) -> Result<Dataset> {
        let columns = vars
            .iter()
            .map(|&v| self.column(v).map(<[f64]>::to_vec))
            .collect::<Result<_>>()?;
        Dataset::new(VariableTuple::new(vars.to_vec())?, columns)
    }

    /// The given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Dataset> {
        if let Some(&r) = rows.iter().find(|&&r| r >= self.l()) {
            return Err(Error::input(format!("row {r} outside 0..{}", self.l())));
        }
        let columns = self.columns.iter().map(|c| rows.iter().map(|&r| c[r]).collect()).collect();
        Dataset::new(self.vars.clone(), columns)
    }

    /// Reads a CSV file with a header row. `vars` gives the global index of each column.
    pub fn read_csv(path: &Path, vars: VariableTuple) -> Result<Dataset> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| Error::input(format!("{}: {e}", path.display())))?;
        let headers = reader.headers().map_err(|e| Error::input(e.to_string()))?.len();
        if headers != vars.len() {
            return Err(Error::input(format!(
                "{} has {headers} columns but the manifest lists {} variables",
                path.display(),
                vars.len()
            )));
        }
        let mut columns = vec![Vec::new(); vars.len()];
        for record in reader.records() {
            let record = record.map_err(|e| Error::input(e.to_string()))?;
            for (c, field) in record.iter().enumerate() {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| Error::input(format!("not a number: {field:?}")))?;
                columns[c].push(v);
            }
        }
        Dataset::new(vars, columns)
    }

    /// Writes the dataset as CSV; `names` label the columns (default `X<index>`).
    pub fn write_csv(&self, path: &Path, names: Option<&[String]>) -> Result<()> {
        let io = |e: csv::Error| Error::input(format!("{}: {e}", path.display()));
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        let header: Vec<String> = match names {
            Some(n) => n.to_vec(),
            None => self.vars.as_slice().iter().map(|v| format!("X{v}")).collect(),
        };
        w.write_record(&header).map_err(io)?;
        for r in 0..self.l() {
            w.write_record(self.columns.iter().map(|c| crate::json::format_f64(c[r])))
                .map_err(io)?;
        }
        w.flush().map_err(|e| Error::input(e.to_string()))?;
        Ok(())
    }
}

/// Links a CSV file to the global variables of its columns:
/// `{"file": "data.csv", "vars": [0, 3, 4]}`. Relative paths resolve against
/// the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub file: String,
    pub vars: Vec<usize>,
}

impl DatasetManifest {
    pub fn load(&self, base: &Path) -> Result<Dataset> {
        let path = base.join(&self.file);
        Dataset::read_csv(&path, VariableTuple::new(self.vars.clone())?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tuple(v: &[usize]) -> VariableTuple {
        VariableTuple::new(v.to_vec()).unwrap()
    }

    #[test]
    fn construction_checks() {
        assert!(Dataset::new(tuple(&[0, 1]), vec![vec![1.0]]).is_err());
        assert!(Dataset::new(tuple(&[0]), vec![vec![]]).is_err());
        assert!(Dataset::new(tuple(&[0, 1]), vec![vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(Dataset::new(tuple(&[0]), vec![vec![f64::NAN]]).is_err());
    }

    #[test]
    fn projection_and_rows() {
        let d = Dataset::from_rows(tuple(&[4, 2, 7]), &[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let p = d.project(&[7, 4]).unwrap();
        assert_eq!(p.columns(), &[vec![3.0, 6.0], vec![1.0, 4.0]]);
        assert!(d.project(&[1]).is_err());
        let r = d.select_rows(&[1]).unwrap();
        assert_eq!(r.row(0), vec![4.0, 5.0, 6.0]);
    }
}
