use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{parse_smiles, MolGraph, SmilesError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    /// Binary labels per task, scored with ROC-AUC.
    Classify,
    /// Real-valued targets, scored with MAE.
    Regress,
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskKind::Classify => "classify",
            TaskKind::Regress => "regress",
        })
    }
}

impl FromStr for TaskKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "classify" | "classification" => Ok(TaskKind::Classify),
            "regress" | "regression" => Ok(TaskKind::Regress),
            other => Err(format!("unknown task kind `{other}`")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("reading dataset: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("no `smiles` column in header")]
    NoSmilesColumn,
    #[error("no label columns in header")]
    NoTasks,
    #[error("dataset has no rows")]
    Empty,
    #[error("row {row}: {source}")]
    Smiles {
        row: usize,
        #[source]
        source: SmilesError,
    },
    #[error("row {row}, column `{column}`: `{value}` is not a number")]
    BadLabel { row: usize, column: String, value: String },
    #[error("row {row}, column `{column}`: classification label {value} is not 0 or 1")]
    NonBinaryLabel { row: usize, column: String, value: f64 },
}

/// Molecules with per-task labels; `None` marks a missing label.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub task: TaskKind,
    pub task_names: Vec<String>,
    pub graphs: Vec<MolGraph>,
    pub labels: Vec<Vec<Option<f64>>>,
}

impl Dataset {
    pub fn from_csv_path(path: impl AsRef<Path>, task: TaskKind) -> Result<Dataset, DataError> {
        let file = std::fs::File::open(path)?;
        Dataset::from_csv_reader(file, task)
    }

    /// Reads a CSV with a header containing `smiles` and one column per
    /// task. Rows are numbered from 1 after the header in errors.
    pub fn from_csv_reader(reader: impl Read, task: TaskKind) -> Result<Dataset, DataError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers()?.clone();
        let smiles_col = header
            .iter()
            .position(|h| h.eq_ignore_ascii_case("smiles"))
            .ok_or(DataError::NoSmilesColumn)?;
        let task_cols: Vec<usize> = (0..header.len()).filter(|&c| c != smiles_col).collect();
        if task_cols.is_empty() {
            return Err(DataError::NoTasks);
        }
        let task_names: Vec<String> = task_cols.iter().map(|&c| header[c].to_string()).collect();

        let mut graphs = Vec::new();
        let mut labels = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let row = i + 1;
            let record = record?;
            let g = parse_smiles(record.get(smiles_col).unwrap_or(""))
                .map_err(|source| DataError::Smiles { row, source })?;
            let mut y = Vec::with_capacity(task_cols.len());
            for (&c, name) in task_cols.iter().zip(&task_names) {
                let cell = record.get(c).unwrap_or("");
                if cell.is_empty() {
                    y.push(None);
                    continue;
                }
                let value: f64 = cell.parse().map_err(|_| DataError::BadLabel {
                    row,
                    column: name.clone(),
                    value: cell.to_string(),
                })?;
                if task == TaskKind::Classify && value != 0.0 && value != 1.0 {
                    return Err(DataError::NonBinaryLabel {
                        row,
                        column: name.clone(),
                        value,
                    });
                }
                y.push(Some(value));
            }
            graphs.push(g);
            labels.push(y);
        }
        if graphs.is_empty() {
            return Err(DataError::Empty);
        }
        Ok(Dataset {
            task,
            task_names,
            graphs,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn tasks(&self) -> usize {
        self.task_names.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_labels_and_missing_cells() {
        let csv = "smiles,a,b\nCCO,1,\n\"c1ccccc1\",0,1\n";
        let d = Dataset::from_csv_reader(csv.as_bytes(), TaskKind::Classify).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.task_names, ["a", "b"]);
        assert_eq!(d.labels, vec![vec![Some(1.0), None], vec![Some(0.0), Some(1.0)]]);
        assert_eq!(d.graphs[1].atom_count(), 6);
    }

    #[test]
    fn smiles_column_can_be_anywhere() {
        let csv = "y,SMILES\n1.5,CC\n";
        let d = Dataset::from_csv_reader(csv.as_bytes(), TaskKind::Regress).unwrap();
        assert_eq!(d.labels, vec![vec![Some(1.5)]]);
    }

    #[test]
    fn errors_are_located() {
        let bad = "smiles,y\nCC,1\nC1CC,0\n";
        match Dataset::from_csv_reader(bad.as_bytes(), TaskKind::Classify) {
            Err(DataError::Smiles { row, .. }) => assert_eq!(row, 2),
            other => panic!("{other:?}"),
        }
        let bad = "smiles,y\nCC,x\n";
        assert!(matches!(
            Dataset::from_csv_reader(bad.as_bytes(), TaskKind::Regress),
            Err(DataError::BadLabel { row: 1, .. })
        ));
        let bad = "smiles,y\nCC,2\n";
        assert!(matches!(
            Dataset::from_csv_reader(bad.as_bytes(), TaskKind::Classify),
            Err(DataError::NonBinaryLabel { .. })
        ));
        assert!(matches!(
            Dataset::from_csv_reader("y\n1\n".as_bytes(), TaskKind::Regress),
            Err(DataError::NoSmilesColumn)
        ));
        assert!(matches!(
            Dataset::from_csv_reader("smiles\nCC\n".as_bytes(), TaskKind::Regress),
            Err(DataError::NoTasks)
        ));
        assert!(matches!(
            Dataset::from_csv_reader("smiles,y\n".as_bytes(), TaskKind::Regress),
            Err(DataError::Empty)
        ));
    }

    #[test]
    fn task_kind_round_trips() {
        for t in [TaskKind::Classify, TaskKind::Regress] {
            assert_eq!(t.to_string().parse::<TaskKind>().unwrap(), t);
        }
        assert!("other".parse::<TaskKind>().is_err());
    }
}
