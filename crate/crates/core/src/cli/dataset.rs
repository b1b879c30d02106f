//! Rectangular tables of numeric and categorical columns read from CSV.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Cell values treated as missing.
pub const MISSING_TOKENS: [&str; 3] = ["", "NA", "NaN"];

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn select(&self, rows: &[usize]) -> Column {
        match self {
            Column::Numeric(v) => Column::Numeric(rows.iter().map(|&i| v[i]).collect()),
            Column::Categorical(v) => Column::Categorical(rows.iter().map(|&i| v[i].clone()).collect()),
        }
    }
}

/// Raw CSV contents; missing cells are `None` until a missing-value policy runs.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub names: Vec<String>,
    pub cells: Vec<Vec<Option<String>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub names: Vec<String>,
    pub columns: Vec<Column>,
}

fn is_missing(s: &str) -> bool {
    MISSING_TOKENS.contains(&s)
}

impl RawTable {
    pub fn from_reader<R: Read>(reader: R, delimiter: u8) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .delimiter(delimiter)
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let names: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if names.is_empty() || names.iter().any(String::is_empty) {
            return Err(Error::Data("CSV header has empty column names".into()));
        }
        for (k, n) in names.iter().enumerate() {
            if names[..k].contains(n) {
                return Err(Error::Data(format!("duplicate column name '{n}'")));
            }
        }
        let mut cells = vec![Vec::new(); names.len()];
        for rec in rdr.records() {
            let rec = rec?;
            for (j, v) in rec.iter().enumerate() {
                cells[j].push((!is_missing(v)).then(|| v.to_string()));
            }
        }
        Ok(Self { names, cells })
    }

    pub fn from_path(path: &Path, delimiter: u8) -> Result<Self> {
        let f = std::fs::File::open(path)
            .map_err(|e| Error::Data(format!("cannot open data file {}: {e}", path.display())))?;
        Self::from_reader(f, delimiter)
    }

    pub fn nrows(&self) -> usize {
        self.cells.first().map_or(0, Vec::len)
    }

    /// Keeps the named columns, drops rows with a missing value in any of them and
    /// types each column. Returns the dataset and the number of dropped rows.
    pub fn complete_cases(&self, columns: &[&str]) -> Result<(Dataset, usize)> {
        let mut idx = Vec::with_capacity(columns.len());
        for c in columns {
            let j = self
                .names
                .iter()
                .position(|n| n == c)
                .ok_or_else(|| Error::Data(format!("unknown variable '{c}' (not a column of the data)")))?;
            idx.push(j);
        }
        let keep: Vec<usize> = (0..self.nrows())
            .filter(|&i| idx.iter().all(|&j| self.cells[j][i].is_some()))
            .collect();
        let dropped = self.nrows() - keep.len();
        let mut out = Dataset {
            names: Vec::new(),
            columns: Vec::new(),
        };
        for (&j, c) in idx.iter().zip(columns) {
            let vals: Vec<&str> = keep.iter().map(|&i| self.cells[j][i].as_deref().unwrap_or("")).collect();
            let parsed: Option<Vec<f64>> = vals.iter().map(|s| s.parse::<f64>().ok()).collect();
            let col = match parsed {
                Some(v) if v.iter().all(|x| x.is_finite()) => Column::Numeric(v),
                _ => Column::Categorical(vals.iter().map(|s| s.to_string()).collect()),
            };
            out.names.push(c.to_string());
            out.columns.push(col);
        }
        Ok((out, dropped))
    }
}

impl Dataset {
    pub fn nrows(&self) -> usize {
        self.columns.first().map_or(0, Column::len)
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.names.iter().position(|n| n == name).map(|j| &self.columns[j])
    }

    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            names: self.names.clone(),
            columns: self.columns.iter().map(|c| c.select(rows)).collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(&self.names)?;
        for i in 0..self.nrows() {
            let row: Vec<String> = self
                .columns
                .iter()
                .map(|c| match c {
                    Column::Numeric(v) => format!("{}", v[i]),
                    Column::Categorical(v) => v[i].clone(),
                })
                .collect();
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}
