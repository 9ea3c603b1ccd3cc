//! CSV ingestion with per-column type inference.

use std::path::Path;

use serde::Serialize;

use crate::CliError;

/// Largest integer still read as a category index rather than a real value.
const MAX_INTEGER_CATEGORY: u64 = 1000;

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    /// Symbols in `0..labels.len()`.
    Categorical {
        labels: Vec<String>,
        symbols: Vec<usize>,
    },
    Real(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
    /// Numeric cells, kept so integer columns can also be read as reals.
    numeric: Option<Vec<f64>>,
}

/// How the categories of one column were indexed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymbolMap {
    pub column: String,
    /// `by_value` for small integers, `first_appearance` for labels.
    pub indexing: &'static str,
    pub labels: Vec<String>,
}

impl Column {
    pub fn arity(&self) -> Option<usize> {
        match &self.data {
            ColumnData::Categorical { labels, .. } => Some(labels.len()),
            ColumnData::Real(_) => None,
        }
    }

    pub fn as_real(&self) -> Option<&[f64]> {
        self.numeric.as_deref()
    }

    pub fn symbol_map(&self) -> Option<SymbolMap> {
        let ColumnData::Categorical { labels, .. } = &self.data else {
            return None;
        };
        let indexing = if self.numeric.is_some() { "by_value" } else { "first_appearance" };
        Some(SymbolMap { column: self.name.clone(), indexing, labels: labels.clone() })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<Column>,
    pub rows: usize,
}

impl Table {
    pub fn read(path: &Path) -> Result<Table, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Ingest(format!("cannot read {}: {e}", path.display())))?;
        Table::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Table, CliError> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| CliError::Ingest(format!("malformed CSV header: {e}")))?
            .iter()
            .map(str::to_string)
            .collect();
        if header.is_empty() || header.iter().all(|h| h.is_empty()) {
            return Err(CliError::Ingest("input is empty; a header row is required".into()));
        }
        if header.iter().all(|h| h.parse::<f64>().is_ok()) {
            return Err(CliError::Ingest("first row looks numeric; a header row is required".into()));
        }
        let mut seen = header.clone();
        seen.sort();
        if let Some(w) = seen.windows(2).find(|w| w[0] == w[1]) {
            return Err(CliError::Ingest(format!("duplicate column name {:?}", w[0])));
        }
        let mut cells: Vec<Vec<String>> = vec![Vec::new(); header.len()];
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| CliError::Ingest(format!("row {}: {e}", i + 2)))?;
            for (j, cell) in record.iter().enumerate() {
                if cell.is_empty() {
                    return Err(CliError::Ingest(format!("row {}, column {:?}: empty cell", i + 2, header[j])));
                }
                cells[j].push(cell.to_string());
            }
        }
        let rows = cells[0].len();
        if rows == 0 {
            return Err(CliError::Ingest("input has a header but no data rows".into()));
        }
        let columns = header.into_iter().zip(cells).map(|(name, c)| classify(name, c)).collect::<Result<_, _>>()?;
        Ok(Table { columns, rows })
    }

    pub fn names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    /// The named column, or the first one.
    pub fn column(&self, name: Option<&str>) -> Result<&Column, CliError> {
        match name {
            None => Ok(&self.columns[0]),
            Some(n) => self
                .columns
                .iter()
                .find(|c| c.name == n)
                .ok_or_else(|| CliError::Usage(format!("no column named {n:?}; columns are {:?}", self.names()))),
        }
    }
}

fn classify(name: String, cells: Vec<String>) -> Result<Column, CliError> {
    let parsed: Vec<Option<f64>> = cells.iter().map(|c| c.parse::<f64>().ok().filter(|v| v.is_finite())).collect();
    let numeric = parsed.iter().filter(|p| p.is_some()).count();
    if numeric == cells.len() {
        let values: Vec<f64> = parsed.into_iter().map(|v| v.unwrap_or_default()).collect();
        let small_integers = values.iter().zip(&cells).all(|(v, c)| {
            !c.contains(['.', 'e', 'E']) && *v >= 0.0 && *v < MAX_INTEGER_CATEGORY as f64 && v.fract() == 0.0
        });
        let data = if small_integers {
            let symbols: Vec<usize> = values.iter().map(|&v| v as usize).collect();
            let arity = symbols.iter().max().map_or(2, |m| (m + 1).max(2));
            ColumnData::Categorical { labels: (0..arity).map(|s| s.to_string()).collect(), symbols }
        } else {
            ColumnData::Real(values.clone())
        };
        return Ok(Column { name, data, numeric: Some(values) });
    }
    if numeric > 0 {
        let row = parsed.iter().position(|p| p.is_some()).unwrap_or(0) + 2;
        return Err(CliError::Ingest(format!("column {name:?} mixes numbers and labels (first number at row {row})")));
    }
    let mut labels: Vec<String> = Vec::new();
    let symbols = cells
        .into_iter()
        .map(|c| match labels.iter().position(|l| *l == c) {
            Some(i) => i,
            None => {
                labels.push(c);
                labels.len() - 1
            }
        })
        .collect();
    if labels.len() < 2 {
        // a constant column still lives in a binary alphabet
        labels.push(format!("{}'", labels[0]));
    }
    Ok(Column { name, data: ColumnData::Categorical { labels, symbols }, numeric: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_columns_index_by_value() {
        let t = Table::parse("a,b\n0,2\n1,0\n0,1\n").unwrap();
        assert_eq!(t.columns[0].arity(), Some(2));
        assert_eq!(t.columns[1].arity(), Some(3));
        let ColumnData::Categorical { symbols, .. } = &t.columns[1].data else { panic!() };
        assert_eq!(symbols, &[2, 0, 1]);
    }

    #[test]
    fn labels_index_by_first_appearance() {
        let t = Table::parse("x\nT\nH\nT\n").unwrap();
        let ColumnData::Categorical { labels, symbols } = &t.columns[0].data else { panic!() };
        assert_eq!(labels, &["T", "H"]);
        assert_eq!(symbols, &[0, 1, 0]);
        assert_eq!(t.columns[0].symbol_map().unwrap().indexing, "first_appearance");
    }

    #[test]
    fn constant_label_column_is_binary() {
        let t = Table::parse("x\nH\nH\n").unwrap();
        assert_eq!(t.columns[0].arity(), Some(2));
    }

    #[test]
    fn reals_and_integers_as_reals() {
        let t = Table::parse("y,k\n0.5,1\n-1.25,3\n").unwrap();
        assert_eq!(t.columns[0].data, ColumnData::Real(vec![0.5, -1.25]));
        assert_eq!(t.columns[1].as_real(), Some(&[1.0, 3.0][..]));
        assert!(Table::parse("y\n1.0\n2.0\n").unwrap().columns[0].arity().is_none());
    }

    #[test]
    fn bad_inputs() {
        for text in ["", "1,2\n3,4\n", "a\n", "a\n1\nH\n", "a,a\n1,2\n", "a,b\n1,\n"] {
            assert!(matches!(Table::parse(text), Err(CliError::Ingest(_))), "{text:?}");
        }
    }
}
