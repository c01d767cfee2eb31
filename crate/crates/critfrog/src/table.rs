//! Row tables and their CSV form.
//!
//! Dialect: comma separator, `.` decimal point, LF line endings, one `#`
//! metadata comment line followed by a mandatory header row. Floats are
//! written with 17 significant digits so they parse back bit for bit;
//! missing values are empty cells.

use std::str::FromStr;

use crate::error::{HarnessError, Result};

/// A named table of string cells, in the exact form written to disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Conversion of a value to its CSV cell.
pub trait Cell {
    fn cell(&self) -> String;
}

impl Cell for f64 {
    fn cell(&self) -> String {
        format!("{self:.16e}")
    }
}

macro_rules! display_cell {
    ($($t:ty),*) => {$(
        impl Cell for $t {
            fn cell(&self) -> String {
                self.to_string()
            }
        }
    )*};
}

display_cell!(u64, u32, usize, i64, bool, str, String);

impl<T: Cell + ?Sized> Cell for &T {
    fn cell(&self) -> String {
        (**self).cell()
    }
}

impl<T: Cell> Cell for Option<T> {
    fn cell(&self) -> String {
        self.as_ref().map(Cell::cell).unwrap_or_default()
    }
}

/// `row![a, b, c]` is the vector of the cells of `a`, `b` and `c`.
#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => {
        vec![$($crate::table::Cell::cell(&$x)),*]
    };
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table { name: name.to_string(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width of table {}", self.name);
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    fn index(&self, column: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == column)
            .ok_or_else(|| HarnessError::spec(format!("{}.{column}", self.name), "no such column"))
    }

    /// Cells of one column parsed as `T`; empty cells give `None`.
    pub fn optional<T: FromStr>(&self, column: &str) -> Result<Vec<Option<T>>> {
        let i = self.index(column)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(r, row)| {
                let s = row[i].as_str();
                if s.is_empty() {
                    return Ok(None);
                }
                s.parse().map(Some).map_err(|_| {
                    HarnessError::spec(format!("{}.{column}", self.name), format!("row {r}: cannot parse {s:?}"))
                })
            })
            .collect()
    }

    /// Cells of one column parsed as `T`; every cell must be present.
    pub fn column<T: FromStr>(&self, column: &str) -> Result<Vec<T>> {
        self.optional(column)?
            .into_iter()
            .enumerate()
            .map(|(r, v)| v.ok_or_else(|| HarnessError::spec(format!("{}.{column}", self.name), format!("row {r} is empty"))))
            .collect()
    }

    /// The CSV text, led by the metadata comment `# {meta}`.
    pub fn to_csv(&self, meta: &str) -> String {
        let mut out = format!("# {meta}\n").into_bytes();
        {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut out);
            w.write_record(&self.columns).expect("writing to memory");
            for row in &self.rows {
                w.write_record(row).expect("writing to memory");
            }
            w.flush().expect("writing to memory");
        }
        String::from_utf8(out).expect("cells are UTF-8")
    }

    pub fn from_csv(name: &str, text: &str) -> Result<Self> {
        let bad = |e: csv::Error| HarnessError::spec(format!("{name}.csv"), e.to_string());
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let columns = r.headers().map_err(bad)?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
            .collect::<std::result::Result<_, _>>()
            .map_err(bad)?;
        Ok(Table { name: name.to_string(), columns, rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_exactly() {
        let mut t = Table::new("t", &["x", "label", "maybe"]);
        let xs = [0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, f64::INFINITY, f64::MIN_POSITIVE];
        for (i, &x) in xs.iter().enumerate() {
            t.push(row![x, format!("a,b \"{i}\""), (i % 2 == 0).then_some(i as u64)]);
        }
        let text = t.to_csv("meta");
        assert!(text.starts_with("# meta\nx,label,maybe\n"));
        assert!(!text.contains('\r'));
        let back = Table::from_csv("t", &text).unwrap();
        assert_eq!(back, t);
        let ys: Vec<f64> = back.column("x").unwrap();
        assert_eq!(ys.iter().map(|y| y.to_bits()).collect::<Vec<_>>(), xs.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        assert_eq!(back.optional::<u64>("maybe").unwrap()[1], None);
        assert!(back.column::<u64>("maybe").is_err());
        assert!(back.column::<f64>("nope").is_err());
    }
}
