//! Result tables: replicate rows followed by mean, sd and count rows.

use std::io::Write;

use serde_json::{json, Map, Value as Json};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    UInt(u64),
    Float(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(v) => Some(*v as f64),
            Cell::UInt(v) => Some(*v as f64),
            Cell::Float(v) => Some(*v),
            Cell::Bool(b) => Some(*b as u8 as f64),
            Cell::Text(_) | Cell::Empty => None,
        }
    }

    pub fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::UInt(v) => v.to_string(),
            Cell::Float(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => (*b as u8).to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn to_json(&self) -> Json {
        match self {
            Cell::Int(v) => json!(v),
            Cell::UInt(v) => json!(v),
            Cell::Float(v) if v.is_finite() => json!(v),
            Cell::Float(_) | Cell::Empty => Json::Null,
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
        }
    }
}

/// Columns that are identifiers rather than measurements.
const NOT_AGGREGATED: [&str; 2] = ["row", "seed"];

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    /// `row` column, one row per replicate, then `mean`, `sd`, `count`.
    pub fn with_aggregates(metric_columns: &[&str], replicates: Vec<Vec<Cell>>) -> Self {
        let mut columns = vec!["row".to_string()];
        columns.extend(metric_columns.iter().map(|c| c.to_string()));
        let n = replicates.len();
        let mut rows: Vec<Vec<Cell>> = replicates
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                let mut row = vec![Cell::Int(i as i64)];
                row.extend(r);
                row
            })
            .collect();
        let mut mean = vec![Cell::Text("mean".into())];
        let mut sd = vec![Cell::Text("sd".into())];
        let mut count = vec![Cell::Text("count".into())];
        for (c, name) in columns.iter().enumerate().skip(1) {
            let col: Vec<&Cell> = rows[..n].iter().map(|r| &r[c]).collect();
            if NOT_AGGREGATED.contains(&name.as_str()) {
                mean.push(Cell::Empty);
                sd.push(Cell::Empty);
                count.push(Cell::Int(n as i64));
                continue;
            }
            let nums: Option<Vec<f64>> = col.iter().map(|c| c.as_f64()).collect();
            match nums {
                Some(v) => {
                    let m = v.iter().sum::<f64>() / n as f64;
                    let s = if n > 1 {
                        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
                    } else {
                        f64::NAN
                    };
                    mean.push(Cell::Float(m));
                    sd.push(Cell::Float(s));
                }
                None => {
                    // constant text is echoed, mixed text left blank
                    let same = col.windows(2).all(|w| w[0] == w[1]);
                    mean.push(if same { col[0].clone() } else { Cell::Empty });
                    sd.push(Cell::Empty);
                }
            }
            count.push(Cell::Int(n as i64));
        }
        rows.extend([mean, sd, count]);
        Self { columns, rows }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Row whose `row` cell renders as `label` (`"0"`, `"mean"`, …).
    pub fn row(&self, label: &str) -> Option<&[Cell]> {
        let c = self.column("row")?;
        self.rows.iter().find(|r| r[c].render() == label).map(|r| r.as_slice())
    }

    pub fn value(&self, label: &str, column: &str) -> Option<f64> {
        let c = self.column(column)?;
        self.row(label)?[c].as_f64()
    }

    /// Replicate rows only.
    pub fn replicate_rows(&self) -> impl Iterator<Item = &[Cell]> {
        let c = self.column("row").unwrap_or(0);
        self.rows.iter().filter(move |r| matches!(r[c], Cell::Int(_))).map(|r| r.as_slice())
    }

    /// Prefix every row with fixed cells.
    pub fn prefixed(mut self, names: &[String], values: &[Cell]) -> Self {
        let mut columns = names.to_vec();
        columns.append(&mut self.columns);
        for row in &mut self.rows {
            let mut r = values.to_vec();
            r.append(row);
            *row = r;
        }
        Self {
            columns,
            rows: self.rows,
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.columns)?;
        for row in &self.rows {
            out.write_record(row.iter().map(Cell::render))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("cells are UTF-8")
    }

    /// Aggregate rows as `{column: value}` objects keyed by their label.
    pub fn aggregates_json(&self) -> Vec<Json> {
        let rc = self.column("row").unwrap_or(0);
        self.rows
            .iter()
            .filter(|r| matches!(r[rc], Cell::Text(_)))
            .map(|r| {
                let obj: Map<String, Json> = self.columns.iter().cloned().zip(r.iter().map(Cell::to_json)).collect();
                Json::Object(obj)
            })
            .collect()
    }
}
