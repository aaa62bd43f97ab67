//! CSV, JSON and aligned-table renderings of a command's result.

use serde_json::Value;

use crate::spec::Format;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// Shortest decimal that reads back to the same binary64.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        serde_json::to_string(&v).expect("finite floats serialize")
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format_float(*v),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn is_numeric(&self) -> bool {
        matches!(self, Cell::Int(_) | Cell::Float(_))
    }
}

/// Rows for the CSV and table formats. A `None` header emits bare rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabular {
    pub header: Option<Vec<&'static str>>,
    pub rows: Vec<Vec<Cell>>,
}

/// A command's result in every output format.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub json: Value,
    pub tabular: Tabular,
    /// False when the command ran but its verdict was negative.
    pub ok: bool,
}

impl Artifact {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("values serialize");
                s.push('\n');
                s
            }
            Format::Csv => render_csv(&self.tabular),
            Format::Table => render_table(&self.tabular),
        }
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn render_csv(t: &Tabular) -> String {
    let mut out = String::new();
    if let Some(h) = &t.header {
        out.push_str(&h.join(","));
        out.push('\n');
    }
    for row in &t.rows {
        let cells: Vec<String> = row.iter().map(|c| csv_field(&c.render())).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn render_table(t: &Tabular) -> String {
    let cols = t
        .header
        .as_ref()
        .map(Vec::len)
        .unwrap_or_else(|| t.rows.iter().map(Vec::len).max().unwrap_or(0));
    let mut width = vec![0usize; cols];
    let rendered: Vec<Vec<String>> = t.rows.iter().map(|r| r.iter().map(Cell::render).collect()).collect();
    if let Some(h) = &t.header {
        for (w, s) in width.iter_mut().zip(h) {
            *w = (*w).max(s.len());
        }
    }
    for r in &rendered {
        for (w, s) in width.iter_mut().zip(r) {
            *w = (*w).max(s.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: Vec<(String, bool)>| {
        let parts: Vec<String> = cells
            .into_iter()
            .zip(&width)
            .map(|((s, right), w)| if right { format!("{s:>w$}") } else { format!("{s:<w$}") })
            .collect();
        out.push_str(parts.join("  ").trim_end());
        out.push('\n');
    };
    if let Some(h) = &t.header {
        line(h.iter().map(|s| (s.to_string(), false)).collect());
        line(width.iter().map(|w| ("-".repeat(*w), false)).collect());
    }
    for (row, text) in t.rows.iter().zip(rendered) {
        line(row.iter().zip(text).map(|(c, s)| (s, c.is_numeric())).collect());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_are_shortest_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 2.5e17, 0.25] {
            assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(format_float(0.5), "0.5");
        assert_eq!(format_float(f64::INFINITY), "inf");
    }

    #[test]
    fn csv_and_table() {
        let t = Tabular {
            header: Some(vec!["n", "status"]),
            rows: vec![vec![1usize.into(), "a,b".into()], vec![10usize.into(), Cell::Empty]],
        };
        assert_eq!(render_csv(&t), "n,status\n1,\"a,b\"\n10,\n");
        let table = render_table(&t);
        assert_eq!(table.lines().count(), 4);
        assert!(table.lines().nth(2).unwrap().starts_with(" 1"));
    }
}
