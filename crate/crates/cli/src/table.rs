use std::fmt::Write as _;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(usize),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        write_record(&mut out, self.header.iter().map(|h| quote(h)));
        for row in &self.rows {
            write_record(
                &mut out,
                row.iter().map(|c| match c {
                    Cell::Num(x) => fmt_sig(*x),
                    Cell::Int(n) => n.to_string(),
                    Cell::Text(s) => quote(s),
                }),
            );
        }
        out
    }
}

fn write_record(out: &mut String, fields: impl Iterator<Item = String>) {
    let line: Vec<String> = fields.collect();
    let _ = writeln!(out, "{}", line.join(","));
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Formats with 15 significant digits, in plain notation for moderate
/// exponents and scientific otherwise; trailing zeros are dropped.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.14e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..15).contains(&exp) {
        let decimals = (14 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig(4.0), "4");
        assert_eq!(fmt_sig(0.1), "0.1");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333333333");
        assert_eq!(fmt_sig(-2.5e-9), "-2.5e-9");
        assert_eq!(fmt_sig(123456.789), "123456.789");
        assert_eq!(fmt_sig(1e20), "1e20");
        assert_eq!(fmt_sig(0.05 * 3.0), "0.15");
    }

    #[test]
    fn quoting() {
        let mut t = Table::new(vec!["a".into(), "b,c".into()]);
        t.push(vec![Cell::Text("x\"y".into()), Cell::Int(3)]);
        assert_eq!(t.to_csv(), "a,\"b,c\"\n\"x\"\"y\",3\n");
    }
}
