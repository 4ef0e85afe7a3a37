//! Row-oriented output tables and their CSV encoding.

use std::io::Write;
use std::path::Path;

use edgecache::Delay;

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(headers: &[S]) -> Self {
        Self {
            headers: headers.iter().map(|h| h.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    pub fn write<W: Write>(&self, out: W) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.headers)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes to `path`, or to stdout without one.
    pub fn write_to(&self, path: Option<&Path>) -> Result<(), CliError> {
        match path {
            Some(p) => self.write(std::fs::File::create(p)?),
            None => self.write(std::io::stdout().lock()),
        }
    }
}

/// `%g`-style rendering with 6 significant digits.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        format!("{}e{exp}", trim_zeros(mantissa))
    } else {
        let decimals = (5 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn delay(d: Delay) -> String {
    match d {
        Delay::Finite(v) => num(v),
        Delay::Unreachable => "unreachable".into(),
    }
}

pub fn flag(b: bool) -> String {
    b.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(num(0.0), "0");
        assert_eq!(num(0.4192780000001), "0.419278");
        assert_eq!(num(0.209639), "0.209639");
        assert_eq!(num(1.0), "1");
        assert_eq!(num(3.2916834), "3.29168");
        assert_eq!(num(123456.7), "123457");
        assert_eq!(num(999999.7), "1e6");
        assert_eq!(num(1e-11), "1e-11");
        assert_eq!(num(0.0001234567), "0.000123457");
        assert_eq!(num(-2.5e-7), "-2.5e-7");
        assert_eq!(num(f64::INFINITY), "inf");
    }

    #[test]
    fn csv_round_trip() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![num(0.5), delay(Delay::Unreachable)]);
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b\n0.5,unreachable\n");
    }
}
