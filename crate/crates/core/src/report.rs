//! CSV output with `#`-prefixed provenance lines ahead of the header.

use std::io::{self, Write};

use crate::problems::Observation;

/// Key/value lines written before the CSV header.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Provenance {
    entries: Vec<(String, String)>,
}

impl Provenance {
    pub fn new(tool: &str) -> Self {
        let mut p = Self::default();
        p.push("tool", tool);
        p.push("version", env!("CARGO_PKG_VERSION"));
        p
    }

    pub fn push(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries
            .push((key.to_string(), value.to_string().replace('\n', " ")));
        self
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.push(key, value);
        self
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }
}

/// Writes provenance comments, a header row and the records.
pub fn write_csv<W: Write, R, I>(
    mut out: W,
    provenance: &Provenance,
    header: &[String],
    records: I,
) -> io::Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    for (k, v) in &provenance.entries {
        writeln!(out, "# {k}: {v}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in records {
        w.write_record(r)?;
    }
    w.flush()
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt(v: f64) -> String {
    format!("{v}")
}

pub fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|x| fmt(*x)).collect::<Vec<_>>().join(";")
}

/// Dataset CSV: columns `x_1..x_s, xi_1..xi_m`.
pub fn write_dataset<W: Write>(
    out: W,
    provenance: &Provenance,
    data: &[Observation],
) -> io::Result<()> {
    let s = data.first().map_or(0, |o| o.x.len());
    let m = data.first().map_or(0, |o| o.xi.len());
    let header: Vec<String> = (1..=s)
        .map(|i| format!("x_{i}"))
        .chain((1..=m).map(|j| format!("xi_{j}")))
        .collect();
    write_csv(
        out,
        provenance,
        &header,
        data.iter()
            .map(|o| o.x.iter().chain(&o.xi).map(|v| fmt(*v)).collect::<Vec<_>>()),
    )
}

/// Reads a dataset CSV written by [`write_dataset`].
pub fn read_dataset<R: io::Read>(input: R) -> Result<Vec<Observation>, csv::Error> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(input);
    let headers = r.headers()?.clone();
    let s = headers.iter().filter(|h| h.starts_with("x_")).count();
    let mut data = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| csv::Error::from(io::Error::new(io::ErrorKind::InvalidData, e)))?;
        data.push(Observation {
            x: vals[..s].to_vec(),
            xi: vals[s..].to_vec(),
        });
    }
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_round_trips() {
        let data = vec![
            Observation {
                x: vec![0.1, 2.0],
                xi: vec![-3.5],
            },
            Observation {
                x: vec![1e-17, 0.3],
                xi: vec![100.25],
            },
        ];
        let mut buf = Vec::new();
        write_dataset(&mut buf, &Provenance::new("test").with("seed", 3), &data).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# tool: test\n"));
        assert!(text.contains("x_1,x_2,xi_1"));
        assert_eq!(read_dataset(&buf[..]).unwrap(), data);
    }
}
