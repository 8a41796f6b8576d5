//! CSV and JSON emission of scan results.
//!
//! CSV layout: `#` header lines (units, config snapshot, axes), then one row
//! per grid point and engine: `axis1,axis2,<observables>,engine,<overlays>`.
//! A blank cell means the engine does not provide that observable; `NaN`
//! marks a masked point.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{Engine, ScanResult};
use crate::model::SystemConfig;
use crate::{Error, Result};

pub const UNITS_LINE: &str = "all frequencies in units of gamma_1D";

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<W: Write>(result: &ScanResult, out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    let (n1, n2) = result.shape();
    writeln!(w, "# dce scan")?;
    writeln!(w, "# {UNITS_LINE}")?;
    writeln!(w, "# config: {}", serde_json::to_string(&result.provenance.config)?)?;
    for (k, a) in [(1, &result.axis1), (2, &result.axis2)] {
        writeln!(w, "# axis{k}: {} as {} ({} points)", a.parameter, a.label, a.values.len())?;
    }
    writeln!(w, "# engine: {}", result.provenance.engine.name())?;
    writeln!(w, "# code_version: {}", result.provenance.code_version)?;
    for note in result.provenance.notes.iter().filter(|n| *n != UNITS_LINE) {
        writeln!(w, "# note: {note}")?;
    }

    let mut observables = vec![];
    let mut engines: Vec<Engine> = vec![];
    for a in &result.arrays {
        if !observables.contains(&a.observable) {
            observables.push(a.observable);
        }
        if !engines.contains(&a.engine) {
            engines.push(a.engine);
        }
    }

    let mut cw = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(&mut w);
    let mut header = vec![result.axis1.label.clone(), result.axis2.label.clone()];
    header.extend(observables.iter().map(|o| o.name().to_string()));
    header.push("engine".into());
    header.extend(result.overlays.iter().map(|c| format!("overlay_{}", c.name)));
    cw.write_record(&header)?;

    for &engine in &engines {
        let cols: Vec<_> = observables.iter().map(|o| result.array(*o, engine)).collect();
        for i in 0..n1 {
            for j in 0..n2 {
                let mut row = vec![fmt(result.axis1.reported[i]), fmt(result.axis2.reported[j])];
                row.extend(cols.iter().map(|c| c.map_or(String::new(), |a| fmt(a.values[i * n2 + j]))));
                row.push(engine.name().to_string());
                row.extend(result.overlays.iter().map(|c| fmt(c.values[i])));
                cw.write_record(&row)?;
            }
        }
    }
    cw.flush()?;
    drop(cw);
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(result: &ScanResult, out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    serde_json::to_writer_pretty(&mut w, result)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Writes `.json` or (anything else) CSV, by extension.
pub fn write_result(result: &ScanResult, path: &Path) -> Result<()> {
    let f = File::create(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => write_json(result, f),
        _ => write_csv(result, f),
    }
}

/// Parsed scan CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    /// Header lines without the leading `# `.
    pub comments: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Parse(format!("missing column '{name}'")))
    }

    /// Numeric column; blank cells are `None`.
    pub fn numeric(&self, name: &str) -> Result<Vec<Option<f64>>> {
        let k = self.column_index(name)?;
        self.rows
            .iter()
            .map(|r| {
                let cell = r[k].trim();
                if cell.is_empty() {
                    Ok(None)
                } else {
                    cell.parse()
                        .map(Some)
                        .map_err(|_| Error::Parse(format!("column '{name}': bad number '{cell}'")))
                }
            })
            .collect()
    }

    pub fn text(&self, name: &str) -> Result<Vec<&str>> {
        let k = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[k].as_str()).collect())
    }

    /// Config snapshot from the header.
    pub fn config(&self) -> Result<SystemConfig> {
        let line = self
            .comments
            .iter()
            .find_map(|c| c.strip_prefix("config: "))
            .ok_or_else(|| Error::Parse("no config line in header".into()))?;
        Ok(serde_json::from_str(line)?)
    }
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<CsvTable> {
    let mut reader = BufReader::new(input);
    let mut comments = vec![];
    let mut body = String::new();
    let mut line = String::new();
    while reader.read_line(&mut line)? > 0 {
        match line.strip_prefix('#') {
            Some(c) if body.is_empty() => comments.push(c.trim().to_string()),
            _ => body.push_str(&line),
        }
        line.clear();
    }
    let mut r = csv::ReaderBuilder::new().from_reader(body.as_bytes());
    let columns = r.headers()?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok(CsvTable { comments, columns, rows })
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use super::*;

    fn scan() -> ScanResult {
        let base = SystemConfig::uniform(2, 0.01, 10.0, 0.0, 0.4);
        let w = 2.0 * base.omega0;
        let mut spec = ScanSpec::new(
            base,
            Axis::new(Parameter::Qd, vec![0.0, 0.3, 1.1]),
            Axis::new(Parameter::Omega, vec![w - 1.0, w + 10.0]),
            vec![Observable::IMinus, Observable::G2mm],
            Engine::All,
        );
        spec.overlays = vec![OverlayKind::G2Zero];
        run_scan(&spec).unwrap()
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let r = scan();
        let mut buf = vec![];
        write_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(!text.contains('\r'));
        assert!(text.contains(UNITS_LINE));
        let t = read_csv(text.as_bytes()).unwrap();
        assert_eq!(
            t.columns,
            ["qd", "Omega_minus_2omega0", "I_minus", "G2mm", "engine", "overlay_g2_zero"]
        );
        assert_eq!(t.config().unwrap(), r.provenance.config);
        assert_eq!(t.rows.len(), 3 * 6);
        let engines = t.text("engine").unwrap();
        let im = t.numeric("I_minus").unwrap();
        for (k, e) in [Engine::Master, Engine::Diagrams, Engine::Analytic].iter().enumerate() {
            let a = r.array(Observable::IMinus, *e).unwrap();
            for p in 0..6 {
                assert_eq!(engines[k * 6 + p], e.name());
                let got = im[k * 6 + p].unwrap();
                let want = a.values[p];
                // qd = 0 with γ = 0 is singular for the master solve
                assert!(got.to_bits() == want.to_bits() || (got.is_nan() && want.is_nan()));
            }
        }
        let om = t.numeric("Omega_minus_2omega0").unwrap();
        assert_eq!(om[1], Some(r.axis2.reported[1]));
        assert_eq!(om[1], Some(10.0));
    }

    #[test]
    fn json_carries_mask_and_provenance() {
        let r = scan();
        let mut buf = vec![];
        write_json(&r, &mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["provenance"]["code_version"], CODE_VERSION);
        assert!(v["arrays"][0]["mask"].is_array());
        let back: ScanResult = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back.axis1, r.axis1);
    }

    #[test]
    fn renamed_column_is_detected() {
        let r = scan();
        let mut buf = vec![];
        write_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap().replace(",G2mm,", ",G2,");
        let t = read_csv(text.as_bytes()).unwrap();
        assert!(t.numeric("G2mm").is_err());
    }
}
