use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use super::run::ExtractionResult;
use crate::error::{Result, Stage, StageExt};

/// Pretty JSON with every float written to 17 significant digits.
struct Sig17<'a>(PrettyFormatter<'a>);

impl Formatter for Sig17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{}", fmt_float(value))
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Scientific notation with 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serializes `value` as pretty JSON with 17-digit floats.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json(value)?)?;
    Ok(())
}

/// Writes columns of equal length with a header row.
pub fn write_columns(path: &Path, columns: &[(String, &[f64])]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(columns.iter().map(|(name, _)| name.as_str()))?;
    let rows = columns.first().map_or(0, |c| c.1.len());
    for i in 0..rows {
        w.write_record(columns.iter().map(|(_, v)| fmt_float(v[i])))?;
    }
    w.flush()?;
    Ok(())
}

/// nodes.csv: node index and coordinates, sampled and exact cumulative
/// values, simulator probability (if any) and per-sample error estimate.
pub fn write_nodes(path: &Path, result: &ExtractionResult) -> Result<()> {
    let d = result.config.dimension;
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (0..d).map(|k| format!("k{k}")).collect();
    header.extend((0..d).map(|k| format!("x{k}")));
    header.extend(["sampled_Psi", "exact_Psi", "simulator_Psi", "eps"].map(String::from));
    w.write_record(&header)?;
    for row in &result.nodes {
        let mut rec: Vec<String> = row.index.iter().map(|k| k.to_string()).collect();
        rec.extend(row.coords.iter().map(|&x| fmt_float(x)));
        rec.push(fmt_float(row.sampled));
        rec.push(fmt_float(row.exact));
        rec.push(row.simulator.map(fmt_float).unwrap_or_default());
        rec.push(fmt_float(row.eps));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes result.json, arrays.csv, nodes.csv and timings.json into `dir`.
pub fn write_outputs(dir: &Path, result: &ExtractionResult) -> Result<()> {
    let go = || -> Result<()> {
        fs::create_dir_all(dir)?;
        write_json(&dir.join("result.json"), result)?;
        write_columns(&dir.join("arrays.csv"), &result.arrays.columns())?;
        write_nodes(&dir.join("nodes.csv"), result)?;
        write_json(&dir.join("timings.json"), &result.timings)?;
        Ok(())
    };
    go().stage(Stage::Output)
}
