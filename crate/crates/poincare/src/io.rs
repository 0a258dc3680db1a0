//! File formats: state JSON and the CSV exports.
//!
//! State JSON:
//! `{"layers": [{"twice_spin": 2, "weight": 1.0, "rho": [[[re, im], ...], ...]}]}`;
//! a layer may give `"psi": [[re, im], ...]` instead of `"rho"`.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::angular::{Direction, HalfSpin};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::phase_space::{QKind, QSamples, SphereGrid};
use crate::states::{LayerState, PolarizationSector, SectorLayer};
use crate::tomography::{MomentSample, TomogramCounts};

fn schema(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema { location: location.into(), message: message.into() }
}

fn number(v: &Value, at: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| schema(at, "expected a number"))
}

fn complex(v: &Value, at: &str) -> Result<Complex64> {
    match v.as_array().map(|a| a.as_slice()) {
        Some([re, im]) => Ok(Complex64::new(number(re, &format!("{at}[0]"))?, number(im, &format!("{at}[1]"))?)),
        _ => Err(schema(at, "expected [re, im]")),
    }
}

fn array<'a>(v: &'a Value, at: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| schema(at, "expected an array"))
}

fn parse_layer(v: &Value, at: &str) -> Result<SectorLayer> {
    let obj = v.as_object().ok_or_else(|| schema(at, "expected an object"))?;
    for key in obj.keys() {
        if !matches!(key.as_str(), "twice_spin" | "weight" | "rho" | "psi") {
            return Err(schema(format!("{at}.{key}"), "unknown field"));
        }
    }
    let twice = obj
        .get("twice_spin")
        .ok_or_else(|| schema(at, "missing field twice_spin"))?
        .as_u64()
        .filter(|&t| t <= u32::MAX as u64)
        .ok_or_else(|| schema(format!("{at}.twice_spin"), "expected a non-negative integer"))?;
    let spin = HalfSpin::from_twice(twice as u32);
    let weight = number(obj.get("weight").ok_or_else(|| schema(at, "missing field weight"))?, &format!("{at}.weight"))?;
    let d = spin.dim();
    let state = match (obj.get("rho"), obj.get("psi")) {
        (Some(rho), None) => {
            let rat = format!("{at}.rho");
            let rows = array(rho, &rat)?;
            if rows.len() != d {
                return Err(schema(&rat, format!("expected {d} rows for twice_spin {twice}, got {}", rows.len())));
            }
            let mut m = CMatrix::zeros(d, d);
            for (i, row) in rows.iter().enumerate() {
                let rowat = format!("{rat}[{i}]");
                let cols = array(row, &rowat)?;
                if cols.len() != d {
                    return Err(schema(&rowat, format!("expected {d} entries, got {}", cols.len())));
                }
                for (j, e) in cols.iter().enumerate() {
                    m[(i, j)] = complex(e, &format!("{rowat}[{j}]"))?;
                }
            }
            LayerState::new(spin, m).map_err(|e| schema(&rat, e.to_string()))?
        }
        (None, Some(psi)) => {
            let pat = format!("{at}.psi");
            let amps = array(psi, &pat)?;
            if amps.len() != d {
                return Err(schema(&pat, format!("expected {d} amplitudes, got {}", amps.len())));
            }
            let v = amps.iter().enumerate().map(|(i, e)| complex(e, &format!("{pat}[{i}]"))).collect::<Result<Vec<_>>>()?;
            LayerState::from_pure(spin, CVector::from_vec(v)).map_err(|e| schema(&pat, e.to_string()))?
        }
        (Some(_), Some(_)) => return Err(schema(at, "give either rho or psi, not both")),
        (None, None) => return Err(schema(at, "missing field rho (or psi)")),
    };
    Ok(SectorLayer { weight, state })
}

/// Parse and validate a state document.
pub fn parse_state(text: &str) -> Result<PolarizationSector> {
    let v: Value = serde_json::from_str(text).map_err(|e| schema(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    let obj = v.as_object().ok_or_else(|| schema("$", "expected an object"))?;
    for key in obj.keys() {
        if key != "layers" {
            return Err(schema(format!("$.{key}"), "unknown field"));
        }
    }
    let layers = array(obj.get("layers").ok_or_else(|| schema("$", "missing field layers"))?, "$.layers")?;
    let parsed = layers
        .iter()
        .enumerate()
        .map(|(i, l)| parse_layer(l, &format!("$.layers[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    PolarizationSector::new(parsed).map_err(|e| schema("$.layers", e.to_string()))
}

pub fn load_state(path: &Path) -> Result<PolarizationSector> {
    let mut s = String::new();
    std::fs::File::open(path)?.read_to_string(&mut s)?;
    parse_state(&s)
}

fn complex_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

/// State document as a JSON value; every layer is written as `rho`.
pub fn state_to_json(sector: &PolarizationSector) -> Value {
    let layers: Vec<Value> = sector
        .layers()
        .iter()
        .map(|l| {
            let rho = l.state.rho();
            let rows: Vec<Value> =
                (0..rho.nrows()).map(|i| Value::Array((0..rho.ncols()).map(|j| complex_json(rho[(i, j)])).collect())).collect();
            json!({"twice_spin": l.spin().twice(), "weight": l.weight, "rho": rows})
        })
        .collect();
    json!({ "layers": layers })
}

/// Canonical serialization: one line, shortest round-trip float formatting.
pub fn state_to_string(sector: &PolarizationSector) -> String {
    state_to_json(sector).to_string()
}

pub fn save_state(sector: &PolarizationSector, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "{}", state_to_string(sector))?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => schema("csv", format!("{other:?}")),
    }
}

/// 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// `theta,phi,value` rows in theta-major order.
pub fn write_q_csv<W: Write>(samples: &QSamples, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theta", "phi", "value"]).map_err(csv_err)?;
    for (k, v) in samples.values.iter().enumerate() {
        let n = samples.grid.node(k);
        w.write_record([format_float(n.theta), format_float(n.phi), format_float(*v)]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: usize) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| schema(format!("row {line} column {}", i + 1), "unparsable value"))
}

fn check_header<R: Read>(r: &mut csv::Reader<R>, want: &[&str]) -> Result<()> {
    let h = r.headers().map_err(csv_err)?;
    if h.iter().collect::<Vec<_>>() != want {
        return Err(schema("header", format!("expected {}", want.join(","))));
    }
    Ok(())
}

/// Values of a Q CSV in file order; the grid is taken from the caller.
pub fn read_q_csv<R: Read>(input: R, grid: &SphereGrid, kind: QKind) -> Result<QSamples> {
    let mut r = csv::Reader::from_reader(input);
    check_header(&mut r, &["theta", "phi", "value"])?;
    let mut values = Vec::with_capacity(grid.len());
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        values.push(parse_field::<f64>(&rec, 2, i + 2)?);
    }
    if values.len() != grid.len() {
        return Err(schema("rows", format!("expected {} rows for the grid, got {}", grid.len(), values.len())));
    }
    Ok(QSamples { grid: grid.clone(), kind, values })
}

/// `theta,phi,m_twice,count`.
pub fn write_tomogram_csv<W: Write>(tomograms: &[TomogramCounts], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theta", "phi", "m_twice", "count"]).map_err(csv_err)?;
    for t in tomograms {
        for (i, c) in t.counts.iter().enumerate() {
            w.write_record([
                format_float(t.direction.theta),
                format_float(t.direction.phi),
                t.spin.m_twice(i).to_string(),
                c.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Tomograms grouped by consecutive identical directions.
pub fn read_tomogram_csv<R: Read>(input: R, spin: HalfSpin) -> Result<Vec<TomogramCounts>> {
    let mut r = csv::Reader::from_reader(input);
    check_header(&mut r, &["theta", "phi", "m_twice", "count"])?;
    let mut out: Vec<TomogramCounts> = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = i + 2;
        let theta: f64 = parse_field(&rec, 0, line)?;
        let phi: f64 = parse_field(&rec, 1, line)?;
        let m: i64 = parse_field(&rec, 2, line)?;
        let c: u64 = parse_field(&rec, 3, line)?;
        let idx = spin
            .index_of(m)
            .ok_or_else(|| schema(format!("row {line} column 3"), format!("m_twice {m} outside spin {spin}")))?;
        let same = out.last().is_some_and(|t| t.direction.theta == theta && t.direction.phi == phi);
        if !same {
            out.push(TomogramCounts { spin, direction: Direction::new(theta, phi), shots: 0, counts: vec![0; spin.dim()] });
        }
        let t = out.last_mut().expect("just pushed");
        t.counts[idx] += c;
        t.shots += c;
    }
    Ok(out)
}

/// `theta,phi,ell,value`.
pub fn write_moments_csv<W: Write>(moments: &[MomentSample], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theta", "phi", "ell", "value"]).map_err(csv_err)?;
    for m in moments {
        w.write_record([
            format_float(m.direction.theta),
            format_float(m.direction.phi),
            m.ell.to_string(),
            format_float(m.value),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_moments_csv<R: Read>(input: R) -> Result<Vec<MomentSample>> {
    let mut r = csv::Reader::from_reader(input);
    check_header(&mut r, &["theta", "phi", "ell", "value"])?;
    r.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec.map_err(csv_err)?;
            let line = i + 2;
            Ok(MomentSample {
                direction: Direction::new(parse_field(&rec, 0, line)?, parse_field(&rec, 1, line)?),
                ell: parse_field(&rec, 2, line)?,
                value: parse_field(&rec, 3, line)?,
            })
        })
        .collect()
}
