//! CSV and JSON artifacts. Column orders and header lines are documented in
//! FORMATS.md; every float is written in shortest round-trip form so that
//! reading a file back gives the exact bits that were written.

use std::io::{BufRead, Write};

use boundstab_core::evolve::NormSample;
use boundstab_core::spectrum::ContourSample;
use boundstab_core::{FlowParams, PressureLaw, SteadyProfile};
use serde::Serialize;
use thiserror::Error;

use crate::SCHEMA_VERSION;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("profile header: {0}")]
    Header(String),
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("profile data: {0}")]
    Profile(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Shortest decimal that parses back to the same `f64`.
pub fn float(v: f64) -> String {
    format!("{v:?}")
}

pub const PROFILE_COLUMNS: [&str; 5] = ["x", "rho", "u", "rho_x", "u_x"];
pub const CONTOUR_COLUMNS: [&str; 5] = ["lambda_re", "lambda_im", "D_re_scaled", "D_im_scaled", "log_scale"];
pub const NORM_COLUMNS: [&str; 4] = ["t", "l2", "h1", "h2h3"];

fn profile_header(profile: &SteadyProfile) -> String {
    let p = profile.params();
    let law = match profile.law() {
        PressureLaw::Gamma { kappa, gamma } => format!("law=gamma kappa={} gamma={}", float(*kappa), float(*gamma)),
        PressureLaw::Logarithmic { kappa } => format!("law=log kappa={}", float(*kappa)),
    };
    format!(
        "# boundstab profile schema_version={SCHEMA_VERSION} nu={} rho0={} u0={} u1={} {law} b={} m={} cells={} tol_flux={}",
        float(p.nu),
        float(p.rho0),
        float(p.u0),
        float(p.u1),
        float(profile.b()),
        float(profile.m()),
        profile.cells(),
        float(profile.tol_flux()),
    )
}

pub fn write_profile<W: Write>(mut w: W, profile: &SteadyProfile) -> Result<(), FormatError> {
    writeln!(w, "{}", profile_header(profile))?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(PROFILE_COLUMNS)?;
    for i in 0..=profile.cells() {
        out.write_record([
            float(profile.x()[i]),
            float(profile.rho()[i]),
            float(profile.u()[i]),
            float(profile.rho_x()[i]),
            float(profile.u_x()[i]),
        ])?;
    }
    out.flush()?;
    Ok(())
}

fn header_fields(line: &str) -> Result<Vec<(&str, &str)>, FormatError> {
    let rest = line
        .strip_prefix("# boundstab profile ")
        .ok_or_else(|| FormatError::Header("first line must start with `# boundstab profile`".into()))?;
    rest.split_whitespace()
        .map(|tok| tok.split_once('=').ok_or_else(|| FormatError::Header(format!("malformed field `{tok}`"))))
        .collect()
}

fn field<'a>(fields: &[(&str, &'a str)], key: &str) -> Result<&'a str, FormatError> {
    fields
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| FormatError::Header(format!("missing field `{key}`")))
}

fn number(fields: &[(&str, &str)], key: &str) -> Result<f64, FormatError> {
    let text = field(fields, key)?;
    text.parse().map_err(|_| FormatError::Header(format!("field `{key}`: `{text}` is not a number")))
}

/// Reads a profile written by [`write_profile`]. Derived columns are
/// recomputed from `rho` and checked against the file.
pub fn read_profile<R: BufRead>(mut r: R) -> Result<SteadyProfile, FormatError> {
    let mut first = String::new();
    r.read_line(&mut first)?;
    let fields = header_fields(first.trim_end())?;
    let version = field(&fields, "schema_version")?;
    if version != SCHEMA_VERSION.to_string() {
        return Err(FormatError::Header(format!("unsupported schema_version {version}")));
    }
    let params = FlowParams::new(
        number(&fields, "nu")?,
        number(&fields, "rho0")?,
        number(&fields, "u0")?,
        number(&fields, "u1")?,
    )
    .map_err(|e| FormatError::Header(e.to_string()))?;
    let law = match field(&fields, "law")? {
        "gamma" => PressureLaw::gamma(number(&fields, "kappa")?, number(&fields, "gamma")?),
        "log" => PressureLaw::logarithmic(number(&fields, "kappa")?),
        other => return Err(FormatError::Header(format!("unknown law `{other}`"))),
    }
    .map_err(|e| FormatError::Header(e.to_string()))?;
    let b = number(&fields, "b")?;
    let tol_flux = number(&fields, "tol_flux")?;
    let cells: usize =
        field(&fields, "cells")?.parse().map_err(|_| FormatError::Header("field `cells` is not an integer".into()))?;

    let mut reader = csv::ReaderBuilder::new().from_reader(r);
    if reader.headers()?.iter().ne(PROFILE_COLUMNS) {
        return Err(FormatError::Header(format!("expected columns {}", PROFILE_COLUMNS.join(","))));
    }
    let mut rows: Vec<[f64; 5]> = Vec::with_capacity(cells + 1);
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let mut row = [0.0; 5];
        if record.len() != 5 {
            return Err(FormatError::Row { line, message: format!("expected 5 fields, got {}", record.len()) });
        }
        for (slot, text) in row.iter_mut().zip(record.iter()) {
            *slot =
                text.parse().map_err(|_| FormatError::Row { line, message: format!("`{text}` is not a number") })?;
        }
        rows.push(row);
    }
    if rows.len() != cells + 1 {
        return Err(FormatError::Profile(format!("header says {cells} cells but found {} rows", rows.len())));
    }
    let rho = rows.iter().map(|r| r[1]).collect();
    let profile = SteadyProfile::from_parts(params, law, b, rho)
        .map_err(|e| FormatError::Profile(e.to_string()))?
        .with_tol_flux(tol_flux);
    for (i, row) in rows.iter().enumerate() {
        let stored = [row[0], row[2], row[3], row[4]];
        let derived = [profile.x()[i], profile.u()[i], profile.rho_x()[i], profile.u_x()[i]];
        if stored.iter().zip(&derived).any(|(a, b)| a.to_bits() != b.to_bits()) {
            return Err(FormatError::Profile(format!("row {i} is inconsistent with rho and b")));
        }
    }
    Ok(profile)
}

pub fn write_contour<W: Write>(w: W, samples: &[ContourSample]) -> Result<(), FormatError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CONTOUR_COLUMNS)?;
    for s in samples {
        out.write_record([
            float(s.lambda.re),
            float(s.lambda.im),
            float(s.value.mantissa.re),
            float(s.value.mantissa.im),
            float(s.value.log_scale),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_norms<W: Write>(w: W, history: &[NormSample]) -> Result<(), FormatError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(NORM_COLUMNS)?;
    for s in history {
        out.write_record([float(s.t), float(s.l2), float(s.h1), float(s.h2h3)])?;
    }
    out.flush()?;
    Ok(())
}

/// Reads `t,l2,h1,h2h3` rows back.
pub fn read_norms<R: std::io::Read>(r: R) -> Result<Vec<NormSample>, FormatError> {
    let mut reader = csv::Reader::from_reader(r);
    if reader.headers()?.iter().ne(NORM_COLUMNS) {
        return Err(FormatError::Header(format!("expected columns {}", NORM_COLUMNS.join(","))));
    }
    reader
        .records()
        .map(|record| {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            let v: Result<Vec<f64>, _> = record.iter().map(str::parse).collect();
            match v.as_deref() {
                Ok(&[t, l2, h1, h2h3]) => Ok(NormSample { t, l2, h1, h2h3 }),
                _ => Err(FormatError::Row { line, message: "expected 4 numbers".into() }),
            }
        })
        .collect()
}

/// Pretty JSON followed by a newline. Non-finite floats become `null`.
pub fn write_json<W: Write, T: Serialize>(mut w: W, value: &T) -> Result<(), FormatError> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use boundstab_core::steady::{solve_steady, SteadyOptions};

    fn fig2() -> SteadyProfile {
        let params = FlowParams::new(1.0, 2.0, 1.5, 1.0).unwrap();
        solve_steady(&params, &PressureLaw::DIATOMIC, &SteadyOptions { cells: 64, ..Default::default() }).unwrap()
    }

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 6.02e23, -0.0, 2.0f64.sqrt(), f64::MIN_POSITIVE] {
            assert_eq!(float(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn profile_round_trip_is_exact() {
        let prof = fig2();
        let mut buf = Vec::new();
        write_profile(&mut buf, &prof).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# boundstab profile schema_version=1 nu=1.0 rho0=2.0 u0=1.5 u1=1.0 law=gamma"));
        assert_eq!(text.lines().nth(1), Some("x,rho,u,rho_x,u_x"));
        let back = read_profile(buf.as_slice()).unwrap();
        assert_eq!(back, prof);
    }

    #[test]
    fn constant_and_log_profiles_round_trip() {
        let params = FlowParams::new(0.5, 3.0, 2.0, 2.0).unwrap();
        let law = PressureLaw::logarithmic(2.0).unwrap();
        let prof = solve_steady(&params, &law, &SteadyOptions { cells: 16, ..Default::default() }).unwrap();
        let mut buf = Vec::new();
        write_profile(&mut buf, &prof).unwrap();
        assert_eq!(read_profile(buf.as_slice()).unwrap(), prof);
    }

    #[test]
    fn corrupted_profiles_are_rejected() {
        let mut buf = Vec::new();
        write_profile(&mut buf, &fig2()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let bad_header = text.replacen("law=gamma", "law=stiff", 1);
        assert!(matches!(read_profile(bad_header.as_bytes()), Err(FormatError::Header(_))));
        let short: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
        assert!(matches!(read_profile(short.as_bytes()), Err(FormatError::Profile(_))));
        // Change one u value in the third data row.
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let mut cols: Vec<String> = lines[4].split(',').map(String::from).collect();
        cols[2] = float(cols[2].parse::<f64>().unwrap() * 1.0000001);
        lines[4] = cols.join(",");
        assert!(matches!(read_profile(lines.join("\n").as_bytes()), Err(FormatError::Profile(_))));
        assert!(read_profile("x,rho\n".as_bytes()).is_err());
    }

    #[test]
    fn norms_round_trip() {
        let history = vec![
            NormSample { t: 0.0, l2: 0.01, h1: 0.3, h2h3: 40.0 },
            NormSample { t: 0.125, l2: 0.009, h1: 0.29, h2h3: 1.0 / 3.0 },
        ];
        let mut buf = Vec::new();
        write_norms(&mut buf, &history).unwrap();
        assert!(buf.starts_with(b"t,l2,h1,h2h3\n0.0,0.01,0.3,40.0\n"));
        assert_eq!(read_norms(buf.as_slice()).unwrap(), history);
    }

    #[test]
    fn json_ends_with_newline() {
        #[derive(Serialize)]
        struct R {
            schema_version: u32,
            x: f64,
        }
        let mut buf = Vec::new();
        write_json(&mut buf, &R { schema_version: SCHEMA_VERSION, x: 0.1 }).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "{\n  \"schema_version\": 1,\n  \"x\": 0.1\n}\n");
    }
}
