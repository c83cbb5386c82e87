//! CSV interchange for curves and patch samples.
//!
//! Files start with `#` metadata lines, then a header row. Numbers use the
//! shortest decimal form that reads back to the same `f64`.

use std::io::{BufRead, BufReader, Read, Write};

use crate::chart::Point;
use crate::error::{GeomError, Result};
use crate::ode::Termination;
use crate::soliton::SolitonCurve;
use crate::weyl::SampledCurve;

fn io_err(e: impl std::fmt::Display) -> GeomError {
    GeomError::Config(format!("i/o: {e}"))
}

pub(crate) fn num(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// Write `text` as `#`-prefixed lines.
pub fn write_comment_block<W: Write>(w: &mut W, text: &str) -> Result<()> {
    for line in text.lines() {
        if line.is_empty() {
            writeln!(w, "#").map_err(io_err)?;
        } else {
            writeln!(w, "# {line}").map_err(io_err)?;
        }
    }
    Ok(())
}

fn write_rows<W: Write>(w: W, header: Vec<String>, rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(&header).map_err(io_err)?;
    for r in rows {
        out.write_record(&r).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

fn indexed(prefix: &str, d: usize) -> impl Iterator<Item = String> + '_ {
    (1..=d).map(move |k| format!("{prefix}{k}"))
}

/// Columns `s, x1.., T1.., nu1.., kappa_g, residual`.
pub fn write_curve_csv<W: Write>(mut w: W, curve: &SolitonCurve, metadata: &str) -> Result<()> {
    write_comment_block(&mut w, metadata)?;
    let d = curve.samples.first().map_or(0, |s| s.x.len());
    writeln!(w, "# metric: {}", curve.metric_name).map_err(io_err)?;
    writeln!(w, "# field: {}", curve.field_name).map_err(io_err)?;
    writeln!(w, "# termination: {}", termination_label(curve.termination)).map_err(io_err)?;
    let header = std::iter::once("s".to_string())
        .chain(indexed("x", d))
        .chain(indexed("T", d))
        .chain(indexed("nu", d))
        .chain(["kappa_g".to_string(), "residual".to_string()])
        .collect();
    let rows = curve.samples.iter().map(|s| {
        std::iter::once(s.s)
            .chain(s.x.iter().copied())
            .chain(s.tangent.iter().copied())
            .chain(s.normal.iter().copied())
            .chain([s.kappa, s.residual])
            .map(num)
            .collect()
    });
    write_rows(w, header, rows)
}

/// Columns `t, x1..`, for parametrised curves such as geodesics.
pub fn write_sampled_csv<W: Write>(mut w: W, curve: &SampledCurve, metadata: &str) -> Result<()> {
    write_comment_block(&mut w, metadata)?;
    writeln!(w, "# termination: {}", termination_label(curve.termination)).map_err(io_err)?;
    let d = curve.xs.first().map_or(0, |x| x.len());
    let header = std::iter::once("t".to_string()).chain(indexed("x", d)).collect();
    let rows = curve
        .ts
        .iter()
        .zip(&curve.xs)
        .map(|(t, x)| std::iter::once(*t).chain(x.iter().copied()).map(num).collect());
    write_rows(w, header, rows)
}

/// One evaluated patch sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchRow {
    pub params: Vec<f64>,
    pub position: Vec<f64>,
    pub normal: Vec<f64>,
    pub mean_curvature: f64,
    pub residual: f64,
}

/// Columns `t1.., p1.., nu1.., H, residual`.
pub fn write_patch_csv<W: Write>(mut w: W, rows: &[PatchRow], metadata: &str) -> Result<()> {
    write_comment_block(&mut w, metadata)?;
    let (n, d) = rows.first().map_or((0, 0), |r| (r.params.len(), r.position.len()));
    let header = indexed("t", n)
        .chain(indexed("p", d))
        .chain(indexed("nu", d))
        .chain(["H".to_string(), "residual".to_string()])
        .collect();
    let body = rows.iter().map(|r| {
        r.params
            .iter()
            .chain(&r.position)
            .chain(&r.normal)
            .copied()
            .chain([r.mean_curvature, r.residual])
            .map(num)
            .collect()
    });
    write_rows(w, header, body)
}

/// Generic numeric table with named columns.
pub fn write_table_csv<W: Write>(mut w: W, header: &[&str], rows: &[Vec<f64>], metadata: &str) -> Result<()> {
    write_comment_block(&mut w, metadata)?;
    write_rows(
        w,
        header.iter().map(|s| s.to_string()).collect(),
        rows.iter().map(|r| r.iter().copied().map(num).collect()),
    )
}

fn termination_label(t: Termination) -> &'static str {
    match t {
        Termination::Completed => "completed",
        Termination::Boundary => "boundary",
    }
}

/// A curve read back from CSV: the first column is the parameter, the `x*`
/// columns the chart point. Other columns are ignored.
#[derive(Debug, Clone)]
pub struct CurveTable {
    pub metadata: Vec<String>,
    pub curve: SampledCurve,
}

pub fn read_curve_csv<R: Read>(r: R) -> Result<CurveTable> {
    let mut text = String::new();
    BufReader::new(r).read_to_string(&mut text).map_err(io_err)?;
    let metadata: Vec<String> = text
        .as_bytes()
        .lines()
        .map_while(|l| l.ok())
        .take_while(|l| l.starts_with('#'))
        .map(|l| l.trim_start_matches('#').trim().to_string())
        .collect();
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(io_err)?.clone();
    let xcols: Vec<usize> = header
        .iter()
        .enumerate()
        .filter(|(_, h)| h.len() > 1 && h.starts_with('x') && h[1..].chars().all(|c| c.is_ascii_digit()))
        .map(|(i, _)| i)
        .collect();
    if xcols.is_empty() || header.is_empty() {
        return Err(GeomError::InsufficientData("curve CSV has no x1.. columns".into()));
    }
    let termination = if metadata.iter().any(|m| m == "termination: boundary") {
        Termination::Boundary
    } else {
        Termination::Completed
    };
    let mut ts = Vec::new();
    let mut xs = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(io_err)?;
        let field = |i: usize| -> Result<f64> {
            let raw = rec.get(i).unwrap_or("");
            raw.trim().parse::<f64>().map_err(|_| {
                GeomError::Config(format!("row {}: `{raw}` is not a number", line + 1))
            })
        };
        ts.push(field(0)?);
        xs.push(Point::from_vec(xcols.iter().map(|&i| field(i)).collect::<Result<Vec<_>>>()?));
    }
    Ok(CurveTable {
        metadata,
        curve: SampledCurve { ts, xs, termination },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::MetricChart;
    use crate::fields::VectorFieldSpec;
    use crate::soliton::{integrate_soliton, CurveState, SolitonOptions};

    #[test]
    fn curve_round_trip_is_exact() {
        let m = MetricChart::euclidean(2);
        let x = VectorFieldSpec::rotation(2, 1.0);
        let start = CurveState::new(Point::from_vec(vec![1.0, 0.0]), Point::from_vec(vec![0.0, 1.0]));
        let c = integrate_soliton(&m, &x, &start, 1.0, &SolitonOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_curve_csv(&mut buf, &c, "run = 1\n\nk = \"v\"").unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# run = 1\n#\n# k = \"v\"\n"));
        assert!(text.contains("\ns,x1,x2,T1,T2,nu1,nu2,kappa_g,residual\n"));
        let back = read_curve_csv(buf.as_slice()).unwrap();
        assert_eq!(back.curve.ts, c.params());
        assert_eq!(back.curve.xs, c.positions());
        assert_eq!(back.metadata[0], "run = 1");
    }

    #[test]
    fn bad_number_is_reported() {
        let src = "t,x1\n0,1\n1,abc\n";
        let err = read_curve_csv(src.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("abc"));
    }

    #[test]
    fn patch_header() {
        let rows = vec![PatchRow {
            params: vec![0.5, 1.0],
            position: vec![1.0, 0.0, 0.0],
            normal: vec![1.0, 0.0, 0.0],
            mean_curvature: -1.0,
            residual: 1e-12,
        }];
        let mut buf = Vec::new();
        write_patch_csv(&mut buf, &rows, "").unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "t1,t2,p1,p2,p3,nu1,nu2,nu3,H,residual\n0.5,1,1,0,0,1,0,0,-1,1e-12\n");
    }
}
