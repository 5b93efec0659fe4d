//! CSV and JSON writers for the data products.
//!
//! Every CSV starts with a header row. Floats use the shortest representation
//! that round-trips, so identical inputs give byte-identical files.

use std::io::{self, Write};

use serde::Serialize;

use crate::dynamics::{FlowSample, GapSeries};
use crate::estimators::SweepReport;
use crate::separatrix::{SeparatrixRun, TrajectoryPair};
use crate::weakkam::ProfileRow;

fn float(buf: &mut ryu::Buffer, x: f64) -> String {
    buf.format(x).to_owned()
}

fn write_rows<W: Write, T: Serialize>(w: W, rows: impl IntoIterator<Item = T>) -> io::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush()
}

/// Columns `phi,gamma_k,gamma_0,u_k,u_0,sigma_k`.
pub fn write_profile<W: Write>(w: W, rows: &[ProfileRow]) -> io::Result<()> {
    write_rows(w, rows)
}

/// One row per `k`, columns as in [`crate::estimators::SweepRow`].
pub fn write_sweep<W: Write>(w: W, report: &SweepReport) -> io::Result<()> {
    write_rows(w, &report.rows)
}

/// One row per [`FlowSample`].
pub fn write_flows<W: Write>(w: W, samples: &[FlowSample]) -> io::Result<()> {
    write_rows(w, samples)
}

#[derive(Serialize)]
struct GapRow {
    t: f64,
    d_k: f64,
    bound: f64,
    lambda_h: f64,
}

/// Columns `t,d_k,bound,lambda_h`.
pub fn write_gaps<W: Write>(w: W, gaps: &GapSeries) -> io::Result<()> {
    write_rows(
        w,
        gaps.times
            .iter()
            .zip(&gaps.d_k)
            .zip(&gaps.bound)
            .map(|((&t, &d_k), &bound)| GapRow {
                t,
                d_k,
                bound,
                lambda_h: gaps.lambda_h,
            }),
    )
}

/// Columns `k,T_k` followed by one column per test function id, in the
/// (sorted) order of the first run.
pub fn write_separatrix<W: Write>(w: W, runs: &[SeparatrixRun]) -> io::Result<()> {
    let ids: Vec<&String> = runs
        .first()
        .map(|r| r.pairing_values.keys().collect())
        .unwrap_or_default();
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["k".to_owned(), "T_k".to_owned()];
    header.extend(ids.iter().map(|id| id.to_string()));
    wtr.write_record(&header)?;
    let mut buf = ryu::Buffer::new();
    for run in runs {
        let mut rec = vec![run.k.to_string(), float(&mut buf, run.t_k)];
        for id in &ids {
            let v = run.pairing_values.get(*id).copied().unwrap_or(f64::NAN);
            rec.push(float(&mut buf, v));
        }
        wtr.write_record(&rec)?;
    }
    wtr.flush()
}

#[derive(Serialize)]
struct TrajectoryRow {
    t: f64,
    x_k: f64,
    x: f64,
}

/// Columns `t,x_k,x`.
pub fn write_trajectory<W: Write>(w: W, pair: &TrajectoryPair) -> io::Result<()> {
    write_rows(
        w,
        pair.times
            .iter()
            .zip(&pair.x_k)
            .zip(&pair.x)
            .map(|((&t, &x_k), &x)| TrajectoryRow { t, x_k, x }),
    )
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<W: Write, T: Serialize + ?Sized>(mut w: W, value: &T) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()
}
