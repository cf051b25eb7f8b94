//! Output artifacts: per-frame CSV, summary JSON and the bin-sweep table.
//!
//! Floats are written in shortest round-trip form (`Display` for `f64` in
//! CSV, `ryu` via `serde_json` in JSON), so identical runs produce identical
//! bytes.

use std::io::{self, Write};

use crate::simulator::{FrameRecord, SummaryStats, SweepRow};

pub const FRAMES_CSV_HEADER: &str =
    "frame_id,gt_x,gt_y,gt_theta,est_x,est_y,est_theta,n_visible,degraded,err_x,err_y,err_theta";

pub const SWEEP_CSV_HEADER: &str = "Bins,ADE,Acc-5,Acc-15,Acc-30";

/// One CSV row per frame. Estimate and error columns are empty for frames
/// that have no estimate.
pub fn write_frames_csv<W: Write>(mut out: W, records: &[FrameRecord]) -> io::Result<()> {
    writeln!(out, "{FRAMES_CSV_HEADER}")?;
    for r in records {
        let t = &r.truth;
        write!(out, "{},{},{},{}", r.frame_id, t.x, t.y, t.theta.degrees())?;
        match (r.estimate, r.errors()) {
            (Some(e), Some(err)) => writeln!(
                out,
                ",{},{},{},{},{},{},{},{}",
                e.x,
                e.y,
                e.theta.degrees(),
                e.n_visible,
                e.degraded,
                err.x,
                err.y,
                err.theta
            )?,
            _ => writeln!(out, ",,,,0,true,,,")?,
        }
    }
    Ok(())
}

pub fn write_summary_json<W: Write>(mut out: W, summary: &SummaryStats) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut out, summary)?;
    writeln!(out)
}

pub fn write_sweep_csv<W: Write>(mut out: W, rows: &[SweepRow]) -> io::Result<()> {
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for r in rows {
        writeln!(out, "{},{},{},{},{}", r.bins, r.ade, r.acc_5, r.acc_15, r.acc_30)?;
    }
    Ok(())
}
