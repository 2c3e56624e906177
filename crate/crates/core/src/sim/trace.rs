//! Per-tick trace records and their CSV form.

use std::io::Write;

use crate::fusion::{FusedPose, StageId};
use crate::geometry::RelPose;
use crate::planner::{Phase, Setpoint};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub tick: u64,
    pub truth: RelPose,
    pub detected: [bool; 2],
    pub raw: [Option<RelPose>; 2],
    pub filtered: [Option<RelPose>; 2],
    pub stage: Option<StageId>,
    pub fused: Option<FusedPose>,
    pub phase: Phase,
    pub setpoint: Setpoint,
    pub attached: bool,
    /// Simulated time, s.
    pub time: f64,
    /// Vehicle world pose `(x, y, z, yaw)`.
    pub vehicle: [f64; 4],
}

/// CSV header, one name per column.
pub const TRACE_COLUMNS: &[&str] = &[
    "tick", "true_x", "true_y", "true_z", "true_yaw", "m1_detected", "m2_detected", "raw_m1_x", "raw_m1_y",
    "raw_m1_z", "raw_m1_yaw", "raw_m2_x", "raw_m2_y", "raw_m2_z", "raw_m2_yaw", "filt_m1_x", "filt_m1_y",
    "filt_m1_z", "filt_m1_yaw", "filt_m2_x", "filt_m2_y", "filt_m2_z", "filt_m2_yaw", "stage", "fused_x",
    "fused_y", "fused_z", "fused_yaw", "fused_fresh", "phase", "sp_x", "sp_y", "sp_z", "sp_yaw", "sp_mode",
    "attached", "time", "vehicle_x", "vehicle_y", "vehicle_z", "vehicle_yaw",
];

/// Formats a float with 6 significant digits, `%g` style: trailing zeros
/// dropped, exponent form outside `[1e-4, 1e6)`.
pub fn fmt_sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    // Round first so the exponent reflects the rounded value (9.999995 -> 10).
    let sci = format!("{v:.5e}");
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        return format!("{}e{exp}", trim_zeros(mant));
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn push_pose(row: &mut Vec<String>, p: Option<RelPose>) {
    match p {
        Some(p) => row.extend(p.to_array().map(fmt_sig6)),
        None => row.extend(std::iter::repeat_n(String::new(), 4)),
    }
}

fn flag(b: bool) -> String {
    u8::from(b).to_string()
}

impl TraceRecord {
    /// Row cells in [`TRACE_COLUMNS`] order. Absent values are empty cells.
    pub fn to_row(&self) -> Vec<String> {
        let mut row = Vec::with_capacity(TRACE_COLUMNS.len());
        row.push(self.tick.to_string());
        push_pose(&mut row, Some(self.truth));
        row.extend(self.detected.map(flag));
        for p in self.raw.iter().chain(self.filtered.iter()) {
            push_pose(&mut row, *p);
        }
        row.push(self.stage.map(|s| s.label().to_string()).unwrap_or_default());
        match self.fused {
            Some(f) => {
                row.extend([f.e_x, f.e_y, f.e_z, f.e_psi].map(fmt_sig6));
                row.push(flag(f.fresh));
            }
            None => row.extend(std::iter::repeat_n(String::new(), 5)),
        }
        row.push(self.phase.label().to_string());
        let sp = &self.setpoint;
        row.extend([sp.x_d, sp.y_d, sp.z_d, sp.psi_d].map(fmt_sig6));
        row.push(sp.mode.label().to_string());
        row.push(flag(self.attached));
        row.push(fmt_sig6(self.time));
        row.extend(self.vehicle.map(fmt_sig6));
        row
    }
}

/// Writes a header and one row per record.
pub fn write_trace_csv<W: Write>(out: W, records: &[TraceRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_COLUMNS)?;
    for r in records {
        w.write_record(r.to_row())?;
    }
    w.flush()?;
    Ok(())
}

/// The trace as a CSV string.
pub fn trace_to_csv_string(records: &[TraceRecord]) -> String {
    let mut buf = Vec::new();
    write_trace_csv(&mut buf, records).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is utf-8")
}
