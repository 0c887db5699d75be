//! CSV and JSON artifact writers. Floats are written as `{:.16e}` so every
//! file round-trips to the exact binary value and is byte-reproducible.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::evolution::{FieldState, ResidualRecord};
use crate::grid::RealField;
use crate::monitors::MonitorReport;

pub const MONITOR_HEADER: &str = "t,mass,kinetic,quartic,coupling_energy,Fv_energy,cross_term,min_v,q_t";
pub const RESIDUAL_HEADER: &str =
    "t,mass_residual,energy_residual,cross_residual,cumulative_mass,cumulative_energy,cumulative_cross";
pub const SNAPSHOT_HEADER: &str = "x,re_u,im_u,v";
pub const PROFILE_HEADER: &str = "x,U,V";

fn push_row(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write!(out, "{v:.16e}").expect("writing to a String");
    }
    out.push('\n');
}

fn table(header: &str, rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        push_row(&mut out, &row);
    }
    out
}

pub fn monitors_csv(reports: &[MonitorReport]) -> String {
    table(
        MONITOR_HEADER,
        reports.iter().map(|r| {
            vec![
                r.t,
                r.mass,
                r.kinetic,
                r.quartic,
                r.coupling_energy,
                r.fv_energy,
                r.cross_term,
                r.min_v,
                r.q_t,
            ]
        }),
    )
}

pub fn residuals_csv(records: &[ResidualRecord]) -> String {
    table(
        RESIDUAL_HEADER,
        records.iter().map(|r| {
            vec![
                r.t,
                r.step.mass,
                r.step.energy,
                r.step.cross,
                r.cumulative.mass,
                r.cumulative.energy,
                r.cumulative.cross,
            ]
        }),
    )
}

pub fn snapshot_csv(state: &FieldState) -> String {
    let x = state.grid().coordinates();
    table(
        SNAPSHOT_HEADER,
        x.iter()
            .zip(state.u.values())
            .zip(state.v.values())
            .map(|((&x, u), &v)| vec![x, u.re, u.im, v]),
    )
}

pub fn profile_csv(u: &RealField, v: &RealField) -> String {
    let x = u.grid().coordinates();
    table(
        PROFILE_HEADER,
        x.iter().zip(u.values()).zip(v.values()).map(|((&x, &u), &v)| vec![x, u, v]),
    )
}

pub fn json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable artifact");
    s.push('\n');
    s
}

pub fn write_text(path: &Path, contents: &str) -> std::io::Result<()> {
    fs::write(path, contents)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    fs::write(path, json_string(value))
}
