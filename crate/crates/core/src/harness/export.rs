//! File output for run logs.
//!
//! Per-step CSV columns, in order: `time`, base pose (`x, z, pitch`) and base
//! velocity (`vx, vz, pitch_rate`) for floating-base envs, joint positions
//! `q_j`, joint velocities `v_j`, commanded targets `cmd_q_j` and `cmd_v_j`,
//! running cost terms (`c_height, c_orient, c_posture, c_contact_vel,
//! c_contact_force`), then one `contact_c` column (0/1) per contact point.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::run::{RunLog, RunSummary, RunTiming};
use crate::error::{Error, Result};

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(|e| Error::io(path, e))
}

fn write_all(path: &Path, text: &str) -> Result<()> {
    create(path)?.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Per-step CSV text; one row per record.
pub fn steps_csv(log: &RunLog) -> String {
    let base = log.initial_state.base_dof;
    let dof = log.initial_state.position.len() - base;
    let contacts = log.records.first().map_or(0, |r| r.contacts.len());
    let mut header = vec!["time".to_string()];
    if base == 3 {
        header.extend(["x", "z", "pitch", "vx", "vz", "pitch_rate"].map(String::from));
    }
    for prefix in ["q", "v", "cmd_q", "cmd_v"] {
        header.extend((0..dof).map(|j| format!("{prefix}_{j}")));
    }
    header.extend(["c_height", "c_orient", "c_posture", "c_contact_vel", "c_contact_force"].map(String::from));
    header.extend((0..contacts).map(|c| format!("contact_{c}")));

    let mut out = header.join(",");
    out.push('\n');
    for r in &log.records {
        let mut row: Vec<String> = vec![r.time.to_string()];
        if base == 3 {
            row.extend(r.position[..3].iter().chain(&r.velocity[..3]).map(|x| x.to_string()));
        }
        row.extend(
            r.position[base..]
                .iter()
                .chain(&r.velocity[base..])
                .chain(&r.command_q)
                .chain(&r.command_v)
                .map(|x| x.to_string()),
        );
        let c = &r.cost;
        row.extend(
            [c.height, c.orientation, c.posture, c.contact_velocity, c.contact_force].map(|x| x.to_string()),
        );
        row.extend(r.contacts.iter().map(|&b| if b { "1" } else { "0" }.to_string()));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Contact raster: `time` followed by one 0/1 column per contact point.
pub fn contacts_csv(log: &RunLog) -> String {
    let contacts = log.records.first().map_or(0, |r| r.contacts.len());
    let mut out = std::iter::once("time".to_string())
        .chain((0..contacts).map(|c| format!("contact_{c}")))
        .collect::<Vec<_>>()
        .join(",");
    out.push('\n');
    for r in &log.records {
        out.push_str(&r.time.to_string());
        for &b in &r.contacts {
            out.push_str(if b { ",1" } else { ",0" });
        }
        out.push('\n');
    }
    out
}

pub fn summary_json(summaries: &[RunSummary]) -> Result<String> {
    Ok(serde_json::to_string_pretty(summaries)?)
}

fn stem(s: &RunSummary) -> String {
    format!("{}_{}_{}_{}_seed{}", s.env, s.task, s.spline, s.executor, s.seed)
}

/// Writes steps CSV, contact CSV and full JSON log per run, plus `summary.json`
/// and the machine-dependent `timing.json` for the whole batch. Returns the written paths.
pub fn export(logs: &[RunLog], dir: &Path) -> Result<Vec<PathBuf>> {
    if logs.is_empty() {
        return Err(Error::Config("nothing to export: no run logs".into()));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for log in logs {
        let stem = stem(&log.summary);
        let files = [
            (format!("{stem}_steps.csv"), steps_csv(log)),
            (format!("{stem}_contacts.csv"), contacts_csv(log)),
            (format!("{stem}_log.json"), serde_json::to_string(log)?),
        ];
        for (name, text) in files {
            let path = dir.join(name);
            write_all(&path, &text)?;
            written.push(path);
        }
    }
    let summaries: Vec<RunSummary> = logs.iter().map(|l| l.summary.clone()).collect();
    let path = dir.join("summary.json");
    write_all(&path, &summary_json(&summaries)?)?;
    written.push(path);
    let timing: Vec<(u64, &RunTiming)> = logs.iter().map(|l| (l.summary.seed, &l.timing)).collect();
    let path = dir.join("timing.json");
    write_all(&path, &serde_json::to_string_pretty(&timing)?)?;
    written.push(path);
    Ok(written)
}

/// Reads a `*_log.json` file written by [`export`].
pub fn read_log(path: &Path) -> Result<RunLog> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
