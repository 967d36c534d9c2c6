//! CSV and JSON persistence for ensembles and trajectories.
//!
//! Floats are written with `{:e}`, the shortest representation that parses
//! back to the same bits, so files round-trip exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::dynamics::{SeriesRow, Snapshot, Trajectory, TrajectoryMeta};
use crate::measures::ParticleEnsemble;
use crate::{Error, Result};

pub const SERIES_HEADER: &str = "t,m2,entropy,fisher,w2,support_radius";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(io_err(path))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_f64(path: &Path, line: usize, field: &str) -> Result<f64> {
    field.trim().parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        reason: format!("not a number: {field:?}"),
    })
}

pub fn ensemble_csv(ensemble: &ParticleEnsemble) -> String {
    let mut s = String::from("x\n");
    for x in ensemble.positions() {
        let _ = writeln!(s, "{x:e}");
    }
    s
}

pub fn write_ensemble(path: &Path, ensemble: &ParticleEnsemble) -> Result<()> {
    write_text(path, &ensemble_csv(ensemble))
}

/// Reads a single-column CSV of positions; a non-numeric first line is
/// treated as a header.
pub fn read_ensemble(path: &Path) -> Result<ParticleEnsemble> {
    let text = read_text(path)?;
    let mut xs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.parse::<f64>().is_err()) {
            continue;
        }
        xs.push(parse_f64(path, i + 1, line)?);
    }
    ParticleEnsemble::new(xs).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        reason: e.to_string(),
    })
}

pub fn series_csv(series: &[SeriesRow]) -> String {
    let mut s = String::with_capacity(series.len() * 120);
    s.push_str(SERIES_HEADER);
    s.push('\n');
    for r in series {
        let _ = writeln!(
            s,
            "{:e},{:e},{:e},{:e},{:e},{:e}",
            r.t, r.m2, r.entropy, r.fisher, r.w2, r.support_radius
        );
    }
    s
}

pub fn read_series(path: &Path) -> Result<Vec<SeriesRow>> {
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == SERIES_HEADER => {}
        _ => {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                reason: format!("expected header {SERIES_HEADER}"),
            })
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                reason: format!("expected 6 fields, got {}", f.len()),
            });
        }
        let v = |k: usize| parse_f64(path, i + 1, f[k]);
        rows.push(SeriesRow {
            t: v(0)?,
            m2: v(1)?,
            entropy: v(2)?,
            fisher: v(3)?,
            w2: v(4)?,
            support_radius: v(5)?,
        });
    }
    Ok(rows)
}

/// Writes `series.csv`, `snapshot_<k>.csv` and `meta.json` into `dir`.
pub fn write_trajectory(dir: &Path, traj: &Trajectory) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_text(&dir.join("series.csv"), &series_csv(&traj.series))?;
    for (entry, snap) in traj.meta.snapshots.iter().zip(&traj.snapshots) {
        write_ensemble(&dir.join(&entry.file), &snap.ensemble)?;
    }
    write_json(&dir.join("meta.json"), &traj.meta)
}

pub fn read_trajectory(dir: &Path) -> Result<Trajectory> {
    let meta: TrajectoryMeta = read_json(&dir.join("meta.json"))?;
    let series = read_series(&dir.join("series.csv"))?;
    let snapshots = meta
        .snapshots
        .iter()
        .map(|e| {
            Ok(Snapshot {
                t: e.t,
                ensemble: read_ensemble(&dir.join(&e.file))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        series,
        snapshots,
        meta,
    })
}
