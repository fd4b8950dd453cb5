//! File formats: scenario streams and estimate streams as JSON lines,
//! scenario specs and filter configs as TOML, per-frame metrics as CSV.
//!
//! A road map file holds one segment per line: start arclength, heading
//! and curvature polynomial coefficients, length, anchor point and
//! half-width.
//!
//! A scenario stream starts with a header line carrying the schema version,
//! road, sensor and seed, followed by one frame per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gmphd::FilterConfig;
use crate::report::{EstimateFrame, MetricsRow};
use crate::road::{RoadSegment, RoadSpline};
use crate::sim::{RoadSpec, ScenarioFrame, ScenarioSpec, SensorSpec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    /// Invalid configuration or scenario spec.
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },
    /// Malformed or inconsistent data file.
    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },
}

impl IoError {
    fn file(path: &Path, source: std::io::Error) -> Self {
        IoError::File {
            path: path.to_path_buf(),
            source,
        }
    }

    fn data(path: &Path, message: impl Into<String>) -> Self {
        IoError::Data {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }

    fn config(path: &Path, message: impl Into<String>) -> Self {
        IoError::Config {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioHeader {
    pub schema_version: u32,
    pub name: String,
    pub seed: u64,
    pub road: RoadSpec,
    pub sensor: SensorSpec,
    /// Filter configuration recommended for this scenario.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<FilterConfig>,
}

impl ScenarioHeader {
    pub fn new(spec: &ScenarioSpec, filter: Option<FilterConfig>) -> Self {
        ScenarioHeader {
            schema_version: SCHEMA_VERSION,
            name: spec.name.clone(),
            seed: spec.seed,
            road: spec.road.clone(),
            sensor: spec.sensor.clone(),
            filter,
        }
    }
}

fn read_text(path: &Path) -> Result<String, IoError> {
    let mut s = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut s))
        .map_err(|e| IoError::file(path, e))?;
    Ok(s)
}

fn create(path: &Path) -> Result<BufWriter<File>, IoError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| IoError::file(path, e))
}

/// Parses a TOML scenario spec; syntax and schema errors carry the line
/// and column.
pub fn parse_scenario_spec(text: &str) -> Result<ScenarioSpec, String> {
    let spec: ScenarioSpec = toml::from_str(text).map_err(|e| e.to_string())?;
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

pub fn load_scenario_spec(path: &Path) -> Result<ScenarioSpec, IoError> {
    parse_scenario_spec(&read_text(path)?).map_err(|m| IoError::config(path, m))
}

/// Parses a TOML filter config; keys mirror [`FilterConfig`] and missing
/// keys take their defaults.
pub fn parse_filter_config(text: &str) -> Result<FilterConfig, String> {
    let cfg: FilterConfig = toml::from_str(text).map_err(|e| e.to_string())?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_filter_config(path: &Path) -> Result<FilterConfig, IoError> {
    parse_filter_config(&read_text(path)?).map_err(|m| IoError::config(path, m))
}

fn write_line<T: Serialize>(w: &mut impl Write, value: &T) -> std::io::Result<()> {
    serde_json::to_writer(&mut *w, value)?;
    w.write_all(b"\n")
}

pub fn write_scenario(w: &mut impl Write, header: &ScenarioHeader, frames: &[ScenarioFrame]) -> std::io::Result<()> {
    write_line(w, header)?;
    for f in frames {
        write_line(w, f)?;
    }
    w.flush()
}

pub fn save_scenario(path: &Path, header: &ScenarioHeader, frames: &[ScenarioFrame]) -> Result<(), IoError> {
    let mut w = create(path)?;
    write_scenario(&mut w, header, frames).map_err(|e| IoError::file(path, e))
}

fn check_frame(f: &ScenarioFrame, previous: Option<f64>) -> Result<(), String> {
    if !f.t.is_finite() {
        return Err("timestamp is not finite".into());
    }
    if let Some(p) = previous {
        if f.t <= p {
            return Err(format!("timestamp {} does not follow {}", f.t, p));
        }
    }
    if f.labels.len() != f.lidar.len() {
        return Err(format!("{} labels for {} lidar points", f.labels.len(), f.lidar.len()));
    }
    if f.lidar.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
        return Err("non-finite lidar point".into());
    }
    let e = &f.ego;
    if ![e.s, e.n, e.psi, e.v, f.ego_world.x, f.ego_world.y]
        .iter()
        .all(|v| v.is_finite())
    {
        return Err("non-finite ego pose".into());
    }
    Ok(())
}

/// Reads a scenario stream. Errors name the offending frame index.
pub fn read_scenario(r: impl BufRead, path: &Path) -> Result<(ScenarioHeader, Vec<ScenarioFrame>), IoError> {
    let mut lines = r.lines();
    let first = lines
        .next()
        .ok_or_else(|| IoError::data(path, "empty scenario file"))?
        .map_err(|e| IoError::file(path, e))?;
    let header: ScenarioHeader =
        serde_json::from_str(&first).map_err(|e| IoError::data(path, format!("header: {e}")))?;
    if header.schema_version != SCHEMA_VERSION {
        return Err(IoError::data(
            path,
            format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                header.schema_version
            ),
        ));
    }
    let mut frames: Vec<ScenarioFrame> = Vec::new();
    for line in lines {
        let line = line.map_err(|e| IoError::file(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let k = frames.len();
        let frame: ScenarioFrame =
            serde_json::from_str(&line).map_err(|e| IoError::data(path, format!("frame {k}: {e}")))?;
        check_frame(&frame, frames.last().map(|f| f.t)).map_err(|m| IoError::data(path, format!("frame {k}: {m}")))?;
        frames.push(frame);
    }
    Ok((header, frames))
}

pub fn load_scenario(path: &Path) -> Result<(ScenarioHeader, Vec<ScenarioFrame>), IoError> {
    let f = File::open(path).map_err(|e| IoError::file(path, e))?;
    read_scenario(BufReader::new(f), path)
}

pub fn save_road_map(path: &Path, road: &RoadSpline) -> Result<(), IoError> {
    let mut w = create(path)?;
    road.segments()
        .iter()
        .try_for_each(|s| write_line(&mut w, s))
        .and_then(|_| w.flush())
        .map_err(|e| IoError::file(path, e))
}

pub fn load_road_map(path: &Path) -> Result<RoadSpline, IoError> {
    let f = File::open(path).map_err(|e| IoError::file(path, e))?;
    let mut segments: Vec<RoadSegment> = Vec::new();
    for (k, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| IoError::file(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        segments.push(serde_json::from_str(&line).map_err(|e| IoError::data(path, format!("line {}: {e}", k + 1)))?);
    }
    RoadSpline::new(segments).map_err(|e| IoError::data(path, e.to_string()))
}

pub fn save_estimates(path: &Path, frames: &[EstimateFrame]) -> Result<(), IoError> {
    let mut w = create(path)?;
    frames
        .iter()
        .try_for_each(|f| write_line(&mut w, f))
        .and_then(|_| w.flush())
        .map_err(|e| IoError::file(path, e))
}

pub fn load_estimates(path: &Path) -> Result<Vec<EstimateFrame>, IoError> {
    let f = File::open(path).map_err(|e| IoError::file(path, e))?;
    let mut out = Vec::new();
    for (k, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| IoError::file(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| IoError::data(path, format!("line {}: {e}", k + 1)))?);
    }
    Ok(out)
}

pub fn write_metrics(w: impl Write, rows: &[MetricsRow]) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_metrics(path: &Path, rows: &[MetricsRow]) -> Result<(), IoError> {
    let w = create(path)?;
    write_metrics(w, rows).map_err(|e| IoError::data(path, e.to_string()))
}

pub fn load_metrics(path: &Path) -> Result<Vec<MetricsRow>, IoError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| IoError::data(path, e.to_string()))?;
    r.deserialize()
        .collect::<Result<Vec<MetricsRow>, _>>()
        .map_err(|e| IoError::data(path, e.to_string()))
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(std::io::Error::from)
        .and_then(|_| w.write_all(b"\n"))
        .and_then(|_| w.flush())
        .map_err(|e| IoError::file(path, e))
}
