//! Plain-text instance files.
//!
//! ```text
//! # comment
//! kind: planar
//! agents: 2
//! alternatives: 1
//! points:
//! 0 0
//! 1 0
//! 0.5 0.5
//! ```
//!
//! `kind: matrix` takes a `matrix:` section of `n + m` rows of `n + m`
//! entries instead (agents first). Numbers may be separated by spaces or
//! commas. Floats are written in shortest round-trip form, so emitting and
//! re-parsing gives back the same instance bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metric::{validate_matrix, Geometry, MetricInstance, Point};

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_number(line: usize, tok: &str) -> Result<f64> {
    let v: f64 = tok.parse().map_err(|_| perr(line, format!("{tok:?} is not a number")))?;
    if !v.is_finite() {
        return Err(perr(line, format!("{tok:?} is not finite")));
    }
    Ok(v)
}

fn parse_count(line: usize, key: &str, val: &str) -> Result<usize> {
    let n: usize = val.parse().map_err(|_| perr(line, format!("{key}: {val:?} is not a count")))?;
    if n == 0 {
        return Err(perr(line, format!("{key} must be positive")));
    }
    Ok(n)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Matrix,
    Planar,
}

pub fn parse_instance(text: &str) -> Result<MetricInstance> {
    let mut kind = None;
    let mut agents = None;
    let mut alternatives = None;
    let mut section: Option<(usize, Kind)> = None;
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if section.is_some() {
            let row: Vec<f64> = content
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| parse_number(line, t))
                .collect::<Result<_>>()?;
            rows.push((line, row));
            continue;
        }
        let (key, val) = content
            .split_once(':')
            .ok_or_else(|| perr(line, format!("expected `key: value`, got {content:?}")))?;
        let (key, val) = (key.trim(), val.trim());
        match key {
            "kind" => {
                kind = Some(match val {
                    "matrix" => Kind::Matrix,
                    "planar" => Kind::Planar,
                    _ => return Err(perr(line, format!("unknown kind {val:?} (expected matrix or planar)"))),
                })
            }
            "agents" => agents = Some(parse_count(line, key, val)?),
            "alternatives" => alternatives = Some(parse_count(line, key, val)?),
            "matrix" | "points" => {
                if !val.is_empty() {
                    return Err(perr(line, format!("`{key}:` takes its data on the following lines")));
                }
                let want = if key == "matrix" { Kind::Matrix } else { Kind::Planar };
                match kind {
                    Some(k) if k == want => section = Some((line, want)),
                    Some(_) => return Err(perr(line, format!("`{key}:` section does not match the declared kind"))),
                    None => return Err(perr(line, "`kind:` must come before the data section")),
                }
            }
            _ => return Err(perr(line, format!("unknown key {key:?}"))),
        }
    }

    let last = text.lines().count().max(1);
    let (header_line, kind) = section.ok_or_else(|| perr(last, "missing `matrix:` or `points:` section"))?;
    let agents = agents.ok_or_else(|| perr(header_line, "missing `agents:`"))?;
    let alternatives = alternatives.ok_or_else(|| perr(header_line, "missing `alternatives:`"))?;
    let size = agents + alternatives;
    if rows.len() != size {
        return Err(perr(
            rows.last().map_or(header_line, |r| r.0),
            format!("expected {size} data rows, found {}", rows.len()),
        ));
    }
    match kind {
        Kind::Planar => {
            let mut points = Vec::with_capacity(size);
            for (line, row) in &rows {
                if row.len() != 2 {
                    return Err(perr(*line, format!("a point needs 2 coordinates, found {}", row.len())));
                }
                points.push(Point::new(row[0], row[1]));
            }
            MetricInstance::from_points(agents, alternatives, points)
        }
        Kind::Matrix => {
            let mut matrix = Vec::with_capacity(size * size);
            for (line, row) in &rows {
                if row.len() != size {
                    return Err(perr(*line, format!("expected {size} entries, found {}", row.len())));
                }
                if let Some(v) = row.iter().find(|v| **v < 0.0) {
                    return Err(perr(*line, format!("negative distance {v}")));
                }
                matrix.extend_from_slice(row);
            }
            for i in 0..size {
                for j in 0..i {
                    if matrix[i * size + j] != matrix[j * size + i] {
                        return Err(perr(
                            rows[i].0,
                            format!("asymmetric: d({i},{j}) = {} but d({j},{i}) = {}", matrix[i * size + j], matrix[j * size + i]),
                        ));
                    }
                }
            }
            validate_matrix(size, &matrix).map_err(|e| perr(header_line, e.to_string()))?;
            MetricInstance::from_matrix(agents, alternatives, matrix)
        }
    }
}

pub fn read_instance(path: &Path) -> Result<MetricInstance> {
    parse_instance(&std::fs::read_to_string(path)?)
}

pub fn emit_instance(inst: &MetricInstance) -> String {
    let mut s = String::new();
    let (n, m) = (inst.agents(), inst.alternatives());
    match inst.geometry() {
        Geometry::Planar(points) => {
            let _ = write!(s, "kind: planar\nagents: {n}\nalternatives: {m}\npoints:\n");
            for p in points {
                let _ = writeln!(s, "{} {}", p.x, p.y);
            }
        }
        Geometry::Matrix(matrix) => {
            let _ = write!(s, "kind: matrix\nagents: {n}\nalternatives: {m}\nmatrix:\n");
            for row in matrix.chunks(n + m) {
                let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                let _ = writeln!(s, "{}", cells.join(" "));
            }
        }
    }
    s
}

pub fn write_instance(path: &Path, inst: &MetricInstance) -> Result<()> {
    std::fs::write(path, emit_instance(inst))?;
    Ok(())
}
