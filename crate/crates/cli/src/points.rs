//! Point batches for the conjugation tasks: a CSV file with header
//! `z_1,...,z_n`, or a per-axis grid specification expanded in row-major
//! order (last axis fastest). Both produce a deterministic point order, so
//! output rows line up across runs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use hypconj::Vector;

use crate::config::RawAxis;

/// Where a task's points come from; carried by the validated config.
#[derive(Debug, Clone)]
pub enum PointsSpec {
    /// CSV path, resolved against the config file's directory when relative.
    Csv(PathBuf),
    /// One axis per coordinate.
    Grid(Vec<RawAxis>),
}

/// Materializes a batch. `config_dir` anchors relative CSV paths.
pub fn load_points(
    spec: &PointsSpec,
    dim: usize,
    config_dir: Option<&Path>,
) -> Result<Vec<Vector>> {
    match spec {
        PointsSpec::Csv(path) => {
            let resolved = match config_dir {
                Some(dir) if path.is_relative() => dir.join(path),
                _ => path.clone(),
            };
            let text = fs::read_to_string(&resolved)
                .with_context(|| format!("cannot read points csv {}", resolved.display()))?;
            parse_points_csv(&text, dim)
                .with_context(|| format!("in points csv {}", resolved.display()))
        }
        PointsSpec::Grid(axes) => grid_points(axes),
    }
}

/// Parses `z_1,...,z_n` rows. Blank lines are ignored; everything else must
/// be `n` finite floats.
pub fn parse_points_csv(text: &str, dim: usize) -> Result<Vec<Vector>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().context("empty points csv")?;
    let expected: Vec<String> = (1..=dim).map(|i| format!("z_{i}")).collect();
    let got: Vec<&str> = header.split(',').map(str::trim).collect();
    if got != expected.iter().map(String::as_str).collect::<Vec<_>>() {
        bail!("header: expected \"{}\", got \"{}\"", expected.join(","), header.trim());
    }
    let mut points = Vec::new();
    for (lineno, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != dim {
            bail!("line {}: expected {dim} fields, got {}", lineno + 1, fields.len());
        }
        let mut coords = Vec::with_capacity(dim);
        for (j, f) in fields.iter().enumerate() {
            let v: f64 = f
                .parse()
                .with_context(|| format!("line {}, field {}: not a float: \"{f}\"", lineno + 1, j + 1))?;
            if !v.is_finite() {
                bail!("line {}, field {}: must be finite, got {v}", lineno + 1, j + 1);
            }
            coords.push(v);
        }
        points.push(Vector::new(coords));
    }
    if points.is_empty() {
        bail!("points csv has a header but no rows");
    }
    Ok(points)
}

/// Expands a grid spec in row-major order: the last axis varies fastest.
/// An axis with `count` 1 contributes its midpoint.
pub fn grid_points(axes: &[RawAxis]) -> Result<Vec<Vector>> {
    let total: usize = axes.iter().map(|a| a.count).product();
    if total == 0 {
        bail!("grid produces no points");
    }
    let axis_values: Vec<Vec<f64>> = axes
        .iter()
        .map(|ax| {
            if ax.count == 1 {
                vec![0.5 * (ax.min + ax.max)]
            } else {
                let step = (ax.max - ax.min) / (ax.count - 1) as f64;
                (0..ax.count).map(|i| ax.min + step * i as f64).collect()
            }
        })
        .collect();
    let mut points = Vec::with_capacity(total);
    let mut index = vec![0usize; axes.len()];
    loop {
        points.push(Vector::new(
            index.iter().zip(&axis_values).map(|(&i, vals)| vals[i]).collect(),
        ));
        // odometer increment, last axis fastest
        let mut pos = axes.len();
        loop {
            if pos == 0 {
                return Ok(points);
            }
            pos -= 1;
            index[pos] += 1;
            if index[pos] < axis_values[pos].len() {
                break;
            }
            index[pos] = 0;
        }
    }
}
