//! CSV, PGM and JSON artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{GridParseError, SimError};
use crate::radio::SnrGrid;
use crate::routing::RoutingTree;
use crate::sim::RunReport;
use crate::traffic::TickMetrics;

pub const DROPS_HEADER: &str =
    "tick,offered,served,dropped_access,dropped_relay,avg_dropped_per_uav,active_uavs";
pub const TREE_HEADER: &str = "tick,uav,parent,path_cost";
pub const GRID_HEADER: &str = "x,y,snr_db";

/// SNR range mapped onto the 0..=255 gray scale.
pub const PGM_SNR_MIN_DB: f64 = -10.0;
pub const PGM_SNR_MAX_DB: f64 = 40.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: u64,
}

pub fn drops_csv(metrics: &[TickMetrics]) -> String {
    let mut out = String::with_capacity(64 * (metrics.len() + 1));
    out.push_str(DROPS_HEADER);
    out.push('\n');
    for m in metrics {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            m.tick,
            m.offered,
            m.served,
            m.dropped_access,
            m.dropped_relay,
            m.avg_dropped_per_uav,
            m.active_uavs
        );
    }
    out
}

pub fn tree_csv(trees: &[(u64, RoutingTree)]) -> String {
    let mut out = String::new();
    out.push_str(TREE_HEADER);
    out.push('\n');
    for (tick, tree) in trees {
        for (uav, parent) in &tree.parent {
            let _ = writeln!(out, "{tick},{uav},{parent},{:.6}", tree.path_cost[uav]);
        }
    }
    out
}

pub fn grid_csv(grid: &SnrGrid) -> String {
    let mut out = String::with_capacity(32 * grid.values.len());
    out.push_str(GRID_HEADER);
    out.push('\n');
    for (x, y, snr) in grid.points() {
        let _ = writeln!(out, "{x:.6},{y:.6},{snr:.6}");
    }
    out
}

/// Gray level for an SNR value: linear over [-10, 40] dB, clamped, rounded
/// half up.
pub fn snr_to_gray(snr_db: f64) -> u8 {
    if snr_db.is_nan() {
        return 0;
    }
    let scaled = (snr_db - PGM_SNR_MIN_DB) / (PGM_SNR_MAX_DB - PGM_SNR_MIN_DB) * 255.0;
    (scaled + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// A parsed grid CSV: `values[row * width + col]`, rows ascending in y.
#[derive(Debug, Clone, PartialEq)]
pub struct GridImage {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl GridImage {
    pub fn from_grid(grid: &SnrGrid) -> Self {
        Self {
            width: grid.side,
            height: grid.side,
            values: grid.values.clone(),
        }
    }

    /// Binary P5 graymap, one byte per cell. The top image row is the
    /// largest y.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.reserve(self.width * self.height);
        for row in (0..self.height).rev() {
            let start = row * self.width;
            out.extend(
                self.values[start..start + self.width]
                    .iter()
                    .map(|&v| snr_to_gray(v)),
            );
        }
        out
    }
}

/// Parses a grid CSV written by `grid_csv` (row-major, y outer).
pub fn parse_grid_csv(text: &str) -> Result<GridImage, GridParseError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == GRID_HEADER => {}
        Some((_, header)) => {
            return Err(GridParseError::Malformed {
                line: 1,
                msg: format!("expected header `{GRID_HEADER}`, got `{header}`"),
            })
        }
        None => return Err(GridParseError::Empty),
    }
    let mut points: Vec<(f64, f64, f64)> = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(GridParseError::Malformed {
                line: line_no,
                msg: format!("expected 3 fields, got {}", fields.len()),
            });
        }
        let mut nums = [0.0; 3];
        for (slot, field) in nums.iter_mut().zip(&fields) {
            *slot = field
                .trim()
                .parse::<f64>()
                .map_err(|_| GridParseError::Malformed {
                    line: line_no,
                    msg: format!("not a number: `{}`", field.trim()),
                })?;
        }
        points.push((nums[0], nums[1], nums[2]));
    }
    if points.is_empty() {
        return Err(GridParseError::Empty);
    }
    let first_y = points[0].1;
    let width = points.iter().take_while(|p| p.1 == first_y).count();
    if !points.len().is_multiple_of(width) {
        return Err(GridParseError::NotRectangular(format!(
            "{} points do not fill rows of {width}",
            points.len()
        )));
    }
    let height = points.len() / width;
    for (row, chunk) in points.chunks(width).enumerate() {
        let y = chunk[0].1;
        for (col, p) in chunk.iter().enumerate() {
            if p.1 != y || p.0 != points[col].0 {
                return Err(GridParseError::NotRectangular(format!(
                    "point ({}, {}) out of place at row {row}, column {col}",
                    p.0, p.1
                )));
            }
        }
    }
    Ok(GridImage {
        width,
        height,
        values: points.into_iter().map(|p| p.2).collect(),
    })
}

/// Converts a grid CSV file into a PGM file. Returns (width, height).
pub fn plot(input: &Path, output: &Path) -> Result<(usize, usize), SimError> {
    let text = fs::read_to_string(input).map_err(|source| SimError::Io {
        path: input.display().to_string(),
        source,
    })?;
    let image = parse_grid_csv(&text)?;
    fs::write(output, image.to_pgm()).map_err(|source| SimError::Io {
        path: output.display().to_string(),
        source,
    })?;
    Ok((image.width, image.height))
}

/// Writes run artifacts into one directory and keeps a manifest of them.
pub struct ArtifactWriter {
    dir: PathBuf,
    manifest: Vec<ManifestEntry>,
}

pub const REPORT_FILE: &str = "report.json";

impl ArtifactWriter {
    pub fn new(dir: &Path) -> Result<Self, SimError> {
        fs::create_dir_all(dir).map_err(|source| SimError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest: Vec::new(),
        })
    }

    pub fn manifest(&self) -> &[ManifestEntry] {
        &self.manifest
    }

    fn write_file(&mut self, name: &str, bytes: &[u8]) -> Result<(), SimError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|source| SimError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.manifest.push(ManifestEntry {
            path: name.to_string(),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn write_drops(&mut self, metrics: &[TickMetrics]) -> Result<(), SimError> {
        self.write_file("drops.csv", drops_csv(metrics).as_bytes())
    }

    pub fn write_trees(&mut self, trees: &[(u64, RoutingTree)]) -> Result<(), SimError> {
        self.write_file("tree.csv", tree_csv(trees).as_bytes())
    }

    pub fn write_grid(&mut self, stem: &str, grid: &SnrGrid, pgm: bool) -> Result<(), SimError> {
        self.write_file(&format!("{stem}.csv"), grid_csv(grid).as_bytes())?;
        if pgm {
            self.write_file(&format!("{stem}.pgm"), &GridImage::from_grid(grid).to_pgm())?;
        }
        Ok(())
    }

    /// Writes the report; the manifest it embeds lists the files written
    /// before it.
    pub fn write_report(&mut self, report: &RunReport) -> Result<(), SimError> {
        let mut json = serde_json::to_string_pretty(report).expect("report serializes");
        json.push('\n');
        self.write_file(REPORT_FILE, json.as_bytes())
    }
}
