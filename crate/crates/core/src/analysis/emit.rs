//! CSV and plain-PGM output.
//!
//! CSV matrices have a header row `class,<column labels>` and one row per
//! class; numbers carry six significant digits. PGM output is the plain
//! (`P2`) variant with maxval 255: traversal frames are tiled left to right
//! with a two-pixel white gutter, and heatmaps are drawn one 16×16 block per
//! matrix entry.

use std::fmt::Write as _;
use std::path::Path;

use crate::nn::Tensor2D;

use super::{AnalysisError, ClassProbMatrix, SimilarityMatrix, TraversalGrid};

/// Gap between traversal frames, in pixels.
pub const FRAME_GUTTER: usize = 2;
/// Side of the square block drawn for each heatmap entry.
pub const HEATMAP_SCALE: usize = 16;
const PGM_MAX_LINE: usize = 70;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Pgm,
}

#[derive(Debug, Clone, Copy)]
pub enum Artifact<'a> {
    ClassProbs(&'a ClassProbMatrix),
    Similarity(&'a SimilarityMatrix),
    Traversal(&'a TraversalGrid),
}

/// Renders `artifact` and writes it to `path`.
pub fn emit(artifact: Artifact<'_>, path: &Path, format: Format) -> Result<(), AnalysisError> {
    let text = match (artifact, format) {
        (Artifact::ClassProbs(m), Format::Csv) => class_matrix_csv(m),
        (Artifact::ClassProbs(m), Format::Pgm) => heatmap_pgm(m),
        (Artifact::Similarity(s), Format::Csv) => similarity_csv(s),
        (Artifact::Traversal(g), Format::Pgm) => traversal_pgm(g)?,
        (Artifact::Similarity(_), Format::Pgm) | (Artifact::Traversal(_), Format::Csv) => {
            return Err(AnalysisError::Parse {
                what: "output format",
                detail: format!("{format:?} is not available for this artifact"),
            })
        }
    };
    std::fs::write(path, text).map_err(|source| AnalysisError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Rounds to six significant digits and prints the shortest decimal form.
pub fn format_sig6(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{}", if v == 0.0 { 0.0 } else { v });
    }
    let rounded: f64 = format!("{v:.5e}").parse().expect("scientific notation parses");
    format!("{rounded}")
}

fn matrix_csv(header: &[String], classes: &[u8], values: &Tensor2D) -> String {
    let mut out = String::from("class");
    for h in header {
        out.push(',');
        out.push_str(h);
    }
    out.push('\n');
    for (c, row) in classes.iter().zip(values.iter_rows()) {
        write!(out, "{c}").unwrap();
        for &v in row {
            out.push(',');
            out.push_str(&format_sig6(v));
        }
        out.push('\n');
    }
    out
}

pub fn class_matrix_csv(m: &ClassProbMatrix) -> String {
    let header: Vec<String> = (0..m.latent_dim()).map(|i| i.to_string()).collect();
    matrix_csv(&header, &m.classes, &m.values)
}

pub fn similarity_csv(s: &SimilarityMatrix) -> String {
    let header: Vec<String> = s.classes.iter().map(|c| c.to_string()).collect();
    matrix_csv(&header, &s.classes, &s.values)
}

/// A matrix CSV read back: column labels, row classes and values.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedCsv {
    pub columns: Vec<String>,
    pub classes: Vec<u8>,
    pub values: Tensor2D,
}

pub fn parse_matrix_csv(text: &str) -> Result<ParsedCsv, AnalysisError> {
    let bad = |detail: String| AnalysisError::Parse { what: "matrix csv", detail };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty input".into()))?;
    let mut cols = header.split(',');
    if cols.next() != Some("class") {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let columns: Vec<String> = cols.map(str::to_owned).collect();
    let mut classes = Vec::new();
    let mut values = Vec::new();
    for (n, line) in lines.enumerate() {
        let mut fields = line.split(',');
        let class = fields.next().unwrap_or_default();
        classes.push(class.parse::<u8>().map_err(|e| bad(format!("line {}: {e}", n + 2)))?);
        let before = values.len();
        for f in fields {
            values.push(f.parse::<f64>().map_err(|e| bad(format!("line {}: {e}", n + 2)))?);
        }
        if values.len() - before != columns.len() {
            return Err(bad(format!("line {} has {} values", n + 2, values.len() - before)));
        }
    }
    let values = Tensor2D::from_vec(classes.len(), columns.len(), values).map_err(|e| bad(e.to_string()))?;
    Ok(ParsedCsv {
        columns,
        classes,
        values,
    })
}

fn gray(p: f64) -> u8 {
    (p.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Serializes a raster as plain PGM, wrapping lines at 70 characters.
pub fn pgm(width: usize, height: usize, pixels: &[u8]) -> String {
    assert_eq!(pixels.len(), width * height, "raster size");
    let mut out = format!("P2\n{width} {height}\n255\n");
    for row in pixels.chunks(width.max(1)) {
        let mut line_len = 0;
        for (i, p) in row.iter().enumerate() {
            let s = p.to_string();
            if i > 0 {
                if line_len + 1 + s.len() > PGM_MAX_LINE {
                    out.push('\n');
                    line_len = 0;
                } else {
                    out.push(' ');
                    line_len += 1;
                }
            }
            out.push_str(&s);
            line_len += s.len();
        }
        out.push('\n');
    }
    out
}

/// Width, height and pixels of a plain PGM.
pub fn parse_pgm(text: &str) -> Result<(usize, usize, Vec<u8>), AnalysisError> {
    let bad = |detail: String| AnalysisError::Parse { what: "pgm", detail };
    let mut tokens = text.split_ascii_whitespace();
    if tokens.next() != Some("P2") {
        return Err(bad("missing P2 magic".into()));
    }
    let mut num = || -> Result<usize, AnalysisError> {
        tokens
            .next()
            .ok_or_else(|| bad("truncated".into()))?
            .parse()
            .map_err(|e| bad(format!("{e}")))
    };
    let (w, h, max) = (num()?, num()?, num()?);
    if max != 255 {
        return Err(bad(format!("maxval {max}")));
    }
    let pixels = (0..w * h)
        .map(|_| num().and_then(|v| u8::try_from(v).map_err(|e| bad(e.to_string()))))
        .collect::<Result<Vec<u8>, _>>()?;
    Ok((w, h, pixels))
}

pub fn traversal_pgm(g: &TraversalGrid) -> Result<String, AnalysisError> {
    let n = g.frames.first().map_or(0, Vec::len);
    let side = (n as f64).sqrt().round() as usize;
    if side * side != n || n == 0 {
        return Err(AnalysisError::Parse {
            what: "traversal frame",
            detail: format!("{n} pixels is not a square image"),
        });
    }
    let k = g.frames.len();
    let width = k * side + (k - 1) * FRAME_GUTTER;
    let mut raster = vec![255u8; width * side];
    for (f, frame) in g.frames.iter().enumerate() {
        let x0 = f * (side + FRAME_GUTTER);
        for r in 0..side {
            for c in 0..side {
                raster[r * width + x0 + c] = gray(frame[r * side + c]);
            }
        }
    }
    Ok(pgm(width, side, &raster))
}

pub fn heatmap_pgm(m: &ClassProbMatrix) -> String {
    let (rows, cols) = m.values.shape();
    let width = cols * HEATMAP_SCALE;
    let height = rows * HEATMAP_SCALE;
    let mut raster = vec![0u8; width * height];
    for y in 0..height {
        for x in 0..width {
            raster[y * width + x] = gray(m.values.get(y / HEATMAP_SCALE, x / HEATMAP_SCALE));
        }
    }
    pgm(width, height, &raster)
}
