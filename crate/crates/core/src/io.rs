//! Text and binary file formats.
//!
//! Ray-set files hold one ray per line, `U x_t y_t x_r y_r` or
//! `B x_t y_t x_h y_h x_r y_r`. Travel-time and grid-vector text files hold
//! one decimal value per line. Abstract-ray files hold `A k i_1 .. i_k` per
//! line, indices into the companion ray-set file. In every text format blank
//! lines and lines starting with `#` are ignored.
//!
//! The binary container (little-endian throughout):
//!
//! ```text
//! magic      4 bytes   "BRT1"
//! n          u64       cells per grid side
//! cell_size  f64
//! rows       u64       number of matrix rows (0 for a grid vector)
//! counts     rows x u32   entries per row
//! indices    nnz x u32    cell indices, row after row
//! weights    nnz x f64
//! rhs        rows x f64
//! values     n*n x f64    grid vectors only
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::linsys::{GridVector, WeightMatrix};
use crate::rays::{AbstractRay, AbstractRaySet, PartitionMode, Ray, RaySet, Shortfall};

pub const MAGIC: &[u8; 4] = b"BRT1";

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_f64(tok: &str, path: &Path, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(path, line, format!("`{tok}` is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("`{tok}` is not finite")));
    }
    Ok(v)
}

pub fn format_ray_set(set: &RaySet) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# seed {}", set.seed);
    for ray in &set.rays {
        match *ray {
            Ray::Unbroken { t, r } => {
                let _ = writeln!(s, "U {} {} {} {}", t.x, t.y, r.x, r.y);
            }
            Ray::Broken { t, h, r } => {
                let _ = writeln!(s, "B {} {} {} {} {} {}", t.x, t.y, h.x, h.y, r.x, r.y);
            }
        }
    }
    s
}

pub fn parse_ray_set(text: &str, path: &Path) -> Result<RaySet> {
    let mut seed = 0;
    for line in text.lines() {
        if let Some(rest) = line.trim().strip_prefix("# seed ") {
            seed = rest.trim().parse().unwrap_or(0);
            break;
        }
    }
    let mut rays = Vec::new();
    for (no, line) in content_lines(text) {
        let toks: Vec<&str> = line.split_whitespace().collect();
        let nums = |k: usize| -> Result<Vec<f64>> {
            if toks.len() != k + 1 {
                return Err(parse_err(path, no, format!("expected {k} coordinates")));
            }
            toks[1..].iter().map(|t| parse_f64(t, path, no)).collect()
        };
        let ray = match toks[0] {
            "U" => {
                let v = nums(4)?;
                Ray::unbroken(Point2::new(v[0], v[1]), Point2::new(v[2], v[3]))
            }
            "B" => {
                let v = nums(6)?;
                Ray::broken(
                    Point2::new(v[0], v[1]),
                    Point2::new(v[2], v[3]),
                    Point2::new(v[4], v[5]),
                )
            }
            other => return Err(parse_err(path, no, format!("unknown ray tag `{other}`"))),
        }
        .map_err(|e| parse_err(path, no, e.to_string()))?;
        rays.push(ray);
    }
    let mut set = RaySet::from_rays(rays, seed).map_err(|e| parse_err(path, 0, e.to_string()))?;
    set.shortfall = Shortfall::default();
    Ok(set)
}

pub fn write_ray_set(path: &Path, set: &RaySet) -> Result<()> {
    write_file(path, format_ray_set(set).as_bytes())
}

pub fn read_ray_set(path: &Path) -> Result<RaySet> {
    parse_ray_set(&read_text(path)?, path)
}

pub fn format_values(values: &[f64]) -> String {
    let mut s = String::with_capacity(values.len() * 20);
    for v in values {
        let _ = writeln!(s, "{v}");
    }
    s
}

pub fn parse_values(text: &str, path: &Path) -> Result<Vec<f64>> {
    content_lines(text)
        .map(|(no, line)| parse_f64(line, path, no))
        .collect()
}

/// Travel times, one per line, aligned with a ray-set file.
pub fn write_times(path: &Path, times: &[f64]) -> Result<()> {
    write_file(path, format_values(times).as_bytes())
}

pub fn read_times(path: &Path) -> Result<Vec<f64>> {
    let values = parse_values(&read_text(path)?, path)?;
    if let Some(i) = values.iter().position(|v| *v <= 0.0) {
        return Err(parse_err(path, i + 1, "travel times must be positive"));
    }
    Ok(values)
}

pub fn format_abstract_rays(set: &AbstractRaySet) -> String {
    let mut s = String::new();
    let mode = match set.mode {
        PartitionMode::Chained => "chained",
        PartitionMode::Free => "free",
    };
    let _ = writeln!(s, "# mode {mode}");
    for ar in &set.abstract_rays {
        let _ = write!(s, "A {}", ar.elements.len());
        for e in &ar.elements {
            let _ = write!(s, " {e}");
        }
        s.push('\n');
    }
    s
}

pub fn parse_abstract_rays(text: &str, path: &Path) -> Result<AbstractRaySet> {
    let mode = if text.lines().any(|l| l.trim() == "# mode chained") {
        PartitionMode::Chained
    } else {
        PartitionMode::Free
    };
    let mut abstract_rays = Vec::new();
    for (no, line) in content_lines(text) {
        let mut toks = line.split_whitespace();
        if toks.next() != Some("A") {
            return Err(parse_err(path, no, "expected `A k i_1 .. i_k`"));
        }
        let k: usize = toks
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(path, no, "missing element count"))?;
        let elements: Vec<usize> = toks
            .map(|t| t.parse().map_err(|_| parse_err(path, no, format!("bad index `{t}`"))))
            .collect::<Result<_>>()?;
        if elements.len() != k || k == 0 {
            return Err(parse_err(path, no, format!("declared {k} elements, found {}", elements.len())));
        }
        abstract_rays.push(AbstractRay { elements });
    }
    Ok(AbstractRaySet { abstract_rays, mode })
}

pub fn write_abstract_rays(path: &Path, set: &AbstractRaySet) -> Result<()> {
    write_file(path, format_abstract_rays(set).as_bytes())
}

pub fn read_abstract_rays(path: &Path) -> Result<AbstractRaySet> {
    parse_abstract_rays(&read_text(path)?, path)
}

pub fn write_grid_vector_text(path: &Path, v: &GridVector) -> Result<()> {
    write_file(path, format_values(v).as_bytes())
}

pub fn read_grid_vector_text(path: &Path) -> Result<GridVector> {
    Ok(GridVector(parse_values(&read_text(path)?, path)?))
}

fn header(out: &mut Vec<u8>, n: usize, cell_size: f64, rows: usize) {
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&cell_size.to_le_bytes());
    out.extend_from_slice(&(rows as u64).to_le_bytes());
}

pub fn encode_matrix(m: &WeightMatrix, n: usize, cell_size: f64) -> Vec<u8> {
    let mut out = Vec::with_capacity(28 + m.n_rows() * 12 + m.nnz() * 12);
    header(&mut out, n, cell_size, m.n_rows());
    for len in m.row_lengths() {
        out.extend_from_slice(&(len as u32).to_le_bytes());
    }
    for row in m.rows() {
        for c in row.cells {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    for row in m.rows() {
        for w in row.weights {
            out.extend_from_slice(&w.to_le_bytes());
        }
    }
    for r in m.rhs() {
        out.extend_from_slice(&r.to_le_bytes());
    }
    out
}

pub fn encode_grid_vector(v: &GridVector, n: usize, cell_size: f64) -> Vec<u8> {
    let mut out = Vec::with_capacity(28 + v.len() * 8);
    header(&mut out, n, cell_size, 0);
    for x in v.iter() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: PathBuf,
}

impl<'a> Reader<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < k {
            return Err(parse_err(&self.path, 0, format!("truncated container at byte {}", self.pos)));
        }
        let s = &self.bytes[self.pos..self.pos + k];
        self.pos += k;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn header(&mut self) -> Result<(usize, f64, usize)> {
        if self.take(4)? != MAGIC {
            return Err(parse_err(&self.path, 0, "bad magic, expected BRT1"));
        }
        let n = self.u64()? as usize;
        let d = self.f64()?;
        let rows = self.u64()? as usize;
        Ok((n, d, rows))
    }
    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(parse_err(&self.path, 0, "trailing bytes after container"));
        }
        Ok(())
    }
}

/// Decodes a weight matrix; returns it with the grid size and cell size.
pub fn decode_matrix(bytes: &[u8], path: &Path) -> Result<(WeightMatrix, usize, f64)> {
    let mut rd = Reader { bytes, pos: 0, path: path.to_path_buf() };
    let (n, d, n_rows) = rd.header()?;
    let counts: Vec<usize> = (0..n_rows).map(|_| rd.u32().map(|c| c as usize)).collect::<Result<_>>()?;
    let nnz: usize = counts.iter().sum();
    let cells: Vec<u32> = (0..nnz).map(|_| rd.u32()).collect::<Result<_>>()?;
    let weights: Vec<f64> = (0..nnz).map(|_| rd.f64()).collect::<Result<_>>()?;
    let rhs: Vec<f64> = (0..n_rows).map(|_| rd.f64()).collect::<Result<_>>()?;
    rd.finish()?;
    let mut rows = Vec::with_capacity(n_rows);
    let mut at = 0;
    for (j, &c) in counts.iter().enumerate() {
        rows.push((cells[at..at + c].to_vec(), weights[at..at + c].to_vec(), rhs[j]));
        at += c;
    }
    let m = WeightMatrix::from_rows(n * n, rows).map_err(|e| parse_err(path, 0, e.to_string()))?;
    Ok((m, n, d))
}

pub fn decode_grid_vector(bytes: &[u8], path: &Path) -> Result<(GridVector, usize, f64)> {
    let mut rd = Reader { bytes, pos: 0, path: path.to_path_buf() };
    let (n, d, rows) = rd.header()?;
    if rows != 0 {
        return Err(parse_err(path, 0, "container holds a matrix, not a grid vector"));
    }
    let values: Vec<f64> = (0..n * n).map(|_| rd.f64()).collect::<Result<_>>()?;
    rd.finish()?;
    Ok((GridVector(values), n, d))
}

pub fn write_matrix(path: &Path, m: &WeightMatrix, n: usize, cell_size: f64) -> Result<()> {
    write_file(path, &encode_matrix(m, n, cell_size))
}

pub fn read_matrix(path: &Path) -> Result<(WeightMatrix, usize, f64)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_matrix(&bytes, path)
}

pub fn write_grid_vector(path: &Path, v: &GridVector, n: usize, cell_size: f64) -> Result<()> {
    write_file(path, &encode_grid_vector(v, n, cell_size))
}

pub fn read_grid_vector(path: &Path) -> Result<(GridVector, usize, f64)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_grid_vector(&bytes, path)
}
