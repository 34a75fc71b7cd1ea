//! Dataset ingestion: IDX image/label pairs, portable graymaps (P2/P5) and
//! plain matrix text (`rows cols` header followed by whitespace-separated reals).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::grid::ImageGrid;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn read_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Truncated {
            path: path.to_path_buf(),
            expected: offset + 4,
            found: bytes.len(),
        })
}

fn check_magic(bytes: &[u8], expected: u32, path: &Path) -> Result<()> {
    let found = read_u32(bytes, 0, path)?;
    if found != expected {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            expected,
            found,
        });
    }
    Ok(())
}

/// Parses an IDX image file; pixels are divided by 255.
pub fn load_idx_images(path: impl AsRef<Path>) -> Result<Vec<ImageGrid>> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    check_magic(&bytes, IDX_IMAGES_MAGIC, path)?;
    let count = read_u32(&bytes, 4, path)? as usize;
    let rows = read_u32(&bytes, 8, path)? as usize;
    let cols = read_u32(&bytes, 12, path)? as usize;
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidImage(format!(
            "{}: zero image dimension {rows}x{cols}",
            path.display()
        )));
    }
    let size = rows * cols;
    let expected = 16 + count * size;
    if bytes.len() < expected {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected,
            found: bytes.len(),
        });
    }
    Ok(bytes[16..expected]
        .chunks_exact(size)
        .map(|px| ImageGrid::from_raw(rows, cols, px.iter().map(|&b| b as f64 / 255.0).collect()))
        .collect())
}

/// Parses an IDX label file.
pub fn load_idx_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    check_magic(&bytes, IDX_LABELS_MAGIC, path)?;
    let count = read_u32(&bytes, 4, path)? as usize;
    let expected = 8 + count;
    if bytes.len() < expected {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected,
            found: bytes.len(),
        });
    }
    Ok(bytes[8..expected].iter().map(|&b| b as usize).collect())
}

/// Loads an IDX image/label pair into a dataset.
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let images = load_idx_images(images_path)?;
    let labels = load_idx_labels(labels_path)?;
    if images.len() != labels.len() {
        return Err(Error::CountMismatch {
            images: images.len(),
            labels: labels.len(),
        });
    }
    LabeledDataset::new(images, labels, None)
}

/// Writes images (values clamped to `[0,1]`, quantized to bytes) as an IDX image file.
pub fn write_idx_images(path: impl AsRef<Path>, images: &[ImageGrid]) -> Result<()> {
    let (rows, cols) = images.first().map(|i| i.dims()).unwrap_or((0, 0));
    let mut out = Vec::with_capacity(16 + images.len() * rows * cols);
    out.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    out.extend_from_slice(&(images.len() as u32).to_be_bytes());
    out.extend_from_slice(&(rows as u32).to_be_bytes());
    out.extend_from_slice(&(cols as u32).to_be_bytes());
    for img in images {
        if img.dims() != (rows, cols) {
            return Err(Error::InconsistentDimensions(format!(
                "IDX images must share one size, found {:?} and {:?}",
                (rows, cols),
                img.dims()
            )));
        }
        out.extend(img.samples().iter().map(|&v| quantize(v, 255)));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_idx_labels(path: impl AsRef<Path>, labels: &[usize]) -> Result<()> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    for &l in labels {
        let b = u8::try_from(l)
            .map_err(|_| Error::InvalidConfig(format!("label {l} does not fit in a byte")))?;
        out.push(b);
    }
    fs::write(path, out)?;
    Ok(())
}

fn quantize(v: f64, maxval: u32) -> u8 {
    (v.clamp(0.0, 1.0) * maxval as f64).round() as u8
}

/// Header tokenizer shared by P2/P5: skips whitespace and `#` comments.
struct Tokens<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn next_token(&mut self) -> Option<&'a str> {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.bytes.len() && self.bytes[self.pos] == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        if self.pos >= self.bytes.len() {
            return None;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).ok()
    }

    fn next_number<T: std::str::FromStr>(&mut self, what: &str) -> Result<T> {
        let tok = self
            .next_token()
            .ok_or_else(|| Error::UnsupportedFormat(format!("missing {what}")))?;
        tok.parse()
            .map_err(|_| Error::UnsupportedFormat(format!("cannot parse {what} from {tok:?}")))
    }
}

/// Loads a P2/P5 graymap (scaled by maxval into `[0,1]`) or a plain matrix text file (raw values).
pub fn load_gray_image(path: impl AsRef<Path>) -> Result<ImageGrid> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    parse_gray_image(&bytes, path)
}

pub(crate) fn parse_gray_image(bytes: &[u8], path: &Path) -> Result<ImageGrid> {
    let mut tok = Tokens { bytes, pos: 0 };
    let magic = tok
        .next_token()
        .ok_or_else(|| Error::UnsupportedFormat(format!("{}: empty file", path.display())))?;
    match magic {
        "P2" | "P5" => {
            let width: usize = tok.next_number("width")?;
            let height: usize = tok.next_number("height")?;
            let maxval: u32 = tok.next_number("maxval")?;
            if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
                return Err(Error::UnsupportedFormat(format!(
                    "{}: bad header {width}x{height} maxval {maxval}",
                    path.display()
                )));
            }
            let n = width * height;
            let scale = maxval as f64;
            let samples = if magic == "P2" {
                let mut s = Vec::with_capacity(n);
                while let Some(t) = tok.next_token() {
                    let v: u32 = t.parse().map_err(|_| {
                        Error::UnsupportedFormat(format!("{}: bad sample {t:?}", path.display()))
                    })?;
                    if v > maxval {
                        return Err(Error::UnsupportedFormat(format!(
                            "{}: sample {v} exceeds maxval {maxval}",
                            path.display()
                        )));
                    }
                    s.push(v as f64 / scale);
                }
                if s.len() != n {
                    return Err(truncation(path, n, s.len()));
                }
                s
            } else {
                // Exactly one whitespace byte separates maxval from the raster.
                let start = tok.pos + 1;
                let width_bytes = if maxval < 256 { 1 } else { 2 };
                let raster = bytes.get(start..).unwrap_or(&[]);
                if raster.len() < n * width_bytes {
                    return Err(truncation(path, n * width_bytes, raster.len()));
                }
                if width_bytes == 1 {
                    raster[..n].iter().map(|&b| b as f64 / scale).collect()
                } else {
                    raster[..2 * n]
                        .chunks_exact(2)
                        .map(|b| u16::from_be_bytes([b[0], b[1]]) as f64 / scale)
                        .collect()
                }
            };
            ImageGrid::new(height, width, samples)
        }
        _ => parse_matrix_text(bytes, path),
    }
}

fn truncation(path: &Path, expected: usize, found: usize) -> Error {
    Error::Truncated {
        path: path.to_path_buf(),
        expected,
        found,
    }
}

fn parse_matrix_text(bytes: &[u8], path: &Path) -> Result<ImageGrid> {
    let text = std::str::from_utf8(bytes)
        .map_err(|_| Error::UnsupportedFormat(format!("{}: not a graymap or text matrix", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| Error::UnsupportedFormat(format!("{}: empty file", path.display())))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::UnsupportedFormat(format!("{}: expected a `rows cols` header", path.display())))?;
    let [rows, cols] = dims[..] else {
        return Err(Error::UnsupportedFormat(format!(
            "{}: expected a `rows cols` header, found {header:?}",
            path.display()
        )));
    };
    let mut samples = Vec::with_capacity(rows * cols);
    for (i, line) in lines.enumerate() {
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::UnsupportedFormat(format!("{}: bad number on row {i}", path.display())))?;
        if row.len() != cols {
            return Err(Error::InconsistentDimensions(format!(
                "{}: row {i} has {} values, header declares {cols}",
                path.display(),
                row.len()
            )));
        }
        samples.extend(row);
    }
    if samples.len() != rows * cols {
        return Err(truncation(path, rows * cols, samples.len()));
    }
    ImageGrid::new(rows, cols, samples)
}

/// Writes a binary P5 graymap with maxval 255; values are clamped to `[0,1]`.
pub fn write_pgm(path: impl AsRef<Path>, img: &ImageGrid) -> Result<()> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.samples().iter().map(|&v| quantize(v, 255)));
    fs::write(path, out)?;
    Ok(())
}

/// Writes the plain matrix text format at full precision.
pub fn write_matrix_text(path: impl AsRef<Path>, img: &ImageGrid) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(f, "{} {}", img.height(), img.width())?;
    for r in 0..img.height() {
        let row: Vec<String> = img.row(r).iter().map(|v| v.to_string()).collect();
        writeln!(f, "{}", row.join(" "))?;
    }
    f.flush()?;
    Ok(())
}

/// Loads a directory tree of graymaps laid out as `<root>/<class>/<file>`.
///
/// Class ids follow the sorted subdirectory names; files are read in sorted order.
pub fn load_class_directory(root: impl AsRef<Path>) -> Result<(LabeledDataset, Vec<String>)> {
    let root = root.as_ref();
    let mut classes: Vec<PathBuf> = fs::read_dir(root)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    classes.sort();
    if classes.is_empty() {
        return Err(Error::Empty(format!("no class subdirectories under {}", root.display())));
    }
    let mut images = Vec::new();
    let mut labels = Vec::new();
    let mut names = Vec::new();
    for (id, dir) in classes.iter().enumerate() {
        names.push(dir.file_name().unwrap_or_default().to_string_lossy().into_owned());
        for file in list_gray_files(dir)? {
            images.push(load_gray_image(&file)?);
            labels.push(id);
        }
    }
    let ds = LabeledDataset::new(images, labels, Some(classes.len()))?;
    Ok((ds, names))
}

/// Sorted `.pgm`/`.txt` files directly inside `dir`.
pub fn list_gray_files(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && matches!(
                    p.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).as_deref(),
                    Some("pgm") | Some("txt")
                )
        })
        .collect();
    files.sort();
    Ok(files)
}
