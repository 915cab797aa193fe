//! Raw sample files and 8-bit PGM import.
//!
//! Layout of a raw file (all integers little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "FSCT"
//! 4       2     version (1)
//! 6       2     dimension d
//! 8       4     samples per axis n
//! 12      4     reserved (0)
//! 16      16·nᵈ (re: f64, im: f64) pairs, row-major
//! ```
//!
//! Spectra use the same layout with samples in FFT order.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::signal::{Grid, Signal, Spectrum, C64};

pub const MAGIC: &[u8; 4] = b"FSCT";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 16;

pub fn write_samples<W: Write>(mut w: W, grid: Grid, values: &[C64]) -> Result<()> {
    let mut header = [0u8; HEADER_LEN];
    header[0..4].copy_from_slice(MAGIC);
    header[4..6].copy_from_slice(&VERSION.to_le_bytes());
    header[6..8].copy_from_slice(&(grid.dim() as u16).to_le_bytes());
    header[8..12].copy_from_slice(&(grid.n() as u32).to_le_bytes());
    w.write_all(&header)?;
    for v in values {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_samples<R: Read>(mut r: R) -> Result<(Grid, Vec<C64>)> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)
        .map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    if &header[0..4] != MAGIC {
        return Err(Error::Format("bad magic, expected FSCT".into()));
    }
    let version = u16::from_le_bytes([header[4], header[5]]);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let dim = u16::from_le_bytes([header[6], header[7]]) as usize;
    let n = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let grid = Grid::new(dim, n).map_err(|e| Error::Format(format!("header: {e}")))?;

    let mut body = Vec::with_capacity(grid.len() * 16);
    r.read_to_end(&mut body)?;
    if body.len() != grid.len() * 16 {
        return Err(Error::Format(format!(
            "expected {} payload bytes, found {}",
            grid.len() * 16,
            body.len()
        )));
    }
    let values = body
        .chunks_exact(16)
        .map(|c| {
            C64::new(
                f64::from_le_bytes(c[0..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..16].try_into().unwrap()),
            )
        })
        .collect();
    Ok((grid, values))
}

/// Serializes a signal into an in-memory raw file.
pub fn signal_bytes(signal: &Signal) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + signal.values().len() * 16);
    write_samples(&mut out, signal.grid(), signal.values()).expect("writing to a Vec cannot fail");
    out
}

pub fn write_signal(path: impl AsRef<Path>, signal: &Signal) -> Result<()> {
    let file = fs::File::create(path)?;
    write_samples(BufWriter::new(file), signal.grid(), signal.values())
}

pub fn read_signal(path: impl AsRef<Path>) -> Result<Signal> {
    let (grid, values) = read_samples(BufReader::new(fs::File::open(path)?))?;
    Signal::new(grid, values)
}

pub fn write_spectrum(path: impl AsRef<Path>, spectrum: &Spectrum) -> Result<()> {
    let file = fs::File::create(path)?;
    write_samples(BufWriter::new(file), spectrum.grid(), spectrum.values())
}

pub fn read_spectrum(path: impl AsRef<Path>) -> Result<Spectrum> {
    let (grid, values) = read_samples(BufReader::new(fs::File::open(path)?))?;
    Spectrum::new(grid, values)
}

/// Parses an 8-bit PGM (`P2` or `P5`) into a real signal on a `d = 2` grid,
/// mapping pixel values to `[0, 1]`. The image must be square with a
/// power-of-two side.
pub fn parse_pgm(bytes: &[u8]) -> Result<Signal> {
    let mut pos = 0usize;
    let mut token = || -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("truncated PGM header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let magic = token()?;
    let number = |s: String| -> Result<usize> {
        s.parse::<usize>()
            .map_err(|_| Error::Format(format!("bad PGM header field {s:?}")))
    };
    let width = number(token()?)?;
    let height = number(token()?)?;
    let maxval = number(token()?)?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::Format(format!("only 8-bit PGM is supported (maxval {maxval})")));
    }
    if width != height {
        return Err(Error::Format(format!("PGM must be square, got {width}x{height}")));
    }
    let grid = Grid::new(2, width).map_err(|e| Error::Format(format!("PGM size: {e}")))?;
    let count = width * height;
    let pixels: Vec<u8> = match magic.as_str() {
        "P5" => {
            // Exactly one whitespace byte separates the header from the raster.
            let start = pos + 1;
            let raster = bytes
                .get(start..start + count)
                .ok_or_else(|| Error::Format("truncated PGM raster".into()))?;
            raster.to_vec()
        }
        "P2" => {
            let mut px = Vec::with_capacity(count);
            for _ in 0..count {
                let v = number(token()?)?;
                if v > maxval {
                    return Err(Error::Format(format!("pixel {v} exceeds maxval {maxval}")));
                }
                px.push(v as u8);
            }
            px
        }
        other => return Err(Error::Format(format!("unsupported PGM magic {other:?}"))),
    };
    let scale = 1.0 / maxval as f64;
    let values: Vec<f64> = pixels.iter().map(|&p| p as f64 * scale).collect();
    Signal::from_real(grid, &values)
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Signal> {
    parse_pgm(&fs::read(path)?)
}

/// Reads either a raw sample file or a PGM image, chosen by content.
pub fn read_input(path: impl AsRef<Path>) -> Result<Signal> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(MAGIC) {
        let (grid, values) = read_samples(bytes.as_slice())?;
        Signal::new(grid, values)
    } else if bytes.starts_with(b"P5") || bytes.starts_with(b"P2") {
        parse_pgm(&bytes)
    } else {
        Err(Error::Format("input is neither a raw FSCT file nor a PGM image".into()))
    }
}
