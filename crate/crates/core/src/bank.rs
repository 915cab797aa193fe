//! Frame bank directories.
//!
//! ```text
//! <dir>/manifest.txt
//! <dir>/atom_0000.fsct   one raw spectrum per atom (FFT order)
//! ```
//!
//! The manifest is line oriented:
//!
//! ```text
//! framescatter-bank 1
//! grid <d> <n>
//! output_index <i>
//! bounds <A> <B>
//! atoms <count>
//! atom <i> <label> <file>
//! ```
//!
//! On import the bounds are re-certified from the spectra; the recorded
//! values are informational.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::frames::{Atom, AtomLabel, SemiDiscreteFrame};
use crate::io::{read_spectrum, write_spectrum};
use crate::signal::Grid;

pub const MANIFEST: &str = "manifest.txt";
const HEADER: &str = "framescatter-bank 1";

pub fn atom_file_name(index: usize) -> String {
    format!("atom_{index:04}.fsct")
}

pub fn bank_manifest(frame: &SemiDiscreteFrame) -> String {
    let grid = frame.grid();
    let bounds = frame.bounds();
    let mut out = String::new();
    writeln!(out, "{HEADER}").unwrap();
    writeln!(out, "grid {} {}", grid.dim(), grid.n()).unwrap();
    writeln!(out, "output_index {}", frame.output_index()).unwrap();
    writeln!(out, "bounds {:.17e} {:.17e}", bounds.lower, bounds.upper).unwrap();
    writeln!(out, "atoms {}", frame.len()).unwrap();
    for (i, atom) in frame.atoms().iter().enumerate() {
        writeln!(out, "atom {i} {} {}", atom.label(), atom_file_name(i)).unwrap();
    }
    out
}

pub fn export_bank(frame: &SemiDiscreteFrame, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    for (i, atom) in frame.atoms().iter().enumerate() {
        write_spectrum(dir.join(atom_file_name(i)), atom.response())?;
    }
    fs::write(dir.join(MANIFEST), bank_manifest(frame))?;
    Ok(())
}

fn field<'a>(line_no: usize, line: &'a str, key: &str, arity: usize) -> Result<Vec<&'a str>> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some(key) {
        return Err(Error::Format(format!("manifest line {line_no}: expected `{key}`")));
    }
    let rest: Vec<&str> = parts.collect();
    if rest.len() != arity {
        return Err(Error::Format(format!(
            "manifest line {line_no}: `{key}` takes {arity} values, found {}",
            rest.len()
        )));
    }
    Ok(rest)
}

fn parse_num<T: std::str::FromStr>(line_no: usize, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Format(format!("manifest line {line_no}: bad number {s:?}")))
}

/// Reads and re-certifies a bank. A bank with a frequency hole fails with
/// `Error::NotAFrame`.
pub fn import_bank(dir: impl AsRef<Path>) -> Result<SemiDiscreteFrame> {
    let dir = dir.as_ref();
    let text = fs::read_to_string(dir.join(MANIFEST))?;
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect();
    let mut it = lines.into_iter();
    let mut next = |what: &str| {
        it.next()
            .ok_or_else(|| Error::Format(format!("manifest ends before `{what}`")))
    };

    let (no, header) = next("header")?;
    if header != HEADER {
        return Err(Error::Format(format!("manifest line {no}: expected `{HEADER}`")));
    }
    let (no, line) = next("grid")?;
    let g = field(no, line, "grid", 2)?;
    let grid = Grid::new(parse_num(no, g[0])?, parse_num(no, g[1])?)
        .map_err(|e| Error::Format(format!("manifest line {no}: {e}")))?;
    let (no, line) = next("output_index")?;
    let output_index: usize = parse_num(no, field(no, line, "output_index", 1)?[0])?;
    let (no, line) = next("bounds")?;
    let b = field(no, line, "bounds", 2)?;
    let _: f64 = parse_num(no, b[0])?;
    let _: f64 = parse_num(no, b[1])?;
    let (no, line) = next("atoms")?;
    let count: usize = parse_num(no, field(no, line, "atoms", 1)?[0])?;

    let mut atoms = Vec::with_capacity(count);
    for expected in 0..count {
        let (no, line) = next("atom")?;
        let a = field(no, line, "atom", 3)?;
        let index: usize = parse_num(no, a[0])?;
        if index != expected {
            return Err(Error::Format(format!("manifest line {no}: atom {expected} expected, found {index}")));
        }
        let label: AtomLabel = a[1].parse()?;
        let file = Path::new(a[2]);
        if file.components().count() != 1 {
            return Err(Error::Format(format!("manifest line {no}: atom file must be a bare name")));
        }
        let response = read_spectrum(dir.join(file))?;
        grid.check_same(&response.grid())?;
        atoms.push(Atom::new(label, response));
    }
    if let Ok((no, _)) = next("end") {
        return Err(Error::Format(format!("manifest line {no}: trailing content")));
    }
    SemiDiscreteFrame::new(atoms, output_index)
}
