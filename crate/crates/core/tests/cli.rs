//! Exit codes and outputs of the `framescatter` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use framescatter::bank::export_bank;
use framescatter::frames::{build_wavelet_frame, Atom, SemiDiscreteFrame};
use framescatter::io::write_signal;
use framescatter::{Grid, Signal, Spectrum, C64};

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    fn new() -> Self {
        Workspace { dir: tempfile::tempdir().unwrap() }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn config(&self, text: &str) -> PathBuf {
        let p = self.path("run.toml");
        fs::write(&p, text).unwrap();
        p
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_framescatter"))
            .current_dir(self.dir.path())
            .args(args)
            .output()
            .unwrap()
    }
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL_2D: &str = "seed = 1\n[grid]\ndim = 2\nn = 32\n[[frames]]\nkind = \"wavelet\"\nscales = 2\ndirections = 4\n";

fn field_value(line: &str, key: &str) -> f64 {
    let words: Vec<&str> = line.split_whitespace().collect();
    let at = words.iter().position(|w| *w == key).unwrap();
    words[at + 1].parse().unwrap()
}

#[test]
fn frame_check_certifies_tightened_wavelets() {
    let ws = Workspace::new();
    let cfg = ws.config(SMALL_2D);
    let o = ws.run(&["frame-check", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    let line = out.lines().find(|l| l.starts_with("frame 0")).unwrap();
    assert!((field_value(line, "A") - 1.0).abs() <= 1e-9);
    assert!((field_value(line, "B") - 1.0).abs() <= 1e-9);
    assert!(ws.path("out/frames/frame_0/manifest.txt").is_file());
    assert!(out.starts_with("seed 1\n"));
}

#[test]
fn frame_check_rejects_bank_with_hole() {
    let ws = Workspace::new();
    let g = Grid::new(1, 16).unwrap();
    let frame = build_wavelet_frame(g, 2, 1).unwrap();
    let bank = ws.path("bank");
    export_bank(&frame, &bank).unwrap();
    // Zero every atom at frequency 3 and rewrite the files by hand.
    let holed = SemiDiscreteFrame::new(
        frame
            .atoms()
            .iter()
            .map(|a| {
                let mut v = a.response().values().to_vec();
                v[3] = C64::new(0.0, 0.0);
                Atom::new(a.label().clone(), Spectrum::new(g, v).unwrap())
            })
            .collect(),
        frame.output_index(),
    );
    assert!(holed.is_err());
    for (i, a) in frame.atoms().iter().enumerate() {
        let mut v = a.response().values().to_vec();
        v[3] = C64::new(0.0, 0.0);
        framescatter::io::write_spectrum(bank.join(framescatter::bank::atom_file_name(i)), &Spectrum::new(g, v).unwrap())
            .unwrap();
    }
    let cfg = ws.config("[grid]\ndim = 1\nn = 16\n[[frames]]\nkind = \"import\"\npath = \"bank\"\nnormalize = \"none\"\n");
    let o = ws.run(&["frame-check", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("not a frame"), "{}", stdout(&o));
}

#[test]
fn config_errors_exit_one() {
    let ws = Workspace::new();
    let cfg = ws.config("[grid]\ndim = 1\nn = 16\nframes = []\n");
    let o = ws.run(&["frame-check", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("frames"), "{}", stderr(&o));

    let cfg = ws.config("[grid]\ndim = 1\nn = 16\n[[frames]]\nkind = \"wavelet\"\nscales = \"two\"\n");
    let o = ws.run(&["frame-check", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("line 6"), "{}", stderr(&o));

    let o = ws.run(&["frame-check", "--config", "missing.toml"]);
    assert_eq!(code(&o), 1);
    let o = ws.run(&["no-such-command"]);
    assert_eq!(code(&o), 1);
}

fn write_input(ws: &Workspace, signal: &Signal) -> PathBuf {
    let p = ws.path("input.fsct");
    write_signal(&p, signal).unwrap();
    p
}

fn manifest_lines(dir: &Path) -> Vec<String> {
    fs::read_to_string(dir.join("features/manifest.txt"))
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect()
}

#[test]
fn extract_depth_zero_writes_one_feature() {
    let ws = Workspace::new();
    let g = Grid::new(2, 32).unwrap();
    let input = write_input(&ws, &Signal::delta(g));
    let cfg = ws.config(&format!("{SMALL_2D}[scattering]\nmax_depth = 0\n"));
    let o = ws.run(&["extract", "--config", cfg.to_str().unwrap(), "--input", input.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let files: Vec<_> = fs::read_dir(ws.path("out/features"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".fsct"))
        .collect();
    assert_eq!(files, vec!["feature_00000.fsct".to_string()]);
    let lines = manifest_lines(&ws.path("out"));
    assert_eq!(lines[0], "framescatter-features 1");
    assert!(lines.iter().any(|l| l.starts_with("path e ")));
}

#[test]
fn extract_zero_input_has_zero_norms() {
    let ws = Workspace::new();
    let g = Grid::new(2, 32).unwrap();
    let input = write_input(&ws, &Signal::zeros(g));
    let cfg = ws.config(&format!("{SMALL_2D}[scattering]\nmax_depth = 2\n"));
    let o = ws.run(&["extract", "--config", cfg.to_str().unwrap(), "--input", input.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let lines = manifest_lines(&ws.path("out"));
    let paths: Vec<_> = lines.iter().filter(|l| l.starts_with("path ")).collect();
    assert_eq!(paths.len(), 1 + 8 + 64);
    for l in paths {
        let norm: f64 = l.split_whitespace().nth(2).unwrap().parse().unwrap();
        assert_eq!(norm, 0.0);
    }
    assert!(stdout(&o).contains("feature_norm 0.000000e0"));
}

#[test]
fn extract_reads_pgm_and_refuses_loud_banks() {
    let ws = Workspace::new();
    let mut pgm = b"P5\n32 32\n255\n".to_vec();
    pgm.extend((0..32 * 32).map(|i| (i * 7 % 256) as u8));
    fs::write(ws.path("image.pgm"), pgm).unwrap();
    let cfg = ws.config(&format!("{SMALL_2D}[scattering]\nmax_depth = 1\n[io]\ninput = \"image.pgm\"\n"));
    let o = ws.run(&["extract", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let cfg = ws.config(&format!("{SMALL_2D}gain = 2.0\n[scattering]\nmax_depth = 1\n[io]\ninput = \"image.pgm\"\n"));
    let o = ws.run(&["extract", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));

    let o = ws.run(&["extract", "--config", cfg.to_str().unwrap(), "--input", "absent.fsct"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn deform_targets_and_refusal() {
    let ws = Workspace::new();
    let cfg = ws.config(&format!("{SMALL_2D}[deformation]\ncount = 3\nmax_dtau = 0.2\nomega_sup = 0.05\n"));
    let o = ws.run(&["deform", "--config", cfg.to_str().unwrap(), "--seed", "42"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let manifest = fs::read_to_string(ws.path("out/fields/manifest.txt")).unwrap();
    assert!(manifest.contains("seed 42\n"));
    let fields: Vec<_> = manifest.lines().filter(|l| l.starts_with("field ")).collect();
    assert_eq!(fields.len(), 3);
    for l in fields {
        assert!((field_value(l, "jacobian_sup") - 0.2).abs() <= 0.05 * 0.2, "{l}");
        assert!((field_value(l, "omega_sup") - 0.05).abs() <= 0.05 * 0.05, "{l}");
        assert!(field_value(l, "min_determinant") >= 0.5);
    }

    let cfg = ws.config(&format!("{SMALL_2D}[deformation]\nmax_dtau = 0.3\n"));
    let o = ws.run(&["deform", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("1/(2d)"), "{}", stderr(&o));
}

#[test]
fn verify_passes_and_sweep_is_monotone() {
    let ws = Workspace::new();
    let cfg = ws.config(&format!(
        "{SMALL_2D}[scattering]\nmax_depth = 2\n[deformation]\nmax_dtau = 0.2\nomega_sup = 0.02\n\
         [verification]\nshifts = 2\npairs = 2\nfields = 2\nbandwidth = 4\nsweep = [1.0, 0.0, 0.5, 0.25]\n"
    ));
    let o = ws.run(&["verify", "--config", cfg.to_str().unwrap(), "--out", "v"]);
    assert_eq!(code(&o), 0, "{}\n{}", stdout(&o), stderr(&o));
    let report = fs::read_to_string(ws.path("v/verify/report.jsonl")).unwrap();
    let records: Vec<serde_json::Value> = report.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    // invariance 1, lipschitz+nonexpansive 2 per pair, stability/intermediate/energy per field.
    assert_eq!(records.len(), 1 + 4 + 6);
    for r in &records {
        assert_eq!(r["pass"], true);
        assert_eq!(r["inputs_digest"].as_str().unwrap().len(), 64);
    }
    let sweep = fs::read_to_string(ws.path("v/verify/sweep.tsv")).unwrap();
    let bounds: Vec<f64> = sweep
        .lines()
        .skip(2)
        .map(|l| l.split('\t').nth(5).unwrap().parse().unwrap())
        .collect();
    assert_eq!(bounds.len(), 4);
    assert!(bounds.windows(2).all(|w| w[0] <= w[1]), "{bounds:?}");
}

#[test]
fn verify_refuses_unnormalized_bank() {
    let ws = Workspace::new();
    let cfg = ws.config(&format!(
        "{SMALL_2D}gain = 2.0\n[scattering]\nmax_depth = 1\n[verification]\nsuites = [\"stability\"]\nfields = 1\nbandwidth = 4\n"
    ));
    let o = ws.run(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("hypothesis"), "{}", stderr(&o));
}
