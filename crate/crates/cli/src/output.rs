//! CSV and JSON emission. Numbers are written with 9 significant digits in
//! the style of C's `%.9g`, independent of locale, so files are bit-stable.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use hotlane_core::SystemState;
use serde::Serialize;

use crate::failure::Failure;

pub const TRAJECTORY_HEADER: &str = "t,lambda1,lambda2,zeta,w,pi,u,g1,g2,q1,q2,q3,eta";

const SIGNIFICANT: i32 = 9;

/// Formats `x` like `%.9g`.
pub fn fmt_g(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (SIGNIFICANT - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..SIGNIFICANT).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exp.abs())
    } else {
        let decimals = (SIGNIFICANT - 1 - exp) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Writes a header and rows of numbers.
pub fn write_csv<'a, W: Write + ?Sized>(
    w: &mut W,
    header: &str,
    rows: impl IntoIterator<Item = &'a [f64]>,
) -> io::Result<()> {
    writeln!(w, "{header}")?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|&v| fmt_g(v)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn trajectory_row(s: &SystemState) -> [f64; 13] {
    [
        s.t, s.lambda1, s.lambda2, s.zeta, s.w, s.pi, s.u, s.g1, s.g2, s.q1, s.q2, s.q3, s.eta,
    ]
}

pub fn write_trajectory<W: Write + ?Sized>(w: &mut W, states: &[SystemState]) -> io::Result<()> {
    let rows: Vec<[f64; 13]> = states.iter().map(trajectory_row).collect();
    write_csv(w, TRAJECTORY_HEADER, rows.iter().map(|r| &r[..]))
}

pub fn write_json<W: Write + ?Sized, T: Serialize>(w: &mut W, value: &T) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    writeln!(w)
}

/// Where a subcommand's primary output goes.
pub enum Sink {
    Stdout,
    Dir(PathBuf),
}

impl Sink {
    pub fn new(out: Option<&Path>) -> Result<Self, Failure> {
        match out {
            None => Ok(Sink::Stdout),
            Some(dir) => {
                fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
                Ok(Sink::Dir(dir.to_path_buf()))
            }
        }
    }

    /// Runs `f` against stdout, or against `<dir>/<name>` when writing to a
    /// directory.
    pub fn emit(
        &self,
        name: &str,
        f: impl FnOnce(&mut dyn Write) -> io::Result<()>,
    ) -> Result<(), Failure> {
        match self {
            Sink::Stdout => {
                let stdout = io::stdout();
                let mut w = io::BufWriter::new(stdout.lock());
                match f(&mut w).and_then(|_| w.flush()) {
                    // reader went away, e.g. piped into `head`
                    Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
                    other => other.map_err(|e| Failure::io("<stdout>", e)),
                }
            }
            Sink::Dir(dir) => {
                let path = dir.join(name);
                let file = fs::File::create(&path).map_err(|e| Failure::io(&path, e))?;
                let mut w = io::BufWriter::new(file);
                f(&mut w)
                    .and_then(|_| w.flush())
                    .map_err(|e| Failure::io(&path, e))
            }
        }
    }

    pub fn is_stdout(&self) -> bool {
        matches!(self, Sink::Stdout)
    }
}
