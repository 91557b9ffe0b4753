//! Plain-text dumps of a [`ChannelSet`] for test fixtures.
//!
//! ```text
//! cfisac-channels 1
//! dims M N K T L
//! inter_ap 0|1
//! zeta_h            one line per row, M lines of K reals
//! zeta_gdl          M lines of T
//! zeta_gul          N lines of T
//! zeta_f            M lines of N
//! alpha             one line of T `re im` pairs
//! h                 M·K lines, one vector of L `re im` pairs each
//! g_dl              M·T lines
//! g_ul              N·T lines
//! f                 M·N lines of L·L pairs (row-major), only if inter_ap = 1
//! ```
//!
//! Vectors follow the row-major order of their `(ap, user|target)` table.
//! Every number is written with 17 significant digits so that parsing
//! reproduces the set bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use cfisac_core::channel::{ChannelSet, LargeScale};
use cfisac_core::linalg::Table;
use cfisac_core::{CMatrix, CVector, Complex64};
use nalgebra::DMatrix;

use crate::error::{HarnessError, Result};

const MAGIC: &str = "cfisac-channels 1";

fn real(out: &mut String, v: f64) {
    let _ = write!(out, "{v:.16e}");
}

fn pairs<'a>(out: &mut String, it: impl IntoIterator<Item = &'a Complex64>) {
    for (i, z) in it.into_iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        real(out, z.re);
        out.push(' ');
        real(out, z.im);
    }
    out.push('\n');
}

fn real_matrix(out: &mut String, label: &str, m: &DMatrix<f64>) {
    out.push_str(label);
    out.push('\n');
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if c > 0 {
                out.push(' ');
            }
            real(out, m[(r, c)]);
        }
        out.push('\n');
    }
}

fn vector_table(out: &mut String, label: &str, t: &Table<CVector>) {
    out.push_str(label);
    out.push('\n');
    for v in t.iter() {
        pairs(out, v.iter());
    }
}

pub fn dump_channels(ch: &ChannelSet) -> String {
    let ls = &ch.large_scale;
    // an unsampled inter-AP table is 0 × 0, a sampled one is M × N even when empty
    let inter = (ch.f.rows(), ch.f.cols()) == (ls.dl_aps(), ls.ul_aps()) && ls.dl_aps() + ls.ul_aps() > 0;
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(
        out,
        "dims {} {} {} {} {}",
        ls.dl_aps(),
        ls.ul_aps(),
        ls.users(),
        ls.targets(),
        ls.antennas
    );
    let _ = writeln!(out, "inter_ap {}", u8::from(inter));
    real_matrix(&mut out, "zeta_h", &ls.zeta_h);
    real_matrix(&mut out, "zeta_gdl", &ls.zeta_gdl);
    real_matrix(&mut out, "zeta_gul", &ls.zeta_gul);
    real_matrix(&mut out, "zeta_f", &ls.zeta_f);
    out.push_str("alpha\n");
    pairs(&mut out, &ls.alpha);
    vector_table(&mut out, "h", &ch.h);
    vector_table(&mut out, "g_dl", &ch.g_dl);
    vector_table(&mut out, "g_ul", &ch.g_ul);
    if inter {
        out.push_str("f\n");
        for m in ch.f.iter() {
            // row-major, unlike nalgebra's storage order
            let mut row = Vec::with_capacity(m.len());
            for r in 0..m.nrows() {
                row.extend(m.row(r).iter().copied());
            }
            pairs(&mut out, &row);
        }
    }
    out
}

struct Lines<'a> {
    it: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str> {
        let (i, line) = self.it.next().ok_or_else(|| HarnessError::format("channel dump", "unexpected end of file"))?;
        self.last = i + 1;
        Ok(line)
    }

    fn err(&self, detail: impl std::fmt::Display) -> HarnessError {
        HarnessError::format("channel dump", format!("line {}: {detail}", self.last))
    }

    fn expect(&mut self, label: &str) -> Result<()> {
        let line = self.next()?;
        if line.trim() != label {
            return Err(self.err(format!("expected `{label}`, found `{line}`")));
        }
        Ok(())
    }

    fn reals(&mut self, count: usize) -> Result<Vec<f64>> {
        let line = self.next()?;
        let vals = line
            .split_whitespace()
            .map(str::parse::<f64>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| self.err(e))?;
        if vals.len() != count {
            return Err(self.err(format!("expected {count} numbers, found {}", vals.len())));
        }
        Ok(vals)
    }

    fn complex(&mut self, count: usize) -> Result<Vec<Complex64>> {
        Ok(self.reals(2 * count)?.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect())
    }

    fn real_matrix(&mut self, label: &str, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
        self.expect(label)?;
        let mut m = DMatrix::zeros(rows, cols);
        for r in 0..rows {
            for (c, v) in self.reals(cols)?.into_iter().enumerate() {
                m[(r, c)] = v;
            }
        }
        Ok(m)
    }

    fn vector_table(&mut self, label: &str, rows: usize, cols: usize, len: usize) -> Result<Table<CVector>> {
        self.expect(label)?;
        let mut flat = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            flat.push(CVector::from_vec(self.complex(len)?));
        }
        let mut it = flat.into_iter();
        Ok(Table::from_fn(rows, cols, |_, _| it.next().expect("counted above")))
    }
}

pub fn parse_channels(text: &str) -> Result<ChannelSet> {
    let mut lines = Lines { it: text.lines().enumerate(), last: 0 };
    lines.expect(MAGIC)?;
    let dims_line = lines.next()?;
    let dims: Vec<usize> = dims_line
        .strip_prefix("dims ")
        .ok_or_else(|| lines.err("expected `dims`"))?
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| lines.err(e))?;
    let [m, n, k, t, l] = dims[..] else {
        return Err(lines.err("`dims` needs five counts"));
    };
    let inter = match lines.next()? {
        "inter_ap 0" => false,
        "inter_ap 1" => true,
        other => return Err(lines.err(format!("bad inter_ap line `{other}`"))),
    };
    let zeta_h = lines.real_matrix("zeta_h", m, k)?;
    let zeta_gdl = lines.real_matrix("zeta_gdl", m, t)?;
    let zeta_gul = lines.real_matrix("zeta_gul", n, t)?;
    let zeta_f = lines.real_matrix("zeta_f", m, n)?;
    lines.expect("alpha")?;
    let alpha = lines.complex(t)?;
    let large_scale = LargeScale::new(zeta_h, zeta_gdl, zeta_gul, zeta_f, alpha, l)?;
    let h = lines.vector_table("h", m, k, l)?;
    let g_dl = lines.vector_table("g_dl", m, t, l)?;
    let g_ul = lines.vector_table("g_ul", n, t, l)?;
    let f = if inter {
        lines.expect("f")?;
        let mut flat = Vec::with_capacity(m * n);
        for _ in 0..m * n {
            flat.push(CMatrix::from_row_slice(l, l, &lines.complex(l * l)?));
        }
        let mut it = flat.into_iter();
        Table::from_fn(m, n, |_, _| it.next().expect("counted above"))
    } else {
        Table::empty()
    };
    if let Some((i, extra)) = lines.it.find(|(_, s)| !s.trim().is_empty()) {
        return Err(HarnessError::format("channel dump", format!("line {}: trailing `{extra}`", i + 1)));
    }
    Ok(ChannelSet { h, g_dl, g_ul, f, large_scale })
}

pub fn write_channels(ch: &ChannelSet, path: &Path) -> Result<()> {
    std::fs::write(path, dump_channels(ch)).map_err(|e| HarnessError::io(path, e))
}

pub fn read_channels(path: &Path) -> Result<ChannelSet> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_channels(&text)
}
