//! Text artifacts: mesh and field dumps, CSV tables, atomic writes.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::diagnostics::format_f64;
use crate::error::{Error, Result};
use crate::grid::{GraphPatch, GridSpec};

pub const MESH_HEADER: &str = "i,j,x,y,f,g";
pub const FIELD_HEADER: &str = "i,j,name,value";

/// One row per node, row-major.
pub fn mesh_dump(patch: &GraphPatch) -> String {
    let grid = patch.grid();
    let mut out = String::with_capacity(grid.len() * 100);
    out.push_str(MESH_HEADER);
    out.push('\n');
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let (f, g) = patch.at(i, j);
            let _ = writeln!(
                out,
                "{i},{j},{},{},{},{}",
                format_f64(grid.x(i)),
                format_f64(grid.y(j)),
                format_f64(f),
                format_f64(g)
            );
        }
    }
    out
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Inverse of [`mesh_dump`]. Rows may come in any order but must cover a full,
/// uniformly spaced grid.
pub fn parse_mesh(text: &str) -> Result<GraphPatch> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == MESH_HEADER => {}
        _ => return Err(parse_err(1, format!("expected header `{MESH_HEADER}`"))),
    }
    let mut rows = Vec::new();
    for (k, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 6 {
            return Err(parse_err(k + 1, format!("expected 6 columns, found {}", cols.len())));
        }
        let idx = |s: &str| s.parse::<usize>().map_err(|e| parse_err(k + 1, format!("bad index `{s}`: {e}")));
        let num = |s: &str| s.parse::<f64>().map_err(|e| parse_err(k + 1, format!("bad number `{s}`: {e}")));
        rows.push((k + 1, idx(cols[0])?, idx(cols[1])?, num(cols[2])?, num(cols[3])?, num(cols[4])?, num(cols[5])?));
    }
    let nx = rows.iter().map(|r| r.1).max().map_or(0, |m| m + 1);
    let ny = rows.iter().map(|r| r.2).max().map_or(0, |m| m + 1);
    if nx < 3 || ny < 3 || rows.len() != nx * ny {
        return Err(parse_err(text.lines().count(), format!("{} rows do not form a full grid", rows.len())));
    }
    let mut xs = vec![f64::NAN; nx];
    let mut ys = vec![f64::NAN; ny];
    let mut f = vec![f64::NAN; nx * ny];
    let mut g = vec![f64::NAN; nx * ny];
    for &(line, i, j, x, y, fv, gv) in &rows {
        let k = j * nx + i;
        if !f[k].is_nan() {
            return Err(parse_err(line, format!("duplicate node ({i}, {j})")));
        }
        f[k] = fv;
        g[k] = gv;
        for (slot, v) in [(&mut xs[i], x), (&mut ys[j], y)] {
            if slot.is_nan() {
                *slot = v;
            } else if (*slot - v).abs() > 1e-9 * (1.0 + v.abs()) {
                return Err(parse_err(line, format!("inconsistent coordinate at node ({i}, {j})")));
            }
        }
    }
    let hx = (xs[nx - 1] - xs[0]) / (nx - 1) as f64;
    let hy = (ys[ny - 1] - ys[0]) / (ny - 1) as f64;
    let uniform = |c: &[f64], h: f64| c.iter().enumerate().all(|(k, v)| (v - (c[0] + k as f64 * h)).abs() <= 1e-9 * h.abs().max(1.0));
    if !uniform(&xs, hx) || !uniform(&ys, hy) {
        return Err(parse_err(1, "mesh spacing is not uniform"));
    }
    let grid = GridSpec::new(nx, ny, hx, hy, (xs[0], ys[0]))?;
    GraphPatch::from_arrays(grid, f, g)
}

pub fn read_mesh(path: &Path) -> Result<GraphPatch> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mesh(&text)
}

/// Named scalar fields on a grid, dumped as `i,j,name,value`.
#[derive(Debug, Clone)]
pub struct FieldDump {
    grid: GridSpec,
    body: String,
}

impl FieldDump {
    pub fn new(grid: GridSpec) -> Self {
        Self { grid, body: format!("{FIELD_HEADER}\n") }
    }

    /// Field over every node, row-major.
    pub fn nodal(&mut self, name: &str, values: &[f64]) -> &mut Self {
        assert_eq!(values.len(), self.grid.len(), "nodal field `{name}` has wrong length");
        for (k, v) in values.iter().enumerate() {
            let (i, j) = self.grid.coords(k);
            let _ = writeln!(self.body, "{i},{j},{name},{}", format_f64(*v));
        }
        self
    }

    /// Field over interior nodes, row-major.
    pub fn interior(&mut self, name: &str, values: &[f64]) -> &mut Self {
        assert_eq!(values.len(), self.grid.interior_count(), "interior field `{name}` has wrong length");
        for ((i, j), v) in self.grid.interior_nodes().zip(values) {
            let _ = writeln!(self.body, "{i},{j},{name},{}", format_f64(*v));
        }
        self
    }

    pub fn finish(self) -> String {
        self.body
    }
}

/// Cell formatting for CSV tables: floats at 17 significant digits.
pub enum Cell {
    F(f64),
    I(i64),
    U(usize),
    B(bool),
    S(String),
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::F(v) => f.write_str(&format_f64(*v)),
            Cell::I(v) => write!(f, "{v}"),
            Cell::U(v) => write!(f, "{v}"),
            Cell::B(v) => write!(f, "{v}"),
            Cell::S(v) => f.write_str(v),
        }
    }
}

pub fn csv_table(header: &str, rows: impl IntoIterator<Item = Vec<Cell>>) -> String {
    let mut out = format!("{header}\n");
    for row in rows {
        let line: Vec<String> = row.iter().map(ToString::to_string).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Write through a temporary sibling and rename into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| Error::InvalidArgument(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    let result = (|| {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Surface;

    #[test]
    fn mesh_round_trip_is_exact() {
        let grid = GridSpec::rect(7, 5, (-1.0, 0.3), (0.1, 0.9)).unwrap();
        let p = Surface::parse("bump(0.3,0.4)+holomorphic_z3(0.7)").unwrap().patch(grid).unwrap();
        let text = mesh_dump(&p);
        assert_eq!(text.lines().next(), Some(MESH_HEADER));
        let q = parse_mesh(&text).unwrap();
        assert_eq!(q.f(), p.f());
        assert_eq!(q.g(), p.g());
        assert_eq!(mesh_dump(&q), text);
    }

    #[test]
    fn mesh_errors_carry_line_numbers() {
        let bad = "i,j,x,y,f,g\n0,0,0,0,0,0\n1,0,0.5,0,zz,0\n";
        match parse_mesh(bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_mesh("x\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn field_dump_layout() {
        let grid = GridSpec::square(3, 0.0, 1.0).unwrap();
        let mut d = FieldDump::new(grid);
        d.nodal("cos_alpha", &[1.0; 9]).interior("r3", &[0.5]);
        let text = d.finish();
        assert_eq!(text.lines().count(), 11);
        assert_eq!(text.lines().last(), Some("1,1,r3,5.0000000000000000e-1"));
    }

    #[test]
    fn atomic_write_replaces_and_cleans_up() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
