//! Plain-text grid files:
//!
//! ```text
//! GRID nx ny h ox oy mask=<shape descriptor>
//! v00 v10 v20 ...
//! ```
//!
//! followed by `nx * ny` whitespace-separated values in row-major order
//! (`x1` fastest). `Outside` nodes are written as `nan`.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use super::{DomainMask, GridSpec, ScalarField, Shape};
use crate::error::{Error, Result};

pub const GRID_MAGIC: &str = "GRID";

pub fn write_grid_file(field: &ScalarField, path: &Path) -> Result<()> {
    std::fs::write(path, format_grid(field))?;
    Ok(())
}

pub(crate) fn format_grid(field: &ScalarField) -> String {
    let g = field.grid();
    let mut out = String::with_capacity(g.len() * 24 + 128);
    let _ = writeln!(
        out,
        "{GRID_MAGIC} {} {} {} {} {} mask={}",
        g.nx,
        g.ny,
        g.h,
        g.origin[0],
        g.origin[1],
        field.mask().shape().descriptor()
    );
    for j in 0..g.ny {
        let row: Vec<String> = (0..g.nx)
            .map(|i| {
                let v = field.at(i, j);
                if v.is_nan() {
                    "nan".to_string()
                } else {
                    format!("{v:e}")
                }
            })
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_grid_file(path: &Path) -> Result<ScalarField> {
    parse_grid_file(&std::fs::read_to_string(path)?)
}

pub fn parse_grid_file(text: &str) -> Result<ScalarField> {
    let mut lines = text.lines().enumerate();
    let (line_no, header) = lines
        .by_ref()
        .find(|(_, l)| !l.trim().is_empty())
        .ok_or(Error::Parse { line: 1, message: "empty grid file".into() })?;
    let line = line_no + 1;
    let perr = |message: String| Error::Parse { line, message };

    let mut tokens = header.split_whitespace();
    if tokens.next() != Some(GRID_MAGIC) {
        return Err(perr(format!("expected header starting with '{GRID_MAGIC}'")));
    }
    let mut num = |name: &str| -> Result<f64> {
        let t = tokens.next().ok_or_else(|| perr(format!("missing {name}")))?;
        t.parse::<f64>().map_err(|e| perr(format!("bad {name} '{t}': {e}")))
    };
    let nx = num("nx")?;
    let ny = num("ny")?;
    let h = num("h")?;
    let ox = num("ox")?;
    let oy = num("oy")?;
    let shape_tok = tokens.collect::<Vec<_>>().join("");
    let shape = match shape_tok.strip_prefix("mask=") {
        Some(desc) => Shape::parse_descriptor(desc).map_err(perr)?,
        None => return Err(perr("missing mask=<shape> descriptor".into())),
    };
    if nx.fract() != 0.0 || ny.fract() != 0.0 || nx < 0.0 || ny < 0.0 {
        return Err(perr("nx and ny must be non-negative integers".into()));
    }
    let grid = GridSpec::new([ox, oy], h, nx as usize, ny as usize).map_err(|e| perr(e.to_string()))?;
    let mask = Arc::new(DomainMask::new(grid, shape));

    let mut values = Vec::with_capacity(grid.len());
    for (k, l) in lines {
        for tok in l.split_whitespace() {
            let v = if tok.eq_ignore_ascii_case("nan") {
                f64::NAN
            } else {
                tok.parse::<f64>()
                    .map_err(|e| Error::Parse { line: k + 1, message: format!("bad value '{tok}': {e}") })?
            };
            if values.len() == grid.len() {
                return Err(Error::Parse { line: k + 1, message: format!("more than nx*ny = {} values", grid.len()) });
            }
            let idx = values.len();
            if mask.is_active(idx) && !v.is_finite() {
                let (i, j) = grid.ij(idx);
                return Err(Error::Parse {
                    line: k + 1,
                    message: format!("non-finite value at active node ({i}, {j})"),
                });
            }
            values.push(v);
        }
    }
    if values.len() != grid.len() {
        return Err(Error::Parse {
            line: text.lines().count().max(1),
            message: format!("expected {} values, found {}", grid.len(), values.len()),
        });
    }
    ScalarField::from_values(mask, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_annulus() {
        let g = GridSpec::covering((-2.0, 2.0), (-2.0, 2.0), 0.25).unwrap();
        let shape = Shape::Annulus { center: [0.0, 0.0], r_in: 0.5, r_out: 1.75 };
        let m = Arc::new(DomainMask::new(g, shape.clone()));
        let f = ScalarField::from_fn(m, |x| x[0].sin() * x[1] + 1.0 / 3.0);
        let back = parse_grid_file(&format_grid(&f)).unwrap();
        assert_eq!(back.mask().shape(), &shape);
        for n in 0..g.len() {
            let (a, b) = (f.get(n), back.get(n));
            assert!((a.is_nan() && b.is_nan()) || a == b);
        }
    }

    #[test]
    fn malformed_value_reports_line() {
        let text = "GRID 3 3 1 0 0 mask=rectangle\n0 0 0\n0 x 0\n0 0 0\n";
        match parse_grid_file(text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("'x'"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn short_file_and_bad_header_are_errors() {
        assert!(matches!(parse_grid_file("GRID 3 3 1 0 0 mask=rectangle\n0 0 0\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse_grid_file("GRUD 3 3 1 0 0 mask=rectangle\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_grid_file("GRID 3 3 1 0 0 mask=hexagon(1)\n"), Err(Error::Parse { line: 1, .. })));
    }
}
