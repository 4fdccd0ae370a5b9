//! CSV export of grid functions for plotting: `#`-prefixed metadata lines
//! (shape and box), then one row per node with index, coordinates, value.

use abplab_core::potential::GridFn;
use anyhow::{Context, Result};
use std::io::Write;
use std::path::Path;

pub fn write_grid_csv(grid: &GridFn, path: &Path) -> Result<()> {
    let mut out = Vec::new();
    let (lo, hi) = grid.bounds();
    let join = |v: &[f64]| -> String {
        v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
    };
    let shape: Vec<String> = grid.shape().iter().map(|m| m.to_string()).collect();
    writeln!(out, "# shape,{}", shape.join(","))?;
    writeln!(out, "# lower,{}", join(lo))?;
    writeln!(out, "# upper,{}", join(hi))?;

    let mut w = csv::Writer::from_writer(out);
    let d = grid.dim();
    let mut header = vec!["index".to_string()];
    for a in 0..d {
        header.push(format!("x{a}"));
    }
    header.push("value".to_string());
    w.write_record(&header)?;
    let mut x = [0.0; 2];
    for idx in 0..grid.node_count() {
        if !grid.is_active(idx) {
            continue;
        }
        grid.coord(idx, &mut x);
        let mut row = vec![idx.to_string()];
        for v in &x[..d] {
            row.push(v.to_string());
        }
        row.push(grid.value(idx).to_string());
        w.write_record(&row)?;
    }
    let out = w.into_inner().context("flushing grid csv")?;
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_csv_has_metadata_and_rows() {
        let g = GridFn::from_fn(vec![0.0, 0.0], vec![1.0, 1.0], vec![3, 3], |x| x[0] + x[1])
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        write_grid_csv(&g, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# shape,3,3\n# lower,0,0\n# upper,1,1\n"));
        assert!(text.contains("index,x0,x1,value"));
        assert!(text.lines().count() == 3 + 1 + 9, "{text}");
        assert!(text.contains("8,1,1,2"));
    }
}
