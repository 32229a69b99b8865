use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use super::CliError;
use crate::convex_slice::SliceProfile;
use crate::frame_integration::FrameField;
use crate::vortex_solver::{FieldState, GeometryFields, Grid2D};

/// Header of `fields.csv`.
pub const FIELDS_CSV_HEADER: &str = "x,y,lambda,mu2,u,v,mu1,K,detII,normII2";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// Writes `contents` to a temporary file next to `path` and renames it into place, so
/// readers never observe a partial file.
pub fn atomic_write(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(contents).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e.error })?;
    Ok(())
}

fn push_row(out: &mut String, vals: impl IntoIterator<Item = f64>) {
    let mut first = true;
    for v in vals {
        if !first {
            out.push(',');
        }
        first = false;
        write!(out, "{v}").expect("writing to a String");
    }
    out.push('\n');
}

/// Node-major table of the state and its derived fields.
pub fn fields_csv(state: &FieldState, fields: &GeometryFields, grid: &Grid2D) -> String {
    let mut out = String::with_capacity(160 * grid.len());
    out.push_str(FIELDS_CSV_HEADER);
    out.push('\n');
    for k in 0..grid.len() {
        let (i, j) = grid.ij(k);
        push_row(
            &mut out,
            [
                grid.x(i),
                grid.y(j),
                state.lambda[k],
                state.mu2[k],
                fields.u[k],
                fields.v[k],
                fields.mu1[k],
                fields.k[k],
                fields.det_ii[k],
                fields.norm_ii2[k],
            ],
        );
    }
    out
}

/// Node coordinates and the 25 frame entries `f{row}{col}`, row-major.
pub fn frame_csv(frame: &FrameField, grid: &Grid2D) -> String {
    let mut out = String::with_capacity(480 * frame.frames.len());
    out.push_str("x,y");
    for r in 0..5 {
        for c in 0..5 {
            write!(out, ",f{r}{c}").expect("writing to a String");
        }
    }
    out.push('\n');
    for b in 0..frame.ny {
        for a in 0..frame.nx {
            let (i, j) = (frame.i0 + a, frame.j0 + b);
            let f = frame.at(i, j).expect("node inside the block");
            let entries = (0..25).map(|e| f[(e / 5, e % 5)]);
            push_row(&mut out, [grid.x(i), grid.y(j)].into_iter().chain(entries));
        }
    }
    out
}

/// One row per direction: base point, `θ_j`, `τ_j`.
pub fn slices_csv(profiles: &[SliceProfile], grid: &Grid2D) -> String {
    let mut out = String::from("x,y,theta,tau\n");
    for p in profiles {
        let (x, y) = (grid.x(p.base.0), grid.y(p.base.1));
        for (t, e) in p.angles.iter().zip(&p.extents) {
            push_row(&mut out, [x, y, *t, *e]);
        }
    }
    out
}

/// A CSV table from a header and rows.
pub fn table_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        push_row(&mut out, r);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_the_whole_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("nested/out.csv");
        atomic_write(&p, b"first version, long").unwrap();
        atomic_write(&p, b"second").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "second");
        let leftovers = std::fs::read_dir(p.parent().unwrap()).unwrap().count();
        assert_eq!(leftovers, 1);
    }

    #[test]
    fn tables_have_one_row_per_entry() {
        let t = table_csv(&["t", "length"], vec![vec![1.0, 2.5], vec![2.0, f64::NAN]]);
        assert_eq!(t, "t,length\n1,2.5\n2,NaN\n");
    }
}
