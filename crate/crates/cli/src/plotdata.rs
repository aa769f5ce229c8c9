//! Companion plot data: log-log columns extracted from a results CSV so any
//! plotting tool can draw the convergence graphs. No rendering here.

use crate::formats;
use std::path::{Path, PathBuf};

/// Reads a table CSV and writes `<stem>.time.dat` (log10 N vs log10 E) and
/// `<stem>.space.dat` (log10 L vs log10 E) next to it. Rows with a
/// non-positive estimate have no logarithm and are skipped.
pub fn emit_plotdata(csv_path: &Path) -> Result<(PathBuf, PathBuf), String> {
    let text = std::fs::read_to_string(csv_path)
        .map_err(|e| format!("cannot read `{}`: {e}", csv_path.display()))?;
    let table = formats::table_from_csv(&text)?;
    if table.rows.is_empty() {
        return Err(format!("`{}` contains no data rows", csv_path.display()));
    }

    let mut time = String::from("# log10_N log10_E\n");
    let mut space = String::from("# log10_L log10_E\n");
    for r in &table.rows {
        if r.e_hat <= 0.0 {
            continue;
        }
        let loge = r.e_hat.log10();
        time.push_str(&format!("{} {}\n", (r.n as f64).log10(), loge));
        space.push_str(&format!("{} {}\n", (r.l as f64).log10(), loge));
    }

    let time_path = sibling(csv_path, "time.dat");
    let space_path = sibling(csv_path, "space.dat");
    std::fs::write(&time_path, time)
        .map_err(|e| format!("cannot write `{}`: {e}", time_path.display()))?;
    std::fs::write(&space_path, space)
        .map_err(|e| format!("cannot write `{}`: {e}", space_path.display()))?;
    Ok((time_path, space_path))
}

fn sibling(csv_path: &Path, suffix: &str) -> PathBuf {
    csv_path.with_extension(suffix)
}
