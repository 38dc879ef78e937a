//! Custom test functions from two-column CSV tables.

use std::path::Path;

use anyhow::{bail, Context, Result};
use dunkl::functions::Interpolated;

/// Read `(node, value)` rows; a first row that does not parse as numbers is
/// taken as a header.
pub fn read_table(path: &Path) -> Result<Interpolated> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut nodes = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.with_context(|| format!("reading {}", path.display()))?;
        if rec.len() != 2 {
            bail!(
                "{}: line {} has {} fields, expected node,value",
                path.display(),
                i + 1,
                rec.len()
            );
        }
        let parsed = (rec[0].parse::<f64>(), rec[1].parse::<f64>());
        match parsed {
            (Ok(x), Ok(v)) => {
                if !(x.is_finite() && v.is_finite()) {
                    bail!("{}: line {} is not finite", path.display(), i + 1);
                }
                nodes.push(x);
                values.push(v);
            }
            _ if i == 0 => continue,
            _ => bail!(
                "{}: cannot parse line {} as two numbers",
                path.display(),
                i + 1
            ),
        }
    }
    if nodes.len() < 2 {
        bail!("{}: need at least two rows", path.display());
    }
    if nodes.windows(2).any(|w| w[1] <= w[0]) {
        bail!("{}: nodes must be strictly increasing", path.display());
    }
    Interpolated::new(nodes, values)
        .with_context(|| format!("building the interpolant of {}", path.display()))
}
