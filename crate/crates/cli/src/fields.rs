//! Concrete grids, data and potentials from their specs.

use crate::config::{FieldSpec, GridSpec};
use crate::run::RunError;
use num_complex::Complex64;
use pointhartree::radial::green_field;
use pointhartree::spectral::TransformOptions;
use pointhartree::{PlainRadialField, PointInteraction, Potential, RadialGrid, ReducedField, RobinTransform};
use std::path::Path;

pub fn grid(spec: &GridSpec) -> Result<RadialGrid, RunError> {
    Ok(RadialGrid::new(spec.r_max, spec.n)?)
}

pub fn transform(grid: RadialGrid, spec: &GridSpec, op: PointInteraction) -> Result<RobinTransform, RunError> {
    let opts = TransformOptions { k_max: spec.k_max, ..Default::default() };
    Ok(RobinTransform::with_options(grid, op, opts)?)
}

fn read_columns(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>, RunError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| RunError::Usage(format!("{}: {e}", path.display())))?;
    let found: Vec<String> = reader
        .headers()
        .map_err(|e| RunError::Usage(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    if found != header {
        return Err(RunError::Usage(format!("{}: expected header {:?}, found {:?}", path.display(), header, found)));
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| RunError::Usage(format!("{}: {e}", path.display())))?;
        let row = rec
            .iter()
            .map(|x| x.parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| RunError::Usage(format!("{}: row {}: {e}", path.display(), i + 1)))?;
        rows.push(row);
    }
    Ok(rows)
}

/// Rows must sit exactly on the grid nodes r_0, ..., r_n.
fn check_nodes(path: &Path, grid: &RadialGrid, rows: &[Vec<f64>]) -> Result<(), RunError> {
    if rows.len() != grid.len() {
        return Err(RunError::Usage(format!(
            "{}: {} rows for a grid with {} nodes",
            path.display(),
            rows.len(),
            grid.len()
        )));
    }
    for (j, row) in rows.iter().enumerate() {
        if (row[0] - grid.r(j)).abs() > 1e-9 * grid.h() {
            return Err(RunError::Usage(format!("{}: row {} has r = {} but node is {}", path.display(), j + 1, row[0], grid.r(j))));
        }
    }
    Ok(())
}

pub fn potential(spec: &FieldSpec, grid: RadialGrid) -> Result<Potential, RunError> {
    Ok(match spec {
        FieldSpec::Gaussian { width, amplitude } => Potential::gaussian(grid, *width, *amplitude),
        FieldSpec::Green { lambda } => Potential::green(grid, *lambda),
        FieldSpec::BallIndicator { radius } => Potential::ball_indicator(grid, *radius),
        FieldSpec::InversePower { gamma, cutoff } => Potential::inverse_power(grid, *gamma, *cutoff),
        FieldSpec::Zero => Potential::zero(grid),
        FieldSpec::File { path } => {
            let rows = read_columns(path, &["r", "value"])?;
            check_nodes(path, &grid, &rows)?;
            Potential::new(PlainRadialField::from_real(grid, rows.iter().map(|r| r[1]).collect())?)?
        }
    })
}

/// The datum as a reduced profile f = r psi.
pub fn datum(spec: &FieldSpec, grid: RadialGrid) -> Result<ReducedField, RunError> {
    let from_profile = |w: Potential| {
        let values = grid.nodes().zip(w.values()).map(|(r, v)| Complex64::new(r * v, 0.0)).collect();
        ReducedField::new(grid, values)
    };
    Ok(match spec {
        FieldSpec::Green { lambda } => green_field(grid, *lambda),
        FieldSpec::File { path } => {
            let rows = read_columns(path, &["r", "re", "im"])?;
            check_nodes(path, &grid, &rows)?;
            let values = rows.iter().map(|row| Complex64::new(row[1], row[2]) * row[0]).collect();
            ReducedField::new(grid, values)?
        }
        other => from_profile(potential(other, grid)?)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn gaussian_datum_matches_closed_form() {
        let g = RadialGrid::new(10.0, 100).unwrap();
        let f = datum(&FieldSpec::Gaussian { width: 2.0, amplitude: 0.5 }, g).unwrap();
        for (j, r) in g.nodes().enumerate().take(g.n()) {
            assert!((f.values()[j].re - 0.5 * r * (-(r / 2.0).powi(2)).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn file_fields_round_trip() {
        let g = RadialGrid::new(1.0, 20).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.csv");
        let mut file = std::fs::File::create(&path).unwrap();
        writeln!(file, "# a potential\nr,value").unwrap();
        for r in g.nodes() {
            writeln!(file, "{r},{}", 1.0 - r).unwrap();
        }
        drop(file);
        let w = potential(&FieldSpec::File { path: path.clone() }, g).unwrap();
        assert!((w.values()[6] - 0.7).abs() < 1e-12);
        let coarse = RadialGrid::new(1.0, 16).unwrap();
        assert!(matches!(potential(&FieldSpec::File { path }, coarse), Err(RunError::Usage(_))));
    }
}
