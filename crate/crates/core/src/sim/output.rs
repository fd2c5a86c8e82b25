use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{Result, SimError, TimeSeriesRecord};
use crate::hysteresis::{active_level, MemoryCurve, ThresholdGrid};
use crate::stepper::{Model, SimState};

pub const TIMESERIES_HEADER: [&str; 10] = [
    "step",
    "t",
    "mass",
    "V",
    "E",
    "D_cum",
    "U_mean",
    "orlicz_budget",
    "newton_iters",
    "residual",
];

/// 17 significant digits, round-trip exact.
pub(crate) fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> SimError {
    SimError::Io(format!("{}: {e}", path.display()))
}

/// `timeseries.csv` writer, flushed after every row.
pub(crate) struct SeriesWriter {
    inner: csv::Writer<BufWriter<File>>,
}

impl SeriesWriter {
    pub(crate) fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| io_err(path, e))?;
        let mut inner = csv::Writer::from_writer(BufWriter::new(file));
        inner.write_record(TIMESERIES_HEADER)?;
        Ok(Self { inner })
    }

    pub(crate) fn push(&mut self, r: &TimeSeriesRecord) -> Result<()> {
        self.inner.write_record([
            r.step.to_string(),
            num(r.t),
            num(r.mass),
            num(r.v),
            num(r.e),
            num(r.d_cum),
            num(r.u_mean),
            num(r.orlicz_budget),
            r.newton_iters.to_string(),
            num(r.residual),
        ])?;
        self.inner.flush()?;
        Ok(())
    }
}

/// `cell_index,x[,y],u,s,active_level`; the active level is measured in `w = g(u)`.
pub fn write_snapshot_csv(path: &Path, model: &Model, state: &SimState) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let grid = model.grid;
    if grid.dim() == 1 {
        w.write_record(["cell_index", "x", "u", "s", "active_level"])?;
    } else {
        w.write_record(["cell_index", "x", "y", "u", "s", "active_level"])?;
    }
    for k in 0..grid.len() {
        let (x, y) = grid.center(k);
        let u = state.u.values()[k];
        let level = active_level(&state.memory[k], model.gmap.eval(u));
        let mut row = vec![k.to_string(), num(x)];
        if grid.dim() == 2 {
            row.push(num(y));
        }
        row.extend([num(u), num(state.s.values()[k]), num(level)]);
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `cell_index,r,xi`, one row per cell and threshold node.
pub fn write_memory_csv(path: &Path, memory: &[MemoryCurve]) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(["cell_index", "r", "xi"])?;
    for (k, c) in memory.iter().enumerate() {
        for (r, &xi) in c.grid().nodes().zip(c.values()) {
            w.write_record([k.to_string(), num(r), num(xi)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a memory file in the `write_memory_csv` layout. Rows may come in
/// any order; every cell needs exactly one value per threshold node.
pub fn read_memory_csv(
    path: &Path,
    thresholds: ThresholdGrid,
    cells: usize,
) -> Result<Vec<MemoryCurve>> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader.headers().map_err(|e| io_err(path, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["cell_index", "r", "xi"] {
        return Err(SimError::Config(format!(
            "{}: memory file header must be cell_index,r,xi",
            path.display()
        )));
    }
    let dr = thresholds.spacing();
    let mut table: BTreeMap<usize, Vec<Option<f64>>> = BTreeMap::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let parse = |i: usize| -> Result<f64> {
            rec[i]
                .trim()
                .parse::<f64>()
                .map_err(|e| SimError::Config(format!("{}: row {}: {e}", path.display(), line + 2)))
        };
        let cell = parse(0)?;
        let (r, xi) = (parse(1)?, parse(2)?);
        if cell < 0.0 || cell.fract() != 0.0 || cell as usize >= cells {
            return Err(SimError::Config(format!(
                "{}: row {}: cell index {cell} out of range",
                path.display(),
                line + 2
            )));
        }
        let j = (r / dr - 0.5).round();
        if j < 0.0
            || j as usize >= thresholds.len()
            || (thresholds.node(j as usize) - r).abs() > 1e-9 * dr
        {
            return Err(SimError::Config(format!(
                "{}: row {}: r = {r} is not a threshold node",
                path.display(),
                line + 2
            )));
        }
        let slot = &mut table
            .entry(cell as usize)
            .or_insert_with(|| vec![None; thresholds.len()])[j as usize];
        if slot.replace(xi).is_some() {
            return Err(SimError::Config(format!(
                "{}: duplicate entry for cell {cell}, r = {r}",
                path.display()
            )));
        }
    }
    (0..cells)
        .map(|k| {
            let values = table
                .remove(&k)
                .and_then(|v| v.into_iter().collect::<Option<Vec<f64>>>())
                .ok_or_else(|| {
                    SimError::Config(format!("{}: cell {k} is incomplete", path.display()))
                })?;
            MemoryCurve::from_values(thresholds, values)
                .map_err(|e| SimError::Config(e.to_string()))
        })
        .collect()
}

pub(crate) fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| io_err(path, e))?;
    w.write_all(b"\n").map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn memory_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("memory.csv");
        let grid = ThresholdGrid::new(1.0, 8).unwrap();
        let curves = vec![
            MemoryCurve::clamped(grid, 0.3),
            MemoryCurve::from_fn(grid, |r| (0.2 - r).max(-0.1)),
        ];
        write_memory_csv(&path, &curves).unwrap();
        assert_eq!(read_memory_csv(&path, grid, 2).unwrap(), curves);
        assert!(read_memory_csv(&path, grid, 3).is_err());
        let other = ThresholdGrid::new(1.0, 16).unwrap();
        assert!(read_memory_csv(&path, other, 2).is_err());
    }
}
