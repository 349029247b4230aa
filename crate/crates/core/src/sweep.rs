//! Grid sweeps over squeezing and transmittance, constrained optimization,
//! and the CSV / JSON-lines table formats.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beamsplitter::BsAngle;
use crate::error::{Error, Result};
use crate::fock::Numerics;
use crate::protocols::{
    run_setup1, run_setup2, setup2_addition_analytic, HeraldSpec, ProtocolOutcome, SqueezeParam,
};

/// CSV header of a sweep table.
pub const CSV_HEADER: &str = "r,T,success_prob,E_N,delta_E_N,spill";
pub const SCHEMA_VERSION: u32 = 1;

/// Which circuit a sweep evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    Setup1,
    Setup2,
    /// Closed-form premixed single-photon addition; the herald counts of the
    /// spec are ignored.
    Setup2Analytic,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::Setup1 => "setup1",
            Protocol::Setup2 => "setup2",
            Protocol::Setup2Analytic => "setup2_analytic",
        })
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "setup1" => Ok(Protocol::Setup1),
            "setup2" => Ok(Protocol::Setup2),
            "setup2_analytic" | "setup2-analytic" => Ok(Protocol::Setup2Analytic),
            other => Err(Error::Domain(format!("unknown protocol '{other}'"))),
        }
    }
}

/// Points the spec at one transmittance.
///
/// Both arms get `θ = arccos √T`, except that in the independent-arm layout
/// an arm with no ancilla photons in or out has no splitter at all.
pub fn spec_at(protocol: Protocol, spec: &HeraldSpec, angle: BsAngle) -> HeraldSpec {
    let mut out = *spec;
    out.theta_u = angle;
    out.theta_l = angle;
    if protocol == Protocol::Setup1 {
        if spec.upper_idle() {
            out.theta_u = BsAngle::IDENTITY;
        }
        if spec.lower_idle() {
            out.theta_l = BsAngle::IDENTITY;
        }
    }
    out
}

/// Evaluates one protocol at `(r, T)`.
pub fn evaluate(
    protocol: Protocol,
    spec: &HeraldSpec,
    r: f64,
    t: f64,
    numerics: &Numerics,
) -> Result<ProtocolOutcome> {
    let r = SqueezeParam::new(r)?;
    let angle = BsAngle::from_transmittance(t)?;
    let spec = spec_at(protocol, spec, angle);
    match protocol {
        Protocol::Setup1 => run_setup1(r, &spec, numerics),
        Protocol::Setup2 => run_setup2(r, &spec, numerics),
        Protocol::Setup2Analytic => setup2_addition_analytic(r, angle, numerics),
    }
}

/// Inclusive, evenly spaced grid over `r` and `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub r_steps: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub t_steps: usize,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            r_min: 0.05,
            r_max: 1.5,
            r_steps: 60,
            t_min: 0.02,
            t_max: 0.98,
            t_steps: 60,
        }
    }
}

fn linspace(lo: f64, hi: f64, steps: usize) -> impl Iterator<Item = f64> {
    let h = (hi - lo) / (steps - 1) as f64;
    (0..steps).map(move |i| {
        if i + 1 == steps {
            hi
        } else {
            lo + h * i as f64
        }
    })
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        let ok_t = 0.0 <= self.t_min && self.t_min < self.t_max && self.t_max <= 1.0;
        let ok_r = 0.0 <= self.r_min && self.r_min <= self.r_max && self.r_max.is_finite();
        if !ok_t {
            return Err(Error::InvalidGrid(format!(
                "need 0 <= t_min < t_max <= 1, got [{}, {}]",
                self.t_min, self.t_max
            )));
        }
        if !ok_r {
            return Err(Error::InvalidGrid(format!(
                "need 0 <= r_min <= r_max, got [{}, {}]",
                self.r_min, self.r_max
            )));
        }
        if self.r_steps < 2 || self.t_steps < 2 {
            return Err(Error::InvalidGrid(
                "grids need at least 2 steps per axis".into(),
            ));
        }
        Ok(())
    }

    pub fn r_values(&self) -> Vec<f64> {
        linspace(self.r_min, self.r_max, self.r_steps).collect()
    }

    pub fn t_values(&self) -> Vec<f64> {
        linspace(self.t_min, self.t_max, self.t_steps).collect()
    }

    /// Grid points in row-major order (`r` outer, `T` inner).
    pub fn points(&self) -> Vec<(f64, f64)> {
        let ts = self.t_values();
        self.r_values()
            .into_iter()
            .flat_map(|r| ts.iter().map(move |&t| (r, t)))
            .collect()
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub r: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub success_prob: f64,
    #[serde(rename = "E_N")]
    pub e_n: Option<f64>,
    #[serde(rename = "delta_E_N")]
    pub delta_e_n: Option<f64>,
    pub spill: f64,
}

impl SweepRow {
    pub fn from_outcome(r: f64, t: f64, outcome: &ProtocolOutcome) -> Self {
        Self {
            r,
            t,
            success_prob: outcome.success_prob,
            e_n: outcome.e_n,
            delta_e_n: outcome.delta_e_n,
            spill: outcome.truncation_spill,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn max_delta(&self) -> Option<f64> {
        self.rows
            .iter()
            .filter_map(|r| r.delta_e_n)
            .reduce(f64::max)
    }

    pub fn max_success(&self) -> Option<f64> {
        self.rows.iter().map(|r| r.success_prob).reduce(f64::max)
    }
}

/// Evaluates every grid point. Rows are computed in parallel and returned in
/// row-major order. A failed tail check does not abort the sweep; the row's
/// spill column carries the truncation estimate instead.
pub fn sweep(
    protocol: Protocol,
    spec: &HeraldSpec,
    grid: &SweepGrid,
    numerics: &Numerics,
) -> Result<SweepTable> {
    grid.validate()?;
    sweep_points(protocol, spec, &grid.points(), numerics)
}

fn sweep_points(
    protocol: Protocol,
    spec: &HeraldSpec,
    points: &[(f64, f64)],
    numerics: &Numerics,
) -> Result<SweepTable> {
    let lenient = Numerics {
        allow_truncation: true,
        ..numerics.clone()
    };
    let rows = points
        .par_iter()
        .map(|&(r, t)| {
            evaluate(protocol, spec, r, t, &lenient).map(|o| SweepRow::from_outcome(r, t, &o))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable { rows })
}

/// Search box for [`optimize`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub r_min: f64,
    pub r_max: f64,
    pub t_min: f64,
    pub t_max: f64,
}

impl Default for Bounds {
    fn default() -> Self {
        let g = SweepGrid::default();
        Self {
            r_min: g.r_min,
            r_max: g.r_max,
            t_min: g.t_min,
            t_max: g.t_max,
        }
    }
}

impl Bounds {
    fn grid(&self, steps: usize) -> SweepGrid {
        SweepGrid {
            r_min: self.r_min,
            r_max: self.r_max,
            r_steps: steps,
            t_min: self.t_min,
            t_max: self.t_max,
            t_steps: steps,
        }
    }
}

pub const COARSE_STEPS: usize = 40;
pub const REFINE_ROUNDS: usize = 20;

/// Constrained maximum of `delta_E_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimumReport {
    pub best_r: f64,
    #[serde(rename = "best_T")]
    pub best_t: f64,
    #[serde(rename = "delta_E_N")]
    pub delta_e_n: f64,
    pub success_prob: f64,
    pub p_min: f64,
    /// Best feasible value found by the coarse scan alone.
    pub coarse_best: f64,
    /// 3×3 stencil around the optimum at the final refinement spacing, row-major.
    pub neighborhood: Vec<SweepRow>,
}

fn feasible(row: &SweepRow, p_min: f64) -> bool {
    row.delta_e_n.is_some() && row.success_prob >= p_min
}

/// Whether `a` beats `b`: larger ΔE_N, then larger success, then smaller r, then smaller T.
fn better(a: &SweepRow, b: &SweepRow) -> bool {
    let (da, db) = (
        a.delta_e_n.unwrap_or(f64::NEG_INFINITY),
        b.delta_e_n.unwrap_or(f64::NEG_INFINITY),
    );
    da.total_cmp(&db)
        .then(a.success_prob.total_cmp(&b.success_prob))
        .then(b.r.total_cmp(&a.r))
        .then(b.t.total_cmp(&a.t))
        .is_gt()
}

fn best_feasible<'a>(rows: impl IntoIterator<Item = &'a SweepRow>, p_min: f64) -> Option<SweepRow> {
    rows.into_iter()
        .filter(|row| feasible(row, p_min))
        .fold(None, |best: Option<SweepRow>, row| match best {
            Some(b) if !better(row, &b) => Some(b),
            _ => Some(*row),
        })
}

fn stencil(bounds: &Bounds, center: (f64, f64), h: (f64, f64)) -> Vec<(f64, f64)> {
    let mut pts = Vec::with_capacity(9);
    for i in -1..=1 {
        for j in -1..=1 {
            let r = (center.0 + i as f64 * h.0).clamp(bounds.r_min, bounds.r_max);
            let t = (center.1 + j as f64 * h.1).clamp(bounds.t_min, bounds.t_max);
            pts.push((r, t));
        }
    }
    pts
}

/// Maximizes ΔE_N subject to `success_prob >= p_min`.
///
/// A 40×40 scan of `bounds` seeds the incumbent; 20 rounds of 3×3 stencils
/// centred on the incumbent follow, halving the spacing each round.
pub fn optimize(
    protocol: Protocol,
    spec: &HeraldSpec,
    bounds: &Bounds,
    p_min: f64,
    numerics: &Numerics,
) -> Result<OptimumReport> {
    if !(0.0..1.0).contains(&p_min) {
        return Err(Error::Domain(format!("p_min = {p_min} outside [0, 1)")));
    }
    let grid = bounds.grid(COARSE_STEPS);
    let coarse = sweep(protocol, spec, &grid, numerics)?;
    let mut incumbent =
        best_feasible(&coarse.rows, p_min).ok_or(Error::NoFeasiblePoint { p_min })?;
    let coarse_best = incumbent
        .delta_e_n
        .expect("feasible rows have a defined delta");

    let mut h = (
        (bounds.r_max - bounds.r_min) / (COARSE_STEPS - 1) as f64,
        (bounds.t_max - bounds.t_min) / (COARSE_STEPS - 1) as f64,
    );
    for _ in 0..REFINE_ROUNDS {
        let pts = stencil(bounds, (incumbent.r, incumbent.t), h);
        let local = sweep_points(protocol, spec, &pts, numerics)?;
        if let Some(best) = best_feasible(local.rows.iter().chain([&incumbent]), p_min) {
            incumbent = best;
        }
        h = (h.0 / 2.0, h.1 / 2.0);
    }
    let neighborhood = sweep_points(
        protocol,
        spec,
        &stencil(bounds, (incumbent.r, incumbent.t), h),
        numerics,
    )?
    .rows;

    Ok(OptimumReport {
        best_r: incumbent.r,
        best_t: incumbent.t,
        delta_e_n: incumbent
            .delta_e_n
            .expect("feasible rows have a defined delta"),
        success_prob: incumbent.success_prob,
        p_min,
        coarse_best,
        neighborhood,
    })
}

/// Output format of [`write_table`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TableFormat {
    #[default]
    Csv,
    JsonLines,
}

impl FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "json-lines" | "jsonl" => Ok(TableFormat::JsonLines),
            other => Err(Error::Domain(format!("unknown table format '{other}'"))),
        }
    }
}

/// Rounds to 12 significant digits and prints the shortest string that
/// parses back to the rounded value.
pub fn format_float(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 {
            "0".to_string()
        } else {
            x.to_string()
        };
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    let mag = rounded.abs();
    if (1e-5..1e15).contains(&mag) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

fn round12(x: f64) -> f64 {
    format_float(x).parse().unwrap_or(x)
}

fn format_opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

/// Writes a table as CSV (LF line endings) or JSON lines. JSON lines start
/// with a `{"schema_version": 1}` record and use `null` for undefined cells;
/// CSV uses empty cells.
pub fn write_table<W: Write>(table: &SweepTable, format: TableFormat, mut out: W) -> Result<()> {
    match format {
        TableFormat::Csv => {
            out.write_all(CSV_HEADER.as_bytes())?;
            out.write_all(b"\n")?;
            for row in &table.rows {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    format_float(row.r),
                    format_float(row.t),
                    format_float(row.success_prob),
                    format_opt(row.e_n),
                    format_opt(row.delta_e_n),
                    format_float(row.spill)
                )?;
            }
        }
        TableFormat::JsonLines => {
            writeln!(
                out,
                "{}",
                serde_json::json!({ "schema_version": SCHEMA_VERSION })
            )?;
            for row in &table.rows {
                let rounded = SweepRow {
                    r: round12(row.r),
                    t: round12(row.t),
                    success_prob: round12(row.success_prob),
                    e_n: row.e_n.map(round12),
                    delta_e_n: row.delta_e_n.map(round12),
                    spill: round12(row.spill),
                };
                let line = serde_json::to_string(&rounded)
                    .map_err(|e| Error::Parse(format!("serializing row: {e}")))?;
                writeln!(out, "{line}")?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn parse_cell(cell: &str, line: usize) -> Result<Option<f64>> {
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse()
        .map(Some)
        .map_err(|_| Error::Parse(format!("line {line}: bad number '{cell}'")))
}

fn required(cell: Option<f64>, line: usize, name: &str) -> Result<f64> {
    cell.ok_or_else(|| Error::Parse(format!("line {line}: empty {name}")))
}

/// Parses the CSV produced by [`write_table`].
pub fn read_table<R: BufRead>(input: R) -> Result<SweepTable> {
    let mut lines = input.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header != CSV_HEADER {
        return Err(Error::Parse(format!("unexpected header '{header}'")));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let n = i + 2;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 6 {
            return Err(Error::Parse(format!(
                "line {n}: expected 6 cells, got {}",
                cells.len()
            )));
        }
        rows.push(SweepRow {
            r: required(parse_cell(cells[0], n)?, n, "r")?,
            t: required(parse_cell(cells[1], n)?, n, "T")?,
            success_prob: required(parse_cell(cells[2], n)?, n, "success_prob")?,
            e_n: parse_cell(cells[3], n)?,
            delta_e_n: parse_cell(cells[4], n)?,
            spill: required(parse_cell(cells[5], n)?, n, "spill")?,
        });
    }
    Ok(SweepTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(SweepGrid::default().validate().is_ok());
        let bad = SweepGrid {
            t_min: 0.5,
            t_max: 0.5,
            ..SweepGrid::default()
        };
        assert!(matches!(bad.validate(), Err(Error::InvalidGrid(_))));
        let bad = SweepGrid {
            r_steps: 1,
            ..SweepGrid::default()
        };
        assert!(bad.validate().is_err());
        let bad = SweepGrid {
            t_max: 1.2,
            ..SweepGrid::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn grid_points_are_row_major_and_hit_endpoints() {
        let g = SweepGrid {
            r_min: 0.0,
            r_max: 1.0,
            r_steps: 3,
            t_min: 0.1,
            t_max: 0.9,
            t_steps: 2,
        };
        let pts = g.points();
        assert_eq!(
            pts,
            vec![
                (0.0, 0.1),
                (0.0, 0.9),
                (0.5, 0.1),
                (0.5, 0.9),
                (1.0, 0.1),
                (1.0, 0.9)
            ]
        );
    }

    #[test]
    fn float_format() {
        assert_eq!(format_float(0.5), "0.5");
        assert_eq!(format_float(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_float(2.0 / 3.0), "0.666666666667");
        assert_eq!(format_float(0.0), "0");
        assert_eq!(format_float(1e-20), "1e-20");
        assert_eq!(format_float(-1.25e-7), "-1.25e-7");
        assert_eq!(format_float(12.0), "12");
    }

    #[test]
    fn empty_table_is_header_only() {
        let mut buf = Vec::new();
        write_table(&SweepTable::default(), TableFormat::Csv, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn undefined_cells_are_empty() {
        let row = SweepRow {
            r: 0.1,
            t: 0.5,
            success_prob: 0.0,
            e_n: None,
            delta_e_n: None,
            spill: 0.0,
        };
        let mut buf = Vec::new();
        write_table(&SweepTable { rows: vec![row] }, TableFormat::Csv, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().ends_with("0.1,0.5,0,,,0\n"));
        let back = read_table(std::io::Cursor::new(
            b"r,T,success_prob,E_N,delta_E_N,spill\n0.1,0.5,0,,,0\n",
        ))
        .unwrap();
        assert_eq!(back.rows, vec![row]);
    }

    #[test]
    fn json_lines_carry_schema_and_nulls() {
        let row = SweepRow {
            r: 0.1,
            t: 0.5,
            success_prob: 0.25,
            e_n: None,
            delta_e_n: None,
            spill: 0.0,
        };
        let mut buf = Vec::new();
        write_table(
            &SweepTable { rows: vec![row] },
            TableFormat::JsonLines,
            &mut buf,
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], r#"{"schema_version":1}"#);
        let v: serde_json::Value = serde_json::from_str(lines[1]).unwrap();
        assert_eq!(v["T"], 0.5);
        assert!(v["E_N"].is_null());
    }

    #[test]
    fn read_rejects_bad_header() {
        assert!(matches!(
            read_table(std::io::Cursor::new(b"a,b\n")),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn protocol_names_round_trip() {
        for p in [Protocol::Setup1, Protocol::Setup2, Protocol::Setup2Analytic] {
            assert_eq!(p.to_string().parse::<Protocol>().unwrap(), p);
        }
        assert!("setup3".parse::<Protocol>().is_err());
    }

    #[test]
    fn tie_break_order() {
        let base = SweepRow {
            r: 0.5,
            t: 0.5,
            success_prob: 0.3,
            e_n: Some(1.0),
            delta_e_n: Some(0.1),
            spill: 0.0,
        };
        let higher_p = SweepRow {
            success_prob: 0.4,
            ..base
        };
        let lower_r = SweepRow { r: 0.4, ..base };
        let lower_t = SweepRow { t: 0.4, ..base };
        assert!(better(&higher_p, &base));
        assert!(better(&lower_r, &base));
        assert!(better(&lower_t, &base));
        assert!(!better(&base, &base));
    }

    #[test]
    fn spec_at_leaves_idle_setup1_arm_without_splitter() {
        let spec = HeraldSpec::noop().with_upper(1, 1, BsAngle::IDENTITY);
        let a = BsAngle::from_transmittance(0.3).unwrap();
        let s1 = spec_at(Protocol::Setup1, &spec, a);
        assert_eq!(s1.theta_u, a);
        assert_eq!(s1.theta_l, BsAngle::IDENTITY);
        let s2 = spec_at(Protocol::Setup2, &spec, a);
        assert_eq!(s2.theta_l, a);
    }
}
