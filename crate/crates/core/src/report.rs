//! Plain-text outputs: CSV tables and key-value records. Floats are written
//! with 17 significant digits so that a round trip is bit-exact.

use std::io::{Read, Write};

use crate::constants::ConstantSet;
use crate::discretization::Grid;
use crate::error::{Error, Result};
use crate::nonlinearity::{BumpNonlinearity, OscillationDiagnostics};
use crate::solver::SolutionRecord;
use crate::testfn::{Piece, SeminormBreakdown};

/// 17 significant digits; `inf`, `-inf` and `NaN` for non-finite values.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt17).unwrap_or_default()
}

pub fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Invalid(format!("not a number: {s:?}")))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Invalid(format!("csv: {e}"))
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            wr.write_record(r).map_err(csv_err)?;
        }
        wr.flush().map_err(|e| Error::Invalid(format!("write: {e}")))
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Invalid(e.to_string()))
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let header = rd.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in rd.records() {
            rows.push(rec.map_err(csv_err)?.iter().map(str::to_string).collect());
        }
        Ok(Table { header, rows })
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.header.iter().position(|h| h == name).ok_or_else(|| Error::Invalid(format!("missing column {name:?}")))
    }

    /// Numeric column; empty cells are `None`.
    pub fn column(&self, name: &str) -> Result<Vec<Option<f64>>> {
        let i = self.column_index(name)?;
        self.rows.iter().map(|r| if r[i].trim().is_empty() { Ok(None) } else { parse_f64(&r[i]).map(Some) }).collect()
    }

    pub fn column_f64(&self, name: &str) -> Result<Vec<f64>> {
        self.column(name)?
            .into_iter()
            .map(|v| v.ok_or_else(|| Error::Invalid(format!("empty cell in column {name:?}"))))
            .collect()
    }
}

/// One line of a key-value report.
#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub key: String,
    pub value: String,
    pub units: String,
    /// How the value was obtained.
    pub provenance: String,
}

impl Record {
    pub fn new(key: &str, value: String, units: &str, provenance: &str) -> Self {
        Record { key: key.into(), value, units: units.into(), provenance: provenance.into() }
    }
}

pub fn records_table(records: &[Record]) -> Table {
    let mut t = Table::new(&["key", "value", "units", "provenance"]);
    for r in records {
        t.push(vec![r.key.clone(), r.value.clone(), r.units.clone(), r.provenance.clone()]);
    }
    t
}

pub fn constants_records(c: &ConstantSet) -> Vec<Record> {
    let k_src = match c.k_grid_n {
        Some(n) => format!("discrete estimate on {n} nodes"),
        None => "supplied".to_string(),
    };
    vec![
        Record::new("kappa", fmt17(c.kappa), "", "closed form"),
        Record::new("kappa_term1", fmt17(c.kappa_terms[0]), "", "closed form"),
        Record::new("kappa_term2", fmt17(c.kappa_terms[1]), "", "closed form"),
        Record::new("kappa_term3", fmt17(c.kappa_terms[2]), "", "closed form"),
        Record::new("omega_N", fmt17(c.omega_n), "", "closed form"),
        Record::new("tau", fmt17(c.tau), "length", "inradius of the domain"),
        Record::new("measure", fmt17(c.measure), "length^N", "closed form"),
        Record::new("alpha0", fmt17(c.alpha0), "", "weight bounds"),
        Record::new("alpha_inf", fmt17(c.alpha_inf), "", "weight bounds"),
        Record::new("C", fmt17(c.c), "", &format!("closed form with K {k_src}")),
        Record::new("K_est", fmt17(c.k_est), "", &k_src),
        Record::new("lambda1", c.interval.lambda1.to_string(), "", "closed form"),
        Record::new("lambda2", c.interval.lambda2.to_string(), "", &format!("closed form with K {k_src}")),
        Record::new("interval_nonempty", c.interval.nonempty.to_string(), "", "lambda1 < lambda2"),
    ]
}

/// Columns (k, a_k, b_k, m_k, F(b_k), F(b_k)/b_k^p, F(a_{k+1})/a_{k+1}^p).
pub fn bump_table(nl: &BumpNonlinearity, p: f64) -> Table {
    let mut t = Table::new(&["k", "a_k", "b_k", "m_k", "F_b_k", "ratio_b_k", "ratio_a_next"]);
    for r in nl.table(p) {
        t.push(vec![
            r.k.to_string(),
            fmt17(r.a),
            fmt17(r.b),
            fmt17(r.mass),
            fmt17(r.f_at_b),
            fmt17(r.ratio_at_b),
            fmt_opt(r.ratio_at_next_a),
        ]);
    }
    t
}

pub fn diagnostics_table(d: &OscillationDiagnostics) -> Table {
    let mut t = Table::new(&["k", "t", "kind", "ratio", "max_ratio"]);
    for q in &d.probe_points {
        let kind = match q.kind {
            crate::nonlinearity::ProbeKind::Limsup => "limsup",
            crate::nonlinearity::ProbeKind::Liminf => "liminf",
        };
        t.push(vec![q.k.to_string(), fmt17(q.t), kind.into(), fmt17(q.ratio), fmt17(q.max_ratio)]);
    }
    t
}

/// Columns (term, estimate, std_error, closed_form_value, relation).
pub fn breakdown_table(b: &SeminormBreakdown) -> Table {
    let mut t = Table::new(&["term", "estimate", "std_error", "closed_form_value", "relation"]);
    for e in &b.pieces {
        let rel = match e.piece {
            Piece::J1 | Piece::J3 => "<=",
            _ => "=",
        };
        t.push(vec![
            e.piece.name().into(),
            fmt17(e.estimate),
            fmt17(e.std_error),
            fmt_opt(b.closed_form.get(e.piece)),
            rel.into(),
        ]);
    }
    t.push(vec!["total".into(), fmt17(b.total), fmt17(b.total_std_error), fmt17(b.bound), "<=".into()]);
    t.push(vec!["direct".into(), fmt17(b.direct.estimate), fmt17(b.direct.std_error), fmt17(b.total), "=".into()]);
    t
}

/// Columns (x_i, u_i).
pub fn field_table(grid: &Grid, u: &[f64]) -> Table {
    let mut t = Table::new(&["x", "u"]);
    for (x, v) in grid.nodes().iter().zip(u) {
        t.push(vec![fmt17(*x), fmt17(*v)]);
    }
    t
}

/// Reads a field written by [`field_table`].
pub fn read_field<R: Read>(r: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let t = Table::read_csv(r)?;
    Ok((t.column_f64("x")?, t.column_f64("u")?))
}

/// Columns (j, norm, sup_norm, phi, psi, energy, residual, converged, nonnegative, ball, start).
pub fn summary_table(records: &[SolutionRecord]) -> Table {
    let mut t = Table::new(&[
        "j",
        "norm",
        "sup_norm",
        "phi",
        "psi",
        "energy",
        "residual",
        "converged",
        "nonnegative",
        "ball",
        "start",
    ]);
    for (j, r) in records.iter().enumerate() {
        t.push(vec![
            j.to_string(),
            fmt17(r.norm),
            fmt17(r.sup_norm),
            fmt17(r.energy.phi),
            fmt17(r.energy.psi),
            fmt17(r.energy.j),
            fmt17(r.residual),
            r.converged.to_string(),
            r.nonnegative.to_string(),
            r.ball_index.map(|b| b.to_string()).unwrap_or_default(),
            r.start.clone(),
        ]);
    }
    t
}
