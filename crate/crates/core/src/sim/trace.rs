use std::io::{BufRead, Write};

use crate::error::{Error, Result};

use super::SimVariant;

/// Run metadata carried alongside the sampled columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceMeta {
    pub variant: SimVariant,
    /// Rated power used to normalise power errors (VA).
    pub s_0: f64,
    pub omega0: f64,
    /// Time at which the run was cut short, if it left the power bound or
    /// produced a non-finite state.
    pub truncated_at: Option<f64>,
}

/// Uniformly sampled simulation output.
///
/// `i_gg` is the instantaneous current for the time-domain model and
/// `|<i_gg>_1|` for the phasor and linearized models.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub meta: TraceMeta,
    pub t: Vec<f64>,
    pub p_g: Vec<f64>,
    pub q_g: Vec<f64>,
    pub v_gf_am: Vec<f64>,
    pub phi_g: Vec<f64>,
    pub omega_dev: Vec<f64>,
    pub i_gg: Vec<f64>,
    /// Integrator state at the last completed step.
    pub final_state: Vec<f64>,
}

pub const COLUMNS: [&str; 7] = ["t", "p_g", "q_g", "v_gf_am", "phi_g", "omega_dev", "i_gg"];

#[derive(Debug, Clone, Copy)]
pub(crate) struct Sample {
    pub t: f64,
    pub p_g: f64,
    pub q_g: f64,
    pub v_gf_am: f64,
    pub phi_g: f64,
    pub omega_dev: f64,
    pub i_gg: f64,
}

impl SimTrace {
    pub fn new(meta: TraceMeta) -> Self {
        Self {
            meta,
            t: Vec::new(),
            p_g: Vec::new(),
            q_g: Vec::new(),
            v_gf_am: Vec::new(),
            phi_g: Vec::new(),
            omega_dev: Vec::new(),
            i_gg: Vec::new(),
            final_state: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, s: Sample) {
        self.t.push(s.t);
        self.p_g.push(s.p_g);
        self.q_g.push(s.q_g);
        self.v_gf_am.push(s.v_gf_am);
        self.phi_g.push(s.phi_g);
        self.omega_dev.push(s.omega_dev);
        self.i_gg.push(s.i_gg);
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn truncated(&self) -> bool {
        self.meta.truncated_at.is_some()
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.meta.omega0
    }

    pub(crate) fn columns(&self) -> [&Vec<f64>; 7] {
        [
            &self.t,
            &self.p_g,
            &self.q_g,
            &self.v_gf_am,
            &self.phi_g,
            &self.omega_dev,
            &self.i_gg,
        ]
    }

    pub(crate) fn columns_mut(&mut self) -> [&mut Vec<f64>; 7] {
        [
            &mut self.t,
            &mut self.p_g,
            &mut self.q_g,
            &mut self.v_gf_am,
            &mut self.phi_g,
            &mut self.omega_dev,
            &mut self.i_gg,
        ]
    }

    /// Mean of `column` over samples with `t >= t_from`.
    pub fn mean_since(&self, column: &[f64], t_from: f64) -> Option<f64> {
        let (sum, n) = self
            .t
            .iter()
            .zip(column)
            .filter(|(t, _)| **t >= t_from)
            .fold((0.0, 0usize), |(s, n), (_, v)| (s + v, n + 1));
        (n > 0).then(|| sum / n as f64)
    }

    /// Mean over the last `periods` fundamental periods.
    pub fn tail_mean(&self, column: &[f64], periods: f64) -> Option<f64> {
        let end = *self.t.last()?;
        // half-open window keeps exactly `periods` periods of samples
        let from = end - periods * self.period();
        let (sum, n) = self
            .t
            .iter()
            .zip(column)
            .filter(|(t, _)| **t > from + 1e-12)
            .fold((0.0, 0usize), |(s, n), (_, v)| (s + v, n + 1));
        (n > 0).then(|| sum / n as f64)
    }
}

fn fmt_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a trace as CSV: a header row, one row per sample with 17
/// significant digits, and trailing `#` comment rows holding the metadata.
/// `extra` comment rows (e.g. a divergence classification) come last.
pub fn write_trace_csv<W: Write>(trace: &SimTrace, out: W, extra: &[(&str, String)]) -> Result<()> {
    let io = |e: std::io::Error| Error::invalid(format!("write failed: {e}"));
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let csv_err = |e: csv::Error| Error::invalid(format!("write failed: {e}"));
    w.write_record(COLUMNS).map_err(csv_err)?;
    let cols = trace.columns();
    for k in 0..trace.len() {
        w.write_record(cols.iter().map(|c| fmt_value(c[k])))
            .map_err(csv_err)?;
    }
    w.flush().map_err(io)?;
    let mut out = w
        .into_inner()
        .map_err(|e| Error::invalid(format!("write failed: {e}")))?;
    let meta = &trace.meta;
    writeln!(out, "# variant={}", meta.variant).map_err(io)?;
    writeln!(out, "# s_0={}", fmt_value(meta.s_0)).map_err(io)?;
    writeln!(out, "# omega0={}", fmt_value(meta.omega0)).map_err(io)?;
    if let Some(t) = meta.truncated_at {
        writeln!(out, "# truncated_at={}", fmt_value(t)).map_err(io)?;
    }
    for (k, v) in extra {
        writeln!(out, "# {k}={v}").map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Parses a trace written by [`write_trace_csv`]. Unknown comment keys are
/// ignored.
pub fn read_trace_csv<R: BufRead>(input: R) -> Result<SimTrace> {
    let bad = |msg: String| Error::invalid(format!("malformed trace: {msg}"));
    let mut text = String::new();
    let mut meta_lines = Vec::new();
    for line in input.lines() {
        let line = line.map_err(|e| bad(e.to_string()))?;
        if let Some(rest) = line.strip_prefix('#') {
            meta_lines.push(rest.trim().to_string());
        } else {
            text.push_str(&line);
            text.push('\n');
        }
    }
    let mut variant = None;
    let mut s_0 = None;
    let mut omega0 = None;
    let mut truncated_at = None;
    for line in &meta_lines {
        let Some((key, value)) = line.split_once('=') else {
            continue;
        };
        let num = || value.parse::<f64>().map_err(|e| bad(format!("{key}: {e}")));
        match key {
            "variant" => variant = Some(value.parse::<SimVariant>()?),
            "s_0" => s_0 = Some(num()?),
            "omega0" => omega0 = Some(num()?),
            "truncated_at" => truncated_at = Some(num()?),
            _ => {}
        }
    }
    let meta = TraceMeta {
        variant: variant.ok_or_else(|| bad("missing variant".into()))?,
        s_0: s_0.ok_or_else(|| bad("missing s_0".into()))?,
        omega0: omega0.ok_or_else(|| bad("missing omega0".into()))?,
        truncated_at,
    };
    let mut trace = SimTrace::new(meta);
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| bad(e.to_string()))?;
    if header.iter().ne(COLUMNS.iter().copied()) {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    for record in reader.records() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let values: Vec<f64> = record
            .iter()
            .map(|v| v.parse::<f64>().map_err(|e| bad(e.to_string())))
            .collect::<Result<_>>()?;
        for (col, v) in trace.columns_mut().into_iter().zip(values) {
            col.push(v);
        }
    }
    Ok(trace)
}
