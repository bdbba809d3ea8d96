use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use gfmc_core::control::solve_operating_point;
use gfmc_core::profile;
use gfmc_core::reproduce::{self, Reproduction};
use gfmc_core::sim::{self, centered_moving_average, detect_divergence, write_trace_csv, SimTrace};
use gfmc_core::small_signal::{analyze_at, sweep_parameter, LocusRow, StabilityAnalysis};
use gfmc_core::{ModelVariant, SimVariant};
use log::{info, warn};

use crate::scenario::Scenario;
use crate::svg::{self, Series};

/// Environment variable that, when set, is the root for relative output paths.
pub const SEED_DIR_ENV: &str = "GFMC_SEED_DIR";

/// Exit code when the reproduced matrix disagrees with the expected one.
const MISMATCH_EXIT: u8 = 2;

/// Span of the Fig. 4 style comparison written by `reproduce-paper`.
const COMPARE_SPAN: f64 = 5.0;

pub fn resolve_output(path: &Path) -> PathBuf {
    match std::env::var_os(SEED_DIR_ENV) {
        Some(root) if path.is_relative() => PathBuf::from(root).join(path),
        _ => path.to_path_buf(),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

/// Parses `4`, `4,10,12` or `start:stop:step` (inclusive).
pub fn parse_damping_list(spec: &str) -> Result<Vec<f64>> {
    let num = |s: &str| -> Result<f64> {
        let v: f64 = s
            .trim()
            .parse()
            .with_context(|| format!("bad damping value '{s}'"))?;
        if !v.is_finite() || v < 0.0 {
            bail!("damping must be finite and non-negative, got {v}");
        }
        Ok(v)
    };
    let values = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [start, stop, step] = parts[..] else {
            bail!("damping range must be start:stop:step, got '{spec}'");
        };
        let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
        if step <= 0.0 || stop < start {
            bail!("damping range '{spec}' is empty");
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        (0..=n).map(|k| start + k as f64 * step).collect()
    } else {
        spec.split(',').map(num).collect::<Result<Vec<_>>>()?
    };
    if values.is_empty() {
        bail!("no damping values given");
    }
    Ok(values)
}

pub fn operating_point(scenario: &Scenario) -> Result<ExitCode> {
    let cp = scenario.circuit()?;
    let vp = scenario.control()?;
    let op = solve_operating_point(&cp, &vp).context("operating point not found")?;
    let mut out = io::stdout().lock();
    writeln!(
        out,
        "V_gf,am = {:.9} V ({:.9} V rms)",
        op.v_gf_am,
        profile::amplitude_to_rms(op.v_gf_am)
    )?;
    writeln!(out, "Phi_g = {:.12} rad", op.phi_g)?;
    writeln!(out, "P = {:.9} W", op.p)?;
    writeln!(out, "Q = {:.9} var", op.q)?;
    writeln!(
        out,
        "<I_gg>_1 = {:.9} {:+.9}j A (|.| = {:.9} A)",
        op.i1.re,
        op.i1.im,
        op.i1.norm()
    )?;
    writeln!(
        out,
        "residuals = [{:.3e}, {:.3e}]",
        op.residual[0], op.residual[1]
    )?;
    writeln!(out, "iterations = {}", op.iterations)?;
    Ok(ExitCode::SUCCESS)
}

fn join<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(";")
}

fn writer_for(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(create(&resolve_output(p))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn csv_writer(out: Box<dyn Write>) -> csv::Writer<Box<dyn Write>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

fn linearize_row(a: &StabilityAnalysis) -> [String; 7] {
    let p = &a.characteristic.poly;
    [
        a.variant.name().to_string(),
        a.d_g.to_string(),
        p.degree().to_string(),
        join(p.coeffs(), |c| format!("{c:.17e}")),
        join(&a.report.roots, |r| format!("{:.17e}", r.re)),
        join(&a.report.roots, |r| format!("{:.17e}", r.im)),
        a.verdict().to_string(),
    ]
}

fn model_variant(scenario: &Scenario, flag: Option<&str>) -> Result<ModelVariant> {
    match flag {
        Some(v) => Ok(v.parse()?),
        None => scenario.model_variant(),
    }
}

pub fn linearize(
    scenario: &Scenario,
    variant: Option<&str>,
    dg: Option<&str>,
    out: Option<&Path>,
) -> Result<ExitCode> {
    let variant = model_variant(scenario, variant)?;
    let cp = scenario.circuit()?;
    let vp = scenario.control()?;
    let values = match dg {
        Some(spec) => parse_damping_list(spec)?,
        None => vec![vp.d_g],
    };
    let op = solve_operating_point(&cp, &vp).context("operating point not found")?;
    let mut w = csv_writer(writer_for(out)?);
    w.write_record([
        "variant", "D_g", "degree", "coeffs", "root_re", "root_im", "verdict",
    ])?;
    for d_g in values {
        let a = analyze_at(
            &op,
            &cp,
            &vp.with_damping(d_g),
            cp.quarter_period(),
            variant,
            scenario.analysis.stability_tol,
        )
        .with_context(|| format!("linearization failed at D_g = {d_g}"))?;
        w.write_record(linearize_row(&a))?;
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn write_locus<W: Write>(w: &mut csv::Writer<W>, rows: &[LocusRow]) -> Result<()> {
    w.write_record(["D_g", "dominant_re", "dominant_im", "verdict"])?;
    for row in rows {
        let a = row
            .outcome
            .as_ref()
            .map_err(|e| anyhow!("analysis failed at D_g = {}: {e}", row.d_g))?;
        // report the upper member of the dominant pair
        let dominant = a
            .report
            .roots
            .iter()
            .find(|r| r.im >= 0.0)
            .or(a.report.roots.first())
            .ok_or_else(|| anyhow!("no roots at D_g = {}", row.d_g))?;
        w.write_record([
            row.d_g.to_string(),
            format!("{:.17e}", dominant.re),
            format!("{:.17e}", dominant.im),
            a.verdict().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn sweep(
    scenario: &Scenario,
    variant: Option<&str>,
    dg: Option<&str>,
    out: Option<&Path>,
) -> Result<ExitCode> {
    let variant = model_variant(scenario, variant)?;
    let cp = scenario.circuit()?;
    let vp = scenario.control()?;
    let values = parse_damping_list(dg.unwrap_or("4:30:2"))?;
    let rows = sweep_parameter(&vp, &values, &cp, cp.quarter_period(), variant)?;
    let mut w = csv_writer(writer_for(out)?);
    write_locus(&mut w, &rows)?;
    Ok(ExitCode::SUCCESS)
}

/// Divergence window for a trace: the scenario's window, shortened so the
/// run still holds three windows.
fn classification(scenario: &Scenario, trace: &SimTrace) -> String {
    let span = trace.t.last().copied().unwrap_or(0.0) - trace.t.first().copied().unwrap_or(0.0);
    let fit = (span / trace.period() / 3.0 + 1e-9).floor() as usize;
    let window = scenario.analysis.window_periods.min(fit);
    if window < scenario.analysis.window_periods {
        warn!(
            "run too short for {}-period windows, using {window}",
            scenario.analysis.window_periods
        );
    }
    if window == 0 {
        return "Undetermined".into();
    }
    match detect_divergence(trace, window, scenario.analysis.divergence_threshold) {
        Ok(c) => c.to_string(),
        Err(e) => {
            warn!("classification failed: {e}");
            "Undetermined".into()
        }
    }
}

pub fn simulate(
    scenario: &Scenario,
    variant: Option<&str>,
    dg: Option<f64>,
    out: &Path,
    svg_plot: bool,
) -> Result<ExitCode> {
    let variant: SimVariant = match variant {
        Some(v) => v.parse()?,
        None => scenario.sim_variant()?,
    };
    let d_g = dg.unwrap_or(scenario.control.d_g);
    let cfg = scenario.sim_config(variant, d_g)?;
    let started = Instant::now();
    let trace = sim::run(&cfg)?;
    info!(
        "{variant} run took {:.2} s",
        started.elapsed().as_secs_f64()
    );
    let class = classification(scenario, &trace);
    let path = resolve_output(out);
    let mut w = create(&path)?;
    write_trace_csv(
        &trace,
        &mut w,
        &[("D_g", d_g.to_string()), ("classification", class.clone())],
    )?;
    w.flush()
        .with_context(|| format!("cannot write {}", path.display()))?;
    if svg_plot {
        let svg_path = path.with_extension("svg");
        let text = svg::plot(
            &trace.t,
            &[
                Series {
                    label: "p_g",
                    unit: "W",
                    values: &trace.p_g,
                },
                Series {
                    label: "q_g",
                    unit: "var",
                    values: &trace.q_g,
                },
            ],
        );
        fs::write(&svg_path, text)
            .with_context(|| format!("cannot write {}", svg_path.display()))?;
    }
    let tail = trace.tail_mean(&trace.p_g, 5.0).unwrap_or(f64::NAN);
    println!(
        "{variant} D_g={d_g}: {class}, mean p_g over last 5 periods = {tail:.6} W, {} samples -> {}",
        trace.len(),
        path.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn value_at(trace: &SimTrace, t: f64) -> Option<f64> {
    let dt = trace.t.get(1)? - trace.t.first()?;
    let k = ((t - trace.t[0]) / dt).round();
    if k < 0.0 {
        return None;
    }
    trace.p_g.get(k as usize).copied()
}

fn write_compare(path: &Path, result: &Reproduction) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(create(path)?);
    w.write_record(["D_g", "t", "p_g1", "p_g2", "p_g3", "p_g4"])?;
    for d_g in reproduce::DAMPING_CASES {
        let get = |v: SimVariant| {
            result
                .trace(v, d_g)
                .ok_or_else(|| anyhow!("missing {v} trace at D_g = {d_g}"))
        };
        let averaged = centered_moving_average(get(SimVariant::TimeDomain)?)?;
        let others = [
            get(SimVariant::DynamicPhasor)?,
            get(SimVariant::BaselineStatic)?,
            get(SimVariant::BaselineLineDynamics)?,
        ];
        for (&t, &p1) in averaged.t.iter().zip(&averaged.p_g) {
            if t > COMPARE_SPAN {
                break;
            }
            let mut row = vec![d_g.to_string(), format!("{t:.6}"), format!("{p1:.17e}")];
            for trace in others {
                row.push(value_at(trace, t).map_or(String::new(), |v| format!("{v:.17e}")));
            }
            w.write_record(&row)?;
        }
    }
    w.flush()
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn locus_summary(rows: &[LocusRow]) -> String {
    let mut text = String::from("\ndamping locus (proposed model, dominant root):\n");
    for row in rows {
        match &row.outcome {
            Ok(a) => {
                let r = a.report.dominant().unwrap_or_default();
                text.push_str(&format!(
                    "  D_g={:<4} re={:+.6} |im|={:.6} {}\n",
                    row.d_g,
                    r.re,
                    r.im.abs(),
                    a.verdict()
                ));
            }
            Err(e) => text.push_str(&format!("  D_g={:<4} error: {e}\n", row.d_g)),
        }
    }
    text
}

pub fn reproduce_paper(out: &Path) -> Result<ExitCode> {
    let dir = resolve_output(out);
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let started = Instant::now();
    let result = reproduce::reproduce(&profile::table1_circuit(), &profile::table1_control())?;
    let elapsed = started.elapsed().as_secs_f64();

    let mut locus = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(create(&dir.join("fig3_locus.csv"))?);
    write_locus(&mut locus, &result.locus)?;
    write_compare(&dir.join("fig4_compare.csv"), &result)?;

    let mut report = result.report();
    report.push_str(&locus_summary(&result.locus));
    report.push_str(&format!("\ncomputed in {elapsed:.1} s\n"));
    let verdicts = dir.join("verdicts.txt");
    fs::write(&verdicts, &report)
        .with_context(|| format!("cannot write {}", verdicts.display()))?;
    print!("{report}");

    let mismatches = result.mismatches();
    if mismatches.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for c in mismatches {
            eprintln!("mismatch: {} at D_g = {}", c.model, c.d_g);
        }
        Ok(ExitCode::from(MISMATCH_EXIT))
    }
}
