use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use fqco::RunTrace;
use serde::Serialize;

use crate::input::LoadedProblem;

pub struct RunFiles {
    pub trace: PathBuf,
    pub probabilities: PathBuf,
    pub metadata: PathBuf,
}

pub fn run_files(out_dir: &Path, name: &str) -> RunFiles {
    RunFiles {
        trace: out_dir.join(format!("{name}_trace.csv")),
        probabilities: out_dir.join(format!("{name}_final_probabilities.csv")),
        metadata: out_dir.join(format!("{name}_metadata.json")),
    }
}

fn float(v: f64) -> String {
    format!("{v}")
}

pub fn write_trace(path: &Path, trace: &RunTrace) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    let p = trace.controller_count();
    let mut header = vec!["k".to_string()];
    header.extend((1..=p).map(|i| format!("zeta_{i}")));
    header.extend(["V", "r_a", "P_s", "dt_bound"].map(String::from));
    w.write_record(&header)?;
    for r in &trace.records {
        let mut row = vec![r.k.to_string()];
        row.extend(r.zetas.iter().map(|&z| float(z)));
        row.push(float(r.lyapunov));
        row.push(float(r.approx_ratio));
        row.push(float(r.success_prob));
        row.push(r.dt_bound.map(float).unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_probabilities(path: &Path, trace: &RunTrace) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    w.write_record(["bitstring", "probability"])?;
    for (i, p) in trace.final_probabilities.iter().enumerate() {
        let bits = fqco::bit_string(&fqco::index_bits(i, trace.n));
        w.write_record([bits, float(*p)])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct FinalMetrics {
    k: usize,
    lyapunov: f64,
    approx_ratio: f64,
    success_prob: f64,
}

#[derive(Serialize)]
struct Metadata<'a> {
    generated_at: String,
    version: &'static str,
    problem: String,
    n: usize,
    canonical_n: usize,
    gamma_source: &'a str,
    config: &'a fqco::RunConfig,
    cost_terms: &'a fqco::engine::CircuitCost,
    generator_terms: &'a fqco::engine::CircuitCost,
    omega_min: f64,
    omega_max: f64,
    optimal_states: &'a [String],
    dt_bound_violations: usize,
    final_metrics: FinalMetrics,
    trace_file: String,
    probabilities_file: String,
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Writes the trace, final probabilities and the metadata sidecar. Only the
/// sidecar carries a timestamp.
pub fn write_run(
    out_dir: &Path,
    name: &str,
    problem_path: &Path,
    loaded: &LoadedProblem,
    trace: &RunTrace,
    gamma_source: &str,
) -> Result<RunFiles> {
    std::fs::create_dir_all(out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;
    let files = run_files(out_dir, name);
    write_trace(&files.trace, trace)?;
    write_probabilities(&files.probabilities, trace)?;
    let last = trace.last();
    let meta = Metadata {
        generated_at: chrono::Utc::now().to_rfc3339(),
        version: env!("CARGO_PKG_VERSION"),
        problem: problem_path.display().to_string(),
        n: loaded.original.n,
        canonical_n: loaded.canonical.n,
        gamma_source,
        config: &trace.config,
        cost_terms: &trace.cost_terms,
        generator_terms: &trace.generator_terms,
        omega_min: trace.omega_min,
        omega_max: trace.omega_max,
        optimal_states: &trace.optimal_states,
        dt_bound_violations: trace.dt_bound_violations,
        final_metrics: FinalMetrics {
            k: last.k,
            lyapunov: last.lyapunov,
            approx_ratio: last.approx_ratio,
            success_prob: last.success_prob,
        },
        trace_file: file_name(&files.trace),
        probabilities_file: file_name(&files.probabilities),
    };
    let mut w = BufWriter::new(File::create(&files.metadata).with_context(|| format!("cannot create {}", files.metadata.display()))?);
    serde_json::to_writer_pretty(&mut w, &meta)?;
    writeln!(w)?;
    w.flush()?;
    Ok(files)
}

pub fn write_dump(path: &Path, trace: &RunTrace) -> Result<()> {
    let state = trace.final_state.as_ref().context("trace holds no final state")?;
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(f);
    state.write_dump(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Gnuplot script plotting V, r_a and P_s against k from a trace file.
pub fn write_gnuplot(out_dir: &Path, name: &str, trace: &Path, controllers: usize) -> Result<PathBuf> {
    let path = out_dir.join(format!("{name}_plot.gp"));
    let data = file_name(trace);
    let v_col = controllers + 2;
    let script = format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set xlabel 'layer k'\n\
         set terminal pngcairo size 900,900\n\
         set output '{name}_trace.png'\n\
         set multiplot layout 3,1\n\
         set ylabel 'V'\n\
         plot '{data}' using 1:{v_col} with lines\n\
         set ylabel 'r_a'\n\
         plot '{data}' using 1:{ra} with lines\n\
         set ylabel 'P_s'\n\
         plot '{data}' using 1:{ps} with lines\n\
         unset multiplot\n",
        ra = v_col + 1,
        ps = v_col + 2,
    );
    std::fs::write(&path, script).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}
