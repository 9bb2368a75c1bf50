//! CSV traces and the flat `key=value` summary.

use std::fmt::Write;

use super::config::ExperimentConfig;
use super::RunSummary;
use crate::optimizers::RunTrace;

pub const TRACE_HEADER: &str = "k,f_z,gamma,branch,evals,grad_norm_D";

pub fn trace_file_name(seed: u64) -> String {
    format!("trace_seed{seed}.csv")
}

/// 17 significant digits, so equal files mean bit-equal values.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Header plus one line per iteration.
pub fn format_trace_csv(trace: &RunTrace) -> String {
    let mut out = String::with_capacity(64 * (trace.records.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in &trace.records {
        let grad = r.grad_norm_d.map(num).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.k,
            num(r.f_z_after),
            num(r.gamma),
            r.branch,
            r.evals_cumulative,
            grad
        );
    }
    out
}

pub fn format_summary(config: &ExperimentConfig, summary: &RunSummary) -> String {
    let mut out = String::new();
    let mut put = |k: String, v: String| {
        let _ = writeln!(out, "{k}={v}");
    };
    put("fingerprint".into(), format!("{:016x}", summary.fingerprint));
    put("method".into(), config.method.to_string());
    put("beta".into(), config.beta.to_string());
    put("objective".into(), config.objective.name().into());
    put("dim".into(), config.dim().to_string());
    put("distribution".into(), config.distribution.to_string());
    put("schedule".into(), config.schedule.kind.as_str().into());
    put("seeds".into(), summary.seeds.len().to_string());
    put("converged".into(), summary.seeds.iter().all(|s| s.stop.as_str() == "converged").to_string());
    for s in &summary.seeds {
        let p = format!("seed.{}", s.seed);
        put(format!("{p}.iterations"), s.iterations.to_string());
        put(format!("{p}.evaluations"), s.evaluations.to_string());
        put(format!("{p}.final_value"), num(s.final_value));
        if let Some(g) = s.final_gap {
            put(format!("{p}.final_gap"), num(g));
        }
        put(format!("{p}.stop"), s.stop.as_str().into());
        if let Some(r) = &s.rate {
            put(format!("{p}.rate_contraction"), num(r.value));
            put(format!("{p}.rate_r2"), num(r.r_squared));
        }
        if let Some(g) = s.mean_grad_norm {
            put(format!("{p}.mean_grad_norm_D"), num(g));
        }
        put(format!("{p}.wall_time_s"), format!("{:.3}", s.wall_time_s));
    }
    match &summary.envelope {
        Some(e) => {
            put("envelope.theorem".into(), e.theorem.to_string());
            for c in &e.checkpoints {
                put(format!("envelope.k{}.observed", c.k), num(c.observed));
                put(format!("envelope.k{}.bound", c.k), num(c.bound));
                put(format!("envelope.k{}.pass", c.k), c.pass.to_string());
            }
            put("envelope.verdict".into(), if e.pass { "pass" } else { "fail" }.into());
        }
        None => put("envelope.verdict".into(), "none".into()),
    }
    for (i, w) in summary.warnings.iter().enumerate() {
        put(format!("warning.{i}"), w.clone());
    }
    put("wall_time_s".into(), format!("{:.3}", summary.wall_time_s));
    out
}
