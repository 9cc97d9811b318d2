//! The `traces` subcommand: generate one frame's detector traces as files,
//! or summarize an existing trace file.

use std::fs;

use serde::Serialize;

use cvqkd::core::{SampledTrace, TraceKind};
use cvqkd::pipeline::frame_physics;

use crate::config::RunConfig;
use crate::tracefile::{read_trace, write_trace};
use crate::{CliError, TracesAction};

#[derive(Debug, Serialize)]
struct TraceInfo {
    kind: String,
    complex: bool,
    sample_rate_hz: f64,
    count: usize,
    rms: f64,
    min: f64,
    max: f64,
}

fn kind_name(kind: TraceKind) -> &'static str {
    match kind {
        TraceKind::Modulated => "modulated",
        TraceKind::Vacuum => "vacuum",
        TraceKind::Electronic => "electronic",
    }
}

fn describe(trace: &SampledTrace) -> TraceInfo {
    let vals = trace.to_complex_vec();
    let n = vals.len().max(1) as f64;
    let rms = (vals.iter().map(|z| z.norm_sqr()).sum::<f64>() / n).sqrt();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for z in &vals {
        lo = lo.min(z.re);
        hi = hi.max(z.re);
        if trace.is_complex() {
            lo = lo.min(z.im);
            hi = hi.max(z.im);
        }
    }
    TraceInfo {
        kind: kind_name(trace.kind).to_string(),
        complex: trace.is_complex(),
        sample_rate_hz: trace.sample_rate_hz,
        count: trace.len(),
        rms,
        min: lo,
        max: hi,
    }
}

pub fn cmd_traces(cfg: &RunConfig, action: &TracesAction) -> Result<(), CliError> {
    match action {
        TracesAction::Gen { frame } => {
            let pipeline = cfg.pipeline();
            pipeline
                .validate()
                .map_err(|e| CliError::usage(format!("config: {e}")))?;
            let (_, _, traces) = frame_physics(&pipeline, cfg.seed, *frame)
                .map_err(|e| CliError::pipeline(format!("frame {frame}: {e}")))?;
            fs::create_dir_all(&cfg.output_dir).map_err(|e| {
                CliError::io(format!("cannot create {}: {e}", cfg.output_dir.display()))
            })?;
            for trace in [&traces.modulated, &traces.vacuum, &traces.electronic] {
                let path = cfg
                    .output_dir
                    .join(format!("frame_{frame:06}_{}.cvqt", kind_name(trace.kind)));
                write_trace(&path, trace)?;
                println!("{}", path.display());
            }
            Ok(())
        }
        TracesAction::Info { file } => {
            let trace = read_trace(file)?;
            let text = serde_json::to_string_pretty(&describe(&trace))
                .map_err(|e| CliError::io(format!("cannot serialize info: {e}")))?;
            println!("{text}");
            Ok(())
        }
    }
}
