//! The `run` subcommand: simulate `n_frames` end to end, reconcile when
//! configured, and write the metrics CSV plus summary JSON.

use std::fs;

use log::warn;
use rayon::prelude::*;

use cvqkd::estimation::{evaluate_key_rate, SecurityInputs};
use cvqkd::pipeline::{simulate_frame, FrameResult};
use cvqkd::reconciliation::{run_reconciliation, CorrelatedFrame, ReconciliationReport};
use cvqkd::core::{RngStream, StreamPurpose};

use crate::commands::load_code;
use crate::config::RunConfig;
use crate::metrics::{
    mean, render_metrics_csv, FrameMetrics, ReconciliationSummary, RunSummary,
};
use crate::CliError;

struct FrameOutcome {
    result: FrameResult,
    reconciliation: Option<ReconciliationReport>,
}

pub fn cmd_run(cfg: &RunConfig, jobs: usize) -> Result<(), CliError> {
    if cfg.n_frames == 0 {
        return Err(CliError::usage("run: frame count must be at least 1"));
    }
    if !(0.0..=1.0).contains(&cfg.max_drop_fraction) {
        return Err(CliError::usage(format!(
            "run: max_drop_fraction {} outside [0, 1]",
            cfg.max_drop_fraction
        )));
    }
    let pipeline = cfg.pipeline();
    pipeline
        .validate()
        .map_err(|e| CliError::usage(format!("config: {e}")))?;
    let link = cfg.link_params();
    let code = if cfg.reconciliation.enabled {
        Some(load_code(cfg.reconciliation.alist_path.as_deref())?)
    } else {
        None
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::usage(format!("cannot build worker pool: {e}")))?;

    // Indexed parallel map: results come back in frame order regardless of
    // worker count, and every stochastic stage is keyed on (seed, frame_id),
    // so outputs are bit-identical for any --jobs value.
    let outcomes: Vec<Result<FrameOutcome, cvqkd::CvqkdError>> = pool.install(|| {
        (0..cfg.n_frames)
            .into_par_iter()
            .map(|frame_id| {
                let result = simulate_frame(&pipeline, cfg.seed, frame_id)?;
                let reconciliation = match &code {
                    Some(h) => {
                        let frame = CorrelatedFrame {
                            alice: &result.alice_key,
                            bob: &result.bob_key,
                        };
                        let mut rng =
                            RngStream::new(cfg.seed, frame_id, StreamPurpose::ReconciliationBits);
                        Some(run_reconciliation(
                            &[frame],
                            h,
                            cfg.reconciliation.dimension,
                            &mut rng,
                        )?)
                    }
                    None => None,
                };
                Ok(FrameOutcome { result, reconciliation })
            })
            .collect()
    });

    let mut rows = Vec::new();
    let mut key_fractions = Vec::new();
    let mut key_rates = Vec::new();
    let mut dropped = 0u64;
    let mut recon_attempted = 0usize;
    let mut recon_converged = 0usize;
    let mut recon_net_bits = 0u64;
    let mut recon_betas = Vec::new();
    let mut recon_rate = f64::NAN;

    for (frame_id, outcome) in outcomes.into_iter().enumerate() {
        let outcome = match outcome {
            Ok(o) => o,
            Err(e) => {
                warn!("frame {frame_id} dropped: {e}");
                dropped += 1;
                continue;
            }
        };
        let budget = &outcome.result.budget;
        // The security bound prices this frame with its own estimates. The
        // excess-noise estimate stays signed in the metrics, but the bound
        // needs a physical state: a negative estimate means the channel
        // looks at least as good as noiseless, so evaluate at the boundary.
        // Estimates the model still rejects (for example eta_hat above 1)
        // yield no key but count as processed frames.
        let inputs =
            SecurityInputs::with_estimates(&link, budget.eta_hat, budget.xi_mean_snu().max(0.0));
        let (kf, rate) = match evaluate_key_rate(&inputs, link.baud_rate_hz) {
            Ok(kr) => (kr.key_fraction_bits, kr.key_rate_bps),
            Err(e) => {
                warn!("frame {frame_id}: estimates outside the security model ({e}); no key");
                (0.0, 0.0)
            }
        };
        key_fractions.push(kf);
        key_rates.push(rate);

        let decode_converged = outcome.reconciliation.as_ref().map(|r| {
            recon_attempted += r.codewords_attempted;
            recon_converged += r.codewords_converged;
            recon_net_bits += r.net_bits;
            recon_betas.push(r.beta_measured);
            recon_rate = r.code_rate;
            r.codewords_attempted > 0 && r.codewords_converged == r.codewords_attempted
        });

        rows.push(FrameMetrics {
            frame_id: outcome.result.frame_id,
            eta_hat: budget.eta_hat,
            xi_i_snu: budget.xi_i_snu,
            xi_q_snu: budget.xi_q_snu,
            v_est: budget.v_est,
            sync_offset_samples: outcome.result.rx_report.sync_offset_samples,
            ukf_converged: outcome.result.rx_report.ukf_converged,
            decode_converged,
            key_fraction_contribution: kf,
        });
    }

    let reconciliation = if cfg.reconciliation.enabled && recon_attempted > 0 {
        Some(ReconciliationSummary {
            codewords_attempted: recon_attempted,
            codewords_converged: recon_converged,
            net_bits: recon_net_bits,
            fer_measured: 1.0 - recon_converged as f64 / recon_attempted as f64,
            beta_measured: mean(recon_betas.iter().copied()),
            code_rate: recon_rate,
        })
    } else {
        None
    };

    let summary = RunSummary {
        n_frames: cfg.n_frames,
        frames_processed: rows.len() as u64,
        frames_dropped: dropped,
        seed: cfg.seed,
        mean_eta_hat: mean(rows.iter().map(|r| r.eta_hat)),
        mean_xi_i_snu: mean(rows.iter().map(|r| r.xi_i_snu)),
        mean_xi_q_snu: mean(rows.iter().map(|r| r.xi_q_snu)),
        mean_key_fraction_bits: mean(key_fractions.iter().copied()),
        mean_key_rate_bps: mean(key_rates.iter().copied()),
        reconciliation,
    };

    fs::create_dir_all(&cfg.output_dir).map_err(|e| {
        CliError::io(format!("cannot create {}: {e}", cfg.output_dir.display()))
    })?;
    // Archive the fully resolved configuration: the output directory alone
    // must be enough to reproduce the run.
    cfg.to_file(&cfg.output_dir.join("config_resolved.json"))?;
    let metrics_path = cfg.output_dir.join("metrics.csv");
    fs::write(&metrics_path, render_metrics_csv(&rows))
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", metrics_path.display())))?;
    let summary_text = serde_json::to_string_pretty(&summary)
        .map_err(|e| CliError::io(format!("cannot serialize summary: {e}")))?;
    let summary_path = cfg.output_dir.join("summary.json");
    fs::write(&summary_path, summary_text.clone() + "\n")
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", summary_path.display())))?;

    if cfg.write_traces {
        write_all_traces(cfg, &pipeline)?;
    }

    println!("{summary_text}");

    let drop_fraction = dropped as f64 / cfg.n_frames as f64;
    if drop_fraction > cfg.max_drop_fraction {
        return Err(CliError::pipeline(format!(
            "{dropped} of {} frames dropped ({:.1}% > {:.1}% tolerance)",
            cfg.n_frames,
            100.0 * drop_fraction,
            100.0 * cfg.max_drop_fraction
        )));
    }
    Ok(())
}

fn write_all_traces(
    cfg: &RunConfig,
    pipeline: &cvqkd::pipeline::PipelineConfig,
) -> Result<(), CliError> {
    for frame_id in 0..cfg.n_frames {
        let (_, _, traces) = cvqkd::pipeline::frame_physics(pipeline, cfg.seed, frame_id)
            .map_err(|e| CliError::pipeline(format!("traces for frame {frame_id}: {e}")))?;
        for (name, trace) in [
            ("modulated", &traces.modulated),
            ("vacuum", &traces.vacuum),
            ("electronic", &traces.electronic),
        ] {
            let path = cfg.output_dir.join(format!("frame_{frame_id:06}_{name}.cvqt"));
            crate::tracefile::write_trace(&path, trace)?;
        }
    }
    Ok(())
}
