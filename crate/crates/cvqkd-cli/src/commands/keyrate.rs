//! The `keyrate` subcommand: evaluate the asymptotic key-rate bound from an
//! explicit operating point, echoing the inputs for auditability.

use serde::Serialize;

use cvqkd::core::LinkParams;
use cvqkd::estimation::{evaluate_key_rate, SecurityInputs};

use crate::config::RunConfig;
use crate::{CliError, KeyrateArgs};

#[derive(Debug, Serialize)]
struct InputsEcho {
    v_mod_snu: f64,
    eta: f64,
    tau: f64,
    t_snu: f64,
    xi_snu: f64,
    beta: f64,
    fer: f64,
    baud_rate_hz: f64,
}

#[derive(Debug, Serialize)]
struct KeyrateOutput {
    inputs: InputsEcho,
    snr: f64,
    mutual_information_bits: f64,
    holevo_bits: f64,
    key_fraction_bits: f64,
    key_rate_bps: f64,
}

fn resolve_link(cfg: &RunConfig, args: &KeyrateArgs) -> LinkParams {
    let mut link = cfg.link_params();
    if let Some(v) = args.v_mod {
        link.v_mod_snu = v;
    }
    if let Some(v) = args.eta {
        link.eta = v;
    }
    if let Some(v) = args.tau {
        link.tau = v;
    }
    if let Some(v) = args.t {
        link.t_snu = v;
    }
    if let Some(v) = args.xi {
        link.u_snu = v;
    }
    if let Some(v) = args.beta {
        link.beta = v;
    }
    if let Some(v) = args.fer {
        link.fer = v;
    }
    if let Some(v) = args.baud {
        link.baud_rate_hz = v;
    }
    link
}

fn echo(link: &LinkParams) -> InputsEcho {
    InputsEcho {
        v_mod_snu: link.v_mod_snu,
        eta: link.eta,
        tau: link.tau,
        t_snu: link.t_snu,
        xi_snu: link.u_snu,
        beta: link.beta,
        fer: link.fer,
        baud_rate_hz: link.baud_rate_hz,
    }
}

fn evaluate(link: &LinkParams) -> Result<KeyrateOutput, CliError> {
    // A zero-efficiency reconciler produces no key; the security inputs
    // themselves require beta > 0, so answer the degenerate case directly.
    if link.beta == 0.0 {
        return Ok(KeyrateOutput {
            inputs: echo(link),
            snr: f64::NAN,
            mutual_information_bits: f64::NAN,
            holevo_bits: f64::NAN,
            key_fraction_bits: 0.0,
            key_rate_bps: 0.0,
        });
    }
    let inputs = SecurityInputs::from_link(link);
    let kr = evaluate_key_rate(&inputs, link.baud_rate_hz)
        .map_err(|e| CliError::usage(format!("keyrate: {e}")))?;
    Ok(KeyrateOutput {
        inputs: echo(link),
        snr: kr.snr,
        mutual_information_bits: kr.mutual_information_bits,
        holevo_bits: kr.holevo_bits,
        key_fraction_bits: kr.key_fraction_bits,
        key_rate_bps: kr.key_rate_bps,
    })
}

fn parse_sweep(spec: &str) -> Result<(f64, f64, usize), CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::usage(format!(
            "sweep spec '{spec}' must be START:STOP:STEPS"
        )));
    }
    let start: f64 = parts[0]
        .parse()
        .map_err(|_| CliError::usage(format!("sweep start '{}' is not a number", parts[0])))?;
    let stop: f64 = parts[1]
        .parse()
        .map_err(|_| CliError::usage(format!("sweep stop '{}' is not a number", parts[1])))?;
    let steps: usize = parts[2]
        .parse()
        .map_err(|_| CliError::usage(format!("sweep steps '{}' is not an integer", parts[2])))?;
    if steps < 2 {
        return Err(CliError::usage("sweep needs at least 2 steps"));
    }
    if !(start > 0.0 && stop <= 1.0 && start < stop) {
        return Err(CliError::usage(format!(
            "sweep range ({start}, {stop}) must satisfy 0 < start < stop <= 1"
        )));
    }
    Ok((start, stop, steps))
}

pub fn cmd_keyrate(cfg: &RunConfig, args: &KeyrateArgs) -> Result<(), CliError> {
    let link = resolve_link(cfg, args);

    if let Some(spec) = &args.sweep_eta {
        let (start, stop, steps) = parse_sweep(spec)?;
        let mut csv = String::from("eta,key_fraction_bits\n");
        let mut prev: Option<f64> = None;
        for i in 0..steps {
            let eta = start + (stop - start) * i as f64 / (steps - 1) as f64;
            let point = LinkParams { eta, ..link };
            let out = evaluate(&point)?;
            csv.push_str(&format!("{eta},{}\n", out.key_fraction_bits));
            // More transmittance can never buy less key: the emitted curve
            // doubles as a consistency check of the bound itself.
            if let Some(p) = prev {
                if out.key_fraction_bits < p - 1e-12 {
                    return Err(CliError::pipeline(format!(
                        "key fraction not monotone in eta: {} at eta {eta} after {p}",
                        out.key_fraction_bits
                    )));
                }
            }
            prev = Some(out.key_fraction_bits);
        }
        print!("{csv}");
        return Ok(());
    }

    let out = evaluate(&link)?;
    let text = serde_json::to_string_pretty(&out)
        .map_err(|e| CliError::io(format!("cannot serialize result: {e}")))?;
    println!("{text}");
    Ok(())
}
