//! Subcommand bodies.

use std::io::Write;

use mrca_core::acceptance::{self, AcceptanceOptions, Suite};
use mrca_core::duality::{self, ReversalOptions};
use mrca_core::simulate::{self, ChainStart, PathOptions};
use mrca_core::{csbp, kernels, LifetimeMeasure};
use serde::Serialize;

use crate::config::Resolved;
use crate::{Command, CsbpCommand, Failure, StartKind};

/// Floats with 17 significant digits, enough to round-trip.
fn f(x: f64) -> String {
    format!("{x:.16e}")
}

fn measure(settings: &Resolved) -> Result<LifetimeMeasure, Failure> {
    let spec = settings
        .measure
        .clone()
        .ok_or_else(|| Failure::Usage("a measure is required (--measure or the config file)".into()))?;
    Ok(LifetimeMeasure::from_spec(spec)?)
}

fn json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), Failure> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| Failure::Usage(format!("output: {e}")))?;
    writeln!(out)?;
    Ok(())
}

/// Collect per-stream results, keeping stream order.
fn collect<T>(results: Vec<mrca_core::Result<T>>) -> Result<Vec<T>, Failure> {
    results.into_iter().map(|r| r.map_err(Failure::from)).collect()
}

pub fn dispatch(command: &Command, settings: &Resolved, out: &mut dyn Write) -> Result<(), Failure> {
    match command {
        Command::Kernel { x, t, y } => kernel(settings, out, x, t, y),
        Command::Classify => {
            let report = measure(settings)?.classify();
            eprintln!("jump chain: {:?}", report.jump_chain);
            json(out, &report)
        }
        Command::Simulate { paths, horizon, x0, stationary, t0, marginal } => {
            let m = measure(settings)?;
            let opts = PathOptions { t0: *t0, ..PathOptions::default() };
            let (horizon, stationary, x0) = (*horizon, *stationary, *x0);
            if let Some(at) = marginal {
                if !(*at >= 0.0 && *at <= horizon) {
                    return Err(Failure::Usage(format!("--marginal {at} must lie in [0, {horizon}]")));
                }
            }
            let runs = simulate::fan_out(settings.seed, *paths, |_, rng| {
                if stationary {
                    simulate::simulate_stationary(&m, horizon, opts, rng)
                } else {
                    simulate::simulate_path(&m, x0, horizon, opts, rng)
                }
            });
            let runs = collect(runs)?;
            match marginal {
                Some(at) => {
                    writeln!(out, "stream,value")?;
                    for (s, p) in runs.iter().enumerate() {
                        writeln!(out, "{s},{}", f(p.value_at(*at)?))?;
                    }
                }
                None => {
                    writeln!(out, "stream,time,peak,trough")?;
                    for (s, p) in runs.iter().enumerate() {
                        for j in &p.jumps {
                            writeln!(out, "{s},{},{},{}", f(j.time), f(j.peak), f(j.trough))?;
                        }
                    }
                }
            }
            let jumps: usize = runs.iter().map(|p| p.jumps.len()).sum();
            eprintln!("{} paths, {jumps} jumps", runs.len());
            Ok(())
        }
        Command::Stationary { x, sample } => {
            let m = measure(settings)?;
            match sample {
                Some(n) => {
                    let draws = collect(simulate::fan_out(settings.seed, *n, |_, rng| simulate::sample_stationary(&m, rng)))?;
                    writeln!(out, "stream,value")?;
                    for (s, v) in draws.iter().enumerate() {
                        writeln!(out, "{s},{}", f(*v))?;
                    }
                }
                None => {
                    if x.is_empty() {
                        return Err(Failure::Usage("give --x points or --sample".into()));
                    }
                    writeln!(out, "x,density,cdf")?;
                    for &v in x {
                        let d = kernels::stationary_density(&m, v)?;
                        let c = kernels::stationary_cdf(&m, v)?;
                        writeln!(out, "{},{},{}", f(v), f(d), f(c))?;
                    }
                }
            }
            Ok(())
        }
        Command::Jumpchain { start, value, steps } => {
            let m = measure(settings)?;
            let kind = match start {
                StartKind::Peak => ChainStart::Peak,
                StartKind::Trough => ChainStart::Trough,
            };
            let mut rng = simulate::RngStream::new(settings.seed, 0).rng();
            let chain = simulate::simulate_jump_chain(&m, kind, *value, *steps, &mut rng)?;
            writeln!(out, "step,peak,trough")?;
            for (k, (l, r)) in chain.peaks.iter().zip(&chain.troughs).enumerate() {
                writeln!(out, "{k},{},{}", f(*l), f(*r))?;
            }
            if chain.hit_zero {
                eprintln!("chain reached zero after {} steps", chain.len());
            }
            Ok(())
        }
        Command::DualTest { paths, window, stride } => {
            let m = measure(settings)?;
            let opts = ReversalOptions {
                seed: settings.seed,
                n_paths: *paths,
                window: *window,
                stride: *stride,
                ..ReversalOptions::default()
            };
            let report = duality::reversal_test(&m, opts)?;
            for c in &report.comparisons {
                eprintln!("{}: D = {:.4}, p = {:.3e}, n = {}", c.comparison, c.statistic, c.p_value, c.n);
            }
            json(out, &report)
        }
        Command::Csbp { command } => csbp_command(settings, out, command),
        Command::Accept { suite } => accept(settings, out, suite),
    }
}

fn kernel(settings: &Resolved, out: &mut dyn Write, xs: &[f64], ts: &[f64], ys: &[f64]) -> Result<(), Failure> {
    let m = measure(settings)?;
    // evaluate everything first so that a bad point leaves no partial table
    let mut rows = Vec::new();
    for &x in xs {
        for &t in ts {
            let atom = kernels::transition_atom(&m, x, t)?;
            let zero = kernels::prob_at_zero(&m, x, t)?;
            for &y in ys {
                let d = kernels::transition_density(&m, x, t, y)?;
                rows.push(format!("{},{},{},{},{},{}", f(x), f(t), f(y), f(d), f(atom), f(zero)));
            }
        }
    }
    writeln!(out, "x,t,y,density,atom,zero_mass")?;
    for r in rows {
        writeln!(out, "{r}")?;
    }
    Ok(())
}

#[derive(Serialize)]
struct TailCheckRow {
    beta: f64,
    t: f64,
    tail: f64,
    relative_error: f64,
}

fn csbp_command(settings: &Resolved, out: &mut dyn Write, command: &CsbpCommand) -> Result<(), Failure> {
    match command {
        CsbpCommand::Laplace { beta, delta, x, t, theta } => {
            let delta = delta.unwrap_or_else(|| csbp::conditioned_delta(*beta));
            let p = csbp::StableBranchingParams::new(*beta, delta, 0.0)?;
            writeln!(out, "beta,delta,x,t,theta,value")?;
            for &x in x {
                for &t in t {
                    for &th in theta {
                        let v = csbp::laplace_delta_family(p.beta, x, t, th, p.delta);
                        writeln!(out, "{},{},{},{},{},{}", f(p.beta), f(p.delta), f(x), f(t), f(th), f(v))?;
                    }
                }
            }
            Ok(())
        }
        CsbpCommand::SampleZ { beta, delta, t, n } => {
            let (beta, delta, t) = (*beta, *delta, *t);
            csbp::StableBranchingParams::new(beta, delta, 0.0)?;
            let draws = collect(simulate::fan_out(settings.seed, *n, |_, rng| csbp::sample_z_from_zero(t, beta, delta, rng)))?;
            writeln!(out, "stream,value")?;
            for (s, v) in draws.iter().enumerate() {
                writeln!(out, "{s},{}", f(*v))?;
            }
            Ok(())
        }
        CsbpCommand::Lemma51 { beta, t } => {
            let mut rows = Vec::new();
            for &b in beta {
                for &s in t {
                    rows.push(TailCheckRow {
                        beta: b,
                        t: s,
                        tail: csbp::lifetime_tail_from_branching(b, s)?,
                        relative_error: csbp::lemma51_check(b, s)?,
                    });
                }
            }
            let worst = rows.iter().map(|r| r.relative_error).fold(0.0, f64::max);
            eprintln!("largest relative error {worst:.3e}");
            json(out, &rows)
        }
    }
}

fn accept(settings: &Resolved, out: &mut dyn Write, suite: &str) -> Result<(), Failure> {
    let suites: Vec<Suite> = if suite == "all" {
        Suite::ALL.to_vec()
    } else {
        let s = Suite::from_name(suite).ok_or_else(|| {
            let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
            Failure::Usage(format!("unknown suite {suite}; expected all or one of {}", names.join(", ")))
        })?;
        vec![s]
    };
    let opts = AcceptanceOptions {
        seed: settings.seed,
        tolerance_scale: settings.tolerance_scale,
        ..AcceptanceOptions::default()
    };
    let reports: Vec<_> = suites.iter().map(|&s| acceptance::run(s, opts)).collect();
    for r in &reports {
        eprintln!("{} {:>2} {}", if r.passed { "PASS" } else { "FAIL" }, r.id, r.suite.name());
    }
    if reports.len() == 1 {
        json(out, &reports[0])?;
    } else {
        json(out, &reports)?;
    }
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed).map(|r| r.suite.name()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Acceptance(failed.join(", ")))
    }
}
