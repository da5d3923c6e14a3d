//! Subcommand drivers: flow, shrinker, verify, ineq.
//!
//! Exit-code contract: 0 success, 1 contract/validation error (bad flags,
//! malformed config, infeasible request), 2 verification failure (a check or
//! scan ran to completion and its certified bound does not hold).

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use gcf_core::bodies::{BodySpec, Harmonic, TRIG_BASIS};
use gcf_core::flow::{
    DiagnosticsRecord, FlowConfig, FlowEngine, FlowSink, SnapshotView, StopReason,
};
use gcf_core::identities::{run_case, CheckStatus, VerifyCase};
use gcf_core::ineq::{scan_with, ScanConfig};
use gcf_core::shrinker::{shooting_sweep, solve_shrinker_ode_n1, OdeOutcome, ODE_STEPS};
use gcf_core::{tol, SphereGrid};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{BodyKind, Settings};
use crate::emit;

/// Margin used when shrinking randomly drawn bodies until convex.
const CONVEXITY_MARGIN: f64 = 0.1;

/// Resolved run parameters that matter for reproducing the artifacts; the
/// seed lands here so every output directory records its own provenance.
fn write_manifest(dir: &Path, subcommand: &str, s: &Settings, extra: &[(&str, String)]) -> Result<()> {
    let mut out = String::from("{\n");
    out.push_str(&format!("  \"subcommand\": \"{subcommand}\",\n"));
    out.push_str(&format!("  \"n\": {},\n", s.n));
    out.push_str(&format!("  \"alpha\": {},\n", emit::sig17(s.alpha)));
    out.push_str(&format!("  \"resolution\": {},\n", s.resolution));
    out.push_str(&format!("  \"seed\": {}", s.seed));
    for (k, v) in extra {
        out.push_str(&format!(",\n  \"{k}\": {v}"));
    }
    out.push_str("\n}\n");
    fs::write(dir.join("run.json"), out).context("writing run.json")?;
    Ok(())
}

/// Initial body for a flow run; random bodies draw all their coefficients
/// from the single seeded generator.
fn initial_body(s: &Settings) -> Result<BodySpec> {
    let kind = s.body.unwrap_or(if s.n == 1 {
        BodyKind::PerturbedCircle
    } else {
        BodyKind::Ellipsoid
    });
    let want = |n: usize| -> Result<()> {
        if s.n != n {
            bail!("body '{kind}' needs n = {n}, run has n = {}", s.n);
        }
        Ok(())
    };
    Ok(match kind {
        BodyKind::Sphere => BodySpec::Sphere { r: s.a },
        BodyKind::PerturbedCircle => {
            want(1)?;
            BodySpec::perturbed_circle()
        }
        BodyKind::Ellipse => {
            want(1)?;
            BodySpec::Ellipse { a: s.a, b: s.b }
        }
        BodyKind::Ellipsoid => {
            want(2)?;
            BodySpec::Ellipsoid { a: s.a, b: s.b, c: s.c }
        }
        BodyKind::RandomTrig => {
            let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
            if s.n == 1 {
                let harmonics = (2..=6)
                    .map(|m| Harmonic {
                        m,
                        a_cos: s.amp * rng.gen_range(-1.0..1.0),
                        a_sin: s.amp * rng.gen_range(-1.0..1.0),
                    })
                    .collect();
                BodySpec::TrigCircle { harmonics }
            } else {
                let mut coeffs = [0.0; TRIG_BASIS];
                for c in coeffs.iter_mut() {
                    *c = rng.gen_range(-1.0..1.0);
                }
                BodySpec::TrigSphere { amp: s.amp, coeffs }
            }
        }
    })
}

/// Streams snapshots to disk and collects diagnostics rows for the series
/// CSV. The sink trait cannot fail, so I/O errors are parked and surfaced
/// after the run.
struct DirSink {
    dir: std::path::PathBuf,
    records: Vec<DiagnosticsRecord>,
    io_error: Option<anyhow::Error>,
}

impl FlowSink for DirSink {
    fn on_record(&mut self, rec: &DiagnosticsRecord) {
        self.records.push(*rec);
    }
    fn on_snapshot(&mut self, view: &SnapshotView<'_>) {
        if self.io_error.is_some() {
            return;
        }
        let path = self.dir.join(format!("snapshot_{:06}.json", view.step));
        if let Err(e) = fs::write(&path, emit::emit_snapshot(view)) {
            self.io_error = Some(anyhow::Error::new(e).context(format!("writing {path:?}")));
        }
    }
}

fn stop_name(stop: StopReason) -> &'static str {
    match stop {
        StopReason::Converged => "converged",
        StopReason::StepCap => "step-cap",
        StopReason::VolumeFloor => "volume-floor",
        StopReason::Collapse => "collapse",
    }
}

pub fn flow(s: &Settings) -> Result<u8> {
    let mut cfg = FlowConfig::new(s.n, s.alpha, s.resolution);
    cfg.c_cfl = s.c_cfl;
    cfg.normalize = s.normalize;
    cfg.min_volume = s.min_volume;
    cfg.record_every = s.record_every;
    cfg.snapshot_every = s.snapshot_every;
    cfg.seed = s.seed;
    if let Some(r) = s.stop_ratio {
        cfg.stop_ratio = r;
    }
    if let Some(m) = s.max_steps {
        cfg.max_steps = m;
    }

    let grid = SphereGrid::build(s.n, s.resolution)?;
    let mut body = initial_body(s)?;
    let shrink_steps = body.shrink_to_convex(&grid, CONVEXITY_MARGIN)?;
    let h0 = body.sample(&grid)?;

    fs::create_dir_all(&s.out_dir)
        .with_context(|| format!("creating output directory {:?}", s.out_dir))?;
    let mut engine = FlowEngine::new(&cfg, h0)?;
    let mut sink = DirSink { dir: s.out_dir.clone(), records: Vec::new(), io_error: None };
    let stop = engine.run(&cfg, &mut sink)?;
    if let Some(e) = sink.io_error.take() {
        return Err(e);
    }
    // The loop records on cadence; make sure the terminal state is in the
    // series even when the stop step falls between records.
    if sink.records.last().map(|r| r.step) != Some(engine.step_index()) {
        sink.records.push(engine.diagnostics(cfg.alpha));
    }
    fs::write(s.out_dir.join("series.csv"), emit::emit_series(&sink.records)?)
        .context("writing series.csv")?;
    write_manifest(
        &s.out_dir,
        "flow",
        s,
        &[
            ("body", format!("\"{}\"", body_label(s))),
            ("shrink_steps", shrink_steps.to_string()),
            ("c_cfl", emit::sig17(s.c_cfl)),
            ("normalize", s.normalize.to_string()),
            ("stop_ratio", emit::sig17(cfg.stop_ratio)),
            ("max_steps", cfg.max_steps.to_string()),
            ("record_every", cfg.record_every.to_string()),
            ("snapshot_every", cfg.snapshot_every.to_string()),
        ],
    )?;

    let (ratio, big) = engine.roundness();
    println!(
        "flow: n={} alpha={} {} after {} steps (t={:.6e}); lambda_max/lambda_min - 1 = {:.3e}, Lambda_max = {:.3e}",
        s.n,
        s.alpha,
        stop_name(stop),
        engine.step_index(),
        engine.t(),
        ratio - 1.0,
        big,
    );
    Ok(0)
}

fn body_label(s: &Settings) -> BodyKind {
    s.body.unwrap_or(if s.n == 1 { BodyKind::PerturbedCircle } else { BodyKind::Ellipsoid })
}

pub fn shrinker(s: &Settings) -> Result<u8> {
    fs::create_dir_all(&s.out_dir)
        .with_context(|| format!("creating output directory {:?}", s.out_dir))?;
    if let Some((lo, hi, count)) = s.sweep {
        if !(hi > lo) {
            bail!("sweep range is empty: [{lo}, {hi}]");
        }
        let rows = shooting_sweep(s.alpha, lo, hi, count)?;
        let mut csv = String::from("h0,closure,residual\n");
        let best = rows
            .iter()
            .min_by(|a, b| a.closure.total_cmp(&b.closure))
            .map(|r| (r.h0, r.closure));
        for r in &rows {
            csv.push_str(&format!(
                "{},{},{}\n",
                emit::sig17(r.h0),
                emit::sig17(r.closure),
                emit::sig17(r.residual)
            ));
        }
        fs::write(s.out_dir.join("sweep.csv"), csv).context("writing sweep.csv")?;
        write_manifest(
            &s.out_dir,
            "shrinker",
            s,
            &[
                ("sweep_lo", emit::sig17(lo)),
                ("sweep_hi", emit::sig17(hi)),
                ("sweep_count", count.to_string()),
            ],
        )?;
        if let Some((h0, closure)) = best {
            println!(
                "shrinker sweep: {count} shots over h0 in [{lo}, {hi}]; smallest closure defect {closure:.3e} at h0 = {h0:.6}"
            );
        }
        return Ok(0);
    }

    match solve_shrinker_ode_n1(s.alpha, s.h0, 0.0)? {
        OdeOutcome::Closed(sol) => {
            let view = SnapshotView {
                n: 1,
                resolution: ODE_STEPS,
                h: &sol.h,
                t: 0.0,
                step: 0,
                alpha: s.alpha,
            };
            fs::write(s.out_dir.join("snapshot_000000.json"), emit::emit_snapshot(&view))
                .context("writing shrinker snapshot")?;
            write_manifest(&s.out_dir, "shrinker", s, &[("h0", emit::sig17(s.h0))])?;
            println!(
                "shrinker: closed orbit at alpha={} h0={}; closure={:.3e} residual={:.3e} energy_drift={:.3e}",
                s.alpha, s.h0, sol.closure, sol.residual, sol.energy_drift
            );
            Ok(0)
        }
        OdeOutcome::Open { closure } => {
            println!(
                "shrinker: orbit from h0={} does not close (defect {closure:.3e}); no artifact written",
                s.h0
            );
            Ok(1)
        }
        OdeOutcome::Blowup { theta } => {
            println!(
                "shrinker: trajectory from h0={} loses convexity at theta={theta:.4}; no artifact written",
                s.h0
            );
            Ok(1)
        }
    }
}

pub fn verify(s: &Settings, case: &str) -> Result<u8> {
    let case_id = match case {
        "sphere" => VerifyCase::Sphere,
        "ellipse" => VerifyCase::Ellipse,
        "random" => VerifyCase::Random,
        "ode-shrinker" => VerifyCase::OdeShrinker,
        other => bail!("unknown case '{other}' (sphere, ellipse, random, ode-shrinker)"),
    };
    let coeffs: Vec<[f64; TRIG_BASIS]> = if matches!(case_id, VerifyCase::Random) {
        let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
        (0..100)
            .map(|_| {
                let mut c = [0.0; TRIG_BASIS];
                for v in c.iter_mut() {
                    *v = rng.gen_range(-1.0..1.0);
                }
                c
            })
            .collect()
    } else {
        Vec::new()
    };

    let reports = run_case(case_id, &coeffs)?;
    fs::create_dir_all(&s.out_dir)
        .with_context(|| format!("creating output directory {:?}", s.out_dir))?;
    fs::write(s.out_dir.join(format!("verify_{case}.json")), emit::emit_reports(&reports))
        .context("writing verify report")?;
    write_manifest(&s.out_dir, "verify", s, &[("case", format!("\"{case}\""))])?;

    print!("{}", emit::report_table(&reports));
    let failed = reports.iter().filter(|r| r.status != CheckStatus::Pass).count();
    println!(
        "verify {case}: {} checks, {failed} failing (seed {})",
        reports.len(),
        s.seed
    );
    Ok(if failed > 0 { 2 } else { 0 })
}

pub fn ineq(s: &Settings) -> Result<u8> {
    let cfg = ScanConfig {
        n_max: s.n_max,
        alpha_samples: s.alpha_samples,
        theta_samples: s.theta_samples,
        theta_max: s.theta_max,
    };
    let mut csv = String::from(emit::SCAN_HEADER);
    csv.push('\n');
    let summary = scan_with(&cfg, |row| csv.push_str(&emit::scan_row_csv(row)))?;

    fs::create_dir_all(&s.out_dir)
        .with_context(|| format!("creating output directory {:?}", s.out_dir))?;
    fs::write(s.out_dir.join("ineq_scan.csv"), csv).context("writing ineq_scan.csv")?;
    fs::write(s.out_dir.join("ineq_summary.json"), emit::emit_scan_summary(&summary))
        .context("writing ineq_summary.json")?;
    write_manifest(
        &s.out_dir,
        "ineq",
        s,
        &[
            ("n_max", s.n_max.to_string()),
            ("alpha_samples", s.alpha_samples.to_string()),
            ("theta_samples", s.theta_samples.to_string()),
            ("theta_max", emit::sig17(s.theta_max)),
        ],
    )?;

    let margin_ok = summary.min_j_margin >= -tol::J_BOUND_SLACK;
    let form_ok = summary.max_form_discrepancy <= tol::J_FORM_REL;
    let zeros_ok = summary
        .i1_zero_location
        .iter()
        .enumerate()
        .all(|(k, &z)| {
            let n = k + 2;
            (z - gcf_core::ineq::i1_zero(n)).abs() <= tol::I1_ZERO_TOL
        });
    println!(
        "ineq: {} (n, alpha) rows; min J margin {:.3e} (bound -{:.0e}), max form discrepancy {:.3e} (bound {:.0e})",
        summary.rows_scanned,
        summary.min_j_margin,
        tol::J_BOUND_SLACK,
        summary.max_form_discrepancy,
        tol::J_FORM_REL,
    );
    println!(
        "ineq: theta swept over (0, {}]; at a curvature maximum only theta >= 1 occurs, the sub-1 range is extra coverage",
        s.theta_max
    );
    Ok(if margin_ok && form_ok && zeros_ok { 0 } else { 2 })
}
