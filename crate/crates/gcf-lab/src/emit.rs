//! Output serialization: the diagnostics CSV, snapshot JSON, verification
//! report JSON, and scan dumps.
//!
//! Every float is written as `{:.16e}` (17 significant digits), which
//! round-trips any f64 bit-identically, and all files use LF line endings
//! unconditionally, so identical runs produce identical bytes on any host.

use anyhow::{bail, Context, Result};
use gcf_core::flow::{DiagnosticsRecord, SnapshotView};
use gcf_core::identities::{CheckStatus, IdentityReport};
use gcf_core::ineq::{ScanRow, ScanSummary};

pub const SERIES_HEADER: &str = "step,t,volume,K_min,K_max,lambda_ratio,Lambda_max,\
residual_max,f_max,w_max,umbilicity_at_fmax,gradF2_at_fmax";

/// 17-significant-digit decimal; enough to reproduce the exact f64 on parse.
pub fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn emit_series(records: &[DiagnosticsRecord]) -> Result<String> {
    if records.is_empty() {
        bail!("refusing to emit an empty diagnostics series");
    }
    let mut out = String::with_capacity(records.len() * 220);
    out.push_str(SERIES_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.step,
            sig17(r.t),
            sig17(r.volume),
            sig17(r.k_min),
            sig17(r.k_max),
            sig17(r.lambda_ratio),
            sig17(r.big_lambda_max),
            sig17(r.residual_max),
            sig17(r.f_max),
            sig17(r.w_max),
            sig17(r.umbilicity_at_fmax),
            sig17(r.grad_xsq_at_fmax),
        ));
    }
    Ok(out)
}

/// Parse a series CSV back; used by tests to confirm lossless round-trips.
pub fn parse_series(text: &str) -> Result<Vec<DiagnosticsRecord>> {
    let mut lines = text.lines();
    let header = lines.next().context("empty series file")?;
    if header != SERIES_HEADER {
        bail!("unexpected series header: {header}");
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 12 {
            bail!("row {}: expected 12 fields, got {}", i + 2, f.len());
        }
        let num =
            |s: &str| -> Result<f64> { s.parse().with_context(|| format!("row {}", i + 2)) };
        out.push(DiagnosticsRecord {
            step: f[0].parse().with_context(|| format!("row {}", i + 2))?,
            t: num(f[1])?,
            volume: num(f[2])?,
            k_min: num(f[3])?,
            k_max: num(f[4])?,
            lambda_ratio: num(f[5])?,
            big_lambda_max: num(f[6])?,
            residual_max: num(f[7])?,
            f_max: num(f[8])?,
            w_max: num(f[9])?,
            umbilicity_at_fmax: num(f[10])?,
            grad_xsq_at_fmax: num(f[11])?,
        });
    }
    Ok(out)
}

fn push_f64_array(out: &mut String, values: &[f64]) {
    out.push('[');
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&sig17(*v));
    }
    out.push(']');
}

/// Support-field snapshot document.
pub fn emit_snapshot(view: &SnapshotView<'_>) -> String {
    let (shape, offsets): (Vec<usize>, Vec<f64>) = if view.n == 1 {
        (vec![view.h.len()], vec![0.0])
    } else {
        // Latitude rows are half-offset from the pole; longitude starts at 0.
        (vec![view.resolution, 2 * view.resolution], vec![0.5, 0.0])
    };
    let mut out = String::with_capacity(view.h.len() * 26 + 256);
    out.push_str("{\n  \"version\": \"gcf-snapshot-1\",\n");
    out.push_str(&format!("  \"n\": {},\n", view.n));
    out.push_str(&format!(
        "  \"grid\": {{\"shape\": {shape:?}, \"offsets\": ["
    ));
    for (i, o) in offsets.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&sig17(*o));
    }
    out.push_str("]},\n  \"h\": ");
    push_f64_array(&mut out, view.h);
    out.push_str(",\n");
    out.push_str(&format!("  \"alpha\": {},\n", sig17(view.alpha)));
    out.push_str(&format!("  \"time\": {},\n", sig17(view.t)));
    out.push_str(&format!("  \"step\": {}\n}}\n", view.step));
    out
}

/// Parsed snapshot; `load(emit(x)) = x` for every field.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub n: usize,
    pub shape: Vec<usize>,
    pub offsets: Vec<f64>,
    pub h: Vec<f64>,
    pub alpha: Option<f64>,
    pub time: Option<f64>,
    pub step: Option<u64>,
}

pub fn load_snapshot(text: &str) -> Result<Snapshot> {
    let v: serde_json::Value = serde_json::from_str(text).context("snapshot is not JSON")?;
    let version = v["version"].as_str().context("missing version")?;
    if version != "gcf-snapshot-1" {
        bail!("unsupported snapshot version '{version}'");
    }
    let n = v["n"].as_u64().context("missing n")? as usize;
    let arr_usize = |key: &str| -> Result<Vec<usize>> {
        v["grid"][key]
            .as_array()
            .with_context(|| format!("missing grid.{key}"))?
            .iter()
            .map(|x| Ok(x.as_u64().context("non-integer entry")? as usize))
            .collect()
    };
    let arr_f64 = |val: &serde_json::Value, what: &str| -> Result<Vec<f64>> {
        val.as_array()
            .with_context(|| format!("missing {what}"))?
            .iter()
            .map(|x| x.as_f64().with_context(|| format!("non-numeric entry in {what}")))
            .collect()
    };
    Ok(Snapshot {
        n,
        shape: arr_usize("shape")?,
        offsets: arr_f64(&v["grid"]["offsets"], "grid.offsets")?,
        h: arr_f64(&v["h"], "h")?,
        alpha: v["alpha"].as_f64(),
        time: v["time"].as_f64(),
        step: v["step"].as_u64(),
    })
}

fn status_str(s: CheckStatus) -> &'static str {
    match s {
        CheckStatus::Pass => "pass",
        CheckStatus::Fail => "fail",
        CheckStatus::Inapplicable => "inapplicable",
    }
}

/// Verification reports as a single JSON array.
pub fn emit_reports(reports: &[IdentityReport]) -> String {
    let mut out = String::from("[\n");
    for (i, r) in reports.iter().enumerate() {
        let order = match r.observed_order {
            Some(o) => sig17(o),
            None => "null".into(),
        };
        out.push_str(&format!(
            "  {{\"id\": \"{}\", \"body\": \"{}\", \"resolution\": {}, \
             \"max_residual\": {}, \"observed_order\": {}, \"threshold\": {}, \
             \"status\": \"{}\"}}{}\n",
            r.id,
            r.body,
            r.resolution,
            sig17(r.max_residual),
            order,
            sig17(r.threshold),
            status_str(r.status),
            if i + 1 < reports.len() { "," } else { "" },
        ));
    }
    out.push_str("]\n");
    out
}

/// Human-readable counterpart of [`emit_reports`].
pub fn report_table(reports: &[IdentityReport]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<22} {:<18} {:>5} {:>13} {:>7} {:>13}  status\n",
        "check", "body", "res", "residual", "order", "threshold"
    ));
    for r in reports {
        let order = match r.observed_order {
            Some(o) => format!("{o:.2}"),
            None => "-".into(),
        };
        out.push_str(&format!(
            "{:<22} {:<18} {:>5} {:>13.3e} {:>7} {:>13.3e}  {}\n",
            r.id, r.body, r.resolution, r.max_residual, order, r.threshold, status_str(r.status)
        ));
    }
    out
}

pub const SCAN_HEADER: &str = "n,alpha,I1,min_J_margin,theta_at_min,max_form_discrepancy";

/// Per-(n, α) aggregate row of the inequality scan.
pub fn scan_row_csv(row: &ScanRow) -> String {
    format!(
        "{},{},{},{},{},{}\n",
        row.n,
        sig17(row.alpha),
        sig17(row.i1),
        sig17(row.min_margin),
        sig17(row.theta_at_min),
        sig17(row.max_discrepancy),
    )
}

/// Scan summary under the pinned key set.
pub fn emit_scan_summary(s: &ScanSummary) -> String {
    let mut out = String::from("{\n");
    out.push_str(&format!("  \"min_J_margin\": {},\n", sig17(s.min_j_margin)));
    out.push_str(&format!(
        "  \"max_form_discrepancy\": {},\n",
        sig17(s.max_form_discrepancy)
    ));
    out.push_str("  \"I1_zero_location\": ");
    push_f64_array(&mut out, &s.i1_zero_location);
    out.push_str("\n}\n");
    out
}
