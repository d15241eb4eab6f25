//! The five subcommands, each generic over the working precision.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::{Complex, Complex64};
use serde_json::{json, Value};
use tridiag_resolvent::io::atomic_write;
use tridiag_resolvent::jfraction::{convergents_csv, jfraction_csv, read_moments_csv};
use tridiag_resolvent::recurrence::evaluate_remainder;
use tridiag_resolvent::resolvent::{estimate_gamma_with, resolvent_block};
use tridiag_resolvent::scan::{heatmap_pgm, scan_csv};
use tridiag_resolvent::{
    build_operator, classify_point, convergents, evaluate_qp, finite_section_inverse,
    geometric_subsequence, moments_to_jfraction, remainder_diagnostics, DoubleDouble, Error,
    HeatmapChannel, Label, MomentSequence, Real, SubsequenceVerdict,
};

use crate::config::RunConfig;
use crate::{Failure, Outcome};

fn lift<T: Real>(z: Complex64) -> Complex<T> {
    Complex::new(T::lit(z.re), T::lit(z.im))
}

fn down<T: Real>(z: Complex<T>) -> Complex64 {
    Complex64::new(z.re.as_f64(), z.im.as_f64())
}

fn pair(z: Complex64) -> Value {
    json!([z.re, z.im])
}

/// Writes every file or none: contents are complete before the first write.
fn write_all(dir: &Path, files: &[(&str, String)]) -> Result<Vec<PathBuf>, Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))?;
    let mut written = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        atomic_write(&path, body.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

fn to_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).unwrap_or_default();
    s.push('\n');
    s
}

macro_rules! dispatch {
    ($name:ident, $generic:ident) => {
        pub fn $name(cfg: &RunConfig) -> Result<Outcome, Failure> {
            if cfg.high_precision {
                $generic::<DoubleDouble>(cfg)
            } else {
                $generic::<f64>(cfg)
            }
        }
    };
}

dispatch!(probe, probe_with);
dispatch!(scan, scan_with);
dispatch!(pade, pade_with);
dispatch!(moments, moments_with);
dispatch!(oracle, oracle_with);

fn probe_with<T: Real>(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let lam = cfg.lambda()?;
    let model = build_operator::<T>(cfg.spec()?)?;
    let trace = evaluate_qp(&model, lift(lam), cfg.n())?;
    let pc = classify_point(&model, lift(lam), &cfg.classify);
    let table = convergents(&trace);
    let gamma = estimate_gamma_with(&trace, cfg.classify.gamma_weight_min).ok();
    let remainder = gamma
        .as_ref()
        .map(|(g, _)| remainder_diagnostics(&trace, g.gamma));
    let report = json!({
        "config": cfg,
        "lambda": pair(lam),
        "label": pc.label.as_str(),
        "classification": pc,
        "convergents": table.entries.iter().map(|e| json!({
            "n": e.n,
            "value": e.value.map(|v| pair(down(v))),
        })).collect::<Vec<_>>(),
        "gamma": gamma.as_ref().map(|(g, _)| json!({
            "value": pair(down(g.gamma)),
            "residual": g.residual,
            "condition": g.condition,
            "window_weight": g.window_weight,
        })),
        "remainder": remainder,
    });
    let files = write_all(&cfg.out_dir(), &[("probe.json", to_json(&report))])?;
    Ok(Outcome {
        code: if pc.label == Label::Indeterminate { 2 } else { 0 },
        summary: format!("{} at [{}, {}]", pc.label.as_str(), lam.re, lam.im),
        files,
    })
}

fn scan_with<T: Real>(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let region = cfg
        .region
        .ok_or_else(|| Failure::Usage("scan needs a \"region\" in the config".into()))?;
    let model = build_operator::<T>(cfg.spec()?)?;
    let result = tridiag_resolvent::scan(&model, &region, &cfg.classify, cfg.workers.unwrap_or(0))?;
    let mut files = vec![("scan.csv", scan_csv(&result))];
    for (name, ch) in [
        ("scan_label.pgm", HeatmapChannel::Label),
        ("scan_q.pgm", HeatmapChannel::Q),
        ("scan_growth.pgm", HeatmapChannel::Growth),
    ] {
        files.push((name, heatmap_pgm(&result, ch)));
    }
    let params = json!({ "config": cfg, "points": region.len() });
    files.push(("scan_params.json", to_json(&params)));
    let written = write_all(&cfg.out_dir(), &files)?;
    let count = |l: Label| result.labels.iter().filter(|x| **x == l).count();
    Ok(Outcome {
        code: 0,
        summary: format!(
            "{} points: {} resolvent, {} eigenvalue, {} spectrum, {} indeterminate",
            region.len(),
            count(Label::Resolvent),
            count(Label::Eigenvalue),
            count(Label::Spectrum),
            count(Label::Indeterminate)
        ),
        files: written,
    })
}

fn pade_with<T: Real>(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let lam = cfg.lambda()?;
    let model = build_operator::<T>(cfg.spec()?)?;
    let trace = evaluate_qp(&model, lift(lam), cfg.n())?;
    let (phi, source) = match cfg.phi {
        Some(p) => (lift::<T>(p), "supplied"),
        None => (
            estimate_gamma_with(&trace, cfg.classify.gamma_weight_min)?.0.gamma,
            "least-squares estimate",
        ),
    };
    let table = convergents(&trace);
    let sub = geometric_subsequence(&table, phi);
    let diag = remainder_diagnostics(&trace, phi);
    let phi64 = down(phi);
    let header = format!(
        "# config: {}\n# phi: {},{} ({source})\n",
        cfg.echo(),
        phi64.re,
        phi64.im
    );
    let verdict = match sub.verdict {
        SubsequenceVerdict::Geometric => "geometric",
        SubsequenceVerdict::NoneFound => "none-found",
    };
    let footer = format!(
        "# verdict: {verdict} rho={} c={} tail_rate={} rms={} count={} whole_sequence={}\n",
        sub.rate,
        sub.c,
        sub.tail_rate,
        sub.rms,
        sub.indices.len(),
        sub.whole_sequence
    );
    let pade_csv = format!("{header}{}{footer}", convergents_csv(&table, Some(phi)));
    let mut rem_csv = format!("{header}n,abs_r_h,ln_abs_r_h\n");
    for (n, (v, l)) in diag.values.iter().zip(&diag.ln_values).enumerate() {
        rem_csv.push_str(&format!("{n},{v:e},{l}\n"));
    }
    rem_csv.push_str(&format!(
        "# rate: {} fit_rms: {}\n",
        diag.rate.map_or("none".into(), |r| r.to_string()),
        diag.fit_rms.map_or("none".into(), |r| r.to_string())
    ));
    let files = write_all(
        &cfg.out_dir(),
        &[("pade.csv", pade_csv), ("remainder.csv", rem_csv)],
    )?;
    Ok(Outcome {
        code: 0,
        summary: format!("{verdict}, rho = {}", sub.rate),
        files,
    })
}

fn moments_with<T: Real>(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let path = cfg
        .moments
        .as_ref()
        .ok_or_else(|| Failure::Usage("moments needs a \"moments\" CSV path in the config".into()))?;
    let mom = read_moments_csv(path)?;
    let lifted = MomentSequence::new(mom.values().iter().map(|z| lift::<T>(*z)).collect())?;
    let jf = match moments_to_jfraction(&lifted) {
        Ok(jf) => jf,
        Err(Error::Degenerate { level, partial_b }) => {
            return Err(Failure::Numerical(format!(
                "moment sequence is degenerate at level {level}; recovered b so far: {partial_b:?}"
            )))
        }
        Err(e) => return Err(e.into()),
    };
    let body = format!("# config: {}\n{}", cfg.echo(), jfraction_csv(&jf));
    let files = write_all(&cfg.out_dir(), &[("jfraction.csv", body)])?;
    Ok(Outcome {
        code: 0,
        summary: format!("recovered {} levels", mom.levels()),
        files,
    })
}

// Below this trace length the oracle uses gamma = pi_N.
const ORACLE_LS_MIN_N: usize = 32;

struct Side {
    error: Option<f64>,
    section: Option<Vec<Complex64>>,
    gamma_source: &'static str,
    notes: Vec<String>,
}

fn oracle_side<T: Real>(cfg: &RunConfig, n: usize, size: usize) -> Result<Side, Failure> {
    let lam = lift::<T>(cfg.lambda()?);
    let model = build_operator::<T>(cfg.spec()?)?;
    let trace = evaluate_qp(&model, lam, n)?;
    let mut notes = Vec::new();
    let pi_n = {
        let q = trace.q(n);
        (!q.is_zero()).then(|| trace.p(n).div(&q).to_complex())
    };
    let (gamma, gamma_source) = if n < ORACLE_LS_MIN_N {
        (pi_n, "pi_N")
    } else {
        match estimate_gamma_with(&trace, cfg.classify.gamma_weight_min) {
            Ok((g, _)) => (Some(g.gamma), "least-squares"),
            Err(e) => {
                notes.push(format!("N = {n}: {e}; using pi_N"));
                (pi_n, "pi_N")
            }
        }
    };
    let section = match finite_section_inverse(&model, lam, n) {
        Ok(inv) => Some(
            (0..size)
                .flat_map(|i| (0..size).map(move |j| (i, j)))
                .map(|(i, j)| down(inv.get(i, j)))
                .collect::<Vec<_>>(),
        ),
        Err(e) => {
            notes.push(format!("N = {n}: {e}"));
            None
        }
    };
    let error = match (gamma, &section) {
        (Some(g), Some(fs)) => {
            let rem = evaluate_remainder(&trace, g);
            let block: Vec<Complex64> = resolvent_block(&trace, &rem, size)?
                .into_iter()
                .map(down)
                .collect();
            let scale = fs.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let diff = block
                .iter()
                .zip(fs)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            Some(if diff == 0.0 { 0.0 } else { diff / scale })
        }
        (None, _) => {
            notes.push(format!("N = {n}: pi_N is a pole"));
            None
        }
        _ => None,
    };
    Ok(Side {
        error,
        section,
        gamma_source,
        notes,
    })
}

fn oracle_with<T: Real>(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let lam = cfg.lambda()?;
    let n = cfg.n();
    let size = cfg.oracle.block.min(n);
    let tol = cfg.oracle.tolerance;
    let first = oracle_side::<T>(cfg, n, size)?;
    let second = oracle_side::<T>(cfg, 2 * n, size)?;
    let mut notes: Vec<String> = first.notes.iter().chain(&second.notes).cloned().collect();
    let drift = match (&first.section, &second.section) {
        (Some(a), Some(b)) => {
            let scale = b.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let d = a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            Some(if d == 0.0 { 0.0 } else { d / scale })
        }
        _ => None,
    };
    match drift {
        Some(d) if d > tol => notes.push(format!(
            "finite-section block changes by {d:e} from N = {n} to N = {}: no stabilization across N doubling",
            2 * n
        )),
        None => notes.push(format!(
            "finite-section blocks at N = {n} and N = {} cannot both be formed: no stabilization across N doubling",
            2 * n
        )),
        _ => {}
    }
    if let (Some(e1), Some(e2)) = (first.error, second.error) {
        if e2 > e1.max(tol) {
            notes.push(format!("agreement worsens when N doubles ({e1:e} -> {e2:e})"));
        }
    }
    let pass = first.error.is_some_and(|e| e <= tol) && second.error.is_some_and(|e| e <= tol);
    let report = json!({
        "config": cfg,
        "lambda": pair(lam),
        "n": n,
        "block": size,
        "tolerance": tol,
        "gamma_source": [first.gamma_source, second.gamma_source],
        "error_n": first.error,
        "error_2n": second.error,
        "finite_section_drift": drift,
        "pass": pass,
        "notes": notes,
    });
    let files = write_all(&cfg.out_dir(), &[("oracle.json", to_json(&report))])?;
    let fmt = |e: Option<f64>| e.map_or("n/a".to_string(), |e| format!("{e:e}"));
    Ok(Outcome {
        code: if pass { 0 } else { 2 },
        summary: format!(
            "{}: block error {} at N = {n}, {} at N = {}",
            if pass { "pass" } else { "fail" },
            fmt(first.error),
            fmt(second.error),
            2 * n
        ),
        files,
    })
}
