use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use phonalign::evaluation::boundary_abs_errors;
use phonalign::textgrid::read_textgrid_bytes;
use phonalign::{AlignedTier, BoundaryErrorReport, FoldingTable};
use serde_json::json;

use crate::output::{load_folding, write_atomic};
use crate::{EvalArgs, Status};

pub fn run(args: &EvalArgs) -> Result<Status> {
    let folding = load_folding(&args.folding)?;
    let refs = textgrids_by_stem(&args.ref_dir)?;
    let hyps = textgrids_by_stem(&args.hyp_dir)?;

    let mut failures = Vec::new();
    for stem in refs.keys().filter(|s| !hyps.contains_key(*s)) {
        failures.push(format!("{stem}: no hypothesis file"));
    }
    for stem in hyps.keys().filter(|s| !refs.contains_key(*s)) {
        failures.push(format!("{stem}: no reference file"));
    }
    let paired: Vec<&String> = refs.keys().filter(|s| hyps.contains_key(*s)).collect();
    if paired.is_empty() {
        bail!(
            "no TextGrid basenames shared between {} and {}",
            args.ref_dir.display(),
            args.hyp_dir.display()
        );
    }

    let mut errors = Vec::new();
    let mut scored = 0;
    for stem in &paired {
        match file_errors(&refs[*stem], &hyps[*stem], &folding) {
            Ok(e) => {
                errors.extend(e);
                scored += 1;
            }
            Err(e) => failures.push(format!("{stem}: {e:#}")),
        }
    }
    for f in &failures {
        eprintln!("{f}");
    }
    if errors.is_empty() {
        bail!(
            "no boundaries to evaluate ({} of {} file pairs failed)",
            paired.len() - scored,
            paired.len()
        );
    }

    let report = BoundaryErrorReport::from_errors(errors, &args.tolerances)?;
    let tsv = report.tolerance_tsv();
    match &args.tsv_out {
        Some(path) => write_atomic(path, tsv.as_bytes())?,
        None => print!("{tsv}"),
    }
    if let Some(path) = &args.cdf_out {
        write_atomic(path, report.cdf_csv().as_bytes())?;
    }
    if let Some(path) = &args.json_out {
        let summary = json!({
            "files_scored": scored,
            "boundaries": report.abs_errors.len(),
            "mean_ms": fixed(report.mean_ms),
            "median_ms": fixed(report.median_ms),
            "tolerances": report
                .tolerance_rows
                .iter()
                .map(|&(t, p)| json!({ "threshold_ms": fixed(t), "percent": fixed(p) }))
                .collect::<Vec<_>>(),
            "failures": failures,
        });
        let mut text = serde_json::to_string_pretty(&summary)?;
        text.push('\n');
        write_atomic(path, text.as_bytes())?;
    }
    eprintln!(
        "{} boundaries from {} files: mean {:.6} ms, median {:.6} ms",
        report.abs_errors.len(),
        scored,
        report.mean_ms,
        report.median_ms
    );
    Ok(if failures.is_empty() {
        Status::Ok
    } else {
        Status::PartialFailure
    })
}

/// Six-decimal rounding so JSON output is stable across platforms.
fn fixed(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn file_errors(reference: &Path, hypothesis: &Path, folding: &FoldingTable) -> Result<Vec<f64>> {
    let r = first_tier(reference)?;
    let h = first_tier(hypothesis)?;
    Ok(boundary_abs_errors(&r, &h, Some(folding))?)
}

fn first_tier(path: &Path) -> Result<AlignedTier> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let tiers =
        read_textgrid_bytes(&bytes).with_context(|| format!("parsing {}", path.display()))?;
    tiers
        .into_iter()
        .next()
        .with_context(|| format!("{} has no interval tier", path.display()))
}

fn textgrids_by_stem(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        let is_textgrid = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("textgrid"));
        if !is_textgrid || !path.is_file() {
            continue;
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            out.insert(stem.to_string(), path.clone());
        }
    }
    Ok(out)
}
