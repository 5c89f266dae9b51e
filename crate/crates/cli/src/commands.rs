use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use reassembly::compatibility::{filter_candidates, save_model, train_detector, TrainingSet};
use reassembly::composition::{compose, read_result, write_result, AssemblyGraph, AssemblyResult, Tolerance};
use reassembly::evaluation::{format_table, score_assembly, score_detector, EvalReport};
use reassembly::pairwise::{extract_candidates, read_candidates, write_candidates, AlignmentCandidate};
use reassembly::pipeline::{score_candidates, PuzzleSpec};
use reassembly::shredder::{read_bundle, shred, shred_to_count, write_bundle, PuzzleBundle};
use reassembly::Error;
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::render::composite;
use crate::Command;

pub fn run(cmd: &Command, cfg: &RunConfig) -> Result<()> {
    match cmd {
        Command::Shred { image } => cmd_shred(cfg, image.as_deref()),
        Command::Match { bundle } => cmd_match(cfg, bundle),
        Command::Train {
            bundles,
            candidates,
            learners,
        } => cmd_train(cfg, bundles, candidates, learners.unwrap_or(cfg.learners)),
        Command::Score { bundle, candidates } => cmd_score(cfg, bundle, candidates),
        Command::Assemble { bundle, candidates } => cmd_assemble(cfg, bundle, candidates),
        Command::Evaluate {
            bundle,
            results,
            candidates,
        } => cmd_evaluate(cfg, bundle, results, candidates.as_deref()),
        Command::Render { bundle, result, seams } => cmd_render(cfg, bundle, result.as_deref(), *seams),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })?;
    Ok(())
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.into(),
        source: e,
    })?;
    Ok(())
}

fn cmd_shred(cfg: &RunConfig, image: Option<&Path>) -> Result<()> {
    let out = cfg.out_or("bundle");
    let bundle = match image {
        None => PuzzleSpec {
            seed: cfg.seed,
            side: cfg.image_side,
            pieces: cfg.pieces,
            shred: cfg.shred,
            pixel_noise: cfg.pixel_noise,
        }
        .build()?,
        Some(path) => {
            let mut img = image::open(path)
                .map_err(|e| Error::Format {
                    path: path.into(),
                    msg: e.to_string(),
                })?
                .to_rgba8();
            reassembly::shredder::add_pixel_noise(&mut img, cfg.pixel_noise, cfg.seed);
            match cfg.pieces {
                Some(n) => shred_to_count(
                    &img,
                    n,
                    cfg.shred.orientation_jitter,
                    cfg.shred.perturbation_amplitude,
                    cfg.seed,
                )?,
                None => shred(&img, &cfg.shred, cfg.seed)?,
            }
        }
    };
    write_bundle(&bundle, &out)?;
    println!("{}", json!({ "bundle": out, "fragments": bundle.len() }));
    Ok(())
}

fn cmd_match(cfg: &RunConfig, bundle: &Path) -> Result<()> {
    let out = cfg.out_or("candidates.jsonl");
    let b = read_bundle(bundle)?;
    let cands = extract_candidates(&b, &cfg.pairwise);
    write_candidates(&out, &cands)?;
    println!("{}", json!({ "candidates": out, "count": cands.len() }));
    Ok(())
}

fn cmd_train(cfg: &RunConfig, bundles: &[PathBuf], candidates: &[PathBuf], learners: usize) -> Result<()> {
    if !candidates.is_empty() && candidates.len() != bundles.len() {
        return Err(Error::Parameter(format!(
            "{} candidate files given for {} bundles",
            candidates.len(),
            bundles.len()
        ))
        .into());
    }
    let out = cfg.out_or("model.json");
    let mut set = TrainingSet::default();
    for (n, dir) in bundles.iter().enumerate() {
        let b = read_bundle(dir)?;
        let cands = match candidates.get(n) {
            Some(path) => read_candidates(path)?,
            None => extract_candidates(&b, &cfg.pairwise),
        };
        set.add_bundle(&b, &cands);
    }
    let model = train_detector(&set, learners, cfg.seed)?;
    save_model(&out, &model)?;
    println!(
        "{}",
        json!({ "model": out, "samples": set.len(), "positives": set.positives(), "rounds": model.rounds })
    );
    Ok(())
}

fn cmd_score(cfg: &RunConfig, bundle: &Path, candidates: &Path) -> Result<()> {
    let out = cfg.out_or("scored.jsonl");
    let b = read_bundle(bundle)?;
    let cands = read_candidates(candidates)?;
    let gammas = score_candidates(&b, &cands, &cfg.scorer()?, cfg.seed);
    let scored = filter_candidates(cands, &gammas, f64::NEG_INFINITY);
    write_candidates(&out, &scored)?;
    let kept = scored.iter().filter(|c| c.gamma >= cfg.threshold).count();
    println!("{}", json!({ "candidates": out, "count": scored.len(), "above_threshold": kept }));
    Ok(())
}

fn tolerance(cfg: &RunConfig, b: &PuzzleBundle) -> Tolerance {
    let mut tol = Tolerance::for_diagonal(b.canvas_diagonal());
    if let Some(deg) = cfg.closure_angle_deg {
        tol.angle = deg.to_radians();
    }
    if let Some(px) = cfg.closure_shift_px {
        tol.trans = px;
    }
    tol
}

fn cmd_assemble(cfg: &RunConfig, bundle: &Path, candidates: &Path) -> Result<()> {
    let out = cfg.out_or("assembly");
    create_dir(&out)?;
    let b = read_bundle(bundle)?;
    let cands: Vec<AlignmentCandidate> = read_candidates(candidates)?
        .into_iter()
        .filter(|c| c.gamma >= cfg.threshold)
        .collect();
    let g = AssemblyGraph::new(&b.fragments, cands, tolerance(cfg, &b))?;
    for &solver in &cfg.solvers {
        let r = compose(&g, solver, &cfg.compose);
        let path = out.join(format!("result-{solver}.json"));
        write_result(&path, &r)?;
        write_json(&out.join(format!("timings-{solver}.json")), &r.timings)?;
        println!(
            "{}",
            json!({
                "solver": solver,
                "result": path,
                "selected": r.selected.len(),
                "components": r.components().len(),
                "objective": r.objective,
            })
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct LabelledReport {
    result: PathBuf,
    solver: String,
    report: EvalReport,
}

fn cmd_evaluate(cfg: &RunConfig, bundle: &Path, results: &[PathBuf], candidates: Option<&Path>) -> Result<()> {
    let b = read_bundle(bundle)?;
    let detector = match candidates {
        Some(path) => Some(score_detector(&b, &read_candidates(path)?, cfg.threshold)),
        None => None,
    };
    let mut reports = Vec::new();
    let mut timings = Vec::new();
    for path in results {
        let start = Instant::now();
        let r = read_result(path)?;
        let mut report = score_assembly(&b, &r.poses, &r.selected).with_context(|| format!("scoring {}", path.display()))?;
        report.detector = detector;
        // Wall time is the solver's own; scoring time goes to the timing file.
        report.wall_time = solver_time(path).unwrap_or(0.0);
        timings.push(json!({ "result": path, "evaluate": start.elapsed().as_secs_f64() }));
        reports.push(LabelledReport {
            result: path.clone(),
            solver: r.solver.to_string(),
            report,
        });
    }
    let rows: Vec<(String, EvalReport)> = reports.iter().map(|l| (l.solver.clone(), l.report.clone())).collect();
    print!("{}", format_table(&rows));
    if let Some(out) = &cfg.out {
        write_json(out, &reports)?;
        write_json(&timings_path(out), &timings)?;
    }
    Ok(())
}

/// `timings-<solver>.json` written next to `result-<solver>.json`.
fn solver_time(result: &Path) -> Option<f64> {
    let name = result.file_name()?.to_str()?;
    let solver = name.strip_prefix("result-")?.strip_suffix(".json")?;
    let text = fs::read_to_string(result.with_file_name(format!("timings-{solver}.json"))).ok()?;
    let v: serde_json::Value = serde_json::from_str(&text).ok()?;
    v["total"].as_f64()
}

fn timings_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    out.with_file_name(format!("{stem}.timings.json"))
}

fn cmd_render(cfg: &RunConfig, bundle: &Path, result: Option<&Path>, seams: bool) -> Result<()> {
    let out = cfg.out_or("assembly.png");
    let b = read_bundle(bundle)?;
    let (poses, components) = match result {
        Some(path) => {
            let r: AssemblyResult = read_result(path)?;
            if !r.poses.keys().copied().eq(0..b.len()) {
                return Err(Error::Format {
                    path: path.into(),
                    msg: format!("result does not place the bundle's {} fragments", b.len()),
                }
                .into());
            }
            let comps = r.components();
            (r.poses, comps)
        }
        None => (b.groundtruth_poses.clone(), vec![(0..b.len()).collect()]),
    };
    let img = composite(&b.fragments, &poses, &components, seams)?;
    img.save(&out).map_err(|e| Error::Format {
        path: out.clone(),
        msg: e.to_string(),
    })?;
    println!("{}", json!({ "image": out, "width": img.width(), "height": img.height() }));
    Ok(())
}
