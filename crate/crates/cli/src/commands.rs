//! Subcommand implementations.

use std::io::Write;
use std::path::{Path, PathBuf};

use matprint_core::constitutive::{ModelId, Params};
use matprint_core::database::{self, Database, GenerateOptions};
use matprint_core::error::{Error, Result};
use matprint_core::fem::{sample_displacements, solve, SolverOpts};
use matprint_core::fingerprint::{self, Fingerprint};
use matprint_core::ingest;
use matprint_core::recognition::{best_match, render_ranking_csv, Measure};
use matprint_core::specimen::{build_mesh, ExperimentDescriptor};
use matprint_core::util::fmt_g9;

use crate::args::RawConfig;

const QUICK_STEPS: usize = 10;
const QUICK_EDGE: f64 = 7.5;
const DEFAULT_EDGE: f64 = 3.0;

fn descriptor(cfg: &RawConfig) -> Result<ExperimentDescriptor> {
    let mut desc = ExperimentDescriptor::standard();
    if cfg.get_flag("quick") {
        desc.n_t = QUICK_STEPS;
    }
    if let Some(steps) = cfg.get_usize("steps")? {
        desc.n_t = steps;
    }
    if let Some(t) = cfg.get_f64("thickness")? {
        desc.thickness = t;
    }
    desc.validate()?;
    Ok(desc)
}

fn edge_length(cfg: &RawConfig) -> Result<f64> {
    Ok(cfg.get_f64("edge-length")?.unwrap_or(if cfg.get_flag("quick") {
        QUICK_EDGE
    } else {
        DEFAULT_EDGE
    }))
}

fn solver_opts(cfg: &RawConfig) -> Result<SolverOpts> {
    let mut opts = SolverOpts::default();
    if let Some(v) = cfg.get_f64("tol-abs")? {
        opts.tol_abs = v;
    }
    if let Some(v) = cfg.get_f64("tol-rel")? {
        opts.tol_rel = v;
    }
    Ok(opts)
}

fn jobs(cfg: &RawConfig) -> Result<usize> {
    Ok(cfg.get_usize("jobs")?.unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    }))
}

fn out_dir(cfg: &RawConfig) -> Result<PathBuf> {
    let dir = PathBuf::from(cfg.require("out")?);
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn parse_models(cfg: &RawConfig) -> Result<Option<Vec<ModelId>>> {
    match cfg.get("models") {
        None => Ok(None),
        Some(list) => list
            .split(',')
            .map(|t| ModelId::from_token(t.trim()))
            .collect::<Result<Vec<_>>>()
            .map(Some),
    }
}

fn alpha_csv(alpha: &[f64]) -> String {
    alpha
        .iter()
        .map(|a| fmt_g9(*a))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn cmd_generate(cfg: &RawConfig) -> Result<()> {
    let desc = descriptor(cfg)?;
    let out = out_dir(cfg)?;
    let opts = GenerateOptions {
        edge_length: edge_length(cfg)?,
        solver: solver_opts(cfg)?,
        jobs: jobs(cfg)?,
        models: parse_models(cfg)?,
    };
    let t0 = std::time::Instant::now();
    let progress = |i: usize, entry: &database::DatabaseEntry, ms: f64| {
        eprintln!(
            "entry {i}: {} alpha=[{}] valid_steps={} ({ms:.0} ms)",
            entry.model.token(),
            alpha_csv(&entry.params.alpha),
            entry.last_converged_step
        );
    };
    let (db, report) = database::generate(&desc, &opts, Some(&progress))?;
    let db_path = out.join("database.txt");
    database::save(&db, &db_path)?;

    let mut report_csv = String::from("index,model,alpha,valid_steps,wall_ms\n");
    for (i, entry) in db.entries.iter().enumerate() {
        report_csv.push_str(&format!(
            "{i},{},{},{},{:.3}\n",
            entry.model.token(),
            alpha_csv(&entry.params.alpha),
            entry.last_converged_step,
            report.wall_ms[i]
        ));
    }
    std::fs::write(out.join("report.csv"), report_csv)?;

    println!("database = {}", db_path.display());
    println!("n_d = {}", db.n_entries());
    println!("descriptor_hash = {}", db.descriptor.descriptor_hash());
    eprintln!(
        "generated {} entries in {:.1} s",
        db.n_entries(),
        t0.elapsed().as_secs_f64()
    );
    Ok(())
}

pub fn cmd_simulate(cfg: &RawConfig) -> Result<()> {
    let desc = descriptor(cfg)?;
    let out = out_dir(cfg)?;
    let model = ModelId::from_token(cfg.require("model")?)?;
    let theta = cfg
        .get_list("theta")?
        .ok_or_else(|| Error::Argument("missing required flag --theta".into()))?;
    let alpha = cfg.get_list("alpha")?.unwrap_or_default();
    let params = Params::new(theta, alpha);
    let mesh = build_mesh(&desc, edge_length(cfg)?)?;
    let series = solve(&mesh, &desc, model, &params, &solver_opts(cfg)?)?;

    let mut forces_csv = String::from("step,lambda,Rx_N,Ry_N\n");
    let mut debug_csv = String::from("step,lambda,Rx_N,Ry_N,newton_iters,converged\n");
    for (k, step) in series.steps.iter().enumerate() {
        forces_csv.push_str(&format!(
            "{},{},{},{}\n",
            k + 1,
            fmt_g9(step.lambda),
            fmt_g9(step.reaction[0]),
            fmt_g9(step.reaction[1])
        ));
        debug_csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            k + 1,
            fmt_g9(step.lambda),
            fmt_g9(step.reaction[0]),
            fmt_g9(step.reaction[1]),
            step.newton_iters,
            u8::from(step.converged)
        ));
    }
    std::fs::write(out.join("forces.csv"), forces_csv)?;
    std::fs::write(out.join("debug.csv"), debug_csv)?;

    let sampled = sample_displacements(&series, &mesh, &desc.sample_points)?;
    let fp = fingerprint::assemble(&series, &sampled, &desc)?;
    std::fs::write(out.join("fingerprint.txt"), fingerprint::serialize(&fp))?;

    println!("last_converged_step = {}", series.last_converged_step);
    println!("fingerprint = {}", out.join("fingerprint.txt").display());
    if series.last_converged_step == 0 {
        return Err(Error::Numeric(
            "solver failed before completing the first load step".into(),
        ));
    }
    if series.last_converged_step < desc.n_t {
        eprintln!(
            "warning: converged through step {} of {}; fingerprint is zero-filled beyond",
            series.last_converged_step, desc.n_t
        );
    }
    Ok(())
}

fn load_db(cfg: &RawConfig) -> Result<Database> {
    database::load(Path::new(cfg.require("db")?))
}

/// Fingerprint input for match/rank/ingest: either a serialized fingerprint
/// file or a raw measurement directory.
fn query_fingerprint(cfg: &RawConfig, db: &Database) -> Result<Fingerprint> {
    if let Some(path) = cfg.get("fingerprint") {
        let text = std::fs::read_to_string(path)?;
        return fingerprint::parse(&text);
    }
    if cfg.get("data").is_some() {
        let (fp, diag) = ingest_from_dir(cfg, &db.descriptor)?;
        eprintln!("ingest fallback_components = {}", diag.fallback_components);
        return Ok(fp);
    }
    Err(Error::Argument(
        "provide --fingerprint FILE or --data DIR".into(),
    ))
}

/// Reads stage{K}_rep{R}.csv and forces_rep{R}.csv from the data directory.
fn ingest_from_dir(
    cfg: &RawConfig,
    desc: &ExperimentDescriptor,
) -> Result<(Fingerprint, ingest::IngestDiagnostics)> {
    let dir = PathBuf::from(cfg.require("data")?);
    let mut curves = Vec::new();
    let mut grids: Vec<Vec<ingest::DisplacementGrid>> = Vec::new();
    let mut rep = 1usize;
    loop {
        let force_path = dir.join(format!("forces_rep{rep}.csv"));
        if !force_path.exists() {
            break;
        }
        let text = std::fs::read_to_string(&force_path)?;
        let curve = ingest::parse_force_csv(&text, &force_path.display().to_string())?;
        let t_exp = cfg.get_f64("thickness")?.unwrap_or(desc.thickness);
        curves.push(ingest::scale_thickness(&curve, t_exp, desc.thickness)?);

        let mut stages = Vec::new();
        let mut stage = 1usize;
        loop {
            let grid_path = dir.join(format!("stage{stage}_rep{rep}.csv"));
            if !grid_path.exists() {
                break;
            }
            let text = std::fs::read_to_string(&grid_path)?;
            stages.push(ingest::parse_grid_csv(
                &text,
                &grid_path.display().to_string(),
            )?);
            stage += 1;
        }
        grids.push(stages);
        rep += 1;
    }
    if curves.is_empty() {
        return Err(Error::Argument(format!(
            "no forces_rep1.csv found in {}",
            dir.display()
        )));
    }
    let discovered = grids.iter().map(Vec::len).min().unwrap_or(0);
    let n_hat_t = match cfg.get_usize("steps")? {
        Some(s) => s,
        None => discovered.min(desc.n_t),
    };
    ingest::build_fingerprint(&grids, &curves, desc, n_hat_t)
}

fn run_match(cfg: &RawConfig, top_k: Option<usize>) -> Result<()> {
    let db = load_db(cfg)?;
    let fp = query_fingerprint(cfg, &db)?;
    let measure = match cfg.get("measure") {
        Some(m) => Measure::from_token(m)?,
        None => Measure::Euclidean,
    };
    let n_hat_t = match cfg.get_usize("steps")? {
        Some(s) => s,
        None => fp.valid_steps,
    };
    let t0 = std::time::Instant::now();
    let result = best_match(&db, &fp, measure, n_hat_t)?;
    let wall_ms = t0.elapsed().as_secs_f64() * 1e3;

    println!("model = {}", result.model.token());
    println!("alpha_star = [{}]", alpha_csv(&result.alpha_star));
    println!(
        "theta_star_N_per_mm2 = [{}]",
        result
            .theta_star
            .iter()
            .map(|t| fmt_g9(*t))
            .collect::<Vec<_>>()
            .join(";")
    );
    println!("score = {}", fmt_g9(result.similarity_score));
    println!("measure = {}", measure.token());
    println!("n_hat_t = {}", result.n_hat_t);
    println!("best_index = {}", result.best_index);
    eprintln!("matching phase: {wall_ms:.1} ms over {} entries", db.n_entries());

    if let Some(out) = cfg.get("out") {
        let dir = PathBuf::from(out);
        std::fs::create_dir_all(&dir)?;
        let k = top_k.unwrap_or(result.ranked.len());
        std::fs::write(
            dir.join("ranking.csv"),
            render_ranking_csv(&db, &result, k),
        )?;
    }
    Ok(())
}

pub fn cmd_match(cfg: &RawConfig) -> Result<()> {
    run_match(cfg, None)
}

pub fn cmd_rank(cfg: &RawConfig) -> Result<()> {
    let top = cfg.get_usize("top")?;
    if cfg.get("out").is_none() {
        return Err(Error::Argument("rank requires --out for the ranking CSV".into()));
    }
    run_match(cfg, top)
}

pub fn cmd_ingest(cfg: &RawConfig) -> Result<()> {
    let db = load_db(cfg)?;
    let out = out_dir(cfg)?;
    let (fp, diag) = ingest_from_dir(cfg, &db.descriptor)?;
    let path = out.join("fingerprint.txt");
    std::fs::write(&path, fingerprint::serialize(&fp))?;
    println!("fingerprint = {}", path.display());
    println!("valid_steps = {}", fp.valid_steps);
    println!("fallback_components = {}", diag.fallback_components);
    Ok(())
}

pub fn cmd_inspect(cfg: &RawConfig) -> Result<()> {
    let db = load_db(cfg)?;
    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    write!(w, "{}", db.descriptor.manifest_lines())?;
    writeln!(w, "descriptor_hash = {}", db.descriptor.descriptor_hash())?;
    writeln!(w, "n_d = {}", db.n_entries())?;
    for model in ModelId::ALL {
        let entries: Vec<_> = db.entries.iter().filter(|e| e.model == model).collect();
        if entries.is_empty() {
            continue;
        }
        let full = entries
            .iter()
            .filter(|e| e.last_converged_step >= db.descriptor.n_t)
            .count();
        let min_valid = entries
            .iter()
            .map(|e| e.last_converged_step)
            .min()
            .unwrap_or(0);
        writeln!(
            w,
            "model {} : {} entries, {} fully converged, min valid_steps {}",
            model.token(),
            entries.len(),
            full,
            min_valid
        )?;
    }
    Ok(())
}
