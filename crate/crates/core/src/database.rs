//! Offline fingerprint database: catalog sweep, parallel generation, and
//! the normative text persistence format.
//!
//! The sweep enumerates 901 parameter combinations across the seven-model
//! catalog on equidistant grids (endpoints included, multi-parameter grids
//! as full tensor products, first-listed parameter slowest). Entry order is
//! deterministic and independent of the worker count.

use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::constitutive::{ModelId, Params};
use crate::error::{Error, Result};
use crate::fem::{sample_displacements, solve, SolverOpts};
use crate::fingerprint::{assemble, Fingerprint};
use crate::specimen::{build_mesh, ExperimentDescriptor};
use crate::util::fmt_g9;

/// One simulated catalog point.
#[derive(Debug, Clone)]
pub struct DatabaseEntry {
    pub model: ModelId,
    /// Parameters as simulated; the first homogeneity parameter is 1.0.
    pub params: Params,
    pub fingerprint: Fingerprint,
    pub last_converged_step: usize,
}

/// Ordered fingerprint collection bound to one experiment protocol.
#[derive(Debug, Clone)]
pub struct Database {
    pub descriptor: ExperimentDescriptor,
    pub entries: Vec<DatabaseEntry>,
}

impl Database {
    pub fn n_entries(&self) -> usize {
        self.entries.len()
    }

    /// Rejects fingerprints from a different protocol.
    pub fn verify_descriptor_hash(&self, hash: &str) -> Result<()> {
        let expected = self.descriptor.descriptor_hash();
        if expected != hash {
            return Err(Error::ProtocolMismatch {
                expected,
                found: hash.to_string(),
            });
        }
        Ok(())
    }
}

/// `count` equidistant values over [low, high], both endpoints included;
/// `count == 1` returns just `low`.
pub fn parameter_grid(low: f64, high: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![low];
    }
    (0..count)
        .map(|k| {
            if k == count - 1 {
                high
            } else {
                low + (k as f64) * (high - low) / ((count - 1) as f64)
            }
        })
        .collect()
}

/// Grid definition of one model family: fixed unit theta leader plus the
/// swept parameter axes.
struct FamilyGrid {
    model: ModelId,
    /// (name, low, high, count); empty for the single neo-hookean point.
    axes: Vec<(&'static str, f64, f64, usize)>,
    /// Whether swept values extend theta (true) or alpha (false).
    sweeps_theta: bool,
}

fn catalog_grids() -> Vec<FamilyGrid> {
    vec![
        FamilyGrid {
            model: ModelId::Carroll,
            axes: vec![
                ("theta2", 0.1, 10.0, 10),
                ("theta3", 0.1, 10.0, 10),
            ],
            sweeps_theta: true,
        },
        FamilyGrid {
            model: ModelId::LopezPamies,
            axes: vec![("alpha1", 0.01, 10.0, 100)],
            sweeps_theta: false,
        },
        FamilyGrid {
            model: ModelId::MooneyRivlin,
            axes: vec![("theta6", 0.1, 10.0, 100)],
            sweeps_theta: true,
        },
        FamilyGrid {
            model: ModelId::NeoHookean,
            axes: vec![],
            sweeps_theta: true,
        },
        FamilyGrid {
            model: ModelId::GenNeoHookean,
            axes: vec![
                ("alpha2", 0.01, 10.0, 20),
                ("alpha3", 0.5, 10.0, 20),
            ],
            sweeps_theta: false,
        },
        FamilyGrid {
            model: ModelId::Ogden,
            axes: vec![("alpha4", 1.0, 10.0, 100)],
            sweeps_theta: false,
        },
        FamilyGrid {
            model: ModelId::Yeoh,
            axes: vec![
                ("theta9", 0.1, 10.0, 10),
                ("theta10", 0.1, 10.0, 10),
            ],
            sweeps_theta: true,
        },
    ]
}

/// Full catalog sweep in database order: models in catalog order, grid
/// indices lexicographic with the first-listed parameter slowest.
pub fn default_sweep() -> Vec<(ModelId, Params)> {
    sweep_for_models(&ModelId::ALL)
}

/// Catalog sweep restricted to the given model families (catalog order is
/// preserved regardless of the argument order).
pub fn sweep_for_models(models: &[ModelId]) -> Vec<(ModelId, Params)> {
    let mut out = Vec::new();
    for grid in catalog_grids() {
        if !models.contains(&grid.model) {
            continue;
        }
        let axes: Vec<Vec<f64>> = grid
            .axes
            .iter()
            .map(|&(_, lo, hi, n)| parameter_grid(lo, hi, n))
            .collect();
        let mut combo = vec![0usize; axes.len()];
        loop {
            let swept: Vec<f64> = combo.iter().zip(&axes).map(|(&i, ax)| ax[i]).collect();
            let params = if grid.sweeps_theta {
                let mut theta = vec![1.0];
                theta.extend_from_slice(&swept);
                Params::new(theta, vec![])
            } else {
                Params::new(vec![1.0], swept)
            };
            out.push((grid.model, params));
            // lexicographic increment, last axis fastest
            let mut k = axes.len();
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                combo[k] += 1;
                if combo[k] < axes[k].len() {
                    break;
                }
                combo[k] = 0;
                if k == 0 {
                    break;
                }
            }
            if combo.iter().all(|&c| c == 0) {
                break;
            }
        }
    }
    out
}

/// Generation controls.
#[derive(Debug, Clone)]
pub struct GenerateOptions {
    pub edge_length: f64,
    pub solver: SolverOpts,
    pub jobs: usize,
    /// None generates the full catalog.
    pub models: Option<Vec<ModelId>>,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        Self {
            edge_length: 3.0,
            solver: SolverOpts::default(),
            jobs: 1,
            models: None,
        }
    }
}

/// Per-entry generation timing, for reports.
#[derive(Debug, Clone)]
pub struct GenerationReport {
    pub wall_ms: Vec<f64>,
}

/// Runs the catalog sweep and assembles the database. Individual
/// non-convergences become short `valid_steps`; only meshing or I/O
/// problems are errors.
pub fn generate(
    desc: &ExperimentDescriptor,
    opts: &GenerateOptions,
    progress: Option<&(dyn Fn(usize, &DatabaseEntry, f64) + Sync)>,
) -> Result<(Database, GenerationReport)> {
    let sweep = match &opts.models {
        Some(models) => sweep_for_models(models),
        None => default_sweep(),
    };
    generate_sweep(desc, &sweep, opts, progress)
}

/// Runs an explicit sweep. Results are committed in sweep order whatever
/// the worker schedule.
pub fn generate_sweep(
    desc: &ExperimentDescriptor,
    sweep: &[(ModelId, Params)],
    opts: &GenerateOptions,
    progress: Option<&(dyn Fn(usize, &DatabaseEntry, f64) + Sync)>,
) -> Result<(Database, GenerationReport)> {
    desc.validate()?;
    let mesh = build_mesh(desc, opts.edge_length)?;
    let points = desc.sample_points.clone();
    let n = sweep.len();
    let results: Mutex<Vec<Option<(DatabaseEntry, f64)>>> = Mutex::new(vec![None; n]);
    let next = AtomicUsize::new(0);
    let jobs = opts.jobs.max(1);

    let worker = |_: usize| -> Result<()> {
        loop {
            let i = next.fetch_add(1, Ordering::Relaxed);
            if i >= n {
                return Ok(());
            }
            let (model, params) = &sweep[i];
            let t0 = std::time::Instant::now();
            let series = solve(&mesh, desc, *model, params, &opts.solver)?;
            let sampled = sample_displacements(&series, &mesh, &points)?;
            let fingerprint = assemble(&series, &sampled, desc)?;
            let entry = DatabaseEntry {
                model: *model,
                params: params.clone(),
                last_converged_step: series.last_converged_step,
                fingerprint,
            };
            let wall_ms = t0.elapsed().as_secs_f64() * 1e3;
            if let Some(cb) = progress {
                cb(i, &entry, wall_ms);
            }
            results.lock().unwrap()[i] = Some((entry, wall_ms));
        }
    };

    if jobs == 1 {
        worker(0)?;
    } else {
        std::thread::scope(|scope| -> Result<()> {
            let handles: Vec<_> = (0..jobs).map(|w| scope.spawn(move || worker(w))).collect();
            for h in handles {
                h.join().expect("generation worker panicked")?;
            }
            Ok(())
        })?;
    }

    let mut entries = Vec::with_capacity(n);
    let mut wall_ms = Vec::with_capacity(n);
    for slot in results.into_inner().unwrap() {
        let (entry, ms) = slot.expect("all sweep indices processed");
        entries.push(entry);
        wall_ms.push(ms);
    }
    Ok((
        Database {
            descriptor: desc.clone(),
            entries,
        },
        GenerationReport { wall_ms },
    ))
}

/// Writes the normative text form: a manifest of key = value lines followed
/// by one record line per entry, reals at 9 significant digits.
pub fn save(db: &Database, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(render_manifest(db).as_bytes())?;
    w.write_all(b"[entries]\n")?;
    for entry in &db.entries {
        let mut line = String::new();
        line.push_str(entry.model.token());
        for a in &entry.params.alpha {
            line.push(' ');
            line.push_str(&fmt_g9(*a));
        }
        for t in &entry.params.theta {
            line.push(' ');
            line.push_str(&fmt_g9(*t));
        }
        line.push_str(&format!(" {}", entry.last_converged_step));
        for v in &entry.fingerprint.forces {
            line.push(' ');
            line.push_str(&fmt_g9(*v));
        }
        for v in &entry.fingerprint.displacements {
            line.push(' ');
            line.push_str(&fmt_g9(*v));
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn render_manifest(db: &Database) -> String {
    let mut s = String::new();
    s.push_str("format_version = 1\n");
    s.push_str("layout = step-major-xy-interleaved\n");
    s.push_str(&db.descriptor.manifest_lines());
    s.push_str(&format!(
        "descriptor_hash = {}\n",
        db.descriptor.descriptor_hash()
    ));
    let present: Vec<ModelId> = {
        let mut seen = Vec::new();
        for e in &db.entries {
            if !seen.contains(&e.model) {
                seen.push(e.model);
            }
        }
        ModelId::ALL
            .into_iter()
            .filter(|m| seen.contains(m))
            .collect()
    };
    for grid in catalog_grids() {
        if !present.contains(&grid.model) {
            continue;
        }
        let mut line = format!("grid_{} =", grid.model.token());
        if grid.axes.is_empty() {
            line.push_str(" point");
        }
        for (name, lo, hi, count) in &grid.axes {
            line.push_str(&format!(" {name} {} {} {count}", fmt_g9(*lo), fmt_g9(*hi)));
        }
        line.push('\n');
        s.push_str(&line);
    }
    s.push_str(&format!("n_d = {}\n", db.entries.len()));
    s
}

/// Reads a file produced by [`save`].
pub fn load(path: &Path) -> Result<Database> {
    let text = std::fs::read_to_string(path)?;
    let mut offset = 0usize;
    let mut lines = Vec::new(); // (offset, line_no, content)
    for (no, line) in text.lines().enumerate() {
        lines.push((offset, no + 1, line));
        offset += line.len() + 1;
    }
    let perr = |offset: usize, line: usize, message: String| Error::Parse {
        offset,
        line,
        message,
    };

    let mut desc = ExperimentDescriptor::standard();
    let mut stored_hash = String::new();
    let mut n_d: Option<usize> = None;
    let mut entries_start = None;
    for (idx, &(off, no, line)) in lines.iter().enumerate() {
        if line == "[entries]" {
            entries_start = Some(idx + 1);
            break;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| perr(off, no, format!("expected 'key = value', got '{line}'")))?;
        let (key, value) = (key.trim(), value.trim());
        let fval = || -> Result<f64> {
            value
                .parse()
                .map_err(|e| perr(off, no, format!("bad real for {key}: {e}")))
        };
        let uval = || -> Result<usize> {
            value
                .parse()
                .map_err(|e| perr(off, no, format!("bad integer for {key}: {e}")))
        };
        match key {
            "format_version" => {
                if value != "1" {
                    return Err(perr(off, no, format!("unsupported format version {value}")));
                }
            }
            "layout" => {
                if value != "step-major-xy-interleaved" {
                    return Err(perr(off, no, format!("unknown layout '{value}'")));
                }
            }
            "side_length_mm" => desc.side_length = fval()?,
            "thickness_mm" => desc.thickness = fval()?,
            "notch_length_mm" => desc.notch_length = fval()?,
            "notch_angle_deg" => desc.notch_angle_deg = fval()?,
            "slot_half_width_mm" => desc.slot_half_width = fval()?,
            "n_t" => desc.n_t = uval()?,
            "u_max_mm" => desc.u_max = fval()?,
            "n_u" => desc.n_u = uval()?,
            "ellipse_semi_major_mm" => desc.ellipse_semi_major = fval()?,
            "ellipse_semi_minor_mm" => desc.ellipse_semi_minor = fval()?,
            "ellipse_angle_deg" => desc.ellipse_angle_deg = fval()?,
            "sample_points" => {
                let vals: std::result::Result<Vec<f64>, _> =
                    value.split_whitespace().map(str::parse::<f64>).collect();
                let vals =
                    vals.map_err(|e| perr(off, no, format!("bad sample point value: {e}")))?;
                if vals.len() % 2 != 0 {
                    return Err(perr(off, no, "odd sample point coordinate count".into()));
                }
                desc.sample_points = vals.chunks(2).map(|c| [c[0], c[1]]).collect();
            }
            "descriptor_hash" => stored_hash = value.to_string(),
            "n_d" => n_d = Some(uval()?),
            k if k.starts_with("grid_") => {} // informational
            _ => return Err(perr(off, no, format!("unknown manifest key '{key}'"))),
        }
    }
    let entries_start = entries_start.ok_or_else(|| {
        perr(
            text.len(),
            lines.len(),
            "missing [entries] section".into(),
        )
    })?;
    let n_d = n_d
        .ok_or_else(|| perr(text.len(), lines.len(), "missing n_d in manifest".into()))?;

    // the loaded sample points must be consistent with the ellipse fields;
    // descriptor_hash then certifies the whole protocol
    desc.validate().map_err(|e| {
        perr(
            0,
            1,
            format!("manifest descriptor failed validation: {e}"),
        )
    })?;
    let recomputed = desc.descriptor_hash();
    if recomputed != stored_hash {
        return Err(Error::ProtocolMismatch {
            expected: stored_hash,
            found: recomputed,
        });
    }

    let entry_lines = &lines[entries_start..];
    if entry_lines.len() != n_d {
        let (off, no) = entry_lines
            .last()
            .map(|&(o, n, l)| (o + l.len(), n))
            .unwrap_or((text.len(), lines.len()));
        return Err(perr(
            off,
            no,
            format!("manifest promises {n_d} entries, file holds {}", entry_lines.len()),
        ));
    }
    let hash = recomputed;
    let mut entries = Vec::with_capacity(n_d);
    for &(off, no, line) in entry_lines {
        entries.push(parse_entry(line, &desc, &hash).map_err(|msg| perr(off, no, msg))?);
    }
    Ok(Database {
        descriptor: desc,
        entries,
    })
}

fn parse_entry(
    line: &str,
    desc: &ExperimentDescriptor,
    hash: &str,
) -> std::result::Result<DatabaseEntry, String> {
    fn take_real<'a>(
        it: &mut impl Iterator<Item = &'a str>,
        name: &str,
    ) -> std::result::Result<f64, String> {
        it.next()
            .ok_or_else(|| format!("entry truncated before {name}"))?
            .parse::<f64>()
            .map_err(|e| format!("bad real in {name}: {e}"))
    }
    let mut it = line.split_whitespace();
    let token = it.next().ok_or("empty entry line")?;
    let model = ModelId::from_token(token).map_err(|e| e.to_string())?;
    let (nt_params, na_params) = model.signature();
    let alpha: Vec<f64> = (0..na_params)
        .map(|k| take_real(&mut it, &format!("alpha[{k}]")))
        .collect::<std::result::Result<_, _>>()?;
    let theta: Vec<f64> = (0..nt_params)
        .map(|k| take_real(&mut it, &format!("theta[{k}]")))
        .collect::<std::result::Result<_, _>>()?;
    let last_converged: usize = it
        .next()
        .ok_or("entry truncated before last_converged_step")?
        .parse()
        .map_err(|e| format!("bad last_converged_step: {e}"))?;
    let forces: Vec<f64> = (0..2 * desc.n_t)
        .map(|k| take_real(&mut it, &format!("f_R[{k}]")))
        .collect::<std::result::Result<_, _>>()?;
    let displacements: Vec<f64> = (0..2 * desc.n_u * desc.n_t)
        .map(|k| take_real(&mut it, &format!("f_u[{k}]")))
        .collect::<std::result::Result<_, _>>()?;
    if it.next().is_some() {
        return Err("trailing fields after fingerprint".into());
    }
    let fingerprint = Fingerprint::from_blocks(
        forces,
        displacements,
        desc.n_u,
        last_converged,
        hash.to_string(),
    )
    .map_err(|e| e.to_string())?;
    Ok(DatabaseEntry {
        model,
        params: Params::new(theta, alpha),
        last_converged_step: last_converged,
        fingerprint,
    })
}
