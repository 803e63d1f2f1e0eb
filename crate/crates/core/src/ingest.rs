//! Turns raw experiment-style data (displacement grids per load stage,
//! force-displacement curves, multiple repetitions) into a fingerprint
//! compatible with the database.
//!
//! Displacement grids are resampled at the protocol's sampling points by
//! bilinear interpolation, with a three-corner plane fit where a single
//! grid corner is masked out (DIC dropout). Forces are linearly
//! interpolated along the measured curve at the protocol's clamp targets,
//! never extrapolated. Repetitions are aggregated by a sign-preserving
//! geometric mean with an arithmetic fallback for mixed-sign components.

use crate::error::{Error, Result};
use crate::fingerprint::Fingerprint;
use crate::specimen::ExperimentDescriptor;

/// Regular displacement grid for one load stage of one repetition.
#[derive(Debug, Clone)]
pub struct DisplacementGrid {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Row-major values, y rows with x fastest: values[iy * nx + ix].
    values: Vec<[f64; 2]>,
    valid: Vec<bool>,
}

impl DisplacementGrid {
    /// Builds a grid from unordered (x, y, ux, uy, valid) samples; the
    /// points must fill a complete regular grid with uniform spacing.
    pub fn from_samples(samples: &[([f64; 2], [f64; 2], bool)]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Argument("empty displacement grid".into()));
        }
        let mut xs: Vec<f64> = samples.iter().map(|s| s.0[0]).collect();
        let mut ys: Vec<f64> = samples.iter().map(|s| s.0[1]).collect();
        xs.sort_by(f64::total_cmp);
        ys.sort_by(f64::total_cmp);
        let merge = |v: &[f64]| -> Vec<f64> {
            let span = (v[v.len() - 1] - v[0]).max(1e-9);
            let tol = 1e-9 * span.max(1.0);
            let mut out: Vec<f64> = Vec::new();
            for &x in v {
                if out.last().map_or(true, |&l| x - l > tol) {
                    out.push(x);
                }
            }
            out
        };
        let xs = merge(&xs);
        let ys = merge(&ys);
        let (nx, ny) = (xs.len(), ys.len());
        if nx < 2 || ny < 2 {
            return Err(Error::Argument(
                "displacement grid needs at least 2 x 2 nodes".into(),
            ));
        }
        if nx * ny != samples.len() {
            return Err(Error::Argument(format!(
                "{} samples do not fill a {nx} x {ny} grid",
                samples.len()
            )));
        }
        for axis in [&xs, &ys] {
            let h0 = axis[1] - axis[0];
            for w in axis.windows(2) {
                if ((w[1] - w[0]) - h0).abs() > 1e-6 * h0.max(1.0) {
                    return Err(Error::Argument("grid spacing is not uniform".into()));
                }
            }
        }
        let locate = |v: &[f64], x: f64| -> Result<usize> {
            let h = v[1] - v[0];
            let i = ((x - v[0]) / h).round() as isize;
            let i = i.clamp(0, v.len() as isize - 1) as usize;
            if (v[i] - x).abs() > 1e-6 * h.max(1.0) {
                return Err(Error::Argument(format!("sample at {x} is off-grid")));
            }
            Ok(i)
        };
        let mut values = vec![[f64::NAN; 2]; nx * ny];
        let mut valid = vec![false; nx * ny];
        let mut seen = vec![false; nx * ny];
        for (p, u, ok) in samples {
            let ix = locate(&xs, p[0])?;
            let iy = locate(&ys, p[1])?;
            let idx = iy * nx + ix;
            if seen[idx] {
                return Err(Error::Argument(format!(
                    "duplicate grid node at ({}, {})",
                    p[0], p[1]
                )));
            }
            seen[idx] = true;
            valid[idx] = *ok;
            values[idx] = if *ok { *u } else { [0.0, 0.0] };
        }
        Ok(Self {
            xs,
            ys,
            values,
            valid,
        })
    }

    pub fn nx(&self) -> usize {
        self.xs.len()
    }

    pub fn ny(&self) -> usize {
        self.ys.len()
    }
}

/// Bilinear resampling of the grid at the given points, with a plane fit
/// on cells that have exactly one masked corner. Output layout:
/// (u_x(p0), u_y(p0), u_x(p1), ...).
pub fn resample_to_points(grid: &DisplacementGrid, points: &[[f64; 2]]) -> Result<Vec<f64>> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let (x0, xl) = (grid.xs[0], grid.xs[nx - 1]);
    let (y0, yl) = (grid.ys[0], grid.ys[ny - 1]);
    let dx = grid.xs[1] - x0;
    let dy = grid.ys[1] - y0;
    let mut out = Vec::with_capacity(2 * points.len());
    for &p in points {
        if p[0] < x0 - 1e-9 || p[0] > xl + 1e-9 || p[1] < y0 - 1e-9 || p[1] > yl + 1e-9 {
            return Err(Error::Dropout(format!(
                "point ({:.4}, {:.4}) lies outside the measured grid",
                p[0], p[1]
            )));
        }
        let ix = (((p[0] - x0) / dx).floor() as isize).clamp(0, nx as isize - 2) as usize;
        let iy = (((p[1] - y0) / dy).floor() as isize).clamp(0, ny as isize - 2) as usize;
        let s = (p[0] - grid.xs[ix]) / dx;
        let t = (p[1] - grid.ys[iy]) / dy;
        let idx = [
            iy * nx + ix,           // c00
            iy * nx + ix + 1,       // c10
            (iy + 1) * nx + ix,     // c01
            (iy + 1) * nx + ix + 1, // c11
        ];
        let ok: Vec<bool> = idx.iter().map(|&i| grid.valid[i]).collect();
        let n_masked = ok.iter().filter(|&&v| !v).count();
        if n_masked >= 2 {
            return Err(Error::Dropout(format!(
                "point ({:.4}, {:.4}) sits in a cell with {n_masked} masked corners",
                p[0], p[1]
            )));
        }
        for comp in 0..2 {
            let c00 = grid.values[idx[0]][comp];
            let c10 = grid.values[idx[1]][comp];
            let c01 = grid.values[idx[2]][comp];
            let c11 = grid.values[idx[3]][comp];
            let v = if n_masked == 0 {
                (1.0 - s) * (1.0 - t) * c00
                    + s * (1.0 - t) * c10
                    + (1.0 - s) * t * c01
                    + s * t * c11
            } else if !ok[0] {
                c11 + (1.0 - s) * (c01 - c11) + (1.0 - t) * (c10 - c11)
            } else if !ok[1] {
                c00 + t * (c01 - c00) + s * (c11 - c01)
            } else if !ok[2] {
                c00 + s * (c10 - c00) + t * (c11 - c10)
            } else {
                c00 + s * (c10 - c00) + t * (c01 - c00)
            };
            out.push(v);
        }
    }
    Ok(out)
}

/// Monotone force-displacement record of one repetition.
#[derive(Debug, Clone)]
pub struct ForceCurve {
    pub u_clamp: Vec<f64>,
    pub forces: Vec<[f64; 2]>,
}

impl ForceCurve {
    pub fn new(u_clamp: Vec<f64>, forces: Vec<[f64; 2]>) -> Result<Self> {
        if u_clamp.len() != forces.len() || u_clamp.len() < 2 {
            return Err(Error::Argument(
                "force curve needs at least two aligned samples".into(),
            ));
        }
        if u_clamp.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Argument(
                "clamp displacements must be strictly increasing".into(),
            ));
        }
        Ok(Self { u_clamp, forces })
    }
}

/// Piecewise-linear force interpolation at the clamp targets; exact at
/// sample abscissae, never extrapolating.
pub fn interpolate_forces(curve: &ForceCurve, targets: &[f64]) -> Result<Vec<[f64; 2]>> {
    let u = &curve.u_clamp;
    let n = u.len();
    let mut out = Vec::with_capacity(targets.len());
    for &t in targets {
        if t < u[0] - 1e-12 || t > u[n - 1] + 1e-12 {
            return Err(Error::Extrapolation(format!(
                "clamp target {t} outside the measured range [{}, {}]",
                u[0],
                u[n - 1]
            )));
        }
        let j = match u.binary_search_by(|v| v.total_cmp(&t)) {
            Ok(j) => {
                out.push(curve.forces[j]);
                continue;
            }
            Err(j) => j.clamp(1, n - 1),
        };
        let w = (t - u[j - 1]) / (u[j] - u[j - 1]);
        let a = curve.forces[j - 1];
        let b = curve.forces[j];
        out.push([a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])]);
    }
    Ok(out)
}

/// Componentwise aggregate across repetitions: geometric mean of absolute
/// values with the shared sign when all repetitions agree; mixed signs or
/// zeros fall back to the arithmetic mean and are tallied.
pub fn aggregate_repetitions(reps: &[Vec<f64>]) -> Result<(Vec<f64>, usize)> {
    if reps.is_empty() {
        return Err(Error::Argument("no repetitions to aggregate".into()));
    }
    let len = reps[0].len();
    if reps.iter().any(|r| r.len() != len) {
        return Err(Error::Argument(
            "repetition vectors have mismatched lengths".into(),
        ));
    }
    if reps.len() == 1 {
        return Ok((reps[0].clone(), 0));
    }
    let n = reps.len() as f64;
    let mut out = Vec::with_capacity(len);
    let mut fallbacks = 0usize;
    for k in 0..len {
        let all_pos = reps.iter().all(|r| r[k] > 0.0);
        let all_neg = reps.iter().all(|r| r[k] < 0.0);
        if all_pos || all_neg {
            let log_mean = reps.iter().map(|r| r[k].abs().ln()).sum::<f64>() / n;
            out.push(if all_pos { log_mean.exp() } else { -log_mean.exp() });
        } else {
            fallbacks += 1;
            out.push(reps.iter().map(|r| r[k]).sum::<f64>() / n);
        }
    }
    Ok((out, fallbacks))
}

/// Rescales measured forces from the experimental specimen thickness to
/// the database thickness (forces scale linearly with thickness for thin
/// specimens under fixed displacements).
pub fn scale_thickness(
    curve: &ForceCurve,
    t_experiment: f64,
    t_database: f64,
) -> Result<ForceCurve> {
    if !(t_experiment > 0.0 && t_database > 0.0) {
        return Err(Error::Argument("thicknesses must be positive".into()));
    }
    let factor = t_database / t_experiment;
    Ok(ForceCurve {
        u_clamp: curve.u_clamp.clone(),
        forces: curve
            .forces
            .iter()
            .map(|f| [f[0] * factor, f[1] * factor])
            .collect(),
    })
}

/// Ingest bookkeeping surfaced to the caller.
#[derive(Debug, Clone, Default)]
pub struct IngestDiagnostics {
    /// Components aggregated by the arithmetic-mean fallback.
    pub fallback_components: usize,
}

/// Full measurement pipeline: resample each repetition's grids at the
/// protocol sampling points, interpolate each repetition's forces at the
/// clamp targets, aggregate across repetitions, and assemble a fingerprint
/// valid through `n_hat_t` steps.
///
/// `grids[rep][stage]` holds the displacement grid of load stage
/// `stage + 1`; each repetition must cover stages 1..=n_hat_t.
pub fn build_fingerprint(
    grids: &[Vec<DisplacementGrid>],
    curves: &[ForceCurve],
    desc: &ExperimentDescriptor,
    n_hat_t: usize,
) -> Result<(Fingerprint, IngestDiagnostics)> {
    if grids.is_empty() || grids.len() != curves.len() {
        return Err(Error::Argument(format!(
            "{} grid repetitions vs {} force repetitions",
            grids.len(),
            curves.len()
        )));
    }
    if n_hat_t == 0 || n_hat_t > desc.n_t {
        return Err(Error::Argument(format!(
            "requested {n_hat_t} stages, protocol has {}",
            desc.n_t
        )));
    }
    for (rep, stages) in grids.iter().enumerate() {
        if stages.len() < n_hat_t {
            return Err(Error::Argument(format!(
                "repetition {} is missing stage {} of {n_hat_t}",
                rep + 1,
                stages.len() + 1
            )));
        }
    }
    let mut diagnostics = IngestDiagnostics::default();

    // displacement block stage by stage
    let mut displacements = vec![0.0; 2 * desc.n_u * desc.n_t];
    for stage in 0..n_hat_t {
        let per_rep: Vec<Vec<f64>> = grids
            .iter()
            .map(|stages| resample_to_points(&stages[stage], &desc.sample_points))
            .collect::<Result<_>>()
            .map_err(|e| stage_error(stage, e))?;
        let (agg, fb) = aggregate_repetitions(&per_rep)?;
        diagnostics.fallback_components += fb;
        displacements[2 * desc.n_u * stage..2 * desc.n_u * (stage + 1)].copy_from_slice(&agg);
    }

    // force block
    let targets = &desc.clamp_targets()[..n_hat_t];
    let per_rep_forces: Vec<Vec<f64>> = curves
        .iter()
        .map(|curve| {
            interpolate_forces(curve, targets).map(|rows| {
                rows.iter().flat_map(|r| [r[0], r[1]]).collect::<Vec<f64>>()
            })
        })
        .collect::<Result<_>>()?;
    let (agg_forces, fb) = aggregate_repetitions(&per_rep_forces)?;
    diagnostics.fallback_components += fb;
    let mut forces = vec![0.0; 2 * desc.n_t];
    forces[..2 * n_hat_t].copy_from_slice(&agg_forces);

    let fp = Fingerprint::from_blocks(
        forces,
        displacements,
        desc.n_u,
        n_hat_t,
        desc.descriptor_hash(),
    )?;
    Ok((fp, diagnostics))
}

fn stage_error(stage: usize, e: Error) -> Error {
    match e {
        Error::Dropout(msg) => Error::Dropout(format!("stage {}: {msg}", stage + 1)),
        other => other,
    }
}

/// Parses a grid CSV: header `x_mm,y_mm,ux_mm,uy_mm,valid`, one row per
/// node.
pub fn parse_grid_csv(text: &str, file: &str) -> Result<DisplacementGrid> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Schema {
        file: file.into(),
        row: 0,
        message: "empty file".into(),
    })?;
    expect_header(header, &["x_mm", "y_mm", "ux_mm", "uy_mm", "valid"], file)?;
    let mut samples = Vec::new();
    for (row0, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row = row0 + 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(Error::Schema {
                file: file.into(),
                row,
                message: format!("expected 5 columns, got {}", fields.len()),
            });
        }
        let num = |i: usize, name: &str| -> Result<f64> {
            fields[i].parse().map_err(|e| Error::Schema {
                file: file.into(),
                row,
                message: format!("bad {name}: {e}"),
            })
        };
        let valid = match fields[4] {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::Schema {
                    file: file.into(),
                    row,
                    message: format!("valid must be 0 or 1, got '{other}'"),
                })
            }
        };
        samples.push((
            [num(0, "x_mm")?, num(1, "y_mm")?],
            [num(2, "ux_mm")?, num(3, "uy_mm")?],
            valid,
        ));
    }
    DisplacementGrid::from_samples(&samples).map_err(|e| Error::Schema {
        file: file.into(),
        row: 0,
        message: e.to_string(),
    })
}

/// Parses a force CSV: header `u_clamp_mm,Rx_N,Ry_N`.
pub fn parse_force_csv(text: &str, file: &str) -> Result<ForceCurve> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Schema {
        file: file.into(),
        row: 0,
        message: "empty file".into(),
    })?;
    expect_header(header, &["u_clamp_mm", "Rx_N", "Ry_N"], file)?;
    let mut u = Vec::new();
    let mut forces = Vec::new();
    for (row0, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row = row0 + 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::Schema {
                file: file.into(),
                row,
                message: format!("expected 3 columns, got {}", fields.len()),
            });
        }
        let num = |i: usize, name: &str| -> Result<f64> {
            fields[i].parse().map_err(|e| Error::Schema {
                file: file.into(),
                row,
                message: format!("bad {name}: {e}"),
            })
        };
        u.push(num(0, "u_clamp_mm")?);
        forces.push([num(1, "Rx_N")?, num(2, "Ry_N")?]);
    }
    ForceCurve::new(u, forces).map_err(|e| Error::Schema {
        file: file.into(),
        row: 0,
        message: e.to_string(),
    })
}

fn expect_header(line: &str, expected: &[&str], file: &str) -> Result<()> {
    let got: Vec<&str> = line.split(',').map(str::trim).collect();
    if got != expected {
        let missing: Vec<&str> = expected
            .iter()
            .filter(|c| !got.contains(*c))
            .copied()
            .collect();
        return Err(Error::Schema {
            file: file.into(),
            row: 1,
            message: if missing.is_empty() {
                format!("header must be '{}', got '{line}'", expected.join(","))
            } else {
                format!("missing column(s): {}", missing.join(", "))
            },
        });
    }
    Ok(())
}

/// Renders a grid CSV in the schema [`parse_grid_csv`] accepts.
pub fn render_grid_csv(grid: &DisplacementGrid) -> String {
    use crate::util::fmt_g9;
    let mut s = String::from("x_mm,y_mm,ux_mm,uy_mm,valid\n");
    for (iy, &y) in grid.ys.iter().enumerate() {
        for (ix, &x) in grid.xs.iter().enumerate() {
            let idx = iy * grid.nx() + ix;
            let u = grid.values[idx];
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt_g9(x),
                fmt_g9(y),
                fmt_g9(u[0]),
                fmt_g9(u[1]),
                if grid.valid[idx] { 1 } else { 0 }
            ));
        }
    }
    s
}

/// Renders a force CSV in the schema [`parse_force_csv`] accepts.
pub fn render_force_csv(curve: &ForceCurve) -> String {
    use crate::util::fmt_g9;
    let mut s = String::from("u_clamp_mm,Rx_N,Ry_N\n");
    for (u, f) in curve.u_clamp.iter().zip(&curve.forces) {
        s.push_str(&format!(
            "{},{},{}\n",
            fmt_g9(*u),
            fmt_g9(f[0]),
            fmt_g9(f[1])
        ));
    }
    s
}
