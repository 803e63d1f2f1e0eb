//! Fingerprint assembly, layout, truncation, and block normalization.
//!
//! A fingerprint concatenates the axis reaction forces and the sampled
//! displacements over the load program. The normative layout is step-major
//! with (x, y) interleaved:
//!
//! * force block: R_x(step 1), R_y(step 1), R_x(step 2), ...
//! * displacement block: steps outermost, then points, then components:
//!   u_x(p0), u_y(p0), u_x(p1), ... per step.
//!
//! Steps beyond `valid_steps` are exactly zero. `valid_steps` is stored
//! explicitly: a legitimate zero displacement must not be mistaken for a
//! failure marker.

use crate::error::{Error, Result};
use crate::fem::SolutionSeries;
use crate::specimen::ExperimentDescriptor;
use crate::util::fmt_g9;

#[derive(Debug, Clone, PartialEq)]
pub struct Fingerprint {
    /// Number of load steps represented (n_t of the protocol, or the
    /// truncation length for reduced fingerprints).
    pub n_steps: usize,
    /// Number of sampling points per step.
    pub n_points: usize,
    /// Force block, length 2 n_steps (N).
    pub forces: Vec<f64>,
    /// Displacement block, length 2 n_points n_steps (mm).
    pub displacements: Vec<f64>,
    /// Steps 1..=valid_steps carry data; later entries are zero.
    pub valid_steps: usize,
    /// Hash of the experiment descriptor this fingerprint belongs to.
    pub descriptor_hash: String,
}

impl Fingerprint {
    /// Total length 2 n_steps + 2 n_points n_steps.
    pub fn len(&self) -> usize {
        self.forces.len() + self.displacements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Builds a fingerprint from raw blocks, validating the layout.
    pub fn from_blocks(
        forces: Vec<f64>,
        displacements: Vec<f64>,
        n_points: usize,
        valid_steps: usize,
        descriptor_hash: String,
    ) -> Result<Self> {
        if forces.len() % 2 != 0 {
            return Err(Error::Layout("force block length must be even".into()));
        }
        let n_steps = forces.len() / 2;
        if displacements.len() != 2 * n_points * n_steps {
            return Err(Error::Layout(format!(
                "displacement block has {} entries, expected 2 x {n_points} x {n_steps}",
                displacements.len()
            )));
        }
        if valid_steps > n_steps {
            return Err(Error::Layout(format!(
                "valid_steps {valid_steps} exceeds step count {n_steps}"
            )));
        }
        Ok(Self {
            n_steps,
            n_points,
            forces,
            displacements,
            valid_steps,
            descriptor_hash,
        })
    }
}

/// Assembles a fingerprint from a solver series and its sampled
/// displacements; entries at and beyond the first unconverged step are
/// forced to zero.
pub fn assemble(
    series: &SolutionSeries,
    sampled: &[Vec<f64>],
    desc: &ExperimentDescriptor,
) -> Result<Fingerprint> {
    let n_t = desc.n_t;
    let n_u = desc.n_u;
    if series.steps.len() != n_t || sampled.len() != n_t {
        return Err(Error::Layout(format!(
            "series has {} steps and samples {}, descriptor expects {n_t}",
            series.steps.len(),
            sampled.len()
        )));
    }
    for (k, row) in sampled.iter().enumerate() {
        if row.len() != 2 * n_u {
            return Err(Error::Layout(format!(
                "step {} sampled {} values, expected {}",
                k + 1,
                row.len(),
                2 * n_u
            )));
        }
    }
    let valid = series.last_converged_step;
    let mut forces = vec![0.0; 2 * n_t];
    let mut displacements = vec![0.0; 2 * n_u * n_t];
    for k in 0..valid {
        forces[2 * k] = series.steps[k].reaction[0];
        forces[2 * k + 1] = series.steps[k].reaction[1];
        displacements[2 * n_u * k..2 * n_u * (k + 1)].copy_from_slice(&sampled[k]);
    }
    Fingerprint::from_blocks(forces, displacements, n_u, valid, desc.descriptor_hash())
}

/// Keeps only the first `n_hat_t` steps of both blocks.
pub fn truncate(fp: &Fingerprint, n_hat_t: usize) -> Result<Fingerprint> {
    if n_hat_t == 0 || n_hat_t > fp.n_steps {
        return Err(Error::Argument(format!(
            "truncation length {n_hat_t} outside 1..={}",
            fp.n_steps
        )));
    }
    Ok(Fingerprint {
        n_steps: n_hat_t,
        n_points: fp.n_points,
        forces: fp.forces[..2 * n_hat_t].to_vec(),
        displacements: fp.displacements[..2 * fp.n_points * n_hat_t].to_vec(),
        valid_steps: fp.valid_steps.min(n_hat_t),
        descriptor_hash: fp.descriptor_hash.clone(),
    })
}

/// Unit-norm blocks plus the original norms (for the homogeneity rescaling
/// of the matched parameters).
pub fn normalize_blocks(fp: &Fingerprint) -> Result<(Vec<f64>, Vec<f64>, f64, f64)> {
    let norm = |v: &[f64]| -> f64 { v.iter().map(|x| x * x).sum::<f64>().sqrt() };
    let norm_r = norm(&fp.forces);
    let norm_u = norm(&fp.displacements);
    if norm_r == 0.0 || norm_u == 0.0 {
        return Err(Error::DegenerateFingerprint(
            "a fingerprint block has zero norm (all-failed simulation or empty measurement)"
                .into(),
        ));
    }
    Ok((
        fp.forces.iter().map(|x| x / norm_r).collect(),
        fp.displacements.iter().map(|x| x / norm_u).collect(),
        norm_r,
        norm_u,
    ))
}

/// Canonical text serialization (9 significant digits).
pub fn serialize(fp: &Fingerprint) -> String {
    let mut s = String::new();
    s.push_str("format_version = 1\n");
    s.push_str(&format!("descriptor_hash = {}\n", fp.descriptor_hash));
    s.push_str(&format!("n_t = {}\n", fp.n_steps));
    s.push_str(&format!("n_u = {}\n", fp.n_points));
    s.push_str(&format!("valid_steps = {}\n", fp.valid_steps));
    s.push_str("f_R =");
    for v in &fp.forces {
        s.push(' ');
        s.push_str(&fmt_g9(*v));
    }
    s.push('\n');
    s.push_str("f_u =");
    for v in &fp.displacements {
        s.push(' ');
        s.push_str(&fmt_g9(*v));
    }
    s.push('\n');
    s
}

/// Parses [`serialize`] output.
pub fn parse(text: &str) -> Result<Fingerprint> {
    let mut fields: std::collections::HashMap<&str, &str> = std::collections::HashMap::new();
    let mut offset = 0usize;
    for (line_no, line) in text.lines().enumerate() {
        if let Some((k, v)) = line.split_once('=') {
            fields.insert(k.trim(), v.trim());
        } else if !line.trim().is_empty() {
            return Err(Error::Parse {
                offset,
                line: line_no + 1,
                message: format!("expected 'key = value', got '{line}'"),
            });
        }
        offset += line.len() + 1;
    }
    let get = |key: &str| -> Result<&str> {
        fields.get(key).copied().ok_or_else(|| Error::Parse {
            offset: text.len(),
            line: text.lines().count(),
            message: format!("missing field '{key}'"),
        })
    };
    let n_t: usize = get("n_t")?.parse().map_err(|e| Error::Parse {
        offset: 0,
        line: 0,
        message: format!("bad n_t: {e}"),
    })?;
    let n_u: usize = get("n_u")?.parse().map_err(|e| Error::Parse {
        offset: 0,
        line: 0,
        message: format!("bad n_u: {e}"),
    })?;
    let valid_steps: usize = get("valid_steps")?.parse().map_err(|e| Error::Parse {
        offset: 0,
        line: 0,
        message: format!("bad valid_steps: {e}"),
    })?;
    let parse_vec = |s: &str, expected: usize, name: &str| -> Result<Vec<f64>> {
        let v: std::result::Result<Vec<f64>, _> =
            s.split_whitespace().map(str::parse::<f64>).collect();
        let v = v.map_err(|e| Error::Parse {
            offset: 0,
            line: 0,
            message: format!("bad real in {name}: {e}"),
        })?;
        if v.len() != expected {
            return Err(Error::Parse {
                offset: 0,
                line: 0,
                message: format!("{name} has {} entries, expected {expected}", v.len()),
            });
        }
        Ok(v)
    };
    let forces = parse_vec(get("f_R")?, 2 * n_t, "f_R")?;
    let displacements = parse_vec(get("f_u")?, 2 * n_u * n_t, "f_u")?;
    Fingerprint::from_blocks(
        forces,
        displacements,
        n_u,
        valid_steps,
        get("descriptor_hash")?.to_string(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::LoadStep;

    fn toy_series(n_t: usize, converged: usize) -> (SolutionSeries, Vec<Vec<f64>>) {
        let steps = (0..n_t)
            .map(|k| LoadStep {
                lambda: 1.0 + 0.01 * (k + 1) as f64,
                displacement: vec![],
                reaction: if k < converged {
                    [10.0 * (k + 1) as f64, 20.0 * (k + 1) as f64]
                } else {
                    [0.0; 2]
                },
                converged: k < converged,
                newton_iters: 1,
            })
            .collect();
        let series = SolutionSeries {
            steps,
            last_converged_step: converged,
        };
        let sampled = (0..n_t)
            .map(|k| vec![0.1 * (k + 1) as f64, -0.2 * (k + 1) as f64])
            .collect();
        (series, sampled)
    }

    fn toy_descriptor(n_t: usize, n_u: usize) -> ExperimentDescriptor {
        let mut d = ExperimentDescriptor::standard();
        d.n_t = n_t;
        d.n_u = n_u;
        d.ellipse_semi_major = 8.0;
        d.refresh_sample_points().unwrap();
        d
    }

    #[test]
    fn layout_contract_toy() {
        let desc = toy_descriptor(2, 1);
        let (series, sampled) = toy_series(2, 2);
        let fp = assemble(&series, &sampled, &desc).unwrap();
        assert_eq!(fp.len(), 2 * 2 + 2 * 1 * 2);
        assert_eq!(fp.forces, vec![10.0, 20.0, 20.0, 40.0]);
        assert_eq!(fp.displacements, vec![0.1, -0.2, 0.2, -0.4]);
        assert_eq!(fp.valid_steps, 2);
    }

    #[test]
    fn default_descriptor_total_length() {
        let desc = ExperimentDescriptor::standard();
        let steps = (0..35)
            .map(|_| LoadStep {
                lambda: 1.0,
                displacement: vec![],
                reaction: [1.0, 1.0],
                converged: true,
                newton_iters: 1,
            })
            .collect::<Vec<_>>();
        let series = SolutionSeries {
            steps,
            last_converged_step: 35,
        };
        let sampled = vec![vec![1.0; 100]; 35];
        let fp = assemble(&series, &sampled, &desc).unwrap();
        assert_eq!(fp.len(), 3570);
    }

    #[test]
    fn zero_fill_after_failure() {
        let desc = toy_descriptor(10, 1);
        let (series, sampled) = toy_series(10, 6);
        let fp = assemble(&series, &sampled, &desc).unwrap();
        assert_eq!(fp.valid_steps, 6);
        assert!(fp.forces[12..].iter().all(|&v| v == 0.0));
        assert!(fp.displacements[12..].iter().all(|&v| v == 0.0));
        assert!(fp.forces[..12].iter().all(|&v| v != 0.0));
    }

    #[test]
    fn truncation_behavior() {
        let desc = toy_descriptor(10, 1);
        let (series, sampled) = toy_series(10, 10);
        let fp = assemble(&series, &sampled, &desc).unwrap();
        let same = truncate(&fp, 10).unwrap();
        assert_eq!(same, fp);
        let cut = truncate(&fp, 4).unwrap();
        assert_eq!(cut.forces.len(), 8);
        assert_eq!(cut.displacements.len(), 8);
        assert_eq!(cut.valid_steps, 4);
        let twice = truncate(&cut, 4).unwrap();
        assert_eq!(twice, cut);
        assert!(truncate(&fp, 0).is_err());
        assert!(truncate(&fp, 11).is_err());
    }

    #[test]
    fn default_truncation_length() {
        // 2*10 + 2*50*10 entries at the default 50 sampling points
        let desc = ExperimentDescriptor::standard();
        let steps = (0..35)
            .map(|_| LoadStep {
                lambda: 1.0,
                displacement: vec![],
                reaction: [1.0, 2.0],
                converged: true,
                newton_iters: 0,
            })
            .collect();
        let series = SolutionSeries {
            steps,
            last_converged_step: 35,
        };
        let sampled = vec![vec![0.5; 100]; 35];
        let fp = assemble(&series, &sampled, &desc).unwrap();
        let cut = truncate(&fp, 10).unwrap();
        assert_eq!(cut.len(), 1020);
    }

    #[test]
    fn normalization_and_round_trip() {
        let fp = Fingerprint::from_blocks(
            vec![3.0, 4.0],
            vec![1.0, 1.0],
            1,
            1,
            "feed".into(),
        )
        .unwrap();
        let (unit_r, _unit_u, norm_r, _norm_u) = normalize_blocks(&fp).unwrap();
        assert_eq!(unit_r, vec![0.6, 0.8]);
        assert_eq!(norm_r, 5.0);

        // idempotent on unit blocks
        let fp_unit = Fingerprint::from_blocks(unit_r.clone(), vec![1.0, 0.0], 1, 1, "feed".into())
            .unwrap();
        let (again, _, n, _) = normalize_blocks(&fp_unit).unwrap();
        assert!((n - 1.0).abs() < 1e-14);
        for (a, b) in again.iter().zip(&unit_r) {
            assert!((a - b).abs() < 1e-14);
        }

        // reconstruct norm * unit
        let mut rng = crate::testutil::Rng::new(4);
        let forces: Vec<f64> = (0..10).map(|_| rng.uniform(-5.0, 5.0)).collect();
        let disp: Vec<f64> = (0..20).map(|_| rng.uniform(-2.0, 2.0)).collect();
        let fp = Fingerprint::from_blocks(forces.clone(), disp.clone(), 2, 5, "x".into()).unwrap();
        let (ur, uu, nr, nu) = normalize_blocks(&fp).unwrap();
        for (orig, (u, n)) in forces.iter().zip(ur.iter().zip(std::iter::repeat(nr))) {
            assert!((orig - u * n).abs() <= 1e-14 * orig.abs().max(1.0));
        }
        for (orig, u) in disp.iter().zip(&uu) {
            assert!((orig - u * nu).abs() <= 1e-14 * orig.abs().max(1.0));
        }
    }

    #[test]
    fn zero_norm_block_is_degenerate() {
        let fp = Fingerprint::from_blocks(vec![0.0, 0.0], vec![1.0, 1.0], 1, 0, "x".into()).unwrap();
        assert!(matches!(
            normalize_blocks(&fp),
            Err(Error::DegenerateFingerprint(_))
        ));
    }

    #[test]
    fn serialization_fixpoint() {
        let desc = toy_descriptor(3, 1);
        let (series, sampled) = toy_series(3, 2);
        let mut fp = assemble(&series, &sampled, &desc).unwrap();
        // a value that does not survive 9-digit rounding unchanged
        fp.forces[0] = std::f64::consts::PI;
        let text1 = serialize(&fp);
        let parsed1 = parse(&text1).unwrap();
        let text2 = serialize(&parsed1);
        assert_eq!(text1, text2, "serialize -> parse -> serialize must be a fixpoint");
        let parsed2 = parse(&text2).unwrap();
        assert_eq!(parsed1, parsed2);
        assert_eq!(parsed1.valid_steps, fp.valid_steps);
        assert_eq!(parsed1.descriptor_hash, fp.descriptor_hash);
    }

    #[test]
    fn parse_reports_malformed_lines() {
        let err = parse("format_version = 1\ngarbage line\n");
        match err {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
