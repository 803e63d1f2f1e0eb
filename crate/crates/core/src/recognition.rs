//! Online phase: similarity scoring against the database, best-match
//! retrieval with homogeneity rescaling, and ranked output.
//!
//! Two measures are supported. The cosine measure compares per-block unit
//! vectors, weighted by the inverse block dimensions. The Euclidean measure
//! compares normalized force blocks but raw displacement blocks, preserving
//! magnitude information that cosine similarity discards; scores are
//! non-positive and zero only for an exact match.
//!
//! Entries whose simulation failed before the requested truncation are
//! ineligible: comparing against their hard zero-fill would corrupt both
//! measures.

use crate::constitutive::ModelId;
use crate::database::Database;
use crate::error::{Error, Result};
use crate::fingerprint::Fingerprint;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    Cosine,
    Euclidean,
}

impl Measure {
    pub fn token(&self) -> &'static str {
        match self {
            Measure::Cosine => "cosine",
            Measure::Euclidean => "euclidean",
        }
    }

    pub fn from_token(token: &str) -> Result<Self> {
        match token {
            "cosine" => Ok(Measure::Cosine),
            "euclidean" => Ok(Measure::Euclidean),
            other => Err(Error::Argument(format!("unknown measure '{other}'"))),
        }
    }
}

/// Outcome of a database match.
#[derive(Debug, Clone)]
pub struct MatchResult {
    pub best_index: usize,
    pub model: ModelId,
    pub alpha_star: Vec<f64>,
    /// Rescaled homogeneity parameters (N/mm^2).
    pub theta_star: Vec<f64>,
    pub similarity_score: f64,
    /// (database index, score) over all eligible entries, sorted by score
    /// descending with ties broken by the lower index.
    pub ranked: Vec<(usize, f64)>,
    pub measure: Measure,
    pub n_hat_t: usize,
}

/// Reduced-fingerprint view: prefix slices of the stored blocks, so
/// truncation costs nothing during scoring sweeps.
#[derive(Clone, Copy)]
struct BlockView<'a> {
    forces: &'a [f64],
    displacements: &'a [f64],
}

fn block_view(fp: &Fingerprint, n_hat_t: usize) -> BlockView<'_> {
    BlockView {
        forces: &fp.forces[..2 * n_hat_t],
        displacements: &fp.displacements[..2 * fp.n_points * n_hat_t],
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Validates the query against the database protocol and truncation rules.
fn prepare_query<'a>(
    db: &Database,
    f_star: &'a Fingerprint,
    n_hat_t: usize,
) -> Result<BlockView<'a>> {
    db.verify_descriptor_hash(&f_star.descriptor_hash)?;
    if n_hat_t == 0 || n_hat_t > f_star.n_steps {
        return Err(Error::Argument(format!(
            "truncation {n_hat_t} outside 1..={}",
            f_star.n_steps
        )));
    }
    if n_hat_t > f_star.valid_steps {
        return Err(Error::Argument(format!(
            "truncation {n_hat_t} exceeds the query's {} valid steps",
            f_star.valid_steps
        )));
    }
    let view = block_view(f_star, n_hat_t);
    if norm(view.forces) == 0.0 || norm(view.displacements) == 0.0 {
        return Err(Error::DegenerateFingerprint(
            "a fingerprint block has zero norm (all-failed simulation or empty measurement)"
                .into(),
        ));
    }
    Ok(view)
}

fn eligible_entries(db: &Database, n_hat_t: usize) -> Vec<usize> {
    (0..db.entries.len())
        .filter(|&i| db.entries[i].last_converged_step >= n_hat_t)
        .collect()
}

/// Double-double scalar (value = hi + lo). Model nesting makes some catalog
/// entries physically identical up to a force scale (generalized
/// neo-hookean at unit exponent, ogden at exponent two); their cosine
/// separation from the true self-match sits below f64 dot-product noise,
/// so scores are accumulated in roughly 32 significant digits to keep the
/// argmax exact and deterministic.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    fn from(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        let err = (a - (s - bb)) + (b - bb);
        Dd { hi: s, lo: err }
    }

    fn two_prod(a: f64, b: f64) -> Dd {
        let p = a * b;
        let err = f64::mul_add(a, b, -p);
        Dd { hi: p, lo: err }
    }

    fn add(self, other: Dd) -> Dd {
        let s = Dd::two_sum(self.hi, other.hi);
        let lo = s.lo + self.lo + other.lo;
        let r = Dd::two_sum(s.hi, lo);
        Dd { hi: r.hi, lo: r.lo }
    }

    fn mul(self, other: Dd) -> Dd {
        let p = Dd::two_prod(self.hi, other.hi);
        let lo = p.lo + self.hi * other.lo + self.lo * other.hi;
        let r = Dd::two_sum(p.hi, lo);
        Dd { hi: r.hi, lo: r.lo }
    }

    fn div(self, other: Dd) -> Dd {
        let q1 = self.hi / other.hi;
        let r = self.add(Dd::from(q1).mul(other).neg());
        let q2 = (r.hi + r.lo) / (other.hi + other.lo);
        Dd::two_sum(q1, q2)
    }

    fn sqrt(self) -> Dd {
        if self.hi <= 0.0 {
            return Dd::from(self.hi.sqrt());
        }
        let s1 = self.hi.sqrt();
        let s = Dd::from(s1);
        let r = self.add(s.mul(s).neg());
        let s2 = (r.hi + r.lo) / (2.0 * s1);
        Dd::two_sum(s1, s2)
    }

    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }

    fn total_cmp(&self, other: &Dd) -> std::cmp::Ordering {
        self.hi
            .total_cmp(&other.hi)
            .then(self.lo.total_cmp(&other.lo))
    }
}

/// Tree-reduced double-double dot product. Pairwise reduction keeps the
/// accumulated error near log2(n) ulps of the head word instead of n ulps,
/// which matters when ranking near-parallel blocks.
fn dot_dd(a: &[f64], b: &[f64]) -> Dd {
    debug_assert_eq!(a.len(), b.len());
    if a.len() <= 32 {
        let mut acc = Dd::ZERO;
        for (x, y) in a.iter().zip(b) {
            acc = acc.add(Dd::two_prod(*x, *y));
        }
        return acc;
    }
    let mid = a.len() / 2;
    dot_dd(&a[..mid], &b[..mid]).add(dot_dd(&a[mid..], &b[mid..]))
}

/// True exactly when `a` is a positive scalar multiple of `b`. Products of
/// two f64 values are exact in double-double, so the cross-minor test
/// a_i b_k = a_k b_i is decided without rounding.
fn exactly_positive_parallel(a: &[f64], b: &[f64]) -> bool {
    let mut k = 0;
    for (i, &v) in b.iter().enumerate() {
        if v.abs() > b[k].abs() {
            k = i;
        }
    }
    if b[k] == 0.0 || a[k] * b[k] <= 0.0 {
        return false;
    }
    a.iter().zip(b).all(|(&ai, &bi)| {
        let left = Dd::two_prod(ai, b[k]);
        let right = Dd::two_prod(a[k], bi);
        left.hi == right.hi && left.lo == right.lo
    })
}

/// cos of the angle between two blocks, in double-double.
///
/// The exact boundary matters for ranking: cos is 1 exactly iff the blocks
/// are parallel (decided without rounding above), and strictly below 1
/// otherwise, so a computed value is clamped under 1 for non-parallel
/// blocks. Near-twin database entries would otherwise shuffle with the
/// true self-match by accumulation noise.
fn cosine_dd(a: &[f64], b: &[f64]) -> Dd {
    if exactly_positive_parallel(a, b) {
        return Dd::from(1.0);
    }
    let num = dot_dd(a, b);
    let den = dot_dd(a, a).sqrt().mul(dot_dd(b, b).sqrt());
    let cos = num.div(den);
    let below_one = Dd {
        hi: 1.0,
        lo: -2.0f64.powi(-104),
    };
    if cos.total_cmp(&below_one) == std::cmp::Ordering::Greater {
        below_one
    } else {
        cos
    }
}

fn cosine_scores_dd(
    db: &Database,
    f_star: &Fingerprint,
    n_hat_t: usize,
) -> Result<Vec<(usize, Dd)>> {
    let q = prepare_query(db, f_star, n_hat_t)?;
    let n_fr = Dd::from(q.forces.len() as f64);
    let n_fu = Dd::from(q.displacements.len() as f64);
    let mut scores = Vec::new();
    for i in eligible_entries(db, n_hat_t) {
        let e = block_view(&db.entries[i].fingerprint, n_hat_t);
        if norm(e.forces) == 0.0 || norm(e.displacements) == 0.0 {
            continue; // a zero block cannot be compared meaningfully
        }
        let cr = cosine_dd(e.forces, q.forces);
        let cu = cosine_dd(e.displacements, q.displacements);
        scores.push((i, cr.div(n_fr).add(cu.div(n_fu))));
    }
    if scores.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    Ok(scores)
}

/// Cosine similarity scores over eligible entries:
/// cos(beta_R) / n_fR + cos(beta_u) / n_fu.
pub fn cosine_scores(
    db: &Database,
    f_star: &Fingerprint,
    n_hat_t: usize,
) -> Result<Vec<(usize, f64)>> {
    Ok(cosine_scores_dd(db, f_star, n_hat_t)?
        .into_iter()
        .map(|(i, s)| (i, s.value()))
        .collect())
}

/// Euclidean similarity scores over eligible entries:
/// -|f_bar_R^(i) - f_bar*_R|^2 - |f_hat_u^(i) - f_hat*_u|^2 / |f_hat*_u|^2.
/// Force blocks are normalized (the leading denominator is one by
/// construction); displacement blocks are raw.
pub fn euclidean_scores(
    db: &Database,
    f_star: &Fingerprint,
    n_hat_t: usize,
) -> Result<Vec<(usize, f64)>> {
    let q = prepare_query(db, f_star, n_hat_t)?;
    let q_norm_r = norm(q.forces);
    let q_norm_u2 = q.displacements.iter().map(|x| x * x).sum::<f64>();
    let mut scores = Vec::new();
    for i in eligible_entries(db, n_hat_t) {
        let e = block_view(&db.entries[i].fingerprint, n_hat_t);
        let e_norm_r = norm(e.forces);
        if e_norm_r == 0.0 || norm(e.displacements) == 0.0 {
            continue;
        }
        let dr: f64 = e
            .forces
            .iter()
            .zip(q.forces)
            .map(|(a, b)| {
                let d = a / e_norm_r - b / q_norm_r;
                d * d
            })
            .sum();
        let du: f64 = e
            .displacements
            .iter()
            .zip(q.displacements)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        scores.push((i, -dr - du / q_norm_u2));
    }
    if scores.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    Ok(scores)
}

/// Finds the best-matching entry and rescales its homogeneity parameters
/// with the norm of the measured force block: theta* = |f_hat*_R| theta_db /
/// |f_hat_R^(best)|; alpha* is copied.
pub fn best_match(
    db: &Database,
    f_star: &Fingerprint,
    measure: Measure,
    n_hat_t: usize,
) -> Result<MatchResult> {
    let ranked: Vec<(usize, f64)> = match measure {
        Measure::Cosine => {
            // rank on the extended-precision values, report f64
            let mut dd = cosine_scores_dd(db, f_star, n_hat_t)?;
            dd.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            dd.into_iter().map(|(i, s)| (i, s.value())).collect()
        }
        Measure::Euclidean => {
            let mut scores = euclidean_scores(db, f_star, n_hat_t)?;
            scores.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            scores
        }
    };
    let (best_index, similarity_score) = ranked[0];
    let entry = &db.entries[best_index];

    let norm_r_star = norm(block_view(f_star, n_hat_t).forces);
    let norm_r_entry = norm(block_view(&entry.fingerprint, n_hat_t).forces);
    let theta_star = entry
        .params
        .theta
        .iter()
        .map(|t| norm_r_star * t / norm_r_entry)
        .collect();

    Ok(MatchResult {
        best_index,
        model: entry.model,
        alpha_star: entry.params.alpha.clone(),
        theta_star,
        similarity_score,
        ranked,
        measure,
        n_hat_t,
    })
}

/// Rows for a ranked-similarity plot or report, best first, clamped to
/// `top_k`.
pub fn rank_report<'db>(
    db: &'db Database,
    result: &MatchResult,
    top_k: usize,
) -> Vec<(usize, usize, &'db ModelId, &'db [f64], f64)> {
    result
        .ranked
        .iter()
        .take(top_k)
        .enumerate()
        .map(|(rank, &(index, score))| {
            let entry = &db.entries[index];
            (
                rank + 1,
                index,
                &entry.model,
                entry.params.alpha.as_slice(),
                score,
            )
        })
        .collect()
}

/// Ranking CSV: header `rank,index,model,alpha,score`, alpha values joined
/// by semicolons.
pub fn render_ranking_csv(db: &Database, result: &MatchResult, top_k: usize) -> String {
    let mut s = String::from("rank,index,model,alpha,score\n");
    for (rank, index, model, alpha, score) in rank_report(db, result, top_k) {
        let alpha_s = alpha
            .iter()
            .map(|a| crate::util::fmt_g9(*a))
            .collect::<Vec<_>>()
            .join(";");
        s.push_str(&format!(
            "{rank},{index},{},{alpha_s},{}\n",
            model.token(),
            crate::util::fmt_g9(score)
        ));
    }
    s
}
