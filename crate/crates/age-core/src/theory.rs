//! Exact verification of the game's saddle-point and reciprocity claims on
//! small finite spaces, where every deterministic strategy can be enumerated
//! and every pushforward computed exactly.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Component tolerance when comparing finite distributions.
const DIST_TOL: f64 = 1e-9;
/// Tolerance when comparing payoffs in the saddle search.
const PAYOFF_TOL: f64 = 1e-9;

/// Exact probability vector over a finite set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiniteDistribution {
    probs: Vec<f64>,
}

impl FiniteDistribution {
    pub fn new(probs: Vec<f64>) -> Result<FiniteDistribution> {
        if probs.is_empty() {
            return Err(Error::invalid("distribution needs at least one atom"));
        }
        if probs.iter().any(|&p| p < 0.0) {
            return Err(Error::invalid("negative probability"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("probabilities sum to {total}, expected 1")));
        }
        Ok(FiniteDistribution { probs })
    }

    pub fn uniform(k: usize) -> FiniteDistribution {
        FiniteDistribution { probs: vec![1.0 / k as f64; k] }
    }

    pub fn point_mass(k: usize, at: usize) -> FiniteDistribution {
        let mut probs = vec![0.0; k];
        probs[at] = 1.0;
        FiniteDistribution { probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn support(&self) -> Vec<usize> {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn approx_eq(&self, other: &FiniteDistribution) -> bool {
        self.len() == other.len()
            && self
                .probs
                .iter()
                .zip(&other.probs)
                .all(|(a, b)| (a - b).abs() <= DIST_TOL)
    }
}

/// Deterministic map between finite sets, as a total target table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FiniteMap {
    targets: Vec<usize>,
    dst_size: usize,
}

impl FiniteMap {
    pub fn new(targets: Vec<usize>, dst_size: usize) -> Result<FiniteMap> {
        if targets.is_empty() || dst_size == 0 {
            return Err(Error::invalid("map needs nonempty source and destination"));
        }
        if let Some(&bad) = targets.iter().find(|&&t| t >= dst_size) {
            return Err(Error::invalid(format!(
                "map target {bad} out of range for destination of size {dst_size}"
            )));
        }
        Ok(FiniteMap { targets, dst_size })
    }

    pub fn identity(k: usize) -> FiniteMap {
        FiniteMap { targets: (0..k).collect(), dst_size: k }
    }

    pub fn apply(&self, i: usize) -> usize {
        self.targets[i]
    }

    pub fn src_size(&self) -> usize {
        self.targets.len()
    }

    pub fn dst_size(&self) -> usize {
        self.dst_size
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    /// Injective when restricted to the given source atoms.
    pub fn injective_on(&self, support: &[usize]) -> bool {
        let mut seen = vec![false; self.dst_size];
        for &i in support {
            if seen[self.targets[i]] {
                return false;
            }
            seen[self.targets[i]] = true;
        }
        true
    }
}

/// Distribution of f(x) for x ~ d.
pub fn pushforward(d: &FiniteDistribution, f: &FiniteMap) -> Result<FiniteDistribution> {
    if f.src_size() != d.len() {
        return Err(Error::invalid(format!(
            "map over {} atoms applied to distribution over {}",
            f.src_size(),
            d.len()
        )));
    }
    let mut probs = vec![0.0; f.dst_size()];
    for (i, &p) in d.probs().iter().enumerate() {
        probs[f.apply(i)] += p;
    }
    Ok(FiniteDistribution { probs })
}

/// Total-variation distance: non-negative, zero iff the distributions are
/// identical, and bounded on the simplex.
pub fn finite_divergence(p: &FiniteDistribution, q: &FiniteDistribution) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::ShapeMismatch {
            op: "finite_divergence",
            lhs: vec![p.len()],
            rhs: vec![q.len()],
        });
    }
    Ok(0.5 * p.probs().iter().zip(q.probs()).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// All maps from a source of `src` atoms to a destination of `dst` atoms,
/// enumerated in base-`dst` counting order.
pub fn enumerate_maps(src: usize, dst: usize) -> Vec<FiniteMap> {
    let total = dst.pow(src as u32);
    let mut maps = Vec::with_capacity(total);
    for idx in 0..total {
        let mut targets = Vec::with_capacity(src);
        let mut rest = idx;
        for _ in 0..src {
            targets.push(rest % dst);
            rest /= dst;
        }
        maps.push(FiniteMap { targets, dst_size: dst });
    }
    maps
}

// ---------------------------------------------------------------------------
// Lemma: distributions are equal iff every pushforward agrees
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct LemmaAllEReport {
    pub distributions_equal: bool,
    pub all_pushforwards_equal: bool,
    pub separating_maps: Vec<FiniteMap>,
    pub holds: bool,
}

/// Exhaustively confirms X = Y iff e#X = e#Y for every map e on spaces of
/// up to 6 atoms.
pub fn verify_lemma_all_e(x: &FiniteDistribution, y: &FiniteDistribution) -> Result<LemmaAllEReport> {
    if x.len() != y.len() {
        return Err(Error::invalid("lemma check needs distributions on the same space"));
    }
    if x.len() > 6 {
        return Err(Error::invalid("lemma enumeration is limited to 6 atoms"));
    }
    let equal = x.approx_eq(y);
    let mut separating = Vec::new();
    for e in enumerate_maps(x.len(), x.len()) {
        let px = pushforward(x, &e)?;
        let py = pushforward(y, &e)?;
        if !px.approx_eq(&py) {
            separating.push(e);
        }
    }
    let all_equal = separating.is_empty();
    Ok(LemmaAllEReport {
        distributions_equal: equal,
        all_pushforwards_equal: all_equal,
        separating_maps: separating,
        holds: equal == all_equal,
    })
}

// ---------------------------------------------------------------------------
// Saddle certification for the two game objectives
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct SaddleReport {
    pub game: u8,
    /// Some deterministic generator aligns g#Z with X.
    pub feasible: bool,
    /// Some encoder is injective on supp(X) and pushes X onto Y exactly;
    /// the finite form of the invertible-transport assumption game 2 needs.
    pub perfect_encoder_exists: bool,
    pub generator_count: usize,
    pub encoder_count: usize,
    pub aligned_generators: Vec<usize>,
    /// Saddle points as (generator index, encoder index) pairs.
    pub saddle_pairs: Vec<(usize, usize)>,
    pub saddle_count: usize,
    pub all_saddles_aligned: bool,
    pub every_aligned_has_saddle: bool,
    pub values_all_equal: bool,
    /// The shared payoff at the saddles, when any exist.
    pub value: Option<f64>,
    /// Game 2 only: saddle encoders whose pushforward of X differs from Y.
    pub caveat_encoder_count: usize,
    pub violations: Vec<String>,
}

fn saddle_pairs_of(payoff: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let n_gen = payoff.len();
    let n_enc = payoff[0].len();
    let mut pairs = Vec::new();
    for gi in 0..n_gen {
        let row_max = payoff[gi].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for ei in 0..n_enc {
            let col_min = (0..n_gen).map(|g| payoff[g][ei]).fold(f64::INFINITY, f64::min);
            let v = payoff[gi][ei];
            // e maximizes within the row, g minimizes within the column.
            if v >= row_max - PAYOFF_TOL && v <= col_min + PAYOFF_TOL {
                pairs.push((gi, ei));
            }
        }
    }
    pairs
}

fn certify_game_common<F>(
    game: u8,
    x: &FiniteDistribution,
    z: &FiniteDistribution,
    y: Option<&FiniteDistribution>,
    div: F,
) -> Result<SaddleReport>
where
    F: Fn(&FiniteDistribution, &FiniteDistribution) -> Result<f64>,
{
    if x.len() > 4 || z.len() > 4 {
        return Err(Error::invalid("saddle enumeration is limited to 4 atoms per space"));
    }
    if let Some(y) = y {
        if y.len() != z.len() {
            return Err(Error::invalid("reference distribution must live in the latent space"));
        }
    }
    let generators = enumerate_maps(z.len(), x.len());
    let encoders = enumerate_maps(x.len(), z.len());

    let gz: Vec<FiniteDistribution> =
        generators.iter().map(|g| pushforward(z, g)).collect::<Result<_>>()?;
    let aligned: Vec<usize> = gz
        .iter()
        .enumerate()
        .filter(|(_, d)| d.approx_eq(x))
        .map(|(i, _)| i)
        .collect();
    let feasible = !aligned.is_empty();

    let ex: Vec<FiniteDistribution> =
        encoders.iter().map(|e| pushforward(x, e)).collect::<Result<_>>()?;
    let x_support = x.support();
    let perfect_encoder_exists = match y {
        Some(y) => encoders
            .iter()
            .zip(&ex)
            .any(|(e, exd)| e.injective_on(&x_support) && exd.approx_eq(y)),
        None => false,
    };

    // Full payoff matrix.
    let mut payoff = vec![vec![0.0; encoders.len()]; generators.len()];
    for (gi, gzd) in gz.iter().enumerate() {
        for (ei, e) in encoders.iter().enumerate() {
            let egz = pushforward(gzd, e)?;
            payoff[gi][ei] = match y {
                // V2 = div(e#(g#Z) || Y) - div(e#X || Y)
                Some(y) => div(&egz, y)? - div(&ex[ei], y)?,
                // V1 = div(e#(g#Z) || e#X)
                None => div(&egz, &ex[ei])?,
            };
        }
    }

    let pairs = saddle_pairs_of(&payoff);
    let mut violations = Vec::new();

    let values: Vec<f64> = pairs.iter().map(|&(g, e)| payoff[g][e]).collect();
    let values_all_equal = values
        .windows(2)
        .all(|w| (w[0] - w[1]).abs() <= PAYOFF_TOL);
    if !values_all_equal {
        violations.push("saddle payoffs are not all equal".into());
    }
    let value = values.first().copied();

    let all_saddles_aligned = pairs.iter().all(|&(g, _)| aligned.contains(&g));
    let every_aligned_has_saddle =
        aligned.iter().all(|g| pairs.iter().any(|&(pg, _)| pg == *g));

    match game {
        1 => {
            if feasible {
                if !all_saddles_aligned {
                    violations.push("a saddle generator does not align g#Z with X".into());
                }
                // Theorem 1's converse: every aligned generator forms a
                // saddle with every encoder.
                for &g in &aligned {
                    for ei in 0..encoders.len() {
                        if !pairs.contains(&(g, ei)) {
                            violations.push(format!(
                                "aligned generator {g} with encoder {ei} is not a saddle"
                            ));
                        }
                    }
                }
                if let Some(v) = value {
                    if v.abs() > PAYOFF_TOL {
                        violations.push(format!("saddle value {v} differs from 0"));
                    }
                }
            }
        }
        2 => {
            if feasible && !every_aligned_has_saddle {
                violations.push("an aligned generator admits no saddle encoder".into());
            }
            if perfect_encoder_exists {
                if !all_saddles_aligned {
                    violations.push("a saddle generator does not align g#Z with X".into());
                }
                if let Some(v) = value {
                    if v.abs() > PAYOFF_TOL {
                        violations.push(format!("saddle value {v} differs from 0"));
                    }
                }
            }
        }
        _ => unreachable!(),
    }

    let caveat_encoder_count = match y {
        Some(y) => pairs
            .iter()
            .map(|&(_, e)| e)
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .filter(|&e| !ex[e].approx_eq(y))
            .count(),
        None => 0,
    };

    Ok(SaddleReport {
        game,
        feasible,
        perfect_encoder_exists,
        generator_count: generators.len(),
        encoder_count: encoders.len(),
        aligned_generators: aligned,
        saddle_count: pairs.len(),
        saddle_pairs: pairs,
        all_saddles_aligned,
        every_aligned_has_saddle,
        values_all_equal,
        value,
        caveat_encoder_count,
        violations,
    })
}

/// Certifies the direct two-sample game: saddles are exactly the aligned
/// generators paired with every encoder.
pub fn certify_game1_saddles(x: &FiniteDistribution, z: &FiniteDistribution) -> Result<SaddleReport> {
    certify_game1_with(x, z, finite_divergence)
}

/// Same certification with a caller-supplied divergence; lets tests inject a
/// faulty one and watch the violations fire.
pub fn certify_game1_with<F>(x: &FiniteDistribution, z: &FiniteDistribution, div: F) -> Result<SaddleReport>
where
    F: Fn(&FiniteDistribution, &FiniteDistribution) -> Result<f64>,
{
    certify_game_common(1, x, z, None, div)
}

/// Certifies the reference-distribution game: under the perfect-encoder
/// hypothesis every saddle is aligned and the saddle value is zero; aligned
/// generators always admit a saddle encoder.
pub fn certify_game2_saddles(
    x: &FiniteDistribution,
    z: &FiniteDistribution,
    y: &FiniteDistribution,
) -> Result<SaddleReport> {
    certify_game2_with(x, z, y, finite_divergence)
}

pub fn certify_game2_with<F>(
    x: &FiniteDistribution,
    z: &FiniteDistribution,
    y: &FiniteDistribution,
    div: F,
) -> Result<SaddleReport>
where
    F: Fn(&FiniteDistribution, &FiniteDistribution) -> Result<f64>,
{
    certify_game_common(2, x, z, Some(y), div)
}

// ---------------------------------------------------------------------------
// Lemma: an encoder invertible on supp(X) that equates the pushforwards
// forces alignment
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct LemmaInverseReport {
    pub pairs_checked: usize,
    pub violations: Vec<String>,
}

pub fn verify_lemma_inverse(x: &FiniteDistribution, z: &FiniteDistribution) -> Result<LemmaInverseReport> {
    if x.len() > 4 || z.len() > 4 {
        return Err(Error::invalid("lemma enumeration is limited to 4 atoms per space"));
    }
    let generators = enumerate_maps(z.len(), x.len());
    let encoders = enumerate_maps(x.len(), z.len());
    let x_support = x.support();
    let mut checked = 0;
    let mut violations = Vec::new();
    for (gi, g) in generators.iter().enumerate() {
        let gz = pushforward(z, g)?;
        // Almost-everywhere invertibility must hold for both measures being
        // compared: e has to separate the supported atoms of X and of g#Z.
        let mut support = x_support.clone();
        for atom in gz.support() {
            if !support.contains(&atom) {
                support.push(atom);
            }
        }
        for (ei, e) in encoders.iter().enumerate() {
            if !e.injective_on(&support) {
                continue;
            }
            let egz = pushforward(&gz, e)?;
            let exd = pushforward(x, e)?;
            if egz.approx_eq(&exd) {
                checked += 1;
                if !gz.approx_eq(x) {
                    violations.push(format!(
                        "generator {gi} with injective encoder {ei} matches pushforwards but g#Z != X"
                    ));
                }
            }
        }
    }
    Ok(LemmaInverseReport { pairs_checked: checked, violations })
}

// ---------------------------------------------------------------------------
// Reciprocity
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct ReciprocityReport {
    /// h(f(w)) = w held on every supported atom of W.
    pub hypothesis_holds: bool,
    pub inverse_on_q_support: bool,
    pub pullback_aligned: bool,
    pub violations: Vec<String>,
}

/// Checks the reciprocity theorem: if f aligns W with Q = f#W and h inverts
/// f on supp(W), then f inverts h on supp(Q) and h#Q = W.
pub fn verify_reciprocity(
    w: &FiniteDistribution,
    f: &FiniteMap,
    h: &FiniteMap,
) -> Result<ReciprocityReport> {
    if f.src_size() != w.len() {
        return Err(Error::invalid("f must be defined on W's space"));
    }
    if h.src_size() != f.dst_size() || h.dst_size() != w.len() {
        return Err(Error::invalid("h must map Q's space back to W's space"));
    }
    let q = pushforward(w, f)?;
    let hypothesis_holds = w.support().iter().all(|&i| h.apply(f.apply(i)) == i);
    if !hypothesis_holds {
        return Ok(ReciprocityReport {
            hypothesis_holds: false,
            inverse_on_q_support: false,
            pullback_aligned: false,
            violations: Vec::new(),
        });
    }
    let mut violations = Vec::new();
    let inverse_on_q_support = q.support().iter().all(|&j| f.apply(h.apply(j)) == j);
    if !inverse_on_q_support {
        violations.push("f(h(q)) != q on some supported atom of Q".into());
    }
    let hq = pushforward(&q, h)?;
    let pullback_aligned = hq.approx_eq(w);
    if !pullback_aligned {
        violations.push("h#Q differs from W".into());
    }
    Ok(ReciprocityReport { hypothesis_holds, inverse_on_q_support, pullback_aligned, violations })
}

// ---------------------------------------------------------------------------
// Instance generation for the certification harness
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct TheoryInstance {
    pub name: String,
    pub x: FiniteDistribution,
    pub z: FiniteDistribution,
    pub y: FiniteDistribution,
}

/// A random instance satisfying the standing assumption: Z has full support,
/// X is the pushforward of Z under an injective generator, and Y = Z.
pub fn random_feasible_instance(max_k: usize, rng: &mut impl Rng) -> TheoryInstance {
    let k_z = rng.gen_range(2..=max_k.max(2));
    let k_x = rng.gen_range(k_z..=max_k.max(k_z));
    let mut probs: Vec<f64> = (0..k_z).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    // Compensate rounding so the sum is exactly 1.
    let correction: f64 = 1.0 - probs.iter().sum::<f64>();
    probs[0] += correction;
    let z = FiniteDistribution::new(probs).expect("normalized");

    // Injective transport: a random choice of k_z distinct targets.
    let mut targets: Vec<usize> = (0..k_x).collect();
    for i in (1..targets.len()).rev() {
        let j = rng.gen_range(0..=i);
        targets.swap(i, j);
    }
    targets.truncate(k_z);
    let g0 = FiniteMap::new(targets, k_x).expect("valid map");
    let x = pushforward(&z, &g0).expect("dims chain");
    TheoryInstance { name: format!("random-{k_z}to{k_x}"), x, z: z.clone(), y: z }
}
