//! Non-solution search and certification.
//!
//! - [`complexity`] and [`mif_growth`] are exact brute force.
//! - [`certify_single`] builds the periodic segment pattern of one word and
//!   runs the concatenation check on it.
//! - [`certify_simultaneous`] bounds every overlap that can occur in the
//!   pattern of *any* word whose constants lie in a ball, so one passing
//!   certificate covers the whole family.
//! - The `find_*` searches sample random-walk endpoints at the calibrated
//!   lengths `ceil(C log2 n)` and `ceil(C n)` until the check succeeds.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{concat_check, overlap_diameter, periodic_pattern, ConcatReport, Extension, HypParams, Verdict};
use crate::group::{enumerate_ball, BackendSpec, GroupElement};
use crate::mixed::{enumerate_mixed_ball, enumerate_mixed_ball_with_identity, random_w_n, MixedWord};
use crate::par::*;
use crate::rng::{derive_seed, trial_rng, GENERATOR};
use crate::walk::{trial_endpoint, Measure};

/// Estimated random-walk constants, carried into every certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Conservative speed estimate.
    pub lambda_hat: f64,
    /// Dominating tail constant.
    pub c1_hat: f64,
    pub c_delta: f64,
    pub seed: u64,
    pub generator: String,
}

impl Calibration {
    pub fn new(lambda_hat: f64, c1_hat: f64, c_delta: f64, seed: u64) -> Self {
        Calibration {
            lambda_hat,
            c1_hat,
            c_delta,
            seed,
            generator: GENERATOR.to_string(),
        }
    }

    /// `20 C1 / lambda`, the single-word length constant.
    pub fn single_word_constant(&self) -> f64 {
        20.0 * self.c1_hat / self.lambda_hat
    }

    /// `20 C1 log2(s) / lambda` with `s` the number of symmetric generators.
    pub fn simultaneous_constant(&self, backend: &BackendSpec) -> f64 {
        let s = backend.generator_count() as f64;
        20.0 * self.c1_hat * s.log2() / self.lambda_hat
    }
}

/// Where the length constant of a search came from.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "source")]
pub enum LengthConstant {
    Calibrated { calibration: Calibration, value: f64 },
    Override { value: f64 },
}

impl LengthConstant {
    pub fn value(&self) -> f64 {
        match self {
            LengthConstant::Calibrated { value, .. } | LengthConstant::Override { value } => *value,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComplexityResult {
    pub value: usize,
    /// Shortlex-first element of minimal length with `w(g) != e`.
    pub witness: GroupElement,
    pub examined: u64,
}

/// Minimal length of a non-solution, by a shortlex sweep of growing spheres.
pub fn complexity(w: &MixedWord, budget: u64) -> Result<ComplexityResult> {
    if w.is_identity() {
        return Err(Error::TrivialWord);
    }
    let backend = w.backend();
    let mut examined: u64 = 0;
    let mut sphere = vec![GroupElement::identity(backend)];
    let mut radius = 0usize;
    loop {
        if examined.saturating_add(sphere.len() as u64) > budget {
            return Err(Error::BudgetExceeded {
                what: "complexity sweep",
                required: u128::from(examined) + sphere.len() as u128,
                limit: budget,
            });
        }
        let hit = sphere.par_iter().find_first(|g| !w.evaluate_unchecked(g).is_identity());
        match hit {
            Some(g) => {
                let before = sphere.iter().position(|h| h == g).unwrap() as u64;
                return Ok(ComplexityResult {
                    value: radius,
                    witness: g.clone(),
                    examined: examined + before + 1,
                });
            }
            None => examined += sphere.len() as u64,
        }
        sphere = next_sphere(&sphere, backend);
        radius += 1;
    }
}

fn next_sphere(sphere: &[GroupElement], backend: &Arc<BackendSpec>) -> Vec<GroupElement> {
    let s = backend.generator_count() as u8;
    let mut out = Vec::with_capacity(sphere.len() * usize::from(s));
    for g in sphere {
        for l in 0..s {
            if g.letters().last() == Some(&(l ^ 1)) {
                continue;
            }
            let mut h = g.clone();
            h.push(l);
            out.push(h);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthRecord {
    pub n: usize,
    pub value: usize,
    pub witness_word: MixedWord,
    pub witness_nonsolution: GroupElement,
    pub words_examined: usize,
}

/// Maximal complexity over all nontrivial words of length at most `n`.
///
/// Ties go to the first word in enumeration order.
pub fn mif_growth(n: usize, backend: &Arc<BackendSpec>, budget: u64) -> Result<GrowthRecord> {
    if n == 0 {
        return Err(Error::Parse("growth is defined for n >= 1".into()));
    }
    let words = enumerate_mixed_ball(n, backend, budget)?;
    let results: Vec<Result<ComplexityResult>> = words.par_iter().map(|w| complexity(w, budget)).collect();
    let mut best: Option<(usize, ComplexityResult)> = None;
    for (i, r) in results.into_iter().enumerate() {
        let r = r?;
        if best.as_ref().is_none_or(|(_, b)| r.value > b.value) {
            best = Some((i, r));
        }
    }
    let (i, r) = best.expect("n >= 1 gives a nonempty ball");
    Ok(GrowthRecord {
        n,
        value: r.value,
        witness_word: words[i].clone(),
        witness_nonsolution: r.witness,
        words_examined: words.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SingleCertification {
    pub word: MixedWord,
    pub candidate: GroupElement,
    pub core: MixedWord,
    pub conjugator: MixedWord,
    /// `w(g) != e`, decided by evaluating the core.
    pub nonsolution: bool,
    /// The concatenation check on the periodic pattern, when the core has an x.
    pub pattern_check: Option<ConcatReport>,
}

impl SingleCertification {
    /// The pattern check, if it passed: `w(g)` then has infinite order.
    pub fn certificate(&self) -> Option<&ConcatReport> {
        self.pattern_check.as_ref().filter(|r| r.verdict.passed())
    }
}

pub fn certify_single(w: &MixedWord, g: &GroupElement, params: &HypParams) -> Result<SingleCertification> {
    let d = w.cyclic_reduce()?;
    let nonsolution = !d.core.evaluate(g)?.is_identity();
    let pattern_check = match periodic_pattern(&d.core, g)? {
        Some(segments) => Some(concat_check(&segments, Extension::Periodic, params, 2)?),
        None => None,
    };
    Ok(SingleCertification {
        word: w.clone(),
        candidate: g.clone(),
        core: d.core,
        conjugator: d.conjugator,
        nonsolution,
        pattern_check,
    })
}

/// Largest overlaps between `[e, g^{+-1}]` and the geodesics that can meet it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BulletMaxima {
    /// max over c in the ball of D(c, g^{+-1}).
    pub constant_overlap: usize,
    /// |g|.
    pub displacement: usize,
    /// max over c in the ball of D(g^{-+1}, c g^{+-1}).
    pub reversed_translate_overlap: usize,
    /// max over c != e in the ball of D(g^{+-1}, c g^{+-1}).
    pub translate_overlap: usize,
}

impl BulletMaxima {
    /// Worst-case neighborhood sum for an even segment: two constant
    /// neighbors, and two x-neighbors whose overlap is at most the larger of
    /// the constant and translate overlaps.
    pub fn requirement(&self, c_delta: f64) -> f64 {
        let x_neighbor = self
            .constant_overlap
            .max(self.reversed_translate_overlap)
            .max(self.translate_overlap);
        (2 * self.constant_overlap + 2 * x_neighbor) as f64 + c_delta
    }
}

/// The original threshold bookkeeping: every overlap at most `lambda m / 10`
/// and `|g| > lambda m`, where `m` is the walk length that produced `g`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrictThresholds {
    pub lambda_hat: f64,
    pub walk_length: usize,
}

impl StrictThresholds {
    pub fn holds(&self, b: &BulletMaxima) -> bool {
        let lm = self.lambda_hat * self.walk_length as f64;
        let cap = lm / 10.0;
        b.displacement as f64 > lm
            && b.constant_overlap as f64 <= cap
            && b.reversed_translate_overlap as f64 <= cap
            && b.translate_overlap as f64 <= cap
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub candidate: GroupElement,
    pub radius: usize,
    /// `|g|` must exceed this.
    pub threshold: f64,
    pub bullet_maxima: BulletMaxima,
    pub c_delta: f64,
    pub verdict: Verdict,
    /// `|g| - threshold`.
    pub margin: f64,
    pub strict: Option<StrictThresholds>,
    pub ball_size: usize,
}

/// Certifies `w(g) != e` for every nontrivial `w` with constants in the ball of radius `n`.
pub fn certify_simultaneous(g: &GroupElement, n: usize, params: &HypParams, budget: u64) -> Result<Certificate> {
    certify_simultaneous_with(g, n, params, budget, None)
}

pub fn certify_simultaneous_with(
    g: &GroupElement,
    n: usize,
    params: &HypParams,
    budget: u64,
    strict: Option<StrictThresholds>,
) -> Result<Certificate> {
    let ball = enumerate_ball(n, g.backend(), budget)?;
    let g_inv = g.inverse();
    let d = |a: &GroupElement, b: &GroupElement| overlap_diameter(a, b, params);
    let rows: Vec<Result<(usize, usize, usize)>> = ball
        .par_iter()
        .map(|c| {
            let constant = d(c, g)?.max(d(c, &g_inv)?);
            let cg = c.mul(g);
            let cg_inv = c.mul(&g_inv);
            let reversed = d(&g_inv, &cg)?.max(d(g, &cg_inv)?);
            let translate = if c.is_identity() {
                0
            } else {
                d(g, &cg)?.max(d(&g_inv, &cg_inv)?)
            };
            Ok((constant, reversed, translate))
        })
        .collect();
    let mut b = BulletMaxima {
        constant_overlap: 0,
        displacement: g.len(),
        reversed_translate_overlap: 0,
        translate_overlap: 0,
    };
    for row in rows {
        let (c, r, t) = row?;
        b.constant_overlap = b.constant_overlap.max(c);
        b.reversed_translate_overlap = b.reversed_translate_overlap.max(r);
        b.translate_overlap = b.translate_overlap.max(t);
    }
    let threshold = b.requirement(params.c_delta);
    let margin = g.len() as f64 - threshold;
    let pass = margin > 0.0 && strict.is_none_or(|s| s.holds(&b));
    Ok(Certificate {
        candidate: g.clone(),
        radius: n,
        threshold,
        bullet_maxima: b,
        c_delta: params.c_delta,
        verdict: Verdict::from_bool(pass),
        margin,
        strict,
        ball_size: ball.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchSettings {
    pub max_attempts: u64,
    /// Attempts evaluated together; the winner is the lowest attempt index.
    pub batch: u64,
}

impl Default for SearchSettings {
    fn default() -> Self {
        SearchSettings {
            max_attempts: 10_000,
            batch: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NonsolutionSearch {
    pub word: MixedWord,
    pub nonsolution: GroupElement,
    /// 1-based index of the successful attempt.
    pub attempts: u64,
    pub walk_length: usize,
    pub constant: LengthConstant,
    pub master_seed: u64,
}

/// Walk length `ceil(C log2 max(|w|, 2))`.
pub fn single_walk_length(c: f64, word_length: usize) -> usize {
    (c * (word_length.max(2) as f64).log2()).ceil() as usize
}

/// Samples `x_m` with `m = ceil(C log2 |w|)` until `w(x_m) != e`.
pub fn find_nonsolution_random(
    w: &MixedWord,
    measure: &Measure,
    constant: LengthConstant,
    master_seed: u64,
    settings: &SearchSettings,
) -> Result<NonsolutionSearch> {
    if w.is_identity() {
        return Err(Error::TrivialWord);
    }
    measure.require_usable()?;
    let m = single_walk_length(constant.value(), w.mixed_length());
    let batch = settings.batch.max(1);
    let mut start = 0u64;
    while start < settings.max_attempts {
        let end = (start + batch).min(settings.max_attempts);
        let hit = (start..end).into_par_iter().find_map_first(|i| {
            let x = trial_endpoint(measure, m, master_seed, i);
            (!w.evaluate_unchecked(&x).is_identity()).then_some((i, x))
        });
        if let Some((i, x)) = hit {
            // postcondition, re-checked through the public path
            debug_assert!(!w.evaluate(&x)?.is_identity());
            return Ok(NonsolutionSearch {
                word: w.clone(),
                nonsolution: x,
                attempts: i + 1,
                walk_length: m,
                constant,
                master_seed,
            });
        }
        start = end;
    }
    Err(Error::AttemptLimitExceeded {
        attempts: settings.max_attempts,
        walk_length: m,
    })
}

/// Fraction of `trials` independent walks of length `m` whose endpoint is a non-solution.
pub fn nonsolution_rate(w: &MixedWord, measure: &Measure, walk_length: usize, trials: u64, master_seed: u64) -> f64 {
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map(|i| {
            let x = trial_endpoint(measure, walk_length, master_seed, i);
            u64::from(!w.evaluate_unchecked(&x).is_identity())
        })
        .sum();
    hits as f64 / trials as f64
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimultaneousSearch {
    pub n: usize,
    pub nonsolution: GroupElement,
    pub certificate: Certificate,
    pub attempts: u64,
    pub walk_length: usize,
    pub constant: LengthConstant,
    pub master_seed: u64,
}

/// Walk length `ceil(C n)`.
pub fn simultaneous_walk_length(c: f64, n: usize) -> usize {
    (c * n as f64).ceil() as usize
}

/// Samples `x_m` with `m = ceil(C n)` until the simultaneous certificate passes.
#[allow(clippy::too_many_arguments)]
pub fn find_simultaneous_random(
    n: usize,
    measure: &Measure,
    constant: LengthConstant,
    master_seed: u64,
    params: &HypParams,
    budget: u64,
    settings: &SearchSettings,
) -> Result<SimultaneousSearch> {
    measure.require_usable()?;
    let m = simultaneous_walk_length(constant.value(), n);
    // fail on budget before sampling anything
    let ball = measure.backend().ball_size(n);
    if ball > u128::from(budget) {
        return Err(Error::BudgetExceeded {
            what: "ball enumeration",
            required: ball,
            limit: budget,
        });
    }
    for i in 0..settings.max_attempts {
        let x = trial_endpoint(measure, m, master_seed, i);
        let cert = certify_simultaneous(&x, n, params, budget)?;
        if cert.verdict.passed() {
            return Ok(SimultaneousSearch {
                n,
                nonsolution: x,
                certificate: cert,
                attempts: i + 1,
                walk_length: m,
                constant,
                master_seed,
            });
        }
    }
    Err(Error::AttemptLimitExceeded {
        attempts: settings.max_attempts,
        walk_length: m,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UnionBoundReport {
    pub n: usize,
    pub walk_length: usize,
    /// `lambda_hat * m / 10`.
    pub threshold: f64,
    pub constants: usize,
    pub trials: u64,
    pub bad_events: u64,
    pub frequency: f64,
    /// `2 C1 / n`.
    pub bound: f64,
    pub within_bound: bool,
}

const CONSTANTS_STREAM: u64 = 0x00C0_57A7;

/// `n` random reduced words of length `n` and their inverses.
pub fn union_bound_constants(backend: &Arc<BackendSpec>, n: usize, master_seed: u64) -> Vec<GroupElement> {
    let mut rng = trial_rng(derive_seed(master_seed, CONSTANTS_STREAM), 0);
    let mut out: Vec<GroupElement> = Vec::with_capacity(2 * n);
    while out.len() < 2 * n {
        let g = GroupElement::random_reduced(backend, n, &mut rng);
        let gi = g.inverse();
        if out.contains(&g) || out.contains(&gi) {
            continue;
        }
        out.push(g);
        out.push(gi);
    }
    out
}

/// Frequency of `{exists g_i : D(g_i, x_m) >= lambda m / 10}` against `2 C1 / n`,
/// with `m = ceil((20 C1 / lambda) log2 n)`.
pub fn verify_union_bound(
    n: usize,
    measure: &Measure,
    calibration: &Calibration,
    constants: Option<Vec<GroupElement>>,
    trials: u64,
    master_seed: u64,
) -> Result<UnionBoundReport> {
    measure.require_usable()?;
    if n < 2 {
        return Err(Error::Parse("the union bound needs n >= 2".into()));
    }
    let constants = constants.unwrap_or_else(|| union_bound_constants(measure.backend(), n, master_seed));
    let m = single_walk_length(calibration.single_word_constant(), n);
    let threshold = calibration.lambda_hat * m as f64 / 10.0;
    let params = HypParams::tree(calibration.c_delta);
    let walk_seed = derive_seed(master_seed, 1);
    let bad_events: u64 = (0..trials)
        .into_par_iter()
        .map(|i| {
            let x = trial_endpoint(measure, m, walk_seed, i);
            let bad = constants
                .iter()
                .any(|c| overlap_diameter(c, &x, &params).expect("same backend") as f64 >= threshold);
            u64::from(bad)
        })
        .sum();
    let frequency = bad_events as f64 / trials as f64;
    let bound = 2.0 * calibration.c1_hat / n as f64;
    Ok(UnionBoundReport {
        n,
        walk_length: m,
        threshold,
        constants: constants.len(),
        trials,
        bad_events,
        frequency,
        bound,
        within_bound: frequency <= bound,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelflessMap {
    pub n: usize,
    /// `g_{2n}`: the image of `x`.
    pub image_of_x: GroupElement,
    /// `n |g_{2n}|`.
    pub f_value: usize,
    pub injectivity_checked_radius: usize,
    /// Size of the ball of `G * <x>` checked, identity included.
    pub ball_size: usize,
    pub max_image_length: usize,
    pub containment_holds: bool,
    pub search: SimultaneousSearch,
}

/// `x -> g_{2n}` with `g_{2n}` a certified simultaneous non-solution for `W_{2n}`,
/// checked injective on the `n`-ball of `G * <x>` with images in the `f(n)`-ball.
#[allow(clippy::too_many_arguments)]
pub fn build_selfless_map(
    n: usize,
    measure: &Measure,
    constant: LengthConstant,
    master_seed: u64,
    params: &HypParams,
    budget: u64,
    settings: &SearchSettings,
) -> Result<SelflessMap> {
    if n == 0 {
        return Err(Error::Parse("selfless maps are indexed by n >= 1".into()));
    }
    let search = find_simultaneous_random(2 * n, measure, constant, master_seed, params, budget, settings)?;
    let g = search.nonsolution.clone();
    let f_value = n * g.len();
    let ball = enumerate_mixed_ball_with_identity(n, measure.backend(), budget)?;
    let images: Vec<GroupElement> = ball.par_iter().map(|w| w.evaluate_unchecked(&g)).collect();
    let mut seen: HashMap<&GroupElement, usize> = HashMap::with_capacity(images.len());
    for (i, img) in images.iter().enumerate() {
        if let Some(&j) = seen.get(img) {
            return Err(Error::InjectivityFailure {
                left: ball[j].to_text(),
                right: ball[i].to_text(),
                image: img.to_string(),
            });
        }
        seen.insert(img, i);
    }
    let max_image_length = images.iter().map(GroupElement::len).max().unwrap_or(0);
    Ok(SelflessMap {
        n,
        image_of_x: g,
        f_value,
        injectivity_checked_radius: n,
        ball_size: ball.len(),
        max_image_length,
        containment_holds: max_image_length <= f_value,
        search,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CommutatorBound {
    pub n: usize,
    /// Minimal `|g|` with `[g, h] != e` for every `h != e` of length at most `n`.
    pub min_length: usize,
    pub witness: GroupElement,
}

/// Brute-force minimal simultaneous non-solution of the commutator family `x h x^-1 h^-1`.
pub fn commutator_lower_bound(n: usize, backend: &Arc<BackendSpec>, budget: u64) -> Result<CommutatorBound> {
    let hs: Vec<GroupElement> = enumerate_ball(n, backend, budget)?
        .into_iter()
        .filter(|h| !h.is_identity())
        .collect();
    let words: Vec<MixedWord> = hs
        .iter()
        .map(|h| {
            MixedWord::from_parts(
                vec![GroupElement::identity(backend), h.clone(), h.inverse()],
                vec![1, -1],
            )
            .expect("parts are consistent")
        })
        .collect();
    let mut sphere = vec![GroupElement::identity(backend)];
    let mut radius = 0usize;
    let mut examined: u64 = 0;
    loop {
        examined = examined.saturating_add(sphere.len() as u64 * words.len() as u64);
        if examined > budget.saturating_mul(64) {
            return Err(Error::BudgetExceeded {
                what: "commutator sweep",
                required: u128::from(examined),
                limit: budget,
            });
        }
        let hit = sphere
            .par_iter()
            .find_first(|g| words.iter().all(|w| !w.evaluate_unchecked(g).is_identity()));
        if let Some(g) = hit {
            return Ok(CommutatorBound {
                n,
                min_length: radius,
                witness: g.clone(),
            });
        }
        sphere = next_sphere(&sphere, backend);
        radius += 1;
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SoundnessSweep {
    pub samples: u64,
    pub certified: u64,
    pub nonsolutions: u64,
    /// Certified pairs where some `w^k(g)`, `k <= max_power`, was trivial.
    pub failures: u64,
    pub max_power: u32,
}

/// Random cyclically reduced words of length at most `max_word_length`
/// against random candidates; every passing single certificate must give
/// `w^k(g) != e` for all `1 <= k <= max_power`.
pub fn single_certificate_sweep(
    backend: &Arc<BackendSpec>,
    samples: u64,
    max_word_length: usize,
    max_candidate_length: usize,
    max_power: u32,
    params: &HypParams,
    master_seed: u64,
) -> Result<SoundnessSweep> {
    let rows: Vec<Result<(bool, bool, bool)>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(master_seed, i);
            let w = loop {
                let cand = random_w_n(backend, 3, 4, 2, &mut rng);
                let core = cand.cyclic_reduce()?.core;
                if core.mixed_length() <= max_word_length && !core.is_constant() {
                    break core;
                }
            };
            let len = rand::Rng::gen_range(&mut rng, 0..=max_candidate_length);
            let g = GroupElement::random_reduced(backend, len, &mut rng);
            let cert = certify_single(&w, &g, params)?;
            let certified = cert.certificate().is_some();
            let mut failed = false;
            if certified {
                for k in 1..=max_power {
                    failed |= w.pow(k).evaluate_unchecked(&g).is_identity();
                }
            }
            Ok((certified, cert.nonsolution, failed))
        })
        .collect();
    let mut out = SoundnessSweep {
        samples,
        max_power,
        ..SoundnessSweep::default()
    };
    for r in rows {
        let (c, ns, f) = r?;
        out.certified += u64::from(c);
        out.nonsolutions += u64::from(ns);
        out.failures += u64::from(f);
    }
    Ok(out)
}
