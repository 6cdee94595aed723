//! Finitely supported measures and the random walks they drive.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_rational::Ratio;
use rand::distributions::{Distribution, WeightedIndex};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::{overlap_diameter, HypParams};
use crate::group::{enumerate_ball, BackendSpec, GroupElement, Letter};
use crate::par::*;
use crate::rng::{trial_rng, Rng};

pub type Weight = Ratio<u64>;

#[derive(Clone)]
pub struct Measure {
    support: Vec<GroupElement>,
    weights: Vec<Weight>,
    backend: Arc<BackendSpec>,
    admissible: bool,
    admissibility_override: bool,
    sampler: WeightedIndex<u64>,
}

impl Measure {
    pub fn new(support: Vec<GroupElement>, weights: Vec<Weight>) -> Result<Self> {
        Self::build(support, weights, crate::DEFAULT_BUDGET)
    }

    pub fn build(support: Vec<GroupElement>, weights: Vec<Weight>, budget: u64) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidMeasure("empty support".into()));
        }
        if support.len() != weights.len() {
            return Err(Error::InvalidMeasure("support and weights differ in length".into()));
        }
        let backend = Arc::clone(support[0].backend());
        for (i, s) in support.iter().enumerate() {
            if !s.same_backend(&support[0]) {
                return Err(Error::BackendMismatch);
            }
            if support[..i].contains(s) {
                return Err(Error::InvalidMeasure(format!("{s} appears twice in the support")));
            }
        }
        if weights.iter().any(|w| *w.numer() == 0) {
            return Err(Error::InvalidMeasure("weights must be positive".into()));
        }
        let total = weights.iter().fold(Weight::from_integer(0), |a, b| a + b);
        if total != Weight::from_integer(1) {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}, not 1")));
        }
        // exact integer weights over the common denominator
        let denom = weights.iter().fold(1u64, |acc, w| lcm(acc, *w.denom()));
        let ints: Vec<u64> = weights.iter().map(|w| w.numer() * (denom / w.denom())).collect();
        let sampler = WeightedIndex::new(ints).map_err(|e| Error::InvalidMeasure(e.to_string()))?;
        let admissible = admissibility(&support, &backend, budget)?;
        Ok(Measure {
            support,
            weights,
            backend,
            admissible,
            admissibility_override: false,
            sampler,
        })
    }

    pub fn uniform(support: Vec<GroupElement>) -> Result<Self> {
        let n = support.len() as u64;
        let weights = vec![Weight::new(1, n.max(1)); support.len()];
        Self::new(support, weights)
    }

    /// Uniform on the standard symmetric generating set.
    pub fn uniform_generators(backend: &Arc<BackendSpec>) -> Self {
        let support = (0..backend.generator_count() as Letter)
            .map(|l| GroupElement::generator(backend, l))
            .collect();
        Self::uniform(support).expect("standard generators form a valid measure")
    }

    /// Parses `uniform(<symbols>)` or `elem:p/q, elem:p/q, ...`.
    pub fn parse(text: &str, backend: &Arc<BackendSpec>) -> Result<Self> {
        let t = text.trim();
        if let Some(inner) = t.strip_prefix("uniform(").and_then(|r| r.strip_suffix(')')) {
            let mut support = Vec::new();
            for (position, symbol) in inner.chars().filter(|c| !c.is_whitespace()).enumerate() {
                let l = backend
                    .letter(symbol)
                    .ok_or(Error::UnknownSymbol { symbol, position })?;
                support.push(GroupElement::generator(backend, l));
            }
            return Self::uniform(support);
        }
        let mut support = Vec::new();
        let mut weights = Vec::new();
        for item in t.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (elem, weight) = item
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("expected element:weight, got {item:?}")))?;
            let elem = elem.trim();
            let g = if elem == "e" && backend.letter('e').is_none() {
                GroupElement::identity(backend)
            } else {
                GroupElement::parse(elem, backend)?
            };
            support.push(g);
            weights.push(parse_weight(weight.trim())?);
        }
        Self::new(support, weights)
    }

    /// Marks the measure as usable even though the symmetric-generating check fails.
    pub fn with_admissibility_override(mut self) -> Self {
        self.admissibility_override = true;
        self
    }

    pub fn support(&self) -> &[GroupElement] {
        &self.support
    }

    pub fn weights(&self) -> &[Weight] {
        &self.weights
    }

    pub fn backend(&self) -> &Arc<BackendSpec> {
        &self.backend
    }

    pub fn is_admissible(&self) -> bool {
        self.admissible
    }

    pub fn has_override(&self) -> bool {
        self.admissibility_override
    }

    pub fn require_usable(&self) -> Result<()> {
        if self.admissible || self.admissibility_override {
            Ok(())
        } else {
            Err(Error::NotAdmissible)
        }
    }

    /// The measure of `g^-1` for `g` drawn from this one.
    pub fn reflected(&self) -> Measure {
        let mut m = Measure::new(
            self.support.iter().map(GroupElement::inverse).collect(),
            self.weights.clone(),
        )
        .expect("reflection preserves validity");
        m.admissibility_override = self.admissibility_override;
        m
    }

    pub fn sample_index(&self, rng: &mut Rng) -> usize {
        self.sampler.sample(rng)
    }

    pub fn probability(&self, index: usize) -> f64 {
        let w = self.weights[index];
        *w.numer() as f64 / *w.denom() as f64
    }

    pub fn to_text(&self) -> String {
        self.support
            .iter()
            .zip(&self.weights)
            .map(|(g, w)| format!("{g}:{}/{}", w.numer(), w.denom()))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

impl fmt::Debug for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Measure({})", self.to_text())
    }
}

impl Serialize for Measure {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_text())
    }
}

fn parse_weight(s: &str) -> Result<Weight> {
    let bad = || Error::Parse(format!("bad weight {s:?}"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p: u64 = p.trim().parse().map_err(|_| bad())?;
            let q: u64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0 {
                return Err(bad());
            }
            Ok(Weight::new(p, q))
        }
        None => Ok(Weight::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

/// The symmetric-generating sufficient condition for admissibility.
pub fn validate_admissible(m: &Measure) -> bool {
    m.admissible
}

fn admissibility(support: &[GroupElement], backend: &Arc<BackendSpec>, budget: u64) -> Result<bool> {
    let symmetric = support.iter().all(|g| support.contains(&g.inverse()));
    if !symmetric {
        return Ok(false);
    }
    generates_free_group(support, backend, budget)
}

/// Folds the bouquet of support loops (Stallings) and tests whether the
/// result is the rose with every generator, i.e. the subgroup is all of `F_k`.
pub fn generates_free_group(words: &[GroupElement], backend: &Arc<BackendSpec>, budget: u64) -> Result<bool> {
    let total: usize = words.iter().map(GroupElement::len).sum();
    if total as u128 > u128::from(budget) {
        return Err(Error::BudgetExceeded {
            what: "subgroup folding",
            required: total as u128,
            limit: budget,
        });
    }
    // edges (u, positive letter, v); vertex 0 is the base point
    let mut vertex_count = 1usize;
    let mut edges: Vec<(usize, Letter, usize)> = Vec::with_capacity(total);
    for w in words.iter().filter(|w| !w.is_identity()) {
        let mut at = 0usize;
        for (i, &l) in w.letters().iter().enumerate() {
            let next = if i + 1 == w.len() {
                0
            } else {
                vertex_count += 1;
                vertex_count - 1
            };
            if l % 2 == 0 {
                edges.push((at, l, next));
            } else {
                edges.push((next, l ^ 1, at));
            }
            at = next;
        }
    }
    let mut parent: Vec<usize> = (0..vertex_count).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    loop {
        let mut merged = false;
        let mut arrows: HashMap<(usize, Letter), usize> = HashMap::new();
        for &(u, l, v) in &edges {
            for (from, code, to) in [(u, l, v), (v, l ^ 1, u)] {
                let from = find(&mut parent, from);
                let to = find(&mut parent, to);
                match arrows.get(&(from, code)) {
                    Some(&t) => {
                        let t = find(&mut parent, t);
                        if t != to {
                            parent[t.max(to)] = t.min(to);
                            merged = true;
                        }
                    }
                    None => {
                        arrows.insert((from, code), to);
                    }
                }
            }
        }
        if !merged {
            break;
        }
    }
    let mut roots: Vec<usize> = (0..vertex_count).map(|v| find(&mut parent, v)).collect();
    roots.sort_unstable();
    roots.dedup();
    if roots.len() != 1 {
        return Ok(false);
    }
    let mut labels: Vec<Letter> = edges.iter().map(|e| e.1).collect();
    labels.sort_unstable();
    labels.dedup();
    Ok(labels.len() == backend.rank)
}

#[derive(Clone, Debug)]
pub struct WalkSpec {
    pub measure: Measure,
    pub seed: u64,
    pub length: usize,
}

impl WalkSpec {
    pub fn new(measure: Measure, seed: u64, length: usize) -> Result<Self> {
        measure.require_usable()?;
        Ok(WalkSpec { measure, seed, length })
    }
}

/// Positions `x_0 = e, x_1, ..., x_n`.
pub fn sample_walk(spec: &WalkSpec) -> Vec<GroupElement> {
    let mut rng = trial_rng(spec.seed, 0);
    let mut at = GroupElement::identity(spec.measure.backend());
    let mut out = Vec::with_capacity(spec.length + 1);
    out.push(at.clone());
    for _ in 0..spec.length {
        let s = &spec.measure.support[spec.measure.sample_index(&mut rng)];
        at.append(s.letters());
        out.push(at.clone());
    }
    out
}

/// `x_n` without keeping the intermediate positions.
pub fn walk_endpoint(measure: &Measure, length: usize, rng: &mut Rng) -> GroupElement {
    let mut at = GroupElement::identity(measure.backend());
    for _ in 0..length {
        let s = &measure.support[measure.sample_index(rng)];
        at.append(s.letters());
    }
    at
}

/// Endpoint of trial `index` under `master_seed`.
pub fn trial_endpoint(measure: &Measure, length: usize, master_seed: u64, index: u64) -> GroupElement {
    walk_endpoint(measure, length, &mut trial_rng(master_seed, index))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpeedEstimate {
    pub lambda_hat: f64,
    pub stderr: f64,
    /// 5th percentile of the per-trial speeds.
    pub p05: f64,
    pub n: usize,
    pub trials: usize,
    pub speeds: Vec<f64>,
}

pub fn estimate_speed(measure: &Measure, n: usize, trials: usize, master_seed: u64) -> Result<SpeedEstimate> {
    measure.require_usable()?;
    if n == 0 || trials == 0 {
        return Err(Error::InvalidMeasure("n and trials must be positive".into()));
    }
    let speeds: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|i| trial_endpoint(measure, n, master_seed, i).len() as f64 / n as f64)
        .collect();
    let mean = speeds.iter().sum::<f64>() / trials as f64;
    let var = if trials > 1 {
        speeds.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (trials - 1) as f64
    } else {
        0.0
    };
    Ok(SpeedEstimate {
        lambda_hat: mean,
        stderr: (var / trials as f64).sqrt(),
        p05: quantile(&speeds, 0.05),
        n,
        trials,
        speeds,
    })
}

/// Empirical quantile by the nearest-rank rule.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}

/// Candidate dominating constants: 0.25, 0.5, ..., 32.
pub fn c1_grid() -> impl Iterator<Item = f64> {
    (1..=128).map(|k| k as f64 * 0.25)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailEstimate {
    /// `(t, P[D >= t])` for `t = 0 ..= max observed + 1`.
    pub survival: Vec<(usize, f64)>,
    pub fitted_c1: f64,
    pub trials: usize,
    pub n: usize,
    pub probe: GroupElement,
    pub inverse: bool,
}

impl TailEstimate {
    pub fn survival_at(&self, t: usize) -> f64 {
        self.survival.get(t).map_or(0.0, |&(_, p)| p)
    }

    /// Least-squares slope of `log2 P[D >= t]` over the positive points in `range`.
    pub fn log2_slope(&self, range: std::ops::RangeInclusive<usize>) -> Option<(f64, usize)> {
        let pts: Vec<(f64, f64)> = range
            .filter_map(|t| {
                let p = self.survival_at(t);
                (p > 0.0).then(|| (t as f64, p.log2()))
            })
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Some((sxy / sxx, pts.len()))
    }

    pub fn dominated_by(&self, c: f64) -> bool {
        dominates(c, &self.survival)
    }
}

fn dominates(c: f64, survival: &[(usize, f64)]) -> bool {
    survival.iter().all(|&(t, p)| p <= c * (-(t as f64) / c).exp2() + 1e-12)
}

/// Smallest grid constant `C` with `survival(t) <= C 2^{-t/C}` everywhere.
pub fn fit_c1(survival: &[(usize, f64)]) -> Option<f64> {
    c1_grid().find(|&c| dominates(c, survival))
}

pub fn survival_function(values: &[usize]) -> Vec<(usize, f64)> {
    let max = values.iter().copied().max().unwrap_or(0);
    let mut counts = vec![0usize; max + 2];
    for &v in values {
        counts[v] += 1;
    }
    let total = values.len() as f64;
    let mut out = Vec::with_capacity(max + 2);
    let mut at_least = values.len();
    for (t, c) in counts.iter().enumerate() {
        out.push((t, at_least as f64 / total));
        at_least -= c;
    }
    out
}

/// Empirical law of `D(g, x_n)` (or `D(g, x_n^-1)`) and the fitted tail constant.
pub fn estimate_tail(
    measure: &Measure,
    g: &GroupElement,
    n: usize,
    trials: usize,
    master_seed: u64,
    inverse: bool,
) -> Result<TailEstimate> {
    measure.require_usable()?;
    g.check_same(&GroupElement::identity(measure.backend()))?;
    let params = HypParams::tree(0.0);
    let values: Vec<usize> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let x = trial_endpoint(measure, n, master_seed, i);
            let x = if inverse { x.inverse() } else { x };
            overlap_diameter(g, &x, &params).expect("same backend")
        })
        .collect();
    let survival = survival_function(&values);
    let fitted_c1 = fit_c1(&survival).ok_or(Error::NoDominatingConstant)?;
    Ok(TailEstimate {
        survival,
        fitted_c1,
        trials,
        n,
        probe: g.clone(),
        inverse,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OverlapTrial {
    /// max over g in the ball of D(x_n^-1, g x_n) / n
    pub reversed: f64,
    /// max over g != e in the ball of D(x_n, g x_n) / n
    pub translated: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OverlapStats {
    pub n: usize,
    pub radius: usize,
    /// The maxima range over the ball of this radius only, not all of G.
    pub ball_restricted: bool,
    pub trials: Vec<OverlapTrial>,
    pub reversed_median: f64,
    pub translated_median: f64,
    pub reversed_p90: f64,
    pub translated_p90: f64,
    pub reversed_max: f64,
    pub translated_max: f64,
}

pub fn translate_overlap_stats(
    measure: &Measure,
    n: usize,
    trials: usize,
    radius: usize,
    master_seed: u64,
    budget: u64,
) -> Result<OverlapStats> {
    measure.require_usable()?;
    let ball = enumerate_ball(radius, measure.backend(), budget)?;
    let params = HypParams::tree(0.0);
    let per_trial: Vec<OverlapTrial> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let x = trial_endpoint(measure, n, master_seed, i);
            let x_inv = x.inverse();
            let mut reversed = 0usize;
            let mut translated = 0usize;
            for g in &ball {
                let gx = g.mul(&x);
                reversed = reversed.max(overlap_diameter(&x_inv, &gx, &params).expect("same backend"));
                if !g.is_identity() {
                    translated = translated.max(overlap_diameter(&x, &gx, &params).expect("same backend"));
                }
            }
            OverlapTrial {
                reversed: reversed as f64 / n as f64,
                translated: translated as f64 / n as f64,
            }
        })
        .collect();
    let rev: Vec<f64> = per_trial.iter().map(|t| t.reversed).collect();
    let tra: Vec<f64> = per_trial.iter().map(|t| t.translated).collect();
    Ok(OverlapStats {
        n,
        radius,
        ball_restricted: true,
        reversed_median: quantile(&rev, 0.5),
        translated_median: quantile(&tra, 0.5),
        reversed_p90: quantile(&rev, 0.9),
        translated_p90: quantile(&tra, 0.9),
        reversed_max: rev.iter().copied().fold(0.0, f64::max),
        translated_max: tra.iter().copied().fold(0.0, f64::max),
        trials: per_trial,
    })
}
