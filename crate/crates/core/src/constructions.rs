//! Executable building blocks of the higher construction: flat averages,
//! rapidly increasing sequences, the strict-singularity gap vector, exact
//! pairs, dependent sequences and the uncomplementedness witness.
//!
//! Everything here is verified relative to the context it runs against.
//! Clauses that quantify over the full (infinite) norming set — the high-
//! weight clause of a RIS, clause (4) of an exact pair — are checked over the
//! registered members and the witness is stamped with the generation it was
//! checked at. Lower bounds are exact and certificate-backed; upper bounds
//! come from brackets and carry their caveats.

use num_traits::{ToPrimitive, Zero};

use crate::engine::{self, NormBracket};
use crate::error::{Error, Result};
use crate::norming::{Formation, KContext, RecordId, SeqId, SequenceKind, SpecialSequence, WeightTag};
use crate::rational::{self, Rational};
use crate::certificate::Sign;
use crate::sigma::SigmaRegistry;
use crate::spread;
use crate::vector::FinVector;

/// Depth used for upper brackets inside verifications.
const BRACKET_DEPTH: u32 = 14;

fn weight_of(ctx: &KContext, index: u64) -> Result<Rational> {
    ctx.schedule().weight(index)
}

fn m_as_u64(ctx: &KContext, index: u64) -> Result<u64> {
    ctx.schedule()
        .m(index)?
        .to_u64()
        .ok_or_else(|| Error::Capacity(format!("m_{index} does not fit in u64 at desk scale")))
}

// ---------------------------------------------------------------------------
// flat averages

/// A norm-one vector written as `N^{-1}(x_1 + … + x_N)` with parts of norm at
/// most `C` (part norms checked through clamped upper brackets).
#[derive(Debug, Clone)]
pub struct L1AverageWitness {
    pub x: FinVector,
    pub parts: Vec<FinVector>,
    pub c: Rational,
    pub n: usize,
    pub bracket: NormBracket,
    pub caveats: Vec<String>,
}

/// Greedy search: consecutive windows of `n` basis members, summed and
/// normalized by the certified lower bound. A window wins when the implied
/// part norms stay at or below `c` and the sup norm stays below `eps`.
pub fn find_l1_average(
    block_basis: &[FinVector],
    n: usize,
    c: &Rational,
    eps: &Rational,
    ctx: &KContext,
) -> Result<L1AverageWitness> {
    if n == 0 {
        return Err(Error::Parse("average length must be positive".into()));
    }
    if block_basis.len() < n {
        return Err(Error::NotFound(format!(
            "basis has {} members, need {n}",
            block_basis.len()
        )));
    }
    let mut tried = 0usize;
    for window in block_basis.windows(n) {
        tried += 1;
        let mut z = FinVector::zero();
        for b in window {
            z.add_assign(b);
        }
        let (lower, _) = engine::gm_norm_lower(&z, ctx)?;
        // parts are (n / lower) * z_i; their norms are n/lower times the part
        // bounds, so the window works when lower >= n / (c * min part bound).
        let x = z.scale(&(rational::int(1) / lower.clone()));
        if x.norm_infty() >= *eps {
            continue;
        }
        let scale = Rational::from_integer((n as i64).into()) / lower.clone();
        let mut parts = Vec::with_capacity(n);
        let mut parts_ok = true;
        for b in window {
            let part = b.scale(&scale);
            let pb = engine::gm_norm_bracket(&part, ctx, BRACKET_DEPTH)?;
            if pb.upper_clamped() > *c {
                parts_ok = false;
                break;
            }
            parts.push(part);
        }
        if !parts_ok {
            continue;
        }
        let bracket = engine::gm_norm_bracket(&x, ctx, BRACKET_DEPTH)?;
        // normalization is by the certified lower bound, exactly
        debug_assert_eq!(bracket.lower, rational::int(1));
        let mut caveats = bracket.caveats.clone();
        caveats.push("part norms checked via clamped upper brackets".into());
        return Ok(L1AverageWitness {
            x,
            parts,
            c: c.clone(),
            n,
            bracket,
            caveats,
        });
    }
    Err(Error::NotFound(format!(
        "no admissible window among {tried} candidates"
    )))
}

/// Margin report for the flat-average action bound: every weighted member
/// with weight above `m_j^{-1}` must act on `x` with `|f(x)| <= 3 w(f)`.
#[derive(Debug, Clone)]
pub struct AvEstReport {
    pub checked: usize,
    pub violations: Vec<String>,
    /// Smallest slack `3 w(f) - |f(x)|` observed (None when nothing checked).
    pub min_slack: Option<Rational>,
}

impl AvEstReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn verify_av_est(x: &FinVector, j: u64, ctx: &KContext) -> Result<AvEstReport> {
    let mut report = AvEstReport {
        checked: 0,
        violations: Vec::new(),
        min_slack: None,
    };
    for (_, r) in ctx.weighted_records() {
        let Some(tag) = r.weight else { continue };
        if tag.index >= j {
            continue; // w(f) = m_idx^{-1} > m_j^{-1} means idx < j
        }
        report.checked += 1;
        let value = num_traits::sign::abs(FinVector::pair(&r.functional, x));
        let bound = rational::int(3) * weight_of(ctx, tag.index)?;
        if value > bound {
            report.violations.push(format!(
                "member at weight m_{} acts with {} > {}",
                tag.index,
                rational::to_canonical(&value),
                rational::to_canonical(&bound)
            ));
        } else {
            let slack = bound - value;
            if report.min_slack.as_ref().is_none_or(|s| slack < *s) {
                report.min_slack = Some(slack);
            }
        }
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// the strict-singularity gap vector

/// The gap vector `x = (m_{2j}/n_{2j}) (x_1 + … + x_{n_{2j}})` with its
/// certificate `m_{2j}^{-1}(f_1 + … + f_{n_{2j}})`: certified norm at least 1
/// while the sup norm is `m_{2j}/n_{2j}` times the largest part sup norm.
#[derive(Debug, Clone)]
pub struct SsWitness {
    pub x: FinVector,
    pub f_record: RecordId,
    pub lower: Rational,
    pub sup_norm: Rational,
    /// `sup_norm / lower`: the strict-singularity gap this vector exhibits.
    pub gap_ratio: Rational,
}

pub fn make_ss_witness(
    j: u64,
    block_basis: &[FinVector],
    ctx: &mut KContext,
) -> Result<SsWitness> {
    let arity = ctx
        .schedule()
        .n(2 * j)?
        .to_usize()
        .ok_or_else(|| Error::Capacity(format!("n_{} is not desk-scale", 2 * j)))?;
    if arity < 2 {
        return Err(Error::Parse("need a block sequence of at least 2 vectors".into()));
    }
    if block_basis.len() < arity {
        return Err(Error::Capacity(format!(
            "basis has {} members, need n_{} = {arity}",
            block_basis.len(),
            2 * j
        )));
    }
    let window = &block_basis[..arity];
    let refs: Vec<&FinVector> = window.iter().collect();
    if !crate::vector::is_block_sequence(&refs) {
        return Err(Error::NonBlock("gap-vector parts must be block".into()));
    }
    let mut norming_ids = Vec::with_capacity(arity);
    for part in window {
        norming_ids.push(find_norming_functional(ctx, part)?);
    }
    let f_record = ctx.register(
        Formation::Regular {
            weight_index: 2 * j,
            children: norming_ids,
        },
        false,
    )?;
    let m = Rational::from_integer(ctx.schedule().m(2 * j)?.into());
    let n = Rational::from_integer(ctx.schedule().n(2 * j)?.into());
    let mut sum = FinVector::zero();
    for part in window {
        sum.add_assign(part);
    }
    let x = sum.scale(&(m / n));
    let value = FinVector::pair(&ctx.record(f_record).functional, &x);
    if value != rational::int(1) {
        return Err(Error::Parse(format!(
            "gap-vector certificate evaluates to {} instead of 1",
            rational::to_canonical(&value)
        )));
    }
    let (lower, _) = engine::gm_norm_lower(&x, ctx)?;
    let sup_norm = x.norm_infty();
    let gap_ratio = sup_norm.clone() / lower.clone();
    Ok(SsWitness {
        x,
        f_record,
        lower,
        sup_norm,
        gap_ratio,
    })
}

/// A member with `f(x) = 1` and `range(f) = range(x)`: a terminal for signed
/// unit vectors, otherwise a search over the registered members.
fn find_norming_functional(ctx: &mut KContext, x: &FinVector) -> Result<RecordId> {
    let range = x.range().ok_or(Error::ZeroVector("norming functional of zero"))?;
    if x.support_len() == 1 {
        let (i, q) = x.iter().next().map(|(i, q)| (i, q.clone())).unwrap();
        if q == rational::int(1) {
            return ctx.register_terminal(i, false);
        }
        if q == rational::int(-1) {
            return ctx.register_terminal(i, true);
        }
    }
    let found = ctx
        .weighted_records()
        .find(|(_, r)| {
            r.functional.range() == Some(range) && FinVector::pair(&r.functional, x) == rational::int(1)
        })
        .map(|(id, _)| id);
    found.ok_or_else(|| {
        Error::NotFound(format!(
            "no registered norming functional for {}",
            x.to_text()
        ))
    })
}

// ---------------------------------------------------------------------------
// rapidly increasing sequences

/// Verification record for a `(C, ε)`-rapidly-increasing block sequence.
#[derive(Debug, Clone)]
pub struct RISWitness {
    pub c: Rational,
    pub eps: Rational,
    pub js: Vec<u64>,
    pub checked_generation: u32,
    pub stability_checked: u32,
    pub diagnostics: Vec<String>,
    pub passed: bool,
}

/// Checks the three defining clauses relative to the context, then re-checks
/// them on every spread power up to `stability_cap`:
/// (1) `‖x_i‖ <= C` (clamped bracket) and `‖x_i‖_∞ < ε` (exact);
/// (2) `2 m_{j_{i+1}}^{-1} #supp(x_i) < ε` (exact);
/// (3) `|f(x_i)| <= C w(f)` for every weighted member with `w(f) > m_{j_i}^{-1}`.
pub fn verify_ris(
    xs: &[FinVector],
    c: &Rational,
    eps: &Rational,
    js: &[u64],
    ctx: &KContext,
    stability_cap: u32,
) -> Result<RISWitness> {
    let mut diagnostics = Vec::new();
    if xs.is_empty() || js.len() != xs.len() {
        return Err(Error::Parse("need one weight index per vector".into()));
    }
    let refs: Vec<&FinVector> = xs.iter().collect();
    if !crate::vector::is_block_sequence(&refs) {
        diagnostics.push("vectors are not block".into());
    }
    if !js.windows(2).all(|w| w[0] < w[1]) {
        diagnostics.push("weight indices are not strictly increasing".into());
    }
    for k in 0..=stability_cap {
        let shifted: Vec<FinVector> = xs
            .iter()
            .map(|x| spread::apply_s_pow(x, k))
            .collect::<Result<_>>()?;
        for (i, x) in shifted.iter().enumerate() {
            let b = engine::gm_norm_bracket(x, ctx, BRACKET_DEPTH)?;
            if b.upper_clamped() > *c {
                diagnostics.push(format!(
                    "clause 1 (S^{k}, vector {i}): clamped upper {} exceeds C",
                    rational::to_canonical(&b.upper_clamped())
                ));
            }
            if x.norm_infty() >= *eps {
                diagnostics.push(format!("clause 1 (S^{k}, vector {i}): sup norm not below ε"));
            }
            if i + 1 < shifted.len() {
                let lhs = rational::int(2)
                    * weight_of(ctx, js[i + 1])?
                    * Rational::from_integer((x.support_len() as i64).into());
                if lhs >= *eps {
                    diagnostics.push(format!(
                        "clause 2 (S^{k}, vector {i}): {} not below ε",
                        rational::to_canonical(&lhs)
                    ));
                }
            }
            for (_, r) in ctx.weighted_records() {
                let Some(tag) = r.weight else { continue };
                if tag.index >= js[i] {
                    continue;
                }
                let action = num_traits::sign::abs(FinVector::pair(&r.functional, x));
                let bound = c.clone() * weight_of(ctx, tag.index)?;
                if action > bound {
                    diagnostics.push(format!(
                        "clause 3 (S^{k}, vector {i}): member at weight m_{} acts with {}",
                        tag.index,
                        rational::to_canonical(&action)
                    ));
                }
            }
        }
    }
    let passed = diagnostics.is_empty();
    Ok(RISWitness {
        c: c.clone(),
        eps: eps.clone(),
        js: js.to_vec(),
        checked_generation: ctx.caps().generation,
        stability_checked: stability_cap,
        diagnostics,
        passed,
    })
}

/// Report of the averaged-sum estimate for a rapidly increasing sequence:
/// the bracket of `‖n_j^{-1} Σ x_i‖` against the reference bound `2C/m_j`,
/// and against `4C/m_j^2` when the interval-sum hypothesis holds in context.
#[derive(Debug, Clone)]
pub struct BasicIneqReport {
    pub bracket: NormBracket,
    pub reference_bound: Rational,
    pub within_reference: bool,
    pub extra_hypothesis_holds: bool,
    pub refined_bound: Rational,
    pub within_refined: Option<bool>,
}

pub fn check_basic_inequality(
    xs: &[FinVector],
    j: u64,
    c: &Rational,
    ctx: &KContext,
) -> Result<BasicIneqReport> {
    if xs.is_empty() {
        return Err(Error::Parse("need at least one vector".into()));
    }
    let d = xs.len() as u64;
    if num_bigint::BigUint::from(d) > ctx.schedule().n(2 * j - 1)? {
        return Err(Error::Capacity(format!("length {d} exceeds n_{}", 2 * j - 1)));
    }
    let n_j = Rational::from_integer(ctx.schedule().n(j)?.into());
    let mut sum = FinVector::zero();
    for x in xs {
        sum.add_assign(x);
    }
    let y = sum.scale(&(rational::int(1) / n_j));
    let bracket = engine::gm_norm_bracket(&y, ctx, BRACKET_DEPTH)?;
    let m_j = Rational::from_integer(ctx.schedule().m(j)?.into());
    let reference_bound = rational::int(2) * c.clone() / m_j.clone();
    let within_reference = bracket.upper_clamped() <= reference_bound;
    // extra hypothesis: every weighted member at exactly weight m_j^{-1}
    // acts on every consecutive partial sum with |h(Σ_E x_i)| <= C
    let mut extra = true;
    'outer: for (_, r) in ctx.weighted_records() {
        if r.weight != Some(WeightTag { index: j }) {
            continue;
        }
        for lo in 0..xs.len() {
            let mut partial = FinVector::zero();
            for x in &xs[lo..] {
                partial.add_assign(x);
                if num_traits::sign::abs(FinVector::pair(&r.functional, &partial)) > *c {
                    extra = false;
                    break 'outer;
                }
            }
        }
    }
    let refined_bound = rational::int(4) * c.clone() / (m_j.clone() * m_j);
    let within_refined = extra.then(|| bracket.upper_clamped() <= refined_bound);
    Ok(BasicIneqReport {
        bracket,
        reference_bound,
        within_reference,
        extra_hypothesis_holds: extra,
        refined_bound,
        within_refined,
    })
}

// ---------------------------------------------------------------------------
// exact pairs

/// A vector/functional pair with exact action 1, matched ranges, two-sided
/// norm control and a small sup norm, verified against the context, plus the
/// spread-stability of all of it up to `k_checked`.
#[derive(Debug, Clone)]
pub struct ExactPairWitness {
    pub x: FinVector,
    pub f_record: RecordId,
    /// Pair index: the functional's weight is `m_j^{-1}`.
    pub j: u64,
    pub stable: bool,
    pub k_checked: u32,
    pub diagnostics: Vec<String>,
    pub caveats: Vec<String>,
}

impl ExactPairWitness {
    pub fn passed(&self) -> bool {
        self.diagnostics.is_empty()
    }
}

/// Builds the flat exact pair at weight index `j` (even): `d = m_j^2 + 1`
/// consecutive units starting at `start`, scaled to make the weighted sum
/// act with value exactly 1. The flatness `m_j/d < m_j^{-1}` is what the
/// arity `d > m_j^2` buys.
pub fn flat_exact_pair(
    ctx: &mut KContext,
    j: u64,
    start: u64,
) -> Result<(FinVector, RecordId)> {
    if j % 2 != 0 {
        return Err(Error::Parse(format!(
            "exact pairs are built at even weight indices, got {j}"
        )));
    }
    let m = m_as_u64(ctx, j)?;
    let d = m
        .checked_mul(m)
        .and_then(|mm| mm.checked_add(1))
        .ok_or_else(|| Error::Capacity("pair arity overflow".into()))?;
    if num_bigint::BigUint::from(d) > ctx.schedule().n(j)? {
        return Err(Error::Capacity(format!(
            "pair at weight m_{j} needs arity {d} > n_{j}"
        )));
    }
    let start = start.max(2);
    let mut children = Vec::with_capacity(d as usize);
    for i in 0..d {
        children.push(ctx.register_terminal(start + i, false)?);
    }
    let f_record = ctx.register(
        Formation::Regular {
            weight_index: j,
            children,
        },
        false,
    )?;
    let scale = Rational::new(m.into(), d.into());
    let x = FinVector::from_pairs((0..d).map(|i| (start + i, scale.clone())));
    debug_assert_eq!(
        FinVector::pair(&ctx.record(f_record).functional, &x),
        rational::int(1)
    );
    Ok((x, f_record))
}

/// Verifies the four defining clauses of a `j`-exact pair against the
/// context. Clause texts in diagnostics use 1-based clause numbers:
/// (1) weight; (2) `1 <= ‖x‖` certified, clamped upper `<= 6`, `‖x‖_∞ <
/// m_j^{-1}`; (3) `f(x) = 1` and matched ranges; (4) `|h(x)| <= 9
/// max(m_j^{-1}, w(h))` for every weighted member of different weight.
pub fn verify_exact_pair(
    ctx: &KContext,
    x: &FinVector,
    f_record: RecordId,
    j: u64,
) -> Result<Vec<String>> {
    let mut diagnostics = Vec::new();
    let f = ctx.record(f_record);
    if f.weight != Some(WeightTag { index: j }) {
        diagnostics.push(format!("clause 1: functional weight is not m_{j}"));
    }
    let (lower, _) = engine::gm_norm_lower(x, ctx)?;
    if lower < rational::int(1) {
        diagnostics.push("clause 2: certified lower bound below 1".into());
    }
    let bracket = engine::gm_norm_bracket(x, ctx, BRACKET_DEPTH)?;
    if bracket.upper_clamped() > rational::int(6) {
        diagnostics.push(format!(
            "clause 2: clamped upper {} exceeds 6",
            rational::to_canonical(&bracket.upper_clamped())
        ));
    }
    let w_j = weight_of(ctx, j)?;
    if x.norm_infty() >= w_j {
        diagnostics.push("clause 2: sup norm not below the pair weight".into());
    }
    if FinVector::pair(&f.functional, x) != rational::int(1) {
        diagnostics.push("clause 3: action is not exactly 1".into());
    }
    if f.functional.range() != x.range() {
        diagnostics.push("clause 3: ranges differ".into());
    }
    for (_, h) in ctx.weighted_records() {
        let Some(tag) = h.weight else { continue };
        if tag.index == j {
            continue;
        }
        let action = num_traits::sign::abs(FinVector::pair(&h.functional, x));
        let bound = rational::int(9) * w_j.clone().max(weight_of(ctx, tag.index)?);
        if action > bound {
            diagnostics.push(format!(
                "clause 4: member at weight m_{} acts with {} > {}",
                tag.index,
                rational::to_canonical(&action),
                rational::to_canonical(&bound)
            ));
        }
    }
    Ok(diagnostics)
}

/// Builds a flat exact pair and verifies it, then re-verifies every spread
/// power `k <= stability_cap` against the canonical lift of the functional
/// and against every registered equal-weight member of `Λ^k(f)`.
pub fn make_stable_exact_pair(
    ctx: &mut KContext,
    j: u64,
    start: u64,
    stability_cap: u32,
) -> Result<ExactPairWitness> {
    let (x, f_record) = flat_exact_pair(ctx, j, start)?;
    let mut diagnostics = verify_exact_pair(ctx, &x, f_record, j)?;
    let mut caveats = vec![format!(
        "clause 4 checked over the registered members at generation cap {}",
        ctx.caps().generation
    )];
    if ctx.schedule().mode() == crate::schedule::ScheduleMode::Compact {
        caveats.push("compact-mode schedule".into());
    }
    for k in 1..=stability_cap {
        let sx = spread::apply_s_pow(&x, k)?;
        let lifted = {
            let mut id = f_record;
            for _ in 0..k {
                id = ctx.lift_record(id, false)?;
            }
            id
        };
        let f = ctx.record(f_record).functional.clone();
        let g = ctx.record(lifted).functional.clone();
        if !spread::lambda_member(&g, &f, k)? {
            diagnostics.push(format!("stability k={k}: canonical lift is not a Λ^{k}-member"));
        }
        for d in verify_exact_pair(ctx, &sx, lifted, j)? {
            diagnostics.push(format!("stability k={k}: {d}"));
        }
        // any other registered equal-weight member of Λ^k(f) must also work
        let snapshot: Vec<RecordId> = ctx
            .weighted_records()
            .filter(|(id, r)| *id != lifted && r.weight == Some(WeightTag { index: j }))
            .map(|(id, _)| id)
            .collect();
        for id in snapshot {
            let g = ctx.record(id).functional.clone();
            if spread::lambda_member(&g, &f, k)? {
                for d in verify_exact_pair(ctx, &sx, id, j)? {
                    diagnostics.push(format!("stability k={k} (alternate lift): {d}"));
                }
            }
        }
    }
    let stable = diagnostics.is_empty();
    Ok(ExactPairWitness {
        x,
        f_record,
        j,
        stable,
        k_checked: stability_cap,
        diagnostics,
        caveats,
    })
}

// ---------------------------------------------------------------------------
// dependent sequences

/// An alternating family of exact pairs tied together by spread powers and a
/// coding-driven special sequence of functionals.
#[derive(Debug, Clone)]
pub struct DependentSequence {
    /// `(x_i, f_i)` in order; odd positions are fresh pairs, even positions
    /// their spread images.
    pub pairs: Vec<(FinVector, RecordId)>,
    pub j: u64,
    /// `j_i`: pair weight indices (even).
    pub js: Vec<u64>,
    /// `k_i`: spread powers linking pair 2i-1 to pair 2i.
    pub ks: Vec<u32>,
    /// `s_i`: dyadic range exponents of the odd-position vectors.
    pub ss: Vec<u32>,
    /// The registered j-special sequence `(f_i)`.
    pub seq: SeqId,
    pub caveats: Vec<String>,
    pub diagnostics: Vec<String>,
}

impl DependentSequence {
    pub fn passed(&self) -> bool {
        self.diagnostics.is_empty()
    }
}

/// Builds the length-`n_{2j-1}` dependent sequence at compact scale: odd
/// positions are flat exact pairs (the first at the seed weight, later ones
/// at the coding-assigned weights), even positions are spread images with
/// powers spaced per the dyadic-range rule, and the functionals form a
/// registered j-special sequence. All defining clauses are then verified.
pub fn build_dependent_sequence(
    ctx: &mut KContext,
    registry: &mut SigmaRegistry,
    j: u64,
    stability_cap: u32,
) -> Result<DependentSequence> {
    if ctx.schedule().is_conforming() {
        return Err(Error::ConformingInfeasible(
            "dependent sequences need the compact schedule".into(),
        ));
    }
    let length = ctx
        .schedule()
        .n(2 * j - 1)?
        .to_usize()
        .ok_or_else(|| Error::Capacity(format!("n_{} is not desk-scale", 2 * j - 1)))?;
    let d = length / 2;
    if d == 0 {
        return Err(Error::Parse("dependent sequence needs at least one pair of pairs".into()));
    }
    let mut caveats = Vec::new();
    let mut diagnostics = Vec::new();
    let mut pairs: Vec<(FinVector, RecordId)> = Vec::with_capacity(length);
    let mut js: Vec<u64> = Vec::with_capacity(d);
    let mut ks: Vec<u32> = Vec::with_capacity(d);
    let mut ss: Vec<u32> = Vec::with_capacity(d);

    let seed = 2u64; // 4l-2 with l = 1
    let mut weight_index = seed;
    let mut cursor = ctx.max_used_support().max(1) + 1;
    for i in 0..d {
        js.push(weight_index);
        let (x_odd, f_odd) = flat_exact_pair(ctx, weight_index, cursor)?;
        // dyadic range exponent: range(x) ⊆ [2, 2^s]
        let hi = x_odd.max_support().unwrap();
        let s_i = 64 - (hi - 1).leading_zeros().min(63);
        let s_i = if 1u64.checked_shl(s_i).is_some_and(|p| p >= hi) {
            s_i
        } else {
            s_i + 1
        };
        // spread power: strictly beyond the previous pair's window and enough
        // to clear this vector's own range
        let lo = x_odd.min_support().unwrap();
        let mut k_i = 1u32;
        while lo
            .checked_shl(k_i)
            .ok_or_else(|| Error::Capacity("spread power overflow".into()))?
            <= hi
        {
            k_i += 1;
        }
        if i > 0 {
            let floor = ks[i - 1] + ss[i - 1] + s_i + 1;
            k_i = k_i.max(floor);
        }
        ss.push(s_i);
        ks.push(k_i);
        let x_even = spread::apply_s_pow(&x_odd, k_i)?;
        let f_even = ctx.lift_record_pow(f_odd, k_i, false)?;
        pairs.push((x_odd, f_odd));
        pairs.push((x_even.clone(), f_even));
        cursor = x_even.max_support().unwrap() + 1;
        if i + 1 < d {
            let prefix: Vec<FinVector> = pairs
                .iter()
                .map(|(_, id)| ctx.record(*id).functional.clone())
                .collect();
            weight_index = registry.assign(&prefix)?;
        }
    }

    let seq = ctx.register_sequence(SpecialSequence {
        kind: SequenceKind::JSpecial,
        j,
        members: pairs.iter().map(|(_, id)| *id).collect(),
        ks: ks.clone(),
    })?;

    // (D1): seed size clause — caveat at compact scale.
    let d1_bound = num_bigint::BigUint::from(9u64) * ctx.schedule().n(2 * j - 1)?.pow(2);
    if ctx.schedule().m(js[0])? <= d1_bound {
        caveats.push(format!(
            "seed clause: m_{} does not exceed 9 n_{}^2 (compact-mode caveat)",
            js[0],
            2 * j - 1
        ));
    }
    // (D2): the functionals form a j-special sequence with the stated weights.
    let special = crate::norming::verify_special(ctx, registry, seq)?;
    for v in special.violations {
        diagnostics.push(format!("special-sequence clause: {v}"));
    }
    for i in 0..d {
        let tag = ctx.record(pairs[2 * i].1).weight;
        if tag != Some(WeightTag { index: js[i] }) {
            diagnostics.push(format!("pair {} functional weight is not m_{}", 2 * i + 1, js[i]));
        }
    }
    // (D3): even positions are exact spread images.
    for i in 0..d {
        let shifted = spread::apply_s_pow(&pairs[2 * i].0, ks[i])?;
        if shifted != pairs[2 * i + 1].0 {
            diagnostics.push(format!("pair {} is not the S^{} image", 2 * i + 2, ks[i]));
        }
    }
    // (D4): both positions are j_i-exact pairs.
    for i in 0..d {
        for offset in 0..2 {
            for v in verify_exact_pair(ctx, &pairs[2 * i + offset].0, pairs[2 * i + offset].1, js[i])? {
                diagnostics.push(format!("pair {}: {v}", 2 * i + offset + 1));
            }
        }
    }
    // (D7) spacing (sufficient для (D5)): ranges dyadic and powers separated.
    for i in 0..d {
        let x = &pairs[2 * i].0;
        let lo = x.min_support().unwrap();
        let hi = x.max_support().unwrap();
        if lo < 2 || hi > 1u64 << ss[i] {
            diagnostics.push(format!("range clause fails for pair {}", 2 * i + 1));
        }
        if i + 1 < d && ks[i] + ss[i] >= ks[i + 1] - ss[i + 1] {
            diagnostics.push(format!("spacing clause fails between pairs {} and {}", i + 1, i + 2));
        }
    }
    // (D5) direct scan: for each spread power at most one odd pair is hit by
    // a canonical lift and at most one even functional maps onto the previous
    // vector.
    let scan_cap = ks[d - 1] + ss[d - 1] + 2;
    for k in 0..=scan_cap {
        let mut lift_hits = 0usize;
        let mut adjoint_hits = 0usize;
        for i in 0..d {
            let f_odd = &ctx.record(pairs[2 * i].1).functional;
            if let Ok(lifted) = spread::lambda_power_lift(f_odd, k) {
                if !FinVector::pair(&lifted, &pairs[2 * i + 1].0).is_zero() {
                    lift_hits += 1;
                }
            }
            let f_even = &ctx.record(pairs[2 * i + 1].1).functional;
            let image = spread::apply_r_pow(f_even, k);
            if !FinVector::pair(&image, &pairs[2 * i].0).is_zero() {
                adjoint_hits += 1;
            }
        }
        if lift_hits > 1 {
            diagnostics.push(format!("overlap scan: {lift_hits} lifted hits at power {k}"));
        }
        if adjoint_hits > 1 {
            diagnostics.push(format!("overlap scan: {adjoint_hits} adjoint hits at power {k}"));
        }
    }
    // (D6): the derived smallness of the next weight against the supports.
    let m_2j1 = weight_of(ctx, 2 * j - 1)?;
    let rhs = m_2j1.clone() * m_2j1;
    for i in 0..d.saturating_sub(1) {
        let lhs = rational::int(4)
            * weight_of(ctx, js[i + 1])?
            * Rational::from_integer((pairs[2 * i].0.support_len() as i64).into());
        if lhs >= rhs {
            diagnostics.push(format!(
                "weight-smallness clause fails between pairs {} and {}: {} not below {}",
                i + 1,
                i + 2,
                rational::to_canonical(&lhs),
                rational::to_canonical(&rhs)
            ));
        }
    }
    let _ = stability_cap;
    Ok(DependentSequence {
        pairs,
        j,
        js,
        ks,
        ss,
        seq,
        caveats,
        diagnostics,
    })
}

// ---------------------------------------------------------------------------
// the uncomplementedness witness

/// The witness pair: `y` in the even-supported span, `z` in the complement
/// span, with a certificate forcing `‖y+z‖ >= 1` while `‖y-z‖` is bracketed
/// and reported against the reference ratio `240/m_{2j-1}^2`.
#[derive(Debug, Clone)]
pub struct ComplementationWitness {
    pub y: FinVector,
    pub z: FinVector,
    pub lower_y_plus_z: Rational,
    pub witness_record: RecordId,
    pub bracket_y_minus_z: NormBracket,
    /// `upper(‖y-z‖) / lower(‖y+z‖)`, clamped upper.
    pub ratio: Rational,
    pub reference_ratio: Rational,
    pub caveats: Vec<String>,
}

pub fn complementation_witness(
    ctx: &mut KContext,
    dep: &DependentSequence,
) -> Result<ComplementationWitness> {
    let j = dep.j;
    let m = Rational::from_integer(ctx.schedule().m(2 * j - 1)?.into());
    let n = Rational::from_integer(ctx.schedule().n(2 * j - 1)?.into());
    let scale = m.clone() / n;
    let mut y = FinVector::zero();
    let mut z = FinVector::zero();
    for (i, (x, _)) in dep.pairs.iter().enumerate() {
        if i % 2 == 1 {
            y.add_assign(x);
        } else {
            z.add_assign(x);
        }
    }
    let y = y.scale(&scale);
    let z = z.scale(&scale);
    let mut caveats = dep.caveats.clone();
    if y.support().any(|i| i % 2 != 0) {
        caveats.push("even-span component touches an odd coordinate".into());
    }
    // the special functional over the whole sequence
    let sum = ctx.sequence_sum(dep.seq)?;
    let witness_record = ctx.register(
        Formation::RSpecial {
            sign: Sign::Plus,
            weight_index: 2 * j - 1,
            k: 0,
            restriction: sum.range().unwrap(),
            seq: dep.seq,
        },
        false,
    )?;
    let y_plus_z = y.add(&z);
    let direct = FinVector::pair(&ctx.record(witness_record).functional, &y_plus_z);
    if direct < rational::int(1) {
        return Err(Error::Parse(format!(
            "witness certificate acts with {} < 1",
            rational::to_canonical(&direct)
        )));
    }
    let (lower_y_plus_z, _) = engine::gm_norm_lower(&y_plus_z, ctx)?;
    let y_minus_z = y.sub(&z);
    let bracket_y_minus_z = engine::gm_norm_bracket(&y_minus_z, ctx, BRACKET_DEPTH)?;
    caveats.extend(bracket_y_minus_z.caveats.iter().cloned());
    let ratio = bracket_y_minus_z.upper_clamped() / lower_y_plus_z.clone();
    let m2 = m.clone() * m;
    let reference_ratio = rational::int(240) / m2;
    Ok(ComplementationWitness {
        y,
        z,
        lower_y_plus_z,
        witness_record,
        bracket_y_minus_z,
        ratio,
        reference_ratio,
        caveats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norming::{generate_k, KCaps, Regime};
    use crate::rational::{int, ratio};
    use crate::schedule::{ParameterSchedule, ScheduleMode};

    fn tsirelson_ctx() -> KContext {
        let sched = ParameterSchedule::compact(&[2, 4, 8], &[4, 6, 8]).unwrap();
        let mut ctx = KContext::new(
            sched,
            Regime::Tsirelson,
            KCaps::new(1, 8, 1).with_arity(4).with_budget(100_000),
        );
        generate_k(&mut ctx).unwrap();
        ctx
    }

    fn units(n: u64) -> Vec<FinVector> {
        (1..=n).map(|i| FinVector::unit(i, false)).collect()
    }

    #[test]
    fn l1_average_on_units() {
        let ctx = tsirelson_ctx();
        // ‖e_1+..+e_4‖ = 2 in the gen-1 context, so parts 4/2 e_i have norm 2
        let w = find_l1_average(&units(8), 4, &int(2), &int(2), &ctx).unwrap();
        assert_eq!(w.bracket.lower, int(1));
        assert_eq!(w.parts.len(), 4);
        // x = N^{-1} (sum of parts), exactly
        let mut sum = FinVector::zero();
        for p in &w.parts {
            sum.add_assign(p);
        }
        assert_eq!(sum.scale(&ratio(1, 4)), w.x);
    }

    #[test]
    fn l1_average_n1_is_a_basis_vector() {
        let ctx = tsirelson_ctx();
        let w = find_l1_average(&units(4), 1, &int(2), &int(2), &ctx).unwrap();
        assert_eq!(w.x, FinVector::unit(1, false));
    }

    #[test]
    fn l1_average_budget_exhausted() {
        let ctx = tsirelson_ctx();
        // epsilon = 0 can never be met
        assert!(matches!(
            find_l1_average(&units(8), 4, &int(2), &int(0), &ctx),
            Err(Error::NotFound(_))
        ));
    }

    #[test]
    fn av_est_sweep_and_negative_control() {
        let ctx = tsirelson_ctx();
        let w = find_l1_average(&units(8), 4, &int(2), &int(2), &ctx).unwrap();
        // n_1 = 4-average: check members with weight above m_1^{-1}; none
        // exist below index 1, so the sweep is vacuous
        let report = verify_av_est(&w.x, 1, &ctx).unwrap();
        assert!(report.passed());
        assert_eq!(report.checked, 0);
        // against index 2 the weight-1 members are checked
        let report = verify_av_est(&w.x, 2, &ctx).unwrap();
        assert!(report.passed(), "{:?}", report.violations);
        assert!(report.checked > 0);
    }

    #[test]
    fn av_est_planted_violator_is_reported() {
        let mut ctx = tsirelson_ctx();
        let w = find_l1_average(&units(8), 4, &int(2), &int(2), &ctx).unwrap();
        ctx.insert_record_unchecked(crate::norming::FunctionalRecord {
            functional: FinVector::from_pairs([(1, int(10))]),
            formation: crate::norming::Formation::Terminal {
                sign: crate::certificate::Sign::Plus,
                index: 1,
            },
            weight: Some(WeightTag { index: 1 }),
            generation: 1,
        });
        let report = verify_av_est(&w.x, 2, &ctx).unwrap();
        assert!(!report.passed());
    }

    #[test]
    fn basic_inequality_report_shape() {
        let ctx = tsirelson_ctx();
        // single vector: ||x_1|| / n_1 is far below 2C/m_1
        let xs = vec![FinVector::unit(1, false)];
        let report = check_basic_inequality(&xs, 1, &int(3), &ctx).unwrap();
        assert_eq!(report.reference_bound, int(3));
        assert!(report.within_reference);
        assert!(report.bracket.lower <= report.bracket.upper);
        // the refined bound is only claimed when the hypothesis held
        if let Some(within) = report.within_refined {
            assert!(report.extra_hypothesis_holds);
            let _ = within;
        }
    }

    #[test]
    fn ss_witness_compact_j1() {
        let sched = ParameterSchedule::compact(&[2, 4, 8], &[4, 6, 8]).unwrap();
        let mut ctx = KContext::new(sched, Regime::Gm, KCaps::new(2, 16, 4));
        for i in 1..=16 {
            ctx.register_terminal(i, false).unwrap();
            ctx.register_terminal(i, true).unwrap();
        }
        let w = make_ss_witness(1, &units(16), &mut ctx).unwrap();
        assert!(w.lower >= int(1));
        // sup norm is m_2/n_2 = 4/6 on the unit basis
        assert_eq!(w.sup_norm, ratio(4, 6));
        assert_eq!(
            FinVector::pair(&ctx.record(w.f_record).functional, &w.x),
            int(1)
        );
    }

    #[test]
    fn ss_witness_needs_two_blocks() {
        // a schedule whose n_2 would be 1 is unrepresentable (entries are
        // even), so the degenerate guard triggers on a too-short basis
        let sched = ParameterSchedule::compact(&[2, 4], &[4, 6]).unwrap();
        let mut ctx = KContext::new(sched, Regime::Gm, KCaps::new(2, 16, 4));
        assert!(make_ss_witness(1, &units(3), &mut ctx).is_err());
    }

    #[test]
    fn ris_singleton_and_failure_modes() {
        let ctx = tsirelson_ctx();
        let xs = vec![FinVector::unit(1, false)];
        let w = verify_ris(&xs, &int(3), &int(2), &[2], &ctx, 1).unwrap();
        assert!(w.passed, "{:?}", w.diagnostics);
        // ε = 0 fails clause 1
        let w = verify_ris(&xs, &int(3), &int(0), &[2], &ctx, 0).unwrap();
        assert!(!w.passed);
    }

    #[test]
    fn flat_pair_is_exact_at_compact_scale() {
        let sched = ParameterSchedule::compact(&[2, 4, 8], &[4, 18, 20]).unwrap();
        let mut ctx = KContext::new(sched, Regime::Gm, KCaps::new(4, 1 << 40, 8));
        let w = make_stable_exact_pair(&mut ctx, 2, 2, 2).unwrap();
        assert!(w.passed(), "{:?}", w.diagnostics);
        assert!(w.stable);
        // 17 flat coordinates of 4/17 each
        assert_eq!(w.x.support_len(), 17);
        assert_eq!(w.x.norm_infty(), ratio(4, 17));
    }

    #[test]
    fn dependent_sequence_and_witness_compact_j1() {
        let sched = ParameterSchedule::compact(&[2, 4, 8, 274], &[4, 18, 20, 75078]).unwrap();
        let mut ctx = KContext::new(sched, Regime::Gm, KCaps::new(8, 1 << 50, 280));
        let mut registry = SigmaRegistry::new(ScheduleMode::Compact);
        let dep = build_dependent_sequence(&mut ctx, &mut registry, 1, 2).unwrap();
        assert!(dep.passed(), "{:?}", dep.diagnostics);
        assert_eq!(dep.pairs.len(), 4);
        assert_eq!(dep.js, vec![2, 4]);
        let witness = complementation_witness(&mut ctx, &dep).unwrap();
        assert!(witness.lower_y_plus_z >= int(1));
        assert!(witness.y.support().all(|i| i % 2 == 0));
        assert!(witness.ratio < witness.reference_ratio);

        // the odd-position vectors form a rapidly increasing sequence at
        // their pair weights relative to this context
        let xs = vec![dep.pairs[0].0.clone(), dep.pairs[2].0.clone()];
        let ris = verify_ris(&xs, &int(3), &ratio(1, 4), &dep.js, &ctx, 1).unwrap();
        assert!(ris.passed, "{:?}", ris.diagnostics);
    }
}
