//! Certified lower bounds and bracketed upper bounds for the norm over a
//! context, with certificate transfer along the spread.
//!
//! Lower bounds are exact and certificate-backed: the reported value is
//! re-derived by evaluating the certificate. Upper bounds are *brackets*,
//! never exact claims: `upper = max |f(x)|` over members whose tree-analysis
//! depth is at most `D`, plus the tail term `2^{-D} ‖x‖_1` (every weight is at
//! most 1/2, so anything reached below depth D is controlled by the tail).
//! Completeness of the enumeration is relative to the registered members —
//! the true norming set quantifies over all special sequences ever nameable —
//! so every bracket carries machine-readable caveats.
//!
//! Certificate transfer implements the two halves of the isometry argument at
//! the level where it is exactly testable: every certificate for `x` lifts to
//! an equal-value certificate for `Sx` (canonical index doubling, adjoint
//! powers decremented), and every certificate for `Sx` maps under the adjoint
//! to an equal-value certificate for `x`.

use num_traits::Zero;
use serde::Serialize;

use crate::certificate::{NodeTag, Sign, TreeCertificate};
use crate::error::{Error, Result};
use crate::norming::{Formation, KContext, RecordId};
use crate::rational::{self, Rational};
use crate::spread;
use crate::vector::FinVector;

/// A certified two-sided norm estimate.
#[derive(Debug, Clone)]
pub struct NormBracket {
    pub lower: Rational,
    pub lower_cert: TreeCertificate,
    pub upper: Rational,
    pub depth_cap: u32,
    /// The ℓ₁ norm of the argument (the tail term is `2^{-D}` times this).
    pub norm_one: Rational,
    pub caveats: Vec<String>,
}

impl NormBracket {
    /// `min(upper, ‖x‖_1)`: the ℓ₁ norm always dominates, so clamping is
    /// sound and usually much tighter than the raw tail bound.
    pub fn upper_clamped(&self) -> Rational {
        self.upper.clone().min(self.norm_one.clone())
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Dto<'a> {
            lower: String,
            upper: String,
            #[serde(rename = "depthCap")]
            depth_cap: u32,
            caveats: &'a [String],
            certificate: serde_json::Value,
        }
        let dto = Dto {
            lower: rational::to_canonical(&self.lower),
            upper: rational::to_canonical(&self.upper),
            depth_cap: self.depth_cap,
            caveats: &self.caveats,
            certificate: serde_json::from_str(&self.lower_cert.to_canonical_json())
                .expect("certificate json"),
        };
        serde_json::to_string(&dto).expect("bracket json")
    }
}

struct Candidate {
    value: Rational,
    depth: u32,
    cert: TreeCertificate,
    json: String,
}

fn better(new: &Candidate, old: &Candidate) -> bool {
    if new.value != old.value {
        return new.value > old.value;
    }
    if new.depth != old.depth {
        return new.depth < old.depth;
    }
    new.json < old.json
}

fn consider(best: &mut Option<Candidate>, value: Rational, depth: u32, cert: TreeCertificate) {
    let json = cert.to_canonical_json();
    let candidate = Candidate {
        value,
        depth,
        cert,
        json,
    };
    if best.as_ref().is_none_or(|b| better(&candidate, b)) {
        *best = Some(candidate);
    }
}

/// Tree-analysis depth of a record (terminals 0, nodes one above their
/// deepest constituent).
pub fn record_depth(ctx: &KContext, id: RecordId) -> u32 {
    match &ctx.record(id).formation {
        Formation::Terminal { .. } => 0,
        Formation::Regular { children, .. } => {
            1 + children.iter().map(|c| record_depth(ctx, *c)).max().unwrap_or(0)
        }
        Formation::RSpecial { seq, .. } | Formation::LambdaSpecial { seq, .. } => {
            let members = &ctx.sequences()[*seq].members;
            1 + members.iter().map(|c| record_depth(ctx, *c)).max().unwrap_or(0)
        }
    }
}

/// Max of `|f(x)|` over the context members (terminals up to the support cap
/// are implicit members), with a certificate. Tie-breaking: maximal value,
/// then minimal depth, then lexicographic canonical JSON.
pub fn gm_norm_lower(x: &FinVector, ctx: &KContext) -> Result<(Rational, TreeCertificate)> {
    if x.is_zero() {
        return Err(Error::ZeroVector("gm_norm_lower"));
    }
    if ctx.is_empty() {
        return Err(Error::EmptyContext);
    }
    let mut best: Option<Candidate> = None;
    // Implicit terminals: the best coordinate within the support cap.
    for (i, q) in x.iter() {
        if i <= ctx.caps().support && !q.is_zero() {
            consider(
                &mut best,
                num_traits::sign::abs(q.clone()),
                0,
                TreeCertificate::terminal(Sign::of(q), i),
            );
        }
    }
    let x_range = x.range().unwrap();
    for (id, r) in ctx.weighted_records() {
        // Skip members that cannot touch x.
        match r.functional.range() {
            Some(range) if range.intersect(&x_range).is_some() => {}
            _ => continue,
        }
        let v = FinVector::pair(&r.functional, x);
        if v.is_zero() {
            continue;
        }
        let can_improve = match &best {
            None => true,
            Some(b) => num_traits::sign::abs(v.clone()) >= b.value,
        };
        if !can_improve {
            continue;
        }
        let mut cert = ctx.to_certificate(id)?;
        if Sign::of(&v) == Sign::Minus {
            cert = flip_root(cert);
        }
        consider(
            &mut best,
            num_traits::sign::abs(v),
            record_depth(ctx, id),
            cert,
        );
    }
    let best = best.ok_or(Error::EmptyContext)?;
    Ok((best.value, best.cert))
}

fn flip_root(cert: TreeCertificate) -> TreeCertificate {
    match cert {
        TreeCertificate::Terminal { sign, index } => TreeCertificate::Terminal {
            sign: sign.flip(),
            index,
        },
        TreeCertificate::Weighted {
            sign,
            weight_index,
            tag,
            restriction,
            children,
        } => TreeCertificate::Weighted {
            sign: sign.flip(),
            weight_index,
            tag,
            restriction,
            children,
        },
    }
}

/// Certified bracket `[lower, enumeratedMax(depth <= D) + 2^{-D} ‖x‖_1]` with
/// caveats recording everything the enumeration is relative to.
pub fn gm_norm_bracket(x: &FinVector, ctx: &KContext, depth_cap: u32) -> Result<NormBracket> {
    let (lower, lower_cert) = gm_norm_lower(x, ctx)?;
    let norm_one = x.norm_one();
    let mut caveats: Vec<String> = Vec::new();
    caveats.push("upper bound is relative to the registered members".into());
    if ctx.schedule().is_conforming() {
        caveats.push("conforming-mode schedule".into());
    } else {
        caveats.push("compact-mode schedule".into());
    }
    match ctx.saturation() {
        crate::norming::Saturation::Closed => {}
        crate::norming::Saturation::Budgeted => {
            caveats.push("context is budget-truncated (non-saturated products)".into())
        }
        crate::norming::Saturation::OnDemand => {
            caveats.push("context was built on demand; no closure guarantees".into())
        }
    }
    let mut enumerated = x
        .iter()
        .filter(|(i, _)| *i <= ctx.caps().support)
        .map(|(_, q)| num_traits::sign::abs(q.clone()))
        .max()
        .unwrap_or_else(Rational::zero);
    let mut skipped_deeper = 0usize;
    let x_range = x.range().unwrap();
    for (id, r) in ctx.weighted_records() {
        match r.functional.range() {
            Some(range) if range.intersect(&x_range).is_some() => {}
            _ => continue,
        }
        if record_depth(ctx, id) > depth_cap {
            skipped_deeper += 1;
            continue;
        }
        let v = num_traits::sign::abs(FinVector::pair(&r.functional, x));
        if v > enumerated {
            enumerated = v;
        }
    }
    if skipped_deeper > 0 {
        caveats.push(format!(
            "{skipped_deeper} members deeper than the depth cap were left to the tail term"
        ));
    }
    let mut upper = enumerated + rational::pow2_inv(depth_cap) * norm_one.clone();
    if upper < lower {
        caveats.push("enumerated upper fell below the certified lower; clamped up".into());
        upper = lower.clone();
    }
    Ok(NormBracket {
        lower,
        lower_cert,
        upper,
        depth_cap,
        norm_one,
        caveats,
    })
}

/// Lifts a certificate for `x` to an equal-value certificate for `Sx`:
/// indices and restrictions double, adjoint powers decrement (a power-0
/// adjoint node becomes a Λ-node over lifted children). Errors when the
/// doubled support would exceed the cap-extended context.
pub fn transfer_certificate_s(cert: &TreeCertificate, ctx: &KContext) -> Result<TreeCertificate> {
    let limit = ctx.caps().support.saturating_mul(2);
    let lifted = lift_cert(cert)?;
    if let Some(max) = max_leaf_index(&lifted) {
        if max > limit {
            return Err(Error::Capacity(format!(
                "lifted certificate reaches index {max}, beyond the extended cap {limit}"
            )));
        }
    }
    Ok(lifted)
}

fn lift_cert(cert: &TreeCertificate) -> Result<TreeCertificate> {
    Ok(match cert {
        TreeCertificate::Terminal { sign, index } => TreeCertificate::Terminal {
            sign: *sign,
            index: index
                .checked_mul(2)
                .ok_or_else(|| Error::Capacity("certificate index overflow".into()))?,
        },
        TreeCertificate::Weighted {
            sign,
            weight_index,
            tag,
            restriction,
            children,
        } => {
            let doubled = restriction.scale(2);
            match tag {
                NodeTag::RSpecial(k) if *k >= 1 => TreeCertificate::Weighted {
                    sign: *sign,
                    weight_index: *weight_index,
                    tag: NodeTag::RSpecial(k - 1),
                    restriction: doubled,
                    children: children.clone(),
                },
                NodeTag::RSpecial(_) => TreeCertificate::Weighted {
                    sign: *sign,
                    weight_index: *weight_index,
                    tag: NodeTag::LambdaSpecial,
                    restriction: doubled,
                    children: children.iter().map(lift_cert).collect::<Result<_>>()?,
                },
                NodeTag::Regular | NodeTag::LambdaSpecial => TreeCertificate::Weighted {
                    sign: *sign,
                    weight_index: *weight_index,
                    tag: *tag,
                    restriction: doubled,
                    children: children.iter().map(lift_cert).collect::<Result<_>>()?,
                },
            }
        }
    })
}

fn max_leaf_index(cert: &TreeCertificate) -> Option<u64> {
    match cert {
        TreeCertificate::Terminal { index, .. } => Some(*index),
        TreeCertificate::Weighted { children, .. } => {
            children.iter().filter_map(max_leaf_index).max()
        }
    }
}

/// Result of mapping a certificate for `Sx` down to one for `x`.
#[derive(Debug, Clone)]
pub enum RTransfer {
    /// The adjoint image is the zero functional (odd-supported source).
    Zero,
    Cert(TreeCertificate),
}

/// Maps a certificate for `Sx` to the certificate of the adjoint image of its
/// functional: `pair(R f, x) = pair(f, Sx)` for every `x`.
pub fn transfer_certificate_r(cert: &TreeCertificate) -> RTransfer {
    match cert {
        TreeCertificate::Terminal { sign, index } => {
            if index % 2 == 0 {
                RTransfer::Cert(TreeCertificate::Terminal {
                    sign: *sign,
                    index: index / 2,
                })
            } else {
                RTransfer::Zero
            }
        }
        TreeCertificate::Weighted {
            sign,
            weight_index,
            tag,
            restriction,
            children,
        } => {
            let Some(image) = spread::r_interval_image(restriction) else {
                return RTransfer::Zero;
            };
            match tag {
                NodeTag::RSpecial(k) => RTransfer::Cert(TreeCertificate::Weighted {
                    sign: *sign,
                    weight_index: *weight_index,
                    tag: NodeTag::RSpecial(k + 1),
                    restriction: image,
                    children: children.clone(),
                }),
                NodeTag::LambdaSpecial => RTransfer::Cert(TreeCertificate::Weighted {
                    sign: *sign,
                    weight_index: *weight_index,
                    tag: NodeTag::RSpecial(1),
                    restriction: image,
                    children: children.clone(),
                }),
                NodeTag::Regular => {
                    let mut mapped = Vec::new();
                    for c in children {
                        match transfer_certificate_r(c) {
                            RTransfer::Cert(m) => mapped.push(m),
                            RTransfer::Zero => {}
                        }
                    }
                    if mapped.is_empty() {
                        return RTransfer::Zero;
                    }
                    RTransfer::Cert(TreeCertificate::Weighted {
                        sign: *sign,
                        weight_index: *weight_index,
                        tag: NodeTag::Regular,
                        restriction: image,
                        children: mapped,
                    })
                }
            }
        }
    }
}

/// Report of one exact isometry comparison.
#[derive(Debug, Clone)]
pub struct IsometryReport {
    pub value_x: Rational,
    pub value_sx: Rational,
    pub cert_x: TreeCertificate,
    pub cert_sx: TreeCertificate,
    pub violations: Vec<String>,
}

impl IsometryReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Asserts `‖x‖ = ‖Sx‖` over the context (the spread image is evaluated over
/// the cap-extension: context members, their canonical lifts, and terminals
/// up to the doubled support cap), with certificates transferred and
/// validated in both directions.
pub fn isometry_check(x: &FinVector, ctx: &KContext) -> Result<IsometryReport> {
    let sched = ctx.schedule();
    let (value_x, cert_x) = gm_norm_lower(x, ctx)?;
    let sx = spread::apply_s(x)?;
    let mut violations = Vec::new();

    // Norm of Sx over the extension: implicit terminals up to the doubled
    // cap, every context member, and the canonical lifts of the members. The
    // lifts evaluate on Sx exactly as their sources do on x, so their whole
    // contribution to the maximum is realized by transferring the argmax
    // certificate; the rest need not be enumerated.
    let mut best: Option<Candidate> = None;
    let doubled_cap = ctx.caps().support.saturating_mul(2);
    for (i, q) in sx.iter() {
        if i <= doubled_cap {
            consider(
                &mut best,
                num_traits::sign::abs(q.clone()),
                0,
                TreeCertificate::terminal(Sign::of(q), i),
            );
        }
    }
    let sx_range = sx.range().unwrap();
    for (id, r) in ctx.weighted_records() {
        let touches = r
            .functional
            .range()
            .is_some_and(|range| range.intersect(&sx_range).is_some());
        if !touches {
            continue;
        }
        let v = FinVector::pair(&r.functional, &sx);
        if v.is_zero() {
            continue;
        }
        let can_improve = best
            .as_ref()
            .is_none_or(|b| num_traits::sign::abs(v.clone()) >= b.value);
        if !can_improve {
            continue;
        }
        let mut cert = ctx.to_certificate(id)?;
        if Sign::of(&v) == Sign::Minus {
            cert = flip_root(cert);
        }
        consider(
            &mut best,
            num_traits::sign::abs(v),
            record_depth(ctx, id),
            cert,
        );
    }
    if let Ok(lifted) = transfer_certificate_s(&cert_x, ctx) {
        let v = FinVector::pair(&lifted.flatten(sched)?, &sx);
        let depth = lifted.depth();
        consider(&mut best, num_traits::sign::abs(v), depth, lifted);
    }
    let best = best.ok_or(Error::EmptyContext)?;
    let (value_sx, cert_sx) = (best.value, best.cert);

    if value_x != value_sx {
        violations.push(format!(
            "norm changed under the spread: {} vs {}",
            rational::to_canonical(&value_x),
            rational::to_canonical(&value_sx)
        ));
    }

    // Upward transfer of the x-certificate.
    match transfer_certificate_s(&cert_x, ctx) {
        Ok(up) => {
            if !up.verify_structure(sched).is_valid() {
                violations.push("lifted certificate is structurally invalid".into());
            }
            match (up.flatten(sched), cert_x.flatten(sched)) {
                (Ok(up_f), Ok(x_f)) => {
                    if spread::apply_r(&up_f) != x_f {
                        violations.push("lifted certificate does not map back under the adjoint".into());
                    }
                    if FinVector::pair(&up_f, &sx) != value_x {
                        violations.push("lifted certificate loses value on the spread image".into());
                    }
                }
                _ => violations.push("certificate flattening failed".into()),
            }
        }
        Err(e) => violations.push(format!("upward transfer failed: {e}")),
    }

    // Downward transfer of the Sx-certificate.
    match transfer_certificate_r(&cert_sx) {
        RTransfer::Zero => {
            if !value_sx.is_zero() {
                violations.push("downward transfer vanished despite a nonzero value".into());
            }
        }
        RTransfer::Cert(down) => {
            match (down.flatten(sched), cert_sx.flatten(sched)) {
                (Ok(down_f), Ok(sx_f)) => {
                    if down_f != spread::apply_r(&sx_f) {
                        violations.push("downward transfer is not the adjoint image".into());
                    }
                    let direct = FinVector::pair(&down_f, x);
                    let through = FinVector::pair(&sx_f, &sx);
                    if direct != through {
                        violations.push("adjointness failed on the transferred pair".into());
                    }
                }
                _ => violations.push("certificate flattening failed".into()),
            }
        }
    }

    Ok(IsometryReport {
        value_x,
        value_sx,
        cert_x,
        cert_sx,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norming::{generate_k, KCaps, Regime};
    use crate::rational::{int, ratio};
    use crate::schedule::ParameterSchedule;
    use crate::vector::IntervalE;

    fn sched() -> ParameterSchedule {
        ParameterSchedule::compact(&[2, 4, 8], &[4, 6, 8]).unwrap()
    }

    fn tsirelson_ctx(support: u64, weight: u64, gens: u32, arity: usize) -> KContext {
        let mut ctx = KContext::new(
            sched(),
            Regime::Tsirelson,
            KCaps::new(gens, support, weight).with_arity(arity).with_budget(2_000_000),
        );
        generate_k(&mut ctx).unwrap();
        ctx
    }

    #[test]
    fn unit_vector_lower_bound() {
        let ctx = tsirelson_ctx(4, 1, 1, 4);
        let e1 = FinVector::unit(1, false);
        let (v, cert) = gm_norm_lower(&e1, &ctx).unwrap();
        assert_eq!(v, int(1));
        assert_eq!(cert, TreeCertificate::terminal(Sign::Plus, 1));
    }

    #[test]
    fn flat_four_matches_mixed_tsirelson_oracle() {
        let ctx = tsirelson_ctx(4, 1, 1, 4);
        let x = FinVector::from_pairs((1..=4).map(|i| (i, int(1))));
        let (v, cert) = gm_norm_lower(&x, &ctx).unwrap();
        assert_eq!(v, int(2));
        assert_eq!(cert.evaluate(&x, &sched()).unwrap(), int(2));
    }

    #[test]
    fn terminals_only_gives_sup_norm() {
        let mut ctx = KContext::new(sched(), Regime::Gm, KCaps::new(0, 8, 2));
        generate_k(&mut ctx).unwrap();
        let x = FinVector::from_pairs([(1, int(2)), (3, int(-5))]);
        let (v, _) = gm_norm_lower(&x, &ctx).unwrap();
        assert_eq!(v, int(5));
    }

    #[test]
    fn lower_equals_mt_norm_on_saturated_small_contexts() {
        // Full saturation over 3 points, weights up to the effective horizon.
        let ctx = tsirelson_ctx(3, 3, 3, 4);
        let s = sched();
        let coords = [int(-2), int(-1), int(0), int(1), int(2)];
        for a in 0..5 {
            for b in 0..5 {
                for c in 0..5 {
                    let x = FinVector::from_pairs(
                        [(1u64, coords[a].clone()), (2, coords[b].clone()), (3, coords[c].clone())]
                            .into_iter()
                            .filter(|(_, q)| !q.is_zero()),
                    );
                    if x.is_zero() {
                        continue;
                    }
                    let (lower, _) = gm_norm_lower(&x, &ctx).unwrap();
                    let mt = crate::mt::mt_norm_exact(&x, &s).unwrap();
                    assert_eq!(lower, mt.value, "on {}", x.to_text());
                }
            }
        }
    }

    #[test]
    fn bracket_examples() {
        let ctx = tsirelson_ctx(4, 1, 1, 4);
        let e1 = FinVector::unit(1, false);
        let b = gm_norm_bracket(&e1, &ctx, 3).unwrap();
        assert_eq!(b.lower, int(1));
        assert_eq!(b.upper, ratio(9, 8));
        assert_eq!(b.upper_clamped(), int(1));
        assert!(b.lower <= b.upper);

        let x = FinVector::from_pairs([(1, int(1)), (2, int(1))]);
        let b = gm_norm_bracket(&x, &ctx, 6).unwrap();
        // width is exactly 2^{-6} * ||x||_1 over the enumerated max
        assert_eq!(b.upper.clone() - b.lower.clone(), ratio(2, 64));
    }

    #[test]
    fn transfer_terminal() {
        let ctx = tsirelson_ctx(4, 1, 1, 4);
        let cert = TreeCertificate::terminal(Sign::Plus, 1);
        let up = transfer_certificate_s(&cert, &ctx).unwrap();
        assert_eq!(up, TreeCertificate::terminal(Sign::Plus, 2));
        let e2 = FinVector::unit(2, false);
        assert_eq!(up.evaluate(&e2, &sched()).unwrap(), int(1));
    }

    #[test]
    fn transfer_regular_round_trip() {
        let ctx = tsirelson_ctx(8, 1, 1, 4);
        let x = FinVector::from_pairs([(1, int(1)), (2, int(1))]);
        let (_, cert) = gm_norm_lower(&x, &ctx).unwrap();
        let up = transfer_certificate_s(&cert, &ctx).unwrap();
        let sx = spread::apply_s(&x).unwrap();
        assert_eq!(
            up.evaluate(&sx, &sched()).unwrap(),
            cert.evaluate(&x, &sched()).unwrap()
        );
        // round trip: R of the lifted flattening is the original functional
        let up_f = up.flatten(&sched()).unwrap();
        assert_eq!(spread::apply_r(&up_f), cert.flatten(&sched()).unwrap());
    }

    #[test]
    fn transfer_r_examples() {
        // terminal on an even index
        match transfer_certificate_r(&TreeCertificate::terminal(Sign::Plus, 2)) {
            RTransfer::Cert(c) => assert_eq!(c, TreeCertificate::terminal(Sign::Plus, 1)),
            RTransfer::Zero => panic!("expected a certificate"),
        }
        // odd-supported source vanishes
        assert!(matches!(
            transfer_certificate_r(&TreeCertificate::terminal(Sign::Minus, 3)),
            RTransfer::Zero
        ));
        // regular node: children map through the interval image
        let cert = TreeCertificate::regular(
            Sign::Plus,
            1,
            IntervalE::new(2, 4),
            vec![
                TreeCertificate::terminal(Sign::Plus, 2),
                TreeCertificate::terminal(Sign::Plus, 4),
            ],
        );
        match transfer_certificate_r(&cert) {
            RTransfer::Cert(c) => {
                let f = c.flatten(&sched()).unwrap();
                assert_eq!(f, spread::apply_r(&cert.flatten(&sched()).unwrap()));
            }
            RTransfer::Zero => panic!("expected a certificate"),
        }
    }

    #[test]
    fn lower_bound_monotone_in_caps() {
        let small = tsirelson_ctx(4, 1, 1, 2);
        let large = tsirelson_ctx(4, 2, 2, 4);
        let x = FinVector::from_pairs((1..=4).map(|i| (i, int(1))));
        let (a, _) = gm_norm_lower(&x, &small).unwrap();
        let (b, _) = gm_norm_lower(&x, &large).unwrap();
        assert!(a <= b);
        // sandwich holds on both
        for (ctx, v) in [(&small, &a), (&large, &b)] {
            let bracket = gm_norm_bracket(&x, ctx, 8).unwrap();
            assert!(x.norm_infty() <= bracket.lower);
            assert!(*v <= bracket.upper);
            assert!(bracket.upper_clamped() <= x.norm_one());
        }
    }

    #[test]
    fn isometry_on_small_vectors() {
        // Budget-truncated on purpose: the exact equality only needs the
        // member set to be closed under the adjoint, which closure completion
        // guarantees regardless of how many products were enumerated.
        let mut ctx = KContext::new(
            sched(),
            Regime::Tsirelson,
            KCaps::new(2, 8, 2).with_arity(3).with_budget(3_000),
        );
        generate_k(&mut ctx).unwrap();
        for x in [
            FinVector::unit(1, false),
            FinVector::from_pairs([(1, int(1)), (2, int(1)), (3, int(1)), (4, int(1))]),
            FinVector::from_pairs([(2, ratio(3, 2)), (5, int(-2))]),
        ] {
            let report = isometry_check(&x, &ctx).unwrap();
            assert!(report.passed(), "{:?}", report.violations);
            assert_eq!(report.value_x, report.value_sx);
        }
    }
}
