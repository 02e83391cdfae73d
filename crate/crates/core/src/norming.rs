//! Generation-capped realizations of the inductive norming set.
//!
//! A [`KContext`] holds deduplicated [`FunctionalRecord`]s, each carrying the
//! formation that produced it, so membership always comes with a
//! reconstructible tree-analysis. Formation rules:
//!
//! * terminals `±e_i^*` (generation 0) — terminals up to the support cap are
//!   *implicitly* members of every context; records are materialized only
//!   when something references them;
//! * regular: `m_w^{-1}(f_1 + … + f_d)` over a block tuple of members. In the
//!   `Gm` regime `w` ranges over even indices only (odd weights are reserved
//!   for special functionals); the `Tsirelson` regime admits every index and
//!   no special rules, which reproduces the canonical mixed Tsirelson set at
//!   small caps;
//! * R-special: `± E m_{2j-1}^{-1} R^k(f_1 + … + f_{2d})` over a registered
//!   j-special sequence;
//! * Λ-special: `± E m_{2j-1}^{-1} (g_1 + … + g_{2d})` over a registered
//!   Λ-j-special sequence.
//!
//! Saturation contract. Full closure of the regular rule is combinatorially
//! explosive (at support cap 16 a single generation of arity-6 products is
//! already ~7·10^5 functionals, and the one after that is out of reach
//! entirely), so [`generate_k`] enumerates regular products deterministically
//! up to an arity cap and a per-generation product budget, then runs a
//! closure completion that makes the member set genuinely closed under sign
//! change, interval restriction and the adjoint image. The closure checks
//! ([`check_k1`], [`check_k2`], [`check_k3`]) assert real set-level closure
//! properties of whatever was generated; `saturation` records whether the
//! product enumeration itself completed or hit its budget.

use std::collections::BTreeMap;

use num_bigint::BigUint;

use crate::certificate::{NodeTag, Sign, TreeCertificate};
use crate::error::{Error, Result};
use crate::schedule::{ParameterSchedule, ScheduleMode};
use crate::sigma::{canonical_serialize_functional, SigmaRegistry};
use crate::spread;
use crate::vector::{is_block_sequence, FinVector, IntervalE};

pub type RecordId = usize;
pub type SeqId = usize;

/// Formation-assigned weight: the functional's weight is `m_index^{-1}`.
/// Equal functionals with different assigned weights are distinct records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct WeightTag {
    pub index: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formation {
    Terminal {
        sign: Sign,
        index: u64,
    },
    Regular {
        weight_index: u64,
        children: Vec<RecordId>,
    },
    RSpecial {
        sign: Sign,
        weight_index: u64,
        k: u32,
        restriction: IntervalE,
        seq: SeqId,
    },
    LambdaSpecial {
        sign: Sign,
        weight_index: u64,
        restriction: IntervalE,
        seq: SeqId,
    },
}

#[derive(Debug, Clone)]
pub struct FunctionalRecord {
    pub functional: FinVector,
    pub formation: Formation,
    pub weight: Option<WeightTag>,
    pub generation: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SequenceKind {
    JSpecial,
    /// k-fold canonical lift of the model sequence.
    LambdaJSpecial { k: u32, model: SeqId },
}

/// A j-special or Λ-j-special sequence of registered members.
#[derive(Debug, Clone)]
pub struct SpecialSequence {
    pub kind: SequenceKind,
    pub j: u64,
    pub members: Vec<RecordId>,
    /// `members[2i+1] ∈ Λ^{ks[i]}(members[2i])` (0-based pairs).
    pub ks: Vec<u32>,
}

impl SpecialSequence {
    /// Weight index of the special functionals this sequence generates.
    pub fn special_weight_index(&self) -> u64 {
        2 * self.j - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Regular formations at even weight indices, special rules enabled.
    Gm,
    /// Regular formations at every weight index, no special rules.
    Tsirelson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Saturation {
    /// Product enumeration completed and closure completion ran.
    Closed,
    /// Product enumeration hit its budget; closure completion still ran.
    Budgeted,
    /// Records registered on demand by builders; no closure guarantees.
    OnDemand,
}

#[derive(Debug, Clone, Copy)]
pub struct KCaps {
    pub generation: u32,
    /// Largest admissible coordinate index.
    pub support: u64,
    pub weight_index: u64,
    /// Desk-scale cap on regular-formation arity (on top of `n_j`).
    pub regular_arity: usize,
    /// Per-generation cap on enumerated regular products.
    pub product_budget: usize,
}

impl KCaps {
    pub fn new(generation: u32, support: u64, weight_index: u64) -> Self {
        KCaps {
            generation,
            support,
            weight_index,
            regular_arity: 3,
            product_budget: 20_000,
        }
    }

    pub fn with_arity(mut self, arity: usize) -> Self {
        self.regular_arity = arity;
        self
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.product_budget = budget;
        self
    }
}

/// A generation/support/weight-capped realization of the norming set.
#[derive(Debug, Clone)]
pub struct KContext {
    schedule: ParameterSchedule,
    regime: Regime,
    caps: KCaps,
    records: Vec<FunctionalRecord>,
    index: BTreeMap<(String, Option<u64>), RecordId>,
    sequences: Vec<SpecialSequence>,
    saturation: Saturation,
    caveats: Vec<String>,
}

fn dedup_key(f: &FinVector, weight: Option<WeightTag>) -> (String, Option<u64>) {
    (canonical_serialize_functional(f), weight.map(|w| w.index))
}

impl KContext {
    pub fn new(schedule: ParameterSchedule, regime: Regime, caps: KCaps) -> Self {
        KContext {
            schedule,
            regime,
            caps,
            records: Vec::new(),
            index: BTreeMap::new(),
            sequences: Vec::new(),
            saturation: Saturation::OnDemand,
            caveats: Vec::new(),
        }
    }

    pub fn schedule(&self) -> &ParameterSchedule {
        &self.schedule
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn caps(&self) -> KCaps {
        self.caps
    }

    pub fn saturation(&self) -> Saturation {
        self.saturation
    }

    pub fn caveats(&self) -> &[String] {
        &self.caveats
    }

    pub fn push_caveat(&mut self, text: impl Into<String>) {
        self.caveats.push(text.into());
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty() && self.caps.support == 0
    }

    pub fn record(&self, id: RecordId) -> &FunctionalRecord {
        &self.records[id]
    }

    pub fn records(&self) -> impl Iterator<Item = (RecordId, &FunctionalRecord)> {
        self.records.iter().enumerate()
    }

    /// Records with a weight tag (everything except terminals).
    pub fn weighted_records(&self) -> impl Iterator<Item = (RecordId, &FunctionalRecord)> {
        self.records().filter(|(_, r)| r.weight.is_some())
    }

    pub fn sequences(&self) -> &[SpecialSequence] {
        &self.sequences
    }

    pub fn sequence(&self, id: SeqId) -> Result<&SpecialSequence> {
        self.sequences
            .get(id)
            .ok_or_else(|| Error::UnknownId(format!("sequence {id}")))
    }

    pub fn contains(&self, f: &FinVector, weight: Option<WeightTag>) -> bool {
        self.index.contains_key(&dedup_key(f, weight))
    }

    pub fn find(&self, f: &FinVector, weight: Option<WeightTag>) -> Option<RecordId> {
        self.index.get(&dedup_key(f, weight)).copied()
    }

    /// Largest coordinate index any record touches (0 for an empty context).
    pub fn max_used_support(&self) -> u64 {
        self.records
            .iter()
            .filter_map(|r| r.functional.max_support())
            .max()
            .unwrap_or(0)
    }

    /// Whether a record satisfies the declared caps. Lift targets created by
    /// the backward closure check may live one generation (and one support
    /// doubling) beyond them and are excluded from closure assertions.
    pub fn within_caps(&self, r: &FunctionalRecord) -> bool {
        r.generation <= self.caps.generation
            && r.functional
                .max_support()
                .is_some_and(|m| m <= self.caps.support)
            && r.weight.is_none_or(|w| w.index <= self.caps.weight_index)
    }

    /// Reconstructs the functional a formation denotes, validating the
    /// formation along the way. Single source of truth used both at
    /// registration and by the K2 check.
    pub fn reconstruct(&self, formation: &Formation) -> Result<FinVector> {
        match formation {
            Formation::Terminal { sign, index } => {
                if *index == 0 {
                    return Err(Error::Parse("terminal index 0".into()));
                }
                Ok(FinVector::unit(*index, *sign == Sign::Minus))
            }
            Formation::Regular {
                weight_index,
                children,
            } => {
                if children.is_empty() {
                    return Err(Error::Parse("regular formation with no children".into()));
                }
                if self.regime == Regime::Gm && weight_index % 2 != 0 {
                    return Err(Error::Parse(format!(
                        "regular formation at odd weight index {weight_index}"
                    )));
                }
                if !self.schedule.arity_allows(*weight_index, children.len())? {
                    return Err(Error::Capacity(format!(
                        "regular arity {} exceeds n_{}",
                        children.len(),
                        weight_index
                    )));
                }
                let members: Vec<&FinVector> = children
                    .iter()
                    .map(|id| {
                        self.records
                            .get(*id)
                            .map(|r| &r.functional)
                            .ok_or_else(|| Error::UnknownId(format!("record {id}")))
                    })
                    .collect::<Result<_>>()?;
                if !is_block_sequence(&members) {
                    return Err(Error::NonBlock("regular formation children".into()));
                }
                let mut sum = FinVector::zero();
                for m in &members {
                    sum.add_assign(m);
                }
                Ok(sum.scale(&self.schedule.weight(*weight_index)?))
            }
            Formation::RSpecial {
                sign,
                weight_index,
                k,
                restriction,
                seq,
            } => {
                let sequence = self.sequence(*seq)?;
                if sequence.kind != SequenceKind::JSpecial {
                    return Err(Error::Parse(
                        "R-special formation must reference a j-special sequence".into(),
                    ));
                }
                if *weight_index != sequence.special_weight_index() {
                    return Err(Error::Parse(format!(
                        "R-special weight index {weight_index} does not match sequence j={}",
                        sequence.j
                    )));
                }
                let sum = self.sequence_sum(*seq)?;
                let image = spread::apply_r_pow(&sum, *k);
                Ok(image
                    .restrict(restriction)
                    .scale(&(self.schedule.weight(*weight_index)? * sign.factor())))
            }
            Formation::LambdaSpecial {
                sign,
                weight_index,
                restriction,
                seq,
            } => {
                let sequence = self.sequence(*seq)?;
                if *weight_index != sequence.special_weight_index() {
                    return Err(Error::Parse(format!(
                        "Λ-special weight index {weight_index} does not match sequence j={}",
                        sequence.j
                    )));
                }
                let sum = self.sequence_sum(*seq)?;
                Ok(sum
                    .restrict(restriction)
                    .scale(&(self.schedule.weight(*weight_index)? * sign.factor())))
            }
        }
    }

    pub fn sequence_sum(&self, seq: SeqId) -> Result<FinVector> {
        let sequence = self.sequence(seq)?;
        let mut sum = FinVector::zero();
        for id in &sequence.members {
            let r = self
                .records
                .get(*id)
                .ok_or_else(|| Error::UnknownId(format!("record {id}")))?;
            sum.add_assign(&r.functional);
        }
        Ok(sum)
    }

    fn formation_weight(&self, formation: &Formation) -> Option<WeightTag> {
        match formation {
            Formation::Terminal { .. } => None,
            Formation::Regular { weight_index, .. }
            | Formation::RSpecial { weight_index, .. }
            | Formation::LambdaSpecial { weight_index, .. } => Some(WeightTag {
                index: *weight_index,
            }),
        }
    }

    fn formation_generation(&self, formation: &Formation) -> u32 {
        match formation {
            Formation::Terminal { .. } => 0,
            Formation::Regular { children, .. } => {
                1 + children
                    .iter()
                    .map(|id| self.records[*id].generation)
                    .max()
                    .unwrap_or(0)
            }
            Formation::RSpecial { seq, .. } | Formation::LambdaSpecial { seq, .. } => {
                1 + self.sequences[*seq]
                    .members
                    .iter()
                    .map(|id| self.records[*id].generation)
                    .max()
                    .unwrap_or(0)
            }
        }
    }

    /// Registers the functional a formation denotes. Dedup key is
    /// (functional, assigned weight); an existing record wins. The zero
    /// functional is rejected. `extended` admits one doubling of the support
    /// cap and one extra generation — the room the backward closure lift and
    /// the isometry transfer are allowed to use.
    pub fn register(&mut self, formation: Formation, extended: bool) -> Result<RecordId> {
        let functional = self.reconstruct(&formation)?;
        if functional.is_zero() {
            return Err(Error::ZeroVector(
                "zero functional is not stored in the norming set",
            ));
        }
        let weight = self.formation_weight(&formation);
        let key = dedup_key(&functional, weight);
        if let Some(id) = self.index.get(&key) {
            return Ok(*id);
        }
        let support_cap = if extended {
            self.caps.support.saturating_mul(2)
        } else {
            self.caps.support
        };
        let max_supp = functional.max_support().unwrap();
        if max_supp > support_cap {
            return Err(Error::Capacity(format!(
                "support {max_supp} exceeds cap {support_cap}"
            )));
        }
        if let Some(w) = weight {
            if w.index > self.caps.weight_index {
                return Err(Error::Capacity(format!(
                    "weight index {} exceeds cap {}",
                    w.index, self.caps.weight_index
                )));
            }
        }
        let generation = self.formation_generation(&formation);
        let generation_cap = self.caps.generation + u32::from(extended);
        if generation > generation_cap {
            return Err(Error::Capacity(format!(
                "generation {generation} exceeds cap {generation_cap}"
            )));
        }
        let id = self.records.len();
        self.records.push(FunctionalRecord {
            functional,
            formation,
            weight,
            generation,
        });
        self.index.insert(key, id);
        Ok(id)
    }

    /// Registers a terminal `±e_i^*`.
    pub fn register_terminal(&mut self, index: u64, negative: bool) -> Result<RecordId> {
        self.register(
            Formation::Terminal {
                sign: if negative { Sign::Minus } else { Sign::Plus },
                index,
            },
            false,
        )
    }

    /// Inserts a record without reconstruction or cap checks. Exists so that
    /// validation suites can plant corrupt members as negative controls.
    pub fn insert_record_unchecked(&mut self, record: FunctionalRecord) -> RecordId {
        let key = dedup_key(&record.functional, record.weight);
        let id = self.records.len();
        self.records.push(record);
        self.index.insert(key, id);
        id
    }

    /// Removes a record from the dedup index (the slot stays, so ids remain
    /// stable); membership checks stop seeing it. Negative-control helper.
    pub fn unindex_record(&mut self, id: RecordId) {
        let r = &self.records[id];
        self.index.remove(&dedup_key(&r.functional, r.weight));
    }

    /// Registers a special sequence after validating the member ids.
    pub fn register_sequence(&mut self, sequence: SpecialSequence) -> Result<SeqId> {
        for id in &sequence.members {
            if *id >= self.records.len() {
                return Err(Error::UnknownId(format!("record {id}")));
            }
        }
        if sequence.members.len() % 2 != 0 || sequence.members.is_empty() {
            return Err(Error::Parse(
                "special sequence must have even positive length".into(),
            ));
        }
        if sequence.ks.len() != sequence.members.len() / 2 {
            return Err(Error::Parse("one k_i per member pair required".into()));
        }
        let id = self.sequences.len();
        self.sequences.push(sequence);
        Ok(id)
    }

    /// The tree-analysis certificate of a record.
    pub fn to_certificate(&self, id: RecordId) -> Result<TreeCertificate> {
        let r = self
            .records
            .get(id)
            .ok_or_else(|| Error::UnknownId(format!("record {id}")))?;
        match &r.formation {
            Formation::Terminal { sign, index } => Ok(TreeCertificate::terminal(*sign, *index)),
            Formation::Regular {
                weight_index,
                children,
            } => {
                let child_certs = children
                    .iter()
                    .map(|c| self.to_certificate(*c))
                    .collect::<Result<Vec<_>>>()?;
                let first = self.records[children[0]].functional.min_support().unwrap();
                let last = self.records[*children.last().unwrap()]
                    .functional
                    .max_support()
                    .unwrap();
                Ok(TreeCertificate::regular(
                    Sign::Plus,
                    *weight_index,
                    IntervalE::new(first, last),
                    child_certs,
                ))
            }
            Formation::RSpecial {
                sign,
                weight_index,
                k,
                restriction,
                seq,
            } => Ok(TreeCertificate::Weighted {
                sign: *sign,
                weight_index: *weight_index,
                tag: NodeTag::RSpecial(*k),
                restriction: *restriction,
                children: self.sequence_certificates(*seq)?,
            }),
            Formation::LambdaSpecial {
                sign,
                weight_index,
                restriction,
                seq,
            } => Ok(TreeCertificate::Weighted {
                sign: *sign,
                weight_index: *weight_index,
                tag: NodeTag::LambdaSpecial,
                restriction: *restriction,
                children: self.sequence_certificates(*seq)?,
            }),
        }
    }

    fn sequence_certificates(&self, seq: SeqId) -> Result<Vec<TreeCertificate>> {
        self.sequence(seq)?
            .members
            .clone()
            .iter()
            .map(|id| self.to_certificate(*id))
            .collect()
    }

    /// The canonical lift of a record: every index doubled, formation mapped
    /// per the constructive backward-closure recipe (regular nodes lift
    /// childwise, adjoint powers decrement, Λ-special sequences move one
    /// modelling step up). With `extended` the result may use one doubling of
    /// the support cap and one extra generation.
    pub fn lift_record(&mut self, id: RecordId, extended: bool) -> Result<RecordId> {
        let formation = self.records[id].formation.clone();
        match formation {
            Formation::Terminal { sign, index } => {
                let doubled = index
                    .checked_mul(2)
                    .ok_or_else(|| Error::Capacity("terminal index overflow".into()))?;
                self.register(
                    Formation::Terminal {
                        sign,
                        index: doubled,
                    },
                    extended,
                )
            }
            Formation::Regular {
                weight_index,
                children,
            } => {
                let lifted = children
                    .iter()
                    .map(|c| self.lift_record(*c, extended))
                    .collect::<Result<Vec<_>>>()?;
                self.register(
                    Formation::Regular {
                        weight_index,
                        children: lifted,
                    },
                    extended,
                )
            }
            Formation::RSpecial {
                sign,
                weight_index,
                k,
                restriction,
                seq,
            } => {
                let doubled = restriction.scale(2);
                if k >= 1 {
                    self.register(
                        Formation::RSpecial {
                            sign,
                            weight_index,
                            k: k - 1,
                            restriction: doubled,
                            seq,
                        },
                        extended,
                    )
                } else {
                    let lifted_seq = self.lifted_sequence(seq, extended)?;
                    self.register(
                        Formation::LambdaSpecial {
                            sign,
                            weight_index,
                            restriction: doubled,
                            seq: lifted_seq,
                        },
                        extended,
                    )
                }
            }
            Formation::LambdaSpecial {
                sign,
                weight_index,
                restriction,
                seq,
            } => {
                let lifted_seq = self.lifted_sequence(seq, extended)?;
                self.register(
                    Formation::LambdaSpecial {
                        sign,
                        weight_index,
                        restriction: restriction.scale(2),
                        seq: lifted_seq,
                    },
                    extended,
                )
            }
        }
    }

    /// The k-fold canonical lift in one step for terminals and regular
    /// formations (no intermediate records); special formations fall back to
    /// repeated single lifts.
    pub fn lift_record_pow(&mut self, id: RecordId, k: u32, extended: bool) -> Result<RecordId> {
        if k == 0 {
            return Ok(id);
        }
        let formation = self.records[id].formation.clone();
        match formation {
            Formation::Terminal { sign, index } => {
                if k >= 64 || index > (u64::MAX >> k) {
                    return Err(Error::Capacity("terminal index overflow".into()));
                }
                self.register(
                    Formation::Terminal {
                        sign,
                        index: index << k,
                    },
                    extended,
                )
            }
            Formation::Regular {
                weight_index,
                children,
            } => {
                let lifted = children
                    .iter()
                    .map(|c| self.lift_record_pow(*c, k, extended))
                    .collect::<Result<Vec<_>>>()?;
                self.register(
                    Formation::Regular {
                        weight_index,
                        children: lifted,
                    },
                    extended,
                )
            }
            _ => {
                let mut out = id;
                for _ in 0..k {
                    out = self.lift_record(out, extended)?;
                }
                Ok(out)
            }
        }
    }

    /// The canonical lift of a whole sequence: members lifted, modelling depth
    /// increased by one. Reuses an existing equal sequence when present.
    pub fn lifted_sequence(&mut self, seq: SeqId, extended: bool) -> Result<SeqId> {
        let source = self.sequence(seq)?.clone();
        let members = source
            .members
            .iter()
            .map(|id| self.lift_record(*id, extended))
            .collect::<Result<Vec<_>>>()?;
        let kind = match source.kind {
            SequenceKind::JSpecial => SequenceKind::LambdaJSpecial { k: 1, model: seq },
            SequenceKind::LambdaJSpecial { k, model } => {
                SequenceKind::LambdaJSpecial { k: k + 1, model }
            }
        };
        if let Some(existing) = self
            .sequences
            .iter()
            .position(|s| s.kind == kind && s.j == source.j && s.members == members && s.ks == source.ks)
        {
            return Ok(existing);
        }
        self.register_sequence(SpecialSequence {
            kind,
            j: source.j,
            members,
            ks: source.ks,
        })
    }

    /// The adjoint image of a record as a registered member; `None` when the
    /// image is the zero functional.
    pub fn r_image_record(&mut self, id: RecordId) -> Result<Option<RecordId>> {
        let formation = self.records[id].formation.clone();
        match formation {
            Formation::Terminal { sign, index } => {
                if index % 2 == 0 {
                    Ok(Some(self.register(
                        Formation::Terminal {
                            sign,
                            index: index / 2,
                        },
                        false,
                    )?))
                } else {
                    Ok(None)
                }
            }
            Formation::Regular {
                weight_index,
                children,
            } => {
                let mut images = Vec::new();
                for c in children {
                    if let Some(img) = self.r_image_record(c)? {
                        images.push(img);
                    }
                }
                if images.is_empty() {
                    return Ok(None);
                }
                Ok(Some(self.register(
                    Formation::Regular {
                        weight_index,
                        children: images,
                    },
                    false,
                )?))
            }
            Formation::RSpecial {
                sign,
                weight_index,
                k,
                restriction,
                seq,
            } => {
                let Some(image_interval) = spread::r_interval_image(&restriction) else {
                    return Ok(None);
                };
                let target = Formation::RSpecial {
                    sign,
                    weight_index,
                    k: k + 1,
                    restriction: image_interval,
                    seq,
                };
                if self.reconstruct(&target)?.is_zero() {
                    return Ok(None);
                }
                Ok(Some(self.register(target, false)?))
            }
            Formation::LambdaSpecial {
                sign,
                weight_index,
                restriction,
                seq,
            } => {
                let Some(image_interval) = spread::r_interval_image(&restriction) else {
                    return Ok(None);
                };
                // R of a Λ-special over a k-modeled sequence: for k >= 2 the
                // member lifts drop one level; for k = 1 the members return to
                // the model, so the image is the model's plain special
                // functional (adjoint power 0); a 0-modeled sequence is the
                // model itself and the image is its power-1 R-special.
                let kind = self.sequence(seq)?.kind.clone();
                let target = match kind {
                    SequenceKind::JSpecial => Formation::RSpecial {
                        sign,
                        weight_index,
                        k: 1,
                        restriction: image_interval,
                        seq,
                    },
                    SequenceKind::LambdaJSpecial { k: 1, model } => Formation::RSpecial {
                        sign,
                        weight_index,
                        k: 0,
                        restriction: image_interval,
                        seq: model,
                    },
                    SequenceKind::LambdaJSpecial { .. } => {
                        let lowered = self.lowered_sequence(seq)?;
                        Formation::LambdaSpecial {
                            sign,
                            weight_index,
                            restriction: image_interval,
                            seq: lowered,
                        }
                    }
                };
                if self.reconstruct(&target)?.is_zero() {
                    return Ok(None);
                }
                Ok(Some(self.register(target, false)?))
            }
        }
    }

    fn lowered_sequence(&mut self, seq: SeqId) -> Result<SeqId> {
        let source = self.sequence(seq)?.clone();
        let SequenceKind::LambdaJSpecial { k, model } = source.kind else {
            return Err(Error::Parse("cannot lower a j-special sequence".into()));
        };
        let mut members = Vec::new();
        for id in &source.members {
            let img = self
                .r_image_record(*id)?
                .ok_or_else(|| Error::Parse("lowered sequence member vanished".into()))?;
            members.push(img);
        }
        let kind = SequenceKind::LambdaJSpecial { k: k - 1, model };
        if let Some(existing) = self
            .sequences
            .iter()
            .position(|s| s.kind == kind && s.j == source.j && s.members == members && s.ks == source.ks)
        {
            return Ok(existing);
        }
        self.register_sequence(SpecialSequence {
            kind,
            j: source.j,
            members,
            ks: source.ks,
        })
    }

    /// The negation of a record as a registered member.
    pub fn negate_record(&mut self, id: RecordId) -> Result<RecordId> {
        let formation = self.records[id].formation.clone();
        let negated = match formation {
            Formation::Terminal { sign, index } => Formation::Terminal {
                sign: sign.flip(),
                index,
            },
            Formation::Regular {
                weight_index,
                children,
            } => {
                let neg_children = children
                    .iter()
                    .map(|c| self.negate_record(*c))
                    .collect::<Result<Vec<_>>>()?;
                Formation::Regular {
                    weight_index,
                    children: neg_children,
                }
            }
            Formation::RSpecial {
                sign,
                weight_index,
                k,
                restriction,
                seq,
            } => Formation::RSpecial {
                sign: sign.flip(),
                weight_index,
                k,
                restriction,
                seq,
            },
            Formation::LambdaSpecial {
                sign,
                weight_index,
                restriction,
                seq,
            } => Formation::LambdaSpecial {
                sign: sign.flip(),
                weight_index,
                restriction,
                seq,
            },
        };
        self.register(negated, false)
    }

    /// The restriction of a record to `e` as a registered member; `None` when
    /// it vanishes.
    pub fn restrict_record(&mut self, id: RecordId, e: &IntervalE) -> Result<Option<RecordId>> {
        let record = &self.records[id];
        if record.functional.restrict(e).is_zero() {
            return Ok(None);
        }
        let formation = record.formation.clone();
        let restricted = match formation {
            Formation::Terminal { .. } => return Ok(Some(id)),
            Formation::Regular {
                weight_index,
                children,
            } => {
                let mut kept = Vec::new();
                for c in children {
                    if let Some(rc) = self.restrict_record(c, e)? {
                        kept.push(rc);
                    }
                }
                Formation::Regular {
                    weight_index,
                    children: kept,
                }
            }
            Formation::RSpecial {
                sign,
                weight_index,
                k,
                restriction,
                seq,
            } => {
                let Some(tightened) = restriction.intersect(e) else {
                    return Ok(None);
                };
                Formation::RSpecial {
                    sign,
                    weight_index,
                    k,
                    restriction: tightened,
                    seq,
                }
            }
            Formation::LambdaSpecial {
                sign,
                weight_index,
                restriction,
                seq,
            } => {
                let Some(tightened) = restriction.intersect(e) else {
                    return Ok(None);
                };
                Formation::LambdaSpecial {
                    sign,
                    weight_index,
                    restriction: tightened,
                    seq,
                }
            }
        };
        Ok(Some(self.register(restricted, false)?))
    }

    /// Closes the member set under sign change, interval restriction and the
    /// adjoint image (single growing pass to the fixpoint).
    pub fn complete_closure(&mut self) -> Result<()> {
        let mut i = 0;
        while i < self.records.len() {
            self.negate_record(i)?;
            self.r_image_record(i)?;
            let points: Vec<u64> = self.records[i].functional.support().collect();
            for a in 0..points.len() {
                for b in a..points.len() {
                    if a == 0 && b == points.len() - 1 {
                        continue;
                    }
                    let e = IntervalE::new(points[a], points[b]);
                    self.restrict_record(i, &e)?;
                }
            }
            i += 1;
        }
        Ok(())
    }

    pub fn set_saturation(&mut self, s: Saturation) {
        self.saturation = s;
    }
}

/// Runs the generation loop: terminals, then per generation the regular rule
/// (deterministic block-tuple enumeration up to the arity cap and product
/// budget) and the special rules over registered sequences, followed by
/// closure completion.
pub fn generate_k(ctx: &mut KContext) -> Result<()> {
    const MAX_EAGER_TERMINALS: u64 = 4096;
    let caps = ctx.caps;
    if caps.support > MAX_EAGER_TERMINALS {
        return Err(Error::Capacity(format!(
            "generate_k materializes terminals eagerly; support cap {} exceeds {}",
            caps.support, MAX_EAGER_TERMINALS
        )));
    }
    for i in 1..=caps.support {
        ctx.register_terminal(i, false)?;
        ctx.register_terminal(i, true)?;
    }
    let mut saturated = true;
    for generation in 1..=caps.generation {
        let mut pool: Vec<RecordId> = ctx
            .records()
            .filter(|(_, r)| r.generation < generation)
            .map(|(id, _)| id)
            .collect();
        // Deterministic order: by support window, then canonical form.
        pool.sort_by_key(|id| {
            let r = ctx.record(*id);
            (
                r.functional.min_support().unwrap_or(0),
                r.functional.max_support().unwrap_or(0),
                canonical_serialize_functional(&r.functional),
            )
        });
        let mut budget = caps.product_budget;
        for w in admissible_regular_weights(ctx) {
            let arity_cap = regular_arity_cap(ctx, w)?;
            if arity_cap == 0 {
                continue;
            }
            if !enumerate_products(ctx, &pool, w, arity_cap, &mut budget)? {
                saturated = false;
                break;
            }
        }
        if ctx.regime == Regime::Gm {
            apply_special_rules(ctx)?;
        }
    }
    ctx.complete_closure()?;
    ctx.set_saturation(if saturated {
        Saturation::Closed
    } else {
        Saturation::Budgeted
    });
    if !saturated {
        ctx.push_caveat(
            "regular-rule enumeration hit its product budget; member set is closure-complete but not product-saturated",
        );
    }
    Ok(())
}

fn admissible_regular_weights(ctx: &KContext) -> Vec<u64> {
    let (start, step) = match ctx.regime {
        Regime::Gm => (2u64, 2u64),
        Regime::Tsirelson => (1, 1),
    };
    (0..)
        .map(|t| start + t * step)
        .take_while(|w| *w <= ctx.caps.weight_index)
        .collect()
}

fn regular_arity_cap(ctx: &KContext, w: u64) -> Result<usize> {
    use num_traits::ToPrimitive;
    let n = ctx.schedule.n(w)?;
    let cap = ctx.caps.regular_arity;
    Ok(if BigUint::from(cap as u64) <= n {
        cap
    } else {
        n.to_usize().unwrap_or(cap)
    })
}

/// Enumerates block tuples over `pool` and registers their regular products
/// at weight `w`. Returns false when the budget ran out.
fn enumerate_products(
    ctx: &mut KContext,
    pool: &[RecordId],
    w: u64,
    arity_cap: usize,
    budget: &mut usize,
) -> Result<bool> {
    let mut stack: Vec<(Vec<RecordId>, u64)> = pool
        .iter()
        .rev()
        .map(|id| {
            (
                vec![*id],
                ctx.record(*id).functional.max_support().unwrap_or(0),
            )
        })
        .collect();
    while let Some((chain, max_supp)) = stack.pop() {
        if *budget == 0 {
            return Ok(false);
        }
        *budget -= 1;
        ctx.register(
            Formation::Regular {
                weight_index: w,
                children: chain.clone(),
            },
            false,
        )?;
        if chain.len() < arity_cap {
            for id in pool.iter().rev() {
                let r = ctx.record(*id);
                if r.functional.min_support().unwrap_or(0) > max_supp {
                    let mut next = chain.clone();
                    next.push(*id);
                    let next_max = r.functional.max_support().unwrap_or(0);
                    stack.push((next, next_max));
                }
            }
        }
    }
    Ok(true)
}

/// Applies the R-special and Λ-special rules to every registered sequence:
/// the full-range, positive-sign representative for every admissible adjoint
/// power (sign and interval variants come from closure completion).
fn apply_special_rules(ctx: &mut KContext) -> Result<()> {
    for seq_id in 0..ctx.sequences.len() {
        let (kind, w) = {
            let s = &ctx.sequences[seq_id];
            (s.kind.clone(), s.special_weight_index())
        };
        if w > ctx.caps.weight_index {
            continue;
        }
        let sum = ctx.sequence_sum(seq_id)?;
        let Some(range) = sum.range() else { continue };
        match kind {
            SequenceKind::JSpecial => {
                let mut k = 0u32;
                loop {
                    let image = spread::apply_r_pow(&sum, k);
                    if image.is_zero() {
                        break;
                    }
                    ctx.register(
                        Formation::RSpecial {
                            sign: Sign::Plus,
                            weight_index: w,
                            k,
                            restriction: image.range().unwrap(),
                            seq: seq_id,
                        },
                        false,
                    )?;
                    k += 1;
                }
            }
            SequenceKind::LambdaJSpecial { .. } => {
                ctx.register(
                    Formation::LambdaSpecial {
                        sign: Sign::Plus,
                        weight_index: w,
                        restriction: range,
                        seq: seq_id,
                    },
                    false,
                )?;
            }
        }
    }
    Ok(())
}

/// Outcome of one closure check.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: &'static str,
    pub checked: usize,
    pub violations: Vec<String>,
    pub caveats: Vec<String>,
}

impl CheckReport {
    fn new(name: &'static str) -> Self {
        CheckReport {
            name,
            checked: 0,
            violations: Vec::new(),
            caveats: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Symmetry and interval-restriction closure of the member set.
pub fn check_k1(ctx: &KContext) -> CheckReport {
    let mut report = CheckReport::new("K1");
    for (_, r) in ctx.records() {
        if !ctx.within_caps(r) {
            continue;
        }
        report.checked += 1;
        if !ctx.contains(&r.functional.negate(), r.weight) {
            report.violations.push(format!(
                "negation missing for {}",
                canonical_serialize_functional(&r.functional)
            ));
        }
        let points: Vec<u64> = r.functional.support().collect();
        for a in 0..points.len() {
            for b in a..points.len() {
                let e = IntervalE::new(points[a], points[b]);
                let restricted = r.functional.restrict(&e);
                if restricted.is_zero() || restricted == r.functional {
                    continue;
                }
                if !ctx.contains(&restricted, r.weight) {
                    report.violations.push(format!(
                        "restriction to {e} missing for {}",
                        canonical_serialize_functional(&r.functional)
                    ));
                }
            }
        }
    }
    report
}

/// Every record's formation reconstructs its functional exactly and its
/// tree-analysis certificate flattens back to the same functional.
pub fn check_k2(ctx: &KContext) -> CheckReport {
    let mut report = CheckReport::new("K2");
    for (id, r) in ctx.records() {
        if !ctx.within_caps(r) {
            continue;
        }
        report.checked += 1;
        match ctx.reconstruct(&r.formation) {
            Ok(f) => {
                if f != r.functional {
                    report.violations.push(format!(
                        "formation reconstructs {} instead of {}",
                        canonical_serialize_functional(&f),
                        canonical_serialize_functional(&r.functional)
                    ));
                    continue;
                }
            }
            Err(e) => {
                report.violations.push(format!(
                    "formation invalid for {}: {e}",
                    canonical_serialize_functional(&r.functional)
                ));
                continue;
            }
        }
        match ctx.to_certificate(id) {
            Ok(cert) => match cert.flatten(ctx.schedule()) {
                Ok(flat) => {
                    if flat != r.functional {
                        report.violations.push(format!(
                            "certificate flattens to {} instead of {}",
                            canonical_serialize_functional(&flat),
                            canonical_serialize_functional(&r.functional)
                        ));
                    }
                }
                Err(e) => report
                    .violations
                    .push(format!("certificate does not flatten: {e}")),
            },
            Err(e) => report.violations.push(format!("no certificate: {e}")),
        }
    }
    report
}

/// Adjoint closure, both inclusions. Forward: the adjoint image of every
/// member is a member (or the zero functional, which is trivially present).
/// Backward: the constructive lift of every member lands in the cap-extended
/// context and maps back exactly under the adjoint.
pub fn check_k3(ctx: &KContext) -> CheckReport {
    let mut report = CheckReport::new("K3");
    for (_, r) in ctx.records() {
        if !ctx.within_caps(r) {
            continue;
        }
        report.checked += 1;
        let image = spread::apply_r(&r.functional);
        if !image.is_zero() && !ctx.contains(&image, r.weight) {
            report.violations.push(format!(
                "forward: adjoint image {} of {} is not a member",
                canonical_serialize_functional(&image),
                canonical_serialize_functional(&r.functional)
            ));
        }
    }
    // Backward inclusion works in a scratch copy so the lift registrations do
    // not grow the context under inspection.
    let mut work = ctx.clone();
    let snapshot: Vec<RecordId> = ctx
        .records()
        .filter(|(_, r)| ctx.within_caps(r))
        .map(|(id, _)| id)
        .collect();
    for id in snapshot {
        let functional = ctx.record(id).functional.clone();
        match work.lift_record(id, true) {
            Ok(lift_id) => {
                let lifted = work.record(lift_id).functional.clone();
                let mapped_back = spread::apply_r(&lifted);
                if mapped_back != functional {
                    report.violations.push(format!(
                        "backward: lift of {} maps to {} under the adjoint",
                        canonical_serialize_functional(&functional),
                        canonical_serialize_functional(&mapped_back)
                    ));
                }
            }
            Err(e) => report.violations.push(format!(
                "backward: no constructive lift for {}: {e}",
                canonical_serialize_functional(&functional)
            )),
        }
    }
    report
}

/// The tree-like property of the registered special-sequence family: once two
/// sequences first disagree (at pair index r, comparing odd-position members),
/// the later weights of one are disjoint from the stated index sets of the
/// other. In compact mode violations are reported as caveats (the growth
/// bound that forces the property is dropped there); in conforming mode they
/// are failures.
pub fn check_tree_property(ctx: &KContext) -> CheckReport {
    let mut report = CheckReport::new("tree-property");
    let seqs = ctx.sequences();
    for a in 0..seqs.len() {
        for b in 0..seqs.len() {
            if a == b {
                continue;
            }
            report.checked += 1;
            let fa = &seqs[a]; // plays (f_i)
            let hb = &seqs[b]; // plays (h_s)
            let pairs = fa.members.len().min(hb.members.len()) / 2;
            let mut first_disagreement = None;
            for i in 0..pairs {
                if member_key(ctx, fa.members[2 * i]) != member_key(ctx, hb.members[2 * i]) {
                    first_disagreement = Some(i + 1);
                    break;
                }
            }
            let Some(r) = first_disagreement else { continue };
            let fa_weights: Vec<u64> = fa
                .members
                .iter()
                .map(|id| ctx.record(*id).weight.map(|w| w.index).unwrap_or(0))
                .collect();
            let hb_weights: Vec<u64> = hb
                .members
                .iter()
                .map(|id| ctx.record(*id).weight.map(|w| w.index).unwrap_or(0))
                .collect();
            let compact = ctx.schedule().mode() == ScheduleMode::Compact;
            let mut clash = |s: usize, i: usize| {
                if hb_weights[s - 1] == fa_weights[i - 1] {
                    let msg = format!(
                        "sequences {a}/{b} disagree at pair {r} but share weight m_{} (positions {s}/{i})",
                        hb_weights[s - 1]
                    );
                    if compact {
                        report.caveats.push(msg);
                    } else {
                        report.violations.push(msg);
                    }
                }
            };
            for s in (2 * r + 1)..=hb_weights.len() {
                for i in 1..=fa_weights.len() {
                    clash(s, i);
                }
            }
            for s in [2 * r - 1, 2 * r] {
                if s <= hb_weights.len() {
                    for i in (2 * r + 1)..=fa_weights.len() {
                        clash(s, i);
                    }
                }
            }
        }
    }
    report
}

fn member_key(ctx: &KContext, id: RecordId) -> (String, Option<u64>) {
    let r = ctx.record(id);
    dedup_key(&r.functional, r.weight)
}

/// Validation report for a special sequence.
#[derive(Debug, Clone)]
pub struct SpecialCheck {
    pub violations: Vec<String>,
    pub caveats: Vec<String>,
}

impl SpecialCheck {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the defining clauses of a special sequence: the seed-weight clause
/// (size bound enforced in conforming mode, caveat in compact), the coding
/// clause for odd positions, and the lift clause with equal weights for even
/// positions. For Λ-sequences the model-relative clauses are checked too.
pub fn verify_special(
    ctx: &KContext,
    registry: &SigmaRegistry,
    seq_id: SeqId,
) -> Result<SpecialCheck> {
    let seq = ctx.sequence(seq_id)?;
    let mut out = SpecialCheck {
        violations: Vec::new(),
        caveats: Vec::new(),
    };
    let members: Vec<&FunctionalRecord> = seq.members.iter().map(|id| ctx.record(*id)).collect();
    let functionals: Vec<&FinVector> = members.iter().map(|r| &r.functional).collect();
    if !is_block_sequence(&functionals) {
        out.violations.push("members are not block".into());
    }
    let d = members.len() / 2;
    if BigUint::from(2 * d as u64) > ctx.schedule().n(seq.special_weight_index())? {
        out.violations.push(format!(
            "length {} exceeds n_{}",
            2 * d,
            seq.special_weight_index()
        ));
    }
    let (model_members, model_k) = match &seq.kind {
        SequenceKind::JSpecial => (None, 0),
        SequenceKind::LambdaJSpecial { k, model } => {
            (Some(ctx.sequence(*model)?.members.clone()), *k)
        }
    };
    for (pos, record) in members.iter().enumerate() {
        let Some(tag) = record.weight else {
            out.violations.push(format!("member {} has no weight", pos + 1));
            continue;
        };
        if pos == 0 {
            if tag.index % 4 != 2 {
                out.violations.push(format!(
                    "seed weight index {} is not of the form 4l-2",
                    tag.index
                ));
            }
            let bound =
                BigUint::from(9u64) * ctx.schedule().n(seq.special_weight_index())?.pow(2);
            match ctx.schedule().m(tag.index) {
                Ok(m) => {
                    if m <= bound {
                        let msg = format!(
                            "seed weight m_{} = {m} does not exceed 9 n_{}^2 = {bound}",
                            tag.index,
                            seq.special_weight_index()
                        );
                        if ctx.schedule().mode() == ScheduleMode::Compact {
                            out.caveats.push(msg);
                        } else {
                            out.violations.push(msg);
                        }
                    }
                }
                Err(e) => out.violations.push(format!("seed weight unavailable: {e}")),
            }
        } else if pos % 2 == 0 {
            // odd position 2i+1 (1-based): coding clause against the registry
            let prefix: Vec<FinVector> =
                functionals[..pos].iter().map(|f| (*f).clone()).collect();
            match registry.lookup(&prefix) {
                Some(sigma) => {
                    if sigma != tag.index {
                        out.violations.push(format!(
                            "member {} has weight index {} but the coding assigns {}",
                            pos + 1,
                            tag.index,
                            sigma
                        ));
                    }
                }
                None => out.violations.push(format!(
                    "coding has no assignment for the prefix of length {pos}"
                )),
            }
        } else {
            // even position 2i (1-based): lift clause with equal weight
            let k_i = seq.ks[pos / 2];
            let prev = &members[pos - 1];
            if prev.weight != record.weight {
                out.violations.push(format!(
                    "members {} and {} have different weights",
                    pos,
                    pos + 1
                ));
            }
            match spread::lambda_member(&record.functional, &prev.functional, k_i) {
                Ok(true) => {}
                Ok(false) => out.violations.push(format!(
                    "member {} is not a Λ^{}-image of member {}",
                    pos + 1,
                    k_i,
                    pos
                )),
                Err(e) => out.violations.push(format!("lift clause: {e}")),
            }
        }
        if let Some(model) = &model_members {
            let model_record = ctx.record(model[pos]);
            if model_record.weight != record.weight {
                out.violations
                    .push(format!("member {} weight differs from model", pos + 1));
            }
            match spread::lambda_member(&record.functional, &model_record.functional, model_k) {
                Ok(true) => {}
                Ok(false) => out.violations.push(format!(
                    "member {} is not a Λ^{model_k}-image of the model member",
                    pos + 1
                )),
                Err(e) => out.violations.push(format!("model clause: {e}")),
            }
        }
    }
    Ok(out)
}

/// Builds a j-special sequence of length `2d` on fresh support to the right
/// of everything in the context. The seed weight index defaults to the
/// smallest admissible one; each even member is the minimal canonical lift
/// that keeps the sequence block; odd members are fresh two-term regular
/// functionals whose weight comes from the coding registry.
pub fn build_j_special(
    ctx: &mut KContext,
    registry: &mut SigmaRegistry,
    j: u64,
    seed_weight_index: Option<u64>,
    length: usize,
) -> Result<SeqId> {
    if length == 0 || length % 2 != 0 {
        return Err(Error::Parse(
            "special sequence length must be even and positive".into(),
        ));
    }
    let d = length / 2;
    if BigUint::from(length as u64) > ctx.schedule().n(2 * j - 1)? {
        return Err(Error::Capacity(format!(
            "length {length} exceeds n_{}",
            2 * j - 1
        )));
    }
    let seed = match seed_weight_index {
        Some(s) => {
            if s % 4 != 2 {
                return Err(Error::Parse(format!(
                    "seed weight index {s} is not of the form 4l-2"
                )));
            }
            s
        }
        None => smallest_admissible_seed(ctx, j)?,
    };
    if seed > ctx.caps.weight_index {
        return Err(if ctx.schedule().is_conforming() {
            Error::ConformingInfeasible(format!(
                "seed weight index {seed} exceeds the context weight cap {}",
                ctx.caps.weight_index
            ))
        } else {
            Error::Capacity(format!(
                "seed weight index {seed} exceeds the context weight cap {}",
                ctx.caps.weight_index
            ))
        });
    }
    let mut members: Vec<RecordId> = Vec::with_capacity(length);
    let mut ks: Vec<u32> = Vec::with_capacity(d);
    let mut cursor = ctx.max_used_support().max(1) + 1;
    let mut weight_index = seed;
    for i in 0..d {
        let odd = fresh_regular(ctx, weight_index, cursor)?;
        members.push(odd);
        let (k, even) = minimal_block_lift(ctx, odd)?;
        members.push(even);
        ks.push(k);
        cursor = ctx.record(even).functional.max_support().unwrap() + 1;
        if i + 1 < d {
            let prefix: Vec<FinVector> = members
                .iter()
                .map(|id| ctx.record(*id).functional.clone())
                .collect();
            weight_index = registry.assign(&prefix)?;
            if weight_index > ctx.caps.weight_index {
                return Err(Error::Capacity(format!(
                    "coding weight index {weight_index} exceeds the context weight cap {}",
                    ctx.caps.weight_index
                )));
            }
        }
    }
    ctx.register_sequence(SpecialSequence {
        kind: SequenceKind::JSpecial,
        j,
        members,
        ks,
    })
}

/// Smallest seed index `4l-2` whose weight satisfies the size clause
/// (conforming), or simply the first one, `2` (compact, with the clause
/// reported as a mode caveat by `verify_special`).
fn smallest_admissible_seed(ctx: &KContext, j: u64) -> Result<u64> {
    if !ctx.schedule().is_conforming() {
        return Ok(2);
    }
    let bound = BigUint::from(9u64) * ctx.schedule().n(2 * j - 1)?.pow(2);
    let mut l = 1u64;
    loop {
        let index = 4 * l - 2;
        match ctx.schedule().m(index) {
            Ok(m) => {
                if m > bound {
                    return Ok(index);
                }
            }
            Err(_) => {
                return Err(Error::ConformingInfeasible(format!(
                    "no seed index 4l-2 with m_index > 9 n_{}^2 within the computable horizon",
                    2 * j - 1
                )));
            }
        }
        l += 1;
    }
}

/// A two-term regular functional on fresh support starting at `start`
/// (shifted to 2 at least, so canonical lifts can be block).
fn fresh_regular(ctx: &mut KContext, weight_index: u64, start: u64) -> Result<RecordId> {
    let start = start.max(2);
    let a = ctx.register_terminal(start, false)?;
    let b = ctx.register_terminal(start + 1, false)?;
    ctx.register(
        Formation::Regular {
            weight_index,
            children: vec![a, b],
        },
        false,
    )
}

/// The smallest k whose canonical lift sits strictly to the right of the
/// source, together with the lifted record.
fn minimal_block_lift(ctx: &mut KContext, id: RecordId) -> Result<(u32, RecordId)> {
    let f = ctx.record(id).functional.clone();
    let lo = f.min_support().unwrap();
    let hi = f.max_support().unwrap();
    let mut k = 1u32;
    while lo
        .checked_shl(k)
        .ok_or_else(|| Error::Capacity("lift overflow".into()))?
        <= hi
    {
        k += 1;
    }
    let mut lifted = id;
    for _ in 0..k {
        lifted = ctx.lift_record(lifted, false)?;
    }
    Ok((k, lifted))
}

/// Builds the Λ-j-special sequence k-modeled on `model` (k = 0 returns the
/// model itself: j-special sequences are Λ-j-special by definition).
pub fn build_lambda_special(ctx: &mut KContext, model: SeqId, k: u32) -> Result<SeqId> {
    if ctx.sequence(model)?.kind != SequenceKind::JSpecial {
        return Err(Error::Parse("model must be a j-special sequence".into()));
    }
    if k == 0 {
        return Ok(model);
    }
    let mut seq = model;
    for _ in 0..k {
        seq = ctx.lifted_sequence(seq, false)?;
    }
    Ok(seq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn small_ctx() -> KContext {
        let sched = ParameterSchedule::compact(&[2, 4, 8], &[4, 6, 8]).unwrap();
        KContext::new(sched, Regime::Tsirelson, KCaps::new(1, 4, 1).with_arity(4))
    }

    #[test]
    fn terminals_only_context() {
        let sched = ParameterSchedule::compact(&[2, 4, 8], &[4, 6, 8]).unwrap();
        let mut ctx = KContext::new(sched, Regime::Gm, KCaps::new(0, 4, 2));
        generate_k(&mut ctx).unwrap();
        assert_eq!(ctx.len(), 8);
        assert!(check_k1(&ctx).passed());
        assert!(check_k2(&ctx).passed());
        assert!(check_k3(&ctx).passed());
    }

    #[test]
    fn tsirelson_gen1_count_matches_hand_enumeration() {
        let mut ctx = small_ctx();
        generate_k(&mut ctx).unwrap();
        assert_eq!(ctx.saturation(), Saturation::Closed);
        // Weight-1 products over signed unit tuples of length <= 4 from a
        // 4-point window: sum over d of C(4,d)*2^d = 8+24+32+16 = 80.
        assert_eq!(ctx.weighted_records().count(), 80);
        assert_eq!(ctx.len(), 88);
        assert!(check_k1(&ctx).passed());
        assert!(check_k2(&ctx).passed());
        let k3 = check_k3(&ctx);
        assert!(k3.passed(), "{:?}", k3.violations);
    }

    #[test]
    fn restriction_closure_is_real() {
        let mut ctx = small_ctx();
        generate_k(&mut ctx).unwrap();
        let f = FinVector::from_pairs([(1, ratio(1, 2)), (3, ratio(1, 2))]);
        let id = ctx
            .find(&f, Some(WeightTag { index: 1 }))
            .expect("product present");
        let restricted = ctx.record(id).functional.restrict(&IntervalE::new(1, 1));
        assert!(ctx.contains(&restricted, Some(WeightTag { index: 1 })));
    }

    #[test]
    fn planted_rogue_member_fails_checks() {
        let mut ctx = small_ctx();
        generate_k(&mut ctx).unwrap();
        let mut bad = ctx.clone();
        bad.insert_record_unchecked(FunctionalRecord {
            functional: FinVector::from_pairs([(1, int(1)), (2, int(1))]),
            formation: Formation::Terminal {
                sign: Sign::Plus,
                index: 1,
            },
            weight: None,
            generation: 0,
        });
        assert!(!check_k2(&bad).passed());
        // the same plant breaks the backward inclusion: its lift maps back to
        // e_1, not to e_1 + e_2
        assert!(!check_k3(&bad).passed());
    }

    #[test]
    fn missing_negation_fails_k1() {
        let mut ctx = small_ctx();
        generate_k(&mut ctx).unwrap();
        let f = FinVector::from_pairs([(1, ratio(1, 2)), (2, ratio(1, 2))]);
        let neg = ctx.find(&f.negate(), Some(WeightTag { index: 1 })).unwrap();
        let mut bad = ctx.clone();
        bad.unindex_record(neg);
        assert!(!check_k1(&bad).passed());
    }

    #[test]
    fn build_j_special_compact() {
        let sched = ParameterSchedule::compact(&[2, 4, 8], &[4, 6, 8]).unwrap();
        let mut ctx = KContext::new(sched, Regime::Gm, KCaps::new(3, 64, 8));
        let mut registry = SigmaRegistry::new(ScheduleMode::Compact);
        let seq = build_j_special(&mut ctx, &mut registry, 1, None, 4).unwrap();
        let check = verify_special(&ctx, &registry, seq).unwrap();
        assert!(check.passed(), "{:?}", check.violations);
        // compact mode: the seed size clause is a caveat, not a failure
        assert!(!check.caveats.is_empty());
        let s = ctx.sequence(seq).unwrap();
        assert_eq!(s.members.len(), 4);
        let f1 = ctx.record(s.members[0]).functional.clone();
        let f2 = ctx.record(s.members[1]).functional.clone();
        assert!(spread::lambda_member(&f2, &f1, s.ks[0]).unwrap());
    }

    #[test]
    fn conforming_seed_is_infeasible_at_small_caps() {
        let sched = ParameterSchedule::conforming();
        let mut ctx = KContext::new(sched, Regime::Gm, KCaps::new(3, 64, 4));
        let mut registry = SigmaRegistry::new(ScheduleMode::Conforming);
        // j = 1 needs m_{4l-2} > 9*16 = 144: l = 2 gives index 6 > cap 4
        let err = build_j_special(&mut ctx, &mut registry, 1, None, 2).unwrap_err();
        assert!(matches!(err, Error::ConformingInfeasible(_)), "{err}");
    }

    #[test]
    fn lambda_special_zero_modeled_is_model() {
        let sched = ParameterSchedule::compact(&[2, 4, 8], &[4, 6, 8]).unwrap();
        let mut ctx = KContext::new(sched, Regime::Gm, KCaps::new(3, 64, 8));
        let mut registry = SigmaRegistry::new(ScheduleMode::Compact);
        let model = build_j_special(&mut ctx, &mut registry, 1, None, 2).unwrap();
        assert_eq!(build_lambda_special(&mut ctx, model, 0).unwrap(), model);
        let lifted = build_lambda_special(&mut ctx, model, 1).unwrap();
        let check = verify_special(&ctx, &registry, lifted).unwrap();
        assert!(check.passed(), "{:?}", check.violations);
        let m = ctx.sequence(model).unwrap().members.clone();
        let l = ctx.sequence(lifted).unwrap().members.clone();
        for (a, b) in m.iter().zip(&l) {
            assert_eq!(ctx.record(*a).weight, ctx.record(*b).weight);
        }
    }

    #[test]
    fn special_rules_generate_certified_members() {
        let sched = ParameterSchedule::compact(&[2, 4, 8], &[4, 6, 8]).unwrap();
        let mut ctx = KContext::new(sched, Regime::Gm, KCaps::new(3, 64, 8).with_budget(500));
        let mut registry = SigmaRegistry::new(ScheduleMode::Compact);
        build_j_special(&mut ctx, &mut registry, 1, None, 2).unwrap();
        generate_k(&mut ctx).unwrap();
        assert!(ctx
            .records()
            .any(|(_, r)| matches!(r.formation, Formation::RSpecial { .. })));
        let k2 = check_k2(&ctx);
        assert!(k2.passed(), "{:?}", k2.violations);
        let k3 = check_k3(&ctx);
        assert!(k3.passed(), "{:?}", k3.violations);
    }

    #[test]
    fn tree_property_on_diverging_sequences() {
        let sched = ParameterSchedule::compact(&[2, 4, 8], &[4, 6, 8]).unwrap();
        let mut ctx = KContext::new(sched, Regime::Gm, KCaps::new(3, 512, 16));
        let mut registry = SigmaRegistry::new(ScheduleMode::Compact);
        let a = build_j_special(&mut ctx, &mut registry, 1, None, 4).unwrap();
        let b = build_j_special(&mut ctx, &mut registry, 1, None, 4).unwrap();
        assert_ne!(
            ctx.sequence(a).unwrap().members[0],
            ctx.sequence(b).unwrap().members[0]
        );
        let report = check_tree_property(&ctx);
        assert!(report.passed(), "{:?}", report.violations);
    }
}
