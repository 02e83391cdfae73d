//! Tree-analysis certificates.
//!
//! A certificate is the proof object for a norm lower bound: a tree whose
//! leaves are signed basis functionals and whose internal nodes carry a weight
//! index, a kind tag, and an explicit restriction interval. Flattening a
//! certificate yields the functional it denotes; evaluating it on a vector is
//! exact rational arithmetic, so `evaluate(c, x)` re-derives the claimed bound
//! bit-for-bit.
//!
//! Node semantics (`w_j = m_j^{-1}`, `E` the node's restriction):
//!
//! * `Terminal(±, i)` denotes `± e_i^*`.
//! * `Regular` / `LambdaSpecial` nodes denote `± w_j · E(f_1 + … + f_d)`.
//! * `RSpecial(k)` nodes denote `± w_j · E(R^k(f_1 + … + f_d))`; the adjoint
//!   applies after the children are summed and before the restriction.
//!
//! The `LambdaSpecial` and `RSpecial` tags exist so that formation-specific
//! checks can tell the kinds apart; structural verification here treats them
//! uniformly (arity against `n_j`, blockness, terminal leaves). Whether a
//! special node's sequence is genuinely special is a semantic question settled
//! by the norming-set layer, not here.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::schedule::ParameterSchedule;
use crate::spread;
use crate::vector::{FinVector, IntervalE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn of(q: &Rational) -> Sign {
        use num_traits::Signed;
        if q.is_negative() {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn factor(&self) -> Rational {
        match self {
            Sign::Plus => rational::int(1),
            Sign::Minus => rational::int(-1),
        }
    }

    pub fn flip(&self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// Kind tag of a weighted node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeTag {
    Regular,
    /// The adjoint power applied at this node.
    RSpecial(u32),
    LambdaSpecial,
}

/// A tree-analysis certificate.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TreeCertificate {
    Terminal {
        sign: Sign,
        index: u64,
    },
    Weighted {
        sign: Sign,
        weight_index: u64,
        tag: NodeTag,
        restriction: IntervalE,
        children: Vec<TreeCertificate>,
    },
}

impl TreeCertificate {
    pub fn terminal(sign: Sign, index: u64) -> Self {
        TreeCertificate::Terminal { sign, index }
    }

    pub fn regular(sign: Sign, weight_index: u64, restriction: IntervalE, children: Vec<TreeCertificate>) -> Self {
        TreeCertificate::Weighted {
            sign,
            weight_index,
            tag: NodeTag::Regular,
            restriction,
            children,
        }
    }

    /// Leaf depth 0; weighted nodes one above their deepest child.
    pub fn depth(&self) -> u32 {
        match self {
            TreeCertificate::Terminal { .. } => 0,
            TreeCertificate::Weighted { children, .. } => {
                1 + children.iter().map(|c| c.depth()).max().unwrap_or(0)
            }
        }
    }

    /// The functional this certificate denotes.
    pub fn flatten(&self, sched: &ParameterSchedule) -> Result<FinVector> {
        match self {
            TreeCertificate::Terminal { sign, index } => {
                Ok(FinVector::unit(*index, *sign == Sign::Minus))
            }
            TreeCertificate::Weighted {
                sign,
                weight_index,
                tag,
                restriction,
                children,
            } => {
                let mut sum = FinVector::zero();
                for c in children {
                    sum.add_assign(&c.flatten(sched)?);
                }
                if let NodeTag::RSpecial(k) = tag {
                    sum = spread::apply_r_pow(&sum, *k);
                }
                let w = sched.weight(*weight_index)?;
                Ok(sum.restrict(restriction).scale(&(w * sign.factor())))
            }
        }
    }

    /// Exact `f(x)` where `f` is the denoted functional. The certificate is
    /// verified first; an invalid one is a structured error naming the node.
    pub fn evaluate(&self, x: &FinVector, sched: &ParameterSchedule) -> Result<Rational> {
        let report = self.verify_structure(sched);
        if let Some(first) = report.violations.first() {
            return Err(Error::InvalidCertificate {
                path: first.path.clone(),
                reason: first.reason.clone(),
            });
        }
        Ok(FinVector::pair(&self.flatten(sched)?, x))
    }

    /// Structural verification: arity bounds, blockness of children, terminal
    /// leaves. Collects every violation instead of stopping at the first.
    pub fn verify_structure(&self, sched: &ParameterSchedule) -> StructureReport {
        let mut report = StructureReport::default();
        self.verify_node(sched, "root", &mut report);
        report
    }

    fn verify_node(&self, sched: &ParameterSchedule, path: &str, report: &mut StructureReport) {
        let TreeCertificate::Weighted {
            weight_index,
            tag,
            restriction,
            children,
            ..
        } = self
        else {
            return;
        };
        if children.is_empty() {
            report.push(path, "weighted node with no children (every leaf must be terminal)");
            return;
        }
        match sched.arity_allows(*weight_index, children.len()) {
            Ok(true) => {}
            Ok(false) => report.push(
                path,
                &format!(
                    "arity: {} children exceeds n_{}",
                    children.len(),
                    weight_index
                ),
            ),
            Err(e) => report.push(path, &format!("arity bound unavailable: {e}")),
        }
        // Blockness of the (nonzero) children after the node's restriction.
        // For adjoint nodes the restriction applies after R^k, so the children
        // are compared raw.
        let effective = |f: &FinVector| -> FinVector {
            match tag {
                NodeTag::RSpecial(_) => f.clone(),
                _ => f.restrict(restriction),
            }
        };
        let mut last_max: Option<u64> = None;
        for (idx, child) in children.iter().enumerate() {
            let child_path = format!("{path}.children[{idx}]");
            child.verify_node(sched, &child_path, report);
            match child.flatten(sched) {
                Ok(flat) => {
                    let flat = effective(&flat);
                    if let (Some(lo), Some(hi)) = (flat.min_support(), flat.max_support()) {
                        if let Some(prev) = last_max {
                            if lo <= prev {
                                report.push(&child_path, "blockness: support overlaps previous sibling");
                            }
                        }
                        last_max = Some(hi.max(last_max.unwrap_or(0)));
                    }
                }
                Err(e) => report.push(&child_path, &format!("cannot flatten: {e}")),
            }
        }
    }

    /// Root with its restriction tightened to `e`; `None` when the
    /// intersection is empty (the zero functional) or the root is a terminal
    /// outside `e`.
    pub fn pushed_restriction(&self, e: &IntervalE) -> Option<TreeCertificate> {
        match self {
            TreeCertificate::Terminal { index, .. } => {
                if e.contains(*index) {
                    Some(self.clone())
                } else {
                    None
                }
            }
            TreeCertificate::Weighted {
                sign,
                weight_index,
                tag,
                restriction,
                children,
            } => {
                let tightened = restriction.intersect(e)?;
                Some(TreeCertificate::Weighted {
                    sign: *sign,
                    weight_index: *weight_index,
                    tag: *tag,
                    restriction: tightened,
                    children: children.clone(),
                })
            }
        }
    }

    /// Canonical JSON, the form used for persistence and for deterministic
    /// tie-breaking (lexicographic byte order of this string).
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(&NodeDto::from(self)).expect("certificate serialization")
    }

    pub fn from_json(text: &str) -> Result<TreeCertificate> {
        let dto: NodeDto = serde_json::from_str(text)?;
        dto.into_certificate("root")
    }
}

/// One structural violation at a named node.
#[derive(Debug, Clone)]
pub struct Violation {
    pub path: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct StructureReport {
    pub violations: Vec<Violation>,
}

impl StructureReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, path: &str, reason: &str) {
        self.violations.push(Violation {
            path: path.to_string(),
            reason: reason.to_string(),
        });
    }
}

/// Wire form. Field order is the canonical JSON order:
/// `{"kind","sign","i","j","tag","E","children"}` with absent fields omitted.
#[derive(Serialize, Deserialize)]
struct NodeDto {
    kind: String,
    sign: i8,
    #[serde(skip_serializing_if = "Option::is_none")]
    i: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    j: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tag: Option<String>,
    #[serde(rename = "E", skip_serializing_if = "Option::is_none")]
    e: Option<[u64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    children: Option<Vec<NodeDto>>,
}

impl From<&TreeCertificate> for NodeDto {
    fn from(c: &TreeCertificate) -> Self {
        match c {
            TreeCertificate::Terminal { sign, index } => NodeDto {
                kind: "terminal".into(),
                sign: if *sign == Sign::Plus { 1 } else { -1 },
                i: Some(*index),
                j: None,
                tag: None,
                e: None,
                children: None,
            },
            TreeCertificate::Weighted {
                sign,
                weight_index,
                tag,
                restriction,
                children,
            } => NodeDto {
                kind: "weighted".into(),
                sign: if *sign == Sign::Plus { 1 } else { -1 },
                i: None,
                j: Some(*weight_index),
                tag: Some(match tag {
                    NodeTag::Regular => "regular".into(),
                    NodeTag::RSpecial(k) => format!("r_special:{k}"),
                    NodeTag::LambdaSpecial => "lambda_special".into(),
                }),
                e: Some([restriction.lo(), restriction.hi()]),
                children: Some(children.iter().map(NodeDto::from).collect()),
            },
        }
    }
}

impl NodeDto {
    fn into_certificate(self, path: &str) -> Result<TreeCertificate> {
        let sign = match self.sign {
            1 => Sign::Plus,
            -1 => Sign::Minus,
            s => {
                return Err(Error::Parse(format!("bad sign {s} at {path}")));
            }
        };
        match self.kind.as_str() {
            "terminal" => {
                let index = self
                    .i
                    .ok_or_else(|| Error::Parse(format!("terminal without index at {path}")))?;
                if index == 0 {
                    return Err(Error::Parse(format!("index 0 at {path}")));
                }
                Ok(TreeCertificate::Terminal { sign, index })
            }
            "weighted" => {
                let j = self
                    .j
                    .ok_or_else(|| Error::Parse(format!("weighted node without j at {path}")))?;
                let tag = match self.tag.as_deref() {
                    Some("regular") | None => NodeTag::Regular,
                    Some("lambda_special") => NodeTag::LambdaSpecial,
                    Some(t) if t.starts_with("r_special:") => {
                        let k = t["r_special:".len()..]
                            .parse::<u32>()
                            .map_err(|_| Error::Parse(format!("bad r_special tag at {path}")))?;
                        NodeTag::RSpecial(k)
                    }
                    Some(t) => {
                        return Err(Error::Parse(format!("unknown tag {t:?} at {path}")));
                    }
                };
                let [lo, hi] = self
                    .e
                    .ok_or_else(|| Error::Parse(format!("weighted node without E at {path}")))?;
                if lo == 0 || lo > hi {
                    return Err(Error::Parse(format!("bad interval [{lo},{hi}] at {path}")));
                }
                let children = self
                    .children
                    .unwrap_or_default()
                    .into_iter()
                    .enumerate()
                    .map(|(idx, c)| c.into_certificate(&format!("{path}.children[{idx}]")))
                    .collect::<Result<Vec<_>>>()?;
                Ok(TreeCertificate::Weighted {
                    sign,
                    weight_index: j,
                    tag,
                    restriction: IntervalE::new(lo, hi),
                    children,
                })
            }
            k => Err(Error::Parse(format!("unknown node kind {k:?} at {path}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn sched() -> ParameterSchedule {
        ParameterSchedule::compact(&[2, 4, 8], &[4, 6, 8]).unwrap()
    }

    fn leaves(range: std::ops::RangeInclusive<u64>) -> Vec<TreeCertificate> {
        range.map(|i| TreeCertificate::terminal(Sign::Plus, i)).collect()
    }

    #[test]
    fn terminal_evaluation() {
        let c = TreeCertificate::terminal(Sign::Plus, 3);
        let x = FinVector::from_pairs([(3, ratio(5, 2))]);
        assert_eq!(c.evaluate(&x, &sched()).unwrap(), ratio(5, 2));
    }

    #[test]
    fn weighted_evaluation_and_restriction() {
        let c = TreeCertificate::regular(Sign::Plus, 1, IntervalE::new(1, 4), leaves(1..=4));
        let x = FinVector::from_pairs((1..=4).map(|i| (i, int(1))));
        assert_eq!(c.evaluate(&x, &sched()).unwrap(), int(2));

        let restricted = TreeCertificate::regular(Sign::Plus, 1, IntervalE::new(1, 2), leaves(1..=4));
        assert_eq!(restricted.evaluate(&x, &sched()).unwrap(), int(1));
    }

    #[test]
    fn arity_violation_detected() {
        // 5 children at j = 1 with n_1 = 4
        let c = TreeCertificate::regular(Sign::Plus, 1, IntervalE::new(1, 5), leaves(1..=5));
        let report = c.verify_structure(&sched());
        assert!(!report.is_valid());
        assert!(report.violations[0].reason.contains("arity"));
        assert!(c.evaluate(&FinVector::unit(1, false), &sched()).is_err());
    }

    #[test]
    fn single_terminal_is_valid() {
        let c = TreeCertificate::terminal(Sign::Minus, 7);
        assert!(c.verify_structure(&sched()).is_valid());
    }

    #[test]
    fn blockness_violation_detected() {
        let overlapping = vec![
            TreeCertificate::terminal(Sign::Plus, 2),
            TreeCertificate::terminal(Sign::Plus, 2),
        ];
        let c = TreeCertificate::regular(Sign::Plus, 1, IntervalE::new(1, 4), overlapping);
        let report = c.verify_structure(&sched());
        assert!(!report.is_valid());
        assert!(report.violations[0].reason.contains("blockness"));
    }

    #[test]
    fn adjoint_node_evaluation() {
        // (1/2) R(e_2* + e_4*) = (1/2)(e_1* + e_2*)
        let c = TreeCertificate::Weighted {
            sign: Sign::Plus,
            weight_index: 1,
            tag: NodeTag::RSpecial(1),
            restriction: IntervalE::new(1, 4),
            children: vec![
                TreeCertificate::terminal(Sign::Plus, 2),
                TreeCertificate::terminal(Sign::Plus, 4),
            ],
        };
        let x = FinVector::from_pairs([(1, int(1)), (2, int(1))]);
        assert_eq!(c.evaluate(&x, &sched()).unwrap(), int(1));
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let c = TreeCertificate::Weighted {
            sign: Sign::Minus,
            weight_index: 2,
            tag: NodeTag::RSpecial(3),
            restriction: IntervalE::new(2, 9),
            children: vec![
                TreeCertificate::terminal(Sign::Plus, 2),
                TreeCertificate::regular(Sign::Minus, 1, IntervalE::new(4, 8), leaves(4..=6)),
            ],
        };
        let json = c.to_canonical_json();
        let back = TreeCertificate::from_json(&json).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_canonical_json(), json);
    }

    #[test]
    fn pushed_restriction_matches_restricted_vector() {
        let c = TreeCertificate::regular(Sign::Plus, 1, IntervalE::new(1, 4), leaves(1..=4));
        let x = FinVector::from_pairs((1..=4).map(|i| (i, int(1))));
        let e = IntervalE::new(2, 3);
        let pushed = c.pushed_restriction(&e).unwrap();
        assert_eq!(
            c.evaluate(&x.restrict(&e), &sched()).unwrap(),
            pushed.evaluate(&x, &sched()).unwrap()
        );
    }
}
