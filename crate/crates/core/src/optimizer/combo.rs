//! Planning of `Σ c_i · src_i` as a short chain of scalar operations.
//!
//! The same plan drives both the optimizer's cost accounting and code
//! lowering, so the declared cost of a node is what the kernel executes.

use num_traits::{One, Zero};
use serde::Serialize;

use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq)]
pub enum ComboOp<S> {
    /// acc = src
    Take(S),
    /// acc = c · src
    Scale(Rational, S),
    /// acc = acc + src
    Add(S),
    /// acc = acc - src
    Sub(S),
    /// acc = src - acc
    RevSub(S),
    /// acc = acc + c · src
    Fma(Rational, S),
    /// acc = c · src - acc
    Fms(Rational, S),
    /// acc = -acc
    Neg,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct OpCounts {
    pub negs: usize,
    pub mults: usize,
    pub adds: usize,
}

impl OpCounts {
    pub fn total(&self) -> usize {
        self.negs + self.mults + self.adds
    }
}

impl std::ops::AddAssign for OpCounts {
    fn add_assign(&mut self, o: Self) {
        self.negs += o.negs;
        self.mults += o.mults;
        self.adds += o.adds;
    }
}

fn is_minus_one(c: &Rational) -> bool {
    (-c).is_one()
}

/// Orders the terms so a unit coefficient leads, then emits the chain.
/// Zero coefficients are dropped; an empty plan means the value is zero.
pub fn plan<S: Clone>(terms: &[(Rational, S)]) -> Vec<ComboOp<S>> {
    let mut t: Vec<(Rational, S)> = terms.iter().filter(|(c, _)| !c.is_zero()).cloned().collect();
    if t.is_empty() {
        return Vec::new();
    }
    if let Some(i) = t.iter().position(|(c, _)| c.is_one()) {
        t[..=i].rotate_right(1);
    } else if t.len() > 1 {
        if let Some(i) = t.iter().position(|(c, _)| is_minus_one(c)) {
            t[..=i].rotate_right(1);
        }
    }
    let mut ops = Vec::with_capacity(t.len() + 1);
    let mut negated = false;
    let (c0, s0) = &t[0];
    if c0.is_one() {
        ops.push(ComboOp::Take(s0.clone()));
    } else if is_minus_one(c0) {
        ops.push(ComboOp::Take(s0.clone()));
        negated = true;
    } else {
        ops.push(ComboOp::Scale(c0.clone(), s0.clone()));
    }
    for (c, s) in &t[1..] {
        let op = if negated {
            negated = false;
            if c.is_one() {
                ComboOp::RevSub(s.clone())
            } else {
                ComboOp::Fms(c.clone(), s.clone())
            }
        } else if c.is_one() {
            ComboOp::Add(s.clone())
        } else if is_minus_one(c) {
            ComboOp::Sub(s.clone())
        } else {
            ComboOp::Fma(c.clone(), s.clone())
        };
        ops.push(op);
    }
    if negated {
        ops.push(ComboOp::Neg);
    }
    ops
}

pub fn count<S>(ops: &[ComboOp<S>]) -> OpCounts {
    let mut c = OpCounts::default();
    for op in ops {
        match op {
            ComboOp::Take(_) => {}
            ComboOp::Scale(..) => c.mults += 1,
            ComboOp::Add(_) | ComboOp::Sub(_) | ComboOp::RevSub(_) => c.adds += 1,
            ComboOp::Fma(..) | ComboOp::Fms(..) => {
                c.mults += 1;
                c.adds += 1;
            }
            ComboOp::Neg => c.negs += 1,
        }
    }
    c
}

/// Number of emitted instructions, each counted as one multiply-add slot.
pub fn slots<S>(ops: &[ComboOp<S>]) -> usize {
    ops.iter().filter(|op| !matches!(op, ComboOp::Take(_))).count()
}

/// Reference evaluation of a plan; used by tests and the rational checker.
pub fn eval<S>(ops: &[ComboOp<S>], value: impl Fn(&S) -> Rational) -> Rational {
    let mut acc = Rational::zero();
    for op in ops {
        acc = match op {
            ComboOp::Take(s) => value(s),
            ComboOp::Scale(c, s) => c * value(s),
            ComboOp::Add(s) => acc + value(s),
            ComboOp::Sub(s) => acc - value(s),
            ComboOp::RevSub(s) => value(s) - acc,
            ComboOp::Fma(c, s) => acc + c * value(s),
            ComboOp::Fms(c, s) => c * value(s) - acc,
            ComboOp::Neg => -acc,
        };
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};
    use proptest::prelude::*;

    #[test]
    fn unit_leads_for_free() {
        let ops = plan(&[(rat(1, 2), 0usize), (int(1), 1)]);
        assert_eq!(ops, vec![ComboOp::Take(1), ComboOp::Fma(rat(1, 2), 0)]);
        assert_eq!(slots(&ops), 1);
    }

    #[test]
    fn double_negative_is_one_op() {
        let ops = plan(&[(int(-1), 0usize), (int(-1), 1)]);
        assert_eq!(slots(&ops), 1);
        assert_eq!(eval(&ops, |&s| int([3, 5][s])), int(-8));
    }

    #[test]
    fn lone_negation() {
        let ops = plan(&[(int(-1), 7usize)]);
        assert_eq!(ops, vec![ComboOp::Take(7), ComboOp::Neg]);
        assert_eq!(count(&ops), OpCounts { negs: 1, mults: 0, adds: 0 });
    }

    #[test]
    fn empty_is_zero() {
        assert!(plan::<usize>(&[(int(0), 1)]).is_empty());
    }

    proptest! {
        #[test]
        fn plan_evaluates_the_combination(
            coeffs in proptest::collection::vec(-3i64..=3, 1..6),
            vals in proptest::collection::vec(-20i64..=20, 6),
        ) {
            let terms: Vec<(Rational, usize)> =
                coeffs.iter().enumerate().map(|(i, &c)| (rat(c, 2), i)).collect();
            let ops = plan(&terms);
            let expect = terms.iter().fold(Rational::zero(), |a, (c, i)| a + c * int(vals[*i]));
            prop_assert_eq!(eval(&ops, |&s| int(vals[s])), expect);
            let nnz = terms.iter().filter(|(c, _)| !c.is_zero()).count();
            prop_assert!(slots(&ops) <= nnz);
        }
    }
}
