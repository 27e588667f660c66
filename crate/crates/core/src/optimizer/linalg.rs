//! Exact small linear algebra on block vectors.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Scales `v` by its first nonzero entry so that entry becomes `1`. Two
/// nonzero vectors are colinear iff their directions are identical.
pub fn direction(v: &[Rational]) -> Result<Vec<Rational>> {
    let first = v.iter().find(|x| !x.is_zero()).ok_or(Error::ZeroVector)?;
    let inv = first.recip();
    Ok(v.iter().map(|x| x * &inv).collect())
}

pub fn first_nonzero(v: &[Rational]) -> Option<&Rational> {
    v.iter().find(|x| !x.is_zero())
}

pub fn is_zero(v: &[Rational]) -> bool {
    v.iter().all(|x| x.is_zero())
}

pub fn nnz(v: &[Rational]) -> usize {
    v.iter().filter(|x| !x.is_zero()).count()
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).fold(Rational::zero(), |acc, (x, y)| acc + x * y)
}

/// Canonical key of `span{a, b}`: the reduced row echelon form of `[a; b]`.
/// `None` when `a` and `b` are linearly dependent.
pub fn plane_key(a: &[Rational], b: &[Rational]) -> Option<Vec<Rational>> {
    let n = a.len();
    let mut r0 = a.to_vec();
    let mut r1 = b.to_vec();
    let p0 = (0..n).find(|&c| !r0[c].is_zero() || !r1[c].is_zero())?;
    if r0[p0].is_zero() {
        std::mem::swap(&mut r0, &mut r1);
    }
    let inv = r0[p0].recip();
    r0.iter_mut().for_each(|x| *x *= &inv);
    if !r1[p0].is_zero() {
        let f = r1[p0].clone();
        for (x, y) in r1.iter_mut().zip(&r0) {
            *x -= &f * y;
        }
    }
    let p1 = (p0 + 1..n).find(|&c| !r1[c].is_zero())?;
    let inv = r1[p1].recip();
    r1.iter_mut().for_each(|x| *x *= &inv);
    if !r0[p1].is_zero() {
        let f = r0[p1].clone();
        for (x, y) in r0.iter_mut().zip(&r1) {
            *x -= &f * y;
        }
    }
    r0.extend(r1);
    Some(r0)
}

/// Returns `(c₁, c₂)` with `v = c₁ a + c₂ b` exactly, or `None`.
///
/// Solves the 2×2 normal equations of the projection onto `span{a, b}` and then
/// checks the residual exactly. Dependent `a`, `b` give `None`.
pub fn check_lincomb(v: &[Rational], a: &[Rational], b: &[Rational]) -> Option<(Rational, Rational)> {
    let (aa, ab, bb) = (dot(a, a), dot(a, b), dot(b, b));
    let (av, bv) = (dot(a, v), dot(b, v));
    let det = &aa * &bb - &ab * &ab;
    if det.is_zero() {
        return None;
    }
    let c1 = (&bb * &av - &ab * &bv) / &det;
    let c2 = (&aa * &bv - &ab * &av) / &det;
    let exact = v
        .iter()
        .zip(a.iter().zip(b))
        .all(|(x, (p, q))| *x == &c1 * p + &c2 * q);
    exact.then_some((c1, c2))
}

/// `v - s·w` for `s ∈ {+1, -1}`.
pub fn signed_diff(v: &[Rational], w: &[Rational], negate: bool) -> Vec<Rational> {
    v.iter()
        .zip(w)
        .map(|(x, y)| if negate { x + y } else { x - y })
        .collect()
}

pub fn is_one(x: &Rational) -> bool {
    x.is_one()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;
    use proptest::prelude::*;

    fn v(xs: &[i64]) -> Vec<Rational> {
        xs.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn directions() {
        assert_eq!(direction(&v(&[2, 0, 0, 0])).unwrap(), v(&[1, 0, 0, 0]));
        assert_eq!(direction(&v(&[-1, 2, 0, 0])).unwrap(), v(&[1, -2, 0, 0]));
        assert_eq!(direction(&v(&[0, 0, 0, 0])), Err(Error::ZeroVector));
    }

    #[test]
    fn lincomb_examples() {
        let a = v(&[1, 2, 0, -1]);
        let b = v(&[0, 1, 3, 1]);
        let sum: Vec<_> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        assert_eq!(check_lincomb(&sum, &a, &b), Some((int(1), int(1))));
        let combo: Vec<_> = a.iter().zip(&b).map(|(x, y)| int(2) * x - int(3) * y).collect();
        assert_eq!(check_lincomb(&combo, &a, &b), Some((int(2), int(-3))));
        assert_eq!(check_lincomb(&v(&[0, 0, 1]), &v(&[1, 0, 0]), &v(&[0, 1, 0])), None);
        assert_eq!(check_lincomb(&a, &a, &a), None);
    }

    #[test]
    fn plane_key_dependent() {
        assert!(plane_key(&v(&[1, 2]), &v(&[2, 4])).is_none());
        assert!(plane_key(&v(&[0, 0, 0]), &v(&[1, 2, 3])).is_none());
    }

    proptest! {
        #[test]
        fn plane_key_is_basis_invariant(
            a in proptest::collection::vec(-4i64..=4, 4),
            b in proptest::collection::vec(-4i64..=4, 4),
            m in (-3i64..=3, -3i64..=3, -3i64..=3, -3i64..=3),
        ) {
            let (a, b) = (v(&a), v(&b));
            let Some(key) = plane_key(&a, &b) else { return Ok(()); };
            let (p, q, r, s) = (int(m.0), int(m.1), int(m.2), int(m.3));
            if (&p * &s - &q * &r).is_zero() { return Ok(()); }
            let a2: Vec<_> = a.iter().zip(&b).map(|(x, y)| &p * x + &q * y).collect();
            let b2: Vec<_> = a.iter().zip(&b).map(|(x, y)| &r * x + &s * y).collect();
            prop_assert_eq!(plane_key(&a2, &b2), Some(key));
            prop_assert_eq!(check_lincomb(&a2, &a, &b), Some((p, q)));
        }
    }
}
