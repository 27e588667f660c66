//! Dense polynomials over a graded monomial basis.

use std::collections::HashMap;

use num_traits::Zero;

use crate::rational::{factorial, Rational};

pub type Exponent = [u32; 3];

/// All exponents of total degree `<= degree` in `dim` variables, ordered by total
/// degree and then with the first variable's power descending (`1, x, y, x², xy, y², …`).
pub fn monomials(degree: usize, dim: usize) -> Vec<Exponent> {
    let mut out = Vec::new();
    for total in 0..=degree as u32 {
        collect(total, dim, 0, &mut [0; 3], &mut out);
    }
    out
}

fn collect(remaining: u32, dim: usize, var: usize, cur: &mut Exponent, out: &mut Vec<Exponent>) {
    if var + 1 == dim {
        cur[var] = remaining;
        out.push(*cur);
        cur[var] = 0;
        return;
    }
    for p in (0..=remaining).rev() {
        cur[var] = p;
        collect(remaining - p, dim, var + 1, cur, out);
    }
    cur[var] = 0;
}

/// Exact integral of `x^a` over the unit right simplex in `dim` dimensions:
/// `(Π a_i!) / (Σ a_i + dim)!`.
pub fn integrate_monomial(exponents: &[u32], dim: usize) -> Rational {
    let num = exponents[..dim]
        .iter()
        .fold(num_bigint::BigInt::from(1), |acc, &a| acc * factorial(a));
    let total: u32 = exponents[..dim].iter().sum::<u32>() + dim as u32;
    Rational::new(num, factorial(total))
}

pub fn add_exp(a: &Exponent, b: &Exponent) -> Exponent {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn eval_monomial_f64(e: &Exponent, x: &[f64]) -> f64 {
    x.iter().zip(e).map(|(xi, &p)| xi.powi(p as i32)).product()
}

pub fn eval_monomial(e: &Exponent, x: &[Rational]) -> Rational {
    let mut acc = Rational::from_integer(1.into());
    for (xi, &p) in x.iter().zip(e) {
        for _ in 0..p {
            acc *= xi;
        }
    }
    acc
}

/// Memoised simplex integrals keyed by exponent.
pub struct IntegralTable {
    dim: usize,
    cache: HashMap<Exponent, Rational>,
}

impl IntegralTable {
    pub fn new(dim: usize) -> Self {
        Self { dim, cache: HashMap::new() }
    }

    pub fn get(&mut self, e: &Exponent) -> Rational {
        let dim = self.dim;
        self.cache
            .entry(*e)
            .or_insert_with(|| integrate_monomial(e, dim))
            .clone()
    }
}

/// A polynomial as a sparse list of `(exponent, coefficient)` terms.
#[derive(Debug, Clone, Default)]
pub struct Poly {
    pub terms: Vec<(Exponent, Rational)>,
}

impl Poly {
    pub fn from_dense(basis: &[Exponent], coeffs: &[Rational]) -> Self {
        let terms = basis
            .iter()
            .zip(coeffs)
            .filter(|(_, c)| !c.is_zero())
            .map(|(e, c)| (*e, c.clone()))
            .collect();
        Self { terms }
    }

    pub fn derivative(&self, var: usize) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|(e, _)| e[var] > 0)
            .map(|(e, c)| {
                let mut d = *e;
                d[var] -= 1;
                (d, c * Rational::from_integer(e[var].into()))
            })
            .collect();
        Self { terms }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut acc: HashMap<Exponent, Rational> = HashMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                *acc.entry(add_exp(ea, eb)).or_insert_with(Rational::zero) += ca * cb;
            }
        }
        let mut terms: Vec<_> = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        terms.sort_by(|a, b| a.0.cmp(&b.0));
        Self { terms }
    }

    pub fn eval(&self, x: &[Rational]) -> Rational {
        self.terms
            .iter()
            .map(|(e, c)| c * eval_monomial(e, x))
            .fold(Rational::zero(), |a, b| a + b)
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| crate::rational::to_f64(c) * eval_monomial_f64(e, x))
            .sum()
    }

    pub fn integrate(&self, table: &mut IntegralTable) -> Rational {
        self.terms
            .iter()
            .map(|(e, c)| c * table.get(e))
            .fold(Rational::zero(), |a, b| a + b)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}
