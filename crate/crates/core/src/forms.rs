//! Rational differential forms `N(z)/D(z) dz` on the projective line and the
//! Cartier operator.

use crate::error::{ensure, Error, Result};
use crate::field::{Fe, Field};
use crate::poly::Poly;

/// A rational differential form `N/D dz` kept in lowest terms with monic `D`.
/// The zero form is `0/1 dz`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DifferentialForm {
    num: Poly,
    den: Poly,
}

/// One finite pole of a form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pole {
    pub point: Fe,
    pub order: usize,
    pub residue: Fe,
}

impl DifferentialForm {
    pub fn new(f: &Field, num: Poly, den: Poly) -> Result<Self> {
        ensure!(!den.is_zero(), InvalidParameter, "denominator of a form must be nonzero");
        if num.is_zero() {
            return Ok(Self::zero());
        }
        let g = num.gcd(f, &den);
        let mut num = num.exact_div(f, &g)?;
        let mut den = den.exact_div(f, &g)?;
        let lc = f.inv_nz(den.leading());
        num = num.scale(f, lc);
        den = den.scale(f, lc);
        Ok(DifferentialForm { num, den })
    }

    pub fn zero() -> Self {
        DifferentialForm { num: Poly::zero(), den: Poly::one() }
    }

    /// `c dz / D` for monic or non-monic `D`.
    pub fn constant_over(f: &Field, c: Fe, den: &Poly) -> Result<Self> {
        Self::new(f, Poly::constant(c), den.clone())
    }

    pub fn numerator(&self) -> &Poly {
        &self.num
    }

    pub fn denominator(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn add(&self, f: &Field, o: &Self) -> Self {
        let num = self.num.mul(f, &o.den).add(f, &o.num.mul(f, &self.den));
        Self::new(f, num, self.den.mul(f, &o.den)).expect("nonzero denominator")
    }

    pub fn sub(&self, f: &Field, o: &Self) -> Self {
        self.add(f, &o.scale(f, f.neg(Fe::ONE)))
    }

    pub fn scale(&self, f: &Field, c: Fe) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        DifferentialForm { num: self.num.scale(f, c), den: self.den.clone() }
    }

    /// `deg D - deg N - 2`; `None` for the zero form.
    pub fn order_at_infinity(&self) -> Option<i64> {
        if self.is_zero() {
            return None;
        }
        Some(self.den.deg() - self.num.deg() - 2)
    }

    /// Residue at a point `x0` where the denominator vanishes to order `e`:
    /// the coefficient of `w^(e-1)` in the expansion of `N/D1` at `z = x0 + w`.
    fn residue_at(&self, f: &Field, x0: Fe, order: usize) -> Result<Fe> {
        let lin = Poly::linear_root(f, x0);
        let d1 = self.den.exact_div(f, &lin.pow(f, order as u64))?;
        let n = self.num.taylor_shift(f, x0);
        let d = d1.taylor_shift(f, x0);
        let d0_inv = f.inv(d.coeff(0))?;
        // power series quotient n/d up to degree order-1
        let mut s: Vec<Fe> = Vec::with_capacity(order);
        for i in 0..order {
            let mut acc = n.coeff(i);
            for (j, &sj) in s.iter().enumerate() {
                acc = f.sub(acc, f.mul(sj, d.coeff(i - j)));
            }
            s.push(f.mul(acc, d0_inv));
        }
        Ok(s[order - 1])
    }

    /// Finite poles with orders and residues, in increasing element index.
    /// Fails with [`Error::NeedsLargerField`] if the denominator does not split.
    pub fn poles_and_residues(&self, f: &Field) -> Result<Vec<Pole>> {
        if self.den.deg() <= 0 {
            return Ok(Vec::new());
        }
        self.den
            .split_roots(f)?
            .into_iter()
            .map(|(x, e)| Ok(Pole { point: x, order: e, residue: self.residue_at(f, x, e)? }))
            .collect()
    }

    /// Pullback along `z = phi(t)`: `N(phi)/D(phi) phi' dt`.
    pub fn pullback(&self, f: &Field, phi: &Poly) -> Self {
        let num = self.num.compose(f, phi).mul(f, &phi.derivative(f));
        Self::new(f, num, self.den.compose(f, phi)).expect("nonconstant or nonzero denominator")
    }

    /// Image under a coefficient map (e.g. a field embedding).
    pub fn map_coeffs(&self, target: &Field, g: impl Fn(Fe) -> Fe) -> Self {
        Self::new(target, self.num.map_coeffs(&g), self.den.map_coeffs(&g)).expect("nonzero denominator")
    }

    pub fn format(&self, f: &Field) -> String {
        format!("({}) / ({}) dz", self.num.format(f), self.den.format(f))
    }
}

/// The Cartier operator. Writing `ω = Ñ/D^p dz` with `Ñ = N D^(p-1)`, the
/// result is `(sum_i c_{ip+p-1}^(1/p) z^i) / D dz` where `c_j` are the
/// coefficients of `Ñ`.
pub fn cartier(f: &Field, w: &DifferentialForm) -> DifferentialForm {
    let p = f.p() as usize;
    let lifted = w.num.mul(f, &w.den.pow(f, p as u64 - 1));
    let c = lifted.coeffs();
    let num: Vec<Fe> = (0..)
        .map(|i| i * p + p - 1)
        .take_while(|&j| j < c.len())
        .map(|j| f.frobenius_inverse(c[j]))
        .collect();
    DifferentialForm::new(f, Poly::new(num), w.den.clone()).expect("nonzero denominator")
}

/// Derivative criterion: for `ω = g dz`, logarithmic iff `g^(p-1) = -g^p`.
/// With `g = N D^(p-1) / D^p` this becomes `(N D^(p-1))^(p-1) = -N^p`.
pub fn derivative_criterion(f: &Field, w: &DifferentialForm) -> bool {
    let p = f.p() as u64;
    let lifted = w.num.mul(f, &w.den.pow(f, p - 1));
    lifted.nth_derivative(f, p as usize - 1) == w.num.pow(f, p).neg(f)
}

/// Residue criterion for forms with squarefree denominator and `deg N < deg D`:
/// all residues `N(x)/D'(x)` lie in `F_p`, i.e. `D | N^(p-1) - D'^(p-1)`.
/// Forms outside that class are reported as not logarithmic, which is correct
/// on the projective line.
pub fn residue_criterion(f: &Field, w: &DifferentialForm) -> bool {
    if w.is_zero() {
        return true;
    }
    if !w.den.is_squarefree(f) || w.num.deg() >= w.den.deg() {
        return false;
    }
    let p = f.p() as u64;
    let dprime = w.den.derivative(f);
    let lhs = w.num.pow_mod(f, p - 1, &w.den).expect("nonzero modulus");
    let rhs = dprime.pow_mod(f, p - 1, &w.den).expect("nonzero modulus");
    lhs == rhs
}

/// Whether `ω` is logarithmic, i.e. fixed by the Cartier operator. The
/// derivative criterion is evaluated as well and must agree.
pub fn is_logarithmic(f: &Field, w: &DifferentialForm) -> bool {
    let fixed = cartier(f, w) == *w;
    assert_eq!(
        fixed,
        derivative_criterion(f, w),
        "Cartier and derivative criteria disagree on {}",
        w.format(f)
    );
    fixed
}

/// `sum_i h_i dz / (z - x_i)` for distinct points and multiplicities prime to `p`.
pub fn log_derivative(f: &Field, points: &[(Fe, i64)]) -> Result<DifferentialForm> {
    let p = f.p() as i64;
    for (i, &(x, h)) in points.iter().enumerate() {
        ensure!(
            h.rem_euclid(p) != 0,
            Precondition,
            "multiplicity {h} at point {} is divisible by p",
            f.format(x)
        );
        ensure!(
            points[..i].iter().all(|&(y, _)| y != x),
            Precondition,
            "repeated point {}",
            f.format(x)
        );
    }
    let xs: Vec<Fe> = points.iter().map(|a| a.0).collect();
    let den = Poly::from_roots(f, &xs);
    let mut num = Poly::zero();
    for (i, &(_, h)) in points.iter().enumerate() {
        let others: Vec<Fe> = xs.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, &x)| x).collect();
        num = num.add(f, &Poly::from_roots(f, &others).scale(f, f.from_int(h)));
    }
    DifferentialForm::new(f, num, den)
}

/// `dg/g` for a nonzero polynomial `g`.
pub fn log_derivative_of(f: &Field, g: &Poly) -> Result<DifferentialForm> {
    ensure!(!g.is_zero(), Precondition, "logarithmic derivative of zero");
    DifferentialForm::new(f, g.derivative(f), g.clone())
}

/// Hurwitz-style summary: multiset of residues of a logarithmic form, checked
/// to have only simple poles with residues in `F_p`.
pub fn residue_classes(f: &Field, w: &DifferentialForm) -> Result<Vec<(Fe, u32)>> {
    let poles = w.poles_and_residues(f)?;
    let mut out = Vec::with_capacity(poles.len());
    for pole in poles {
        if pole.order != 1 {
            return Err(Error::Precondition(format!(
                "pole at {} has order {}",
                f.format(pole.point),
                pole.order
            )));
        }
        if !f.in_prime_field(pole.residue) {
            return Err(Error::Precondition(format!(
                "residue {} at {} is not in F_{}",
                f.format(pole.residue),
                f.format(pole.point),
                f.p()
            )));
        }
        out.push((pole.point, pole.residue.0));
    }
    Ok(out)
}
