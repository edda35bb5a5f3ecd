//! Explicit families of spaces: the characteristic-two construction from
//! prescribed common poles, additive polynomials and the spaces built from
//! them, étale pullbacks, and Hurwitz data with the `z = Q(t)` substitution.

use serde::Serialize;

use crate::error::{ensure, Error, Result};
use crate::field::{Fe, Field};
use crate::forms::{log_derivative, residue_classes, DifferentialForm};
use crate::poly::{fp_independent, Poly};
use crate::space::{validate_space, LogFormSpace, Validation};

fn distinct(xs: &[Fe]) -> bool {
    let mut v = xs.to_vec();
    v.sort();
    v.windows(2).all(|w| w[0] != w[1])
}

/// `q` monic of degree `n` with `q(x_i)^2 = u x_i`, the polynomial
/// `f = q^2 + u z`, and the remaining roots of `f`.
#[derive(Clone, Debug)]
pub struct P2Certificate {
    pub q: Poly,
    pub f: Poly,
    pub other_roots: Vec<Fe>,
}

/// Solves for `q` by interpolation (a Vandermonde system in the `x_i`) and
/// splits `f = q^2 + u z`; `f' = u` and `f(x_i) = 0` are asserted.
pub fn p2_certificate(f: &Field, xs: &[Fe], u: Fe) -> Result<P2Certificate> {
    ensure!(f.p() == 2, Precondition, "this construction is specific to p = 2");
    ensure!(!xs.is_empty(), InvalidParameter, "need at least one common pole");
    ensure!(distinct(xs), Precondition, "common poles must be pairwise distinct");
    ensure!(!u.is_zero(), Precondition, "u must be nonzero");
    let n = xs.len();
    let values: Vec<Fe> = xs
        .iter()
        .map(|&x| f.sub(f.frobenius_inverse(f.mul(u, x)), f.pow(x, n as u64)))
        .collect();
    let q = Poly::interpolate(f, xs, &values)?.add(f, &Poly::monomial(Fe::ONE, n));
    let big_f = q.mul(f, &q).add(f, &Poly::monomial(u, 1));
    if big_f.derivative(f) != Poly::constant(u) {
        return Err(Error::Internal("f' differs from u".into()));
    }
    if xs.iter().any(|&x| !big_f.eval(f, x).is_zero()) {
        return Err(Error::Internal("f does not vanish at a prescribed pole".into()));
    }
    let rest = big_f.exact_div(f, &Poly::from_roots(f, xs))?;
    let other_roots: Vec<Fe> = rest.split_roots(f)?.into_iter().map(|r| r.0).collect();
    Ok(P2Certificate { q, f: big_f, other_roots })
}

/// Two-dimensional space in characteristic 2 whose basis forms share the
/// poles `x_1..x_n`.
#[derive(Clone, Debug)]
pub struct P2Construction {
    pub space: LogFormSpace,
    pub q: Poly,
    pub r: Poly,
    pub f1: Poly,
    pub f2: Poly,
    pub xs: Vec<Fe>,
    pub ys: Vec<Fe>,
    pub zs: Vec<Fe>,
}

/// `ω_1 = u dz/f_1`, `ω_2 = v dz/f_2` with `f_1 = q^2 + u z`, `f_2 = r^2 + v z`,
/// where `q(x_i)^2 = u x_i` and `r(x_i)^2 = v x_i`. The result has `3n`
/// distinct poles: the `x_i`, the other roots `y_i` of `f_1` and `z_i` of `f_2`.
pub fn construct_p2(f: &Field, xs: &[Fe], u: Fe, v: Fe) -> Result<P2Construction> {
    ensure!(f.p() == 2, Precondition, "this construction is specific to p = 2");
    ensure!(!v.is_zero(), Precondition, "v must be nonzero");
    ensure!(u != v, Precondition, "u and v must differ");
    let c1 = p2_certificate(f, xs, u)?;
    let c2 = p2_certificate(f, xs, v)?;
    let mut all = xs.to_vec();
    all.extend(&c1.other_roots);
    all.extend(&c2.other_roots);
    if all.len() != 3 * xs.len() || !distinct(&all) {
        return Err(Error::Internal("the 3n poles are not pairwise distinct".into()));
    }
    let w1 = DifferentialForm::constant_over(f, u, &c1.f)?;
    let w2 = DifferentialForm::constant_over(f, v, &c2.f)?;
    let space = LogFormSpace::new(f, 2 * xs.len() - 1, vec![w1, w2])?;
    Ok(P2Construction {
        space,
        q: c1.q,
        r: c2.q,
        f1: c1.f,
        f2: c2.f,
        xs: xs.to_vec(),
        ys: c1.other_roots,
        zs: c2.other_roots,
    })
}

/// All `F_p`-combinations `sum ε_i a_i`, indexed by the base-`p` digits of
/// the position (first element varies fastest).
pub fn fp_span(f: &Field, a: &[Fe]) -> Vec<Fe> {
    let p = f.p() as u64;
    let count = p.pow(a.len() as u32);
    (0..count)
        .map(|idx| {
            let mut t = idx;
            a.iter().fold(Fe::ZERO, |acc, &ai| {
                let e = (t % p) as i64;
                t /= p;
                f.add(acc, f.mul(f.from_int(e), ai))
            })
        })
        .collect()
}

/// `prod_{ε in F_p^s} (z - sum ε_i a_i)`; `z` for an empty list. The result is
/// additive, of the shape `αz + P(z^p)`; both facts are asserted.
pub fn additive_poly(f: &Field, a: &[Fe]) -> Result<Poly> {
    let roots = fp_span(f, a);
    let g = Poly::from_roots(f, &roots);
    let p = f.p() as usize;
    for (e, c) in g.coeffs().iter().enumerate() {
        let mut pe = 1;
        while pe < e {
            pe *= p;
        }
        if !c.is_zero() && pe != e {
            return Err(Error::Internal(format!("additive polynomial has a term of degree {e}")));
        }
    }
    let q = f.order() as u64;
    for i in 0..16u64 {
        let x = Fe(((i * 7919 + 3) % q) as u32);
        let y = Fe(((i * 104729 + 11) % q) as u32);
        if g.eval(f, f.add(x, y)) != f.add(g.eval(f, x), g.eval(f, y)) {
            return Err(Error::Internal("additive polynomial fails additivity".into()));
        }
    }
    Ok(g)
}

/// Space built from `F_p`-independent `a_1..a_n`; see [`matignon_space`].
#[derive(Clone, Debug)]
pub struct AdditiveConstruction {
    pub space: LogFormSpace,
    pub a: Vec<Fe>,
    pub u: Vec<Fe>,
}

/// `ω_j = u_j dz / prod_{ε_j != 0} (z - sum ε_i a_i)` with
/// `u_j = -α_j Ad_j(a_j)^(p-2)`, where `Ad_j` is the additive polynomial of the
/// `a_i` with `i != j` and `α_j` its linear coefficient. The residue of `ω_j`
/// at `sum ε_i a_i` is `ε_j` (asserted), and `m + 1 = p^(n-1)(p-1)`.
pub fn matignon_space(f: &Field, a: &[Fe]) -> Result<AdditiveConstruction> {
    let p = f.p() as u64;
    let n = a.len();
    ensure!(n >= 1, InvalidParameter, "need at least one generator");
    ensure!(
        p.pow(n as u32 - 1) * (p - 1) >= 2,
        InvalidParameter,
        "p = 2 with a single generator gives a one-pole form"
    );
    ensure!(fp_independent(f, a), Precondition, "the a_i are F_p-dependent");
    let span = fp_span(f, a);
    let mut basis = Vec::with_capacity(n);
    let mut us = Vec::with_capacity(n);
    for j in 0..n {
        let others: Vec<Fe> = a.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, &x)| x).collect();
        let ad = additive_poly(f, &others)?;
        let alpha = ad.coeff(1);
        let u = f.neg(f.mul(alpha, f.pow(ad.eval(f, a[j]), p - 2)));
        let poles: Vec<Fe> = span
            .iter()
            .enumerate()
            .filter(|(idx, _)| (*idx as u64 / p.pow(j as u32)) % p != 0)
            .map(|(_, &x)| x)
            .collect();
        let w = DifferentialForm::constant_over(f, u, &Poly::from_roots(f, &poles))?;
        for pole in w.poles_and_residues(f)? {
            let idx = span.iter().position(|&x| x == pole.point).expect("pole in span");
            let eps = (idx as u64 / p.pow(j as u32)) % p;
            if pole.order != 1 || pole.residue != Fe(eps as u32) {
                return Err(Error::Internal(format!("residue of ω_{} at {} is not ε_{}", j + 1, f.format(pole.point), j + 1)));
            }
        }
        basis.push(w);
        us.push(u);
    }
    if !fp_independent(f, &us) {
        return Err(Error::Internal("the u_j are F_p-dependent".into()));
    }
    let m = (p.pow(n as u32 - 1) * (p - 1) - 1) as usize;
    Ok(AdditiveConstruction { space: LogFormSpace::new(f, m, basis)?, a: a.to_vec(), u: us })
}

/// `Φ(t) = α t + P(t^p)`.
pub fn etale_map(f: &Field, alpha: Fe, big_p: &Poly) -> Poly {
    let p = f.p() as usize;
    let mut c = vec![Fe::ZERO; (big_p.degree().unwrap_or(0) * p).max(1) + 1];
    for (i, &x) in big_p.coeffs().iter().enumerate() {
        c[i * p] = f.add(c[i * p], x);
    }
    c[1] = f.add(c[1], alpha);
    Poly::new(c)
}

#[derive(Clone, Debug)]
pub struct Pullback {
    pub map: Poly,
    pub space: LogFormSpace,
    pub validation: Validation,
}

/// Pulls every basis form back along `Φ(t) = αt + P(t^p)` (so `Φ' = α` and
/// `Φ^*(g dz) = α g(Φ) dt`) and validates the result with
/// `m' + 1 = (m + 1) deg Φ`.
pub fn pullback_etale(space: &LogFormSpace, alpha: Fe, big_p: &Poly) -> Result<Pullback> {
    let f = space.field();
    ensure!(!alpha.is_zero(), Precondition, "α must be nonzero for Φ to be étale");
    let phi = etale_map(f, alpha, big_p);
    let deg = phi.degree().unwrap_or(0);
    let basis: Vec<DifferentialForm> = space.basis().iter().map(|w| w.pullback(f, &phi)).collect();
    let m = space.pole_count() * deg - 1;
    let pulled = LogFormSpace::new(f, m, basis)?;
    let validation = validate_space(&pulled)?;
    Ok(Pullback { map: phi, space: pulled, validation })
}

/// Residue classes `h_i in 1..p-1` summing to zero mod `p`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HurwitzDatum {
    pub p: u32,
    pub classes: Vec<u32>,
}

impl HurwitzDatum {
    pub fn new(p: u32, classes: Vec<u32>) -> Result<Self> {
        ensure!(crate::field::is_prime(p), InvalidParameter, "p = {p} is not prime");
        ensure!(classes.len() >= 2, InvalidParameter, "a datum needs at least two classes");
        ensure!(
            classes.iter().all(|&h| h >= 1 && h < p),
            Precondition,
            "classes must lie in 1..{}",
            p - 1
        );
        let sum: u64 = classes.iter().map(|&h| h as u64).sum();
        ensure!(sum % p as u64 == 0, Precondition, "classes sum to {sum}, not 0 mod {p}");
        Ok(HurwitzDatum { p, classes })
    }

    /// `m + 1`, the number of poles.
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }
}

/// A logarithmic form with simple poles, read as points with residue classes.
#[derive(Clone, Debug)]
pub struct HurwitzRealization {
    pub datum: HurwitzDatum,
    pub points: Vec<Fe>,
    pub form: DifferentialForm,
}

/// Reads the residue classes of a logarithmic form with simple poles and no
/// pole at infinity. Points come in increasing element index.
pub fn hurwitz_from_form(f: &Field, w: &DifferentialForm) -> Result<HurwitzRealization> {
    ensure!(!w.is_zero(), Precondition, "the zero form has no datum");
    ensure!(
        w.order_at_infinity().is_some_and(|o| o >= 0),
        Precondition,
        "form has a pole at infinity"
    );
    let classes = residue_classes(f, w)?;
    let sum: u64 = classes.iter().map(|c| c.1 as u64).sum();
    if sum % f.p() as u64 != 0 {
        return Err(Error::Internal("residues do not sum to zero".into()));
    }
    let datum = HurwitzDatum::new(f.p(), classes.iter().map(|c| c.1).collect())?;
    Ok(HurwitzRealization { datum, points: classes.iter().map(|c| c.0).collect(), form: w.clone() })
}

/// Substitutes `z = Q(t)` into `ω = sum h_i dz/(z - x_i)`, requiring
/// `Q' | prod (Q - x_i)^(h_i)`. The residue at a point `t_0` over `x_i` is
/// `h_i e` with `e` the multiplicity of `t_0` in `Q - x_i`, which is asserted;
/// points whose residue vanishes drop out. The output datum lists fibres in
/// the order of the input points.
pub fn hurwitz_substitution(f: &Field, points: &[(Fe, u32)], q: &Poly) -> Result<HurwitzRealization> {
    let p = f.p();
    let base: Vec<(Fe, i64)> = points.iter().map(|&(x, h)| (x, h as i64)).collect();
    let w = log_derivative(f, &base)?;
    let dq = q.derivative(f);
    ensure!(!dq.is_zero(), Precondition, "Q' vanishes, the substitution is not separable");
    let composed = points.iter().fold(Poly::one(), |acc, &(x, h)| {
        acc.mul(f, &q.sub(f, &Poly::constant(x)).pow(f, h as u64))
    });
    ensure!(dq.divides(f, &composed), Precondition, "Q' does not divide f(Q(t))");
    let pulled = w.pullback(f, q);
    let mut out_points = Vec::new();
    let mut out_classes = Vec::new();
    for &(x, h) in points {
        let fibre = q.sub(f, &Poly::constant(x)).split_roots(f)?;
        for (t0, e) in fibre {
            let res = (h as u64 * e as u64 % p as u64) as u32;
            if res != 0 {
                if out_points.contains(&t0) {
                    return Err(Error::Precondition("fibres of distinct poles meet".into()));
                }
                out_points.push(t0);
                out_classes.push(res);
            }
        }
    }
    let read = residue_classes(f, &pulled)
        .map_err(|e| Error::Precondition(format!("substituted form is not of the expected shape: {e}")))?;
    let mut expected: Vec<(Fe, u32)> = out_points.iter().copied().zip(out_classes.iter().copied()).collect();
    expected.sort();
    if read != expected {
        return Err(Error::Internal("residues of the substituted form differ from h_i times ramification".into()));
    }
    // z = t^d with a pole at 0: datum (d h_0, h_1 x d, ...)
    let is_monomial = q.coeffs().iter().filter(|c| !c.is_zero()).count() == 1 && q.is_monic();
    if is_monomial && points.first().is_some_and(|pt| pt.0.is_zero()) {
        let d = q.degree().unwrap_or(0) as u64;
        let mut predicted = vec![(points[0].1 as u64 * d % p as u64) as u32];
        for &(_, h) in &points[1..] {
            predicted.extend(std::iter::repeat(h).take(d as usize));
        }
        predicted.retain(|&c| c != 0);
        if predicted != out_classes {
            return Err(Error::Internal("monomial substitution datum differs from the prediction".into()));
        }
    }
    let datum = HurwitzDatum::new(p, out_classes)?;
    Ok(HurwitzRealization { datum, points: out_points, form: pulled })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p2_worked_example() {
        let f = Field::new(2, 2).unwrap();
        let t = f.generator_t();
        let c = construct_p2(&f, &[Fe::ONE], t, Fe::ONE).unwrap();
        assert_eq!(c.q, Poly::new(vec![t, Fe::ONE]));
        assert_eq!(c.f1, Poly::new(vec![f.add(t, Fe::ONE), t, Fe::ONE]));
        assert_eq!(c.ys, vec![f.add(t, Fe::ONE)]);
        assert_eq!(c.zs, vec![Fe::ZERO]);
        assert!(validate_space(&c.space).unwrap().is_valid());
    }

    #[test]
    fn additive_worked_examples() {
        let f = Field::new(2, 2).unwrap();
        let t = f.generator_t();
        // z (z - 1) (z - t) (z - t - 1) = z^4 - z over F_4
        let g = additive_poly(&f, &[Fe::ONE, t]).unwrap();
        assert_eq!(g, Poly::new(vec![Fe(0), Fe(1), Fe(0), Fe(0), Fe(1)]));
        assert_eq!(additive_poly(&f, &[]).unwrap(), Poly::x());
    }

    #[test]
    fn additive_p2_n2_matches_closed_form() {
        let f = Field::new(2, 2).unwrap();
        let (a1, a2) = (Fe::ONE, f.generator_t());
        let c = matignon_space(&f, &[a1, a2]).unwrap();
        let expect = DifferentialForm::constant_over(&f, a2, &Poly::from_roots(&f, &[a1, f.add(a1, a2)])).unwrap();
        assert_eq!(c.space.basis()[0], expect);
        assert!(validate_space(&c.space).unwrap().is_valid());
    }

    #[test]
    fn dependent_generators_rejected() {
        let f = Field::new(3, 2).unwrap();
        assert!(matches!(matignon_space(&f, &[Fe(1), Fe(2)]), Err(Error::Precondition(_))));
    }

    #[test]
    fn datum_precondition() {
        assert!(HurwitzDatum::new(3, vec![1, 1, 2]).is_err());
        assert!(HurwitzDatum::new(3, vec![1, 1, 1]).is_ok());
    }

    #[test]
    fn monomial_substitution_example() {
        // p = 5, base poles 0, 1, 3 with classes (1, 1, 3); z = t^2 needs sqrt(3)
        let f5 = Field::new(5, 1).unwrap();
        let base = [(Fe(0), 1), (Fe(1), 1), (Fe(3), 3)];
        assert!(matches!(
            hurwitz_substitution(&f5, &base, &Poly::monomial(Fe::ONE, 2)),
            Err(Error::NeedsLargerField(_))
        ));
        let f25 = Field::new(5, 2).unwrap();
        let r = hurwitz_substitution(&f25, &base, &Poly::monomial(Fe::ONE, 2)).unwrap();
        assert_eq!(r.datum.classes, vec![2, 1, 1, 3, 3]);
    }

    #[test]
    fn datum_of_simple_forms() {
        let f = Field::new(3, 1).unwrap();
        let w = DifferentialForm::new(&f, Poly::one(), Poly::new(vec![Fe(2), Fe(0), Fe(1)])).unwrap();
        assert_eq!(hurwitz_from_form(&f, &w).unwrap().datum.classes, vec![2, 1]);
        let w = log_derivative(&f, &[(Fe(0), 1), (Fe(1), -1)]).unwrap();
        assert_eq!(hurwitz_from_form(&f, &w).unwrap().datum.classes, vec![1, 2]);
    }
}
