//! `F_p`-spaces of logarithmic forms with a prescribed number of poles and a
//! single zero at infinity, and their validation.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{ensure, Error, Result};
use crate::field::{Fe, Field};
use crate::forms::{is_logarithmic, DifferentialForm};
use crate::poly::{fp_independent, Poly};

/// An `n`-dimensional `F_p`-space of forms, each nonzero member meant to have
/// `m + 1` simple poles and a single zero of order `m - 1` at infinity.
#[derive(Clone, Debug)]
pub struct LogFormSpace {
    field: Field,
    m: usize,
    basis: Vec<DifferentialForm>,
}

impl LogFormSpace {
    pub fn new(field: &Field, m: usize, basis: Vec<DifferentialForm>) -> Result<Self> {
        ensure!(m >= 1, InvalidParameter, "m must be at least 1");
        ensure!(!basis.is_empty(), InvalidParameter, "a space needs at least one basis form");
        Ok(LogFormSpace { field: field.clone(), m, basis })
    }

    pub fn field(&self) -> &Field {
        &self.field
    }
    pub fn m(&self) -> usize {
        self.m
    }
    /// Number of poles of each nonzero member, `m + 1`.
    pub fn pole_count(&self) -> usize {
        self.m + 1
    }
    pub fn n(&self) -> usize {
        self.basis.len()
    }
    pub fn basis(&self) -> &[DifferentialForm] {
        &self.basis
    }

    /// `sum_i c_i ω_i` for coefficients in `F_p`.
    pub fn combination(&self, coeffs: &[u32]) -> DifferentialForm {
        let f = &self.field;
        coeffs
            .iter()
            .zip(&self.basis)
            .filter(|(c, _)| **c != 0)
            .fold(DifferentialForm::zero(), |acc, (&c, w)| acc.add(f, &w.scale(f, Fe(c))))
    }

    /// The same space with coefficients pushed through a field embedding.
    pub fn map_field(&self, target: &Field, g: impl Fn(Fe) -> Fe) -> LogFormSpace {
        LogFormSpace {
            field: target.clone(),
            m: self.m,
            basis: self.basis.iter().map(|w| w.map_coeffs(target, &g)).collect(),
        }
    }
}

/// Representatives of the nonzero vectors of `F_p^n` up to `F_p^*`: the first
/// nonzero coordinate equals 1. There are `(p^n - 1)/(p - 1)` of them.
pub fn projective_combinations(p: u32, n: usize) -> Vec<Vec<u32>> {
    let total = (p as u64).pow(n as u32);
    (1..total)
        .filter_map(|idx| {
            let mut t = idx;
            let v: Vec<u32> = (0..n)
                .map(|_| {
                    let d = (t % p as u64) as u32;
                    t /= p as u64;
                    d
                })
                .collect();
            (v.iter().find(|&&c| c != 0) == Some(&1)).then_some(v)
        })
        .collect()
}

/// The defining property a combination failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    PoleCount,
    SimplePoles,
    OrderAtInfinity,
    Logarithmic,
}

impl Criterion {
    pub fn name(self) -> &'static str {
        match self {
            Criterion::PoleCount => "pole-count",
            Criterion::SimplePoles => "simple-poles",
            Criterion::OrderAtInfinity => "order-at-infinity",
            Criterion::Logarithmic => "logarithmic",
        }
    }
}

/// First violating combination, in the enumeration order of
/// [`projective_combinations`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FailureReport {
    pub combination: Vec<u32>,
    pub criterion: Criterion,
    pub detail: String,
}

/// Poles of one combination of the basis.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CombinationPoles {
    pub combination: Vec<u32>,
    pub poles: Vec<u32>,
}

/// Intersection counts `N_S = |∩_{i in S} poles(ω_i)|` for every nonempty set
/// `S` of basis indices, together with the inclusion-exclusion total.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PoleStatistics {
    pub subsets: Vec<(Vec<usize>, usize)>,
    pub total: usize,
}

impl PoleStatistics {
    pub fn count(&self, subset: &[usize]) -> Option<usize> {
        self.subsets.iter().find(|(s, _)| s == subset).map(|x| x.1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SpaceDiagnostics {
    pub p: u32,
    pub k: u32,
    pub m: usize,
    pub n: usize,
    /// Poles appearing in some basis form.
    pub total_poles: usize,
    /// Poles shared by all basis forms.
    pub common_poles: usize,
    pub statistics: PoleStatistics,
    pub combinations: Vec<CombinationPoles>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Validation {
    Valid(SpaceDiagnostics),
    Invalid(FailureReport),
}

impl Validation {
    pub fn is_valid(&self) -> bool {
        matches!(self, Validation::Valid(_))
    }
    pub fn diagnostics(&self) -> Option<&SpaceDiagnostics> {
        match self {
            Validation::Valid(d) => Some(d),
            Validation::Invalid(_) => None,
        }
    }
    pub fn failure(&self) -> Option<&FailureReport> {
        match self {
            Validation::Invalid(r) => Some(r),
            Validation::Valid(_) => None,
        }
    }
}

enum Check {
    Ok(Vec<Fe>),
    Fail(Criterion, String),
}

fn check_combination(space: &LogFormSpace, c: &[u32]) -> Result<Check> {
    let f = space.field();
    let w = space.combination(c);
    ensure!(
        !w.is_zero(),
        Precondition,
        "basis is F_p-dependent: combination {c:?} vanishes"
    );
    let poles = w.poles_and_residues(f)?;
    if poles.len() != space.pole_count() {
        return Ok(Check::Fail(
            Criterion::PoleCount,
            format!("{} poles, expected m + 1 = {}", poles.len(), space.pole_count()),
        ));
    }
    if let Some(pl) = poles.iter().find(|pl| pl.order != 1) {
        return Ok(Check::Fail(
            Criterion::SimplePoles,
            format!("pole at {} has order {}", f.format(pl.point), pl.order),
        ));
    }
    let ord = w.order_at_infinity().unwrap_or(i64::MAX);
    if ord != space.m as i64 - 1 {
        return Ok(Check::Fail(
            Criterion::OrderAtInfinity,
            format!("order {ord} at infinity, expected m - 1 = {}", space.m as i64 - 1),
        ));
    }
    if !is_logarithmic(f, &w) {
        return Ok(Check::Fail(Criterion::Logarithmic, "not fixed by the Cartier operator".into()));
    }
    Ok(Check::Ok(poles.iter().map(|pl| pl.point).collect()))
}

/// Distinct roots of every basis denominator.
fn basis_pole_sets(f: &Field, forms: &[DifferentialForm]) -> Result<Vec<Vec<Fe>>> {
    forms
        .iter()
        .map(|w| {
            if w.denominator().deg() <= 0 {
                return Ok(Vec::new());
            }
            Ok(w.denominator().split_roots(f)?.into_iter().map(|r| r.0).collect())
        })
        .collect()
}

/// Inclusion-exclusion table of pole-set intersections.
pub fn pole_statistics(f: &Field, forms: &[DifferentialForm]) -> Result<PoleStatistics> {
    let sets = basis_pole_sets(f, forms)?;
    Ok(statistics_from_sets(&sets))
}

fn statistics_from_sets(sets: &[Vec<Fe>]) -> PoleStatistics {
    let n = sets.len();
    let mut subsets = Vec::new();
    let mut total: i64 = 0;
    for mask in 1u64..(1u64 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let count = sets[idx[0]]
            .iter()
            .filter(|x| idx[1..].iter().all(|&j| sets[j].contains(x)))
            .count();
        total += if idx.len() % 2 == 1 { count as i64 } else { -(count as i64) };
        subsets.push((idx, count));
    }
    subsets.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then(a.0.cmp(&b.0)));
    let mut union: Vec<Fe> = sets.iter().flatten().copied().collect();
    union.sort();
    union.dedup();
    assert_eq!(total, union.len() as i64, "inclusion-exclusion total differs from the union");
    PoleStatistics { subsets, total: union.len() }
}

/// Checks every projective `F_p`-combination of the basis for `m + 1`
/// simple poles, a zero of order `m - 1` at infinity and logarithmicity.
///
/// On success the pole-count identities for valid spaces are asserted
/// (`m + 1 ≡ 0 mod p^(n-1)`, the total and common pole counts); a violation
/// there is reported as [`Error::Internal`].
pub fn validate_space(space: &LogFormSpace) -> Result<Validation> {
    let f = space.field();
    let p = f.p();
    let n = space.n();
    let combos = projective_combinations(p, n);
    let checks: Vec<Result<Check>> = combos.par_iter().map(|c| check_combination(space, c)).collect();
    let mut combinations = Vec::with_capacity(combos.len());
    for (c, chk) in combos.iter().zip(checks) {
        match chk? {
            Check::Fail(criterion, detail) => {
                return Ok(Validation::Invalid(FailureReport { combination: c.clone(), criterion, detail }))
            }
            Check::Ok(poles) => combinations.push(CombinationPoles {
                combination: c.clone(),
                poles: poles.iter().map(|x| x.0).collect(),
            }),
        }
    }
    let sets = basis_pole_sets(f, space.basis())?;
    let statistics = statistics_from_sets(&sets);
    let full: Vec<usize> = (0..n).collect();
    let common = statistics.count(&full).unwrap_or(0);
    let diag = SpaceDiagnostics {
        p,
        k: f.k(),
        m: space.m(),
        n,
        total_poles: statistics.total,
        common_poles: common,
        statistics,
        combinations,
    };
    assert_space_identities(space, &diag)?;
    Ok(Validation::Valid(diag))
}

fn assert_space_identities(space: &LogFormSpace, d: &SpaceDiagnostics) -> Result<()> {
    let f = space.field();
    let p = f.p() as u128;
    let n = d.n as u32;
    let m1 = (d.m + 1) as u128;
    let pn1 = p.pow(n - 1);
    let internal = |msg: String| Err(Error::Internal(msg));
    if m1 % pn1 != 0 {
        return internal(format!("validated space has m + 1 = {m1} not divisible by p^(n-1) = {pn1}"));
    }
    if d.total_poles as u128 * (p - 1) * pn1 != m1 * (p.pow(n) - 1) {
        return internal(format!("total pole count {} contradicts m + 1 = {m1}", d.total_poles));
    }
    if d.common_poles as u128 * pn1 != (p - 1).pow(n - 1) * m1 {
        return internal(format!("common pole count {} contradicts m + 1 = {m1}", d.common_poles));
    }
    // each basis form is u_i dz / D_i with constants u_i independent over F_p
    let us: Vec<Fe> = space.basis().iter().map(|w| w.numerator().coeff(0)).collect();
    if space.basis().iter().any(|w| w.numerator().deg() != 0) || !fp_independent(f, &us) {
        return internal("basis numerators are not F_p-independent constants".into());
    }
    Ok(())
}

/// Validates `space`, retrying over extensions `F_{p^(kj)}` for `j = 2, 3, ...`
/// up to `max_degree` when poles are not rational. Returns the validation and
/// the field it succeeded in.
pub fn validate_space_with_extension(space: &LogFormSpace, max_degree: u32) -> Result<(Validation, Field)> {
    match validate_space(space) {
        Err(Error::NeedsLargerField(msg)) => {
            let f = space.field();
            for j in 2.. {
                let k = f.k() * j;
                if k > max_degree {
                    return Err(Error::NeedsLargerField(msg));
                }
                let big = Field::new(f.p(), k)?;
                let emb = crate::field::Embedding::new(f, &big)?;
                let lifted = space.map_field(&big, |a| emb.map(a));
                match validate_space(&lifted) {
                    Err(Error::NeedsLargerField(_)) => continue,
                    other => return other.map(|v| (v, big)),
                }
            }
            unreachable!()
        }
        other => other.map(|v| (v, space.field().clone())),
    }
}

/// Result of building the two forms attached to a pair `(A, B)`.
#[derive(Clone, Debug)]
pub struct PairForms {
    pub omega1: DifferentialForm,
    pub omega2: DifferentialForm,
    /// Common degree `λ` of all `iA + jB`.
    pub degree: usize,
    /// `((A^p - A B^(p-1))^(p-1))^((p-1)) = -1`.
    pub condition_holds: bool,
    /// Both forms are fixed by the Cartier operator.
    pub logarithmic: bool,
}

impl PairForms {
    pub fn space(&self, f: &Field) -> Result<LogFormSpace> {
        let p = f.p() as usize;
        LogFormSpace::new(f, p * self.degree - 1, vec![self.omega1.clone(), self.omega2.clone()])
    }
}

/// `A^p B - A B^p`.
pub fn frobenius_determinant(f: &Field, a: &Poly, b: &Poly) -> Poly {
    let p = f.p() as u64;
    a.pow(f, p).mul(f, b).sub(f, &a.mul(f, &b.pow(f, p)))
}

/// Degree of `iA + jB` for every projective `[i, j]`, in enumeration order.
pub fn pair_degrees(f: &Field, a: &Poly, b: &Poly) -> Vec<i64> {
    projective_combinations(f.p(), 2)
        .iter()
        .map(|c| a.scale(f, Fe(c[0])).add(f, &b.scale(f, Fe(c[1]))).deg())
        .collect()
}

/// The condition `((A^p - A B^(p-1))^(p-1))^((p-1)) = -1` on a pair.
pub fn pair_condition(f: &Field, a: &Poly, b: &Poly) -> bool {
    let p = f.p() as u64;
    let g = a.pow(f, p).sub(f, &a.mul(f, &b.pow(f, p - 1)));
    g.pow(f, p - 1).nth_derivative(f, p as usize - 1) == Poly::constant(f.neg(Fe::ONE))
}

/// `ω_1 = A dz/(A^p B - A B^p)`, `ω_2 = B dz/(A^p B - A B^p)`. Requires all
/// `iA + jB` to share one degree. The pair condition and the logarithmicity
/// of both forms are computed independently and must agree.
pub fn forms_from_ab(f: &Field, a: &Poly, b: &Poly) -> Result<PairForms> {
    let det = frobenius_determinant(f, a, b);
    ensure!(!det.is_zero(), Precondition, "A and B are F_p-dependent");
    let degs = pair_degrees(f, a, b);
    ensure!(
        degs.iter().all(|&d| d == degs[0]) && degs[0] >= 1,
        Precondition,
        "the combinations iA + jB do not share one positive degree: {degs:?}"
    );
    let omega1 = DifferentialForm::new(f, a.clone(), det.clone())?;
    let omega2 = DifferentialForm::new(f, b.clone(), det)?;
    let condition_holds = pair_condition(f, a, b);
    let logarithmic = is_logarithmic(f, &omega1) && is_logarithmic(f, &omega2);
    if condition_holds != logarithmic {
        return Err(Error::Internal(format!(
            "pair condition ({condition_holds}) and logarithmicity ({logarithmic}) disagree"
        )));
    }
    Ok(PairForms { omega1, omega2, degree: degs[0] as usize, condition_holds, logarithmic })
}

/// Recovers the pair `(A, B)` of a validated two-dimensional space from its
/// basis `(ω_1, ω_2)`: with `ω_1 = u dz/D_1`, `ω_2 = v dz/D_2`, let `P_0` be the
/// product over poles of `ω_2` that are not poles of `ω_1` and `P_p` the
/// product over poles of `ω_1` not poles of `ω_2`. With `a = u/v` and
/// `α^p v (a^p - a) = 1`, the pair is `A = α a P_0`, `B = α P_p`.
pub fn extract_ab(space: &LogFormSpace) -> Result<(Poly, Poly)> {
    ensure!(space.n() == 2, Precondition, "pair extraction needs a two-dimensional space");
    let f = space.field();
    let p = f.p() as u64;
    let validation = validate_space(space)?;
    if let Validation::Invalid(r) = validation {
        return Err(Error::Precondition(format!(
            "space is not valid: combination {:?} fails {}",
            r.combination,
            r.criterion.name()
        )));
    }
    let (w1, w2) = (&space.basis()[0], &space.basis()[1]);
    let sets = basis_pole_sets(f, space.basis())?;
    let only2: Vec<Fe> = sets[1].iter().filter(|x| !sets[0].contains(x)).copied().collect();
    let only1: Vec<Fe> = sets[0].iter().filter(|x| !sets[1].contains(x)).copied().collect();
    let p0 = Poly::from_roots(f, &only2);
    let pp = Poly::from_roots(f, &only1);
    let u = w1.numerator().coeff(0);
    let v = w2.numerator().coeff(0);
    let a = f.div(u, v)?;
    if f.in_prime_field(a) {
        return Err(Error::Internal("residue ratio of a valid space lies in F_p".into()));
    }
    let denom = f.mul(v, f.sub(f.pow(a, p), a));
    let alpha = f.frobenius_inverse(f.inv(denom)?);
    let big_a = p0.scale(f, f.mul(alpha, a));
    let big_b = pp.scale(f, alpha);
    let lambda = space.pole_count() / p as usize;
    let degs = pair_degrees(f, &big_a, &big_b);
    if degs.iter().any(|&d| d != lambda as i64) {
        return Err(Error::Internal(format!("extracted pair has degrees {degs:?}, expected {lambda}")));
    }
    let rebuilt = forms_from_ab(f, &big_a, &big_b)?;
    if rebuilt.omega1 != *w1 || rebuilt.omega2 != *w2 {
        return Err(Error::Internal("extracted pair does not reproduce the basis".into()));
    }
    Ok((big_a, big_b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projective_counts() {
        for (p, n) in [(2, 1), (2, 3), (3, 2), (5, 2), (3, 3)] {
            let c = projective_combinations(p, n);
            assert_eq!(c.len() as u32, (p.pow(n as u32) - 1) / (p - 1));
        }
        assert_eq!(projective_combinations(3, 2)[..3], [vec![1, 0], vec![0, 1], vec![1, 1]]);
    }

    #[test]
    fn one_dimensional_space_from_log_derivative() {
        let f = Field::new(3, 1).unwrap();
        // z^3 - z: all of F_3 as poles, residues 1/(3z^2-1) = -1
        let g = Poly::new(vec![Fe(0), Fe(2), Fe(0), Fe(1)]);
        let w = crate::forms::log_derivative_of(&f, &g).unwrap();
        let s = LogFormSpace::new(&f, 2, vec![w]).unwrap();
        let v = validate_space(&s).unwrap();
        let d = v.diagnostics().unwrap();
        assert_eq!((d.total_poles, d.common_poles), (3, 3));
    }

    #[test]
    fn dependent_basis_is_an_error() {
        let f = Field::new(3, 1).unwrap();
        let g = Poly::new(vec![Fe(0), Fe(2), Fe(0), Fe(1)]);
        let w = crate::forms::log_derivative_of(&f, &g).unwrap();
        let s = LogFormSpace::new(&f, 2, vec![w.clone(), w.scale(&f, Fe(2))]).unwrap();
        assert!(matches!(validate_space(&s), Err(Error::Precondition(_))));
    }

    #[test]
    fn disjoint_pole_sets_fail_pole_count() {
        // two valid one-dimensional pieces with disjoint poles: ω1 + ω2 has 6 poles
        let f = Field::new(3, 2).unwrap();
        let t = f.generator_t();
        let g1 = Poly::new(vec![Fe(0), Fe(2), Fe(0), Fe(1)]);
        let g2 = g1.taylor_shift(&f, t);
        let w1 = crate::forms::log_derivative_of(&f, &g1).unwrap();
        let w2 = crate::forms::log_derivative_of(&f, &g2).unwrap();
        let s = LogFormSpace::new(&f, 2, vec![w1, w2]).unwrap();
        let v = validate_space(&s).unwrap();
        let r = v.failure().unwrap();
        assert_eq!(r.criterion, Criterion::PoleCount);
        assert_eq!(r.combination, vec![1, 1]);
    }
}
