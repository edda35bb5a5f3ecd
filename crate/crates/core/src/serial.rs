//! Portable JSON records for field elements, polynomials, forms, spaces,
//! residue data and Witt elements.

use serde::{Deserialize, Serialize};

use crate::constructions::HurwitzDatum;
use crate::error::{ensure, Error, Result};
use crate::field::{Fe, Field};
use crate::forms::DifferentialForm;
use crate::poly::Poly;
use crate::space::LogFormSpace;
use crate::witt::{WittElement, WittRing};

/// `{p, k, coeffs}`: power-basis coordinates, each in `0..p`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementRecord {
    pub p: u32,
    pub k: u32,
    pub coeffs: Vec<u32>,
}

/// Low degree first.
pub type PolynomialRecord = Vec<ElementRecord>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormRecord {
    pub numerator: PolynomialRecord,
    pub denominator: PolynomialRecord,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceRecord {
    pub p: u32,
    pub k: u32,
    pub m: usize,
    pub n: usize,
    /// Non-leading coefficients of the field modulus; the shipped table is
    /// used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulus: Option<Vec<u32>>,
    pub basis: Vec<FormRecord>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatumRecord {
    pub p: u32,
    pub classes: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WittRecord {
    pub p: u32,
    pub k: u32,
    #[serde(rename = "N")]
    pub n: u32,
    pub ramified: bool,
    pub coords: Vec<u64>,
}

pub fn element_to_record(f: &Field, x: Fe) -> ElementRecord {
    ElementRecord { p: f.p(), k: f.k(), coeffs: f.coeffs(x) }
}

pub fn element_from_record(f: &Field, r: &ElementRecord) -> Result<Fe> {
    ensure!(
        r.p == f.p() && r.k == f.k(),
        FieldMismatch,
        "record is over F_{}^{}, expected F_{}^{}",
        r.p,
        r.k,
        f.p(),
        f.k()
    );
    ensure!(r.coeffs.iter().all(|&c| c < f.p()), Parse, "coefficient out of range in {:?}", r.coeffs);
    f.from_coeffs(&r.coeffs)
}

pub fn poly_to_record(f: &Field, a: &Poly) -> PolynomialRecord {
    a.coeffs().iter().map(|&c| element_to_record(f, c)).collect()
}

pub fn poly_from_record(f: &Field, r: &[ElementRecord]) -> Result<Poly> {
    Ok(Poly::new(r.iter().map(|e| element_from_record(f, e)).collect::<Result<_>>()?))
}

pub fn form_to_record(f: &Field, w: &DifferentialForm) -> FormRecord {
    FormRecord { numerator: poly_to_record(f, w.numerator()), denominator: poly_to_record(f, w.denominator()) }
}

pub fn form_from_record(f: &Field, r: &FormRecord) -> Result<DifferentialForm> {
    DifferentialForm::new(f, poly_from_record(f, &r.numerator)?, poly_from_record(f, &r.denominator)?)
}

pub fn space_to_record(s: &LogFormSpace) -> SpaceRecord {
    let f = s.field();
    let shipped = crate::field::shipped_modulus(f.p(), f.k());
    SpaceRecord {
        p: f.p(),
        k: f.k(),
        m: s.m(),
        n: s.n(),
        modulus: (shipped.as_deref() != Some(f.modulus())).then(|| f.modulus().to_vec()),
        basis: s.basis().iter().map(|w| form_to_record(f, w)).collect(),
    }
}

pub fn space_from_record(r: &SpaceRecord) -> Result<LogFormSpace> {
    let f = match &r.modulus {
        Some(m) => Field::with_modulus(r.p, m)?,
        None => Field::new(r.p, r.k)?,
    };
    ensure!(f.k() == r.k, Parse, "modulus degree {} does not match k = {}", f.k(), r.k);
    ensure!(r.basis.len() == r.n, Parse, "n = {} but {} basis forms", r.n, r.basis.len());
    let basis = r.basis.iter().map(|b| form_from_record(&f, b)).collect::<Result<Vec<_>>>()?;
    LogFormSpace::new(&f, r.m, basis)
}

pub fn datum_to_record(d: &HurwitzDatum) -> DatumRecord {
    DatumRecord { p: d.p, classes: d.classes.clone() }
}

pub fn datum_from_record(r: &DatumRecord) -> Result<HurwitzDatum> {
    HurwitzDatum::new(r.p, r.classes.clone())
}

pub fn witt_to_record(w: &WittRing, a: &WittElement) -> WittRecord {
    WittRecord { p: w.p(), k: w.k(), n: w.precision(), ramified: false, coords: a.coords.clone() }
}

pub fn witt_from_record(w: &WittRing, r: &WittRecord) -> Result<WittElement> {
    ensure!(
        r.p == w.p() && r.k == w.k() && r.n == w.precision(),
        FieldMismatch,
        "record is over W(F_{}^{})/p^{}, expected W(F_{}^{})/p^{}",
        r.p,
        r.k,
        r.n,
        w.p(),
        w.k(),
        w.precision()
    );
    ensure!(!r.ramified, Parse, "ramified elements are not accepted here");
    ensure!(r.coords.iter().all(|&c| c < w.modulus()), Parse, "coordinate out of range");
    w.from_coords(&r.coords)
}

/// Parses JSON, mapping failures to [`Error::Parse`].
pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::construct_p2;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn element_and_poly_round_trip(p_idx in 0usize..4, k in 1u32..4, coeffs in proptest::collection::vec(any::<u32>(), 0..6)) {
            let p = [2, 3, 5, 7][p_idx];
            let f = Field::new(p, k).unwrap();
            let a = Poly::new(coeffs.iter().map(|&c| Fe(c % f.order())).collect());
            let rec = poly_to_record(&f, &a);
            let text = serde_json::to_string(&rec).unwrap();
            let back: PolynomialRecord = from_json(&text).unwrap();
            prop_assert_eq!(poly_from_record(&f, &back).unwrap(), a);
        }

        #[test]
        fn witt_round_trip(seed in any::<u64>()) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let f = Field::new(3, 2).unwrap();
            let w = WittRing::new(&f, 6).unwrap();
            let a = w.random(&mut rng);
            let text = serde_json::to_string(&witt_to_record(&w, &a)).unwrap();
            prop_assert_eq!(witt_from_record(&w, &from_json(&text).unwrap()).unwrap(), a);
        }

        #[test]
        fn datum_round_trip(classes in proptest::collection::vec(1u32..5, 1..8)) {
            let sum: u32 = classes.iter().sum();
            let mut classes = classes;
            let fix = (5 - sum % 5) % 5;
            if fix != 0 { classes.push(fix); }
            let d = HurwitzDatum::new(5, classes).unwrap();
            let text = serde_json::to_string(&datum_to_record(&d)).unwrap();
            prop_assert_eq!(datum_from_record(&from_json(&text).unwrap()).unwrap(), d);
        }
    }

    #[test]
    fn space_round_trip() {
        let f = Field::new(2, 2).unwrap();
        let c = construct_p2(&f, &[Fe::ONE], f.generator_t(), Fe::ONE).unwrap();
        let text = serde_json::to_string(&space_to_record(&c.space)).unwrap();
        assert!(!text.contains("modulus"));
        let back = space_from_record(&from_json(&text).unwrap()).unwrap();
        assert_eq!(back.basis(), c.space.basis());
        assert_eq!(back.m(), c.space.m());
    }

    #[test]
    fn rejects_mismatched_records() {
        let f = Field::new(3, 2).unwrap();
        let r = ElementRecord { p: 3, k: 1, coeffs: vec![1] };
        assert!(matches!(element_from_record(&f, &r), Err(Error::FieldMismatch(_))));
        let r = ElementRecord { p: 3, k: 2, coeffs: vec![1, 3] };
        assert!(matches!(element_from_record(&f, &r), Err(Error::Parse(_))));
    }
}
