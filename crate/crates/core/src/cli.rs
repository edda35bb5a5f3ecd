//! Command-line surface. Every run prints JSON lines: first the parameter
//! block, then one or more result records. Exit status is 0 when a verdict
//! is reached, 1 on precondition or input errors and 2 on internal failures.

use std::io::{Read, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::constructions::{construct_p2, hurwitz_from_form, hurwitz_substitution, matignon_space, pullback_etale, HurwitzDatum};
use crate::error::{Error, Result};
use crate::field::{Fe, Field};
use crate::forms::{cartier, derivative_criterion, is_logarithmic, residue_criterion, DifferentialForm};
use crate::instances;
use crate::lemma::{lemma210_cases, lemma210_verify};
use crate::poly::Poly;
use crate::search::{
    hurwitz_search, space_search_dim2, space_search_size, theorem29_verify, Normalization, SearchMode, SearchOptions,
    LONG_RUN_THRESHOLD,
};
use crate::serial::{
    datum_to_record, element_to_record, form_from_record, form_to_record, from_json, poly_to_record, space_from_record,
    space_to_record, witt_to_record, FormRecord, SpaceRecord,
};
use crate::space::{validate_space, validate_space_with_extension, LogFormSpace};
use crate::witt::{lift_p2, reduction_check_p2, refined_lift_shape, WittPoly, WittRing};

#[derive(Parser, Debug, Serialize)]
#[command(name = "logspace", version, about = "Logarithmic differential forms on the projective line over finite fields")]
pub struct Cli {
    /// Write the JSON lines here instead of stdout.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
    /// Report elapsed time on stderr.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub timings: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Validate a space record.
    VerifySpace(VerifySpaceArgs),
    /// Build a space from one of the explicit families.
    #[command(subcommand)]
    Construct(ConstructCmd),
    /// Pull a space back along an étale map `αt + P(t^p)`.
    Pullback(PullbackArgs),
    #[command(subcommand)]
    Hurwitz(HurwitzCmd),
    #[command(subcommand)]
    Search(SearchCmd),
    #[command(subcommand)]
    Verify(VerifyCmd),
    #[command(subcommand)]
    Check(CheckCmd),
    #[command(subcommand)]
    Lift(LiftCmd),
    /// Apply the Cartier operator and both logarithmicity criteria to a form.
    Cartier(CartierArgs),
}

#[derive(Args, Debug, Serialize, Clone)]
pub struct FieldArgs {
    #[arg(long)]
    pub p: u32,
    #[arg(long, default_value_t = 1)]
    pub k: u32,
}

impl FieldArgs {
    fn field(&self) -> Result<Field> {
        Field::new(self.p, self.k)
    }
}

#[derive(Args, Debug, Serialize, Clone)]
pub struct SearchFlags {
    /// Stop at the first witness (default).
    #[arg(long, conflicts_with = "verify_none")]
    pub find_one: bool,
    /// Exhaust the candidate space and count every witness.
    #[arg(long)]
    pub verify_none: bool,
    /// Worker threads (0: all cores).
    #[arg(long, default_value_t = 0)]
    #[serde(skip)]
    pub jobs: usize,
    #[arg(long, default_value_t = 64)]
    pub shards: usize,
    #[arg(long, default_value_t = 16)]
    pub max_witnesses: usize,
    /// Resume from and record completed shards in this file.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
}

impl SearchFlags {
    fn options(&self) -> SearchOptions {
        SearchOptions {
            mode: if self.verify_none { SearchMode::VerifyNone } else { SearchMode::FindOne },
            jobs: self.jobs,
            shards: self.shards,
            max_witnesses: self.max_witnesses,
            checkpoint: self.checkpoint.clone(),
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct VerifySpaceArgs {
    /// Space record (JSON); `-` reads stdin.
    #[arg(long)]
    pub input: PathBuf,
    /// Allow poles in extensions up to this degree over the base field.
    #[arg(long)]
    pub extend: Option<u32>,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstructCmd {
    /// Characteristic two: `n` common poles `x_i`, constants `u != v`.
    P2(P2Args),
    /// Additive-polynomial family from `F_p`-independent `a_i`.
    Matignon(MatignonArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct P2Args {
    #[arg(long, default_value_t = 2)]
    pub p: u32,
    #[arg(long)]
    pub k: u32,
    /// Common poles (element syntax, e.g. `t^2+1`); random when omitted.
    #[arg(long, num_args = 1..)]
    pub x: Vec<String>,
    #[arg(long)]
    pub u: Option<String>,
    #[arg(long)]
    pub v: Option<String>,
    /// Number of common poles for a random instance.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the bare space record here.
    #[arg(long)]
    pub space_out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct MatignonArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub field: FieldArgs,
    #[arg(long, num_args = 1..)]
    pub a: Vec<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub space_out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct PullbackArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub alpha: String,
    /// Coefficients of `P`, lowest first.
    #[arg(long, num_args = 0..)]
    pub phi_p: Vec<String>,
    #[arg(long)]
    pub space_out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HurwitzCmd {
    /// Search points realizing residue classes with a single zero at infinity.
    Search(HurwitzSearchArgs),
    /// Read the residue datum of a form record.
    FromForm(HurwitzFormArgs),
    /// Substitute `z = Q(t)` into `sum h_i dz/(z - x_i)`.
    Substitute(HurwitzSubstituteArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct HurwitzSearchArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub field: FieldArgs,
    #[arg(long, num_args = 1.., required = true)]
    pub classes: Vec<u32>,
    #[command(flatten)]
    #[serde(flatten)]
    pub search: SearchFlags,
}

#[derive(Args, Debug, Serialize)]
pub struct HurwitzFormArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub field: FieldArgs,
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct HurwitzSubstituteArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub field: FieldArgs,
    /// Points with classes, `x:h`.
    #[arg(long, num_args = 1.., required = true)]
    pub points: Vec<String>,
    /// Coefficients of `Q`, lowest first.
    #[arg(long, num_args = 1.., required = true)]
    pub q: Vec<String>,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchCmd {
    /// Two-dimensional spaces with `m + 1` poles.
    Space2(Space2Args),
}

#[derive(Args, Debug, Serialize)]
pub struct Space2Args {
    #[command(flatten)]
    #[serde(flatten)]
    pub field: FieldArgs,
    /// Number of poles `m + 1`.
    #[arg(long)]
    pub poles: usize,
    /// Enumerate every pair instead of normal forms.
    #[arg(long)]
    pub no_normalize: bool,
    #[arg(long)]
    pub long_run: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub search: SearchFlags,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyCmd {
    /// Existence of two-dimensional spaces with `p`, `2p`, `3p` poles.
    Theorem29(Theorem29Args),
}

#[derive(Args, Debug, Serialize)]
pub struct Theorem29Args {
    #[arg(long)]
    pub p: u32,
    #[arg(long)]
    pub kmax: u32,
    #[arg(long)]
    pub long_run: bool,
    #[arg(long, default_value_t = 0)]
    #[serde(skip)]
    pub jobs: usize,
    #[arg(long, default_value_t = 64)]
    pub shards: usize,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckCmd {
    /// Coefficient identity for `(X + a)^E` modulo `X^p - X`.
    Lemma210(LemmaArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct LemmaArgs {
    #[arg(long, requires = "n")]
    pub p: Option<u32>,
    #[arg(long)]
    pub n: Option<u32>,
    /// Check every admissible `(p, n)` with `p` up to this bound.
    #[arg(long, conflicts_with = "p")]
    pub pmax: Option<u32>,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LiftCmd {
    /// Corrected characteristic-two lift and its reduction check.
    P2(LiftP2Args),
    /// Mod `p²` shape of the Frobenius-twisted lift of a form.
    Shape(ShapeArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct LiftP2Args {
    #[arg(long)]
    pub k: u32,
    #[arg(long = "N", default_value_t = 6)]
    pub precision: u32,
    /// Residues of `X_1..X_n`; random when omitted.
    #[arg(long, num_args = 1..)]
    pub x: Vec<String>,
    #[arg(long)]
    pub u: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Use Teichmüller lifts instead of seeded random lifts.
    #[arg(long)]
    pub teichmuller: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct ShapeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub field: FieldArgs,
    #[arg(long = "N", default_value_t = 6)]
    pub precision: u32,
    /// Poles with classes, `x:h`.
    #[arg(long, num_args = 1.., required = true)]
    pub points: Vec<String>,
}

#[derive(Args, Debug, Serialize)]
pub struct CartierArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub field: FieldArgs,
    /// Form record; otherwise `--num` and `--den`.
    #[arg(long, conflicts_with_all = ["num", "den"])]
    pub input: Option<PathBuf>,
    #[arg(long, num_args = 1..)]
    pub num: Vec<String>,
    #[arg(long, num_args = 1..)]
    pub den: Vec<String>,
}

// ---------------------------------------------------------------------------

fn read_input(path: &PathBuf) -> Result<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| Error::Io(e.to_string()))?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }
}

fn write_json<T: Serialize>(path: &PathBuf, v: &T) -> Result<()> {
    let text = serde_json::to_string(v).map_err(|e| Error::Internal(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn elements(f: &Field, xs: &[String]) -> Result<Vec<Fe>> {
    xs.iter().map(|s| f.parse_element(s)).collect()
}

fn poly_arg(f: &Field, xs: &[String]) -> Result<Poly> {
    Ok(Poly::new(elements(f, xs)?))
}

fn points_arg(f: &Field, xs: &[String]) -> Result<Vec<(Fe, u32)>> {
    xs.iter()
        .map(|s| {
            let (x, h) = s
                .rsplit_once(':')
                .ok_or_else(|| Error::Parse(format!("expected x:h, got {s:?}")))?;
            let h: u32 = h.trim().parse().map_err(|_| Error::Parse(format!("bad class in {s:?}")))?;
            Ok((f.parse_element(x)?, h))
        })
        .collect()
}

fn el(f: &Field, x: Fe) -> Value {
    json!(element_to_record(f, x))
}

fn els(f: &Field, xs: &[Fe]) -> Value {
    Value::Array(xs.iter().map(|&x| el(f, x)).collect())
}

fn witt_poly(w: &WittRing, a: &WittPoly) -> Value {
    Value::Array(a.iter().map(|x| json!(witt_to_record(w, x))).collect())
}

fn space_summary(s: &LogFormSpace) -> Value {
    json!({"space": space_to_record(s)})
}

fn run_command(cmd: &Command, out: &mut Vec<Value>) -> Result<()> {
    match cmd {
        Command::VerifySpace(a) => {
            let rec: SpaceRecord = from_json(&read_input(&a.input)?)?;
            let space = space_from_record(&rec)?;
            let (validation, field) = match a.extend {
                Some(d) => validate_space_with_extension(&space, d * space.field().k())?,
                None => (validate_space(&space)?, space.field().clone()),
            };
            out.push(json!({"validation": validation, "pole_field": {"p": field.p(), "k": field.k()}}));
        }
        Command::Construct(ConstructCmd::P2(a)) => {
            let f = Field::new(a.p, a.k)?;
            let c = if a.x.is_empty() {
                let n = a.n.ok_or_else(|| Error::InvalidParameter("give --x or --n".into()))?;
                let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
                instances::random_p2(&f, n, &mut rng)?
            } else {
                let u = f.parse_element(a.u.as_deref().ok_or_else(|| Error::InvalidParameter("--u is required".into()))?)?;
                let v = f.parse_element(a.v.as_deref().ok_or_else(|| Error::InvalidParameter("--v is required".into()))?)?;
                construct_p2(&f, &elements(&f, &a.x)?, u, v)?
            };
            let validation = validate_space(&c.space)?;
            out.push(json!({
                "construction": {
                    "xs": els(&f, &c.xs), "ys": els(&f, &c.ys), "zs": els(&f, &c.zs),
                    "q": poly_to_record(&f, &c.q), "r": poly_to_record(&f, &c.r),
                    "f1": poly_to_record(&f, &c.f1), "f2": poly_to_record(&f, &c.f2),
                },
            }));
            out.push(space_summary(&c.space));
            out.push(json!({"validation": validation}));
            if let Some(path) = &a.space_out {
                write_json(path, &space_to_record(&c.space))?;
            }
        }
        Command::Construct(ConstructCmd::Matignon(a)) => {
            let f = a.field.field()?;
            let c = if a.a.is_empty() {
                let n = a.n.ok_or_else(|| Error::InvalidParameter("give --a or --n".into()))?;
                let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
                instances::random_additive_space(&f, n, &mut rng)?
            } else {
                matignon_space(&f, &elements(&f, &a.a)?)?
            };
            let validation = validate_space(&c.space)?;
            out.push(json!({"construction": {"a": els(&f, &c.a), "u": els(&f, &c.u)}}));
            out.push(space_summary(&c.space));
            out.push(json!({"validation": validation}));
            if let Some(path) = &a.space_out {
                write_json(path, &space_to_record(&c.space))?;
            }
        }
        Command::Pullback(a) => {
            let rec: SpaceRecord = from_json(&read_input(&a.input)?)?;
            let space = space_from_record(&rec)?;
            let f = space.field().clone();
            let pb = pullback_etale(&space, f.parse_element(&a.alpha)?, &poly_arg(&f, &a.phi_p)?)?;
            out.push(json!({"map": poly_to_record(&f, &pb.map)}));
            out.push(space_summary(&pb.space));
            out.push(json!({"validation": pb.validation}));
            if let Some(path) = &a.space_out {
                write_json(path, &space_to_record(&pb.space))?;
            }
        }
        Command::Hurwitz(HurwitzCmd::Search(a)) => {
            let f = a.field.field()?;
            let datum = HurwitzDatum::new(f.p(), a.classes.clone())?;
            let r = hurwitz_search(&f, &datum, &a.search.options())?;
            let witnesses: Vec<Value> =
                r.witnesses.iter().map(|w| els(&f, &w.iter().map(|&x| Fe(x)).collect::<Vec<_>>())).collect();
            out.push(json!({
                "datum": datum_to_record(&datum), "verdict": r.verdict, "examined": r.examined,
                "witness_count": r.witness_count, "witnesses": witnesses,
                "scope": format!("verdict is relative to F_{}^{}", f.p(), f.k()),
            }));
        }
        Command::Hurwitz(HurwitzCmd::FromForm(a)) => {
            let f = a.field.field()?;
            let rec: FormRecord = from_json(&read_input(&a.input)?)?;
            let h = hurwitz_from_form(&f, &form_from_record(&f, &rec)?)?;
            out.push(json!({"datum": datum_to_record(&h.datum), "points": els(&f, &h.points)}));
        }
        Command::Hurwitz(HurwitzCmd::Substitute(a)) => {
            let f = a.field.field()?;
            let h = hurwitz_substitution(&f, &points_arg(&f, &a.points)?, &poly_arg(&f, &a.q)?)?;
            out.push(json!({
                "datum": datum_to_record(&h.datum), "points": els(&f, &h.points),
                "form": form_to_record(&f, &h.form),
            }));
        }
        Command::Search(SearchCmd::Space2(a)) => {
            let f = a.field.field()?;
            crate::error::ensure!(a.poles >= 2, InvalidParameter, "need at least two poles");
            let norm = if a.no_normalize { Normalization::None } else { Normalization::Full };
            let size = space_search_size(&f, a.poles - 1);
            crate::error::ensure!(
                a.long_run || a.no_normalize || size <= LONG_RUN_THRESHOLD,
                Precondition,
                "{size} candidates exceed the threshold {LONG_RUN_THRESHOLD}; pass --long-run"
            );
            let r = space_search_dim2(&f, a.poles - 1, norm, &a.search.options())?;
            out.push(json!({
                "verdict": r.verdict, "normalization": r.normalization, "enumerated": r.enumerated,
                "examined": r.examined, "witness_count": r.witness_count,
                "witnesses": r.witnesses.iter().map(|w| {
                    let (pa, pb) = w.polys();
                    json!({"a": poly_to_record(&f, &pa), "b": poly_to_record(&f, &pb)})
                }).collect::<Vec<_>>(),
                "witness_pole_fields": r.witness_fields,
                "scope": format!("verdict is relative to F_{}^{}", f.p(), f.k()),
            }));
        }
        Command::Verify(VerifyCmd::Theorem29(a)) => {
            let opts = SearchOptions { jobs: a.jobs, shards: a.shards, ..Default::default() };
            let r = theorem29_verify(a.p, a.kmax, a.long_run, &opts)?;
            out.push(json!({"p": r.p, "k_max": r.k_max, "long_run": r.long_run, "scope": r.scope}));
            for row in &r.rows {
                out.push(json!(row));
            }
        }
        Command::Check(CheckCmd::Lemma210(a)) => {
            let cases = match (a.p, a.n, a.pmax) {
                (Some(p), Some(n), None) => vec![(p, n)],
                (None, None, Some(pm)) => lemma210_cases(pm),
                _ => return Err(Error::InvalidParameter("give --p and --n, or --pmax".into())),
            };
            for (p, n) in cases {
                let r = lemma210_verify(p, n)?;
                out.push(json!({"verdict": r.holds, "report": r}));
            }
        }
        Command::Lift(LiftCmd::P2(a)) => {
            let f = Field::new(2, a.k)?;
            let w = WittRing::new(&f, a.precision)?;
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            let (xs, u) = if a.x.is_empty() {
                let n = a.n.ok_or_else(|| Error::InvalidParameter("give --x or --n".into()))?;
                instances::random_lift_inputs(&w, n, a.teichmuller, &mut rng)?
            } else {
                let lift = |x: Fe, rng: &mut ChaCha8Rng| {
                    let t = w.teichmuller(x);
                    if a.teichmuller { t } else { w.add(&t, &w.mul_int(&w.random(rng), 2)) }
                };
                let xs: Vec<_> = elements(&f, &a.x)?.into_iter().map(|x| lift(x, &mut rng)).collect();
                let u = f.parse_element(a.u.as_deref().ok_or_else(|| Error::InvalidParameter("--u is required".into()))?)?;
                (xs, lift(u, &mut rng))
            };
            let l = lift_p2(&w, &xs, &u)?;
            let check = reduction_check_p2(&w, &l.f, l.n)?;
            let control = reduction_check_p2(&w, &l.f_uncorrected, l.n)?;
            out.push(json!({
                "n": l.n, "u": witt_to_record(&w, &l.u),
                "points": l.points.iter().map(|x| witt_to_record(&w, x)).collect::<Vec<_>>(),
                "q": witt_poly(&w, &l.q), "r": witt_poly(&w, &l.r),
                "alphas": l.alphas.iter().map(|x| witt_to_record(&w, x)).collect::<Vec<_>>(),
                "eps": l.eps.iter().map(|x| witt_to_record(&w, x)).collect::<Vec<_>>(),
                "f_uncorrected": witt_poly(&w, &l.f_uncorrected), "f": witt_poly(&w, &l.f),
                "precision": format!("mod 2^{}", a.precision),
            }));
            out.push(json!({"reduction_check": check}));
            out.push(json!({"uncorrected_check": control}));
        }
        Command::Lift(LiftCmd::Shape(a)) => {
            let f = a.field.field()?;
            let r = refined_lift_shape(&f, &points_arg(&f, &a.points)?, a.precision)?;
            out.push(json!({"shape": r, "precision": format!("mod {}^{}", f.p(), a.precision)}));
        }
        Command::Cartier(a) => {
            let f = a.field.field()?;
            let w = match &a.input {
                Some(path) => form_from_record(&f, &from_json(&read_input(path)?)?)?,
                None => {
                    crate::error::ensure!(!a.den.is_empty(), InvalidParameter, "give --input or --num/--den");
                    DifferentialForm::new(&f, poly_arg(&f, &a.num)?, poly_arg(&f, &a.den)?)?
                }
            };
            let c = cartier(&f, &w);
            out.push(json!({
                "form": form_to_record(&f, &w), "cartier": form_to_record(&f, &c), "fixed": c == w,
                "logarithmic": is_logarithmic(&f, &w),
                "derivative_criterion": derivative_criterion(&f, &w),
                "residue_criterion": residue_criterion(&f, &w),
            }));
        }
    }
    Ok(())
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidParameter(_) => "invalid-parameter",
        Error::ReducibleModulus { .. } => "reducible-modulus",
        Error::FieldMismatch(_) => "field-mismatch",
        Error::NeedsLargerField(_) => "needs-larger-field",
        Error::Precondition(_) => "precondition",
        Error::NotInvertible(_) => "not-invertible",
        Error::Parse(_) => "parse",
        Error::Io(_) => "io",
        Error::Internal(_) => "internal",
    }
}

/// Runs the CLI on `argv` (including the program name), writing JSON lines
/// to `stdout` unless `--output` is given. Returns the exit status.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let start = Instant::now();
    let mut records =
        vec![json!({"params": cli.command, "version": env!("CARGO_PKG_VERSION")})];
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
        let mut out = Vec::new();
        let r = run_command(&cli.command, &mut out);
        (r, out)
    }));
    let code = match outcome {
        Ok((Ok(()), out)) => {
            records.extend(out);
            0
        }
        Ok((Err(e), out)) => {
            records.extend(out);
            eprintln!("error: {e}");
            records.push(json!({"error": {"kind": error_kind(&e), "message": e.to_string()}}));
            e.exit_code()
        }
        Err(_) => {
            records.push(json!({"error": {"kind": "internal", "message": "panic"}}));
            2
        }
    };
    if cli.timings {
        eprintln!("elapsed_ms: {}", start.elapsed().as_millis());
    }
    let mut text = String::new();
    for r in &records {
        text.push_str(&serde_json::to_string(r).expect("JSON values serialize"));
        text.push('\n');
    }
    let written = match &cli.output {
        Some(path) => std::fs::write(path, &text).map_err(|e| e.to_string()),
        None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write output: {e}");
        return 1;
    }
    code
}
