//! Document execution: builds the named sets and groups, runs the queries in
//! order, and emits one JSON object per query.  All numeric output is exact
//! rational text; serde_json's default map keeps keys sorted, which makes the
//! reports byte-stable.

use serde_json::{json, Map, Value};
use std::collections::HashMap;

use pdens_core::cfunc::EPSequence;
use pdens_core::cone::{distinguished_check, sc_cross_check, sc_multiplicity, theorem_mt_check};
use pdens_core::crofton::verify_crofton;
use pdens_core::density::{local_density, theta_sequence, StepFunction};
use pdens_core::padic::PowerCoset;
use pdens_core::setdef::{
    normalize_1d, BoxSet, Cell1D, CmpOp, DefinableSet, Formula1D, MonomialGraph, RayCone, Set1D,
};
use pdens_core::{Error, Prime, Q};

use crate::dsl::{
    rat_str, Document, GroupExpr, Item, ParseError, Query, RayExpr, SetExpr, Verb,
};
use pdens_core::padic::Subgroup;

#[derive(Clone, Copy, Debug)]
pub struct Options {
    pub depth: u32,
    pub refine_bound: u32,
    pub precision: u32,
}

impl Default for Options {
    fn default() -> Self {
        let depth = std::env::var("PDENS_DEPTH")
            .ok()
            .and_then(|s| s.parse().ok())
            .unwrap_or(12);
        Options {
            depth,
            refine_bound: 4,
            precision: 64,
        }
    }
}

pub struct Context {
    pub prime: Prime,
    pub sets: HashMap<String, DefinableSet>,
    pub groups: HashMap<String, Subgroup>,
    pub options: Options,
}

impl Context {
    pub fn new(prime: u64, options: Options) -> Result<Self, Error> {
        Ok(Context {
            prime: Prime::new(prime)?,
            sets: HashMap::new(),
            groups: HashMap::new(),
            options,
        })
    }

    pub fn define_set(&mut self, name: &str, e: &SetExpr) -> Result<(), ParseError> {
        let set = build_set(self, e).map_err(|err| ParseError::Semantic {
            msg: format!("set {:?}: {}", name, err),
        })?;
        self.sets.insert(name.to_string(), set);
        Ok(())
    }

    pub fn define_group(&mut self, name: &str, g: &GroupExpr) -> Result<(), ParseError> {
        let group = match g {
            GroupExpr::Power(n) => Subgroup::power_group(self.prime, (*n).max(1)),
            GroupExpr::Cosets { exponent, reps } => {
                Subgroup::new(self.prime, *exponent, reps.clone()).map_err(|err| {
                    ParseError::Semantic {
                        msg: format!("group {:?}: {}", name, err),
                    }
                })?
            }
        };
        self.groups.insert(name.to_string(), group);
        Ok(())
    }
}

fn build_1d(ctx: &Context, e: &SetExpr) -> Result<Set1D, Error> {
    match build_set(ctx, e)? {
        DefinableSet::OneDim(s) => Ok(s),
        _ => Err(Error::UnsupportedSet(
            "a one-variable set is required here".into(),
        )),
    }
}

pub fn build_set(ctx: &Context, e: &SetExpr) -> Result<DefinableSet, Error> {
    let p = ctx.prime;
    match e {
        SetExpr::Cell {
            center,
            lambda,
            exponent,
            lo,
            hi,
        } => {
            let cell = Cell1D::new(
                p,
                center.clone(),
                PowerCoset::new(lambda.clone(), (*exponent).max(1)),
                *lo,
                *hi,
            )?;
            Ok(DefinableSet::OneDim(Set1D::from_cells(p, vec![cell])?))
        }
        SetExpr::EvenVal { center } => {
            Ok(DefinableSet::OneDim(Set1D::even_valuation(p).translate(center)))
        }
        SetExpr::Union(parts) => {
            let built = parts
                .iter()
                .map(|e| build_set(ctx, e))
                .collect::<Result<Vec<_>, _>>()?;
            // One-variable unions collapse into a single cell list.
            if built.iter().all(|s| matches!(s, DefinableSet::OneDim(_))) {
                let mut cells = Vec::new();
                for s in built {
                    if let DefinableSet::OneDim(s1) = s {
                        cells.extend(s1.cells);
                    }
                }
                return Ok(DefinableSet::OneDim(Set1D::from_cells(p, cells)?));
            }
            DefinableSet::union(built)
        }
        SetExpr::RayCone {
            origin,
            rays,
            with_apex,
        } => {
            let rays = rays
                .iter()
                .map(|RayExpr { direction, lambda, exponent }| {
                    (
                        direction.clone(),
                        PowerCoset::new(lambda.clone(), (*exponent).max(1)),
                    )
                })
                .collect();
            Ok(DefinableSet::Cone(RayCone::new(
                p,
                origin.clone(),
                rays,
                *with_apex,
            )?))
        }
        SetExpr::BoxProduct(factors) => {
            let factors = factors
                .iter()
                .map(|f| build_1d(ctx, f))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(DefinableSet::Product(BoxSet { factors }))
        }
        SetExpr::Graph {
            base,
            coef,
            exponent,
            germ_level,
        } => {
            let base = build_1d(ctx, base)?;
            Ok(DefinableSet::Graph(MonomialGraph::new(
                p,
                base,
                coef.clone(),
                *exponent,
                *germ_level,
            )?))
        }
        SetExpr::Formula(src) => {
            let f = parse_formula(src)?;
            Ok(DefinableSet::OneDim(normalize_1d(p, &f)))
        }
        SetExpr::Name(n) => ctx
            .sets
            .get(n)
            .cloned()
            .ok_or_else(|| Error::UnsupportedSet(format!("undefined set {:?}", n))),
    }
}

// ---------------------------------------------------------------------------
// The one-variable formula language:
//   atom := ord(t [- c]) CMP n | t [- c] in l * P m | t = c | true | false
//   with and / or / not and parentheses; CMP in { >= > <= < = }.

struct FScan<'a> {
    toks: Vec<&'a str>,
    pos: usize,
}

fn parse_formula(src: &str) -> Result<Formula1D, Error> {
    let mut spaced = String::new();
    for c in src.chars() {
        match c {
            '(' | ')' | ',' | '*' => {
                spaced.push(' ');
                spaced.push(c);
                spaced.push(' ');
            }
            _ => spaced.push(c),
        }
    }
    let mut s = FScan {
        toks: spaced.split_whitespace().collect(),
        pos: 0,
    };
    let f = f_or(&mut s)?;
    if s.pos != s.toks.len() {
        return Err(Error::UnsupportedSet(format!(
            "trailing formula input near {:?}",
            s.toks[s.pos]
        )));
    }
    Ok(f)
}

fn f_err(msg: impl Into<String>) -> Error {
    Error::UnsupportedSet(msg.into())
}

impl<'a> FScan<'a> {
    fn peek(&self) -> Option<&'a str> {
        self.toks.get(self.pos).copied()
    }
    fn next(&mut self) -> Result<&'a str, Error> {
        let t = self.peek().ok_or_else(|| f_err("formula ends early"))?;
        self.pos += 1;
        Ok(t)
    }
    fn eat(&mut self, t: &str) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }
    fn expect(&mut self, t: &str) -> Result<(), Error> {
        let got = self.next()?;
        if got == t {
            Ok(())
        } else {
            Err(f_err(format!("expected {:?}, found {:?}", t, got)))
        }
    }
    fn rat(&mut self) -> Result<Q, Error> {
        let t = self.next()?;
        t.parse::<Q>()
            .map_err(|_| f_err(format!("expected a rational, found {:?}", t)))
    }
    fn int(&mut self) -> Result<i64, Error> {
        let t = self.next()?;
        t.parse::<i64>()
            .map_err(|_| f_err(format!("expected an integer, found {:?}", t)))
    }
    /// "t" or "t - c"; returns the center c.
    fn term_center(&mut self) -> Result<Q, Error> {
        self.expect("t")?;
        if let Some(t) = self.peek() {
            if let Some(rest) = t.strip_prefix('-') {
                // "t -c" or "t - c"
                if rest.is_empty() {
                    self.pos += 1;
                    return self.rat();
                }
                if rest.chars().next().is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                    return rest
                        .parse::<Q>()
                        .map_err(|_| f_err(format!("bad center {:?}", rest)));
                }
            }
        }
        Ok(Q::from_integer(0.into()))
    }
}

fn f_or(s: &mut FScan) -> Result<Formula1D, Error> {
    let mut f = f_and(s)?;
    while s.eat("or") {
        f = Formula1D::or(f, f_and(s)?);
    }
    Ok(f)
}

fn f_and(s: &mut FScan) -> Result<Formula1D, Error> {
    let mut f = f_unary(s)?;
    while s.eat("and") {
        f = Formula1D::and(f, f_unary(s)?);
    }
    Ok(f)
}

fn f_unary(s: &mut FScan) -> Result<Formula1D, Error> {
    if s.eat("not") {
        return Ok(Formula1D::not(f_unary(s)?));
    }
    if s.eat("(") {
        let f = f_or(s)?;
        s.expect(")")?;
        return Ok(f);
    }
    if s.eat("true") {
        return Ok(Formula1D::True);
    }
    if s.eat("false") {
        return Ok(Formula1D::False);
    }
    if s.eat("ord") {
        s.expect("(")?;
        let center = s.term_center()?;
        s.expect(")")?;
        let op = match s.next()? {
            ">=" => CmpOp::Ge,
            ">" => CmpOp::Gt,
            "<=" => CmpOp::Le,
            "<" => CmpOp::Lt,
            "=" | "==" => CmpOp::Eq,
            other => return Err(f_err(format!("unknown comparison {:?}", other))),
        };
        let level = s.int()?;
        return Ok(Formula1D::OrdCmp { center, op, level });
    }
    // t [- c] in l * P m, or t = c.
    let center = s.term_center()?;
    if s.eat("=") || s.eat("==") {
        let c = s.rat()?;
        return Ok(Formula1D::InCoset {
            center: c,
            lambda: Q::from_integer(0.into()),
            exponent: 1,
        });
    }
    s.expect("in")?;
    let lambda = s.rat()?;
    s.expect("*")?;
    s.expect("P")?;
    let m = s.int()?;
    if m < 1 {
        return Err(f_err("coset exponent must be positive"));
    }
    Ok(Formula1D::InCoset {
        center,
        lambda,
        exponent: m as u32,
    })
}

// ---------------------------------------------------------------------------
// Query execution

fn obj(pairs: Vec<(&str, Value)>) -> Value {
    let mut m = Map::new();
    for (k, v) in pairs {
        m.insert(k.to_string(), v);
    }
    Value::Object(m)
}

fn rat_val(q: &Q) -> Value {
    Value::String(rat_str(q))
}

fn rats_val(qs: &[Q]) -> Value {
    Value::Array(qs.iter().map(rat_val).collect())
}

fn theta_val(t: &EPSequence) -> Value {
    let branches: Vec<Value> = t
        .branches
        .iter()
        .map(|b| {
            let terms: Vec<Value> = b
                .terms
                .iter()
                .map(|tm| {
                    obj(vec![
                        ("coef", rat_val(&tm.coef)),
                        ("deg", json!(tm.deg)),
                        ("rate", json!(tm.rate)),
                    ])
                })
                .collect();
            obj(vec![
                ("constant", rat_val(&b.constant)),
                ("terms", Value::Array(terms)),
            ])
        })
        .collect();
    obj(vec![
        ("branches", Value::Array(branches)),
        ("head", rats_val(&t.head)),
        ("modulus", json!(t.modulus)),
        ("onset", json!(t.onset)),
    ])
}

fn cone_val(c: &RayCone) -> Value {
    let rays: Vec<Value> = c
        .rays
        .iter()
        .map(|r| {
            obj(vec![
                ("direction", rats_val(&r.direction)),
                ("exponent", json!(r.coset.exponent)),
                ("lambda", rat_val(&r.coset.lambda)),
            ])
        })
        .collect();
    obj(vec![
        ("include_apex", json!(c.include_apex)),
        ("origin", rats_val(&c.origin)),
        ("rays", Value::Array(rays)),
    ])
}

/// The Λ a query acts with: the named group, or P_N for the presentation
/// exponent N of the set.
fn query_lambda(ctx: &Context, q: &Query, set: &DefinableSet) -> Subgroup {
    if let Some(name) = &q.lambda {
        if let Some(g) = ctx.groups.get(name) {
            return g.clone();
        }
    }
    Subgroup::power_group(ctx.prime, set.presentation_exponent().max(1))
}

fn at_point(q: &Query, set: &DefinableSet) -> Vec<Q> {
    q.at
        .clone()
        .unwrap_or_else(|| vec![Q::from_integer(0.into()); set.ambient()])
}

/// One query -> (report object, Some(passed) for equality-asserting verbs).
pub fn run_query(ctx: &Context, q: &Query) -> (Value, Option<bool>) {
    match run_query_inner(ctx, q) {
        Ok(pair) => pair,
        Err(e) => {
            let kind = {
                let dbg = format!("{:?}", e);
                dbg.split(['(', ' ']).next().unwrap_or("Error").to_string()
            };
            let asserts = matches!(
                q.verb,
                Verb::MtCheck | Verb::DistinguishedCheck | Verb::Crofton
            );
            (
                obj(vec![
                    ("error_kind", json!(kind)),
                    ("message", json!(e.to_string())),
                    ("name", json!(q.name)),
                    ("query", json!(q.verb.as_str())),
                ]),
                if asserts { Some(false) } else { None },
            )
        }
    }
}

fn run_query_inner(ctx: &Context, q: &Query) -> Result<(Value, Option<bool>), Error> {
    let set = ctx
        .sets
        .get(&q.name)
        .cloned()
        .ok_or_else(|| Error::UnsupportedSet(format!("undefined set {:?}", q.name)))?;
    let at = at_point(q, &set);
    let head = |mut pairs: Vec<(&str, Value)>| {
        pairs.push(("name", json!(q.name)));
        pairs.push(("query", json!(q.verb.as_str())));
        obj(pairs)
    };
    let phi = StepFunction::indicator(ctx.prime, set.clone());
    match q.verb {
        Verb::Density => {
            let d = set.dimension();
            let rep = local_density(&phi, &at, d)?;
            Ok((
                head(vec![
                    ("at", rats_val(&at)),
                    ("density", rat_val(&rep.density)),
                    ("dimension", json!(d)),
                ]),
                None,
            ))
        }
        Verb::Volume => {
            let level = q.level.unwrap_or(0);
            let v = phi.volume_in_ball(&at, level);
            Ok((
                head(vec![
                    ("at", rats_val(&at)),
                    ("level", json!(level)),
                    ("volume", rat_val(&v)),
                ]),
                None,
            ))
        }
        Verb::ThetaSequence => {
            let d = set.dimension();
            let t = theta_sequence(&phi, &at, d)?;
            Ok((
                head(vec![("at", rats_val(&at)), ("theta", theta_val(&t))]),
                None,
            ))
        }
        Verb::Cone => {
            let lambda = query_lambda(ctx, q, &set);
            let cm = sc_multiplicity(&set, &at, &lambda)?;
            Ok((
                head(vec![("at", rats_val(&at)), ("cone", cone_val(&cm.cone))]),
                None,
            ))
        }
        Verb::Sc => {
            let lambda = query_lambda(ctx, q, &set);
            let cm = sc_multiplicity(&set, &at, &lambda)?;
            let mut pairs = vec![
                ("at", rats_val(&at)),
                ("cone", cone_val(&cm.cone)),
                ("multiplicities", rats_val(&cm.multiplicities)),
            ];
            if let Some(z) = &q.z {
                let (lo, hi) = sc_cross_check(&set, &at, &lambda, z, ctx.options.depth)?;
                pairs.push(("interval_hi", rat_val(&hi)));
                pairs.push(("interval_lo", rat_val(&lo)));
            }
            Ok((head(pairs), None))
        }
        Verb::MtCheck => {
            let lambda = query_lambda(ctx, q, &set);
            let (lhs, rhs, equal) =
                theorem_mt_check(&set, &at, &lambda, ctx.options.refine_bound)?;
            Ok((
                head(vec![
                    ("at", rats_val(&at)),
                    ("equal", json!(equal)),
                    ("lhs", rat_val(&lhs)),
                    ("rhs", rat_val(&rhs)),
                ]),
                Some(equal),
            ))
        }
        Verb::DistinguishedCheck => {
            let lambda = query_lambda(ctx, q, &set);
            let n = lambda.exponent;
            let refinements = [2u32, 3, 6]
                .iter()
                .map(|k| lambda.intersect_power(k * n))
                .collect::<Result<Vec<_>, _>>()?;
            let stable = distinguished_check(&set, &at, &lambda, &refinements)?;
            Ok((
                head(vec![("at", rats_val(&at)), ("stable", json!(stable))]),
                Some(stable),
            ))
        }
        Verb::Crofton => {
            let (lhs, rhs, equal) = verify_crofton(&set, &at)?;
            Ok((
                head(vec![
                    ("at", rats_val(&at)),
                    ("equal", json!(equal)),
                    ("lhs", rat_val(&lhs)),
                    ("rhs", rat_val(&rhs)),
                ]),
                Some(equal),
            ))
        }
    }
}

pub struct RunOutcome {
    pub reports: Vec<Value>,
    pub all_passed: bool,
}

pub fn run(doc: &Document, options: Options) -> Result<RunOutcome, ParseError> {
    let mut ctx = Context::new(doc.prime, options).map_err(|e| ParseError::Semantic {
        msg: e.to_string(),
    })?;
    let mut reports = Vec::new();
    let mut all_passed = true;
    for item in &doc.items {
        match item {
            Item::Set(name, e) => ctx.define_set(name, e)?,
            Item::Group(name, g) => ctx.define_group(name, g)?,
            Item::Query(q) => {
                let (report, passed) = run_query(&ctx, q);
                if passed == Some(false) {
                    all_passed = false;
                }
                reports.push(report);
            }
        }
    }
    Ok(RunOutcome {
        reports,
        all_passed,
    })
}
