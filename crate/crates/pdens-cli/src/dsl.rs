//! The pdens set-definition language: lexer, AST, parser, printer.
//!
//! A document is line-oriented: a prime declaration followed by named set
//! and group definitions and queries, each terminated by ";".  The printer
//! emits a canonical form; parse(print(doc)) == doc.

use num_bigint::BigInt;
use num_traits::One;
use pdens_core::Q;
use std::fmt;

#[derive(Clone, Debug, PartialEq)]
pub struct Document {
    pub prime: u64,
    pub items: Vec<Item>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Item {
    Set(String, SetExpr),
    Group(String, GroupExpr),
    Query(Query),
}

#[derive(Clone, Debug, PartialEq)]
pub enum SetExpr {
    /// cell(center, lambda * P n, lo, hi); bounds are integers or -inf/inf.
    Cell {
        center: Q,
        lambda: Q,
        exponent: u32,
        lo: Option<i64>,
        hi: Option<i64>,
    },
    /// evenval(c): points with ord(t - c) even; also reachable through the
    /// sugar "union over k in Z of sphere(c, 2k)".
    EvenVal { center: Q },
    Union(Vec<SetExpr>),
    RayCone {
        origin: Vec<Q>,
        rays: Vec<RayExpr>,
        with_apex: bool,
    },
    BoxProduct(Vec<SetExpr>),
    Graph {
        base: Box<SetExpr>,
        coef: Q,
        exponent: u32,
        germ_level: i64,
    },
    Formula(String),
    Name(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RayExpr {
    pub direction: Vec<Q>,
    pub lambda: Q,
    pub exponent: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub enum GroupExpr {
    Power(u32),
    Cosets { exponent: u32, reps: Vec<Q> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verb {
    Density,
    Volume,
    ThetaSequence,
    Cone,
    Sc,
    MtCheck,
    DistinguishedCheck,
    Crofton,
}

impl Verb {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verb::Density => "density",
            Verb::Volume => "volume",
            Verb::ThetaSequence => "theta-sequence",
            Verb::Cone => "cone",
            Verb::Sc => "sc",
            Verb::MtCheck => "mt-check",
            Verb::DistinguishedCheck => "distinguished-check",
            Verb::Crofton => "crofton",
        }
    }

    fn from_str(s: &str) -> Option<Verb> {
        Some(match s {
            "density" => Verb::Density,
            "volume" => Verb::Volume,
            "theta-sequence" => Verb::ThetaSequence,
            "cone" => Verb::Cone,
            "sc" => Verb::Sc,
            "mt-check" => Verb::MtCheck,
            "distinguished-check" => Verb::DistinguishedCheck,
            "crofton" => Verb::Crofton,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Query {
    pub verb: Verb,
    pub name: String,
    pub at: Option<Vec<Q>>,
    pub lambda: Option<String>,
    pub level: Option<i64>,
    pub z: Option<Vec<Q>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ParseError {
    Syntax { line: u32, col: u32, msg: String },
    Semantic { msg: String },
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseError::Syntax { line, col, msg } => {
                write!(f, "syntax error at {}:{}: {}", line, col, msg)
            }
            ParseError::Semantic { msg } => write!(f, "semantic error: {}", msg),
        }
    }
}

impl std::error::Error for ParseError {}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Str(String),
    LPar,
    RPar,
    Comma,
    Semi,
    Eq,
    Star,
    Colon,
    Slash,
    Minus,
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: u32,
    col: u32,
}

fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0usize;
    let mut line = 1u32;
    let mut col = 1u32;
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let mut push = |t: Tok| {
            out.push(Spanned {
                tok: t,
                line: tl,
                col: tc,
            })
        };
        match c {
            '\n' => {
                line += 1;
                col = 1;
                i += 1;
                continue;
            }
            ' ' | '\t' | '\r' => {}
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '(' => push(Tok::LPar),
            ')' => push(Tok::RPar),
            ',' => push(Tok::Comma),
            ';' => push(Tok::Semi),
            '=' => push(Tok::Eq),
            '*' => push(Tok::Star),
            ':' => push(Tok::Colon),
            '/' => push(Tok::Slash),
            '-' => push(Tok::Minus),
            '"' => {
                let mut s = String::new();
                let mut j = i + 1;
                while j < chars.len() && chars[j] != '"' {
                    s.push(chars[j]);
                    j += 1;
                }
                if j >= chars.len() {
                    return Err(ParseError::Syntax {
                        line,
                        col,
                        msg: "unterminated string".into(),
                    });
                }
                push(Tok::Str(s));
                col += (j - i) as u32;
                i = j + 1;
                col += 1;
                continue;
            }
            _ if c.is_ascii_digit() => {
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                let s: String = chars[i..j].iter().collect();
                push(Tok::Int(s.parse().unwrap()));
                col += (j - i) as u32;
                i = j;
                continue;
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                loop {
                    j += 1;
                    if j >= chars.len() {
                        break;
                    }
                    let d = chars[j];
                    if d.is_ascii_alphanumeric() || d == '_' {
                        continue;
                    }
                    // Hyphenated keywords (theta-sequence, mt-check).
                    if d == '-' && j + 1 < chars.len() && chars[j + 1].is_ascii_alphabetic() {
                        j += 1;
                        continue;
                    }
                    break;
                }
                let s: String = chars[i..j].iter().collect();
                push(Tok::Ident(s));
                col += (j - i) as u32;
                i = j;
                continue;
            }
            _ => {
                return Err(ParseError::Syntax {
                    line,
                    col,
                    msg: format!("unexpected character {:?}", c),
                })
            }
        }
        i += 1;
        col += 1;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        let (line, col) = self
            .toks
            .get(self.pos.min(self.toks.len().saturating_sub(1)))
            .map_or((0, 0), |s| (s.line, s.col));
        ParseError::Syntax {
            line,
            col,
            msg: msg.into(),
        }
    }

    fn next(&mut self) -> Result<Tok, ParseError> {
        let t = self
            .peek()
            .cloned()
            .ok_or_else(|| self.err("unexpected end of input"))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, t: Tok) -> Result<(), ParseError> {
        let got = self.next()?;
        if got == t {
            Ok(())
        } else {
            self.pos -= 1;
            Err(self.err(format!("expected {:?}, found {:?}", t, got)))
        }
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.next()? {
            Tok::Ident(s) => Ok(s),
            other => {
                self.pos -= 1;
                Err(self.err(format!("expected identifier, found {:?}", other)))
            }
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        let s = self.ident()?;
        if s == kw {
            Ok(())
        } else {
            self.pos -= 1;
            Err(self.err(format!("expected {:?}, found {:?}", kw, s)))
        }
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if let Some(Tok::Ident(s)) = self.peek() {
            if s == kw {
                self.pos += 1;
                return true;
            }
        }
        false
    }

    fn int(&mut self) -> Result<BigInt, ParseError> {
        let neg = self.eat(&Tok::Minus);
        match self.next()? {
            Tok::Int(n) => Ok(if neg { -n } else { n }),
            other => {
                self.pos -= 1;
                Err(self.err(format!("expected integer, found {:?}", other)))
            }
        }
    }

    fn small_int(&mut self) -> Result<i64, ParseError> {
        let n = self.int()?;
        i64::try_from(&n).map_err(|_| self.err("integer out of range"))
    }

    fn uint(&mut self) -> Result<u32, ParseError> {
        let n = self.small_int()?;
        u32::try_from(n).map_err(|_| self.err("expected a nonnegative integer"))
    }

    fn rat(&mut self) -> Result<Q, ParseError> {
        let num = self.int()?;
        if self.eat(&Tok::Slash) {
            let den = self.int()?;
            if den == BigInt::from(0) {
                return Err(self.err("zero denominator"));
            }
            Ok(Q::new(num, den))
        } else {
            Ok(Q::from_integer(num))
        }
    }

    /// Integer bound or -inf / inf.
    fn bound(&mut self) -> Result<Option<i64>, ParseError> {
        if self.eat_keyword("inf") {
            return Ok(None);
        }
        if self.peek() == Some(&Tok::Minus) {
            let save = self.pos;
            self.pos += 1;
            if self.eat_keyword("inf") {
                return Ok(None);
            }
            self.pos = save;
        }
        Ok(Some(self.small_int()?))
    }

    /// (r1, ..., rk) or a bare rational (a 1-dimensional point).
    fn point(&mut self) -> Result<Vec<Q>, ParseError> {
        if self.eat(&Tok::LPar) {
            let mut out = vec![self.rat()?];
            while self.eat(&Tok::Comma) {
                out.push(self.rat()?);
            }
            self.expect(Tok::RPar)?;
            Ok(out)
        } else {
            Ok(vec![self.rat()?])
        }
    }

    /// lambda * P n
    fn coset(&mut self) -> Result<(Q, u32), ParseError> {
        let lambda = self.rat()?;
        self.expect(Tok::Star)?;
        self.keyword("P")?;
        Ok((lambda, self.uint()?))
    }

    fn setexpr(&mut self) -> Result<SetExpr, ParseError> {
        let head = self.ident()?;
        match head.as_str() {
            "cell" => {
                self.expect(Tok::LPar)?;
                let center = self.rat()?;
                self.expect(Tok::Comma)?;
                let (lambda, exponent) = self.coset()?;
                self.expect(Tok::Comma)?;
                let lo = self.bound()?;
                self.expect(Tok::Comma)?;
                let hi = self.bound()?;
                self.expect(Tok::RPar)?;
                Ok(SetExpr::Cell {
                    center,
                    lambda,
                    exponent,
                    lo,
                    hi,
                })
            }
            "evenval" => {
                self.expect(Tok::LPar)?;
                let center = self.rat()?;
                self.expect(Tok::RPar)?;
                Ok(SetExpr::EvenVal { center })
            }
            "union" => {
                if self.eat_keyword("over") {
                    // union over k in Z of sphere(c, 2k)
                    let var = self.ident()?;
                    self.keyword("in")?;
                    self.keyword("Z")?;
                    self.keyword("of")?;
                    self.keyword("sphere")?;
                    self.expect(Tok::LPar)?;
                    let center = self.rat()?;
                    self.expect(Tok::Comma)?;
                    let two = self.int()?;
                    let v2 = self.ident()?;
                    self.expect(Tok::RPar)?;
                    if two != BigInt::from(2) || v2 != var {
                        return Err(self.err("only the sphere(c, 2k) union form is supported"));
                    }
                    return Ok(SetExpr::EvenVal { center });
                }
                self.expect(Tok::LPar)?;
                let mut parts = vec![self.setexpr()?];
                while self.eat(&Tok::Comma) {
                    parts.push(self.setexpr()?);
                }
                self.expect(Tok::RPar)?;
                Ok(SetExpr::Union(parts))
            }
            "raycone" => {
                self.keyword("origin")?;
                let origin = self.point()?;
                let mut rays = Vec::new();
                while self.eat_keyword("ray") {
                    self.keyword("dir")?;
                    let direction = self.point()?;
                    self.keyword("coset")?;
                    let (lambda, exponent) = self.coset()?;
                    rays.push(RayExpr {
                        direction,
                        lambda,
                        exponent,
                    });
                }
                if rays.is_empty() {
                    return Err(self.err("raycone needs at least one ray"));
                }
                let with_apex = self.eat_keyword("withapex");
                Ok(SetExpr::RayCone {
                    origin,
                    rays,
                    with_apex,
                })
            }
            "box" => {
                self.expect(Tok::LPar)?;
                let mut factors = vec![self.setexpr()?];
                while self.eat(&Tok::Comma) {
                    factors.push(self.setexpr()?);
                }
                self.expect(Tok::RPar)?;
                Ok(SetExpr::BoxProduct(factors))
            }
            "graph" => {
                self.expect(Tok::LPar)?;
                let base = self.setexpr()?;
                self.expect(Tok::Comma)?;
                let coef = self.rat()?;
                self.expect(Tok::Comma)?;
                let exponent = self.uint()?;
                self.expect(Tok::Comma)?;
                let germ_level = self.small_int()?;
                self.expect(Tok::RPar)?;
                Ok(SetExpr::Graph {
                    base: Box::new(base),
                    coef,
                    exponent,
                    germ_level,
                })
            }
            "formula" => match self.next()? {
                Tok::Str(s) => Ok(SetExpr::Formula(s)),
                _ => {
                    self.pos -= 1;
                    Err(self.err("formula expects a string literal"))
                }
            },
            _ => Ok(SetExpr::Name(head)),
        }
    }

    fn groupexpr(&mut self) -> Result<GroupExpr, ParseError> {
        if self.eat_keyword("P") {
            return Ok(GroupExpr::Power(self.uint()?));
        }
        self.keyword("cosets")?;
        let exponent = self.uint()?;
        self.expect(Tok::Colon)?;
        let mut reps = vec![self.rat()?];
        while self.eat(&Tok::Comma) {
            reps.push(self.rat()?);
        }
        Ok(GroupExpr::Cosets { exponent, reps })
    }

    fn query(&mut self) -> Result<Query, ParseError> {
        let verb_name = self.ident()?;
        let verb = Verb::from_str(&verb_name).ok_or_else(|| {
            self.pos -= 1;
            self.err(format!("unknown query verb {:?}", verb_name))
        })?;
        let name = self.ident()?;
        let mut q = Query {
            verb,
            name,
            at: None,
            lambda: None,
            level: None,
            z: None,
        };
        loop {
            if self.eat_keyword("at") {
                q.at = Some(self.point()?);
            } else if self.eat_keyword("lambda") {
                q.lambda = Some(self.ident()?);
            } else if self.eat_keyword("level") {
                q.level = Some(self.small_int()?);
            } else if self.eat_keyword("z") {
                q.z = Some(self.point()?);
            } else {
                break;
            }
        }
        Ok(q)
    }

    fn item(&mut self) -> Result<Item, ParseError> {
        if self.eat_keyword("set") {
            let name = self.ident()?;
            self.expect(Tok::Eq)?;
            let e = self.setexpr()?;
            self.expect(Tok::Semi)?;
            Ok(Item::Set(name, e))
        } else if self.eat_keyword("group") {
            let name = self.ident()?;
            self.expect(Tok::Eq)?;
            let g = self.groupexpr()?;
            self.expect(Tok::Semi)?;
            Ok(Item::Group(name, g))
        } else if self.eat_keyword("query") {
            let q = self.query()?;
            self.expect(Tok::Semi)?;
            Ok(Item::Query(q))
        } else {
            Err(self.err("expected set, group, or query"))
        }
    }
}

fn is_odd_prime(p: u64) -> bool {
    if p < 3 || p % 2 == 0 {
        return false;
    }
    let mut d = 3u64;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

pub fn parse(source: &str) -> Result<Document, ParseError> {
    let mut p = Parser {
        toks: lex(source)?,
        pos: 0,
    };
    p.keyword("prime")?;
    let prime = match p.int()?.try_into() {
        Ok(n) => n,
        Err(_) => {
            return Err(ParseError::Semantic {
                msg: "prime out of range".into(),
            })
        }
    };
    if !is_odd_prime(prime) {
        return Err(ParseError::Semantic {
            msg: format!("{} is not an odd prime", prime),
        });
    }
    p.expect(Tok::Semi)?;
    let mut items = Vec::new();
    while p.peek().is_some() {
        items.push(p.item()?);
    }
    check_names(prime, &items)?;
    Ok(Document { prime, items })
}

/// Parse a single item against an existing document context (repl mode).
pub fn parse_item(source: &str) -> Result<Item, ParseError> {
    let mut p = Parser {
        toks: lex(source)?,
        pos: 0,
    };
    let item = p.item()?;
    if p.peek().is_some() {
        return Err(p.err("trailing input after item"));
    }
    Ok(item)
}

fn check_names(_prime: u64, items: &[Item]) -> Result<(), ParseError> {
    let mut sets: Vec<&str> = Vec::new();
    let mut groups: Vec<&str> = Vec::new();
    let dup = |msg: String| ParseError::Semantic { msg };
    for item in items {
        match item {
            Item::Set(name, e) => {
                if sets.contains(&name.as_str()) {
                    return Err(dup(format!("duplicate set name {:?}", name)));
                }
                check_set_refs(e, &sets)?;
                sets.push(name);
            }
            Item::Group(name, _) => {
                if groups.contains(&name.as_str()) {
                    return Err(dup(format!("duplicate group name {:?}", name)));
                }
                groups.push(name);
            }
            Item::Query(q) => {
                if !sets.contains(&q.name.as_str()) {
                    return Err(dup(format!("query references undefined set {:?}", q.name)));
                }
                if let Some(l) = &q.lambda {
                    if !groups.contains(&l.as_str()) {
                        return Err(dup(format!("query references undefined group {:?}", l)));
                    }
                }
            }
        }
    }
    Ok(())
}

fn check_set_refs(e: &SetExpr, sets: &[&str]) -> Result<(), ParseError> {
    match e {
        SetExpr::Name(n) => {
            if sets.contains(&n.as_str()) {
                Ok(())
            } else {
                Err(ParseError::Semantic {
                    msg: format!("undefined set name {:?}", n),
                })
            }
        }
        SetExpr::Union(parts) | SetExpr::BoxProduct(parts) => {
            parts.iter().try_for_each(|p| check_set_refs(p, sets))
        }
        SetExpr::Graph { base, .. } => check_set_refs(base, sets),
        _ => Ok(()),
    }
}

// ---------------------------------------------------------------------------
// Printer

pub fn rat_str(q: &Q) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

fn point_str(pt: &[Q]) -> String {
    if pt.len() == 1 {
        rat_str(&pt[0])
    } else {
        format!(
            "({})",
            pt.iter().map(rat_str).collect::<Vec<_>>().join(", ")
        )
    }
}

fn bound_str(b: &Option<i64>, neg: bool) -> String {
    match b {
        Some(n) => n.to_string(),
        None if neg => "-inf".into(),
        None => "inf".into(),
    }
}

fn setexpr_str(e: &SetExpr) -> String {
    match e {
        SetExpr::Cell {
            center,
            lambda,
            exponent,
            lo,
            hi,
        } => format!(
            "cell({}, {} * P {}, {}, {})",
            rat_str(center),
            rat_str(lambda),
            exponent,
            bound_str(lo, true),
            bound_str(hi, false)
        ),
        SetExpr::EvenVal { center } => format!("evenval({})", rat_str(center)),
        SetExpr::Union(parts) => format!(
            "union({})",
            parts.iter().map(setexpr_str).collect::<Vec<_>>().join(", ")
        ),
        SetExpr::RayCone {
            origin,
            rays,
            with_apex,
        } => {
            let mut s = format!("raycone origin {}", point_str(origin));
            for r in rays {
                s.push_str(&format!(
                    " ray dir {} coset {} * P {}",
                    point_str(&r.direction),
                    rat_str(&r.lambda),
                    r.exponent
                ));
            }
            if *with_apex {
                s.push_str(" withapex");
            }
            s
        }
        SetExpr::BoxProduct(parts) => format!(
            "box({})",
            parts.iter().map(setexpr_str).collect::<Vec<_>>().join(", ")
        ),
        SetExpr::Graph {
            base,
            coef,
            exponent,
            germ_level,
        } => format!(
            "graph({}, {}, {}, {})",
            setexpr_str(base),
            rat_str(coef),
            exponent,
            germ_level
        ),
        SetExpr::Formula(s) => format!("formula \"{}\"", s),
        SetExpr::Name(n) => n.clone(),
    }
}

fn groupexpr_str(g: &GroupExpr) -> String {
    match g {
        GroupExpr::Power(n) => format!("P {}", n),
        GroupExpr::Cosets { exponent, reps } => format!(
            "cosets {} : {}",
            exponent,
            reps.iter().map(rat_str).collect::<Vec<_>>().join(", ")
        ),
    }
}

fn query_str(q: &Query) -> String {
    let mut s = format!("query {} {}", q.verb.as_str(), q.name);
    if let Some(at) = &q.at {
        s.push_str(&format!(" at {}", point_str(at)));
    }
    if let Some(l) = &q.lambda {
        s.push_str(&format!(" lambda {}", l));
    }
    if let Some(n) = &q.level {
        s.push_str(&format!(" level {}", n));
    }
    if let Some(z) = &q.z {
        s.push_str(&format!(" z {}", point_str(z)));
    }
    s
}

pub fn print(doc: &Document) -> String {
    let mut out = format!("prime {};\n", doc.prime);
    for item in &doc.items {
        match item {
            Item::Set(name, e) => out.push_str(&format!("set {} = {};\n", name, setexpr_str(e))),
            Item::Group(name, g) => {
                out.push_str(&format!("group {} = {};\n", name, groupexpr_str(g)))
            }
            Item::Query(q) => out.push_str(&format!("{};\n", query_str(q))),
        }
    }
    out
}
