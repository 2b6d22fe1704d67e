use super::lexer::{Tok, Token};
use super::{ParseDiagnostic, SourceSpan};
use crate::abstraction::{AttrLink, AttrPath, MapDirection, SortMapEntry};
use crate::entity::{
    Attribute, AttributeValue, DataValue, EntityKind, EntitySpec, Functor, FunctorFunction, FunctorMode, Rule,
};
use crate::expr::{CmpOp, Expr};
use crate::number::{Number, Unit};
use crate::ontology::{AttrSelector, Commitment, Requirement};
use crate::scenario::{duration_unit, Demand, RouteEntry, TransferMode};

#[derive(Debug, Clone)]
pub(crate) struct Spanned<T> {
    pub value: T,
    pub span: SourceSpan,
}

pub(crate) type Name = Spanned<String>;

#[derive(Debug, Clone)]
pub(crate) struct SortDecl {
    pub name: Name,
    pub supers: Vec<Name>,
}

#[derive(Debug, Clone)]
pub(crate) struct ScenarioItem {
    pub name: Name,
    pub model: Option<Name>,
    pub abstract_model: Option<Name>,
    pub detailed_model: Option<Name>,
    pub profile: Option<Name>,
    pub mode: Option<TransferMode>,
    pub horizon: Option<Spanned<u64>>,
    pub seed: Option<u64>,
    pub demand: Vec<(Name, Demand)>,
    pub routes: Vec<RouteEntry>,
}

#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone)]
pub(crate) enum Item {
    SortSet {
        name: Name,
        sorts: Vec<SortDecl>,
    },
    Rank {
        below: Name,
        above: Name,
    },
    Alphabet(Vec<(Name, Vec<(Name, Name)>)>),
    Ontology {
        name: Name,
        sort_set: Name,
        provenance: Option<String>,
        commitments: Vec<Spanned<Commitment>>,
    },
    Model {
        name: Name,
        sort_set: Name,
        entities: Vec<Spanned<EntitySpec>>,
    },
    SortMap {
        name: Name,
        direction: MapDirection,
        sort_set: Name,
        entries: Vec<(Name, SortMapEntry)>,
    },
    Expansion {
        name: Name,
        entries: Vec<(Name, Name, Vec<Attribute>)>,
    },
    ModeMap {
        name: Name,
        entries: Vec<(Name, Vec<AttrLink>)>,
    },
    Scenario(ScenarioItem),
    Include(Spanned<String>),
}

pub(crate) struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseDiagnostic>;

const EXPR_KEYWORDS: [&str; 7] = ["and", "or", "not", "true", "false", "has", "sort_at_most"];

impl Parser {
    pub(crate) fn new(tokens: Vec<Token>) -> Parser {
        Parser { tokens, pos: 0 }
    }

    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn span(&self) -> SourceSpan {
        self.tokens[self.pos].span.clone()
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected<T>(&self, expected: &str) -> PResult<T> {
        Err(ParseDiagnostic::error(
            self.span(),
            format!("expected {expected}, found {}", self.peek().describe()),
        ))
    }

    fn expect(&mut self, tok: Tok) -> PResult<SourceSpan> {
        if *self.peek() == tok {
            Ok(self.advance().span)
        } else {
            let want = match &tok {
                Tok::Ident(s) => format!("`{s}`"),
                other => other.describe(),
            };
            self.unexpected(&want)
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.advance();
            true
        } else {
            false
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<SourceSpan> {
        if self.is_kw(kw) {
            Ok(self.advance().span)
        } else {
            self.unexpected(&format!("`{kw}`"))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<Name> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let span = self.advance().span;
                Ok(Spanned { value: s, span })
            }
            _ => self.unexpected(what),
        }
    }

    fn string(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.advance();
                Ok(s)
            }
            _ => self.unexpected("string literal"),
        }
    }

    fn integer(&mut self, what: &str) -> PResult<Spanned<u64>> {
        match self.peek().clone() {
            Tok::Number(n) => match n.parse::<u64>() {
                Ok(v) => {
                    let span = self.advance().span;
                    Ok(Spanned { value: v, span })
                }
                Err(_) => Err(ParseDiagnostic::error(
                    self.span(),
                    format!("expected {what} (non-negative integer), found `{n}`"),
                )),
            },
            _ => self.unexpected(what),
        }
    }

    fn duration(&mut self) -> PResult<Spanned<u64>> {
        let n = self.integer("duration")?;
        let unit = self.ident("duration unit (us, ms, s, m, h)")?;
        let Some(per) = duration_unit(&unit.value) else {
            return Err(ParseDiagnostic::error(
                unit.span,
                format!("expected duration unit (us, ms, s, m, h), found `{}`", unit.value),
            ));
        };
        let value = n
            .value
            .checked_mul(per)
            .ok_or_else(|| ParseDiagnostic::error(n.span.clone(), "duration overflows microsecond range"))?;
        Ok(Spanned { value, span: n.span })
    }

    fn name_list(&mut self, what: &str) -> PResult<Vec<Name>> {
        let mut out = vec![self.ident(what)?];
        while self.eat(&Tok::Comma) {
            out.push(self.ident(what)?);
        }
        Ok(out)
    }

    pub(crate) fn items(&mut self) -> PResult<Vec<Item>> {
        let mut items = Vec::new();
        loop {
            let Tok::Ident(kw) = self.peek().clone() else {
                if *self.peek() == Tok::Eof {
                    return Ok(items);
                }
                return self.unexpected("a top-level block");
            };
            let item = match kw.as_str() {
                "sortset" => self.sort_set()?,
                "rank" => {
                    self.advance();
                    let below = self.ident("sort set name")?;
                    self.expect(Tok::Lt)?;
                    let above = self.ident("sort set name")?;
                    self.expect(Tok::Semi)?;
                    Item::Rank { below, above }
                }
                "alphabet" => self.alphabet()?,
                "ontology" => self.ontology()?,
                "model" => self.model()?,
                "abstractmap" | "refinemap" => self.sort_map()?,
                "expansion" => self.expansion()?,
                "modemap" => self.mode_map()?,
                "scenario" => self.scenario()?,
                "include" => {
                    self.advance();
                    let span = self.span();
                    let path = self.string()?;
                    self.expect(Tok::Semi)?;
                    Item::Include(Spanned { value: path, span })
                }
                _ => return self.unexpected("a top-level block"),
            };
            items.push(item);
        }
    }

    fn sort_set(&mut self) -> PResult<Item> {
        self.expect_kw("sortset")?;
        let name = self.ident("sort set name")?;
        self.expect(Tok::LBrace)?;
        let mut sorts = Vec::new();
        while !self.eat(&Tok::RBrace) {
            self.expect_kw("sort")?;
            let sort = self.ident("sort name")?;
            let supers = if self.eat(&Tok::Lt) {
                self.name_list("supersort name")?
            } else {
                Vec::new()
            };
            self.expect(Tok::Semi)?;
            sorts.push(SortDecl { name: sort, supers });
        }
        Ok(Item::SortSet { name, sorts })
    }

    fn alphabet(&mut self) -> PResult<Item> {
        self.expect_kw("alphabet")?;
        self.expect(Tok::LBrace)?;
        let mut symbols = Vec::new();
        while !self.eat(&Tok::RBrace) {
            self.expect_kw("symbol")?;
            let sym = self.ident("symbol name")?;
            self.expect(Tok::Colon)?;
            let mut sorts = Vec::new();
            loop {
                let set = self.ident("sort set name")?;
                self.expect(Tok::Dot)?;
                let sort = self.ident("sort name")?;
                sorts.push((set, sort));
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::Semi)?;
            symbols.push((sym, sorts));
        }
        Ok(Item::Alphabet(symbols))
    }

    fn ontology(&mut self) -> PResult<Item> {
        self.expect_kw("ontology")?;
        let name = self.ident("ontology name")?;
        self.expect_kw("over")?;
        let sort_set = self.ident("sort set name")?;
        self.expect(Tok::LBrace)?;
        let mut provenance = None;
        let mut commitments = Vec::new();
        loop {
            if self.eat(&Tok::RBrace) {
                break;
            }
            if self.eat_kw("provenance") {
                provenance = Some(self.string()?);
                self.expect(Tok::Semi)?;
                continue;
            }
            let span = self.expect_kw("commitment")?;
            let id = self.ident("commitment id")?;
            self.expect_kw("on")?;
            let sort = self.ident("sort name")?;
            let mut c = Commitment::new(&id.value, &sort.value);
            self.expect(Tok::LBrace)?;
            while !self.eat(&Tok::RBrace) {
                if self.eat_kw("rationale") {
                    c.rationale = self.string()?;
                    self.expect(Tok::Semi)?;
                } else if self.is_kw("require") || self.is_kw("optional") {
                    let required = self.advance().tok == Tok::Ident("require".into());
                    let attr = if self.eat(&Tok::Star) {
                        AttrSelector::Any
                    } else {
                        AttrSelector::Named(self.ident("attribute name or `*`")?.value)
                    };
                    self.expect(Tok::Colon)?;
                    let sort = self.ident("sort name")?.value;
                    self.expect(Tok::Semi)?;
                    c.requirements.push(Requirement { attr, sort, required });
                } else if self.is_kw("rule") {
                    let n = c.rules.len();
                    c.rules.push(self.rule(n)?);
                } else {
                    return self.unexpected("`rationale`, `require`, `optional`, `rule` or `}`");
                }
            }
            commitments.push(Spanned { value: c, span });
        }
        Ok(Item::Ontology {
            name,
            sort_set,
            provenance,
            commitments,
        })
    }

    fn model(&mut self) -> PResult<Item> {
        self.expect_kw("model")?;
        let name = self.ident("model name")?;
        self.expect_kw("in")?;
        let sort_set = self.ident("sort set name")?;
        self.expect(Tok::LBrace)?;
        let mut entities = Vec::new();
        while !self.eat(&Tok::RBrace) {
            entities.push(self.entity()?);
        }
        Ok(Item::Model {
            name,
            sort_set,
            entities,
        })
    }

    fn entity(&mut self) -> PResult<Spanned<EntitySpec>> {
        self.expect_kw("entity")?;
        let name = self.ident("entity name")?;
        let mut spec = EntitySpec::new(&name.value, &[]);
        if self.eat(&Tok::Colon) {
            spec.result_sort = self.name_list("result sort")?.into_iter().map(|n| n.value).collect();
        }
        if self.eat_kw("kind") {
            let k = self.ident("entity kind")?;
            spec.kind = EntityKind::from_keyword(&k.value).ok_or_else(|| {
                ParseDiagnostic::error(
                    k.span.clone(),
                    format!("expected object, operation, situation or process, found `{}`", k.value),
                )
            })?;
        }
        self.expect(Tok::LBrace)?;
        while !self.eat(&Tok::RBrace) {
            if self.is_kw("attr") {
                spec.attributes.push(self.attribute()?);
            } else if self.eat_kw("functor") {
                if spec.functor.is_some() {
                    return Err(ParseDiagnostic::error(self.span(), "entity already has a functor"));
                }
                let mode = self.functor_mode()?;
                self.expect(Tok::LBrace)?;
                let mut functions = Vec::new();
                while !self.eat(&Tok::RBrace) {
                    self.expect_kw("fn")?;
                    let fname = self.ident("function name")?.value;
                    self.expect(Tok::LParen)?;
                    let mut domain = Vec::new();
                    if !self.eat(&Tok::RParen) {
                        domain = self.name_list("attribute name")?.into_iter().map(|n| n.value).collect();
                        self.expect(Tok::RParen)?;
                    }
                    self.expect(Tok::Arrow)?;
                    let codomain = self.ident("codomain sort")?.value;
                    let body = if self.eat(&Tok::Assign) {
                        Some(self.expr()?)
                    } else {
                        None
                    };
                    self.expect(Tok::Semi)?;
                    functions.push(FunctorFunction {
                        name: fname,
                        domain,
                        codomain,
                        body,
                    });
                }
                spec.functor = Some(Functor { mode, functions });
            } else if self.is_kw("rule") {
                let n = spec.rules.len();
                spec.rules.push(self.rule(n)?);
            } else {
                return self.unexpected("`attr`, `functor`, `rule` or `}`");
            }
        }
        Ok(Spanned {
            value: spec,
            span: name.span,
        })
    }

    fn functor_mode(&mut self) -> PResult<FunctorMode> {
        let m = self.ident("functor mode")?;
        FunctorMode::from_keyword(&m.value).ok_or_else(|| {
            ParseDiagnostic::error(
                m.span,
                format!("expected aggregate, compose, derive or identity, found `{}`", m.value),
            )
        })
    }

    fn attribute(&mut self) -> PResult<Attribute> {
        self.expect_kw("attr")?;
        let name = self.ident("attribute name")?.value;
        self.expect(Tok::Colon)?;
        let sort = self.ident("sort name")?.value;
        self.expect(Tok::Assign)?;
        let value = self.value()?;
        self.expect(Tok::Semi)?;
        Ok(Attribute { name, sort, value })
    }

    fn value(&mut self) -> PResult<AttributeValue> {
        match self.peek().clone() {
            Tok::Ident(kw) if kw == "ref" || kw == "extern" => {
                self.advance();
                let target = self.ident("entity name")?.value;
                Ok(if kw == "ref" {
                    AttributeValue::Ref(target)
                } else {
                    AttributeValue::External(target)
                })
            }
            Tok::LBracket => {
                self.advance();
                let mut items = Vec::new();
                if !self.eat(&Tok::RBracket) {
                    loop {
                        items.push(self.value()?);
                        if self.eat(&Tok::RBracket) {
                            break;
                        }
                        self.expect(Tok::Comma)?;
                    }
                }
                Ok(AttributeValue::List(items))
            }
            Tok::Str(_) | Tok::Number(_) | Tok::Ident(_) => match self.data()? {
                Some(d) => Ok(AttributeValue::Data(d)),
                None => self.unexpected("a value"),
            },
            _ => self.unexpected("a value"),
        }
    }

    /// A literal data value, or `None` without consuming anything.
    fn data(&mut self) -> PResult<Option<DataValue>> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.advance();
                Ok(Some(DataValue::Text(s)))
            }
            Tok::Ident(b) if b == "true" || b == "false" => {
                self.advance();
                Ok(Some(DataValue::Bool(b == "true")))
            }
            Tok::Number(text) => {
                let span = self.span();
                let n: Number = text
                    .parse()
                    .map_err(|e| ParseDiagnostic::error(span, format!("invalid number: {e}")))?;
                self.advance();
                let unit = self.unit();
                Ok(Some(DataValue::Number(n, unit)))
            }
            _ => Ok(None),
        }
    }

    fn unit(&mut self) -> Unit {
        match self.peek() {
            Tok::Ident(u) if u == "m" => {
                self.advance();
                if *self.peek() == Tok::Slash && *self.peek_at(1) == Tok::Ident("s".into()) {
                    self.advance();
                    self.advance();
                    Unit::MeterPerSecond
                } else {
                    Unit::Meter
                }
            }
            Tok::Ident(u) if u == "s" => {
                self.advance();
                Unit::Second
            }
            Tok::Ident(u) if u == "count" => {
                self.advance();
                Unit::Count
            }
            _ => Unit::None,
        }
    }

    fn rule(&mut self, index: usize) -> PResult<Rule> {
        self.expect_kw("rule")?;
        let id = match (self.peek().clone(), self.peek_at(1)) {
            (Tok::Ident(id), Tok::Colon) => {
                self.advance();
                self.advance();
                id
            }
            _ => format!("r{}", index + 1),
        };
        let expr = self.expr()?;
        self.expect(Tok::Semi)?;
        Ok(Rule { id, expr })
    }

    pub(crate) fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.and_expr()?;
        while self.eat_kw("or") {
            lhs = Expr::or(lhs, self.and_expr()?);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.not_expr()?;
        while self.eat_kw("and") {
            lhs = Expr::and(lhs, self.not_expr()?);
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if self.eat_kw("not") {
            return Ok(Expr::not(self.not_expr()?));
        }
        let lhs = self.atom()?;
        let op = match self.peek() {
            Tok::EqEq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            _ => return Ok(lhs),
        };
        self.advance();
        Ok(Expr::cmp(op, lhs, self.atom()?))
    }

    fn atom(&mut self) -> PResult<Expr> {
        if let Some(d) = self.data()? {
            return Ok(Expr::Literal(d));
        }
        match self.peek().clone() {
            Tok::LParen => {
                self.advance();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(kw) if kw == "has" => {
                self.advance();
                self.expect(Tok::LParen)?;
                let a = self.ident("attribute name")?.value;
                self.expect(Tok::RParen)?;
                Ok(Expr::Has(a))
            }
            Tok::Ident(kw) if kw == "sort_at_most" => {
                self.advance();
                self.expect(Tok::LParen)?;
                let attr = self.ident("attribute name")?.value;
                self.expect(Tok::Comma)?;
                let sort = self.ident("sort name")?.value;
                self.expect(Tok::RParen)?;
                Ok(Expr::SortAtMost { attr, sort })
            }
            Tok::Ident(a) if !EXPR_KEYWORDS.contains(&a.as_str()) => {
                self.advance();
                Ok(Expr::Attr(a))
            }
            _ => self.unexpected("an expression"),
        }
    }

    fn sort_map(&mut self) -> PResult<Item> {
        let direction = if self.eat_kw("abstractmap") {
            MapDirection::Abstracting
        } else {
            self.expect_kw("refinemap")?;
            MapDirection::Refining
        };
        let name = self.ident("map name")?;
        self.expect_kw("in")?;
        let sort_set = self.ident("sort set name")?;
        self.expect(Tok::LBrace)?;
        let mut entries = Vec::new();
        while !self.eat(&Tok::RBrace) {
            let source = self.ident("source sort")?;
            self.expect(Tok::Arrow)?;
            let target = self.ident("target sort")?.value;
            let attr_name = if self.eat_kw("as") {
                Some(self.ident("attribute name")?.value)
            } else {
                None
            };
            let mode = if matches!(self.peek(), Tok::Ident(_)) {
                Some(self.functor_mode()?)
            } else {
                None
            };
            self.expect(Tok::Semi)?;
            entries.push((
                source,
                SortMapEntry {
                    target,
                    attr_name,
                    mode,
                },
            ));
        }
        Ok(Item::SortMap {
            name,
            direction,
            sort_set,
            entries,
        })
    }

    fn expansion(&mut self) -> PResult<Item> {
        self.expect_kw("expansion")?;
        let name = self.ident("expansion name")?;
        self.expect(Tok::LBrace)?;
        let mut entries = Vec::new();
        while !self.eat(&Tok::RBrace) {
            let entity = self.ident("entity name")?;
            self.expect(Tok::Dot)?;
            let attr = self.ident("attribute name")?;
            self.expect(Tok::LBrace)?;
            let mut produced = Vec::new();
            while !self.eat(&Tok::RBrace) {
                produced.push(self.attribute()?);
            }
            entries.push((entity, attr, produced));
        }
        Ok(Item::Expansion { name, entries })
    }

    fn attr_path(&mut self) -> PResult<AttrPath> {
        let entity = self.ident("entity name")?.value;
        self.expect(Tok::Dot)?;
        let attr = self.ident("attribute name")?.value;
        Ok(AttrPath { entity, attr })
    }

    fn mode_map(&mut self) -> PResult<Item> {
        self.expect_kw("modemap")?;
        let name = self.ident("mode mapping name")?;
        self.expect(Tok::LBrace)?;
        let mut entries = Vec::new();
        while !self.eat(&Tok::RBrace) {
            let entity = self.ident("abstract entity name")?;
            self.expect(Tok::LBrace)?;
            let mut links = Vec::new();
            while !self.eat(&Tok::RBrace) {
                let abstract_attr = self.ident("abstract attribute name")?.value;
                self.expect(Tok::LeftArrow)?;
                let mut detailed = vec![self.attr_path()?];
                while self.eat(&Tok::Comma) {
                    detailed.push(self.attr_path()?);
                }
                self.expect_kw("as")?;
                let mode = self.functor_mode()?;
                self.expect(Tok::Semi)?;
                links.push(AttrLink {
                    abstract_attr,
                    detailed,
                    mode,
                });
            }
            entries.push((entity, links));
        }
        Ok(Item::ModeMap { name, entries })
    }

    fn scenario(&mut self) -> PResult<Item> {
        self.expect_kw("scenario")?;
        let name = self.ident("scenario name")?;
        let mut s = ScenarioItem {
            name,
            model: None,
            abstract_model: None,
            detailed_model: None,
            profile: None,
            mode: None,
            horizon: None,
            seed: None,
            demand: Vec::new(),
            routes: Vec::new(),
        };
        self.expect(Tok::LBrace)?;
        while !self.eat(&Tok::RBrace) {
            let kw = self.ident("scenario setting")?;
            match kw.value.as_str() {
                "model" => s.model = Some(self.ident("model name")?),
                "abstract" => s.abstract_model = Some(self.ident("model name")?),
                "detailed" => s.detailed_model = Some(self.ident("model name")?),
                "profile" => s.profile = Some(self.ident("ontology name")?),
                "mode" => {
                    let m = self.ident("`abstract` or `detailed`")?;
                    s.mode = Some(TransferMode::from_keyword(&m.value).ok_or_else(|| {
                        ParseDiagnostic::error(
                            m.span.clone(),
                            format!("expected `abstract` or `detailed`, found `{}`", m.value),
                        )
                    })?);
                }
                "horizon" => s.horizon = Some(self.duration()?),
                "seed" => s.seed = Some(self.integer("seed")?.value),
                "demand" => {
                    let line = self.ident("machining line name")?;
                    let d = if self.eat_kw("every") {
                        let interval_us = self.duration()?.value;
                        let offset_us = if self.eat_kw("offset") { self.duration()?.value } else { 0 };
                        Demand::Every {
                            interval_us,
                            offset_us,
                        }
                    } else if self.eat_kw("exponential") {
                        let mean_us = self.duration()?.value;
                        let offset_us = if self.eat_kw("offset") { self.duration()?.value } else { 0 };
                        Demand::Exponential { mean_us, offset_us }
                    } else if self.eat_kw("batch") {
                        let count = self.integer("batch size")?.value;
                        self.expect_kw("at")?;
                        let at_us = self.duration()?.value;
                        Demand::Batch { count, at_us }
                    } else {
                        return self.unexpected("`every`, `exponential` or `batch`");
                    };
                    s.demand.push((line, d));
                }
                "route" => {
                    let from = self.ident("source component")?.value;
                    self.expect(Tok::Arrow)?;
                    let to = self.ident("destination component")?.value;
                    s.routes.push(RouteEntry { from, to });
                }
                other => {
                    return Err(ParseDiagnostic::error(
                        kw.span.clone(),
                        format!(
                            "expected model, abstract, detailed, profile, mode, horizon, seed, demand or route, found `{other}`"
                        ),
                    ))
                }
            }
            self.expect(Tok::Semi)?;
        }
        Ok(Item::Scenario(s))
    }
}
