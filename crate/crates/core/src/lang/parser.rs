use std::collections::{HashMap, HashSet};
use std::str::FromStr;

use rust_decimal::Decimal;

use super::lexer::{lex_line, Tok, Token};
use super::{Diagnostic, SourceMap, SourceSpan};
use crate::norm::*;

pub(crate) const KEYWORDS: &[&str] = &[
    "contract",
    "agents",
    "proposition",
    "initially",
    "config",
    "rule",
    "terminated",
    "happy",
    "unhappy",
    "O",
    "POW",
    "exercise",
    "not",
    "by",
    "attrs",
];

pub(crate) fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

type PResult<T> = Result<T, Diagnostic>;

/// Token cursor over a single line.
pub(crate) struct Cursor<'a> {
    toks: &'a [Token],
    pos: usize,
    eol: SourceSpan,
}

impl<'a> Cursor<'a> {
    pub(crate) fn new(toks: &'a [Token], line_no: usize, line_len: usize) -> Self {
        let col = line_len + 1;
        Cursor {
            toks,
            pos: 0,
            eol: SourceSpan::new(line_no, col, col),
        }
    }

    pub(crate) fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.pos)
    }

    pub(crate) fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub(crate) fn next(&mut self) -> Option<&'a Token> {
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn here(&self) -> SourceSpan {
        self.peek().map(|t| t.span).unwrap_or(self.eol)
    }

    pub(crate) fn unexpected(&self, wanted: &str) -> Diagnostic {
        match self.peek() {
            Some(t) => Diagnostic::error(
                format!("expected {wanted}, found {}", t.tok.describe()),
                Some(t.span),
            ),
            None => Diagnostic::error(format!("expected {wanted}, found end of line"), Some(self.eol)),
        }
    }

    pub(crate) fn expect(&mut self, tok: Tok) -> PResult<SourceSpan> {
        match self.peek() {
            Some(t) if t.tok == tok => {
                self.pos += 1;
                Ok(t.span)
            }
            _ => Err(self.unexpected(&tok.describe())),
        }
    }

    pub(crate) fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek().is_some_and(|t| &t.tok == tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub(crate) fn peek_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::Ident(s), .. }) if s == kw)
    }

    pub(crate) fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.peek_keyword(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    /// A non-keyword identifier.
    pub(crate) fn ident(&mut self, what: &str) -> PResult<(String, SourceSpan)> {
        match self.peek() {
            Some(Token {
                tok: Tok::Ident(s),
                span,
            }) => {
                if is_keyword(s) {
                    return Err(Diagnostic::error(
                        format!("`{s}` is a reserved word and cannot be used as {what}"),
                        Some(*span),
                    ));
                }
                self.pos += 1;
                Ok((s.clone(), *span))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    pub(crate) fn number(&mut self) -> PResult<(u64, SourceSpan)> {
        match self.peek() {
            Some(Token {
                tok: Tok::Number(n),
                span,
            }) => {
                let v = n.parse::<u64>().map_err(|_| {
                    Diagnostic::error(
                        format!("`{n}` is not a non-negative whole number"),
                        Some(*span),
                    )
                })?;
                self.pos += 1;
                Ok((v, *span))
            }
            _ => Err(self.unexpected("a number")),
        }
    }

    pub(crate) fn finish(&self) -> PResult<()> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.unexpected("end of line"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum RefKind {
    Agent,
    Prop,
}

/// Name references collected while parsing, resolved once all declarations are known.
#[derive(Default)]
pub(crate) struct Refs(pub Vec<(RefKind, String, SourceSpan)>);

impl Refs {
    fn agent(&mut self, name: &str, span: SourceSpan) -> AgentId {
        self.0.push((RefKind::Agent, name.to_string(), span));
        AgentId::new(name)
    }

    fn prop(&mut self, name: &str, span: SourceSpan) -> PropId {
        self.0.push((RefKind::Prop, name.to_string(), span));
        PropId::new(name)
    }
}

fn obligation_body(c: &mut Cursor, refs: &mut Refs) -> PResult<Obligation> {
    c.expect(Tok::LParen)?;
    let (bearer, bspan) = c.ident("an agent name")?;
    c.expect(Tok::Comma)?;
    let (prop, pspan) = c.ident("a proposition name")?;
    c.expect(Tok::RParen)?;
    Ok(Obligation {
        bearer: refs.agent(&bearer, bspan),
        prop: refs.prop(&prop, pspan),
    })
}

fn terminal_class(c: &mut Cursor) -> PResult<TerminalClass> {
    if c.eat_keyword("happy") {
        Ok(TerminalClass::Happy)
    } else if c.eat_keyword("unhappy") {
        Ok(TerminalClass::Unhappy)
    } else {
        Err(c.unexpected("`happy` or `unhappy`"))
    }
}

pub(crate) fn power_content(c: &mut Cursor, refs: &mut Refs) -> PResult<PowerContent> {
    if c.eat_keyword("O") {
        Ok(PowerContent::Obligation(obligation_body(c, refs)?))
    } else if c.eat_keyword("terminated") {
        Ok(PowerContent::Terminate {
            class: terminal_class(c)?,
        })
    } else if c.peek_keyword("POW") {
        Err(Diagnostic::error(
            "a power may only confer an obligation or termination, not another power",
            Some(c.here()),
        ))
    } else {
        Err(c.unexpected("`O(...)` or `terminated`"))
    }
}

fn atom(c: &mut Cursor, refs: &mut Refs) -> PResult<NormAtom> {
    if c.eat_keyword("O") {
        Ok(NormAtom::Obligation(obligation_body(c, refs)?))
    } else if c.eat_keyword("POW") {
        c.expect(Tok::LParen)?;
        let (holder, hspan) = c.ident("an agent name")?;
        c.expect(Tok::Comma)?;
        let content = power_content(c, refs)?;
        c.expect(Tok::RParen)?;
        Ok(NormAtom::Power(Power {
            holder: refs.agent(&holder, hspan),
            content,
        }))
    } else {
        Err(c.unexpected("a norm `O(...)` or `POW(...)`"))
    }
}

fn qualifier(c: &mut Cursor) -> PResult<TemporalQualifier> {
    let Some(Token {
        tok: Tok::At(name),
        span,
    }) = c.peek()
    else {
        return Ok(TemporalQualifier::None);
    };
    c.next();
    c.expect(Tok::LParen)?;
    let q = match name.as_str() {
        "before" => TemporalQualifier::Before { t: c.number()?.0 },
        "after" => TemporalQualifier::After { t: c.number()?.0 },
        "between" => {
            let from = c.number()?.0;
            c.expect(Tok::Comma)?;
            let to = c.number()?.0;
            TemporalQualifier::Between { from, to }
        }
        other => {
            return Err(Diagnostic::error(
                format!("unknown temporal qualifier `@{other}`; expected @before, @after or @between"),
                Some(*span),
            ))
        }
    };
    c.expect(Tok::RParen)?;
    Ok(q)
}

fn refinement(c: &mut Cursor) -> PResult<ViolationRefinement> {
    let start = c.here();
    let mut r = ViolationRefinement::default();
    loop {
        let (dim, span) = match c.peek() {
            Some(Token {
                tok: Tok::Ident(s),
                span,
            }) => (s.as_str(), *span),
            _ => return Err(c.unexpected("a violation dimension")),
        };
        c.next();
        match dim {
            "nonconforming" => r.nonconforming = true,
            "late" => r.late = true,
            "wrong_performer" => r.wrong_performer = true,
            "lapse" => r.lapse = true,
            other => {
                return Err(Diagnostic::error(
                    format!(
                        "unknown violation dimension `{other}`; expected nonconforming, late, wrong_performer or lapse"
                    ),
                    Some(span),
                ))
            }
        }
        if !c.eat(&Tok::Plus) {
            break;
        }
    }
    if !r.is_well_formed() {
        return Err(Diagnostic::error(
            "`lapse` cannot be combined with other violation dimensions",
            Some(start),
        ));
    }
    Ok(r)
}

fn label(c: &mut Cursor, refs: &mut Refs) -> PResult<TransitionLabel> {
    let kind = if c.eat_keyword("exercise") {
        let (agent, aspan) = c.ident("an agent name")?;
        c.expect(Tok::Colon)?;
        let content = power_content(c, refs)?;
        LabelKind::Exercise {
            agent: refs.agent(&agent, aspan),
            content,
        }
    } else {
        let negated = c.eat_keyword("not");
        let (agent, aspan) = c.ident("an agent name")?;
        c.expect(Tok::Colon)?;
        let (prop, pspan) = c.ident("a proposition name")?;
        let agent = refs.agent(&agent, aspan);
        let prop = refs.prop(&prop, pspan);
        if negated {
            let refinement = if c.eat(&Tok::Slash) {
                Some(refinement(c)?)
            } else {
                None
            };
            LabelKind::Violate {
                agent,
                prop,
                refinement,
            }
        } else {
            LabelKind::Fulfil { agent, prop }
        }
    };
    let qualifier = qualifier(c)?;
    Ok(TransitionLabel { kind, qualifier })
}

fn consequent(c: &mut Cursor, refs: &mut Refs) -> PResult<Consequent> {
    if c.eat_keyword("terminated") {
        Ok(Consequent::Terminate {
            class: terminal_class(c)?,
        })
    } else if c.eat_keyword("not") {
        Ok(Consequent::Remove {
            atom: atom(c, refs)?,
        })
    } else {
        Ok(Consequent::Add {
            atom: atom(c, refs)?,
        })
    }
}

pub(crate) fn attr_value(c: &mut Cursor) -> PResult<AttrValue> {
    let value = match c.peek() {
        Some(Token {
            tok: Tok::Str(s), ..
        }) => AttrValue::Text(s.clone()),
        Some(Token {
            tok: Tok::Number(n),
            span,
        }) => Decimal::from_str(n)
            .map(AttrValue::Amount)
            .map_err(|_| Diagnostic::error(format!("`{n}` is not a decimal amount"), Some(*span)))?,
        _ => return Err(c.unexpected("a quoted text or decimal attribute value")),
    };
    c.next();
    Ok(value)
}

/// `attrs{k=v, ...}`; the `attrs` keyword has already been consumed.
pub(crate) fn attrs_block(c: &mut Cursor) -> PResult<Attrs> {
    c.expect(Tok::LBrace)?;
    let mut attrs = Attrs::new();
    if c.eat(&Tok::RBrace) {
        return Ok(attrs);
    }
    loop {
        let (key, kspan) = match c.peek() {
            Some(Token {
                tok: Tok::Ident(s),
                span,
            }) => (s.clone(), *span),
            _ => return Err(c.unexpected("an attribute name")),
        };
        c.next();
        c.expect(Tok::Equals)?;
        let value = attr_value(c)?;
        if attrs.insert(key.clone(), value).is_some() {
            return Err(Diagnostic::error(
                format!("duplicate attribute `{key}`"),
                Some(kspan),
            ));
        }
        if c.eat(&Tok::Comma) {
            continue;
        }
        c.expect(Tok::RBrace)?;
        return Ok(attrs);
    }
}

struct Builder {
    name: Option<(String, SourceSpan)>,
    agents: Vec<(AgentId, SourceSpan)>,
    propositions: Vec<(Proposition, SourceSpan)>,
    initial: NormSet,
    config: EngineConfig,
    rules: Vec<(Rule, SourceSpan, SourceSpan)>,
    map: SourceMap,
    refs: Refs,
}

impl Builder {
    fn statement(&mut self, c: &mut Cursor, line_span: SourceSpan) -> PResult<()> {
        let Some(first) = c.peek() else {
            return Ok(());
        };
        let keyword = match &first.tok {
            Tok::Ident(s) => s.clone(),
            _ => return Err(c.unexpected("a declaration keyword")),
        };
        let kw_span = first.span;
        c.next();
        match keyword.as_str() {
            "contract" => {
                let (name, _) = c.ident("a contract name")?;
                c.finish()?;
                if let Some((_, prev)) = &self.name {
                    return Err(Diagnostic::error(
                        format!("duplicate contract declaration (first at line {})", prev.line),
                        Some(kw_span),
                    ));
                }
                self.name = Some((name, line_span));
                self.map.contract = Some(line_span);
            }
            "agents" => loop {
                let (name, span) = c.ident("an agent name")?;
                if self.agents.iter().any(|(a, _)| a.as_str() == name) {
                    return Err(Diagnostic::error(
                        format!("duplicate declaration of agent `{name}`"),
                        Some(span),
                    ));
                }
                self.agents.push((AgentId::new(name), span));
                if !c.eat(&Tok::Comma) {
                    c.finish()?;
                    break;
                }
            },
            "proposition" => {
                let (name, nspan) = c.ident("a proposition name")?;
                if self.propositions.iter().any(|(p, _)| p.name.as_str() == name) {
                    return Err(Diagnostic::error(
                        format!("duplicate declaration of proposition `{name}`"),
                        Some(nspan),
                    ));
                }
                let mut prop = Proposition::new(&name, "");
                if let Some(Token {
                    tok: Tok::Str(s), ..
                }) = c.peek()
                {
                    prop.display = s.clone();
                    c.next();
                }
                if c.eat_keyword("by") {
                    let (who, span) = c.ident("an agent name")?;
                    prop.performer = Some(self.refs.agent(&who, span));
                }
                if c.eat_keyword("attrs") {
                    prop.attrs = attrs_block(c)?;
                }
                c.finish()?;
                self.map.propositions.insert(prop.name.clone(), line_span);
                self.propositions.push((prop, line_span));
            }
            "initially" => {
                if !c.at_end() {
                    loop {
                        let a = atom(c, &mut self.refs)?;
                        self.initial.insert(a);
                        if !c.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                c.finish()?;
                self.map.initial.get_or_insert(line_span);
            }
            "config" => {
                while !c.at_end() {
                    let (key, kspan) = match c.peek() {
                        Some(Token {
                            tok: Tok::Ident(s),
                            span,
                        }) => (s.clone(), *span),
                        _ => return Err(c.unexpected("a config key")),
                    };
                    c.next();
                    c.expect(Tok::Equals)?;
                    let vspan = c.here();
                    match key.as_str() {
                        "frame" => {
                            self.config.frame_policy = match c.next().map(|t| &t.tok) {
                                Some(Tok::Ident(v)) if v == "discharge" => {
                                    FramePolicy::DischargeUnmentioned
                                }
                                Some(Tok::Ident(v)) if v == "persist" => FramePolicy::PersistUnmentioned,
                                _ => {
                                    return Err(Diagnostic::error(
                                        "frame must be `discharge` or `persist`",
                                        Some(vspan),
                                    ))
                                }
                            }
                        }
                        "violation_axiom" => {
                            self.config.violation_axiom = match c.next().map(|t| &t.tok) {
                                Some(Tok::Ident(v)) if v == "on" => true,
                                Some(Tok::Ident(v)) if v == "off" => false,
                                _ => {
                                    return Err(Diagnostic::error(
                                        "violation_axiom must be `on` or `off`",
                                        Some(vspan),
                                    ))
                                }
                            }
                        }
                        "state_bound" => {
                            let (n, nspan) = c.number()?;
                            if n == 0 {
                                return Err(Diagnostic::error("state_bound must be at least 1", Some(nspan)));
                            }
                            self.config.state_bound = usize::try_from(n).map_err(|_| {
                                Diagnostic::error("state_bound is too large", Some(nspan))
                            })?;
                        }
                        other => {
                            return Err(Diagnostic::error(
                                format!("unknown config key `{other}`; expected frame, violation_axiom or state_bound"),
                                Some(kspan),
                            ))
                        }
                    }
                    c.eat(&Tok::Comma);
                }
                self.map.config = Some(line_span);
            }
            "rule" => {
                let (id, id_span) = c.ident("a rule id")?;
                c.expect(Tok::Colon)?;
                if c.peek_keyword("terminated") {
                    return Err(Diagnostic::error(
                        "a rule guard must be a norm; `terminated` states have no outgoing transitions",
                        Some(c.here()),
                    ));
                }
                let guard = atom(c, &mut self.refs)?;
                c.expect(Tok::ArrowOpen)?;
                let label = label(c, &mut self.refs)?;
                c.expect(Tok::ArrowClose)?;
                let mut consequents = Vec::new();
                let mut term_span = None;
                if !c.at_end() {
                    loop {
                        let span = c.here();
                        let cq = consequent(c, &mut self.refs)?;
                        if matches!(cq, Consequent::Terminate { .. }) {
                            term_span = Some(span);
                        }
                        consequents.push(cq);
                        if !c.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                c.finish()?;
                if let Some(span) = term_span {
                    if consequents.len() > 1 {
                        return Err(Diagnostic::error(
                            "`terminated` must be the only consequent of a rule",
                            Some(span),
                        ));
                    }
                }
                if let Some((_, prev, _)) = self.rules.iter().find(|(r, _, _)| r.id == id) {
                    return Err(Diagnostic::error(
                        format!("duplicate rule id `{id}` (first at line {})", prev.line),
                        Some(id_span),
                    ));
                }
                self.rules.push((
                    Rule {
                        id,
                        guard,
                        label,
                        consequents,
                    },
                    line_span,
                    id_span,
                ));
            }
            other => {
                return Err(Diagnostic::error(
                    format!(
                        "unknown declaration `{other}`; expected contract, agents, proposition, initially, config or rule"
                    ),
                    Some(kw_span),
                ))
            }
        }
        Ok(())
    }
}

/// Parse source and also return where each declaration sits.
pub fn parse_with_map(source: &str) -> Result<(ContractSpec, SourceMap), Vec<Diagnostic>> {
    let mut b = Builder {
        name: None,
        agents: Vec::new(),
        propositions: Vec::new(),
        initial: NormSet::new(),
        config: EngineConfig::default(),
        rules: Vec::new(),
        map: SourceMap::default(),
        refs: Refs::default(),
    };
    let mut diags = Vec::new();
    let mut last_line = 1;

    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let toks = match lex_line(line, line_no) {
            Ok(t) => t,
            Err(e) => {
                diags.push(Diagnostic::error(e.message, Some(e.span)));
                continue;
            }
        };
        if toks.is_empty() {
            continue;
        }
        let line_len = line.chars().count();
        let first = toks[0].span.col_start;
        let last = toks[toks.len() - 1].span.col_end;
        let line_span = SourceSpan::new(line_no, first, last);
        let mut cursor = Cursor::new(&toks, line_no, line_len);
        if let Err(d) = b.statement(&mut cursor, line_span) {
            diags.push(d);
        }
    }

    if b.name.is_none() {
        let line = if source.trim().is_empty() { 1 } else { last_line };
        diags.insert(
            0,
            Diagnostic::error("no contract declaration", Some(SourceSpan::new(line, 1, 1))),
        );
    }

    let agents: HashSet<&str> = b.agents.iter().map(|(a, _)| a.as_str()).collect();
    let props: HashSet<&str> = b.propositions.iter().map(|(p, _)| p.name.as_str()).collect();
    let mut reported: HashMap<(RefKind, &str, usize), ()> = HashMap::new();
    for (kind, name, span) in &b.refs.0 {
        let declared = match kind {
            RefKind::Agent => agents.contains(name.as_str()),
            RefKind::Prop => props.contains(name.as_str()),
        };
        if !declared && reported.insert((*kind, name, span.line), ()).is_none() {
            let what = match kind {
                RefKind::Agent => "agent",
                RefKind::Prop => "proposition",
            };
            diags.push(Diagnostic::error(format!("undeclared {what} `{name}`"), Some(*span)));
        }
    }

    if !diags.is_empty() {
        diags.sort_by_key(|d| d.span.map(|s| (s.line, s.col_start)));
        return Err(diags);
    }

    let (name, _) = b.name.expect("checked above");
    b.map.rules = b.rules.iter().map(|(_, span, _)| *span).collect();
    let spec = ContractSpec {
        name,
        agents: b.agents.into_iter().map(|(a, _)| a).collect(),
        propositions: b.propositions.into_iter().map(|(p, _)| p).collect(),
        initial: b.initial,
        rules: b.rules.into_iter().map(|(r, _, _)| r).collect(),
        config: b.config,
    };
    Ok((spec, b.map))
}
