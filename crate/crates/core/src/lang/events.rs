//! Event lines as found in `.events` replay files:
//!
//! ```text
//! t=20 agent=s act=alpha attrs{desc="good-earth", qty="1"}
//! t=31 tick
//! t=40 agent=p exercise O(s, phi)
//! ```

use super::lexer::{lex_line, Tok};
use super::parser::{attrs_block, power_content, Cursor, Refs};
use super::{Diagnostic, SourceSpan};
use crate::norm::*;

fn key(c: &mut Cursor, name: &str) -> Result<(), Diagnostic> {
    let (k, span) = c.ident(&format!("`{name}=`"))?;
    if k != name {
        return Err(Diagnostic::error(
            format!("expected `{name}=`, found `{k}`"),
            Some(span),
        ));
    }
    c.expect(Tok::Equals)?;
    Ok(())
}

/// Parse one line; blank lines and comments yield `None`.
pub fn parse_event_line(line: &str, line_no: usize) -> Result<Option<Event>, Diagnostic> {
    let toks = lex_line(line, line_no)
        .map_err(|e| Diagnostic::error(e.message, Some(e.span)))?;
    if toks.is_empty() {
        return Ok(None);
    }
    let mut c = Cursor::new(&toks, line_no, line.chars().count());
    key(&mut c, "t")?;
    let (at, _) = c.number()?;

    if let Some(tok) = c.peek() {
        if tok.tok == Tok::Ident("tick".into()) {
            c.next();
            c.finish()?;
            return Ok(Some(Event::Tick { at }));
        }
    }
    key(&mut c, "agent")?;
    let (actor, _) = c.ident("an agent name")?;
    let act = if c.eat_keyword("exercise") {
        Act::Exercise {
            content: power_content(&mut c, &mut Refs::default())?,
        }
    } else {
        key(&mut c, "act")?;
        let (prop, _) = c.ident("a proposition name")?;
        Act::Perform {
            prop: PropId::new(prop),
        }
    };
    let attrs = if c.eat_keyword("attrs") {
        attrs_block(&mut c)?
    } else {
        Attrs::new()
    };
    c.finish()?;
    Ok(Some(Event::Action {
        at,
        actor: AgentId::new(actor),
        act,
        attrs,
    }))
}

/// Parse a whole replay file, stopping at the first malformed line.
pub fn parse_events(text: &str) -> Result<Vec<Event>, Diagnostic> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(ev) = parse_event_line(line, i + 1)? {
            out.push(ev);
        }
    }
    Ok(out)
}

/// Span-free helper for callers that only need the line number.
pub(crate) fn line_of(d: &Diagnostic) -> usize {
    d.span.map_or(0, |s: SourceSpan| s.line)
}
