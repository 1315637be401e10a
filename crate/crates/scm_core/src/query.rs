//! Counterfactual query strings.
//!
//! Grammar (whitespace-insensitive between tokens):
//!
//! ```text
//! query  := "P(" [events] ["|" events] ")"
//! events := event ("," event)*
//! event  := VAR subscript? "=" VAL
//! subscript := "_{" VAR "=" VAL ("," VAR "=" VAL)* "}"
//! ```
//!
//! The canonical printer writes `P(Y_{A=1,B=0}=1 | X=1, Z=0)`: no spaces
//! inside an intervention subscript, `", "` between events, `" | "` before
//! the conditioning side, and subscript assignments sorted by variable name.

use std::fmt;

use crate::domain::Value;
use crate::error::ScmError;

/// One event `VAR_{x} = v`: the variable attains `value` in the world where
/// `intervention` is forced. An empty intervention reads off the
/// observational world.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CtfEvent {
    pub var: String,
    /// Sorted by variable name; no variable appears twice.
    pub intervention: Vec<(String, Value)>,
    pub value: Value,
}

/// A conjunction of counterfactual events, optionally conditioned on another
/// conjunction. `P()` is the empty query with probability one.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CtfQuery {
    pub events: Vec<CtfEvent>,
    pub given: Vec<CtfEvent>,
}

impl fmt::Display for CtfEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.var)?;
        if !self.intervention.is_empty() {
            let inside = self
                .intervention
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join(",");
            write!(f, "_{{{inside}}}")?;
        }
        write!(f, "={}", self.value)
    }
}

impl fmt::Display for CtfQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let events = |list: &[CtfEvent]| {
            list.iter()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        };
        write!(f, "P({}", events(&self.events))?;
        if !self.given.is_empty() {
            write!(f, " | {}", events(&self.given))?;
        }
        write!(f, ")")
    }
}

impl CtfQuery {
    pub fn parse(src: &str) -> Result<Self, ScmError> {
        Parser { src: src.as_bytes(), pos: 0 }.query()
    }

    /// Canonical string form; `parse` of the result is the identity.
    pub fn print(&self) -> String {
        self.to_string()
    }

    /// True when no event anywhere carries an intervention, i.e. the query
    /// is purely observational.
    pub fn is_observational(&self) -> bool {
        self.events
            .iter()
            .chain(&self.given)
            .all(|e| e.intervention.is_empty())
    }
}

/// Parse a counterfactual query string.
pub fn parse_query(src: &str) -> Result<CtfQuery, ScmError> {
    CtfQuery::parse(src)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error<T>(&self, message: impl Into<String>) -> Result<T, ScmError> {
        Err(ScmError::QueryParse {
            position: self.pos,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), ScmError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            self.error(format!("expected `{}`", c as char))
        }
    }

    fn ident(&mut self) -> Result<String, ScmError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            // `_{` opens a subscript, so an identifier ends before `_{`
            if self.src[self.pos] == b'_' && self.src.get(self.pos + 1) == Some(&b'{') {
                break;
            }
            self.pos += 1;
        }
        if self.pos == start {
            return self.error("expected a variable name");
        }
        Ok(std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .to_string())
    }

    fn value(&mut self) -> Result<Value, ScmError> {
        self.skip_ws();
        let start = self.pos;
        if self.src.get(self.pos) == Some(&b'-') {
            self.pos += 1;
        }
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        if text.is_empty() || text == "-" {
            self.pos = start;
            return self.error("expected an integer value");
        }
        text.parse()
            .or_else(|_| self.error(format!("integer `{text}` out of range")))
    }

    fn event(&mut self) -> Result<CtfEvent, ScmError> {
        let var = self.ident()?;
        let mut intervention = Vec::new();
        if self.peek() == Some(b'_') {
            self.pos += 1;
            self.expect(b'{')?;
            loop {
                let k = self.ident()?;
                self.expect(b'=')?;
                let v = self.value()?;
                if intervention.iter().any(|(name, _)| *name == k) {
                    return self.error(format!("variable `{k}` intervened on twice"));
                }
                intervention.push((k, v));
                match self.peek() {
                    Some(b',') => {
                        self.pos += 1;
                    }
                    Some(b'}') => {
                        self.pos += 1;
                        break;
                    }
                    _ => return self.error("expected `,` or `}` in intervention"),
                }
            }
            intervention.sort();
        }
        self.expect(b'=')?;
        let value = self.value()?;
        Ok(CtfEvent {
            var,
            intervention,
            value,
        })
    }

    fn event_list(&mut self) -> Result<Vec<CtfEvent>, ScmError> {
        let mut events = vec![self.event()?];
        while self.peek() == Some(b',') {
            self.pos += 1;
            events.push(self.event()?);
        }
        Ok(events)
    }

    fn query(&mut self) -> Result<CtfQuery, ScmError> {
        self.skip_ws();
        if self.src.get(self.pos) != Some(&b'P') {
            return self.error("query must start with `P(`");
        }
        self.pos += 1;
        self.expect(b'(')?;
        let mut query = CtfQuery::default();
        match self.peek() {
            Some(b')') => {
                self.pos += 1;
            }
            Some(b'|') => {
                self.pos += 1;
                query.given = self.event_list()?;
                self.expect(b')')?;
            }
            _ => {
                query.events = self.event_list()?;
                if self.peek() == Some(b'|') {
                    self.pos += 1;
                    query.given = self.event_list()?;
                }
                self.expect(b')')?;
            }
        }
        self.skip_ws();
        if self.pos != self.src.len() {
            return self.error("trailing input after query");
        }
        Ok(query)
    }
}
