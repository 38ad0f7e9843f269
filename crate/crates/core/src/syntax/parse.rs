use super::{Axiom, Concept};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown operator `{token}` at byte {offset}")]
    UnknownOperator { offset: usize, token: String },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownOperator { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(u32),
    LParen,
    RParen,
    Comma,
}

const KEYWORDS: &[&str] =
    &["not", "and", "or", "some", "only", "atleast", "atmost", "Thing", "Nothing", "subclassof"];

fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'(' => {
                out.push((i, Tok::LParen));
                i += 1;
            }
            b')' => {
                out.push((i, Tok::RParen));
                i += 1;
            }
            b',' => {
                out.push((i, Tok::Comma));
                i += 1;
            }
            b'0'..=b'9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let n = text[start..i].parse().map_err(|_| ParseError::Syntax {
                    offset: start,
                    message: "integer out of range".into(),
                })?;
                out.push((start, Tok::Int(n)));
            }
            b if b.is_ascii_alphabetic() || b == b'_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'-')
                {
                    i += 1;
                }
                out.push((start, Tok::Ident(text[start..i].to_string())));
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(ParseError::UnknownOperator { offset: i, token: ch.to_string() });
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    text: &'a str,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Result<Self, ParseError> {
        Ok(Parser { toks: lex(text)?, pos: 0, text })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(o, _)| *o).unwrap_or(self.text.len())
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax { offset: self.offset(), message: message.into() })
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn name(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) if !is_keyword(s) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.err(format!("expected {what}")),
        }
    }

    fn or_expr(&mut self) -> Result<Concept, ParseError> {
        let mut left = self.and_expr()?;
        while self.at_keyword("or") {
            self.pos += 1;
            let right = self.and_expr()?;
            left = Concept::or(left, right);
        }
        Ok(left)
    }

    fn and_expr(&mut self) -> Result<Concept, ParseError> {
        let mut left = self.unary()?;
        while self.at_keyword("and") {
            self.pos += 1;
            let right = self.unary()?;
            left = Concept::and(left, right);
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Concept, ParseError> {
        let offset = self.offset();
        match self.bump() {
            Some(Tok::LParen) => {
                let inner = self.or_expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Some(Tok::Ident(word)) => match word.as_str() {
                "not" => Ok(Concept::not(self.unary()?)),
                "Thing" => Ok(Concept::Top),
                "Nothing" => Ok(Concept::Bottom),
                "atleast" | "atmost" => {
                    let n_offset = self.offset();
                    let n = match self.bump() {
                        Some(Tok::Int(n)) => n,
                        _ => {
                            return Err(ParseError::Syntax {
                                offset: n_offset,
                                message: format!("expected cardinality after `{word}`"),
                            })
                        }
                    };
                    let role = self.name("role name")?;
                    let filler = self.unary()?;
                    if word == "atleast" {
                        if n == 0 {
                            return Err(ParseError::Syntax {
                                offset: n_offset,
                                message: "`atleast` needs a cardinality of at least 1".into(),
                            });
                        }
                        Ok(Concept::AtLeast(n, role, Box::new(filler)))
                    } else {
                        Ok(Concept::AtMost(n, role, Box::new(filler)))
                    }
                }
                w if is_keyword(w) => Err(ParseError::Syntax {
                    offset,
                    message: format!("unexpected keyword `{w}`"),
                }),
                _ => match self.peek().cloned() {
                    Some(Tok::Ident(op)) if op == "some" || op == "only" => {
                        self.pos += 1;
                        let filler = self.unary()?;
                        Ok(if op == "some" {
                            Concept::Exists(word, Box::new(filler))
                        } else {
                            Concept::Forall(word, Box::new(filler))
                        })
                    }
                    Some(Tok::Ident(op)) if !is_keyword(&op) => {
                        Err(ParseError::UnknownOperator { offset: self.offset(), token: op })
                    }
                    _ => Ok(Concept::Atomic(word)),
                },
            },
            Some(Tok::Int(_)) => Err(ParseError::Syntax { offset, message: "unexpected number".into() }),
            Some(Tok::RParen) | Some(Tok::Comma) => {
                Err(ParseError::Syntax { offset, message: "expected a concept".into() })
            }
            None => Err(ParseError::Syntax { offset, message: "unexpected end of input".into() }),
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(Tok::Ident(s)) if !is_keyword(s) => {
                Err(ParseError::UnknownOperator { offset: self.offset(), token: s.clone() })
            }
            Some(_) => self.err("trailing input"),
        }
    }
}

/// Parses a concept expression in the keyword syntax.
pub fn parse_concept(text: &str) -> Result<Concept, ParseError> {
    let mut p = Parser::new(text)?;
    let c = p.or_expr()?;
    p.finish()?;
    Ok(c)
}

/// Parses a subsumption, concept assertion or role assertion.
pub fn parse_axiom(text: &str) -> Result<Axiom, ParseError> {
    let mut p = Parser::new(text)?;
    // role(a, b)
    if let (Some(Tok::Ident(r)), Some(Tok::LParen), Some(Tok::Ident(_)), Some(Tok::Comma)) =
        (p.peek(), p.peek_at(1), p.peek_at(2), p.peek_at(3))
    {
        if !is_keyword(r) {
            let role = p.name("role name")?;
            p.expect(Tok::LParen, "`(`")?;
            let subject = p.name("individual name")?;
            p.expect(Tok::Comma, "`,`")?;
            let object = p.name("individual name")?;
            p.expect(Tok::RParen, "`)`")?;
            p.finish()?;
            return Ok(Axiom::RoleAssertion { role, subject, object });
        }
    }
    let lhs = p.or_expr()?;
    if p.at_keyword("subclassof") {
        p.pos += 1;
        let rhs = p.or_expr()?;
        p.finish()?;
        return Ok(Axiom::Subsumption { lhs, rhs });
    }
    if p.peek() == Some(&Tok::LParen) {
        p.pos += 1;
        let individual = p.name("individual name")?;
        p.expect(Tok::RParen, "`)`")?;
        p.finish()?;
        return Ok(Axiom::ConceptAssertion { concept: lhs, individual });
    }
    if p.peek().is_none() {
        return p.err("expected `subclassof` or `(individual)`");
    }
    p.finish()?;
    p.err("expected `subclassof` or `(individual)`")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(n: &str) -> Concept {
        Concept::atom(n)
    }

    #[test]
    fn parses_conjunction() {
        assert_eq!(parse_concept("red and green").unwrap(), Concept::and(a("red"), a("green")));
    }

    #[test]
    fn parses_nested_quantifiers() {
        let got = parse_concept("likes some (likes only Kind)").unwrap();
        assert_eq!(got, Concept::exists("likes", Concept::forall("likes", a("Kind"))));
    }

    #[test]
    fn parses_number_restriction() {
        let got = parse_concept("atmost 2 teaches PostgrCourse").unwrap();
        assert_eq!(got, Concept::at_most(2, "teaches", a("PostgrCourse")));
    }

    #[test]
    fn precedence() {
        let got = parse_concept("likes some red and green or blue").unwrap();
        let want = Concept::or(Concept::and(Concept::exists("likes", a("red")), a("green")), a("blue"));
        assert_eq!(got, want);
        assert_eq!(parse_concept("not A and B").unwrap(), Concept::and(Concept::not(a("A")), a("B")));
    }

    #[test]
    fn thing_and_nothing() {
        assert_eq!(
            parse_concept("admires only Nothing").unwrap(),
            Concept::forall("admires", Concept::Bottom)
        );
        assert_eq!(parse_concept("Thing").unwrap(), Concept::Top);
    }

    #[test]
    fn rejects_atleast_zero() {
        let err = parse_concept("atleast 0 likes red").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { offset: 8, .. }), "{err:?}");
        assert!(parse_concept("atmost 0 likes red").is_ok());
    }

    #[test]
    fn reports_offsets() {
        let err = parse_concept("red and (green").unwrap_err();
        assert_eq!(err.offset(), 14);
        let err = parse_concept("red xor green").unwrap_err();
        assert_eq!(err, ParseError::UnknownOperator { offset: 4, token: "xor".into() });
        let err = parse_concept("red & green").unwrap_err();
        assert_eq!(err, ParseError::UnknownOperator { offset: 4, token: "&".into() });
        let err = parse_concept("likes sometimes red").unwrap_err();
        assert_eq!(err, ParseError::UnknownOperator { offset: 6, token: "sometimes".into() });
    }

    #[test]
    fn parses_axioms() {
        let ax = parse_axiom("Postdoc subclassof (owns some PhD)").unwrap();
        assert_eq!(ax, Axiom::subsumption(a("Postdoc"), Concept::exists("owns", a("PhD"))));
        let ax = parse_axiom("(not Quiet)(Anne)").unwrap();
        assert_eq!(ax, Axiom::fact(Concept::not(a("Quiet")), "Anne"));
        let ax = parse_axiom("Quiet(Anne)").unwrap();
        assert_eq!(ax, Axiom::fact(a("Quiet"), "Anne"));
        let ax = parse_axiom("likes(Anne, Bob)").unwrap();
        assert_eq!(ax, Axiom::role_fact("likes", "Anne", "Bob"));
        let ax = parse_axiom("red and green(Anne)").unwrap();
        assert_eq!(ax, Axiom::fact(Concept::and(a("red"), a("green")), "Anne"));
        assert!(parse_axiom("red").is_err());
        assert!(parse_axiom("red(Anne) extra").is_err());
    }
}
