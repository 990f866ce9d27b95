use thiserror::Error;

use super::{Allocation, Formula, Mode, Temporal};
use crate::model::ResourceVector;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word(String),
    Sym(char),
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut column) = (1, 1);
    while let Some(&c) = chars.peek() {
        let (l, col) = (line, column);
        if c == '\n' {
            line += 1;
            column = 1;
            chars.next();
            continue;
        }
        if c.is_whitespace() {
            column += 1;
            chars.next();
            continue;
        }
        if c.is_ascii_alphanumeric() || c == '_' {
            let mut w = String::new();
            while let Some(&d) = chars.peek() {
                if d.is_ascii_alphanumeric() || d == '_' {
                    w.push(d);
                    column += 1;
                    chars.next();
                } else {
                    break;
                }
            }
            out.push(Token {
                tok: Tok::Word(w),
                line: l,
                column: col,
            });
            continue;
        }
        if "<>{}[](),:|&!=-".contains(c) {
            out.push(Token {
                tok: Tok::Sym(c),
                line: l,
                column: col,
            });
            column += 1;
            chars.next();
            continue;
        }
        return Err(ParseError {
            line: l,
            column: col,
            message: format!("unknown operator {c:?}"),
        });
    }
    out.push(Token {
        tok: Tok::End,
        line,
        column,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_at(t: &Token, message: impl Into<String>) -> ParseError {
        ParseError {
            line: t.line,
            column: t.column,
            message: message.into(),
        }
    }

    fn describe(t: &Token) -> String {
        match &t.tok {
            Tok::Word(w) => format!("{w:?}"),
            Tok::Sym(c) => format!("{c:?}"),
            Tok::End => "end of input".to_string(),
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        let t = self.next();
        if t.tok == Tok::Sym(c) {
            Ok(())
        } else {
            Err(Self::error_at(
                &t,
                format!("syntax error: expected {c:?}, found {}", Self::describe(&t)),
            ))
        }
    }

    fn word(&mut self, what: &str) -> Result<String, ParseError> {
        let t = self.next();
        match t.tok {
            Tok::Word(w) => Ok(w),
            _ => Err(Self::error_at(
                &t,
                format!("syntax error: expected {what}, found {}", Self::describe(&t)),
            )),
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let t = self.next();
        match &t.tok {
            Tok::Word(w) => Ok(match w.as_str() {
                "true" => Formula::True,
                "false" => Formula::False,
                _ => Formula::Prop(w.clone()),
            }),
            Tok::Sym('!') => Ok(Formula::not(self.formula()?)),
            Tok::Sym('(') => {
                let left = self.formula()?;
                let op = self.next();
                let right = self.formula()?;
                self.expect(')')?;
                match &op.tok {
                    Tok::Sym('&') => Ok(Formula::and(left, right)),
                    Tok::Sym('|') => Ok(Formula::or(left, right)),
                    Tok::Word(w) if w == "U" || w == "R" => Err(Self::error_at(
                        &op,
                        format!("temporal operator {w} outside a coalition modality"),
                    )),
                    _ => Err(Self::error_at(&op, format!("unknown operator {}", Self::describe(&op)))),
                }
            }
            Tok::Sym('<') => self.modality(),
            _ => Err(Self::error_at(
                &t,
                format!("syntax error: unexpected {}", Self::describe(&t)),
            )),
        }
    }

    fn coalition(&mut self) -> Result<Vec<String>, ParseError> {
        self.expect('{')?;
        let mut agents = Vec::new();
        if self.peek().tok == Tok::Sym('}') {
            self.next();
            return Ok(agents);
        }
        loop {
            agents.push(self.word("an agent name")?);
            let t = self.next();
            match t.tok {
                Tok::Sym(',') => continue,
                Tok::Sym('}') => return Ok(agents),
                _ => {
                    return Err(Self::error_at(
                        &t,
                        format!("syntax error: expected ',' or '}}', found {}", Self::describe(&t)),
                    ))
                }
            }
        }
    }

    fn amount(&mut self) -> Result<i64, ParseError> {
        let t = self.next();
        match &t.tok {
            Tok::Word(w) => w
                .parse::<i64>()
                .map_err(|_| Self::error_at(&t, format!("malformed bound: {w:?} is not an amount"))),
            Tok::Sym('-') => Err(Self::error_at(&t, "malformed bound: negative amount")),
            _ => Err(Self::error_at(
                &t,
                format!("malformed bound: expected an amount, found {}", Self::describe(&t)),
            )),
        }
    }

    fn allocation(&mut self) -> Result<Allocation, ParseError> {
        self.expect('[')?;
        let mut entries = Vec::new();
        if self.peek().tok == Tok::Sym(']') {
            self.next();
            return Ok(Allocation(entries));
        }
        loop {
            let agent = self.word("an agent name")?;
            self.expect('=')?;
            self.expect('(')?;
            let mut amounts = vec![self.amount()?];
            loop {
                let t = self.next();
                match t.tok {
                    Tok::Sym(',') => amounts.push(self.amount()?),
                    Tok::Sym(')') => break,
                    _ => {
                        return Err(Self::error_at(
                            &t,
                            format!("malformed bound: found {}", Self::describe(&t)),
                        ))
                    }
                }
            }
            entries.push((agent, ResourceVector(amounts)));
            let t = self.next();
            match t.tok {
                Tok::Sym(',') => continue,
                Tok::Sym(']') => return Ok(Allocation(entries)),
                _ => {
                    return Err(Self::error_at(
                        &t,
                        format!("malformed bound: found {}", Self::describe(&t)),
                    ))
                }
            }
        }
    }

    fn modality(&mut self) -> Result<Formula, ParseError> {
        let proponents = self.coalition()?;
        let t = self.next();
        match t.tok {
            Tok::Sym(':') => {
                let bound = self.allocation()?;
                self.expect('>')?;
                let path = self.path()?;
                Ok(Formula::Coalition {
                    coalition: proponents,
                    bound,
                    path,
                })
            }
            Tok::Sym('|') => {
                let opponents = self.coalition()?;
                let m = self.next();
                let mode = match &m.tok {
                    Tok::Word(w) if w == "down" => Mode::Down,
                    Tok::Word(w) if w == "eta" => {
                        self.expect('=')?;
                        Mode::Fresh(self.allocation()?)
                    }
                    _ => {
                        return Err(Self::error_at(
                            &m,
                            format!("syntax error: expected 'down' or 'eta=', found {}", Self::describe(&m)),
                        ))
                    }
                };
                self.expect('>')?;
                let path = self.path()?;
                Ok(Formula::Resource {
                    proponents,
                    opponents,
                    mode,
                    path,
                })
            }
            _ => Err(Self::error_at(
                &t,
                format!("syntax error: expected ':' or '|', found {}", Self::describe(&t)),
            )),
        }
    }

    fn path(&mut self) -> Result<Temporal, ParseError> {
        let t = self.next();
        match &t.tok {
            Tok::Word(w) if w == "X" => Ok(Temporal::Next(Box::new(self.formula()?))),
            Tok::Sym('(') => {
                let left = Box::new(self.formula()?);
                let op = self.next();
                let right = Box::new(self.formula()?);
                self.expect(')')?;
                match &op.tok {
                    Tok::Word(w) if w == "U" => Ok(Temporal::Until(left, right)),
                    Tok::Word(w) if w == "R" => Ok(Temporal::Release(left, right)),
                    _ => Err(Self::error_at(
                        &op,
                        format!("unknown operator {}, expected U or R", Self::describe(&op)),
                    )),
                }
            }
            _ => Err(Self::error_at(
                &t,
                format!("syntax error: expected 'X' or '(', found {}", Self::describe(&t)),
            )),
        }
    }

    fn finish(&mut self) -> Result<(), ParseError> {
        let t = self.next();
        match t.tok {
            Tok::End => Ok(()),
            _ => Err(Self::error_at(
                &t,
                format!("syntax error: trailing {}", Self::describe(&t)),
            )),
        }
    }
}

pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let f = p.formula()?;
    p.finish()?;
    Ok(f)
}

/// Parses a bound or endowment such as `[1=(2,0),2=(1,1)]`.
pub fn parse_allocation(text: &str) -> Result<Allocation, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let a = p.allocation()?;
    p.finish()?;
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rv(v: &[i64]) -> ResourceVector {
        ResourceVector(v.to_vec())
    }

    #[test]
    fn next_with_bound() {
        let f = parse_formula("<{1}:[1=(2)]> X p").unwrap();
        assert_eq!(
            f,
            Formula::Coalition {
                coalition: vec!["1".into()],
                bound: Allocation(vec![("1".into(), rv(&[2]))]),
                path: Temporal::Next(Box::new(Formula::prop("p"))),
            }
        );
    }

    #[test]
    fn until_with_vector_bound() {
        let f = parse_formula("<{1}:[1=(3,0)]> (q U p)").unwrap();
        assert_eq!(
            f,
            Formula::Coalition {
                coalition: vec!["1".into()],
                bound: Allocation(vec![("1".into(), rv(&[3, 0]))]),
                path: Temporal::Until(Box::new(Formula::prop("q")), Box::new(Formula::prop("p"))),
            }
        );
    }

    #[test]
    fn down_modality() {
        let f = parse_formula("<{1}|{2} down> X p").unwrap();
        assert_eq!(
            f,
            Formula::Resource {
                proponents: vec!["1".into()],
                opponents: vec!["2".into()],
                mode: Mode::Down,
                path: Temporal::Next(Box::new(Formula::prop("p"))),
            }
        );
    }

    #[test]
    fn whitespace_insensitive() {
        let a = parse_formula("<{1,2}|{}eta=[1=(1),2=(0)]>(false R !p)").unwrap();
        let b = parse_formula("  < { 1 , 2 } | { } eta = [ 1 = ( 1 ) , 2 = ( 0 ) ] >\n ( false R ! p ) ").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_string(), "<{1,2}|{} eta=[1=(1),2=(0)]> (false R !p)");
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_formula("(p U q)").unwrap_err();
        assert_eq!((e.line, e.column), (1, 4));
        assert!(e.message.contains("outside a coalition"));

        let e = parse_formula("(p\n ^ q)").unwrap_err();
        assert_eq!((e.line, e.column), (2, 2));
        assert!(e.message.contains("unknown operator"));

        let e = parse_formula("<{1}:[1=(-1)]> X p").unwrap_err();
        assert!(e.message.contains("malformed bound"));

        let e = parse_formula("<{1}:[1=(x)]> X p").unwrap_err();
        assert!(e.message.contains("malformed bound"));

        let e = parse_formula("(p & q) r").unwrap_err();
        assert!(e.message.contains("trailing"));
    }

    #[test]
    fn allocation_text() {
        let a = parse_allocation("[1=(2,0),2=(1,1)]").unwrap();
        assert_eq!(a.to_string(), "[1=(2,0),2=(1,1)]");
        assert!(parse_allocation("[1=(2]").is_err());
    }

    fn ident() -> impl Strategy<Value = String> {
        "[a-z][a-z0-9_]{0,3}".prop_filter("keyword", |s| s != "true" && s != "false")
    }

    fn alloc(agents: Vec<String>) -> impl Strategy<Value = Allocation> {
        let n = agents.len();
        proptest::collection::vec(proptest::collection::vec(0i64..5, 1..3), n)
            .prop_map(move |vs| Allocation(agents.iter().cloned().zip(vs.into_iter().map(ResourceVector)).collect()))
    }

    fn arb_formula() -> impl Strategy<Value = Formula> {
        let leaf = prop_oneof![
            Just(Formula::True),
            Just(Formula::False),
            ident().prop_map(Formula::Prop)
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            let agents = proptest::collection::vec("[0-9a-z]{1,2}", 1..3);
            let path = (0..3usize, inner.clone(), inner.clone()).prop_map(|(k, l, r)| match k {
                0 => Temporal::Next(Box::new(l)),
                1 => Temporal::Until(Box::new(l), Box::new(r)),
                _ => Temporal::Release(Box::new(l), Box::new(r)),
            });
            prop_oneof![
                inner.clone().prop_map(Formula::not),
                (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::and(l, r)),
                (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::or(l, r)),
                (
                    agents.clone().prop_flat_map(|a| (Just(a.clone()), alloc(a))),
                    path.clone()
                )
                    .prop_map(|((coalition, bound), path)| Formula::Coalition {
                        coalition,
                        bound,
                        path
                    }),
                (
                    agents.clone(),
                    proptest::collection::vec("[0-9a-z]{1,2}", 0..2),
                    prop_oneof![Just(None), agents.clone().prop_flat_map(alloc).prop_map(Some)],
                    path
                )
                    .prop_map(|(proponents, opponents, e, path)| Formula::Resource {
                        proponents,
                        opponents,
                        mode: e.map_or(Mode::Down, Mode::Fresh),
                        path,
                    }),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_then_parse_is_identity(f in arb_formula()) {
            let text = f.to_string();
            prop_assert_eq!(parse_formula(&text).unwrap(), f);
        }

        #[test]
        fn subformula_order_is_topological(f in arb_formula()) {
            let subs = super::super::subformulas(&f);
            prop_assert!(subs.len() <= f.size());
            prop_assert_eq!(*subs.last().unwrap(), &f);
            for (i, g) in subs.iter().enumerate() {
                for c in g.children() {
                    let j = subs.iter().position(|h| *h == c).unwrap();
                    prop_assert!(j < i);
                }
            }
        }
    }
}
