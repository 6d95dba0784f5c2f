//! Lexer and recursive-descent parser for the game-description language.
//!
//! The surface syntax is small: clauses end with `.`, the rule connective is
//! the keyword `if`, conjunction is `and`, negation is `not`, and comments
//! run from `%` to end of line. Atoms are lowercase identifiers or
//! single-quoted strings, variables start uppercase or with `_`, and the six
//! comparison operators `> < >= =< = \=` work over integers.
//!
//! Parsing recovers after an error by skipping to the next clause
//! terminator, so one pass reports every malformed clause. Every error
//! carries its line, column, and the verbatim source line.

use crate::error::{EngineError, SourceSpan};
use crate::program::{Builtin, Clause, CmpOp, Goal, Program};
use crate::term::Term;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Atom(String),
    Quoted(String),
    Var(String),
    Int(i64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Dot,
    Cmp(CmpOp),
    QueryPrefix,
    /// A lexical error; the lexer has already skipped to the end of the line.
    Err(Box<EngineError>),
}

#[derive(Debug, Clone)]
struct Lexed {
    tok: Tok,
    span: SourceSpan,
}

struct Lexer<'a> {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
    lines: &'a [String],
}

impl<'a> Lexer<'a> {
    fn new(text: &str, lines: &'a [String]) -> Lexer<'a> {
        Lexer { chars: text.chars().collect(), pos: 0, line: 1, col: 1, lines }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn line_text(&self, line: u32) -> String {
        self.lines.get(line.saturating_sub(1) as usize).cloned().unwrap_or_default()
    }

    fn skip_to_eol(&mut self) {
        while let Some(c) = self.peek() {
            if c == '\n' {
                break;
            }
            self.bump();
        }
    }

    fn error_here(&mut self, message: String) -> Lexed {
        let span = SourceSpan::point(self.line, self.col);
        let text = self.line_text(self.line);
        self.skip_to_eol();
        Lexed { tok: Tok::Err(Box::new(EngineError::parse(message, span, text))), span }
    }

    fn next_token(&mut self) -> Option<Lexed> {
        loop {
            match self.peek() {
                None => return None,
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('%') => {
                    self.skip_to_eol();
                }
                _ => break,
            }
        }
        let start_line = self.line;
        let start_col = self.col;
        let span_from = |lexer: &Lexer| SourceSpan {
            line: start_line,
            col: start_col,
            end_line: lexer.line,
            end_col: lexer.col,
        };
        let c = self.peek().unwrap();
        let tok = match c {
            '(' => {
                self.bump();
                Tok::LParen
            }
            ')' => {
                self.bump();
                Tok::RParen
            }
            '[' => {
                self.bump();
                Tok::LBracket
            }
            ']' => {
                self.bump();
                Tok::RBracket
            }
            ',' => {
                self.bump();
                Tok::Comma
            }
            '.' => {
                self.bump();
                Tok::Dot
            }
            '>' => {
                self.bump();
                if self.peek() == Some('=') {
                    self.bump();
                    Tok::Cmp(CmpOp::Ge)
                } else {
                    Tok::Cmp(CmpOp::Gt)
                }
            }
            '<' => {
                self.bump();
                Tok::Cmp(CmpOp::Lt)
            }
            '=' => {
                self.bump();
                if self.peek() == Some('<') {
                    self.bump();
                    Tok::Cmp(CmpOp::Le)
                } else {
                    Tok::Cmp(CmpOp::Eq)
                }
            }
            '\\' => {
                self.bump();
                if self.peek() == Some('=') {
                    self.bump();
                    Tok::Cmp(CmpOp::Ne)
                } else {
                    return Some(self.error_here("expected `=` after `\\`".to_string()));
                }
            }
            '?' => {
                self.bump();
                if self.peek() == Some('-') {
                    self.bump();
                    Tok::QueryPrefix
                } else {
                    return Some(self.error_here("unexpected character `?`".to_string()));
                }
            }
            '\'' => {
                self.bump();
                let mut name = String::new();
                loop {
                    match self.peek() {
                        None | Some('\n') => {
                            let span = SourceSpan::point(start_line, start_col);
                            let text = self.line_text(start_line);
                            self.skip_to_eol();
                            return Some(Lexed {
                                tok: Tok::Err(Box::new(EngineError::parse(
                                    "unterminated quoted atom".to_string(),
                                    span,
                                    text,
                                ))),
                                span,
                            });
                        }
                        Some('\'') => {
                            self.bump();
                            break;
                        }
                        Some('\\') => {
                            self.bump();
                            match self.bump() {
                                Some('\'') => name.push('\''),
                                Some('\\') => name.push('\\'),
                                Some(other) => {
                                    name.push('\\');
                                    name.push(other);
                                }
                                None => {}
                            }
                        }
                        Some(other) => {
                            name.push(other);
                            self.bump();
                        }
                    }
                }
                Tok::Quoted(name)
            }
            '-' => {
                self.bump();
                if self.peek().is_some_and(|d| d.is_ascii_digit()) {
                    let value = self.read_digits();
                    Tok::Int(-value)
                } else {
                    return Some(self.error_here("unexpected character `-`".to_string()));
                }
            }
            d if d.is_ascii_digit() => Tok::Int(self.read_digits()),
            a if a.is_ascii_lowercase() => Tok::Atom(self.read_ident()),
            v if v.is_ascii_uppercase() || v == '_' => Tok::Var(self.read_ident()),
            other => {
                return Some(self.error_here(format!("unexpected character `{other}`")));
            }
        };
        Some(Lexed { tok, span: span_from(self) })
    }

    fn read_digits(&mut self) -> i64 {
        let mut value: i64 = 0;
        while let Some(d) = self.peek() {
            if let Some(digit) = d.to_digit(10) {
                value = value.saturating_mul(10).saturating_add(digit as i64);
                self.bump();
            } else {
                break;
            }
        }
        value
    }

    fn read_ident(&mut self) -> String {
        let mut name = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                name.push(c);
                self.bump();
            } else {
                break;
            }
        }
        name
    }
}

fn lex(text: &str, lines: &[String]) -> Vec<Lexed> {
    let mut lexer = Lexer::new(text, lines);
    let mut tokens = Vec::new();
    while let Some(tok) = lexer.next_token() {
        tokens.push(tok);
    }
    tokens
}

struct Parser<'a> {
    tokens: Vec<Lexed>,
    pos: usize,
    lines: &'a [String],
    /// Conjunction may also be written `,` (query syntax).
    allow_comma_conjunction: bool,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|l| &l.tok)
    }

    fn peek_span(&self) -> SourceSpan {
        match self.tokens.get(self.pos) {
            Some(lexed) => lexed.span,
            None => self.end_span(),
        }
    }

    fn end_span(&self) -> SourceSpan {
        let last_line = self.lines.iter().rposition(|l| !l.trim().is_empty());
        match last_line {
            Some(idx) => {
                let line = (idx + 1) as u32;
                SourceSpan::point(line, self.lines[idx].chars().count() as u32 + 1)
            }
            None => SourceSpan::point(1, 1),
        }
    }

    fn bump(&mut self) -> Option<Lexed> {
        let tok = self.tokens.get(self.pos).cloned();
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn line_text(&self, span: SourceSpan) -> String {
        self.lines.get(span.line.saturating_sub(1) as usize).cloned().unwrap_or_default()
    }

    fn error_at(&self, span: SourceSpan, message: impl Into<String>) -> EngineError {
        EngineError::parse(message, span, self.line_text(span))
    }

    fn error_here(&mut self, message: impl Into<String>) -> EngineError {
        // A lexical error at the failure point takes precedence: it is more
        // specific and has already been positioned by the lexer.
        if let Some(Tok::Err(e)) = self.peek() {
            let err = (**e).clone();
            self.pos += 1;
            return err;
        }
        let span = self.peek_span();
        self.error_at(span, message)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    /// Error recovery: skip to just past the next `.`, stopping after a
    /// lexical error marker (the lexer already skipped that line).
    fn recover(&mut self) {
        while let Some(lexed) = self.bump() {
            match lexed.tok {
                Tok::Dot | Tok::Err(_) => break,
                _ => {}
            }
        }
    }

    fn parse_term(&mut self) -> Result<Term, EngineError> {
        let lexed = match self.bump() {
            Some(l) => l,
            None => {
                return Err(self.error_at(self.end_span(), "unexpected end of file: expected a term"))
            }
        };
        match lexed.tok {
            Tok::Atom(name) | Tok::Quoted(name) => {
                if self.peek() == Some(&Tok::LParen) {
                    self.bump();
                    let args = self.parse_term_list(Tok::RParen, "`)`")?;
                    if args.is_empty() {
                        return Err(self.error_at(lexed.span, "compound term needs at least one argument"));
                    }
                    Ok(Term::Compound(name, args))
                } else {
                    Ok(Term::Atom(name))
                }
            }
            Tok::Var(name) => Ok(Term::Var(name)),
            Tok::Int(value) => Ok(Term::Int(value)),
            Tok::LBracket => {
                if self.peek() == Some(&Tok::RBracket) {
                    self.bump();
                    return Ok(Term::List(Vec::new()));
                }
                let items = self.parse_term_list(Tok::RBracket, "`]`")?;
                Ok(Term::List(items))
            }
            Tok::Err(e) => Err(*e),
            other => Err(self.error_at(lexed.span, format!("expected a term, found `{}`", tok_name(&other)))),
        }
    }

    fn parse_term_list(&mut self, close: Tok, close_name: &str) -> Result<Vec<Term>, EngineError> {
        let mut items = Vec::new();
        loop {
            items.push(self.parse_term()?);
            match self.peek() {
                Some(Tok::Comma) => {
                    self.bump();
                }
                Some(tok) if *tok == close => {
                    self.bump();
                    return Ok(items);
                }
                Some(Tok::Err(_)) => return Err(self.error_here("")),
                Some(other) => {
                    let msg = format!("expected `,` or {close_name}, found `{}`", tok_name(other));
                    return Err(self.error_here(msg));
                }
                None => {
                    return Err(self.error_at(
                        self.end_span(),
                        format!("unexpected end of file: expected {close_name}"),
                    ))
                }
            }
        }
    }

    fn parse_goal(&mut self) -> Result<Goal, EngineError> {
        if self.peek() == Some(&Tok::Atom("not".to_string())) {
            let not_span = self.peek_span();
            self.bump();
            // `not(...)` as a compound also means negation; handled by
            // term_to_goal, so only the bare keyword form is special here.
            let inner = self.parse_goal()?;
            let _ = not_span;
            return Ok(Goal::Not(Box::new(inner)));
        }
        let span = self.peek_span();
        let left = self.parse_term()?;
        if let Some(Tok::Cmp(op)) = self.peek() {
            let op = *op;
            self.bump();
            let right = self.parse_term()?;
            return Ok(Goal::Compare(op, left, right));
        }
        term_to_goal(&left).map_err(|msg| self.error_at(span, msg))
    }

    fn parse_conjunction(&mut self) -> Result<Vec<Goal>, EngineError> {
        let mut goals = vec![self.parse_goal()?];
        loop {
            match self.peek() {
                Some(Tok::Atom(name)) if name == "and" => {
                    self.bump();
                    goals.push(self.parse_goal()?);
                }
                Some(Tok::Comma) if self.allow_comma_conjunction => {
                    self.bump();
                    goals.push(self.parse_goal()?);
                }
                _ => return Ok(goals),
            }
        }
    }

    fn parse_clause(&mut self) -> Result<Clause, EngineError> {
        let start = self.peek_span();
        let head = self.parse_term()?;
        match &head {
            Term::Atom(_) => {}
            Term::Compound(functor, args) => {
                if let Some(builtin) = Builtin::lookup(functor, args.len()) {
                    return Err(self.error_at(
                        start,
                        format!("{}/{} is a reserved builtin and cannot be redefined", builtin.name(), args.len()),
                    ));
                }
            }
            other => {
                return Err(self.error_at(start, format!("clause head must be an atom or compound term, got {other}")));
            }
        }
        let body = match self.peek() {
            Some(Tok::Atom(name)) if name == "if" => {
                self.bump();
                self.parse_conjunction()?
            }
            _ => Vec::new(),
        };
        match self.bump() {
            Some(Lexed { tok: Tok::Dot, span }) => {
                let span = SourceSpan {
                    line: start.line,
                    col: start.col,
                    end_line: span.end_line,
                    end_col: span.end_col,
                };
                Ok(Clause { head, body, span })
            }
            Some(Lexed { tok: Tok::Err(e), .. }) => Err(*e),
            Some(lexed) => {
                Err(self.error_at(lexed.span, format!("expected `.` to end the clause, found `{}`", tok_name(&lexed.tok))))
            }
            None => Err(self.error_at(self.end_span(), "unexpected end of file: clause not terminated by `.`")),
        }
    }
}

fn tok_name(tok: &Tok) -> String {
    match tok {
        Tok::Atom(name) => name.clone(),
        Tok::Quoted(name) => format!("'{name}'"),
        Tok::Var(name) => name.clone(),
        Tok::Int(value) => value.to_string(),
        Tok::LParen => "(".to_string(),
        Tok::RParen => ")".to_string(),
        Tok::LBracket => "[".to_string(),
        Tok::RBracket => "]".to_string(),
        Tok::Comma => ",".to_string(),
        Tok::Dot => ".".to_string(),
        Tok::Cmp(op) => op.symbol().to_string(),
        Tok::QueryPrefix => "?-".to_string(),
        Tok::Err(_) => "<error>".to_string(),
    }
}

/// Interprets a term in goal position: `not/1` means negation, the reserved
/// builtin names dispatch to the runtime, anything else callable is a call.
pub fn term_to_goal(term: &Term) -> Result<Goal, String> {
    match term {
        Term::Compound(functor, args) if functor == "not" && args.len() == 1 => {
            Ok(Goal::Not(Box::new(term_to_goal(&args[0])?)))
        }
        Term::Compound(functor, args) => match Builtin::lookup(functor, args.len()) {
            Some(builtin) => Ok(Goal::Builtin(builtin, args.clone())),
            None => Ok(Goal::Call(term.clone())),
        },
        Term::Atom(_) => Ok(Goal::Call(term.clone())),
        Term::Var(name) => Err(format!("goal must be callable, got unbound variable {name}")),
        Term::Int(_) | Term::List(_) => Err(format!("goal must be callable, got {term}")),
    }
}

fn source_lines(text: &str) -> Vec<String> {
    text.lines().map(|l| l.to_string()).collect()
}

/// Parses a whole source file. On failure, reports every malformed clause;
/// each error carries its line number and the verbatim line text.
pub fn parse_program(text: &str) -> Result<Program, Vec<EngineError>> {
    let lines = source_lines(text);
    let tokens = lex(text, &lines);
    let mut parser = Parser { tokens, pos: 0, lines: &lines, allow_comma_conjunction: false };
    let mut clauses = Vec::new();
    let mut errors = Vec::new();
    while !parser.at_end() {
        match parser.parse_clause() {
            Ok(clause) => clauses.push(clause),
            Err(error) => {
                errors.push(error);
                parser.recover();
            }
        }
    }
    if errors.is_empty() {
        Ok(Program::from_clauses(clauses))
    } else {
        Err(errors)
    }
}

/// Parses a query: a conjunction of goals separated by `and` or `,`, with an
/// optional leading `?-` and optional trailing `.`.
pub fn parse_goals(text: &str) -> Result<Vec<Goal>, Vec<EngineError>> {
    let lines = source_lines(text);
    let tokens = lex(text, &lines);
    let mut parser = Parser { tokens, pos: 0, lines: &lines, allow_comma_conjunction: true };
    if parser.peek() == Some(&Tok::QueryPrefix) {
        parser.bump();
    }
    let goals = match parser.parse_conjunction() {
        Ok(goals) => goals,
        Err(error) => return Err(vec![error]),
    };
    if parser.peek() == Some(&Tok::Dot) {
        parser.bump();
    }
    if !parser.at_end() {
        let err = parser.error_here("unexpected input after query");
        return Err(vec![err]);
    }
    Ok(goals)
}

/// Parses a single term, for building facts and patterns from text.
pub fn parse_term(text: &str) -> Result<Term, Vec<EngineError>> {
    let lines = source_lines(text);
    let tokens = lex(text, &lines);
    let mut parser = Parser { tokens, pos: 0, lines: &lines, allow_comma_conjunction: false };
    let term = parser.parse_term().map_err(|e| vec![e])?;
    if !parser.at_end() {
        let err = parser.error_here("unexpected input after term");
        return Err(vec![err]);
    }
    Ok(term)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_payoff_fact() {
        let program = parse_program("payoff('C','C',3,3).").unwrap();
        assert_eq!(program.clauses().len(), 1);
        let clause = &program.clauses()[0];
        assert!(clause.is_fact());
        assert_eq!(clause.key().to_string(), "payoff/4");
        assert_eq!(clause.head.to_string(), "payoff('C','C',3,3)");
    }

    #[test]
    fn parses_rule_with_negation_first() {
        let src = "select(P,O,S,M) if not holds(last_move(O,_LMo),S) and holds(default_move(P,M),S).";
        let program = parse_program(src).unwrap();
        let clause = &program.clauses()[0];
        assert_eq!(clause.body.len(), 2);
        assert!(matches!(clause.body[0], Goal::Not(_)));
        assert!(matches!(clause.body[1], Goal::Call(_)));
    }

    #[test]
    fn unescaped_quote_reports_one_error_with_line() {
        let src = "payoff('C,'C',3,3).";
        let errors = parse_program(src).unwrap_err();
        assert_eq!(errors.len(), 1, "errors: {errors:?}");
        assert_eq!(errors[0].offending_line(), Some(src));
        assert_eq!(errors[0].kind.label(), "parse_error");
    }

    #[test]
    fn recovery_reports_multiple_errors() {
        let src = "good(a).\nbad(b\ngood(c).\nalso bad here\ngood(d).";
        let errors = parse_program(src).unwrap_err();
        assert!(errors.len() >= 2);
        for e in &errors {
            assert!(e.offending_line().is_some());
        }
    }

    #[test]
    fn truncated_file_reports_end_of_input() {
        let src = "payoff('C','C',3,3)";
        let errors = parse_program(src).unwrap_err();
        assert_eq!(errors.len(), 1);
        assert!(errors[0].message.contains("end of file"));
        assert_eq!(errors[0].offending_line(), Some(src));
    }

    #[test]
    fn slash_comment_is_an_error_quoting_the_line() {
        let src = "// not a comment here\npayoff('C','C',3,3).";
        let errors = parse_program(src).unwrap_err();
        assert_eq!(errors.len(), 1);
        assert_eq!(errors[0].offending_line(), Some("// not a comment here"));
    }

    #[test]
    fn percent_comments_are_skipped() {
        let src = "% header comment\npayoff('C','C',3,3). % trailing\n";
        let program = parse_program(src).unwrap();
        assert_eq!(program.clauses().len(), 1);
    }

    #[test]
    fn negative_integers_parse() {
        let program = parse_program("payoff('H','T',-1,1).").unwrap();
        let head = &program.clauses()[0].head;
        assert_eq!(head.call_args()[2], Term::Int(-1));
    }

    #[test]
    fn comparisons_parse_in_bodies() {
        let src = "beats(U,V) if U > V.\nle(U,V) if U =< V.\nne(U,V) if U \\= V.";
        let program = parse_program(src).unwrap();
        assert!(matches!(program.clauses()[0].body[0], Goal::Compare(CmpOp::Gt, _, _)));
        assert!(matches!(program.clauses()[1].body[0], Goal::Compare(CmpOp::Le, _, _)));
        assert!(matches!(program.clauses()[2].body[0], Goal::Compare(CmpOp::Ne, _, _)));
    }

    #[test]
    fn reserved_builtin_head_is_rejected() {
        let errors = parse_program("member(X,[a]).").unwrap_err();
        assert!(errors[0].message.contains("reserved builtin"));
    }

    #[test]
    fn integer_head_is_rejected() {
        let errors = parse_program("5.").unwrap_err();
        assert!(errors[0].message.contains("clause head"));
    }

    #[test]
    fn query_accepts_comma_and_prefix() {
        let goals = parse_goals("?- game(s0,F), finally(goal(p1,5),F).").unwrap();
        assert_eq!(goals.len(), 2);
        let goals = parse_goals("game(s0,F) and finally(goal(p1,5),F)").unwrap();
        assert_eq!(goals.len(), 2);
    }

    #[test]
    fn builtin_calls_are_tagged() {
        let src = "s(P,S,M) if findall(A,possible(move(P,A),S),As) and rand_member(M,As).";
        let program = parse_program(src).unwrap();
        assert!(matches!(program.clauses()[0].body[0], Goal::Builtin(Builtin::Findall, _)));
        assert!(matches!(program.clauses()[0].body[1], Goal::Builtin(Builtin::RandMember, _)));
    }

    #[test]
    fn lists_parse() {
        let term = parse_term("[a,'B',1,[x]]").unwrap();
        match term {
            Term::List(items) => assert_eq!(items.len(), 4),
            other => panic!("expected list, got {other}"),
        }
        assert_eq!(parse_term("[]").unwrap(), Term::List(vec![]));
    }
}
