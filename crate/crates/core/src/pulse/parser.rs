use super::ast::{Angle, Axis, Delay, DelayKind, Item, Pulse, PulseProgram, Repeat, Span, TimeUnit};
use super::PulseError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Slash,
    LParen,
    RParen,
    Dash,
    LBracket,
    RBracket,
    Caret,
    At,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("'{v}'"),
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Slash => "'/'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Dash => "'-'".into(),
            Tok::LBracket => "'['".into(),
            Tok::RBracket => "']'".into(),
            Tok::Caret => "'^'".into(),
            Tok::At => "'@'".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn syntax(msg: impl Into<String>, span: Span) -> PulseError {
    PulseError::Syntax { msg: msg.into(), line: span.line, col: span.col }
}

fn lex(text: &str) -> Result<Vec<(Tok, Span)>, PulseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let ch = chars[i];
        let span = Span::new(line, col);
        if ch == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if ch.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if ch == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let single = match ch {
            '/' => Some(Tok::Slash),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '-' => Some(Tok::Dash),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            '^' => Some(Tok::Caret),
            '@' => Some(Tok::At),
            _ => None,
        };
        if let Some(tok) = single {
            out.push((tok, span));
            i += 1;
            col += 1;
            continue;
        }
        let start = i;
        if ch.is_ascii_digit() || (ch == '.' && chars.get(i + 1).is_some_and(|c| c.is_ascii_digit())) {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            // exponent only when digits follow, so "2e" is not swallowed
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v: f64 = s.parse().map_err(|_| syntax(format!("bad number '{s}'"), span))?;
            out.push((Tok::Num(v), span));
            col += i - start;
            continue;
        }
        if ch.is_alphabetic() || ch == '_' {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            out.push((Tok::Ident(s.to_lowercase()), span));
            col += i - start;
            continue;
        }
        return Err(syntax(format!("unexpected character '{ch}'"), span));
    }
    out.push((Tok::Eof, Span::new(line, col)));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok) -> Result<Span, PulseError> {
        let (t, span) = self.bump();
        if t == tok {
            Ok(span)
        } else {
            Err(syntax(format!("expected {} but found {}", tok.describe(), t.describe()), span))
        }
    }

    fn sequence(&mut self) -> Result<Vec<Item>, PulseError> {
        let mut items = vec![self.item()?];
        while *self.peek() == Tok::Dash {
            self.bump();
            items.push(self.item()?);
        }
        Ok(items)
    }

    fn item(&mut self) -> Result<Item, PulseError> {
        let span = self.span();
        match self.peek().clone() {
            Tok::LBracket => {
                self.bump();
                let block = self.sequence()?;
                self.expect(Tok::RBracket)?;
                self.expect(Tok::Caret)?;
                let (t, cspan) = self.bump();
                let count = match t {
                    Tok::Num(v) if v.fract() == 0.0 && (0.0..=u32::MAX as f64).contains(&v) => v as u32,
                    other => {
                        return Err(syntax(format!("expected repeat count but found {}", other.describe()), cspan))
                    }
                };
                if count == 0 {
                    return Err(PulseError::ZeroRepeat { line: cspan.line, col: cspan.col });
                }
                Ok(Item::Repeat(Repeat { block, count, span }))
            }
            Tok::Ident(id) if id == "pi" => {
                self.bump();
                let angle = if *self.peek() == Tok::Slash {
                    self.bump();
                    let (t, s) = self.bump();
                    if t != Tok::Num(2.0) {
                        return Err(syntax(format!("expected '2' after 'pi/' but found {}", t.describe()), s));
                    }
                    Angle::HalfPi
                } else {
                    Angle::Pi
                };
                self.pulse_tail(angle, span)
            }
            Tok::Ident(id) if id == "tau" || id == "ts" => {
                self.bump();
                let kind = if id == "tau" { DelayKind::Tau(1.0) } else { DelayKind::Ts(1.0) };
                Ok(Item::Delay(Delay { kind, span }))
            }
            Tok::Num(v) => {
                self.bump();
                let (t, s) = self.bump();
                let Tok::Ident(word) = t else {
                    return Err(syntax(format!("expected unit after number but found {}", t.describe()), s));
                };
                let kind = match word.as_str() {
                    "deg" => {
                        let angle = Angle::Degrees(v);
                        if !angle.is_valid() {
                            return Err(PulseError::InvalidAngle { degrees: v, line: span.line, col: span.col });
                        }
                        return self.pulse_tail(angle, span);
                    }
                    "tau" => DelayKind::Tau(v),
                    "ts" => DelayKind::Ts(v),
                    "s" => DelayKind::Literal { value: v, unit: TimeUnit::S },
                    "us" | "μs" | "µs" => DelayKind::Literal { value: v, unit: TimeUnit::Us },
                    "ns" => DelayKind::Literal { value: v, unit: TimeUnit::Ns },
                    other => return Err(syntax(format!("unknown unit '{other}'"), s)),
                };
                Ok(Item::Delay(Delay { kind, span }))
            }
            other => Err(syntax(format!("expected pulse, delay or repeat but found {}", other.describe()), span)),
        }
    }

    fn pulse_tail(&mut self, angle: Angle, span: Span) -> Result<Item, PulseError> {
        self.expect(Tok::LParen)?;
        let negative = if *self.peek() == Tok::Dash {
            self.bump();
            true
        } else {
            false
        };
        let (t, aspan) = self.bump();
        let axis = match &t {
            Tok::Ident(a) if a == "x" => Axis::PlusX,
            Tok::Ident(a) if a == "y" => Axis::PlusY,
            Tok::Ident(a) => {
                return Err(PulseError::UnknownAxis { axis: a.clone(), line: aspan.line, col: aspan.col })
            }
            Tok::Num(v) => {
                return Err(PulseError::UnknownAxis { axis: v.to_string(), line: aspan.line, col: aspan.col })
            }
            other => return Err(syntax(format!("expected axis but found {}", other.describe()), aspan)),
        };
        let axis = if negative { axis.negated() } else { axis };
        self.expect(Tok::RParen)?;
        let target = if *self.peek() == Tok::At {
            self.bump();
            match self.bump() {
                (Tok::Ident(name), _) => Some(name),
                (other, s) => return Err(syntax(format!("expected target label but found {}", other.describe()), s)),
            }
        } else {
            None
        };
        Ok(Item::Pulse(Pulse { angle, axis, target, span }))
    }
}

/// Parse the sequence language into a program with empty metadata.
pub fn parse_sequence(text: &str) -> Result<PulseProgram, PulseError> {
    let toks = lex(text)?;
    if toks.len() == 1 {
        return Err(PulseError::Empty);
    }
    let mut p = Parser { toks, pos: 0 };
    let items = p.sequence()?;
    if *p.peek() != Tok::Eof {
        let span = p.span();
        let found = p.peek().describe();
        // "pi(x) tau" lacks a separator; point at the stray token
        let msg = if matches!(p.peek(), Tok::Ident(_) | Tok::Num(_) | Tok::LBracket) {
            format!("expected '-' but found {found}")
        } else {
            format!("unexpected {found}")
        };
        return Err(syntax(msg, span));
    }
    Ok(PulseProgram::new(items))
}
