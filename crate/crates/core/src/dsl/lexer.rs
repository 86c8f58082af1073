use super::Diagnostic;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(u64),
    Str(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Dot,
    At,
    Prime,
    Assign,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    Ne,
    Plus,
    Minus,
    Star,
    Slash,
    Bang,
    AndAnd,
    OrOr,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(i) => format!("`{i}`"),
            Tok::Str(s) => format!("\"{s}\""),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Comma => ",",
            Tok::Semi => ";",
            Tok::Dot => ".",
            Tok::At => "@",
            Tok::Prime => "'",
            Tok::Assign => ":=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::EqEq => "==",
            Tok::Ne => "!=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Bang => "!",
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            Tok::Ident(_) | Tok::Int(_) | Tok::Str(_) | Tok::Eof => "",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

fn is_upper_ident(s: &str) -> bool {
    !s.chars().any(|c| c.is_ascii_lowercase())
}

/// Splits `src` into tokens. A colon between two names is read as a dot,
/// so `Scheduler:permanentexec` names the same port as
/// `Scheduler.permanentexec`. The glyphs `∧ ∨ ¬ ≤ ≥ ←` are accepted as
/// spellings of `&& || ! <= >= :=`.
pub fn lex(src: &str) -> Result<Vec<Token>, Diagnostic> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let adv = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            adv(1, &mut i, &mut col);
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let push = |out: &mut Vec<Token>, tok: Tok| out.push(Token { tok, line: tl, col: tc });
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() {
                let ch = chars[i];
                if ch.is_ascii_alphanumeric() || ch == '_' {
                    i += 1;
                } else if ch == '-'
                    && i + 1 < chars.len()
                    && chars[i + 1].is_ascii_uppercase()
                    && is_upper_ident(&chars[start..i].iter().collect::<String>())
                {
                    // Hyphenated symbol such as MAX-PWR-EXCEEDED.
                    i += 1;
                } else {
                    break;
                }
            }
            col += i - start;
            push(&mut out, Tok::Ident(chars[start..i].iter().collect()));
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            col += i - start;
            let text: String = chars[start..i].iter().collect();
            let v = text.parse::<u64>().map_err(|_| {
                Diagnostic::error("E001", tl, tc, format!("integer literal `{text}` out of range"))
            })?;
            push(&mut out, Tok::Int(v));
            continue;
        }
        if c == '"' || c == '“' {
            let close = if c == '"' { '"' } else { '”' };
            let start = i + 1;
            let mut j = start;
            while j < chars.len() && chars[j] != close && chars[j] != '\n' {
                j += 1;
            }
            if j >= chars.len() || chars[j] != close {
                return Err(Diagnostic::error("E001", tl, tc, "unterminated string literal"));
            }
            col += j + 1 - i;
            i = j + 1;
            push(&mut out, Tok::Str(chars[start..j].iter().collect()));
            continue;
        }
        let next = chars.get(i + 1).copied();
        let (tok, n) = match (c, next) {
            (':', Some('=')) => (Tok::Assign, 2),
            (':', _) => (Tok::Dot, 1),
            ('<', Some('=')) => (Tok::Le, 2),
            ('>', Some('=')) => (Tok::Ge, 2),
            ('=', Some('=')) => (Tok::EqEq, 2),
            ('=', _) => (Tok::EqEq, 1),
            ('!', Some('=')) => (Tok::Ne, 2),
            ('&', Some('&')) => (Tok::AndAnd, 2),
            ('|', Some('|')) => (Tok::OrOr, 2),
            ('<', _) => (Tok::Lt, 1),
            ('>', _) => (Tok::Gt, 1),
            ('!', _) | ('¬', _) => (Tok::Bang, 1),
            ('∧', _) => (Tok::AndAnd, 1),
            ('∨', _) => (Tok::OrOr, 1),
            ('≤', _) => (Tok::Le, 1),
            ('≥', _) => (Tok::Ge, 1),
            ('←', _) => (Tok::Assign, 1),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            ('[', _) => (Tok::LBracket, 1),
            (']', _) => (Tok::RBracket, 1),
            ('{', _) => (Tok::LBrace, 1),
            ('}', _) => (Tok::RBrace, 1),
            (',', _) => (Tok::Comma, 1),
            (';', _) => (Tok::Semi, 1),
            ('.', _) => (Tok::Dot, 1),
            ('@', _) => (Tok::At, 1),
            ('\'', _) | ('’', _) => (Tok::Prime, 1),
            ('+', _) => (Tok::Plus, 1),
            ('-', _) => (Tok::Minus, 1),
            ('*', _) => (Tok::Star, 1),
            ('/', _) => (Tok::Slash, 1),
            _ => {
                return Err(Diagnostic::error(
                    "E001",
                    tl,
                    tc,
                    format!("unexpected character `{c}`"),
                ))
            }
        };
        push(&mut out, tok);
        adv(n, &mut i, &mut col);
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn symbols_keep_hyphens() {
        assert_eq!(
            toks("x := PARAMS-OR-SPEED-NOT-SET"),
            vec![
                Tok::Ident("x".into()),
                Tok::Assign,
                Tok::Ident("PARAMS-OR-SPEED-NOT-SET".into()),
                Tok::Eof
            ]
        );
        assert_eq!(
            toks("a-B"),
            vec![Tok::Ident("a".into()), Tok::Minus, Tok::Ident("B".into()), Tok::Eof]
        );
    }

    #[test]
    fn glyphs_and_colon_paths() {
        assert_eq!(
            toks("¬a ∧ P:read.age ≥ 5"),
            vec![
                Tok::Bang,
                Tok::Ident("a".into()),
                Tok::AndAnd,
                Tok::Ident("P".into()),
                Tok::Dot,
                Tok::Ident("read".into()),
                Tok::Dot,
                Tok::Ident("age".into()),
                Tok::Ge,
                Tok::Int(5),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn positions_and_comments() {
        let t = lex("# c\n  on in").unwrap();
        assert_eq!((t[0].line, t[0].col), (2, 3));
        assert_eq!((t[1].line, t[1].col), (2, 6));
    }
}
