use super::ParseError;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Number(f64),
    Keyword(&'static str),
    Sym(&'static str),
    ZeroTan,
    Underscore,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(n) => format!("number `{n:?}`"),
            Tok::Keyword(k) => format!("keyword `{k}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::ZeroTan => "`0t`".to_string(),
            Tok::Underscore => "`_`".to_string(),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

pub const KEYWORDS: [&str; 25] = [
    "fun", "let", "in", "case", "of", "inl", "inr", "roll", "unroll", "sign", "if", "then", "else", "fix", "iterate",
    "from", "mu", "real", "tangent", "unit", "void", "def", "type", "basis", "proj",
];

// Longest first so that `<+>` wins over `<`.
const SYMBOLS: [&str; 20] = [
    "<+>", "<*>", ";;", "->", "(", ")", "[", "]", "{", "}", ",", "|", "=", ":", ".", "+", "-", "*", "/", "<",
];

#[derive(Clone, Debug)]
pub struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

pub fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let is_ident = |c: char| c.is_ascii_alphanumeric() || c == '_' || c == '\'';
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let push = |out: &mut Vec<Spanned>, tok| out.push(Spanned { tok, line: tl, col: tc });
        if c == '0' && chars.get(i + 1) == Some(&'t') && !chars.get(i + 2).is_some_and(|&d| is_ident(d)) {
            push(&mut out, Tok::ZeroTan);
            i += 2;
            col += 2;
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let n: f64 = text
                .parse()
                .map_err(|_| ParseError::syntax(tl, tc, format!("malformed number `{text}`")))?;
            if !n.is_finite() {
                return Err(ParseError::syntax(tl, tc, format!("number `{text}` is out of range")));
            }
            if i < chars.len() && is_ident(chars[i]) {
                return Err(ParseError::syntax(
                    tl,
                    tc,
                    format!("malformed number `{text}{}`", chars[i]),
                ));
            }
            col += i - start;
            push(&mut out, Tok::Number(n));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && is_ident(chars[i]) {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            let tok = if text == "_" {
                Tok::Underscore
            } else if let Some(k) = KEYWORDS.iter().find(|k| **k == text) {
                Tok::Keyword(k)
            } else {
                Tok::Ident(text)
            };
            push(&mut out, tok);
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                push(&mut out, Tok::Sym(s));
                i += s.len();
                col += s.len();
            }
            None => {
                // `>` is only a comparison operator; handled here to keep `->` unambiguous.
                if c == '>' {
                    push(&mut out, Tok::Sym(">"));
                    i += 1;
                    col += 1;
                } else {
                    return Err(ParseError::syntax(tl, tc, format!("unexpected character `{c}`")));
                }
            }
        }
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}
