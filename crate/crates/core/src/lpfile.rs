//! The `.lp` text format for L-presentations.
//!
//! A document is a sequence of semicolon-terminated statements; whitespace
//! (including newlines) is insignificant and `#` starts a comment running to
//! the end of the line.
//!
//! ```text
//! gens: a, b, c, d;                 # generator names, first statement
//! Q: a^2, b^2, c^2, d^2, b*c*d;     # fixed relators (optional)
//! phi sigma: a -> a*c*a, b -> d, c -> b, d -> c;
//! R: (a*d)^4, (a*d*a*c*a*c)^4;      # iterated relators
//! invariant: true;                  # optional kernel-invariance claim
//! ```
//!
//! Words are built from generator names with `*` (product), `^n` (integer
//! power, `n` possibly negative), parentheses, and the commutator bracket
//! `[u,v]` = `u⁻¹v⁻¹uv`.  An exponent may also be a *parenthesized word*,
//! meaning conjugation: `u^(v)` = `v⁻¹uv`.  A bare word exponent such as
//! `a^b` is rejected — write `a^(b)`.
//!
//! `parse` and `print` round-trip: printing an L-presentation and parsing
//! the output reproduces it exactly.

use crate::lpres::LPresentation;
use crate::word::{Alphabet, FreeEndomorphism, FreeWord};

/// Parse failure with a 1-based line and column.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {col}: {message}")]
pub struct LpParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

// ---------------------------------------------------------------- lexing --

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Star,
    Caret,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Semi,
    Arrow,
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier {s:?}"),
            Tok::Int(n) => write!(f, "integer {n}"),
            Tok::Star => f.write_str("'*'"),
            Tok::Caret => f.write_str("'^'"),
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
            Tok::LBracket => f.write_str("'['"),
            Tok::RBracket => f.write_str("']'"),
            Tok::Comma => f.write_str("','"),
            Tok::Colon => f.write_str("':'"),
            Tok::Semi => f.write_str("';'"),
            Tok::Arrow => f.write_str("'->'"),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, LpParseError> {
    let mut out = Vec::new();
    for (li, raw) in text.lines().enumerate() {
        let line = li + 1;
        let s = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let b = s.as_bytes();
        let mut i = 0;
        while i < b.len() {
            let col = i + 1;
            let c = b[i] as char;
            let err = |message: String| LpParseError { line, col, message };
            let simple = |tok: Tok| Spanned { tok, line, col };
            match c {
                ' ' | '\t' | '\r' => {
                    i += 1;
                    continue;
                }
                '*' => out.push(simple(Tok::Star)),
                '^' => out.push(simple(Tok::Caret)),
                '(' => out.push(simple(Tok::LParen)),
                ')' => out.push(simple(Tok::RParen)),
                '[' => out.push(simple(Tok::LBracket)),
                ']' => out.push(simple(Tok::RBracket)),
                ',' => out.push(simple(Tok::Comma)),
                ':' => out.push(simple(Tok::Colon)),
                ';' => out.push(simple(Tok::Semi)),
                '-' => {
                    if i + 1 < b.len() && b[i + 1] == b'>' {
                        out.push(simple(Tok::Arrow));
                        i += 2;
                        continue;
                    } else if i + 1 < b.len() && b[i + 1].is_ascii_digit() {
                        let start = i;
                        i += 1;
                        while i < b.len() && b[i].is_ascii_digit() {
                            i += 1;
                        }
                        let n: i64 = s[start..i]
                            .parse()
                            .map_err(|_| err("integer literal too large".into()))?;
                        out.push(Spanned { tok: Tok::Int(n), line, col });
                        continue;
                    } else {
                        return Err(err("stray '-'".into()));
                    }
                }
                _ if c.is_ascii_digit() => {
                    let start = i;
                    while i < b.len() && b[i].is_ascii_digit() {
                        i += 1;
                    }
                    let n: i64 = s[start..i]
                        .parse()
                        .map_err(|_| err("integer literal too large".into()))?;
                    out.push(Spanned { tok: Tok::Int(n), line, col });
                    continue;
                }
                _ if c.is_ascii_alphabetic() || c == '_' => {
                    let start = i;
                    while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                        i += 1;
                    }
                    out.push(Spanned {
                        tok: Tok::Ident(s[start..i].to_string()),
                        line,
                        col,
                    });
                    continue;
                }
                _ => return Err(err(format!("unexpected character {c:?}"))),
            }
            i += 1;
        }
    }
    Ok(out)
}

// --------------------------------------------------------------- parsing --

struct Parser<'a> {
    toks: &'a [Spanned],
    pos: usize,
    end_line: usize,
}

impl<'a> Parser<'a> {
    fn new(toks: &'a [Spanned], end_line: usize) -> Self {
        Parser { toks, pos: 0, end_line }
    }

    fn here(&self) -> (usize, usize) {
        match self.toks.get(self.pos) {
            Some(t) => (t.line, t.col),
            None => (self.end_line, 1),
        }
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T, LpParseError> {
        let (line, col) = self.here();
        Err(LpParseError { line, col, message: message.into() })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> Result<(), LpParseError> {
        match self.peek() {
            Some(x) if *x == t => {
                self.pos += 1;
                Ok(())
            }
            Some(x) => {
                let x = x.clone();
                self.fail(format!("expected {t}, found {x}"))
            }
            None => self.fail(format!("expected {t}, found end of input")),
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, LpParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            Some(x) => {
                let x = x.clone();
                self.fail(format!("expected {what}, found {x}"))
            }
            None => self.fail(format!("expected {what}, found end of input")),
        }
    }

    /// word := factor ('*' factor)*
    fn word(&mut self, a: &Alphabet) -> Result<FreeWord, LpParseError> {
        let mut w = self.factor(a)?;
        while self.eat(&Tok::Star) {
            let f = self.factor(a)?;
            w = w.multiply(&f);
        }
        Ok(w)
    }

    /// factor := atom ('^' exponent)*, where an exponent is an integer
    /// (power) or a parenthesized word (conjugation).
    fn factor(&mut self, a: &Alphabet) -> Result<FreeWord, LpParseError> {
        let mut w = self.atom(a)?;
        while self.eat(&Tok::Caret) {
            match self.peek() {
                Some(&Tok::Int(n)) => {
                    self.pos += 1;
                    w = match w.power_i(n) {
                        Ok(p) => p,
                        Err(e) => return self.fail(e.to_string()),
                    };
                }
                Some(Tok::LParen) => {
                    self.pos += 1;
                    let v = self.word(a)?;
                    self.expect(Tok::RParen)?;
                    w = w.conjugate(&v);
                }
                _ => {
                    return self.fail(
                        "exponent must be an integer or a parenthesized word \
                         (write u^(v) for conjugation)",
                    )
                }
            }
        }
        Ok(w)
    }

    /// atom := ident | '(' word ')' | '[' word ',' word ']'
    fn atom(&mut self, a: &Alphabet) -> Result<FreeWord, LpParseError> {
        match self.peek() {
            Some(Tok::Ident(name)) => match a.index_of(name) {
                Some(i) => {
                    self.pos += 1;
                    Ok(FreeWord::generator(i))
                }
                None => {
                    let name = name.clone();
                    self.fail(format!("unknown generator {name:?}"))
                }
            },
            Some(Tok::LParen) => {
                self.pos += 1;
                let w = self.word(a)?;
                self.expect(Tok::RParen)?;
                Ok(w)
            }
            Some(Tok::LBracket) => {
                self.pos += 1;
                let u = self.word(a)?;
                self.expect(Tok::Comma)?;
                let v = self.word(a)?;
                self.expect(Tok::RBracket)?;
                Ok(FreeWord::commutator(&u, &v))
            }
            Some(x) => {
                let x = x.clone();
                self.fail(format!("expected a word, found {x}"))
            }
            None => self.fail("expected a word, found end of input"),
        }
    }

    /// Comma-separated words terminated by ';'.
    fn word_list(&mut self, a: &Alphabet) -> Result<Vec<FreeWord>, LpParseError> {
        let mut out = vec![self.word(a)?];
        while self.eat(&Tok::Comma) {
            out.push(self.word(a)?);
        }
        self.expect(Tok::Semi)?;
        Ok(out)
    }
}

/// Parse a single word over the given alphabet (as used for relators in
/// `.lp` files and for subgroup generators given on a command line).
pub fn parse_word(alphabet: &Alphabet, s: &str) -> Result<FreeWord, LpParseError> {
    let toks = lex(s)?;
    let mut p = Parser::new(&toks, s.lines().count().max(1));
    let w = p.word(alphabet)?;
    if p.pos != toks.len() {
        return p.fail("trailing input after word");
    }
    Ok(w)
}

/// Parse a comma-separated list of words (commas inside `[u,v]` brackets do
/// not split), as used for subgroup generators given on a command line.
pub fn parse_word_list(alphabet: &Alphabet, s: &str) -> Result<Vec<FreeWord>, LpParseError> {
    let toks = lex(s)?;
    let mut p = Parser::new(&toks, s.lines().count().max(1));
    let mut out = vec![p.word(alphabet)?];
    while p.eat(&Tok::Comma) {
        out.push(p.word(alphabet)?);
    }
    if p.pos != toks.len() {
        return p.fail("trailing input after word list");
    }
    Ok(out)
}

/// Parse a complete `.lp` document.
pub fn parse(text: &str) -> Result<LPresentation, LpParseError> {
    let toks = lex(text)?;
    let mut p = Parser::new(&toks, text.lines().count().max(1));
    let mut alphabet: Option<Alphabet> = None;
    let mut fixed: Vec<FreeWord> = Vec::new();
    let mut iterated: Vec<FreeWord> = Vec::new();
    let mut endos: Vec<(String, FreeEndomorphism)> = Vec::new();
    let mut invariant = false;
    while p.peek().is_some() {
        let at = p.here();
        let head = p.ident("a statement ('gens', 'Q', 'phi', 'R' or 'invariant')")?;
        match head.as_str() {
            "gens" => {
                if alphabet.is_some() {
                    return Err(LpParseError {
                        line: at.0,
                        col: at.1,
                        message: "duplicate gens statement".into(),
                    });
                }
                p.expect(Tok::Colon)?;
                let mut names = vec![p.ident("a generator name")?];
                while p.eat(&Tok::Comma) {
                    names.push(p.ident("a generator name")?);
                }
                p.expect(Tok::Semi)?;
                match Alphabet::new(names) {
                    Ok(a) => alphabet = Some(a),
                    Err(e) => {
                        return Err(LpParseError { line: at.0, col: at.1, message: e })
                    }
                }
            }
            "Q" | "R" => {
                let a = match &alphabet {
                    Some(a) => a.clone(),
                    None => return p.fail("relators must come after the gens statement"),
                };
                p.expect(Tok::Colon)?;
                let words = p.word_list(&a)?;
                if head == "Q" {
                    fixed.extend(words);
                } else {
                    iterated.extend(words);
                }
            }
            "phi" => {
                let a = match &alphabet {
                    Some(a) => a.clone(),
                    None => return p.fail("phi must come after the gens statement"),
                };
                let name = p.ident("an endomorphism name")?;
                p.expect(Tok::Colon)?;
                let mut images: Vec<Option<FreeWord>> = vec![None; a.rank()];
                loop {
                    let g = p.ident("a generator name")?;
                    let gi = match a.index_of(&g) {
                        Some(i) => i,
                        None => return p.fail(format!("unknown generator {g:?}")),
                    };
                    p.expect(Tok::Arrow)?;
                    let w = p.word(&a)?;
                    if images[gi].is_some() {
                        return p.fail(format!("generator {g:?} assigned twice"));
                    }
                    images[gi] = Some(w);
                    if p.eat(&Tok::Comma) {
                        continue;
                    }
                    p.expect(Tok::Semi)?;
                    break;
                }
                let mut imgs = Vec::with_capacity(a.rank());
                for (i, w) in images.into_iter().enumerate() {
                    match w {
                        Some(w) => imgs.push(w),
                        None => {
                            return Err(LpParseError {
                                line: at.0,
                                col: at.1,
                                message: format!(
                                    "phi {name} misses generator {:?}",
                                    a.name(i)
                                ),
                            })
                        }
                    }
                }
                match FreeEndomorphism::new(imgs) {
                    Ok(e) => endos.push((name, e)),
                    Err(e) => {
                        return Err(LpParseError { line: at.0, col: at.1, message: e })
                    }
                }
            }
            "invariant" => {
                p.expect(Tok::Colon)?;
                let v = p.ident("'true' or 'false'")?;
                match v.as_str() {
                    "true" => invariant = true,
                    "false" => invariant = false,
                    _ => return p.fail("invariant must be 'true' or 'false'"),
                }
                p.expect(Tok::Semi)?;
            }
            _ => {
                return Err(LpParseError {
                    line: at.0,
                    col: at.1,
                    message: format!(
                        "unknown statement {head:?} (expected 'gens', 'Q', 'phi', 'R' \
                         or 'invariant')"
                    ),
                })
            }
        }
    }
    let alphabet = match alphabet {
        Some(a) => a,
        None => {
            return Err(LpParseError {
                line: 1,
                col: 1,
                message: "missing gens statement".into(),
            })
        }
    };
    let lp = LPresentation::new(alphabet, fixed, endos, iterated)
        .map_err(|e| LpParseError { line: 1, col: 1, message: e })?;
    Ok(if invariant { lp.mark_invariant() } else { lp })
}

// -------------------------------------------------------------- printing --

/// Render a word; inverse letters print as `^-1` powers and runs of one
/// letter fold into powers.
pub fn print_word(alphabet: &Alphabet, w: &FreeWord) -> String {
    if w.is_identity() {
        // No empty-word literal exists; a trivial relator never occurs in a
        // valid presentation, but print something parseable anyway.
        return format!("{}^0", alphabet.name(0));
    }
    let mut parts: Vec<String> = Vec::new();
    let letters = w.letters();
    let mut i = 0;
    while i < letters.len() {
        let l = letters[i];
        let mut j = i + 1;
        while j < letters.len() && letters[j] == l {
            j += 1;
        }
        let count = (j - i) as i64;
        let name = alphabet.name(l.unsigned_abs() as usize - 1);
        let exp = if l > 0 { count } else { -count };
        if exp == 1 {
            parts.push(name.to_string());
        } else {
            parts.push(format!("{name}^{exp}"));
        }
        i = j;
    }
    parts.join("*")
}

/// Render an L-presentation in the `.lp` format parsed by [`parse`].
pub fn print(lp: &LPresentation) -> String {
    let a = lp.alphabet();
    let mut out = String::new();
    out.push_str(&format!("gens: {};\n", a.names().join(", ")));
    if !lp.fixed().is_empty() {
        let words: Vec<String> = lp.fixed().iter().map(|w| print_word(a, w)).collect();
        out.push_str(&format!("Q: {};\n", words.join(",\n   ")));
    }
    for (name, e) in lp.endo_names().iter().zip(lp.endomorphisms()) {
        let assigns: Vec<String> = (0..a.rank())
            .map(|i| format!("{} -> {}", a.name(i), print_word(a, e.image(i))))
            .collect();
        out.push_str(&format!("phi {name}: {};\n", assigns.join(", ")));
    }
    if !lp.iterated().is_empty() {
        let words: Vec<String> = lp.iterated().iter().map(|w| print_word(a, w)).collect();
        out.push_str(&format!("R: {};\n", words.join(",\n   ")));
    }
    if lp.is_invariant() && !lp.is_ascending() {
        out.push_str("invariant: true;\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lpres::{preset_gamma, preset_grigorchuk};
    use proptest::prelude::*;

    #[test]
    fn parses_a_small_document() {
        let text = "
# a sample document
gens: a, t;
R: [t, t^(a)];   # iterated commutator relator
phi s: a -> a,
       t -> t^2;
Q: a^3;
";
        let lp = parse(text).unwrap();
        assert_eq!(lp.rank(), 2);
        assert_eq!(lp.fixed().len(), 1);
        assert_eq!(lp.iterated().len(), 1);
        assert_eq!(lp.endomorphisms().len(), 1);
        let a = FreeWord::generator(0);
        let t = FreeWord::generator(1);
        assert_eq!(lp.iterated()[0], FreeWord::commutator(&t, &t.conjugate(&a)));
        assert_eq!(lp.fixed()[0], a.power_i(3).unwrap());
        assert_eq!(lp.endomorphisms()[0].image(1), &t.power_i(2).unwrap());
    }

    #[test]
    fn missing_q_means_ascending() {
        let lp = parse("gens: a; R: a^2; phi s: a -> a;").unwrap();
        assert!(lp.is_ascending());
        assert!(lp.is_invariant());
        assert_eq!(lp.iterated().len(), 1);
    }

    #[test]
    fn bare_word_exponent_is_rejected() {
        let e = parse("gens: a, b;\nQ: a^b;").unwrap_err();
        assert_eq!((e.line, e.col), (2, 6));
        assert!(e.message.contains("parenthesized"), "{}", e.message);
    }

    #[test]
    fn missing_colon_is_a_syntax_error() {
        let e = parse("gens a;").unwrap_err();
        assert_eq!(e.line, 1);
        assert!(e.message.contains("':'"), "{}", e.message);
    }

    #[test]
    fn errors_carry_line_and_column() {
        let e = parse("gens: a;\nQ: z^2;").unwrap_err();
        assert_eq!((e.line, e.col), (2, 4));
        assert!(e.message.contains("unknown generator"));
        let e = parse("gens: a;\nbogus: 1;").unwrap_err();
        assert_eq!(e.line, 2);
        let e = parse("Q: a;").unwrap_err();
        assert!(e.message.contains("gens"));
        let e = parse("gens: a, a;").unwrap_err();
        assert!(e.message.contains("duplicate"));
    }

    #[test]
    fn word_lists_split_on_top_level_commas_only() {
        let a = Alphabet::new(["a", "b"]).unwrap();
        let ws = parse_word_list(&a, "a^2, [a, b], b^(a*b)").unwrap();
        assert_eq!(ws.len(), 3);
        let (x, y) = (FreeWord::generator(0), FreeWord::generator(1));
        assert_eq!(ws[1], FreeWord::commutator(&x, &y));
        assert_eq!(ws[2], y.conjugate(&x.multiply(&y)));
        assert!(parse_word_list(&a, "a,,b").is_err());
        assert!(parse_word_list(&a, "").is_err());
    }

    #[test]
    fn presets_round_trip() {
        for lp in [
            preset_grigorchuk(),
            preset_gamma(3).unwrap(),
            preset_gamma(7).unwrap(),
        ] {
            let text = print(&lp);
            let back = parse(&text).unwrap();
            assert_eq!(back, lp);
        }
    }

    #[test]
    fn conjugation_and_commutator_forms() {
        let lp = parse("gens: x, y; R: x^(y), [x, y], (x*y)^-2;").unwrap();
        let x = FreeWord::generator(0);
        let y = FreeWord::generator(1);
        assert_eq!(lp.iterated()[0], x.conjugate(&y));
        assert_eq!(lp.iterated()[1], FreeWord::commutator(&x, &y));
        assert_eq!(lp.iterated()[2], x.multiply(&y).power_i(-2).unwrap());
    }

    proptest! {
        #[test]
        fn prop_word_print_parse_round_trip(letters in proptest::collection::vec(-4i32..=4, 0..30)) {
            let alphabet = Alphabet::new(["a", "b", "c", "d"]).unwrap();
            let w = FreeWord::from_letters(letters.into_iter().filter(|&l| l != 0));
            prop_assume!(!w.is_identity());
            let s = print_word(&alphabet, &w);
            let back = parse_word(&alphabet, &s).unwrap();
            prop_assert_eq!(back, w);
        }

        #[test]
        fn prop_presentation_round_trip(
            qs in proptest::collection::vec(proptest::collection::vec(-3i32..=3, 1..8), 0..3),
            rs in proptest::collection::vec(proptest::collection::vec(-3i32..=3, 1..8), 1..4),
            imgs in proptest::collection::vec(proptest::collection::vec(-3i32..=3, 1..6), 3),
        ) {
            let alphabet = Alphabet::new(["a", "b", "c"]).unwrap();
            let mk = |v: &Vec<i32>| FreeWord::from_letters(v.iter().copied().filter(|&l| l != 0));
            let q: Vec<FreeWord> = qs.iter().map(&mk).filter(|w| !w.is_identity()).collect();
            let r: Vec<FreeWord> = rs.iter().map(&mk).filter(|w| !w.is_identity()).collect();
            prop_assume!(!r.is_empty());
            let endo = FreeEndomorphism::new(imgs.iter().map(&mk).collect()).unwrap();
            let lp = LPresentation::new(
                alphabet,
                q,
                vec![("sigma".to_string(), endo)],
                r,
            ).unwrap();
            let back = parse(&print(&lp)).unwrap();
            prop_assert_eq!(back, lp);
        }
    }
}
