//! Parenthesized-prefix reader with line/column spans.
//!
//! The reader knows nothing about the problem grammar: it produces atoms
//! and lists. Atoms are maximal runs of characters outside whitespace,
//! parentheses, and comments; `;` starts a comment running to end of line.
//! Every node carries the position of its first character, so grammar-level
//! diagnostics can point into the source.

use std::fmt;

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Atom(String, Span),
    List(Vec<Sexp>, Span),
}

impl Sexp {
    pub fn span(&self) -> Span {
        match self {
            Sexp::Atom(_, s) | Sexp::List(_, s) => *s,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a, _) => Some(a),
            Sexp::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(items, _) => Some(items),
            Sexp::Atom(..) => None,
        }
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom(a, _) => write!(f, "{a}"),
            Sexp::List(items, _) => {
                write!(f, "(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{item}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReadError {
    pub span: Span,
    pub msg: String,
}

impl fmt::Display for ReadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.msg)
    }
}

impl std::error::Error for ReadError {}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Reader { chars: text.chars().peekable(), line: 1, col: 1 }
    }

    fn pos(&self) -> Span {
        Span { line: self.line, col: self.col }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
                while let Some(&c) = self.chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn read(&mut self) -> Result<Option<Sexp>, ReadError> {
        self.skip_trivia();
        let span = self.pos();
        match self.chars.peek() {
            None => Ok(None),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.chars.peek() {
                        None => {
                            return Err(ReadError {
                                span,
                                msg: "unclosed parenthesis".into(),
                            })
                        }
                        Some(')') => {
                            self.bump();
                            return Ok(Some(Sexp::List(items, span)));
                        }
                        Some(_) => match self.read()? {
                            Some(item) => items.push(item),
                            None => {
                                return Err(ReadError {
                                    span,
                                    msg: "unclosed parenthesis".into(),
                                })
                            }
                        },
                    }
                }
            }
            Some(')') => Err(ReadError { span, msg: "unmatched `)`".into() }),
            Some(_) => {
                let mut atom = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    atom.push(c);
                    self.bump();
                }
                Ok(Some(Sexp::Atom(atom, span)))
            }
        }
    }
}

/// Reads every form in the text. An empty (or comment-only) input yields an
/// empty vector.
pub fn read_all(text: &str) -> Result<Vec<Sexp>, ReadError> {
    let mut reader = Reader::new(text);
    let mut out = Vec::new();
    while let Some(form) = reader.read()? {
        out.push(form);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atoms_lists_and_comments() {
        let forms = read_all("(base DLO) ; trailing\n(goal (< a b))").unwrap();
        assert_eq!(forms.len(), 2);
        assert_eq!(forms[0].as_list().unwrap()[1].as_atom(), Some("DLO"));
        let goal = forms[1].as_list().unwrap();
        assert_eq!(goal[0].as_atom(), Some("goal"));
        assert_eq!(goal[1].as_list().unwrap().len(), 3);
    }

    #[test]
    fn spans_are_one_based_line_and_column() {
        let forms = read_all("(a\n  (b c))").unwrap();
        let outer = forms[0].as_list().unwrap();
        assert_eq!(forms[0].span(), Span { line: 1, col: 1 });
        let inner = &outer[1];
        assert_eq!(inner.span(), Span { line: 2, col: 3 });
        assert_eq!(inner.as_list().unwrap()[1].span(), Span { line: 2, col: 6 });
    }

    #[test]
    fn hash_and_symbol_characters_are_atom_material() {
        let forms = read_all("(= #1 (f c1) <= /)").unwrap();
        let items = forms[0].as_list().unwrap();
        assert_eq!(items[1].as_atom(), Some("#1"));
        assert_eq!(items[3].as_atom(), Some("<="));
        assert_eq!(items[4].as_atom(), Some("/"));
    }

    #[test]
    fn unbalanced_input_is_rejected_with_a_position() {
        let err = read_all("(a (b)").unwrap_err();
        assert_eq!(err.span, Span { line: 1, col: 1 });
        let err = read_all(")").unwrap_err();
        assert_eq!(err.span, Span { line: 1, col: 1 });
    }

    #[test]
    fn empty_input_reads_to_nothing() {
        assert!(read_all("").unwrap().is_empty());
        assert!(read_all("; only a comment\n").unwrap().is_empty());
    }

    #[test]
    fn rendering_reads_back_identically() {
        let text = "(level 1 (functions (f 1)) (axioms (forall (x) (<= (f x) x))))";
        let forms = read_all(text).unwrap();
        assert_eq!(forms[0].to_string(), text);
    }
}
