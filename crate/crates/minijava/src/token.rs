//! Tokens and the Mini-Java lexer.

use crate::error::LexError;

/// The separator tokens around which most single-token errors occur.
pub const SEPARATORS: [&str; 10] = [",", ";", ".", "(", ")", "{", "}", "[", "]", "+"];

/// Keywords of the Mini-Java subset.
pub const KEYWORDS: [&str; 29] = [
    "class", "extends", "import", "public", "private", "protected", "static", "final", "void",
    "if", "else", "for", "while", "switch", "case", "default", "break", "return", "new", "this",
    "super", "null", "true", "false", "int", "long", "short", "byte", "boolean",
];

/// Primitive type keywords ("char", "float" and "double" are lexed as
/// identifiers-turned-keywords below to keep [`KEYWORDS`] at a fixed size).
pub const PRIMITIVE_TYPES: [&str; 9] = [
    "int", "long", "short", "byte", "char", "boolean", "float", "double", "void",
];

/// Modifier keywords.
pub const MODIFIERS: [&str; 5] = ["public", "private", "protected", "static", "final"];

const EXTRA_KEYWORDS: [&str; 3] = ["char", "float", "double"];

/// Multi-character operators, longest first for maximal munch.
const OPERATORS: [&str; 18] = [
    "==", "!=", "<=", ">=", "&&", "||", "++", "--", "=", "<", ">", "!", "-", "*", "/", "%", ":",
    "?",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Keyword,
    Identifier,
    NumberLiteral,
    StringLiteral,
    CharLiteral,
    Separator,
    Operator,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub kind: TokenKind,
    /// Position in the token sequence.
    pub index: usize,
    /// True when at least one line break separated this token from the
    /// previous one; retained for statement segmentation.
    pub newline_before: bool,
}

impl Token {
    pub fn new(text: impl Into<String>, kind: TokenKind, index: usize) -> Self {
        Token { text: text.into(), kind, index, newline_before: false }
    }

    pub fn is_separator(&self, sep: &str) -> bool {
        self.kind == TokenKind::Separator && self.text == sep
    }
}

pub fn is_keyword(text: &str) -> bool {
    KEYWORDS.contains(&text) || EXTRA_KEYWORDS.contains(&text)
}

pub fn is_separator_text(text: &str) -> bool {
    SEPARATORS.contains(&text)
}

pub fn is_primitive_type(text: &str) -> bool {
    PRIMITIVE_TYPES.contains(&text)
}

pub fn is_modifier(text: &str) -> bool {
    MODIFIERS.contains(&text)
}

/// Maximal-munch lexer. Comments and whitespace are discarded; line breaks
/// are kept as `newline_before` annotations on the following token.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    let mut saw_newline = false;

    while i < bytes.len() {
        let c = bytes[i] as char;
        if c == '\n' {
            saw_newline = true;
            i += 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        // Comments.
        if c == '/' && i + 1 < bytes.len() {
            match bytes[i + 1] as char {
                '/' => {
                    while i < bytes.len() && bytes[i] as char != '\n' {
                        i += 1;
                    }
                    continue;
                }
                '*' => {
                    i += 2;
                    while i + 1 < bytes.len() && !(bytes[i] == b'*' && bytes[i + 1] == b'/') {
                        i += 1;
                    }
                    if i + 1 >= bytes.len() {
                        return Err(LexError::UnlexableCharacter { position: i.min(bytes.len()) });
                    }
                    i += 2;
                    continue;
                }
                _ => {}
            }
        }

        let start = i;
        let (text, kind) = if c.is_ascii_alphabetic() || c == '_' || c == '$' {
            while i < bytes.len() {
                let d = bytes[i] as char;
                if d.is_ascii_alphanumeric() || d == '_' || d == '$' {
                    i += 1;
                } else {
                    break;
                }
            }
            let word = &source[start..i];
            let kind = if is_keyword(word) { TokenKind::Keyword } else { TokenKind::Identifier };
            (word.to_string(), kind)
        } else if c.is_ascii_digit() {
            while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                i += 1;
            }
            if i + 1 < bytes.len()
                && bytes[i] == b'.'
                && (bytes[i + 1] as char).is_ascii_digit()
            {
                i += 1;
                while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                    i += 1;
                }
            }
            (source[start..i].to_string(), TokenKind::NumberLiteral)
        } else if c == '"' {
            i += 1;
            while i < bytes.len() && bytes[i] != b'"' {
                if bytes[i] == b'\\' {
                    i += 1;
                }
                i += 1;
            }
            if i >= bytes.len() {
                return Err(LexError::UnlexableCharacter { position: start });
            }
            i += 1;
            (source[start..i].to_string(), TokenKind::StringLiteral)
        } else if c == '\'' {
            i += 1;
            while i < bytes.len() && bytes[i] != b'\'' {
                if bytes[i] == b'\\' {
                    i += 1;
                }
                i += 1;
            }
            if i >= bytes.len() {
                return Err(LexError::UnlexableCharacter { position: start });
            }
            i += 1;
            (source[start..i].to_string(), TokenKind::CharLiteral)
        } else if let Some(op) = OPERATORS
            .iter()
            .filter(|op| op.len() > 1)
            .find(|op| source[i..].starts_with(**op))
        {
            // `++` and friends before the single-char separator check, so
            // `i ++` does not lex as two `+` separators.
            i += op.len();
            (op.to_string(), TokenKind::Operator)
        } else if is_separator_text(&source[i..i + 1]) {
            i += 1;
            (source[start..i].to_string(), TokenKind::Separator)
        } else if let Some(op) = OPERATORS.iter().find(|op| source[i..].starts_with(**op)) {
            i += op.len();
            (op.to_string(), TokenKind::Operator)
        } else {
            return Err(LexError::UnlexableCharacter { position: i });
        };

        let mut tok = Token::new(text, kind, tokens.len());
        tok.newline_before = saw_newline;
        saw_newline = false;
        tokens.push(tok);
    }
    Ok(tokens)
}

/// Abstracts literal tokens: numbers to `0`, strings to `""`, chars to `''`.
/// Length-preserving and idempotent.
pub fn abstract_literals(tokens: &[Token]) -> Vec<Token> {
    tokens
        .iter()
        .map(|t| {
            let text = match t.kind {
                TokenKind::NumberLiteral => "0",
                TokenKind::StringLiteral => "\"\"",
                TokenKind::CharLiteral => "''",
                _ => return t.clone(),
            };
            Token { text: text.to_string(), ..t.clone() }
        })
        .collect()
}

/// Renders a token sequence as single-space-joined text.
pub fn render(tokens: &[Token]) -> String {
    tokens.iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join(" ")
}

/// Convenience: lex and panic on failure (for trusted inputs in tests/tools).
pub fn must_tokenize(source: &str) -> Vec<Token> {
    tokenize(source).expect("unlexable input")
}
