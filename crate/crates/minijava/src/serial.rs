//! Flat serialized form of ASTs: parenthesized node labels with leaf tokens
//! elided, the translation target of the lenient parser.

use crate::ast::{Ast, ErrorMarker, Label};
use crate::error::SerialError;
use crate::token::{Token, TokenKind};

/// One symbol of a serialized AST.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SerialSym {
    Open,
    Close,
    Label(Label),
    Marker(ErrorMarker),
}

impl SerialSym {
    pub fn as_str(self) -> &'static str {
        match self {
            SerialSym::Open => "(",
            SerialSym::Close => ")",
            SerialSym::Label(l) => l.as_str(),
            SerialSym::Marker(m) => m.as_str(),
        }
    }

    pub fn parse(s: &str) -> Option<SerialSym> {
        match s {
            "(" => Some(SerialSym::Open),
            ")" => Some(SerialSym::Close),
            _ => Label::parse(s)
                .map(SerialSym::Label)
                .or_else(|| ErrorMarker::parse(s).map(SerialSym::Marker)),
        }
    }
}

/// A balanced sequence over `{ ( ) } ∪ labels ∪ markers`, containing no
/// concrete code tokens.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SerializedAst {
    pub symbols: Vec<SerialSym>,
}

impl SerializedAst {
    pub fn to_text(&self) -> String {
        self.symbols.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(" ")
    }

    pub fn from_text(text: &str) -> Result<SerializedAst, SerialError> {
        let mut symbols = Vec::new();
        for word in text.split_whitespace() {
            symbols
                .push(SerialSym::parse(word).ok_or_else(|| SerialError::UnknownLabel(word.into()))?);
        }
        Ok(SerializedAst { symbols })
    }

    pub fn is_balanced(&self) -> bool {
        let mut depth = 0i64;
        for (i, s) in self.symbols.iter().enumerate() {
            match s {
                SerialSym::Open => depth += 1,
                SerialSym::Close => {
                    depth -= 1;
                    if depth < 0 {
                        return false;
                    }
                }
                // A label must sit directly inside its own open paren.
                _ => {
                    if i == 0 || self.symbols[i - 1] != SerialSym::Open {
                        return false;
                    }
                }
            }
        }
        depth == 0
    }

    pub fn contains_marker(&self) -> bool {
        self.symbols.iter().any(|s| matches!(s, SerialSym::Marker(_)))
    }

    /// Labels only (parens stripped), for comparisons that ignore arity.
    pub fn label_texts(&self) -> Vec<&'static str> {
        self.symbols.iter().map(|s| s.as_str()).collect()
    }
}

/// Pre-order emission: `( label children… )`; leaf tokens elided; markers
/// emitted as childless nodes in tree position.
pub fn serialize_ast(ast: &Ast) -> SerializedAst {
    let mut symbols = Vec::new();
    emit(ast, &mut symbols);
    SerializedAst { symbols }
}

/// Serializes a forest (restriction of a file AST to a token range).
pub fn serialize_forest(forest: &[Ast]) -> SerializedAst {
    let mut symbols = Vec::new();
    for ast in forest {
        emit(ast, &mut symbols);
    }
    SerializedAst { symbols }
}

fn emit(ast: &Ast, out: &mut Vec<SerialSym>) {
    out.push(SerialSym::Open);
    match ast {
        Ast::Node { label, children } => {
            out.push(SerialSym::Label(*label));
            for c in children {
                emit(c, out);
            }
        }
        Ast::Leaf { label, .. } => out.push(SerialSym::Label(*label)),
        Ast::Marker { marker, .. } => out.push(SerialSym::Marker(*marker)),
    }
    out.push(SerialSym::Close);
}

/// Parses a serialized AST back into a forest of unbound trees.
pub fn deserialize(serialized: &SerializedAst) -> Result<Vec<Ast>, SerialError> {
    let syms = &serialized.symbols;
    let mut pos = 0;
    let mut forest = Vec::new();
    while pos < syms.len() {
        let (ast, next) = parse_node(syms, pos)?;
        forest.push(ast);
        pos = next;
    }
    Ok(forest)
}

fn parse_node(syms: &[SerialSym], pos: usize) -> Result<(Ast, usize), SerialError> {
    if syms.get(pos) != Some(&SerialSym::Open) {
        return Err(SerialError::Unbalanced(pos));
    }
    let head = syms.get(pos + 1).ok_or(SerialError::Unbalanced(pos + 1))?;
    let mut cursor = pos + 2;
    let ast = match head {
        SerialSym::Label(label) if label.is_leaf() => Ast::unbound_leaf(*label),
        SerialSym::Label(label) => {
            let mut children = Vec::new();
            while syms.get(cursor) == Some(&SerialSym::Open) {
                let (child, next) = parse_node(syms, cursor)?;
                children.push(child);
                cursor = next;
            }
            Ast::node(*label, children)
        }
        SerialSym::Marker(marker) => Ast::marker(*marker),
        _ => return Err(SerialError::Unbalanced(pos + 1)),
    };
    if syms.get(cursor) != Some(&SerialSym::Close) {
        return Err(SerialError::Unbalanced(cursor));
    }
    Ok((ast, cursor + 1))
}

/// Rebuilds a full AST forest by inserting `tokens` into the leaf slots of
/// `serialized` in order. `Missing*` markers consume no token;
/// `ExtraPunctuation` consumes one and flags it spurious.
pub fn reinsert_tokens(
    serialized: &SerializedAst,
    tokens: &[Token],
) -> Result<Vec<Ast>, SerialError> {
    let mut forest = deserialize(serialized)?;
    let slots: usize = forest.iter().map(Ast::token_arity).sum();
    if slots != tokens.len() {
        return Err(SerialError::ArityMismatch { slots, tokens: tokens.len() });
    }
    let mut iter = tokens.iter();
    for ast in &mut forest {
        bind(ast, &mut iter);
    }
    Ok(forest)
}

fn bind<'a>(ast: &mut Ast, tokens: &mut impl Iterator<Item = &'a Token>) {
    match ast {
        Ast::Node { children, .. } => {
            for c in children {
                bind(c, tokens);
            }
        }
        Ast::Leaf { token, .. } => *token = Some(tokens.next().expect("arity checked").clone()),
        Ast::Marker { marker, token } => {
            if *marker == ErrorMarker::ExtraPunctuation {
                *token = Some(tokens.next().expect("arity checked").clone());
            }
        }
    }
}

/// Renders an AST back to single-space-joined token text. With
/// `apply_repairs`, `Missing*` markers emit their separator and tokens
/// flagged by `ExtraPunctuation` are dropped.
pub fn unparse(ast: &Ast, apply_repairs: bool) -> Result<String, SerialError> {
    let toks = unparse_tokens(std::slice::from_ref(ast), apply_repairs)?;
    Ok(toks.iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join(" "))
}

/// Token-level unparse over a forest.
pub fn unparse_tokens(forest: &[Ast], apply_repairs: bool) -> Result<Vec<Token>, SerialError> {
    let mut out = Vec::new();
    for ast in forest {
        collect(ast, apply_repairs, &mut out)?;
    }
    for (i, t) in out.iter_mut().enumerate() {
        t.index = i;
    }
    Ok(out)
}

fn collect(ast: &Ast, apply_repairs: bool, out: &mut Vec<Token>) -> Result<(), SerialError> {
    match ast {
        Ast::Node { children, .. } => {
            for c in children {
                collect(c, apply_repairs, out)?;
            }
        }
        Ast::Leaf { token, .. } => match token {
            Some(t) => out.push(t.clone()),
            None => return Err(SerialError::UnboundLeaf),
        },
        Ast::Marker { marker, token } => match marker {
            ErrorMarker::ExtraPunctuation => {
                if !apply_repairs {
                    match token {
                        Some(t) => out.push(t.clone()),
                        None => return Err(SerialError::UnboundLeaf),
                    }
                }
            }
            m => {
                if apply_repairs {
                    let sep = m.separator().expect("missing-marker separator");
                    out.push(Token::new(sep, TokenKind::Separator, 0));
                }
            }
        },
    }
    Ok(())
}
