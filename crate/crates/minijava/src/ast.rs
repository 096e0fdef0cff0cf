//! Labeled AST with one leaf per source token, plus error-marker nodes.

use crate::token::Token;

macro_rules! labels {
    ($($name:ident),* $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Label {
            $($name,)*
        }

        impl Label {
            pub const ALL: &'static [Label] = &[$(Label::$name,)*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(Label::$name => stringify!($name),)*
                }
            }

            pub fn parse(s: &str) -> Option<Label> {
                match s {
                    $(stringify!($name) => Some(Label::$name),)*
                    _ => None,
                }
            }
        }
    };
}

labels! {
    CompilationUnit,
    ImportDeclaration,
    TypeDeclaration,
    FieldDeclaration,
    MethodDeclaration,
    SingleVariableDeclaration,
    Block,
    VariableDeclarationStatement,
    VariableDeclarationExpression,
    VariableDeclarationFragment,
    ExpressionStatement,
    IfStatement,
    ForStatement,
    WhileStatement,
    SwitchStatement,
    SwitchCase,
    BreakStatement,
    ReturnStatement,
    SuperConstructorInvocation,
    Assignment,
    MethodInvocation,
    ClassInstanceCreation,
    InfixExpression,
    PrefixExpression,
    PostfixExpression,
    ParenthesizedExpression,
    ArrayAccess,
    ArrayCreation,
    ArrayInitializer,
    QualifiedName,
    SimpleName,
    SimpleType,
    ParameterizedType,
    ArrayType,
    PrimitiveType,
    NumberLiteral,
    StringLiteral,
    CharacterLiteral,
    BooleanLiteral,
    NullLiteral,
    ThisExpression,
    Modifier,
    KeywordTerminal,
    PunctTerminal,
}

impl Label {
    /// Leaf labels consume exactly one source token on reinsertion.
    pub fn is_leaf(self) -> bool {
        matches!(
            self,
            Label::SimpleName
                | Label::PrimitiveType
                | Label::NumberLiteral
                | Label::StringLiteral
                | Label::CharacterLiteral
                | Label::BooleanLiteral
                | Label::NullLiteral
                | Label::ThisExpression
                | Label::Modifier
                | Label::KeywordTerminal
                | Label::PunctTerminal
        )
    }
}

macro_rules! markers {
    ($($name:ident => $sep:expr),* $(,)?) => {
        /// Error markers embedded in redeemed ASTs.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum ErrorMarker {
            $($name,)*
            ExtraPunctuation,
        }

        impl ErrorMarker {
            pub const ALL: &'static [ErrorMarker] =
                &[$(ErrorMarker::$name,)* ErrorMarker::ExtraPunctuation];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(ErrorMarker::$name => stringify!($name),)*
                    ErrorMarker::ExtraPunctuation => "ExtraPunctuation",
                }
            }

            pub fn parse(s: &str) -> Option<ErrorMarker> {
                match s {
                    $(stringify!($name) => Some(ErrorMarker::$name),)*
                    "ExtraPunctuation" => Some(ErrorMarker::ExtraPunctuation),
                    _ => None,
                }
            }

            /// The separator a `Missing*` marker stands for.
            pub fn separator(self) -> Option<&'static str> {
                match self {
                    $(ErrorMarker::$name => Some($sep),)*
                    ErrorMarker::ExtraPunctuation => None,
                }
            }

            pub fn for_separator(sep: &str) -> Option<ErrorMarker> {
                match sep {
                    $($sep => Some(ErrorMarker::$name),)*
                    _ => None,
                }
            }
        }
    };
}

markers! {
    MissingSemicolon => ";",
    MissingComma => ",",
    MissingDot => ".",
    MissingOpenParen => "(",
    MissingCloseParen => ")",
    MissingOpenCurly => "{",
    MissingCloseCurly => "}",
    MissingOpenBracket => "[",
    MissingCloseBracket => "]",
    MissingPlus => "+",
}

/// AST node. Leaves hold the source token they cover; marker nodes have
/// neither children nor a bound token (except `ExtraPunctuation`, which
/// consumes the spurious token it flags).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ast {
    Node { label: Label, children: Vec<Ast> },
    Leaf { label: Label, token: Option<Token> },
    Marker { marker: ErrorMarker, token: Option<Token> },
}

impl Ast {
    pub fn node(label: Label, children: Vec<Ast>) -> Ast {
        Ast::Node { label, children }
    }

    pub fn leaf(label: Label, token: Token) -> Ast {
        Ast::Leaf { label, token: Some(token) }
    }

    pub fn unbound_leaf(label: Label) -> Ast {
        Ast::Leaf { label, token: None }
    }

    pub fn marker(marker: ErrorMarker) -> Ast {
        Ast::Marker { marker, token: None }
    }

    pub fn label(&self) -> Option<Label> {
        match self {
            Ast::Node { label, .. } | Ast::Leaf { label, .. } => Some(*label),
            Ast::Marker { .. } => None,
        }
    }

    pub fn children(&self) -> &[Ast] {
        match self {
            Ast::Node { children, .. } => children,
            _ => &[],
        }
    }

    pub fn children_mut(&mut self) -> Option<&mut Vec<Ast>> {
        match self {
            Ast::Node { children, .. } => Some(children),
            _ => None,
        }
    }

    /// In-order leaf tokens, excluding repairs: `Missing*` markers contribute
    /// nothing, `ExtraPunctuation` contributes the spurious token it covers.
    pub fn leaf_tokens(&self) -> Vec<Token> {
        let mut out = Vec::new();
        self.collect_leaf_tokens(&mut out);
        out
    }

    fn collect_leaf_tokens(&self, out: &mut Vec<Token>) {
        match self {
            Ast::Node { children, .. } => {
                for c in children {
                    c.collect_leaf_tokens(out);
                }
            }
            Ast::Leaf { token, .. } => {
                if let Some(t) = token {
                    out.push(t.clone());
                }
            }
            Ast::Marker { token, .. } => {
                if let Some(t) = token {
                    out.push(t.clone());
                }
            }
        }
    }

    /// Number of leaf slots that consume an input token on reinsertion.
    pub fn token_arity(&self) -> usize {
        match self {
            Ast::Node { children, .. } => children.iter().map(Ast::token_arity).sum(),
            Ast::Leaf { .. } => 1,
            Ast::Marker { marker, .. } => {
                if *marker == ErrorMarker::ExtraPunctuation {
                    1
                } else {
                    0
                }
            }
        }
    }

    pub fn contains_marker(&self) -> bool {
        match self {
            Ast::Node { children, .. } => children.iter().any(Ast::contains_marker),
            Ast::Leaf { .. } => false,
            Ast::Marker { .. } => true,
        }
    }
}
