//! Strict recursive-descent parser for the Mini-Java subset.
//!
//! Every source token becomes a leaf of the AST (keywords and punctuation
//! included), so an in-order walk of the leaves reproduces the token
//! sequence exactly. This is what lets serialized trees be re-token-ized by
//! position later.

use crate::ast::{Ast, Label};
use crate::error::SyntaxError;
use crate::token::{is_modifier, is_primitive_type, Token, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseMode {
    /// A whole compilation unit: imports then class declarations.
    File,
    /// A sequence of class-body members (fields, methods, constructors).
    ClassBody,
    /// A sequence of statements.
    MethodBody,
}

const MAX_DEPTH: usize = 200;

/// Strict parse. The returned root is a `CompilationUnit` node whose
/// children are the mode's items; it contains no error markers.
pub fn parse(tokens: &[Token], mode: ParseMode) -> Result<Ast, SyntaxError> {
    let mut p = Parser { tokens, pos: 0, depth: 0 };
    let mut items = Vec::new();
    match mode {
        ParseMode::File => {
            while p.peek_text() == Some("import") {
                items.push(p.import_decl()?);
            }
            while !p.at_end() {
                items.push(p.type_decl()?);
            }
        }
        ParseMode::ClassBody => {
            while !p.at_end() {
                items.push(p.member()?);
            }
        }
        ParseMode::MethodBody => {
            while !p.at_end() {
                items.push(p.statement()?);
            }
        }
    }
    Ok(Ast::node(Label::CompilationUnit, items))
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    depth: usize,
}

type PResult = Result<Ast, SyntaxError>;

impl<'a> Parser<'a> {
    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, offset: usize) -> Option<&'a Token> {
        self.tokens.get(self.pos + offset)
    }

    fn peek_text(&self) -> Option<&'a str> {
        self.peek().map(|t| t.text.as_str())
    }

    fn err(&self, expected: impl Into<String>) -> SyntaxError {
        SyntaxError { position: self.pos, expected: expected.into() }
    }

    fn enter(&mut self) -> Result<(), SyntaxError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            Err(self.err("shallower nesting"))
        } else {
            Ok(())
        }
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    fn bump(&mut self, label: Label) -> Ast {
        let t = self.tokens[self.pos].clone();
        self.pos += 1;
        Ast::leaf(label, t)
    }

    fn expect_text(&mut self, text: &str, label: Label) -> PResult {
        match self.peek() {
            Some(t) if t.text == text => Ok(self.bump(label)),
            _ => Err(self.err(format!("`{text}`"))),
        }
    }

    fn expect_identifier(&mut self) -> PResult {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => Ok(self.bump(Label::SimpleName)),
            _ => Err(self.err("identifier")),
        }
    }

    fn at_text(&self, text: &str) -> bool {
        self.peek_text() == Some(text)
    }

    // ---- declarations -----------------------------------------------------

    fn import_decl(&mut self) -> PResult {
        let mut children = vec![self.expect_text("import", Label::KeywordTerminal)?];
        children.push(self.expect_identifier()?);
        while self.at_text(".") {
            children.push(self.bump(Label::PunctTerminal));
            children.push(self.expect_identifier()?);
        }
        children.push(self.expect_text(";", Label::PunctTerminal)?);
        Ok(Ast::node(Label::ImportDeclaration, children))
    }

    fn type_decl(&mut self) -> PResult {
        self.enter()?;
        let mut children = Vec::new();
        while self.peek().is_some_and(|t| is_modifier(&t.text)) {
            children.push(self.bump(Label::Modifier));
        }
        children.push(self.expect_text("class", Label::KeywordTerminal)?);
        children.push(self.expect_identifier()?);
        if self.at_text("extends") {
            children.push(self.bump(Label::KeywordTerminal));
            children.push(self.type_ref()?);
        }
        children.push(self.expect_text("{", Label::PunctTerminal)?);
        while !self.at_end() && !self.at_text("}") {
            children.push(self.member()?);
        }
        children.push(self.expect_text("}", Label::PunctTerminal)?);
        self.leave();
        Ok(Ast::node(Label::TypeDeclaration, children))
    }

    fn member(&mut self) -> PResult {
        self.enter()?;
        let mut children = Vec::new();
        while self.peek().is_some_and(|t| is_modifier(&t.text)) {
            children.push(self.bump(Label::Modifier));
        }
        // Constructor: identifier immediately followed by `(`.
        let is_ctor = self.peek().is_some_and(|t| t.kind == TokenKind::Identifier)
            && self.peek_at(1).is_some_and(|t| t.text == "(");
        let result = if is_ctor {
            children.push(self.expect_identifier()?);
            self.method_tail(children)
        } else {
            let ty = self.type_ref()?;
            children.push(ty);
            children.push(self.expect_identifier()?);
            if self.at_text("(") {
                self.method_tail(children)
            } else {
                self.field_tail(children)
            }
        };
        self.leave();
        result
    }

    /// Parses `( params ) { body }` after the name; `children` already holds
    /// modifiers, the optional return type, and the name.
    fn method_tail(&mut self, mut children: Vec<Ast>) -> PResult {
        children.push(self.expect_text("(", Label::PunctTerminal)?);
        if !self.at_text(")") {
            children.push(self.parameter()?);
            while self.at_text(",") {
                children.push(self.bump(Label::PunctTerminal));
                children.push(self.parameter()?);
            }
        }
        children.push(self.expect_text(")", Label::PunctTerminal)?);
        children.push(self.block()?);
        Ok(Ast::node(Label::MethodDeclaration, children))
    }

    /// Remaining fragments of a field declaration; `children` holds the
    /// modifiers, the type and the first fragment's name.
    fn field_tail(&mut self, mut children: Vec<Ast>) -> PResult {
        let name = children.pop().expect("field name");
        children.push(self.fragment_tail(name)?);
        while self.at_text(",") {
            children.push(self.bump(Label::PunctTerminal));
            let name = self.expect_identifier()?;
            children.push(self.fragment_tail(name)?);
        }
        children.push(self.expect_text(";", Label::PunctTerminal)?);
        Ok(Ast::node(Label::FieldDeclaration, children))
    }

    fn parameter(&mut self) -> PResult {
        let mut children = vec![self.type_ref()?, self.expect_identifier()?];
        while self.at_text("[") {
            children.push(self.bump(Label::PunctTerminal));
            children.push(self.expect_text("]", Label::PunctTerminal)?);
        }
        Ok(Ast::node(Label::SingleVariableDeclaration, children))
    }

    /// `name ([ ])* (= initializer)?`
    fn fragment_tail(&mut self, name: Ast) -> PResult {
        let mut children = vec![name];
        while self.at_text("[") && self.peek_at(1).is_some_and(|t| t.text == "]") {
            children.push(self.bump(Label::PunctTerminal));
            children.push(self.bump(Label::PunctTerminal));
        }
        if self.at_text("=") {
            children.push(self.bump(Label::PunctTerminal));
            if self.at_text("{") {
                children.push(self.array_initializer()?);
            } else {
                children.push(self.expression()?);
            }
        }
        Ok(Ast::node(Label::VariableDeclarationFragment, children))
    }

    // ---- statements -------------------------------------------------------

    fn block(&mut self) -> PResult {
        self.enter()?;
        let mut children = vec![self.expect_text("{", Label::PunctTerminal)?];
        while !self.at_end() && !self.at_text("}") {
            children.push(self.statement()?);
        }
        children.push(self.expect_text("}", Label::PunctTerminal)?);
        self.leave();
        Ok(Ast::node(Label::Block, children))
    }

    fn statement(&mut self) -> PResult {
        self.enter()?;
        let result = match self.peek_text() {
            Some("{") => self.block(),
            Some("if") => self.if_statement(),
            Some("for") => self.for_statement(),
            Some("while") => self.while_statement(),
            Some("switch") => self.switch_statement(),
            Some("break") => {
                let kw = self.bump(Label::KeywordTerminal);
                let semi = self.expect_text(";", Label::PunctTerminal)?;
                Ok(Ast::node(Label::BreakStatement, vec![kw, semi]))
            }
            Some("return") => {
                let mut children = vec![self.bump(Label::KeywordTerminal)];
                if !self.at_text(";") {
                    children.push(self.expression()?);
                }
                children.push(self.expect_text(";", Label::PunctTerminal)?);
                Ok(Ast::node(Label::ReturnStatement, children))
            }
            Some("super") if self.peek_at(1).is_some_and(|t| t.text == "(") => {
                let mut children = vec![self.bump(Label::KeywordTerminal)];
                children.push(self.bump(Label::PunctTerminal));
                self.arguments(&mut children)?;
                children.push(self.expect_text(")", Label::PunctTerminal)?);
                children.push(self.expect_text(";", Label::PunctTerminal)?);
                Ok(Ast::node(Label::SuperConstructorInvocation, children))
            }
            Some(_) if self.at_local_decl() => {
                let mut children = self.decl_fragments()?;
                children.push(self.expect_text(";", Label::PunctTerminal)?);
                Ok(Ast::node(Label::VariableDeclarationStatement, children))
            }
            Some(_) => {
                let expr = self.expression()?;
                let semi = self.expect_text(";", Label::PunctTerminal)?;
                Ok(Ast::node(Label::ExpressionStatement, vec![expr, semi]))
            }
            None => Err(self.err("statement")),
        };
        self.leave();
        result
    }

    /// `type frag (, frag)*` — shared by locals and for-init.
    fn decl_fragments(&mut self) -> Result<Vec<Ast>, SyntaxError> {
        let mut children = vec![self.type_ref()?];
        let name = self.expect_identifier()?;
        children.push(self.fragment_tail(name)?);
        while self.at_text(",") {
            children.push(self.bump(Label::PunctTerminal));
            let name = self.expect_identifier()?;
            children.push(self.fragment_tail(name)?);
        }
        Ok(children)
    }

    fn if_statement(&mut self) -> PResult {
        let mut children = vec![self.bump(Label::KeywordTerminal)];
        children.push(self.expect_text("(", Label::PunctTerminal)?);
        children.push(self.expression()?);
        children.push(self.expect_text(")", Label::PunctTerminal)?);
        children.push(self.statement()?);
        if self.at_text("else") {
            children.push(self.bump(Label::KeywordTerminal));
            children.push(self.statement()?);
        }
        Ok(Ast::node(Label::IfStatement, children))
    }

    fn for_statement(&mut self) -> PResult {
        let mut children = vec![self.bump(Label::KeywordTerminal)];
        children.push(self.expect_text("(", Label::PunctTerminal)?);
        if !self.at_text(";") {
            if self.at_local_decl() {
                let decl = self.decl_fragments()?;
                children.push(Ast::node(Label::VariableDeclarationExpression, decl));
            } else {
                children.push(self.expression()?);
                while self.at_text(",") {
                    children.push(self.bump(Label::PunctTerminal));
                    children.push(self.expression()?);
                }
            }
        }
        children.push(self.expect_text(";", Label::PunctTerminal)?);
        if !self.at_text(";") {
            children.push(self.expression()?);
        }
        children.push(self.expect_text(";", Label::PunctTerminal)?);
        if !self.at_text(")") {
            children.push(self.expression()?);
            while self.at_text(",") {
                children.push(self.bump(Label::PunctTerminal));
                children.push(self.expression()?);
            }
        }
        children.push(self.expect_text(")", Label::PunctTerminal)?);
        children.push(self.statement()?);
        Ok(Ast::node(Label::ForStatement, children))
    }

    fn while_statement(&mut self) -> PResult {
        let mut children = vec![self.bump(Label::KeywordTerminal)];
        children.push(self.expect_text("(", Label::PunctTerminal)?);
        children.push(self.expression()?);
        children.push(self.expect_text(")", Label::PunctTerminal)?);
        children.push(self.statement()?);
        Ok(Ast::node(Label::WhileStatement, children))
    }

    fn switch_statement(&mut self) -> PResult {
        let mut children = vec![self.bump(Label::KeywordTerminal)];
        children.push(self.expect_text("(", Label::PunctTerminal)?);
        children.push(self.expression()?);
        children.push(self.expect_text(")", Label::PunctTerminal)?);
        children.push(self.expect_text("{", Label::PunctTerminal)?);
        while !self.at_end() && !self.at_text("}") {
            children.push(self.switch_item()?);
        }
        children.push(self.expect_text("}", Label::PunctTerminal)?);
        Ok(Ast::node(Label::SwitchStatement, children))
    }

    /// Case labels and their statements are siblings inside the switch.
    fn switch_item(&mut self) -> PResult {
        match self.peek_text() {
            Some("case") => {
                let mut children = vec![self.bump(Label::KeywordTerminal)];
                children.push(self.expression()?);
                children.push(self.expect_text(":", Label::PunctTerminal)?);
                Ok(Ast::node(Label::SwitchCase, children))
            }
            Some("default") => {
                let kw = self.bump(Label::KeywordTerminal);
                let colon = self.expect_text(":", Label::PunctTerminal)?;
                Ok(Ast::node(Label::SwitchCase, vec![kw, colon]))
            }
            _ => self.statement(),
        }
    }

    // ---- lookahead --------------------------------------------------------

    /// Decides `T x ...` declaration vs. expression at statement start.
    fn at_local_decl(&self) -> bool {
        let Some(first) = self.peek() else { return false };
        if is_primitive_type(&first.text) {
            return true;
        }
        if first.kind != TokenKind::Identifier {
            return false;
        }
        // Scan: Name (. Name)* (< .. >)? ([ ])* Identifier
        let mut i = self.pos + 1;
        let at = |i: usize| self.tokens.get(i).map(|t: &Token| t.text.as_str());
        let kind_at = |i: usize| self.tokens.get(i).map(|t: &Token| t.kind);
        while at(i) == Some(".") && kind_at(i + 1) == Some(TokenKind::Identifier) {
            i += 2;
        }
        if at(i) == Some("<") {
            let mut depth = 1;
            i += 1;
            while depth > 0 {
                match at(i) {
                    Some("<") => depth += 1,
                    Some(">") => depth -= 1,
                    Some(",") | Some(".") => {}
                    _ if kind_at(i) == Some(TokenKind::Identifier)
                        || self.tokens.get(i).is_some_and(|t| is_primitive_type(&t.text)) => {}
                    _ => return false,
                }
                i += 1;
                if i > self.pos + 24 {
                    return false;
                }
            }
        }
        while at(i) == Some("[") && at(i + 1) == Some("]") {
            i += 2;
        }
        kind_at(i) == Some(TokenKind::Identifier)
    }

    // ---- types ------------------------------------------------------------

    fn type_ref(&mut self) -> PResult {
        let base = match self.peek() {
            Some(t) if is_primitive_type(&t.text) => self.bump(Label::PrimitiveType),
            Some(t) if t.kind == TokenKind::Identifier => {
                let mut names = vec![self.bump(Label::SimpleName)];
                while self.at_text(".")
                    && self.peek_at(1).is_some_and(|t| t.kind == TokenKind::Identifier)
                {
                    names.push(self.bump(Label::PunctTerminal));
                    names.push(self.bump(Label::SimpleName));
                }
                let simple = Ast::node(Label::SimpleType, names);
                if self.at_text("<") {
                    let mut children = vec![simple, self.bump(Label::PunctTerminal)];
                    children.push(self.type_ref()?);
                    while self.at_text(",") {
                        children.push(self.bump(Label::PunctTerminal));
                        children.push(self.type_ref()?);
                    }
                    children.push(self.expect_text(">", Label::PunctTerminal)?);
                    Ast::node(Label::ParameterizedType, children)
                } else {
                    simple
                }
            }
            _ => return Err(self.err("type")),
        };
        let mut ty = base;
        while self.at_text("[") && self.peek_at(1).is_some_and(|t| t.text == "]") {
            let open = self.bump(Label::PunctTerminal);
            let close = self.bump(Label::PunctTerminal);
            ty = Ast::node(Label::ArrayType, vec![ty, open, close]);
        }
        Ok(ty)
    }

    // ---- expressions ------------------------------------------------------

    fn expression(&mut self) -> PResult {
        self.enter()?;
        let result = self.assignment();
        self.leave();
        result
    }

    fn assignment(&mut self) -> PResult {
        let lhs = self.infix(0)?;
        if self.at_text("=") {
            let eq = self.bump(Label::PunctTerminal);
            let rhs = self.assignment()?;
            return Ok(Ast::node(Label::Assignment, vec![lhs, eq, rhs]));
        }
        Ok(lhs)
    }

    /// Precedence-climbing over the binary operator tiers; left-associative
    /// chains nest to the left.
    fn infix(&mut self, tier: usize) -> PResult {
        const TIERS: [&[&str]; 6] =
            [&["||"], &["&&"], &["==", "!="], &["<", ">", "<=", ">="], &["+", "-"], &["*", "/", "%"]];
        if tier == TIERS.len() {
            return self.unary();
        }
        let mut left = self.infix(tier + 1)?;
        while self.peek().is_some_and(|t| TIERS[tier].contains(&t.text.as_str())) {
            let op = self.bump(Label::PunctTerminal);
            let right = self.infix(tier + 1)?;
            left = Ast::node(Label::InfixExpression, vec![left, op, right]);
        }
        Ok(left)
    }

    fn unary(&mut self) -> PResult {
        if self.at_text("-") || self.at_text("!") {
            self.enter()?;
            let op = self.bump(Label::PunctTerminal);
            let operand = self.unary()?;
            self.leave();
            return Ok(Ast::node(Label::PrefixExpression, vec![op, operand]));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult {
        let mut expr = self.primary()?;
        loop {
            if self.at_text(".") && self.peek_at(1).is_some_and(|t| t.kind == TokenKind::Identifier)
            {
                let dot = self.bump(Label::PunctTerminal);
                let name = self.bump(Label::SimpleName);
                if self.at_text("(") {
                    let mut children = vec![expr, dot, name, self.bump(Label::PunctTerminal)];
                    self.arguments(&mut children)?;
                    children.push(self.expect_text(")", Label::PunctTerminal)?);
                    expr = Ast::node(Label::MethodInvocation, children);
                } else if matches!(
                    expr,
                    Ast::Leaf { label: Label::SimpleName, .. }
                        | Ast::Node { label: Label::QualifiedName, .. }
                ) {
                    // Flat qualified name: a.b.c
                    if let Ast::Node { label: Label::QualifiedName, mut children } = expr {
                        children.push(dot);
                        children.push(name);
                        expr = Ast::node(Label::QualifiedName, children);
                    } else {
                        expr = Ast::node(Label::QualifiedName, vec![expr, dot, name]);
                    }
                } else {
                    expr = Ast::node(Label::QualifiedName, vec![expr, dot, name]);
                }
            } else if self.at_text("[") {
                let open = self.bump(Label::PunctTerminal);
                let index = self.expression()?;
                let close = self.expect_text("]", Label::PunctTerminal)?;
                expr = Ast::node(Label::ArrayAccess, vec![expr, open, index, close]);
            } else if self.at_text("++") || self.at_text("--") {
                let op = self.bump(Label::PunctTerminal);
                expr = Ast::node(Label::PostfixExpression, vec![expr, op]);
            } else {
                return Ok(expr);
            }
        }
    }

    fn primary(&mut self) -> PResult {
        let Some(t) = self.peek() else { return Err(self.err("expression")) };
        match (t.kind, t.text.as_str()) {
            (TokenKind::NumberLiteral, _) => Ok(self.bump(Label::NumberLiteral)),
            (TokenKind::StringLiteral, _) => Ok(self.bump(Label::StringLiteral)),
            (TokenKind::CharLiteral, _) => Ok(self.bump(Label::CharacterLiteral)),
            (_, "true") | (_, "false") => Ok(self.bump(Label::BooleanLiteral)),
            (_, "null") => Ok(self.bump(Label::NullLiteral)),
            (_, "this") => Ok(self.bump(Label::ThisExpression)),
            (_, "(") => {
                let open = self.bump(Label::PunctTerminal);
                let inner = self.expression()?;
                let close = self.expect_text(")", Label::PunctTerminal)?;
                Ok(Ast::node(Label::ParenthesizedExpression, vec![open, inner, close]))
            }
            (_, "new") => self.creation(),
            (TokenKind::Identifier, _) => {
                let name = self.bump(Label::SimpleName);
                if self.at_text("(") {
                    let mut children = vec![name, self.bump(Label::PunctTerminal)];
                    self.arguments(&mut children)?;
                    children.push(self.expect_text(")", Label::PunctTerminal)?);
                    Ok(Ast::node(Label::MethodInvocation, children))
                } else {
                    Ok(name)
                }
            }
            _ => Err(self.err("expression")),
        }
    }

    fn creation(&mut self) -> PResult {
        let kw = self.bump(Label::KeywordTerminal);
        let base = match self.peek() {
            Some(t) if is_primitive_type(&t.text) => self.bump(Label::PrimitiveType),
            Some(t) if t.kind == TokenKind::Identifier => {
                let mut names = vec![self.bump(Label::SimpleName)];
                while self.at_text(".")
                    && self.peek_at(1).is_some_and(|t| t.kind == TokenKind::Identifier)
                {
                    names.push(self.bump(Label::PunctTerminal));
                    names.push(self.bump(Label::SimpleName));
                }
                let simple = Ast::node(Label::SimpleType, names);
                if self.at_text("<") {
                    let mut children = vec![simple, self.bump(Label::PunctTerminal)];
                    children.push(self.type_ref()?);
                    while self.at_text(",") {
                        children.push(self.bump(Label::PunctTerminal));
                        children.push(self.type_ref()?);
                    }
                    children.push(self.expect_text(">", Label::PunctTerminal)?);
                    Ast::node(Label::ParameterizedType, children)
                } else {
                    simple
                }
            }
            _ => return Err(self.err("type")),
        };
        if self.at_text("[") {
            let mut children = vec![kw, base, self.bump(Label::PunctTerminal)];
            if !self.at_text("]") {
                children.push(self.expression()?);
            }
            children.push(self.expect_text("]", Label::PunctTerminal)?);
            if self.at_text("{") {
                children.push(self.array_initializer()?);
            }
            Ok(Ast::node(Label::ArrayCreation, children))
        } else {
            let mut children = vec![kw, base, self.expect_text("(", Label::PunctTerminal)?];
            self.arguments(&mut children)?;
            children.push(self.expect_text(")", Label::PunctTerminal)?);
            Ok(Ast::node(Label::ClassInstanceCreation, children))
        }
    }

    fn array_initializer(&mut self) -> PResult {
        self.enter()?;
        let mut children = vec![self.expect_text("{", Label::PunctTerminal)?];
        if !self.at_text("}") {
            children.push(self.expression()?);
            while self.at_text(",") {
                children.push(self.bump(Label::PunctTerminal));
                children.push(self.expression()?);
            }
        }
        children.push(self.expect_text("}", Label::PunctTerminal)?);
        self.leave();
        Ok(Ast::node(Label::ArrayInitializer, children))
    }

    fn arguments(&mut self, children: &mut Vec<Ast>) -> Result<(), SyntaxError> {
        if self.at_text(")") {
            return Ok(());
        }
        children.push(self.expression()?);
        while self.at_text(",") {
            children.push(self.bump(Label::PunctTerminal));
            children.push(self.expression()?);
        }
        Ok(())
    }
}
