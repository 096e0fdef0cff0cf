//! Declared-type derivation: lexically scoped resolution binding every
//! identifier occurrence to its declared type, with the sentinel `unknown`
//! for occurrences that are not variable uses (type names, method names,
//! unresolved references).

use std::collections::HashMap;

use crate::ast::{Ast, Label};

pub const UNKNOWN_TYPE: &str = "unknown";
pub const NO_TYPE_TAG: &str = "~";

/// Fixed built-in package map for reference-type qualification.
pub const PACKAGE_MAP: [(&str, &str); 28] = [
    ("Object", "java.lang"),
    ("String", "java.lang"),
    ("Integer", "java.lang"),
    ("Double", "java.lang"),
    ("Boolean", "java.lang"),
    ("Character", "java.lang"),
    ("Long", "java.lang"),
    ("Short", "java.lang"),
    ("Byte", "java.lang"),
    ("Float", "java.lang"),
    ("Math", "java.lang"),
    ("System", "java.lang"),
    ("Exception", "java.lang"),
    ("Override", "java.lang"),
    ("StringBuilder", "java.lang"),
    ("Thread", "java.lang"),
    ("List", "java.util"),
    ("ArrayList", "java.util"),
    ("Map", "java.util"),
    ("HashMap", "java.util"),
    ("Set", "java.util"),
    ("HashSet", "java.util"),
    ("LinkedList", "java.util"),
    ("Iterator", "java.util"),
    ("Scanner", "java.util"),
    ("Random", "java.util"),
    ("Arrays", "java.util"),
    ("File", "java.io"),
];

/// One binding per identifier occurrence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeBinding {
    pub identifier_index: usize,
    pub type_name: String,
}

/// Qualifies a bare reference-type name through the package map; primitives
/// and unmapped (user-defined) names stay bare.
pub fn qualify(name: &str) -> String {
    for (bare, pkg) in PACKAGE_MAP {
        if bare == name {
            return format!("{pkg}.{name}");
        }
    }
    name.to_string()
}

/// Renders the declared type of a declaration's type node. Generics erase to
/// the base type; arrays append `[]`.
fn type_string(ty: &Ast) -> String {
    match ty {
        Ast::Leaf { label: Label::PrimitiveType, token } => {
            token.as_ref().map(|t| t.text.clone()).unwrap_or_default()
        }
        Ast::Node { label: Label::SimpleType, children } => {
            // Qualified type names are already explicit; bare ones map.
            let names: Vec<&str> = children
                .iter()
                .filter_map(|c| match c {
                    Ast::Leaf { label: Label::SimpleName, token: Some(t) } => {
                        Some(t.text.as_str())
                    }
                    _ => None,
                })
                .collect();
            if names.len() == 1 {
                qualify(names[0])
            } else {
                names.join(".")
            }
        }
        Ast::Node { label: Label::ParameterizedType, children } => type_string(&children[0]),
        Ast::Node { label: Label::ArrayType, children } => format!("{}[]", type_string(&children[0])),
        _ => UNKNOWN_TYPE.to_string(),
    }
}

struct Scope {
    vars: HashMap<String, String>,
}

struct Resolver {
    scopes: Vec<Scope>,
    class_depth: Vec<usize>,
    bindings: Vec<TypeBinding>,
}

/// Derives one binding per identifier occurrence in an error-free file AST.
pub fn derive_types(file_ast: &Ast) -> Vec<TypeBinding> {
    let mut r = Resolver { scopes: Vec::new(), class_depth: Vec::new(), bindings: Vec::new() };
    r.walk(file_ast);
    r.bindings.sort_by_key(|b| b.identifier_index);
    r.bindings
}

/// Renders bindings as one tag per token: the declared type at identifier
/// positions that resolved, `~` everywhere else.
pub fn tag_sequence(bindings: &[TypeBinding], token_count: usize) -> Vec<String> {
    let mut tags = vec![NO_TYPE_TAG.to_string(); token_count];
    for b in bindings {
        if b.type_name != UNKNOWN_TYPE && b.identifier_index < token_count {
            tags[b.identifier_index] = b.type_name.clone();
        }
    }
    tags
}

impl Resolver {
    fn push(&mut self) {
        self.scopes.push(Scope { vars: HashMap::new() });
    }

    fn pop(&mut self) {
        self.scopes.pop();
    }

    fn declare(&mut self, name: &str, ty: String) {
        if let Some(s) = self.scopes.last_mut() {
            s.vars.insert(name.to_string(), ty);
        }
    }

    fn resolve(&self, name: &str) -> Option<String> {
        self.scopes.iter().rev().find_map(|s| s.vars.get(name).cloned())
    }

    fn resolve_field(&self, name: &str) -> Option<String> {
        let depth = *self.class_depth.last()?;
        self.scopes.get(depth).and_then(|s| s.vars.get(name).cloned())
    }

    fn bind(&mut self, ast: &Ast, ty: Option<String>) {
        if let Ast::Leaf { label: Label::SimpleName, token: Some(t) } = ast {
            self.bindings.push(TypeBinding {
                identifier_index: t.index,
                type_name: ty.unwrap_or_else(|| UNKNOWN_TYPE.to_string()),
            });
        }
    }

    /// Records `unknown` for every identifier in a subtree (type mentions,
    /// import paths, method names).
    fn bind_all_unknown(&mut self, ast: &Ast) {
        match ast {
            Ast::Leaf { label: Label::SimpleName, .. } => self.bind(ast, None),
            Ast::Node { children, .. } => {
                for c in children {
                    self.bind_all_unknown(c);
                }
            }
            _ => {}
        }
    }

    fn walk(&mut self, ast: &Ast) {
        match ast {
            Ast::Node { label: Label::CompilationUnit, children } => {
                self.push();
                for c in children {
                    self.walk(c);
                }
                self.pop();
            }
            Ast::Node { label: Label::ImportDeclaration, children } => {
                for c in children {
                    self.bind_all_unknown(c);
                }
            }
            Ast::Node { label: Label::TypeDeclaration, children } => {
                self.push();
                self.class_depth.push(self.scopes.len() - 1);
                // Fields are visible throughout the class, before their
                // declaration line included.
                for m in children {
                    if let Ast::Node { label: Label::FieldDeclaration, children: fc } = m {
                        self.predeclare_fragments(fc);
                    }
                }
                for c in children {
                    match c {
                        Ast::Node { .. } => self.walk(c),
                        _ => self.bind_all_unknown(c),
                    }
                }
                self.class_depth.pop();
                self.pop();
            }
            Ast::Node { label: Label::FieldDeclaration, children }
            | Ast::Node { label: Label::VariableDeclarationStatement, children }
            | Ast::Node { label: Label::VariableDeclarationExpression, children } => {
                self.walk_declaration(children, ast.label() != Some(Label::FieldDeclaration));
            }
            Ast::Node { label: Label::MethodDeclaration, children } => {
                self.push();
                for c in children {
                    match c {
                        Ast::Node { label: Label::SingleVariableDeclaration, children: pc } => {
                            let ty = type_string(&pc[0]);
                            self.bind_all_unknown(&pc[0]);
                            // Parameter name, possibly with C-style brackets.
                            let extra_brackets =
                                pc.iter().filter(|c| c.label() == Some(Label::PunctTerminal)).count()
                                    / 2;
                            let full_ty =
                                format!("{}{}", ty, "[]".repeat(extra_brackets));
                            self.declare(name_of(&pc[1]), full_ty.clone());
                            self.bind(&pc[1], Some(full_ty));
                        }
                        Ast::Node { label: Label::Block, .. } => self.walk(c),
                        Ast::Node { .. } => self.bind_all_unknown(c),
                        Ast::Leaf { label: Label::SimpleName, .. } => self.bind(c, None),
                        _ => {}
                    }
                }
                self.pop();
            }
            Ast::Node { label: Label::Block, children } => {
                self.push();
                for c in children {
                    self.walk(c);
                }
                self.pop();
            }
            Ast::Node { label: Label::ForStatement, children } => {
                self.push();
                for c in children {
                    self.walk(c);
                }
                self.pop();
            }
            Ast::Node { label: Label::MethodInvocation, children } => {
                // children: [receiver, '.',]? name '(' args ')'
                let name_pos = children
                    .iter()
                    .position(|c| c.label() == Some(Label::PunctTerminal) && text_of(c) == "(")
                    .map(|p| p - 1)
                    .unwrap_or(0);
                for (i, c) in children.iter().enumerate() {
                    if i == name_pos {
                        self.bind(c, None);
                    } else {
                        self.walk(c);
                    }
                }
            }
            Ast::Node { label: Label::QualifiedName, children } => {
                // First name is a variable use; `this.x` resolves as a field;
                // deeper member names are unresolvable without full typing.
                match children.first() {
                    Some(first @ Ast::Leaf { label: Label::SimpleName, token: Some(t) }) => {
                        let ty = self.resolve(&t.text);
                        self.bind(first, ty);
                    }
                    Some(Ast::Leaf { label: Label::ThisExpression, .. }) => {
                        if let Some(field @ Ast::Leaf { label: Label::SimpleName, token: Some(t) }) =
                            children.get(2)
                        {
                            let ty = self.resolve_field(&t.text);
                            self.bind(field, ty);
                        }
                        for c in children.iter().skip(3) {
                            self.bind_all_unknown(c);
                        }
                        return;
                    }
                    Some(other) => self.walk(other),
                    None => {}
                }
                for c in children.iter().skip(1) {
                    self.bind_all_unknown(c);
                }
            }
            Ast::Node {
                label: Label::ClassInstanceCreation | Label::ArrayCreation, children, ..
            } => {
                // children: 'new' type '(' args ')' — the type is not a use.
                for (i, c) in children.iter().enumerate() {
                    if i == 1 {
                        self.bind_all_unknown(c);
                    } else {
                        self.walk(c);
                    }
                }
            }
            Ast::Leaf { label: Label::SimpleName, token: Some(t) } => {
                let ty = self.resolve(&t.text.clone());
                self.bind(ast, ty);
            }
            Ast::Node { children, .. } => {
                for c in children {
                    self.walk(c);
                }
            }
            _ => {}
        }
    }

    /// `modifier* type frag (, frag)* ;` — binds fragment names at
    /// declaration point.
    fn walk_declaration(&mut self, children: &[Ast], _local: bool) {
        let ty_idx = children
            .iter()
            .position(|c| c.label() != Some(Label::Modifier))
            .unwrap_or(0);
        let ty = type_string(&children[ty_idx]);
        self.bind_all_unknown(&children[ty_idx]);
        for c in children.iter().skip(ty_idx + 1) {
            if let Ast::Node { label: Label::VariableDeclarationFragment, children: fc } = c {
                let extra_brackets = fc
                    .iter()
                    .take_while(|n| n.label() != Some(Label::PunctTerminal) || text_of(n) != "=")
                    .filter(|n| n.label() == Some(Label::PunctTerminal))
                    .count()
                    / 2;
                let full_ty = format!("{}{}", ty, "[]".repeat(extra_brackets));
                self.declare(name_of(&fc[0]), full_ty.clone());
                self.bind(&fc[0], Some(full_ty));
                // Initializer sees the declaration (matches Java).
                if let Some(eq) = fc
                    .iter()
                    .position(|n| n.label() == Some(Label::PunctTerminal) && text_of(n) == "=")
                {
                    for init in &fc[eq + 1..] {
                        self.walk(init);
                    }
                }
            }
        }
    }

    fn predeclare_fragments(&mut self, children: &[Ast]) {
        let ty_idx = children
            .iter()
            .position(|c| c.label() != Some(Label::Modifier))
            .unwrap_or(0);
        let ty = type_string(&children[ty_idx]);
        for c in children.iter().skip(ty_idx + 1) {
            if let Ast::Node { label: Label::VariableDeclarationFragment, children: fc } = c {
                let extra_brackets = fc
                    .iter()
                    .take_while(|n| n.label() != Some(Label::PunctTerminal) || text_of(n) != "=")
                    .filter(|n| n.label() == Some(Label::PunctTerminal))
                    .count()
                    / 2;
                self.declare(name_of(&fc[0]), format!("{}{}", ty, "[]".repeat(extra_brackets)));
            }
        }
    }
}

fn name_of(ast: &Ast) -> &str {
    match ast {
        Ast::Leaf { token: Some(t), .. } => &t.text,
        _ => "",
    }
}

fn text_of(ast: &Ast) -> &str {
    name_of(ast)
}
