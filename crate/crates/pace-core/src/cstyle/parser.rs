//! Java parsing and tree normalization.
//!
//! Grammar node kinds are normalized before taxonomy matching so that the
//! counted constructs are stable properties of the language rather than
//! artifacts of one grammar's shape:
//!
//! - a `block` is renamed `block_statement` only in statement position
//!   (method, constructor, lambda, try, catch, finally, synchronized and
//!   static-initializer bodies are structural blocks, not statements);
//! - every loop gets a synthetic control node: `for_control` grouping the
//!   init/condition/update clauses of a classic `for`, `enhanced_for_control`
//!   for the variable and iterable of a for-each (one loop therefore yields
//!   one statement node and one control node);
//! - the for-each loop variable becomes a synthetic `variable_declaration`,
//!   and header declarations (classic-for init, try resources) are renamed
//!   from `local_variable_declaration` to `variable_declaration`, keeping
//!   `local_variable_declaration` for declaration statements only;
//! - `super`-qualified invocations, field accesses and constructor calls are
//!   split out as `super_method_invocation`, `super_member_reference` and
//!   `super_constructor_invocation`.

use std::fmt;
use std::path::{Path, PathBuf};

use super::CstyleError;

/// One node of a normalized syntax tree. Only named grammar nodes and the
/// synthetic nodes described in the module docs are kept.
#[derive(Debug, Clone)]
pub struct SyntaxNode {
    pub kind: String,
    pub children: Vec<SyntaxNode>,
}

/// Normalized syntax tree for one source file.
#[derive(Debug, Clone)]
pub struct SyntaxTree {
    pub root: SyntaxNode,
    /// True when the file was not valid UTF-8 and was decoded lossily.
    pub lossy_utf8: bool,
}

impl SyntaxTree {
    /// Visits every node in preorder.
    pub fn preorder<'a>(&'a self) -> Preorder<'a> {
        Preorder { stack: vec![&self.root] }
    }
}

pub struct Preorder<'a> {
    stack: Vec<&'a SyntaxNode>,
}

impl<'a> Iterator for Preorder<'a> {
    type Item = &'a SyntaxNode;

    fn next(&mut self) -> Option<&'a SyntaxNode> {
        let node = self.stack.pop()?;
        for child in node.children.iter().rev() {
            self.stack.push(child);
        }
        Some(node)
    }
}

/// A file the grammar could not parse. This is a value the selection policy
/// decides what to do with, not an abort.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseFailure {
    pub path: PathBuf,
    /// 1-based line of the first error node.
    pub line: usize,
    /// 1-based column of the first error node.
    pub column: usize,
}

impl fmt::Display for ParseFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}: syntax error", self.path.display(), self.line, self.column)
    }
}

// parents under which a `block` is a statement rather than a body
const BLOCK_STATEMENT_PARENTS: &[&str] = &[
    "block",
    "constructor_body",
    "if_statement",
    "while_statement",
    "do_statement",
    "for_statement",
    "enhanced_for_statement",
    "labeled_statement",
    "switch_block_statement_group",
];

/// Parses one Java source file into a normalized tree.
pub fn parse_file(path: &Path) -> Result<Result<SyntaxTree, ParseFailure>, CstyleError> {
    let bytes = std::fs::read(path).map_err(|source| CstyleError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(parse_source_named(&bytes, path))
}

/// Parses in-memory source (used by tests and the per-file extraction path).
pub fn parse_source(bytes: &[u8]) -> Result<SyntaxTree, ParseFailure> {
    parse_source_named(bytes, Path::new("<memory>"))
}

fn parse_source_named(bytes: &[u8], path: &Path) -> Result<SyntaxTree, ParseFailure> {
    let (text, lossy_utf8) = match std::str::from_utf8(bytes) {
        Ok(s) => (s.to_string(), false),
        Err(_) => (String::from_utf8_lossy(bytes).into_owned(), true),
    };

    let mut parser = tree_sitter::Parser::new();
    parser
        .set_language(&tree_sitter_java::LANGUAGE.into())
        .expect("grammar and tree-sitter versions are pinned together");
    let tree = parser.parse(&text, None).ok_or(ParseFailure {
        path: path.to_path_buf(),
        line: 1,
        column: 1,
    })?;

    let root = tree.root_node();
    if root.has_error() {
        let (line, column) = first_error_position(root);
        return Err(ParseFailure {
            path: path.to_path_buf(),
            line,
            column,
        });
    }

    Ok(SyntaxTree {
        root: convert(root),
        lossy_utf8,
    })
}

fn first_error_position(root: tree_sitter::Node<'_>) -> (usize, usize) {
    let mut stack = vec![root];
    while let Some(node) = stack.pop() {
        if node.is_error() || node.is_missing() {
            let p = node.start_position();
            return (p.row + 1, p.column + 1);
        }
        let mut cursor = node.walk();
        let kids: Vec<_> = node.children(&mut cursor).collect();
        for child in kids.into_iter().rev() {
            if child.has_error() {
                stack.push(child);
            }
        }
    }
    let p = root.start_position();
    (p.row + 1, p.column + 1)
}

fn convert(node: tree_sitter::Node<'_>) -> SyntaxNode {
    match node.kind() {
        "for_statement" => convert_for(node),
        "enhanced_for_statement" => convert_enhanced_for(node),
        _ => SyntaxNode {
            kind: normalized_kind(node),
            children: named_children(node).into_iter().map(convert).collect(),
        },
    }
}

fn named_children(node: tree_sitter::Node<'_>) -> Vec<tree_sitter::Node<'_>> {
    let mut cursor = node.walk();
    node.named_children(&mut cursor).collect()
}

fn normalized_kind(node: tree_sitter::Node<'_>) -> String {
    let parent_kind = node.parent().map(|p| p.kind().to_string()).unwrap_or_default();
    let kind = match node.kind() {
        "block" if BLOCK_STATEMENT_PARENTS.contains(&parent_kind.as_str()) => "block_statement",
        "local_variable_declaration" if parent_kind == "for_statement" => "variable_declaration",
        // the declarator inside a varargs parameter is part of the
        // parameter, and parameters are not declarations here
        "variable_declarator" if parent_kind == "spread_parameter" => "spread_parameter_name",
        "resource" if node.child_by_field_name("name").is_some() => "variable_declaration",
        "method_invocation" if field_kind(node, "object") == Some("super") => {
            "super_method_invocation"
        }
        "field_access" if field_kind(node, "object") == Some("super") => "super_member_reference",
        "explicit_constructor_invocation" if field_kind(node, "constructor") == Some("super") => {
            "super_constructor_invocation"
        }
        other => other,
    };
    kind.to_string()
}

fn field_kind<'a>(node: tree_sitter::Node<'a>, field: &str) -> Option<&'a str> {
    node.child_by_field_name(field).map(|n| n.kind())
}

fn convert_for(node: tree_sitter::Node<'_>) -> SyntaxNode {
    let mut control_children = Vec::new();
    let mut rest = Vec::new();
    for i in 0..node.child_count() {
        let child = node.child(i).expect("child index in range");
        if !child.is_named() {
            continue;
        }
        match node.field_name_for_child(i as u32) {
            Some("init") | Some("condition") | Some("update") => {
                control_children.push(convert(child))
            }
            _ => rest.push(convert(child)),
        }
    }
    let control = SyntaxNode {
        kind: "for_control".to_string(),
        children: control_children,
    };
    let mut children = vec![control];
    children.extend(rest);
    SyntaxNode {
        kind: "for_statement".to_string(),
        children,
    }
}

fn convert_enhanced_for(node: tree_sitter::Node<'_>) -> SyntaxNode {
    let mut declared = Vec::new();
    let mut value = Vec::new();
    let mut rest = Vec::new();
    for i in 0..node.child_count() {
        let child = node.child(i).expect("child index in range");
        if !child.is_named() {
            continue;
        }
        match node.field_name_for_child(i as u32) {
            Some("type") | Some("name") | Some("dimensions") => declared.push(convert(child)),
            Some("value") => value.push(convert(child)),
            Some("body") => rest.push(convert(child)),
            // leading modifiers/annotations of the loop variable
            _ => declared.push(convert(child)),
        }
    }
    let variable = SyntaxNode {
        kind: "variable_declaration".to_string(),
        children: declared,
    };
    let mut control_children = vec![variable];
    control_children.extend(value);
    let control = SyntaxNode {
        kind: "enhanced_for_control".to_string(),
        children: control_children,
    };
    let mut children = vec![control];
    children.extend(rest);
    SyntaxNode {
        kind: "enhanced_for_statement".to_string(),
        children,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<String> {
        let tree = parse_source(src.as_bytes()).unwrap();
        tree.preorder().map(|n| n.kind.clone()).collect()
    }

    #[test]
    fn minimal_class() {
        let k = kinds("class A {}");
        assert!(k.contains(&"class_declaration".to_string()));
    }

    #[test]
    fn empty_source_parses() {
        let tree = parse_source(b"").unwrap();
        assert_eq!(tree.root.kind, "program");
        assert!(tree.root.children.is_empty());
    }

    #[test]
    fn malformed_source_reports_position() {
        let err = parse_source(b"class {").unwrap_err();
        assert_eq!(err.line, 1);
    }

    #[test]
    fn classic_for_gets_control_node() {
        let k = kinds("class A { void m() { for (int i = 0; i < 2; i++) {} } }");
        assert!(k.contains(&"for_statement".to_string()));
        assert!(k.contains(&"for_control".to_string()));
        assert!(k.contains(&"variable_declaration".to_string()));
        assert!(!k.contains(&"local_variable_declaration".to_string()));
    }

    #[test]
    fn enhanced_for_gets_control_and_variable() {
        let k = kinds("class A { void m(int[] xs) { for (int x : xs) {} } }");
        assert!(k.contains(&"enhanced_for_statement".to_string()));
        assert!(k.contains(&"enhanced_for_control".to_string()));
        assert!(k.contains(&"variable_declaration".to_string()));
    }

    #[test]
    fn control_precedes_body_in_preorder() {
        let tree =
            parse_source(b"class A { void m() { for (int i = 0; i < 2; i++) { m(); } } }").unwrap();
        let order: Vec<String> = tree.preorder().map(|n| n.kind.clone()).collect();
        let control = order.iter().position(|k| k == "for_control").unwrap();
        let body = order.iter().position(|k| k == "block_statement").unwrap();
        assert!(control < body);
    }

    #[test]
    fn method_body_is_not_a_statement_block() {
        let k = kinds("class A { void m() { { int x; } } }");
        // outer body stays `block`, inner braces are a statement
        assert_eq!(k.iter().filter(|s| *s == "block").count(), 1);
        assert_eq!(k.iter().filter(|s| *s == "block_statement").count(), 1);
    }

    #[test]
    fn super_qualified_constructs_are_split() {
        let src = r#"
            class A extends B {
                int f;
                A() { super(); }
                A(int unused) { this(); }
                void m() { super.g(); int x = super.f; }
            }
        "#;
        let k = kinds(src);
        assert!(k.contains(&"super_constructor_invocation".to_string()));
        assert!(k.contains(&"explicit_constructor_invocation".to_string()));
        assert!(k.contains(&"super_method_invocation".to_string()));
        assert!(k.contains(&"super_member_reference".to_string()));
    }

    #[test]
    fn lossy_utf8_is_flagged() {
        let tree = parse_source(b"class A { /* \xff */ }").unwrap();
        assert!(tree.lossy_utf8);
    }

    #[test]
    fn varargs_parameter_is_not_a_declarator() {
        let k = kinds("class A { void m(String... parts) { int x = parts.length; } }");
        assert_eq!(k.iter().filter(|s| *s == "variable_declarator").count(), 1);
        assert!(k.contains(&"spread_parameter_name".to_string()));
    }
}
