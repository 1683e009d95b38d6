//! Splitting a syntax tree into statement trees (STs).
//!
//! Every node whose label is in the configured statement set roots one ST.
//! An ST contains its root and all descendants except nested statement
//! subtrees, which form their own STs. STs are emitted in preorder of their
//! roots. Nodes above the outermost statements (module, class shells) belong
//! to no ST.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::tree::{RawNode, SyntaxTree};
use crate::corpus::Language;

/// Labels that root a statement tree.
///
/// Python defaults: every statement class of the `ast` module (`FunctionDef`,
/// `ClassDef`, `Return`, `Delete`, `Assign`, `AugAssign`, `AnnAssign`, `For`,
/// `While`, `If`, `With`, `Raise`, `Try`, `Assert`, `Import`, `ImportFrom`,
/// `Global`, `Nonlocal`, `Expr`, `Pass`, `Break`, `Continue`).
///
/// Java defaults: method and constructor headers, field declarations and every
/// statement label of the Java parser, including nested `BlockStatement`s.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatementLabels {
    labels: BTreeSet<String>,
}

const PYTHON_STATEMENTS: &[&str] = &[
    "FunctionDef",
    "ClassDef",
    "Return",
    "Delete",
    "Assign",
    "AugAssign",
    "AnnAssign",
    "For",
    "While",
    "If",
    "With",
    "Raise",
    "Try",
    "Assert",
    "Import",
    "ImportFrom",
    "Global",
    "Nonlocal",
    "Expr",
    "Pass",
    "Break",
    "Continue",
];

const JAVA_STATEMENTS: &[&str] = &[
    "MethodDeclaration",
    "ConstructorDeclaration",
    "FieldDeclaration",
    "LocalVariableDeclaration",
    "StatementExpression",
    "IfStatement",
    "WhileStatement",
    "DoStatement",
    "ForStatement",
    "ReturnStatement",
    "BreakStatement",
    "ContinueStatement",
    "ThrowStatement",
    "TryStatement",
    "SwitchStatement",
    "SynchronizedStatement",
    "AssertStatement",
    "BlockStatement",
    "EmptyStatement",
];

impl StatementLabels {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Self {
        StatementLabels {
            labels: labels.into_iter().map(Into::into).collect(),
        }
    }

    /// Default set for a language; C has none of its own and uses the Java set.
    pub fn for_language(language: Language) -> Self {
        match language {
            Language::Python => Self::new(PYTHON_STATEMENTS.iter().copied()),
            Language::Java | Language::C => Self::new(JAVA_STATEMENTS.iter().copied()),
        }
    }

    pub fn contains(&self, label: &str) -> bool {
        self.labels.contains(label)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.labels.iter().map(String::as_str)
    }
}

/// Splits `tree` into statement trees rooted at statement-labeled nodes.
///
/// A tree without statement nodes yields a single ST equal to the whole tree.
pub fn split_statements(tree: &SyntaxTree, labels: &StatementLabels) -> Vec<SyntaxTree> {
    let roots: Vec<usize> = tree
        .preorder()
        .into_iter()
        .filter(|&id| labels.contains(&tree.node(id).label))
        .collect();
    if roots.is_empty() {
        return vec![tree.clone()];
    }
    roots
        .into_iter()
        .map(|id| SyntaxTree::from_raw(pruned(tree, id, labels)))
        .collect()
}

fn pruned(tree: &SyntaxTree, id: usize, labels: &StatementLabels) -> RawNode {
    let node = tree.node(id);
    let mut raw = RawNode {
        label: node.label.clone(),
        token_text: node.token_text.clone(),
        children: Vec::new(),
    };
    for &child in &node.children {
        if !labels.contains(&tree.node(child).label) {
            raw.push(pruned(tree, child, labels));
        }
    }
    raw
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_source;

    fn java(src: &str) -> (SyntaxTree, Vec<SyntaxTree>) {
        let tree = parse_source(Language::Java, src).unwrap();
        let sts = split_statements(&tree, &StatementLabels::for_language(Language::Java));
        (tree, sts)
    }

    fn roots(sts: &[SyntaxTree]) -> Vec<&str> {
        sts.iter().map(|s| s.root().label.as_str()).collect()
    }

    /// Nodes at or below some statement node.
    fn statement_relevant(tree: &SyntaxTree, labels: &StatementLabels) -> usize {
        fn walk(tree: &SyntaxTree, id: usize, inside: bool, labels: &StatementLabels) -> usize {
            let inside = inside || labels.contains(&tree.node(id).label);
            usize::from(inside)
                + tree
                    .node(id)
                    .children
                    .iter()
                    .map(|&c| walk(tree, c, inside, labels))
                    .sum::<usize>()
        }
        walk(tree, 1, false, labels)
    }

    #[test]
    fn three_statement_method() {
        let src = "int f(int n) {\n    int a = n;\n    a = a * 2;\n    return a;\n}\n";
        let (tree, sts) = java(src);
        assert_eq!(
            roots(&sts),
            [
                "MethodDeclaration",
                "LocalVariableDeclaration",
                "StatementExpression",
                "ReturnStatement"
            ]
        );
        // Header keeps the return type, parameter and the body block, not the statements.
        let header: Vec<&str> = sts[0].labels().collect();
        assert_eq!(
            header,
            [
                "MethodDeclaration",
                "BasicType",
                "FormalParameter",
                "Block",
                "BasicType"
            ]
        );
        let labels = StatementLabels::for_language(Language::Java);
        let covered: usize = sts.iter().map(SyntaxTree::node_count).sum();
        assert_eq!(covered, statement_relevant(&tree, &labels));
    }

    #[test]
    fn nested_assignment_gets_its_own_tree() {
        let (_, sts) = java("void g() { if (x > 0) y = 1; }");
        assert_eq!(
            roots(&sts),
            ["MethodDeclaration", "IfStatement", "StatementExpression"]
        );
        assert!(!sts[1].labels().any(|l| l == "Assignment"));
        assert!(sts[2].labels().any(|l| l == "Assignment"));
    }

    #[test]
    fn single_expression_statement() {
        let tree = parse_source(Language::Python, "f(x)\n").unwrap();
        let sts = split_statements(&tree, &StatementLabels::for_language(Language::Python));
        assert_eq!(sts.len(), 1);
        assert_eq!(sts[0], tree.subtree(2));
    }

    #[test]
    fn no_statement_nodes_yields_whole_tree() {
        let tree =
            SyntaxTree::from_raw(RawNode::new("Expression").with_child(RawNode::leaf("Name", "x")));
        let sts = split_statements(&tree, &StatementLabels::for_language(Language::Python));
        assert_eq!(sts, [tree]);
    }

    #[test]
    fn python_preorder_split() {
        let src = "def f(a):\n    if a:\n        return 1\n    return 2\n";
        let tree = parse_source(Language::Python, src).unwrap();
        let labels = StatementLabels::for_language(Language::Python);
        let sts = split_statements(&tree, &labels);
        assert_eq!(roots(&sts), ["FunctionDef", "If", "Return", "Return"]);
        let covered: usize = sts.iter().map(SyntaxTree::node_count).sum();
        assert_eq!(covered, statement_relevant(&tree, &labels));
    }
}
