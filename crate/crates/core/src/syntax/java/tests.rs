use super::*;
use crate::syntax::SyntaxTree;

fn tree(src: &str) -> SyntaxTree {
    SyntaxTree::from_raw(parse(src).unwrap())
}

fn shape(tree: &SyntaxTree) -> Vec<(&str, &[usize])> {
    tree.nodes()
        .iter()
        .map(|n| (n.label.as_str(), n.children.as_slice()))
        .collect()
}

fn has_label(tree: &SyntaxTree, label: &str) -> bool {
    tree.labels().any(|l| l == label)
}

#[test]
fn empty_void_method() {
    let t = tree("void f() {}");
    assert_eq!(
        shape(&t),
        [
            ("CompilationUnit", &[2][..]),
            ("MethodDeclaration", &[3]),
            ("Block", &[])
        ]
    );
    assert_eq!(t.node(2).token_text.as_deref(), Some("f"));
}

#[test]
fn small_method_breadth_first() {
    let t = tree("int add(int a, int b) {\n    int c = a + b;\n    return -c;\n}\n");
    let expected: &[(&str, &[usize])] = &[
        ("CompilationUnit", &[2]),
        ("MethodDeclaration", &[3, 4, 5, 6]),
        ("BasicType", &[]),
        ("FormalParameter", &[7]),
        ("FormalParameter", &[8]),
        ("Block", &[9, 10]),
        ("BasicType", &[]),
        ("BasicType", &[]),
        ("LocalVariableDeclaration", &[11, 12]),
        ("ReturnStatement", &[13]),
        ("BasicType", &[]),
        ("VariableDeclarator", &[14]),
        ("PrefixOperation", &[15]),
        ("BinaryOperation", &[16, 17]),
        ("MemberReference", &[]),
        ("MemberReference", &[]),
        ("MemberReference", &[]),
    ];
    assert_eq!(shape(&t), expected);
    let tokens: Vec<&str> = t.tokens().collect();
    assert_eq!(tokens[2], "int");
    assert_eq!(&tokens[14..], ["c", "a", "b"]);
    assert_eq!(t.node(14).token_text.as_deref(), Some("+"));
}

#[test]
fn nested_generics_split_shift_tokens() {
    let t = tree("void f() { Map<String, List<Integer>> m = new HashMap<>(); m.put(k, v); }");
    let decl = t
        .nodes()
        .iter()
        .find(|n| n.label == "LocalVariableDeclaration")
        .unwrap();
    let ty = t.node(decl.children[0]);
    assert_eq!(ty.token_text.as_deref(), Some("Map"));
    assert_eq!(ty.children.len(), 2);
    assert_eq!(t.node(ty.children[1]).children.len(), 1);
    assert!(has_label(&t, "ClassCreator"));
    let call = t
        .nodes()
        .iter()
        .find(|n| n.label == "MethodInvocation")
        .unwrap();
    assert_eq!(call.token_text.as_deref(), Some("put"));
    assert_eq!(call.children.len(), 3);
}

#[test]
fn comparison_is_not_mistaken_for_generics() {
    let t = tree("void f() { if (a < b && c > d) x = 1; y = a >> 2; }");
    assert!(!has_label(&t, "LocalVariableDeclaration"));
    assert!(!has_label(&t, "ReferenceType"));
    let ops: Vec<&str> = t
        .nodes()
        .iter()
        .filter(|n| n.label == "BinaryOperation")
        .filter_map(|n| n.token_text.as_deref())
        .collect();
    assert_eq!(ops, ["&&", "<", ">", ">>"]);
}

#[test]
fn casts_and_parentheses() {
    let t = tree("void f() { x = (int) y + 1; z = (a) + b; w = (String) o; }");
    let casts = t.labels().filter(|&l| l == "Cast").count();
    assert_eq!(casts, 2);
}

#[test]
fn loops_and_control() {
    let src = r#"
        int sum(int[] xs) {
            int total = 0;
            for (int i = 0; i < xs.length; i++) {
                if (xs[i] < 0) continue;
                total += xs[i];
            }
            for (int x : xs) { total -= x; }
            while (total > 100) total /= 2;
            do { total++; } while (total < 0);
            switch (total) {
                case 0: return 0;
                case 1, 2: break;
                default: total = -1;
            }
            return total > 0 ? total : -total;
        }
    "#;
    let t = tree(src);
    for label in [
        "ForStatement",
        "ForControl",
        "VariableDeclaration",
        "EnhancedForControl",
        "PostfixOperation",
        "ArraySelector",
        "ContinueStatement",
        "WhileStatement",
        "DoStatement",
        "SwitchStatement",
        "SwitchStatementCase",
        "Default",
        "TernaryExpression",
        "BlockStatement",
    ] {
        assert!(has_label(&t, label), "missing {label}");
    }
    let param = t
        .nodes()
        .iter()
        .find(|n| n.label == "FormalParameter")
        .unwrap();
    assert_eq!(
        t.node(param.children[0]).token_text.as_deref(),
        Some("int[]")
    );
    assert!(t.tokens().any(|tok| tok == "xs.length"));
}

#[test]
fn full_compilation_unit() {
    let src = r#"
        package a.b;
        import java.util.*;
        import static java.lang.Math.max;

        @SuppressWarnings("x")
        public class Box<T extends Comparable<T>> extends Base implements Runnable {
            private final int[] data = {1, 2, 3};
            static { count = 0; }
            public Box(int n) { super(n); this.n = n; }
            @Override
            public void run() throws Exception {
                try (Reader r = open()) {
                    list.forEach(x -> System.out.println(x));
                    Runnable q = () -> { go(); };
                } catch (IOException | RuntimeException e) {
                    throw new IllegalStateException("bad", e);
                } finally {
                    close();
                }
                Object o = new Object() { public String toString() { return "o"; } };
                int[][] grid = new int[3][];
                Function<String, Integer> len = String::length;
                boolean b = o instanceof String;
                synchronized (this) { n = max(n, 1); }
                assert n > 0 : "positive";
            }
            interface Inner { int size(); }
            enum Color { RED, GREEN; int code() { return 1; } }
        }
    "#;
    let t = tree(src);
    for label in [
        "PackageDeclaration",
        "Import",
        "StaticImport",
        "ClassDeclaration",
        "FieldDeclaration",
        "ArrayInitializer",
        "ConstructorDeclaration",
        "ExplicitConstructorInvocation",
        "FieldAccess",
        "TryStatement",
        "TryResource",
        "CatchClause",
        "LambdaExpression",
        "InferredFormalParameter",
        "ClassCreator",
        "ClassBody",
        "ArrayCreator",
        "MethodReference",
        "SynchronizedStatement",
        "AssertStatement",
        "InterfaceDeclaration",
        "EnumDeclaration",
        "EnumConstantDeclaration",
    ] {
        assert!(has_label(&t, label), "missing {label}");
    }
}

#[test]
fn comments_and_formatting_do_not_change_the_tree() {
    let a = parse("int f(int x) { return x * 2; }").unwrap();
    let b = parse("/** doc */\nint f(int x)\n{\n    // twice\n    return x*2;\n}\n").unwrap();
    assert_eq!(a, b);
}

#[test]
fn syntax_errors_are_located() {
    let e = parse("void f() {\n    int x = 1\n    y = 2;\n}\n").unwrap_err();
    assert_eq!(e.line, 3);
    assert!(parse("void f() { try { } }").is_err());
    assert!(parse("void f( {").is_err());
    assert!(parse("class { }").is_err());
}
