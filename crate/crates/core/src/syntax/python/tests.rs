use super::*;
use crate::syntax::SyntaxTree;

// Expected breadth-first (label, children) lists recorded from CPython 3.10
// `ast`, with expression contexts removed.

fn check(src: &str, expected: &[(&str, &[usize])]) {
    let tree = SyntaxTree::from_raw(parse(src).unwrap());
    let got: Vec<(&str, &[usize])> = tree
        .nodes()
        .iter()
        .map(|n| (n.label.as_str(), n.children.as_slice()))
        .collect();
    assert_eq!(got, expected);
}

#[test]
fn running_example() {
    let src = "def add(a, b):\n    c = a + b\n    return -c\nprint(add(1, 2))\n";
    check(
        src,
        &[
            ("Module", &[2, 3]),
            ("FunctionDef", &[4, 5, 6]),
            ("Expr", &[7]),
            ("Arguments", &[8, 9]),
            ("Assign", &[10, 11]),
            ("Return", &[12]),
            ("Call", &[13, 14]),
            ("Arg", &[]),
            ("Arg", &[]),
            ("Name", &[]),
            ("BinOp", &[15, 16, 17]),
            ("UnaryOp", &[18, 19]),
            ("Name", &[]),
            ("Call", &[20, 21, 22]),
            ("Name", &[]),
            ("Add", &[]),
            ("Name", &[]),
            ("USub", &[]),
            ("Name", &[]),
            ("Name", &[]),
            ("Constant", &[]),
            ("Constant", &[]),
        ],
    );
}

#[test]
fn control_flow() {
    let src = "x = 0\nfor i in range(10):\n    if i % 2 == 0 and i > 2:\n        x += i\n    elif not i:\n        continue\n    else:\n        break\nwhile x > 0:\n    x -= 1\n";
    check(
        src,
        &[
            ("Module", &[2, 3, 4]),
            ("Assign", &[5, 6]),
            ("For", &[7, 8, 9]),
            ("While", &[10, 11]),
            ("Name", &[]),
            ("Constant", &[]),
            ("Name", &[]),
            ("Call", &[12, 13]),
            ("If", &[14, 15, 16]),
            ("Compare", &[17, 18, 19]),
            ("AugAssign", &[20, 21, 22]),
            ("Name", &[]),
            ("Constant", &[]),
            ("BoolOp", &[23, 24, 25]),
            ("AugAssign", &[26, 27, 28]),
            ("If", &[29, 30, 31]),
            ("Name", &[]),
            ("Gt", &[]),
            ("Constant", &[]),
            ("Name", &[]),
            ("Sub", &[]),
            ("Constant", &[]),
            ("And", &[]),
            ("Compare", &[32, 33, 34]),
            ("Compare", &[35, 36, 37]),
            ("Name", &[]),
            ("Add", &[]),
            ("Name", &[]),
            ("UnaryOp", &[38, 39]),
            ("Continue", &[]),
            ("Break", &[]),
            ("BinOp", &[40, 41, 42]),
            ("Eq", &[]),
            ("Constant", &[]),
            ("Name", &[]),
            ("Gt", &[]),
            ("Constant", &[]),
            ("Not", &[]),
            ("Name", &[]),
            ("Name", &[]),
            ("Mod", &[]),
            ("Constant", &[]),
        ],
    );
}

#[test]
fn class_and_calls() {
    let src = "import os, sys as system\nfrom collections import OrderedDict as OD\nclass A(Base):\n    def __init__(self, v=1, *args, k=2, **kw):\n        self.v = v\n        super().__init__(**kw)\n\n    @property\n    def value(self):\n        return self.v[0:2]\n";
    check(
        src,
        &[
            ("Module", &[2, 3, 4]),
            ("Import", &[5, 6]),
            ("ImportFrom", &[7]),
            ("ClassDef", &[8, 9, 10]),
            ("Alias", &[]),
            ("Alias", &[]),
            ("Alias", &[]),
            ("Name", &[]),
            ("FunctionDef", &[11, 12, 13]),
            ("FunctionDef", &[14, 15, 16]),
            ("Arguments", &[17, 18, 19, 20, 21, 22, 23]),
            ("Assign", &[24, 25]),
            ("Expr", &[26]),
            ("Arguments", &[27]),
            ("Return", &[28]),
            ("Name", &[]),
            ("Arg", &[]),
            ("Arg", &[]),
            ("Arg", &[]),
            ("Arg", &[]),
            ("Constant", &[]),
            ("Arg", &[]),
            ("Constant", &[]),
            ("Attribute", &[29]),
            ("Name", &[]),
            ("Call", &[30, 31]),
            ("Arg", &[]),
            ("Subscript", &[32, 33]),
            ("Name", &[]),
            ("Attribute", &[34]),
            ("Keyword", &[35]),
            ("Attribute", &[36]),
            ("Slice", &[37, 38]),
            ("Call", &[39]),
            ("Name", &[]),
            ("Name", &[]),
            ("Constant", &[]),
            ("Constant", &[]),
            ("Name", &[]),
        ],
    );
}

#[test]
fn expressions() {
    let src = "y = [a * 2 for a in xs if a]\nd = {'k': 1, 'j': (2, 3)}\nz = lambda q, r=1: q if r else None\nw = x is not None or f(*args, key=3)\ns = {1, 2}\nt = a < b <= c\nx[1:]\n";
    check(
        src,
        &[
            ("Module", &[2, 3, 4, 5, 6, 7, 8]),
            ("Assign", &[9, 10]),
            ("Assign", &[11, 12]),
            ("Assign", &[13, 14]),
            ("Assign", &[15, 16]),
            ("Assign", &[17, 18]),
            ("Assign", &[19, 20]),
            ("Expr", &[21]),
            ("Name", &[]),
            ("ListComp", &[22, 23]),
            ("Name", &[]),
            ("Dict", &[24, 25, 26, 27]),
            ("Name", &[]),
            ("Lambda", &[28, 29]),
            ("Name", &[]),
            ("BoolOp", &[30, 31, 32]),
            ("Name", &[]),
            ("Set", &[33, 34]),
            ("Name", &[]),
            ("Compare", &[35, 36, 37, 38, 39]),
            ("Subscript", &[40, 41]),
            ("BinOp", &[42, 43, 44]),
            ("Comprehension", &[45, 46, 47]),
            ("Constant", &[]),
            ("Constant", &[]),
            ("Constant", &[]),
            ("Tuple", &[48, 49]),
            ("Arguments", &[50, 51, 52]),
            ("IfExp", &[53, 54, 55]),
            ("Or", &[]),
            ("Compare", &[56, 57, 58]),
            ("Call", &[59, 60, 61]),
            ("Constant", &[]),
            ("Constant", &[]),
            ("Name", &[]),
            ("Lt", &[]),
            ("LtE", &[]),
            ("Name", &[]),
            ("Name", &[]),
            ("Name", &[]),
            ("Slice", &[62]),
            ("Name", &[]),
            ("Mult", &[]),
            ("Constant", &[]),
            ("Name", &[]),
            ("Name", &[]),
            ("Name", &[]),
            ("Constant", &[]),
            ("Constant", &[]),
            ("Arg", &[]),
            ("Arg", &[]),
            ("Constant", &[]),
            ("Name", &[]),
            ("Name", &[]),
            ("Constant", &[]),
            ("Name", &[]),
            ("IsNot", &[]),
            ("Constant", &[]),
            ("Name", &[]),
            ("Starred", &[63]),
            ("Keyword", &[64]),
            ("Constant", &[]),
            ("Name", &[]),
            ("Constant", &[]),
        ],
    );
}

#[test]
fn try_with() {
    let src = "try:\n    with open(p) as fh, lock:\n        data = fh.read()\nexcept (IOError, ValueError) as e:\n    raise RuntimeError('bad') from e\nfinally:\n    del data\nassert data, 'msg'\nglobal g\n";
    check(
        src,
        &[
            ("Module", &[2, 3, 4]),
            ("Try", &[5, 6, 7]),
            ("Assert", &[8, 9]),
            ("Global", &[]),
            ("With", &[10, 11, 12]),
            ("ExceptHandler", &[13, 14]),
            ("Delete", &[15]),
            ("Name", &[]),
            ("Constant", &[]),
            ("WithItem", &[16, 17]),
            ("WithItem", &[18]),
            ("Assign", &[19, 20]),
            ("Tuple", &[21, 22]),
            ("Raise", &[23, 24]),
            ("Name", &[]),
            ("Call", &[25, 26]),
            ("Name", &[]),
            ("Name", &[]),
            ("Name", &[]),
            ("Call", &[27]),
            ("Name", &[]),
            ("Name", &[]),
            ("Call", &[28, 29]),
            ("Name", &[]),
            ("Name", &[]),
            ("Name", &[]),
            ("Attribute", &[30]),
            ("Name", &[]),
            ("Constant", &[]),
            ("Name", &[]),
        ],
    );
}

#[test]
fn misc() {
    let src = "def g():\n    yield 1\n    yield from h()\nx: int = 5\na, *b = c\nx = y = 0\nv = -a ** 2 // 3 @ m\nu = ~k << 2 | 1 ^ 3 & 4\nif x: pass\n";
    check(
        src,
        &[
            ("Module", &[2, 3, 4, 5, 6, 7, 8]),
            ("FunctionDef", &[9, 10, 11]),
            ("AnnAssign", &[12, 13, 14]),
            ("Assign", &[15, 16]),
            ("Assign", &[17, 18, 19]),
            ("Assign", &[20, 21]),
            ("Assign", &[22, 23]),
            ("If", &[24, 25]),
            ("Arguments", &[]),
            ("Expr", &[26]),
            ("Expr", &[27]),
            ("Name", &[]),
            ("Name", &[]),
            ("Constant", &[]),
            ("Tuple", &[28, 29]),
            ("Name", &[]),
            ("Name", &[]),
            ("Name", &[]),
            ("Constant", &[]),
            ("Name", &[]),
            ("BinOp", &[30, 31, 32]),
            ("Name", &[]),
            ("BinOp", &[33, 34, 35]),
            ("Name", &[]),
            ("Pass", &[]),
            ("Yield", &[36]),
            ("YieldFrom", &[37]),
            ("Name", &[]),
            ("Starred", &[38]),
            ("BinOp", &[39, 40, 41]),
            ("MatMult", &[]),
            ("Name", &[]),
            ("BinOp", &[42, 43, 44]),
            ("BitOr", &[]),
            ("BinOp", &[45, 46, 47]),
            ("Constant", &[]),
            ("Call", &[48]),
            ("Name", &[]),
            ("UnaryOp", &[49, 50]),
            ("FloorDiv", &[]),
            ("Constant", &[]),
            ("UnaryOp", &[51, 52]),
            ("LShift", &[]),
            ("Constant", &[]),
            ("Constant", &[]),
            ("BitXor", &[]),
            ("BinOp", &[53, 54, 55]),
            ("Name", &[]),
            ("USub", &[]),
            ("BinOp", &[56, 57, 58]),
            ("Invert", &[]),
            ("Name", &[]),
            ("Constant", &[]),
            ("BitAnd", &[]),
            ("Constant", &[]),
            ("Name", &[]),
            ("Pow", &[]),
            ("Constant", &[]),
        ],
    );
}
#[test]
fn leaf_tokens_carry_source_text() {
    let tree = SyntaxTree::from_raw(
        parse("def add(a, b):\n    c = a + b\n    return -c\nprint(add(1, 2))\n").unwrap(),
    );
    let tokens: Vec<&str> = tree.tokens().collect();
    assert_eq!(&tokens[..4], ["Module", "FunctionDef", "Expr", "Arguments"]);
    assert_eq!(tokens[7], "a");
    assert_eq!(tokens[8], "b");
    assert_eq!(tokens[20], "1");
    assert_eq!(tree.node(2).token_text.as_deref(), Some("add"));
}

#[test]
fn comments_and_blank_lines_do_not_change_the_tree() {
    let a = parse("x = 1\nif x:\n    y = 2\n").unwrap();
    let b = parse("# header\nx = 1   # one\n\n\nif x:\n\n    # inner\n    y = 2\n").unwrap();
    assert_eq!(a, b);
}

#[test]
fn syntax_errors_are_located() {
    let e = parse("x = (1,\n").unwrap_err();
    assert!(e.line >= 1);
    let e = parse("def f(:\n    pass\n").unwrap_err();
    assert_eq!(e.line, 1);
    let e = parse("if x:\ny = 1\n").unwrap_err();
    assert_eq!(e.line, 2);
    assert!(parse("async def f():\n    pass\n").is_err());
}
