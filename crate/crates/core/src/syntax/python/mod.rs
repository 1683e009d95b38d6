//! Recursive-descent parser for Python 3 source. Node labels follow the class
//! names of CPython's `ast` module (with `Arguments`/`Arg`/`Alias`/`Keyword`/
//! `Comprehension`/`WithItem`/`ExceptHandler` capitalized) and children follow
//! the field order of those classes. Expression contexts (`Load`, `Store`,
//! `Del`) are not materialized; operators are leaf nodes.

mod lexer;

use lexer::{Tok, Token};

use super::tree::RawNode;
use super::ParseError;

pub fn parse(src: &str) -> Result<RawNode, ParseError> {
    let tokens = lexer::tokenize(src)?;
    let mut parser = Parser {
        src,
        tokens,
        pos: 0,
    };
    let mut module = RawNode::new("Module");
    while !parser.at(&Tok::Eof) {
        if parser.eat(&Tok::Newline) {
            continue;
        }
        let stmts = parser.statement()?;
        module.extend(stmts);
    }
    Ok(module)
}

const KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue",
    "def", "del", "elif", "else", "except", "finally", "for", "from", "global", "if", "import",
    "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return", "try", "while",
    "with", "yield",
];

struct Parser<'a> {
    src: &'a str,
    tokens: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

fn binop_label(op: &str) -> Option<&'static str> {
    Some(match op {
        "+" => "Add",
        "-" => "Sub",
        "*" => "Mult",
        "@" => "MatMult",
        "/" => "Div",
        "%" => "Mod",
        "**" => "Pow",
        "<<" => "LShift",
        ">>" => "RShift",
        "|" => "BitOr",
        "^" => "BitXor",
        "&" => "BitAnd",
        "//" => "FloorDiv",
        _ => return None,
    })
}

impl<'a> Parser<'a> {
    fn tok(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn tok_at(&self, ahead: usize) -> &Tok {
        let i = (self.pos + ahead).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn at(&self, t: &Tok) -> bool {
        self.tok() == t
    }

    fn at_op(&self, op: &str) -> bool {
        matches!(self.tok(), Tok::Op(o) if *o == op)
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.tok(), Tok::Name(n) if n == kw)
    }

    fn advance(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.at(t) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.at_op(op) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError::at(self.src, self.tokens[self.pos].offset, message)
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        self.error(format!(
            "expected {expected}, found {}",
            describe(self.tok())
        ))
    }

    fn expect_op(&mut self, op: &str) -> PResult<()> {
        if self.eat_op(op) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("'{op}'")))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("'{kw}'")))
        }
    }

    fn expect_newline(&mut self) -> PResult<()> {
        if self.eat(&Tok::Newline) || self.at(&Tok::Eof) {
            Ok(())
        } else {
            Err(self.unexpected("end of line"))
        }
    }

    fn name(&mut self) -> PResult<String> {
        match self.tok() {
            Tok::Name(n) if !KEYWORDS.contains(&n.as_str()) => {
                let n = n.clone();
                self.advance();
                Ok(n)
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn dotted_name(&mut self) -> PResult<String> {
        let mut out = self.name()?;
        while self.eat_op(".") {
            out.push('.');
            out.push_str(&self.name()?);
        }
        Ok(out)
    }

    // ---------------------------------------------------------------- statements

    fn statement(&mut self) -> PResult<Vec<RawNode>> {
        let Tok::Name(word) = self.tok().clone() else {
            return self.simple_statements();
        };
        let stmt = match word.as_str() {
            "def" => self.funcdef(Vec::new())?,
            "class" => self.classdef(Vec::new())?,
            "if" => self.if_stmt()?,
            "while" => self.while_stmt()?,
            "for" => self.for_stmt()?,
            "try" => self.try_stmt()?,
            "with" => self.with_stmt()?,
            "async" => return Err(self.error("async statements are not supported")),
            _ => return self.simple_statements(),
        };
        Ok(vec![stmt])
    }

    fn decorated(&mut self) -> PResult<RawNode> {
        let mut decorators = Vec::new();
        while self.eat_op("@") {
            decorators.push(self.namedexpr_test()?);
            self.expect_newline()?;
        }
        if self.at_kw("def") {
            self.funcdef(decorators)
        } else if self.at_kw("class") {
            self.classdef(decorators)
        } else {
            Err(self.unexpected("'def' or 'class' after decorator"))
        }
    }

    fn simple_statements(&mut self) -> PResult<Vec<RawNode>> {
        if self.at_op("@") {
            return Ok(vec![self.decorated()?]);
        }
        let mut out = vec![self.small_statement()?];
        while self.eat_op(";") {
            if self.at(&Tok::Newline) || self.at(&Tok::Eof) {
                break;
            }
            out.push(self.small_statement()?);
        }
        self.expect_newline()?;
        Ok(out)
    }

    fn small_statement(&mut self) -> PResult<RawNode> {
        if let Tok::Name(word) = self.tok().clone() {
            match word.as_str() {
                "pass" => {
                    self.advance();
                    return Ok(RawNode::new("Pass"));
                }
                "break" => {
                    self.advance();
                    return Ok(RawNode::new("Break"));
                }
                "continue" => {
                    self.advance();
                    return Ok(RawNode::new("Continue"));
                }
                "return" => {
                    self.advance();
                    let mut node = RawNode::new("Return");
                    if !self.at_statement_end() {
                        node.push(self.testlist_star_expr()?);
                    }
                    return Ok(node);
                }
                "del" => {
                    self.advance();
                    let targets = self.exprlist_items()?;
                    return Ok(RawNode::new("Delete").with_children(targets));
                }
                "global" | "nonlocal" => {
                    self.advance();
                    let mut names = vec![self.name()?];
                    while self.eat_op(",") {
                        names.push(self.name()?);
                    }
                    let label = if word == "global" {
                        "Global"
                    } else {
                        "Nonlocal"
                    };
                    return Ok(RawNode::new(label).with_token(names.join(",")));
                }
                "import" => return self.import_name(),
                "from" => return self.import_from(),
                "raise" => {
                    self.advance();
                    let mut node = RawNode::new("Raise");
                    if !self.at_statement_end() {
                        node.push(self.test()?);
                        if self.eat_kw("from") {
                            node.push(self.test()?);
                        }
                    }
                    return Ok(node);
                }
                "assert" => {
                    self.advance();
                    let mut node = RawNode::new("Assert").with_child(self.test()?);
                    if self.eat_op(",") {
                        node.push(self.test()?);
                    }
                    return Ok(node);
                }
                _ => {}
            }
        }
        self.expr_statement()
    }

    fn at_statement_end(&self) -> bool {
        matches!(self.tok(), Tok::Newline | Tok::Eof) || self.at_op(";")
    }

    fn import_name(&mut self) -> PResult<RawNode> {
        self.expect_kw("import")?;
        let mut node = RawNode::new("Import");
        loop {
            let name = self.dotted_name()?;
            node.push(self.alias(name)?);
            if !self.eat_op(",") {
                break;
            }
        }
        Ok(node)
    }

    fn alias(&mut self, name: String) -> PResult<RawNode> {
        if self.eat_kw("as") {
            let asname = self.name()?;
            Ok(RawNode::leaf("Alias", format!("{name} as {asname}")))
        } else {
            Ok(RawNode::leaf("Alias", name))
        }
    }

    fn import_from(&mut self) -> PResult<RawNode> {
        self.expect_kw("from")?;
        let mut module = String::new();
        loop {
            if self.eat_op(".") {
                module.push('.');
            } else if self.eat_op("...") {
                module.push_str("...");
            } else {
                break;
            }
        }
        if !self.at_kw("import") {
            module.push_str(&self.dotted_name()?);
        }
        self.expect_kw("import")?;
        let mut node = RawNode::new("ImportFrom").with_token(module);
        if self.eat_op("*") {
            node.push(RawNode::leaf("Alias", "*"));
            return Ok(node);
        }
        let parens = self.eat_op("(");
        loop {
            let name = self.name()?;
            node.push(self.alias(name)?);
            if !self.eat_op(",") {
                break;
            }
            if parens && self.at_op(")") {
                break;
            }
        }
        if parens {
            self.expect_op(")")?;
        }
        Ok(node)
    }

    fn expr_statement(&mut self) -> PResult<RawNode> {
        if self.at_kw("yield") {
            return Ok(RawNode::new("Expr").with_child(self.yield_expr()?));
        }
        let first = self.testlist_star_expr()?;
        if self.at_op(":") {
            self.advance();
            let annotation = self.test()?;
            let mut node = RawNode::new("AnnAssign")
                .with_child(first)
                .with_child(annotation);
            if self.eat_op("=") {
                node.push(self.assigned_value()?);
            }
            return Ok(node);
        }
        if let Tok::Op(op) = self.tok().clone() {
            if op.len() >= 2 && op.ends_with('=') && !matches!(op, "==" | "<=" | ">=" | "!=") {
                if let Some(label) = binop_label(&op[..op.len() - 1]) {
                    self.advance();
                    let value = self.assigned_value()?;
                    return Ok(RawNode::new("AugAssign")
                        .with_child(first)
                        .with_child(RawNode::new(label))
                        .with_child(value));
                }
            }
        }
        if self.at_op("=") {
            let mut parts = vec![first];
            while self.eat_op("=") {
                parts.push(self.assigned_value()?);
            }
            return Ok(RawNode::new("Assign").with_children(parts));
        }
        Ok(RawNode::new("Expr").with_child(first))
    }

    fn assigned_value(&mut self) -> PResult<RawNode> {
        if self.at_kw("yield") {
            self.yield_expr()
        } else {
            self.testlist_star_expr()
        }
    }

    fn block(&mut self) -> PResult<Vec<RawNode>> {
        self.expect_op(":")?;
        if !self.eat(&Tok::Newline) {
            return self.simple_statements();
        }
        if !self.eat(&Tok::Indent) {
            return Err(self.unexpected("an indented block"));
        }
        let mut body = Vec::new();
        while !self.eat(&Tok::Dedent) {
            if self.at(&Tok::Eof) {
                break;
            }
            if self.eat(&Tok::Newline) {
                continue;
            }
            body.extend(self.statement()?);
        }
        Ok(body)
    }

    fn funcdef(&mut self, decorators: Vec<RawNode>) -> PResult<RawNode> {
        self.expect_kw("def")?;
        let name = self.name()?;
        self.expect_op("(")?;
        let args = self.parameters(")", true)?;
        self.expect_op(")")?;
        let returns = if self.eat_op("->") {
            Some(self.test()?)
        } else {
            None
        };
        let body = self.block()?;
        let mut node = RawNode::new("FunctionDef")
            .with_token(name)
            .with_child(args);
        node.extend(body);
        node.extend(decorators);
        node.extend(returns);
        Ok(node)
    }

    fn classdef(&mut self, decorators: Vec<RawNode>) -> PResult<RawNode> {
        self.expect_kw("class")?;
        let name = self.name()?;
        let mut node = RawNode::new("ClassDef").with_token(name);
        if self.eat_op("(") {
            let (args, keywords) = self.call_arguments()?;
            node.extend(args);
            node.extend(keywords);
        }
        node.extend(self.block()?);
        node.extend(decorators);
        Ok(node)
    }

    /// Parameter list up to (not including) `close`. `annotated` allows
    /// `name: annotation` (not in lambdas).
    fn parameters(&mut self, close: &str, annotated: bool) -> PResult<RawNode> {
        let mut posonly = Vec::new();
        let mut args: Vec<RawNode> = Vec::new();
        let mut vararg = None;
        let mut kwonly = Vec::new();
        let mut kw_defaults = Vec::new();
        let mut kwarg = None;
        let mut defaults = Vec::new();
        let mut seen_star = false;
        while !self.at_op(close) {
            if self.eat_op("/") {
                posonly.append(&mut args);
            } else if self.eat_op("**") {
                kwarg = Some(self.param(annotated)?);
            } else if self.eat_op("*") {
                seen_star = true;
                if !self.at_op(",") && !self.at_op(close) {
                    vararg = Some(self.param(annotated)?);
                }
            } else {
                let p = self.param(annotated)?;
                let default = if self.eat_op("=") {
                    Some(self.test()?)
                } else {
                    None
                };
                if seen_star {
                    kwonly.push(p);
                    kw_defaults.extend(default);
                } else {
                    args.push(p);
                    defaults.extend(default);
                }
            }
            if !self.eat_op(",") {
                break;
            }
        }
        let mut node = RawNode::new("Arguments");
        node.extend(posonly);
        node.extend(args);
        node.extend(vararg);
        node.extend(kwonly);
        node.extend(kw_defaults);
        node.extend(kwarg);
        node.extend(defaults);
        Ok(node)
    }

    fn param(&mut self, annotated: bool) -> PResult<RawNode> {
        let name = self.name()?;
        let mut node = RawNode::leaf("Arg", name);
        if annotated && self.eat_op(":") {
            node.push(self.test()?);
        }
        Ok(node)
    }

    fn if_stmt(&mut self) -> PResult<RawNode> {
        self.advance(); // `if` or `elif`
        let test = self.namedexpr_test()?;
        let body = self.block()?;
        let mut node = RawNode::new("If").with_child(test);
        node.extend(body);
        if self.at_kw("elif") {
            node.push(self.if_stmt()?);
        } else if self.eat_kw("else") {
            node.extend(self.block()?);
        }
        Ok(node)
    }

    fn while_stmt(&mut self) -> PResult<RawNode> {
        self.expect_kw("while")?;
        let mut node = RawNode::new("While").with_child(self.namedexpr_test()?);
        node.extend(self.block()?);
        if self.eat_kw("else") {
            node.extend(self.block()?);
        }
        Ok(node)
    }

    fn for_stmt(&mut self) -> PResult<RawNode> {
        self.expect_kw("for")?;
        let target = self.exprlist()?;
        self.expect_kw("in")?;
        let iter = self.testlist()?;
        let mut node = RawNode::new("For").with_child(target).with_child(iter);
        node.extend(self.block()?);
        if self.eat_kw("else") {
            node.extend(self.block()?);
        }
        Ok(node)
    }

    fn try_stmt(&mut self) -> PResult<RawNode> {
        self.expect_kw("try")?;
        let mut node = RawNode::new("Try");
        node.extend(self.block()?);
        let mut handlers = 0;
        while self.eat_kw("except") {
            handlers += 1;
            let mut handler = RawNode::new("ExceptHandler");
            if !self.at_op(":") {
                handler.push(self.test()?);
                if self.eat_kw("as") {
                    handler.token_text = Some(self.name()?);
                }
            }
            handler.extend(self.block()?);
            node.push(handler);
        }
        if handlers > 0 && self.eat_kw("else") {
            node.extend(self.block()?);
        }
        let has_finally = self.eat_kw("finally");
        if has_finally {
            node.extend(self.block()?);
        }
        if handlers == 0 && !has_finally {
            return Err(self.unexpected("'except' or 'finally'"));
        }
        Ok(node)
    }

    fn with_stmt(&mut self) -> PResult<RawNode> {
        self.expect_kw("with")?;
        let mut node = RawNode::new("With");
        loop {
            let mut item = RawNode::new("WithItem").with_child(self.test()?);
            if self.eat_kw("as") {
                item.push(self.expr()?);
            }
            node.push(item);
            if !self.eat_op(",") {
                break;
            }
        }
        node.extend(self.block()?);
        Ok(node)
    }

    // ---------------------------------------------------------------- expressions

    fn testlist_star_expr(&mut self) -> PResult<RawNode> {
        self.sequence(|p| {
            if p.at_op("*") {
                p.star_expr()
            } else {
                p.namedexpr_test()
            }
        })
    }

    fn testlist(&mut self) -> PResult<RawNode> {
        self.sequence(Self::test)
    }

    fn exprlist(&mut self) -> PResult<RawNode> {
        self.sequence(|p| {
            if p.at_op("*") {
                p.star_expr()
            } else {
                p.expr()
            }
        })
    }

    fn exprlist_items(&mut self) -> PResult<Vec<RawNode>> {
        let mut items = vec![self.expr()?];
        while self.eat_op(",") {
            if self.at_statement_end() {
                break;
            }
            items.push(self.expr()?);
        }
        Ok(items)
    }

    /// `item (',' item)* [',']`, becoming a Tuple when a comma is present.
    fn sequence(
        &mut self,
        mut item: impl FnMut(&mut Self) -> PResult<RawNode>,
    ) -> PResult<RawNode> {
        let first = item(self)?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut elts = vec![first];
        while self.eat_op(",") {
            if !self.starts_expression() {
                break;
            }
            elts.push(item(self)?);
        }
        Ok(RawNode::new("Tuple").with_children(elts))
    }

    fn starts_expression(&self) -> bool {
        match self.tok() {
            Tok::Number(_) | Tok::Str(_) => true,
            Tok::Name(n) => {
                !KEYWORDS.contains(&n.as_str())
                    || matches!(
                        n.as_str(),
                        "None" | "True" | "False" | "not" | "lambda" | "await" | "yield"
                    )
            }
            Tok::Op(op) => matches!(*op, "(" | "[" | "{" | "-" | "+" | "~" | "*" | "..."),
            _ => false,
        }
    }

    fn star_expr(&mut self) -> PResult<RawNode> {
        self.expect_op("*")?;
        Ok(RawNode::new("Starred").with_child(self.expr()?))
    }

    fn yield_expr(&mut self) -> PResult<RawNode> {
        self.expect_kw("yield")?;
        if self.eat_kw("from") {
            return Ok(RawNode::new("YieldFrom").with_child(self.test()?));
        }
        let mut node = RawNode::new("Yield");
        if self.starts_expression() {
            node.push(self.testlist_star_expr()?);
        }
        Ok(node)
    }

    fn namedexpr_test(&mut self) -> PResult<RawNode> {
        let target = self.test()?;
        if self.eat_op(":=") {
            let value = self.test()?;
            return Ok(RawNode::new("NamedExpr")
                .with_child(target)
                .with_child(value));
        }
        Ok(target)
    }

    fn test(&mut self) -> PResult<RawNode> {
        if self.at_kw("lambda") {
            return self.lambda(true);
        }
        let body = self.or_test()?;
        if self.at_kw("if") {
            // Ternary only when followed by `else`; comprehension `if` is handled elsewhere.
            let save = self.pos;
            self.advance();
            let test = self.or_test()?;
            if self.eat_kw("else") {
                let orelse = self.test()?;
                return Ok(RawNode::new("IfExp")
                    .with_child(test)
                    .with_child(body)
                    .with_child(orelse));
            }
            self.pos = save;
        }
        Ok(body)
    }

    fn test_nocond(&mut self) -> PResult<RawNode> {
        if self.at_kw("lambda") {
            return self.lambda(false);
        }
        self.or_test()
    }

    fn lambda(&mut self, allow_cond: bool) -> PResult<RawNode> {
        self.expect_kw("lambda")?;
        let args = self.parameters(":", false)?;
        self.expect_op(":")?;
        let body = if allow_cond {
            self.test()?
        } else {
            self.test_nocond()?
        };
        Ok(RawNode::new("Lambda").with_child(args).with_child(body))
    }

    fn or_test(&mut self) -> PResult<RawNode> {
        self.bool_chain("or", "Or", Self::and_test)
    }

    fn and_test(&mut self) -> PResult<RawNode> {
        self.bool_chain("and", "And", Self::not_test)
    }

    fn bool_chain(
        &mut self,
        kw: &str,
        label: &str,
        next: fn(&mut Self) -> PResult<RawNode>,
    ) -> PResult<RawNode> {
        let first = next(self)?;
        if !self.at_kw(kw) {
            return Ok(first);
        }
        let mut node = RawNode::new("BoolOp")
            .with_child(RawNode::new(label))
            .with_child(first);
        while self.eat_kw(kw) {
            node.push(next(self)?);
        }
        Ok(node)
    }

    fn not_test(&mut self) -> PResult<RawNode> {
        if self.eat_kw("not") {
            let operand = self.not_test()?;
            return Ok(RawNode::new("UnaryOp")
                .with_child(RawNode::new("Not"))
                .with_child(operand));
        }
        self.comparison()
    }

    fn comparison_op(&mut self) -> Option<&'static str> {
        let label = match self.tok() {
            Tok::Op("<") => "Lt",
            Tok::Op(">") => "Gt",
            Tok::Op("==") => "Eq",
            Tok::Op(">=") => "GtE",
            Tok::Op("<=") => "LtE",
            Tok::Op("!=") => "NotEq",
            Tok::Name(n) if n == "in" => "In",
            Tok::Name(n) if n == "not" && matches!(self.tok_at(1), Tok::Name(m) if m == "in") => {
                self.advance();
                "NotIn"
            }
            Tok::Name(n) if n == "is" => {
                if matches!(self.tok_at(1), Tok::Name(m) if m == "not") {
                    self.advance();
                    "IsNot"
                } else {
                    "Is"
                }
            }
            _ => return None,
        };
        self.advance();
        Some(label)
    }

    fn comparison(&mut self) -> PResult<RawNode> {
        let left = self.expr()?;
        let mut ops = Vec::new();
        let mut comparators = Vec::new();
        while let Some(op) = self.comparison_op() {
            ops.push(RawNode::new(op));
            comparators.push(self.expr()?);
        }
        if ops.is_empty() {
            return Ok(left);
        }
        let mut node = RawNode::new("Compare").with_child(left);
        node.extend(ops);
        node.extend(comparators);
        Ok(node)
    }

    fn binary_level(
        &mut self,
        ops: &[&str],
        next: fn(&mut Self) -> PResult<RawNode>,
    ) -> PResult<RawNode> {
        let mut left = next(self)?;
        loop {
            let Tok::Op(op) = *self.tok() else { break };
            if !ops.contains(&op) {
                break;
            }
            self.advance();
            let right = next(self)?;
            let label = binop_label(op).expect("binary operator table");
            left = RawNode::new("BinOp")
                .with_child(left)
                .with_child(RawNode::new(label))
                .with_child(right);
        }
        Ok(left)
    }

    fn expr(&mut self) -> PResult<RawNode> {
        self.binary_level(&["|"], Self::xor_expr)
    }

    fn xor_expr(&mut self) -> PResult<RawNode> {
        self.binary_level(&["^"], Self::and_expr)
    }

    fn and_expr(&mut self) -> PResult<RawNode> {
        self.binary_level(&["&"], Self::shift_expr)
    }

    fn shift_expr(&mut self) -> PResult<RawNode> {
        self.binary_level(&["<<", ">>"], Self::arith_expr)
    }

    fn arith_expr(&mut self) -> PResult<RawNode> {
        self.binary_level(&["+", "-"], Self::term)
    }

    fn term(&mut self) -> PResult<RawNode> {
        self.binary_level(&["*", "/", "%", "//", "@"], Self::factor)
    }

    fn factor(&mut self) -> PResult<RawNode> {
        let label = match self.tok() {
            Tok::Op("+") => "UAdd",
            Tok::Op("-") => "USub",
            Tok::Op("~") => "Invert",
            _ => return self.power(),
        };
        self.advance();
        let operand = self.factor()?;
        Ok(RawNode::new("UnaryOp")
            .with_child(RawNode::new(label))
            .with_child(operand))
    }

    fn power(&mut self) -> PResult<RawNode> {
        let base = if self.eat_kw("await") {
            RawNode::new("Await").with_child(self.atom_expr()?)
        } else {
            self.atom_expr()?
        };
        if self.eat_op("**") {
            let exponent = self.factor()?;
            return Ok(RawNode::new("BinOp")
                .with_child(base)
                .with_child(RawNode::new("Pow"))
                .with_child(exponent));
        }
        Ok(base)
    }

    fn atom_expr(&mut self) -> PResult<RawNode> {
        let mut node = self.atom()?;
        loop {
            if self.eat_op("(") {
                let (args, keywords) = self.call_arguments()?;
                let mut call = RawNode::new("Call").with_child(node);
                call.extend(args);
                call.extend(keywords);
                node = call;
            } else if self.eat_op("[") {
                let slice = self.subscript_list()?;
                self.expect_op("]")?;
                node = RawNode::new("Subscript").with_child(node).with_child(slice);
            } else if self.eat_op(".") {
                let attr = self.name()?;
                node = RawNode::new("Attribute").with_token(attr).with_child(node);
            } else {
                break;
            }
        }
        Ok(node)
    }

    /// Arguments after an opening parenthesis, consuming the closing one.
    fn call_arguments(&mut self) -> PResult<(Vec<RawNode>, Vec<RawNode>)> {
        let mut args = Vec::new();
        let mut keywords = Vec::new();
        while !self.at_op(")") {
            if self.eat_op("**") {
                keywords.push(RawNode::new("Keyword").with_child(self.test()?));
            } else if self.eat_op("*") {
                args.push(RawNode::new("Starred").with_child(self.test()?));
            } else if matches!(self.tok(), Tok::Name(_)) && matches!(self.tok_at(1), Tok::Op("=")) {
                let name = self.name()?;
                self.expect_op("=")?;
                keywords.push(
                    RawNode::new("Keyword")
                        .with_token(name)
                        .with_child(self.test()?),
                );
            } else {
                let value = self.namedexpr_test()?;
                if self.at_kw("for") {
                    let generators = self.comprehensions()?;
                    args.push(
                        RawNode::new("GeneratorExp")
                            .with_child(value)
                            .with_extended(generators),
                    );
                } else {
                    args.push(value);
                }
            }
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(")")?;
        Ok((args, keywords))
    }

    fn subscript_list(&mut self) -> PResult<RawNode> {
        let first = self.subscript()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut elts = vec![first];
        while self.eat_op(",") {
            if self.at_op("]") {
                break;
            }
            elts.push(self.subscript()?);
        }
        Ok(RawNode::new("Tuple").with_children(elts))
    }

    fn subscript(&mut self) -> PResult<RawNode> {
        let lower = if self.at_op(":") {
            None
        } else {
            Some(self.test()?)
        };
        if !self.eat_op(":") {
            return lower.ok_or_else(|| self.unexpected("subscript"));
        }
        let mut slice = RawNode::new("Slice");
        slice.extend(lower);
        if !self.at_op(":") && !self.at_op("]") && !self.at_op(",") {
            slice.push(self.test()?);
        }
        if self.eat_op(":") && !self.at_op("]") && !self.at_op(",") {
            slice.push(self.test()?);
        }
        Ok(slice)
    }

    fn comprehensions(&mut self) -> PResult<Vec<RawNode>> {
        let mut generators = Vec::new();
        while self.eat_kw("for") {
            let target = self.exprlist()?;
            self.expect_kw("in")?;
            let iter = self.or_test()?;
            let mut comp = RawNode::new("Comprehension")
                .with_child(target)
                .with_child(iter);
            while self.eat_kw("if") {
                comp.push(self.test_nocond()?);
            }
            generators.push(comp);
        }
        Ok(generators)
    }

    fn atom(&mut self) -> PResult<RawNode> {
        match self.tok().clone() {
            Tok::Number(text) => {
                self.advance();
                Ok(RawNode::leaf("Constant", text))
            }
            Tok::Str(mut text) => {
                self.advance();
                let mut formatted = is_fstring(&text);
                while let Tok::Str(more) = self.tok().clone() {
                    self.advance();
                    formatted |= is_fstring(&more);
                    text.push(' ');
                    text.push_str(&more);
                }
                Ok(RawNode::leaf(
                    if formatted { "JoinedStr" } else { "Constant" },
                    text,
                ))
            }
            Tok::Name(word) => match word.as_str() {
                "None" | "True" | "False" => {
                    self.advance();
                    Ok(RawNode::leaf("Constant", word))
                }
                _ => Ok(RawNode::leaf("Name", self.name()?)),
            },
            Tok::Op("...") => {
                self.advance();
                Ok(RawNode::leaf("Constant", "..."))
            }
            Tok::Op("(") => {
                self.advance();
                if self.eat_op(")") {
                    return Ok(RawNode::new("Tuple"));
                }
                if self.at_kw("yield") {
                    let y = self.yield_expr()?;
                    self.expect_op(")")?;
                    return Ok(y);
                }
                let first = if self.at_op("*") {
                    self.star_expr()?
                } else {
                    self.namedexpr_test()?
                };
                if self.at_kw("for") {
                    let generators = self.comprehensions()?;
                    self.expect_op(")")?;
                    return Ok(RawNode::new("GeneratorExp")
                        .with_child(first)
                        .with_extended(generators));
                }
                if self.eat_op(")") {
                    return Ok(first);
                }
                let mut elts = vec![first];
                while self.eat_op(",") {
                    if self.at_op(")") {
                        break;
                    }
                    elts.push(if self.at_op("*") {
                        self.star_expr()?
                    } else {
                        self.namedexpr_test()?
                    });
                }
                self.expect_op(")")?;
                Ok(RawNode::new("Tuple").with_children(elts))
            }
            Tok::Op("[") => {
                self.advance();
                if self.eat_op("]") {
                    return Ok(RawNode::new("List"));
                }
                let first = if self.at_op("*") {
                    self.star_expr()?
                } else {
                    self.namedexpr_test()?
                };
                if self.at_kw("for") {
                    let generators = self.comprehensions()?;
                    self.expect_op("]")?;
                    return Ok(RawNode::new("ListComp")
                        .with_child(first)
                        .with_extended(generators));
                }
                let mut elts = vec![first];
                while self.eat_op(",") {
                    if self.at_op("]") {
                        break;
                    }
                    elts.push(if self.at_op("*") {
                        self.star_expr()?
                    } else {
                        self.namedexpr_test()?
                    });
                }
                self.expect_op("]")?;
                Ok(RawNode::new("List").with_children(elts))
            }
            Tok::Op("{") => {
                self.advance();
                self.dict_or_set()
            }
            _ => Err(self.unexpected("expression")),
        }
    }

    fn dict_or_set(&mut self) -> PResult<RawNode> {
        if self.eat_op("}") {
            return Ok(RawNode::new("Dict"));
        }
        // Dict entries are collected as all keys followed by all values.
        let mut keys = Vec::new();
        let mut values = Vec::new();
        let mut elts = Vec::new();
        let mut is_dict = None;
        loop {
            if self.eat_op("**") {
                is_dict = Some(true);
                values.push(self.expr()?);
            } else if self.at_op("*") {
                is_dict = Some(false);
                elts.push(self.star_expr()?);
            } else {
                let key = self.test()?;
                if self.eat_op(":") {
                    let value = self.test()?;
                    if is_dict.is_none() && self.at_kw("for") {
                        let generators = self.comprehensions()?;
                        self.expect_op("}")?;
                        return Ok(RawNode::new("DictComp")
                            .with_child(key)
                            .with_child(value)
                            .with_extended(generators));
                    }
                    is_dict = Some(true);
                    keys.push(key);
                    values.push(value);
                } else {
                    if is_dict.is_none() && self.at_kw("for") {
                        let generators = self.comprehensions()?;
                        self.expect_op("}")?;
                        return Ok(RawNode::new("SetComp")
                            .with_child(key)
                            .with_extended(generators));
                    }
                    if is_dict == Some(true) {
                        return Err(self.unexpected("':'"));
                    }
                    is_dict = Some(false);
                    elts.push(key);
                }
            }
            if !self.eat_op(",") || self.at_op("}") {
                break;
            }
        }
        self.expect_op("}")?;
        if is_dict == Some(true) {
            keys.extend(values);
            Ok(RawNode::new("Dict").with_children(keys))
        } else {
            Ok(RawNode::new("Set").with_children(elts))
        }
    }
}

fn is_fstring(literal: &str) -> bool {
    literal
        .chars()
        .take_while(|c| c.is_ascii_alphabetic())
        .any(|c| c.eq_ignore_ascii_case(&'f'))
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Name(n) => format!("'{n}'"),
        Tok::Number(n) => format!("number {n}"),
        Tok::Str(_) => "string literal".into(),
        Tok::Op(o) => format!("'{o}'"),
        Tok::Newline => "end of line".into(),
        Tok::Indent => "indent".into(),
        Tok::Dedent => "dedent".into(),
        Tok::Eof => "end of input".into(),
    }
}

#[cfg(test)]
mod tests;
