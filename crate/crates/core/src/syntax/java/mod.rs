//! Recursive-descent parser for Java source.
//!
//! Input is either a compilation unit (package, imports, type declarations)
//! or a sequence of bare class members such as a single method; both hang
//! under a `CompilationUnit` root. Labels follow the node classes of the
//! `javalang` parser where one exists:
//!
//! | construct | label | children |
//! |---|---|---|
//! | class / interface / enum | `ClassDeclaration` / `InterfaceDeclaration` / `EnumDeclaration` (name) | members |
//! | method | `MethodDeclaration` (name) | return type (absent for `void`), `FormalParameter`s, `Block` |
//! | constructor | `ConstructorDeclaration` (name) | `FormalParameter`s, `Block` |
//! | field | `FieldDeclaration` | type, `VariableDeclarator`s |
//! | parameter | `FormalParameter` (name) | type |
//! | local variable | `LocalVariableDeclaration` | type, `VariableDeclarator`s |
//! | `for` header | `ForControl` / `EnhancedForControl` | init, condition, updates / `VariableDeclaration`, iterable |
//! | nested `{}` | `BlockStatement` | statements |
//! | expressions | `Assignment`, `BinaryOperation`, `PrefixOperation`, `PostfixOperation` (operator) | operands |
//! | call | `MethodInvocation` (name) | receiver (if any), arguments |
//! | names, literals | `MemberReference`, `Literal` leaves | |
//! | types | `BasicType`, `ReferenceType` (name) | type arguments |
//!
//! Modifiers, annotations, type parameters and `throws` clauses are parsed
//! and dropped.

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
        splits: Vec::new(),
    };
    parser.compilation_unit()
}

const PRIMITIVES: &[&str] = &[
    "boolean", "byte", "char", "short", "int", "long", "float", "double",
];

const MODIFIERS: &[&str] = &[
    "public",
    "private",
    "protected",
    "static",
    "final",
    "abstract",
    "native",
    "synchronized",
    "transient",
    "volatile",
    "strictfp",
    "default",
];

const KEYWORDS: &[&str] = &[
    "abstract",
    "assert",
    "boolean",
    "break",
    "byte",
    "case",
    "catch",
    "char",
    "class",
    "const",
    "continue",
    "default",
    "do",
    "double",
    "else",
    "enum",
    "extends",
    "final",
    "finally",
    "float",
    "for",
    "goto",
    "if",
    "implements",
    "import",
    "instanceof",
    "int",
    "interface",
    "long",
    "native",
    "new",
    "package",
    "private",
    "protected",
    "public",
    "return",
    "short",
    "static",
    "strictfp",
    "super",
    "switch",
    "synchronized",
    "this",
    "throw",
    "throws",
    "transient",
    "try",
    "void",
    "volatile",
    "while",
    "true",
    "false",
    "null",
];

const ASSIGN_OPS: &[&str] = &[
    "=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", ">>>=",
];

// Binary operators by precedence level, lowest first.
const BINARY_LEVELS: &[&[&str]] = &[
    &["||"],
    &["&&"],
    &["|"],
    &["^"],
    &["&"],
    &["==", "!="],
    &["<", ">", "<=", ">=", "instanceof"],
    &["<<", ">>", ">>>"],
    &["+", "-"],
    &["*", "/", "%"],
];

struct Parser<'a> {
    src: &'a str,
    tokens: Vec<Token>,
    pos: usize,
    // Tokens overwritten by `>>` splitting, for backtracking.
    splits: Vec<(usize, Token)>,
}

type PResult<T> = Result<T, ParseError>;

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("'{s}'"),
        Tok::Literal(s) => format!("literal {s}"),
        Tok::Op(o) => format!("'{o}'"),
        Tok::Eof => "end of input".into(),
    }
}

impl<'a> Parser<'a> {
    fn tok(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn tok_at(&self, ahead: usize) -> &Tok {
        let i = (self.pos + ahead).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn at_op(&self, op: &str) -> bool {
        matches!(self.tok(), Tok::Op(o) if *o == op)
    }

    fn op_at(&self, ahead: usize, op: &str) -> bool {
        matches!(self.tok_at(ahead), Tok::Op(o) if *o == op)
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.tok(), Tok::Ident(n) if n == kw)
    }

    fn at_eof(&self) -> bool {
        matches!(self.tok(), Tok::Eof)
    }

    fn advance(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
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

    /// Consumes one `>` of a type-argument list, splitting `>>` and `>>>`.
    fn expect_close_angle(&mut self) -> PResult<()> {
        let rest = match self.tok() {
            Tok::Op(">") => None,
            Tok::Op(">>") => Some(">"),
            Tok::Op(">>>") => Some(">>"),
            Tok::Op(">=") => Some("="),
            Tok::Op(">>=") => Some(">="),
            _ => return Err(self.unexpected("'>'")),
        };
        match rest {
            None => {
                self.advance();
            }
            Some(rest) => {
                self.splits.push((self.pos, self.tokens[self.pos].clone()));
                let token = &mut self.tokens[self.pos];
                token.tok = Tok::Op(rest);
                token.offset += 1;
            }
        }
        Ok(())
    }

    fn ident(&mut self) -> PResult<String> {
        match self.tok() {
            Tok::Ident(name) if !KEYWORDS.contains(&name.as_str()) => {
                let name = name.clone();
                self.advance();
                Ok(name)
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn at_ident(&self) -> bool {
        matches!(self.tok(), Tok::Ident(n) if !KEYWORDS.contains(&n.as_str()))
    }

    fn qualified_name(&mut self) -> PResult<String> {
        let mut name = self.ident()?;
        while self.at_op(".") && matches!(self.tok_at(1), Tok::Ident(_)) {
            self.advance();
            name.push('.');
            name.push_str(&self.ident()?);
        }
        Ok(name)
    }

    /// Runs `f` and rewinds on failure, including any `>>` splits.
    fn attempt<T>(&mut self, f: impl FnOnce(&mut Self) -> PResult<T>) -> Option<T> {
        self.attempt_or_error(f).ok()
    }

    fn attempt_or_error<T>(&mut self, f: impl FnOnce(&mut Self) -> PResult<T>) -> PResult<T> {
        let saved_pos = self.pos;
        let saved_log = self.splits.len();
        let result = f(self);
        if result.is_err() {
            while self.splits.len() > saved_log {
                let (i, token) = self.splits.pop().unwrap();
                self.tokens[i] = token;
            }
            self.pos = saved_pos;
        }
        result
    }

    // ---- declarations ----

    fn compilation_unit(&mut self) -> PResult<RawNode> {
        let mut unit = RawNode::new("CompilationUnit");
        if self.at_kw("package") {
            self.advance();
            let name = self.qualified_name()?;
            self.expect_op(";")?;
            unit.push(RawNode::leaf("PackageDeclaration", name));
        }
        while self.at_kw("import") {
            self.advance();
            let is_static = self.eat_kw("static");
            let mut name = self.qualified_name()?;
            if self.eat_op(".") {
                self.expect_op("*")?;
                name.push_str(".*");
            }
            self.expect_op(";")?;
            let label = if is_static { "StaticImport" } else { "Import" };
            unit.push(RawNode::leaf(label, name));
        }
        while !self.at_eof() {
            if self.eat_op(";") {
                continue;
            }
            unit.extend(self.member()?);
        }
        Ok(unit)
    }

    fn skip_annotation(&mut self) -> PResult<()> {
        self.expect_op("@")?;
        self.qualified_name()?;
        if self.at_op("(") {
            self.skip_balanced("(", ")")?;
        }
        Ok(())
    }

    fn skip_balanced(&mut self, open: &str, close: &str) -> PResult<()> {
        self.expect_op(open)?;
        let mut depth = 1;
        while depth > 0 {
            if self.at_eof() {
                return Err(self.unexpected(&format!("'{close}'")));
            }
            if self.at_op(open) {
                depth += 1;
            } else if self.at_op(close) {
                depth -= 1;
            }
            self.advance();
        }
        Ok(())
    }

    fn modifiers(&mut self) -> PResult<()> {
        loop {
            if self.at_op("@") && !matches!(self.tok_at(1), Tok::Ident(n) if n == "interface") {
                self.skip_annotation()?;
            } else if matches!(self.tok(), Tok::Ident(n) if MODIFIERS.contains(&n.as_str())) {
                self.advance();
            } else {
                return Ok(());
            }
        }
    }

    fn type_parameters(&mut self) -> PResult<()> {
        if !self.at_op("<") {
            return Ok(());
        }
        self.advance();
        loop {
            self.ident()?;
            if self.eat_kw("extends") {
                self.type_()?;
                while self.eat_op("&") {
                    self.type_()?;
                }
            }
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_close_angle()
    }

    /// One class-body member; initializer blocks and nested types included.
    fn member(&mut self) -> PResult<Vec<RawNode>> {
        self.modifiers()?;
        if self.at_kw("class") || self.at_kw("interface") || self.at_kw("enum") || self.at_op("@") {
            return Ok(vec![self.type_declaration()?]);
        }
        if self.at_op("{") {
            return Ok(vec![self.block("Block")?]);
        }
        self.type_parameters()?;
        if self.at_ident() && self.op_at(1, "(") {
            let name = self.ident()?;
            let mut ctor = RawNode::new("ConstructorDeclaration").with_token(name);
            ctor.extend(self.formal_parameters()?);
            self.throws()?;
            ctor.push(self.block("Block")?);
            return Ok(vec![ctor]);
        }
        let ty = if self.eat_kw("void") {
            None
        } else {
            Some(self.type_()?)
        };
        let name = self.ident()?;
        if self.at_op("(") {
            let mut method = RawNode::new("MethodDeclaration").with_token(name);
            method.extend(ty);
            method.extend(self.formal_parameters()?);
            while self.at_op("[") {
                self.advance();
                self.expect_op("]")?;
            }
            self.throws()?;
            if self.eat_kw("default") {
                self.expression()?;
            }
            if !self.eat_op(";") {
                method.push(self.block("Block")?);
            }
            return Ok(vec![method]);
        }
        let Some(ty) = ty else {
            return Err(self.unexpected("'('"));
        };
        let mut field = RawNode::new("FieldDeclaration").with_child(ty);
        field.extend(self.declarators_after_first(name)?);
        self.expect_op(";")?;
        Ok(vec![field])
    }

    fn type_declaration(&mut self) -> PResult<RawNode> {
        if self.at_op("@") {
            self.advance();
            self.advance();
            let name = self.ident()?;
            let mut decl = RawNode::new("AnnotationDeclaration").with_token(name);
            decl.extend(self.class_body()?);
            return Ok(decl);
        }
        let kind = match self.advance() {
            Tok::Ident(k) if k == "class" => "ClassDeclaration",
            Tok::Ident(k) if k == "interface" => "InterfaceDeclaration",
            _ => "EnumDeclaration",
        };
        let name = self.ident()?;
        self.type_parameters()?;
        if self.eat_kw("extends") {
            self.type_()?;
            while self.eat_op(",") {
                self.type_()?;
            }
        }
        if self.eat_kw("implements") {
            self.type_()?;
            while self.eat_op(",") {
                self.type_()?;
            }
        }
        let mut decl = RawNode::new(kind).with_token(name);
        if kind == "EnumDeclaration" {
            decl.extend(self.enum_body()?);
        } else {
            decl.extend(self.class_body()?);
        }
        Ok(decl)
    }

    fn class_body(&mut self) -> PResult<Vec<RawNode>> {
        self.expect_op("{")?;
        let mut members = Vec::new();
        while !self.eat_op("}") {
            if self.at_eof() {
                return Err(self.unexpected("'}'"));
            }
            if self.eat_op(";") {
                continue;
            }
            members.extend(self.member()?);
        }
        Ok(members)
    }

    fn enum_body(&mut self) -> PResult<Vec<RawNode>> {
        self.expect_op("{")?;
        let mut members = Vec::new();
        while self.at_ident() || self.at_op("@") {
            self.modifiers()?;
            let name = self.ident()?;
            let mut constant = RawNode::new("EnumConstantDeclaration").with_token(name);
            if self.at_op("(") {
                constant.extend(self.arguments()?);
            }
            if self.at_op("{") {
                constant.extend(self.class_body()?);
            }
            members.push(constant);
            if !self.eat_op(",") {
                break;
            }
        }
        if self.eat_op(";") {
            while !self.at_op("}") {
                if self.at_eof() {
                    return Err(self.unexpected("'}'"));
                }
                if self.eat_op(";") {
                    continue;
                }
                members.extend(self.member()?);
            }
        }
        self.expect_op("}")?;
        Ok(members)
    }

    fn throws(&mut self) -> PResult<()> {
        if self.eat_kw("throws") {
            self.qualified_name()?;
            while self.eat_op(",") {
                self.qualified_name()?;
            }
        }
        Ok(())
    }

    fn formal_parameters(&mut self) -> PResult<Vec<RawNode>> {
        self.expect_op("(")?;
        let mut params = Vec::new();
        if self.eat_op(")") {
            return Ok(params);
        }
        loop {
            self.modifiers()?;
            let mut ty = self.type_()?;
            if self.eat_op("...") {
                append_token(&mut ty, "...");
            }
            let name = self.ident()?;
            ty = self.trailing_dims(ty)?;
            params.push(
                RawNode::new("FormalParameter")
                    .with_token(name)
                    .with_child(ty),
            );
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(")")?;
        Ok(params)
    }

    fn trailing_dims(&mut self, mut ty: RawNode) -> PResult<RawNode> {
        while self.at_op("[") && self.op_at(1, "]") {
            self.advance();
            self.advance();
            append_token(&mut ty, "[]");
        }
        Ok(ty)
    }

    fn declarators_after_first(&mut self, first: String) -> PResult<Vec<RawNode>> {
        let mut out = vec![self.declarator_rest(first)?];
        while self.eat_op(",") {
            let name = self.ident()?;
            out.push(self.declarator_rest(name)?);
        }
        Ok(out)
    }

    fn declarator_rest(&mut self, name: String) -> PResult<RawNode> {
        while self.at_op("[") {
            self.advance();
            self.expect_op("]")?;
        }
        let mut decl = RawNode::new("VariableDeclarator").with_token(name);
        if self.eat_op("=") {
            decl.push(self.variable_initializer()?);
        }
        Ok(decl)
    }

    fn variable_initializer(&mut self) -> PResult<RawNode> {
        if self.at_op("{") {
            self.array_initializer()
        } else {
            self.expression()
        }
    }

    fn array_initializer(&mut self) -> PResult<RawNode> {
        self.expect_op("{")?;
        let mut init = RawNode::new("ArrayInitializer");
        while !self.eat_op("}") {
            init.push(self.variable_initializer()?);
            if !self.eat_op(",") {
                self.expect_op("}")?;
                break;
            }
        }
        Ok(init)
    }

    // ---- types ----

    fn type_(&mut self) -> PResult<RawNode> {
        let ty = match self.tok() {
            Tok::Ident(n) if PRIMITIVES.contains(&n.as_str()) => {
                let n = n.clone();
                self.advance();
                RawNode::leaf("BasicType", n)
            }
            _ => self.reference_type()?,
        };
        self.trailing_dims(ty)
    }

    fn reference_type(&mut self) -> PResult<RawNode> {
        let mut name = self.ident()?;
        let mut args = self.type_arguments()?;
        while self.at_op(".") && matches!(self.tok_at(1), Tok::Ident(_)) {
            self.advance();
            name.push('.');
            name.push_str(&self.ident()?);
            let more = self.type_arguments()?;
            if !more.is_empty() {
                args = more;
            }
        }
        Ok(RawNode::new("ReferenceType")
            .with_token(name)
            .with_children(args))
    }

    fn type_arguments(&mut self) -> PResult<Vec<RawNode>> {
        if !self.at_op("<") {
            return Ok(Vec::new());
        }
        self.advance();
        let mut args = Vec::new();
        if self.at_op(">") {
            self.advance();
            return Ok(args);
        }
        loop {
            if self.eat_op("?") {
                let mut wildcard = RawNode::leaf("TypeArgument", "?");
                if self.eat_kw("extends") || self.eat_kw("super") {
                    wildcard.push(self.type_()?);
                }
                args.push(wildcard);
            } else {
                args.push(self.type_()?);
            }
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_close_angle()?;
        Ok(args)
    }

    // ---- statements ----

    fn block(&mut self, label: &str) -> PResult<RawNode> {
        self.expect_op("{")?;
        let mut block = RawNode::new(label);
        while !self.eat_op("}") {
            if self.at_eof() {
                return Err(self.unexpected("'}'"));
            }
            block.push(self.block_statement()?);
        }
        Ok(block)
    }

    /// A statement inside a block: local declarations allowed.
    fn block_statement(&mut self) -> PResult<RawNode> {
        if self.at_kw("class") || self.at_kw("interface") || self.at_kw("enum") {
            return self.type_declaration();
        }
        if self.at_kw("final") || self.at_op("@") {
            self.modifiers()?;
            if self.at_kw("class") {
                return self.type_declaration();
            }
            let decl = self.local_declaration("LocalVariableDeclaration")?;
            self.expect_op(";")?;
            return Ok(decl);
        }
        let declaration = self.attempt_or_error(|p| {
            let decl = p.local_declaration("LocalVariableDeclaration")?;
            p.expect_op(";")?;
            Ok(decl)
        });
        match declaration {
            Ok(decl) => Ok(decl),
            // Report whichever reading got further into the input.
            Err(decl_err) => self.statement().map_err(|stmt_err| {
                if decl_err.offset > stmt_err.offset {
                    decl_err
                } else {
                    stmt_err
                }
            }),
        }
    }

    fn looks_like_declaration_start(&self) -> bool {
        match self.tok() {
            Tok::Ident(n) => PRIMITIVES.contains(&n.as_str()) || !KEYWORDS.contains(&n.as_str()),
            _ => false,
        }
    }

    fn local_declaration(&mut self, label: &str) -> PResult<RawNode> {
        if !self.looks_like_declaration_start() {
            return Err(self.unexpected("type"));
        }
        let ty = self.type_()?;
        let name = self.ident()?;
        if !(self.at_op("=")
            || self.at_op(";")
            || self.at_op(",")
            || self.at_op("[")
            || self.at_op(":"))
        {
            return Err(self.unexpected("'=' or ';'"));
        }
        let mut decl = RawNode::new(label).with_child(ty);
        decl.extend(self.declarators_after_first(name)?);
        Ok(decl)
    }

    fn statement(&mut self) -> PResult<RawNode> {
        if self.at_op("{") {
            return self.block("BlockStatement");
        }
        if self.eat_op(";") {
            return Ok(RawNode::new("EmptyStatement"));
        }
        if self.at_ident() && self.op_at(1, ":") {
            // Labels are dropped; the labeled statement stands alone.
            self.advance();
            self.advance();
            return self.statement();
        }
        let Tok::Ident(kw) = self.tok().clone() else {
            return self.expression_statement();
        };
        match kw.as_str() {
            "if" => {
                self.advance();
                let cond = self.par_expression()?;
                let then = self.statement()?;
                let mut node = RawNode::new("IfStatement")
                    .with_child(cond)
                    .with_child(then);
                if self.eat_kw("else") {
                    node.push(self.statement()?);
                }
                Ok(node)
            }
            "while" => {
                self.advance();
                let cond = self.par_expression()?;
                let body = self.statement()?;
                Ok(RawNode::new("WhileStatement")
                    .with_child(cond)
                    .with_child(body))
            }
            "do" => {
                self.advance();
                let body = self.statement()?;
                if !self.eat_kw("while") {
                    return Err(self.unexpected("'while'"));
                }
                let cond = self.par_expression()?;
                self.expect_op(";")?;
                Ok(RawNode::new("DoStatement")
                    .with_child(cond)
                    .with_child(body))
            }
            "for" => {
                self.advance();
                let control = self.for_control()?;
                let body = self.statement()?;
                Ok(RawNode::new("ForStatement")
                    .with_child(control)
                    .with_child(body))
            }
            "return" => {
                self.advance();
                let mut node = RawNode::new("ReturnStatement");
                if !self.at_op(";") {
                    node.push(self.expression()?);
                }
                self.expect_op(";")?;
                Ok(node)
            }
            "break" | "continue" => {
                self.advance();
                let label = if kw == "break" {
                    "BreakStatement"
                } else {
                    "ContinueStatement"
                };
                let mut node = RawNode::new(label);
                if self.at_ident() {
                    node.token_text = Some(self.ident()?);
                }
                self.expect_op(";")?;
                Ok(node)
            }
            "throw" => {
                self.advance();
                let e = self.expression()?;
                self.expect_op(";")?;
                Ok(RawNode::new("ThrowStatement").with_child(e))
            }
            "assert" => {
                self.advance();
                let mut node = RawNode::new("AssertStatement").with_child(self.expression()?);
                if self.eat_op(":") {
                    node.push(self.expression()?);
                }
                self.expect_op(";")?;
                Ok(node)
            }
            "synchronized" => {
                self.advance();
                let lock = self.par_expression()?;
                let body = self.block("Block")?;
                Ok(RawNode::new("SynchronizedStatement")
                    .with_child(lock)
                    .with_child(body))
            }
            "try" => self.try_statement(),
            "switch" => self.switch_statement(),
            _ => self.expression_statement(),
        }
    }

    fn expression_statement(&mut self) -> PResult<RawNode> {
        let e = self.expression()?;
        self.expect_op(";")?;
        Ok(RawNode::new("StatementExpression").with_child(e))
    }

    fn par_expression(&mut self) -> PResult<RawNode> {
        self.expect_op("(")?;
        let e = self.expression()?;
        self.expect_op(")")?;
        Ok(e)
    }

    fn for_control(&mut self) -> PResult<RawNode> {
        self.expect_op("(")?;
        let enhanced = self.attempt(|p| {
            p.modifiers()?;
            let ty = p.type_()?;
            let name = p.ident()?;
            p.expect_op(":")?;
            Ok(RawNode::new("VariableDeclaration")
                .with_child(ty)
                .with_child(RawNode::new("VariableDeclarator").with_token(name)))
        });
        if let Some(var) = enhanced {
            let iterable = self.expression()?;
            self.expect_op(")")?;
            return Ok(RawNode::new("EnhancedForControl")
                .with_child(var)
                .with_child(iterable));
        }
        let mut control = RawNode::new("ForControl");
        if !self.at_op(";") {
            self.modifiers()?;
            if let Some(decl) = self.attempt(|p| {
                let d = p.local_declaration("VariableDeclaration")?;
                if p.at_op(";") {
                    Ok(d)
                } else {
                    Err(p.unexpected("';'"))
                }
            }) {
                control.push(decl);
            } else {
                control.push(self.expression()?);
                while self.eat_op(",") {
                    control.push(self.expression()?);
                }
            }
        }
        self.expect_op(";")?;
        if !self.at_op(";") {
            control.push(self.expression()?);
        }
        self.expect_op(";")?;
        if !self.at_op(")") {
            control.push(self.expression()?);
            while self.eat_op(",") {
                control.push(self.expression()?);
            }
        }
        self.expect_op(")")?;
        Ok(control)
    }

    fn try_statement(&mut self) -> PResult<RawNode> {
        self.advance();
        let mut node = RawNode::new("TryStatement");
        if self.eat_op("(") {
            while !self.eat_op(")") {
                self.modifiers()?;
                let ty = self.type_()?;
                let name = self.ident()?;
                self.expect_op("=")?;
                let value = self.expression()?;
                node.push(
                    RawNode::new("TryResource")
                        .with_token(name)
                        .with_child(ty)
                        .with_child(value),
                );
                if !self.eat_op(";") {
                    self.expect_op(")")?;
                    break;
                }
            }
        }
        node.push(self.block("Block")?);
        while self.eat_kw("catch") {
            self.expect_op("(")?;
            self.modifiers()?;
            let mut types = vec![self.type_()?];
            while self.eat_op("|") {
                types.push(self.type_()?);
            }
            let name = self.ident()?;
            self.expect_op(")")?;
            let mut clause = RawNode::new("CatchClause")
                .with_token(name)
                .with_children(types);
            clause.push(self.block("Block")?);
            node.push(clause);
        }
        if self.eat_kw("finally") {
            node.push(self.block("Block")?);
        }
        let has_handler = node
            .children
            .iter()
            .filter(|c| c.label != "TryResource")
            .count()
            > 1;
        let has_resource = node.children.iter().any(|c| c.label == "TryResource");
        if !has_handler && !has_resource {
            return Err(self.unexpected("'catch' or 'finally'"));
        }
        Ok(node)
    }

    fn switch_statement(&mut self) -> PResult<RawNode> {
        self.advance();
        let subject = self.par_expression()?;
        let mut node = RawNode::new("SwitchStatement").with_child(subject);
        self.expect_op("{")?;
        while !self.eat_op("}") {
            let mut case = RawNode::new("SwitchStatementCase");
            if self.eat_kw("default") {
                case.push(RawNode::new("Default"));
            } else if self.eat_kw("case") {
                case.push(self.ternary()?);
                while self.eat_op(",") {
                    case.push(self.ternary()?);
                }
            } else {
                return Err(self.unexpected("'case' or 'default'"));
            }
            self.expect_op(":")?;
            while !(self.at_kw("case") || self.at_kw("default") || self.at_op("}")) {
                if self.at_eof() {
                    return Err(self.unexpected("'}'"));
                }
                case.push(self.block_statement()?);
            }
            node.push(case);
        }
        Ok(node)
    }

    // ---- expressions ----

    fn expression(&mut self) -> PResult<RawNode> {
        if let Some(lambda) = self.try_lambda()? {
            return Ok(lambda);
        }
        let target = self.ternary()?;
        if let Tok::Op(op) = self.tok() {
            if ASSIGN_OPS.contains(op) {
                let op = *op;
                self.advance();
                let value = self.expression()?;
                return Ok(RawNode::new("Assignment")
                    .with_token(op)
                    .with_child(target)
                    .with_child(value));
            }
        }
        Ok(target)
    }

    fn try_lambda(&mut self) -> PResult<Option<RawNode>> {
        let mut params = Vec::new();
        if self.at_ident() && self.op_at(1, "->") {
            params.push(RawNode::new("InferredFormalParameter").with_token(self.ident()?));
        } else if self.at_op("(") {
            let close = self.matching(self.pos);
            let is_lambda = close.is_some_and(
                |c| matches!(self.tokens.get(c + 1), Some(t) if t.tok == Tok::Op("->")),
            );
            if !is_lambda {
                return Ok(None);
            }
            self.advance();
            while !self.eat_op(")") {
                self.modifiers()?;
                if self.at_ident() && (self.op_at(1, ",") || self.op_at(1, ")")) {
                    params.push(RawNode::new("InferredFormalParameter").with_token(self.ident()?));
                } else {
                    let ty = self.type_()?;
                    let name = self.ident()?;
                    params.push(
                        RawNode::new("FormalParameter")
                            .with_token(name)
                            .with_child(ty),
                    );
                }
                if !self.eat_op(",") {
                    self.expect_op(")")?;
                    break;
                }
            }
        } else {
            return Ok(None);
        }
        self.expect_op("->")?;
        let body = if self.at_op("{") {
            self.block("Block")?
        } else {
            self.expression()?
        };
        Ok(Some(
            RawNode::new("LambdaExpression")
                .with_children(params)
                .with_child(body),
        ))
    }

    /// Index of the token closing the bracket at `open`.
    fn matching(&self, open: usize) -> Option<usize> {
        let mut depth = 0i32;
        for (i, t) in self.tokens.iter().enumerate().skip(open) {
            match t.tok {
                Tok::Op("(") | Tok::Op("[") | Tok::Op("{") => depth += 1,
                Tok::Op(")") | Tok::Op("]") | Tok::Op("}") => {
                    depth -= 1;
                    if depth == 0 {
                        return Some(i);
                    }
                }
                Tok::Eof => return None,
                _ => {}
            }
        }
        None
    }

    fn ternary(&mut self) -> PResult<RawNode> {
        let cond = self.binary(0)?;
        if !self.eat_op("?") {
            return Ok(cond);
        }
        let a = self.ternary_branch()?;
        self.expect_op(":")?;
        let b = self.ternary_branch()?;
        Ok(RawNode::new("TernaryExpression")
            .with_child(cond)
            .with_child(a)
            .with_child(b))
    }

    fn ternary_branch(&mut self) -> PResult<RawNode> {
        match self.try_lambda()? {
            Some(l) => Ok(l),
            None => self.ternary(),
        }
    }

    fn binary(&mut self, level: usize) -> PResult<RawNode> {
        if level == BINARY_LEVELS.len() {
            return self.unary();
        }
        let mut left = self.binary(level + 1)?;
        loop {
            let op = match self.tok() {
                Tok::Op(o) if BINARY_LEVELS[level].contains(o) => *o,
                Tok::Ident(k)
                    if k == "instanceof" && BINARY_LEVELS[level].contains(&"instanceof") =>
                {
                    "instanceof"
                }
                _ => return Ok(left),
            };
            self.advance();
            let right = if op == "instanceof" {
                self.eat_kw("final");
                let ty = self.type_()?;
                if self.at_ident() {
                    // Pattern binding; the variable name is dropped.
                    self.ident()?;
                }
                ty
            } else {
                self.binary(level + 1)?
            };
            left = RawNode::new("BinaryOperation")
                .with_token(op)
                .with_child(left)
                .with_child(right);
        }
    }

    fn unary(&mut self) -> PResult<RawNode> {
        if let Tok::Op(op @ ("+" | "-" | "++" | "--" | "!" | "~")) = self.tok() {
            let op = *op;
            self.advance();
            let operand = self.unary()?;
            return Ok(RawNode::new("PrefixOperation")
                .with_token(op)
                .with_child(operand));
        }
        if self.at_op("(") {
            if let Some(cast) = self.try_cast()? {
                return Ok(cast);
            }
        }
        let mut e = self.postfix_primary()?;
        while let Tok::Op(op @ ("++" | "--")) = self.tok() {
            let op = *op;
            self.advance();
            e = RawNode::new("PostfixOperation")
                .with_token(op)
                .with_child(e);
        }
        Ok(e)
    }

    fn try_cast(&mut self) -> PResult<Option<RawNode>> {
        let primitive = matches!(self.tok_at(1), Tok::Ident(n) if PRIMITIVES.contains(&n.as_str()));
        let ty = self.attempt(|p| {
            p.expect_op("(")?;
            let ty = p.type_()?;
            while p.eat_op("&") {
                p.type_()?;
            }
            p.expect_op(")")?;
            let follows = match p.tok() {
                Tok::Literal(_) => true,
                Tok::Ident(n) => !matches!(n.as_str(), "instanceof"),
                Tok::Op(o) => {
                    matches!(*o, "(" | "!" | "~")
                        || (primitive && matches!(*o, "+" | "-" | "++" | "--"))
                }
                Tok::Eof => false,
            };
            if follows {
                Ok(ty)
            } else {
                Err(p.unexpected("cast operand"))
            }
        });
        match ty {
            Some(ty) => {
                let operand = match self.try_lambda()? {
                    Some(l) => l,
                    None => self.unary()?,
                };
                Ok(Some(
                    RawNode::new("Cast").with_child(ty).with_child(operand),
                ))
            }
            None => Ok(None),
        }
    }

    fn arguments(&mut self) -> PResult<Vec<RawNode>> {
        self.expect_op("(")?;
        let mut args = Vec::new();
        if self.eat_op(")") {
            return Ok(args);
        }
        loop {
            args.push(self.expression()?);
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(")")?;
        Ok(args)
    }

    fn postfix_primary(&mut self) -> PResult<RawNode> {
        let mut e = self.primary()?;
        loop {
            if self.at_op(".") {
                self.advance();
                if self.at_op("<") {
                    self.type_arguments()?;
                }
                if self.eat_kw("class") {
                    e = RawNode::new("ClassReference").with_child(e);
                    continue;
                }
                if self.at_kw("new") {
                    let mut creator = self.creator()?;
                    creator.children.insert(0, e);
                    e = creator;
                    continue;
                }
                let name = match self.tok() {
                    Tok::Ident(n) if n == "this" || n == "super" => {
                        let n = n.clone();
                        self.advance();
                        n
                    }
                    _ => self.ident()?,
                };
                if self.at_op("(") {
                    let args = self.arguments()?;
                    e = RawNode::new("MethodInvocation")
                        .with_token(name)
                        .with_child(e)
                        .with_extended(args);
                } else {
                    e = RawNode::new("FieldAccess").with_token(name).with_child(e);
                }
            } else if self.at_op("[") {
                self.advance();
                let index = self.expression()?;
                self.expect_op("]")?;
                e = RawNode::new("ArraySelector")
                    .with_child(e)
                    .with_child(index);
            } else if self.at_op("::") {
                self.advance();
                let name = if self.eat_kw("new") {
                    "new".to_string()
                } else {
                    self.ident()?
                };
                e = RawNode::new("MethodReference")
                    .with_child(e)
                    .with_child(RawNode::leaf("MemberReference", name));
            } else {
                return Ok(e);
            }
        }
    }

    fn primary(&mut self) -> PResult<RawNode> {
        match self.tok().clone() {
            Tok::Literal(text) => {
                self.advance();
                Ok(RawNode::leaf("Literal", text))
            }
            Tok::Op("(") => self.par_expression(),
            Tok::Ident(word) => match word.as_str() {
                "true" | "false" | "null" => {
                    self.advance();
                    Ok(RawNode::leaf("Literal", word))
                }
                "this" | "super" => {
                    self.advance();
                    let label = if word == "this" { "This" } else { "Super" };
                    if self.at_op("(") {
                        let args = self.arguments()?;
                        return Ok(RawNode::new("ExplicitConstructorInvocation")
                            .with_token(word)
                            .with_children(args));
                    }
                    Ok(RawNode::new(label))
                }
                "new" => self.creator(),
                w if PRIMITIVES.contains(&w) || w == "void" => {
                    // int.class, int[]::new
                    self.advance();
                    let ty = self.trailing_dims(RawNode::leaf("BasicType", word))?;
                    Ok(ty)
                }
                _ => {
                    let name = self.ident()?;
                    if self.at_op("(") {
                        let args = self.arguments()?;
                        return Ok(RawNode::new("MethodInvocation")
                            .with_token(name)
                            .with_children(args));
                    }
                    // Fold a dotted name into one reference unless a call follows
                    // its last segment.
                    let mut full = name;
                    while self.at_op(".") && self.is_plain_name(1) && !self.op_at(2, "(") {
                        self.advance();
                        full.push('.');
                        full.push_str(&self.ident()?);
                    }
                    Ok(RawNode::leaf("MemberReference", full))
                }
            },
            _ => Err(self.unexpected("expression")),
        }
    }

    fn is_plain_name(&self, ahead: usize) -> bool {
        matches!(self.tok_at(ahead), Tok::Ident(n) if !KEYWORDS.contains(&n.as_str()))
    }

    fn creator(&mut self) -> PResult<RawNode> {
        self.advance();
        let base = match self.tok() {
            Tok::Ident(n) if PRIMITIVES.contains(&n.as_str()) => {
                let n = n.clone();
                self.advance();
                RawNode::leaf("BasicType", n)
            }
            _ => self.reference_type()?,
        };
        if self.at_op("[") {
            let mut creator = RawNode::new("ArrayCreator").with_child(base);
            while self.eat_op("[") {
                if self.eat_op("]") {
                    continue;
                }
                creator.push(self.expression()?);
                self.expect_op("]")?;
            }
            if self.at_op("{") {
                creator.push(self.array_initializer()?);
            }
            return Ok(creator);
        }
        let args = self.arguments()?;
        let mut creator = RawNode::new("ClassCreator")
            .with_child(base)
            .with_extended(args);
        if self.at_op("{") {
            let body = self.class_body()?;
            creator.push(RawNode::new("ClassBody").with_children(body));
        }
        Ok(creator)
    }
}

fn append_token(ty: &mut RawNode, suffix: &str) {
    let text = ty.token_text.get_or_insert_with(String::new);
    text.push_str(suffix);
}

#[cfg(test)]
mod tests;
