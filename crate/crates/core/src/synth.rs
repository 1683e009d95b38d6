//! Seeded synthetic clone corpora.
//!
//! Programs are drawn from a small statement language and rendered as Java
//! methods or Python functions. For `n_pairs` the corpus holds `n_pairs`
//! clone pairs and `n_pairs` non-clone pairs (`4 * n_pairs` samples):
//!
//! * clone pair `i`, even `i`: T2, the same program rendered with identifiers
//!   renamed through a seeded permutation of the identifier pool;
//! * clone pair `i`, odd `i`: T1, the same program and names, reformatted
//!   (indentation, spacing, brace placement, blank lines, comments);
//! * non-clone pair: one program from the small, flat template and one from
//!   the large, nested template.
//!
//! Clone programs alternate between the same two templates in blocks of two,
//! so both clone types cover both sizes.
//!
//! Every sample also gets a statement-level CFG derived from the same
//! program, so flow-graph tuples can be built without an external extractor.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{ClonePair, CloneType, CodeSample, Corpus, CorpusError, Language};
use crate::syntax::{FlowGraph, RawNode};

const IDENTIFIERS: &[&str] = &[
    "count", "total", "value", "index", "result", "item", "limit", "step", "acc", "temp", "left",
    "right", "low", "high", "size", "offset", "delta", "score", "amount", "prod", "alpha", "beta",
    "gamma", "width", "height", "depth", "key", "cursor", "bound", "level", "weight", "sample",
    "ratio", "base", "margin", "span", "pivot", "carry", "tally", "focus",
];

const FUNCTION_NAMES: &[&str] = &[
    "compute",
    "process",
    "update",
    "evaluate",
    "transform",
    "accumulate",
    "scan",
    "reduce",
    "measure",
    "combine",
    "balance",
    "collect",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BinOp {
    Add,
    Sub,
    Mul,
    Mod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CmpOp {
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Ne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Builtin {
    Max,
    Min,
    Abs,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Expr {
    Var(usize),
    Const(i64),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Builtin, Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Cond {
    op: CmpOp,
    left: Expr,
    right: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Stmt {
    Assign(usize, Expr),
    AugAssign(usize, BinOp, Expr),
    If(Cond, Vec<Stmt>, Vec<Stmt>),
    While(Cond, Vec<Stmt>),
    For(usize, Expr, Vec<Stmt>),
    Print(Expr),
}

/// Variables `0..params` are parameters, the next `locals` are locals
/// initialized at the top, and the rest are loop counters.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Program {
    params: usize,
    locals: usize,
    vars: usize,
    body: Vec<Stmt>,
    ret: Expr,
}

#[derive(Debug, Clone, Copy)]
struct Template {
    statements: (usize, usize),
    max_depth: usize,
    expr_depth: usize,
}

const SMALL: Template = Template {
    statements: (2, 3),
    max_depth: 0,
    expr_depth: 1,
};
const LARGE: Template = Template {
    statements: (9, 12),
    max_depth: 3,
    expr_depth: 2,
};

struct Generator<'r> {
    rng: &'r mut ChaCha8Rng,
    params: usize,
    locals: usize,
    vars: usize,
    template: Template,
}

impl Generator<'_> {
    fn program(rng: &mut ChaCha8Rng, template: Template) -> Program {
        let params = rng.gen_range(1..=3);
        let locals = rng.gen_range(1..=3);
        let mut g = Generator {
            rng,
            params,
            locals,
            vars: params + locals,
            template,
        };
        let n = g
            .rng
            .gen_range(template.statements.0..=template.statements.1);
        let body = g.block(n, 0);
        let ret = g.expr(1);
        Program {
            params,
            locals,
            vars: g.vars,
            body,
            ret,
        }
    }

    fn readable(&mut self) -> usize {
        self.rng.gen_range(0..self.params + self.locals)
    }

    fn local(&mut self) -> usize {
        self.params + self.rng.gen_range(0..self.locals)
    }

    fn expr(&mut self, depth: usize) -> Expr {
        let leaf = depth == 0 || self.rng.gen_bool(0.4);
        if leaf {
            if self.rng.gen_bool(0.7) {
                Expr::Var(self.readable())
            } else {
                Expr::Const(self.rng.gen_range(0..10))
            }
        } else if self.rng.gen_bool(0.8) {
            let op = *[BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Mod]
                .choose(self.rng)
                .unwrap();
            Expr::Bin(
                op,
                Box::new(self.expr(depth - 1)),
                Box::new(self.expr(depth - 1)),
            )
        } else {
            let f = *[Builtin::Max, Builtin::Min, Builtin::Abs]
                .choose(self.rng)
                .unwrap();
            let arity = if f == Builtin::Abs { 1 } else { 2 };
            Expr::Call(f, (0..arity).map(|_| self.expr(depth - 1)).collect())
        }
    }

    fn cond(&mut self) -> Cond {
        let op = *[
            CmpOp::Lt,
            CmpOp::Gt,
            CmpOp::Le,
            CmpOp::Ge,
            CmpOp::Eq,
            CmpOp::Ne,
        ]
        .choose(self.rng)
        .unwrap();
        Cond {
            op,
            left: Expr::Var(self.readable()),
            right: self.expr(1),
        }
    }

    fn block(&mut self, n: usize, depth: usize) -> Vec<Stmt> {
        (0..n).map(|_| self.statement(depth)).collect()
    }

    fn statement(&mut self, depth: usize) -> Stmt {
        let nest = depth < self.template.max_depth
            && self.rng.gen_bool(if depth == 0 { 0.55 } else { 0.4 });
        let e = self.template.expr_depth;
        if nest {
            let inner = self.rng.gen_range(1..=3);
            match self.rng.gen_range(0..3) {
                0 => {
                    let cond = self.cond();
                    let then = self.block(inner, depth + 1);
                    let otherwise = if self.rng.gen_bool(0.5) {
                        let n = self.rng.gen_range(1..=2);
                        self.block(n, depth + 1)
                    } else {
                        vec![]
                    };
                    Stmt::If(cond, then, otherwise)
                }
                1 => {
                    let cond = self.cond();
                    Stmt::While(cond, self.block(inner, depth + 1))
                }
                _ => {
                    let counter = self.vars;
                    self.vars += 1;
                    let bound = self.expr(1);
                    Stmt::For(counter, bound, self.block(inner, depth + 1))
                }
            }
        } else {
            match self.rng.gen_range(0..10) {
                0..=4 => {
                    let target = self.local();
                    Stmt::Assign(target, self.expr(e))
                }
                5..=7 => {
                    let target = self.local();
                    let op = *[BinOp::Add, BinOp::Sub, BinOp::Mul]
                        .choose(self.rng)
                        .unwrap();
                    Stmt::AugAssign(target, op, self.expr(e.saturating_sub(1)))
                }
                _ => Stmt::Print(self.expr(e.saturating_sub(1))),
            }
        }
    }
}

/// Formatting knobs varied between T1 clones.
#[derive(Debug, Clone, Copy)]
struct Style {
    indent: usize,
    tight_operators: bool,
    brace_on_new_line: bool,
    blank_lines: bool,
    comments: bool,
}

impl Style {
    const PLAIN: Style = Style {
        indent: 4,
        tight_operators: false,
        brace_on_new_line: false,
        blank_lines: false,
        comments: false,
    };

    fn reformatted(rng: &mut ChaCha8Rng) -> Style {
        Style {
            indent: *[2, 3, 8].choose(rng).unwrap(),
            tight_operators: rng.gen_bool(0.5),
            brace_on_new_line: rng.gen_bool(0.5),
            blank_lines: true,
            comments: true,
        }
    }
}

struct Names {
    function: String,
    vars: Vec<String>,
}

impl Names {
    fn pick(rng: &mut ChaCha8Rng, vars: usize) -> Names {
        let mut pool: Vec<&str> = IDENTIFIERS.to_vec();
        pool.shuffle(rng);
        let vars = (0..vars)
            .map(|i| {
                pool.get(i)
                    .map_or_else(|| format!("v{i}"), |s| s.to_string())
            })
            .collect();
        Names {
            function: FUNCTION_NAMES.choose(rng).unwrap().to_string(),
            vars,
        }
    }

    /// Renames every identifier through a permutation of the unused pool and
    /// a different function name.
    fn renamed(&self, rng: &mut ChaCha8Rng) -> Names {
        let mut pool: Vec<&str> = IDENTIFIERS
            .iter()
            .copied()
            .filter(|s| !self.vars.iter().any(|v| v == s))
            .collect();
        pool.shuffle(rng);
        let fresh = (0..self.vars.len())
            .map(|i| {
                pool.get(i)
                    .map_or_else(|| format!("w{i}"), |s| s.to_string())
            })
            .collect();
        let function = FUNCTION_NAMES
            .iter()
            .copied()
            .filter(|f| *f != self.function)
            .collect::<Vec<_>>()
            .choose(rng)
            .unwrap()
            .to_string();
        Names {
            function,
            vars: fresh,
        }
    }
}

struct Renderer<'a> {
    language: Language,
    style: Style,
    names: &'a Names,
    out: String,
    comment_at: Vec<bool>,
    line_no: usize,
}

impl Renderer<'_> {
    fn op(&self, sym: &str) -> String {
        if self.style.tight_operators {
            sym.to_string()
        } else {
            format!(" {sym} ")
        }
    }

    fn line(&mut self, depth: usize, text: &str) {
        let pad = " ".repeat(depth * self.style.indent);
        if self.style.comments && self.comment_at.get(self.line_no).copied().unwrap_or(false) {
            let marker = if self.language == Language::Python {
                "#"
            } else {
                "//"
            };
            self.out
                .push_str(&format!("{pad}{marker} step {}\n", self.line_no));
        }
        self.out.push_str(&pad);
        self.out.push_str(text);
        self.out.push('\n');
        if self.style.blank_lines && self.line_no % 4 == 3 {
            self.out.push('\n');
        }
        self.line_no += 1;
    }

    fn expr(&self, e: &Expr) -> String {
        match e {
            Expr::Var(v) => self.names.vars[*v].clone(),
            Expr::Const(c) => c.to_string(),
            Expr::Bin(op, l, r) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Mod => "%",
                };
                format!("({}{}{})", self.expr(l), self.op(sym), self.expr(r))
            }
            Expr::Call(f, args) => {
                let name = match (self.language, f) {
                    (Language::Python, Builtin::Max) => "max",
                    (Language::Python, Builtin::Min) => "min",
                    (Language::Python, Builtin::Abs) => "abs",
                    (_, Builtin::Max) => "Math.max",
                    (_, Builtin::Min) => "Math.min",
                    (_, Builtin::Abs) => "Math.abs",
                };
                let sep = if self.style.tight_operators {
                    ","
                } else {
                    ", "
                };
                let args: Vec<String> = args.iter().map(|a| self.expr(a)).collect();
                format!("{name}({})", args.join(sep))
            }
        }
    }

    fn cond(&self, c: &Cond) -> String {
        let sym = match c.op {
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        };
        format!(
            "{}{}{}",
            self.expr(&c.left),
            self.op(sym),
            self.expr(&c.right)
        )
    }

    fn aug(&self, op: BinOp) -> String {
        let sym = match op {
            BinOp::Add => "+=",
            BinOp::Sub => "-=",
            BinOp::Mul => "*=",
            BinOp::Mod => "%=",
        };
        self.op(sym)
    }

    fn program(&mut self, p: &Program) {
        let params: Vec<&str> = self.names.vars[..p.params]
            .iter()
            .map(String::as_str)
            .collect();
        match self.language {
            Language::Python => {
                let sep = if self.style.tight_operators {
                    ","
                } else {
                    ", "
                };
                self.line(
                    0,
                    &format!("def {}({}):", self.names.function, params.join(sep)),
                );
                for v in p.params..p.params + p.locals {
                    let text = format!("{}{}0", self.names.vars[v], self.op("="));
                    self.line(1, &text);
                }
            }
            _ => {
                let sep = if self.style.tight_operators {
                    ","
                } else {
                    ", "
                };
                let params: Vec<String> = params.iter().map(|p| format!("int {p}")).collect();
                let header = format!("static int {}({})", self.names.function, params.join(sep));
                self.open(0, &header);
                for v in p.params..p.params + p.locals {
                    let text = format!("int {}{}0;", self.names.vars[v], self.op("="));
                    self.line(1, &text);
                }
            }
        }
        self.block(&p.body, 1);
        let ret = self.expr(&p.ret);
        match self.language {
            Language::Python => self.line(1, &format!("return {ret}")),
            _ => {
                self.line(1, &format!("return {ret};"));
                self.line(0, "}");
            }
        }
    }

    /// Opens a Java block after `header`.
    fn open(&mut self, depth: usize, header: &str) {
        if self.style.brace_on_new_line {
            self.line(depth, header);
            self.line(depth, "{");
        } else {
            self.line(depth, &format!("{header} {{"));
        }
    }

    fn block(&mut self, stmts: &[Stmt], depth: usize) {
        for s in stmts {
            self.statement(s, depth);
        }
    }

    fn statement(&mut self, s: &Stmt, depth: usize) {
        let py = self.language == Language::Python;
        let end = if py { "" } else { ";" };
        match s {
            Stmt::Assign(v, e) => {
                let text = format!(
                    "{}{}{}{end}",
                    self.names.vars[*v],
                    self.op("="),
                    self.expr(e)
                );
                self.line(depth, &text);
            }
            Stmt::AugAssign(v, op, e) => {
                let text = format!(
                    "{}{}{}{end}",
                    self.names.vars[*v],
                    self.aug(*op),
                    self.expr(e)
                );
                self.line(depth, &text);
            }
            Stmt::Print(e) => {
                let f = if py { "print" } else { "System.out.println" };
                let text = format!("{f}({}){end}", self.expr(e));
                self.line(depth, &text);
            }
            Stmt::If(c, then, otherwise) => {
                let cond = self.cond(c);
                if py {
                    self.line(depth, &format!("if {cond}:"));
                    self.block(then, depth + 1);
                    if !otherwise.is_empty() {
                        self.line(depth, "else:");
                        self.block(otherwise, depth + 1);
                    }
                } else {
                    self.open(depth, &format!("if ({cond})"));
                    self.block(then, depth + 1);
                    if otherwise.is_empty() {
                        self.line(depth, "}");
                    } else {
                        self.line(depth, "}");
                        self.open(depth, "else");
                        self.block(otherwise, depth + 1);
                        self.line(depth, "}");
                    }
                }
            }
            Stmt::While(c, body) => {
                let cond = self.cond(c);
                if py {
                    self.line(depth, &format!("while {cond}:"));
                    self.block(body, depth + 1);
                } else {
                    self.open(depth, &format!("while ({cond})"));
                    self.block(body, depth + 1);
                    self.line(depth, "}");
                }
            }
            Stmt::For(v, bound, body) => {
                let name = self.names.vars[*v].clone();
                let bound = self.expr(bound);
                if py {
                    self.line(depth, &format!("for {name} in range({bound}):"));
                    self.block(body, depth + 1);
                } else {
                    let header = format!(
                        "for (int {name}{}0; {name}{}{bound}; {name}++)",
                        self.op("="),
                        self.op("<")
                    );
                    self.open(depth, &header);
                    self.block(body, depth + 1);
                    self.line(depth, "}");
                }
            }
        }
    }
}

fn render(
    language: Language,
    program: &Program,
    names: &Names,
    style: Style,
    rng: &mut ChaCha8Rng,
) -> String {
    let comment_at = (0..256)
        .map(|_| style.comments && rng.gen_bool(0.25))
        .collect();
    let mut r = Renderer {
        language,
        style,
        names,
        out: String::new(),
        comment_at,
        line_no: 0,
    };
    if style.comments {
        let marker = if language == Language::Python {
            "#"
        } else {
            "//"
        };
        r.out.push_str(&format!("{marker} {}\n", names.function));
    }
    r.program(program);
    r.out
}

// ---- statement-level CFGs ----

struct CfgBuilder {
    nodes: Vec<(u32, String)>,
    edges: Vec<(u32, u32)>,
}

impl CfgBuilder {
    fn node(&mut self, label: &str) -> u32 {
        let id = self.nodes.len() as u32 + 1;
        self.nodes.push((id, label.to_string()));
        id
    }

    fn edge(&mut self, from: u32, to: u32) {
        self.edges.push((from, to));
    }

    /// Links `preds` into the statements; returns the open exits.
    fn block(&mut self, stmts: &[Stmt], mut preds: Vec<u32>) -> Vec<u32> {
        for s in stmts {
            preds = self.statement(s, preds);
        }
        preds
    }

    fn link(&mut self, preds: &[u32], to: u32) {
        for &p in preds {
            self.edge(p, to);
        }
    }

    fn statement(&mut self, s: &Stmt, preds: Vec<u32>) -> Vec<u32> {
        match s {
            Stmt::Assign(..) | Stmt::AugAssign(..) | Stmt::Print(..) => {
                let label = match s {
                    Stmt::Assign(..) => "assign",
                    Stmt::AugAssign(..) => "augassign",
                    _ => "call",
                };
                let n = self.node(label);
                self.link(&preds, n);
                vec![n]
            }
            Stmt::If(_, then, otherwise) => {
                let n = self.node("if");
                self.link(&preds, n);
                let mut exits = self.block(then, vec![n]);
                if otherwise.is_empty() {
                    exits.push(n);
                } else {
                    exits.extend(self.block(otherwise, vec![n]));
                }
                exits
            }
            Stmt::While(_, body) | Stmt::For(_, _, body) => {
                let n = self.node(if matches!(s, Stmt::While(..)) {
                    "while"
                } else {
                    "for"
                });
                self.link(&preds, n);
                let back = self.block(body, vec![n]);
                self.link(&back, n);
                vec![n]
            }
        }
    }
}

fn program_cfg(sample_id: &str, program: &Program) -> FlowGraph {
    let mut b = CfgBuilder {
        nodes: Vec::new(),
        edges: Vec::new(),
    };
    let entry = b.node("entry");
    let mut preds = vec![entry];
    for _ in 0..program.locals {
        let n = b.node("declare");
        b.link(&preds, n);
        preds = vec![n];
    }
    let exits = b.block(&program.body, preds);
    let ret = b.node("return");
    b.link(&exits, ret);
    let exit = b.node("exit");
    b.edge(ret, exit);
    FlowGraph {
        sample_id: sample_id.to_string(),
        nodes: b.nodes,
        edges: b.edges,
    }
}

/// Generates `n_pairs` clone and `n_pairs` non-clone pairs (see module docs).
pub fn generate_synthetic_corpus(
    seed: u64,
    n_pairs: usize,
    language: Language,
) -> Result<Corpus, CorpusError> {
    if language == Language::C {
        return Err(CorpusError::UnsupportedLanguage(language));
    }
    if n_pairs == 0 {
        return Err(CorpusError::NoPairs);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tag = language.to_string().to_ascii_lowercase();
    let mut samples = Vec::with_capacity(4 * n_pairs);
    let mut pairs = Vec::with_capacity(2 * n_pairs);
    let mut cfgs = Vec::with_capacity(4 * n_pairs);
    let mut emit =
        |id: String, program: &Program, source: String, samples: &mut Vec<CodeSample>| {
            cfgs.push(program_cfg(&id, program));
            samples.push(CodeSample::new(id, language, source));
        };
    for i in 0..n_pairs {
        // Clones come from the same two templates as non-clones, so program size says
        // nothing about the pair label.
        let template = if (i / 2) % 2 == 0 { SMALL } else { LARGE };
        let program = Generator::program(&mut rng, template);
        let names = Names::pick(&mut rng, program.vars);
        let (id_a, id_b) = (format!("{tag}-c{i:04}-a"), format!("{tag}-c{i:04}-b"));
        let a = render(language, &program, &names, Style::PLAIN, &mut rng);
        let (b, clone_type) = if i % 2 == 0 {
            let renamed = names.renamed(&mut rng);
            (
                render(language, &program, &renamed, Style::PLAIN, &mut rng),
                CloneType::T2,
            )
        } else {
            let style = Style::reformatted(&mut rng);
            (
                render(language, &program, &names, style, &mut rng),
                CloneType::T1,
            )
        };
        emit(id_a.clone(), &program, a, &mut samples);
        emit(id_b.clone(), &program, b, &mut samples);
        pairs.push(ClonePair {
            id_a,
            id_b,
            is_clone: true,
            clone_type: Some(clone_type),
        });
    }
    for i in 0..n_pairs {
        let small = Generator::program(&mut rng, SMALL);
        let large = Generator::program(&mut rng, LARGE);
        let (id_a, id_b) = (format!("{tag}-n{i:04}-a"), format!("{tag}-n{i:04}-b"));
        let names_a = Names::pick(&mut rng, small.vars);
        let names_b = Names::pick(&mut rng, large.vars);
        let a = render(language, &small, &names_a, Style::PLAIN, &mut rng);
        let b = render(language, &large, &names_b, Style::PLAIN, &mut rng);
        // Alternate which side is the small program.
        let (first, second) = if i % 2 == 0 {
            ((a, small), (b, large))
        } else {
            ((b, large), (a, small))
        };
        emit(id_a.clone(), &first.1, first.0, &mut samples);
        emit(id_b.clone(), &second.1, second.0, &mut samples);
        pairs.push(ClonePair {
            id_a,
            id_b,
            is_clone: false,
            clone_type: None,
        });
    }
    Corpus::new(samples, pairs, Some(cfgs))
}

/// A random tree of exactly `nodes` nodes with labels drawn from `labels`.
pub fn random_tree(rng: &mut impl Rng, nodes: usize, labels: &[&str]) -> RawNode {
    assert!(nodes >= 1 && !labels.is_empty());
    // Random recursive tree: node k attaches to a uniformly chosen earlier node.
    let mut parent = vec![usize::MAX; nodes];
    for (k, p) in parent.iter_mut().enumerate().skip(1) {
        *p = rng.gen_range(0..k);
    }
    let mut kids: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    for k in 1..nodes {
        kids[parent[k]].push(k);
    }
    let names: Vec<&str> = (0..nodes).map(|_| *labels.choose(rng).unwrap()).collect();
    fn build(k: usize, kids: &[Vec<usize>], names: &[&str]) -> RawNode {
        RawNode::new(names[k])
            .with_children(kids[k].iter().map(|&c| build(c, kids, names)).collect())
    }
    build(0, &kids, &names)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_to_tree, SyntaxTree};

    #[test]
    fn smallest_java_corpus() {
        let corpus = generate_synthetic_corpus(7, 1, Language::Java).unwrap();
        assert_eq!(corpus.samples().len(), 4);
        assert_eq!(corpus.pairs().len(), 2);
        assert_eq!(corpus.pairs()[0].clone_type, Some(CloneType::T2));
        assert!(!corpus.pairs()[1].is_clone);
        assert_eq!(corpus.cfgs().unwrap().len(), 4);
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate_synthetic_corpus(7, 6, Language::Python).unwrap();
        let b = generate_synthetic_corpus(7, 6, Language::Python).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic_corpus(8, 6, Language::Python).unwrap();
        assert_ne!(a.samples(), c.samples());
    }

    #[test]
    fn c_is_unsupported() {
        assert!(matches!(
            generate_synthetic_corpus(1, 1, Language::C),
            Err(CorpusError::UnsupportedLanguage(_))
        ));
        assert!(matches!(
            generate_synthetic_corpus(1, 0, Language::Java),
            Err(CorpusError::NoPairs)
        ));
    }

    #[test]
    fn clones_share_structure() {
        for language in [Language::Java, Language::Python] {
            let corpus = generate_synthetic_corpus(11, 10, language).unwrap();
            for pair in corpus.clone_pairs() {
                let a = parse_to_tree(corpus.sample(&pair.id_a).unwrap()).unwrap();
                let b = parse_to_tree(corpus.sample(&pair.id_b).unwrap()).unwrap();
                assert!(
                    a.same_shape_and_labels(&b),
                    "{} vs {}",
                    pair.id_a,
                    pair.id_b
                );
                match pair.clone_type {
                    Some(CloneType::T1) => assert!(a.same_structure(&b)),
                    _ => assert!(!a.same_structure(&b)),
                }
                let (ga, gb) = (
                    corpus.cfg(&pair.id_a).unwrap(),
                    corpus.cfg(&pair.id_b).unwrap(),
                );
                assert_eq!((&ga.nodes, &ga.edges), (&gb.nodes, &gb.edges));
            }
        }
    }

    #[test]
    fn non_clones_differ_in_size() {
        let corpus = generate_synthetic_corpus(7, 10, Language::Java).unwrap();
        for pair in corpus.non_clone_pairs() {
            let a = parse_to_tree(corpus.sample(&pair.id_a).unwrap()).unwrap();
            let b = parse_to_tree(corpus.sample(&pair.id_b).unwrap()).unwrap();
            let (small, large) = if a.node_count() < b.node_count() {
                (a, b)
            } else {
                (b, a)
            };
            assert!(large.node_count() > 2 * small.node_count());
            assert!(large.depth() > small.depth());
        }
    }

    #[test]
    fn every_sample_parses() {
        for language in [Language::Java, Language::Python] {
            let corpus = generate_synthetic_corpus(7, 100, language).unwrap();
            assert_eq!(corpus.samples().len(), 400);
            for sample in corpus.samples() {
                if let Err(e) = parse_to_tree(sample) {
                    panic!("{e}\n{}", sample.source_text);
                }
            }
        }
    }

    #[test]
    fn random_tree_has_requested_size() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [1, 2, 17, 200] {
            let t = SyntaxTree::from_raw(random_tree(&mut rng, n, &["a", "b", "c"]));
            assert_eq!(t.node_count(), n);
        }
    }
}
