//! AST for the supported Verilog subset.
//!
//! Declarations are normalized at parse time: ports always carry their
//! direction and width, `wire t = e;` becomes a net plus a continuous
//! assignment, and parameter values are folded to constants.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Dense node id handed out by the parser; indexes [`SourceMap::positions`].
pub type NodeId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Input,
    Output,
    Inout,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Input => "input",
            Direction::Output => "output",
            Direction::Inout => "inout",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Port {
    pub name: String,
    pub direction: Direction,
    pub width: u32,
    /// `output reg` ports are procedurally assigned.
    pub is_reg: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub value: Literal,
    /// `localparam` rather than `parameter`.
    pub local: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NetKind {
    Wire,
    Reg,
    RegArray,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Net {
    pub name: String,
    pub kind: NetKind,
    pub width: u32,
    /// Element count; present iff `kind == RegArray`.
    pub depth: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModuleAst {
    pub name: String,
    pub ports: Vec<Port>,
    pub params: Vec<Param>,
    pub nets: Vec<Net>,
    pub items: Vec<Item>,
}

impl ModuleAst {
    pub fn new(name: impl Into<String>) -> Self {
        ModuleAst {
            name: name.into(),
            ports: Vec::new(),
            params: Vec::new(),
            nets: Vec::new(),
            items: Vec::new(),
        }
    }

    pub fn port(&self, name: &str) -> Option<&Port> {
        self.ports.iter().find(|p| p.name == name)
    }

    pub fn net(&self, name: &str) -> Option<&Net> {
        self.nets.iter().find(|n| n.name == name)
    }

    pub fn param(&self, name: &str) -> Option<&Param> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn inputs(&self) -> impl Iterator<Item = &Port> {
        self.ports.iter().filter(|p| p.direction == Direction::Input)
    }

    pub fn outputs(&self) -> impl Iterator<Item = &Port> {
        self.ports.iter().filter(|p| p.direction != Direction::Input)
    }

    /// Width of a port or net, if declared.
    pub fn signal_width(&self, name: &str) -> Option<u32> {
        self.port(name)
            .map(|p| p.width)
            .or_else(|| self.net(name).map(|n| n.width))
    }

    /// Every identifier declared in the module (ports, params, nets).
    pub fn declared_names(&self) -> impl Iterator<Item = &str> {
        self.ports
            .iter()
            .map(|p| p.name.as_str())
            .chain(self.params.iter().map(|p| p.name.as_str()))
            .chain(self.nets.iter().map(|n| n.name.as_str()))
    }

    pub fn instances(&self) -> impl Iterator<Item = &Instance> {
        self.items.iter().filter_map(|it| match it {
            Item::Instance(inst) => Some(inst),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Item {
    Assign(ContinuousAssign),
    Always(AlwaysBlock),
    Instance(Instance),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ContinuousAssign {
    pub lhs: LValue,
    pub rhs: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AlwaysBlock {
    pub sensitivity: Sensitivity,
    pub body: Stmt,
}

impl AlwaysBlock {
    pub fn is_edge_triggered(&self) -> bool {
        matches!(self.sensitivity, Sensitivity::Edges(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sensitivity {
    /// `@(*)`, `@*`, or a plain (non-edge) signal list.
    Star,
    Edges(Vec<EdgeEvent>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Edge {
    Posedge,
    Negedge,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EdgeEvent {
    pub edge: Edge,
    pub signal: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Instance {
    pub module: String,
    pub name: String,
    pub connections: Connections,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Connections {
    Named(Vec<NamedConnection>),
    Positional(Vec<Option<Expr>>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NamedConnection {
    pub port: String,
    pub expr: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stmt {
    Block(Vec<Stmt>),
    Assign {
        lhs: LValue,
        rhs: Expr,
        blocking: bool,
    },
    If {
        cond: Expr,
        then_branch: Box<Stmt>,
        else_branch: Option<Box<Stmt>>,
    },
    Case(CaseStmt),
    Null,
}

impl Stmt {
    pub fn assign(lhs: LValue, rhs: Expr, blocking: bool) -> Stmt {
        Stmt::Assign { lhs, rhs, blocking }
    }

    /// Visit this statement and every nested statement, pre-order.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Stmt)) {
        f(self);
        match self {
            Stmt::Block(stmts) => stmts.iter().for_each(|s| s.walk(f)),
            Stmt::If {
                then_branch,
                else_branch,
                ..
            } => {
                then_branch.walk(f);
                if let Some(e) = else_branch {
                    e.walk(f);
                }
            }
            Stmt::Case(case) => {
                for item in &case.items {
                    item.body.walk(f);
                }
                if let Some(d) = &case.default {
                    d.walk(f);
                }
            }
            Stmt::Assign { .. } | Stmt::Null => {}
        }
    }

    pub fn walk_mut(&mut self, f: &mut dyn FnMut(&mut Stmt)) {
        f(self);
        match self {
            Stmt::Block(stmts) => stmts.iter_mut().for_each(|s| s.walk_mut(f)),
            Stmt::If {
                then_branch,
                else_branch,
                ..
            } => {
                then_branch.walk_mut(f);
                if let Some(e) = else_branch {
                    e.walk_mut(f);
                }
            }
            Stmt::Case(case) => {
                for item in &mut case.items {
                    item.body.walk_mut(f);
                }
                if let Some(d) = &mut case.default {
                    d.walk_mut(f);
                }
            }
            Stmt::Assign { .. } | Stmt::Null => {}
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Stmt::Null => true,
            Stmt::Block(stmts) => stmts.iter().all(Stmt::is_empty),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseKind {
    Case,
    Casez,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CaseStmt {
    pub kind: CaseKind,
    pub selector: Expr,
    pub items: Vec<CaseItem>,
    pub default: Option<Box<Stmt>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CaseItem {
    pub labels: Vec<Expr>,
    pub body: Stmt,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LValue {
    Ident(String),
    /// Bit-select of a vector or element of a reg array.
    Index { name: String, index: Expr },
    Slice { name: String, msb: u32, lsb: u32 },
    Concat(Vec<LValue>),
}

impl LValue {
    pub fn ident(name: impl Into<String>) -> LValue {
        LValue::Ident(name.into())
    }

    /// Base names written by this target.
    pub fn targets(&self) -> Vec<&str> {
        match self {
            LValue::Ident(n) | LValue::Index { name: n, .. } | LValue::Slice { name: n, .. } => {
                vec![n.as_str()]
            }
            LValue::Concat(parts) => parts.iter().flat_map(|p| p.targets()).collect(),
        }
    }

    /// True when the whole of a single named signal is written.
    pub fn whole_ident(&self) -> Option<&str> {
        match self {
            LValue::Ident(n) => Some(n),
            _ => None,
        }
    }

    /// Expressions read while computing the target location (indices).
    pub fn index_exprs(&self) -> Vec<&Expr> {
        match self {
            LValue::Index { index, .. } => vec![index],
            LValue::Concat(parts) => parts.iter().flat_map(|p| p.index_exprs()).collect(),
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Radix {
    Binary,
    Octal,
    Decimal,
    Hex,
}

/// Integer literal. Two-valued except for `?` don't-care bits, which are
/// only legal as casez labels.
///
/// Equality and hashing ignore the radix: `4'hA` and `4'd10` are the same
/// literal.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Literal {
    /// `None` for unsized literals (32 bits by Verilog rules).
    pub width: Option<u32>,
    pub value: u64,
    pub dont_care: u64,
    pub radix: Radix,
    /// Written with a base prefix (`'d5`) rather than bare digits.
    pub based: bool,
}

impl PartialEq for Literal {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width && self.value == other.value && self.dont_care == other.dont_care
    }
}

impl Eq for Literal {}

impl std::hash::Hash for Literal {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.width.hash(state);
        self.value.hash(state);
        self.dont_care.hash(state);
    }
}

impl Literal {
    pub const UNSIZED_WIDTH: u32 = 32;

    pub fn plain(value: u64) -> Literal {
        Literal {
            width: None,
            value,
            dont_care: 0,
            radix: Radix::Decimal,
            based: false,
        }
    }

    pub fn sized(width: u32, value: u64) -> Literal {
        Literal {
            width: Some(width),
            value: value & mask(width),
            dont_care: 0,
            radix: Radix::Decimal,
            based: true,
        }
    }

    /// Unsized literals are 32 bits, or wider if the value needs it.
    pub fn self_width(&self) -> u32 {
        self.width
            .unwrap_or_else(|| Self::UNSIZED_WIDTH.max(bit_length(self.value)))
    }

    /// Minimal bit length of the value, used where unsized literals should
    /// not inflate widths (feature extraction, cost).
    pub fn effective_width(&self) -> u32 {
        match self.width {
            Some(w) => w,
            None => bit_length(self.value).max(1),
        }
    }
}

pub fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

pub fn bit_length(v: u64) -> u32 {
    64 - v.leading_zeros()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnaryOp {
    Not,
    LogicNot,
    RedAnd,
    RedOr,
    RedXor,
    Neg,
}

impl UnaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnaryOp::Not => "~",
            UnaryOp::LogicNot => "!",
            UnaryOp::RedAnd => "&",
            UnaryOp::RedOr => "|",
            UnaryOp::RedXor => "^",
            UnaryOp::Neg => "-",
        }
    }

    /// Result is a single bit and the operand is self-determined.
    pub fn is_reduction(self) -> bool {
        matches!(
            self,
            UnaryOp::LogicNot | UnaryOp::RedAnd | UnaryOp::RedOr | UnaryOp::RedXor
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Shl,
    Shr,
    And,
    Or,
    Xor,
    LogicAnd,
    LogicOr,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Mod => "%",
            BinaryOp::Shl => "<<",
            BinaryOp::Shr => ">>",
            BinaryOp::And => "&",
            BinaryOp::Or => "|",
            BinaryOp::Xor => "^",
            BinaryOp::LogicAnd => "&&",
            BinaryOp::LogicOr => "||",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
        }
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::Mul | BinaryOp::Div | BinaryOp::Mod => 10,
            BinaryOp::Add | BinaryOp::Sub => 9,
            BinaryOp::Shl | BinaryOp::Shr => 8,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => 7,
            BinaryOp::Eq | BinaryOp::Ne => 6,
            BinaryOp::And => 5,
            BinaryOp::Xor => 4,
            BinaryOp::Or => 3,
            BinaryOp::LogicAnd => 2,
            BinaryOp::LogicOr => 1,
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinaryOp::Eq | BinaryOp::Ne | BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge
        )
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinaryOp::LogicAnd | BinaryOp::LogicOr)
    }

    pub fn is_shift(self) -> bool {
        matches!(self, BinaryOp::Shl | BinaryOp::Shr)
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(
            self,
            BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div | BinaryOp::Mod
        )
    }

    pub fn is_commutative(self) -> bool {
        matches!(
            self,
            BinaryOp::Add
                | BinaryOp::Mul
                | BinaryOp::And
                | BinaryOp::Or
                | BinaryOp::Xor
                | BinaryOp::Eq
                | BinaryOp::Ne
                | BinaryOp::LogicAnd
                | BinaryOp::LogicOr
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Expr {
    Ident(String),
    Literal(Literal),
    /// Bit-select of a vector, or element read of a reg array.
    Index {
        base: Box<Expr>,
        index: Box<Expr>,
    },
    /// Constant part-select `base[msb:lsb]`.
    Slice {
        base: Box<Expr>,
        msb: u32,
        lsb: u32,
    },
    Concat(Vec<Expr>),
    Repeat {
        count: u32,
        parts: Vec<Expr>,
    },
    Unary {
        op: UnaryOp,
        operand: Box<Expr>,
    },
    Binary {
        op: BinaryOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Ternary {
        cond: Box<Expr>,
        then_expr: Box<Expr>,
        else_expr: Box<Expr>,
    },
}

impl Expr {
    pub fn ident(name: impl Into<String>) -> Expr {
        Expr::Ident(name.into())
    }

    pub fn lit(value: u64) -> Expr {
        Expr::Literal(Literal::plain(value))
    }

    pub fn sized(width: u32, value: u64) -> Expr {
        Expr::Literal(Literal::sized(width, value))
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn unary(op: UnaryOp, operand: Expr) -> Expr {
        Expr::Unary {
            op,
            operand: Box::new(operand),
        }
    }

    pub fn ternary(cond: Expr, then_expr: Expr, else_expr: Expr) -> Expr {
        Expr::Ternary {
            cond: Box::new(cond),
            then_expr: Box::new(then_expr),
            else_expr: Box::new(else_expr),
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Expr::Literal(l) => Some(l),
            _ => None,
        }
    }

    pub fn as_ident(&self) -> Option<&str> {
        match self {
            Expr::Ident(n) => Some(n),
            _ => None,
        }
    }

    /// Immediate subexpressions in evaluation order.
    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Ident(_) | Expr::Literal(_) => Vec::new(),
            Expr::Index { base, index } => vec![base, index],
            Expr::Slice { base, .. } => vec![base],
            Expr::Concat(parts) | Expr::Repeat { parts, .. } => parts.iter().collect(),
            Expr::Unary { operand, .. } => vec![operand],
            Expr::Binary { lhs, rhs, .. } => vec![lhs, rhs],
            Expr::Ternary {
                cond,
                then_expr,
                else_expr,
            } => vec![cond, then_expr, else_expr],
        }
    }

    pub fn children_mut(&mut self) -> Vec<&mut Expr> {
        match self {
            Expr::Ident(_) | Expr::Literal(_) => Vec::new(),
            Expr::Index { base, index } => vec![base, index],
            Expr::Slice { base, .. } => vec![base],
            Expr::Concat(parts) | Expr::Repeat { parts, .. } => parts.iter_mut().collect(),
            Expr::Unary { operand, .. } => vec![operand],
            Expr::Binary { lhs, rhs, .. } => vec![lhs, rhs],
            Expr::Ternary {
                cond,
                then_expr,
                else_expr,
            } => vec![cond, then_expr, else_expr],
        }
    }

    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    /// Post-order mutable traversal.
    pub fn walk_mut_post(&mut self, f: &mut dyn FnMut(&mut Expr)) {
        for c in self.children_mut() {
            c.walk_mut_post(f);
        }
        f(self);
    }

    /// Identifiers read by the expression (with repetition).
    pub fn idents(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let Expr::Ident(n) = e {
                out.push(n.as_str());
            }
        });
        out
    }

    pub fn mentions(&self, name: &str) -> bool {
        let mut found = false;
        self.walk(&mut |e| {
            if let Expr::Ident(n) = e {
                found |= n == name;
            }
        });
        found
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_| n += 1);
        n
    }

    /// True for unary/binary/ternary/select nodes.
    pub fn is_operator(&self) -> bool {
        matches!(
            self,
            Expr::Unary { .. }
                | Expr::Binary { .. }
                | Expr::Ternary { .. }
                | Expr::Index { .. }
                | Expr::Slice { .. }
        )
    }

    pub fn rename(&mut self, from: &str, to: &str) {
        self.walk_mut_post(&mut |e| {
            if let Expr::Ident(n) = e {
                if n == from {
                    *n = to.to_string();
                }
            }
        });
    }
}

/// A parsed design: every module from one source, plus positions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignAst {
    pub modules: Vec<ModuleAst>,
    pub source_map: SourceMap,
}

impl DesignAst {
    pub fn from_modules(modules: Vec<ModuleAst>) -> Self {
        DesignAst {
            modules,
            source_map: SourceMap::default(),
        }
    }

    pub fn module(&self, name: &str) -> Option<&ModuleAst> {
        self.modules.iter().find(|m| m.name == name)
    }

    pub fn module_mut(&mut self, name: &str) -> Option<&mut ModuleAst> {
        self.modules.iter_mut().find(|m| m.name == name)
    }

    /// Instantiated module names with no definition in this design.
    pub fn external_modules(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .modules
            .iter()
            .flat_map(|m| m.instances())
            .filter(|i| self.module(&i.module).is_none())
            .map(|i| i.module.clone())
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// Modules never instantiated by another module of the design. The last
    /// one in source order is the default top.
    pub fn top_candidates(&self) -> Vec<&str> {
        self.modules
            .iter()
            .filter(|m| {
                !self
                    .modules
                    .iter()
                    .flat_map(|o| o.instances())
                    .any(|i| i.module == m.name)
            })
            .map(|m| m.name.as_str())
            .collect()
    }

    pub fn default_top(&self) -> Option<&str> {
        self.top_candidates().last().copied()
    }
}

/// Source position of a parsed node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourcePos {
    pub file: String,
    pub line: u32,
    pub column: u32,
}

/// Positions of modules and module items, indexed by [`NodeId`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceMap {
    pub positions: Vec<SourcePos>,
    /// `(module index, item index or None for the module header)` per node.
    pub nodes: Vec<(usize, Option<usize>)>,
}

impl SourceMap {
    pub fn push(&mut self, pos: SourcePos, module: usize, item: Option<usize>) -> NodeId {
        self.positions.push(pos);
        self.nodes.push((module, item));
        (self.positions.len() - 1) as NodeId
    }

    pub fn get(&self, id: NodeId) -> Option<&SourcePos> {
        self.positions.get(id as usize)
    }

    pub fn item_pos(&self, module: usize, item: usize) -> Option<&SourcePos> {
        self.nodes
            .iter()
            .position(|&(m, i)| m == module && i == Some(item))
            .and_then(|idx| self.positions.get(idx))
    }
}

impl Item {
    /// Every expression in the item, including lvalue indices, case
    /// labels and instance connections.
    pub fn for_each_expr<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        match self {
            Item::Assign(a) => {
                a.lhs.index_exprs().into_iter().for_each(&mut *f);
                f(&a.rhs);
            }
            Item::Always(a) => a.body.walk(&mut |s| s.for_each_own_expr(f)),
            Item::Instance(i) => match &i.connections {
                Connections::Named(c) => c.iter().filter_map(|c| c.expr.as_ref()).for_each(f),
                Connections::Positional(c) => c.iter().flatten().for_each(f),
            },
        }
    }

    pub fn for_each_expr_mut(&mut self, f: &mut dyn FnMut(&mut Expr)) {
        match self {
            Item::Assign(a) => {
                a.lhs.for_each_index_mut(f);
                f(&mut a.rhs);
            }
            Item::Always(a) => a.body.walk_mut(&mut |s| s.for_each_own_expr_mut(f)),
            Item::Instance(i) => match &mut i.connections {
                Connections::Named(c) => c.iter_mut().filter_map(|c| c.expr.as_mut()).for_each(f),
                Connections::Positional(c) => c.iter_mut().flatten().for_each(f),
            },
        }
    }
}

impl LValue {
    pub fn for_each_index_mut(&mut self, f: &mut dyn FnMut(&mut Expr)) {
        match self {
            LValue::Index { index, .. } => f(index),
            LValue::Concat(parts) => parts.iter_mut().for_each(|p| p.for_each_index_mut(f)),
            _ => {}
        }
    }
}

impl Stmt {
    /// Expressions held directly by this statement (not by nested ones).
    pub fn for_each_own_expr<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        match self {
            Stmt::Assign { lhs, rhs, .. } => {
                lhs.index_exprs().into_iter().for_each(&mut *f);
                f(rhs);
            }
            Stmt::If { cond, .. } => f(cond),
            Stmt::Case(c) => {
                f(&c.selector);
                for it in &c.items {
                    it.labels.iter().for_each(&mut *f);
                }
            }
            Stmt::Block(_) | Stmt::Null => {}
        }
    }

    pub fn for_each_own_expr_mut(&mut self, f: &mut dyn FnMut(&mut Expr)) {
        match self {
            Stmt::Assign { lhs, rhs, .. } => {
                lhs.for_each_index_mut(f);
                f(rhs);
            }
            Stmt::If { cond, .. } => f(cond),
            Stmt::Case(c) => {
                f(&mut c.selector);
                for it in &mut c.items {
                    it.labels.iter_mut().for_each(&mut *f);
                }
            }
            Stmt::Block(_) | Stmt::Null => {}
        }
    }
}

impl ModuleAst {
    pub fn for_each_expr<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        for item in &self.items {
            item.for_each_expr(f);
        }
    }

    pub fn for_each_expr_mut(&mut self, f: &mut dyn FnMut(&mut Expr)) {
        for item in &mut self.items {
            item.for_each_expr_mut(f);
        }
    }
}
