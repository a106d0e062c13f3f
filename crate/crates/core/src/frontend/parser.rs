use std::collections::{HashMap, HashSet};

use super::ast::*;
use super::eval::{eval, ValueEnv};
use super::lexer::{Tok, Token};
use super::width::{self_width, ModuleScope, WidthEnv};
use super::ParseError;

type PResult<T> = Result<T, ParseError>;

const KEYWORDS: &[&str] = &[
    "module", "endmodule", "input", "output", "inout", "wire", "reg", "parameter", "localparam",
    "assign", "always", "begin", "end", "if", "else", "case", "casez", "casex", "endcase",
    "default", "posedge", "negedge", "or",
];

/// Keywords outside the subset, mapped to the construct they introduce.
const UNSUPPORTED: &[(&str, &str)] = &[
    ("initial", "initial"),
    ("generate", "generate"),
    ("endgenerate", "generate"),
    ("genvar", "generate"),
    ("function", "function"),
    ("endfunction", "function"),
    ("task", "task"),
    ("endtask", "task"),
    ("integer", "integer"),
    ("real", "real"),
    ("realtime", "real"),
    ("time", "time"),
    ("signed", "signed"),
    ("unsigned", "unsigned"),
    ("for", "for"),
    ("while", "while"),
    ("repeat", "repeat"),
    ("forever", "forever"),
    ("always_ff", "always_ff"),
    ("always_comb", "always_comb"),
    ("always_latch", "always_latch"),
    ("fork", "fork"),
    ("join", "fork"),
    ("wait", "wait"),
    ("event", "event"),
    ("force", "force"),
    ("release", "release"),
    ("assign_deassign", "deassign"),
    ("deassign", "deassign"),
    ("disable", "disable"),
    ("defparam", "defparam"),
    ("specify", "specify"),
    ("primitive", "primitive"),
    ("supply0", "supply"),
    ("supply1", "supply"),
    ("tri", "tri"),
    ("logic", "logic"),
    ("macromodule", "macromodule"),
    ("casex", "casex"),
];

fn unsupported_keyword(word: &str) -> Option<&'static str> {
    UNSUPPORTED.iter().find(|(k, _)| *k == word).map(|(_, c)| *c)
}

fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word) || unsupported_keyword(word).is_some()
}

pub struct Parser {
    toks: Vec<Token>,
    pos: usize,
    file: String,
    source_map: SourceMap,
    allow_dont_care: bool,
    /// Parameters of the module being parsed, for constant expressions.
    params: ParamEnv,
}

#[derive(Default)]
struct ParamEnv(HashMap<String, Literal>);

impl ValueEnv for ParamEnv {
    fn value_of(&self, name: &str) -> Option<u64> {
        self.0.get(name).map(|l| l.value)
    }
}

impl WidthEnv for ParamEnv {
    fn width_of(&self, name: &str) -> Option<u32> {
        self.0.get(name).map(|l| l.self_width())
    }
}

/// Declarations collected while a module body is parsed.
#[derive(Default)]
struct ModState {
    ports: HashMap<String, usize>,
    /// Non-ANSI header ports still waiting for a direction declaration.
    undirected: HashMap<String, (u32, u32)>,
    nets: HashMap<String, usize>,
    uses: Vec<(String, u32, u32)>,
    item_pos: Vec<(usize, SourcePos)>,
}


impl Parser {
    pub fn new(toks: Vec<Token>, file: &str) -> Self {
        Parser {
            toks,
            pos: 0,
            file: file.to_string(),
            source_map: SourceMap::default(),
            allow_dont_care: false,
            params: ParamEnv::default(),
        }
    }

    fn tok(&self) -> &Token {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    fn peek(&self) -> &Tok {
        &self.tok().tok
    }

    fn bump(&mut self) -> Token {
        let t = self.tok().clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> SourcePos {
        SourcePos {
            file: self.file.clone(),
            line: self.tok().line,
            column: self.tok().col,
        }
    }

    fn err_at(&self, t: &Token, msg: impl Into<String>) -> ParseError {
        ParseError::new(&self.file, t.line, t.col, msg)
    }

    fn err_here(&self, msg: impl Into<String>) -> ParseError {
        self.err_at(self.tok(), msg)
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        let t = self.tok();
        if let Tok::Ident(w) = &t.tok {
            if let Some(c) = unsupported_keyword(w) {
                return self.unsupported_err(t, c);
            }
        }
        if let Tok::System(s) = &t.tok {
            return self
                .err_at(t, format!("system task `${s}` is not supported"))
                .unsupported("system task");
        }
        if matches!(t.tok, Tok::Sym("#")) {
            return self
                .err_at(t, "delays are not supported")
                .unsupported("delay");
        }
        self.err_at(t, format!("unexpected {}", t.tok.describe()))
            .expecting(expected.iter().map(|s| s.to_string()).collect())
    }

    fn unsupported_err(&self, t: &Token, construct: &str) -> ParseError {
        self.err_at(t, format!("`{construct}` is not supported"))
            .unsupported(construct)
    }

    fn at_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.at_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.unexpected(&[&format!("`{s}`")]))
        }
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.unexpected(&[&format!("`{kw}`")]))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(w) if !is_keyword(&w) => {
                self.bump();
                Ok(w)
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    pub fn design(mut self) -> PResult<DesignAst> {
        let mut modules = Vec::new();
        let mut names = HashSet::new();
        while !matches!(self.peek(), Tok::Eof) {
            if !self.at_kw("module") {
                return Err(self.unexpected(&["`module`"]));
            }
            let t = self.tok().clone();
            let m = self.module(modules.len())?;
            if !names.insert(m.name.clone()) {
                return Err(self.err_at(&t, format!("module `{}` defined twice", m.name)));
            }
            modules.push(m);
        }
        Ok(DesignAst {
            modules,
            source_map: self.source_map,
        })
    }

    fn module(&mut self, index: usize) -> PResult<ModuleAst> {
        let header = self.here();
        self.expect_kw("module")?;
        let name = self.ident()?;
        let mut m = ModuleAst::new(name);
        let mut st = ModState::default();
        self.params = ParamEnv::default();
        if self.eat_sym("#") {
            self.expect_sym("(")?;
            if !self.at_sym(")") {
                loop {
                    self.eat_kw("parameter");
                    self.param_assign(&mut m, &mut st, false)?;
                    if !self.eat_sym(",") {
                        break;
                    }
                }
            }
            self.expect_sym(")")?;
        }
        if self.eat_sym("(") {
            if !self.at_sym(")") {
                if self.at_kw("input") || self.at_kw("output") || self.at_kw("inout") {
                    self.ansi_ports(&mut m, &mut st)?;
                } else {
                    loop {
                        let t = self.tok().clone();
                        let n = self.ident()?;
                        if st.ports.contains_key(&n) {
                            return Err(self.err_at(&t, format!("duplicate port `{n}`")));
                        }
                        st.ports.insert(n.clone(), m.ports.len());
                        st.undirected.insert(n.clone(), (t.line, t.col));
                        m.ports.push(Port {
                            name: n,
                            direction: Direction::Input,
                            width: 1,
                            is_reg: false,
                        });
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                }
            }
            self.expect_sym(")")?;
        }
        self.expect_sym(";")?;
        while !self.at_kw("endmodule") {
            if matches!(self.peek(), Tok::Eof) {
                return Err(self.unexpected(&["`endmodule`"]));
            }
            self.module_item(&mut m, &mut st)?;
        }
        self.bump();
        if let Some((n, (line, col))) = st.undirected.iter().min_by_key(|(_, p)| **p) {
            return Err(ParseError::new(
                &self.file,
                *line,
                *col,
                format!("port `{n}` has no direction declaration"),
            ));
        }
        self.validate(&m, &st)?;
        self.source_map.push(header, index, None);
        for (item, pos) in std::mem::take(&mut st.item_pos) {
            self.source_map.push(pos, index, Some(item));
        }
        Ok(m)
    }

    fn validate(&self, m: &ModuleAst, st: &ModState) -> PResult<()> {
        let scope = ModuleScope::new(m);
        for (n, line, col) in &st.uses {
            if !scope.contains(n) {
                return Err(ParseError::new(
                    &self.file,
                    *line,
                    *col,
                    format!("undeclared identifier `{n}`"),
                ));
            }
        }
        for (idx, item) in m.items.iter().enumerate() {
            let mut problem: Option<String> = None;
            item.for_each_expr(&mut |e| {
                if problem.is_none() {
                    problem = check_tree(e, &scope);
                }
            });
            if let Some(p) = problem {
                let pos = st
                    .item_pos
                    .iter()
                    .find(|(i, _)| *i == idx)
                    .map(|(_, p)| (p.line, p.column))
                    .unwrap_or((1, 1));
                return Err(ParseError::new(&self.file, pos.0, pos.1, p));
            }
        }
        Ok(())
    }

    fn const_expr(&mut self) -> PResult<u64> {
        let t = self.tok().clone();
        let e = self.expr_with_uses(&mut Vec::new())?;
        self.const_value(&e, &t)
    }

    fn const_value(&self, e: &Expr, t: &Token) -> PResult<u64> {
        eval(e, 0, &self.params).ok_or_else(|| self.err_at(t, "expected a constant expression"))
    }

    fn range(&mut self) -> PResult<Option<u32>> {
        if !self.at_sym("[") {
            return Ok(None);
        }
        let t = self.bump();
        let msb = self.const_expr()?;
        self.expect_sym(":")?;
        let lsb = self.const_expr()?;
        self.expect_sym("]")?;
        if lsb != 0 {
            return Err(self
                .err_at(&t, "only [msb:0] ranges are supported")
                .unsupported("non-zero-based range"));
        }
        if msb >= 64 {
            return Err(self
                .err_at(&t, "signals wider than 64 bits are not supported")
                .unsupported("wide signal"));
        }
        Ok(Some(msb as u32 + 1))
    }

    fn array_range(&mut self) -> PResult<Option<u32>> {
        if !self.at_sym("[") {
            return Ok(None);
        }
        let t = self.bump();
        let a = self.const_expr()?;
        self.expect_sym(":")?;
        let b = self.const_expr()?;
        self.expect_sym("]")?;
        if a.min(b) != 0 {
            return Err(self.err_at(&t, "array ranges must start at 0"));
        }
        if a.max(b) >= 1 << 20 {
            return Err(self.err_at(&t, "array too deep"));
        }
        if self.at_sym("[") {
            return Err(self
                .err_at(self.tok(), "multi-dimensional arrays are not supported")
                .unsupported("multi-dimensional array"));
        }
        Ok(Some(a.max(b) as u32 + 1))
    }

    fn param_assign(&mut self, m: &mut ModuleAst, st: &mut ModState, local: bool) -> PResult<()> {
        let range = self.range()?;
        let t = self.tok().clone();
        let name = self.ident()?;
        self.check_fresh(&t, &name, st)?;
        self.expect_sym("=")?;
        let et = self.tok().clone();
        let mut uses = Vec::new();
        let e = self.expr_with_uses(&mut uses)?;
        let v = eval(&e, range.unwrap_or(0), &self.params)
            .ok_or_else(|| self.err_at(&et, "parameter value must be constant"))?;
        let value = match (range, &e) {
            (Some(w), _) => Literal::sized(w, v),
            (None, Expr::Literal(l)) => *l,
            (None, _) => Literal::plain(v),
        };
        self.params.0.insert(name.clone(), value);
        m.params.push(Param { name, value, local });
        Ok(())
    }

    fn check_fresh(&self, t: &Token, name: &str, st: &ModState) -> PResult<()> {
        if self.params.0.contains_key(name) || st.nets.contains_key(name) || st.ports.contains_key(name)
        {
            return Err(self.err_at(t, format!("`{name}` declared twice")));
        }
        Ok(())
    }

    fn ansi_ports(&mut self, m: &mut ModuleAst, st: &mut ModState) -> PResult<()> {
        let mut dir = Direction::Input;
        let mut width = 1;
        let mut is_reg = false;
        loop {
            let d = if self.eat_kw("input") {
                Some(Direction::Input)
            } else if self.eat_kw("output") {
                Some(Direction::Output)
            } else if self.eat_kw("inout") {
                Some(Direction::Inout)
            } else {
                None
            };
            if let Some(d) = d {
                dir = d;
                is_reg = false;
                if self.at_kw("reg") {
                    if d == Direction::Input {
                        return Err(self.err_here("input ports cannot be `reg`"));
                    }
                    self.bump();
                    is_reg = true;
                } else {
                    self.eat_kw("wire");
                }
                width = self.range()?.unwrap_or(1);
            }
            let t = self.tok().clone();
            let name = self.ident()?;
            self.check_fresh(&t, &name, st)?;
            st.ports.insert(name.clone(), m.ports.len());
            m.ports.push(Port {
                name,
                direction: dir,
                width,
                is_reg,
            });
            if !self.eat_sym(",") {
                return Ok(());
            }
        }
    }

    fn module_item(&mut self, m: &mut ModuleAst, st: &mut ModState) -> PResult<()> {
        let pos = self.here();
        let t = self.tok().clone();
        let word = match &t.tok {
            Tok::Ident(w) => w.clone(),
            _ => return Err(self.unexpected(&["module item"])),
        };
        match word.as_str() {
            "input" | "output" | "inout" => self.port_decl(m, st),
            "wire" => self.wire_decl(m, st, pos),
            "reg" => self.reg_decl(m, st),
            "parameter" | "localparam" => {
                self.bump();
                loop {
                    self.param_assign(m, st, word == "localparam")?;
                    if !self.eat_sym(",") {
                        break;
                    }
                }
                self.expect_sym(";")
            }
            "assign" => {
                self.bump();
                if self.at_sym("#") {
                    return Err(self.unexpected(&[]));
                }
                loop {
                    let lhs = self.lvalue(st)?;
                    self.expect_sym("=")?;
                    let rhs = self.expr(st)?;
                    st.item_pos.push((m.items.len(), pos.clone()));
                    m.items.push(Item::Assign(ContinuousAssign { lhs, rhs }));
                    if !self.eat_sym(",") {
                        break;
                    }
                }
                self.expect_sym(";")
            }
            "always" => {
                self.bump();
                let sensitivity = self.sensitivity()?;
                let body = self.stmt(st)?;
                st.item_pos.push((m.items.len(), pos));
                m.items.push(Item::Always(AlwaysBlock { sensitivity, body }));
                Ok(())
            }
            w if unsupported_keyword(w).is_some() => Err(self.unexpected(&[])),
            w if is_keyword(w) => Err(self.unexpected(&["module item"])),
            _ => self.instantiation(m, st, pos),
        }
    }

    fn port_decl(&mut self, m: &mut ModuleAst, st: &mut ModState) -> PResult<()> {
        let dt = self.bump();
        let dir = match &dt.tok {
            Tok::Ident(w) if w == "input" => Direction::Input,
            Tok::Ident(w) if w == "output" => Direction::Output,
            _ => Direction::Inout,
        };
        let is_reg = if self.eat_kw("reg") {
            if dir == Direction::Input {
                return Err(self.err_at(&dt, "input ports cannot be `reg`"));
            }
            true
        } else {
            self.eat_kw("wire");
            false
        };
        let width = self.range()?.unwrap_or(1);
        loop {
            let t = self.tok().clone();
            let name = self.ident()?;
            if st.undirected.remove(&name).is_none() {
                return Err(self.err_at(&t, format!("`{name}` is not in the port list")));
            }
            let p = &mut m.ports[st.ports[&name]];
            p.direction = dir;
            p.width = width;
            p.is_reg = is_reg;
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym(";")
    }

    fn wire_decl(&mut self, m: &mut ModuleAst, st: &mut ModState, pos: SourcePos) -> PResult<()> {
        self.bump();
        let width = self.range()?.unwrap_or(1);
        loop {
            let t = self.tok().clone();
            let name = self.ident()?;
            if let Some(&pi) = st.ports.get(&name) {
                if m.ports[pi].width != width && !st.undirected.contains_key(&name) {
                    return Err(self.err_at(&t, format!("width of `{name}` disagrees with its port")));
                }
            } else {
                self.check_fresh(&t, &name, st)?;
                st.nets.insert(name.clone(), m.nets.len());
                m.nets.push(Net {
                    name: name.clone(),
                    kind: NetKind::Wire,
                    width,
                    depth: None,
                });
            }
            if self.eat_sym("=") {
                let rhs = self.expr(st)?;
                st.item_pos.push((m.items.len(), pos.clone()));
                m.items.push(Item::Assign(ContinuousAssign {
                    lhs: LValue::Ident(name),
                    rhs,
                }));
            }
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym(";")
    }

    fn reg_decl(&mut self, m: &mut ModuleAst, st: &mut ModState) -> PResult<()> {
        self.bump();
        if self.at_kw("signed") {
            return Err(self.unexpected(&[]));
        }
        let width = self.range()?.unwrap_or(1);
        loop {
            let t = self.tok().clone();
            let name = self.ident()?;
            let depth = self.array_range()?;
            if let Some(&pi) = st.ports.get(&name) {
                let p = &mut m.ports[pi];
                if p.direction == Direction::Input {
                    return Err(self.err_at(&t, format!("input `{name}` cannot be `reg`")));
                }
                if depth.is_some() {
                    return Err(self.err_at(&t, "ports cannot be arrays"));
                }
                if p.width != width {
                    return Err(self.err_at(&t, format!("width of `{name}` disagrees with its port")));
                }
                p.is_reg = true;
            } else {
                self.check_fresh(&t, &name, st)?;
                st.nets.insert(name.clone(), m.nets.len());
                m.nets.push(Net {
                    name,
                    kind: if depth.is_some() {
                        NetKind::RegArray
                    } else {
                        NetKind::Reg
                    },
                    width,
                    depth,
                });
            }
            if self.at_sym("=") {
                return Err(self
                    .err_here("register initializers are not supported")
                    .unsupported("register initializer"));
            }
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym(";")
    }

    fn sensitivity(&mut self) -> PResult<Sensitivity> {
        if !self.at_sym("@") {
            return Err(self
                .err_here("`always` without an event control is not supported")
                .unsupported("always without event control"));
        }
        self.bump();
        if self.eat_sym("*") {
            return Ok(Sensitivity::Star);
        }
        self.expect_sym("(")?;
        if self.eat_sym("*") {
            self.expect_sym(")")?;
            return Ok(Sensitivity::Star);
        }
        let mut edges = Vec::new();
        let mut levels = 0;
        loop {
            let edge = if self.eat_kw("posedge") {
                Some(Edge::Posedge)
            } else if self.eat_kw("negedge") {
                Some(Edge::Negedge)
            } else {
                None
            };
            let signal = self.ident()?;
            match edge {
                Some(edge) => edges.push(EdgeEvent { edge, signal }),
                None => levels += 1,
            }
            if !(self.eat_kw("or") || self.eat_sym(",")) {
                break;
            }
        }
        self.expect_sym(")")?;
        match (edges.is_empty(), levels) {
            (true, _) => Ok(Sensitivity::Star),
            (false, 0) => Ok(Sensitivity::Edges(edges)),
            _ => Err(self
                .err_here("mixing edge and level events is not supported")
                .unsupported("mixed sensitivity list")),
        }
    }

    fn instantiation(&mut self, m: &mut ModuleAst, st: &mut ModState, pos: SourcePos) -> PResult<()> {
        let module = self.ident()?;
        if self.at_sym("#") {
            return Err(self
                .err_here("parameter overrides on instances are not supported")
                .unsupported("parameter override"));
        }
        loop {
            let t = self.tok().clone();
            let name = self.ident()?;
            if m.instances().any(|i| i.name == name) || st.nets.contains_key(&name) {
                return Err(self.err_at(&t, format!("`{name}` declared twice")));
            }
            self.expect_sym("(")?;
            let connections = if self.at_sym(".") {
                let mut conns = Vec::new();
                loop {
                    self.expect_sym(".")?;
                    let port = self.ident()?;
                    self.expect_sym("(")?;
                    let expr = if self.at_sym(")") {
                        None
                    } else {
                        Some(self.expr(st)?)
                    };
                    self.expect_sym(")")?;
                    conns.push(NamedConnection { port, expr });
                    if !self.eat_sym(",") {
                        break;
                    }
                }
                Connections::Named(conns)
            } else {
                let mut conns = Vec::new();
                if !self.at_sym(")") {
                    loop {
                        if self.at_sym(",") || self.at_sym(")") {
                            conns.push(None);
                        } else {
                            conns.push(Some(self.expr(st)?));
                        }
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                }
                Connections::Positional(conns)
            };
            self.expect_sym(")")?;
            st.item_pos.push((m.items.len(), pos.clone()));
            m.items.push(Item::Instance(Instance {
                module: module.clone(),
                name,
                connections,
            }));
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym(";")
    }

    fn stmt(&mut self, st: &mut ModState) -> PResult<Stmt> {
        let t = self.tok().clone();
        match &t.tok {
            Tok::Sym(";") => {
                self.bump();
                Ok(Stmt::Null)
            }
            Tok::Sym("{") => self.assignment(st),
            Tok::Ident(w) => match w.as_str() {
                "begin" => {
                    self.bump();
                    if self.eat_sym(":") {
                        self.ident()?;
                    }
                    let mut stmts = Vec::new();
                    while !self.at_kw("end") {
                        if matches!(self.peek(), Tok::Eof) {
                            return Err(self.unexpected(&["`end`"]));
                        }
                        if self.at_kw("reg") || self.at_kw("wire") {
                            return Err(self
                                .err_here("declarations inside blocks are not supported")
                                .unsupported("block-local declaration"));
                        }
                        stmts.push(self.stmt(st)?);
                    }
                    self.bump();
                    // `begin s end` is the same statement as `s`.
                    if stmts.len() == 1 {
                        return Ok(stmts.pop().expect("one statement"));
                    }
                    Ok(Stmt::Block(stmts))
                }
                "if" => {
                    self.bump();
                    self.expect_sym("(")?;
                    let cond = self.expr(st)?;
                    self.expect_sym(")")?;
                    let then_branch = Box::new(self.stmt(st)?);
                    let else_branch = if self.eat_kw("else") {
                        Some(Box::new(self.stmt(st)?))
                    } else {
                        None
                    };
                    Ok(Stmt::If {
                        cond,
                        then_branch,
                        else_branch,
                    })
                }
                "case" | "casez" => self.case(st),
                _ if is_keyword(w) => Err(self.unexpected(&["statement"])),
                _ => self.assignment(st),
            },
            _ => Err(self.unexpected(&["statement"])),
        }
    }

    fn assignment(&mut self, st: &mut ModState) -> PResult<Stmt> {
        let lhs = self.lvalue(st)?;
        let blocking = if self.eat_sym("=") {
            true
        } else if self.eat_sym("<=") {
            false
        } else {
            return Err(self.unexpected(&["`=`", "`<=`"]));
        };
        if self.at_sym("#") || self.at_sym("@") {
            return Err(self
                .err_here("intra-assignment timing controls are not supported")
                .unsupported("delay"));
        }
        let rhs = self.expr(st)?;
        self.expect_sym(";")?;
        Ok(Stmt::Assign { lhs, rhs, blocking })
    }

    fn case(&mut self, st: &mut ModState) -> PResult<Stmt> {
        let kind = if self.bump().tok == Tok::Ident("casez".into()) {
            CaseKind::Casez
        } else {
            CaseKind::Case
        };
        self.expect_sym("(")?;
        let selector = self.expr(st)?;
        self.expect_sym(")")?;
        let mut items = Vec::new();
        let mut default = None;
        while !self.eat_kw("endcase") {
            if matches!(self.peek(), Tok::Eof) {
                return Err(self.unexpected(&["`endcase`"]));
            }
            if self.at_kw("default") {
                let t = self.bump();
                self.eat_sym(":");
                if default.is_some() {
                    return Err(self.err_at(&t, "duplicate default item"));
                }
                default = Some(Box::new(self.stmt(st)?));
                continue;
            }
            let mut labels = Vec::new();
            loop {
                self.allow_dont_care = kind == CaseKind::Casez;
                let l = self.expr(st);
                self.allow_dont_care = false;
                labels.push(l?);
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym(":")?;
            let body = self.stmt(st)?;
            items.push(CaseItem { labels, body });
        }
        Ok(Stmt::Case(CaseStmt {
            kind,
            selector,
            items,
            default,
        }))
    }

    fn lvalue(&mut self, st: &mut ModState) -> PResult<LValue> {
        if self.eat_sym("{") {
            let mut parts = Vec::new();
            loop {
                parts.push(self.lvalue(st)?);
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym("}")?;
            return Ok(LValue::Concat(parts));
        }
        let t = self.tok().clone();
        let name = self.ident()?;
        st.uses.push((name.clone(), t.line, t.col));
        if self.params.0.contains_key(&name) {
            return Err(self.err_at(&t, format!("cannot assign to parameter `{name}`")));
        }
        if !self.at_sym("[") {
            return Ok(LValue::Ident(name));
        }
        self.bump();
        let mut uses = Vec::new();
        let first = self.expr_with_uses(&mut uses)?;
        st.uses.extend(uses);
        let lv = if self.eat_sym(":") {
            let msb = self.const_value(&first, &t)?;
            let lsb = self.const_expr()?;
            if lsb > msb || msb >= 64 {
                return Err(self.err_at(&t, "invalid part-select"));
            }
            LValue::Slice {
                name,
                msb: msb as u32,
                lsb: lsb as u32,
            }
        } else {
            LValue::Index { name, index: first }
        };
        self.expect_sym("]")?;
        if self.at_sym("[") {
            return Err(self
                .err_here("selects of array elements are not supported as assignment targets")
                .unsupported("array element bit-select target"));
        }
        Ok(lv)
    }

    fn expr(&mut self, st: &mut ModState) -> PResult<Expr> {
        let mut uses = Vec::new();
        let e = self.expr_with_uses(&mut uses)?;
        st.uses.extend(uses);
        Ok(e)
    }

    /// Parse an expression, recording identifier uses. Parameters are
    /// resolved lazily by the caller.
    fn expr_with_uses(&mut self, uses: &mut Vec<(String, u32, u32)>) -> PResult<Expr> {
        let cond = self.binary(1, uses)?;
        if self.eat_sym("?") {
            let a = self.expr_with_uses(uses)?;
            self.expect_sym(":")?;
            let b = self.expr_with_uses(uses)?;
            return Ok(Expr::ternary(cond, a, b));
        }
        Ok(cond)
    }

    fn binop(&self) -> PResult<Option<(BinaryOp, bool)>> {
        let Tok::Sym(s) = self.peek() else {
            return Ok(None);
        };
        let op = match *s {
            "+" => BinaryOp::Add,
            "-" => BinaryOp::Sub,
            "*" => BinaryOp::Mul,
            "/" => BinaryOp::Div,
            "%" => BinaryOp::Mod,
            "<<" => BinaryOp::Shl,
            ">>" => BinaryOp::Shr,
            "&" => BinaryOp::And,
            "|" => BinaryOp::Or,
            "^" => BinaryOp::Xor,
            "~^" | "^~" => return Ok(Some((BinaryOp::Xor, true))),
            "&&" => BinaryOp::LogicAnd,
            "||" => BinaryOp::LogicOr,
            "==" => BinaryOp::Eq,
            "!=" => BinaryOp::Ne,
            "<" => BinaryOp::Lt,
            "<=" => BinaryOp::Le,
            ">" => BinaryOp::Gt,
            ">=" => BinaryOp::Ge,
            "**" => return Err(self.unsupported_err(self.tok(), "power operator")),
            "<<<" | ">>>" => return Err(self.unsupported_err(self.tok(), "arithmetic shift")),
            "===" | "!==" => return Err(self.unsupported_err(self.tok(), "case equality")),
            _ => return Ok(None),
        };
        Ok(Some((op, false)))
    }

    fn binary(&mut self, min_prec: u8, uses: &mut Vec<(String, u32, u32)>) -> PResult<Expr> {
        let mut lhs = self.unary(uses)?;
        while let Some((op, negate)) = self.binop()? {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(prec + 1, uses)?;
            lhs = Expr::binary(op, lhs, rhs);
            if negate {
                lhs = Expr::unary(UnaryOp::Not, lhs);
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self, uses: &mut Vec<(String, u32, u32)>) -> PResult<Expr> {
        let Tok::Sym(s) = self.peek().clone() else {
            return self.primary(uses);
        };
        let ops: &[UnaryOp] = match s {
            "~" => &[UnaryOp::Not],
            "!" => &[UnaryOp::LogicNot],
            "&" => &[UnaryOp::RedAnd],
            "|" => &[UnaryOp::RedOr],
            "^" => &[UnaryOp::RedXor],
            "-" => &[UnaryOp::Neg],
            "~&" => &[UnaryOp::LogicNot, UnaryOp::RedAnd],
            "~|" => &[UnaryOp::LogicNot, UnaryOp::RedOr],
            "~^" | "^~" => &[UnaryOp::LogicNot, UnaryOp::RedXor],
            "+" => &[],
            _ => return self.primary(uses),
        };
        self.bump();
        let mut e = self.unary(uses)?;
        for op in ops.iter().rev() {
            e = Expr::unary(*op, e);
        }
        Ok(e)
    }

    fn primary(&mut self, uses: &mut Vec<(String, u32, u32)>) -> PResult<Expr> {
        let t = self.tok().clone();
        match &t.tok {
            Tok::Number(l) => {
                if l.dont_care != 0 && !self.allow_dont_care {
                    return Err(self.err_at(&t, "`?` bits are only allowed in casez labels"));
                }
                self.bump();
                Ok(Expr::Literal(*l))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr_with_uses(uses)?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Sym("{") => {
                self.bump();
                let first = self.expr_with_uses(uses)?;
                if self.at_sym("{") {
                    let count = match eval(&first, 0, &self.params) {
                        Some(c) if c >= 1 && c <= 64 => c as u32,
                        _ => {
                            return Err(self.err_at(
                                &t,
                                "replication count must be a constant between 1 and 64",
                            ))
                        }
                    };
                    self.bump();
                    let mut parts = Vec::new();
                    loop {
                        parts.push(self.expr_with_uses(uses)?);
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                    self.expect_sym("}")?;
                    self.expect_sym("}")?;
                    return Ok(Expr::Repeat { count, parts });
                }
                let mut parts = vec![first];
                while self.eat_sym(",") {
                    parts.push(self.expr_with_uses(uses)?);
                }
                self.expect_sym("}")?;
                Ok(Expr::Concat(parts))
            }
            Tok::Ident(w) if !is_keyword(w) => {
                let name = w.clone();
                self.bump();
                if self.at_sym("(") {
                    return Err(self.unsupported_err(&t, "function call"));
                }
                uses.push((name.clone(), t.line, t.col));
                let mut e = Expr::Ident(name);
                let mut selects = 0;
                while self.at_sym("[") {
                    selects += 1;
                    if selects > 2 {
                        return Err(self.err_here("too many selects"));
                    }
                    self.bump();
                    let first = self.expr_with_uses(uses)?;
                    if self.at_sym("+:") || self.at_sym("-:") {
                        return Err(self.unsupported_err(self.tok(), "indexed part-select"));
                    }
                    if self.eat_sym(":") {
                        let second = self.expr_with_uses(uses)?;
                        self.expect_sym("]")?;
                        let msb = self.const_value(&first, &t)?;
                        let lsb = self.const_value(&second, &t)?;
                        if lsb > msb || msb >= 64 {
                            return Err(self.err_at(&t, "invalid part-select"));
                        }
                        e = Expr::Slice {
                            base: Box::new(e),
                            msb: msb as u32,
                            lsb: lsb as u32,
                        };
                        break;
                    }
                    self.expect_sym("]")?;
                    e = Expr::Index {
                        base: Box::new(e),
                        index: Box::new(first),
                    };
                }
                Ok(e)
            }
            _ => Err(self.unexpected(&["expression"])),
        }
    }
}

fn check_tree(e: &Expr, scope: &ModuleScope) -> Option<String> {
    if let Expr::Index { base, index } = e {
        if let Expr::Ident(n) = base.as_ref() {
            if scope.is_array(n) {
                return check_tree(index, scope);
            }
        }
    }
    check_node(e, scope).or_else(|| e.children().into_iter().find_map(|c| check_tree(c, scope)))
}

fn check_node(node: &Expr, scope: &ModuleScope) -> Option<String> {
    if self_width(node, scope) > 64 {
        return Some("expressions wider than 64 bits are not supported".into());
    }
    match node {
        Expr::Slice { base, msb, .. } => match base.as_ref() {
            Expr::Ident(n) if scope.is_array(n) => Some(format!("array `{n}` needs an element index")),
            Expr::Ident(n) if *msb >= scope.width_of(n).unwrap_or(0) => {
                Some(format!("part-select [{msb}:..] out of range for `{n}`"))
            }
            _ => None,
        },
        Expr::Ident(n) if scope.is_array(n) => Some(format!("array `{n}` used without an index")),
        _ => None,
    }
}
