//! Lexing, parsing and printing of the supported Verilog subset.

pub mod ast;
pub mod eval;
mod lexer;
mod parser;
mod printer;
pub mod width;

use std::fmt;

pub use ast::*;
pub use printer::{print_expr, print_module};

/// A syntax error or a construct outside the supported subset.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub file: String,
    pub line: u32,
    pub column: u32,
    pub message: String,
    /// Tokens that would have been accepted at the error position.
    pub expected: Vec<String>,
    /// Name of the unsupported construct, when that is the cause.
    pub unsupported: Option<String>,
}

impl ParseError {
    pub fn new(file: &str, line: u32, column: u32, message: impl Into<String>) -> Self {
        ParseError {
            file: file.to_string(),
            line,
            column,
            message: message.into(),
            expected: Vec::new(),
            unsupported: None,
        }
    }

    pub fn unsupported(mut self, construct: &str) -> Self {
        self.unsupported = Some(construct.to_string());
        self
    }

    pub fn expecting(mut self, expected: Vec<String>) -> Self {
        self.expected = expected;
        self
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}: {}", self.file, self.line, self.column, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

/// Parse a source file into a design.
pub fn parse(source: &str, file_name: &str) -> Result<DesignAst, ParseError> {
    let tokens = lexer::Lexer::new(source, file_name).tokenize()?;
    parser::Parser::new(tokens, file_name).design()
}

/// Parse a source expected to hold exactly one module.
pub fn parse_module(source: &str, file_name: &str) -> Result<ModuleAst, ParseError> {
    let mut d = parse(source, file_name)?;
    match d.modules.len() {
        1 => Ok(d.modules.pop().expect("one module")),
        n => Err(ParseError::new(
            file_name,
            1,
            1,
            format!("expected exactly one module, found {n}"),
        )),
    }
}

/// Render a design as Verilog source.
pub fn print(design: &DesignAst) -> String {
    let mut out = String::new();
    for (i, m) in design.modules.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&print_module(m));
    }
    out
}

/// Equality up to node ids, positions and formatting.
pub fn structural_eq(a: &DesignAst, b: &DesignAst) -> bool {
    a.modules == b.modules
}

#[cfg(test)]
mod tests;
