//! Front end: lexer, parser, desugaring into the core calculus and a
//! printer whose output parses back to an alpha-equivalent term.

pub mod desugar;
pub mod lexer;
pub mod parser;
pub mod pretty;
pub mod syntax;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::ast::{Comp, Proc, Value};
use crate::effects::{Effect, Op};
use crate::types::Type;

pub use desugar::{DesugarError, DesugarKind};
pub use lexer::Pos;
pub use pretty::{print_comp, print_proc, print_value};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseError {
    pub pos: Pos,
    pub msg: String,
    pub expected: Vec<String>,
}

impl ParseError {
    pub fn new(pos: Pos, msg: impl Into<String>, expected: Vec<String>) -> ParseError {
        ParseError { pos, msg: msg.into(), expected }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pos, self.msg)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(" or "))?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(untagged)]
pub enum SurfaceError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Desugar(#[from] DesugarError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Extensions {
    pub refs: bool,
    pub rec: bool,
}

impl Extensions {
    pub fn all() -> Extensions {
        Extensions { refs: true, rec: true }
    }
}

/// Declared type of one `run` clause; either part may be left out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunAnnotation {
    pub ty: Option<Type>,
    pub eff: Option<Effect>,
    pub pos: Pos,
}

/// A desugared source file.
#[derive(Debug, Clone)]
pub struct Program {
    pub extensions: Extensions,
    pub signature: BTreeMap<Op, Type>,
    pub proc: Proc,
    /// One entry per run leaf of `proc`, left to right.
    pub runs: Vec<RunAnnotation>,
}

/// Parses and desugars a whole `.aeff` file.
pub fn parse_program(src: &str) -> Result<Program, SurfaceError> {
    let mut p = parser::Parser::new(src, false)?;
    let items = p.items()?;
    Ok(desugar::program(&items, p.idents())?)
}

/// Parses a process in runtime syntax (interrupts allowed, every extension on).
pub fn parse_proc(src: &str) -> Result<Proc, SurfaceError> {
    let mut p = parser::Parser::new(src, true)?;
    let e = p.process()?;
    p.expect_eof()?;
    Ok(desugar::Desugarer::runtime(p.idents()).proc(&e)?)
}

/// Parses a computation in runtime syntax.
pub fn parse_comp(src: &str) -> Result<Comp, SurfaceError> {
    let mut p = parser::Parser::new(src, true)?;
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(desugar::Desugarer::runtime(p.idents()).comp(&e)?)
}

/// Parses a closed value, such as an interrupt payload.
pub fn parse_value(src: &str) -> Result<Value, SurfaceError> {
    let mut p = parser::Parser::new(src, true)?;
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(desugar::Desugarer::runtime(p.idents()).value(&e)?)
}

/// Parses a type in the surface syntax.
pub fn parse_type(src: &str) -> Result<Type, ParseError> {
    let mut p = parser::Parser::new(src, false)?;
    let t = p.ty()?;
    p.expect_eof()?;
    Ok(t)
}

/// Parses an effect annotation.
pub fn parse_effect(src: &str) -> Result<Effect, ParseError> {
    let mut p = parser::Parser::new(src, false)?;
    let e = p.effect()?;
    p.expect_eof()?;
    Ok(e)
}
