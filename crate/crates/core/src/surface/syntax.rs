//! Parse tree of the surface language, before desugaring.

use crate::builtins::Prim;
use crate::effects::{Effect, Op};
use crate::types::Type;

use super::lexer::Pos;

#[derive(Clone, Debug, PartialEq)]
pub enum Pat {
    Wild,
    Var(String),
    Unit,
    Tuple(Box<Pat>, Box<Pat>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub pat: Pat,
    pub ty: Option<Type>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PromiseExpr {
    pub op: Op,
    pub pat: Pat,
    pub r: Option<String>,
    pub s: Option<(Pat, Option<Type>)>,
    pub guard: Option<Box<Expr>>,
    pub body: Box<Expr>,
    pub state: Option<Box<Expr>>,
    pub cont: Option<(String, Box<Expr>)>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Var(String, Pos),
    Unit,
    Int(i64),
    Bool(bool),
    Str(String),
    Tuple(Box<Expr>, Box<Expr>),
    Inl(Option<Type>, Box<Expr>),
    Inr(Option<Type>, Box<Expr>),
    Fun(Vec<Param>, Option<Type>, Box<Expr>),
    RecFun(String, Param, Option<Type>, Box<Expr>),
    Fulfilled(Box<Expr>),
    Boxed(Box<Expr>),
    List(Vec<Expr>, Option<Type>),
    /// `$name(args)`: a builtin (or `$loc(n)`) written explicitly.
    PrimLit(String, Vec<Expr>, Pos),
    Return(Box<Expr>),
    Let(Pat, Box<Expr>, Box<Expr>),
    LetFun(String, Vec<Param>, Option<Type>, Box<Expr>, Box<Expr>),
    LetRec(String, Vec<Param>, Option<Type>, Box<Expr>, Box<Expr>, Pos),
    Seq(Box<Expr>, Box<Expr>),
    App(Box<Expr>, Box<Expr>),
    Bin(Prim, Box<Expr>, Box<Expr>),
    Deref(Box<Expr>, Pos),
    Assign(Box<Expr>, Box<Expr>, Pos),
    Neg(Box<Expr>),
    MatchTuple(Box<Expr>, Pat, Box<Expr>),
    MatchEmpty(Box<Expr>, Option<Type>),
    MatchSum(Box<Expr>, Pat, Box<Expr>, Pat, Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Signal(Op, Box<Expr>, Box<Expr>),
    Interrupt(Op, Box<Expr>, Box<Expr>, Pos),
    Send(Op, Box<Expr>),
    Promise(PromiseExpr),
    Await(Box<Expr>, Option<(String, Box<Expr>)>),
    Unbox(Box<Expr>, Option<(String, Box<Expr>)>),
    Spawn(Box<Expr>, Option<Box<Expr>>),
    ProcessOp(Op, Box<Expr>, String, Box<Expr>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProcExpr {
    Run(Expr, Option<(Type, Option<Effect>)>, Pos),
    Par(Box<ProcExpr>, Box<ProcExpr>),
    Signal(Op, Expr, Box<ProcExpr>),
    Interrupt(Op, Expr, Box<ProcExpr>, Pos),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Item {
    Extensions(Vec<String>, Pos),
    Operation(Op, Type, Pos),
    Def { name: String, rec: bool, params: Vec<Param>, ret: Option<Type>, body: Expr, pos: Pos },
    Process(ProcExpr),
}
