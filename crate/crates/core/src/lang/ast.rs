//! Syntax tree of the guarded-command language, with a printer whose output
//! parses back to an equal tree.

use std::fmt;

/// Source position. Positions never take part in tree equality.
#[derive(Debug, Clone, Copy, Default, Eq)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl PartialEq for Pos {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Implies,
    Iff,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Eq => "=",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&",
            BinOp::Or => "|",
            BinOp::Implies => "=>",
            BinOp::Iff => "<=>",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Implies => 1,
            BinOp::Iff => 2,
            BinOp::Or => 3,
            BinOp::And => 4,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 6,
            BinOp::Add | BinOp::Sub => 7,
            BinOp::Mul | BinOp::Div => 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Min,
    Max,
    ExactlyOneOf,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Min => "min",
            Func::Max => "max",
            Func::ExactlyOneOf => "ExactlyOneOf",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        match s {
            "min" => Some(Func::Min),
            "max" => Some(Func::Max),
            "ExactlyOneOf" => Some(Func::ExactlyOneOf),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Bool(bool),
    Int(i64),
    /// Decimal literal, kept verbatim.
    Real(String),
    Ident(String, Pos),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Ite(Box<Expr>, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>, Pos),
}

impl Expr {
    pub fn ident(name: &str) -> Expr {
        Expr::Ident(name.to_string(), Pos::default())
    }

    pub fn binary(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    /// Calls `f` on every identifier in the expression.
    pub fn visit_idents(&self, f: &mut dyn FnMut(&str, Pos)) {
        match self {
            Expr::Bool(_) | Expr::Int(_) | Expr::Real(_) => {}
            Expr::Ident(n, p) => f(n, *p),
            Expr::Unary(_, a) => a.visit_idents(f),
            Expr::Binary(_, a, b) => {
                a.visit_idents(f);
                b.visit_idents(f);
            }
            Expr::Ite(c, a, b) => {
                c.visit_idents(f);
                a.visit_idents(f);
                b.visit_idents(f);
            }
            Expr::Call(_, args, _) => args.iter().for_each(|a| a.visit_idents(f)),
        }
    }

    /// Replaces identifiers through `f`.
    pub fn rename(&self, f: &dyn Fn(&str) -> Option<String>) -> Expr {
        match self {
            Expr::Bool(_) | Expr::Int(_) | Expr::Real(_) => self.clone(),
            Expr::Ident(n, p) => Expr::Ident(f(n).unwrap_or_else(|| n.clone()), *p),
            Expr::Unary(op, a) => Expr::Unary(*op, Box::new(a.rename(f))),
            Expr::Binary(op, a, b) => Expr::Binary(*op, Box::new(a.rename(f)), Box::new(b.rename(f))),
            Expr::Ite(c, a, b) => Expr::Ite(Box::new(c.rename(f)), Box::new(a.rename(f)), Box::new(b.rename(f))),
            Expr::Call(func, args, p) => Expr::Call(*func, args.iter().map(|a| a.rename(f)).collect(), *p),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Ite(..) => 0,
            Expr::Binary(op, ..) => op.precedence(),
            Expr::Unary(UnOp::Not, _) => 5,
            Expr::Unary(UnOp::Neg, _) => 9,
            _ => 10,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let child = |f: &mut fmt::Formatter<'_>, e: &Expr, min: u8| -> fmt::Result {
            if e.precedence() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Int(n) => write!(f, "{n}"),
            Expr::Real(s) => f.write_str(s),
            Expr::Ident(n, _) => f.write_str(n),
            Expr::Unary(UnOp::Not, a) => {
                f.write_str("!")?;
                child(f, a, 6)
            }
            Expr::Unary(UnOp::Neg, a) => {
                f.write_str("-")?;
                child(f, a, 10)
            }
            Expr::Binary(op, a, b) => {
                let p = op.precedence();
                // Left-associative: the right operand needs strictly higher precedence.
                // `=>` is right-associative.
                let (lp, rp) = if *op == BinOp::Implies { (p + 1, p) } else { (p, p + 1) };
                child(f, a, lp)?;
                write!(f, " {} ", op.symbol())?;
                child(f, b, rp)
            }
            Expr::Ite(c, a, b) => {
                child(f, c, 1)?;
                f.write_str(" ? ")?;
                child(f, a, 1)?;
                f.write_str(" : ")?;
                child(f, b, 0)
            }
            Expr::Call(func, args, _) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstType {
    Int,
    Double,
    Bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstDecl {
    pub ty: ConstType,
    pub name: String,
    pub value: Option<Expr>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum VarType {
    Bool,
    Range(Expr, Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarDecl {
    pub name: String,
    pub ty: VarType,
    pub init: Option<Expr>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assign {
    pub var: String,
    pub value: Expr,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Update {
    /// `None` means probability one.
    pub prob: Option<Expr>,
    /// Empty for `true` (no change).
    pub assigns: Vec<Assign>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Command {
    pub action: Option<String>,
    pub guard: Expr,
    pub updates: Vec<Update>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModuleDecl {
    pub name: String,
    pub consts: Vec<ConstDecl>,
    pub vars: Vec<VarDecl>,
    pub commands: Vec<Command>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenameDecl {
    pub name: String,
    pub source: String,
    pub map: Vec<(String, String)>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    Const(ConstDecl),
    Formula { name: String, expr: Expr, pos: Pos },
    Module(ModuleDecl),
    Rename(RenameDecl),
    Label { name: String, expr: Expr, pos: Pos },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    /// Whether the source started with `dtmc` / `probabilistic`.
    pub header: bool,
    pub items: Vec<Item>,
}

impl fmt::Display for ConstDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ty = match self.ty {
            ConstType::Int => "int",
            ConstType::Double => "double",
            ConstType::Bool => "bool",
        };
        write!(f, "const {ty} {}", self.name)?;
        if let Some(v) = &self.value {
            write!(f, " = {v}")?;
        }
        f.write_str(";")
    }
}

impl fmt::Display for Update {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(p) = &self.prob {
            write!(f, "{p} : ")?;
        }
        if self.assigns.is_empty() {
            return f.write_str("true");
        }
        for (i, a) in self.assigns.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            write!(f, "({}' = {})", a.var, a.value)?;
        }
        Ok(())
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {} -> ", self.action.as_deref().unwrap_or(""), self.guard)?;
        for (i, u) in self.updates.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{u}")?;
        }
        f.write_str(";")
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.header {
            writeln!(f, "dtmc\n")?;
        }
        for item in &self.items {
            match item {
                Item::Const(c) => writeln!(f, "{c}")?,
                Item::Formula { name, expr, .. } => writeln!(f, "formula {name} = {expr};")?,
                Item::Label { name, expr, .. } => writeln!(f, "label \"{name}\" = {expr};")?,
                Item::Rename(r) => {
                    write!(f, "module {} = {}[", r.name, r.source)?;
                    for (i, (a, b)) in r.map.iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        write!(f, "{a} = {b}")?;
                    }
                    writeln!(f, "] endmodule")?;
                }
                Item::Module(m) => {
                    writeln!(f, "module {}", m.name)?;
                    for c in &m.consts {
                        writeln!(f, "  {c}")?;
                    }
                    for v in &m.vars {
                        write!(f, "  {} : ", v.name)?;
                        match &v.ty {
                            VarType::Bool => f.write_str("bool")?,
                            VarType::Range(lo, hi) => write!(f, "[{lo}..{hi}]")?,
                        }
                        if let Some(i) = &v.init {
                            write!(f, " init {i}")?;
                        }
                        writeln!(f, ";")?;
                    }
                    for c in &m.commands {
                        writeln!(f, "  {c}")?;
                    }
                    writeln!(f, "endmodule")?;
                }
            }
        }
        Ok(())
    }
}
