//! Recursive-descent parser with precedence climbing for expressions.

use super::ast::*;
use super::lexer::{tokenize, Tok};
use super::LangError;

pub fn parse(src: &str) -> Result<Program, LangError> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, i: 0 };
    p.program()
}

/// Parses a single expression (used for command-line predicates and tests).
pub fn parse_expr(src: &str) -> Result<Expr, LangError> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, i: 0 };
    let e = p.expr(false)?;
    p.expect(&Tok::Eof)?;
    Ok(e)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    i: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.i + k).min(self.toks.len() - 1)].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].0.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, LangError> {
        Err(LangError::syntax(self.pos(), msg))
    }

    fn unexpected<T>(&self, wanted: &str) -> Result<T, LangError> {
        self.error(format!("expected {wanted}, found {}", self.peek()))
    }

    fn expect(&mut self, t: &Tok) -> Result<(), LangError> {
        if self.eat(t) {
            Ok(())
        } else {
            self.unexpected(&t.to_string())
        }
    }

    fn ident(&mut self) -> Result<String, LangError> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_reserved(&s) => {
                self.bump();
                Ok(s)
            }
            _ => self.unexpected("an identifier"),
        }
    }

    fn program(&mut self) -> Result<Program, LangError> {
        let mut header = false;
        if self.is_kw("dtmc") || self.is_kw("probabilistic") {
            self.bump();
            header = true;
        } else if ["mdp", "ctmc", "pta", "nondeterministic", "stochastic"].iter().any(|k| self.is_kw(k)) {
            return self.error("only dtmc models are supported");
        }
        let mut items = Vec::new();
        loop {
            match self.peek() {
                Tok::Eof => break,
                Tok::Ident(k) if k == "const" => {
                    for c in self.const_decl()? {
                        items.push(Item::Const(c));
                    }
                }
                Tok::Ident(k) if k == "formula" => {
                    let pos = self.pos();
                    self.bump();
                    let name = self.ident()?;
                    self.expect(&Tok::Eq)?;
                    let expr = self.expr(false)?;
                    self.expect(&Tok::Semi)?;
                    items.push(Item::Formula { name, expr, pos });
                }
                Tok::Ident(k) if k == "label" => {
                    let pos = self.pos();
                    self.bump();
                    let name = match self.bump() {
                        Tok::Str(s) => s,
                        _ => return Err(LangError::syntax(pos, "expected a quoted label name")),
                    };
                    self.expect(&Tok::Eq)?;
                    let expr = self.expr(false)?;
                    self.expect(&Tok::Semi)?;
                    items.push(Item::Label { name, expr, pos });
                }
                Tok::Ident(k) if k == "module" => items.push(self.module()?),
                Tok::Ident(k) if k == "init" => return self.error("`init ... endinit` blocks are not supported"),
                Tok::Ident(k) if k == "rewards" => return self.error("reward structures are not supported"),
                _ => return self.unexpected("`const`, `formula`, `label` or `module`"),
            }
        }
        Ok(Program { header, items })
    }

    fn const_decl(&mut self) -> Result<Vec<ConstDecl>, LangError> {
        self.bump(); // const
        let ty = if self.eat_kw("int") {
            ConstType::Int
        } else if self.eat_kw("double") {
            ConstType::Double
        } else if self.eat_kw("bool") {
            ConstType::Bool
        } else {
            ConstType::Int
        };
        let mut out = Vec::new();
        loop {
            let pos = self.pos();
            let name = self.ident()?;
            let value = if self.eat(&Tok::Eq) { Some(self.expr(false)?) } else { None };
            out.push(ConstDecl { ty, name, value, pos });
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(&Tok::Semi)?;
        Ok(out)
    }

    fn module(&mut self) -> Result<Item, LangError> {
        let pos = self.pos();
        self.bump(); // module
        let name = self.ident()?;
        if self.eat(&Tok::Eq) {
            let source = self.ident()?;
            self.expect(&Tok::LBracket)?;
            let mut map = Vec::new();
            loop {
                let from = self.ident()?;
                self.expect(&Tok::Eq)?;
                let to = self.ident()?;
                map.push((from, to));
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(&Tok::RBracket)?;
            self.eat_kw("endmodule");
            return Ok(Item::Rename(RenameDecl { name, source, map, pos }));
        }
        let mut m = ModuleDecl { name, consts: Vec::new(), vars: Vec::new(), commands: Vec::new(), pos };
        loop {
            match self.peek() {
                Tok::Ident(k) if k == "endmodule" => {
                    self.bump();
                    break;
                }
                Tok::Ident(k) if k == "const" => m.consts.extend(self.const_decl()?),
                Tok::LBracket => m.commands.push(self.command()?),
                Tok::Ident(_) => m.vars.push(self.var_decl()?),
                Tok::Eof => return self.error(format!("module `{}` is missing `endmodule`", m.name)),
                _ => return self.unexpected("a variable, a command or `endmodule`"),
            }
        }
        if m.commands.is_empty() {
            return Err(LangError::syntax(pos, format!("module `{}` has no commands", m.name)));
        }
        Ok(Item::Module(m))
    }

    fn var_decl(&mut self) -> Result<VarDecl, LangError> {
        let pos = self.pos();
        let name = self.ident()?;
        self.expect(&Tok::Colon)?;
        let ty = if self.eat_kw("bool") {
            VarType::Bool
        } else {
            self.expect(&Tok::LBracket)?;
            let lo = self.expr(false)?;
            self.expect(&Tok::DotDot)?;
            let hi = self.expr(false)?;
            self.expect(&Tok::RBracket)?;
            VarType::Range(lo, hi)
        };
        let init = if self.eat_kw("init") { Some(self.expr(false)?) } else { None };
        self.expect(&Tok::Semi)?;
        Ok(VarDecl { name, ty, init, pos })
    }

    fn command(&mut self) -> Result<Command, LangError> {
        let pos = self.pos();
        self.expect(&Tok::LBracket)?;
        let action = if self.eat(&Tok::RBracket) {
            None
        } else {
            let a = self.ident()?;
            self.expect(&Tok::RBracket)?;
            Some(a)
        };
        let guard = self.expr(false)?;
        self.expect(&Tok::Arrow)?;
        let mut updates = vec![self.update()?];
        while self.eat(&Tok::Plus) {
            updates.push(self.update()?);
        }
        self.expect(&Tok::Semi)?;
        Ok(Command { action, guard, updates, pos })
    }

    fn starts_assignment(&self) -> bool {
        match (self.peek(), self.peek_at(1), self.peek_at(2)) {
            (Tok::LParen, Tok::Ident(_), Tok::Prime) => true,
            (Tok::Ident(_), Tok::Prime, _) => true,
            (Tok::Ident(t), next, _) if t == "true" => next != &Tok::Colon,
            _ => false,
        }
    }

    fn update(&mut self) -> Result<Update, LangError> {
        let prob = if self.starts_assignment() {
            None
        } else {
            let p = self.expr(false)?;
            self.expect(&Tok::Colon)?;
            Some(p)
        };
        if self.eat_kw("true") {
            return Ok(Update { prob, assigns: Vec::new() });
        }
        let mut assigns = vec![self.assign()?];
        while self.peek() == &Tok::And {
            self.bump();
            assigns.push(self.assign()?);
        }
        Ok(Update { prob, assigns })
    }

    fn assign(&mut self) -> Result<Assign, LangError> {
        let pos = self.pos();
        if self.eat(&Tok::LParen) {
            let var = self.ident()?;
            self.expect(&Tok::Prime)?;
            self.expect(&Tok::Eq)?;
            let value = self.expr(false)?;
            self.expect(&Tok::RParen)?;
            return Ok(Assign { var, value, pos });
        }
        let var = self.ident()?;
        self.expect(&Tok::Prime)?;
        self.expect(&Tok::Eq)?;
        let value = self.expr(true)?;
        Ok(Assign { var, value, pos })
    }

    /// In `bare` mode (an unparenthesized update right-hand side) the
    /// expression ends before `& x'` and before a `+` that starts the next
    /// probabilistic branch.
    fn expr(&mut self, bare: bool) -> Result<Expr, LangError> {
        let cond = self.binary(1, bare)?;
        if self.eat(&Tok::Question) {
            let a = self.expr(false)?;
            self.expect(&Tok::Colon)?;
            let b = self.expr(bare)?;
            return Ok(Expr::Ite(Box::new(cond), Box::new(a), Box::new(b)));
        }
        Ok(cond)
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            Tok::Star => BinOp::Mul,
            Tok::Slash => BinOp::Div,
            Tok::Eq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::And => BinOp::And,
            Tok::Or => BinOp::Or,
            Tok::Implies => BinOp::Implies,
            Tok::Iff => BinOp::Iff,
            _ => return None,
        })
    }

    fn ends_bare_rhs(&self, op: BinOp) -> bool {
        match op {
            BinOp::And => matches!((self.peek_at(1), self.peek_at(2)), (Tok::Ident(_), Tok::Prime)),
            BinOp::Add => {
                // A `+` ends the right-hand side when what follows is a
                // probability, i.e. reaches a `:` before any primed variable.
                let mut depth = 0i32;
                let mut pending_ternary = 0i32;
                let mut k = 1;
                loop {
                    match self.peek_at(k) {
                        Tok::LParen => depth += 1,
                        Tok::RParen => {
                            depth -= 1;
                            if depth < 0 {
                                return false;
                            }
                        }
                        Tok::Question if depth == 0 => pending_ternary += 1,
                        Tok::Colon if depth == 0 => {
                            if pending_ternary > 0 {
                                pending_ternary -= 1;
                            } else {
                                return true;
                            }
                        }
                        Tok::Prime | Tok::Semi | Tok::Eof => return false,
                        _ => {}
                    }
                    k += 1;
                }
            }
            _ => false,
        }
    }

    fn binary(&mut self, min: u8, bare: bool) -> Result<Expr, LangError> {
        let mut lhs = self.unary(bare)?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec < min || (bare && self.ends_bare_rhs(op)) {
                break;
            }
            self.bump();
            let next_min = if op == BinOp::Implies { prec } else { prec + 1 };
            let rhs = self.binary(next_min, bare)?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self, bare: bool) -> Result<Expr, LangError> {
        if self.eat(&Tok::Not) {
            let e = self.binary(6, bare)?;
            return Ok(Expr::Unary(UnOp::Not, Box::new(e)));
        }
        if self.eat(&Tok::Minus) {
            let e = self.unary(bare)?;
            return Ok(Expr::Unary(UnOp::Neg, Box::new(e)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, LangError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::Int(n))
            }
            Tok::Real(s) => {
                self.bump();
                Ok(Expr::Real(s))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr(false)?;
                self.expect(&Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.bump();
                Ok(Expr::Bool(s == "true"))
            }
            Tok::Ident(s) if self.peek_at(1) == &Tok::LParen => {
                let Some(func) = Func::from_name(&s) else {
                    return self.error(format!("unknown function `{s}`"));
                };
                self.bump();
                self.bump();
                let mut args = Vec::new();
                if !self.eat(&Tok::RParen) {
                    loop {
                        args.push(self.expr(false)?);
                        if self.eat(&Tok::RParen) {
                            break;
                        }
                        self.expect(&Tok::Comma)?;
                    }
                }
                Ok(Expr::Call(func, args, pos))
            }
            Tok::Ident(s) if !is_reserved(&s) => {
                self.bump();
                Ok(Expr::Ident(s, pos))
            }
            _ => self.unexpected("an expression"),
        }
    }
}

fn is_reserved(s: &str) -> bool {
    matches!(
        s,
        "const" | "module" | "endmodule" | "label" | "formula" | "init" | "bool" | "int" | "double" | "true" | "false" | "dtmc"
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assigns(u: &Update) -> Vec<(String, String)> {
        u.assigns.iter().map(|a| (a.var.clone(), a.value.to_string())).collect()
    }

    #[test]
    fn bare_updates_split_correctly() {
        let src = "module main
x : [0..1] init 0;
y : [0..2] init 1;
const double p,q,u;
[] x=0&y<2 -> p:x'=1 + 1-p:y'=y+1;
[] y=2 -> q*q:y'=y-1 + u:y'=y;
[] x=1&y!=1 -> 1:x'=y & y'=x;
endmodule";
        let prog = parse(src).unwrap();
        let Item::Module(m) = &prog.items[0] else { panic!() };
        assert_eq!(m.consts.len(), 3);
        let c0 = &m.commands[0];
        assert_eq!(c0.updates.len(), 2);
        assert_eq!(c0.updates[0].prob.as_ref().unwrap().to_string(), "p");
        assert_eq!(assigns(&c0.updates[0]), vec![("x".into(), "1".into())]);
        assert_eq!(c0.updates[1].prob.as_ref().unwrap().to_string(), "1 - p");
        assert_eq!(assigns(&c0.updates[1]), vec![("y".into(), "y + 1".into())]);
        let c1 = &m.commands[1];
        assert_eq!(c1.updates[0].prob.as_ref().unwrap().to_string(), "q * q");
        assert_eq!(assigns(&c1.updates[0]), vec![("y".into(), "y - 1".into())]);
        let c2 = &m.commands[2];
        assert_eq!(c2.updates.len(), 1);
        assert_eq!(assigns(&c2.updates[0]), vec![("x".into(), "y".into()), ("y".into(), "x".into())]);
        assert_eq!(c2.guard.to_string(), "x = 1 & y != 1");
    }

    #[test]
    fn precedence() {
        assert_eq!(parse_expr("1 + 2 * 3 = 7 & !a | b").unwrap().to_string(), "1 + 2 * 3 = 7 & !a | b");
        let e = parse_expr("!x = 1").unwrap();
        assert!(matches!(e, Expr::Unary(UnOp::Not, _)));
        assert_eq!(parse_expr("a - (b - c)").unwrap().to_string(), "a - (b - c)");
        assert_eq!(parse_expr("(a - b) - c").unwrap().to_string(), "a - b - c");
        assert_eq!(parse_expr("x > 0 ? 1 : y > 0 ? 2 : 3").unwrap().to_string(), "x > 0 ? 1 : y > 0 ? 2 : 3");
        assert_eq!(parse_expr("-(p * q)").unwrap().to_string(), "-(p * q)");
        assert_eq!(parse_expr("ExactlyOneOf(a, b & c, true)").unwrap().to_string(), "ExactlyOneOf(a, b & c, true)");
    }

    #[test]
    fn errors_carry_positions() {
        let err = parse("module m\n x : bool;\n [] x -> (x'=false)\nendmodule").unwrap_err();
        assert_eq!(err.to_string(), "4:1: syntax error: expected `;`, found `endmodule`");
        let err = parse("module m\n x : bool init false;\nendmodule").unwrap_err();
        assert_eq!(err.to_string(), "1:1: syntax error: module `m` has no commands");
        assert!(parse("mdp module m endmodule").is_err());
    }

    #[test]
    fn renaming_without_endmodule() {
        let src = "const double p1, p2, q1, q2;
module F1
 c1 : bool init false;
 [a] !c1 -> p1:(c1'=1) + 1-p1:(c1'=0);
 [a] c1 -> q1:(c1'=0) + 1-q1:(c1'=1);
endmodule
module F2 = F1[c1=c2,p1=p2,q1=q2]
label \"allStrike\" = c1 & c2;";
        let prog = parse(src).unwrap();
        assert_eq!(prog.items.len(), 7);
        assert!(matches!(&prog.items[5], Item::Rename(r) if r.map.len() == 3));
    }
}
