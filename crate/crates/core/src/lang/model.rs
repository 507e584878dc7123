//! Resolution of a parsed [`Program`] into a checked [`Model`]: renamings
//! expanded, constants folded, identifiers bound, variables normalized so
//! every domain is `0..size`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::ast::*;
use super::value::{self, EvalError, Value};
use super::LangError;
use crate::num::{parse_rational, Polynomial, Valuation};

/// Resolved expression.
#[derive(Debug, Clone, PartialEq)]
pub enum RExpr {
    Lit(Value),
    Var(usize),
    Param(String),
    Unary(UnOp, Box<RExpr>),
    Binary(BinOp, Box<RExpr>, Box<RExpr>),
    Ite(Box<RExpr>, Box<RExpr>, Box<RExpr>),
    Call(Func, Vec<RExpr>),
}

impl RExpr {
    /// Variables read by the expression, sorted.
    pub fn vars(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<usize>) {
        match self {
            RExpr::Lit(_) | RExpr::Param(_) => {}
            RExpr::Var(v) => {
                out.insert(*v);
            }
            RExpr::Unary(_, a) => a.collect_vars(out),
            RExpr::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            RExpr::Ite(c, a, b) => {
                c.collect_vars(out);
                a.collect_vars(out);
                b.collect_vars(out);
            }
            RExpr::Call(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    fn has_param(&self) -> bool {
        match self {
            RExpr::Param(_) => true,
            RExpr::Lit(_) | RExpr::Var(_) => false,
            RExpr::Unary(_, a) => a.has_param(),
            RExpr::Binary(_, a, b) => a.has_param() || b.has_param(),
            RExpr::Ite(c, a, b) => c.has_param() || a.has_param() || b.has_param(),
            RExpr::Call(_, args) => args.iter().any(RExpr::has_param),
        }
    }

    fn has_division(&self) -> bool {
        match self {
            RExpr::Binary(BinOp::Div, ..) => true,
            RExpr::Param(_) | RExpr::Lit(_) | RExpr::Var(_) => false,
            RExpr::Unary(_, a) => a.has_division(),
            RExpr::Binary(_, a, b) => a.has_division() || b.has_division(),
            RExpr::Ite(c, a, b) => c.has_division() || a.has_division() || b.has_division(),
            RExpr::Call(_, args) => args.iter().any(RExpr::has_division),
        }
    }

    /// Evaluates with `var` giving the (denormalized) value of each variable.
    /// Parameters are looked up in `params` when given and stay symbolic otherwise.
    pub fn eval(&self, var: &dyn Fn(usize) -> Value, params: Option<&Valuation>) -> Result<Value, EvalError> {
        match self {
            RExpr::Lit(v) => Ok(v.clone()),
            RExpr::Var(i) => Ok(var(*i)),
            RExpr::Param(p) => match params {
                Some(u) => match u.get(p) {
                    Some(r) => Ok(Value::Real(Polynomial::constant(r.clone()))),
                    None => Err(EvalError::NonConstant(format!("parameter `{p}` (no value given)"))),
                },
                None => Ok(Value::Real(Polynomial::var(p))),
            },
            RExpr::Unary(op, a) => value::unary(*op, a.eval(var, params)?),
            RExpr::Binary(op, a, b) => {
                let x = a.eval(var, params)?;
                // Short-circuit so guards like `y != 0 & x / y > 1` stay defined.
                match (op, &x) {
                    (BinOp::And, Value::Bool(false)) => return Ok(Value::Bool(false)),
                    (BinOp::Or, Value::Bool(true)) => return Ok(Value::Bool(true)),
                    (BinOp::Implies, Value::Bool(false)) => return Ok(Value::Bool(true)),
                    _ => {}
                }
                let y = b.eval(var, params)?;
                value::binary(*op, &x, &y)
            }
            RExpr::Ite(c, a, b) => {
                if c.eval(var, params)?.as_bool()? {
                    a.eval(var, params)
                } else {
                    b.eval(var, params)
                }
            }
            RExpr::Call(f, args) => {
                let vals = args.iter().map(|a| a.eval(var, params)).collect::<Result<Vec<_>, _>>()?;
                value::call(*f, &vals)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarInfo {
    pub name: String,
    pub module: usize,
    pub is_bool: bool,
    /// Declared lower bound; stored values are offsets from it.
    pub lower: i64,
    /// Number of values in the domain.
    pub size: u64,
    /// Initial value as an offset.
    pub init: u64,
}

impl VarInfo {
    /// The language-level value of a stored offset.
    pub fn value(&self, offset: u64) -> Value {
        if self.is_bool {
            Value::Bool(offset == 1)
        } else {
            Value::Int(self.lower + offset as i64)
        }
    }

    /// Stored offset for a language-level value, if it is in the domain.
    pub fn offset(&self, v: &Value) -> Result<Option<u64>, EvalError> {
        let n = v.as_int()?;
        let off = n.checked_sub(self.lower).ok_or(EvalError::Overflow)?;
        Ok(if off >= 0 && (off as u64) < self.size { Some(off as u64) } else { None })
    }

    /// Bits needed for the domain on its own.
    pub fn bits(&self) -> usize {
        (u64::BITS - self.size.saturating_sub(1).leading_zeros()).max(1) as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RUpdate {
    pub prob: RExpr,
    pub assigns: Vec<(usize, RExpr)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RCommand {
    pub module: usize,
    /// `None` for anonymous commands, which act alone.
    pub action: Option<String>,
    pub guard: RExpr,
    pub updates: Vec<RUpdate>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModuleInfo {
    pub name: String,
    pub commands: Vec<usize>,
    /// Named actions the module takes part in.
    pub alphabet: BTreeSet<String>,
}

/// A resolved program.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub vars: Vec<VarInfo>,
    pub modules: Vec<ModuleInfo>,
    pub commands: Vec<RCommand>,
    /// Named actions in order of first appearance.
    pub actions: Vec<String>,
    pub labels: Vec<(String, RExpr)>,
    pub parameters: Vec<String>,
    pub constants: BTreeMap<String, Value>,
}

impl Model {
    pub fn from_source(src: &str) -> Result<Model, LangError> {
        Model::resolve(&super::parse(src)?)
    }

    pub fn resolve(program: &Program) -> Result<Model, LangError> {
        Resolver::default().run(program)
    }

    pub fn label(&self, name: &str) -> Result<&RExpr, LangError> {
        self.labels
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, e)| e)
            .ok_or_else(|| LangError::UnknownLabel(name.to_string()))
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn initial_state(&self) -> Vec<u64> {
        self.vars.iter().map(|v| v.init).collect()
    }

    /// Bit width shared by all variables in symbolic encodings: that of the largest domain.
    pub fn bitwidth(&self) -> usize {
        self.vars.iter().map(VarInfo::bits).max().unwrap_or(1)
    }

    /// Resolves a free-standing expression (e.g. a command-line target predicate).
    pub fn resolve_expr(&self, e: &Expr) -> Result<RExpr, LangError> {
        let mut r = Resolver::default();
        r.var_index = self.vars.iter().enumerate().map(|(i, v)| (v.name.clone(), i)).collect();
        r.consts = self.constants.clone();
        r.params = self.parameters.iter().cloned().collect();
        r.expr(e)
    }

    /// `name=value` rendering of a state, in variable order.
    pub fn state_label(&self, state: &[u64]) -> String {
        self.vars
            .iter()
            .zip(state)
            .map(|(v, &o)| format!("{}={}", v.name, v.value(o)))
            .collect::<Vec<_>>()
            .join(",")
    }
}

#[derive(Default)]
struct Resolver {
    consts: BTreeMap<String, Value>,
    params: BTreeSet<String>,
    formulas: HashMap<String, Expr>,
    formula_stack: Vec<String>,
    var_index: HashMap<String, usize>,
}

impl Resolver {
    fn run(mut self, program: &Program) -> Result<Model, LangError> {
        let modules = expand_renamings(program)?;

        // Constants, including those declared inside modules, in source order;
        // forward references are resolved by repeated passes.
        let mut pending: Vec<&ConstDecl> = Vec::new();
        let mut declared: BTreeSet<&str> = BTreeSet::new();
        for item in &program.items {
            match item {
                Item::Const(c) => pending.push(c),
                Item::Module(m) => pending.extend(m.consts.iter()),
                _ => {}
            }
        }
        for m in &modules {
            if !program.items.iter().any(|i| matches!(i, Item::Module(d) if d.name == m.name)) {
                pending.extend(m.consts.iter());
            }
        }
        for c in &pending {
            if !declared.insert(c.name.as_str()) {
                return Err(LangError::Duplicate { pos: c.pos, name: c.name.clone() });
            }
        }
        for item in &program.items {
            if let Item::Formula { name, expr, pos } = item {
                if declared.contains(name.as_str()) || self.formulas.insert(name.clone(), expr.clone()).is_some() {
                    return Err(LangError::Duplicate { pos: *pos, name: name.clone() });
                }
            }
        }
        let mut remaining = pending;
        while !remaining.is_empty() {
            let mut next = Vec::new();
            let mut progress = false;
            let mut last_err = None;
            for c in remaining {
                match self.const_value(c) {
                    Ok(v) => {
                        match v {
                            Some(v) => {
                                self.consts.insert(c.name.clone(), v);
                            }
                            None => {
                                self.params.insert(c.name.clone());
                            }
                        }
                        progress = true;
                    }
                    Err(e @ LangError::UnknownIdentifier { .. }) => {
                        last_err = Some(e);
                        next.push(c);
                    }
                    Err(e) => return Err(e),
                }
            }
            if !progress {
                return Err(last_err.expect("no progress means an unresolved reference"));
            }
            remaining = next;
        }

        // Variables.
        let mut vars = Vec::new();
        for (mi, m) in modules.iter().enumerate() {
            for v in &m.vars {
                if self.var_index.contains_key(&v.name) || self.is_bound(&v.name) {
                    return Err(LangError::Duplicate { pos: v.pos, name: v.name.clone() });
                }
                let info = self.var_info(mi, v)?;
                self.var_index.insert(v.name.clone(), vars.len());
                vars.push(info);
            }
        }

        // Commands.
        let mut commands = Vec::new();
        let mut infos = Vec::new();
        let mut actions: Vec<String> = Vec::new();
        for (mi, m) in modules.iter().enumerate() {
            let mut info = ModuleInfo { name: m.name.clone(), commands: Vec::new(), alphabet: BTreeSet::new() };
            for c in &m.commands {
                let guard = self.expr(&c.guard)?;
                self.check_position(&guard, c.pos, "guards", false)?;
                let mut updates = Vec::new();
                for u in &c.updates {
                    let prob = match &u.prob {
                        Some(p) => self.expr(p)?,
                        None => RExpr::Lit(Value::Int(1)),
                    };
                    let mut assigns = Vec::new();
                    let mut seen = BTreeSet::new();
                    for a in &u.assigns {
                        let Some(&vi) = self.var_index.get(&a.var) else {
                            return Err(LangError::UnknownIdentifier { pos: a.pos, name: a.var.clone() });
                        };
                        if !seen.insert(vi) {
                            return Err(LangError::Type {
                                pos: Some(a.pos),
                                msg: format!("variable `{}` assigned twice in one update", a.var),
                            });
                        }
                        let rhs = self.expr(&a.value)?;
                        self.check_position(&rhs, a.pos, "assignments", false)?;
                        assigns.push((vi, rhs));
                    }
                    updates.push(RUpdate { prob, assigns });
                }
                if let Some(a) = &c.action {
                    info.alphabet.insert(a.clone());
                    if !actions.contains(a) {
                        actions.push(a.clone());
                    }
                }
                info.commands.push(commands.len());
                commands.push(RCommand { module: mi, action: c.action.clone(), guard, updates, pos: c.pos });
            }
            infos.push(info);
        }

        let mut labels: Vec<(String, RExpr)> = Vec::new();
        for item in &program.items {
            if let Item::Label { name, expr, pos } = item {
                if labels.iter().any(|(n, _)| n == name) {
                    return Err(LangError::Duplicate { pos: *pos, name: name.clone() });
                }
                let e = self.expr(expr)?;
                self.check_position(&e, *pos, "labels", true)?;
                labels.push((name.clone(), e));
            }
        }

        Ok(Model {
            vars,
            modules: infos,
            commands,
            actions,
            labels,
            parameters: self.params.into_iter().collect(),
            constants: self.consts,
        })
    }

    fn is_bound(&self, name: &str) -> bool {
        self.consts.contains_key(name) || self.params.contains(name) || self.formulas.contains_key(name)
    }

    fn check_position(&self, e: &RExpr, pos: Pos, what: &str, boolean: bool) -> Result<(), LangError> {
        if e.has_param() {
            return Err(LangError::Type { pos: Some(pos), msg: format!("parameters are not allowed in {what}") });
        }
        if e.has_division() {
            return Err(LangError::Type {
                pos: Some(pos),
                msg: format!("division is only allowed in probabilities, not in {what}"),
            });
        }
        if boolean {
            // Labels must be boolean in every state; check the static shape.
            if !is_boolean_shaped(e) {
                return Err(LangError::Type { pos: Some(pos), msg: format!("{what} must be boolean") });
            }
        }
        Ok(())
    }

    fn const_value(&mut self, c: &ConstDecl) -> Result<Option<Value>, LangError> {
        let Some(e) = &c.value else {
            return match c.ty {
                ConstType::Double => Ok(None),
                _ => Err(LangError::Type { pos: Some(c.pos), msg: format!("constant `{}` has no value", c.name) }),
            };
        };
        let r = self.expr(e)?;
        let v = r.eval(&|_| unreachable!("constants cannot read variables"), None).map_err(|err| LangError::Eval {
            context: format!("{}: constant `{}`", c.pos, c.name),
            error: err,
        })?;
        let typed = match (c.ty, &v) {
            (ConstType::Int, Value::Int(_)) | (ConstType::Bool, Value::Bool(_)) | (ConstType::Double, Value::Real(_)) => v,
            (ConstType::Double, Value::Int(n)) => Value::Real(Polynomial::constant(crate::num::int(*n))),
            _ => {
                return Err(LangError::Type {
                    pos: Some(c.pos),
                    msg: format!("constant `{}` has the wrong type ({v})", c.name),
                })
            }
        };
        Ok(Some(typed))
    }

    fn const_int(&mut self, e: &Expr, pos: Pos) -> Result<i64, LangError> {
        let r = self.expr(e)?;
        if !r.vars().is_empty() || r.has_param() {
            return Err(LangError::Type { pos: Some(pos), msg: "expected a constant integer".into() });
        }
        r.eval(&|_| unreachable!(), None)
            .and_then(|v| match v {
                Value::Bool(_) => Err(EvalError::Type("expected an integer, found a boolean".into())),
                v => v.as_int(),
            })
            .map_err(|error| LangError::Eval { context: pos.to_string(), error })
    }

    fn var_info(&mut self, module: usize, v: &VarDecl) -> Result<VarInfo, LangError> {
        let (is_bool, lower, upper) = match &v.ty {
            VarType::Bool => (true, 0, 1),
            VarType::Range(lo, hi) => (false, self.const_int(lo, v.pos)?, self.const_int(hi, v.pos)?),
        };
        if upper < lower {
            return Err(LangError::Type { pos: Some(v.pos), msg: format!("empty range for `{}`", v.name) });
        }
        let size = (upper - lower) as u64 + 1;
        let init = match &v.init {
            None => 0,
            Some(e) if is_bool => {
                let r = self.expr(e)?;
                let b = r
                    .eval(&|_| unreachable!(), None)
                    .and_then(|x| x.as_int())
                    .map_err(|error| LangError::Eval { context: v.pos.to_string(), error })?;
                if !(0..=1).contains(&b) {
                    return Err(LangError::Type { pos: Some(v.pos), msg: "boolean initial value expected".into() });
                }
                b as u64
            }
            Some(e) => {
                let n = self.const_int(e, v.pos)?;
                if n < lower || n > upper {
                    return Err(LangError::Type {
                        pos: Some(v.pos),
                        msg: format!("initial value {n} of `{}` outside [{lower}..{upper}]", v.name),
                    });
                }
                (n - lower) as u64
            }
        };
        Ok(VarInfo { name: v.name.clone(), module, is_bool, lower, size, init })
    }

    fn expr(&mut self, e: &Expr) -> Result<RExpr, LangError> {
        Ok(match e {
            Expr::Bool(b) => RExpr::Lit(Value::Bool(*b)),
            Expr::Int(n) => RExpr::Lit(Value::Int(*n)),
            Expr::Real(s) => RExpr::Lit(Value::Real(Polynomial::constant(
                parse_rational(s).map_err(|_| LangError::syntax(Pos::default(), format!("bad number `{s}`")))?,
            ))),
            Expr::Ident(name, pos) => {
                if let Some(&i) = self.var_index.get(name) {
                    RExpr::Var(i)
                } else if let Some(v) = self.consts.get(name) {
                    RExpr::Lit(v.clone())
                } else if self.params.contains(name) {
                    RExpr::Param(name.clone())
                } else if let Some(f) = self.formulas.get(name).cloned() {
                    if self.formula_stack.contains(name) {
                        return Err(LangError::Type { pos: Some(*pos), msg: format!("formula `{name}` is recursive") });
                    }
                    self.formula_stack.push(name.clone());
                    let r = self.expr(&f);
                    self.formula_stack.pop();
                    r?
                } else {
                    return Err(LangError::UnknownIdentifier { pos: *pos, name: name.clone() });
                }
            }
            Expr::Unary(op, a) => RExpr::Unary(*op, Box::new(self.expr(a)?)),
            Expr::Binary(op, a, b) => RExpr::Binary(*op, Box::new(self.expr(a)?), Box::new(self.expr(b)?)),
            Expr::Ite(c, a, b) => RExpr::Ite(Box::new(self.expr(c)?), Box::new(self.expr(a)?), Box::new(self.expr(b)?)),
            Expr::Call(f, args, _) => RExpr::Call(*f, args.iter().map(|a| self.expr(a)).collect::<Result<_, _>>()?),
        })
    }
}

fn is_boolean_shaped(e: &RExpr) -> bool {
    match e {
        RExpr::Lit(v) => matches!(v, Value::Bool(_)),
        RExpr::Var(_) | RExpr::Param(_) => true,
        RExpr::Unary(op, _) => *op == UnOp::Not,
        RExpr::Binary(op, ..) => !matches!(op, BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div),
        RExpr::Ite(_, a, b) => is_boolean_shaped(a) && is_boolean_shaped(b),
        RExpr::Call(f, _) => *f == Func::ExactlyOneOf,
    }
}

/// Concrete module list: declared modules plus expanded renamings, in source order.
fn expand_renamings(program: &Program) -> Result<Vec<ModuleDecl>, LangError> {
    let declared: HashMap<&str, &ModuleDecl> = program
        .items
        .iter()
        .filter_map(|i| match i {
            Item::Module(m) => Some((m.name.as_str(), m)),
            _ => None,
        })
        .collect();
    let mut names = BTreeSet::new();
    let mut out = Vec::new();
    for item in &program.items {
        let m = match item {
            Item::Module(m) => m.clone(),
            Item::Rename(r) => {
                let Some(src) = declared.get(r.source.as_str()) else {
                    return Err(LangError::UnknownIdentifier { pos: r.pos, name: r.source.clone() });
                };
                rename_module(src, r)?
            }
            _ => continue,
        };
        if !names.insert(m.name.clone()) {
            return Err(LangError::Duplicate { pos: m.pos, name: m.name.clone() });
        }
        out.push(m);
    }
    Ok(out)
}

fn rename_module(src: &ModuleDecl, r: &RenameDecl) -> Result<ModuleDecl, LangError> {
    let mut used: BTreeSet<String> = BTreeSet::new();
    for v in &src.vars {
        used.insert(v.name.clone());
        if let Some(i) = &v.init {
            i.visit_idents(&mut |n, _| {
                used.insert(n.to_string());
            });
        }
        if let VarType::Range(lo, hi) = &v.ty {
            for e in [lo, hi] {
                e.visit_idents(&mut |n, _| {
                    used.insert(n.to_string());
                });
            }
        }
    }
    for c in &src.consts {
        used.insert(c.name.clone());
    }
    for c in &src.commands {
        if let Some(a) = &c.action {
            used.insert(a.clone());
        }
        let mut add = |n: &str, _| {
            used.insert(n.to_string());
        };
        c.guard.visit_idents(&mut add);
        for u in &c.updates {
            if let Some(p) = &u.prob {
                p.visit_idents(&mut add);
            }
            for a in &u.assigns {
                add(&a.var, Pos::default());
                a.value.visit_idents(&mut add);
            }
        }
    }
    let mut map: HashMap<String, String> = HashMap::new();
    for (from, to) in &r.map {
        if !used.contains(from) {
            return Err(LangError::RenameUndeclared { pos: r.pos, name: from.clone(), module: src.name.clone() });
        }
        if map.insert(from.clone(), to.clone()).is_some() {
            return Err(LangError::Duplicate { pos: r.pos, name: from.clone() });
        }
    }
    let f = |n: &str| map.get(n).cloned();
    let rn = |n: &String| map.get(n).cloned().unwrap_or_else(|| n.clone());
    Ok(ModuleDecl {
        name: r.name.clone(),
        consts: src
            .consts
            .iter()
            .map(|c| ConstDecl { name: rn(&c.name), value: c.value.as_ref().map(|e| e.rename(&f)), ..c.clone() })
            .collect(),
        vars: src
            .vars
            .iter()
            .map(|v| VarDecl {
                name: rn(&v.name),
                ty: match &v.ty {
                    VarType::Bool => VarType::Bool,
                    VarType::Range(lo, hi) => VarType::Range(lo.rename(&f), hi.rename(&f)),
                },
                init: v.init.as_ref().map(|e| e.rename(&f)),
                pos: v.pos,
            })
            .collect(),
        commands: src
            .commands
            .iter()
            .map(|c| Command {
                action: c.action.as_ref().map(rn),
                guard: c.guard.rename(&f),
                updates: c
                    .updates
                    .iter()
                    .map(|u| Update {
                        prob: u.prob.as_ref().map(|p| p.rename(&f)),
                        assigns: u
                            .assigns
                            .iter()
                            .map(|a| Assign { var: rn(&a.var), value: a.value.rename(&f), pos: a.pos })
                            .collect(),
                    })
                    .collect(),
                pos: c.pos,
            })
            .collect(),
        pos: r.pos,
    })
}
