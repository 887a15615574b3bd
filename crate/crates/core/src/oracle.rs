//! Reference interpreter with an ideal reclaimer.
//!
//! Every activation tracks the live weight, per counting class, of objects
//! allocated while it was on the stack. An array of length `n` weighs `n`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::frontend::ast::*;
use crate::frontend::{pretty, Resolved};
use crate::instrument;
use crate::lower;
use crate::summary::{clause_name, Mode};
use crate::symexpr::GridConfig;

pub type ObjId = u32;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Str(String),
    Null,
    Ref { r#ref: ObjId },
}

impl Value {
    fn obj(id: ObjId) -> Value {
        Value::Ref { r#ref: id }
    }

    fn as_ref(&self) -> Option<ObjId> {
        match self {
            Value::Ref { r#ref } => Some(*r#ref),
            _ => None,
        }
    }

    fn default_of(ty: &Type) -> Value {
        match ty {
            Type::Int => Value::Int(0),
            Type::Bool => Value::Bool(false),
            Type::Str => Value::Str(String::new()),
            _ => Value::Null,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Str(s) => write!(f, "{s:?}"),
            Value::Null => f.write_str("null"),
            Value::Ref { r#ref } => write!(f, "#{ref}"),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GcMode {
    /// Reclaim after every statement.
    #[default]
    Ideal,
    /// Reclaim only when a method returns.
    MethodExit,
    Never,
}

impl GcMode {
    pub fn name(self) -> &'static str {
        match self {
            GcMode::Ideal => "ideal",
            GcMode::MethodExit => "method-exit",
            GcMode::Never => "never",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("requires of {method} does not hold: {clause}")]
    RequiresViolation { method: MethodRef, clause: String },
    #[error("null dereference at line {line}")]
    NullDereference { line: u32 },
    #[error("index {index} out of bounds for length {len} at line {line}")]
    ArrayBounds { line: u32, index: i64, len: usize },
    #[error("negative array length {len} at line {line}")]
    NegativeLength { line: u32, len: i64 },
    #[error("division by zero at line {line}")]
    DivisionByZero { line: u32 },
    #[error("integer overflow at line {line}")]
    Overflow { line: u32 },
    #[error("call depth exceeds {0}")]
    StackOverflow(usize),
    #[error("step limit of {0} exceeded")]
    StepLimit(u64),
    #[error("bad argument: {0}")]
    BadArgument(String),
    #[error("no method `{0}`")]
    UnknownMethod(String),
    #[error("grid of {points} argument vectors exceeds the cap of {cap}")]
    GridTooLarge { points: u64, cap: u64 },
    #[error("interpreter invariant broken: {0}")]
    Internal(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "event", rename_all = "lowercase")]
pub enum Event {
    Alloc {
        obj: ObjId,
        class: String,
        weight: i64,
        site: u32,
        line: u32,
        activation: u32,
    },
    Reclaim {
        obj: ObjId,
        class: String,
    },
    Call {
        activation: u32,
        method: String,
    },
    Ret {
        activation: u32,
        method: String,
        /// Objects allocated during the activation and live at its exit.
        live: Vec<ObjId>,
    },
}

/// A failed `ensure` at method exit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AssertionFailure {
    pub method: MethodRef,
    pub activation: u32,
    pub counter: String,
    pub value: i64,
    pub bound: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClauseCheck {
    pub clause: String,
    pub observed: i64,
    /// Declared bound evaluated at entry; 0 for an undeclared class.
    pub bound: i64,
}

impl ClauseCheck {
    pub fn holds(&self) -> bool {
        self.observed <= self.bound
    }
}

/// What one returned activation consumed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Observation {
    pub activation: u32,
    pub parent: Option<u32>,
    pub method: MethodRef,
    pub peak: BTreeMap<String, i64>,
    /// Tag name to per-class escaping weight.
    pub esc: BTreeMap<String, BTreeMap<String, i64>>,
    /// Escaping objects reachable from more than one tag root; they count
    /// toward each of those tags.
    pub shared_escapes: i64,
    pub checks: Vec<ClauseCheck>,
    /// Ghost counters at exit.
    pub counters: BTreeMap<String, i64>,
}

impl Observation {
    pub fn peak_of(&self, key: &str) -> i64 {
        self.peak.get(key).copied().unwrap_or(0)
    }

    pub fn esc_of(&self, tag: &Tag, key: &str) -> i64 {
        self.esc.get(&tag.to_string()).and_then(|m| m.get(key)).copied().unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RunResult {
    pub ret: Value,
    pub observations: Vec<Observation>,
    pub assertion_failures: Vec<AssertionFailure>,
    pub trace: Vec<Event>,
}

impl RunResult {
    /// Observation of the entry activation.
    pub fn entry(&self) -> &Observation {
        self.observations.last().expect("entry activation returned")
    }

    pub fn trace_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.trace {
            out.push_str(&serde_json::to_string(e).expect("events serialize"));
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub gc: GcMode,
    pub mode: Mode,
    pub trace: bool,
    /// Assert the per-activation accounting identity after each collection.
    pub check_invariants: bool,
    pub max_depth: usize,
    pub max_steps: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            gc: GcMode::Ideal,
            mode: Mode::ByType,
            trace: true,
            check_invariants: false,
            max_depth: 256,
            max_steps: 5_000_000,
        }
    }
}

#[derive(Clone, Debug)]
enum Contents {
    Record(BTreeMap<String, Value>),
    Array(Vec<Value>),
}

#[derive(Clone, Debug)]
struct Object {
    class: String,
    key: String,
    weight: i64,
    /// Activations on the stack when the object was allocated.
    chain: Vec<u32>,
    alive: bool,
    contents: Contents,
}

struct Frame {
    act: u32,
    this: Option<Value>,
    vars: BTreeMap<String, Value>,
    ghosts: BTreeMap<String, i64>,
    ensures: Vec<(String, i64)>,
    current: BTreeMap<String, i64>,
    peak: BTreeMap<String, i64>,
}

enum Flow {
    Normal,
    Return(Value),
}

/// Interpreter state for one run. Objects created before [`Interp::call`]
/// belong to the harness and are never counted.
pub struct Interp<'r> {
    res: &'r Resolved,
    opts: RunOptions,
    objects: Vec<Object>,
    live: BTreeSet<ObjId>,
    globals: BTreeMap<String, Value>,
    frames: Vec<Frame>,
    next_act: u32,
    steps: u64,
    observations: Vec<Observation>,
    failures: Vec<AssertionFailure>,
    trace: Vec<Event>,
}

type R<T> = Result<T, OracleError>;

fn arith(line: u32, op: BinOp, a: i64, b: i64) -> R<i64> {
    let r = match op {
        BinOp::Add => a.checked_add(b),
        BinOp::Sub => a.checked_sub(b),
        BinOp::Mul => a.checked_mul(b),
        BinOp::Div | BinOp::Rem if b == 0 => return Err(OracleError::DivisionByZero { line }),
        BinOp::Div => a.checked_div(b),
        BinOp::Rem => a.checked_rem(b),
        _ => unreachable!("not arithmetic"),
    };
    r.ok_or(OracleError::Overflow { line })
}

impl<'r> Interp<'r> {
    pub fn new(res: &'r Resolved, opts: RunOptions) -> Self {
        let globals = res
            .program
            .globals
            .iter()
            .map(|g| (g.name.clone(), Value::default_of(&g.ty)))
            .collect();
        Self {
            res,
            opts,
            objects: Vec::new(),
            live: BTreeSet::new(),
            globals,
            frames: Vec::new(),
            next_act: 1,
            steps: 0,
            observations: Vec::new(),
            failures: Vec::new(),
            trace: Vec::new(),
        }
    }

    fn alloc(&mut self, class: String, weight: i64, contents: Contents, site: u32, line: u32) -> ObjId {
        let id = self.objects.len() as ObjId;
        let key = self.opts.mode.key(&class);
        let chain: Vec<u32> = self.frames.iter().map(|f| f.act).collect();
        for f in &mut self.frames {
            let c = f.current.entry(key.clone()).or_insert(0);
            *c += weight;
            let p = f.peak.entry(key.clone()).or_insert(0);
            *p = (*p).max(*c);
        }
        if self.opts.trace {
            if let Some(f) = self.frames.last() {
                self.trace.push(Event::Alloc {
                    obj: id,
                    class: class.clone(),
                    weight,
                    site,
                    line,
                    activation: f.act,
                });
            }
        }
        self.objects.push(Object {
            class,
            key,
            weight,
            chain,
            alive: true,
            contents,
        });
        self.live.insert(id);
        id
    }

    fn default_record(&self, class: &str) -> Contents {
        let fields = self
            .res
            .program
            .class(class)
            .map(|c| c.fields.iter().map(|f| (f.name.clone(), Value::default_of(&f.ty))).collect())
            .unwrap_or_default();
        Contents::Record(fields)
    }

    /// Harness object of `class` with default fields.
    pub fn harness_object(&mut self, class: &str) -> Value {
        let c = self.default_record(class);
        Value::obj(self.alloc(class.to_string(), 1, c, 0, 0))
    }

    /// Harness array; its elements must already be values of `elem`.
    pub fn harness_array(&mut self, elem: &Type, items: Vec<Value>) -> Value {
        let class = Type::Array(Box::new(elem.clone())).class_ref();
        let w = items.len() as i64;
        Value::obj(self.alloc(class, w, Contents::Array(items), 0, 0))
    }

    /// Harness array of `len` placeholder elements.
    pub fn harness_array_of_len(&mut self, elem: &Type, len: usize) -> Value {
        let items = (0..len)
            .map(|i| match elem {
                Type::Str => Value::Str(format!("s{i}")),
                t => Value::default_of(t),
            })
            .collect();
        self.harness_array(elem, items)
    }

    pub fn set_field(&mut self, obj: &Value, field: &str, v: Value) -> R<()> {
        let id = obj.as_ref().ok_or(OracleError::NullDereference { line: 0 })?;
        match &mut self.objects[id as usize].contents {
            Contents::Record(m) => {
                m.insert(field.to_string(), v);
                Ok(())
            }
            Contents::Array(_) => Err(OracleError::BadArgument(format!("array has no field `{field}`"))),
        }
    }

    pub fn field(&self, obj: &Value, field: &str) -> R<Value> {
        let id = obj.as_ref().ok_or(OracleError::NullDereference { line: 0 })?;
        self.read_field(id, field, 0)
    }

    /// Value of a JSON argument as type `ty`.
    pub fn from_json(&mut self, ty: &Type, j: &serde_json::Value) -> R<Value> {
        use serde_json::Value as J;
        let bad = || OracleError::BadArgument(format!("`{j}` is not a {ty}"));
        Ok(match (ty, j) {
            (_, J::Null) if ty.is_ref() => Value::Null,
            (Type::Int, J::Number(n)) => Value::Int(n.as_i64().ok_or_else(bad)?),
            (Type::Bool, J::Bool(b)) => Value::Bool(*b),
            (Type::Str, J::String(s)) => Value::Str(s.clone()),
            (Type::Array(elem), J::Array(items)) => {
                let vals = items.iter().map(|x| self.from_json(elem, x)).collect::<R<Vec<_>>>()?;
                self.harness_array(elem, vals)
            }
            (Type::Array(elem), J::Number(n)) => {
                let len = n.as_u64().ok_or_else(bad)? as usize;
                self.harness_array_of_len(elem, len)
            }
            (Type::Class(c), J::Object(fields)) => {
                let obj = self.harness_object(c);
                let decl = self.res.program.class(c).ok_or_else(bad)?;
                let tys: Vec<(String, Type)> = decl.fields.iter().map(|f| (f.name.clone(), f.ty.clone())).collect();
                for (name, x) in fields {
                    let (_, fty) = tys
                        .iter()
                        .find(|(n, _)| n == name)
                        .ok_or_else(|| OracleError::BadArgument(format!("class `{c}` has no field `{name}`")))?;
                    let v = self.from_json(fty, x)?;
                    self.set_field(&obj, name, v)?;
                }
                obj
            }
            _ => return Err(bad()),
        })
    }

    fn deref(&self, id: ObjId) -> R<&Object> {
        let o = &self.objects[id as usize];
        if !o.alive {
            return Err(OracleError::Internal(format!("read of reclaimed object #{id}")));
        }
        Ok(o)
    }

    fn read_field(&self, id: ObjId, f: &str, line: u32) -> R<Value> {
        match &self.deref(id)?.contents {
            Contents::Array(items) if f == "length" => Ok(Value::Int(items.len() as i64)),
            Contents::Record(m) => m
                .get(f)
                .cloned()
                .ok_or_else(|| OracleError::Internal(format!("missing field `{f}` at line {line}"))),
            Contents::Array(_) => Err(OracleError::Internal(format!("array field `{f}` at line {line}"))),
        }
    }

    fn frame(&self) -> &Frame {
        self.frames.last().expect("active frame")
    }

    fn frame_mut(&mut self) -> &mut Frame {
        self.frames.last_mut().expect("active frame")
    }

    fn lookup(&self, v: &str) -> R<Value> {
        let f = self.frame();
        if let Some(x) = f.vars.get(v) {
            return Ok(x.clone());
        }
        if let Some(g) = f.ghosts.get(v) {
            return Ok(Value::Int(*g));
        }
        self.globals
            .get(v)
            .cloned()
            .ok_or_else(|| OracleError::Internal(format!("unbound variable `{v}`")))
    }

    fn int(&self, e: &Expr, line: u32) -> R<i64> {
        match self.eval(e, line)? {
            Value::Int(v) => Ok(v),
            v => Err(OracleError::Internal(format!("`{}` evaluated to {v}, not an int", pretty::expr(e)))),
        }
    }

    fn bool(&self, e: &Expr, line: u32) -> R<bool> {
        match self.eval(e, line)? {
            Value::Bool(b) => Ok(b),
            v => Err(OracleError::Internal(format!("`{}` evaluated to {v}, not a bool", pretty::expr(e)))),
        }
    }

    fn obj_of(&self, e: &Expr, line: u32) -> R<ObjId> {
        self.eval(e, line)?.as_ref().ok_or(OracleError::NullDereference { line })
    }

    fn eval(&self, e: &Expr, line: u32) -> R<Value> {
        Ok(match e {
            Expr::Int(v) => Value::Int(*v),
            Expr::Bool(b) => Value::Bool(*b),
            Expr::Str(s) => Value::Str(s.clone()),
            Expr::Null => Value::Null,
            Expr::This => self.frame().this.clone().ok_or(OracleError::NullDereference { line })?,
            Expr::Var(v) => self.lookup(v)?,
            Expr::Field(b, f) => {
                let id = self.obj_of(b, line)?;
                self.read_field(id, f, line)?
            }
            Expr::Index(a, i) => {
                let id = self.obj_of(a, line)?;
                let i = self.int(i, line)?;
                match &self.deref(id)?.contents {
                    Contents::Array(items) => {
                        let len = items.len();
                        usize::try_from(i)
                            .ok()
                            .and_then(|k| items.get(k))
                            .cloned()
                            .ok_or(OracleError::ArrayBounds { line, index: i, len })?
                    }
                    Contents::Record(_) => return Err(OracleError::Internal("indexing a record".into())),
                }
            }
            Expr::Unary(UnOp::Neg, x) => Value::Int(self.int(x, line)?.checked_neg().ok_or(OracleError::Overflow { line })?),
            Expr::Unary(UnOp::Not, x) => Value::Bool(!self.bool(x, line)?),
            Expr::Binary(op, l, r) => match op {
                BinOp::And => Value::Bool(self.bool(l, line)? && self.bool(r, line)?),
                BinOp::Or => Value::Bool(self.bool(l, line)? || self.bool(r, line)?),
                BinOp::Eq => Value::Bool(self.eval(l, line)? == self.eval(r, line)?),
                BinOp::Ne => Value::Bool(self.eval(l, line)? != self.eval(r, line)?),
                BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Rem => {
                    Value::Int(arith(line, *op, self.int(l, line)?, self.int(r, line)?)?)
                }
                _ => {
                    let (a, b) = (self.int(l, line)?, self.int(r, line)?);
                    Value::Bool(match op {
                        BinOp::Lt => a < b,
                        BinOp::Le => a <= b,
                        BinOp::Gt => a > b,
                        _ => a >= b,
                    })
                }
            },
            Expr::Max(a, b) => Value::Int(self.int(a, line)?.max(self.int(b, line)?)),
        })
    }

    fn store(&mut self, t: &Target, v: Value, line: u32) -> R<()> {
        match t {
            Target::Declare(n, _) => {
                self.frame_mut().vars.insert(n.clone(), v);
            }
            Target::Var(n) => {
                if self.frame().vars.contains_key(n) {
                    self.frame_mut().vars.insert(n.clone(), v);
                } else if self.globals.contains_key(n) {
                    self.globals.insert(n.clone(), v);
                } else {
                    return Err(OracleError::Internal(format!("assignment to unbound `{n}`")));
                }
            }
            Target::Field(b, f) => {
                let id = self.obj_of(b, line)?;
                self.deref(id)?;
                match &mut self.objects[id as usize].contents {
                    Contents::Record(m) => {
                        m.insert(f.clone(), v);
                    }
                    Contents::Array(_) => return Err(OracleError::Internal("field store on an array".into())),
                }
            }
            Target::Index(a, i) => {
                let id = self.obj_of(a, line)?;
                let i = self.int(i, line)?;
                self.deref(id)?;
                match &mut self.objects[id as usize].contents {
                    Contents::Array(items) => {
                        let len = items.len();
                        let slot = usize::try_from(i)
                            .ok()
                            .and_then(|k| items.get_mut(k))
                            .ok_or(OracleError::ArrayBounds { line, index: i, len })?;
                        *slot = v;
                    }
                    Contents::Record(_) => return Err(OracleError::Internal("index store on a record".into())),
                }
            }
        }
        Ok(())
    }

    fn reach(&self, roots: impl IntoIterator<Item = Value>) -> BTreeSet<ObjId> {
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<ObjId> = roots.into_iter().filter_map(|v| v.as_ref()).collect();
        while let Some(id) = queue.pop_front() {
            if !seen.insert(id) {
                continue;
            }
            let o = &self.objects[id as usize];
            let vals: Box<dyn Iterator<Item = &Value>> = match &o.contents {
                Contents::Record(m) => Box::new(m.values()),
                Contents::Array(items) => Box::new(items.iter()),
            };
            queue.extend(vals.filter_map(Value::as_ref));
        }
        seen
    }

    fn frame_roots(&self, frames: &[Frame]) -> Vec<Value> {
        let mut out: Vec<Value> = self.globals.values().cloned().collect();
        for f in frames {
            out.extend(f.vars.values().cloned());
            out.extend(f.this.clone());
        }
        out
    }

    fn collect(&mut self, extra: Vec<Value>, skip_top: bool) -> R<()> {
        let n = self.frames.len() - usize::from(skip_top);
        let mut roots = self.frame_roots(&self.frames[..n]);
        roots.extend(extra);
        let reachable = self.reach(roots);
        let dead: Vec<ObjId> = self.live.iter().copied().filter(|id| !reachable.contains(id)).collect();
        for id in dead {
            self.live.remove(&id);
            let o = &mut self.objects[id as usize];
            o.alive = false;
            o.contents = Contents::Record(BTreeMap::new());
            let (key, w, chain, class) = (o.key.clone(), o.weight, o.chain.clone(), o.class.clone());
            for f in &mut self.frames {
                if chain.contains(&f.act) {
                    *f.current.get_mut(&key).expect("counted on allocation") -= w;
                }
            }
            if self.opts.trace && !chain.is_empty() {
                self.trace.push(Event::Reclaim { obj: id, class });
            }
        }
        if self.opts.check_invariants {
            self.check_accounting()?;
        }
        Ok(())
    }

    fn check_accounting(&self) -> R<()> {
        for f in &self.frames {
            let mut expect: BTreeMap<String, i64> = BTreeMap::new();
            for id in &self.live {
                let o = &self.objects[*id as usize];
                if o.chain.contains(&f.act) {
                    *expect.entry(o.key.clone()).or_insert(0) += o.weight;
                }
            }
            for (k, c) in &f.current {
                if *c < 0 || f.peak.get(k).copied().unwrap_or(0) < *c || expect.get(k).copied().unwrap_or(0) != *c {
                    return Err(OracleError::Internal(format!(
                        "activation {} counts {c} live `{k}`, expected {}",
                        f.act,
                        expect.get(k).copied().unwrap_or(0)
                    )));
                }
            }
        }
        Ok(())
    }

    fn tick(&mut self) -> R<()> {
        self.steps += 1;
        if self.steps > self.opts.max_steps {
            return Err(OracleError::StepLimit(self.opts.max_steps));
        }
        Ok(())
    }

    fn block(&mut self, stmts: &[Stmt]) -> R<Flow> {
        for s in stmts {
            self.tick()?;
            if let Flow::Return(v) = self.stmt(s)? {
                return Ok(Flow::Return(v));
            }
            let silent = s.is_ghost() || matches!(s.kind, StmtKind::Annotation(_));
            if self.opts.gc == GcMode::Ideal && !silent {
                self.collect(Vec::new(), false)?;
            }
        }
        Ok(Flow::Normal)
    }

    fn stmt(&mut self, s: &Stmt) -> R<Flow> {
        let line = s.span.line;
        match &s.kind {
            StmtKind::Local { name, ty } => {
                self.frame_mut().vars.insert(name.clone(), Value::default_of(ty));
            }
            StmtKind::Assign { target, value } => {
                let v = self.eval(value, line)?;
                self.store(target, v, line)?;
            }
            StmtKind::New { target, class, args, .. } => {
                let vals = args.iter().map(|a| self.eval(a, line)).collect::<R<Vec<_>>>()?;
                let c = self.default_record(class);
                let obj = Value::obj(self.alloc(class.clone(), 1, c, s.id, line));
                if let Some(ctor) = self.res.callee(s.id).cloned() {
                    self.invoke(&ctor, Some(obj.clone()), vals, &[])?;
                }
                self.store(target, obj, line)?;
            }
            StmtKind::NewArray { target, elem, len, .. } => {
                let n = self.int(len, line)?;
                if n < 0 {
                    return Err(OracleError::NegativeLength { line, len: n });
                }
                let items = vec![Value::default_of(elem); n as usize];
                let class = Type::Array(Box::new(elem.clone())).class_ref();
                let obj = Value::obj(self.alloc(class, n, Contents::Array(items), s.id, line));
                self.store(target, obj, line)?;
            }
            StmtKind::Call {
                target, receiver, args, ..
            } => {
                let callee = self
                    .res
                    .callee(s.id)
                    .cloned()
                    .ok_or_else(|| OracleError::Internal(format!("unresolved call at line {line}")))?;
                let this = match receiver {
                    Some(r) => Value::obj(self.obj_of(r, line)?),
                    None => self.frame().this.clone().ok_or(OracleError::NullDereference { line })?,
                };
                let mut ins = Vec::new();
                let mut outs = Vec::new();
                for a in args {
                    match a {
                        Arg::In(e) => ins.push(self.eval(e, line)?),
                        Arg::Out(v) => outs.push(v.clone()),
                    }
                }
                let (ret, out_vals) = self.invoke(&callee, Some(this), ins, &outs)?;
                for (name, v) in outs.iter().zip(out_vals) {
                    self.store(&Target::Var(name.clone()), v, line)?;
                }
                if let Some(t) = target {
                    self.store(t, ret, line)?;
                }
            }
            StmtKind::For {
                var, lo, hi, inclusive, body, ..
            } => {
                let lo = self.int(lo, line)?;
                let mut hi = self.int(hi, line)?;
                if !inclusive {
                    hi -= 1;
                }
                let mut i = lo;
                while i <= hi {
                    self.frame_mut().vars.insert(var.clone(), Value::Int(i));
                    if let Flow::Return(v) = self.block(body)? {
                        return Ok(Flow::Return(v));
                    }
                    i += 1;
                }
            }
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => {
                let body = if self.bool(cond, line)? { then_body } else { else_body };
                return self.block(body);
            }
            StmtKind::Return(e) => {
                let v = match e {
                    Some(e) => self.eval(e, line)?,
                    None => Value::Null,
                };
                return Ok(Flow::Return(v));
            }
            StmtKind::Annotation(_) => {}
            StmtKind::GhostDecl { name, init } => {
                let v = self.int(init, line)?;
                self.frame_mut().ghosts.insert(name.clone(), v);
            }
            StmtKind::GhostAssign { name, op, value } => {
                let v = self.int(value, line)?;
                let g = self.frame_mut().ghosts.entry(name.clone()).or_insert(0);
                *g = match op {
                    GhostOp::Set => v,
                    GhostOp::Add => g.checked_add(v).ok_or(OracleError::Overflow { line })?,
                };
            }
            StmtKind::Ensure { counter, bound } => {
                let b = self.int(bound, line)?;
                self.frame_mut().ensures.push((counter.clone(), b));
            }
        }
        Ok(Flow::Normal)
    }

    fn invoke(&mut self, m: &MethodRef, this: Option<Value>, ins: Vec<Value>, outs: &[String]) -> R<(Value, Vec<Value>)> {
        if self.frames.len() >= self.opts.max_depth {
            return Err(OracleError::StackOverflow(self.opts.max_depth));
        }
        let res = self.res;
        let decl = res.method(m);
        let act = self.next_act;
        self.next_act += 1;
        let parent = self.frames.last().map(|f| f.act);
        let mut vars = BTreeMap::new();
        let mut ins = ins.into_iter();
        for p in &decl.params {
            let v = match p.mode {
                ParamMode::In => ins.next().ok_or_else(|| OracleError::BadArgument(format!("too few arguments for {m}")))?,
                ParamMode::Out => Value::default_of(&p.ty),
            };
            vars.insert(p.name.clone(), v);
        }
        self.frames.push(Frame {
            act,
            this: this.clone(),
            vars,
            ghosts: BTreeMap::new(),
            ensures: Vec::new(),
            current: BTreeMap::new(),
            peak: BTreeMap::new(),
        });
        if self.opts.trace {
            self.trace.push(Event::Call {
                activation: act,
                method: m.to_string(),
            });
        }
        for r in decl.contract.requires() {
            if !self.bool(r, decl.span.line)? {
                return Err(OracleError::RequiresViolation {
                    method: m.clone(),
                    clause: pretty::expr(r),
                });
            }
        }
        let declared = instrument::contract_bounds(decl, self.opts.mode);
        let mut bounds = Vec::new();
        for (c, b) in &declared.mem_req {
            bounds.push((None, c.clone(), self.int(b, decl.span.line)?));
        }
        for ((t, c), b) in &declared.esc {
            bounds.push((Some(t.clone()), c.clone(), self.int(b, decl.span.line)?));
        }
        let ret = match self.block(&decl.body)? {
            Flow::Return(v) => v,
            Flow::Normal => Value::Null,
        };
        let out_vals: Vec<Value> = decl
            .params
            .iter()
            .filter(|p| p.mode == ParamMode::Out)
            .map(|p| self.frame().vars[&p.name].clone())
            .collect();
        if outs.len() != out_vals.len() && !outs.is_empty() {
            return Err(OracleError::Internal(format!("out-argument count mismatch calling {m}")));
        }
        let f = self.frames.last().expect("active frame");
        for (counter, bound) in &f.ensures {
            let value = f.ghosts.get(counter).copied().unwrap_or(0);
            if value > *bound {
                self.failures.push(AssertionFailure {
                    method: m.clone(),
                    activation: act,
                    counter: counter.clone(),
                    value,
                    bound: *bound,
                });
            }
        }
        if self.opts.gc != GcMode::Never {
            let mut extra = vec![ret.clone()];
            extra.extend(this.clone());
            extra.extend(out_vals.iter().cloned());
            self.collect(extra, true)?;
        }
        let mut tag_roots: Vec<(Tag, Value)> = Vec::new();
        if let Some(t) = &this {
            tag_roots.push((Tag::This, t.clone()));
        }
        tag_roots.push((Tag::Return, ret.clone()));
        for c in &decl.contract.clauses {
            if let Clause::BindEsc { tag, path } = c {
                let mut v = match path.root.as_str() {
                    "return" => ret.clone(),
                    "this" => this.clone().unwrap_or(Value::Null),
                    r => self.frame().vars.get(r).cloned().unwrap_or(Value::Null),
                };
                for fl in &path.fields {
                    v = match v.as_ref() {
                        Some(id) => self.read_field(id, fl, 0)?,
                        None => Value::Null,
                    };
                }
                tag_roots.push((tag.clone(), v));
            }
        }
        let mine = |o: &Object| o.alive && o.chain.contains(&act);
        let mut esc: BTreeMap<String, BTreeMap<String, i64>> = BTreeMap::new();
        let mut owners: BTreeMap<ObjId, usize> = BTreeMap::new();
        for (tag, root) in &tag_roots {
            let reached = self.reach([root.clone()]);
            let per = esc.entry(tag.to_string()).or_default();
            for id in reached {
                let o = &self.objects[id as usize];
                if mine(o) {
                    *per.entry(o.key.clone()).or_insert(0) += o.weight;
                    *owners.entry(id).or_insert(0) += 1;
                }
            }
        }
        esc.retain(|_, m| !m.is_empty());
        let shared_escapes = owners
            .iter()
            .filter(|(_, n)| **n > 1)
            .map(|(id, _)| self.objects[*id as usize].weight)
            .sum();
        let frame = self.frames.pop().expect("active frame");
        if decl.contract.has_memory_clauses() {
            for (key, _) in frame.peak.iter().filter(|(_, v)| **v > 0) {
                if !declared.mem_req.iter().any(|(c, _)| c == key) {
                    bounds.push((None, key.clone(), 0));
                }
            }
        }
        let checks: Vec<ClauseCheck> = bounds
            .into_iter()
            .map(|(tag, key, bound)| {
                let observed = match &tag {
                    None => frame.peak.get(&key).copied().unwrap_or(0),
                    Some(t) => esc.get(&t.to_string()).and_then(|m| m.get(&key)).copied().unwrap_or(0),
                };
                ClauseCheck {
                    clause: clause_name(&key, tag.as_ref()),
                    observed,
                    bound,
                }
            })
            .collect();
        if self.opts.trace {
            let live = self.live.iter().copied().filter(|id| mine(&self.objects[*id as usize])).collect();
            self.trace.push(Event::Ret {
                activation: act,
                method: m.to_string(),
                live,
            });
        }
        self.observations.push(Observation {
            activation: act,
            parent,
            method: m.clone(),
            peak: frame.peak.into_iter().filter(|(_, v)| *v > 0).collect(),
            esc,
            shared_escapes,
            checks,
            counters: frame.ghosts,
        });
        Ok((ret, out_vals))
    }

    /// Runs `entry` on a harness receiver (when given) and arguments.
    pub fn call(mut self, entry: &MethodRef, this: Option<Value>, args: Vec<Value>) -> R<RunResult> {
        let (ret, _) = self.invoke(entry, this, args, &[])?;
        Ok(RunResult {
            ret,
            observations: self.observations,
            assertion_failures: self.failures,
            trace: self.trace,
        })
    }
}

fn entry_ref(res: &Resolved, entry: &str) -> R<MethodRef> {
    let (r, _) = res
        .program
        .find(entry)
        .or_else(|| {
            let c = res.program.class(entry)?.ctor()?;
            Some((MethodRef::new(entry, &c.name), c))
        })
        .ok_or_else(|| OracleError::UnknownMethod(entry.to_string()))?;
    Ok(r)
}

/// Runs `entry` (`Class.method`, or a class name for its constructor) on
/// JSON arguments for its `in` parameters. Instance methods get a receiver
/// with default fields; `this` may be given as a trailing JSON object.
pub fn run(res: &Resolved, entry: &str, args: &[serde_json::Value], opts: &RunOptions) -> R<RunResult> {
    let m = entry_ref(res, entry)?;
    let decl = res.method(&m);
    let mut it = Interp::new(res, opts.clone());
    let ins: Vec<&Param> = decl.params.iter().filter(|p| p.mode == ParamMode::In).collect();
    if args.len() != ins.len() && args.len() != ins.len() + 1 {
        return Err(OracleError::BadArgument(format!("{m} takes {} arguments, {} given", ins.len(), args.len())));
    }
    let vals = ins
        .iter()
        .zip(args)
        .map(|(p, a)| it.from_json(&p.ty, a))
        .collect::<R<Vec<_>>>()?;
    let class = Type::Class(m.class.clone());
    let this = match args.get(ins.len()) {
        Some(j) => it.from_json(&class, j)?,
        None => it.harness_object(&m.class),
    };
    it.call(&m, Some(this), vals)
}

#[derive(Clone, Debug)]
pub struct ValidateOptions {
    pub run: RunOptions,
    /// Grid values per integer input and array length.
    pub grid: GridConfig,
    /// Run the instrumented program so that `ensure` failures surface.
    pub instrumented: bool,
    /// Entries to drive; all methods with memory clauses when empty.
    pub methods: Vec<MethodRef>,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            run: RunOptions {
                trace: false,
                ..RunOptions::default()
            },
            grid: GridConfig::default(),
            instrumented: true,
            methods: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Finding {
    /// Observed consumption above the declared bound.
    Bound {
        method: MethodRef,
        clause: String,
        observed: i64,
        bound: i64,
    },
    Ensure(AssertionFailure),
    /// The run aborted.
    Error { message: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub entry: MethodRef,
    pub args: BTreeMap<String, i64>,
    pub finding: Finding,
    pub trace: Vec<Event>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EntryReport {
    pub method: MethodRef,
    pub inputs: Vec<String>,
    pub vectors: usize,
    pub runs: usize,
    pub excluded: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OracleReport {
    pub gc: GcMode,
    pub mode: Mode,
    pub entries: Vec<EntryReport>,
    pub violations: Vec<Violation>,
    /// Objects counted toward more than one tag, summed over runs.
    pub shared_escapes: i64,
}

impl OracleReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_human(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&format!(
                "{}: {} runs over [{}], {} excluded by requires\n",
                e.method,
                e.runs,
                e.inputs.join(", "),
                e.excluded
            ));
        }
        for v in &self.violations {
            let at: Vec<String> = v.args.iter().map(|(k, x)| format!("{k}={x}")).collect();
            let what = match &v.finding {
                Finding::Bound {
                    method,
                    clause,
                    observed,
                    bound,
                } => format!("{method} {clause}: observed {observed} > bound {bound}"),
                Finding::Ensure(a) => format!("{} ensure({} <= {}) failed with {}", a.method, a.counter, a.bound, a.value),
                Finding::Error { message } => message.clone(),
            };
            out.push_str(&format!("VIOLATION entry {} at {}: {what}\n", v.entry, at.join(", ")));
        }
        if self.shared_escapes > 0 {
            out.push_str(&format!(
                "note: {} escaping objects were reachable from several tags and counted for each\n",
                self.shared_escapes
            ));
        }
        out.push_str(if self.is_clean() { "oracle: no violations\n" } else { "oracle: violations found\n" });
        out
    }
}

/// Inputs that the harness varies for an entry: integer parameters, array
/// lengths, and entry-visible paths named in the contract.
pub fn grid_inputs(res: &Resolved, m: &MethodRef) -> Vec<String> {
    let decl = res.method(m);
    let mut out = BTreeSet::new();
    for p in decl.params.iter().filter(|p| p.mode == ParamMode::In) {
        match &p.ty {
            Type::Int => {
                out.insert(p.name.clone());
            }
            Type::Array(_) => {
                out.insert(format!("{}.length", p.name));
            }
            _ => {}
        }
    }
    for r in decl.contract.requires() {
        if let Ok(cs) = lower::to_constraints(r, &mut lower::path_leaf) {
            for c in cs {
                out.extend(c.vars());
            }
        }
    }
    let bounds = decl.contract.memreq().map(|(_, e)| e).chain(decl.contract.esc().map(|(_, _, e)| e));
    for e in bounds {
        if let Ok(p) = lower::path_poly(e) {
            out.extend(p.vars());
        }
    }
    out.into_iter().collect()
}

fn place(it: &mut Interp<'_>, res: &Resolved, base: &Value, base_ty: &Type, path: &[&str], v: i64) -> R<()> {
    let bad = || OracleError::BadArgument(format!("cannot place a grid value along `{}`", path.join(".")));
    match (base_ty, path) {
        (Type::Class(c), [f, rest @ ..]) => {
            let fty = res.program.class(c).and_then(|cd| cd.field(f)).map(|fd| fd.ty.clone()).ok_or_else(bad)?;
            match (&fty, rest) {
                (Type::Int, []) => it.set_field(base, f, Value::Int(v)),
                (Type::Array(elem), ["length"]) => {
                    let arr = it.harness_array_of_len(elem, v as usize);
                    it.set_field(base, f, arr)
                }
                (Type::Class(_), [_, ..]) => {
                    let mut inner = it.field(base, f)?;
                    if inner == Value::Null {
                        inner = it.harness_object(match &fty {
                            Type::Class(n) => n,
                            _ => unreachable!(),
                        });
                        it.set_field(base, f, inner.clone())?;
                    }
                    place(it, res, &inner, &fty, rest, v)
                }
                _ => Err(bad()),
            }
        }
        _ => Err(bad()),
    }
}

/// Harness receiver and arguments for one grid point.
fn harness(it: &mut Interp<'_>, res: &Resolved, m: &MethodRef, point: &BTreeMap<String, i64>) -> R<(Value, Vec<Value>)> {
    let decl = res.method(m);
    let this = it.harness_object(&m.class);
    let mut args = Vec::new();
    for p in decl.params.iter().filter(|p| p.mode == ParamMode::In) {
        let v = match &p.ty {
            Type::Int => Value::Int(point.get(&p.name).copied().unwrap_or(0)),
            Type::Array(elem) => {
                let len = point.get(&format!("{}.length", p.name)).copied().unwrap_or(0);
                it.harness_array_of_len(elem, len as usize)
            }
            Type::Class(c) => it.harness_object(c),
            Type::Str => Value::Str(p.name.clone()),
            t => Value::default_of(t),
        };
        args.push(v);
    }
    for (path, v) in point {
        let parts: Vec<&str> = path.split('.').collect();
        match parts.as_slice() {
            [_] => {}
            [root, rest @ ..] => {
                if *root == "this" {
                    place(it, res, &this, &Type::Class(m.class.clone()), rest, *v)?;
                } else if let Some(i) = decl.params.iter().filter(|p| p.mode == ParamMode::In).position(|p| p.name == *root) {
                    let ty = &decl.params.iter().filter(|p| p.mode == ParamMode::In).nth(i).expect("index valid").ty;
                    if matches!(ty, Type::Array(_)) && rest == ["length"] {
                        continue;
                    }
                    let base = args[i].clone();
                    place(it, res, &base, ty, rest, *v)?;
                }
            }
            [] => {}
        }
    }
    Ok((this, args))
}

/// Runs `m` on the harness for one grid point of [`grid_inputs`].
pub fn run_point(res: &Resolved, m: &MethodRef, point: &BTreeMap<String, i64>, opts: &RunOptions) -> R<RunResult> {
    let mut it = Interp::new(res, opts.clone());
    let (this, args) = harness(&mut it, res, m, point)?;
    it.call(m, Some(this), args)
}

fn sweep_entry(
    res: &Resolved,
    m: &MethodRef,
    opts: &ValidateOptions,
    violations: &mut Vec<Violation>,
    shared: &mut i64,
) -> R<EntryReport> {
    let inputs = grid_inputs(res, m);
    let vars: BTreeSet<String> = inputs.iter().cloned().collect();
    let points = opts.grid.points(&vars).map_err(|e| match e {
        crate::symexpr::SymError::GridTooLarge { points, cap } => OracleError::GridTooLarge { points, cap },
        e => OracleError::BadArgument(e.to_string()),
    })?;
    let mut report = EntryReport {
        method: m.clone(),
        inputs,
        vectors: 0,
        runs: 0,
        excluded: 0,
    };
    let mut seen: BTreeSet<(MethodRef, String)> = violations
        .iter()
        .filter_map(|v| match &v.finding {
            Finding::Bound { method, clause, .. } => Some((method.clone(), clause.clone())),
            Finding::Ensure(a) => Some((a.method.clone(), a.counter.clone())),
            Finding::Error { .. } => None,
        })
        .collect();
    for point in points {
        report.vectors += 1;
        let attempt = |trace: bool| -> R<RunResult> {
            let mut run = opts.run.clone();
            run.trace = trace;
            run_point(res, m, &point, &run)
        };
        let result = match attempt(false) {
            Ok(r) => r,
            Err(OracleError::RequiresViolation { method, .. }) if method == *m => {
                report.excluded += 1;
                continue;
            }
            Err(e) => {
                violations.push(Violation {
                    entry: m.clone(),
                    args: point.clone(),
                    finding: Finding::Error { message: e.to_string() },
                    trace: Vec::new(),
                });
                continue;
            }
        };
        report.runs += 1;
        let mut found = Vec::new();
        for o in &result.observations {
            *shared += o.shared_escapes;
            for c in o.checks.iter().filter(|c| !c.holds()) {
                if seen.insert((o.method.clone(), c.clause.clone())) {
                    found.push(Finding::Bound {
                        method: o.method.clone(),
                        clause: c.clause.clone(),
                        observed: c.observed,
                        bound: c.bound,
                    });
                }
            }
        }
        for a in &result.assertion_failures {
            if seen.insert((a.method.clone(), a.counter.clone())) {
                found.push(Finding::Ensure(a.clone()));
            }
        }
        if !found.is_empty() {
            let trace = attempt(true).map(|r| r.trace).unwrap_or_default();
            for finding in found {
                violations.push(Violation {
                    entry: m.clone(),
                    args: point.clone(),
                    finding,
                    trace: trace.clone(),
                });
            }
        }
    }
    Ok(report)
}

/// Drives every contracted method over the grid and compares observed
/// peaks and escapes with the declared bounds.
pub fn validate(res: &Resolved, opts: &ValidateOptions) -> R<OracleReport> {
    let instrumented;
    let target = if opts.instrumented {
        let sopts = crate::summary::Options::with_mode(opts.run.mode);
        let ip = instrument::instrument(res, &sopts);
        instrumented = crate::frontend::resolve(ip.program).map_err(|d| OracleError::Internal(format!("{d:?}")))?;
        &instrumented
    } else {
        res
    };
    let entries: Vec<MethodRef> = if opts.methods.is_empty() {
        res.program
            .methods()
            .filter(|(_, d)| d.contract.has_memory_clauses())
            .map(|(r, _)| r)
            .collect()
    } else {
        opts.methods.clone()
    };
    let mut report = OracleReport {
        gc: opts.run.gc,
        mode: opts.run.mode,
        entries: Vec::new(),
        violations: Vec::new(),
        shared_escapes: 0,
    };
    for m in &entries {
        let e = sweep_entry(target, m, opts, &mut report.violations, &mut report.shared_escapes)?;
        report.entries.push(e);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse, resolve};
    use serde_json::json;

    const FAMILY: &str = include_str!("../../../corpus/family.mcl");
    const TEMPS: &str = include_str!("../../../corpus/temporaries.mcl");
    const BIG: &str = include_str!("../../../corpus/big_family.mcl");
    const OBJ: &str = include_str!("../../../corpus/family_object.mcl");

    fn load(src: &str) -> Resolved {
        resolve(parse(src).unwrap()).unwrap()
    }

    fn checked() -> RunOptions {
        RunOptions {
            check_invariants: true,
            ..RunOptions::default()
        }
    }

    #[test]
    fn person_logger_is_temporary() {
        let r = run(&load(FAMILY), "Person", &[json!("a"), json!("b")], &checked()).unwrap();
        let o = r.entry();
        assert_eq!(o.peak_of("Logger"), 1);
        assert_eq!(o.esc_of(&Tag::This, "Logger"), 0);
        assert!(r.trace.iter().any(|e| matches!(e, Event::Reclaim { class, .. } if class == "Logger")));
    }

    #[test]
    fn empty_method_observes_nothing() {
        let r = run(&load("class A { method m() { } }"), "A.m", &[], &checked()).unwrap();
        assert!(r.entry().peak.is_empty() && r.entry().esc.is_empty());
    }

    #[test]
    fn create_family_hand_trace() {
        let r = run(&load(FAMILY), "Town.CreateFamily", &[json!("Doe"), json!(["a", "b", "c"])], &checked()).unwrap();
        let o = r.entry();
        assert_eq!(o.peak_of("Person"), 3);
        assert_eq!(o.peak_of("Logger"), 1);
        assert_eq!(o.esc_of(&Tag::Return, "Person"), 3);
        assert_eq!(o.esc_of(&Tag::Return, "Person[]"), 3);
        assert!(o.checks.iter().all(ClauseCheck::holds));
    }

    #[test]
    fn out_parameters_carry_their_tag() {
        let r = run(&load(FAMILY), "Town.CreateBrothers", &[json!("D"), json!("a"), json!("b")], &checked()).unwrap();
        let o = r.entry();
        assert_eq!(o.esc_of(&Tag::Return, "Person"), 1);
        assert_eq!(o.esc_of(&Tag::User("Param".into()), "Person"), 1);
        assert_eq!(o.peak_of("Person"), 2);
    }

    #[test]
    fn corpus_validates_clean() {
        for (src, mode) in [(FAMILY, Mode::ByType), (TEMPS, Mode::ByType), (BIG, Mode::ByType), (OBJ, Mode::ObjectCount)] {
            let mut opts = ValidateOptions::default();
            opts.run.mode = mode;
            opts.run.check_invariants = true;
            let rep = validate(&load(src), &opts).unwrap();
            assert!(rep.is_clean(), "{}", rep.to_human());
            assert!(rep.entries.iter().all(|e| e.runs > 0));
        }
    }

    #[test]
    fn lowered_bound_has_witness() {
        let src = FAMILY.replace("memreq<Person>(firstNames.length)", "memreq<Person>(firstNames.length - 1)");
        let opts = ValidateOptions {
            instrumented: false,
            ..ValidateOptions::default()
        };
        let rep = validate(&load(&src), &opts).unwrap();
        assert_eq!(rep.violations.len(), 1, "{}", rep.to_human());
        let v = &rep.violations[0];
        assert_eq!(v.args["firstNames.length"], 0);
        assert!(matches!(&v.finding, Finding::Bound { clause, observed: 0, bound: -1, .. } if clause == "memreq<Person>"));
        assert!(!v.trace.is_empty());
    }

    #[test]
    fn lowered_bound_trips_ensure() {
        let src = TEMPS.replace("memreq<A>(n + 5)", "memreq<A>(n + 2)");
        let rep = validate(&load(&src), &ValidateOptions::default()).unwrap();
        assert!(rep.violations.iter().any(|v| matches!(&v.finding, Finding::Ensure(a) if a.counter == "m_MemReq_A")));
    }

    #[test]
    fn big_family_escapes_triangular_number() {
        let res = load(BIG);
        for n in 1..=6i64 {
            let r = run(&res, "Town.CreateBigFamily", &[json!(n)], &checked()).unwrap();
            assert_eq!(r.entry().esc_of(&Tag::Return, "Person"), n * (n + 1) / 2);
        }
    }

    #[test]
    fn requires_is_checked_at_entry() {
        let err = run(&load(TEMPS), "A.m", &[json!(1)], &checked()).unwrap_err();
        assert!(matches!(err, OracleError::RequiresViolation { .. }));
    }

    #[test]
    fn runtime_errors() {
        let res = load("class A { field a: A; field xs: int[]; method m(): int { var b: A = this.a; return b.xs.length; }
            method k(i: int): int { var ys: int[] = new int[2]; return ys[i]; } }");
        assert!(matches!(run(&res, "A.m", &[], &checked()), Err(OracleError::NullDereference { .. })));
        assert!(matches!(run(&res, "A.k", &[json!(2)], &checked()), Err(OracleError::ArrayBounds { index: 2, len: 2, .. })));
    }

    #[test]
    fn instrumented_trace_matches_original() {
        let res = load(FAMILY);
        let ip = crate::instrument::instrument(&res, &Default::default());
        let inst = resolve(ip.program).unwrap();
        let args = [json!("Doe"), json!(["a", "b"])];
        let a = run(&res, "Town.CreateFamily", &args, &checked()).unwrap();
        let b = run(&inst, "Town.CreateFamily", &args, &checked()).unwrap();
        assert_eq!(a.trace, b.trace);
        assert!(b.assertion_failures.is_empty());
        assert_eq!(b.entry().counters["CreateFamily_MemReq_Person"], 2);
    }

    #[test]
    fn coarser_collection_never_lowers_peaks() {
        let res = load(TEMPS);
        let peak = |gc| {
            let o = RunOptions { gc, ..checked() };
            run(&res, "A.m", &[json!(5)], &o).unwrap().entry().peak_of("A")
        };
        let (ideal, exit, never) = (peak(GcMode::Ideal), peak(GcMode::MethodExit), peak(GcMode::Never));
        assert!(ideal <= exit && exit <= never, "{ideal} {exit} {never}");
        assert_eq!(never, 2 * 5 + 3);
    }

    #[test]
    fn shared_escapes_are_reported() {
        let res = load("class A { field next: A; method m(): A { esc<A>(This, 1); esc<A>(Return, 1);
            dest_esc(Return); var a: A = new A(); this.next = a; return a; } }");
        let r = run(&res, "A.m", &[], &checked()).unwrap();
        assert_eq!(r.entry().shared_escapes, 1);
        assert_eq!(r.entry().esc_of(&Tag::This, "A"), 1);
    }

    #[test]
    fn trace_is_json_lines() {
        let r = run(&load(FAMILY), "Person", &[json!("a"), json!("b")], &checked()).unwrap();
        let first = r.trace_jsonl().lines().next().unwrap().to_string();
        assert_eq!(first, r#"{"event":"call","activation":1,"method":"Person.Person"}"#);
    }
}
