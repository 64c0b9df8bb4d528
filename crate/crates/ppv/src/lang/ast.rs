//! Abstract syntax of the core language.

use super::registry::PrimOp;

/// Real-valued expressions.
#[derive(Clone, Debug, PartialEq)]
pub enum RealExpr {
    Const(f64),
    Var(String),
    Prim(PrimOp, Vec<RealExpr>),
}

#[allow(clippy::should_implement_trait)]
impl RealExpr {
    pub fn var(name: &str) -> Self {
        RealExpr::Var(name.to_string())
    }

    pub fn prim(op: PrimOp, args: Vec<RealExpr>) -> Self {
        RealExpr::Prim(op, args)
    }

    pub fn add(a: RealExpr, b: RealExpr) -> Self {
        RealExpr::Prim(PrimOp::Add, vec![a, b])
    }

    pub fn sub(a: RealExpr, b: RealExpr) -> Self {
        RealExpr::Prim(PrimOp::Sub, vec![a, b])
    }

    pub fn mul(a: RealExpr, b: RealExpr) -> Self {
        RealExpr::Prim(PrimOp::Mul, vec![a, b])
    }

    pub fn exp(a: RealExpr) -> Self {
        RealExpr::Prim(PrimOp::Exp, vec![a])
    }

    /// Literal value if the expression is a constant.
    pub fn as_const(&self) -> Option<f64> {
        match self {
            RealExpr::Const(c) => Some(*c),
            _ => None,
        }
    }
}

/// Boolean guards. Only the core forms are represented; the parser desugars
/// `>`, `<=`, `>=`, `||` and `false`.
#[derive(Clone, Debug, PartialEq)]
pub enum BoolExpr {
    True,
    Less(RealExpr, RealExpr),
    And(Box<BoolExpr>, Box<BoolExpr>),
    Not(Box<BoolExpr>),
}

#[allow(clippy::should_implement_trait)]
impl BoolExpr {
    pub fn less(a: RealExpr, b: RealExpr) -> Self {
        BoolExpr::Less(a, b)
    }

    pub fn and(a: BoolExpr, b: BoolExpr) -> Self {
        BoolExpr::And(Box::new(a), Box::new(b))
    }

    pub fn not(a: BoolExpr) -> Self {
        BoolExpr::Not(Box::new(a))
    }
}

/// A random-variable name: a base string followed by integer indices,
/// flattened at runtime to `base_i_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct NameExpr {
    pub base: String,
    pub indices: Vec<RealExpr>,
}

impl NameExpr {
    pub fn literal(base: &str) -> Self {
        NameExpr {
            base: base.to_string(),
            indices: Vec::new(),
        }
    }

    pub fn indexed(base: &str, indices: Vec<RealExpr>) -> Self {
        NameExpr {
            base: base.to_string(),
            indices,
        }
    }

    pub fn is_literal(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Reference measure a density is taken against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureTag {
    Lebesgue,
    Counting,
}

impl std::fmt::Display for MeasureTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MeasureTag::Lebesgue => write!(f, "lebesgue"),
            MeasureTag::Counting => write!(f, "counting"),
        }
    }
}

/// Shape of a distribution's support, independent of its arguments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SupportShape {
    RealLine,
    /// `[a, b]` given by the two arguments.
    ArgInterval,
    HalfLine,
    /// The single point given by the argument.
    ArgPoint,
    Binary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DistKind {
    Normal,
    Uniform,
    Exponential,
    Delta,
    Bernoulli,
}

/// Static facts about a distribution family.
#[derive(Clone, Copy, Debug)]
pub struct DistDescriptor {
    pub arity: usize,
    pub support: SupportShape,
    pub measure: MeasureTag,
}

impl DistKind {
    pub const ALL: [DistKind; 5] = [
        DistKind::Normal,
        DistKind::Uniform,
        DistKind::Exponential,
        DistKind::Delta,
        DistKind::Bernoulli,
    ];

    pub fn descriptor(self) -> DistDescriptor {
        use MeasureTag::*;
        use SupportShape::*;
        let (arity, support, measure) = match self {
            DistKind::Normal => (2, RealLine, Lebesgue),
            DistKind::Uniform => (2, ArgInterval, Lebesgue),
            DistKind::Exponential => (1, HalfLine, Lebesgue),
            DistKind::Delta => (1, ArgPoint, Counting),
            DistKind::Bernoulli => (1, Binary, Counting),
        };
        DistDescriptor {
            arity,
            support,
            measure,
        }
    }

    pub fn arity(self) -> usize {
        self.descriptor().arity
    }

    /// Name used in source text.
    pub fn name(self) -> &'static str {
        match self {
            DistKind::Normal => "Normal",
            DistKind::Uniform => "Uniform",
            DistKind::Exponential => "Exponential",
            DistKind::Delta => "Delta",
            DistKind::Bernoulli => "Bernoulli",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        DistKind::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    pub kind: DistKind,
    pub args: Vec<RealExpr>,
}

impl Distribution {
    pub fn normal(mu: RealExpr, sigma: RealExpr) -> Self {
        Distribution {
            kind: DistKind::Normal,
            args: vec![mu, sigma],
        }
    }

    pub fn uniform(a: RealExpr, b: RealExpr) -> Self {
        Distribution {
            kind: DistKind::Uniform,
            args: vec![a, b],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Command {
    Skip,
    Assign(String, RealExpr),
    Seq(Box<Command>, Box<Command>),
    If(BoolExpr, Box<Command>, Box<Command>),
    While(BoolExpr, Box<Command>),
    Sample(String, NameExpr, Distribution),
    Score(Distribution, RealExpr),
    /// `for v in lo..hi { body }`, inclusive-exclusive.
    For(String, RealExpr, RealExpr, Box<Command>),
}

impl Command {
    pub fn seq(a: Command, b: Command) -> Self {
        Command::Seq(Box::new(a), Box::new(b))
    }

    /// Right-nested sequence of the given commands; `Skip` when empty.
    pub fn seq_all(cmds: Vec<Command>) -> Self {
        let mut it = cmds.into_iter().rev();
        match it.next() {
            None => Command::Skip,
            Some(last) => it.fold(last, |acc, c| Command::seq(c, acc)),
        }
    }

    pub fn if_(b: BoolExpr, t: Command, e: Command) -> Self {
        Command::If(b, Box::new(t), Box::new(e))
    }

    pub fn while_(b: BoolExpr, body: Command) -> Self {
        Command::While(b, Box::new(body))
    }

    pub fn for_(v: &str, lo: RealExpr, hi: RealExpr, body: Command) -> Self {
        Command::For(v.to_string(), lo, hi, Box::new(body))
    }

    pub fn sample(x: &str, name: NameExpr, d: Distribution) -> Self {
        Command::Sample(x.to_string(), name, d)
    }

    pub fn assign(x: &str, e: RealExpr) -> Self {
        Command::Assign(x.to_string(), e)
    }

    /// Visits every command node in pre-order.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Command)) {
        f(self);
        match self {
            Command::Seq(a, b) | Command::If(_, a, b) => {
                a.walk(f);
                b.walk(f);
            }
            Command::While(_, body) | Command::For(_, _, _, body) => body.walk(f),
            _ => {}
        }
    }

    pub fn contains_score(&self) -> bool {
        let mut found = false;
        self.walk(&mut |c| found |= matches!(c, Command::Score(..)));
        found
    }

    pub fn contains_while(&self) -> bool {
        let mut found = false;
        self.walk(&mut |c| found |= matches!(c, Command::While(..)));
        found
    }

    pub fn contains_for(&self) -> bool {
        let mut found = false;
        self.walk(&mut |c| found |= matches!(c, Command::For(..)));
        found
    }

    /// True when some sample site uses an indexed name.
    pub fn has_indexed_names(&self) -> bool {
        let mut found = false;
        self.walk(&mut |c| {
            if let Command::Sample(_, n, _) = c {
                found |= !n.is_literal();
            }
        });
        found
    }

    /// All sample sites in program order.
    pub fn sample_sites(&self) -> Vec<(&String, &NameExpr, &Distribution)> {
        let mut out = Vec::new();
        self.walk(&mut |c| {
            if let Command::Sample(x, n, d) = c {
                out.push((x, n, d));
            }
        });
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Model,
    Guide,
}

/// A model or a guide with its declared parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Program {
    pub role: Role,
    pub params: Vec<String>,
    pub body: Command,
}

impl Program {
    pub fn model(body: Command) -> Self {
        Program {
            role: Role::Model,
            params: Vec::new(),
            body,
        }
    }

    pub fn guide(params: &[&str], body: Command) -> Self {
        Program {
            role: Role::Guide,
            params: params.iter().map(|s| s.to_string()).collect(),
            body,
        }
    }
}
