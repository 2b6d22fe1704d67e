//! Predicate expressions used for application rules and functor bodies.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::entity::{AttributeValue, DataValue};
use crate::number::{Number, Unit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(&self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    fn is_equality(&self) -> bool {
        matches!(self, CmpOp::Eq | CmpOp::Ne)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Expr {
    Literal(DataValue),
    Attr(String),
    Compare {
        op: CmpOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    /// True when the entity declares the attribute.
    Has(String),
    /// True when the attribute is declared at a sort below (or equal to) the given one.
    SortAtMost {
        attr: String,
        sort: String,
    },
}

impl Expr {
    pub fn attr(name: &str) -> Expr {
        Expr::Attr(name.to_string())
    }

    pub fn num(v: Number, unit: Unit) -> Expr {
        Expr::Literal(DataValue::Number(v, unit))
    }

    pub fn cmp(op: CmpOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Compare {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn and(a: Expr, b: Expr) -> Expr {
        Expr::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Expr, b: Expr) -> Expr {
        Expr::Or(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Expr) -> Expr {
        Expr::Not(Box::new(a))
    }

    /// Attribute names whose value or sort the expression reads.
    /// `has(..)` tests presence and is not counted.
    pub fn referenced_attrs(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.walk(&mut |e| match e {
            Expr::Attr(a) => {
                out.insert(a.as_str());
            }
            Expr::SortAtMost { attr, .. } => {
                out.insert(attr.as_str());
            }
            _ => {}
        });
        out
    }

    /// Sorts named by `sort_at_most` predicates.
    pub fn referenced_sorts(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.walk(&mut |e| {
            if let Expr::SortAtMost { sort, .. } = e {
                out.insert(sort.as_str());
            }
        });
        out
    }

    fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Compare { lhs, rhs, .. } | Expr::And(lhs, rhs) | Expr::Or(lhs, rhs) => {
                lhs.walk(f);
                rhs.walk(f);
            }
            Expr::Not(inner) => inner.walk(f),
            _ => {}
        }
    }

    /// Binding strength used by the printer: or < and < not < compare < atom.
    pub(crate) fn precedence(&self) -> u8 {
        match self {
            Expr::Or(..) => 1,
            Expr::And(..) => 2,
            Expr::Not(..) => 3,
            Expr::Compare { .. } => 4,
            _ => 5,
        }
    }

    /// Evaluates the expression to a truth value.
    pub fn eval(&self, env: &dyn EvalEnv) -> Result<bool, String> {
        match self.value(env)? {
            Value::Bool(b) => Ok(b),
            other => Err(format!("expected a boolean, found {}", other.kind())),
        }
    }

    fn value(&self, env: &dyn EvalEnv) -> Result<Value, String> {
        Ok(match self {
            Expr::Literal(d) => Value::from_data(d),
            Expr::Attr(name) => match env.attribute(name) {
                Some((_, v)) => Value::from_attr(v),
                None => return Err(format!("attribute `{name}` is not defined")),
            },
            Expr::Compare { op, lhs, rhs } => Value::Bool(compare(*op, &lhs.value(env)?, &rhs.value(env)?)?),
            Expr::And(a, b) => Value::Bool(a.eval(env)? && b.eval(env)?),
            Expr::Or(a, b) => Value::Bool(a.eval(env)? || b.eval(env)?),
            Expr::Not(a) => Value::Bool(!a.eval(env)?),
            Expr::Has(name) => Value::Bool(env.attribute(name).is_some()),
            Expr::SortAtMost { attr, sort } => Value::Bool(match env.attribute(attr) {
                Some((declared, _)) => env.sort_leq(declared, sort),
                None => false,
            }),
        })
    }
}

/// What an expression can see while being evaluated.
pub trait EvalEnv {
    /// Declared sort and value of an attribute.
    fn attribute(&self, name: &str) -> Option<(&str, &AttributeValue)>;
    fn sort_leq(&self, t: &str, t1: &str) -> bool;
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Num(Number, Unit),
    Text(String),
    Bool(bool),
    Ref(String),
    List(Vec<Value>),
}

impl Value {
    fn from_data(d: &DataValue) -> Value {
        match d {
            DataValue::Number(n, u) => Value::Num(*n, *u),
            DataValue::Text(t) => Value::Text(t.clone()),
            DataValue::Bool(b) => Value::Bool(*b),
        }
    }

    fn from_attr(v: &AttributeValue) -> Value {
        match v {
            AttributeValue::Data(d) => Value::from_data(d),
            AttributeValue::Ref(r) | AttributeValue::External(r) => Value::Ref(r.clone()),
            AttributeValue::List(items) => Value::List(items.iter().map(Value::from_attr).collect()),
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Value::Num(..) => "number",
            Value::Text(_) => "text",
            Value::Bool(_) => "boolean",
            Value::Ref(_) => "entity reference",
            Value::List(_) => "list",
        }
    }
}

fn compare(op: CmpOp, a: &Value, b: &Value) -> Result<bool, String> {
    let ord = match (a, b) {
        (Value::Num(x, ux), Value::Num(y, uy)) => {
            if !ux.compatible(*uy) {
                return Err(format!(
                    "cannot compare quantities in {} and {}",
                    ux.symbol().unwrap_or("none"),
                    uy.symbol().unwrap_or("none")
                ));
            }
            x.cmp(y)
        }
        _ if std::mem::discriminant(a) != std::mem::discriminant(b) => {
            return Err(format!("cannot compare {} with {}", a.kind(), b.kind()))
        }
        _ if op.is_equality() => {
            let eq = a == b;
            return Ok(if op == CmpOp::Eq { eq } else { !eq });
        }
        _ => return Err(format!("{} values are not ordered", a.kind())),
    };
    use std::cmp::Ordering::*;
    Ok(match op {
        CmpOp::Eq => ord == Equal,
        CmpOp::Ne => ord != Equal,
        CmpOp::Lt => ord == Less,
        CmpOp::Le => ord != Greater,
        CmpOp::Gt => ord == Greater,
        CmpOp::Ge => ord != Less,
    })
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Left operands may share the parent's precedence (left associative),
        // right operands must bind tighter.
        fn child(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
            if e.precedence() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Expr::Literal(d) => write!(f, "{d}"),
            Expr::Attr(a) => f.write_str(a),
            Expr::Compare { op, lhs, rhs } => {
                child(f, lhs, 5)?;
                write!(f, " {} ", op.symbol())?;
                child(f, rhs, 5)
            }
            Expr::And(a, b) => {
                child(f, a, 2)?;
                f.write_str(" and ")?;
                child(f, b, 3)
            }
            Expr::Or(a, b) => {
                child(f, a, 1)?;
                f.write_str(" or ")?;
                child(f, b, 2)
            }
            Expr::Not(a) => {
                f.write_str("not ")?;
                child(f, a, 3)
            }
            Expr::Has(a) => write!(f, "has({a})"),
            Expr::SortAtMost { attr, sort } => write!(f, "sort_at_most({attr}, {sort})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    struct Env {
        attrs: BTreeMap<String, (String, AttributeValue)>,
    }

    impl EvalEnv for Env {
        fn attribute(&self, name: &str) -> Option<(&str, &AttributeValue)> {
            self.attrs.get(name).map(|(s, v)| (s.as_str(), v))
        }
        fn sort_leq(&self, t: &str, t1: &str) -> bool {
            t == t1 || (t == "StraightTrack" && t1 == "RouteElement")
        }
    }

    fn env() -> Env {
        let mut attrs = BTreeMap::new();
        attrs.insert(
            "speed".to_string(),
            (
                "Speed".to_string(),
                AttributeValue::Data(DataValue::Number(Number::from_int(1), Unit::MeterPerSecond)),
            ),
        );
        attrs.insert(
            "name".to_string(),
            ("Label".to_string(), AttributeValue::Data(DataValue::Text("agv".into()))),
        );
        attrs.insert(
            "track1".to_string(),
            ("StraightTrack".to_string(), AttributeValue::Ref("T1".into())),
        );
        Env { attrs }
    }

    fn two() -> Expr {
        Expr::num(Number::from_int(2), Unit::None)
    }

    #[test]
    fn comparisons() {
        let e = env();
        assert_eq!(Expr::cmp(CmpOp::Le, Expr::attr("speed"), two()).eval(&e), Ok(true));
        assert_eq!(Expr::cmp(CmpOp::Gt, Expr::attr("speed"), two()).eval(&e), Ok(false));
        let metres = Expr::num(Number::from_int(2), Unit::Meter);
        assert!(Expr::cmp(CmpOp::Le, Expr::attr("speed"), metres).eval(&e).is_err());
        assert!(Expr::cmp(CmpOp::Lt, Expr::attr("name"), two()).eval(&e).is_err());
        let agv = Expr::Literal(DataValue::Text("agv".into()));
        assert_eq!(Expr::cmp(CmpOp::Eq, Expr::attr("name"), agv.clone()).eval(&e), Ok(true));
        assert!(Expr::cmp(CmpOp::Lt, Expr::attr("name"), agv).eval(&e).is_err());
    }

    #[test]
    fn presence_and_sorts() {
        let e = env();
        assert_eq!(Expr::Has("speed".into()).eval(&e), Ok(true));
        assert_eq!(Expr::Has("home".into()).eval(&e), Ok(false));
        let sam = Expr::SortAtMost {
            attr: "track1".into(),
            sort: "RouteElement".into(),
        };
        assert_eq!(sam.eval(&e), Ok(true));
        assert!(Expr::attr("missing").eval(&e).is_err());
        assert!(Expr::attr("speed").eval(&e).is_err());
    }

    #[test]
    fn printing_keeps_tree_shape() {
        let a = || Expr::Has("a".into());
        let b = || Expr::Has("b".into());
        let c = || Expr::Has("c".into());
        assert_eq!(
            Expr::and(a(), Expr::and(b(), c())).to_string(),
            "has(a) and (has(b) and has(c))"
        );
        assert_eq!(
            Expr::and(Expr::and(a(), b()), c()).to_string(),
            "has(a) and has(b) and has(c)"
        );
        assert_eq!(Expr::not(Expr::or(a(), b())).to_string(), "not (has(a) or has(b))");
        assert_eq!(
            Expr::or(a(), Expr::and(b(), c())).to_string(),
            "has(a) or has(b) and has(c)"
        );
        assert_eq!(
            Expr::cmp(CmpOp::Eq, Expr::and(a(), b()), Expr::Literal(DataValue::Bool(true))).to_string(),
            "(has(a) and has(b)) == true"
        );
    }
}
