use std::collections::BTreeSet;

use crate::model::{fresh_name, BaseType, Label, Message, MonitorBranch, PredicateRegistry, Value};

/// Finite sample sets used to instantiate environment inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueDomain {
    pub ints: Vec<i64>,
    pub strs: Vec<String>,
    pub bools: Vec<bool>,
    /// Also inject off-type payloads, wrong arities and an unknown label.
    pub adversarial: bool,
}

impl Default for ValueDomain {
    fn default() -> Self {
        Self { ints: vec![0, 1], strs: vec!["a".into(), "b".into()], bools: vec![true, false], adversarial: false }
    }
}

impl ValueDomain {
    pub fn extended() -> Self {
        Self { adversarial: true, ..Self::default() }
    }

    pub fn values_of(&self, ty: &BaseType) -> Vec<Value> {
        match ty {
            BaseType::Int => self.ints.iter().copied().map(Value::Int).collect(),
            BaseType::Str => self.strs.iter().cloned().map(Value::Str).collect(),
            BaseType::Bool => self.bools.iter().copied().map(Value::Bool).collect(),
            BaseType::Tuple(items) => {
                product(&items.iter().map(|t| self.values_of(t)).collect::<Vec<_>>()).into_iter().map(Value::Tuple).collect()
            }
        }
    }

    /// Every sample value of every base type; used for untyped binders.
    pub fn any_values(&self) -> Vec<Value> {
        let mut out = self.values_of(&BaseType::Int);
        out.extend(self.values_of(&BaseType::Str));
        out.extend(self.values_of(&BaseType::Bool));
        out
    }

    /// A value that is not of type `ty`.
    pub fn off_type(ty: &BaseType) -> Value {
        match ty {
            BaseType::Int => Value::str("227"),
            _ => Value::Int(227),
        }
    }

    fn values_for(&self, ty: Option<&BaseType>) -> Vec<Value> {
        match ty {
            Some(t) => self.values_of(t),
            None => self.any_values(),
        }
    }

    /// Messages the environment may send to a monitor waiting on `branches`.
    pub fn external_inputs(&self, branches: &[MonitorBranch]) -> Vec<Message> {
        let mut out = Vec::new();
        for b in branches {
            let columns: Vec<Vec<Value>> = b.params.iter().map(|p| self.values_for(p.ty.as_ref())).collect();
            out.extend(product(&columns).into_iter().map(|payload| Message::new(b.label.clone(), payload)));
            if self.adversarial {
                let base: Vec<Value> = columns.iter().map(|c| c.first().cloned().unwrap_or(Value::Int(0))).collect();
                for (i, p) in b.params.iter().enumerate() {
                    let mut payload = base.clone();
                    payload[i] = Self::off_type(p.ty.as_ref().unwrap_or(&BaseType::Int));
                    out.push(Message::new(b.label.clone(), payload));
                }
                let mut longer = base;
                longer.push(Value::Int(0));
                out.push(Message::new(b.label.clone(), longer));
            }
        }
        if self.adversarial {
            out.push(Message::new(alien_label(branches.iter().map(|b| &b.label)), vec![Value::Int(227)]));
        }
        out
    }
}

/// A label distinct from every label in `taken`.
pub fn alien_label<'a>(taken: impl IntoIterator<Item = &'a Label>) -> Label {
    let taken: BTreeSet<String> = taken.into_iter().map(|l| l.to_string()).collect();
    Label::new(fresh_name("Res", &taken))
}

pub(crate) fn product(columns: &[Vec<Value>]) -> Vec<Vec<Value>> {
    columns.iter().fold(vec![Vec::new()], |acc, col| {
        acc.iter()
            .flat_map(|prefix| {
                col.iter().map(move |v| {
                    let mut row = prefix.clone();
                    row.push(v.clone());
                    row
                })
            })
            .collect()
    })
}

/// Value domains plus the predicates that assertions may call.
#[derive(Debug, Clone, Default)]
pub struct ExecContext {
    pub domains: ValueDomain,
    pub predicates: PredicateRegistry,
}

impl ExecContext {
    pub fn new(domains: ValueDomain, predicates: PredicateRegistry) -> Self {
        Self { domains, predicates }
    }

    pub fn with_domains(domains: ValueDomain) -> Self {
        Self { domains, predicates: PredicateRegistry::new() }
    }
}
