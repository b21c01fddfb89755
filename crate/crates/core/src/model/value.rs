use std::fmt;

/// Payload base types. Tuples carry at least one element.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BaseType {
    Int,
    Str,
    Bool,
    Tuple(Vec<BaseType>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Int(i64),
    Str(String),
    Bool(bool),
    Tuple(Vec<Value>),
}

/// Structural type membership; tuples are checked element-wise.
pub fn has_type(value: &Value, ty: &BaseType) -> bool {
    match (value, ty) {
        (Value::Int(_), BaseType::Int) | (Value::Str(_), BaseType::Str) | (Value::Bool(_), BaseType::Bool) => true,
        (Value::Tuple(items), BaseType::Tuple(tys)) => {
            !tys.is_empty() && items.len() == tys.len() && items.iter().zip(tys).all(|(v, t)| has_type(v, t))
        }
        _ => false,
    }
}

impl BaseType {
    pub fn is_well_formed(&self) -> bool {
        match self {
            BaseType::Tuple(items) => !items.is_empty() && items.iter().all(BaseType::is_well_formed),
            _ => true,
        }
    }
}

impl Value {
    pub fn str(s: impl Into<String>) -> Self {
        Value::Str(s.into())
    }

    /// The unique base type inhabited by this value, if it has one (empty tuples have none).
    pub fn type_of(&self) -> Option<BaseType> {
        match self {
            Value::Int(_) => Some(BaseType::Int),
            Value::Str(_) => Some(BaseType::Str),
            Value::Bool(_) => Some(BaseType::Bool),
            Value::Tuple(items) if items.is_empty() => None,
            Value::Tuple(items) => items.iter().map(Value::type_of).collect::<Option<Vec<_>>>().map(BaseType::Tuple),
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }
}

impl fmt::Display for BaseType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseType::Int => f.write_str("Int"),
            BaseType::Str => f.write_str("Str"),
            BaseType::Bool => f.write_str("Bool"),
            BaseType::Tuple(items) => {
                f.write_str("(")?;
                for (i, t) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{t}")?;
                }
                // `(Int,)` keeps a one-element tuple distinct from a parenthesized type.
                f.write_str(if items.len() == 1 { ",)" } else { ")" })
            }
        }
    }
}

pub(crate) fn write_quoted(f: &mut impl fmt::Write, s: &str) -> fmt::Result {
    f.write_char('"')?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            c => f.write_char(c)?,
        }
    }
    f.write_char('"')
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Str(s) => write_quoted(f, s),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Tuple(items) => {
                f.write_str("(")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str(if items.len() == 1 { ",)" } else { ")" })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership() {
        assert!(has_type(&Value::str("Bob"), &BaseType::Str));
        assert!(!has_type(&Value::Int(321), &BaseType::Str));
        let pair = Value::Tuple(vec![Value::str("Bob"), Value::str("pwd")]);
        assert!(has_type(&pair, &BaseType::Tuple(vec![BaseType::Str, BaseType::Str])));
        assert!(!has_type(&pair, &BaseType::Tuple(vec![BaseType::Str, BaseType::Int])));
        assert!(!has_type(&pair, &BaseType::Tuple(vec![BaseType::Str])));
        assert!(!has_type(&Value::Tuple(vec![]), &BaseType::Tuple(vec![])));
    }

    #[test]
    fn type_of_agrees_with_membership() {
        let v = Value::Tuple(vec![Value::Int(1), Value::Tuple(vec![Value::Bool(true), Value::str("x")])]);
        let t = v.type_of().unwrap();
        assert!(has_type(&v, &t));
        assert_eq!(t.to_string(), "(Int,(Bool,Str))");
    }

    #[test]
    fn display_escapes() {
        assert_eq!(Value::str("a\"b\\c\nd\te").to_string(), r#""a\"b\\c\nd\te""#);
    }
}
