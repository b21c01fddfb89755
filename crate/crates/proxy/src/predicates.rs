//! Demo predicates for assertions in protocol types. They stand in for
//! real checks (a user directory, a token service) and are deliberately
//! simple.

use sessmon_core::model::{PredicateRegistry, Value};

fn strs<const N: usize>(name: &str, args: &[Value]) -> Result<[String; N], String> {
    let strings: Vec<String> = args
        .iter()
        .map(|v| match v {
            Value::Str(s) => Ok(s.clone()),
            other => Err(format!("{name}: expected a string, got {other}")),
        })
        .collect::<Result<_, _>>()?;
    strings.try_into().map_err(|v: Vec<String>| format!("{name}: expected {N} arguments, got {}", v.len()))
}

/// `validUname(s)`: non-empty and ASCII alphanumeric.
/// `validTok(t, u)`: `t` is `"tok-"` followed by `u`.
/// `nonEmpty(s)` and `positive(i)` do what they say.
pub fn builtin_predicates() -> PredicateRegistry {
    PredicateRegistry::new()
        .with("validUname", |args| {
            let [s] = strs("validUname", args)?;
            Ok(!s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric()))
        })
        .with("validTok", |args| {
            let [t, u] = strs("validTok", args)?;
            Ok(t.strip_prefix("tok-") == Some(u.as_str()))
        })
        .with("nonEmpty", |args| {
            let [s] = strs("nonEmpty", args)?;
            Ok(!s.is_empty())
        })
        .with("positive", |args| match args {
            [Value::Int(i)] => Ok(*i > 0),
            _ => Err(format!("positive: expected one integer, got {} values", args.len())),
        })
}

/// Registries selectable by name from the command line.
pub fn registry_by_name(name: &str) -> Option<PredicateRegistry> {
    match name {
        "builtin" => Some(builtin_predicates()),
        "none" => Some(PredicateRegistry::new()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sessmon_core::model::Name;

    fn call(name: &str, args: &[Value]) -> Result<bool, String> {
        builtin_predicates().call(&Name::new(name), args).map_err(|e| e.to_string())
    }

    #[test]
    fn demo_semantics() {
        assert_eq!(call("validUname", &[Value::str("Bob")]), Ok(true));
        assert_eq!(call("validUname", &[Value::str("")]), Ok(false));
        assert_eq!(call("validUname", &[Value::str("B b")]), Ok(false));
        assert_eq!(call("validTok", &[Value::str("tok-Bob"), Value::str("Bob")]), Ok(true));
        assert_eq!(call("validTok", &[Value::str("tok-Eve"), Value::str("Bob")]), Ok(false));
        assert_eq!(call("nonEmpty", &[Value::str("x")]), Ok(true));
        assert_eq!(call("positive", &[Value::Int(0)]), Ok(false));
    }

    #[test]
    fn ill_typed_calls_are_errors() {
        assert!(call("validUname", &[Value::Int(1)]).is_err());
        assert!(call("validTok", &[Value::str("tok-a")]).is_err());
        assert!(call("positive", &[Value::str("1")]).is_err());
    }
}
