use proptest::prelude::*;
use sessmon_core::model::{Label, Message, Value};
use sessmon_proxy::{builtin_predicates, ConnectionManager, LineCodec};

fn value() -> impl Strategy<Value = Value> {
    let leaf = prop_oneof![
        any::<i64>().prop_map(Value::Int),
        any::<bool>().prop_map(Value::Bool),
        any::<String>().prop_map(Value::Str),
        "[\"\\\\\n\ta ]{0,6}".prop_map(Value::Str),
    ];
    leaf.prop_recursive(3, 12, 3, |inner| prop::collection::vec(inner, 1..4).prop_map(Value::Tuple))
}

fn message() -> impl Strategy<Value = Message> {
    ("[A-Za-z][A-Za-z0-9_]{0,7}", prop::collection::vec(value(), 0..4))
        .prop_map(|(l, payload)| Message::new(Label::new(l), payload))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn decode_inverts_encode(m in message()) {
        let frame = LineCodec.encode(&m);
        prop_assert_eq!(frame.iter().filter(|&&b| b == b'\n').count(), 1);
        prop_assert_eq!(LineCodec.decode(&frame).unwrap(), m);
    }

    /// Whatever decodes is canonical: re-encoding gives back the same bytes.
    #[test]
    fn decoded_frames_are_canonical(s in "[A-C]{1,2}\\((-|0|1|9|,|\"|\\\\|n|t|\\(|\\)| |true|false){0,10}\\)\n") {
        if let Ok(m) = LineCodec.decode(s.as_bytes()) {
            prop_assert_eq!(LineCodec.encode(&m), s.into_bytes());
        }
    }

    #[test]
    fn username_check_matches_its_pattern(s in "[A-Za-z0-9 _é.-]{0,6}") {
        let re = regex::Regex::new("^[A-Za-z0-9]+$").unwrap();
        let got = builtin_predicates().call(&"validUname".into(), &[Value::str(s.clone())]).unwrap();
        prop_assert_eq!(got, re.is_match(&s));
    }
}
