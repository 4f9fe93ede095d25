use prismlab::io::{
    connection_from_json, connection_to_json, parse_session, stratification_from_json,
    stratification_to_json, to_canonical_string,
};
use prismlab::miclog::{bk_twist, tensor};
use prismlab::numfield::a_log;
use prismlab::stratconn::from_connection;
use prismlab::{Error, FieldSpec, LogConnection};

#[test]
fn serialized_objects_reload_identically() {
    let f = FieldSpec::from_ints(2, &[-2, 0, 1]).unwrap();
    let a = bk_twist(&LogConnection::trivial(&f, "u-pi", 1, 3), -2);
    let b = bk_twist(&LogConnection::trivial(&f, "u-pi", 2, 3), 1);
    let conn = tensor(&a, &b).unwrap();

    let text = to_canonical_string(&connection_to_json(&conn));
    let back = connection_from_json(&serde_json::from_str(&text).unwrap(), None, "$").unwrap();
    assert_eq!(back, conn);
    assert_eq!(to_canonical_string(&connection_to_json(&back)), text);

    let strat = from_connection(&conn, &a_log(&f), 4);
    let text = to_canonical_string(&stratification_to_json(&strat));
    let back = stratification_from_json(&serde_json::from_str(&text).unwrap(), None, "$").unwrap();
    assert_eq!(back, strat);
}

#[test]
fn session_objects_must_share_the_field() {
    let f = FieldSpec::from_ints(3, &[-3, 1]).unwrap();
    let g = FieldSpec::from_ints(3, &[-3, 0, 1]).unwrap();
    let mut c = connection_to_json(&LogConnection::trivial(&g, "u-pi", 1, 1));
    c["name"] = "x".into();
    let session = serde_json::json!({
        "field": prismlab::io::field_to_json(&f),
        "connections": [c],
    });
    assert!(matches!(parse_session(&session.to_string()), Err(Error::RingMismatch(_))));
}
