use fracosc::report::*;

#[test]
fn seventeen_digits_round_trip() {
    for x in [0.1, 1.0 / 3.0, std::f64::consts::PI * 1e-300, 5.0329405062535174879, -2.5e17] {
        let s = fmt17(x);
        assert_eq!(parse_f64(&s).unwrap().to_bits(), x.to_bits(), "{s}");
        let mant = s.split('e').next().unwrap().replace(['-', '.'], "");
        assert_eq!(mant.len(), 17);
    }
    assert_eq!(parse_f64(&fmt17(f64::INFINITY)).unwrap(), f64::INFINITY);
}

#[test]
fn table_round_trip() {
    let mut t = Table::new(&["a", "b"]);
    t.push(vec![fmt17(1.5), String::new()]);
    t.push(vec![fmt17(-0.25), fmt17(2.0)]);
    let s = t.to_csv_string().unwrap();
    let back = Table::read_csv(s.as_bytes()).unwrap();
    assert_eq!(back, t);
    assert_eq!(back.column("b").unwrap(), vec![None, Some(2.0)]);
    assert!(back.column_f64("b").is_err());
    assert!(back.column("c").is_err());
}
