/// 17 significant digits, which round-trips every `f64`. Spelled so TOML reads it back.
pub fn f17(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub fn f17_list(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|&x| f17(x)).collect();
    format!("[{}]", parts.join(", "))
}
