use serde_json::{json, Value};

use super::{DenseMatrix, Result, Scalar, StateVector};

fn number(x: f64) -> Value {
    // Integers print without a decimal point.
    if x.fract() == 0.0 && x.abs() < 9.0e15 {
        json!(x as i64)
    } else {
        json!(x)
    }
}

/// `[re, im]`.
pub fn scalar_json(z: Scalar) -> Value {
    json!([number(z.re), number(z.im)])
}

/// `{"dim": d, "entries": [[re, im], ...]}`, row-major.
pub fn matrix_dump_json(m: &DenseMatrix) -> Result<Value> {
    let entries: Vec<Value> = m.to_dense_entries()?.into_iter().map(scalar_json).collect();
    Ok(json!({ "dim": m.dim(), "entries": entries }))
}

pub fn vector_dump_json(v: &StateVector) -> Value {
    Value::Array(v.entries().iter().map(|&z| scalar_json(z)).collect())
}

fn format_real(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 9.0e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

fn format_scalar(z: Scalar) -> String {
    if z.im == 0.0 {
        format_real(z.re)
    } else if z.re == 0.0 {
        format!("{}i", format_real(z.im))
    } else if z.im < 0.0 {
        format!("{}-{}i", format_real(z.re), format_real(-z.im))
    } else {
        format!("{}+{}i", format_real(z.re), format_real(z.im))
    }
}

/// Whitespace-aligned grid, one matrix row per line.
pub fn matrix_grid(m: &DenseMatrix) -> Result<String> {
    let cells: Vec<Vec<String>> = m
        .rows()?
        .into_iter()
        .map(|r| r.into_iter().map(format_scalar).collect())
        .collect();
    let width = cells.iter().flatten().map(|s| s.chars().count()).max().unwrap_or(1);
    let mut out = String::new();
    for row in cells {
        let line: Vec<String> = row.iter().map(|s| format!("{s:>width$}")).collect();
        out.push_str(line.join(" ").trim_end());
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integers_have_no_decimal_point() {
        let m = DenseMatrix::from_real_diagonal(&[1., 0.]).unwrap();
        let s = matrix_dump_json(&m).unwrap().to_string();
        assert_eq!(s, r#"{"dim":2,"entries":[[1,0],[0,0],[0,0],[0,0]]}"#);
        let h = DenseMatrix::from_rows(&[
            vec![Scalar::new(0.5, 0.0), Scalar::new(0.0, -2.0)],
            vec![Scalar::new(0.0, 2.0), Scalar::new(1.0, 1.0)],
        ])
        .unwrap();
        assert_eq!(
            matrix_dump_json(&h).unwrap().to_string(),
            r#"{"dim":2,"entries":[[0.5,0],[0,-2],[0,2],[1,1]]}"#
        );
        assert_eq!(matrix_grid(&h).unwrap(), " 0.5  -2i\n  2i 1+1i\n");
    }
}
