//! Textual objective identifiers such as `oscillatory1d{0.1,2}`.

use std::sync::Arc;

use super::{
    make_diagonal_quadratic, make_ellipse_quartic, make_oscillatory_1d, make_product_structure,
    make_squared_distance, ObjectiveError, ObjectiveSpec, PlanarCurve, SineScale,
};

fn split(id: &str) -> Result<(&str, Vec<f64>), ObjectiveError> {
    let id = id.trim();
    let Some(open) = id.find('{') else {
        return Ok((id, Vec::new()));
    };
    let name = &id[..open];
    let inner = id[open + 1..]
        .strip_suffix('}')
        .ok_or_else(|| ObjectiveError::UnknownId(id.to_string()))?;
    let args = inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| ObjectiveError::invalid(name, format!("`{s}` is not a number")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((name, args))
}

fn arity(name: &str, args: &[f64], allowed: &[usize]) -> Result<(), ObjectiveError> {
    if allowed.contains(&args.len()) {
        Ok(())
    } else {
        Err(ObjectiveError::invalid(
            name,
            format!("expected {allowed:?} arguments, got {}", args.len()),
        ))
    }
}

fn as_count(name: &str, v: f64) -> Result<usize, ObjectiveError> {
    if v >= 0.0 && v.fract() == 0.0 && v < 1e6 {
        Ok(v as usize)
    } else {
        Err(ObjectiveError::invalid(name, format!("{v} is not a count")))
    }
}

/// Build an objective from its identifier.
///
/// Recognised forms: `oscillatory1d{eps,R}`, `product{d,k,quad_mu[,offset,amplitude]}`,
/// `sqdist-circle{r,mu}`, `sqdist-ellipse{a,b,mu}`, `ellipse-quartic`, `quad{l1,l2,...}`.
pub fn parse_objective_id(id: &str) -> Result<ObjectiveSpec, ObjectiveError> {
    let (name, a) = split(id)?;
    let spec = match name {
        "oscillatory1d" => {
            arity(name, &a, &[2])?;
            make_oscillatory_1d(a[0], a[1])?
        }
        "product" => {
            arity(name, &a, &[3, 5])?;
            let d = as_count("d", a[0])?;
            let k = as_count("k", a[1])?;
            let (offset, amplitude) = if a.len() == 5 {
                (a[3], a[4])
            } else {
                (2.0, 1.0)
            };
            make_product_structure(
                d,
                Arc::new(SineScale {
                    k,
                    offset,
                    amplitude,
                }),
                a[2],
            )?
        }
        "sqdist-circle" => {
            arity(name, &a, &[2])?;
            make_squared_distance(PlanarCurve::Circle { radius: a[0] }, a[1])?
        }
        "sqdist-ellipse" => {
            arity(name, &a, &[3])?;
            make_squared_distance(PlanarCurve::Ellipse { a: a[0], b: a[1] }, a[2])?
        }
        "ellipse-quartic" => {
            arity(name, &a, &[0])?;
            make_ellipse_quartic()
        }
        "quad" => {
            if a.is_empty() {
                return Err(ObjectiveError::invalid(
                    name,
                    "needs at least one eigenvalue",
                ));
            }
            make_diagonal_quadratic(&a)?
        }
        _ => return Err(ObjectiveError::UnknownId(id.to_string())),
    };
    Ok(spec.with_id(id.trim()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_each_family() {
        for id in [
            "oscillatory1d{0.1,2}",
            "product{3,1,1}",
            "product{2,1,1,3,0.5}",
            "sqdist-circle{1,1}",
            "sqdist-ellipse{2,1,1}",
            "ellipse-quartic",
            "quad{0,0.01,1}",
        ] {
            let spec = parse_objective_id(id).unwrap();
            assert_eq!(spec.id(), id);
        }
    }

    #[test]
    fn rejects_malformed_ids() {
        assert!(matches!(
            parse_objective_id("banana"),
            Err(ObjectiveError::UnknownId(_))
        ));
        assert!(parse_objective_id("oscillatory1d{0.1}").is_err());
        assert!(parse_objective_id("oscillatory1d{0.1,x}").is_err());
        assert!(parse_objective_id("quad{1,2").is_err());
        assert!(parse_objective_id("product{2.5,1,1}").is_err());
    }
}
